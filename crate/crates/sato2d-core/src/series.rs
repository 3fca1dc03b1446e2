//! Truncated power series in `x1, x2` over the session field.
//!
//! A series is known exactly modulo `(x1, x2)^prec`; the `exact` flag marks
//! polynomials whose stored terms are the whole truth (no unknown tail).
//! Keeping the two apart is what lets `ord_m` answer "infinite" only for a
//! true zero and keeps growth-condition verdicts sound.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::field::{rat_to_string, KElem, KField, Rat};

/// Differentiation / construction variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X1,
    X2,
}

/// M-adic order of a truncated series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrdM {
    /// Least total degree carrying a nonzero coefficient.
    Finite(u32),
    /// Exactly the zero series.
    Infinite,
    /// Zero as far as stored, but only certified up to the given precision.
    AtLeast(u32),
}

impl OrdM {
    /// Certified lower bound usable in growth-condition checks.
    pub fn lower_bound(&self) -> u32 {
        match *self {
            OrdM::Finite(n) => n,
            OrdM::Infinite => u32::MAX,
            OrdM::AtLeast(n) => n,
        }
    }
}

/// Sparse truncated series; no zero coefficients are stored and every stored
/// exponent pair `(i, j)` satisfies `i + j < prec`.
///
/// `x1_free`/`x2_free` certify that the series contains no power of that
/// variable in any degree, including the unknown tail; derivatives in a
/// certified-absent variable are then exactly zero, which keeps deep
/// Leibniz chains from eating precision they do not need.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XSeries {
    field: KField,
    coeffs: BTreeMap<(u32, u32), KElem>,
    prec: u32,
    exact: bool,
    x1_free: bool,
    x2_free: bool,
}

impl XSeries {
    pub fn zero(field: &KField, prec: u32) -> Self {
        XSeries {
            field: field.clone(),
            coeffs: BTreeMap::new(),
            prec,
            exact: false,
            x1_free: false,
            x2_free: false,
        }
    }

    /// The zero polynomial, certified identically zero.
    pub fn zero_exact(field: &KField, prec: u32) -> Self {
        XSeries {
            exact: true,
            x1_free: true,
            x2_free: true,
            ..Self::zero(field, prec)
        }
    }

    pub fn constant(field: &KField, c: KElem, prec: u32) -> Self {
        let mut s = Self::zero_exact(field, prec);
        if !c.is_zero() && prec > 0 {
            s.coeffs.insert((0, 0), c);
        }
        s
    }

    pub fn one(field: &KField, prec: u32) -> Self {
        Self::constant(field, field.one(), prec)
    }

    /// Monomial `c * x1^i * x2^j`, exact.
    pub fn monomial(field: &KField, c: KElem, i: u32, j: u32, prec: u32) -> Self {
        let mut s = Self::zero_exact(field, prec);
        if !c.is_zero() {
            s.x1_free = i == 0;
            s.x2_free = j == 0;
            if i + j < prec {
                s.coeffs.insert((i, j), c);
            } else {
                s.exact = false;
            }
        }
        s
    }

    /// Exact polynomial from explicit terms; terms at or above `prec` are
    /// dropped and exactness is surrendered.
    pub fn from_terms<I>(field: &KField, terms: I, prec: u32) -> Self
    where
        I: IntoIterator<Item = ((u32, u32), KElem)>,
    {
        let mut s = Self::zero_exact(field, prec);
        for ((i, j), c) in terms {
            if c.is_zero() {
                continue;
            }
            s.x1_free &= i == 0;
            s.x2_free &= j == 0;
            if i + j >= prec {
                s.exact = false;
                continue;
            }
            let entry = match s.coeffs.remove(&(i, j)) {
                Some(old) => &old + &c,
                None => c,
            };
            if !entry.is_zero() {
                s.coeffs.insert((i, j), entry);
            }
        }
        s
    }

    pub fn is_x1_free(&self) -> bool {
        self.x1_free
    }

    pub fn is_x2_free(&self) -> bool {
        self.x2_free
    }

    pub fn field(&self) -> &KField {
        &self.field
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    /// Effective precision: `u32::MAX` for exact polynomials.
    pub fn eff_prec(&self) -> u32 {
        if self.exact {
            u32::MAX
        } else {
            self.prec
        }
    }

    pub fn is_zero_stored(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, i: u32, j: u32) -> KElem {
        self.coeffs
            .get(&(i, j))
            .cloned()
            .unwrap_or_else(|| self.field.zero())
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(u32, u32), &KElem)> {
        self.coeffs.iter()
    }

    pub fn constant_term(&self) -> KElem {
        self.coeff(0, 0)
    }

    /// Least total degree with a nonzero coefficient (see `OrdM`).
    pub fn ord_m(&self) -> OrdM {
        match self.coeffs.keys().map(|&(i, j)| i + j).min() {
            Some(n) => OrdM::Finite(n),
            None if self.exact => OrdM::Infinite,
            None => OrdM::AtLeast(self.prec),
        }
    }

    /// Restrict to a lower precision, dropping terms that fall outside.
    pub fn truncate(&self, prec: u32) -> XSeries {
        if prec >= self.prec && !self.exact {
            return self.clone();
        }
        let mut out = XSeries::zero(&self.field, prec.min(self.prec));
        out.exact = self.exact;
        out.x1_free = self.x1_free;
        out.x2_free = self.x2_free;
        for (&(i, j), c) in &self.coeffs {
            if i + j < out.prec {
                out.coeffs.insert((i, j), c.clone());
            } else {
                out.exact = false;
            }
        }
        out
    }

    fn binop(&self, other: &XSeries, negate: bool) -> XSeries {
        assert!(
            self.field == *other.field(),
            "series from different sessions"
        );
        let prec = self.eff_prec().min(other.eff_prec());
        let stored = self.prec.max(other.prec).min(prec);
        let mut out = XSeries::zero(&self.field, stored);
        out.exact = self.exact && other.exact;
        out.x1_free = self.x1_free && other.x1_free;
        out.x2_free = self.x2_free && other.x2_free;
        for (&k, c) in &self.coeffs {
            if k.0 + k.1 < stored {
                out.coeffs.insert(k, c.clone());
            }
        }
        for (&k, c) in &other.coeffs {
            if k.0 + k.1 >= stored {
                continue;
            }
            let v = match out.coeffs.remove(&k) {
                Some(old) => {
                    if negate {
                        &old - c
                    } else {
                        &old + c
                    }
                }
                None => {
                    if negate {
                        c.neg()
                    } else {
                        c.clone()
                    }
                }
            };
            if !v.is_zero() {
                out.coeffs.insert(k, v);
            }
        }
        out
    }

    pub fn add(&self, other: &XSeries) -> XSeries {
        self.binop(other, false)
    }

    pub fn sub(&self, other: &XSeries) -> XSeries {
        self.binop(other, true)
    }

    pub fn neg(&self) -> XSeries {
        let mut out = self.clone();
        for c in out.coeffs.values_mut() {
            *c = c.neg();
        }
        out
    }

    pub fn scale(&self, c: &KElem) -> XSeries {
        if c.is_zero() {
            let mut out = XSeries::zero(&self.field, self.prec);
            out.exact = self.exact;
            out.x1_free = true;
            out.x2_free = true;
            return out;
        }
        let mut out = self.clone();
        for v in out.coeffs.values_mut() {
            *v = &*v * c;
        }
        out
    }

    pub fn mul(&self, other: &XSeries) -> XSeries {
        assert!(
            self.field == *other.field(),
            "series from different sessions"
        );
        let prec = self.eff_prec().min(other.eff_prec());
        let stored = self.prec.max(other.prec).min(prec);
        let mut out = XSeries::zero(&self.field, stored);
        out.exact = self.exact && other.exact;
        out.x1_free = self.x1_free && other.x1_free;
        out.x2_free = self.x2_free && other.x2_free;
        for (&(i1, j1), c1) in &self.coeffs {
            for (&(i2, j2), c2) in &other.coeffs {
                let (i, j) = (i1 + i2, j1 + j2);
                if i + j >= stored {
                    out.exact = false;
                    continue;
                }
                let p = c1 * c2;
                let v = match out.coeffs.remove(&(i, j)) {
                    Some(old) => &old + &p,
                    None => p,
                };
                if !v.is_zero() {
                    out.coeffs.insert((i, j), v);
                }
            }
        }
        out
    }

    /// Term-by-term derivative; costs one unit of precision on inexact
    /// input, except along a certified-absent variable where the result is
    /// exactly zero.
    pub fn diff(&self, var: Var) -> Result<XSeries> {
        match var {
            Var::X1 if self.x1_free => return Ok(Self::zero_exact(&self.field, self.prec)),
            Var::X2 if self.x2_free => return Ok(Self::zero_exact(&self.field, self.prec)),
            _ => {}
        }
        if !self.exact && self.prec == 0 {
            return Err(Error::InsufficientPrecision(
                "derivative of a precision-0 series".into(),
            ));
        }
        let prec = if self.exact {
            self.prec
        } else {
            self.prec - 1
        };
        let mut out = XSeries::zero(&self.field, prec);
        out.exact = self.exact;
        out.x1_free = self.x1_free;
        out.x2_free = self.x2_free;
        for (&(i, j), c) in &self.coeffs {
            let (k, n) = match var {
                Var::X1 => {
                    if i == 0 {
                        continue;
                    }
                    ((i - 1, j), i)
                }
                Var::X2 => {
                    if j == 0 {
                        continue;
                    }
                    ((i, j - 1), j)
                }
            };
            if k.0 + k.1 < prec {
                out.coeffs
                    .insert(k, c.scale(&Rat::from_integer(n.into())));
            }
        }
        Ok(out)
    }

    /// Antiderivative in the given variable with zero constant slice; gains
    /// one unit of precision.
    pub fn integrate(&self, var: Var) -> XSeries {
        let prec = if self.exact {
            self.prec.saturating_add(1)
        } else {
            self.prec + 1
        };
        let mut out = XSeries::zero(&self.field, prec);
        out.exact = self.exact;
        out.x1_free = self.x1_free && var == Var::X2;
        out.x2_free = self.x2_free && var == Var::X1;
        for (&(i, j), c) in &self.coeffs {
            let (k, n) = match var {
                Var::X1 => ((i + 1, j), i + 1),
                Var::X2 => ((i, j + 1), j + 1),
            };
            out.coeffs
                .insert(k, c.scale(&Rat::new(1.into(), n.into())));
        }
        out
    }

    /// Multiplicative inverse; requires an invertible constant term.
    pub fn inv(&self) -> Result<XSeries> {
        let c = self.constant_term();
        if c.is_zero() {
            return Err(Error::NonUnit("series with zero constant term".into()));
        }
        let c_inv = c.inv()?;
        // f = c (1 - g) with ord(g) >= 1: inv = c^-1 sum g^n.
        let exact_const = self.exact && self.coeffs.len() == 1;
        let mut g = self.scale(&c_inv).neg();
        g.coeffs.remove(&(0, 0));
        g.exact = false;
        g.prec = self.prec;
        let mut acc = XSeries::one(&self.field, self.prec);
        let mut pw = XSeries::one(&self.field, self.prec);
        for _ in 1..self.prec {
            pw = pw.mul(&g);
            if pw.is_zero_stored() {
                break;
            }
            acc = acc.add(&pw);
        }
        let mut out = acc.scale(&c_inv);
        out.exact = exact_const;
        out.prec = self.prec;
        Ok(out)
    }

    /// Exponential of a series with zero constant term.
    pub fn exp(&self) -> Result<XSeries> {
        if !self.constant_term().is_zero() {
            return Err(Error::Domain(
                "exp of a series with nonzero constant term".into(),
            ));
        }
        let mut acc = XSeries::one(&self.field, self.prec);
        let mut pw = XSeries::one(&self.field, self.prec);
        let mut factorial = Rat::one();
        for n in 1..self.prec {
            pw = pw.mul(self);
            if pw.is_zero_stored() {
                break;
            }
            factorial *= Rat::from_integer(n.into());
            acc = acc.add(&pw.scale_rat(&factorial.recip()));
        }
        acc.exact = self.exact && self.is_zero_stored();
        acc.prec = self.prec;
        Ok(acc)
    }

    pub fn scale_rat(&self, r: &Rat) -> XSeries {
        if r.is_zero() {
            let mut out = XSeries::zero(&self.field, self.prec);
            out.exact = self.exact;
            out.x1_free = true;
            out.x2_free = true;
            return out;
        }
        let mut out = self.clone();
        for v in out.coeffs.values_mut() {
            *v = v.scale(r);
        }
        out
    }

    /// Equality modulo `(x1, x2)^prec`, certified: errors if either side is
    /// not known to that precision.
    pub fn eq_mod(&self, other: &XSeries, prec: u32) -> Result<bool> {
        if self.eff_prec() < prec || other.eff_prec() < prec {
            return Err(Error::InsufficientPrecision(format!(
                "equality requested mod degree {prec}, known to {} and {}",
                self.eff_prec(),
                other.eff_prec()
            )));
        }
        let d = self.sub(other);
        Ok(d.coeffs.keys().all(|&(i, j)| i + j >= prec))
    }

    /// Canonical text: monomials by total degree, then `x1`-degree descending.
    pub fn to_canonical_string(&self) -> String {
        let mut keys: Vec<(u32, u32)> = self.coeffs.keys().cloned().collect();
        keys.sort_by_key(|&(i, j)| (i + j, core::cmp::Reverse(i)));
        if keys.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        for (idx, &(i, j)) in keys.iter().enumerate() {
            let c = &self.coeffs[&(i, j)];
            let (sign_neg, mag) = scalar_magnitude(c);
            if idx == 0 {
                if sign_neg {
                    out.push('-');
                }
            } else {
                out.push_str(if sign_neg { " - " } else { " + " });
            }
            out.push_str(&term_text(&mag, i, j));
        }
        out
    }
}

/// Split a scalar into a printable magnitude and a leading sign. Compound
/// scalars (with an alpha part) are parenthesized and treated as positive.
pub(crate) fn scalar_magnitude(c: &KElem) -> (bool, String) {
    if c.is_rational() {
        let r = c.rational_part();
        (r.is_negative(), rat_to_string(&r.abs()))
    } else {
        (false, format!("({})", c.to_canonical_string()))
    }
}

pub(crate) fn term_text(mag: &str, i: u32, j: u32) -> String {
    let mut parts: Vec<String> = Vec::new();
    if mag != "1" || (i == 0 && j == 0) {
        parts.push(mag.to_string());
    }
    for (name, e) in [("x1", i), ("x2", j)] {
        match e {
            0 => {}
            1 => parts.push(name.into()),
            _ => parts.push(format!("{name}^{e}")),
        }
    }
    parts.join("*")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::rat;

    fn q() -> KField {
        KField::rational()
    }

    fn x1(k: &KField, prec: u32) -> XSeries {
        XSeries::monomial(k, k.one(), 1, 0, prec)
    }

    fn x2(k: &KField, prec: u32) -> XSeries {
        XSeries::monomial(k, k.one(), 0, 1, prec)
    }

    #[test]
    fn product_difference_of_squares() {
        let k = q();
        let one = XSeries::one(&k, 8);
        let a = one.add(&x1(&k, 8));
        let b = one.sub(&x1(&k, 8));
        let p = a.mul(&b);
        let expect = one.sub(&x1(&k, 8).mul(&x1(&k, 8)));
        assert_eq!(p, expect);
        assert!(p.is_exact());
    }

    #[test]
    fn degree_two_monomial_dropped_at_prec_two() {
        let k = q();
        let p = x1(&k, 2).mul(&x2(&k, 2));
        assert!(p.is_zero_stored());
        assert_eq!(p.prec(), 2);
        assert!(!p.is_exact());
    }

    #[test]
    fn mul_identity() {
        let k = q();
        let f = XSeries::one(&k, 6)
            .add(&x2(&k, 6))
            .add(&x1(&k, 6).mul(&x2(&k, 6)));
        assert_eq!(f.mul(&XSeries::one(&k, 6)), f);
    }

    #[test]
    fn diff_of_geometric_series() {
        // d/dx2 of 1/(1-x2) at prec 6 = 1 + 2 x2 + 3 x2^2 + 4 x2^3 + 5 x2^4 at prec 5
        let k = q();
        let f = XSeries::one(&k, 6).sub(&x2(&k, 6)).inv().unwrap();
        let d = f.diff(Var::X2).unwrap();
        assert_eq!(d.prec(), 5);
        let expect = XSeries::from_terms(
            &k,
            (0..5).map(|j| ((0, j), k.from_int(i64::from(j) + 1))),
            5,
        );
        for j in 0..5 {
            assert_eq!(d.coeff(0, j), expect.coeff(0, j));
        }
    }

    #[test]
    fn diff_of_constant_and_prec_zero() {
        let k = q();
        let c = XSeries::constant(&k, k.from_int(5), 4);
        let d = c.diff(Var::X1).unwrap();
        assert!(d.is_zero_stored());
        assert!(d.is_exact());
        let junk = XSeries::zero(&k, 0);
        assert!(junk.diff(Var::X2).is_err());
    }

    #[test]
    fn inv_geometric() {
        let k = q();
        let f = XSeries::one(&k, 4).sub(&x2(&k, 4));
        let inv = f.inv().unwrap();
        let expect =
            XSeries::from_terms(&k, (0..4).map(|j| ((0, j), k.one())), 4);
        assert!(inv.eq_mod(&expect, 4).unwrap());
        assert!(f.mul(&inv).eq_mod(&XSeries::one(&k, 4), 4).unwrap());
    }

    #[test]
    fn inv_constant_and_nonunit() {
        let k = q();
        let two = XSeries::constant(&k, k.from_int(2), 5);
        assert_eq!(two.inv().unwrap().constant_term(), k.from_rat(rat(1, 2)));
        assert!(two.inv().unwrap().is_exact());
        assert!(x1(&k, 5).inv().is_err());
    }

    #[test]
    fn inv_two_variable_neumann() {
        // inv(1 + x1 + x2) at prec 3 = 1 - x1 - x2 + x1^2 + 2 x1 x2 + x2^2
        let k = q();
        let f = XSeries::one(&k, 3).add(&x1(&k, 3)).add(&x2(&k, 3));
        let inv = f.inv().unwrap();
        let expect = XSeries::from_terms(
            &k,
            [
                ((0, 0), k.from_int(1)),
                ((1, 0), k.from_int(-1)),
                ((0, 1), k.from_int(-1)),
                ((2, 0), k.from_int(1)),
                ((1, 1), k.from_int(2)),
                ((0, 2), k.from_int(1)),
            ],
            3,
        );
        for (key, c) in expect.terms() {
            assert_eq!(&inv.coeff(key.0, key.1), c);
        }
        assert_eq!(
            inv.to_canonical_string(),
            "1 - x1 - x2 + x1^2 + 2*x1*x2 + x2^2"
        );
    }

    #[test]
    fn exp_basics() {
        let k = q();
        let e0 = XSeries::zero_exact(&k, 6).exp().unwrap();
        assert!(e0.eq_mod(&XSeries::one(&k, 6), 6).unwrap());
        assert!(e0.is_exact());

        let e = x2(&k, 4).exp().unwrap();
        assert_eq!(e.coeff(0, 2), k.from_rat(rat(1, 2)));
        assert_eq!(e.coeff(0, 3), k.from_rat(rat(1, 6)));

        let f = x1(&k, 6).add(&x2(&k, 6));
        let prod = f.exp().unwrap().mul(&f.neg().exp().unwrap());
        assert!(prod.eq_mod(&XSeries::one(&k, 6), 6).unwrap());

        assert!(XSeries::one(&k, 4).exp().is_err());
    }

    #[test]
    fn ord_m_cases() {
        let k = q();
        let m = XSeries::monomial(&k, k.one(), 1, 2, 8);
        assert_eq!(m.ord_m(), OrdM::Finite(3));
        assert_eq!(
            XSeries::one(&k, 8).add(&x1(&k, 8)).ord_m(),
            OrdM::Finite(0)
        );
        assert_eq!(XSeries::zero_exact(&k, 8).ord_m(), OrdM::Infinite);
        assert_eq!(XSeries::zero(&k, 8).ord_m(), OrdM::AtLeast(8));
    }

    #[test]
    fn integrate_then_diff() {
        let k = q();
        let f = XSeries::from_terms(
            &k,
            [((1, 0), k.from_int(3)), ((0, 2), k.from_int(-2))],
            5,
        );
        let g = f.integrate(Var::X2);
        let back = g.diff(Var::X2).unwrap();
        assert!(back.eq_mod(&f, 5).unwrap());
    }
}
