//! Rational symbols `P/Q` in the constant-coefficient variables and their
//! Laurent expansion in `k((d1^-1))((d2^-1))`: `d2` at infinity first, then
//! `d1`. Membership in `k[d1]((d2^-1))` is read off the expansion, and the
//! order-shape consequence for the denominator is checked against it.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::{KElem, KField};
use crate::zseries::ZSeries;

/// Polynomial in `(d1, d2)` over the session field, exponents nonnegative.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BiPoly {
    field: KField,
    terms: BTreeMap<(u32, u32), KElem>,
}

impl BiPoly {
    pub fn zero(field: &KField) -> Self {
        BiPoly {
            field: field.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn monomial(field: &KField, c: KElem, i: u32, j: u32) -> Self {
        let mut p = Self::zero(field);
        if !c.is_zero() {
            p.terms.insert((i, j), c);
        }
        p
    }

    pub fn from_terms<I>(field: &KField, terms: I) -> Self
    where
        I: IntoIterator<Item = ((u32, u32), KElem)>,
    {
        let mut p = Self::zero(field);
        for (k, c) in terms {
            p.accumulate(k, c);
        }
        p
    }

    pub fn field(&self) -> &KField {
        &self.field
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(u32, u32), &KElem)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn accumulate(&mut self, key: (u32, u32), c: KElem) {
        if c.is_zero() {
            return;
        }
        let v = match self.terms.remove(&key) {
            Some(old) => &old + &c,
            None => c,
        };
        if !v.is_zero() {
            self.terms.insert(key, v);
        }
    }

    pub fn add(&self, other: &BiPoly) -> BiPoly {
        let mut out = self.clone();
        for (&k, c) in &other.terms {
            out.accumulate(k, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &BiPoly) -> BiPoly {
        let mut out = self.clone();
        for (&k, c) in &other.terms {
            out.accumulate(k, c.neg());
        }
        out
    }

    pub fn mul(&self, other: &BiPoly) -> BiPoly {
        let mut out = Self::zero(&self.field);
        for (&(a, b), c1) in &self.terms {
            for (&(x, y), c2) in &other.terms {
                out.accumulate((a + x, b + y), c1 * c2);
            }
        }
        out
    }

    pub fn scale(&self, c: &KElem) -> BiPoly {
        if c.is_zero() {
            return Self::zero(&self.field);
        }
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v = &*v * c;
        }
        out
    }

    pub fn deg_d2(&self) -> Option<u32> {
        self.terms.keys().map(|&(_, j)| j).max()
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(|&(i, j)| i + j).max()
    }

    /// Coefficient of `d2^j` as a univariate polynomial in `d1`.
    pub fn d2_coeff(&self, j: u32) -> BiPoly {
        let mut out = Self::zero(&self.field);
        for (&(i, jj), c) in &self.terms {
            if jj == j {
                out.terms.insert((i, 0), c.clone());
            }
        }
        out
    }

    pub fn deg_d1(&self) -> Option<u32> {
        self.terms.keys().map(|&(i, _)| i).max()
    }

    /// Leading monomial under (d2-degree, then d1-degree).
    fn lead(&self) -> Option<((u32, u32), KElem)> {
        self.terms
            .iter()
            .max_by_key(|(&(i, j), _)| (j, i))
            .map(|(&k, c)| (k, c.clone()))
    }

    /// Exact division by a known divisor; panics if not divisible (internal
    /// use after a gcd computation).
    fn div_exact(&self, divisor: &BiPoly) -> BiPoly {
        let mut rem = self.clone();
        let mut quot = Self::zero(&self.field);
        let (dk, dc) = divisor.lead().expect("division by zero polynomial");
        while let Some((rk, rc)) = rem.lead() {
            assert!(rk.0 >= dk.0 && rk.1 >= dk.1, "not divisible");
            let mk = (rk.0 - dk.0, rk.1 - dk.1);
            let mc = rc.checked_div(&dc).expect("unit lead");
            let m = BiPoly::monomial(&self.field, mc, mk.0, mk.1);
            quot = quot.add(&m);
            rem = rem.sub(&m.mul(divisor));
        }
        quot
    }

    /// The polynomial as an exact symbol series.
    pub fn to_zseries(&self) -> ZSeries {
        ZSeries::from_terms(
            &self.field,
            self.terms
                .iter()
                .map(|(&(i, j), c)| ((i64::from(i), i64::from(j)), c.clone())),
        )
    }
}

/// Monic univariate gcd in `k[d1]` (inputs viewed at d2-degree zero).
fn gcd_univ(a: &BiPoly, b: &BiPoly) -> BiPoly {
    let field = a.field.clone();
    let (mut x, mut y) = (a.clone(), b.clone());
    while !y.is_zero() {
        // Remainder of x by y with field coefficients.
        let (yk, yc) = y.lead().expect("nonzero");
        loop {
            let Some((xk, xc)) = x.lead() else { break };
            if xk.0 < yk.0 {
                break;
            }
            let m = BiPoly::monomial(
                &field,
                xc.checked_div(&yc).expect("unit"),
                xk.0 - yk.0,
                0,
            );
            x = x.sub(&m.mul(&y));
        }
        core::mem::swap(&mut x, &mut y);
    }
    normalize_lead(&x)
}

/// Content of a bivariate polynomial over `k[d1]`: the monic gcd of its
/// `d2`-coefficients.
fn content_d1(p: &BiPoly) -> BiPoly {
    let field = p.field.clone();
    let mut acc = BiPoly::zero(&field);
    if let Some(top) = p.deg_d2() {
        for j in 0..=top {
            let c = p.d2_coeff(j);
            if !c.is_zero() {
                acc = gcd_univ(&acc, &c);
            }
        }
    }
    acc
}

/// Pseudo-remainder of `a` by `b` in the `d2` variable.
fn prem_d2(a: &BiPoly, b: &BiPoly) -> BiPoly {
    let db = b.deg_d2().expect("division by zero");
    let lb = b.d2_coeff(db);
    let mut r = a.clone();
    while let Some(dr) = r.deg_d2() {
        if dr < db || r.is_zero() {
            break;
        }
        let lr = r.d2_coeff(dr);
        // r <- lb * r - lr * d2^(dr-db) * b; the top level always cancels.
        let shift = BiPoly::monomial(&r.field, r.field.one(), 0, dr - db);
        r = r.mul(&lb).sub(&lr.mul(&shift).mul(b));
    }
    r
}

/// Monic-normalized gcd of bivariate polynomials via primitive-part Euclid
/// over `k[d1]`.
pub fn gcd_bipoly(a: &BiPoly, b: &BiPoly) -> BiPoly {
    if a.is_zero() {
        return normalize_lead(b);
    }
    if b.is_zero() {
        return normalize_lead(a);
    }
    let ca = content_d1(a);
    let cb = content_d1(b);
    let cont = gcd_univ(&ca, &cb);
    let mut x = a.div_exact(&ca);
    let mut y = b.div_exact(&cb);
    if x.deg_d2() < y.deg_d2() {
        core::mem::swap(&mut x, &mut y);
    }
    while !y.is_zero() {
        let r = prem_d2(&x, &y);
        x = y;
        y = if r.is_zero() {
            r
        } else {
            let cr = content_d1(&r);
            r.div_exact(&cr)
        };
    }
    normalize_lead(&cont.mul(&x))
}

fn normalize_lead(p: &BiPoly) -> BiPoly {
    match p.lead() {
        None => p.clone(),
        Some((_, c)) => p.scale(&c.inv().expect("unit lead")),
    }
}

/// Rational symbol `P/Q` with an explicit coprimality certificate.
#[derive(Debug, Clone)]
pub struct RatSym {
    pub p: BiPoly,
    pub q: BiPoly,
    pub coprimality_checked: bool,
}

impl RatSym {
    pub fn new(p: BiPoly, q: BiPoly) -> Result<Self> {
        if q.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(RatSym {
            p,
            q,
            coprimality_checked: false,
        })
    }

    /// Verify (or establish by division) that `P` and `Q` are coprime.
    pub fn reduced(mut self) -> Self {
        let g = gcd_bipoly(&self.p, &self.q);
        if g.total_degree().unwrap_or(0) > 0 {
            self.p = self.p.div_exact(&g);
            self.q = self.q.div_exact(&g);
        }
        self.coprimality_checked = true;
        self
    }
}

/// Truncation window for Laurent expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExpandWindow {
    /// Lowest retained `d2`-exponent.
    pub d2_min: i64,
    /// Lowest retained `d1`-exponent (negative exponents appear in the
    /// second Laurent direction).
    pub d1_min: i64,
}

/// Expansion result: the retained series plus the quotient monomials that
/// fell below the `d1` floor (each is a genuine nonzero quotient term).
#[derive(Debug, Clone)]
pub struct Expansion {
    pub series: ZSeries,
    pub dropped_d1: Vec<((i64, i64), KElem)>,
}

/// Membership verdict in `k[d1]((d2^-1))`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Membership {
    /// No negative `d1`-exponent seen; `exact` when the expansion
    /// terminated, otherwise certified only down to the window floor.
    Inside { exact: bool },
    Outside { witness: (i64, i64) },
    /// The window could not observe potential violations.
    Indeterminate,
}

/// Laurent expansion of `P/Q` by leading-term division: `d2` at infinity
/// first, then `d1`.
pub fn expand(r: &RatSym, window: ExpandWindow) -> Result<Expansion> {
    if r.q.is_zero() {
        return Err(Error::DivisionByZero);
    }
    let field = r.q.field().clone();
    let (qk, qc) = r.q.lead().expect("nonzero denominator");
    // Remainder as a Laurent polynomial.
    let mut rem: BTreeMap<(i64, i64), KElem> = r
        .p
        .terms()
        .map(|(&(i, j), c)| ((i64::from(i), i64::from(j)), c.clone()))
        .collect();
    let mut out = ZSeries::zero(&field);
    let mut dropped: Vec<((i64, i64), KElem)> = Vec::new();
    let mut floor: Option<i64> = None;
    while let Some((&(ri, rj), _)) = rem.iter().max_by_key(|(&(i, j), _)| (j, i)) {
        let rc = rem.remove(&(ri, rj)).expect("present");
        let ti = ri - i64::from(qk.0);
        let tj = rj - i64::from(qk.1);
        let tc = rc.checked_div(&qc)?;
        if tj < window.d2_min {
            // This and every later quotient term sits below the window.
            floor = Some(window.d2_min);
            break;
        }
        if ti < window.d1_min {
            // A genuine quotient monomial below the d1 floor; its
            // correction terms pollute everything below this level.
            dropped.push(((ti, tj), tc));
            floor = Some(floor.map_or(tj, |f: i64| f.max(tj)));
            continue;
        }
        out = out.add(&ZSeries::monomial(&field, tc.clone(), ti, tj));
        // rem -= t * Q
        for (&(bi, bj), bc) in r.q.terms() {
            let key = (ti + i64::from(bi), tj + i64::from(bj));
            if key == (ri, rj) {
                continue; // the cancelled lead
            }
            let v = &tc * bc;
            let cur = rem.remove(&key);
            let merged = match cur {
                Some(old) => &old - &v,
                None => v.neg(),
            };
            if !merged.is_zero() {
                rem.insert(key, merged);
            }
        }
    }
    if let Some(f) = floor {
        out = out.clip_tail(f);
    }
    Ok(Expansion {
        series: out,
        dropped_d1: dropped,
    })
}

/// Growth bound read off the stable (top-half) part of the window: the
/// maximal total degree over terms with `d2` at or above `d2_min / 2`.
/// Degree growth down the tail then shows up as a violation at this bound,
/// which is how a truncated window can reject unbounded expansions.
pub fn stable_growth_bound(e: &Expansion, window: ExpandWindow) -> Option<i64> {
    let mid = window.d2_min / 2;
    let top = e
        .series
        .terms()
        .filter(|(&(_, s), _)| s >= mid)
        .map(|(&(i, s), _)| i + s)
        .max();
    top.or_else(|| e.series.terms().map(|(&(i, s), _)| i + s).max())
}

/// Membership of an expansion in `k[d1]((d2^-1))`.
pub fn membership_kd1(e: &Expansion, window: ExpandWindow) -> Membership {
    if window.d1_min > 0 {
        return Membership::Indeterminate;
    }
    let neg = e
        .series
        .terms()
        .filter(|(&(i, _), _)| i < 0)
        .map(|(&k, _)| k)
        .max_by_key(|&(i, s)| (s, i));
    if let Some(w) = neg {
        return Membership::Outside { witness: w };
    }
    if let Some((key, _)) = e.dropped_d1.first() {
        return Membership::Outside { witness: *key };
    }
    Membership::Inside {
        exact: e.series.is_exact(),
    }
}

/// Report of the denominator-shape check.
#[derive(Debug, Clone)]
pub struct LemmaReport {
    pub membership: Membership,
    /// Largest total degree `i + j` over retained expansion terms: the
    /// smallest growth bound the window can certify.
    pub observed_degree: Option<i64>,
    /// Growth condition at the requested bound, within the window.
    pub a1_holds: bool,
    pub hypothesis: bool,
    /// Top `d2`-coefficient of `Q` is a nonzero constant and the total
    /// degree of `Q` equals its `d2`-degree.
    pub conclusion: bool,
    pub implication_ok: bool,
}

/// Evaluate hypothesis (membership + growth at `m`) and conclusion (the
/// denominator has order shape `(0, ord Q)`), and whether the implication
/// holds for this sample.
pub fn lemma_check(r: &RatSym, window: ExpandWindow, m: i64) -> Result<LemmaReport> {
    if !r.coprimality_checked {
        return Err(Error::Domain(
            "coprimality not verified; call reduced() first".into(),
        ));
    }
    let e = expand(r, window)?;
    let membership = membership_kd1(&e, window);
    let observed_degree = e.series.terms().map(|(&(i, s), _)| i + s).max();
    let a1_holds = observed_degree.map_or(true, |d| d <= m);
    let hypothesis = matches!(membership, Membership::Inside { .. }) && a1_holds;
    let top = r.q.deg_d2().expect("nonzero");
    let qn = r.q.d2_coeff(top);
    let conclusion = qn.deg_d1() == Some(0)
        && r.q.total_degree() == Some(top);
    Ok(LemmaReport {
        membership,
        observed_degree,
        a1_holds,
        hypothesis,
        conclusion,
        implication_ok: !hypothesis || conclusion,
    })
}
