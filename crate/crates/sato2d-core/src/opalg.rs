//! Truncated noncommutative operator algebra: elements of
//! `D1_hat((d2^-1))` with coefficients in `k[[x1, x2]]`, kept in left-normal
//! form (all series coefficients left of all derivations).
//!
//! Composition uses the generalized Leibniz rule
//! `d2^s . f = sum_k C(s, k) (d_x2^k f) d2^(s-k)` (binomials extended by
//! falling factorials for `s < 0`) and `d1 . f = f d1 + d_x1 f`.
//!
//! Every operator lives inside an explicit truncation window; composition
//! clips to the window and records what was lost. Precision is tracked per
//! coefficient: a slot whose series has effective precision `p` is correct
//! modulo `(x1, x2)^p`, and slots that unknown contributions reached are
//! degraded to precision zero rather than silently kept.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_traits::One;

use crate::error::{Error, Result};
use crate::field::{KElem, KField, Rat};
use crate::series::{scalar_magnitude, OrdM, Var, XSeries};
use crate::zseries::ZSeries;

/// Truncation window: x-total-degree cap, `d1`-degree cap and the retained
/// `d2`-exponent range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Trunc {
    pub nx: u32,
    pub n1: u32,
    pub s_min: i64,
    pub s_max: i64,
}

impl Trunc {
    pub fn new(nx: u32, n1: u32, s_min: i64, s_max: i64) -> Self {
        assert!(s_min <= s_max, "empty d2 window");
        assert!(nx >= 1, "x precision must be positive");
        Trunc {
            nx,
            n1,
            s_min,
            s_max,
        }
    }

    /// Window used by the worked-example verifications.
    pub fn catalog_default() -> Self {
        Trunc::new(8, 6, -8, 4)
    }

    pub fn d2_span(&self) -> i64 {
        self.s_max - self.s_min
    }
}

/// Bi-order `(k, l)`: `d2`-degree `l`, and `d1`-order `k` of the top
/// `d2`-coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BiOrd {
    pub k: i64,
    pub l: i64,
}

/// Verdict of a growth-condition check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum A1Verdict {
    Holds,
    /// Slot `(i, s)` has certified order below `i + s - m`.
    FailsAt { slot: (u32, i64), ord: u32, needed: i64 },
    /// A stored-zero slot could not be certified to the needed order.
    Indeterminate { slot: (u32, i64) },
}

impl A1Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, A1Verdict::Holds)
    }
}

/// Truncated operator in left-normal form.
///
/// `floor` is the soundness floor: `None` means the operator has no content
/// below its stored terms (it is a finite sum); `Some(v)` means `d2`-levels
/// below `v` are unknown (an infinite tail was cut, or unknown contributions
/// reached them) and are not stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EOp {
    field: KField,
    trunc: Trunc,
    terms: BTreeMap<(u32, i64), XSeries>,
    floor: Option<i64>,
    /// Contributions fell above `s_max`.
    pub clipped_high: bool,
    /// Contributions exceeded the `d1` cap.
    pub clipped_d1: bool,
}

impl EOp {
    pub fn zero(field: &KField, trunc: Trunc) -> Self {
        EOp {
            field: field.clone(),
            trunc,
            terms: BTreeMap::new(),
            floor: None,
            clipped_high: false,
            clipped_d1: false,
        }
    }

    pub fn one(field: &KField, trunc: Trunc) -> Self {
        let mut op = Self::zero(field, trunc);
        op.terms
            .insert((0, 0), XSeries::one(field, trunc.nx));
        op
    }

    /// `c * d1^i * d2^s` with an exact constant coefficient.
    pub fn monomial(field: &KField, trunc: Trunc, c: KElem, i: u32, s: i64) -> Self {
        let f = XSeries::constant(field, c, trunc.nx);
        Self::from_coeff(field, trunc, f, i, s)
    }

    pub fn d1(field: &KField, trunc: Trunc) -> Self {
        Self::monomial(field, trunc, field.one(), 1, 0)
    }

    pub fn d2(field: &KField, trunc: Trunc) -> Self {
        Self::monomial(field, trunc, field.one(), 0, 1)
    }

    pub fn d2_pow(field: &KField, trunc: Trunc, s: i64) -> Self {
        Self::monomial(field, trunc, field.one(), 0, s)
    }

    /// Embed a series as a multiplication operator.
    pub fn from_xseries(trunc: Trunc, f: XSeries) -> Self {
        let field = f.field().clone();
        Self::from_coeff(&field, trunc, f, 0, 0)
    }

    /// `f * d1^i * d2^s`.
    pub fn from_coeff(field: &KField, trunc: Trunc, f: XSeries, i: u32, s: i64) -> Self {
        let mut op = Self::zero(field, trunc);
        op.set_term(i, s, f);
        op
    }

    /// Lift a symbol to a constant-coefficient operator. Requires
    /// nonnegative `d1`-exponents; inherits the symbol's tail floor.
    pub fn lift(field: &KField, trunc: Trunc, z: &ZSeries) -> Result<EOp> {
        let mut op = Self::zero(field, trunc);
        for (&(i, s), c) in z.terms() {
            if i < 0 {
                return Err(Error::Malformed(format!(
                    "negative d1 exponent {i} cannot be lifted"
                )));
            }
            let f = XSeries::constant(field, c.clone(), trunc.nx);
            op.set_term(i as u32, s, f);
        }
        op.raise_floor(z.tail_floor());
        Ok(op)
    }

    pub fn field(&self) -> &KField {
        &self.field
    }

    pub fn trunc(&self) -> Trunc {
        self.trunc
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(u32, i64), &XSeries)> {
        self.terms.iter()
    }

    pub fn coeff(&self, i: u32, s: i64) -> XSeries {
        self.terms
            .get(&(i, s))
            .cloned()
            .unwrap_or_else(|| XSeries::zero_exact(&self.field, self.trunc.nx))
    }

    pub fn is_zero_stored(&self) -> bool {
        self.terms.values().all(|f| f.is_zero_stored())
    }

    /// Restrict every coefficient to the given x-precision (comparison or
    /// presentation at a coarser quotient).
    pub fn truncate_x(&self, prec: u32) -> EOp {
        let mut out = self.clone();
        out.terms = BTreeMap::new();
        for (&(i, s), f) in &self.terms {
            let t = f.truncate(prec.min(f.prec()));
            if !(t.is_zero_stored() && t.is_exact()) {
                out.terms.insert((i, s), t);
            }
        }
        out
    }

    /// Soundness floor: levels below it (if any) are unknown.
    pub fn level_floor(&self) -> Option<i64> {
        self.floor
    }

    pub fn any_clip(&self) -> bool {
        self.floor.is_some() || self.clipped_high || self.clipped_d1
    }

    /// Raise the soundness floor and discard slots below it.
    pub fn raise_floor(&mut self, floor: Option<i64>) {
        let new = match (self.floor, floor) {
            (a, None) => a,
            (None, b) => b,
            (Some(a), Some(b)) => Some(a.max(b)),
        };
        if let Some(v) = new {
            self.terms.retain(|&(_, s), _| s >= v);
        }
        self.floor = new;
    }

    /// Minimum effective x-precision over stored slots (`u32::MAX` when all
    /// retained coefficients are exact polynomials).
    pub fn min_prec(&self) -> u32 {
        self.terms
            .values()
            .map(XSeries::eff_prec)
            .min()
            .unwrap_or(u32::MAX)
    }

    /// Insert or accumulate a coefficient at a slot, clipping to the window.
    pub fn set_term(&mut self, i: u32, s: i64, f: XSeries) {
        if f.is_zero_stored() && f.is_exact() {
            return;
        }
        if i > self.trunc.n1 {
            self.clipped_d1 = true;
            return;
        }
        if s < self.trunc.s_min {
            self.raise_floor(Some(self.trunc.s_min));
            return;
        }
        if let Some(v) = self.floor {
            if s < v {
                return;
            }
        }
        if s > self.trunc.s_max {
            self.clipped_high = true;
            return;
        }
        let merged = match self.terms.remove(&(i, s)) {
            Some(old) => old.add(&f),
            None => f,
        };
        if merged.is_zero_stored() && merged.is_exact() {
            return;
        }
        self.terms.insert((i, s), merged);
    }

    fn merge_flags(&mut self, other: &EOp) {
        self.clipped_high |= other.clipped_high;
        self.clipped_d1 |= other.clipped_d1;
    }

    pub fn add(&self, other: &EOp) -> EOp {
        assert!(self.trunc == other.trunc, "incompatible windows");
        let mut out = self.clone();
        out.merge_flags(other);
        out.raise_floor(other.floor);
        for (&(i, s), f) in &other.terms {
            out.set_term(i, s, f.clone());
        }
        out
    }

    pub fn sub(&self, other: &EOp) -> EOp {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> EOp {
        let mut out = self.clone();
        for f in out.terms.values_mut() {
            *f = f.neg();
        }
        out
    }

    pub fn scale(&self, c: &KElem) -> EOp {
        let mut out = self.clone();
        out.terms = BTreeMap::new();
        for (&(i, s), f) in &self.terms {
            let g = f.scale(c);
            if !(g.is_zero_stored() && g.is_exact()) {
                out.terms.insert((i, s), g);
            }
        }
        out
    }

    pub fn scale_rat(&self, r: &Rat) -> EOp {
        self.scale(&self.field.from_rat(r.clone()))
    }

    /// Left multiplication by a series.
    pub fn mul_series_left(&self, f: &XSeries) -> EOp {
        let mut out = EOp::zero(&self.field, self.trunc);
        out.merge_flags(self);
        out.floor = self.floor;
        for (&(i, s), g) in &self.terms {
            out.set_term(i, s, f.mul(g));
        }
        out
    }

    fn top_level(&self) -> Option<i64> {
        self.terms
            .iter()
            .filter(|(_, f)| !f.is_zero_stored())
            .map(|(&(_, s), _)| s)
            .max()
    }

    /// Composition `self . other`, exact per retained slot in the quotient
    /// tracked by each coefficient's precision. Slots that contributions of
    /// unknown low-degree content would have reached are degraded to
    /// precision zero.
    pub fn compose(&self, other: &EOp) -> EOp {
        assert!(self.trunc == other.trunc, "incompatible windows");
        let tr = self.trunc;
        let mut out = EOp::zero(&self.field, tr);
        out.merge_flags(self);
        out.merge_flags(other);
        // Unknown tails pollute the product from (tail of one) + (top of the
        // other) downward.
        let mut event_floor: Option<i64> = None;
        let raise = |f: &mut Option<i64>, v: i64| {
            *f = Some(f.map_or(v, |old| old.max(v)));
        };
        if let (Some(fp), Some(tq)) = (self.floor, other.top_level()) {
            raise(&mut event_floor, fp + tq);
        }
        if let (Some(fq), Some(sp)) = (other.floor, self.top_level()) {
            raise(&mut event_floor, sp + fq);
        }
        if let (Some(fp), Some(fq)) = (self.floor, other.floor) {
            raise(&mut event_floor, fp + fq);
        }
        for (&(i, s), f) in &self.terms {
            for (&(j, t), g) in &other.terms {
                // d2^s . g, then d1^i across the result, then append d1^j d2^t.
                let mut binom_s = Rat::one(); // C(s, k)
                let mut gk = g.clone(); // k-th x2-derivative of g
                let mut k: i64 = 0;
                loop {
                    let level = s - k + t;
                    if gk.is_zero_stored() && gk.is_exact() {
                        break;
                    }
                    if level < tr.s_min {
                        raise(&mut event_floor, tr.s_min);
                        break;
                    }
                    if !gk.is_exact() && gk.prec() == 0 {
                        // Contributions of unknown low-degree content reach
                        // this level and everything below it.
                        raise(&mut event_floor, level + 1);
                        break;
                    }
                    if level <= tr.s_max {
                        // d1^i . (gk): x1-Leibniz.
                        let mut binom_i = Rat::one(); // C(i, r)
                        let mut gkr = gk.clone();
                        for r in 0..=i {
                            if gkr.is_zero_stored() && gkr.is_exact() {
                                break;
                            }
                            let d1 = i - r + j;
                            if d1 > tr.n1 {
                                out.clipped_d1 = true;
                            } else if !gkr.is_exact() && gkr.prec() == 0 {
                                raise(&mut event_floor, level + 1);
                            } else {
                                let coeff = &binom_s * &binom_i;
                                let term = f.mul(&gkr).scale_rat(&coeff);
                                out.set_term(d1, level, term);
                            }
                            if r == i {
                                break;
                            }
                            binom_i *= Rat::new(
                                (i64::from(i) - i64::from(r)).into(),
                                (i64::from(r) + 1).into(),
                            );
                            gkr = match gkr.diff(Var::X1) {
                                Ok(d) => d,
                                Err(_) => XSeries::zero(&self.field, 0),
                            };
                        }
                    } else {
                        out.clipped_high = true;
                    }
                    // Advance the x2-derivative chain.
                    if s >= 0 && k == s {
                        break;
                    }
                    binom_s *= Rat::new((s - k).into(), (k + 1).into());
                    gk = match gk.diff(Var::X2) {
                        Ok(d) => d,
                        Err(_) => XSeries::zero(&self.field, 0),
                    };
                    k += 1;
                }
            }
        }
        out.raise_floor(event_floor);
        out
    }

    pub fn commutator(&self, other: &EOp) -> EOp {
        self.compose(other).sub(&other.compose(self))
    }

    /// Inverse of `u + n` with `u` an invertible series at the identity slot
    /// and `n` raising either the `d2^-1` depth or the M-adic order.
    pub fn invert_unit(&self) -> Result<EOp> {
        let head = self.coeff(0, 0);
        if head.constant_term().is_zero() {
            return Err(Error::NonUnit(
                "identity-slot coefficient has zero constant term".into(),
            ));
        }
        for (&(i, s), f) in &self.terms {
            if (i, s) == (0, 0) || s < 0 {
                continue;
            }
            if f.eff_prec() == 0 {
                return Err(Error::InsufficientPrecision(format!(
                    "slot d1^{i} d2^{s} has precision 0"
                )));
            }
            if f.ord_m().lower_bound() < 1 {
                return Err(Error::NonUnit(format!(
                    "slot d1^{i} d2^{s} has order 0 and does not lower d2"
                )));
            }
        }
        let u_inv = EOp::from_coeff(&self.field, self.trunc, head.inv()?, 0, 0);
        let m = u_inv.compose(self); // 1 + nilpotent part in the quotient
        let mut tail = m.clone();
        tail.terms.remove(&(0, 0));
        let head_rest = {
            let mut h = m.coeff(0, 0);
            h = h.sub(&XSeries::one(&self.field, h.prec().max(1)));
            h
        };
        if !(head_rest.is_zero_stored() && head_rest.is_exact()) {
            tail.set_term(0, 0, head_rest);
        }
        let mut acc = EOp::one(&self.field, self.trunc);
        let mut pw = EOp::one(&self.field, self.trunc);
        let bound = self.trunc.nx as i64 + self.trunc.d2_span() + 4;
        let mut sign_neg = true;
        let mut step = 0;
        loop {
            pw = pw.compose(&tail);
            if pw.is_zero_stored() {
                break;
            }
            acc = if sign_neg { acc.sub(&pw) } else { acc.add(&pw) };
            sign_neg = !sign_neg;
            step += 1;
            if step > bound {
                return Err(Error::NonUnit(
                    "Neumann series failed to terminate in the window".into(),
                ));
            }
        }
        Ok(acc.compose(&u_inv))
    }

    /// `t^-1 . self . t`.
    pub fn conjugate_by(&self, t: &EOp) -> Result<EOp> {
        let t_inv = t.invert_unit()?;
        Ok(t_inv.compose(self).compose(t))
    }

    /// Exponential of an operator whose terms all raise the M-adic order or
    /// lower the `d2`-degree.
    pub fn exp(&self) -> Result<EOp> {
        for (&(i, s), f) in &self.terms {
            if s > 0 {
                return Err(Error::Domain(format!(
                    "exp argument has positive d2 degree at d1^{i} d2^{s}"
                )));
            }
            if s == 0 && f.ord_m().lower_bound() < 1 {
                return Err(Error::Domain(format!(
                    "exp argument has order-0 coefficient at d1^{i}"
                )));
            }
        }
        let mut acc = EOp::one(&self.field, self.trunc);
        let mut pw = EOp::one(&self.field, self.trunc);
        let mut factorial = Rat::one();
        let bound = self.trunc.nx as i64 + self.trunc.d2_span() + 4;
        let mut n = 0i64;
        loop {
            pw = pw.compose(self);
            if pw.is_zero_stored() {
                break;
            }
            n += 1;
            factorial *= Rat::from_integer(n.into());
            acc = acc.add(&pw.scale_rat(&factorial.recip()));
            if n > bound {
                return Err(Error::Domain(
                    "exp series failed to terminate in the window".into(),
                ));
            }
        }
        Ok(acc)
    }

    /// Bi-order `(k, l)`: `l` is the top `d2`-degree with a nonzero
    /// coefficient, `k` the `d1`-order of that coefficient.
    pub fn ord_gamma(&self) -> Result<BiOrd> {
        let mut top: Option<i64> = None;
        for (&(_, s), f) in &self.terms {
            if !f.is_zero_stored() {
                top = Some(top.map_or(s, |t: i64| t.max(s)));
            }
        }
        let l = top.ok_or_else(|| Error::Malformed("order of the zero operator".into()))?;
        // Stored-zero inexact slots above the top cannot be certified absent.
        for (&(i, s), f) in &self.terms {
            if s > l && f.is_zero_stored() && !f.is_exact() {
                return Err(Error::Indeterminate(format!(
                    "slot d1^{i} d2^{s} above the top is only zero to precision {}",
                    f.prec()
                )));
            }
        }
        let k = self
            .terms
            .iter()
            .filter(|(&(_, s), f)| s == l && !f.is_zero_stored())
            .map(|(&(i, _), _)| i64::from(i))
            .max()
            .expect("top level nonempty");
        Ok(BiOrd { k, l })
    }

    /// Monic: the `(k, l)` coefficient is the constant series 1.
    pub fn is_monic(&self) -> Result<bool> {
        let BiOrd { k, l } = self.ord_gamma()?;
        let c = self.coeff(k as u32, l);
        Ok(c.constant_term().is_one() && c.terms().count() == 1)
    }

    /// Growth condition: `ord_M(coeff(i, s)) >= i + s - m` on every slot.
    pub fn check_a1(&self, m: i64) -> A1Verdict {
        let mut indet: Option<(u32, i64)> = None;
        for (&(i, s), f) in &self.terms {
            let needed = i64::from(i) + s - m;
            if needed <= 0 {
                continue;
            }
            match f.ord_m() {
                OrdM::Finite(n) => {
                    if i64::from(n) < needed {
                        return A1Verdict::FailsAt {
                            slot: (i, s),
                            ord: n,
                            needed,
                        };
                    }
                }
                OrdM::Infinite => {}
                OrdM::AtLeast(p) => {
                    if i64::from(p) < needed && indet.is_none() {
                        indet = Some((i, s));
                    }
                }
            }
        }
        match indet {
            Some(slot) => A1Verdict::Indeterminate { slot },
            None => A1Verdict::Holds,
        }
    }

    /// Constant-term read-off `E+ -> k[z1^-1]((z2))`.
    pub fn reduce_mod_x(&self) -> Result<ZSeries> {
        let mut z = ZSeries::zero(&self.field);
        for (&(i, s), f) in &self.terms {
            if f.eff_prec() == 0 {
                return Err(Error::InsufficientPrecision(format!(
                    "constant term at d1^{i} d2^{s} is unknown"
                )));
            }
            let c = f.constant_term();
            if !c.is_zero() {
                z = z.add(&ZSeries::monomial(&self.field, c, i64::from(i), s));
            }
        }
        let mut out = z;
        if let Some(v) = self.floor {
            out = out.clip_tail(v);
        }
        if self.clipped_high {
            out = out.mark_head_clipped();
        }
        if self.clipped_d1 {
            out = out.mark_d1_clipped();
        }
        Ok(out)
    }

    /// Right action of the operator on a symbol.
    pub fn act_on(&self, w: &ZSeries) -> Result<ZSeries> {
        let lifted = EOp::lift(&self.field, self.trunc, w)?;
        lifted.compose(self).reduce_mod_x()
    }

    /// Equality modulo `(x1, x2)^x_prec` on every slot of the given window;
    /// errors when a compared slot is not certified that far or when the
    /// requested range dips below either soundness floor.
    pub fn eq_in(&self, other: &EOp, x_prec: u32, d1_max: u32, d2_range: (i64, i64)) -> Result<bool> {
        let (lo, hi) = d2_range;
        for op in [self, other] {
            if let Some(v) = op.floor {
                if lo < v {
                    return Err(Error::Indeterminate(format!(
                        "comparison down to d2^{lo} requested but levels below d2^{v} are unknown"
                    )));
                }
            }
        }
        let mut slots: Vec<(u32, i64)> = Vec::new();
        for (&(i, s), _) in self.terms.iter().chain(other.terms.iter()) {
            if s >= lo && s <= hi && i <= d1_max && !slots.contains(&(i, s)) {
                slots.push((i, s));
            }
        }
        for (i, s) in slots {
            let a = self.coeff(i, s);
            let b = other.coeff(i, s);
            if !a.eq_mod(&b, x_prec)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Canonical flat text: slots by `d2` descending then `d1` descending,
    /// series monomials inside a slot by total degree then `x1` descending.
    pub fn to_canonical_string(&self) -> String {
        let mut slots: Vec<(u32, i64)> = self
            .terms
            .iter()
            .filter(|(_, f)| !f.is_zero_stored())
            .map(|(&k, _)| k)
            .collect();
        slots.sort_by_key(|&(i, s)| core::cmp::Reverse((s, i)));
        if slots.is_empty() {
            return "0".into();
        }
        let mut pieces: Vec<(bool, String)> = Vec::new();
        for (i, s) in slots {
            let f = &self.terms[&(i, s)];
            let mut mons: Vec<(u32, u32)> = f.terms().map(|(&k, _)| k).collect();
            mons.sort_by_key(|&(a, b)| (a + b, core::cmp::Reverse(a)));
            for (a, b) in mons {
                let c = f.coeff(a, b);
                let (neg, mag) = scalar_magnitude(&c);
                pieces.push((neg, atom_text(&mag, a, b, i, s)));
            }
        }
        let mut out = String::new();
        for (idx, (neg, text)) in pieces.iter().enumerate() {
            if idx == 0 {
                if *neg {
                    out.push('-');
                }
            } else {
                out.push_str(if *neg { " - " } else { " + " });
            }
            out.push_str(text);
        }
        out
    }
}

fn atom_text(mag: &str, x1: u32, x2: u32, d1: u32, d2: i64) -> String {
    let mut parts: Vec<String> = Vec::new();
    let has_mon = x1 > 0 || x2 > 0 || d1 > 0 || d2 != 0;
    if mag != "1" || !has_mon {
        parts.push(mag.to_string());
    }
    for (name, e) in [("x1", i64::from(x1)), ("x2", i64::from(x2)), ("d1", i64::from(d1)), ("d2", d2)] {
        match e {
            0 => {}
            1 => parts.push(name.into()),
            _ => parts.push(format!("{name}^{e}")),
        }
    }
    parts.join("*")
}
