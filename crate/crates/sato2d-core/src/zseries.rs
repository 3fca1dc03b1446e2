//! Constant-coefficient symbols: truncated elements of `k[z1^-1]((z2))`,
//! identified with `k[d1]((d2^-1))` via `z1^-1 <-> d1`, `z2 <-> d2^-1`.
//!
//! Keys are stored in operator convention: `(i, s)` is the monomial
//! `d1^i * d2^s`, i.e. `z1^-i * z2^-s`. Ratexp expansions may carry negative
//! `i`; the operator-algebra side requires `i >= 0`.
//!
//! An element either is an exact Laurent polynomial (`tail_floor == None`) or
//! is known only for `d2`-degrees at or above its tail floor.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::{KElem, KField};
use crate::series::scalar_magnitude;

/// Anti-lexicographic ranking: the lowest term is the retained monomial with
/// the highest `d2`-degree, ties broken by the highest `d1`-degree.
pub fn lt_rank(key: (i64, i64)) -> (i64, i64) {
    (key.1, key.0)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZSeries {
    field: KField,
    terms: BTreeMap<(i64, i64), KElem>,
    /// `None`: exact Laurent polynomial. `Some(t)`: terms with `d2 < t` are
    /// unknown and have been dropped.
    tail_floor: Option<i64>,
    /// Set when terms at the top of the `d2` range were discarded; lowest
    /// terms and valuations are then uncertifiable.
    head_clipped: bool,
    /// Set when `d1`-degrees beyond a cap were discarded somewhere upstream.
    /// Lowest terms remain usable (the `d2`-major order decides first);
    /// only the `d1` tie-break could in principle be affected, and reports
    /// carry the flag.
    d1_clipped: bool,
}

impl ZSeries {
    pub fn zero(field: &KField) -> Self {
        ZSeries {
            field: field.clone(),
            terms: BTreeMap::new(),
            tail_floor: None,
            head_clipped: false,
            d1_clipped: false,
        }
    }

    pub fn one(field: &KField) -> Self {
        Self::monomial(field, field.one(), 0, 0)
    }

    /// `c * d1^i * d2^s` as an exact monomial.
    pub fn monomial(field: &KField, c: KElem, i: i64, s: i64) -> Self {
        let mut z = Self::zero(field);
        if !c.is_zero() {
            z.terms.insert((i, s), c);
        }
        z
    }

    pub fn from_terms<I>(field: &KField, terms: I) -> Self
    where
        I: IntoIterator<Item = ((i64, i64), KElem)>,
    {
        let mut z = Self::zero(field);
        for (k, c) in terms {
            z.add_term(k, c);
        }
        z
    }

    pub fn field(&self) -> &KField {
        &self.field
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(i64, i64), &KElem)> {
        self.terms.iter()
    }

    pub fn coeff(&self, i: i64, s: i64) -> KElem {
        self.terms
            .get(&(i, s))
            .cloned()
            .unwrap_or_else(|| self.field.zero())
    }

    pub fn is_zero_stored(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_exact(&self) -> bool {
        self.tail_floor.is_none() && !self.head_clipped
    }

    pub fn tail_floor(&self) -> Option<i64> {
        self.tail_floor
    }

    pub fn head_clipped(&self) -> bool {
        self.head_clipped
    }

    pub fn d1_clipped(&self) -> bool {
        self.d1_clipped
    }

    /// Record upstream loss of high `d1`-degrees.
    pub fn mark_d1_clipped(&self) -> ZSeries {
        let mut out = self.clone();
        out.d1_clipped = true;
        out
    }

    pub fn has_negative_d1(&self) -> bool {
        self.terms.keys().any(|&(i, _)| i < 0)
    }

    fn add_term(&mut self, key: (i64, i64), c: KElem) {
        if c.is_zero() {
            return;
        }
        if let Some(t) = self.tail_floor {
            if key.1 < t {
                return;
            }
        }
        let v = match self.terms.remove(&key) {
            Some(old) => &old + &c,
            None => c,
        };
        if !v.is_zero() {
            self.terms.insert(key, v);
        }
    }

    fn merge_floor(a: Option<i64>, b: Option<i64>) -> Option<i64> {
        match (a, b) {
            (None, x) | (x, None) => x,
            (Some(p), Some(q)) => Some(p.max(q)),
        }
    }

    fn drop_below_floor(&mut self) {
        if let Some(t) = self.tail_floor {
            self.terms.retain(|&(_, s), _| s >= t);
        }
    }

    pub fn add(&self, other: &ZSeries) -> ZSeries {
        assert!(self.field == *other.field(), "mixed-session symbols");
        let mut out = self.clone();
        out.tail_floor = Self::merge_floor(self.tail_floor, other.tail_floor);
        out.head_clipped = self.head_clipped || other.head_clipped;
        out.d1_clipped = self.d1_clipped || other.d1_clipped;
        out.drop_below_floor();
        for (&k, c) in &other.terms {
            out.add_term(k, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &ZSeries) -> ZSeries {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> ZSeries {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = c.neg();
        }
        out
    }

    pub fn scale(&self, c: &KElem) -> ZSeries {
        if c.is_zero() {
            let mut out = ZSeries::zero(&self.field);
            out.tail_floor = self.tail_floor;
            out.head_clipped = self.head_clipped;
            out.d1_clipped = self.d1_clipped;
            return out;
        }
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v = &*v * c;
        }
        out
    }

    /// Top `d2`-degree among retained terms.
    pub fn top_d2(&self) -> Option<i64> {
        self.terms.keys().map(|&(_, s)| s).max()
    }

    /// Commutative product; the unknown tail of one factor pollutes the
    /// product from its floor plus the other factor's top degree downward.
    pub fn mul(&self, other: &ZSeries) -> ZSeries {
        assert!(self.field == *other.field(), "mixed-session symbols");
        let floor = {
            let f1 = self
                .tail_floor
                .and_then(|t| other.top_d2().map(|d| t + d));
            let f2 = other
                .tail_floor
                .and_then(|t| self.top_d2().map(|d| t + d));
            Self::merge_floor(f1, f2)
        };
        let mut out = ZSeries::zero(&self.field);
        out.tail_floor = floor;
        out.head_clipped = self.head_clipped || other.head_clipped;
        out.d1_clipped = self.d1_clipped || other.d1_clipped;
        for (&(i1, s1), c1) in &self.terms {
            for (&(i2, s2), c2) in &other.terms {
                out.add_term((i1 + i2, s1 + s2), c1 * c2);
            }
        }
        out
    }

    pub fn pow(&self, n: u32) -> ZSeries {
        let mut acc = ZSeries::one(&self.field);
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// Drop terms with `d2` below the floor, recording the loss.
    pub fn clip_tail(&self, d2_min: i64) -> ZSeries {
        let mut out = self.clone();
        out.tail_floor = Self::merge_floor(out.tail_floor, Some(d2_min));
        out.drop_below_floor();
        out
    }

    /// Drop terms with `d2` above the cap; marks the head as clipped if
    /// anything was lost.
    pub fn clip_head(&self, d2_max: i64) -> ZSeries {
        let mut out = self.clone();
        let before = out.terms.len();
        out.terms.retain(|&(_, s), _| s <= d2_max);
        if out.terms.len() != before {
            out.head_clipped = true;
        }
        out
    }

    /// Record that head-side content was lost elsewhere (e.g. during a
    /// windowed operator computation this symbol was read from).
    pub fn mark_head_clipped(&self) -> ZSeries {
        let mut out = self.clone();
        out.head_clipped = true;
        out
    }

    /// The lowest term under the anti-lexicographic order (highest `d2`,
    /// then highest `d1`). Certified as long as the head was never clipped.
    pub fn lowest_term(&self) -> Result<((i64, i64), KElem)> {
        if self.head_clipped {
            return Err(Error::Indeterminate(
                "lowest term after head clipping".into(),
            ));
        }
        self.terms
            .iter()
            .max_by_key(|(&k, _)| lt_rank(k))
            .map(|(&k, c)| (k, c.clone()))
            .ok_or_else(|| Error::Indeterminate("lowest term of zero".into()))
    }

    /// Equality of retained terms at or above the given `d2` floor.
    pub fn eq_from(&self, other: &ZSeries, d2_min: i64) -> bool {
        let ok = |z: &ZSeries| z.tail_floor.map_or(true, |t| t <= d2_min);
        if !ok(self) || !ok(other) {
            return false;
        }
        let d = self.sub(other);
        d.terms.keys().all(|&(_, s)| s < d2_min)
    }

    /// Canonical flat text, terms by `d2` descending then `d1` descending.
    pub fn to_canonical_string(&self) -> String {
        let mut keys: Vec<(i64, i64)> = self.terms.keys().cloned().collect();
        keys.sort_by_key(|&k| core::cmp::Reverse(lt_rank(k)));
        if keys.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        for (idx, key) in keys.iter().enumerate() {
            let (neg, mag) = scalar_magnitude(&self.terms[key]);
            if idx == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            out.push_str(&monomial_text(&mag, key.0, key.1));
        }
        out
    }
}

fn monomial_text(mag: &str, i: i64, s: i64) -> String {
    let mut parts: Vec<String> = Vec::new();
    if mag != "1" || (i == 0 && s == 0) {
        parts.push(mag.to_string());
    }
    for (name, e) in [("d1", i), ("d2", s)] {
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

    fn q() -> KField {
        KField::rational()
    }

    #[test]
    fn lowest_term_prefers_high_d2() {
        let k = q();
        // z1^-1 z2^-1 + z2 = d1*d2 + d2^-1
        let z = ZSeries::from_terms(
            &k,
            [((1, 1), k.one()), ((0, -1), k.one())],
        );
        assert_eq!(z.lowest_term().unwrap().0, (1, 1));
        // 1 + z2 = 1 + d2^-1
        let w = ZSeries::from_terms(&k, [((0, 0), k.one()), ((0, -1), k.one())]);
        assert_eq!(w.lowest_term().unwrap().0, (0, 0));
        // z2^3 = d2^-3 alone
        let v = ZSeries::monomial(&k, k.one(), 0, -3);
        assert_eq!(v.lowest_term().unwrap().0, (0, -3));
    }

    #[test]
    fn tail_floor_propagates_through_products() {
        let k = q();
        let mut a = ZSeries::from_terms(&k, [((0, 0), k.one()), ((0, -1), k.one())]);
        a = a.clip_tail(-3);
        let b = ZSeries::monomial(&k, k.one(), 0, 2);
        let p = a.mul(&b);
        assert_eq!(p.tail_floor(), Some(-1));
        assert_eq!(p.coeff(0, 2), k.one());
    }

    #[test]
    fn head_clip_poisons_lowest_term() {
        let k = q();
        let z = ZSeries::from_terms(&k, [((0, 3), k.one()), ((0, 0), k.one())]);
        let clipped = z.clip_head(2);
        assert!(clipped.lowest_term().is_err());
    }

    #[test]
    fn canonical_text() {
        let k = q();
        let z = ZSeries::from_terms(
            &k,
            [((1, 1), k.one()), ((0, -1), k.from_int(-2)), ((0, 0), k.one())],
        );
        assert_eq!(z.to_canonical_string(), "d1*d2 + 1 - 2*d2^-1");
    }
}
