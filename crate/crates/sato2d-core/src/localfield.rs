//! The `k[[u]]((t))` side: the rank-two valuation, the monomial transport
//! from symbol space, filtration dimension tables with their graded
//! quotients, exact second-difference growth fitting, and the GCD invariants
//! that decide strong admissibility.
//!
//! The transport sends `z1^-i z2^s` to `u^i t^(s-i)`; in operator keys
//! `(d1, d2) = (i, s)` the image monomial is `u^i t^(-i-s)`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;


use crate::error::{Error, Result};
use crate::field::{KElem, KField, Rat};
use crate::zseries::ZSeries;

/// Element of `k[[u]]((t))` with finitely many retained terms, keyed by
/// `(u-exponent, t-exponent)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UVElem {
    field: KField,
    terms: BTreeMap<(i64, i64), KElem>,
    exact: bool,
}

impl UVElem {
    pub fn zero(field: &KField) -> Self {
        UVElem {
            field: field.clone(),
            terms: BTreeMap::new(),
            exact: true,
        }
    }

    pub fn monomial(field: &KField, c: KElem, m: i64, l: i64) -> Self {
        let mut e = Self::zero(field);
        if !c.is_zero() {
            e.terms.insert((m, l), c);
        }
        e
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(i64, i64), &KElem)> {
        self.terms.iter()
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn coeff(&self, m: i64, l: i64) -> KElem {
        self.terms
            .get(&(m, l))
            .cloned()
            .unwrap_or_else(|| self.field.zero())
    }

    pub fn mul(&self, other: &UVElem) -> UVElem {
        let mut out = UVElem::zero(&self.field);
        out.exact = self.exact && other.exact;
        for (&(m1, l1), c1) in &self.terms {
            for (&(m2, l2), c2) in &other.terms {
                let key = (m1 + m2, l1 + l2);
                let v = match out.terms.remove(&key) {
                    Some(old) => &old + &(c1 * c2),
                    None => c1 * c2,
                };
                if !v.is_zero() {
                    out.terms.insert(key, v);
                }
            }
        }
        out
    }

    /// The rank-two valuation: `l` is the least `t`-exponent present, `m`
    /// the least `u`-exponent at that level. Only certifiable on exact
    /// elements.
    pub fn nu(&self) -> Result<(i64, i64)> {
        if !self.exact {
            return Err(Error::Indeterminate(
                "valuation of a window-truncated element".into(),
            ));
        }
        let l = self
            .terms
            .keys()
            .map(|&(_, l)| l)
            .min()
            .ok_or_else(|| Error::Indeterminate("valuation of zero".into()))?;
        let m = self
            .terms
            .keys()
            .filter(|&&(_, tl)| tl == l)
            .map(|&(m, _)| m)
            .min()
            .expect("level nonempty");
        Ok((m, l))
    }

    pub fn nu_t(&self) -> Result<i64> {
        Ok(self.nu()?.1)
    }
}

/// Monomial transport `z1^-i z2^s -> u^i t^(s-i)`.
pub fn psi1(z: &ZSeries) -> Result<UVElem> {
    let field = z.field().clone();
    let mut out = UVElem::zero(&field);
    out.exact = z.is_exact();
    for (&(i, s), c) in z.terms() {
        if i < 0 {
            return Err(Error::Malformed(format!(
                "negative d1 exponent {i} is outside the symbol ring"
            )));
        }
        // (d1, d2) = (i, s) is z1^-i z2^-s, whose image is u^i t^(-i-s).
        out.terms.insert((i, -i - s), c.clone());
    }
    Ok(out)
}

/// Inverse transport, defined on elements with nonnegative `u`-exponents.
pub fn psi1_inv(e: &UVElem) -> Result<ZSeries> {
    let field = e.field.clone();
    let mut terms = Vec::new();
    for (&(m, l), c) in &e.terms {
        if m < 0 {
            return Err(Error::Malformed(format!(
                "u-exponent {m} is negative: not in the image"
            )));
        }
        terms.push(((m, -l - m), c.clone()));
    }
    Ok(ZSeries::from_terms(&field, terms))
}

/// Leading `(m, l)` pair of a symbol, through the transport: `-l` is the
/// maximal total degree, `m` the minimal `d1`-exponent among terms of that
/// degree. For tail-truncated elements the verdict is only accepted when no
/// unknown term (bounded in `d1` by the window cap) could beat it.
pub fn leading_uv(z: &ZSeries, d1_cap: u32) -> Result<(i64, i64)> {
    if z.head_clipped() {
        return Err(Error::Indeterminate("leading pair after head clipping".into()));
    }
    let deg = z
        .terms()
        .map(|(&(i, s), _)| i + s)
        .max()
        .ok_or_else(|| Error::Indeterminate("leading pair of zero".into()))?;
    if let Some(tf) = z.tail_floor() {
        // Unknown terms have d2 < tf and d1 <= cap, so total degree below
        // cap + tf; the retained maximum must beat that.
        if deg < i64::from(d1_cap) + tf {
            return Err(Error::WindowExhausted(format!(
                "leading degree {deg} not certifiable: tail floor {tf} with d1 cap {d1_cap}"
            )));
        }
    }
    let m = z
        .terms()
        .filter(|(&(i, s), _)| i + s == deg)
        .map(|(&(i, _), _)| i)
        .min()
        .expect("degree attained");
    Ok((m, -deg))
}

/// What generates the span in a filtration table.
pub enum SpanStructure<'a> {
    /// Monomials in the generators (a unital subalgebra).
    Ring,
    /// Module generators times ring monomials.
    Module { ring_gens: &'a [ZSeries] },
}

/// Leading data for one echelon basis element.
#[derive(Debug, Clone)]
pub struct BasisLine {
    pub leading: (i64, i64),
    pub level: u32,
    pub element: ZSeries,
}

/// Per-level dimensions of the induced filtration, with the leading pairs
/// entering at each level.
#[derive(Debug, Clone)]
pub struct SpanTable {
    pub r: u32,
    pub n_max: u32,
    pub degree_budget: u32,
    /// `dims[n]` is the dimension of the level-`n` filtration subspace.
    pub dims: Vec<usize>,
    pub basis: Vec<BasisLine>,
}

impl SpanTable {
    /// Leading `u`-exponents of the basis of the level-`n` graded quotient.
    pub fn graded_quotient(&self, n: u32) -> Result<Vec<i64>> {
        if n > self.n_max {
            return Err(Error::Domain(format!(
                "level {n} outside the table range 0..={}",
                self.n_max
            )));
        }
        let mut ms: Vec<i64> = self
            .basis
            .iter()
            .filter(|b| b.level == n)
            .map(|b| b.leading.0)
            .collect();
        ms.sort_unstable();
        Ok(ms)
    }
}

fn level_of(l: i64, r: u32) -> u32 {
    // Least n >= 0 with l >= -n r.
    if l >= 0 {
        0
    } else {
        let r = i64::from(r);
        (((-l) + r - 1) / r) as u32
    }
}

/// Exact degree of a generator through the transport (`-nu_t`), required
/// positive for ring generators.
fn gen_weight(g: &ZSeries, what: &str) -> Result<u32> {
    if !g.is_exact() {
        return Err(Error::Indeterminate(format!(
            "{what} generator is window-truncated; spans need exact generators"
        )));
    }
    let (_, l) = leading_uv(g, 0)?;
    if l >= 0 {
        return Err(Error::Domain(format!(
            "{what} generator does not lower the filtration (nu_t = {l})"
        )));
    }
    Ok((-l) as u32)
}

/// Enumerate products `prod gens[i]^(e_i)` with total weight at most
/// `budget`, including the empty product.
fn monomial_products(
    field: &KField,
    gens: &[ZSeries],
    weights: &[u32],
    budget: u32,
) -> Vec<ZSeries> {
    let mut out = Vec::new();
    let mut stack = vec![(0usize, ZSeries::one(field), 0u32)];
    while let Some((idx, acc, used)) = stack.pop() {
        if idx == gens.len() {
            out.push(acc);
            continue;
        }
        let w = weights[idx].max(1);
        let mut pw = acc;
        let mut spent = used;
        loop {
            stack.push((idx + 1, pw.clone(), spent));
            spent += w;
            if spent > budget {
                break;
            }
            pw = pw.mul(&gens[idx]);
        }
    }
    out
}

/// Echelon reduction on leading pairs. Returns the reduced basis; elements
/// that reduce to zero are dropped.
fn echelonize(elements: Vec<ZSeries>, r: u32, d1_cap: u32) -> Result<Vec<BasisLine>> {
    let mut basis: BTreeMap<(i64, i64), ZSeries> = BTreeMap::new();
    for elem in elements {
        let mut cur = elem;
        loop {
            if cur.is_zero_stored() {
                if cur.is_exact() {
                    break; // dependent
                }
                return Err(Error::WindowExhausted(
                    "reduction emptied the retained window".into(),
                ));
            }
            let lead = leading_uv(&cur, d1_cap)?;
            match basis.get(&lead) {
                None => {
                    basis.insert(lead, cur);
                    break;
                }
                Some(b) => {
                    let (kb, _) = lead_term(b, d1_cap)?;
                    let (kc, _) = lead_term(&cur, d1_cap)?;
                    debug_assert_eq!(kb, kc);
                    let cb = b.coeff(kb.0, kb.1);
                    let cc = cur.coeff(kc.0, kc.1);
                    cur = cur.sub(&b.scale(&cc.checked_div(&cb).expect("unit lead")));
                }
            }
        }
    }
    let mut lines: Vec<BasisLine> = basis
        .into_iter()
        .map(|(leading, element)| BasisLine {
            leading,
            level: level_of(leading.1, r),
            element,
        })
        .collect();
    lines.sort_by_key(|b| (b.level, b.leading));
    Ok(lines)
}

/// The leading monomial key in symbol coordinates, consistent with
/// `leading_uv`.
fn lead_term(z: &ZSeries, d1_cap: u32) -> Result<((i64, i64), (i64, i64))> {
    let (m, l) = leading_uv(z, d1_cap)?;
    // Monomial with d1 = m at total degree -l: d2 = -l - m.
    Ok(((m, -l - m), (m, l)))
}

/// Dimensions of the filtration induced on the span of generator products.
pub fn filtration_dims(
    gens: &[ZSeries],
    structure: SpanStructure<'_>,
    n_max: u32,
    r: u32,
    d1_cap: u32,
) -> Result<SpanTable> {
    assert!(r >= 1, "rank parameter must be positive");
    let field = gens
        .first()
        .map(|g| g.field().clone())
        .or_else(|| match structure {
            SpanStructure::Module { ring_gens } => {
                ring_gens.first().map(|g| g.field().clone())
            }
            SpanStructure::Ring => None,
        })
        .ok_or_else(|| Error::Domain("no generators".into()))?;
    let budget = n_max * r;
    let elements: Vec<ZSeries> = match structure {
        SpanStructure::Ring => {
            let weights = gens
                .iter()
                .map(|g| gen_weight(g, "ring"))
                .collect::<Result<Vec<_>>>()?;
            monomial_products(&field, gens, &weights, budget)
        }
        SpanStructure::Module { ring_gens } => {
            let weights = ring_gens
                .iter()
                .map(|g| gen_weight(g, "ring"))
                .collect::<Result<Vec<_>>>()?;
            let monos = monomial_products(&field, ring_gens, &weights, budget);
            let mut out = Vec::new();
            for w in gens {
                for m in &monos {
                    out.push(w.mul(m));
                }
            }
            out
        }
    };
    let basis = echelonize(elements, r, d1_cap)?;
    let mut dims = vec![0usize; n_max as usize + 1];
    for line in &basis {
        if line.level <= n_max {
            for n in line.level..=n_max {
                dims[n as usize] += 1;
            }
        }
    }
    Ok(SpanTable {
        r,
        n_max,
        degree_budget: budget,
        dims,
        basis,
    })
}

/// Exact quadratic-growth fit over samples at stride `d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HilbertFit {
    pub c2: Rat,
    /// Inclusive range of sample indices whose second difference is constant.
    pub stable_range: (u32, u32),
    pub integral: bool,
}

/// Fit the eventual second difference of `dims(n d)`; `c2 = diff2 / d^2`.
pub fn hilbert_fit(table: &SpanTable, d: u32) -> Result<HilbertFit> {
    assert!(d >= 1);
    let samples: Vec<i64> = (0..)
        .map(|j| j * d)
        .take_while(|&n| n <= table.n_max)
        .map(|n| table.dims[n as usize] as i64)
        .collect();
    if samples.len() < 4 {
        return Err(Error::NoFit(format!(
            "need at least 4 samples at stride {d}, have {}",
            samples.len()
        )));
    }
    let diff2: Vec<i64> = samples
        .windows(3)
        .map(|w| w[2] - 2 * w[1] + w[0])
        .collect();
    let last = *diff2.last().expect("nonempty");
    let mut start = diff2.len() - 1;
    while start > 0 && diff2[start - 1] == last {
        start -= 1;
    }
    let stable = diff2.len() - start;
    if stable < 2 {
        return Err(Error::NoFit(
            "second difference is not eventually constant in the table range".into(),
        ));
    }
    let c2 = Rat::new(last.into(), i64::from(d * d).into());
    Ok(HilbertFit {
        integral: c2.is_integer(),
        stable_range: (start as u32, (diff2.len() - 1) as u32),
        c2,
    })
}

/// GCD invariants of the generated monoid of products.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NaInvariants {
    pub n: u64,
    pub n_tilde: u64,
    pub strongly_admissible: bool,
    pub rank: Option<u64>,
    /// Degree bound the products were enumerated up to.
    pub bound: u32,
}

/// `N` = gcd of `|nu_t|` over products with `nu = (0, *)`, `N~` over all
/// products, strong admissibility additionally needs an element with
/// `nu = (1, *)`; computed over generator products up to the bound.
pub fn invariants_na(gens: &[ZSeries], degree_bound: Option<u32>) -> Result<NaInvariants> {
    if gens.is_empty() {
        return Err(Error::Domain("no generators".into()));
    }
    let field = gens[0].field().clone();
    let weights = gens
        .iter()
        .map(|g| gen_weight(g, "ring"))
        .collect::<Result<Vec<_>>>()?;
    let bound = degree_bound.unwrap_or_else(|| 3 * weights.iter().copied().max().unwrap_or(1));
    let products = monomial_products(&field, gens, &weights, bound);
    let mut n_gcd: u64 = 0;
    let mut nt_gcd: u64 = 0;
    let mut has_m1 = false;
    for p in &products {
        if p.is_zero_stored() {
            continue;
        }
        let (m, l) = leading_uv(p, 0)?;
        if l == 0 {
            continue; // the empty product
        }
        let w = l.unsigned_abs();
        nt_gcd = gcd(nt_gcd, w);
        if m == 0 {
            n_gcd = gcd(n_gcd, w);
        }
        if m == 1 {
            has_m1 = true;
        }
    }
    let strongly = has_m1 && n_gcd == nt_gcd && n_gcd != 0;
    Ok(NaInvariants {
        n: n_gcd,
        n_tilde: nt_gcd,
        strongly_admissible: strongly,
        rank: if strongly { Some(n_gcd) } else { None },
        bound,
    })
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::rat_int;

    fn q() -> KField {
        KField::rational()
    }

    fn mono(k: &KField, i: i64, s: i64) -> ZSeries {
        ZSeries::monomial(k, k.one(), i, s)
    }

    #[test]
    fn transport_of_monomials() {
        let k = q();
        // z1^-1 = d1 -> u t^-1
        let z1inv = mono(&k, 1, 0);
        let img = psi1(&z1inv).unwrap();
        assert_eq!(img.coeff(1, -1), k.one());
        // z2 = d2^-1 -> t
        let z2 = mono(&k, 0, -1);
        assert_eq!(psi1(&z2).unwrap().coeff(0, 1), k.one());
        // z1^-i z2^-j = d1^i d2^j -> u^i t^(-i-j)
        let m = mono(&k, 2, 3);
        assert_eq!(psi1(&m).unwrap().coeff(2, -5), k.one());
        // inverse transport round trip
        let back = psi1_inv(&psi1(&m).unwrap()).unwrap();
        assert_eq!(back, m);
        // negative u-exponent is not in the image
        let bad = UVElem::monomial(&k, k.one(), -1, 0);
        assert!(psi1_inv(&bad).is_err());
    }

    #[test]
    fn valuation_examples() {
        let k = q();
        let t = UVElem::monomial(&k, k.one(), 0, 1);
        assert_eq!(t.nu().unwrap(), (0, 1));
        // u t^-1 + t
        let mut e = UVElem::monomial(&k, k.one(), 1, -1);
        e = {
            let mut m = e.clone();
            m.terms.insert((0, 1), k.one());
            m
        };
        assert_eq!(e.nu().unwrap(), (1, -1));
        assert_eq!(e.nu_t().unwrap(), -1);
        assert!(UVElem::zero(&k).nu().is_err());
    }

    #[test]
    fn valuation_is_multiplicative() {
        let k = q();
        let a = {
            let mut e = UVElem::monomial(&k, k.one(), 1, -1);
            e.terms.insert((0, 2), k.from_int(3));
            e
        };
        let b = {
            let mut e = UVElem::monomial(&k, k.one(), 0, -2);
            e.terms.insert((2, 0), k.from_int(-1));
            e
        };
        let (ma, la) = a.nu().unwrap();
        let (mb, lb) = b.nu().unwrap();
        assert_eq!(a.mul(&b).nu().unwrap(), (ma + mb, la + lb));
    }

    fn cuspidal_gens(k: &KField) -> Vec<ZSeries> {
        vec![mono(k, 0, 2), mono(k, 0, 3), mono(k, 1, 0)]
    }

    fn nodal_gens(k: &KField) -> Vec<ZSeries> {
        // d2^2, d2^3 + 3 d1^2 d2, d1
        let g2 = ZSeries::from_terms(
            k,
            [((0, 3), k.one()), ((2, 1), k.from_int(3))],
        );
        vec![mono(k, 0, 2), g2, mono(k, 1, 0)]
    }

    /// Independent oracle: all monomials d1^a d2^b with b != 1, a + b <= n.
    fn cuspidal_count(n: u32) -> usize {
        let mut c = 0;
        for a in 0..=n {
            for b in 0..=(n - a) {
                if b != 1 {
                    c += 1;
                }
            }
        }
        c
    }

    #[test]
    fn cuspidal_ring_dimensions() {
        let k = q();
        let table =
            filtration_dims(&cuspidal_gens(&k), SpanStructure::Ring, 12, 1, 0).unwrap();
        assert_eq!(table.dims[0], 1);
        for n in 1..=12u32 {
            let formula = ((n + 1) * (n + 2) / 2 - n) as usize;
            assert_eq!(table.dims[n as usize], formula, "level {n}");
            assert_eq!(table.dims[n as usize], cuspidal_count(n), "oracle {n}");
        }
    }

    #[test]
    fn full_polynomial_ring_dimensions() {
        let k = q();
        let gens = vec![mono(&k, 1, 0), mono(&k, 0, 1)];
        let table = filtration_dims(&gens, SpanStructure::Ring, 8, 1, 0).unwrap();
        for n in 0..=8u32 {
            assert_eq!(table.dims[n as usize], ((n + 1) * (n + 2) / 2) as usize);
        }
    }

    #[test]
    fn nodal_ring_dimensions() {
        let k = q();
        let table =
            filtration_dims(&nodal_gens(&k), SpanStructure::Ring, 12, 1, 0).unwrap();
        assert_eq!(table.dims[0], 1);
        for n in 1..=12u32 {
            let formula = ((n + 1) * (n + 2) / 2 - n) as usize;
            assert_eq!(table.dims[n as usize], formula, "level {n}");
        }
    }

    #[test]
    fn graded_quotients() {
        let k = q();
        // Trivial pair: full polynomial ring at level n has u-exponents 0..=n.
        let gens = vec![mono(&k, 1, 0), mono(&k, 0, 1)];
        let table = filtration_dims(&gens, SpanStructure::Ring, 5, 1, 0).unwrap();
        assert_eq!(table.graded_quotient(3).unwrap(), vec![0, 1, 2, 3]);

        let cusp = filtration_dims(&cuspidal_gens(&k), SpanStructure::Ring, 6, 1, 0).unwrap();
        assert_eq!(cusp.graded_quotient(1).unwrap(), vec![1]);
        // At level n >= 2 every slot except m = n - 1 is present.
        for n in 2..=6u32 {
            let ms = cusp.graded_quotient(n).unwrap();
            let expect: Vec<i64> = (0..=i64::from(n))
                .filter(|&m| m != i64::from(n) - 1)
                .collect();
            assert_eq!(ms, expect, "level {n}");
        }
        assert!(cusp.graded_quotient(7).is_err());
    }

    #[test]
    fn hilbert_fits() {
        let k = q();
        let full = filtration_dims(
            &vec![mono(&k, 1, 0), mono(&k, 0, 1)],
            SpanStructure::Ring,
            8,
            1,
            0,
        )
        .unwrap();
        let fit = hilbert_fit(&full, 1).unwrap();
        assert_eq!(fit.c2, rat_int(1));
        assert!(fit.integral);

        let cusp = filtration_dims(&cuspidal_gens(&k), SpanStructure::Ring, 12, 1, 0).unwrap();
        assert_eq!(hilbert_fit(&cusp, 1).unwrap().c2, rat_int(1));

        // gens {d1, d2^2}: no constant second difference at stride 1, and
        // c2 = 1/2 at the natural stride 2 (flagged non-integral).
        let gens = vec![mono(&k, 1, 0), mono(&k, 0, 2)];
        let table = filtration_dims(&gens, SpanStructure::Ring, 12, 1, 0).unwrap();
        assert!(hilbert_fit(&table, 1).is_err());
        let fit2 = hilbert_fit(&table, 2).unwrap();
        assert_eq!(fit2.c2, crate::field::rat(1, 2));
        assert!(!fit2.integral);
    }

    #[test]
    fn gcd_invariants() {
        let k = q();
        let inv = invariants_na(&cuspidal_gens(&k), None).unwrap();
        assert_eq!((inv.n, inv.n_tilde), (1, 1));
        assert!(inv.strongly_admissible);
        assert_eq!(inv.rank, Some(1));

        let inv2 = invariants_na(&vec![mono(&k, 0, 2), mono(&k, 0, 3)], None).unwrap();
        assert!(!inv2.strongly_admissible);
        assert_eq!(inv2.rank, None);

        let inv3 = invariants_na(&vec![mono(&k, 0, 2), mono(&k, 2, 0)], None).unwrap();
        assert_eq!((inv3.n, inv3.n_tilde), (2, 2));
        assert!(!inv3.strongly_admissible);
    }

    #[test]
    fn module_spans_with_truncated_generators() {
        let k = q();
        // w00 = 1 + z2 with an unknown tail below d2^-6, over the cuspidal ring.
        let w = ZSeries::from_terms(&k, [((0, 0), k.one()), ((0, -1), k.one())])
            .clip_tail(-6);
        let ring = cuspidal_gens(&k);
        let table = filtration_dims(
            &[w],
            SpanStructure::Module { ring_gens: &ring },
            2,
            1,
            0,
        )
        .unwrap();
        assert_eq!(table.dims[0], 1);
        // Deep levels reduce colliding products into the unknown tail zone.
        assert!(filtration_dims(
            &[ZSeries::from_terms(&k, [((0, 0), k.one())]).clip_tail(-2)],
            SpanStructure::Module { ring_gens: &ring },
            6,
            1,
            0,
        )
        .is_err());
    }
}
