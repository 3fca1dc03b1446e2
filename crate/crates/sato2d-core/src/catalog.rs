//! Built-in worked examples: the cuspidal and nodal spectral-curve rings
//! with their Baker-Akhiezer dressing data, plus metadata for the
//! non-spectral counterexample ring.
//!
//! Both examples build `S = 1 + w d2^-1` from a closed-form `w` whose
//! constant slice is the input polynomial `P(d1)` (degree at most one), and
//! generate the operator ring as `S . a . S^-1` over the stabilizer
//! symbols. The characteristic identity behind both: `w` satisfies
//! `dw/dx2 = w^2 - a^2` (with `a^2 = 0` in the cuspidal case, `a^2 = -3 d1^2`
//! in the nodal case), which makes `S d2^2 S^-1 = d2^2 - 2 dw/dx2` exact on
//! every sound level, while the mirrored conjugation agrees with
//! `d2^2 + 2 dw/dx2` down to level `d2^-1`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::{rat_int, KElem, KField, Rat};
use crate::opalg::{EOp, Trunc};
use crate::schur::{
    d1_saturated, is_pdo_in_window, RingPresentation, SchurPair,
};
use crate::series::{Var, XSeries};
use crate::zseries::ZSeries;

/// Polynomial `P(d1)` of degree at most one over the session field.
#[derive(Debug, Clone)]
pub struct P1Poly {
    pub c0: KElem,
    pub c1: KElem,
}

impl P1Poly {
    pub fn constant(field: &KField, c0: KElem) -> Self {
        P1Poly {
            c0,
            c1: field.zero(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.c0.is_zero() && self.c1.is_zero()
    }

    pub fn is_constant(&self) -> bool {
        self.c1.is_zero()
    }

    /// `P` as a level-0 multiplication-free operator `c0 + c1 d1`.
    fn as_op(&self, field: &KField, trunc: Trunc, prec: u32) -> EOp {
        let mut op = EOp::zero(field, trunc);
        if !self.c0.is_zero() {
            op.set_term(0, 0, XSeries::constant(field, self.c0.clone(), prec));
        }
        if !self.c1.is_zero() {
            op.set_term(1, 0, XSeries::constant(field, self.c1.clone(), prec));
        }
        op
    }
}

/// One named verification performed during a build.
#[derive(Debug, Clone)]
pub struct Verification {
    pub name: String,
    pub passed: bool,
    pub window_limited: bool,
}

/// Output of an example build.
#[derive(Debug)]
pub struct ExampleBuild {
    pub pair: SchurPair,
    pub s: EOp,
    pub ring: RingPresentation,
    pub verifications: Vec<Verification>,
    /// Set when the ring is genuinely completed (unbounded `d1` content);
    /// happens exactly for non-constant `P`.
    pub completed_case: bool,
}

impl ExampleBuild {
    pub fn all_passed(&self) -> bool {
        self.verifications.iter().all(|v| v.passed)
    }
}

fn internal_prec(trunc: Trunc) -> u32 {
    trunc.nx + trunc.d2_span() as u32 + 4
}

/// `x2` as a series at the working precision.
fn x2s(field: &KField, prec: u32) -> XSeries {
    XSeries::monomial(field, field.one(), 0, 1, prec)
}

/// Coefficient-wise `x2`-derivative of a level-0 operator.
fn d_x2(op: &EOp) -> Result<EOp> {
    let mut out = EOp::zero(op.field(), op.trunc());
    for (&(i, s), f) in op.terms() {
        let d = f.diff(Var::X2)?;
        if !(d.is_zero_stored() && d.is_exact()) {
            out.set_term(i, s, d);
        }
    }
    Ok(out)
}

/// The constant slice (value at `x = 0`) of a level-0 operator.
fn constant_slice(op: &EOp) -> Result<ZSeries> {
    op.reduce_mod_x()
}

/// Verify the pair of closed-form conjugation identities shared by both
/// examples, given `S = 1 + w d2^-1` and `w' = dw/dx2`:
/// the mirrored conjugate equals `d2^2 - 2 w'` on all sound levels and the
/// direct conjugate equals `d2^2 + 2 w'` down to level `d2^-1`.
fn verify_conjugation_identities(
    s: &EOp,
    w_prime: &EOp,
    x_prec: u32,
    out: &mut Vec<Verification>,
) -> Result<()> {
    let field = s.field().clone();
    let trunc = s.trunc();
    let d2sq = EOp::d2_pow(&field, trunc, 2);
    let two_wp = w_prime.scale(&field.from_int(2));

    let s_inv = s.invert_unit()?;
    let mirror = s.compose(&d2sq).compose(&s_inv);
    let minus = d2sq.sub(&two_wp);
    let lo = mirror.level_floor().unwrap_or(trunc.s_min);
    out.push(Verification {
        name: "S d2^2 S^-1 = d2^2 - 2 dw/dx2 (all sound levels)".into(),
        passed: mirror.eq_in(&minus, x_prec, trunc.n1, (lo, trunc.s_max))?,
        window_limited: lo > trunc.s_min,
    });

    let conj = s_inv.compose(&d2sq).compose(s);
    let plus = d2sq.add(&two_wp);
    out.push(Verification {
        name: "S^-1 d2^2 S = d2^2 + 2 dw/dx2 (levels >= d2^-1)".into(),
        passed: conj.eq_in(&plus, x_prec, trunc.n1, (-1, trunc.s_max))?,
        window_limited: false,
    });
    Ok(())
}

/// Assemble the pair and ring shared by both examples.
fn assemble(
    field: &KField,
    trunc: Trunc,
    s: &EOp,
    a_syms: Vec<ZSeries>,
    verifications: Vec<Verification>,
) -> Result<ExampleBuild> {
    let s_inv = s.invert_unit()?;
    let mut gens = Vec::new();
    let mut completed = false;
    for a in &a_syms {
        // S . a . S^-1
        let g = s.compose(&EOp::lift(field, trunc, a)?).compose(&s_inv);
        if !is_pdo_in_window(&g) || d1_saturated(&g) {
            completed = true;
        }
        gens.push(g);
    }
    // Module generators: dressed staircase monomials.
    let bound = 3u32;
    let mut w_gens = Vec::new();
    for i in 0..=bound {
        for j in 0..=(bound - i) {
            let mon = ZSeries::monomial(field, field.one(), i64::from(i), i64::from(j));
            w_gens.push(EOp::lift(field, trunc, &mon)?.compose(s).reduce_mod_x()?);
        }
    }
    let ring = RingPresentation {
        normalized_pair: crate::schur::find_normalized_pair(&gens),
        gens,
        trunc,
        completed,
    };
    Ok(ExampleBuild {
        pair: SchurPair {
            a_gens: a_syms,
            w_gens,
            r: 1,
            window: trunc,
        },
        s: s.clone(),
        ring,
        verifications,
        completed_case: completed,
    })
}

/// Cuspidal family: `w = P (1 - x2 P)^-1`, `S = 1 + w d2^-1`, stabilizer
/// symbols `d2^2, d2^3, d1`.
pub fn build_ex_cuspidal(field: &KField, p: &P1Poly, trunc: Trunc) -> Result<ExampleBuild> {
    let prec = internal_prec(trunc);
    let p_op = p.as_op(field, trunc, prec);
    let one = EOp::one(field, trunc);
    let x2_op = EOp::from_xseries(trunc, x2s(field, prec));

    // w = P . (1 - x2 P)^-1; everything here commutes (x2 and d1 only).
    let denom = one.sub(&x2_op.compose(&p_op));
    let w = p_op.compose(&denom.invert_unit()?);
    let mut s = EOp::one(field, trunc);
    for (&(i, sl), f) in w.terms() {
        debug_assert_eq!(sl, 0);
        s.set_term(i, -1, f.clone());
    }

    let mut verifications = Vec::new();
    // w at x = 0 is P.
    let w0 = constant_slice(&w)?;
    let p_sym = p_op.reduce_mod_x()?;
    verifications.push(Verification {
        name: "w|_(x2=0) = P".into(),
        passed: w0.eq_from(&p_sym, 0),
        window_limited: false,
    });
    // Riccati shape: dw/dx2 = w^2 exactly at the working precision.
    let wp = d_x2(&w)?;
    let riccati = wp.sub(&w.compose(&w));
    verifications.push(Verification {
        name: "dw/dx2 = w^2".into(),
        passed: riccati.is_zero_stored(),
        window_limited: w.clipped_d1,
    });
    if !p.is_zero() {
        verify_conjugation_identities(&s, &wp, trunc.nx + 1, &mut verifications)?;
        // Closed form of the level-0 coefficient: 2 P^2 (1 - x2 P)^-2.
        let dinv = denom.invert_unit()?;
        let closed = p_op
            .compose(&p_op)
            .compose(&dinv)
            .compose(&dinv)
            .scale(&field.from_int(2));
        verifications.push(Verification {
            name: "2 dw/dx2 = 2 P^2 (1 - x2 P)^-2".into(),
            passed: wp.scale(&field.from_int(2)).eq_in(
                &closed,
                trunc.nx + 1,
                trunc.n1,
                (0, 0),
            )?,
            window_limited: w.clipped_d1,
        });
    }
    let a_syms = vec![
        ZSeries::monomial(field, field.one(), 0, 2),
        ZSeries::monomial(field, field.one(), 0, 3),
        ZSeries::monomial(field, field.one(), 1, 0),
    ];
    let build = assemble(field, trunc, &s, a_syms, verifications)?;
    if !build.all_passed() {
        return Err(Error::Malformed(format!(
            "cuspidal closed-form verification failed: {:?}",
            build
                .verifications
                .iter()
                .filter(|v| !v.passed)
                .map(|v| v.name.clone())
                .collect::<Vec<_>>()
        )));
    }
    Ok(build)
}

/// Nodal family in the denominator-cleared form:
/// `w = (-a sinh(x2 a) + P cosh(x2 a)) (cosh(x2 a) - P sinh(x2 a)/a)^-1`
/// with `a^2 = -3 d1^2`; all ingredients are polynomial in `d1^2`.
pub fn build_ex_nodal(field: &KField, p: &P1Poly, trunc: Trunc) -> Result<ExampleBuild> {
    let prec = internal_prec(trunc);
    let p_op = p.as_op(field, trunc, prec);

    // Power series in x2 with d1-polynomial coefficients:
    //   a sinh(x2 a)   = sum (-3)^(k+1) d1^(2k+2) x2^(2k+1) / (2k+1)!
    //   cosh(x2 a)     = sum (-3)^k     d1^(2k)   x2^(2k)   / (2k)!
    //   sinh(x2 a) / a = sum (-3)^k     d1^(2k)   x2^(2k+1) / (2k+1)!
    let mut a_sinh = EOp::zero(field, trunc);
    let mut cosh = EOp::zero(field, trunc);
    let mut sinh_over_a = EOp::zero(field, trunc);
    let mut minus3_pow = Rat::from_integer(1.into());
    let mut fact = Rat::from_integer(1.into()); // (2k)!
    for k in 0u32.. {
        let d1deg = 2 * k;
        let x2even = 2 * k;
        if x2even >= prec && d1deg > trunc.n1 {
            break;
        }
        // (2k)! from (2k-1)!: multiply by 2k when k > 0.
        if k > 0 {
            fact *= Rat::from_integer(i64::from(2 * k - 1).into());
            fact *= Rat::from_integer(i64::from(2 * k).into());
        }
        let even_coeff = &minus3_pow / &fact;
        if x2even < prec && d1deg <= trunc.n1 {
            cosh.set_term(
                d1deg,
                0,
                XSeries::monomial(field, field.from_rat(even_coeff.clone()), 0, x2even, prec),
            );
        }
        let odd_fact = &fact * Rat::from_integer(i64::from(2 * k + 1).into());
        let x2odd = 2 * k + 1;
        if x2odd < prec && d1deg <= trunc.n1 {
            sinh_over_a.set_term(
                d1deg,
                0,
                XSeries::monomial(
                    field,
                    field.from_rat(&minus3_pow / &odd_fact),
                    0,
                    x2odd,
                    prec,
                ),
            );
        }
        let next_pow = &minus3_pow * Rat::from_integer((-3).into());
        if x2odd < prec && d1deg + 2 <= trunc.n1 {
            a_sinh.set_term(
                d1deg + 2,
                0,
                XSeries::monomial(field, field.from_rat(&next_pow / &odd_fact), 0, x2odd, prec),
            );
        }
        minus3_pow = next_pow;
        if x2even >= prec {
            break;
        }
    }

    let numerator = a_sinh.neg().add(&p_op.compose(&cosh));
    let denom = cosh.sub(&p_op.compose(&sinh_over_a));
    let denom_inv = denom.invert_unit()?;
    let w = numerator.compose(&denom_inv);
    let mut s = EOp::one(field, trunc);
    for (&(i, sl), f) in w.terms() {
        debug_assert_eq!(sl, 0);
        s.set_term(i, -1, f.clone());
    }

    let mut verifications = Vec::new();
    // w at x2 = 0 equals P.
    let w0 = constant_slice(&w)?;
    verifications.push(Verification {
        name: "w|_(x2=0) = P".into(),
        passed: w0.eq_from(&p_op.reduce_mod_x()?, 0),
        window_limited: false,
    });
    // dw/dx2 at 0 equals P^2 + 3 d1^2 (the degree-two gluing polynomial).
    let wp = d_x2(&w)?;
    let wp0 = constant_slice(&wp)?;
    let gluing = {
        let psq = p_op.compose(&p_op).reduce_mod_x()?;
        psq.add(&ZSeries::monomial(field, field.from_int(3), 2, 0))
    };
    verifications.push(Verification {
        name: "dw/dx2|_(x2=0) = P^2 + 3 d1^2".into(),
        passed: wp0.eq_from(&gluing, 0),
        window_limited: false,
    });
    // Riccati identity with the curve parameter: dw/dx2 = w^2 + 3 d1^2.
    let a2 = EOp::monomial(field, trunc, field.from_int(-3), 2, 0);
    let residual = wp.sub(&w.compose(&w)).add(&a2);
    verifications.push(Verification {
        name: "dw/dx2 = w^2 + 3 d1^2".into(),
        passed: residual.is_zero_stored(),
        window_limited: w.clipped_d1 || a_sinh.clipped_d1 || cosh.clipped_d1,
    });
    // Cleared closed form: dw/dx2 = (P^2 + 3 d1^2) (cosh - P sinh/a)^-2.
    let closed = {
        let num = p_op
            .compose(&p_op)
            .add(&EOp::monomial(field, trunc, field.from_int(3), 2, 0));
        num.compose(&denom_inv).compose(&denom_inv)
    };
    verifications.push(Verification {
        name: "dw/dx2 = (P^2 + 3 d1^2) (cosh(x2 a) - P sinh(x2 a)/a)^-2".into(),
        passed: wp.eq_in(&closed, trunc.nx + 1, trunc.n1, (0, 0))?,
        window_limited: w.clipped_d1,
    });
    verify_conjugation_identities(&s, &wp, trunc.nx + 1, &mut verifications)?;

    let a_syms = vec![
        ZSeries::monomial(field, field.one(), 0, 2),
        ZSeries::from_terms(
            field,
            [((0, 3), field.one()), ((2, 1), field.from_int(3))],
        ),
        ZSeries::monomial(field, field.one(), 1, 0),
    ];
    let build = assemble(field, trunc, &s, a_syms, verifications)?;
    if !build.all_passed() {
        return Err(Error::Malformed(format!(
            "nodal closed-form verification failed: {:?}",
            build
                .verifications
                .iter()
                .filter(|v| !v.passed)
                .map(|v| v.name.clone())
                .collect::<Vec<_>>()
        )));
    }
    Ok(build)
}

/// Numeric cross-check of the nodal gluing identities in `Q(sqrt(-3))`,
/// specializing `d1` to a rational value `h`:
/// with `a = sqrt(-3) h` and `lambda = (a - P(h))/(a + P(h))`,
/// `-a (lambda - 1)/(lambda + 1) = P(h)` and
/// `-a^2 4 lambda / (lambda + 1)^2 = P(h)^2 + 3 h^2`.
pub fn nodal_alpha_cross_check(p_c0: &Rat, p_c1: &Rat, h: &Rat) -> Result<bool> {
    let kq = KField::quadratic(rat_int(-3))?;
    let a = kq.elem(Rat::from_integer(0.into()), h.clone())?;
    let ph = kq.from_rat(p_c0 + p_c1 * h);
    let denom = a.checked_add(&ph)?;
    if denom.is_zero() {
        return Err(Error::Domain(
            "P(h) = -a: the gluing parameter is undefined here".into(),
        ));
    }
    let lambda = a.checked_sub(&ph)?.checked_div(&denom)?;
    let one = kq.one();
    let lp1 = lambda.checked_add(&one)?;
    let first = a
        .neg()
        .checked_mul(&lambda.checked_sub(&one)?)?
        .checked_div(&lp1)?;
    let ok1 = first == ph;
    let second = a
        .checked_mul(&a)?
        .neg()
        .checked_mul(&kq.from_int(4))?
        .checked_mul(&lambda)?
        .checked_div(&lp1.checked_mul(&lp1)?)?;
    let expect = kq.from_rat((p_c0 + p_c1 * h) * (p_c0 + p_c1 * h) + Rat::from_integer(3.into()) * h * h);
    Ok(ok1 && second == expect)
}

/// Metadata for the affine non-spectral counterexample ring
/// `k[X1, X2, X3]/(F)` with `F = X1 X2 + X3 + sum g_q X1^q`.
#[derive(Debug, Clone)]
pub struct CounterexampleInfo {
    pub defining_polynomial: String,
    /// The `g_q` coefficient polynomials in `X3`, echoed verbatim.
    pub g: Vec<String>,
    pub note: String,
}

pub fn counterexample_info(g: &[String]) -> CounterexampleInfo {
    let mut f = String::from("X1*X2 + X3");
    for (idx, gq) in g.iter().enumerate() {
        let q = idx + 1;
        f.push_str(&format!(" + ({gq})*X1^{q}"));
    }
    CounterexampleInfo {
        defining_polynomial: f,
        g: g.to_vec(),
        note: "known non-spectral for rank-one rings; recorded as documentation, not machine-verified".to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::rat;

    fn q() -> KField {
        KField::rational()
    }

    #[test]
    fn cuspidal_p_zero_gives_constant_ring() {
        let k = q();
        let b = build_ex_cuspidal(&k, &P1Poly::constant(&k, k.zero()), Trunc::catalog_default())
            .unwrap();
        assert!(!b.completed_case);
        // S = 1 and the ring is the plain constant-coefficient one.
        assert!(b.s.eq_in(&EOp::one(&k, b.ring.trunc), 8, 6, (-8, 4)).unwrap());
        for g in &b.ring.gens {
            assert!(is_pdo_in_window(g));
            assert!(crate::schur::is_constant_coefficient(g));
        }
    }

    #[test]
    fn cuspidal_p_one_matches_expansion() {
        let k = q();
        let b = build_ex_cuspidal(&k, &P1Poly::constant(&k, k.one()), Trunc::catalog_default())
            .unwrap();
        assert!(b.all_passed());
        assert!(!b.completed_case);
        // The PDO generator carries -2/(1-x2)^2 = -(2 + 4 x2 + 6 x2^2 + ...).
        let g = &b.ring.gens[0];
        let c = g.coeff(0, 0);
        for j in 0..6u32 {
            assert_eq!(
                c.coeff(0, j),
                k.from_int(-2 * (i64::from(j) + 1)),
                "x2^{j}"
            );
        }
        // All generators commute.
        assert!(b.ring.verify_commutative().unwrap());
    }

    #[test]
    fn cuspidal_degree_one_is_completed() {
        let k = q();
        let p = P1Poly {
            c0: k.zero(),
            c1: k.one(),
        };
        let b = build_ex_cuspidal(&k, &p, Trunc::catalog_default()).unwrap();
        assert!(b.completed_case);
        assert!(b.ring.completed);
    }

    #[test]
    fn nodal_builds_verify() {
        let k = q();
        for p in [
            P1Poly::constant(&k, k.zero()),
            P1Poly::constant(&k, k.one()),
            P1Poly {
                c0: k.zero(),
                c1: k.one(),
            },
        ] {
            let b = build_ex_nodal(&k, &p, Trunc::catalog_default()).unwrap();
            assert!(b.all_passed());
            assert!(b.ring.verify_commutative().unwrap());
        }
    }

    #[test]
    fn nodal_alpha_specializations() {
        let one = Rat::from_integer(1.into());
        let zero = Rat::from_integer(0.into());
        for h in [rat(1, 1), rat(2, 3), rat(-5, 7)] {
            assert!(nodal_alpha_cross_check(&one, &zero, &h).unwrap());
            assert!(nodal_alpha_cross_check(&zero, &one, &h).unwrap());
            assert!(nodal_alpha_cross_check(&rat(1, 2), &rat(3, 4), &h).unwrap());
        }
    }

    #[test]
    fn counterexample_record() {
        let info = counterexample_info(&[]);
        assert_eq!(info.defining_polynomial, "X1*X2 + X3");
        assert!(info.note.contains("not machine-verified"));
        let info2 = counterexample_info(&[String::from("X3^2 - 1")]);
        assert!(info2.defining_polynomial.contains("(X3^2 - 1)*X1^1"));
    }
}
