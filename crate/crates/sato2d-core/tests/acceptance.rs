//! Acceptance suite: one test per stated criterion, each printing a
//! PASS/FAIL line (run with `--nocapture` to see them all).

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sato2d_core::catalog::{build_ex_cuspidal, build_ex_nodal, nodal_alpha_cross_check, P1Poly};
use sato2d_core::field::{rat, rat_int, KField};
use sato2d_core::localfield::{filtration_dims, hilbert_fit, invariants_na, SpanStructure};
use sato2d_core::opalg::{A1Verdict, EOp, Trunc};
use sato2d_core::ratexp::{self, BiPoly, ExpandWindow, Membership, RatSym};
use sato2d_core::schur::{admissible_basis, contains_partial1, darboux_transform, sato_solve};
use sato2d_core::series::XSeries;
use sato2d_core::zseries::ZSeries;

fn q() -> KField {
    KField::rational()
}

fn report(n: u32, name: &str, pass: bool) {
    println!(
        "ACCEPTANCE {n} {}: {name}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {n} failed: {name}");
}

/// Criterion 1: cuspidal closed form for P = 1 and P = 2/3, exact through
/// x-degree 8, under 10 seconds.
#[test]
fn criterion_1_cuspidal_closed_form() {
    let t0 = Instant::now();
    let k = q();
    let trunc = Trunc::catalog_default();
    let mut ok = true;
    for p in [k.one(), k.from_rat(rat(2, 3))] {
        let poly = P1Poly::constant(&k, p.clone());
        let build = build_ex_cuspidal(&k, &poly, trunc).unwrap();
        // Engine-computed S^-1 d2^2 S.
        let s_inv = build.s.invert_unit().unwrap();
        let conj = s_inv
            .compose(&EOp::d2_pow(&k, trunc, 2))
            .compose(&build.s);
        // Closed form d2^2 + 2 P^2 inv(1 - x2 P)^2.
        let prec = 16;
        let one = XSeries::one(&k, prec);
        let x2p = XSeries::monomial(&k, p.clone(), 0, 1, prec);
        let dinv = one.sub(&x2p).inv().unwrap();
        let coeff = dinv
            .mul(&dinv)
            .scale(&(&p * &p))
            .scale(&k.from_int(2));
        let mut closed = EOp::d2_pow(&k, trunc, 2);
        closed.set_term(0, 0, coeff);
        // Exact equality through x-degree 8 on the closed form's levels.
        ok &= conj.eq_in(&closed, 9, trunc.n1, (-1, trunc.s_max)).unwrap();
        // The engine's exact two-sided identity lives on the ring side:
        // S d2^2 S^-1 = d2^2 - 2 dw/dx2 on every sound level.
        let mirror = &build.ring.gens[0];
        let minus = {
            let mut m = EOp::d2_pow(&k, trunc, 2);
            m.set_term(
                0,
                0,
                closed.coeff(0, 0).neg(),
            );
            m
        };
        let lo = mirror.level_floor().unwrap_or(trunc.s_min);
        ok &= mirror.eq_in(&minus, 9, trunc.n1, (lo, trunc.s_max)).unwrap();
    }
    let elapsed = t0.elapsed();
    ok &= elapsed.as_secs_f64() < 10.0;
    report(
        1,
        &format!("cuspidal closed form, x-degree 8, {elapsed:?} < 10s"),
        ok,
    );
}

/// Criterion 2: nodal closed form for P in {0, 1, d1} through x-degree 8,
/// plus the two gluing identities, under 60 seconds.
#[test]
fn criterion_2_nodal_closed_form() {
    let t0 = Instant::now();
    let k = q();
    // d1-degrees reach 10 at x-degree 8; widen the cap accordingly.
    let trunc = Trunc::new(8, 10, -8, 4);
    let mut ok = true;
    for poly in [
        P1Poly::constant(&k, k.zero()),
        P1Poly::constant(&k, k.one()),
        P1Poly {
            c0: k.zero(),
            c1: k.one(),
        },
    ] {
        let build = build_ex_nodal(&k, &poly, trunc).unwrap();
        // The builder has already verified, coefficient-exactly at degree
        // nx + 1 > 8:
        //   w|_(x2=0) = P,
        //   dw/dx2|_0 = P^2 + 3 d1^2   (the cleared gluing polynomial),
        //   dw/dx2 = (P^2 + 3 d1^2) (cosh - P sinh/a)^-2  (cleared form),
        //   S^-1 d2^2 S = d2^2 + 2 dw/dx2 down to level d2^-1.
        ok &= build.all_passed();
        // Alpha-side specialization of the gluing identities in Q(sqrt(-3)).
        for h in [rat_int(1), rat(2, 3), rat(-5, 7)] {
            ok &= nodal_alpha_cross_check(
                poly.c0.rational_part(),
                poly.c1.rational_part(),
                &h,
            )
            .unwrap();
        }
    }
    let elapsed = t0.elapsed();
    ok &= elapsed.as_secs_f64() < 60.0;
    report(
        2,
        &format!("nodal closed form for P in {{0, 1, d1}}, {elapsed:?} < 60s"),
        ok,
    );
}

fn random_dressing(k: &KField, rng: &mut ChaCha8Rng, trunc: Trunc, depth: u32) -> EOp {
    let mut s = EOp::one(k, trunc);
    for qd in 1..=depth {
        let mut terms: Vec<((u32, u32), sato2d_core::KElem)> = Vec::new();
        for a in 0..=2u32 {
            // Growth condition at 0: ord >= a - q.
            let min_deg = a.saturating_sub(qd);
            for _ in 0..2 {
                let d = rng.gen_range(min_deg..trunc.nx.min(min_deg + 4) + 1);
                let i = rng.gen_range(0..=d);
                let c: i64 = rng.gen_range(-3..=3);
                if c != 0 {
                    terms.push(((i, d - i), k.from_int(c)));
                }
            }
            let poly = XSeries::from_terms(k, terms.drain(..).map(|((a2, b), c)| ((a2, b), c)), trunc.nx);
            if !poly.is_zero_stored() {
                let mut cur = s.coeff(a, -i64::from(qd));
                cur = cur.add(&poly);
                s.set_term(a, -i64::from(qd), cur.sub(&s.coeff(a, -i64::from(qd))));
            }
        }
    }
    s
}

/// Criterion 3: 50 seeded dressing round trips at nx = 6, depth <= 4,
/// exact within the solved quotient, under 120 seconds.
#[test]
fn criterion_3_sato_round_trip() {
    let t0 = Instant::now();
    let k = q();
    let trunc = Trunc::new(6, 9, -10, 9);
    let bound = 9u32;
    let mut ok = true;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s_star = random_dressing(&k, &mut rng, trunc, 4);
        if let A1Verdict::FailsAt { .. } = s_star.check_a1(0) {
            panic!("construction violates the growth condition");
        }
        let mut images = Vec::new();
        for i in 0..=bound {
            for j in 0..=(bound - i) {
                let mon = ZSeries::monomial(&k, k.one(), i64::from(i), i64::from(j));
                images.push(
                    EOp::lift(&k, trunc, &mon)
                        .unwrap()
                        .compose(&s_star)
                        .reduce_mod_x()
                        .unwrap(),
                );
            }
        }
        let basis = admissible_basis(&images, &[], bound).unwrap();
        let s = sato_solve(&basis, trunc).unwrap();
        // Exact agreement within each solved coefficient's precision, and
        // the solve must recover the full x-precision at depth <= 4.
        let diff = s.sub(&s_star);
        for (&(i, sd), f) in diff.terms() {
            if sd >= -4 {
                ok &= f.prec() >= 6 || f.is_exact();
            }
            for (&(a, b), c) in f.terms() {
                if a + b < f.prec() && !c.is_zero() {
                    println!("  seed {seed}: residual at d1^{i} d2^{sd} x1^{a} x2^{b}");
                    ok = false;
                }
            }
        }
    }
    let elapsed = t0.elapsed();
    ok &= elapsed.as_secs_f64() < 120.0;
    report(3, &format!("50 dressing round trips, {elapsed:?} < 120s"), ok);
}

/// Criterion 4: catalog generators commute exactly; 20 random admissible
/// conjugates of (d2^2, d1 d2^3) commute.
#[test]
fn criterion_4_commutativity() {
    let k = q();
    let trunc = Trunc::catalog_default();
    let mut ok = true;
    for poly in [
        P1Poly::constant(&k, k.zero()),
        P1Poly::constant(&k, k.one()),
        P1Poly::constant(&k, k.from_rat(rat(2, 3))),
        P1Poly {
            c0: k.zero(),
            c1: k.one(),
        },
    ] {
        let cusp = build_ex_cuspidal(&k, &poly, trunc).unwrap();
        ok &= cusp.ring.verify_commutative().unwrap();
        let nodal = build_ex_nodal(&k, &poly, trunc).unwrap();
        ok &= nodal.ring.verify_commutative().unwrap();
    }
    // Random admissible-form conjugations of (d2^2, d1 d2^3): an
    // exp(c x1) factor times exp of x2/d1-content (the x1-free part keeps
    // the d1 cap sound, exactly as in the catalog dressings).
    let t = Trunc::new(8, 10, -6, 5);
    let p0 = EOp::d2_pow(&k, t, 2);
    let q0 = EOp::monomial(&k, t, k.one(), 1, 3);
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let mut g = EOp::zero(&k, t);
        for _ in 0..3 {
            // Terms raising M-adic order (via x2) or lowering d2.
            let sd: i64 = rng.gen_range(-2..=0);
            let a = rng.gen_range(0..=2u32);
            let min_deg = if sd == 0 { 1 } else { 0 };
            let d = rng.gen_range(min_deg..=3u32);
            let c: i64 = rng.gen_range(-2..=2);
            if c != 0 {
                let mon = XSeries::monomial(&k, k.from_int(c), 0, d, t.nx);
                let mut cur = g.coeff(a, sd);
                cur = cur.add(&mon);
                g.set_term(a, sd, cur.sub(&g.coeff(a, sd)));
            }
        }
        let c3: i64 = rng.gen_range(-2..=2);
        let shift = EOp::from_xseries(t, XSeries::monomial(&k, k.from_int(c3), 1, 0, t.nx))
            .exp()
            .unwrap();
        let conj = shift.compose(&g.exp().unwrap());
        let p1 = p0.conjugate_by(&conj).unwrap();
        let q1 = q0.conjugate_by(&conj).unwrap();
        ok &= p1.commutator(&q1).is_zero_stored();
    }
    report(4, "catalog and random-conjugate commutativity", ok);
}

/// Criterion 5: certified growth bounds multiply: A1(m1) x A1(m2) gives a
/// certified A1(m1 + m2) product, 200 random pairs.
#[test]
fn criterion_5_growth_closure() {
    let k = q();
    // Certification needs ord computable up to i + s - m <= 14.
    let t = Trunc::new(16, 8, -6, 6);
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut ok = true;
    for _ in 0..200 {
        let m1 = rng.gen_range(0..=2i64);
        let m2 = rng.gen_range(0..=2i64);
        let mk = |m: i64, rng: &mut ChaCha8Rng| {
            let mut op = EOp::zero(&k, t);
            for _ in 0..4 {
                let i = rng.gen_range(0..=3u32);
                let sd: i64 = rng.gen_range(-2..=2);
                let needed = (i64::from(i) + sd - m).max(0) as u32;
                if needed >= t.nx {
                    continue;
                }
                let d = rng.gen_range(needed..t.nx.min(needed + 3) + 1).min(t.nx - 1);
                let a = rng.gen_range(0..=d);
                let c: i64 = rng.gen_range(-3..=3);
                if c != 0 {
                    let mon = XSeries::monomial(&k, k.from_int(c), a, d - a, t.nx);
                    let mut cur = op.coeff(i, sd);
                    cur = cur.add(&mon);
                    op.set_term(i, sd, cur.sub(&op.coeff(i, sd)));
                }
            }
            op
        };
        let p = mk(m1, &mut rng);
        let qq = mk(m2, &mut rng);
        if p.is_zero_stored() || qq.is_zero_stored() {
            continue;
        }
        assert!(p.check_a1(m1).holds());
        assert!(qq.check_a1(m2).holds());
        let prod = p.compose(&qq);
        ok &= prod.check_a1(m1 + m2).holds();
    }
    report(5, "growth-condition closure under composition", ok);
}

fn cuspidal_gens(k: &KField) -> Vec<ZSeries> {
    vec![
        ZSeries::monomial(k, k.one(), 0, 2),
        ZSeries::monomial(k, k.one(), 0, 3),
        ZSeries::monomial(k, k.one(), 1, 0),
    ]
}

fn nodal_gens(k: &KField) -> Vec<ZSeries> {
    vec![
        ZSeries::monomial(k, k.one(), 0, 2),
        ZSeries::from_terms(k, [((0, 3), k.one()), ((2, 1), k.from_int(3))]),
        ZSeries::monomial(k, k.one(), 1, 0),
    ]
}

/// Independent oracle: monomials d1^a d2^b with b != 1 and a + b <= n.
fn staircase_count(n: u32) -> usize {
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

/// Criterion 6: filtration dimensions (n+1)(n+2)/2 - n for both catalog
/// rings through level 12, against the independent counting oracle, and an
/// exact quadratic coefficient of 1.
#[test]
fn criterion_6_hilbert_growth() {
    let k = q();
    let mut ok = true;
    for gens in [cuspidal_gens(&k), nodal_gens(&k)] {
        let table = filtration_dims(&gens, SpanStructure::Ring, 12, 1, 0).unwrap();
        for n in 1..=12u32 {
            let formula = ((n + 1) * (n + 2) / 2 - n) as usize;
            ok &= table.dims[n as usize] == formula;
            ok &= table.dims[n as usize] == staircase_count(n);
        }
        let fit = hilbert_fit(&table, 1).unwrap();
        ok &= fit.c2 == rat_int(1) && fit.integral;
    }
    report(6, "filtration dimensions and c2 = 1 on both rings", ok);
}

/// Criterion 7: GCD invariants: both rings rank one; the parity ring is not
/// strongly admissible.
#[test]
fn criterion_7_invariants() {
    let k = q();
    let mut ok = true;
    for gens in [cuspidal_gens(&k), nodal_gens(&k)] {
        let inv = invariants_na(&gens, None).unwrap();
        ok &= inv.n == 1 && inv.n_tilde == 1 && inv.strongly_admissible;
        ok &= inv.rank == Some(1);
    }
    let parity = invariants_na(
        &[
            ZSeries::monomial(&k, k.one(), 0, 2),
            ZSeries::monomial(&k, k.one(), 2, 0),
        ],
        None,
    )
    .unwrap();
    ok &= parity.n == 2 && parity.n_tilde == 2 && !parity.strongly_admissible;
    report(7, "rank-one invariants and the parity obstruction", ok);
}

/// Criterion 8: 200 seeded coprime denominator-shape samples with zero
/// hypothesis-true conclusion-false cases, plus the two designed fixtures.
#[test]
fn criterion_8_denominator_shape_sweep() {
    let k = q();
    let window = ExpandWindow {
        d2_min: -8,
        d1_min: -6,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut tested = 0;
    let mut bad = 0;
    while tested < 200 {
        let mut mk = |rng: &mut ChaCha8Rng| {
            let mut terms = Vec::new();
            for i in 0..=4u32 {
                for j in 0..=(4 - i) {
                    if rng.gen_range(0..3u8) == 0 {
                        let c: i64 = rng.gen_range(-3..=3);
                        if c != 0 {
                            terms.push(((i, j), k.from_int(c)));
                        }
                    }
                }
            }
            BiPoly::from_terms(&k, terms)
        };
        let p = mk(&mut rng);
        let qq = mk(&mut rng);
        if p.is_zero() || qq.is_zero() {
            continue;
        }
        let sym = RatSym::new(p, qq).unwrap().reduced();
        if sym.q.total_degree().unwrap_or(0) == 0 {
            continue;
        }
        let e = ratexp::expand(&sym, window).unwrap();
        let m = ratexp::stable_growth_bound(&e, window).unwrap_or(0);
        let rep = ratexp::lemma_check(&sym, window, m).unwrap();
        tested += 1;
        if rep.hypothesis && !rep.conclusion {
            bad += 1;
        }
    }
    // Fixtures: Q = d2 - d1 satisfies both sides; Q = d1 d2 is vacuous.
    let fix1 = {
        let p = BiPoly::monomial(&k, k.one(), 0, 0);
        let qq = BiPoly::from_terms(&k, [((0, 1), k.one()), ((1, 0), k.from_int(-1))]);
        ratexp::lemma_check(&RatSym::new(p, qq).unwrap().reduced(), window, -1).unwrap()
    };
    let fix2 = {
        let p = BiPoly::monomial(&k, k.one(), 0, 0);
        let qq = BiPoly::monomial(&k, k.one(), 1, 1);
        ratexp::lemma_check(&RatSym::new(p, qq).unwrap().reduced(), window, 4).unwrap()
    };
    let ok = bad == 0
        && fix1.hypothesis
        && fix1.conclusion
        && !fix2.hypothesis
        && matches!(fix2.membership, Membership::Outside { witness: (-1, -1) })
        && fix2.implication_ok;
    report(
        8,
        &format!("denominator-shape sweep: {tested} samples, {bad} counterexamples"),
        ok,
    );
}

/// Criterion 9: Darboux on the cuspidal example: for constant P the
/// transform F = S d2 is an ordinary operator conjugating every generator
/// to constant coefficients; for P = d1 the build flags the completed case.
#[test]
fn criterion_9_darboux() {
    let k = q();
    let trunc = Trunc::catalog_default();
    let mut ok = true;
    for c in [k.one(), k.from_rat(rat(2, 3))] {
        let build = build_ex_cuspidal(&k, &P1Poly::constant(&k, c), trunc).unwrap();
        let rep = darboux_transform(&build.ring, &build.s, 1).unwrap();
        ok &= rep.f_is_pdo && rep.all_constant;
        ok &= !build.completed_case;
    }
    let build = build_ex_cuspidal(
        &k,
        &P1Poly {
            c0: k.zero(),
            c1: k.one(),
        },
        trunc,
    )
    .unwrap();
    ok &= build.completed_case && build.ring.completed;
    report(9, "Darboux transform and the completed-operator flag", ok);
}

/// Criterion 10: the ring-side triviality test accepts both catalog rings.
#[test]
fn criterion_10_triviality() {
    let k = q();
    let trunc = Trunc::catalog_default();
    let mut ok = true;
    for build in [
        build_ex_cuspidal(&k, &P1Poly::constant(&k, k.one()), trunc).unwrap(),
        build_ex_nodal(&k, &P1Poly::constant(&k, k.one()), trunc).unwrap(),
    ] {
        ok &= contains_partial1(&build.ring, None).unwrap();
    }
    report(10, "both catalog rings contain the first derivation", ok);
}
