use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sato2d_core::field::KField;
use sato2d_core::opalg::{EOp, Trunc};
use sato2d_core::series::XSeries;

fn main() {
    let k = KField::rational();
    let t = Trunc::new(8, 6, -6, 5);
    let p0 = EOp::d2_pow(&k, t, 2);
    let q0 = EOp::monomial(&k, t, k.one(), 1, 3);
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let mut g = EOp::zero(&k, t);
        for _ in 0..3 {
            let sd: i64 = rng.gen_range(-2..=0);
            let a = rng.gen_range(0..=2u32);
            let min_deg = if sd == 0 { 1 } else { 0 };
            let d = rng.gen_range(min_deg..=3u32);
            let i = rng.gen_range(0..=d);
            let c: i64 = rng.gen_range(-2..=2);
            if c != 0 {
                let mon = XSeries::monomial(&k, k.from_int(c), i, d - i, t.nx);
                let mut cur = g.coeff(a, sd);
                cur = cur.add(&mon);
                g.set_term(a, sd, cur.sub(&g.coeff(a, sd)));
            }
        }
        let conj = g.exp().unwrap();
        let p1 = p0.conjugate_by(&conj).unwrap();
        let q1 = q0.conjugate_by(&conj).unwrap();
        let c = p1.commutator(&q1);
        if !c.is_zero_stored() {
            println!("seed {seed}: commutator nonzero; g = {}", g.to_canonical_string());
            println!("  d1 clipped: {} {} {}", p1.clipped_d1, q1.clipped_d1, c.clipped_d1);
            println!("  floors: p1 {:?} q1 {:?} c {:?}", p1.level_floor(), q1.level_floor(), c.level_floor());
            for (&(i, s), f) in c.terms() {
                if !f.is_zero_stored() {
                    let txt = f.to_canonical_string();
                    println!("  slot d1^{i} d2^{s} prec {}: {}", f.prec(), &txt[..40.min(txt.len())]);
                }
            }
            break;
        } else {
            println!("seed {seed}: ok");
        }
    }
}
