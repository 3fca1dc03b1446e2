//! Command-line dispatch: every subcommand runs an engine operation and
//! renders a report (human text on stdout, optional JSON file).

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use sato2d_core::catalog::{
    build_ex_cuspidal, build_ex_nodal, counterexample_info, nodal_alpha_cross_check, P1Poly,
};
use sato2d_core::field::{rat_int, KField, Rat};
use sato2d_core::localfield::{self, SpanStructure};
use sato2d_core::opalg::{A1Verdict, EOp, Trunc};
use sato2d_core::ratexp::{self, BiPoly, ExpandWindow, Membership, RatSym};
use sato2d_core::schur::{
    self, admissible_basis, darboux_transform, find_normalized_pair, normalize_pair,
    pair_from_ring, ring_from_pair, sato_solve, verify_stabilizer, RingPresentation, SchurPair,
};
use sato2d_core::zseries::ZSeries;
use sato2d_core::Error as CoreError;

use crate::parser::{self, Session};
use crate::report::{rat_value, Report, Status};

#[derive(Parser)]
#[command(
    name = "sato2d",
    about = "Exact truncated operator calculus: composition, dressing, Schur pairs, valuations",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// x-precision of series coefficients.
    #[arg(long, global = true, default_value_t = 8)]
    nx: u32,
    /// d1-degree cap.
    #[arg(long, global = true, default_value_t = 6)]
    n1: u32,
    /// Lowest retained d2-exponent.
    #[arg(long, global = true, default_value_t = -8, allow_hyphen_values = true)]
    smin: i64,
    /// Highest retained d2-exponent.
    #[arg(long, global = true, default_value_t = 4, allow_hyphen_values = true)]
    smax: i64,
    /// Session field: "Q" or "Q(sqrt,<d>)" with d a non-square rational.
    #[arg(long, global = true, default_value = "Q")]
    field: String,
    /// Degree bound for span/monoid computations (defaults per operation).
    #[arg(long, global = true)]
    bound: Option<u32>,
    /// RNG seed for sampled subcommands.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the machine-readable report here.
    #[arg(long, global = true)]
    json: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compose two operator expressions.
    Mul { a: String, b: String },
    /// Commutator of two operator expressions.
    Comm { a: String, b: String },
    /// Bi-order (k, l) of an operator expression.
    Ord { expr: String },
    /// Growth-condition check at the given bound.
    A1 {
        expr: String,
        #[arg(long, allow_hyphen_values = true)]
        m: i64,
    },
    /// Dressing round trip: act the staircase through S, re-solve, compare.
    Sato {
        /// The dressing operator `1 + lower` to reconstruct.
        #[arg(long = "from-s")]
        from_s: String,
        /// Staircase degree bound (default n1).
        #[arg(long)]
        degree: Option<u32>,
    },
    /// Generators of the operator ring attached to a stabilized pair.
    RingFromPair {
        #[arg(long = "a-gen", required = true)]
        a_gens: Vec<String>,
        #[arg(long = "w-gen", required = true)]
        w_gens: Vec<String>,
        #[arg(long, default_value_t = 1)]
        r: u32,
    },
    /// Stabilized pair attached to a commutative ring of operators.
    PairFromRing {
        #[arg(long = "gen", required = true)]
        gens: Vec<String>,
    },
    /// Normalize a commuting monic pair of bi-orders (0,k), (1,l).
    Normalize {
        #[arg(long)]
        p: String,
        #[arg(long)]
        q: String,
    },
    /// Filtration dimension table, graded quotients and quadratic fit.
    Hilbert {
        #[arg(long = "gen", required = true)]
        gens: Vec<String>,
        /// Module generators (the ring then acts through --gen).
        #[arg(long = "module-gen")]
        module_gens: Vec<String>,
        #[arg(long, default_value_t = 12)]
        nmax: u32,
        #[arg(long, default_value_t = 1)]
        r: u32,
        /// Sampling stride for the second-difference fit.
        #[arg(long, default_value_t = 1)]
        d: u32,
    },
    /// GCD invariants and strong admissibility of a symbol ring.
    Invariants {
        #[arg(long = "gen", required = true)]
        gens: Vec<String>,
    },
    /// Darboux transform F = S d2^n of a built example ring.
    Darboux {
        /// ex_cuspidal or ex_nodal.
        #[arg(long)]
        example: String,
        /// P(d1), degree at most one.
        #[arg(long, default_value = "0")]
        p: String,
        #[arg(long, default_value_t = 1)]
        n: u32,
    },
    /// Laurent expansion of P/Q and membership in k[d1]((d2^-1)).
    Expand {
        #[arg(long)]
        p: String,
        #[arg(long)]
        q: String,
        /// Lowest retained d1-exponent (default -n1).
        #[arg(long, allow_hyphen_values = true)]
        d1min: Option<i64>,
    },
    /// Denominator-shape law: fixtures or a seeded coprime sweep.
    Lemma36 {
        #[arg(long, default_value_t = 200)]
        samples: u32,
        #[arg(long, default_value_t = 4)]
        deg: u32,
        /// Check one explicit pair instead of sweeping.
        #[arg(long)]
        p: Option<String>,
        #[arg(long)]
        q: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        m: Option<i64>,
    },
    /// Build a worked example and report its verifications.
    Example {
        /// ex_cuspidal, ex_nodal or counterexample.
        id: String,
        /// P(d1), degree at most one (spectral examples).
        #[arg(long, default_value = "0")]
        p: String,
        /// g_q polynomials for the counterexample record.
        #[arg(long = "g")]
        g: Vec<String>,
    },
}

#[derive(Debug)]
pub enum CliError {
    Core(CoreError),
    Parse(parser::ParseError),
    Other(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Parse(e) => write!(f, "{e}"),
            CliError::Other(m) => write!(f, "{m}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

impl From<parser::ParseError> for CliError {
    fn from(e: parser::ParseError) -> Self {
        CliError::Parse(e)
    }
}

fn parse_field(text: &str) -> Result<KField, CliError> {
    let t = text.trim();
    if t == "Q" {
        return Ok(KField::rational());
    }
    if let Some(inner) = t.strip_prefix("Q(sqrt,").and_then(|s| s.strip_suffix(')')) {
        let expr = parser::parse(inner)?;
        let d = match expr {
            parser::Expr::Num(r) => r,
            parser::Expr::Neg(inner) => match *inner {
                parser::Expr::Num(r) => -r,
                _ => return Err(CliError::Other("bad extension constant".into())),
            },
            _ => return Err(CliError::Other("bad extension constant".into())),
        };
        return Ok(KField::quadratic(d)?);
    }
    Err(CliError::Other(format!(
        "unknown field {text:?}; use Q or Q(sqrt,<d>)"
    )))
}

pub fn run(cli: Cli) -> Result<Report, CliError> {
    let field = parse_field(&cli.field)?;
    let trunc = Trunc::new(cli.nx, cli.n1, cli.smin, cli.smax);
    let sess = Session {
        field: field.clone(),
        trunc,
    };
    let report = match &cli.cmd {
        Cmd::Mul { a, b } => {
            let mut rep = Report::new("mul", &field, trunc);
            let x = parser::to_eop(&parser::parse(a)?, &sess)?;
            let y = parser::to_eop(&parser::parse(b)?, &sess)?;
            let prod = x.compose(&y);
            rep.block("product", prod.to_canonical_string());
            rep
        }
        Cmd::Comm { a, b } => {
            let mut rep = Report::new("comm", &field, trunc);
            let x = parser::to_eop(&parser::parse(a)?, &sess)?;
            let y = parser::to_eop(&parser::parse(b)?, &sess)?;
            let c = x.commutator(&y);
            rep.block("commutator", c.to_canonical_string());
            rep.verdict(
                "commutes",
                Status::from_bool(c.is_zero_stored()),
                "within window",
            );
            rep
        }
        Cmd::Ord { expr } => {
            let mut rep = Report::new("ord", &field, trunc);
            let x = parser::to_eop(&parser::parse(expr)?, &sess)?;
            let o = x.ord_gamma()?;
            rep.block_with(
                "ord_gamma",
                format!("({}, {})", o.k, o.l),
                json!({"k": o.k, "l": o.l}),
            );
            rep.block(
                "monic",
                if x.is_monic()? { "true" } else { "false" },
            );
            rep
        }
        Cmd::A1 { expr, m } => {
            let mut rep = Report::new("a1", &field, trunc);
            let x = parser::to_eop(&parser::parse(expr)?, &sess)?;
            let v = x.check_a1(*m);
            let (status, text) = match &v {
                A1Verdict::Holds => (Status::Pass, "holds".to_string()),
                A1Verdict::FailsAt { slot, ord, needed } => (
                    Status::Fail,
                    format!(
                        "fails at d1^{} d2^{}: order {ord} < {needed}",
                        slot.0, slot.1
                    ),
                ),
                A1Verdict::Indeterminate { slot } => (
                    Status::Indeterminate,
                    format!("uncertified at d1^{} d2^{}", slot.0, slot.1),
                ),
            };
            rep.block("condition", text);
            rep.verdict(&format!("A1({m})"), status, "within window");
            rep
        }
        Cmd::Sato { from_s, degree } => {
            let mut rep = Report::new("sato", &field, trunc);
            let s_star = parser::to_eop(&parser::parse(from_s)?, &sess)?;
            let head = s_star.coeff(0, 0);
            if !(head.constant_term().is_one()) {
                return Err(CliError::Other(
                    "the dressing operator must have the form 1 + lower".into(),
                ));
            }
            let bound = degree.unwrap_or(trunc.n1.min(trunc.nx - 1)).min(
                i64::try_from(trunc.s_max).unwrap_or(0).max(0) as u32,
            );
            rep.bound("staircase_degree", bound);
            let mut images = Vec::new();
            for i in 0..=bound {
                for j in 0..=(bound - i) {
                    let mon =
                        ZSeries::monomial(&field, field.one(), i64::from(i), i64::from(j));
                    images.push(EOp::lift(&field, trunc, &mon)?.compose(&s_star).reduce_mod_x()?);
                }
            }
            let basis = admissible_basis(&images, &[], bound)?;
            let s = sato_solve(&basis, trunc)?;
            rep.block("S", s.truncate_x(trunc.nx).to_canonical_string());
            let diff = s.sub(&s_star);
            let mut exact = true;
            for (_, f) in diff.terms() {
                if f.terms().any(|(&(a, b), _)| a + b < f.prec()) {
                    exact = false;
                }
            }
            rep.verdict(
                "solve reproduces the dressing",
                Status::from_bool(exact),
                "within the solved quotient",
            );
            rep
        }
        Cmd::RingFromPair { a_gens, w_gens, r } => {
            let mut rep = Report::new("ring-from-pair", &field, trunc);
            let a: Vec<ZSeries> = a_gens
                .iter()
                .map(|t| Ok(parser::to_zseries(&parser::parse(t)?, &field, false)?))
                .collect::<Result<_, CliError>>()?;
            let w: Vec<ZSeries> = w_gens
                .iter()
                .map(|t| Ok(parser::to_zseries(&parser::parse(t)?, &field, false)?))
                .collect::<Result<_, CliError>>()?;
            let pair = SchurPair {
                a_gens: a,
                w_gens: w,
                r: *r,
                window: trunc,
            };
            let (ring, s, basis) = ring_from_pair(&pair)?;
            let stab = verify_stabilizer(&pair, &basis)?;
            rep.block("S", s.truncate_x(trunc.nx).to_canonical_string());
            for (idx, g) in ring.gens.iter().enumerate() {
                rep.block(&format!("generator[{idx}]"), g.truncate_x(trunc.nx).to_canonical_string());
            }
            rep.verdict(
                "stabilizer W*A in W",
                Status::from_bool(stab.ok),
                "within window",
            );
            rep.verdict(
                "generators commute",
                Status::from_bool(ring.verify_commutative()?),
                "within window",
            );
            rep.verdict(
                "ordinary (non-completed) operators",
                Status::from_bool(!ring.completed),
                "within window",
            );
            rep
        }
        Cmd::PairFromRing { gens } => {
            let mut rep = Report::new("pair-from-ring", &field, trunc);
            let ops: Vec<EOp> = gens
                .iter()
                .map(|t| Ok(parser::to_eop(&parser::parse(t)?, &sess)?))
                .collect::<Result<_, CliError>>()?;
            let ring = build_ring(ops, trunc, &mut rep)?;
            let (pair, t) = pair_from_ring(&ring)?;
            rep.block("T", t.truncate_x(trunc.nx).to_canonical_string());
            for (idx, a) in pair.a_gens.iter().enumerate() {
                rep.block(&format!("A-generator[{idx}]"), a.to_canonical_string());
            }
            let heads: Vec<String> = pair
                .w_gens
                .iter()
                .take(6)
                .map(|w| w.to_canonical_string())
                .collect();
            rep.block("W-generators (first)", heads.join(" ; "));
            rep.verdict("dressing found", Status::Pass, "");
            rep
        }
        Cmd::Normalize { p, q } => {
            let mut rep = Report::new("normalize", &field, trunc);
            let pp = parser::to_eop(&parser::parse(p)?, &sess)?;
            let qq = parser::to_eop(&parser::parse(q)?, &sess)?;
            let (conj, p2, q2) = normalize_pair(&pp, &qq)?;
            rep.block("conjugator", conj.truncate_x(trunc.nx).to_canonical_string());
            rep.block("P normalized", p2.truncate_x(trunc.nx).to_canonical_string());
            rep.block("Q normalized", q2.truncate_x(trunc.nx).to_canonical_string());
            rep.verdict(
                "normalized pair shape",
                Status::from_bool(schur::is_normalized_pair(&p2, &q2)?),
                "within window",
            );
            rep
        }
        Cmd::Hilbert {
            gens,
            module_gens,
            nmax,
            r,
            d,
        } => {
            let mut rep = Report::new("hilbert", &field, trunc);
            let ring_gens: Vec<ZSeries> = gens
                .iter()
                .map(|t| Ok(parser::to_zseries(&parser::parse(t)?, &field, false)?))
                .collect::<Result<_, CliError>>()?;
            let module: Vec<ZSeries> = module_gens
                .iter()
                .map(|t| Ok(parser::to_zseries(&parser::parse(t)?, &field, false)?))
                .collect::<Result<_, CliError>>()?;
            let table = if module.is_empty() {
                localfield::filtration_dims(&ring_gens, SpanStructure::Ring, *nmax, *r, trunc.n1)?
            } else {
                localfield::filtration_dims(
                    &module,
                    SpanStructure::Module {
                        ring_gens: &ring_gens,
                    },
                    *nmax,
                    *r,
                    trunc.n1,
                )?
            };
            rep.bound("degree_budget", table.degree_budget);
            let dims: Vec<String> = table.dims.iter().map(|d| d.to_string()).collect();
            rep.block_with(
                "dims",
                dims.join(" "),
                json!(table.dims.iter().map(|&d| d as u64).collect::<Vec<_>>()),
            );
            for n in 0..=*nmax {
                let q = table.graded_quotient(n)?;
                rep.block(
                    &format!("graded[{n}]"),
                    q.iter()
                        .map(|m| m.to_string())
                        .collect::<Vec<_>>()
                        .join(" "),
                );
            }
            match localfield::hilbert_fit(&table, *d) {
                Ok(fit) => {
                    rep.block_with(
                        "c2",
                        sato2d_core::field::rat_to_string(&fit.c2),
                        json!({
                            "c2": rat_value(&fit.c2),
                            "stable_range": [fit.stable_range.0, fit.stable_range.1],
                            "integral": fit.integral,
                        }),
                    );
                    rep.verdict(
                        "second difference eventually constant",
                        Status::Pass,
                        &format!("stride {d}"),
                    );
                    rep.verdict(
                        "c2 integral",
                        Status::from_bool(fit.integral),
                        "",
                    );
                }
                Err(e) => {
                    rep.block("c2", format!("no fit: {e}"));
                    rep.verdict(
                        "second difference eventually constant",
                        Status::Fail,
                        &format!("stride {d}"),
                    );
                }
            }
            rep
        }
        Cmd::Invariants { gens } => {
            let mut rep = Report::new("invariants", &field, trunc);
            let ring_gens: Vec<ZSeries> = gens
                .iter()
                .map(|t| Ok(parser::to_zseries(&parser::parse(t)?, &field, false)?))
                .collect::<Result<_, CliError>>()?;
            let inv = localfield::invariants_na(&ring_gens, cli.bound)?;
            rep.bound("degree_bound", inv.bound);
            rep.block_with(
                "invariants",
                format!(
                    "N = {}, N~ = {}, strongly admissible = {}, rank = {}",
                    inv.n,
                    inv.n_tilde,
                    inv.strongly_admissible,
                    inv.rank.map(|r| r.to_string()).unwrap_or("-".into())
                ),
                json!({
                    "N": inv.n,
                    "N_tilde": inv.n_tilde,
                    "strongly_admissible": inv.strongly_admissible,
                    "rank": inv.rank,
                }),
            );
            rep.verdict(
                "strongly admissible",
                Status::from_bool(inv.strongly_admissible),
                &format!("products up to degree {}", inv.bound),
            );
            rep
        }
        Cmd::Darboux { example, p, n } => {
            let mut rep = Report::new("darboux", &field, trunc);
            let poly = parse_p1(&field, p, &sess)?;
            let build = match example.as_str() {
                "ex_cuspidal" => build_ex_cuspidal(&field, &poly, trunc)?,
                "ex_nodal" => build_ex_nodal(&field, &poly, trunc)?,
                other => {
                    return Err(CliError::Other(format!(
                        "unknown example {other:?}; use ex_cuspidal or ex_nodal"
                    )))
                }
            };
            let dar = darboux_transform(&build.ring, &build.s, *n)?;
            rep.block("F", dar.f.truncate_x(trunc.nx).to_canonical_string());
            rep.verdict(
                "F is an ordinary operator",
                Status::from_bool(dar.f_is_pdo),
                "within window",
            );
            for (idx, ok) in dar.conjugates_constant.iter().enumerate() {
                rep.verdict(
                    &format!("F^-1 gen[{idx}] F constant-coefficient"),
                    Status::from_bool(*ok),
                    "within window",
                );
            }
            rep.verdict(
                "completed-operator case",
                if build.completed_case {
                    Status::Pass
                } else {
                    Status::Fail
                },
                "flag, not a failure",
            );
            rep
        }
        Cmd::Expand { p, q, d1min } => {
            let mut rep = Report::new("expand", &field, trunc);
            let pp = parser::to_bipoly(&parser::parse(p)?, &field)?;
            let qq = parser::to_bipoly(&parser::parse(q)?, &field)?;
            let window = ExpandWindow {
                d2_min: trunc.s_min,
                d1_min: d1min.unwrap_or(-i64::from(trunc.n1)),
            };
            let sym = RatSym::new(pp, qq)?;
            let e = ratexp::expand(&sym, window)?;
            rep.block("expansion", e.series.to_canonical_string());
            let mem = ratexp::membership_kd1(&e, window);
            let (status, text, scope) = match &mem {
                Membership::Inside { exact: true } => {
                    (Status::Pass, "inside".to_string(), "exact".to_string())
                }
                Membership::Inside { exact: false } => (
                    Status::Pass,
                    "inside".to_string(),
                    format!("down to d2^{}", window.d2_min),
                ),
                Membership::Outside { witness } => (
                    Status::Fail,
                    format!("outside, witness d1^{} d2^{}", witness.0, witness.1),
                    String::new(),
                ),
                Membership::Indeterminate => {
                    (Status::Indeterminate, "indeterminate".into(), String::new())
                }
            };
            rep.block("membership", text);
            rep.verdict("inside k[d1]((d2^-1))", status, &scope);
            rep
        }
        Cmd::Lemma36 {
            samples,
            deg,
            p,
            q,
            m,
        } => {
            let mut rep = Report::new("lemma36", &field, trunc);
            let window = ExpandWindow {
                d2_min: trunc.s_min,
                d1_min: -i64::from(trunc.n1),
            };
            if let (Some(pt), Some(qt)) = (p, q) {
                let pp = parser::to_bipoly(&parser::parse(pt)?, &field)?;
                let qq = parser::to_bipoly(&parser::parse(qt)?, &field)?;
                let sym = RatSym::new(pp, qq)?.reduced();
                let e = ratexp::expand(&sym, window)?;
                let m_used = m
                    .or_else(|| ratexp::stable_growth_bound(&e, window))
                    .unwrap_or(0);
                let lr = ratexp::lemma_check(&sym, window, m_used)?;
                rep.bound("m", m_used);
                rep.block(
                    "sample",
                    format!(
                        "membership {:?}, observed degree {:?}, hypothesis {}, conclusion {}",
                        lr.membership, lr.observed_degree, lr.hypothesis, lr.conclusion
                    ),
                );
                rep.verdict(
                    "hypothesis implies conclusion",
                    Status::from_bool(lr.implication_ok),
                    "within window",
                );
            } else {
                rep.seed = Some(cli.seed);
                rep.bound("samples", samples);
                rep.bound("deg", deg);
                let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
                let mut counterexamples = 0u32;
                let mut hypothesis_true = 0u32;
                let mut tested = 0u32;
                while tested < *samples {
                    let pp = random_poly(&field, &mut rng, *deg);
                    let qq = random_poly(&field, &mut rng, *deg);
                    if qq.is_zero() || pp.is_zero() {
                        continue;
                    }
                    let sym = RatSym::new(pp, qq)?.reduced();
                    if sym.q.total_degree().unwrap_or(0) == 0 {
                        continue;
                    }
                    let e = ratexp::expand(&sym, window)?;
                    let m_used = ratexp::stable_growth_bound(&e, window).unwrap_or(0);
                    let lr = ratexp::lemma_check(&sym, window, m_used)?;
                    tested += 1;
                    if lr.hypothesis {
                        hypothesis_true += 1;
                        if !lr.conclusion {
                            counterexamples += 1;
                        }
                    }
                }
                rep.block_with(
                    "sweep",
                    format!(
                        "{tested} samples, {hypothesis_true} with hypothesis, {counterexamples} counterexamples"
                    ),
                    json!({
                        "tested": tested,
                        "hypothesis_true": hypothesis_true,
                        "counterexamples": counterexamples,
                    }),
                );
                rep.verdict(
                    "no hypothesis-true conclusion-false sample",
                    Status::from_bool(counterexamples == 0),
                    "within window",
                );
            }
            rep
        }
        Cmd::Example { id, p, g } => {
            let mut rep = Report::new("example", &field, trunc);
            match id.as_str() {
                "counterexample" => {
                    let info = counterexample_info(g);
                    rep.block("defining polynomial", info.defining_polynomial.clone());
                    for (idx, gq) in info.g.iter().enumerate() {
                        rep.block(&format!("g[{}]", idx + 1), gq.clone());
                    }
                    rep.block("note", info.note.clone());
                    rep.verdict("record emitted", Status::Pass, "documentation only");
                }
                "ex_cuspidal" | "ex_nodal" => {
                    let poly = parse_p1(&field, p, &sess)?;
                    let build = if id == "ex_cuspidal" {
                        build_ex_cuspidal(&field, &poly, trunc)?
                    } else {
                        build_ex_nodal(&field, &poly, trunc)?
                    };
                    rep.block("S", build.s.truncate_x(trunc.nx).to_canonical_string());
                    // The classical closed-form conjugate.
                    let conj = build
                        .s
                        .invert_unit()?
                        .compose(&EOp::d2_pow(&field, trunc, 2))
                        .compose(&build.s);
                    rep.block("S^-1 d2^2 S", conj.truncate_x(trunc.nx).to_canonical_string());
                    for (idx, gen) in build.ring.gens.iter().enumerate() {
                        rep.block(&format!("generator[{idx}]"), gen.truncate_x(trunc.nx).to_canonical_string());
                    }
                    for v in &build.verifications {
                        rep.verdict(
                            &v.name,
                            Status::from_bool(v.passed),
                            if v.window_limited {
                                "window-limited"
                            } else {
                                ""
                            },
                        );
                    }
                    rep.verdict(
                        "generators commute",
                        Status::from_bool(build.ring.verify_commutative()?),
                        "within window",
                    );
                    rep.verdict(
                        "ring contains d1",
                        Status::from_bool(schur::contains_partial1(&build.ring, cli.bound)?),
                        "span bound",
                    );
                    let inv = localfield::invariants_na(&build.pair.a_gens, cli.bound)?;
                    rep.verdict(
                        "rank one (strongly admissible, N = N~ = 1)",
                        Status::from_bool(inv.strongly_admissible && inv.n == 1),
                        &format!("products up to degree {}", inv.bound),
                    );
                    let table = localfield::filtration_dims(
                        &build.pair.a_gens,
                        SpanStructure::Ring,
                        12,
                        build.pair.r.max(1),
                        trunc.n1,
                    )?;
                    let fit = localfield::hilbert_fit(&table, 1)?;
                    rep.block_with(
                        "c2",
                        sato2d_core::field::rat_to_string(&fit.c2),
                        rat_value(&fit.c2),
                    );
                    rep.verdict(
                        "c2 = 1",
                        Status::from_bool(fit.c2 == rat_int(1)),
                        "",
                    );
                    if build.completed_case {
                        rep.verdict(
                            "completed-operator ring (unbounded d1 content)",
                            Status::Pass,
                            "flag, expected for non-constant P",
                        );
                    }
                    if id == "ex_nodal" {
                        let poly_c0 = poly.c0.rational_part().clone();
                        let poly_c1 = poly.c1.rational_part().clone();
                        let mut ok = true;
                        for h in [rat_int(1), Rat::new(2.into(), 3.into())] {
                            ok &= nodal_alpha_cross_check(&poly_c0, &poly_c1, &h)
                                .unwrap_or(false);
                        }
                        rep.verdict(
                            "gluing identities at sqrt(-3) specializations",
                            Status::from_bool(ok),
                            "x2 = 0 cross-check",
                        );
                    }
                }
                other => {
                    return Err(CliError::Other(format!(
                        "unknown example {other:?}; use ex_cuspidal, ex_nodal or counterexample"
                    )))
                }
            }
            rep
        }
    };
    if let Some(path) = &cli.json {
        let txt = serde_json::to_string_pretty(&report.to_json())
            .map_err(|e| CliError::Other(format!("json serialization: {e}")))?;
        std::fs::write(path, txt).map_err(|e| CliError::Other(format!("write json: {e}")))?;
    }
    Ok(report)
}

/// Assemble a ring presentation, normalizing a candidate pair when needed.
fn build_ring(
    gens: Vec<EOp>,
    trunc: Trunc,
    rep: &mut Report,
) -> Result<RingPresentation, CliError> {
    if let Some(pair) = find_normalized_pair(&gens) {
        return Ok(RingPresentation {
            gens,
            normalized_pair: Some(pair),
            trunc,
            completed: false,
        });
    }
    // Look for monic (0,k) and (1,l) candidates and normalize them.
    let mut p_idx = None;
    let mut q_idx = None;
    for (idx, g) in gens.iter().enumerate() {
        if let Ok(o) = g.ord_gamma() {
            if o.k == 0 && g.is_monic().unwrap_or(false) && p_idx.is_none() {
                p_idx = Some(idx);
            }
            if o.k == 1 && g.is_monic().unwrap_or(false) && q_idx.is_none() {
                q_idx = Some(idx);
            }
        }
    }
    let (pi, qi) = match (p_idx, q_idx) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(CliError::Core(CoreError::Domain(
                "no monic (0,k) and (1,l) generators to normalize".into(),
            )))
        }
    };
    let (conj, _, _) = normalize_pair(&gens[pi], &gens[qi])?;
    rep.block("normalizing conjugator", conj.to_canonical_string());
    let conj_inv = conj.invert_unit()?;
    let gens: Vec<EOp> = gens
        .iter()
        .map(|g| conj_inv.compose(g).compose(&conj))
        .collect();
    let normalized_pair = find_normalized_pair(&gens);
    if normalized_pair.is_none() {
        return Err(CliError::Core(CoreError::NotNormalizable(
            "normalization did not produce a recorded pair".into(),
        )));
    }
    Ok(RingPresentation {
        gens,
        normalized_pair,
        trunc,
        completed: false,
    })
}

fn parse_p1(field: &KField, text: &str, sess: &Session) -> Result<P1Poly, CliError> {
    let op = parser::to_eop(&parser::parse(text)?, sess)?;
    let mut c0 = field.zero();
    let mut c1 = field.zero();
    for (&(i, s), f) in op.terms() {
        if s != 0 {
            return Err(CliError::Core(CoreError::Domain(
                "P must be a polynomial in d1".into(),
            )));
        }
        let c = f.constant_term();
        let pure_const = f.terms().all(|(&(a, b), _)| a == 0 && b == 0);
        if !pure_const {
            return Err(CliError::Core(CoreError::Domain(
                "P must have constant coefficients".into(),
            )));
        }
        match i {
            0 => c0 = c,
            1 => c1 = c,
            _ => {
                return Err(CliError::Core(CoreError::Domain(
                    "P must have degree at most one in d1".into(),
                )))
            }
        }
    }
    Ok(P1Poly { c0, c1 })
}

fn random_poly(field: &KField, rng: &mut ChaCha8Rng, deg: u32) -> BiPoly {
    let mut terms = Vec::new();
    for i in 0..=deg {
        for j in 0..=(deg - i) {
            // Sparse-ish small integer coefficients.
            let pick: u8 = rng.gen_range(0..3);
            if pick == 0 {
                let c: i64 = rng.gen_range(-3..=3);
                if c != 0 {
                    terms.push(((i, j), field.from_int(c)));
                }
            }
        }
    }
    BiPoly::from_terms(field, terms)
}
