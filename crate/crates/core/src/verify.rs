//! Equivalence campaigns: every multiply route against the naive oracle.
//!
//! A campaign fixes a modulus, draws operand pairs either exhaustively
//! over `[0, P)^2` or from a seeded stream, and replays each pair
//! through every available route — Barrett, Montgomery, the Fourier
//! special case when the modulus has one, the four-lane kernel under
//! each gather strategy, and the generated kernels run on the IR
//! interpreter. Every route must equal `a * b mod P` computed with a
//! hardware divide. The traced variants feed the bound ledger on the
//! side: Barrett's correction count and pre-loop remainder, REDC's
//! pre-subtraction value, and the Fourier accumulator range all have
//! proven envelopes, and a campaign fails if an observation ever
//! leaves them.
//!
//! Exhaustive mode is capped at `P <= 4096` (at most `2^24` pairs) so
//! the interpreter passes stay tractable.

use crate::irgen::{
    self, interpret, rewrite_modmul_scalar, rewrite_modmul_vec, BinOp, Env, IrExpr, IrType,
    KernelProgram, ScalarType, Value, Var,
};
use crate::modarith::{mod_mul_naive, ModParams, ParamError};
use crate::rng::SplitMix64;
use crate::vkernels::{self, GatherStrategy, VecU32x4};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Largest modulus allowed in exhaustive mode: `4096^2 = 2^24` pairs.
pub const EXHAUSTIVE_MAX_P: u32 = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerifyMode {
    Exhaustive,
    Random,
}

impl fmt::Display for VerifyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerifyMode::Exhaustive => "exhaustive",
            VerifyMode::Random => "random",
        })
    }
}

impl FromStr for VerifyMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exhaustive" => Ok(VerifyMode::Exhaustive),
            "random" => Ok(VerifyMode::Random),
            other => Err(format!(
                "unknown mode `{other}` (expected `exhaustive` or `random`)"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct VerifyConfig {
    pub p: u32,
    pub l: u32,
    pub mode: VerifyMode,
    /// Pair count in random mode; ignored in exhaustive mode.
    pub samples: u64,
    pub seed: u64,
}

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("exhaustive mode needs P <= {EXHAUSTIVE_MAX_P}, got {p}; use --mode random")]
    ExhaustiveTooLarge { p: u32 },
}

/// First operand pair a route got wrong.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Mismatch {
    pub a: u32,
    pub b: u32,
    pub expected: u32,
    pub got: u32,
}

/// One route's scorecard.
#[derive(Clone, Debug)]
pub struct AlgoReport {
    pub name: String,
    pub pairs: u64,
    pub first_failure: Option<Mismatch>,
    /// Observations outside the route's proven envelope.
    pub bound_violations: u64,
}

impl AlgoReport {
    fn new(name: impl Into<String>) -> AlgoReport {
        AlgoReport {
            name: name.into(),
            pairs: 0,
            first_failure: None,
            bound_violations: 0,
        }
    }

    pub fn passed(&self) -> bool {
        self.first_failure.is_none() && self.bound_violations == 0
    }

    fn record(&mut self, a: u32, b: u32, expected: u32, got: u32) {
        self.pairs += 1;
        if expected != got && self.first_failure.is_none() {
            self.first_failure = Some(Mismatch {
                a,
                b,
                expected,
                got,
            });
        }
    }
}

/// Everything one campaign observed.
#[derive(Clone, Debug)]
pub struct CampaignReport {
    pub p: u32,
    pub l: u32,
    pub mode: VerifyMode,
    pub algorithms: Vec<AlgoReport>,
    pub barrett_max_iterations: u32,
    pub barrett_max_t_pre: u64,
    pub redc_max_t_pre: u64,
    /// Observed Fourier accumulator range; `None` when the modulus has
    /// no `c * 2^n + 1` form.
    pub fourier_t_range: Option<(i64, i64)>,
}

impl CampaignReport {
    pub fn passed(&self) -> bool {
        self.algorithms.iter().all(AlgoReport::passed)
    }
}

fn for_each_pair(cfg: &VerifyConfig, mut f: impl FnMut(u32, u32)) {
    match cfg.mode {
        VerifyMode::Exhaustive => {
            for a in 0..cfg.p {
                for b in 0..cfg.p {
                    f(a, b);
                }
            }
        }
        VerifyMode::Random => {
            let mut rng = SplitMix64::new(cfg.seed);
            for _ in 0..cfg.samples {
                let a = rng.next_residue(cfg.p);
                let b = rng.next_residue(cfg.p);
                f(a, b);
            }
        }
    }
}

/// Feeds pairs through `f` four at a time, zero-padding the tail quad.
fn for_each_quad(cfg: &VerifyConfig, mut f: impl FnMut([u32; 4], [u32; 4], usize)) {
    let mut abuf = [0u32; 4];
    let mut bbuf = [0u32; 4];
    let mut fill = 0;
    for_each_pair(cfg, |a, b| {
        abuf[fill] = a;
        bbuf[fill] = b;
        fill += 1;
        if fill == 4 {
            f(abuf, bbuf, 4);
            fill = 0;
        }
    });
    if fill > 0 {
        for lane in fill..4 {
            abuf[lane] = 0;
            bbuf[lane] = 0;
        }
        f(abuf, bbuf, fill);
    }
}

fn modmul_scalar_pattern() -> IrExpr {
    let res = Var::new("res", IrType::MODINT);
    let a = Var::new("a", IrType::MODINT);
    let b = Var::new("b", IrType::MODINT);
    IrExpr::assign(
        res,
        IrExpr::bin(BinOp::Mul, IrExpr::var(&a), IrExpr::var(&b)),
    )
}

fn modmul_vec_pattern() -> IrExpr {
    let v4m = IrType::vect(ScalarType::ModInt, 4);
    let res = Var::new("res", v4m);
    let a = Var::new("a", v4m);
    let b = Var::new("b", v4m);
    IrExpr::assign(
        res,
        IrExpr::bin(BinOp::Mul, IrExpr::var(&a), IrExpr::var(&b)),
    )
}

/// Runs the full campaign. The returned report carries one scorecard
/// per route plus the observed trace extremes; `passed()` folds them.
pub fn run_campaign(cfg: &VerifyConfig) -> Result<CampaignReport, VerifyError> {
    let params = ModParams::new(cfg.p, cfg.l)?;
    if cfg.mode == VerifyMode::Exhaustive && cfg.p > EXHAUSTIVE_MAX_P {
        return Err(VerifyError::ExhaustiveTooLarge { p: cfg.p });
    }
    let p = cfg.p;
    let p64 = u64::from(p);

    let mut report = CampaignReport {
        p,
        l: cfg.l,
        mode: cfg.mode,
        algorithms: Vec::new(),
        barrett_max_iterations: 0,
        barrett_max_t_pre: 0,
        redc_max_t_pre: 0,
        fourier_t_range: None,
    };

    // Barrett, with the correction-loop envelope.
    let mut barrett = AlgoReport::new("barrett");
    for_each_pair(cfg, |a, b| {
        let expected = mod_mul_naive(a, b, p);
        let tr = params.barrett_mul_traced(a, b);
        barrett.record(a, b, expected, tr.value);
        report.barrett_max_iterations = report.barrett_max_iterations.max(tr.iterations);
        report.barrett_max_t_pre = report.barrett_max_t_pre.max(tr.t_pre);
        if tr.iterations > 3 || tr.t_pre >= 4 * p64 {
            barrett.bound_violations += 1;
        }
    });
    report.algorithms.push(barrett);

    // Montgomery: into the domain, reduce, and back out.
    let mut montgomery = AlgoReport::new("montgomery");
    for_each_pair(cfg, |a, b| {
        let expected = mod_mul_naive(a, b, p);
        let abar = params.to_mont(a);
        let bbar = params.to_mont(b);
        let tr = params.redc_traced(u64::from(abar) * u64::from(bbar));
        montgomery.record(a, b, expected, params.from_mont(tr.value));
        report.redc_max_t_pre = report.redc_max_t_pre.max(tr.t_pre);
        if tr.t_pre >= 2 * p64 {
            montgomery.bound_violations += 1;
        }
    });
    report.algorithms.push(montgomery);

    // Fourier-form REDC, when the modulus supports it.
    if params.fourier().is_some() {
        let mut fourier = AlgoReport::new("fourier");
        let (mut t_min, mut t_max) = (i64::MAX, i64::MIN);
        for_each_pair(cfg, |a, b| {
            let expected = mod_mul_naive(a, b, p);
            let abar = params.to_mont(a);
            let bbar = params.to_mont(b);
            let tr = params
                .fourier_redc_traced(abar, bbar)
                .expect("fourier form present");
            fourier.record(a, b, expected, params.from_mont(tr.value));
            t_min = t_min.min(tr.t);
            t_max = t_max.max(tr.t);
            let bound = i64::from(p) - 1;
            if tr.t < -bound || tr.t > 2 * bound || tr.r3 != 0 {
                fourier.bound_violations += 1;
            }
        });
        if fourier.pairs > 0 {
            report.fourier_t_range = Some((t_min, t_max));
        }
        report.algorithms.push(fourier);
    }

    // The four-lane kernel under every gather strategy.
    for strategy in GatherStrategy::ALL {
        let mut vec4 = AlgoReport::new(format!("vector4/{}", strategy.slug()));
        for_each_quad(cfg, |aq, bq, live| {
            let abar = VecU32x4(aq.map(|x| params.to_mont(x)));
            let bbar = VecU32x4(bq.map(|x| params.to_mont(x)));
            let got = vkernels::mont_mul4(abar, bbar, &params, strategy);
            for lane in 0..live {
                let expected = mod_mul_naive(aq[lane], bq[lane], p);
                vec4.record(aq[lane], bq[lane], expected, params.from_mont(got.0[lane]));
            }
        });
        report.algorithms.push(vec4);
    }

    // The generated scalar kernel on the interpreter.
    let scalar_prog =
        rewrite_modmul_scalar(&modmul_scalar_pattern(), &params).expect("scalar rewrite");
    let mut ir_scalar = AlgoReport::new("ir-scalar");
    for_each_pair(cfg, |a, b| {
        let expected = mod_mul_naive(a, b, p);
        let got = run_scalar_program(&scalar_prog, &params, a, b);
        ir_scalar.record(a, b, expected, got);
    });
    report.algorithms.push(ir_scalar);

    // The generated vector kernel on the interpreter, per strategy.
    let isa = irgen::builtin();
    for strategy in GatherStrategy::ALL {
        let prog = rewrite_modmul_vec(&modmul_vec_pattern(), &isa, &params, strategy)
            .expect("vector rewrite");
        let mut ir_vec = AlgoReport::new(format!("ir-vector4/{}", strategy.slug()));
        for_each_quad(cfg, |aq, bq, live| {
            let got = run_vector_program(&prog, &params, aq, bq);
            for lane in 0..live {
                let expected = mod_mul_naive(aq[lane], bq[lane], p);
                ir_vec.record(aq[lane], bq[lane], expected, params.from_mont(got[lane]));
            }
        });
        report.algorithms.push(ir_vec);
    }

    Ok(report)
}

fn run_scalar_program(prog: &KernelProgram, params: &ModParams, a: u32, b: u32) -> u32 {
    let mut env = Env::new();
    env.set("a", Value::Scalar(u64::from(params.to_mont(a))));
    env.set("b", Value::Scalar(u64::from(params.to_mont(b))));
    interpret(prog, &mut env).expect("scalar chain interprets");
    let out = env
        .get("res")
        .expect("res bound")
        .as_scalar()
        .expect("scalar result") as u32;
    params.from_mont(out)
}

fn run_vector_program(
    prog: &KernelProgram,
    params: &ModParams,
    aq: [u32; 4],
    bq: [u32; 4],
) -> [u32; 4] {
    let mut env = Env::new();
    env.set("a", Value::V4(aq.map(|x| params.to_mont(x))));
    env.set("b", Value::V4(bq.map(|x| params.to_mont(x))));
    interpret(prog, &mut env).expect("vector chain interprets");
    env.get("res")
        .expect("res bound")
        .as_u32x4()
        .expect("vector result")
}

/// Renders the report as the fixed-format text the CLI prints.
pub fn render_text(report: &CampaignReport) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "verify P={} l={} mode={}",
        report.p, report.l, report.mode
    );
    for algo in &report.algorithms {
        let status = if algo.passed() { "pass" } else { "FAIL" };
        let _ = write!(out, "  {:<29} {:>10} pairs  {status}", algo.name, algo.pairs);
        if let Some(m) = algo.first_failure {
            let _ = write!(
                out,
                "  first: a={} b={} expected={} got={}",
                m.a, m.b, m.expected, m.got
            );
        }
        if algo.bound_violations > 0 {
            let _ = write!(out, "  bound-violations={}", algo.bound_violations);
        }
        out.push('\n');
    }
    let _ = writeln!(
        out,
        "  barrett max iterations = {} (<= 3), max pre-loop t = {} (< 4P = {})",
        report.barrett_max_iterations,
        report.barrett_max_t_pre,
        4 * u64::from(report.p)
    );
    let _ = writeln!(
        out,
        "  redc max pre-subtract t = {} (< 2P = {})",
        report.redc_max_t_pre,
        2 * u64::from(report.p)
    );
    match report.fourier_t_range {
        Some((lo, hi)) => {
            let b = i64::from(report.p) - 1;
            let _ = writeln!(
                out,
                "  fourier t range = [{lo}, {hi}] (within [{}, {}])",
                -b,
                2 * b
            );
        }
        None => {
            let _ = writeln!(out, "  fourier: skipped (modulus has no c*2^n + 1 form)");
        }
    }
    let _ = writeln!(
        out,
        "result: {}",
        if report.passed() { "PASS" } else { "FAIL" }
    );
    out
}
