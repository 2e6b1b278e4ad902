//! The `modgen` command line: kernel generation, equivalence
//! campaigns, Fourier-prime discovery, and throughput measurement.
//!
//! Exit codes: 0 on success, 1 when a verification or cross-check
//! found a mismatch, 2 for usage and configuration errors (including
//! those clap reports itself).

use crate::bench::{self, BenchAlgorithm, BenchConfig, BenchError};
use crate::irgen::{
    builtin, load_isa, rewrite_modmul_scalar, rewrite_modmul_vec, select_strategy, unparse,
    BinOp, IrExpr, IrType, IsaDescriptor, ScalarType, Var,
};
use crate::modarith::{find_fourier_primes, ModParams};
use crate::verify::{self, VerifyConfig, VerifyError, VerifyMode};
use crate::vkernels::GatherStrategy;
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::str::FromStr;

pub const EXIT_OK: i32 = 0;
pub const EXIT_MISMATCH: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "modgen",
    version,
    about = "Modular multiply kernels: generate, verify, list Fourier primes, benchmark"
)]
pub struct Cli {
    /// Seed for every randomized operand stream.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,

    /// Write CSV output (bench results, prime rows) to this file.
    #[arg(long, global = true, value_name = "PATH")]
    pub csv: Option<PathBuf>,

    /// Suppress informational output.
    #[arg(long, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a multiply kernel as C text.
    Gen {
        /// Built-in ISA name or path to an ISA descriptor JSON file.
        #[arg(long, default_value = "sse4x32m")]
        isa: String,
        /// Odd prime modulus below 2^31.
        #[arg(long)]
        prime: u32,
        /// Word size: reductions run modulo R = 2^l.
        #[arg(long, default_value_t = 32)]
        l: u32,
        /// Gather strategy: float-shuffle-cast, shuffle-unpack, blend,
        /// or auto to pick by ISA cost.
        #[arg(long, default_value = "auto")]
        strategy: String,
        /// Output file; stdout when absent.
        #[arg(short, long, value_name = "PATH")]
        out: Option<PathBuf>,
        /// Emit the scalar kernel instead of the four-lane one.
        #[arg(long)]
        scalar: bool,
    },
    /// Replay every multiply route against the naive oracle.
    Verify {
        /// Odd prime modulus below 2^31.
        #[arg(long)]
        prime: u32,
        /// Word size; defaults to the bit length of the prime.
        #[arg(long)]
        l: Option<u32>,
        /// exhaustive (all pairs, P <= 4096) or random.
        #[arg(long, default_value = "random")]
        mode: String,
        /// Operand pairs in random mode.
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
    },
    /// List primes of the form c * 2^n + 1 by bit length.
    Primes {
        /// Inclusive bit-length range, two values between 3 and 31.
        #[arg(long, num_args = 2, value_names = ["LOW", "HIGH"], required = true)]
        bits: Vec<u32>,
        /// Stop after this many primes.
        #[arg(long)]
        count: Option<usize>,
    },
    /// Time the multiply routes over a seeded operand batch.
    Bench {
        /// Odd prime modulus below 2^31.
        #[arg(long)]
        prime: u32,
        /// Word size; defaults to the bit length of the prime.
        #[arg(long)]
        l: Option<u32>,
        /// Comma-separated: naive, barrett, montgomery, fourier, vector4.
        #[arg(long, default_value = "naive,montgomery,vector4")]
        algorithms: String,
        /// Operand pairs per timed pass (at least 4).
        #[arg(long, default_value_t = 65_536)]
        batch: usize,
        /// Timed passes per route; the median is reported.
        #[arg(long, default_value_t = 25)]
        reps: u32,
    },
}

fn bitlen(p: u32) -> u32 {
    32 - p.leading_zeros()
}

/// Parses argv and runs; the returned code is the process exit status.
pub fn run() -> i32 {
    let cli = Cli::parse();
    dispatch(cli)
}

pub fn dispatch(cli: Cli) -> i32 {
    match cli.command {
        Command::Gen {
            ref isa,
            prime,
            l,
            ref strategy,
            ref out,
            scalar,
        } => cmd_gen(&cli, isa, prime, l, strategy, out.as_deref(), scalar),
        Command::Verify {
            prime,
            l,
            ref mode,
            samples,
        } => cmd_verify(&cli, prime, l, mode, samples),
        Command::Primes { ref bits, count } => cmd_primes(&cli, bits, count),
        Command::Bench {
            prime,
            l,
            ref algorithms,
            batch,
            reps,
        } => cmd_bench(&cli, prime, l, algorithms, batch, reps),
    }
}

fn load_isa_arg(name: &str) -> Result<IsaDescriptor, String> {
    let built = builtin();
    if name == built.name {
        return Ok(built);
    }
    let path = std::path::Path::new(name);
    if !path.exists() {
        return Err(format!(
            "unknown ISA `{name}`: not the built-in `{}` and not a readable file",
            built.name
        ));
    }
    let text =
        std::fs::read_to_string(path).map_err(|e| format!("cannot read ISA `{name}`: {e}"))?;
    load_isa(&text).map_err(|e| format!("bad ISA descriptor `{name}`: {e}"))
}

fn modmul_pattern(ty: IrType) -> IrExpr {
    let res = Var::new("res", ty);
    let a = Var::new("a", ty);
    let b = Var::new("b", ty);
    IrExpr::assign(
        res,
        IrExpr::bin(BinOp::Mul, IrExpr::var(&a), IrExpr::var(&b)),
    )
}

fn cmd_gen(
    cli: &Cli,
    isa_arg: &str,
    prime: u32,
    l: u32,
    strategy_arg: &str,
    out: Option<&std::path::Path>,
    scalar: bool,
) -> i32 {
    let params = match ModParams::new(prime, l) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };

    let (text, info) = if scalar {
        let prog = match rewrite_modmul_scalar(&modmul_pattern(IrType::MODINT), &params) {
            Ok(p) => p,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_USAGE;
            }
        };
        let text = match unparse(&prog) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_MISMATCH;
            }
        };
        (text, format!("gen: scalar kernel P={prime} l={l}"))
    } else {
        let isa = match load_isa_arg(isa_arg) {
            Ok(isa) => isa,
            Err(message) => {
                eprintln!("error: {message}");
                return EXIT_USAGE;
            }
        };
        let (strategy, chosen) = if strategy_arg == "auto" {
            (select_strategy(&isa), true)
        } else {
            match GatherStrategy::from_str(strategy_arg) {
                Ok(s) => (s, false),
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_USAGE;
                }
            }
        };
        let pattern = modmul_pattern(IrType::vect(ScalarType::ModInt, 4));
        let prog = match rewrite_modmul_vec(&pattern, &isa, &params, strategy) {
            Ok(p) => p,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_USAGE;
            }
        };
        let text = match unparse(&prog) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_MISMATCH;
            }
        };
        let how = if chosen { "auto-selected" } else { "requested" };
        (
            text,
            format!(
                "gen: four-lane kernel P={prime} l={l} isa={} strategy={} ({how})",
                isa.name,
                strategy.slug()
            ),
        )
    };

    if !cli.quiet {
        eprintln!("{info}");
    }
    match out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return EXIT_MISMATCH;
            }
            if !cli.quiet {
                eprintln!("gen: wrote {}", path.display());
            }
        }
        None => print!("{text}"),
    }
    EXIT_OK
}

fn cmd_verify(cli: &Cli, prime: u32, l: Option<u32>, mode_arg: &str, samples: u64) -> i32 {
    let mode = match VerifyMode::from_str(mode_arg) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let cfg = VerifyConfig {
        p: prime,
        l: l.unwrap_or_else(|| bitlen(prime)),
        mode,
        samples,
        seed: cli.seed,
    };
    let report = match verify::run_campaign(&cfg) {
        Ok(r) => r,
        Err(e @ (VerifyError::Params(_) | VerifyError::ExhaustiveTooLarge { .. })) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let text = verify::render_text(&report);
    if cli.quiet {
        if let Some(last) = text.lines().last() {
            println!("{last}");
        }
    } else {
        print!("{text}");
    }
    if report.passed() {
        EXIT_OK
    } else {
        EXIT_MISMATCH
    }
}

fn cmd_primes(cli: &Cli, bits: &[u32], count: Option<usize>) -> i32 {
    let (lo, hi) = (bits[0], bits[1]);
    let primes = match find_fourier_primes(lo, hi, count) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    if let Some(path) = &cli.csv {
        let mut text = String::from("p,c,n,l\n");
        for fp in &primes {
            text.push_str(&format!("{},{},{},{}\n", fp.p, fp.c, fp.n, bitlen(fp.p)));
        }
        if let Err(e) = std::fs::write(path, text) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return EXIT_MISMATCH;
        }
        if !cli.quiet {
            eprintln!("primes: wrote {} rows to {}", primes.len(), path.display());
        }
    } else {
        for fp in &primes {
            println!("P={} c={} n={} l={}", fp.p, fp.c, fp.n, bitlen(fp.p));
        }
    }
    EXIT_OK
}

fn cmd_bench(
    cli: &Cli,
    prime: u32,
    l: Option<u32>,
    algorithms_arg: &str,
    batch: usize,
    reps: u32,
) -> i32 {
    let mut algorithms = Vec::new();
    for part in algorithms_arg.split(',').filter(|s| !s.is_empty()) {
        match BenchAlgorithm::from_str(part.trim()) {
            Ok(a) => algorithms.push(a),
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_USAGE;
            }
        }
    }
    let cfg = BenchConfig {
        p: prime,
        l: l.unwrap_or_else(|| bitlen(prime)),
        algorithms,
        batch,
        reps,
        seed: cli.seed,
    };
    let records = match bench::run(&cfg) {
        Ok(r) => r,
        Err(e @ (BenchError::Params(_) | BenchError::InvalidConfig(_))) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
        Err(e @ BenchError::CrossCheck { .. }) => {
            eprintln!("error: {e}");
            return EXIT_MISMATCH;
        }
    };
    let csv = bench::to_csv(&records);
    match &cli.csv {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &csv) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return EXIT_MISMATCH;
            }
            if !cli.quiet {
                eprintln!("bench: wrote {}", path.display());
            }
        }
        None => print!("{csv}"),
    }
    EXIT_OK
}
