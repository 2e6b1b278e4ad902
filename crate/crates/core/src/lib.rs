//! Word-size modular arithmetic for odd primes `P < 2^31`, plus a miniature
//! kernel generator that turns the vectorized Montgomery multiply into C.
//!
//! The crate has three layers:
//!
//! * [`modarith`] — scalar kernels: Barrett reduction, Montgomery REDC,
//!   the specialized REDC for Fourier primes `P = c*2^n + 1`, and discovery
//!   of such primes.
//! * [`vkernels`] — the 4-lane Montgomery multiply on 128-bit registers,
//!   with a portable lane-by-lane reference backend and a hardware SSE
//!   backend behind [`vkernels::simd`]. The three even/odd product gather
//!   strategies live here.
//! * [`irgen`] — a typed expression IR with modular-type unification, ISA
//!   descriptors, rewrite rules that expand a modular multiply into the
//!   scalar or 4-lane instruction chain, a bit-exact interpreter, and a
//!   deterministic C unparser.
//!
//! [`verify`] and [`bench`] drive equivalence campaigns and throughput
//! measurements over all of the above; the `modgen` binary (see [`cli`])
//! exposes them as `gen` / `verify` / `primes` / `bench` subcommands.

pub mod bench;
pub mod cli;
pub mod irgen;
pub mod modarith;
pub mod rng;
pub mod verify;
pub mod vkernels;

pub use modarith::{
    find_fourier_primes, mod_add, mod_mul_naive, mod_sub, FourierPrime, ModParams, ParamError,
};
pub use rng::SplitMix64;
pub use vkernels::{GatherStrategy, KernelError, VecU32x4, VecU64x2};

