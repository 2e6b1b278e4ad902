//! C ABI over the modular-arithmetic library and the kernel generator.
//!
//! The surface follows the usual conventions for C-callable Rust:
//!
//! * [`ModgenParams`] is an opaque handle created by [`modgen_params_new`]
//!   and released by [`modgen_params_free`].
//! * Fallible calls return a [`ModgenStatus`]; `MODGEN_STATUS_OK` is zero.
//!   After a failure, [`modgen_last_error`] returns a thread-local,
//!   NUL-terminated message that stays valid until the next failing call
//!   on the same thread.
//! * Strings handed out by the library ([`modgen_kernel_c`]) are owned by
//!   the caller and must be released with [`modgen_string_free`].
//!
//! The generated header lives in `include/modgen.h` and is refreshed by
//! the build script.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::slice;

use modgen::irgen::{
    builtin, rewrite_modmul_scalar, rewrite_modmul_vec, select_strategy, unparse, BinOp, IrExpr,
    IrType, ScalarType, Var,
};
use modgen::modarith::{self, find_fourier_primes, ModParams};
use modgen::vkernels::{self, simd, GatherStrategy};

/// Result code for every fallible entry point. Zero means success; any
/// other value pairs with a message from [`modgen_last_error`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModgenStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was NULL.
    NullArgument = 1,
    /// The modulus/width pair was rejected (composite, too wide, ...).
    BadParams = 2,
    /// The modulus has no usable `c * 2^n + 1` decomposition.
    NoFourierForm = 3,
    /// The request cannot be served (unknown strategy, rewrite refused).
    Unsupported = 4,
    /// An internal invariant failed; please report the message.
    Internal = 5,
}

/// Lane-gather strategy selector for batch multiplies and kernel text.
/// `Auto` picks the cheapest strategy for the built-in instruction set.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModgenStrategy {
    Auto = 0,
    FloatShuffleCast = 1,
    ShuffleUnpack = 2,
    Blend = 3,
}

/// A prime of the form `c * 2^n + 1`, as returned by
/// [`modgen_find_fourier_primes`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModgenFourierPrime {
    pub p: u32,
    pub c: u32,
    pub n: u32,
}

/// Opaque handle holding the precomputed reduction constants for one
/// modulus. Create with [`modgen_params_new`], release with
/// [`modgen_params_free`]. The handle is immutable and may be shared
/// across threads.
pub struct ModgenParams {
    inner: ModParams,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn fail(status: ModgenStatus, msg: &str) -> ModgenStatus {
    let sanitized: String = msg
        .chars()
        .map(|ch| if ch == '\0' { ' ' } else { ch })
        .collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
    status
}

fn resolve_strategy(strategy: ModgenStrategy) -> GatherStrategy {
    match strategy {
        ModgenStrategy::Auto => select_strategy(&builtin()),
        ModgenStrategy::FloatShuffleCast => GatherStrategy::FloatShuffleCast,
        ModgenStrategy::ShuffleUnpack => GatherStrategy::ShuffleUnpack,
        ModgenStrategy::Blend => GatherStrategy::BlendAvx2,
    }
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

/// Returns the message recorded by the most recent failing call on this
/// thread, or an empty string if nothing failed yet. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn modgen_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Builds the reduction constants for modulus `p` with word size `l`
/// (so `R = 2^l`) and stores the new handle through `out`.
///
/// # Safety
///
/// `out` must be NULL or point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn modgen_params_new(
    p: u32,
    l: u32,
    out: *mut *mut ModgenParams,
) -> ModgenStatus {
    if out.is_null() {
        return fail(ModgenStatus::NullArgument, "out pointer is NULL");
    }
    match ModParams::new(p, l) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(ModgenParams { inner }));
            ModgenStatus::Ok
        }
        Err(err) => fail(ModgenStatus::BadParams, &err.to_string()),
    }
}

/// Releases a handle created by [`modgen_params_new`]. NULL is ignored.
///
/// # Safety
///
/// `params` must be NULL or a pointer returned by [`modgen_params_new`]
/// that has not been freed already.
#[no_mangle]
pub unsafe extern "C" fn modgen_params_free(params: *mut ModgenParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

// The accessors below are written out one by one rather than through a
// macro: the header generator reads the source before macro expansion,
// so macro-made functions would silently drop out of `modgen.h`.

/// Returns the modulus, or 0 if `params` is NULL.
///
/// # Safety
///
/// `params` must be NULL or a live handle from [`modgen_params_new`].
#[no_mangle]
pub unsafe extern "C" fn modgen_params_p(params: *const ModgenParams) -> u32 {
    if params.is_null() {
        return 0;
    }
    (*params).inner.p()
}

/// Returns the word size `l` (with `R = 2^l`), or 0 if `params` is NULL.
///
/// # Safety
///
/// `params` must be NULL or a live handle from [`modgen_params_new`].
#[no_mangle]
pub unsafe extern "C" fn modgen_params_l(params: *const ModgenParams) -> u32 {
    if params.is_null() {
        return 0;
    }
    (*params).inner.l()
}

/// Returns the domain inverse `R^-1 mod P`, or 0 if `params` is NULL.
///
/// # Safety
///
/// `params` must be NULL or a live handle from [`modgen_params_new`].
#[no_mangle]
pub unsafe extern "C" fn modgen_params_r_inv(params: *const ModgenParams) -> u32 {
    if params.is_null() {
        return 0;
    }
    (*params).inner.r_inv()
}

/// Returns `P' = -P^-1 mod R`, or 0 if `params` is NULL.
///
/// # Safety
///
/// `params` must be NULL or a live handle from [`modgen_params_new`].
#[no_mangle]
pub unsafe extern "C" fn modgen_params_p_prime(params: *const ModgenParams) -> u32 {
    if params.is_null() {
        return 0;
    }
    (*params).inner.p_prime()
}

/// Returns `R^2 mod P`, or 0 if `params` is NULL.
///
/// # Safety
///
/// `params` must be NULL or a live handle from [`modgen_params_new`].
#[no_mangle]
pub unsafe extern "C" fn modgen_params_r2_mod_p(params: *const ModgenParams) -> u32 {
    if params.is_null() {
        return 0;
    }
    (*params).inner.r2_mod_p()
}

/// Returns the folding constant `floor(2^(2k) / P)` with `k` the bit
/// length of `P`, or 0 if `params` is NULL.
///
/// # Safety
///
/// `params` must be NULL or a live handle from [`modgen_params_new`].
#[no_mangle]
pub unsafe extern "C" fn modgen_params_p_prime_barrett(params: *const ModgenParams) -> u64 {
    if params.is_null() {
        return 0;
    }
    (*params).inner.p_prime_barrett()
}

/// Reports whether the modulus has a usable `c * 2^n + 1` decomposition
/// and, when it does, writes `c` and `n` through the non-NULL out
/// pointers.
///
/// # Safety
///
/// `params` must be NULL or a live handle; `c` and `n` must each be NULL
/// or point to writable storage for one `uint32_t`.
#[no_mangle]
pub unsafe extern "C" fn modgen_params_fourier_form(
    params: *const ModgenParams,
    c: *mut u32,
    n: *mut u32,
) -> bool {
    if params.is_null() {
        return false;
    }
    match (*params).inner.fourier() {
        Some(form) => {
            if !c.is_null() {
                *c = form.c;
            }
            if !n.is_null() {
                *n = form.n;
            }
            true
        }
        None => false,
    }
}

/// Montgomery product of two residues already in the `xR mod P` domain.
/// Returns 0 if `params` is NULL.
///
/// # Safety
///
/// `params` must be NULL or a live handle from [`modgen_params_new`].
#[no_mangle]
pub unsafe extern "C" fn modgen_mont_mul(params: *const ModgenParams, abar: u32, bbar: u32) -> u32 {
    if params.is_null() {
        return 0;
    }
    (*params).inner.mont_mul(abar, bbar)
}

/// Product of two plain residues, reduced with the folding method.
/// Returns 0 if `params` is NULL.
///
/// # Safety
///
/// `params` must be NULL or a live handle from [`modgen_params_new`].
#[no_mangle]
pub unsafe extern "C" fn modgen_barrett_mul(params: *const ModgenParams, a: u32, b: u32) -> u32 {
    if params.is_null() {
        return 0;
    }
    (*params).inner.barrett_mul(a, b)
}

/// Maps a residue into the `xR mod P` domain. Returns 0 if `params` is
/// NULL.
///
/// # Safety
///
/// `params` must be NULL or a live handle from [`modgen_params_new`].
#[no_mangle]
pub unsafe extern "C" fn modgen_to_mont(params: *const ModgenParams, x: u32) -> u32 {
    if params.is_null() {
        return 0;
    }
    (*params).inner.to_mont(x)
}

/// Maps a residue out of the `xR mod P` domain. Returns 0 if `params` is
/// NULL.
///
/// # Safety
///
/// `params` must be NULL or a live handle from [`modgen_params_new`].
#[no_mangle]
pub unsafe extern "C" fn modgen_from_mont(params: *const ModgenParams, xbar: u32) -> u32 {
    if params.is_null() {
        return 0;
    }
    (*params).inner.from_mont(xbar)
}

/// Montgomery product computed with the signed reduction that the
/// `c * 2^n + 1` shape permits. Fails with `MODGEN_STATUS_NO_FOURIER_FORM`
/// when the modulus has no usable decomposition.
///
/// # Safety
///
/// `params` must be a live handle or NULL; `out` must be NULL or point to
/// writable storage for one `uint32_t`.
#[no_mangle]
pub unsafe extern "C" fn modgen_fourier_redc(
    params: *const ModgenParams,
    abar: u32,
    bbar: u32,
    out: *mut u32,
) -> ModgenStatus {
    if params.is_null() || out.is_null() {
        return fail(ModgenStatus::NullArgument, "params/out pointer is NULL");
    }
    match (*params).inner.fourier_redc(abar, bbar) {
        Ok(value) => {
            *out = value;
            ModgenStatus::Ok
        }
        Err(err) => fail(ModgenStatus::NoFourierForm, &err.to_string()),
    }
}

/// Modular addition of residues `a, b < p`. Returns 0 if `p` is 0.
#[no_mangle]
pub extern "C" fn modgen_mod_add(a: u32, b: u32, p: u32) -> u32 {
    if p == 0 {
        return 0;
    }
    modarith::mod_add(a, b, p)
}

/// Modular subtraction of residues `a, b < p`. Returns 0 if `p` is 0.
#[no_mangle]
pub extern "C" fn modgen_mod_sub(a: u32, b: u32, p: u32) -> u32 {
    if p == 0 {
        return 0;
    }
    modarith::mod_sub(a, b, p)
}

/// Modular product via a plain 64-bit widening multiply and remainder.
/// Returns 0 if `p` is 0.
#[no_mangle]
pub extern "C" fn modgen_mod_mul_naive(a: u32, b: u32, p: u32) -> u32 {
    if p == 0 {
        return 0;
    }
    modarith::mod_mul_naive(a, b, p)
}

/// Element-wise Montgomery product of two arrays of `len` residues in the
/// `xR mod P` domain, written to `out`. Runs on vector hardware when the
/// CPU supports the chosen strategy and falls back to a bit-exact
/// portable path otherwise.
///
/// # Safety
///
/// `params` must be a live handle. `a`, `b`, and `out` must each point to
/// `len` readable (respectively writable) `uint32_t` values; they may be
/// NULL only when `len` is 0.
#[no_mangle]
pub unsafe extern "C" fn modgen_mont_mul_batch(
    params: *const ModgenParams,
    a: *const u32,
    b: *const u32,
    out: *mut u32,
    len: usize,
    strategy: ModgenStrategy,
) -> ModgenStatus {
    if params.is_null() {
        return fail(ModgenStatus::NullArgument, "params pointer is NULL");
    }
    if len == 0 {
        return ModgenStatus::Ok;
    }
    if a.is_null() || b.is_null() || out.is_null() {
        return fail(ModgenStatus::NullArgument, "array pointer is NULL");
    }
    let inner = &(*params).inner;
    let strat = resolve_strategy(strategy);
    let abar = slice::from_raw_parts(a, len);
    let bbar = slice::from_raw_parts(b, len);
    let use_hw = simd::available()
        && (strat != GatherStrategy::BlendAvx2 || simd::blend_available());
    let result = if use_hw {
        simd::mont_mul_batch(abar, bbar, inner, strat)
    } else {
        vkernels::mont_mul_batch(abar, bbar, inner, strat)
    };
    match result {
        Ok(values) => {
            slice::from_raw_parts_mut(out, len).copy_from_slice(&values);
            ModgenStatus::Ok
        }
        Err(err) => fail(ModgenStatus::Internal, &err.to_string()),
    }
}

/// Generates C source for a Montgomery-multiply kernel specialized to
/// `params`: the four-lane vector kernel for the built-in instruction
/// set, or the portable scalar kernel when `scalar` is true (`strategy`
/// is then ignored). On success `*out` receives a NUL-terminated string
/// owned by the caller; release it with [`modgen_string_free`].
///
/// # Safety
///
/// `params` must be a live handle or NULL; `out` must be NULL or point to
/// writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn modgen_kernel_c(
    params: *const ModgenParams,
    strategy: ModgenStrategy,
    scalar: bool,
    out: *mut *mut c_char,
) -> ModgenStatus {
    if params.is_null() || out.is_null() {
        return fail(ModgenStatus::NullArgument, "params/out pointer is NULL");
    }
    let inner = &(*params).inner;
    let program = if scalar {
        rewrite_modmul_scalar(&modmul_pattern(IrType::MODINT), inner)
    } else {
        let isa = builtin();
        let strat = resolve_strategy(strategy);
        rewrite_modmul_vec(
            &modmul_pattern(IrType::vect(ScalarType::ModInt, 4)),
            &isa,
            inner,
            strat,
        )
    };
    let program = match program {
        Ok(program) => program,
        Err(err) => return fail(ModgenStatus::Unsupported, &err.to_string()),
    };
    match unparse(&program) {
        Ok(text) => match CString::new(text) {
            Ok(cstring) => {
                *out = cstring.into_raw();
                ModgenStatus::Ok
            }
            Err(_) => fail(ModgenStatus::Internal, "kernel text contained NUL"),
        },
        Err(err) => fail(ModgenStatus::Internal, &err.to_string()),
    }
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
///
/// `s` must be NULL or a pointer previously handed out by
/// [`modgen_kernel_c`] that has not been freed already.
#[no_mangle]
pub unsafe extern "C" fn modgen_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Enumerates primes of the form `c * 2^n + 1` whose bit length lies in
/// `[bit_low, bit_high]`, largest `n` first within a bit length.
///
/// Always writes the total number of matching primes through `out_len`.
/// When `buf` is non-NULL, up to `cap` entries are copied into it; call
/// once with `buf` NULL to size the buffer, then again to fill it.
///
/// # Safety
///
/// `out_len` must point to writable storage for one `size_t`; `buf` must
/// be NULL or point to `cap` writable entries.
#[no_mangle]
pub unsafe extern "C" fn modgen_find_fourier_primes(
    bit_low: u32,
    bit_high: u32,
    buf: *mut ModgenFourierPrime,
    cap: usize,
    out_len: *mut usize,
) -> ModgenStatus {
    if out_len.is_null() {
        return fail(ModgenStatus::NullArgument, "out_len pointer is NULL");
    }
    let primes = match find_fourier_primes(bit_low, bit_high, None) {
        Ok(primes) => primes,
        Err(err) => return fail(ModgenStatus::BadParams, &err.to_string()),
    };
    *out_len = primes.len();
    if !buf.is_null() {
        let take = primes.len().min(cap);
        let dst = slice::from_raw_parts_mut(buf, take);
        for (slot, prime) in dst.iter_mut().zip(primes.iter()) {
            *slot = ModgenFourierPrime {
                p: prime.p,
                c: prime.c,
                n: prime.n,
            };
        }
    }
    ModgenStatus::Ok
}
