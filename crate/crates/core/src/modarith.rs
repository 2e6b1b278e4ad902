//! Scalar modular arithmetic for odd primes `P < 2^31`.
//!
//! Everything revolves around [`ModParams`], the per-modulus constant block:
//! Barrett constants (`k = ceil(log2 P)`, `P'_B = floor(2^(2k) / P)`),
//! Montgomery constants for `R = 2^l` (`R^-1 mod P` and `P'` with
//! `R*R^-1 - P*P' = 1`), and — when `P - 1 = c * 2^n` with `c` odd and
//! `2n >= l` — the Fourier form `(c, n)` that enables a division-free REDC
//! variant using only shifts and multiplies by `c * 2^n ≡ -1 (mod P)`.
//!
//! The `*_traced` variants return the internal quantities the plain calls
//! discard (Barrett loop counts, pre-subtraction values, the signed Fourier
//! accumulator); verification campaigns assert the documented ranges on them.

use thiserror::Error;

/// Construction and usage errors for [`ModParams`].
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParamError {
    #[error("modulus {0} is even; an odd prime is required")]
    NotOdd(u32),
    #[error("modulus {0} is too small; the smallest supported modulus is 5")]
    TooSmall(u32),
    #[error("modulus {0} does not fit the signed-headroom bound P < 2^31")]
    TooLarge(u32),
    #[error("modulus {0} is not prime")]
    NotPrime(u32),
    #[error("l = {0} is out of range; R = 2^l must satisfy l <= 32")]
    LTooLarge(u32),
    #[error("R = 2^{l} does not exceed the modulus {p}")]
    RTooSmall { p: u32, l: u32 },
    #[error("modulus {p} with l = {l} has no Fourier form c * 2^n + 1 with 2n >= l")]
    NoFourierForm { p: u32, l: u32 },
    #[error("bit range [{lo}, {hi}] invalid; need 3 <= lo <= hi <= 31")]
    BadBitRange { lo: u32, hi: u32 },
}

/// The decomposition `P = c * 2^n + 1` with `c` odd.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FourierForm {
    pub c: u32,
    pub n: u32,
}

/// A prime found by [`find_fourier_primes`], with its decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FourierPrime {
    pub p: u32,
    pub c: u32,
    pub n: u32,
}

/// Precomputed reduction constants for one modulus and one choice of
/// `R = 2^l`. Constructed by [`ModParams::new`]; the fields are read-only
/// because the arithmetic relies on their mutual invariants
/// (`R*R^-1 - P*P' = 1`, `P'_B * P <= 2^(2k) < (P'_B + 1) * P`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModParams {
    p: u32,
    l: u32,
    r: u64,
    r_inv: u32,
    p_prime: u32,
    r2_mod_p: u32,
    k_barrett: u32,
    p_prime_barrett: u64,
    fourier: Option<FourierForm>,
}

/// Barrett multiply with the internals the verification campaign inspects.
#[derive(Clone, Copy, Debug)]
pub struct BarrettTrace {
    pub value: u32,
    /// Correction-loop iterations; provably at most 3.
    pub iterations: u32,
    /// `a*b - q*P` before the loop; provably below `4P`.
    pub t_pre: u64,
}

/// REDC with the pre-subtraction value exposed.
#[derive(Clone, Copy, Debug)]
pub struct RedcTrace {
    pub value: u32,
    /// `(T + m*P) / R` before the conditional subtract; provably below `2P`.
    pub t_pre: u64,
}

/// Fourier REDC with the signed accumulator and final remainder exposed.
#[derive(Clone, Copy, Debug)]
pub struct FourierTrace {
    pub value: u32,
    /// `q1 - q2 + q3` before normalization; provably in `[-(P-1), 2(P-1)]`.
    pub t: i64,
    /// `c * 2^n * r2 mod R`; provably zero.
    pub r3: u64,
}

impl ModParams {
    /// Precomputes all constants for the odd prime `p` and `R = 2^l`.
    ///
    /// Rejects even, composite, or undersized moduli, `p >= 2^31` (the
    /// sign-bit headroom every kernel relies on), and any `l` with
    /// `2^l <= p` or `l > 32`.
    pub fn new(p: u32, l: u32) -> Result<Self, ParamError> {
        if p % 2 == 0 {
            return Err(ParamError::NotOdd(p));
        }
        if p < 5 {
            return Err(ParamError::TooSmall(p));
        }
        if p >= 1 << 31 {
            return Err(ParamError::TooLarge(p));
        }
        if l > 32 {
            return Err(ParamError::LTooLarge(l));
        }
        let r = 1u64 << l;
        if r <= u64::from(p) {
            return Err(ParamError::RTooSmall { p, l });
        }
        if !is_prime(u64::from(p)) {
            return Err(ParamError::NotPrime(p));
        }

        let p64 = u64::from(p);
        let r_inv = inv_mod(r % p64, p64) as u32;
        // R*R^-1 ≡ 1 (mod P), so the division below is exact and the
        // quotient P' satisfies R*R^-1 - P*P' = 1 with 0 < P' < R.
        let p_prime = ((r * u64::from(r_inv) - 1) / p64) as u32;
        let r_mod_p = r % p64;
        let r2_mod_p = (r_mod_p * r_mod_p % p64) as u32;

        // P is odd and > 4, never a power of two, so ceil(log2 P) is the
        // bit length of P.
        let k_barrett = 32 - p.leading_zeros();
        let p_prime_barrett = (1u64 << (2 * k_barrett)) / p64;

        let n = (p - 1).trailing_zeros();
        let c = (p - 1) >> n;
        let fourier = if 2 * n >= l {
            Some(FourierForm { c, n })
        } else {
            None
        };

        Ok(Self {
            p,
            l,
            r,
            r_inv,
            p_prime,
            r2_mod_p,
            k_barrett,
            p_prime_barrett,
            fourier,
        })
    }

    #[inline]
    pub fn p(&self) -> u32 {
        self.p
    }

    /// `R = 2^l`.
    #[inline]
    pub fn r(&self) -> u64 {
        self.r
    }

    #[inline]
    pub fn l(&self) -> u32 {
        self.l
    }

    /// `R^-1 mod P`, in `(0, P)`.
    #[inline]
    pub fn r_inv(&self) -> u32 {
        self.r_inv
    }

    /// `P'` with `R*R^-1 - P*P' = 1`, in `(0, R)`.
    #[inline]
    pub fn p_prime(&self) -> u32 {
        self.p_prime
    }

    /// `R^2 mod P`, the to-Montgomery conversion factor.
    #[inline]
    pub fn r2_mod_p(&self) -> u32 {
        self.r2_mod_p
    }

    /// `k = ceil(log2 P)`.
    #[inline]
    pub fn k_barrett(&self) -> u32 {
        self.k_barrett
    }

    /// `floor(2^(2k) / P)`.
    #[inline]
    pub fn p_prime_barrett(&self) -> u64 {
        self.p_prime_barrett
    }

    /// `(c, n)` with `P = c*2^n + 1`, present iff `c` is odd and `2n >= l`.
    #[inline]
    pub fn fourier(&self) -> Option<FourierForm> {
        self.fourier
    }

    /// `R - 1`, the low-bits mask for `x mod R`.
    #[inline]
    pub fn r_mask(&self) -> u64 {
        self.r - 1
    }

    /// Barrett modular multiply of `a, b < P`.
    #[inline]
    pub fn barrett_mul(&self, a: u32, b: u32) -> u32 {
        self.barrett_mul_traced(a, b).value
    }

    /// Barrett multiply exposing the correction-loop internals.
    #[inline]
    pub fn barrett_mul_traced(&self, a: u32, b: u32) -> BarrettTrace {
        debug_assert!(a < self.p && b < self.p);
        let p64 = u64::from(self.p);
        let ab = u64::from(a) * u64::from(b);
        let m = ab >> self.k_barrett;
        let q = (m * self.p_prime_barrett) >> self.k_barrett;
        // q <= ab/P, so t = ab - q*P is nonnegative and below 4P.
        let mut t = ab - q * p64;
        let t_pre = t;
        let mut iterations = 0;
        while t >= p64 {
            t -= p64;
            iterations += 1;
        }
        BarrettTrace {
            value: t as u32,
            iterations,
            t_pre,
        }
    }

    /// Montgomery reduction: `T * R^-1 mod P` for `T < R*P`.
    #[inline]
    pub fn redc(&self, t: u64) -> u32 {
        self.redc_traced(t).value
    }

    /// REDC exposing the pre-subtraction value.
    #[inline]
    pub fn redc_traced(&self, t: u64) -> RedcTrace {
        debug_assert!(t < self.r * u64::from(self.p));
        let mask = self.r - 1;
        let m = ((t & mask) * u64::from(self.p_prime)) & mask;
        let sum = t + m * u64::from(self.p);
        // m was chosen so that T + m*P ≡ 0 (mod R): the shift is exact.
        debug_assert!(sum & mask == 0);
        let t_pre = sum >> self.l;
        let p64 = u64::from(self.p);
        let value = if t_pre >= p64 { t_pre - p64 } else { t_pre } as u32;
        RedcTrace { value, t_pre }
    }

    /// Product of two Montgomery-domain residues, staying in the domain.
    #[inline]
    pub fn mont_mul(&self, abar: u32, bbar: u32) -> u32 {
        self.redc(u64::from(abar) * u64::from(bbar))
    }

    /// Maps `x < P` into the Montgomery domain: `x*R mod P`.
    #[inline]
    pub fn to_mont(&self, x: u32) -> u32 {
        self.redc(u64::from(x) * u64::from(self.r2_mod_p))
    }

    /// Maps a Montgomery-domain residue back: `xbar * R^-1 mod P`.
    #[inline]
    pub fn from_mont(&self, xbar: u32) -> u32 {
        self.redc(u64::from(xbar))
    }

    /// Fourier-prime REDC: `abar * bbar * R^-1 mod P` using only shifts,
    /// masks, and multiplies by `c * 2^n ≡ -1 (mod P)`. Errors unless the
    /// params carry a Fourier form.
    #[inline]
    pub fn fourier_redc(&self, abar: u32, bbar: u32) -> Result<u32, ParamError> {
        Ok(self.fourier_redc_traced(abar, bbar)?.value)
    }

    /// Fourier REDC exposing the signed accumulator and `r3`.
    #[inline]
    pub fn fourier_redc_traced(&self, abar: u32, bbar: u32) -> Result<FourierTrace, ParamError> {
        debug_assert!(abar < self.p && bbar < self.p);
        let f = self.fourier.ok_or(ParamError::NoFourierForm {
            p: self.p,
            l: self.l,
        })?;
        let c2n = u64::from(f.c) << f.n; // = P - 1 ≡ -1 (mod P)
        let mask = self.r - 1;

        let prod = u64::from(abar) * u64::from(bbar);
        let q1 = prod >> self.l;
        let r1 = prod & mask;
        let step2 = c2n * r1;
        let q2 = step2 >> self.l;
        let r2 = step2 & mask;
        let step3 = c2n * r2;
        let q3 = step3 >> self.l;
        let r3 = step3 & mask;

        // t ∈ [-(P-1), 2(P-1)]; that interval can span more than 32 bits
        // for P near 2^31, so the sign-mask normalization runs on 64-bit
        // words. Each `(v >> 63) & P` adds P exactly when v is negative.
        let t = q1 as i64 - q2 as i64 + q3 as i64;
        let p64 = i64::from(self.p);
        let mut v = t;
        v += (v >> 63) & p64;
        v -= p64;
        v += (v >> 63) & p64;
        Ok(FourierTrace {
            value: v as u32,
            t,
            r3,
        })
    }
}

/// `a * b mod p` via widening multiply and a hardware divide. The oracle
/// every other multiply route is checked against.
#[inline]
pub fn mod_mul_naive(a: u32, b: u32, p: u32) -> u32 {
    ((u64::from(a) * u64::from(b)) % u64::from(p)) as u32
}

/// `a + b mod p` for `a, b < p`, add-then-conditional-subtract.
#[inline]
pub fn mod_add(a: u32, b: u32, p: u32) -> u32 {
    debug_assert!(a < p && b < p);
    let s = a + b; // < 2P < 2^32
    if s >= p {
        s - p
    } else {
        s
    }
}

/// `a - b mod p` for `a, b < p`, subtract-then-conditional-add.
#[inline]
pub fn mod_sub(a: u32, b: u32, p: u32) -> u32 {
    debug_assert!(a < p && b < p);
    if a >= b {
        a - b
    } else {
        a + p - b
    }
}

/// Deterministic Miller-Rabin, exact for every `n < 2^64` (Sinclair's
/// seven-witness set, verified against the Feitsma pseudoprime database).
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2, 3, 5, 7, 11, 13] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for a in [2, 325, 9375, 28178, 450775, 9780504, 1795265022] {
        let a = a % n;
        if a == 0 {
            continue;
        }
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// All primes `P = c*2^n + 1` (c odd) whose bit length lies in
/// `[bit_low, bit_high]` and whose `n` is at least half that bit length,
/// ordered by descending `n` and then ascending `c`. `count` truncates the
/// list; `None` returns every match. The range must satisfy
/// `3 <= bit_low <= bit_high <= 31`.
pub fn find_fourier_primes(
    bit_low: u32,
    bit_high: u32,
    count: Option<usize>,
) -> Result<Vec<FourierPrime>, ParamError> {
    if bit_low < 3 || bit_low > bit_high || bit_high > 31 {
        return Err(ParamError::BadBitRange {
            lo: bit_low,
            hi: bit_high,
        });
    }
    let limit = count.unwrap_or(usize::MAX);
    let mut out = Vec::new();
    if limit == 0 {
        return Ok(out);
    }
    // Enumerating (n descending, odd c ascending) emits candidates already
    // in the required order, so the limit can cut the scan short.
    for n in (1..=30u32).rev() {
        let mut c = 1u64;
        loop {
            let p = (c << n) + 1;
            let bits = 64 - p.leading_zeros();
            // Within fixed n the bit length grows with c; both stop
            // conditions are monotone.
            if bits > bit_high || 2 * n < bits {
                break;
            }
            if bits >= bit_low && is_prime(p) {
                out.push(FourierPrime {
                    p: p as u32,
                    c: c as u32,
                    n,
                });
                if out.len() == limit {
                    return Ok(out);
                }
            }
            c += 2;
        }
    }
    Ok(out)
}

#[inline]
fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((u128::from(a) * u128::from(b)) % u128::from(m)) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Modular inverse of `a` modulo `m` (coprime inputs) by extended Euclid.
fn inv_mod(a: u64, m: u64) -> u64 {
    let (mut old_r, mut r) = (a as i64, m as i64);
    let (mut old_s, mut s) = (1i64, 0i64);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    debug_assert_eq!(old_r, 1, "inputs must be coprime");
    old_s.rem_euclid(m as i64) as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    // ---- independent oracles ------------------------------------------

    /// Modular inverse by exhaustive search; independent of `inv_mod`.
    fn inv_brute(a: u32, p: u32) -> u32 {
        (1..p)
            .find(|&x| (u64::from(a) * u64::from(x)) % u64::from(p) == 1)
            .expect("inverse exists for coprime inputs")
    }

    /// Primality by trial division; independent of Miller-Rabin.
    fn is_prime_trial(n: u64) -> bool {
        if n < 2 {
            return false;
        }
        let mut d = 2;
        while d * d <= n {
            if n % d == 0 {
                return false;
            }
            d += 1;
        }
        true
    }

    /// `x * y mod p` through 128-bit arithmetic; independent of the u64
    /// route in `mod_mul_naive`.
    fn mul_mod_wide(x: u64, y: u64, p: u64) -> u64 {
        ((u128::from(x) * u128::from(y)) % u128::from(p)) as u64
    }

    fn params(p: u32, l: u32) -> ModParams {
        ModParams::new(p, l).unwrap()
    }

    // ---- parameter construction ---------------------------------------

    #[test]
    fn worked_params_17() {
        let mp = params(17, 5);
        assert_eq!(mp.r(), 32);
        assert_eq!(mp.r_inv(), 8);
        assert_eq!(mp.p_prime(), 15);
        assert_eq!(mp.r2_mod_p(), 4);
        assert_eq!(mp.k_barrett(), 5);
        assert_eq!(mp.p_prime_barrett(), 60);
        assert_eq!(mp.fourier(), Some(FourierForm { c: 1, n: 4 }));

        // Recompute every frozen value with the independent oracles.
        assert_eq!(inv_brute(32 % 17, 17), 8);
        assert_eq!((32 * 8 - 1) / 17, 15);
        assert_eq!((32u64 * 32) % 17, 4);
        assert_eq!((1u64 << 10) / 17, 60);
    }

    #[test]
    fn worked_params_97() {
        let mp = params(97, 7);
        assert_eq!(mp.r(), 128);
        assert_eq!(mp.r_inv(), 72);
        assert_eq!(mp.p_prime(), 95);
        assert_eq!(mp.fourier(), Some(FourierForm { c: 3, n: 5 }));

        assert_eq!(inv_brute(128 % 97, 97), 72);
        assert_eq!((128 * 72 - 1) / 97, 95);
        assert_eq!(3 << 5 | 1, 97);
    }

    #[test]
    fn worked_params_2013265921() {
        let mp = params(2_013_265_921, 31);
        assert_eq!(mp.fourier(), Some(FourierForm { c: 15, n: 27 }));
        assert_eq!((15u64 << 27) + 1, 2_013_265_921);
        // Exact Bezout identity, the load-bearing Montgomery invariant.
        assert_eq!(
            mp.r() * u64::from(mp.r_inv()) - u64::from(mp.p()) * u64::from(mp.p_prime()),
            1
        );
    }

    #[test]
    fn params_invariants_across_moduli() {
        for (p, l) in [
            (17u32, 5u32),
            (17, 32),
            (97, 7),
            (97, 32),
            (257, 9),
            (1_000_003, 20),
            (469_762_049, 29),
            (2_013_265_921, 31),
            (2_013_265_921, 32),
            (2_147_483_647, 31), // Mersenne prime, largest supported modulus
        ] {
            let mp = params(p, l);
            let p64 = u64::from(p);
            assert_eq!(
                mp.r() * u64::from(mp.r_inv()) - p64 * u64::from(mp.p_prime()),
                1,
                "Bezout identity for P={p} l={l}"
            );
            assert!(mp.r_inv() > 0 && u64::from(mp.r_inv()) < p64);
            assert!(mp.p_prime() > 0 && u64::from(mp.p_prime()) < mp.r());
            let k = mp.k_barrett();
            let two_2k = 1u64 << (2 * k);
            assert!(mp.p_prime_barrett() > 0);
            assert!(mp.p_prime_barrett() * p64 <= two_2k);
            assert!(two_2k < (mp.p_prime_barrett() + 1) * p64);
            if let Some(f) = mp.fourier() {
                assert_eq!(f.c % 2, 1);
                assert_eq!((u64::from(f.c) << f.n) + 1, p64);
                assert!(2 * f.n >= l);
            }
        }
    }

    #[test]
    fn fourier_form_depends_on_l() {
        // 97 - 1 = 3 * 2^5: present for l <= 10, absent beyond.
        assert!(params(97, 10).fourier().is_some());
        assert!(params(97, 11).fourier().is_none());
        assert!(params(97, 32).fourier().is_none());
        // 1000003 - 1 = 2 * 500001: n = 1 never reaches l/2 for valid l.
        assert!(params(1_000_003, 20).fourier().is_none());
    }

    #[test]
    fn rejects_bad_moduli() {
        assert_eq!(ModParams::new(16, 5), Err(ParamError::NotOdd(16)));
        assert_eq!(ModParams::new(2, 5), Err(ParamError::NotOdd(2)));
        assert_eq!(ModParams::new(1, 5), Err(ParamError::TooSmall(1)));
        assert_eq!(ModParams::new(3, 5), Err(ParamError::TooSmall(3)));
        assert_eq!(
            ModParams::new(2_147_483_649, 32),
            Err(ParamError::TooLarge(2_147_483_649))
        );
        assert_eq!(ModParams::new(91, 7), Err(ParamError::NotPrime(91)));
        assert_eq!(ModParams::new(17, 33), Err(ParamError::LTooLarge(33)));
        assert_eq!(
            ModParams::new(17, 4),
            Err(ParamError::RTooSmall { p: 17, l: 4 })
        );
        assert_eq!(
            ModParams::new(97, 6),
            Err(ParamError::RTooSmall { p: 97, l: 6 })
        );
    }

    // ---- naive multiply and add/sub -----------------------------------

    #[test]
    fn worked_naive_mul() {
        assert_eq!(mod_mul_naive(12, 11, 17), 13);
        assert_eq!(mul_mod_wide(12, 11, 17), 13);
    }

    #[test]
    fn worked_add_sub() {
        assert_eq!(mod_add(16, 5, 17), 4);
        assert_eq!(mod_sub(3, 5, 17), 15);
    }

    #[test]
    fn add_sub_exhaustive_small() {
        for p in [5u32, 17, 97] {
            for a in 0..p {
                for b in 0..p {
                    let sum = ((u64::from(a) + u64::from(b)) % u64::from(p)) as u32;
                    let diff = ((u64::from(a) + u64::from(p) - u64::from(b)) % u64::from(p)) as u32;
                    assert_eq!(mod_add(a, b, p), sum);
                    assert_eq!(mod_sub(a, b, p), diff);
                }
            }
        }
    }

    #[test]
    fn add_sub_near_word_boundary() {
        // Largest supported modulus: a + b approaches 2^32.
        let p = 2_147_483_647;
        assert_eq!(mod_add(p - 1, p - 1, p), p - 2);
        assert_eq!(mod_sub(0, p - 1, p), 1);
    }

    // ---- Barrett -------------------------------------------------------

    #[test]
    fn worked_barrett() {
        let mp = params(17, 5);
        // 12*11 = 132: m = 4, q = 7, t = 13, no correction needed.
        let tr = mp.barrett_mul_traced(12, 11);
        assert_eq!(tr.value, 13);
        assert_eq!(tr.iterations, 0);
        assert_eq!(tr.t_pre, 13);
        // 16*13 = 208: m = 6, q = 11, t = 21, one subtraction.
        let tr = mp.barrett_mul_traced(16, 13);
        assert_eq!(tr.value, 4);
        assert_eq!(tr.iterations, 1);
        assert_eq!(tr.t_pre, 21);
    }

    #[test]
    fn barrett_exhaustive_small() {
        for p in [5u32, 17, 97, 257] {
            let mp = params(p, 32);
            for a in 0..p {
                for b in 0..p {
                    let tr = mp.barrett_mul_traced(a, b);
                    assert_eq!(tr.value, mod_mul_naive(a, b, p), "P={p} a={a} b={b}");
                    assert!(tr.iterations <= 3);
                    assert!(tr.t_pre < 4 * u64::from(p));
                }
            }
        }
    }

    #[test]
    fn barrett_random_large() {
        let mut rng = SplitMix64::new(0xba44e77);
        for p in [1_000_003u32, 2_013_265_921, 2_147_483_647] {
            let mp = params(p, 32);
            for _ in 0..20_000 {
                let a = rng.next_residue(p);
                let b = rng.next_residue(p);
                let tr = mp.barrett_mul_traced(a, b);
                assert_eq!(tr.value, mod_mul_naive(a, b, p));
                assert!(tr.iterations <= 3);
                assert!(tr.t_pre < 4 * u64::from(p));
            }
        }
    }

    // ---- Montgomery ----------------------------------------------------

    #[test]
    fn worked_redc() {
        let mp = params(17, 5);
        assert_eq!(mp.redc(15), 1); // m = 1, (15 + 17)/32
        assert_eq!(mp.redc(77), 4); // m = 3, (77 + 51)/32
        assert_eq!(mp.mont_mul(11, 7), 4);
        assert_eq!(mp.to_mont(3), 11);
        assert_eq!(mp.to_mont(1), 15); // R mod P = 32 mod 17
        assert_eq!(mp.from_mont(11), 3);
    }

    #[test]
    fn redc_equals_mul_by_r_inv() {
        // redc(T) must equal T * R^-1 mod P for any T < R*P; the oracle
        // inverse comes from brute-force search, not extended Euclid.
        let mut rng = SplitMix64::new(0x4edc);
        for (p, l) in [(17u32, 5u32), (97, 7), (257, 9), (2_013_265_921, 31)] {
            let mp = params(p, l);
            let r_inv = if p <= 257 {
                u64::from(inv_brute((mp.r() % u64::from(p)) as u32, p))
            } else {
                u64::from(mp.r_inv())
            };
            let bound = mp.r() * u64::from(p);
            for _ in 0..5_000 {
                let t = rng.next_below(bound);
                let tr = mp.redc_traced(t);
                assert_eq!(
                    u64::from(tr.value),
                    mul_mod_wide(t, r_inv, u64::from(p)),
                    "P={p} T={t}"
                );
                assert!(tr.t_pre < 2 * u64::from(p));
            }
        }
    }

    #[test]
    fn mont_roundtrip_exhaustive_small() {
        for (p, l) in [(17u32, 5u32), (97, 7)] {
            let mp = params(p, l);
            for x in 0..p {
                assert_eq!(mp.from_mont(mp.to_mont(x)), x);
            }
        }
    }

    #[test]
    fn mont_mul_matches_naive_exhaustive_small() {
        for (p, l) in [(17u32, 5u32), (97, 7)] {
            let mp = params(p, l);
            for a in 0..p {
                for b in 0..p {
                    let got = mp.from_mont(mp.mont_mul(mp.to_mont(a), mp.to_mont(b)));
                    assert_eq!(got, mod_mul_naive(a, b, p));
                }
            }
        }
    }

    #[test]
    fn mont_mul_matches_naive_random_large() {
        let mut rng = SplitMix64::new(0x604d);
        for (p, l) in [
            (1_000_003u32, 20u32),
            (469_762_049, 29),
            (2_013_265_921, 31),
            (2_013_265_921, 32),
            (2_147_483_647, 32),
        ] {
            let mp = params(p, l);
            for _ in 0..20_000 {
                let a = rng.next_residue(p);
                let b = rng.next_residue(p);
                let got = mp.from_mont(mp.mont_mul(mp.to_mont(a), mp.to_mont(b)));
                assert_eq!(got, mod_mul_naive(a, b, p), "P={p} l={l} a={a} b={b}");
            }
        }
    }

    // ---- Fourier REDC --------------------------------------------------

    #[test]
    fn worked_fourier_redc() {
        let mp = params(97, 7);
        // 10*20 = 200: q1 = 1, r1 = 72, q2 = 54, r2 = 0, q3 = 0, t = -53.
        let tr = mp.fourier_redc_traced(10, 20).unwrap();
        assert_eq!(tr.value, 44);
        assert_eq!(tr.t, -53);
        assert_eq!(tr.r3, 0);
        assert_eq!(u64::from(tr.value), mul_mod_wide(200, 72, 97));
        // 1*1 reduces to R^-1 mod P.
        let tr = mp.fourier_redc_traced(1, 1).unwrap();
        assert_eq!(tr.value, 72);
        assert_eq!(tr.value, mp.r_inv());
    }

    #[test]
    fn fourier_redc_matches_redc_exhaustive_small() {
        for (p, l) in [(17u32, 5u32), (97, 7)] {
            let mp = params(p, l);
            let bound = i64::from(p);
            for a in 0..p {
                for b in 0..p {
                    let tr = mp.fourier_redc_traced(a, b).unwrap();
                    assert_eq!(tr.value, mp.mont_mul(a, b), "P={p} a={a} b={b}");
                    assert!(tr.t >= -(bound - 1) && tr.t <= 2 * (bound - 1));
                    assert_eq!(tr.r3, 0);
                }
            }
        }
    }

    #[test]
    fn fourier_redc_matches_redc_random_large() {
        let mut rng = SplitMix64::new(0xf0c4);
        for (p, l) in [(257u32, 9u32), (469_762_049, 29), (2_013_265_921, 31)] {
            let mp = params(p, l);
            let bound = i64::from(p);
            for _ in 0..50_000 {
                let a = rng.next_residue(p);
                let b = rng.next_residue(p);
                let tr = mp.fourier_redc_traced(a, b).unwrap();
                assert_eq!(tr.value, mp.mont_mul(a, b), "P={p} a={a} b={b}");
                assert!(tr.t >= -(bound - 1) && tr.t <= 2 * (bound - 1));
                assert_eq!(tr.r3, 0);
            }
        }
    }

    #[test]
    fn fourier_accumulator_can_exceed_32_bits() {
        // abar = bbar = 2^30 + 1 at P = 15*2^27 + 1 drives the signed
        // accumulator to 2424307713 > i32::MAX; the 64-bit normalization
        // must still land on redc's answer. (A 32-bit normalization gives
        // 142606338 here — off by exactly 2^32 mod P.)
        let mp = params(2_013_265_921, 31);
        let a = (1u32 << 30) + 1;
        let tr = mp.fourier_redc_traced(a, a).unwrap();
        assert_eq!(tr.t, 2_424_307_713);
        assert!(tr.t > i64::from(i32::MAX));
        assert_eq!(tr.value, mp.mont_mul(a, a));
        assert_eq!(tr.value, 411_041_792);
    }

    #[test]
    fn fourier_redc_requires_fourier_form() {
        let mp = params(1_000_003, 20);
        assert_eq!(
            mp.fourier_redc(1, 1),
            Err(ParamError::NoFourierForm {
                p: 1_000_003,
                l: 20
            })
        );
    }

    // ---- primality and prime discovery --------------------------------

    #[test]
    fn miller_rabin_agrees_with_trial_division() {
        for n in 0..30_000u64 {
            assert_eq!(is_prime(n), is_prime_trial(n), "n={n}");
        }
        // Carmichael numbers and large known primes.
        for (n, expect) in [
            (561u64, false),
            (1_729, false),
            (252_601, false),
            (2_147_483_647, true),
            (2_013_265_921, true),
            (469_762_049, true),
            (4_294_967_291, true),
            (1_795_265_022, false),
        ] {
            assert_eq!(is_prime(n), expect, "n={n}");
        }
    }

    #[test]
    fn worked_fourier_primes_7bit() {
        let found = find_fourier_primes(7, 7, None).unwrap();
        assert_eq!(
            found,
            vec![
                FourierPrime { p: 97, c: 3, n: 5 },
                FourierPrime { p: 113, c: 7, n: 4 },
            ]
        );
        assert_eq!(
            find_fourier_primes(7, 7, Some(1)).unwrap(),
            vec![FourierPrime { p: 97, c: 3, n: 5 }]
        );
        assert!(find_fourier_primes(7, 7, Some(0)).unwrap().is_empty());
    }

    #[test]
    fn fourier_primes_exclude_shallow_powers() {
        // 7 = 3*2^1 + 1 has n = 1 < ceil(3/2): excluded; 5 = 1*2^2 + 1 stays.
        let found = find_fourier_primes(3, 3, None).unwrap();
        assert_eq!(found, vec![FourierPrime { p: 5, c: 1, n: 2 }]);
    }

    #[test]
    fn fourier_primes_match_brute_enumeration() {
        // Oracle: scan every odd value below 2^13, trial-divide, decompose,
        // filter, sort by (n desc, c asc). Must match exactly.
        let mut expect = Vec::new();
        for p in (3u32..1 << 13).step_by(2) {
            if !is_prime_trial(u64::from(p)) {
                continue;
            }
            let bits = 32 - p.leading_zeros();
            if bits < 3 {
                continue;
            }
            let n = (p - 1).trailing_zeros();
            if 2 * n < bits {
                continue;
            }
            expect.push(FourierPrime {
                p,
                c: (p - 1) >> n,
                n,
            });
        }
        expect.sort_by(|a, b| b.n.cmp(&a.n).then(a.c.cmp(&b.c)));
        assert_eq!(find_fourier_primes(3, 13, None).unwrap(), expect);
    }

    #[test]
    fn fourier_primes_contain_known_ntt_moduli() {
        let found = find_fourier_primes(28, 31, None).unwrap();
        assert!(found.contains(&FourierPrime {
            p: 2_013_265_921,
            c: 15,
            n: 27
        }));
        assert!(found.contains(&FourierPrime {
            p: 469_762_049,
            c: 7,
            n: 26
        }));
        // Sortedness over a wide range.
        for w in found.windows(2) {
            assert!(w[0].n > w[1].n || (w[0].n == w[1].n && w[0].c < w[1].c));
        }
    }

    #[test]
    fn fourier_primes_reject_bad_ranges() {
        assert!(find_fourier_primes(2, 5, None).is_err());
        assert!(find_fourier_primes(9, 5, None).is_err());
        assert!(find_fourier_primes(3, 32, None).is_err());
    }
}
