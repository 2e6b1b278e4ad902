//! Real-intrinsic backend for the four-lane Montgomery kernel.
//!
//! Same instruction sequence as the portable emulation in the parent
//! module, executed on actual 128-bit registers. The low-half multiply
//! `_mm_mullo_epi32` requires SSE4.1 and `_mm_blend_epi32` requires AVX2,
//! so every entry point checks CPU feature support at runtime and refuses
//! with [`KernelError::UnsupportedStrategy`] rather than faulting.
//!
//! The dynamic shift counts for the divide-by-`R` step go through
//! `_mm_sll_epi32` / `_mm_srl_epi32`, which zero the result for counts of
//! 32 or more — exactly what the `l = 32` configuration needs.

use super::{GatherStrategy, KernelError, VecU32x4};
use crate::modarith::ModParams;

#[cfg(target_arch = "x86")]
use core::arch::x86::*;
#[cfg(target_arch = "x86_64")]
use core::arch::x86_64::*;

/// Whether the SSE4.1 baseline for these kernels is present.
pub fn available() -> bool {
    is_x86_feature_detected!("sse4.1")
}

/// Whether the AVX2 blend used by [`GatherStrategy::BlendAvx2`] is present.
pub fn blend_available() -> bool {
    is_x86_feature_detected!("avx2")
}

fn check_support(strategy: GatherStrategy) -> Result<(), KernelError> {
    if !available() {
        return Err(KernelError::UnsupportedStrategy {
            strategy,
            reason: "sse4.1 not detected on this CPU".into(),
        });
    }
    if strategy == GatherStrategy::BlendAvx2 && !blend_available() {
        return Err(KernelError::UnsupportedStrategy {
            strategy,
            reason: "avx2 not detected on this CPU".into(),
        });
    }
    Ok(())
}

#[target_feature(enable = "sse4.1")]
unsafe fn gather_fsc(t20: __m128i, t31: __m128i) -> (__m128i, __m128i) {
    let fa = _mm_castsi128_ps(t20);
    let fb = _mm_castsi128_ps(t31);
    let lo_ooo = _mm_castps_si128(_mm_shuffle_ps(fa, fb, 0x88));
    let hi_ooo = _mm_castps_si128(_mm_shuffle_ps(fa, fb, 0xdd));
    let lo = _mm_shuffle_epi32(lo_ooo, 0xd8);
    let hi = _mm_shuffle_epi32(hi_ooo, 0xd8);
    (hi, lo)
}

#[target_feature(enable = "sse4.1")]
unsafe fn gather_su(t20: __m128i, t31: __m128i) -> (__m128i, __m128i) {
    let sx = _mm_shuffle_epi32(t20, 0xd8);
    let sy = _mm_shuffle_epi32(t31, 0xd8);
    let lo = _mm_unpacklo_epi32(sx, sy);
    let hi = _mm_unpackhi_epi32(sx, sy);
    (hi, lo)
}

#[target_feature(enable = "avx2")]
unsafe fn gather_blend(t20: __m128i, t31: __m128i) -> (__m128i, __m128i) {
    let fx = _mm_shuffle_epi32(t20, 0xb1);
    let hi = _mm_blend_epi32(fx, t31, 0x0a);
    let lo_ooo = _mm_blend_epi32(fx, t31, 0x05);
    let lo = _mm_shuffle_epi32(lo_ooo, 0xb1);
    (hi, lo)
}

macro_rules! define_batch_kernel {
    ($name:ident, $feature:literal, $gather:ident) => {
        /// # Safety
        ///
        /// The CPU must support the named target feature; `abar`, `bbar`,
        /// and `out` must each be valid for `4 * quads` elements.
        #[target_feature(enable = $feature)]
        unsafe fn $name(
            abar: *const u32,
            bbar: *const u32,
            out: *mut u32,
            quads: usize,
            params: &ModParams,
        ) {
            let p = params.p();
            let l = params.l();
            let p_b = _mm_set1_epi32(p as i32);
            let pp_b = _mm_set1_epi32(params.p_prime() as i32);
            let mask_b = _mm_set1_epi32(params.r_mask() as u32 as i32);
            let bias = _mm_set1_epi32(0x8000_0000u32 as i32);
            let threshold = _mm_set1_epi32((p - 1).wrapping_add(0x8000_0000) as i32);
            let left_count = _mm_cvtsi32_si128((32 - l) as i32);
            let right_count = _mm_cvtsi32_si128(l as i32);

            for q in 0..quads {
                let va = _mm_loadu_si128(abar.add(4 * q).cast());
                let vb = _mm_loadu_si128(bbar.add(4 * q).cast());

                let t20 = _mm_mul_epu32(va, vb);
                let t31 = _mm_mul_epu32(_mm_srli_si128(va, 4), _mm_srli_si128(vb, 4));
                let (_hi_t, lo_t) = $gather(t20, t31);

                let m = _mm_and_si128(_mm_mullo_epi32(lo_t, pp_b), mask_b);
                let mp20 = _mm_mul_epu32(m, p_b);
                let mp31 = _mm_mul_epu32(_mm_srli_si128(m, 4), p_b);
                let s20 = _mm_add_epi64(t20, mp20);
                let s31 = _mm_add_epi64(t31, mp31);

                let (hi, lo) = $gather(s20, s31);
                let t = _mm_add_epi32(
                    _mm_sll_epi32(hi, left_count),
                    _mm_srl_epi32(lo, right_count),
                );

                let biased = _mm_add_epi32(t, bias);
                let mask = _mm_cmpgt_epi32(biased, threshold);
                let res = _mm_sub_epi32(t, _mm_and_si128(mask, p_b));
                _mm_storeu_si128(out.add(4 * q).cast(), res);
            }
        }
    };
}

define_batch_kernel!(batch_fsc, "sse4.1", gather_fsc);
define_batch_kernel!(batch_su, "sse4.1", gather_su);
define_batch_kernel!(batch_blend, "avx2", gather_blend);

/// Four-lane Montgomery multiply on hardware registers. Errors when the
/// CPU lacks the features the chosen strategy needs.
pub fn mont_mul4(
    abar: VecU32x4,
    bbar: VecU32x4,
    params: &ModParams,
    strategy: GatherStrategy,
) -> Result<VecU32x4, KernelError> {
    check_support(strategy)?;
    let mut out = [0u32; 4];
    unsafe {
        match strategy {
            GatherStrategy::FloatShuffleCast => {
                batch_fsc(abar.0.as_ptr(), bbar.0.as_ptr(), out.as_mut_ptr(), 1, params)
            }
            GatherStrategy::ShuffleUnpack => {
                batch_su(abar.0.as_ptr(), bbar.0.as_ptr(), out.as_mut_ptr(), 1, params)
            }
            GatherStrategy::BlendAvx2 => {
                batch_blend(abar.0.as_ptr(), bbar.0.as_ptr(), out.as_mut_ptr(), 1, params)
            }
        }
    }
    Ok(VecU32x4(out))
}

/// Element-wise Montgomery multiply over slices on hardware registers,
/// four lanes at a time with a scalar tail.
pub fn mont_mul_batch(
    abar: &[u32],
    bbar: &[u32],
    params: &ModParams,
    strategy: GatherStrategy,
) -> Result<Vec<u32>, KernelError> {
    if abar.len() != bbar.len() {
        return Err(KernelError::LengthMismatch {
            a: abar.len(),
            b: bbar.len(),
        });
    }
    check_support(strategy)?;
    let quads = abar.len() / 4;
    let mut out = vec![0u32; abar.len()];
    unsafe {
        match strategy {
            GatherStrategy::FloatShuffleCast => {
                batch_fsc(abar.as_ptr(), bbar.as_ptr(), out.as_mut_ptr(), quads, params)
            }
            GatherStrategy::ShuffleUnpack => {
                batch_su(abar.as_ptr(), bbar.as_ptr(), out.as_mut_ptr(), quads, params)
            }
            GatherStrategy::BlendAvx2 => {
                batch_blend(abar.as_ptr(), bbar.as_ptr(), out.as_mut_ptr(), quads, params)
            }
        }
    }
    for i in 4 * quads..abar.len() {
        out[i] = params.mont_mul(abar[i], bbar[i]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use crate::vkernels;

    fn supported_strategies() -> Vec<GatherStrategy> {
        let mut v = Vec::new();
        if available() {
            v.push(GatherStrategy::FloatShuffleCast);
            v.push(GatherStrategy::ShuffleUnpack);
            if blend_available() {
                v.push(GatherStrategy::BlendAvx2);
            }
        }
        v
    }

    #[test]
    fn worked_mont_mul4_on_hardware() {
        let mp = ModParams::new(17, 5).unwrap();
        for strategy in supported_strategies() {
            let out = mont_mul4(
                VecU32x4([11, 3, 7, 5]),
                VecU32x4([7, 5, 11, 3]),
                &mp,
                strategy,
            )
            .unwrap();
            assert_eq!(out, VecU32x4([4, 1, 4, 1]), "{strategy}");
        }
    }

    #[test]
    fn bit_identical_to_emulation() {
        let mut rng = SplitMix64::new(0x51d);
        for (p, l) in [
            (17u32, 5u32),
            (97, 7),
            (2_013_265_921, 31),
            (2_013_265_921, 32),
            (2_147_483_647, 32),
        ] {
            let mp = ModParams::new(p, l).unwrap();
            for _ in 0..10_000 {
                let a = VecU32x4(std::array::from_fn(|_| rng.next_residue(p)));
                let b = VecU32x4(std::array::from_fn(|_| rng.next_residue(p)));
                for strategy in supported_strategies() {
                    assert_eq!(
                        mont_mul4(a, b, &mp, strategy).unwrap(),
                        vkernels::mont_mul4(a, b, &mp, strategy),
                        "P={p} l={l} {strategy}"
                    );
                }
            }
        }
    }

    #[test]
    fn batch_matches_emulated_batch() {
        let p = 469_762_049;
        let mp = ModParams::new(p, 29).unwrap();
        let mut rng = SplitMix64::new(0xcafe);
        for len in [0usize, 1, 4, 7, 1024, 1027] {
            let a: Vec<u32> = (0..len).map(|_| rng.next_residue(p)).collect();
            let b: Vec<u32> = (0..len).map(|_| rng.next_residue(p)).collect();
            for strategy in supported_strategies() {
                assert_eq!(
                    mont_mul_batch(&a, &b, &mp, strategy).unwrap(),
                    vkernels::mont_mul_batch(&a, &b, &mp, strategy).unwrap(),
                    "len={len} {strategy}"
                );
            }
        }
    }

    #[test]
    fn blend_requires_avx2() {
        let mp = ModParams::new(97, 7).unwrap();
        let result = mont_mul4(
            VecU32x4([1, 2, 3, 4]),
            VecU32x4([5, 6, 7, 8]),
            &mp,
            GatherStrategy::BlendAvx2,
        );
        if blend_available() {
            assert!(result.is_ok());
        } else {
            assert!(matches!(
                result,
                Err(KernelError::UnsupportedStrategy { .. })
            ));
        }
    }

    #[test]
    fn batch_rejects_length_mismatch_before_feature_checks() {
        let mp = ModParams::new(97, 7).unwrap();
        assert_eq!(
            mont_mul_batch(&[1], &[1, 2], &mp, GatherStrategy::BlendAvx2),
            Err(KernelError::LengthMismatch { a: 1, b: 2 })
        );
    }
}
