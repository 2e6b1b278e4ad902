//! Four-lane Montgomery multiplication on 128-bit registers.
//!
//! A 128-bit register holds four 32-bit residues. The even/odd widening
//! multiplies produce the 64-bit products `(a0*b0, a2*b2)` and
//! `(a1*b1, a3*b3)`; a *gather* then moves the four high and four low
//! 32-bit halves into two in-order vectors. Three gather instruction
//! sequences exist — [`GatherStrategy`] — trading shuffle, unpack, and
//! blend instructions whose throughput differs across microarchitectures.
//!
//! The functions in this module are the portable reference: each one
//! mirrors the hardware instruction sequence lane by lane and bit by bit
//! (the [`lanes`] helpers reproduce Intel semantics exactly, including
//! shift-count saturation and signed-compare masks). [`simd`] carries the
//! real-intrinsic backend; its outputs are asserted bit-identical to this
//! module in the test suite.

use crate::modarith::ModParams;
use thiserror::Error;

#[cfg(any(target_arch = "x86", target_arch = "x86_64"))]
pub mod simd;

/// Four 32-bit lanes; lane 0 is the lowest-addressed element.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VecU32x4(pub [u32; 4]);

/// Two 64-bit lanes, as produced by the even/odd widening multiplies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VecU64x2(pub [u64; 2]);

/// Instruction sequence used to gather product halves into order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GatherStrategy {
    /// Two cross-vector float shuffles (with integer/float casts) plus two
    /// in-vector reorder shuffles.
    FloatShuffleCast,
    /// Two in-vector shuffles plus an unpack-low and an unpack-high.
    ShuffleUnpack,
    /// A flip shuffle, two blends, and a reorder shuffle. Requires the
    /// AVX2 four-lane blend.
    BlendAvx2,
}

impl GatherStrategy {
    /// All strategies, in tie-break preference order.
    pub const ALL: [GatherStrategy; 3] = [
        GatherStrategy::FloatShuffleCast,
        GatherStrategy::ShuffleUnpack,
        GatherStrategy::BlendAvx2,
    ];

    /// Stable lowercase slug used by the CLI and in CSV output.
    pub fn slug(self) -> &'static str {
        match self {
            GatherStrategy::FloatShuffleCast => "float-shuffle-cast",
            GatherStrategy::ShuffleUnpack => "shuffle-unpack",
            GatherStrategy::BlendAvx2 => "blend",
        }
    }
}

impl std::fmt::Display for GatherStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.slug())
    }
}

impl std::str::FromStr for GatherStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "float-shuffle-cast" => Ok(GatherStrategy::FloatShuffleCast),
            "shuffle-unpack" => Ok(GatherStrategy::ShuffleUnpack),
            "blend" | "blend-avx2" => Ok(GatherStrategy::BlendAvx2),
            other => Err(format!(
                "unknown gather strategy `{other}` (expected float-shuffle-cast, shuffle-unpack, or blend)"
            )),
        }
    }
}

/// Errors from the vector kernels.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum KernelError {
    #[error("gather strategy {strategy} is not supported here: {reason}")]
    UnsupportedStrategy {
        strategy: GatherStrategy,
        reason: String,
    },
    #[error("input slices differ in length ({a} vs {b})")]
    LengthMismatch { a: usize, b: usize },
}

/// Lane-exact emulations of the 128-bit integer instructions the kernels
/// use. Semantics match the Intel intrinsics bit for bit: lane 0 is the
/// least significant, shuffle immediates select two bits per destination
/// lane, shift counts of 32 or more produce zero, and compares are signed.
pub(crate) mod lanes {
    #[inline]
    pub fn to_u32x4(v: [u64; 2]) -> [u32; 4] {
        [
            v[0] as u32,
            (v[0] >> 32) as u32,
            v[1] as u32,
            (v[1] >> 32) as u32,
        ]
    }

    #[inline]
    pub fn to_u64x2(v: [u32; 4]) -> [u64; 2] {
        [
            u64::from(v[0]) | (u64::from(v[1]) << 32),
            u64::from(v[2]) | (u64::from(v[3]) << 32),
        ]
    }

    /// `_mm_mul_epu32`: widening multiply of the even lanes.
    #[inline]
    pub fn mul_epu32(a: [u32; 4], b: [u32; 4]) -> [u64; 2] {
        [
            u64::from(a[0]) * u64::from(b[0]),
            u64::from(a[2]) * u64::from(b[2]),
        ]
    }

    /// `_mm_mullo_epi32`: low 32 bits of each lane product.
    #[inline]
    pub fn mullo_epi32(a: [u32; 4], b: [u32; 4]) -> [u32; 4] {
        std::array::from_fn(|i| a[i].wrapping_mul(b[i]))
    }

    /// `_mm_shuffle_epi32`: lane `j` of the result is lane
    /// `(imm >> 2j) & 3` of the source.
    #[inline]
    pub fn shuffle_epi32(a: [u32; 4], imm: u8) -> [u32; 4] {
        std::array::from_fn(|j| a[usize::from((imm >> (2 * j)) & 3)])
    }

    /// `_mm_shuffle_ps` on integer data: low two lanes select from `a`,
    /// high two from `b`. Bit patterns pass through the float view intact.
    #[inline]
    pub fn shuffle_ps(a: [u32; 4], b: [u32; 4], imm: u8) -> [u32; 4] {
        [
            a[usize::from(imm & 3)],
            a[usize::from((imm >> 2) & 3)],
            b[usize::from((imm >> 4) & 3)],
            b[usize::from((imm >> 6) & 3)],
        ]
    }

    /// `_mm_unpacklo_epi32`: interleave the low halves.
    #[inline]
    pub fn unpacklo_epi32(a: [u32; 4], b: [u32; 4]) -> [u32; 4] {
        [a[0], b[0], a[1], b[1]]
    }

    /// `_mm_unpackhi_epi32`: interleave the high halves.
    #[inline]
    pub fn unpackhi_epi32(a: [u32; 4], b: [u32; 4]) -> [u32; 4] {
        [a[2], b[2], a[3], b[3]]
    }

    /// `_mm_blend_epi32`: immediate bit `i` selects lane `i` from `b`.
    #[inline]
    pub fn blend_epi32(a: [u32; 4], b: [u32; 4], imm: u8) -> [u32; 4] {
        std::array::from_fn(|i| if (imm >> i) & 1 == 1 { b[i] } else { a[i] })
    }

    /// `_mm_srli_si128`: whole-register byte shift toward lane 0.
    #[inline]
    pub fn srli_si128(a: [u32; 4], bytes: u32) -> [u32; 4] {
        let wide = u128::from(a[0])
            | (u128::from(a[1]) << 32)
            | (u128::from(a[2]) << 64)
            | (u128::from(a[3]) << 96);
        let shifted = if bytes >= 16 { 0 } else { wide >> (8 * bytes) };
        [
            shifted as u32,
            (shifted >> 32) as u32,
            (shifted >> 64) as u32,
            (shifted >> 96) as u32,
        ]
    }

    #[inline]
    pub fn and_si128(a: [u32; 4], b: [u32; 4]) -> [u32; 4] {
        std::array::from_fn(|i| a[i] & b[i])
    }

    #[inline]
    pub fn add_epi32(a: [u32; 4], b: [u32; 4]) -> [u32; 4] {
        std::array::from_fn(|i| a[i].wrapping_add(b[i]))
    }

    #[inline]
    pub fn sub_epi32(a: [u32; 4], b: [u32; 4]) -> [u32; 4] {
        std::array::from_fn(|i| a[i].wrapping_sub(b[i]))
    }

    #[inline]
    pub fn add_epi64(a: [u64; 2], b: [u64; 2]) -> [u64; 2] {
        [a[0].wrapping_add(b[0]), a[1].wrapping_add(b[1])]
    }

    /// `_mm_slli_epi32` / `_mm_sll_epi32`: counts of 32+ give zero.
    #[inline]
    pub fn slli_epi32(a: [u32; 4], count: u32) -> [u32; 4] {
        if count >= 32 {
            [0; 4]
        } else {
            std::array::from_fn(|i| a[i] << count)
        }
    }

    /// `_mm_srli_epi32` / `_mm_srl_epi32`: counts of 32+ give zero.
    #[inline]
    pub fn srli_epi32(a: [u32; 4], count: u32) -> [u32; 4] {
        if count >= 32 {
            [0; 4]
        } else {
            std::array::from_fn(|i| a[i] >> count)
        }
    }

    /// `_mm_cmpgt_epi32`: signed per-lane compare, all-ones on true.
    #[inline]
    pub fn cmpgt_epi32(a: [u32; 4], b: [u32; 4]) -> [u32; 4] {
        std::array::from_fn(|i| if (a[i] as i32) > (b[i] as i32) { !0 } else { 0 })
    }

    #[inline]
    pub fn broadcast(x: u32) -> [u32; 4] {
        [x; 4]
    }
}

/// Even/odd widening multiplies: returns the products of lanes `(0, 2)` and
/// of lanes `(1, 3)`. The odd lanes are reached exactly as on hardware,
/// by shifting both inputs right one 32-bit slot before the widening
/// multiply.
#[inline]
pub fn widen_mul_even_odd(a: VecU32x4, b: VecU32x4) -> (VecU64x2, VecU64x2) {
    let t20 = lanes::mul_epu32(a.0, b.0);
    let a_odd = lanes::srli_si128(a.0, 4);
    let b_odd = lanes::srli_si128(b.0, 4);
    let t31 = lanes::mul_epu32(a_odd, b_odd);
    (VecU64x2(t20), VecU64x2(t31))
}

/// Gathers the high and low 32-bit halves of four 64-bit products into two
/// in-order vectors `(hi, lo)`, where `t20` carries products 0 and 2 and
/// `t31` carries products 1 and 3.
///
/// All three strategies are available here; the emulation models a machine
/// with the blend instruction present. The hardware backend refuses
/// [`GatherStrategy::BlendAvx2`] on CPUs without it.
#[inline]
pub fn gather_hi_lo(
    t20: VecU64x2,
    t31: VecU64x2,
    strategy: GatherStrategy,
) -> (VecU32x4, VecU32x4) {
    let x = lanes::to_u32x4(t20.0); // [p0.lo, p0.hi, p2.lo, p2.hi]
    let y = lanes::to_u32x4(t31.0); // [p1.lo, p1.hi, p3.lo, p3.hi]
    let (hi, lo) = match strategy {
        GatherStrategy::FloatShuffleCast => {
            // Cross-vector shuffles pull both halves out of order
            // ([0,2,1,3] product order), then one reorder shuffle each.
            let lo_ooo = lanes::shuffle_ps(x, y, 0x88);
            let hi_ooo = lanes::shuffle_ps(x, y, 0xdd);
            let lo = lanes::shuffle_epi32(lo_ooo, 0xd8);
            let hi = lanes::shuffle_epi32(hi_ooo, 0xd8);
            (hi, lo)
        }
        GatherStrategy::ShuffleUnpack => {
            // Per-vector shuffles group halves within each register, the
            // unpacks interleave them in order.
            let sx = lanes::shuffle_epi32(x, 0xd8); // [p0.lo, p2.lo, p0.hi, p2.hi]
            let sy = lanes::shuffle_epi32(y, 0xd8);
            let lo = lanes::unpacklo_epi32(sx, sy);
            let hi = lanes::unpackhi_epi32(sx, sy);
            (hi, lo)
        }
        GatherStrategy::BlendAvx2 => {
            // Flip halves of the even-product vector, blend the highs
            // in order, blend the lows out of order, reorder.
            let fx = lanes::shuffle_epi32(x, 0xb1); // [p0.hi, p0.lo, p2.hi, p2.lo]
            let hi = lanes::blend_epi32(fx, y, 0x0a);
            let lo_ooo = lanes::blend_epi32(fx, y, 0x05); // [p1.lo, p0.lo, p3.lo, p2.lo]
            let lo = lanes::shuffle_epi32(lo_ooo, 0xb1);
            (hi, lo)
        }
    };
    (VecU32x4(hi), VecU32x4(lo))
}

/// Branch-free map of lanes in `[0, 2P)` into `[0, P)`: an unsigned
/// compare mask is synthesized from the signed compare by biasing both
/// sides with `2^31`, and `P` is subtracted wherever the mask is set.
#[inline]
pub fn reduce_2p_to_p(v: VecU32x4, p: u32) -> VecU32x4 {
    let biased = lanes::add_epi32(v.0, lanes::broadcast(0x8000_0000));
    let threshold = lanes::broadcast((p - 1).wrapping_add(0x8000_0000));
    let mask = lanes::cmpgt_epi32(biased, threshold);
    let sub = lanes::and_si128(mask, lanes::broadcast(p));
    VecU32x4(lanes::sub_epi32(v.0, sub))
}

/// Four-lane Montgomery multiply: lane `i` of the result is
/// `redc(abar[i] * bbar[i])`. Inputs must be below `P`.
pub fn mont_mul4(
    abar: VecU32x4,
    bbar: VecU32x4,
    params: &ModParams,
    strategy: GatherStrategy,
) -> VecU32x4 {
    let l = params.l();
    let mask32 = params.r_mask() as u32; // R-1; all-ones when l = 32
    let p_prime = lanes::broadcast(params.p_prime());
    let p4 = lanes::broadcast(params.p());

    // (1) widening multiplies, (2) gather.
    let (t20, t31) = widen_mul_even_odd(abar, bbar);
    let (_hi_t, lo_t) = gather_hi_lo(t20, t31, strategy);

    // (3) one short (low-only) multiply suffices for m = (T mod R)*P' mod R:
    // R divides 2^32, so the discarded high halves cannot reach m.
    let m = lanes::and_si128(
        lanes::mullo_epi32(lo_t.0, p_prime),
        lanes::broadcast(mask32),
    );

    // (4) m*P as two widening multiplies, (5) 64-bit adds: carries cross
    // the 32-bit halves, so the additions run on the product layout.
    let m_odd = lanes::srli_si128(m, 4);
    let mp20 = lanes::mul_epu32(m, p4);
    let mp31 = lanes::mul_epu32(m_odd, p4);
    let s20 = lanes::add_epi64(t20.0, mp20);
    let s31 = lanes::add_epi64(t31.0, mp31);

    #[cfg(debug_assertions)]
    for s in [s20, s31] {
        for lane in s {
            debug_assert_eq!(lane & params.r_mask(), 0, "inexact division by R");
        }
    }

    // (6) gather the sums, (7) divide by R = 2^l: the high half contributes
    // a left shift by 32-l, the low half a right shift by l (exactly zero
    // when l = 32).
    let (hi, lo) = gather_hi_lo(VecU64x2(s20), VecU64x2(s31), strategy);
    let t = lanes::add_epi32(
        lanes::slli_epi32(hi.0, 32 - l),
        lanes::srli_epi32(lo.0, l),
    );

    // (8) lanes are now in [0, 2P).
    reduce_2p_to_p(VecU32x4(t), params.p())
}

/// Montgomery-multiplies two residue slices element-wise: four lanes at a
/// time with a scalar tail. Slices must have equal length.
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
    let mut out = Vec::with_capacity(abar.len());
    let mut chunks_a = abar.chunks_exact(4);
    let mut chunks_b = bbar.chunks_exact(4);
    for (ca, cb) in chunks_a.by_ref().zip(chunks_b.by_ref()) {
        let va = VecU32x4([ca[0], ca[1], ca[2], ca[3]]);
        let vb = VecU32x4([cb[0], cb[1], cb[2], cb[3]]);
        out.extend_from_slice(&mont_mul4(va, vb, params, strategy).0);
    }
    for (&a, &b) in chunks_a.remainder().iter().zip(chunks_b.remainder()) {
        out.push(params.mont_mul(a, b));
    }
    Ok(out)
}
