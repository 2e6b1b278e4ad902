//! Rewrite rules: expanding a modular vector (or scalar) multiplication
//! node into the explicit Montgomery instruction chain, and choosing a
//! gather strategy from instruction costs.
//!
//! The input pattern is an assignment `res <- mul(a, b)` at a modular
//! type. For the four-lane vector form the output chain mirrors the
//! kernels in [`crate::vkernels`] one intrinsic per statement: widening
//! multiplies, a gather of the product halves, the short `m` multiply and
//! mask, the `m*P` multiplies and two-lane additions, a second gather,
//! the divide-by-`R` shifts, and the biased-compare conditional subtract.
//! For the scalar form the chain is ordinary 64-bit integer arithmetic
//! ending in a branch-free sign-mask reduction.

use super::expr::{BinOp, IrExpr, Var};
use super::isa::IsaDescriptor;
use super::ty::{IrType, ScalarType};
use super::KernelProgram;
use crate::modarith::ModParams;
use crate::vkernels::GatherStrategy;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RewriteError {
    #[error("expression does not match `res <- mul(a, b)` at a modular type: {0}")]
    PatternMismatch(String),
    #[error("no multiplication chain is implemented for {0}")]
    UnsupportedType(IrType),
    #[error("strategy blend requires the dword blend, which ISA `{isa}` does not have")]
    BlendUnavailable { isa: String },
    #[error("ISA `{isa}` has {v} lanes; the four-lane chain requires 4")]
    LaneMismatch { isa: String, v: u32 },
}

/// Builder state: a statement chain plus a monotone temporary counter,
/// reset per rewrite so generated programs are reproducible.
struct Emitter {
    body: Vec<IrExpr>,
    next_temp: u32,
}

impl Emitter {
    fn new() -> Emitter {
        Emitter {
            body: Vec::new(),
            next_temp: 0,
        }
    }

    /// Declares a fresh temporary and assigns `expr` to it.
    fn emit(&mut self, ty: IrType, expr: IrExpr) -> Var {
        let var = Var::new(format!("t{}", self.next_temp), ty);
        self.next_temp += 1;
        self.body.push(IrExpr::Decl(var.clone()));
        self.body.push(IrExpr::assign(var.clone(), expr));
        var
    }

    fn intr(&mut self, mnemonic: &str, args: Vec<IrExpr>, ty: IrType) -> Var {
        self.emit(ty, IrExpr::intrinsic(mnemonic, args, ty))
    }
}

fn v4u() -> IrType {
    IrType::vect(ScalarType::UInt, 4)
}

fn v2u() -> IrType {
    IrType::vect(ScalarType::UInt, 2)
}

fn v4m() -> IrType {
    IrType::vect(ScalarType::ModInt, 4)
}

/// A broadcast constant: one 32-bit value in all four lanes.
fn splat(value: u32) -> IrExpr {
    IrExpr::lit(u64::from(value), v4u())
}

/// An immediate operand (shuffle control byte or shift count).
fn imm(value: u64) -> IrExpr {
    IrExpr::lit(value, IrType::UINT)
}

/// Destructures `assign(res, mul(a, b))` with both operands plain
/// variables, returning `(res, a, b)`.
fn match_modmul(expr: &IrExpr) -> Result<(&Var, &Var, &Var), RewriteError> {
    let IrExpr::Assign(res, src) = expr else {
        return Err(RewriteError::PatternMismatch(
            "top-level node is not an assignment".to_string(),
        ));
    };
    let IrExpr::Bin(BinOp::Mul, lhs, rhs) = src.as_ref() else {
        return Err(RewriteError::PatternMismatch(
            "assignment source is not a multiplication".to_string(),
        ));
    };
    let (IrExpr::Var(a), IrExpr::Var(b)) = (lhs.as_ref(), rhs.as_ref()) else {
        return Err(RewriteError::PatternMismatch(
            "multiplication operands are not variables".to_string(),
        ));
    };
    Ok((res, a, b))
}

/// Emits one gather of the high and low product halves. `x20` holds
/// products 0 and 2, `x31` products 1 and 3; returns `(hi, lo)` with
/// lanes in original element order.
fn emit_gather(
    e: &mut Emitter,
    x20: &Var,
    x31: &Var,
    strategy: GatherStrategy,
) -> (Var, Var) {
    match strategy {
        GatherStrategy::FloatShuffleCast => {
            let lo_ooo = e.intr(
                "_mm_shuffle_ps",
                vec![IrExpr::var(x20), IrExpr::var(x31), imm(0x88)],
                v4u(),
            );
            let hi_ooo = e.intr(
                "_mm_shuffle_ps",
                vec![IrExpr::var(x20), IrExpr::var(x31), imm(0xdd)],
                v4u(),
            );
            let lo = e.intr(
                "_mm_shuffle_epi32",
                vec![IrExpr::var(&lo_ooo), imm(0xd8)],
                v4u(),
            );
            let hi = e.intr(
                "_mm_shuffle_epi32",
                vec![IrExpr::var(&hi_ooo), imm(0xd8)],
                v4u(),
            );
            (hi, lo)
        }
        GatherStrategy::ShuffleUnpack => {
            let sx = e.intr(
                "_mm_shuffle_epi32",
                vec![IrExpr::var(x20), imm(0xd8)],
                v4u(),
            );
            let sy = e.intr(
                "_mm_shuffle_epi32",
                vec![IrExpr::var(x31), imm(0xd8)],
                v4u(),
            );
            let lo = e.intr(
                "_mm_unpacklo_epi32",
                vec![IrExpr::var(&sx), IrExpr::var(&sy)],
                v4u(),
            );
            let hi = e.intr(
                "_mm_unpackhi_epi32",
                vec![IrExpr::var(&sx), IrExpr::var(&sy)],
                v4u(),
            );
            (hi, lo)
        }
        GatherStrategy::BlendAvx2 => {
            let flipped = e.intr(
                "_mm_shuffle_epi32",
                vec![IrExpr::var(x20), imm(0xb1)],
                v4u(),
            );
            let hi = e.intr(
                "_mm_blend_epi32",
                vec![IrExpr::var(&flipped), IrExpr::var(x31), imm(0x0a)],
                v4u(),
            );
            let lo_ooo = e.intr(
                "_mm_blend_epi32",
                vec![IrExpr::var(&flipped), IrExpr::var(x31), imm(0x05)],
                v4u(),
            );
            let lo = e.intr(
                "_mm_shuffle_epi32",
                vec![IrExpr::var(&lo_ooo), imm(0xb1)],
                v4u(),
            );
            (hi, lo)
        }
    }
}

/// Expands a four-lane modular multiplication into the full Montgomery
/// chain for `isa` under `strategy`.
pub fn rewrite_modmul_vec(
    expr: &IrExpr,
    isa: &IsaDescriptor,
    params: &ModParams,
    strategy: GatherStrategy,
) -> Result<KernelProgram, RewriteError> {
    let (res, a, b) = match_modmul(expr)?;
    match res.ty {
        IrType::Vect(ScalarType::ModInt, 4) => {}
        IrType::Vect(ScalarType::ModInt64 | ScalarType::ModReal, _)
        | IrType::Scalar(ScalarType::ModInt64 | ScalarType::ModReal) => {
            return Err(RewriteError::UnsupportedType(res.ty));
        }
        other => {
            return Err(RewriteError::PatternMismatch(format!(
                "destination has type {other}, expected TVect(TModInt, 4)"
            )));
        }
    }
    if isa.v != 4 {
        return Err(RewriteError::LaneMismatch {
            isa: isa.name.clone(),
            v: isa.v,
        });
    }
    if strategy == GatherStrategy::BlendAvx2 && !isa.has_blend {
        return Err(RewriteError::BlendUnavailable {
            isa: isa.name.clone(),
        });
    }

    let p = params.p();
    let l = params.l();
    let mask = params.r_mask() as u32;
    let bias = 0x8000_0000u32;

    let a_in = Var::new(a.name.clone(), v4m());
    let b_in = Var::new(b.name.clone(), v4m());
    let res_out = Var::new(res.name.clone(), v4m());
    let mut e = Emitter::new();

    // Odd lanes are reached by shifting one 32-bit slot toward lane 0,
    // then the two widening multiplies produce products (0,2) and (1,3).
    let a_odd = e.intr(
        "_mm_srli_si128",
        vec![IrExpr::var(&a_in), imm(4)],
        v4m(),
    );
    let b_odd = e.intr(
        "_mm_srli_si128",
        vec![IrExpr::var(&b_in), imm(4)],
        v4m(),
    );
    let t20 = e.intr(
        "_mm_mul_epu32",
        vec![IrExpr::var(&a_in), IrExpr::var(&b_in)],
        v2u(),
    );
    let t31 = e.intr(
        "_mm_mul_epu32",
        vec![IrExpr::var(&a_odd), IrExpr::var(&b_odd)],
        v2u(),
    );

    // First gather: only the low halves feed the m-step; the high half
    // of this gather is unused.
    let (_hi_unused, lo) = emit_gather(&mut e, &t20, &t31, strategy);

    // m = (T mod R) * P' mod R as one short multiply plus mask.
    let m_full = e.intr(
        "_mm_mullo_epi32",
        vec![IrExpr::var(&lo), splat(params.p_prime())],
        v4u(),
    );
    let m = e.intr(
        "_mm_and_si128",
        vec![IrExpr::var(&m_full), splat(mask)],
        v4u(),
    );

    // m * P on both product pairs, then the 64-bit additions T + mP
    // (carries cross the 32-bit halves, hence two-lane adds).
    let m_odd = e.intr("_mm_srli_si128", vec![IrExpr::var(&m), imm(4)], v4u());
    let mp20 = e.intr(
        "_mm_mul_epu32",
        vec![IrExpr::var(&m), splat(p)],
        v2u(),
    );
    let mp31 = e.intr(
        "_mm_mul_epu32",
        vec![IrExpr::var(&m_odd), splat(p)],
        v2u(),
    );
    let s20 = e.intr(
        "_mm_add_epi64",
        vec![IrExpr::var(&t20), IrExpr::var(&mp20)],
        v2u(),
    );
    let s31 = e.intr(
        "_mm_add_epi64",
        vec![IrExpr::var(&t31), IrExpr::var(&mp31)],
        v2u(),
    );

    // Second gather, then divide by R = 2^l: the high halves carry a
    // factor 2^32, so they shift left by 32-l while the low halves shift
    // right by l (contributing exactly zero when l = 32).
    let (hi, lo) = emit_gather(&mut e, &s20, &s31, strategy);
    let from_hi = e.intr(
        "_mm_slli_epi32",
        vec![IrExpr::var(&hi), imm(u64::from(32 - l))],
        v4u(),
    );
    let from_lo = e.intr(
        "_mm_srli_epi32",
        vec![IrExpr::var(&lo), imm(u64::from(l))],
        v4u(),
    );
    let t = e.intr(
        "_mm_add_epi32",
        vec![IrExpr::var(&from_hi), IrExpr::var(&from_lo)],
        v4u(),
    );

    // Lanes are in [0, 2P); subtract P wherever t >= P, using a signed
    // compare with both sides biased by 2^31.
    let biased = e.intr(
        "_mm_add_epi32",
        vec![IrExpr::var(&t), splat(bias)],
        v4u(),
    );
    let gt = e.intr(
        "_mm_cmpgt_epi32",
        vec![IrExpr::var(&biased), splat((p - 1).wrapping_add(bias))],
        v4u(),
    );
    let sub = e.intr(
        "_mm_and_si128",
        vec![IrExpr::var(&gt), splat(p)],
        v4u(),
    );
    e.body.push(IrExpr::assign(
        res_out.clone(),
        IrExpr::intrinsic(
            "_mm_sub_epi32",
            vec![IrExpr::var(&t), IrExpr::var(&sub)],
            v4m(),
        ),
    ));

    Ok(KernelProgram {
        params: *params,
        inputs: vec![a_in, b_in],
        outputs: vec![res_out],
        body: e.body,
        isa: Some(isa.clone()),
        strategy: Some(strategy),
    })
}

/// Expands a scalar modular multiplication into 64-bit Montgomery
/// arithmetic: widen, mask, short multiply, mask, widen by P, add,
/// shift, then a sign-mask conditional subtract.
pub fn rewrite_modmul_scalar(
    expr: &IrExpr,
    params: &ModParams,
) -> Result<KernelProgram, RewriteError> {
    let (res, a, b) = match_modmul(expr)?;
    match res.ty {
        IrType::Scalar(ScalarType::ModInt) => {}
        IrType::Scalar(ScalarType::ModInt64 | ScalarType::ModReal)
        | IrType::Vect(ScalarType::ModInt64 | ScalarType::ModReal, _) => {
            return Err(RewriteError::UnsupportedType(res.ty));
        }
        other => {
            return Err(RewriteError::PatternMismatch(format!(
                "destination has type {other}, expected TModInt"
            )));
        }
    }

    // The chain works on the raw unsigned words of the residues, so the
    // generated program takes its inputs at TUInt; the final assignment
    // closes back into the modular type.
    let a_in = Var::new(a.name.clone(), IrType::UINT);
    let b_in = Var::new(b.name.clone(), IrType::UINT);
    let res_out = Var::new(res.name.clone(), IrType::MODINT);
    let mut e = Emitter::new();

    let uc = |v: u64| IrExpr::lit(v, IrType::UINT);
    let ic = |v: u64| IrExpr::lit(v, IrType::INT);
    let p64 = u64::from(params.p());
    let mask = params.r_mask();
    let pprime = u64::from(params.p_prime());

    let t0 = e.emit(
        IrType::UINT,
        IrExpr::bin(BinOp::Mul, IrExpr::var(&a_in), IrExpr::var(&b_in)),
    );
    let t1 = e.emit(
        IrType::UINT,
        IrExpr::bin(BinOp::BAnd, IrExpr::var(&t0), uc(mask)),
    );
    let t2 = e.emit(
        IrType::UINT,
        IrExpr::bin(BinOp::Mul, IrExpr::var(&t1), uc(pprime)),
    );
    let t3 = e.emit(
        IrType::UINT,
        IrExpr::bin(BinOp::BAnd, IrExpr::var(&t2), uc(mask)),
    );
    let t4 = e.emit(
        IrType::UINT,
        IrExpr::bin(BinOp::Mul, IrExpr::var(&t3), uc(p64)),
    );
    let t5 = e.emit(
        IrType::UINT,
        IrExpr::bin(BinOp::Add, IrExpr::var(&t0), IrExpr::var(&t4)),
    );
    let t6 = e.emit(
        IrType::UINT,
        IrExpr::bin(BinOp::Shr, IrExpr::var(&t5), uc(u64::from(params.l()))),
    );
    // t6 is in [0, 2P); drop into signed arithmetic, subtract P, and add
    // it back where the difference went negative (sign mask from an
    // arithmetic shift).
    let t7 = e.emit(
        IrType::INT,
        IrExpr::bin(BinOp::Sub, IrExpr::var(&t6), ic(p64)),
    );
    let t8 = e.emit(
        IrType::INT,
        IrExpr::bin(BinOp::Shr, IrExpr::var(&t7), uc(63)),
    );
    let t9 = e.emit(
        IrType::INT,
        IrExpr::bin(BinOp::BAnd, IrExpr::var(&t8), ic(p64)),
    );
    e.body.push(IrExpr::assign(
        res_out.clone(),
        IrExpr::bin(BinOp::Add, IrExpr::var(&t7), IrExpr::var(&t9)),
    ));

    Ok(KernelProgram {
        params: *params,
        inputs: vec![a_in, b_in],
        outputs: vec![res_out],
        body: e.body,
        isa: None,
        strategy: None,
    })
}

/// The gather instruction sequence each strategy executes, by mnemonic.
fn gather_sequence(strategy: GatherStrategy) -> [&'static str; 4] {
    match strategy {
        GatherStrategy::FloatShuffleCast => [
            "_mm_shuffle_ps",
            "_mm_shuffle_ps",
            "_mm_shuffle_epi32",
            "_mm_shuffle_epi32",
        ],
        GatherStrategy::ShuffleUnpack => [
            "_mm_shuffle_epi32",
            "_mm_shuffle_epi32",
            "_mm_unpacklo_epi32",
            "_mm_unpackhi_epi32",
        ],
        GatherStrategy::BlendAvx2 => [
            "_mm_shuffle_epi32",
            "_mm_blend_epi32",
            "_mm_blend_epi32",
            "_mm_shuffle_epi32",
        ],
    }
}

/// Picks the gather strategy whose instruction sequence has the lowest
/// summed reciprocal throughput under `isa`'s cost table. Instructions
/// without a cost row contribute zero. Ties resolve in the declaration
/// order of [`GatherStrategy::ALL`], and the blend strategy is excluded
/// when the ISA lacks the instruction.
pub fn select_strategy(isa: &IsaDescriptor) -> GatherStrategy {
    let cost_of = |strategy: GatherStrategy| -> f64 {
        gather_sequence(strategy)
            .iter()
            .map(|m| isa.cost_entry(m).map_or(0.0, |e| e.cost()))
            .sum()
    };
    let mut best = GatherStrategy::FloatShuffleCast;
    let mut best_cost = cost_of(best);
    for candidate in [GatherStrategy::ShuffleUnpack, GatherStrategy::BlendAvx2] {
        if candidate == GatherStrategy::BlendAvx2 && !isa.has_blend {
            continue;
        }
        let cost = cost_of(candidate);
        if cost < best_cost {
            best = candidate;
            best_cost = cost;
        }
    }
    best
}
