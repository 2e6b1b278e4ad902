//! Bit-exact interpreter for kernel programs.
//!
//! The interpreter is the verification backend: it executes a statement
//! chain with the same bit semantics the emitted C has, so a generated
//! kernel can be checked against the arithmetic oracles without a
//! compiler in the loop. Scalar `TUInt`/`TInt` values are 64-bit
//! (logical versus arithmetic shift as typed), scalar `TModInt` is
//! 32-bit, and vector values are a 128-bit register viewed as four
//! 32-bit or two 64-bit lanes — intrinsics reinterpret between the views
//! exactly as hardware does. Lane semantics come from the same helpers
//! the emulated kernels use.

use super::expr::{BinOp, IrExpr, Var};
use super::ty::{unify, IrType, ScalarType};
use super::KernelProgram;
use crate::vkernels::lanes;
use thiserror::Error;

/// A runtime value: a 64-bit scalar or one 128-bit register in either
/// lane view.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Value {
    Scalar(u64),
    V4([u32; 4]),
    V2([u64; 2]),
}

impl Value {
    /// The register as four 32-bit lanes, reinterpreting if needed.
    pub fn as_u32x4(self) -> Result<[u32; 4], InterpError> {
        match self {
            Value::V4(v) => Ok(v),
            Value::V2(v) => Ok(lanes::to_u32x4(v)),
            Value::Scalar(_) => Err(InterpError::ExpectedVector),
        }
    }

    /// The register as two 64-bit lanes, reinterpreting if needed.
    pub fn as_u64x2(self) -> Result<[u64; 2], InterpError> {
        match self {
            Value::V2(v) => Ok(v),
            Value::V4(v) => Ok(lanes::to_u64x2(v)),
            Value::Scalar(_) => Err(InterpError::ExpectedVector),
        }
    }

    /// The value as a 64-bit scalar; vectors are refused.
    pub fn as_scalar(self) -> Result<u64, InterpError> {
        match self {
            Value::Scalar(v) => Ok(v),
            _ => Err(InterpError::ExpectedScalar),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InterpError {
    #[error("variable `{0}` is not bound")]
    Unbound(String),
    #[error("unknown mnemonic `{0}`")]
    UnknownMnemonic(String),
    #[error("mnemonic `{mnemonic}` takes {expected} operands, got {got}")]
    Arity {
        mnemonic: String,
        expected: usize,
        got: usize,
    },
    #[error("expected a vector operand")]
    ExpectedVector,
    #[error("expected a scalar operand")]
    ExpectedScalar,
    #[error("no interpretation for {0} arithmetic")]
    Unsupported(IrType),
}

/// Variable bindings, in binding order.
#[derive(Clone, Debug, Default)]
pub struct Env {
    bindings: Vec<(String, Value)>,
}

impl Env {
    pub fn new() -> Env {
        Env::default()
    }

    pub fn get(&self, name: &str) -> Option<Value> {
        self.bindings
            .iter()
            .find(|(n, _)| n == name)
            .map(|&(_, v)| v)
    }

    pub fn set(&mut self, name: &str, value: Value) {
        match self.bindings.iter_mut().find(|(n, _)| n == name) {
            Some((_, slot)) => *slot = value,
            None => self.bindings.push((name.to_string(), value)),
        }
    }
}

/// Materializes a constant at its type; vector constants broadcast.
fn materialize(value: u64, ty: IrType) -> Value {
    match ty {
        IrType::Scalar(_) => Value::Scalar(value),
        IrType::Vect(_, 2) => Value::V2([value; 2]),
        IrType::Vect(..) => Value::V4([value as u32; 4]),
    }
}

/// Reshapes an evaluated value into the layout its destination type
/// dictates (a no-op between equal layouts, a bit-reinterpretation
/// between the vector views, and a 32-bit truncation into `TModInt`).
fn coerce(value: Value, ty: IrType) -> Result<Value, InterpError> {
    Ok(match ty {
        IrType::Scalar(ScalarType::ModInt) => Value::Scalar(value.as_scalar()? & 0xffff_ffff),
        IrType::Scalar(_) => Value::Scalar(value.as_scalar()?),
        IrType::Vect(_, 2) => Value::V2(value.as_u64x2()?),
        IrType::Vect(..) => Value::V4(value.as_u32x4()?),
    })
}

fn scalar_bin(op: BinOp, ty: ScalarType, lhs: u64, rhs: u64) -> Result<u64, InterpError> {
    let wide = match ty {
        ScalarType::UInt | ScalarType::Bool => match op {
            BinOp::Mul => lhs.wrapping_mul(rhs),
            BinOp::Add => lhs.wrapping_add(rhs),
            BinOp::Sub => lhs.wrapping_sub(rhs),
            BinOp::BAnd => lhs & rhs,
            BinOp::Shl => {
                if rhs >= 64 {
                    0
                } else {
                    lhs << rhs
                }
            }
            BinOp::Shr => {
                if rhs >= 64 {
                    0
                } else {
                    lhs >> rhs
                }
            }
        },
        ScalarType::Int => match op {
            BinOp::Mul => (lhs as i64).wrapping_mul(rhs as i64) as u64,
            BinOp::Add => (lhs as i64).wrapping_add(rhs as i64) as u64,
            BinOp::Sub => (lhs as i64).wrapping_sub(rhs as i64) as u64,
            BinOp::BAnd => lhs & rhs,
            BinOp::Shl => {
                if rhs >= 64 {
                    0
                } else {
                    lhs << rhs
                }
            }
            // Arithmetic shift: counts saturate at the sign fill.
            BinOp::Shr => ((lhs as i64) >> rhs.min(63)) as u64,
        },
        ScalarType::ModInt => {
            // 32-bit wrapping arithmetic.
            let (a, b) = (lhs as u32, rhs as u32);
            u64::from(match op {
                BinOp::Mul => a.wrapping_mul(b),
                BinOp::Add => a.wrapping_add(b),
                BinOp::Sub => a.wrapping_sub(b),
                BinOp::BAnd => a & b,
                BinOp::Shl => {
                    if b >= 32 {
                        0
                    } else {
                        a << b
                    }
                }
                BinOp::Shr => {
                    if b >= 32 {
                        0
                    } else {
                        a >> b
                    }
                }
            })
        }
        other => return Err(InterpError::Unsupported(IrType::Scalar(other))),
    };
    Ok(wide)
}

/// One intrinsic step. `args` are the evaluated operands; trailing
/// immediate operands (control bytes, shift counts) arrive as scalars.
fn eval_intrinsic(mnemonic: &str, args: &[Value], ty: IrType) -> Result<Value, InterpError> {
    let need = |n: usize| {
        if args.len() == n {
            Ok(())
        } else {
            Err(InterpError::Arity {
                mnemonic: mnemonic.to_string(),
                expected: n,
                got: args.len(),
            })
        }
    };
    let raw4: [u32; 4];
    let raw2: [u64; 2];
    match mnemonic {
        "_mm_mul_epu32" => {
            need(2)?;
            raw2 = lanes::mul_epu32(args[0].as_u32x4()?, args[1].as_u32x4()?);
            return reshape2(raw2, ty);
        }
        "_mm_mullo_epi32" => {
            need(2)?;
            raw4 = lanes::mullo_epi32(args[0].as_u32x4()?, args[1].as_u32x4()?);
        }
        "_mm_shuffle_epi32" => {
            need(2)?;
            raw4 = lanes::shuffle_epi32(args[0].as_u32x4()?, args[1].as_scalar()? as u8);
        }
        "_mm_shuffle_ps" => {
            need(3)?;
            raw4 = lanes::shuffle_ps(
                args[0].as_u32x4()?,
                args[1].as_u32x4()?,
                args[2].as_scalar()? as u8,
            );
        }
        "_mm_unpacklo_epi32" => {
            need(2)?;
            raw4 = lanes::unpacklo_epi32(args[0].as_u32x4()?, args[1].as_u32x4()?);
        }
        "_mm_unpackhi_epi32" => {
            need(2)?;
            raw4 = lanes::unpackhi_epi32(args[0].as_u32x4()?, args[1].as_u32x4()?);
        }
        "_mm_blend_epi32" => {
            need(3)?;
            raw4 = lanes::blend_epi32(
                args[0].as_u32x4()?,
                args[1].as_u32x4()?,
                args[2].as_scalar()? as u8,
            );
        }
        "_mm_and_si128" => {
            need(2)?;
            raw4 = lanes::and_si128(args[0].as_u32x4()?, args[1].as_u32x4()?);
        }
        "_mm_add_epi64" => {
            need(2)?;
            raw2 = lanes::add_epi64(args[0].as_u64x2()?, args[1].as_u64x2()?);
            return reshape2(raw2, ty);
        }
        "_mm_add_epi32" => {
            need(2)?;
            raw4 = lanes::add_epi32(args[0].as_u32x4()?, args[1].as_u32x4()?);
        }
        "_mm_sub_epi32" => {
            need(2)?;
            raw4 = lanes::sub_epi32(args[0].as_u32x4()?, args[1].as_u32x4()?);
        }
        "_mm_cmpgt_epi32" => {
            need(2)?;
            raw4 = lanes::cmpgt_epi32(args[0].as_u32x4()?, args[1].as_u32x4()?);
        }
        "_mm_slli_epi32" => {
            need(2)?;
            raw4 = lanes::slli_epi32(args[0].as_u32x4()?, args[1].as_scalar()? as u32);
        }
        "_mm_srli_epi32" => {
            need(2)?;
            raw4 = lanes::srli_epi32(args[0].as_u32x4()?, args[1].as_scalar()? as u32);
        }
        "_mm_slli_epi64" => {
            need(2)?;
            let count = args[1].as_scalar()?;
            let v = args[0].as_u64x2()?;
            raw2 = if count >= 64 {
                [0; 2]
            } else {
                [v[0] << count, v[1] << count]
            };
            return reshape2(raw2, ty);
        }
        "_mm_srli_epi64" => {
            need(2)?;
            let count = args[1].as_scalar()?;
            let v = args[0].as_u64x2()?;
            raw2 = if count >= 64 {
                [0; 2]
            } else {
                [v[0] >> count, v[1] >> count]
            };
            return reshape2(raw2, ty);
        }
        "_mm_srli_si128" => {
            need(2)?;
            raw4 = lanes::srli_si128(args[0].as_u32x4()?, args[1].as_scalar()? as u32);
        }
        other => return Err(InterpError::UnknownMnemonic(other.to_string())),
    }
    reshape4(raw4, ty)
}

fn reshape4(raw: [u32; 4], ty: IrType) -> Result<Value, InterpError> {
    coerce(Value::V4(raw), ty)
}

fn reshape2(raw: [u64; 2], ty: IrType) -> Result<Value, InterpError> {
    coerce(Value::V2(raw), ty)
}

/// Evaluates one expression, returning its value and resolved type.
fn eval(expr: &IrExpr, env: &mut Env) -> Result<(Value, IrType), InterpError> {
    match expr {
        IrExpr::Var(Var { name, ty }) => {
            let value = env
                .get(name)
                .ok_or_else(|| InterpError::Unbound(name.clone()))?;
            Ok((value, *ty))
        }
        IrExpr::Const(value, ty) => Ok((materialize(*value, *ty), *ty)),
        IrExpr::Bin(op, lhs, rhs) => {
            let (lv, lt) = eval(lhs, env)?;
            let (rv, rt) = eval(rhs, env)?;
            let ty = unify(lt, rt).map_err(|_| InterpError::Unsupported(lt))?;
            let IrType::Scalar(s) = ty else {
                return Err(InterpError::Unsupported(ty));
            };
            let value = scalar_bin(*op, s, lv.as_scalar()?, rv.as_scalar()?)?;
            Ok((Value::Scalar(value), ty))
        }
        IrExpr::Assign(dest, src) => {
            let (value, _) = eval(src, env)?;
            let stored = coerce(value, dest.ty)?;
            env.set(&dest.name, stored);
            Ok((stored, dest.ty))
        }
        IrExpr::Intrinsic {
            mnemonic,
            args,
            ty,
        } => {
            let mut values = Vec::with_capacity(args.len());
            for arg in args {
                values.push(eval(arg, env)?.0);
            }
            Ok((eval_intrinsic(mnemonic, &values, *ty)?, *ty))
        }
        IrExpr::Decl(var) => {
            let zero = materialize(0, var.ty);
            env.set(&var.name, zero);
            Ok((zero, var.ty))
        }
    }
}

/// Runs a program over the caller's bindings. Inputs must be bound in
/// `env` before the call; after it, `env` additionally holds every
/// temporary and output.
pub fn interpret(prog: &KernelProgram, env: &mut Env) -> Result<(), InterpError> {
    for input in &prog.inputs {
        if env.get(&input.name).is_none() {
            return Err(InterpError::Unbound(input.name.clone()));
        }
    }
    for stmt in &prog.body {
        eval(stmt, env)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::irgen::expr::IrExpr;
    use crate::irgen::isa;
    use crate::irgen::rewrite::{rewrite_modmul_scalar, rewrite_modmul_vec};
    use crate::modarith::ModParams;
    use crate::rng::SplitMix64;
    use crate::vkernels::{mont_mul4, GatherStrategy, VecU32x4};

    fn scalar_prog(p: u32, l: u32) -> KernelProgram {
        let res = Var::new("res", IrType::MODINT);
        let a = Var::new("a", IrType::MODINT);
        let b = Var::new("b", IrType::MODINT);
        let pattern = IrExpr::assign(
            res,
            IrExpr::bin(BinOp::Mul, IrExpr::var(&a), IrExpr::var(&b)),
        );
        rewrite_modmul_scalar(&pattern, &ModParams::new(p, l).unwrap()).unwrap()
    }

    fn vector_prog(p: u32, l: u32, strategy: GatherStrategy) -> KernelProgram {
        let res = Var::new("res", IrType::vect(ScalarType::ModInt, 4));
        let a = Var::new("a", IrType::vect(ScalarType::ModInt, 4));
        let b = Var::new("b", IrType::vect(ScalarType::ModInt, 4));
        let pattern = IrExpr::assign(
            res,
            IrExpr::bin(BinOp::Mul, IrExpr::var(&a), IrExpr::var(&b)),
        );
        rewrite_modmul_vec(
            &pattern,
            &isa::builtin(),
            &ModParams::new(p, l).unwrap(),
            strategy,
        )
        .unwrap()
    }

    fn run_scalar(prog: &KernelProgram, a: u64, b: u64) -> u64 {
        let mut env = Env::new();
        env.set("a", Value::Scalar(a));
        env.set("b", Value::Scalar(b));
        interpret(prog, &mut env).unwrap();
        env.get("res").unwrap().as_scalar().unwrap()
    }

    fn run_vector(prog: &KernelProgram, a: [u32; 4], b: [u32; 4]) -> [u32; 4] {
        let mut env = Env::new();
        env.set("a", Value::V4(a));
        env.set("b", Value::V4(b));
        interpret(prog, &mut env).unwrap();
        env.get("res").unwrap().as_u32x4().unwrap()
    }

    #[test]
    fn worked_scalar_montgomery_program() {
        let prog = scalar_prog(17, 5);
        assert_eq!(run_scalar(&prog, 11, 7), 4);
        assert_eq!(run_scalar(&prog, 0, 13), 0);
    }

    #[test]
    fn scalar_intermediates_follow_the_reduction() {
        // Spot-check the internal dataflow on (11, 7) mod 17, R = 32:
        // full product 77, m = 3, T + mP = 128, shifted 4, then the
        // sign-mask step leaves 4.
        let prog = scalar_prog(17, 5);
        let mut env = Env::new();
        env.set("a", Value::Scalar(11));
        env.set("b", Value::Scalar(7));
        interpret(&prog, &mut env).unwrap();
        let at = |n: &str| env.get(n).unwrap().as_scalar().unwrap();
        assert_eq!(at("t0"), 77);
        assert_eq!(at("t3"), 3);
        assert_eq!(at("t5"), 128);
        assert_eq!(at("t6"), 4);
        assert_eq!(at("t7"), (-13i64) as u64);
        assert_eq!(at("t8"), u64::MAX);
        assert_eq!(at("t9"), 17);
        assert_eq!(at("res"), 4);
    }

    #[test]
    fn scalar_program_matches_oracle_randomized() {
        for (p, l) in [(17u32, 5u32), (97, 7), (2_013_265_921, 31), (257, 32)] {
            let mp = ModParams::new(p, l).unwrap();
            let prog = scalar_prog(p, l);
            let mut rng = SplitMix64::new(0x1234);
            for _ in 0..10_000 {
                let a = rng.next_residue(p);
                let b = rng.next_residue(p);
                assert_eq!(
                    run_scalar(&prog, u64::from(a), u64::from(b)),
                    u64::from(mp.mont_mul(a, b)),
                    "P={p} l={l} a={a} b={b}"
                );
            }
        }
    }

    #[test]
    fn worked_vector_program_lanes() {
        for strategy in GatherStrategy::ALL {
            let prog = vector_prog(17, 5, strategy);
            assert_eq!(
                run_vector(&prog, [11, 3, 7, 5], [7, 5, 11, 3]),
                [4, 1, 4, 1],
                "{strategy}"
            );
        }
    }

    #[test]
    fn vector_program_matches_kernel_randomized() {
        for (p, l) in [(97u32, 7u32), (2_013_265_921, 31), (2_147_483_647, 32)] {
            let mp = ModParams::new(p, l).unwrap();
            for strategy in GatherStrategy::ALL {
                let prog = vector_prog(p, l, strategy);
                let mut rng = SplitMix64::new(0x777);
                for _ in 0..2_500 {
                    let a: [u32; 4] = std::array::from_fn(|_| rng.next_residue(p));
                    let b: [u32; 4] = std::array::from_fn(|_| rng.next_residue(p));
                    assert_eq!(
                        run_vector(&prog, a, b),
                        mont_mul4(VecU32x4(a), VecU32x4(b), &mp, strategy).0,
                        "P={p} l={l} {strategy}"
                    );
                }
            }
        }
    }

    #[test]
    fn empty_program_leaves_env_unchanged() {
        let prog = KernelProgram {
            params: ModParams::new(17, 5).unwrap(),
            inputs: vec![],
            outputs: vec![],
            body: vec![],
            isa: None,
            strategy: None,
        };
        let mut env = Env::new();
        env.set("x", Value::Scalar(99));
        interpret(&prog, &mut env).unwrap();
        assert_eq!(env.get("x"), Some(Value::Scalar(99)));
        assert_eq!(env.bindings.len(), 1);
    }

    #[test]
    fn unbound_input_is_an_error() {
        let prog = scalar_prog(17, 5);
        let mut env = Env::new();
        env.set("a", Value::Scalar(1));
        assert_eq!(
            interpret(&prog, &mut env),
            Err(InterpError::Unbound("b".into()))
        );
    }

    #[test]
    fn unknown_mnemonic_is_an_error() {
        let t = Var::new("t", IrType::vect(ScalarType::UInt, 4));
        let prog = KernelProgram {
            params: ModParams::new(17, 5).unwrap(),
            inputs: vec![],
            outputs: vec![],
            body: vec![
                IrExpr::Decl(t.clone()),
                IrExpr::assign(
                    t,
                    IrExpr::intrinsic(
                        "_mm_does_not_exist",
                        vec![IrExpr::lit(0, IrType::vect(ScalarType::UInt, 4))],
                        IrType::vect(ScalarType::UInt, 4),
                    ),
                ),
            ],
            isa: None,
            strategy: None,
        };
        assert_eq!(
            interpret(&prog, &mut Env::new()),
            Err(InterpError::UnknownMnemonic("_mm_does_not_exist".into()))
        );
    }

    #[test]
    fn register_views_reinterpret_bits() {
        // A 2-lane value read as 4 lanes splits each 64-bit lane into
        // low and high halves in that order.
        let v = Value::V2([0x1111_2222_3333_4444, 0xaaaa_bbbb_cccc_dddd]);
        assert_eq!(
            v.as_u32x4().unwrap(),
            [0x3333_4444, 0x1111_2222, 0xcccc_dddd, 0xaaaa_bbbb]
        );
        let round_trip = Value::V4(v.as_u32x4().unwrap()).as_u64x2().unwrap();
        assert_eq!(round_trip, [0x1111_2222_3333_4444, 0xaaaa_bbbb_cccc_dddd]);
    }
}
