//! Deterministic C emission for kernel programs.
//!
//! A vector program becomes one translation unit: the ISA's headers plus
//! the intrinsic header, the short-vector load/store macros spliced
//! verbatim, broadcast constants hoisted to `_mm_set1_epi32` locals
//! (deduplicated by value in first-occurrence order), and the statement
//! chain one intrinsic per line inside a four-lanes-per-iteration loop.
//! A scalar program becomes plain C99 integer arithmetic processing
//! `4 * n4` elements. Identical programs unparse to identical bytes;
//! shuffle and blend control bytes are emitted as hexadecimal literals.

use super::expr::{BinOp, IrExpr, Var};
use super::ty::{IrType, ScalarType};
use super::KernelProgram;
use std::fmt::Write;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum UnparseError {
    #[error("no emission mapping for mnemonic `{0}`")]
    UnknownMnemonic(String),
    #[error("a vector program carries no ISA descriptor")]
    MissingIsa,
    #[error("cannot emit {0}")]
    Unsupported(String),
}

/// Emits the program as compilable C text.
pub fn unparse(prog: &KernelProgram) -> Result<String, UnparseError> {
    match prog.outputs.first().map(|v| v.ty) {
        Some(IrType::Vect(..)) => unparse_vector(prog),
        Some(IrType::Scalar(_)) => unparse_scalar(prog),
        None => Err(UnparseError::Unsupported(
            "a program with no outputs".to_string(),
        )),
    }
}

/// How one intrinsic's operands are rendered.
enum ArgStyle {
    Value,
    /// Control byte: two-digit hexadecimal.
    ImmHex,
    /// Shift or byte count: decimal.
    ImmDec,
}

fn intrinsic_signature(mnemonic: &str) -> Option<&'static [ArgStyle]> {
    use ArgStyle::*;
    Some(match mnemonic {
        "_mm_shuffle_epi32" => &[Value, ImmHex],
        "_mm_shuffle_ps" => &[Value, Value, ImmHex],
        "_mm_blend_epi32" => &[Value, Value, ImmHex],
        "_mm_slli_epi32" | "_mm_srli_epi32" | "_mm_slli_epi64" | "_mm_srli_epi64"
        | "_mm_srli_si128" => &[Value, ImmDec],
        "_mm_mul_epu32" | "_mm_mullo_epi32" | "_mm_unpacklo_epi32" | "_mm_unpackhi_epi32"
        | "_mm_and_si128" | "_mm_add_epi64" | "_mm_add_epi32" | "_mm_sub_epi32"
        | "_mm_cmpgt_epi32" => &[Value, Value],
        _ => return None,
    })
}

/// Collects the distinct broadcast-constant values of the chain in
/// first-occurrence order.
fn hoisted_constants(body: &[IrExpr]) -> Vec<u64> {
    fn walk(expr: &IrExpr, seen: &mut Vec<u64>) {
        match expr {
            IrExpr::Const(value, IrType::Vect(..)) => {
                if !seen.contains(value) {
                    seen.push(*value);
                }
            }
            IrExpr::Assign(_, src) => walk(src, seen),
            IrExpr::Bin(_, lhs, rhs) => {
                walk(lhs, seen);
                walk(rhs, seen);
            }
            IrExpr::Intrinsic { args, .. } => {
                for arg in args {
                    walk(arg, seen);
                }
            }
            IrExpr::Var(_) | IrExpr::Const(..) | IrExpr::Decl(_) => {}
        }
    }
    let mut seen = Vec::new();
    for stmt in body {
        walk(stmt, &mut seen);
    }
    seen
}

struct VectorCx<'a> {
    rename: Vec<(&'a str, String)>,
    const_names: Vec<(u64, String)>,
}

impl VectorCx<'_> {
    fn var_name(&self, name: &str) -> String {
        self.rename
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, r)| r.clone())
            .unwrap_or_else(|| name.to_string())
    }
}

fn render_vector_operand(
    expr: &IrExpr,
    style: &ArgStyle,
    cx: &VectorCx,
) -> Result<String, UnparseError> {
    match (expr, style) {
        (IrExpr::Var(v), ArgStyle::Value) => Ok(cx.var_name(&v.name)),
        (IrExpr::Const(value, IrType::Vect(..)), ArgStyle::Value) => Ok(cx
            .const_names
            .iter()
            .find(|(v, _)| v == value)
            .map(|(_, n)| n.clone())
            .expect("hoisting covered every vector constant")),
        (IrExpr::Const(value, IrType::Scalar(_)), ArgStyle::ImmHex) => {
            Ok(format!("{value:#04x}"))
        }
        (IrExpr::Const(value, IrType::Scalar(_)), ArgStyle::ImmDec) => Ok(value.to_string()),
        _ => Err(UnparseError::Unsupported(
            "operand shape in vector chain".to_string(),
        )),
    }
}

fn render_vector_expr(expr: &IrExpr, cx: &VectorCx) -> Result<String, UnparseError> {
    let IrExpr::Intrinsic {
        mnemonic, args, ..
    } = expr
    else {
        return Err(UnparseError::Unsupported(
            "vector chains consist of intrinsic statements".to_string(),
        ));
    };
    let signature = intrinsic_signature(mnemonic)
        .ok_or_else(|| UnparseError::UnknownMnemonic(mnemonic.clone()))?;
    if signature.len() != args.len() {
        return Err(UnparseError::Unsupported(format!(
            "`{mnemonic}` with {} operands",
            args.len()
        )));
    }
    let rendered: Vec<String> = args
        .iter()
        .zip(signature)
        .map(|(arg, style)| render_vector_operand(arg, style, cx))
        .collect::<Result<_, _>>()?;
    if mnemonic == "_mm_shuffle_ps" {
        // The float shuffle reads integer registers through the float
        // view; the casts are free register reinterpretations.
        return Ok(format!(
            "_mm_castps_si128(_mm_shuffle_ps(_mm_castsi128_ps({}), _mm_castsi128_ps({}), {}))",
            rendered[0], rendered[1], rendered[2]
        ));
    }
    Ok(format!("{mnemonic}({})", rendered.join(", ")))
}

fn unparse_vector(prog: &KernelProgram) -> Result<String, UnparseError> {
    let isa = prog.isa.as_ref().ok_or(UnparseError::MissingIsa)?;
    let strategy_slug = prog
        .strategy
        .map(|s| s.slug().replace('-', "_"))
        .unwrap_or_else(|| "auto".to_string());
    let fn_name = format!("{}_montmul4_{strategy_slug}", isa.name);
    let ctype = &isa.ctype;

    let constants = hoisted_constants(&prog.body);
    let cx = VectorCx {
        rename: prog
            .inputs
            .iter()
            .map(|v| (v.name.as_str(), format!("v{}", v.name)))
            .collect(),
        const_names: constants
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, format!("c{i}")))
            .collect(),
    };

    let mut out = String::new();
    let _ = writeln!(
        out,
        "/* four-lane montgomery multiply mod {} (l = {})",
        prog.params.p(),
        prog.params.l()
    );
    let _ = writeln!(out, "   target: {} -- {}", isa.name, isa.info);
    let _ = writeln!(
        out,
        "   gather: {} */",
        prog.strategy.map(|s| s.slug()).unwrap_or("auto")
    );
    for header in &isa.includes {
        let _ = writeln!(out, "#include <{header}>");
    }
    let intrinsic_header = if isa.has_blend {
        "immintrin.h"
    } else {
        "smmintrin.h"
    };
    let _ = writeln!(out, "#include <{intrinsic_header}>");
    out.push('\n');
    let _ = writeln!(out, "{}", isa.svload_init);
    let _ = writeln!(out, "{}", isa.svstore_init);
    out.push('\n');

    let _ = writeln!(
        out,
        "void {fn_name}(const {ctype}* a, const {ctype}* b, {ctype}* out, size_t n4)"
    );
    out.push_str("{\n");
    for (value, name) in &cx.const_names {
        let _ = writeln!(
            out,
            "    const __m128i {name} = _mm_set1_epi32({value:#x});"
        );
    }
    let _ = writeln!(out, "    for (size_t i = 0; i < n4; ++i) {{");
    for input in &prog.inputs {
        let _ = writeln!(
            out,
            "        const __m128i v{} = SV_LOAD({} + 4 * i);",
            input.name, input.name
        );
    }

    let mut pending_decl: Option<&Var> = None;
    for stmt in &prog.body {
        match stmt {
            IrExpr::Decl(v) => pending_decl = Some(v),
            IrExpr::Assign(dest, src) => {
                let rhs = render_vector_expr(src, &cx)?;
                debug_assert!(
                    pending_decl.map_or(true, |d| d.name == dest.name),
                    "declaration must immediately precede its assignment"
                );
                pending_decl = None;
                let _ = writeln!(out, "        const __m128i {} = {rhs};", dest.name);
            }
            other => {
                return Err(UnparseError::Unsupported(format!(
                    "statement {other:?} in vector chain"
                )));
            }
        }
    }
    for output in &prog.outputs {
        let _ = writeln!(out, "        SV_STORE(out + 4 * i, {});", output.name);
    }
    out.push_str("    }\n");
    out.push_str("}\n");
    Ok(out)
}

fn scalar_ctype(ty: IrType) -> Result<&'static str, UnparseError> {
    match ty {
        IrType::Scalar(ScalarType::UInt) => Ok("uint64_t"),
        IrType::Scalar(ScalarType::Int) => Ok("int64_t"),
        other => Err(UnparseError::Unsupported(format!(
            "scalar temporary of type {other}"
        ))),
    }
}

/// Renders one operand of a scalar binary node. `node_ty` is the node's
/// unified type: unsigned variables referenced from a signed node take
/// an explicit cast, and literal constants take the suffix of the node
/// they appear in.
fn render_scalar_operand(
    expr: &IrExpr,
    node_ty: IrType,
    shift_count: bool,
    inputs: &[Var],
) -> Result<String, UnparseError> {
    match expr {
        IrExpr::Var(v) => {
            let name = if inputs.iter().any(|i| i.name == v.name) {
                format!("v{}", v.name)
            } else {
                v.name.clone()
            };
            if v.ty != node_ty && node_ty == IrType::INT {
                Ok(format!("(int64_t){name}"))
            } else {
                Ok(name)
            }
        }
        IrExpr::Const(value, _) if shift_count => Ok(value.to_string()),
        IrExpr::Const(value, _) => match node_ty {
            IrType::INT => Ok(format!("{value:#x}LL")),
            _ => Ok(format!("{value:#x}ULL")),
        },
        other => Err(UnparseError::Unsupported(format!(
            "nested scalar operand {other:?}"
        ))),
    }
}

fn render_scalar_expr(
    expr: &IrExpr,
    node_ty: IrType,
    inputs: &[Var],
) -> Result<String, UnparseError> {
    let IrExpr::Bin(op, lhs, rhs) = expr else {
        return Err(UnparseError::Unsupported(
            "scalar chains consist of binary-operator statements".to_string(),
        ));
    };
    let count = matches!(op, BinOp::Shl | BinOp::Shr);
    let left = render_scalar_operand(lhs, node_ty, false, inputs)?;
    let right = render_scalar_operand(rhs, node_ty, count, inputs)?;
    Ok(format!("{left} {} {right}", op.symbol()))
}

fn unparse_scalar(prog: &KernelProgram) -> Result<String, UnparseError> {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "/* scalar montgomery multiply mod {} (l = {}) */",
        prog.params.p(),
        prog.params.l()
    );
    out.push_str("#include <stdint.h>\n#include <stddef.h>\n\n");
    let _ = writeln!(
        out,
        "void montmul_scalar(const int32_t* a, const int32_t* b, int32_t* out, size_t n4)"
    );
    out.push_str("{\n");
    let _ = writeln!(out, "    for (size_t i = 0; i < 4 * n4; ++i) {{");
    for input in &prog.inputs {
        // Residues are sign-free 31-bit values stored in int32_t; the
        // two-step cast widens without sign extension.
        let _ = writeln!(
            out,
            "        const uint64_t v{0} = (uint64_t)(uint32_t){0}[i];",
            input.name
        );
    }
    let mut pending_decl: Option<&Var> = None;
    for stmt in &prog.body {
        match stmt {
            IrExpr::Decl(v) => pending_decl = Some(v),
            IrExpr::Assign(dest, src) => {
                if prog.outputs.iter().any(|o| o.name == dest.name) {
                    let rhs = render_scalar_expr(src, IrType::INT, &prog.inputs)?;
                    let _ = writeln!(out, "        out[i] = (int32_t)({rhs});");
                } else {
                    let rhs = render_scalar_expr(src, dest.ty, &prog.inputs)?;
                    let _ = writeln!(
                        out,
                        "        const {} {} = {rhs};",
                        scalar_ctype(dest.ty)?,
                        dest.name
                    );
                    pending_decl = None;
                }
            }
            other => {
                return Err(UnparseError::Unsupported(format!(
                    "statement {other:?} in scalar chain"
                )));
            }
        }
    }
    let _ = pending_decl;
    out.push_str("    }\n");
    out.push_str("}\n");
    Ok(out)
}
