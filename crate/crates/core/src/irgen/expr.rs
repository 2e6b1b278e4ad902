//! Expression tree for kernel IR, and the type checker.
//!
//! Programs are flat statement chains: declarations of temporaries,
//! single assignments, and expressions built from variables, constants,
//! the binary operators, and named machine intrinsics. The checker walks
//! a chain enforcing declare-before-use, single assignment for
//! temporaries, and assignment compatibility — an assignment is legal
//! exactly when the source type unifies *to* the destination type.

use super::ty::{unify, IrType, TypeError};
use thiserror::Error;

/// A named, typed variable.
#[derive(Clone, Debug, PartialEq)]
pub struct Var {
    pub name: String,
    pub ty: IrType,
}

impl Var {
    pub fn new(name: impl Into<String>, ty: IrType) -> Var {
        Var {
            name: name.into(),
            ty,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Mul,
    Add,
    Sub,
    BAnd,
    Shl,
    Shr,
}

impl BinOp {
    /// The C spelling of the operator.
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Mul => "*",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::BAnd => "&",
            BinOp::Shl => "<<",
            BinOp::Shr => ">>",
        }
    }
}

/// One IR node. Statement chains are `Vec<IrExpr>` where `Decl` and
/// `Assign` appear at the top level.
#[derive(Clone, Debug, PartialEq)]
pub enum IrExpr {
    Var(Var),
    /// A literal; vector-typed constants denote a broadcast of the value
    /// into every lane.
    Const(u64, IrType),
    Assign(Var, Box<IrExpr>),
    Bin(BinOp, Box<IrExpr>, Box<IrExpr>),
    /// A machine instruction by mnemonic. The result type is declared by
    /// the builder, not unified from the operands: intrinsics reinterpret
    /// register contents (for example a widening multiply reads four
    /// 32-bit lanes and writes two 64-bit lanes).
    Intrinsic {
        mnemonic: String,
        args: Vec<IrExpr>,
        ty: IrType,
    },
    Decl(Var),
}

impl IrExpr {
    pub fn var(v: &Var) -> IrExpr {
        IrExpr::Var(v.clone())
    }

    pub fn lit(value: u64, ty: IrType) -> IrExpr {
        IrExpr::Const(value, ty)
    }

    pub fn assign(dest: Var, src: IrExpr) -> IrExpr {
        IrExpr::Assign(dest, Box::new(src))
    }

    pub fn bin(op: BinOp, lhs: IrExpr, rhs: IrExpr) -> IrExpr {
        IrExpr::Bin(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn intrinsic(mnemonic: &str, args: Vec<IrExpr>, ty: IrType) -> IrExpr {
        IrExpr::Intrinsic {
            mnemonic: mnemonic.to_string(),
            args,
            ty,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TypeCheckError {
    #[error("variable `{0}` used before declaration")]
    Undeclared(String),
    #[error("variable `{0}` declared twice")]
    Redeclared(String),
    #[error("variable `{name}` declared as {declared} but referenced as {referenced}")]
    InconsistentType {
        name: String,
        declared: IrType,
        referenced: IrType,
    },
    #[error("cannot assign {src} to `{dest}` of type {dest_ty}")]
    AssignMismatch {
        dest: String,
        dest_ty: IrType,
        src: IrType,
    },
    #[error("temporary `{0}` assigned twice")]
    DoubleAssign(String),
    #[error(transparent)]
    NoUnify(#[from] TypeError),
}

/// Declared names in a statement chain.
#[derive(Default)]
pub struct Scope {
    vars: Vec<(String, IrType)>,
}

impl Scope {
    pub fn new() -> Scope {
        Scope::default()
    }

    pub fn declare(&mut self, var: &Var) -> Result<(), TypeCheckError> {
        if self.lookup(&var.name).is_some() {
            return Err(TypeCheckError::Redeclared(var.name.clone()));
        }
        self.vars.push((var.name.clone(), var.ty));
        Ok(())
    }

    pub fn lookup(&self, name: &str) -> Option<IrType> {
        self.vars
            .iter()
            .find(|(n, _)| n == name)
            .map(|&(_, ty)| ty)
    }
}

/// Computes the type of an expression under `scope`. Used both on whole
/// statements and on subexpressions.
pub fn expr_type(expr: &IrExpr, scope: &Scope) -> Result<IrType, TypeCheckError> {
    match expr {
        IrExpr::Var(v) => {
            let declared = scope
                .lookup(&v.name)
                .ok_or_else(|| TypeCheckError::Undeclared(v.name.clone()))?;
            if declared != v.ty {
                return Err(TypeCheckError::InconsistentType {
                    name: v.name.clone(),
                    declared,
                    referenced: v.ty,
                });
            }
            Ok(declared)
        }
        IrExpr::Const(_, ty) => Ok(*ty),
        IrExpr::Bin(_, lhs, rhs) => {
            let lt = expr_type(lhs, scope)?;
            let rt = expr_type(rhs, scope)?;
            Ok(unify(lt, rt)?)
        }
        IrExpr::Assign(dest, src) => {
            if scope.lookup(&dest.name).is_none() {
                return Err(TypeCheckError::Undeclared(dest.name.clone()));
            }
            let src_ty = expr_type(src, scope)?;
            let merged = unify(src_ty, dest.ty).map_err(|_| TypeCheckError::AssignMismatch {
                dest: dest.name.clone(),
                dest_ty: dest.ty,
                src: src_ty,
            })?;
            if merged != dest.ty {
                return Err(TypeCheckError::AssignMismatch {
                    dest: dest.name.clone(),
                    dest_ty: dest.ty,
                    src: src_ty,
                });
            }
            Ok(dest.ty)
        }
        IrExpr::Intrinsic { args, ty, .. } => {
            for arg in args {
                expr_type(arg, scope)?;
            }
            Ok(*ty)
        }
        IrExpr::Decl(v) => Ok(v.ty),
    }
}

/// Checks a full statement chain: every variable declared exactly once
/// before first use (inputs and outputs arrive pre-declared), every
/// assignment type-compatible, and no temporary assigned twice.
pub fn typecheck_chain(
    inputs: &[Var],
    outputs: &[Var],
    body: &[IrExpr],
) -> Result<(), TypeCheckError> {
    let mut scope = Scope::new();
    for v in inputs.iter().chain(outputs) {
        scope.declare(v)?;
    }
    let mut assigned: Vec<String> = Vec::new();
    for stmt in body {
        match stmt {
            IrExpr::Decl(v) => scope.declare(v)?,
            IrExpr::Assign(dest, _) => {
                expr_type(stmt, &scope)?;
                if assigned.iter().any(|n| n == &dest.name) {
                    return Err(TypeCheckError::DoubleAssign(dest.name.clone()));
                }
                assigned.push(dest.name.clone());
            }
            other => {
                expr_type(other, &scope)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::irgen::ty::ScalarType;

    fn v4(s: ScalarType) -> IrType {
        IrType::vect(s, 4)
    }

    #[test]
    fn assignment_narrows_through_unification() {
        // res : TVect(TModInt,4) <- a * b with b a plain unsigned vector:
        // the product unifies to the modular vector, which is the
        // destination type, so the assignment is legal.
        let a = Var::new("a", v4(ScalarType::ModInt));
        let b = Var::new("b", v4(ScalarType::UInt));
        let res = Var::new("res", v4(ScalarType::ModInt));
        let body = vec![IrExpr::assign(
            res.clone(),
            IrExpr::bin(BinOp::Mul, IrExpr::var(&a), IrExpr::var(&b)),
        )];
        typecheck_chain(&[a, b], &[res], &body).unwrap();
    }

    #[test]
    fn equal_types_multiply_to_themselves() {
        let mut scope = Scope::new();
        let x = Var::new("x", IrType::INT);
        let y = Var::new("y", IrType::INT);
        scope.declare(&x).unwrap();
        scope.declare(&y).unwrap();
        let product = IrExpr::bin(BinOp::Mul, IrExpr::var(&x), IrExpr::var(&y));
        assert_eq!(expr_type(&product, &scope), Ok(IrType::INT));
    }

    #[test]
    fn assignment_cannot_narrow_complex_to_int() {
        let a = Var::new("a", IrType::CPLX);
        let b = Var::new("b", IrType::INT);
        let res = Var::new("res", IrType::INT);
        let body = vec![IrExpr::assign(
            res.clone(),
            IrExpr::bin(BinOp::Mul, IrExpr::var(&a), IrExpr::var(&b)),
        )];
        let err = typecheck_chain(&[a, b], &[res], &body).unwrap_err();
        assert!(matches!(err, TypeCheckError::AssignMismatch { .. }));
    }

    #[test]
    fn undeclared_variable_is_an_error() {
        let body = vec![IrExpr::assign(
            Var::new("t0", IrType::UINT),
            IrExpr::var(&Var::new("ghost", IrType::UINT)),
        )];
        assert_eq!(
            typecheck_chain(&[], &[Var::new("t0", IrType::UINT)], &body),
            Err(TypeCheckError::Undeclared("ghost".into()))
        );
    }

    #[test]
    fn declarations_are_unique() {
        let t = Var::new("t0", IrType::UINT);
        let body = vec![IrExpr::Decl(t.clone()), IrExpr::Decl(t.clone())];
        assert_eq!(
            typecheck_chain(&[], &[], &body),
            Err(TypeCheckError::Redeclared("t0".into()))
        );
    }

    #[test]
    fn temporaries_are_single_assignment() {
        let t = Var::new("t0", IrType::UINT);
        let body = vec![
            IrExpr::Decl(t.clone()),
            IrExpr::assign(t.clone(), IrExpr::lit(1, IrType::UINT)),
            IrExpr::assign(t.clone(), IrExpr::lit(2, IrType::UINT)),
        ];
        assert_eq!(
            typecheck_chain(&[], &[], &body),
            Err(TypeCheckError::DoubleAssign("t0".into()))
        );
    }

    #[test]
    fn reference_type_must_match_declaration() {
        let a = Var::new("a", IrType::UINT);
        let body = vec![IrExpr::assign(
            Var::new("a", IrType::UINT),
            IrExpr::var(&Var::new("a", IrType::INT)),
        )];
        let err = typecheck_chain(&[a], &[], &body).unwrap_err();
        assert!(matches!(err, TypeCheckError::InconsistentType { .. }));
    }

    #[test]
    fn intrinsic_types_are_declared_not_unified() {
        // A widening multiply takes 4-lane inputs and produces a 2-lane
        // 64-bit result; the node's declared type carries that.
        let mut scope = Scope::new();
        let a = Var::new("a", v4(ScalarType::ModInt));
        scope.declare(&a).unwrap();
        let node = IrExpr::intrinsic(
            "_mm_mul_epu32",
            vec![IrExpr::var(&a), IrExpr::var(&a)],
            IrType::vect(ScalarType::UInt, 2),
        );
        assert_eq!(expr_type(&node, &scope), Ok(IrType::vect(ScalarType::UInt, 2)));
    }
}
