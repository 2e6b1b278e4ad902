//! A miniature kernel generator for modular multiplication.
//!
//! The pipeline is small and explicit. A kernel starts life as a typed
//! expression pattern (`res = a * b` over packed residues), passes
//! through type unification ([`ty::unify`]), is rewritten against an
//! ISA descriptor into a chain of register-level intrinsic statements
//! ([`rewrite`]), and then either runs bit-exactly on the built-in
//! interpreter ([`interp`]) or is emitted as a deterministic C
//! translation unit ([`unparse`]). The interpreter is the primary
//! verification backend: every generated chain can be replayed lane
//! for lane against the arithmetic in [`crate::modarith`] without a C
//! compiler in the loop.

pub mod expr;
pub mod interp;
pub mod isa;
pub mod rewrite;
pub mod ty;
pub mod unparse;

pub use expr::{typecheck_chain, BinOp, IrExpr, TypeCheckError, Var};
pub use interp::{interpret, Env, InterpError, Value};
pub use isa::{builtin, load_isa, CostEntry, IsaDescriptor, IsaError};
pub use rewrite::{
    rewrite_modmul_scalar, rewrite_modmul_vec, select_strategy, RewriteError,
};
pub use ty::{unify, IrType, ScalarType, TypeError};
pub use unparse::{unparse, UnparseError};

use crate::modarith::ModParams;
use crate::vkernels::GatherStrategy;

/// A fully rewritten kernel: declared inputs and outputs plus the flat
/// statement chain between them, with the parameter set baked into its
/// constants. Vector kernels also carry the ISA descriptor and gather
/// strategy they were specialized for; scalar kernels carry neither.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelProgram {
    pub params: ModParams,
    pub inputs: Vec<Var>,
    pub outputs: Vec<Var>,
    pub body: Vec<IrExpr>,
    pub isa: Option<IsaDescriptor>,
    pub strategy: Option<GatherStrategy>,
}

impl KernelProgram {
    /// Re-checks the statement chain against the declared interface:
    /// every temporary declared once before its single assignment,
    /// every variable used at a consistent type, every assignment
    /// unifying into its destination.
    pub fn typecheck(&self) -> Result<(), TypeCheckError> {
        typecheck_chain(&self.inputs, &self.outputs, &self.body)
    }
}
