//! The type lattice for kernel IR and pairwise unification.
//!
//! Types are the primitives `TBool`, `TUInt`, `TInt`, `TReal`, `TCplx`,
//! the modular primitives `TModInt`, `TModInt64`, `TModReal`, and flat
//! vectors `TVect(primitive, width)` — vectors never nest. [`unify`]
//! computes the result type of a mixed-type operation; modular types
//! dominate the integral types so that any operation touching a residue
//! stays modular, while undefined mixtures (for example modular with
//! floating) are hard errors rather than silent promotions.

use std::fmt;
use thiserror::Error;

/// A primitive (non-vector) IR type.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScalarType {
    Bool,
    UInt,
    Int,
    Real,
    Cplx,
    ModInt,
    ModInt64,
    ModReal,
}

impl ScalarType {
    pub const ALL: [ScalarType; 8] = [
        ScalarType::Bool,
        ScalarType::UInt,
        ScalarType::Int,
        ScalarType::Real,
        ScalarType::Cplx,
        ScalarType::ModInt,
        ScalarType::ModInt64,
        ScalarType::ModReal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScalarType::Bool => "TBool",
            ScalarType::UInt => "TUInt",
            ScalarType::Int => "TInt",
            ScalarType::Real => "TReal",
            ScalarType::Cplx => "TCplx",
            ScalarType::ModInt => "TModInt",
            ScalarType::ModInt64 => "TModInt64",
            ScalarType::ModReal => "TModReal",
        }
    }

    pub fn from_name(name: &str) -> Option<ScalarType> {
        ScalarType::ALL.into_iter().find(|s| s.name() == name)
    }
}

impl fmt::Display for ScalarType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A full IR type: a primitive, or a flat vector of primitives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum IrType {
    Scalar(ScalarType),
    Vect(ScalarType, u32),
}

impl IrType {
    pub const BOOL: IrType = IrType::Scalar(ScalarType::Bool);
    pub const UINT: IrType = IrType::Scalar(ScalarType::UInt);
    pub const INT: IrType = IrType::Scalar(ScalarType::Int);
    pub const REAL: IrType = IrType::Scalar(ScalarType::Real);
    pub const CPLX: IrType = IrType::Scalar(ScalarType::Cplx);
    pub const MODINT: IrType = IrType::Scalar(ScalarType::ModInt);
    pub const MODINT64: IrType = IrType::Scalar(ScalarType::ModInt64);
    pub const MODREAL: IrType = IrType::Scalar(ScalarType::ModReal);

    /// A `width`-lane vector of `base`. Widths below 2 are not vectors.
    pub fn vect(base: ScalarType, width: u32) -> IrType {
        debug_assert!(width >= 2, "vector width must be at least 2");
        IrType::Vect(base, width)
    }

    pub fn is_vector(self) -> bool {
        matches!(self, IrType::Vect(..))
    }

    /// The element type: a vector's base, or the scalar itself.
    pub fn base(self) -> ScalarType {
        match self {
            IrType::Scalar(s) | IrType::Vect(s, _) => s,
        }
    }
}

impl fmt::Display for IrType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IrType::Scalar(s) => write!(f, "{s}"),
            IrType::Vect(s, w) => write!(f, "TVect({s}, {w})"),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TypeError {
    #[error("no unification rule for {a} with {b}")]
    NoUnify { a: IrType, b: IrType },
}

/// Merges two primitive types. Rules, in priority order:
/// `TModInt` absorbs `TBool`/`TUInt`/`TInt`; `TCplx` absorbs
/// `TInt`/`TUInt`/`TReal`; equal types merge to themselves;
/// `TBool < TUInt < TInt < TReal` merge upward. Every other pair —
/// modular with floating or complex, `TModInt64`/`TModReal` with
/// anything but themselves, `TCplx` with `TBool` — is an error.
fn unify_scalar(a: ScalarType, b: ScalarType) -> Result<ScalarType, TypeError> {
    use ScalarType::*;
    let fail = || TypeError::NoUnify {
        a: IrType::Scalar(a),
        b: IrType::Scalar(b),
    };
    if a == b {
        return Ok(a);
    }
    if a == ModInt || b == ModInt {
        let other = if a == ModInt { b } else { a };
        return match other {
            Bool | UInt | Int => Ok(ModInt),
            _ => Err(fail()),
        };
    }
    // Unequal, and neither is ModInt: the remaining modular types pair
    // with nothing but themselves.
    if matches!(a, ModInt64 | ModReal) || matches!(b, ModInt64 | ModReal) {
        return Err(fail());
    }
    if a == Cplx || b == Cplx {
        let other = if a == Cplx { b } else { a };
        return match other {
            Int | UInt | Real => Ok(Cplx),
            _ => Err(fail()),
        };
    }
    let rank = |s: ScalarType| match s {
        Bool => 0,
        UInt => 1,
        Int => 2,
        Real => 3,
        _ => unreachable!("handled above"),
    };
    Ok(if rank(a) >= rank(b) { a } else { b })
}

/// Computes the result type of an operation over operands of types `a`
/// and `b`. Vector pairs merge base types and take the larger width;
/// a primitive against a vector promotes (broadcasts) into the vector.
pub fn unify(a: IrType, b: IrType) -> Result<IrType, TypeError> {
    match (a, b) {
        (IrType::Scalar(sa), IrType::Scalar(sb)) => Ok(IrType::Scalar(unify_scalar(sa, sb)?)),
        (IrType::Vect(ta, wa), IrType::Vect(tb, wb)) => {
            Ok(IrType::Vect(unify_scalar(ta, tb)?, wa.max(wb)))
        }
        (IrType::Scalar(s), IrType::Vect(t, w)) | (IrType::Vect(t, w), IrType::Scalar(s)) => {
            Ok(IrType::Vect(unify_scalar(s, t)?, w))
        }
    }
}
