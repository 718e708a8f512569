//! Deterministic mesh construction: primitives, curve objects, modifiers,
//! transforms and mesh file formats.

pub mod csg;
pub mod curves;
pub mod io;
pub mod math;
pub mod mesh;
pub mod modifiers;
pub mod params;
pub mod primitives;

pub use csg::{boolean, BooleanOp};
pub use curves::{make_curve_object, CurveKind};
pub use math::{Aabb, Affine, Transform, Vec3};
pub use mesh::{compute_aabb, transform, Mesh};
pub use modifiers::{apply_modifier, BevelAffect, DeformAxis, ModifierSpec};
pub use params::{ParamValue, Params};
pub use primitives::{make_primitive, PrimitiveKind};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KernelError {
    #[error("unknown primitive '{0}'")]
    UnknownPrimitive(String),
    #[error("unknown modifier '{0}'")]
    UnknownModifier(String),
    #[error("invalid parameter '{name}': {reason}")]
    InvalidParam { name: String, reason: String },
    #[error("degenerate curve: {0}")]
    DegenerateCurve(String),
    #[error("{0} needs a second object")]
    MissingAuxMesh(String),
    #[error("non-manifold operand: {0}")]
    NonManifoldOperand(String),
    #[error("mesh is empty")]
    EmptyMesh,
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
}

/// A kernel result together with the non-fatal warnings raised while
/// building it.
#[derive(Debug, Clone, PartialEq)]
pub struct Built {
    pub mesh: Mesh,
    pub warnings: Vec<String>,
}

impl Built {
    pub fn plain(mesh: Mesh) -> Self {
        Self {
            mesh,
            warnings: Vec::new(),
        }
    }
}
