//! The shape-program language: a straight-line list of builtin calls that
//! build and modify named mesh objects.

pub mod builtins;
pub mod diagnostic;
pub mod interp;
pub mod syntax;

pub use builtins::{library_reference, BUILTINS};
pub use diagnostic::{render_diagnostics, Diagnostic, DiagnosticKind, Severity};
pub use interp::{execute, run_source, SceneObjects, DEFAULT_STATEMENT_BUDGET, MAX_TRIANGLES};
pub use syntax::{parse, Literal, ShapeProgram, Statement};
