//! Numerical toolkit for first Neumann eigenvalues of thin convex planar
//! domains and their comparison with the width.

pub mod error;
pub mod geom;

pub use error::{Error, Result};
pub use geom::{ConvexPolygon, Direction, Point, WFrame};
pub use harness::{FamilyKind, FamilySpec, InequalityRecord};
pub mod linalg;
pub mod profile;
pub mod ode;
pub mod liouville;
pub mod fem;
pub mod bridge;
pub mod harness;
pub mod io;
