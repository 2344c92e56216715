//! Exact computation of Hochschild cohomology for nodal chains of projective
//! lines, their q-deformations, mapping-torus categories over test fiber
//! algebras, multiplication-graph subschemes, and modules with connections
//! over Q[u,t] with q = ut.
//!
//! Everything runs over exact scalars: the rationals for the undeformed
//! theory and the valuation ring Q[q]_(q) for the deformed one. Concrete
//! scalar aliases live at the crate root; the linear-algebra core is generic
//! over the scalar type.

pub mod armod;
pub mod chart;
pub mod localhh;
pub mod report;
pub mod complex;
pub mod dvr;
pub mod errors;
pub mod globalhh;
pub mod groebner;
pub mod field;
pub mod matrix;
pub mod tate;
pub mod torus;

pub use errors::{EngineError, Result};
pub use field::{LocRat, QPoly, Rat};
