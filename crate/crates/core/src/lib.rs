//! Numerical geometry of conformal Killing-Yano 2-forms on the three
//! four-dimensional constant-curvature spacetimes.
//!
//! The crate provides, in dependency order:
//!
//! - [`dual`]: forward-mode derivative arithmetic (all chart derivatives
//!   are exact; finite differences exist only in test oracles);
//! - [`chart`]: Minkowski, de Sitter, and anti-de Sitter geometry in
//!   explicit ball charts, with frames, connections, and quadric
//!   embeddings;
//! - [`forms`]: exterior calculus for 1- and 2-forms, the conformal
//!   Killing-Yano residual, divergences, the Hodge star, and the catalog
//!   of CKY 2-forms each model admits;
//! - [`surface`] and [`frames`]: codimension-two spacelike surfaces with
//!   Gauss-Legendre quadrature, null normal frames, and second fundamental
//!   forms;
//! - [`identities`]: the integral identities and inequalities the toolkit
//!   verifies (classical and spacetime Minkowski formulas, the functional
//!   F, Heintze-Karcher gaps, boundary tangency, CMC checks);
//! - [`flow`]: evolution along the incoming null congruence with
//!   monotonicity and shear diagnostics.
//!
//! The `book/` directory of the repository is a narrative guide; its code
//! blocks are compiled as doc-tests through the [`guide`] module.

pub mod chart;
pub mod dual;
pub mod error;
pub mod flow;
pub mod forms;
pub mod frames;
pub mod higher_dim;
pub mod identities;
pub mod sample;
pub mod support;
pub mod surface;
pub mod tensor;

pub mod guide;

pub use chart::{ChartPoint, SpacetimeId};
pub use error::{GeomError, Result};
