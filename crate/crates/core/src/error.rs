//! Error types for chart, surface, and flow operations.

use crate::chart::SpacetimeId;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GeomError {
    #[error("point with spatial radius {radius} is outside the {spacetime:?} chart (requires r < 1)")]
    DomainViolation { spacetime: SpacetimeId, radius: f64 },

    #[error("operation requires de Sitter or anti-de Sitter input, got {spacetime:?}")]
    UnsupportedSpacetime { spacetime: SpacetimeId },

    #[error("degenerate immersion at (u, v) = ({u}, {v}): det sigma = {det_sigma}")]
    DegenerateImmersion { u: f64, v: f64, det_sigma: f64 },

    #[error("tangent plane at (u, v) = ({u}, {v}) is not spacelike")]
    NotSpacelike { u: f64, v: f64 },

    #[error("boundary node {node} is off the support surface by {distance}")]
    BoundaryOffSupport { node: usize, distance: f64 },

    #[error("degenerate surface: <H, Lbar> = {value} at node {node}")]
    VanishingExpansion { node: usize, value: f64 },

    #[error("<H, Lbar> = {value} <= 0 at node {node}; flow requires positive incoming expansion")]
    NonPositiveExpansion { node: usize, value: f64 },

    #[error("surface specification invalid: {reason}")]
    BadSurface { reason: String },

    #[error("unsupported dimension {n}; this check runs for 4 <= n <= 6")]
    UnsupportedDimension { n: usize },

    #[error("parameter out of range: {reason}")]
    BadParameter { reason: String },

    #[error("{op} is defined for closed surfaces only")]
    ClosedSurfaceRequired { op: &'static str },
}

pub type Result<T> = std::result::Result<T, GeomError>;
