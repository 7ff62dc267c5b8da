//! Chart geometry of the three constant-curvature spacetimes.
//!
//! Minkowski space is the standard coordinate chart on R^{3,1}. De Sitter
//! and anti-de Sitter space are covered by ball charts `(t, x^1, x^2, x^3)`
//! with `r = |x| < 1`, carrying the static metrics
//!
//! ```text
//! ads:  g = -((1+r^2)/(1-r^2))^2 dt^2 + 4/(1-r^2)^2 (dx^i)^2
//! ds:   g = -((1-r^2)/(1+r^2))^2 dt^2 + 4/(1+r^2)^2 (dx^i)^2
//! ```
//!
//! Both embed as quadrics in a flat five-dimensional space; the ambient
//! coordinate functions `y^mu` restrict to static potentials whose covariant
//! Hessians are proportional to the metric. All derivatives of the chart
//! data are produced by dual-number propagation, never by differencing.

use crate::dual::{c, lift, Real, D1};
use crate::error::{GeomError, Result};
use crate::tensor;
use serde::{Deserialize, Serialize};

/// The three model spacetimes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpacetimeId {
    Minkowski,
    DeSitter,
    AntiDeSitter,
}

impl SpacetimeId {
    pub const ALL: [SpacetimeId; 3] = [
        SpacetimeId::Minkowski,
        SpacetimeId::DeSitter,
        SpacetimeId::AntiDeSitter,
    ];

    /// Sectional curvature of the model.
    pub fn kappa(self) -> f64 {
        match self {
            SpacetimeId::Minkowski => 0.0,
            SpacetimeId::DeSitter => 1.0,
            SpacetimeId::AntiDeSitter => -1.0,
        }
    }

    /// Diagonal of the flat metric on the five-dimensional ambient space,
    /// for the two curved models.
    pub fn ambient_signature(self) -> Option<[f64; 5]> {
        match self {
            SpacetimeId::Minkowski => None,
            SpacetimeId::DeSitter => Some([1.0, 1.0, 1.0, 1.0, -1.0]),
            SpacetimeId::AntiDeSitter => Some([-1.0, 1.0, 1.0, 1.0, -1.0]),
        }
    }

    /// Value of the ambient quadratic form on the embedded model.
    pub fn quadric_constant(self) -> Option<f64> {
        match self {
            SpacetimeId::Minkowski => None,
            SpacetimeId::DeSitter => Some(1.0),
            SpacetimeId::AntiDeSitter => Some(-1.0),
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "minkowski" | "mink" | "flat" => Some(SpacetimeId::Minkowski),
            "ds" | "desitter" | "de-sitter" | "de_sitter" => Some(SpacetimeId::DeSitter),
            "ads" | "antidesitter" | "anti-de-sitter" | "anti_de_sitter" => {
                Some(SpacetimeId::AntiDeSitter)
            }
            _ => None,
        }
    }
}

impl std::fmt::Display for SpacetimeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SpacetimeId::Minkowski => "minkowski",
            SpacetimeId::DeSitter => "ds",
            SpacetimeId::AntiDeSitter => "ads",
        };
        f.write_str(s)
    }
}

/// Ball charts exclude a thin collar below r = 1 so conformal factors stay
/// finite.
pub const CHART_RMAX: f64 = 1.0 - 1e-8;

/// A validated point of a chart. `coords = (x^0 = t, x^1, x^2, x^3)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChartPoint {
    spacetime: SpacetimeId,
    coords: [f64; 4],
}

impl ChartPoint {
    pub fn new(spacetime: SpacetimeId, coords: [f64; 4]) -> Result<Self> {
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(GeomError::BadParameter {
                reason: format!("non-finite chart coordinates {coords:?}"),
            });
        }
        if spacetime != SpacetimeId::Minkowski {
            let r = (coords[1] * coords[1] + coords[2] * coords[2] + coords[3] * coords[3]).sqrt();
            if r >= CHART_RMAX {
                return Err(GeomError::DomainViolation {
                    spacetime,
                    radius: r,
                });
            }
        }
        Ok(ChartPoint { spacetime, coords })
    }

    #[inline]
    pub fn spacetime(&self) -> SpacetimeId {
        self.spacetime
    }
    #[inline]
    pub fn coords(&self) -> [f64; 4] {
        self.coords
    }
    #[inline]
    pub fn t(&self) -> f64 {
        self.coords[0]
    }
    /// Euclidean radius of the spatial part.
    pub fn spatial_radius(&self) -> f64 {
        (self.coords[1] * self.coords[1]
            + self.coords[2] * self.coords[2]
            + self.coords[3] * self.coords[3])
            .sqrt()
    }
}

/// Metric components at generic scalars; the single source of truth for all
/// chart geometry.
pub fn metric_components<T: Real>(id: SpacetimeId, x: &[T; 4]) -> [[T; 4]; 4] {
    let zero = T::zero();
    let one = T::one();
    let mut g = [[zero; 4]; 4];
    match id {
        SpacetimeId::Minkowski => {
            g[0][0] = -one;
            g[1][1] = one;
            g[2][2] = one;
            g[3][3] = one;
        }
        SpacetimeId::AntiDeSitter => {
            let r2 = x[1] * x[1] + x[2] * x[2] + x[3] * x[3];
            let f = (one + r2) / (one - r2);
            let h = c::<T>(2.0) / (one - r2);
            g[0][0] = -(f * f);
            g[1][1] = h * h;
            g[2][2] = h * h;
            g[3][3] = h * h;
        }
        SpacetimeId::DeSitter => {
            let r2 = x[1] * x[1] + x[2] * x[2] + x[3] * x[3];
            let f = (one - r2) / (one + r2);
            let h = c::<T>(2.0) / (one + r2);
            g[0][0] = -(f * f);
            g[1][1] = h * h;
            g[2][2] = h * h;
            g[3][3] = h * h;
        }
    }
    g
}

/// Metric, inverse, and volume density at a point.
#[derive(Clone, Copy, Debug)]
pub struct MetricAtPoint {
    pub g: [[f64; 4]; 4],
    pub g_inv: [[f64; 4]; 4],
    /// sqrt(|det g|)
    pub sqrt_det: f64,
}

pub fn metric_at(p: &ChartPoint) -> MetricAtPoint {
    let g = metric_components(p.spacetime, &p.coords);
    let g_inv = tensor::invert(&g).expect("chart metrics are nondegenerate on their domain");
    let sqrt_det = (-tensor::det(&g)).sqrt();
    MetricAtPoint { g, g_inv, sqrt_det }
}

/// Christoffel symbols `gamma[lambda][mu][nu]` = Gamma^lambda_{mu nu} at
/// generic scalars.
pub fn christoffel_components<T: Real>(id: SpacetimeId, x: &[T; 4]) -> [[[T; 4]; 4]; 4] {
    if id == SpacetimeId::Minkowski {
        return [[[T::zero(); 4]; 4]; 4];
    }
    let seeds = lift(*x);
    let gd = metric_components(id, &seeds);
    // dg[rho][nu][mu] = d_mu g_{rho nu}
    let mut g = [[T::zero(); 4]; 4];
    let mut dg = [[[T::zero(); 4]; 4]; 4];
    for r in 0..4 {
        for n in 0..4 {
            g[r][n] = gd[r][n].re;
            for m in 0..4 {
                dg[r][n][m] = gd[r][n].eps[m];
            }
        }
    }
    let g_inv = tensor::invert(&g).expect("chart metrics are nondegenerate on their domain");
    let half = c::<T>(0.5);
    let mut gamma = [[[T::zero(); 4]; 4]; 4];
    for l in 0..4 {
        for m in 0..4 {
            for n in 0..4 {
                let mut s = T::zero();
                for r in 0..4 {
                    s = s + g_inv[l][r] * (dg[r][n][m] + dg[r][m][n] - dg[m][n][r]);
                }
                gamma[l][m][n] = half * s;
            }
        }
    }
    gamma
}

#[derive(Clone, Copy, Debug)]
pub struct ChristoffelAtPoint {
    /// `gamma[lambda][mu][nu]` = Gamma^lambda_{mu nu}
    pub gamma: [[[f64; 4]; 4]; 4],
}

pub fn christoffel_at(p: &ChartPoint) -> ChristoffelAtPoint {
    ChristoffelAtPoint {
        gamma: christoffel_components(p.spacetime, &p.coords),
    }
}

/// Orthonormal frame of the chart: coframe `theta[mu]` (covectors), dual
/// frame `e[mu]` (vectors), and the unit radial covector where defined.
#[derive(Clone, Copy, Debug)]
pub struct FrameAtPoint {
    pub theta: [[f64; 4]; 4],
    pub e: [[f64; 4]; 4],
    /// Unit radial covector `omega`; `None` at the spatial origin.
    pub omega: Option<[f64; 4]>,
}

pub fn frame_at(p: &ChartPoint) -> FrameAtPoint {
    let x = p.coords;
    let r2 = x[1] * x[1] + x[2] * x[2] + x[3] * x[3];
    let (f, h) = match p.spacetime {
        SpacetimeId::Minkowski => (1.0, 1.0),
        SpacetimeId::AntiDeSitter => ((1.0 + r2) / (1.0 - r2), 2.0 / (1.0 - r2)),
        SpacetimeId::DeSitter => ((1.0 - r2) / (1.0 + r2), 2.0 / (1.0 + r2)),
    };
    let mut theta = [[0.0; 4]; 4];
    let mut e = [[0.0; 4]; 4];
    theta[0][0] = f;
    e[0][0] = 1.0 / f;
    for i in 1..4 {
        theta[i][i] = h;
        e[i][i] = 1.0 / h;
    }
    let r = r2.sqrt();
    let omega = if r > 1e-14 {
        let mut w = [0.0; 4];
        for i in 1..4 {
            w[i] = h * x[i] / r;
        }
        Some(w)
    } else {
        None
    };
    FrameAtPoint { theta, e, omega }
}

/// A point of the flat five-dimensional ambient space of the curved models.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AmbientPoint {
    pub y: [f64; 5],
}

/// Ambient coordinates of a chart point at generic scalars. `None` for
/// Minkowski input.
pub fn embed_components<T: Real>(id: SpacetimeId, x: &[T; 4]) -> Option<[T; 5]> {
    let one = T::one();
    let r2 = x[1] * x[1] + x[2] * x[2] + x[3] * x[3];
    match id {
        SpacetimeId::Minkowski => None,
        SpacetimeId::AntiDeSitter => {
            let f = (one + r2) / (one - r2);
            let h = c::<T>(2.0) / (one - r2);
            Some([
                f * x[0].cos(),
                h * x[1],
                h * x[2],
                h * x[3],
                f * x[0].sin(),
            ])
        }
        SpacetimeId::DeSitter => {
            let f = (one - r2) / (one + r2);
            let h = c::<T>(2.0) / (one + r2);
            Some([
                f * x[0].cosh(),
                h * x[1],
                h * x[2],
                h * x[3],
                f * x[0].sinh(),
            ])
        }
    }
}

pub fn embed(p: &ChartPoint) -> Result<AmbientPoint> {
    embed_components(p.spacetime, &p.coords)
        .map(|y| AmbientPoint { y })
        .ok_or(GeomError::UnsupportedSpacetime {
            spacetime: p.spacetime,
        })
}

/// Max-norm residual of the static-potential identity for the ambient
/// coordinate `y^mu`:
///
/// ```text
/// ads:  nabla_{e_i} dy = +y theta^i,   nabla_{e_0} dy = -y theta^0
/// ds:   nabla_{e_i} dy = -y theta^i,   nabla_{e_0} dy = +y theta^0
/// ```
pub fn static_potential_residual(p: &ChartPoint, mu: usize) -> Result<f64> {
    if p.spacetime == SpacetimeId::Minkowski {
        return Err(GeomError::UnsupportedSpacetime {
            spacetime: p.spacetime,
        });
    }
    assert!(mu < 5, "ambient index out of range");
    let s = match p.spacetime {
        SpacetimeId::AntiDeSitter => 1.0,
        SpacetimeId::DeSitter => -1.0,
        SpacetimeId::Minkowski => unreachable!(),
    };
    let seeds = lift(lift(p.coords));
    let y_jet = embed_components(p.spacetime, &seeds).unwrap()[mu];
    let y = y_jet.re.re;
    let mut dy = [0.0; 4];
    let mut ddy = [[0.0; 4]; 4];
    for a in 0..4 {
        dy[a] = y_jet.re.eps[a];
        for b in 0..4 {
            ddy[a][b] = y_jet.eps[a].eps[b];
        }
    }
    let gamma = christoffel_at(p).gamma;
    // hess[lambda][nu] = (nabla dy)_{lambda nu}
    let mut hess = [[0.0; 4]; 4];
    for l in 0..4 {
        for n in 0..4 {
            let mut corr = 0.0;
            for r in 0..4 {
                corr += gamma[r][l][n] * dy[r];
            }
            hess[l][n] = ddy[l][n] - corr;
        }
    }
    let frame = frame_at(p);
    let mut worst: f64 = 0.0;
    for fi in 0..4 {
        let e = frame.e[fi];
        let sign = if fi == 0 { -s } else { s };
        for n in 0..4 {
            let mut nabla = 0.0;
            for l in 0..4 {
                nabla += e[l] * hess[l][n];
            }
            let target = sign * y * frame.theta[fi][n];
            worst = worst.max((nabla - target).abs());
        }
    }
    Ok(worst)
}

/// Fully lowered Riemann tensor `R_{kappa sigma mu nu}` assembled from the
/// connection and its dual-propagated derivatives.
pub fn riemann_lowered(p: &ChartPoint) -> [[[[f64; 4]; 4]; 4]; 4] {
    let id = p.spacetime;
    let seeds: [D1<4>; 4] = lift(p.coords);
    let gd = christoffel_components(id, &seeds);
    let mut gamma = [[[0.0; 4]; 4]; 4];
    let mut dgamma = [[[[0.0; 4]; 4]; 4]; 4]; // dgamma[l][m][n][k] = d_k Gamma^l_{mn}
    for l in 0..4 {
        for m in 0..4 {
            for n in 0..4 {
                gamma[l][m][n] = gd[l][m][n].re;
                for k in 0..4 {
                    dgamma[l][m][n][k] = gd[l][m][n].eps[k];
                }
            }
        }
    }
    let g = metric_at(p).g;
    let mut riem = [[[[0.0; 4]; 4]; 4]; 4];
    for l in 0..4 {
        for s in 0..4 {
            for m in 0..4 {
                for n in 0..4 {
                    let mut r = dgamma[l][n][s][m] - dgamma[l][m][s][n];
                    for rho in 0..4 {
                        r += gamma[l][m][rho] * gamma[rho][n][s]
                            - gamma[l][n][rho] * gamma[rho][m][s];
                    }
                    // lower the first index on the fly
                    for k in 0..4 {
                        riem[k][s][m][n] += g[k][l] * r;
                    }
                }
            }
        }
    }
    riem
}
