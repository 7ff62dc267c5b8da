//! Support hypersurfaces for the free-boundary condition.
//!
//! In Minkowski space the support is the unit Lorentzian sphere
//! `<x, x> = 1`. In the curved models it is the timelike hypersurface of
//! constant distance `d` from the chart origin worldpoint, which in ambient
//! coordinates is the level set `y^0 = l` with `l = cosh d` (ads, `l > 1`)
//! or `l = cos d` (ds, `0 < l < 1`). Each support meets the `t = 0` slice
//! in a Euclidean sphere; its chart radius is [`SupportSurface::slice_radius`].

use crate::chart::{embed_components, metric_at, ChartPoint, SpacetimeId};
use crate::dual::{c, lift, Real};
use crate::error::{GeomError, Result};
use crate::sample::{rng, unit_dir};
use crate::tensor;
use rand::Rng;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SupportSurface {
    /// `<x, x> = 1` in Minkowski space.
    DeSitterSphere,
    /// `y^0 = l` in ds/ads.
    DistanceSphere { l: f64 },
}

impl SupportSurface {
    /// The support used by the free-boundary constructions of each model.
    pub fn for_spacetime(id: SpacetimeId, l: f64) -> Result<Self> {
        match id {
            SpacetimeId::Minkowski => Ok(SupportSurface::DeSitterSphere),
            SpacetimeId::AntiDeSitter => {
                if l <= 1.0 {
                    return Err(GeomError::BadParameter {
                        reason: format!("ads support needs l = cosh d > 1, got {l}"),
                    });
                }
                Ok(SupportSurface::DistanceSphere { l })
            }
            SpacetimeId::DeSitter => {
                if !(0.0 < l && l < 1.0) {
                    return Err(GeomError::BadParameter {
                        reason: format!("ds support needs 0 < l = cos d < 1, got {l}"),
                    });
                }
                Ok(SupportSurface::DistanceSphere { l })
            }
        }
    }

    /// Defining function `psi`; the support is `psi = 0`.
    pub fn defining<T: Real>(&self, id: SpacetimeId, x: &[T; 4]) -> T {
        match *self {
            SupportSurface::DeSitterSphere => {
                -(x[0] * x[0]) + x[1] * x[1] + x[2] * x[2] + x[3] * x[3] - T::one()
            }
            SupportSurface::DistanceSphere { l } => {
                let y = embed_components(id, x).expect("distance sphere requires a curved model");
                y[0] - c::<T>(l)
            }
        }
    }

    /// Covector `d psi` at a point.
    pub fn normal_covector(&self, p: &ChartPoint) -> [f64; 4] {
        let seeds = lift(p.coords());
        let v = self.defining(p.spacetime(), &seeds);
        v.eps
    }

    /// Unit spacelike normal vector (index raised, normalized).
    pub fn unit_normal(&self, p: &ChartPoint) -> [f64; 4] {
        let m = metric_at(p);
        let n = tensor::raise(&m.g_inv, &self.normal_covector(p));
        let n2 = tensor::inner(&m.g, &n, &n);
        debug_assert!(n2 > 0.0, "support normal must be spacelike");
        tensor::scale(1.0 / n2.sqrt(), &n)
    }

    /// Euclidean radius of the intersection with the `t = 0` slice.
    pub fn slice_radius(&self, id: SpacetimeId) -> f64 {
        match (*self, id) {
            (SupportSurface::DeSitterSphere, _) => 1.0,
            (SupportSurface::DistanceSphere { l }, SpacetimeId::AntiDeSitter) => {
                ((l - 1.0) / (l + 1.0)).sqrt()
            }
            (SupportSurface::DistanceSphere { l }, SpacetimeId::DeSitter) => {
                ((1.0 - l) / (1.0 + l)).sqrt()
            }
            (SupportSurface::DistanceSphere { .. }, SpacetimeId::Minkowski) => {
                unreachable!("distance spheres live in the curved models")
            }
        }
    }

    /// Seeded sample points on the support, spread over a band of times.
    pub fn sample(&self, id: SpacetimeId, n: usize, seed: u64) -> Vec<ChartPoint> {
        let mut r = rng(seed);
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let dir = unit_dir(&mut r);
            let p = match (*self, id) {
                (SupportSurface::DeSitterSphere, SpacetimeId::Minkowski) => {
                    let tau: f64 = r.random_range(-0.8..0.8);
                    let rad = tau.cosh();
                    ChartPoint::new(
                        id,
                        [tau.sinh(), rad * dir[0], rad * dir[1], rad * dir[2]],
                    )
                }
                (SupportSurface::DistanceSphere { l }, SpacetimeId::AntiDeSitter) => {
                    let t: f64 = r.random_range(-1.0..1.0);
                    // (1+r^2)/(1-r^2) = l / cos t
                    let kappa = l / t.cos();
                    let rad = ((kappa - 1.0) / (kappa + 1.0)).sqrt();
                    ChartPoint::new(id, [t, rad * dir[0], rad * dir[1], rad * dir[2]])
                }
                (SupportSurface::DistanceSphere { l }, SpacetimeId::DeSitter) => {
                    let t: f64 = r.random_range(-1.0..1.0);
                    // (1-r^2)/(1+r^2) = l / cosh t
                    let kappa = l / t.cosh();
                    let rad = ((1.0 - kappa) / (1.0 + kappa)).sqrt();
                    ChartPoint::new(id, [t, rad * dir[0], rad * dir[1], rad * dir[2]])
                }
                _ => unreachable!("support/spacetime mismatch"),
            };
            out.push(p.expect("support samples lie in the chart domain"));
        }
        out
    }
}
