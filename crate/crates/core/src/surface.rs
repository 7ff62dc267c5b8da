//! Codimension-two spacelike surfaces and their quadrature.
//!
//! Surfaces are analytic immersions of a rectangle `(u, v)` into a chart,
//! evaluated on dual numbers so parameter derivatives of any order are
//! exact. A mesh is a tensor-product Gauss-Legendre rule carrying, per
//! node, the full 2-jet of the immersion, the induced metric, and the
//! quadrature weight including `sqrt(det sigma)`.
//!
//! The slice surface families:
//! - closed spheres and ellipsoids;
//! - flat disks through the origin with boundary on the support sphere;
//! - spherical caps meeting the support sphere of radius `r_S`
//!   orthogonally (`height^2 = r_S^2 + rho^2`), plus two perturbed cap
//!   profiles that keep the boundary on the support and preserve the
//!   orthogonal intersection exactly: the perturbation multiplies the
//!   position by `1 + eps A(u, v) w(u)` with a window `w = 16 u^2 (1-u)^2`
//!   whose value and slope vanish at the rim;
//! - graphs over a disk, optionally tilted out of the time slice.

use crate::chart::{metric_components, ChartPoint, SpacetimeId};
use crate::dual::{c, lift, Jet2, Real, D2, D3};
use crate::error::{GeomError, Result};
use crate::support::SupportSurface;
use crate::tensor;
use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2, "quadrature order must be at least 2");
    fn legendre(n: usize, x: f64) -> (f64, f64) {
        let mut p0 = 1.0;
        let mut p1 = x;
        for k in 2..=n {
            let kf = k as f64;
            let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        (p1, dp)
    }
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..60 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        xs[i] = x;
        ws[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap());
    (
        idx.iter().map(|&i| xs[i]).collect(),
        idx.iter().map(|&i| ws[i]).collect(),
    )
}

/// Shape of the perturbed cap families.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CapProfile {
    Round,
    /// Angular anisotropy `1 + eps cos(2 v) w(u)`.
    Angular { eps: f64 },
    /// Radial bump `1 + eps sin(freq u) w(u)`.
    RadialBump { eps: f64, freq: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum SurfaceKind {
    /// Round sphere in the slice.
    Sphere { rho: f64, center: [f64; 3] },
    /// Ellipsoid with semiaxes `semi` in the slice.
    Ellipsoid { semi: [f64; 3], center: [f64; 3] },
    /// Flat disk through the origin, normal to `axis`, boundary on the
    /// support sphere.
    Disk { axis: usize },
    /// Spherical cap around `axis` with boundary on the support sphere.
    /// `height` defaults to the orthogonal-intersection value
    /// `sqrt(r_S^2 + rho^2)`; `shift` translates the whole surface.
    Cap {
        rho: f64,
        axis: usize,
        height: Option<f64>,
        shift: [f64; 3],
        profile: CapProfile,
    },
    /// Graph over a disk of the given radius: `x3 = z0 + amp sin(kx x1)
    /// cos(ky x2)`, tilted off the slice when `time_amp != 0`.
    Graph {
        radius: f64,
        z0: f64,
        amp: f64,
        kx: f64,
        ky: f64,
        time_amp: f64,
    },
}

/// An analytic immersion of a parameter rectangle into one chart.
#[derive(Clone, Debug)]
pub struct ParamSurface {
    pub spacetime: SpacetimeId,
    pub kind: SurfaceKind,
    /// Slice time of the surface.
    pub t0: f64,
    /// Flip the outward normal orientation.
    pub flip_orientation: bool,
    /// Support surface the boundary is expected to lie on, when any.
    pub support: Option<SupportSurface>,
}

/// Cyclic complement of an axis: `axis -> (axis, b, c)` right-handed.
fn axis_frame(axis: usize) -> (usize, usize, usize) {
    match axis {
        1 => (1, 2, 3),
        2 => (2, 3, 1),
        3 => (3, 1, 2),
        _ => panic!("axis must be 1, 2, or 3"),
    }
}

impl ParamSurface {
    pub fn sphere(id: SpacetimeId, rho: f64, center: [f64; 3], t0: f64) -> Self {
        ParamSurface {
            spacetime: id,
            kind: SurfaceKind::Sphere { rho, center },
            t0,
            flip_orientation: false,
            support: None,
        }
    }

    pub fn ellipsoid(id: SpacetimeId, semi: [f64; 3], center: [f64; 3], t0: f64) -> Self {
        ParamSurface {
            spacetime: id,
            kind: SurfaceKind::Ellipsoid { semi, center },
            t0,
            flip_orientation: false,
            support: None,
        }
    }

    pub fn disk(id: SpacetimeId, axis: usize, support: SupportSurface, t0: f64) -> Self {
        ParamSurface {
            spacetime: id,
            kind: SurfaceKind::Disk { axis },
            t0,
            flip_orientation: false,
            support: Some(support),
        }
    }

    pub fn cap(
        id: SpacetimeId,
        rho: f64,
        axis: usize,
        profile: CapProfile,
        support: SupportSurface,
        t0: f64,
    ) -> Self {
        ParamSurface {
            spacetime: id,
            kind: SurfaceKind::Cap {
                rho,
                axis,
                height: None,
                shift: [0.0; 3],
                profile,
            },
            t0,
            flip_orientation: false,
            support: Some(support),
        }
    }

    pub fn graph(
        id: SpacetimeId,
        radius: f64,
        z0: f64,
        amp: f64,
        kx: f64,
        ky: f64,
        time_amp: f64,
        t0: f64,
    ) -> Self {
        ParamSurface {
            spacetime: id,
            kind: SurfaceKind::Graph {
                radius,
                z0,
                amp,
                kx,
                ky,
                time_amp,
            },
            t0,
            flip_orientation: false,
            support: None,
        }
    }

    fn support_radius(&self) -> Result<f64> {
        let sup = self.support.as_ref().ok_or_else(|| GeomError::BadSurface {
            reason: "surface kind requires a support surface".into(),
        })?;
        Ok(sup.slice_radius(self.spacetime))
    }

    /// Generating-sphere height and polar opening of a cap.
    fn cap_geometry(&self) -> Result<(f64, f64, f64)> {
        if let SurfaceKind::Cap { rho, height, .. } = self.kind {
            let r_s = self.support_radius()?;
            let h = height.unwrap_or_else(|| (r_s * r_s + rho * rho).sqrt());
            let cos_tm = (h * h + rho * rho - r_s * r_s) / (2.0 * h * rho);
            if !(-1.0 < cos_tm && cos_tm < 1.0) {
                return Err(GeomError::BadSurface {
                    reason: format!(
                        "cap (rho = {rho}, height = {h}) does not intersect the support sphere r = {r_s}"
                    ),
                });
            }
            Ok((h, cos_tm.acos(), r_s))
        } else {
            unreachable!("cap_geometry on a non-cap kind")
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            SurfaceKind::Cap { rho, axis, .. } => {
                if rho <= 0.0 {
                    return Err(GeomError::BadSurface {
                        reason: "cap radius must be positive".into(),
                    });
                }
                axis_frame(axis);
                self.cap_geometry()?;
            }
            SurfaceKind::Disk { axis } => {
                axis_frame(axis);
                self.support_radius()?;
            }
            SurfaceKind::Graph { radius, .. } => {
                if radius <= 0.0 {
                    return Err(GeomError::BadSurface {
                        reason: "graph radius must be positive".into(),
                    });
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Parameter rectangle `((u0, u1), (v0, v1))`.
    pub fn domain(&self) -> Result<((f64, f64), (f64, f64))> {
        Ok(match self.kind {
            SurfaceKind::Sphere { .. } | SurfaceKind::Ellipsoid { .. } => {
                ((0.0, PI), (0.0, 2.0 * PI))
            }
            SurfaceKind::Cap { .. } => ((0.0, 1.0), (0.0, 2.0 * PI)),
            SurfaceKind::Disk { .. } => ((0.0, self.support_radius()?), (0.0, 2.0 * PI)),
            SurfaceKind::Graph { radius, .. } => ((0.0, radius), (0.0, 2.0 * PI)),
        })
    }

    /// Whether the edge `u = u1` is a boundary of the surface.
    pub fn has_boundary(&self) -> bool {
        !matches!(
            self.kind,
            SurfaceKind::Sphere { .. } | SurfaceKind::Ellipsoid { .. }
        )
    }

    /// Chart coordinates of the immersion at generic scalars.
    pub fn eval<T: Real>(&self, u: T, v: T) -> [T; 4] {
        let mut x = [c::<T>(self.t0), T::zero(), T::zero(), T::zero()];
        match &self.kind {
            SurfaceKind::Sphere { rho, center } => {
                let (su, cu) = (u.sin(), u.cos());
                let (sv, cv) = (v.sin(), v.cos());
                x[1] = c::<T>(center[0]) + c::<T>(*rho) * su * cv;
                x[2] = c::<T>(center[1]) + c::<T>(*rho) * su * sv;
                x[3] = c::<T>(center[2]) + c::<T>(*rho) * cu;
            }
            SurfaceKind::Ellipsoid { semi, center } => {
                let (su, cu) = (u.sin(), u.cos());
                let (sv, cv) = (v.sin(), v.cos());
                x[1] = c::<T>(center[0]) + c::<T>(semi[0]) * su * cv;
                x[2] = c::<T>(center[1]) + c::<T>(semi[1]) * su * sv;
                x[3] = c::<T>(center[2]) + c::<T>(semi[2]) * cu;
            }
            SurfaceKind::Disk { axis } => {
                let (_, b, cax) = axis_frame(*axis);
                x[b] = u * v.cos();
                x[cax] = u * v.sin();
            }
            SurfaceKind::Cap {
                rho,
                axis,
                shift,
                profile,
                ..
            } => {
                let (h, theta_max, _) = self.cap_geometry().expect("validated cap");
                let (a, b, cax) = axis_frame(*axis);
                let theta = c::<T>(theta_max) * u;
                let (st, ct) = (theta.sin(), theta.cos());
                let (sv, cv) = (v.sin(), v.cos());
                // polar direction opens toward the origin
                let base_a = c::<T>(h) - c::<T>(*rho) * ct;
                let base_b = c::<T>(*rho) * st * cv;
                let base_c = c::<T>(*rho) * st * sv;
                // window with vanishing value and slope at u = 1 keeps the
                // boundary on the support and the intersection orthogonal
                let w = c::<T>(16.0) * u * u * (T::one() - u) * (T::one() - u);
                let s = match profile {
                    CapProfile::Round => T::one(),
                    CapProfile::Angular { eps } => {
                        let cos2v = cv * cv - sv * sv;
                        T::one() + c::<T>(*eps) * cos2v * w
                    }
                    CapProfile::RadialBump { eps, freq } => {
                        T::one() + c::<T>(*eps) * (c::<T>(*freq) * u).sin() * w
                    }
                };
                x[a] = s * base_a + c::<T>(shift[a - 1]);
                x[b] = s * base_b + c::<T>(shift[b - 1]);
                x[cax] = s * base_c + c::<T>(shift[cax - 1]);
            }
            SurfaceKind::Graph {
                z0,
                amp,
                kx,
                ky,
                time_amp,
                ..
            } => {
                let x1 = u * v.cos();
                let x2 = u * v.sin();
                x[1] = x1;
                x[2] = x2;
                x[3] = c::<T>(*z0) + c::<T>(*amp) * (c::<T>(*kx) * x1).sin() * (c::<T>(*ky) * x2).cos();
                x[0] = c::<T>(self.t0)
                    + c::<T>(*time_amp) * x1 * (c::<T>(0.8) + c::<T>(0.3) * x2);
            }
        }
        x
    }

    /// Full 2-jet of the immersion at a parameter point.
    pub fn jet2(&self, u: f64, v: f64) -> [Jet2; 4] {
        let [ud, vd] = lift(lift::<f64, 2>([u, v]));
        let x: [D2<2>; 4] = self.eval(ud, vd);
        x.map(Jet2::from_d2)
    }

    /// 3-jet evaluation, used to seed flows with exact frame derivatives.
    pub fn jet3(&self, u: f64, v: f64) -> [D3<2>; 4] {
        let [ud, vd] = lift(lift(lift::<f64, 2>([u, v])));
        self.eval(ud, vd)
    }

    /// Spatial direction fixing the sign of the outward normal at a point.
    pub fn orientation_hint(&self, coords: &[f64; 4]) -> [f64; 4] {
        let mut hint = [0.0; 4];
        match &self.kind {
            SurfaceKind::Sphere { center, .. } | SurfaceKind::Ellipsoid { center, .. } => {
                for i in 0..3 {
                    hint[i + 1] = coords[i + 1] - center[i];
                }
            }
            SurfaceKind::Cap {
                axis,
                height,
                shift,
                rho,
                ..
            } => {
                // outward from the generating sphere's center
                let (a, _, _) = axis_frame(*axis);
                let r_s = self.support_radius().unwrap_or(1.0);
                let h = height.unwrap_or_else(|| (r_s * r_s + rho * rho).sqrt());
                let mut center = [0.0; 3];
                center[a - 1] = h;
                for i in 0..3 {
                    hint[i + 1] = coords[i + 1] - (center[i] + shift[i]);
                }
            }
            SurfaceKind::Disk { axis } => {
                let (a, _, _) = axis_frame(*axis);
                hint[a] = 1.0;
            }
            SurfaceKind::Graph { .. } => {
                hint[3] = 1.0;
            }
        }
        if self.flip_orientation {
            for h in hint.iter_mut() {
                *h = -*h;
            }
        }
        hint
    }
}

/// One interior quadrature node with its jet and weight.
#[derive(Clone, Debug)]
pub struct MeshNode {
    pub u: f64,
    pub v: f64,
    pub point: ChartPoint,
    /// First parameter derivatives `d[a]` of the immersion.
    pub d: [[f64; 4]; 2],
    /// Second derivatives in the order `(uu, uv, vv)`.
    pub dd: [[f64; 4]; 3],
    pub sigma: [[f64; 2]; 2],
    pub sigma_inv: [[f64; 2]; 2],
    pub det_sigma: f64,
    /// Quadrature weight including `sqrt(det sigma)` (or the line element
    /// for boundary nodes).
    pub weight: f64,
    /// Outward-orientation hint for the spacelike normal.
    pub hint: [f64; 4],
}

/// A boundary quadrature node; `node.weight` carries the line element.
#[derive(Clone, Debug)]
pub struct BoundaryNode {
    pub node: MeshNode,
    /// Unit tangent of the boundary curve.
    pub edge_tangent: [f64; 4],
    /// Outward unit conormal within the tangent plane.
    pub conormal: [f64; 4],
}

#[derive(Clone, Debug)]
pub struct SurfaceMesh {
    pub surface: ParamSurface,
    pub order: usize,
    pub nodes: Vec<MeshNode>,
    pub boundary: Vec<BoundaryNode>,
}

fn make_node(surface: &ParamSurface, u: f64, v: f64, weight_uv: f64) -> Result<MeshNode> {
    let id = surface.spacetime;
    let jets = surface.jet2(u, v);
    let coords = [jets[0].v, jets[1].v, jets[2].v, jets[3].v];
    let point = ChartPoint::new(id, coords)?;
    let d = [
        [jets[0].d[0], jets[1].d[0], jets[2].d[0], jets[3].d[0]],
        [jets[0].d[1], jets[1].d[1], jets[2].d[1], jets[3].d[1]],
    ];
    let dd = [
        [jets[0].dd[0], jets[1].dd[0], jets[2].dd[0], jets[3].dd[0]],
        [jets[0].dd[1], jets[1].dd[1], jets[2].dd[1], jets[3].dd[1]],
        [jets[0].dd[2], jets[1].dd[2], jets[2].dd[2], jets[3].dd[2]],
    ];
    let g = metric_components(id, &coords);
    let mut sigma = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            sigma[a][b] = tensor::inner(&g, &d[a], &d[b]);
        }
    }
    let det_sigma = sigma[0][0] * sigma[1][1] - sigma[0][1] * sigma[1][0];
    if det_sigma <= 1e-18 || sigma[0][0] <= 0.0 {
        return Err(GeomError::DegenerateImmersion {
            u,
            v,
            det_sigma,
        });
    }
    let sigma_inv = [
        [sigma[1][1] / det_sigma, -sigma[0][1] / det_sigma],
        [-sigma[1][0] / det_sigma, sigma[0][0] / det_sigma],
    ];
    Ok(MeshNode {
        u,
        v,
        point,
        d,
        dd,
        sigma,
        sigma_inv,
        det_sigma,
        weight: weight_uv * det_sigma.sqrt(),
        hint: surface.orientation_hint(&coords),
    })
}

/// Tensor-product Gauss-Legendre mesh of a surface.
pub fn build_mesh(surface: &ParamSurface, order: usize) -> Result<SurfaceMesh> {
    if order < 2 {
        return Err(GeomError::BadParameter {
            reason: format!("quadrature order {order} < 2"),
        });
    }
    surface.validate()?;
    let ((u0, u1), (v0, v1)) = surface.domain()?;
    let (xs, ws) = gauss_legendre(order);
    let map = |a: f64, b: f64, xi: f64, wi: f64| {
        (0.5 * (a + b) + 0.5 * (b - a) * xi, 0.5 * (b - a) * wi)
    };
    let mut nodes = Vec::with_capacity(order * order);
    for iu in 0..order {
        let (u, wu) = map(u0, u1, xs[iu], ws[iu]);
        for iv in 0..order {
            let (v, wv) = map(v0, v1, xs[iv], ws[iv]);
            nodes.push(make_node(surface, u, v, wu * wv)?);
        }
    }
    let mut boundary = Vec::new();
    if surface.has_boundary() {
        let id = surface.spacetime;
        for iv in 0..order {
            let (v, wv) = map(v0, v1, xs[iv], ws[iv]);
            let mut node = make_node(surface, u1, v, 0.0)?;
            let g = metric_components(id, &node.point.coords());
            let tau = node.d[1];
            let tau_n = tensor::inner(&g, &tau, &tau).sqrt();
            let edge_tangent = tensor::scale(1.0 / tau_n, &tau);
            // conormal: the u-direction with the edge component removed
            let mut cn = node.d[0];
            let proj = tensor::inner(&g, &cn, &edge_tangent);
            cn = tensor::sub(&cn, &tensor::scale(proj, &edge_tangent));
            let cn_n = tensor::inner(&g, &cn, &cn).sqrt();
            let conormal = tensor::scale(1.0 / cn_n, &cn);
            node.weight = wv * tau_n;
            boundary.push(BoundaryNode {
                node,
                edge_tangent,
                conormal,
            });
        }
    }
    Ok(SurfaceMesh {
        surface: surface.clone(),
        order,
        nodes,
        boundary,
    })
}

impl SurfaceMesh {
    /// Weighted sum over interior nodes, in fixed node order.
    pub fn integrate(&self, mut f: impl FnMut(&MeshNode) -> f64) -> f64 {
        let mut acc = 0.0;
        for n in &self.nodes {
            acc += n.weight * f(n);
        }
        acc
    }

    /// Weighted sum over boundary nodes.
    pub fn integrate_boundary(&self, mut f: impl FnMut(&BoundaryNode) -> f64) -> f64 {
        let mut acc = 0.0;
        for b in &self.boundary {
            acc += b.node.weight * f(b);
        }
        acc
    }

    pub fn area(&self) -> f64 {
        self.integrate(|_| 1.0)
    }

    /// CSV dump, one row per node: `u1,u2,x0,x1,x2,x3,weight`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("u1,u2,x0,x1,x2,x3,weight\n");
        for n in &self.nodes {
            let x = n.point.coords();
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                n.u, n.v, x[0], x[1], x[2], x[3], n.weight
            ));
        }
        out
    }
}
