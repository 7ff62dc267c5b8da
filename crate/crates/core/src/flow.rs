//! Evolution along the incoming null congruence.
//!
//! The surface moves by `dF/ds = phi Lbar` where `Lbar` is the future
//! incoming null normal, extended along its own geodesics with the initial
//! affine scaling; per node that is the system
//!
//! ```text
//! dx/ds    = phi Lbar,
//! dLbar/ds = -phi Gamma(Lbar, Lbar).
//! ```
//!
//! The state carries, per quadrature node, the full 2-jets of the position
//! and of `Lbar` in the surface parameters. Because `phi` is constant over
//! the surface within a step, the jet system closes exactly and the flowed
//! surface's induced metric, expansion, and shear are available at every
//! step without any refitting. For `phi` modes:
//!
//! - `ConstantOne`: `phi = 1`; in the flat model the generators are
//!   straight lines and the integrator is exact.
//! - `XiOverH`: `phi` is reset at each step to the surface mean of
//!   `<xi, Lbar> / <H, Lbar>`, a positive function of `s` alone. The
//!   pointwise quotient would couple the jets to third parameter
//!   derivatives and close only at infinite order, so the mean is used.
//!
//! Boundary nodes are re-projected onto the support surface after every
//! step (Newton along the support normal, run in jet arithmetic); the
//! pre-projection drift and the orthogonality residual are recorded, not
//! enforced.

use crate::chart::{christoffel_components, metric_components, ChartPoint, SpacetimeId};
use crate::dual::{Jet2, Real, D2};
use crate::error::{GeomError, Result};
use crate::forms::{associated_xi, TwoFormField};
use crate::frames::{frame_generic, shear_norm};
use crate::support::SupportSurface;
use crate::surface::{gauss_legendre, ParamSurface};
use crate::tensor;
use serde::Serialize;

/// Choice of the flow speed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum PhiMode {
    ConstantOne,
    /// Surface mean of `<xi, Lbar> / <H, Lbar>`, refreshed each step.
    XiOverH,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FlowConfig {
    pub phi_mode: PhiMode,
    /// Overall positive rescaling of `phi` (the gauge tests use `1/a`).
    pub phi_scale: f64,
    pub step: f64,
    pub max_steps: usize,
    pub slice_tolerance: f64,
    /// Target slice time for arrival detection.
    pub slice_time: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            phi_mode: PhiMode::ConstantOne,
            phi_scale: 1.0,
            step: 1e-2,
            max_steps: 200,
            slice_tolerance: 1e-6,
            slice_time: 0.0,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        if self.step <= 0.0 || self.slice_tolerance <= 0.0 || self.phi_scale <= 0.0 {
            return Err(GeomError::BadParameter {
                reason: "flow step, tolerance, and phi scale must be positive".into(),
            });
        }
        Ok(())
    }
}

/// Plain-data 2-jet of a chart 4-vector field over the surface parameters.
#[derive(Clone, Copy, Debug, Default)]
pub struct JetVec {
    pub v: [f64; 4],
    pub d: [[f64; 4]; 2],
    /// `(uu, uv, vv)`
    pub dd: [[f64; 4]; 3],
}

impl JetVec {
    fn from_d2(x: &[D2<2>; 4]) -> Self {
        let mut out = JetVec::default();
        for mu in 0..4 {
            let j = Jet2::from_d2(x[mu]);
            out.v[mu] = j.v;
            out.d[0][mu] = j.d[0];
            out.d[1][mu] = j.d[1];
            for k in 0..3 {
                out.dd[k][mu] = j.dd[k];
            }
        }
        out
    }

    fn to_d2(self) -> [D2<2>; 4] {
        let mut out = [D2::<2>::from_f64(0.0); 4];
        for mu in 0..4 {
            out[mu] = Jet2 {
                v: self.v[mu],
                d: [self.d[0][mu], self.d[1][mu]],
                dd: [self.dd[0][mu], self.dd[1][mu], self.dd[2][mu]],
            }
            .to_d2();
        }
        out
    }

    fn axpy(&self, a: f64, other: &JetVec) -> JetVec {
        let mut out = *self;
        for mu in 0..4 {
            out.v[mu] += a * other.v[mu];
            for k in 0..2 {
                out.d[k][mu] += a * other.d[k][mu];
            }
            for k in 0..3 {
                out.dd[k][mu] += a * other.dd[k][mu];
            }
        }
        out
    }
}

/// One flowing node: position and transported null normal, as jets.
#[derive(Clone, Copy, Debug)]
pub struct FlowNode {
    pub u: f64,
    pub v: f64,
    pub x: JetVec,
    pub lbar: JetVec,
    /// Parameter-measure weight; the area element is recomputed per step.
    pub base_weight: f64,
}

/// Flow state: interior nodes plus boundary nodes (1d rule on the rim).
#[derive(Clone, Debug)]
pub struct FlowState {
    pub spacetime: SpacetimeId,
    pub support: Option<SupportSurface>,
    pub s: f64,
    pub nodes: Vec<FlowNode>,
    pub boundary: Vec<FlowNode>,
}

/// Derived geometry of a flowing node at the current state.
struct NodeGeom {
    weight: f64,
    sigma: [[f64; 2]; 2],
    sigma_inv: [[f64; 2]; 2],
    chibar: [[f64; 2]; 2],
    h_pair: f64,
    xi_pair: f64,
    q_pair: f64,
}

fn node_geom(id: SpacetimeId, node: &FlowNode, q: &TwoFormField) -> Result<NodeGeom> {
    let x = node.x.v;
    let point = ChartPoint::new(id, x)?;
    let g = metric_components(id, &x);
    let d = node.x.d;
    let mut sigma = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            sigma[a][b] = tensor::inner(&g, &d[a], &d[b]);
        }
    }
    let det = sigma[0][0] * sigma[1][1] - sigma[0][1] * sigma[1][0];
    if det <= 1e-18 || sigma[0][0] <= 0.0 {
        return Err(GeomError::DegenerateImmersion {
            u: node.u,
            v: node.v,
            det_sigma: det,
        });
    }
    let sigma_inv = [
        [sigma[1][1] / det, -sigma[0][1] / det],
        [-sigma[1][0] / det, sigma[0][0] / det],
    ];
    let gamma = christoffel_components(id, &x);
    // chibar from the transported field
    let mut chibar = [[0.0; 2]; 2];
    let mut dlbar = [[0.0; 4]; 2];
    for a in 0..2 {
        for mu in 0..4 {
            let mut v = node.lbar.d[a][mu];
            for al in 0..4 {
                for be in 0..4 {
                    v += gamma[mu][al][be] * d[a][al] * node.lbar.v[be];
                }
            }
            dlbar[a][mu] = v;
        }
        for b in 0..2 {
            chibar[a][b] = tensor::inner(&g, &dlbar[a], &d[b]);
        }
    }
    // mean curvature vector of the flowed surface
    let ddx = |a: usize, b: usize| -> [f64; 4] {
        let idx = match (a, b) {
            (0, 0) => 0,
            (1, 1) => 2,
            _ => 1,
        };
        let mut out = [0.0; 4];
        for mu in 0..4 {
            let mut v = node.x.dd[idx][mu];
            for al in 0..4 {
                for be in 0..4 {
                    v += gamma[mu][al][be] * d[a][al] * d[b][be];
                }
            }
            out[mu] = v;
        }
        out
    };
    let mut w = [0.0; 4];
    for a in 0..2 {
        for b in 0..2 {
            let dab = ddx(a, b);
            for mu in 0..4 {
                w[mu] += sigma_inv[a][b] * dab[mu];
            }
        }
    }
    let mut tang = [0.0; 4];
    for bm in 0..2 {
        for cm in 0..2 {
            let comp = sigma_inv[bm][cm] * tensor::inner(&g, &w, &d[bm]);
            for mu in 0..4 {
                tang[mu] += comp * d[cm][mu];
            }
        }
    }
    let h_vec = tensor::sub(&w, &tang);
    let h_pair = tensor::inner(&g, &h_vec, &node.lbar.v);

    // complementary null normal with <L, Lbar> = -2: build any normal
    // frame and rescale the branch not parallel to the transported Lbar
    let hint = [0.0, x[1], x[2], x[3]];
    let fr = frame_generic::<f64>(id, &x, &d[0], &d[1], &hint).ok_or(GeomError::NotSpacelike {
        u: node.u,
        v: node.v,
    })?;
    let c1 = tensor::inner(&g, &fr.l, &node.lbar.v);
    let c2 = tensor::inner(&g, &fr.lbar, &node.lbar.v);
    let cand = if c1.abs() >= c2.abs() { fr.l } else { fr.lbar };
    let cpair = tensor::inner(&g, &cand, &node.lbar.v);
    let l_vec = tensor::scale(-2.0 / cpair, &cand);

    let xi = associated_xi(q, &point);
    let xi_pair = tensor::pair(&xi, &node.lbar.v);
    let q_pair = q.value(&point).apply(&l_vec, &node.lbar.v);

    Ok(NodeGeom {
        weight: node.base_weight * det.sqrt(),
        sigma,
        sigma_inv,
        chibar,
        h_pair,
        xi_pair,
        q_pair,
    })
}

/// Seed a flow from an analytic surface: interior and boundary nodes carry
/// exact position and frame jets; `lbar_scale` rescales the initial null
/// normal (the gauge-robustness tests use it).
pub fn init_flow(surface: &ParamSurface, order: usize, lbar_scale: f64) -> Result<FlowState> {
    if lbar_scale <= 0.0 {
        return Err(GeomError::BadParameter {
            reason: "lbar scale must be positive".into(),
        });
    }
    surface.validate()?;
    let id = surface.spacetime;
    let ((u0, u1), (v0, v1)) = surface.domain()?;
    let (xs, ws) = gauss_legendre(order);
    let map =
        |a: f64, b: f64, xi: f64, wi: f64| (0.5 * (a + b) + 0.5 * (b - a) * xi, 0.5 * (b - a) * wi);

    let make = |u: f64, v: f64, base_weight: f64| -> Result<FlowNode> {
        let x3 = surface.jet3(u, v);
        let coords_d2: [D2<2>; 4] = [x3[0].re, x3[1].re, x3[2].re, x3[3].re];
        let t1: [D2<2>; 4] = [x3[0].eps[0], x3[1].eps[0], x3[2].eps[0], x3[3].eps[0]];
        let t2: [D2<2>; 4] = [x3[0].eps[1], x3[1].eps[1], x3[2].eps[1], x3[3].eps[1]];
        let x_jet = JetVec::from_d2(&coords_d2);
        ChartPoint::new(id, x_jet.v)?;
        let hint = surface.orientation_hint(&x_jet.v);
        let fr = frame_generic(id, &coords_d2, &t1, &t2, &hint).ok_or(GeomError::NotSpacelike {
            u,
            v,
        })?;
        let mut lbar = JetVec::from_d2(&fr.lbar);
        lbar = JetVec::default().axpy(lbar_scale, &lbar);
        Ok(FlowNode {
            u,
            v,
            x: x_jet,
            lbar,
            base_weight,
        })
    };

    let mut nodes = Vec::with_capacity(order * order);
    for iu in 0..order {
        let (u, wu) = map(u0, u1, xs[iu], ws[iu]);
        for iv in 0..order {
            let (v, wv) = map(v0, v1, xs[iv], ws[iv]);
            nodes.push(make(u, v, wu * wv)?);
        }
    }
    let mut boundary = Vec::new();
    if surface.has_boundary() {
        for iv in 0..order {
            let (v, wv) = map(v0, v1, xs[iv], ws[iv]);
            boundary.push(make(u1, v, wv)?);
        }
    }
    Ok(FlowState {
        spacetime: id,
        support: surface.support,
        s: 0.0,
        nodes,
        boundary,
    })
}

fn flow_rhs(id: SpacetimeId, x: &JetVec, lbar: &JetVec, phi: f64) -> (JetVec, JetVec) {
    let xd = x.to_d2();
    let lb = lbar.to_d2();
    let gamma = christoffel_components(id, &xd);
    let phi_t = D2::<2>::from_f64(phi);
    let mut dx = [D2::<2>::from_f64(0.0); 4];
    let mut dl = [D2::<2>::from_f64(0.0); 4];
    for mu in 0..4 {
        dx[mu] = phi_t * lb[mu];
        let mut acc = D2::<2>::from_f64(0.0);
        for al in 0..4 {
            for be in 0..4 {
                acc = acc + gamma[mu][al][be] * lb[al] * lb[be];
            }
        }
        dl[mu] = -(phi_t * acc);
    }
    (JetVec::from_d2(&dx), JetVec::from_d2(&dl))
}

fn rk4_node(id: SpacetimeId, node: &FlowNode, phi: f64, h: f64) -> FlowNode {
    let (k1x, k1l) = flow_rhs(id, &node.x, &node.lbar, phi);
    let x2 = node.x.axpy(0.5 * h, &k1x);
    let l2 = node.lbar.axpy(0.5 * h, &k1l);
    let (k2x, k2l) = flow_rhs(id, &x2, &l2, phi);
    let x3 = node.x.axpy(0.5 * h, &k2x);
    let l3 = node.lbar.axpy(0.5 * h, &k2l);
    let (k3x, k3l) = flow_rhs(id, &x3, &l3, phi);
    let x4 = node.x.axpy(h, &k3x);
    let l4 = node.lbar.axpy(h, &k3l);
    let (k4x, k4l) = flow_rhs(id, &x4, &l4, phi);
    let mut out = *node;
    out.x = out
        .x
        .axpy(h / 6.0, &k1x)
        .axpy(h / 3.0, &k2x)
        .axpy(h / 3.0, &k3x)
        .axpy(h / 6.0, &k4x);
    out.lbar = out
        .lbar
        .axpy(h / 6.0, &k1l)
        .axpy(h / 3.0, &k2l)
        .axpy(h / 3.0, &k3l)
        .axpy(h / 6.0, &k4l);
    out
}

/// Newton projection of a jet point onto the support, along the support
/// normal, in jet arithmetic.
fn project_to_support(id: SpacetimeId, support: &SupportSurface, x: &JetVec) -> JetVec {
    let mut xd = x.to_d2();
    for _ in 0..3 {
        let psi = support.defining(id, &xd);
        let seeds = crate::dual::lift(xd);
        let psi_d = support.defining(id, &seeds);
        let mut n_cov = [D2::<2>::from_f64(0.0); 4];
        for nu in 0..4 {
            n_cov[nu] = psi_d.eps[nu];
        }
        let g = metric_components(id, &xd);
        let g_inv = tensor::invert(&g).expect("chart metric nondegenerate");
        let n_vec = tensor::raise(&g_inv, &n_cov);
        let denom = tensor::pair(&n_cov, &n_vec);
        let lam = psi / denom;
        for mu in 0..4 {
            xd[mu] = xd[mu] - lam * n_vec[mu];
        }
    }
    JetVec::from_d2(&xd)
}

/// Orthogonality residual of a boundary node against the support: the
/// support normal's components in the normal plane of the surface.
fn boundary_orthogonality(id: SpacetimeId, node: &FlowNode, support: &SupportSurface) -> f64 {
    let x = node.x.v;
    let Ok(point) = ChartPoint::new(id, x) else {
        return f64::NAN;
    };
    let g = metric_components(id, &x);
    let hint = [0.0, x[1], x[2], x[3]];
    let Some(fr) = frame_generic::<f64>(id, &x, &node.x.d[0], &node.x.d[1], &hint) else {
        return f64::NAN;
    };
    let n = support.unit_normal(&point);
    let a = -tensor::inner(&g, &n, &fr.e0);
    let c = tensor::inner(&g, &n, &fr.en);
    (a * a + c * c).sqrt()
}

/// Transport a state by a signed parameter distance along its own null
/// generators (`phi = 1`), split over `n_steps` RK4 steps. No expansion
/// positivity is required; boundary nodes are re-projected. Backward
/// transport (`ds < 0`) of a slice configuration is how the tests build
/// off-slice initial data satisfying the free-boundary hypotheses: the
/// boundary generators run inside the support, so the transported boundary
/// stays on it.
pub fn transport(state: &FlowState, ds: f64, n_steps: usize) -> Result<FlowState> {
    let id = state.spacetime;
    let h = ds / n_steps as f64;
    let mut next = state.clone();
    for _ in 0..n_steps {
        next.s += h;
        for node in next.nodes.iter_mut() {
            *node = rk4_node(id, node, 1.0, h);
            ChartPoint::new(id, node.x.v)?;
        }
        for node in next.boundary.iter_mut() {
            *node = rk4_node(id, node, 1.0, h);
            if let Some(sup) = &next.support {
                node.x = project_to_support(id, sup, &node.x);
            }
            ChartPoint::new(id, node.x.v)?;
        }
    }
    Ok(next)
}

/// One record of the flow trace.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FlowRecord {
    pub s: f64,
    pub f_value: f64,
    pub max_x0: f64,
    pub shear: f64,
    /// Pre-projection distance of boundary nodes to the support.
    pub boundary_residual: f64,
    /// Orthogonality residual of the boundary against the support.
    pub orthogonality: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum FlowStatus {
    SliceReached { steps: usize },
    MaxSteps,
    Failed { step: usize, message: String },
}

#[derive(Clone, Debug, Serialize)]
pub struct FlowTrace {
    pub records: Vec<FlowRecord>,
    pub status: FlowStatus,
}

impl FlowTrace {
    /// CSV dump with the columns `s,F_value,max_x0,shear,boundary_residual`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,F_value,max_x0,shear,boundary_residual\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.s, r.f_value, r.max_x0, r.shear, r.boundary_residual
            ));
        }
        out
    }
}

impl FlowState {
    /// Functional value on the current surface with the transported class
    /// `[Lbar]`.
    pub fn f_value(&self, q: &TwoFormField) -> Result<f64> {
        let mut term1 = 0.0;
        let mut term2 = 0.0;
        for (idx, node) in self.nodes.iter().enumerate() {
            let geom = node_geom(self.spacetime, node, q)?;
            if geom.h_pair.abs() < 1e-10 {
                return Err(GeomError::VanishingExpansion {
                    node: idx,
                    value: geom.h_pair,
                });
            }
            term1 += geom.weight * geom.xi_pair / geom.h_pair;
            term2 += geom.weight * geom.q_pair;
        }
        Ok(2.0 * term1 - 0.5 * term2)
    }

    /// Max shear of the incoming congruence over the interior nodes.
    pub fn shear_diagnostic(&self, q: &TwoFormField) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for node in &self.nodes {
            let geom = node_geom(self.spacetime, node, q)?;
            worst = worst.max(shear_norm(&geom.sigma, &geom.sigma_inv, &geom.chibar));
        }
        Ok(worst)
    }

    pub fn max_x0(&self) -> f64 {
        self.nodes
            .iter()
            .chain(self.boundary.iter())
            .map(|n| n.x.v[0].abs())
            .fold(0.0, f64::max)
    }

    fn record(&self, q: &TwoFormField, boundary_residual: f64) -> Result<FlowRecord> {
        let orthogonality = match &self.support {
            Some(sup) => self
                .boundary
                .iter()
                .map(|b| boundary_orthogonality(self.spacetime, b, sup))
                .fold(0.0, f64::max),
            None => 0.0,
        };
        Ok(FlowRecord {
            s: self.s,
            f_value: self.f_value(q)?,
            max_x0: self.max_x0(),
            shear: self.shear_diagnostic(q)?,
            boundary_residual,
            orthogonality,
        })
    }
}

/// Advance the state by one step. Returns the new state and the
/// pre-projection boundary drift.
pub fn step_flow(
    state: &FlowState,
    q: &TwoFormField,
    config: &FlowConfig,
) -> Result<(FlowState, f64)> {
    config.validate()?;
    let id = state.spacetime;
    // positivity precondition and phi determination
    let mut mean_quotient = 0.0;
    let mut wsum = 0.0;
    for (idx, node) in state.nodes.iter().enumerate() {
        let geom = node_geom(id, node, q)?;
        if geom.h_pair <= 0.0 {
            return Err(GeomError::NonPositiveExpansion {
                node: idx,
                value: geom.h_pair,
            });
        }
        mean_quotient += geom.weight * geom.xi_pair / geom.h_pair;
        wsum += geom.weight;
    }
    let phi = match config.phi_mode {
        PhiMode::ConstantOne => config.phi_scale,
        PhiMode::XiOverH => {
            let phi = config.phi_scale * mean_quotient / wsum;
            if phi <= 0.0 {
                return Err(GeomError::BadParameter {
                    reason: format!("flow speed must be positive, got {phi}"),
                });
            }
            phi
        }
    };

    let mut next = state.clone();
    next.s += config.step;
    for node in next.nodes.iter_mut() {
        *node = rk4_node(id, node, phi, config.step);
        ChartPoint::new(id, node.x.v)?;
    }
    let mut drift: f64 = 0.0;
    for node in next.boundary.iter_mut() {
        *node = rk4_node(id, node, phi, config.step);
        if let Some(sup) = &next.support {
            let psi = sup.defining(id, &node.x.v);
            drift = drift.max(psi.abs());
            node.x = project_to_support(id, sup, &node.x);
        }
        ChartPoint::new(id, node.x.v)?;
    }
    Ok((next, drift))
}

/// Run the flow from an analytic initial surface, recording the trace.
pub fn run_flow(
    surface: &ParamSurface,
    q: &TwoFormField,
    config: &FlowConfig,
    order: usize,
) -> Result<FlowTrace> {
    run_flow_state(init_flow(surface, order, 1.0)?, q, config)
}

/// Run the flow from a prepared state (e.g. one built by [`transport`]).
pub fn run_flow_state(
    initial: FlowState,
    q: &TwoFormField,
    config: &FlowConfig,
) -> Result<FlowTrace> {
    config.validate()?;
    let mut state = initial;
    let mut records = vec![state.record(q, 0.0)?];
    let arrived =
        |st: &FlowState| (st.max_x0() - config.slice_time.abs()).abs() < config.slice_tolerance;
    if arrived(&state) {
        return Ok(FlowTrace {
            records,
            status: FlowStatus::SliceReached { steps: 0 },
        });
    }
    for k in 0..config.max_steps {
        match step_flow(&state, q, config) {
            Ok((next, drift)) => {
                state = next;
                records.push(state.record(q, drift)?);
                if arrived(&state) {
                    return Ok(FlowTrace {
                        records,
                        status: FlowStatus::SliceReached { steps: k + 1 },
                    });
                }
            }
            Err(e) => {
                return Ok(FlowTrace {
                    records,
                    status: FlowStatus::Failed {
                        step: k,
                        message: e.to_string(),
                    },
                });
            }
        }
    }
    Ok(FlowTrace {
        records,
        status: FlowStatus::MaxSteps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{composite_q, default_l};
    use crate::surface::CapProfile;

    fn mink_cap(profile: CapProfile) -> ParamSurface {
        ParamSurface::cap(
            SpacetimeId::Minkowski,
            0.75,
            3,
            profile,
            SupportSurface::DeSitterSphere,
            0.0,
        )
    }

    /// Slice configuration carried backward along its own generators.
    fn past_state(surface: &ParamSurface, order: usize, s0: f64, n: usize) -> FlowState {
        let state = init_flow(surface, order, 1.0).unwrap();
        transport(&state, -s0, n).unwrap()
    }

    #[test]
    fn flat_flow_is_exact_transport() {
        let s = ParamSurface::sphere(SpacetimeId::Minkowski, 1.0, [0.0; 3], 0.0);
        let q = composite_q(SpacetimeId::Minkowski, 3, 1.0);
        let state0 = init_flow(&s, 8, 1.0).unwrap();
        let cfg = FlowConfig {
            step: 0.05,
            ..Default::default()
        };
        let mut state = state0.clone();
        for _ in 0..4 {
            state = step_flow(&state, &q, &cfg).unwrap().0;
        }
        let s_total = 0.2;
        for (n0, n1) in state0.nodes.iter().zip(&state.nodes) {
            for mu in 0..4 {
                let expect = n0.x.v[mu] + s_total * n0.lbar.v[mu];
                assert!(
                    (n1.x.v[mu] - expect).abs() < 1e-14,
                    "exact transport violated: {} vs {expect}",
                    n1.x.v[mu]
                );
            }
        }
        // spheres shrink at unit rate and move forward in time
        let r0 = 1.0;
        for n in &state.nodes {
            let x = n.x.v;
            let r = (x[1] * x[1] + x[2] * x[2] + x[3] * x[3]).sqrt();
            assert!((r - (r0 - s_total)).abs() < 1e-13);
            assert!((x[0] - s_total).abs() < 1e-13);
        }
    }

    #[test]
    fn backward_transport_keeps_boundary_on_support() {
        // boundary generators run inside the support, in the flat and the
        // curved models alike
        for id in SpacetimeId::ALL {
            let l = default_l(id);
            let sup = SupportSurface::for_spacetime(id, l).unwrap();
            let rho = 0.5 * sup.slice_radius(id);
            let cap = ParamSurface::cap(id, rho, 1, CapProfile::Round, sup, 0.0);
            let state = past_state(&cap, 8, 0.1, 10);
            for b in &state.boundary {
                let psi = sup.defining(id, &b.x.v);
                assert!(psi.abs() < 1e-12, "{id:?}: psi = {psi}");
                assert!(b.x.v[0] < -1e-3, "{id:?}: boundary should sit in the past");
            }
        }
    }

    #[test]
    fn slice_arrival_detection() {
        let cap = mink_cap(CapProfile::Round);
        let q = composite_q(SpacetimeId::Minkowski, 3, 1.0);
        let cfg = FlowConfig {
            step: 0.01,
            max_steps: 100,
            ..Default::default()
        };
        let state = past_state(&cap, 8, 0.25, 25);
        let trace = run_flow_state(state, &q, &cfg).unwrap();
        assert_eq!(trace.status, FlowStatus::SliceReached { steps: 25 });
        let last = trace.records.last().unwrap();
        assert!(last.max_x0 < 1e-6);
        // an already-arrived surface records a single step
        let trace0 = run_flow(&cap, &q, &cfg, 8).unwrap();
        assert_eq!(trace0.status, FlowStatus::SliceReached { steps: 0 });
        assert_eq!(trace0.records.len(), 1);
    }

    #[test]
    fn round_cap_flow_is_shear_free_with_constant_f() {
        let cap = mink_cap(CapProfile::Round);
        let q = composite_q(SpacetimeId::Minkowski, 3, 1.0);
        let cfg = FlowConfig {
            step: 1e-2,
            max_steps: 40,
            slice_tolerance: 1e-9,
            ..Default::default()
        };
        let state = past_state(&cap, 16, 0.2, 20);
        let trace = run_flow_state(state, &q, &cfg).unwrap();
        assert_eq!(trace.status, FlowStatus::SliceReached { steps: 20 });
        let f0 = trace.records[0].f_value;
        for r in &trace.records {
            assert!(r.shear < 1e-8, "shear {}", r.shear);
            assert!((r.f_value - f0).abs() < 1e-6, "drift {}", r.f_value - f0);
            assert!(r.boundary_residual < 1e-8, "drift {}", r.boundary_residual);
            // orthogonality is recorded, not enforced; the projected rim
            // stays close to the constraint
            assert!(r.orthogonality < 1e-3, "orthogonality {}", r.orthogonality);
        }
        assert!(f0.abs() < 1e-6, "round-cap functional {f0}");
    }

    #[test]
    fn monotone_decrease_on_perturbed_cap() {
        let cap = mink_cap(CapProfile::Angular { eps: 0.05 });
        let q = composite_q(SpacetimeId::Minkowski, 3, 1.0);
        let cfg = FlowConfig {
            step: 1e-2,
            max_steps: 40,
            slice_tolerance: 1e-9,
            ..Default::default()
        };
        let state = past_state(&cap, 16, 0.2, 20);
        let trace = run_flow_state(state, &q, &cfg).unwrap();
        assert_eq!(trace.status, FlowStatus::SliceReached { steps: 20 });
        for w in trace.records.windows(2) {
            assert!(
                w[1].f_value <= w[0].f_value + 1e-9,
                "functional increased: {} -> {}",
                w[0].f_value,
                w[1].f_value
            );
        }
        assert!(trace.records.last().unwrap().f_value > 1e-4);
    }

    #[test]
    fn gauge_robustness_of_the_trajectory() {
        let cap = mink_cap(CapProfile::Angular { eps: 0.05 });
        let q = composite_q(SpacetimeId::Minkowski, 3, 1.0);
        let a = 3.0;
        let cfg1 = FlowConfig {
            step: 1e-2,
            ..Default::default()
        };
        let cfg2 = FlowConfig {
            step: 1e-2,
            phi_scale: 1.0 / a,
            ..Default::default()
        };
        let base = past_state(&cap, 6, 0.15, 15);
        let mut st1 = base.clone();
        // rescale the transported normal in place for the second run
        let mut st2 = base;
        for node in st2.nodes.iter_mut().chain(st2.boundary.iter_mut()) {
            node.lbar = JetVec::default().axpy(a, &node.lbar);
        }
        for _ in 0..10 {
            st1 = step_flow(&st1, &q, &cfg1).unwrap().0;
            st2 = step_flow(&st2, &q, &cfg2).unwrap().0;
        }
        for (n1, n2) in st1.nodes.iter().zip(&st2.nodes) {
            for mu in 0..4 {
                assert!(
                    (n1.x.v[mu] - n2.x.v[mu]).abs() < 1e-12,
                    "trajectory depends on the gauge"
                );
            }
        }
        let f1 = st1.f_value(&q).unwrap();
        let f2 = st2.f_value(&q).unwrap();
        assert!((f1 - f2).abs() < 1e-10, "{f1} vs {f2}");
    }

    #[test]
    fn integrator_is_fourth_order_in_curved_charts() {
        // closed sphere in the ds slice: no boundary projection interferes
        // with the order measurement
        let id = SpacetimeId::DeSitter;
        let l = default_l(id);
        let s = ParamSurface::sphere(id, 0.25, [0.0; 3], 0.0);
        let q = composite_q(id, 1, l);
        let total = 0.08;
        let run_to = |h: f64| -> Vec<[f64; 4]> {
            let cfg = FlowConfig {
                step: h,
                ..Default::default()
            };
            let mut st = init_flow(&s, 4, 1.0).unwrap();
            let n = (total / h).round() as usize;
            for _ in 0..n {
                st = step_flow(&st, &q, &cfg).unwrap().0;
            }
            st.nodes.iter().map(|n| n.x.v).collect()
        };
        let reference = run_to(1.25e-3);
        let err = |sol: &[[f64; 4]]| -> f64 {
            sol.iter()
                .zip(&reference)
                .flat_map(|(a, b)| (0..4).map(move |m| (a[m] - b[m]).abs()))
                .fold(0.0, f64::max)
        };
        let e1 = err(&run_to(1e-2));
        let e2 = err(&run_to(5e-3));
        let ratio = e1 / e2;
        assert!(
            (8.0..40.0).contains(&ratio),
            "order ratio {ratio} (errors {e1:.3e}, {e2:.3e})"
        );
    }

    #[test]
    fn flow_reports_nonpositive_expansion() {
        let mut s = mink_cap(CapProfile::Round);
        s.flip_orientation = true;
        let q = composite_q(SpacetimeId::Minkowski, 3, 1.0);
        let cfg = FlowConfig::default();
        let state = past_state(&s, 6, 0.1, 10);
        let trace = run_flow_state(state, &q, &cfg).unwrap();
        match trace.status {
            FlowStatus::Failed { step: 0, .. } => {}
            other => panic!("expected early failure, got {other:?}"),
        }
    }

    #[test]
    fn xi_over_h_mode_runs_and_decreases() {
        let cap = mink_cap(CapProfile::Angular { eps: 0.05 });
        let q = composite_q(SpacetimeId::Minkowski, 3, 1.0);
        let cfg = FlowConfig {
            phi_mode: PhiMode::XiOverH,
            step: 2e-2,
            max_steps: 10,
            ..Default::default()
        };
        let state = past_state(&cap, 10, 0.15, 15);
        let trace = run_flow_state(state, &q, &cfg).unwrap();
        assert!(matches!(
            trace.status,
            FlowStatus::MaxSteps | FlowStatus::SliceReached { .. }
        ));
        for w in trace.records.windows(2) {
            assert!(w[1].f_value <= w[0].f_value + 1e-9);
        }
    }
}
