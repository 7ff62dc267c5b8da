//! Pointwise and field-level calculus of 1- and 2-forms.
//!
//! A 2-form `Q` is conformal Killing-Yano when, for all vectors X, Y, Z,
//!
//! ```text
//! (nabla_X Q)(Y,Z) + (nabla_Y Q)(X,Z)
//!     = 2<X,Y><xi,Z> - <X,Z><xi,Y> - <Y,Z><xi,X>,      xi = (1/3) div Q,
//! ```
//!
//! with `<xi, Z>` the natural pairing of the associated 1-form with a
//! vector. Fields are stored as closed-form expressions so that they can
//! be evaluated on dual numbers of any nesting depth; all derivatives of a
//! field come from dual propagation through its expression.
//!
//! Conventions, fixed once and validated by the test suite:
//! - wedge without a 1/2: `(a^b)(X,Y) = a(X)b(Y) - a(Y)b(X)`;
//! - divergence contracts the first slot: `(div Q)_nu = g^{mu lam} (nabla_mu Q)_{lam nu}`;
//! - Hodge star `(*F)_{mu nu} = 1/2 sqrt|g| eps_{mu nu rho sig} F^{rho sig}`
//!   with `eps_{0123} = +1` in chart coordinate order.

use crate::chart::{
    christoffel_at, embed_components, frame_at, metric_at, metric_components, ChartPoint,
    SpacetimeId,
};
use crate::dual::{c, lift, Real, D1};
use crate::tensor;

/// Index pairs `(mu, nu)` with `mu < nu`, the storage order of
/// [`TwoFormValue`].
pub const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

fn pair_index(mu: usize, nu: usize) -> Option<(usize, f64)> {
    if mu == nu {
        return None;
    }
    let (a, b, s) = if mu < nu {
        (mu, nu, 1.0)
    } else {
        (nu, mu, -1.0)
    };
    let k = PAIRS.iter().position(|&(i, j)| (i, j) == (a, b)).unwrap();
    Some((k, s))
}

/// Antisymmetric 2-tensor storing only the six independent components, so
/// `Q_{mu nu} = -Q_{nu mu}` holds exactly by construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoFormValue<T> {
    pub comp: [T; 6],
}

impl<T: Real> TwoFormValue<T> {
    pub fn zero() -> Self {
        TwoFormValue {
            comp: [T::zero(); 6],
        }
    }

    /// Build from the strictly-upper components `f(mu, nu)`, `mu < nu`.
    pub fn from_fn(mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut comp = [T::zero(); 6];
        for (k, &(i, j)) in PAIRS.iter().enumerate() {
            comp[k] = f(i, j);
        }
        TwoFormValue { comp }
    }

    #[inline]
    pub fn get(&self, mu: usize, nu: usize) -> T {
        match pair_index(mu, nu) {
            None => T::zero(),
            Some((k, s)) => c::<T>(s) * self.comp[k],
        }
    }

    pub fn to_matrix(&self) -> [[T; 4]; 4] {
        let mut m = [[T::zero(); 4]; 4];
        for (k, &(i, j)) in PAIRS.iter().enumerate() {
            m[i][j] = self.comp[k];
            m[j][i] = -self.comp[k];
        }
        m
    }

    /// `Q(X, Y)` for vectors.
    pub fn apply(&self, x: &[T; 4], y: &[T; 4]) -> T {
        let mut s = T::zero();
        for (k, &(i, j)) in PAIRS.iter().enumerate() {
            s = s + self.comp[k] * (x[i] * y[j] - x[j] * y[i]);
        }
        s
    }

    /// Interior product `(i_X Q)_nu = X^mu Q_{mu nu}`.
    pub fn contract_first(&self, x: &[T; 4]) -> [T; 4] {
        let mut out = [T::zero(); 4];
        for (nu, o) in out.iter_mut().enumerate() {
            let mut s = T::zero();
            for mu in 0..4 {
                s = s + x[mu] * self.get(mu, nu);
            }
            *o = s;
        }
        out
    }

    pub fn scale(&self, s: T) -> Self {
        TwoFormValue {
            comp: self.comp.map(|v| s * v),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut comp = self.comp;
        for k in 0..6 {
            comp[k] = comp[k] + other.comp[k];
        }
        TwoFormValue { comp }
    }
}

/// `alpha ^ beta` from covector components.
pub fn wedge<T: Real>(alpha: &[T; 4], beta: &[T; 4]) -> TwoFormValue<T> {
    TwoFormValue::from_fn(|i, j| alpha[i] * beta[j] - alpha[j] * beta[i])
}

fn eps4(p: [usize; 4]) -> f64 {
    let mut sign = 1.0;
    let mut v = p;
    for i in 0..4 {
        for j in (i + 1)..4 {
            if v[i] == v[j] {
                return 0.0;
            }
            if v[i] > v[j] {
                v.swap(i, j);
                sign = -sign;
            }
        }
    }
    sign
}

/// Hodge star of a 2-form given the covariant metric at the point.
pub fn star_components<T: Real>(g: &[[T; 4]; 4], f: &TwoFormValue<T>) -> TwoFormValue<T> {
    let g_inv = tensor::invert(g).expect("nondegenerate metric");
    let sqrt_det = (-tensor::det(g)).sqrt();
    let fup = TwoFormValue::from_fn(|r, s| {
        let mut v = T::zero();
        for a in 0..4 {
            for b in 0..4 {
                v = v + g_inv[r][a] * g_inv[s][b] * f.get(a, b);
            }
        }
        v
    });
    TwoFormValue::from_fn(|mu, nu| {
        let mut v = T::zero();
        // summing ordered pairs (rho < sigma) absorbs the 1/2
        for &(r, s) in PAIRS.iter() {
            let e = eps4([mu, nu, r, s]);
            if e != 0.0 {
                v = v + c::<T>(e) * fup.get(r, s);
            }
        }
        sqrt_det * v
    })
}

/// Scalar coefficient functions appearing in the catalogs.
#[derive(Clone, Copy, Debug)]
pub enum Coefficient {
    Const(f64),
    /// `a + b <x, x>` with the Minkowski norm of the position.
    LorentzNormAffine { a: f64, b: f64 },
    /// A chart coordinate, for ad-hoc test fields.
    Coord(usize),
}

fn eval_coeff<T: Real>(cf: &Coefficient, x: &[T; 4]) -> T {
    match *cf {
        Coefficient::Const(a) => c(a),
        Coefficient::LorentzNormAffine { a, b } => {
            let u = -(x[0] * x[0]) + x[1] * x[1] + x[2] * x[2] + x[3] * x[3];
            c::<T>(a) + c::<T>(b) * u
        }
        Coefficient::Coord(i) => x[i],
    }
}

/// Closed-form 1-form constructors.
#[derive(Clone, Copy, Debug)]
pub enum OneFormExpr {
    /// `dx^mu`
    CoordDiff(usize),
    /// Lowered coordinate differential `dx_mu` (flat); `dx_0 = -dx^0`.
    FlatLowered(usize),
    /// Position 1-form `x_mu dx^mu` (flat).
    FlatPosition,
    /// Boost/rotation 1-form `x_mu dx_nu - x_nu dx_mu` (flat).
    FlatRotation(usize, usize),
    /// Differential `dy^mu` of an ambient coordinate (ds/ads).
    AmbientDiff(usize),
    /// Killing 1-form `y^mu dy^nu - y^nu dy^mu` (ds/ads).
    AmbientRotation(usize, usize),
}

const ETA: [f64; 4] = [-1.0, 1.0, 1.0, 1.0];

pub fn eval_one_form<T: Real>(expr: &OneFormExpr, id: SpacetimeId, x: &[T; 4]) -> [T; 4] {
    let mut out = [T::zero(); 4];
    match *expr {
        OneFormExpr::CoordDiff(mu) => out[mu] = T::one(),
        OneFormExpr::FlatLowered(mu) => out[mu] = c(ETA[mu]),
        OneFormExpr::FlatPosition => {
            for (nu, o) in out.iter_mut().enumerate() {
                *o = c::<T>(ETA[nu]) * x[nu];
            }
        }
        OneFormExpr::FlatRotation(a, b) => {
            let xa = c::<T>(ETA[a]) * x[a];
            let xb = c::<T>(ETA[b]) * x[b];
            out[a] = -(xb * c::<T>(ETA[a]));
            out[b] = xa * c::<T>(ETA[b]);
        }
        OneFormExpr::AmbientDiff(mu) => {
            let seeds = lift(*x);
            let y =
                embed_components(id, &seeds).expect("ambient differentials require a curved model");
            for (nu, o) in out.iter_mut().enumerate() {
                *o = y[mu].eps[nu];
            }
        }
        OneFormExpr::AmbientRotation(a, b) => {
            let seeds = lift(*x);
            let y =
                embed_components(id, &seeds).expect("ambient rotations require a curved model");
            for (nu, o) in out.iter_mut().enumerate() {
                *o = y[a].re * y[b].eps[nu] - y[b].re * y[a].eps[nu];
            }
        }
    }
    out
}

/// Closed-form 2-form expressions.
#[derive(Clone, Debug)]
pub enum TwoFormExpr {
    Wedge(OneFormExpr, OneFormExpr),
    Star(Box<TwoFormExpr>),
    Scaled(Coefficient, Box<TwoFormExpr>),
    Sum(Vec<TwoFormExpr>),
}

pub fn eval_two_form<T: Real>(expr: &TwoFormExpr, id: SpacetimeId, x: &[T; 4]) -> TwoFormValue<T> {
    match expr {
        TwoFormExpr::Wedge(a, b) => {
            let av = eval_one_form(a, id, x);
            let bv = eval_one_form(b, id, x);
            wedge(&av, &bv)
        }
        TwoFormExpr::Star(f) => {
            let fv = eval_two_form(f, id, x);
            let g = metric_components(id, x);
            star_components(&g, &fv)
        }
        TwoFormExpr::Scaled(cf, f) => {
            let fv = eval_two_form(f, id, x);
            fv.scale(eval_coeff(cf, x))
        }
        TwoFormExpr::Sum(terms) => {
            let mut acc = TwoFormValue::zero();
            for t in terms {
                acc = acc.add(&eval_two_form(t, id, x));
            }
            acc
        }
    }
}

/// A named smooth 2-form field on one spacetime.
#[derive(Clone, Debug)]
pub struct TwoFormField {
    pub name: String,
    pub spacetime: SpacetimeId,
    pub expr: TwoFormExpr,
}

impl TwoFormField {
    pub fn new(name: impl Into<String>, spacetime: SpacetimeId, expr: TwoFormExpr) -> Self {
        TwoFormField {
            name: name.into(),
            spacetime,
            expr,
        }
    }

    pub fn value(&self, p: &ChartPoint) -> TwoFormValue<f64> {
        debug_assert_eq!(p.spacetime(), self.spacetime);
        eval_two_form(&self.expr, self.spacetime, &p.coords())
    }

    pub fn value_at<T: Real>(&self, x: &[T; 4]) -> TwoFormValue<T> {
        eval_two_form(&self.expr, self.spacetime, x)
    }
}

/// A named smooth 1-form field, stored as a linear combination of
/// closed-form constructors.
#[derive(Clone, Debug)]
pub struct OneFormField {
    pub name: String,
    pub spacetime: SpacetimeId,
    pub terms: Vec<(f64, OneFormExpr)>,
}

impl OneFormField {
    pub fn zero(spacetime: SpacetimeId) -> Self {
        OneFormField {
            name: "0".into(),
            spacetime,
            terms: Vec::new(),
        }
    }

    pub fn value(&self, p: &ChartPoint) -> [f64; 4] {
        let x = p.coords();
        let mut out = [0.0; 4];
        for (coef, e) in &self.terms {
            let v = eval_one_form(e, self.spacetime, &x);
            for nu in 0..4 {
                out[nu] += coef * v[nu];
            }
        }
        out
    }
}

/// Value and coordinate gradient of a 2-form field, by dual propagation.
/// Returns `(Q, dQ)` with `dQ[lambda].get(mu,nu) = d_lambda Q_{mu nu}`.
pub fn two_form_jet(
    q: &TwoFormField,
    p: &ChartPoint,
) -> (TwoFormValue<f64>, [TwoFormValue<f64>; 4]) {
    let seeds: [D1<4>; 4] = lift(p.coords());
    let qd = eval_two_form(&q.expr, q.spacetime, &seeds);
    let value = TwoFormValue {
        comp: qd.comp.map(|d| d.re),
    };
    let mut grad = [TwoFormValue::zero(); 4];
    for (lam, g) in grad.iter_mut().enumerate() {
        *g = TwoFormValue {
            comp: qd.comp.map(|d| d.eps[lam]),
        };
    }
    (value, grad)
}

/// Covariant derivatives `(nabla_lambda Q)` for all four coordinate
/// directions.
pub fn nabla_2form(q: &TwoFormField, p: &ChartPoint) -> [TwoFormValue<f64>; 4] {
    let (qv, dq) = two_form_jet(q, p);
    let gamma = christoffel_at(p).gamma;
    let mut out = [TwoFormValue::zero(); 4];
    for (lam, o) in out.iter_mut().enumerate() {
        *o = TwoFormValue::from_fn(|mu, nu| {
            let mut v = dq[lam].get(mu, nu);
            for rho in 0..4 {
                v -= gamma[rho][lam][mu] * qv.get(rho, nu) + gamma[rho][lam][nu] * qv.get(mu, rho);
            }
            v
        });
    }
    out
}

/// `(nabla_X Q)` at a point for a tangent vector `X`.
pub fn covariant_derivative_2form(
    q: &TwoFormField,
    p: &ChartPoint,
    x_vec: &[f64; 4],
) -> TwoFormValue<f64> {
    let nabla = nabla_2form(q, p);
    let mut acc = TwoFormValue::zero();
    for lam in 0..4 {
        acc = acc.add(&nabla[lam].scale(x_vec[lam]));
    }
    acc
}

/// `(div Q)_nu = g^{mu lambda} (nabla_mu Q)_{lambda nu}`.
pub fn divergence_2form(q: &TwoFormField, p: &ChartPoint) -> [f64; 4] {
    let nabla = nabla_2form(q, p);
    let g_inv = metric_at(p).g_inv;
    let mut out = [0.0; 4];
    for (nu, o) in out.iter_mut().enumerate() {
        let mut s = 0.0;
        for mu in 0..4 {
            for lam in 0..4 {
                s += g_inv[mu][lam] * nabla[mu].get(lam, nu);
            }
        }
        *o = s;
    }
    out
}

/// The associated 1-form `xi = (1/n) div Q` with `n = 3`.
pub fn associated_xi(q: &TwoFormField, p: &ChartPoint) -> [f64; 4] {
    let d = divergence_2form(q, p);
    d.map(|v| v / 3.0)
}

/// Hodge star of raw antisymmetric components at a point.
pub fn hodge_star_2form(f: &TwoFormValue<f64>, p: &ChartPoint) -> TwoFormValue<f64> {
    star_components(&metric_at(p).g, f)
}

/// Max deviation from the conformal Killing-Yano identity over all triples
/// of the chart orthonormal frame.
pub fn cky_residual(q: &TwoFormField, p: &ChartPoint) -> f64 {
    cky_residual_with_frame(q, p, &frame_at(p).e)
}

/// Same residual evaluated on a caller-supplied frame (the identity is
/// tensorial, so any well-conditioned frame sees a comparable residual).
pub fn cky_residual_with_frame(q: &TwoFormField, p: &ChartPoint, frame: &[[f64; 4]; 4]) -> f64 {
    let nabla = nabla_2form(q, p);
    let xi = associated_xi(q, p);
    let g = metric_at(p).g;
    let mut nq = [[[0.0; 4]; 4]; 4]; // nq[lam][b][c] = (nabla_lam Q)(e_b, e_c)
    let mut gf = [[0.0; 4]; 4];
    let mut xif = [0.0; 4];
    for a in 0..4 {
        xif[a] = tensor::pair(&xi, &frame[a]);
        for b in 0..4 {
            gf[a][b] = tensor::inner(&g, &frame[a], &frame[b]);
        }
    }
    for lam in 0..4 {
        for b in 0..4 {
            for cc in 0..4 {
                nq[lam][b][cc] = nabla[lam].apply(&frame[b], &frame[cc]);
            }
        }
    }
    let mut worst: f64 = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            for z in 0..4 {
                let mut lhs = 0.0;
                for lam in 0..4 {
                    lhs += frame[a][lam] * nq[lam][b][z] + frame[b][lam] * nq[lam][a][z];
                }
                let rhs = 2.0 * gf[a][b] * xif[z] - gf[a][z] * xif[b] - gf[b][z] * xif[a];
                worst = worst.max((lhs - rhs).abs());
            }
        }
    }
    worst
}

/// A catalog entry: the form, and its associated 1-form when the model
/// pins it in closed form.
#[derive(Clone, Debug)]
pub struct CkyCatalogEntry {
    pub form: TwoFormField,
    pub expected_xi: Option<OneFormField>,
    pub spacetime: SpacetimeId,
    pub name: String,
}

/// Default composite parameter: support distance d = 1 for ads
/// (`l = cosh d`), d = 1/2 for ds (`l = cos d`).
pub fn default_l(id: SpacetimeId) -> f64 {
    match id {
        SpacetimeId::Minkowski => 1.0,
        SpacetimeId::AntiDeSitter => 1.0f64.cosh(),
        SpacetimeId::DeSitter => 0.5f64.cos(),
    }
}

/// The composite 2-form used by the free-boundary machinery, with its
/// direction index `i` in `{1,2,3}` and support parameter `l`.
///
/// - minkowski: `D ^ L_{0i} + 1/2 (1 + <x,x>) dx^0 ^ dx^i`
/// - ads:       `dy^i ^ dy^4 + l * star(dy^j ^ dy^k)`, `(i,j,k)` cyclic
/// - ds:        `dy^4 ^ dy^i + l * star(dy^k ^ dy^j)`
pub fn composite_q(id: SpacetimeId, i: usize, l: f64) -> TwoFormField {
    assert!((1..=3).contains(&i), "direction index must be 1, 2, or 3");
    let (j, k) = match i {
        1 => (2, 3),
        2 => (3, 1),
        _ => (1, 2),
    };
    match id {
        SpacetimeId::Minkowski => TwoFormField::new(
            format!("Q[mink,{i}]"),
            id,
            TwoFormExpr::Sum(vec![
                TwoFormExpr::Wedge(OneFormExpr::FlatPosition, OneFormExpr::FlatRotation(0, i)),
                TwoFormExpr::Scaled(
                    Coefficient::LorentzNormAffine { a: 0.5, b: 0.5 },
                    Box::new(TwoFormExpr::Wedge(
                        OneFormExpr::CoordDiff(0),
                        OneFormExpr::CoordDiff(i),
                    )),
                ),
            ]),
        ),
        SpacetimeId::AntiDeSitter => TwoFormField::new(
            format!("Q[ads,{i},l={l}]"),
            id,
            TwoFormExpr::Sum(vec![
                TwoFormExpr::Wedge(OneFormExpr::AmbientDiff(i), OneFormExpr::AmbientDiff(4)),
                TwoFormExpr::Scaled(
                    Coefficient::Const(l),
                    Box::new(TwoFormExpr::Star(Box::new(TwoFormExpr::Wedge(
                        OneFormExpr::AmbientDiff(j),
                        OneFormExpr::AmbientDiff(k),
                    )))),
                ),
            ]),
        ),
        SpacetimeId::DeSitter => TwoFormField::new(
            format!("Q[ds,{i},l={l}]"),
            id,
            TwoFormExpr::Sum(vec![
                TwoFormExpr::Wedge(OneFormExpr::AmbientDiff(4), OneFormExpr::AmbientDiff(i)),
                TwoFormExpr::Scaled(
                    Coefficient::Const(l),
                    Box::new(TwoFormExpr::Star(Box::new(TwoFormExpr::Wedge(
                        OneFormExpr::AmbientDiff(k),
                        OneFormExpr::AmbientDiff(j),
                    )))),
                ),
            ]),
        ),
    }
}

/// The catalog of conformal Killing-Yano 2-forms of a model, plus the
/// composite forms at the default `l`. Admission (residual below 1e-9 at
/// seeded random points) is enforced by the test suite.
pub fn catalog(id: SpacetimeId) -> Vec<CkyCatalogEntry> {
    let mut out: Vec<CkyCatalogEntry> = Vec::new();
    let mut push = |name: String, expr: TwoFormExpr, xi: Option<Vec<(f64, OneFormExpr)>>| {
        out.push(CkyCatalogEntry {
            form: TwoFormField::new(name.clone(), id, expr),
            expected_xi: xi.map(|terms| OneFormField {
                name: format!("xi({name})"),
                spacetime: id,
                terms,
            }),
            spacetime: id,
            name,
        });
    };

    match id {
        SpacetimeId::Minkowski => {
            // T_mu ^ T_nu: parallel, xi = 0
            for &(a, b) in PAIRS.iter() {
                push(
                    format!("T{a}^T{b}"),
                    TwoFormExpr::Wedge(OneFormExpr::FlatLowered(a), OneFormExpr::FlatLowered(b)),
                    Some(vec![]),
                );
            }
            // D ^ T_mu: xi = T_mu
            for mu in 0..4 {
                push(
                    format!("D^T{mu}"),
                    TwoFormExpr::Wedge(OneFormExpr::FlatPosition, OneFormExpr::FlatLowered(mu)),
                    Some(vec![(1.0, OneFormExpr::FlatLowered(mu))]),
                );
            }
            // star(D ^ T_mu): closed, hence divergence-free
            for mu in 0..4 {
                push(
                    format!("*(D^T{mu})"),
                    TwoFormExpr::Star(Box::new(TwoFormExpr::Wedge(
                        OneFormExpr::FlatPosition,
                        OneFormExpr::FlatLowered(mu),
                    ))),
                    Some(vec![]),
                );
            }
            // D ^ L_{mu nu} - 1/2 <x,x> T_mu ^ T_nu: xi = L_{mu nu}
            for &(a, b) in PAIRS.iter() {
                push(
                    format!("D^L{a}{b}"),
                    TwoFormExpr::Sum(vec![
                        TwoFormExpr::Wedge(
                            OneFormExpr::FlatPosition,
                            OneFormExpr::FlatRotation(a, b),
                        ),
                        TwoFormExpr::Scaled(
                            Coefficient::LorentzNormAffine { a: 0.0, b: -0.5 },
                            Box::new(TwoFormExpr::Wedge(
                                OneFormExpr::FlatLowered(a),
                                OneFormExpr::FlatLowered(b),
                            )),
                        ),
                    ]),
                    Some(vec![(1.0, OneFormExpr::FlatRotation(a, b))]),
                );
            }
            // the free-boundary composites (same xi, shifted by a parallel form)
            for i in 1..4 {
                let q = composite_q(id, i, 1.0);
                out.push(CkyCatalogEntry {
                    name: q.name.clone(),
                    expected_xi: Some(OneFormField {
                        name: format!("xi({})", q.name),
                        spacetime: id,
                        terms: vec![(1.0, OneFormExpr::FlatRotation(0, i))],
                    }),
                    spacetime: id,
                    form: q,
                });
            }
        }
        SpacetimeId::AntiDeSitter | SpacetimeId::DeSitter => {
            let sgn = if id == SpacetimeId::AntiDeSitter {
                1.0
            } else {
                -1.0
            };
            for a in 0..5usize {
                for b in (a + 1)..5 {
                    // div(dy^i ^ dy^4) = +/- 3 (y^i dy^4 - y^4 dy^i)
                    let xi = if b == 4 && (1..=3).contains(&a) {
                        Some(vec![(sgn, OneFormExpr::AmbientRotation(a, 4))])
                    } else {
                        None
                    };
                    push(
                        format!("dy{a}^dy{b}"),
                        TwoFormExpr::Wedge(
                            OneFormExpr::AmbientDiff(a),
                            OneFormExpr::AmbientDiff(b),
                        ),
                        xi,
                    );
                    push(
                        format!("*(dy{a}^dy{b})"),
                        TwoFormExpr::Star(Box::new(TwoFormExpr::Wedge(
                            OneFormExpr::AmbientDiff(a),
                            OneFormExpr::AmbientDiff(b),
                        ))),
                        Some(vec![]),
                    );
                }
            }
            let q = composite_q(id, 1, default_l(id));
            out.push(CkyCatalogEntry {
                name: q.name.clone(),
                expected_xi: Some(OneFormField {
                    name: format!("xi({})", q.name),
                    spacetime: id,
                    terms: vec![(1.0, OneFormExpr::AmbientRotation(1, 4))],
                }),
                spacetime: id,
                form: q,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::{random_points, rng};
    use approx::assert_relative_eq;
    use rand::Rng;

    fn mink(co: [f64; 4]) -> ChartPoint {
        ChartPoint::new(SpacetimeId::Minkowski, co).unwrap()
    }

    #[test]
    fn parallel_form_has_zero_residual() {
        let q = TwoFormField::new(
            "dx0^dx1",
            SpacetimeId::Minkowski,
            TwoFormExpr::Wedge(OneFormExpr::CoordDiff(0), OneFormExpr::CoordDiff(1)),
        );
        for p in random_points(SpacetimeId::Minkowski, 10, 1) {
            assert!(cky_residual(&q, &p) < 1e-12);
            assert_eq!(associated_xi(&q, &p), [0.0; 4]);
            assert_eq!(
                covariant_derivative_2form(&q, &p, &[1.0, 0.0, 0.0, 0.0]),
                TwoFormValue::zero()
            );
        }
    }

    #[test]
    fn hand_expanded_covariant_derivative() {
        // nabla_{d0} (D ^ T_1) has matrix eta_{0 mu} (T1)_nu - eta_{0 nu} (T1)_mu,
        // so its only nonzero upper entry is (0,1) -> -1. For D ^ T_0 the same
        // expansion collapses to zero.
        let p = mink([1.0, 1.0, 0.0, 0.0]);
        let e0 = [1.0, 0.0, 0.0, 0.0];
        let q1 = TwoFormField::new(
            "D^T1",
            SpacetimeId::Minkowski,
            TwoFormExpr::Wedge(OneFormExpr::FlatPosition, OneFormExpr::FlatLowered(1)),
        );
        let d1 = covariant_derivative_2form(&q1, &p, &e0);
        for &(i, j) in PAIRS.iter() {
            let expect = if (i, j) == (0, 1) { -1.0 } else { 0.0 };
            assert_relative_eq!(d1.get(i, j), expect, epsilon = 1e-13);
        }
        let q0 = TwoFormField::new(
            "D^T0",
            SpacetimeId::Minkowski,
            TwoFormExpr::Wedge(OneFormExpr::FlatPosition, OneFormExpr::FlatLowered(0)),
        );
        let d0 = covariant_derivative_2form(&q0, &p, &e0);
        assert_eq!(d0, TwoFormValue::zero());
    }

    /// Finite-difference oracle: centered differences of the components
    /// plus the connection correction.
    fn nabla_fd(q: &TwoFormField, p: &ChartPoint, lam: usize, h: f64) -> TwoFormValue<f64> {
        let x = p.coords();
        let mut xp = x;
        let mut xm = x;
        xp[lam] += h;
        xm[lam] -= h;
        let qp = q.value_at(&xp);
        let qm = q.value_at(&xm);
        let qv = q.value_at(&x);
        let gamma = christoffel_at(p).gamma;
        TwoFormValue::from_fn(|mu, nu| {
            let mut v = (qp.get(mu, nu) - qm.get(mu, nu)) / (2.0 * h);
            for rho in 0..4 {
                v -= gamma[rho][lam][mu] * qv.get(rho, nu) + gamma[rho][lam][nu] * qv.get(mu, rho);
            }
            v
        })
    }

    #[test]
    fn covariant_derivative_matches_fd_oracle() {
        for id in SpacetimeId::ALL {
            let q = composite_q(id, 1, default_l(id));
            for p in random_points(id, 5, 2) {
                for lam in 0..4 {
                    let fd = nabla_fd(&q, &p, lam, 1e-5);
                    let exact = nabla_2form(&q, &p)[lam];
                    for k in 0..6 {
                        assert!(
                            (fd.comp[k] - exact.comp[k]).abs() < 1e-6,
                            "{id:?} lam={lam} comp={k}: {} vs {}",
                            fd.comp[k],
                            exact.comp[k]
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn catalog_admission_all_models() {
        for id in SpacetimeId::ALL {
            let cat = catalog(id);
            if id == SpacetimeId::Minkowski {
                assert!(cat.len() >= 20, "catalog size {}", cat.len());
            } else {
                assert_eq!(cat.len(), 21);
            }
            for entry in &cat {
                for p in random_points(id, 25, 42) {
                    let res = cky_residual(&entry.form, &p);
                    assert!(res < 1e-9, "{id:?} {}: residual {res}", entry.name);
                    if let Some(xi) = &entry.expected_xi {
                        let got = associated_xi(&entry.form, &p);
                        let want = xi.value(&p);
                        for nu in 0..4 {
                            assert!(
                                (got[nu] - want[nu]).abs() < 1e-9,
                                "{id:?} {}: xi[{nu}] {} vs {}",
                                entry.name,
                                got[nu],
                                want[nu]
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn perturbed_form_is_rejected() {
        let q = TwoFormField::new(
            "bad",
            SpacetimeId::Minkowski,
            TwoFormExpr::Sum(vec![
                TwoFormExpr::Wedge(OneFormExpr::CoordDiff(0), OneFormExpr::CoordDiff(1)),
                TwoFormExpr::Scaled(
                    Coefficient::Coord(1),
                    Box::new(TwoFormExpr::Wedge(
                        OneFormExpr::CoordDiff(2),
                        OneFormExpr::CoordDiff(3),
                    )),
                ),
            ]),
        );
        let p = mink([0.0, 1.0, 1.0, 1.0]);
        assert!(cky_residual(&q, &p) > 0.1);
    }

    #[test]
    fn divergence_of_composite_is_three_rotations() {
        // div Q = 3 L_{0i} for both the bare and the affine-shifted variant
        for i in 1..4 {
            let affine = composite_q(SpacetimeId::Minkowski, i, 1.0);
            let bare = TwoFormField::new(
                "bare",
                SpacetimeId::Minkowski,
                TwoFormExpr::Sum(vec![
                    TwoFormExpr::Wedge(OneFormExpr::FlatPosition, OneFormExpr::FlatRotation(0, i)),
                    TwoFormExpr::Scaled(
                        Coefficient::LorentzNormAffine { a: 0.0, b: 0.5 },
                        Box::new(TwoFormExpr::Wedge(
                            OneFormExpr::CoordDiff(0),
                            OneFormExpr::CoordDiff(i),
                        )),
                    ),
                ]),
            );
            let rot = OneFormField {
                name: "3L".into(),
                spacetime: SpacetimeId::Minkowski,
                terms: vec![(3.0, OneFormExpr::FlatRotation(0, i))],
            };
            for p in random_points(SpacetimeId::Minkowski, 20, 7) {
                let want = rot.value(&p);
                for q in [&affine, &bare] {
                    let got = divergence_2form(q, &p);
                    for nu in 0..4 {
                        assert!(
                            (got[nu] - want[nu]).abs() < 1e-9,
                            "i={i} nu={nu}: {} vs {}",
                            got[nu],
                            want[nu]
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn ambient_divergence_identities() {
        // div(dy^i ^ dy^4) = s 3 (y^i dy^4 - y^4 dy^i), s = +1 ads / -1 ds,
        // and div(*(dy^2 ^ dy^3)) = 0 in both models.
        for (id, s) in [
            (SpacetimeId::AntiDeSitter, 1.0),
            (SpacetimeId::DeSitter, -1.0),
        ] {
            for i in 1..4usize {
                let q = TwoFormField::new(
                    "dyi^dy4",
                    id,
                    TwoFormExpr::Wedge(OneFormExpr::AmbientDiff(i), OneFormExpr::AmbientDiff(4)),
                );
                let killing = OneFormField {
                    name: "k".into(),
                    spacetime: id,
                    terms: vec![(3.0 * s, OneFormExpr::AmbientRotation(i, 4))],
                };
                for p in random_points(id, 15, 11) {
                    let got = divergence_2form(&q, &p);
                    let want = killing.value(&p);
                    for nu in 0..4 {
                        assert!(
                            (got[nu] - want[nu]).abs() < 1e-9,
                            "{id:?} i={i} nu={nu}: {} vs {}",
                            got[nu],
                            want[nu]
                        );
                    }
                }
            }
            let dual = TwoFormField::new(
                "*(dy2^dy3)",
                id,
                TwoFormExpr::Star(Box::new(TwoFormExpr::Wedge(
                    OneFormExpr::AmbientDiff(2),
                    OneFormExpr::AmbientDiff(3),
                ))),
            );
            for p in random_points(id, 15, 13) {
                let got = divergence_2form(&dual, &p);
                for nu in 0..4 {
                    assert!(got[nu].abs() < 1e-9, "{id:?} div* [{nu}] = {}", got[nu]);
                }
            }
        }
    }

    #[test]
    fn hodge_of_timelike_wedge() {
        // *(dx^0 ^ dx^1) = -dx^2 ^ dx^3 under eps_{0123} = +1
        let p = mink([0.3, -0.2, 0.9, 0.1]);
        let x = p.coords();
        let f = wedge(
            &eval_one_form(&OneFormExpr::CoordDiff(0), SpacetimeId::Minkowski, &x),
            &eval_one_form(&OneFormExpr::CoordDiff(1), SpacetimeId::Minkowski, &x),
        );
        let s = hodge_star_2form(&f, &p);
        for &(i, j) in PAIRS.iter() {
            let expect = if (i, j) == (2, 3) { -1.0 } else { 0.0 };
            assert_relative_eq!(s.get(i, j), expect, epsilon = 1e-14);
        }
    }

    #[test]
    fn hodge_is_an_anti_involution() {
        let mut r = rng(31);
        for id in SpacetimeId::ALL {
            for p in random_points(id, 7, 37) {
                for _ in 0..3 {
                    let f = TwoFormValue {
                        comp: [(); 6].map(|_| r.random_range(-1.0..1.0)),
                    };
                    let ss = hodge_star_2form(&hodge_star_2form(&f, &p), &p);
                    for k in 0..6 {
                        assert!(
                            (ss.comp[k] + f.comp[k]).abs() < 1e-12,
                            "{id:?}: **F != -F at comp {k}"
                        );
                    }
                }
            }
        }
    }

    /// The frame-coefficient expansion of *(dy^2 ^ dy^3) (ads) and
    /// *(dy^3 ^ dy^2) (ds) at t = 0, reconstructed from frame covectors.
    fn star_expansion_reference(id: SpacetimeId, p: &ChartPoint) -> TwoFormValue<f64> {
        let fr = frame_at(p);
        let x = p.coords();
        let y = embed_components(id, &x).unwrap();
        let th = |a: usize| fr.theta[a];
        let lead = match id {
            // -th1 ^ th0 for ads, +th1 ^ th0 for ds
            SpacetimeId::AntiDeSitter => -1.0,
            SpacetimeId::DeSitter => 1.0,
            SpacetimeId::Minkowski => unreachable!(),
        };
        let mut acc = wedge(&th(1), &th(0)).scale(lead);
        let mix2 = tensor::sub(&tensor::scale(x[1], &th(2)), &tensor::scale(x[2], &th(1)));
        acc = acc.add(&wedge(&mix2, &th(0)).scale(y[2]));
        let mix3 = tensor::sub(&tensor::scale(x[1], &th(3)), &tensor::scale(x[3], &th(1)));
        acc.add(&wedge(&mix3, &th(0)).scale(y[3]))
    }

    #[test]
    fn star_dual_expansions_at_slice() {
        let mut r = rng(41);
        for id in [SpacetimeId::AntiDeSitter, SpacetimeId::DeSitter] {
            let expr = if id == SpacetimeId::AntiDeSitter {
                TwoFormExpr::Star(Box::new(TwoFormExpr::Wedge(
                    OneFormExpr::AmbientDiff(2),
                    OneFormExpr::AmbientDiff(3),
                )))
            } else {
                TwoFormExpr::Star(Box::new(TwoFormExpr::Wedge(
                    OneFormExpr::AmbientDiff(3),
                    OneFormExpr::AmbientDiff(2),
                )))
            };
            let q = TwoFormField::new("dual", id, expr);
            for _ in 0..40 {
                let rad = r.random_range(0.05..0.75f64);
                let dir = crate::sample::unit_dir(&mut r);
                let p =
                    ChartPoint::new(id, [0.0, rad * dir[0], rad * dir[1], rad * dir[2]]).unwrap();
                let got = q.value(&p);
                let want = star_expansion_reference(id, &p);
                for k in 0..6 {
                    assert!(
                        (got.comp[k] - want.comp[k]).abs() < 1e-9,
                        "{id:?} comp {k}: {} vs {}",
                        got.comp[k],
                        want.comp[k]
                    );
                }
            }
        }
    }

    #[test]
    fn residual_is_frame_robust() {
        // a genuinely non-CKY form sees residuals of the same magnitude in
        // the chart frame and in random boosted/rotated orthonormal frames
        let q = TwoFormField::new(
            "bad",
            SpacetimeId::Minkowski,
            TwoFormExpr::Scaled(
                Coefficient::Coord(1),
                Box::new(TwoFormExpr::Wedge(
                    OneFormExpr::CoordDiff(2),
                    OneFormExpr::CoordDiff(3),
                )),
            ),
        );
        let p = mink([0.4, 1.1, -0.3, 0.8]);
        let base = cky_residual(&q, &p);
        assert!(base > 1e-3);
        let mut r = rng(53);
        let g = metric_at(&p).g;
        for _ in 0..10 {
            let mut vecs = [[0.0; 4]; 4];
            vecs[0] = [1.0, 0.0, 0.0, 0.0];
            vecs[0][1] = r.random_range(-0.5..0.5);
            for v in vecs.iter_mut().skip(1) {
                for a in v.iter_mut() {
                    *a = r.random_range(-1.0..1.0);
                }
            }
            // Gram-Schmidt against the Lorentzian metric
            let mut frame = [[0.0; 4]; 4];
            let mut count = 0;
            for v in vecs.iter() {
                let mut w = *v;
                for f in frame.iter().take(count) {
                    let n = tensor::inner(&g, f, f);
                    let proj = tensor::inner(&g, &w, f) / n;
                    for a in 0..4 {
                        w[a] -= proj * f[a];
                    }
                }
                let n = tensor::inner(&g, &w, &w);
                if n.abs() < 1e-9 {
                    continue;
                }
                let s = n.abs().sqrt();
                for a in w.iter_mut() {
                    *a /= s;
                }
                frame[count] = w;
                count += 1;
            }
            assert_eq!(count, 4);
            let res = cky_residual_with_frame(&q, &p, &frame);
            let ratio = res / base;
            assert!(
                (0.1..=10.0).contains(&ratio),
                "frame changed residual by {ratio}"
            );
        }
    }

    #[test]
    fn linear_combinations_stay_cky() {
        let mut r = rng(61);
        for id in SpacetimeId::ALL {
            let cat = catalog(id);
            for _ in 0..5 {
                let i = r.random_range(0..cat.len());
                let j = r.random_range(0..cat.len());
                let a = r.random_range(-2.0..2.0);
                let b = r.random_range(-2.0..2.0);
                let q = TwoFormField::new(
                    "combo",
                    id,
                    TwoFormExpr::Sum(vec![
                        TwoFormExpr::Scaled(
                            Coefficient::Const(a),
                            Box::new(cat[i].form.expr.clone()),
                        ),
                        TwoFormExpr::Scaled(
                            Coefficient::Const(b),
                            Box::new(cat[j].form.expr.clone()),
                        ),
                    ]),
                );
                for p in random_points(id, 5, 71) {
                    assert!(cky_residual(&q, &p) < 1e-8, "{id:?} combo residual");
                }
            }
        }
    }
}
