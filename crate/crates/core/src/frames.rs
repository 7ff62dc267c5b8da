//! Null normal frames and second fundamental forms of codimension-two
//! spacelike surfaces.
//!
//! At each node the Lorentzian normal plane is spanned by a future unit
//! timelike `e0` and an outward unit spacelike `en`; the null normals are
//! `L = e0 + en` and `Lbar = e0 - en`, normalized so `<L, Lbar> = -2`.
//! The second fundamental forms follow the convention
//! `chi_ab = <D_a L, d_b>`, `chibar_ab = <D_a Lbar, d_b>`, under which the
//! mean curvature vector decomposes as
//! `H = 1/2 (tr chibar) L + 1/2 (tr chi) Lbar` and a round sphere of
//! radius `rho` in a flat slice has `<H, Lbar> = 2 / rho` with respect to
//! the outward normal.
//!
//! Frame derivatives along the surface are produced by running the whole
//! orthonormalization on parameter-seeded dual numbers; nothing is ever
//! extended off the surface.

use crate::chart::{christoffel_components, metric_components, SpacetimeId};
use crate::dual::{c, Dual, Real, D1};
use crate::error::{GeomError, Result};
use crate::surface::MeshNode;
use crate::tensor;

/// Null normal frame at a node (`f64` view).
#[derive(Clone, Copy, Debug)]
pub struct NormalFrame {
    pub e0: [f64; 4],
    pub en: [f64; 4],
    pub l: [f64; 4],
    pub lbar: [f64; 4],
}

/// Frame over generic scalars, used to differentiate the construction.
#[derive(Clone, Copy, Debug)]
pub(crate) struct FrameT<T> {
    pub e0: [T; 4],
    pub en: [T; 4],
    pub l: [T; 4],
    pub lbar: [T; 4],
}

fn normalize_spacelike<T: Real>(g: &[[T; 4]; 4], v: &[T; 4]) -> Option<[T; 4]> {
    let n2 = tensor::inner(g, v, v);
    if n2.val() <= 1e-18 {
        return None;
    }
    Some(tensor::scale(T::one() / n2.sqrt(), v))
}

/// Orthonormalize the time axis and a spacelike completion against the
/// tangent plane. The branch choices (pivot seed, orientation signs) are
/// made on primal values and applied smoothly, so dual evaluation
/// differentiates the selected branch.
pub(crate) fn frame_generic<T: Real>(
    id: SpacetimeId,
    coords: &[T; 4],
    t1: &[T; 4],
    t2: &[T; 4],
    hint: &[f64; 4],
) -> Option<FrameT<T>> {
    let g = metric_components(id, coords);
    let a1 = normalize_spacelike(&g, t1)?;
    let mut w2 = *t2;
    let p = tensor::inner(&g, &w2, &a1);
    w2 = tensor::sub(&w2, &tensor::scale(p, &a1));
    let a2 = normalize_spacelike(&g, &w2)?;

    // timelike direction: coordinate time with tangential parts removed
    let mut v = [T::zero(); 4];
    v[0] = T::one();
    for a in [&a1, &a2] {
        let p = tensor::inner(&g, &v, a);
        v = tensor::sub(&v, &tensor::scale(p, a));
    }
    let n2 = tensor::inner(&g, &v, &v);
    if n2.val() >= -1e-18 {
        return None;
    }
    let mut e0 = tensor::scale(T::one() / (-n2).sqrt(), &v);
    if e0[0].val() < 0.0 {
        e0 = tensor::scale(-T::one(), &e0);
    }

    // spacelike completion: best-conditioned spatial coordinate direction
    let mut best: Option<(f64, [T; 4])> = None;
    for k in 1..4 {
        let mut w = [T::zero(); 4];
        w[k] = T::one();
        for a in [&a1, &a2] {
            let p = tensor::inner(&g, &w, a);
            w = tensor::sub(&w, &tensor::scale(p, a));
        }
        // project out the timelike direction: w + <w, e0> e0
        let p = tensor::inner(&g, &w, &e0);
        w = tensor::add(&w, &tensor::scale(p, &e0));
        let n2 = tensor::inner(&g, &w, &w).val();
        if best.as_ref().map_or(true, |(b, _)| n2 > *b) {
            best = Some((n2, w));
        }
    }
    let (n2, w) = best?;
    if n2 <= 1e-18 {
        return None;
    }
    let mut en = normalize_spacelike(&g, &w)?;
    let hint_t = hint.map(c::<T>);
    let pairing = tensor::inner(&g, &en, &hint_t).val();
    if pairing < 0.0 {
        en = tensor::scale(-T::one(), &en);
    }

    let l = tensor::add(&e0, &en);
    let lbar = tensor::sub(&e0, &en);
    Some(FrameT { e0, en, l, lbar })
}

/// Second fundamental forms and derived normal quantities at one node.
#[derive(Clone, Copy, Debug)]
pub struct FundamentalForms {
    pub sigma: [[f64; 2]; 2],
    /// `chi_ab = <D_a L, d_b>`
    pub chi: [[f64; 2]; 2],
    /// `chibar_ab = <D_a Lbar, d_b>`
    pub chibar: [[f64; 2]; 2],
    /// Mean curvature vector (normal part of the surface Laplacian).
    pub h_vec: [f64; 4],
    /// Normal projections `(D_a Lbar)^perp`, one per tangent direction.
    pub dlbar_perp: [[f64; 4]; 2],
}

/// The null frame at a mesh node.
pub fn normal_frame(id: SpacetimeId, node: &MeshNode) -> Result<NormalFrame> {
    let coords = node.point.coords();
    let fr = frame_generic(id, &coords, &node.d[0], &node.d[1], &node.hint).ok_or(
        GeomError::NotSpacelike {
            u: node.u,
            v: node.v,
        },
    )?;
    Ok(NormalFrame {
        e0: fr.e0,
        en: fr.en,
        l: fr.l,
        lbar: fr.lbar,
    })
}

/// Frame plus fundamental forms, with frame derivatives taken along the
/// surface by dual propagation of the whole construction.
pub fn fundamental_forms(id: SpacetimeId, node: &MeshNode) -> Result<(NormalFrame, FundamentalForms)> {
    type T = D1<2>;
    // seed coordinates and tangents with their parameter dependence
    let mut coords_d = [T::zero(); 4];
    let mut t1_d = [T::zero(); 4];
    let mut t2_d = [T::zero(); 4];
    let x = node.point.coords();
    for k in 0..4 {
        coords_d[k] = Dual {
            re: x[k],
            eps: [node.d[0][k], node.d[1][k]],
        };
        t1_d[k] = Dual {
            re: node.d[0][k],
            eps: [node.dd[0][k], node.dd[1][k]],
        };
        t2_d[k] = Dual {
            re: node.d[1][k],
            eps: [node.dd[1][k], node.dd[2][k]],
        };
    }
    let fr_d = frame_generic(id, &coords_d, &t1_d, &t2_d, &node.hint).ok_or(
        GeomError::NotSpacelike {
            u: node.u,
            v: node.v,
        },
    )?;
    let frame = NormalFrame {
        e0: fr_d.e0.map(|t| t.re),
        en: fr_d.en.map(|t| t.re),
        l: fr_d.l.map(|t| t.re),
        lbar: fr_d.lbar.map(|t| t.re),
    };

    let g = metric_components(id, &x);
    let gamma = christoffel_components(id, &x);
    // covariant derivative along the surface of a frame vector field
    let cov = |field: &[T; 4], a: usize| -> [f64; 4] {
        let mut out = [0.0; 4];
        for mu in 0..4 {
            let mut v = field[mu].eps[a];
            for al in 0..4 {
                for be in 0..4 {
                    v += gamma[mu][al][be] * node.d[a][al] * field[be].re;
                }
            }
            out[mu] = v;
        }
        out
    };

    let mut chi = [[0.0; 2]; 2];
    let mut chibar = [[0.0; 2]; 2];
    let mut dlbar = [[0.0; 4]; 2];
    for a in 0..2 {
        let dl = cov(&fr_d.l, a);
        let dlb = cov(&fr_d.lbar, a);
        dlbar[a] = dlb;
        for b in 0..2 {
            chi[a][b] = tensor::inner(&g, &dl, &node.d[b]);
            chibar[a][b] = tensor::inner(&g, &dlb, &node.d[b]);
        }
    }

    // mean curvature vector: normal part of sigma^{ab} D_a d_b
    let ddx = |a: usize, b: usize| -> [f64; 4] {
        let idx = match (a, b) {
            (0, 0) => 0,
            (1, 1) => 2,
            _ => 1,
        };
        let mut out = [0.0; 4];
        for mu in 0..4 {
            let mut v = node.dd[idx][mu];
            for al in 0..4 {
                for be in 0..4 {
                    v += gamma[mu][al][be] * node.d[a][al] * node.d[b][be];
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
                w[mu] += node.sigma_inv[a][b] * dab[mu];
            }
        }
    }
    let tangential_part = |v: &[f64; 4]| -> [f64; 4] {
        let mut out = [0.0; 4];
        for bm in 0..2 {
            for cm in 0..2 {
                let comp = node.sigma_inv[bm][cm] * tensor::inner(&g, v, &node.d[bm]);
                for mu in 0..4 {
                    out[mu] += comp * node.d[cm][mu];
                }
            }
        }
        out
    };
    let h_vec = tensor::sub(&w, &tangential_part(&w));

    let dlbar_perp = [
        tensor::sub(&dlbar[0], &tangential_part(&dlbar[0])),
        tensor::sub(&dlbar[1], &tangential_part(&dlbar[1])),
    ];

    Ok((
        frame,
        FundamentalForms {
            sigma: node.sigma,
            chi,
            chibar,
            h_vec,
            dlbar_perp,
        },
    ))
}

/// Frobenius norm (indices raised with `sigma`) of the trace-free part of
/// `chibar`: the shear of the incoming null congruence.
pub fn shear_norm(sigma: &[[f64; 2]; 2], sigma_inv: &[[f64; 2]; 2], chibar: &[[f64; 2]; 2]) -> f64 {
    let mut tr = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            tr += sigma_inv[a][b] * chibar[a][b];
        }
    }
    let mut a_mat = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            a_mat[i][j] = chibar[i][j] - 0.5 * tr * sigma[i][j];
        }
    }
    let mut n2 = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            for cc in 0..2 {
                for dd in 0..2 {
                    n2 += sigma_inv[a][cc] * sigma_inv[b][dd] * a_mat[a][b] * a_mat[cc][dd];
                }
            }
        }
    }
    n2.max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{build_mesh, CapProfile, ParamSurface};
    use crate::support::SupportSurface;
    use approx::assert_relative_eq;

    #[test]
    fn slice_sphere_frame_is_time_and_radial() {
        let s = ParamSurface::sphere(SpacetimeId::Minkowski, 1.3, [0.0; 3], 0.0);
        let mesh = build_mesh(&s, 8).unwrap();
        for n in &mesh.nodes {
            let fr = normal_frame(SpacetimeId::Minkowski, n).unwrap();
            assert_relative_eq!(fr.e0[0], 1.0, epsilon = 1e-12);
            let x = n.point.coords();
            for i in 1..4 {
                assert_relative_eq!(fr.en[i], x[i] / 1.3, epsilon = 1e-10);
            }
            let g = metric_components(SpacetimeId::Minkowski, &x);
            assert_relative_eq!(tensor::inner(&g, &fr.l, &fr.lbar), -2.0, epsilon = 1e-12);
            assert!(tensor::inner(&g, &fr.l, &fr.l).abs() < 1e-12);
            assert!(tensor::inner(&g, &fr.lbar, &fr.lbar).abs() < 1e-12);
        }
    }

    #[test]
    fn random_graph_frame_invariants() {
        // includes a tilt off the slice so e0 != coordinate time
        let s = ParamSurface::graph(SpacetimeId::Minkowski, 0.8, 0.4, 0.2, 2.0, 1.5, 0.15, 0.0);
        let mesh = build_mesh(&s, 10).unwrap();
        for n in &mesh.nodes {
            let g = metric_components(SpacetimeId::Minkowski, &n.point.coords());
            let fr = normal_frame(SpacetimeId::Minkowski, n).unwrap();
            assert_relative_eq!(tensor::inner(&g, &fr.e0, &fr.e0), -1.0, epsilon = 1e-10);
            assert_relative_eq!(tensor::inner(&g, &fr.en, &fr.en), 1.0, epsilon = 1e-10);
            assert!(tensor::inner(&g, &fr.e0, &fr.en).abs() < 1e-10);
            assert_relative_eq!(tensor::inner(&g, &fr.l, &fr.lbar), -2.0, epsilon = 1e-10);
            for a in 0..2 {
                assert!(tensor::inner(&g, &fr.e0, &n.d[a]).abs() < 1e-10);
                assert!(tensor::inner(&g, &fr.en, &n.d[a]).abs() < 1e-10);
            }
            assert!(fr.e0[0] > 0.0);
        }
    }

    #[test]
    fn sphere_mean_curvature_and_umbilicity() {
        let rho = 0.8;
        let s = ParamSurface::sphere(SpacetimeId::Minkowski, rho, [0.0; 3], 0.0);
        let mesh = build_mesh(&s, 12).unwrap();
        for n in &mesh.nodes {
            let (fr, ff) = fundamental_forms(SpacetimeId::Minkowski, n).unwrap();
            let g = metric_components(SpacetimeId::Minkowski, &n.point.coords());
            // <H, Lbar> = 2 / rho for the outward normal
            let h_pair = tensor::inner(&g, &ff.h_vec, &fr.lbar);
            assert_relative_eq!(h_pair, 2.0 / rho, epsilon = 1e-9);
            // umbilic: shear of both null directions vanishes
            assert!(shear_norm(&ff.sigma, &n.sigma_inv, &ff.chibar) < 1e-9);
            assert!(shear_norm(&ff.sigma, &n.sigma_inv, &ff.chi) < 1e-9);
            // slice surfaces have (D_a Lbar)^perp = 0 in the flat model
            for a in 0..2 {
                for mu in 0..4 {
                    assert!(ff.dlbar_perp[a][mu].abs() < 1e-9);
                }
            }
            // H is tangent-orthogonal
            for a in 0..2 {
                assert!(tensor::inner(&g, &ff.h_vec, &n.d[a]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn flat_disk_is_totally_geodesic() {
        let s = ParamSurface::disk(
            SpacetimeId::Minkowski,
            3,
            SupportSurface::DeSitterSphere,
            0.0,
        );
        let mesh = build_mesh(&s, 8).unwrap();
        for n in &mesh.nodes {
            let (_, ff) = fundamental_forms(SpacetimeId::Minkowski, n).unwrap();
            for a in 0..2 {
                for b in 0..2 {
                    assert!(ff.chi[a][b].abs() < 1e-10);
                    assert!(ff.chibar[a][b].abs() < 1e-10);
                }
            }
            for mu in 0..4 {
                assert!(ff.h_vec[mu].abs() < 1e-10);
            }
        }
    }

    #[test]
    fn second_forms_are_symmetric_and_decompose_h() {
        let s = ParamSurface::graph(SpacetimeId::Minkowski, 0.7, 0.5, 0.25, 2.2, 1.7, 0.1, 0.0);
        let mesh = build_mesh(&s, 9).unwrap();
        for n in &mesh.nodes {
            let (fr, ff) = fundamental_forms(SpacetimeId::Minkowski, n).unwrap();
            assert!((ff.chi[0][1] - ff.chi[1][0]).abs() < 1e-8);
            assert!((ff.chibar[0][1] - ff.chibar[1][0]).abs() < 1e-8);
            // H = 1/2 (tr chibar) L + 1/2 (tr chi) Lbar
            let mut tr_chi = 0.0;
            let mut tr_chibar = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    tr_chi += n.sigma_inv[a][b] * ff.chi[a][b];
                    tr_chibar += n.sigma_inv[a][b] * ff.chibar[a][b];
                }
            }
            for mu in 0..4 {
                let recon = 0.5 * tr_chibar * fr.l[mu] + 0.5 * tr_chi * fr.lbar[mu];
                assert!(
                    (recon - ff.h_vec[mu]).abs() < 1e-8,
                    "H[{mu}]: {} vs {}",
                    ff.h_vec[mu],
                    recon
                );
            }
        }
    }

    #[test]
    fn expansion_product_is_gauge_invariant() {
        // under (L, Lbar) -> (aL, Lbar/a) the traces rescale oppositely, so
        // tr(chi) tr(chibar) = -<H, H> is the gauge-invariant combination
        let s = ParamSurface::graph(SpacetimeId::Minkowski, 0.6, 0.45, 0.2, 1.8, 1.3, 0.0, 0.0);
        let mesh = build_mesh(&s, 6).unwrap();
        for n in &mesh.nodes {
            let (_, ff) = fundamental_forms(SpacetimeId::Minkowski, n).unwrap();
            let g = metric_components(SpacetimeId::Minkowski, &n.point.coords());
            let mut tr_chi = 0.0;
            let mut tr_chibar = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    tr_chi += n.sigma_inv[i][j] * ff.chi[i][j];
                    tr_chibar += n.sigma_inv[i][j] * ff.chibar[i][j];
                }
            }
            let h2 = tensor::inner(&g, &ff.h_vec, &ff.h_vec);
            assert_relative_eq!(h2, -tr_chi * tr_chibar, epsilon = 1e-8);
        }
    }

    #[test]
    fn cap_frames_in_curved_slices() {
        for (id, l) in [
            (SpacetimeId::AntiDeSitter, 1.0f64.cosh()),
            (SpacetimeId::DeSitter, 0.5f64.cos()),
        ] {
            let sup = SupportSurface::for_spacetime(id, l).unwrap();
            let rho = 0.35 * sup.slice_radius(id);
            let s = ParamSurface::cap(id, rho, 1, CapProfile::Round, sup, 0.0);
            let mesh = build_mesh(&s, 8).unwrap();
            for n in &mesh.nodes {
                let g = metric_components(id, &n.point.coords());
                let (fr, ff) = fundamental_forms(id, n).unwrap();
                assert_relative_eq!(tensor::inner(&g, &fr.l, &fr.lbar), -2.0, epsilon = 1e-10);
                // umbilic in the conformally flat slice
                assert!(
                    shear_norm(&ff.sigma, &n.sigma_inv, &ff.chibar) < 1e-8,
                    "{id:?} shear"
                );
                let h_pair = tensor::inner(&g, &ff.h_vec, &fr.lbar);
                assert!(h_pair > 0.0, "{id:?}: <H, Lbar> = {h_pair}");
            }
        }
    }
}
