//! Dimension-generic check of the anti-de Sitter dual form.
//!
//! The Poincare-ball chart of the four-dimensional model generalizes
//! verbatim to spacetime dimension `n`: metric
//! `-((1+r^2)/(1-r^2))^2 dt^2 + 4/(1-r^2)^2 sum (dx^i)^2` with `n - 1`
//! spatial coordinates. On it lives the 2-form
//!
//! ```text
//! -theta^1 ^ theta^0 + sum_{i >= 2} y^i (x^1 theta^i - x^i theta^1) ^ theta^0
//! ```
//!
//! which for `n = 4` equals `*(dy^2 ^ dy^3)`. This module evaluates the
//! conformal Killing-Yano residual of that form (with `xi = div F / (n-1)`)
//! at seeded sample points, for `n = 4, 5, 6`.

use crate::dual::{c, lift, Real};
use crate::error::{GeomError, Result};
use crate::sample::rng;
use crate::tensor;
use rand::Rng;

fn metric_nd<T: Real, const D: usize>(x: &[T; D]) -> [[T; D]; D] {
    let one = T::one();
    let mut r2 = T::zero();
    for xi in x.iter().skip(1) {
        r2 = r2 + *xi * *xi;
    }
    let f = (one + r2) / (one - r2);
    let h = c::<T>(2.0) / (one - r2);
    let mut g = [[T::zero(); D]; D];
    g[0][0] = -(f * f);
    for i in 1..D {
        g[i][i] = h * h;
    }
    g
}

/// The dual form with the stated sign; `flip_sum` negates the summed term
/// as a negative control.
fn form_nd<T: Real, const D: usize>(x: &[T; D], flip_sum: bool) -> [[T; D]; D] {
    let one = T::one();
    let mut r2 = T::zero();
    for xi in x.iter().skip(1) {
        r2 = r2 + *xi * *xi;
    }
    let f = (one + r2) / (one - r2);
    let h = c::<T>(2.0) / (one - r2);
    // theta^0 = f dt, theta^i = h dx^i; every term is a wedge against
    // theta^0, so only the (j, 0) components are populated.
    let mut m = [[T::zero(); D]; D];
    let mut set = |j: usize, coeff: T| {
        // (coeff dx^j) ^ theta^0: component (j, 0) += coeff * f
        m[j][0] = m[j][0] + coeff * f;
        m[0][j] = m[0][j] - coeff * f;
    };
    // -theta^1 ^ theta^0
    set(1, -h);
    let sign = if flip_sum { -T::one() } else { T::one() };
    for i in 2..D {
        let y_i = h * x[i];
        // y^i (x^1 theta^i - x^i theta^1) ^ theta^0
        set(i, sign * y_i * x[1] * h);
        set(1, -(sign * y_i * x[i] * h));
    }
    m
}

fn residual_at<const D: usize>(x: &[f64; D], flip_sum: bool) -> f64 {
    let g = metric_nd(x);
    let g_inv = tensor::invert(&g).expect("ball chart metric is nondegenerate");
    let seeds = lift(*x);
    let gd = metric_nd(&seeds);
    let mut dg = [[[0.0; D]; D]; D];
    for r in 0..D {
        for n in 0..D {
            for m in 0..D {
                dg[r][n][m] = gd[r][n].eps[m];
            }
        }
    }
    let mut gamma = [[[0.0; D]; D]; D];
    for l in 0..D {
        for m in 0..D {
            for n in 0..D {
                let mut s = 0.0;
                for r in 0..D {
                    s += g_inv[l][r] * (dg[r][n][m] + dg[r][m][n] - dg[m][n][r]);
                }
                gamma[l][m][n] = 0.5 * s;
            }
        }
    }
    let fd = form_nd(&seeds, flip_sum);
    let mut fv = [[0.0; D]; D];
    let mut df = [[[0.0; D]; D]; D]; // df[lam][mu][nu]
    for mu in 0..D {
        for nu in 0..D {
            fv[mu][nu] = fd[mu][nu].re;
            for lam in 0..D {
                df[lam][mu][nu] = fd[mu][nu].eps[lam];
            }
        }
    }
    let mut nf = [[[0.0; D]; D]; D];
    for lam in 0..D {
        for mu in 0..D {
            for nu in 0..D {
                let mut v = df[lam][mu][nu];
                for rho in 0..D {
                    v -= gamma[rho][lam][mu] * fv[rho][nu] + gamma[rho][lam][nu] * fv[mu][rho];
                }
                nf[lam][mu][nu] = v;
            }
        }
    }
    // xi = div F / (D - 1)
    let mut xi = [0.0; D];
    for nu in 0..D {
        let mut s = 0.0;
        for mu in 0..D {
            for lam in 0..D {
                s += g_inv[mu][lam] * nf[mu][lam][nu];
            }
        }
        xi[nu] = s / (D as f64 - 1.0);
    }
    // orthonormal frame: e_0 = (1/f) d_t, e_i = (1/h) d_i
    let mut frame = [[0.0; D]; D];
    frame[0][0] = 1.0 / (-g[0][0]).sqrt();
    for i in 1..D {
        frame[i][i] = 1.0 / g[i][i].sqrt();
    }
    let mut gf = [[0.0; D]; D];
    let mut xif = [0.0; D];
    for a in 0..D {
        xif[a] = tensor::pair(&xi, &frame[a]);
        for b in 0..D {
            gf[a][b] = tensor::inner(&g, &frame[a], &frame[b]);
        }
    }
    let apply = |lam: usize, y: &[f64; D], z: &[f64; D]| {
        let mut s = 0.0;
        for mu in 0..D {
            for nu in 0..D {
                s += nf[lam][mu][nu] * y[mu] * z[nu];
            }
        }
        s
    };
    let mut worst: f64 = 0.0;
    for a in 0..D {
        for b in 0..D {
            for z in 0..D {
                let mut lhs = 0.0;
                for lam in 0..D {
                    lhs += frame[a][lam] * apply(lam, &frame[b], &frame[z])
                        + frame[b][lam] * apply(lam, &frame[a], &frame[z]);
                }
                let rhs = 2.0 * gf[a][b] * xif[z] - gf[a][z] * xif[b] - gf[b][z] * xif[a];
                worst = worst.max((lhs - rhs).abs());
            }
        }
    }
    worst
}

fn run<const D: usize>(samples: usize, seed: u64, flip_sum: bool) -> f64 {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let mut x = [0.0; D];
        x[0] = r.random_range(-1.0..1.0);
        let mut n2 = 0.0;
        for xi in x.iter_mut().skip(1) {
            *xi = r.random_range(-1.0..1.0);
            n2 += *xi * *xi;
        }
        let scale = r.random_range(0.05..0.7f64) / n2.sqrt();
        for xi in x.iter_mut().skip(1) {
            *xi *= scale;
        }
        worst = worst.max(residual_at::<D>(&x, flip_sum));
    }
    worst
}

/// Max conformal Killing-Yano residual of the higher-dimensional dual form
/// on the `n`-dimensional ball chart, over seeded samples. `flip_sum`
/// negates the summed term and should break the identity.
pub fn higher_dim_ads_dual_formula_check(
    n: usize,
    samples: usize,
    seed: u64,
    flip_sum: bool,
) -> Result<f64> {
    match n {
        4 => Ok(run::<4>(samples, seed, flip_sum)),
        5 => Ok(run::<5>(samples, seed, flip_sum)),
        6 => Ok(run::<6>(samples, seed, flip_sum)),
        _ => Err(GeomError::UnsupportedDimension { n }),
    }
}
