//! Small dense tensor helpers over generic scalars.
//!
//! Everything here is fixed-size and allocation-free so it can run on
//! nested dual numbers as easily as on `f64`.

use crate::dual::Real;

/// g(a, b) for a covariant metric and two vectors.
#[inline]
pub fn inner<T: Real, const D: usize>(g: &[[T; D]; D], a: &[T; D], b: &[T; D]) -> T {
    let mut s = T::zero();
    for mu in 0..D {
        for nu in 0..D {
            s = s + g[mu][nu] * a[mu] * b[nu];
        }
    }
    s
}

/// Natural pairing of a covector with a vector.
#[inline]
pub fn pair<T: Real, const D: usize>(omega: &[T; D], v: &[T; D]) -> T {
    let mut s = T::zero();
    for mu in 0..D {
        s = s + omega[mu] * v[mu];
    }
    s
}

/// Raise an index: `(g_inv · omega)^mu`.
#[inline]
pub fn raise<T: Real, const D: usize>(g_inv: &[[T; D]; D], omega: &[T; D]) -> [T; D] {
    let mut v = [T::zero(); D];
    for mu in 0..D {
        for nu in 0..D {
            v[mu] = v[mu] + g_inv[mu][nu] * omega[nu];
        }
    }
    v
}

/// Lower an index: `(g · v)_mu`.
#[inline]
pub fn lower<T: Real, const D: usize>(g: &[[T; D]; D], v: &[T; D]) -> [T; D] {
    raise(g, v)
}

pub fn scale<T: Real, const D: usize>(s: T, v: &[T; D]) -> [T; D] {
    let mut out = *v;
    for x in out.iter_mut() {
        *x = s * *x;
    }
    out
}

pub fn add<T: Real, const D: usize>(a: &[T; D], b: &[T; D]) -> [T; D] {
    let mut out = *a;
    for (x, y) in out.iter_mut().zip(b.iter()) {
        *x = *x + *y;
    }
    out
}

pub fn sub<T: Real, const D: usize>(a: &[T; D], b: &[T; D]) -> [T; D] {
    let mut out = *a;
    for (x, y) in out.iter_mut().zip(b.iter()) {
        *x = *x - *y;
    }
    out
}

/// Determinant by LU elimination with partial pivoting on the primal part.
pub fn det<T: Real, const D: usize>(m: &[[T; D]; D]) -> T {
    let mut a = *m;
    let mut sign = 1.0;
    let mut prod = T::one();
    for k in 0..D {
        let mut piv = k;
        for r in (k + 1)..D {
            if a[r][k].val().abs() > a[piv][k].val().abs() {
                piv = r;
            }
        }
        if a[piv][k].val() == 0.0 {
            return T::zero();
        }
        if piv != k {
            a.swap(piv, k);
            sign = -sign;
        }
        prod = prod * a[k][k];
        for r in (k + 1)..D {
            let f = a[r][k] / a[k][k];
            for c in k..D {
                a[r][c] = a[r][c] - f * a[k][c];
            }
        }
    }
    T::from_f64(sign) * prod
}

/// Matrix inverse by Gauss-Jordan elimination, pivoting on the primal part.
/// Returns `None` when a pivot vanishes.
pub fn invert<T: Real, const D: usize>(m: &[[T; D]; D]) -> Option<[[T; D]; D]> {
    let mut a = *m;
    let mut inv = [[T::zero(); D]; D];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = T::one();
    }
    for k in 0..D {
        let mut piv = k;
        for r in (k + 1)..D {
            if a[r][k].val().abs() > a[piv][k].val().abs() {
                piv = r;
            }
        }
        if a[piv][k].val() == 0.0 {
            return None;
        }
        a.swap(piv, k);
        inv.swap(piv, k);
        let d = a[k][k];
        for c in 0..D {
            a[k][c] = a[k][c] / d;
            inv[k][c] = inv[k][c] / d;
        }
        for r in 0..D {
            if r == k {
                continue;
            }
            let f = a[r][k];
            if f.val() == 0.0 && f == T::zero() {
                continue;
            }
            for c in 0..D {
                a[r][c] = a[r][c] - f * a[k][c];
                inv[r][c] = inv[r][c] - f * inv[k][c];
            }
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invert_recovers_identity() {
        let m = [
            [2.0, 1.0, 0.0, 0.5],
            [1.0, 3.0, -1.0, 0.0],
            [0.0, -1.0, 4.0, 1.0],
            [0.5, 0.0, 1.0, 5.0],
        ];
        let inv = invert(&m).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let mut s = 0.0;
                for k in 0..4 {
                    s += m[i][k] * inv[k][j];
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((s - expect).abs() < 1e-12, "({i},{j}) -> {s}");
            }
        }
    }

    #[test]
    fn det_of_diagonal() {
        let m = [
            [-1.0, 0.0, 0.0, 0.0],
            [0.0, 4.0, 0.0, 0.0],
            [0.0, 0.0, 4.0, 0.0],
            [0.0, 0.0, 0.0, 4.0],
        ];
        assert!((det(&m) + 64.0).abs() < 1e-12);
    }

    #[test]
    fn singular_matrix_rejected() {
        let m = [[1.0, 2.0], [2.0, 4.0]];
        assert!(invert(&m).is_none());
    }
}
