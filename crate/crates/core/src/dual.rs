//! Forward-mode derivative arithmetic.
//!
//! Every chart expression in this crate is closed form, so exact partial
//! derivatives come from propagating dual components through the formula
//! instead of differencing it. [`Dual<T, N>`] carries a value and `N`
//! directional derivatives over any scalar `T`; nesting the type yields
//! second and higher derivatives. Finite differences appear only as test
//! oracles.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Scalar arithmetic shared by `f64` and dual numbers of any nesting depth.
pub trait Real:
    Copy
    + PartialEq
    + std::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(x: f64) -> Self;
    /// Primal part, all derivative information stripped.
    fn val(self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sinh(self) -> Self;
    fn cosh(self) -> Self;
    fn sqrt(self) -> Self;
    fn powi(self, n: i32) -> Self;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn one() -> Self {
        Self::from_f64(1.0)
    }
}

/// Shorthand for `T::from_f64` in formula-dense code.
#[inline]
pub fn c<T: Real>(x: f64) -> T {
    T::from_f64(x)
}

impl Real for f64 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline]
    fn val(self) -> f64 {
        self
    }
    #[inline]
    fn sin(self) -> Self {
        f64::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        f64::cos(self)
    }
    #[inline]
    fn sinh(self) -> Self {
        f64::sinh(self)
    }
    #[inline]
    fn cosh(self) -> Self {
        f64::cosh(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
}

/// A value together with `N` directional derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<T, const N: usize> {
    pub re: T,
    pub eps: [T; N],
}

impl<T: Real, const N: usize> Dual<T, N> {
    /// Embed a scalar with zero derivative part.
    #[inline]
    pub fn constant(x: T) -> Self {
        Dual {
            re: x,
            eps: [T::zero(); N],
        }
    }

    /// A variable seeded in direction `i`.
    #[inline]
    pub fn variable(x: T, i: usize) -> Self {
        let mut eps = [T::zero(); N];
        eps[i] = T::one();
        Dual { re: x, eps }
    }

    /// Chain rule: given `f = func(re)` and `df = func'(re)`, produce the
    /// dual result of applying `func`.
    #[inline]
    fn lift(self, f: T, df: T) -> Self {
        Dual {
            re: f,
            eps: self.eps.map(|e| df * e),
        }
    }
}

impl<T: Real, const N: usize> Add for Dual<T, N> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        let mut eps = self.eps;
        for i in 0..N {
            eps[i] = eps[i] + rhs.eps[i];
        }
        Dual {
            re: self.re + rhs.re,
            eps,
        }
    }
}

impl<T: Real, const N: usize> Sub for Dual<T, N> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        let mut eps = self.eps;
        for i in 0..N {
            eps[i] = eps[i] - rhs.eps[i];
        }
        Dual {
            re: self.re - rhs.re,
            eps,
        }
    }
}

impl<T: Real, const N: usize> Neg for Dual<T, N> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Dual {
            re: -self.re,
            eps: self.eps.map(|e| -e),
        }
    }
}

impl<T: Real, const N: usize> Mul for Dual<T, N> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        let mut eps = [T::zero(); N];
        for i in 0..N {
            eps[i] = self.eps[i] * rhs.re + self.re * rhs.eps[i];
        }
        Dual {
            re: self.re * rhs.re,
            eps,
        }
    }
}

impl<T: Real, const N: usize> Div for Dual<T, N> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let inv = T::one() / rhs.re;
        let re = self.re * inv;
        let mut eps = [T::zero(); N];
        for i in 0..N {
            eps[i] = (self.eps[i] - re * rhs.eps[i]) * inv;
        }
        Dual { re, eps }
    }
}

impl<T: Real, const N: usize> Real for Dual<T, N> {
    #[inline]
    fn from_f64(x: f64) -> Self {
        Dual::constant(T::from_f64(x))
    }
    #[inline]
    fn val(self) -> f64 {
        self.re.val()
    }
    #[inline]
    fn sin(self) -> Self {
        self.lift(self.re.sin(), self.re.cos())
    }
    #[inline]
    fn cos(self) -> Self {
        self.lift(self.re.cos(), -self.re.sin())
    }
    #[inline]
    fn sinh(self) -> Self {
        self.lift(self.re.sinh(), self.re.cosh())
    }
    #[inline]
    fn cosh(self) -> Self {
        self.lift(self.re.cosh(), self.re.sinh())
    }
    #[inline]
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        self.lift(s, T::from_f64(0.5) / s)
    }
    #[inline]
    fn powi(self, n: i32) -> Self {
        self.lift(self.re.powi(n), T::from_f64(n as f64) * self.re.powi(n - 1))
    }
}

/// Seed each entry of `x` as an independent variable. Nest the call to
/// climb one derivative order per level: `lift(lift(x))` evaluates second
/// partials, `lift(lift(lift(x)))` third, and so on.
pub fn lift<T: Real, const N: usize>(x: [T; N]) -> [Dual<T, N>; N] {
    let mut out = [Dual::constant(T::zero()); N];
    for (i, xi) in x.into_iter().enumerate() {
        out[i] = Dual::variable(xi, i);
    }
    out
}

/// First-order duals in `N` variables.
pub type D1<const N: usize> = Dual<f64, N>;
/// Second-order (nested) duals in `N` variables.
pub type D2<const N: usize> = Dual<Dual<f64, N>, N>;
/// Third-order duals in `N` variables.
pub type D3<const N: usize> = Dual<Dual<Dual<f64, N>, N>, N>;

/// Value together with first and second parameter derivatives of an
/// `f64`-valued quantity of two parameters; the plain-data mirror of a
/// `D2<2>` evaluation.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Jet2 {
    pub v: f64,
    /// (d/du, d/dv)
    pub d: [f64; 2],
    /// (d2/du2, d2/dudv, d2/dv2)
    pub dd: [f64; 3],
}

impl Jet2 {
    pub fn from_d2(x: D2<2>) -> Self {
        Jet2 {
            v: x.re.re,
            d: [x.re.eps[0], x.re.eps[1]],
            dd: [x.eps[0].eps[0], x.eps[0].eps[1], x.eps[1].eps[1]],
        }
    }

    /// Rebuild the dual representation, e.g. to push a stored jet back
    /// through chart formulas.
    pub fn to_d2(self) -> D2<2> {
        Dual {
            re: Dual {
                re: self.v,
                eps: self.d,
            },
            eps: [
                Dual {
                    re: self.d[0],
                    eps: [self.dd[0], self.dd[1]],
                },
                Dual {
                    re: self.d[1],
                    eps: [self.dd[1], self.dd[2]],
                },
            ],
        }
    }
}
