//! Nested forward-mode dual numbers.
//!
//! `Dual<T>` carries a value and one infinitesimal direction. Nesting
//! `Dual<Dual<f64>>` gives two independent nilpotent directions, so the
//! coefficient of `ε₁ε₂` in the output is a mixed second partial; three
//! levels reach third-order partials.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Scalar arithmetic shared by `f64` and every nesting of [`Dual`].
pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn cst(v: f64) -> Self;
    /// The real part at the innermost level.
    fn value(&self) -> f64;
    fn exp(self) -> Self;
}

impl Real for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline]
    fn value(&self) -> f64 {
        *self
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual<T> {
    pub re: T,
    pub eps: T,
}

impl<T: Real> Add for Dual<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Dual {
            re: self.re + o.re,
            eps: self.eps + o.eps,
        }
    }
}

impl<T: Real> Sub for Dual<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Dual {
            re: self.re - o.re,
            eps: self.eps - o.eps,
        }
    }
}

impl<T: Real> Mul for Dual<T> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        Dual {
            re: self.re * o.re,
            eps: self.re * o.eps + self.eps * o.re,
        }
    }
}

impl<T: Real> Div for Dual<T> {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let q = self.re / o.re;
        Dual {
            re: q,
            eps: (self.eps - q * o.eps) / o.re,
        }
    }
}

impl<T: Real> Neg for Dual<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Dual {
            re: -self.re,
            eps: -self.eps,
        }
    }
}

impl<T: Real> Real for Dual<T> {
    #[inline]
    fn cst(v: f64) -> Self {
        Dual {
            re: T::cst(v),
            eps: T::cst(0.0),
        }
    }
    #[inline]
    fn value(&self) -> f64 {
        self.re.value()
    }
    #[inline]
    fn exp(self) -> Self {
        let e = self.re.exp();
        Dual {
            re: e,
            eps: self.eps * e,
        }
    }
}

/// Seeding of independent variables and extraction of the top mixed
/// coefficient for a nesting depth.
pub trait Seed: Real {
    const DEPTH: usize;
    /// The variable `x` with unit perturbation in level `l` iff `active[l]`.
    fn var(x: f64, active: &[bool]) -> Self;
    /// Coefficient of `ε₁ε₂…ε_DEPTH`.
    fn top(&self) -> f64;
}

impl Seed for f64 {
    const DEPTH: usize = 0;
    fn var(x: f64, _active: &[bool]) -> Self {
        x
    }
    fn top(&self) -> f64 {
        *self
    }
}

impl<T: Seed> Seed for Dual<T> {
    const DEPTH: usize = T::DEPTH + 1;
    fn var(x: f64, active: &[bool]) -> Self {
        let (last, rest) = active.split_last().expect("one flag per level");
        Dual {
            re: T::var(x, rest),
            eps: T::cst(if *last { 1.0 } else { 0.0 }),
        }
    }
    fn top(&self) -> f64 {
        self.eps.top()
    }
}

pub type Dual1 = Dual<f64>;
pub type Dual2 = Dual<Dual1>;
pub type Dual3 = Dual<Dual2>;
