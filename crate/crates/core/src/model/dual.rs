//! Forward-mode dual numbers with a fixed number of directions, used to
//! linearize the pointwise fluxes.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

/// Scalar type the pointwise physics is generic over.
pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + AddAssign
{
    fn cst(v: f64) -> Self;
    fn val(&self) -> f64;
}

impl Real for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline]
    fn val(&self) -> f64 {
        *self
    }
}

pub const NDIR: usize = 15;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub d: [f64; NDIR],
}

impl Dual {
    pub fn constant(v: f64) -> Self {
        Dual { v, d: [0.0; NDIR] }
    }

    /// The `i`-th independent variable with value `v`.
    pub fn variable(v: f64, i: usize) -> Self {
        let mut d = [0.0; NDIR];
        d[i] = 1.0;
        Dual { v, d }
    }
}

impl Real for Dual {
    #[inline]
    fn cst(v: f64) -> Self {
        Dual::constant(v)
    }
    #[inline]
    fn val(&self) -> f64 {
        self.v
    }
}

impl Add for Dual {
    type Output = Dual;
    #[inline]
    fn add(mut self, o: Dual) -> Dual {
        self.v += o.v;
        for k in 0..NDIR {
            self.d[k] += o.d[k];
        }
        self
    }
}

impl AddAssign for Dual {
    #[inline]
    fn add_assign(&mut self, o: Dual) {
        *self = *self + o;
    }
}

impl Sub for Dual {
    type Output = Dual;
    #[inline]
    fn sub(mut self, o: Dual) -> Dual {
        self.v -= o.v;
        for k in 0..NDIR {
            self.d[k] -= o.d[k];
        }
        self
    }
}

impl Mul for Dual {
    type Output = Dual;
    #[inline]
    fn mul(self, o: Dual) -> Dual {
        let mut d = [0.0; NDIR];
        for k in 0..NDIR {
            d[k] = self.d[k] * o.v + self.v * o.d[k];
        }
        Dual { v: self.v * o.v, d }
    }
}

impl Div for Dual {
    type Output = Dual;
    #[inline]
    fn div(self, o: Dual) -> Dual {
        let inv = 1.0 / o.v;
        let q = self.v * inv;
        let mut d = [0.0; NDIR];
        for k in 0..NDIR {
            d[k] = (self.d[k] - q * o.d[k]) * inv;
        }
        Dual { v: q, d }
    }
}

impl Neg for Dual {
    type Output = Dual;
    #[inline]
    fn neg(mut self) -> Dual {
        self.v = -self.v;
        for k in 0..NDIR {
            self.d[k] = -self.d[k];
        }
        self
    }
}

impl Add<f64> for Dual {
    type Output = Dual;
    #[inline]
    fn add(mut self, o: f64) -> Dual {
        self.v += o;
        self
    }
}

impl Sub<f64> for Dual {
    type Output = Dual;
    #[inline]
    fn sub(mut self, o: f64) -> Dual {
        self.v -= o;
        self
    }
}

impl Mul<f64> for Dual {
    type Output = Dual;
    #[inline]
    fn mul(mut self, o: f64) -> Dual {
        self.v *= o;
        for k in 0..NDIR {
            self.d[k] *= o;
        }
        self
    }
}

impl Div<f64> for Dual {
    type Output = Dual;
    #[inline]
    fn div(self, o: f64) -> Dual {
        self * (1.0 / o)
    }
}
