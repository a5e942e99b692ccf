//! Problem parameters: the quadruple `(N, b, β, a)` with the mass-critical
//! coupling `β² = (2-b)/N`, and the radial homogeneous trap `V(r) = κ r^l`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Problem quadruple. `β` is always derived from `(N, b)`, never set freely.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Params<T> {
    dim: u32,
    b: T,
    beta_sq: T,
    /// Interaction coupling `a ≥ 0`.
    pub a: T,
}

impl<T: Scalar> Params<T> {
    pub fn new(dim: u32, b: T, a: T) -> Result<Self> {
        if dim < 1 {
            return Err(Error::Config("dimension N must satisfy N >= 1".into()));
        }
        let b_max = T::of(2.0_f64.min(dim as f64));
        if !(b > T::zero() && b < b_max) {
            return Err(Error::Config(format!(
                "exponent b must lie in (0, min(2, N)); got {b}"
            )));
        }
        if !(a >= T::zero() && a.is_finite()) {
            return Err(Error::Config(format!("coupling a must be nonnegative; got {a}")));
        }
        let beta_sq = (T::two() - b) / T::of(dim as f64);
        Ok(Params {
            dim,
            b,
            beta_sq,
            a,
        })
    }

    /// Parameters of the limit problem (`a` unused there).
    pub fn critical(dim: u32, b: T) -> Result<Self> {
        Params::new(dim, b, T::zero())
    }

    pub fn with_coupling(&self, a: T) -> Self {
        Params { a, ..*self }
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn b(&self) -> T {
        self.b
    }

    /// `β² = (2-b)/N`.
    pub fn beta_sq(&self) -> T {
        self.beta_sq
    }

    pub fn beta(&self) -> T {
        self.beta_sq.sqrt()
    }

    /// Nonlinearity power `p = 1 + 2β²` in `u^p |x|^{-b}`.
    pub fn power(&self) -> T {
        T::one() + T::two() * self.beta_sq
    }
}

/// Radial homogeneous trapping potential `V(r) = κ r^l`.
///
/// `κ = 0` disables the trap (allowed, but minimizers are then confined only
/// by the truncation radius; flows flag this in their output).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PotentialSpec<T> {
    pub exponent: T,
    pub coefficient: T,
}

impl<T: Scalar> PotentialSpec<T> {
    pub fn new(exponent: T, coefficient: T) -> Result<Self> {
        if !(exponent > T::zero() && exponent.is_finite()) {
            return Err(Error::Config(format!(
                "potential exponent l must be positive; got {exponent}"
            )));
        }
        if !(coefficient >= T::zero() && coefficient.is_finite()) {
            return Err(Error::Config(format!(
                "potential coefficient kappa must be nonnegative; got {coefficient}"
            )));
        }
        Ok(PotentialSpec {
            exponent,
            coefficient,
        })
    }

    /// `V(r) = κ r^l`; homogeneous of degree `l`, `V(0) = 0`.
    pub fn eval(&self, r: T) -> T {
        self.coefficient * r.powf(self.exponent)
    }

    pub fn is_trapping(&self) -> bool {
        self.coefficient > T::zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_sq_is_derived() {
        let p = Params::<f64>::new(1, 0.5, 0.0).unwrap();
        assert_eq!(p.beta_sq(), 1.5);
        assert_eq!(p.power(), 4.0);
        let p = Params::<f64>::new(3, 1.0, 2.0).unwrap();
        assert!((p.beta_sq() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_out_of_range_b() {
        assert!(Params::<f64>::new(2, 2.0, 0.0).is_err());
        assert!(Params::<f64>::new(1, 1.0, 0.0).is_err());
        assert!(Params::<f64>::new(1, 0.999, 0.0).is_ok());
        assert!(Params::<f64>::new(3, -0.1, 0.0).is_err());
    }

    #[test]
    fn potential_homogeneity() {
        let v = PotentialSpec::<f64>::new(2.0, 0.7).unwrap();
        assert_eq!(v.eval(0.0), 0.0);
        for &t in &[0.5, 2.0, 7.0] {
            for &r in &[0.3, 1.0, 4.0] {
                let lhs = v.eval(t * r);
                let rhs = t.powf(2.0) * v.eval(r);
                assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
            }
        }
    }
}
