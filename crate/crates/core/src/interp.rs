//! Local cubic (4-point Lagrange) interpolation on the radial grid.
//!
//! Arguments beyond the truncation radius evaluate to zero: all profiles of
//! interest decay exponentially, and the solvers pick domains large enough
//! that the clipped tail is below verification tolerances.

use crate::grid::{Profile, RadialGrid};
use crate::scalar::Scalar;

/// Cubic interpolant over `(grid.nodes(), f.values())`.
pub struct CubicInterp<'a, T> {
    nodes: &'a [T],
    values: &'a [T],
    radius: T,
}

impl<'a, T: Scalar> CubicInterp<'a, T> {
    pub fn new(grid: &'a RadialGrid<T>, f: &'a Profile<T>) -> Self {
        CubicInterp {
            nodes: grid.nodes(),
            values: f.values(),
            radius: grid.radius(),
        }
    }

    /// From raw node/value slices (used for tails and tests).
    pub fn from_slices(nodes: &'a [T], values: &'a [T], radius: T) -> Self {
        debug_assert_eq!(nodes.len(), values.len());
        CubicInterp {
            nodes,
            values,
            radius,
        }
    }

    fn stencil(&self, x: T) -> usize {
        // first index of the 4-point window around x
        let n = self.nodes.len();
        let j = self.nodes.partition_point(|&r| r < x);
        j.saturating_sub(2).min(n - 4)
    }

    /// Interpolated value; zero beyond the truncation radius.
    pub fn eval(&self, x: T) -> T {
        if x > self.radius {
            return T::zero();
        }
        let s = self.stencil(x);
        let mut acc = T::zero();
        for i in 0..4 {
            let mut l = T::one();
            for j in 0..4 {
                if i != j {
                    l = l * (x - self.nodes[s + j]) / (self.nodes[s + i] - self.nodes[s + j]);
                }
            }
            acc += l * self.values[s + i];
        }
        acc
    }

    /// Derivative of the interpolant; zero beyond the truncation radius.
    pub fn eval_deriv(&self, x: T) -> T {
        if x > self.radius {
            return T::zero();
        }
        let s = self.stencil(x);
        let mut acc = T::zero();
        for i in 0..4 {
            // d/dx of the i-th Lagrange basis
            let mut dl = T::zero();
            for k in 0..4 {
                if k == i {
                    continue;
                }
                let mut term = T::one() / (self.nodes[s + i] - self.nodes[s + k]);
                for j in 0..4 {
                    if j != i && j != k {
                        term = term * (x - self.nodes[s + j])
                            / (self.nodes[s + i] - self.nodes[s + j]);
                    }
                }
                dl += term;
            }
            acc += dl * self.values[s + i];
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    #[test]
    fn reproduces_cubics_exactly() {
        let g = build_grid::<f64>(1, 0.5, 10.0, 64, 1.5).unwrap();
        let f = Profile::from_fn(&g, |r| 1.0 + r - 2.0 * r * r + 0.25 * r * r * r).unwrap();
        let it = CubicInterp::new(&g, &f);
        for &x in &[0.05, 1.3, 4.41, 9.2] {
            let exact = 1.0 + x - 2.0 * x * x + 0.25 * x * x * x;
            let dexact = 1.0 - 4.0 * x + 0.75 * x * x;
            assert!((it.eval(x) - exact).abs() < 1e-10);
            assert!((it.eval_deriv(x) - dexact).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_beyond_radius() {
        let g = build_grid::<f64>(1, 0.5, 10.0, 64, 1.0).unwrap();
        let f = Profile::from_fn(&g, |r| r.exp()).unwrap();
        let it = CubicInterp::new(&g, &f);
        assert_eq!(it.eval(10.5), 0.0);
        assert_eq!(it.eval_deriv(11.0), 0.0);
    }

    #[test]
    fn smooth_function_accuracy() {
        let g = build_grid::<f64>(1, 0.5, 8.0, 512, 2.0).unwrap();
        let f = Profile::from_fn(&g, |r| (-r).exp() * (2.0 * r).cos()).unwrap();
        let it = CubicInterp::new(&g, &f);
        for k in 1..40 {
            let x = 0.19 * k as f64;
            let exact = (-x).exp() * (2.0 * x).cos();
            assert!((it.eval(x) - exact).abs() < 1e-7, "x={x}");
        }
    }
}
