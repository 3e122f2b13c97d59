//! The quadratic test problem `f(x) = 1/2 x^T A x - b^T x` with
//! `A = (1/4) tridiag(-1, 2, -1)` and `b = (1/4) (-1, 0, ..., 0)`, together
//! with the progress-revealing stochastic oracle.
//!
//! The oracle returns the exact gradient on coordinates up to `prog(x)` and
//! scales every later coordinate by `xi / p` with `xi ~ Bernoulli(p)`, so a
//! new coordinate is discovered only with probability `p`.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::tridiag::Stencil;
use crate::{invalid, Error, Result};

/// First (and only nonzero) entry of `b`.
const B_FIRST: f64 = -0.25;

#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    dim: usize,
    noise_p: f64,
    stencil: Stencil,
    minimizer: Vec<f64>,
    f_star: f64,
}

impl Quadratic {
    pub fn new(dim: usize, noise_p: f64) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dim", "must be positive"));
        }
        if !(noise_p > 0.0 && noise_p <= 1.0) {
            return Err(invalid("noise_p", "must lie in (0, 1]"));
        }
        let stencil = Stencil::QUARTER_LAPLACIAN;
        let mut b = vec![0.0; dim];
        b[0] = B_FIRST;
        let minimizer = stencil.solve(&b)?;
        // f(x*) = -1/2 b^T x*
        let f_star = -0.5 * B_FIRST * minimizer[0];
        Ok(Self {
            dim,
            noise_p,
            stencil,
            minimizer,
            f_star,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn noise_p(&self) -> f64 {
        self.noise_p
    }

    /// `x0 = (sqrt(d), 0, ..., 0)`.
    pub fn initial_point(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.dim];
        x[0] = libm::sqrt(self.dim as f64);
        x
    }

    pub fn minimizer(&self) -> &[f64] {
        &self.minimizer
    }

    pub fn f_star(&self) -> f64 {
        self.f_star
    }

    /// `f(x0) - f*`.
    pub fn delta(&self) -> f64 {
        let x0 = self.initial_point();
        self.value_unchecked(&x0) - self.f_star
    }

    /// Smoothness constant, the largest eigenvalue of `A`.
    pub fn smoothness(&self) -> f64 {
        self.stencil.max_eigenvalue(self.dim)
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: x.len(),
            });
        }
        Ok(())
    }

    fn value_unchecked(&self, x: &[f64]) -> f64 {
        let d = x.len();
        let mut quad = 0.0;
        for j in 0..d {
            let mut ax = self.stencil.diag * x[j];
            if j > 0 {
                ax += self.stencil.off * x[j - 1];
            }
            if j + 1 < d {
                ax += self.stencil.off * x[j + 1];
            }
            quad += x[j] * ax;
        }
        0.5 * quad - B_FIRST * x[0]
    }

    pub fn objective_value(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        Ok(self.value_unchecked(x))
    }

    /// `grad = A x - b`, written into `out`.
    pub fn gradient_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.check(x)?;
        self.check(out)?;
        self.stencil.apply_into(x, out);
        out[0] -= B_FIRST;
        Ok(())
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.gradient_into(x, &mut out)?;
        Ok(out)
    }

    /// Average of `total` oracle calls at the same point `x`, `successes` of
    /// which drew `xi = 1`. Coordinates past `prog(x)` are scaled by
    /// `successes / (total * p)`; the rest are exact.
    pub fn averaged_stochastic_gradient_into(
        &self,
        x: &[f64],
        successes: usize,
        total: usize,
        out: &mut [f64],
    ) -> Result<()> {
        if total == 0 || successes > total {
            return Err(invalid("total", "need 0 <= successes <= total, total > 0"));
        }
        self.gradient_into(x, out)?;
        let scale = successes as f64 / (total as f64 * self.noise_p);
        for g in &mut out[prog(x)..] {
            *g *= scale;
        }
        Ok(())
    }

    /// One oracle call with a fixed outcome `xi`.
    pub fn stochastic_gradient_with(&self, x: &[f64], xi: bool) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.averaged_stochastic_gradient_into(x, xi as usize, 1, &mut out)?;
        Ok(out)
    }

    /// Draws the Bernoulli outcome of one oracle call.
    pub fn draw_xi<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        rng.random_bool(self.noise_p)
    }

    pub fn stochastic_gradient<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> Result<Vec<f64>> {
        let xi = self.draw_xi(rng);
        self.stochastic_gradient_with(x, xi)
    }

    /// `E ||grad(x; xi) - grad(x)||^2`, enumerated over both outcomes of `xi`:
    /// the tail past `prog(x)` contributes `||tail||^2 (1 - p) / p`.
    pub fn noise_variance(&self, x: &[f64]) -> Result<f64> {
        let g = self.gradient(x)?;
        let tail: f64 = g[prog(x)..].iter().map(|v| v * v).sum();
        Ok(tail * (1.0 - self.noise_p) / self.noise_p)
    }

    /// Noise variance at the initial point, used as `sigma^2`.
    pub fn sigma_sq(&self) -> f64 {
        let x0 = self.initial_point();
        self.noise_variance(&x0).expect("x0 has the right dimension")
    }
}

/// Largest 1-based index of a nonzero coordinate; 0 for the zero vector.
pub fn prog(x: &[f64]) -> usize {
    x.iter().rposition(|&v| v != 0.0).map_or(0, |i| i + 1)
}

/// A gradient delivered by a worker. `version` is the iteration index of the
/// point it was computed at; the staleness of an update applied at iteration
/// `k` is `k - version`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSample {
    pub gradient: Vec<f64>,
    pub worker: usize,
    pub version: u64,
    pub requested_at: f64,
    pub completed_at: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::worker_stream;
    use proptest::prelude::*;
    use rand::Rng;

    /// Dense reference: A as a full matrix.
    fn dense_value(d: usize, x: &[f64]) -> f64 {
        let mut a = vec![vec![0.0; d]; d];
        for i in 0..d {
            a[i][i] = 0.5;
            if i > 0 {
                a[i][i - 1] = -0.25;
            }
            if i + 1 < d {
                a[i][i + 1] = -0.25;
            }
        }
        let mut q = 0.0;
        for i in 0..d {
            for j in 0..d {
                q += x[i] * a[i][j] * x[j];
            }
        }
        0.5 * q + 0.25 * x[0]
    }

    fn pseudo_random_point(d: usize, seed: u64) -> Vec<f64> {
        let mut rng = worker_stream(seed, 0);
        (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()
    }

    #[test]
    fn value_at_zero_and_e1() {
        let q = Quadratic::new(4, 0.5).unwrap();
        assert_eq!(q.objective_value(&[0.0; 4]).unwrap(), 0.0);
        let e1 = [1.0, 0.0, 0.0, 0.0];
        assert_eq!(dense_value(4, &e1), 0.5);
        assert_eq!(q.objective_value(&e1).unwrap(), 0.5);
    }

    #[test]
    fn value_at_x0_matches_dense_reference() {
        let q = Quadratic::new(1000, 0.01).unwrap();
        let x0 = q.initial_point();
        let got = q.objective_value(&x0).unwrap();
        let want = dense_value(1000, &x0);
        assert!(((got - want) / want).abs() < 1e-10);
        // also a generic point
        let x = pseudo_random_point(1000, 3);
        let got = q.objective_value(&x).unwrap();
        let want = dense_value(1000, &x);
        assert!(((got - want) / want).abs() < 1e-10);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let q = Quadratic::new(4, 0.5).unwrap();
        assert_eq!(
            q.objective_value(&[0.0; 3]),
            Err(Error::DimensionMismatch { expected: 4, actual: 3 })
        );
        assert!(q.gradient(&[0.0; 5]).is_err());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Quadratic::new(0, 0.5).is_err());
        assert!(Quadratic::new(3, 0.0).is_err());
        assert!(Quadratic::new(3, 1.5).is_err());
        assert!(Quadratic::new(3, 1.0).is_ok());
    }

    #[test]
    fn gradient_at_zero_is_minus_b() {
        let q = Quadratic::new(6, 0.3).unwrap();
        let g = q.gradient(&[0.0; 6]).unwrap();
        assert_eq!(g, vec![0.25, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let d = 50;
        let q = Quadratic::new(d, 0.3).unwrap();
        let x = pseudo_random_point(d, 11);
        let g = q.gradient(&x).unwrap();
        let h = 1e-5;
        for j in 0..d {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let fd = (q.objective_value(&xp).unwrap() - q.objective_value(&xm).unwrap()) / (2.0 * h);
            assert!((fd - g[j]).abs() < 1e-6, "coord {j}: fd={fd} g={}", g[j]);
        }
    }

    #[test]
    fn gradient_vanishes_at_minimizer() {
        let q = Quadratic::new(200, 0.1).unwrap();
        let g = q.gradient(q.minimizer()).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-10));
        // closed form x*_i = -(d + 1 - i) / (d + 1), f* = -d / (8 (d + 1))
        assert!((q.minimizer()[0] + 200.0 / 201.0).abs() < 1e-10);
        assert!((q.f_star() + 200.0 / (8.0 * 201.0)).abs() < 1e-12);
    }

    #[test]
    fn prog_examples() {
        assert_eq!(prog(&[0.0, 0.0]), 0);
        assert_eq!(prog(&[]), 0);
        assert_eq!(prog(&[3.0, 0.0, 0.0]), 1);
        assert_eq!(prog(&[1.0, 0.0, 2.0, 0.0]), 3);
    }

    #[test]
    fn oracle_degenerate_cases() {
        let x = [1.0, 0.5, 0.0, 0.0, 0.0];
        let q1 = Quadratic::new(5, 1.0).unwrap();
        assert_eq!(q1.stochastic_gradient_with(&x, true).unwrap(), q1.gradient(&x).unwrap());

        let q = Quadratic::new(5, 0.2).unwrap();
        let g = q.gradient(&x).unwrap();
        let g0 = q.stochastic_gradient_with(&x, false).unwrap();
        assert_eq!(&g0[..2], &g[..2]);
        assert!(g0[2..].iter().all(|&v| v == 0.0));
        assert!(g[2] != 0.0);
    }

    #[test]
    fn noise_variance_matches_enumeration() {
        let q = Quadratic::new(30, 0.05).unwrap();
        let x = q.initial_point();
        let g = q.gradient(&x).unwrap();
        let p = q.noise_p();
        let mut want = 0.0;
        for (xi, w) in [(true, p), (false, 1.0 - p)] {
            let s = q.stochastic_gradient_with(&x, xi).unwrap();
            let sq: f64 = s.iter().zip(&g).map(|(a, b)| (a - b) * (a - b)).sum();
            want += w * sq;
        }
        let got = q.sigma_sq();
        assert!((got - want).abs() < 1e-12 * want.max(1.0));
        assert!(got > 0.0);
    }

    #[test]
    fn empirical_mean_converges() {
        let q = Quadratic::new(10, 0.3).unwrap();
        let x = [1.0, -0.5, 0.25, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let g = q.gradient(&x).unwrap();
        let mut rng = worker_stream(42, 0);
        let n = 100_000;
        let mut sum = [0.0; 10];
        let mut sq = [0.0; 10];
        for _ in 0..n {
            let s = q.stochastic_gradient(&x, &mut rng).unwrap();
            for j in 0..10 {
                sum[j] += s[j];
                sq[j] += s[j] * s[j];
            }
        }
        for j in 0..10 {
            let mean = sum[j] / n as f64;
            let var = (sq[j] / n as f64 - mean * mean).max(0.0);
            let tol = 5.0 * var.sqrt() / (n as f64).sqrt() + 1e-15;
            assert!((mean - g[j]).abs() <= tol, "coord {j}");
        }
    }

    proptest! {
        #[test]
        fn oracle_is_unbiased(
            xs in proptest::collection::vec(-3.0f64..3.0, 1..40),
            zeros in 0usize..40,
            p in 0.001f64..=1.0,
        ) {
            let mut x = xs;
            let keep = x.len().saturating_sub(zeros.min(x.len()));
            for v in &mut x[keep..] { *v = 0.0; }
            let q = Quadratic::new(x.len(), p).unwrap();
            let g = q.gradient(&x).unwrap();
            let g1 = q.stochastic_gradient_with(&x, true).unwrap();
            let g0 = q.stochastic_gradient_with(&x, false).unwrap();
            for j in 0..x.len() {
                let e = p * g1[j] + (1.0 - p) * g0[j];
                prop_assert!((e - g[j]).abs() <= 1e-12 * (1.0 + g[j].abs()));
            }
        }

        #[test]
        fn a_step_reveals_at_most_one_coordinate(
            xs in proptest::collection::vec(-3.0f64..3.0, 2..30),
            cut in 0usize..30,
            xi: bool,
            gamma in 0.01f64..2.0,
        ) {
            let mut x = xs;
            let r = cut.min(x.len() - 1);
            for v in &mut x[r..] { *v = 0.0; }
            let q = Quadratic::new(x.len(), 0.2).unwrap();
            let before = prog(&x);
            let g = q.stochastic_gradient_with(&x, xi).unwrap();
            let next: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - gamma * b).collect();
            prop_assert!(prog(&next) <= before + 1);
        }

        #[test]
        fn gradient_is_one_lipschitz(
            pair in (1usize..40).prop_flat_map(|d| (
                proptest::collection::vec(-5.0f64..5.0, d),
                proptest::collection::vec(-5.0f64..5.0, d),
            ))
        ) {
            let (x, y) = pair;
            let q = Quadratic::new(x.len(), 0.5).unwrap();
            let gx = q.gradient(&x).unwrap();
            let gy = q.gradient(&y).unwrap();
            let dg: f64 = gx.iter().zip(&gy).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let dx: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            prop_assert!(dg <= dx * (1.0 + 1e-12) + 1e-12);
        }
    }
}
