//! Uniform 1D spatial grid with differentiation operators and quadrature.
//!
//! Every field in the crate lives on a [`Grid`]. Periodic grids exclude the
//! right endpoint and support exact Fourier differentiation; Vanishing grids
//! include both endpoints and model states that decay to zero at the domain
//! edges, differentiated with 4th-order central stencils.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Fraction of `max |f|` above which an endpoint value of a Vanishing-grid
/// field counts as insufficient decay. Integration-by-parts identities assume
/// boundary terms vanish; callers should treat larger ratios as suspect.
pub const DECAY_GUARD: f64 = 1e-10;

/// Boundary handling of the spatial domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    /// `[x_min, x_max)`, right endpoint excluded, fields wrap around.
    Periodic,
    /// `[x_min, x_max]`, both endpoints included, fields decay to zero there.
    Vanishing,
}

/// Spatial differentiation scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeScheme {
    /// Exact Fourier differentiation; valid only on Periodic grids.
    Spectral,
    /// 4th-order central stencils, one-sided 4th-order at Vanishing boundaries.
    CentralFd4,
}

/// Quadrature rule selected by the grid's boundary mode and point count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureRule {
    /// Rectangle rule; spectrally accurate for smooth periodic integrands.
    PeriodicRectangle,
    /// Composite Simpson; requires an odd number of points.
    Simpson,
    /// Composite trapezoid fallback for even point counts on Vanishing grids.
    Trapezoid,
}

impl QuadratureRule {
    /// Formal order of accuracy ("spectral" reported as `u32::MAX`).
    pub fn order(&self) -> u32 {
        match self {
            QuadratureRule::PeriodicRectangle => u32::MAX,
            QuadratureRule::Simpson => 4,
            QuadratureRule::Trapezoid => 2,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            QuadratureRule::PeriodicRectangle => "periodic rectangle (spectral)",
            QuadratureRule::Simpson => "composite Simpson (order 4)",
            QuadratureRule::Trapezoid => "composite trapezoid (order 2)",
        }
    }
}

fn kahan_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let y = v - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Uniform 1D spatial lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    n: usize,
    x_min: f64,
    x_max: f64,
    boundary: BoundaryKind,
    dx: f64,
}

impl Grid {
    /// Build a grid with `n >= 8` points on `[x_min, x_max)` (Periodic) or
    /// `[x_min, x_max]` (Vanishing).
    pub fn new(n: usize, x_min: f64, x_max: f64, boundary: BoundaryKind) -> Result<Self> {
        if n < 8 {
            return Err(Error::Config(format!("grid needs n >= 8 points, got {n}")));
        }
        if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::Config(format!(
                "invalid domain [{x_min}, {x_max}]: need finite x_max > x_min"
            )));
        }
        let dx = match boundary {
            BoundaryKind::Periodic => (x_max - x_min) / n as f64,
            BoundaryKind::Vanishing => (x_max - x_min) / (n - 1) as f64,
        };
        Ok(Grid { n, x_min, x_max, boundary, dx })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn boundary(&self) -> BoundaryKind {
        self.boundary
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Domain length `x_max - x_min`.
    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    /// Coordinate of point `i`.
    pub fn point(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    /// All point coordinates.
    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }

    /// Scheme matching the boundary mode when the caller has no preference.
    pub fn natural_scheme(&self) -> DerivativeScheme {
        match self.boundary {
            BoundaryKind::Periodic => DerivativeScheme::Spectral,
            BoundaryKind::Vanishing => DerivativeScheme::CentralFd4,
        }
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::shape(self.n, len));
        }
        Ok(())
    }

    fn check_scheme(&self, scheme: DerivativeScheme) -> Result<()> {
        if scheme == DerivativeScheme::Spectral && self.boundary != BoundaryKind::Periodic {
            return Err(Error::Config(
                "Spectral differentiation is only valid on Periodic grids".into(),
            ));
        }
        Ok(())
    }

    /// Fourier wavenumbers in FFT ordering: `0, 1, ..., n/2, -n/2+1, ..., -1`
    /// times `2*pi/L`.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let dk = 2.0 * PI / self.length();
        (0..self.n)
            .map(|j| {
                let m = if j <= self.n / 2 { j as i64 } else { j as i64 - self.n as i64 };
                m as f64 * dk
            })
            .collect()
    }

    /// Discrete first derivative of a complex field.
    pub fn diff1(&self, f: &[Complex64], scheme: DerivativeScheme) -> Result<Vec<Complex64>> {
        self.check_len(f.len())?;
        self.check_scheme(scheme)?;
        match scheme {
            DerivativeScheme::Spectral => Ok(self.spectral_derivative(f, 1)),
            DerivativeScheme::CentralFd4 => Ok(self.fd4_diff1(f)),
        }
    }

    /// Discrete second derivative of a complex field.
    pub fn diff2(&self, f: &[Complex64], scheme: DerivativeScheme) -> Result<Vec<Complex64>> {
        self.check_len(f.len())?;
        self.check_scheme(scheme)?;
        match scheme {
            DerivativeScheme::Spectral => Ok(self.spectral_derivative(f, 2)),
            DerivativeScheme::CentralFd4 => Ok(self.fd4_diff2(f)),
        }
    }

    /// First derivative of a real field.
    pub fn diff1_real(&self, f: &[f64], scheme: DerivativeScheme) -> Result<Vec<f64>> {
        let complex: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        Ok(self.diff1(&complex, scheme)?.iter().map(|c| c.re).collect())
    }

    fn spectral_derivative(&self, f: &[Complex64], order: u32) -> Vec<Complex64> {
        let n = self.n;
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);

        let mut buf = f.to_vec();
        fft.process(&mut buf);
        let ks = self.wavenumbers();
        for (j, c) in buf.iter_mut().enumerate() {
            let k = ks[j];
            let factor = match order {
                // The Nyquist mode has no well-defined sign of k; zeroing it
                // keeps the first-derivative operator skew-adjoint.
                1 => {
                    if n % 2 == 0 && j == n / 2 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        Complex64::new(0.0, k)
                    }
                }
                2 => Complex64::new(-k * k, 0.0),
                _ => unreachable!("only first and second derivatives are provided"),
            };
            *c *= factor;
        }
        ifft.process(&mut buf);
        let scale = 1.0 / n as f64;
        for c in buf.iter_mut() {
            *c *= scale;
        }
        buf
    }

    fn fd4_diff1(&self, f: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let inv = 1.0 / (12.0 * self.dx);
        let mut out = vec![Complex64::default(); n];
        match self.boundary {
            BoundaryKind::Periodic => {
                for i in 0..n {
                    let m2 = f[(i + n - 2) % n];
                    let m1 = f[(i + n - 1) % n];
                    let p1 = f[(i + 1) % n];
                    let p2 = f[(i + 2) % n];
                    out[i] = (m2 - m1 * 8.0 + p1 * 8.0 - p2) * inv;
                }
            }
            BoundaryKind::Vanishing => {
                out[0] =
                    (-f[0] * 25.0 + f[1] * 48.0 - f[2] * 36.0 + f[3] * 16.0 - f[4] * 3.0) * inv;
                out[1] = (-f[0] * 3.0 - f[1] * 10.0 + f[2] * 18.0 - f[3] * 6.0 + f[4]) * inv;
                for i in 2..n - 2 {
                    out[i] = (f[i - 2] - f[i - 1] * 8.0 + f[i + 1] * 8.0 - f[i + 2]) * inv;
                }
                out[n - 2] =
                    (f[n - 1] * 3.0 + f[n - 2] * 10.0 - f[n - 3] * 18.0 + f[n - 4] * 6.0
                        - f[n - 5])
                        * inv;
                out[n - 1] = (f[n - 1] * 25.0 - f[n - 2] * 48.0 + f[n - 3] * 36.0 - f[n - 4] * 16.0
                    + f[n - 5] * 3.0)
                    * inv;
            }
        }
        out
    }

    fn fd4_diff2(&self, f: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let inv = 1.0 / (12.0 * self.dx * self.dx);
        let mut out = vec![Complex64::default(); n];
        let central = |m2: Complex64, m1: Complex64, c: Complex64, p1: Complex64, p2: Complex64| {
            (-m2 + m1 * 16.0 - c * 30.0 + p1 * 16.0 - p2) * inv
        };
        match self.boundary {
            BoundaryKind::Periodic => {
                for i in 0..n {
                    out[i] = central(
                        f[(i + n - 2) % n],
                        f[(i + n - 1) % n],
                        f[i],
                        f[(i + 1) % n],
                        f[(i + 2) % n],
                    );
                }
            }
            BoundaryKind::Vanishing => {
                out[0] = (f[0] * 45.0 - f[1] * 154.0 + f[2] * 214.0 - f[3] * 156.0 + f[4] * 61.0
                    - f[5] * 10.0)
                    * inv;
                out[1] = (f[0] * 10.0 - f[1] * 15.0 - f[2] * 4.0 + f[3] * 14.0 - f[4] * 6.0 + f[5])
                    * inv;
                for i in 2..n - 2 {
                    out[i] = central(f[i - 2], f[i - 1], f[i], f[i + 1], f[i + 2]);
                }
                out[n - 2] = (f[n - 1] * 10.0 - f[n - 2] * 15.0 - f[n - 3] * 4.0 + f[n - 4] * 14.0
                    - f[n - 5] * 6.0
                    + f[n - 6])
                    * inv;
                out[n - 1] = (f[n - 1] * 45.0 - f[n - 2] * 154.0 + f[n - 3] * 214.0
                    - f[n - 4] * 156.0
                    + f[n - 5] * 61.0
                    - f[n - 6] * 10.0)
                    * inv;
            }
        }
        out
    }

    /// Quadrature rule in effect for this grid.
    pub fn quadrature_rule(&self) -> QuadratureRule {
        match self.boundary {
            BoundaryKind::Periodic => QuadratureRule::PeriodicRectangle,
            BoundaryKind::Vanishing => {
                if self.n % 2 == 1 {
                    QuadratureRule::Simpson
                } else {
                    QuadratureRule::Trapezoid
                }
            }
        }
    }

    /// Pointwise quadrature weights so that `integrate(f) = sum_i w_i f_i`.
    pub fn quadrature_weights(&self) -> Vec<f64> {
        let n = self.n;
        let dx = self.dx;
        match self.quadrature_rule() {
            QuadratureRule::PeriodicRectangle => vec![dx; n],
            QuadratureRule::Simpson => {
                let mut w = vec![0.0; n];
                w[0] = dx / 3.0;
                w[n - 1] = dx / 3.0;
                for (i, wi) in w.iter_mut().enumerate().take(n - 1).skip(1) {
                    *wi = if i % 2 == 1 { 4.0 * dx / 3.0 } else { 2.0 * dx / 3.0 };
                }
                w
            }
            QuadratureRule::Trapezoid => {
                let mut w = vec![dx; n];
                w[0] = dx / 2.0;
                w[n - 1] = dx / 2.0;
                w
            }
        }
    }

    /// Definite integral of a complex field over the domain.
    ///
    /// Uses compensated summation so the result is insensitive to the point
    /// count; the reduction order is fixed for reproducibility.
    pub fn integrate(&self, f: &[Complex64]) -> Result<Complex64> {
        self.check_len(f.len())?;
        let w = self.quadrature_weights();
        let re = kahan_sum(f.iter().zip(w.iter()).map(|(fi, wi)| fi.re * wi));
        let im = kahan_sum(f.iter().zip(w.iter()).map(|(fi, wi)| fi.im * wi));
        Ok(Complex64::new(re, im))
    }

    /// Definite integral of a real field over the domain.
    pub fn integrate_real(&self, f: &[f64]) -> Result<f64> {
        self.check_len(f.len())?;
        let w = self.quadrature_weights();
        Ok(kahan_sum(f.iter().zip(w.iter()).map(|(fi, wi)| fi * wi)))
    }

    /// Ratio of the largest endpoint magnitude to the largest field magnitude.
    ///
    /// Meaningful on Vanishing grids, where ratios above [`DECAY_GUARD`]
    /// invalidate the boundary-term-free identities.
    pub fn boundary_decay_ratio(&self, f: &[Complex64]) -> Result<f64> {
        self.check_len(f.len())?;
        let max = f.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
        if max == 0.0 {
            return Ok(0.0);
        }
        Ok(f[0].norm().max(f[self.n - 1].norm()) / max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn periodic_2pi(n: usize) -> Grid {
        Grid::new(n, 0.0, 2.0 * PI, BoundaryKind::Periodic).unwrap()
    }

    #[test]
    fn rejects_tiny_and_inverted_domains() {
        assert!(Grid::new(4, 0.0, 1.0, BoundaryKind::Periodic).is_err());
        assert!(Grid::new(64, 1.0, 1.0, BoundaryKind::Vanishing).is_err());
        assert!(Grid::new(64, 2.0, -2.0, BoundaryKind::Periodic).is_err());
    }

    #[test]
    fn dx_convention_per_boundary_mode() {
        let p = Grid::new(10, 0.0, 1.0, BoundaryKind::Periodic).unwrap();
        assert_abs_diff_eq!(p.dx(), 0.1);
        let v = Grid::new(11, 0.0, 1.0, BoundaryKind::Vanishing).unwrap();
        assert_abs_diff_eq!(v.dx(), 0.1);
        // Periodic grids exclude the right endpoint; Vanishing grids include it.
        assert_abs_diff_eq!(p.point(9), 0.9);
        assert_abs_diff_eq!(v.point(10), 1.0);
    }

    #[test]
    fn spectral_requires_periodic() {
        let v = Grid::new(16, 0.0, 1.0, BoundaryKind::Vanishing).unwrap();
        let f = vec![c(1.0, 0.0); 16];
        assert!(matches!(v.diff1(&f, DerivativeScheme::Spectral), Err(Error::Config(_))));
    }

    #[test]
    fn length_mismatch_is_shape_error() {
        let g = periodic_2pi(16);
        let f = vec![c(1.0, 0.0); 15];
        assert!(matches!(g.diff1(&f, DerivativeScheme::Spectral), Err(Error::Shape { .. })));
        assert!(matches!(g.integrate(&f), Err(Error::Shape { .. })));
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        for (grid, scheme) in [
            (periodic_2pi(32), DerivativeScheme::Spectral),
            (periodic_2pi(32), DerivativeScheme::CentralFd4),
            (Grid::new(33, -1.0, 1.0, BoundaryKind::Vanishing).unwrap(), DerivativeScheme::CentralFd4),
        ] {
            let f = vec![c(3.25, -1.5); grid.n()];
            let d = grid.diff1(&f, scheme).unwrap();
            for v in d {
                assert!(v.norm() < 1e-12, "constant derivative {v}");
            }
        }
    }

    #[test]
    fn spectral_fourier_mode_is_eigenfunction() {
        let n = 64;
        let grid = periodic_2pi(n);
        for k in [1i32, 3, -5] {
            let f: Vec<Complex64> = grid
                .points()
                .iter()
                .map(|&x| (Complex64::i() * k as f64 * x).exp())
                .collect();
            let d1 = grid.diff1(&f, DerivativeScheme::Spectral).unwrap();
            let d2 = grid.diff2(&f, DerivativeScheme::Spectral).unwrap();
            for i in 0..n {
                let expect1 = Complex64::i() * k as f64 * f[i];
                let expect2 = -(k as f64 * k as f64) * f[i];
                assert!((d1[i] - expect1).norm() < 1e-12);
                assert!((d2[i] - expect2).norm() < 1e-11);
            }
        }
    }

    #[test]
    fn fd4_first_derivative_converges_at_order_four() {
        // Max error of d/dx sin(x) should drop ~16x when dx halves.
        let err = |n: usize| {
            let grid = Grid::new(n, 0.0, 2.0 * PI, BoundaryKind::Vanishing).unwrap();
            let f: Vec<Complex64> = grid.points().iter().map(|&x| c(x.sin(), 0.0)).collect();
            let d = grid.diff1(&f, DerivativeScheme::CentralFd4).unwrap();
            grid.points()
                .iter()
                .zip(d.iter())
                .map(|(&x, di)| (di.re - x.cos()).abs())
                .fold(0.0f64, f64::max)
        };
        let e1 = err(65);
        let e2 = err(129);
        let ratio = e1 / e2;
        assert!(
            (10.0..24.0).contains(&ratio),
            "expected ~16x error reduction, got {ratio} (e1={e1:.3e}, e2={e2:.3e})"
        );
    }

    #[test]
    fn fd4_stencils_are_exact_on_quartic() {
        // 4th-order stencils (including the one-sided rows) are exact for x^4.
        let grid = Grid::new(17, -1.0, 1.0, BoundaryKind::Vanishing).unwrap();
        let f: Vec<Complex64> = grid.points().iter().map(|&x| c(x.powi(4), 0.0)).collect();
        let d1 = grid.diff1(&f, DerivativeScheme::CentralFd4).unwrap();
        let d2 = grid.diff2(&f, DerivativeScheme::CentralFd4).unwrap();
        for (i, &x) in grid.points().iter().enumerate() {
            assert_abs_diff_eq!(d1[i].re, 4.0 * x.powi(3), epsilon = 1e-11);
            assert_abs_diff_eq!(d2[i].re, 12.0 * x.powi(2), epsilon = 1e-10);
        }
    }

    #[test]
    fn diff2_of_quadratic_on_vanishing_interior() {
        let grid = Grid::new(33, -2.0, 2.0, BoundaryKind::Vanishing).unwrap();
        let f: Vec<Complex64> = grid.points().iter().map(|&x| c(x * x, 0.0)).collect();
        let d2 = grid.diff2(&f, DerivativeScheme::CentralFd4).unwrap();
        for v in d2 {
            assert_abs_diff_eq!(v.re, 2.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn spectral_composition_matches_diff2() {
        let n = 256;
        let grid = periodic_2pi(n);
        // Band-limited field with no Nyquist content.
        let f: Vec<Complex64> = grid
            .points()
            .iter()
            .map(|&x| (Complex64::i() * x).exp() + (-Complex64::i() * x).exp() * 0.5)
            .collect();
        let sup = f.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
        let dd = grid
            .diff1(&grid.diff1(&f, DerivativeScheme::Spectral).unwrap(), DerivativeScheme::Spectral)
            .unwrap();
        let d2 = grid.diff2(&f, DerivativeScheme::Spectral).unwrap();
        for i in 0..n {
            assert!(
                (dd[i] - d2[i]).norm() <= 10.0 * f64::EPSILON * sup,
                "composition mismatch at {i}: {:e}",
                (dd[i] - d2[i]).norm()
            );
        }
    }

    #[test]
    fn unit_constant_integrates_to_domain_length() {
        let grid = Grid::new(101, 0.0, 1.0, BoundaryKind::Vanishing).unwrap();
        let f = vec![c(1.0, 0.0); 101];
        let val = grid.integrate(&f).unwrap();
        assert_abs_diff_eq!(val.re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(val.im, 0.0, epsilon = 1e-14);
        assert_eq!(grid.quadrature_rule(), QuadratureRule::Simpson);
    }

    #[test]
    fn trapezoid_fallback_for_even_vanishing_grids() {
        let grid = Grid::new(100, 0.0, 1.0, BoundaryKind::Vanishing).unwrap();
        assert_eq!(grid.quadrature_rule(), QuadratureRule::Trapezoid);
        assert_eq!(grid.quadrature_rule().order(), 2);
        let f = vec![c(2.0, 0.0); 100];
        assert_abs_diff_eq!(grid.integrate(&f).unwrap().re, 2.0, epsilon = 1e-14);
    }

    #[test]
    fn periodic_quadrature_of_sin_squared() {
        let grid = periodic_2pi(64);
        let f: Vec<Complex64> = grid.points().iter().map(|&x| c(x.sin().powi(2), 0.0)).collect();
        assert_abs_diff_eq!(grid.integrate(&f).unwrap().re, PI, epsilon = 1e-13);
    }

    #[test]
    fn fourier_modes_integrate_to_zero_on_periodic_grids() {
        let grid = periodic_2pi(32);
        for k in [1i32, 2, 7, -3] {
            let f: Vec<Complex64> = grid
                .points()
                .iter()
                .map(|&x| (Complex64::i() * k as f64 * x).exp())
                .collect();
            assert!(grid.integrate(&f).unwrap().norm() < 1e-13);
        }
    }

    #[test]
    fn gaussian_integral_matches_high_resolution_reference() {
        // Reference computed on a 4x finer grid of the same family.
        let coarse = Grid::new(257, -10.0, 10.0, BoundaryKind::Vanishing).unwrap();
        let fine = Grid::new(1025, -10.0, 10.0, BoundaryKind::Vanishing).unwrap();
        let sample = |g: &Grid| -> Vec<Complex64> {
            g.points().iter().map(|&x| c((-x * x).exp(), 0.0)).collect()
        };
        let vc = coarse.integrate(&sample(&coarse)).unwrap().re;
        let vf = fine.integrate(&sample(&fine)).unwrap().re;
        assert_abs_diff_eq!(vc, vf, epsilon = 1e-12);
        assert_abs_diff_eq!(vc, PI.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn boundary_decay_ratio_flags_undecayed_fields() {
        let grid = Grid::new(33, -5.0, 5.0, BoundaryKind::Vanishing).unwrap();
        let decayed: Vec<Complex64> =
            grid.points().iter().map(|&x| c((-x * x).exp(), 0.0)).collect();
        assert!(grid.boundary_decay_ratio(&decayed).unwrap() < DECAY_GUARD);
        let flat = vec![c(1.0, 0.0); 33];
        assert!(grid.boundary_decay_ratio(&flat).unwrap() > DECAY_GUARD);
    }
}
