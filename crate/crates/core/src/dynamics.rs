//! Potentials, initial states, unitary propagators, and closed-form
//! reference trajectories.
//!
//! Two propagators are provided. Crank-Nicolson applies the Cayley transform
//! of the Hamiltonian: on Periodic grids the spectral Hamiltonian is used and
//! the implicit step is solved by a kinetic-preconditioned fixed-point
//! iteration, so the frames satisfy the spectrally discretized equation and
//! residual tolerances are governed by the time step alone; on Vanishing
//! grids a 2nd-order tridiagonal Hamiltonian is solved directly and the
//! reduced spatial order is recorded on the trajectory. Split-step applies
//! Strang-split exponentials and requires a Periodic grid.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{BoundaryKind, Grid, DECAY_GUARD};
use crate::observables::PhysicalConstants;
use crate::wavefunction::{Trajectory, TrajectoryOrigin, Wavefunction};

/// Relative update below which the implicit Crank-Nicolson solve is accepted.
pub const CN_SOLVER_TOL: f64 = 1e-14;

/// Accuracy guard on the time step: `dt * max |V| <= 0.5` keeps the O(dt^2)
/// error regime all residual tolerances are derived in (Crank-Nicolson itself
/// is A-stable).
pub const DT_POTENTIAL_GUARD: f64 = 0.5;

const MAX_FIXED_POINT_ITERS: usize = 500;

/// Declarative description of a static external potential `V(x)`.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec {
    Free,
    /// `V = m omega^2 x^2 / 2`
    Harmonic { omega: f64 },
    /// `V = -depth` for `|x - midpoint| <= width/2`, zero outside.
    SquareWell { depth: f64, width: f64 },
    /// `V = height` for `|x - center| <= width/2`, zero outside.
    Barrier { height: f64, width: f64, center: f64 },
    /// Arbitrary sampled values, one per grid point.
    Custom(Vec<f64>),
}

impl PotentialSpec {
    /// Evaluate the potential on every grid point.
    pub fn sample(&self, grid: &Grid, c: &PhysicalConstants) -> Result<Vec<f64>> {
        match self {
            PotentialSpec::Free => Ok(vec![0.0; grid.n()]),
            PotentialSpec::Harmonic { omega } => {
                if !omega.is_finite() || *omega <= 0.0 {
                    return Err(Error::Config(format!("harmonic omega must be positive, got {omega}")));
                }
                let pref = 0.5 * c.mass * omega * omega;
                Ok(grid.points().iter().map(|&x| pref * x * x).collect())
            }
            PotentialSpec::SquareWell { depth, width } => {
                if !depth.is_finite() || !width.is_finite() || *width <= 0.0 {
                    return Err(Error::Config(format!(
                        "square well needs finite depth and positive width, got depth={depth}, width={width}"
                    )));
                }
                let mid = 0.5 * (grid.x_min() + grid.x_max());
                Ok(grid
                    .points()
                    .iter()
                    .map(|&x| if (x - mid).abs() <= 0.5 * width { -depth } else { 0.0 })
                    .collect())
            }
            PotentialSpec::Barrier { height, width, center } => {
                if !height.is_finite() || !width.is_finite() || !center.is_finite() || *width <= 0.0
                {
                    return Err(Error::Config(format!(
                        "barrier needs finite parameters and positive width, got height={height}, width={width}, center={center}"
                    )));
                }
                Ok(grid
                    .points()
                    .iter()
                    .map(|&x| if (x - center).abs() <= 0.5 * width { *height } else { 0.0 })
                    .collect())
            }
            PotentialSpec::Custom(values) => {
                if values.len() != grid.n() {
                    return Err(Error::shape(grid.n(), values.len()));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Config("custom potential contains non-finite values".into()));
                }
                Ok(values.clone())
            }
        }
    }
}

/// Test-state factory specification.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialStateSpec {
    /// `e^{ikx} / sqrt(L)`; on Periodic grids `k` must be a lattice mode
    /// `2 pi m / L`.
    PlaneWave { k: f64 },
    /// `exp(-(x-x0)^2 / (4 sigma^2)) e^{i k0 x}`, normalized; `sigma` is the
    /// position standard deviation of `|psi|^2`.
    Gaussian { x0: f64, sigma: f64, k0: f64 },
    /// Harmonic-oscillator eigenstate `n` for frequency `omega`.
    HarmonicEigen { n: usize, omega: f64 },
    /// Real-coefficient combination of sub-states, renormalized.
    Superposition(Vec<(f64, InitialStateSpec)>),
}

/// Build and normalize the requested state on the grid.
pub fn build_initial_state(
    spec: &InitialStateSpec,
    grid: &Arc<Grid>,
    c: &PhysicalConstants,
) -> Result<Wavefunction> {
    let psi = match spec {
        InitialStateSpec::PlaneWave { k } => {
            if grid.boundary() == BoundaryKind::Periodic {
                let mode = k * grid.length() / (2.0 * PI);
                if (mode - mode.round()).abs() > 1e-9 {
                    return Err(Error::Config(format!(
                        "plane wave k = {k} is not a lattice mode of the periodic domain \
                         (k L / 2 pi = {mode} is not an integer)"
                    )));
                }
            }
            let length = grid.length();
            let k = *k;
            Wavefunction::from_fn(Arc::clone(grid), move |x| {
                (Complex64::i() * k * x).exp() / length.sqrt()
            })
        }
        InitialStateSpec::Gaussian { x0, sigma, k0 } => {
            if !(*sigma >= 3.0 * grid.dx()) {
                return Err(Error::Config(format!(
                    "gaussian sigma = {sigma} must be at least 3 dx = {}",
                    3.0 * grid.dx()
                )));
            }
            let (x0, sigma, k0) = (*x0, *sigma, *k0);
            let psi = Wavefunction::from_fn(Arc::clone(grid), move |x| {
                let envelope = (-(x - x0).powi(2) / (4.0 * sigma * sigma)).exp();
                envelope * (Complex64::i() * k0 * x).exp()
            });
            let decay = grid.boundary_decay_ratio(psi.values())?;
            if decay > DECAY_GUARD {
                return Err(Error::Config(format!(
                    "gaussian support is not decayed at the domain boundary \
                     (endpoint/max ratio {decay:.2e} exceeds {DECAY_GUARD:.0e})"
                )));
            }
            psi
        }
        InitialStateSpec::HarmonicEigen { n, omega } => {
            if !omega.is_finite() || *omega <= 0.0 {
                return Err(Error::Config(format!("eigenstate omega must be positive, got {omega}")));
            }
            let psi = harmonic_eigenstate_unnormalized(grid, c, *n, *omega);
            let decay = grid.boundary_decay_ratio(psi.values())?;
            if decay > DECAY_GUARD {
                return Err(Error::Config(format!(
                    "eigenstate n = {n} does not fit the domain \
                     (endpoint/max ratio {decay:.2e} exceeds {DECAY_GUARD:.0e})"
                )));
            }
            psi
        }
        InitialStateSpec::Superposition(parts) => {
            if parts.is_empty() {
                return Err(Error::Degenerate("superposition has no components".into()));
            }
            let mut acc = vec![Complex64::default(); grid.n()];
            for (coeff, part) in parts {
                let component = build_initial_state(part, grid, c)?;
                for (a, v) in acc.iter_mut().zip(component.values()) {
                    *a += coeff * v;
                }
            }
            Wavefunction::new(Arc::clone(grid), acc)?
        }
    };
    psi.normalize()
}

/// Harmonic-oscillator eigenfunction via the normalized Hermite-function
/// recurrence (stable for the mode numbers used here).
fn harmonic_eigenstate_unnormalized(
    grid: &Arc<Grid>,
    c: &PhysicalConstants,
    n: usize,
    omega: f64,
) -> Wavefunction {
    let scale = (c.mass * omega / c.hbar).sqrt();
    let amp = (scale * scale / PI).powf(0.25);
    Wavefunction::from_fn(Arc::clone(grid), move |x| {
        let xi = scale * x;
        let mut prev = 0.0;
        let mut cur = amp * (-0.5 * xi * xi).exp();
        for k in 0..n {
            let next = (2.0 / (k as f64 + 1.0)).sqrt() * xi * cur
                - (k as f64 / (k as f64 + 1.0)).sqrt() * prev;
            prev = cur;
            cur = next;
        }
        Complex64::new(cur, 0.0)
    })
}

/// Time-stepping method.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropagationMethod {
    CrankNicolson,
    SplitStepSpectral,
}

/// Propagation request: method, step, and number of steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorConfig {
    pub method: PropagationMethod,
    pub dt: f64,
    pub steps: usize,
}

impl PropagatorConfig {
    fn validate(&self, grid: &Grid, potential: &[f64]) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if self.steps < 2 {
            return Err(Error::Config(format!(
                "need at least 2 steps to form a trajectory, got {}",
                self.steps
            )));
        }
        let vmax = potential.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        if self.dt * vmax > DT_POTENTIAL_GUARD {
            return Err(Error::Config(format!(
                "dt * max|V| = {:.3e} exceeds the accuracy guard {DT_POTENTIAL_GUARD}",
                self.dt * vmax
            )));
        }
        if self.method == PropagationMethod::SplitStepSpectral
            && grid.boundary() != BoundaryKind::Periodic
        {
            return Err(Error::Config(
                "split-step spectral propagation requires a Periodic grid".into(),
            ));
        }
        Ok(())
    }
}

/// Cached FFT plans and kinetic multipliers for one grid.
struct SpectralEngine {
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    /// `hbar^2 k^2 / 2m` per FFT bin.
    kinetic: Vec<f64>,
    n: usize,
}

impl SpectralEngine {
    fn new(grid: &Grid, c: &PhysicalConstants) -> Self {
        let mut planner = FftPlanner::new();
        let n = grid.n();
        let kinetic = grid
            .wavenumbers()
            .iter()
            .map(|&k| c.hbar * c.hbar * k * k / (2.0 * c.mass))
            .collect();
        SpectralEngine {
            fft: planner.plan_fft_forward(n),
            ifft: planner.plan_fft_inverse(n),
            kinetic,
            n,
        }
    }

    fn forward(&self, buf: &mut [Complex64]) {
        self.fft.process(buf);
    }

    fn inverse(&self, buf: &mut [Complex64]) {
        self.ifft.process(buf);
        let scale = 1.0 / self.n as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }

    /// `K psi` with the spectral kinetic operator.
    fn apply_kinetic(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let mut buf = psi.to_vec();
        self.forward(&mut buf);
        for (v, &k) in buf.iter_mut().zip(self.kinetic.iter()) {
            *v *= k;
        }
        self.inverse(&mut buf);
        buf
    }

    /// `(1 + i alpha K)^{-1} w`, diagonal in Fourier space.
    fn solve_kinetic(&self, w: &[Complex64], alpha: f64) -> Vec<Complex64> {
        let mut buf = w.to_vec();
        self.forward(&mut buf);
        for (v, &k) in buf.iter_mut().zip(self.kinetic.iter()) {
            *v /= Complex64::new(1.0, alpha * k);
        }
        self.inverse(&mut buf);
        buf
    }
}

fn l2(values: &[Complex64]) -> f64 {
    values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Propagate `psi0` under the static potential; the returned trajectory has
/// `steps + 1` frames including the initial one.
pub fn propagate(
    psi0: &Wavefunction,
    pot: &PotentialSpec,
    cfg: &PropagatorConfig,
    c: &PhysicalConstants,
) -> Result<Trajectory> {
    let grid = psi0.grid();
    let norm = psi0.norm_sq();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::Degenerate(format!(
            "initial state must be normalized, got norm^2 = {norm}"
        )));
    }
    let v = pot.sample(grid, c)?;
    cfg.validate(grid, &v)?;
    match cfg.method {
        PropagationMethod::CrankNicolson => match grid.boundary() {
            BoundaryKind::Periodic => cn_spectral(psi0, &v, cfg, c),
            BoundaryKind::Vanishing => cn_tridiagonal(psi0, &v, cfg, c),
        },
        PropagationMethod::SplitStepSpectral => split_step(psi0, &v, cfg, c),
    }
}

fn cn_spectral(
    psi0: &Wavefunction,
    v: &[f64],
    cfg: &PropagatorConfig,
    c: &PhysicalConstants,
) -> Result<Trajectory> {
    let grid = psi0.grid_arc();
    let engine = SpectralEngine::new(&grid, c);
    let alpha = cfg.dt / (2.0 * c.hbar);
    let n = grid.n();

    let mut state = psi0.values().to_vec();
    let mut frames = Vec::with_capacity(cfg.steps + 1);
    frames.push(psi0.clone());

    for _ in 0..cfg.steps {
        // b = (1 - i alpha H) psi
        let kpsi = engine.apply_kinetic(&state);
        let mut b = vec![Complex64::default(); n];
        for i in 0..n {
            let hpsi = kpsi[i] + v[i] * state[i];
            b[i] = state[i] - Complex64::i() * alpha * hpsi;
        }
        // Solve (1 + i alpha H) u = b; the kinetic part is inverted exactly in
        // Fourier space, the potential part by fixed-point iteration with
        // contraction rate <= alpha * max|V|.
        let b_norm = l2(&b).max(f64::MIN_POSITIVE);
        let mut u = engine.solve_kinetic(&b, alpha);
        let mut converged = false;
        let mut rhs = vec![Complex64::default(); n];
        for _ in 0..MAX_FIXED_POINT_ITERS {
            for i in 0..n {
                rhs[i] = b[i] - Complex64::i() * alpha * v[i] * u[i];
            }
            let u_next = engine.solve_kinetic(&rhs, alpha);
            let delta: f64 =
                u_next.iter().zip(u.iter()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
            u = u_next;
            if delta <= CN_SOLVER_TOL * b_norm {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Config(
                "Crank-Nicolson implicit solve did not converge; reduce dt or the potential magnitude"
                    .into(),
            ));
        }
        state = u;
        frames.push(Wavefunction::new(Arc::clone(&grid), state.clone())?);
    }
    Trajectory::new(cfg.dt, frames, TrajectoryOrigin::CrankNicolsonSpectral)
}

fn cn_tridiagonal(
    psi0: &Wavefunction,
    v: &[f64],
    cfg: &PropagatorConfig,
    c: &PhysicalConstants,
) -> Result<Trajectory> {
    let grid = psi0.grid_arc();
    let n = grid.n();
    let alpha = cfg.dt / (2.0 * c.hbar);
    let hop = c.kinetic_prefactor() / (grid.dx() * grid.dx());

    // A = 1 + i alpha H, with H the FD2 Hamiltonian and vanishing boundaries.
    let off = -Complex64::i() * alpha * (-hop);
    let diag: Vec<Complex64> = v
        .iter()
        .map(|&vi| Complex64::new(1.0, 0.0) + Complex64::i() * alpha * (2.0 * hop + vi))
        .collect();

    let mut state = psi0.values().to_vec();
    let mut frames = Vec::with_capacity(cfg.steps + 1);
    frames.push(psi0.clone());

    let mut c_prime = vec![Complex64::default(); n];
    let mut d_prime = vec![Complex64::default(); n];
    for _ in 0..cfg.steps {
        // rhs = (1 - i alpha H) psi, psi vanishing outside the grid
        let mut rhs = vec![Complex64::default(); n];
        for i in 0..n {
            let left = if i > 0 { state[i - 1] } else { Complex64::default() };
            let right = if i + 1 < n { state[i + 1] } else { Complex64::default() };
            let hpsi = (2.0 * hop + v[i]) * state[i] - hop * (left + right);
            rhs[i] = state[i] - Complex64::i() * alpha * hpsi;
        }
        // Thomas algorithm
        c_prime[0] = off / diag[0];
        d_prime[0] = rhs[0] / diag[0];
        for i in 1..n {
            let m = diag[i] - off * c_prime[i - 1];
            c_prime[i] = off / m;
            d_prime[i] = (rhs[i] - off * d_prime[i - 1]) / m;
        }
        state[n - 1] = d_prime[n - 1];
        for i in (0..n - 1).rev() {
            state[i] = d_prime[i] - c_prime[i] * state[i + 1];
        }
        frames.push(Wavefunction::new(Arc::clone(&grid), state.clone())?);
    }
    Trajectory::new(cfg.dt, frames, TrajectoryOrigin::CrankNicolsonFd2)
}

fn split_step(
    psi0: &Wavefunction,
    v: &[f64],
    cfg: &PropagatorConfig,
    c: &PhysicalConstants,
) -> Result<Trajectory> {
    let grid = psi0.grid_arc();
    let engine = SpectralEngine::new(&grid, c);
    let half_v: Vec<Complex64> = v
        .iter()
        .map(|&vi| (-Complex64::i() * vi * cfg.dt / (2.0 * c.hbar)).exp())
        .collect();
    let kin_phase: Vec<Complex64> = engine
        .kinetic
        .iter()
        .map(|&k| (-Complex64::i() * k * cfg.dt / c.hbar).exp())
        .collect();

    let mut state = psi0.values().to_vec();
    let mut frames = Vec::with_capacity(cfg.steps + 1);
    frames.push(psi0.clone());
    for _ in 0..cfg.steps {
        for (s, h) in state.iter_mut().zip(half_v.iter()) {
            *s *= h;
        }
        engine.forward(&mut state);
        for (s, k) in state.iter_mut().zip(kin_phase.iter()) {
            *s *= k;
        }
        engine.inverse(&mut state);
        for (s, h) in state.iter_mut().zip(half_v.iter()) {
            *s *= h;
        }
        frames.push(Wavefunction::new(Arc::clone(&grid), state.clone())?);
    }
    Trajectory::new(cfg.dt, frames, TrajectoryOrigin::SplitStep)
}

/// Closed-form solution families used as ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReferenceKind {
    /// Dispersing free packet launched from `(x0, sigma, k0)`.
    FreeGaussian { x0: f64, sigma: f64, k0: f64 },
    /// Stationary eigenstate rotation `psi_n e^{-i E_n t / hbar}`.
    HarmonicEigen { n: usize, omega: f64 },
    /// Coherent state released at rest from `x0`; its center follows the
    /// classical trajectory `x0 cos(omega t)`.
    HarmonicCoherent { x0: f64, omega: f64 },
}

/// Sample a closed-form solution at `frames` uniformly spaced times.
pub fn analytic_reference(
    kind: ReferenceKind,
    grid: &Arc<Grid>,
    c: &PhysicalConstants,
    dt: f64,
    frames: usize,
) -> Result<Trajectory> {
    if frames < 3 {
        return Err(Error::shape(3, frames));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Config(format!("dt must be positive, got {dt}")));
    }
    let mut out = Vec::with_capacity(frames);
    for j in 0..frames {
        let t = dt * j as f64;
        let frame = match kind {
            ReferenceKind::FreeGaussian { x0, sigma, k0 } => {
                if !(sigma >= 3.0 * grid.dx()) {
                    return Err(Error::Config(format!(
                        "gaussian sigma = {sigma} must be at least 3 dx = {}",
                        3.0 * grid.dx()
                    )));
                }
                let a = Complex64::new(sigma * sigma, c.hbar * t / (2.0 * c.mass));
                let amp = (2.0 * PI * sigma * sigma).powf(-0.25) * sigma / a.sqrt();
                let v = c.hbar * k0 / c.mass;
                let phase_rate = c.hbar * k0 * k0 / (2.0 * c.mass);
                Wavefunction::from_fn(Arc::clone(grid), move |x| {
                    let b = x - x0 - v * t;
                    amp * (-b * b / (4.0 * a) + Complex64::i() * (k0 * x - phase_rate * t)).exp()
                })
            }
            ReferenceKind::HarmonicEigen { n, omega } => {
                let e_n = c.hbar * omega * (n as f64 + 0.5);
                let base = harmonic_eigenstate_unnormalized(grid, c, n, omega);
                base.scaled((-Complex64::i() * e_n * t / c.hbar).exp())
            }
            ReferenceKind::HarmonicCoherent { x0, omega } => {
                let xc = x0 * (omega * t).cos();
                let pc = -c.mass * omega * x0 * (omega * t).sin();
                let gamma = -0.5 * omega * t
                    - c.mass * omega * x0 * x0 / (4.0 * c.hbar) * (2.0 * omega * t).sin();
                let width = c.mass * omega / (2.0 * c.hbar);
                let amp = (c.mass * omega / (PI * c.hbar)).powf(0.25);
                let hbar = c.hbar;
                Wavefunction::from_fn(Arc::clone(grid), move |x| {
                    let u = x - xc;
                    amp * Complex64::new(-width * u * u, pc * u / hbar + gamma).exp()
                })
            }
        };
        let decay = grid.boundary_decay_ratio(frame.values())?;
        if decay > DECAY_GUARD {
            return Err(Error::Config(format!(
                "reference solution leaves the domain support at t = {t} \
                 (endpoint/max ratio {decay:.2e} exceeds {DECAY_GUARD:.0e})"
            )));
        }
        out.push(frame);
    }
    Trajectory::new(dt, out, TrajectoryOrigin::Analytic)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn consts() -> PhysicalConstants {
        PhysicalConstants::default()
    }

    fn line_grid() -> Arc<Grid> {
        Arc::new(Grid::new(256, -20.0, 20.0, BoundaryKind::Periodic).unwrap())
    }

    #[test]
    fn potential_shapes() {
        let grid = line_grid();
        let c = consts();
        let harmonic = PotentialSpec::Harmonic { omega: 2.0 }.sample(&grid, &c).unwrap();
        let i0 = 128; // x = 0
        assert_abs_diff_eq!(harmonic[i0], 0.0);
        assert_abs_diff_eq!(harmonic[0], 0.5 * 4.0 * 400.0);

        let well = PotentialSpec::SquareWell { depth: 3.0, width: 4.0 }.sample(&grid, &c).unwrap();
        assert_abs_diff_eq!(well[i0], -3.0);
        assert_abs_diff_eq!(well[0], 0.0);

        let barrier = PotentialSpec::Barrier { height: 5.0, width: 2.0, center: 10.0 }
            .sample(&grid, &c)
            .unwrap();
        assert_abs_diff_eq!(barrier[i0], 0.0);
        let i10 = 192; // x = 10
        assert_abs_diff_eq!(barrier[i10], 5.0);

        assert!(matches!(
            PotentialSpec::Custom(vec![0.0; 3]).sample(&grid, &c),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn plane_wave_must_be_a_lattice_mode_on_periodic_grids() {
        let grid = line_grid();
        let k_ok = 2.0 * PI * 3.0 / grid.length();
        assert!(build_initial_state(&InitialStateSpec::PlaneWave { k: k_ok }, &grid, &consts())
            .is_ok());
        assert!(matches!(
            build_initial_state(&InitialStateSpec::PlaneWave { k: 0.33 }, &grid, &consts()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn gaussian_width_and_support_guards() {
        let grid = line_grid();
        let c = consts();
        let too_narrow = InitialStateSpec::Gaussian { x0: 0.0, sigma: 0.1, k0: 0.0 };
        assert!(matches!(build_initial_state(&too_narrow, &grid, &c), Err(Error::Config(_))));
        let off_domain = InitialStateSpec::Gaussian { x0: 19.5, sigma: 1.0, k0: 0.0 };
        assert!(matches!(build_initial_state(&off_domain, &grid, &c), Err(Error::Config(_))));
        let fine = InitialStateSpec::Gaussian { x0: 0.0, sigma: 1.0, k0: 1.0 };
        let psi = build_initial_state(&fine, &grid, &c).unwrap();
        assert_abs_diff_eq!(psi.norm_sq(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn superposition_of_eigenstates_is_normalized() {
        let grid = line_grid();
        let spec = InitialStateSpec::Superposition(vec![
            (1.0, InitialStateSpec::HarmonicEigen { n: 0, omega: 1.0 }),
            (1.0, InitialStateSpec::HarmonicEigen { n: 1, omega: 1.0 }),
        ]);
        let psi = build_initial_state(&spec, &grid, &consts()).unwrap();
        assert_abs_diff_eq!(psi.norm_sq(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn stability_guard_rejects_large_dt_times_potential() {
        let grid = line_grid();
        let psi = build_initial_state(
            &InitialStateSpec::HarmonicEigen { n: 0, omega: 1.0 },
            &grid,
            &consts(),
        )
        .unwrap();
        let cfg = PropagatorConfig { method: PropagationMethod::CrankNicolson, dt: 0.01, steps: 4 };
        // max V = 200 on this domain, dt * 200 = 2 > 0.5.
        assert!(matches!(
            propagate(&psi, &PotentialSpec::Harmonic { omega: 1.0 }, &cfg, &consts()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn split_step_requires_periodic_grid() {
        let grid = Arc::new(Grid::new(128, -20.0, 20.0, BoundaryKind::Vanishing).unwrap());
        let psi = build_initial_state(
            &InitialStateSpec::Gaussian { x0: 0.0, sigma: 1.0, k0: 0.0 },
            &grid,
            &consts(),
        )
        .unwrap();
        let cfg =
            PropagatorConfig { method: PropagationMethod::SplitStepSpectral, dt: 1e-3, steps: 4 };
        assert!(matches!(
            propagate(&psi, &PotentialSpec::Free, &cfg, &consts()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn unnormalized_input_is_rejected() {
        let grid = line_grid();
        let psi = build_initial_state(
            &InitialStateSpec::Gaussian { x0: 0.0, sigma: 1.0, k0: 0.0 },
            &grid,
            &consts(),
        )
        .unwrap()
        .scaled(Complex64::new(1.5, 0.0));
        let cfg = PropagatorConfig { method: PropagationMethod::CrankNicolson, dt: 1e-3, steps: 4 };
        assert!(matches!(
            propagate(&psi, &PotentialSpec::Free, &cfg, &consts()),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn split_step_free_plane_wave_is_exact() {
        let grid = line_grid();
        let c = consts();
        let k = 2.0 * PI * 4.0 / grid.length();
        let psi = build_initial_state(&InitialStateSpec::PlaneWave { k }, &grid, &c).unwrap();
        let cfg =
            PropagatorConfig { method: PropagationMethod::SplitStepSpectral, dt: 1e-2, steps: 20 };
        let traj = propagate(&psi, &PotentialSpec::Free, &cfg, &c).unwrap();
        let omega = 0.5 * k * k;
        let t = traj.duration();
        for (i, v) in traj.frame(traj.len() - 1).values().iter().enumerate() {
            let expect = psi.values()[i] * (-Complex64::i() * omega * t).exp();
            assert!((v - expect).norm() < 1e-12, "plane wave drifted at point {i}");
        }
    }

    #[test]
    fn free_gaussian_reference_starts_from_the_initial_spec() {
        let grid = line_grid();
        let c = consts();
        let kind = ReferenceKind::FreeGaussian { x0: -1.0, sigma: 1.2, k0: 0.7 };
        let traj = analytic_reference(kind, &grid, &c, 1e-3, 3).unwrap();
        let direct = build_initial_state(
            &InitialStateSpec::Gaussian { x0: -1.0, sigma: 1.2, k0: 0.7 },
            &grid,
            &c,
        )
        .unwrap();
        for (a, b) in traj.frame(0).values().iter().zip(direct.values()) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn harmonic_eigen_reference_is_a_stationary_phase_rotation() {
        let grid = line_grid();
        let c = consts();
        let traj = analytic_reference(
            ReferenceKind::HarmonicEigen { n: 0, omega: 1.0 },
            &grid,
            &c,
            0.05,
            4,
        )
        .unwrap();
        let base = traj.frame(0);
        let t = traj.time(3);
        let phase = (-Complex64::i() * 0.5 * t).exp();
        for (a, b) in traj.frame(3).values().iter().zip(base.values()) {
            assert!((a - b * phase).norm() < 1e-12);
        }
    }

    #[test]
    fn coherent_state_center_follows_the_classical_trajectory() {
        let grid = line_grid();
        let c = consts();
        let x0 = 1.5;
        let omega = 1.0;
        let traj = analytic_reference(
            ReferenceKind::HarmonicCoherent { x0, omega },
            &grid,
            &c,
            0.1,
            8,
        )
        .unwrap();
        let xs = grid.points();
        for j in 0..traj.len() {
            let density = traj.frame(j).density();
            let weighted: Vec<f64> =
                xs.iter().zip(density.iter()).map(|(&x, &d)| x * d).collect();
            let center = grid.integrate_real(&weighted).unwrap();
            assert_abs_diff_eq!(center, x0 * (omega * traj.time(j)).cos(), epsilon = 1e-10);
        }
    }

    #[test]
    fn reference_rejects_solutions_that_leave_the_domain() {
        let tight = Arc::new(Grid::new(64, -4.0, 4.0, BoundaryKind::Periodic).unwrap());
        let res = analytic_reference(
            ReferenceKind::HarmonicCoherent { x0: 3.5, omega: 1.0 },
            &tight,
            &consts(),
            0.1,
            5,
        );
        assert!(matches!(res, Err(Error::Config(_))));
    }
}
