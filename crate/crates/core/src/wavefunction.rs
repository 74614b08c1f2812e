//! Complex wavefunction container, node-safe polar decomposition, and
//! time-ordered trajectories.
//!
//! The polar form never materializes the phase itself: every phase-derived
//! quantity is expressed through the quotient `Im(psi* psi_x) / R^2`, which is
//! gauge invariant and free of branch cuts. At nodes of `R` the quotient is
//! numerically meaningless, so those points are masked and the phase gradient
//! is set to zero there.

use num_complex::Complex64;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{DerivativeScheme, Grid};

/// Default node threshold, as a fraction of `max R^2`. Below this the phase
/// quotient carries no information; masked points contribute negligibly to
/// every integral in the crate.
pub const DEFAULT_NODE_THRESHOLD: f64 = 1e-12;

/// Largest tolerated deviation of `norm^2` from 1 for trajectory frames.
pub const FRAME_NORM_TOL: f64 = 2e-6;

/// Order of the discrete time-derivative stencils (central and one-sided).
pub const TIME_DERIVATIVE_ORDER: u32 = 2;

/// Complex field on a grid, normalized to `integral |psi|^2 dx = 1` when
/// produced by [`Wavefunction::normalize`].
#[derive(Debug, Clone)]
pub struct Wavefunction {
    grid: Arc<Grid>,
    values: Vec<Complex64>,
}

impl Wavefunction {
    pub fn new(grid: Arc<Grid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::shape(grid.n(), values.len()));
        }
        Ok(Wavefunction { grid, values })
    }

    /// Sample a closure over the grid points.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.points().iter().map(|&x| f(x)).collect();
        Wavefunction { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn grid_arc(&self) -> Arc<Grid> {
        Arc::clone(&self.grid)
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Probability density `|psi|^2` per point.
    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|c| c.norm_sqr()).collect()
    }

    /// `integral |psi|^2 dx`.
    pub fn norm_sq(&self) -> f64 {
        self.grid.integrate_real(&self.density()).expect("length fixed at construction")
    }

    /// Rescale so that `norm^2 = 1`.
    pub fn normalize(&self) -> Result<Wavefunction> {
        let n2 = self.norm_sq();
        if !(n2 > 0.0) || !n2.is_finite() {
            return Err(Error::Degenerate(format!(
                "cannot normalize field with norm^2 = {n2}"
            )));
        }
        Ok(self.scaled(Complex64::new(1.0 / n2.sqrt(), 0.0)))
    }

    /// Multiply every value by `factor`.
    pub fn scaled(&self, factor: Complex64) -> Wavefunction {
        Wavefunction {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// Decompose into `R^2` and the phase gradient, masking points where
    /// `R^2 < node_threshold * max R^2`.
    pub fn polar_decompose(
        &self,
        node_threshold: f64,
        scheme: DerivativeScheme,
    ) -> Result<PolarForm> {
        if !(node_threshold > 0.0 && node_threshold < 1.0) {
            return Err(Error::Config(format!(
                "node threshold must lie in (0, 1), got {node_threshold}"
            )));
        }
        let amplitude_sq = self.density();
        let max = amplitude_sq.iter().fold(0.0f64, |a, &b| a.max(b));
        let cutoff = node_threshold * max;
        let dpsi = self.grid.diff1(&self.values, scheme)?;
        let n = self.grid.n();
        let mut phase_grad_x = vec![0.0; n];
        let mut node_mask = vec![false; n];
        for i in 0..n {
            if amplitude_sq[i] <= cutoff {
                node_mask[i] = true;
            } else {
                phase_grad_x[i] = (self.values[i].conj() * dpsi[i]).im / amplitude_sq[i];
            }
        }
        Ok(PolarForm { grid: Arc::clone(&self.grid), amplitude_sq, phase_grad_x, node_mask })
    }
}

/// Amplitude-squared and phase-gradient fields of a wavefunction.
#[derive(Debug, Clone)]
pub struct PolarForm {
    pub grid: Arc<Grid>,
    /// `R^2 = |psi|^2`, nonnegative everywhere.
    pub amplitude_sq: Vec<f64>,
    /// `d(phase)/dx`, finite everywhere, zero under the node mask.
    pub phase_grad_x: Vec<f64>,
    /// True where `R^2` falls below the node threshold.
    pub node_mask: Vec<bool>,
}

/// How a trajectory was produced; fixes the spatial operator and error model
/// against which residual tolerances are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryOrigin {
    /// Crank-Nicolson with the spectral Hamiltonian (Periodic grids).
    CrankNicolsonSpectral,
    /// Crank-Nicolson with the 2nd-order tridiagonal Hamiltonian.
    CrankNicolsonFd2,
    /// Strang split-step with spectral kinetic factor.
    SplitStep,
    /// Sampled from a closed-form solution.
    Analytic,
    /// Assembled by hand (tests, corruption studies).
    Synthetic,
}

impl TrajectoryOrigin {
    pub fn label(&self) -> &'static str {
        match self {
            TrajectoryOrigin::CrankNicolsonSpectral => "crank-nicolson (spectral)",
            TrajectoryOrigin::CrankNicolsonFd2 => "crank-nicolson (fd2 tridiagonal)",
            TrajectoryOrigin::SplitStep => "split-step spectral",
            TrajectoryOrigin::Analytic => "analytic reference",
            TrajectoryOrigin::Synthetic => "synthetic frames",
        }
    }

    /// Order of the spatial operator the frames satisfy; `None` when the
    /// spatial representation is exact (spectral or closed form).
    pub fn spatial_order(&self) -> Option<u32> {
        match self {
            TrajectoryOrigin::CrankNicolsonFd2 => Some(2),
            _ => None,
        }
    }
}

/// Record of a deliberately injected frame corruption.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameFault {
    pub frame: usize,
    pub factor: f64,
}

/// Time-ordered sequence of wavefunctions with uniform step `dt` — the
/// spacetime object all action integrals run over.
#[derive(Debug, Clone)]
pub struct Trajectory {
    grid: Arc<Grid>,
    dt: f64,
    frames: Vec<Wavefunction>,
    origin: TrajectoryOrigin,
    fault: Option<FrameFault>,
}

impl Trajectory {
    pub fn new(dt: f64, frames: Vec<Wavefunction>, origin: TrajectoryOrigin) -> Result<Self> {
        if frames.len() < 3 {
            return Err(Error::shape(3, frames.len()));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Config(format!("time step must be positive, got {dt}")));
        }
        let grid = frames[0].grid_arc();
        for (j, frame) in frames.iter().enumerate() {
            if frame.grid() != grid.as_ref() {
                return Err(Error::Config(format!("frame {j} lives on a different grid")));
            }
            let n2 = frame.norm_sq();
            if (n2 - 1.0).abs() > FRAME_NORM_TOL {
                return Err(Error::Degenerate(format!(
                    "frame {j} has norm^2 = {n2}, outside 1 +- {FRAME_NORM_TOL:e}"
                )));
            }
        }
        Ok(Trajectory { grid, dt, frames, origin, fault: None })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn grid_arc(&self) -> Arc<Grid> {
        Arc::clone(&self.grid)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frame(&self, j: usize) -> &Wavefunction {
        &self.frames[j]
    }

    pub fn frames(&self) -> &[Wavefunction] {
        &self.frames
    }

    pub fn origin(&self) -> TrajectoryOrigin {
        self.origin
    }

    pub fn fault(&self) -> Option<FrameFault> {
        self.fault
    }

    pub fn time(&self, j: usize) -> f64 {
        j as f64 * self.dt
    }

    /// Total time span `(len - 1) * dt`.
    pub fn duration(&self) -> f64 {
        (self.frames.len() - 1) as f64 * self.dt
    }

    /// Swap in a frame without revalidating norms; used by the variation
    /// oracle, whose perturbed frames are deliberately off-normalization.
    pub(crate) fn with_replaced_frame_unchecked(&self, j: usize, frame: Wavefunction) -> Trajectory {
        let mut out = self.clone();
        out.frames[j] = frame;
        out
    }

    /// Fault injection for negative tests: scale one frame by `factor`,
    /// bypassing the norm invariant, and record the fault.
    pub fn with_scaled_frame(&self, frame: usize, factor: f64) -> Trajectory {
        let mut out = self.clone();
        out.frames[frame] = out.frames[frame].scaled(Complex64::new(factor, 0.0));
        out.origin = TrajectoryOrigin::Synthetic;
        out.fault = Some(FrameFault { frame, factor });
        out
    }

    /// Discrete `d(psi)/dt` at frame `j`: 2nd-order central differences at
    /// interior frames, one-sided 2nd-order stencils at the endpoints.
    pub fn time_derivative(&self, j: usize) -> Result<Vec<Complex64>> {
        let len = self.frames.len();
        if len < 3 {
            return Err(Error::shape(3, len));
        }
        if j >= len {
            return Err(Error::shape(len, j));
        }
        let inv = 1.0 / (2.0 * self.dt);
        let v = |j: usize| self.frames[j].values();
        let n = self.grid.n();
        let mut out = vec![Complex64::default(); n];
        if j == 0 {
            let (f0, f1, f2) = (v(0), v(1), v(2));
            for i in 0..n {
                out[i] = (-f0[i] * 3.0 + f1[i] * 4.0 - f2[i]) * inv;
            }
        } else if j == len - 1 {
            let (f0, f1, f2) = (v(len - 1), v(len - 2), v(len - 3));
            for i in 0..n {
                out[i] = (f0[i] * 3.0 - f1[i] * 4.0 + f2[i]) * inv;
            }
        } else {
            let (prev, next) = (v(j - 1), v(j + 1));
            for i in 0..n {
                out[i] = (next[i] - prev[i]) * inv;
            }
        }
        Ok(out)
    }
}
