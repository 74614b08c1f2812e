//! Pointwise energy and momentum densities.
//!
//! The corpuscular side is built from operator expressions: three equivalent
//! kinetic-density forms (differing only by total derivatives), the potential
//! density `V R^2`, and their sum. The wave side is built from the phase:
//! local fields `E = -hbar d(phase)/dt`, `p = hbar d(phase)/dx`, and the
//! total-energy density `-hbar Im(psi* psi_t)`, which is manifestly real and
//! needs no phase unwrapping.

use num_complex::Complex64;
use std::sync::Arc;

use crate::dynamics::PotentialSpec;
use crate::error::{Error, Result};
use crate::grid::{DerivativeScheme, Grid};
use crate::wavefunction::{Trajectory, Wavefunction, DEFAULT_NODE_THRESHOLD};

/// Physical constants entering every energy expression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub mass: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        PhysicalConstants { hbar: 1.0, mass: 1.0 }
    }
}

impl PhysicalConstants {
    pub fn new(hbar: f64, mass: f64) -> Result<Self> {
        if !(hbar > 0.0) || !(mass > 0.0) || !hbar.is_finite() || !mass.is_finite() {
            return Err(Error::Config(format!(
                "constants must be positive and finite: hbar = {hbar}, mass = {mass}"
            )));
        }
        Ok(PhysicalConstants { hbar, mass })
    }

    /// `hbar^2 / (2 m)`, the kinetic prefactor.
    pub fn kinetic_prefactor(&self) -> f64 {
        self.hbar * self.hbar / (2.0 * self.mass)
    }
}

/// Which expression a [`DensityField`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormTag {
    KineticFormA,
    KineticFormB,
    KineticFormC,
    Potential,
    TotalCorpuscular,
    TotalWave,
}

/// The three algebraically equivalent kinetic-density forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KineticForm {
    /// `-(hbar^2/2m) psi* psi_xx`
    A,
    /// `(hbar^2/2m) [ |psi_x|^2 - d/dx(psi* psi_x) ]`
    B,
    /// `(hbar^2/2m) [ R^2 phi_x^2 + R_x^2 - d/dx(R R_x) ]`, assembled from the
    /// polar decomposition.
    C,
}

/// Real density field on a grid, with the discarded imaginary part recorded
/// for forms that take the real part of a complex expression.
#[derive(Debug, Clone)]
pub struct DensityField {
    pub grid: Arc<Grid>,
    pub values: Vec<f64>,
    pub form: FormTag,
    /// Largest pointwise imaginary magnitude dropped when taking real parts.
    /// Stays below `1e-10 * max |values|` for solution-quality inputs.
    pub imag_residual: f64,
}

impl DensityField {
    pub fn integrate(&self) -> f64 {
        self.grid.integrate_real(&self.values).expect("length fixed at construction")
    }
}

/// Local generalized Planck-Einstein fields on one trajectory frame.
#[derive(Debug, Clone)]
pub struct LocalFields {
    /// `E(x) = -hbar d(phase)/dt`, zero under the node mask.
    pub energy: Vec<f64>,
    /// `p(x) = hbar d(phase)/dx`, zero under the node mask.
    pub momentum: Vec<f64>,
    pub node_mask: Vec<bool>,
}

/// Split of the mean kinetic energy into its phase-gradient (flow) part, its
/// amplitude-gradient (quantum) part, and the total-derivative boundary term.
#[derive(Debug, Clone, Copy)]
pub struct KineticDecomposition {
    pub flow: f64,
    pub quantum: f64,
    pub boundary: f64,
}

/// Pointwise flow density `R^2 phi_x^2`, gradient density `R_x^2`, and
/// `d/dx(R R_x)`, all node-safe.
///
/// Away from nodes the quotients `(Im psi* psi_x)^2 / R^2` and
/// `(Re psi* psi_x)^2 / R^2` reproduce the two parts exactly; at masked
/// points their sum degenerates to `|psi_x|^2`, which is the correct limit
/// for a smooth state, and is assigned entirely to the gradient part.
fn polar_kinetic_parts(
    psi: &Wavefunction,
    scheme: DerivativeScheme,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let grid = psi.grid();
    let n = grid.n();
    let dpsi = grid.diff1(psi.values(), scheme)?;
    let polar = psi.polar_decompose(DEFAULT_NODE_THRESHOLD, scheme)?;
    let mut flow = vec![0.0; n];
    let mut gradient = vec![0.0; n];
    let mut r_rx = vec![0.0; n];
    for i in 0..n {
        let cross = psi.values()[i].conj() * dpsi[i];
        r_rx[i] = cross.re;
        if polar.node_mask[i] {
            gradient[i] = dpsi[i].norm_sqr();
        } else {
            flow[i] = cross.im * cross.im / polar.amplitude_sq[i];
            gradient[i] = cross.re * cross.re / polar.amplitude_sq[i];
        }
    }
    let d_r_rx = grid.diff1_real(&r_rx, scheme)?;
    Ok((flow, gradient, d_r_rx))
}

/// Kinetic energy density in the requested form.
pub fn kinetic_density(
    psi: &Wavefunction,
    form: KineticForm,
    scheme: DerivativeScheme,
    c: &PhysicalConstants,
) -> Result<DensityField> {
    let grid = psi.grid();
    let pref = c.kinetic_prefactor();
    let n = grid.n();
    let mut values = vec![0.0; n];
    let mut imag_residual = 0.0f64;
    match form {
        KineticForm::A => {
            let d2 = grid.diff2(psi.values(), scheme)?;
            for i in 0..n {
                let v = -pref * (psi.values()[i].conj() * d2[i]);
                values[i] = v.re;
                imag_residual = imag_residual.max(v.im.abs());
            }
        }
        KineticForm::B => {
            let d1 = grid.diff1(psi.values(), scheme)?;
            let cross: Vec<Complex64> =
                (0..n).map(|i| psi.values()[i].conj() * d1[i]).collect();
            let dcross = grid.diff1(&cross, scheme)?;
            for i in 0..n {
                let v = pref * (Complex64::new(d1[i].norm_sqr(), 0.0) - dcross[i]);
                values[i] = v.re;
                imag_residual = imag_residual.max(v.im.abs());
            }
        }
        KineticForm::C => {
            let (flow, gradient, d_r_rx) = polar_kinetic_parts(psi, scheme)?;
            for i in 0..n {
                values[i] = pref * (flow[i] + gradient[i] - d_r_rx[i]);
            }
        }
    }
    let tag = match form {
        KineticForm::A => FormTag::KineticFormA,
        KineticForm::B => FormTag::KineticFormB,
        KineticForm::C => FormTag::KineticFormC,
    };
    Ok(DensityField { grid: psi.grid_arc(), values, form: tag, imag_residual })
}

/// Potential energy density `V(x) R^2(x)`.
pub fn potential_density(
    psi: &Wavefunction,
    pot: &PotentialSpec,
    c: &PhysicalConstants,
) -> Result<DensityField> {
    let v = pot.sample(psi.grid(), c)?;
    let values = psi.density().iter().zip(v.iter()).map(|(r2, vi)| vi * r2).collect();
    Ok(DensityField {
        grid: psi.grid_arc(),
        values,
        form: FormTag::Potential,
        imag_residual: 0.0,
    })
}

/// Total corpuscular energy density, kinetic form A plus potential. Its
/// integral is the Hamiltonian mean value.
pub fn hc_density(
    psi: &Wavefunction,
    pot: &PotentialSpec,
    scheme: DerivativeScheme,
    c: &PhysicalConstants,
) -> Result<DensityField> {
    let kinetic = kinetic_density(psi, KineticForm::A, scheme, c)?;
    let potential = potential_density(psi, pot, c)?;
    let values = kinetic
        .values
        .iter()
        .zip(potential.values.iter())
        .map(|(k, v)| k + v)
        .collect();
    Ok(DensityField {
        grid: psi.grid_arc(),
        values,
        form: FormTag::TotalCorpuscular,
        imag_residual: kinetic.imag_residual,
    })
}

/// Local energy and momentum fields `E = -hbar phi_t`, `p = hbar phi_x` on
/// frame `frame_index`, masked at nodes.
pub fn local_fields(
    traj: &Trajectory,
    frame_index: usize,
    node_threshold: f64,
    scheme: DerivativeScheme,
    c: &PhysicalConstants,
) -> Result<LocalFields> {
    let psi = traj.frame(frame_index);
    let polar = psi.polar_decompose(node_threshold, scheme)?;
    let dpsi_dt = traj.time_derivative(frame_index)?;
    let n = psi.grid().n();
    let mut energy = vec![0.0; n];
    let mut momentum = vec![0.0; n];
    for i in 0..n {
        if !polar.node_mask[i] {
            momentum[i] = c.hbar * polar.phase_grad_x[i];
            energy[i] =
                -c.hbar * (psi.values()[i].conj() * dpsi_dt[i]).im / polar.amplitude_sq[i];
        }
    }
    Ok(LocalFields { energy, momentum, node_mask: polar.node_mask })
}

/// Wave-side total energy density `(i hbar / 2)(psi* psi_t - psi psi_t*)`,
/// computed from the bilinear form as `-hbar Im(psi* psi_t)`: real by
/// construction and defined at nodes. Equals `E(x) R^2(x)` away from nodes.
pub fn hw_density(
    traj: &Trajectory,
    frame_index: usize,
    c: &PhysicalConstants,
) -> Result<DensityField> {
    let psi = traj.frame(frame_index);
    let dpsi_dt = traj.time_derivative(frame_index)?;
    let values = psi
        .values()
        .iter()
        .zip(dpsi_dt.iter())
        .map(|(p, dp)| -c.hbar * (p.conj() * dp).im)
        .collect();
    Ok(DensityField {
        grid: psi.grid_arc(),
        values,
        form: FormTag::TotalWave,
        imag_residual: 0.0,
    })
}

/// Split the mean kinetic energy into flow, quantum, and boundary parts:
/// `flow + quantum + boundary = integrate(kinetic form C)`, with
/// `flow >= 0`, `quantum >= 0`, and `boundary ~ 0` for decayed or periodic
/// states.
pub fn kinetic_decomposition(
    psi: &Wavefunction,
    scheme: DerivativeScheme,
    c: &PhysicalConstants,
) -> Result<KineticDecomposition> {
    let grid = psi.grid();
    let pref = c.kinetic_prefactor();
    let (flow, gradient, d_r_rx) = polar_kinetic_parts(psi, scheme)?;
    Ok(KineticDecomposition {
        flow: pref * grid.integrate_real(&flow)?,
        quantum: pref * grid.integrate_real(&gradient)?,
        boundary: -pref * grid.integrate_real(&d_r_rx)?,
    })
}

/// Mean momentum `Re <psi | p_hat | psi> = hbar * integral Im(psi* psi_x) dx`.
pub fn mean_momentum(
    psi: &Wavefunction,
    scheme: DerivativeScheme,
    c: &PhysicalConstants,
) -> Result<f64> {
    let dpsi = psi.grid().diff1(psi.values(), scheme)?;
    let integrand: Vec<f64> = psi
        .values()
        .iter()
        .zip(dpsi.iter())
        .map(|(p, dp)| (p.conj() * dp).im)
        .collect();
    Ok(c.hbar * psi.grid().integrate_real(&integrand)?)
}
