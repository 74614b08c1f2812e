//! Spacetime functionals, their first variations, and the duality residual.
//!
//! Four functionals are integrated over a trajectory's time window: the
//! kinetic term `K_c`, the potential term `V_c`, the corpuscular energy
//! `H_c = K_c + V_c`, and the wave energy `H_w` built from the phase-derived
//! bilinear density. Their analytic gradients with respect to `psi*` are
//! `K psi`, `V psi`, `H psi`, and `i hbar psi_t`; the finite-difference
//! variation oracle checks all four against directional derivatives of the
//! discrete functionals themselves.
//!
//! The duality residual `i hbar psi_t - H psi` is the pointwise difference of
//! the wave-side and corpuscular-side variations and vanishes exactly on
//! discrete solutions. The same field is assembled a second time from the
//! field Lagrangian's Euler-Lagrange expression along an independent code
//! path (first derivatives composed twice instead of one second-derivative
//! application), which pins the two derivations against each other.

use num_complex::Complex64;

use crate::dynamics::PotentialSpec;
use crate::error::{Error, Result};
use crate::grid::{BoundaryKind, DerivativeScheme};
use crate::observables::PhysicalConstants;
use crate::wavefunction::{Trajectory, Wavefunction};

/// Constant relating the Euler-Lagrange assembly (varied with respect to
/// `psi*`) to the duality residual: the two routes coincide with factor 1.
pub const EULER_LAGRANGE_FACTOR: f64 = 1.0;

/// Allowed perturbation range for the variation oracle, relative to the
/// perturbed frame's largest magnitude.
pub const FD_EPS_RANGE: (f64, f64) = (1e-7, 1e-3);

/// Time-integrated action terms over a trajectory window.
///
/// The identities `s_c = k_c - v_c` and `s_w = 2 k_c - h_w` hold exactly by
/// construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionReport {
    pub k_c: f64,
    pub v_c: f64,
    pub h_c: f64,
    pub h_w: f64,
    pub s_c: f64,
    pub s_w: f64,
    pub time_window: (f64, f64),
}

/// Which functional the variation oracle addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionalTag {
    Kc,
    Vc,
    Hc,
    Hw,
}

impl FunctionalTag {
    pub const ALL: [FunctionalTag; 4] =
        [FunctionalTag::Kc, FunctionalTag::Vc, FunctionalTag::Hc, FunctionalTag::Hw];

    pub fn label(&self) -> &'static str {
        match self {
            FunctionalTag::Kc => "K_c",
            FunctionalTag::Vc => "V_c",
            FunctionalTag::Hc => "H_c",
            FunctionalTag::Hw => "H_w",
        }
    }
}

/// Location of a variation-oracle perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PerturbationSite {
    pub frame: usize,
    pub point: usize,
}

/// Real or imaginary perturbation direction; the two are independent in the
/// Wirtinger sense, mirroring independent variations of `psi` and `psi*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbDirection {
    Real,
    Imaginary,
}

/// Duality residual field and its L2 norm.
#[derive(Debug, Clone)]
pub struct DualityResidual {
    /// `i hbar psi_t - H psi` per point.
    pub field: Vec<Complex64>,
    /// `sqrt(integral |field|^2 dx)`.
    pub norm: f64,
}

/// Trapezoid weight of frame `j` in the time integral.
fn time_weight(traj: &Trajectory, j: usize) -> f64 {
    if j == 0 || j == traj.len() - 1 {
        0.5 * traj.dt()
    } else {
        traj.dt()
    }
}

fn kinetic_integral(
    psi: &Wavefunction,
    scheme: DerivativeScheme,
    c: &PhysicalConstants,
) -> Result<f64> {
    let d2 = psi.grid().diff2(psi.values(), scheme)?;
    let pref = c.kinetic_prefactor();
    let density: Vec<f64> = psi
        .values()
        .iter()
        .zip(d2.iter())
        .map(|(p, d)| -pref * (p.conj() * d).re)
        .collect();
    psi.grid().integrate_real(&density)
}

fn potential_integral(psi: &Wavefunction, v: &[f64]) -> Result<f64> {
    let density: Vec<f64> =
        psi.density().iter().zip(v.iter()).map(|(r2, vi)| vi * r2).collect();
    psi.grid().integrate_real(&density)
}

fn wave_integral(traj: &Trajectory, j: usize, c: &PhysicalConstants) -> Result<f64> {
    let psi = traj.frame(j);
    let dpsi_dt = traj.time_derivative(j)?;
    let density: Vec<f64> = psi
        .values()
        .iter()
        .zip(dpsi_dt.iter())
        .map(|(p, dp)| -c.hbar * (p.conj() * dp).im)
        .collect();
    psi.grid().integrate_real(&density)
}

/// Evaluate one discrete functional over the whole trajectory window.
pub fn evaluate_functional(
    tag: FunctionalTag,
    traj: &Trajectory,
    pot: &PotentialSpec,
    scheme: DerivativeScheme,
    c: &PhysicalConstants,
) -> Result<f64> {
    let v = pot.sample(traj.grid(), c)?;
    let mut acc = 0.0;
    for j in 0..traj.len() {
        let w = time_weight(traj, j);
        let frame = traj.frame(j);
        let value = match tag {
            FunctionalTag::Kc => kinetic_integral(frame, scheme, c)?,
            FunctionalTag::Vc => potential_integral(frame, &v)?,
            FunctionalTag::Hc => {
                kinetic_integral(frame, scheme, c)? + potential_integral(frame, &v)?
            }
            FunctionalTag::Hw => wave_integral(traj, j, c)?,
        };
        acc += w * value;
    }
    Ok(acc)
}

/// All six action terms of a trajectory.
pub fn actions(
    traj: &Trajectory,
    pot: &PotentialSpec,
    scheme: DerivativeScheme,
    c: &PhysicalConstants,
) -> Result<ActionReport> {
    let v = pot.sample(traj.grid(), c)?;
    let mut k_c = 0.0;
    let mut v_c = 0.0;
    let mut h_w = 0.0;
    for j in 0..traj.len() {
        let w = time_weight(traj, j);
        let frame = traj.frame(j);
        k_c += w * kinetic_integral(frame, scheme, c)?;
        v_c += w * potential_integral(frame, &v)?;
        h_w += w * wave_integral(traj, j, c)?;
    }
    Ok(ActionReport {
        k_c,
        v_c,
        h_c: k_c + v_c,
        h_w,
        s_c: k_c - v_c,
        s_w: 2.0 * k_c - h_w,
        time_window: (0.0, traj.duration()),
    })
}

/// Gradient of `H_c` with respect to `psi*`: the Hamiltonian applied to the
/// state, `-(hbar^2/2m) psi_xx + V psi`.
pub fn variation_hc(
    psi: &Wavefunction,
    pot: &PotentialSpec,
    scheme: DerivativeScheme,
    c: &PhysicalConstants,
) -> Result<Vec<Complex64>> {
    let v = pot.sample(psi.grid(), c)?;
    let d2 = psi.grid().diff2(psi.values(), scheme)?;
    let pref = c.kinetic_prefactor();
    Ok(psi
        .values()
        .iter()
        .zip(d2.iter())
        .zip(v.iter())
        .map(|((p, d), vi)| -pref * d + vi * p)
        .collect())
}

/// Gradient of `H_w` with respect to `psi*`: `i hbar psi_t` (discrete).
pub fn variation_hw(
    traj: &Trajectory,
    frame_index: usize,
    c: &PhysicalConstants,
) -> Result<Vec<Complex64>> {
    let dpsi_dt = traj.time_derivative(frame_index)?;
    Ok(dpsi_dt.iter().map(|d| Complex64::i() * c.hbar * d).collect())
}

/// Gradient field of any of the four functionals at one frame.
pub fn variation_field(
    tag: FunctionalTag,
    traj: &Trajectory,
    pot: &PotentialSpec,
    scheme: DerivativeScheme,
    c: &PhysicalConstants,
    frame_index: usize,
) -> Result<Vec<Complex64>> {
    let psi = traj.frame(frame_index);
    match tag {
        FunctionalTag::Kc => {
            let d2 = psi.grid().diff2(psi.values(), scheme)?;
            let pref = c.kinetic_prefactor();
            Ok(d2.iter().map(|d| -pref * d).collect())
        }
        FunctionalTag::Vc => {
            let v = pot.sample(psi.grid(), c)?;
            Ok(psi.values().iter().zip(v.iter()).map(|(p, vi)| vi * p).collect())
        }
        FunctionalTag::Hc => variation_hc(psi, pot, scheme, c),
        FunctionalTag::Hw => variation_hw(traj, frame_index, c),
    }
}

/// Pointwise difference of the wave-side and corpuscular-side variations,
/// `i hbar psi_t - H psi`. Zero exactly when the frame satisfies the discrete
/// Schrodinger equation.
pub fn duality_residual(
    traj: &Trajectory,
    frame_index: usize,
    pot: &PotentialSpec,
    scheme: DerivativeScheme,
    c: &PhysicalConstants,
) -> Result<DualityResidual> {
    let wave = variation_hw(traj, frame_index, c)?;
    let corpuscular = variation_hc(traj.frame(frame_index), pot, scheme, c)?;
    let field: Vec<Complex64> =
        wave.iter().zip(corpuscular.iter()).map(|(w, h)| w - h).collect();
    let norm = residual_norm(traj, &field)?;
    Ok(DualityResidual { field, norm })
}

fn residual_norm(traj: &Trajectory, field: &[Complex64]) -> Result<f64> {
    let sq: Vec<f64> = field.iter().map(|r| r.norm_sqr()).collect();
    Ok(traj.grid().integrate_real(&sq)?.sqrt())
}

/// Euler-Lagrange expression of the field Lagrangian, varied with respect to
/// `psi*` and assembled term by term:
/// `dL/dpsi* - d/dx(dL/dpsi_x*) - d/dt(dL/dpsi_t*)`.
///
/// The spatial flux term is composed from two first derivatives, so the
/// kinetic part travels a different numerical route than the one inside
/// [`duality_residual`]; the results agree up to [`EULER_LAGRANGE_FACTOR`]
/// and rounding.
pub fn euler_lagrange_residual(
    traj: &Trajectory,
    frame_index: usize,
    pot: &PotentialSpec,
    scheme: DerivativeScheme,
    c: &PhysicalConstants,
) -> Result<Vec<Complex64>> {
    let psi = traj.frame(frame_index);
    let grid = psi.grid();
    let v = pot.sample(grid, c)?;
    let dpsi_dt = traj.time_derivative(frame_index)?;
    let half_ih = Complex64::i() * (0.5 * c.hbar);
    let pref = c.kinetic_prefactor();

    // dL/dpsi_x* = -(hbar^2/2m) psi_x, differentiated once more in x.
    let dpsi = grid.diff1(psi.values(), scheme)?;
    let flux: Vec<Complex64> = dpsi.iter().map(|d| -pref * d).collect();
    let dflux = grid.diff1(&flux, scheme)?;

    Ok((0..grid.n())
        .map(|i| {
            let d_dpsistar = half_ih * dpsi_dt[i] - v[i] * psi.values()[i];
            let d_dt_term = -half_ih * dpsi_dt[i];
            d_dpsistar - dflux[i] - d_dt_term
        })
        .collect())
}

/// True when perturbations at this frame are free of the time-boundary terms
/// dropped in the analytic `H_w` variation (the trapezoid weights and
/// one-sided stencils contaminate the three frames nearest each end).
pub fn is_time_interior(traj: &Trajectory, frame: usize) -> bool {
    traj.len() >= 7 && frame >= 3 && frame + 3 < traj.len()
}

/// The 3-point mollified bump used by the variation oracle, as (index,
/// weight) pairs; spatial wrap-around on Periodic grids.
fn bump_sites(traj: &Trajectory, point: usize) -> Result<[(usize, f64); 3]> {
    let n = traj.grid().n();
    match traj.grid().boundary() {
        BoundaryKind::Periodic => Ok([
            ((point + n - 1) % n, 0.25),
            (point, 0.5),
            ((point + 1) % n, 0.25),
        ]),
        BoundaryKind::Vanishing => {
            if point == 0 || point + 1 >= n {
                return Err(Error::Config(format!(
                    "perturbation point {point} must be spatially interior on a Vanishing grid"
                )));
            }
            Ok([(point - 1, 0.25), (point, 0.5), (point + 1, 0.25)])
        }
    }
}

fn perturbed_frame(
    traj: &Trajectory,
    site: PerturbationSite,
    amplitude: f64,
    dir: PerturbDirection,
) -> Result<Wavefunction> {
    let frame = traj.frame(site.frame);
    let mut values = frame.values().to_vec();
    let step = match dir {
        PerturbDirection::Real => Complex64::new(amplitude, 0.0),
        PerturbDirection::Imaginary => Complex64::new(0.0, amplitude),
    };
    for (idx, weight) in bump_sites(traj, site.point)? {
        values[idx] += step * weight;
    }
    Wavefunction::new(frame.grid_arc(), values)
}

/// Central-difference directional derivative of a functional under a
/// mollified single-site bump of size `eps` in the given direction.
///
/// `eps` must lie within [`FD_EPS_RANGE`] times the perturbed frame's largest
/// magnitude, the window where the estimate is reliable.
pub fn fd_variation(
    tag: FunctionalTag,
    traj: &Trajectory,
    pot: &PotentialSpec,
    scheme: DerivativeScheme,
    c: &PhysicalConstants,
    site: PerturbationSite,
    eps: f64,
    dir: PerturbDirection,
) -> Result<f64> {
    if site.frame >= traj.len() {
        return Err(Error::shape(traj.len(), site.frame));
    }
    let scale = traj
        .frame(site.frame)
        .values()
        .iter()
        .map(|v| v.norm())
        .fold(0.0f64, f64::max);
    if scale == 0.0 {
        return Err(Error::Degenerate("cannot scale a perturbation of a zero frame".into()));
    }
    if eps < FD_EPS_RANGE.0 * scale || eps > FD_EPS_RANGE.1 * scale {
        return Err(Error::Tolerance(format!(
            "eps = {eps:.3e} outside the reliable range [{:.1e}, {:.1e}] for field scale {scale:.3e}",
            FD_EPS_RANGE.0 * scale,
            FD_EPS_RANGE.1 * scale
        )));
    }
    let plus = traj
        .with_replaced_frame_unchecked(site.frame, perturbed_frame(traj, site, eps, dir)?);
    let minus = traj
        .with_replaced_frame_unchecked(site.frame, perturbed_frame(traj, site, -eps, dir)?);
    let f_plus = evaluate_functional(tag, &plus, pot, scheme, c)?;
    let f_minus = evaluate_functional(tag, &minus, pot, scheme, c)?;
    Ok((f_plus - f_minus) / (2.0 * eps))
}

/// Directional derivative predicted by the analytic variation field:
/// `w_j * 2 * sum_i q_i b_i Re/Im(gradient_i)`, with `w_j` the frame's
/// trapezoid weight, `q` the quadrature weights, and `b` the bump profile.
pub fn variation_prediction(
    tag: FunctionalTag,
    traj: &Trajectory,
    pot: &PotentialSpec,
    scheme: DerivativeScheme,
    c: &PhysicalConstants,
    site: PerturbationSite,
    dir: PerturbDirection,
) -> Result<f64> {
    if site.frame >= traj.len() {
        return Err(Error::shape(traj.len(), site.frame));
    }
    let gradient = variation_field(tag, traj, pot, scheme, c, site.frame)?;
    let q = traj.grid().quadrature_weights();
    let w = time_weight(traj, site.frame);
    let mut acc = 0.0;
    for (idx, weight) in bump_sites(traj, site.point)? {
        let component = match dir {
            PerturbDirection::Real => gradient[idx].re,
            PerturbDirection::Imaginary => gradient[idx].im,
        };
        acc += q[idx] * weight * component;
    }
    Ok(2.0 * w * acc)
}
