//! Fixed-step RK4 integration of the Lindblad master equation with the
//! time-dependent laser coupling, in the rotating frame of the carrier by
//! default.
//!
//! The generator is
//!   drho/dt = -(i/hbar) [H(t), rho] + L_diss(rho) + L_deph(rho) + L_sink(rho)
//! where the local Lindblad terms act elementwise: every matrix element
//! rho_ab is damped at a rate assembled from the site rates, dissipation
//! refills the ground state, and the sink level accumulates 2 Gamma_sink
//! rho_33. Hermiticity is restored after every step.

use num_complex::Complex64;

use crate::ensemble::Orientation;
use crate::error::{Error, Result};
use crate::model::{polarization_vector, site1_polar_angles, DensityMatrix, FmoModel, Mat9, RMat9};
use crate::pulse::{Envelope, PulseParams};

/// Default step during pulses, ps (0.1 fs). The fastest admissible field
/// modulation has a 10 fs period; this resolves it with two orders of margin.
pub const DT_PULSE: f64 = 1e-4;
/// Default step for undriven evolution, ps (2 fs).
pub const DT_FREE: f64 = 2e-3;
/// Coarser pulse step used inside optimization loops, ps (0.5 fs); final
/// costs are re-evaluated at `DT_PULSE`.
pub const DT_SEARCH: f64 = 5e-4;

/// Propagation frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    /// Co-rotating at the carrier: excited-level energies shifted by
    /// -omega_l, drive coupling real. Allows the larger step.
    Rotating,
    /// The shifted lab frame: site energies as tabulated, explicit
    /// e^{-i omega_l t} carrier phase on the drive.
    Lab,
}

/// Drive and dissipation switches for one propagation.
#[derive(Debug, Clone)]
pub struct DriveSpec {
    /// Field shape E(t), D^-1 cm^-1.
    pub envelope: Envelope,
    /// Carrier detuning, cm^-1.
    pub omega_l: f64,
    /// Polarization offsets from the site-1 dipole angles, rad.
    pub dtheta: f64,
    pub dphi: f64,
    /// Additional orientation offsets of this complex.
    pub orientation: Orientation,
    /// Free evolution when false: dynamics identical to the undriven
    /// master equation.
    pub enabled: bool,
    pub frame: Frame,
    /// Include the site-3 -> sink decay. Pump-stage simulations exclude it;
    /// transport-stage simulations include it.
    pub sink_enabled: bool,
}

impl DriveSpec {
    /// Undriven evolution with the sink active.
    pub fn free() -> Self {
        DriveSpec {
            envelope: Envelope::Sampled { times: Vec::new(), values: Vec::new() },
            omega_l: 0.0,
            dtheta: 0.0,
            dphi: 0.0,
            orientation: Orientation::default(),
            enabled: false,
            frame: Frame::Rotating,
            sink_enabled: true,
        }
    }

    /// State-preparation drive: pulse on, sink off, rotating frame.
    pub fn pump(pulse: &PulseParams, orientation: Orientation) -> Self {
        DriveSpec {
            omega_l: pulse.omega_l,
            dtheta: pulse.dtheta,
            dphi: pulse.dphi,
            envelope: Envelope::Crab(pulse.clone()),
            orientation,
            enabled: true,
            frame: Frame::Rotating,
            sink_enabled: false,
        }
    }

    /// Same geometry as [`DriveSpec::pump`] but with a substituted envelope.
    pub fn pump_with_envelope(pulse: &PulseParams, envelope: Envelope, orientation: Orientation) -> Self {
        DriveSpec { envelope, ..DriveSpec::pump(pulse, orientation) }
    }

    pub fn with_sink(mut self, on: bool) -> Self {
        self.sink_enabled = on;
        self
    }

    pub fn with_frame(mut self, frame: Frame) -> Self {
        self.frame = frame;
        self
    }
}

/// Time grid plus sampled states and sink populations.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Sample times, ps, strictly increasing, starting at 0.
    pub times: Vec<f64>,
    /// States at the sample times.
    pub states: Vec<DensityMatrix>,
    /// Sink population rho_88 at the sample times; non-decreasing.
    pub p_sink: Vec<f64>,
}

impl Trajectory {
    pub fn final_state(&self) -> &DensityMatrix {
        self.states.last().expect("trajectory is never empty")
    }

    pub fn final_p_sink(&self) -> f64 {
        *self.p_sink.last().expect("trajectory is never empty")
    }

    /// p_sink at time t by linear interpolation of the samples.
    pub fn p_sink_at(&self, t: f64) -> f64 {
        match self.times.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(i) => self.p_sink[i],
            Err(0) => self.p_sink[0],
            Err(i) if i == self.times.len() => *self.p_sink.last().unwrap(),
            Err(i) => {
                let w = (t - self.times[i - 1]) / (self.times[i] - self.times[i - 1]);
                self.p_sink[i - 1] * (1.0 - w) + self.p_sink[i] * w
            }
        }
    }
}

/// Precomputed pieces of the generator for one propagation.
struct Generator<'a> {
    h_static: Mat9,
    /// mu_i . e per site, Debye.
    mu_e: [f64; 7],
    /// Elementwise damping rates, ps^-1.
    decay: RMat9,
    gamma_diss: [f64; 7],
    /// 2 Gamma_sink when the sink is on, else 0.
    sink_rate: f64,
    inv_hbar: f64,
    omega_l: f64,
    lab_frame: bool,
    enabled: bool,
    envelope: &'a Envelope,
}

impl<'a> Generator<'a> {
    fn new(model: &FmoModel, drive: &'a DriveSpec) -> Result<Self> {
        let mut h_static = Mat9::zeros();
        let rotating = drive.frame == Frame::Rotating;
        let shift = if rotating && drive.enabled { drive.omega_l } else { 0.0 };
        for j in 0..7 {
            for l in 0..7 {
                h_static[(j + 1, l + 1)] = Complex64::new(model.h_site[(j, l)], 0.0);
            }
            h_static[(j + 1, j + 1)] -= Complex64::new(shift, 0.0);
        }
        h_static[(8, 8)] = Complex64::new(-shift, 0.0);

        let mut mu_e = [0.0; 7];
        if drive.enabled {
            let (theta1, phi1) = site1_polar_angles(model)?;
            let e = polarization_vector(
                theta1 + drive.orientation.theta + drive.dtheta,
                phi1 + drive.orientation.phi + drive.dphi,
            );
            for j in 0..7 {
                mu_e[j] = model.dipoles[j].dot(&e);
            }
        }

        let mut decay = RMat9::zeros();
        let mut site_rate_deph = [0.0; 9];
        let mut site_rate_diss = [0.0; 9];
        let mut site_rate_sink = [0.0; 9];
        for j in 0..7 {
            site_rate_deph[j + 1] = model.gamma_deph[j];
            site_rate_diss[j + 1] = model.gamma_diss[j];
        }
        if drive.sink_enabled {
            site_rate_sink[3] = model.gamma_sink;
        }
        for a in 0..9 {
            for b in 0..9 {
                let deph = if a == b { 0.0 } else { site_rate_deph[a] + site_rate_deph[b] };
                decay[(a, b)] = deph
                    + site_rate_diss[a]
                    + site_rate_diss[b]
                    + site_rate_sink[a]
                    + site_rate_sink[b];
            }
        }

        Ok(Generator {
            h_static,
            mu_e,
            decay,
            gamma_diss: model.gamma_diss,
            sink_rate: if drive.sink_enabled { 2.0 * model.gamma_sink } else { 0.0 },
            inv_hbar: 1.0 / model.hbar,
            omega_l: drive.omega_l,
            lab_frame: drive.frame == Frame::Lab,
            enabled: drive.enabled,
            envelope: &drive.envelope,
        })
    }

    fn field_at(&self, t: f64) -> Result<f64> {
        if !self.enabled {
            return Ok(0.0);
        }
        let e = self.envelope.eval(t);
        if !e.is_finite() {
            return Err(Error::NonFiniteField(t));
        }
        Ok(e)
    }

    /// drho/dt for a given field value.
    fn apply(&self, rho: &Mat9, e_field: f64, t: f64) -> Mat9 {
        let mut h = self.h_static;
        if self.enabled {
            if self.lab_frame {
                let phase = Complex64::from_polar(1.0, -self.omega_l * self.inv_hbar * t);
                for j in 0..7 {
                    let c = -self.mu_e[j] * e_field;
                    h[(j + 1, 0)] = c * phase;
                    h[(0, j + 1)] = c * phase.conj();
                }
            } else {
                for j in 0..7 {
                    let c = Complex64::new(-self.mu_e[j] * e_field, 0.0);
                    h[(j + 1, 0)] = c;
                    h[(0, j + 1)] = c;
                }
            }
        }
        let mut out = (h * rho - rho * h) * Complex64::new(0.0, -self.inv_hbar);
        for (o, (r, d)) in out.iter_mut().zip(rho.iter().zip(self.decay.iter())) {
            *o -= *d * *r;
        }
        let refill: f64 = (0..7).map(|j| self.gamma_diss[j] * rho[(j + 1, j + 1)].re).sum();
        out[(0, 0)] += Complex64::new(2.0 * refill, 0.0);
        out[(8, 8)] += Complex64::new(self.sink_rate * rho[(3, 3)].re, 0.0);
        out
    }

    /// One classical RK4 step from t, returning the resymmetrized state.
    fn step(&self, rho: &Mat9, t: f64, dt: f64) -> Result<Mat9> {
        let e1 = self.field_at(t)?;
        let e2 = self.field_at(t + 0.5 * dt)?;
        let e3 = self.field_at(t + dt)?;
        let half = Complex64::new(0.5 * dt, 0.0);
        let full = Complex64::new(dt, 0.0);
        let k1 = self.apply(rho, e1, t);
        let k2 = self.apply(&(rho + k1 * half), e2, t + 0.5 * dt);
        let k3 = self.apply(&(rho + k2 * half), e2, t + 0.5 * dt);
        let k4 = self.apply(&(rho + k3 * full), e3, t + dt);
        let next = rho
            + (k1 + (k2 + k3) * Complex64::new(2.0, 0.0) + k4) * Complex64::new(dt / 6.0, 0.0);
        Ok((next + next.adjoint()) * Complex64::new(0.5, 0.0))
    }
}

fn trace_of(rho: &Mat9) -> f64 {
    (0..9).map(|i| rho[(i, i)].re).sum()
}

/// Time derivative of the state under the full generator. Validation and
/// analysis entry point; propagation uses the same kernel internally.
pub fn liouvillian_apply(
    rho: &DensityMatrix,
    t: f64,
    model: &FmoModel,
    drive: &DriveSpec,
) -> Result<Mat9> {
    let g = Generator::new(model, drive)?;
    let e = g.field_at(t)?;
    Ok(g.apply(&rho.0, e, t))
}

/// Integrate from t = 0 to `t_end`, sampling every `stride` steps (the final
/// state is always sampled). The step actually used is `t_end / n` with
/// n = ceil(t_end / dt), so the grid lands exactly on `t_end`.
pub fn propagate(
    rho0: &DensityMatrix,
    model: &FmoModel,
    drive: &DriveSpec,
    dt: f64,
    t_end: f64,
    stride: usize,
) -> Result<Trajectory> {
    if dt <= 0.0 || !dt.is_finite() {
        return Err(Error::invalid(format!("dt must be positive, got {dt}")));
    }
    if t_end < 0.0 {
        return Err(Error::invalid(format!("t_end must be >= 0, got {t_end}")));
    }
    let stride = stride.max(1);
    let g = Generator::new(model, drive)?;
    let n = (t_end / dt).ceil().max(1.0) as usize;
    let n = if t_end == 0.0 { 0 } else { n };
    let dt_eff = if n == 0 { dt } else { t_end / n as f64 };

    let mut rho = rho0.0;
    let mut traj = Trajectory {
        times: Vec::with_capacity(n / stride + 2),
        states: Vec::with_capacity(n / stride + 2),
        p_sink: Vec::with_capacity(n / stride + 2),
    };
    let mut record = |t: f64, rho: &Mat9| {
        traj.times.push(t);
        traj.states.push(DensityMatrix(*rho));
        traj.p_sink.push(rho[(8, 8)].re);
    };
    record(0.0, &rho);
    for step in 0..n {
        let t = t_end * step as f64 / n as f64;
        rho = g.step(&rho, t, dt_eff)?;
        let drift = (trace_of(&rho) - 1.0).abs();
        if !(drift <= 1e-6) {
            return Err(Error::TraceDrift { t: t + dt_eff, drift });
        }
        if (step + 1) % stride == 0 || step + 1 == n {
            record(t_end * (step + 1) as f64 / n as f64, &rho);
        }
    }
    Ok(traj)
}

/// As [`propagate`] but returning only the final state. Used in cost loops.
pub fn propagate_final(
    rho0: &DensityMatrix,
    model: &FmoModel,
    drive: &DriveSpec,
    dt: f64,
    t_end: f64,
) -> Result<DensityMatrix> {
    if dt <= 0.0 || !dt.is_finite() {
        return Err(Error::invalid(format!("dt must be positive, got {dt}")));
    }
    let g = Generator::new(model, drive)?;
    let n = if t_end == 0.0 { 0 } else { (t_end / dt).ceil().max(1.0) as usize };
    let dt_eff = if n == 0 { dt } else { t_end / n as f64 };
    let mut rho = rho0.0;
    for step in 0..n {
        let t = t_end * step as f64 / n as f64;
        rho = g.step(&rho, t, dt_eff)?;
        let drift = (trace_of(&rho) - 1.0).abs();
        if !(drift <= 1e-6) {
            return Err(Error::TraceDrift { t: t + dt_eff, drift });
        }
    }
    Ok(DensityMatrix(rho))
}

/// Trapezoid-rule evaluation of p_sink(t) = 2 Gamma_sink int_0^t rho_33 dt',
/// the integral form of the transfer efficiency. Cross-checks the explicit
/// sink level kept by the propagator.
pub fn accumulated_sink(traj: &Trajectory, model: &FmoModel) -> Vec<f64> {
    let rate = 2.0 * model.gamma_sink;
    let mut out = Vec::with_capacity(traj.times.len());
    let mut acc = if traj.p_sink.is_empty() { 0.0 } else { traj.p_sink[0] };
    out.push(acc);
    for k in 1..traj.times.len() {
        let dt = traj.times[k] - traj.times[k - 1];
        let f0 = traj.states[k - 1].population(3);
        let f1 = traj.states[k].population(3);
        acc += rate * 0.5 * (f0 + f1) * dt;
        out.push(acc);
    }
    out
}

/// Largest step that keeps the undriven RK4 stable for this model's rates
/// (never larger than `DT_FREE`).
pub fn stable_free_dt(model: &FmoModel) -> f64 {
    let mut max_rate: f64 = 0.0;
    for j in 0..7 {
        max_rate = max_rate.max(2.0 * (model.gamma_deph[j] + model.gamma_diss[j]));
    }
    max_rate = max_rate.max(2.0 * model.gamma_sink);
    DT_FREE.min(1.0 / max_rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_fmo_model;
    use approx::assert_abs_diff_eq;

    fn bare_model(gamma: f64, diss: f64) -> FmoModel {
        let mut m = FmoModel::new().with_uniform_deph(gamma).with_uniform_diss(diss);
        m.h_site = crate::model::Mat7::zeros();
        m
    }

    #[test]
    fn ground_state_is_stationary() {
        let model = FmoModel::new();
        let rho = DensityMatrix::ground();
        let d = liouvillian_apply(&rho, 0.0, &model, &DriveSpec::free()).unwrap();
        assert!(d.iter().all(|x| x.norm() < 1e-15));
        let traj = propagate(&rho, &model, &DriveSpec::free(), DT_FREE, 1.0, 10).unwrap();
        assert!((traj.final_state().0 - rho.0).iter().all(|x| x.norm() < 1e-12));
    }

    #[test]
    fn dephasing_decays_coherence_at_2gamma() {
        let gamma = 0.7;
        let model = bare_model(gamma, 0.0);
        let rho = DensityMatrix::plus();
        let drive = DriveSpec::free().with_sink(false);
        let d = liouvillian_apply(&rho, 0.0, &model, &drive).unwrap();
        // drho_12/dt = -2 gamma rho_12 for the off-diagonal element
        assert_abs_diff_eq!(d[(1, 2)].re, -2.0 * gamma * 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(d[(1, 1)].re, 0.0, epsilon = 1e-12);
        let traj = propagate(&rho, &model, &drive, 1e-3, 1.0, 1000).unwrap();
        assert_abs_diff_eq!(
            traj.final_state().coherence(1, 2).re,
            0.5 * (-2.0 * gamma * 1.0f64).exp(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn sink_feeds_at_twice_gamma_sink() {
        let model = bare_model(0.0, 0.0);
        let rho = DensityMatrix::site(3);
        let d = liouvillian_apply(&rho, 0.0, &model, &DriveSpec::free()).unwrap();
        assert_abs_diff_eq!(d[(8, 8)].re, 12.6, epsilon = 1e-12);
        assert_abs_diff_eq!(d[(3, 3)].re, -12.6, epsilon = 1e-12);
    }

    #[test]
    fn accumulated_sink_rectangle_limit() {
        let model = FmoModel::new();
        let mut s = DensityMatrix::zeros();
        s.0[(3, 3)] = num_complex::Complex64::new(0.25, 0.0);
        let traj = Trajectory {
            times: vec![0.0, 0.1],
            states: vec![s.clone(), s],
            p_sink: vec![0.0, 0.0],
        };
        let acc = accumulated_sink(&traj, &model);
        assert_abs_diff_eq!(acc[1], 2.0 * model.gamma_sink * 0.25 * 0.1, epsilon = 1e-14);
        let zero = Trajectory {
            times: vec![0.0, 0.1, 0.2],
            states: vec![DensityMatrix::ground(); 3],
            p_sink: vec![0.0; 3],
        };
        assert!(accumulated_sink(&zero, &model).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn free_propagation_conserves_trace_and_positivity() {
        let model = build_fmo_model(None).unwrap();
        let traj =
            propagate(&DensityMatrix::site(1), &model, &DriveSpec::free(), DT_FREE, 2.0, 50)
                .unwrap();
        for (k, state) in traj.states.iter().enumerate() {
            assert!((state.trace() - 1.0).abs() < 1e-8, "trace drift at sample {k}");
            assert!(state.hermiticity_error() < 1e-10);
            assert!(state.min_eigenvalue() > -1e-8);
        }
        for w in traj.p_sink.windows(2) {
            assert!(w[1] >= w[0] - 1e-12, "p_sink must be non-decreasing");
        }
        assert!(traj.final_p_sink() > 0.1);
    }

    #[test]
    fn bad_steps_rejected() {
        let model = FmoModel::new();
        let rho = DensityMatrix::site(1);
        assert!(propagate(&rho, &model, &DriveSpec::free(), -1.0, 1.0, 1).is_err());
        assert!(propagate(&rho, &model, &DriveSpec::free(), 0.1, -1.0, 1).is_err());
        // grossly unstable step for a stiff rate -> trace-drift error
        let stiff = FmoModel::new().with_uniform_deph(1e3);
        let err = propagate(&DensityMatrix::site(1), &stiff, &DriveSpec::free(), DT_FREE, 1.0, 1);
        assert!(matches!(err, Err(Error::TraceDrift { .. })));
        assert!(stable_free_dt(&stiff) < 1e-3);
    }

    #[test]
    fn non_finite_field_rejected() {
        let model = FmoModel::new();
        let mut pulse = PulseParams::gaussian(15.0, 0.125, 0.05, 100.0, 0.0, 0.0, 0.25);
        pulse.sigma = 0.0; // gaussian evaluates to NaN at t = t0
        let drive = DriveSpec::pump(&pulse, Orientation::default());
        let err = propagate_final(&DensityMatrix::ground(), &model, &drive, DT_SEARCH, 0.25);
        assert!(matches!(err, Err(Error::NonFiniteField(_))));
    }
}
