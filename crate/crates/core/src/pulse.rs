//! CRAB field parametrization E(t) = E0 f(t): Gaussian envelope times a
//! truncated randomized Fourier series, with an edge ramp and the
//! experimental amplitude/bandwidth constraints.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Fastest controllable field modulation period, ps (10 fs).
pub const SPECTRAL_RESOLUTION_PS: f64 = 0.01;

/// Default amplitude cap, D^-1 cm^-1.
pub const DEFAULT_E0_MAX: f64 = 15.0;

/// Default harmonic count and pulse duration (250 fs).
pub const DEFAULT_M: usize = 7;
pub const DEFAULT_T_TOTAL: f64 = 0.25;

/// Largest admissible Fourier frequency, rad/ps.
pub fn nu_max() -> f64 {
    TAU / SPECTRAL_RESOLUTION_PS
}

/// Full CRAB parameter vector. The Fourier frequencies `nu` are frozen per
/// optimization restart; the search variables are (dtheta, dphi, omega_l,
/// t0, sigma, a, b).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseParams {
    /// Field amplitude E0, D^-1 cm^-1.
    pub e0: f64,
    /// Gaussian center, ps.
    pub t0: f64,
    /// Gaussian width, ps.
    pub sigma: f64,
    /// Fourier sine coefficients A_k, unitless.
    pub a: Vec<f64>,
    /// Fourier cosine coefficients B_k, unitless.
    pub b: Vec<f64>,
    /// Fourier frequencies nu_k, rad/ps.
    pub nu: Vec<f64>,
    /// Carrier detuning from the 12230 cm^-1 shift, cm^-1.
    pub omega_l: f64,
    /// Polarization offsets from the site-1 dipole angles, rad.
    pub dtheta: f64,
    pub dphi: f64,
    /// Pulse duration T, ps.
    pub t_total: f64,
    /// Seed used to freeze the frequencies, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl PulseParams {
    /// Plain Gaussian pulse: no Fourier modulation.
    pub fn gaussian(
        e0: f64,
        t0: f64,
        sigma: f64,
        omega_l: f64,
        dtheta: f64,
        dphi: f64,
        t_total: f64,
    ) -> Self {
        PulseParams {
            e0,
            t0,
            sigma,
            a: Vec::new(),
            b: Vec::new(),
            nu: Vec::new(),
            omega_l,
            dtheta,
            dphi,
            t_total,
            seed: None,
        }
    }

    pub fn harmonics(&self) -> usize {
        self.a.len()
    }

    /// E(t) = e0 * f(t), D^-1 cm^-1.
    pub fn field(&self, t: f64) -> f64 {
        self.e0 * crab_envelope(t, self)
    }
}

/// Edge ramp 1 + 5 [e^{200(t-T)/T} + e^{-200 t/T}]; ~6 at the endpoints,
/// ~1 in the interior.
pub fn ramp_lambda(t: f64, t_total: f64) -> f64 {
    1.0 + 5.0 * (f64::exp(200.0 * (t - t_total) / t_total) + f64::exp(-200.0 * t / t_total))
}

/// Normalized envelope f(t): |f| <= 1 for all t by construction.
pub fn crab_envelope(t: f64, p: &PulseParams) -> f64 {
    let gauss = f64::exp(-(t - p.t0).powi(2) / (2.0 * p.sigma * p.sigma));
    let mut num = 1.0;
    let mut den = 1.0;
    for k in 0..p.a.len() {
        let (s, c) = (p.nu[k] * t).sin_cos();
        num += p.a[k] * s + p.b[k] * c;
        den += p.a[k].abs() + p.b[k].abs();
    }
    gauss / ramp_lambda(t, p.t_total) * num / den
}

/// How the random factor in nu_k = 2 pi k r / T is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencyMode {
    /// r drawn independently per harmonic (the standard choice).
    IndependentR,
    /// A single r shared by all harmonics.
    SharedR,
}

/// Frozen random frequencies nu_k = 2 pi k r_k / T, r_k uniform in (0, 1],
/// redrawn if a frequency would violate the 10 fs resolution bound.
/// Deterministic under the seed.
pub fn sample_frequencies(m: usize, t_total: f64, seed: u64) -> Vec<f64> {
    sample_frequencies_with_mode(m, t_total, seed, FrequencyMode::IndependentR)
}

pub fn sample_frequencies_with_mode(
    m: usize,
    t_total: f64,
    seed: u64,
    mode: FrequencyMode,
) -> Vec<f64> {
    assert!(m >= 1, "need at least one harmonic");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound = nu_max();
    let draw = |rng: &mut ChaCha8Rng| {
        // uniform (0, 1]: flip the half-open unit interval
        1.0 - rng.random_range(0.0..1.0)
    };
    match mode {
        FrequencyMode::IndependentR => (1..=m)
            .map(|k| loop {
                let nu = TAU * k as f64 * draw(&mut rng) / t_total;
                if nu <= bound {
                    break nu;
                }
            })
            .collect(),
        FrequencyMode::SharedR => loop {
            let r = draw(&mut rng);
            let nus: Vec<f64> = (1..=m).map(|k| TAU * k as f64 * r / t_total).collect();
            if nus.iter().all(|&nu| nu <= bound) {
                break nus;
            }
        },
    }
}

/// A constraint violated by a parameter set. Violations are data, not errors.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintViolation {
    /// e0 exceeds the cap; magnitude = e0 - e0_max.
    Amplitude { e0: f64, e0_max: f64 },
    /// nu_k exceeds the 10 fs spectral-resolution bound.
    SpectralResolution { k: usize, nu: f64 },
    /// Gaussian width is not positive.
    NonPositiveWidth { sigma: f64 },
}

impl ConstraintViolation {
    /// Magnitude used for penalty terms.
    pub fn magnitude(&self) -> f64 {
        match self {
            ConstraintViolation::Amplitude { e0, e0_max } => e0 - e0_max,
            ConstraintViolation::SpectralResolution { nu, .. } => nu - nu_max(),
            ConstraintViolation::NonPositiveWidth { sigma } => -sigma,
        }
    }
}

impl std::fmt::Display for ConstraintViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConstraintViolation::Amplitude { e0, e0_max } => {
                write!(f, "amplitude {e0} exceeds cap {e0_max} D^-1 cm^-1")
            }
            ConstraintViolation::SpectralResolution { k, nu } => {
                write!(f, "nu_{k} = {nu} rad/ps violates the 10 fs resolution bound")
            }
            ConstraintViolation::NonPositiveWidth { sigma } => {
                write!(f, "gaussian width sigma = {sigma} is not positive")
            }
        }
    }
}

/// Empty iff e0 <= e0_max, all nu_k within the resolution bound, sigma > 0.
pub fn check_constraints(p: &PulseParams, e0_max: f64) -> Vec<ConstraintViolation> {
    let mut v = Vec::new();
    if p.e0 > e0_max {
        v.push(ConstraintViolation::Amplitude { e0: p.e0, e0_max });
    }
    let bound = nu_max();
    for (k, &nu) in p.nu.iter().enumerate() {
        if nu > bound {
            v.push(ConstraintViolation::SpectralResolution { k: k + 1, nu });
        }
    }
    if p.sigma <= 0.0 {
        v.push(ConstraintViolation::NonPositiveWidth { sigma: p.sigma });
    }
    v
}

/// Field shape fed to the propagator: the analytic CRAB form or a tabulated
/// envelope (linear interpolation, zero outside the table).
#[derive(Debug, Clone, PartialEq)]
pub enum Envelope {
    Crab(PulseParams),
    Sampled { times: Vec<f64>, values: Vec<f64> },
}

impl Envelope {
    /// E(t), D^-1 cm^-1.
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Envelope::Crab(p) => p.field(t),
            Envelope::Sampled { times, values } => {
                if times.is_empty() || t < times[0] || t > *times.last().unwrap() {
                    return 0.0;
                }
                let idx = match times.binary_search_by(|x| x.total_cmp(&t)) {
                    Ok(i) => return values[i],
                    Err(i) => i,
                };
                let (t0, t1) = (times[idx - 1], times[idx]);
                let w = (t - t0) / (t1 - t0);
                values[idx - 1] * (1.0 - w) + values[idx] * w
            }
        }
    }
}

/// Piecewise-linear simplification of a pulse: E(t) sampled at `n_nodes`
/// evenly spaced nodes over [0, T].
pub fn linear_interpolated(p: &PulseParams, n_nodes: usize) -> Envelope {
    assert!(n_nodes >= 2);
    let times: Vec<f64> = (0..n_nodes)
        .map(|i| p.t_total * i as f64 / (n_nodes - 1) as f64)
        .collect();
    let values: Vec<f64> = times.iter().map(|&t| p.field(t)).collect();
    Envelope::Sampled { times, values }
}
