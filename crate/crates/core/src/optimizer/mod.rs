//! State-preparation and probe cost functions over the CRAB parameter
//! vector, and their derivative-free minimization with multi-restart.

pub mod nelder_mead;

pub use nelder_mead::{nelder_mead as nelder_mead_plain, subplex as nelder_mead_subplex, NmOptions, NmResult};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::ensemble::Orientation;
use crate::error::{Error, Result};
use crate::model::{DensityMatrix, FmoModel};
use crate::propagator::{propagate_final, DriveSpec, DT_SEARCH};
use crate::pulse::{
    sample_frequencies_with_mode, Envelope, FrequencyMode, PulseParams, DEFAULT_E0_MAX, DEFAULT_M,
    DEFAULT_T_TOTAL,
};

/// Bright-state preparation error: 1 - <+|rho|+>.
pub fn eps_b(rho: &DensityMatrix) -> f64 {
    1.0 - 0.5 * (rho.population(1) + rho.population(2)) - rho.coherence(1, 2).re
}

/// Dark-state preparation error: 1 - rho_55 - rho_66 - rho_77.
pub fn eps_d(rho: &DensityMatrix) -> f64 {
    1.0 - rho.population(5) - rho.population(6) - rho.population(7)
}

/// Probe error: the site-3 population left after the probe pulse.
pub fn eps_p(rho: &DensityMatrix) -> f64 {
    rho.population(3)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostKind {
    EpsB,
    EpsD,
    EpsP,
}

impl CostKind {
    pub fn evaluate(&self, rho: &DensityMatrix) -> f64 {
        match self {
            CostKind::EpsB => eps_b(rho),
            CostKind::EpsD => eps_d(rho),
            CostKind::EpsP => eps_p(rho),
        }
    }

    /// Preparation costs start from the ground state; the probe cost starts
    /// with all population in site 3.
    pub fn initial_state(&self) -> DensityMatrix {
        match self {
            CostKind::EpsB | CostKind::EpsD => DensityMatrix::ground(),
            CostKind::EpsP => DensityMatrix::site(3),
        }
    }
}

impl std::fmt::Display for CostKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CostKind::EpsB => write!(f, "eps_B"),
            CostKind::EpsD => write!(f, "eps_D"),
            CostKind::EpsP => write!(f, "eps_P"),
        }
    }
}

/// Everything needed to evaluate a pulse: the target functional, the noise
/// level, the pulse window, and the orientations to average over.
#[derive(Debug, Clone)]
pub struct CostSpec {
    pub kind: CostKind,
    pub model: FmoModel,
    /// Uniform dephasing rate, ps^-1.
    pub gamma: f64,
    /// Pulse duration, ps.
    pub t_pulse: f64,
    /// Orientations averaged by the cost (singleton for single-complex costs).
    pub orientations: Vec<Orientation>,
    pub initial: DensityMatrix,
    /// Harmonic count of the CRAB ansatz; 0 optimizes a bare Gaussian.
    pub m: usize,
    pub e0_max: f64,
    /// Integration step used by cost evaluations, ps.
    pub dt: f64,
    pub freq_mode: FrequencyMode,
}

impl CostSpec {
    /// State-preparation cost at the given noise level, single orientation.
    pub fn pump(kind: CostKind, model: &FmoModel, gamma: f64) -> Self {
        CostSpec {
            kind,
            model: model.clone(),
            gamma,
            t_pulse: DEFAULT_T_TOTAL,
            orientations: vec![Orientation::ZERO],
            initial: kind.initial_state(),
            m: DEFAULT_M,
            e0_max: DEFAULT_E0_MAX,
            dt: DT_SEARCH,
            freq_mode: FrequencyMode::IndependentR,
        }
    }

    /// Probe-absorption cost (125 fs window, initial population in site 3).
    pub fn probe(model: &FmoModel, gamma: f64) -> Self {
        CostSpec { t_pulse: 0.125, ..CostSpec::pump(CostKind::EpsP, model, gamma) }
    }

    pub fn with_orientations(mut self, orientations: Vec<Orientation>) -> Self {
        assert!(!orientations.is_empty(), "orientation list must be nonempty");
        self.orientations = orientations;
        self
    }

    pub fn with_harmonics(mut self, m: usize) -> Self {
        self.m = m;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }
}

/// Cost of a pulse: the target functional at t_pulse, averaged over the
/// spec's orientations.
pub fn evaluate_cost(spec: &CostSpec, pulse: &PulseParams) -> Result<f64> {
    evaluate_cost_with_envelope(spec, pulse, None)
}

/// As [`evaluate_cost`], with an optional substituted envelope (keeping the
/// pulse's carrier and polarization). Used for simplified-pulse comparisons.
pub fn evaluate_cost_with_envelope(
    spec: &CostSpec,
    pulse: &PulseParams,
    envelope: Option<&Envelope>,
) -> Result<f64> {
    let model = spec.model.with_uniform_deph(spec.gamma);
    let mut acc = 0.0;
    for &o in &spec.orientations {
        let drive = match envelope {
            None => DriveSpec::pump(pulse, o),
            Some(env) => DriveSpec::pump_with_envelope(pulse, env.clone(), o),
        };
        let rho = propagate_final(&spec.initial, &model, &drive, spec.dt, spec.t_pulse)?;
        acc += spec.kind.evaluate(&rho);
    }
    Ok(acc / spec.orientations.len() as f64)
}

/// Per-restart log entry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RestartRecord {
    pub seed: u64,
    pub initial_cost: f64,
    pub final_cost: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub best_params: PulseParams,
    pub best_cost: f64,
    pub restarts: Vec<RestartRecord>,
    pub evaluations_total: usize,
}

/// Search controls. The defaults are the pinned termination settings
/// (ftol = xtol = 1e-6, 2e4 evaluations per restart, subspaces of 5).
#[derive(Debug, Clone)]
pub struct OptimizeOptions {
    pub restarts: usize,
    pub seed: u64,
    pub max_evals_per_restart: usize,
    pub subspace_dim: usize,
    pub ftol: f64,
    pub xtol: f64,
    /// Re-run the search from the best restart with tightened steps.
    pub polish: bool,
}

impl OptimizeOptions {
    pub fn new(restarts: usize, seed: u64) -> Self {
        OptimizeOptions {
            restarts,
            seed,
            max_evals_per_restart: 20_000,
            subspace_dim: 5,
            ftol: 1e-6,
            xtol: 1e-6,
            polish: true,
        }
    }

    pub fn with_budget(mut self, max_evals: usize) -> Self {
        self.max_evals_per_restart = max_evals;
        self
    }
}

/// Search-vector layout: [dtheta, dphi, omega_l, t0, sigma, a_1..a_m, b_1..b_m].
fn params_from_vector(x: &[f64], nu: &[f64], e0: f64, t_total: f64, seed: u64) -> PulseParams {
    let m = nu.len();
    PulseParams {
        e0,
        t0: x[3],
        sigma: x[4],
        a: x[5..5 + m].to_vec(),
        b: x[5 + m..5 + 2 * m].to_vec(),
        nu: nu.to_vec(),
        omega_l: x[2],
        dtheta: x[0],
        dphi: x[1],
        t_total,
        seed: Some(seed),
    }
}

fn initial_guess(rng: &mut ChaCha8Rng, t_total: f64, m: usize) -> Vec<f64> {
    let mut x = Vec::with_capacity(5 + 2 * m);
    x.push(rng.random_range(0.0..TAU));
    x.push(rng.random_range(0.0..TAU));
    x.push(rng.random_range(-200.0..600.0));
    x.push(rng.random_range(0.3 * t_total..0.7 * t_total));
    x.push(rng.random_range(0.05 * t_total..0.3 * t_total));
    for _ in 0..(2 * m) {
        x.push(rng.random_range(-1.0..1.0));
    }
    x
}

fn search_steps(t_total: f64, m: usize) -> Vec<f64> {
    let mut s = vec![0.6, 0.6, 80.0, 0.05 * t_total, 0.04 * t_total];
    s.extend(std::iter::repeat(0.3).take(2 * m));
    s
}

// Width floor below which the Gaussian is numerically invisible; handled by
// penalty rather than propagation.
const SIGMA_FLOOR: f64 = 1e-4;

fn penalized_cost(spec: &CostSpec, x: &[f64], nu: &[f64], seed: u64) -> f64 {
    let sigma = x[4];
    if sigma <= SIGMA_FLOOR {
        // worst achievable cost plus 10x the violation magnitude
        return 1.0 + 10.0 * (SIGMA_FLOOR - sigma);
    }
    let p = params_from_vector(x, nu, spec.e0_max, spec.t_pulse, seed);
    match evaluate_cost(spec, &p) {
        Ok(c) => c,
        // numerical failure: return a cost that can never win
        Err(_) => 5.0,
    }
}

fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Multi-restart CRAB optimization: per restart, freeze random frequencies,
/// draw a random initial configuration, and run the subspace search on the
/// penalized cost. Restarts run in parallel; the outcome is independent of
/// the worker count.
pub fn optimize_pulse(
    spec: &CostSpec,
    restarts: usize,
    seed: u64,
    e0_max: f64,
) -> Result<OptimizationResult> {
    let mut spec = spec.clone();
    spec.e0_max = e0_max;
    optimize_pulse_with(&spec, &OptimizeOptions::new(restarts, seed))
}

pub fn optimize_pulse_with(spec: &CostSpec, opts: &OptimizeOptions) -> Result<OptimizationResult> {
    if opts.restarts == 0 {
        return Err(Error::invalid("need at least one restart"));
    }
    if spec.orientations.is_empty() {
        return Err(Error::invalid("orientation list must be nonempty"));
    }

    let runs: Vec<(RestartRecord, PulseParams)> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| {
            let rseed = mix_seed(opts.seed, r as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(rseed);
            let nu_seed = rng.random::<u64>();
            let nu = if spec.m > 0 {
                sample_frequencies_with_mode(spec.m, spec.t_pulse, nu_seed, spec.freq_mode)
            } else {
                Vec::new()
            };
            let x0 = initial_guess(&mut rng, spec.t_pulse, spec.m);
            let initial_cost = penalized_cost(spec, &x0, &nu, nu_seed);
            let nm_opts = NmOptions {
                ftol: opts.ftol,
                xtol: opts.xtol,
                max_evals: opts.max_evals_per_restart,
                init_step: search_steps(spec.t_pulse, spec.m),
            };
            let res = nelder_mead_subplex(
                |x| penalized_cost(spec, x, &nu, nu_seed),
                &x0,
                &nm_opts,
                opts.subspace_dim,
            );
            let record = RestartRecord {
                seed: rseed,
                initial_cost,
                final_cost: res.fx,
                evaluations: res.evals,
                converged: res.converged,
            };
            (record, params_from_vector(&res.x, &nu, spec.e0_max, spec.t_pulse, nu_seed))
        })
        .collect();

    let mut best_idx = 0;
    for (i, (rec, _)) in runs.iter().enumerate() {
        if rec.final_cost < runs[best_idx].0.final_cost {
            best_idx = i;
        }
    }
    let mut best_params = runs[best_idx].1.clone();
    let mut best_cost = runs[best_idx].0.final_cost;
    let mut evaluations_total: usize = runs.iter().map(|(r, _)| r.evaluations).sum();

    if opts.polish && best_cost < 1.0 {
        let nu = best_params.nu.clone();
        let nu_seed = best_params.seed.unwrap_or(0);
        let x0 = {
            let p = &best_params;
            let mut v = vec![p.dtheta, p.dphi, p.omega_l, p.t0, p.sigma];
            v.extend_from_slice(&p.a);
            v.extend_from_slice(&p.b);
            v
        };
        let mut steps = search_steps(spec.t_pulse, spec.m);
        for s in &mut steps {
            *s *= 0.15;
        }
        let nm_opts = NmOptions {
            ftol: opts.ftol * 0.1,
            xtol: opts.xtol,
            max_evals: opts.max_evals_per_restart / 2,
            init_step: steps,
        };
        let res = nelder_mead_subplex(
            |x| penalized_cost(spec, x, &nu, nu_seed),
            &x0,
            &nm_opts,
            opts.subspace_dim,
        );
        evaluations_total += res.evals;
        if res.fx < best_cost {
            best_cost = res.fx;
            best_params = params_from_vector(&res.x, &nu, spec.e0_max, spec.t_pulse, nu_seed);
        }
    }

    Ok(OptimizationResult {
        best_params,
        best_cost,
        restarts: runs.into_iter().map(|(r, _)| r).collect(),
        evaluations_total,
    })
}
