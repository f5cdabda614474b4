//! Transport-pathway experiments: efficiency curves per initial state,
//! per-orientation transfer distributions, and distribution
//! distinguishability (Bayes classification error).

use rayon::prelude::*;

use crate::ensemble::{EnsembleDistribution, Orientation};
use crate::error::{Error, Result};
use crate::model::{DensityMatrix, FmoModel};
use crate::propagator::{
    propagate, propagate_final, stable_free_dt, DriveSpec, Trajectory, DT_PULSE, DT_SEARCH,
};
use crate::pulse::PulseParams;

/// Initial condition of a transport run.
#[derive(Debug, Clone)]
pub enum InitialState {
    /// Exact bright state |+> = (|1> + |2>)/sqrt(2).
    ExactB,
    /// Exact dark mixture: populations 0.70/0.25/0.05 on sites 5/6/7.
    ExactD,
    /// Exact |-> = (|1> - |2>)/sqrt(2).
    ExactMinus,
    /// State prepared by a pulse (run sink-free before transport starts).
    Prepared { pulse: PulseParams, orientation: Orientation },
}

impl InitialState {
    fn realize(&self, model: &FmoModel) -> Result<DensityMatrix> {
        match self {
            InitialState::ExactB => Ok(DensityMatrix::plus()),
            InitialState::ExactD => Ok(DensityMatrix::dark_mixture()),
            InitialState::ExactMinus => Ok(DensityMatrix::minus()),
            InitialState::Prepared { pulse, orientation } => {
                let drive = DriveSpec::pump(pulse, *orientation);
                propagate_final(&DensityMatrix::ground(), model, &drive, DT_PULSE, pulse.t_total)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct TransportScenario {
    pub initial: InitialState,
    /// Uniform dephasing rate, ps^-1.
    pub gamma: f64,
    /// Transport horizon, ps.
    pub horizon: f64,
    /// Sink active during transport (it always is in the standard scenarios;
    /// exposed for sink-free checks).
    pub sink: bool,
}

impl TransportScenario {
    pub fn new(initial: InitialState, gamma: f64, horizon: f64) -> Self {
        TransportScenario { initial, gamma, horizon, sink: true }
    }
}

/// p_sink(t) over the horizon. Pulse preparation (if any) runs sink-free;
/// the sink then switches on at t = 0 of the returned trajectory.
pub fn transport_curve(s: &TransportScenario, model: &FmoModel) -> Result<Trajectory> {
    if s.horizon <= 0.0 {
        return Err(Error::invalid(format!("horizon must be positive, got {}", s.horizon)));
    }
    let m = model.with_uniform_deph(s.gamma);
    let rho0 = s.initial.realize(&m)?;
    let drive = DriveSpec::free().with_sink(s.sink);
    let dt = stable_free_dt(&m);
    let n_steps = (s.horizon / dt).ceil() as usize;
    let stride = (n_steps / 1000).max(1);
    propagate(&rho0, &m, &drive, dt, s.horizon, stride)
}

/// Transfer efficiency after `t` ps for each orientation, for two
/// preparation pulses: prepare sink-free, then transport with the sink on.
pub fn transport_distribution(
    pulse_b: &PulseParams,
    pulse_d: &PulseParams,
    orientations: &[Orientation],
    gamma: f64,
    t: f64,
) -> Result<(EnsembleDistribution, EnsembleDistribution)> {
    let model = FmoModel::new().with_uniform_deph(gamma);
    let run = |pulse: &PulseParams| -> Result<EnsembleDistribution> {
        let values: Result<Vec<f64>> = orientations
            .par_iter()
            .enumerate()
            .map(|(i, &o)| {
                let prep = DriveSpec::pump(pulse, o);
                let rho = propagate_final(
                    &DensityMatrix::ground(),
                    &model,
                    &prep,
                    DT_SEARCH,
                    pulse.t_total,
                )
                .map_err(|e| Error::invalid(format!("sample {i}: {e}")))?;
                let free = DriveSpec::free();
                let fin = propagate_final(&rho, &model, &free, stable_free_dt(&model), t)
                    .map_err(|e| Error::invalid(format!("sample {i}: {e}")))?;
                Ok(fin.population(8))
            })
            .collect();
        Ok(EnsembleDistribution::from_costs(values?))
    };
    Ok((run(pulse_b)?, run(pulse_d)?))
}

/// Bayes classification error between two sampled distributions:
/// (1/2) sum_bins min(p1, p2) * width on a shared binning rebuilt from the
/// raw samples. 0 for disjoint supports, 0.5 for identical distributions.
pub fn distribution_overlap_error(d1: &EnsembleDistribution, d2: &EnsembleDistribution) -> f64 {
    distribution_overlap_error_binned(d1, d2, 50)
}

pub fn distribution_overlap_error_binned(
    d1: &EnsembleDistribution,
    d2: &EnsembleDistribution,
    bins: usize,
) -> f64 {
    assert!(bins >= 1 && !d1.values.is_empty() && !d2.values.is_empty());
    let lo = d1
        .values
        .iter()
        .chain(&d2.values)
        .fold(f64::INFINITY, |a, &b| a.min(b));
    let hi = d1
        .values
        .iter()
        .chain(&d2.values)
        .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    if hi <= lo {
        // all mass of both samples at one point: indistinguishable
        return 0.5;
    }
    let width = (hi - lo) / bins as f64;
    let hist = |values: &[f64]| -> Vec<f64> {
        let mut counts = vec![0.0; bins];
        for &v in values {
            let idx = (((v - lo) / width).floor() as isize).clamp(0, bins as isize - 1) as usize;
            counts[idx] += 1.0;
        }
        let n = values.len() as f64;
        counts.iter().map(|c| c / (n * width)).collect()
    };
    let p1 = hist(&d1.values);
    let p2 = hist(&d2.values);
    0.5 * p1.iter().zip(&p2).map(|(a, b)| a.min(*b) * width).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn dist(values: Vec<f64>) -> EnsembleDistribution {
        EnsembleDistribution::from_values(values, 10, 0.0, 1.0)
    }

    #[test]
    fn overlap_limits() {
        let a = dist(vec![0.1, 0.12, 0.15, 0.11, 0.13]);
        let b = dist(vec![0.8, 0.85, 0.9, 0.82, 0.88]);
        assert_eq!(distribution_overlap_error(&a, &b), 0.0);
        assert_abs_diff_eq!(distribution_overlap_error(&a, &a), 0.5, epsilon = 1e-12);
        // symmetry
        let c = dist(vec![0.1, 0.3, 0.5, 0.2, 0.4]);
        assert_abs_diff_eq!(
            distribution_overlap_error(&a, &c),
            distribution_overlap_error(&c, &a),
            epsilon = 1e-12
        );
    }

    #[test]
    fn overlap_invariant_under_common_rescaling() {
        let a: Vec<f64> = (0..400).map(|i| 0.2 + 0.001 * (i % 73) as f64).collect();
        let b: Vec<f64> = (0..400).map(|i| 0.25 + 0.001 * (i % 97) as f64).collect();
        let e1 = distribution_overlap_error(&dist(a.clone()), &dist(b.clone()));
        let scale = |v: &[f64]| v.iter().map(|x| 3.0 * x - 0.1).collect::<Vec<_>>();
        let e2 = distribution_overlap_error(
            &EnsembleDistribution::from_values(scale(&a), 10, -1.0, 2.0),
            &EnsembleDistribution::from_values(scale(&b), 10, -1.0, 2.0),
        );
        assert_abs_diff_eq!(e1, e2, epsilon = 1e-12);
    }

    #[test]
    fn overlap_gaussian_oracle() {
        // two unit-variance normals 4 sigma apart: error = erfc(sqrt(2))/2
        use rand::SeedableRng;
        use rand_distr::{Distribution, Normal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(123);
        let n = 100_000;
        let g1 = Normal::new(0.0, 1.0).unwrap();
        let g2 = Normal::new(4.0, 1.0).unwrap();
        let v1: Vec<f64> = (0..n).map(|_| g1.sample(&mut rng)).collect();
        let v2: Vec<f64> = (0..n).map(|_| g2.sample(&mut rng)).collect();
        let d1 = EnsembleDistribution::from_values(v1, 50, -5.0, 9.0);
        let d2 = EnsembleDistribution::from_values(v2, 50, -5.0, 9.0);
        let err = distribution_overlap_error_binned(&d1, &d2, 100);
        assert_abs_diff_eq!(err, 0.0228, epsilon = 0.004);
    }

    #[test]
    fn site3_drains_completely() {
        // closed single-excitation space with an irreversible drain
        let model = FmoModel::new().with_uniform_deph(0.0).with_uniform_diss(0.0);
        let s = TransportScenario::new(InitialState::ExactMinus, 0.0, 0.1);
        assert!(transport_curve(&TransportScenario { horizon: -1.0, ..s }, &model).is_err());
        let s = TransportScenario::new(
            InitialState::Prepared {
                pulse: PulseParams::gaussian(0.0, 0.125, 0.05, 0.0, 0.0, 0.0, 0.25),
                orientation: Orientation::ZERO,
            },
            0.0,
            0.1,
        );
        // zero-amplitude pulse leaves the ground state alone: nothing to drain
        let traj = transport_curve(&s, &model).unwrap();
        assert!(traj.final_p_sink() < 1e-12);

        let s3 = TransportScenario {
            initial: InitialState::ExactB,
            gamma: 0.0,
            horizon: 2.0,
            sink: true,
        };
        let traj = transport_curve(&s3, &model).unwrap();
        assert!(traj.final_p_sink() > 0.5);
        for w in traj.p_sink.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
    }
}
