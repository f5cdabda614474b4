//! Orientation sampling (disordered, dodecahedral, conical, isotropic),
//! ensemble statistics of pulse outcomes, and state fidelity.

use nalgebra::Vector3;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::model::{polarization_vector, DensityMatrix, FmoModel, Mat9, RMat9};
use crate::optimizer::CostKind;
use crate::propagator::{propagate_final, DriveSpec};
use crate::pulse::PulseParams;

/// Angular offsets applied to the polarization angles on top of the site-1
/// dipole frame (and any pulse offsets). Stored unwrapped.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Orientation {
    pub theta: f64,
    pub phi: f64,
}

impl Orientation {
    pub const ZERO: Orientation = Orientation { theta: 0.0, phi: 0.0 };

    pub fn new(theta: f64, phi: f64) -> Self {
        Orientation { theta, phi }
    }

    /// Unit vector with these angles read as plain spherical coordinates.
    pub fn unit_vector(&self) -> Vector3<f64> {
        polarization_vector(self.theta, self.phi)
    }

    fn from_vector(v: &Vector3<f64>) -> Self {
        let n = v.norm();
        Orientation { theta: f64::acos((v.z / n).clamp(-1.0, 1.0)), phi: f64::atan2(v.y, v.x) }
    }
}

fn mix_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer over the pair
    let mut z = seed ^ index.wrapping_mul(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Additive angular disorder: theta = center.theta + eta s1,
/// phi = center.phi + eta s2 with s1, s2 uniform in [0, 2 pi].
/// eta = 0.01 is "1%" disorder, eta = 1 the "100%" case.
pub fn disorder_orientations(center: Orientation, eta: f64, n: usize, seed: u64) -> Vec<Orientation> {
    assert!(eta >= 0.0, "disorder strength must be >= 0");
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0xd150));
    (0..n)
        .map(|_| {
            let s1: f64 = rng.random_range(0.0..TAU);
            let s2: f64 = rng.random_range(0.0..TAU);
            Orientation::new(center.theta + eta * s1, center.phi + eta * s2)
        })
        .collect()
}

/// Fully random orientations in the additive-angle sense (the 100% disorder
/// recipe around zero).
pub fn random_orientations(n: usize, seed: u64) -> Vec<Orientation> {
    disorder_orientations(Orientation::ZERO, 1.0, n, seed)
}

/// Orientations uniform on the sphere (area measure), for samplings meant to
/// be isotropic rather than angle-additive.
pub fn isotropic_orientations(n: usize, seed: u64) -> Vec<Orientation> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x150));
    (0..n)
        .map(|_| {
            let z: f64 = rng.random_range(-1.0..1.0);
            let phi: f64 = rng.random_range(0.0..TAU);
            Orientation::new(z.acos(), phi)
        })
        .collect()
}

/// The 20 vertex directions of a regular dodecahedron, as orientations.
/// Centrosymmetric: contains -v for every vertex v.
pub fn dodecahedron_orientations() -> Vec<Orientation> {
    let g = (1.0 + 5.0_f64.sqrt()) / 2.0;
    let ig = 1.0 / g;
    let mut verts: Vec<Vector3<f64>> = Vec::with_capacity(20);
    for &x in &[-1.0, 1.0] {
        for &y in &[-1.0, 1.0] {
            for &z in &[-1.0, 1.0] {
                verts.push(Vector3::new(x, y, z));
            }
        }
    }
    for &a in &[-1.0, 1.0] {
        for &b in &[-1.0, 1.0] {
            verts.push(Vector3::new(0.0, a * ig, b * g));
            verts.push(Vector3::new(a * ig, b * g, 0.0));
            verts.push(Vector3::new(b * g, 0.0, a * ig));
        }
    }
    verts.iter().map(|v| Orientation::from_vector(&v.normalize().into())).collect()
}

/// `n` directions uniform over the spherical cap of half-angle `opening`
/// about the axis direction.
pub fn cone_orientations(axis: Orientation, opening: f64, n: usize, seed: u64) -> Vec<Orientation> {
    assert!(opening > 0.0 && opening <= std::f64::consts::PI, "opening must be in (0, pi]");
    let a = axis.unit_vector();
    // orthonormal frame around the axis
    let helper =
        if a.z.abs() < 0.9 { Vector3::new(0.0, 0.0, 1.0) } else { Vector3::new(1.0, 0.0, 0.0) };
    let u = a.cross(&helper).normalize();
    let v = a.cross(&u);
    let cos_min = opening.cos();
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0xc0e));
    (0..n)
        .map(|_| {
            let c: f64 = rng.random_range(cos_min..=1.0);
            let s = (1.0 - c * c).sqrt();
            let beta: f64 = rng.random_range(0.0..TAU);
            let dir = u * (s * beta.cos()) + v * (s * beta.sin()) + a * c;
            Orientation::from_vector(&dir)
        })
        .collect()
}

/// Per-sample scalar outcomes with summary statistics and a histogram whose
/// densities integrate to 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleDistribution {
    pub values: Vec<f64>,
    pub mean: f64,
    pub stddev: f64,
    pub bin_edges: Vec<f64>,
    pub densities: Vec<f64>,
}

impl EnsembleDistribution {
    /// Histogram over [lo, hi] with `nbins` uniform bins; values outside the
    /// range are clamped into the edge bins.
    pub fn from_values(values: Vec<f64>, nbins: usize, lo: f64, hi: f64) -> Self {
        assert!(!values.is_empty() && nbins >= 1 && hi > lo);
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let width = (hi - lo) / nbins as f64;
        let bin_edges: Vec<f64> = (0..=nbins).map(|i| lo + width * i as f64).collect();
        let mut counts = vec![0usize; nbins];
        for &v in &values {
            let idx = (((v - lo) / width).floor() as isize).clamp(0, nbins as isize - 1) as usize;
            counts[idx] += 1;
        }
        let densities = counts.iter().map(|&c| c as f64 / (n * width)).collect();
        EnsembleDistribution { values, mean, stddev: var.sqrt(), bin_edges, densities }
    }

    /// Default binning for cost-like values: 50 bins on [0, 1].
    pub fn from_costs(values: Vec<f64>) -> Self {
        Self::from_values(values, 50, 0.0, 1.0)
    }
}

/// One propagation and cost evaluation per orientation. The initial state
/// and sink handling follow the cost kind (preparation costs start from the
/// ground state, the probe cost from site 3; both run sink-free).
pub fn ensemble_evaluate(
    pulse: &PulseParams,
    orientations: &[Orientation],
    cost_kind: CostKind,
    model: &FmoModel,
    gamma: f64,
    dt: f64,
) -> Result<EnsembleDistribution> {
    let m = model.with_uniform_deph(gamma);
    let rho0 = cost_kind.initial_state();
    let values: Result<Vec<f64>> = orientations
        .par_iter()
        .enumerate()
        .map(|(i, &o)| {
            let drive = DriveSpec::pump(pulse, o);
            let rho = propagate_final(&rho0, &m, &drive, dt, pulse.t_total)
                .map_err(|e| Error::invalid(format!("sample {i}: {e}")))?;
            Ok(cost_kind.evaluate(&rho))
        })
        .collect();
    Ok(EnsembleDistribution::from_costs(values?))
}

/// Arithmetic mean of rho(t) over the sample orientations.
pub fn ensemble_mean_density(
    pulse: &PulseParams,
    orientations: &[Orientation],
    model: &FmoModel,
    gamma: f64,
    t: f64,
    dt: f64,
) -> Result<DensityMatrix> {
    assert!(!orientations.is_empty());
    let m = model.with_uniform_deph(gamma);
    let states: Result<Vec<Mat9>> = orientations
        .par_iter()
        .enumerate()
        .map(|(i, &o)| {
            let drive = DriveSpec::pump(pulse, o);
            propagate_final(&DensityMatrix::ground(), &m, &drive, dt, t)
                .map(|r| r.0)
                .map_err(|e| Error::invalid(format!("sample {i}: {e}")))
        })
        .collect();
    let states = states?;
    let sum = states.iter().fold(Mat9::zeros(), |acc, s| acc + s);
    Ok(DensityMatrix(sum * Complex64::new(1.0 / states.len() as f64, 0.0)))
}

/// Entrywise modulus, for the density-matrix heatmap exports.
pub fn modulus_matrix(rho: &DensityMatrix) -> RMat9 {
    RMat9::from_fn(|i, j| rho.0[(i, j)].norm())
}

/// Uhlmann fidelity F(rho, sigma) = tr sqrt(sqrt(sigma) rho sqrt(sigma)),
/// via Hermitian eigendecompositions with negative eigenvalues (above -1e-8)
/// clipped to zero.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    let sqrt_sigma = psd_sqrt(&sigma.0)?;
    psd_check(&rho.0)?;
    let inner = sqrt_sigma * rho.0 * sqrt_sigma;
    let herm = (inner + inner.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = herm.symmetric_eigenvalues();
    Ok(eig.iter().map(|&l| l.max(0.0).sqrt()).sum())
}

fn psd_check(m: &Mat9) -> Result<()> {
    let min = m.symmetric_eigenvalues().iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if min < -1e-8 {
        return Err(Error::NotPositive(min));
    }
    Ok(())
}

fn psd_sqrt(m: &Mat9) -> Result<Mat9> {
    let eig = nalgebra::SymmetricEigen::new(*m);
    let min = eig.eigenvalues.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if min < -1e-8 {
        return Err(Error::NotPositive(min));
    }
    let mut out = Mat9::zeros();
    for k in 0..9 {
        let lk = eig.eigenvalues[k].max(0.0).sqrt();
        let vk = eig.eigenvectors.column(k);
        for i in 0..9 {
            for j in 0..9 {
                out[(i, j)] += vk[i] * vk[j].conj() * Complex64::new(lk, 0.0);
            }
        }
    }
    Ok(out)
}
