//! Orientation thermodynamics in a far-detuned constant field: the AC-Stark
//! energy landscape over the polarization direction, the Rabi-frequency map,
//! the Boltzmann-Gibbs orientation distribution, cone population fractions
//! versus temperature, and a ballistic rigid-rotor orientation-time estimate.
//!
//! The angles here are the plain spherical angles of the field polarization
//! direction; the landscape is centrosymmetric since it depends on |mu . e|^2.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{polarization_vector, FmoModel};

/// Boltzmann constant, cm^-1 per Kelvin.
pub const KB_CM_PER_K: f64 = 0.695034800;
const EV_TO_JOULE: f64 = 1.602176634e-19;

/// Far-detuned orienting field.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OrientingField {
    /// Carrier detuning, cm^-1; must stay away from every site energy.
    pub omega_l: f64,
    /// Amplitude, D^-1 cm^-1.
    pub e0: f64,
}

impl Default for OrientingField {
    fn default() -> Self {
        OrientingField { omega_l: -1000.0, e0: 70.0 }
    }
}

/// Disk-shaped rigid rotor (mass in kg, radius in m, thermal energy in eV).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RotorSpec {
    pub mass: f64,
    pub radius: f64,
    pub thermal_energy_ev: f64,
}

impl Default for RotorSpec {
    fn default() -> Self {
        RotorSpec { mass: 15e-23, radius: 2e-9, thermal_energy_ev: 0.025 }
    }
}

impl RotorSpec {
    /// Moment of inertia about a diameter: M R^2 / 4, kg m^2.
    pub fn moment_of_inertia(&self) -> f64 {
        0.25 * self.mass * self.radius * self.radius
    }
}

/// Ballistic time to rotate by pi/2 at the thermal angular velocity:
/// (pi/2) sqrt(I / (2 E_th)), seconds. Friction is neglected.
pub fn rotation_time(rotor: &RotorSpec) -> f64 {
    let e_th = rotor.thermal_energy_ev * EV_TO_JOULE;
    std::f64::consts::FRAC_PI_2 * (rotor.moment_of_inertia() / (2.0 * e_th)).sqrt()
}

/// AC-Stark landscape Delta(theta, phi) = sum_i |mu_i . e E0|^2 / (w_i - w_l),
/// cm^-1. Scales as e0^2.
pub fn orientation_energy(
    theta: f64,
    phi: f64,
    field: &OrientingField,
    model: &FmoModel,
) -> Result<f64> {
    let e = polarization_vector(theta, phi);
    let mut sum = 0.0;
    for j in 0..7 {
        let det = model.h_site[(j, j)] - field.omega_l;
        if det.abs() < 1.0 {
            return Err(Error::invalid(format!(
                "omega_l = {} is within 1 cm^-1 of site {} energy",
                field.omega_l,
                j + 1
            )));
        }
        let v = model.dipoles[j].dot(&e) * field.e0;
        sum += v * v / det;
    }
    Ok(sum)
}

/// Largest site Rabi energy max_i |mu_i . e| e0, cm^-1.
pub fn max_rabi(theta: f64, phi: f64, e0: f64, model: &FmoModel) -> f64 {
    let e = polarization_vector(theta, phi);
    (0..7).map(|j| (model.dipoles[j].dot(&e) * e0).abs()).fold(0.0, f64::max)
}

/// Boltzmann-Gibbs orientation distribution on a (theta, phi) grid.
/// `cell_prob[i][j]` is the probability of the cell centered at
/// (theta_centers[i], phi_centers[j]) and sums to 1; `density[i][j]` is the
/// probability density per solid angle (constant as T -> infinity). The mode
/// of the density coincides with the argmax of the landscape.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrientationPdf {
    pub theta_centers: Vec<f64>,
    pub phi_centers: Vec<f64>,
    pub cell_prob: Vec<Vec<f64>>,
    pub density: Vec<Vec<f64>>,
}

impl OrientationPdf {
    /// Grid point of maximal density.
    pub fn mode(&self) -> (f64, f64) {
        let mut best = (0, 0);
        for i in 0..self.theta_centers.len() {
            for j in 0..self.phi_centers.len() {
                if self.density[i][j] > self.density[best.0][best.1] {
                    best = (i, j);
                }
            }
        }
        (self.theta_centers[best.0], self.phi_centers[best.1])
    }

    pub fn total(&self) -> f64 {
        self.cell_prob.iter().flatten().sum()
    }
}

/// Default orientation grid: 181 x 360 cells with sin(theta) quadrature.
pub const DEFAULT_GRID: (usize, usize) = (181, 360);

/// p(theta, phi) proportional to exp(+Delta / k_B T): the deepest light
/// shift is the most probable orientation.
pub fn boltzmann_orientation_pdf(
    field: &OrientingField,
    model: &FmoModel,
    temperature: f64,
    grid: (usize, usize),
) -> Result<OrientationPdf> {
    if temperature <= 0.0 {
        return Err(Error::invalid(format!("temperature must be positive, got {temperature}")));
    }
    let (nt, np) = grid;
    assert!(nt >= 2 && np >= 2);
    let kt = KB_CM_PER_K * temperature;
    let dtheta = std::f64::consts::PI / nt as f64;
    let dphi = std::f64::consts::TAU / np as f64;
    let theta_centers: Vec<f64> = (0..nt).map(|i| (i as f64 + 0.5) * dtheta).collect();
    let phi_centers: Vec<f64> = (0..np).map(|j| (j as f64 + 0.5) * dphi).collect();

    let mut delta = vec![vec![0.0; np]; nt];
    let mut dmax = f64::NEG_INFINITY;
    for (i, &t) in theta_centers.iter().enumerate() {
        for (j, &p) in phi_centers.iter().enumerate() {
            let d = orientation_energy(t, p, field, model)?;
            dmax = dmax.max(d);
            delta[i][j] = d;
        }
    }

    let mut cell_prob = vec![vec![0.0; np]; nt];
    let mut density = vec![vec![0.0; np]; nt];
    let mut z = 0.0;
    for i in 0..nt {
        let w = theta_centers[i].sin() * dtheta * dphi;
        for j in 0..np {
            let boltz = ((delta[i][j] - dmax) / kt).exp();
            cell_prob[i][j] = boltz * w;
            density[i][j] = boltz;
            z += cell_prob[i][j];
        }
    }
    for i in 0..nt {
        for j in 0..np {
            cell_prob[i][j] /= z;
            density[i][j] /= z;
        }
    }
    Ok(OrientationPdf { theta_centers, phi_centers, cell_prob, density })
}

/// Fraction of the Boltzmann-distributed sample oriented within a cone of
/// half-angle `opening` about the landscape argmax.
pub fn cone_population_fraction(
    field: &OrientingField,
    model: &FmoModel,
    temperature: f64,
    opening: f64,
) -> Result<f64> {
    assert!(opening > 0.0 && opening <= std::f64::consts::PI);
    let pdf = boltzmann_orientation_pdf(field, model, temperature, DEFAULT_GRID)?;
    let (t_max, p_max) = pdf.mode();
    let axis = polarization_vector(t_max, p_max);
    let cos_open = opening.cos();
    let mut frac = 0.0;
    for (i, &t) in pdf.theta_centers.iter().enumerate() {
        for (j, &p) in pdf.phi_centers.iter().enumerate() {
            if polarization_vector(t, p).dot(&axis) >= cos_open {
                frac += pdf.cell_prob[i][j];
            }
        }
    }
    Ok(frac)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn zero_field_zero_energy() {
        let model = FmoModel::new();
        let field = OrientingField { omega_l: -1000.0, e0: 0.0 };
        assert_eq!(orientation_energy(0.7, 1.3, &field, &model).unwrap(), 0.0);
        assert_eq!(max_rabi(0.7, 1.3, 0.0, &model), 0.0);
    }

    #[test]
    fn pole_proximity_rejected() {
        let model = FmoModel::new();
        let field = OrientingField { omega_l: 450.3, e0: 70.0 };
        assert!(orientation_energy(0.7, 1.3, &field, &model).is_err());
    }

    #[test]
    fn landscape_centrosymmetric_and_quadratic_in_e0() {
        let model = FmoModel::new();
        let field = OrientingField::default();
        let twice = OrientingField { e0: 140.0, ..field };
        for &(t, p) in &[(0.3, 1.0), (1.2, 4.4), (2.8, 0.2)] {
            let d = orientation_energy(t, p, &field, &model).unwrap();
            let d_anti = orientation_energy(PI - t, p + PI, &field, &model).unwrap();
            assert_abs_diff_eq!(d, d_anti, epsilon = 1e-9);
            let d4 = orientation_energy(t, p, &twice, &model).unwrap();
            assert_abs_diff_eq!(d4, 4.0 * d, epsilon = 1e-9);
        }
    }

    #[test]
    fn rabi_along_site5_dipole() {
        let model = FmoModel::new();
        let mu5 = model.dipole(5);
        let t = (mu5.z / mu5.norm()).acos();
        let p = mu5.y.atan2(mu5.x);
        assert_abs_diff_eq!(max_rabi(t, p, 70.0, &model), mu5.norm() * 70.0, epsilon = 1e-9);
    }

    #[test]
    fn pdf_normalized_with_mode_at_argmax() {
        let model = FmoModel::new();
        let field = OrientingField::default();
        let pdf = boltzmann_orientation_pdf(&field, &model, 300.0, (61, 120)).unwrap();
        assert_abs_diff_eq!(pdf.total(), 1.0, epsilon = 1e-8);
        let (tm, pm) = pdf.mode();
        // mode of the density = argmax of the landscape on the same grid
        let mut best = (0.0, 0.0, f64::NEG_INFINITY);
        for &t in &pdf.theta_centers {
            for &p in &pdf.phi_centers {
                let d = orientation_energy(t, p, &field, &model).unwrap();
                if d > best.2 {
                    best = (t, p, d);
                }
            }
        }
        assert_eq!((tm, pm), (best.0, best.1));
    }

    #[test]
    fn infinite_temperature_limit_uniform() {
        let model = FmoModel::new();
        let field = OrientingField::default();
        let pdf = boltzmann_orientation_pdf(&field, &model, 1e9, (61, 120)).unwrap();
        let flat: Vec<f64> = pdf.density.iter().flatten().copied().collect();
        let (lo, hi) = flat.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
            (l.min(v), h.max(v))
        });
        assert!(hi / lo - 1.0 < 1e-3, "density ratio {} at T = 1e9", hi / lo);
    }

    #[test]
    fn cone_fraction_limits() {
        let model = FmoModel::new();
        let field = OrientingField::default();
        let whole = cone_population_fraction(&field, &model, 300.0, PI).unwrap();
        assert_abs_diff_eq!(whole, 1.0, epsilon = 1e-8);
        let narrow = cone_population_fraction(&field, &model, 300.0, 0.2 * PI).unwrap();
        let wide = cone_population_fraction(&field, &model, 300.0, 0.5 * PI).unwrap();
        assert!(narrow < wide && wide < 1.0);
        let cold = cone_population_fraction(&field, &model, 77.0, 0.2 * PI).unwrap();
        assert!(cold > narrow, "cooling must concentrate the sample");
        // T -> infinity: fraction -> cap area fraction (1 - cos a)/2
        let hot = cone_population_fraction(&field, &model, 1e9, 0.2 * PI).unwrap();
        assert_abs_diff_eq!(hot, 0.5 * (1.0 - (0.2 * PI).cos()), epsilon = 2e-3);
    }

    #[test]
    fn rotor_scaling() {
        let r = RotorSpec::default();
        let i0 = r.moment_of_inertia();
        assert_abs_diff_eq!(i0, 0.25 * 15e-23 * 4e-18, epsilon = 1e-45);
        let doubled = RotorSpec { radius: 2.0 * r.radius, ..r };
        assert_abs_diff_eq!(doubled.moment_of_inertia(), 4.0 * i0, epsilon = 1e-40 * i0);
        assert_abs_diff_eq!(
            rotation_time(&doubled),
            2.0 * rotation_time(&r),
            epsilon = 1e-12 * rotation_time(&r)
        );
        assert!(rotation_time(&r) > 0.0);
    }
}
