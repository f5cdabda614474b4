//! Static physics description: the 7-site Hamiltonian, dipole table, noise
//! rates, and the 9-level density matrix over {ground, sites 1..7, sink}.

use nalgebra::{SMatrix, SVector, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// hbar in cm^-1 ps. The exact conversion 1/(2 pi c) with c in cm/ps;
/// quoted elsewhere as ~5.3.
pub const HBAR_CM_PS: f64 = 5.3088;

/// Zero of energy of the site basis, cm^-1 (~800 nm). Recorded for reference;
/// all internal energies are relative to this shift.
pub const ENERGY_SHIFT_CM: f64 = 12230.0;

/// Ground-state level index.
pub const GROUND: usize = 0;
/// Sink level index.
pub const SINK: usize = 8;
/// Total number of levels: ground + 7 sites + sink.
pub const NLEVELS: usize = 9;

/// Default uniform dissipation rate, ps^-1 (~1 ns exciton lifetime).
pub const DEFAULT_GAMMA_DISS: f64 = 5e-4;
/// Default sink rate, ps^-1.
pub const DEFAULT_GAMMA_SINK: f64 = 6.3;
/// Default uniform dephasing rate, ps^-1 (the baseline noise level used in
/// most scenarios; freely overridable).
pub const DEFAULT_GAMMA_DEPH: f64 = 1.0;

pub type Mat7 = SMatrix<f64, 7, 7>;
pub type Mat9 = SMatrix<Complex64, 9, 9>;
pub type RMat9 = SMatrix<f64, 9, 9>;
pub type Vec9 = SVector<Complex64, 9>;

/// Site Hamiltonian in the site basis, cm^-1, relative to the 12230 cm^-1
/// shift. Row/column j corresponds to site j+1.
const H_SITE_CM: [[f64; 7]; 7] = [
    [215.0, -104.1, 5.1, -4.3, 4.7, -15.1, -7.8],
    [-104.1, 220.0, 32.6, 7.1, 5.4, 8.3, 0.8],
    [5.1, 32.6, 0.0, -46.8, 1.0, -8.1, 5.1],
    [-4.3, 7.1, -46.8, 125.0, -70.7, -14.7, -61.5],
    [4.7, 5.4, 1.0, -70.7, 450.0, 89.7, -2.5],
    [-15.1, 8.3, -8.1, -14.7, 89.7, 330.0, 32.7],
    [-7.8, 0.8, 5.1, -61.5, -2.5, 32.7, 280.0],
];

/// Transition dipole moments of the 7 chromophores, Debye, lab axes (x, y, z).
const DIPOLES_DEBYE: [[f64; 3]; 7] = [
    [-3.081, 2.119, -1.669],
    [-3.481, -2.083, -0.190],
    [-0.819, -3.972, -0.331],
    [-3.390, 2.111, -1.080],
    [-3.196, -2.361, 0.792],
    [-0.621, 3.636, 1.882],
    [-1.619, 2.850, -2.584],
];

/// Immutable physics description of the complex: Hamiltonian, dipoles, and
/// noise rates. Safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct FmoModel {
    /// 7x7 real symmetric site Hamiltonian, cm^-1.
    pub h_site: Mat7,
    /// Site transition dipoles, Debye; `dipoles[j]` is site j+1.
    pub dipoles: [Vector3<f64>; 7],
    /// Per-site dephasing rates gamma_j, ps^-1.
    pub gamma_deph: [f64; 7],
    /// Per-site dissipation rates Gamma_j, ps^-1.
    pub gamma_diss: [f64; 7],
    /// Sink rate Gamma_sink, ps^-1 (site 3 -> sink).
    pub gamma_sink: f64,
    /// hbar in cm^-1 ps.
    pub hbar: f64,
}

/// Optional substitutions applied on top of the built-in tables.
/// Uniform scalar rates only; unknown keys are rejected on deserialization.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_deph: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_diss: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_sink: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_site: Option<[[f64; 7]; 7]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dipoles: Option<[[f64; 3]; 7]>,
}

/// Build the model, applying any overrides on top of the built-in tables.
pub fn build_fmo_model(overrides: Option<&ModelOverrides>) -> Result<FmoModel> {
    let mut h = Mat7::from_fn(|i, j| H_SITE_CM[i][j]);
    let mut dipoles =
        std::array::from_fn::<_, 7, _>(|j| Vector3::from_column_slice(&DIPOLES_DEBYE[j]));
    let mut gamma_deph = [DEFAULT_GAMMA_DEPH; 7];
    let mut gamma_diss = [DEFAULT_GAMMA_DISS; 7];
    let mut gamma_sink = DEFAULT_GAMMA_SINK;

    if let Some(ov) = overrides {
        if let Some(g) = ov.gamma_deph {
            check_rate("gamma_deph", g)?;
            gamma_deph = [g; 7];
        }
        if let Some(g) = ov.gamma_diss {
            check_rate("gamma_diss", g)?;
            gamma_diss = [g; 7];
        }
        if let Some(g) = ov.gamma_sink {
            check_rate("gamma_sink", g)?;
            gamma_sink = g;
        }
        if let Some(m) = &ov.h_site {
            h = Mat7::from_fn(|i, j| m[i][j]);
            if h.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid("h_site override contains non-finite entries"));
            }
        }
        if let Some(d) = &ov.dipoles {
            dipoles = std::array::from_fn(|j| Vector3::from_column_slice(&d[j]));
            if dipoles.iter().any(|v| v.iter().any(|x| !x.is_finite())) {
                return Err(Error::invalid("dipole override contains non-finite entries"));
            }
        }
    }

    for i in 0..7 {
        for j in 0..7 {
            if h[(i, j)] != h[(j, i)] {
                return Err(Error::invalid(format!(
                    "h_site not symmetric at ({}, {})",
                    i + 1,
                    j + 1
                )));
            }
        }
    }

    Ok(FmoModel {
        h_site: h,
        dipoles,
        gamma_deph,
        gamma_diss,
        gamma_sink,
        hbar: HBAR_CM_PS,
    })
}

fn check_rate(name: &str, value: f64) -> Result<()> {
    if !value.is_finite() || value < 0.0 {
        return Err(Error::invalid(format!("{name} must be a finite rate >= 0, got {value}")));
    }
    Ok(())
}

impl Default for FmoModel {
    fn default() -> Self {
        build_fmo_model(None).expect("built-in tables are valid")
    }
}

impl FmoModel {
    pub fn new() -> Self {
        Self::default()
    }

    /// Site energy hbar*omega_j, cm^-1, for 1-based site j.
    pub fn site_energy(&self, j: usize) -> f64 {
        assert!((1..=7).contains(&j), "site index must be 1..=7");
        self.h_site[(j - 1, j - 1)]
    }

    /// Coupling hbar*v_{j,l}, cm^-1, for 1-based site indices.
    pub fn coupling(&self, j: usize, l: usize) -> f64 {
        assert!((1..=7).contains(&j) && (1..=7).contains(&l));
        self.h_site[(j - 1, l - 1)]
    }

    /// Transition dipole of 1-based site j, Debye.
    pub fn dipole(&self, j: usize) -> Vector3<f64> {
        assert!((1..=7).contains(&j), "site index must be 1..=7");
        self.dipoles[j - 1]
    }

    /// Exciton energies: eigenvalues of the site Hamiltonian, ascending, cm^-1.
    pub fn exciton_energies(&self) -> [f64; 7] {
        let ev = self.h_site.symmetric_eigenvalues();
        let mut out = [0.0; 7];
        for (o, v) in out.iter_mut().zip(ev.iter()) {
            *o = *v;
        }
        out.sort_by(|a, b| a.total_cmp(b));
        out
    }

    /// Copy with a uniform dephasing rate, ps^-1.
    pub fn with_uniform_deph(&self, gamma: f64) -> Self {
        let mut m = self.clone();
        m.gamma_deph = [gamma; 7];
        m
    }

    /// Copy with a uniform dissipation rate, ps^-1.
    pub fn with_uniform_diss(&self, gamma: f64) -> Self {
        let mut m = self.clone();
        m.gamma_diss = [gamma; 7];
        m
    }

    /// Copy with a different sink rate, ps^-1.
    pub fn with_sink_rate(&self, gamma: f64) -> Self {
        let mut m = self.clone();
        m.gamma_sink = gamma;
        m
    }
}

/// Spherical angles (theta, phi) of the site-1 dipole: the reference frame
/// for all polarization offsets.
pub fn site1_polar_angles(model: &FmoModel) -> Result<(f64, f64)> {
    let mu = model.dipoles[0];
    let norm = mu.norm();
    if norm == 0.0 {
        return Err(Error::invalid("site-1 dipole has zero length"));
    }
    Ok((f64::acos(mu.z / norm), f64::atan2(mu.y, mu.x)))
}

/// Unit polarization vector e = (sin t cos p, sin t sin p, cos t).
/// Defined for all real angles; 2 pi periodic in both.
pub fn polarization_vector(theta: f64, phi: f64) -> Vector3<f64> {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Vector3::new(st * cp, st * sp, ct)
}

/// 9x9 complex Hermitian unit-trace state over {ground, sites 1..7, sink}.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(pub Mat9);

impl DensityMatrix {
    pub fn zeros() -> Self {
        DensityMatrix(Mat9::zeros())
    }

    /// Electronic ground state |0><0|.
    pub fn ground() -> Self {
        let mut m = Mat9::zeros();
        m[(0, 0)] = Complex64::new(1.0, 0.0);
        DensityMatrix(m)
    }

    /// Single-site excitation |j><j| for 1-based site j (or 8 for the sink).
    pub fn site(j: usize) -> Self {
        assert!((1..=8).contains(&j), "level index must be 1..=8");
        let mut m = Mat9::zeros();
        m[(j, j)] = Complex64::new(1.0, 0.0);
        DensityMatrix(m)
    }

    /// Pure state from an amplitude vector (normalized internally).
    pub fn pure(psi: &Vec9) -> Self {
        let n = psi.norm();
        assert!(n > 0.0, "zero state vector");
        let v = psi / Complex64::new(n, 0.0);
        DensityMatrix(&v * v.adjoint())
    }

    /// Bright state |+> = (|1> + |2>)/sqrt(2).
    pub fn plus() -> Self {
        let mut psi = Vec9::zeros();
        psi[1] = Complex64::new(1.0, 0.0);
        psi[2] = Complex64::new(1.0, 0.0);
        Self::pure(&psi)
    }

    /// Antisymmetric state |-> = (|1> - |2>)/sqrt(2).
    pub fn minus() -> Self {
        let mut psi = Vec9::zeros();
        psi[1] = Complex64::new(1.0, 0.0);
        psi[2] = Complex64::new(-1.0, 0.0);
        Self::pure(&psi)
    }

    /// Incoherent dark-state mixture: populations 0.70/0.25/0.05 on sites
    /// 5/6/7, vanishing coherences.
    pub fn dark_mixture() -> Self {
        let mut m = Mat9::zeros();
        m[(5, 5)] = Complex64::new(0.70, 0.0);
        m[(6, 6)] = Complex64::new(0.25, 0.0);
        m[(7, 7)] = Complex64::new(0.05, 0.0);
        DensityMatrix(m)
    }

    pub fn population(&self, level: usize) -> f64 {
        self.0[(level, level)].re
    }

    pub fn coherence(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        (0..NLEVELS).map(|i| self.0[(i, i)].re).sum()
    }

    /// max |rho_ij - conj(rho_ji)|.
    pub fn hermiticity_error(&self) -> f64 {
        let mut err: f64 = 0.0;
        for i in 0..NLEVELS {
            for j in 0..NLEVELS {
                err = err.max((self.0[(i, j)] - self.0[(j, i)].conj()).norm());
            }
        }
        err
    }

    /// Smallest eigenvalue of the (Hermitian part of the) state.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = self.resymmetrized();
        herm.0
            .symmetric_eigenvalues()
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b))
    }

    /// (rho + rho^dagger)/2.
    pub fn resymmetrized(&self) -> Self {
        DensityMatrix((self.0 + self.0.adjoint()) * Complex64::new(0.5, 0.0))
    }

    /// Check Hermiticity (1e-10), trace (tol), and positivity (-1e-8).
    pub fn validate(&self, trace_tol: f64) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > 1e-10 {
            return Err(Error::invalid(format!("hermiticity error {herm:.3e} > 1e-10")));
        }
        let dt = (self.trace() - 1.0).abs();
        if dt > trace_tol {
            return Err(Error::invalid(format!("trace deviation {dt:.3e} > {trace_tol:.1e}")));
        }
        let min = self.min_eigenvalue();
        if min < -1e-8 {
            return Err(Error::NotPositive(min));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Plain Jacobi rotation eigensolver, independent of the nalgebra path.
    fn jacobi_eigenvalues(mut a: [[f64; 7]; 7]) -> Vec<f64> {
        for _sweep in 0..100 {
            let mut off = 0.0;
            for p in 0..7 {
                for q in (p + 1)..7 {
                    off += a[p][q] * a[p][q];
                }
            }
            if off < 1e-24 {
                break;
            }
            for p in 0..7 {
                for q in (p + 1)..7 {
                    if a[p][q].abs() < 1e-18 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..7 {
                        let akp = a[k][p];
                        let akq = a[k][q];
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..7 {
                        let apk = a[p][k];
                        let aqk = a[q][k];
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut ev: Vec<f64> = (0..7).map(|i| a[i][i]).collect();
        ev.sort_by(|x, y| x.total_cmp(y));
        ev
    }

    #[test]
    fn paper_matrix_entries() {
        let m = FmoModel::new();
        assert_eq!(m.coupling(1, 2), -104.1);
        assert_eq!(m.site_energy(5), 450.0);
        assert_eq!(m.site_energy(3), 0.0);
        assert_eq!(m.dipole(1), Vector3::new(-3.081, 2.119, -1.669));
        assert_eq!(m.gamma_diss, [5e-4; 7]);
        assert_eq!(m.gamma_sink, 6.3);
    }

    #[test]
    fn h_site_exactly_symmetric() {
        let m = FmoModel::new();
        for i in 0..7 {
            for j in 0..7 {
                assert_eq!(m.h_site[(i, j)], m.h_site[(j, i)]);
            }
        }
    }

    #[test]
    fn negative_rate_override_rejected() {
        let ov = ModelOverrides { gamma_deph: Some(-1.0), ..Default::default() };
        assert!(build_fmo_model(Some(&ov)).is_err());
        let ov = ModelOverrides { gamma_sink: Some(f64::NAN), ..Default::default() };
        assert!(build_fmo_model(Some(&ov)).is_err());
    }

    #[test]
    fn override_applies() {
        let ov = ModelOverrides { gamma_deph: Some(3.5), ..Default::default() };
        let m = build_fmo_model(Some(&ov)).unwrap();
        assert_eq!(m.gamma_deph, [3.5; 7]);
        assert_eq!(m.gamma_sink, 6.3);
    }

    #[test]
    fn asymmetric_h_override_rejected() {
        let mut h = H_SITE_CM;
        h[0][3] += 1.0;
        let ov = ModelOverrides { h_site: Some(h), ..Default::default() };
        assert!(build_fmo_model(Some(&ov)).is_err());
    }

    #[test]
    fn exciton_energies_match_jacobi_oracle() {
        let m = FmoModel::new();
        let ours = m.exciton_energies();
        let oracle = jacobi_eigenvalues(H_SITE_CM);
        for (a, b) in ours.iter().zip(oracle.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-8);
        }
    }

    #[test]
    fn site1_angles() {
        let m = FmoModel::new();
        let (theta1, phi1) = site1_polar_angles(&m).unwrap();
        // spherical conversion of (-3.081, 2.119, -1.669), |mu1| ~ 4.095
        let norm = m.dipole(1).norm();
        assert_abs_diff_eq!(norm, 4.0949, epsilon = 1e-4);
        assert_abs_diff_eq!(theta1, f64::acos(-1.669 / norm), epsilon = 1e-12);
        assert_abs_diff_eq!(phi1, f64::atan2(2.119, -3.081), epsilon = 1e-12);
        // angle route reproduces the normalized dipole
        let e = polarization_vector(theta1, phi1);
        let mu_hat = m.dipole(1) / norm;
        assert!((e - mu_hat).norm() < 1e-12);
    }

    #[test]
    fn site1_angles_special_cases() {
        let mut m = FmoModel::new();
        m.dipoles[0] = Vector3::new(0.0, 0.0, 1.0);
        let (t, p) = site1_polar_angles(&m).unwrap();
        assert_abs_diff_eq!(t, 0.0);
        assert_abs_diff_eq!(p, 0.0);
        m.dipoles[0] = Vector3::new(1.0, 0.0, 0.0);
        let (t, p) = site1_polar_angles(&m).unwrap();
        assert_abs_diff_eq!(t, std::f64::consts::FRAC_PI_2);
        assert_abs_diff_eq!(p, 0.0);
        m.dipoles[0] = Vector3::zeros();
        assert!(site1_polar_angles(&m).is_err());
    }

    #[test]
    fn polarization_vector_unit_norm() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let m = FmoModel::new();
        for _ in 0..200 {
            let t: f64 = rng.random_range(-10.0..10.0);
            let p: f64 = rng.random_range(-10.0..10.0);
            let e = polarization_vector(t, p);
            assert_abs_diff_eq!(e.norm(), 1.0, epsilon = 1e-12);
            // Cauchy-Schwarz: projections never exceed the dipole norm
            for j in 1..=7 {
                assert!(m.dipole(j).dot(&e).abs() <= m.dipole(j).norm() + 1e-12);
            }
        }
        assert!((polarization_vector(0.0, 3.3) - Vector3::new(0.0, 0.0, 1.0)).norm() < 1e-12);
        let e = polarization_vector(std::f64::consts::FRAC_PI_2, 0.0);
        assert!((e - Vector3::new(1.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn density_matrix_constructors() {
        let b = DensityMatrix::plus();
        assert_abs_diff_eq!(b.trace(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b.population(1), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(b.coherence(1, 2).re, 0.5, epsilon = 1e-15);
        let m = DensityMatrix::minus();
        assert_abs_diff_eq!(m.coherence(1, 2).re, -0.5, epsilon = 1e-15);
        let d = DensityMatrix::dark_mixture();
        assert_abs_diff_eq!(d.trace(), 1.0, epsilon = 1e-15);
        assert_eq!(d.hermiticity_error(), 0.0);
        assert!(d.min_eigenvalue() >= 0.0);
        d.validate(1e-12).unwrap();
    }
}
