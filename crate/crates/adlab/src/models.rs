//! Built-in time-dependent Hamiltonians with closed-form eigensystems and
//! exact propagators, plus the trait implemented by user-supplied models.
//!
//! Natural units, hbar = 1. All evaluations are pure functions of
//! `(parameters, t)`; nothing is cached.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};

/// A time-parameterized Hermitian matrix source.
///
/// `exact_eigensystem` and `exact_propagator` are closed-form hooks; built-in
/// models provide them, user-supplied models usually do not.
pub trait HamiltonianModel: Sync {
    fn dimension(&self) -> usize;

    /// The Hermitian matrix `H(t)`.
    fn hamiltonian(&self, t: f64) -> CMat;

    /// Closed-form instantaneous eigensystem `(energies, eigenvector columns)`,
    /// in the model's natural level order.
    fn exact_eigensystem(&self, _t: f64) -> Option<(DVector<f64>, CMat)> {
        None
    }

    /// Closed-form `U(t)` in the fixed `t = 0` basis, when available.
    fn exact_propagator(&self, _t: f64) -> Option<CMat> {
        None
    }
}

fn mat2(a: C64, b: C64, c: C64, d: C64) -> CMat {
    CMat::from_row_slice(2, 2, &[a, b, c, d])
}

fn phase(x: f64) -> C64 {
    C64::from_polar(1.0, x)
}

// ---------------------------------------------------------------------------
// Rotating-field spin-1/2 model (field strength omega0, rotation frequency
// Omega = 2 pi / tau), written directly in the instantaneous representation.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MsParams {
    /// Field strength (rad / time), must be positive.
    pub omega0: f64,
    /// Rotation frequency of the field in the x-y plane (rad / time).
    pub big_omega: f64,
}

impl MsParams {
    pub fn new(omega0: f64, big_omega: f64) -> Result<Self> {
        if !(omega0 > 0.0) || !omega0.is_finite() {
            return Err(Error::ConfigInvalid {
                field: "ms.omega0".into(),
                reason: format!("must be finite and positive, got {omega0}"),
            });
        }
        if !big_omega.is_finite() {
            return Err(Error::ConfigInvalid {
                field: "ms.big_omega".into(),
                reason: "must be finite".into(),
            });
        }
        Ok(MsParams { omega0, big_omega })
    }

    /// Drive period `2 pi / Omega`; infinite when the field is static.
    pub fn period(&self) -> f64 {
        if self.big_omega == 0.0 {
            f64::INFINITY
        } else {
            std::f64::consts::TAU / self.big_omega.abs()
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MsModel {
    pub params: MsParams,
}

impl MsModel {
    pub fn new(params: MsParams) -> Self {
        MsModel { params }
    }

    /// Upper energy branch `E_0(t) = sqrt(omega0^2 + Omega^2 sin^2 omega0 t)`.
    pub fn e0(&self, t: f64) -> f64 {
        let MsParams { omega0, big_omega } = self.params;
        let s = (omega0 * t).sin();
        (omega0 * omega0 + big_omega * big_omega * s * s).sqrt()
    }

    /// Mixing angle `theta(t) = atan[(Omega / 2 omega0) sin 2 omega0 t]`,
    /// principal branch.
    pub fn theta(&self, t: f64) -> f64 {
        let MsParams { omega0, big_omega } = self.params;
        ((big_omega / (2.0 * omega0)) * (2.0 * omega0 * t).sin()).atan()
    }

    /// Eigensystem in the model's level order `(+E_0, -E_0)`, built from the
    /// closed-form component amplitudes.
    pub fn eigensystem(&self, t: f64) -> (DVector<f64>, CMat) {
        let MsParams { omega0, big_omega } = self.params;
        let e0 = self.e0(t);
        let d = big_omega * (omega0 * t).sin().powi(2);
        let half = 0.5 * (big_omega * t + self.theta(t));
        let up = ((e0 + d) / (2.0 * e0)).sqrt();
        let dn = ((e0 - d) / (2.0 * e0)).sqrt();
        let a1 = phase(-half) * up;
        let b1 = phase(half) * dn;
        let a2 = phase(-half) * (-dn);
        let b2 = phase(half) * up;
        (
            DVector::from_column_slice(&[e0, -e0]),
            mat2(a1, a2, b1, b2),
        )
    }

    /// Exact `U(t)`: cosine on the diagonal, rotating-phase sines off it.
    pub fn propagator(&self, t: f64) -> CMat {
        let MsParams { omega0, big_omega } = self.params;
        let c = C64::new((omega0 * t).cos(), 0.0);
        let s = (omega0 * t).sin();
        let mi = C64::new(0.0, -1.0);
        mat2(
            c,
            mi * phase(-big_omega * t) * s,
            mi * phase(big_omega * t) * s,
            c,
        )
    }
}

impl HamiltonianModel for MsModel {
    fn dimension(&self) -> usize {
        2
    }

    fn hamiltonian(&self, t: f64) -> CMat {
        let MsParams { omega0, big_omega } = self.params;
        let diag = 0.5 * big_omega * (1.0 - (2.0 * omega0 * t).cos());
        let off = C64::new(omega0, -0.5 * big_omega * (2.0 * omega0 * t).sin());
        mat2(
            C64::new(diag, 0.0),
            phase(-big_omega * t) * off,
            phase(big_omega * t) * off.conj(),
            C64::new(-diag, 0.0),
        )
    }

    fn exact_eigensystem(&self, t: f64) -> Option<(DVector<f64>, CMat)> {
        Some(self.eigensystem(t))
    }

    fn exact_propagator(&self, t: f64) -> Option<CMat> {
        Some(self.propagator(t))
    }
}

// ---------------------------------------------------------------------------
// Schwinger NMR precession model: static field magnitude and polar angle,
// azimuth rotating at omega.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchwingerParams {
    /// Field energy `b = g mu_0 H`, must be positive.
    pub b: f64,
    /// Polar angle, strictly inside `(0, pi)`.
    pub theta: f64,
    /// Azimuthal rotation rate, `phi = omega t`.
    pub omega: f64,
}

impl SchwingerParams {
    pub fn new(b: f64, theta: f64, omega: f64) -> Result<Self> {
        if !(b > 0.0) || !b.is_finite() {
            return Err(Error::ConfigInvalid {
                field: "schwinger.b".into(),
                reason: format!("must be finite and positive, got {b}"),
            });
        }
        if !(theta > 0.0 && theta < std::f64::consts::PI) {
            return Err(Error::ConfigInvalid {
                field: "schwinger.theta".into(),
                reason: format!("must lie strictly inside (0, pi), got {theta}"),
            });
        }
        if !omega.is_finite() {
            return Err(Error::ConfigInvalid {
                field: "schwinger.omega".into(),
                reason: "must be finite".into(),
            });
        }
        Ok(SchwingerParams { b, theta, omega })
    }

    /// Effective precession frequency
    /// `E1-tilde = sqrt(b^2 + b omega cos theta + omega^2 / 4)`.
    pub fn e_tilde(&self) -> f64 {
        let SchwingerParams { b, theta, omega } = *self;
        (b * b + b * omega * theta.cos() + 0.25 * omega * omega).sqrt()
    }

    /// Adiabatic diagonal frequency `Omega-tilde = b + (omega / 2) cos theta`.
    pub fn omega_tilde(&self) -> f64 {
        self.b + 0.5 * self.omega * self.theta.cos()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SchwingerModel {
    pub params: SchwingerParams,
}

impl SchwingerModel {
    pub fn new(params: SchwingerParams) -> Self {
        SchwingerModel { params }
    }

    /// Eigensystem in the model's level order `(+b, -b)` with the closed-form
    /// spinor components.
    pub fn eigensystem(&self, t: f64) -> (DVector<f64>, CMat) {
        let SchwingerParams { b, theta, omega } = self.params;
        let half_phi = 0.5 * omega * t;
        let (sh, ch) = ((0.5 * theta).sin(), (0.5 * theta).cos());
        let n1a = phase(-half_phi) * sh;
        let n1b = phase(half_phi) * (-ch);
        let n2a = phase(-half_phi) * ch;
        let n2b = phase(half_phi) * sh;
        (
            DVector::from_column_slice(&[b, -b]),
            mat2(n1a, n2a, n1b, n2b),
        )
    }

    /// Exact propagator matrix elements `U_ij(t)` in the instantaneous basis:
    /// Laplace-transform solution of the coupled two-level equations.
    pub fn propagator_elements(&self, t: f64) -> Result<CMat> {
        let SchwingerParams { b, theta, omega } = self.params;
        let et = self.params.e_tilde();
        if et < 1e-12 {
            return Err(Error::DegenerateFrequency { e_tilde: et });
        }
        let (s, c) = ((et * t).sin(), (et * t).cos());
        let u11 = C64::new(c, -(b + 0.5 * omega * theta.cos()) * s / et);
        let u21 = C64::new(0.0, 0.5 * omega * theta.sin() * s / et);
        Ok(mat2(u11, u21, u21, u11.conj()))
    }

    /// Adiabatic approximation to the instantaneous-basis elements: pure
    /// phase on the diagonal, sinc-like off-diagonal remnant.
    pub fn adiabatic_propagator_elements(&self, t: f64) -> CMat {
        let SchwingerParams { theta, omega, .. } = self.params;
        let ot = self.params.omega_tilde();
        let u11 = phase(-ot * t);
        let sinc = if ot.abs() < 1e-300 { t } else { (ot * t).sin() / ot };
        let u21 = C64::new(0.0, 0.5 * omega * theta.sin() * sinc);
        mat2(u11, u21, u21, u11.conj())
    }

    /// Exact `U(t)` in the fixed basis, assembled from the instantaneous-basis
    /// elements and the closed-form eigenvectors.
    pub fn propagator(&self, t: f64) -> Result<CMat> {
        let (_, s_t) = self.eigensystem(t);
        let (_, s_0) = self.eigensystem(0.0);
        Ok(s_t * self.propagator_elements(t)? * s_0.adjoint())
    }
}

impl HamiltonianModel for SchwingerModel {
    fn dimension(&self) -> usize {
        2
    }

    fn hamiltonian(&self, t: f64) -> CMat {
        let SchwingerParams { b, theta, omega } = self.params;
        let phi = omega * t;
        let nb = C64::new(-b, 0.0);
        mat2(
            nb * theta.cos(),
            nb * theta.sin() * phase(-phi),
            nb * theta.sin() * phase(phi),
            -nb * theta.cos(),
        )
    }

    fn exact_eigensystem(&self, t: f64) -> Option<(DVector<f64>, CMat)> {
        Some(self.eigensystem(t))
    }

    fn exact_propagator(&self, t: f64) -> Option<CMat> {
        self.propagator(t).ok()
    }
}

// ---------------------------------------------------------------------------
// Constant Hamiltonian, mostly for tests and docs.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ConstantModel {
    matrix: CMat,
}

impl ConstantModel {
    pub fn new(matrix: CMat) -> Result<Self> {
        let r = crate::linalg::hermiticity_residual(&matrix);
        if r > 1e-12 {
            return Err(Error::NonHermitianInput { t: 0.0, residual: r });
        }
        Ok(ConstantModel { matrix })
    }
}

impl HamiltonianModel for ConstantModel {
    fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    fn hamiltonian(&self, _t: f64) -> CMat {
        self.matrix.clone()
    }

    fn exact_propagator(&self, t: f64) -> Option<CMat> {
        Some(crate::linalg::expi_hermitian(&(self.matrix.clone() * Complex64::new(t, 0.0))))
    }
}
