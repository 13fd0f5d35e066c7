//! Spin-1/2 states and operators.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Axis;

/// |⟨χ_f|χ_in⟩| at or below this is treated as orthogonal.
pub const ORTHOGONALITY_THRESHOLD: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Normalized spin state in the σ_z basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spinor {
    pub up: Complex64,
    pub down: Complex64,
}

impl Spinor {
    /// Normalizes `(up, down)`; fails on the zero vector.
    pub fn new(up: Complex64, down: Complex64) -> Result<Self> {
        let n = (up.norm_sqr() + down.norm_sqr()).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidParameter("spinor has zero norm".into()));
        }
        Ok(Self { up: up / n, down: down / n })
    }

    pub fn up_z() -> Self {
        Self { up: ONE, down: ZERO }
    }

    pub fn down_z() -> Self {
        Self { up: ZERO, down: ONE }
    }

    pub fn up_x() -> Self {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        Self { up: h, down: h }
    }

    pub fn down_x() -> Self {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        Self { up: h, down: -h }
    }

    /// Eigenstate of σ along `axis` with eigenvalue `sign`.
    pub fn eigenstate(axis: Axis, sign: Sign) -> Self {
        match (axis, sign) {
            (Axis::X, Sign::Up) => Self::up_x(),
            (Axis::X, Sign::Down) => Self::down_x(),
            (Axis::Z, Sign::Up) => Self::up_z(),
            (Axis::Z, Sign::Down) => Self::down_z(),
        }
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &Spinor) -> Complex64 {
        self.up.conj() * other.up + self.down.conj() * other.down
    }

    pub fn norm_sqr(&self) -> f64 {
        self.up.norm_sqr() + self.down.norm_sqr()
    }

    /// The state orthogonal to `self`, with a fixed phase convention.
    pub fn orthogonal(&self) -> Self {
        Self { up: -self.down.conj(), down: self.up.conj() }
    }

    pub fn with_phase(&self, phase: f64) -> Self {
        let f = Complex64::from_polar(1.0, phase);
        Self { up: self.up * f, down: self.down * f }
    }
}

/// (cos θ/2, e^{iφ} sin θ/2)
pub fn bloch_state(theta: f64, phi: f64) -> Spinor {
    Spinor {
        up: Complex64::new((theta / 2.0).cos(), 0.0),
        down: Complex64::from_polar((theta / 2.0).sin(), phi),
    }
}

/// Coefficients of |↑θ⟩ in the σ_x eigenbasis, (⟨↑x|↑θ⟩, ⟨↓x|↑θ⟩).
pub fn alpha_beta(theta: f64) -> (Complex64, Complex64) {
    let s = bloch_state(theta, 0.0);
    (Spinor::up_x().inner(&s), Spinor::down_x().inner(&s))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Up,
    Down,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Up => 1.0,
            Sign::Down => -1.0,
        }
    }

    pub const BOTH: [Sign; 2] = [Sign::Up, Sign::Down];
}

/// A 2×2 complex matrix acting on spinors; observables are Hermitian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinOperator {
    pub m: [[Complex64; 2]; 2],
}

impl SpinOperator {
    pub fn new(m: [[Complex64; 2]; 2]) -> Self {
        Self { m }
    }

    pub fn identity() -> Self {
        Self::new([[ONE, ZERO], [ZERO, ONE]])
    }

    pub fn sigma_x() -> Self {
        Self::new([[ZERO, ONE], [ONE, ZERO]])
    }

    pub fn sigma_y() -> Self {
        Self::new([[ZERO, -I], [I, ZERO]])
    }

    pub fn sigma_z() -> Self {
        Self::new([[ONE, ZERO], [ZERO, -ONE]])
    }

    pub fn sigma(axis: Axis) -> Self {
        match axis {
            Axis::X => Self::sigma_x(),
            Axis::Z => Self::sigma_z(),
        }
    }

    /// σ·n for the Bloch direction (θ, φ).
    pub fn sigma_n(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self::sigma_x()
            .scale(Complex64::new(st * cp, 0.0))
            .add(&Self::sigma_y().scale(Complex64::new(st * sp, 0.0)))
            .add(&Self::sigma_z().scale(Complex64::new(ct, 0.0)))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut m = self.m;
        m.iter_mut().flatten().for_each(|v| *v *= s);
        Self { m }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut m = self.m;
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v += other.m[i][j];
            }
        }
        Self { m }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut m = [[ZERO; 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.m[i][0] * other.m[0][j] + self.m[i][1] * other.m[1][j];
            }
        }
        Self { m }
    }

    pub fn pow(&self, n: u32) -> Self {
        (0..n).fold(Self::identity(), |acc, _| acc.mul(self))
    }

    pub fn apply(&self, s: &Spinor) -> Spinor {
        Spinor {
            up: self.m[0][0] * s.up + self.m[0][1] * s.down,
            down: self.m[1][0] * s.up + self.m[1][1] * s.down,
        }
    }

    /// ⟨bra|A|ket⟩ without renormalizing the result of A|ket⟩.
    pub fn matrix_element(&self, bra: &Spinor, ket: &Spinor) -> Complex64 {
        bra.inner(&self.apply(ket))
    }

    pub fn adjoint(&self) -> Self {
        let m = self.m;
        Self::new([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let a = self.adjoint();
        self.m.iter().flatten().zip(a.m.iter().flatten()).all(|(x, y)| (x - y).norm() <= tol)
    }

    pub fn trace(&self) -> Complex64 {
        self.m[0][0] + self.m[1][1]
    }

    /// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
    pub fn eigen(&self) -> [(f64, Spinor); 2] {
        let a = self.m[0][0].re;
        let d = self.m[1][1].re;
        let b = self.m[0][1];
        let mean = 0.5 * (a + d);
        let half = 0.5 * (a - d);
        let r = (half * half + b.norm_sqr()).sqrt();
        let (lo, hi) = (mean - r, mean + r);
        if b.norm() <= 1e-300 {
            let (e_up, e_down) = (Spinor::up_z(), Spinor::down_z());
            return if a <= d { [(a, e_up), (d, e_down)] } else { [(d, e_down), (a, e_up)] };
        }
        // (A - λ)v = 0 with v = (b, λ - a) from the first row, or the second row when
        // that vector is too short to be reliable.
        let vec_for = |lam: f64| -> Spinor {
            let v1 = (b, Complex64::new(lam - a, 0.0));
            let v2 = (Complex64::new(lam - d, 0.0), b.conj());
            let n1 = v1.0.norm_sqr() + v1.1.norm_sqr();
            let n2 = v2.0.norm_sqr() + v2.1.norm_sqr();
            let (u, w) = if n1 >= n2 { v1 } else { v2 };
            Spinor::new(u, w).expect("nonzero eigenvector")
        };
        [(lo, vec_for(lo)), (hi, vec_for(hi))]
    }

    pub fn eigenvalues(&self) -> [f64; 2] {
        let e = self.eigen();
        [e[0].0, e[1].0]
    }
}

/// ⟨χ_f|A|χ_in⟩ / ⟨χ_f|χ_in⟩
pub fn weak_value(chi_in: &Spinor, chi_f: &Spinor, op: &SpinOperator) -> Result<Complex64> {
    let overlap = chi_f.inner(chi_in);
    if overlap.norm() <= ORTHOGONALITY_THRESHOLD {
        return Err(Error::OrthogonalSelection);
    }
    Ok(op.matrix_element(chi_f, chi_in) / overlap)
}

/// |⟨χ_f|χ_in⟩|²
pub fn postselect_prob(chi_in: &Spinor, chi_f: &Spinor) -> f64 {
    chi_f.inner(chi_in).norm_sqr().clamp(0.0, 1.0)
}
