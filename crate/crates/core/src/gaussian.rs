//! Closed-form algebra of complex Gaussian wavepackets.
//!
//! Every meter state in the toolkit is a finite superposition of terms
//!
//! ```text
//! G(x) = (2πδ²)^(-1/4) · amp · exp[-(x - x0)² / (4δ²) + i (k0·x + phi0)]
//! ```
//!
//! which are closed under translation, momentum kicks, Fourier transformation
//! and inner products. Spreading is not modelled, so there is no chirp term.
//! The same type is used in both representations: in momentum space `x0` is a
//! momentum, `delta` a momentum width and `k0` has units of inverse momentum.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Distribution, Grid};
use crate::{Axis, Representation};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChirpedGaussian {
    pub amp: Complex64,
    pub x0: f64,
    pub delta: f64,
    pub k0: f64,
    pub phi0: f64,
}

impl ChirpedGaussian {
    pub fn new(amp: Complex64, x0: f64, delta: f64, k0: f64, phi0: f64) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidParameter(format!("width must be positive, got {delta}")));
        }
        Ok(Self { amp, x0, delta, k0, phi0 })
    }

    /// Unit-norm packet at rest at the origin: ψ0 of width `delta`.
    pub fn ground(delta: f64) -> Self {
        assert!(delta > 0.0, "width must be positive");
        Self { amp: Complex64::new(1.0, 0.0), x0: 0.0, delta, k0: 0.0, phi0: 0.0 }
    }

    fn prefactor(&self) -> f64 {
        (2.0 * PI * self.delta * self.delta).powf(-0.25)
    }

    pub fn evaluate(&self, x: f64) -> Complex64 {
        let u = x - self.x0;
        let re = -u * u / (4.0 * self.delta * self.delta);
        let im = self.k0 * x + self.phi0;
        self.amp * self.prefactor() * Complex64::new(re, im).exp()
    }

    /// |G(x)|², a normal density of standard deviation `delta` scaled by |amp|².
    pub fn modulus_sqr(&self, x: f64) -> f64 {
        let u = x - self.x0;
        self.amp.norm_sqr() * (-u * u / (2.0 * self.delta * self.delta)).exp()
            / ((2.0 * PI).sqrt() * self.delta)
    }

    pub fn scaled(mut self, factor: Complex64) -> Self {
        self.amp *= factor;
        self
    }

    /// Unitary transform to the conjugate representation,
    /// φ(p) = (2πħ)^(-1/2) ∫ ψ(x) e^(-ipx/ħ) dx.
    pub fn fourier(&self, hbar: f64) -> Self {
        Self {
            amp: self.amp,
            x0: hbar * self.k0,
            delta: hbar / (2.0 * self.delta),
            k0: -self.x0 / hbar,
            phi0: self.phi0 + self.k0 * self.x0,
        }
    }

    /// Inverse of [`ChirpedGaussian::fourier`].
    pub fn inverse_fourier(&self, hbar: f64) -> Self {
        Self {
            amp: self.amp,
            x0: -hbar * self.k0,
            delta: hbar / (2.0 * self.delta),
            k0: self.x0 / hbar,
            phi0: self.phi0 + self.k0 * self.x0,
        }
    }
}

/// ⟨g1|g2⟩ = ∫ conj(g1(x)) g2(x) dx in closed form.
pub fn inner_product(g1: &ChirpedGaussian, g2: &ChirpedGaussian) -> Complex64 {
    let a1 = 1.0 / (4.0 * g1.delta * g1.delta);
    let a2 = 1.0 / (4.0 * g2.delta * g2.delta);
    let a = a1 + a2;
    let s = a1 * g1.x0 + a2 * g2.x0;
    let kappa = g2.k0 - g1.k0;
    let dx = g1.x0 - g2.x0;
    // B²/4A - C rewritten so that no large terms cancel.
    let re = -a1 * a2 * dx * dx / a - kappa * kappa / (4.0 * a);
    let im = kappa * s / a + (g2.phi0 - g1.phi0);
    let norm = (2.0 * PI * g1.delta * g1.delta).powf(-0.25)
        * (2.0 * PI * g2.delta * g2.delta).powf(-0.25)
        * (PI / a).sqrt();
    g1.amp.conj() * g2.amp * norm * Complex64::new(re, im).exp()
}

/// An ordered superposition of Gaussian terms in one representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WavepacketSum {
    pub terms: Vec<ChirpedGaussian>,
    pub representation: Representation,
}

impl WavepacketSum {
    pub fn new(terms: Vec<ChirpedGaussian>, representation: Representation) -> Self {
        Self { terms, representation }
    }

    pub fn evaluate(&self, x: f64) -> Complex64 {
        self.terms.iter().map(|g| g.evaluate(x)).sum()
    }

    pub fn density(&self, x: f64) -> f64 {
        self.evaluate(x).norm_sqr()
    }

    /// ⟨self|other⟩ over all pairs of terms.
    pub fn inner(&self, other: &WavepacketSum) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for a in &self.terms {
            for b in &other.terms {
                acc += inner_product(a, b);
            }
        }
        acc
    }

    /// Analytic squared norm Σ_ij ⟨G_i|G_j⟩.
    pub fn norm_sqr(&self) -> f64 {
        self.inner(self).re.max(0.0)
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            terms: self.terms.iter().map(|g| g.scaled(factor)).collect(),
            representation: self.representation,
        }
    }

    /// Transforms every term to the other representation.
    pub fn fourier(&self, hbar: f64) -> Self {
        let (terms, representation) = match self.representation {
            Representation::Position => (
                self.terms.iter().map(|g| g.fourier(hbar)).collect(),
                Representation::Momentum,
            ),
            Representation::Momentum => (
                self.terms.iter().map(|g| g.inverse_fourier(hbar)).collect(),
                Representation::Position,
            ),
        };
        Self { terms, representation }
    }

    /// Returns the sum in the requested representation.
    pub fn to_representation(&self, rep: Representation, hbar: f64) -> Self {
        if rep == self.representation {
            self.clone()
        } else {
            self.fourier(hbar)
        }
    }

    /// Default sampling grid: `points` points over
    /// [min center − 10·max width, max center + 10·max width].
    pub fn default_grid(&self, points: usize) -> Result<Grid> {
        self.grid_with_margin(points, 10.0)
    }

    pub fn grid_with_margin(&self, points: usize, widths: f64) -> Result<Grid> {
        if self.terms.is_empty() {
            return Err(Error::EmptyState);
        }
        let lo = self.terms.iter().map(|g| g.x0).fold(f64::INFINITY, f64::min);
        let hi = self.terms.iter().map(|g| g.x0).fold(f64::NEG_INFINITY, f64::max);
        let w = self.terms.iter().map(|g| g.delta).fold(0.0, f64::max);
        Grid::linspace(lo - widths * w, hi + widths * w, points)
    }

    /// Pointwise |Σ G_i|² on `grid`.
    pub fn density_on_grid(&self, grid: &Grid, axis: Axis) -> Distribution {
        Distribution::from_fn(axis, self.representation, grid, |x| self.density(x))
    }
}
