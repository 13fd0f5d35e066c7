//! First-order (AAV) weak-measurement prediction.
//!
//! To first order in the coupling the post-selected pointer is the initial
//! packet scaled by `⟨χ_f|χ_in⟩` and multiplied by `exp(i p' w x / ħ)`, with `w`
//! the weak value. In momentum space that is a Gaussian of width `ħ/(2δ)`
//! centred at `p'·Re w`; a non-zero `Im w` moves the position-space centre to
//! `-2δ²p'·Im w/ħ`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::ChirpedGaussian;
use crate::grid::{Distribution, Grid};
use crate::spin::{bloch_state, weak_value, SpinOperator, Spinor, ORTHOGONALITY_THRESHOLD};
use crate::{Axis, Representation};

/// η below this counts as a valid first-order expansion.
pub const VALIDITY_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AavPrediction {
    pub weak_value: Complex64,
    /// `p'·Re w`, in momentum units.
    pub pointer_shift: f64,
    /// `-2δ²p'·Im w/ħ`, in length units.
    pub position_shift: f64,
    pub postselect_prob: f64,
    pub eta: f64,
    /// Momentum density with total weight `postselect_prob`.
    pub distribution: Distribution,
    /// Position-space pointer amplitude.
    pub pointer: ChirpedGaussian,
}

impl AavPrediction {
    pub fn is_valid(&self) -> bool {
        is_valid(self.eta)
    }

    /// Pointer density in either representation on `grid`, weight `postselect_prob`.
    pub fn density(&self, grid: &Grid, axis: Axis, rep: Representation, hbar: f64) -> Distribution {
        let g = match rep {
            Representation::Position => self.pointer,
            Representation::Momentum => self.pointer.fourier(hbar),
        };
        Distribution::from_fn(axis, rep, grid, |x| g.modulus_sqr(x))
    }
}

/// The AAV pointer amplitude in position space.
pub fn aav_pointer(
    overlap: Complex64,
    weak_value: Complex64,
    p_prime: f64,
    delta: f64,
    hbar: f64,
) -> Result<ChirpedGaussian> {
    ChirpedGaussian::new(
        overlap,
        -2.0 * delta * delta * p_prime * weak_value.im / hbar,
        delta,
        p_prime * weak_value.re / hbar,
        0.0,
    )
}

/// Prediction for arbitrary pre/post-selection and measured operator. The
/// momentum density is sampled on `grid`.
#[allow(clippy::too_many_arguments)]
pub fn aav_prediction(
    chi_in: &Spinor,
    chi_f: &Spinor,
    op: &SpinOperator,
    p_prime: f64,
    delta: f64,
    hbar: f64,
    grid: &Grid,
    axis: Axis,
) -> Result<AavPrediction> {
    let w = weak_value(chi_in, chi_f, op)?;
    let overlap = chi_f.inner(chi_in);
    let pointer = aav_pointer(overlap, w, p_prime, delta, hbar)?;
    let momentum = pointer.fourier(hbar);
    Ok(AavPrediction {
        weak_value: w,
        pointer_shift: p_prime * w.re,
        position_shift: pointer.x0,
        postselect_prob: overlap.norm_sqr(),
        eta: validity_parameter(p_prime, delta, w, hbar),
        distribution: Distribution::from_fn(axis, Representation::Momentum, grid, |p| {
            momentum.modulus_sqr(p)
        }),
        pointer,
    })
}

/// Closed-form case: `|↑θ⟩` in the x–z plane, σ_x measured, `|↑z⟩` post-selected.
/// The weak value is `tan(θ/2)` and the weight `cos²(θ/2)`.
pub fn aav_distribution(
    theta: f64,
    p_prime: f64,
    delta: f64,
    hbar: f64,
    grid: &Grid,
) -> Result<AavPrediction> {
    let c = (theta / 2.0).cos();
    if c.abs() <= ORTHOGONALITY_THRESHOLD {
        return Err(Error::OrthogonalSelection);
    }
    let w = Complex64::new((theta / 2.0).tan(), 0.0);
    let overlap = Complex64::new(c, 0.0);
    let pointer = aav_pointer(overlap, w, p_prime, delta, hbar)?;
    let momentum = pointer.fourier(hbar);
    Ok(AavPrediction {
        weak_value: w,
        pointer_shift: p_prime * w.re,
        position_shift: 0.0,
        postselect_prob: c * c,
        eta: validity_parameter(p_prime, delta, w, hbar),
        distribution: Distribution::from_fn(Axis::X, Representation::Momentum, grid, |p| {
            momentum.modulus_sqr(p)
        }),
        pointer,
    })
}

/// `η = δ·p'·|w|/ħ`.
pub fn validity_parameter(p_prime: f64, delta: f64, weak_value: Complex64, hbar: f64) -> f64 {
    (delta * p_prime * weak_value.norm() / hbar).abs()
}

pub fn is_valid(eta: f64) -> bool {
    eta < VALIDITY_THRESHOLD
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HigherOrderRatio {
    pub order: u32,
    /// `(p'δ/ħ)ⁿ |⟨χ_f|Aⁿ|χ_in⟩| / |⟨χ_f|χ_in⟩|`
    pub to_overlap: f64,
    /// `(p'δ/ħ)ⁿ |⟨χ_f|Aⁿ|χ_in⟩| / ((p'δ/ħ) |⟨χ_f|A|χ_in⟩|)`
    pub to_first_order: f64,
}

/// Size of the n-th expansion term relative to the zeroth and first, for
/// n = 2..=n_max, with the pointer coordinate replaced by δ.
///
/// A vanishing numerator gives 0; a vanishing denominator with non-zero
/// numerator gives +∞.
pub fn higher_order_terms(
    chi_in: &Spinor,
    chi_f: &Spinor,
    op: &SpinOperator,
    p_prime: f64,
    delta: f64,
    hbar: f64,
    n_max: u32,
) -> Result<Vec<HigherOrderRatio>> {
    if n_max < 2 {
        return Err(Error::InvalidParameter(format!("n_max must be at least 2, got {n_max}")));
    }
    let x = (p_prime * delta / hbar).abs();
    let zeroth = chi_f.inner(chi_in).norm();
    let first = x * op.matrix_element(chi_f, chi_in).norm();
    let ratio = |num: f64, den: f64| {
        if num == 0.0 {
            0.0
        } else if den <= ORTHOGONALITY_THRESHOLD * x.max(1.0) {
            f64::INFINITY
        } else {
            num / den
        }
    };
    Ok((2..=n_max)
        .map(|n| {
            let term = x.powi(n as i32) * op.pow(n).matrix_element(chi_f, chi_in).norm();
            HigherOrderRatio {
                order: n,
                to_overlap: ratio(term, zeroth),
                to_first_order: ratio(term, first),
            }
        })
        .collect())
}

/// [`higher_order_terms`] for `|↑θ⟩`, σ_x, `|↑z⟩`.
pub fn higher_order_terms_check(
    theta: f64,
    p_prime: f64,
    delta: f64,
    hbar: f64,
    n_max: u32,
) -> Result<Vec<HigherOrderRatio>> {
    higher_order_terms(
        &bloch_state(theta, 0.0),
        &Spinor::up_z(),
        &SpinOperator::sigma_x(),
        p_prime,
        delta,
        hbar,
        n_max,
    )
}
