//! Config-driven runs: exact pointer, first-order prediction and their comparison.

use serde::{Deserialize, Serialize};

use crate::aav::{aav_pointer, aav_prediction, higher_order_terms, is_valid, HigherOrderRatio};
use crate::analysis::{compare, find_peaks, mean_momentum, PeakSet, DEFAULT_PROMINENCE};
use crate::config::{RunConfig, SweepVariable};
use crate::discriminate::{StrongConfig, WeakConfig, DEFAULT_MAX_PROPOSALS};
use crate::error::{Error, Result};
use crate::gaussian::WavepacketSum;
use crate::grid::{Distribution, Grid};
use crate::sgevolve::{
    derived_kick, evolve, overlap_i, post_select, BranchState, Kick, Particle, Regime, SGStage,
    METRE_PER_CM,
};
use crate::spin::{weak_value, SpinOperator, Spinor};
use crate::{Axis, Representation};

/// A config resolved to SI quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub particle: Particle,
    pub delta: f64,
    pub stages: Vec<SGStage>,
    pub chi_in: Spinor,
    pub chi_f: Spinor,
    /// Kick of the first (measuring) stage.
    pub kick: Kick,
    pub axis: Axis,
}

pub fn resolve(cfg: &RunConfig) -> Result<Resolved> {
    cfg.validate()?;
    let particle = cfg.particle()?;
    let stages = cfg.stages()?;
    let kick = derived_kick(&stages[0], &particle);
    Ok(Resolved {
        particle,
        delta: cfg.delta_m(),
        axis: stages[0].axis,
        stages,
        chi_in: cfg.chi_in()?,
        chi_f: cfg.chi_f()?,
        kick,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakOut {
    /// Momentum, kg·m/s.
    pub location: f64,
    /// Location in units of p′; absent when p′ = 0.
    pub location_p_prime: Option<f64>,
    pub height: f64,
    pub prominence: f64,
}

fn peaks_out(set: &PeakSet, p_prime: f64) -> Vec<PeakOut> {
    set.peaks
        .iter()
        .map(|p| PeakOut {
            location: p.location,
            location_p_prime: (p_prime != 0.0).then(|| p.location / p_prime),
            height: p.height,
            prominence: p.prominence,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    pub mass: f64,
    pub mu: f64,
    pub hbar: f64,
    pub delta_m: f64,
    pub stages: Vec<SGStage>,
    pub p_prime: f64,
    pub center_shift: f64,
    pub const_phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub label: Option<String>,
    pub derived: bool,
    #[serde(rename = "I")]
    pub overlap: f64,
    pub regime: Regime,
    pub postselect_prob: f64,
    pub weak_value_re: Option<f64>,
    pub weak_value_im: Option<f64>,
    pub eta: Option<f64>,
    pub valid: Option<bool>,
    pub peaks_exact: Vec<PeakOut>,
    pub peaks_aav: Vec<PeakOut>,
    pub l1: Option<f64>,
    pub linf: Option<f64>,
    pub ks: Option<f64>,
    pub mean_momentum: f64,
    pub higher_order: Vec<HigherOrderRatio>,
    pub params: RunConfig,
    pub derived_params: DerivedParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outputs {
    pub report: Report,
    pub exact_momentum: Distribution,
    pub exact_position: Distribution,
    pub aav_momentum: Option<Distribution>,
    pub aav_position: Option<Distribution>,
}

/// Exact post-selected pointer along the first stage's axis, in position space.
pub fn exact_pointer(r: &Resolved) -> Result<(WavepacketSum, f64)> {
    let mut state = BranchState::prepare(r.chi_in, r.delta)?;
    for s in &r.stages {
        state = evolve(&state, s, &r.particle);
    }
    post_select(&state, &r.chi_f, r.axis)
}

fn momentum_grid(cfg: &RunConfig, mom: &WavepacketSum, p_prime: f64) -> Result<Grid> {
    match cfg.grid.span_p_prime {
        Some([a, b]) => {
            if p_prime == 0.0 {
                return Err(Error::InvalidParameter(
                    "a span in units of p′ needs a non-zero kick".into(),
                ));
            }
            let (lo, hi) = (a * p_prime, b * p_prime);
            Grid::linspace(lo.min(hi), lo.max(hi), cfg.grid.points)
        }
        None => mom.default_grid(cfg.grid.points),
    }
}

pub fn distribution(cfg: &RunConfig) -> Result<Outputs> {
    let r = resolve(cfg)?;
    let hbar = r.particle.hbar;
    let p_prime = r.kick.momentum;
    let overlap = overlap_i(&r.stages[0], &r.particle, r.delta)?;

    let (ptr, prob) = exact_pointer(&r)?;
    if ptr.terms.is_empty() || !(prob > 0.0) {
        return Err(Error::EmptyDistribution);
    }
    let mom = ptr.fourier(hbar);
    let grid = momentum_grid(cfg, &mom, p_prime)?;
    let exact_momentum = mom.density_on_grid(&grid, r.axis);
    let exact_position = ptr.density_on_grid(&ptr.default_grid(cfg.grid.points)?, r.axis);
    let peaks_exact = find_peaks(&exact_momentum, DEFAULT_PROMINENCE)?;

    let op = SpinOperator::sigma(r.axis);
    let w = match weak_value(&r.chi_in, &r.chi_f, &op) {
        Ok(w) => Some(w),
        Err(Error::OrthogonalSelection) => None,
        Err(e) => return Err(e),
    };

    let mut aav_momentum = None;
    let mut aav_position = None;
    let mut peaks_aav = PeakSet::default();
    let (mut l1, mut linf, mut ks) = (None, None, None);
    let mut eta = None;
    if let Some(w) = w {
        let overlap_spin = r.chi_f.inner(&r.chi_in);
        let pointer = aav_pointer(overlap_spin, w, p_prime, r.delta, hbar)?;
        let pointer_sum = WavepacketSum::new(vec![pointer], Representation::Position);
        let aav_grid = pointer_sum.fourier(hbar).default_grid(cfg.grid.points)?;
        let pred = aav_prediction(&r.chi_in, &r.chi_f, &op, p_prime, r.delta, hbar, &aav_grid, r.axis)?;
        peaks_aav = find_peaks(&pred.distribution, DEFAULT_PROMINENCE)?;
        eta = Some(pred.eta);

        let common = if cfg.grid.span_p_prime.is_some() {
            grid
        } else {
            Grid::linspace(
                grid.start().min(aav_grid.start()),
                grid.end().max(aav_grid.end()),
                cfg.grid.points,
            )?
        };
        let e = mom.density_on_grid(&common, r.axis);
        let a = pred.density(&common, r.axis, Representation::Momentum, hbar);
        match compare(&e, &a) {
            Ok(c) => {
                l1 = Some(c.l1);
                linf = Some(c.linf);
                ks = Some(c.ks);
            }
            Err(Error::EmptyDistribution) => {}
            Err(err) => return Err(err),
        }
        let pos_grid = pointer_sum.default_grid(cfg.grid.points)?;
        aav_position = Some(pred.density(&pos_grid, r.axis, Representation::Position, hbar));
        aav_momentum = Some(pred.distribution);
    }

    let higher_order =
        higher_order_terms(&r.chi_in, &r.chi_f, &op, p_prime, r.delta, hbar, 3)?;
    let report = Report {
        label: cfg.label.clone(),
        derived: cfg.derived,
        overlap,
        regime: Regime::classify(overlap),
        postselect_prob: prob,
        weak_value_re: w.map(|w| w.re),
        weak_value_im: w.map(|w| w.im),
        eta,
        valid: eta.map(is_valid),
        peaks_exact: peaks_out(&peaks_exact, p_prime),
        peaks_aav: peaks_out(&peaks_aav, p_prime),
        l1,
        linf,
        ks,
        mean_momentum: mean_momentum(&exact_momentum)?,
        higher_order,
        params: cfg.clone(),
        derived_params: DerivedParams {
            mass: r.particle.mass,
            mu: r.particle.mu,
            hbar,
            delta_m: r.delta,
            stages: r.stages.clone(),
            p_prime,
            center_shift: r.kick.shift,
            const_phase: r.kick.phase,
        },
    };
    Ok(Outputs { report, exact_momentum, exact_position, aav_momentum, aav_position })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    #[serde(rename = "I")]
    pub overlap: f64,
    pub regime: Regime,
    pub p_prime: f64,
    pub center_shift: f64,
    pub const_phase: f64,
    /// `p′δ/ħ`
    pub momentum_ratio: f64,
    /// `shift/δ`
    pub position_ratio: f64,
}

pub fn overlap_report(cfg: &RunConfig) -> Result<OverlapReport> {
    let r = resolve(cfg)?;
    let overlap = overlap_i(&r.stages[0], &r.particle, r.delta)?;
    Ok(OverlapReport {
        overlap,
        regime: Regime::classify(overlap),
        p_prime: r.kick.momentum,
        center_shift: r.kick.shift,
        const_phase: r.kick.phase,
        momentum_ratio: r.kick.momentum * r.delta / r.particle.hbar,
        position_ratio: r.kick.shift / r.delta,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AavReport {
    pub weak_value_re: f64,
    pub weak_value_im: f64,
    pub eta: f64,
    pub valid: bool,
    pub prob: f64,
    pub pointer_shift: f64,
    pub position_shift: f64,
    pub distribution: Distribution,
}

pub fn aav_report(cfg: &RunConfig) -> Result<AavReport> {
    let r = resolve(cfg)?;
    let hbar = r.particle.hbar;
    let op = SpinOperator::sigma(r.axis);
    let w = weak_value(&r.chi_in, &r.chi_f, &op)?;
    let pointer = aav_pointer(r.chi_f.inner(&r.chi_in), w, r.kick.momentum, r.delta, hbar)?;
    let mom = WavepacketSum::new(vec![pointer.fourier(hbar)], Representation::Momentum);
    let grid = momentum_grid(cfg, &mom, r.kick.momentum)?;
    let pred =
        aav_prediction(&r.chi_in, &r.chi_f, &op, r.kick.momentum, r.delta, hbar, &grid, r.axis)?;
    Ok(AavReport {
        weak_value_re: w.re,
        weak_value_im: w.im,
        eta: pred.eta,
        valid: pred.is_valid(),
        prob: pred.postselect_prob,
        pointer_shift: pred.pointer_shift,
        position_shift: pred.position_shift,
        distribution: pred.distribution,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub variable: SweepVariable,
    pub value: f64,
    #[serde(rename = "I")]
    pub overlap: f64,
    pub regime: Regime,
    pub weak_value_re: Option<f64>,
    pub weak_value_im: Option<f64>,
    pub eta: Option<f64>,
    pub postselect_prob: f64,
    pub n_peaks: usize,
    pub peaks_p_prime: Vec<f64>,
    pub l1: Option<f64>,
    pub linf: Option<f64>,
    pub ks: Option<f64>,
}

pub fn sweep_row(cfg: &RunConfig, variable: SweepVariable, value: f64) -> Result<SweepRow> {
    let out = distribution(cfg)?;
    let r = out.report;
    Ok(SweepRow {
        variable,
        value,
        overlap: r.overlap,
        regime: r.regime,
        weak_value_re: r.weak_value_re,
        weak_value_im: r.weak_value_im,
        eta: r.eta,
        postselect_prob: r.postselect_prob,
        n_peaks: r.peaks_exact.len(),
        peaks_p_prime: r
            .peaks_exact
            .iter()
            .map(|p| p.location_p_prime.unwrap_or(p.location))
            .collect(),
        l1: r.l1,
        linf: r.linf,
        ks: r.ks,
    })
}

/// Weak-measurement discrimination settings from a config's first stage,
/// width and post-selection.
pub fn weak_config(cfg: &RunConfig) -> Result<WeakConfig> {
    let r = resolve(cfg)?;
    let d = cfg.discrimination.clone().unwrap_or_default();
    Ok(WeakConfig {
        particle: r.particle,
        stage: r.stages[0],
        delta: r.delta,
        chi_f: r.chi_f,
        representation: d.representation,
        grid_points: cfg.grid.points,
        batch_size: d.batch_size,
        keep_both: d.keep_both,
        max_proposals: DEFAULT_MAX_PROPOSALS,
    })
}

/// Strong σ measurement with the same stage and the strong meter width.
pub fn strong_config(cfg: &RunConfig) -> Result<StrongConfig> {
    let r = resolve(cfg)?;
    let d = cfg.discrimination.clone().unwrap_or_default();
    Ok(StrongConfig {
        particle: r.particle,
        stage: r.stages[0],
        delta: d.strong_delta_cm * METRE_PER_CM,
        representation: Representation::Momentum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::preset;

    #[test]
    fn fig2a_report_shape() {
        let out = distribution(&preset("fig2a").unwrap()).unwrap();
        let r = &out.report;
        assert_eq!(r.peaks_exact.len(), 2);
        assert!(r.weak_value_re.unwrap() > 17.0);
        assert!(r.overlap < 0.05);
        assert_eq!(out.exact_momentum.values.len(), 4096);
        assert_eq!(r.derived_params.stages[0].gradient, 1.0);
        let json = serde_json::to_value(r).unwrap();
        assert!(json.get("I").is_some());
    }

    #[test]
    fn orthogonal_has_no_aav() {
        let out = distribution(&preset("fig4").unwrap()).unwrap();
        assert!(out.aav_momentum.is_none());
        assert!(out.report.weak_value_re.is_none() && out.report.l1.is_none());
        assert_eq!(out.report.regime, Regime::Weak);
        assert!(aav_report(&preset("fig4").unwrap()).is_err());
    }

    #[test]
    fn eigenstate_postselection_with_zero_probability() {
        let mut cfg = preset("fig2a").unwrap();
        cfg.preselect = crate::config::SpinorSpec::bloch(90.0);
        cfg.postselect = crate::config::SpinorSpec::bloch(270.0);
        assert!(matches!(distribution(&cfg), Err(Error::EmptyDistribution)));
    }

    #[test]
    fn overlap_report_ratios() {
        let o = overlap_report(&preset("fig7").unwrap()).unwrap();
        assert!((o.position_ratio - 2.83).abs() < 0.01);
        assert_eq!(o.regime, Regime::Semiweak);
    }

    #[test]
    fn span_is_respected() {
        let mut cfg = preset("fig2b").unwrap();
        cfg.grid.span_p_prime = Some([-30.0, 30.0]);
        let out = distribution(&cfg).unwrap();
        let p = out.report.derived_params.p_prime;
        assert!((out.exact_momentum.grid_start / p + 30.0).abs() < 1e-12);
    }
}
