//! Telling two realizations of the maximally mixed spin ensemble apart.
//!
//! Alice emits either ξ (|↑x⟩, |↓x⟩, |↑x⟩, …) or ζ (|↑z⟩, |↓z⟩, …). Bob either
//! measures σ_x strongly on each particle, or runs a weak stage followed by a
//! strong post-selection and reads the pointer, keeping even- and odd-indexed
//! particles apart. Both ensembles have density matrix 1/2; only the sequence
//! structure differs.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::aav::aav_pointer;
use crate::error::{Error, Result};
use crate::gaussian::WavepacketSum;
use crate::rng::particle_stream;
use crate::sgevolve::{derived_kick, evolve, post_select, BranchState, Particle, SGStage};
use crate::spin::{weak_value, Sign, SpinOperator, Spinor, ORTHOGONALITY_THRESHOLD};
use crate::stats::{binomial_test, ks_test, TabulatedCdf};
use crate::Representation;

pub const DEFAULT_ALPHA: f64 = 0.01;
pub const DEFAULT_BATCH: usize = 50;
pub const DEFAULT_MAX_PROPOSALS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Xi,
    Zeta,
}

impl Source {
    pub const BOTH: [Source; 2] = [Source::Xi, Source::Zeta];

    /// State emitted at position `index` of the sequence.
    pub fn state(self, index: u64) -> Spinor {
        let axis = match self {
            Source::Xi => crate::Axis::X,
            Source::Zeta => crate::Axis::Z,
        };
        Spinor::eigenstate(axis, Parity::of(index).sign())
    }

    fn slot(self) -> usize {
        match self {
            Source::Xi => 0,
            Source::Zeta => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(index: u64) -> Self {
        if index.is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    fn sign(self) -> Sign {
        match self {
            Parity::Even => Sign::Up,
            Parity::Odd => Sign::Down,
        }
    }

    fn slot(self) -> usize {
        match self {
            Parity::Even => 0,
            Parity::Odd => 1,
        }
    }
}

/// Outcome label of the final strong measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    /// Post-selected onto χ_f.
    ChiF,
    /// Post-selected onto the state orthogonal to χ_f.
    ChiFPerp,
    /// Strong σ outcome +1.
    Up,
    /// Strong σ outcome −1.
    Down,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::ChiF => "chi_f",
            Label::ChiFPerp => "chi_f_perp",
            Label::Up => "up",
            Label::Down => "down",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: u64,
    pub parity: Parity,
    pub postselected: bool,
    pub label: Option<Label>,
    pub sample: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Xi,
    Zeta,
    Undecided,
}

impl From<Source> for Verdict {
    fn from(s: Source) -> Self {
        match s {
            Source::Xi => Verdict::Xi,
            Source::Zeta => Verdict::Zeta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub verdict: Verdict,
    pub particles_used: u64,
    /// Strong strategy: `2^{-k}` for the final match count `k`. Weak strategies:
    /// Bonferroni-combined p-value of the rejected hypothesis, or the smaller of
    /// the two when undecided.
    pub statistic: f64,
    pub alpha: f64,
    /// Set when α ≥ 1 forced a decision that carries no evidence.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Run {
    pub decision: Decision,
    pub trials: Vec<TrialRecord>,
}

/// Root seed and run number addressing a family of per-particle streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Streams {
    pub root_seed: u64,
    pub run: u64,
}

impl Streams {
    pub fn new(root_seed: u64, run: u64) -> Self {
        Self { root_seed, run }
    }

    pub fn particle(&self, index: u64) -> ChaCha8Rng {
        particle_stream(self.root_seed, self.run, index)
    }
}

/// Strong σ measurement read from the meter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrongConfig {
    pub particle: Particle,
    pub stage: SGStage,
    pub delta: f64,
    pub representation: Representation,
}

/// Weak stage, post-selection and sequential-test settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakConfig {
    pub particle: Particle,
    pub stage: SGStage,
    pub delta: f64,
    pub chi_f: Spinor,
    pub representation: Representation,
    pub grid_points: usize,
    pub batch_size: usize,
    /// Keep the χ_f⊥ channel as data instead of discarding it.
    pub keep_both: bool,
    pub max_proposals: usize,
}

/// Normalized-or-not pointer for one post-selection outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct PointerModel {
    pub prob: f64,
    pub pointer: WavepacketSum,
}

impl PointerModel {
    /// One draw from `|pointer|² / prob` by rejection from the Gaussian mixture
    /// `Σ |a_i| N(x0_i, δ_i)`, which bounds the density by Cauchy–Schwarz.
    pub fn sample<R: Rng>(&self, rng: &mut R, max_proposals: usize) -> Result<f64> {
        let terms = &self.pointer.terms;
        let weights: Vec<f64> = terms.iter().map(|g| g.amp.norm()).collect();
        let total: f64 = weights.iter().sum();
        let pick = WeightedIndex::new(&weights).map_err(|_| Error::EmptyState)?;
        let envelope = |x: f64| {
            total
                * terms
                    .iter()
                    .zip(&weights)
                    .map(|(g, w)| {
                        let z = (x - g.x0) / g.delta;
                        w * (-0.5 * z * z).exp()
                            / (g.delta * (2.0 * std::f64::consts::PI).sqrt())
                    })
                    .sum::<f64>()
        };
        for _ in 0..max_proposals {
            let g = &terms[pick.sample(rng)];
            let z: f64 = rng.sample(StandardNormal);
            let x = g.x0 + g.delta * z;
            let env = envelope(x);
            let f = self.pointer.density(x);
            if !(env > 0.0) {
                continue;
            }
            if f > env * (1.0 + 1e-12) {
                return Err(Error::EnvelopeViolation { at: x, ratio: f / env });
            }
            if rng.random::<f64>() * env < f {
                return Ok(x);
            }
        }
        Err(Error::SamplerExhausted(max_proposals))
    }

    fn cdf(&self, grid_points: usize) -> Result<Option<TabulatedCdf>> {
        if self.prob <= ORTHOGONALITY_THRESHOLD {
            return Ok(None);
        }
        let grid = self.pointer.default_grid(grid_points)?;
        let d = self.pointer.density_on_grid(&grid, crate::Axis::X);
        Ok(Some(TabulatedCdf::from_distribution(&d)?))
    }
}

/// Exact pointers for the two post-selection outcomes `[χ_f, χ_f⊥]`.
pub fn input_model(chi_in: &Spinor, cfg: &WeakConfig) -> Result<[PointerModel; 2]> {
    let s = evolve(&BranchState::prepare(*chi_in, cfg.delta)?, &cfg.stage, &cfg.particle);
    let channel = |chi: &Spinor| -> Result<PointerModel> {
        let (ptr, prob) = post_select(&s, chi, cfg.stage.axis)?;
        Ok(PointerModel {
            prob,
            pointer: ptr.to_representation(cfg.representation, cfg.particle.hbar),
        })
    };
    Ok([channel(&cfg.chi_f)?, channel(&cfg.chi_f.orthogonal())?])
}

/// First-order pointers for the same two outcomes. An outcome orthogonal to
/// `chi_in` gets an empty pointer and probability 0.
pub fn aav_model(chi_in: &Spinor, cfg: &WeakConfig) -> Result<[PointerModel; 2]> {
    let kick = derived_kick(&cfg.stage, &cfg.particle);
    let op = SpinOperator::sigma(cfg.stage.axis);
    let channel = |chi: &Spinor| -> Result<PointerModel> {
        let overlap = chi.inner(chi_in);
        let terms = match weak_value(chi_in, chi, &op) {
            Ok(w) => vec![aav_pointer(overlap, w, kick.momentum, cfg.delta, cfg.particle.hbar)?],
            Err(Error::OrthogonalSelection) => Vec::new(),
            Err(e) => return Err(e),
        };
        let pointer = WavepacketSum::new(terms, Representation::Position)
            .to_representation(cfg.representation, cfg.particle.hbar);
        Ok(PointerModel { prob: overlap.norm_sqr(), pointer })
    };
    Ok([channel(&cfg.chi_f)?, channel(&cfg.chi_f.orthogonal())?])
}

/// One particle through the weak stage and the final strong measurement.
pub fn sample_pointer<R: Rng>(
    chi_in: &Spinor,
    cfg: &WeakConfig,
    index: u64,
    rng: &mut R,
) -> Result<TrialRecord> {
    sample_from(&input_model(chi_in, cfg)?, cfg, index, rng)
}

fn sample_from<R: Rng>(
    model: &[PointerModel; 2],
    cfg: &WeakConfig,
    index: u64,
    rng: &mut R,
) -> Result<TrialRecord> {
    let u: f64 = rng.random();
    let (label, m) = if u < model[0].prob {
        (Label::ChiF, &model[0])
    } else {
        (Label::ChiFPerp, &model[1])
    };
    let parity = Parity::of(index);
    if label == Label::ChiFPerp && !cfg.keep_both {
        return Ok(TrialRecord { index, parity, postselected: false, label: None, sample: None });
    }
    let x = m.sample(rng, cfg.max_proposals)?;
    Ok(TrialRecord { index, parity, postselected: true, label: Some(label), sample: Some(x) })
}

/// Meter reading of a strong σ measurement without post-selection. The spin
/// branches are orthogonal, so the meter density is the incoherent mixture.
pub fn sample_meter<R: Rng>(chi_in: &Spinor, cfg: &StrongConfig, rng: &mut R) -> Result<f64> {
    let s = evolve(&BranchState::prepare(*chi_in, cfg.delta)?, &cfg.stage, &cfg.particle);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let last = s.branches.len().checked_sub(1).ok_or(Error::EmptyState)?;
    for (i, b) in s.branches.iter().enumerate() {
        acc += b.weight.norm_sqr();
        if u < acc || i == last {
            let g = *b.packet(cfg.stage.axis);
            let g = match cfg.representation {
                Representation::Position => g,
                Representation::Momentum => g.fourier(cfg.particle.hbar),
            };
            let z: f64 = rng.sample(StandardNormal);
            return Ok(g.x0 + g.delta * z);
        }
    }
    unreachable!("branch loop always returns on the last branch")
}

/// Smallest k with 2^{-k} < α.
pub fn strong_matches_needed(alpha: f64) -> u64 {
    let mut k = 0;
    while 0.5f64.powi(k as i32) >= alpha {
        k += 1;
    }
    k
}

/// Bob compares each strong σ outcome with the ξ pattern (+1 on even index,
/// −1 on odd). He declares Xi once `2^{-k} < α` for `k` consecutive matches and
/// Zeta at the first mismatch.
pub fn strong_strategy(
    source: Source,
    cfg: &StrongConfig,
    max_particles: u64,
    alpha: f64,
    streams: Streams,
) -> Result<Run> {
    let needed = strong_matches_needed(alpha);
    let mut trials = Vec::new();
    let mut k = 0u64;
    for index in 0..max_particles {
        let mut rng = streams.particle(index);
        let x = sample_meter(&source.state(index), cfg, &mut rng)?;
        let label = if x >= 0.0 { Label::Up } else { Label::Down };
        let parity = Parity::of(index);
        trials.push(TrialRecord { index, parity, postselected: true, label: Some(label), sample: Some(x) });
        let expected = match parity {
            Parity::Even => Label::Up,
            Parity::Odd => Label::Down,
        };
        if label != expected {
            let decision = Decision {
                verdict: Verdict::Zeta,
                particles_used: index + 1,
                statistic: 0.5f64.powi(k as i32),
                alpha,
                degenerate: false,
            };
            return Ok(Run { decision, trials });
        }
        k += 1;
        if k >= needed {
            let decision = Decision {
                verdict: Verdict::Xi,
                particles_used: index + 1,
                statistic: 0.5f64.powi(k as i32),
                alpha,
                degenerate: false,
            };
            return Ok(Run { decision, trials });
        }
    }
    let decision = Decision {
        verdict: Verdict::Undecided,
        particles_used: max_particles,
        statistic: 0.5f64.powi(k as i32),
        alpha,
        degenerate: false,
    };
    Ok(Run { decision, trials })
}

/// Predicted label probability and pointer CDF for one (parity, label) channel.
#[derive(Debug, Clone)]
struct Prediction {
    prob: f64,
    cdf: Option<TabulatedCdf>,
}

/// Predictions of one hypothesis, indexed `[parity][label]`.
#[derive(Debug, Clone)]
struct Hypothesis([[Prediction; 2]; 2]);

impl Hypothesis {
    fn build(models: [[PointerModel; 2]; 2], grid_points: usize) -> Result<Self> {
        let [even, odd] = models;
        let conv = |ms: [PointerModel; 2]| -> Result<[Prediction; 2]> {
            let [a, b] = ms;
            Ok([
                Prediction { prob: a.prob, cdf: a.cdf(grid_points)? },
                Prediction { prob: b.prob, cdf: b.cdf(grid_points)? },
            ])
        };
        Ok(Hypothesis([conv(even)?, conv(odd)?]))
    }

    /// Bonferroni-combined p-value over one binomial test per parity and one
    /// KS test per non-empty channel.
    fn p_value(&self, data: &Accumulator, keep_both: bool) -> Result<f64> {
        let mut ps = Vec::with_capacity(6);
        for parity in 0..2 {
            let n = data.count[parity];
            if n == 0 {
                continue;
            }
            let k = data.samples[parity][0].len() as u64;
            ps.push(binomial_test(k, n, self.0[parity][0].prob.clamp(0.0, 1.0))?);
            let labels = if keep_both { 2 } else { 1 };
            for label in 0..labels {
                let xs = &data.samples[parity][label];
                if xs.is_empty() {
                    continue;
                }
                ps.push(match &self.0[parity][label].cdf {
                    Some(cdf) => ks_test(xs, |x| cdf.eval(x)).p_value,
                    None => 0.0,
                });
            }
        }
        let min = ps.iter().copied().fold(1.0, f64::min);
        Ok((min * ps.len() as f64).min(1.0))
    }
}

#[derive(Debug, Default)]
struct Accumulator {
    count: [u64; 2],
    samples: [[Vec<f64>; 2]; 2],
}

impl Accumulator {
    fn push(&mut self, t: &TrialRecord) {
        let p = t.parity.slot();
        self.count[p] += 1;
        if let (Some(label), Some(x)) = (t.label, t.sample) {
            let l = match label {
                Label::ChiF | Label::Up => 0,
                Label::ChiFPerp | Label::Down => 1,
            };
            self.samples[p][l].push(x);
        }
    }
}

/// Weak-measurement discrimination with both hypotheses' predictions
/// precomputed. Build once per configuration and reuse across runs.
#[derive(Debug, Clone)]
pub struct WeakSetup {
    pub config: WeakConfig,
    /// Exact pointers, indexed `[source][parity]`.
    models: [[[PointerModel; 2]; 2]; 2],
    exact: [Hypothesis; 2],
    aav: [Hypothesis; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Predictions {
    Exact,
    Aav,
}

impl WeakSetup {
    pub fn new(config: WeakConfig) -> Result<Self> {
        if config.batch_size == 0 {
            return Err(Error::InvalidParameter("batch size must be positive".into()));
        }
        let per_source = |f: &dyn Fn(&Spinor) -> Result<[PointerModel; 2]>, s: Source| {
            Ok::<_, Error>([f(&s.state(0))?, f(&s.state(1))?])
        };
        let exact_fn = |c: &Spinor| input_model(c, &config);
        let aav_fn = |c: &Spinor| aav_model(c, &config);
        let models = [per_source(&exact_fn, Source::Xi)?, per_source(&exact_fn, Source::Zeta)?];
        let exact = [
            Hypothesis::build(models[0].clone(), config.grid_points)?,
            Hypothesis::build(models[1].clone(), config.grid_points)?,
        ];
        let aav = [
            Hypothesis::build(per_source(&aav_fn, Source::Xi)?, config.grid_points)?,
            Hypothesis::build(per_source(&aav_fn, Source::Zeta)?, config.grid_points)?,
        ];
        Ok(Self { config, models, exact, aav })
    }

    /// Exact pointer models for `source` at `parity`, `[χ_f, χ_f⊥]`.
    pub fn model(&self, source: Source, parity: Parity) -> &[PointerModel; 2] {
        &self.models[source.slot()][parity.slot()]
    }

    pub fn sample(&self, source: Source, index: u64, streams: Streams) -> Result<TrialRecord> {
        let mut rng = streams.particle(index);
        sample_from(self.model(source, Parity::of(index)), &self.config, index, &mut rng)
    }

    /// Sequential test after every full batch (and at `max_particles`). A
    /// hypothesis is rejected when its combined p-value is below α; Bob decides
    /// once exactly one is rejected.
    pub fn run(
        &self,
        source: Source,
        predictions: Predictions,
        max_particles: u64,
        alpha: f64,
        streams: Streams,
    ) -> Result<Run> {
        let hyps = match predictions {
            Predictions::Exact => &self.exact,
            Predictions::Aav => &self.aav,
        };
        let batch = self.config.batch_size as u64;
        let mut acc = Accumulator::default();
        let mut trials = Vec::new();
        let mut last_p = [1.0, 1.0];
        for index in 0..max_particles {
            let t = self.sample(source, index, streams)?;
            acc.push(&t);
            trials.push(t);
            let used = index + 1;
            if used < batch || (used % batch != 0 && used != max_particles) {
                continue;
            }
            let p = [
                hyps[0].p_value(&acc, self.config.keep_both)?,
                hyps[1].p_value(&acc, self.config.keep_both)?,
            ];
            last_p = p;
            if alpha >= 1.0 {
                let (verdict, statistic) =
                    if p[0] >= p[1] { (Verdict::Xi, p[1]) } else { (Verdict::Zeta, p[0]) };
                let decision =
                    Decision { verdict, particles_used: used, statistic, alpha, degenerate: true };
                return Ok(Run { decision, trials });
            }
            let rejected = [p[0] < alpha, p[1] < alpha];
            let verdict = match rejected {
                [false, true] => Some((Verdict::Xi, p[1])),
                [true, false] => Some((Verdict::Zeta, p[0])),
                _ => None,
            };
            if let Some((verdict, statistic)) = verdict {
                let decision =
                    Decision { verdict, particles_used: used, statistic, alpha, degenerate: false };
                return Ok(Run { decision, trials });
            }
        }
        let decision = Decision {
            verdict: Verdict::Undecided,
            particles_used: max_particles,
            statistic: last_p[0].min(last_p[1]),
            alpha,
            degenerate: false,
        };
        Ok(Run { decision, trials })
    }
}

/// Sequential test against the exact pointer predictions.
pub fn exact_weak_strategy(
    source: Source,
    setup: &WeakSetup,
    max_particles: u64,
    alpha: f64,
    streams: Streams,
) -> Result<Run> {
    setup.run(source, Predictions::Exact, max_particles, alpha, streams)
}

/// Sequential test against the first-order (AAV) pointer predictions.
pub fn standard_weak_strategy(
    source: Source,
    setup: &WeakSetup,
    max_particles: u64,
    alpha: f64,
    streams: Streams,
) -> Result<Run> {
    setup.run(source, Predictions::Aav, max_particles, alpha, streams)
}

/// Pearson correlation of sample sign with parity (even = +1) over records
/// that carry a sample.
pub fn sign_parity_correlation(trials: &[TrialRecord]) -> f64 {
    let pairs: Vec<(f64, f64)> = trials
        .iter()
        .filter_map(|t| {
            t.sample.map(|x| {
                let s = if x >= 0.0 { 1.0 } else { -1.0 };
                let p = if t.parity == Parity::Even { 1.0 } else { -1.0 };
                (s, p)
            })
        })
        .collect();
    let n = pairs.len() as f64;
    if n < 2.0 {
        return 0.0;
    }
    let (ms, mp) = pairs.iter().fold((0.0, 0.0), |a, (s, p)| (a.0 + s / n, a.1 + p / n));
    let (mut cov, mut vs, mut vp) = (0.0, 0.0, 0.0);
    for (s, p) in &pairs {
        cov += (s - ms) * (p - mp);
        vs += (s - ms).powi(2);
        vp += (p - mp).powi(2);
    }
    if vs == 0.0 || vp == 0.0 {
        return 0.0;
    }
    cov / (vs * vp).sqrt()
}
