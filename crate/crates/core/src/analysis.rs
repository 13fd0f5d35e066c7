//! Peak extraction, closed-form limiting densities and distance metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{trapezoid, Distribution, Grid};
use crate::{Axis, Representation};

pub const DEFAULT_PROMINENCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub location: f64,
    pub height: f64,
    /// Height relative to the global maximum.
    pub prominence: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PeakSet {
    pub peaks: Vec<Peak>,
}

impl PeakSet {
    pub fn len(&self) -> usize {
        self.peaks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peaks.is_empty()
    }

    pub fn locations(&self) -> Vec<f64> {
        self.peaks.iter().map(|p| p.location).collect()
    }

    /// Highest peak.
    pub fn global(&self) -> Option<&Peak> {
        self.peaks.iter().max_by(|a, b| a.height.total_cmp(&b.height))
    }

    /// Locations divided by `unit`, heights multiplied by it.
    pub fn rescaled(&self, unit: f64) -> PeakSet {
        PeakSet {
            peaks: self
                .peaks
                .iter()
                .map(|p| Peak { location: p.location / unit, height: p.height * unit, ..*p })
                .collect(),
        }
    }
}

/// Strict interior local maxima at or above `threshold` × global maximum.
///
/// Single-point maxima are refined with a parabola through the three nearest
/// samples, fitted to `ln D` when all three are positive (exact for a
/// Gaussian) and to `D` otherwise. A flat-topped maximum is reported at the
/// centre of its plateau.
pub fn find_peaks(d: &Distribution, threshold: f64) -> Result<PeakSet> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "prominence threshold must lie in (0, 1), got {threshold}"
        )));
    }
    let v = &d.values;
    let vmax = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if v.len() < 3 || !(vmax > 0.0) || !vmax.is_finite() {
        return Err(Error::EmptyDistribution);
    }
    let h = d.grid_step;
    let mut raw = Vec::new();
    let mut i = 1;
    while i + 1 < v.len() {
        let mut j = i;
        while j + 1 < v.len() && v[j + 1] == v[i] {
            j += 1;
        }
        if j + 1 < v.len() && v[i - 1] < v[i] && v[j + 1] < v[i] && v[i] >= threshold * vmax {
            if i == j {
                let (loc, height) = refine(v[i - 1], v[i], v[i + 1]);
                raw.push((d.coordinate(i) + loc * h, height));
            } else {
                raw.push((0.5 * (d.coordinate(i) + d.coordinate(j)), v[i]));
            }
        }
        i = j + 1;
    }
    let top = raw.iter().map(|p| p.1).fold(vmax, f64::max);
    Ok(PeakSet {
        peaks: raw
            .into_iter()
            .map(|(location, height)| Peak { location, height, prominence: height / top })
            .collect(),
    })
}

/// Vertex offset (in grid steps, within ±½) and height of the parabola
/// through three equally spaced samples.
fn refine(a: f64, b: f64, c: f64) -> (f64, f64) {
    if a > 0.0 && b > 0.0 && c > 0.0 {
        let (la, lb, lc) = (a.ln(), b.ln(), c.ln());
        let den = la - 2.0 * lb + lc;
        if den < 0.0 {
            let off = (0.5 * (la - lc) / den).clamp(-0.5, 0.5);
            return (off, (lb - 0.25 * (la - lc) * off).exp());
        }
    }
    let den = a - 2.0 * b + c;
    if den < 0.0 {
        let off = (0.5 * (a - c) / den).clamp(-0.5, 0.5);
        return (off, b - 0.25 * (a - c) * off);
    }
    (0.0, b)
}

/// Normalized `p² exp(-2p²δ²/ħ²)`, the pointer density for orthogonal
/// pre/post-selection in the weak limit.
pub fn orthogonal_limit_density(delta: f64, hbar: f64, grid: &Grid) -> Result<Distribution> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("width must be positive, got {delta}")));
    }
    let c = 2.0 * delta * delta / (hbar * hbar);
    let norm = 2.0 * c.powf(1.5) / std::f64::consts::PI.sqrt();
    Ok(Distribution::from_fn(Axis::X, Representation::Momentum, grid, |p| {
        norm * p * p * (-c * p * p).exp()
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub l1: f64,
    pub linf: f64,
    pub ks: f64,
    /// Global-maximum location of `exact` minus that of `approx`.
    pub main_peak_delta: f64,
    /// For each peak of `exact`, its offset from the nearest peak of `approx`.
    pub peak_deltas: Vec<f64>,
}

/// Distances between two densities on the same grid, each normalized first.
pub fn compare(exact: &Distribution, approx: &Distribution) -> Result<Comparison> {
    if !exact.grid().same_as(&approx.grid()) {
        return Err(Error::GridMismatch);
    }
    let (e, a) = (exact.normalized()?, approx.normalized()?);
    let diff: Vec<f64> = e.values.iter().zip(&a.values).map(|(x, y)| (x - y).abs()).collect();
    let l1 = trapezoid(&diff, e.grid_step);
    let linf = diff.iter().copied().fold(0.0, f64::max);
    let ks = e
        .cumulative()
        .iter()
        .zip(a.cumulative())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);

    let pe = find_peaks(&e, DEFAULT_PROMINENCE)?;
    let pa = find_peaks(&a, DEFAULT_PROMINENCE)?;
    let main_peak_delta = match (pe.global(), pa.global()) {
        (Some(x), Some(y)) => x.location - y.location,
        _ => f64::NAN,
    };
    let peak_deltas = pe
        .peaks
        .iter()
        .filter_map(|p| {
            pa.peaks
                .iter()
                .map(|q| p.location - q.location)
                .min_by(|x, y| x.abs().total_cmp(&y.abs()))
        })
        .collect();
    Ok(Comparison { l1, linf, ks, main_peak_delta, peak_deltas })
}

/// First moment of the normalized density.
pub fn mean_momentum(d: &Distribution) -> Result<f64> {
    let n = d.normalized()?;
    let first: Vec<f64> = n.values.iter().enumerate().map(|(i, v)| n.coordinate(i) * v).collect();
    Ok(trapezoid(&first, n.grid_step))
}

/// Second central moment of the normalized density.
pub fn variance(d: &Distribution) -> Result<f64> {
    let n = d.normalized()?;
    let m = mean_momentum(&n)?;
    let second: Vec<f64> = n
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| (n.coordinate(i) - m).powi(2) * v)
        .collect();
    Ok(trapezoid(&second, n.grid_step))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn gaussian(c: f64, s: f64, grid: &Grid) -> Distribution {
        Distribution::from_fn(Axis::X, Representation::Momentum, grid, |x| {
            (-(x - c).powi(2) / (2.0 * s * s)).exp()
        })
    }

    #[test]
    fn single_gaussian_peak_is_exact() {
        let g = Grid::linspace(-5.0, 5.0, 1001).unwrap();
        let c = 0.123_456;
        let p = find_peaks(&gaussian(c, 0.7, &g), DEFAULT_PROMINENCE).unwrap();
        assert_eq!(p.len(), 1);
        assert!((p.peaks[0].location - c).abs() < 1e-3 * g.step());
        assert_relative_eq!(p.peaks[0].height, 1.0, max_relative = 1e-10);
        assert_relative_eq!(p.peaks[0].prominence, 1.0);
    }

    #[test]
    fn plateau_reported_at_centre() {
        let g = Grid::linspace(0.0, 6.0, 7).unwrap();
        let d = Distribution::new(Axis::X, Representation::Position, &g, vec![0., 1., 2., 2., 2., 1., 0.]);
        let p = find_peaks(&d, 0.5).unwrap();
        assert_eq!(p.locations(), vec![3.0]);
    }

    #[test]
    fn threshold_filters_small_bumps_and_edges_are_ignored() {
        let g = Grid::linspace(0.0, 8.0, 9).unwrap();
        let d = Distribution::new(
            Axis::X,
            Representation::Position,
            &g,
            vec![5., 0., 1e-4, 0., 2., 3., 2., 0., 0.],
        );
        let p = find_peaks(&d, 1e-3).unwrap();
        assert_eq!(p.len(), 1);
        assert!((p.peaks[0].location - 5.0).abs() < 0.5);
        assert!(find_peaks(&d, 1e-6).unwrap().len() == 2);
    }

    #[test]
    fn errors() {
        let g = Grid::linspace(0.0, 1.0, 5).unwrap();
        let zero = Distribution::new(Axis::X, Representation::Position, &g, vec![0.0; 5]);
        assert!(matches!(find_peaks(&zero, 0.1), Err(Error::EmptyDistribution)));
        assert!(matches!(mean_momentum(&zero), Err(Error::EmptyDistribution)));
        let d = gaussian(0.5, 0.2, &g);
        assert!(find_peaks(&d, 0.0).is_err());
        assert!(find_peaks(&d, 1.0).is_err());
        let other = gaussian(0.5, 0.2, &Grid::linspace(0.0, 2.0, 5).unwrap());
        assert!(matches!(compare(&d, &other), Err(Error::GridMismatch)));
    }

    #[test]
    fn orthogonal_limit_shape() {
        let (delta, hbar) = (0.3, 1.0);
        let g = Grid::linspace(-20.0, 20.0, 8001).unwrap();
        let d = orthogonal_limit_density(delta, hbar, &g).unwrap();
        assert!((d.integral() - 1.0).abs() < 1e-8);
        assert_eq!(d.values[4000], 0.0);
        let p = find_peaks(&d, DEFAULT_PROMINENCE).unwrap();
        let want = hbar / (2f64.sqrt() * delta);
        assert_eq!(p.len(), 2);
        assert_relative_eq!(p.peaks[0].location, -want, max_relative = 1e-6);
        assert_relative_eq!(p.peaks[1].location, want, max_relative = 1e-6);
        assert!(mean_momentum(&d).unwrap().abs() < 1e-12);
    }

    #[test]
    fn compare_identical_is_zero() {
        let g = Grid::linspace(-5.0, 5.0, 501).unwrap();
        let d = gaussian(0.3, 1.0, &g);
        let c = compare(&d, &d).unwrap();
        assert_eq!((c.l1, c.linf, c.ks, c.main_peak_delta), (0.0, 0.0, 0.0, 0.0));
        assert_eq!(c.peak_deltas, vec![0.0]);
    }

    #[test]
    fn compare_shifted_gaussians() {
        let g = Grid::linspace(-10.0, 10.0, 4001).unwrap();
        let c = compare(&gaussian(0.5, 1.0, &g), &gaussian(0.0, 1.0, &g)).unwrap();
        // KS between N(0.5,1) and N(0,1) is 2Φ(0.25) - 1
        assert_relative_eq!(c.ks, 0.197_412_6, max_relative = 1e-5);
        assert_relative_eq!(c.main_peak_delta, 0.5, max_relative = 1e-6);
    }

    #[test]
    fn moments_of_gaussian() {
        let g = Grid::linspace(-10.0, 12.0, 4001).unwrap();
        let d = gaussian(1.25, 0.8, &g);
        assert!((mean_momentum(&d).unwrap() - 1.25).abs() < 1e-6);
        assert_relative_eq!(variance(&d).unwrap(), 0.64, max_relative = 1e-6);
    }

    proptest! {
        #[test]
        fn mirror_symmetric_peaks(c in 0.5f64..4.0, s in 0.2f64..1.5, w in 0.2f64..1.0) {
            let g = Grid::linspace(-10.0, 10.0, 2001).unwrap();
            let d = Distribution::from_fn(Axis::X, Representation::Momentum, &g, |x| {
                w * (-(x - c).powi(2) / (2.0 * s * s)).exp()
                    + w * (-(x + c).powi(2) / (2.0 * s * s)).exp()
                    + 0.3 * (-x * x / 0.5).exp()
            });
            let locs = find_peaks(&d, DEFAULT_PROMINENCE).unwrap().locations();
            let n = locs.len();
            for k in 0..n {
                prop_assert!((locs[k] + locs[n - 1 - k]).abs() < 1e-6);
            }
            for pair in locs.windows(2) {
                prop_assert!(pair[0] < pair[1]);
            }
        }
    }
}
