//! Monte Carlo functionals over simulated ensembles.

use serde::Serialize;

use crate::bounds::{LyapunovKit, StickyInvariantMeasure};
use crate::engine::{CouplingEnsemble, StickyEnsemble};
use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub paths_used: usize,
    pub tolerance_used: Option<f64>,
}

/// Pairwise summation; the result does not depend on how the input was produced.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Sample mean and standard error `sd/√n`.
pub fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = pairwise_sum(v) / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
    (mean, (pairwise_sum(&dev) / (n - 1.0)).sqrt() / n.sqrt())
}

fn estimate(v: &[f64], tol: Option<f64>) -> Result<McEstimate> {
    if v.is_empty() {
        return Err(Error::EmptyWindow("no usable paths".into()));
    }
    let (value, std_error) = mean_se(v);
    Ok(McEstimate { value, std_error, paths_used: v.len(), tolerance_used: tol })
}

/// Radii of every path at a recorded time.
pub trait RadialSamples {
    fn radii_at(&self, t: f64) -> Result<Vec<f64>>;
}

impl RadialSamples for CouplingEnsemble {
    fn radii_at(&self, t: f64) -> Result<Vec<f64>> {
        let i = self.time_index(t).ok_or(Error::OffGrid(t))?;
        Ok(self.paths.iter().map(|p| p.r_tilde[i]).collect())
    }
}

impl RadialSamples for StickyEnsemble {
    fn radii_at(&self, t: f64) -> Result<Vec<f64>> {
        let i = self.time_index(t).ok_or(Error::OffGrid(t))?;
        Ok(self.paths.iter().map(|p| p.r[i]).collect())
    }
}

/// Fraction of paths with `r̃(t) ≤ tol`, binomial standard error.
pub fn meet_probability(ens: &CouplingEnsemble, t: f64, tol: f64) -> Result<McEstimate> {
    if !(tol >= ens.delta) {
        return invalid(format!("tol = {tol} is below the interpolation width {}", ens.delta));
    }
    let r = ens.radii_at(t)?;
    if r.is_empty() {
        return Err(Error::EmptyWindow("no usable paths".into()));
    }
    let n = r.len();
    let hits = r.iter().filter(|&&x| x <= tol).count();
    let p = hits as f64 / n as f64;
    Ok(McEstimate { value: p, std_error: (p * (1.0 - p) / n as f64).sqrt(), paths_used: n, tolerance_used: Some(tol) })
}

/// Sample mean of `f(r_t)`.
pub fn lyapunov_moment<E: RadialSamples>(ens: &E, kit: &LyapunovKit, t: f64) -> Result<McEstimate> {
    let v: Vec<f64> = ens.radii_at(t)?.into_iter().map(|r| kit.f(r)).collect();
    estimate(&v, None)
}

/// Sample mean of `r_t`.
pub fn radius_moment<E: RadialSamples>(ens: &E, t: f64) -> Result<McEstimate> {
    estimate(&ens.radii_at(t)?, None)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Occupation {
    pub atom_estimate: f64,
    /// `bins + 1` edges on `[1/n, upper]`.
    pub edges: Vec<f64>,
    /// Bin masses; they sum to `1 − atom_estimate`.
    pub masses: Vec<f64>,
    pub samples: usize,
}

/// Occupation statistics of one path from its recorded grid values after
/// `burn_in`. Values above `upper` are counted in the last bin.
pub fn ergodic_occupation(
    ens: &StickyEnsemble,
    path: usize,
    burn_in: f64,
    bins: usize,
    upper: f64,
) -> Result<Occupation> {
    let p = ens.paths.get(path).ok_or_else(|| Error::InvalidInput(format!("no path {path}")))?;
    let layer = 1.0 / ens.reg_n as f64;
    if bins == 0 || !(upper > layer) {
        return invalid("need bins >= 1 and upper > 1/n");
    }
    let start = ens.times.partition_point(|&t| t < burn_in);
    let window = &p.r[start.min(p.r.len())..];
    if window.is_empty() {
        return Err(Error::EmptyWindow(format!("no recorded times after burn-in {burn_in}")));
    }
    let width = (upper - layer) / bins as f64;
    let mut counts = vec![0usize; bins];
    let mut atom = 0usize;
    for &r in window {
        if r <= layer {
            atom += 1;
        } else {
            let b = (((r - layer) / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
    }
    let n = window.len() as f64;
    Ok(Occupation {
        atom_estimate: atom as f64 / n,
        edges: (0..=bins).map(|i| layer + i as f64 * width).collect(),
        masses: counts.iter().map(|&c| c as f64 / n).collect(),
        samples: window.len(),
    })
}

/// Largest bin-wise gap between empirical masses and π's masses on the same
/// bins (last bin open to the right).
pub fn histogram_gap(occ: &Occupation, pi: &StickyInvariantMeasure) -> Result<f64> {
    let mut gap: f64 = 0.0;
    let total = pi.tail_mass();
    let last = occ.masses.len() - 1;
    for (i, &m) in occ.masses.iter().enumerate() {
        let lo = pi.cdf_continuous(occ.edges[i])?;
        let hi = if i == last { total } else { pi.cdf_continuous(occ.edges[i + 1])? };
        gap = gap.max((m - (hi - lo)).abs());
    }
    Ok(gap)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Violations {
    pub count: usize,
    pub worst_excess: f64,
    pub points_checked: usize,
}

/// Grid points where `r̃ > r^δ + slack(h, r^δ)`.
pub fn comparison_violations<F: Fn(f64, f64) -> f64>(ens: &CouplingEnsemble, slack: F) -> Violations {
    let mut v = Violations { count: 0, worst_excess: 0.0, points_checked: 0 };
    for p in &ens.paths {
        for (&rt, &rc) in p.r_tilde.iter().zip(&p.r_comp) {
            let excess = rt - rc - slack(ens.step_h, rc);
            v.points_checked += 1;
            if excess > 0.0 {
                v.count += 1;
                v.worst_excess = v.worst_excess.max(excess);
            }
        }
    }
    v
}

/// `5√h·(1 + r)`.
pub fn default_slack(h: f64, r: f64) -> f64 {
    5.0 * h.sqrt() * (1.0 + r)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BandRatio {
    pub width: f64,
    pub mean: f64,
    pub std_error: f64,
    pub median: f64,
    pub median_abs_error: f64,
    pub paths_used: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StickinessReport {
    pub reg_n: u32,
    pub m: f64,
    pub bands: Vec<BandRatio>,
    /// Median of `|ratio − 1|` over all bands and paths.
    pub pooled_median_abs_error: f64,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Per band ε: `2M·(time with r ≤ 1/n) / (4·(time with 1/n < r < 1/n+ε)/ε)`.
pub fn stickiness_identity_check(ens: &StickyEnsemble, m: f64) -> Result<StickinessReport> {
    if !(m > 0.0) {
        return invalid("stickiness check needs M > 0");
    }
    let mut bands = Vec::new();
    let mut pooled = Vec::new();
    for (j, &w) in ens.band_widths.iter().enumerate() {
        let ratios: Vec<f64> = ens
            .paths
            .iter()
            .filter(|p| p.band_time[j] > 0.0)
            .map(|p| 2.0 * m * p.layer_time / (4.0 * p.band_time[j] / w))
            .collect();
        let est = estimate(&ratios, None)?;
        let mut abs: Vec<f64> = ratios.iter().map(|r| (r - 1.0).abs()).collect();
        pooled.extend_from_slice(&abs);
        let mut rs = ratios.clone();
        bands.push(BandRatio {
            width: w,
            mean: est.value,
            std_error: est.std_error,
            median: median(&mut rs),
            median_abs_error: median(&mut abs),
            paths_used: ratios.len(),
        });
    }
    Ok(StickinessReport { reg_n: ens.reg_n, m, bands, pooled_median_abs_error: median(&mut pooled) })
}

/// Least-squares line through `(t, ln y)` on the last `tail` fraction of
/// points with `y > 0`. Returns `(slope, intercept)`.
pub fn log_linear_fit(ts: &[f64], ys: &[f64], tail: f64) -> Option<(f64, f64)> {
    let start = ((1.0 - tail) * ts.len() as f64).floor() as usize;
    let pts: Vec<(f64, f64)> = ts[start..]
        .iter()
        .zip(&ys[start..])
        .filter(|(_, &y)| y > 0.0 && y.is_finite())
        .map(|(&t, &y)| (t, y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mt))
}

/// Envelope `B·e^{−ρt}` for the tail of a positive curve: ρ from the
/// log-linear fit, `B` the smallest constant that dominates every tail point.
pub fn exponential_envelope(ts: &[f64], ys: &[f64], tail: f64) -> Option<(f64, f64)> {
    let (slope, _) = log_linear_fit(ts, ys, tail)?;
    let rho = -slope;
    let start = ((1.0 - tail) * ts.len() as f64).floor() as usize;
    let b = ts[start..].iter().zip(&ys[start..]).map(|(&t, &y)| y * (rho * t).exp()).fold(0.0, f64::max);
    Some((b, rho))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::lyapunov_kit;
    use crate::engine::{simulate_delta_coupling, simulate_sticky_1d, SimConfig, StickyDrift};
    use crate::model::{builtin_models, KappaSpec, ModelParams, RadialDrift};

    fn ou_pair(m: f64) -> crate::model::DriftPair {
        builtin_models("ou", &ModelParams { m: Some(vec![m]), ..Default::default() }).unwrap()
    }

    #[test]
    fn pairwise_sum_matches_naive() {
        let v: Vec<f64> = (0..1000).map(|i| i as f64 * 0.5).collect();
        assert_eq!(pairwise_sum(&v), 249_750.0);
        let (m, se) = mean_se(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((se - 1.0).abs() < 1e-15);
    }

    #[test]
    fn identical_systems_always_meet() {
        let pair = ou_pair(0.0);
        let cfg = SimConfig { paths: 20, horizon_t: 1.0, record_stride: 100, ..SimConfig::default() };
        let ens = simulate_delta_coupling(&pair, &pair.kappa, &[0.0], &[0.0], &cfg).unwrap();
        let e = meet_probability(&ens, 1.0, 0.01).unwrap();
        assert_eq!((e.value, e.std_error), (1.0, 0.0));
        assert!(matches!(meet_probability(&ens, 0.55, 0.01), Err(Error::OffGrid(_))));
        assert!(meet_probability(&ens, 1.0, 0.001).is_err());
        let v = comparison_violations(&ens, |_, _| 0.0);
        assert_eq!(v.count, 0);
    }

    #[test]
    fn meet_monotone_in_tol() {
        let pair = ou_pair(1.0);
        let cfg = SimConfig { paths: 200, horizon_t: 1.0, record_stride: 1000, delta: 0.02, ..SimConfig::default() };
        let ens = simulate_delta_coupling(&pair, &pair.kappa, &[0.0], &[0.0], &cfg).unwrap();
        let a = meet_probability(&ens, 1.0, 0.02).unwrap().value;
        let b = meet_probability(&ens, 1.0, 0.04).unwrap().value;
        let c = meet_probability(&ens, 1.0, 0.2).unwrap().value;
        assert!(a <= b && b <= c);
    }

    #[test]
    fn moment_at_time_zero_is_exact() {
        let k = KappaSpec::constant(-0.5).unwrap();
        let kit = lyapunov_kit(&RadialDrift::from_m(1.0, &k).unwrap()).unwrap();
        let cfg = SimConfig { paths: 5, horizon_t: 0.1, ..SimConfig::default() };
        let ens = simulate_sticky_1d(&StickyDrift::from_m(1.0, &k).unwrap(), 1.0, &cfg).unwrap();
        let e = lyapunov_moment(&ens, &kit, 0.0).unwrap();
        assert_eq!(e.value, kit.f(1.0));
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn occupation_masses_sum_to_one() {
        let k = KappaSpec::constant(-0.5).unwrap();
        let cfg = SimConfig { paths: 1, horizon_t: 10.0, ..SimConfig::default() };
        let ens = simulate_sticky_1d(&StickyDrift::from_m(1.0, &k).unwrap(), 0.0, &cfg).unwrap();
        let occ = ergodic_occupation(&ens, 0, 1.0, 20, 8.0).unwrap();
        assert!((occ.atom_estimate + occ.masses.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(matches!(ergodic_occupation(&ens, 0, 11.0, 20, 8.0), Err(Error::EmptyWindow(_))));
        let absorbed = simulate_sticky_1d(&StickyDrift::from_m(0.0, &k).unwrap(), 0.0, &cfg).unwrap();
        assert_eq!(ergodic_occupation(&absorbed, 0, 1.0, 20, 8.0).unwrap().atom_estimate, 1.0);
    }

    #[test]
    fn fits_recover_exponentials() {
        let ts: Vec<f64> = (0..50).map(|i| i as f64 * 0.2).collect();
        let ys: Vec<f64> = ts.iter().map(|t| 3.0 * (-0.7 * t).exp()).collect();
        let (s, c) = log_linear_fit(&ts, &ys, 0.5).unwrap();
        assert!((s + 0.7).abs() < 1e-12 && (c - 3f64.ln()).abs() < 1e-12);
        let (b, rho) = exponential_envelope(&ts, &ys, 0.5).unwrap();
        assert!((b - 3.0).abs() < 1e-9 && (rho - 0.7).abs() < 1e-12);
        assert!(log_linear_fit(&ts, &vec![0.0; 50], 0.5).is_none());
    }
}
