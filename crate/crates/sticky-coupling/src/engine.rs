//! Path simulation: the δ-interpolated coupling of `(X, Y)` in `R^{2d}` with
//! its scalar comparison process, and the regularized one-dimensional sticky
//! SDE.
//!
//! Both schemes are explicit Euler steps. With `refine_eta = Some(η)` a grid
//! step of size `h` is split into substeps of size `min(h, (η·s/2)²)`, where
//! `s` is the distance to the degenerate region (floored at the interpolation
//! width), and the noise component that drives the radial motion is a
//! symmetric two-point increment `±√h_l`. Every substep sequence ends exactly
//! on the grid. With `refine_eta = None` the scheme is plain Euler–Maruyama
//! with Gaussian increments on the grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::TimeDependentRadialDrift;
use crate::error::{invalid, Result};
use crate::model::{norm, DriftPair, KappaSpec, RadialDrift};
use crate::rng::IncrementStream;

fn default_eta() -> Option<f64> {
    Some(0.5)
}

fn one() -> usize {
    1
}

/// `refine_eta` in files: a number, or `false` for plain Euler–Maruyama
/// (TOML has no null).
mod eta_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Eta(f64),
        Flag(bool),
    }

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => s.serialize_f64(*x),
            None => s.serialize_bool(false),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        match Option::<Repr>::deserialize(d)? {
            Some(Repr::Eta(x)) => Ok(Some(x)),
            Some(Repr::Flag(false)) | None => Ok(None),
            Some(Repr::Flag(true)) => Ok(super::default_eta()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub step_h: f64,
    pub horizon_t: f64,
    pub delta: f64,
    pub reg_n: u32,
    pub paths: usize,
    /// Overridden by the scenario seed when run from a scenario file.
    #[serde(default)]
    pub seed: u64,
    pub dimension: usize,
    /// Substep refinement factor; `None` selects plain Euler–Maruyama.
    #[serde(default = "default_eta", with = "eta_serde")]
    pub refine_eta: Option<f64>,
    /// Keep every k-th grid point (the final one is always kept).
    #[serde(default = "one")]
    pub record_stride: usize,
    /// Start of the occupation window for the sticky accumulators (default `T/10`).
    #[serde(default)]
    pub burn_in: Option<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            step_h: 1e-3,
            horizon_t: 1.0,
            delta: 1e-2,
            reg_n: 100,
            paths: 1000,
            seed: 1,
            dimension: 1,
            refine_eta: default_eta(),
            record_stride: 1,
            burn_in: None,
        }
    }
}

impl SimConfig {
    fn validate_common(&self) -> Result<()> {
        if !(self.step_h > 0.0) || !(self.horizon_t > self.step_h) || !self.horizon_t.is_finite() {
            return invalid(format!("need 0 < step_h < horizon_t (got {}, {})", self.step_h, self.horizon_t));
        }
        let n = (self.horizon_t / self.step_h).round();
        if (n * self.step_h - self.horizon_t).abs() > 1e-9 * self.horizon_t {
            return invalid("horizon_t must be an integer multiple of step_h");
        }
        if self.paths == 0 || self.dimension == 0 || self.record_stride == 0 || self.reg_n == 0 {
            return invalid("paths, dimension, record_stride and reg_n must be positive");
        }
        if let Some(eta) = self.refine_eta {
            if !(eta > 0.0 && eta < 1.0) {
                return invalid(format!("refine_eta must lie in (0, 1), got {eta}"));
            }
        }
        if let Some(b) = self.burn_in {
            if !(b >= 0.0 && b < self.horizon_t) {
                return invalid(format!("burn_in must lie in [0, horizon_t), got {b}"));
            }
        }
        Ok(())
    }

    /// Checks for the coupling simulator. Without refinement the grid itself
    /// must resolve the interpolation zone: `step_h < δ²/4`.
    pub fn validate_coupling(&self) -> Result<()> {
        self.validate_common()?;
        if !(self.delta > 0.0) {
            return invalid("delta must be > 0");
        }
        if self.refine_eta.is_none() && !(self.step_h < self.delta * self.delta / 4.0) {
            return invalid(format!(
                "step_h = {} must be < delta^2/4 = {} when refine_eta is off",
                self.step_h,
                self.delta * self.delta / 4.0
            ));
        }
        Ok(())
    }

    pub fn validate_sticky(&self) -> Result<()> {
        self.validate_common()
    }

    pub fn n_steps(&self) -> usize {
        (self.horizon_t / self.step_h).round() as usize
    }

    pub fn burn_in_or_default(&self) -> f64 {
        self.burn_in.unwrap_or(self.horizon_t / 10.0)
    }

    fn recorded(&self, i: usize) -> bool {
        i.is_multiple_of(self.record_stride) || i == self.n_steps()
    }

    /// Grid indices that are stored.
    pub fn record_indices(&self) -> Vec<usize> {
        (0..=self.n_steps()).filter(|&i| self.recorded(i)).collect()
    }

    pub fn record_times(&self) -> Vec<f64> {
        self.record_indices().into_iter().map(|i| i as f64 * self.step_h).collect()
    }
}

/// `rc^δ(r) = min(r/δ, 1)`.
#[inline]
pub fn rc(r: f64, delta: f64) -> f64 {
    (r / delta).min(1.0)
}

/// `sc^δ = √(1 − rc²)`.
#[inline]
pub fn sc(r: f64, delta: f64) -> f64 {
    let c = rc(r, delta);
    (1.0 - c * c).sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CouplingPath {
    pub path_id: usize,
    /// Row-major `n_records × d`.
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub r_tilde: Vec<f64>,
    pub r_comp: Vec<f64>,
    /// Increment of `W^δ` since the previous record (0 at the first).
    pub w_increments: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct CouplingEnsemble {
    pub times: Vec<f64>,
    pub step_h: f64,
    pub delta: f64,
    pub dimension: usize,
    pub paths: Vec<CouplingPath>,
    pub diverged: usize,
    pub substeps: u64,
}

impl CouplingEnsemble {
    pub fn time_index(&self, t: f64) -> Option<usize> {
        let tol = 1e-9 * self.step_h;
        self.times.iter().position(|&s| (s - t).abs() <= tol)
    }
}

struct CouplingSim<'a> {
    pair: &'a DriftPair,
    radial: RadialDrift,
    cfg: &'a SimConfig,
    x0: &'a [f64],
    y0: &'a [f64],
}

impl CouplingSim<'_> {
    fn run(&self, idx: usize) -> (Option<CouplingPath>, u64) {
        if self.cfg.dimension == 1 {
            return self.run_1d(idx);
        }
        let cfg = self.cfg;
        let d = cfg.dimension;
        let (h, delta) = (cfg.step_h, cfg.delta);
        let mut rng = IncrementStream::new(cfg.seed, idx as u64);
        let (mut xs, mut ys) = (self.x0.to_vec(), self.y0.to_vec());
        let mut bx = vec![0.0; d];
        let mut by = vec![0.0; d];
        let mut e = vec![0.0; d];
        let mut db1 = vec![0.0; d];
        let mut db2 = vec![0.0; d];
        let z0: Vec<f64> = xs.iter().zip(&ys).map(|(a, b)| a - b).collect();
        let mut r = norm(&z0);
        let nrec = cfg.record_indices().len();
        let mut out = CouplingPath {
            path_id: idx,
            x: Vec::with_capacity(nrec * d),
            y: Vec::with_capacity(nrec * d),
            r_tilde: Vec::with_capacity(nrec),
            r_comp: Vec::with_capacity(nrec),
            w_increments: Vec::with_capacity(nrec),
        };
        let record = |out: &mut CouplingPath, xs: &[f64], ys: &[f64], r: f64, w: f64| {
            out.x.extend_from_slice(xs);
            out.y.extend_from_slice(ys);
            let z: f64 = xs.iter().zip(ys).map(|(a, b)| (a - b) * (a - b)).sum();
            out.r_tilde.push(z.sqrt());
            out.r_comp.push(r);
            out.w_increments.push(w);
        };
        record(&mut out, &xs, &ys, r, 0.0);
        let mut substeps = 0u64;
        let mut t = 0.0;
        let mut w_acc = 0.0;
        for step in 0..cfg.n_steps() {
            let t_end = (step + 1) as f64 * h;
            loop {
                let mut rt2 = 0.0;
                for i in 0..d {
                    let z = xs[i] - ys[i];
                    e[i] = z;
                    rt2 += z * z;
                }
                let rt = rt2.sqrt();
                if rt > 0.0 {
                    e.iter_mut().for_each(|v| *v /= rt);
                } else {
                    e.iter_mut().for_each(|v| *v = 0.0);
                    e[0] = 1.0;
                }
                let mut hl = match cfg.refine_eta {
                    Some(eta) => {
                        let s = rt.min(r).max(delta);
                        (0.5 * eta * s).powi(2).min(h)
                    }
                    None => h,
                };
                let remaining = t_end - t;
                let last = hl >= remaining - 1e-12 * h;
                if last {
                    hl = remaining;
                }
                let sq = hl.sqrt();
                let w = match cfg.refine_eta {
                    Some(_) => rng.sign() * sq,
                    None => rng.normal() * sq,
                };
                if d > 1 {
                    let mut proj = 0.0;
                    for g in db1.iter_mut() {
                        *g = rng.normal() * sq;
                    }
                    for i in 0..d {
                        proj += db1[i] * e[i];
                    }
                    for i in 0..d {
                        db1[i] += (w - proj) * e[i];
                    }
                } else {
                    db1[0] = w * e[0];
                }
                let rcv = rc(rt, delta);
                let scv = (1.0 - rcv * rcv).sqrt();
                if scv > 0.0 {
                    for g in db2.iter_mut() {
                        *g = rng.normal() * sq;
                    }
                }
                self.pair.b(t, &xs, &mut bx);
                self.pair.b_tilde(t, &ys, &mut by);
                for i in 0..d {
                    let common = if scv > 0.0 { scv * db2[i] } else { 0.0 };
                    xs[i] += bx[i] * hl + rcv * db1[i] + common;
                    ys[i] += by[i] * hl + rcv * (db1[i] - 2.0 * w * e[i]) + common;
                }
                r = (r + self.radial.eval(r) * hl + 2.0 * rc(r, delta) * w).max(0.0);
                w_acc += w;
                substeps += 1;
                if last {
                    t = t_end;
                    break;
                }
                t += hl;
            }
            if !r.is_finite() || xs.iter().chain(&ys).any(|v| !v.is_finite()) {
                return (None, substeps);
            }
            if cfg.recorded(step + 1) {
                record(&mut out, &xs, &ys, r, w_acc);
                w_acc = 0.0;
            }
        }
        (Some(out), substeps)
    }
}

impl CouplingSim<'_> {
    /// Scalar specialization of [`run`](Self::run) with identical draws.
    fn run_1d(&self, idx: usize) -> (Option<CouplingPath>, u64) {
        let cfg = self.cfg;
        let (h, delta) = (cfg.step_h, cfg.delta);
        let mut rng = IncrementStream::new(cfg.seed, idx as u64);
        let (mut x, mut y) = (self.x0[0], self.y0[0]);
        let (mut bx, mut by) = ([0.0], [0.0]);
        let mut r = (x - y).abs();
        let nrec = cfg.record_indices().len();
        let mut out = CouplingPath {
            path_id: idx,
            x: Vec::with_capacity(nrec),
            y: Vec::with_capacity(nrec),
            r_tilde: Vec::with_capacity(nrec),
            r_comp: Vec::with_capacity(nrec),
            w_increments: Vec::with_capacity(nrec),
        };
        let record = |out: &mut CouplingPath, x: f64, y: f64, r: f64, w: f64| {
            out.x.push(x);
            out.y.push(y);
            out.r_tilde.push((x - y).abs());
            out.r_comp.push(r);
            out.w_increments.push(w);
        };
        record(&mut out, x, y, r, 0.0);
        let (refine, eta) = match cfg.refine_eta {
            Some(eta) => (true, eta),
            None => (false, 0.0),
        };
        let mut substeps = 0u64;
        let mut t = 0.0;
        let mut w_acc = 0.0;
        for step in 0..cfg.n_steps() {
            let t_end = (step + 1) as f64 * h;
            loop {
                let z = x - y;
                let rt = z.abs();
                let e = if z < 0.0 { -1.0 } else { 1.0 };
                let mut hl = if refine {
                    let s = rt.min(r).max(delta);
                    let q = 0.5 * eta * s;
                    (q * q).min(h)
                } else {
                    h
                };
                let remaining = t_end - t;
                let last = hl >= remaining - 1e-12 * h;
                if last {
                    hl = remaining;
                }
                let sq = hl.sqrt();
                let w = if refine { rng.sign() * sq } else { rng.normal() * sq };
                let db1 = w * e;
                let rcv = rc(rt, delta);
                let scv = (1.0 - rcv * rcv).sqrt();
                let common = if scv > 0.0 { scv * rng.normal() * sq } else { 0.0 };
                self.pair.b(t, &[x], &mut bx);
                self.pair.b_tilde(t, &[y], &mut by);
                x += bx[0] * hl + rcv * db1 + common;
                y += by[0] * hl - rcv * db1 + common;
                r = (r + self.radial.eval(r) * hl + 2.0 * rc(r, delta) * w).max(0.0);
                w_acc += w;
                substeps += 1;
                if last {
                    t = t_end;
                    break;
                }
                t += hl;
            }
            if !(r.is_finite() && x.is_finite() && y.is_finite()) {
                return (None, substeps);
            }
            if cfg.recorded(step + 1) {
                record(&mut out, x, y, r, w_acc);
                w_acc = 0.0;
            }
        }
        (Some(out), substeps)
    }
}

/// Simulates `cfg.paths` independent copies of the δ-coupling started at
/// `(x, y)`, with the comparison process driven by `(M, kappa)`.
pub fn simulate_delta_coupling(
    pair: &DriftPair,
    kappa: &KappaSpec,
    x: &[f64],
    y: &[f64],
    cfg: &SimConfig,
) -> Result<CouplingEnsemble> {
    cfg.validate_coupling()?;
    if !kappa.is_lipschitz() {
        return invalid("the simulator needs a Lipschitz kappa");
    }
    if pair.dimension != cfg.dimension || x.len() != cfg.dimension || y.len() != cfg.dimension {
        return invalid(format!(
            "dimension mismatch: model {}, config {}, x {}, y {}",
            pair.dimension,
            cfg.dimension,
            x.len(),
            y.len()
        ));
    }
    let sim = CouplingSim { pair, radial: RadialDrift::from_m(pair.m_bound, kappa)?, cfg, x0: x, y0: y };
    let results: Vec<(Option<CouplingPath>, u64)> = (0..cfg.paths).into_par_iter().map(|i| sim.run(i)).collect();
    let substeps = results.iter().map(|r| r.1).sum();
    let diverged = results.iter().filter(|r| r.0.is_none()).count();
    Ok(CouplingEnsemble {
        times: cfg.record_times(),
        step_h: cfg.step_h,
        delta: cfg.delta,
        dimension: cfg.dimension,
        paths: results.into_iter().filter_map(|r| r.0).collect(),
        diverged,
        substeps,
    })
}

/// Drift of the one-dimensional sticky SDE.
#[derive(Clone, Debug)]
pub enum StickyDrift {
    Homogeneous(RadialDrift),
    TimeDependent(TimeDependentRadialDrift),
}

impl StickyDrift {
    pub fn from_m(m: f64, kappa: &KappaSpec) -> Result<Self> {
        Ok(StickyDrift::Homogeneous(RadialDrift::from_m(m, kappa)?))
    }

    #[inline]
    pub fn alpha(&self, t: f64, r: f64) -> f64 {
        match self {
            StickyDrift::Homogeneous(a) => a.eval(r),
            StickyDrift::TimeDependent(a) => a.alpha(t, r),
        }
    }

    fn kappa(&self) -> &KappaSpec {
        match self {
            StickyDrift::Homogeneous(a) => &a.kappa,
            StickyDrift::TimeDependent(a) => &a.kappa,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StickyPath1D {
    pub path_id: usize,
    pub r: Vec<f64>,
    /// Time in the window with `r = 0` exactly.
    pub zero_time: f64,
    /// Time in the window with `r ≤ 1/n`, where the noise is damped.
    pub layer_time: f64,
    /// Time with `1/n < r < 1/n + ε` for each band width ε.
    pub band_time: [f64; 3],
    /// `4·band_time[0]/ε₀`.
    pub local_time_estimate: f64,
    /// Length of the occupation window.
    pub window: f64,
}

#[derive(Clone, Debug)]
pub struct StickyEnsemble {
    pub times: Vec<f64>,
    pub step_h: f64,
    pub reg_n: u32,
    pub band_widths: [f64; 3],
    pub burn_in: f64,
    pub paths: Vec<StickyPath1D>,
    pub diverged: usize,
    pub substeps: u64,
}

impl StickyEnsemble {
    pub fn time_index(&self, t: f64) -> Option<usize> {
        let tol = 1e-9 * self.step_h;
        self.times.iter().position(|&s| (s - t).abs() <= tol)
    }
}

fn sticky_path(drift: &StickyDrift, r0: f64, cfg: &SimConfig, idx: usize) -> (Option<StickyPath1D>, u64) {
    let h = cfg.step_h;
    let n = cfg.reg_n as f64;
    let layer = 1.0 / n;
    let widths = [1.0 / n, 2.0 / n, 4.0 / n];
    let burn = cfg.burn_in_or_default();
    let mut rng = IncrementStream::new(cfg.seed, idx as u64);
    let mut out = StickyPath1D {
        path_id: idx,
        r: Vec::with_capacity(cfg.record_indices().len()),
        zero_time: 0.0,
        layer_time: 0.0,
        band_time: [0.0; 3],
        local_time_estimate: 0.0,
        window: 0.0,
    };
    let mut r = r0;
    out.r.push(r);
    let mut t = 0.0;
    let mut substeps = 0u64;
    for step in 0..cfg.n_steps() {
        let t_end = (step + 1) as f64 * h;
        loop {
            let mut hl = match cfg.refine_eta {
                Some(eta) => (0.5 * eta * r.max(layer)).powi(2).min(h),
                None => h,
            };
            let remaining = t_end - t;
            let last = hl >= remaining - 1e-12 * h;
            if last {
                hl = remaining;
            }
            let sq = hl.sqrt();
            let w = match cfg.refine_eta {
                Some(_) => rng.sign() * sq,
                None => rng.normal() * sq,
            };
            if t >= burn {
                out.window += hl;
                if r == 0.0 {
                    out.zero_time += hl;
                }
                if r <= layer {
                    out.layer_time += hl;
                } else {
                    for (b, wdt) in out.band_time.iter_mut().zip(widths) {
                        if r < layer + wdt {
                            *b += hl;
                        }
                    }
                }
            }
            let theta = (n * r).min(1.0);
            r = (r + drift.alpha(t, r) * hl + 2.0 * theta * w).max(0.0);
            substeps += 1;
            if last {
                t = t_end;
                break;
            }
            t += hl;
        }
        if !r.is_finite() {
            return (None, substeps);
        }
        if cfg.recorded(step + 1) {
            out.r.push(r);
        }
    }
    out.local_time_estimate = 4.0 * out.band_time[0] / widths[0];
    (Some(out), substeps)
}

/// Simulates `dr = α(t,r)dt + 2ϑⁿ(r)dW`, `ϑⁿ(r) = min(n·r, 1)`, clamped at 0.
pub fn simulate_sticky_1d(drift: &StickyDrift, r0: f64, cfg: &SimConfig) -> Result<StickyEnsemble> {
    cfg.validate_sticky()?;
    if !(r0 >= 0.0) || !r0.is_finite() {
        return invalid(format!("r0 must be finite and >= 0, got {r0}"));
    }
    if !drift.kappa().is_lipschitz() {
        return invalid("the simulator needs a Lipschitz kappa");
    }
    let results: Vec<(Option<StickyPath1D>, u64)> =
        (0..cfg.paths).into_par_iter().map(|i| sticky_path(drift, r0, cfg, i)).collect();
    let n = cfg.reg_n as f64;
    Ok(StickyEnsemble {
        times: cfg.record_times(),
        step_h: cfg.step_h,
        reg_n: cfg.reg_n,
        band_widths: [1.0 / n, 2.0 / n, 4.0 / n],
        burn_in: cfg.burn_in_or_default(),
        substeps: results.iter().map(|r| r.1).sum(),
        diverged: results.iter().filter(|r| r.0.is_none()).count(),
        paths: results.into_iter().filter_map(|r| r.0).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{builtin_models, ModelParams};

    fn ou(m: f64) -> DriftPair {
        builtin_models("ou", &ModelParams { m: Some(vec![m]), ..Default::default() }).unwrap()
    }

    #[test]
    fn rc_sc_unit_circle() {
        for i in 0..=1000 {
            let r = i as f64 * 3e-5;
            let (a, b) = (rc(r, 0.01), sc(r, 0.01));
            assert!((a * a + b * b - 1.0).abs() < 1e-15);
        }
        assert_eq!(rc(0.0, 0.01), 0.0);
        assert_eq!(sc(0.02, 0.01), 0.0);
    }

    #[test]
    fn config_checks() {
        let mut c = SimConfig::default();
        assert!(c.validate_coupling().is_ok());
        c.refine_eta = None;
        assert!(c.validate_coupling().is_err());
        c.step_h = 2e-5;
        assert!(c.validate_coupling().is_ok());
        let bad = SimConfig { horizon_t: 1.0005, ..SimConfig::default() };
        assert!(bad.validate_sticky().is_err());
        let stride = SimConfig { record_stride: 300, ..SimConfig::default() };
        assert_eq!(stride.record_indices(), vec![0, 300, 600, 900, 1000]);
    }

    #[test]
    fn identical_drifts_stay_together() {
        let pair = ou(0.0);
        let cfg = SimConfig { paths: 8, horizon_t: 0.5, ..SimConfig::default() };
        let ens = simulate_delta_coupling(&pair, &pair.kappa, &[0.3], &[0.3], &cfg).unwrap();
        for p in &ens.paths {
            assert_eq!(p.x, p.y);
            assert!(p.r_tilde.iter().all(|&r| r == 0.0));
        }
    }

    #[test]
    fn r_tilde_is_distance_and_comp_nonneg() {
        let pair = builtin_models("ou", &ModelParams { m: Some(vec![1.0, 0.5]), ..Default::default() }).unwrap();
        let cfg = SimConfig { paths: 4, horizon_t: 0.5, dimension: 2, ..SimConfig::default() };
        let ens = simulate_delta_coupling(&pair, &pair.kappa, &[0.0, 0.0], &[0.5, -0.2], &cfg).unwrap();
        for p in &ens.paths {
            for i in 0..ens.times.len() {
                let dx = p.x[2 * i] - p.y[2 * i];
                let dy = p.x[2 * i + 1] - p.y[2 * i + 1];
                assert_eq!(p.r_tilde[i], (dx * dx + dy * dy).sqrt());
                assert!(p.r_comp[i] >= 0.0);
            }
        }
    }

    #[test]
    fn coupling_is_deterministic_and_thread_independent() {
        let pair = ou(1.0);
        let cfg = SimConfig { paths: 16, horizon_t: 0.2, ..SimConfig::default() };
        let a = simulate_delta_coupling(&pair, &pair.kappa, &[0.0], &[0.0], &cfg).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| simulate_delta_coupling(&pair, &pair.kappa, &[0.0], &[0.0], &cfg).unwrap());
        assert_eq!(a.paths, b.paths);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let pair = ou(1.0);
        let cfg = SimConfig { paths: 1, ..SimConfig::default() };
        assert!(simulate_delta_coupling(&pair, &pair.kappa, &[0.0, 0.0], &[0.0], &cfg).is_err());
    }

    #[test]
    fn sticky_absorbed_without_offset() {
        let drift = StickyDrift::from_m(0.0, &KappaSpec::constant(-0.5).unwrap()).unwrap();
        let cfg = SimConfig { paths: 3, horizon_t: 2.0, ..SimConfig::default() };
        let ens = simulate_sticky_1d(&drift, 0.0, &cfg).unwrap();
        for p in &ens.paths {
            assert!(p.r.iter().all(|&r| r == 0.0));
            assert!((p.zero_time - p.window).abs() < 1e-12);
        }
    }

    #[test]
    fn sticky_occupation_bookkeeping() {
        let drift = StickyDrift::from_m(1.0, &KappaSpec::constant(-0.5).unwrap()).unwrap();
        let cfg = SimConfig { paths: 2, horizon_t: 5.0, burn_in: Some(1.0), ..SimConfig::default() };
        let ens = simulate_sticky_1d(&drift, 0.0, &cfg).unwrap();
        for p in &ens.paths {
            assert!((p.window - 4.0).abs() < 1e-9);
            assert!(p.zero_time <= p.layer_time);
            assert!(p.layer_time + p.band_time[2] <= p.window + 1e-12);
            assert!(p.band_time[0] <= p.band_time[1] && p.band_time[1] <= p.band_time[2]);
            assert!(p.r.iter().all(|&r| r >= 0.0));
        }
    }
}
