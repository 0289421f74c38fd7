//! Drift models and curvature profiles.
//!
//! A [`KappaSpec`] is a piecewise-linear curvature profile with a constant
//! negative tail. A [`RadialDrift`] is the scalar drift `a(r) = offset + κ(r)·r`
//! driving the one-dimensional comparison and sticky processes; on every linear
//! piece of κ it is a quadratic, so its integrals are evaluated in closed form.
//! A [`DriftPair`] holds the two vector fields `b`, `b̃` on `R^d` together
//! with the declared bound `M ≥ sup‖b − b̃‖` and the declared κ.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Piecewise-linear κ on `[0, tail_start)`, constant `tail_value < 0` beyond.
///
/// Breakpoints are `(radius, value)` pairs in non-decreasing radius order. Two
/// consecutive entries at the same radius encode a jump (right-continuous);
/// such a profile is not Lipschitz and is only accepted by the closed-form
/// bound routines, not by the simulators. Left of the first breakpoint κ is
/// constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KappaSpec {
    #[serde(default)]
    pub breakpoints: Vec<(f64, f64)>,
    pub tail_value: f64,
    #[serde(default)]
    pub tail_start: f64,
}

impl KappaSpec {
    pub fn new(breakpoints: Vec<(f64, f64)>, tail_value: f64, tail_start: f64) -> Result<Self> {
        let k = KappaSpec { breakpoints, tail_value, tail_start };
        k.validate()?;
        Ok(k)
    }

    /// κ ≡ value (value < 0).
    pub fn constant(value: f64) -> Result<Self> {
        Self::new(Vec::new(), value, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tail_value < 0.0) || !self.tail_value.is_finite() {
            return invalid(format!("kappa tail_value must be finite and < 0, got {}", self.tail_value));
        }
        if !(self.tail_start >= 0.0) || !self.tail_start.is_finite() {
            return invalid(format!("kappa tail_start must be finite and >= 0, got {}", self.tail_start));
        }
        let mut run = 1;
        for (i, &(r, v)) in self.breakpoints.iter().enumerate() {
            if !r.is_finite() || !v.is_finite() || r < 0.0 {
                return invalid(format!("kappa breakpoint {i} = ({r}, {v}) is not a finite nonneg radius"));
            }
            if r > self.tail_start {
                return invalid(format!("kappa breakpoint radius {r} lies beyond tail_start {}", self.tail_start));
            }
            if i > 0 {
                let prev = self.breakpoints[i - 1].0;
                if r < prev {
                    return invalid("kappa breakpoints must be sorted by radius");
                }
                run = if r == prev { run + 1 } else { 1 };
                if run > 2 {
                    return invalid(format!("more than two kappa breakpoints at radius {r}"));
                }
            }
        }
        if let Some(&(r, _)) = self.breakpoints.last() {
            if r == self.tail_start && run > 1 {
                return invalid("kappa jump collides with the tail start");
            }
        }
        Ok(())
    }

    fn node_count(&self) -> usize {
        self.breakpoints.len() + 1
    }

    fn node(&self, i: usize) -> (f64, f64) {
        if i < self.breakpoints.len() {
            self.breakpoints[i]
        } else {
            (self.tail_start, self.tail_value)
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r >= self.tail_start {
            return self.tail_value;
        }
        let idx = self.breakpoints.partition_point(|&(x, _)| x <= r);
        if idx == 0 {
            return self.node(0).1;
        }
        let (r0, v0) = self.node(idx - 1);
        let (r1, v1) = self.node(idx);
        if r1 <= r0 {
            return v1;
        }
        v0 + (v1 - v0) * (r - r0) / (r1 - r0)
    }

    /// Largest slope over the linear pieces; infinite when the profile jumps.
    pub fn lipschitz_constant(&self) -> f64 {
        let mut lip: f64 = 0.0;
        for i in 0..self.node_count().saturating_sub(1) {
            let (r0, v0) = self.node(i);
            let (r1, v1) = self.node(i + 1);
            if r1 == r0 {
                if v1 != v0 {
                    return f64::INFINITY;
                }
                continue;
            }
            lip = lip.max(((v1 - v0) / (r1 - r0)).abs());
        }
        lip
    }

    pub fn is_lipschitz(&self) -> bool {
        self.lipschitz_constant().is_finite()
    }

    /// Radii where κ has a kink or jump.
    pub fn kinks(&self) -> Vec<f64> {
        let mut v: Vec<f64> = (0..self.node_count()).map(|i| self.node(i).0).collect();
        v.dedup();
        v
    }
}

/// The step profile `κ(r) = L·1(r<R) − K·1(r≥R)` and its mollified variant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LkrProfile {
    pub l: f64,
    pub k: f64,
    pub r_script: f64,
}

impl LkrProfile {
    pub fn new(l: f64, k: f64, r_script: f64) -> Result<Self> {
        if !(l >= 0.0) || !(k > 0.0) || !(r_script >= 0.0) || !(l + k + r_script).is_finite() {
            return invalid(format!("LKR profile needs L >= 0, K > 0, R >= 0 (got {l}, {k}, {r_script})"));
        }
        Ok(LkrProfile { l, k, r_script })
    }

    pub fn eval_step(&self, r: f64) -> f64 {
        if r < self.r_script {
            self.l
        } else {
            -self.k
        }
    }

    /// Exact step, encoded as a jump at `R`. Not Lipschitz.
    pub fn kappa_step(&self) -> KappaSpec {
        if self.r_script == 0.0 {
            return KappaSpec { breakpoints: vec![], tail_value: -self.k, tail_start: 0.0 };
        }
        KappaSpec {
            breakpoints: vec![(0.0, self.l), (self.r_script, self.l)],
            tail_value: -self.k,
            tail_start: self.r_script,
        }
    }

    /// Linear ramp from `L` down to `−K` over `[R, R + w]`; dominates the step.
    pub fn kappa_mollified(&self, width: f64) -> Result<KappaSpec> {
        if !(width > 0.0) || !width.is_finite() {
            return invalid(format!("mollifier width {width} must be positive"));
        }
        let bps = if self.r_script > 0.0 { vec![(0.0, self.l), (self.r_script, self.l)] } else { vec![(0.0, self.l)] };
        KappaSpec::new(bps, -self.k, self.r_script + width)
    }

    pub fn default_mollifier_width(&self) -> f64 {
        (self.r_script / 100.0).max(1e-6)
    }
}

#[derive(Clone, Copy, Debug)]
struct Seg {
    lo: f64,
    hi: f64,
    // a(r) = q2 r² + q1 r + q0 on [lo, hi]
    q2: f64,
    q1: f64,
    q0: f64,
}

impl Seg {
    fn eval(&self, r: f64) -> f64 {
        (self.q2 * r + self.q1) * r + self.q0
    }

    fn antideriv(&self, r: f64) -> f64 {
        ((self.q2 / 3.0 * r + self.q1 / 2.0) * r + self.q0) * r
    }

    fn integral(&self, p: f64, q: f64) -> f64 {
        self.antideriv(q) - self.antideriv(p)
    }

    fn roots_in(&self, p: f64, q: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let (a, b, c) = (self.q2, self.q1, self.q0);
        if a == 0.0 {
            if b != 0.0 {
                out.push(-c / b);
            }
        } else {
            let disc = b * b - 4.0 * a * c;
            if disc >= 0.0 {
                let s = disc.sqrt();
                let t = -0.5 * (b + b.signum() * s);
                if t != 0.0 {
                    out.push(t / a);
                    out.push(c / t);
                } else {
                    out.push(0.0);
                }
            }
        }
        out.retain(|&x| x > p && x < q);
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    fn pos_integral(&self, p: f64, q: f64) -> f64 {
        if q <= p {
            return 0.0;
        }
        let mut pts = vec![p];
        pts.extend(self.roots_in(p, q));
        pts.push(q);
        let mut s = 0.0;
        for w in pts.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            if self.eval(mid) > 0.0 {
                s += self.integral(w[0], w[1]);
            }
        }
        s
    }
}

/// Scalar radial drift `a(r) = offset + κ(r)·r`.
#[derive(Clone, Debug)]
pub struct RadialDrift {
    pub offset: f64,
    pub kappa: KappaSpec,
    segs: Vec<Seg>,
    cum: Vec<f64>,
    cum_pos: Vec<f64>,
}

impl PartialEq for RadialDrift {
    fn eq(&self, other: &Self) -> bool {
        self.offset == other.offset && self.kappa == other.kappa
    }
}

impl RadialDrift {
    pub fn new(offset: f64, kappa: KappaSpec) -> Result<Self> {
        kappa.validate()?;
        if !offset.is_finite() || offset < 0.0 {
            return invalid(format!("drift offset must be finite and >= 0, got {offset}"));
        }
        let mut segs = Vec::new();
        let mut push = |lo: f64, hi: f64, k0: f64, slope: f64| {
            if hi > lo {
                // κ(r) = k0 + slope (r − lo)
                segs.push(Seg { lo, hi, q2: slope, q1: k0 - slope * lo, q0: offset });
            }
        };
        let n = kappa.node_count();
        let first = kappa.node(0);
        if first.0 > 0.0 {
            push(0.0, first.0, first.1, 0.0);
        }
        for i in 0..n - 1 {
            let (r0, v0) = kappa.node(i);
            let (r1, v1) = kappa.node(i + 1);
            if r1 > r0 {
                push(r0, r1, v0, (v1 - v0) / (r1 - r0));
            }
        }
        push(kappa.tail_start, f64::INFINITY, kappa.tail_value, 0.0);
        let mut cum = Vec::with_capacity(segs.len());
        let mut cum_pos = Vec::with_capacity(segs.len());
        let (mut s, mut sp) = (0.0, 0.0);
        for seg in &segs {
            cum.push(s);
            cum_pos.push(sp);
            if seg.hi.is_finite() {
                s += seg.integral(seg.lo, seg.hi);
                sp += seg.pos_integral(seg.lo, seg.hi);
            }
        }
        Ok(RadialDrift { offset, kappa, segs, cum, cum_pos })
    }

    /// `a(r) = M + κ(r)·r`.
    pub fn from_m(m: f64, kappa: &KappaSpec) -> Result<Self> {
        Self::new(m, kappa.clone())
    }

    fn seg_index(&self, r: f64) -> usize {
        let i = self.segs.partition_point(|s| s.lo <= r);
        i.saturating_sub(1)
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.offset + self.kappa.eval(r) * r
    }

    /// `∫₀^x a(y) dy`, exact.
    pub fn integral(&self, x: f64) -> f64 {
        let i = self.seg_index(x);
        let s = &self.segs[i];
        self.cum[i] + s.integral(s.lo, x)
    }

    /// `∫₀^x a(y)⁺ dy`, exact.
    pub fn pos_integral(&self, x: f64) -> f64 {
        let i = self.seg_index(x);
        let s = &self.segs[i];
        self.cum_pos[i] + s.pos_integral(s.lo, x)
    }

    pub fn tail_value(&self) -> f64 {
        self.kappa.tail_value
    }

    pub fn tail_start(&self) -> f64 {
        self.kappa.tail_start
    }

    /// Radii where `a` or `a⁺` is not smooth, below `upto`.
    pub fn kinks(&self, upto: f64) -> Vec<f64> {
        let mut v = Vec::new();
        for s in &self.segs {
            if s.lo > 0.0 && s.lo < upto {
                v.push(s.lo);
            }
            let hi = s.hi.min(upto);
            v.extend(s.roots_in(s.lo, hi));
        }
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }
}

/// Affine-plus-radial vector field `b(x) = A·x + c + ρ(‖x‖)·x` with ρ
/// piecewise linear (constant extrapolation).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineField {
    /// Row-major `d × d`.
    pub a: Vec<f64>,
    pub c: Vec<f64>,
    #[serde(default)]
    pub rho: Vec<(f64, f64)>,
}

impl AffineField {
    fn rho_at(&self, r: f64) -> f64 {
        match self.rho.len() {
            0 => 0.0,
            _ => {
                let idx = self.rho.partition_point(|&(x, _)| x <= r);
                if idx == 0 {
                    self.rho[0].1
                } else if idx == self.rho.len() {
                    self.rho[idx - 1].1
                } else {
                    let (r0, v0) = self.rho[idx - 1];
                    let (r1, v1) = self.rho[idx];
                    v0 + (v1 - v0) * (r - r0) / (r1 - r0)
                }
            }
        }
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        let d = x.len();
        let rho = self.rho_at(norm(x));
        for i in 0..d {
            let row = &self.a[i * d..(i + 1) * d];
            out[i] = self.c[i] + rho * x[i] + row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>();
        }
    }

    fn check(&self, d: usize) -> Result<()> {
        if self.a.len() != d * d || self.c.len() != d {
            return invalid(format!("custom field needs a {d}x{d} matrix and length-{d} offset"));
        }
        if self.rho.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return invalid("custom rho table radii must be strictly increasing");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DriftKind {
    /// `b(x) = −x/2`, `b̃(x) = −(x − m)/2`.
    Ou {
        m: Vec<f64>,
    },
    /// `b = 0` on the ball of radius `R`, `−k(‖x‖−R)x/(2‖x‖)` outside; `b̃ = b + m/2`.
    ConfinedBm {
        radius: f64,
        k: f64,
        m: Vec<f64>,
    },
    Custom {
        b: AffineField,
        b_tilde: AffineField,
    },
}

/// Two drifts on `R^d` with declared `M` and κ.
#[derive(Clone, Debug, PartialEq)]
pub struct DriftPair {
    pub kind: DriftKind,
    pub dimension: usize,
    pub m_bound: f64,
    /// Lipschitz κ used by the comparison process.
    pub kappa: KappaSpec,
    /// Step profile for closed-form bounds, when the model has one.
    pub lkr: Option<LkrProfile>,
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl DriftPair {
    pub fn b(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        match &self.kind {
            DriftKind::Ou { .. } => {
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = -0.5 * xi;
                }
            }
            DriftKind::ConfinedBm { radius, k, .. } => confined(*radius, *k, x, out),
            DriftKind::Custom { b, .. } => b.eval(x, out),
        }
    }

    pub fn b_tilde(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        match &self.kind {
            DriftKind::Ou { m } => {
                for i in 0..x.len() {
                    out[i] = -0.5 * (x[i] - m[i]);
                }
            }
            DriftKind::ConfinedBm { radius, k, m } => {
                confined(*radius, *k, x, out);
                for i in 0..x.len() {
                    out[i] += 0.5 * m[i];
                }
            }
            DriftKind::Custom { b_tilde, .. } => b_tilde.eval(x, out),
        }
    }

    /// `(M, κ)` radial drift of the comparison process.
    pub fn radial(&self) -> Result<RadialDrift> {
        RadialDrift::from_m(self.m_bound, &self.kappa)
    }
}

fn confined(radius: f64, k: f64, x: &[f64], out: &mut [f64]) {
    let n = norm(x);
    if n <= radius {
        out.iter_mut().for_each(|o| *o = 0.0);
    } else {
        let f = -0.5 * k * (n - radius) / n;
        for (o, xi) in out.iter_mut().zip(x) {
            *o = f * xi;
        }
    }
}

/// Parameters for [`builtin_models`]; unused fields are ignored per model.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    #[serde(default)]
    pub m: Option<Vec<f64>>,
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default)]
    pub k: Option<f64>,
    #[serde(default)]
    pub dimension: Option<usize>,
    #[serde(default)]
    pub mollifier_width: Option<f64>,
    #[serde(default)]
    pub b: Option<AffineField>,
    #[serde(default)]
    pub b_tilde: Option<AffineField>,
    #[serde(default)]
    pub m_bound: Option<f64>,
    #[serde(default)]
    pub kappa: Option<KappaSpec>,
}

pub fn builtin_models(name: &str, p: &ModelParams) -> Result<DriftPair> {
    match name {
        "ou" => {
            let m = p.m.clone().unwrap_or_else(|| vec![0.0; p.dimension.unwrap_or(1)]);
            if m.is_empty() || m.iter().any(|v| !v.is_finite()) {
                return invalid("ou needs a finite, nonempty m");
            }
            let d = m.len();
            let m_bound = norm(&m) / 2.0;
            Ok(DriftPair {
                kind: DriftKind::Ou { m },
                dimension: d,
                m_bound,
                kappa: KappaSpec::constant(-0.5)?,
                lkr: None,
            })
        }
        "confined_bm" => {
            let radius = p.radius.ok_or_else(|| Error::InvalidInput("confined_bm needs radius".into()))?;
            let k = p.k.ok_or_else(|| Error::InvalidInput("confined_bm needs k".into()))?;
            if !(radius > 0.0) || !(k > 0.0) {
                return invalid(format!("confined_bm needs positive radius and k (got {radius}, {k})"));
            }
            let m = p.m.clone().unwrap_or_else(|| vec![0.0; p.dimension.unwrap_or(1)]);
            if m.is_empty() || m.iter().any(|v| !v.is_finite()) {
                return invalid("confined_bm needs a finite, nonempty m");
            }
            let lkr = LkrProfile::new(0.0, k / 6.0, 3.0 * radius)?;
            let w = p.mollifier_width.unwrap_or_else(|| lkr.default_mollifier_width());
            Ok(DriftPair {
                dimension: m.len(),
                m_bound: norm(&m) / 2.0,
                kappa: lkr.kappa_mollified(w)?,
                lkr: Some(lkr),
                kind: DriftKind::ConfinedBm { radius, k, m },
            })
        }
        "custom" => {
            let b = p.b.clone().ok_or_else(|| Error::InvalidInput("custom needs b".into()))?;
            let bt = p.b_tilde.clone().ok_or_else(|| Error::InvalidInput("custom needs b_tilde".into()))?;
            let d = b.c.len();
            if d == 0 {
                return invalid("custom field dimension must be positive");
            }
            b.check(d)?;
            bt.check(d)?;
            let m_bound = p.m_bound.ok_or_else(|| Error::InvalidInput("custom needs m_bound".into()))?;
            if !(m_bound >= 0.0) {
                return invalid("m_bound must be >= 0");
            }
            let kappa = p.kappa.clone().ok_or_else(|| Error::InvalidInput("custom needs kappa".into()))?;
            kappa.validate()?;
            Ok(DriftPair { kind: DriftKind::Custom { b, b_tilde: bt }, dimension: d, m_bound, kappa, lkr: None })
        }
        other => Err(Error::UnknownModel(other.to_string())),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub samples: usize,
    /// max ‖b − b̃‖ − M over the draws.
    pub max_drift_gap: f64,
    /// max of ⟨x−y, b(x)−b(y)⟩ − κ(‖x−y‖)‖x−y‖², over both drifts.
    pub max_curvature_excess: f64,
    pub pass: bool,
}

/// Randomized check of the two model assumptions on the box `[−half_width, half_width]^d`.
pub fn validate_model(
    pair: &DriftPair,
    kappa: &KappaSpec,
    samples: usize,
    seed: u64,
    half_width: f64,
) -> Result<ValidationReport> {
    if samples == 0 {
        return invalid("validate_model needs at least one sample");
    }
    let d = pair.dimension;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut x, mut y) = (vec![0.0; d], vec![0.0; d]);
    let (mut bx, mut by, mut tx) = (vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    let mut gap = f64::NEG_INFINITY;
    let mut excess = f64::NEG_INFINITY;
    for _ in 0..samples {
        let t = rng.random::<f64>() * 10.0;
        for i in 0..d {
            x[i] = (2.0 * rng.random::<f64>() - 1.0) * half_width;
            y[i] = (2.0 * rng.random::<f64>() - 1.0) * half_width;
        }
        pair.b(t, &x, &mut bx);
        pair.b_tilde(t, &x, &mut tx);
        let diff: Vec<f64> = bx.iter().zip(&tx).map(|(a, b)| a - b).collect();
        gap = gap.max(norm(&diff) - pair.m_bound);
        let r = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let bound = kappa.eval(r) * r * r;
        pair.b(t, &y, &mut by);
        let ip: f64 = (0..d).map(|i| (x[i] - y[i]) * (bx[i] - by[i])).sum();
        excess = excess.max(ip - bound);
        pair.b_tilde(t, &y, &mut by);
        let ip: f64 = (0..d).map(|i| (x[i] - y[i]) * (tx[i] - by[i])).sum();
        excess = excess.max(ip - bound);
    }
    let tol = 1e-12 * (1.0 + pair.m_bound + half_width * half_width);
    Ok(ValidationReport {
        samples,
        max_drift_gap: gap,
        max_curvature_excess: excess,
        pass: gap <= tol && excess <= tol,
    })
}
