//! Analytic side: Lyapunov kit, sticky invariant measures and explicit bounds.
//!
//! For a radial drift `a`:
//!
//! | symbol | definition |
//! |--------|------------|
//! | `R0` | `inf{R : a ≤ 0 on [R, ∞)}` |
//! | `R1` | `inf{R ≥ R0 : R(R−R0)·a(r)/r ≤ −4 for all r ≥ R}` |
//! | `φ` | `exp(−½∫₀^r a⁺)` |
//! | `Φ` | `∫₀^r φ` |
//! | `g` | `1 − ¼U(r∧R1)/U(R1) − ¼V(r∧R1)/V(R1)`, `U = ∫Φ/φ`, `V = ∫1/φ` |
//! | `f` | `∫₀^r φ g` |
//! | `c` | `(2U(R1))⁻¹` |
//! | `ε` | `min{(2V(R1))⁻¹, c·Φ(R1)}` |
//!
//! The invariant measure of the sticky process `dr = a(r)dt + 2·1(r>0)dW` is
//! `π ∝ (2/M)δ₀ + exp(½∫₀^x a)dx` with `M = a(0)`.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::model::{KappaSpec, LkrProfile, RadialDrift};
use crate::quad::{cumulative, integrate, QuadOptions};

/// Relative mass allowed beyond the truncation radius.
pub const TAIL_TOL: f64 = 1e-12;
/// Points in the uniform `φ, Φ, g, f` tables.
pub const TABLE_POINTS: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadiiOptions {
    pub grid: usize,
    /// Overrides `10·(tail_start + M/|tail| + 1)`.
    pub r_max: Option<f64>,
    pub bisect_tol: f64,
}

impl Default for RadiiOptions {
    fn default() -> Self {
        RadiiOptions { grid: 10_000, r_max: None, bisect_tol: 1e-10 }
    }
}

fn default_r_max(a: &RadialDrift) -> f64 {
    10.0 * (a.tail_start() + a.offset / a.tail_value().abs() + 1.0)
}

/// `(R0, R1)` by grid scan and bisection.
pub fn effective_radii(a: &RadialDrift) -> Result<(f64, f64)> {
    effective_radii_with(a, &RadiiOptions::default())
}

pub fn effective_radii_with(a: &RadialDrift, o: &RadiiOptions) -> Result<(f64, f64)> {
    let r_max = o.r_max.unwrap_or_else(|| default_r_max(a));
    let n = o.grid.max(3);
    let grid: Vec<f64> = (0..n).map(|i| r_max * i as f64 / (n - 1) as f64).collect();

    // R0: right end of the last positive stretch.
    let last_pos = grid.iter().rposition(|&r| a.eval(r) > 0.0);
    let r0 = match last_pos {
        None => 0.0,
        Some(j) if j + 1 == n => {
            return Err(Error::Infeasible(format!("drift still positive at r_max = {r_max}")));
        }
        Some(j) => {
            let (mut lo, mut hi) = (grid[j], grid[j + 1]);
            while hi - lo > o.bisect_tol {
                let mid = 0.5 * (lo + hi);
                if a.eval(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            hi
        }
    };

    // sup_{r ≥ R} a(r)/r. Beyond the tail start a(r)/r = M/r + κ∞ is
    // non-increasing, so that part reduces to its left endpoint.
    let ts = a.tail_start();
    let ratio = |r: f64| a.eval(r) / r;
    let mut suffix = vec![f64::NEG_INFINITY; n];
    let mut run = f64::NEG_INFINITY;
    for i in (0..n).rev() {
        if grid[i] > 0.0 && grid[i] <= ts {
            run = run.max(ratio(grid[i]));
        }
        suffix[i] = run;
    }
    let sup_from = |r: f64| -> f64 {
        let mut s = ratio(r);
        if r < ts {
            s = s.max(ratio(ts));
            let i = grid.partition_point(|&g| g <= r);
            if i < n {
                s = s.max(suffix[i]);
            }
        }
        s
    };
    let holds = |r: f64| r > 0.0 && r * (r - r0) * sup_from(r) <= -4.0;

    let start = grid.partition_point(|&g| g <= r0);
    let first = (start..n).find(|&i| holds(grid[i]));
    let r1 = match first {
        None => return Err(Error::Infeasible(format!("no R1 found below r_max = {r_max}"))),
        Some(i) => {
            let (mut lo, mut hi) = (if i == start { r0 } else { grid[i - 1] }, grid[i]);
            if holds(lo) {
                hi = lo;
            }
            while hi - lo > o.bisect_tol {
                let mid = 0.5 * (lo + hi);
                if holds(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            hi
        }
    };
    Ok((r0, r1))
}

/// Piecewise cubic Hermite interpolant of a running integral whose
/// derivative (the integrand) is known at the nodes.
#[derive(Clone, Debug)]
struct Hermite {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Hermite {
    fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let i = self.x.partition_point(|&v| v <= t).clamp(1, n - 1) - 1;
        let h = self.x[i + 1] - self.x[i];
        if h <= 0.0 {
            return self.y[i];
        }
        let s = (t - self.x[i]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[i + 1] + h11 * h * self.d[i + 1]
    }
}

/// Tabulated Lyapunov function and contraction constants.
#[derive(Clone, Debug)]
pub struct LyapunovKit {
    pub r0: f64,
    pub r1: f64,
    pub c: f64,
    pub epsilon: f64,
    pub phi_r0: f64,
    pub table_max: f64,
    pub phi_table: Vec<f64>,
    pub big_phi_table: Vec<f64>,
    pub g_table: Vec<f64>,
    pub f_table: Vec<f64>,
    pub drift_used: RadialDrift,
    big_phi: Hermite,
}

impl LyapunovKit {
    fn step(&self) -> f64 {
        self.table_max / (self.f_table.len() - 1) as f64
    }

    fn lerp(&self, table: &[f64], r: f64) -> f64 {
        let h = self.step();
        let u = r / h;
        let i = (u.floor() as usize).min(table.len() - 2);
        let w = u - i as f64;
        table[i] * (1.0 - w) + table[i + 1] * w
    }

    pub fn grid(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.f_table.len()).map(|i| i as f64 * h).collect()
    }

    /// φ, evaluated exactly.
    pub fn phi(&self, r: f64) -> f64 {
        (-0.5 * self.drift_used.pos_integral(r.max(0.0))).exp()
    }

    pub fn big_phi(&self, r: f64) -> f64 {
        let r = r.max(0.0);
        if r <= self.table_max {
            self.big_phi.eval(r)
        } else {
            self.big_phi.eval(self.table_max) + self.phi_r0 * (r - self.table_max)
        }
    }

    pub fn g(&self, r: f64) -> f64 {
        if r >= self.r1 {
            0.5
        } else {
            self.lerp(&self.g_table, r.max(0.0))
        }
    }

    /// Linear interpolation on the table, affine continuation beyond it.
    pub fn f(&self, r: f64) -> f64 {
        let r = r.max(0.0);
        if r >= self.table_max {
            let last = *self.f_table.last().unwrap();
            last + 0.5 * self.phi_r0 * (r - self.table_max)
        } else {
            self.lerp(&self.f_table, r)
        }
    }
}

/// Options for [`lyapunov_kit_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KitOptions {
    pub radii: RadiiOptions,
    pub quad: QuadOptions,
    pub table_points: usize,
}

impl Default for KitOptions {
    fn default() -> Self {
        KitOptions { radii: RadiiOptions::default(), quad: QuadOptions::default(), table_points: TABLE_POINTS }
    }
}

pub fn lyapunov_kit(a: &RadialDrift) -> Result<LyapunovKit> {
    lyapunov_kit_with(a, &KitOptions::default())
}

pub fn lyapunov_kit_with(a: &RadialDrift, o: &KitOptions) -> Result<LyapunovKit> {
    let (r0, r1) = effective_radii_with(a, &o.radii)?;
    let trunc = if a.offset > 0.0 { truncation_radius(a, r0) } else { 0.0 };
    let table_max = (2.0 * r1).max(trunc).max(1e-6);
    let np = o.table_points.max(3);
    let h = table_max / (np - 1) as f64;
    let uniform: Vec<f64> = (0..np).map(|i| i as f64 * h).collect();

    let kinks = a.kinks(table_max);
    let mut nodes = uniform.clone();
    nodes.extend(kinks.iter().copied());
    nodes.push(r0);
    nodes.push(r1);
    nodes.retain(|&x| x >= 0.0 && x <= table_max);
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();

    let phi = |r: f64| (-0.5 * a.pos_integral(r)).exp();
    let q = &o.quad;
    let phi_n: Vec<f64> = nodes.iter().map(|&r| phi(r)).collect();
    let big = cumulative(phi, &nodes, &kinks, q)?;
    let big_phi = Hermite { x: nodes.clone(), y: big.clone(), d: phi_n.clone() };

    let i1_end = nodes.partition_point(|&x| x <= r1);
    let inner = &nodes[..i1_end];
    let u_n = cumulative(|r| big_phi.eval(r) / phi(r), inner, &kinks, q)?;
    let v_n = cumulative(|r| 1.0 / phi(r), inner, &kinks, q)?;
    let int_u = *u_n.last().unwrap();
    let int_v = *v_n.last().unwrap();
    if !(int_u > 0.0) || !(int_v > 0.0) {
        return Err(Error::Infeasible("degenerate R1 (zero-length integrals)".into()));
    }
    let u = Hermite {
        x: inner.to_vec(),
        y: u_n,
        d: inner.iter().zip(&phi_n).map(|(&r, &p)| big_phi.eval(r) / p).collect(),
    };
    let v = Hermite { x: inner.to_vec(), y: v_n, d: phi_n[..i1_end].iter().map(|p| 1.0 / p).collect() };
    let g = |r: f64| {
        let rr = r.min(r1);
        1.0 - 0.25 * u.eval(rr) / int_u - 0.25 * v.eval(rr) / int_v
    };
    let mut fbreaks = kinks.clone();
    fbreaks.push(r1);
    let f_n = cumulative(|r| phi(r) * g(r), &nodes, &fbreaks, q)?;
    let f_h = Hermite { x: nodes.clone(), y: f_n, d: nodes.iter().zip(&phi_n).map(|(&r, &p)| p * g(r)).collect() };

    let c = 1.0 / (2.0 * int_u);
    let epsilon = (1.0 / (2.0 * int_v)).min(c * big_phi.eval(r1));
    Ok(LyapunovKit {
        r0,
        r1,
        c,
        epsilon,
        phi_r0: phi(r0),
        table_max,
        phi_table: uniform.iter().map(|&r| phi(r)).collect(),
        big_phi_table: uniform.iter().map(|&r| big_phi.eval(r)).collect(),
        g_table: uniform.iter().map(|&r| g(r)).collect(),
        f_table: uniform.iter().map(|&r| f_h.eval(r)).collect(),
        drift_used: a.clone(),
        big_phi,
    })
}

/// Smallest `T` (on a 0.5 grid) past which the unnormalized density carries
/// less than `TAIL_TOL·(2/M)` mass. Uses `∫_T^∞ e^Λ ≤ e^{Λ(T)}/(|a(T)|/2)`,
/// valid since `a` is non-increasing beyond the tail start.
pub fn truncation_radius(a: &RadialDrift, r0: f64) -> f64 {
    let m = a.offset;
    let mut t = a.tail_start().max(r0).max(m / a.tail_value().abs()) + 1.0;
    // Work in logs: Λ(T) + ln(2/|a(T)|) ≤ ln(TAIL_TOL·2/M).
    let target = (TAIL_TOL * 2.0 / m.max(f64::MIN_POSITIVE)).ln();
    loop {
        let lam = 0.5 * a.integral(t);
        let at = a.eval(t);
        if at < 0.0 && lam + (2.0 / at.abs()).ln() <= target {
            return t;
        }
        t += 0.5;
    }
}

/// `π ∝ (2/M)δ₀ + e^{Λ(x)}dx` on `[0, ∞)`, `Λ(x) = ½∫₀^x a`.
#[derive(Clone, Debug)]
pub struct StickyInvariantMeasure {
    pub m: f64,
    pub atom_mass: f64,
    /// Normalizer `2/M + ∫₀^∞ e^Λ` (infinite when `M = 0`).
    pub z: f64,
    pub truncation_radius: f64,
    drift: RadialDrift,
    /// `ln Z`, kept separately to avoid overflow.
    log_z: f64,
    kinks: Vec<f64>,
}

pub fn sticky_invariant_measure(m: f64, kappa: &KappaSpec) -> Result<StickyInvariantMeasure> {
    if !(m >= 0.0) {
        return invalid(format!("M must be >= 0, got {m}"));
    }
    StickyInvariantMeasure::from_drift(&RadialDrift::from_m(m, kappa)?)
}

impl StickyInvariantMeasure {
    pub fn from_drift(a: &RadialDrift) -> Result<Self> {
        Self::from_drift_with(a, None)
    }

    /// As [`from_drift`](Self::from_drift) with a forced truncation radius.
    pub fn from_drift_with(a: &RadialDrift, trunc: Option<f64>) -> Result<Self> {
        let m = a.offset;
        if m == 0.0 {
            return Ok(StickyInvariantMeasure {
                m,
                atom_mass: 1.0,
                z: f64::INFINITY,
                truncation_radius: 0.0,
                drift: a.clone(),
                log_z: f64::INFINITY,
                kinks: vec![],
            });
        }
        let (r0, _) = effective_radii(a)?;
        let t = trunc.unwrap_or_else(|| truncation_radius(a, r0));
        let lam_max = 0.5 * a.integral(r0);
        let kinks = a.kinks(t);
        let j = integrate(|x| (0.5 * a.integral(x) - lam_max).exp(), 0.0, t, &kinks, &QuadOptions::default())?;
        // Z = 2/M + e^{lam_max} j
        let log_j = j.ln() + lam_max;
        let log_atom_w = (2.0 / m).ln();
        let hi = log_j.max(log_atom_w);
        let log_z = hi + ((log_j - hi).exp() + (log_atom_w - hi).exp()).ln();
        let alpha = (log_j - log_atom_w).exp();
        Ok(StickyInvariantMeasure {
            m,
            atom_mass: 1.0 / (1.0 + alpha),
            z: log_z.exp(),
            truncation_radius: t,
            drift: a.clone(),
            log_z,
            kinks,
        })
    }

    pub fn tail_mass(&self) -> f64 {
        if self.m == 0.0 {
            0.0
        } else {
            // 1 − 1/(1+α) = α/(1+α), computed without cancellation.
            let alpha = self.alpha();
            alpha / (1.0 + alpha)
        }
    }

    /// `α = (M/2)∫₀^∞ e^Λ`, so that the atom is `1/(1+α)`.
    pub fn alpha(&self) -> f64 {
        1.0 / self.atom_mass - 1.0
    }

    pub fn log_density(&self, x: f64) -> f64 {
        if self.m == 0.0 || x <= 0.0 {
            return f64::NEG_INFINITY;
        }
        0.5 * self.drift.integral(x) - self.log_z
    }

    pub fn density(&self, x: f64) -> f64 {
        self.log_density(x).exp()
    }

    /// `∫ h dπ`, the atom contributing `h(0)·atom_mass`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, h: F) -> Result<f64> {
        let atom = self.atom_mass * h(0.0);
        if self.m == 0.0 {
            return Ok(atom);
        }
        let cont =
            integrate(|x| h(x) * self.density(x), 0.0, self.truncation_radius, &self.kinks, &QuadOptions::default())?;
        Ok(atom + cont)
    }

    /// Mass of the density on `(0, x]`.
    pub fn cdf_continuous(&self, x: f64) -> Result<f64> {
        if self.m == 0.0 {
            return Ok(0.0);
        }
        integrate(|y| self.density(y), 0.0, x.min(self.truncation_radius), &self.kinks, &QuadOptions::default())
    }
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return invalid(format!("t must be positive and finite, got {t}"));
    }
    Ok(())
}

/// `(1/ε)·c/(e^{ct}−1)` factor.
fn decay_factor(c: f64, eps: f64, t: f64) -> f64 {
    c / (eps * (c * t).exp_m1())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CouplingBound {
    /// Upper bound on `P[X_t ≠ Y_t]`.
    pub upper: f64,
    /// Lower bound on `P[X_t = Y_t]` for coinciding starts.
    pub meet_lower: Option<f64>,
}

pub fn coupling_upper_bound(kit: &LyapunovKit, pi: &StickyInvariantMeasure, t: f64, r0: f64) -> Result<CouplingBound> {
    check_t(t)?;
    let upper = (decay_factor(kit.c, kit.epsilon, t) * r0 + pi.tail_mass()).min(1.0);
    Ok(CouplingBound { upper, meet_lower: (r0 == 0.0).then_some(pi.atom_mass) })
}

/// Same shape with `(c̃, ε̃)` from the `M = 0` drift `κ(r)·r`.
pub fn modified_upper_bound(kappa: &KappaSpec, pi: &StickyInvariantMeasure, t: f64, r0: f64) -> Result<f64> {
    check_t(t)?;
    let kit = lyapunov_kit(&RadialDrift::from_m(0.0, kappa)?)?;
    Ok(modified_upper_bound_with(&kit, pi, t, r0))
}

/// Variant reusing a prebuilt `M = 0` kit.
pub fn modified_upper_bound_with(kit0: &LyapunovKit, pi: &StickyInvariantMeasure, t: f64, r0: f64) -> f64 {
    (decay_factor(kit0.c, kit0.epsilon, t) * r0 + pi.tail_mass()).min(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AlphaBound {
    pub alpha_bound: f64,
    pub tail_mass_bound: f64,
    /// `true` when `M ≤ K·R`.
    pub small_m_branch: bool,
}

/// Closed-form bound on `α = (M/2)∫₀^∞ exp(½∫₀^x(M+κy)dy)dx` for the step κ.
pub fn alpha_closed_form(p: &LkrProfile, m: f64) -> AlphaBound {
    let (l, k, r) = (p.l, p.k, p.r_script);
    let small = || {
        ((std::f64::consts::PI * std::f64::consts::E / k).sqrt() + 2.0 * r / (4.0f64).max(l * r * r + 2.0 * m * r))
            * m
            * (m * r / 2.0 + l * r * r / 4.0).exp()
    };
    let large = || {
        ((std::f64::consts::PI / k).sqrt() + 2.0 * r / (4.0f64).max(2.0 * m * r + l * r * r))
            * m
            * (m * m / (4.0 * k) + (l + k) * r * r / 4.0).exp()
    };
    let kr = k * r;
    let (alpha, small_branch) = if m < kr {
        (small(), true)
    } else if m > kr {
        (large(), false)
    } else {
        (small().min(large()), true)
    };
    AlphaBound { alpha_bound: alpha, tail_mass_bound: alpha / (1.0 + alpha), small_m_branch: small_branch }
}

/// Upper bound on `1/c̃` for the step κ, by case on `L` and `L R²`.
pub fn ctilde_inverse_bound(p: &LkrProfile) -> f64 {
    let (l, k, r) = (p.l, p.k, p.r_script);
    if l == 0.0 {
        4.0 * (r * r).max(1.0 / k)
    } else if l * r * r <= 4.0 {
        3.0 * std::f64::consts::E * (r * r).max(4.0 / k)
    } else {
        8.0 * std::f64::consts::PI.sqrt() * l.powf(-0.5) * (1.0 / l + 1.0 / k) / r * (l * r * r / 4.0).exp()
            + 16.0 / (k * k * r * r)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MomentBounds {
    pub ef_bound: f64,
    pub er_bound: f64,
    pub ppos_bound: f64,
}

pub fn moment_bounds(kit: &LyapunovKit, pi: &StickyInvariantMeasure, t: f64, ef_r0: f64) -> Result<MomentBounds> {
    check_t(t)?;
    let int_f = pi.integrate(|x| kit.f(x))?;
    let ef = (-kit.c * t).exp() * ef_r0 + int_f;
    Ok(MomentBounds {
        ef_bound: ef,
        er_bound: 2.0 / kit.phi_r0 * ef,
        ppos_bound: decay_factor(kit.c, kit.epsilon, t) * ef_r0 + pi.tail_mass(),
    })
}

/// Offset `α(t, 0)` as a function of time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OffsetSchedule {
    Constant {
        value: f64,
    },
    /// `amplitude·e^{−rate·t}`.
    ExpDecay {
        amplitude: f64,
        rate: f64,
    },
}

impl OffsetSchedule {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            OffsetSchedule::Constant { value } => value,
            OffsetSchedule::ExpDecay { amplitude, rate } => amplitude * (-rate * t).exp(),
        }
    }
}

/// `α(t, x) = offset(t) + κ(x)·x` with majorant `a ≥ α(0, ·)`.
#[derive(Clone, Debug)]
pub struct TimeDependentRadialDrift {
    pub schedule: OffsetSchedule,
    pub kappa: KappaSpec,
    /// Defaults to `α(0, ·)`.
    pub majorant: Option<RadialDrift>,
}

impl TimeDependentRadialDrift {
    pub fn new(schedule: OffsetSchedule, kappa: KappaSpec, majorant: Option<RadialDrift>) -> Result<Self> {
        let d = TimeDependentRadialDrift { schedule, kappa, majorant };
        d.validate()?;
        Ok(d)
    }

    pub fn alpha(&self, t: f64, x: f64) -> f64 {
        self.schedule.at(t) + self.kappa.eval(x) * x
    }

    pub fn at_time(&self, s: f64) -> Result<RadialDrift> {
        RadialDrift::from_m(self.schedule.at(s), &self.kappa)
    }

    pub fn majorant_drift(&self) -> Result<RadialDrift> {
        match &self.majorant {
            Some(a) => Ok(a.clone()),
            None => self.at_time(0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.kappa.validate()?;
        match self.schedule {
            OffsetSchedule::Constant { value } if value >= 0.0 => {}
            OffsetSchedule::ExpDecay { amplitude, rate } if amplitude >= 0.0 && rate >= 0.0 => {}
            s => return invalid(format!("offset schedule must be nonneg and non-increasing: {s:?}")),
        }
        if let Some(a) = &self.majorant {
            let top = self.kappa.tail_start.max(a.tail_start()) + 10.0;
            for i in 0..=1000 {
                let x = top * i as f64 / 1000.0;
                if a.eval(x) < self.alpha(0.0, x) - 1e-12 {
                    return invalid(format!("majorant below alpha(0, {x})"));
                }
            }
            if !(a.tail_value() < 0.0) {
                return invalid("majorant must have negative limsup a(r)/r");
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TimeDependentBounds {
    pub ef_bound: f64,
    pub ppos_bound: f64,
    pub efs_bound: f64,
    pub ppos_bound_s: f64,
    pub pi_s_tail: f64,
}

/// The two bound pairs for the time-inhomogeneous sticky process, split at `s`.
pub fn time_dependent_bounds(
    drift: &TimeDependentRadialDrift,
    s: f64,
    t: f64,
    ef_r0: f64,
) -> Result<TimeDependentBounds> {
    if !(s >= 0.0) || !(t > s) {
        return invalid(format!("need 0 <= s < t, got s = {s}, t = {t}"));
    }
    let kit = lyapunov_kit(&drift.majorant_drift()?)?;
    let a_s = drift.at_time(s)?;
    let kit_s = lyapunov_kit(&a_s)?;
    let pi0 = StickyInvariantMeasure::from_drift(&drift.at_time(0.0)?)?;
    let pi_s = StickyInvariantMeasure::from_drift(&a_s)?;
    time_dependent_bounds_with(&kit, &kit_s, &pi0, &pi_s, s, t, ef_r0)
}

fn time_dependent_bounds_with(
    kit: &LyapunovKit,
    kit_s: &LyapunovKit,
    pi0: &StickyInvariantMeasure,
    pi_s: &StickyInvariantMeasure,
    s: f64,
    t: f64,
    ef_r0: f64,
) -> Result<TimeDependentBounds> {
    let int_f0 = pi0.integrate(|x| kit.f(x))?;
    let int_fs = pi_s.integrate(|x| kit.f(x))?;
    let int_fs_s = pi_s.integrate(|x| kit_s.f(x))?;
    let carried = (-kit.c * s).exp() * ef_r0 + int_f0;
    let tail = pi_s.tail_mass();
    let dt = t - s;
    Ok(TimeDependentBounds {
        ef_bound: (-kit.c * t).exp() * ef_r0 + (-kit.c * dt).exp() * int_f0 + int_fs,
        ppos_bound: decay_factor(kit.c, kit.epsilon, dt) * carried + tail,
        efs_bound: 2.0 / kit.phi_r0 * (-kit_s.c * dt).exp() * carried + int_fs_s,
        ppos_bound_s: 2.0 / kit.phi_r0 * decay_factor(kit_s.c, kit_s.epsilon, dt) * carried + tail,
        pi_s_tail: tail,
    })
}

/// Parameters of the mean-field bound curve.
#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct MkvBoundParams {
    pub l_theta: f64,
    pub a: f64,
    pub lambda: f64,
    pub tau: f64,
    pub r0: f64,
    pub kappa: KappaSpec,
}

/// TV bound curve with `α(t,x) = |τ|·L·A·e^{−λt}·r0 + κ(x)x`, split at `s = t/2`.
pub fn mkv_bound_curve(p: &MkvBoundParams, t_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    if !(p.lambda > 0.0) {
        return invalid("lambda must be > 0");
    }
    let amp = p.tau.abs() * p.l_theta * p.a * p.r0;
    let drift = TimeDependentRadialDrift::new(
        OffsetSchedule::ExpDecay { amplitude: amp, rate: p.lambda },
        p.kappa.clone(),
        None,
    )?;
    let kit = lyapunov_kit(&drift.majorant_drift()?)?;
    let pi0 = StickyInvariantMeasure::from_drift(&drift.at_time(0.0)?)?;
    let ef_r0 = kit.f(p.r0);
    let mut out = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        if !(t > 0.0) {
            out.push((t, 1.0));
            continue;
        }
        let s = 0.5 * t;
        let a_s = drift.at_time(s)?;
        let pi_s = StickyInvariantMeasure::from_drift(&a_s)?;
        // Only the first pair enters the TV bound; kit_s is not needed for it.
        let b = time_dependent_bounds_with(&kit, &kit, &pi0, &pi_s, s, t, ef_r0)?;
        out.push((t, b.ppos_bound.min(1.0)));
    }
    Ok(out)
}
