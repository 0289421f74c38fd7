//! Worked examples with closed forms: Ornstein–Uhlenbeck processes with
//! shifted means, confined Brownian motion, and a mean-field particle system.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::bounds::{alpha_closed_form, mkv_bound_curve, MkvBoundParams};
use crate::engine::SimConfig;
use crate::error::{invalid, Result};
use crate::estimators::{exponential_envelope, log_linear_fit};
use crate::model::{norm, KappaSpec, LkrProfile};
use crate::quad::{integrate, QuadOptions};
use crate::rng::IncrementStream;

/// `Φ₁(r) = √(2/π)∫₀^r e^{−x²/2}dx = erf(r/√2)`.
pub fn phi1(r: f64) -> f64 {
    erf(r / std::f64::consts::SQRT_2)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OuCase {
    pub m: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl OuCase {
    fn check(&self) -> Result<()> {
        if self.m.is_empty() || self.x.len() != self.m.len() || self.y.len() != self.m.len() {
            return invalid("OU case needs m, x, y of one common positive dimension");
        }
        Ok(())
    }
}

/// Exact total variation distance between the time-`t` laws.
pub fn ou_exact_tv(case: &OuCase, t: f64) -> Result<f64> {
    case.check()?;
    if !(t > 0.0) {
        return invalid(format!("t must be > 0, got {t}"));
    }
    let e = (-0.5 * t).exp();
    let v: Vec<f64> = (0..case.m.len()).map(|i| case.m[i] + e * (case.y[i] - case.m[i] - case.x[i])).collect();
    Ok(phi1(norm(&v) / (2.0 * (-(-t).exp_m1()).sqrt())))
}

/// `π[(0,∞)]` for the OU pair with `M = m_norm/2`.
pub fn ou_pi_tail(m_norm: f64) -> f64 {
    let s = (std::f64::consts::PI / 8.0).sqrt() * m_norm * (m_norm * m_norm / 8.0).exp() * (1.0 + phi1(m_norm / 2.0));
    s / (1.0 + s)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfinedBmCase {
    pub radius: f64,
    pub k: f64,
    pub m: f64,
}

impl ConfinedBmCase {
    fn check(&self) -> Result<()> {
        if !(self.radius > 0.0) || !(self.k > 0.0) || !(self.m >= 0.0) {
            return invalid("confined BM case needs R > 0, k > 0, m >= 0");
        }
        Ok(())
    }

    /// `∫ exp(−k·max(|x|−R, 0)²/2) dx`.
    pub fn z_f(&self) -> f64 {
        2.0 * self.radius + (2.0 * std::f64::consts::PI / self.k).sqrt()
    }

    /// `∫ e^{mx}·exp(−k·max(|x|−R, 0)²/2) dx`, by quadrature.
    pub fn z_g(&self) -> Result<f64> {
        let (r, k, m) = (self.radius, self.k, self.m);
        let f = |x: f64| {
            let s = (x.abs() - r).max(0.0);
            (m * x - 0.5 * k * s * s).exp()
        };
        // exponent ≤ mR + m²/(2k) − k(s − m/k)²/2 beyond R
        let reach = m / k + (2.0 * 60.0 / k).sqrt();
        integrate(f, -r - reach, r + reach, &[-r, r], &QuadOptions::default())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CbmLowerBounds {
    pub bound1: f64,
    /// Only when `R√k ≤ 1`.
    pub bound2: Option<f64>,
    pub z_f: f64,
    pub z_g: f64,
    pub z_g_ge_z_f: bool,
}

/// Lower bounds on the total variation distance of the two invariant laws.
pub fn cbm_tv_lower_bounds(case: &ConfinedBmCase) -> Result<CbmLowerBounds> {
    case.check()?;
    let (r, k, m) = (case.radius, case.k, case.m);
    let x = m * r;
    let bound1 = if x == 0.0 { 0.0 } else { ((-x).exp_m1() + x) / x };
    let bound2 = (r * k.sqrt() <= 1.0).then(|| {
        (-(-x + m * m / (2.0 * k)).exp_m1() + (2.0 / (std::f64::consts::PI * k)).sqrt() * m * (-x).exp()) / 4.0
    });
    let z_f = case.z_f();
    let z_g = case.z_g()?;
    Ok(CbmLowerBounds { bound1, bound2, z_f, z_g, z_g_ge_z_f: z_g >= z_f * (1.0 - 1e-12) })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CbmSummary {
    pub case: ConfinedBmCase,
    /// `((3e/4)R + (3πe³/2)^{1/2}k^{−1/2})·m` capped at 1, when `m ≤ kR` and `mR ≤ 4/3`.
    pub tv8: Option<f64>,
    pub closed_form_alpha: f64,
    pub closed_form_tail_mass: f64,
    pub closed_form_small_m_branch: bool,
    pub lower: CbmLowerBounds,
    pub upper_used: f64,
    pub consistent: bool,
}

pub fn cbm_summary(case: &ConfinedBmCase) -> Result<CbmSummary> {
    let lower = cbm_tv_lower_bounds(case)?;
    let (r, k, m) = (case.radius, case.k, case.m);
    let e = std::f64::consts::E;
    let tv8 = (m <= k * r && m * r <= 4.0 / 3.0)
        .then(|| ((0.75 * e * r + (1.5 * std::f64::consts::PI * e.powi(3)).sqrt() / k.sqrt()) * m).min(1.0));
    let a = alpha_closed_form(&LkrProfile::new(0.0, k / 6.0, 3.0 * r)?, m / 2.0);
    let upper_used = tv8.unwrap_or(a.tail_mass_bound);
    let consistent = upper_used >= lower.bound1 && lower.bound2.is_none_or(|b| upper_used >= b) && lower.z_g_ge_z_f;
    Ok(CbmSummary {
        case: *case,
        tv8,
        closed_form_alpha: a.alpha_bound,
        closed_form_tail_mass: a.tail_mass_bound,
        closed_form_small_m_branch: a.small_m_branch,
        lower,
        upper_used,
        consistent,
    })
}

/// Interaction kernel `ϑ(x, y)`, Lipschitz constant 1 in each case.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InteractionKernel {
    /// `tanh(y − x)` componentwise.
    Tanh,
    /// `y − x`.
    Linear,
}

/// Mean-field system `dX = −γX dt + τ∫ϑ(X, y)μ_t(dy)dt + dB`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MkvCase {
    /// γ in `η(x) = −γx`, so κ ≡ −γ.
    pub confinement: f64,
    pub kernel: InteractionKernel,
    pub tau: f64,
    #[serde(default = "unit")]
    pub l_theta: f64,
    /// Decay constants of the Wasserstein estimate; fitted when absent.
    #[serde(default)]
    pub a: Option<f64>,
    #[serde(default)]
    pub lambda: Option<f64>,
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
    pub particles: usize,
}

fn unit() -> f64 {
    1.0
}

impl MkvCase {
    pub fn kappa(&self) -> Result<KappaSpec> {
        KappaSpec::constant(-self.confinement)
    }

    /// `|τ| ≤ 0.1·|κ tail|/L`, the engineering stand-in for the unknown τ₀.
    pub fn tau_small(&self) -> bool {
        self.tau.abs() <= 0.1 * self.confinement / self.l_theta
    }

    fn check(&self, cfg: &SimConfig) -> Result<()> {
        if self.particles < 2 {
            return invalid("need at least 2 particles");
        }
        if !(self.confinement > 0.0) || !(self.l_theta > 0.0) {
            return invalid("confinement and l_theta must be > 0");
        }
        if self.x0.len() != cfg.dimension || self.y0.len() != cfg.dimension {
            return invalid("x0, y0 must match the configured dimension");
        }
        if let Some(l) = self.lambda {
            if !(l > 0.0) {
                return invalid("lambda must be > 0");
            }
        }
        cfg.validate_sticky()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MkvResult {
    pub times: Vec<f64>,
    /// Mean over replicas of the empirical W1 between the two clouds.
    pub w1: Vec<f64>,
    pub w1_exact: bool,
    /// Slope of `ln W1` on the second half of the run.
    pub fitted_rate: Option<f64>,
    pub a_used: f64,
    pub lambda_used: f64,
    pub constants_fitted: bool,
    pub bound: Vec<(f64, f64)>,
    /// `(B, ρ)` with `bound ≤ B·e^{−ρt}` on the second half.
    pub bound_envelope: Option<(f64, f64)>,
    pub tau_small: bool,
    pub diverged: usize,
}

const SLICES: usize = 32;

fn w1_sorted(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

fn cloud_w1(x: &[f64], y: &[f64], d: usize, dirs: &[Vec<f64>]) -> f64 {
    if d == 1 {
        return w1_sorted(x.to_vec(), y.to_vec());
    }
    let n = x.len() / d;
    let proj = |c: &[f64], u: &[f64]| (0..n).map(|i| (0..d).map(|k| c[i * d + k] * u[k]).sum()).collect::<Vec<f64>>();
    dirs.iter().map(|u| w1_sorted(proj(x, u), proj(y, u))).sum::<f64>() / dirs.len() as f64
}

fn mkv_drift(case: &MkvCase, c: &[f64], d: usize, out: &mut [f64]) {
    let n = c.len() / d;
    let scale = case.tau / n as f64;
    match case.kernel {
        InteractionKernel::Linear => {
            let mut mean = vec![0.0; d];
            for i in 0..n {
                for k in 0..d {
                    mean[k] += c[i * d + k];
                }
            }
            mean.iter_mut().for_each(|v| *v /= n as f64);
            for i in 0..n {
                for k in 0..d {
                    let x = c[i * d + k];
                    out[i * d + k] = -case.confinement * x + case.tau * (mean[k] - x);
                }
            }
        }
        InteractionKernel::Tanh => {
            for i in 0..n {
                for k in 0..d {
                    let x = c[i * d + k];
                    let mut s = 0.0;
                    for j in 0..n {
                        s += (c[j * d + k] - x).tanh();
                    }
                    out[i * d + k] = -case.confinement * x + scale * s;
                }
            }
        }
    }
}

fn mkv_replica(case: &MkvCase, cfg: &SimConfig, idx: usize, dirs: &[Vec<f64>]) -> Option<Vec<f64>> {
    let d = cfg.dimension;
    let n = case.particles;
    let h = cfg.step_h;
    let sq = h.sqrt();
    let mut rng = IncrementStream::new(cfg.seed, idx as u64);
    let mut x: Vec<f64> = (0..n).flat_map(|_| case.x0.iter().copied()).collect();
    let mut y: Vec<f64> = (0..n).flat_map(|_| case.y0.iter().copied()).collect();
    let mut bx = vec![0.0; n * d];
    let mut by = vec![0.0; n * d];
    let mut out = vec![cloud_w1(&x, &y, d, dirs)];
    for step in 0..cfg.n_steps() {
        mkv_drift(case, &x, d, &mut bx);
        mkv_drift(case, &y, d, &mut by);
        for i in 0..n * d {
            let db = rng.normal() * sq;
            x[i] += bx[i] * h + db;
            y[i] += by[i] * h + db;
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return None;
        }
        let i = step + 1;
        if i % cfg.record_stride == 0 || i == cfg.n_steps() {
            out.push(cloud_w1(&x, &y, d, dirs));
        }
    }
    Some(out)
}

/// Runs `cfg.paths` replicas of the two particle systems (synchronous noise),
/// records their W1 distance, and assembles the matching TV bound curve.
pub fn mkv_simulate(case: &MkvCase, cfg: &SimConfig) -> Result<MkvResult> {
    case.check(cfg)?;
    let d = cfg.dimension;
    let dirs: Vec<Vec<f64>> = if d == 1 {
        vec![]
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(u64::MAX);
        (0..SLICES)
            .map(|_| {
                let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
                let l = norm(&v);
                v.into_iter().map(|c| c / l).collect()
            })
            .collect()
    };
    let runs: Vec<Option<Vec<f64>>> =
        (0..cfg.paths).into_par_iter().map(|i| mkv_replica(case, cfg, i, &dirs)).collect();
    let diverged = runs.iter().filter(|r| r.is_none()).count();
    let ok: Vec<Vec<f64>> = runs.into_iter().flatten().collect();
    if ok.is_empty() {
        return Err(crate::Error::Infeasible("every particle replica diverged".into()));
    }
    let times = cfg.record_times();
    let w1: Vec<f64> = (0..times.len()).map(|j| ok.iter().map(|c| c[j]).sum::<f64>() / ok.len() as f64).collect();
    let fitted_rate = log_linear_fit(&times, &w1, 0.5).map(|f| f.0);

    let r0 = norm(&case.x0.iter().zip(&case.y0).map(|(a, b)| a - b).collect::<Vec<_>>());
    let (a_used, lambda_used, constants_fitted) = match (case.a, case.lambda) {
        (Some(a), Some(l)) => (a, l, false),
        _ if r0 == 0.0 => (case.a.unwrap_or(0.0), case.lambda.unwrap_or(1.0), true),
        _ => {
            let rate = fitted_rate
                .filter(|&s| s < 0.0)
                .ok_or_else(|| crate::Error::Infeasible("W1 curve does not decay; cannot fit A and lambda".into()))?;
            let lam = case.lambda.unwrap_or(-rate);
            let a = case
                .a
                .unwrap_or_else(|| times.iter().zip(&w1).map(|(&t, &w)| w * (lam * t).exp() / r0).fold(0.0, f64::max));
            (a, lam, true)
        }
    };
    let params = MkvBoundParams {
        l_theta: case.l_theta,
        a: a_used,
        lambda: lambda_used,
        tau: case.tau,
        r0,
        kappa: case.kappa()?,
    };
    let bound = mkv_bound_curve(&params, &times)?;
    let (bt, bv): (Vec<f64>, Vec<f64>) = bound.iter().copied().unzip();
    Ok(MkvResult {
        times,
        w1,
        w1_exact: d == 1,
        fitted_rate,
        a_used,
        lambda_used,
        constants_fitted,
        bound_envelope: exponential_envelope(&bt, &bv, 0.5),
        bound,
        tau_small: case.tau_small(),
        diverged,
    })
}
