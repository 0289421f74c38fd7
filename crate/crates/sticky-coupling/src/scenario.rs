//! Scenario files and the artifacts written for a run.
//!
//! A scenario is a TOML document with a model, a list of analytic bound
//! requests and a list of simulation requests. Running it produces
//! `manifest.json`, `bounds.csv`, `estimates.csv`, `report.json` and one
//! `curves*.csv` per case that has a curve. The manifest embeds the fully
//! resolved scenario, so `run manifest.json` repeats a run bit for bit.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bounds::{
    alpha_closed_form, ctilde_inverse_bound, lyapunov_kit, mkv_bound_curve, modified_upper_bound_with, moment_bounds,
    sticky_invariant_measure, LyapunovKit, MkvBoundParams, StickyInvariantMeasure,
};
use crate::casestudies::{cbm_summary, mkv_simulate, ou_exact_tv, ou_pi_tail, ConfinedBmCase, MkvCase, OuCase};
use crate::engine::{simulate_delta_coupling, simulate_sticky_1d, SimConfig, StickyDrift};
use crate::error::{invalid, Error, Result};
use crate::estimators::{
    comparison_violations, default_slack, ergodic_occupation, histogram_gap, lyapunov_moment, meet_probability,
    radius_moment, stickiness_identity_check,
};
use crate::model::{builtin_models, norm, DriftKind, DriftPair, ModelParams, RadialDrift};
use crate::rng::RNG_ALGORITHM;

/// Meeting tolerances, in units of delta, reported next to the chosen one.
const MEET_TOL_SWEEP: [f64; 5] = [1.0, 2.0, 5.0, 10.0, 20.0];

pub const COUPLING_ESTIMATORS: &[&str] =
    &["meet_probability", "comparison_violations", "radius_moment", "lyapunov_moment"];
pub const STICKY_ESTIMATORS: &[&str] = &["occupation", "stickiness", "moments"];

/// Bundled scenarios: name, one-line description, TOML source.
pub const BUILTIN_SCENARIOS: &[(&str, &str, &str)] = &[
    (
        "ou-demo",
        "OU pair with shifted mean: exact TV vs coupling Monte Carlo vs the M=0 contraction bound",
        include_str!("../scenarios/ou-demo.toml"),
    ),
    (
        "cbm-demo",
        "confined Brownian motion: closed-form TV upper bound against the two invariant-law lower bounds",
        include_str!("../scenarios/cbm-demo.toml"),
    ),
    (
        "sticky-ergodic",
        "one-dimensional sticky diffusion: occupation of 0, stickiness identity and moment bounds",
        include_str!("../scenarios/sticky-ergodic.toml"),
    ),
    (
        "mkv-demo",
        "mean-field particles with tanh interaction: W1 decay and the time-dependent TV bound",
        include_str!("../scenarios/mkv-demo.toml"),
    ),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    /// `ou`, `confined_bm` or `custom`.
    pub builtin: String,
    #[serde(default)]
    pub params: ModelParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundRequest {
    /// `R0, R1, c, ε` for the model drift and `c̃, ε̃` for its `M = 0` part.
    Kit,
    /// Atom, tail mass and normaliser of π.
    InvariantMeasure,
    CouplingBound {
        times: Vec<f64>,
        r0: f64,
    },
    /// Needs the `ou` model.
    OuExactTv {
        x: Vec<f64>,
        y: Vec<f64>,
        times: Vec<f64>,
    },
    /// Needs a step profile (`confined_bm`).
    AlphaClosedForm,
    CtildeInverseBound,
    /// Needs `confined_bm`; one row per `m`.
    CbmSummary {
        m: Vec<f64>,
    },
    MomentBounds {
        times: Vec<f64>,
        r0: f64,
    },
    MkvBoundCurve {
        params: MkvBoundParams,
        times: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SimRequest {
    Coupling {
        config: SimConfig,
        x: Vec<f64>,
        y: Vec<f64>,
        /// Meeting tolerance; `10δ` when absent.
        #[serde(default)]
        meet_tol: Option<f64>,
        estimators: Vec<String>,
    },
    Sticky {
        config: SimConfig,
        r0: f64,
        estimators: Vec<String>,
        #[serde(default = "default_bins")]
        bins: usize,
        #[serde(default = "default_upper")]
        upper: f64,
    },
    Mkv {
        config: SimConfig,
        case: MkvCase,
    },
}

fn default_bins() -> usize {
    40
}

fn default_upper() -> f64 {
    12.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub seed: u64,
    #[serde(default)]
    pub model: Option<ModelSpec>,
    #[serde(default)]
    pub bounds: Vec<BoundRequest>,
    #[serde(default)]
    pub simulations: Vec<SimRequest>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Full,
    /// Analytic requests only.
    BoundsOnly,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let sc: Scenario = toml::from_str(text).map_err(|e| Error::InvalidInput(format!("scenario: {e}")))?;
        sc.validate()?;
        Ok(sc)
    }

    /// Reads a scenario file, a `manifest.json` written by an earlier run, or
    /// the name of a bundled scenario.
    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            if let Some(s) = builtin_scenario(&path.to_string_lossy()) {
                return Ok(s);
            }
            return Err(Error::Io(format!("{}: no such file", path.display())));
        }
        let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            let v: Value = serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("manifest: {e}")))?;
            let sc = v
                .get("scenario")
                .cloned()
                .ok_or_else(|| Error::InvalidInput("manifest has no `scenario` entry".into()))?;
            let sc: Scenario =
                serde_json::from_value(sc).map_err(|e| Error::InvalidInput(format!("manifest scenario: {e}")))?;
            sc.validate()?;
            return Ok(sc);
        }
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return invalid("scenario name is empty");
        }
        let pair = self.model.as_ref().map(|m| builtin_models(&m.builtin, &m.params)).transpose()?;
        let need = |what: &str| -> Result<&DriftPair> {
            pair.as_ref().ok_or_else(|| Error::InvalidInput(format!("`{what}` needs a [model] section")))
        };
        for b in &self.bounds {
            match b {
                BoundRequest::Kit
                | BoundRequest::InvariantMeasure
                | BoundRequest::CouplingBound { .. }
                | BoundRequest::MomentBounds { .. } => {
                    need("bounds")?;
                }
                BoundRequest::OuExactTv { .. } => {
                    if !matches!(need("ou_exact_tv")?.kind, DriftKind::Ou { .. }) {
                        return invalid("ou_exact_tv needs the ou model");
                    }
                }
                BoundRequest::AlphaClosedForm | BoundRequest::CtildeInverseBound | BoundRequest::CbmSummary { .. } => {
                    if need("step-profile bounds")?.lkr.is_none() {
                        return invalid("this bound needs a step-profile model (confined_bm)");
                    }
                }
                BoundRequest::MkvBoundCurve { .. } => {}
            }
            for &t in times_of(b) {
                if !(t > 0.0) || !t.is_finite() {
                    return invalid(format!("bound times must be positive and finite, got {t}"));
                }
            }
        }
        for s in &self.simulations {
            match s {
                SimRequest::Coupling { config, x, y, meet_tol, estimators } => {
                    config.validate_coupling()?;
                    let p = need("coupling")?;
                    if x.len() != p.dimension || y.len() != p.dimension || config.dimension != p.dimension {
                        return invalid("coupling: x, y and config.dimension must match the model dimension");
                    }
                    if let Some(t) = meet_tol {
                        if !(*t >= config.delta) {
                            return invalid("meet_tol must be at least delta");
                        }
                    }
                    known(estimators, COUPLING_ESTIMATORS)?;
                }
                SimRequest::Sticky { config, r0, estimators, bins, upper } => {
                    config.validate_sticky()?;
                    need("sticky")?;
                    if !(*r0 >= 0.0) || !r0.is_finite() || *bins == 0 || !(*upper > 0.0) {
                        return invalid("sticky: need r0 >= 0, bins > 0, upper > 0");
                    }
                    known(estimators, STICKY_ESTIMATORS)?;
                }
                SimRequest::Mkv { config, .. } => config.validate_sticky()?,
            }
        }
        Ok(())
    }

    fn pair(&self) -> Result<DriftPair> {
        let m = self.model.as_ref().ok_or_else(|| Error::InvalidInput("missing [model] section".into()))?;
        builtin_models(&m.builtin, &m.params)
    }

    /// The scenario as it will actually run: simulation seeds derived from the
    /// scenario seed.
    pub fn resolved(&self) -> Scenario {
        let mut sc = self.clone();
        for (i, s) in sc.simulations.iter_mut().enumerate() {
            let cfg = match s {
                SimRequest::Coupling { config, .. }
                | SimRequest::Sticky { config, .. }
                | SimRequest::Mkv { config, .. } => config,
            };
            cfg.seed = self.seed.wrapping_add(i as u64);
        }
        sc
    }
}

fn times_of(b: &BoundRequest) -> &[f64] {
    match b {
        BoundRequest::CouplingBound { times, .. }
        | BoundRequest::OuExactTv { times, .. }
        | BoundRequest::MomentBounds { times, .. }
        | BoundRequest::MkvBoundCurve { times, .. } => times,
        _ => &[],
    }
}

fn known(names: &[String], allowed: &[&str]) -> Result<()> {
    for n in names {
        if !allowed.contains(&n.as_str()) {
            return invalid(format!("unknown estimator `{n}` (expected one of {})", allowed.join(", ")));
        }
    }
    Ok(())
}

pub fn builtin_scenario(name: &str) -> Option<Scenario> {
    BUILTIN_SCENARIOS.iter().find(|s| s.0 == name).map(|s| Scenario::from_toml(s.2).expect("bundled scenario parses"))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub case: String,
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    pub case: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Option<f64>>>,
}

/// `(case, quantity, argument, value)`.
pub type BoundRow = (String, String, Option<f64>, f64);
/// `(case, estimator, t, value, std_error, samples)`.
pub type EstimateRow = (String, String, Option<f64>, f64, Option<f64>, Option<usize>);

/// Everything a run computes, before it is written out.
#[derive(Clone, Debug, Default)]
pub struct RunReport {
    pub bounds: Vec<BoundRow>,
    pub estimates: Vec<EstimateRow>,
    pub curves: Vec<Curve>,
    pub cases: Vec<Value>,
    pub checks: Vec<Check>,
}

impl RunReport {
    pub fn failed_checks(&self) -> usize {
        self.checks.iter().filter(|c| !c.pass).count()
    }

    fn bound(&mut self, case: &str, q: &str, arg: Option<f64>, v: f64) {
        self.bounds.push((case.to_string(), q.to_string(), arg, v));
    }

    fn estimate(&mut self, case: &str, q: &str, t: Option<f64>, v: f64, se: Option<f64>, n: Option<usize>) {
        self.estimates.push((case.to_string(), q.to_string(), t, v, se, n));
    }

    fn check(&mut self, case: &str, name: &str, pass: bool, detail: String) {
        self.checks.push(Check { case: case.to_string(), name: name.to_string(), pass, detail });
    }
}

/// Runs a (resolved) scenario in memory.
pub fn execute(sc: &Scenario, mode: Mode) -> Result<RunReport> {
    let sc = sc.resolved();
    sc.validate()?;
    let mut rep = RunReport::default();
    for (i, b) in sc.bounds.iter().enumerate() {
        run_bound(&sc, b, &format!("bound{}", i + 1), &mut rep)?;
    }
    if mode == Mode::Full {
        for (i, s) in sc.simulations.iter().enumerate() {
            run_sim(&sc, s, &format!("sim{}", i + 1), &mut rep)?;
        }
    }
    Ok(rep)
}

fn zero_kit(a: &RadialDrift) -> Result<LyapunovKit> {
    lyapunov_kit(&RadialDrift::from_m(0.0, &a.kappa)?)
}

fn run_bound(sc: &Scenario, b: &BoundRequest, case: &str, rep: &mut RunReport) -> Result<()> {
    match b {
        BoundRequest::Kit => {
            let a = sc.pair()?.radial()?;
            let kit = lyapunov_kit(&a)?;
            let kit0 = zero_kit(&a)?;
            for (q, v) in [
                ("r0", kit.r0),
                ("r1", kit.r1),
                ("c", kit.c),
                ("epsilon", kit.epsilon),
                ("phi_r0", kit.phi_r0),
                ("c_tilde", kit0.c),
                ("epsilon_tilde", kit0.epsilon),
            ] {
                rep.bound(case, q, None, v);
            }
            rep.cases.push(json!({"case": case, "op": "kit", "r0": kit.r0, "r1": kit.r1, "c": kit.c,
                "epsilon": kit.epsilon, "c_tilde": kit0.c, "epsilon_tilde": kit0.epsilon}));
        }
        BoundRequest::InvariantMeasure => {
            let pair = sc.pair()?;
            let pi = StickyInvariantMeasure::from_drift(&pair.radial()?)?;
            rep.bound(case, "atom_mass", None, pi.atom_mass);
            rep.bound(case, "tail_mass", None, pi.tail_mass());
            rep.bound(case, "z", None, pi.z);
            let mut v = json!({"case": case, "op": "invariant_measure", "m_bound": pair.m_bound,
                "atom_mass": pi.atom_mass, "tail_mass": pi.tail_mass(), "z": pi.z,
                "truncation_radius": pi.truncation_radius});
            if let DriftKind::Ou { m } = &pair.kind {
                let closed = ou_pi_tail(norm(m));
                rep.bound(case, "tail_mass_closed_form", None, closed);
                let ok = (closed - pi.tail_mass()).abs() <= 1e-6;
                rep.check(case, "tail_mass_matches_closed_form", ok, format!("{} vs {closed}", pi.tail_mass()));
                v["tail_mass_closed_form"] = json!(closed);
            }
            rep.cases.push(v);
        }
        BoundRequest::CouplingBound { times, r0 } => {
            let a = sc.pair()?.radial()?;
            let kit = lyapunov_kit(&a)?;
            let kit0 = zero_kit(&a)?;
            let pi = StickyInvariantMeasure::from_drift(&a)?;
            let mut rows = vec![];
            for &t in times {
                let cb = crate::bounds::coupling_upper_bound(&kit, &pi, t, *r0)?;
                let md = modified_upper_bound_with(&kit0, &pi, t, *r0);
                rep.bound(case, "upper", Some(t), cb.upper);
                rep.bound(case, "modified_upper", Some(t), md);
                if let Some(l) = cb.meet_lower {
                    rep.bound(case, "meet_lower", Some(t), l);
                }
                rows.push(json!({"t": t, "upper": cb.upper, "modified_upper": md, "meet_lower": cb.meet_lower}));
            }
            rep.cases.push(json!({"case": case, "op": "coupling_bound", "r0": r0, "rows": rows}));
        }
        BoundRequest::OuExactTv { x, y, times } => {
            let pair = sc.pair()?;
            let DriftKind::Ou { m } = &pair.kind else { return invalid("ou_exact_tv needs the ou model") };
            let oc = OuCase { m: m.clone(), x: x.clone(), y: y.clone() };
            let mut rows = vec![];
            for &t in times {
                let v = ou_exact_tv(&oc, t)?;
                rep.bound(case, "exact_tv", Some(t), v);
                rows.push(json!({"t": t, "exact_tv": v}));
            }
            rep.cases.push(json!({"case": case, "op": "ou_exact_tv", "rows": rows}));
        }
        BoundRequest::AlphaClosedForm => {
            let pair = sc.pair()?;
            let lkr = pair.lkr.ok_or_else(|| Error::InvalidInput("alpha_closed_form needs a step profile".into()))?;
            let ab = alpha_closed_form(&lkr, pair.m_bound);
            let quad = sticky_invariant_measure(pair.m_bound, &lkr.kappa_step())?.alpha();
            rep.bound(case, "alpha_closed_form", None, ab.alpha_bound);
            rep.bound(case, "alpha_quadrature", None, quad);
            rep.bound(case, "tail_mass_bound", None, ab.tail_mass_bound);
            rep.check(
                case,
                "closed_form_dominates",
                ab.alpha_bound >= quad * (1.0 - 1e-9),
                format!("{} vs {quad}", ab.alpha_bound),
            );
            rep.cases.push(json!({"case": case, "op": "alpha_closed_form", "bound": ab, "alpha_quadrature": quad}));
        }
        BoundRequest::CtildeInverseBound => {
            let pair = sc.pair()?;
            let lkr =
                pair.lkr.ok_or_else(|| Error::InvalidInput("ctilde_inverse_bound needs a step profile".into()))?;
            let bound = ctilde_inverse_bound(&lkr);
            let inv = 1.0 / lyapunov_kit(&RadialDrift::from_m(0.0, &lkr.kappa_step())?)?.c;
            rep.bound(case, "ctilde_inverse_bound", None, bound);
            rep.bound(case, "ctilde_inverse_quadrature", None, inv);
            rep.check(case, "closed_form_dominates", bound >= inv * (1.0 - 1e-9), format!("{bound} vs {inv}"));
            rep.cases.push(json!({"case": case, "op": "ctilde_inverse_bound", "bound": bound, "quadrature": inv}));
        }
        BoundRequest::CbmSummary { m } => {
            let p = &sc.model.as_ref().expect("validated").params;
            let (radius, k) = (p.radius.unwrap_or(0.0), p.k.unwrap_or(0.0));
            let mut curve = Curve {
                case: case.to_string(),
                columns: vec!["m", "tv_upper", "lower_bound1", "lower_bound2"],
                rows: vec![],
            };
            let mut rows = vec![];
            for &mi in m {
                let s = cbm_summary(&ConfinedBmCase { radius, k, m: mi })?;
                if let Some(v) = s.tv8 {
                    rep.bound(case, "tv8", Some(mi), v);
                }
                rep.bound(case, "upper_used", Some(mi), s.upper_used);
                rep.bound(case, "lower_bound1", Some(mi), s.lower.bound1);
                if let Some(v) = s.lower.bound2 {
                    rep.bound(case, "lower_bound2", Some(mi), v);
                }
                rep.bound(case, "z_f", Some(mi), s.lower.z_f);
                rep.bound(case, "z_g", Some(mi), s.lower.z_g);
                rep.check(case, &format!("upper_above_lower(m={mi})"), s.consistent, format!("{:?}", s.lower));
                curve.rows.push(vec![Some(mi), Some(s.upper_used), Some(s.lower.bound1), s.lower.bound2]);
                rows.push(serde_json::to_value(&s).expect("serialisable"));
            }
            rep.curves.push(curve);
            rep.cases.push(json!({"case": case, "op": "cbm_summary", "rows": rows}));
        }
        BoundRequest::MomentBounds { times, r0 } => {
            let a = sc.pair()?.radial()?;
            let kit = lyapunov_kit(&a)?;
            let pi = StickyInvariantMeasure::from_drift(&a)?;
            let mut rows = vec![];
            for &t in times {
                let mb = moment_bounds(&kit, &pi, t, kit.f(*r0))?;
                rep.bound(case, "ef_bound", Some(t), mb.ef_bound);
                rep.bound(case, "er_bound", Some(t), mb.er_bound);
                rep.bound(case, "ppos_bound", Some(t), mb.ppos_bound);
                rows.push(json!({"t": t, "bounds": mb}));
            }
            rep.cases.push(json!({"case": case, "op": "moment_bounds", "r0": r0, "rows": rows}));
        }
        BoundRequest::MkvBoundCurve { params, times } => {
            let curve = mkv_bound_curve(params, times)?;
            for &(t, v) in &curve {
                rep.bound(case, "mkv_bound", Some(t), v);
            }
            let ok = curve.iter().all(|&(_, v)| v.is_finite() && v > 0.0);
            rep.check(case, "bound_positive_finite", ok, String::new());
            rep.cases.push(json!({"case": case, "op": "mkv_bound_curve", "curve": curve}));
        }
    }
    Ok(())
}

fn run_sim(sc: &Scenario, s: &SimRequest, case: &str, rep: &mut RunReport) -> Result<()> {
    match s {
        SimRequest::Coupling { config, x, y, meet_tol, estimators } => {
            let pair = sc.pair()?;
            let ens = simulate_delta_coupling(&pair, &pair.kappa, x, y, config)?;
            let a = pair.radial()?;
            let r0 = norm(&x.iter().zip(y).map(|(p, q)| p - q).collect::<Vec<_>>());
            let times: Vec<f64> = ens.times.iter().copied().filter(|&t| t > 0.0).collect();
            let mut v = json!({"case": case, "kind": "coupling", "paths": ens.paths.len(), "diverged": ens.diverged,
                "substeps": ens.substeps});
            let has = |n: &str| estimators.iter().any(|e| e == n);
            if has("meet_probability") {
                let tol = meet_tol.unwrap_or(10.0 * config.delta);
                let pi = StickyInvariantMeasure::from_drift(&a)?;
                let kit0 = zero_kit(&a)?;
                let exact_case = match &pair.kind {
                    DriftKind::Ou { m } => Some(OuCase { m: m.clone(), x: x.clone(), y: y.clone() }),
                    _ => None,
                };
                let mut columns = vec!["t"];
                if exact_case.is_some() {
                    columns.push("exact_tv");
                }
                columns.extend(["mc_meet_complement", "thm2_bound"]);
                let mut curve = Curve { case: case.to_string(), columns, rows: vec![] };
                let (mut low_ok, mut up_ok) = (true, true);
                for &t in &times {
                    let e = meet_probability(&ens, t, tol)?;
                    let comp = 1.0 - e.value;
                    let bound = modified_upper_bound_with(&kit0, &pi, t, r0);
                    rep.estimate(case, "meet_complement", Some(t), comp, Some(e.std_error), Some(e.paths_used));
                    rep.bound(case, "thm2_bound", Some(t), bound);
                    up_ok &= comp <= bound + 3.0 * e.std_error;
                    let mut row = vec![Some(t)];
                    if let Some(oc) = &exact_case {
                        let ex = ou_exact_tv(oc, t)?;
                        rep.bound(case, "exact_tv", Some(t), ex);
                        low_ok &= ex <= comp + 3.0 * e.std_error;
                        row.push(Some(ex));
                    }
                    row.extend([Some(comp), Some(bound)]);
                    curve.rows.push(row);
                }
                if exact_case.is_some() {
                    rep.check(case, "exact_below_mc", low_ok, format!("meet tolerance {tol}"));
                }
                rep.check(case, "mc_below_bound", up_ok, format!("meet tolerance {tol}"));
                rep.curves.push(curve);
                v["meet_tol"] = json!(tol);
                // sensitivity of the final-time estimate to the meeting tolerance
                if let Some(&t_end) = times.last() {
                    let mut sweep = vec![];
                    for k in MEET_TOL_SWEEP {
                        let e = meet_probability(&ens, t_end, k * config.delta)?;
                        let name = format!("meet_complement_tol{k}delta");
                        rep.estimate(case, &name, Some(t_end), 1.0 - e.value, Some(e.std_error), Some(e.paths_used));
                        sweep.push(json!({"tol": k * config.delta, "meet_complement": 1.0 - e.value}));
                    }
                    v["meet_tol_sweep"] = json!(sweep);
                }
            }
            if has("comparison_violations") {
                let viol = comparison_violations(&ens, default_slack);
                rep.estimate(case, "comparison_violations", None, viol.count as f64, None, Some(viol.points_checked));
                rep.check(case, "comparison_holds", viol.count == 0, format!("{viol:?}"));
                v["comparison_violations"] = json!(viol);
            }
            if has("radius_moment") {
                for &t in &times {
                    let e = radius_moment(&ens, t)?;
                    rep.estimate(case, "radius_moment", Some(t), e.value, Some(e.std_error), Some(e.paths_used));
                }
            }
            if has("lyapunov_moment") {
                let kit = lyapunov_kit(&a)?;
                for &t in &times {
                    let e = lyapunov_moment(&ens, &kit, t)?;
                    rep.estimate(case, "lyapunov_moment", Some(t), e.value, Some(e.std_error), Some(e.paths_used));
                }
            }
            rep.cases.push(v);
        }
        SimRequest::Sticky { config, r0, estimators, bins, upper } => {
            let a = sc.pair()?.radial()?;
            let m = a.offset;
            let ens = simulate_sticky_1d(&StickyDrift::Homogeneous(a.clone()), *r0, config)?;
            let pi = StickyInvariantMeasure::from_drift(&a)?;
            let mut v = json!({"case": case, "kind": "sticky", "paths": ens.paths.len(), "diverged": ens.diverged,
                "substeps": ens.substeps, "m": m});
            let has = |n: &str| estimators.iter().any(|e| e == n);
            if has("occupation") {
                let occ = ergodic_occupation(&ens, 0, ens.burn_in, *bins, *upper)?;
                let gap = histogram_gap(&occ, &pi)?;
                rep.estimate(case, "atom_estimate", None, occ.atom_estimate, None, Some(occ.samples));
                rep.bound(case, "atom_mass", None, pi.atom_mass);
                rep.estimate(case, "histogram_gap", None, gap, None, Some(occ.samples));
                v["occupation"] = json!({"estimate": occ, "pi_atom": pi.atom_mass, "histogram_gap": gap});
            }
            if has("stickiness") {
                let sr = stickiness_identity_check(&ens, m)?;
                for b in &sr.bands {
                    rep.estimate(
                        case,
                        &format!("stickiness_ratio(eps={})", b.width),
                        None,
                        b.mean,
                        Some(b.std_error),
                        Some(b.paths_used),
                    );
                    rep.estimate(
                        case,
                        &format!("stickiness_median_abs_error(eps={})", b.width),
                        None,
                        b.median_abs_error,
                        None,
                        Some(b.paths_used),
                    );
                }
                rep.estimate(case, "stickiness_pooled_median_abs_error", None, sr.pooled_median_abs_error, None, None);
                if let Some(b) = sr.bands.first() {
                    rep.check(
                        case,
                        "stickiness_ratio_near_one",
                        (b.mean - 1.0).abs() <= 0.1,
                        format!("mean {}", b.mean),
                    );
                }
                v["stickiness"] = json!(sr);
            }
            if has("moments") {
                let kit = lyapunov_kit(&a)?;
                let mut curve = Curve {
                    case: case.to_string(),
                    columns: vec!["t", "mc_ef", "ef_bound", "mc_r", "r_bound"],
                    rows: vec![],
                };
                let mut ok = true;
                for &t in ens.times.iter().filter(|&&t| t > 0.0) {
                    let mb = moment_bounds(&kit, &pi, t, kit.f(*r0))?;
                    let ef = lyapunov_moment(&ens, &kit, t)?;
                    let er = radius_moment(&ens, t)?;
                    rep.estimate(case, "lyapunov_moment", Some(t), ef.value, Some(ef.std_error), Some(ef.paths_used));
                    rep.estimate(case, "radius_moment", Some(t), er.value, Some(er.std_error), Some(er.paths_used));
                    rep.bound(case, "ef_bound", Some(t), mb.ef_bound);
                    rep.bound(case, "er_bound", Some(t), mb.er_bound);
                    ok &= ef.value <= mb.ef_bound + 3.0 * ef.std_error && er.value <= mb.er_bound + 3.0 * er.std_error;
                    curve.rows.push(vec![
                        Some(t),
                        Some(ef.value),
                        Some(mb.ef_bound),
                        Some(er.value),
                        Some(mb.er_bound),
                    ]);
                }
                rep.check(case, "moments_below_bounds", ok, String::new());
                rep.curves.push(curve);
            }
            rep.cases.push(v);
        }
        SimRequest::Mkv { config, case: mc } => {
            let res = mkv_simulate(mc, config)?;
            let mut curve = Curve { case: case.to_string(), columns: vec!["t", "w1", "bound"], rows: vec![] };
            for (i, &t) in res.times.iter().enumerate() {
                let b = res.bound.get(i).map(|p| p.1);
                rep.estimate(case, "w1", Some(t), res.w1[i], None, Some(config.paths));
                if let Some(b) = b {
                    rep.bound(case, "mkv_bound", Some(t), b);
                }
                curve.rows.push(vec![Some(t), Some(res.w1[i]), b]);
            }
            let equal = mc.x0 == mc.y0;
            // equal starts give the zero bound
            let shape = res.bound.iter().all(|&(t, b)| b.is_finite() && (t <= 0.0 || b > 0.0 || (equal && b == 0.0)));
            rep.check(case, "bound_positive_finite", shape, String::new());
            if equal {
                rep.check(case, "w1_identically_zero", res.w1.iter().all(|&w| w == 0.0), String::new());
            } else {
                let rate_ok = res.fitted_rate.is_some_and(|r| r < 0.0);
                rep.check(case, "w1_decays", rate_ok, format!("fitted rate {:?}", res.fitted_rate));
                let env_ok = res.bound_envelope.is_some_and(|(_, rho)| rho > 0.0);
                rep.check(case, "bound_envelope_decays", env_ok, format!("{:?}", res.bound_envelope));
            }
            rep.curves.push(curve);
            rep.cases.push(json!({"case": case, "kind": "mkv", "result": res}));
        }
    }
    Ok(())
}

/// `{:.16e}`: 17 significant digits, round-trips every double.
pub fn fmt_real(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.16e}")
    }
}

fn opt_real(x: Option<f64>) -> String {
    x.map(fmt_real).unwrap_or_default()
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(vec![]);
    let io = |e: csv::Error| Error::Io(format!("csv: {e}"));
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    w.into_inner().map_err(|e| Error::Io(format!("csv: {e}")))
}

fn write(dir: &Path, name: &str, bytes: &[u8], files: &mut Vec<PathBuf>) -> Result<()> {
    let p = dir.join(name);
    fs::write(&p, bytes).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
    files.push(p);
    Ok(())
}

/// Writes the artifacts of `rep` into `dir` (created if missing).
pub fn write_outputs(sc: &Scenario, mode: Mode, rep: &RunReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let mut files = vec![];
    let resolved = sc.resolved();
    let mut names = vec!["bounds.csv".to_string()];
    if mode == Mode::Full {
        names.push("estimates.csv".into());
    }
    let curve_names: Vec<String> = (0..rep.curves.len())
        .map(|i| if i == 0 { "curves.csv".to_string() } else { format!("curves_{}.csv", i + 1) })
        .collect();
    names.extend(curve_names.iter().cloned());
    names.push("report.json".into());

    let manifest = json!({
        "scenario": resolved,
        "seed": resolved.seed,
        "mode": if mode == Mode::Full { "run" } else { "bounds" },
        "version": env!("CARGO_PKG_VERSION"),
        "rng_algorithm": RNG_ALGORITHM,
        "files": names,
    });
    let to_json = |v: &Value| serde_json::to_vec_pretty(v).map_err(|e| Error::Io(format!("json: {e}")));
    write(dir, "manifest.json", &to_json(&manifest)?, &mut files)?;

    let rows = rep.bounds.iter().map(|(c, q, a, v)| vec![c.clone(), q.clone(), opt_real(*a), fmt_real(*v)]);
    write(dir, "bounds.csv", &csv_bytes(&["case", "quantity", "arg", "value"], rows)?, &mut files)?;
    if mode == Mode::Full {
        let rows = rep.estimates.iter().map(|(c, q, t, v, se, n)| {
            vec![
                c.clone(),
                q.clone(),
                opt_real(*t),
                fmt_real(*v),
                opt_real(*se),
                n.map(|n| n.to_string()).unwrap_or_default(),
            ]
        });
        let head = ["case", "estimator", "t", "value", "std_error", "samples"];
        write(dir, "estimates.csv", &csv_bytes(&head, rows)?, &mut files)?;
    }
    for (c, name) in rep.curves.iter().zip(&curve_names) {
        let rows = c.rows.iter().map(|r| r.iter().map(|v| opt_real(*v)).collect());
        write(dir, name, &csv_bytes(&c.columns, rows)?, &mut files)?;
    }
    let curves: Vec<Value> =
        rep.curves.iter().zip(&curve_names).map(|(c, n)| json!({"case": c.case, "file": n})).collect();
    let report = json!({
        "scenario": resolved.name,
        "config": resolved,
        "cases": rep.cases,
        "curves": curves,
        "checks": rep.checks,
        "failed_checks": rep.failed_checks(),
    });
    write(dir, "report.json", &to_json(&report)?, &mut files)?;
    Ok(files)
}
