//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`cargo test --test acceptance`). The process exits
//! 0 after reporting unless `ACCEPTANCE_STRICT=1` is set, in which case any
//! FAIL makes it exit 1. Seeds are fixed.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sticky_coupling::bounds::{
    alpha_closed_form, ctilde_inverse_bound, lyapunov_kit, mkv_bound_curve, modified_upper_bound, moment_bounds,
    sticky_invariant_measure, MkvBoundParams,
};
use sticky_coupling::casestudies::{
    cbm_summary, mkv_simulate, ou_exact_tv, ou_pi_tail, phi1, ConfinedBmCase, InteractionKernel, MkvCase, OuCase,
};
use sticky_coupling::engine::{simulate_delta_coupling, simulate_sticky_1d, SimConfig, StickyDrift};
use sticky_coupling::estimators::{
    comparison_violations, default_slack, ergodic_occupation, lyapunov_moment, meet_probability, radius_moment,
    stickiness_identity_check,
};
use sticky_coupling::model::{builtin_models, KappaSpec, LkrProfile, ModelParams, RadialDrift};
use sticky_coupling::scenario::{builtin_scenario, execute, write_outputs, Mode, BUILTIN_SCENARIOS};

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn ok(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn half() -> KappaSpec {
    KappaSpec::constant(-0.5).unwrap()
}

fn ou_pair(m: f64) -> sticky_coupling::model::DriftPair {
    builtin_models("ou", &ModelParams { m: Some(vec![m]), ..Default::default() }).unwrap()
}

fn c1() -> Outcome {
    let t0 = Instant::now();
    let kit = lyapunov_kit(&RadialDrift::from_m(0.0, &half()).unwrap()).unwrap();
    let el = t0.elapsed();
    let eps = 1.0 / (2.0 * 8f64.sqrt());
    let pass = (kit.c - 0.125).abs() <= 1e-8 && (kit.epsilon - eps).abs() <= 1e-8 && el < Duration::from_secs(1);
    ok(pass, format!("c={:.12} eps={:.12} in {el:.2?}", kit.c, kit.epsilon))
}

fn c2() -> Outcome {
    let mut worst: f64 = 0.0;
    for m in [0.1, 0.5, 1.0, 2.0, 4.0] {
        let pi = sticky_invariant_measure(m / 2.0, &half()).unwrap();
        worst = worst.max((pi.tail_mass() - ou_pi_tail(m)).abs());
    }
    let atom0 = sticky_invariant_measure(0.0, &half()).unwrap().atom_mass;
    ok(worst <= 1e-6 && atom0 == 1.0, format!("max |tail - closed form| = {worst:.2e}, atom(M=0) = {atom0}"))
}

fn c3() -> Outcome {
    let m = 1e-4;
    let a = ou_pi_tail(m) / m / (PI / 8.0).sqrt();
    let b = phi1(m / 2.0) / m * (2.0 * PI).sqrt();
    ok((a - 1.0).abs() <= 0.01 && (b - 1.0).abs() <= 0.01, format!("ratios {a:.6} {b:.6}"))
}

fn c4() -> Outcome {
    let cfg = SimConfig { step_h: 1e-3, horizon_t: 200.0, reg_n: 100, paths: 1, seed: 42, ..Default::default() };
    let t0 = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let ens = pool.install(|| simulate_sticky_1d(&StickyDrift::from_m(1.0, &half()).unwrap(), 0.0, &cfg)).unwrap();
    let occ = ergodic_occupation(&ens, 0, ens.burn_in, 40, 12.0).unwrap();
    let el = t0.elapsed();
    let target = sticky_invariant_measure(1.0, &half()).unwrap().atom_mass;
    let pass = (occ.atom_estimate - target).abs() <= 0.03 && el < Duration::from_secs(60);
    ok(pass, format!("atom {:.4} vs {target:.4} (window {}) in {el:.2?}", occ.atom_estimate, ens.paths[0].window))
}

fn c5() -> Outcome {
    let drift = StickyDrift::from_m(1.0, &half()).unwrap();
    let mut pooled = vec![];
    let mut mean100 = f64::NAN;
    for n in [50u32, 100, 200] {
        let cfg = SimConfig {
            step_h: 1e-3,
            horizon_t: 20.0,
            reg_n: n,
            paths: 100,
            seed: 5,
            record_stride: 1000,
            burn_in: Some(2.0),
            ..Default::default()
        };
        let rep = stickiness_identity_check(&simulate_sticky_1d(&drift, 0.0, &cfg).unwrap(), 1.0).unwrap();
        if n == 100 {
            mean100 = rep.bands[0].mean;
        }
        pooled.push(rep.pooled_median_abs_error);
    }
    let mono = pooled.windows(2).all(|w| w[1] <= w[0]);
    let pass = (0.9..=1.1).contains(&mean100) && mono;
    ok(pass, format!("mean ratio (n=100) {mean100:.4}; median |ratio-1| over n=50,100,200: {pooled:.4?}"))
}

fn c6() -> Outcome {
    let pair = ou_pair(1.0);
    let mut at_half_sqrt = vec![];
    let mut default_counts = vec![];
    for h in [1e-3, 5e-4] {
        let cfg = SimConfig { step_h: h, horizon_t: 2.0, delta: 1e-2, paths: 1000, seed: 6, ..Default::default() };
        let ens = simulate_delta_coupling(&pair, &pair.kappa, &[0.0], &[0.0], &cfg).unwrap();
        default_counts.push(comparison_violations(&ens, default_slack).count);
        at_half_sqrt.push(comparison_violations(&ens, |h, _| 0.5 * h.sqrt()).count);
    }
    let decreases = if at_half_sqrt[0] > 0 { at_half_sqrt[1] < at_half_sqrt[0] } else { at_half_sqrt[1] == 0 };
    let pass = default_counts[0] == 0 && decreases;
    ok(pass, format!("violations at 5sqrt(h)(1+r): {default_counts:?}; at sqrt(h)/2 for h, h/2: {at_half_sqrt:?}"))
}

fn c7() -> Outcome {
    let pair = ou_pair(1.0);
    let delta = 0.02;
    let cfg = SimConfig {
        step_h: 1e-3,
        horizon_t: 10.0,
        delta,
        paths: 10_000,
        seed: 7,
        record_stride: 1000,
        ..Default::default()
    };
    let t0 = Instant::now();
    let ens = simulate_delta_coupling(&pair, &pair.kappa, &[0.0], &[0.0], &cfg).unwrap();
    let pi = sticky_invariant_measure(pair.m_bound, &pair.kappa).unwrap();
    let case = OuCase { m: vec![1.0], x: vec![0.0], y: vec![0.0] };
    let mut pass = true;
    let mut rows = vec![];
    for t in [1.0, 2.0, 5.0, 10.0] {
        let e = meet_probability(&ens, t, 10.0 * delta).unwrap();
        let comp = 1.0 - e.value;
        let exact = ou_exact_tv(&case, t).unwrap();
        let ub = modified_upper_bound(&pair.kappa, &pi, t, 0.0).unwrap();
        pass &= exact <= comp + 3.0 * e.std_error && comp <= ub + 3.0 * e.std_error;
        rows.push(format!("t={t}: {exact:.4} <= {comp:.4}±{:.4} <= {ub:.4}", e.std_error));
    }
    let el = t0.elapsed();
    pass &= el < Duration::from_secs(300);
    ok(pass, format!("{} in {el:.1?}", rows.join("; ")))
}

fn c8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = f64::INFINITY;
    let mut branches = [0usize; 2];
    for i in 0..40 {
        let p = LkrProfile::new(rng.random_range(0.0..2.0), rng.random_range(0.2..2.0), rng.random_range(0.2..2.0))
            .unwrap();
        let kr = p.k * p.r_script;
        let m = if i < 20 { kr * rng.random_range(0.05..1.0) } else { kr * rng.random_range(1.0..3.0) };
        let ab = alpha_closed_form(&p, m);
        branches[usize::from(!ab.small_m_branch)] += 1;
        let quad = sticky_invariant_measure(m, &p.kappa_step()).unwrap().alpha();
        worst = worst.min(ab.alpha_bound / quad);
    }
    let mut worst_c = f64::INFINITY;
    for i in 0..20 {
        let k = rng.random_range(0.2..2.0);
        let r = rng.random_range(0.2..2.0);
        let l = if i < 10 { 0.0 } else { rng.random_range(0.0..4.0 / (r * r)) };
        let p = LkrProfile::new(l, k, r).unwrap();
        let inv = 1.0 / lyapunov_kit(&RadialDrift::from_m(0.0, &p.kappa_step()).unwrap()).unwrap().c;
        worst_c = worst_c.min(ctilde_inverse_bound(&p) / inv);
    }
    // for L = 0 and R² ≤ 1/K the c̃ bound is attained, so allow quadrature rounding
    let pass = worst >= 1.0 - 1e-9 && worst_c >= 1.0 - 1e-9 && branches == [20, 20];
    ok(pass, format!("min closed/quadrature: alpha {worst:.6}, 1/c {worst_c:.12}; branches {branches:?}"))
}

fn c9() -> Outcome {
    let mut pass = true;
    let mut ratio = f64::NAN;
    for m in [1e-3, 1e-2, 1e-1] {
        let s = cbm_summary(&ConfinedBmCase { radius: 1.0, k: 1.0, m }).unwrap();
        let Some(tv8) = s.tv8 else { return ok(false, format!("TV8 not applicable at m={m}")) };
        pass &= tv8 >= s.lower.bound1 && s.lower.bound2.is_some_and(|b| tv8 >= b) && s.lower.z_g >= s.lower.z_f;
        if m == 1e-3 {
            ratio = s.lower.bound2.unwrap_or(f64::NAN) / m;
        }
    }
    let target = 0.25 * (1.0 + (2.0 / PI).sqrt());
    pass &= (ratio / target - 1.0).abs() <= 0.01;
    ok(pass, format!("lower-bound ratio at m=1e-3: {ratio:.5} vs {target:.5}"))
}

fn c10() -> Outcome {
    let a = RadialDrift::from_m(1.0, &half()).unwrap();
    let kit = lyapunov_kit(&a).unwrap();
    let pi = sticky_invariant_measure(1.0, &half()).unwrap();
    let cfg =
        SimConfig { step_h: 1e-3, horizon_t: 2.0, paths: 10_000, seed: 10, record_stride: 500, ..Default::default() };
    let ens = simulate_sticky_1d(&StickyDrift::Homogeneous(a), 1.0, &cfg).unwrap();
    let mut pass = true;
    let mut rows = vec![];
    for t in [0.5, 1.0, 2.0] {
        let mb = moment_bounds(&kit, &pi, t, kit.f(1.0)).unwrap();
        let ef = lyapunov_moment(&ens, &kit, t).unwrap();
        let er = radius_moment(&ens, t).unwrap();
        pass &= ef.value <= mb.ef_bound + 3.0 * ef.std_error && er.value <= mb.er_bound + 3.0 * er.std_error;
        rows.push(format!("t={t}: Ef {:.4}/{:.4}, Er {:.4}/{:.4}", ef.value, mb.ef_bound, er.value, mb.er_bound));
    }
    ok(pass, rows.join("; "))
}

fn c11() -> Outcome {
    let cfg = SimConfig { step_h: 0.01, horizon_t: 8.0, paths: 4, seed: 11, record_stride: 20, ..Default::default() };
    let base = MkvCase {
        confinement: 1.0,
        kernel: InteractionKernel::Tanh,
        tau: 0.0,
        l_theta: 1.0,
        a: None,
        lambda: None,
        x0: vec![1.0],
        y0: vec![-1.0],
        particles: 100,
    };
    let mut pass = true;
    let mut notes = vec![];
    for tau in [0.0, 0.05] {
        let case = MkvCase { tau, ..base.clone() };
        pass &= case.tau_small();
        let r = mkv_simulate(&case, &cfg).unwrap();
        let rate = r.fitted_rate.unwrap_or(f64::NAN);
        let shape = r.bound.iter().all(|&(_, b)| b.is_finite() && b > 0.0);
        let dominated = r.bound_envelope.is_some_and(|(b, rho)| {
            rho > 0.0
                && r.bound
                    .iter()
                    .filter(|p| p.0 >= cfg.horizon_t / 2.0)
                    .all(|&(t, v)| v <= b * (-rho * t).exp() * (1.0 + 1e-9))
        });
        let same = mkv_simulate(&MkvCase { y0: base.x0.clone(), ..case.clone() }, &cfg).unwrap();
        let zero = same.w1.iter().all(|&w| w == 0.0);
        pass &= rate < 0.0 && shape && dominated && zero;
        notes.push(format!("tau={tau}: rate {rate:.3}, envelope {:?}, equal-start W1 zero {zero}", r.bound_envelope));
    }
    // explicit constants give a finite positive curve as well
    let p = MkvBoundParams {
        l_theta: 1.0,
        a: 1.0,
        lambda: 1.0,
        tau: 0.05,
        r0: 2.0,
        kappa: KappaSpec::constant(-1.0).unwrap(),
    };
    let grid: Vec<f64> = (1..=40).map(|i| i as f64 * 0.25).collect();
    pass &= mkv_bound_curve(&p, &grid).unwrap().iter().all(|&(_, b)| b.is_finite() && b > 0.0);
    ok(pass, notes.join("; "))
}

fn outputs(name: &str, threads: usize, dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let sc = builtin_scenario(name).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    let rep = pool.install(|| execute(&sc, Mode::Full)).unwrap();
    let files = write_outputs(&sc, Mode::Full, &rep, dir).unwrap();
    let mut v: Vec<(String, Vec<u8>)> = files
        .iter()
        .filter(|f| f.extension().is_some_and(|e| e == "csv"))
        .map(|f| (f.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(f).unwrap()))
        .collect();
    v.sort();
    v
}

fn c12() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let mut pass = true;
    let mut notes = vec![];
    for (name, _, _) in BUILTIN_SCENARIOS {
        let a = outputs(name, 1, &tmp.path().join(format!("{name}-1")));
        let b = outputs(name, 3, &tmp.path().join(format!("{name}-3")));
        let same = !a.is_empty() && a == b;
        pass &= same;
        notes.push(format!("{name}: {} csv {}", a.len(), if same { "identical" } else { "DIFFER" }));
    }
    ok(pass, notes.join("; "))
}

fn main() {
    // libtest flags such as --nocapture are accepted and ignored
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let all: [Criterion; 12] = [
        ("1 OU constants", c1),
        ("2 invariant measure", c2),
        ("3 small-m asymptotics", c3),
        ("4 ergodic occupation", c4),
        ("5 stickiness identity", c5),
        ("6 comparison", c6),
        ("7 TV sandwich", c7),
        ("8 closed-form dominance", c8),
        ("9 confined BM", c9),
        ("10 moment bounds", c10),
        ("11 McKean-Vlasov", c11),
        ("12 determinism", c12),
    ];
    let mut failed = 0;
    for (i, (name, f)) in all.iter().enumerate() {
        let num = (i + 1).to_string();
        if !filter.is_empty() && !filter.contains(&num) {
            continue;
        }
        let t0 = Instant::now();
        let o = f();
        failed += usize::from(!o.pass);
        println!("criterion {name}: {} ({}) [{:.1?}]", if o.pass { "PASS" } else { "FAIL" }, o.detail, t0.elapsed());
    }
    println!("acceptance: {failed} failing");
    if failed > 0 && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
