//! Adaptive composite Simpson quadrature.
//!
//! Breakpoints are forced panel boundaries. The absolute tolerance is shared
//! between sub-intervals in proportion to their length, and the total number
//! of accepted panels is capped.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub max_panels: usize,
    /// Forced bisections before the error test is trusted.
    pub min_depth: u32,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { abs_tol: 1e-10, max_panels: 1 << 20, min_depth: 2 }
    }
}

impl QuadOptions {
    pub fn with_tol(abs_tol: f64) -> Self {
        QuadOptions { abs_tol, ..Default::default() }
    }
}

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, opts: &QuadOptions, panels: &mut usize) -> Result<f64> {
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    let mut stack = vec![Panel { a, b, fa, fm, fb, whole: simpson(a, b, fa, fm, fb), tol, depth: 0 }];
    let mut total = 0.0;
    // Kahan compensation keeps the sum of many small panels honest.
    let mut comp = 0.0;
    while let Some(p) = stack.pop() {
        let m = 0.5 * (p.a + p.b);
        let lm = 0.5 * (p.a + m);
        let rm = 0.5 * (m + p.b);
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(p.a, m, p.fa, flm, p.fm);
        let right = simpson(m, p.b, p.fm, frm, p.fb);
        let delta = left + right - p.whole;
        let converged = p.depth >= opts.min_depth && delta.abs() <= 15.0 * p.tol;
        if converged || m <= p.a || m >= p.b {
            let y = left + right + delta / 15.0 - comp;
            let t = total + y;
            comp = (t - total) - y;
            total = t;
            *panels += 2;
            if *panels > opts.max_panels {
                return Err(Error::QuadratureNonConvergence { a, b, panels: *panels });
            }
            continue;
        }
        if !delta.is_finite() {
            return Err(Error::QuadratureNonConvergence { a, b, panels: *panels });
        }
        if stack.len() > opts.max_panels {
            return Err(Error::QuadratureNonConvergence { a, b, panels: *panels });
        }
        let half = 0.5 * p.tol;
        stack.push(Panel { a: m, b: p.b, fa: p.fm, fm: frm, fb: p.fb, whole: right, tol: half, depth: p.depth + 1 });
        stack.push(Panel { a: p.a, b: m, fa: p.fa, fm: flm, fb: p.fm, whole: left, tol: half, depth: p.depth + 1 });
    }
    Ok(total)
}

/// `∫_a^b f` with the given breakpoints as panel boundaries.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64], opts: &QuadOptions) -> Result<f64> {
    if b == a {
        return Ok(0.0);
    }
    if b < a {
        return integrate(f, b, a, breaks, opts).map(|v| -v);
    }
    let mut pts = vec![a];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    pts.extend(inner);
    pts.push(b);
    let len = b - a;
    let mut panels = 0usize;
    let mut sum = 0.0;
    for w in pts.windows(2) {
        let tol = opts.abs_tol * (w[1] - w[0]) / len;
        sum += adapt(&f, w[0], w[1], tol, opts, &mut panels)?;
    }
    Ok(sum)
}

/// Running integrals `∫_{nodes[0]}^{nodes[i]} f` for sorted nodes.
pub fn cumulative<F: Fn(f64) -> f64>(f: F, nodes: &[f64], breaks: &[f64], opts: &QuadOptions) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(nodes.len());
    if nodes.is_empty() {
        return Ok(out);
    }
    let len = (nodes[nodes.len() - 1] - nodes[0]).max(f64::MIN_POSITIVE);
    let mut acc = 0.0;
    out.push(0.0);
    for w in nodes.windows(2) {
        let cell = QuadOptions { abs_tol: opts.abs_tol * (w[1] - w[0]) / len, ..*opts };
        acc += integrate(&f, w[0], w[1], breaks, &cell)?;
        out.push(acc);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = integrate(|x| x * x * x - 2.0 * x, 0.0, 3.0, &[], &QuadOptions::default()).unwrap();
        assert!((v - (81.0 / 4.0 - 9.0)).abs() < 1e-12);
    }

    #[test]
    fn gaussian_mass() {
        let v = integrate(|x: f64| (-x * x / 2.0).exp(), -12.0, 12.0, &[], &QuadOptions::default()).unwrap();
        assert!((v - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn kink_handled_by_breakpoint() {
        let f = |x: f64| (x - 1.0 / 3.0).abs();
        let exact = 0.5 * (1.0 / 9.0) + 0.5 * (4.0 / 9.0);
        let v = integrate(f, 0.0, 1.0, &[1.0 / 3.0], &QuadOptions::default()).unwrap();
        assert!((v - exact).abs() < 1e-13);
    }

    #[test]
    fn reversed_limits_and_cumulative() {
        let o = QuadOptions::default();
        let v = integrate(|x: f64| x.exp(), 1.0, 0.0, &[], &o).unwrap();
        assert!((v + (1f64.exp() - 1.0)).abs() < 1e-10);
        let nodes: Vec<f64> = (0..=10).map(|i| i as f64 * 0.2).collect();
        let c = cumulative(|x| 2.0 * x, &nodes, &[], &o).unwrap();
        for (x, v) in nodes.iter().zip(&c) {
            assert!((v - x * x).abs() < 1e-12);
        }
    }

    #[test]
    fn panel_cap_reports_nonconvergence() {
        let o = QuadOptions { abs_tol: 1e-14, max_panels: 64, min_depth: 2 };
        let r = integrate(|x: f64| (1.0 / x.max(1e-300)).sin(), 1e-6, 1.0, &[], &o);
        assert!(matches!(r, Err(Error::QuadratureNonConvergence { .. })));
    }
}
