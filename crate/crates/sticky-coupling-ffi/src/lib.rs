//! C ABI over the analytic part of `sticky-coupling`.
//!
//! Objects are opaque handles created by `sc_*_new` and released with the
//! matching `sc_*_free`. Every fallible call returns an [`ScStatus`]; on
//! failure the message is available from [`sc_last_error`] on the same thread
//! until the next failing call there.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use sticky_coupling::bounds::{
    alpha_closed_form, coupling_upper_bound, ctilde_inverse_bound, lyapunov_kit, modified_upper_bound, LyapunovKit,
    StickyInvariantMeasure,
};
use sticky_coupling::casestudies::{ou_exact_tv, ou_pi_tail, phi1, OuCase};
use sticky_coupling::model::{KappaSpec, LkrProfile, RadialDrift};
use sticky_coupling::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Infeasible = 3,
    Numerical = 4,
    Panic = 5,
}

/// Curvature profile `κ`.
pub struct ScKappa(KappaSpec);

/// Tabulated Lyapunov construction for a drift `M + κ(r)r`.
pub struct ScKit(LyapunovKit);

/// Sticky invariant measure for a drift `M + κ(r)r`.
pub struct ScMeasure(StickyInvariantMeasure);

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct ScKitConstants {
    pub r0: f64,
    pub r1: f64,
    pub c: f64,
    pub epsilon: f64,
    pub phi_r0: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScKitFunction {
    Phi = 0,
    BigPhi = 1,
    G = 2,
    F = 3,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct ScAlphaBound {
    pub alpha_bound: f64,
    pub tail_mass_bound: f64,
    /// 1 when `M <= K R`.
    pub small_m_branch: i32,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> ScStatus {
    match e {
        Error::InvalidInput(_) | Error::UnknownModel(_) | Error::OffGrid(_) | Error::Io(_) => ScStatus::InvalidInput,
        Error::Infeasible(_) | Error::EmptyWindow(_) => ScStatus::Infeasible,
        Error::QuadratureNonConvergence { .. } => ScStatus::Numerical,
    }
}

/// Runs `f`, recording errors and turning panics into `Panic`.
fn guard(f: impl FnOnce() -> Result<(), Error>) -> ScStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ScStatus::Ok,
        Ok(Err(e)) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            ScStatus::Panic
        }
    }
}

fn null() -> ScStatus {
    set_error("null pointer argument");
    ScStatus::NullPointer
}

/// Message of the last failing call on this thread (empty if none). The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sc_version() -> *const c_char {
    static V: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version string"),
    };
    V.as_ptr()
}

/// Piecewise-linear `κ` through `(r[i], v[i])`, constant `tail_value` from
/// `tail_start` on. `n` may be 0 for a constant profile.
///
/// # Safety
/// `r` and `v` must point to `n` readable doubles (or be null when `n == 0`);
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sc_kappa_new(
    r: *const f64,
    v: *const f64,
    n: usize,
    tail_value: f64,
    tail_start: f64,
    out: *mut *mut ScKappa,
) -> ScStatus {
    if out.is_null() || (n > 0 && (r.is_null() || v.is_null())) {
        return null();
    }
    guard(|| {
        let pts: Vec<(f64, f64)> = if n == 0 {
            vec![]
        } else {
            let (r, v) = (std::slice::from_raw_parts(r, n), std::slice::from_raw_parts(v, n));
            r.iter().copied().zip(v.iter().copied()).collect()
        };
        let k = KappaSpec::new(pts, tail_value, tail_start)?;
        *out = Box::into_raw(Box::new(ScKappa(k)));
        Ok(())
    })
}

/// Step profile `L·1(r<R) − K·1(r≥R)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sc_kappa_step(l: f64, k: f64, r: f64, out: *mut *mut ScKappa) -> ScStatus {
    if out.is_null() {
        return null();
    }
    guard(|| {
        let p = LkrProfile::new(l, k, r)?;
        *out = Box::into_raw(Box::new(ScKappa(p.kappa_step())));
        Ok(())
    })
}

/// # Safety
/// `p` must come from an `sc_kappa_*` constructor and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sc_kappa_free(p: *mut ScKappa) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// # Safety
/// `kappa` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sc_kit_new(m: f64, kappa: *const ScKappa, out: *mut *mut ScKit) -> ScStatus {
    if kappa.is_null() || out.is_null() {
        return null();
    }
    guard(|| {
        let kit = lyapunov_kit(&RadialDrift::from_m(m, &(*kappa).0)?)?;
        *out = Box::into_raw(Box::new(ScKit(kit)));
        Ok(())
    })
}

/// # Safety
/// `kit` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sc_kit_constants(kit: *const ScKit, out: *mut ScKitConstants) -> ScStatus {
    if kit.is_null() || out.is_null() {
        return null();
    }
    let k = &(*kit).0;
    *out = ScKitConstants { r0: k.r0, r1: k.r1, c: k.c, epsilon: k.epsilon, phi_r0: k.phi_r0 };
    ScStatus::Ok
}

/// Evaluates `φ`, `Φ`, `g` or `f` at `r >= 0`.
///
/// # Safety
/// `kit` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sc_kit_eval(kit: *const ScKit, which: ScKitFunction, r: f64, out: *mut f64) -> ScStatus {
    if kit.is_null() || out.is_null() {
        return null();
    }
    if r.is_nan() || r < 0.0 || r.is_infinite() {
        set_error("r must be finite and >= 0");
        return ScStatus::InvalidInput;
    }
    guard(|| {
        let k = &(*kit).0;
        *out = match which {
            ScKitFunction::Phi => k.phi(r),
            ScKitFunction::BigPhi => k.big_phi(r),
            ScKitFunction::G => k.g(r),
            ScKitFunction::F => k.f(r),
        };
        Ok(())
    })
}

/// # Safety
/// `p` must come from [`sc_kit_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sc_kit_free(p: *mut ScKit) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// # Safety
/// `kappa` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sc_measure_new(m: f64, kappa: *const ScKappa, out: *mut *mut ScMeasure) -> ScStatus {
    if kappa.is_null() || out.is_null() {
        return null();
    }
    guard(|| {
        let pi = StickyInvariantMeasure::from_drift(&RadialDrift::from_m(m, &(*kappa).0)?)?;
        *out = Box::into_raw(Box::new(ScMeasure(pi)));
        Ok(())
    })
}

/// Mass of the atom at 0.
///
/// # Safety
/// `pi` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sc_measure_atom(pi: *const ScMeasure, out: *mut f64) -> ScStatus {
    if pi.is_null() || out.is_null() {
        return null();
    }
    *out = (*pi).0.atom_mass;
    ScStatus::Ok
}

/// Mass of `(0, ∞)`.
///
/// # Safety
/// `pi` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sc_measure_tail(pi: *const ScMeasure, out: *mut f64) -> ScStatus {
    if pi.is_null() || out.is_null() {
        return null();
    }
    *out = (*pi).0.tail_mass();
    ScStatus::Ok
}

/// Density of the continuous part at `x > 0`.
///
/// # Safety
/// `pi` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sc_measure_density(pi: *const ScMeasure, x: f64, out: *mut f64) -> ScStatus {
    if pi.is_null() || out.is_null() {
        return null();
    }
    guard(|| {
        *out = (*pi).0.density(x);
        Ok(())
    })
}

/// # Safety
/// `p` must come from [`sc_measure_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sc_measure_free(p: *mut ScMeasure) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Upper bound on `P[X_t != Y_t]` from the kit and measure of the same drift.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sc_coupling_upper_bound(
    kit: *const ScKit,
    pi: *const ScMeasure,
    t: f64,
    r0: f64,
    out: *mut f64,
) -> ScStatus {
    if kit.is_null() || pi.is_null() || out.is_null() {
        return null();
    }
    guard(|| {
        *out = coupling_upper_bound(&(*kit).0, &(*pi).0, t, r0)?.upper;
        Ok(())
    })
}

/// Same bound with the rates of the `M = 0` drift `κ(r)r`.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sc_modified_upper_bound(
    kappa: *const ScKappa,
    pi: *const ScMeasure,
    t: f64,
    r0: f64,
    out: *mut f64,
) -> ScStatus {
    if kappa.is_null() || pi.is_null() || out.is_null() {
        return null();
    }
    guard(|| {
        *out = modified_upper_bound(&(*kappa).0, &(*pi).0, t, r0)?;
        Ok(())
    })
}

/// Closed-form bound on `α` for the step profile `(L, K, R)` and offset `M`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sc_alpha_closed_form(l: f64, k: f64, r: f64, m: f64, out: *mut ScAlphaBound) -> ScStatus {
    if out.is_null() {
        return null();
    }
    guard(|| {
        let a = alpha_closed_form(&LkrProfile::new(l, k, r)?, m);
        *out = ScAlphaBound {
            alpha_bound: a.alpha_bound,
            tail_mass_bound: a.tail_mass_bound,
            small_m_branch: i32::from(a.small_m_branch),
        };
        Ok(())
    })
}

/// Upper bound on `1/c̃` for the step profile `(L, K, R)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sc_ctilde_inverse_bound(l: f64, k: f64, r: f64, out: *mut f64) -> ScStatus {
    if out.is_null() {
        return null();
    }
    guard(|| {
        *out = ctilde_inverse_bound(&LkrProfile::new(l, k, r)?);
        Ok(())
    })
}

/// `P[|N(0,1)| <= r]`.
#[no_mangle]
pub extern "C" fn sc_phi1(r: f64) -> f64 {
    phi1(r)
}

/// Tail mass of the OU sticky measure for shift norm `m`.
#[no_mangle]
pub extern "C" fn sc_ou_pi_tail(m: f64) -> f64 {
    ou_pi_tail(m)
}

/// Exact TV distance at time `t` between the two OU laws in dimension `d`.
///
/// # Safety
/// `m`, `x`, `y` must each point to `d` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sc_ou_exact_tv(
    m: *const f64,
    x: *const f64,
    y: *const f64,
    d: usize,
    t: f64,
    out: *mut f64,
) -> ScStatus {
    if m.is_null() || x.is_null() || y.is_null() || out.is_null() {
        return null();
    }
    guard(|| {
        let v = |p: *const f64| std::slice::from_raw_parts(p, d).to_vec();
        *out = ou_exact_tv(&OuCase { m: v(m), x: v(x), y: v(y) }, t)?;
        Ok(())
    })
}
