//! C ABI over the `sesi` integrators.
//!
//! Systems and states are opaque heap handles created and released through
//! this API. Every fallible call returns a [`SesiStatus`]; on failure the
//! message is kept per thread and read with [`sesi_last_error_message`].
//! Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sesi::diagnostics::angular_momentum;
use sesi::integrators::{dopri45_integrate, DopriConfig, FixedStepMethod, MidpointSolverConfig};
use sesi::oracle::build_benchmark_initial_state;
use sesi::{BodyState, Error, PhaseState, SphereNBodyHamiltonian, SphereParams, SplitHamiltonian};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SesiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Dimension = 3,
    Singularity = 4,
    Domain = 5,
    NoConvergence = 6,
    Calibration = 7,
    Numerical = 8,
    Panic = 99,
}

/// Fixed-step schemes available through [`sesi_step`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SesiMethod {
    Sesi2 = 0,
    Sesi4 = 1,
    Midpoint = 2,
}

/// Sphere parameters and the Hamiltonian built from them.
pub struct SesiSystem {
    params: SphereParams,
    h: SphereNBodyHamiltonian,
}

/// Phase state of all bodies plus the current time.
pub struct SesiState {
    inner: PhaseState,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> SesiStatus {
    match e.root() {
        Error::Dimension { .. } => SesiStatus::Dimension,
        Error::Singularity { .. } => SesiStatus::Singularity,
        Error::Domain(_) => SesiStatus::Domain,
        Error::Convergence { .. } => SesiStatus::NoConvergence,
        Error::Calibration(_) => SesiStatus::Calibration,
        Error::Parameter(_) | Error::Config(_) | Error::Structure { .. } => {
            SesiStatus::InvalidArgument
        }
        _ => SesiStatus::Numerical,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guarded(f: impl FnOnce() -> Result<(), (SesiStatus, String)>) -> SesiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SesiStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SesiStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (SesiStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (SesiStatus, String) {
    (SesiStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (SesiStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn deref_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (SesiStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn sesi_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates a system. Release with [`sesi_system_free`].
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn sesi_system_new(
    n_bodies: usize,
    mass: f64,
    radius: f64,
    theta0: f64,
    out: *mut *mut SesiSystem,
) -> SesiStatus {
    guarded(|| {
        let out = deref_mut(out, "out")?;
        let params = SphereParams::new(n_bodies, mass, radius, theta0).map_err(lib_err)?;
        let h = SphereNBodyHamiltonian::new(params).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(SesiSystem { params, h }));
        Ok(())
    })
}

/// # Safety
/// `system` must be null or a handle from [`sesi_system_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sesi_system_free(system: *mut SesiSystem) {
    if !system.is_null() {
        drop(Box::from_raw(system));
    }
}

/// Creates a state of `n_bodies` bodies, all components zero, at `t = 0`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn sesi_state_new(n_bodies: usize, out: *mut *mut SesiState) -> SesiStatus {
    guarded(|| {
        let out = deref_mut(out, "out")?;
        if n_bodies == 0 {
            return Err((SesiStatus::InvalidArgument, "n_bodies must be >= 1".into()));
        }
        let inner = PhaseState::new(0.0, vec![BodyState::default(); n_bodies]);
        *out = Box::into_raw(Box::new(SesiState { inner }));
        Ok(())
    })
}

/// # Safety
/// `state` must be null or a handle from this API not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sesi_state_free(state: *mut SesiState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Number of bodies, or 0 for a null handle.
///
/// # Safety
/// `state` must be null or a live state handle.
#[no_mangle]
pub unsafe extern "C" fn sesi_state_n_bodies(state: *const SesiState) -> usize {
    state.as_ref().map_or(0, |s| s.inner.n_bodies())
}

/// # Safety
/// `state` must be a live state handle and `t` writable.
#[no_mangle]
pub unsafe extern "C" fn sesi_state_time(state: *const SesiState, t: *mut f64) -> SesiStatus {
    guarded(|| {
        *deref_mut(t, "t")? = deref(state, "state")?.inner.t;
        Ok(())
    })
}

/// Reads body `body` as `(theta, phi, p_theta, p_phi)` into `out[0..4]`.
///
/// # Safety
/// `state` must be a live state handle and `out` must point to 4 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn sesi_state_get_body(
    state: *const SesiState,
    body: usize,
    out: *mut f64,
) -> SesiStatus {
    guarded(|| {
        let s = deref(state, "state")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let b = s.inner.bodies.get(body).ok_or_else(|| {
            (
                SesiStatus::InvalidArgument,
                format!("body {body} out of range"),
            )
        })?;
        ptr::copy_nonoverlapping(b.components().as_ptr(), out, 4);
        Ok(())
    })
}

/// # Safety
/// `state` must be a live state handle.
#[no_mangle]
pub unsafe extern "C" fn sesi_state_set_body(
    state: *mut SesiState,
    body: usize,
    theta: f64,
    phi: f64,
    p_theta: f64,
    p_phi: f64,
) -> SesiStatus {
    guarded(|| {
        let s = deref_mut(state, "state")?;
        let b = s.inner.bodies.get_mut(body).ok_or_else(|| {
            (
                SesiStatus::InvalidArgument,
                format!("body {body} out of range"),
            )
        })?;
        *b = BodyState::new(theta, phi, p_theta, p_phi);
        Ok(())
    })
}

/// # Safety
/// `state` must be a live state handle.
#[no_mangle]
pub unsafe extern "C" fn sesi_state_set_time(state: *mut SesiState, t: f64) -> SesiStatus {
    guarded(|| {
        deref_mut(state, "state")?.inner.t = t;
        Ok(())
    })
}

/// Calibrated three-body closed-orbit start for `system`, which must have
/// three bodies, `theta0 = pi/4` and mass 2. Release with [`sesi_state_free`].
///
/// # Safety
/// `system` must be a live system handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sesi_benchmark_state(
    system: *const SesiSystem,
    out: *mut *mut SesiState,
) -> SesiStatus {
    guarded(|| {
        let sys = deref(system, "system")?;
        let out = deref_mut(out, "out")?;
        let (inner, _) = build_benchmark_initial_state(&sys.params).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(SesiState { inner }));
        Ok(())
    })
}

/// Advances `state` in place by `n_steps` steps of size `tau`. On failure the
/// state is left at the last completed step.
///
/// # Safety
/// `system` and `state` must be live handles.
#[no_mangle]
pub unsafe extern "C" fn sesi_step(
    system: *const SesiSystem,
    state: *mut SesiState,
    method: SesiMethod,
    tau: f64,
    n_steps: usize,
) -> SesiStatus {
    guarded(|| {
        let sys = deref(system, "system")?;
        let s = deref_mut(state, "state")?;
        let m = match method {
            SesiMethod::Sesi2 => FixedStepMethod::Sesi2,
            SesiMethod::Sesi4 => FixedStepMethod::Sesi4,
            SesiMethod::Midpoint => FixedStepMethod::Midpoint(MidpointSolverConfig::default()),
        };
        let t0 = s.inner.t;
        for k in 1..=n_steps {
            let mut next = m
                .step(&s.inner, &sys.h, tau)
                .map_err(|e| lib_err(e.at_step(k)))?;
            next.t = t0 + k as f64 * tau;
            s.inner = next;
        }
        Ok(())
    })
}

/// Advances `state` in place to `t_end` with adaptive Dormand–Prince 4(5).
///
/// # Safety
/// `system` and `state` must be live handles.
#[no_mangle]
pub unsafe extern "C" fn sesi_dopri45(
    system: *const SesiSystem,
    state: *mut SesiState,
    t_end: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> SesiStatus {
    guarded(|| {
        let sys = deref(system, "system")?;
        let s = deref_mut(state, "state")?;
        let cfg = DopriConfig {
            rel_tol,
            abs_tol,
            ..DopriConfig::default()
        };
        let span = t_end - s.inner.t;
        let samples = dopri45_integrate(&s.inner, &sys.h, t_end, &cfg, span).map_err(lib_err)?;
        s.inner = samples.into_iter().last().expect("final sample");
        Ok(())
    })
}

/// # Safety
/// `system` and `state` must be live handles and `energy` writable.
#[no_mangle]
pub unsafe extern "C" fn sesi_energy(
    system: *const SesiSystem,
    state: *const SesiState,
    energy: *mut f64,
) -> SesiStatus {
    guarded(|| {
        let sys = deref(system, "system")?;
        let s = deref(state, "state")?;
        let out = deref_mut(energy, "energy")?;
        *out = sys.h.energy(&s.inner).map_err(lib_err)?;
        Ok(())
    })
}

/// Writes `(Lx, Ly, Lz)` to `out[0..3]`.
///
/// # Safety
/// `system` and `state` must be live handles and `out` must point to 3
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn sesi_angular_momentum(
    system: *const SesiSystem,
    state: *const SesiState,
    out: *mut f64,
) -> SesiStatus {
    guarded(|| {
        let sys = deref(system, "system")?;
        let s = deref(state, "state")?;
        if out.is_null() {
            return Err(null("out"));
        }
        if s.inner.n_bodies() != sys.params.n_bodies {
            return Err(lib_err(Error::Dimension {
                expected: sys.params.n_bodies,
                found: s.inner.n_bodies(),
            }));
        }
        let l = angular_momentum(&s.inner, &sys.params).map_err(lib_err)?;
        ptr::copy_nonoverlapping(l.as_ptr(), out, 3);
        Ok(())
    })
}
