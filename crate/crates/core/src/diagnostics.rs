//! Conserved-quantity monitors and post-processing of sampled trajectories.
//!
//! Angular momentum is taken in the unit-sphere embedding,
//! `L = sum m r_hat x (theta_dot theta_hat + sin(theta) phi_dot phi_hat)`,
//! matching a kinetic term written without the radius. With that convention
//! `Lz = sum p_phi` identically.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::SplitHamiltonian;
use crate::integrators::{integrate, FixedStepMethod};
use crate::numeric::log_log_slope;
use crate::phase::{guard_theta, state_distance, PhaseState, SphereParams};

/// One diagnosed sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub energy: f64,
    /// `E - E0`, with `E0` the energy of the first sample.
    pub delta_e: f64,
    pub l_vec: [f64; 3],
    pub bodies_xy: Vec<(f64, f64)>,
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Total angular momentum `(Lx, Ly, Lz)`.
pub fn angular_momentum(s: &PhaseState, params: &SphereParams) -> Result<[f64; 3]> {
    let m = params.mass;
    let mut l = [0.0; 3];
    for (i, b) in s.bodies.iter().enumerate() {
        let sin_t = guard_theta(i, b.theta)?;
        let cos_t = b.theta.cos();
        let (sin_p, cos_p) = b.phi.sin_cos();
        let theta_dot = b.p_theta / m;
        let phi_dot = b.p_phi / (m * sin_t * sin_t);
        let r = [sin_t * cos_p, sin_t * sin_p, cos_t];
        let e_theta = [cos_t * cos_p, cos_t * sin_p, -sin_t];
        let e_phi = [-sin_p, cos_p, 0.0];
        let v: [f64; 3] =
            std::array::from_fn(|k| theta_dot * e_theta[k] + sin_t * phi_dot * e_phi[k]);
        let c = cross(r, v);
        for k in 0..3 {
            l[k] += m * c[k];
        }
    }
    Ok(l)
}

/// Projection of every body onto the XY plane, in units of length.
pub fn xy_projection(s: &PhaseState, params: &SphereParams) -> Vec<(f64, f64)> {
    s.bodies
        .iter()
        .map(|b| {
            let r = params.radius * b.theta.sin();
            (r * b.phi.cos(), r * b.phi.sin())
        })
        .collect()
}

/// One row per sample, energies referenced to the first sample.
pub fn diagnose_trajectory<H: SplitHamiltonian + ?Sized>(
    samples: &[PhaseState],
    h: &H,
    params: &SphereParams,
) -> Result<Vec<DiagnosticsRow>> {
    let first = samples
        .first()
        .ok_or_else(|| Error::Parameter("cannot diagnose an empty trajectory".into()))?;
    let e0 = h.energy(first).map_err(|e| e.at_sample(0))?;
    samples
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let energy = h.energy(s).map_err(|e| e.at_sample(k))?;
            Ok(DiagnosticsRow {
                t: s.t,
                energy,
                delta_e: if k == 0 { 0.0 } else { energy - e0 },
                l_vec: angular_momentum(s, params).map_err(|e| e.at_sample(k))?,
                bodies_xy: xy_projection(s, params),
            })
        })
        .collect()
}

/// Drift summary of a diagnosed run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftSummary {
    /// `max |dE|` over rows with `t <= t_split`.
    pub max_de_first: f64,
    /// `max |dE|` over rows with `t > t_split`.
    pub max_de_second: f64,
    /// `max |L(t) - L(t0)|` per axis.
    pub l_drift: [f64; 3],
}

pub fn drift_summary(rows: &[DiagnosticsRow], t_split: f64) -> DriftSummary {
    let mut out = DriftSummary {
        max_de_first: 0.0,
        max_de_second: 0.0,
        l_drift: [0.0; 3],
    };
    let Some(first) = rows.first() else {
        return out;
    };
    for r in rows {
        let de = r.delta_e.abs();
        if r.t <= t_split {
            out.max_de_first = out.max_de_first.max(de);
        } else {
            out.max_de_second = out.max_de_second.max(de);
        }
        for k in 0..3 {
            out.l_drift[k] = out.l_drift[k].max((r.l_vec[k] - first.l_vec[k]).abs());
        }
    }
    out
}

/// Result of a step-size refinement study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceStudy {
    /// `(tau_i, |x(t; tau_i) - x(t; tau_{i+1})|_max)` for consecutive pairs.
    pub diffs: Vec<(f64, f64)>,
    /// Least-squares log-log slope; `None` if any difference is zero.
    pub slope: Option<f64>,
}

/// Number of steps of size `tau` that reach `t_final`, or a configuration error.
pub fn steps_for(t_final: f64, tau: f64) -> Result<usize> {
    if !(tau > 0.0 && t_final > 0.0) {
        return Err(Error::Config(format!(
            "tau ({tau}) and t_final ({t_final}) must be positive"
        )));
    }
    let n = (t_final / tau).round();
    if n < 1.0 || (n * tau - t_final).abs() > 1e-9 * t_final.max(1.0) {
        return Err(Error::Config(format!(
            "t_final = {t_final} is not an integer multiple of tau = {tau}"
        )));
    }
    Ok(n as usize)
}

/// Runs `method` from `initial` to `t_final` for every `tau` and compares the
/// final states of consecutive step sizes in the max-norm.
pub fn convergence_study<H: SplitHamiltonian + ?Sized>(
    initial: &PhaseState,
    h: &H,
    method: FixedStepMethod,
    taus: &[f64],
    t_final: f64,
) -> Result<ConvergenceStudy> {
    if taus.len() < 3 {
        return Err(Error::Config(format!(
            "a convergence study needs at least 3 step sizes, got {}",
            taus.len()
        )));
    }
    if taus.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Config(
            "step sizes must be strictly decreasing".into(),
        ));
    }
    let steps: Vec<usize> = taus
        .iter()
        .map(|&tau| steps_for(t_final, tau))
        .collect::<Result<_>>()?;
    let mut finals = Vec::with_capacity(taus.len());
    for (&tau, &n) in taus.iter().zip(&steps) {
        let run = integrate(initial, h, method, tau, n, n)?;
        finals.push(
            run.last()
                .cloned()
                .expect("integrate returns the final state"),
        );
    }
    let diffs: Vec<(f64, f64)> = finals
        .windows(2)
        .zip(taus)
        .map(|(w, &tau)| Ok((tau, state_distance(&w[0], &w[1])?)))
        .collect::<Result<_>>()?;
    let slope = if diffs.iter().any(|&(_, d)| d == 0.0) {
        None
    } else {
        log_log_slope(&diffs)
    };
    Ok(ConvergenceStudy { diffs, slope })
}
