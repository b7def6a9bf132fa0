use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::SplitHamiltonian;
use crate::phase::{Columns, PhaseState};

use super::{entry_columns, Gradient};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MidpointSolverConfig {
    /// Max-norm bound on the fixed-point update.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for MidpointSolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-13,
            max_iterations: 50,
        }
    }
}

impl MidpointSolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance >= 100.0 * f64::EPSILON) || !self.tolerance.is_finite() {
            return Err(Error::Parameter(format!(
                "midpoint tolerance must be >= 100 eps, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::Parameter(
                "midpoint max_iterations must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Implicit midpoint step; see [`implicit_midpoint_step_counted`].
pub fn implicit_midpoint_step<H: SplitHamiltonian + ?Sized>(
    s: &PhaseState,
    h: &H,
    tau: f64,
    cfg: &MidpointSolverConfig,
) -> Result<PhaseState> {
    implicit_midpoint_step_counted(s, h, tau, cfg).map(|(s, _)| s)
}

/// Implicit midpoint step, also returning the number of fixed-point sweeps.
///
/// Solves
/// `p_mid = p - tau/2 dH/dq(q_mid, p_mid)`, `q_mid = q + tau/2 dH/dp(q_mid, p_mid)`
/// by plain fixed-point iteration from `(q, p)`, then completes the step with
/// another half update from the midpoint.
pub fn implicit_midpoint_step_counted<H: SplitHamiltonian + ?Sized>(
    s: &PhaseState,
    h: &H,
    tau: f64,
    cfg: &MidpointSolverConfig,
) -> Result<(PhaseState, usize)> {
    cfg.validate()?;
    let start = entry_columns(s, h)?;
    let n = start.len();
    let half = 0.5 * tau;
    let mut mid = start.clone();
    let mut g = Gradient::zeros(n);
    let mut residual = f64::INFINITY;

    for iteration in 1..=cfg.max_iterations {
        g.eval(h, &mid)?;
        let next = Columns {
            theta: axpy(&start.theta, half, &g.dh_dp_theta),
            phi: axpy(&start.phi, half, &g.dh_dp_phi),
            p_theta: axpy(&start.p_theta, -half, &g.dh_dtheta),
            p_phi: axpy(&start.p_phi, -half, &g.dh_dphi),
        };
        residual = max_diff(&next, &mid);
        mid = next;
        if !residual.is_finite() {
            break;
        }
        if residual < cfg.tolerance {
            g.eval(h, &mid)?;
            let end = Columns {
                theta: axpy(&mid.theta, half, &g.dh_dp_theta),
                phi: axpy(&mid.phi, half, &g.dh_dp_phi),
                p_theta: axpy(&mid.p_theta, -half, &g.dh_dtheta),
                p_phi: axpy(&mid.p_phi, -half, &g.dh_dphi),
            };
            return Ok((end.into_state(s.t + tau), iteration));
        }
    }
    Err(Error::Convergence {
        iterations: cfg.max_iterations,
        residual,
    })
}

fn axpy(x: &[f64], a: f64, y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(x, y)| x + a * y).collect()
}

fn max_diff(a: &Columns, b: &Columns) -> f64 {
    [
        (&a.theta, &b.theta),
        (&a.phi, &b.phi),
        (&a.p_theta, &b.p_theta),
        (&a.p_phi, &b.p_phi),
    ]
    .iter()
    .flat_map(|(x, y)| x.iter().zip(y.iter()).map(|(u, v)| (u - v).abs()))
    .fold(0.0, f64::max)
}
