//! Time steppers: the explicit symplectic SESI schemes and the two baselines
//! (implicit midpoint, Dormand–Prince 4(5)) they are compared against.

mod dopri;
mod midpoint;
mod sesi;

pub use dopri::{dopri45_integrate, dopri45_integrate_with_stats, DopriConfig, DopriRun};
pub use midpoint::{implicit_midpoint_step, implicit_midpoint_step_counted, MidpointSolverConfig};
pub use sesi::{sesi2_step, sesi4_step, YoshidaCoefficients};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::SplitHamiltonian;
use crate::phase::{guard_theta, Columns, PhaseState};

/// Fixed-step methods accepted by [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FixedStepMethod {
    Sesi2,
    Sesi4,
    Midpoint(MidpointSolverConfig),
}

/// Method identifiers as they appear in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodId {
    Sesi2,
    Sesi4,
    Midpoint,
    Dopri45,
}

impl MethodId {
    pub fn name(self) -> &'static str {
        match self {
            MethodId::Sesi2 => "sesi2",
            MethodId::Sesi4 => "sesi4",
            MethodId::Midpoint => "midpoint",
            MethodId::Dopri45 => "dopri45",
        }
    }
}

impl std::fmt::Display for MethodId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FixedStepMethod {
    pub fn step<H: SplitHamiltonian + ?Sized>(
        &self,
        s: &PhaseState,
        h: &H,
        tau: f64,
    ) -> Result<PhaseState> {
        match self {
            FixedStepMethod::Sesi2 => sesi2_step(s, h, tau),
            FixedStepMethod::Sesi4 => sesi4_step(s, h, tau),
            FixedStepMethod::Midpoint(cfg) => implicit_midpoint_step(s, h, tau, cfg),
        }
    }
}

/// Applies `method` `n_steps` times from `s`, returning the initial state,
/// every `sample_every`-th state and always the final one. Sample times are
/// `t0 + k * tau` exactly.
pub fn integrate<H: SplitHamiltonian + ?Sized>(
    s: &PhaseState,
    h: &H,
    method: FixedStepMethod,
    tau: f64,
    n_steps: usize,
    sample_every: usize,
) -> Result<Vec<PhaseState>> {
    if n_steps == 0 || sample_every == 0 {
        return Err(Error::Parameter(
            "n_steps and sample_every must both be >= 1".into(),
        ));
    }
    if !tau.is_finite() {
        return Err(Error::Parameter(format!(
            "step size must be finite, got {tau}"
        )));
    }
    let t0 = s.t;
    let mut out = Vec::with_capacity(n_steps / sample_every + 2);
    out.push(s.clone());
    let mut cur = s.clone();
    for k in 1..=n_steps {
        cur = method.step(&cur, h, tau).map_err(|e| e.at_step(k))?;
        cur.t = t0 + k as f64 * tau;
        if k % sample_every == 0 || k == n_steps {
            out.push(cur.clone());
        }
    }
    Ok(out)
}

/// Columns of `s` after checking body count, finiteness and the pole guard.
pub(crate) fn entry_columns<H: SplitHamiltonian + ?Sized>(
    s: &PhaseState,
    h: &H,
) -> Result<Columns> {
    h.check_len(s)?;
    for (i, b) in s.bodies.iter().enumerate() {
        if !b.components().iter().all(|v| v.is_finite()) {
            return Err(Error::Domain(format!(
                "body {i} has a non-finite component"
            )));
        }
        guard_theta(i, b.theta)?;
    }
    Ok(Columns::from(s))
}

/// Hamiltonian vector field `(dH/dp_theta, dH/dp_phi, -dH/dtheta, -dH/dphi)`
/// per body, in column layout.
pub(crate) struct Gradient {
    pub dh_dtheta: Vec<f64>,
    pub dh_dphi: Vec<f64>,
    pub dh_dp_theta: Vec<f64>,
    pub dh_dp_phi: Vec<f64>,
}

impl Gradient {
    pub fn zeros(n: usize) -> Self {
        Self {
            dh_dtheta: vec![0.0; n],
            dh_dphi: vec![0.0; n],
            dh_dp_theta: vec![0.0; n],
            dh_dp_phi: vec![0.0; n],
        }
    }

    pub fn eval<H: SplitHamiltonian + ?Sized>(&mut self, h: &H, c: &Columns) -> Result<()> {
        let n = c.len();
        let mut scratch = vec![0.0; n];
        h.dh1_dp_theta(&c.p_theta, &mut self.dh_dp_theta);
        h.dh2_dp_phi(&c.theta, &c.p_phi, &mut self.dh_dp_phi)?;
        h.dh3(&c.theta, &c.phi, &mut self.dh_dtheta, &mut self.dh_dphi)?;
        h.dh2_dtheta(&c.theta, &c.p_phi, &mut scratch)?;
        for (a, b) in self.dh_dtheta.iter_mut().zip(&scratch) {
            *a += b;
        }
        Ok(())
    }
}
