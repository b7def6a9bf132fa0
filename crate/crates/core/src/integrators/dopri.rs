use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::SplitHamiltonian;
use crate::phase::{Columns, PhaseState};

use super::{entry_columns, Gradient};

/// Adaptive-step controls. Defaults follow the usual `ode45` settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DopriConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub initial_step: f64,
    pub max_step: f64,
    pub safety: f64,
}

impl Default for DopriConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-3,
            abs_tol: 1e-6,
            initial_step: 1e-2,
            max_step: 1.0,
            safety: 0.9,
        }
    }
}

impl DopriConfig {
    pub fn validate(&self) -> Result<()> {
        let bad =
            |what: &str, v: f64| Err(Error::Parameter(format!("dopri45 {what} invalid: {v}")));
        if !(self.rel_tol > 0.0) {
            return bad("rel_tol", self.rel_tol);
        }
        if !(self.abs_tol > 0.0) {
            return bad("abs_tol", self.abs_tol);
        }
        if !(self.initial_step > 0.0 && self.initial_step <= self.max_step) {
            return bad("initial_step", self.initial_step);
        }
        if !(self.safety > 0.0 && self.safety < 1.0) {
            return bad("safety", self.safety);
        }
        Ok(())
    }
}

/// Samples plus step statistics of an adaptive run.
#[derive(Debug, Clone, PartialEq)]
pub struct DopriRun {
    pub samples: Vec<PhaseState>,
    pub accepted: usize,
    pub rejected: usize,
}

// The system is autonomous, so the stage nodes never enter.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// fifth-order weights minus embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const MIN_STEP: f64 = 1e-14;

/// Body-major flat vector field `dz/dt = J grad H`.
fn field<H: SplitHamiltonian + ?Sized>(
    h: &H,
    z: &[f64],
    g: &mut Gradient,
    out: &mut [f64],
) -> Result<()> {
    let s = PhaseState::from_flat(0.0, z)?;
    for (i, b) in s.bodies.iter().enumerate() {
        crate::phase::guard_theta(i, b.theta)?;
    }
    g.eval(h, &Columns::from(&s))?;
    for i in 0..s.n_bodies() {
        out[4 * i] = g.dh_dp_theta[i];
        out[4 * i + 1] = g.dh_dp_phi[i];
        out[4 * i + 2] = -g.dh_dtheta[i];
        out[4 * i + 3] = -g.dh_dphi[i];
    }
    Ok(())
}

/// Dormand–Prince 4(5) integration of Hamilton's equations from `s.t` to
/// `t_end`, sampled at `s.t + k * sample_every` and at `t_end`.
pub fn dopri45_integrate<H: SplitHamiltonian + ?Sized>(
    s: &PhaseState,
    h: &H,
    t_end: f64,
    cfg: &DopriConfig,
    sample_every: f64,
) -> Result<Vec<PhaseState>> {
    dopri45_integrate_with_stats(s, h, t_end, cfg, sample_every).map(|r| r.samples)
}

/// As [`dopri45_integrate`], also reporting accepted and rejected step counts.
///
/// Steps are clipped so every sample time is hit exactly; no interpolation.
pub fn dopri45_integrate_with_stats<H: SplitHamiltonian + ?Sized>(
    s: &PhaseState,
    h: &H,
    t_end: f64,
    cfg: &DopriConfig,
    sample_every: f64,
) -> Result<DopriRun> {
    cfg.validate()?;
    if !(t_end > s.t) {
        return Err(Error::Parameter(format!(
            "t_end ({t_end}) must exceed the start time ({})",
            s.t
        )));
    }
    if !(sample_every > 0.0) {
        return Err(Error::Parameter(format!(
            "sample cadence must be > 0, got {sample_every}"
        )));
    }
    entry_columns(s, h)?;

    let t0 = s.t;
    let dim = 4 * s.n_bodies();
    let mut g = Gradient::zeros(s.n_bodies());
    let mut z = s.to_flat();
    let mut k: [Vec<f64>; 7] = std::array::from_fn(|_| vec![0.0; dim]);
    let mut stage = vec![0.0; dim];
    let mut z_new = vec![0.0; dim];

    let mut samples = vec![s.clone()];
    let mut next_index = 1usize;
    let target_at = |idx: usize| (t0 + idx as f64 * sample_every).min(t_end);

    let mut t = t0;
    let mut step = cfg.initial_step.min(cfg.max_step);
    let (mut accepted, mut rejected) = (0usize, 0usize);
    field(h, &z, &mut g, &mut k[0])?;

    while t < t_end {
        let target = target_at(next_index);
        let remaining = target - t;
        let clipped = step >= remaining;
        let dt = if clipped { remaining } else { step };

        for st in 1..7 {
            for d in 0..dim {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(st) {
                    acc += A[st][j] * kj[d];
                }
                stage[d] = z[d] + dt * acc;
            }
            field(h, &stage, &mut g, &mut k[st]).map_err(|e| e.at_step(accepted + rejected + 1))?;
        }
        // stage 7 is evaluated at the fifth-order solution itself
        z_new.copy_from_slice(&stage);

        let mut err: f64 = 0.0;
        for d in 0..dim {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += E[j] * kj[d];
            }
            let scale = cfg.abs_tol + cfg.rel_tol * z[d].abs().max(z_new[d].abs());
            err = err.max((dt * e).abs() / scale);
        }
        if !err.is_finite() {
            err = f64::INFINITY;
        }

        if err <= 1.0 {
            accepted += 1;
            t = if clipped { target } else { t + dt };
            z.copy_from_slice(&z_new);
            k.swap(0, 6);
            let factor = if err == 0.0 {
                5.0
            } else {
                (cfg.safety * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            let proposal = (dt * factor).min(cfg.max_step);
            step = if clipped {
                proposal.max(step.min(cfg.max_step))
            } else {
                proposal
            };
            if clipped {
                let mut out = PhaseState::from_flat(t, &z)?;
                out.t = target;
                samples.push(out);
                next_index += 1;
            }
        } else {
            rejected += 1;
            let factor = (cfg.safety * err.powf(-0.2)).clamp(0.2, 1.0);
            step = dt * factor;
        }
        if step < MIN_STEP {
            return Err(Error::StepUnderflow { t, h: step });
        }
    }

    Ok(DopriRun {
        samples,
        accepted,
        rejected,
    })
}
