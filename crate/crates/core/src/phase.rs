//! Canonical phase-space state for N bodies on a sphere.
//!
//! Each body carries `(theta, phi, p_theta, p_phi)`: colatitude, azimuth and
//! their conjugate momenta. Azimuths are stored unwrapped so that distances
//! between states (and the closure test of periodic orbits) are not polluted
//! by `2π` jumps.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible `|sin theta|` before a kinetic evaluation.
pub const POLE_GUARD: f64 = 1e-8;

/// Physical parameters shared by every body.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereParams {
    pub n_bodies: usize,
    pub mass: f64,
    pub radius: f64,
    /// Equilibrium colatitude of the pair potential.
    pub theta0: f64,
}

impl SphereParams {
    pub fn new(n_bodies: usize, mass: f64, radius: f64, theta0: f64) -> Result<Self> {
        let p = Self {
            n_bodies,
            mass,
            radius,
            theta0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_bodies == 0 {
            return Err(Error::Parameter("n_bodies must be at least 1".into()));
        }
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return Err(Error::Parameter(format!(
                "mass must be > 0, got {}",
                self.mass
            )));
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::Parameter(format!(
                "radius must be > 0, got {}",
                self.radius
            )));
        }
        if !(self.theta0 > 0.0 && self.theta0 < PI) {
            return Err(Error::Parameter(format!(
                "theta0 must lie in (0, pi), got {}",
                self.theta0
            )));
        }
        Ok(())
    }
}

impl Default for SphereParams {
    fn default() -> Self {
        Self {
            n_bodies: 3,
            mass: 1.0,
            radius: 1.0,
            theta0: PI / 4.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BodyState {
    pub theta: f64,
    pub phi: f64,
    pub p_theta: f64,
    pub p_phi: f64,
}

impl BodyState {
    pub const fn new(theta: f64, phi: f64, p_theta: f64, p_phi: f64) -> Self {
        Self {
            theta,
            phi,
            p_theta,
            p_phi,
        }
    }

    pub fn components(&self) -> [f64; 4] {
        [self.theta, self.phi, self.p_theta, self.p_phi]
    }

    /// Unit vector of the body's position in the embedding space.
    pub fn unit_vector(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }
}

/// Time plus one [`BodyState`] per body.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseState {
    pub t: f64,
    pub bodies: Vec<BodyState>,
}

impl PhaseState {
    pub fn new(t: f64, bodies: Vec<BodyState>) -> Self {
        Self { t, bodies }
    }

    pub fn n_bodies(&self) -> usize {
        self.bodies.len()
    }

    /// Flattened canonical components, body-major: `theta_1, phi_1, p_theta_1, p_phi_1, theta_2, ...`.
    pub fn to_flat(&self) -> Vec<f64> {
        self.bodies.iter().flat_map(|b| b.components()).collect()
    }

    /// Inverse of [`PhaseState::to_flat`].
    pub fn from_flat(t: f64, flat: &[f64]) -> Result<Self> {
        if !flat.len().is_multiple_of(4) {
            return Err(Error::Domain(format!(
                "flat state length {} is not a multiple of 4",
                flat.len()
            )));
        }
        let bodies = flat
            .chunks_exact(4)
            .map(|c| BodyState::new(c[0], c[1], c[2], c[3]))
            .collect();
        Ok(Self { t, bodies })
    }

    pub fn total_p_phi(&self) -> f64 {
        self.bodies.iter().map(|b| b.p_phi).sum()
    }
}

/// Column (structure-of-arrays) view of a [`PhaseState`], the layout the
/// steppers work in.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Columns {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub p_theta: Vec<f64>,
    pub p_phi: Vec<f64>,
}

impl Columns {
    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn into_state(self, t: f64) -> PhaseState {
        let bodies = (0..self.len())
            .map(|i| BodyState::new(self.theta[i], self.phi[i], self.p_theta[i], self.p_phi[i]))
            .collect();
        PhaseState { t, bodies }
    }
}

impl From<&PhaseState> for Columns {
    fn from(s: &PhaseState) -> Self {
        Self {
            theta: s.bodies.iter().map(|b| b.theta).collect(),
            phi: s.bodies.iter().map(|b| b.phi).collect(),
            p_theta: s.bodies.iter().map(|b| b.p_theta).collect(),
            p_phi: s.bodies.iter().map(|b| b.p_phi).collect(),
        }
    }
}

/// Max-norm over all canonical components of `a - b`; time is ignored and
/// azimuths are compared unwrapped.
pub fn state_distance(a: &PhaseState, b: &PhaseState) -> Result<f64> {
    if a.n_bodies() != b.n_bodies() {
        return Err(Error::Dimension {
            expected: a.n_bodies(),
            found: b.n_bodies(),
        });
    }
    Ok(a.bodies
        .iter()
        .zip(&b.bodies)
        .flat_map(|(x, y)| {
            let (x, y) = (x.components(), y.components());
            (0..4).map(move |k| (x[k] - y[k]).abs())
        })
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateField {
    Theta,
    Phi,
    PTheta,
    PPhi,
}

impl fmt::Display for StateField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StateField::Theta => "theta",
            StateField::Phi => "phi",
            StateField::PTheta => "p_theta",
            StateField::PPhi => "p_phi",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    NonFinite,
    PoleProximity,
    BodyCount { expected: usize, found: usize },
}

/// First problem found by [`validate_state`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Violation {
    pub body: usize,
    pub field: StateField,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ViolationKind::NonFinite => {
                write!(f, "body {}: {} is not finite", self.body, self.field)
            }
            ViolationKind::PoleProximity => {
                write!(f, "body {}: |sin theta| below {POLE_GUARD:e}", self.body)
            }
            ViolationKind::BodyCount { expected, found } => {
                write!(f, "expected {expected} bodies, found {found}")
            }
        }
    }
}

/// Diagnostic check; never fails, returns the first violation instead.
pub fn validate_state(s: &PhaseState, params: &SphereParams) -> std::result::Result<(), Violation> {
    if s.n_bodies() != params.n_bodies {
        return Err(Violation {
            body: 0,
            field: StateField::Theta,
            kind: ViolationKind::BodyCount {
                expected: params.n_bodies,
                found: s.n_bodies(),
            },
        });
    }
    for (i, b) in s.bodies.iter().enumerate() {
        let fields = [
            (StateField::Theta, b.theta),
            (StateField::Phi, b.phi),
            (StateField::PTheta, b.p_theta),
            (StateField::PPhi, b.p_phi),
        ];
        if let Some((field, _)) = fields.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Violation {
                body: i,
                field: *field,
                kind: ViolationKind::NonFinite,
            });
        }
        if b.theta.sin().abs() < POLE_GUARD {
            return Err(Violation {
                body: i,
                field: StateField::Theta,
                kind: ViolationKind::PoleProximity,
            });
        }
    }
    Ok(())
}

/// Pole guard for a single colatitude.
#[inline]
pub(crate) fn guard_theta(body: usize, theta: f64) -> Result<f64> {
    let s = theta.sin();
    if s.abs() < POLE_GUARD || !s.is_finite() {
        return Err(Error::Singularity { body, theta });
    }
    Ok(s)
}
