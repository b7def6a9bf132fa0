//! Split Hamiltonians `H = H1(p_theta) + H2(theta, p_phi) + H3(theta, phi)`.
//!
//! The trait methods take exactly the columns each part may depend on, so the
//! separation structure is enforced by the signatures themselves.

use crate::error::{Error, Result};
use crate::phase::{guard_theta, validate_state, Columns, PhaseState, SphereParams, ViolationKind};

/// Evaluator bundle for a Hamiltonian with the three-part split.
///
/// All slices are per-body columns of equal length [`SplitHamiltonian::n_bodies`].
pub trait SplitHamiltonian {
    fn n_bodies(&self) -> usize;

    fn h1(&self, p_theta: &[f64]) -> f64;
    fn h2(&self, theta: &[f64], p_phi: &[f64]) -> Result<f64>;
    fn h3(&self, theta: &[f64], phi: &[f64]) -> Result<f64>;

    fn dh1_dp_theta(&self, p_theta: &[f64], out: &mut [f64]);
    fn dh2_dp_phi(&self, theta: &[f64], p_phi: &[f64], out: &mut [f64]) -> Result<()>;
    fn dh2_dtheta(&self, theta: &[f64], p_phi: &[f64], out: &mut [f64]) -> Result<()>;
    /// Both gradients of the potential part at once.
    fn dh3(&self, theta: &[f64], phi: &[f64], d_theta: &mut [f64], d_phi: &mut [f64])
        -> Result<()>;

    fn energy(&self, s: &PhaseState) -> Result<f64> {
        self.check_len(s)?;
        let c = Columns::from(s);
        Ok(self.h1(&c.p_theta) + self.h2(&c.theta, &c.p_phi)? + self.h3(&c.theta, &c.phi)?)
    }

    fn partials(&self, s: &PhaseState) -> Result<Partials> {
        self.check_len(s)?;
        let c = Columns::from(s);
        let n = c.len();
        let mut p = Partials {
            dh1_dp_theta: vec![0.0; n],
            dh2_dp_phi: vec![0.0; n],
            dh2_dtheta: vec![0.0; n],
            dh3_dtheta: vec![0.0; n],
            dh3_dphi: vec![0.0; n],
        };
        self.dh1_dp_theta(&c.p_theta, &mut p.dh1_dp_theta);
        self.dh2_dp_phi(&c.theta, &c.p_phi, &mut p.dh2_dp_phi)?;
        self.dh2_dtheta(&c.theta, &c.p_phi, &mut p.dh2_dtheta)?;
        self.dh3(&c.theta, &c.phi, &mut p.dh3_dtheta, &mut p.dh3_dphi)?;
        Ok(p)
    }

    #[doc(hidden)]
    fn check_len(&self, s: &PhaseState) -> Result<()> {
        if s.n_bodies() != self.n_bodies() {
            return Err(Error::Dimension {
                expected: self.n_bodies(),
                found: s.n_bodies(),
            });
        }
        Ok(())
    }
}

/// The five derivative families consumed by the steppers.
#[derive(Debug, Clone, PartialEq)]
pub struct Partials {
    pub dh1_dp_theta: Vec<f64>,
    pub dh2_dp_phi: Vec<f64>,
    pub dh2_dtheta: Vec<f64>,
    pub dh3_dtheta: Vec<f64>,
    pub dh3_dphi: Vec<f64>,
}

/// N equal masses on a sphere interacting through the pair potential
/// `((sqrt(1 - x^2) - cos theta0) / x)^2`, `x = 2 sin(L / 2R) / sqrt(3)`,
/// with `L` the geodesic distance of the pair. Each unordered pair counts once.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereNBodyHamiltonian {
    pub params: SphereParams,
}

const CLAMP_TOL: f64 = 1e-12;

impl SphereNBodyHamiltonian {
    pub fn new(params: SphereParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params })
    }

    pub fn params(&self) -> &SphereParams {
        &self.params
    }

    fn inv_mass(&self) -> f64 {
        1.0 / self.params.mass
    }

    /// Squared chord factor `x^2` of a pair and its derivatives with respect to
    /// `(theta_i, theta_j, phi_i)`; the `phi_j` derivative is the negation of
    /// the `phi_i` one.
    #[inline]
    fn pair_geometry(ti: f64, tj: f64, pi: f64, pj: f64) -> (f64, [f64; 3]) {
        let (si, ci) = ti.sin_cos();
        let (sj, cj) = tj.sin_cos();
        let half_dt = 0.5 * (ti - tj);
        let dphi = pi - pj;
        let sh = (0.5 * dphi).sin();
        let sh2 = sh * sh;
        // chord^2 / R^2 = 4 [sin^2(dtheta/2) + sin(ti) sin(tj) sin^2(dphi/2)]
        let w = 4.0 / 3.0 * (half_dt.sin().powi(2) + si * sj * sh2);
        let sin_dt = (ti - tj).sin();
        let dw_dti = 4.0 / 3.0 * (0.5 * sin_dt + ci * sj * sh2);
        let dw_dtj = 4.0 / 3.0 * (-0.5 * sin_dt + si * cj * sh2);
        let dw_dpi = 2.0 / 3.0 * si * sj * dphi.sin();
        (w, [dw_dti, dw_dtj, dw_dpi])
    }

    fn clamp_w(&self, w: f64, i: usize, j: usize) -> Result<f64> {
        if !(w > 0.0) {
            return Err(Error::Domain(format!("bodies {i} and {j} coincide")));
        }
        if w > 1.0 + CLAMP_TOL {
            return Err(Error::Domain(format!(
                "bodies {i} and {j} are beyond the potential's range (x^2 = {w})"
            )));
        }
        Ok(w.min(1.0))
    }

    fn potential_of_w(&self, w: f64) -> f64 {
        let num = (1.0 - w).max(0.0).sqrt() - self.params.theta0.cos();
        num * num / w
    }
}

impl SplitHamiltonian for SphereNBodyHamiltonian {
    fn n_bodies(&self) -> usize {
        self.params.n_bodies
    }

    fn h1(&self, p_theta: &[f64]) -> f64 {
        0.5 * self.inv_mass() * p_theta.iter().map(|p| p * p).sum::<f64>()
    }

    fn h2(&self, theta: &[f64], p_phi: &[f64]) -> Result<f64> {
        let mut acc = 0.0;
        for (i, (&t, &p)) in theta.iter().zip(p_phi).enumerate() {
            let s = guard_theta(i, t)?;
            let q = p / s;
            acc += q * q;
        }
        Ok(0.5 * self.inv_mass() * acc)
    }

    fn h3(&self, theta: &[f64], phi: &[f64]) -> Result<f64> {
        let n = theta.len();
        let mut acc = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let (w, _) = Self::pair_geometry(theta[i], theta[j], phi[i], phi[j]);
                let w = self.clamp_w(w, i, j)?;
                acc += self.potential_of_w(w);
            }
        }
        Ok(acc)
    }

    fn dh1_dp_theta(&self, p_theta: &[f64], out: &mut [f64]) {
        let k = self.inv_mass();
        for (o, p) in out.iter_mut().zip(p_theta) {
            *o = k * p;
        }
    }

    fn dh2_dp_phi(&self, theta: &[f64], p_phi: &[f64], out: &mut [f64]) -> Result<()> {
        let k = self.inv_mass();
        for (i, ((o, &t), &p)) in out.iter_mut().zip(theta).zip(p_phi).enumerate() {
            let s = guard_theta(i, t)?;
            *o = k * p / (s * s);
        }
        Ok(())
    }

    fn dh2_dtheta(&self, theta: &[f64], p_phi: &[f64], out: &mut [f64]) -> Result<()> {
        let k = self.inv_mass();
        for (i, ((o, &t), &p)) in out.iter_mut().zip(theta).zip(p_phi).enumerate() {
            let s = guard_theta(i, t)?;
            *o = -k * p * p * t.cos() / (s * s * s);
        }
        Ok(())
    }

    fn dh3(
        &self,
        theta: &[f64],
        phi: &[f64],
        d_theta: &mut [f64],
        d_phi: &mut [f64],
    ) -> Result<()> {
        let n = theta.len();
        d_theta.fill(0.0);
        d_phi.fill(0.0);
        let c0 = self.params.theta0.cos();
        for i in 0..n {
            for j in i + 1..n {
                let (w, [dti, dtj, dpi]) = Self::pair_geometry(theta[i], theta[j], phi[i], phi[j]);
                let w = self.clamp_w(w, i, j)?;
                let s = (1.0 - w).max(0.0).sqrt();
                if s == 0.0 {
                    return Err(Error::Domain(format!(
                        "potential gradient unbounded for pair ({i}, {j}) at x = 1"
                    )));
                }
                let num = s - c0;
                // d/dw [ (sqrt(1-w) - c0)^2 / w ]
                let dp_dw = -num * (w / s + num) / (w * w);
                d_theta[i] += dp_dw * dti;
                d_theta[j] += dp_dw * dtj;
                let f = dp_dw * dpi;
                d_phi[i] += f;
                d_phi[j] -= f;
            }
        }
        Ok(())
    }
}

/// Great-circle distance on a sphere of radius `r`, through the chord length
/// of the embedded points and `L = 2R asin(chord / 2R)`.
pub fn geodesic_distance(a: &crate::phase::BodyState, b: &crate::phase::BodyState, r: f64) -> f64 {
    let ua = a.unit_vector();
    let ub = b.unit_vector();
    let chord = r * ua
        .iter()
        .zip(&ub)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    let arg = (chord / (2.0 * r)).clamp(-1.0, 1.0);
    2.0 * r * arg.asin()
}

/// Pair potential as a function of the geodesic separation `l`.
pub fn pair_potential(l: f64, params: &SphereParams) -> Result<f64> {
    if !(l > 0.0) {
        return Err(Error::Domain(format!(
            "pair separation must be > 0, got {l}"
        )));
    }
    let x = 2.0 * (l / (2.0 * params.radius)).sin() / 3f64.sqrt();
    if x > 1.0 + CLAMP_TOL {
        return Err(Error::Domain(format!("chord factor {x} exceeds 1")));
    }
    let x = x.clamp(f64::MIN_POSITIVE, 1.0);
    let num = (1.0 - x * x).max(0.0).sqrt() - params.theta0.cos();
    Ok((num / x).powi(2))
}

fn checked<'a>(s: &'a PhaseState, h: &SphereNBodyHamiltonian) -> Result<&'a PhaseState> {
    match validate_state(s, &h.params) {
        Ok(()) => Ok(s),
        Err(v) => Err(match v.kind {
            ViolationKind::BodyCount { expected, found } => Error::Dimension { expected, found },
            ViolationKind::PoleProximity => Error::Singularity {
                body: v.body,
                theta: s.bodies[v.body].theta,
            },
            ViolationKind::NonFinite => Error::Domain(v.to_string()),
        }),
    }
}

/// `H1 + H2 + H3` for a validated state.
pub fn total_energy(s: &PhaseState, h: &SphereNBodyHamiltonian) -> Result<f64> {
    h.energy(checked(s, h)?)
}

pub fn partials(s: &PhaseState, h: &SphereNBodyHamiltonian) -> Result<Partials> {
    h.partials(checked(s, h)?)
}
