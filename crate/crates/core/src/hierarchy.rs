//! Explicit symplectic stepping for any Hamiltonian whose kinetic energy is a
//! sum of hierarchical terms `K_i(q_1, .., q_{i-1}, p_i)` plus a potential
//! `V(q)`.
//!
//! The state is a flat vector `(q_0, .., q_{d-1}, p_0, .., p_{d-1})` and all
//! indices are zero-based. For the sphere the coordinates are interleaved per
//! body, `q = (theta_0, phi_0, theta_1, phi_1, ..)`, so each azimuthal term
//! follows the colatitude it depends on.
//!
//! A half step updates the coordinates in ascending order, each from the
//! already advanced lower coordinates and the old momentum, then kicks all
//! momenta with the forces at the new coordinates and the old momenta. This is
//! symplectic Euler made explicit by the hierarchy. The second half step is
//! its adjoint: momenta in descending order, each using the already kicked
//! higher momenta, then coordinates in descending order. The composition is
//! symmetric and second order.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hamiltonian::{SphereNBodyHamiltonian, SplitHamiltonian};
use crate::integrators::YoshidaCoefficients;
use crate::phase::{guard_theta, BodyState, PhaseState};

/// One hierarchical kinetic term `K_i`. Implementations receive the whole
/// state but must only read `q_j` for `j < i` and `p_i`; this is audited by
/// [`validate_hierarchy`].
pub trait KineticTerm: Send + Sync {
    fn value(&self, q: &[f64], p: &[f64]) -> Result<f64>;
    /// `dK_i/dp_i`.
    fn dp(&self, q: &[f64], p: &[f64]) -> Result<f64>;
    /// Adds `dK_i/dq_j` into `out[j]` for every `j < i`.
    fn add_dq(&self, q: &[f64], p: &[f64], out: &mut [f64]) -> Result<()>;
}

pub trait Potential: Send + Sync {
    fn value(&self, q: &[f64]) -> Result<f64>;
    /// Writes `dV/dq` into `out`.
    fn grad(&self, q: &[f64], out: &mut [f64]) -> Result<()>;
}

/// Variable read by a term it must not depend on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variable {
    Q(usize),
    P(usize),
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variable::Q(j) => write!(f, "q[{j}]"),
            Variable::P(j) => write!(f, "p[{j}]"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HierarchyViolation {
    pub term: usize,
    pub variable: Variable,
}

impl fmt::Display for HierarchyViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "kinetic term {} depends on {}", self.term, self.variable)
    }
}

impl From<HierarchyViolation> for Error {
    fn from(v: HierarchyViolation) -> Self {
        Error::Structure {
            term: v.term,
            variable: v.variable.to_string(),
        }
    }
}

const VALIDATION_SEED: u64 = 0x5e51;

/// Evaluates every output of term `i` at `(q, p)`: value, `dK/dp_i` and the
/// `dK/dq` row.
fn fingerprint(k: &dyn KineticTerm, q: &[f64], p: &[f64]) -> Result<Vec<u64>> {
    let mut dq = vec![0.0; q.len()];
    k.add_dq(q, p, &mut dq)?;
    let mut out = vec![k.value(q, p)?.to_bits(), k.dp(q, p)?.to_bits()];
    out.extend(dq.iter().map(|v| v.to_bits()));
    Ok(out)
}

/// Audits the declared hierarchy on `probes` seeded random states with all
/// entries in `[0.25, 1.25]`: replacing any excluded variable must leave the
/// value and partials of each `K_i` bit-identical. Evaluation failures at a
/// probe count as violations of the perturbed variable.
pub fn validate_hierarchy(
    kinetic: &[Box<dyn KineticTerm>],
    probes: usize,
) -> std::result::Result<(), HierarchyViolation> {
    let d = kinetic.len();
    let mut rng = ChaCha8Rng::seed_from_u64(VALIDATION_SEED);
    for _ in 0..probes.max(1) {
        let q: Vec<f64> = (0..d).map(|_| rng.gen_range(0.25..1.25)).collect();
        let p: Vec<f64> = (0..d).map(|_| rng.gen_range(0.25..1.25)).collect();
        for (i, k) in kinetic.iter().enumerate() {
            let excluded = (i..d)
                .map(Variable::Q)
                .chain((0..d).filter(|&j| j != i).map(Variable::P));
            let base = fingerprint(k.as_ref(), &q, &p);
            for var in excluded {
                let (mut q2, mut p2) = (q.clone(), p.clone());
                let shifted = rng.gen_range(0.25..1.25);
                match var {
                    Variable::Q(j) => q2[j] = shifted,
                    Variable::P(j) => p2[j] = shifted,
                }
                let same = match (&base, fingerprint(k.as_ref(), &q2, &p2)) {
                    (Ok(a), Ok(b)) => *a == b,
                    (Err(_), Err(_)) => true,
                    _ => false,
                };
                if !same {
                    return Err(HierarchyViolation {
                        term: i,
                        variable: var,
                    });
                }
            }
        }
    }
    Ok(())
}

/// A validated hierarchical Hamiltonian `sum_i K_i + V`.
pub struct HierarchicalHamiltonian {
    kinetic: Vec<Box<dyn KineticTerm>>,
    potential: Box<dyn Potential>,
}

impl fmt::Debug for HierarchicalHamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HierarchicalHamiltonian")
            .field("dim", &self.dim())
            .finish_non_exhaustive()
    }
}

impl HierarchicalHamiltonian {
    pub const DEFAULT_PROBES: usize = 16;

    /// Builds the Hamiltonian after auditing the hierarchy with `probes`
    /// random states; a violation is a structure error.
    pub fn new(
        kinetic: Vec<Box<dyn KineticTerm>>,
        potential: Box<dyn Potential>,
        probes: usize,
    ) -> Result<Self> {
        if kinetic.is_empty() {
            return Err(Error::Parameter(
                "at least one kinetic term is required".into(),
            ));
        }
        validate_hierarchy(&kinetic, probes)?;
        Ok(Self { kinetic, potential })
    }

    /// Number of coordinates `d`; the flat state has length `2d`.
    pub fn dim(&self) -> usize {
        self.kinetic.len()
    }

    pub fn energy(&self, z: &[f64]) -> Result<f64> {
        let (q, p) = self.split(z)?;
        let mut e = self.potential.value(q)?;
        for k in &self.kinetic {
            e += k.value(q, p)?;
        }
        Ok(e)
    }

    fn split<'a>(&self, z: &'a [f64]) -> Result<(&'a [f64], &'a [f64])> {
        let d = self.dim();
        if z.len() != 2 * d {
            return Err(Error::Dimension {
                expected: 2 * d,
                found: z.len(),
            });
        }
        Ok(z.split_at(d))
    }
}

/// Symmetric second-order step of the hierarchical scheme.
pub fn hierarchical_step2(z: &[f64], h: &HierarchicalHamiltonian, tau: f64) -> Result<Vec<f64>> {
    let (q0, p0) = h.split(z)?;
    let d = h.dim();
    let half = 0.5 * tau;
    let mut q = q0.to_vec();
    let mut p = p0.to_vec();
    let mut force = vec![0.0; d];

    for i in 0..d {
        q[i] += half * h.kinetic[i].dp(&q, &p)?;
    }

    h.potential.grad(&q, &mut force)?;
    for k in &h.kinetic {
        k.add_dq(&q, &p, &mut force)?;
    }
    for j in 0..d {
        p[j] -= half * force[j];
    }

    // force[j] collects dK_k/dq_j only from terms k > j whose momentum is final
    h.potential.grad(&q, &mut force)?;
    for j in (0..d).rev() {
        p[j] -= half * force[j];
        h.kinetic[j].add_dq(&q, &p, &mut force)?;
    }

    for i in (0..d).rev() {
        q[i] += half * h.kinetic[i].dp(&q, &p)?;
    }

    q.extend_from_slice(&p);
    Ok(q)
}

/// Yoshida triple concatenation of [`hierarchical_step2`].
pub fn hierarchical_step4(z: &[f64], h: &HierarchicalHamiltonian, tau: f64) -> Result<Vec<f64>> {
    let mut cur = z.to_vec();
    for sub in YoshidaCoefficients::new(tau).as_array() {
        cur = hierarchical_step2(&cur, h, sub)?;
    }
    Ok(cur)
}

/// `K = p_theta^2 / 2m` of one body.
struct PolarKinetic {
    index: usize,
    inv_mass: f64,
}

impl KineticTerm for PolarKinetic {
    fn value(&self, _q: &[f64], p: &[f64]) -> Result<f64> {
        Ok(0.5 * self.inv_mass * p[self.index] * p[self.index])
    }
    fn dp(&self, _q: &[f64], p: &[f64]) -> Result<f64> {
        Ok(self.inv_mass * p[self.index])
    }
    fn add_dq(&self, _q: &[f64], _p: &[f64], _out: &mut [f64]) -> Result<()> {
        Ok(())
    }
}

/// `K = p_phi^2 / (2m sin^2 theta)` of one body; `index` is the azimuth slot,
/// its colatitude sits at `index - 1`.
struct AzimuthalKinetic {
    index: usize,
    inv_mass: f64,
}

impl AzimuthalKinetic {
    fn sin_theta(&self, q: &[f64]) -> Result<f64> {
        guard_theta(self.index / 2, q[self.index - 1])
    }
}

impl KineticTerm for AzimuthalKinetic {
    fn value(&self, q: &[f64], p: &[f64]) -> Result<f64> {
        let s = self.sin_theta(q)?;
        Ok(0.5 * self.inv_mass * p[self.index] * p[self.index] / (s * s))
    }
    fn dp(&self, q: &[f64], p: &[f64]) -> Result<f64> {
        let s = self.sin_theta(q)?;
        Ok(self.inv_mass * p[self.index] / (s * s))
    }
    fn add_dq(&self, q: &[f64], p: &[f64], out: &mut [f64]) -> Result<()> {
        let s = self.sin_theta(q)?;
        let c = q[self.index - 1].cos();
        let pp = p[self.index];
        out[self.index - 1] -= self.inv_mass * pp * pp * c / (s * s * s);
        Ok(())
    }
}

/// The pair potential of the sphere Hamiltonian on interleaved coordinates.
struct SpherePotential(SphereNBodyHamiltonian);

fn deinterleave(q: &[f64]) -> (Vec<f64>, Vec<f64>) {
    (
        q.iter().step_by(2).copied().collect(),
        q.iter().skip(1).step_by(2).copied().collect(),
    )
}

impl Potential for SpherePotential {
    fn value(&self, q: &[f64]) -> Result<f64> {
        let (theta, phi) = deinterleave(q);
        self.0.h3(&theta, &phi)
    }
    fn grad(&self, q: &[f64], out: &mut [f64]) -> Result<()> {
        let (theta, phi) = deinterleave(q);
        let n = theta.len();
        let (mut dt, mut dp) = (vec![0.0; n], vec![0.0; n]);
        self.0.dh3(&theta, &phi, &mut dt, &mut dp)?;
        for b in 0..n {
            out[2 * b] = dt[b];
            out[2 * b + 1] = dp[b];
        }
        Ok(())
    }
}

/// The sphere N-body Hamiltonian declared as hierarchical terms.
pub fn sphere_hierarchy(h: &SphereNBodyHamiltonian) -> Result<HierarchicalHamiltonian> {
    let inv_mass = 1.0 / h.params().mass;
    let mut kinetic: Vec<Box<dyn KineticTerm>> = Vec::new();
    for b in 0..h.n_bodies() {
        kinetic.push(Box::new(PolarKinetic {
            index: 2 * b,
            inv_mass,
        }));
        kinetic.push(Box::new(AzimuthalKinetic {
            index: 2 * b + 1,
            inv_mass,
        }));
    }
    HierarchicalHamiltonian::new(
        kinetic,
        Box::new(SpherePotential(*h)),
        HierarchicalHamiltonian::DEFAULT_PROBES,
    )
}

/// Interleaved hierarchical layout `(theta_0, phi_0, .., p_theta_0, p_phi_0, ..)`.
pub fn to_hierarchical_flat(s: &PhaseState) -> Vec<f64> {
    let q = s.bodies.iter().flat_map(|b| [b.theta, b.phi]);
    let p = s.bodies.iter().flat_map(|b| [b.p_theta, b.p_phi]);
    q.chain(p).collect()
}

pub fn from_hierarchical_flat(t: f64, z: &[f64]) -> Result<PhaseState> {
    if !z.len().is_multiple_of(4) {
        return Err(Error::Dimension {
            expected: 4 * (z.len() / 4 + 1),
            found: z.len(),
        });
    }
    let n = z.len() / 4;
    let (q, p) = z.split_at(2 * n);
    Ok(PhaseState::new(
        t,
        (0..n)
            .map(|b| BodyState::new(q[2 * b], q[2 * b + 1], p[2 * b], p[2 * b + 1]))
            .collect(),
    ))
}

/// `max |M^T J M - J|` for the finite-difference Jacobian `M` of `map` at `z`,
/// with `z = (q, p)` split in halves. Central differences of width `eps`.
pub fn symplectic_defect(
    map: impl Fn(&[f64]) -> Result<Vec<f64>>,
    z: &[f64],
    eps: f64,
) -> Result<f64> {
    let n = z.len();
    let d = n / 2;
    // m[r][c] = d map_r / d z_c
    let mut m = vec![vec![0.0; n]; n];
    for c in 0..n {
        let mut zp = z.to_vec();
        let mut zm = z.to_vec();
        zp[c] += eps;
        zm[c] -= eps;
        let (fp, fm) = (map(&zp)?, map(&zm)?);
        for r in 0..n {
            m[r][c] = (fp[r] - fm[r]) / (2.0 * eps);
        }
    }
    // (M^T J M)_{ab} = sum_k M_{k a} (J M)_{k b}, with (J M)_k = M_{k+d} for k < d
    // and -M_{k-d} otherwise.
    let mut worst: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            let mut acc = 0.0;
            for k in 0..d {
                acc += m[k][a] * m[k + d][b] - m[k + d][a] * m[k][b];
            }
            let j = if b == a + d && a < d {
                1.0
            } else if a == b + d && b < d {
                -1.0
            } else {
                0.0
            };
            worst = worst.max((acc - j).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrators::{sesi2_step, sesi4_step};
    use crate::phase::SphereParams;
    use std::f64::consts::PI;

    fn sphere() -> SphereNBodyHamiltonian {
        SphereNBodyHamiltonian::new(SphereParams {
            mass: 1.3,
            ..SphereParams::default()
        })
        .unwrap()
    }

    fn random_sphere_state(rng: &mut impl Rng) -> PhaseState {
        PhaseState::new(
            0.0,
            (0..3)
                .map(|k| {
                    BodyState::new(
                        rng.gen_range(0.5..1.0),
                        2.0 * PI * k as f64 / 3.0 + rng.gen_range(-0.3..0.3),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                    )
                })
                .collect(),
        )
    }

    /// `K_i = p_i^2 (1 + sum_{j<i} b_ij q_j^2) / 2 + c_i p_i sum_{j<i} q_j`.
    struct PolyKinetic {
        index: usize,
        b: Vec<f64>,
        c: f64,
    }

    impl KineticTerm for PolyKinetic {
        fn value(&self, q: &[f64], p: &[f64]) -> Result<f64> {
            let i = self.index;
            let g: f64 = 1.0 + (0..i).map(|j| self.b[j] * q[j] * q[j]).sum::<f64>();
            let lin: f64 = q[..i].iter().sum();
            Ok(0.5 * p[i] * p[i] * g + self.c * p[i] * lin)
        }
        fn dp(&self, q: &[f64], p: &[f64]) -> Result<f64> {
            let i = self.index;
            let g: f64 = 1.0 + (0..i).map(|j| self.b[j] * q[j] * q[j]).sum::<f64>();
            let lin: f64 = q[..i].iter().sum();
            Ok(p[i] * g + self.c * lin)
        }
        fn add_dq(&self, q: &[f64], p: &[f64], out: &mut [f64]) -> Result<()> {
            let i = self.index;
            for j in 0..i {
                out[j] += p[i] * p[i] * self.b[j] * q[j] + self.c * p[i];
            }
            Ok(())
        }
    }

    /// `V = sum_j a_j q_j^2 / 2 + e q_0 q_1 + f q_0^3 / 3`.
    struct PolyPotential {
        a: Vec<f64>,
        e: f64,
        f: f64,
    }

    impl Potential for PolyPotential {
        fn value(&self, q: &[f64]) -> Result<f64> {
            let quad: f64 = self.a.iter().zip(q).map(|(a, x)| 0.5 * a * x * x).sum();
            Ok(quad + self.e * q[0] * q[1] + self.f * q[0].powi(3) / 3.0)
        }
        fn grad(&self, q: &[f64], out: &mut [f64]) -> Result<()> {
            for (o, (a, x)) in out.iter_mut().zip(self.a.iter().zip(q)) {
                *o = a * x;
            }
            out[0] += self.e * q[1] + self.f * q[0] * q[0];
            out[1] += self.e * q[0];
            Ok(())
        }
    }

    fn random_poly(rng: &mut impl Rng, d: usize, coupled: bool) -> HierarchicalHamiltonian {
        let kinetic: Vec<Box<dyn KineticTerm>> = (0..d)
            .map(|i| {
                let b = (0..i)
                    .map(|_| {
                        if coupled {
                            rng.gen_range(0.0..0.5)
                        } else {
                            0.0
                        }
                    })
                    .collect();
                let c = if coupled {
                    rng.gen_range(-0.3..0.3)
                } else {
                    0.0
                };
                Box::new(PolyKinetic { index: i, b, c }) as Box<dyn KineticTerm>
            })
            .collect();
        let potential = PolyPotential {
            a: (0..d).map(|_| rng.gen_range(0.5..2.0)).collect(),
            e: rng.gen_range(-0.3..0.3),
            f: rng.gen_range(-0.2..0.2),
        };
        HierarchicalHamiltonian::new(kinetic, Box::new(potential), 8).unwrap()
    }

    #[test]
    fn sphere_declaration_is_hierarchical() {
        assert!(sphere_hierarchy(&sphere()).is_ok());
    }

    /// Reads `p[leak]` although it is term `index`.
    struct Leaky {
        index: usize,
        leak: Variable,
    }

    impl KineticTerm for Leaky {
        fn value(&self, q: &[f64], p: &[f64]) -> Result<f64> {
            let extra = match self.leak {
                Variable::Q(j) => q[j],
                Variable::P(j) => p[j],
            };
            Ok(p[self.index] * p[self.index] + 1e-3 * extra)
        }
        fn dp(&self, _q: &[f64], p: &[f64]) -> Result<f64> {
            Ok(2.0 * p[self.index])
        }
        fn add_dq(&self, _q: &[f64], _p: &[f64], _out: &mut [f64]) -> Result<()> {
            Ok(())
        }
    }

    fn with_term(term: Leaky) -> Vec<Box<dyn KineticTerm>> {
        let honest = PolarKinetic {
            index: 0,
            inv_mass: 1.0,
        };
        vec![Box::new(honest), Box::new(term)]
    }

    #[test]
    fn violations_are_located() {
        let k = with_term(Leaky {
            index: 1,
            leak: Variable::P(0),
        });
        let v = validate_hierarchy(&k, 4).unwrap_err();
        assert_eq!(
            v,
            HierarchyViolation {
                term: 1,
                variable: Variable::P(0)
            }
        );

        let k = with_term(Leaky {
            index: 1,
            leak: Variable::Q(1),
        });
        let v = validate_hierarchy(&k, 4).unwrap_err();
        assert_eq!(
            v,
            HierarchyViolation {
                term: 1,
                variable: Variable::Q(1)
            }
        );

        let k = with_term(Leaky {
            index: 1,
            leak: Variable::Q(0),
        });
        assert!(validate_hierarchy(&k, 4).is_ok());

        let k = with_term(Leaky {
            index: 1,
            leak: Variable::P(0),
        });
        let pot = PolyPotential {
            a: vec![1.0, 1.0],
            e: 0.0,
            f: 0.0,
        };
        let err = HierarchicalHamiltonian::new(k, Box::new(pot), 4).unwrap_err();
        assert!(matches!(err, Error::Structure { term: 1, .. }));
    }

    #[test]
    fn first_term_may_not_read_its_own_coordinate() {
        let k: Vec<Box<dyn KineticTerm>> = vec![Box::new(Leaky {
            index: 0,
            leak: Variable::Q(0),
        })];
        let v = validate_hierarchy(&k, 2).unwrap_err();
        assert_eq!(
            v,
            HierarchyViolation {
                term: 0,
                variable: Variable::Q(0)
            }
        );
    }

    #[test]
    fn matches_sesi_on_the_sphere() {
        let h = sphere();
        let hh = sphere_hierarchy(&h).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..300 {
            let s = random_sphere_state(&mut rng);
            let tau = rng.gen_range(0.01..0.2);
            let z = to_hierarchical_flat(&s);
            let a =
                from_hierarchical_flat(0.0, &hierarchical_step2(&z, &hh, tau).unwrap()).unwrap();
            let b = sesi2_step(&s, &h, tau).unwrap();
            for (x, y) in a.to_flat().iter().zip(b.to_flat()) {
                assert!((x - y).abs() <= 1e-14, "{x} {y}");
            }
            let a =
                from_hierarchical_flat(0.0, &hierarchical_step4(&z, &hh, tau).unwrap()).unwrap();
            let b = sesi4_step(&s, &h, tau).unwrap();
            for (x, y) in a.to_flat().iter().zip(b.to_flat()) {
                assert!((x - y).abs() <= 1e-13, "{x} {y}");
            }
        }
    }

    #[test]
    fn separable_case_is_stormer_verlet() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = 4;
        let h = random_poly(&mut rng, d, false);
        for _ in 0..50 {
            let z: Vec<f64> = (0..2 * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let tau = 0.1;
            let got = hierarchical_step2(&z, &h, tau).unwrap();
            // leapfrog, drift-kick-drift, unit masses
            let (q, p) = z.split_at(d);
            let qh: Vec<f64> = q.iter().zip(p).map(|(q, p)| q + 0.5 * tau * p).collect();
            let mut g = vec![0.0; d];
            h.potential.grad(&qh, &mut g).unwrap();
            let p1: Vec<f64> = p.iter().zip(&g).map(|(p, g)| p - tau * g).collect();
            let q1: Vec<f64> = qh.iter().zip(&p1).map(|(q, p)| q + 0.5 * tau * p).collect();
            for (x, y) in got.iter().zip(q1.iter().chain(&p1)) {
                assert!((x - y).abs() <= 1e-15, "{x} {y}");
            }
        }
    }

    struct Zero;
    impl Potential for Zero {
        fn value(&self, _q: &[f64]) -> Result<f64> {
            Ok(0.0)
        }
        fn grad(&self, _q: &[f64], out: &mut [f64]) -> Result<()> {
            out.fill(0.0);
            Ok(())
        }
    }

    #[test]
    fn free_flow() {
        let kinetic: Vec<Box<dyn KineticTerm>> = (0..3)
            .map(|i| {
                Box::new(PolarKinetic {
                    index: i,
                    inv_mass: 1.0,
                }) as Box<dyn KineticTerm>
            })
            .collect();
        let h = HierarchicalHamiltonian::new(kinetic, Box::new(Zero), 4).unwrap();
        let z = [0.5, -1.0, 2.0, 0.25, 0.5, -0.75];
        let out = hierarchical_step2(&z, &h, 0.5).unwrap();
        assert_eq!(out, vec![0.625, -0.75, 1.625, 0.25, 0.5, -0.75]);
        let fixed = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(hierarchical_step4(&fixed, &h, 0.3).unwrap(), fixed.to_vec());
    }

    #[test]
    fn reversible_and_symplectic_on_random_polynomials() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..40 {
            let d = rng.gen_range(2..5);
            let h = random_poly(&mut rng, d, true);
            let z: Vec<f64> = (0..2 * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let tau = rng.gen_range(0.02..0.2);
            let fwd = hierarchical_step2(&z, &h, tau).unwrap();
            let back = hierarchical_step2(&fwd, &h, -tau).unwrap();
            for (x, y) in back.iter().zip(&z) {
                assert!((x - y).abs() <= 1e-12);
            }
            let defect = symplectic_defect(|x| hierarchical_step2(x, &h, tau), &z, 1e-5).unwrap();
            assert!(defect <= 1e-6, "{defect}");
        }
    }

    #[test]
    fn energy_error_is_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let h = random_poly(&mut rng, 3, true);
        let mut z = vec![0.3, -0.2, 0.1, 0.2, 0.1, -0.3];
        let e0 = h.energy(&z).unwrap();
        let mut worst: f64 = 0.0;
        for _ in 0..5000 {
            z = hierarchical_step2(&z, &h, 0.05).unwrap();
            worst = worst.max((h.energy(&z).unwrap() - e0).abs());
        }
        assert!(worst < 1e-2, "{worst}");
    }

    #[test]
    fn step4_local_error_is_fifth_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let h = random_poly(&mut rng, 3, false);
        let z = vec![0.4, -0.3, 0.2, 0.5, -0.1, 0.3];
        let err = |tau: f64| {
            let one = hierarchical_step4(&z, &h, tau).unwrap();
            let two = hierarchical_step4(
                &hierarchical_step4(&z, &h, tau / 2.0).unwrap(),
                &h,
                tau / 2.0,
            )
            .unwrap();
            one.iter()
                .zip(&two)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        for tau in [0.2, 0.1] {
            let r = err(tau) / err(tau / 2.0);
            assert!(r > 24.0 && r < 42.0, "{r}");
        }
    }

    #[test]
    fn dimension_is_checked() {
        let h = sphere_hierarchy(&sphere()).unwrap();
        assert!(matches!(
            hierarchical_step2(&[0.0; 5], &h, 0.1),
            Err(Error::Dimension { .. })
        ));
        assert!(from_hierarchical_flat(0.0, &[0.0; 6]).is_err());
    }

    #[test]
    fn symplectic_defect_detects_non_symplectic_maps() {
        let z = [0.3, 0.1];
        let euler = |x: &[f64]| {
            let p = x[1] - 0.1 * x[0].sin();
            Ok(vec![x[0] + 0.1 * p, p])
        };
        let ok = symplectic_defect(euler, &z, 1e-6).unwrap();
        assert!(ok < 1e-8);
        let bad = symplectic_defect(|x| Ok(vec![1.1 * x[0], x[1]]), &z, 1e-6).unwrap();
        assert!(bad > 0.05);
    }
}
