//! Born-rule simulation of the linear-network correlators.
//!
//! Qubits are ordered source by source, so the joint state is the plain
//! Kronecker product of the source states. Party 1 measures qubit 1, the
//! last party measures qubit `2n`, and every party in between performs a
//! Bell-state measurement on the qubit pair it receives from its two
//! neighbouring sources. Bell outcomes carry two bits:
//! Phi+ -> (0,0), Phi- -> (0,1), Psi+ -> (1,0), Psi- -> (1,1).
//! `I` uses the sign of the first bit, `J` the sign of the second.

use nalgebra::{DMatrix, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::bloch::from_bloch;
use crate::error::{Error, Result};
use crate::linalg::{c, pauli, CMat2, C64};
use crate::network::{NetworkScenario, Topology};
use crate::tolerance::Tolerances;

/// Largest chain simulated directly; the joint space has `4^n` dimensions.
pub const MAX_SIMULATED_SOURCES: usize = 3;

/// Measurement directions of the two end parties for inputs `y = 0, 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementSetting {
    pub first: [Vector3<f64>; 2],
    pub last: [Vector3<f64>; 2],
}

impl MeasurementSetting {
    /// Normalizes all four directions; fails on a zero vector.
    pub fn new(first: [Vector3<f64>; 2], last: [Vector3<f64>; 2]) -> Result<Self> {
        let unit = |v: Vector3<f64>| {
            let n = v.norm();
            if n > 1e-12 && n.is_finite() {
                Ok(v / n)
            } else {
                Err(Error::Domain("measurement direction must be nonzero".into()))
            }
        };
        Ok(Self {
            first: [unit(first[0])?, unit(first[1])?],
            last: [unit(last[0])?, unit(last[1])?],
        })
    }

    /// All four directions along `z`.
    pub fn all_z() -> Self {
        let z = Vector3::z();
        Self {
            first: [z, z],
            last: [z, z],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlators {
    pub i: f64,
    pub j: f64,
}

impl Correlators {
    /// `sqrt|I| + sqrt|J|`
    pub fn value(&self) -> f64 {
        self.i.abs().sqrt() + self.j.abs().sqrt()
    }
}

/// Bilinear forms with `I = 1/4 (a0 + a1)^T C0 (b0 + b1)` and
/// `J = 1/4 (a0 - a1)^T C1 (b0 - b1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelatorTensors {
    pub c0: Matrix3<f64>,
    pub c1: Matrix3<f64>,
}

impl CorrelatorTensors {
    pub fn evaluate(&self, ms: &MeasurementSetting) -> Correlators {
        let sa = ms.first[0] + ms.first[1];
        let da = ms.first[0] - ms.first[1];
        let sb = ms.last[0] + ms.last[1];
        let db = ms.last[0] - ms.last[1];
        Correlators {
            i: 0.25 * sa.dot(&(self.c0 * sb)),
            j: 0.25 * da.dot(&(self.c1 * db)),
        }
    }
}

fn to_dyn2(m: &CMat2) -> DMatrix<C64> {
    DMatrix::from_fn(2, 2, |i, j| m[(i, j)])
}

/// `(I + x d.sigma) / 2` for outcome `x = +-1`.
fn spin_projector(d: &Vector3<f64>, x: f64) -> DMatrix<C64> {
    let mut m = pauli(0);
    for k in 0..3 {
        m += pauli(k + 1) * c(x * d[k], 0.0);
    }
    to_dyn2(&(m * c(0.5, 0.0)))
}

/// Bell projectors indexed by `2 * bit0 + bit1`.
fn bell_projectors() -> [DMatrix<C64>; 4] {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let vecs: [[f64; 4]; 4] = [
        [r, 0.0, 0.0, r],  // Phi+
        [r, 0.0, 0.0, -r], // Phi-
        [0.0, r, r, 0.0],  // Psi+
        [0.0, r, -r, 0.0], // Psi-
    ];
    vecs.map(|v| DMatrix::from_fn(4, 4, |i, j| c(v[i] * v[j], 0.0)))
}

fn joint_state(scenario: &NetworkScenario) -> Result<DMatrix<C64>> {
    if scenario.topology() != Topology::Linear {
        return Err(Error::Topology(
            "correlators are simulated for the linear chain only".into(),
        ));
    }
    let n = scenario.n();
    if n > MAX_SIMULATED_SOURCES {
        return Err(Error::Dimension(n));
    }
    let tol = Tolerances::default();
    let mut rho = DMatrix::from_element(1, 1, c(1.0, 0.0));
    for s in scenario.states() {
        let m = from_bloch(s, &tol).matrix;
        rho = rho.kronecker(&DMatrix::from_fn(4, 4, |i, j| m[(i, j)]));
    }
    Ok(rho)
}

/// `Re Tr[rho P]`.
fn born(rho: &DMatrix<C64>, p: &DMatrix<C64>) -> f64 {
    rho.iter()
        .zip(p.transpose().iter())
        .map(|(a, b)| (a * b).re)
        .sum()
}

/// Signed sums over every outcome for fixed end-party directions.
/// Returns the `I`-type and `J`-type correlators.
fn signed_correlators(
    rho: &DMatrix<C64>,
    n: usize,
    bell: &[DMatrix<C64>; 4],
    da: &Vector3<f64>,
    db: &Vector3<f64>,
) -> (f64, f64) {
    let mids = n - 1;
    let combos = 1usize << (2 * mids);
    let (mut e0, mut e1) = (0.0, 0.0);
    for xa in [1.0, -1.0] {
        let pa = spin_projector(da, xa);
        for xb in [1.0, -1.0] {
            let pb = spin_projector(db, xb);
            for combo in 0..combos {
                let mut proj = pa.clone();
                let (mut s0, mut s1) = (xa * xb, xa * xb);
                for m in 0..mids {
                    let o = (combo >> (2 * m)) & 3;
                    if o & 2 != 0 {
                        s0 = -s0;
                    }
                    if o & 1 != 0 {
                        s1 = -s1;
                    }
                    proj = proj.kronecker(&bell[o]);
                }
                proj = proj.kronecker(&pb);
                let p = born(rho, &proj);
                e0 += s0 * p;
                e1 += s1 * p;
            }
        }
    }
    (e0, e1)
}

/// `I_n` and `J_n` from the full joint density operator (`n <= 3`).
pub fn simulate_linear_correlators(
    scenario: &NetworkScenario,
    ms: &MeasurementSetting,
) -> Result<Correlators> {
    let rho = joint_state(scenario)?;
    let n = scenario.n();
    let bell = bell_projectors();
    let (mut i, mut j) = (0.0, 0.0);
    for y1 in 0..2 {
        for y2 in 0..2 {
            let (e0, e1) = signed_correlators(&rho, n, &bell, &ms.first[y1], &ms.last[y2]);
            let sign = if (y1 + y2) % 2 == 0 { 1.0 } else { -1.0 };
            i += 0.25 * e0;
            j += 0.25 * sign * e1;
        }
    }
    Ok(Correlators { i, j })
}

/// Correlators at basis directions, so that any setting is a bilinear form.
/// Each entry is a Born-rule simulation.
pub fn correlator_tensors(scenario: &NetworkScenario) -> Result<CorrelatorTensors> {
    let rho = joint_state(scenario)?;
    let n = scenario.n();
    let bell = bell_projectors();
    let mut c0 = Matrix3::zeros();
    let mut c1 = Matrix3::zeros();
    for p in 0..3 {
        for q in 0..3 {
            let (e0, e1) = signed_correlators(
                &rho,
                n,
                &bell,
                &Vector3::ith(p, 1.0),
                &Vector3::ith(q, 1.0),
            );
            c0[(p, q)] = e0;
            c1[(p, q)] = e1;
        }
    }
    Ok(CorrelatorTensors { c0, c1 })
}
