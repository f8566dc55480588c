//! Two-qubit states in density-matrix and Bloch (a, b, W) form.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    c, hermitian_eigenvalues4, max_hermitian_defect4, pauli_pair, singular_values3,
    trace_product4, CMat4, C64,
};
use crate::tolerance::Tolerances;

/// A validated two-qubit density operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    m: CMat4,
}

impl DensityOperator {
    /// Checks hermiticity, unit trace and positivity against `tol`.
    pub fn new(m: CMat4, tol: &Tolerances) -> Result<Self> {
        let herm = max_hermitian_defect4(&m);
        if herm > tol.herm {
            return Err(Error::InvalidDensity(format!(
                "not Hermitian (max |M - M^dagger| = {herm:e})"
            )));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > tol.herm || tr.im.abs() > tol.herm {
            return Err(Error::InvalidDensity(format!("trace {tr} != 1")));
        }
        let min = hermitian_eigenvalues4(&m)[0];
        if min < -tol.psd {
            return Err(Error::InvalidDensity(format!(
                "negative eigenvalue {min:e}"
            )));
        }
        Ok(Self { m })
    }

    /// `|psi><psi|` for a (not necessarily normalized) state vector.
    pub fn pure(psi: &[C64; 4]) -> Result<Self> {
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if !(norm2 > 0.0 && norm2.is_finite()) {
            return Err(Error::InvalidDensity("zero or non-finite state vector".into()));
        }
        let mut m = CMat4::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m[(i, j)] = psi[i] * psi[j].conj() / norm2;
            }
        }
        Ok(Self { m: hermitize(m) })
    }

    /// Wraps a matrix that is known to be a state up to round-off
    /// (outputs of CPTP maps, products of validated states).
    pub(crate) fn trusted(m: CMat4) -> Self {
        Self { m: hermitize(m) }
    }

    pub fn matrix(&self) -> &CMat4 {
        &self.m
    }

    pub fn into_matrix(self) -> CMat4 {
        self.m
    }
}

fn hermitize(m: CMat4) -> CMat4 {
    (m + m.adjoint()) * c(0.5, 0.0)
}

/// Local Bloch vectors `a`, `b` and correlation tensor `W` of a two-qubit state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochState {
    pub a: Vector3<f64>,
    pub b: Vector3<f64>,
    pub w: Matrix3<f64>,
}

/// Descending singular values of a correlation tensor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderedSingulars {
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
}

impl OrderedSingulars {
    pub fn as_array(&self) -> [f64; 3] {
        [self.e1, self.e2, self.e3]
    }
}

/// Singular values of `w`, largest first.
///
/// Computed with a one-sided Jacobi sweep, i.e. the symmetric eigenproblem
/// of `W^T W` solved on the columns of `W`.
pub fn ordered_singulars(w: &Matrix3<f64>) -> OrderedSingulars {
    let [e1, e2, e3] = singular_values3(w);
    OrderedSingulars {
        e1: e1.max(0.0),
        e2: e2.max(0.0),
        e3: e3.max(0.0),
    }
}

/// `a_i = Tr[rho s_i x I]`, `b_j = Tr[rho I x s_j]`, `W_ij = Tr[rho s_i x s_j]`.
pub fn to_bloch(rho: &DensityOperator) -> BlochState {
    let m = rho.matrix();
    let ev = |i: usize, j: usize| trace_product4(m, pauli_pair(i, j)).re;
    let mut a = Vector3::zeros();
    let mut b = Vector3::zeros();
    let mut w = Matrix3::zeros();
    for i in 0..3 {
        a[i] = ev(i + 1, 0);
        b[i] = ev(0, i + 1);
        for j in 0..3 {
            w[(i, j)] = ev(i + 1, j + 1);
        }
    }
    BlochState { a, b, w }
}

/// Result of rebuilding a density matrix from Bloch data.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub matrix: CMat4,
    pub min_eigenvalue: f64,
    /// False when the rebuilt matrix has an eigenvalue below `-tol.psd`.
    pub physical: bool,
}

impl Reconstruction {
    pub fn into_density(self, tol: &Tolerances) -> Result<DensityOperator> {
        if !self.physical {
            return Err(Error::InvalidDensity(format!(
                "not physical (min eigenvalue {:e})",
                self.min_eigenvalue
            )));
        }
        DensityOperator::new(self.matrix, tol)
    }
}

/// `1/4 (I x I + a.s x I + I x b.s + sum W_ij s_i x s_j)`, flagging
/// non-physical tensors instead of rejecting them.
pub fn from_bloch(s: &BlochState, tol: &Tolerances) -> Reconstruction {
    let mut m = *pauli_pair(0, 0);
    for i in 0..3 {
        m += pauli_pair(i + 1, 0) * c(s.a[i], 0.0);
        m += pauli_pair(0, i + 1) * c(s.b[i], 0.0);
        for j in 0..3 {
            m += pauli_pair(i + 1, j + 1) * c(s.w[(i, j)], 0.0);
        }
    }
    let matrix = m * c(0.25, 0.0);
    let min_eigenvalue = hermitian_eigenvalues4(&matrix)[0];
    Reconstruction {
        matrix,
        min_eigenvalue,
        physical: min_eigenvalue >= -tol.psd,
    }
}

impl BlochState {
    pub fn new(a: Vector3<f64>, b: Vector3<f64>, w: Matrix3<f64>) -> Self {
        Self { a, b, w }
    }

    pub fn max_mixed() -> Self {
        Self::new(Vector3::zeros(), Vector3::zeros(), Matrix3::zeros())
    }

    pub fn diagonal(w1: f64, w2: f64, w3: f64) -> Self {
        Self::new(
            Vector3::zeros(),
            Vector3::zeros(),
            Matrix3::from_diagonal(&Vector3::new(w1, w2, w3)),
        )
    }

    /// (|00> + |11>)/sqrt2
    pub fn phi_plus() -> Self {
        Self::diagonal(1.0, -1.0, 1.0)
    }

    /// (|00> - |11>)/sqrt2
    pub fn phi_minus() -> Self {
        Self::diagonal(-1.0, 1.0, 1.0)
    }

    /// (|01> + |10>)/sqrt2
    pub fn psi_plus() -> Self {
        Self::diagonal(1.0, 1.0, -1.0)
    }

    /// (|01> - |10>)/sqrt2
    pub fn psi_minus() -> Self {
        Self::diagonal(-1.0, -1.0, -1.0)
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "bell-phi+" => Some(Self::phi_plus()),
            "bell-phi-" => Some(Self::phi_minus()),
            "bell-psi+" => Some(Self::psi_plus()),
            "bell-psi-" => Some(Self::psi_minus()),
            "max-mixed" => Some(Self::max_mixed()),
            _ => None,
        }
    }

    pub fn singulars(&self) -> OrderedSingulars {
        ordered_singulars(&self.w)
    }

    pub fn is_physical(&self, tol: &Tolerances) -> bool {
        from_bloch(self, tol).physical
    }

    /// Largest entrywise difference to `other` over a, b and W.
    pub fn max_abs_diff(&self, other: &BlochState) -> f64 {
        let da = (self.a - other.a).amax();
        let db = (self.b - other.b).amax();
        let dw = (self.w - other.w).amax();
        da.max(db).max(dw)
    }

    pub fn to_literal(&self) -> StateLiteral {
        let mut w = [[0.0; 3]; 3];
        for (i, row) in w.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = self.w[(i, j)];
            }
        }
        StateLiteral {
            a: [self.a[0], self.a[1], self.a[2]],
            b: [self.b[0], self.b[1], self.b[2]],
            w,
        }
    }
}

/// JSON form `{"a": [..], "b": [..], "W": [[..], [..], [..]]}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateLiteral {
    #[serde(default)]
    pub a: [f64; 3],
    #[serde(default)]
    pub b: [f64; 3],
    #[serde(rename = "W")]
    pub w: [[f64; 3]; 3],
}

impl From<StateLiteral> for BlochState {
    fn from(l: StateLiteral) -> Self {
        BlochState {
            a: Vector3::from(l.a),
            b: Vector3::from(l.b),
            w: Matrix3::from_fn(|i, j| l.w[i][j]),
        }
    }
}

/// Parses a preset name or a JSON state literal.
pub fn parse_state(text: &str) -> Result<BlochState> {
    let trimmed = text.trim();
    if let Some(s) = BlochState::preset(trimmed) {
        return Ok(s);
    }
    let value: serde_json::Value = serde_json::from_str(trimmed)
        .map_err(|e| Error::Parse(format!("state literal `{trimmed}`: {e}")))?;
    state_from_value(&value)
}

pub fn state_from_value(value: &serde_json::Value) -> Result<BlochState> {
    if let Some(name) = value.as_str() {
        return BlochState::preset(name)
            .ok_or_else(|| Error::Parse(format!("unknown state preset `{name}`")));
    }
    let lit: StateLiteral = serde_json::from_value(value.clone())
        .map_err(|e| Error::Parse(format!("state literal: {e}")))?;
    let s = BlochState::from(lit);
    let finite = s.a.iter().chain(s.b.iter()).chain(s.w.iter()).all(|x| x.is_finite());
    if !finite {
        return Err(Error::Parse("state literal has non-finite entries".into()));
    }
    Ok(s)
}
