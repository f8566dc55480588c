//! Single-qubit channels in affine Bloch form `v -> t + T v`.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::bloch::BlochState;
use crate::error::{Error, Result};
use crate::linalg::{c, hermitian_eigenvalues4, pauli, CMat2, CMat4, C64};
use crate::tolerance::Tolerances;

/// Deviation of `|alpha|^2 + |beta|^2` from 1 tolerated before rejecting.
pub const NORM_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitChannelAffine {
    pub t: Vector3<f64>,
    pub m: Matrix3<f64>,
}

impl QubitChannelAffine {
    pub fn new(t: Vector3<f64>, m: Matrix3<f64>) -> Self {
        Self { t, m }
    }

    pub fn identity() -> Self {
        Self::new(Vector3::zeros(), Matrix3::identity())
    }

    pub fn is_unital(&self) -> bool {
        self.t == Vector3::zeros()
    }

    pub fn map_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.t + self.m * v
    }

    /// Image of a 2x2 operator, using `X = 1/2 sum_mu Tr[X s_mu] s_mu`.
    pub fn map_operator(&self, x: &CMat2) -> CMat2 {
        let coef: Vec<C64> = (0..4).map(|mu| (x * pauli(mu)).trace()).collect();
        let mut out = pauli(0) * coef[0];
        for i in 0..3 {
            out += pauli(i + 1) * (coef[0] * self.t[i]);
            for j in 0..3 {
                out += pauli(i + 1) * (coef[j + 1] * self.m[(i, j)]);
            }
        }
        out * c(0.5, 0.0)
    }

    pub fn choi(&self) -> CMat4 {
        choi_matrix(self)
    }

    pub fn is_completely_positive(&self, tol: &Tolerances) -> bool {
        hermitian_eigenvalues4(&self.choi())[0] >= -tol.psd
    }
}

/// `(N x id)(|phi+><phi+|)`; PSD iff the map is completely positive.
pub fn choi_matrix(ch: &QubitChannelAffine) -> CMat4 {
    let mut out = CMat4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            let mut e = CMat2::zeros();
            e[(i, j)] = c(1.0, 0.0);
            let img = ch.map_operator(&e);
            for r in 0..2 {
                for s in 0..2 {
                    out[(2 * r + i, 2 * s + j)] += img[(r, s)] * 0.5;
                }
            }
        }
    }
    out
}

/// Nonzero real and imaginary parts, both beyond `eps`.
pub fn is_proper(z: C64, eps: f64) -> bool {
    z.re.abs() > eps && z.im.abs() > eps
}

/// Equal-weight mixture of four unitaries fixed by complex `alpha`, `beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomUnitaryChannel {
    alpha: C64,
    beta: C64,
}

impl RandomUnitaryChannel {
    pub fn new(alpha: C64, beta: C64) -> Result<Self> {
        let deviation = (alpha.norm_sqr() + beta.norm_sqr() - 1.0).abs();
        if deviation.is_nan() || deviation > NORM_SLACK {
            return Err(Error::NormViolation { deviation });
        }
        Ok(Self { alpha, beta })
    }

    pub fn identity() -> Self {
        Self {
            alpha: c(1.0, 0.0),
            beta: c(0.0, 0.0),
        }
    }

    pub fn alpha(&self) -> C64 {
        self.alpha
    }

    pub fn beta(&self) -> C64 {
        self.beta
    }

    /// Signed diagonal of the transfer matrix.
    pub fn transfer_diagonal(&self) -> [f64; 3] {
        let (a, b) = (self.alpha, self.beta);
        let ra = (a * a).re;
        let rb = (b * b).re;
        [ra - rb, ra + rb, a.norm_sqr() - b.norm_sqr()]
    }

    pub fn to_affine(&self) -> QubitChannelAffine {
        let d = self.transfer_diagonal();
        QubitChannelAffine::new(Vector3::zeros(), Matrix3::from_diagonal(&Vector3::from(d)))
    }

    /// `(Re a)^2, (Im a)^2, (Re b)^2, (Im b)^2`.
    pub fn m_values(&self) -> [f64; 4] {
        [
            self.alpha.re * self.alpha.re,
            self.alpha.im * self.alpha.im,
            self.beta.re * self.beta.re,
            self.beta.im * self.beta.im,
        ]
    }

    pub fn s_factors(&self) -> SFactors {
        let d = self.transfer_diagonal();
        let m = self.m_values();
        let m_max = m.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let m_min = m.iter().cloned().fold(f64::INFINITY, f64::min);
        SFactors {
            s: [d[0].abs(), d[1].abs(), d[2].abs()],
            m,
            m_max,
            m_min,
        }
    }

    /// The four unitaries, each with weight 1/4.
    pub fn kraus(&self) -> [(f64, CMat2); 4] {
        let (a, b) = (self.alpha, self.beta);
        let (ac, bc) = (a.conj(), b.conj());
        [
            (0.25, CMat2::new(a, bc, -b, ac)),
            (0.25, CMat2::new(a, -bc, b, ac)),
            (0.25, CMat2::new(ac, b, -bc, a)),
            (0.25, CMat2::new(ac, -b, bc, a)),
        ]
    }
}

/// Absolute transfer-matrix diagonal together with the squared components of
/// `alpha`, `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SFactors {
    pub s: [f64; 3],
    pub m: [f64; 4],
    pub m_max: f64,
    pub m_min: f64,
}

pub fn ru_to_affine(ch: &RandomUnitaryChannel) -> QubitChannelAffine {
    ch.to_affine()
}

pub fn s_factors(ch: &RandomUnitaryChannel) -> SFactors {
    ch.s_factors()
}

pub fn ru_kraus(ch: &RandomUnitaryChannel) -> [(f64, CMat2); 4] {
    ch.kraus()
}

fn check_unit_interval(name: &str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} = {x} outside [0, 1]")))
    }
}

pub fn depolarizing(q: f64) -> Result<RandomUnitaryChannel> {
    check_unit_interval("q", q)?;
    let r = (q / 4.0).sqrt();
    RandomUnitaryChannel::new(c((1.0 - 0.75 * q).sqrt(), r), c(r, r))
}

pub fn dephasing(p: f64) -> Result<RandomUnitaryChannel> {
    check_unit_interval("p", p)?;
    RandomUnitaryChannel::new(c((1.0 - p / 2.0).sqrt(), (p / 2.0).sqrt()), c(0.0, 0.0))
}

/// Non-unital channel with shift `(0, 0, t)` and contraction
/// `diag(lambda1, lambda2, lambda3)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PauliDampingChannel {
    pub t: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
}

impl PauliDampingChannel {
    /// The `lambda2 = 0` class; rejects parameters outside the admissible
    /// region (with `tol.eq` slack on each inequality).
    pub fn new(t: f64, lambda1: f64, lambda3: f64, tol: &Tolerances) -> Result<Self> {
        let ch = Self {
            t,
            lambda1,
            lambda2: 0.0,
            lambda3,
        };
        ch.validate(tol)?;
        Ok(ch)
    }

    /// General `lambda2`. With `lambda2 != 0` the region test does not apply,
    /// so complete positivity is checked on the Choi matrix instead.
    pub fn with_lambda2(t: f64, lambda1: f64, lambda2: f64, lambda3: f64, tol: &Tolerances) -> Result<Self> {
        let ch = Self {
            t,
            lambda1,
            lambda2,
            lambda3,
        };
        if lambda2 == 0.0 {
            ch.validate(tol)?;
        } else {
            ch.check_finite()?;
            if !ch.to_affine().is_completely_positive(tol) {
                return Err(Error::InvalidChannel(format!(
                    "(t, l1, l2, l3) = ({t}, {lambda1}, {lambda2}, {lambda3}) is not completely positive"
                )));
            }
        }
        Ok(ch)
    }

    fn check_finite(&self) -> Result<()> {
        if [self.t, self.lambda1, self.lambda2, self.lambda3].iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidChannel("non-finite parameter".into()))
        }
    }

    /// The three admissibility inequalities; `Ok` when all hold.
    pub fn validate(&self, tol: &Tolerances) -> Result<()> {
        self.check_finite()?;
        let (t, l1, l3) = (self.t, self.lambda1, self.lambda3);
        if !tol.le(l1.abs(), 1.0) {
            return Err(Error::InvalidChannel(format!("|l1| = {} > 1", l1.abs())));
        }
        if !tol.le(l3.abs() + t.abs(), 1.0) {
            return Err(Error::InvalidChannel(format!(
                "|l3| + |t| = {} > 1",
                l3.abs() + t.abs()
            )));
        }
        let lhs = l1 * l1 + t * t;
        let rhs = (1.0 - l3.abs()).powi(2);
        if !tol.le(lhs, rhs) {
            return Err(Error::InvalidChannel(format!(
                "l1^2 + t^2 = {lhs} > (1 - |l3|)^2 = {rhs}"
            )));
        }
        Ok(())
    }

    pub fn is_valid(&self, tol: &Tolerances) -> bool {
        self.validate(tol).is_ok()
    }

    pub fn to_affine(&self) -> QubitChannelAffine {
        QubitChannelAffine::new(
            Vector3::new(0.0, 0.0, self.t),
            Matrix3::from_diagonal(&Vector3::new(self.lambda1, self.lambda2, self.lambda3)),
        )
    }
}

pub fn nu_to_affine(ch: &PauliDampingChannel) -> QubitChannelAffine {
    ch.to_affine()
}

/// Applies `a` to the first qubit and `b` to the second; `None` is the identity.
pub fn apply(
    a: Option<&QubitChannelAffine>,
    b: Option<&QubitChannelAffine>,
    s: &BlochState,
) -> BlochState {
    let id = QubitChannelAffine::identity();
    let ca = a.unwrap_or(&id);
    let cb = b.unwrap_or(&id);
    let ta_a = ca.m * s.a;
    let tb_b = cb.m * s.b;
    let w = ca.m * s.w * cb.m.transpose()
        + ca.t * tb_b.transpose()
        + ta_a * cb.t.transpose()
        + ca.t * cb.t.transpose();
    BlochState {
        a: ca.t + ta_a,
        b: cb.t + tb_b,
        w,
    }
}

/// Channel as given by the user, before reduction to affine form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Channel {
    Unital(RandomUnitaryChannel),
    Damping(PauliDampingChannel),
    Affine(QubitChannelAffine),
}

impl Channel {
    pub fn affine(&self) -> QubitChannelAffine {
        match self {
            Channel::Unital(c) => c.to_affine(),
            Channel::Damping(c) => c.to_affine(),
            Channel::Affine(c) => *c,
        }
    }
}

/// JSON channel literal, tagged by `kind`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ChannelLiteral {
    Depolarizing {
        q: f64,
    },
    Dephasing {
        p: f64,
    },
    RandomUnitary {
        alpha: [f64; 2],
        beta: [f64; 2],
    },
    PauliDamping {
        t: f64,
        l1: f64,
        #[serde(default)]
        l2: f64,
        l3: f64,
    },
    Affine {
        t: [f64; 3],
        #[serde(rename = "T")]
        m: [[f64; 3]; 3],
    },
}

impl ChannelLiteral {
    pub fn build(&self, tol: &Tolerances) -> Result<Channel> {
        Ok(match *self {
            ChannelLiteral::Depolarizing { q } => Channel::Unital(depolarizing(q)?),
            ChannelLiteral::Dephasing { p } => Channel::Unital(dephasing(p)?),
            ChannelLiteral::RandomUnitary { alpha, beta } => Channel::Unital(
                RandomUnitaryChannel::new(c(alpha[0], alpha[1]), c(beta[0], beta[1]))?,
            ),
            ChannelLiteral::PauliDamping { t, l1, l2, l3 } => {
                Channel::Damping(PauliDampingChannel::with_lambda2(t, l1, l2, l3, tol)?)
            }
            ChannelLiteral::Affine { t, m } => {
                let ch = QubitChannelAffine::new(Vector3::from(t), Matrix3::from_fn(|i, j| m[i][j]));
                if !ch.is_completely_positive(tol) {
                    return Err(Error::InvalidChannel(
                        "affine map is not completely positive".into(),
                    ));
                }
                Channel::Affine(ch)
            }
        })
    }
}

/// Parses `identity`, a JSON literal, or shorthand such as `depolarizing:0.4`,
/// `dephasing:0.5`, `pauli-damping:0.2,0.2,0.2`.
pub fn parse_channel(text: &str, tol: &Tolerances) -> Result<Channel> {
    let text = text.trim();
    if text == "identity" {
        return Ok(Channel::Unital(RandomUnitaryChannel::identity()));
    }
    if text.starts_with('{') {
        let lit: ChannelLiteral = serde_json::from_str(text)
            .map_err(|e| Error::Parse(format!("channel literal: {e}")))?;
        return lit.build(tol);
    }
    let (kind, args) = text
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("unrecognized channel `{text}`")))?;
    let nums: Vec<f64> = args
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Parse(format!("channel `{text}`: {e}")))?;
    let lit = match (kind, nums.as_slice()) {
        ("depolarizing", [q]) => ChannelLiteral::Depolarizing { q: *q },
        ("dephasing", [p]) => ChannelLiteral::Dephasing { p: *p },
        ("pauli-damping", [t, l1, l3]) => ChannelLiteral::PauliDamping {
            t: *t,
            l1: *l1,
            l2: 0.0,
            l3: *l3,
        },
        ("random-unitary", [ar, ai, br, bi]) => ChannelLiteral::RandomUnitary {
            alpha: [*ar, *ai],
            beta: [*br, *bi],
        },
        _ => return Err(Error::Parse(format!("unrecognized channel `{text}`"))),
    };
    lit.build(tol)
}

pub fn channel_from_value(value: &serde_json::Value, tol: &Tolerances) -> Result<Channel> {
    if let Some(s) = value.as_str() {
        return parse_channel(s, tol);
    }
    let lit: ChannelLiteral = serde_json::from_value(value.clone())
        .map_err(|e| Error::Parse(format!("channel literal: {e}")))?;
    lit.build(tol)
}
