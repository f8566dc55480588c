//! Explicit Bell-state inputs that keep the detection bound above threshold.

use serde::{Deserialize, Serialize};

use crate::bloch::BlochState;
use crate::channels::{PauliDampingChannel, RandomUnitaryChannel};
use crate::error::{Error, Result};
use crate::network::{apply_usage, BoundReport, NetworkScenario, Topology, UsagePattern};
use crate::tolerance::Tolerances;

/// A witness must beat its threshold by at least this much to certify.
pub const WITNESS_MARGIN: f64 = 1e-9;

/// Zero structure of `(alpha, beta)` for which one transfer factor is 1 and
/// the other two coincide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImproperCase {
    /// Re alpha = Re beta = 0
    ReAlphaReBeta,
    /// Im alpha = Im beta = 0
    ImAlphaImBeta,
    /// Re alpha = Im beta = 0
    ReAlphaImBeta,
    /// Im alpha = Re beta = 0
    ImAlphaReBeta,
    /// alpha = 0
    AlphaZero,
    /// beta = 0
    BetaZero,
}

impl ImproperCase {
    pub const ALL: [ImproperCase; 6] = [
        ImproperCase::ReAlphaReBeta,
        ImproperCase::ImAlphaImBeta,
        ImproperCase::ReAlphaImBeta,
        ImproperCase::ImAlphaReBeta,
        ImproperCase::AlphaZero,
        ImproperCase::BetaZero,
    ];

    /// 1-based id in the order above.
    pub fn from_id(id: usize) -> Result<Self> {
        id.checked_sub(1)
            .and_then(|i| Self::ALL.get(i).copied())
            .ok_or_else(|| Error::Domain(format!("case id {id} outside 1..=6")))
    }

    pub fn id(&self) -> usize {
        Self::ALL.iter().position(|c| c == self).unwrap() + 1
    }

    /// Indices into `(Re a, Im a, Re b, Im b)` that must vanish.
    fn zero_components(&self) -> [usize; 2] {
        match self {
            ImproperCase::ReAlphaReBeta => [0, 2],
            ImproperCase::ImAlphaImBeta => [1, 3],
            ImproperCase::ReAlphaImBeta => [0, 3],
            ImproperCase::ImAlphaReBeta => [1, 2],
            ImproperCase::AlphaZero => [0, 1],
            ImproperCase::BetaZero => [2, 3],
        }
    }

    pub fn matches(&self, c: &RandomUnitaryChannel, tol: &Tolerances) -> bool {
        let comps = components(c);
        self.zero_components().iter().all(|&i| tol.is_zero(comps[i]))
    }

    /// First case whose zero structure `c` satisfies.
    pub fn detect(c: &RandomUnitaryChannel, tol: &Tolerances) -> Option<Self> {
        Self::ALL.into_iter().find(|case| case.matches(c, tol))
    }

    /// The factor shared by the two non-unit transfer entries, evaluated from
    /// the two surviving squared components.
    pub fn surviving_factor(&self, c: &RandomUnitaryChannel) -> f64 {
        let m = c.m_values();
        let [z0, z1] = self.zero_components();
        let rest: Vec<f64> = (0..4).filter(|i| *i != z0 && *i != z1).map(|i| m[i]).collect();
        (rest[0] - rest[1]).abs()
    }
}

fn components(c: &RandomUnitaryChannel) -> [f64; 4] {
    [c.alpha().re, c.alpha().im, c.beta().re, c.beta().im]
}

/// Input scenario, its image under the channel, and both bound evaluations.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessReport {
    pub input: NetworkScenario,
    pub input_label: &'static str,
    pub pattern: UsagePattern,
    pub transformed: NetworkScenario,
    pub closed_form: f64,
    pub direct: BoundReport,
}

impl WitnessReport {
    pub fn threshold(&self) -> f64 {
        self.direct.threshold
    }

    pub fn certifies(&self) -> bool {
        self.closed_form - self.threshold() >= WITNESS_MARGIN
            && self.direct.bound - self.threshold() >= WITNESS_MARGIN
    }

    pub fn summary(&self) -> WitnessSummary {
        WitnessSummary {
            topology: self.input.topology(),
            n: self.pattern.n(),
            m1: self.pattern.m1(),
            m2: self.pattern.m2(),
            k: self.pattern.k(),
            input_state: self.input_label.to_string(),
            closed_form_bound: self.closed_form,
            direct_bound: self.direct.bound,
            threshold: self.threshold(),
        }
    }
}

/// Compact, serializable description attached to verdicts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessSummary {
    pub topology: Topology,
    pub n: usize,
    pub m1: usize,
    pub m2: usize,
    pub k: usize,
    pub input_state: String,
    pub closed_form_bound: f64,
    pub direct_bound: f64,
    pub threshold: f64,
}

/// Exponent applied to the product of singular values for a topology.
fn product_exponent(topology: Topology, n: usize) -> f64 {
    match topology {
        Topology::Linear => 1.0,
        Topology::Star | Topology::StarFnn3 => 2.0 / n as f64,
    }
}

/// `n` copies of Phi-, channel applied per `u`. Closed form
/// `sqrt(1 + s^k)` (linear) or `sqrt(1 + s^(2k/n))` (star).
pub fn witness_phi_minus(
    c: &RandomUnitaryChannel,
    topology: Topology,
    u: &UsagePattern,
    case: ImproperCase,
    tol: &Tolerances,
) -> Result<WitnessReport> {
    if !case.matches(c, tol) {
        return Err(Error::CaseMismatch(format!(
            "alpha = {}, beta = {} does not have the zero structure of case {}",
            c.alpha(),
            c.beta(),
            case.id()
        )));
    }
    let n = u.n();
    let input = NetworkScenario::uniform(topology, n, BlochState::phi_minus())?;
    let transformed = apply_usage(&c.to_affine(), &input, u)?;
    let s = case.surviving_factor(c);
    let closed_form = (1.0 + s.powf(u.k() as f64 * product_exponent(topology, n))).sqrt();
    let direct = transformed.bound()?;
    Ok(WitnessReport {
        input,
        input_label: "bell-phi-",
        pattern: u.clone(),
        transformed,
        closed_form,
        direct,
    })
}

/// `max/min` pairs of squared diagonal entries of the witness tensors:
/// one side gives `(l1^2, l3^2)`, both sides `(l1^4, (t^2 + l3^2)^2)`.
pub fn phi_plus_y_values(c: &PauliDampingChannel) -> [f64; 4] {
    let c1 = c.lambda1 * c.lambda1;
    let c2 = c.lambda3 * c.lambda3;
    let c3 = c1 * c1;
    let c4 = (c.t * c.t + c2).powi(2);
    [c1.max(c2), c1.min(c2), c3.max(c4), c3.min(c4)]
}

/// Star-network bound of the Phi+ witness in closed form.
pub fn phi_plus_closed_form(c: &PauliDampingChannel, n: usize, m1: usize, m2: usize) -> f64 {
    let [y1, y2, y3, y4] = phi_plus_y_values(c);
    let e1 = m1 as f64 / n as f64;
    let e2 = m2 as f64 / n as f64;
    (y1.powf(e1) * y3.powf(e2) + y2.powf(e1) * y4.powf(e2)).sqrt()
}

/// `n` copies of Phi+ in a star network, channel applied per `(m1, m2)`.
pub fn witness_phi_plus(
    c: &PauliDampingChannel,
    n: usize,
    m1: usize,
    m2: usize,
    tol: &Tolerances,
) -> Result<WitnessReport> {
    if c.lambda2 != 0.0 {
        return Err(Error::InvalidChannel("the Phi+ witness needs lambda2 = 0".into()));
    }
    c.validate(tol)?;
    let u = UsagePattern::canonical(n, m1, m2)?;
    let input = NetworkScenario::uniform(Topology::Star, n, BlochState::phi_plus())?;
    let transformed = apply_usage(&c.to_affine(), &input, &u)?;
    let closed_form = phi_plus_closed_form(c, n, m1, m2);
    let direct = transformed.bound()?;
    Ok(WitnessReport {
        input,
        input_label: "bell-phi+",
        pattern: u,
        transformed,
        closed_form,
        direct,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::dephasing;
    use crate::linalg::c;
    use nalgebra::{Matrix3, Vector3};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn dephasing_witness() {
        let ch = dephasing(0.5).unwrap();
        assert_eq!(ImproperCase::detect(&ch, &tol()), Some(ImproperCase::BetaZero));
        let u = UsagePattern::canonical(2, 2, 0).unwrap();
        let w = witness_phi_minus(&ch, Topology::Linear, &u, ImproperCase::BetaZero, &tol()).unwrap();
        assert!((w.closed_form - 1.25f64.sqrt()).abs() < 1e-12);
        assert!((w.direct.bound - w.closed_form).abs() < 1e-12);
        assert!(w.certifies());
        let u = UsagePattern::canonical(2, 0, 1).unwrap();
        let w = witness_phi_minus(&ch, Topology::Linear, &u, ImproperCase::BetaZero, &tol()).unwrap();
        assert!((w.direct.bound - w.closed_form).abs() < 1e-12);
    }

    #[test]
    fn real_parameters_case() {
        let ch = RandomUnitaryChannel::new(c(0.6, 0.0), c(0.8, 0.0)).unwrap();
        let case = ImproperCase::detect(&ch, &tol()).unwrap();
        assert_eq!(case, ImproperCase::ImAlphaImBeta);
        assert!((case.surviving_factor(&ch) - 0.28).abs() < 1e-15);
        let u = UsagePattern::canonical(2, 1, 0).unwrap();
        let w = witness_phi_minus(&ch, Topology::Linear, &u, case, &tol()).unwrap();
        assert!((w.closed_form - 1.28f64.sqrt()).abs() < 1e-12);
        assert!((w.direct.bound - w.closed_form).abs() < 1e-12);
    }

    #[test]
    fn proper_channel_mismatches() {
        let ch = crate::channels::depolarizing(0.4).unwrap();
        assert_eq!(ImproperCase::detect(&ch, &tol()), None);
        let u = UsagePattern::canonical(2, 1, 0).unwrap();
        for case in ImproperCase::ALL {
            assert!(matches!(
                witness_phi_minus(&ch, Topology::Linear, &u, case, &tol()),
                Err(Error::CaseMismatch(_))
            ));
        }
    }

    #[test]
    fn case_ids_round_trip() {
        for id in 1..=6 {
            assert_eq!(ImproperCase::from_id(id).unwrap().id(), id);
        }
        assert!(ImproperCase::from_id(0).is_err() && ImproperCase::from_id(7).is_err());
    }

    #[test]
    fn phi_plus_tensors() {
        let ch = PauliDampingChannel::new(0.05, 0.9, 0.05, &tol()).unwrap();
        let w = witness_phi_plus(&ch, 14, 4, 0, &tol()).unwrap();
        let want = (0.81f64.powf(2.0 / 7.0) + 0.0025f64.powf(2.0 / 7.0)).sqrt();
        assert!((w.closed_form - want).abs() < 1e-12);
        assert!((w.direct.bound - want).abs() < 1e-12);
        assert!((want - 1.05927).abs() < 1e-4);
        let one = w.transformed.states()[0].w;
        assert!((one - Matrix3::from_diagonal(&Vector3::new(0.9, 0.0, 0.05))).amax() < 1e-15);

        let w = witness_phi_plus(&ch, 3, 0, 1, &tol()).unwrap();
        let both = w.transformed.states()[0].w;
        let want = Matrix3::from_diagonal(&Vector3::new(0.81, 0.0, 0.0025 + 0.0025));
        assert!((both - want).amax() < 1e-15);
        assert!((w.direct.bound - w.closed_form).abs() < 1e-12);
    }

    #[test]
    fn identity_limit() {
        let ch = PauliDampingChannel::with_lambda2(0.0, 1.0, 1.0, 1.0, &tol()).unwrap();
        assert!(witness_phi_plus(&ch, 3, 1, 0, &tol()).is_err());
        let near = PauliDampingChannel::new(0.0, 0.0, 1.0, &tol()).unwrap();
        let w = witness_phi_plus(&near, 4, 0, 0, &tol()).unwrap();
        assert!((w.closed_form - 2f64.sqrt()).abs() < 1e-15);
    }
}
