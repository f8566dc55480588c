//! Network scenarios, k-use channel placement and the detection bounds.

use serde::{Deserialize, Serialize};

use crate::bloch::{BlochState, OrderedSingulars};
use crate::channels::{apply, QubitChannelAffine};
use crate::error::{Error, Result};

/// Products below this are reported as zero.
pub const UNDERFLOW_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

/// Where the channel acts on one source's qubit pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    None,
    OneSide(Side),
    Both,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UsagePattern {
    placements: Vec<Placement>,
}

impl UsagePattern {
    pub fn new(placements: Vec<Placement>) -> Result<Self> {
        if placements.is_empty() {
            return Err(Error::PatternMismatch("a network needs n >= 1 sources".into()));
        }
        Ok(Self { placements })
    }

    /// `m2` sources hit on both qubits, then `m1` hit on side A, then untouched.
    pub fn canonical(n: usize, m1: usize, m2: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::PatternMismatch("a network needs n >= 1 sources".into()));
        }
        if m1 + m2 > n {
            return Err(Error::PatternMismatch(format!(
                "m1 + m2 = {} exceeds n = {n}",
                m1 + m2
            )));
        }
        let mut placements = vec![Placement::Both; m2];
        placements.extend(std::iter::repeat_n(Placement::OneSide(Side::A), m1));
        placements.extend(std::iter::repeat_n(Placement::None, n - m1 - m2));
        Ok(Self { placements })
    }

    /// Fewest sources for `k` uses: as many both-sided as possible.
    pub fn from_k(n: usize, k: usize) -> Result<Self> {
        if k > 2 * n {
            return Err(Error::PatternMismatch(format!("k = {k} exceeds 2n = {}", 2 * n)));
        }
        Self::canonical(n, k % 2, k / 2)
    }

    pub fn untouched(n: usize) -> Result<Self> {
        Self::canonical(n, 0, 0)
    }

    pub fn placements(&self) -> &[Placement] {
        &self.placements
    }

    pub fn n(&self) -> usize {
        self.placements.len()
    }

    pub fn m1(&self) -> usize {
        self.placements
            .iter()
            .filter(|p| matches!(p, Placement::OneSide(_)))
            .count()
    }

    pub fn m2(&self) -> usize {
        self.placements.iter().filter(|p| **p == Placement::Both).count()
    }

    pub fn k(&self) -> usize {
        self.m1() + 2 * self.m2()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Linear,
    Star,
    /// Three-source star tested for full network nonlocality.
    #[serde(alias = "fnn3", alias = "star-fnn3")]
    StarFnn3,
}

impl Topology {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Topology::Linear),
            "star" => Ok(Topology::Star),
            "fnn3" | "star_fnn3" | "star-fnn3" => Ok(Topology::StarFnn3),
            other => Err(Error::Parse(format!("unknown topology `{other}`"))),
        }
    }

    pub fn threshold(&self) -> f64 {
        match self {
            Topology::Linear | Topology::Star => 1.0,
            Topology::StarFnn3 => 2f64.powf(1.0 / 3.0),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Topology::Linear => "linear",
            Topology::Star => "star",
            Topology::StarFnn3 => "fnn3",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkScenario {
    topology: Topology,
    states: Vec<BlochState>,
}

impl NetworkScenario {
    pub fn new(topology: Topology, states: Vec<BlochState>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::Topology("a network needs n >= 1 sources".into()));
        }
        if topology == Topology::StarFnn3 && states.len() != 3 {
            return Err(Error::Topology(format!(
                "the trilocal star needs n = 3 sources, got {}",
                states.len()
            )));
        }
        Ok(Self { topology, states })
    }

    /// `n` copies of the same source state.
    pub fn uniform(topology: Topology, n: usize, state: BlochState) -> Result<Self> {
        Self::new(topology, vec![state; n])
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn states(&self) -> &[BlochState] {
        &self.states
    }

    pub fn n(&self) -> usize {
        self.states.len()
    }

    pub fn singulars(&self) -> Vec<OrderedSingulars> {
        self.states.iter().map(|s| s.singulars()).collect()
    }

    pub fn bound(&self) -> Result<BoundReport> {
        match self.topology {
            Topology::Linear => Ok(bound_linear(self)),
            Topology::Star => Ok(bound_star(self)),
            Topology::StarFnn3 => bound_fnn3(self),
        }
    }
}

/// Transforms each source state according to its placement.
pub fn apply_usage(
    ch: &QubitChannelAffine,
    scenario: &NetworkScenario,
    u: &UsagePattern,
) -> Result<NetworkScenario> {
    if u.n() != scenario.n() {
        return Err(Error::PatternMismatch(format!(
            "pattern has {} sources, scenario has {}",
            u.n(),
            scenario.n()
        )));
    }
    let states = scenario
        .states
        .iter()
        .zip(u.placements())
        .map(|(s, p)| apply_placement(ch, *p, s))
        .collect();
    Ok(NetworkScenario {
        topology: scenario.topology,
        states,
    })
}

pub fn apply_placement(ch: &QubitChannelAffine, p: Placement, s: &BlochState) -> BlochState {
    match p {
        Placement::None => *s,
        Placement::OneSide(Side::A) => apply(Some(ch), None, s),
        Placement::OneSide(Side::B) => apply(None, Some(ch), s),
        Placement::Both => apply(Some(ch), Some(ch), s),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub topology: Topology,
    pub bound: f64,
    pub threshold: f64,
    pub violated: bool,
    pub per_source_singulars: Vec<OrderedSingulars>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Product of non-negative factors; a nonzero product that falls under
/// [`UNDERFLOW_FLOOR`] becomes 0 and leaves a note.
fn guarded_product(factors: impl Iterator<Item = f64>, note: &mut Option<String>) -> f64 {
    let mut p = 1.0;
    let mut any_zero = false;
    for f in factors {
        any_zero |= f == 0.0;
        p *= f;
    }
    if !any_zero && p < UNDERFLOW_FLOOR {
        *note = Some(format!(
            "a singular-value product fell below {UNDERFLOW_FLOOR:e} and was set to 0"
        ));
        0.0
    } else {
        p
    }
}

fn report(topology: Topology, bound: f64, singulars: Vec<OrderedSingulars>, note: Option<String>) -> BoundReport {
    let threshold = topology.threshold();
    BoundReport {
        topology,
        bound,
        threshold,
        violated: bound > threshold,
        per_source_singulars: singulars,
        note,
    }
}

/// `sqrt(prod E_j1 + prod E_j2)`, threshold 1.
pub fn linear_bound_from(singulars: &[OrderedSingulars]) -> (f64, Option<String>) {
    let mut note = None;
    let p1 = guarded_product(singulars.iter().map(|s| s.e1), &mut note);
    let p2 = guarded_product(singulars.iter().map(|s| s.e2), &mut note);
    ((p1 + p2).sqrt(), note)
}

/// `sqrt((prod E_i1)^(2/n) + (prod E_i2)^(2/n))`, each factor raised before
/// multiplying so long chains do not underflow early.
pub fn star_bound_from(singulars: &[OrderedSingulars]) -> (f64, Option<String>) {
    let mut note = None;
    let e = 2.0 / singulars.len() as f64;
    let p1 = guarded_product(singulars.iter().map(|s| s.e1.powf(e)), &mut note);
    let p2 = guarded_product(singulars.iter().map(|s| s.e2.powf(e)), &mut note);
    ((p1 + p2).sqrt(), note)
}

pub fn bound_linear(scenario: &NetworkScenario) -> BoundReport {
    let sv = scenario.singulars();
    let (b, note) = linear_bound_from(&sv);
    report(Topology::Linear, b, sv, note)
}

pub fn bound_star(scenario: &NetworkScenario) -> BoundReport {
    let sv = scenario.singulars();
    let (b, note) = star_bound_from(&sv);
    report(Topology::Star, b, sv, note)
}

/// Star form at `n = 3` against the threshold `2^(1/3)`.
pub fn bound_fnn3(scenario: &NetworkScenario) -> Result<BoundReport> {
    if scenario.n() != 3 {
        return Err(Error::Topology(format!(
            "the trilocal criterion needs n = 3 sources, got {}",
            scenario.n()
        )));
    }
    let sv = scenario.singulars();
    let (b, note) = star_bound_from(&sv);
    Ok(report(Topology::StarFnn3, b, sv, note))
}
