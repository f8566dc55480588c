//! Derivative-free searches: measurement settings for a fixed scenario, and
//! input states for a fixed channel and usage pattern.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bloch::{from_bloch, to_bloch, BlochState, DensityOperator, OrderedSingulars};
use crate::channels::QubitChannelAffine;
use crate::error::Result;
use crate::linalg::{c, CMat4};
use crate::network::{
    apply_placement, apply_usage, linear_bound_from, star_bound_from, NetworkScenario, Placement,
    Topology, UsagePattern,
};
use crate::oracle::correlators::{correlator_tensors, CorrelatorTensors, Correlators, MeasurementSetting};
use crate::oracle::sampling::{gaussian_c, random_bloch_state};
use crate::oracle::OptimizerConfig;
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettingsOptimum {
    pub value: f64,
    pub correlators: Correlators,
    pub setting: MeasurementSetting,
}

fn direction(theta: f64, phi: f64) -> Vector3<f64> {
    Vector3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos())
}

fn setting_from_angles(x: &[f64; 8]) -> MeasurementSetting {
    MeasurementSetting {
        first: [direction(x[0], x[1]), direction(x[2], x[3])],
        last: [direction(x[4], x[5]), direction(x[6], x[7])],
    }
}

/// Coordinate ascent on the 8 polar angles with a shrinking step,
/// restarted from seeded random points.
pub fn maximize_settings(t: &CorrelatorTensors, cfg: &OptimizerConfig) -> SettingsOptimum {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let score = |x: &[f64; 8]| t.evaluate(&setting_from_angles(x)).value();
    let mut best_x = [0.0; 8];
    let mut best = f64::NEG_INFINITY;
    for _ in 0..cfg.restarts() {
        let mut x = [0.0; 8];
        for (i, v) in x.iter_mut().enumerate() {
            let span = if i % 2 == 0 { std::f64::consts::PI } else { std::f64::consts::TAU };
            *v = rng.random_range(0.0..span);
        }
        let mut f = score(&x);
        let mut step = 0.5;
        for _ in 0..cfg.max_iters {
            let mut moved = false;
            for i in 0..8 {
                for dir in [1.0, -1.0] {
                    let mut y = x;
                    y[i] += dir * step;
                    let g = score(&y);
                    if g > f {
                        x = y;
                        f = g;
                        moved = true;
                        break;
                    }
                }
            }
            if !moved {
                step *= 0.5;
                if step < cfg.step_tol {
                    break;
                }
            }
        }
        if f > best {
            best = f;
            best_x = x;
        }
    }
    let setting = setting_from_angles(&best_x);
    let correlators = t.evaluate(&setting);
    SettingsOptimum {
        value: correlators.value(),
        correlators,
        setting,
    }
}

/// Best `sqrt|I_n| + sqrt|J_n|` found over end-party directions (`n <= 3`).
pub fn max_inequality_over_settings(
    scenario: &NetworkScenario,
    cfg: &OptimizerConfig,
) -> Result<SettingsOptimum> {
    let t = correlator_tensors(scenario)?;
    Ok(maximize_settings(&t, cfg))
}

/// Largest network bound found for a channel and usage pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSearch {
    pub sup: f64,
    pub threshold: f64,
    /// Input states attaining `sup`.
    pub input: NetworkScenario,
    pub transformed: NetworkScenario,
    /// Number of bound evaluations performed.
    pub evaluated: usize,
}

impl StateSearch {
    pub fn exceeds_threshold(&self, slack: f64) -> bool {
        self.sup > self.threshold + slack
    }
}

struct Objective<'a> {
    ch: &'a QubitChannelAffine,
    placements: &'a [Placement],
    topology: Topology,
}

impl Objective<'_> {
    fn source(&self, j: usize, s: &BlochState) -> OrderedSingulars {
        apply_placement(self.ch, self.placements[j], s).singulars()
    }

    fn bound(&self, sv: &[OrderedSingulars]) -> f64 {
        match self.topology {
            Topology::Linear => linear_bound_from(sv).0,
            Topology::Star | Topology::StarFnn3 => star_bound_from(sv).0,
        }
    }

    fn candidate(&self, states: Vec<BlochState>) -> Candidate {
        let sv: Vec<_> = states.iter().enumerate().map(|(j, s)| self.source(j, s)).collect();
        let value = self.bound(&sv);
        Candidate { states, sv, value }
    }
}

#[derive(Clone)]
struct Candidate {
    states: Vec<BlochState>,
    sv: Vec<OrderedSingulars>,
    value: f64,
}

/// Physical states with `a = b = 0` and `W` diagonal with entries in {-1, 0, 1}.
fn structured_states() -> Vec<BlochState> {
    let tol = Tolerances::default();
    let vals = [-1.0, 0.0, 1.0];
    let mut out = Vec::new();
    for &x in &vals {
        for &y in &vals {
            for &z in &vals {
                let s = BlochState::diagonal(x, y, z);
                if s.is_physical(&tol) {
                    out.push(s);
                }
            }
        }
    }
    out
}

/// `V sqrt(D)` for `rho = V D V^dagger`, so that `A A^dagger = rho`.
fn gram_root(rho: &CMat4) -> CMat4 {
    let eig = rho.symmetric_eigen();
    let mut a = eig.eigenvectors;
    for j in 0..4 {
        let s = c(eig.eigenvalues[j].max(0.0).sqrt(), 0.0);
        for i in 0..4 {
            a[(i, j)] *= s;
        }
    }
    a
}

fn state_from_factor(a: &CMat4) -> Option<BlochState> {
    let m = a * a.adjoint();
    let tr = m.trace().re;
    if !(tr > 1e-300 && tr.is_finite()) {
        return None;
    }
    Some(to_bloch(&DensityOperator::trusted(m / c(tr, 0.0))))
}

/// Searches input states for the largest network bound after the channel
/// acts according to `u`.
///
/// Three sources of candidates: every assignment of the structured diagonal
/// family to the placement classes, `cfg.samples` scenarios of independent
/// random states, and random-walk refinement of the best `cfg.restarts`
/// candidates in the Gram-factor parametrization `rho = A A^dagger / Tr`.
pub fn max_bound_over_states(
    ch: &QubitChannelAffine,
    u: &UsagePattern,
    topology: Topology,
    cfg: &OptimizerConfig,
) -> Result<StateSearch> {
    let n = u.n();
    // validates topology against n
    NetworkScenario::uniform(topology, n, BlochState::max_mixed())?;
    let obj = Objective {
        ch,
        placements: u.placements(),
        topology,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut evaluated = 0usize;
    let keep = cfg.restarts();
    let mut top: Vec<Candidate> = Vec::new();
    let offer = |cand: Candidate, top: &mut Vec<Candidate>| {
        let pos = top.iter().position(|t| cand.value > t.value).unwrap_or(top.len());
        if pos < keep {
            top.insert(pos, cand);
            top.truncate(keep);
        }
    };

    // structured family, one choice per placement class
    let family = structured_states();
    let mut classes: Vec<Placement> = Vec::new();
    for p in u.placements() {
        if !classes.contains(p) {
            classes.push(*p);
        }
    }
    let class_of: Vec<usize> = u
        .placements()
        .iter()
        .map(|p| classes.iter().position(|q| q == p).unwrap())
        .collect();
    let combos = family.len().pow(classes.len() as u32);
    for mut idx in 0..combos {
        let mut pick = vec![0usize; classes.len()];
        for slot in pick.iter_mut() {
            *slot = idx % family.len();
            idx /= family.len();
        }
        let states = class_of.iter().map(|&k| family[pick[k]]).collect();
        offer(obj.candidate(states), &mut top);
        evaluated += 1;
    }

    for _ in 0..cfg.samples {
        let states = (0..n).map(|_| random_bloch_state(&mut rng)).collect();
        offer(obj.candidate(states), &mut top);
        evaluated += 1;
    }

    let tol = Tolerances::default();
    let mut best = top[0].clone();
    for start in top {
        let mut cur = start;
        let mut factors: Vec<CMat4> = cur
            .states
            .iter()
            .map(|s| gram_root(&from_bloch(s, &tol).matrix))
            .collect();
        let mut sigma = 0.25;
        for _ in 0..cfg.max_iters {
            let mut moved = false;
            for (j, factor) in factors.iter_mut().enumerate() {
                let scale = factor.norm().max(1e-12);
                let trial = *factor + CMat4::from_fn(|_, _| gaussian_c(&mut rng)) * c(sigma * scale, 0.0);
                let Some(s) = state_from_factor(&trial) else { continue };
                let old = cur.sv[j];
                cur.sv[j] = obj.source(j, &s);
                let value = obj.bound(&cur.sv);
                evaluated += 1;
                if value > cur.value {
                    cur.value = value;
                    cur.states[j] = s;
                    *factor = trial;
                    moved = true;
                } else {
                    cur.sv[j] = old;
                }
            }
            if !moved {
                sigma *= 0.5;
                if sigma < cfg.step_tol {
                    break;
                }
            }
        }
        if cur.value > best.value {
            best = cur;
        }
    }

    let input = NetworkScenario::new(topology, best.states)?;
    let transformed = apply_usage(ch, &input, u)?;
    Ok(StateSearch {
        sup: best.value,
        threshold: topology.threshold(),
        input,
        transformed,
        evaluated,
    })
}
