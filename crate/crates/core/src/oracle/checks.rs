//! Verification suites: closed-form eigenvalues, Kraus versus affine
//! channel action, correlators versus the chain bound, and a soundness
//! sweep of the breaking criteria against the state search.

use std::collections::BTreeMap;

use nalgebra::Matrix3;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bloch::{from_bloch, to_bloch, BlochState, DensityOperator};
use crate::channels::{apply, PauliDampingChannel, RandomUnitaryChannel};
use crate::criteria::{Evaluator, TheoremId};
use crate::error::{Error, Result};
use crate::linalg::{c, kron2, pauli, rotation_svd3, CMat2, CMat4};
use crate::network::{NetworkScenario, Placement, Side, Topology, UsagePattern};
use crate::oracle::correlators::{correlator_tensors, simulate_linear_correlators, MeasurementSetting};
use crate::oracle::optimize::{max_bound_over_states, maximize_settings};
use crate::oracle::sampling::{random_bloch_state, random_ru_channel, random_unit_vector};
use crate::oracle::{OptimizerConfig, VerificationReport};
use crate::tolerance::Tolerances;

/// Agreement demanded between closed-form and numerical eigenvalues.
pub const EIG_TOL: f64 = 1e-10;
/// Agreement demanded between the Kraus and affine paths.
pub const KRAUS_TOL: f64 = 1e-12;
/// Slack on the correlator inequality.
pub const CORRELATOR_SLACK: f64 = 1e-6;
/// How close the optimizer must come to the bound for Bell sources.
pub const ATTAIN_TOL: f64 = 1e-3;
/// Slack on `sup <= threshold` in the soundness sweep.
pub const SOUNDNESS_SLACK: f64 = 1e-9;

/// Per-sample stream derived from a base seed.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index + 1);
    rng.next_u64()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sides {
    /// Channel on the first qubit only.
    One,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigCheck {
    pub sides: Sides,
    /// `f1` or `f3`: the sum of the two nonzero eigenvalues of `W'^T W'`.
    pub f_sum: f64,
    /// `f2` or `f4`: the squared gap between them.
    pub f_gap: f64,
    pub predicted: [f64; 3],
    /// Squared singular values of the transformed tensor, largest first.
    pub observed: [f64; 3],
    pub max_deviation: f64,
    /// Upper bound on `f_sum` that holds for every state.
    pub sum_bound: f64,
}

/// Rotates `s` locally so that `W` becomes diagonal.
pub fn canonicalize(s: &BlochState) -> BlochState {
    let (r1, d, r2) = rotation_svd3(&s.w);
    BlochState {
        a: r1.transpose() * s.a,
        b: r2.transpose() * s.b,
        w: Matrix3::from_diagonal(&d),
    }
}

/// Closed-form eigenvalues of `W'^T W'` for a damping channel acting on a
/// state with diagonal `W`, compared against a numerical SVD.
///
/// The state is first rotated to diagonal `W` (see [`canonicalize`]).
pub fn eig_formula_check(c: &PauliDampingChannel, s: &BlochState, sides: Sides) -> Result<EigCheck> {
    if c.lambda2 != 0.0 {
        return Err(Error::InvalidChannel("closed forms need lambda2 = 0".into()));
    }
    let s = canonicalize(s);
    let (t, l1, l3) = (c.t, c.lambda1, c.lambda3);
    let (a, b) = (s.a, s.b);
    let (w1, w3) = (s.w[(0, 0)], s.w[(2, 2)]);
    let ch = c.to_affine();
    let (f_sum, f_gap, sum_bound, out) = match sides {
        Sides::One => {
            let f1 = t * t * b.norm_squared()
                + l1 * l1 * w1 * w1
                + l3 * l3 * w3 * w3
                + 2.0 * t * b[2] * w3 * l3;
            let f2 = f1 * f1
                - 4.0 * ((b[1] * w1 * t * l1).powi(2) + (w1 * l1).powi(2) * (b[2] * t + w3 * l3).powi(2));
            let bound = (t.abs() + l3.abs()).powi(2) + l1 * l1;
            (f1, f2, bound, apply(Some(&ch), None, &s))
        }
        Sides::Both => {
            let big_s = t * t + t * l3 * (b[2] + a[2]) + l3 * l3 * w3;
            let f3 = (b[0] * b[0] + a[0] * a[0]) * t * t * l1 * l1 + w1 * w1 * l1.powi(4) + big_s * big_s;
            let f4 = f3 * f3 - 4.0 * l1.powi(4) * (big_s * w1 - a[0] * b[0] * t * t).powi(2);
            let bound = 2.0 * t * t * l1 * l1 + l1.powi(4) + (t.abs() + l3.abs()).powi(4);
            (f3, f4, bound, apply(Some(&ch), Some(&ch), &s))
        }
    };
    let root = f_gap.max(0.0).sqrt();
    let predicted = [(f_sum + root) / 2.0, (f_sum - root) / 2.0, 0.0];
    let observed = out.singulars().as_array().map(|e| e * e);
    let mut dev = predicted
        .iter()
        .zip(&observed)
        .map(|(p, o)| (p - o).abs())
        .fold(0.0, f64::max);
    // negative gap beyond rounding, or sqrt(gap) > sum, or the sum bound broken
    dev = dev.max((-f_gap).max(0.0)).max(root - f_sum).max(f_sum - sum_bound);
    let check = EigCheck {
        sides,
        f_sum,
        f_gap,
        predicted,
        observed,
        max_deviation: dev,
        sum_bound,
    };
    if dev > EIG_TOL {
        return Err(Error::FormulaMismatch {
            what: format!("{sides:?}-sided eigenvalues at (t, l1, l3) = ({t}, {l1}, {l3})"),
            max_deviation: dev,
        });
    }
    Ok(check)
}

/// Random admissible damping channels against random states, one- and
/// two-sided.
pub fn eig_formula_suite(samples: usize, seed: u64) -> VerificationReport {
    let tol = Tolerances::default();
    let results: Vec<(f64, Option<String>)> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i + 1);
            let ch = crate::oracle::sampling::random_damping(&mut rng, &tol);
            let s = random_bloch_state(&mut rng);
            let mut worst = 0.0f64;
            let mut msg = None;
            for sides in [Sides::One, Sides::Both] {
                match eig_formula_check(&ch, &s, sides) {
                    Ok(r) => worst = worst.max(r.max_deviation),
                    Err(Error::FormulaMismatch { what, max_deviation }) => {
                        worst = worst.max(max_deviation);
                        msg.get_or_insert(format!("sample {i}: {what}"));
                    }
                    Err(e) => {
                        worst = f64::INFINITY;
                        msg.get_or_insert(format!("sample {i}: {e}"));
                    }
                }
            }
            (worst, msg)
        })
        .collect();
    let max_deviation = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let notes: Vec<String> = results.into_iter().filter_map(|r| r.1).take(8).collect();
    VerificationReport {
        check: "eig-formulas".into(),
        samples,
        max_deviation,
        pass: max_deviation <= EIG_TOL,
        seed,
        notes,
    }
}

/// A channel given by weighted Kraus operators, each `sqrt(w) K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KrausFamily {
    /// Four equal-weight unitaries from `(alpha, beta)`.
    RandomUnitary,
    /// `{sqrt(1 - 3q/4) I, sqrt(q/4) X, sqrt(q/4) Y, sqrt(q/4) Z}`
    Depolarizing,
    /// `{sqrt(1 - p/2) I, sqrt(p/2) Z}`
    Dephasing,
}

impl KrausFamily {
    pub const ALL: [KrausFamily; 3] = [Self::RandomUnitary, Self::Depolarizing, Self::Dephasing];

    pub fn name(&self) -> &'static str {
        match self {
            Self::RandomUnitary => "random-unitary",
            Self::Depolarizing => "depolarizing",
            Self::Dephasing => "dephasing",
        }
    }
}

/// Kraus set with weights and the affine form it should match.
pub fn family_channel(
    family: KrausFamily,
    param: f64,
    ru: Option<&RandomUnitaryChannel>,
) -> Result<(Vec<(f64, CMat2)>, crate::channels::QubitChannelAffine)> {
    match family {
        KrausFamily::RandomUnitary => {
            let ch = ru.copied().unwrap_or_else(RandomUnitaryChannel::identity);
            Ok((ch.kraus().to_vec(), ch.to_affine()))
        }
        KrausFamily::Depolarizing => {
            let aff = crate::channels::depolarizing(param)?.to_affine();
            let mut k = vec![(1.0 - 0.75 * param, pauli(0))];
            for i in 1..4 {
                k.push((param / 4.0, pauli(i)));
            }
            Ok((k, aff))
        }
        KrausFamily::Dephasing => {
            let aff = crate::channels::dephasing(param)?.to_affine();
            Ok((vec![(1.0 - param / 2.0, pauli(0)), (param / 2.0, pauli(3))], aff))
        }
    }
}

/// `sum_i w_i (K_i x I) rho (K_i x I)^dagger`, or the two-sided double sum.
pub fn kraus_apply(kraus: &[(f64, CMat2)], rho: &CMat4, both: bool) -> CMat4 {
    let id = pauli(0);
    let mut out = CMat4::zeros();
    if both {
        for (wa, ka) in kraus {
            for (wb, kb) in kraus {
                let k = kron2(ka, kb);
                out += k * rho * k.adjoint() * c(wa * wb, 0.0);
            }
        }
    } else {
        for (w, k) in kraus {
            let k = kron2(k, &id);
            out += k * rho * k.adjoint() * c(*w, 0.0);
        }
    }
    out
}

/// Largest entrywise gap between the Kraus and affine paths for one state.
pub fn kraus_deviation(
    kraus: &[(f64, CMat2)],
    aff: &crate::channels::QubitChannelAffine,
    s: &BlochState,
) -> f64 {
    let rho = from_bloch(s, &Tolerances::default()).matrix;
    // both paths start from the same density matrix
    let s = &to_bloch(&DensityOperator::trusted(rho));
    let mut worst = 0.0f64;
    for both in [false, true] {
        let m = kraus_apply(kraus, &rho, both);
        let via_kraus = to_bloch(&DensityOperator::trusted(m));
        let via_affine = if both {
            apply(Some(aff), Some(aff), s)
        } else {
            apply(Some(aff), None, s)
        };
        worst = worst.max(via_kraus.max_abs_diff(&via_affine));
    }
    worst
}

/// One fixed random-unitary channel against `samples` random states.
pub fn bloch_kraus_crosscheck(ch: &RandomUnitaryChannel, samples: usize, seed: u64) -> VerificationReport {
    let kraus = ch.kraus();
    let aff = ch.to_affine();
    let max_deviation = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i + 1);
            kraus_deviation(&kraus, &aff, &random_bloch_state(&mut rng))
        })
        .reduce(|| 0.0, f64::max);
    VerificationReport {
        check: "bloch-kraus".into(),
        samples,
        max_deviation,
        pass: max_deviation <= KRAUS_TOL,
        seed,
        notes: vec![format!("alpha = {}, beta = {}", ch.alpha(), ch.beta())],
    }
}

/// `samples` draws per family, each with its own random parameter and state.
pub fn bloch_kraus_suite(samples: usize, seed: u64) -> VerificationReport {
    let mut notes = Vec::new();
    let mut max_deviation = 0.0f64;
    for (fi, family) in KrausFamily::ALL.iter().enumerate() {
        let dev = (0..samples as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(((fi as u64) << 40) + i + 1);
                let ru = random_ru_channel(&mut rng);
                let param = rng.random_range(0.0..=1.0);
                let (kraus, aff) = family_channel(*family, param, Some(&ru)).expect("parameter in [0, 1]");
                kraus_deviation(&kraus, &aff, &random_bloch_state(&mut rng))
            })
            .reduce(|| 0.0, f64::max);
        notes.push(format!("{}: max deviation {dev:e}", family.name()));
        max_deviation = max_deviation.max(dev);
    }
    VerificationReport {
        check: "bloch-kraus".into(),
        samples: samples * KrausFamily::ALL.len(),
        max_deviation,
        pass: max_deviation <= KRAUS_TOL,
        seed,
        notes,
    }
}

/// Settings drawn per random scenario in [`bound_vs_correlators`].
const SETTINGS_PER_SCENARIO: usize = 10;

/// `sqrt|I_n| + sqrt|J_n|` never exceeds the chain bound for random sources
/// and settings, and the optimizer reaches the bound for Bell sources.
///
/// `max_deviation` is the largest `value - bound` seen (negative when every
/// setting stays strictly below).
pub fn bound_vs_correlators(n: usize, samples: usize, seed: u64) -> Result<VerificationReport> {
    if !(1..=crate::oracle::correlators::MAX_SIMULATED_SOURCES).contains(&n) {
        return Err(Error::Dimension(n));
    }
    let scenarios = samples.div_ceil(SETTINGS_PER_SCENARIO).max(1);
    let per: Vec<Result<(f64, f64)>> = (0..scenarios as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i + 1);
            let states = (0..n).map(|_| random_bloch_state(&mut rng)).collect();
            let sc = NetworkScenario::new(Topology::Linear, states)?;
            let bound = sc.bound()?.bound;
            let t = correlator_tensors(&sc)?;
            let mut worst = f64::NEG_INFINITY;
            let mut path_gap = 0.0f64;
            let count = SETTINGS_PER_SCENARIO.min(samples - (i as usize) * SETTINGS_PER_SCENARIO);
            for k in 0..count {
                let ms = MeasurementSetting::new(
                    [random_unit_vector(&mut rng), random_unit_vector(&mut rng)],
                    [random_unit_vector(&mut rng), random_unit_vector(&mut rng)],
                )?;
                let v = t.evaluate(&ms);
                if k == 0 {
                    let direct = simulate_linear_correlators(&sc, &ms)?;
                    path_gap = (direct.i - v.i).abs().max((direct.j - v.j).abs());
                }
                worst = worst.max(v.value() - bound);
            }
            let opt = maximize_settings(
                &t,
                &OptimizerConfig {
                    restarts: 4,
                    max_iters: 100,
                    seed: derive_seed(seed, i),
                    ..OptimizerConfig::default()
                },
            );
            worst = worst.max(opt.value - bound);
            Ok((worst, path_gap))
        })
        .collect();
    let mut max_deviation = f64::NEG_INFINITY;
    let mut path_gap = 0.0f64;
    for r in per {
        let (w, g) = r?;
        max_deviation = max_deviation.max(w);
        path_gap = path_gap.max(g);
    }

    let mut notes = vec![format!("born-rule vs bilinear form: max gap {path_gap:e}")];
    let mut attained = true;
    for (label, s) in [("bell-phi+", BlochState::phi_plus()), ("bell-psi-", BlochState::psi_minus())] {
        let sc = NetworkScenario::uniform(Topology::Linear, n, s)?;
        let bound = sc.bound()?.bound;
        let opt = maximize_settings(&correlator_tensors(&sc)?, &OptimizerConfig::default().with_seed(seed));
        let gap = bound - opt.value;
        attained &= gap <= ATTAIN_TOL && opt.value <= bound + CORRELATOR_SLACK;
        notes.push(format!("{label}: optimizer {:.12} vs bound {bound:.12}", opt.value));
    }
    Ok(VerificationReport {
        check: format!("bound-vs-correlators-n{n}"),
        samples,
        max_deviation,
        pass: max_deviation <= CORRELATOR_SLACK && path_gap <= KRAUS_TOL && attained,
        seed,
        notes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoundnessConfig {
    pub channels_per_theorem: usize,
    pub scenarios: usize,
    pub seed: u64,
    pub restarts: usize,
    pub max_iters: usize,
}

impl Default for SoundnessConfig {
    fn default() -> Self {
        Self {
            channels_per_theorem: 50,
            scenarios: 10_000,
            seed: 0,
            restarts: 8,
            max_iters: 100,
        }
    }
}

/// Channel description for reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SampledChannel {
    RandomUnitary { alpha: [f64; 2], beta: [f64; 2] },
    PauliDamping { t: f64, l1: f64, l3: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoundnessCase {
    pub theorem: TheoremId,
    pub channel: SampledChannel,
    pub topology: Topology,
    pub n: usize,
    pub m1: usize,
    pub m2: usize,
    pub k: usize,
    pub threshold: f64,
    pub sup: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoundnessReport {
    pub seed: u64,
    pub cases: Vec<SoundnessCase>,
    /// Number of cases with `sup > threshold + slack`, per theorem.
    pub failures: BTreeMap<String, usize>,
    /// Largest `sup - threshold` over all cases.
    pub max_excess: f64,
    pub pass: bool,
}

impl SoundnessReport {
    pub fn to_verification(&self) -> VerificationReport {
        let mut notes: Vec<String> = self
            .failures
            .iter()
            .map(|(t, f)| format!("{t}: {f} of {} certified cases exceed the threshold", self.count(t)))
            .collect();
        if let Some(worst) = self
            .cases
            .iter()
            .filter(|c| !c.pass)
            .max_by(|a, b| (a.sup - a.threshold).total_cmp(&(b.sup - b.threshold)))
        {
            notes.push(format!(
                "worst: {} {:?} n={} m1={} m2={} sup={:.9}",
                worst.theorem.name(),
                worst.channel,
                worst.n,
                worst.m1,
                worst.m2,
                worst.sup
            ));
        }
        VerificationReport {
            check: "soundness".into(),
            samples: self.cases.len(),
            max_deviation: self.max_excess,
            pass: self.pass,
            seed: self.seed,
            notes,
        }
    }

    fn count(&self, theorem: &str) -> usize {
        self.cases.iter().filter(|c| c.theorem.name() == theorem).count()
    }
}

/// Random pattern with `k` uses on `n` sources; `None` if impossible.
fn random_pattern<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> Option<UsagePattern> {
    let lo = k.saturating_sub(n);
    let hi = k / 2;
    let choices: Vec<usize> = (lo..=hi).collect();
    let m2 = *choices.as_slice().choose(rng)?;
    random_split(rng, n, k - 2 * m2, m2)
}

fn random_split<R: Rng + ?Sized>(rng: &mut R, n: usize, m1: usize, m2: usize) -> Option<UsagePattern> {
    if m1 + m2 > n {
        return None;
    }
    let mut p = vec![Placement::None; n];
    for slot in p.iter_mut().take(m2) {
        *slot = Placement::Both;
    }
    for slot in p.iter_mut().skip(m2).take(m1) {
        *slot = Placement::OneSide(if rng.random_bool(0.5) { Side::A } else { Side::B });
    }
    p.shuffle(rng);
    UsagePattern::new(p).ok()
}

fn draw_unital<R: Rng + ?Sized>(rng: &mut R) -> RandomUnitaryChannel {
    if rng.random_bool(0.5) {
        crate::channels::depolarizing(rng.random_range(0.0..=1.0)).expect("q in [0, 1]")
    } else {
        random_ru_channel(rng)
    }
}

const MAX_DRAWS: usize = 200_000;

struct Draw {
    theorem: TheoremId,
    channel: SampledChannel,
    affine: crate::channels::QubitChannelAffine,
    topology: Topology,
    pattern: UsagePattern,
}

fn ru_desc(c: &RandomUnitaryChannel) -> SampledChannel {
    SampledChannel::RandomUnitary {
        alpha: [c.alpha().re, c.alpha().im],
        beta: [c.beta().re, c.beta().im],
    }
}

fn damping_desc(c: &PauliDampingChannel) -> SampledChannel {
    SampledChannel::PauliDamping {
        t: c.t,
        l1: c.lambda1,
        l3: c.lambda3,
    }
}

/// Rejection-samples a channel and pattern that `theorem` certifies breaking.
fn draw_certified<R: Rng + ?Sized>(rng: &mut R, theorem: TheoremId, ev: &Evaluator) -> Option<Draw> {
    for _ in 0..MAX_DRAWS {
        let drawn = match theorem {
            TheoremId::Thm1 | TheoremId::Thm4 => {
                let ch = draw_unital(rng);
                let (topology, n) = if theorem == TheoremId::Thm1 {
                    (Topology::Linear, rng.random_range(1..=4))
                } else {
                    (Topology::Star, rng.random_range(2..=5))
                };
                let k = rng.random_range(1..=2 * n);
                let v = if theorem == TheoremId::Thm1 {
                    ev.thm1_unital_linear(&ch, k)
                } else {
                    ev.thm4_unital_star(&ch, k, n)
                };
                match (v, random_pattern(rng, n, k)) {
                    (Ok(v), Some(u)) if v.is_breaking() => Some(Draw {
                        theorem,
                        channel: ru_desc(&ch),
                        affine: ch.to_affine(),
                        topology,
                        pattern: u,
                    }),
                    _ => None,
                }
            }
            TheoremId::Thm3 => {
                let ch = crate::oracle::sampling::random_damping(rng, &ev.tol);
                let n = rng.random_range(1..=4);
                let k = rng.random_range(1..=2 * n);
                match (ev.thm3_nonunital_linear(&ch), random_pattern(rng, n, k)) {
                    (Ok(v), Some(u)) if v.is_breaking() => Some(Draw {
                        theorem,
                        channel: damping_desc(&ch),
                        affine: ch.to_affine(),
                        topology: Topology::Linear,
                        pattern: u,
                    }),
                    _ => None,
                }
            }
            TheoremId::Thm6 => {
                let ch = crate::oracle::sampling::random_damping(rng, &ev.tol);
                let n = rng.random_range(2..=5);
                let m2 = rng.random_range(0..=n);
                let m1 = rng.random_range(0..=n - m2);
                if m1 + m2 == 0 {
                    None
                } else {
                    match (ev.thm6_nonunital_star(&ch, m1, m2, n), random_split(rng, n, m1, m2)) {
                        (Ok(v), Some(u)) if v.is_breaking() => Some(Draw {
                            theorem,
                            channel: damping_desc(&ch),
                            affine: ch.to_affine(),
                            topology: Topology::Star,
                            pattern: u,
                        }),
                        _ => None,
                    }
                }
            }
            TheoremId::Thm8 => {
                let ch = draw_unital(rng);
                let k = rng.random_range(1..=6);
                match (ev.thm8_unital_fnn(&ch, k), random_pattern(rng, 3, k)) {
                    (Ok(v), Some(u)) if v.is_breaking() => Some(Draw {
                        theorem,
                        channel: ru_desc(&ch),
                        affine: ch.to_affine(),
                        topology: Topology::StarFnn3,
                        pattern: u,
                    }),
                    _ => None,
                }
            }
            TheoremId::Thm9 => {
                let ch = crate::oracle::sampling::random_damping(rng, &ev.tol);
                let m2 = rng.random_range(0..=3);
                let m1 = rng.random_range(0..=3 - m2);
                if m1 + m2 == 0 {
                    None
                } else {
                    match (ev.thm9_nonunital_fnn(&ch, m1, m2), random_split(rng, 3, m1, m2)) {
                        (Ok(v), Some(u)) if v.is_breaking() => Some(Draw {
                            theorem,
                            channel: damping_desc(&ch),
                            affine: ch.to_affine(),
                            topology: Topology::StarFnn3,
                            pattern: u,
                        }),
                        _ => None,
                    }
                }
            }
            _ => return None,
        };
        if drawn.is_some() {
            return drawn;
        }
    }
    None
}

/// Theorems whose breaking certificates the sweep exercises.
pub const SWEPT: [TheoremId; 4] = [TheoremId::Thm1, TheoremId::Thm3, TheoremId::Thm4, TheoremId::Thm6];

/// For each theorem in [`SWEPT`], samples certified channels and patterns and
/// searches input states for a bound above the threshold.
pub fn soundness_sweep(cfg: &SoundnessConfig) -> Result<SoundnessReport> {
    soundness_sweep_for(&SWEPT, cfg)
}

pub fn soundness_sweep_for(theorems: &[TheoremId], cfg: &SoundnessConfig) -> Result<SoundnessReport> {
    let ev = Evaluator::new(Tolerances::default());
    let mut draws = Vec::new();
    for (ti, &theorem) in theorems.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(ti as u64 + 1);
        for _ in 0..cfg.channels_per_theorem {
            let d = draw_certified(&mut rng, theorem, &ev).ok_or_else(|| {
                Error::Domain(format!("no certified sample found for {}", theorem.name()))
            })?;
            draws.push(d);
        }
    }
    let cases: Vec<SoundnessCase> = draws
        .par_iter()
        .enumerate()
        .map(|(i, d)| {
            let opt = OptimizerConfig {
                restarts: cfg.restarts,
                max_iters: cfg.max_iters,
                step_tol: 1e-9,
                seed: derive_seed(cfg.seed, i as u64),
                samples: cfg.scenarios,
            };
            let r = max_bound_over_states(&d.affine, &d.pattern, d.topology, &opt)?;
            Ok(SoundnessCase {
                theorem: d.theorem,
                channel: d.channel,
                topology: d.topology,
                n: d.pattern.n(),
                m1: d.pattern.m1(),
                m2: d.pattern.m2(),
                k: d.pattern.k(),
                threshold: r.threshold,
                sup: r.sup,
                pass: !r.exceeds_threshold(SOUNDNESS_SLACK),
            })
        })
        .collect::<Result<_>>()?;
    let mut failures = BTreeMap::new();
    for t in theorems {
        failures.insert(
            t.name().to_string(),
            cases.iter().filter(|c| c.theorem == *t && !c.pass).count(),
        );
    }
    let max_excess = cases
        .iter()
        .map(|c| c.sup - c.threshold)
        .fold(f64::NEG_INFINITY, f64::max);
    let pass = cases.iter().all(|c| c.pass);
    Ok(SoundnessReport {
        seed: cfg.seed,
        cases,
        failures,
        max_excess,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{dephasing, depolarizing};
    use nalgebra::Vector3;

    #[test]
    fn unital_sub_case_reduces_to_products() {
        let tol = Tolerances::default();
        let ch = PauliDampingChannel::new(0.0, 0.6, 0.3, &tol).unwrap();
        let s = BlochState::diagonal(0.5, 0.4, -0.2);
        let r = eig_formula_check(&ch, &s, Sides::One).unwrap();
        let e = [0.36 * 0.25, 0.09 * 0.04];
        assert!((r.predicted[0] - e[0]).abs() < 1e-15 && (r.predicted[1] - e[1]).abs() < 1e-15);
    }

    #[test]
    fn zero_local_vectors_give_exact_sum() {
        let tol = Tolerances::default();
        let ch = PauliDampingChannel::new(0.2, 0.5, 0.3, &tol).unwrap();
        let s = BlochState::diagonal(0.7, 0.6, 0.1);
        let r = eig_formula_check(&ch, &s, Sides::One).unwrap();
        let (l1, l3, w1, w3) = (0.5, 0.3, 0.7, 0.1);
        assert_eq!(r.f_sum, l1 * l1 * w1 * w1 + l3 * l3 * w3 * w3);
    }

    #[test]
    fn eig_suite_passes() {
        let r = eig_formula_suite(300, 11);
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn kraus_paths_agree() {
        let id = bloch_kraus_crosscheck(&RandomUnitaryChannel::identity(), 20, 1);
        assert!(id.max_deviation < 1e-15);
        assert!(bloch_kraus_crosscheck(&depolarizing(0.37).unwrap(), 100, 2).pass);
        assert!(bloch_kraus_crosscheck(&dephasing(0.81).unwrap(), 100, 3).pass);
        let r = bloch_kraus_suite(100, 4);
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn canonical_form_is_diagonal() {
        let s = BlochState::new(
            Vector3::new(0.1, 0.2, 0.0),
            Vector3::new(0.0, -0.1, 0.3),
            Matrix3::new(0.2, 0.1, 0.0, -0.3, 0.4, 0.1, 0.0, 0.2, -0.1),
        );
        let k = canonicalize(&s);
        let off = k.w - Matrix3::from_diagonal(&k.w.diagonal());
        assert!(off.amax() < 1e-14);
        assert!((k.a.norm() - s.a.norm()).abs() < 1e-14);
    }

    #[test]
    fn correlators_respect_bound() {
        for n in 1..=2 {
            let r = bound_vs_correlators(n, 60, 5).unwrap();
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn sweep_is_deterministic_and_sound_for_thm1() {
        let cfg = SoundnessConfig {
            channels_per_theorem: 3,
            scenarios: 200,
            seed: 9,
            restarts: 2,
            max_iters: 20,
        };
        let a = soundness_sweep_for(&[TheoremId::Thm1, TheoremId::Thm3], &cfg).unwrap();
        let b = soundness_sweep_for(&[TheoremId::Thm1, TheoremId::Thm3], &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.pass, "{a:?}");
    }
}
