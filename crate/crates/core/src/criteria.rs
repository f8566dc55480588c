//! Sufficient conditions for a k-use channel to break (or provably not break)
//! detectable network nonlocality, with tri-state verdicts.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{is_proper, PauliDampingChannel, RandomUnitaryChannel};
use crate::error::{Error, Result};
use crate::network::{Topology, UsagePattern};
use crate::oracle::witness::{
    phi_plus_closed_form, phi_plus_y_values, witness_phi_minus, witness_phi_plus, ImproperCase,
    WitnessSummary, WITNESS_MARGIN,
};
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    BreakingCertified,
    PreservingCertified,
    Inconclusive,
}

impl Status {
    /// Short form used in CSV output.
    pub fn short(&self) -> &'static str {
        match self {
            Status::BreakingCertified => "breaking",
            Status::PreservingCertified => "preserving",
            Status::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoremId {
    Thm1,
    Thm2,
    Thm3,
    Thm4,
    Thm5,
    Thm6,
    Thm7,
    Thm8,
    Thm9,
}

impl TheoremId {
    pub const ALL: [TheoremId; 9] = [
        TheoremId::Thm1,
        TheoremId::Thm2,
        TheoremId::Thm3,
        TheoremId::Thm4,
        TheoremId::Thm5,
        TheoremId::Thm6,
        TheoremId::Thm7,
        TheoremId::Thm8,
        TheoremId::Thm9,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            TheoremId::Thm1 => "thm1",
            TheoremId::Thm2 => "thm2",
            TheoremId::Thm3 => "thm3",
            TheoremId::Thm4 => "thm4",
            TheoremId::Thm5 => "thm5",
            TheoremId::Thm6 => "thm6",
            TheoremId::Thm7 => "thm7",
            TheoremId::Thm8 => "thm8",
            TheoremId::Thm9 => "thm9",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown criterion `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub theorem: TheoremId,
    pub status: Status,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs` for breaking-type criteria, `lhs - 1` (bound over threshold)
    /// for preserving-type ones.
    pub margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessSummary>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub details: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

impl Verdict {
    fn breaking_type(theorem: TheoremId, lhs: f64, rhs: f64, certified: bool) -> Self {
        Self {
            theorem,
            status: if certified {
                Status::BreakingCertified
            } else {
                Status::Inconclusive
            },
            lhs,
            rhs,
            margin: rhs - lhs,
            witness: None,
            details: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    fn detail(mut self, key: &str, value: f64) -> Self {
        self.details.insert(key.to_string(), value);
        self
    }

    fn note(mut self, text: impl Into<String>) -> Self {
        self.notes.push(text.into());
        self
    }

    pub fn is_breaking(&self) -> bool {
        self.status == Status::BreakingCertified
    }

    pub fn is_preserving(&self) -> bool {
        self.status == Status::PreservingCertified
    }
}

/// `2^(-(1 + e))` in the general case, `2^(-e)` when three of the `M` values coincide.
fn unital_rhs(exponent: f64, three_equal: bool) -> f64 {
    if three_equal {
        2f64.powf(-exponent)
    } else {
        2f64.powf(-(1.0 + exponent))
    }
}

fn three_equal(m: &[f64; 4], eps: f64) -> bool {
    const TRIPLES: [[usize; 3]; 4] = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]];
    TRIPLES.iter().any(|t| {
        let v = t.map(|i| m[i]);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        hi - lo <= eps
    })
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        Err(Error::PatternMismatch("k = 0 uses certify nothing".into()))
    } else {
        Ok(())
    }
}

/// `(|t| + |l3|)^2 + l1^2`: bounds the singular-value sum for one-sided use.
pub fn damping_one_side_sum(c: &PauliDampingChannel) -> f64 {
    (c.t.abs() + c.lambda3.abs()).powi(2) + c.lambda1 * c.lambda1
}

/// `2 t^2 l1^2 + l1^4 + (|t| + |l3|)^4`: the two-sided counterpart.
pub fn damping_both_side_sum(c: &PauliDampingChannel) -> f64 {
    let l1s = c.lambda1 * c.lambda1;
    2.0 * c.t * c.t * l1s + l1s * l1s + (c.t.abs() + c.lambda3.abs()).powi(4)
}

/// Evaluates every criterion under one set of tolerances.
#[derive(Debug, Clone, Copy, Default)]
pub struct Evaluator {
    pub tol: Tolerances,
}

impl Evaluator {
    pub fn new(tol: Tolerances) -> Self {
        Self { tol }
    }

    fn unital_breaking(
        &self,
        theorem: TheoremId,
        c: &RandomUnitaryChannel,
        exponent: f64,
    ) -> Verdict {
        let f = c.s_factors();
        let lhs = f.m_max - f.m_min;
        let eq3 = three_equal(&f.m, self.tol.eq);
        let rhs = unital_rhs(exponent, eq3);
        let proper = is_proper(c.alpha(), self.tol.proper) && is_proper(c.beta(), self.tol.proper);
        let mut v = Verdict::breaking_type(theorem, lhs, rhs, proper && self.tol.le(lhs, rhs))
            .detail("m_max", f.m_max)
            .detail("m_min", f.m_min);
        if eq3 {
            v = v.note("three of the squared components coincide; sharper threshold used");
        }
        if !proper {
            v = v.note("alpha and beta must both have nonzero real and imaginary parts");
        }
        v
    }

    /// Unital channel, linear network.
    pub fn thm1_unital_linear(&self, c: &RandomUnitaryChannel, k: usize) -> Result<Verdict> {
        check_k(k)?;
        Ok(self.unital_breaking(TheoremId::Thm1, c, 1.0 / k as f64))
    }

    /// Unital channel, star network with `n` sources.
    pub fn thm4_unital_star(&self, c: &RandomUnitaryChannel, k: usize, n: usize) -> Result<Verdict> {
        check_k(k)?;
        if n < 2 {
            return Err(Error::PatternMismatch(format!("star network needs n >= 2, got {n}")));
        }
        if k > 2 * n {
            return Err(Error::PatternMismatch(format!("k = {k} exceeds 2n = {}", 2 * n)));
        }
        Ok(self.unital_breaking(TheoremId::Thm4, c, n as f64 / (2.0 * k as f64)))
    }

    /// Unital channel, trilocal star, full network nonlocality. `1 <= k <= 6`.
    pub fn thm8_unital_fnn(&self, c: &RandomUnitaryChannel, k: usize) -> Result<Verdict> {
        if !(1..=6).contains(&k) {
            return Err(Error::Domain(format!("k = {k} outside 1..=6")));
        }
        let k = k as f64;
        let f = c.s_factors();
        let lhs = f.m_max - f.m_min;
        let eq3 = three_equal(&f.m, self.tol.eq);
        let rhs = if eq3 {
            2f64.powf(-(9.0 - 2.0 * k) / (6.0 * k))
        } else {
            2f64.powf(-(4.0 * k + 9.0) / (6.0 * k))
        };
        let proper = is_proper(c.alpha(), self.tol.proper) && is_proper(c.beta(), self.tol.proper);
        let mut v = Verdict::breaking_type(TheoremId::Thm8, lhs, rhs, proper && self.tol.le(lhs, rhs))
            .detail("m_max", f.m_max)
            .detail("m_min", f.m_min);
        if eq3 {
            v = v.note("three of the squared components coincide; sharper threshold used");
        }
        if !proper {
            v = v.note("alpha and beta must both have nonzero real and imaginary parts");
        }
        Ok(v)
    }

    fn unital_preserving(
        &self,
        theorem: TheoremId,
        c: &RandomUnitaryChannel,
        topology: Topology,
        u: &UsagePattern,
    ) -> Result<Verdict> {
        check_k(u.k())?;
        let Some(case) = ImproperCase::detect(c, &self.tol) else {
            return Ok(Verdict {
                theorem,
                status: Status::Inconclusive,
                lhs: f64::NAN,
                rhs: topology.threshold(),
                margin: f64::NAN,
                witness: None,
                details: BTreeMap::new(),
                notes: vec!["alpha, beta do not match any of the six improper zero structures".into()],
            });
        };
        let w = witness_phi_minus(c, topology, u, case, &self.tol)?;
        let certified = w.certifies();
        let mut v = Verdict {
            theorem,
            status: if certified {
                Status::PreservingCertified
            } else {
                Status::Inconclusive
            },
            lhs: w.closed_form,
            rhs: w.threshold(),
            margin: w.closed_form - w.threshold(),
            witness: Some(w.summary()),
            details: BTreeMap::new(),
            notes: Vec::new(),
        }
        .detail("case", case.id() as f64)
        .detail("surviving_factor", case.surviving_factor(c));
        if !certified {
            v = v.note(format!(
                "improper case {} matched but the witness bound exceeds the threshold by less than {WITNESS_MARGIN:e}",
                case.id()
            ));
        }
        Ok(v)
    }

    /// Improper unital channel, linear network: Phi- witness.
    pub fn thm2_unital_preserving(&self, c: &RandomUnitaryChannel, u: &UsagePattern) -> Result<Verdict> {
        self.unital_preserving(TheoremId::Thm2, c, Topology::Linear, u)
    }

    /// Improper unital channel, star network: Phi- witness.
    pub fn thm5_unital_preserving_star(&self, c: &RandomUnitaryChannel, u: &UsagePattern) -> Result<Verdict> {
        if u.n() < 2 {
            return Err(Error::PatternMismatch("star network needs n >= 2".into()));
        }
        self.unital_preserving(TheoremId::Thm5, c, Topology::Star, u)
    }

    fn damping_gate(&self, c: &PauliDampingChannel) -> Result<()> {
        if c.lambda2 != 0.0 {
            return Err(Error::InvalidChannel(
                "criteria for the damping class need lambda2 = 0".into(),
            ));
        }
        c.validate(&self.tol)
    }

    fn damping_pattern(&self, n: usize, m1: usize, m2: usize) -> Result<()> {
        if m1 + 2 * m2 == 0 {
            return Err(Error::PatternMismatch("k = 0 uses certify nothing".into()));
        }
        if m1 + m2 > n {
            return Err(Error::PatternMismatch(format!("m1 + m2 = {} exceeds n = {n}", m1 + m2)));
        }
        Ok(())
    }

    /// Damping class, linear network. Independent of `k` and `n`.
    pub fn thm3_nonunital_linear(&self, c: &PauliDampingChannel) -> Result<Verdict> {
        self.damping_gate(c)?;
        let l1 = damping_one_side_sum(c);
        let l2 = damping_both_side_sum(c);
        let ok = self.tol.le(l1, 1.0) && self.tol.le(l2, 1.0);
        Ok(Verdict::breaking_type(TheoremId::Thm3, l1.max(l2), 1.0, ok)
            .detail("lhs1", l1)
            .detail("lhs2", l2)
            .note("criterion does not depend on k or n"))
    }

    fn damping_product(&self, c: &PauliDampingChannel, m1: usize, m2: usize) -> f64 {
        damping_both_side_sum(c).powi(m2 as i32) * damping_one_side_sum(c).powi(m1 as i32)
    }

    /// Damping class, star network.
    pub fn thm6_nonunital_star(&self, c: &PauliDampingChannel, m1: usize, m2: usize, n: usize) -> Result<Verdict> {
        self.damping_gate(c)?;
        if n < 2 {
            return Err(Error::PatternMismatch(format!("star network needs n >= 2, got {n}")));
        }
        self.damping_pattern(n, m1, m2)?;
        let lhs = self.damping_product(c, m1, m2);
        let rhs = 2f64.powf((2.0 - n as f64) * (m1 + m2) as f64 / 2.0);
        let mut v = Verdict::breaking_type(TheoremId::Thm6, lhs, rhs, self.tol.le(lhs, rhs));
        let reduced_rhs = 2f64.powf((2.0 - n as f64) / 2.0);
        if m2 == 0 {
            v = v
                .detail("reduced_lhs", damping_one_side_sum(c))
                .detail("reduced_rhs", reduced_rhs)
                .note("one-sided uses only: condition reduces to a bound on the one-sided sum, independent of m1");
        } else if m1 == 0 {
            v = v
                .detail("reduced_lhs", damping_both_side_sum(c))
                .detail("reduced_rhs", reduced_rhs)
                .note("two-sided uses only: condition reduces to a bound on the two-sided sum, independent of m2");
        }
        Ok(v)
    }

    /// Damping class, star network: Phi+ witness.
    pub fn thm7_nonunital_preserving_star(
        &self,
        c: &PauliDampingChannel,
        m1: usize,
        m2: usize,
        n: usize,
    ) -> Result<Verdict> {
        self.damping_gate(c)?;
        if n < 2 {
            return Err(Error::PatternMismatch(format!("star network needs n >= 2, got {n}")));
        }
        self.damping_pattern(n, m1, m2)?;
        let bound = phi_plus_closed_form(c, n, m1, m2);
        let w = witness_phi_plus(c, n, m1, m2, &self.tol)?;
        let certified = w.certifies();
        let [y1, y2, y3, y4] = phi_plus_y_values(c);
        let mut v = Verdict {
            theorem: TheoremId::Thm7,
            status: if certified {
                Status::PreservingCertified
            } else {
                Status::Inconclusive
            },
            lhs: bound,
            rhs: 1.0,
            margin: bound - 1.0,
            witness: certified.then(|| w.summary()),
            details: BTreeMap::new(),
            notes: Vec::new(),
        }
        .detail("y1", y1)
        .detail("y2", y2)
        .detail("y3", y3)
        .detail("y4", y4);
        if !certified && bound > 1.0 {
            v = v.note(format!("witness bound exceeds 1 by less than {WITNESS_MARGIN:e}"));
        }
        Ok(v)
    }

    /// Damping class, trilocal star, full network nonlocality.
    pub fn thm9_nonunital_fnn(&self, c: &PauliDampingChannel, m1: usize, m2: usize) -> Result<Verdict> {
        self.damping_gate(c)?;
        self.damping_pattern(3, m1, m2)?;
        let lhs = self.damping_product(c, m1, m2);
        let rhs = 2f64.powf((2.0 - 3.0 * (m1 + m2) as f64) / 6.0);
        Ok(Verdict::breaking_type(TheoremId::Thm9, lhs, rhs, self.tol.le(lhs, rhs)))
    }
}

/// Smallest depolarizing strength certified breaking in a linear network.
pub fn depol_threshold_linear(k: usize) -> Result<f64> {
    if k < 1 {
        return Err(Error::Domain("k must be >= 1".into()));
    }
    Ok(1.0 - 2f64.powf(-1.0 / k as f64))
}

pub fn depol_threshold_star(k: usize, n: usize) -> Result<f64> {
    if k < 1 {
        return Err(Error::Domain("k must be >= 1".into()));
    }
    if n < 2 {
        return Err(Error::Domain("n must be >= 2".into()));
    }
    Ok(1.0 - 2f64.powf(-(n as f64) / (2.0 * k as f64)))
}

/// May be negative, in which case every `q` is certified.
pub fn depol_threshold_fnn(k: usize) -> Result<f64> {
    if !(1..=6).contains(&k) {
        return Err(Error::Domain(format!("k = {k} outside 1..=6")));
    }
    let k = k as f64;
    Ok(1.0 - 2f64.powf((2.0 * k - 9.0) / (6.0 * k)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    /// Exhaustive grid over `[-1, 1]^3` with this spacing, if set.
    pub grid_step: Option<f64>,
    pub samples: usize,
    pub seed: u64,
    /// Restrict both grid and samples to this shift value.
    pub fix_t: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub seed: u64,
    pub grid_points: usize,
    pub random_samples: usize,
    pub violations: usize,
    /// `min(1 - lhs1, 1 - lhs2)` over every checked channel.
    pub min_margin: f64,
    /// `(t, l1, l3)` where the minimum margin occurred.
    pub min_margin_at: [f64; 3],
    pub first_violations: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, Copy)]
struct ScanAcc {
    checked: usize,
    violations: usize,
    min_margin: f64,
    min_key: u64,
    min_at: [f64; 3],
}

impl ScanAcc {
    fn empty() -> Self {
        Self {
            checked: 0,
            violations: 0,
            min_margin: f64::INFINITY,
            min_key: u64::MAX,
            min_at: [f64::NAN; 3],
        }
    }

    fn merge(self, o: Self) -> Self {
        let take_o = o.min_margin < self.min_margin
            || (o.min_margin == self.min_margin && o.min_key < self.min_key);
        let (min_margin, min_key, min_at) = if take_o {
            (o.min_margin, o.min_key, o.min_at)
        } else {
            (self.min_margin, self.min_key, self.min_at)
        };
        Self {
            checked: self.checked + o.checked,
            violations: self.violations + o.violations,
            min_margin,
            min_key,
            min_at,
        }
    }
}

fn scan_point(c: &PauliDampingChannel, key: u64, tol: &Tolerances) -> (ScanAcc, bool) {
    let l1 = damping_one_side_sum(c);
    let l2 = damping_both_side_sum(c);
    let margin = (1.0 - l1).min(1.0 - l2);
    let violated = !(tol.le(l1, 1.0) && tol.le(l2, 1.0));
    (
        ScanAcc {
            checked: 1,
            violations: violated as usize,
            min_margin: margin,
            min_key: key,
            min_at: [c.t, c.lambda1, c.lambda3],
        },
        violated,
    )
}

/// Uniform draw from the admissible `(t, l1, l3)` region by rejection.
pub fn sample_damping<R: Rng + ?Sized>(
    rng: &mut R,
    fix_t: Option<f64>,
    tol: &Tolerances,
) -> PauliDampingChannel {
    loop {
        let t = fix_t.unwrap_or_else(|| rng.random_range(-1.0..=1.0));
        let l1 = rng.random_range(-1.0..=1.0);
        let l3 = rng.random_range(-1.0..=1.0);
        if let Ok(c) = PauliDampingChannel::new(t, l1, l3, tol) {
            return c;
        }
    }
}

const MAX_LISTED_VIOLATIONS: usize = 16;

/// Checks that every admissible damping channel satisfies the linear-network
/// breaking condition, over a grid and over seeded random samples.
pub fn conjecture1_scan(cfg: &ScanConfig, tol: &Tolerances) -> Result<ScanReport> {
    let mut acc = ScanAcc::empty();
    let mut listed: Vec<(u64, [f64; 3])> = Vec::new();

    if let Some(step) = cfg.grid_step {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::Domain(format!("grid step {step} must be positive")));
        }
        let per_axis = (2.0 / step).round() as u64 + 1;
        let coord = |i: u64| (-1.0 + i as f64 * step).clamp(-1.0, 1.0);
        let t_axis: Vec<f64> = match cfg.fix_t {
            Some(t) => vec![t],
            None => (0..per_axis).map(coord).collect(),
        };
        let (grid_acc, grid_bad) = (0..t_axis.len() as u64)
            .into_par_iter()
            .map(|it| {
                let mut a = ScanAcc::empty();
                let mut bad = Vec::new();
                for i1 in 0..per_axis {
                    for i3 in 0..per_axis {
                        let key = (it * per_axis + i1) * per_axis + i3;
                        let (t, l1, l3) = (t_axis[it as usize], coord(i1), coord(i3));
                        let Ok(c) = PauliDampingChannel::new(t, l1, l3, tol) else {
                            continue;
                        };
                        let (p, violated) = scan_point(&c, key, tol);
                        if violated && bad.len() < MAX_LISTED_VIOLATIONS {
                            bad.push((key, [t, l1, l3]));
                        }
                        a = a.merge(p);
                    }
                }
                (a, bad)
            })
            .reduce(
                || (ScanAcc::empty(), Vec::new()),
                |(a, mut x), (b, y)| {
                    x.extend(y);
                    (a.merge(b), x)
                },
            );
        acc = acc.merge(grid_acc);
        listed.extend(grid_bad);
    }
    let grid_points = acc.checked;

    // random keys live above the grid key range
    let offset = 1u64 << 48;
    let (rand_acc, rand_bad) = (0..cfg.samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i);
            let c = sample_damping(&mut rng, cfg.fix_t, tol);
            let (p, violated) = scan_point(&c, offset + i, tol);
            let bad = if violated {
                vec![(offset + i, [c.t, c.lambda1, c.lambda3])]
            } else {
                Vec::new()
            };
            (p, bad)
        })
        .reduce(
            || (ScanAcc::empty(), Vec::new()),
            |(a, mut x), (b, y)| {
                x.extend(y);
                (a.merge(b), x)
            },
        );
    acc = acc.merge(rand_acc);
    listed.extend(rand_bad);
    listed.sort_by_key(|(k, _)| *k);
    listed.truncate(MAX_LISTED_VIOLATIONS);

    Ok(ScanReport {
        seed: cfg.seed,
        grid_points,
        random_samples: cfg.samples,
        violations: acc.violations,
        min_margin: acc.min_margin,
        min_margin_at: acc.min_at,
        first_violations: listed.into_iter().map(|(_, p)| p).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{dephasing, depolarizing};
    use crate::linalg::c;

    fn ev() -> Evaluator {
        Evaluator::default()
    }

    fn damping(t: f64, l1: f64, l3: f64) -> PauliDampingChannel {
        PauliDampingChannel::new(t, l1, l3, &Tolerances::default()).unwrap()
    }

    #[test]
    fn thm1_depolarizing_example() {
        let ch = depolarizing(0.4).unwrap();
        let v2 = ev().thm1_unital_linear(&ch, 2).unwrap();
        assert_eq!(v2.status, Status::BreakingCertified);
        assert!((v2.lhs - 0.6).abs() < 1e-12);
        assert!((v2.rhs - 0.5f64.sqrt()).abs() < 1e-15);
        let v1 = ev().thm1_unital_linear(&ch, 1).unwrap();
        assert_eq!(v1.status, Status::Inconclusive);
        assert!((v1.rhs - 0.5).abs() < 1e-15);
        assert!(ev().thm1_unital_linear(&ch, 0).is_err());
    }

    #[test]
    fn thm1_symmetric_point() {
        let ch = RandomUnitaryChannel::new(c(0.5, 0.5), c(0.5, 0.5)).unwrap();
        for k in 1..10 {
            let v = ev().thm1_unital_linear(&ch, k).unwrap();
            assert!(v.is_breaking() && v.lhs == 0.0);
        }
    }

    #[test]
    fn thm1_improper_is_inconclusive() {
        let v = ev().thm1_unital_linear(&dephasing(0.3).unwrap(), 3).unwrap();
        assert_eq!(v.status, Status::Inconclusive);
        assert!(!v.notes.is_empty());
    }

    #[test]
    fn thm2_examples() {
        let u = UsagePattern::from_k(2, 2).unwrap();
        let v = ev().thm2_unital_preserving(&dephasing(0.3).unwrap(), &u).unwrap();
        assert!(v.is_preserving());
        assert!(v.witness.as_ref().unwrap().direct_bound > 1.0);

        let ch = RandomUnitaryChannel::new(c(0.6, 0.0), c(0.0, 0.8)).unwrap();
        let u1 = UsagePattern::from_k(2, 1).unwrap();
        let v = ev().thm2_unital_preserving(&ch, &u1).unwrap();
        assert!(v.is_preserving());
        assert!((v.lhs - 1.28f64.sqrt()).abs() < 1e-12);

        let v = ev().thm2_unital_preserving(&depolarizing(0.4).unwrap(), &u).unwrap();
        assert_eq!(v.status, Status::Inconclusive);
    }

    #[test]
    fn thm2_zero_factor_is_inconclusive() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let ch = RandomUnitaryChannel::new(c(r, 0.0), c(r, 0.0)).unwrap();
        let u = UsagePattern::from_k(2, 1).unwrap();
        let v = ev().thm2_unital_preserving(&ch, &u).unwrap();
        assert_eq!(v.status, Status::Inconclusive);
        assert!((v.lhs - 1.0).abs() < 1e-15);
        assert!(!v.notes.is_empty());
    }

    #[test]
    fn depolarizing_thresholds() {
        assert!((depol_threshold_linear(1).unwrap() - 0.5).abs() < 1e-15);
        assert!((depol_threshold_linear(2).unwrap() - 0.2928932188134524).abs() < 1e-15);
        assert!((depol_threshold_linear(64).unwrap() - 0.01077).abs() < 1e-5);
        assert!(depol_threshold_linear(0).is_err());
        assert!((depol_threshold_star(1, 2).unwrap() - 0.5).abs() < 1e-15);
        assert!((depol_threshold_star(2, 4).unwrap() - 0.5).abs() < 1e-15);
        assert!((depol_threshold_star(8, 4).unwrap() - 0.1591).abs() < 1e-4);
        assert!((depol_threshold_fnn(1).unwrap() - 0.5546).abs() < 1e-4);
        assert!((depol_threshold_fnn(3).unwrap() - 0.10910).abs() < 1e-5);
        assert!((depol_threshold_fnn(5).unwrap() + 0.0234).abs() < 1e-4);
        assert!(depol_threshold_fnn(7).is_err());
    }

    #[test]
    fn thm3_examples() {
        let v = ev().thm3_nonunital_linear(&damping(0.2, 0.2, 0.2)).unwrap();
        assert!(v.is_breaking());
        assert!((v.details["lhs1"] - 0.2).abs() < 1e-12);
        assert!((v.details["lhs2"] - 0.0304).abs() < 1e-12);
        let v = ev().thm3_nonunital_linear(&damping(0.0, 1.0, 0.0)).unwrap();
        assert!(v.is_breaking());
        assert_eq!(v.lhs, 1.0);
        let wide = PauliDampingChannel {
            t: 0.0,
            lambda1: 0.5,
            lambda2: 0.1,
            lambda3: 0.2,
        };
        assert!(matches!(ev().thm3_nonunital_linear(&wide), Err(Error::InvalidChannel(_))));
    }

    #[test]
    fn thm4_examples() {
        let ev = ev();
        for (q, want) in [(0.49, false), (0.5, true), (0.7, true)] {
            let v = ev.thm4_unital_star(&depolarizing(q).unwrap(), 1, 2).unwrap();
            assert_eq!(v.is_breaking(), want, "q = {q}");
        }
        assert!(ev.thm4_unital_star(&depolarizing(0.4).unwrap(), 4, 4).unwrap().is_breaking());
        let sym = RandomUnitaryChannel::new(c(0.5, 0.5), c(0.5, 0.5)).unwrap();
        assert!(ev.thm4_unital_star(&sym, 3, 5).unwrap().is_breaking());
        assert!(ev.thm4_unital_star(&sym, 3, 1).is_err());
    }

    #[test]
    fn thm5_examples() {
        let u = UsagePattern::from_k(3, 3).unwrap();
        for p in [0.1, 0.5, 0.9] {
            assert!(ev().thm5_unital_preserving_star(&dephasing(p).unwrap(), &u).unwrap().is_preserving());
        }
        let phase = RandomUnitaryChannel::new(c(0.3, 0.91f64.sqrt()), c(0.0, 0.0)).unwrap();
        assert!(ev().thm5_unital_preserving_star(&phase, &u).unwrap().is_preserving());
        let v = ev().thm5_unital_preserving_star(&depolarizing(0.9).unwrap(), &u).unwrap();
        assert_eq!(v.status, Status::Inconclusive);
    }

    #[test]
    fn thm6_examples() {
        let ch = damping(0.1, 0.1, 0.1);
        let v = ev().thm6_nonunital_star(&ch, 2, 1, 4).unwrap();
        assert!((v.lhs - 4.75e-6).abs() < 1e-15);
        assert!((v.rhs - 0.125).abs() < 1e-15);
        assert!(v.is_breaking());
        let v = ev().thm6_nonunital_star(&ch, 3, 0, 5).unwrap();
        assert!((v.details["reduced_lhs"] - 0.05).abs() < 1e-15);
        assert!((v.details["reduced_rhs"] - 2f64.powf(-1.5)).abs() < 1e-15);
        assert!(ev().thm6_nonunital_star(&ch, 0, 0, 4).is_err());
        assert!(ev().thm6_nonunital_star(&ch, 3, 2, 4).is_err());
    }

    #[test]
    fn thm6_reduced_forms_agree() {
        let ch = damping(0.2, 0.4, 0.3);
        for n in 2..8 {
            for m in 1..=n {
                let v = ev().thm6_nonunital_star(&ch, m, 0, n).unwrap();
                let r = v.details["reduced_lhs"] <= v.details["reduced_rhs"];
                assert_eq!(v.is_breaking(), r);
                let v = ev().thm6_nonunital_star(&ch, 0, m, n).unwrap();
                let r = v.details["reduced_lhs"] <= v.details["reduced_rhs"];
                assert_eq!(v.is_breaking(), r);
            }
        }
    }

    #[test]
    fn thm7_examples() {
        let ch = damping(0.05, 0.9, 0.05);
        let v = ev().thm7_nonunital_preserving_star(&ch, 4, 0, 14).unwrap();
        let want = (0.81f64.powf(2.0 / 7.0) + 0.0025f64.powf(2.0 / 7.0)).sqrt();
        assert!((v.lhs - want).abs() < 1e-12);
        assert!(v.is_preserving());
        let w = v.witness.unwrap();
        assert!((w.direct_bound - want).abs() < 1e-12);

        let v = ev().thm7_nonunital_preserving_star(&ch, 0, 2, 14).unwrap();
        let [y1, y2, y3, y4] = phi_plus_y_values(&ch);
        assert!((y1 - 0.81).abs() < 1e-15 && (y3 - 0.6561).abs() < 1e-15);
        let want = (y1.powf(0.0) * y3.powf(2.0 / 14.0) + y2.powf(0.0) * y4.powf(2.0 / 14.0)).sqrt();
        assert!((v.lhs - want).abs() < 1e-15);
        assert_eq!(v.is_preserving(), want > 1.0 + WITNESS_MARGIN);

        // lambda3 -> 0 with lambda1 = 1 sits exactly on the boundary
        let edge = damping(0.0, 1.0, 0.0);
        let v = ev().thm7_nonunital_preserving_star(&edge, 1, 0, 4).unwrap();
        assert_eq!(v.lhs, 1.0);
        assert_eq!(v.status, Status::Inconclusive);
        let near = damping(0.0, 0.99, 0.01);
        assert!(ev().thm7_nonunital_preserving_star(&near, 1, 0, 4).unwrap().is_preserving());
    }

    #[test]
    fn thm8_examples() {
        let sym = RandomUnitaryChannel::new(c(0.5, 0.5), c(0.5, 0.5)).unwrap();
        assert!(ev().thm8_unital_fnn(&sym, 1).unwrap().is_breaking());
        assert!(ev().thm8_unital_fnn(&sym, 7).is_err());
        let t3 = depol_threshold_fnn(3).unwrap();
        assert!(!ev().thm8_unital_fnn(&depolarizing(t3 - 1e-6).unwrap(), 3).unwrap().is_breaking());
        assert!(ev().thm8_unital_fnn(&depolarizing(t3 + 1e-6).unwrap(), 3).unwrap().is_breaking());
        assert!(ev().thm8_unital_fnn(&depolarizing(1e-6).unwrap(), 5).unwrap().is_breaking());
    }

    #[test]
    fn thm9_examples() {
        let v = ev().thm9_nonunital_fnn(&damping(0.1, 0.1, 0.1), 2, 1).unwrap();
        assert!((v.rhs - 2f64.powf(-7.0 / 6.0)).abs() < 1e-15);
        assert!(v.is_breaking());
        assert!(matches!(
            ev().thm9_nonunital_fnn(&damping(0.1, 0.1, 0.1), 0, 0),
            Err(Error::PatternMismatch(_))
        ));
    }

    #[test]
    fn scan_small_grid_and_determinism() {
        let tol = Tolerances::default();
        let cfg = ScanConfig {
            grid_step: Some(0.1),
            samples: 2000,
            seed: 11,
            fix_t: None,
        };
        let a = conjecture1_scan(&cfg, &tol).unwrap();
        let b = conjecture1_scan(&cfg, &tol).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.violations, 0);
        assert!(a.grid_points > 0 && a.min_margin >= -tol.eq);

        let t0 = ScanConfig {
            grid_step: Some(0.05),
            samples: 500,
            seed: 3,
            fix_t: Some(0.0),
        };
        let r = conjecture1_scan(&t0, &tol).unwrap();
        assert_eq!(r.violations, 0);
    }
}
