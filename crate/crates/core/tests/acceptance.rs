//! Acceptance criteria. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line; exits non-zero if any fails.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use nalgebra::Matrix3;
use netnl::bloch::BlochState;
use netnl::channels::{dephasing, depolarizing, PauliDampingChannel};
use netnl::cli::{parse_fixed, parse_grid, sweep, SweepRow};
use netnl::criteria::{
    conjecture1_scan, depol_threshold_fnn, depol_threshold_linear, Evaluator, ScanConfig, Status,
    TheoremId,
};
use netnl::network::{bound_linear, Topology, UsagePattern};
use netnl::oracle::checks::{
    bloch_kraus_suite, bound_vs_correlators, eig_formula_suite, soundness_sweep, SoundnessConfig,
};
use netnl::oracle::optimize::max_inequality_over_settings;
use netnl::oracle::witness::{phi_plus_closed_form, witness_phi_minus, ImproperCase};
use netnl::oracle::OptimizerConfig;
use netnl::tolerance::Tolerances;

const SEED: u64 = 20240531;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);
type SweepCheck = (TheoremId, &'static str, fn(&SweepRow) -> bool, Status);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn close(what: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    ensure(
        (got - want).abs() <= tol,
        format!("{what}: got {got:.15}, want {want} +- {tol:e}"),
    )
}

fn c1_linear_depolarizing() -> Outcome {
    close("threshold k=1", depol_threshold_linear(1).unwrap(), 0.5, 1e-12)?;
    close("threshold k=2", depol_threshold_linear(2).unwrap(), 0.292893, 1e-6)?;
    close(
        "threshold k=2 exact",
        depol_threshold_linear(2).unwrap(),
        1.0 - 0.5f64.sqrt(),
        1e-12,
    )?;
    let ev = Evaluator::default();
    let ch = depolarizing(0.4).unwrap();
    let k1 = ev.thm1_unital_linear(&ch, 1).unwrap();
    let k2 = ev.thm1_unital_linear(&ch, 2).unwrap();
    ensure(k1.status == Status::Inconclusive, format!("q=0.4 k=1: {:?}", k1.status))?;
    ensure(k2.status == Status::BreakingCertified, format!("q=0.4 k=2: {:?}", k2.status))?;
    Ok("q*(1)=0.5, q*(2)=0.292893; q=0.4 inconclusive at k=1, breaking at k=2".into())
}

fn c2_damping_linear() -> Outcome {
    let tol = Tolerances::default();
    let ch = PauliDampingChannel::new(0.2, 0.2, 0.2, &tol).map_err(|e| e.to_string())?;
    let v = Evaluator::default().thm3_nonunital_linear(&ch).unwrap();
    close("lhs1", v.details["lhs1"], 0.2, 1e-12)?;
    close("lhs2", v.details["lhs2"], 0.0304, 1e-12)?;
    ensure(v.status == Status::BreakingCertified, format!("status {:?}", v.status))?;
    Ok(format!("lhs1={:.4}, lhs2={:.4}, breaking", v.details["lhs1"], v.details["lhs2"]))
}

fn c3_fnn_threshold() -> Outcome {
    for k in 1..=6 {
        let q = depol_threshold_fnn(k).unwrap();
        ensure((q < 0.0) == (k >= 5), format!("k={k}: threshold {q}"))?;
    }
    let q3 = depol_threshold_fnn(3).unwrap();
    close("k=3", q3, 0.10910, 1e-5)?;
    Ok(format!("negative exactly for k>=5; q*(3)={q3:.5}"))
}

fn c4_witnesses() -> Outcome {
    let start = Instant::now();
    let tol = Tolerances::default();

    let ch = dephasing(0.5).unwrap();
    let u = UsagePattern::from_k(2, 2).unwrap();
    let case = ImproperCase::detect(&ch, &tol).ok_or("dephasing not improper")?;
    let w = witness_phi_minus(&ch, Topology::Linear, &u, case, &tol).map_err(|e| e.to_string())?;
    let want = 1.25f64.sqrt();
    close("closed form", w.closed_form, want, 1e-12)?;
    close("bound_linear", bound_linear(&w.transformed).bound, want, 1e-12)?;
    let opt = max_inequality_over_settings(&w.transformed, &OptimizerConfig::default().with_seed(SEED))
        .map_err(|e| e.to_string())?;
    close("correlator optimum", opt.value, want, 1e-3)?;
    ensure(opt.value <= want + 1e-6, format!("optimizer exceeds bound: {}", opt.value))?;

    let pd = PauliDampingChannel::new(0.05, 0.9, 0.05, &tol).map_err(|e| e.to_string())?;
    let b = phi_plus_closed_form(&pd, 14, 4, 0);
    close("damping witness", b, 1.05927, 1e-4)?;
    let v = Evaluator::default().thm7_nonunital_preserving_star(&pd, 4, 0, 14).unwrap();
    ensure(v.status == Status::PreservingCertified, format!("thm7 status {:?}", v.status))?;
    let direct = v.witness.as_ref().ok_or("no witness attached")?.direct_bound;
    close("damping witness simulated", direct, b, 1e-12)?;

    let took = start.elapsed();
    ensure(took < Duration::from_secs(10), format!("took {took:?}"))?;
    Ok(format!(
        "dephasing {:.12} (optimizer {:.6}); damping {b:.5}; {took:.2?}",
        w.closed_form, opt.value
    ))
}

fn c5_soundness() -> Outcome {
    let start = Instant::now();
    let cfg = SoundnessConfig {
        channels_per_theorem: 50,
        scenarios: 10_000,
        seed: SEED,
        ..SoundnessConfig::default()
    };
    let r = soundness_sweep(&cfg).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    ensure(r.cases.len() == 200, format!("{} cases", r.cases.len()))?;
    let worst = r
        .cases
        .iter()
        .max_by(|a, b| (a.sup - a.threshold).total_cmp(&(b.sup - b.threshold)))
        .unwrap();
    let mut fails: Vec<String> = r
        .failures
        .iter()
        .filter(|(_, n)| **n > 0)
        .map(|(t, n)| format!("{t}: {n}/50"))
        .collect();
    fails.sort();
    ensure(
        r.cases.iter().all(|c| c.sup <= c.threshold + 1e-9),
        format!(
            "sup above threshold ({}); worst {:?} n={} m1={} m2={} sup={:.9} > {:.9}",
            fails.join(", "),
            worst.channel,
            worst.n,
            worst.m1,
            worst.m2,
            worst.sup,
            worst.threshold
        ),
    )?;
    ensure(took < Duration::from_secs(600), format!("took {took:?}"))?;
    Ok(format!("200 certified channels, max excess {:e}; {took:.1?}", r.max_excess))
}

fn c6_bloch_kraus() -> Outcome {
    let r = bloch_kraus_suite(1000, SEED);
    ensure(r.samples == 3000, format!("{} samples", r.samples))?;
    ensure(r.max_deviation <= 1e-12, format!("max deviation {:e}", r.max_deviation))?;
    ensure(r.pass, "report marked failing")?;
    Ok(format!("3 families x 1000, max deviation {:e}", r.max_deviation))
}

fn c7_eig_formulas() -> Outcome {
    let r = eig_formula_suite(1000, SEED);
    ensure(r.max_deviation <= 1e-10, format!("max deviation {:e}", r.max_deviation))?;
    ensure(r.pass, format!("report marked failing: {:?}", r.notes))?;
    Ok(format!("{} samples, max deviation {:e}", r.samples, r.max_deviation))
}

fn c8_bound_vs_correlators() -> Outcome {
    let mut parts = Vec::new();
    for n in [2, 3] {
        let r = bound_vs_correlators(n, 1000, SEED).map_err(|e| e.to_string())?;
        ensure(r.max_deviation <= 1e-6, format!("n={n}: value - bound = {:e}", r.max_deviation))?;
        ensure(r.pass, format!("n={n}: {:?}", r.notes))?;
        parts.push(format!("n={n} max(value - bound) {:.3e}", r.max_deviation));
    }
    Ok(parts.join("; "))
}

fn c9_conjecture() -> Outcome {
    let start = Instant::now();
    let cfg = ScanConfig {
        grid_step: Some(0.01),
        samples: 100_000,
        seed: SEED,
        fix_t: None,
    };
    let r = conjecture1_scan(&cfg, &Tolerances::default()).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    ensure(r.violations == 0, format!("{} violations, first {:?}", r.violations, r.first_violations))?;
    ensure(r.random_samples == 100_000, format!("{} random samples", r.random_samples))?;
    ensure(took < Duration::from_secs(300), format!("took {took:?}"))?;
    Ok(format!(
        "{} grid + {} random, 0 violations, min margin {:e} at {:?}; {took:.1?}",
        r.grid_points, r.random_samples, r.min_margin, r.min_margin_at
    ))
}

// Recomputed verdicts for the damping sweeps, written out from (t, l1, l3).

fn sums(t: f64, l1: f64, l3: f64) -> (f64, f64) {
    let s = (t.abs() + l3.abs()).powi(2);
    (s + l1 * l1, 2.0 * t * t * l1 * l1 + l1.powi(4) + s * s)
}

fn expect_thm3(r: &SweepRow) -> bool {
    let (a, b) = sums(r.t.unwrap(), r.l1.unwrap(), r.l3.unwrap());
    a <= 1.0 + 1e-12 && b <= 1.0 + 1e-12
}

fn expect_thm6(r: &SweepRow) -> bool {
    let (a, b) = sums(r.t.unwrap(), r.l1.unwrap(), r.l3.unwrap());
    let (m1, m2, n) = (r.m1.unwrap() as i32, r.m2.unwrap() as i32, r.n.unwrap() as f64);
    let lhs = a.powi(m1) * b.powi(m2);
    lhs <= 2f64.powf((2.0 - n) * (m1 + m2) as f64 / 2.0) + 1e-12
}

/// Phi+ pushed through the channel, star bound from an SVD of each source.
fn expect_thm7(r: &SweepRow) -> bool {
    let (t, l1, l3) = (r.t.unwrap(), r.l1.unwrap(), r.l3.unwrap());
    let (m1, m2, n) = (r.m1.unwrap(), r.m2.unwrap(), r.n.unwrap());
    let tm = Matrix3::from_diagonal(&nalgebra::Vector3::new(l1, 0.0, l3));
    let w = BlochState::phi_plus().w;
    let one = tm * w;
    let shift = nalgebra::Vector3::new(0.0, 0.0, t);
    let both = tm * w * tm.transpose() + shift * shift.transpose();
    let sq = |m: &Matrix3<f64>| {
        let mut s: Vec<f64> = m.singular_values().iter().map(|x| x * x).collect();
        s.sort_by(|a, b| b.total_cmp(a));
        (s[0], s[1])
    };
    let mut e = (1.0f64, 1.0f64);
    let per = [(m2, sq(&both)), (m1, sq(&one)), (n - m1 - m2, sq(&w))];
    for (count, (x, y)) in per {
        e.0 *= x.powf(count as f64 / n as f64);
        e.1 *= y.powf(count as f64 / n as f64);
    }
    (e.0 + e.1).sqrt() > 1.0 + 1e-9
}

fn check_sweep(
    crit: TheoremId,
    grid: &str,
    fixed: &str,
    expect: fn(&SweepRow) -> bool,
    want: Status,
) -> Result<(usize, usize, usize), String> {
    let ev = Evaluator::default();
    let rows = sweep(&ev, crit, &parse_grid(grid).unwrap(), &parse_fixed(fixed).unwrap())
        .map_err(|e| e.to_string())?;
    let valid: Vec<&SweepRow> = rows.iter().filter(|r| r.valid).collect();
    ensure(!valid.is_empty(), format!("{}: no valid rows", crit.name()))?;
    let mut hits = 0;
    for r in &valid {
        let got = r.verdict == want.short();
        ensure(
            got == expect(r),
            format!(
                "{} at t={:?} l1={:?} l3={:?}: verdict {} disagrees with recomputation",
                crit.name(),
                r.t,
                r.l1,
                r.l3,
                r.verdict
            ),
        )?;
        hits += got as usize;
    }
    Ok((rows.len(), valid.len(), hits))
}

fn c10_sweeps() -> Outcome {
    let grid = "t=0:1:0.05,l1=0:1:0.05,l3=0:1:0.05";
    let mut parts = Vec::new();
    let checks: [SweepCheck; 3] = [
        (TheoremId::Thm3, "", expect_thm3, Status::BreakingCertified),
        (TheoremId::Thm6, "m1=2,m2=1,n=4", expect_thm6, Status::BreakingCertified),
        (TheoremId::Thm7, "m1=4,m2=0,n=14", expect_thm7, Status::PreservingCertified),
    ];
    for (crit, fixed, expect, want) in checks {
        let (rows, valid, hits) = check_sweep(crit, grid, fixed, expect, want)?;
        parts.push(format!("{} {rows} rows, {valid} valid, {hits} {}", crit.name(), want.short()));
    }
    Ok(parts.join("; "))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("linear depolarizing thresholds", c1_linear_depolarizing),
        ("damping class, linear network", c2_damping_linear),
        ("trilocal threshold sign", c3_fnn_threshold),
        ("preservation witnesses", c4_witnesses),
        ("breaking certificates are sound", c5_soundness),
        ("Bloch vs Kraus evolution", c6_bloch_kraus),
        ("closed-form singular values", c7_eig_formulas),
        ("bound vs simulated correlators", c8_bound_vs_correlators),
        ("conjecture scan", c9_conjecture),
        ("sweeps match recomputation", c10_sweeps),
    ];
    let mut summary = BTreeMap::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match &outcome {
            Ok(msg) => println!("criterion {:>2} PASS  {name}: {msg}", i + 1),
            Err(msg) => println!("criterion {:>2} FAIL  {name}: {msg}", i + 1),
        }
        summary.insert(i + 1, outcome.is_ok());
    }
    let failed: Vec<String> = summary
        .iter()
        .filter(|(_, ok)| !**ok)
        .map(|(i, _)| i.to_string())
        .collect();
    if failed.is_empty() {
        println!("acceptance: 10/10 criteria pass");
    } else {
        println!(
            "acceptance: {}/10 criteria pass; failing: {}",
            10 - failed.len(),
            failed.join(", ")
        );
        std::process::exit(1);
    }
}
