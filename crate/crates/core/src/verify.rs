//! Seeded invariant suite behind `qcost verify`.
//!
//! Every check draws from its own ChaCha stream (same seed, stream = check
//! index), so the manifest does not depend on scheduling.

use std::f64::consts::FRAC_PI_2;
use std::fmt::Display;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::zeno_approx_error;
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::ledger::{gram_blocks, Gram2, BOUND_TOL, PRODUCT_TOL};
use crate::protocols::{
    run_pair_with, run_with_bob, Bob, MatrixBob, PairOutcome, ProtocolConfig, ProtocolKind, RandomBob, RoundTag,
    Schedule, ScheduleTarget,
};
use crate::state::{BlockUnitary, Partition, Region, StateVector, EXACT_TOL};

pub const DEFAULT_SEED: u64 = 2718;
/// Tolerance for state-versus-ledger identities.
pub const IDENTITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Injection {
    /// Bob applies a non-unitary matrix in the λ-dependent Gram check.
    NonUnitaryBob,
}

impl FromStr for Injection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "non-unitary-bob" => Ok(Injection::NonUnitaryBob),
            other => Err(Error::InvalidConfig(format!("unknown injection `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOptions {
    pub seed: u64,
    pub inject: Option<Injection>,
    pub exec: Execution,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            inject: None,
            exec: Execution::Parallel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub cases: usize,
    /// Largest deviation seen for the check's main quantity.
    pub worst: f64,
    pub tolerance: f64,
    /// First few failures, if any.
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub injection: Option<Injection>,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl Manifest {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failed(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }
}

const MAX_LISTED_FAILURES: usize = 5;

struct Tally {
    cases: usize,
    worst: f64,
    tol: f64,
    failures: Vec<String>,
    failed: usize,
}

impl Tally {
    fn new(tol: f64) -> Self {
        Self {
            cases: 0,
            worst: 0.0,
            tol,
            failures: Vec::new(),
            failed: 0,
        }
    }

    fn fail(&mut self, msg: String) {
        self.failed += 1;
        if self.failures.len() < MAX_LISTED_FAILURES {
            self.failures.push(msg);
        }
    }

    /// Main quantity: `value` must not exceed the check tolerance.
    fn deviation(&mut self, what: impl Display, value: f64) {
        self.cases += 1;
        if value.is_nan() || value > self.worst {
            self.worst = value;
        }
        if value.is_nan() || value > self.tol {
            self.fail(format!("{what}: {value:e} > {:e}", self.tol));
        }
    }

    fn require(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.fail(what());
        }
    }

    fn finish(mut self, name: &str, outcome: Result<()>) -> CheckResult {
        if let Err(e) = outcome {
            self.fail(format!("error: {e}"));
        }
        CheckResult {
            name: name.to_string(),
            passed: self.failed == 0,
            cases: self.cases,
            worst: self.worst,
            tolerance: self.tol,
            failures: self.failures,
        }
    }
}

type CheckFn = fn(&mut Tally, &mut ChaCha8Rng, &VerifyOptions) -> Result<()>;

const CHECKS: [(&str, f64, CheckFn); 11] = [
    ("norm-preservation", EXACT_TOL, norm_preservation),
    ("rotation-composition", EXACT_TOL, rotation_composition),
    ("zeno-identity", EXACT_TOL, zeno_identity),
    ("swap-relation", EXACT_TOL, swap_relation),
    ("gram-conservation", EXACT_TOL, gram_conservation),
    ("simple-exactness", EXACT_TOL, simple_exactness),
    ("ledger-identity", IDENTITY_TOL, ledger_identity),
    ("bound-suite", BOUND_TOL, bound_suite),
    ("passivity", 0.0, passivity),
    ("alice-independence", 0.0, alice_independence),
    ("slaz-small", IDENTITY_TOL, slaz_small),
];

pub fn check_names() -> impl Iterator<Item = &'static str> {
    CHECKS.iter().map(|c| c.0)
}

pub fn run_suite(opts: &VerifyOptions) -> Manifest {
    let indexed: Vec<usize> = (0..CHECKS.len()).collect();
    let checks = exec::map_ordered(opts.exec, &indexed, |&k| {
        let (name, tol, f) = CHECKS[k];
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(k as u64);
        let mut tally = Tally::new(tol);
        let outcome = f(&mut tally, &mut rng, opts);
        tally.finish(name, outcome)
    });
    Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: opts.seed,
        injection: opts.inject,
        passed: checks.iter().all(|c| c.passed),
        checks,
    }
}

/// The fixed protocol configurations the pair-based checks iterate over.
pub fn protocol_grid() -> Vec<ProtocolConfig> {
    let mut grid: Vec<ProtocolConfig> = [1, 2, 4, 5, 32].into_iter().map(ProtocolConfig::simple).collect();
    for n in [1, 3, 8] {
        grid.push(ProtocolConfig {
            rounds: n,
            ..ProtocolConfig::new(ProtocolKind::OneWay)
        });
    }
    grid.push(ProtocolConfig::new(ProtocolKind::Polarization));
    for (m, n) in [(1, 1), (2, 8), (4, 16), (8, 64), (16, 256), (8, 512)] {
        grid.push(ProtocolConfig::slaz(m, n));
    }
    grid
}

fn label(cfg: &ProtocolConfig) -> String {
    match cfg.kind {
        ProtocolKind::Slaz => format!("slaz M={} N={}", cfg.outer, cfg.rounds),
        ProtocolKind::Polarization => "polarization".into(),
        k => format!("{k} N={}", cfg.rounds),
    }
}

fn small_partition() -> Result<Arc<Partition>> {
    Ok(Arc::new(Partition::new([
        ("A", 3, Region::Alice),
        ("C", 2, Region::Channel),
        ("B", 3, Region::Bob),
    ])?))
}

fn distinct_slots<R: Rng>(rng: &mut R, dim: usize, k: usize) -> Vec<usize> {
    rand::seq::index::sample(rng, dim, k).into_vec()
}

fn norm_preservation(t: &mut Tally, rng: &mut ChaCha8Rng, _: &VerifyOptions) -> Result<()> {
    let part = small_partition()?;
    let dim = part.total_dim();
    for case in 0..100 {
        let mut s = StateVector::random(part.clone(), rng);
        for _ in 0..50 {
            let ij = distinct_slots(rng, dim, 2);
            match rng.random_range(0..4) {
                0 => s.apply_rotation(ij[0], ij[1], rng.random_range(-3.2..3.2))?,
                1 => s.apply_swap(ij[0], ij[1])?,
                2 => s.apply_phase(ij[0], Complex64::from_polar(1.0, rng.random_range(0.0..6.3)))?,
                _ => s.apply_block_unitary(&BlockUnitary::random(distinct_slots(rng, dim, 3), rng)?)?,
            }
        }
        t.deviation(format_args!("case {case}"), (s.norm_sqr() - 1.0).abs());
    }
    Ok(())
}

fn rotation_composition(t: &mut Tally, rng: &mut ChaCha8Rng, _: &VerifyOptions) -> Result<()> {
    let part = small_partition()?;
    for case in 0..100 {
        let s = StateVector::random(part.clone(), rng);
        let ij = distinct_slots(rng, part.total_dim(), 2);
        let (a, b) = (rng.random_range(-3.2..3.2), rng.random_range(-3.2..3.2));
        let mut two = s.clone();
        two.apply_rotation(ij[0], ij[1], a)?;
        two.apply_rotation(ij[0], ij[1], b)?;
        let mut one = s.clone();
        one.apply_rotation(ij[0], ij[1], a + b)?;
        t.deviation(format_args!("case {case} R(a)R(b)"), two.max_abs_diff(&one)?);
        let mut m = s.clone();
        m.apply_block_unitary(&BlockUnitary::rotation(ij[0], ij[1], a + b)?)?;
        t.deviation(format_args!("case {case} matrix form"), m.max_abs_diff(&one)?);
    }
    Ok(())
}

fn zeno_identity(t: &mut Tally, _: &mut ChaCha8Rng, _: &VerifyOptions) -> Result<()> {
    let part = Arc::new(Partition::new([("a", 2, Region::Alice)])?);
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    for m in 1..=64 {
        // columns of R(π/2): e₀ → e₁, e₁ → −e₀
        for (start, expect) in [([one, zero], [zero, one]), ([zero, one], [-one, zero])] {
            let mut s = StateVector::from_amplitudes(part.clone(), start.to_vec())?;
            for _ in 0..m {
                s.apply_rotation(0, 1, FRAC_PI_2 / m as f64)?;
            }
            let target = StateVector::from_amplitudes(part.clone(), expect.to_vec())?;
            t.deviation(format_args!("(R_M)^M, M={m}"), s.max_abs_diff(&target)?);
        }
    }
    for n in 16..=4096usize {
        let err = zeno_approx_error(n);
        t.require(err <= 2.0 / (n * n) as f64, || {
            format!("Zeno approximation error {err:e} above 2/N² at N={n}")
        });
    }
    Ok(())
}

fn swap_relation(t: &mut Tally, rng: &mut ChaCha8Rng, _: &VerifyOptions) -> Result<()> {
    let part = small_partition()?;
    for case in 0..100 {
        let s = StateVector::random(part.clone(), rng);
        let ij = distinct_slots(rng, part.total_dim(), 2);
        let mut swapped = s.clone();
        swapped.apply_swap(ij[0], ij[1])?;
        let mut rotated = s.clone();
        rotated.apply_rotation(ij[0], ij[1], FRAC_PI_2)?;
        rotated.apply_phase(ij[0], Complex64::new(-1.0, 0.0))?;
        t.deviation(format_args!("case {case}"), swapped.max_abs_diff(&rotated)?);
    }
    Ok(())
}

fn non_unitary_matrix(dim: usize) -> DMatrix<Complex64> {
    DMatrix::from_diagonal_element(dim, dim, Complex64::new(1.1, 0.0))
}

fn gram_conservation(t: &mut Tally, rng: &mut ChaCha8Rng, opts: &VerifyOptions) -> Result<()> {
    let part = small_partition()?;
    let all: Vec<usize> = (0..part.total_dim()).collect();
    let mut ac = part.region_slots(Region::Alice);
    ac.extend(part.region_slots(Region::Channel));
    let channel = part.region_slots(Region::Channel);
    let bob = part.region_slots(Region::Bob);
    let snapshot = |s0: &StateVector, s1: &StateVector| gram_blocks(s0, s1);

    for case in 0..100 {
        let mut s0 = StateVector::random(part.clone(), rng);
        let mut s1 = StateVector::random(part.clone(), rng);
        let before = snapshot(&s0, &s1)?;
        let u = BlockUnitary::random(all.clone(), rng)?;
        s0.apply_block_unitary(&u)?;
        s1.apply_block_unitary(&u)?;
        let after = snapshot(&s0, &s1)?;
        t.deviation(
            format_args!("case {case} common unitary, total"),
            after.total.max_abs_diff(&before.total),
        );
        t.deviation(format_args!("case {case} additivity"), after.additivity_residual());
    }

    for case in 0..100 {
        let mut s0 = StateVector::random(part.clone(), rng);
        let mut s1 = StateVector::random(part.clone(), rng);
        let ac_gram = |s0: &StateVector, s1: &StateVector| -> Result<Gram2> {
            let g = snapshot(s0, s1)?;
            Ok(g.region(Region::Alice).add(&g.region(Region::Channel)))
        };
        let before = ac_gram(&s0, &s1)?;
        let u = BlockUnitary::random(ac.clone(), rng)?;
        s0.apply_block_unitary(&u)?;
        s1.apply_block_unitary(&u)?;
        t.deviation(
            format_args!("case {case} A∪C unitary, G(A)+G(C)"),
            ac_gram(&s0, &s1)?.max_abs_diff(&before),
        );
    }

    for case in 0..100 {
        let mut s0 = StateVector::random(part.clone(), rng);
        let mut s1 = StateVector::random(part.clone(), rng);
        let before = snapshot(&s0, &s1)?;
        let mut bob0 = RandomBob::new(rng.random());
        let mut bob1: Box<dyn Bob> = match opts.inject {
            Some(Injection::NonUnitaryBob) => Box::new(MatrixBob {
                matrix: non_unitary_matrix(channel.len() + bob.len()),
            }),
            None => Box::new(RandomBob::new(rng.random())),
        };
        let tag = RoundTag { outer: 1, inner: 1 };
        bob0.act(tag, &mut s0, &channel, &bob)?;
        bob1.act(tag, &mut s1, &channel, &bob)?;
        let after = snapshot(&s0, &s1)?;
        let ga = (after.region(Region::Alice).get(0, 1) - before.region(Region::Alice).get(0, 1)).norm();
        t.deviation(format_args!("case {case} λ-dependent C∪B unitaries, G⁰¹(A)"), ga);
        for mu in 0..2 {
            let d = (after.total.get(mu, mu) - before.total.get(mu, mu)).norm();
            t.deviation(
                format_args!("case {case} λ-dependent C∪B unitaries, G{mu}{mu} total"),
                d,
            );
        }
    }
    Ok(())
}

fn simple_exactness(t: &mut Tally, rng: &mut ChaCha8Rng, opts: &VerifyOptions) -> Result<()> {
    for n in [1, 2, 5, 32] {
        let mut schedules = vec![Schedule::uniform(n, ScheduleTarget::TwoWay)?];
        for _ in 0..20 {
            schedules.push(Schedule::random(n, ScheduleTarget::TwoWay, rng)?);
        }
        for (k, s) in schedules.into_iter().enumerate() {
            let p = run_pair_with(&ProtocolConfig::simple(n).with_schedule(s), opts.exec)?;
            let what = format!("N={n} schedule {k}");
            for r in &p.runs {
                let q = r.ledger.total_costs().q;
                t.deviation(format_args!("{what} λ={} Q", r.lambda), (q - 1.0).abs());
                let c = r.final_state.region_weight(Region::Channel).sqrt();
                t.deviation(format_args!("{what} λ={} channel amplitude", r.lambda), c);
            }
            t.deviation(
                format_args!("{what} G(A) vs identity"),
                p.final_alice_gram().max_abs_diff(&Gram2::identity()),
            );
        }
    }
    Ok(())
}

fn random_bob_pair(rng: &mut ChaCha8Rng, record_trace: bool) -> Result<PairOutcome> {
    let n = rng.random_range(1..=6);
    let bob_dim = rng.random_range(1..=3);
    let schedule = Schedule::random(n, ScheduleTarget::TwoWay, rng)?;
    let r0 = run_with_bob(&schedule, &mut RandomBob::new(rng.random()), bob_dim, 0, record_trace)?;
    let r1 = run_with_bob(&schedule, &mut RandomBob::new(rng.random()), bob_dim, 1, record_trace)?;
    PairOutcome::from_runs(r0, r1)
}

fn ledger_identity(t: &mut Tally, rng: &mut ChaCha8Rng, opts: &VerifyOptions) -> Result<()> {
    let grid = protocol_grid();
    let pairs = exec::map_ordered(opts.exec, &grid, |cfg| {
        run_pair_with(&cfg.clone().with_trace(true), opts.exec)
    });
    for (cfg, p) in grid.iter().zip(pairs) {
        let p = p?;
        identity_residuals(t, &label(cfg), &p)?;
    }
    for k in 0..20 {
        identity_residuals(t, &format!("random Bob {k}"), &random_bob_pair(rng, true)?)?;
    }
    Ok(())
}

fn identity_residuals(t: &mut Tally, what: &str, p: &PairOutcome) -> Result<()> {
    t.deviation(format_args!("{what} whole run"), p.whole_run_residual());
    match p.round_identity_residual()? {
        Some(r) => t.deviation(format_args!("{what} per round"), r),
        None => t.fail(format!("{what}: no trace recorded")),
    }
    Ok(())
}

fn bound_suite(t: &mut Tally, rng: &mut ChaCha8Rng, opts: &VerifyOptions) -> Result<()> {
    let grid = protocol_grid();
    let pairs = exec::map_ordered(opts.exec, &grid, |cfg| run_pair_with(cfg, opts.exec));
    for (cfg, p) in grid.iter().zip(pairs) {
        bound_case(t, &label(cfg), &p?);
    }
    for k in 0..100 {
        bound_case(t, &format!("random Bob {k}"), &random_bob_pair(rng, false)?);
    }
    Ok(())
}

fn bound_case(t: &mut Tally, what: &str, p: &PairOutcome) {
    t.deviation(format_args!("{what} chain"), (-p.bound.chain_slack()).max(0.0));
    for c in p.bound.violations() {
        t.fail(format!(
            "{what}: {} violated (lhs {:e}, rhs {:e})",
            c.name, c.lhs, c.rhs
        ));
    }
    if p.delta_g().norm() >= 1.0 - BOUND_TOL {
        let prod = p.bound.cost_product;
        t.require(prod >= 1.0 - PRODUCT_TOL, || {
            format!("{what}: full protocol with Q⁰Q¹ = {prod}")
        });
    }
}

fn passivity(t: &mut Tally, _: &mut ChaCha8Rng, opts: &VerifyOptions) -> Result<()> {
    for cfg in protocol_grid().into_iter().filter(|c| c.kind.bob_is_passive()) {
        let p = run_pair_with(&cfg, opts.exec)?;
        t.deviation(
            format_args!("{} violations", label(&cfg)),
            p.passivity_violations()? as f64,
        );
    }
    Ok(())
}

fn alice_independence(t: &mut Tally, _: &mut ChaCha8Rng, opts: &VerifyOptions) -> Result<()> {
    for cfg in protocol_grid() {
        let cfg = cfg.with_trace(true);
        let what = label(&cfg);
        let p = run_pair_with(&cfg, opts.exec)?;
        let [a0, a1] = [&p.runs[0].alice, &p.runs[1].alice];
        let same = a0.ops.is_some() && a0.ops == a1.ops && a0.fingerprint() == a1.fingerprint();
        t.deviation(
            format_args!("{what} op count difference"),
            a0.count.abs_diff(a1.count) as f64,
        );
        t.require(same, || format!("{what}: Alice's operations depend on λ"));
    }
    Ok(())
}

fn slaz_small(t: &mut Tally, _: &mut ChaCha8Rng, opts: &VerifyOptions) -> Result<()> {
    for (m, n) in [(1, 1), (4, 16), (8, 64), (16, 256)] {
        let what = format!("slaz M={m} N={n}");
        let p = run_pair_with(&ProtocolConfig::slaz(m, n), opts.exec)?;
        t.deviation(format_args!("{what} routes"), p.whole_run_residual());
        let khat1 = p.runs[1].ledger.total_costs().khat;
        t.require(khat1 == 0.0, || format!("{what}: K̂¹ = {khat1:e}, expected exactly 0"));
        let b0 = p.runs[0].final_state.region_weight(Region::Bob);
        t.require(b0 == 0.0, || format!("{what}: λ=0 B weight {b0:e}, expected exactly 0"));
        let ops = m * (3 * n + 2);
        t.require(p.runs[0].alice.count == ops, || {
            format!("{what}: {} Alice operations, expected {ops}", p.runs[0].alice.count)
        });
        t.require(p.bound.all_hold(), || format!("{what}: trade-off bound violated"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suite_passes_and_repeats() {
        let a = run_suite(&VerifyOptions::default());
        for c in &a.checks {
            assert!(c.passed, "{}: {:?}", c.name, c.failures);
            assert!(c.cases > 0, "{}", c.name);
        }
        let b = run_suite(&VerifyOptions {
            exec: Execution::Sequential,
            ..VerifyOptions::default()
        });
        assert_eq!(a, b);
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }

    #[test]
    fn injected_bob_breaks_gram_conservation_only() {
        let m = run_suite(&VerifyOptions {
            inject: Some(Injection::NonUnitaryBob),
            ..VerifyOptions::default()
        });
        assert!(!m.passed);
        let failed: Vec<&str> = m.failed().map(|c| c.name.as_str()).collect();
        assert_eq!(failed, ["gram-conservation"]);
    }

    #[test]
    fn seeds_change_random_cases() {
        let a = run_suite(&VerifyOptions {
            seed: 1,
            ..VerifyOptions::default()
        });
        let b = run_suite(&VerifyOptions {
            seed: 2,
            ..VerifyOptions::default()
        });
        assert!(a.passed && b.passed);
        assert_ne!(
            a.check("gram-conservation").unwrap().worst,
            b.check("gram-conservation").unwrap().worst
        );
    }

    #[test]
    fn injection_parses() {
        assert_eq!(
            "non-unitary-bob".parse::<Injection>().unwrap(),
            Injection::NonUnitaryBob
        );
        assert!("other".parse::<Injection>().is_err());
    }
}
