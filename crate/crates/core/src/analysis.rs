//! Closed-form SLAZ formulas, comparison against simulation, and sweeps.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::protocols::{run_pair_with, slaz_regime_ok, PairOutcome, ProtocolConfig, ProtocolKind, RunOutcome};
use crate::sum::CompensatedSum;

fn theta(k: usize) -> f64 {
    FRAC_PI_2 / k as f64
}

/// Asymptotic total Cost: (π²/8)(M/N) for λ=1, (π²/4)(N/M) for λ=0.
pub fn slaz_cost_formula(lambda: u8, outer: usize, rounds: usize) -> f64 {
    let (m, n) = (outer as f64, rounds as f64);
    if lambda == 0 {
        PI * PI / 4.0 * n / m
    } else {
        PI * PI / 8.0 * m / n
    }
}

/// Total Cost each protocol is known to need: exact for the one-way,
/// simple and polarization protocols, asymptotic for SLAZ.
pub fn reference_cost(kind: ProtocolKind, lambda: u8, outer: usize, rounds: usize) -> f64 {
    match kind {
        ProtocolKind::OneWay | ProtocolKind::Simple => 1.0,
        ProtocolKind::Polarization => 2.0,
        ProtocolKind::Slaz => slaz_cost_formula(lambda, outer, rounds),
    }
}

/// Q⁰/Q¹ = 2N²/M².
pub fn slaz_ratio_formula(outer: usize, rounds: usize) -> f64 {
    let r = rounds as f64 / outer as f64;
    2.0 * r * r
}

/// (sin θ_M sin θ_N) Σ_m sin(mθ_M) Σ_n sin(nθ_N), with no depletion factors.
/// Tends to 1 for large M, N.
pub fn slaz_overlap_formula(outer: usize, rounds: usize) -> f64 {
    let (tm, tn) = (theta(outer), theta(rounds));
    let sm: CompensatedSum = (1..=outer).map(|m| (m as f64 * tm).sin()).collect();
    let sn: CompensatedSum = (1..=rounds).map(|n| (n as f64 * tn).sin()).collect();
    tm.sin() * tn.sin() * sm.value() * sn.value()
}

/// |(cos θ_N)^N − (1 − π²/8N)|
pub fn zeno_approx_error(rounds: usize) -> f64 {
    let n = rounds as f64;
    let half = theta(rounds) / 2.0;
    // cos θ = 1 − 2 sin²(θ/2); ln_1p keeps the power accurate for large N.
    let power = (n * (-2.0 * half.sin().powi(2)).ln_1p()).exp();
    (power - (1.0 - PI * PI / (8.0 * n))).abs()
}

/// Expected weight deposited in B during outer round `m` (1-based) of a
/// λ=1 run, ignoring depletion: (π²/4) sin²(mθ_M)/N.
pub fn slaz_b_increment_formula(m: usize, outer: usize, rounds: usize) -> f64 {
    PI * PI / 4.0 * (m as f64 * theta(outer)).sin().powi(2) / rounds as f64
}

/// Largest relative deviation of a λ=1 run's per-outer-round B increments
/// from [`slaz_b_increment_formula`].
pub fn b_increment_max_rel_err(run: &RunOutcome, outer: usize, rounds: usize) -> f64 {
    run.outer_b_increments
        .iter()
        .enumerate()
        .map(|(k, &w)| (w / slaz_b_increment_formula(k + 1, outer, rounds) - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Finite-sum overlap against the simulated send-direction ⟨C⁰|C¹⟩.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapComparison {
    pub formula: f64,
    pub simulated: f64,
    /// |formula − 1|
    pub formula_vs_asymptote: f64,
    /// |simulated/formula − 1|
    pub simulation_vs_formula: f64,
}

pub fn compare_overlap(pair: &PairOutcome, outer: usize, rounds: usize) -> OverlapComparison {
    let formula = slaz_overlap_formula(outer, rounds);
    let simulated = pair.overlaps.send.re;
    OverlapComparison {
        formula,
        simulated,
        formula_vs_asymptote: (formula - 1.0).abs(),
        simulation_vs_formula: (simulated / formula - 1.0).abs(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub protocol: ProtocolKind,
    pub outer: usize,
    pub rounds: usize,
    pub lambda: u8,
    pub k: f64,
    pub khat: f64,
    pub q: f64,
    pub q_formula: f64,
    pub rel_err: f64,
    /// Shared by both rows of a pair.
    pub dg01: Complex64,
    /// Smallest slack of the trade-off chain for the pair.
    pub bound_slack: f64,
    pub bound_holds: bool,
    pub regime_ok: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridMode {
    Zip,
    Cross,
}

/// Combines outer and inner round lists into (M, N) grid points.
pub fn build_grid(outer: &[usize], rounds: &[usize], mode: GridMode) -> Result<Vec<(usize, usize)>> {
    if outer.is_empty() || rounds.is_empty() {
        return Err(Error::InvalidConfig("grid lists must be nonempty".into()));
    }
    if outer.contains(&0) || rounds.contains(&0) {
        return Err(Error::InvalidConfig("grid entries must be at least 1".into()));
    }
    match mode {
        GridMode::Zip => {
            if outer.len() != rounds.len() {
                return Err(Error::InvalidConfig(format!(
                    "zip grid needs lists of equal length, got {} and {}",
                    outer.len(),
                    rounds.len()
                )));
            }
            Ok(outer.iter().copied().zip(rounds.iter().copied()).collect())
        }
        GridMode::Cross => Ok(outer
            .iter()
            .flat_map(|&m| rounds.iter().map(move |&n| (m, n)))
            .collect()),
    }
}

pub fn run_sweep(grid: &[(usize, usize)]) -> Result<Vec<SweepRecord>> {
    run_sweep_with(grid, Execution::Parallel)
}

/// Runs a SLAZ pair per grid point; two records per point, in grid order.
pub fn run_sweep_with(grid: &[(usize, usize)], exec: Execution) -> Result<Vec<SweepRecord>> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("sweep grid is empty".into()));
    }
    let pairs = exec::map_ordered(exec, grid, |&(m, n)| {
        run_pair_with(&ProtocolConfig::slaz(m, n), exec).map(|p| sweep_records(&p, m, n))
    });
    let mut out = Vec::with_capacity(2 * grid.len());
    for p in pairs {
        out.extend(p?);
    }
    Ok(out)
}

/// The two rows (λ = 0, 1) describing a finished pair.
pub fn sweep_records(pair: &PairOutcome, outer: usize, rounds: usize) -> [SweepRecord; 2] {
    let dg01 = pair.delta_g();
    let kind = pair.runs[0].kind;
    let record = |lambda: u8| {
        let c = pair.runs[lambda as usize].ledger.total_costs();
        let q_formula = reference_cost(kind, lambda, outer, rounds);
        SweepRecord {
            protocol: kind,
            outer,
            rounds,
            lambda,
            k: c.k,
            khat: c.khat,
            q: c.q,
            q_formula,
            rel_err: (c.q / q_formula - 1.0).abs(),
            dg01,
            bound_slack: pair.bound.chain_slack(),
            bound_holds: pair.bound.all_hold(),
            regime_ok: kind != ProtocolKind::Slaz || slaz_regime_ok(outer, rounds),
        }
    };
    [record(0), record(1)]
}

/// Per-λ error sequences along a sweep, in grid order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    /// |ΔG⁰¹ + 1| per grid point.
    pub delta_g_err: Vec<f64>,
    pub rel_err: [Vec<f64>; 2],
}

impl Convergence {
    pub fn from_records(records: &[SweepRecord]) -> Self {
        let pick = |l: u8| records.iter().filter(move |r| r.lambda == l);
        Self {
            delta_g_err: pick(0).map(|r| (r.dg01 + 1.0).norm()).collect(),
            rel_err: [
                pick(0).map(|r| r.rel_err).collect(),
                pick(1).map(|r| r.rel_err).collect(),
            ],
        }
    }

    pub fn strictly_decreasing(&self) -> bool {
        strictly_decreasing(&self.delta_g_err)
            && strictly_decreasing(&self.rel_err[0])
            && strictly_decreasing(&self.rel_err[1])
    }
}

pub fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cost_formula_examples() {
        assert!((slaz_cost_formula(0, 10, 1000) - PI * PI * 25.0).abs() < 1e-12);
        assert!((slaz_cost_formula(1, 10, 1000) - PI * PI / 800.0).abs() < 1e-15);
        assert!((slaz_cost_formula(1, 10, 1000) - 0.012337).abs() < 1e-6);
        for (m, n) in [(1, 1), (3, 7), (32, 4096), (1000, 3)] {
            let p = slaz_cost_formula(0, m, n) * slaz_cost_formula(1, m, n);
            assert!((p - PI.powi(4) / 32.0).abs() < 1e-12);
            let r = slaz_cost_formula(0, m, n) / slaz_cost_formula(1, m, n);
            assert!((r / slaz_ratio_formula(m, n) - 1.0).abs() < 1e-12);
        }
        assert!((PI.powi(4) / 32.0 - 3.044).abs() < 1e-3);
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(slaz_ratio_formula(7, 7), 2.0);
        assert!((slaz_ratio_formula(10, 1000) - 20000.0).abs() < 1e-9);
    }

    fn brute_overlap(outer: usize, rounds: usize) -> f64 {
        let (tm, tn) = (PI / (2.0 * outer as f64), PI / (2.0 * rounds as f64));
        let mut s = 0.0;
        for m in 1..=outer {
            for n in 1..=rounds {
                s += (tm.sin() * (n as f64 * tn).sin()) * ((m as f64 * tm).sin() * tn.sin());
            }
        }
        s
    }

    #[test]
    fn overlap_formula_matches_double_sum() {
        assert!((slaz_overlap_formula(1, 1) - 1.0).abs() < 1e-15);
        for (m, n) in [(2, 3), (8, 512), (5, 40)] {
            assert!((slaz_overlap_formula(m, n) - brute_overlap(m, n)).abs() < 1e-12);
        }
        let v = slaz_overlap_formula(8, 512);
        assert!(v > 0.9 && v < 1.1);
        // high-precision reference values
        assert!((v - 1.089_604_114_255_902).abs() < 1e-12);
        assert!((slaz_overlap_formula(32, 4096) - 1.024_127_864_033_1).abs() < 1e-12);
        assert!((slaz_overlap_formula(2000, 200_000) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn zeno_error_examples() {
        assert!((zeno_approx_error(1) - (PI * PI / 8.0 - 1.0)).abs() < 1e-15);
        assert!((zeno_approx_error(1) - 0.2337).abs() < 1e-4);
        // high-precision references
        assert!((zeno_approx_error(100) / 7.528_771_173_562_244e-5 - 1.0).abs() < 1e-9);
        assert!((zeno_approx_error(4096) / 4.534_770_848_389_926e-8 - 1.0).abs() < 1e-6);
        for n in 16..=4096 {
            assert!(zeno_approx_error(n) <= 2.0 / (n * n) as f64, "N={n}");
        }
    }

    #[test]
    fn grid_modes() {
        assert_eq!(
            build_grid(&[1, 2], &[3, 4], GridMode::Zip).unwrap(),
            vec![(1, 3), (2, 4)]
        );
        assert_eq!(build_grid(&[1, 2], &[3, 4], GridMode::Cross).unwrap().len(), 4);
        assert!(build_grid(&[1, 2], &[3], GridMode::Zip).is_err());
        assert!(build_grid(&[], &[3], GridMode::Cross).is_err());
        assert!(build_grid(&[0], &[3], GridMode::Cross).is_err());
    }

    #[test]
    fn sweep_records_are_ordered_and_paired() {
        let grid = [(4, 16), (1, 1), (8, 64)];
        let recs = run_sweep(&grid).unwrap();
        assert_eq!(recs.len(), 6);
        for (k, &(m, n)) in grid.iter().enumerate() {
            let [a, b] = [&recs[2 * k], &recs[2 * k + 1]];
            assert_eq!((a.outer, a.rounds, a.lambda), (m, n, 0));
            assert_eq!((b.outer, b.rounds, b.lambda), (m, n, 1));
            assert_eq!(a.dg01, b.dg01);
            assert!(a.bound_holds && a.bound_slack >= -1e-9);
            assert_eq!(b.khat, 0.0);
        }
        assert!(!recs[2].regime_ok && recs[0].regime_ok);
        assert_eq!(recs, run_sweep_with(&grid, Execution::Sequential).unwrap());
        assert!(run_sweep(&[]).is_err());
    }

    #[test]
    fn overlap_gap_shrinks_into_the_regime() {
        let gaps: Vec<f64> = [(8, 512), (16, 2048), (32, 4096)]
            .iter()
            .map(|&(m, n)| {
                let p = crate::protocols::run_pair(&ProtocolConfig::slaz(m, n)).unwrap();
                compare_overlap(&p, m, n).simulation_vs_formula
            })
            .collect();
        assert!(strictly_decreasing(&gaps), "{gaps:?}");
        assert!(gaps[2] < 0.05, "{gaps:?}");
    }

    #[test]
    fn b_increments_track_the_formula_in_regime() {
        let (m, n) = (16, 1024);
        let r = crate::protocols::run_slaz(1, m, n, false).unwrap();
        assert_eq!(r.outer_b_increments.len(), m);
        assert!(b_increment_max_rel_err(&r, m, n) < 0.10);
    }

    #[test]
    fn reflected_loss_scales_like_one_over_m() {
        // Only the order of magnitude is claimed; at M = 8 the match is already within 10%.
        for m in [8, 16, 32] {
            let r = crate::protocols::run_slaz(0, m, 16 * m, false).unwrap();
            let r1 = r.diagnostics["r1"];
            let scale = std::f64::consts::PI.powi(2) / (8.0 * m as f64);
            assert!((0.5..2.0).contains(&(r1 / scale)), "M={m}: r1={r1}");
        }
    }
}
