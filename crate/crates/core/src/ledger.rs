//! Channel-transit ledgers, Costs, Gram matrices and the trade-off bound.
//!
//! A ledger stores the raw channel amplitude of every transit, so both the
//! Costs (squared norms) and the cross-run overlaps can be derived from it.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{overlap, weight, Region, StateVector, EXACT_TOL};
use crate::sum::{CompensatedComplexSum, CompensatedSum};

/// Slack floor for the bound inequalities.
pub const BOUND_TOL: f64 = 1e-9;
/// Slack floor for the cost-product corollary.
pub const PRODUCT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    AliceToBob,
    BobToAlice,
}

/// One transit of the channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelUse {
    pub direction: Direction,
    pub outer: usize,
    pub inner: usize,
    pub amps: Vec<Complex64>,
}

impl ChannelUse {
    pub fn new(direction: Direction, outer: usize, inner: usize, amps: Vec<Complex64>) -> Self {
        Self {
            direction,
            outer,
            inner,
            amps,
        }
    }

    pub fn cost(&self) -> f64 {
        weight(&self.amps)
    }

    fn key(&self) -> (Direction, usize, usize, usize) {
        (self.direction, self.outer, self.inner, self.amps.len())
    }
}

/// K (Alice→Bob), K̂ (Bob→Alice) and their sum Q.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Costs {
    pub k: f64,
    pub khat: f64,
    pub q: f64,
}

impl Costs {
    pub fn new(k: f64, khat: f64) -> Self {
        Self { k, khat, q: k + khat }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLedger {
    run_label: u8,
    uses: Vec<ChannelUse>,
    k: CompensatedSum,
    khat: CompensatedSum,
}

impl RunLedger {
    pub fn new(run_label: u8) -> Self {
        Self {
            run_label,
            uses: Vec::new(),
            k: CompensatedSum::new(),
            khat: CompensatedSum::new(),
        }
    }

    pub fn with_capacity(run_label: u8, transits: usize) -> Self {
        let mut l = Self::new(run_label);
        l.uses.reserve(transits);
        l
    }

    pub fn run_label(&self) -> u8 {
        self.run_label
    }

    pub fn uses(&self) -> &[ChannelUse] {
        &self.uses
    }

    pub fn record(&mut self, u: ChannelUse) {
        let cost = u.cost();
        match u.direction {
            Direction::AliceToBob => self.k.add(cost),
            Direction::BobToAlice => self.khat.add(cost),
        }
        self.uses.push(u);
    }

    pub fn total_costs(&self) -> Costs {
        Costs::new(self.k.value(), self.khat.value())
    }
}

fn check_aligned(l0: &RunLedger, l1: &RunLedger) -> Result<()> {
    if l0.uses.len() != l1.uses.len() {
        return Err(Error::MisalignedLedgers(format!(
            "{} transits vs {}",
            l0.uses.len(),
            l1.uses.len()
        )));
    }
    for (idx, (a, b)) in l0.uses.iter().zip(&l1.uses).enumerate() {
        if a.key() != b.key() {
            return Err(Error::MisalignedLedgers(format!(
                "transit {idx}: {:?} vs {:?}",
                a.key(),
                b.key()
            )));
        }
    }
    Ok(())
}

/// ⟨C⁰|C¹⟩ (Alice→Bob) and ⟨Ĉ⁰|Ĉ¹⟩ (Bob→Alice) over aligned transits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelOverlaps {
    pub send: Complex64,
    pub ret: Complex64,
}

pub fn channel_gram(l0: &RunLedger, l1: &RunLedger) -> Result<ChannelOverlaps> {
    check_aligned(l0, l1)?;
    let mut send = CompensatedComplexSum::new();
    let mut ret = CompensatedComplexSum::new();
    for (a, b) in l0.uses.iter().zip(&l1.uses) {
        let z = overlap(&a.amps, &b.amps);
        match a.direction {
            Direction::AliceToBob => send.add(z),
            Direction::BobToAlice => ret.add(z),
        }
    }
    Ok(ChannelOverlaps {
        send: send.value(),
        ret: ret.value(),
    })
}

/// ΔG⁰¹(A) predicted from the channel traffic: ⟨Ĉ⁰|Ĉ¹⟩ − ⟨C⁰|C¹⟩.
pub fn delta_gram_prediction(l0: &RunLedger, l1: &RunLedger) -> Result<Complex64> {
    let o = channel_gram(l0, l1)?;
    Ok(o.ret - o.send)
}

/// Per-round ⟨ĉ⁰|ĉ¹⟩ₙ − ⟨c⁰|c¹⟩ₙ, one entry per send/return pair.
pub fn round_deltas(l0: &RunLedger, l1: &RunLedger) -> Result<Vec<Complex64>> {
    check_aligned(l0, l1)?;
    let p0 = pair_rounds(l0)?;
    let p1 = pair_rounds(l1)?;
    Ok(p0
        .iter()
        .zip(&p1)
        .map(|((s0, r0), (s1, r1))| overlap(&r0.amps, &r1.amps) - overlap(&s0.amps, &s1.amps))
        .collect())
}

fn pair_rounds(l: &RunLedger) -> Result<Vec<(&ChannelUse, &ChannelUse)>> {
    if !l.uses.len().is_multiple_of(2) {
        return Err(Error::UnpairableLedger(format!(
            "odd number of transits ({})",
            l.uses.len()
        )));
    }
    l.uses
        .chunks_exact(2)
        .enumerate()
        .map(|(idx, pair)| {
            let (send, ret) = (&pair[0], &pair[1]);
            let ok = send.direction == Direction::AliceToBob
                && ret.direction == Direction::BobToAlice
                && send.outer == ret.outer
                && send.inner == ret.inner;
            if ok {
                Ok((send, ret))
            } else {
                Err(Error::UnpairableLedger(format!(
                    "round {idx} is not a send followed by its return"
                )))
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassivityViolation {
    pub outer: usize,
    pub inner: usize,
    pub sent_norm: f64,
    pub returned_norm: f64,
}

/// Rounds where Bob returned more amplitude than he received.
pub fn check_passivity(l: &RunLedger) -> Result<Vec<PassivityViolation>> {
    Ok(pair_rounds(l)?
        .into_iter()
        .filter_map(|(send, ret)| {
            let sent_norm = send.cost().sqrt();
            let returned_norm = ret.cost().sqrt();
            (returned_norm > sent_norm + EXACT_TOL).then_some(PassivityViolation {
                outer: send.outer,
                inner: send.inner,
                sent_norm,
                returned_norm,
            })
        })
        .collect())
}

/// 2×2 Gram matrix `[[G⁰⁰, G⁰¹], [G¹⁰, G¹¹]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Gram2(pub [[Complex64; 2]; 2]);

impl Gram2 {
    pub fn from_amps(a0: &[Complex64], a1: &[Complex64]) -> Self {
        let g01 = overlap(a0, a1);
        Gram2([
            [Complex64::new(weight(a0), 0.0), g01],
            [g01.conj(), Complex64::new(weight(a1), 0.0)],
        ])
    }

    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Gram2([[one, zero], [zero, one]])
    }

    pub fn get(&self, mu: usize, nu: usize) -> Complex64 {
        self.0[mu][nu]
    }

    pub fn overlap(&self) -> Complex64 {
        self.0[0][1]
    }

    pub fn add(&self, other: &Gram2) -> Gram2 {
        let mut out = *self;
        for i in 0..2 {
            for j in 0..2 {
                out.0[i][j] += other.0[i][j];
            }
        }
        out
    }

    pub fn sub(&self, other: &Gram2) -> Gram2 {
        let mut out = *self;
        for i in 0..2 {
            for j in 0..2 {
                out.0[i][j] -= other.0[i][j];
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Gram2) -> f64 {
        self.sub(other).max_abs()
    }

    /// max |G^{νμ} − conj(G^{μν})|
    pub fn hermiticity_residual(&self) -> f64 {
        (self.0[1][0] - self.0[0][1].conj())
            .norm()
            .max(self.0[0][0].im.abs())
            .max(self.0[1][1].im.abs())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramBlock {
    pub label: String,
    pub region: Region,
    pub gram: Gram2,
}

/// Per-block Gram contributions for a pair of states (μ = 0, ν = 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramReport {
    pub blocks: Vec<GramBlock>,
    pub regions: Vec<(Region, Gram2)>,
    pub total: Gram2,
    /// Final minus initial G(A), present when initial states were supplied.
    pub delta_alice: Option<Gram2>,
}

pub fn gram_blocks(s0: &StateVector, s1: &StateVector) -> Result<GramReport> {
    if !s0.same_partition(s1) {
        return Err(Error::PartitionMismatch);
    }
    let part = s0.partition();
    let blocks: Vec<GramBlock> = part
        .blocks()
        .iter()
        .map(|b| GramBlock {
            label: b.label.clone(),
            region: b.region,
            gram: Gram2::from_amps(&s0.amps()[b.range()], &s1.amps()[b.range()]),
        })
        .collect();
    let mut regions: Vec<(Region, Gram2)> = Vec::new();
    for region in [Region::Alice, Region::Channel, Region::Bob] {
        let present: Vec<&GramBlock> = blocks.iter().filter(|b| b.region == region).collect();
        if present.is_empty() {
            continue;
        }
        regions.push((region, present.iter().fold(Gram2::default(), |acc, b| acc.add(&b.gram))));
    }
    let total = Gram2::from_amps(s0.amps(), s1.amps());
    Ok(GramReport {
        blocks,
        regions,
        total,
        delta_alice: None,
    })
}

/// Gram report of the final pair with ΔG(A) measured against the initial pair.
pub fn gram_blocks_with_initial(
    s0: &StateVector,
    s1: &StateVector,
    init0: &StateVector,
    init1: &StateVector,
) -> Result<GramReport> {
    let mut report = gram_blocks(s0, s1)?;
    let initial = gram_blocks(init0, init1)?;
    report.delta_alice = Some(report.region(Region::Alice).sub(&initial.region(Region::Alice)));
    Ok(report)
}

impl GramReport {
    /// Sum over the blocks of `region` (zero matrix when none exist).
    pub fn region(&self, region: Region) -> Gram2 {
        self.regions
            .iter()
            .find(|(r, _)| *r == region)
            .map(|(_, g)| *g)
            .unwrap_or_default()
    }

    pub fn block(&self, label: &str) -> Option<&Gram2> {
        self.blocks.iter().find(|b| b.label == label).map(|b| &b.gram)
    }

    /// |total − Σ blocks|, entrywise max.
    pub fn additivity_residual(&self) -> f64 {
        let sum = self.blocks.iter().fold(Gram2::default(), |acc, b| acc.add(&b.gram));
        self.total.max_abs_diff(&sum)
    }

    pub fn hermiticity_residual(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.gram.hermiticity_residual())
            .fold(self.total.hermiticity_residual(), f64::max)
    }
}

/// Inputs to the Gram/Cost trade-off inequalities for one pair of runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffInput {
    pub delta_g: Complex64,
    pub costs: [Costs; 2],
    /// ΔG⁰⁰(A), ΔG¹¹(A) if known.
    pub diagonal_deltas: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// rhs − lhs
    pub slack: f64,
    pub holds: bool,
}

impl BoundCheck {
    fn le(name: &str, lhs: f64, rhs: f64, tol: f64) -> Self {
        let slack = rhs - lhs;
        Self {
            name: name.to_string(),
            lhs,
            rhs,
            slack,
            holds: slack >= -tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub checks: Vec<BoundCheck>,
    pub cost_product: f64,
}

impl BoundReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    pub fn check(&self, name: &str) -> Option<&BoundCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn violations(&self) -> impl Iterator<Item = &BoundCheck> {
        self.checks.iter().filter(|c| !c.holds)
    }

    /// Smallest slack of the |ΔG| ≤ √(K⁰K¹)+√(K̂⁰K̂¹) ≤ √(Q⁰Q¹) chain.
    pub fn chain_slack(&self) -> f64 {
        ["split_bound", "split_within_total", "total_bound"]
            .iter()
            .filter_map(|n| self.check(n))
            .map(|c| c.slack)
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn verify_tradeoff_bound(input: &TradeoffInput) -> Result<BoundReport> {
    for (mu, c) in input.costs.iter().enumerate() {
        for (name, v) in [("K", c.k), ("Khat", c.khat), ("Q", c.q)] {
            if v < 0.0 || v.is_nan() {
                let name = match (mu, name) {
                    (0, "K") => "K0",
                    (0, "Khat") => "Khat0",
                    (0, _) => "Q0",
                    (_, "K") => "K1",
                    (_, "Khat") => "Khat1",
                    _ => "Q1",
                };
                return Err(Error::NegativeCost { name, value: v });
            }
        }
    }
    let [c0, c1] = input.costs;
    let dg = input.delta_g.norm();
    let split = (c0.k * c1.k).sqrt() + (c0.khat * c1.khat).sqrt();
    let total = (c0.q * c1.q).sqrt();
    let mut checks = vec![
        BoundCheck::le("split_bound", dg, split, BOUND_TOL),
        BoundCheck::le("split_within_total", split, total, BOUND_TOL),
        BoundCheck::le("total_bound", dg, total, BOUND_TOL),
    ];
    if let Some([d0, d1]) = input.diagonal_deltas {
        checks.push(BoundCheck::le("diagonal_bound_0", d0, c0.q, BOUND_TOL));
        checks.push(BoundCheck::le("diagonal_bound_1", d1, c1.q, BOUND_TOL));
    }
    let cost_product = c0.q * c1.q;
    if dg >= 1.0 - BOUND_TOL {
        checks.push(BoundCheck::le("cost_product", 1.0, cost_product, PRODUCT_TOL));
    }
    Ok(BoundReport { checks, cost_product })
}
