use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::ledger::{
    channel_gram, check_passivity, gram_blocks_with_initial, round_deltas, verify_tradeoff_bound, BoundReport,
    ChannelOverlaps, Gram2, GramReport, TradeoffInput,
};
use crate::state::Region;

use super::{run, ProtocolConfig, RunOutcome};

/// Both bits of one configuration, with every Gram/Cost quantity that
/// relates them.
#[derive(Debug, Clone)]
pub struct PairOutcome {
    pub runs: [RunOutcome; 2],
    /// Final-state Gram blocks, with ΔG(A) against the initial states.
    pub gram: GramReport,
    pub overlaps: ChannelOverlaps,
    /// ΔG⁰¹(A) from the ledgers alone.
    pub predicted_delta: Complex64,
    pub bound: BoundReport,
    pub warnings: Vec<String>,
}

pub fn run_pair(config: &ProtocolConfig) -> Result<PairOutcome> {
    run_pair_with(config, Execution::Parallel)
}

pub fn run_pair_with(config: &ProtocolConfig, exec: Execution) -> Result<PairOutcome> {
    let warnings = config.validate()?;
    let (r0, r1) = exec::join(exec, || run(config, 0), || run(config, 1));
    let mut pair = PairOutcome::from_runs(r0?, r1?)?;
    pair.warnings = warnings;
    Ok(pair)
}

impl PairOutcome {
    /// Pairs two finished runs. Alice's operation logs must agree.
    pub fn from_runs(r0: RunOutcome, r1: RunOutcome) -> Result<Self> {
        if !r0.alice.matches(&r1.alice) {
            return Err(Error::Invariant(
                "Alice's operations differ between the two runs".into(),
            ));
        }
        let gram = gram_blocks_with_initial(&r0.final_state, &r1.final_state, &r0.initial_state, &r1.initial_state)?;
        let overlaps = channel_gram(&r0.ledger, &r1.ledger)?;
        let predicted_delta = overlaps.ret - overlaps.send;
        let delta = gram.delta_alice.unwrap_or_default();
        let bound = verify_tradeoff_bound(&TradeoffInput {
            delta_g: delta.overlap(),
            costs: [r0.ledger.total_costs(), r1.ledger.total_costs()],
            diagonal_deltas: Some([delta.get(0, 0).re, delta.get(1, 1).re]),
        })?;
        Ok(Self {
            runs: [r0, r1],
            gram,
            overlaps,
            predicted_delta,
            bound,
            warnings: Vec::new(),
        })
    }

    /// ΔG⁰¹(A) from final minus initial states.
    pub fn delta_g(&self) -> Complex64 {
        self.gram.delta_alice.unwrap_or_default().overlap()
    }

    /// |state-route ΔG⁰¹(A) − ledger-route ΔG⁰¹(A)|
    pub fn whole_run_residual(&self) -> f64 {
        (self.delta_g() - self.predicted_delta).norm()
    }

    pub fn final_alice_gram(&self) -> Gram2 {
        self.gram.region(Region::Alice)
    }

    /// Worst per-round mismatch between the change of G(A) seen in the
    /// traces and the ledger's ⟨ĉ|ĉ⟩ − ⟨c|c⟩, over all four Gram entries.
    /// `None` unless both runs were traced.
    pub fn round_identity_residual(&self) -> Result<Option<f64>> {
        let (Some(t0), Some(t1)) = (&self.runs[0].trace, &self.runs[1].trace) else {
            return Ok(None);
        };
        let l0 = &self.runs[0].ledger;
        let l1 = &self.runs[1].ledger;
        let d01 = round_deltas(l0, l1)?;
        let d00 = round_deltas(l0, l0)?;
        let d11 = round_deltas(l1, l1)?;
        if t0.len() != d01.len() + 1 || t1.len() != t0.len() {
            return Err(Error::Invariant(format!(
                "trace has {} snapshots for {} rounds",
                t0.len(),
                d01.len()
            )));
        }
        let grams: Vec<Gram2> = t0
            .iter()
            .zip(t1)
            .map(|(a, b)| Gram2::from_amps(a.alice.amps(), b.alice.amps()))
            .collect();
        let mut worst: f64 = 0.0;
        for k in 0..d01.len() {
            let step = grams[k + 1].sub(&grams[k]);
            worst = worst
                .max((step.get(0, 1) - d01[k]).norm())
                .max((step.get(0, 0) - d00[k]).norm())
                .max((step.get(1, 1) - d11[k]).norm());
        }
        Ok(Some(worst))
    }

    pub fn passivity_violations(&self) -> Result<usize> {
        Ok(check_passivity(&self.runs[0].ledger)?.len() + check_passivity(&self.runs[1].ledger)?.len())
    }
}
