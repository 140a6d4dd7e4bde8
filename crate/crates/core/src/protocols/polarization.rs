use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use crate::error::Result;
use crate::ledger::Direction;
use crate::state::{Partition, Region};

use super::engine::{c1, Engine};
use super::{ProtocolKind, RunOutcome};

/// Polarization-encoded bit: Alice sends her whole amplitude as H, Bob
/// returns H for λ=0 or rotates it to V for λ=1. Both A and C are (H, V).
pub fn run_polarization(lambda: u8, record_trace: bool) -> Result<RunOutcome> {
    let part = Arc::new(Partition::new([("A", 2, Region::Alice), ("C", 2, Region::Channel)])?);
    let (ah, av) = (part.slot("A", 0)?, part.slot("A", 1)?);
    let (ch, cv) = (part.slot("C", 0)?, part.slot("C", 1)?);
    let mut run = Engine::new(
        ProtocolKind::Polarization,
        lambda,
        part,
        &[(ah, c1(1.0))],
        record_trace,
        2,
    )?;

    run.alice_swap(ah, ch)?;
    run.transit(Direction::AliceToBob, 1, 1);
    if lambda == 1 {
        run.state.apply_rotation(ch, cv, FRAC_PI_2)?;
    }
    run.transit(Direction::BobToAlice, 1, 1);
    run.alice_swap(ch, ah)?;
    run.alice_swap(cv, av)?;
    run.end_round(1, 1)?;

    let mut diag = BTreeMap::new();
    diag.insert("h_weight".into(), run.state.amps()[ah].norm_sqr());
    diag.insert("v_weight".into(), run.state.amps()[av].norm_sqr());
    run.finish(diag, Vec::new())
}
