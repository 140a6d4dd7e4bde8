//! The hierarchical Zeno-type protocol: `M` outer rounds of `N` inner
//! channel round-trips each.
//!
//! Layout: scalar slots `A1, A2, A3`, an `A4` block with one slot per outer
//! round (purified end-of-round measurement), the channel `C`, and a `B`
//! block with one slot per inner round (purified absorption for λ=1).

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::ledger::Direction;
use crate::state::{weight, Partition, Region};

use super::engine::{c1, Engine};
use super::{ProtocolKind, RunOutcome};

pub fn run_slaz(lambda: u8, outer: usize, rounds: usize, record_trace: bool) -> Result<RunOutcome> {
    if outer == 0 || rounds == 0 {
        return Err(Error::InvalidConfig(format!(
            "SLAZ needs M >= 1 and N >= 1, got M={outer} N={rounds}"
        )));
    }
    let bob_dim = outer
        .checked_mul(rounds)
        .ok_or_else(|| Error::InvalidConfig("M*N overflows".into()))?;
    let part = Arc::new(Partition::new([
        ("A1", 1, Region::Alice),
        ("A2", 1, Region::Alice),
        ("A3", 1, Region::Alice),
        ("A4", outer, Region::Alice),
        ("C", 1, Region::Channel),
        ("B", bob_dim, Region::Bob),
    ])?);
    let a1 = part.slot("A1", 0)?;
    let a2 = part.slot("A2", 0)?;
    let a3 = part.slot("A3", 0)?;
    let a4 = part.block("A4")?.offset;
    let c = part.slot("C", 0)?;
    let b = part.block("B")?.offset;

    let theta_m = FRAC_PI_2 / outer as f64;
    let theta_n = FRAC_PI_2 / rounds as f64;
    let mut run = Engine::new(
        ProtocolKind::Slaz,
        lambda,
        part,
        &[(a1, c1(1.0))],
        record_trace,
        2 * bob_dim,
    )?;
    let mut increments = Vec::with_capacity(if lambda == 1 { outer } else { 0 });

    for m in 1..=outer {
        run.alice_rotate(a1, a2, theta_m)?;
        for n in 1..=rounds {
            run.alice_rotate(a2, a3, theta_n)?;
            run.alice_swap(a3, c)?;
            run.transit(Direction::AliceToBob, m, n);
            if lambda == 1 {
                run.state.apply_swap(c, b + (m - 1) * rounds + (n - 1))?;
            }
            run.transit(Direction::BobToAlice, m, n);
            run.alice_swap(c, a3)?;
            run.end_round(m, n)?;
        }
        run.alice_swap(a3, a4 + (m - 1))?;
        if lambda == 1 {
            let start = b + (m - 1) * rounds;
            increments.push(weight(&run.state.amps()[start..start + rounds]));
        }
    }

    let s = &run.state;
    let amp1 = s.amps()[a1];
    let amp2 = s.amps()[a2];
    let a4_weight = s.block_weight("A4")?;
    let b_weight = s.block_weight("B")?;
    let mut diag = BTreeMap::new();
    diag.insert("a1".into(), amp1.re);
    diag.insert("a2".into(), amp2.re);
    diag.insert("a4_weight".into(), a4_weight);
    diag.insert("b_weight".into(), b_weight);
    if lambda == 0 {
        diag.insert("r1".into(), 1.0 - amp1.norm());
        diag.insert("r4".into(), a4_weight.sqrt());
    } else {
        diag.insert("s1".into(), amp1.norm());
        diag.insert("s2".into(), 1.0 - amp2.norm());
        diag.insert("sb".into(), b_weight.sqrt());
    }
    run.finish(diag, increments)
}
