//! One-way multitime transmission and the cost-optimal two-way protocols.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::ledger::Direction;
use crate::state::{Partition, Region};

use super::engine::{c1, sign, Engine};
use super::{Bob, PhaseBob, ProtocolKind, RoundTag, RunOutcome, Schedule, ScheduleTarget};

fn require(schedule: &Schedule, target: ScheduleTarget) -> Result<()> {
    if schedule.target() != target {
        return Err(Error::InvalidSchedule(format!(
            "schedule sums to {}, this protocol needs {}",
            schedule.target().sum(),
            target.sum()
        )));
    }
    Ok(())
}

/// Angle that moves `√ε` out of an amplitude `√(S + ε)`, leaving `√S`.
fn split_angle(eps: f64, remaining_after: f64) -> f64 {
    eps.sqrt().atan2(remaining_after.max(0.0).sqrt())
}

/// Bob sends his unit amplitude to Alice in `N` pieces, `√ε_n` per round,
/// tagged with the phase (−1)^λ. Alice parks round n's arrival in `A[n]`.
pub fn run_one_way(schedule: &Schedule, lambda: u8, record_trace: bool) -> Result<RunOutcome> {
    require(schedule, ScheduleTarget::OneWay)?;
    let n_rounds = schedule.len();
    let part = Arc::new(Partition::new([
        ("A", n_rounds, Region::Alice),
        ("C", 1, Region::Channel),
        ("B", 1, Region::Bob),
    ])?);
    let c = part.slot("C", 0)?;
    let b = part.slot("B", 0)?;
    let mut run = Engine::new(
        ProtocolKind::OneWay,
        lambda,
        part.clone(),
        &[(b, c1(1.0))],
        record_trace,
        2 * n_rounds,
    )?;
    let cumulative = schedule.cumulative();
    let phase = c1(sign(lambda));
    for (k, &eps) in schedule.eps().iter().enumerate() {
        let n = k + 1;
        run.transit(Direction::AliceToBob, 1, n);
        let theta = split_angle(eps, 1.0 - cumulative[n]);
        run.state.apply_rotation(b, c, theta)?;
        run.state.apply_phase(c, phase)?;
        run.transit(Direction::BobToAlice, 1, n);
        run.alice_swap(c, part.slot("A", k)?)?;
        run.end_round(1, n)?;
    }
    let mut diag = BTreeMap::new();
    diag.insert("alice_weight".into(), run.state.region_weight(Region::Alice));
    diag.insert("bob_weight".into(), run.state.region_weight(Region::Bob));
    run.finish(diag, Vec::new())
}

/// Two-way one-bit protocol with `d(A) = 2`, `d(C) = 1`.
///
/// Round n: Alice moves `√ε_n` from `a₁` into the channel, Bob multiplies it
/// by (−1)^λ, and Alice folds the return into the accumulator `a₂` with a
/// rotation that works for both signs at once.
pub fn run_simple(lambda: u8, schedule: &Schedule, record_trace: bool) -> Result<RunOutcome> {
    require(schedule, ScheduleTarget::TwoWay)?;
    let n_rounds = schedule.len();
    let part = Arc::new(Partition::new([("A", 2, Region::Alice), ("C", 1, Region::Channel)])?);
    let a1 = part.slot("A", 0)?;
    let a2 = part.slot("A", 1)?;
    let c = part.slot("C", 0)?;
    let mut run = Engine::new(
        ProtocolKind::Simple,
        lambda,
        part,
        &[(a1, c1(1.0))],
        record_trace,
        2 * n_rounds,
    )?;
    let mut bob = PhaseBob::for_bit(lambda);
    let cumulative = schedule.cumulative();
    for (k, &eps) in schedule.eps().iter().enumerate() {
        let n = k + 1;
        run.alice_rotate(a1, c, split_angle(eps, 1.0 - cumulative[n]))?;
        run.transit(Direction::AliceToBob, 1, n);
        bob.act(RoundTag { outer: 1, inner: n }, &mut run.state, &[c], &[])?;
        run.transit(Direction::BobToAlice, 1, n);
        // (±√S_{n-1}, ±√ε_n) → (±√S_n, 0)
        run.alice_rotate(a2, c, -eps.sqrt().atan2(cumulative[k].sqrt()))?;
        run.end_round(1, n)?;
    }
    let mut diag = BTreeMap::new();
    diag.insert("a1".into(), run.state.amps()[a1].re);
    diag.insert("a2".into(), run.state.amps()[a2].re);
    run.finish(diag, Vec::new())
}

/// Two-way protocol with an arbitrary Bob acting on C∪B.
///
/// Alice sends `√ε_n` out of `a₀` each round and swaps whatever comes back
/// into a fresh slot `A[n]`, so the channel is always emptied regardless of
/// what Bob does. `bob_dim = 0` omits the B block.
pub fn run_with_bob(
    schedule: &Schedule,
    bob: &mut dyn Bob,
    bob_dim: usize,
    run_label: u8,
    record_trace: bool,
) -> Result<RunOutcome> {
    require(schedule, ScheduleTarget::TwoWay)?;
    let n_rounds = schedule.len();
    let mut blocks = vec![("A", n_rounds + 1, Region::Alice), ("C", 1, Region::Channel)];
    if bob_dim > 0 {
        blocks.push(("B", bob_dim, Region::Bob));
    }
    let part = Arc::new(Partition::new(blocks)?);
    let a0 = part.slot("A", 0)?;
    let c = part.slot("C", 0)?;
    let bob_slots = part.region_slots(Region::Bob);
    let mut run = Engine::new(
        ProtocolKind::Simple,
        run_label,
        part.clone(),
        &[(a0, c1(1.0))],
        record_trace,
        2 * n_rounds,
    )?;
    let cumulative = schedule.cumulative();
    for (k, &eps) in schedule.eps().iter().enumerate() {
        let n = k + 1;
        run.alice_rotate(a0, c, split_angle(eps, 1.0 - cumulative[n]))?;
        run.transit(Direction::AliceToBob, 1, n);
        bob.act(RoundTag { outer: 1, inner: n }, &mut run.state, &[c], &bob_slots)?;
        run.transit(Direction::BobToAlice, 1, n);
        run.alice_swap(c, part.slot("A", n)?)?;
        run.end_round(1, n)?;
    }
    let mut diag = BTreeMap::new();
    diag.insert("bob_weight".into(), run.state.region_weight(Region::Bob));
    run.finish(diag, Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::gram_blocks;
    use crate::protocols::RandomBob;
    use crate::state::EXACT_TOL;
    use num_complex::Complex64;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn close(a: Complex64, re: f64) -> bool {
        (a - Complex64::new(re, 0.0)).norm() < EXACT_TOL
    }

    #[test]
    fn one_way_single_transit() {
        let s = Schedule::new(vec![1.0], ScheduleTarget::OneWay).unwrap();
        let out = run_one_way(&s, 0, false).unwrap();
        let costs = out.ledger.total_costs();
        assert!((costs.q - 1.0).abs() < EXACT_TOL);
        assert_eq!(costs.k, 0.0);
        assert!(close(out.final_state.amp_at("A", 0).unwrap(), 1.0));
    }

    #[test]
    fn one_way_two_halves_with_sign() {
        let s = Schedule::new(vec![0.5, 0.5], ScheduleTarget::OneWay).unwrap();
        let out = run_one_way(&s, 1, false).unwrap();
        assert!((out.ledger.total_costs().q - 1.0).abs() < EXACT_TOL);
        let a = out.final_state.block_amps("A").unwrap();
        assert!(close(a[0], -FRAC_1_SQRT_2));
        assert!(close(a[1], -FRAC_1_SQRT_2));
        assert!(out.final_state.block_weight("B").unwrap() < EXACT_TOL);
    }

    #[test]
    fn one_way_uneven_schedule_costs_one() {
        let s = Schedule::new(vec![0.3, 0.2, 0.5], ScheduleTarget::OneWay).unwrap();
        for lambda in 0..2 {
            let out = run_one_way(&s, lambda, false).unwrap();
            assert!((out.ledger.total_costs().q - 1.0).abs() < EXACT_TOL);
            assert!(out
                .ledger
                .uses()
                .iter()
                .filter(|u| u.direction == Direction::AliceToBob)
                .all(|u| u.cost() == 0.0));
        }
    }

    #[test]
    fn one_round_final_ket() {
        let s = Schedule::uniform(1, ScheduleTarget::TwoWay).unwrap();
        let out = run_simple(1, &s, false).unwrap();
        let a = out.final_state.block_amps("A").unwrap();
        assert!(close(a[0], FRAC_1_SQRT_2));
        assert!(close(a[1], -FRAC_1_SQRT_2));
        assert!(out.final_state.block_weight("C").unwrap() < EXACT_TOL * EXACT_TOL);
        let costs = out.ledger.total_costs();
        assert!((costs.k - 0.5).abs() < EXACT_TOL && (costs.khat - 0.5).abs() < EXACT_TOL);
    }

    #[test]
    fn uniform_four_rounds() {
        let s = Schedule::uniform(4, ScheduleTarget::TwoWay).unwrap();
        let out = run_simple(0, &s, false).unwrap();
        let a = out.final_state.block_amps("A").unwrap();
        assert!(close(a[0], FRAC_1_SQRT_2));
        assert!(close(a[1], FRAC_1_SQRT_2));
        assert!((out.ledger.total_costs().q - 1.0).abs() < EXACT_TOL);
    }

    #[test]
    fn intermediate_states_follow_the_round_recursion() {
        let s = Schedule::uniform(4, ScheduleTarget::TwoWay).unwrap();
        let out = run_simple(1, &s, true).unwrap();
        let trace = out.trace.unwrap();
        assert_eq!(trace.len(), 5);
        let eps = 0.125;
        for (n, snap) in trace.iter().enumerate() {
            let a = snap.alice.amps();
            let done = n as f64 * eps;
            assert!(close(a[0], (1.0 - done).sqrt()));
            assert!(close(a[1], -done.sqrt()));
        }
    }

    #[test]
    fn final_pair_is_orthonormal_in_a() {
        let s = Schedule::new(vec![0.1, 0.15, 0.25], ScheduleTarget::TwoWay).unwrap();
        let f0 = run_simple(0, &s, false).unwrap().final_state;
        let f1 = run_simple(1, &s, false).unwrap().final_state;
        let g = gram_blocks(&f0, &f1).unwrap();
        let ga = g.region(Region::Alice);
        assert!(ga.max_abs_diff(&crate::ledger::Gram2::identity()) < EXACT_TOL);
    }

    #[test]
    fn wrong_target_is_rejected() {
        let s = Schedule::uniform(2, ScheduleTarget::OneWay).unwrap();
        assert!(matches!(run_simple(0, &s, false), Err(Error::InvalidSchedule(_))));
        let s = Schedule::uniform(2, ScheduleTarget::TwoWay).unwrap();
        assert!(matches!(run_one_way(&s, 0, false), Err(Error::InvalidSchedule(_))));
    }

    #[test]
    fn phase_bob_through_generic_driver_is_also_full() {
        let s = Schedule::uniform(3, ScheduleTarget::TwoWay).unwrap();
        let f0 = run_with_bob(&s, &mut PhaseBob::for_bit(0), 0, 0, false)
            .unwrap()
            .final_state;
        let f1 = run_with_bob(&s, &mut PhaseBob::for_bit(1), 0, 1, false)
            .unwrap()
            .final_state;
        let g = gram_blocks(&f0, &f1).unwrap().region(Region::Alice);
        assert!(g.overlap().norm() < EXACT_TOL);
    }

    #[test]
    fn random_bob_keeps_the_channel_empty_between_rounds() {
        let s = Schedule::uniform(6, ScheduleTarget::TwoWay).unwrap();
        let out = run_with_bob(&s, &mut RandomBob::new(11), 2, 0, false).unwrap();
        assert!((out.final_state.norm_sqr() - 1.0).abs() < EXACT_TOL);
        assert!(out.final_state.block_weight("C").unwrap() == 0.0);
    }
}
