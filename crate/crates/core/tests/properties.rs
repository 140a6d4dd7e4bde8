use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qcost::ledger::gram_blocks;
use qcost::protocols::{run, run_pair, ProtocolConfig, ProtocolKind, Schedule, ScheduleTarget};
use qcost::report::ReportDocument;
use qcost::state::{BlockUnitary, Partition, Region, StateVector};

fn partition() -> Arc<Partition> {
    Arc::new(
        Partition::new([
            ("A", 3, Region::Alice),
            ("C", 1, Region::Channel),
            ("B", 2, Region::Bob),
        ])
        .unwrap(),
    )
}

fn state() -> impl Strategy<Value = StateVector> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 6)
        .prop_filter("nonzero", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3))
        .prop_map(|v| {
            let n: f64 = v.iter().map(|(a, b)| a * a + b * b).sum::<f64>().sqrt();
            let amps = v.into_iter().map(|(a, b)| Complex64::new(a / n, b / n)).collect();
            StateVector::from_amplitudes(partition(), amps).unwrap()
        })
}

#[derive(Debug, Clone)]
enum Op {
    Rotate(usize, usize, f64),
    Swap(usize, usize),
    Phase(usize, f64),
}

fn op() -> impl Strategy<Value = Op> {
    let pair = (0usize..6, 0usize..6).prop_filter("distinct", |(i, j)| i != j);
    prop_oneof![
        (pair.clone(), -PI..PI).prop_map(|((i, j), t)| Op::Rotate(i, j, t)),
        pair.prop_map(|(i, j)| Op::Swap(i, j)),
        (0usize..6, -PI..PI).prop_map(|(i, p)| Op::Phase(i, p)),
    ]
}

fn apply(s: &mut StateVector, op: &Op) {
    match *op {
        Op::Rotate(i, j, t) => s.apply_rotation(i, j, t).unwrap(),
        Op::Swap(i, j) => s.apply_swap(i, j).unwrap(),
        Op::Phase(i, p) => s.apply_phase(i, Complex64::from_polar(1.0, p)).unwrap(),
    }
}

proptest! {
    #[test]
    fn norm_is_preserved(mut s in state(), ops in prop::collection::vec(op(), 0..200)) {
        for o in &ops {
            apply(&mut s, o);
        }
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rotations_compose(s in state(), a in -PI..PI, b in -PI..PI, i in 0usize..6, d in 1usize..6) {
        let j = (i + d) % 6;
        let mut two = s.clone();
        two.apply_rotation(i, j, a).unwrap();
        two.apply_rotation(i, j, b).unwrap();
        let mut one = s;
        one.apply_rotation(i, j, a + b).unwrap();
        prop_assert!(two.max_abs_diff(&one).unwrap() < 1e-12);
    }

    #[test]
    fn common_operations_conserve_the_total_gram(
        mut s0 in state(),
        mut s1 in state(),
        ops in prop::collection::vec(op(), 0..50),
        seed in any::<u64>(),
    ) {
        let before = gram_blocks(&s0, &s1).unwrap();
        for o in &ops {
            apply(&mut s0, o);
            apply(&mut s1, o);
        }
        let u = BlockUnitary::random((0..6).collect(), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        s0.apply_block_unitary(&u).unwrap();
        s1.apply_block_unitary(&u).unwrap();
        let after = gram_blocks(&s0, &s1).unwrap();
        prop_assert!(after.total.max_abs_diff(&before.total) < 1e-12);
        prop_assert!(after.additivity_residual() < 1e-12);
        prop_assert!(after.hermiticity_residual() < 1e-12);
    }

    #[test]
    fn simple_protocol_is_exact_for_any_schedule(
        raw in prop::collection::vec(0.01f64..1.0, 1..40),
        lambda in 0u8..2,
    ) {
        let total: f64 = raw.iter().sum();
        let eps: Vec<f64> = raw.iter().map(|x| 0.5 * x / total).collect();
        let s = Schedule::new(eps, ScheduleTarget::TwoWay).unwrap();
        let r = run(&ProtocolConfig::simple(s.len()).with_schedule(s), lambda).unwrap();
        let c = r.ledger.total_costs();
        prop_assert!((c.q - 1.0).abs() < 1e-12);
        prop_assert!((c.k - 0.5).abs() < 1e-12 && (c.khat - 0.5).abs() < 1e-12);
    }

    #[test]
    fn simple_final_state_ignores_how_the_schedule_is_split(
        raw in prop::collection::vec(0.01f64..1.0, 1..40),
        lambda in 0u8..2,
    ) {
        let total: f64 = raw.iter().sum();
        let eps: Vec<f64> = raw.iter().map(|x| 0.5 * x / total).collect();
        let s = Schedule::new(eps, ScheduleTarget::TwoWay).unwrap();
        let split = run(&ProtocolConfig::simple(s.len()).with_schedule(s), lambda).unwrap();
        let single = run(&ProtocolConfig::simple(1), lambda).unwrap();
        prop_assert!(split.final_state.max_abs_diff(&single.final_state).unwrap() < 1e-12);
        let (q, q1) = (split.ledger.total_costs().q, single.ledger.total_costs().q);
        prop_assert!((q - q1).abs() < 1e-12);
    }

    #[test]
    fn schedules_are_rescaled_onto_the_target(
        raw in prop::collection::vec(0.01f64..1.0, 1..40),
        nudge in -5e-10f64..5e-10,
    ) {
        let total: f64 = raw.iter().sum();
        let eps: Vec<f64> = raw.iter().map(|x| x / total * (1.0 + nudge)).collect();
        let s = Schedule::new(eps.clone(), ScheduleTarget::OneWay).unwrap();
        let cum = s.cumulative();
        prop_assert!((cum[cum.len() - 1] - 1.0).abs() < 1e-14);
        for (a, b) in s.eps().iter().zip(&eps) {
            prop_assert!((a / b - 1.0).abs() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pair_reports_round_trip(
        kind in prop_oneof![Just(ProtocolKind::Simple), Just(ProtocolKind::OneWay), Just(ProtocolKind::Polarization), Just(ProtocolKind::Slaz)],
        rounds in 1usize..24,
        outer in 1usize..6,
        trace in any::<bool>(),
    ) {
        let cfg = ProtocolConfig { rounds, outer, ..ProtocolConfig::new(kind) }.with_trace(trace);
        let doc = ReportDocument::for_pair(&cfg, &run_pair(&cfg).unwrap()).unwrap();
        let back = ReportDocument::from_json(&doc.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, doc);
    }
}
