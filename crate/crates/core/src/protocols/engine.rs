use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ledger::{ChannelUse, Direction, RunLedger};
use crate::state::{Partition, Region, StateVector, EXACT_TOL};

use super::{ProtocolKind, RunOutcome};

/// One of Alice's λ-independent operations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AliceOp {
    Rotation { i: usize, j: usize, theta: f64 },
    Swap { i: usize, j: usize },
}

impl AliceOp {
    fn feed(&self, h: &mut Fnv64) {
        match self {
            AliceOp::Rotation { i, j, theta } => {
                h.write(&[0]);
                h.write_usize(*i);
                h.write_usize(*j);
                h.write(&theta.to_bits().to_le_bytes());
            }
            AliceOp::Swap { i, j } => {
                h.write(&[1]);
                h.write_usize(*i);
                h.write_usize(*j);
            }
        }
    }
}

/// FNV-1a, 64 bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Fnv64(u64);

impl Fnv64 {
    fn new() -> Self {
        Fnv64(0xcbf2_9ce4_8422_2325)
    }

    fn write(&mut self, bytes: &[u8]) {
        for b in bytes {
            self.0 ^= u64::from(*b);
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
    }

    fn write_usize(&mut self, v: usize) {
        self.write(&(v as u64).to_le_bytes());
    }
}

/// Record of everything Alice did during a run: a bit-level fingerprint
/// always, the full operation list when tracing.
#[derive(Debug, Clone, PartialEq)]
pub struct AliceLog {
    pub count: usize,
    fingerprint: Fnv64,
    pub ops: Option<Vec<AliceOp>>,
}

impl AliceLog {
    fn new(keep_ops: bool) -> Self {
        Self {
            count: 0,
            fingerprint: Fnv64::new(),
            ops: keep_ops.then(Vec::new),
        }
    }

    fn push(&mut self, op: AliceOp) {
        self.count += 1;
        op.feed(&mut self.fingerprint);
        if let Some(ops) = &mut self.ops {
            ops.push(op);
        }
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint.0
    }

    /// Same number of operations with the same bit-level content.
    pub fn matches(&self, other: &AliceLog) -> bool {
        self.count == other.count
            && self.fingerprint == other.fingerprint
            && match (&self.ops, &other.ops) {
                (Some(a), Some(b)) => a == b,
                _ => true,
            }
    }
}

/// Position in a run; `(0, 0)` is the initial state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RoundTag {
    pub outer: usize,
    pub inner: usize,
}

/// Alice's part of the state at a round boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub tag: RoundTag,
    pub alice: StateVector,
}

/// Mutable bookkeeping for one run in progress.
pub(crate) struct Engine {
    kind: ProtocolKind,
    lambda: u8,
    pub state: StateVector,
    initial: StateVector,
    ledger: RunLedger,
    alice: AliceLog,
    channel: Vec<usize>,
    alice_part: Arc<Partition>,
    trace: Option<Vec<Snapshot>>,
}

impl Engine {
    pub fn new(
        kind: ProtocolKind,
        lambda: u8,
        partition: Arc<Partition>,
        init: &[(usize, Complex64)],
        record_trace: bool,
        transits_hint: usize,
    ) -> Result<Self> {
        let state = StateVector::make_state(partition.clone(), init)?;
        let channel = partition.region_slots(Region::Channel);
        let alice_part = Arc::new(partition.restrict(Region::Alice)?);
        let mut engine = Self {
            kind,
            lambda,
            initial: state.clone(),
            state,
            ledger: RunLedger::with_capacity(lambda, transits_hint),
            alice: AliceLog::new(record_trace),
            channel,
            alice_part,
            trace: record_trace.then(Vec::new),
        };
        engine.snapshot(RoundTag { outer: 0, inner: 0 })?;
        Ok(engine)
    }

    pub fn alice_rotate(&mut self, i: usize, j: usize, theta: f64) -> Result<()> {
        self.state.apply_rotation(i, j, theta)?;
        self.alice.push(AliceOp::Rotation { i, j, theta });
        Ok(())
    }

    pub fn alice_swap(&mut self, i: usize, j: usize) -> Result<()> {
        self.state.apply_swap(i, j)?;
        self.alice.push(AliceOp::Swap { i, j });
        Ok(())
    }

    /// Records the current channel contents as a transit.
    pub fn transit(&mut self, direction: Direction, outer: usize, inner: usize) {
        let amps = self.channel.iter().map(|&s| self.state.amps()[s]).collect();
        self.ledger.record(ChannelUse::new(direction, outer, inner, amps));
    }

    fn channel_norm(&self) -> f64 {
        self.channel
            .iter()
            .map(|&s| self.state.amps()[s].norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Closes a send/return round: the channel must be empty again.
    pub fn end_round(&mut self, outer: usize, inner: usize) -> Result<()> {
        let c = self.channel_norm();
        if c > EXACT_TOL {
            return Err(Error::Invariant(format!(
                "channel holds amplitude {c:e} after round ({outer}, {inner})"
            )));
        }
        self.snapshot(RoundTag { outer, inner })
    }

    fn snapshot(&mut self, tag: RoundTag) -> Result<()> {
        if let Some(trace) = &mut self.trace {
            let alice = self.state.restrict_to(Region::Alice, &self.alice_part)?;
            trace.push(Snapshot { tag, alice });
        }
        Ok(())
    }

    pub fn finish(self, diagnostics: BTreeMap<String, f64>, outer_b_increments: Vec<f64>) -> Result<RunOutcome> {
        let c = self.channel_norm();
        if c > EXACT_TOL {
            return Err(Error::Invariant(format!("channel not empty at end of run ({c:e})")));
        }
        let norm = self.state.norm_sqr();
        let start = self.initial.norm_sqr();
        if (norm - start).abs() > EXACT_TOL {
            return Err(Error::Invariant(format!("squared norm drifted from {start} to {norm}")));
        }
        Ok(RunOutcome {
            kind: self.kind,
            lambda: self.lambda,
            initial_state: self.initial,
            final_state: self.state,
            ledger: self.ledger,
            alice: self.alice,
            diagnostics,
            outer_b_increments,
            trace: self.trace,
            warnings: Vec::new(),
        })
    }
}

pub(crate) fn c1(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub(crate) fn sign(lambda: u8) -> f64 {
    if lambda == 0 {
        1.0
    } else {
        -1.0
    }
}
