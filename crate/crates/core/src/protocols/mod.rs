//! Protocol runs: each is a pure function from configuration to a
//! [`RunOutcome`] (final state, ledger, Alice's operation log, diagnostics).

mod bob;
mod engine;
mod pair;
mod polarization;
mod schedule;
mod simple;
mod slaz;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ledger::RunLedger;
use crate::state::StateVector;

pub use bob::{Bob, MatrixBob, PhaseBob, RandomBob};
pub use engine::{AliceLog, AliceOp, RoundTag, Snapshot};
pub use pair::{run_pair, run_pair_with, PairOutcome};
pub use polarization::run_polarization;
pub use schedule::{Schedule, ScheduleTarget, SCHEDULE_TOL};
pub use simple::{run_one_way, run_simple, run_with_bob};
pub use slaz::run_slaz;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolKind {
    OneWay,
    Simple,
    Polarization,
    Slaz,
}

impl ProtocolKind {
    /// Whether Bob only ever returns (at most) what he received. One-way
    /// transmission has Bob as the source, so it is not passive.
    pub fn bob_is_passive(self) -> bool {
        self != ProtocolKind::OneWay
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolKind::OneWay => "oneway",
            ProtocolKind::Simple => "simple",
            ProtocolKind::Polarization => "polarization",
            ProtocolKind::Slaz => "slaz",
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oneway" => Ok(ProtocolKind::OneWay),
            "simple" => Ok(ProtocolKind::Simple),
            "polarization" => Ok(ProtocolKind::Polarization),
            "slaz" => Ok(ProtocolKind::Slaz),
            other => Err(Error::InvalidConfig(format!("unknown protocol `{other}`"))),
        }
    }
}

/// Everything that defines a run except Bob's bit.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub kind: ProtocolKind,
    /// Inner-round count N.
    pub rounds: usize,
    /// Outer-round count M (SLAZ only).
    pub outer: usize,
    /// Overrides the uniform schedule for one-way and simple runs.
    pub schedule: Option<Schedule>,
    pub record_trace: bool,
}

impl ProtocolConfig {
    pub fn new(kind: ProtocolKind) -> Self {
        Self {
            kind,
            rounds: 1,
            outer: 1,
            schedule: None,
            record_trace: false,
        }
    }

    pub fn slaz(outer: usize, rounds: usize) -> Self {
        Self {
            outer,
            rounds,
            ..Self::new(ProtocolKind::Slaz)
        }
    }

    pub fn simple(rounds: usize) -> Self {
        Self {
            rounds,
            ..Self::new(ProtocolKind::Simple)
        }
    }

    pub fn with_schedule(mut self, schedule: Schedule) -> Self {
        self.rounds = schedule.len();
        self.schedule = Some(schedule);
        self
    }

    pub fn with_trace(mut self, on: bool) -> Self {
        self.record_trace = on;
        self
    }

    /// Checks well-formedness and returns regime warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        if self.rounds == 0 {
            return Err(Error::InvalidConfig("rounds must be at least 1".into()));
        }
        let mut warnings = Vec::new();
        match self.kind {
            ProtocolKind::Slaz => {
                if self.outer == 0 {
                    return Err(Error::InvalidConfig("outer rounds must be at least 1".into()));
                }
                if !slaz_regime_ok(self.outer, self.rounds) {
                    warnings.push(format!(
                        "M={} N={} is outside the asymptotic regime (need M >= 4 and 4M <= N); \
                         closed-form costs will not apply",
                        self.outer, self.rounds
                    ));
                }
            }
            ProtocolKind::OneWay | ProtocolKind::Simple => {
                let target = if self.kind == ProtocolKind::OneWay {
                    ScheduleTarget::OneWay
                } else {
                    ScheduleTarget::TwoWay
                };
                if let Some(s) = &self.schedule {
                    if s.target() != target {
                        return Err(Error::InvalidSchedule(format!(
                            "{} needs a schedule summing to {}, got one summing to {}",
                            self.kind,
                            target.sum(),
                            s.target().sum()
                        )));
                    }
                }
            }
            ProtocolKind::Polarization => {}
        }
        Ok(warnings)
    }

    pub(crate) fn schedule_or_uniform(&self, target: ScheduleTarget) -> Result<Schedule> {
        match &self.schedule {
            Some(s) => Ok(s.clone()),
            None => Schedule::uniform(self.rounds, target),
        }
    }
}

/// 1 ≪ M ≪ N, operationalized as M ≥ 4 and 4M ≤ N.
pub fn slaz_regime_ok(outer: usize, rounds: usize) -> bool {
    outer >= 4 && 4 * outer <= rounds
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub kind: ProtocolKind,
    pub lambda: u8,
    pub initial_state: StateVector,
    pub final_state: StateVector,
    pub ledger: RunLedger,
    pub alice: AliceLog,
    pub diagnostics: BTreeMap<String, f64>,
    /// SLAZ: weight deposited in B during each outer round.
    pub outer_b_increments: Vec<f64>,
    pub trace: Option<Vec<Snapshot>>,
    pub warnings: Vec<String>,
}

fn check_lambda(lambda: u8) -> Result<()> {
    if lambda > 1 {
        return Err(Error::InvalidConfig(format!("lambda must be 0 or 1, got {lambda}")));
    }
    Ok(())
}

/// Runs one configured protocol for Bob's bit `lambda`.
pub fn run(config: &ProtocolConfig, lambda: u8) -> Result<RunOutcome> {
    check_lambda(lambda)?;
    let warnings = config.validate()?;
    let mut out = match config.kind {
        ProtocolKind::OneWay => run_one_way(
            &config.schedule_or_uniform(ScheduleTarget::OneWay)?,
            lambda,
            config.record_trace,
        )?,
        ProtocolKind::Simple => run_simple(
            lambda,
            &config.schedule_or_uniform(ScheduleTarget::TwoWay)?,
            config.record_trace,
        )?,
        ProtocolKind::Polarization => run_polarization(lambda, config.record_trace)?,
        ProtocolKind::Slaz => run_slaz(lambda, config.outer, config.rounds, config.record_trace)?,
    };
    out.warnings = warnings;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_round_trips_through_text() {
        for k in [
            ProtocolKind::OneWay,
            ProtocolKind::Simple,
            ProtocolKind::Polarization,
            ProtocolKind::Slaz,
        ] {
            assert_eq!(k.as_str().parse::<ProtocolKind>().unwrap(), k);
        }
        assert!("bb84".parse::<ProtocolKind>().is_err());
    }

    #[test]
    fn regime_warning_is_not_an_error() {
        let w = ProtocolConfig::slaz(1, 1).validate().unwrap();
        assert_eq!(w.len(), 1);
        assert!(ProtocolConfig::slaz(8, 512).validate().unwrap().is_empty());
        assert!(!ProtocolConfig::slaz(3, 512).validate().unwrap().is_empty());
        assert!(!ProtocolConfig::slaz(8, 31).validate().unwrap().is_empty());
        assert!(ProtocolConfig::slaz(0, 4).validate().is_err());
        assert!(ProtocolConfig::slaz(4, 0).validate().is_err());
    }

    #[test]
    fn schedule_target_must_match_protocol() {
        let one_way = Schedule::new(vec![0.5, 0.5], ScheduleTarget::OneWay).unwrap();
        let cfg = ProtocolConfig::simple(2).with_schedule(one_way);
        assert!(matches!(cfg.validate(), Err(Error::InvalidSchedule(_))));
    }

    #[test]
    fn lambda_must_be_a_bit() {
        assert!(run(&ProtocolConfig::simple(1), 2).is_err());
    }
}
