//! Machine-readable reports: a JSON document for runs and pairs, CSV for
//! sweeps.

use std::collections::BTreeMap;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis::{sweep_records, SweepRecord};
use crate::error::{Error, Result};
use crate::ledger::{check_passivity, BoundReport, ChannelOverlaps, Costs, GramReport};
use crate::protocols::{PairOutcome, ProtocolConfig, ProtocolKind, RunOutcome};
use crate::state::{Region, StateVector};

/// Blocks larger than this are reported by weight only.
pub const MAX_LISTED_DIM: usize = 256;

pub const SWEEP_HEADER: [&str; 13] = [
    "protocol",
    "M",
    "N",
    "lambda",
    "K",
    "Khat",
    "Q",
    "Q_formula",
    "rel_err",
    "dG01_re",
    "dG01_im",
    "bound_slack",
    "regime_ok",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub protocol: ProtocolKind,
    pub lambda: Option<u8>,
    pub rounds: usize,
    pub outer: usize,
    pub schedule: Option<Vec<f64>>,
    pub trace: bool,
}

impl ConfigEcho {
    pub fn new(config: &ProtocolConfig, lambda: Option<u8>) -> Self {
        Self {
            protocol: config.kind,
            lambda,
            rounds: config.rounds,
            outer: config.outer,
            schedule: config.schedule.as_ref().map(|s| s.eps().to_vec()),
            trace: config.record_trace,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockReport {
    pub label: String,
    pub region: Region,
    pub dim: usize,
    pub weight: f64,
    /// Omitted for blocks above [`MAX_LISTED_DIM`].
    pub amplitudes: Option<Vec<Complex64>>,
}

fn block_reports(state: &StateVector) -> Vec<BlockReport> {
    state
        .partition()
        .blocks()
        .iter()
        .map(|b| {
            let amps = &state.amps()[b.range()];
            BlockReport {
                label: b.label.clone(),
                region: b.region,
                dim: b.dim,
                weight: amps.iter().map(|z| z.norm_sqr()).sum(),
                amplitudes: (b.dim <= MAX_LISTED_DIM).then(|| amps.to_vec()),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub outer: usize,
    pub inner: usize,
    pub alice_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub lambda: u8,
    pub costs: Costs,
    pub transits: usize,
    pub final_state: Vec<BlockReport>,
    pub alice_ops: usize,
    pub alice_fingerprint: String,
    pub diagnostics: BTreeMap<String, f64>,
    pub outer_b_increments: Vec<f64>,
    pub passivity_violations: usize,
    pub trace: Option<Vec<TraceEntry>>,
}

impl RunReport {
    pub fn new(run: &RunOutcome) -> Result<Self> {
        Ok(Self {
            lambda: run.lambda,
            costs: run.ledger.total_costs(),
            transits: run.ledger.uses().len(),
            final_state: block_reports(&run.final_state),
            alice_ops: run.alice.count,
            alice_fingerprint: format!("{:016x}", run.alice.fingerprint()),
            diagnostics: run.diagnostics.clone(),
            outer_b_increments: run.outer_b_increments.clone(),
            passivity_violations: check_passivity(&run.ledger)?.len(),
            trace: run.trace.as_ref().map(|t| {
                t.iter()
                    .map(|s| TraceEntry {
                        outer: s.tag.outer,
                        inner: s.tag.inner,
                        alice_weight: s.alice.norm_sqr(),
                    })
                    .collect()
            }),
        })
    }

    /// Listed amplitudes of `label`, if the block is small enough to list.
    pub fn amplitudes(&self, label: &str) -> Option<&[Complex64]> {
        self.final_state
            .iter()
            .find(|b| b.label == label)?
            .amplitudes
            .as_deref()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    /// ΔG⁰¹(A) from the final and initial states.
    pub delta_g_state: Complex64,
    /// ΔG⁰¹(A) from the ledgers.
    pub delta_g_ledger: Complex64,
    pub route_residual: f64,
    pub channel_overlaps: ChannelOverlaps,
    pub round_identity_residual: Option<f64>,
    pub gram: GramReport,
    pub bound: BoundReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub tool: String,
    pub version: String,
    pub config: ConfigEcho,
    pub runs: Vec<RunReport>,
    pub pair: Option<PairReport>,
    pub warnings: Vec<String>,
}

impl ReportDocument {
    fn empty(config: ConfigEcho) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            runs: Vec::new(),
            pair: None,
            warnings: Vec::new(),
        }
    }

    pub fn for_run(config: &ProtocolConfig, run: &RunOutcome) -> Result<Self> {
        let mut doc = Self::empty(ConfigEcho::new(config, Some(run.lambda)));
        doc.runs.push(RunReport::new(run)?);
        doc.warnings = run.warnings.clone();
        Ok(doc)
    }

    pub fn for_pair(config: &ProtocolConfig, pair: &PairOutcome) -> Result<Self> {
        let mut doc = Self::empty(ConfigEcho::new(config, None));
        for r in &pair.runs {
            doc.runs.push(RunReport::new(r)?);
        }
        doc.pair = Some(PairReport {
            delta_g_state: pair.delta_g(),
            delta_g_ledger: pair.predicted_delta,
            route_residual: pair.whole_run_residual(),
            channel_overlaps: pair.overlaps,
            round_identity_residual: pair.round_identity_residual()?,
            gram: pair.gram.clone(),
            bound: pair.bound.clone(),
        });
        doc.warnings = pair.warnings.clone();
        Ok(doc)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Io(e.to_string()))
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Writes sweep records under [`SWEEP_HEADER`]. Floats use the shortest
/// representation that parses back to the same value.
pub fn write_sweep_csv<W: Write>(records: &[SweepRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(SWEEP_HEADER).map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.protocol.to_string(),
            r.outer.to_string(),
            r.rounds.to_string(),
            r.lambda.to_string(),
            r.k.to_string(),
            r.khat.to_string(),
            r.q.to_string(),
            r.q_formula.to_string(),
            r.rel_err.to_string(),
            r.dg01.re.to_string(),
            r.dg01.im.to_string(),
            r.bound_slack.to_string(),
            r.regime_ok.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub const RUN_HEADER: [&str; 8] = ["protocol", "M", "N", "lambda", "K", "Khat", "Q", "transits"];

/// One summary row per run.
pub fn write_runs_csv<W: Write>(doc: &ReportDocument, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(RUN_HEADER).map_err(csv_err)?;
    for r in &doc.runs {
        w.write_record([
            doc.config.protocol.to_string(),
            doc.config.outer.to_string(),
            doc.config.rounds.to_string(),
            r.lambda.to_string(),
            r.costs.k.to_string(),
            r.costs.khat.to_string(),
            r.costs.q.to_string(),
            r.transits.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// A pair in sweep-row form.
pub fn write_pair_csv<W: Write>(config: &ProtocolConfig, pair: &PairOutcome, out: W) -> Result<()> {
    write_sweep_csv(&sweep_records(pair, config.outer, config.rounds), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::run_sweep;
    use crate::protocols::{run, run_pair};

    #[test]
    fn run_report_round_trips() {
        let cfg = ProtocolConfig::simple(3).with_trace(true);
        let doc = ReportDocument::for_run(&cfg, &run(&cfg, 1).unwrap()).unwrap();
        let back = ReportDocument::from_json(&doc.to_json().unwrap()).unwrap();
        assert_eq!(back, doc);
        assert_eq!(doc.runs[0].trace.as_ref().unwrap().len(), 4);
    }

    #[test]
    fn pair_report_round_trips_bit_for_bit() {
        let cfg = ProtocolConfig::slaz(4, 16).with_trace(true);
        let doc = ReportDocument::for_pair(&cfg, &run_pair(&cfg).unwrap()).unwrap();
        let back = ReportDocument::from_json(&doc.to_json().unwrap()).unwrap();
        assert_eq!(back, doc);
        let p = back.pair.unwrap();
        assert_eq!(
            p.delta_g_state.re.to_bits(),
            doc.pair.as_ref().unwrap().delta_g_state.re.to_bits()
        );
    }

    #[test]
    fn gram_entries_serialize_as_pairs() {
        let cfg = ProtocolConfig::simple(1);
        let doc = ReportDocument::for_pair(&cfg, &run_pair(&cfg).unwrap()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&doc.to_json().unwrap()).unwrap();
        let dg = &v["pair"]["delta_g_state"];
        assert_eq!(dg.as_array().unwrap().len(), 2);
        assert!((dg[0].as_f64().unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn large_blocks_keep_only_weight() {
        let cfg = ProtocolConfig::slaz(4, 128);
        let doc = ReportDocument::for_run(&cfg, &run(&cfg, 1).unwrap()).unwrap();
        let b = doc.runs[0].final_state.iter().find(|b| b.label == "B").unwrap();
        assert_eq!(b.dim, 512);
        assert!(b.amplitudes.is_none() && b.weight > 0.0);
        assert!(doc.runs[0].amplitudes("A1").is_some());
    }

    #[test]
    fn sweep_csv_layout() {
        let recs = run_sweep(&[(4, 16), (1, 1)]).unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(!text.contains('\r'));
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "protocol,M,N,lambda,K,Khat,Q,Q_formula,rel_err,dG01_re,dG01_im,bound_slack,regime_ok"
        );
        assert_eq!(lines.len(), 5);
        let fields: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(fields.len(), 13);
        assert_eq!(fields[6].parse::<f64>().unwrap(), recs[0].q);
        assert_eq!(fields[12], "true");
        assert!(lines[4].ends_with(",false"));
    }
}
