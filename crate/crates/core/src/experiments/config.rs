//! JSON scan configurations and their dispatch.

use super::interference::{closed_form_measure, interference_measure, InterferenceMeasure};
use super::scans::*;
use crate::circuit::{parse_circuit, Instruction};
use crate::error::{GrabitError, Result};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterferenceConfig {
    /// Gate lines in circuit syntax, e.g. `PHASE pi/4 0`.
    pub gates: Vec<String>,
    /// Logical register width the gates act in.
    pub qubits: usize,
    pub starts: usize,
    pub seed: u64,
}

impl Default for InterferenceConfig {
    fn default() -> Self {
        Self { gates: vec!["H 0".into(), "PHASE pi/4 0".into(), "CNOT 0 1".into()], qubits: 2, starts: 24, seed: 1 }
    }
}

/// A scan description; the `scan` field selects the study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scan", rename_all = "snake_case")]
pub enum ScanConfig {
    QftMinNball(QftScanConfig),
    ErrorVsGates(ErrorScanConfig),
    H2Law(H2LawConfig),
    BvError(BvScanConfig),
    Interference(InterferenceConfig),
}

impl ScanConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScanConfig::QftMinNball(_) => "qft_min_nball",
            ScanConfig::ErrorVsGates(_) => "error_vs_gates",
            ScanConfig::H2Law(_) => "h2_law",
            ScanConfig::BvError(_) => "bv_error",
            ScanConfig::Interference(_) => "interference",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanOutput {
    pub scan: &'static str,
    pub config: ScanConfig,
    pub result: serde_json::Value,
    #[serde(skip)]
    pub csv: String,
}

#[derive(Debug, Clone, Serialize)]
struct InterferenceRow {
    #[serde(flatten)]
    measured: InterferenceMeasure,
    closed_form: f64,
}

fn interference_scan(cfg: &InterferenceConfig) -> Result<(Vec<InterferenceRow>, String)> {
    let mut rows = Vec::new();
    let mut csv = String::from("gate,n_grabits,measure,closed_form\n");
    for line in &cfg.gates {
        let c = parse_circuit(&format!("nbit {}\n{line}\n", cfg.qubits))?;
        let kind = match c.instructions.as_slice() {
            [Instruction::Gate { kind, .. }] => kind.clone(),
            _ => return Err(GrabitError::InvalidInput(format!("expected one gate line, got `{line}`"))),
        };
        let g = c.compile()?.into_iter().next().flatten().expect("one gate");
        let m = interference_measure(&g, c.n_grabits(), cfg.starts, cfg.seed)?;
        let _ = writeln!(csv, "\"{line}\",{},{},{}", m.n_grabits, m.measure, closed_form_measure(&kind));
        rows.push(InterferenceRow { closed_form: closed_form_measure(&kind), measured: m });
    }
    Ok((rows, csv))
}

pub fn run_scan(cfg: &ScanConfig) -> Result<ScanOutput> {
    let (result, csv) = match cfg {
        ScanConfig::QftMinNball(c) => {
            let t = min_nball_scan(c)?;
            (serde_json::to_value(&t)?, t.to_csv())
        }
        ScanConfig::ErrorVsGates(c) => {
            let t = error_vs_gates(c)?;
            (serde_json::to_value(&t)?, t.to_csv())
        }
        ScanConfig::H2Law(c) => {
            let t = h2_refresh_law(c)?;
            (serde_json::to_value(&t)?, t.to_csv())
        }
        ScanConfig::BvError(c) => {
            let t = bv_error_scan(c)?;
            (serde_json::to_value(&t)?, t.to_csv())
        }
        ScanConfig::Interference(c) => {
            let (rows, csv) = interference_scan(c)?;
            (serde_json::to_value(&rows)?, csv)
        }
    };
    Ok(ScanOutput { scan: cfg.name(), config: cfg.clone(), result, csv })
}
