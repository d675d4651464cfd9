//! Sampled and exact-stochastic execution of circuits.

use super::{insert_refresh, Circuit, InitState, Instruction, RefreshPolicy};
use crate::byte4;
use crate::ensemble::{sample_ensemble, RealizationEnsemble};
use crate::error::{GrabitError, Result};
use crate::prob::{ProbVector, Weight};
use crate::refresh::{refresh, RefreshContext, RefreshReport, RefreshVariant, RoarMode};
use crate::rng::RngStream;
use crate::state::{encode_state, exact_state, extract_state, physical_distribution, realify, Gauge, GrabitStateEstimate};
use num_complex::Complex64;
use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::time::{Duration, Instant};

/// Largest grabit count the exact stochastic engine accepts by default.
pub const DEFAULT_EXACT_LIMIT: usize = 10;

/// Dense complex input state of the circuit's logical qubits.
pub fn initial_amplitudes(c: &Circuit) -> Result<Vec<Complex64>> {
    let n = c.n_logical;
    if n > 24 {
        return Err(GrabitError::LimitExceeded { limit: "dense qubits", requested: n, max: 24 });
    }
    let dim = 1usize << n;
    match &c.init {
        InitState::Basis(bits) => {
            let mut v = vec![Complex64::new(0.0, 0.0); dim];
            v[*bits as usize] = Complex64::new(1.0, 0.0);
            Ok(v)
        }
        InitState::Fourier { k, reversed } => Ok(fourier_amplitudes(n, *k, *reversed)),
        InitState::Periodic(p) => {
            let count = (dim as u64).div_ceil(*p);
            let a = Complex64::new((count as f64).sqrt().recip(), 0.0);
            Ok((0..dim as u64).map(|i| if i % p == 0 { a } else { Complex64::new(0.0, 0.0) }).collect())
        }
        InitState::File(path) => load_state_csv(path, dim),
    }
}

/// `prod_l (|0> + e^{2 pi i k / 2^{j_l}} |1>)/sqrt 2` with `j_l = l + 1` for
/// qubit `l` (qubit 0 most significant), or `j_l = n - l` when reversed.
pub(crate) fn fourier_amplitudes(n: usize, k: u64, reversed: bool) -> Vec<Complex64> {
    let phases: Vec<Complex64> = (0..n)
        .map(|l| {
            let j = if reversed { n - l } else { l + 1 } as u32;
            let m = 1u64 << j;
            Complex64::from_polar(1.0, 2.0 * PI * (k % m) as f64 / m as f64)
        })
        .collect();
    let scale = (0.5f64).powf(n as f64 / 2.0);
    (0..1usize << n)
        .map(|y| {
            let mut a = Complex64::new(scale, 0.0);
            for (l, ph) in phases.iter().enumerate() {
                if (y >> (n - 1 - l)) & 1 == 1 {
                    a *= ph;
                }
            }
            a
        })
        .collect()
}

fn load_state_csv(path: &Path, dim: usize) -> Result<Vec<Complex64>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut v = vec![Complex64::new(0.0, 0.0); dim];
    for rec in r.records() {
        let rec = rec?;
        let field = |i: usize| -> Result<&str> {
            rec.get(i).map(str::trim).ok_or_else(|| GrabitError::InvalidInput(format!("state file row has {} fields", rec.len())))
        };
        let bad = |s: &str| GrabitError::InvalidInput(format!("bad number '{s}' in state file"));
        let idx: usize = field(0)?.parse().map_err(|_| bad(field(0).unwrap_or("")))?;
        let re: f64 = field(1)?.parse().map_err(|_| bad(field(1).unwrap_or("")))?;
        let im: f64 = field(2)?.parse().map_err(|_| bad(field(2).unwrap_or("")))?;
        if idx >= dim {
            return Err(GrabitError::InvalidInput(format!("state index {idx} outside [0,{dim})")));
        }
        v[idx] = Complex64::new(re, im);
    }
    Ok(v)
}

/// Encoded initial probability vector over all grabits of the circuit.
pub fn initial_vector(c: &Circuit) -> Result<ProbVector<f64>> {
    if let InitState::Basis(bits) = c.init {
        let blv = if c.has_reim { bits << 1 } else { bits };
        return ProbVector::point_mass(c.n_grabits(), byte4::canonical(blv, false));
    }
    let psi = initial_amplitudes(c)?;
    if c.has_reim {
        encode_state(&realify(&psi).components, Gauge::MaxContrast)
    } else {
        let re: Vec<f64> = psi.iter().map(|z| z.re).collect();
        encode_state(&re, Gauge::MaxContrast)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmplitudeEntry {
    pub blv: u64,
    pub bits: String,
    pub value: f64,
}

fn entries(n: usize, m: &BTreeMap<u64, f64>) -> Vec<AmplitudeEntry> {
    m.iter()
        .filter(|(_, &v)| v != 0.0)
        .map(|(&blv, &value)| AmplitudeEntry { blv, bits: byte4::blv_binary(blv, n), value })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct RunResult {
    pub engine: &'static str,
    pub n_logical: usize,
    pub n_grabits: usize,
    pub has_reim: bool,
    pub seed: Option<u64>,
    pub n_ball_initial: Option<usize>,
    pub n_ball_final: Option<usize>,
    pub gates_applied: usize,
    /// Signed estimate over all grabits (ReIm included).
    pub estimate: Vec<AmplitudeEntry>,
    /// Physical distribution over the logical qubits (ReIm summed out).
    pub physical: Vec<AmplitudeEntry>,
    pub peak_abs_estimate: Option<u64>,
    pub peak_physical: Option<u64>,
    pub annihilated: bool,
    pub effective_ball_trace: Vec<u64>,
    pub refresh_reports: Vec<RefreshReport>,
    #[serde(skip)]
    pub state: GrabitStateEstimate<f64>,
    #[serde(skip)]
    pub physical_logical: BTreeMap<u64, f64>,
    #[serde(skip)]
    pub ensemble: Option<RealizationEnsemble>,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl RunResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    /// Dense logical physical distribution.
    pub fn physical_dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; 1usize << self.n_logical];
        for (&k, &p) in &self.physical_logical {
            v[k as usize] = p;
        }
        v
    }
}

fn logical_physical(p: &BTreeMap<u64, f64>, has_reim: bool) -> BTreeMap<u64, f64> {
    if !has_reim {
        return p.clone();
    }
    let mut out = BTreeMap::new();
    for (&k, &v) in p {
        *out.entry(k >> 1).or_insert(0.0) += v;
    }
    out
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub n_ball: usize,
    pub seed: u64,
    /// Worker threads; the ambient rayon pool when unset.
    pub workers: Option<usize>,
    /// Replaces the variant of every REFRESH instruction.
    pub refresh_override: Option<RefreshVariant>,
    /// Replaces the circuit's own refresh policy.
    pub policy_override: Option<(RefreshPolicy, RefreshVariant)>,
    /// Rf2 replication target; defaults to the initial N_ball.
    pub rf2_target: Option<usize>,
    /// Rf3 memory size; defaults to twice the initial N_ball.
    pub rf3_capacity: Option<usize>,
    pub monte_carlo_roar: bool,
    /// Record the effective ball count after every instruction.
    pub trace: bool,
    pub keep_ensemble: bool,
}

impl RunOptions {
    pub fn new(n_ball: usize, seed: u64) -> Self {
        Self {
            n_ball,
            seed,
            workers: None,
            refresh_override: None,
            policy_override: None,
            rf2_target: None,
            rf3_capacity: None,
            monte_carlo_roar: false,
            trace: true,
            keep_ensemble: false,
        }
    }
}

/// Resolves policy and overrides into the instruction list actually executed.
fn effective_circuit(c: &Circuit, opts: &RunOptions) -> Result<Circuit> {
    let (policy, variant) = opts.policy_override.unwrap_or((c.refresh_policy, c.policy_variant));
    let mut out = insert_refresh(c, policy, variant)?;
    if let Some(v) = opts.refresh_override {
        for ins in &mut out.instructions {
            if let Instruction::Refresh(r) = ins {
                *r = v;
            }
        }
    }
    Ok(out)
}

pub fn run_sampled(c: &Circuit, opts: &RunOptions) -> Result<RunResult> {
    if opts.n_ball == 0 {
        return Err(GrabitError::EmptyEnsemble);
    }
    match opts.workers {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .map_err(|e| GrabitError::InvalidInput(format!("thread pool: {e}")))?
            .install(|| run_sampled_inner(c, opts)),
        None => run_sampled_inner(c, opts),
    }
}

fn run_sampled_inner(c: &Circuit, opts: &RunOptions) -> Result<RunResult> {
    let start = Instant::now();
    let circuit = effective_circuit(c, opts)?;
    let gates = circuit.compile()?;
    let rng = RngStream::new(opts.seed);
    let mut e = sample_ensemble(&initial_vector(&circuit)?, opts.n_ball, &rng)?;
    let mut trace = Vec::new();
    if opts.trace {
        trace.push(e.effective_ball_count());
    }
    let mut reports = Vec::new();
    let mut applied = 0;
    for (i, (ins, g)) in circuit.instructions.iter().zip(&gates).enumerate() {
        let gate_index = i as u64 + 1;
        match (ins, g) {
            (_, Some(g)) => {
                g.apply_sampled_in_place(&mut e, &rng, gate_index)?;
                applied += 1;
            }
            (Instruction::Refresh(v), None) => {
                let ctx = RefreshContext {
                    n_target: Some(opts.rf2_target.unwrap_or(opts.n_ball)),
                    capacity: Some(opts.rf3_capacity.unwrap_or(2 * opts.n_ball).max(e.n_ball())),
                    roar: if opts.monte_carlo_roar {
                        RoarMode::MonteCarlo(rng.clone(), gate_index)
                    } else {
                        RoarMode::Deterministic
                    },
                };
                let (next, report) = refresh(&e, *v, &ctx)?;
                log::debug!("refresh {v} at instruction {i}: {} -> {}", report.n_before, report.n_after);
                e = next;
                reports.push(report);
            }
            _ => unreachable!("compile yields a gate for every gate instruction"),
        }
        if opts.trace {
            trace.push(e.effective_ball_count());
        }
    }
    let state = extract_state(&e)?;
    let phys = physical_distribution(&e)?;
    let physical_logical = logical_physical(&phys.probabilities, circuit.has_reim);
    let annihilated = state.one_norm() < 1.0 / e.n_ball() as f64;
    Ok(RunResult {
        engine: "sampled",
        n_logical: circuit.n_logical,
        n_grabits: circuit.n_grabits(),
        has_reim: circuit.has_reim,
        seed: Some(opts.seed),
        n_ball_initial: Some(opts.n_ball),
        n_ball_final: Some(e.n_ball()),
        gates_applied: applied,
        estimate: entries(circuit.n_grabits(), &state.amplitudes),
        physical: entries(circuit.n_logical, &physical_logical),
        peak_abs_estimate: state.argmax_abs(),
        peak_physical: crate::state::argmax(physical_logical.iter().map(|(&k, &v)| (k, v))),
        annihilated,
        effective_ball_trace: trace,
        refresh_reports: reports,
        state,
        physical_logical,
        ensemble: opts.keep_ensemble.then_some(e),
        wall_time: start.elapsed(),
    })
}

/// Exact propagation result: the probability vector before and after every
/// gate.
#[derive(Debug, Clone)]
pub struct ExactRun<W = f64> {
    pub n_logical: usize,
    pub has_reim: bool,
    pub trace: Vec<ProbVector<W>>,
    pub skipped_refreshes: usize,
}

impl<W: Weight> ExactRun<W> {
    pub fn final_vector(&self) -> &ProbVector<W> {
        self.trace.last().expect("trace holds the initial vector")
    }

    pub fn state(&self) -> GrabitStateEstimate<W> {
        exact_state(self.final_vector())
    }
}

impl ExactRun<f64> {
    pub fn to_result(&self, wall_time: Duration) -> RunResult {
        let p = self.final_vector();
        let state = exact_state(p);
        let physical_logical = logical_physical(&p.marginal(), self.has_reim);
        let n_grabits = p.n_grabits();
        RunResult {
            engine: "exact",
            n_logical: self.n_logical,
            n_grabits,
            has_reim: self.has_reim,
            seed: None,
            n_ball_initial: None,
            n_ball_final: None,
            gates_applied: self.trace.len() - 1,
            estimate: entries(n_grabits, &state.amplitudes),
            physical: entries(self.n_logical, &physical_logical),
            peak_abs_estimate: state.argmax_abs(),
            peak_physical: crate::state::argmax(physical_logical.iter().map(|(&k, &v)| (k, v))),
            annihilated: state.is_zero(),
            effective_ball_trace: Vec::new(),
            refresh_reports: Vec::new(),
            state,
            physical_logical,
            ensemble: None,
            wall_time,
        }
    }
}

/// Propagates the exact probability vector; REFRESH instructions and the
/// refresh policy are skipped.
pub fn run_exact_stochastic<W: Weight>(c: &Circuit, limit: usize) -> Result<ExactRun<W>> {
    if c.n_grabits() > limit {
        return Err(GrabitError::LimitExceeded { limit: "exact grabits", requested: c.n_grabits(), max: limit });
    }
    let gates = c.compile()?;
    let init = initial_vector(c)?;
    let mut p: ProbVector<W> =
        ProbVector::from_entries_unchecked(init.n_grabits(), init.iter().map(|(k, w)| (k, W::from_prob(*w))).collect());
    let mut trace = Vec::with_capacity(gates.len() + 1);
    let mut skipped = 0;
    for g in &gates {
        match g {
            Some(g) => {
                let next = g.apply_exact(&p)?;
                trace.push(std::mem::replace(&mut p, next));
            }
            None => skipped += 1,
        }
    }
    if skipped > 0 {
        log::warn!("exact engine skipped {skipped} refresh instruction(s)");
    }
    trace.push(p);
    Ok(ExactRun { n_logical: c.n_logical, has_reim: c.has_reim, trace, skipped_refreshes: skipped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::parse_circuit;

    #[test]
    fn empty_circuit_returns_input() {
        let c = parse_circuit("nbit 2\ninit basis 10").unwrap();
        let r = run_sampled(&c, &RunOptions::new(50, 1)).unwrap();
        assert_eq!(r.state.dense(), vec![0.0, 0.0, 1.0, 0.0]);
        let x = run_exact_stochastic::<f64>(&c, 10).unwrap();
        assert_eq!(x.state().dense(), vec![0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn exact_h_power_closed_form() {
        let mut text = String::from("nbit 1\n");
        for _ in 0..10 {
            text.push_str("H 0\n");
        }
        let x = run_exact_stochastic::<f64>(&parse_circuit(&text).unwrap(), 10).unwrap();
        let tail = 2f64.powi(-6);
        assert_eq!(x.final_vector().dense(), vec![0.25 + tail, 0.25 - tail, 0.25, 0.25]);
        assert_eq!(x.trace.len(), 11);
    }

    #[test]
    fn exact_limit_enforced() {
        let c = parse_circuit("nbit 11\nH 0").unwrap();
        assert!(matches!(run_exact_stochastic::<f64>(&c, 10), Err(GrabitError::LimitExceeded { .. })));
    }

    #[test]
    fn sampled_is_deterministic_across_workers() {
        let c = parse_circuit("nbit 3\npolicy after_interference rf1\nH 0\nH 1\nCNOT 0 2\nPHASE pi/4 2\nH 2\nH 0").unwrap();
        let mut o = RunOptions::new(20_000, 42);
        o.workers = Some(1);
        let a = run_sampled(&c, &o).unwrap().to_json();
        o.workers = Some(4);
        let b = run_sampled(&c, &o).unwrap().to_json();
        assert_eq!(a, b);
    }

    #[test]
    fn fourier_zero_is_plus_state() {
        let v = fourier_amplitudes(3, 0, false);
        assert!(v.iter().all(|z| (z.re - 8f64.sqrt().recip()).abs() < 1e-15 && z.im == 0.0));
    }
}
