//! Circuit representation, refresh scheduling, parsing and execution.

mod engine;
mod oracles;
mod parser;

pub use engine::{
    initial_amplitudes, initial_vector, run_exact_stochastic, run_sampled, AmplitudeEntry, ExactRun, RunOptions,
    RunResult, DEFAULT_EXACT_LIMIT,
};
pub use oracles::{builtin_oracle, OracleRegistry};
pub use parser::{parse_circuit, parse_circuit_with};

use crate::error::{GrabitError, Result};
use crate::gates::{build_gate, GateKind, Oracle, StochasticGate};
use crate::refresh::RefreshVariant;
use std::fmt::{self, Write as _};
use std::path::PathBuf;

/// Declared input state of a circuit.
#[derive(Debug, Clone, PartialEq)]
pub enum InitState {
    /// Computational basis state; bit 0 of the string is qubit 0.
    Basis(u64),
    /// `prod_j (|0> + e^{2 pi i k / 2^j} |1>)/sqrt 2` with qubit 0 carrying
    /// `j = 1`, or with the qubit order reversed.
    Fourier { k: u64, reversed: bool },
    /// Uniform superposition of `|0>, |p>, |2p>, ...`.
    Periodic(u64),
    /// Amplitudes loaded from a CSV state file `(index, re, im)`.
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefreshPolicy {
    None,
    AfterInterference,
    EndOnly,
    EveryK(usize),
}

impl fmt::Display for RefreshPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RefreshPolicy::None => f.write_str("none"),
            RefreshPolicy::AfterInterference => f.write_str("after_interference"),
            RefreshPolicy::EndOnly => f.write_str("end_only"),
            RefreshPolicy::EveryK(k) => write!(f, "every {k}"),
        }
    }
}

impl std::str::FromStr for RefreshPolicy {
    type Err = GrabitError;
    fn from_str(s: &str) -> Result<Self> {
        let t: Vec<&str> = s.split(|c: char| c == ' ' || c == '_' || c == ':' || c == '=').collect();
        match t.as_slice() {
            ["none"] => Ok(RefreshPolicy::None),
            ["after", "interference"] => Ok(RefreshPolicy::AfterInterference),
            ["end", "only"] => Ok(RefreshPolicy::EndOnly),
            ["every", k] | ["every", "k", k] => match k.parse::<usize>() {
                Ok(k) if k >= 1 => Ok(RefreshPolicy::EveryK(k)),
                _ => Err(GrabitError::InvalidInput(format!("bad refresh interval '{k}'"))),
            },
            _ => Err(GrabitError::InvalidInput(format!("unknown refresh policy '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Instruction {
    /// Gate on logical qubits; PHASE/CPHASE additionally act on the ReIm grabit.
    Gate { kind: GateKind, qubits: Vec<usize> },
    Refresh(RefreshVariant),
}

impl Instruction {
    pub fn gate(kind: GateKind, qubits: &[usize]) -> Self {
        Instruction::Gate { kind, qubits: qubits.to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub n_logical: usize,
    pub has_reim: bool,
    pub init: InitState,
    pub instructions: Vec<Instruction>,
    /// Applied by the sampled engine before execution.
    pub refresh_policy: RefreshPolicy,
    pub policy_variant: RefreshVariant,
}

impl Circuit {
    pub fn new(n_logical: usize) -> Self {
        Self {
            n_logical,
            has_reim: false,
            init: InitState::Basis(0),
            instructions: Vec::new(),
            refresh_policy: RefreshPolicy::None,
            policy_variant: RefreshVariant::Rf1,
        }
    }

    pub fn n_grabits(&self) -> usize {
        self.n_logical + self.has_reim as usize
    }

    pub fn reim_index(&self) -> Option<usize> {
        self.has_reim.then_some(self.n_logical)
    }

    /// Appends a gate, switching on the ReIm grabit when the gate needs it.
    pub fn push(&mut self, kind: GateKind, qubits: &[usize]) -> Result<&mut Self> {
        self.check_gate(&kind, qubits)?;
        if kind.needs_reim() {
            self.has_reim = true;
        }
        self.instructions.push(Instruction::gate(kind, qubits));
        Ok(self)
    }

    pub fn push_refresh(&mut self, v: RefreshVariant) -> &mut Self {
        self.instructions.push(Instruction::Refresh(v));
        self
    }

    pub fn with_init(mut self, init: InitState) -> Self {
        if matches!(init, InitState::Fourier { .. } | InitState::File(_)) {
            self.has_reim = true;
        }
        self.init = init;
        self
    }

    pub fn gate_count(&self) -> usize {
        self.instructions.iter().filter(|i| matches!(i, Instruction::Gate { .. })).count()
    }

    fn check_gate(&self, kind: &GateKind, qubits: &[usize]) -> Result<()> {
        let want = kind.arity() - kind.needs_reim() as usize;
        if qubits.len() != want {
            return Err(GrabitError::InvalidGate(format!(
                "{} takes {want} qubits, got {}",
                kind.mnemonic(),
                qubits.len()
            )));
        }
        for (i, &q) in qubits.iter().enumerate() {
            if q >= self.n_logical {
                return Err(GrabitError::InvalidGate(format!("target {q} out of range [0,{})", self.n_logical)));
            }
            if qubits[..i].contains(&q) {
                return Err(GrabitError::InvalidGate(format!("duplicate target {q}")));
            }
        }
        if let GateKind::Phase(phi) | GateKind::CPhase(phi) = kind {
            if !phi.is_finite() {
                return Err(GrabitError::InvalidGate(format!("non-finite angle {phi}")));
            }
        }
        Ok(())
    }

    /// Grabit targets of a gate instruction, ReIm appended where needed.
    pub fn grabit_targets(&self, kind: &GateKind, qubits: &[usize]) -> Vec<usize> {
        let mut t = qubits.to_vec();
        if kind.needs_reim() {
            t.push(self.n_logical);
        }
        t
    }

    /// Stochastic gates in instruction order (refreshes yield `None`).
    pub fn compile(&self) -> Result<Vec<Option<StochasticGate>>> {
        if self.n_grabits() > crate::byte4::MAX_GRABITS {
            return Err(GrabitError::TooManyGrabits(self.n_grabits()));
        }
        self.instructions
            .iter()
            .map(|ins| match ins {
                Instruction::Gate { kind, qubits } => {
                    if kind.needs_reim() && !self.has_reim {
                        return Err(GrabitError::InvalidGate(format!("{} needs the ReIm grabit", kind.mnemonic())));
                    }
                    build_gate(kind.clone(), &self.grabit_targets(kind, qubits)).map(Some)
                }
                Instruction::Refresh(_) => Ok(None),
            })
            .collect()
    }
}

/// Materializes a refresh policy as explicit REFRESH instructions. The
/// returned circuit carries policy `None`.
pub fn insert_refresh(c: &Circuit, policy: RefreshPolicy, variant: RefreshVariant) -> Result<Circuit> {
    let mut out = c.clone();
    out.refresh_policy = RefreshPolicy::None;
    out.instructions.clear();
    let compiled = c.compile()?;
    let mut gates_seen = 0usize;
    for (ins, g) in c.instructions.iter().zip(&compiled) {
        out.instructions.push(ins.clone());
        if let Some(g) = g {
            gates_seen += 1;
            let add = match policy {
                RefreshPolicy::AfterInterference => g.is_interference_generating(),
                RefreshPolicy::EveryK(k) => gates_seen % k == 0,
                _ => false,
            };
            if add {
                out.instructions.push(Instruction::Refresh(variant));
            }
        }
    }
    if policy == RefreshPolicy::EndOnly {
        out.instructions.push(Instruction::Refresh(variant));
    }
    Ok(out)
}

/// Shortest decimal that parses back to the same `f64`.
fn fmt_angle(phi: f64) -> String {
    format!("{phi:?}")
}

fn oracle_token(o: &Oracle) -> &str {
    o.name()
}

/// Prints a circuit in the textual format accepted by [`parse_circuit`].
pub fn print_circuit(c: &Circuit) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "nbit {}", c.n_logical);
    match &c.init {
        InitState::Basis(0) => {}
        InitState::Basis(bits) => {
            let _ = writeln!(s, "init basis {}", crate::byte4::blv_binary(*bits, c.n_logical));
        }
        InitState::Fourier { k, reversed } => {
            let _ = writeln!(s, "init fourier {k}{}", if *reversed { " rev" } else { "" });
        }
        InitState::Periodic(p) => {
            let _ = writeln!(s, "init periodic {p}");
        }
        InitState::File(p) => {
            let _ = writeln!(s, "init file {}", p.display());
        }
    }
    if c.has_reim && !needs_reim_implicitly(c) {
        let _ = writeln!(s, "reim");
    }
    if c.refresh_policy != RefreshPolicy::None || c.policy_variant != RefreshVariant::Rf1 {
        let _ = writeln!(s, "policy {} {}", c.refresh_policy, c.policy_variant);
    }
    for ins in &c.instructions {
        let line = match ins {
            Instruction::Refresh(v) => format!("REFRESH {v}"),
            Instruction::Gate { kind, qubits } => {
                let q = qubits.iter().map(|q| q.to_string()).collect::<Vec<_>>().join(" ");
                match kind {
                    GateKind::Phase(phi) | GateKind::CPhase(phi) => {
                        format!("{} {} {q}", kind.mnemonic(), fmt_angle(*phi))
                    }
                    GateKind::Oracle(o) => format!("ORACLE {} {q}", oracle_token(o)),
                    _ => format!("{} {q}", kind.mnemonic()),
                }
            }
        };
        s.push_str(&line);
        s.push('\n');
    }
    s
}

fn needs_reim_implicitly(c: &Circuit) -> bool {
    matches!(c.init, InitState::Fourier { .. } | InitState::File(_))
        || c.instructions.iter().any(|i| matches!(i, Instruction::Gate { kind, .. } if kind.needs_reim()))
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_circuit(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(c: &Circuit) -> Vec<String> {
        c.instructions
            .iter()
            .map(|i| match i {
                Instruction::Gate { kind, .. } => kind.mnemonic().to_string(),
                Instruction::Refresh(_) => "R".into(),
            })
            .collect()
    }

    #[test]
    fn refresh_insertion_policies() {
        let mut c = Circuit::new(2);
        c.push(GateKind::H, &[0]).unwrap();
        c.push(GateKind::Cnot, &[0, 1]).unwrap();
        c.push(GateKind::H, &[1]).unwrap();
        let after = insert_refresh(&c, RefreshPolicy::AfterInterference, RefreshVariant::Rf1).unwrap();
        assert_eq!(names(&after), ["H", "R", "CNOT", "H", "R"]);
        assert_eq!(insert_refresh(&c, RefreshPolicy::None, RefreshVariant::Rf1).unwrap(), c);
        let end = insert_refresh(&c, RefreshPolicy::EndOnly, RefreshVariant::Rf3).unwrap();
        assert_eq!(names(&end), ["H", "CNOT", "H", "R"]);

        let mut h4 = Circuit::new(1);
        for _ in 0..4 {
            h4.push(GateKind::H, &[0]).unwrap();
        }
        let every = insert_refresh(&h4, RefreshPolicy::EveryK(2), RefreshVariant::Rf1).unwrap();
        assert_eq!(names(&every), ["H", "H", "R", "H", "H", "R"]);
    }

    #[test]
    fn phase_switches_on_reim() {
        let mut c = Circuit::new(1);
        assert_eq!(c.n_grabits(), 1);
        c.push(GateKind::Phase(0.5), &[0]).unwrap();
        assert!(c.has_reim);
        assert_eq!(c.n_grabits(), 2);
        assert_eq!(c.compile().unwrap()[0].as_ref().unwrap().targets(), &[0, 1]);
        assert!(c.push(GateKind::Phase(f64::NAN), &[0]).is_err());
        assert!(c.push(GateKind::H, &[1]).is_err());
    }

    #[test]
    fn policy_strings() {
        for p in [RefreshPolicy::None, RefreshPolicy::AfterInterference, RefreshPolicy::EndOnly, RefreshPolicy::EveryK(3)] {
            assert_eq!(p.to_string().parse::<RefreshPolicy>().unwrap(), p);
        }
        assert!("every 0".parse::<RefreshPolicy>().is_err());
    }
}
