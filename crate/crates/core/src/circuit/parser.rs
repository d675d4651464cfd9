//! Line-oriented parser for `.gc` circuit files.

use super::{Circuit, InitState, Instruction, OracleRegistry, RefreshPolicy};
use crate::error::{GrabitError, Result};
use crate::gates::GateKind;
use crate::refresh::RefreshVariant;
use std::f64::consts::PI;
use std::path::PathBuf;

struct Tok<'a> {
    text: &'a str,
    col: usize,
}

struct Line<'a> {
    no: usize,
    toks: Vec<Tok<'a>>,
    raw: &'a str,
}

impl Line<'_> {
    fn err(&self, col: usize, msg: impl Into<String>) -> GrabitError {
        GrabitError::Parse { line: self.no, column: col, message: msg.into() }
    }

    fn end_col(&self) -> usize {
        self.toks.last().map(|t| t.col + t.text.chars().count()).unwrap_or(1)
    }

    fn arg(&self, i: usize, what: &str) -> Result<&Tok<'_>> {
        self.toks.get(i).ok_or_else(|| self.err(self.end_col(), format!("missing {what}")))
    }

    fn expect_len(&self, n: usize) -> Result<()> {
        match self.toks.get(n) {
            Some(t) => Err(self.err(t.col, format!("unexpected token '{}'", t.text))),
            None if self.toks.len() < n => Err(self.err(self.end_col(), "too few arguments")),
            None => Ok(()),
        }
    }
}

fn tokenize(no: usize, raw: &str) -> Line<'_> {
    let body = raw.split('#').next().unwrap_or("");
    let mut toks = Vec::new();
    let mut start = None;
    for (ci, (bi, ch)) in body.char_indices().enumerate() {
        match (ch.is_whitespace(), start) {
            (false, None) => start = Some((bi, ci)),
            (true, Some((b0, c0))) => {
                toks.push(Tok { text: &body[b0..bi], col: c0 + 1 });
                start = None;
            }
            _ => {}
        }
    }
    if let Some((b0, c0)) = start {
        toks.push(Tok { text: &body[b0..], col: c0 + 1 });
    }
    Line { no, toks, raw: body }
}

/// Parses a radian value: a float literal or `[k*]pi[/d]` with optional sign.
pub(crate) fn parse_angle(s: &str) -> Option<f64> {
    if let Ok(v) = s.parse::<f64>() {
        return Some(v);
    }
    let lower = s.to_ascii_lowercase();
    let (neg, body) = match lower.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, lower.as_str()),
    };
    let (num, den) = match body.split_once('/') {
        Some((n, d)) => (n, d.parse::<f64>().ok()?),
        None => (body, 1.0),
    };
    let factor = match num.strip_suffix("pi")? {
        "" => 1.0,
        k => k.strip_suffix('*').unwrap_or(k).parse::<f64>().ok()?,
    };
    let v = factor * PI / den;
    Some(if neg { -v } else { v })
}

pub fn parse_circuit(text: &str) -> Result<Circuit> {
    parse_circuit_with(text, &OracleRegistry::new())
}

pub fn parse_circuit_with(text: &str, oracles: &OracleRegistry) -> Result<Circuit> {
    let mut circuit: Option<Circuit> = None;
    let mut explicit_reim = false;
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = tokenize(i + 1, raw);
        last_line = i + 1;
        let Some(head) = line.toks.first() else { continue };
        let word = head.text.to_ascii_uppercase();
        if word == "NBIT" {
            if circuit.is_some() {
                return Err(line.err(head.col, "duplicate nbit"));
            }
            let t = line.arg(1, "qubit count")?;
            let n: usize = t.text.parse().map_err(|_| line.err(t.col, format!("bad qubit count '{}'", t.text)))?;
            if n == 0 || n > crate::byte4::MAX_GRABITS {
                return Err(line.err(t.col, format!("qubit count {n} outside [1,{}]", crate::byte4::MAX_GRABITS)));
            }
            line.expect_len(2)?;
            circuit = Some(Circuit::new(n));
            continue;
        }
        let Some(c) = circuit.as_mut() else {
            return Err(line.err(head.col, "expected 'nbit' before other directives"));
        };
        match word.as_str() {
            "INIT" => parse_init(&line, c)?,
            "REIM" => {
                line.expect_len(1)?;
                explicit_reim = true;
            }
            "POLICY" => {
                let v = line.arg(line.toks.len().max(2) - 1, "refresh variant")?;
                if line.toks.len() < 3 {
                    return Err(line.err(line.end_col(), "expected 'policy <policy> <variant>'"));
                }
                let variant: RefreshVariant = v.text.parse().map_err(|e: GrabitError| line.err(v.col, e.to_string()))?;
                let words: Vec<&str> = line.toks[1..line.toks.len() - 1].iter().map(|t| t.text).collect();
                let policy: RefreshPolicy =
                    words.join(" ").parse().map_err(|e: GrabitError| line.err(line.toks[1].col, e.to_string()))?;
                c.refresh_policy = policy;
                c.policy_variant = variant;
            }
            "REFRESH" => {
                let v = line.arg(1, "refresh variant")?;
                let variant: RefreshVariant = v.text.parse().map_err(|e: GrabitError| line.err(v.col, e.to_string()))?;
                line.expect_len(2)?;
                c.push_refresh(variant);
            }
            _ => parse_gate(&line, &word, c, oracles)?,
        }
    }
    let mut c = circuit.ok_or(GrabitError::Parse {
        line: last_line.max(1),
        column: 1,
        message: "missing 'nbit' directive".into(),
    })?;
    c.has_reim |= explicit_reim;
    if c.n_grabits() > crate::byte4::MAX_GRABITS {
        return Err(GrabitError::TooManyGrabits(c.n_grabits()));
    }
    Ok(c)
}

fn parse_init(line: &Line<'_>, c: &mut Circuit) -> Result<()> {
    let kind = line.arg(1, "init kind")?;
    let init = match kind.text.to_ascii_lowercase().as_str() {
        "basis" => {
            let t = line.arg(2, "bitstring")?;
            if t.text.len() != c.n_logical || !t.text.chars().all(|ch| ch == '0' || ch == '1') {
                return Err(line.err(t.col, format!("expected a {}-bit string, got '{}'", c.n_logical, t.text)));
            }
            line.expect_len(3)?;
            InitState::Basis(u64::from_str_radix(t.text, 2).expect("validated bits"))
        }
        "fourier" => {
            let t = line.arg(2, "wavenumber")?;
            let k: u64 = t.text.parse().map_err(|_| line.err(t.col, format!("bad wavenumber '{}'", t.text)))?;
            if c.n_logical >= 64 || k >= 1u64 << c.n_logical {
                return Err(line.err(t.col, format!("wavenumber {k} out of range [0,2^{})", c.n_logical)));
            }
            let reversed = match line.toks.get(3) {
                None => false,
                Some(r) if r.text == "rev" => true,
                Some(r) => return Err(line.err(r.col, format!("unexpected token '{}'", r.text))),
            };
            line.expect_len(3 + reversed as usize)?;
            InitState::Fourier { k, reversed }
        }
        "periodic" => {
            let t = line.arg(2, "period")?;
            let p: u64 = t.text.parse().map_err(|_| line.err(t.col, format!("bad period '{}'", t.text)))?;
            if p == 0 || c.n_logical >= 64 || p >= 1u64 << c.n_logical {
                return Err(line.err(t.col, format!("period {p} out of range [1,2^{})", c.n_logical)));
            }
            line.expect_len(3)?;
            InitState::Periodic(p)
        }
        "file" => {
            let t = line.arg(2, "path")?;
            let start = line.raw.char_indices().nth(t.col - 1).map(|(b, _)| b).unwrap_or(0);
            InitState::File(PathBuf::from(line.raw[start..].trim()))
        }
        other => return Err(line.err(kind.col, format!("unknown init kind '{other}'"))),
    };
    *c = std::mem::replace(c, Circuit::new(1)).with_init(init);
    Ok(())
}

fn parse_qubits(line: &Line<'_>, from: usize, n_logical: usize) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for t in &line.toks[from.min(line.toks.len())..] {
        let q: usize = t.text.parse().map_err(|_| line.err(t.col, format!("bad qubit index '{}'", t.text)))?;
        if q >= n_logical {
            return Err(line.err(t.col, format!("target {q} out of range [0,{n_logical})")));
        }
        if out.contains(&q) {
            return Err(line.err(t.col, format!("duplicate target {q}")));
        }
        out.push(q);
    }
    Ok(out)
}

fn parse_gate(line: &Line<'_>, word: &str, c: &mut Circuit, oracles: &OracleRegistry) -> Result<()> {
    let head = &line.toks[0];
    let (kind, first_qubit) = match word {
        "X" => (GateKind::X, 1),
        "Z" => (GateKind::Z, 1),
        "H" => (GateKind::H, 1),
        "CNOT" | "CX" => (GateKind::Cnot, 1),
        "SWAP" => (GateKind::Swap, 1),
        "PHASE" | "CPHASE" => {
            let t = line.arg(1, "angle")?;
            let phi = parse_angle(t.text).ok_or_else(|| line.err(t.col, format!("bad angle '{}'", t.text)))?;
            if !phi.is_finite() {
                return Err(line.err(t.col, format!("non-finite angle {phi}")));
            }
            (if word == "PHASE" { GateKind::Phase(phi) } else { GateKind::CPhase(phi) }, 2)
        }
        "ORACLE" => {
            let name = line.arg(1, "oracle name")?;
            let qubits = parse_qubits(line, 2, c.n_logical)?;
            if qubits.len() < 2 {
                return Err(line.err(line.end_col(), "ORACLE needs at least one input and an output qubit"));
            }
            let o = oracles.resolve(name.text, qubits.len() - 1).map_err(|e| line.err(name.col, e.to_string()))?;
            c.instructions.push(Instruction::Gate { kind: GateKind::Oracle(o), qubits });
            return Ok(());
        }
        _ => return Err(line.err(head.col, format!("unknown mnemonic '{}'", head.text))),
    };
    let qubits = parse_qubits(line, first_qubit, c.n_logical)?;
    let want = kind.arity() - kind.needs_reim() as usize;
    if qubits.len() != want {
        return Err(line.err(
            head.col,
            format!("{} takes {want} qubit(s), got {}", kind.mnemonic(), qubits.len()),
        ));
    }
    c.push(kind, &qubits).map_err(|e| line.err(head.col, e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::print_circuit;
    use super::*;

    #[test]
    fn spec_examples() {
        let c = parse_circuit("nbit 2\nH 0\nCNOT 0 1").unwrap();
        assert_eq!((c.n_logical, c.has_reim, c.instructions.len()), (2, false, 2));
        let c = parse_circuit("nbit 1\nPHASE 0.7853981633974483 0").unwrap();
        assert!(c.has_reim);
        assert_eq!(c.n_grabits(), 2);
        let e = parse_circuit("nbit 2\nH 7").unwrap_err();
        match e {
            GrabitError::Parse { line, column, message } => {
                assert_eq!((line, column), (2, 3));
                assert_eq!(message, "target 7 out of range [0,2)");
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn diagnostics_carry_location() {
        let cases = [
            ("nbit 2\n  FOO 1", 2, 3),
            ("nbit 2\nCNOT 0", 2, 1),
            ("nbit 2\nPHASE abc 0", 2, 7),
            ("nbit 2\nPHASE inf 0", 2, 7),
            ("H 0", 1, 1),
            ("nbit 2\nREFRESH rf9", 2, 9),
            ("nbit 2\nORACLE nope 0 1", 2, 8),
            ("nbit 2\nH 0 # fine\nX 0 0", 3, 5),
        ];
        for (text, l, col) in cases {
            match parse_circuit(text) {
                Err(GrabitError::Parse { line, column, .. }) => assert_eq!((line, column), (l, col), "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn angles() {
        assert_eq!(parse_angle("pi/4"), Some(PI / 4.0));
        assert_eq!(parse_angle("-pi"), Some(-PI));
        assert_eq!(parse_angle("3*pi/8"), Some(3.0 * PI / 8.0));
        assert_eq!(parse_angle("0.5"), Some(0.5));
        assert_eq!(parse_angle("pie"), None);
    }

    #[test]
    fn round_trip_full_language() {
        let text = "nbit 3\ninit fourier 5 rev\npolicy every 2 rf3\n# comment\nH 0\nX 1\nZ 2\nCNOT 0 2\nSWAP 1 2\n\
                    PHASE -1.25 1\nCPHASE pi/8 0 2\nORACLE bv01 0 1 2\nORACLE tt0110 1 2 0\nREFRESH rf2\n";
        let c = parse_circuit(text).unwrap();
        assert_eq!(c.refresh_policy, RefreshPolicy::EveryK(2));
        assert_eq!(parse_circuit(&print_circuit(&c)).unwrap(), c);
        let p = parse_circuit("nbit 5\ninit periodic 4\nreim\nH 0").unwrap();
        assert_eq!(parse_circuit(&print_circuit(&p)).unwrap(), p);
        let b = parse_circuit("nbit 3\ninit basis 101\nreim\nH 0").unwrap();
        assert_eq!(b.init, InitState::Basis(0b101));
        assert!(b.has_reim);
        assert_eq!(parse_circuit(&print_circuit(&b)).unwrap(), b);
    }
}
