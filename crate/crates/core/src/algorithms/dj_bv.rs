//! Deutsch-Jozsa and Bernstein-Vazirani circuits.

use crate::circuit::{Circuit, InitState};
use crate::error::{GrabitError, Result};
use crate::gates::{GateKind, Oracle};

/// `n` input qubits plus an ancilla (qubit `n`) prepared in `|0...0>|1>`,
/// Hadamards on all, the oracle, Hadamards on the inputs and optionally on
/// the ancilla. All gates are real, so no ReIm grabit is used.
pub fn build_dj_bv(n: usize, oracle: Oracle, final_hadamard_on_ancilla: bool) -> Result<Circuit> {
    if n == 0 {
        return Err(GrabitError::InvalidInput("need at least one input qubit".into()));
    }
    if oracle.n_inputs() != n {
        return Err(GrabitError::InvalidGate(format!("oracle takes {} inputs, circuit has {n}", oracle.n_inputs())));
    }
    let mut c = Circuit::new(n + 1).with_init(InitState::Basis(1));
    for q in 0..=n {
        c.push(GateKind::H, &[q])?;
    }
    let targets: Vec<usize> = (0..=n).collect();
    c.push(GateKind::Oracle(oracle), &targets)?;
    for q in 0..n {
        c.push(GateKind::H, &[q])?;
    }
    if final_hadamard_on_ancilla {
        c.push(GateKind::H, &[n])?;
    }
    Ok(c)
}

/// Bernstein-Vazirani for the hidden string `a` (first input most
/// significant) with the final ancilla Hadamard, so the output peak sits at
/// blv `2a + 1`.
pub fn build_bv(n: usize, a: u64) -> Result<Circuit> {
    if n == 0 || n > 24 || a >> n != 0 {
        return Err(GrabitError::InvalidInput(format!("hidden string {a} does not fit {n} bits")));
    }
    let name = format!("bv{}", crate::byte4::blv_binary(a, n));
    let oracle = Oracle::new(name, n, move |x| (a & x).count_ones() % 2 == 1)?;
    build_dj_bv(n, oracle, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{print_circuit, run_exact_stochastic};
    use crate::prob::ProbVector;
    use num_bigint::BigInt;
    use num_rational::BigRational;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn dj_identity_exact_rational() {
        let o = Oracle::new("identity", 1, |x| x == 1).unwrap();
        let c = build_dj_bv(1, o, false).unwrap();
        let run = run_exact_stochastic::<BigRational>(&c, 10).unwrap();
        let psi = run.state();
        assert_eq!(psi.get(0b00), r(0, 1));
        assert_eq!(psi.get(0b01), r(0, 1));
        assert_eq!(psi.get(0b10), r(1, 4));
        assert_eq!(psi.get(0b11), r(-1, 4));
        // after the oracle: uniform on joint b4vs (0,0),(0,3),(2,2),(2,1)
        let after_oracle: &ProbVector<BigRational> = &run.trace[3];
        let support: Vec<u64> = after_oracle.iter().map(|(k, _)| k).collect();
        assert_eq!(support, vec![0b0000, 0b0011, 0b1001, 0b1010]);
        assert!(after_oracle.iter().all(|(_, w)| *w == r(1, 4)));
    }

    #[test]
    fn bv_peak() {
        let c = build_bv(2, 0b01).unwrap();
        let run = run_exact_stochastic::<f64>(&c, 10).unwrap();
        assert_eq!(run.state().argmax_abs(), Some(0b011));
        assert!(print_circuit(&c).contains("ORACLE bv01 0 1 2"));
        assert!(build_bv(2, 4).is_err());
    }
}
