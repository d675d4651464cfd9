//! Quantum Fourier transform circuits.

use crate::circuit::{Circuit, InitState};
use crate::error::{GrabitError, Result};
use crate::gates::GateKind;
use std::f64::consts::PI;

/// QFT on `n` qubits (qubit 0 most significant): `H` on qubit `j` followed by
/// controlled `R_k`, `phi_k = 2 pi / 2^k`, from each later qubit, then the
/// reversing SWAP network when `with_swaps`. The inverse runs the gates
/// backwards with negated angles.
pub fn build_qft(n: usize, inverse: bool, with_swaps: bool) -> Result<Circuit> {
    if n == 0 {
        return Err(GrabitError::InvalidInput("QFT needs at least one qubit".into()));
    }
    let mut ops: Vec<(GateKind, Vec<usize>)> = Vec::new();
    for j in 0..n {
        ops.push((GateKind::H, vec![j]));
        for m in j + 1..n {
            let k = (m - j + 1) as i32;
            ops.push((GateKind::CPhase(2.0 * PI / 2f64.powi(k)), vec![m, j]));
        }
    }
    if with_swaps {
        for j in 0..n / 2 {
            ops.push((GateKind::Swap, vec![j, n - 1 - j]));
        }
    }
    if inverse {
        ops.reverse();
        for (kind, _) in &mut ops {
            if let GateKind::CPhase(phi) = kind {
                *phi = -*phi;
            }
        }
    }
    let mut c = Circuit::new(n);
    if n > 1 {
        c.has_reim = true;
    }
    for (kind, q) in ops {
        c.push(kind, &q)?;
    }
    Ok(c)
}

/// Initializer for `|k~> = prod_j (|0> + e^{2 pi i k/2^j}|1>)/sqrt 2`. The
/// reversed qubit order is the input the swap-free inverse QFT maps to `|k>`.
pub fn fourier_basis_state(n: usize, k: u64, reversed: bool) -> Result<InitState> {
    if n >= 64 || k >= 1u64 << n {
        return Err(GrabitError::InvalidInput(format!("wavenumber {k} out of range [0,2^{n})")));
    }
    Ok(InitState::Fourier { k, reversed })
}
