//! Dense statevector reference: complex unitary propagation and the
//! realified real-vector route.

use crate::circuit::{initial_amplitudes, Circuit, Instruction};
use crate::error::{GrabitError, Result};
use crate::gates::{normalize_angle, GateKind};
use crate::state::{complexify, realify};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::FRAC_1_SQRT_2;
use std::io::{Read, Write};

/// Largest qubit count for dense simulation.
pub const DENSE_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    pub n_qubits: usize,
    pub amplitudes: Vec<Complex64>,
}

impl QuantumState {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let n = amplitudes.len().trailing_zeros() as usize;
        if amplitudes.len() != 1usize << n {
            return Err(GrabitError::Dimension { expected: 1 << n, got: amplitudes.len() });
        }
        Ok(Self { n_qubits: n, amplitudes })
    }

    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let mut a = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        a[index] = Complex64::new(1.0, 0.0);
        Self { n_qubits, amplitudes: a }
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Squared moduli `|Psi_i|^2`.
    pub fn born2(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "re", "im"])?;
        for (i, z) in self.amplitudes.iter().enumerate() {
            w.write_record([i.to_string(), format!("{:?}", z.re), format!("{:?}", z.im)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rows = Vec::new();
        for rec in csv::Reader::from_reader(input).deserialize::<(usize, f64, f64)>() {
            rows.push(rec?);
        }
        let dim = rows.iter().map(|r| r.0 + 1).max().unwrap_or(0).next_power_of_two();
        let mut a = vec![Complex64::new(0.0, 0.0); dim.max(1)];
        for (i, re, im) in rows {
            a[i] = Complex64::new(re, im);
        }
        Self::new(a)
    }
}

/// Bit mask of qubit `q` in an `n`-qubit index (qubit 0 most significant).
#[inline]
fn mask(q: usize, n: usize) -> usize {
    1 << (n - 1 - q)
}

/// Applies one gate's unitary to `psi` over `n` qubits.
pub fn apply_unitary(kind: &GateKind, qubits: &[usize], psi: &mut [Complex64], n: usize) {
    let dim = psi.len();
    match kind {
        GateKind::X | GateKind::Z | GateKind::H => {
            let m = mask(qubits[0], n);
            for i in (0..dim).filter(|i| i & m == 0) {
                let (a, b) = (psi[i], psi[i | m]);
                match kind {
                    GateKind::X => {
                        psi[i] = b;
                        psi[i | m] = a;
                    }
                    GateKind::Z => psi[i | m] = -b,
                    _ => {
                        psi[i] = (a + b) * FRAC_1_SQRT_2;
                        psi[i | m] = (a - b) * FRAC_1_SQRT_2;
                    }
                }
            }
        }
        GateKind::Cnot => {
            let (mc, mt) = (mask(qubits[0], n), mask(qubits[1], n));
            for i in (0..dim).filter(|i| i & mc != 0 && i & mt == 0) {
                psi.swap(i, i | mt);
            }
        }
        GateKind::Swap => {
            let (ma, mb) = (mask(qubits[0], n), mask(qubits[1], n));
            for i in (0..dim).filter(|i| i & ma != 0 && i & mb == 0) {
                psi.swap(i, (i & !ma) | mb);
            }
        }
        GateKind::Phase(phi) | GateKind::CPhase(phi) => {
            let m: usize = qubits.iter().map(|&q| mask(q, n)).sum();
            let ph = Complex64::from_polar(1.0, normalize_angle(*phi));
            for (i, z) in psi.iter_mut().enumerate() {
                if i & m == m {
                    *z *= ph;
                }
            }
        }
        GateKind::Oracle(o) => {
            let (inputs, out) = qubits.split_at(qubits.len() - 1);
            let mo = mask(out[0], n);
            for i in (0..dim).filter(|i| i & mo == 0) {
                let x = inputs.iter().fold(0u64, |acc, &q| (acc << 1) | ((i & mask(q, n)) != 0) as u64);
                if o.eval(x) {
                    psi.swap(i, i | mo);
                }
            }
        }
    }
}

/// Applies the realified gate to a real vector over `n` grabits. `grabits`
/// are the gate's stochastic targets (ReIm last for PHASE/CPHASE), so this is
/// the linear map the stochastic gate emulates up to its scale factor.
pub fn apply_realified(kind: &GateKind, grabits: &[usize], phi: &mut [f64], n: usize) {
    match kind {
        GateKind::Phase(a) | GateKind::CPhase(a) => {
            let (controls, reim) = grabits.split_at(grabits.len() - 1);
            let m: usize = controls.iter().map(|&q| mask(q, n)).sum();
            let mr = mask(reim[0], n);
            let a = normalize_angle(*a);
            let (c, s) = (a.cos(), a.sin());
            for i in (0..phi.len()).filter(|i| i & m == m && i & mr == 0) {
                let (re, im) = (phi[i], phi[i | mr]);
                phi[i] = c * re - s * im;
                phi[i | mr] = s * re + c * im;
            }
        }
        _ => {
            let dim = phi.len();
            let mut z: Vec<Complex64> = phi.iter().map(|&x| Complex64::new(x, 0.0)).collect();
            apply_unitary(kind, grabits, &mut z, n);
            debug_assert_eq!(z.len(), dim);
            for (p, z) in phi.iter_mut().zip(z) {
                *p = z.re;
            }
        }
    }
}

/// `U Psi_0` with REFRESH instructions ignored.
pub fn run_unitary(c: &Circuit, psi0: Option<&[Complex64]>) -> Result<QuantumState> {
    if c.n_logical > DENSE_LIMIT {
        return Err(GrabitError::LimitExceeded { limit: "dense qubits", requested: c.n_logical, max: DENSE_LIMIT });
    }
    let mut psi = match psi0 {
        Some(p) => p.to_vec(),
        None => initial_amplitudes(c)?,
    };
    if psi.len() != 1 << c.n_logical {
        return Err(GrabitError::Dimension { expected: 1 << c.n_logical, got: psi.len() });
    }
    for ins in &c.instructions {
        if let Instruction::Gate { kind, qubits } = ins {
            apply_unitary(kind, qubits, &mut psi, c.n_logical);
        }
    }
    QuantumState::new(psi)
}

/// Real-vector propagation over all `N_bit` grabits of the circuit. Without a
/// ReIm grabit the input must be real and the vector has `2^n` entries.
pub fn realified_propagate(c: &Circuit, phi0: Option<&[f64]>) -> Result<Vec<f64>> {
    let n = c.n_grabits();
    if n > DENSE_LIMIT + 1 {
        return Err(GrabitError::LimitExceeded { limit: "dense grabits", requested: n, max: DENSE_LIMIT + 1 });
    }
    let mut phi = match phi0 {
        Some(p) => p.to_vec(),
        None => {
            let psi = initial_amplitudes(c)?;
            if c.has_reim {
                realify(&psi).components
            } else {
                psi.iter().map(|z| z.re).collect()
            }
        }
    };
    if phi.len() != 1 << n {
        return Err(GrabitError::Dimension { expected: 1 << n, got: phi.len() });
    }
    for ins in &c.instructions {
        if let Instruction::Gate { kind, qubits } = ins {
            apply_realified(kind, &c.grabit_targets(kind, qubits), &mut phi, n);
        }
    }
    Ok(phi)
}

/// Realified output computed through the complex route.
pub fn realified_reference(c: &Circuit) -> Result<Vec<f64>> {
    let psi = run_unitary(c, None)?;
    Ok(if c.has_reim { realify(&psi.amplitudes).components } else { psi.amplitudes.iter().map(|z| z.re).collect() })
}

/// Complex amplitudes of a realified vector.
pub fn complex_of(phi: &[f64]) -> Result<Vec<Complex64>> {
    complexify(phi)
}

/// Full unitary matrix (`m[row][col]`) built column by column.
pub fn unitary_matrix(c: &Circuit) -> Result<Vec<Vec<Complex64>>> {
    let dim = 1usize << c.n_logical;
    let mut m = vec![vec![Complex64::new(0.0, 0.0); dim]; dim];
    for col in 0..dim {
        let out = run_unitary(c, Some(&QuantumState::basis(c.n_logical, col).amplitudes))?;
        for (row, z) in out.amplitudes.into_iter().enumerate() {
            m[row][col] = z;
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Comparison {
    pub cosine: f64,
    pub sign: i8,
    pub l2_after_normalization: f64,
}

/// Cosine similarity and the sign-aligned distance of the 2-normalized
/// vectors.
pub fn compare_up_to_scale(a: &[f64], b: &[f64]) -> Result<Comparison> {
    if a.len() != b.len() {
        return Err(GrabitError::Dimension { expected: b.len(), got: a.len() });
    }
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(GrabitError::NullState);
    }
    let cosine = a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (na * nb);
    let sign: i8 = if cosine < 0.0 { -1 } else { 1 };
    let l2 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x / na - sign as f64 * y / nb).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(Comparison { cosine, sign, l2_after_normalization: l2 })
}
