//! Grabit state estimates, physical distributions, encodings and realification.

use crate::byte4::{self, check_width};
use crate::ensemble::RealizationEnsemble;
use crate::error::{GrabitError, Result};
use crate::prob::{ProbVector, Weight};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;

/// Signed amplitude per blv, stored over the realized support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrabitStateEstimate<W = f64> {
    pub n_grabits: usize,
    pub amplitudes: BTreeMap<u64, W>,
}

impl<W: Weight> GrabitStateEstimate<W> {
    pub fn get(&self, blv: u64) -> W {
        self.amplitudes.get(&blv).cloned().unwrap_or_else(W::zero)
    }
}

impl GrabitStateEstimate<f64> {
    pub fn dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; 1usize << self.n_grabits];
        for (&k, &a) in &self.amplitudes {
            v[k as usize] = a;
        }
        v
    }

    pub fn one_norm(&self) -> f64 {
        self.amplitudes.values().map(|a| a.abs()).sum()
    }

    pub fn two_norm(&self) -> f64 {
        self.amplitudes.values().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.amplitudes.values().all(|&a| a == 0.0)
    }

    /// Blv with the largest absolute amplitude; ties go to the smaller index.
    pub fn argmax_abs(&self) -> Option<u64> {
        argmax(self.amplitudes.iter().map(|(&k, &a)| (k, a.abs())))
    }

    pub fn write_csv<Wr: Write>(&self, out: Wr) -> Result<()> {
        write_blv_csv(out, self.n_grabits, self.amplitudes.iter().map(|(&k, &v)| (k, v)))
    }
}

/// Probability of each blv with the gradient marginalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalDistribution {
    pub n_grabits: usize,
    pub probabilities: BTreeMap<u64, f64>,
}

impl PhysicalDistribution {
    pub fn get(&self, blv: u64) -> f64 {
        self.probabilities.get(&blv).copied().unwrap_or(0.0)
    }

    pub fn dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; 1usize << self.n_grabits];
        for (&k, &p) in &self.probabilities {
            v[k as usize] = p;
        }
        v
    }

    pub fn argmax(&self) -> Option<u64> {
        argmax(self.probabilities.iter().map(|(&k, &p)| (k, p)))
    }

    pub fn write_csv<Wr: Write>(&self, out: Wr) -> Result<()> {
        write_blv_csv(out, self.n_grabits, self.probabilities.iter().map(|(&k, &v)| (k, v)))
    }
}

pub(crate) fn argmax(values: impl Iterator<Item = (u64, f64)>) -> Option<u64> {
    let mut best: Option<(u64, f64)> = None;
    for (k, v) in values {
        match best {
            Some((_, bv)) if v <= bv => {}
            _ => best = Some((k, v)),
        }
    }
    best.map(|(k, _)| k)
}

fn write_blv_csv<Wr: Write>(out: Wr, n: usize, rows: impl Iterator<Item = (u64, f64)>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["blv_integer", "blv_binary", "value"])?;
    for (k, v) in rows {
        w.write_record([k.to_string(), byte4::blv_binary(k, n), format!("{v:?}")])?;
    }
    w.flush()?;
    Ok(())
}

/// Anything a grabit state can be read from.
pub trait GrabitSource {
    fn extract_state(&self) -> Result<GrabitStateEstimate<f64>>;
    fn physical_distribution(&self) -> Result<PhysicalDistribution>;
}

impl GrabitSource for RealizationEnsemble {
    fn extract_state(&self) -> Result<GrabitStateEstimate<f64>> {
        let n = self.n_ball() as u64;
        let amplitudes = signed_counts(self).into_iter().map(|(k, s)| (k, s as f64 / n as f64)).collect();
        Ok(GrabitStateEstimate { n_grabits: self.n_grabits(), amplitudes })
    }

    fn physical_distribution(&self) -> Result<PhysicalDistribution> {
        let n = self.n_ball() as f64;
        let probabilities = self
            .parity_counts()
            .into_iter()
            .map(|(k, c)| (k, c.total() as f64 / n))
            .collect();
        Ok(PhysicalDistribution { n_grabits: self.n_grabits(), probabilities })
    }
}

impl GrabitSource for ProbVector<f64> {
    fn extract_state(&self) -> Result<GrabitStateEstimate<f64>> {
        Ok(exact_state(self))
    }

    fn physical_distribution(&self) -> Result<PhysicalDistribution> {
        Ok(PhysicalDistribution { n_grabits: self.n_grabits(), probabilities: self.marginal() })
    }
}

pub fn extract_state<S: GrabitSource + ?Sized>(source: &S) -> Result<GrabitStateEstimate<f64>> {
    source.extract_state()
}

pub fn physical_distribution<S: GrabitSource + ?Sized>(source: &S) -> Result<PhysicalDistribution> {
    source.physical_distribution()
}

/// Exact state of a probability vector in its own scalar type.
pub fn exact_state<W: Weight>(p: &ProbVector<W>) -> GrabitStateEstimate<W> {
    GrabitStateEstimate { n_grabits: p.n_grabits(), amplitudes: p.signed_amplitudes() }
}

/// Signed integer counts `n_even - n_odd` per realized blv.
pub fn signed_counts(e: &RealizationEnsemble) -> BTreeMap<u64, i64> {
    e.parity_counts().into_iter().map(|(k, c)| (k, c.signed())).collect()
}

/// Gauge used when placing amplitudes onto b4vs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gauge {
    Trivial,
    MaxContrast,
}

/// Interference-free encoding of a real amplitude vector over `n_grabits`
/// grabits: `|phi_i| / ||phi||_1` sits on the sign-concentrated b4v of `i`.
/// Both gauges coincide for this construction.
pub fn encode_state(phi: &[f64], gauge: Gauge) -> Result<ProbVector<f64>> {
    let _ = gauge;
    let n_grabits = phi.len().trailing_zeros() as usize;
    if phi.len() != 1usize << n_grabits {
        return Err(GrabitError::Dimension { expected: 1 << n_grabits, got: phi.len() });
    }
    check_width(n_grabits)?;
    if phi.iter().any(|a| !a.is_finite()) {
        return Err(GrabitError::InvalidInput("non-finite amplitude".into()));
    }
    let norm: f64 = phi.iter().map(|a| a.abs()).sum();
    if norm == 0.0 {
        return Err(GrabitError::NullState);
    }
    let entries = phi
        .iter()
        .enumerate()
        .filter(|(_, &a)| a != 0.0)
        .map(|(i, &a)| (byte4::canonical(i as u64, a < 0.0), a.abs() / norm))
        .collect();
    Ok(ProbVector::from_entries_unchecked(n_grabits, entries))
}

/// Real vector of doubled dimension holding `(Re psi_i, Im psi_i)` with the
/// ReIm index least significant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealifiedState {
    pub n_qubits: usize,
    pub components: Vec<f64>,
}

impl RealifiedState {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        let n_grabits = components.len().trailing_zeros() as usize;
        if components.len() < 2 || components.len() != 1usize << n_grabits {
            return Err(GrabitError::Dimension { expected: 1 << n_grabits.max(1), got: components.len() });
        }
        Ok(Self { n_qubits: n_grabits - 1, components })
    }

    pub fn n_grabits(&self) -> usize {
        self.n_qubits + 1
    }

    pub fn encode(&self, gauge: Gauge) -> Result<ProbVector<f64>> {
        encode_state(&self.components, gauge)
    }
}

pub fn realify(psi: &[Complex64]) -> RealifiedState {
    let components = psi.iter().flat_map(|z| [z.re, z.im]).collect();
    RealifiedState { n_qubits: psi.len().trailing_zeros() as usize, components }
}

pub fn complexify(phi: &[f64]) -> Result<Vec<Complex64>> {
    if phi.len() % 2 != 0 {
        return Err(GrabitError::Dimension { expected: phi.len() + 1, got: phi.len() });
    }
    Ok(phi.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pv(d: &[f64]) -> ProbVector<f64> {
        ProbVector::from_dense(d.len().trailing_zeros() as usize / 2, d).unwrap()
    }

    #[test]
    fn extract_single_grabit_examples() {
        let s = extract_state(&pv(&[0.5, 0.2, 0.05, 0.25])).unwrap().dense();
        assert!((s[0] - 0.3).abs() < 1e-15 && (s[1] + 0.2).abs() < 1e-15);
        assert_eq!(extract_state(&pv(&[1.0, 0.0, 0.0, 0.0])).unwrap().dense(), vec![1.0, 0.0]);
        assert_eq!(extract_state(&pv(&[0.5, 0.5, 0.0, 0.0])).unwrap().dense(), vec![0.0, 0.0]);
    }

    #[test]
    fn bell_encoding() {
        let mut d = vec![0.0; 16];
        d[0] = 0.5; // (0,0)
        d[10] = 0.5; // (2,2)
        let p = pv(&d);
        assert_eq!(extract_state(&p).unwrap().dense(), vec![0.5, 0.0, 0.0, 0.5]);
        assert_eq!(physical_distribution(&p).unwrap().dense(), vec![0.5, 0.0, 0.0, 0.5]);
    }

    #[test]
    fn physical_marginal() {
        let p = physical_distribution(&pv(&[0.5, 0.2, 0.05, 0.25])).unwrap().dense();
        assert!((p[0] - 0.7).abs() < 1e-15 && (p[1] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn encode_examples() {
        assert_eq!(encode_state(&[0.5, -0.5], Gauge::Trivial).unwrap().dense(), vec![0.5, 0.0, 0.0, 0.5]);
        let q = 3.0;
        let p = encode_state(&[q, 1.0], Gauge::MaxContrast).unwrap().dense();
        assert_eq!(p, vec![q / (1.0 + q), 0.0, 1.0 / (1.0 + q), 0.0]);
        let p = encode_state(&[-q, 1.0], Gauge::MaxContrast).unwrap().dense();
        assert_eq!(p, vec![0.0, q / (1.0 + q), 1.0 / (1.0 + q), 0.0]);
        assert!(matches!(encode_state(&[0.0, 0.0], Gauge::Trivial), Err(GrabitError::NullState)));
    }

    #[test]
    fn ensemble_matches_histogram_vector() {
        let e = RealizationEnsemble::new(2, vec![0, 1, 3, 14, 14, 9, 0]).unwrap();
        assert_eq!(extract_state(&e).unwrap(), extract_state(&e.to_prob_vector()).unwrap());
        assert!(matches!(RealizationEnsemble::new(1, vec![]), Err(GrabitError::EmptyEnsemble)));
    }

    #[test]
    fn realify_layout() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(realify(&[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]).components, vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(
            realify(&[Complex64::new(h, 0.0), Complex64::new(0.0, h)]).components,
            vec![h, 0.0, 0.0, h]
        );
        assert_eq!(
            complexify(&[0.0, 1.0, 0.0, 0.0]).unwrap(),
            vec![Complex64::new(0.0, 1.0), Complex64::new(0.0, 0.0)]
        );
        assert!(complexify(&[1.0, 2.0, 3.0]).is_err());
    }

    fn random_vec(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-8i32..8, 1usize << n).prop_map(|v| v.into_iter().map(f64::from).collect())
    }

    proptest! {
        #[test]
        fn encode_then_extract_is_normalized_identity(phi in (1usize..5).prop_flat_map(random_vec)) {
            prop_assume!(phi.iter().any(|&a| a != 0.0));
            let norm: f64 = phi.iter().map(|a| a.abs()).sum();
            let p = encode_state(&phi, Gauge::Trivial).unwrap();
            let psi = extract_state(&p).unwrap().dense();
            for (a, b) in psi.iter().zip(&phi) {
                prop_assert_eq!(*a, b / norm);
            }
        }

        #[test]
        fn amplitude_bounded_by_physical(d in proptest::collection::vec(0u32..20, 16)) {
            prop_assume!(d.iter().any(|&x| x > 0));
            let s: u32 = d.iter().sum();
            let p = ProbVector::from_dense(2, &d.iter().map(|&x| x as f64 / s as f64).collect::<Vec<_>>()).unwrap();
            let psi = extract_state(&p).unwrap();
            let pt = physical_distribution(&p).unwrap();
            for i in 0..4u64 {
                prop_assert!(psi.get(i).abs() <= pt.get(i) + 1e-15);
            }
        }

        #[test]
        fn complexify_inverts_realify(v in proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..16)) {
            let psi: Vec<Complex64> = v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect();
            prop_assert_eq!(complexify(&realify(&psi).components).unwrap(), psi);
        }
    }
}
