//! Exact probability vectors over joint byte4 values.

use crate::byte4::{self, check_width};
use crate::error::{GrabitError, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use std::collections::BTreeMap;
use std::fmt::Debug;
use std::ops::{Add, Mul, Sub};

/// Scalar used by exact propagation: `f64` for the numeric path,
/// [`BigRational`] for bit-exact checks on dyadic circuits.
pub trait Weight:
    Clone + Debug + PartialOrd + Zero + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self>
{
    /// Exact conversion of a gate probability.
    fn from_prob(p: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn abs_val(&self) -> Self;
    fn div_count(&self, n: u64) -> Self;
}

impl Weight for f64 {
    fn from_prob(p: f64) -> Self {
        p
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn abs_val(&self) -> Self {
        self.abs()
    }
    fn div_count(&self, n: u64) -> Self {
        self / n as f64
    }
}

impl Weight for BigRational {
    fn from_prob(p: f64) -> Self {
        BigRational::from_float(p).expect("finite probability")
    }
    fn to_f64(&self) -> f64 {
        num_traits::ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn abs_val(&self) -> Self {
        self.abs()
    }
    fn div_count(&self, n: u64) -> Self {
        self / BigRational::from_integer(BigInt::from(n))
    }
}

/// Sparse probability vector over the `4^N` joint b4vs, keyed by the packed
/// joint value. Only the support is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector<W = f64> {
    n_grabits: usize,
    entries: BTreeMap<u64, W>,
}

pub type B4ProbabilityVector = ProbVector<f64>;

impl<W: Weight> ProbVector<W> {
    /// Validates nonnegativity and that the mass sums to one within `1e-12`.
    pub fn new(n_grabits: usize, entries: BTreeMap<u64, W>) -> Result<Self> {
        check_width(n_grabits)?;
        let mask = byte4::joint_mask(n_grabits);
        let mut total = 0.0;
        for (&k, w) in &entries {
            if k & !mask != 0 {
                return Err(GrabitError::InvalidProbability(format!(
                    "index {k} outside {n_grabits}-grabit space"
                )));
            }
            let p = w.to_f64();
            if !(p >= 0.0) {
                return Err(GrabitError::InvalidProbability(format!("negative entry at {k}")));
            }
            total += p;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(GrabitError::InvalidProbability(format!("mass {total} != 1")));
        }
        Ok(Self::from_entries_unchecked(n_grabits, entries))
    }

    pub(crate) fn from_entries_unchecked(n_grabits: usize, mut entries: BTreeMap<u64, W>) -> Self {
        entries.retain(|_, w| !w.is_zero());
        Self { n_grabits, entries }
    }

    pub fn point_mass(n_grabits: usize, joint: u64) -> Result<Self> {
        let mut m = BTreeMap::new();
        m.insert(joint, W::from_prob(1.0));
        Self::new(n_grabits, m)
    }

    pub fn n_grabits(&self) -> usize {
        self.n_grabits
    }

    pub fn get(&self, joint: u64) -> W {
        self.entries.get(&joint).cloned().unwrap_or_else(W::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &W)> {
        self.entries.iter().map(|(&k, w)| (k, w))
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn total(&self) -> f64 {
        self.entries.values().map(|w| w.to_f64()).sum()
    }

    /// Alternating-parity sum over gradient values per blv.
    pub fn signed_amplitudes(&self) -> BTreeMap<u64, W> {
        let mut out: BTreeMap<u64, W> = BTreeMap::new();
        for (&k, w) in &self.entries {
            let slot = out.entry(byte4::blv_of(k)).or_insert_with(W::zero);
            let cur = std::mem::replace(slot, W::zero());
            *slot = if byte4::gradient_parity(k) { cur - w.clone() } else { cur + w.clone() };
        }
        out
    }

    /// Marginal over gradient values per blv.
    pub fn marginal(&self) -> BTreeMap<u64, W> {
        let mut out: BTreeMap<u64, W> = BTreeMap::new();
        for (&k, w) in &self.entries {
            let slot = out.entry(byte4::blv_of(k)).or_insert_with(W::zero);
            let cur = std::mem::replace(slot, W::zero());
            *slot = cur + w.clone();
        }
        out
    }

    pub fn to_f64(&self) -> ProbVector<f64> {
        ProbVector {
            n_grabits: self.n_grabits,
            entries: self.entries.iter().map(|(&k, w)| (k, w.to_f64())).collect(),
        }
    }
}

impl ProbVector<f64> {
    /// Dense view in joint-index order; only sensible for small `N`.
    pub fn dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; 1usize << (2 * self.n_grabits)];
        for (&k, &p) in &self.entries {
            v[k as usize] = p;
        }
        v
    }

    pub fn from_dense(n_grabits: usize, values: &[f64]) -> Result<Self> {
        let expected = 1usize << (2 * n_grabits);
        if values.len() != expected {
            return Err(GrabitError::Dimension { expected, got: values.len() });
        }
        let entries = values
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != 0.0)
            .map(|(k, &p)| (k as u64, p))
            .collect();
        Self::new(n_grabits, entries)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_mass() {
        assert!(ProbVector::from_dense(1, &[0.5, 0.2, 0.05, 0.2]).is_err());
        assert!(ProbVector::from_dense(1, &[1.5, -0.5, 0.0, 0.0]).is_err());
        assert!(ProbVector::from_dense(1, &[0.5, 0.2, 0.05, 0.25]).is_ok());
    }

    #[test]
    fn rational_weights_are_exact() {
        let half = BigRational::from_prob(0.5);
        assert_eq!(half.clone() + half, BigRational::from_integer(1.into()));
    }
}
