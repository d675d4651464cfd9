//! Finite ensembles of realizations.

use crate::byte4::{self, check_width};
use crate::error::{GrabitError, Result};
use crate::prob::ProbVector;
use crate::rng::{RngStream, INIT_GATE};
use rayon::prelude::*;
use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

/// Realizations handled per parallel task.
pub(crate) const CHUNK: usize = 4096;

const SNAPSHOT_MAGIC: &[u8; 4] = b"GRB1";

/// `N_ball` realizations of `n_grabits` grabits, each packed into a `u64`
/// (two bits per grabit, grabit 0 most significant).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RealizationEnsemble {
    n_grabits: usize,
    realizations: Vec<u64>,
    capacity: usize,
}

/// Per-blv realization counts split by gradient parity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParityCounts {
    pub even: u64,
    pub odd: u64,
}

impl ParityCounts {
    pub fn signed(&self) -> i64 {
        self.even as i64 - self.odd as i64
    }

    pub fn total(&self) -> u64 {
        self.even + self.odd
    }
}

impl RealizationEnsemble {
    pub fn new(n_grabits: usize, realizations: Vec<u64>) -> Result<Self> {
        let capacity = realizations.len();
        Self::with_capacity(n_grabits, realizations, capacity)
    }

    pub fn with_capacity(n_grabits: usize, realizations: Vec<u64>, capacity: usize) -> Result<Self> {
        check_width(n_grabits)?;
        if realizations.is_empty() {
            return Err(GrabitError::EmptyEnsemble);
        }
        if realizations.len() > capacity {
            return Err(GrabitError::LimitExceeded {
                limit: "ensemble capacity",
                requested: realizations.len(),
                max: capacity,
            });
        }
        let mask = byte4::joint_mask(n_grabits);
        if let Some(&bad) = realizations.iter().find(|&&r| r & !mask != 0) {
            return Err(GrabitError::InvalidByte4(bad));
        }
        Ok(Self { n_grabits, realizations, capacity })
    }

    /// Builds an ensemble from a histogram over joint b4vs, realizations in key order.
    pub fn from_histogram(n_grabits: usize, histogram: &BTreeMap<u64, u64>) -> Result<Self> {
        let mut v = Vec::with_capacity(histogram.values().sum::<u64>() as usize);
        for (&k, &c) in histogram {
            v.extend(std::iter::repeat(k).take(c as usize));
        }
        Self::new(n_grabits, v)
    }

    pub fn n_grabits(&self) -> usize {
        self.n_grabits
    }

    pub fn n_ball(&self) -> usize {
        self.realizations.len()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn realizations(&self) -> &[u64] {
        &self.realizations
    }

    pub(crate) fn realizations_mut(&mut self) -> &mut [u64] {
        &mut self.realizations
    }

    pub fn get(&self, realization: usize, grabit: usize) -> byte4::Byte4Value {
        byte4::Byte4Value::new(byte4::get(self.realizations[realization], grabit, self.n_grabits))
            .expect("masked value")
    }

    /// Histogram over joint b4vs (the realized support only).
    pub fn histogram(&self) -> BTreeMap<u64, u64> {
        let partial: Vec<HashMap<u64, u64>> = self
            .realizations
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut m = HashMap::new();
                for &r in chunk {
                    *m.entry(r).or_insert(0) += 1;
                }
                m
            })
            .collect();
        let mut out = BTreeMap::new();
        for m in partial {
            for (k, c) in m {
                *out.entry(k).or_insert(0) += c;
            }
        }
        out
    }

    /// Even/odd gradient-parity counts per realized blv.
    pub fn parity_counts(&self) -> BTreeMap<u64, ParityCounts> {
        let partial: Vec<HashMap<u64, ParityCounts>> = self
            .realizations
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut m: HashMap<u64, ParityCounts> = HashMap::new();
                for &r in chunk {
                    let e = m.entry(byte4::blv_of(r)).or_default();
                    if byte4::gradient_parity(r) {
                        e.odd += 1;
                    } else {
                        e.even += 1;
                    }
                }
                m
            })
            .collect();
        let mut out: BTreeMap<u64, ParityCounts> = BTreeMap::new();
        for m in partial {
            for (k, c) in m {
                let e = out.entry(k).or_default();
                e.even += c.even;
                e.odd += c.odd;
            }
        }
        out
    }

    /// Relative-frequency probability vector of the ensemble.
    pub fn to_prob_vector(&self) -> ProbVector<f64> {
        let n = self.n_ball() as f64;
        let entries = self.histogram().into_iter().map(|(k, c)| (k, c as f64 / n)).collect();
        ProbVector::from_entries_unchecked(self.n_grabits, entries)
    }

    /// `sum_i |n_even(i) - n_odd(i)|`: the realizations left after sign
    /// concentration and pair annihilation.
    pub fn effective_ball_count(&self) -> u64 {
        self.parity_counts().values().map(|c| c.signed().unsigned_abs()).sum()
    }

    /// Writes the binary snapshot: magic `GRB1`, `n_grabits: u32`, `n_ball: u64`
    /// (little endian), then the 2-bit b4vs row-major by realization, packed
    /// most significant pair first within each byte.
    pub fn write_snapshot<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(SNAPSHOT_MAGIC)?;
        out.write_all(&(self.n_grabits as u32).to_le_bytes())?;
        out.write_all(&(self.n_ball() as u64).to_le_bytes())?;
        let mut packer = PairPacker::default();
        for &r in &self.realizations {
            for k in 0..self.n_grabits {
                if let Some(b) = packer.push(byte4::get(r, k, self.n_grabits)) {
                    out.write_all(&[b])?;
                }
            }
        }
        if let Some(b) = packer.finish() {
            out.write_all(&[b])?;
        }
        Ok(())
    }

    pub fn read_snapshot<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != SNAPSHOT_MAGIC {
            return Err(GrabitError::InvalidInput("bad snapshot magic".into()));
        }
        let mut b4 = [0u8; 4];
        input.read_exact(&mut b4)?;
        let n_grabits = u32::from_le_bytes(b4) as usize;
        check_width(n_grabits)?;
        let mut b8 = [0u8; 8];
        input.read_exact(&mut b8)?;
        let n_ball = u64::from_le_bytes(b8) as usize;
        let n_pairs = n_ball * n_grabits;
        let mut bytes = vec![0u8; n_pairs.div_ceil(4)];
        input.read_exact(&mut bytes)?;
        let mut realizations = Vec::with_capacity(n_ball);
        for r in 0..n_ball {
            let mut joint = 0u64;
            for k in 0..n_grabits {
                let p = r * n_grabits + k;
                let v = (bytes[p / 4] >> (6 - 2 * (p % 4))) & 3;
                joint = byte4::set(joint, k, n_grabits, v);
            }
            realizations.push(joint);
        }
        Self::new(n_grabits, realizations)
    }
}

#[derive(Default)]
struct PairPacker {
    byte: u8,
    filled: u8,
}

impl PairPacker {
    fn push(&mut self, v: u8) -> Option<u8> {
        self.byte |= (v & 3) << (6 - 2 * self.filled);
        self.filled += 1;
        if self.filled == 4 {
            let b = self.byte;
            *self = Self::default();
            Some(b)
        } else {
            None
        }
    }

    fn finish(self) -> Option<u8> {
        (self.filled > 0).then_some(self.byte)
    }
}

/// Draws `n` independent realizations from `p`, one uniform per realization
/// from the reserved initial-sampling stream.
pub fn sample_ensemble(p: &ProbVector<f64>, n: usize, rng: &RngStream) -> Result<RealizationEnsemble> {
    if n == 0 {
        return Err(GrabitError::EmptyEnsemble);
    }
    let keys: Vec<u64> = p.iter().map(|(k, _)| k).collect();
    let mut cumulative = Vec::with_capacity(keys.len());
    let mut acc = 0.0;
    for (_, &w) in p.iter() {
        acc += w;
        cumulative.push(acc);
    }
    let total = acc;
    let mut realizations = vec![0u64; n];
    if keys.len() == 1 {
        realizations.fill(keys[0]);
    } else {
        realizations.par_chunks_mut(CHUNK).enumerate().for_each(|(ci, chunk)| {
            let mut draws = rng.gate_draws(INIT_GATE, (ci * CHUNK) as u64);
            for slot in chunk.iter_mut() {
                let u = draws.next_realization()[0] * total;
                let idx = cumulative.partition_point(|&c| c <= u).min(keys.len() - 1);
                *slot = keys[idx];
            }
        });
    }
    RealizationEnsemble::new(p.n_grabits(), realizations)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn effective_ball_count_cancels_pairs() {
        let e = RealizationEnsemble::new(1, vec![0, 1, 0]).unwrap();
        assert_eq!(e.effective_ball_count(), 1);
        let free = RealizationEnsemble::new(2, vec![0, 2, 8, 11, 11]).unwrap();
        assert_eq!(free.effective_ball_count(), 5);
    }

    #[test]
    fn empty_ensemble_rejected() {
        assert!(matches!(RealizationEnsemble::new(1, vec![]), Err(GrabitError::EmptyEnsemble)));
    }

    #[test]
    fn point_mass_sampling_is_constant() {
        let p = ProbVector::point_mass(2, 0).unwrap();
        let e = sample_ensemble(&p, 5, &RngStream::new(3)).unwrap();
        assert!(e.realizations().iter().all(|&r| r == 0));
    }

    #[test]
    fn uniform_sampling_frequencies() {
        let p = ProbVector::from_dense(1, &[0.25; 4]).unwrap();
        let e = sample_ensemble(&p, 100_000, &RngStream::new(11)).unwrap();
        for (_, c) in e.histogram() {
            assert!((c as f64 / 1e5 - 0.25).abs() < 0.01);
        }
    }

    #[test]
    fn snapshot_round_trip() {
        let e = RealizationEnsemble::new(3, vec![0b00_01_10, 0b11_11_11, 0b10_00_01, 0]).unwrap();
        let mut buf = Vec::new();
        e.write_snapshot(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"GRB1");
        assert_eq!(buf.len(), 4 + 4 + 8 + 3);
        // first realization: grabits (0, 1, 2) then (3, ...)
        assert_eq!(buf[16], 0b00_01_10_11);
        let back = RealizationEnsemble::read_snapshot(&buf[..]).unwrap();
        assert_eq!(back, e);
    }
}
