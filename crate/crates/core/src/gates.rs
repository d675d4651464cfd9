//! Stochastic gate maps over byte4 values.
//!
//! Every gate is a column-stochastic map on the b4vs of its target grabits.
//! Permutation gates move each realization deterministically; the others
//! (Hadamard and the general phase gates) draw one uniform per realization.

use crate::byte4;
use crate::ensemble::{RealizationEnsemble, CHUNK};
use crate::error::{GrabitError, Result};
use crate::prob::{ProbVector, Weight};
use crate::rng::RngStream;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

const SNAP: f64 = 1e-12;

/// A boolean function on packed input blvs (first input most significant),
/// evaluated reversibly as `x, y -> x, y xor f(x)`.
#[derive(Clone)]
pub struct Oracle {
    name: String,
    n_inputs: usize,
    truth: Arc<Vec<bool>>,
}

impl Oracle {
    pub fn new(name: impl Into<String>, n_inputs: usize, f: impl Fn(u64) -> bool) -> Result<Self> {
        if n_inputs > 24 {
            return Err(GrabitError::LimitExceeded { limit: "oracle inputs", requested: n_inputs, max: 24 });
        }
        let truth = (0..1u64 << n_inputs).map(f).collect();
        Ok(Self { name: name.into(), n_inputs, truth: Arc::new(truth) })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn eval(&self, x: u64) -> bool {
        self.truth[x as usize]
    }
}

impl fmt::Debug for Oracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Oracle({}/{})", self.name, self.n_inputs)
    }
}

impl PartialEq for Oracle {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.n_inputs == other.n_inputs
    }
}

/// Gate kinds of the supported universal set plus reversible oracles.
#[derive(Debug, Clone, PartialEq)]
pub enum GateKind {
    X,
    Z,
    H,
    Cnot,
    Swap,
    /// `diag(1, e^{i phi})`, emulated on (qubit, ReIm).
    Phase(f64),
    /// Controlled phase, emulated on (control, target, ReIm).
    CPhase(f64),
    Oracle(Oracle),
}

impl GateKind {
    pub fn mnemonic(&self) -> &'static str {
        match self {
            GateKind::X => "X",
            GateKind::Z => "Z",
            GateKind::H => "H",
            GateKind::Cnot => "CNOT",
            GateKind::Swap => "SWAP",
            GateKind::Phase(_) => "PHASE",
            GateKind::CPhase(_) => "CPHASE",
            GateKind::Oracle(_) => "ORACLE",
        }
    }

    /// Grabit count the stochastic map acts on (ReIm included).
    pub fn arity(&self) -> usize {
        match self {
            GateKind::X | GateKind::Z | GateKind::H => 1,
            GateKind::Cnot | GateKind::Swap | GateKind::Phase(_) => 2,
            GateKind::CPhase(_) => 3,
            GateKind::Oracle(o) => o.n_inputs() + 1,
        }
    }

    pub fn needs_reim(&self) -> bool {
        matches!(self, GateKind::Phase(_) | GateKind::CPhase(_))
    }
}

/// Quadrant of the normalized phase and `q = |cot phi|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseQuadrant {
    pub index: u8,
    pub q: f64,
}

/// Maps `phi` into `(-pi, pi]`.
pub fn normalize_angle(phi: f64) -> f64 {
    let r = phi.rem_euclid(2.0 * PI);
    if r > PI + SNAP {
        r - 2.0 * PI
    } else {
        r.min(PI)
    }
}

/// `(cos, sin)` of the normalized angle with values within `1e-12` of zero
/// snapped to zero, so multiples of `pi/2` give exact permutations.
fn snapped_cos_sin(phi: f64) -> (f64, f64) {
    let a = normalize_angle(phi);
    let snap = |v: f64| if v.abs() < SNAP { 0.0 } else { v };
    (snap(a.cos()), snap(a.sin()))
}

/// Quadrant index: `(0, pi/2] -> 1`, `(pi/2, pi] -> 2`, `(-pi, -pi/2] -> 3`,
/// `(-pi/2, 0] -> 4` (zero is the identity limit of quadrant 4).
pub fn phase_quadrant(phi: f64) -> Result<PhaseQuadrant> {
    if !phi.is_finite() {
        return Err(GrabitError::InvalidGate(format!("non-finite angle {phi}")));
    }
    let a = normalize_angle(phi);
    let (c, s) = snapped_cos_sin(phi);
    let index = if a > PI / 2.0 {
        2
    } else if a > 0.0 {
        1
    } else if a > -PI / 2.0 {
        4
    } else {
        3
    };
    let q = if s == 0.0 { f64::INFINITY } else { c.abs() / s.abs() };
    Ok(PhaseQuadrant { index, q })
}

/// Amplitude reduction `r0 = (1 - N)/2` with `N = sqrt(1+q^2)/(1+|q|)`,
/// written as `N = 1/(|cos| + |sin|)` so that `q = inf` needs no special case.
pub fn reduction_parameter(phi: f64) -> Result<f64> {
    if !phi.is_finite() {
        return Err(GrabitError::InvalidGate(format!("non-finite angle {phi}")));
    }
    let (c, s) = snapped_cos_sin(phi);
    Ok((1.0 - 1.0 / (c.abs() + s.abs())) / 2.0)
}

type Branches = Vec<(u32, f64)>;

/// Sign-carrying stochastic map of a real 2x2 matrix with equal column
/// 1-norms: input b4v `(j, g)` goes to b4v `2k + [sign < 0]` with probability
/// `|m[k][j]| / ||m[., j]||_1`.
fn real_map(m: [[f64; 2]; 2]) -> Vec<Branches> {
    let mut table = Vec::with_capacity(4);
    for input in 0..4u32 {
        let (j, sign) = ((input >> 1) as usize, if input & 1 == 1 { -1.0 } else { 1.0 });
        let col = [sign * m[0][j], sign * m[1][j]];
        let total = col[0].abs() + col[1].abs();
        let mut out = Vec::new();
        for (k, &v) in col.iter().enumerate() {
            if v != 0.0 {
                out.push(((2 * k as u32) | (v < 0.0) as u32, v.abs() / total));
            }
        }
        table.push(out);
    }
    table
}

fn rotation_map(phi: f64) -> Vec<Branches> {
    let (c, s) = snapped_cos_sin(phi);
    real_map([[c, -s], [s, c]])
}

/// Gradient flip on a blv-0 b4v with probability `r0`.
fn reduction_branches(b4v: u32, r0: f64) -> Branches {
    if r0 == 0.0 {
        vec![(b4v, 1.0)]
    } else {
        vec![(b4v, 1.0 - r0), (b4v ^ 1, r0)]
    }
}

#[derive(Debug, Clone)]
enum Action {
    /// Branches per local input (targets packed, first target most significant).
    Table(Vec<Branches>),
    Oracle(Oracle),
}

/// One entry of the JSON gate dump.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionEntry {
    pub input: Vec<u8>,
    pub output: Vec<u8>,
    pub probability: f64,
}

/// A gate's stochastic action on byte4 values, precomputed per instance.
#[derive(Debug, Clone)]
pub struct StochasticGate {
    kind: GateKind,
    targets: Vec<usize>,
    action: Action,
    reduction: Option<f64>,
    permutation: bool,
}

/// Builds a gate. `targets` are grabit indices; PHASE expects
/// `[qubit, reim]` and CPHASE `[control, target, reim]`, ORACLE the inputs
/// followed by the output grabit.
pub fn build_gate(kind: GateKind, targets: &[usize]) -> Result<StochasticGate> {
    if targets.len() != kind.arity() {
        return Err(GrabitError::InvalidGate(format!(
            "{} takes {} grabits, got {}",
            kind.mnemonic(),
            kind.arity(),
            targets.len()
        )));
    }
    for (i, t) in targets.iter().enumerate() {
        if targets[..i].contains(t) {
            return Err(GrabitError::InvalidGate(format!("duplicate target {t}")));
        }
    }
    let mut reduction = None;
    let action = match &kind {
        GateKind::X => Action::Table(real_map([[0.0, 1.0], [1.0, 0.0]])),
        GateKind::Z => Action::Table(real_map([[1.0, 0.0], [0.0, -1.0]])),
        GateKind::H => Action::Table(real_map([[1.0, 1.0], [1.0, -1.0]])),
        GateKind::Cnot => Action::Table(
            (0..16u32)
                .map(|local| {
                    let (c, t) = (local >> 2, local & 3);
                    let t = if c >> 1 == 1 { t ^ 2 } else { t };
                    vec![((c << 2) | t, 1.0)]
                })
                .collect(),
        ),
        GateKind::Swap => Action::Table((0..16u32).map(|l| vec![(((l & 3) << 2) | (l >> 2), 1.0)]).collect()),
        GateKind::Phase(phi) => {
            let r0 = reduction_parameter(*phi)?;
            reduction = Some(r0);
            let rot = rotation_map(*phi);
            Action::Table(
                (0..16u32)
                    .map(|local| {
                        let (c, r) = (local >> 2, local & 3);
                        if c >> 1 == 1 {
                            rot[r as usize].iter().map(|&(o, p)| ((c << 2) | o, p)).collect()
                        } else {
                            reduction_branches(c, r0).into_iter().map(|(o, p)| ((o << 2) | r, p)).collect()
                        }
                    })
                    .collect(),
            )
        }
        GateKind::CPhase(phi) => {
            let r0 = reduction_parameter(*phi)?;
            reduction = Some(r0);
            let rot = rotation_map(*phi);
            Action::Table(
                (0..64u32)
                    .map(|local| {
                        let (c1, c2, r) = (local >> 4, (local >> 2) & 3, local & 3);
                        if c1 >> 1 == 1 && c2 >> 1 == 1 {
                            rot[r as usize].iter().map(|&(o, p)| ((local & !3) | o, p)).collect()
                        } else if c1 >> 1 == 0 {
                            reduction_branches(c1, r0)
                                .into_iter()
                                .map(|(o, p)| ((o << 4) | (local & 15), p))
                                .collect()
                        } else {
                            reduction_branches(c2, r0)
                                .into_iter()
                                .map(|(o, p)| ((local & !12) | (o << 2), p))
                                .collect()
                        }
                    })
                    .collect(),
            )
        }
        GateKind::Oracle(o) => Action::Oracle(o.clone()),
    };
    let permutation = match &action {
        Action::Table(t) => {
            for (input, branches) in t.iter().enumerate() {
                let total: f64 = branches.iter().map(|b| b.1).sum();
                if (total - 1.0).abs() > 1e-12 || branches.iter().any(|b| b.1 < 0.0) {
                    return Err(GrabitError::InvalidGate(format!("column {input} is not stochastic")));
                }
            }
            t.iter().all(|b| b.len() == 1)
        }
        Action::Oracle(_) => true,
    };
    Ok(StochasticGate { kind, targets: targets.to_vec(), action, reduction, permutation })
}

/// The reversible evaluation `x, y -> x, y xor f(x)` on the blvs of
/// `inputs` and `output`, gradients untouched.
pub fn oracle_gate(f: Oracle, inputs: &[usize], output: usize) -> Result<StochasticGate> {
    if f.n_inputs() != inputs.len() {
        return Err(GrabitError::InvalidGate(format!(
            "oracle {} takes {} inputs, got {}",
            f.name(),
            f.n_inputs(),
            inputs.len()
        )));
    }
    let mut targets = inputs.to_vec();
    targets.push(output);
    build_gate(GateKind::Oracle(f), &targets)
}

pub fn is_interference_generating(g: &StochasticGate) -> bool {
    !g.permutation
}

impl StochasticGate {
    pub fn kind(&self) -> &GateKind {
        &self.kind
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn reduction(&self) -> Option<f64> {
        self.reduction
    }

    pub fn is_permutation(&self) -> bool {
        self.permutation
    }

    pub fn is_interference_generating(&self) -> bool {
        !self.permutation
    }

    fn check_width(&self, n_grabits: usize) -> Result<()> {
        match self.targets.iter().find(|&&t| t >= n_grabits) {
            Some(&t) => Err(GrabitError::InvalidGate(format!("target {t} out of range [0,{n_grabits})"))),
            None => Ok(()),
        }
    }

    #[inline]
    fn gather(&self, joint: u64, n: usize) -> u32 {
        self.targets.iter().fold(0u32, |acc, &t| (acc << 2) | byte4::get(joint, t, n) as u32)
    }

    #[inline]
    fn scatter(&self, mut joint: u64, local: u32, n: usize) -> u64 {
        let m = self.targets.len();
        for (j, &t) in self.targets.iter().enumerate() {
            joint = byte4::set(joint, t, n, ((local >> (2 * (m - 1 - j))) & 3) as u8);
        }
        joint
    }

    #[inline]
    fn apply_oracle(o: &Oracle, targets: &[usize], joint: u64, n: usize) -> u64 {
        let (inputs, out) = targets.split_at(targets.len() - 1);
        let x = inputs.iter().fold(0u64, |acc, &t| (acc << 1) | (byte4::get(joint, t, n) >> 1) as u64);
        if o.eval(x) {
            joint ^ (2u64 << byte4::shift_of(out[0], n))
        } else {
            joint
        }
    }

    /// Transforms one realization given a uniform draw.
    #[inline]
    fn step(&self, joint: u64, n: usize, u: f64) -> u64 {
        match &self.action {
            Action::Oracle(o) => Self::apply_oracle(o, &self.targets, joint, n),
            Action::Table(table) => {
                let branches = &table[self.gather(joint, n) as usize];
                let mut chosen = branches[branches.len() - 1].0;
                if branches.len() > 1 {
                    let mut acc = 0.0;
                    for &(o, p) in branches {
                        acc += p;
                        if u < acc {
                            chosen = o;
                            break;
                        }
                    }
                }
                self.scatter(joint, chosen, n)
            }
        }
    }

    /// Applies the gate to every realization in place. Draws come from the
    /// stream of `gate_index`; permutation gates consume none.
    pub fn apply_sampled_in_place(&self, e: &mut RealizationEnsemble, rng: &RngStream, gate_index: u64) -> Result<()> {
        let n = e.n_grabits();
        self.check_width(n)?;
        let permutation = self.permutation;
        e.realizations_mut().par_chunks_mut(CHUNK).enumerate().for_each(|(ci, chunk)| {
            if permutation {
                for r in chunk.iter_mut() {
                    *r = self.step(*r, n, 0.0);
                }
            } else {
                let mut draws = rng.gate_draws(gate_index, (ci * CHUNK) as u64);
                for r in chunk.iter_mut() {
                    *r = self.step(*r, n, draws.next_realization()[0]);
                }
            }
        });
        Ok(())
    }

    /// Exact sparse action on a probability vector.
    pub fn apply_exact<W: Weight>(&self, p: &ProbVector<W>) -> Result<ProbVector<W>> {
        let n = p.n_grabits();
        self.check_width(n)?;
        let mut out: BTreeMap<u64, W> = BTreeMap::new();
        let mut add = |k: u64, w: W| {
            let slot = out.entry(k).or_insert_with(W::zero);
            let cur = std::mem::replace(slot, W::zero());
            *slot = cur + w;
        };
        for (joint, w) in p.iter() {
            match &self.action {
                Action::Oracle(o) => add(Self::apply_oracle(o, &self.targets, joint, n), w.clone()),
                Action::Table(table) => {
                    for &(o, prob) in &table[self.gather(joint, n) as usize] {
                        add(self.scatter(joint, o, n), w.clone() * W::from_prob(prob));
                    }
                }
            }
        }
        Ok(ProbVector::from_entries_unchecked(n, out))
    }

    /// Dense column-stochastic matrix over the target subspace (`4^m` square,
    /// column = input). Oracle gates expand their truth table.
    pub fn local_matrix(&self) -> Vec<Vec<f64>> {
        let m = self.targets.len();
        let dim = 1usize << (2 * m);
        let mut mat = vec![vec![0.0; dim]; dim];
        for input in 0..dim as u32 {
            match &self.action {
                Action::Table(t) => {
                    for &(o, p) in &t[input as usize] {
                        mat[o as usize][input as usize] += p;
                    }
                }
                Action::Oracle(o) => {
                    let local_targets: Vec<usize> = (0..m).collect();
                    let out = Self::apply_oracle(o, &local_targets, input as u64, m);
                    mat[out as usize][input as usize] = 1.0;
                }
            }
        }
        mat
    }

    /// Transition entries for the JSON debug dump, inputs in ascending order.
    pub fn transition_entries(&self) -> Vec<TransitionEntry> {
        let m = self.targets.len();
        let unpack = |l: u32| (0..m).map(|j| ((l >> (2 * (m - 1 - j))) & 3) as u8).collect::<Vec<_>>();
        let mat = self.local_matrix();
        let mut out = Vec::new();
        for input in 0..mat.len() {
            for (output, row) in mat.iter().enumerate() {
                if row[input] != 0.0 {
                    out.push(TransitionEntry {
                        input: unpack(input as u32),
                        output: unpack(output as u32),
                        probability: row[input],
                    });
                }
            }
        }
        out
    }

    pub fn dump_json(&self) -> String {
        #[derive(Serialize)]
        struct Dump<'a> {
            gate: &'a str,
            targets: &'a [usize],
            reduction: Option<f64>,
            entries: Vec<TransitionEntry>,
        }
        serde_json::to_string_pretty(&Dump {
            gate: self.kind.mnemonic(),
            targets: &self.targets,
            reduction: self.reduction,
            entries: self.transition_entries(),
        })
        .expect("serializable")
    }
}

/// Out-of-place sampled application.
pub fn apply_sampled(g: &StochasticGate, e: &RealizationEnsemble, rng: &RngStream, gate_index: u64) -> Result<RealizationEnsemble> {
    let mut out = e.clone();
    g.apply_sampled_in_place(&mut out, rng, gate_index)?;
    Ok(out)
}

pub fn apply_exact<W: Weight>(g: &StochasticGate, p: &ProbVector<W>) -> Result<ProbVector<W>> {
    g.apply_exact(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::extract_state;

    fn p1(d: [f64; 4]) -> ProbVector<f64> {
        ProbVector::from_dense(1, &d).unwrap()
    }

    /// The four quadrant matrices as printed, `S[row][col] * (1+q)`.
    fn printed_quadrant(index: u8, q: f64) -> [[f64; 4]; 4] {
        let m = match index {
            1 => [[q, 0., 0., 1.], [0., q, 1., 0.], [1., 0., q, 0.], [0., 1., 0., q]],
            2 => [[0., q, 0., 1.], [q, 0., 1., 0.], [1., 0., 0., q], [0., 1., q, 0.]],
            3 => [[0., q, 1., 0.], [q, 0., 0., 1.], [0., 1., 0., q], [1., 0., q, 0.]],
            _ => [[q, 0., 1., 0.], [0., q, 0., 1.], [0., 1., q, 0.], [1., 0., 0., q]],
        };
        m.map(|row| row.map(|v| v / (1.0 + q)))
    }

    #[test]
    fn single_grabit_tables_match_printed_maps() {
        let sx = build_gate(GateKind::X, &[0]).unwrap().local_matrix();
        let sz = build_gate(GateKind::Z, &[0]).unwrap().local_matrix();
        let sh = build_gate(GateKind::H, &[0]).unwrap().local_matrix();
        let px = [[0., 0., 1., 0.], [0., 0., 0., 1.], [1., 0., 0., 0.], [0., 1., 0., 0.]];
        let pz = [[1., 0., 0., 0.], [0., 1., 0., 0.], [0., 0., 0., 1.], [0., 0., 1., 0.]];
        let ph = [[1., 0., 1., 0.], [0., 1., 0., 1.], [1., 0., 0., 1.], [0., 1., 1., 0.]].map(|r| r.map(|v| v / 2.0));
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(sx[i][j], px[i][j]);
                assert_eq!(sz[i][j], pz[i][j]);
                assert_eq!(sh[i][j], ph[i][j]);
                // S_H = (S_X + S_Z) / 2
                assert_eq!(sh[i][j], (px[i][j] + pz[i][j]) / 2.0);
            }
        }
    }

    #[test]
    fn rotation_block_matches_quadrant_matrices() {
        for &phi in &[0.3, 1.2, PI / 2.0, 2.0, 2.9, PI, -2.9, -2.0, -PI / 2.0, -1.0, -0.2] {
            let quad = phase_quadrant(phi).unwrap();
            let g = build_gate(GateKind::Phase(phi), &[0, 1]).unwrap();
            let mat = g.local_matrix();
            let expected = if quad.q.is_infinite() {
                // q -> infinity limit: the q-weighted entries carry all mass
                printed_quadrant(quad.index, 1e300).map(|r| r.map(|v| (v * 1e300 / (1e300 + 1.0)).round()))
            } else {
                printed_quadrant(quad.index, quad.q)
            };
            // control blv 1 (b4v 2): ReIm block at local indices 8..12
            for i in 0..4 {
                for j in 0..4 {
                    assert!((mat[8 + i][8 + j] - expected[i][j]).abs() < 1e-12, "phi={phi} ({i},{j})");
                    assert!((mat[12 + (i ^ 0)][12 + j] - expected[i][j]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn quadrant_boundaries() {
        assert_eq!(phase_quadrant(PI / 2.0).unwrap().index, 1);
        assert_eq!(phase_quadrant(PI).unwrap().index, 2);
        assert_eq!(phase_quadrant(-PI / 2.0).unwrap().index, 3);
        assert_eq!(phase_quadrant(-0.1).unwrap().index, 4);
        assert_eq!(phase_quadrant(3.0 * PI).unwrap().index, 2);
        assert!(phase_quadrant(f64::NAN).is_err());
        assert!(build_gate(GateKind::Phase(f64::INFINITY), &[0, 1]).is_err());
    }

    #[test]
    fn hadamard_exact_examples() {
        let h = build_gate(GateKind::H, &[0]).unwrap();
        let once = h.apply_exact(&p1([1., 0., 0., 0.])).unwrap();
        assert_eq!(once.dense(), vec![0.5, 0.0, 0.5, 0.0]);
        let twice = h.apply_exact(&once).unwrap();
        assert_eq!(twice.dense(), vec![0.5, 0.0, 0.25, 0.25]);
        let mut p = p1([1., 0., 0., 0.]);
        for _ in 0..10 {
            p = h.apply_exact(&p).unwrap();
        }
        let tail = 2f64.powi(-6);
        assert_eq!(p.dense(), vec![0.25 + tail, 0.25 - tail, 0.25, 0.25]);
    }

    #[test]
    fn z_swaps_sign_of_one() {
        let z = build_gate(GateKind::Z, &[0]).unwrap();
        assert_eq!(z.apply_exact(&p1([0., 0., 0.3, 0.7])).unwrap().dense(), vec![0., 0., 0.7, 0.3]);
    }

    #[test]
    fn phase_special_angles() {
        let g = build_gate(GateKind::Phase(PI / 2.0), &[0, 1]).unwrap();
        assert!(g.is_permutation());
        assert_eq!(g.reduction(), Some(0.0));
        let m = g.local_matrix();
        // ReIm block under control b4v 2: 0->2, 1->3, 2->1, 3->0
        for (i, o) in [(0, 2), (1, 3), (2, 1), (3, 0)] {
            assert_eq!(m[8 + o][8 + i], 1.0);
        }
        let t = build_gate(GateKind::Phase(PI / 4.0), &[0, 1]).unwrap();
        assert!((t.reduction().unwrap() - (2.0 - 2f64.sqrt()) / 4.0).abs() < 1e-15);
        assert!((t.reduction().unwrap() - 0.146447).abs() < 1e-6);
        let m = t.local_matrix();
        for (i, o) in [(0, 0), (0, 2), (1, 1), (1, 3), (2, 1), (2, 2), (3, 0), (3, 3)] {
            assert!((m[8 + o][8 + i] - 0.5).abs() < 1e-15);
        }
        assert!(!t.is_permutation());
        assert!(build_gate(GateKind::Phase(PI), &[0, 1]).unwrap().is_permutation());
        let id = build_gate(GateKind::Phase(0.0), &[0, 1]).unwrap();
        assert!(id.local_matrix().iter().enumerate().all(|(i, r)| r[i] == 1.0));
    }

    #[test]
    fn cnot_flips_target_blv() {
        let g = build_gate(GateKind::Cnot, &[0, 1]).unwrap();
        let p = ProbVector::<f64>::point_mass(2, 3 * 4 + 2).unwrap();
        assert_eq!(g.apply_exact(&p).unwrap(), ProbVector::point_mass(2, 3 * 4).unwrap());
        assert!(build_gate(GateKind::Cnot, &[1, 1]).is_err());
    }

    #[test]
    fn oracle_examples() {
        let id = Oracle::new("identity", 1, |x| x == 1).unwrap();
        let g = oracle_gate(id, &[0], 1).unwrap();
        let p = ProbVector::<f64>::point_mass(2, 2 * 4).unwrap();
        assert_eq!(g.apply_exact(&p).unwrap(), ProbVector::point_mass(2, 2 * 4 + 2).unwrap());
        let zero = oracle_gate(Oracle::new("const0", 1, |_| false).unwrap(), &[0], 1).unwrap();
        assert_eq!(zero.apply_exact(&p).unwrap(), p);
        // a = 01: f(x1, x2) = x2
        let bv = oracle_gate(Oracle::new("bv01", 2, |x| (x & 1) == 1).unwrap(), &[0, 1], 2).unwrap();
        let p = ProbVector::<f64>::point_mass(3, byte4::compose(0b010, 0)).unwrap();
        assert_eq!(bv.apply_exact(&p).unwrap(), ProbVector::point_mass(3, byte4::compose(0b011, 0)).unwrap());
    }

    #[test]
    fn interference_classification() {
        assert!(build_gate(GateKind::H, &[0]).unwrap().is_interference_generating());
        assert!(!build_gate(GateKind::Cnot, &[0, 1]).unwrap().is_interference_generating());
        assert!(!build_gate(GateKind::Phase(PI), &[0, 1]).unwrap().is_interference_generating());
        assert!(build_gate(GateKind::Phase(PI / 4.0), &[0, 1]).unwrap().is_interference_generating());
        assert!(build_gate(GateKind::CPhase(PI / 8.0), &[0, 1, 2]).unwrap().is_interference_generating());
        assert!(!build_gate(GateKind::CPhase(-PI), &[0, 1, 2]).unwrap().is_interference_generating());
    }

    #[test]
    fn every_table_is_column_stochastic() {
        let kinds = [
            GateKind::X,
            GateKind::Z,
            GateKind::H,
            GateKind::Cnot,
            GateKind::Swap,
            GateKind::Phase(0.7),
            GateKind::Phase(-2.2),
            GateKind::CPhase(1.9),
            GateKind::CPhase(-0.4),
        ];
        for k in kinds {
            let targets: Vec<usize> = (0..k.arity()).collect();
            let m = build_gate(k, &targets).unwrap().local_matrix();
            for j in 0..m.len() {
                let s: f64 = m.iter().map(|r| r[j]).sum();
                assert!((s - 1.0).abs() < 1e-12);
                assert!(m.iter().all(|r| r[j] >= 0.0));
            }
        }
    }

    #[test]
    fn sampled_x_and_h() {
        let x = build_gate(GateKind::X, &[0]).unwrap();
        let e = RealizationEnsemble::new(1, vec![0; 10]).unwrap();
        let out = apply_sampled(&x, &e, &RngStream::new(1), 1).unwrap();
        assert!(out.realizations().iter().all(|&r| r == 2));

        let h = build_gate(GateKind::H, &[0]).unwrap();
        let e = RealizationEnsemble::new(1, vec![0; 100_000]).unwrap();
        let out = apply_sampled(&h, &e, &RngStream::new(7), 1).unwrap();
        let frac = out.realizations().iter().filter(|&&r| r == 2).count() as f64 / 1e5;
        assert!((frac - 0.5).abs() < 0.01);
        assert_eq!(out.n_ball(), 100_000);
    }

    #[test]
    fn t_gate_reduction_branch_fraction() {
        let t = build_gate(GateKind::Phase(PI / 4.0), &[0, 1]).unwrap();
        // control b4v 0, ReIm b4v 0
        let e = RealizationEnsemble::new(2, vec![0; 100_000]).unwrap();
        let out = apply_sampled(&t, &e, &RngStream::new(5), 3).unwrap();
        let flipped = out.realizations().iter().filter(|&&r| byte4::get(r, 0, 2) == 1).count() as f64 / 1e5;
        assert!((flipped - 0.146447).abs() < 0.005, "{flipped}");
    }

    #[test]
    fn dump_lists_cnot_golden_entry() {
        let g = build_gate(GateKind::Cnot, &[0, 1]).unwrap();
        let entries = g.transition_entries();
        assert_eq!(entries.len(), 16);
        assert!(entries.contains(&TransitionEntry { input: vec![3, 2], output: vec![3, 0], probability: 1.0 }));
        let h = build_gate(GateKind::H, &[0]).unwrap();
        let json = h.dump_json();
        assert!(json.contains("\"probability\": 0.5"));
    }

    #[test]
    fn extract_after_h_twice() {
        let h = build_gate(GateKind::H, &[0]).unwrap();
        let p = h.apply_exact(&h.apply_exact(&p1([1., 0., 0., 0.])).unwrap()).unwrap();
        assert_eq!(extract_state(&p).unwrap().dense(), vec![0.5, 0.0]);
    }
}
