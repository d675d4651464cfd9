//! Destructive-interference measure, Cramér-Rao bound and effective ball
//! count decay.

use crate::circuit::{run_sampled, Circuit, RunOptions};
use crate::error::{GrabitError, Result};
use crate::gates::{normalize_angle, GateKind, StochasticGate};
use crate::prob::ProbVector;
use crate::state::{encode_state, exact_state};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterferenceMeasure {
    pub gate: String,
    pub n_grabits: usize,
    /// Largest observed `1 - ||psi'||_1 / ||psi||_1`.
    pub measure: f64,
    /// Input state attaining it (1-normalized).
    pub worst_state: Vec<f64>,
    pub starts: usize,
}

fn sorted_abs_sum(v: impl Iterator<Item = f64>) -> f64 {
    let mut a: Vec<f64> = v.map(f64::abs).collect();
    a.sort_by(f64::total_cmp);
    a.iter().sum()
}

/// `1 - ||psi'||_1 / ||psi||_1` for the interference-free encoding of `psi`
/// and exact gate application. Sorted sums make permutations lossless.
fn one_norm_loss(g: &StochasticGate, psi: &[f64]) -> Result<f64> {
    let p = encode_state(psi, crate::state::Gauge::MaxContrast)?;
    let out = exact_state(&g.apply_exact(&p)?);
    let before = sorted_abs_sum(p.signed_amplitudes().into_values());
    Ok(1.0 - sorted_abs_sum(out.amplitudes.into_values()) / before)
}

fn l1_normalize(v: &mut [f64]) -> bool {
    let n: f64 = v.iter().map(|x| x.abs()).sum();
    if n == 0.0 || !n.is_finite() {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= n);
    true
}

/// Estimates the worst-case 1-norm loss of a gate acting on `n_grabits`
/// grabits: random starts followed by coordinate hill-climbing.
pub fn interference_measure(g: &StochasticGate, n_grabits: usize, starts: usize, seed: u64) -> Result<InterferenceMeasure> {
    if g.targets().iter().any(|&t| t >= n_grabits) {
        return Err(GrabitError::InvalidInput("gate acts outside the register".into()));
    }
    if n_grabits > 12 || starts == 0 {
        return Err(GrabitError::InvalidInput("interference measure needs 1..=12 grabits and at least one start".into()));
    }
    let dim = 1usize << n_grabits;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = (f64::NEG_INFINITY, vec![0.0; dim]);
    for s in 0..starts {
        let mut psi: Vec<f64> = if s < dim {
            // a few structured starts: basis states and signed pairs
            let mut v = vec![0.0; dim];
            v[s] = 1.0;
            if s + 1 < dim {
                v[(s + 1) % dim] = if s % 2 == 0 { 1.0 } else { -1.0 };
            }
            v
        } else {
            (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
        };
        if !l1_normalize(&mut psi) {
            continue;
        }
        let mut loss = one_norm_loss(g, &psi)?;
        let mut step = 0.5;
        while step > 1e-7 {
            let mut improved = false;
            for i in 0..dim {
                for dir in [step, -step] {
                    let mut cand = psi.clone();
                    cand[i] += dir;
                    if !l1_normalize(&mut cand) {
                        continue;
                    }
                    let l = one_norm_loss(g, &cand)?;
                    if l > loss + 1e-15 {
                        psi = cand;
                        loss = l;
                        improved = true;
                    }
                }
            }
            if !improved {
                step /= 2.0;
            }
        }
        if loss > best.0 {
            best = (loss, psi);
        }
    }
    Ok(InterferenceMeasure {
        gate: g.kind().mnemonic().to_string(),
        n_grabits,
        measure: best.0.max(0.0),
        worst_state: best.1,
        starts,
    })
}

/// Known worst-case loss: `1/2` for H, `1 - (1+q^2)/(1+q)^2` with
/// `q = |cot phi|` for phase gates, zero for permutations.
pub fn closed_form_measure(kind: &GateKind) -> f64 {
    match kind {
        GateKind::H => 0.5,
        GateKind::Phase(phi) | GateKind::CPhase(phi) => {
            let phi = normalize_angle(*phi);
            let (s, c) = phi.sin_cos();
            if s.abs() < 1e-12 || c.abs() < 1e-12 {
                return 0.0;
            }
            let q = (c / s).abs();
            1.0 - (1.0 + q * q) / ((1.0 + q) * (1.0 + q))
        }
        _ => 0.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrbEntry {
    pub blv: u64,
    /// Mass on even and odd gradient parity after sign concentration.
    pub even: f64,
    pub odd: f64,
    /// `None` when one parity is empty (blv excluded from the bound).
    pub bound: Option<f64>,
}

/// Per-blv Cramér-Rao lower bound on the standard deviation of the estimated
/// amplitude from `n_ball` samples of `p`.
pub fn crb_diagnostic(p: &ProbVector<f64>, n_ball: usize) -> Result<Vec<CrbEntry>> {
    if n_ball == 0 {
        return Err(GrabitError::EmptyEnsemble);
    }
    let signed = p.signed_amplitudes();
    let marginal = p.marginal();
    let mut parity: BTreeMap<u64, (f64, f64)> = BTreeMap::new();
    for (&blv, &m) in &marginal {
        let s = signed.get(&blv).copied().unwrap_or(0.0);
        parity.insert(blv, ((m + s) / 2.0, (m - s) / 2.0));
    }
    Ok(parity
        .into_iter()
        .map(|(blv, (even, odd))| {
            let bound = (even > 1e-15 && odd > 1e-15).then(|| 2.0 / (n_ball as f64 * (1.0 / even + 1.0 / odd)).sqrt());
            CrbEntry { blv, even, odd, bound }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayCheck {
    pub n_ball: usize,
    pub runs: usize,
    /// Mean final effective ball count without refresh.
    pub mean_effective: f64,
    /// `N_ball * prod (1 - D_g)` over the circuit's gates.
    pub worst_case_bound: f64,
    pub holds: bool,
}

/// Compares the mean final effective ball count of a refresh-free run with
/// the worst-case decay bound. A 3-sigma statistical margin is allowed.
pub fn effective_ball_decay(c: &Circuit, n_ball: usize, runs: usize, seed: u64) -> Result<DecayCheck> {
    if runs == 0 {
        return Err(GrabitError::InvalidInput("runs must be positive".into()));
    }
    let factor: f64 = c
        .instructions
        .iter()
        .filter_map(|ins| match ins {
            crate::circuit::Instruction::Gate { kind, .. } => Some(1.0 - closed_form_measure(kind)),
            _ => None,
        })
        .product();
    let mut vals = Vec::with_capacity(runs);
    let root = crate::rng::RngStream::new(seed);
    for r in 0..runs {
        let mut o = RunOptions::new(n_ball, root.fork(r as u64).seed);
        o.policy_override = Some((crate::circuit::RefreshPolicy::None, crate::refresh::RefreshVariant::Rf1));
        let res = run_sampled(c, &o)?;
        vals.push(*res.effective_ball_trace.last().unwrap_or(&(n_ball as u64)) as f64);
    }
    let mean = vals.iter().sum::<f64>() / runs as f64;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (runs.max(2) - 1) as f64;
    let bound = n_ball as f64 * factor;
    Ok(DecayCheck {
        n_ball,
        runs,
        mean_effective: mean,
        worst_case_bound: bound,
        holds: mean + 3.0 * (var / runs as f64).sqrt() + 1.0 >= bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::build_gate;
    use std::f64::consts::PI;

    #[test]
    fn crb_examples() {
        let mut m = BTreeMap::new();
        m.insert(0b00, 0.5);
        m.insert(0b10, 0.25);
        m.insert(0b11, 0.25);
        let p = ProbVector::new(1, m).unwrap();
        let e = crb_diagnostic(&p, 50).unwrap();
        assert_eq!(e[0].bound, None);
        assert!((e[1].bound.unwrap() - 2.0 / (8.0f64 * 50.0).sqrt()).abs() < 1e-15);
        let u = ProbVector::from_dense(1, &[0.25; 4]).unwrap();
        for x in crb_diagnostic(&u, 100).unwrap() {
            assert!((x.bound.unwrap() - 2.0 / 800f64.sqrt()).abs() < 1e-15);
        }
        let free = encode_state(&[0.3, -0.7], crate::state::Gauge::MaxContrast).unwrap();
        assert!(crb_diagnostic(&free, 10).unwrap().iter().all(|x| x.bound.is_none()));
    }

    #[test]
    fn closed_forms() {
        assert_eq!(closed_form_measure(&GateKind::H), 0.5);
        assert!((closed_form_measure(&GateKind::Phase(PI / 4.0)) - 0.5).abs() < 1e-12);
        assert_eq!(closed_form_measure(&GateKind::Phase(PI)), 0.0);
        assert_eq!(closed_form_measure(&GateKind::Cnot), 0.0);
    }

    #[test]
    fn hadamard_and_cnot_measures() {
        let h = build_gate(GateKind::H, &[0]).unwrap();
        let m = interference_measure(&h, 1, 8, 1).unwrap();
        assert!((m.measure - 0.5).abs() < 1e-6, "{m:?}");
        let cx = build_gate(GateKind::Cnot, &[0, 1]).unwrap();
        assert_eq!(interference_measure(&cx, 2, 6, 1).unwrap().measure, 0.0);
    }
}
