//! QAOA ansatz circuits and a deterministic parameter search.

use super::portfolio::CostHamiltonian;
use crate::circuit::{run_sampled, Circuit, RefreshPolicy, RunOptions};
use crate::error::{GrabitError, Result};
use crate::gates::GateKind;
use crate::refresh::RefreshVariant;
use crate::unitary::run_unitary;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// `|+>^n`, then per layer `e^{-i gamma H_C}` (ZZ terms as CNOT, PHASE(2 gamma
/// sigma'), CNOT; Z terms as PHASE(2 gamma mu')) and the mixer H, PHASE(2 beta), H
/// on every qubit. Each factor is exact up to a global phase; the mixer is
/// `e^{-i beta X}`.
pub fn build_qaoa(h: &CostHamiltonian<f64>, gammas: &[f64], betas: &[f64]) -> Result<Circuit> {
    if gammas.is_empty() || gammas.len() != betas.len() {
        return Err(GrabitError::InvalidInput(format!(
            "need p >= 1 matching angles, got {} gammas and {} betas",
            gammas.len(),
            betas.len()
        )));
    }
    let n = h.n;
    let mut c = Circuit::new(n);
    c.has_reim = true;
    for q in 0..n {
        c.push(GateKind::H, &[q])?;
    }
    for (&g, &b) in gammas.iter().zip(betas) {
        for &(i, j, s) in &h.couplings {
            if s == 0.0 {
                continue;
            }
            c.push(GateKind::Cnot, &[j, i])?;
            c.push(GateKind::Phase(2.0 * g * s), &[i])?;
            c.push(GateKind::Cnot, &[j, i])?;
        }
        for (i, &m) in h.fields.iter().enumerate() {
            if m != 0.0 {
                c.push(GateKind::Phase(2.0 * g * m), &[i])?;
            }
        }
        for q in 0..n {
            c.push(GateKind::H, &[q])?;
            c.push(GateKind::Phase(2.0 * b), &[q])?;
            c.push(GateKind::H, &[q])?;
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq)]
pub enum QaoaEngine {
    /// Statevector evaluation, Born-2 weights.
    Exact,
    /// Statevector evaluation, Born-1 weights `|Re| + |Im|` of the realified
    /// amplitudes: the large-N_ball limit of the sampled engine.
    ExactBorn1,
    /// Sampled emulation with Rf1 after each interference-generating gate,
    /// Born-1 weights of the logical physical distribution.
    Sampled { n_ball: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
    pub cost: f64,
    pub p_gs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct QaoaReport {
    pub depth: usize,
    pub engine: String,
    pub ground_state: u64,
    pub ground_energy: f64,
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
    pub cost: f64,
    pub p_gs: f64,
    pub evaluations: usize,
    /// Best point after the grid and after each refinement sweep.
    pub trace: Vec<Evaluation>,
}

/// Selection probabilities over the `2^n` bitstrings.
pub fn distribution(h: &CostHamiltonian<f64>, gammas: &[f64], betas: &[f64], engine: &QaoaEngine) -> Result<Vec<f64>> {
    let c = build_qaoa(h, gammas, betas)?;
    match engine {
        QaoaEngine::Exact => Ok(run_unitary(&c, None)?.born2()),
        QaoaEngine::ExactBorn1 => {
            let psi = run_unitary(&c, None)?;
            let w: Vec<f64> = psi.amplitudes.iter().map(|z| z.re.abs() + z.im.abs()).collect();
            let total: f64 = w.iter().sum();
            Ok(w.into_iter().map(|x| x / total).collect())
        }
        QaoaEngine::Sampled { n_ball, seed } => {
            let mut o = RunOptions::new(*n_ball, *seed);
            o.policy_override = Some((RefreshPolicy::AfterInterference, RefreshVariant::Rf1));
            o.trace = false;
            Ok(run_sampled(&c, &o)?.physical_dense())
        }
    }
}

pub fn evaluate(
    h: &CostHamiltonian<f64>,
    gammas: &[f64],
    betas: &[f64],
    engine: &QaoaEngine,
    ground_state: u64,
) -> Result<Evaluation> {
    let p = distribution(h, gammas, betas, engine)?;
    let cost = p.iter().enumerate().map(|(x, w)| w * h.energy(x as u64)).sum();
    Ok(Evaluation { gammas: gammas.to_vec(), betas: betas.to_vec(), cost, p_gs: p[ground_state as usize] })
}

/// Grid search over `(gamma, beta)` for depth one, layer parameters of deeper
/// ansätze started from the depth-one optimum, then coordinate refinement
/// with step halving. Sampled evaluations use seed `seed + evaluation index`.
pub fn optimize_qaoa(h: &CostHamiltonian<f64>, p: usize, engine: &QaoaEngine, grid: usize) -> Result<QaoaReport> {
    if p == 0 || grid < 2 {
        return Err(GrabitError::InvalidInput("need depth >= 1 and a grid of at least 2 points".into()));
    }
    let (ground_state, ground_energy) = super::classical_minimum(h)?;
    let scale = h
        .couplings
        .iter()
        .map(|c| c.2.abs())
        .chain(h.fields.iter().map(|f| f.abs()))
        .fold(0.0f64, f64::max)
        .max(1e-12);
    let gamma_max = PI / (2.0 * scale);
    let beta_max = PI / 2.0;
    let mut counter = 0u64;
    let engine_at = |k: u64| match engine {
        QaoaEngine::Sampled { n_ball, seed } => QaoaEngine::Sampled { n_ball: *n_ball, seed: seed.wrapping_add(k) },
        other => other.clone(),
    };

    let points: Vec<(f64, f64)> = (0..grid)
        .flat_map(|a| {
            (0..grid).map(move |b| {
                let t = |i: usize, max: f64| -max + 2.0 * max * i as f64 / (grid - 1) as f64;
                (t(a, gamma_max), t(b, beta_max))
            })
        })
        .collect();
    let evals: Vec<Evaluation> = points
        .par_iter()
        .enumerate()
        .map(|(k, &(g, b))| evaluate(h, &vec![g; p], &vec![b; p], &engine_at(k as u64), ground_state))
        .collect::<Result<_>>()?;
    counter += evals.len() as u64;
    let mut best = evals
        .into_iter()
        .reduce(|a, b| if b.cost < a.cost { b } else { a })
        .expect("nonempty grid");
    let mut trace = vec![best.clone()];

    let mut steps = (2.0 * gamma_max / (grid - 1) as f64, 2.0 * beta_max / (grid - 1) as f64);
    for _ in 0..12 {
        let mut improved = false;
        for coord in 0..2 * p {
            for dir in [-1.0, 1.0] {
                let mut g = best.gammas.clone();
                let mut b = best.betas.clone();
                if coord < p {
                    g[coord] += dir * steps.0;
                } else {
                    b[coord - p] += dir * steps.1;
                }
                let e = evaluate(h, &g, &b, &engine_at(counter), ground_state)?;
                counter += 1;
                if e.cost < best.cost {
                    best = e;
                    improved = true;
                }
            }
        }
        trace.push(best.clone());
        if !improved {
            steps = (steps.0 / 2.0, steps.1 / 2.0);
        }
    }
    Ok(QaoaReport {
        depth: p,
        engine: match engine {
            QaoaEngine::Exact => "exact".into(),
            QaoaEngine::ExactBorn1 => "exact_born1".into(),
            QaoaEngine::Sampled { n_ball, .. } => format!("sampled({n_ball})"),
        },
        ground_state,
        ground_energy,
        gammas: best.gammas.clone(),
        betas: best.betas.clone(),
        cost: best.cost,
        p_gs: best.p_gs,
        evaluations: counter as usize,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::portfolio::{build_cost_hamiltonian, portfolio_statistics, synthetic_prices};

    fn instance() -> CostHamiltonian<f64> {
        let (a, p) = synthetic_prices(5, 120, 2024);
        let d = portfolio_statistics(a, p).unwrap();
        build_cost_hamiltonian(&d, 0.5, None, None).unwrap()
    }

    #[test]
    fn zero_angles_give_uniform() {
        let h = instance();
        let p = distribution(&h, &[0.0], &[0.0], &QaoaEngine::Exact).unwrap();
        assert!(p.iter().all(|&x| (x - 1.0 / 32.0).abs() < 1e-12));
    }

    #[test]
    fn exact_optimum_beats_uniform() {
        let h = instance();
        let r = optimize_qaoa(&h, 1, &QaoaEngine::Exact, 12).unwrap();
        assert!(r.p_gs > 1.0 / 32.0, "{}", r.p_gs);
        assert!(r.trace.windows(2).all(|w| w[1].cost <= w[0].cost));
    }
}
