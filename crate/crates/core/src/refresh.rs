//! Refreshment of sampled ensembles: Rf1 (minority relocation + amplitude
//! restoration), Rf2 (socket removal + replication), Rf3 (fixed memory).
//!
//! All three start from the signed per-blv counts `s_i = n_even - n_odd` and
//! leave an interference-free ensemble where every realized blv sits on its
//! canonical b4v.

use crate::byte4;
use crate::ensemble::{ParityCounts, RealizationEnsemble};
use crate::error::{GrabitError, Result};
use crate::rng::RngStream;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RefreshVariant {
    Rf1,
    Rf2,
    Rf3,
}

impl fmt::Display for RefreshVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RefreshVariant::Rf1 => "rf1",
            RefreshVariant::Rf2 => "rf2",
            RefreshVariant::Rf3 => "rf3",
        })
    }
}

impl FromStr for RefreshVariant {
    type Err = GrabitError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rf1" => Ok(RefreshVariant::Rf1),
            "rf2" => Ok(RefreshVariant::Rf2),
            "rf3" => Ok(RefreshVariant::Rf3),
            other => Err(GrabitError::InvalidInput(format!("unknown refresh variant '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefreshReport {
    pub variant: RefreshVariant,
    pub n_before: u64,
    pub n_after: u64,
    /// Opposite-parity pairs cancelled (Rf2/Rf3) or present before MIRE (Rf1).
    pub socket_removed: u64,
    /// `||psi^(u)||_1 / N_ball` before and after.
    pub one_norm_before: f64,
    pub one_norm_after: f64,
    pub roar_moves: u64,
}

/// Amplitude restoration strategy for Rf1.
#[derive(Debug, Clone, Default)]
pub enum RoarMode {
    #[default]
    Deterministic,
    /// Donor realizations and acceptors drawn at random, keyed by the given
    /// stream and gate index. Not used by the reproducible experiments.
    MonteCarlo(RngStream, u64),
}

struct Signed {
    counts: BTreeMap<u64, ParityCounts>,
    signed: BTreeMap<u64, i64>,
    abs_total: u64,
    pairs: u64,
}

fn signed_state(e: &RealizationEnsemble) -> Result<Signed> {
    let counts = e.parity_counts();
    let signed: BTreeMap<u64, i64> = counts.iter().map(|(&k, c)| (k, c.signed())).collect();
    let abs_total = signed.values().map(|s| s.unsigned_abs()).sum();
    let pairs = counts.values().map(|c| c.even.min(c.odd)).sum();
    if abs_total == 0 {
        return Err(GrabitError::Annihilated);
    }
    Ok(Signed { counts, signed, abs_total, pairs })
}

/// Integer shares of `total` proportional to `weights`: floors first, then one
/// extra unit each to the largest remainders (ties to ascending key).
pub fn largest_remainder(weights: &BTreeMap<u64, u64>, total: u64) -> BTreeMap<u64, u64> {
    let sum: u128 = weights.values().map(|&w| w as u128).sum();
    if sum == 0 {
        return weights.keys().map(|&k| (k, 0)).collect();
    }
    let mut out = BTreeMap::new();
    let mut rems = Vec::with_capacity(weights.len());
    let mut assigned: u64 = 0;
    for (&k, &w) in weights {
        let num = w as u128 * total as u128;
        let q = (num / sum) as u64;
        assigned += q;
        out.insert(k, q);
        rems.push((num % sum, k));
    }
    rems.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, k) in rems.iter().take((total - assigned) as usize) {
        *out.get_mut(&k).expect("key present") += 1;
    }
    out
}

fn canonical_of(signed: &BTreeMap<u64, i64>, blv: u64) -> u64 {
    byte4::canonical(blv, signed.get(&blv).copied().unwrap_or(0) < 0)
}

pub fn rf1(e: &RealizationEnsemble) -> Result<(RealizationEnsemble, RefreshReport)> {
    rf1_with(e, &RoarMode::Deterministic)
}

pub fn rf1_with(e: &RealizationEnsemble, mode: &RoarMode) -> Result<(RealizationEnsemble, RefreshReport)> {
    let st = signed_state(e)?;
    let n = e.n_ball() as u64;
    let mut out = e.clone();

    // MIRE with sign concentration
    for r in out.realizations_mut() {
        *r = canonical_of(&st.signed, byte4::blv_of(*r));
    }

    // ROAR
    let weights: BTreeMap<u64, u64> = st.signed.iter().map(|(&k, s)| (k, s.unsigned_abs())).collect();
    let targets = largest_remainder(&weights, n);
    let mut donors = Vec::new();
    let mut acceptors = Vec::new();
    for (&blv, c) in &st.counts {
        let (have, want) = (c.total() as i64, targets[&blv] as i64);
        if have > want {
            donors.push((blv, (have - want) as u64));
        } else if have < want {
            acceptors.push((blv, (want - have) as u64));
        }
    }
    let order = |a: &(u64, u64), b: &(u64, u64)| b.1.cmp(&a.1).then(a.0.cmp(&b.0));
    donors.sort_by(order);
    acceptors.sort_by(order);
    let moves: u64 = donors.iter().map(|d| d.1).sum();

    match mode {
        RoarMode::Deterministic => {
            // pair donors with acceptors in table order
            let mut plan: BTreeMap<u64, Vec<(u64, u64)>> = BTreeMap::new();
            let mut ai = 0;
            let mut acc_left = acceptors.clone();
            for &(d, mut surplus) in &donors {
                while surplus > 0 {
                    let (a, ref mut need) = acc_left[ai];
                    let m = surplus.min(*need);
                    plan.entry(d).or_default().push((a, m));
                    surplus -= m;
                    *need -= m;
                    if *need == 0 {
                        ai += 1;
                    }
                }
            }
            let mut cursor: BTreeMap<u64, usize> = BTreeMap::new();
            for r in out.realizations_mut() {
                let blv = byte4::blv_of(*r);
                if let Some(list) = plan.get_mut(&blv) {
                    let i = cursor.entry(blv).or_insert(0);
                    if *i < list.len() {
                        let (a, ref mut m) = list[*i];
                        *r = canonical_of(&st.signed, a);
                        *m -= 1;
                        if *m == 0 {
                            *i += 1;
                        }
                    }
                }
            }
        }
        RoarMode::MonteCarlo(rng, gate) => {
            let mut stream = rng.gate_draws(*gate, 0);
            let mut slots: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
            for (i, &r) in out.realizations().iter().enumerate() {
                slots.entry(byte4::blv_of(r)).or_default().push(i);
            }
            let mut need: Vec<(u64, u64)> = acceptors.clone();
            let mut remaining: u64 = need.iter().map(|a| a.1).sum();
            let mut chosen = Vec::new();
            for &(d, surplus) in &donors {
                let pool = slots.get_mut(&d).expect("donor realized");
                for _ in 0..surplus {
                    let u = stream.next_realization();
                    let pick = ((u[0] * pool.len() as f64) as usize).min(pool.len() - 1);
                    let slot = pool.swap_remove(pick);
                    let mut t = (u[1] * remaining as f64) as u64;
                    t = t.min(remaining - 1);
                    let mut ai = 0;
                    while t >= need[ai].1 {
                        t -= need[ai].1;
                        ai += 1;
                    }
                    need[ai].1 -= 1;
                    remaining -= 1;
                    chosen.push((slot, need[ai].0));
                }
            }
            let rs = out.realizations_mut();
            for (slot, a) in chosen {
                rs[slot] = canonical_of(&st.signed, a);
            }
        }
    }

    let after = out.effective_ball_count();
    Ok((
        out,
        RefreshReport {
            variant: RefreshVariant::Rf1,
            n_before: n,
            n_after: n,
            socket_removed: st.pairs,
            one_norm_before: st.abs_total as f64 / n as f64,
            one_norm_after: after as f64 / n as f64,
            roar_moves: moves,
        },
    ))
}

/// Keeps the `|s_i|` majority-parity realizations of every blv, in slot order,
/// relocated to their canonical b4v.
fn remove_socket(e: &RealizationEnsemble, st: &Signed) -> Vec<u64> {
    let mut left: BTreeMap<u64, u64> = st.signed.iter().map(|(&k, s)| (k, s.unsigned_abs())).collect();
    let mut kept = Vec::with_capacity(st.abs_total as usize);
    for &r in e.realizations() {
        let blv = byte4::blv_of(r);
        let s = st.signed[&blv];
        if s == 0 || byte4::gradient_parity(r) != (s < 0) {
            continue;
        }
        let slot = left.get_mut(&blv).expect("blv counted");
        if *slot > 0 {
            *slot -= 1;
            kept.push(byte4::canonical(blv, s < 0));
        }
    }
    kept
}

pub fn rf2(e: &RealizationEnsemble, n_target: usize) -> Result<(RealizationEnsemble, RefreshReport)> {
    let st = signed_state(e)?;
    let survivors = remove_socket(e, &st);
    let n_rs = survivors.len();
    let k = if n_rs < n_target { n_target.div_ceil(n_rs) } else { 1 };
    let mut realizations = Vec::with_capacity(k * n_rs);
    for _ in 0..k {
        realizations.extend_from_slice(&survivors);
    }
    let n_after = realizations.len();
    let out = RealizationEnsemble::with_capacity(e.n_grabits(), realizations, e.capacity().max(n_after))?;
    Ok((
        out,
        RefreshReport {
            variant: RefreshVariant::Rf2,
            n_before: e.n_ball() as u64,
            n_after: n_after as u64,
            socket_removed: st.pairs,
            one_norm_before: st.abs_total as f64 / e.n_ball() as f64,
            one_norm_after: 1.0,
            roar_moves: 0,
        },
    ))
}

pub fn rf3(e: &RealizationEnsemble, capacity: usize) -> Result<(RealizationEnsemble, RefreshReport)> {
    if capacity < e.n_ball() {
        return Err(GrabitError::InvalidInput(format!(
            "rf3 capacity {capacity} below N_ball {}",
            e.n_ball()
        )));
    }
    let st = signed_state(e)?;
    let weights: BTreeMap<u64, u64> = st.signed.iter().map(|(&k, s)| (k, s.unsigned_abs())).collect();
    let alloc = largest_remainder(&weights, capacity as u64);
    let mut realizations = Vec::with_capacity(capacity);
    for (&blv, &c) in &alloc {
        let b4 = canonical_of(&st.signed, blv);
        realizations.extend(std::iter::repeat_n(b4, c as usize));
    }
    let out = RealizationEnsemble::with_capacity(e.n_grabits(), realizations, capacity)?;
    Ok((
        out,
        RefreshReport {
            variant: RefreshVariant::Rf3,
            n_before: e.n_ball() as u64,
            n_after: capacity as u64,
            socket_removed: st.pairs,
            one_norm_before: st.abs_total as f64 / e.n_ball() as f64,
            one_norm_after: 1.0,
            roar_moves: 0,
        },
    ))
}

/// Parameters a refresh needs beyond the ensemble itself.
#[derive(Debug, Clone, Default)]
pub struct RefreshContext {
    /// Rf2 replication target; the current N_ball when unset.
    pub n_target: Option<usize>,
    /// Rf3 memory size; twice the current N_ball when unset.
    pub capacity: Option<usize>,
    pub roar: RoarMode,
}

pub fn refresh(
    e: &RealizationEnsemble,
    variant: RefreshVariant,
    ctx: &RefreshContext,
) -> Result<(RealizationEnsemble, RefreshReport)> {
    match variant {
        RefreshVariant::Rf1 => rf1_with(e, &ctx.roar),
        RefreshVariant::Rf2 => rf2(e, ctx.n_target.unwrap_or(e.n_ball())),
        RefreshVariant::Rf3 => rf3(e, ctx.capacity.unwrap_or(2 * e.n_ball())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(hist: [u64; 4]) -> RealizationEnsemble {
        let h = hist.iter().enumerate().map(|(k, &c)| (k as u64, c)).collect();
        RealizationEnsemble::from_histogram(1, &h).unwrap()
    }

    fn hist1(e: &RealizationEnsemble) -> [u64; 4] {
        let h = e.histogram();
        [0, 1, 2, 3].map(|k| h.get(&k).copied().unwrap_or(0))
    }

    #[test]
    fn rf1_worked_example() {
        let (out, rep) = rf1(&one([4, 0, 4, 3])).unwrap();
        assert_eq!(hist1(&out), [9, 0, 2, 0]);
        assert_eq!(rep.n_after, 11);
        assert_eq!(rep.roar_moves, 5);
        assert!((rep.one_norm_before - 5.0 / 11.0).abs() < 1e-15);
        assert_eq!(rep.one_norm_after, 1.0);
    }

    #[test]
    fn rf1_keeps_born1_state() {
        let e = one([7, 0, 0, 3]);
        let (out, rep) = rf1(&e).unwrap();
        assert_eq!(out.realizations(), e.realizations());
        assert_eq!(rep.roar_moves, 0);
    }

    #[test]
    fn rf1_annihilation() {
        assert!(matches!(rf1(&one([2, 2, 0, 0])), Err(GrabitError::Annihilated)));
        assert_eq!(GrabitError::Annihilated.to_string(), "state annihilated; increase N_ball");
    }

    #[test]
    fn rf1_zero_amplitude_blv_is_drained() {
        let (out, _) = rf1(&one([3, 0, 2, 2])).unwrap();
        assert_eq!(hist1(&out), [7, 0, 0, 0]);
    }

    #[test]
    fn rf2_examples() {
        let e = RealizationEnsemble::new(1, vec![0, 1, 0]).unwrap();
        let (out, rep) = rf2(&e, 3).unwrap();
        assert_eq!(out.realizations(), &[0, 0, 0]);
        assert_eq!(rep.socket_removed, 1);
        let clean = RealizationEnsemble::new(1, vec![0, 3, 3, 0]).unwrap();
        assert_eq!(rf2(&clean, 4).unwrap().0.realizations(), clean.realizations());
        assert!(rf2(&RealizationEnsemble::new(1, vec![0, 1]).unwrap(), 2).is_err());
    }

    #[test]
    fn rf3_examples() {
        let e = RealizationEnsemble::new(1, vec![0, 0, 2, 3]).unwrap();
        assert_eq!(rf3(&e, 8).unwrap().0.realizations(), &[0; 8]);
        let e = one([3, 0, 1, 0]);
        assert_eq!(hist1(&rf3(&e, 8).unwrap().0), [6, 0, 2, 0]);
        let e = one([2, 0, 1, 0]);
        assert_eq!(hist1(&rf3(&e, 8).unwrap().0), [5, 0, 3, 0]);
        assert!(rf3(&e, 2).is_err());
    }

    #[test]
    fn largest_remainder_ties_ascending() {
        let w: BTreeMap<u64, u64> = [(0, 1), (1, 1), (2, 1)].into();
        let t = largest_remainder(&w, 4);
        assert_eq!(t.values().copied().collect::<Vec<_>>(), vec![2, 1, 1]);
    }

    #[test]
    fn monte_carlo_roar_reaches_targets() {
        let mode = RoarMode::MonteCarlo(RngStream::new(3), 9);
        let (out, _) = rf1_with(&one([4, 0, 4, 3]), &mode).unwrap();
        assert_eq!(hist1(&out), [9, 0, 2, 0]);
    }
}
