//! Portfolio statistics and the Ising cost Hamiltonian.

use crate::error::{GrabitError, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::fmt::Debug;
use std::io::{Read, Write};
use std::ops::{Add, Div, Mul, Neg, Sub};

const TRADING_DAYS: f64 = 252.0;

/// Field used for Hamiltonian coefficients: `f64`, or [`BigRational`] for
/// exact identities.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + PartialOrd
    + Zero
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(x: f64) -> Self;
    fn from_int(x: i64) -> Self;
    fn to_f64(&self) -> f64;
    fn abs_val(&self) -> Self;
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn from_int(x: i64) -> Self {
        x as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn abs_val(&self) -> Self {
        self.abs()
    }
}

impl Scalar for BigRational {
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite coefficient")
    }
    fn from_int(x: i64) -> Self {
        BigRational::from_integer(BigInt::from(x))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn abs_val(&self) -> Self {
        self.abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioData {
    pub assets: Vec<String>,
    /// Daily prices per asset, most recent first.
    pub prices: Vec<Vec<f64>>,
    /// Annualized return per asset.
    pub returns: Vec<f64>,
    /// Annualized covariance.
    pub covariance: Vec<Vec<f64>>,
}

impl PortfolioData {
    pub fn n_assets(&self) -> usize {
        self.assets.len()
    }
}

/// Daily changes `r_k = (p_k - p_{k+1}) / p_k` over the stored order,
/// `mu = (prod (1 + r_k))^{252/(M-1)}` and the annualized covariance.
pub fn portfolio_statistics(assets: Vec<String>, prices: Vec<Vec<f64>>) -> Result<PortfolioData> {
    if prices.is_empty() || assets.len() != prices.len() {
        return Err(GrabitError::InvalidInput(format!("{} names for {} price series", assets.len(), prices.len())));
    }
    let m = prices[0].len();
    if m < 2 {
        return Err(GrabitError::InvalidInput("need at least two prices per asset".into()));
    }
    for (a, series) in assets.iter().zip(&prices) {
        if series.len() != m {
            return Err(GrabitError::InvalidInput(format!("asset {a} has {} prices, expected {m}", series.len())));
        }
        if let Some(p) = series.iter().find(|p| !(**p > 0.0) || !p.is_finite()) {
            return Err(GrabitError::InvalidInput(format!("asset {a} has nonpositive price {p}")));
        }
    }
    let changes: Vec<Vec<f64>> =
        prices.iter().map(|s| s.windows(2).map(|w| (w[0] - w[1]) / w[0]).collect()).collect();
    let scale = TRADING_DAYS / (m - 1) as f64;
    let returns = changes.iter().map(|r| r.iter().map(|x| 1.0 + x).product::<f64>().powf(scale)).collect();
    let means: Vec<f64> = changes.iter().map(|r| r.iter().sum::<f64>() / (m - 1) as f64).collect();
    let n = prices.len();
    let mut covariance = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = changes[i]
                .iter()
                .zip(&changes[j])
                .map(|(a, b)| (a - means[i]) * (b - means[j]))
                .sum::<f64>()
                * scale;
            covariance[i][j] = s;
            covariance[j][i] = s;
        }
    }
    Ok(PortfolioData { assets, prices, returns, covariance })
}

#[derive(Debug, Deserialize, Serialize)]
struct PriceRow {
    asset: String,
    day: u64,
    price: f64,
}

/// Reads `asset,day,price` rows. `day` counts trading days back from the
/// most recent one (day 0), so ascending `day` is the most-recent-first order
/// the statistics expect. Every asset must cover the same days.
pub fn read_prices_csv<R: Read>(input: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut assets: Vec<String> = Vec::new();
    let mut rows: Vec<Vec<(u64, f64)>> = Vec::new();
    for rec in csv::Reader::from_reader(input).deserialize::<PriceRow>() {
        let row = rec?;
        let idx = match assets.iter().position(|a| *a == row.asset) {
            Some(i) => i,
            None => {
                assets.push(row.asset.clone());
                rows.push(Vec::new());
                assets.len() - 1
            }
        };
        rows[idx].push((row.day, row.price));
    }
    if assets.is_empty() {
        return Err(GrabitError::InvalidInput("price file has no rows".into()));
    }
    let mut prices = Vec::with_capacity(rows.len());
    let mut days0: Option<Vec<u64>> = None;
    for (a, mut r) in assets.iter().zip(rows) {
        r.sort_by_key(|x| x.0);
        let days: Vec<u64> = r.iter().map(|x| x.0).collect();
        if days.windows(2).any(|w| w[0] == w[1]) {
            return Err(GrabitError::InvalidInput(format!("asset {a} repeats a day")));
        }
        match &days0 {
            Some(d) if *d != days => {
                return Err(GrabitError::InvalidInput(format!("asset {a} covers different days")));
            }
            None => days0 = Some(days),
            _ => {}
        }
        prices.push(r.into_iter().map(|x| x.1).collect());
    }
    Ok((assets, prices))
}

pub fn write_prices_csv<W: Write>(out: W, assets: &[String], prices: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (a, series) in assets.iter().zip(prices) {
        for (day, &price) in series.iter().enumerate() {
            w.serialize(PriceRow { asset: a.clone(), day: day as u64, price })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Geometric random walks, returned most recent first. Drift and volatility
/// per asset are drawn from fixed ranges.
pub fn synthetic_prices(n_assets: usize, n_days: usize, seed: u64) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::<f64>::new(0.0, 1.0).expect("valid normal");
    let mut assets = Vec::with_capacity(n_assets);
    let mut prices = Vec::with_capacity(n_assets);
    for i in 0..n_assets {
        let drift = 0.0008 * unit.sample(&mut rng) + 0.0003;
        let vol = 0.01 + 0.01 * unit.sample(&mut rng).abs();
        let mut p = 50.0 + 100.0 * unit.sample(&mut rng).abs();
        let mut series = Vec::with_capacity(n_days);
        for _ in 0..n_days {
            series.push(p);
            p *= (drift + vol * unit.sample(&mut rng)).exp();
        }
        series.reverse();
        assets.push(format!("S{i}"));
        prices.push(series);
    }
    (assets, prices)
}

/// `H_C = sum_{i>j} sigma'_ij Z_i Z_j + sum_i mu'_i Z_i`, with `offset` chosen
/// so that `H_C(x) + offset` equals the classical cost of the selection `x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostHamiltonian<S = f64> {
    pub n: usize,
    /// `(i, j, sigma'_ij)` with `i > j`.
    pub couplings: Vec<(usize, usize, S)>,
    pub fields: Vec<S>,
    pub offset: S,
    /// Penalty weight of `(sum x - B)^2`; zero without a budget.
    pub penalty: S,
    pub budget: Option<usize>,
}

/// Quadratic form `f(x) = x^T Q x + c^T x + k` of the classical cost.
struct Quadratic<S> {
    q: Vec<Vec<S>>,
    c: Vec<S>,
    k: S,
}

fn classical_form<S: Scalar>(d: &PortfolioData, q_weight: f64, budget: Option<usize>, lambda: S) -> Quadratic<S> {
    let n = d.n_assets();
    let qw = S::from_f64(q_weight);
    let rw = S::from_f64(1.0) - qw.clone();
    let mut q = vec![vec![S::zero(); n]; n];
    let mut c = vec![S::zero(); n];
    let mut k = S::zero();
    for i in 0..n {
        for j in 0..n {
            q[i][j] = qw.clone() * S::from_f64(d.covariance[i][j]);
        }
        c[i] = -(rw.clone() * S::from_f64(d.returns[i]));
    }
    if let Some(b) = budget {
        let b = S::from_int(b as i64);
        for i in 0..n {
            for j in 0..n {
                q[i][j] = q[i][j].clone() + lambda.clone();
            }
            c[i] = c[i].clone() - S::from_int(2) * lambda.clone() * b.clone();
        }
        k = lambda * b.clone() * b;
    }
    Quadratic { q, c, k }
}

fn to_ising<S: Scalar>(f: &Quadratic<S>) -> (Vec<(usize, usize, S)>, Vec<S>, S) {
    let n = f.c.len();
    let four = S::from_int(4);
    let two = S::from_int(2);
    let mut couplings = Vec::new();
    let mut fields: Vec<S> = (0..n).map(|i| -((f.q[i][i].clone() + f.c[i].clone()) / two.clone())).collect();
    let mut offset = f.k.clone();
    for i in 0..n {
        offset = offset + (f.q[i][i].clone() + f.c[i].clone()) / two.clone();
        for j in 0..i {
            let w = f.q[i][j].clone() + f.q[j][i].clone();
            let quarter = w / four.clone();
            fields[i] = fields[i].clone() - quarter.clone();
            fields[j] = fields[j].clone() - quarter.clone();
            offset = offset + quarter.clone();
            couplings.push((i, j, quarter));
        }
    }
    (couplings, fields, offset)
}

/// Substitutes `x_i -> (1 - Z_i)/2` into
/// `q sum x_i x_j sigma_ij - (1-q) sum x_i mu_i`, plus the budget penalty
/// `lambda (sum x_i - B)^2` when a budget is given. The default `lambda` is
/// `max|sigma'| + max|mu'|` of the penalty-free Hamiltonian.
pub fn build_cost_hamiltonian<S: Scalar>(
    d: &PortfolioData,
    q_weight: f64,
    budget: Option<usize>,
    lambda: Option<f64>,
) -> Result<CostHamiltonian<S>> {
    if !(0.0..=1.0).contains(&q_weight) {
        return Err(GrabitError::InvalidInput(format!("q weight {q_weight} outside [0,1]")));
    }
    if let Some(b) = budget {
        if b > d.n_assets() {
            return Err(GrabitError::InvalidInput(format!("budget {b} exceeds {} assets", d.n_assets())));
        }
    }
    let penalty = match (budget, lambda) {
        (None, _) => S::zero(),
        (Some(_), Some(l)) => S::from_f64(l),
        (Some(_), None) => {
            let (cp, fp, _) = to_ising(&classical_form::<S>(d, q_weight, None, S::zero()));
            let max = |v: &mut dyn Iterator<Item = S>| v.fold(S::zero(), |m, x| if x.abs_val() > m { x.abs_val() } else { m });
            max(&mut cp.into_iter().map(|c| c.2)) + max(&mut fp.into_iter())
        }
    };
    let (couplings, fields, offset) = to_ising(&classical_form(d, q_weight, budget, penalty.clone()));
    Ok(CostHamiltonian { n: d.n_assets(), couplings, fields, offset, penalty, budget })
}

impl<S: Scalar> CostHamiltonian<S> {
    /// `<x| H_C |x>` for the selection `x` (asset 0 is the most significant bit).
    pub fn energy(&self, x: u64) -> S {
        let z = |i: usize| if (x >> (self.n - 1 - i)) & 1 == 1 { S::from_int(-1) } else { S::from_int(1) };
        let mut e = S::zero();
        for (i, j, s) in &self.couplings {
            e = e + s.clone() * z(*i) * z(*j);
        }
        for (i, m) in self.fields.iter().enumerate() {
            e = e + m.clone() * z(i);
        }
        e
    }

    pub fn to_f64(&self) -> CostHamiltonian<f64> {
        CostHamiltonian {
            n: self.n,
            couplings: self.couplings.iter().map(|(i, j, s)| (*i, *j, s.to_f64())).collect(),
            fields: self.fields.iter().map(Scalar::to_f64).collect(),
            offset: self.offset.to_f64(),
            penalty: self.penalty.to_f64(),
            budget: self.budget,
        }
    }
}

impl CostHamiltonian<f64> {
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Coupling {
            i: usize,
            j: usize,
            value: f64,
        }
        #[derive(Serialize)]
        struct Dump<'a> {
            couplings: Vec<Coupling>,
            fields: &'a [f64],
            offset: f64,
            penalty: f64,
            budget: Option<usize>,
        }
        serde_json::to_string_pretty(&Dump {
            couplings: self.couplings.iter().map(|&(i, j, value)| Coupling { i, j, value }).collect(),
            fields: &self.fields,
            offset: self.offset,
            penalty: self.penalty,
            budget: self.budget,
        })
        .expect("serializable")
    }
}

/// Classical cost of a selection, evaluated directly from the data.
pub fn classical_cost<S: Scalar>(d: &PortfolioData, q_weight: f64, budget: Option<usize>, lambda: S, x: u64) -> S {
    let f = classical_form(d, q_weight, budget, lambda);
    let n = d.n_assets();
    let bit = |i: usize| (x >> (n - 1 - i)) & 1 == 1;
    let mut v = f.k.clone();
    for i in (0..n).filter(|&i| bit(i)) {
        v = v + f.c[i].clone();
        for j in (0..n).filter(|&j| bit(j)) {
            v = v + f.q[i][j].clone();
        }
    }
    v
}

/// Exhaustive minimum of `H_C` (lowest index on ties).
pub fn classical_minimum<S: Scalar>(h: &CostHamiltonian<S>) -> Result<(u64, S)> {
    if h.n > 24 {
        return Err(GrabitError::LimitExceeded { limit: "brute-force assets", requested: h.n, max: 24 });
    }
    let mut best = (0u64, h.energy(0));
    for x in 1..1u64 << h.n {
        let e = h.energy(x);
        if e < best.1 {
            best = (x, e);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(returns: Vec<f64>, covariance: Vec<Vec<f64>>) -> PortfolioData {
        let n = returns.len();
        PortfolioData {
            assets: (0..n).map(|i| format!("A{i}")).collect(),
            prices: vec![vec![1.0, 1.0]; n],
            returns,
            covariance,
        }
    }

    #[test]
    fn statistics_examples() {
        let d = portfolio_statistics(vec!["A".into()], vec![vec![5.0; 10]]).unwrap();
        assert_eq!(d.returns, vec![1.0]);
        assert_eq!(d.covariance, vec![vec![0.0]]);
        let d = portfolio_statistics(vec!["A".into()], vec![vec![110.0, 100.0]]).unwrap();
        assert!((d.returns[0] - (1.0 + 1.0 / 11.0f64).powf(252.0)).abs() < 1e-9 * d.returns[0]);
        let s = vec![10.0, 11.0, 9.5, 12.0];
        let d = portfolio_statistics(vec!["A".into(), "B".into()], vec![s.clone(), s]).unwrap();
        assert_eq!(d.covariance[0][1], d.covariance[0][0]);
        assert_eq!(d.covariance[1][1], d.covariance[0][0]);
        assert!(portfolio_statistics(vec!["A".into()], vec![vec![1.0, -1.0]]).is_err());
        assert!(portfolio_statistics(vec!["A".into(), "B".into()], vec![vec![1.0, 2.0], vec![1.0]]).is_err());
    }

    #[test]
    fn decoupled_fields_pick_positive_returns() {
        let d = data(vec![0.5, -0.2, 1.3], vec![vec![0.0; 3]; 3]);
        let h = build_cost_hamiltonian::<f64>(&d, 0.0, None, None).unwrap();
        assert_eq!(classical_minimum(&h).unwrap().0, 0b101);
    }

    #[test]
    fn pure_risk_selects_nothing() {
        let d = data(vec![1.0, 1.0], vec![vec![50.0, 0.0], vec![0.0, 50.0]]);
        let h = build_cost_hamiltonian::<f64>(&d, 1.0, None, None).unwrap();
        assert_eq!(classical_minimum(&h).unwrap().0, 0);
    }

    #[test]
    fn hamiltonian_reproduces_cost_exactly() {
        let (a, p) = synthetic_prices(5, 60, 11);
        let d = portfolio_statistics(a, p).unwrap();
        for budget in [None, Some(2)] {
            let h = build_cost_hamiltonian::<BigRational>(&d, 0.5, budget, None).unwrap();
            for x in 0..32 {
                let want = classical_cost(&d, 0.5, budget, h.penalty.clone(), x);
                assert_eq!(h.energy(x) + h.offset.clone(), want, "x={x:05b}");
            }
        }
    }

    #[test]
    fn budget_penalty_enforces_cardinality() {
        let (a, p) = synthetic_prices(5, 60, 3);
        let d = portfolio_statistics(a, p).unwrap();
        let h = build_cost_hamiltonian::<f64>(&d, 0.5, Some(2), None).unwrap();
        let free = build_cost_hamiltonian::<f64>(&d, 0.5, None, None).unwrap();
        let max_field = free.fields.iter().fold(0.0f64, |m, f| m.max(f.abs()));
        let max_coupling = free.couplings.iter().fold(0.0f64, |m, c| m.max(c.2.abs()));
        assert_eq!(h.penalty, max_field + max_coupling);
        let strict = build_cost_hamiltonian::<f64>(&d, 0.5, Some(2), Some(50.0)).unwrap();
        let (x, _) = classical_minimum(&strict).unwrap();
        assert_eq!(x.count_ones(), 2);
    }

    #[test]
    fn csv_round_trip_keeps_order() {
        let (a, p) = synthetic_prices(3, 8, 5);
        let mut buf = Vec::new();
        write_prices_csv(&mut buf, &a, &p).unwrap();
        let (a2, p2) = read_prices_csv(&buf[..]).unwrap();
        assert_eq!((a, p), (a2, p2));
        assert!(read_prices_csv(&b"asset,day,price\nA,0,1\nA,0,2\n"[..]).is_err());
        assert!(read_prices_csv(&b"asset,day,price\nA,0,1\nB,1,2\n"[..]).is_err());
    }
}
