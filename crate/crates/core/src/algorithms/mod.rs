//! Circuit builders for the studied algorithms and the portfolio pipeline.

pub mod dj_bv;
pub mod portfolio;
pub mod qaoa;
pub mod qft;

pub use dj_bv::{build_bv, build_dj_bv};
pub use portfolio::{
    classical_cost,
    build_cost_hamiltonian, classical_minimum, portfolio_statistics, read_prices_csv, synthetic_prices,
    write_prices_csv, CostHamiltonian, PortfolioData, Scalar,
};
pub use qaoa::{build_qaoa, distribution, evaluate, optimize_qaoa, Evaluation, QaoaEngine, QaoaReport};
pub use qft::{build_qft, fourier_basis_state};
