//! Quantitative studies with CSV and JSON output.

mod config;
mod fit;
mod interference;
mod scans;

pub use config::{run_scan, InterferenceConfig, ScanConfig, ScanOutput};
pub use fit::{fit_exponential, fit_inverse_sqrt, fit_line, fit_power_law, LineFit};
pub use interference::{
    closed_form_measure, crb_diagnostic, effective_ball_decay, interference_measure, CrbEntry, DecayCheck,
    InterferenceMeasure,
};
pub use scans::{
    bv_error_scan, error_vs_gates, h2_refresh_law, min_nball_scan, min_nball_search, qft_success_ratio, BvRow,
    BvScanConfig, BvTable, ErrorRow, ErrorScanConfig, ErrorTable, H2LawConfig, H2LawTable, MinNballRow,
    MinNballTable, QftScanConfig,
};
