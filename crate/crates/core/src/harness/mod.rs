//! BER measurement, OSNR sweeps and report emission.

mod ber;
mod config;
mod notch;
mod report;
mod run;

pub use ber::{ber_count, count_bits, curve_status, rosnr_at, BerPoint, CurveStatus, FEC_THRESHOLD};
pub use config::{check_rates, Manifest, Scenario, Sideband, SimConfig, SweepConfig};
pub use notch::{find_nulls, notch_probe, response_at};
pub use report::{comparison_csv, curves_csv, gnuplot_script, write_outputs, COMPARISON_HEADER, CURVES_HEADER};
pub use run::{loading_for, point_seed, random_bits, run_comparison, run_pam4_awgn, run_point, run_scenario, BerCurve};
