//! Measurement side: scans, fringe fits, inversion to state parameters,
//! transmission recovery and the end-to-end pipeline.

pub mod fit;
pub mod inversion;
pub mod pipeline;
pub mod scan;
pub mod tables;
pub mod transmissions;

pub use fit::{fit_fringe, ExtremaEstimate, ExtremaStderr, FringeFit};
pub use inversion::{
    estimate_b1b2, estimate_coh_product, estimate_coh_product_visibility, estimate_eta_lossless,
    estimate_eta_lossy, estimate_eta_prob, ppt_and_concurrence, ppt_and_concurrence_with_band,
    recover_icoh, recover_ih, recover_ih_from_offset, PptEstimate,
};
pub use pipeline::{
    estimate_plan, run_pipeline, simulate_plan, EstimationReport, PlanSettings, PlanSlot, ScanPlan,
};
pub use scan::{
    read_scan_csv, simulate_scan, simulate_setting, write_scan_csv, PhaseScanRecord, Samples,
    ScanSetting,
};
pub use transmissions::{
    estimate_transmissions, estimate_transmissions_with, forward_observables, nearest_candidate,
    transmission_candidates, Branch, SolverTolerance, TransmissionObservables,
    TransmissionSolution,
};
