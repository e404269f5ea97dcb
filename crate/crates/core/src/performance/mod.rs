//! Exact detector analytics: chi-squared kernels, ROC and AUC, critical
//! energy fractions and optimal-order maps.

pub mod chi2;
pub mod critical;
pub mod roc;

pub use chi2::{central_ccdf, central_ccdf_step, central_cdf, central_pdf, ChiSquared};
pub use critical::{critical_alpha, dof, optimal_order_map, snr_ratio, ZoneMap, ZoneParams};
pub use roc::{auc, auc_grid, detection_probability, log_grid, roc, roc_for, threshold_for_pfa, RocCurve, RocPoint};
