use serde::{Deserialize, Serialize};

/// Tolerance registry shared by every module.
///
/// A config file may override any subset of these; unknown keys are rejected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub root_tol: f64,
    pub pair_tol: f64,
    pub rebuild_tol: f64,
    pub realize_tol: f64,
    pub pole_sep_tol: f64,
    pub det_singular_tol: f64,
    pub fit_tol: f64,
    pub solve_tol: f64,
    pub angle_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            root_tol: 1e-10,
            pair_tol: 1e-9,
            rebuild_tol: 1e-8,
            realize_tol: 1e-9,
            pole_sep_tol: 1e-8,
            det_singular_tol: 1e-12,
            fit_tol: 1e-9,
            solve_tol: 1e-10,
            angle_tol: 1e-10,
        }
    }
}
