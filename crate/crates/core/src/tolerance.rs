use serde::{Deserialize, Serialize};

/// Numerical thresholds shared by every routine. Reports echo the effective values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Absolute per-component residual for Jacobi and Leibniz checks.
    pub alg: f64,
    /// Absolute threshold on real/imaginary parts when classifying eigenvalues.
    pub spec: f64,
    /// Singular-value cutoff relative to the largest singular value (floored at 1).
    pub rank: f64,
    /// Eigenvalues closer than this are merged into one class.
    pub cluster: f64,
    /// Maximum residual accepted by the grading check.
    pub grading: f64,
    /// Default integrator step.
    pub dt: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            alg: 1e-12,
            spec: 1e-9,
            rank: 1e-10,
            cluster: 1e-7,
            grading: 1e-8,
            dt: 1e-3,
        }
    }
}
