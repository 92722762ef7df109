use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QspError {
    #[error("root iteration did not converge within {iters} iterations")]
    NonConvergence { iters: usize },
    #[error("roots {a} and {b} are closer than the separation tolerance")]
    DuplicateRoots { a: f64, b: f64 },
    #[error("order {order} needs moments up to index {needed}, table ends at {have}")]
    InsufficientMoments { order: usize, needed: i64, have: i64 },
    #[error("pole collision: root of P at distance {distance:e} from another pole")]
    PoleCollision { distance: f64 },
    #[error("P has a repeated root (separation {separation:e}); only simple poles are supported")]
    HigherOrderPole { separation: f64 },
    #[error("root with modulus {modulus} lies on the unit circle")]
    RootOnCircle { modulus: f64 },
    #[error("omega_{index} = {omega} is within angle_tol of 0 or +-pi/2")]
    AngleDegenerate { index: usize, omega: f64 },
    #[error("parameter out of domain: {0}")]
    ParamOutOfDomain(String),
    #[error("moment functional is not quasi-definite at order {order}")]
    NotQuasiDefinite { order: usize },
    #[error("target has a root with imaginary part {max_imag:e}")]
    ComplexRoots { max_imag: f64 },
    #[error("|P|^2 + |Q|^2 deviates from 1 by {defect:e} on the unit circle")]
    NotUnimodularPair { defect: f64 },
    #[error("no branch assignment reconstructs P (error {error:e})")]
    BranchSelectionFailed { error: f64 },
    #[error("|nu_{index}| = {modulus} is not inside the unit disk")]
    VerblunskyOutOfDisk { index: usize, modulus: f64 },
    #[error("target root with modulus {modulus} is not strictly inside the unit disk")]
    RootOnOrOutsideDisk { modulus: f64 },
    #[error("step {step}: nullity {nullity} at sample {sample}")]
    RankDeficientBeyondNullity { step: usize, sample: usize, nullity: usize },
    #[error("target degree {target} exceeds basis degree {basis}")]
    DegreeExceedsBasis { target: usize, basis: usize },
    #[error("quadrature of f^2 does not settle under node doubling")]
    NotSquareIntegrable,
    #[error("state dimension {dim} exceeds cap {cap}")]
    DimensionTooLarge { dim: usize, cap: usize },
    #[error("reconstruction differs from target by {max_coeff_err:e}")]
    ReconstructionMismatch { max_coeff_err: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl QspError {
    pub fn code(&self) -> &'static str {
        match self {
            QspError::NonConvergence { .. } => "NonConvergence",
            QspError::DuplicateRoots { .. } => "DuplicateRoots",
            QspError::InsufficientMoments { .. } => "InsufficientMoments",
            QspError::PoleCollision { .. } => "PoleCollision",
            QspError::HigherOrderPole { .. } => "HigherOrderPole",
            QspError::RootOnCircle { .. } => "RootOnCircle",
            QspError::AngleDegenerate { .. } => "AngleDegenerate",
            QspError::ParamOutOfDomain(_) => "ParamOutOfDomain",
            QspError::NotQuasiDefinite { .. } => "NotQuasiDefinite",
            QspError::ComplexRoots { .. } => "ComplexRoots",
            QspError::NotUnimodularPair { .. } => "NotUnimodularPair",
            QspError::BranchSelectionFailed { .. } => "BranchSelectionFailed",
            QspError::VerblunskyOutOfDisk { .. } => "VerblunskyOutOfDisk",
            QspError::RootOnOrOutsideDisk { .. } => "RootOnOrOutsideDisk",
            QspError::RankDeficientBeyondNullity { .. } => "RankDeficientBeyondNullity",
            QspError::DegreeExceedsBasis { .. } => "DegreeExceedsBasis",
            QspError::NotSquareIntegrable => "NotSquareIntegrable",
            QspError::DimensionTooLarge { .. } => "DimensionTooLarge",
            QspError::ReconstructionMismatch { .. } => "ReconstructionMismatch",
            QspError::InvalidInput(_) => "InvalidInput",
        }
    }

    /// Structured fields for machine-readable error objects.
    pub fn context(&self) -> Value {
        match self {
            QspError::NonConvergence { iters } => json!({ "iters": iters }),
            QspError::DuplicateRoots { a, b } => json!({ "a": a, "b": b }),
            QspError::InsufficientMoments { order, needed, have } => {
                json!({ "order": order, "needed": needed, "have": have })
            }
            QspError::PoleCollision { distance } => json!({ "distance": distance }),
            QspError::HigherOrderPole { separation } => json!({ "separation": separation }),
            QspError::RootOnCircle { modulus } => json!({ "modulus": modulus }),
            QspError::AngleDegenerate { index, omega } => json!({ "index": index, "omega": omega }),
            QspError::ParamOutOfDomain(m) => json!({ "detail": m }),
            QspError::NotQuasiDefinite { order } => json!({ "order": order }),
            QspError::ComplexRoots { max_imag } => json!({ "max_imag": max_imag }),
            QspError::NotUnimodularPair { defect } => json!({ "defect": defect }),
            QspError::BranchSelectionFailed { error } => json!({ "error": error }),
            QspError::VerblunskyOutOfDisk { index, modulus } => {
                json!({ "index": index, "modulus": modulus })
            }
            QspError::RootOnOrOutsideDisk { modulus } => json!({ "modulus": modulus }),
            QspError::RankDeficientBeyondNullity { step, sample, nullity } => {
                json!({ "step": step, "sample": sample, "nullity": nullity })
            }
            QspError::DegreeExceedsBasis { target, basis } => {
                json!({ "target": target, "basis": basis })
            }
            QspError::NotSquareIntegrable => json!({}),
            QspError::DimensionTooLarge { dim, cap } => json!({ "dim": dim, "cap": cap }),
            QspError::ReconstructionMismatch { max_coeff_err } => {
                json!({ "max_coeff_err": max_coeff_err })
            }
            QspError::InvalidInput(m) => json!({ "detail": m }),
        }
    }
}

pub type Result<T> = std::result::Result<T, QspError>;
