//! Soft-margin SVMs trained by sequential minimal optimization, combined
//! one-vs-one into a multiclass classifier over min-max normalized features.

mod kkt;
mod model_io;
mod multiclass;
mod smo;

pub use kkt::{kkt_report, kkt_residuals, KktReport};
pub use model_io::{read_model, write_model, MODEL_MAGIC};
pub use multiclass::{
    predict_multiclass, train_multiclass, MulticlassModel, Normalization, PairModel, Prediction,
};
pub use smo::{dual_objective, predict_binary, train_binary, BinarySvmModel, BinaryTraining};

use crate::error::{Error, Result};

/// Polynomial kernel `(x·y + offset)^degree`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub degree: u32,
    pub offset: f64,
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec {
            degree: 1,
            offset: 0.0,
        }
    }
}

impl KernelSpec {
    pub fn polynomial(degree: u32, offset: f64) -> Self {
        KernelSpec { degree, offset }
    }

    pub fn validate(&self) -> Result<()> {
        if self.degree == 0 || !(self.offset >= 0.0 && self.offset.is_finite()) {
            return Err(Error::Config(format!(
                "polynomial kernel needs degree >= 1 and offset >= 0, got ({}, {})",
                self.degree, self.offset
            )));
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn apply(&self, x: &[f64], y: &[f64]) -> f64 {
        let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
        (dot + self.offset).powi(self.degree as i32)
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::Dimension {
                expected: x.len(),
                got: y.len(),
            });
        }
        Ok(self.apply(x, y))
    }
}

/// Training hyperparameters shared by binary and multiclass training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmParams {
    /// Box constraint C.
    pub c: f64,
    /// KKT tolerance.
    pub tol: f64,
    pub kernel: KernelSpec,
    /// Minimum relative multiplier change for a step to count as progress.
    pub eps: f64,
    /// Outer-loop passes before giving up.
    pub max_passes: usize,
    /// Seeds the rotating start positions of the inner loops.
    pub seed: u64,
    /// Record the dual objective after every accepted step.
    pub trace: bool,
}

/// Box constraint used when none is given.
pub const DEFAULT_C: f64 = 100.0;

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: DEFAULT_C,
            tol: 1e-3,
            kernel: KernelSpec::default(),
            eps: 1e-10,
            max_passes: 10_000,
            seed: 0,
            trace: false,
        }
    }
}

impl SvmParams {
    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Config(format!("C must be positive, got {}", self.c)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        Ok(())
    }
}
