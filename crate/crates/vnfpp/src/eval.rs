//! Common interface for placement evaluators.
//!
//! Every QoS model — the feedback-aware queueing model, the simulator-backed
//! scorer, and the cheap surrogates — scores a phenotype into a vector of
//! minimization objectives through this trait, so the optimizer and the CLI
//! can swap models freely.

use crate::encoding::Phenotype;
use crate::qos::QosError;
use crate::workload::ProblemInstance;
use thiserror::Error;

/// Canonical three-objective score: mean latency (ms), mean packet-loss
/// probability, and total energy draw (W). All minimized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveVector {
    pub latency: f64,
    pub loss: f64,
    pub energy: f64,
}

impl ObjectiveVector {
    pub fn to_vec(self) -> Vec<f64> {
        vec![self.latency, self.loss, self.energy]
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Qos(#[from] QosError),
}

pub trait Evaluator: Sync {
    /// Stable identifier used in CLI flags and CSV columns.
    fn name(&self) -> &'static str;

    /// Number of objectives this model produces (2 or 3).
    fn objective_count(&self) -> usize;

    /// Human-readable objective labels, `objective_count` long.
    fn objective_names(&self) -> Vec<&'static str>;

    fn evaluate(&self, instance: &ProblemInstance, phenotype: &Phenotype)
        -> Result<Vec<f64>, EvalError>;
}
