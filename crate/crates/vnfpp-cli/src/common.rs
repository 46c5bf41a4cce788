//! Shared plumbing: exit-code mapping, output directory resolution,
//! evaluator construction, and the common archive CSV schema.

use std::path::{Path, PathBuf};

use clap::Args;
use vnfpp::eval::Evaluator;
use vnfpp::qos::{ConvergenceConfig, ProposedModel};
use vnfpp::surrogates::{CwtplModel, CwtplParams, Mm1Model, Mm1bInstantModel, PlusModel, RuModel};
use vnfpp::workload::{InstanceError, ProblemInstance};

/// Command failure with its exit code: usage (1), invalid/infeasible
/// input (2), internal (3).
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Invalid(String),
    Internal(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Invalid(_) => 2,
            Failure::Internal(_) => 3,
        }
    }

    pub fn message(&self) -> String {
        match self {
            Failure::Usage(m) | Failure::Invalid(m) => m.clone(),
            Failure::Internal(e) => format!("{e:#}"),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Internal(e)
    }
}

/// I/O on our own outputs is an internal failure, not the user's fault.
pub fn internal(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Internal(e.into())
}

/// Resolve the output directory: the flag, else `VNFPP_OUT_DIR`, else the
/// working directory. Created if missing.
pub fn resolve_out_dir(flag: Option<PathBuf>) -> Result<PathBuf, Failure> {
    let dir = flag
        .or_else(|| std::env::var_os("VNFPP_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(internal)?;
    Ok(dir)
}

/// Load and validate an instance file; anything wrong with it exits 2.
pub fn load_instance(path: &Path) -> Result<ProblemInstance, Failure> {
    ProblemInstance::load(path)
        .map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

/// Map instance-generation errors: bad parameters are usage errors, an
/// unsatisfiable instance is invalid input.
pub fn generation_failure(e: InstanceError) -> Failure {
    match e {
        InstanceError::InvalidParameter(_) | InstanceError::Topology(_) => {
            Failure::Usage(e.to_string())
        }
        InstanceError::Io(io) => internal(io),
        other => Failure::Invalid(other.to_string()),
    }
}

/// Fixed-point iteration knobs shared by every command that runs the
/// feedback-aware QoS model.
#[derive(Debug, Args)]
pub struct QosArgs {
    /// Convergence tolerance on per-component arrival rates (pkts/ms)
    #[arg(long, default_value_t = 5.0)]
    pub delta: f64,
    /// Consecutive quiet iterations required to accept convergence
    #[arg(long, default_value_t = 10)]
    pub patience: u32,
    /// Iteration cap before declaring non-convergence
    #[arg(long, default_value_t = 10_000)]
    pub max_iterations: u32,
}

impl QosArgs {
    pub fn to_config(&self) -> Result<ConvergenceConfig, Failure> {
        if !(self.delta > 0.0) {
            return Err(Failure::Usage(format!("--delta must be positive, got {}", self.delta)));
        }
        if self.patience == 0 || self.max_iterations == 0 {
            return Err(Failure::Usage(
                "--patience and --max-iterations must be at least 1".into(),
            ));
        }
        Ok(ConvergenceConfig {
            delta: self.delta,
            patience: self.patience,
            max_iterations: self.max_iterations,
        })
    }
}

/// Constant per-hop surrogate knobs.
#[derive(Debug, Args)]
pub struct CwtplArgs {
    /// Waiting time charged per visited component by the cwtpl surrogate (ms)
    #[arg(long, default_value_t = 0.1)]
    pub cwtpl_wait: f64,
    /// Drop probability charged per visited component by the cwtpl surrogate
    #[arg(long, default_value_t = 0.001)]
    pub cwtpl_loss: f64,
}

impl CwtplArgs {
    pub fn to_params(&self) -> CwtplParams {
        CwtplParams { wait_ms: self.cwtpl_wait, loss_per_hop: self.cwtpl_loss }
    }
}

pub const EVALUATOR_NAMES: &[&str] = &["proposed", "mm1", "mm1b-instant", "cwtpl", "ru", "plus"];

pub fn make_evaluator(
    name: &str,
    qos: ConvergenceConfig,
    cwtpl: CwtplParams,
) -> Result<Box<dyn Evaluator>, Failure> {
    match name {
        "proposed" => Ok(Box::new(ProposedModel { config: qos })),
        "mm1" => Ok(Box::new(Mm1Model)),
        "mm1b-instant" => Ok(Box::new(Mm1bInstantModel)),
        "cwtpl" => Ok(Box::new(CwtplModel { params: cwtpl })),
        "ru" => Ok(Box::new(RuModel)),
        "plus" => Ok(Box::new(PlusModel)),
        other => Err(Failure::Usage(format!(
            "unknown evaluator '{other}' (expected one of: {})",
            EVALUATOR_NAMES.join(", ")
        ))),
    }
}

/// Leading columns every archive CSV shares; commands append their own
/// extras after these.
pub const ARCHIVE_COLUMNS: [&str; 6] =
    ["run", "seed", "candidate", "latency_ms", "packet_loss", "energy_w"];

/// `2;1;3` notation for per-service instance counts.
pub fn join_counts(counts: &[usize]) -> String {
    counts.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(";")
}

pub fn parse_counts(text: &str) -> Option<Vec<usize>> {
    text.split(';').map(|t| t.trim().parse().ok()).collect()
}

pub fn join_objectives(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";")
}

/// Read the qos objective triples out of any archive CSV by header name.
pub fn read_objective_rows(path: &Path) -> Result<Vec<Vec<f64>>, Failure> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?
        .clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            Failure::Invalid(format!("{}: missing column '{name}'", path.display()))
        })
    };
    let idx = [col("latency_ms")?, col("packet_loss")?, col("energy_w")?];
    let mut rows = Vec::new();
    for record in reader.records() {
        let record =
            record.map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
        let mut row = Vec::with_capacity(3);
        for &i in &idx {
            let field = record.get(i).unwrap_or("");
            let value: f64 = field.parse().map_err(|_| {
                Failure::Invalid(format!("{}: bad number '{field}'", path.display()))
            })?;
            row.push(value);
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Read one string column out of a CSV by header name.
pub fn read_string_column(path: &Path, name: &str) -> Result<Vec<String>, Failure> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?
        .clone();
    let idx = headers.iter().position(|h| h == name).ok_or_else(|| {
        Failure::Invalid(format!("{}: missing column '{name}'", path.display()))
    })?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record =
            record.map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
        out.push(record.get(idx).unwrap_or("").to_string());
    }
    Ok(out)
}
