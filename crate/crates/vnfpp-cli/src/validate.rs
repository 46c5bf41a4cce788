//! `vnfpp validate`: cross-check the analytical models against the packet
//! simulator. Samples random placements, keeps the lowest-latency,
//! lowest-loss, lowest-energy, and best-balanced ones, then sweeps arrival
//! scale factors and reports each model's prediction next to the simulator's
//! confidence interval.

use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use vnfpp::des::{simulate, SimConfig};
use vnfpp::encoding::{decode, Genotype, Phenotype};
use vnfpp::eval::{EvalError, Evaluator};
use vnfpp::qos::{service_latency, service_packet_loss, total_energy, ProposedModel, QosError};
use vnfpp::rng::{derive_seed, rng_from_seed};
use vnfpp::surrogates::{Mm1Model, Mm1bInstantModel};
use vnfpp::workload::ProblemInstance;

use crate::common::{self, Failure, QosArgs, ARCHIVE_COLUMNS};

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Instance file produced by `generate`
    #[arg(long)]
    pub instance: PathBuf,
    /// Size of the random candidate set the four solutions are picked from
    #[arg(long, default_value_t = 200)]
    pub candidates: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Arrival-rate scale factors to sweep
    #[arg(long, default_value = "0.5,1.0,1.5", value_delimiter = ',')]
    pub scale: Vec<f64>,
    /// Simulator warmup period (ms)
    #[arg(long, default_value_t = 1000.0)]
    pub warmup: f64,
    /// Simulator measurement window (ms)
    #[arg(long, default_value_t = 10_000.0)]
    pub measure: f64,
    #[arg(long, default_value_t = 10)]
    pub replications: usize,
    /// Simulator master seed (default: derived from --seed)
    #[arg(long)]
    pub sim_seed: Option<u64>,
    #[command(flatten)]
    pub qos: QosArgs,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

struct Candidate {
    id: usize,
    phenotype: Phenotype,
    objectives: Vec<f64>,
}

/// Mean latency/loss over services plus total energy, with a convergence
/// flag: a capped fixed-point iteration still yields its best estimate.
fn predict(
    evaluator: &dyn Evaluator,
    instance: &ProblemInstance,
    phenotype: &Phenotype,
) -> ([f64; 3], bool) {
    match evaluator.evaluate(instance, phenotype) {
        Ok(v) => ([v[0], v[1], v[2]], true),
        Err(EvalError::Qos(QosError::NonConvergence { state, .. })) => {
            let count = instance.services.len() as f64;
            let latency = instance
                .services
                .iter()
                .map(|s| service_latency(&state, instance, phenotype, s.id))
                .sum::<f64>()
                / count;
            let loss = instance
                .services
                .iter()
                .map(|s| service_packet_loss(&state, phenotype, s.id))
                .sum::<f64>()
                / count;
            let energy = total_energy(&state, instance, phenotype);
            ([latency, loss, energy], false)
        }
    }
}

fn scaled_instance(instance: &ProblemInstance, scale: f64) -> ProblemInstance {
    let mut scaled = instance.clone();
    for service in &mut scaled.services {
        service.arrival_rate *= scale;
    }
    scaled
}

/// The four representative solutions: per-objective minima plus the
/// candidate closest (normalized Chebyshev distance) to the ideal point.
fn select_solutions(candidates: &[Candidate]) -> Vec<(&'static str, usize)> {
    let argmin_by = |key: &dyn Fn(&Candidate) -> f64| {
        candidates
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| key(a).total_cmp(&key(b)))
            .expect("candidate set is nonempty")
            .0
    };
    let ideal: Vec<f64> = (0..3)
        .map(|j| candidates.iter().map(|c| c.objectives[j]).fold(f64::INFINITY, f64::min))
        .collect();
    let nadir: Vec<f64> = (0..3)
        .map(|j| {
            candidates.iter().map(|c| c.objectives[j]).fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let balance = |c: &Candidate| {
        (0..3)
            .map(|j| {
                let range = nadir[j] - ideal[j];
                if range > 0.0 {
                    (c.objectives[j] - ideal[j]) / range
                } else {
                    0.0
                }
            })
            .fold(0.0f64, f64::max)
    };
    vec![
        ("lowest-latency", argmin_by(&|c| c.objectives[0])),
        ("lowest-loss", argmin_by(&|c| c.objectives[1])),
        ("lowest-energy", argmin_by(&|c| c.objectives[2])),
        ("best-balanced", argmin_by(&balance)),
    ]
}

pub fn run(args: ValidateArgs) -> Result<(), Failure> {
    let instance = common::load_instance(&args.instance)?;
    let qos = args.qos.to_config()?;
    let out_dir = common::resolve_out_dir(args.out_dir)?;
    if args.candidates == 0 {
        return Err(Failure::Usage("--candidates must be at least 1".into()));
    }
    if args.scale.is_empty() || args.scale.iter().any(|&s| !(s > 0.0)) {
        return Err(Failure::Usage("--scale factors must be positive".into()));
    }
    if args.replications == 0 {
        return Err(Failure::Usage("--replications must be at least 1".into()));
    }

    // Sample and score the candidate set at the base scale.
    let num_services = instance.services.len();
    let mut rng = rng_from_seed(args.seed);
    let genotypes: Vec<Genotype> = (0..args.candidates)
        .map(|_| {
            use rand::Rng;
            let slots = (0..instance.topology.num_vms())
                .map(|_| {
                    let marker = rng.gen_range(0..=num_services);
                    (marker < num_services).then_some(marker)
                })
                .collect();
            Genotype { slots }
        })
        .collect();
    let model = ProposedModel { config: qos };
    let scored: Vec<Option<Candidate>> = genotypes
        .par_iter()
        .enumerate()
        .map(|(id, genotype)| {
            let phenotype = decode(genotype, &instance).ok()?;
            let objectives = model.evaluate(&instance, &phenotype).ok()?;
            Some(Candidate { id, phenotype, objectives })
        })
        .collect();
    let skipped = scored.iter().filter(|c| c.is_none()).count();
    if skipped > 0 {
        eprintln!("{skipped} of {} candidates skipped (evaluation failed)", args.candidates);
    }
    let candidates: Vec<Candidate> = scored.into_iter().flatten().collect();
    if candidates.is_empty() {
        return Err(Failure::Invalid("no candidate evaluated successfully".into()));
    }

    let run_id = format!("validate-s{}", args.seed);
    let candidates_path = out_dir.join("candidates.csv");
    {
        let mut w = csv::Writer::from_path(&candidates_path).map_err(common::internal)?;
        let mut header: Vec<&str> = ARCHIVE_COLUMNS.to_vec();
        header.push("instance_counts");
        w.write_record(&header).map_err(common::internal)?;
        for c in &candidates {
            w.write_record([
                run_id.clone(),
                args.seed.to_string(),
                c.id.to_string(),
                c.objectives[0].to_string(),
                c.objectives[1].to_string(),
                c.objectives[2].to_string(),
                common::join_counts(&c.phenotype.instance_counts()),
            ])
            .map_err(common::internal)?;
        }
        w.flush().map_err(common::internal)?;
    }

    let solutions = select_solutions(&candidates);
    let models: [(&str, Box<dyn Evaluator>); 3] = [
        ("proposed", Box::new(model.clone())),
        ("mm1", Box::new(Mm1Model)),
        ("mm1b-instant", Box::new(Mm1bInstantModel)),
    ];
    let sim_base = args.sim_seed.unwrap_or_else(|| derive_seed(args.seed, 0x51b));

    let validation_path = out_dir.join("validation.csv");
    let mut w = csv::Writer::from_path(&validation_path).map_err(common::internal)?;
    let mut header: Vec<&str> = ARCHIVE_COLUMNS.to_vec();
    header.extend([
        "solution",
        "model",
        "scale",
        "converged",
        "des_latency_ms",
        "des_latency_hw",
        "des_packet_loss",
        "des_loss_hw",
        "des_energy_w",
        "des_energy_hw",
    ]);
    w.write_record(&header).map_err(common::internal)?;

    // (model, |relative latency error|) pairs for the console summary.
    let mut latency_errors: Vec<(&str, f64)> = Vec::new();
    for (sol_idx, (label, candidate_idx)) in solutions.iter().enumerate() {
        let candidate = &candidates[*candidate_idx];
        for (scale_idx, &scale) in args.scale.iter().enumerate() {
            let scaled = scaled_instance(&instance, scale);
            let sim = simulate(
                &scaled,
                &candidate.phenotype,
                &SimConfig {
                    warmup_ms: args.warmup,
                    measure_ms: args.measure,
                    replications: args.replications,
                    seed: derive_seed(sim_base, (sol_idx * args.scale.len() + scale_idx) as u64),
                },
            );
            for (model_name, evaluator) in &models {
                let (pred, converged) = predict(evaluator.as_ref(), &scaled, &candidate.phenotype);
                if sim.latency_ms.mean > 0.0 && pred[0].is_finite() {
                    latency_errors.push((
                        model_name,
                        (pred[0] - sim.latency_ms.mean).abs() / sim.latency_ms.mean,
                    ));
                }
                w.write_record([
                    run_id.clone(),
                    args.seed.to_string(),
                    candidate.id.to_string(),
                    pred[0].to_string(),
                    pred[1].to_string(),
                    pred[2].to_string(),
                    label.to_string(),
                    model_name.to_string(),
                    scale.to_string(),
                    converged.to_string(),
                    sim.latency_ms.mean.to_string(),
                    sim.latency_ms.half_width.to_string(),
                    sim.packet_loss.mean.to_string(),
                    sim.packet_loss.half_width.to_string(),
                    sim.energy_w.mean.to_string(),
                    sim.energy_w.half_width.to_string(),
                ])
                .map_err(common::internal)?;
            }
        }
    }
    w.flush().map_err(common::internal)?;

    for (label, idx) in &solutions {
        let c = &candidates[*idx];
        println!(
            "{label}: candidate {} (latency {:.4} ms, loss {:.6}, energy {:.1} W)",
            c.id, c.objectives[0], c.objectives[1], c.objectives[2]
        );
    }
    for (model_name, _) in &models {
        let errs: Vec<f64> = latency_errors
            .iter()
            .filter(|(m, _)| m == model_name)
            .map(|&(_, e)| e)
            .collect();
        if !errs.is_empty() {
            println!(
                "{model_name}: mean |latency error| vs simulator {:.1}%",
                100.0 * errs.iter().sum::<f64>() / errs.len() as f64
            );
        }
    }
    println!("wrote {} and {}", candidates_path.display(), validation_path.display());
    Ok(())
}
