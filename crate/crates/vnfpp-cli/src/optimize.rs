//! `vnfpp optimize`: run the evolutionary search once per
//! (representation, evaluator) pair, write each run's archive and
//! per-generation progress, and score all archives with the hypervolume
//! indicator in one shared normalized objective space.

use std::path::{Path, PathBuf};

use clap::Args;
use vnfpp::eval::Evaluator;
use vnfpp::evo::hv::{default_reference, hypervolume, NormalizationBounds};
use vnfpp::evo::nsga2::Nsga2;
use vnfpp::evo::{
    run_optimizer, OptimizerConfig, OptimizerResult, ProposedRepresentation, Representation,
    ScoredCandidate,
};
use vnfpp::heuristics::{BinaryRepresentation, DirectRepresentation};
use vnfpp::workload::ProblemInstance;

use crate::common::{self, CwtplArgs, Failure, QosArgs, ARCHIVE_COLUMNS};

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    /// Instance file produced by `generate`
    #[arg(long)]
    pub instance: PathBuf,
    /// Evaluator(s) driving the search, comma-separated:
    /// proposed, mm1, mm1b-instant, cwtpl, ru, plus
    #[arg(long, default_value = "proposed", value_delimiter = ',')]
    pub evaluator: Vec<String>,
    /// Representation(s), comma-separated: proposed, direct, binary
    #[arg(long, default_value = "proposed", value_delimiter = ',')]
    pub representation: Vec<String>,
    #[arg(long, default_value_t = 100)]
    pub population: usize,
    #[arg(long, default_value_t = 100)]
    pub generations: usize,
    #[arg(long, default_value_t = 0.9)]
    pub crossover: f64,
    /// Per-slot mutation probability (default: one expected change per genome)
    #[arg(long)]
    pub mutation: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub qos: QosArgs,
    #[command(flatten)]
    pub cwtpl: CwtplArgs,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

struct GenerationRow {
    generation: usize,
    feasible: usize,
    best: Vec<f64>,
}

struct RunOutput {
    run_id: String,
    result: OptimizerResult,
    progress: Vec<GenerationRow>,
}

fn dispatch_representation(
    name: &str,
    instance: &ProblemInstance,
    evaluator: &dyn Evaluator,
    config: &OptimizerConfig,
) -> Result<(OptimizerResult, Vec<GenerationRow>), Failure> {
    fn go<R: Representation>(
        representation: &R,
        instance: &ProblemInstance,
        evaluator: &dyn Evaluator,
        config: &OptimizerConfig,
    ) -> (OptimizerResult, Vec<GenerationRow>) {
        let objectives = evaluator.objective_count();
        let mut progress = Vec::with_capacity(config.generations + 1);
        let result = run_optimizer(
            instance,
            representation,
            evaluator,
            &Nsga2,
            config,
            |generation, population: &[ScoredCandidate]| {
                let feasible = population.iter().filter(|c| c.feasible).count();
                let best = (0..objectives)
                    .map(|j| {
                        population
                            .iter()
                            .map(|c| c.objectives[j])
                            .fold(f64::INFINITY, f64::min)
                    })
                    .collect();
                progress.push(GenerationRow { generation, feasible, best });
            },
        );
        (result, progress)
    }

    match name {
        "proposed" => Ok(go(&ProposedRepresentation, instance, evaluator, config)),
        "direct" => Ok(go(&DirectRepresentation, instance, evaluator, config)),
        "binary" => Ok(go(&BinaryRepresentation, instance, evaluator, config)),
        other => Err(Failure::Usage(format!(
            "unknown representation '{other}' (expected proposed, direct, or binary)"
        ))),
    }
}

fn write_archive(
    path: &Path,
    run_id: &str,
    seed: u64,
    evaluator: &str,
    representation: &str,
    result: &OptimizerResult,
) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path).map_err(common::internal)?;
    let mut header: Vec<&str> = ARCHIVE_COLUMNS.to_vec();
    header.extend(["evaluator", "representation", "instance_counts", "driving"]);
    w.write_record(&header).map_err(common::internal)?;
    for (i, entry) in result.archive.iter().enumerate() {
        w.write_record([
            run_id.to_string(),
            seed.to_string(),
            i.to_string(),
            entry.objectives[0].to_string(),
            entry.objectives[1].to_string(),
            entry.objectives[2].to_string(),
            evaluator.to_string(),
            representation.to_string(),
            common::join_counts(&entry.phenotype.instance_counts()),
            common::join_objectives(&entry.driving_objectives),
        ])
        .map_err(common::internal)?;
    }
    w.flush().map_err(common::internal)?;
    Ok(())
}

fn write_progress(
    path: &Path,
    run_id: &str,
    seed: u64,
    objective_names: &[&str],
    rows: &[GenerationRow],
) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path).map_err(common::internal)?;
    let mut header = vec!["run".to_string(), "seed".to_string(), "generation".to_string(),
        "feasible".to_string()];
    header.extend(objective_names.iter().map(|n| format!("best_{n}")));
    w.write_record(&header).map_err(common::internal)?;
    for row in rows {
        let mut record = vec![
            run_id.to_string(),
            seed.to_string(),
            row.generation.to_string(),
            row.feasible.to_string(),
        ];
        record.extend(row.best.iter().map(|v| v.to_string()));
        w.write_record(&record).map_err(common::internal)?;
    }
    w.flush().map_err(common::internal)?;
    Ok(())
}

/// Normalize all fronts together and score each against the shared
/// reference point. Returns `(points, discarded, hv, note)` per front.
pub fn scored_fronts(fronts: &[Vec<Vec<f64>>]) -> Vec<(usize, usize, f64, String)> {
    let slices: Vec<&[Vec<f64>]> = fronts.iter().map(|f| f.as_slice()).collect();
    let bounds = NormalizationBounds::from_fronts(&slices);
    let reference = default_reference(3);
    fronts
        .iter()
        .map(|front| {
            if front.is_empty() {
                return (0, 0, 0.0, "no feasible solutions".to_string());
            }
            let Some(bounds) = &bounds else {
                return (front.len(), front.len(), 0.0, "no finite points".to_string());
            };
            let normalized = bounds.normalize(front);
            let hv = hypervolume(&normalized, &reference);
            (front.len(), hv.discarded, hv.value, String::new())
        })
        .collect()
}

pub fn write_hv_csv(
    path: &Path,
    rows: &[(String, usize, usize, f64, String)],
) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path).map_err(common::internal)?;
    w.write_record(["run", "points", "discarded", "hv", "note"]).map_err(common::internal)?;
    for (run, points, discarded, hv, note) in rows {
        w.write_record([
            run.clone(),
            points.to_string(),
            discarded.to_string(),
            hv.to_string(),
            note.clone(),
        ])
        .map_err(common::internal)?;
    }
    w.flush().map_err(common::internal)?;
    Ok(())
}

pub fn run(args: OptimizeArgs) -> Result<(), Failure> {
    let instance = common::load_instance(&args.instance)?;
    let qos = args.qos.to_config()?;
    let cwtpl = args.cwtpl.to_params();
    let out_dir = common::resolve_out_dir(args.out_dir)?;
    if args.population < 2 {
        return Err(Failure::Usage("--population must be at least 2".into()));
    }
    if !(0.0..=1.0).contains(&args.crossover) {
        return Err(Failure::Usage("--crossover must be in [0, 1]".into()));
    }
    if let Some(m) = args.mutation {
        if !(0.0..=1.0).contains(&m) {
            return Err(Failure::Usage("--mutation must be in [0, 1]".into()));
        }
    }

    let config = OptimizerConfig {
        population_size: args.population,
        generations: args.generations,
        crossover_rate: args.crossover,
        mutation_rate: args.mutation,
        seed: args.seed,
        rescore_config: qos,
    };

    let mut runs: Vec<RunOutput> = Vec::new();
    for rep_name in &args.representation {
        for eval_name in &args.evaluator {
            let evaluator = common::make_evaluator(eval_name, qos, cwtpl)?;
            let run_id = format!("{rep_name}-{eval_name}-s{}", args.seed);
            let (result, progress) =
                dispatch_representation(rep_name, &instance, evaluator.as_ref(), &config)?;
            write_archive(
                &out_dir.join(format!("archive-{run_id}.csv")),
                &run_id,
                args.seed,
                eval_name,
                rep_name,
                &result,
            )?;
            write_progress(
                &out_dir.join(format!("generations-{run_id}.csv")),
                &run_id,
                args.seed,
                &evaluator.objective_names(),
                &progress,
            )?;
            runs.push(RunOutput { run_id, result, progress });
        }
    }

    let fronts: Vec<Vec<Vec<f64>>> = runs
        .iter()
        .map(|r| r.result.archive.iter().map(|e| e.objectives.clone()).collect())
        .collect();
    let scored = scored_fronts(&fronts);
    let hv_rows: Vec<(String, usize, usize, f64, String)> = runs
        .iter()
        .zip(&scored)
        .map(|(run, (points, discarded, hv, note))| {
            (run.run_id.clone(), *points, *discarded, *hv, note.clone())
        })
        .collect();
    write_hv_csv(&out_dir.join("hv.csv"), &hv_rows)?;

    for (run, (points, _, hv, note)) in runs.iter().zip(&scored) {
        let feasible_final = run.progress.last().map_or(0, |r| r.feasible);
        let suffix = if note.is_empty() { String::new() } else { format!(" ({note})") };
        println!(
            "{}: {} generations, {} archive solutions, {} feasible in final population, hv {}{}",
            run.run_id, run.result.generations_run, points, feasible_final, hv, suffix
        );
    }
    println!("outputs in {}", out_dir.display());
    Ok(())
}
