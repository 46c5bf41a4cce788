//! `vnfpp heuristics`: solve a batch of subproblems with the baseline
//! placement heuristics and write archives comparable to `optimize` output.

use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use vnfpp::eval::Evaluator;
use vnfpp::heuristics::{
    generate_subproblems, solve_heuristic, HeuristicKind, Subproblem, SubproblemSource,
};
use vnfpp::qos::ProposedModel;
use vnfpp::rng::derive_seed;

use crate::common::{self, Failure, QosArgs, ARCHIVE_COLUMNS};

#[derive(Debug, Args)]
pub struct HeuristicsArgs {
    /// Instance file produced by `generate`
    #[arg(long)]
    pub instance: PathBuf,
    /// Heuristic(s) to run, comma-separated: bfdsu, stringer, esp-vdce
    #[arg(long, default_value = "bfdsu,stringer,esp-vdce", value_delimiter = ',')]
    pub heuristic: Vec<String>,
    /// How many subproblems to solve (default: 100, or every reference row)
    #[arg(long)]
    pub subproblems: Option<usize>,
    /// Where instance counts come from: the initializer gradient, or the
    /// `instance_counts` column of an archive CSV given via --reference-archive
    #[arg(long, default_value = "initializer")]
    pub source: String,
    #[arg(long)]
    pub reference_archive: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub qos: QosArgs,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

pub fn run(args: HeuristicsArgs) -> Result<(), Failure> {
    let instance = common::load_instance(&args.instance)?;
    let qos = args.qos.to_config()?;
    let out_dir = common::resolve_out_dir(args.out_dir)?;

    let kinds: Vec<HeuristicKind> = args
        .heuristic
        .iter()
        .map(|name| {
            HeuristicKind::from_name(name).ok_or_else(|| {
                Failure::Usage(format!(
                    "unknown heuristic '{name}' (expected bfdsu, stringer, or esp-vdce)"
                ))
            })
        })
        .collect::<Result<_, _>>()?;

    let subproblems: Vec<Subproblem<'_>> = match args.source.as_str() {
        "initializer" => {
            let count = args.subproblems.unwrap_or(100);
            generate_subproblems(&instance, count, SubproblemSource::Initializer)
                .map_err(|e| Failure::Invalid(e.to_string()))?
        }
        "reference" => {
            let path = args.reference_archive.as_ref().ok_or_else(|| {
                Failure::Usage("--source reference needs --reference-archive".into())
            })?;
            let column = common::read_string_column(path, "instance_counts")?;
            let mut counts = Vec::with_capacity(column.len());
            for (row, text) in column.iter().enumerate() {
                let parsed = common::parse_counts(text).ok_or_else(|| {
                    Failure::Invalid(format!(
                        "{}: row {row}: bad instance_counts '{text}'",
                        path.display()
                    ))
                })?;
                if parsed.len() != instance.services.len() {
                    return Err(Failure::Invalid(format!(
                        "{}: row {row}: {} counts for {} services",
                        path.display(),
                        parsed.len(),
                        instance.services.len()
                    )));
                }
                counts.push(parsed);
            }
            let take = args.subproblems.unwrap_or(counts.len());
            if take > counts.len() {
                return Err(Failure::Invalid(format!(
                    "reference archive has {} rows but {take} subproblems were requested",
                    counts.len()
                )));
            }
            counts
                .into_iter()
                .take(take)
                .map(|c| Subproblem { instance: &instance, counts: c })
                .collect()
        }
        other => {
            return Err(Failure::Usage(format!(
                "unknown source '{other}' (expected initializer or reference)"
            )))
        }
    };

    let model = ProposedModel { config: qos };
    for (h, &kind) in kinds.iter().enumerate() {
        let run_id = format!("{}-s{}", kind.name(), args.seed);
        let batch_seed = derive_seed(args.seed, h as u64);
        // (subproblem index, objectives, counts) for solved-and-scored rows;
        // failures carry their reason for the log.
        let solved: Vec<Result<(usize, Vec<f64>, Vec<usize>), (usize, String)>> = subproblems
            .par_iter()
            .enumerate()
            .map(|(i, subproblem)| {
                let phenotype = solve_heuristic(kind, subproblem, derive_seed(batch_seed, i as u64))
                    .map_err(|e| (i, e.to_string()))?;
                let objectives = model
                    .evaluate(&instance, &phenotype)
                    .map_err(|e| (i, e.to_string()))?;
                Ok((i, objectives, phenotype.instance_counts()))
            })
            .collect();

        let path = out_dir.join(format!("archive-{run_id}.csv"));
        let mut w = csv::Writer::from_path(&path).map_err(common::internal)?;
        let mut header: Vec<&str> = ARCHIVE_COLUMNS.to_vec();
        header.extend(["heuristic", "source", "subproblem", "instance_counts"]);
        w.write_record(&header).map_err(common::internal)?;
        let mut written = 0usize;
        let mut skipped = 0usize;
        for row in &solved {
            match row {
                Ok((i, objectives, counts)) => {
                    w.write_record([
                        run_id.clone(),
                        args.seed.to_string(),
                        i.to_string(),
                        objectives[0].to_string(),
                        objectives[1].to_string(),
                        objectives[2].to_string(),
                        kind.name().to_string(),
                        args.source.clone(),
                        i.to_string(),
                        common::join_counts(counts),
                    ])
                    .map_err(common::internal)?;
                    written += 1;
                }
                Err((i, reason)) => {
                    eprintln!("{}: subproblem {i} skipped: {reason}", kind.name());
                    skipped += 1;
                }
            }
        }
        w.flush().map_err(common::internal)?;
        println!(
            "{}: {written} solutions ({skipped} skipped) -> {}",
            kind.name(),
            path.display()
        );
    }
    Ok(())
}
