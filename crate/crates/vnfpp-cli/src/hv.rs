//! `vnfpp hv`: score archive CSVs with the hypervolume indicator in one
//! shared normalized objective space, so archives from different commands
//! and runs are comparable.

use std::path::PathBuf;

use clap::Args;

use crate::common::{self, Failure};
use crate::optimize::{scored_fronts, write_hv_csv};

#[derive(Debug, Args)]
pub struct HvArgs {
    /// Archive CSVs (shared schema) scored against each other
    #[arg(required = true)]
    pub archives: Vec<PathBuf>,
    /// Output CSV (default: <out-dir>/hv.csv)
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

pub fn run(args: HvArgs) -> Result<(), Failure> {
    let fronts: Vec<Vec<Vec<f64>>> = args
        .archives
        .iter()
        .map(|path| common::read_objective_rows(path))
        .collect::<Result<_, _>>()?;
    let names: Vec<String> = args
        .archives
        .iter()
        .map(|p| {
            p.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string())
        })
        .collect();

    let scored = scored_fronts(&fronts);
    let rows: Vec<(String, usize, usize, f64, String)> = names
        .iter()
        .zip(&scored)
        .map(|(name, (points, discarded, hv, note))| {
            (name.clone(), *points, *discarded, *hv, note.clone())
        })
        .collect();

    let out = match args.out {
        Some(p) => p,
        None => common::resolve_out_dir(args.out_dir)?.join("hv.csv"),
    };
    write_hv_csv(&out, &rows)?;
    for (name, points, discarded, hv, note) in &rows {
        let suffix = if note.is_empty() { String::new() } else { format!(" ({note})") };
        println!("{name}: hv {hv} ({points} points, {discarded} discarded){suffix}");
    }
    Ok(())
}
