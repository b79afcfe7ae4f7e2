//! Runs an experiment matrix from TOML, fits regret-vs-corruption slopes
//! and replays one cell. Pass a config path to use your own.

use std::path::PathBuf;

use robustlb::harness::{self, ExperimentConfig};

fn main() -> robustlb::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/configs/scaling.toml"));
    let cfg = ExperimentConfig::from_path(&path)?;
    let out = std::env::temp_dir().join("robustlb_harness_example");
    let threads = harness::effective_threads(cfg.threads);
    let report = harness::run_matrix(&cfg, &out, threads)?;
    println!("{} cells, {} failures, {threads} threads -> {}", report.rows.len(), report.failures.len(), out.display());
    print!("{}", harness::fit_scaling(&report.rows, &["d", "alg"])?);

    let row = &report.rows[0];
    let stem = format!("{}__{}__L{}__s{}", row.alg, row.env, row.level, row.seed);
    let rec = harness::read_replay(&out.join("records").join(format!("{stem}.json")))?;
    let again = harness::replay(&rec)?;
    println!("replayed {stem}: {} (recorded {})", again.row.final_regret, rec.final_regret);
    Ok(())
}
