//! Matrix execution, per-cell artifacts and replay.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::mpsc;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{AdversaryKind, AlgorithmSpec, EnvironmentSpec, ExperimentConfig};
use crate::cew::{self, CewDiagnostics};
use crate::elimination::{self, MisspecElimParams, StochElimParams};
use crate::env::{
    make_gap_misspecified, make_packing, packing, AdversarySpec, BanditEnv, InstanceSpec, MisspecifiedInstance,
    RewardSchedule,
};
use crate::error::{Error, Result};
use crate::ftrl::{self, LogdetOptions};
use crate::model::{ActionSet, RewardVector, RunRecord};
use crate::reduction::{self, PhasedEliminationOracle};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "BENCH_THREADS";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const FAILURES_FILE: &str = "failures.csv";
pub const RECORDS_DIR: &str = "records";

/// One row of `summary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub alg: String,
    pub env: String,
    pub d: usize,
    pub level: f64,
    pub seed: u64,
    pub final_regret: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "Cinf")]
    pub c_inf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRow {
    pub alg: String,
    pub env: String,
    pub d: usize,
    pub level: f64,
    pub seed: u64,
    pub error: String,
}

/// Everything needed to re-run one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayRecord {
    pub alg: String,
    pub env: String,
    pub level: f64,
    pub seed: u64,
    pub algorithm: AlgorithmSpec,
    pub algorithm_seed: u64,
    pub instance: InstanceSpec,
    /// True means, when regret is measured against a misspecified model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub misspecified: Option<MisspecifiedInstance>,
    pub final_regret: f64,
}

#[derive(Debug, Clone)]
pub struct MatrixReport {
    pub rows: Vec<SummaryRow>,
    pub failures: Vec<FailureRow>,
    pub summary_path: PathBuf,
    pub failures_path: PathBuf,
    pub threads: usize,
}

impl MatrixReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Debug, Clone)]
struct Cell {
    alg: usize,
    env: usize,
    level: f64,
    seed: u64,
}

/// First eight bytes of `SHA-256(master ‖ key)`.
pub fn derive_seed(master: u64, key: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(key.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

pub fn cell_key(alg: &str, env: &str, level: f64, seed: u64) -> String {
    format!("{alg}|{env}|{level}|{seed}")
}

/// Worker count: the configured value capped by `BENCH_THREADS`.
pub fn effective_threads(configured: Option<usize>) -> usize {
    let from_env = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|&n| n > 0);
    let default = std::thread::available_parallelism().map_or(1, |n| n.get());
    match (configured, from_env) {
        (Some(c), Some(e)) => c.min(e),
        (Some(c), None) => c,
        (None, Some(e)) => e,
        (None, None) => default,
    }
}

/// Runs every (algorithm × environment × level × seed) cell.
///
/// Writes `records/<cell>.csv` and `records/<cell>.json` per successful
/// cell, `summary.csv` and `failures.csv`. Output is independent of the
/// worker count.
pub fn run_matrix(config: &ExperimentConfig, out_dir: &Path, threads: usize) -> Result<MatrixReport> {
    config.validate()?;
    let records_dir = out_dir.join(RECORDS_DIR);
    fs::create_dir_all(&records_dir)?;
    let mut cells = Vec::new();
    for alg in 0..config.algorithms.len() {
        for env in 0..config.environments.len() {
            for &level in &config.levels {
                for &seed in &config.seeds {
                    cells.push(Cell { alg, env, level, seed });
                }
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let (tx, rx) = mpsc::channel();
    pool.install(|| {
        cells.par_iter().enumerate().for_each_with(tx, |tx, (i, cell)| {
            let outcome = run_cell(config, cell, &records_dir);
            // the receiver outlives the pool
            let _ = tx.send((i, outcome));
        });
    });
    let mut outcomes: Vec<(usize, Result<SummaryRow>)> = rx.into_iter().collect();
    outcomes.sort_by_key(|(i, _)| *i);

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (i, outcome) in outcomes {
        match outcome {
            Ok(row) => rows.push(row),
            Err(e) => {
                let cell = &cells[i];
                failures.push(FailureRow {
                    alg: config.algorithms[cell.alg].label(),
                    env: config.environments[cell.env].label(),
                    d: config.environments[cell.env].spec.dim(),
                    level: cell.level,
                    seed: cell.seed,
                    error: e.to_string(),
                });
            }
        }
    }
    let summary_path = out_dir.join(SUMMARY_FILE);
    let failures_path = out_dir.join(FAILURES_FILE);
    write_rows(&summary_path, &rows, "alg,env,d,level,seed,final_regret,C,Cinf")?;
    write_rows(&failures_path, &failures, "alg,env,d,level,seed,error")?;
    Ok(MatrixReport {
        rows,
        failures,
        summary_path,
        failures_path,
        threads,
    })
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T], header: &str) -> Result<()> {
    if rows.is_empty() {
        fs::write(path, format!("{header}\n"))?;
        return Ok(());
    }
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

fn file_stem(alg: &str, env: &str, level: f64, seed: u64) -> String {
    format!("{alg}__{env}__L{level}__s{seed}")
}

fn run_cell(config: &ExperimentConfig, cell: &Cell, records_dir: &Path) -> Result<SummaryRow> {
    let alg = &config.algorithms[cell.alg];
    let env = &config.environments[cell.env];
    let (alg_label, env_label) = (alg.label(), env.label());
    let key = cell_key(&alg_label, &env_label, cell.level, cell.seed);
    let env_seed = derive_seed(config.master_seed, &format!("{key}#env"));
    let algorithm_seed = derive_seed(config.master_seed, &format!("{key}#alg"));
    let (instance, misspecified) = build_instance(&env.spec, cell.level, config.horizon, env_seed)?;
    let mut replay = ReplayRecord {
        alg: alg_label.clone(),
        env: env_label.clone(),
        level: cell.level,
        seed: cell.seed,
        algorithm: alg.spec.clone(),
        algorithm_seed,
        instance,
        misspecified,
        final_regret: f64::NAN,
    };
    let outcome = execute(&replay)?;
    replay.final_regret = outcome.row.final_regret;

    let stem = file_stem(&alg_label, &env_label, cell.level, cell.seed);
    let mut record = outcome.record;
    record.push_metadata("alg", &alg_label);
    record.push_metadata("env", &env_label);
    record.push_metadata("level", cell.level);
    record.push_metadata("C", outcome.row.c);
    record.push_metadata("Cinf", outcome.row.c_inf);
    record.write_csv(fs::File::create(records_dir.join(format!("{stem}.csv")))?)?;
    fs::write(records_dir.join(format!("{stem}.json")), serde_json::to_string_pretty(&replay)?)?;
    if let Some(diag) = outcome.diagnostics {
        CewDiagnostics::write_csv(&diag, fs::File::create(records_dir.join(format!("{stem}.diag.csv")))?)?;
    }
    Ok(outcome.row)
}

/// Result of running one cell's algorithm.
#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub row: SummaryRow,
    pub record: RunRecord,
    pub diagnostics: Option<Vec<CewDiagnostics>>,
}

/// Runs the algorithm of a replay record against its instance.
pub fn execute(replay: &ReplayRecord) -> Result<CellOutcome> {
    let mut env = replay.instance.build()?;
    let d = env.actions().dim();
    let level = replay.level;
    let mut rng = ChaCha8Rng::seed_from_u64(replay.algorithm_seed);
    let mut diagnostics = None;
    let record = match &replay.algorithm {
        AlgorithmSpec::StochElim {
            z_scale,
            delta,
            epoch_scale,
        } => {
            let mut params = StochElimParams::new(level * z_scale.factor(d), *delta);
            params.epoch_scale = *epoch_scale;
            elimination::stoch_elim_run(&mut env, &params, &mut rng)?.record
        }
        AlgorithmSpec::MisspecElim { delta, m1_multiplier } => {
            let mut params = MisspecElimParams::new(*delta);
            params.m1_multiplier = *m1_multiplier;
            elimination::misspec_elim_run(&mut env, &params)?.record
        }
        AlgorithmSpec::LogdetFtrl { c_inf, delta } => {
            ftrl::logdet_run(&mut env, c_inf.unwrap_or(level), *delta, LogdetOptions::default(), &mut rng)?.record
        }
        AlgorithmSpec::Cew { c, mc_samples, delta } => {
            let run = cew::cew_run(&mut env, c.unwrap_or(level), *delta, *mc_samples, &mut rng)?;
            diagnostics = Some(run.diagnostics);
            run.record
        }
        AlgorithmSpec::Reduction {
            oracle,
            rho,
            delta,
            doubling,
        } => {
            if oracle != "stoch_elim" {
                return Err(Error::Config(format!("unknown oracle `{oracle}`")));
            }
            let rho = rho.or(replay.instance.rho).unwrap_or(level);
            let mut oracle = PhasedEliminationOracle::for_actions(env.actions(), rng.gen());
            if *doubling {
                reduction::reduce_and_run_doubling(&mut oracle, &mut env, rho, *delta)?
            } else {
                reduction::reduce_and_run(&mut oracle, &mut env, rho, *delta)?
            }
        }
    };
    let ledger = env.ledger().summary();
    let final_regret = match &replay.misspecified {
        Some(m) => m.regret(&record),
        None => record.final_regret(),
    };
    Ok(CellOutcome {
        row: SummaryRow {
            alg: replay.alg.clone(),
            env: replay.env.clone(),
            d,
            level,
            seed: replay.seed,
            final_regret,
            c: ledger.c,
            c_inf: ledger.c_inf,
        },
        record,
        diagnostics,
    })
}

/// Re-runs a cell from its JSON record.
pub fn replay(record: &ReplayRecord) -> Result<CellOutcome> {
    execute(record)
}

pub fn read_replay(path: &Path) -> Result<ReplayRecord> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn sphere_instance(d: usize, n: usize, theta_norm: f64, seed: u64) -> Result<(ActionSet, RewardVector)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = |rng: &mut ChaCha8Rng| loop {
        let v = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = v.norm();
        if norm > 1e-12 {
            return v / norm;
        }
    };
    let actions = ActionSet::new((0..n).map(|_| unit(&mut rng)).collect())?;
    let theta = RewardVector::new(unit(&mut rng) * theta_norm.min(1.0), &actions)?;
    Ok((actions, theta))
}

/// Instance for one cell: geometry from the environment's `instance_seed`,
/// noise stream from the cell seed.
pub fn build_instance(
    spec: &EnvironmentSpec,
    level: f64,
    horizon: usize,
    env_seed: u64,
) -> Result<(InstanceSpec, Option<MisspecifiedInstance>)> {
    match spec {
        EnvironmentSpec::Sphere {
            d,
            n_actions,
            adversary,
            profile,
            noise,
            theta_norm,
            instance_seed,
        } => {
            let (actions, theta) = sphere_instance(*d, *n_actions, *theta_norm, *instance_seed)?;
            let (budget, cap, profile) = (level, 1.0, *profile);
            let adversary = match adversary {
                AdversaryKind::None => AdversarySpec::None,
                AdversaryKind::Weak => AdversarySpec::Weak { budget, cap, profile },
                AdversaryKind::Strong => AdversarySpec::Strong { budget, cap, profile },
                AdversaryKind::StrongAdaptive => AdversarySpec::StrongAdaptive { budget, cap, profile },
            };
            Ok((
                InstanceSpec {
                    actions,
                    schedule: RewardSchedule::Fixed { theta },
                    adversary,
                    noise: *noise,
                    horizon,
                    seed: env_seed,
                    rho: None,
                    omniscient: true,
                },
                None,
            ))
        }
        EnvironmentSpec::Misspecified {
            d,
            n_actions,
            deviation,
            noise,
            theta_norm,
            instance_seed,
        } => {
            let (actions, theta) = sphere_instance(*d, *n_actions, *theta_norm, *instance_seed)?;
            let inst = make_gap_misspecified(&actions, &theta, level, *deviation)?;
            Ok((misspecified_spec(&inst, *noise, horizon, env_seed), Some(inst)))
        }
        EnvironmentSpec::Packing {
            d,
            n_actions,
            noise,
            instance_seed,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*instance_seed);
            let p = make_packing(*d, *n_actions, horizon, level, &mut rng, packing::DEFAULT_ATTEMPTS)?;
            Ok((misspecified_spec(&p.instance, *noise, horizon, env_seed), Some(p.instance)))
        }
    }
}

fn misspecified_spec(inst: &MisspecifiedInstance, noise: f64, horizon: usize, seed: u64) -> InstanceSpec {
    InstanceSpec {
        actions: inst.actions.clone(),
        schedule: RewardSchedule::Fixed {
            theta: inst.theta.clone(),
        },
        adversary: AdversarySpec::Deviation {
            deviations: inst.deviations.clone(),
        },
        noise,
        horizon,
        seed,
        rho: Some(inst.rho),
        omniscient: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_stable_and_key_dependent() {
        let a = derive_seed(7, "stoch_elim|sphere_d2|0|1");
        assert_eq!(a, derive_seed(7, "stoch_elim|sphere_d2|0|1"));
        assert_ne!(a, derive_seed(8, "stoch_elim|sphere_d2|0|1"));
        assert_ne!(a, derive_seed(7, "stoch_elim|sphere_d2|0|2"));
    }

    #[test]
    fn cell_key_format() {
        assert_eq!(cell_key("a", "e", 0.5, 3), "a|e|0.5|3");
        assert_eq!(file_stem("a", "e", 64.0, 3), "a__e__L64__s3");
    }

    #[test]
    fn sphere_instance_is_valid() {
        let (acts, theta) = sphere_instance(3, 10, 1.0, 5).unwrap();
        assert_eq!(acts.len(), 10);
        assert!(acts.iter().all(|a| (a.norm() - 1.0).abs() < 1e-12));
        assert!((theta.theta().norm() - 1.0).abs() < 1e-12);
        let (again, _) = sphere_instance(3, 10, 1.0, 5).unwrap();
        assert_eq!(acts, again);
    }
}
