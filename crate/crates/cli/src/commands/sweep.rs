//! `sweep`: repeat the equalize attack over seeded (sample, target) pairs
//! for each requested Griffin-Lim depth, emitting a per-run detail CSV and
//! a per-depth aggregate CSV.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use undertone::{
    generate_thresholds, run_attack, stft, threshold_violation_count, AttackConfig, Error,
    KeywordDataset, PerturbationMode, Result, StftConfig, ToyKeywordModel,
    DEFAULT_VIOLATION_FACTOR,
};

use crate::common;

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Comma-separated Griffin-Lim depths to sweep.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
    pub k: Vec<usize>,

    /// Number of seeded (sample, target) pairs, shared across all depths.
    #[arg(long, default_value_t = 50)]
    pub pairs: usize,

    /// Master seed (dataset `seed`, training `seed + 1`, pairs `seed + 2`).
    #[arg(long, default_value_t = 7)]
    pub seed: u64,

    /// Step scale in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    pub epsilon: f64,

    /// Iteration budget per attack.
    #[arg(long, default_value_t = 1000)]
    pub max_iters: usize,

    /// Where to write per-run rows.
    #[arg(long, value_name = "CSV")]
    pub detail: PathBuf,

    /// Where to write per-depth aggregates.
    #[arg(long, value_name = "CSV")]
    pub aggregate: PathBuf,

    /// Attack jobs run concurrently on this many threads (0 = all cores).
    /// Output order and bytes do not depend on the thread count.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,

    /// Analysis frame length in samples (power of two).
    #[arg(long, default_value_t = 256)]
    pub frame_len: usize,

    /// Analysis hop in samples.
    #[arg(long, default_value_t = 64)]
    pub hop: usize,
}

/// One attack result, in detail-CSV column order.
struct DetailRow {
    k: usize,
    sample_id: usize,
    target: usize,
    success: bool,
    iterations: usize,
    snr_db: f64,
    violations: usize,
}

/// Draws `count` (sample, target) pairs with the target never equal to the
/// clip's true label.
fn sample_pairs(dataset: &KeywordDataset, count: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let sample_id = rng.random_range(0..dataset.len());
            let offset = rng.random_range(1..dataset.n_classes);
            let target = (dataset.labels[sample_id] + offset) % dataset.n_classes;
            (sample_id, target)
        })
        .collect()
}

fn run_one(
    model: &ToyKeywordModel,
    dataset: &KeywordDataset,
    stft_config: &StftConfig,
    args: &SweepArgs,
    k: usize,
    sample_id: usize,
    target: usize,
) -> Result<DetailRow> {
    let x = &dataset.clips[sample_id];
    let config = AttackConfig {
        epsilon: args.epsilon,
        griffin_lim_iters: k,
        max_iters: args.max_iters,
        mode: PerturbationMode::EqualizeViolating,
        stft: stft_config.clone(),
    };
    let outcome = run_attack(model, x, target, &config)?;
    let spec = stft(x, stft_config)?;
    let thresholds = generate_thresholds(&spec.magnitude(), x.sample_rate(), stft_config)?;
    let violations = threshold_violation_count(
        x,
        &outcome.adversarial,
        &thresholds,
        stft_config,
        DEFAULT_VIOLATION_FACTOR,
    )?;
    Ok(DetailRow {
        k,
        sample_id,
        target,
        success: outcome.success,
        iterations: outcome.iterations_used,
        snr_db: outcome.snr_db,
        violations,
    })
}

pub fn run(args: &SweepArgs) -> Result<u8> {
    if args.k.is_empty() {
        return Err(Error::InvalidParameter {
            name: "k",
            reason: "at least one depth is required".into(),
        });
    }
    if args.pairs == 0 {
        return Err(Error::InvalidParameter {
            name: "pairs",
            reason: "must be positive".into(),
        });
    }
    let (dataset, model) = common::train_default_model(args.seed)?;
    let stft_config = common::stft_config(args.frame_len, args.hop)?;
    let pairs = sample_pairs(&dataset, args.pairs, args.seed.wrapping_add(2));

    let jobs: Vec<(usize, usize, usize)> = args
        .k
        .iter()
        .flat_map(|&k| pairs.iter().map(move |&(id, target)| (k, id, target)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| Error::InvalidParameter {
            name: "jobs",
            reason: e.to_string(),
        })?;
    // Jobs are pure; collecting preserves order, so the CSVs are
    // byte-identical for any thread count.
    let rows: Vec<DetailRow> = pool.install(|| {
        jobs.par_iter()
            .map(|&(k, id, target)| {
                run_one(&model, &dataset, &stft_config, args, k, id, target)
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut detail = String::from("k,sample_id,target,success,iterations,snr_db,violations\n");
    for row in &rows {
        let _ = writeln!(
            detail,
            "{},{},{},{},{},{},{}",
            row.k, row.sample_id, row.target, row.success, row.iterations, row.snr_db,
            row.violations,
        );
    }
    common::write_file(&args.detail, detail)?;

    let mut aggregate = String::from("k,success_rate,mean_iterations\n");
    for &k in &args.k {
        let (rate, mean) = aggregate_for(&rows, k);
        let _ = writeln!(aggregate, "{k},{rate},{mean}");
    }
    common::write_file(&args.aggregate, aggregate)?;

    Ok(0)
}

/// Success rate over all runs at depth `k`, and mean iterations over its
/// successful runs (NaN when none succeeded).
fn aggregate_for(rows: &[DetailRow], k: usize) -> (f64, f64) {
    let at_k: Vec<&DetailRow> = rows.iter().filter(|r| r.k == k).collect();
    let successes: Vec<&&DetailRow> = at_k.iter().filter(|r| r.success).collect();
    let rate = successes.len() as f64 / at_k.len() as f64;
    let mean = successes.iter().map(|r| r.iterations as f64).sum::<f64>()
        / successes.len() as f64;
    (rate, mean)
}
