//! `dataset`: materialize the synthetic keyword corpus as WAV files plus a
//! `labels.csv`, and optionally train and save a model checkpoint, so the
//! other subcommands have valid inputs from a cold start.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;

use undertone::{build_keyword_dataset, train_toy, write_wav, Error, Result, TrainConfig};

use crate::common;

#[derive(Debug, Args)]
pub struct DatasetArgs {
    /// Directory for the clip WAVs and labels.csv (created if missing).
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,

    /// Number of keyword classes.
    #[arg(long, default_value_t = common::DEFAULT_CLASSES)]
    pub classes: usize,

    /// Clips per class.
    #[arg(long, default_value_t = common::DEFAULT_PER_CLASS)]
    pub per_class: usize,

    /// Master seed (dataset `seed`, training `seed + 1`).
    #[arg(long, default_value_t = 7)]
    pub seed: u64,

    /// Also train the toy model on the clips and save a checkpoint here.
    #[arg(long, value_name = "CKPT")]
    pub model: Option<PathBuf>,
}

pub fn run(args: &DatasetArgs) -> Result<u8> {
    let dataset = build_keyword_dataset(args.classes, args.per_class, args.seed)?;
    std::fs::create_dir_all(&args.out_dir).map_err(|source| Error::Io {
        path: args.out_dir.clone(),
        source,
    })?;

    let mut labels = String::from("sample_id,filename,label\n");
    for (i, clip) in dataset.clips.iter().enumerate() {
        let filename = format!("clip_{i:03}.wav");
        write_wav(args.out_dir.join(&filename), clip)?;
        let _ = writeln!(labels, "{},{},{}", i, filename, dataset.labels[i]);
    }
    common::write_file(&args.out_dir.join("labels.csv"), labels)?;

    if let Some(checkpoint) = &args.model {
        let config = TrainConfig {
            seed: args.seed.wrapping_add(1),
            ..TrainConfig::default()
        };
        let model = train_toy(&dataset, &config)?;
        model.save(checkpoint)?;
    }
    Ok(0)
}
