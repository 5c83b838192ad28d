//! Shared plumbing for the subcommands: the default model recipe, seed
//! layout, and small file helpers.

use std::path::Path;

use undertone::{
    build_keyword_dataset, train_toy, Error, KeywordDataset, Result, StftConfig,
    ToyKeywordModel, TrainConfig, Window,
};

/// Classes in the default synthetic dataset.
pub const DEFAULT_CLASSES: usize = 4;

/// Clips per class in the default synthetic dataset.
pub const DEFAULT_PER_CLASS: usize = 8;

/// Builds the default dataset and trains the toy model from one master
/// seed. Seed layout: `seed` builds the dataset, `seed + 1` initializes
/// training; `sweep` additionally draws its pairs from `seed + 2`.
pub fn train_default_model(seed: u64) -> Result<(KeywordDataset, ToyKeywordModel)> {
    let dataset = build_keyword_dataset(DEFAULT_CLASSES, DEFAULT_PER_CLASS, seed)?;
    let config = TrainConfig {
        seed: seed.wrapping_add(1),
        ..TrainConfig::default()
    };
    let model = train_toy(&dataset, &config)?;
    Ok((dataset, model))
}

/// Loads `--model` when given, otherwise trains the default model.
pub fn load_or_train(model: Option<&Path>, seed: u64) -> Result<ToyKeywordModel> {
    match model {
        Some(path) => ToyKeywordModel::load(path),
        None => train_default_model(seed).map(|(_, model)| model),
    }
}

/// Hann analysis configuration from the shared `--frame-len`/`--hop` flags.
pub fn stft_config(frame_len: usize, hop: usize) -> Result<StftConfig> {
    StftConfig::new(frame_len, hop, Window::Hann)
}

/// `std::fs::write` with the path attached to the error.
pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
