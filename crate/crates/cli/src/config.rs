//! `key = value` configuration files.
//!
//! One setting per line, `#` starts a comment, blank lines are ignored.
//! Unknown keys are rejected.

use learnpool_core::{Activation, TrainConfig};

use crate::error::{CliError, CliResult};

/// Every key accepted in a config file, in snapshot order.
pub const KEYS: &[&str] = &[
    "k",
    "w",
    "stride",
    "n",
    "p",
    "hidden",
    "t",
    "batch_size",
    "eta_pool",
    "eta_net",
    "phase1_examples",
    "phase2_examples",
    "val_check_interval",
    "trials",
    "seed",
    "eps_norm",
    "eps_zca",
    "sigma_floor",
    "kmeans_iters",
    "codebook_patches",
    "activation",
    "train_fraction",
    "synthetic",
    "synthetic_count",
    "cache_images",
    "norm_fit_images",
];

/// Keys that fix the shape of a trained model. A bundle can only be used
/// with a configuration that agrees on all of them.
pub const MODEL_KEYS: &[&str] = &["k", "w", "stride", "n", "p", "hidden", "t", "activation"];

pub fn preset(name: &str) -> Option<TrainConfig> {
    match name {
        "paper" => Some(TrainConfig::full_scale()),
        "desk" => Some(TrainConfig::desk()),
        _ => None,
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value.parse().map_err(|_| format!("invalid value {value:?} for {key}"))
}

fn parse_count(key: &str, value: &str) -> Result<usize, String> {
    match value {
        "all" | "max" => Ok(usize::MAX),
        _ => parse(key, value),
    }
}

/// Assigns one key. Errors carry no line number; callers add it.
pub fn set_key(cfg: &mut TrainConfig, key: &str, value: &str) -> Result<(), String> {
    match key {
        "k" => cfg.k = parse(key, value)?,
        "w" => cfg.w = parse(key, value)?,
        "stride" => cfg.stride = parse(key, value)?,
        "n" => cfg.n = parse(key, value)?,
        "p" => cfg.p = parse(key, value)?,
        "hidden" => cfg.hidden = parse(key, value)?,
        "t" => cfg.t = parse(key, value)?,
        "batch_size" => cfg.batch_size = parse(key, value)?,
        "eta_pool" => cfg.eta_pool = parse(key, value)?,
        "eta_net" => cfg.eta_net = parse(key, value)?,
        "phase1_examples" => cfg.phase1_examples = parse(key, value)?,
        "phase2_examples" => cfg.phase2_examples = parse(key, value)?,
        "val_check_interval" => cfg.val_check_interval = parse(key, value)?,
        "trials" => cfg.trials = parse(key, value)?,
        "seed" => cfg.seed = parse(key, value)?,
        "eps_norm" => cfg.eps_norm = parse(key, value)?,
        "eps_zca" => cfg.eps_zca = parse(key, value)?,
        "sigma_floor" => cfg.sigma_floor = parse(key, value)?,
        "kmeans_iters" => cfg.kmeans_iters = parse(key, value)?,
        "codebook_patches" => cfg.codebook_patches = parse(key, value)?,
        "activation" => {
            cfg.activation = Activation::from_name(value)
                .ok_or_else(|| format!("activation must be sigmoid or tanh, got {value:?}"))?
        }
        "train_fraction" => cfg.train_fraction = parse(key, value)?,
        "synthetic" => cfg.synthetic = parse(key, value)?,
        "synthetic_count" => cfg.synthetic_count = parse(key, value)?,
        "cache_images" => cfg.cache_images = parse_count(key, value)?,
        "norm_fit_images" => cfg.norm_fit_images = parse(key, value)?,
        _ => return Err(format!("unknown key {key:?}")),
    }
    Ok(())
}

pub fn get_key(cfg: &TrainConfig, key: &str) -> Option<String> {
    Some(match key {
        "k" => cfg.k.to_string(),
        "w" => cfg.w.to_string(),
        "stride" => cfg.stride.to_string(),
        "n" => cfg.n.to_string(),
        "p" => cfg.p.to_string(),
        "hidden" => cfg.hidden.to_string(),
        "t" => cfg.t.to_string(),
        "batch_size" => cfg.batch_size.to_string(),
        "eta_pool" => format!("{:?}", cfg.eta_pool),
        "eta_net" => format!("{:?}", cfg.eta_net),
        "phase1_examples" => cfg.phase1_examples.to_string(),
        "phase2_examples" => cfg.phase2_examples.to_string(),
        "val_check_interval" => cfg.val_check_interval.to_string(),
        "trials" => cfg.trials.to_string(),
        "seed" => cfg.seed.to_string(),
        "eps_norm" => format!("{:?}", cfg.eps_norm),
        "eps_zca" => format!("{:?}", cfg.eps_zca),
        "sigma_floor" => format!("{:?}", cfg.sigma_floor),
        "kmeans_iters" => cfg.kmeans_iters.to_string(),
        "codebook_patches" => cfg.codebook_patches.to_string(),
        "activation" => cfg.activation.name().to_string(),
        "train_fraction" => format!("{:?}", cfg.train_fraction),
        "synthetic" => cfg.synthetic.to_string(),
        "synthetic_count" => cfg.synthetic_count.to_string(),
        "cache_images" => cfg.cache_images.to_string(),
        "norm_fit_images" => cfg.norm_fit_images.to_string(),
        _ => return None,
    })
}

/// Applies a config file's settings on top of `base`.
pub fn apply_text(base: TrainConfig, text: &str) -> CliResult<TrainConfig> {
    let mut cfg = base;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| CliError::Config {
            line: i + 1,
            message: format!("expected `key = value`, got {line:?}"),
        })?;
        set_key(&mut cfg, key.trim(), value.trim()).map_err(|message| CliError::Config { line: i + 1, message })?;
    }
    Ok(cfg)
}

/// Full snapshot, one `key = value` per line in [`KEYS`] order. Parsing it
/// back with [`apply_text`] reproduces the configuration exactly.
pub fn to_text(cfg: &TrainConfig) -> String {
    KEYS.iter().map(|k| format!("{k} = {}\n", get_key(cfg, k).expect("listed key"))).collect()
}

/// Model-shape keys on which `a` and `b` disagree.
pub fn model_mismatches(a: &TrainConfig, b: &TrainConfig) -> Vec<String> {
    MODEL_KEYS
        .iter()
        .filter_map(|k| {
            let (x, y) = (get_key(a, k)?, get_key(b, k)?);
            (x != y).then(|| format!("{k}: bundle has {x}, requested {y}"))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_blank_lines_and_overrides() {
        let text = "# desk tweaks\n\nk = 8   # fewer codewords\nactivation=tanh\ncache_images = all\n";
        let cfg = apply_text(TrainConfig::desk(), text).unwrap();
        assert_eq!(cfg.k, 8);
        assert_eq!(cfg.activation, Activation::Tanh);
        assert_eq!(cfg.cache_images, usize::MAX);
        assert_eq!(cfg.hidden, TrainConfig::desk().hidden);
    }

    #[test]
    fn unknown_key_names_line() {
        match apply_text(TrainConfig::full_scale(), "k = 4\nhiden = 3\n") {
            Err(CliError::Config { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("hiden"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_value_and_missing_equals() {
        assert!(matches!(apply_text(TrainConfig::full_scale(), "k = four"), Err(CliError::Config { line: 1, .. })));
        assert!(matches!(apply_text(TrainConfig::full_scale(), "\nk 4"), Err(CliError::Config { line: 2, .. })));
    }

    #[test]
    fn snapshot_round_trips() {
        for cfg in [TrainConfig::full_scale(), TrainConfig::desk()] {
            let back = apply_text(TrainConfig::full_scale(), &to_text(&cfg)).unwrap();
            assert_eq!(back, cfg);
        }
    }

    #[test]
    fn every_key_is_settable() {
        let snapshot = to_text(&TrainConfig::desk());
        assert_eq!(snapshot.lines().count(), KEYS.len());
        assert!(model_mismatches(&TrainConfig::desk(), &TrainConfig::desk()).is_empty());
        let other = TrainConfig { k: 3, ..TrainConfig::desk() };
        assert_eq!(model_mismatches(&TrainConfig::desk(), &other).len(), 1);
    }
}
