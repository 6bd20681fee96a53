//! CIFAR-10 binary batch files.

use std::path::{Path, PathBuf};

use learnpool_core::dataset::{decode_cifar_records, ImageSample};

use crate::error::{CliError, CliResult};

pub const TRAIN_FILES: [&str; 5] =
    ["data_batch_1.bin", "data_batch_2.bin", "data_batch_3.bin", "data_batch_4.bin", "data_batch_5.bin"];

pub fn load_cifar_batch(path: &Path, n: usize, classes: usize) -> CliResult<Vec<ImageSample>> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode_cifar_records(&bytes, n, classes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Training batches present in `dir`, in file order.
pub fn training_files(dir: &Path) -> Vec<PathBuf> {
    TRAIN_FILES.iter().map(|f| dir.join(f)).filter(|p| p.is_file()).collect()
}

/// Loads every `data_batch_*.bin` in `dir`.
pub fn load_training_set(dir: &Path, n: usize, classes: usize) -> CliResult<Vec<ImageSample>> {
    let files = training_files(dir);
    if files.is_empty() {
        return Err(CliError::Data(format!("no CIFAR-10 training batches (data_batch_1.bin ..) in {}", dir.display())));
    }
    let mut all = Vec::new();
    for f in files {
        all.extend(load_cifar_batch(&f, n, classes)?);
    }
    Ok(all)
}
