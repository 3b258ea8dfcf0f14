use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ClassifierModel;
use crate::error::{Error, Result};

/// Both encodings of one training function.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionExample {
    pub project: String,
    pub label: usize,
    /// Code-only ids.
    pub co: Vec<u32>,
    /// Code-description ids (equal to `co` when the project has no description).
    pub cd: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct FitOutcome {
    /// Snapshot with the best validation accuracy.
    pub model: ClassifierModel,
    /// 0-based index of the returned epoch.
    pub best_epoch: usize,
    pub epoch_losses: Vec<f64>,
    /// Function-level validation accuracy after each epoch (NaN without a
    /// validation set).
    pub validation_accuracies: Vec<f64>,
    pub validation_projects: Vec<String>,
}

/// `round(n · fraction)`, at least one project whenever the fraction is
/// positive and more than one project exists.
pub fn validation_project_count(n_projects: usize, fraction: f64) -> usize {
    if fraction <= 0.0 || n_projects < 2 {
        return 0;
    }
    ((n_projects as f64 * fraction).round() as usize).clamp(1, n_projects - 1)
}

/// Index of the highest accuracy, earliest on ties. NaN entries are skipped;
/// with no usable entry the last epoch wins.
pub fn select_best_epoch(accuracies: &[f64]) -> usize {
    let mut best: Option<usize> = None;
    for (i, &a) in accuracies.iter().enumerate() {
        if a.is_nan() {
            continue;
        }
        if best.is_none_or(|b| a > accuracies[b]) {
            best = Some(i);
        }
    }
    best.unwrap_or(accuracies.len().saturating_sub(1))
}

/// Trains for `config.epochs` epochs and keeps the best snapshot on a
/// project-level validation split.
///
/// A fraction of the training projects is withheld for validation. Every
/// remaining function contributes its code-only and its code-description
/// encoding as separate samples. Samples are reshuffled each epoch and
/// consumed in minibatches of `config.batch_size`. All randomness (validation
/// split, shuffles, dropout masks) comes from `config.seed`.
pub fn fit(mut model: ClassifierModel, examples: &[FunctionExample]) -> Result<FitOutcome> {
    let config = model.config.clone();
    if examples.is_empty() {
        return Err(Error::Empty("training set".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut projects: Vec<String> = examples.iter().map(|e| e.project.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    projects.shuffle(&mut rng);
    let n_val = validation_project_count(projects.len(), config.validation_fraction);
    let mut validation_projects: Vec<String> = projects[..n_val].to_vec();
    validation_projects.sort();
    let is_val = |p: &str| validation_projects.binary_search_by(|v| v.as_str().cmp(p)).is_ok();

    let mut train: Vec<(&[u32], usize)> = Vec::new();
    let mut val: Vec<(&[u32], usize)> = Vec::new();
    for e in examples {
        let bucket = if is_val(&e.project) { &mut val } else { &mut train };
        bucket.push((&e.co, e.label));
        bucket.push((&e.cd, e.label));
    }
    let present: BTreeSet<usize> = train.iter().map(|&(_, l)| l).collect();
    if let Some(missing) = (0..config.num_categories).find(|c| !present.contains(c)) {
        return Err(Error::DeficientCategory {
            category: missing.to_string(),
            reason: "absent from the training portion after the validation split".into(),
        });
    }

    let mut snapshots = Vec::with_capacity(config.epochs);
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut validation_accuracies = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<(&[u32], usize)> = chunk.iter().map(|&i| train[i]).collect();
            loss_sum += model.train_step(&batch, &mut rng)?;
            batches += 1;
        }
        let epoch_loss = loss_sum / batches as f64;
        let accuracy = if val.is_empty() {
            f64::NAN
        } else {
            let mut correct = 0usize;
            for &(ids, label) in &val {
                if model.predict(ids)?.label() == label {
                    correct += 1;
                }
            }
            correct as f64 / val.len() as f64
        };
        log::info!("epoch {}: loss {epoch_loss:.4}, validation accuracy {accuracy:.4}", epoch + 1);
        epoch_losses.push(epoch_loss);
        validation_accuracies.push(accuracy);
        snapshots.push(model.clone());
    }

    let best_epoch = select_best_epoch(&validation_accuracies);
    let model = snapshots.swap_remove(best_epoch);
    Ok(FitOutcome {
        model,
        best_epoch,
        epoch_losses,
        validation_accuracies,
        validation_projects,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_percent_of_projects() {
        assert_eq!(validation_project_count(100, 0.05), 5);
        assert_eq!(validation_project_count(10, 0.05), 1);
        assert_eq!(validation_project_count(10, 0.0), 0);
        assert_eq!(validation_project_count(1, 0.05), 0);
    }

    #[test]
    fn best_epoch_is_argmax() {
        assert_eq!(select_best_epoch(&[0.4, 0.7, 0.6]), 1);
        assert_eq!(select_best_epoch(&[0.5, 0.5, 0.5]), 0);
        assert_eq!(select_best_epoch(&[f64::NAN, f64::NAN, f64::NAN]), 2);
        assert_eq!(select_best_epoch(&[f64::NAN, 0.2, 0.1]), 1);
    }
}
