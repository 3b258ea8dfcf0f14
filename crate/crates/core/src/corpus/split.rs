use std::collections::BTreeMap;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{FunctionRecord, Project};
use crate::error::{Error, Result};

/// A training function with its project's label and description.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledFunction {
    pub function: FunctionRecord,
    pub category: String,
    pub description: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<LabeledFunction>,
    pub holdout_projects: Vec<Project>,
    pub seed: u64,
    pub per_category_count: usize,
}

impl DatasetSplit {
    pub fn categories(&self) -> Vec<String> {
        let mut cats: Vec<String> = self.train.iter().map(|f| f.category.clone()).collect();
        cats.sort();
        cats.dedup();
        cats
    }
}

/// Withholds whole projects per category and undersamples the rest.
///
/// Randomness comes from one `ChaCha8Rng::seed_from_u64(seed)` stream consumed
/// category by category in lexicographic order. Within a category the projects
/// are sorted by name, shuffled, and the first `holdout_per_category` are
/// withheld. The remaining functions (project-name order, then function order)
/// are sampled without replacement down to `per_category_count`, keeping
/// their original relative order.
pub fn make_splits(
    projects: &[Project],
    holdout_per_category: usize,
    per_category_count: usize,
    seed: u64,
) -> Result<DatasetSplit> {
    let mut by_category: BTreeMap<&str, Vec<&Project>> = BTreeMap::new();
    for p in projects {
        by_category.entry(p.category.as_str()).or_default().push(p);
    }
    if by_category.is_empty() {
        return Err(Error::Empty("no projects to split".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut holdout_projects = Vec::new();
    for (category, mut members) in by_category {
        if members.len() <= holdout_per_category {
            return Err(Error::DeficientCategory {
                category: category.to_string(),
                reason: format!(
                    "{} project(s), need more than {holdout_per_category} to hold out",
                    members.len()
                ),
            });
        }
        members.sort_by(|a, b| a.name.cmp(&b.name));
        let mut order: Vec<usize> = (0..members.len()).collect();
        order.shuffle(&mut rng);
        let (held, kept) = order.split_at(holdout_per_category);

        let mut held: Vec<usize> = held.to_vec();
        held.sort_unstable();
        holdout_projects.extend(held.iter().map(|&i| members[i].clone()));

        let mut kept: Vec<usize> = kept.to_vec();
        kept.sort_unstable();
        let pool: Vec<(&FunctionRecord, &Project)> = kept
            .iter()
            .flat_map(|&i| {
                let p = members[i];
                p.functions.iter().map(move |f| (f, p))
            })
            .collect();
        if pool.len() < per_category_count {
            return Err(Error::DeficientCategory {
                category: category.to_string(),
                reason: format!(
                    "{} training function(s) after holdout, need {per_category_count}",
                    pool.len()
                ),
            });
        }
        let mut chosen = index::sample(&mut rng, pool.len(), per_category_count).into_vec();
        chosen.sort_unstable();
        train.extend(chosen.into_iter().map(|i| {
            let (f, p) = pool[i];
            LabeledFunction {
                function: f.clone(),
                category: p.category.clone(),
                description: p.description.clone(),
            }
        }));
    }
    Ok(DatasetSplit {
        train,
        holdout_projects,
        seed,
        per_category_count,
    })
}
