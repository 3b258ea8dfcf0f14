use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FunctionRecord, LabeledFunction, Project};
use crate::error::Result;
use crate::io;
use crate::repr::{build_representation, Variant};

/// One line of a dataset file: a function with its label, its project
/// description and its code-only token representation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub project: String,
    pub function: String,
    pub category: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub body: String,
    pub tokens: Vec<String>,
}

impl DatasetRecord {
    fn new(function: &FunctionRecord, category: &str, description: Option<&str>) -> Self {
        DatasetRecord {
            project: function.project_name.clone(),
            function: function.function_name.clone(),
            category: category.to_string(),
            description: description.map(str::to_string),
            body: function.body.clone(),
            tokens: build_representation(function, None, Variant::Co),
        }
    }

    pub fn function_record(&self) -> Result<FunctionRecord> {
        FunctionRecord::new(&self.project, &self.function, &self.body)
    }
}

pub fn records_for_projects(projects: &[Project]) -> Vec<DatasetRecord> {
    projects
        .iter()
        .flat_map(|p| {
            p.functions
                .iter()
                .map(move |f| DatasetRecord::new(f, &p.category, p.description.as_deref()))
        })
        .collect()
}

pub fn records_for_labeled(functions: &[LabeledFunction]) -> Vec<DatasetRecord> {
    functions
        .iter()
        .map(|f| DatasetRecord::new(&f.function, &f.category, f.description.as_deref()))
        .collect()
}

/// Regroups records into projects, in order of first appearance.
pub fn projects_from_records(records: &[DatasetRecord]) -> Result<Vec<Project>> {
    let mut order: Vec<Project> = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    for r in records {
        let slot = *index.entry(r.project.as_str()).or_insert_with(|| {
            order.push(Project {
                name: r.project.clone(),
                description: r.description.clone(),
                category: r.category.clone(),
                functions: Vec::new(),
            });
            order.len() - 1
        });
        order[slot].functions.push(r.function_record()?);
    }
    order
        .into_iter()
        .map(|p| Project::new(p.name, p.category, p.description, p.functions))
        .collect()
}

pub fn labeled_functions_from_records(records: &[DatasetRecord]) -> Result<Vec<LabeledFunction>> {
    records
        .iter()
        .map(|r| {
            Ok(LabeledFunction {
                function: r.function_record()?,
                category: r.category.clone(),
                description: r.description.clone(),
            })
        })
        .collect()
}

pub fn write_records(path: &Path, records: &[DatasetRecord]) -> Result<()> {
    io::write_jsonl(path, records)
}

pub fn read_records(path: &Path) -> Result<Vec<DatasetRecord>> {
    io::read_jsonl(path)
}
