//! Project ingestion, function extraction and project-level dataset splits.

mod dataset;
mod extract;
mod repository;
mod split;

pub use dataset::{
    labeled_functions_from_records, projects_from_records, read_records, records_for_labeled,
    records_for_projects, write_records, DatasetRecord,
};
pub use extract::{braces_balanced, extract_functions, extract_functions_bytes, ExtractedFunction, Extraction};
pub use repository::{
    is_c_family_file, load_repository, read_metadata, LoadedRepository, ProjectMetadata,
};
pub use split::{make_splits, DatasetSplit, LabeledFunction};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One source function and the project that owns it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionRecord {
    pub project_name: String,
    pub function_name: String,
    pub body: String,
}

impl FunctionRecord {
    pub fn new(
        project_name: impl Into<String>,
        function_name: impl Into<String>,
        body: impl Into<String>,
    ) -> Result<Self> {
        let record = FunctionRecord {
            project_name: project_name.into(),
            function_name: function_name.into(),
            body: body.into(),
        };
        if record.function_name.is_empty() {
            return Err(Error::Empty("function name".into()));
        }
        if record.body.is_empty() {
            return Err(Error::Empty(format!("body of {}", record.function_name)));
        }
        Ok(record)
    }
}

/// A labeled software project: exactly one category, optional description.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Project {
    pub name: String,
    pub description: Option<String>,
    pub category: String,
    pub functions: Vec<FunctionRecord>,
}

impl Project {
    pub fn new(
        name: impl Into<String>,
        category: impl Into<String>,
        description: Option<String>,
        functions: Vec<FunctionRecord>,
    ) -> Result<Self> {
        let project = Project {
            name: name.into(),
            description,
            category: category.into(),
            functions,
        };
        if project.name.is_empty() {
            return Err(Error::Empty("project name".into()));
        }
        if let Some(f) = project.functions.iter().find(|f| f.project_name != project.name) {
            return Err(Error::Config(format!(
                "function '{}' belongs to '{}', not '{}'",
                f.function_name, f.project_name, project.name
            )));
        }
        Ok(project)
    }
}
