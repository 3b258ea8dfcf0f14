use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use super::extract::extract_functions_bytes;
use super::{FunctionRecord, Project};
use crate::error::{Error, Result};

const C_FAMILY_EXTENSIONS: &[&str] = &[
    "c", "h", "cc", "cp", "cpp", "cxx", "c++", "hh", "hpp", "hxx", "h++", "inl",
];

/// One line of the project metadata file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectMetadata {
    pub name: String,
    pub category: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

impl ProjectMetadata {
    pub fn labels(entries: &[ProjectMetadata]) -> BTreeMap<String, String> {
        entries.iter().map(|m| (m.name.clone(), m.category.clone())).collect()
    }

    pub fn descriptions(entries: &[ProjectMetadata]) -> BTreeMap<String, String> {
        entries
            .iter()
            .filter_map(|m| m.description.clone().map(|d| (m.name.clone(), d)))
            .collect()
    }
}

/// Reads a JSON-lines metadata file, one `{"name","category","description"?}`
/// object per line. Blank lines are skipped.
pub fn read_metadata(path: &Path) -> Result<Vec<ProjectMetadata>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let meta: ProjectMetadata = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: n + 1,
            message: e.to_string(),
        })?;
        if meta.name.is_empty() {
            return Err(Error::Parse { line: n + 1, message: "empty project name".into() });
        }
        out.push(meta);
    }
    Ok(out)
}

#[derive(Debug, Clone, Default)]
pub struct LoadedRepository {
    pub projects: Vec<Project>,
    pub warnings: Vec<String>,
}

pub fn is_c_family_file(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| C_FAMILY_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
        .unwrap_or(false)
}

/// Loads every labeled project directory under `root`.
///
/// Each immediate subdirectory is one project, named by the directory. Files
/// are visited in sorted path order, so the function order is reproducible.
/// Projects are returned in label-name order; those with no extracted
/// function are dropped.
pub fn load_repository(
    root: &Path,
    labels: &BTreeMap<String, String>,
    descriptions: &BTreeMap<String, String>,
) -> Result<LoadedRepository> {
    if !root.is_dir() {
        return Err(Error::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotFound, "repository root is not a directory"),
        ));
    }
    let mut loaded = LoadedRepository::default();
    for (name, category) in labels {
        let dir = root.join(name);
        if !dir.is_dir() {
            loaded.warnings.push(format!("project '{name}' is labeled but has no directory"));
            continue;
        }
        let files: Vec<PathBuf> = WalkDir::new(&dir)
            .sort_by_file_name()
            .into_iter()
            .filter_map(|entry| match entry {
                Ok(e) => Some(e),
                Err(err) => {
                    warn!("{name}: {err}");
                    None
                }
            })
            .filter(|e| e.file_type().is_file() && is_c_family_file(e.path()))
            .map(|e| e.into_path())
            .collect();

        let per_file: Vec<(Vec<FunctionRecord>, Vec<String>)> = files
            .par_iter()
            .map(|path| extract_file(name, &dir, path))
            .collect();

        let mut functions = Vec::new();
        for (fns, warnings) in per_file {
            functions.extend(fns);
            loaded.warnings.extend(warnings);
        }
        if functions.is_empty() {
            loaded.warnings.push(format!("project '{name}' has no C/C++ functions; dropped"));
            continue;
        }
        loaded.projects.push(Project::new(
            name.clone(),
            category.clone(),
            descriptions.get(name).cloned(),
            functions,
        )?);
    }
    for w in &loaded.warnings {
        warn!("{w}");
    }
    Ok(loaded)
}

fn extract_file(project: &str, dir: &Path, path: &Path) -> (Vec<FunctionRecord>, Vec<String>) {
    let rel = path.strip_prefix(dir).unwrap_or(path).display().to_string();
    let bytes = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) => return (Vec::new(), vec![format!("{project}/{rel}: unreadable ({e}); skipped")]),
    };
    let extraction = match extract_functions_bytes(&bytes) {
        Ok(x) => x,
        Err(e) => return (Vec::new(), vec![format!("{project}/{rel}: {e}; skipped")]),
    };
    let warnings = extraction
        .diagnostics
        .iter()
        .map(|d| format!("{project}/{rel}: {d}"))
        .collect();
    let functions = extraction
        .functions
        .into_iter()
        .filter_map(|f| FunctionRecord::new(project, f.name, f.body).ok())
        .collect();
    (functions, warnings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write(path: &Path, text: &str) {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(path, text).unwrap();
    }

    #[test]
    fn labeled_dirs_with_c_code_only() {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path();
        write(&root.join("alpha/src/a.c"), "int a(void) { return 1; }");
        write(&root.join("beta/README"), "no code here");
        write(&root.join("beta/main.py"), "def f(): pass");
        write(&root.join("gamma/g.c"), "int g(void) { return 0; }");

        let labels: BTreeMap<_, _> = [("alpha", "sound"), ("beta", "net")]
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        let loaded = load_repository(root, &labels, &BTreeMap::new()).unwrap();
        assert_eq!(loaded.projects.len(), 1);
        assert_eq!(loaded.projects[0].name, "alpha");
        assert_eq!(loaded.projects[0].description, None);
        assert!(loaded.warnings.iter().any(|w| w.contains("beta")));
    }

    #[test]
    fn empty_labels_yield_nothing() {
        let tmp = tempfile::tempdir().unwrap();
        write(&tmp.path().join("alpha/a.c"), "int a(void) { return 1; }");
        let loaded = load_repository(tmp.path(), &BTreeMap::new(), &BTreeMap::new()).unwrap();
        assert!(loaded.projects.is_empty());
    }

    #[test]
    fn functions_from_every_file_in_path_order() {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path();
        write(
            &root.join("p/b.c"),
            "int b1(void) { return 1; }\nint b2(void) { return 2; }\nint b3(void) { return 3; }\n",
        );
        write(
            &root.join("p/a.cpp"),
            "void a1() { }\nvoid a2() { if (1) { } }\nstatic int a3(int x) { return x; }\n",
        );
        let labels = BTreeMap::from([("p".to_string(), "utils".to_string())]);
        let descriptions = BTreeMap::from([("p".to_string(), "a tool".to_string())]);
        let loaded = load_repository(root, &labels, &descriptions).unwrap();
        let project = &loaded.projects[0];
        let names: Vec<&str> = project.functions.iter().map(|f| f.function_name.as_str()).collect();
        assert_eq!(names, vec!["a1", "a2", "a3", "b1", "b2", "b3"]);
        assert_eq!(project.description.as_deref(), Some("a tool"));
        assert!(project.functions.iter().all(|f| f.project_name == "p"));
    }

    #[test]
    fn missing_directory_and_binary_file_warn() {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path();
        write(&root.join("p/ok.c"), "int ok(void) { return 1; }");
        fs::write(root.join("p/blob.c"), [0u8, 1, 2, 3]).unwrap();
        let labels = BTreeMap::from([
            ("p".to_string(), "utils".to_string()),
            ("ghost".to_string(), "net".to_string()),
        ]);
        let loaded = load_repository(root, &labels, &BTreeMap::new()).unwrap();
        assert_eq!(loaded.projects.len(), 1);
        assert!(loaded.warnings.iter().any(|w| w.contains("ghost")));
        assert!(loaded.warnings.iter().any(|w| w.contains("blob.c")));
    }

    #[test]
    fn metadata_lines() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("meta.jsonl");
        fs::write(
            &path,
            "{\"name\":\"a\",\"category\":\"sound\",\"description\":\"plays music\"}\n\n{\"name\":\"b\",\"category\":\"net\"}\n",
        )
        .unwrap();
        let meta = read_metadata(&path).unwrap();
        assert_eq!(meta.len(), 2);
        assert_eq!(ProjectMetadata::labels(&meta)["b"], "net");
        assert_eq!(ProjectMetadata::descriptions(&meta).len(), 1);

        fs::write(&path, "{\"name\":\"a\"}\n").unwrap();
        assert!(matches!(read_metadata(&path), Err(Error::Parse { line: 1, .. })));
    }
}
