//! Project-level voting and precision/recall/F1 reports.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::Project;
use crate::error::{Error, Result};
use crate::prediction::Prediction;
use crate::repr::{build_representation, Variant};

/// Anything that labels a single function from its token representation.
pub trait FunctionClassifier {
    /// Category names, indexed by prediction position.
    fn categories(&self) -> &[String];

    fn predict_tokens(&self, tokens: &[String]) -> Result<Prediction>;
}

/// Outcome of one-function-one-vote for a project.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectVerdict {
    pub project: String,
    pub predictions: Vec<Prediction>,
    pub winner: usize,
    /// Votes per category index.
    pub tally: Vec<usize>,
}

/// Plurality vote over function predictions. Ties go to the highest summed
/// probability among the tied categories, then to the lowest index.
pub fn vote(project: &str, predictions: &[Prediction]) -> Result<ProjectVerdict> {
    let Some(first) = predictions.first() else {
        return Err(Error::Empty(format!("predictions for project '{project}'")));
    };
    let c = first.num_categories();
    if predictions.iter().any(|p| p.num_categories() != c) {
        return Err(Error::Shape(format!("predictions for '{project}' differ in category count")));
    }
    let mut tally = vec![0usize; c];
    for p in predictions {
        tally[p.label()] += 1;
    }
    let top = tally.iter().copied().max().unwrap_or(0);
    let tied: Vec<usize> = (0..c).filter(|&k| tally[k] == top).collect();
    let winner = if tied.len() == 1 {
        tied[0]
    } else {
        // Summing sorted values makes the total independent of function order.
        let mass = |k: usize| {
            let mut v: Vec<f64> = predictions.iter().map(|p| p.probabilities[k]).collect();
            v.sort_by(f64::total_cmp);
            v.iter().sum::<f64>()
        };
        let mut best = tied[0];
        let mut best_mass = mass(best);
        for &k in &tied[1..] {
            let m = mass(k);
            if m > best_mass {
                best = k;
                best_mass = m;
            }
        }
        best
    };
    Ok(ProjectVerdict {
        project: project.to_string(),
        predictions: predictions.to_vec(),
        winner,
        tally,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoryMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_category: BTreeMap<String, CategoryMetrics>,
    /// Averages weighted by gold support; `support` is the total.
    pub weighted: CategoryMetrics,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.per_category.keys().map(String::len).max().unwrap_or(0).max("weighted".len());
        writeln!(f, "{:>width$}  {:>9}  {:>9}  {:>9}  {:>7}", "", "precision", "recall", "f1", "support")?;
        let row = |f: &mut fmt::Formatter<'_>, name: &str, m: &CategoryMetrics| {
            writeln!(
                f,
                "{name:>width$}  {:>9.3}  {:>9.3}  {:>9.3}  {:>7}",
                m.precision, m.recall, m.f1, m.support
            )
        };
        for (name, m) in &self.per_category {
            row(f, name, m)?;
        }
        writeln!(f)?;
        row(f, "weighted", &self.weighted)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Per-category precision, recall and F1 with support-weighted averages.
/// Zero denominators give 0.
pub fn classification_report<S: AsRef<str>, T: AsRef<str>>(
    gold: &[S],
    predicted: &[S],
    categories: &[T],
) -> Result<MetricsReport> {
    if gold.len() != predicted.len() {
        return Err(Error::Shape(format!("{} gold labels but {} predictions", gold.len(), predicted.len())));
    }
    if gold.is_empty() {
        return Err(Error::Empty("label lists".into()));
    }
    let index: HashMap<&str, usize> = categories.iter().enumerate().map(|(i, c)| (c.as_ref(), i)).collect();
    let lookup = |s: &S| index.get(s.as_ref()).copied().ok_or_else(|| Error::UnknownCategory(s.as_ref().to_string()));
    let c = categories.len();
    let (mut tp, mut fp, mut fn_) = (vec![0usize; c], vec![0usize; c], vec![0usize; c]);
    for (g, p) in gold.iter().zip(predicted) {
        let (g, p) = (lookup(g)?, lookup(p)?);
        if g == p {
            tp[g] += 1;
        } else {
            fp[p] += 1;
            fn_[g] += 1;
        }
    }
    let mut per_category = BTreeMap::new();
    let mut weighted = CategoryMetrics { precision: 0.0, recall: 0.0, f1: 0.0, support: gold.len() };
    let total = gold.len() as f64;
    for (k, name) in categories.iter().enumerate() {
        let precision = ratio(tp[k], tp[k] + fp[k]);
        let recall = ratio(tp[k], tp[k] + fn_[k]);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        let support = tp[k] + fn_[k];
        let w = support as f64 / total;
        weighted.precision += w * precision;
        weighted.recall += w * recall;
        weighted.f1 += w * f1;
        per_category.insert(name.as_ref().to_string(), CategoryMetrics { precision, recall, f1, support });
    }
    Ok(MetricsReport { per_category, weighted })
}

#[derive(Debug, Clone)]
pub struct ProjectEvaluation {
    pub report: MetricsReport,
    pub verdicts: Vec<ProjectVerdict>,
}

/// Line of a verdict file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub project: String,
    pub gold: String,
    pub predicted: String,
    pub tally: BTreeMap<String, usize>,
    pub functions: Vec<FunctionVerdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionVerdict {
    pub function: String,
    pub predicted: String,
    pub probabilities: Vec<f64>,
}

impl ProjectEvaluation {
    pub fn verdict_records(&self, holdout: &[Project], categories: &[String]) -> Vec<VerdictRecord> {
        holdout
            .iter()
            .zip(&self.verdicts)
            .map(|(p, v)| VerdictRecord {
                project: p.name.clone(),
                gold: p.category.clone(),
                predicted: categories[v.winner].clone(),
                tally: categories.iter().cloned().zip(v.tally.iter().copied()).collect(),
                functions: p
                    .functions
                    .iter()
                    .zip(&v.predictions)
                    .map(|(f, pr)| FunctionVerdict {
                        function: f.function_name.clone(),
                        predicted: categories[pr.label()].clone(),
                        probabilities: pr.probabilities.clone(),
                    })
                    .collect(),
            })
            .collect()
    }
}

/// Predicts every holdout function in `variant`, votes per project and
/// reports project-level metrics.
pub fn evaluate_project_level<C: FunctionClassifier + ?Sized>(
    classifier: &C,
    holdout: &[Project],
    variant: Variant,
) -> Result<ProjectEvaluation> {
    if holdout.is_empty() {
        return Err(Error::Empty("holdout set".into()));
    }
    let categories = classifier.categories();
    let mut verdicts = Vec::with_capacity(holdout.len());
    let mut gold = Vec::with_capacity(holdout.len());
    let mut predicted = Vec::with_capacity(holdout.len());
    for project in holdout {
        let predictions = project
            .functions
            .iter()
            .map(|f| classifier.predict_tokens(&build_representation(f, project.description.as_deref(), variant)))
            .collect::<Result<Vec<_>>>()?;
        let verdict = vote(&project.name, &predictions)?;
        gold.push(project.category.as_str());
        predicted.push(categories[verdict.winner].as_str());
        verdicts.push(verdict);
    }
    let report = classification_report(&gold, &predicted, categories)?;
    Ok(ProjectEvaluation { report, verdicts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::FunctionRecord;
    use proptest::prelude::*;

    fn p(v: &[f64]) -> Prediction {
        Prediction::new(v.to_vec())
    }

    #[test]
    fn plurality_wins() {
        // sound = 0, net = 1
        let v = vote("x", &[p(&[0.8, 0.2]), p(&[0.7, 0.3]), p(&[0.1, 0.9])]).unwrap();
        assert_eq!(v.winner, 0);
        assert_eq!(v.tally, vec![2, 1]);
        assert_eq!(vote("x", &[p(&[0.1, 0.2, 0.7])]).unwrap().winner, 2);
    }

    #[test]
    fn tie_goes_to_summed_probability() {
        let v = vote("x", &[p(&[0.1, 0.9]), p(&[0.6, 0.4])]).unwrap();
        assert_eq!(v.winner, 1);
        let v = vote("x", &[p(&[0.5, 0.5, 0.0]), p(&[0.0, 0.5, 0.5])]).unwrap();
        assert_eq!(v.tally, vec![1, 1, 0]);
        assert_eq!(v.winner, 1);
        let v = vote("x", &[p(&[0.6, 0.4]), p(&[0.4, 0.6])]).unwrap();
        assert_eq!(v.winner, 0);
    }

    #[test]
    fn empty_vote_is_an_error() {
        assert!(matches!(vote("x", &[]), Err(Error::Empty(_))));
    }

    #[test]
    fn hand_computed_report() {
        let r = classification_report(&["a", "a", "b", "b"], &["a", "b", "b", "b"], &["a", "b"]).unwrap();
        let a = r.per_category["a"];
        let b = r.per_category["b"];
        assert_eq!((a.precision, a.recall), (1.0, 0.5));
        assert!((a.f1 - 2.0 / 3.0).abs() < 1e-15);
        assert!((b.precision - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(b.recall, 1.0);
        assert!((b.f1 - 0.8).abs() < 1e-15);
        assert!((r.weighted.f1 - 11.0 / 15.0).abs() < 1e-12);
        assert_eq!(r.weighted.recall, 0.75);
    }

    #[test]
    fn perfect_predictions_score_one() {
        let g = ["x", "y", "z", "y"];
        let r = classification_report(&g, &g, &["x", "y", "z"]).unwrap();
        assert!(r.per_category.values().all(|m| m.precision == 1.0 && m.recall == 1.0 && m.f1 == 1.0));
        assert_eq!(r.weighted.f1, 1.0);
    }

    #[test]
    fn report_errors() {
        assert!(matches!(classification_report(&["a"], &["c"], &["a", "b"]), Err(Error::UnknownCategory(_))));
        assert!(matches!(classification_report(&["a"], &["a", "b"], &["a", "b"]), Err(Error::Shape(_))));
    }

    #[test]
    fn report_json_shape() {
        let r = classification_report(&["a", "b"], &["a", "a"], &["a", "b"]).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["per_category"]["b"]["f1"], 0.0);
        assert_eq!(v["weighted"]["support"], 2);
        let text = r.to_string();
        assert!(text.contains("weighted") && text.contains("precision"));
    }

    struct Constant(Vec<String>);

    impl FunctionClassifier for Constant {
        fn categories(&self) -> &[String] {
            &self.0
        }

        fn predict_tokens(&self, _: &[String]) -> Result<Prediction> {
            Ok(p(&[1.0, 0.0, 0.0]))
        }
    }

    fn project(name: &str, category: &str) -> Project {
        let f = FunctionRecord::new(name, "f", "return 0;").unwrap();
        Project::new(name, category, Some("a tool".into()), vec![f]).unwrap()
    }

    #[test]
    fn constant_classifier_recalls_only_its_category() {
        let c = Constant(vec!["a".into(), "b".into(), "c".into()]);
        let holdout = [project("p", "a"), project("q", "b"), project("r", "c")];
        let e = evaluate_project_level(&c, &holdout, Variant::Cd).unwrap();
        assert_eq!(e.report.per_category["a"].recall, 1.0);
        assert_eq!(e.report.per_category["b"].recall, 0.0);
        assert_eq!(e.report.per_category["c"].recall, 0.0);
        assert!(evaluate_project_level(&c, &[], Variant::Co).is_err());
        let records = e.verdict_records(&holdout, c.categories());
        assert_eq!(records[1].predicted, "a");
        assert_eq!(records[1].gold, "b");
    }

    fn arb_predictions() -> impl Strategy<Value = Vec<Vec<f64>>> {
        (2usize..5).prop_flat_map(|c| {
            prop::collection::vec(prop::collection::vec(0.0f64..1.0, c), 1..12)
        })
    }

    proptest! {
        #[test]
        fn verdict_ignores_function_order(raw in arb_predictions(), rot in 0usize..12) {
            let preds: Vec<Prediction> = raw.into_iter().map(Prediction::new).collect();
            let mut shuffled = preds.clone();
            shuffled.reverse();
            let n = shuffled.len();
            shuffled.rotate_left(rot % n);
            prop_assert_eq!(vote("x", &preds).unwrap().winner, vote("x", &shuffled).unwrap().winner);
        }

        #[test]
        fn weighted_recall_is_accuracy(pairs in prop::collection::vec((0usize..4, 0usize..4), 1..100)) {
            let cats = ["a", "b", "c", "d"];
            let g: Vec<&str> = pairs.iter().map(|&(g, _)| cats[g]).collect();
            let pr: Vec<&str> = pairs.iter().map(|&(_, p)| cats[p]).collect();
            let r = classification_report(&g, &pr, &cats).unwrap();
            let acc = pairs.iter().filter(|(g, p)| g == p).count() as f64 / pairs.len() as f64;
            prop_assert!((r.weighted.recall - acc).abs() < 1e-12);
            for m in r.per_category.values() {
                prop_assert!((0.0..=1.0).contains(&m.precision) && (0.0..=1.0).contains(&m.f1));
            }
        }
    }
}
