//! Offline evaluation: class rounds, attribute recall, association naming.

mod matcher;
mod protocol;

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{load_model, Association, ClassDecl, ClassDiagram, Identifier, Model};
use crate::service::{name_temperatures, CompletionConfig, CompletionService, ServiceError};

pub use matcher::{
    semantic_match, stem, InteractiveMatcher, Judge, MatchPolicy, Matcher, SynonymError,
    SynonymTable, VerdictStore,
};
pub use protocol::{
    count_matches, make_partial, make_partial_scoped, matching, ratio, removal_count,
    removed_indices, retained_count, PartialScope, RoundMetrics, Stat,
};

pub const DEFAULT_FRACTION: f64 = 0.2;
pub const DEFAULT_REMOVAL: f64 = 0.75;
pub const DEFAULT_ATTEMPTS: usize = 3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("nothing to evaluate")]
    EmptyEvalSet,
    #[error("dataset: {0}")]
    Dataset(String),
    #[error("invalid evaluation setting: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Matcher(#[from] SynonymError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub completion: CompletionConfig,
    pub fraction: f64,
    pub scope: PartialScope,
    pub removal: f64,
    pub attempts: usize,
    pub seed: u64,
    /// Evaluate a seeded sample of this many classes or pairs.
    pub sample: Option<usize>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            completion: CompletionConfig::default(),
            fraction: DEFAULT_FRACTION,
            scope: PartialScope::Classes,
            removal: DEFAULT_REMOVAL,
            attempts: DEFAULT_ATTEMPTS,
            seed: 0,
            sample: None,
        }
    }
}

impl EvalConfig {
    fn check(&self) -> Result<(), EvalError> {
        if !(self.fraction > 0.0 && self.fraction <= 1.0) {
            return Err(EvalError::InvalidConfig(format!("fraction {} not in (0, 1]", self.fraction)));
        }
        if !(self.removal > 0.0 && self.removal <= 1.0) {
            return Err(EvalError::InvalidConfig(format!("removal {} not in (0, 1]", self.removal)));
        }
        if self.attempts == 0 {
            return Err(EvalError::InvalidConfig("attempts must be at least 1".into()));
        }
        self.completion
            .validate()
            .map_err(|e| EvalError::InvalidConfig(e.to_string()))
    }

    fn with_seed(&self, seed: u64) -> CompletionConfig {
        CompletionConfig {
            rng_seed: seed,
            ..self.completion.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalTask {
    Classes,
    Attributes,
    AssocNames,
}

/// Everything needed to rerun the evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub provider: String,
    pub matcher: String,
    pub n_prompts: usize,
    pub policy: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub seed: u64,
    pub fraction: f64,
    pub scope: PartialScope,
    pub removal: f64,
    pub attempts: usize,
    pub name_temperatures: Vec<f64>,
    pub sample: Option<usize>,
    pub dataset: Vec<String>,
}

impl ConfigEcho {
    fn new(task: EvalTask, cfg: &EvalConfig, service: &CompletionService, matcher: &Matcher, dataset: Vec<String>) -> Self {
        let task_kind = match task {
            EvalTask::Classes => crate::prompt::TaskKind::ClassPairs,
            EvalTask::Attributes => crate::prompt::TaskKind::Attributes,
            EvalTask::AssocNames => crate::prompt::TaskKind::AssociationName,
        };
        let hp = cfg.completion.hyperparams(task_kind);
        Self {
            provider: service.provider_id().to_string(),
            matcher: matcher.mode().to_string(),
            n_prompts: cfg.completion.n_prompts,
            policy: cfg.completion.effective_policy().to_string(),
            temperature: hp.temperature,
            max_tokens: hp.max_tokens,
            seed: cfg.seed,
            fraction: cfg.fraction,
            scope: cfg.scope,
            removal: cfg.removal,
            attempts: cfg.attempts,
            name_temperatures: name_temperatures(cfg.attempts),
            sample: cfg.sample,
            dataset,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub item: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelClassResult {
    pub model: String,
    pub classes: usize,
    pub partial_classes: usize,
    pub r1: RoundMetrics,
    pub r2: RoundMetrics,
    pub suggested_r1: Vec<String>,
    /// Ground-truth classes merged into the second-round partial.
    pub accepted_r1: Vec<String>,
    pub suggested_r2: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassAggregate {
    pub precision_r1: Stat,
    pub precision_r2: Stat,
    pub recall_r1: Stat,
    pub recall_r2: Stat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassEvalSection {
    pub models: Vec<ModelClassResult>,
    pub failures: Vec<Failure>,
    pub aggregate: ClassAggregate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeCase {
    pub model: String,
    pub class: String,
    pub attributes: usize,
    pub removed: Vec<String>,
    pub suggested: Vec<String>,
    pub matched: usize,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeEvalSection {
    pub cases: Vec<AttributeCase>,
    /// Classes without attributes; nothing to remove.
    pub skipped: usize,
    pub failures: Vec<Failure>,
    pub recall: Stat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NameCase {
    pub model: String,
    pub source: String,
    pub target: String,
    pub truth: String,
    pub candidates: Vec<(String, f64)>,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationEvalSection {
    pub cases: Vec<NameCase>,
    pub failures: Vec<Failure>,
    pub correct: usize,
    /// Pairs evaluated; failed pairs are excluded.
    pub total: usize,
    pub accuracy: Option<f64>,
}

/// Hosted-model results, kept for comparison only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceValue {
    pub metric: String,
    pub mean: f64,
    pub std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: EvalTask,
    pub config: ConfigEcho,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classes: Option<ClassEvalSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attributes: Option<AttributeEvalSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub associations: Option<AssociationEvalSection>,
    pub reference_note: String,
    pub reference: Vec<ReferenceValue>,
}

const REFERENCE_NOTE: &str =
    "published results from a hosted model; annotations only, not expected to reproduce offline";

fn reference_values(task: EvalTask) -> Vec<ReferenceValue> {
    let r = |metric: &str, mean, std| ReferenceValue {
        metric: metric.into(),
        mean,
        std,
    };
    match task {
        EvalTask::Classes => vec![
            r("precision_r1", 0.57, Some(0.26)),
            r("precision_r2", 0.56, Some(0.24)),
            r("recall_r1", 0.29, Some(0.18)),
            r("recall_r2", 0.45, Some(0.25)),
        ],
        EvalTask::Attributes => vec![r("recall", 0.7, Some(0.4))],
        EvalTask::AssocNames => vec![r("accuracy", 0.64, None)],
    }
}

impl EvalReport {
    fn new(task: EvalTask, config: ConfigEcho) -> Self {
        Self {
            task,
            config,
            classes: None,
            attributes: None,
            associations: None,
            reference_note: REFERENCE_NOTE.into(),
            reference: reference_values(task),
        }
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn render_table(&self) -> String {
        let mut out = String::new();
        if let Some(c) = &self.classes {
            render_class_table(c, &mut out);
        }
        if let Some(a) = &self.attributes {
            let _ = writeln!(
                out,
                "attribute recall: avg {} std {} over {} classes ({} skipped, {} failed)",
                fmt_opt(a.recall.mean),
                fmt_opt(a.recall.std),
                a.recall.n,
                a.skipped,
                a.failures.len()
            );
        }
        if let Some(a) = &self.associations {
            let _ = writeln!(
                out,
                "association accuracy: {}/{} = {} ({} failed)",
                a.correct,
                a.total,
                fmt_opt(a.accuracy),
                a.failures.len()
            );
        }
        let refs = self
            .reference
            .iter()
            .map(|r| match r.std {
                Some(s) => format!("{} {:.2} ({:.2})", r.metric, r.mean, s),
                None => format!("{} {:.2}", r.metric, r.mean),
            })
            .collect::<Vec<_>>()
            .join(", ");
        let _ = writeln!(out, "reference (hosted model): {refs}");
        let _ = writeln!(
            out,
            "config: provider={} matcher={} n_prompts={} policy={} seed={}",
            self.config.provider, self.config.matcher, self.config.n_prompts, self.config.policy, self.config.seed
        );
        out
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".to_string(), |v| format!("{v:.2}"))
}

fn render_class_table(section: &ClassEvalSection, out: &mut String) {
    let width = section
        .models
        .iter()
        .map(|m| m.model.len())
        .chain([5])
        .max()
        .unwrap_or(5);
    let _ = writeln!(
        out,
        "{:<width$} | Precision R1 | Precision R2 | Recall R1 | Recall R2",
        "model"
    );
    let _ = writeln!(out, "{}", "-".repeat(width + 54));
    let row = |out: &mut String, name: &str, v: [Option<f64>; 4]| {
        let _ = writeln!(
            out,
            "{:<width$} | {:>12} | {:>12} | {:>9} | {:>9}",
            name,
            fmt_opt(v[0]),
            fmt_opt(v[1]),
            fmt_opt(v[2]),
            fmt_opt(v[3])
        );
    };
    for m in &section.models {
        row(
            out,
            &m.model,
            [m.r1.precision, m.r2.precision, m.r1.recall, m.r2.recall],
        );
    }
    let a = &section.aggregate;
    let stats = [&a.precision_r1, &a.precision_r2, &a.recall_r1, &a.recall_r2];
    row(out, "avg", stats.map(|s| s.mean));
    row(out, "std", stats.map(|s| s.std));
    for f in &section.failures {
        let _ = writeln!(out, "failed {}: {}", f.item, f.error);
    }
}

/// Loads every `.mcj` class diagram in `dir`, sorted by file name.
pub fn load_dataset(dir: &Path) -> Result<Vec<(String, ClassDiagram)>, EvalError> {
    let entries = std::fs::read_dir(dir)
        .map_err(|e| EvalError::Dataset(format!("{}: {e}", dir.display())))?;
    let mut paths: Vec<_> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "mcj"))
        .collect();
    paths.sort();
    let mut out = Vec::new();
    for path in paths {
        let bytes = std::fs::read(&path)
            .map_err(|e| EvalError::Dataset(format!("{}: {e}", path.display())))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        match load_model(&bytes) {
            Ok(Model::Class(d)) => out.push((name, d)),
            Ok(Model::Activity(_)) => {
                return Err(EvalError::Dataset(format!("{}: not a class diagram", path.display())))
            }
            Err(e) => return Err(EvalError::Dataset(format!("{}: {e}", path.display()))),
        }
    }
    if out.is_empty() {
        return Err(EvalError::EmptyEvalSet);
    }
    Ok(out)
}

fn names(ids: &[Identifier]) -> Vec<String> {
    ids.iter().map(|i| i.display().to_string()).collect()
}

/// The two-round class-name protocol over each model.
///
/// Round one starts from the seeded partial; matched suggestions are
/// replaced by their ground-truth class, joined by the ground-truth
/// associations that a suggested pair confirmed, and round two starts there.
pub fn run_class_rounds(
    models: &[(String, ClassDiagram)],
    service: &CompletionService,
    cfg: &EvalConfig,
    matcher: &Matcher,
) -> Result<EvalReport, EvalError> {
    cfg.check()?;
    if models.is_empty() {
        return Err(EvalError::EmptyEvalSet);
    }
    let mut results = Vec::new();
    let mut failures = Vec::new();
    for (i, (name, model)) in models.iter().enumerate() {
        let seed = cfg.seed.wrapping_add(i as u64);
        match class_rounds_for(model, name, service, cfg, matcher, seed) {
            Ok(r) => results.push(r),
            Err(e) => failures.push(Failure {
                item: name.clone(),
                error: e.to_string(),
            }),
        }
    }
    let aggregate = ClassAggregate {
        precision_r1: Stat::of(results.iter().map(|r| r.r1.precision)),
        precision_r2: Stat::of(results.iter().map(|r| r.r2.precision)),
        recall_r1: Stat::of(results.iter().map(|r| r.r1.recall)),
        recall_r2: Stat::of(results.iter().map(|r| r.r2.recall)),
    };
    let dataset = models.iter().map(|(n, _)| n.clone()).collect();
    let mut report = EvalReport::new(
        EvalTask::Classes,
        ConfigEcho::new(EvalTask::Classes, cfg, service, matcher, dataset),
    );
    report.classes = Some(ClassEvalSection {
        models: results,
        failures,
        aggregate,
    });
    Ok(report)
}

fn missing_classes(truth: &ClassDiagram, partial: &ClassDiagram) -> Vec<Identifier> {
    truth
        .classes
        .iter()
        .map(|c| c.name.clone())
        .filter(|c| !partial.has_class(c))
        .collect()
}

fn class_rounds_for(
    truth: &ClassDiagram,
    name: &str,
    service: &CompletionService,
    cfg: &EvalConfig,
    matcher: &Matcher,
    seed: u64,
) -> Result<ModelClassResult, ServiceError> {
    let partial = make_partial_scoped(truth, cfg.fraction, seed, cfg.scope);
    let completion = cfg.with_seed(seed);

    let relevant1 = missing_classes(truth, &partial);
    let round1 = service.suggest_classes(&partial, &completion)?;
    let suggested1: Vec<Identifier> = round1.classes.iter().map(|s| s.item.clone()).collect();
    let assignment = matching(&suggested1, &relevant1, matcher);
    let r1 = RoundMetrics::new(
        suggested1.len(),
        relevant1.len(),
        assignment.iter().flatten().count(),
    );

    // map suggested names onto ground truth, then accept what matched
    let to_truth = |c: &Identifier| -> Option<Identifier> {
        if partial.has_class(c) {
            return Some(c.clone());
        }
        suggested1
            .iter()
            .position(|s| s == c)
            .and_then(|i| assignment[i])
            .map(|t| relevant1[t].clone())
    };
    let accepted: Vec<Identifier> = assignment
        .iter()
        .flatten()
        .map(|&t| relevant1[t].clone())
        .collect();
    let mut next = partial.clone();
    for class in &accepted {
        next.classes.push(ClassDecl::new(class.clone()));
    }
    for s in &round1.associations {
        let (Some(a), Some(b)) = (to_truth(&s.item.source), to_truth(&s.item.target)) else {
            continue;
        };
        let probe = Association::new(a, b);
        if let Some(t) = truth.associations.iter().find(|t| t.same_pair(&probe)) {
            if !next.has_association(t) {
                next.associations.push(t.clone());
            }
        }
    }

    let relevant2 = missing_classes(truth, &next);
    let suggested2: Vec<Identifier> = if relevant2.is_empty() {
        Vec::new()
    } else {
        service
            .suggest_classes(&next, &completion)?
            .classes
            .into_iter()
            .map(|s| s.item)
            .collect()
    };
    Ok(ModelClassResult {
        model: name.to_string(),
        classes: truth.classes.len(),
        partial_classes: partial.classes.len(),
        r1,
        r2: RoundMetrics::compute(&suggested2, &relevant2, matcher),
        suggested_r1: names(&suggested1),
        accepted_r1: names(&accepted),
        suggested_r2: names(&suggested2),
    })
}

/// A class to evaluate, with the diagram it belongs to.
#[derive(Debug, Clone)]
pub struct AttributeSubject {
    pub model: String,
    pub class: ClassDecl,
    pub diagram: ClassDiagram,
}

pub fn attribute_subjects(models: &[(String, ClassDiagram)]) -> Vec<AttributeSubject> {
    models
        .iter()
        .flat_map(|(name, d)| {
            d.classes.iter().map(move |c| AttributeSubject {
                model: name.clone(),
                class: c.clone(),
                diagram: d.clone(),
            })
        })
        .collect()
}

fn sample_of<T: Clone>(items: &[T], sample: Option<usize>, seed: u64) -> Vec<T> {
    match sample {
        Some(k) if k < items.len() => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut idx = index::sample(&mut rng, items.len(), k).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|i| items[i].clone()).collect()
        }
        _ => items.to_vec(),
    }
}

/// Removes attributes from each class, asks for suggestions and measures
/// how many removed attributes come back.
pub fn run_attribute_eval(
    subjects: &[AttributeSubject],
    service: &CompletionService,
    cfg: &EvalConfig,
    matcher: &Matcher,
) -> Result<EvalReport, EvalError> {
    cfg.check()?;
    let subjects = sample_of(subjects, cfg.sample, cfg.seed);
    if subjects.is_empty() {
        return Err(EvalError::EmptyEvalSet);
    }
    let mut cases = Vec::new();
    let mut failures = Vec::new();
    let mut skipped = 0;
    for (i, s) in subjects.iter().enumerate() {
        let n = s.class.attributes.len();
        if n == 0 {
            skipped += 1;
            continue;
        }
        let seed = cfg.seed.wrapping_add(i as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let removed_idx: HashSet<usize> = removed_indices(n, cfg.removal, &mut rng).into_iter().collect();
        let (removed, kept): (Vec<_>, Vec<_>) = s
            .class
            .attributes
            .iter()
            .cloned()
            .enumerate()
            .partition(|(j, _)| removed_idx.contains(j));
        let removed: Vec<Identifier> = removed.into_iter().map(|(_, a)| a).collect();
        let mut partial = s.diagram.clone();
        if let Some(decl) = partial.classes.iter_mut().find(|c| c.name == s.class.name) {
            decl.attributes = kept.into_iter().map(|(_, a)| a).collect();
        }
        match service.suggest_attributes(&partial, &s.class.name, &cfg.with_seed(seed)) {
            Ok(suggested) => {
                let suggested: Vec<Identifier> = suggested.into_iter().map(|x| x.item).collect();
                let matched = count_matches(&suggested, &removed, matcher);
                cases.push(AttributeCase {
                    model: s.model.clone(),
                    class: s.class.name.display().to_string(),
                    attributes: n,
                    recall: matched as f64 / removed.len() as f64,
                    removed: names(&removed),
                    suggested: names(&suggested),
                    matched,
                });
            }
            Err(e) => failures.push(Failure {
                item: format!("{}.{}", s.model, s.class.name),
                error: e.to_string(),
            }),
        }
    }
    let recall = Stat::of(cases.iter().map(|c| Some(c.recall)));
    let dataset = unique_models(subjects.iter().map(|s| s.model.as_str()));
    let mut report = EvalReport::new(
        EvalTask::Attributes,
        ConfigEcho::new(EvalTask::Attributes, cfg, service, matcher, dataset),
    );
    report.attributes = Some(AttributeEvalSection {
        cases,
        skipped,
        failures,
        recall,
    });
    Ok(report)
}

fn unique_models<'a>(names: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for n in names {
        if !out.iter().any(|o| o == n) {
            out.push(n.to_string());
        }
    }
    out
}

/// Named associations of every model, as (model, association).
pub fn named_pairs(models: &[(String, ClassDiagram)]) -> Vec<(String, Association)> {
    models
        .iter()
        .flat_map(|(name, d)| {
            d.associations
                .iter()
                .filter(|a| a.name.is_some())
                .map(move |a| (name.clone(), a.clone()))
        })
        .collect()
}

/// A pair counts as correct when any attempt's name matches its ground truth.
pub fn run_association_eval(
    pairs: &[(String, Association)],
    service: &CompletionService,
    cfg: &EvalConfig,
    matcher: &Matcher,
) -> Result<EvalReport, EvalError> {
    cfg.check()?;
    let pairs = sample_of(pairs, cfg.sample, cfg.seed);
    if pairs.is_empty() {
        return Err(EvalError::EmptyEvalSet);
    }
    let mut cases = Vec::new();
    let mut failures = Vec::new();
    for (model, assoc) in &pairs {
        let Some(truth) = &assoc.name else {
            return Err(EvalError::Dataset(format!(
                "{model}: association {}-{} has no name",
                assoc.source, assoc.target
            )));
        };
        match service.suggest_association_name((&assoc.source, &assoc.target), &cfg.completion, cfg.attempts) {
            Ok(candidates) => {
                let correct = candidates.iter().any(|c| matcher.matches(&c.name, truth));
                cases.push(NameCase {
                    model: model.clone(),
                    source: assoc.source.display().to_string(),
                    target: assoc.target.display().to_string(),
                    truth: truth.display().to_string(),
                    candidates: candidates
                        .into_iter()
                        .map(|c| (c.name.display().to_string(), c.temperature))
                        .collect(),
                    correct,
                });
            }
            Err(e) => failures.push(Failure {
                item: format!("{model}:{}-{}", assoc.source, assoc.target),
                error: e.to_string(),
            }),
        }
    }
    let correct = cases.iter().filter(|c| c.correct).count();
    let total = cases.len();
    let dataset = unique_models(pairs.iter().map(|(m, _)| m.as_str()));
    let mut report = EvalReport::new(
        EvalTask::AssocNames,
        ConfigEcho::new(EvalTask::AssocNames, cfg, service, matcher, dataset),
    );
    report.associations = Some(AssociationEvalSection {
        cases,
        failures,
        correct,
        total,
        accuracy: ratio(correct, total),
    });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::provider::{CompletionProvider, FinishReason, GenerationRequest, GenerationResult, MockProvider, ProviderError};
    use crate::rank::SelectionPolicy;
    use std::sync::Arc;

    fn id(s: &str) -> Identifier {
        Identifier::new(s).unwrap()
    }

    /// Answers class prompts with the given pairs and name prompts with `verb`.
    struct Scripted {
        pairs: String,
        verb: String,
    }

    impl CompletionProvider for Scripted {
        fn id(&self) -> &str {
            "scripted"
        }

        fn complete(&self, r: &GenerationRequest) -> Result<GenerationResult, ProviderError> {
            let text = match r.task {
                Some(crate::prompt::TaskKind::AssociationName) => self.verb.clone(),
                Some(crate::prompt::TaskKind::Attributes) => "c: [x, y]".into(),
                _ => self.pairs.clone(),
            };
            Ok(GenerationResult {
                text,
                finish_reason: FinishReason::Stop,
                provider: "scripted".into(),
            })
        }
    }

    fn pair_model() -> ClassDiagram {
        ClassDiagram {
            package_name: id("p"),
            classes: vec![ClassDecl::new(id("a")), ClassDecl::new(id("b"))],
            associations: vec![Association::named(id("a"), id("b"), id("owns"))],
        }
    }

    fn cfg(n: usize) -> EvalConfig {
        EvalConfig {
            completion: CompletionConfig {
                n_prompts: n,
                policy: Some(SelectionPolicy::All),
                ..CompletionConfig::default()
            },
            fraction: 0.5,
            ..EvalConfig::default()
        }
    }

    #[test]
    fn perfect_first_round() {
        // ten-class models are not needed: with fraction 0.5 one of a, b is kept
        let svc = CompletionService::new(Arc::new(Scripted {
            pairs: "[a, b]".into(),
            verb: " owns".into(),
        }));
        let report = run_class_rounds(&[("m".into(), pair_model())], &svc, &cfg(1), &Matcher::Exact);
        // single-class partial has no association to query with
        let section = report.unwrap().classes.unwrap();
        assert_eq!(section.failures.len(), 1);
        assert!(section.failures[0].error.contains("no associations"));

        let mut three = pair_model();
        three.classes.push(ClassDecl::new(id("c")));
        three.associations.push(Association::new(id("b"), id("c")));
        let svc = CompletionService::new(Arc::new(Scripted {
            pairs: "[b, c], [a, b]".into(),
            verb: String::new(),
        }));
        let mut c = cfg(1);
        c.fraction = 0.6;
        let report = run_class_rounds(&[("m".into(), three)], &svc, &c, &Matcher::Exact).unwrap();
        let m = &report.classes.as_ref().unwrap().models[0];
        assert_eq!(m.partial_classes, 2);
        assert_eq!(m.r1.precision, Some(1.0));
        assert_eq!(m.r1.recall, Some(1.0));
        assert_eq!(m.r2.recall, None);
        assert_eq!(m.r2.precision, None);
    }

    #[test]
    fn association_accuracy() {
        let models = vec![("m".to_string(), pair_model())];
        let pairs = named_pairs(&models);
        let run = |verb: &str| {
            let svc = CompletionService::new(Arc::new(Scripted {
                pairs: String::new(),
                verb: verb.into(),
            }));
            run_association_eval(&pairs, &svc, &cfg(1), &Matcher::Exact)
                .unwrap()
                .associations
                .unwrap()
        };
        assert_eq!(run(" owns").accuracy, Some(1.0));
        assert_eq!(run(" 42").accuracy, Some(0.0));
        let svc = CompletionService::new(Arc::new(MockProvider::new()));
        assert_eq!(
            run_association_eval(&[], &svc, &cfg(1), &Matcher::Exact),
            Err(EvalError::EmptyEvalSet)
        );
    }

    #[test]
    fn attribute_recall_and_skips() {
        let mut d = pair_model();
        d.classes.push(ClassDecl::with_attributes(id("c"), vec![id("x"), id("y")]));
        let svc = CompletionService::new(Arc::new(Scripted {
            pairs: String::new(),
            verb: String::new(),
        }));
        let subjects = attribute_subjects(&[("m".into(), d)]);
        let report = run_attribute_eval(&subjects, &svc, &cfg(1), &Matcher::Exact).unwrap();
        let a = report.attributes.unwrap();
        assert_eq!(a.skipped, 2);
        assert_eq!(a.cases.len(), 1);
        assert_eq!(a.cases[0].removed, vec!["x", "y"]);
        assert_eq!(a.cases[0].recall, 1.0);
    }

    #[test]
    fn report_text_and_json() {
        let svc = CompletionService::new(Arc::new(MockProvider::new()));
        let models = vec![("m".to_string(), pair_model())];
        let report = run_association_eval(&named_pairs(&models), &svc, &cfg(1), &Matcher::Exact).unwrap();
        let text = report.render_table();
        assert!(text.contains("association accuracy"));
        assert!(text.contains("reference (hosted model): accuracy 0.64"));
        let json = report.to_json();
        let back: EvalReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
        assert_eq!(back.config.name_temperatures, vec![0.7, 0.8, 0.9]);
    }

    #[test]
    fn rejects_bad_fraction() {
        let svc = CompletionService::new(Arc::new(MockProvider::new()));
        let mut c = cfg(1);
        c.fraction = 0.0;
        assert!(matches!(
            run_class_rounds(&[("m".into(), pair_model())], &svc, &c, &Matcher::Exact),
            Err(EvalError::InvalidConfig(_))
        ));
    }
}
