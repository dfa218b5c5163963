//! Partial model in, ranked suggestions out.

use std::collections::HashSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::model::{
    ActivityModel, Association, AttributeSuggestion, ClassDiagram, ClassSuggestionSet, Identifier, ModelError, Scored,
};
use crate::parse::{self, Dropped};
use crate::prompt::{self, Hyperparams, Prompt, PromptError, ShotLibrary, TaskKind};
use crate::provider::{CompletionProvider, GenerationRequest, GenerationResult, ProviderError};
use crate::rank::{rank_by_frequency, select_ranked, SelectionPolicy};

pub const DEFAULT_N_PROMPTS: usize = 5;
pub const DEFAULT_IN_FLIGHT: usize = 4;
pub const NAME_TEMPERATURE_RANGE: (f64, f64) = (0.70, 0.90);
pub const ACTIVITY_RETRIES: usize = 2;
pub const ACTIVITY_RETRY_STEP: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompletionConfig {
    pub n_prompts: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
    /// `None` picks [`SelectionPolicy::default_for`] the prompt count.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policy: Option<SelectionPolicy>,
    pub rng_seed: u64,
    pub in_flight: usize,
}

impl Default for CompletionConfig {
    fn default() -> Self {
        Self {
            n_prompts: DEFAULT_N_PROMPTS,
            temperature: None,
            max_tokens: None,
            policy: None,
            rng_seed: 0,
            in_flight: DEFAULT_IN_FLIGHT,
        }
    }
}

impl CompletionConfig {
    pub fn effective_policy(&self) -> SelectionPolicy {
        self.policy
            .unwrap_or_else(|| SelectionPolicy::default_for(self.n_prompts))
    }

    pub fn hyperparams(&self, task: TaskKind) -> Hyperparams {
        let mut hp = Hyperparams::for_task(task);
        if let Some(t) = self.temperature {
            hp.temperature = t;
        }
        if let Some(m) = self.max_tokens {
            hp.max_tokens = m;
        }
        hp
    }

    pub fn validate(&self) -> Result<(), ServiceError> {
        if self.n_prompts == 0 {
            return Err(ServiceError::InvalidConfig("n_prompts must be at least 1".into()));
        }
        if self.in_flight == 0 {
            return Err(ServiceError::InvalidConfig("in_flight must be at least 1".into()));
        }
        self.hyperparams(TaskKind::ClassPairs)
            .validate()
            .map_err(|e| ServiceError::InvalidConfig(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ServiceError {
    #[error("no associations in the partial model")]
    NoAssociations,
    #[error("class `{0}` is not in the model")]
    UnknownClass(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("the activity model is already closed")]
    AlreadyClosed,
    #[error("generated text could not be parsed ({reason}): {raw:?}")]
    SuggestionUnparseable { raw: String, reason: String },
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Prompt(PromptError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl From<PromptError> for ServiceError {
    fn from(e: PromptError) -> Self {
        match e {
            PromptError::NoAssociations => ServiceError::NoAssociations,
            PromptError::UnknownClass(c) => ServiceError::UnknownClass(c),
            other => ServiceError::Prompt(other),
        }
    }
}

/// One prompt of a round and what came back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub query: String,
    pub temperature: f64,
    pub text: String,
}

/// Class suggestions plus the round's diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRound {
    pub suggestions: ClassSuggestionSet,
    pub policy: SelectionPolicy,
    pub exchanges: Vec<Exchange>,
    pub dropped: Vec<Dropped>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NameCandidate {
    pub name: Identifier,
    pub temperature: f64,
}

/// Evenly spaced temperatures over [0.70, 0.90]; a single attempt uses 0.70.
pub fn name_temperatures(attempts: usize) -> Vec<f64> {
    let (lo, hi) = NAME_TEMPERATURE_RANGE;
    match attempts {
        0 => Vec::new(),
        1 => vec![lo],
        n => (0..n)
            .map(|i| round4(lo + (hi - lo) * i as f64 / (n - 1) as f64))
            .collect(),
    }
}

/// Attribute suggestions for `class` as an acceptable suggestion set.
pub fn attribute_set(class: &Identifier, found: Vec<Scored<Identifier>>) -> ClassSuggestionSet {
    ClassSuggestionSet {
        attributes: found
            .into_iter()
            .map(|s| {
                Scored::new(
                    AttributeSuggestion {
                        class: class.clone(),
                        attribute: s.item,
                    },
                    s.frequency,
                )
            })
            .collect(),
        ..ClassSuggestionSet::default()
    }
}

/// Name candidates grouped into named associations, most frequent first;
/// ties keep first-seen order.
pub fn name_set(pair: (&Identifier, &Identifier), candidates: &[NameCandidate]) -> ClassSuggestionSet {
    let mut associations: Vec<Scored<Association>> = Vec::new();
    for c in candidates {
        match associations.iter_mut().find(|a| a.item.name.as_ref() == Some(&c.name)) {
            Some(a) => a.frequency += 1,
            None => associations.push(Scored::new(
                Association::named(pair.0.clone(), pair.1.clone(), c.name.clone()),
                1,
            )),
        }
    }
    associations.sort_by(|a, b| b.frequency.cmp(&a.frequency));
    ClassSuggestionSet {
        associations,
        ..ClassSuggestionSet::default()
    }
}

fn round4(x: f64) -> f64 {
    (x * 10_000.0).round() / 10_000.0
}

#[derive(Clone)]
pub struct CompletionService {
    provider: Arc<dyn CompletionProvider>,
    shots: Arc<ShotLibrary>,
}

impl CompletionService {
    pub fn new(provider: Arc<dyn CompletionProvider>) -> Self {
        Self::with_shots(provider, ShotLibrary::bundled())
    }

    pub fn with_shots(provider: Arc<dyn CompletionProvider>, shots: ShotLibrary) -> Self {
        Self {
            provider,
            shots: Arc::new(shots),
        }
    }

    pub fn provider_id(&self) -> &str {
        self.provider.id()
    }

    pub fn shots(&self) -> &ShotLibrary {
        &self.shots
    }

    pub fn suggest_classes(
        &self,
        partial: &ClassDiagram,
        cfg: &CompletionConfig,
    ) -> Result<ClassSuggestionSet, ServiceError> {
        Ok(self.suggest_classes_round(partial, cfg)?.suggestions)
    }

    pub fn suggest_classes_round(
        &self,
        partial: &ClassDiagram,
        cfg: &CompletionConfig,
    ) -> Result<ClassRound, ServiceError> {
        cfg.validate()?;
        let subsets = prompt::sample_query_subsets(partial, cfg.n_prompts, cfg.rng_seed)?;
        let prompts = subsets
            .iter()
            .map(|s| prompt::build_class_prompt(self.shots.for_task(TaskKind::ClassPairs), partial, s))
            .collect::<Result<Vec<_>, _>>()?;
        let results = self.run(&prompts, cfg)?;

        let mut dropped = Vec::new();
        let mut pair_sets: Vec<Vec<Association>> = Vec::new();
        let mut class_sets: Vec<Vec<Identifier>> = Vec::new();
        for (p, r) in prompts.iter().zip(&results) {
            let extracted = parse::extract_class_pairs(&r.text, &p.query);
            dropped.extend(extracted.dropped);
            let novel: Vec<Association> = extracted
                .pairs
                .into_iter()
                .filter(|(a, b)| a != b)
                .map(|(a, b)| Association::new(a, b))
                .filter(|a| !partial.has_association(a))
                .collect();
            class_sets.push(
                novel
                    .iter()
                    .flat_map(|a| [a.source.clone(), a.target.clone()])
                    .filter(|c| !partial.has_class(c))
                    .collect(),
            );
            pair_sets.push(novel);
        }

        let policy = cfg.effective_policy();
        let selected = select_ranked(&rank_by_frequency(&pair_sets), policy);
        let endpoint_set: HashSet<&Identifier> = selected
            .iter()
            .flat_map(|r| [&r.item.source, &r.item.target])
            .collect();
        let classes = rank_by_frequency(&class_sets)
            .into_iter()
            .filter(|r| endpoint_set.contains(&r.item))
            .map(|r| Scored::new(r.item, r.frequency))
            .collect();
        let associations = selected
            .into_iter()
            .map(|r| Scored::new(r.item, r.frequency))
            .collect();
        Ok(ClassRound {
            suggestions: ClassSuggestionSet {
                classes,
                associations,
                attributes: Vec::new(),
            },
            policy,
            exchanges: exchanges(&prompts, &results),
            dropped,
        })
    }

    pub fn suggest_attributes(
        &self,
        partial: &ClassDiagram,
        class: &Identifier,
        cfg: &CompletionConfig,
    ) -> Result<Vec<Scored<Identifier>>, ServiceError> {
        cfg.validate()?;
        let decl = partial
            .class(class)
            .ok_or_else(|| ServiceError::UnknownClass(class.display().to_string()))?;
        let prompt = prompt::build_attribute_prompt(self.shots.for_task(TaskKind::Attributes), partial, class)?;
        let prompts = vec![prompt; cfg.n_prompts];
        let results = self.run(&prompts, cfg)?;
        let per_prompt: Vec<Vec<Identifier>> = results
            .iter()
            .map(|r| parse::extract_attributes(&r.text, &decl.name, &decl.attributes))
            .collect();
        Ok(
            select_ranked(&rank_by_frequency(&per_prompt), cfg.effective_policy())
                .into_iter()
                .map(|r| Scored::new(r.item, r.frequency))
                .collect(),
        )
    }

    pub fn suggest_association_name(
        &self,
        pair: (&Identifier, &Identifier),
        cfg: &CompletionConfig,
        attempts: usize,
    ) -> Result<Vec<NameCandidate>, ServiceError> {
        if attempts == 0 {
            return Err(ServiceError::InvalidConfig("attempts must be at least 1".into()));
        }
        let base = prompt::build_association_name_prompt(self.shots.for_task(TaskKind::AssociationName), pair);
        let temperatures = name_temperatures(attempts);
        let prompts: Vec<Prompt> = temperatures
            .iter()
            .map(|&t| {
                let mut p = base.clone();
                p.hyperparams.temperature = t;
                if let Some(m) = cfg.max_tokens {
                    p.hyperparams.max_tokens = m;
                }
                p
            })
            .collect();
        let results = self.run_prompts(&prompts, cfg.in_flight.max(1))?;
        Ok(results
            .iter()
            .zip(temperatures)
            .filter_map(|(r, temperature)| {
                parse::extract_association_name(&r.text).map(|name| NameCandidate { name, temperature })
            })
            .collect())
    }

    pub fn complete_activity(
        &self,
        partial: &ActivityModel,
        cfg: &CompletionConfig,
    ) -> Result<ActivityModel, ServiceError> {
        partial.validate()?;
        if partial.is_closed() {
            return Err(ServiceError::AlreadyClosed);
        }
        let mut prompt = prompt::build_activity_prompt(self.shots.for_task(TaskKind::Activity), partial)?;
        prompt.hyperparams = cfg.hyperparams(TaskKind::Activity);
        let mut last_err = None;
        for attempt in 0..=ACTIVITY_RETRIES {
            if attempt > 0 {
                prompt.hyperparams.temperature =
                    round4((prompt.hyperparams.temperature + ACTIVITY_RETRY_STEP).min(2.0));
            }
            let result = match self.provider.complete(&GenerationRequest::from_prompt(&prompt)) {
                Ok(r) => r,
                Err(e) if attempt > 0 => {
                    warn!("activity retry {attempt} failed: {e}");
                    break;
                }
                Err(e) => return Err(e.into()),
            };
            match parse::parse_activity_continuation(&result.text, partial) {
                Ok(model) => return Ok(model),
                Err(e) => {
                    debug!("unparseable continuation at t={}: {e}", prompt.hyperparams.temperature);
                    last_err = Some(ServiceError::SuggestionUnparseable {
                        raw: result.text,
                        reason: e.to_string(),
                    });
                }
            }
        }
        Err(last_err.expect("at least one attempt ran"))
    }

    fn run(&self, prompts: &[Prompt], cfg: &CompletionConfig) -> Result<Vec<GenerationResult>, ServiceError> {
        let task = prompts.first().map_or(TaskKind::ClassPairs, |p| p.task);
        let hp = cfg.hyperparams(task);
        let prompts: Vec<Prompt> = prompts
            .iter()
            .cloned()
            .map(|mut p| {
                p.hyperparams = hp.clone();
                p
            })
            .collect();
        self.run_prompts(&prompts, cfg.in_flight)
    }

    /// Issues every prompt with at most `limit` in flight; results keep
    /// prompt order. The first failure (by prompt order) is returned.
    fn run_prompts(&self, prompts: &[Prompt], limit: usize) -> Result<Vec<GenerationResult>, ServiceError> {
        let requests: Vec<GenerationRequest> = prompts.iter().map(GenerationRequest::from_prompt).collect();
        let slots: Mutex<Vec<Option<Result<GenerationResult, ProviderError>>>> =
            Mutex::new(vec![None; requests.len()]);
        let next = AtomicUsize::new(0);
        let workers = limit.clamp(1, requests.len().max(1));
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some(req) = requests.get(i) else { break };
                    let out = self.provider.complete(req);
                    slots.lock().unwrap()[i] = Some(out);
                });
            }
        });
        slots
            .into_inner()
            .unwrap()
            .into_iter()
            .map(|r| r.expect("every slot is filled").map_err(ServiceError::from))
            .collect()
    }
}

fn exchanges(prompts: &[Prompt], results: &[GenerationResult]) -> Vec<Exchange> {
    prompts
        .iter()
        .zip(results)
        .map(|(p, r)| Exchange {
            query: p.query.clone(),
            temperature: p.hyperparams.temperature,
            text: r.text.clone(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{merge_suggestions, ClassDecl};
    use crate::provider::{FinishReason, MockProvider};
    use std::sync::atomic::AtomicUsize;

    fn id(s: &str) -> Identifier {
        Identifier::new(s).unwrap()
    }

    struct Fixed {
        text: String,
        calls: AtomicUsize,
        peak: AtomicUsize,
        live: AtomicUsize,
    }

    impl Fixed {
        fn new(text: &str) -> Arc<Self> {
            Arc::new(Self {
                text: text.into(),
                calls: AtomicUsize::new(0),
                peak: AtomicUsize::new(0),
                live: AtomicUsize::new(0),
            })
        }
    }

    impl CompletionProvider for Fixed {
        fn id(&self) -> &str {
            "fixed"
        }

        fn complete(&self, _: &GenerationRequest) -> Result<GenerationResult, ProviderError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            let now = self.live.fetch_add(1, Ordering::SeqCst) + 1;
            self.peak.fetch_max(now, Ordering::SeqCst);
            std::thread::sleep(std::time::Duration::from_millis(5));
            self.live.fetch_sub(1, Ordering::SeqCst);
            Ok(GenerationResult {
                text: self.text.clone(),
                finish_reason: FinishReason::Stop,
                provider: "fixed".into(),
            })
        }
    }

    fn bank() -> ClassDiagram {
        ClassDiagram {
            package_name: id("Bank"),
            classes: ["bank", "client", "clientcollection"].map(|c| ClassDecl::new(id(c))).to_vec(),
            associations: vec![
                Association::new(id("bank"), id("client")),
                Association::new(id("client"), id("clientcollection")),
            ],
        }
    }

    fn all(n: usize) -> CompletionConfig {
        CompletionConfig {
            n_prompts: n,
            policy: Some(SelectionPolicy::All),
            ..CompletionConfig::default()
        }
    }

    #[test]
    fn empty_generations_give_empty_set() {
        let svc = CompletionService::new(Fixed::new(""));
        assert!(svc.suggest_classes(&bank(), &all(3)).unwrap().is_empty());
    }

    #[test]
    fn known_pairs_are_deduped() {
        let svc = CompletionService::new(Fixed::new("[client, bank], [clientcollection, client]"));
        assert!(svc.suggest_classes(&bank(), &all(2)).unwrap().is_empty());
    }

    #[test]
    fn workload_and_in_flight_limit() {
        let p = Fixed::new("Bank: [loan, deposit]");
        let svc = CompletionService::new(p.clone());
        let cfg = CompletionConfig {
            n_prompts: 9,
            in_flight: 3,
            ..CompletionConfig::default()
        };
        let set = svc.suggest_classes(&bank(), &cfg).unwrap();
        assert_eq!(p.calls.load(Ordering::SeqCst), 9);
        assert!(p.peak.load(Ordering::SeqCst) <= 3);
        assert_eq!(set.associations[0].frequency, 9);
        assert_eq!(set.classes.len(), 2);
    }

    #[test]
    fn no_associations() {
        let mut d = bank();
        d.associations.clear();
        let svc = CompletionService::new(Fixed::new(""));
        assert_eq!(svc.suggest_classes(&d, &all(1)), Err(ServiceError::NoAssociations));
    }

    #[test]
    fn mock_round_keeps_merged_model_valid_and_novel() {
        let svc = CompletionService::new(Arc::new(MockProvider::new()));
        let d = bank();
        let set = svc.suggest_classes(&d, &all(4)).unwrap();
        assert!(!set.is_empty());
        for c in &set.classes {
            assert!(!d.has_class(&c.item));
        }
        for a in &set.associations {
            assert!(!d.has_association(&a.item));
            for end in [&a.item.source, &a.item.target] {
                assert!(d.has_class(end) || set.classes.iter().any(|c| &c.item == end));
            }
        }
        assert!(merge_suggestions(&d, &set).validate().is_empty());
        assert_eq!(svc.suggest_classes(&d, &all(4)).unwrap(), set);
    }

    #[test]
    fn attributes_for_unknown_class() {
        let svc = CompletionService::new(Fixed::new(""));
        assert_eq!(
            svc.suggest_attributes(&bank(), &id("vault"), &all(1)),
            Err(ServiceError::UnknownClass("vault".into()))
        );
    }

    #[test]
    fn attributes_already_present_give_nothing() {
        let mut d = bank();
        d.classes[1].attributes = vec![id("card")];
        let svc = CompletionService::new(Fixed::new("client: [card]"));
        assert!(svc.suggest_attributes(&d, &id("client"), &all(2)).unwrap().is_empty());
    }

    #[test]
    fn name_temperature_spread() {
        assert_eq!(name_temperatures(3), vec![0.7, 0.8, 0.9]);
        assert_eq!(name_temperatures(1), vec![0.7]);
        assert_eq!(name_temperatures(5), vec![0.7, 0.75, 0.8, 0.85, 0.9]);
    }

    #[test]
    fn invalid_names_are_dropped() {
        let svc = CompletionService::new(Fixed::new(" 123"));
        let got = svc
            .suggest_association_name((&id("a"), &id("b")), &CompletionConfig::default(), 3)
            .unwrap();
        assert!(got.is_empty());
        assert!(svc
            .suggest_association_name((&id("a"), &id("b")), &CompletionConfig::default(), 0)
            .is_err());
    }

    #[test]
    fn activity_retries_then_reports_raw_text() {
        let p = Fixed::new("} else {");
        let svc = CompletionService::new(p.clone());
        let partial = ActivityModel::open(id("m"), vec![crate::model::Step::action("a").unwrap()], 0);
        let err = svc.complete_activity(&partial, &CompletionConfig::default()).unwrap_err();
        assert!(matches!(err, ServiceError::SuggestionUnparseable { ref raw, .. } if raw == "} else {"));
        assert_eq!(p.calls.load(Ordering::SeqCst), 1 + ACTIVITY_RETRIES);
    }

    #[test]
    fn closed_activity_is_rejected() {
        let svc = CompletionService::new(Fixed::new(""));
        let closed = ActivityModel::closed(id("m"), vec![crate::model::Step::action("a").unwrap()]);
        assert_eq!(
            svc.complete_activity(&closed, &CompletionConfig::default()),
            Err(ServiceError::AlreadyClosed)
        );
    }

    #[test]
    fn config_json_defaults() {
        let cfg: CompletionConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg, CompletionConfig::default());
        let cfg: CompletionConfig = serde_json::from_str(r#"{"n_prompts":1,"policy":"all"}"#).unwrap();
        assert_eq!(cfg.effective_policy(), SelectionPolicy::All);
        assert!(serde_json::from_str::<CompletionConfig>(r#"{"bogus":1}"#).is_err());
        assert_eq!(CompletionConfig::default().effective_policy(), SelectionPolicy::MinFrequency(2));
    }
}
