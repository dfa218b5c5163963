use std::io::{BufRead, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use serde_json::json;

use modelcomp_core::eval::{
    attribute_subjects, load_dataset, named_pairs, run_association_eval, run_attribute_eval, run_class_rounds,
    EvalConfig, InteractiveMatcher, MatchPolicy, Matcher, VerdictStore,
};
use modelcomp_core::model::{
    load_model, merge_suggestions, save_model, ActivityModel, ClassDiagram, ClassSuggestionSet, Identifier, Model,
};
use modelcomp_core::prompt::{serialize_activity, Hyperparams, TaskKind};
use modelcomp_core::provider::{
    CompletionProvider, FinishReason, FixtureStore, GenerationRequest, GenerationResult, LiveConfig, LiveProvider,
    MockProvider, ProviderKind, RecordingProvider, ReplayProvider, API_KEY_ENV,
};
use modelcomp_core::rank::SelectionPolicy;
use modelcomp_core::service::{attribute_set, name_set, CompletionConfig, CompletionService, NameCandidate};

use crate::config::FileConfig;
use crate::{Cli, Command, EvalArgs, EvalCmd, Failure, FixturesCmd, GenArgs, PutArgs, ServeArgs, SuggestCmd};

const DEFAULT_FIXTURES: &str = "fixtures/exchanges";
const DEFAULT_ADDR: &str = "127.0.0.1:8080";

fn domain(e: impl std::fmt::Display) -> Failure {
    Failure::Domain(e.to_string())
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p).map_err(usage)?,
        None => FileConfig::default(),
    };
    let out = Output { json: cli.json };
    match cli.command {
        Command::Suggest(cmd) => suggest(&cmd, &file, &out, false),
        Command::Fixtures(FixturesCmd::Record(cmd)) => suggest(&cmd, &file, &out, true),
        Command::Fixtures(FixturesCmd::Put(args)) => put(&args, &file, &out),
        Command::Eval(cmd) => eval(cmd, &file, &out),
        Command::Serve(args) => serve(&args, &file),
    }
}

struct Output {
    json: bool,
}

impl Output {
    fn emit<T: Serialize>(&self, value: &T, text: impl FnOnce() -> String) {
        let mut stdout = std::io::stdout().lock();
        if self.json {
            let _ = writeln!(stdout, "{}", serde_json::to_string_pretty(value).expect("output serializes"));
        } else {
            let _ = write!(stdout, "{}", text());
        }
    }
}

/// Flags override the config file, which overrides built-in defaults.
struct Settings {
    provider: ProviderKind,
    fixtures: PathBuf,
    completion: CompletionConfig,
}

fn settings(gen: &GenArgs, file: &FileConfig) -> Result<Settings, Failure> {
    let provider = match (&gen.provider, &file.provider) {
        (Some(p), _) => *p,
        (None, Some(s)) => s.parse().map_err(usage)?,
        (None, None) => ProviderKind::Live,
    };
    let policy = match (&gen.policy, &file.policy) {
        (Some(p), _) => Some(*p),
        (None, Some(s)) => Some(s.parse::<SelectionPolicy>().map_err(usage)?),
        (None, None) => None,
    };
    let defaults = CompletionConfig::default();
    Ok(Settings {
        provider,
        fixtures: gen
            .fixtures
            .clone()
            .or_else(|| file.fixtures.clone())
            .unwrap_or_else(|| PathBuf::from(DEFAULT_FIXTURES)),
        completion: CompletionConfig {
            n_prompts: gen.n_prompts.or(file.n_prompts).unwrap_or(defaults.n_prompts),
            temperature: gen.temperature.or(file.temperature),
            max_tokens: gen.max_tokens.or(file.max_tokens),
            policy,
            rng_seed: gen.seed.or(file.seed).unwrap_or(defaults.rng_seed),
            in_flight: gen.in_flight.or(file.in_flight).unwrap_or(defaults.in_flight),
        },
    })
}

fn provider(s: &Settings, file: &FileConfig, record: bool) -> Result<Arc<dyn CompletionProvider>, Failure> {
    let base: Arc<dyn CompletionProvider> = match s.provider {
        ProviderKind::Mock => Arc::new(MockProvider::new()),
        ProviderKind::Replay if record => {
            return Err(usage("recording needs a live or mock provider"));
        }
        ProviderKind::Replay => Arc::new(ReplayProvider::open(&s.fixtures).map_err(domain)?),
        ProviderKind::Live => {
            let config: LiveConfig = file.live.clone().with_env_key();
            if config.api_key.is_none() {
                return Err(domain(format!("the live provider needs {API_KEY_ENV} in the environment")));
            }
            Arc::new(LiveProvider::new(config).map_err(domain)?)
        }
    };
    if !record {
        return Ok(base);
    }
    let store = FixtureStore::open_or_create(&s.fixtures).map_err(domain)?;
    Ok(Arc::new(RecordingProvider::new(base, Arc::new(store))))
}

fn read_model(path: &Path) -> Result<Model, Failure> {
    let bytes = std::fs::read(path).map_err(|e| domain(format!("{}: {e}", path.display())))?;
    load_model(&bytes).map_err(|e| domain(format!("{}: {e}", path.display())))
}

fn class_model(path: &Path) -> Result<ClassDiagram, Failure> {
    match read_model(path)? {
        Model::Class(d) => Ok(d),
        Model::Activity(_) => Err(domain(format!("{}: expected a class diagram", path.display()))),
    }
}

fn activity_model(path: &Path) -> Result<ActivityModel, Failure> {
    match read_model(path)? {
        Model::Activity(a) => Ok(a),
        Model::Class(_) => Err(domain(format!("{}: expected an activity model", path.display()))),
    }
}

fn write_model(path: &Path, model: &Model) -> Result<(), Failure> {
    std::fs::write(path, save_model(model)).map_err(|e| domain(format!("{}: {e}", path.display())))
}

fn identifier(raw: &str) -> Result<Identifier, Failure> {
    Identifier::new(raw).map_err(usage)
}

fn suggest(cmd: &SuggestCmd, file: &FileConfig, out: &Output, record: bool) -> Result<(), Failure> {
    let args = cmd.args();
    let s = settings(&args.gen, file)?;
    let service = CompletionService::new(provider(&s, file, record)?);
    let cfg = &s.completion;
    match cmd {
        SuggestCmd::Classes(_) => {
            let diagram = class_model(&args.model)?;
            let round = service.suggest_classes_round(&diagram, cfg).map_err(domain)?;
            for d in &round.dropped {
                log::debug!("dropped `{}`: {:?}", d.token, d.reason);
            }
            out.emit(&round.suggestions, || render_set(&round.suggestions));
            apply(&args.out, &diagram, &round.suggestions)
        }
        SuggestCmd::Attributes { class, .. } => {
            let diagram = class_model(&args.model)?;
            let class = identifier(class)?;
            let found = service.suggest_attributes(&diagram, &class, cfg).map_err(domain)?;
            let name = diagram.class(&class).map_or(class.clone(), |c| c.name.clone());
            let set = attribute_set(&name, found);
            out.emit(&set, || render_set(&set));
            apply(&args.out, &diagram, &set)
        }
        SuggestCmd::AssocName { class, attempts, .. } => {
            let diagram = class_model(&args.model)?;
            let (a, b) = (identifier(&class[0])?, identifier(&class[1])?);
            for end in [&a, &b] {
                if !diagram.has_class(end) {
                    return Err(domain(format!("class `{end}` is not in the model")));
                }
            }
            let attempts = attempts.unwrap_or(modelcomp_core::eval::DEFAULT_ATTEMPTS);
            let candidates = service
                .suggest_association_name((&a, &b), cfg, attempts)
                .map_err(domain)?;
            let set = name_set((&a, &b), &candidates);
            let body = json!({"candidates": candidates, "suggestions": set});
            out.emit(&body, || render_names(&candidates));
            let top = ClassSuggestionSet {
                associations: set.associations.into_iter().take(1).collect(),
                ..ClassSuggestionSet::default()
            };
            apply(&args.out, &diagram, &top)
        }
        SuggestCmd::Activity(_) => {
            let partial = activity_model(&args.model)?;
            let done = service.complete_activity(&partial, cfg).map_err(domain)?;
            let model = Model::Activity(done);
            let value: serde_json::Value = serde_json::from_slice(&save_model(&model)).expect("saved models are JSON");
            let Model::Activity(done) = &model else { unreachable!() };
            out.emit(&value, || format!("{}\n", serialize_activity(done, false)));
            match &args.out {
                Some(p) => write_model(p, &model),
                None => Ok(()),
            }
        }
    }
}

fn apply(out: &Option<PathBuf>, diagram: &ClassDiagram, set: &ClassSuggestionSet) -> Result<(), Failure> {
    let Some(path) = out else { return Ok(()) };
    let merged = merge_suggestions(diagram, set);
    let violations = merged.validate();
    if let Some(v) = violations.first() {
        return Err(domain(format!("merged model is invalid: {v}")));
    }
    write_model(path, &Model::Class(merged))
}

fn render_set(set: &ClassSuggestionSet) -> String {
    let mut s = String::new();
    if !set.classes.is_empty() {
        s.push_str("classes:\n");
        for c in &set.classes {
            s.push_str(&format!("  {:<24} {}\n", c.item.display(), c.frequency));
        }
    }
    if !set.associations.is_empty() {
        s.push_str("associations:\n");
        for a in &set.associations {
            let pair = format!("{} - {}", a.item.source.display(), a.item.target.display());
            match &a.item.name {
                Some(n) => s.push_str(&format!("  {pair:<24} {} {}\n", n.display(), a.frequency)),
                None => s.push_str(&format!("  {pair:<24} {}\n", a.frequency)),
            }
        }
    }
    if !set.attributes.is_empty() {
        s.push_str("attributes:\n");
        for a in &set.attributes {
            let name = format!("{}.{}", a.item.class.display(), a.item.attribute.display());
            s.push_str(&format!("  {name:<24} {}\n", a.frequency));
        }
    }
    if s.is_empty() {
        s.push_str("no suggestions\n");
    }
    s
}

fn render_names(candidates: &[NameCandidate]) -> String {
    if candidates.is_empty() {
        return "no usable name\n".into();
    }
    candidates
        .iter()
        .map(|c| format!("{:.2}  {}\n", c.temperature, c.name.display()))
        .collect()
}

/// Asks on stderr, reads `y` or `n` from stdin; end of input means no.
struct StdinJudge;

impl modelcomp_core::eval::Judge for StdinJudge {
    fn judge(&mut self, candidate: &Identifier, truth: &Identifier) -> bool {
        eprint!("is `{}` the same concept as `{}`? [y/N] ", candidate.display(), truth.display());
        let _ = std::io::stderr().flush();
        let mut line = String::new();
        match std::io::stdin().lock().read_line(&mut line) {
            Ok(0) | Err(_) => false,
            Ok(_) => matches!(line.trim().to_ascii_lowercase().as_str(), "y" | "yes"),
        }
    }
}

fn parse_matcher(raw: &str) -> Result<MatchPolicy, Failure> {
    let raw = raw.trim();
    match raw.split_once(':') {
        None if raw == "exact" => Ok(MatchPolicy::Exact),
        None if raw == "stemmed" => Ok(MatchPolicy::Stemmed),
        Some(("synonyms", path)) if !path.is_empty() => Ok(MatchPolicy::SynonymTable { path: path.into() }),
        Some(("interactive", path)) if !path.is_empty() => Ok(MatchPolicy::Interactive { verdicts: path.into() }),
        _ => Err(usage(format!(
            "unknown matcher `{raw}`; expected exact, stemmed, synonyms:FILE or interactive:FILE"
        ))),
    }
}

fn eval(cmd: EvalCmd, file: &FileConfig, out: &Output) -> Result<(), Failure> {
    let (task, args): (&str, EvalArgs) = match cmd {
        EvalCmd::Classes(a) => ("classes", a),
        EvalCmd::Attributes(a) => ("attributes", a),
        EvalCmd::AssocNames(a) => ("assoc-names", a),
    };
    let s = settings(&args.gen, file)?;
    let policy = parse_matcher(args.matcher.as_deref().or(file.matcher.as_deref()).unwrap_or("stemmed"))?;
    let defaults = EvalConfig::default();
    let cfg = EvalConfig {
        completion: s.completion.clone(),
        fraction: args.fraction.unwrap_or(defaults.fraction),
        scope: args.scope.map_or(defaults.scope, Into::into),
        removal: args.removal.unwrap_or(defaults.removal),
        attempts: args.attempts.unwrap_or(defaults.attempts),
        seed: s.completion.rng_seed,
        sample: args.sample,
    };
    let matcher = match &policy {
        MatchPolicy::Interactive { verdicts } => {
            let store = VerdictStore::load(verdicts).map_err(domain)?;
            Matcher::Interactive(InteractiveMatcher::with_judge(store, Box::new(StdinJudge)))
        }
        p => Matcher::from_policy(p).map_err(domain)?,
    };
    let models = load_dataset(&args.dataset).map_err(domain)?;
    let service = CompletionService::new(provider(&s, file, false)?);
    let report = match task {
        "classes" => run_class_rounds(&models, &service, &cfg, &matcher),
        "attributes" => run_attribute_eval(&attribute_subjects(&models), &service, &cfg, &matcher),
        _ => run_association_eval(&named_pairs(&models), &service, &cfg, &matcher),
    }
    .map_err(domain)?;

    if let (MatchPolicy::Interactive { verdicts }, Matcher::Interactive(m)) = (&policy, &matcher) {
        m.verdicts()
            .save(verdicts)
            .map_err(|e| domain(format!("{}: {e}", verdicts.display())))?;
    }
    let json = report.to_json();
    if let Some(path) = &args.report {
        std::fs::write(path, &json).map_err(|e| domain(format!("{}: {e}", path.display())))?;
    }
    if out.json {
        print!("{json}");
    } else {
        print!("{}", report.render_table());
    }
    Ok(())
}

fn serve(args: &ServeArgs, file: &FileConfig) -> Result<(), Failure> {
    let s = settings(&args.gen, file)?;
    let addr: SocketAddr = match (args.addr, &file.addr) {
        (Some(a), _) => a,
        (None, Some(a)) => a.parse().map_err(|e| usage(format!("addr `{a}`: {e}")))?,
        (None, None) => DEFAULT_ADDR.parse().expect("default address parses"),
    };
    // the blocking HTTP client must exist before the async runtime starts
    let service = CompletionService::new(provider(&s, file, false)?);
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(domain)?;
    runtime
        .block_on(modelcomp_server::serve(addr, service))
        .map_err(|e| domain(format!("{addr}: {e}")))
}

fn strip_newline(mut s: String) -> String {
    if s.ends_with('\n') {
        s.pop();
        if s.ends_with('\r') {
            s.pop();
        }
    }
    s
}

fn put(args: &PutArgs, file: &FileConfig, out: &Output) -> Result<(), Failure> {
    let read = |p: &Path| {
        std::fs::read_to_string(p)
            .map(strip_newline)
            .map_err(|e| domain(format!("{}: {e}", p.display())))
    };
    let prompt = read(&args.prompt_file)?;
    let text = read(&args.text_file)?;
    let task = match &args.task {
        Some(t) => TaskKind::ALL
            .into_iter()
            .find(|k| k.as_str() == t.as_str())
            .ok_or_else(|| usage(format!("unknown task `{t}`")))?,
        None => prompt
            .lines()
            .next()
            .and_then(TaskKind::from_instruction)
            .ok_or_else(|| usage("cannot tell the task from the prompt; pass --task"))?,
    };
    let mut hp = Hyperparams::for_task(task);
    if let Some(t) = args.temperature.or(file.temperature) {
        hp.temperature = t;
    }
    if let Some(m) = args.max_tokens.or(file.max_tokens) {
        hp.max_tokens = m;
    }
    let mut request = GenerationRequest::new(prompt, hp);
    request.task = Some(task);
    request.validate().map_err(usage)?;
    let dir = args
        .fixtures
        .clone()
        .or_else(|| file.fixtures.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_FIXTURES));
    let store = FixtureStore::open_or_create(&dir).map_err(domain)?;
    let result = GenerationResult {
        text,
        finish_reason: FinishReason::Stop,
        provider: "manual".into(),
    };
    store.record(&request, &result).map_err(domain)?;
    let key = request.fixture_key();
    out.emit(&json!({"key": key, "task": task.as_str()}), || format!("{key}\n"));
    Ok(())
}
