//! Acceptance checks, one line per criterion.
//!
//! Runs without the libtest harness so every verdict reaches the console;
//! the process exits non-zero if any criterion fails.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use modelcomp_core::eval::{
    count_matches, make_partial, removed_indices, retained_count, run_association_eval, EvalConfig, Matcher,
    RoundMetrics,
};
use modelcomp_core::model::{
    load_model, ActivityModel, Association, ClassDecl, ClassDiagram, Identifier, Label, Model, Step,
};
use modelcomp_core::parse::{
    extract_association_name, extract_attributes, extract_class_pairs, parse_activity, parse_activity_continuation,
    NoiseFilter,
};
use modelcomp_core::prompt::{
    build_activity_prompt, build_attribute_prompt, build_class_prompt, serialize_activity, ShotLibrary, TaskKind,
};
use modelcomp_core::provider::{
    CompletionProvider, FinishReason, GenerationRequest, GenerationResult, ProviderError, ReplayProvider,
};
use modelcomp_core::rank::rank_by_frequency;
use modelcomp_core::service::{CompletionConfig, CompletionService};

type Outcome = Result<String, String>;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixture(rel: &str) -> PathBuf {
    root().join("fixtures").join(rel)
}

fn read(rel: &str) -> String {
    std::fs::read_to_string(fixture(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

fn class_fixture(rel: &str) -> ClassDiagram {
    match load_model(read(rel).as_bytes()).unwrap() {
        Model::Class(d) => d,
        Model::Activity(_) => panic!("{rel}: expected a class diagram"),
    }
}

fn activity_fixture(rel: &str) -> ActivityModel {
    match load_model(read(rel).as_bytes()).unwrap() {
        Model::Activity(a) => a,
        Model::Class(_) => panic!("{rel}: expected an activity model"),
    }
}

fn id(s: &str) -> Identifier {
    Identifier::new(s).unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took < limit, || format!("took {took:?}, limit {limit:?}"))
}

fn names(items: impl IntoIterator<Item = Identifier>) -> Vec<String> {
    let mut v: Vec<String> = items.into_iter().map(|i| i.normalized().to_string()).collect();
    v.sort();
    v
}

fn prompt_fidelity() -> Outcome {
    let start = Instant::now();
    let shots = ShotLibrary::bundled();

    let bank = class_fixture("partials/bank_partial.mcj");
    let class_prompt = build_class_prompt(shots.for_task(TaskKind::ClassPairs), &bank, &bank.associations)
        .map_err(|e| e.to_string())?
        .render();
    let attrs = class_fixture("partials/bank_attributes.mcj");
    let attr_prompt = build_attribute_prompt(shots.for_task(TaskKind::Attributes), &attrs, &id("client"))
        .map_err(|e| e.to_string())?
        .render();
    let shopping = activity_fixture("partials/shopping_partial.mcj");
    let activity_prompt = build_activity_prompt(shots.for_task(TaskKind::Activity), &shopping)
        .map_err(|e| e.to_string())?
        .render();

    let cases = [
        ("class", class_prompt, "prompts/bank_class_prompt.txt"),
        ("attribute", attr_prompt, "prompts/bank_attribute_prompt.txt"),
        ("activity", activity_prompt, "prompts/shopping_activity_prompt.txt"),
    ];
    for (what, built, rel) in &cases {
        let expected = read(rel);
        ensure(built.as_bytes() == expected.as_bytes(), || {
            let at = built
                .bytes()
                .zip(expected.bytes())
                .position(|(a, b)| a != b)
                .unwrap_or(built.len().min(expected.len()));
            format!("{what} prompt differs from {rel} at byte {at}")
        })?;
    }

    // lines the reference prompts are known to contain
    let visible = [
        (0, "Generate related concepts:"),
        (0, "hospital: [Nurse, Staff], [Department, Room], [Nurse,patient], [Nurse,department]"),
        (0, "reservationSystem: [SpecificFlight, GeneralFlight], [Airport, City], [passenger, plane], [trip, passenger]"),
        (0, "Bank: [bank, client], [client, clientcollection]"),
        (1, "Generate missing attributes for each class in this class diagram:"),
        (1, "package bank: bank: [id,name]; clientCollection: [amount]; client: [card]"),
        (2, "Online Shopping: start => search item => found / not found => if found {view item => buy / not to buy =>"),
    ];
    for (i, line) in visible {
        ensure(cases[i].1.lines().any(|l| l == line), || {
            format!("{} prompt lacks the line `{line}`", cases[i].0)
        })?;
    }
    within(start, Duration::from_secs(1))?;
    Ok(format!("3 prompts byte-identical in {:?}", start.elapsed()))
}

fn replay_end_to_end() -> Outcome {
    let provider = ReplayProvider::open(fixture("exchanges")).map_err(|e| e.to_string())?;
    let service = CompletionService::new(Arc::new(provider));
    let cfg = CompletionConfig {
        n_prompts: 1,
        policy: Some(modelcomp_core::rank::SelectionPolicy::All),
        ..CompletionConfig::default()
    };

    let start = Instant::now();
    let bank = class_fixture("partials/bank_partial.mcj");
    let set = service.suggest_classes(&bank, &cfg).map_err(|e| e.to_string())?;
    within(start, Duration::from_secs(1))?;
    let classes = names(set.classes.iter().map(|c| c.item.clone()));
    ensure(classes == ["account", "balance", "deposit", "loan", "transaction"], || {
        format!("classes {classes:?}")
    })?;
    let mut pairs: Vec<(String, String)> = set
        .associations
        .iter()
        .map(|a| (a.item.source.normalized().to_string(), a.item.target.normalized().to_string()))
        .collect();
    pairs.sort();
    let want: Vec<(String, String)> = [
        ("account", "balance"),
        ("account", "transaction"),
        ("loan", "clientcollection"),
        ("loan", "deposit"),
    ]
    .iter()
    .map(|(a, b)| (a.to_string(), b.to_string()))
    .collect();
    ensure(pairs == want, || format!("associations {pairs:?}"))?;

    let start = Instant::now();
    let attrs = class_fixture("partials/bank_attributes.mcj");
    let found = service
        .suggest_attributes(&attrs, &id("client"), &cfg)
        .map_err(|e| e.to_string())?;
    within(start, Duration::from_secs(1))?;
    let found = names(found.into_iter().map(|s| s.item));
    ensure(found == ["address", "id", "name"], || format!("attributes {found:?}"))?;

    let start = Instant::now();
    let partial = activity_fixture("partials/shopping_partial.mcj");
    let done = service
        .complete_activity(&partial, &CompletionConfig::default())
        .map_err(|e| e.to_string())?;
    within(start, Duration::from_secs(1))?;
    let expected = activity_fixture("partials/shopping_complete.mcj");
    ensure(done == expected, || {
        format!("completed activity:\n{}", serialize_activity(&done, false))
    })?;

    // the same through the binary
    let out = Command::new(env!("CARGO_BIN_EXE_modelcomp"))
        .args(["suggest", "classes", "--provider", "replay", "--n-prompts", "1", "--policy", "all", "--json"])
        .arg("--model")
        .arg(fixture("partials/bank_partial.mcj"))
        .arg("--fixtures")
        .arg(fixture("exchanges"))
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || String::from_utf8_lossy(&out.stderr).into_owned())?;
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    let mut cli_classes: Vec<&str> = json["classes"]
        .as_array()
        .ok_or("no classes array")?
        .iter()
        .filter_map(|c| c["item"].as_str())
        .collect();
    cli_classes.sort();
    ensure(cli_classes == classes, || format!("cli classes {cli_classes:?}"))?;
    Ok("5 classes, 4 associations, 3 attributes, completed workflow".into())
}

const WORDS: &[&str] = &[
    "search", "item", "view", "buy", "pay", "card", "end", "else", "start", "found", "not", "checkout", "ship",
    "order", "ticket", "print", "x",
];

fn label(rng: &mut ChaCha8Rng) -> Label {
    loop {
        let n = rng.random_range(1..=3);
        let text: Vec<&str> = (0..n).map(|_| *WORDS.choose(rng).unwrap()).collect();
        if text[0] != "if" {
            return Label::new(&text.join(" ")).unwrap();
        }
    }
}

fn random_seq(rng: &mut ChaCha8Rng, depth: usize, budget: &mut usize) -> Vec<Step> {
    let mut seq = Vec::new();
    let want = rng.random_range(1..=4);
    while seq.is_empty() || (seq.len() < want && *budget > 0) {
        *budget = budget.saturating_sub(1);
        let roll = rng.random_range(0..10);
        let step = if roll < 5 {
            Step::Action(label(rng))
        } else if roll < 7 {
            let k = rng.random_range(2..=3);
            Step::Choice((0..k).map(|_| label(rng)).collect())
        } else if depth < 4 && *budget > 0 {
            let then = random_seq(rng, depth + 1, budget);
            let otherwise = (rng.random_bool(0.5) && *budget > 0).then(|| random_seq(rng, depth + 1, budget));
            Step::Conditional {
                guard: label(rng),
                then,
                otherwise,
            }
        } else {
            Step::Action(label(rng))
        };
        seq.push(step);
    }
    seq
}

fn nesting(seq: &[Step]) -> usize {
    seq.iter()
        .map(|s| match s {
            Step::Conditional { then, otherwise, .. } => {
                1 + nesting(then).max(otherwise.as_deref().map_or(0, nesting))
            }
            _ => 0,
        })
        .max()
        .unwrap_or(0)
}

fn grammar_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0;
    let mut deepest = 0;
    while checked < 1000 {
        let mut budget = 11;
        let body = random_seq(&mut rng, 0, &mut budget);
        let model = ActivityModel::closed(id("Flow"), body);
        if model.step_count() > 12 || model.validate().is_err() {
            continue;
        }
        deepest = deepest.max(nesting(&model.body));
        let text = serialize_activity(&model, false);
        let parsed = parse_activity(&text).map_err(|e| format!("`{text}`: {e}"))?;
        ensure(parsed == model, || format!("`{text}` parsed differently"))?;
        checked += 1;
    }
    ensure(deepest == 4, || format!("corpus never reached depth 4 (max {deepest})"))?;
    Ok(format!("{checked} models, max nesting {deepest}"))
}

/// Frequency per item and the expected (item, frequency, rank) order.
fn brute_rank(prompts: &[Vec<String>]) -> Vec<(String, u32, u32)> {
    let mut freq: BTreeMap<String, u32> = BTreeMap::new();
    for p in prompts {
        let distinct: HashSet<&String> = p.iter().collect();
        for item in distinct {
            *freq.entry(item.clone()).or_default() += 1;
        }
    }
    let mut levels: Vec<u32> = freq.values().copied().collect();
    levels.sort_unstable_by(|a, b| b.cmp(a));
    levels.dedup();
    let mut rows: Vec<(String, u32, u32)> = freq
        .into_iter()
        .map(|(k, f)| {
            let rank = levels.iter().position(|&l| l == f).unwrap() as u32 + 1;
            (k, f, rank)
        })
        .collect();
    rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    rows
}

fn ranked_rows(prompts: &[Vec<String>]) -> Vec<(String, u32, u32)> {
    rank_by_frequency(prompts)
        .into_iter()
        .map(|r| (r.item, r.frequency, r.rank))
        .collect()
}

fn ranking_oracle() -> Outcome {
    let universe = ["a", "b", "c", "d"];
    let subsets: Vec<Vec<String>> = (0u32..16)
        .map(|mask| {
            universe
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, s)| s.to_string())
                .collect()
        })
        .collect();
    let mut cases = 0usize;
    for n in 0..=4u32 {
        for code in 0..16usize.pow(n) {
            let mut c = code;
            let prompts: Vec<Vec<String>> = (0..n)
                .map(|_| {
                    let s = subsets[c % 16].clone();
                    c /= 16;
                    s
                })
                .collect();
            let got = ranked_rows(&prompts);
            let want = brute_rank(&prompts);
            ensure(got == want, || format!("{prompts:?}: got {got:?}, want {want:?}"))?;
            cases += 1;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let base: Vec<Vec<Identifier>> = vec![
        vec![id("Loan"), id("account"), id("loan")],
        vec![id("loan"), id("Deposit")],
        vec![id("account"), id("deposit"), id("balance")],
        vec![id("LOAN"), id("balance"), id("account")],
    ];
    let reference = rank_by_frequency(&base);
    for _ in 0..100 {
        let mut shuffled = base.clone();
        shuffled.shuffle(&mut rng);
        for p in &mut shuffled {
            p.shuffle(&mut rng);
        }
        let got = rank_by_frequency(&shuffled);
        let same = got.len() == reference.len()
            && got.iter().zip(&reference).all(|(a, b)| {
                a.item.display() == b.item.display() && a.frequency == b.frequency && a.rank == b.rank
            });
        ensure(same, || format!("shuffle changed the ranking: {got:?}"))?;
    }
    Ok(format!("{cases} exhaustive inputs, 100 shuffles"))
}

/// Largest injective candidate-to-truth assignment, by exhaustive search.
fn brute_matches(cands: &[Identifier], truths: &[Identifier], m: &Matcher, i: usize, used: &mut Vec<bool>) -> usize {
    if i == cands.len() {
        return 0;
    }
    let mut best = brute_matches(cands, truths, m, i + 1, used);
    for t in 0..truths.len() {
        if !used[t] && m.matches(&cands[i], &truths[t]) {
            used[t] = true;
            best = best.max(1 + brute_matches(cands, truths, m, i + 1, used));
            used[t] = false;
        }
    }
    best
}

/// Answers association-name prompts from a table keyed by the query line.
struct Scripted(HashMap<String, String>);

impl CompletionProvider for Scripted {
    fn id(&self) -> &str {
        "scripted"
    }

    fn complete(&self, request: &GenerationRequest) -> Result<GenerationResult, ProviderError> {
        let query = request.prompt_text.lines().last().unwrap_or("").to_string();
        Ok(GenerationResult {
            text: self.0.get(&query).cloned().unwrap_or_else(|| " unrelated".into()),
            finish_reason: FinishReason::Stop,
            provider: "scripted".into(),
        })
    }
}

fn in_unit(x: Option<f64>) -> bool {
    x.is_none_or(|v| (0.0..=1.0).contains(&v))
}

fn metric_oracle() -> Outcome {
    let pool = ["order", "orders", "client", "Clients", "booking", "book", "box", "boxes", "item"];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut cases = 0;
    for matcher in [Matcher::Exact, Matcher::Stemmed] {
        for nc in 0..=6 {
            for nt in 0..=6 {
                for _ in 0..20 {
                    let cands: Vec<Identifier> = (0..nc).map(|_| id(pool.choose(&mut rng).unwrap())).collect();
                    let truths: Vec<Identifier> = (0..nt).map(|_| id(pool.choose(&mut rng).unwrap())).collect();
                    let want = brute_matches(&cands, &truths, &matcher, 0, &mut vec![false; nt]);
                    let got = count_matches(&cands, &truths, &matcher);
                    ensure(got == want, || format!("{cands:?} vs {truths:?}: matched {got}, want {want}"))?;
                    let m = RoundMetrics::compute(&cands, &truths, &matcher);
                    ensure(m.matched <= nc.min(nt), || format!("matched {} > min", m.matched))?;
                    let p = (nc > 0).then(|| want as f64 / nc as f64);
                    let r = (nt > 0).then(|| want as f64 / nt as f64);
                    ensure(m.precision == p && m.recall == r, || {
                        format!("{cands:?} vs {truths:?}: {m:?}, want p={p:?} r={r:?}")
                    })?;
                    ensure(in_unit(m.precision) && in_unit(m.recall), || format!("{m:?} outside [0, 1]"))?;
                    cases += 1;
                }
            }
        }
    }

    let verbs = ["owns", "holds", "makes", "books", "pays", "lists"];
    for n in 1..=6usize {
        for _ in 0..20 {
            let mut table = HashMap::new();
            let mut pairs = Vec::new();
            let mut correct = 0;
            for i in 0..n {
                let (a, b) = (format!("c{}", 2 * i), format!("k{}", 2 * i + 1));
                let truth = verbs.choose(&mut rng).unwrap().to_string();
                if rng.random_bool(0.5) {
                    table.insert(format!("{a}, {b} =>"), format!(" {truth}"));
                    correct += 1;
                }
                pairs.push((
                    "synthetic".to_string(),
                    Association::named(id(&a), id(&b), id(&truth)),
                ));
            }
            let service = CompletionService::new(Arc::new(Scripted(table)));
            let cfg = EvalConfig {
                attempts: rng.random_range(1..=3),
                ..EvalConfig::default()
            };
            let report = run_association_eval(&pairs, &service, &cfg, &Matcher::Exact).map_err(|e| e.to_string())?;
            let section = report.associations.ok_or("no association section")?;
            let want = correct as f64 / n as f64;
            ensure(section.correct == correct && section.total == n, || {
                format!("{}/{} correct, want {correct}/{n}", section.correct, section.total)
            })?;
            ensure(section.accuracy == Some(want), || format!("accuracy {:?}, want {want}", section.accuracy))?;
            ensure(in_unit(section.accuracy), || "accuracy outside [0, 1]".into())?;
            cases += 1;
        }
    }
    Ok(format!("{cases} synthetic cases"))
}

fn mock_eval_golden() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let report = dir.path().join("r.json");
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_modelcomp"))
        .args(["eval", "classes", "--provider", "mock", "--seed", "7"])
        .arg("--dataset")
        .arg(fixture("models"))
        .arg("--report")
        .arg(&report)
        .output()
        .map_err(|e| e.to_string())?;
    let took = start.elapsed();
    ensure(out.status.success(), || String::from_utf8_lossy(&out.stderr).into_owned())?;
    ensure(took < Duration::from_secs(10), || format!("took {took:?}"))?;
    let got = std::fs::read(&report).map_err(|e| e.to_string())?;
    let golden = std::fs::read(fixture("golden/eval_classes_mock_seed7.json")).map_err(|e| e.to_string())?;
    ensure(got == golden, || {
        let at = got.iter().zip(&golden).position(|(a, b)| a != b).unwrap_or(got.len().min(golden.len()));
        format!("report differs from golden at byte {at}")
    })?;
    Ok(format!("{} bytes identical in {took:?}", golden.len()))
}

fn random_token(rng: &mut ChaCha8Rng) -> String {
    const ALPHABET: &[char] = &[
        'a', 'b', 'z', 'Q', 'X', '_', '0', '7', '9', '-', ' ', '.', ',', '[', ']', ':', ';', '=', '>', '{', '}', '/',
        '\'', '"', 'é', 'ß', '字', '\t', '\n', '!', '$',
    ];
    let len = match rng.random_range(0..10) {
        0 => rng.random_range(35..=60),
        1 => 0,
        _ => rng.random_range(1..=12),
    };
    (0..len)
        .map(|_| {
            if rng.random_bool(0.6) {
                rng.random_range(b'a'..=b'z') as char
            } else {
                *ALPHABET.choose(rng).unwrap()
            }
        })
        .collect()
}

fn noise_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let filter = NoiseFilter::new();
    let mut accepted = 0;
    for _ in 0..100_000 {
        let token = random_token(&mut rng);
        if let Ok(ident) = filter.check(&token) {
            accepted += 1;
            ensure(!ident.normalized().chars().any(|c| c.is_ascii_digit()) && !token.chars().any(|c| c.is_ascii_digit()), || {
                format!("accepted `{token}` with a digit")
            })?;
            ensure(ident.normalized().chars().count() <= 40 && token.chars().count() <= 40, || {
                format!("accepted `{token}` longer than 40")
            })?;
        }
    }
    ensure(accepted > 0, || "fuzz corpus accepted nothing".into())?;

    let partial = activity_fixture("partials/shopping_partial.mcj");
    let members = [id("card")];
    for _ in 0..5_000 {
        let n = rng.random_range(0..8);
        let text: String = (0..n).map(|_| random_token(&mut rng) + " ").collect();
        let total = catch_unwind(AssertUnwindSafe(|| {
            let _ = extract_class_pairs(&text, "Bank: [bank, client]");
            let _ = extract_attributes(&text, &id("client"), &members);
            let _ = extract_association_name(&text);
            let _ = parse_activity(&text);
            let _ = parse_activity_continuation(&text, &partial);
        }));
        ensure(total.is_ok(), || format!("parser panicked on {text:?}"))?;
    }
    Ok(format!("100000 tokens ({accepted} accepted), 5000 texts parsed without panic"))
}

fn connected(n: usize, rng: &mut ChaCha8Rng) -> ClassDiagram {
    let mut d = ClassDiagram::new(id("p"));
    for i in 0..n {
        d.classes.push(ClassDecl::new(id(&format!("c{i}"))));
        if i > 0 {
            let j = rng.random_range(0..i);
            d.associations.push(Association::new(id(&format!("c{j}")), id(&format!("c{i}"))));
        }
    }
    d
}

fn protocol_arithmetic() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for n in 1..=20usize {
        let ceil_fifth = n.div_ceil(5);
        ensure(retained_count(n, 0.2) == ceil_fifth, || format!("retained_count({n})"))?;
        for seed in 0..5 {
            let model = connected(n, &mut rng);
            let partial = make_partial(&model, 0.2, seed);
            ensure(partial.classes.len() == ceil_fifth, || {
                format!("n={n}: kept {} classes, want {ceil_fifth}", partial.classes.len())
            })?;
            ensure(partial.validate().is_empty(), || format!("n={n}: invalid partial"))?;
        }
        let want_removed = if n <= 3 { n } else { (3 * n).div_ceil(4) };
        for _ in 0..5 {
            let idx = removed_indices(n, 0.75, &mut rng);
            let distinct: HashSet<_> = idx.iter().collect();
            ensure(idx.len() == want_removed && distinct.len() == idx.len() && idx.iter().all(|&i| i < n), || {
                format!("n={n}: removed {idx:?}, want {want_removed} distinct")
            })?;
        }
    }
    Ok("sizes 1-20".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("golden prompt fidelity", prompt_fidelity),
        ("replay end-to-end", replay_end_to_end),
        ("grammar round-trip", grammar_round_trip),
        ("ranking oracle", ranking_oracle),
        ("metric oracle", metric_oracle),
        ("deterministic mock eval", mock_eval_golden),
        ("noise-filter soundness", noise_soundness),
        ("protocol arithmetic", protocol_arithmetic),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = catch_unwind(check).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
