//! Deterministic stand-in for a completion model.
//!
//! Output template per task, all derived from the last prompt line (the
//! query):
//!
//! - class pairs: the query echoed, then `[c, w(c)]` for up to two query
//!   classes, then one `[w1, w2]` pair drawn from a request-seeded RNG
//! - attributes: the query echoed with three vocabulary attributes, chosen
//!   by hashing the target class, appended to the last group
//! - association name: one verb chosen by hashing the pair and temperature
//! - activity: one or two vocabulary actions, the open braces closed, then
//!   `=> end.`
//!
//! `w(c)` hashes the class name into a fixed vocabulary, so prompts sharing
//! a class agree on its partner and frequency ranking has something to rank.

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use sha2::{Digest, Sha256};

use super::{CompletionProvider, FinishReason, GenerationRequest, GenerationResult, ProviderError};
use crate::model::Identifier;
use crate::prompt::TaskKind;

pub const CLASS_VOCABULARY: &[&str] = &[
    "account", "address", "author", "booking", "branch", "category", "customer", "delivery",
    "department", "document", "employee", "event", "fine", "guest", "invoice", "item", "loan",
    "location", "manager", "member", "order", "payment", "person", "product", "profile",
    "rating", "receipt", "report", "reservation", "review", "room", "schedule", "seat",
    "section", "shipment", "staff", "supplier", "ticket", "transaction", "user", "vehicle",
    "warehouse", "course", "student", "screening", "movie",
];

pub const ATTRIBUTE_VOCABULARY: &[&str] = &[
    "id", "name", "address", "email", "phone", "date", "status", "amount", "price",
    "description", "code", "title", "type", "quantity", "total", "rating", "capacity", "number",
];

pub const VERB_VOCABULARY: &[&str] = &[
    "has", "owns", "contains", "manages", "places", "belongs", "uses", "includes", "holds",
    "assigns", "books", "serves", "issues", "writes", "pays",
];

pub const ACTION_VOCABULARY: &[&str] = &[
    "confirm order", "send receipt", "update records", "notify user", "review request",
    "archive record", "log activity", "close session",
];

#[derive(Debug, Clone, Default)]
pub struct MockProvider;

impl MockProvider {
    pub fn new() -> Self {
        Self
    }
}

fn hash64(parts: &[&str]) -> u64 {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0u8]);
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

fn pick<'a>(vocab: &[&'a str], parts: &[&str]) -> &'a str {
    vocab[(hash64(parts) % vocab.len() as u64) as usize]
}

fn norm(s: &str) -> String {
    Identifier::normalized_only(s)
        .map(|i| i.normalized().to_string())
        .unwrap_or_default()
}

/// Vocabulary partner of a class, never the class itself.
fn partner(class: &str) -> &'static str {
    let key = norm(class);
    let mut salt = 0u32;
    loop {
        let w = pick(CLASS_VOCABULARY, &["partner", &key, &salt.to_string()]);
        if w != key {
            return w;
        }
        salt += 1;
    }
}

fn query_line(request: &GenerationRequest) -> &str {
    request.prompt_text.lines().last().unwrap_or("").trim_end()
}

fn class_pairs(query: &str, rng: &mut ChaCha8Rng) -> String {
    static PAIR: OnceLock<Regex> = OnceLock::new();
    let re = PAIR.get_or_init(|| Regex::new(r"\[\s*([^\[\],]+?)\s*,\s*([^\[\],]+?)\s*\]").unwrap());
    let mut classes: Vec<String> = Vec::new();
    for caps in re.captures_iter(query) {
        for m in [&caps[1], &caps[2]] {
            if !classes.iter().any(|c| norm(c) == norm(m)) {
                classes.push(m.to_string());
            }
        }
    }
    // which query classes get a partner depends on the class, not the prompt
    classes.sort_by_key(|c| hash64(&["anchor", &norm(c)]));
    let mut pairs: Vec<String> = classes
        .iter()
        .take(2)
        .map(|c| format!("[{}, {}]", norm(c), partner(c)))
        .collect();
    let a = CLASS_VOCABULARY[rng.random_range(0..CLASS_VOCABULARY.len())];
    let b = partner(a);
    pairs.push(format!("[{a}, {b}]"));
    format!("{query}, {}", pairs.join(", "))
}

fn attributes(query: &str) -> String {
    let Some(open) = query.rfind('[') else {
        return query.to_string();
    };
    let Some(close) = query[open..].find(']').map(|i| open + i) else {
        return query.to_string();
    };
    let head = &query[..open];
    let class = head
        .trim_end()
        .trim_end_matches(':')
        .rsplit([';', ':'])
        .next()
        .unwrap_or("")
        .trim();
    let existing: Vec<&str> = query[open + 1..close]
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    let mut extra: Vec<&str> = Vec::new();
    let mut salt = 0u32;
    while extra.len() < 3 && salt < 64 {
        let w = pick(ATTRIBUTE_VOCABULARY, &["attr", &norm(class), &salt.to_string()]);
        if !existing.iter().any(|e| norm(e) == w) && !extra.contains(&w) {
            extra.push(w);
        }
        salt += 1;
    }
    let members: Vec<&str> = existing.iter().copied().chain(extra).collect();
    format!("{head}[{}]{}", members.join(", "), &query[close + 1..])
}

fn association_name(query: &str, temperature: f64) -> String {
    let pair = norm(query.trim_end_matches("=>"));
    format!(" {}", pick(VERB_VOCABULARY, &["verb", &pair, &format!("{temperature:.4}")]))
}

fn activity(query: &str, rng: &mut ChaCha8Rng) -> String {
    let depth = query.matches('{').count().saturating_sub(query.matches('}').count());
    let n = rng.random_range(1..=2);
    let mut actions: Vec<&str> = Vec::new();
    while actions.len() < n {
        let a = ACTION_VOCABULARY[rng.random_range(0..ACTION_VOCABULARY.len())];
        if !actions.contains(&a) {
            actions.push(a);
        }
    }
    format!(" {}{} => end.", actions.join(" => "), "}".repeat(depth))
}

impl CompletionProvider for MockProvider {
    fn id(&self) -> &str {
        "mock"
    }

    fn complete(&self, request: &GenerationRequest) -> Result<GenerationResult, ProviderError> {
        request.validate()?;
        let query = query_line(request);
        let seed = hash64(&["rng", &request.fixture_key()]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let text = match request.task_kind() {
            Some(TaskKind::ClassPairs) => class_pairs(query, &mut rng),
            Some(TaskKind::Attributes) => attributes(query),
            Some(TaskKind::AssociationName) => {
                association_name(query, request.hyperparams.temperature)
            }
            Some(TaskKind::Activity) => activity(query, &mut rng),
            None => query.to_string(),
        };
        Ok(GenerationResult {
            text,
            finish_reason: FinishReason::Length,
            provider: self.id().to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompt::Hyperparams;

    fn req(task: TaskKind, prompt: &str, t: f64) -> GenerationRequest {
        let mut r = GenerationRequest::new(prompt, Hyperparams::for_task(task).with_temperature(t));
        r.task = Some(task);
        r
    }

    #[test]
    fn deterministic() {
        let r = req(TaskKind::ClassPairs, "x\nBank: [bank, client], [client, clientcollection]", 0.7);
        let a = MockProvider::new().complete(&r).unwrap();
        let b = MockProvider::new().complete(&r).unwrap();
        assert_eq!(a, b);
        assert!(a.text.starts_with("Bank: [bank, client], [client, clientcollection], ["));
    }

    #[test]
    fn class_pairs_parse_and_share_partners() {
        let q1 = req(TaskKind::ClassPairs, "Bank: [bank, client], [client, loan]", 0.7);
        let q2 = req(TaskKind::ClassPairs, "Bank: [client, loan], [bank, client]", 0.7);
        let extract = |r: &GenerationRequest| {
            let text = MockProvider::new().complete(r).unwrap().text;
            crate::parse::extract_class_pairs(&text, super::query_line(r)).pairs
        };
        let (p1, p2) = (extract(&q1), extract(&q2));
        assert_eq!(p1.len(), 3, "{p1:?}");
        assert_eq!(p1[..2], p2[..2]);
    }

    #[test]
    fn attributes_extend_last_group() {
        let q = "package bank: bank: [id,name]; clientCollection: [amount]; client: [card]";
        let text = MockProvider::new()
            .complete(&req(TaskKind::Attributes, q, 0.7))
            .unwrap()
            .text;
        assert!(text.starts_with("package bank: bank: [id,name]; clientCollection: [amount]; client: [card, "));
        let got = crate::parse::extract_attributes(
            &text,
            &Identifier::new("client").unwrap(),
            &[Identifier::new("card").unwrap()],
        );
        assert_eq!(got.len(), 3);
    }

    #[test]
    fn association_name_varies_with_temperature_only() {
        let m = MockProvider::new();
        let name = |t| m.complete(&req(TaskKind::AssociationName, "a, b =>", t)).unwrap().text;
        assert_eq!(name(0.7), name(0.7));
        let distinct: std::collections::HashSet<_> = [0.7, 0.8, 0.9].map(name).into_iter().collect();
        assert!(distinct.iter().all(|t| t.starts_with(' ') && t.split_whitespace().count() == 1));
    }

    #[test]
    fn activity_closes_open_branches() {
        let partial = "Online Shopping: start => search item => found / not found => if found {view item => buy / not to buy =>";
        let text = MockProvider::new()
            .complete(&req(TaskKind::Activity, partial, 0.7))
            .unwrap()
            .text;
        assert!(text.ends_with("} => end."), "{text}");
        let model = crate::parse::parse_activity(&format!("{partial}{text}")).unwrap();
        assert!(model.is_closed());
    }
}
