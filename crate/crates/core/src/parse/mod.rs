//! Text-to-model mapping: pull model elements out of generated text.

mod activity;

use std::collections::HashSet;
use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::model::Identifier;

pub use activity::{
    parse_activity, parse_activity_continuation, ActivityParseError, MAX_REDUNDANT_CLOSERS,
};

pub const MAX_TOKEN_LEN: usize = 40;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    Empty,
    Digits,
    InvalidCharacter(char),
    TooLong(usize),
    NotInDictionary,
    /// The other member of the same bracket pair was rejected.
    PartnerRejected,
    /// The pair already appears in the query.
    Echoed,
    /// Bracket group with other than two members.
    Arity(usize),
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectReason::Empty => f.write_str("empty"),
            RejectReason::Digits => f.write_str("digits"),
            RejectReason::InvalidCharacter(c) => write!(f, "invalid character {c:?}"),
            RejectReason::TooLong(n) => write!(f, "{n} characters exceeds {MAX_TOKEN_LEN}"),
            RejectReason::NotInDictionary => f.write_str("not in dictionary"),
            RejectReason::PartnerRejected => f.write_str("pair partner rejected"),
            RejectReason::Echoed => f.write_str("echo of the query"),
            RejectReason::Arity(n) => write!(f, "bracket group of {n} members"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Reject(RejectReason),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dropped {
    pub token: String,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExtractedPairs {
    pub pairs: Vec<(Identifier, Identifier)>,
    pub dropped: Vec<Dropped>,
}

/// Character-class and length filter for generated tokens, with an optional
/// word list.
///
/// A token passes when, after trimming, it is non-empty, at most
/// [`MAX_TOKEN_LEN`] characters, and consists of ASCII letters, spaces,
/// underscores and hyphens only. With a dictionary, every word of the token
/// (split on spaces, hyphens, underscores and camel-case humps) must also be
/// listed.
#[derive(Debug, Clone, Default)]
pub struct NoiseFilter {
    dictionary: Option<HashSet<String>>,
}

impl NoiseFilter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_dictionary<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            dictionary: Some(
                words
                    .into_iter()
                    .map(|w| w.as_ref().trim().to_ascii_lowercase())
                    .filter(|w| !w.is_empty())
                    .collect(),
            ),
        }
    }

    pub fn verdict(&self, token: &str) -> Verdict {
        match self.check(token) {
            Ok(_) => Verdict::Accept,
            Err(reason) => Verdict::Reject(reason),
        }
    }

    /// Accepted tokens come back normalized.
    pub fn check(&self, token: &str) -> Result<Identifier, RejectReason> {
        let token = token.trim();
        if token.is_empty() {
            return Err(RejectReason::Empty);
        }
        if token.chars().any(|c| c.is_ascii_digit() || c.is_numeric()) {
            return Err(RejectReason::Digits);
        }
        if let Some(c) = token
            .chars()
            .find(|c| !(c.is_ascii_alphabetic() || matches!(c, ' ' | '_' | '-')))
        {
            return Err(RejectReason::InvalidCharacter(c));
        }
        let len = token.chars().count();
        if len > MAX_TOKEN_LEN {
            return Err(RejectReason::TooLong(len));
        }
        if let Some(dict) = &self.dictionary {
            if !split_words(token).all(|w| dict.contains(&w)) {
                return Err(RejectReason::NotInDictionary);
            }
        }
        Identifier::normalized_only(token).map_err(|_| RejectReason::Empty)
    }

    pub fn extract_class_pairs(&self, generated: &str, query_echo: &str) -> ExtractedPairs {
        let echo_pairs: HashSet<(String, String)> = bracket_groups(query_echo)
            .filter_map(|g| match g.members.as_slice() {
                [a, b] => Some(unordered(
                    normalize_loose(a),
                    normalize_loose(b),
                )),
                _ => None,
            })
            .collect();

        let scan_from = find_echo(generated, query_echo).unwrap_or(0);
        let mut out = ExtractedPairs::default();
        let mut seen = HashSet::new();
        for group in bracket_groups(&generated[scan_from..]) {
            let members = group.members;
            if members.len() != 2 {
                let n = members.len();
                out.dropped.extend(
                    members
                        .into_iter()
                        .filter(|m| !m.trim().is_empty())
                        .map(|m| Dropped {
                            token: m.trim().to_string(),
                            reason: RejectReason::Arity(n),
                        }),
                );
                continue;
            }
            let (a_raw, b_raw) = (members[0].trim(), members[1].trim());
            match (self.check(a_raw), self.check(b_raw)) {
                (Ok(a), Ok(b)) => {
                    let key = unordered(a.normalized().into(), b.normalized().into());
                    if echo_pairs.contains(&key) {
                        out.dropped.push(Dropped {
                            token: a_raw.to_string(),
                            reason: RejectReason::Echoed,
                        });
                        out.dropped.push(Dropped {
                            token: b_raw.to_string(),
                            reason: RejectReason::Echoed,
                        });
                    } else if seen.insert(key) {
                        out.pairs.push((a, b));
                    }
                }
                (a, b) => {
                    for (raw, res) in [(a_raw, a), (b_raw, b)] {
                        out.dropped.push(Dropped {
                            token: raw.to_string(),
                            reason: res.err().unwrap_or(RejectReason::PartnerRejected),
                        });
                    }
                }
            }
        }
        out
    }

    pub fn extract_attributes(
        &self,
        generated: &str,
        target_class: &Identifier,
        existing: &[Identifier],
    ) -> Vec<Identifier> {
        let pattern = format!(
            r"(?i)(?:^|[^a-z0-9_])(?:{}|{})\s*:\s*\[([^\[\]]*)(\]|$)",
            regex::escape(target_class.display()),
            regex::escape(target_class.normalized())
        );
        let re = Regex::new(&pattern).expect("escaped class name forms a valid pattern");
        let Some(caps) = re.captures_iter(generated).last() else {
            return Vec::new();
        };
        let mut members: Vec<&str> = caps[1].split(',').collect();
        if caps[2].is_empty() {
            // bracket cut off by the token budget; the last member may be partial
            members.pop();
        }
        let mut seen: HashSet<Identifier> = existing.iter().cloned().collect();
        members
            .into_iter()
            .filter_map(|m| self.check(m).ok())
            .filter(|id| seen.insert(id.clone()))
            .collect()
    }

    pub fn extract_association_name(&self, generated: &str) -> Option<Identifier> {
        generated
            .split_whitespace()
            .next()
            .and_then(|tok| self.check(tok).ok())
    }
}

pub fn filter_noise(token: &str) -> Verdict {
    NoiseFilter::new().verdict(token)
}

/// Pairs `[x, y]` from generated text after the query echo, noise-filtered.
pub fn extract_class_pairs(generated: &str, query_echo: &str) -> ExtractedPairs {
    NoiseFilter::new().extract_class_pairs(generated, query_echo)
}

/// Members of the last `target: [...]` group, minus existing attributes.
pub fn extract_attributes(
    generated: &str,
    target_class: &Identifier,
    existing: &[Identifier],
) -> Vec<Identifier> {
    NoiseFilter::new().extract_attributes(generated, target_class, existing)
}

/// First whitespace-delimited token of the generation, if it passes the filter.
pub fn extract_association_name(generated: &str) -> Option<Identifier> {
    NoiseFilter::new().extract_association_name(generated)
}

struct BracketGroup<'a> {
    members: Vec<&'a str>,
}

fn bracket_groups(text: &str) -> impl Iterator<Item = BracketGroup<'_>> {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"\[([^\[\]]*)\]").unwrap());
    re.captures_iter(text).map(|c| BracketGroup {
        members: c.get(1).map_or("", |m| m.as_str()).split(',').collect(),
    })
}

fn normalize_loose(s: &str) -> String {
    s.chars()
        .flat_map(char::to_lowercase)
        .filter(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || *c == '_')
        .collect()
}

fn unordered(a: String, b: String) -> (String, String) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

fn split_words(token: &str) -> impl Iterator<Item = String> + '_ {
    token
        .split([' ', '-', '_'])
        .filter(|w| !w.is_empty())
        .flat_map(|w| {
            let mut parts = Vec::new();
            let mut cur = String::new();
            for c in w.chars() {
                if c.is_ascii_uppercase() && !cur.is_empty() {
                    parts.push(std::mem::take(&mut cur));
                }
                cur.push(c.to_ascii_lowercase());
            }
            parts.push(cur);
            parts
        })
}

/// Byte offset just past the first occurrence of `echo` in `text`, compared
/// case-insensitively and ignoring whitespace.
fn find_echo(text: &str, echo: &str) -> Option<usize> {
    let needle: Vec<char> = echo
        .chars()
        .filter(|c| !c.is_whitespace())
        .flat_map(char::to_lowercase)
        .collect();
    if needle.is_empty() {
        return None;
    }
    let mut hay: Vec<(char, usize)> = Vec::new();
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            continue;
        }
        for lc in c.to_lowercase() {
            hay.push((lc, i + c.len_utf8()));
        }
    }
    hay.windows(needle.len())
        .find(|w| w.iter().zip(&needle).all(|((h, _), n)| h == n))
        .map(|w| w[w.len() - 1].1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(s: &str) -> Identifier {
        Identifier::new(s).unwrap()
    }

    const BANK_ECHO: &str = "Bank: [bank, client], [client, clientcollection]";
    const BANK_GENERATED: &str = "Bank: [bank, client], [client, clientcollection], [loan, clientcollection], [loan,deposit],[account, balance], [account, transaction]";

    #[test]
    fn filter_examples() {
        assert_eq!(filter_noise("loan"), Verdict::Accept);
        assert_eq!(filter_noise("42"), Verdict::Reject(RejectReason::Digits));
        assert_eq!(filter_noise(""), Verdict::Reject(RejectReason::Empty));
        assert_eq!(filter_noise("   "), Verdict::Reject(RejectReason::Empty));
        assert_eq!(filter_noise("bank account"), Verdict::Accept);
        assert_eq!(filter_noise("pay-with_card"), Verdict::Accept);
        assert_eq!(
            filter_noise("a.b"),
            Verdict::Reject(RejectReason::InvalidCharacter('.'))
        );
        assert_eq!(filter_noise(&"x".repeat(40)), Verdict::Accept);
        assert_eq!(
            filter_noise(&"x".repeat(41)),
            Verdict::Reject(RejectReason::TooLong(41))
        );
        assert_eq!(
            filter_noise("café"),
            Verdict::Reject(RejectReason::InvalidCharacter('é'))
        );
        assert_eq!(filter_noise("-"), Verdict::Reject(RejectReason::Empty));
    }

    #[test]
    fn dictionary_option() {
        let f = NoiseFilter::with_dictionary(["client", "collection", "loan"]);
        assert!(f.check("clientCollection").is_ok());
        assert!(f.check("loan").is_ok());
        assert_eq!(f.check("lonn"), Err(RejectReason::NotInDictionary));
    }

    #[test]
    fn bank_pairs_after_echo() {
        let got = extract_class_pairs(BANK_GENERATED, BANK_ECHO);
        let expected: Vec<(Identifier, Identifier)> = [
            ("loan", "clientcollection"),
            ("loan", "deposit"),
            ("account", "balance"),
            ("account", "transaction"),
        ]
        .iter()
        .map(|(a, b)| (id(a), id(b)))
        .collect();
        assert_eq!(got.pairs, expected);
        assert!(got.dropped.is_empty());
    }

    #[test]
    fn empty_generation() {
        assert_eq!(extract_class_pairs("", BANK_ECHO), ExtractedPairs::default());
    }

    #[test]
    fn pair_with_rejected_member_is_discarded_whole() {
        let got = extract_class_pairs("Bank: [a1, b], [c, d]", "");
        assert_eq!(got.pairs, vec![(id("c"), id("d"))]);
        assert_eq!(
            got.dropped[0],
            Dropped {
                token: "a1".into(),
                reason: RejectReason::Digits
            }
        );
        assert_eq!(
            got.dropped[1],
            Dropped {
                token: "b".into(),
                reason: RejectReason::PartnerRejected
            }
        );
    }

    #[test]
    fn echo_pairs_excluded_without_anchor() {
        let got = extract_class_pairs("[client, bank], [loan, deposit]", BANK_ECHO);
        assert_eq!(got.pairs, vec![(id("loan"), id("deposit"))]);
        assert_eq!(got.dropped.len(), 2);
    }

    #[test]
    fn echo_anchor_is_case_and_space_insensitive() {
        let text = "bank:[Bank, Client],[client,ClientCollection], [vault, teller]";
        let got = extract_class_pairs(text, BANK_ECHO);
        assert_eq!(got.pairs, vec![(id("vault"), id("teller"))]);
        assert!(got.dropped.is_empty());
    }

    #[test]
    fn wrong_arity_groups_are_dropped() {
        let got = extract_class_pairs("[a, b, c], [d]", "");
        assert!(got.pairs.is_empty());
        assert_eq!(got.dropped.len(), 4);
        assert!(got.dropped.iter().all(|d| matches!(d.reason, RejectReason::Arity(_))));
    }

    #[test]
    fn bank_attributes() {
        let text = "package bank: bank: [id, name]; clientCollection: [amount]; client: [card, name, address, id]";
        assert_eq!(
            extract_attributes(text, &id("client"), &[id("card")]),
            vec![id("name"), id("address"), id("id")]
        );
    }

    #[test]
    fn attributes_absent_group() {
        assert!(extract_attributes("bank: [id]", &id("client"), &[]).is_empty());
        // clientCollection must not match client
        assert!(extract_attributes("clientCollection: [amount]", &id("client"), &[]).is_empty());
    }

    #[test]
    fn attributes_dedup_and_digit_filter() {
        assert_eq!(
            extract_attributes("client: [card, card, id2, name]", &id("client"), &[id("card")]),
            vec![id("name")]
        );
    }

    #[test]
    fn attributes_case_insensitive_and_truncated() {
        assert_eq!(
            extract_attributes("CLIENT: [Email, phone, addr", &id("client"), &[]),
            vec![id("email"), id("phone")]
        );
        assert_eq!(
            extract_attributes("clientcollection: [size]", &id("clientCollection"), &[]),
            vec![id("size")]
        );
    }

    #[test]
    fn association_names() {
        assert_eq!(extract_association_name(" owns"), Some(id("owns")));
        assert_eq!(extract_association_name("123"), None);
        assert_eq!(extract_association_name("enrolls in"), Some(id("enrolls")));
        assert_eq!(extract_association_name(""), None);
    }
}
