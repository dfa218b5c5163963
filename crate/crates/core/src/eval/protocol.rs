use std::collections::{HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::matcher::Matcher;
use crate::model::{ClassDiagram, Identifier};

const EPS: f64 = 1e-9;

/// What "a fraction of the model's elements" counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartialScope {
    #[default]
    Classes,
    ClassesAndAssociations,
}

/// `ceil(fraction * n)`, at least 1 for non-empty input, never above `n`.
pub fn retained_count(n: usize, fraction: f64) -> usize {
    if n == 0 {
        return 0;
    }
    ((fraction * n as f64 - EPS).ceil() as usize).clamp(1, n)
}

/// All attributes when there are three or fewer, else `ceil(fraction * n)`.
pub fn removal_count(n: usize, fraction: f64) -> usize {
    if n <= 3 {
        n
    } else {
        ((fraction * n as f64 - EPS).ceil() as usize).clamp(1, n)
    }
}

/// Seeded breadth-first growth over the association graph.
///
/// Starts at a seeded random class, visits neighbours in diagram order and
/// jumps to another seeded random class whenever the current component runs
/// out.
fn bfs_order(model: &ClassDiagram, rng: &mut ChaCha8Rng) -> Vec<Identifier> {
    let n = model.classes.len();
    let mut order: Vec<Identifier> = Vec::with_capacity(n);
    let mut visited: HashSet<Identifier> = HashSet::new();
    let mut starts: Vec<usize> = (0..n).collect();
    starts.shuffle(rng);
    for start in starts {
        let name = &model.classes[start].name;
        if visited.contains(name) {
            continue;
        }
        let mut queue = VecDeque::from([name.clone()]);
        visited.insert(name.clone());
        while let Some(current) = queue.pop_front() {
            for a in model.associations.iter().filter(|a| a.mentions(&current)) {
                let other = if a.source == current { &a.target } else { &a.source };
                if model.has_class(other) && visited.insert(other.clone()) {
                    queue.push_back(other.clone());
                }
            }
            order.push(current);
        }
    }
    order
}

/// Partial model keeping `ceil(fraction * |classes|)` classes, connected
/// where the graph allows, with every association among them.
pub fn make_partial(model: &ClassDiagram, fraction: f64, seed: u64) -> ClassDiagram {
    make_partial_scoped(model, fraction, seed, PartialScope::Classes)
}

pub fn make_partial_scoped(
    model: &ClassDiagram,
    fraction: f64,
    seed: u64,
    scope: PartialScope,
) -> ClassDiagram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order = bfs_order(model, &mut rng);
    match scope {
        PartialScope::Classes => {
            let k = retained_count(model.classes.len(), fraction);
            let keep: HashSet<Identifier> = order.into_iter().take(k).collect();
            model.induced(&keep)
        }
        PartialScope::ClassesAndAssociations => {
            let total = model.classes.len() + model.associations.len();
            let target = retained_count(total, fraction);
            let mut keep: HashSet<Identifier> = HashSet::new();
            for class in order {
                keep.insert(class);
                let d = model.induced(&keep);
                if d.classes.len() + d.associations.len() >= target {
                    break;
                }
            }
            let mut d = model.induced(&keep);
            let room = target.saturating_sub(d.classes.len());
            d.associations.truncate(room);
            d
        }
    }
}

/// Seeded choice of which attribute indices to remove.
pub fn removed_indices(n: usize, fraction: f64, rng: &mut impl Rng) -> Vec<usize> {
    let k = removal_count(n, fraction);
    let mut idx = rand::seq::index::sample(rng, n, k).into_vec();
    idx.sort_unstable();
    idx
}

/// Size of a maximum matching between candidates and truths, where an edge
/// means the matcher accepts the pair. Each side is used at most once.
pub fn count_matches(candidates: &[Identifier], truths: &[Identifier], matcher: &Matcher) -> usize {
    matching(candidates, truths, matcher)
        .into_iter()
        .filter(Option::is_some)
        .count()
}

/// Maximum matching as `truth_for[candidate]`.
pub fn matching(
    candidates: &[Identifier],
    truths: &[Identifier],
    matcher: &Matcher,
) -> Vec<Option<usize>> {
    let edges: Vec<Vec<usize>> = candidates
        .iter()
        .map(|c| {
            (0..truths.len())
                .filter(|&t| matcher.matches(c, &truths[t]))
                .collect()
        })
        .collect();
    let mut owner: Vec<Option<usize>> = vec![None; truths.len()];

    fn augment(
        c: usize,
        edges: &[Vec<usize>],
        owner: &mut [Option<usize>],
        seen: &mut [bool],
    ) -> bool {
        for &t in &edges[c] {
            if seen[t] {
                continue;
            }
            seen[t] = true;
            if owner[t].is_none_or(|o| augment(o, edges, owner, seen)) {
                owner[t] = Some(c);
                return true;
            }
        }
        false
    }

    for c in 0..candidates.len() {
        let mut seen = vec![false; truths.len()];
        augment(c, &edges, &mut owner, &mut seen);
    }
    let mut truth_for = vec![None; candidates.len()];
    for (t, o) in owner.into_iter().enumerate() {
        if let Some(c) = o {
            truth_for[c] = Some(t);
        }
    }
    truth_for
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundMetrics {
    pub recommended: usize,
    pub relevant: usize,
    pub matched: usize,
    /// `None` when nothing was recommended.
    pub precision: Option<f64>,
    /// `None` when nothing was left to find.
    pub recall: Option<f64>,
}

impl RoundMetrics {
    pub fn new(recommended: usize, relevant: usize, matched: usize) -> Self {
        debug_assert!(matched <= recommended.min(relevant));
        Self {
            recommended,
            relevant,
            matched,
            precision: ratio(matched, recommended),
            recall: ratio(matched, relevant),
        }
    }

    pub fn compute(recommended: &[Identifier], relevant: &[Identifier], matcher: &Matcher) -> Self {
        Self::new(
            recommended.len(),
            relevant.len(),
            count_matches(recommended, relevant, matcher),
        )
    }
}

pub fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: Option<f64>,
    /// Population standard deviation.
    pub std: Option<f64>,
    /// Values contributing; not-applicable entries are excluded.
    pub n: usize,
}

impl Stat {
    pub fn of(values: impl IntoIterator<Item = Option<f64>>) -> Self {
        let xs: Vec<f64> = values.into_iter().flatten().collect();
        if xs.is_empty() {
            return Self {
                mean: None,
                std: None,
                n: 0,
            };
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Self {
            mean: Some(mean),
            std: Some(var.sqrt()),
            n: xs.len(),
        }
    }
}
