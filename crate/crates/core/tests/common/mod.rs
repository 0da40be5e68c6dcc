//! Helpers shared by the integration tests: random trees with their own
//! parent pointers, a brute-force pattern evaluator, and fixture loading.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use legalmeta::corpus::{parse_bracketed_tree, DepLabel, DependencyGraph};
use legalmeta::query::{LabelTest, NodeExpr, RelOp, TreePattern};
use legalmeta::{Concept, Lexicon, Statement, Token, ValidationMode};
use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub const CATEGORIES: [&str; 14] = [
    "NP", "PP", "P", "VN", "VP", "Srel", "Ssub", "VPinf", "VPart", "SENT", "N", "D", "V", "C",
];

/// One single-word marker list per concept used by the shipped rules.
pub const MARKER_WORDS: [(Concept, &[&str]); 14] = [
    (Concept::Condition, &["limit", "who"]),
    (Concept::Exception, &["derogation"]),
    (Concept::Reason, &["purpose"]),
    (Concept::Modality, &["may"]),
    (Concept::Time, &["day", "before"]),
    (Concept::Location, &["road"]),
    (Concept::Actor, &["judge"]),
    (Concept::Artifact, &["permit"]),
    (Concept::Sanction, &["fine"]),
    (Concept::Situation, &["inspection"]),
    (Concept::Violation, &["offence"]),
    (Concept::Reference, &["article"]),
    (Concept::Permission, &["may"]),
    (Concept::Obligation, &["shall"]),
];

pub const FILLER_WORDS: [&str; 4] = ["the", "of", "a", "x"];

pub fn word_lexicon() -> Lexicon {
    let files: Vec<(String, String)> = MARKER_WORDS
        .iter()
        .map(|(c, ws)| (format!("{}.txt", c.name()), ws.join("\n") + "\n"))
        .collect();
    Lexicon::from_files(files.iter().map(|(a, b)| (a.as_str(), b.as_str())), ValidationMode::Strict).unwrap()
}

pub fn is_marker(c: Concept, word: &str) -> bool {
    MARKER_WORDS.iter().any(|(k, ws)| *k == c && ws.contains(&word))
}

/// A tree in pre-order with explicit parent pointers.
#[derive(Clone, Debug)]
pub struct RandTree {
    pub labels: Vec<String>,
    pub leaf: Vec<bool>,
    pub parent: Vec<Option<usize>>,
}

impl RandTree {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn children(&self, n: usize) -> Vec<usize> {
        (0..self.len()).filter(|&m| self.parent[m] == Some(n)).collect()
    }

    pub fn is_ancestor(&self, a: usize, mut b: usize) -> bool {
        while let Some(p) = self.parent[b] {
            if p == a {
                return true;
            }
            b = p;
        }
        false
    }

    /// Words under `n`, left to right.
    pub fn words(&self, n: usize) -> Vec<&str> {
        if self.leaf[n] {
            return vec![self.labels[n].as_str()];
        }
        self.children(n).into_iter().flat_map(|c| self.words(c)).collect()
    }

    pub fn bracketed(&self, n: usize) -> String {
        if self.leaf[n] {
            return self.labels[n].clone();
        }
        let kids: Vec<String> = self.children(n).into_iter().map(|c| self.bracketed(c)).collect();
        format!("({} {})", self.labels[n], kids.join(" "))
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf.iter().filter(|&&l| l).count()
    }
}

/// A random tree of at most `max_nodes` nodes (words included) whose
/// internal labels come from `labels` and words from `words`.
pub fn random_tree<R: Rng>(rng: &mut R, max_nodes: usize, labels: &[&str], words: &[&str]) -> RandTree {
    let mut t = RandTree {
        labels: Vec::new(),
        leaf: Vec::new(),
        parent: Vec::new(),
    };
    let mut budget = max_nodes.max(2);
    grow(rng, &mut t, None, &mut budget, 0, labels, words);
    t
}

fn grow<R: Rng>(
    rng: &mut R,
    t: &mut RandTree,
    parent: Option<usize>,
    budget: &mut usize,
    depth: usize,
    labels: &[&str],
    words: &[&str],
) {
    let id = t.labels.len();
    let make_leaf = parent.is_some() && (*budget < 2 || depth >= 5 || rng.gen_bool(0.35));
    t.parent.push(parent);
    *budget -= 1;
    if make_leaf {
        t.labels.push(words[rng.gen_range(0..words.len())].to_string());
        t.leaf.push(true);
        return;
    }
    t.labels.push(labels[rng.gen_range(0..labels.len())].to_string());
    t.leaf.push(false);
    let k = rng.gen_range(1..=3);
    for i in 0..k {
        if *budget == 0 || (i > 0 && *budget < 1) {
            break;
        }
        grow(rng, t, Some(id), budget, depth + 1, labels, words);
    }
}

/// A statement over the tree's words with a flat dependency graph.
pub fn statement_from_tree(id: &str, t: &RandTree) -> Statement {
    let tree = parse_bracketed_tree(&t.bracketed(0)).unwrap();
    let words: Vec<&str> = t.words(0);
    let tokens: Vec<Token> = words
        .iter()
        .enumerate()
        .map(|(i, w)| Token {
            index: i,
            surface: w.to_string(),
            lemma: None,
            pos: "X".into(),
        })
        .collect();
    let heads: Vec<Option<usize>> = (0..words.len()).map(|i| (i > 0).then_some(0)).collect();
    let labels: Vec<DepLabel> = (0..words.len())
        .map(|i| if i == 0 { DepLabel::Root } else { DepLabel::Dep })
        .collect();
    let deps = DependencyGraph::new(heads, labels).unwrap();
    Statement::new(id, words.join(" "), tokens, tree, deps, Vec::new()).unwrap()
}

fn holds(t: &RandTree, op: RelOp, n: usize, m: usize) -> bool {
    match op {
        RelOp::Child => t.parent[m] == Some(n),
        RelOp::Descendant => t.is_ancestor(n, m),
        RelOp::Sister => m != n && t.parent[n].is_some() && t.parent[m] == t.parent[n],
    }
}

fn node_test(t: &RandTree, test: &LabelTest, n: usize) -> bool {
    match test {
        LabelTest::Any => true,
        LabelTest::Category(c) => !t.leaf[n] && t.labels[n] == *c,
        LabelTest::Marker(c) => t.words(n).iter().any(|w| is_marker(*c, w)),
    }
}

fn has_capture(e: &NodeExpr) -> bool {
    e.capture || e.relations.iter().any(|r| has_capture(&r.operand))
}

/// Every node the capture can bind to when `e` holds at `n`, or `None` when
/// it does not hold. Witnesses are found by scanning all nodes.
fn captures(t: &RandTree, e: &NodeExpr, n: usize) -> Option<BTreeSet<usize>> {
    if !node_test(t, &e.test, n) {
        return None;
    }
    let mut out = BTreeSet::new();
    if e.capture {
        out.insert(n);
    }
    for r in &e.relations {
        let mut found = false;
        for m in 0..t.len() {
            if !holds(t, r.op, n, m) {
                continue;
            }
            if let Some(sub) = captures(t, &r.operand, m) {
                found = true;
                if has_capture(&r.operand) {
                    out.extend(sub);
                }
            }
        }
        if found == r.negated {
            return None;
        }
    }
    Some(out)
}

/// The full match set as (root, target) pairs.
pub fn oracle_matches(t: &RandTree, p: &TreePattern) -> BTreeSet<(usize, usize)> {
    let mut set = BTreeSet::new();
    for n in 0..t.len() {
        if let Some(caps) = captures(t, p.root(), n) {
            if has_capture(p.root()) {
                set.extend(caps.into_iter().map(|c| (n, c)));
            } else {
                set.insert((n, n));
            }
        }
    }
    set
}
