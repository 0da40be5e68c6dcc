//! Dependency graphs over 0-based token indices, with label normalization
//! onto the 20 relation labels used by the actor features.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Token, ValidationMode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DepLabel {
    #[serde(rename = "SUJ")]
    Suj,
    #[serde(rename = "OBJ")]
    Obj,
    #[serde(rename = "ATS")]
    Ats,
    #[serde(rename = "ATO")]
    Ato,
    #[serde(rename = "MOD")]
    Mod,
    #[serde(rename = "A-OBJ")]
    AObj,
    #[serde(rename = "DE-OBJ")]
    DeObj,
    #[serde(rename = "P-OBJ")]
    PObj,
    #[serde(rename = "DET")]
    Det,
    #[serde(rename = "DEP")]
    Dep,
    #[serde(rename = "PONCT")]
    Ponct,
    #[serde(rename = "ROOT")]
    Root,
    #[serde(rename = "DEPCOORD")]
    DepCoord,
    #[serde(rename = "COORD")]
    Coord,
    #[serde(rename = "AUXPASS")]
    AuxPass,
    #[serde(rename = "AUXCAUS")]
    AuxCaus,
    #[serde(rename = "AUXTPS")]
    AuxTps,
    #[serde(rename = "AFF")]
    Aff,
    #[serde(rename = "ARG")]
    Arg,
    #[serde(rename = "MODREL")]
    ModRel,
}

impl DepLabel {
    /// Feature order.
    pub const ALL: [DepLabel; 20] = [
        DepLabel::Suj,
        DepLabel::Obj,
        DepLabel::Ats,
        DepLabel::Ato,
        DepLabel::Mod,
        DepLabel::AObj,
        DepLabel::DeObj,
        DepLabel::PObj,
        DepLabel::Det,
        DepLabel::Dep,
        DepLabel::Ponct,
        DepLabel::Root,
        DepLabel::DepCoord,
        DepLabel::Coord,
        DepLabel::AuxPass,
        DepLabel::AuxCaus,
        DepLabel::AuxTps,
        DepLabel::Aff,
        DepLabel::Arg,
        DepLabel::ModRel,
    ];

    pub fn as_str(self) -> &'static str {
        use DepLabel::*;
        match self {
            Suj => "SUJ",
            Obj => "OBJ",
            Ats => "ATS",
            Ato => "ATO",
            Mod => "MOD",
            AObj => "A-OBJ",
            DeObj => "DE-OBJ",
            PObj => "P-OBJ",
            Det => "DET",
            Dep => "DEP",
            Ponct => "PONCT",
            Root => "ROOT",
            DepCoord => "DEPCOORD",
            Coord => "COORD",
            AuxPass => "AUXPASS",
            AuxCaus => "AUXCAUS",
            AuxTps => "AUXTPS",
            Aff => "AFF",
            Arg => "ARG",
            ModRel => "MODREL",
        }
    }

    pub fn index(self) -> usize {
        DepLabel::ALL.iter().position(|&l| l == self).unwrap()
    }

    /// Direct or indirect object relations.
    pub fn is_object(self) -> bool {
        matches!(
            self,
            DepLabel::Obj | DepLabel::AObj | DepLabel::DeObj | DepLabel::PObj
        )
    }

    pub fn is_coordination(self) -> bool {
        matches!(self, DepLabel::Coord | DepLabel::DepCoord)
    }
}

impl fmt::Display for DepLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DepLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DepLabel::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DepError {
    #[error("no token is attached to the root")]
    NoRoot,
    #[error("tokens {0:?} are all attached to the root")]
    MultipleRoots(Vec<usize>),
    #[error("head chain through token {0} is cyclic")]
    CyclicHeads(usize),
    #[error("unknown dependency label `{label}` on token {token}")]
    UnknownLabel { label: String, token: usize },
    #[error("token {token} has head {head} outside 0..={len}")]
    HeadOutOfRange { token: usize, head: usize, len: usize },
    #[error("token indices must run 1..=n without gaps or repeats (saw {0})")]
    BadIndex(usize),
    #[error("line {line}: {msg}")]
    BadRow { line: usize, msg: String },
    #[error("label map line {line}: {msg}")]
    BadMap { line: usize, msg: String },
}

/// Maps foreign label inventories (Universal Dependencies and the like) onto
/// [`DepLabel`]. Canonical names always map to themselves.
#[derive(Clone, Debug, Default)]
pub struct LabelMap {
    map: HashMap<String, DepLabel>,
}

const DEFAULT_LABEL_MAP: &str = include_str!("../../data/labels.map");

impl LabelMap {
    /// The shipped Universal-style → canonical mapping.
    pub fn builtin() -> Self {
        LabelMap::parse(DEFAULT_LABEL_MAP).expect("shipped label map is valid")
    }

    /// Lines are `foreign = CANONICAL` (or tab-separated); `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, DepError> {
        let mut map = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (from, to) = line
                .split_once('=')
                .or_else(|| line.split_once('\t'))
                .ok_or_else(|| DepError::BadMap {
                    line: i + 1,
                    msg: "expected `label = TARGET`".into(),
                })?;
            let from = from.trim().to_lowercase();
            let to: DepLabel = to.trim().parse().map_err(|t| DepError::BadMap {
                line: i + 1,
                msg: format!("`{}` is not a canonical label", t),
            })?;
            if let Ok(canon) = from.parse::<DepLabel>() {
                if canon != to {
                    return Err(DepError::BadMap {
                        line: i + 1,
                        msg: format!("canonical label {} cannot be remapped", canon),
                    });
                }
            }
            map.insert(from, to);
        }
        Ok(LabelMap { map })
    }

    pub fn lookup(&self, label: &str) -> Option<DepLabel> {
        label
            .parse::<DepLabel>()
            .ok()
            .or_else(|| self.map.get(&label.trim().to_lowercase()).copied())
    }

    /// Unknown labels are an error in strict mode and `DEP` otherwise.
    pub fn normalize(&self, label: &str, mode: ValidationMode) -> Option<DepLabel> {
        match self.lookup(label) {
            Some(l) => Some(l),
            None if mode == ValidationMode::Lenient => Some(DepLabel::Dep),
            None => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DependencyGraph {
    heads: Vec<Option<usize>>,
    labels: Vec<DepLabel>,
    root: usize,
}

impl DependencyGraph {
    /// `heads[i]` is the governor of token `i`, `None` for the root.
    /// The root token's relation is forced to `ROOT`.
    pub fn new(heads: Vec<Option<usize>>, mut labels: Vec<DepLabel>) -> Result<Self, DepError> {
        assert_eq!(heads.len(), labels.len());
        let n = heads.len();
        let roots: Vec<usize> = (0..n).filter(|&i| heads[i].is_none()).collect();
        let root = match roots.as_slice() {
            [] => return Err(DepError::NoRoot),
            [r] => *r,
            _ => return Err(DepError::MultipleRoots(roots)),
        };
        for (i, h) in heads.iter().enumerate() {
            if let Some(h) = *h {
                if h >= n {
                    return Err(DepError::HeadOutOfRange {
                        token: i,
                        head: h + 1,
                        len: n,
                    });
                }
            }
        }
        // Every chain must reach the root within n steps.
        for start in 0..n {
            let mut cur = start;
            let mut steps = 0;
            while let Some(h) = heads[cur] {
                cur = h;
                steps += 1;
                if steps > n {
                    return Err(DepError::CyclicHeads(start));
                }
            }
        }
        labels[root] = DepLabel::Root;
        Ok(DependencyGraph {
            heads,
            labels,
            root,
        })
    }

    pub fn len(&self) -> usize {
        self.heads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heads.is_empty()
    }

    /// The main verb.
    pub fn root(&self) -> usize {
        self.root
    }

    pub fn head(&self, token: usize) -> Option<usize> {
        self.heads[token]
    }

    pub fn label(&self, token: usize) -> DepLabel {
        self.labels[token]
    }

    pub fn dependents(&self, token: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.heads.len()).filter(move |&i| self.heads[i] == Some(token))
    }

    pub fn has_dependent_with(&self, token: usize, label: DepLabel) -> bool {
        self.dependents(token).any(|d| self.labels[d] == label)
    }

    /// Relation labels from `token` up to (not including) the root token.
    pub fn chain_to_root(&self, token: usize) -> Vec<DepLabel> {
        let mut chain = Vec::new();
        let mut cur = token;
        while let Some(h) = self.heads[cur] {
            chain.push(self.labels[cur]);
            cur = h;
        }
        chain
    }

    /// Passive when the main verb governs a passive auxiliary.
    pub fn is_passive(&self) -> bool {
        self.has_dependent_with(self.root, DepLabel::AuxPass)
    }

    /// Rows as `(1-based index, 1-based head or 0, label)`.
    pub fn rows(&self) -> impl Iterator<Item = (usize, usize, DepLabel)> + '_ {
        (0..self.len()).map(move |i| (i + 1, self.heads[i].map_or(0, |h| h + 1), self.labels[i]))
    }
}

/// Builds a graph from CoNLL-style `(index, head, label)` triples: indices are
/// 1-based and head 0 marks the root.
pub fn graph_from_triples(
    triples: &[(usize, usize, String)],
    map: &LabelMap,
    mode: ValidationMode,
) -> Result<DependencyGraph, DepError> {
    let n = triples.len();
    let mut heads = vec![None; n];
    let mut labels = vec![DepLabel::Dep; n];
    let mut seen = vec![false; n];
    for (index, head, label) in triples {
        let (index, head) = (*index, *head);
        if index == 0 || index > n || seen[index - 1] {
            return Err(DepError::BadIndex(index));
        }
        seen[index - 1] = true;
        if head > n {
            return Err(DepError::HeadOutOfRange {
                token: index - 1,
                head,
                len: n,
            });
        }
        heads[index - 1] = head.checked_sub(1);
        labels[index - 1] =
            map.normalize(label, mode)
                .ok_or_else(|| DepError::UnknownLabel {
                    label: label.clone(),
                    token: index - 1,
                })?;
    }
    DependencyGraph::new(heads, labels)
}

/// Tokens and graph read from tabular rows.
#[derive(Clone, Debug)]
pub struct DependencyRows {
    pub tokens: Vec<Token>,
    pub graph: DependencyGraph,
}

/// Reads tab-separated rows `index surface lemma pos head label` (six
/// columns) or CoNLL-X/CoNLL-U rows (ten columns). `_` marks a missing lemma;
/// blank lines and `#` comments are skipped.
pub fn parse_dependency_rows(
    text: &str,
    map: &LabelMap,
    mode: ValidationMode,
) -> Result<DependencyRows, DepError> {
    let mut tokens = Vec::new();
    let mut triples = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let (idx, surface, lemma, pos, head, label) = match cols.len() {
            6 => (cols[0], cols[1], cols[2], cols[3], cols[4], cols[5]),
            8..=10 => (cols[0], cols[1], cols[2], cols[3], cols[6], cols[7]),
            k => {
                return Err(DepError::BadRow {
                    line: i + 1,
                    msg: format!("expected 6 or 10 tab-separated columns, found {}", k),
                })
            }
        };
        let bad = |what: &str| DepError::BadRow {
            line: i + 1,
            msg: format!("{} is not a number", what),
        };
        let idx: usize = idx.trim().parse().map_err(|_| bad("index"))?;
        let head: usize = head.trim().parse().map_err(|_| bad("head"))?;
        if surface.is_empty() {
            return Err(DepError::BadRow {
                line: i + 1,
                msg: "empty surface form".into(),
            });
        }
        tokens.push(Token {
            index: idx.saturating_sub(1),
            surface: surface.to_string(),
            lemma: (lemma != "_" && !lemma.is_empty()).then(|| lemma.to_string()),
            pos: pos.to_string(),
        });
        triples.push((idx, head, label.to_string()));
    }
    let graph = graph_from_triples(&triples, map, mode)?;
    tokens.sort_by_key(|t| t.index);
    Ok(DependencyRows { tokens, graph })
}
