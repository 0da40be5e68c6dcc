//! Statements with their pre-computed parses, and the JSON Lines corpus
//! reader.

mod deps;
mod tree;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::span::Span;

pub use deps::{
    graph_from_triples, parse_dependency_rows, DepError, DepLabel, DependencyGraph,
    DependencyRows, LabelMap,
};
pub use tree::{parse_bracketed_tree, ConstituencyTree, Node, NodeId, TreeError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ValidationMode {
    #[default]
    Strict,
    Lenient,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    #[serde(skip)]
    pub index: usize,
    pub surface: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemma: Option<String>,
    pub pos: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("statement `{id}`: {msg}")]
pub struct AlignmentError {
    pub id: String,
    pub msg: String,
}

/// One legal sentence with tokens, constituency tree and dependency graph.
/// Construction validates that all three layers describe the same tokens.
#[derive(Clone, Debug)]
pub struct Statement {
    id: String,
    text: String,
    tokens: Vec<Token>,
    tree: ConstituencyTree,
    deps: DependencyGraph,
    references: Vec<Span>,
    char_offsets: Vec<Option<(usize, usize)>>,
}

/// PTB bracket escapes accepted as equal to the literal token.
fn leaf_matches(leaf: &str, surface: &str) -> bool {
    leaf == surface
        || matches!(
            (leaf, surface),
            ("-LRB-", "(") | ("-RRB-", ")") | ("-LSB-", "[") | ("-RSB-", "]") | ("-LCB-", "{") | ("-RCB-", "}")
        )
}

impl Statement {
    pub fn new(
        id: impl Into<String>,
        text: impl Into<String>,
        mut tokens: Vec<Token>,
        tree: ConstituencyTree,
        deps: DependencyGraph,
        references: Vec<Span>,
    ) -> Result<Self, AlignmentError> {
        let id = id.into();
        let text = text.into();
        let err = |msg: String| AlignmentError { id: id.clone(), msg };
        if tokens.is_empty() {
            return Err(err("statement has no tokens".into()));
        }
        for (i, t) in tokens.iter_mut().enumerate() {
            if t.surface.is_empty() {
                return Err(err(format!("token {} has an empty surface", i)));
            }
            t.index = i;
        }
        if tree.leaf_count() != tokens.len() {
            return Err(err(format!(
                "tree yields {} leaves but there are {} tokens",
                tree.leaf_count(),
                tokens.len()
            )));
        }
        if deps.len() != tokens.len() {
            return Err(err(format!(
                "dependency graph has {} nodes but there are {} tokens",
                deps.len(),
                tokens.len()
            )));
        }
        for (i, (leaf, tok)) in tree.words().zip(&tokens).enumerate() {
            if !leaf_matches(leaf, &tok.surface) {
                return Err(err(format!(
                    "tree leaf {} is `{}` but token {} is `{}`",
                    i, leaf, i, tok.surface
                )));
            }
        }
        for r in &references {
            if r.is_empty() || r.end > tokens.len() {
                return Err(err(format!("reference span {} is out of bounds", r)));
            }
        }
        let char_offsets = locate_tokens(&text, &tokens);
        Ok(Statement {
            id,
            text,
            tokens,
            tree,
            deps,
            references,
            char_offsets,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tree(&self) -> &ConstituencyTree {
        &self.tree
    }

    pub fn deps(&self) -> &DependencyGraph {
        &self.deps
    }

    /// Externally supplied cross-reference spans.
    pub fn references(&self) -> &[Span] {
        &self.references
    }

    /// Character range of `span` in the raw text, when its tokens could be
    /// located.
    pub fn char_range(&self, span: Span) -> Option<(usize, usize)> {
        let first = self.char_offsets.get(span.start).copied().flatten()?;
        let last = self.char_offsets.get(span.end - 1).copied().flatten()?;
        Some((first.0, last.1))
    }

    pub fn span_text(&self, span: Span) -> String {
        self.tokens[span.start..span.end]
            .iter()
            .map(|t| t.surface.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Finds each token's surface in the text, left to right, in characters.
fn locate_tokens(text: &str, tokens: &[Token]) -> Vec<Option<(usize, usize)>> {
    let mut cursor = 0;
    tokens
        .iter()
        .map(|t| {
            let found = text[cursor..].find(&t.surface)?;
            let start_byte = cursor + found;
            let end_byte = start_byte + t.surface.len();
            cursor = end_byte;
            let start = text[..start_byte].chars().count();
            Some((start, start + t.surface.chars().count()))
        })
        .collect()
}

/// One line of the corpus file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StatementRecord {
    pub id: String,
    pub text: String,
    pub tokens: Vec<Token>,
    pub tree: String,
    pub deps: Vec<DepRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub references: Vec<Span>,
}

/// `index` is 1-based; `head` 0 marks the root.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DepRecord {
    pub index: usize,
    pub head: usize,
    pub label: String,
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: malformed statement record: {msg}")]
    Record { line: usize, msg: String },
    #[error("statement `{id}`: bad tree: {source}")]
    Tree { id: String, source: TreeError },
    #[error("statement `{id}`: bad dependencies: {source}")]
    Deps { id: String, source: DepError },
    #[error(transparent)]
    Alignment(#[from] AlignmentError),
}

impl IngestError {
    pub fn statement_id(&self) -> Option<&str> {
        match self {
            IngestError::Tree { id, .. } | IngestError::Deps { id, .. } => Some(id),
            IngestError::Alignment(a) => Some(&a.id),
            _ => None,
        }
    }
}

impl StatementRecord {
    pub fn into_statement(
        self,
        map: &LabelMap,
        mode: ValidationMode,
    ) -> Result<Statement, IngestError> {
        let tree = parse_bracketed_tree(&self.tree).map_err(|source| IngestError::Tree {
            id: self.id.clone(),
            source,
        })?;
        let triples: Vec<_> = self
            .deps
            .iter()
            .map(|d| (d.index, d.head, d.label.clone()))
            .collect();
        let deps = graph_from_triples(&triples, map, mode).map_err(|source| IngestError::Deps {
            id: self.id.clone(),
            source,
        })?;
        Ok(Statement::new(
            self.id,
            self.text,
            self.tokens,
            tree,
            deps,
            self.references,
        )?)
    }

    pub fn from_statement(s: &Statement) -> Self {
        StatementRecord {
            id: s.id.clone(),
            text: s.text.clone(),
            tokens: s.tokens.clone(),
            tree: s.tree.to_bracketed(),
            deps: s
                .deps
                .rows()
                .map(|(index, head, label)| DepRecord {
                    index,
                    head,
                    label: label.as_str().to_string(),
                })
                .collect(),
            references: s.references.clone(),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct LoadOptions {
    pub mode: ValidationMode,
    pub labels: Option<LabelMap>,
}

/// Statements that loaded, plus what was skipped in lenient mode.
#[derive(Debug, Default)]
pub struct Corpus {
    pub statements: Vec<Statement>,
    pub skipped: Vec<IngestError>,
    pub warnings: Vec<String>,
}

/// Reads a JSON Lines corpus. Strict mode stops at the first bad statement;
/// lenient mode skips it and records the error.
pub fn parse_corpus(text: &str, opts: &LoadOptions) -> Result<Corpus, IngestError> {
    let builtin;
    let map = match &opts.labels {
        Some(m) => m,
        None => {
            builtin = LabelMap::builtin();
            &builtin
        }
    };
    let mut corpus = Corpus::default();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let result = serde_json::from_str::<StatementRecord>(line)
            .map_err(|e| IngestError::Record {
                line: i + 1,
                msg: e.to_string(),
            })
            .and_then(|rec| rec.into_statement(map, opts.mode));
        match result {
            Ok(s) => corpus.statements.push(s),
            Err(e) if opts.mode == ValidationMode::Strict => return Err(e),
            Err(e) => {
                log::warn!("skipping: {}", e);
                corpus.skipped.push(e);
            }
        }
    }
    if corpus.statements.is_empty() && corpus.skipped.is_empty() {
        log::warn!("corpus is empty");
        corpus.warnings.push("corpus contains no statements".to_string());
    }
    Ok(corpus)
}

pub fn load_corpus(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<Corpus, IngestError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_corpus(&text, opts)
}
