//! Per-concept marker lexicons with multi-word, rule-scoped matching.
//!
//! A lexicon directory holds one `<concept>.txt` per concept, one marker per
//! line, `#` for comments. A line prefixed with `lemma:` matches token lemmas
//! only. Files named `<concept>.<scope>.txt` define a marker subset used by
//! rules that declare that scope. An optional `policy.toml` sets the
//! `case_fold` and `lemma_fallback` flags.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::concept::Concept;
use crate::corpus::{Token, ValidationMode};
use crate::span::Span;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MatchPolicy {
    pub case_fold: bool,
    pub lemma_fallback: bool,
}

impl Default for MatchPolicy {
    fn default() -> Self {
        MatchPolicy {
            case_fold: true,
            lemma_fallback: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct MarkerKey {
    lemma_only: bool,
    words: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Marker {
    /// The line as written (without the `lemma:` prefix).
    pub phrase: String,
    key: MarkerKey,
}

impl Marker {
    fn parse(line: &str, policy: MatchPolicy) -> Option<Marker> {
        let (lemma_only, body) = match line.strip_prefix("lemma:") {
            Some(rest) => (true, rest.trim()),
            None => (false, line),
        };
        let words: Vec<String> = body
            .split_whitespace()
            .map(|w| fold(w, policy))
            .collect();
        if words.is_empty() {
            return None;
        }
        Some(Marker {
            phrase: body.split_whitespace().collect::<Vec<_>>().join(" "),
            key: MarkerKey { lemma_only, words },
        })
    }

    pub fn len(&self) -> usize {
        self.key.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.key.words.is_empty()
    }

    pub fn lemma_only(&self) -> bool {
        self.key.lemma_only
    }
}

fn fold(s: &str, policy: MatchPolicy) -> String {
    if policy.case_fold {
        s.to_lowercase()
    } else {
        s.to_string()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MarkerSet {
    markers: Vec<Marker>,
}

impl MarkerSet {
    pub fn markers(&self) -> &[Marker] {
        &self.markers
    }

    pub fn is_empty(&self) -> bool {
        self.markers.is_empty()
    }

    pub fn len(&self) -> usize {
        self.markers.len()
    }

    fn has(&self, key: &MarkerKey) -> bool {
        self.markers.iter().any(|m| &m.key == key)
    }

    fn push(&mut self, m: Marker) {
        if !self.has(&m.key) {
            self.markers.push(m);
        }
    }
}

/// Which marker set a query consults.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scope<'a> {
    Full,
    Rule(&'a str),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarkerOccurrence {
    pub concept: Concept,
    pub span: Span,
    pub phrase: String,
}

#[derive(Debug, thiserror::Error)]
pub enum LexiconError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{file}:{line}: malformed marker line")]
    MalformedLine { file: String, line: usize },
    #[error("{file}: file name does not name a concept")]
    UnknownConceptFile { file: String },
    #[error("{file}: scoped marker `{phrase}` is missing from the concept's full set")]
    ScopeNotSubset { file: String, phrase: String },
    #[error("{file}: bad policy: {msg}")]
    Policy { file: String, msg: String },
}

#[derive(Clone, Debug, Default)]
pub struct Lexicon {
    full: BTreeMap<Concept, MarkerSet>,
    scoped: BTreeMap<(Concept, String), MarkerSet>,
    policy: MatchPolicy,
    empty: MarkerSet,
}

macro_rules! shipped {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../data/lexicon/", $name)))),*]
    };
}

const SHIPPED: &[(&str, &str)] = shipped!(
    "actor.txt",
    "artifact.txt",
    "condition.txt",
    "condition.general.txt",
    "definition.txt",
    "exception.txt",
    "fact.txt",
    "location.txt",
    "modality.txt",
    "obligation.txt",
    "penalty.txt",
    "permission.txt",
    "policy.toml",
    "prohibition.txt",
    "reason.txt",
    "sanction.txt",
    "situation.txt",
    "time.txt",
    "violation.txt",
);

/// Files of the shipped default lexicon, as `(file name, contents)`.
pub fn shipped_files() -> &'static [(&'static str, &'static str)] {
    SHIPPED
}

impl Lexicon {
    /// The shipped default lexicon: English marker lists plus French modal
    /// verbs. Non-exhaustive.
    pub fn builtin() -> Self {
        Lexicon::from_files(SHIPPED.iter().copied(), ValidationMode::Strict)
            .expect("shipped lexicon is valid")
    }

    pub fn load(dir: impl AsRef<Path>, mode: ValidationMode) -> Result<Self, LexiconError> {
        let dir = dir.as_ref();
        let io = |source| LexiconError::Io {
            path: dir.display().to_string(),
            source,
        };
        let mut files = Vec::new();
        for entry in fs::read_dir(dir).map_err(io)? {
            let path = entry.map_err(io)?.path();
            let name = match path.file_name().and_then(|n| n.to_str()) {
                Some(n) if n.ends_with(".txt") || n == "policy.toml" => n.to_string(),
                _ => continue,
            };
            let text = fs::read_to_string(&path).map_err(|source| LexiconError::Io {
                path: path.display().to_string(),
                source,
            })?;
            files.push((name, text));
        }
        files.sort();
        Lexicon::from_files(files.iter().map(|(n, t)| (n.as_str(), t.as_str())), mode)
    }

    pub fn from_files<'a>(
        files: impl IntoIterator<Item = (&'a str, &'a str)>,
        mode: ValidationMode,
    ) -> Result<Self, LexiconError> {
        let files: Vec<_> = files.into_iter().collect();
        let mut lex = Lexicon::default();
        if let Some((name, text)) = files.iter().find(|(n, _)| *n == "policy.toml") {
            lex.policy = toml::from_str(text).map_err(|e| LexiconError::Policy {
                file: name.to_string(),
                msg: e.to_string(),
            })?;
        }
        let mut scoped_files = Vec::new();
        for (name, text) in &files {
            let Some(stem) = name.strip_suffix(".txt") else {
                continue;
            };
            let (concept_name, scope) = match stem.split_once('.') {
                Some((c, s)) => (c, Some(s)),
                None => (stem, None),
            };
            let concept = match concept_name.parse::<Concept>() {
                Ok(c) => c,
                Err(_) if mode == ValidationMode::Lenient => {
                    log::warn!("ignoring lexicon file {}", name);
                    continue;
                }
                Err(_) => {
                    return Err(LexiconError::UnknownConceptFile {
                        file: name.to_string(),
                    })
                }
            };
            let set = parse_marker_file(name, text, lex.policy)?;
            match scope {
                None => {
                    let full = lex.full.entry(concept).or_default();
                    for m in set.markers {
                        full.push(m);
                    }
                }
                Some(s) => scoped_files.push((name.to_string(), concept, s.to_string(), set)),
            }
        }
        for (file, concept, scope, set) in scoped_files {
            for m in set.markers() {
                let full = lex.full.entry(concept).or_default();
                if !full.has(&m.key) {
                    if mode == ValidationMode::Strict {
                        return Err(LexiconError::ScopeNotSubset {
                            file,
                            phrase: m.phrase.clone(),
                        });
                    }
                    full.push(m.clone());
                }
            }
            lex.scoped.insert((concept, scope), set);
        }
        Ok(lex)
    }

    pub fn policy(&self) -> MatchPolicy {
        self.policy
    }

    pub fn markers(&self, concept: Concept, scope: Scope<'_>) -> &MarkerSet {
        if let Scope::Rule(id) = scope {
            if let Some(set) = self.scoped.get(&(concept, id.to_string())) {
                return set;
            }
        }
        self.full.get(&concept).unwrap_or(&self.empty)
    }

    pub fn has_scope(&self, concept: Concept, scope: &str) -> bool {
        self.scoped.contains_key(&(concept, scope.to_string()))
    }

    /// Concepts other than `concept` whose full set lists the same marker.
    pub fn also_listed_under(&self, concept: Concept, marker: &Marker) -> Vec<Concept> {
        self.full
            .iter()
            .filter(|(c, set)| **c != concept && set.has(&marker.key))
            .map(|(c, _)| *c)
            .collect()
    }

    /// Maximal, non-overlapping marker occurrences. Candidates are taken
    /// longest first, then leftmost.
    pub fn find_marker_occurrences(
        &self,
        concept: Concept,
        tokens: &[Token],
        scope: Scope<'_>,
    ) -> Vec<MarkerOccurrence> {
        let set = self.markers(concept, scope);
        if set.is_empty() {
            return Vec::new();
        }
        let forms = TokenForms::new(tokens, self.policy);
        let mut candidates: Vec<(Span, &Marker)> = Vec::new();
        for start in 0..tokens.len() {
            for m in set.markers() {
                if forms.matches_at(start, m, self.policy) {
                    candidates.push((Span::new(start, start + m.len()), m));
                }
            }
        }
        candidates.sort_by(|a, b| {
            b.0.len()
                .cmp(&a.0.len())
                .then(a.0.start.cmp(&b.0.start))
        });
        let mut taken: Vec<(Span, &Marker)> = Vec::new();
        for (span, m) in candidates {
            if taken.iter().all(|(t, _)| !t.intersects(&span)) {
                taken.push((span, m));
            }
        }
        taken.sort_by_key(|(s, _)| *s);
        taken
            .into_iter()
            .map(|(span, m)| MarkerOccurrence {
                concept,
                span,
                phrase: m.phrase.clone(),
            })
            .collect()
    }

    /// The marker behind an occurrence, for ambiguity lookups.
    pub fn marker_for(&self, occ: &MarkerOccurrence, scope: Scope<'_>) -> Option<&Marker> {
        self.markers(occ.concept, scope)
            .markers()
            .iter()
            .find(|m| m.phrase == occ.phrase && m.len() == occ.span.len())
    }
}

fn parse_marker_file(name: &str, text: &str, policy: MatchPolicy) -> Result<MarkerSet, LexiconError> {
    let mut set = MarkerSet::default();
    for (i, raw) in text.lines().enumerate() {
        if raw.trim_start().starts_with('#') {
            continue;
        }
        let m = Marker::parse(raw.trim(), policy).ok_or_else(|| LexiconError::MalformedLine {
            file: name.to_string(),
            line: i + 1,
        })?;
        set.push(m);
    }
    Ok(set)
}

struct TokenForms {
    surface: Vec<String>,
    lemma: Vec<Option<String>>,
}

impl TokenForms {
    fn new(tokens: &[Token], policy: MatchPolicy) -> Self {
        TokenForms {
            surface: tokens.iter().map(|t| fold(&t.surface, policy)).collect(),
            lemma: tokens
                .iter()
                .map(|t| t.lemma.as_deref().map(|l| fold(l, policy)))
                .collect(),
        }
    }

    fn matches_at(&self, start: usize, m: &Marker, policy: MatchPolicy) -> bool {
        if start + m.len() > self.surface.len() {
            return false;
        }
        m.key.words.iter().enumerate().all(|(k, w)| {
            let i = start + k;
            let lemma_hit = self.lemma[i].as_deref() == Some(w.as_str());
            if m.key.lemma_only {
                lemma_hit
            } else {
                self.surface[i] == *w || (policy.lemma_fallback && lemma_hit)
            }
        })
    }
}

/// Indexes occurrences per `(concept, scope)` for one token sequence.
#[derive(Default)]
pub(crate) struct OccurrenceCache {
    cache: HashMap<(Concept, Option<String>), Vec<MarkerOccurrence>>,
}

impl OccurrenceCache {
    pub(crate) fn get(
        &mut self,
        lex: &Lexicon,
        tokens: &[Token],
        concept: Concept,
        scope: Scope<'_>,
    ) -> &[MarkerOccurrence] {
        // Scopes without a subset file share the full-set entry.
        let key_scope = match scope {
            Scope::Rule(id) if lex.has_scope(concept, id) => Some(id.to_string()),
            _ => None,
        };
        self.cache
            .entry((concept, key_scope))
            .or_insert_with(|| lex.find_marker_occurrences(concept, tokens, scope))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Token> {
        s.split_whitespace()
            .enumerate()
            .map(|(i, w)| Token {
                index: i,
                surface: w.to_string(),
                lemma: None,
                pos: "X".into(),
            })
            .collect()
    }

    fn lex(files: &[(&str, &str)]) -> Lexicon {
        Lexicon::from_files(files.iter().copied(), ValidationMode::Strict).unwrap()
    }

    #[test]
    fn provided_that() {
        let l = lex(&[("condition.txt", "if\nprovided that")]);
        let t = toks("provided that these municipal regulations concern the roads");
        let occ = l.find_marker_occurrences(Concept::Condition, &t, Scope::Full);
        assert_eq!(occ.len(), 1);
        assert_eq!(occ[0].span, Span::new(0, 2));
        assert_eq!(occ[0].phrase, "provided that");
    }

    #[test]
    fn empty_set_and_missing_concepts() {
        let l = lex(&[("sanction.txt", "")]);
        assert!(l.markers(Concept::Sanction, Scope::Full).is_empty());
        assert!(l.markers(Concept::Time, Scope::Full).is_empty());
        assert!(l
            .find_marker_occurrences(Concept::Sanction, &toks("a fine"), Scope::Full)
            .is_empty());
    }

    #[test]
    fn blank_line_is_malformed() {
        let err = Lexicon::from_files([("time.txt", "day\n\nyear")], ValidationMode::Strict).unwrap_err();
        assert!(matches!(err, LexiconError::MalformedLine { line: 2, .. }));
        let err = Lexicon::from_files([("time.txt", "lemma:")], ValidationMode::Strict).unwrap_err();
        assert!(matches!(err, LexiconError::MalformedLine { line: 1, .. }));
    }

    #[test]
    fn unknown_concept_file() {
        assert!(matches!(
            Lexicon::from_files([("gadget.txt", "x")], ValidationMode::Strict),
            Err(LexiconError::UnknownConceptFile { .. })
        ));
        assert!(Lexicon::from_files([("gadget.txt", "x")], ValidationMode::Lenient).is_ok());
    }

    #[test]
    fn scoped_subset_must_be_subset() {
        let err = Lexicon::from_files(
            [("condition.txt", "if"), ("condition.general.txt", "when")],
            ValidationMode::Strict,
        )
        .unwrap_err();
        assert!(matches!(err, LexiconError::ScopeNotSubset { .. }));
    }

    #[test]
    fn scoped_lookup_falls_back_to_full() {
        let l = lex(&[("condition.txt", "if\nwho"), ("condition.general.txt", "if")]);
        let t = toks("who drives if needed");
        assert_eq!(
            l.find_marker_occurrences(Concept::Condition, &t, Scope::Full).len(),
            2
        );
        assert_eq!(
            l.find_marker_occurrences(Concept::Condition, &t, Scope::Rule("general")).len(),
            1
        );
        assert_eq!(
            l.find_marker_occurrences(Concept::Condition, &t, Scope::Rule("other")).len(),
            2
        );
    }

    #[test]
    fn lemma_matching() {
        let l = lex(&[("condition.txt", "limit"), ("location.txt", "lemma:road")]);
        let mut t = toks("within the limits on Roads");
        t[2].lemma = Some("limit".into());
        let occ = l.find_marker_occurrences(Concept::Condition, &t, Scope::Full);
        assert_eq!(occ[0].span, Span::new(2, 3));
        // lemma-only markers need lemmas on the tokens
        assert!(l.find_marker_occurrences(Concept::Location, &t, Scope::Full).is_empty());
        t[4].lemma = Some("road".into());
        assert_eq!(l.find_marker_occurrences(Concept::Location, &t, Scope::Full).len(), 1);

        let strict = lex(&[("policy.toml", "lemma_fallback = false"), ("condition.txt", "limit")]);
        assert!(strict.find_marker_occurrences(Concept::Condition, &t, Scope::Full).is_empty());
    }

    #[test]
    fn dual_listing() {
        let l = lex(&[("actor.txt", "court of justice\njudge"), ("location.txt", "court of justice")]);
        let m = &l.markers(Concept::Actor, Scope::Full).markers()[0];
        assert_eq!(l.also_listed_under(Concept::Actor, m), vec![Concept::Location]);
        let m = &l.markers(Concept::Actor, Scope::Full).markers()[1];
        assert!(l.also_listed_under(Concept::Actor, m).is_empty());
    }

    #[test]
    fn builtin_loads_and_matches_dir_loader() {
        let b = Lexicon::builtin();
        assert!(b.markers(Concept::Fact, Scope::Full).is_empty());
        assert!(!b.markers(Concept::Obligation, Scope::Full).is_empty());
        let dir = tempfile::tempdir().unwrap();
        for (name, text) in shipped_files() {
            std::fs::write(dir.path().join(name), text).unwrap();
        }
        let loaded = Lexicon::load(dir.path(), ValidationMode::Strict).unwrap();
        for c in Concept::ALL {
            assert_eq!(
                loaded.markers(c, Scope::Full),
                b.markers(c, Scope::Full),
                "{}",
                c
            );
        }
    }
}
