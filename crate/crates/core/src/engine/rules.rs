//! Rule files.
//!
//! ```text
//! phrase <concept> [pre-action] [fallback] [id=..] [scope=..] [dep=subject|object] [voice=active|passive] :: <pattern>
//! statement <concept> priority=<n> [id=..] :: <term> | <term> ...
//! ```
//!
//! A statement term is `annotation:<c>`, `marker:<c>` or
//! `annotation:<c> < marker:<c>` (an annotation of the first concept whose
//! span holds a marker of the second).

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use crate::concept::Concept;
use crate::query::{compile_pattern, PatternError, TreePattern};

use super::PRE_ACTION;

const SHIPPED_RULES: &str = include_str!("../../data/rules.txt");

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    /// Runs before the action rule, whose spans it carves out.
    PreAction,
    Action,
    Main,
    /// Runs last and only where no annotation already has the same span.
    Fallback,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DepCondition {
    /// The head token attaches to the main verb as subject.
    Subject,
    /// The head token carries an object-class label.
    Object,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Voice {
    Active,
    Passive,
}

#[derive(Clone, Debug)]
pub struct PhraseRule {
    pub id: String,
    pub concept: Concept,
    pub phase: Phase,
    pub pattern: TreePattern,
    /// Marker subset name, looked up as `<concept>.<scope>.txt`.
    pub scope: Option<String>,
    pub dep: Option<DepCondition>,
    pub voice: Option<Voice>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StatementTerm {
    Annotation(Concept),
    Marker(Concept),
    AnnotationWithMarker(Concept, Concept),
}

#[derive(Clone, Debug)]
pub struct StatementRule {
    pub id: String,
    pub concept: Concept,
    pub priority: u32,
    /// Disjunction.
    pub terms: Vec<StatementTerm>,
}

#[derive(Clone, Debug, Default)]
pub struct RuleSet {
    phrase: Vec<PhraseRule>,
    statement: Vec<StatementRule>,
}

#[derive(Debug, thiserror::Error)]
pub enum RuleError {
    #[error("cannot read rule file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error("line {line}: bad pattern: {source}\n{rendered}")]
    Pattern {
        line: usize,
        rendered: String,
        #[source]
        source: PatternError,
    },
    #[error("statement rule priorities must be 1..{count} without gaps or repeats")]
    Priorities { count: usize },
}

fn line_err(line: usize, msg: impl Into<String>) -> RuleError {
    RuleError::Line {
        line,
        msg: msg.into(),
    }
}

fn concept(line: usize, s: &str) -> Result<Concept, RuleError> {
    s.parse()
        .map_err(|_| line_err(line, format!("unknown concept `{}`", s)))
}

fn parse_term(line: usize, s: &str) -> Result<StatementTerm, RuleError> {
    let one = |part: &str, prefix: &str| -> Result<Concept, RuleError> {
        let part = part.trim();
        match part.strip_prefix(prefix) {
            Some(c) => concept(line, c.trim()),
            None => Err(line_err(line, format!("expected `{}<concept>`, found `{}`", prefix, part))),
        }
    };
    let s = s.trim();
    if let Some((a, m)) = s.split_once('<') {
        return Ok(StatementTerm::AnnotationWithMarker(
            one(a, "annotation:")?,
            one(m, "marker:")?,
        ));
    }
    if s.starts_with("annotation:") {
        Ok(StatementTerm::Annotation(one(s, "annotation:")?))
    } else {
        Ok(StatementTerm::Marker(one(s, "marker:")?))
    }
}

impl RuleSet {
    /// The shipped rules.
    pub fn builtin() -> Self {
        Self::parse(SHIPPED_RULES).expect("shipped rule file is valid")
    }

    pub fn shipped_text() -> &'static str {
        SHIPPED_RULES
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RuleError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| RuleError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, RuleError> {
        let mut set = RuleSet::default();
        let mut ids = HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let raw = raw.trim();
            if raw.is_empty() || raw.starts_with('#') {
                continue;
            }
            let (head, body) = raw
                .split_once("::")
                .ok_or_else(|| line_err(line, "missing `::`"))?;
            let mut words = head.split_whitespace();
            let kind = words.next().unwrap_or_default();
            let c = concept(line, words.next().ok_or_else(|| line_err(line, "missing concept"))?)?;
            let id = match kind {
                "phrase" => {
                    let rule = Self::phrase_rule(line, c, words, body.trim(), set.phrase.len())?;
                    let id = rule.id.clone();
                    set.phrase.push(rule);
                    id
                }
                "statement" => {
                    let rule = Self::statement_rule(line, c, words, body, set.statement.len())?;
                    let id = rule.id.clone();
                    set.statement.push(rule);
                    id
                }
                other => return Err(line_err(line, format!("unknown rule kind `{}`", other))),
            };
            if !ids.insert(id.clone()) {
                return Err(line_err(line, format!("duplicate rule id `{}`", id)));
            }
        }
        let mut prios: Vec<u32> = set.statement.iter().map(|r| r.priority).collect();
        prios.sort_unstable();
        if prios.iter().enumerate().any(|(i, &p)| p as usize != i + 1) {
            return Err(RuleError::Priorities { count: prios.len() });
        }
        set.statement.sort_by_key(|r| r.priority);
        Ok(set)
    }

    fn phrase_rule<'a>(
        line: usize,
        concept: Concept,
        words: impl Iterator<Item = &'a str>,
        body: &str,
        n: usize,
    ) -> Result<PhraseRule, RuleError> {
        if !concept.is_phrase_level() {
            return Err(line_err(line, format!("`{}` is not a phrase-level concept", concept)));
        }
        let mut pre = false;
        let mut fallback = false;
        let mut id = None;
        let mut scope = None;
        let mut dep = None;
        let mut voice = None;
        for w in words {
            match w.split_once('=') {
                None if w == "pre-action" => pre = true,
                None if w == "fallback" => fallback = true,
                Some(("id", v)) => id = Some(v.to_string()),
                Some(("scope", v)) => scope = Some(v.to_string()),
                Some(("dep", "subject")) => dep = Some(DepCondition::Subject),
                Some(("dep", "object")) => dep = Some(DepCondition::Object),
                Some(("voice", "active")) => voice = Some(Voice::Active),
                Some(("voice", "passive")) => voice = Some(Voice::Passive),
                _ => return Err(line_err(line, format!("unknown option `{}`", w))),
            }
        }
        let must_pre = PRE_ACTION.contains(&concept);
        if must_pre != pre {
            let msg = if must_pre {
                format!("`{}` rules must be marked pre-action", concept)
            } else {
                format!("only modality, condition, exception and reason rules run pre-action, not `{}`", concept)
            };
            return Err(line_err(line, msg));
        }
        if (dep.is_some() || voice.is_some()) && !concept.is_actor_family() {
            return Err(line_err(line, "dep= and voice= apply to actor rules only"));
        }
        let phase = match (pre, fallback, concept) {
            (true, true, _) => return Err(line_err(line, "a rule cannot be both pre-action and fallback")),
            (true, false, _) => Phase::PreAction,
            (false, true, _) => Phase::Fallback,
            (false, false, Concept::Action) => Phase::Action,
            _ => Phase::Main,
        };
        let pattern = compile_pattern(body).map_err(|source| RuleError::Pattern {
            line,
            rendered: source.render(body),
            source,
        })?;
        Ok(PhraseRule {
            id: id.unwrap_or_else(|| format!("{}#{}", concept, n + 1)),
            concept,
            phase,
            pattern,
            scope,
            dep,
            voice,
        })
    }

    fn statement_rule<'a>(
        line: usize,
        concept: Concept,
        words: impl Iterator<Item = &'a str>,
        body: &str,
        n: usize,
    ) -> Result<StatementRule, RuleError> {
        if !concept.is_statement_level() {
            return Err(line_err(line, format!("`{}` is not a statement-level concept", concept)));
        }
        let mut priority = None;
        let mut id = None;
        for w in words {
            match w.split_once('=') {
                Some(("priority", v)) => {
                    priority = Some(v.parse::<u32>().map_err(|_| line_err(line, "priority must be a positive integer"))?)
                }
                Some(("id", v)) => id = Some(v.to_string()),
                _ => return Err(line_err(line, format!("unknown option `{}`", w))),
            }
        }
        let priority = priority.ok_or_else(|| line_err(line, "missing priority="))?;
        let terms = body
            .split('|')
            .map(|t| parse_term(line, t))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(StatementRule {
            id: id.unwrap_or_else(|| format!("{}#{}", concept, n + 1)),
            concept,
            priority,
            terms,
        })
    }

    pub fn phrase_rules(&self) -> &[PhraseRule] {
        &self.phrase
    }

    pub fn phase(&self, phase: Phase) -> impl Iterator<Item = &PhraseRule> {
        self.phrase.iter().filter(move |r| r.phase == phase)
    }

    /// Statement rules in priority order.
    pub fn statement_rules(&self) -> &[StatementRule] {
        &self.statement
    }

    pub fn is_empty(&self) -> bool {
        self.phrase.is_empty() && self.statement.is_empty()
    }
}
