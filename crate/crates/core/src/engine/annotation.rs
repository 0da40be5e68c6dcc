use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::concept::Concept;
use crate::corpus::Statement;
use crate::span::{SegmentSet, Span};

/// A phrase-level concept attached to one or more token segments.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    #[serde(rename = "type")]
    pub concept: Concept,
    pub segments: SegmentSet,
    /// Character ranges of the segments in the statement text.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub chars: Vec<[usize; 2]>,
    /// Id of the rule (or heuristic) that produced the annotation.
    #[serde(default)]
    pub rule: String,
    /// Actor whose role could not be decided.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub cannot_classify: bool,
}

impl Annotation {
    pub fn new(concept: Concept, segments: SegmentSet, rule: impl Into<String>) -> Self {
        Annotation {
            concept,
            segments,
            chars: Vec::new(),
            rule: rule.into(),
            cannot_classify: false,
        }
    }

    pub fn span(concept: Concept, span: Span, rule: impl Into<String>) -> Self {
        Self::new(concept, SegmentSet::single(span), rule)
    }

    pub fn bounds(&self) -> Span {
        self.segments.bounds()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedStatement {
    pub id: String,
    pub statement_type: Concept,
    #[serde(default)]
    pub annotations: Vec<Annotation>,
}

impl AnnotatedStatement {
    /// Sorts annotations by start token, then concept name.
    pub fn canonicalize(&mut self) {
        self.annotations.sort_by(|a, b| {
            (a.bounds().start, a.concept.name(), &a.segments, &a.rule)
                .cmp(&(b.bounds().start, b.concept.name(), &b.segments, &b.rule))
        });
    }

    pub fn fill_chars(&mut self, statement: &Statement) {
        for a in &mut self.annotations {
            let ranges: Option<Vec<[usize; 2]>> = a
                .segments
                .spans()
                .iter()
                .map(|&s| statement.char_range(s).map(|(x, y)| [x, y]))
                .collect();
            a.chars = ranges.unwrap_or_default();
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AnnotationFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Record { line: usize, msg: String },
}

/// Reads annotation JSON Lines (engine output or gold).
pub fn parse_annotated(text: &str) -> Result<Vec<AnnotatedStatement>, AnnotationFileError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let rec = |msg: String| AnnotationFileError::Record { line: i + 1, msg };
        let s: AnnotatedStatement = serde_json::from_str(raw).map_err(|e| rec(e.to_string()))?;
        if !s.statement_type.is_statement_level() {
            return Err(rec(format!("`{}` is not a statement-level type", s.statement_type)));
        }
        if let Some(a) = s.annotations.iter().find(|a| !a.concept.is_phrase_level()) {
            return Err(rec(format!("`{}` is not a phrase-level type", a.concept)));
        }
        out.push(s);
    }
    Ok(out)
}

pub fn load_annotated(path: impl AsRef<Path>) -> Result<Vec<AnnotatedStatement>, AnnotationFileError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| AnnotationFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_annotated(&text)
}

/// One JSON object per line, in the given order.
pub fn to_jsonl(statements: &[AnnotatedStatement]) -> String {
    let mut out = String::new();
    for s in statements {
        out.push_str(&serde_json::to_string(s).expect("annotations serialize"));
        out.push('\n');
    }
    out
}
