//! The 31 features describing one actor annotation.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::concept::Concept;
use crate::corpus::{DepLabel, Statement};
use crate::engine::{head_token, Annotation};
use crate::lexicon::{Lexicon, Scope};
use crate::span::Span;

const SHIPPED_TRANSITIVITY: &str = include_str!("../../data/transitivity.tsv");

/// Column names, in CSV order.
pub const FEATURE_NAMES: [&str; 31] = [
    "active_voice",
    "transitivity",
    "modal_verb",
    "number_of_actors",
    "actor_position",
    "annotation_container",
    "preceding_annotation",
    "following_annotation",
    "preceding_pos",
    "distance_to_main_verb",
    "dependency_chain",
    "SUJ",
    "OBJ",
    "ATS",
    "ATO",
    "MOD",
    "A-OBJ",
    "DE-OBJ",
    "P-OBJ",
    "DET",
    "DEP",
    "PONCT",
    "ROOT",
    "DEPCOORD",
    "COORD",
    "AUXPASS",
    "AUXCAUS",
    "AUXTPS",
    "AFF",
    "ARG",
    "MODREL",
];

/// Columns holding category names rather than numbers.
pub const CATEGORICAL: [usize; 7] = [1, 2, 5, 6, 7, 8, 10];

/// Written for absent categorical values.
pub const NULL: &str = "null";

/// Statement-level concepts whose markers count as modal verbs.
const MODAL_LISTS: [Concept; 3] = [Concept::Permission, Concept::Obligation, Concept::Prohibition];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transitivity {
    Transitive,
    Intransitive,
    Both,
    Unknown,
}

impl Transitivity {
    pub fn name(self) -> &'static str {
        match self {
            Transitivity::Transitive => "transitive",
            Transitivity::Intransitive => "intransitive",
            Transitivity::Both => "both",
            Transitivity::Unknown => "unknown",
        }
    }
}

impl fmt::Display for Transitivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Transitivity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "transitive" => Ok(Transitivity::Transitive),
            "intransitive" => Ok(Transitivity::Intransitive),
            "both" => Ok(Transitivity::Both),
            "unknown" => Ok(Transitivity::Unknown),
            other => Err(format!("unknown transitivity `{}`", other)),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TransitivityError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Row { line: u64, msg: String },
}

/// Verb transitivity lookup, keyed by lower-cased lemma.
#[derive(Clone, Debug, Default)]
pub struct TransitivityLexicon {
    verbs: HashMap<String, Transitivity>,
}

impl TransitivityLexicon {
    pub fn builtin() -> Self {
        Self::parse(SHIPPED_TRANSITIVITY).expect("shipped transitivity file is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TransitivityError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| TransitivityError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// `verb<TAB>transitive|intransitive|both` rows; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, TransitivityError> {
        let mut rdr = csv::ReaderBuilder::new()
            .delimiter(b'\t')
            .has_headers(false)
            .comment(Some(b'#'))
            .flexible(true)
            .from_reader(text.as_bytes());
        let mut verbs = HashMap::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| TransitivityError::Row {
                line: e.position().map_or(0, |p| p.line()),
                msg: e.to_string(),
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.len() != 2 {
                return Err(TransitivityError::Row {
                    line,
                    msg: "expected two tab-separated columns".into(),
                });
            }
            let t: Transitivity = rec[1]
                .trim()
                .parse()
                .map_err(|msg| TransitivityError::Row { line, msg })?;
            verbs.insert(rec[0].trim().to_lowercase(), t);
        }
        Ok(TransitivityLexicon { verbs })
    }

    pub fn lookup(&self, verb: &str) -> Transitivity {
        self.verbs
            .get(&verb.to_lowercase())
            .copied()
            .unwrap_or(Transitivity::Unknown)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActorFeatures {
    pub active_voice: bool,
    pub transitivity: Transitivity,
    /// Modal-list markers found in the statement, in order.
    pub modal_verbs: Vec<String>,
    pub number_of_actors: usize,
    /// 1-based.
    pub actor_position: usize,
    pub annotation_container: Option<Concept>,
    pub preceding_annotation: Option<Concept>,
    pub following_annotation: Option<Concept>,
    pub preceding_pos: Option<String>,
    pub distance_to_main_verb: usize,
    /// Labels from the actor's head token up to the main verb.
    pub dependency_chain: Vec<DepLabel>,
}

impl ActorFeatures {
    /// Occurrences of each label in the chain, in `DepLabel::ALL` order.
    pub fn label_counts(&self) -> [usize; 20] {
        let mut counts = [0; 20];
        for l in &self.dependency_chain {
            counts[l.index()] += 1;
        }
        counts
    }

    /// The CSV row (31 values).
    pub fn to_row(&self) -> Vec<String> {
        let opt = |c: Option<Concept>| c.map_or(NULL.to_string(), |c| c.name().to_string());
        let join = |v: &[String]| if v.is_empty() { NULL.to_string() } else { v.join("+") };
        let chain: Vec<String> = self.dependency_chain.iter().map(|l| l.as_str().to_string()).collect();
        let mut row = vec![
            self.active_voice.to_string(),
            self.transitivity.to_string(),
            join(&self.modal_verbs),
            self.number_of_actors.to_string(),
            self.actor_position.to_string(),
            opt(self.annotation_container),
            opt(self.preceding_annotation),
            opt(self.following_annotation),
            self.preceding_pos.clone().unwrap_or_else(|| NULL.to_string()),
            self.distance_to_main_verb.to_string(),
            if chain.is_empty() { NULL.to_string() } else { chain.join(">") },
        ];
        row.extend(self.label_counts().iter().map(|c| c.to_string()));
        row
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FeatureError {
    #[error("statement `{0}` has no main verb")]
    NoMainVerb(String),
    #[error("annotation {index} of statement `{id}` is not an actor")]
    NotAnActor { id: String, index: usize },
}

/// Lexical resources used by feature extraction.
#[derive(Clone, Copy)]
pub struct FeatureContext<'a> {
    pub lexicon: &'a Lexicon,
    pub transitivity: &'a TransitivityLexicon,
}

fn nearest_before(anns: &[Annotation], skip: usize, span: Span) -> Option<&Annotation> {
    anns.iter()
        .enumerate()
        .filter(|&(i, a)| i != skip && a.bounds().end <= span.start)
        .map(|(_, a)| a)
        .max_by(|a, b| {
            (a.bounds().end, a.bounds().start, std::cmp::Reverse(a.concept.name()))
                .cmp(&(b.bounds().end, b.bounds().start, std::cmp::Reverse(b.concept.name())))
        })
}

fn nearest_after(anns: &[Annotation], skip: usize, span: Span) -> Option<&Annotation> {
    anns.iter()
        .enumerate()
        .filter(|&(i, a)| i != skip && a.bounds().start >= span.end)
        .map(|(_, a)| a)
        .min_by(|a, b| {
            (a.bounds().start, a.bounds().end, a.concept.name())
                .cmp(&(b.bounds().start, b.bounds().end, b.concept.name()))
        })
}

/// Features of `anns[actor]` within `s`.
pub fn extract_features(
    s: &Statement,
    anns: &[Annotation],
    actor: usize,
    ctx: FeatureContext<'_>,
) -> Result<ActorFeatures, FeatureError> {
    let a = anns.get(actor).filter(|a| a.concept.is_actor_family()).ok_or_else(|| {
        FeatureError::NotAnActor {
            id: s.id().to_string(),
            index: actor,
        }
    })?;
    let deps = s.deps();
    if deps.is_empty() {
        return Err(FeatureError::NoMainVerb(s.id().to_string()));
    }
    let verb = deps.root();
    let span = a.bounds();

    let mut actors: Vec<(Span, usize)> = anns
        .iter()
        .enumerate()
        .filter(|(_, x)| x.concept.is_actor_family())
        .map(|(i, x)| (x.bounds(), i))
        .collect();
    actors.sort();
    let position = actors.iter().position(|&(_, i)| i == actor).expect("actor is listed") + 1;

    let mut modal: Vec<(Span, String)> = Vec::new();
    for c in MODAL_LISTS {
        for o in ctx.lexicon.find_marker_occurrences(c, s.tokens(), Scope::Full) {
            modal.push((o.span, s.span_text(o.span).to_lowercase()));
        }
    }
    modal.sort();
    modal.dedup_by(|x, y| x.0 == y.0);

    let container = anns
        .iter()
        .enumerate()
        .filter(|&(i, x)| i != actor && x.segments != a.segments && x.segments.contains(&a.segments))
        .min_by_key(|&(_, x)| (x.segments.token_count(), x.concept.name()))
        .map(|(_, x)| x.concept);

    let between = |b: Span| {
        if verb < span.start {
            b.start > verb && b.end <= span.start
        } else if verb >= span.end {
            b.start >= span.end && b.end <= verb
        } else {
            false
        }
    };
    let distance = anns
        .iter()
        .enumerate()
        .filter(|&(i, x)| i != actor && between(x.bounds()))
        .count();

    let verb_token = &s.tokens()[verb];
    let verb_form = verb_token.lemma.as_deref().unwrap_or(&verb_token.surface);

    Ok(ActorFeatures {
        active_voice: !deps.is_passive(),
        transitivity: ctx.transitivity.lookup(verb_form),
        modal_verbs: modal.into_iter().map(|(_, t)| t).collect(),
        number_of_actors: actors.len(),
        actor_position: position,
        annotation_container: container,
        preceding_annotation: nearest_before(anns, actor, span).map(|x| x.concept),
        following_annotation: nearest_after(anns, actor, span).map(|x| x.concept),
        preceding_pos: span.start.checked_sub(1).map(|i| s.tokens()[i].pos.clone()),
        distance_to_main_verb: distance,
        dependency_chain: deps.chain_to_root(head_token(deps, span)),
    })
}
