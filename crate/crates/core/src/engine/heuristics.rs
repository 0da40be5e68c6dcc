//! Post-processing of raw rule output.
//!
//! * nesting: of two same-type annotations where one contains the other,
//!   only the outer one is kept;
//! * references: actor, time, location, artifact and condition annotations
//!   strictly inside a cross-reference are dropped;
//! * generalization: of two annotations on the same span whose types are
//!   related by generalization, the more generic one is dropped;
//! * ambiguous markers: a marker listed under two concepts yields an
//!   annotation of each.

use serde::{Deserialize, Serialize};

use crate::concept::Concept;
use crate::corpus::Token;
use crate::lexicon::{Lexicon, OccurrenceCache, Scope};
use crate::span::{SegmentSet, Span};

use super::annotation::Annotation;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeuristicOptions {
    /// Also resolve same-type annotations that overlap without nesting, keeping
    /// the longer one.
    pub merge_partial_overlaps: bool,
}

/// Types that cannot sit inside a cross-reference.
pub const REFERENCE_SENSITIVE: [Concept; 8] = [
    Concept::Actor,
    Concept::Agent,
    Concept::Target,
    Concept::AuxiliaryParty,
    Concept::Time,
    Concept::Location,
    Concept::Artifact,
    Concept::Condition,
];

const MAX_ROUNDS: usize = 16;

pub fn inside_reference(concept: Concept, segments: &SegmentSet, references: &[Span]) -> bool {
    let b = segments.bounds();
    REFERENCE_SENSITIVE.contains(&concept) && references.iter().any(|r| r.contains(&b) && *r != b)
}

fn drop_nested(anns: Vec<Annotation>, opts: &HeuristicOptions) -> Vec<Annotation> {
    if opts.merge_partial_overlaps {
        let mut order: Vec<usize> = (0..anns.len()).collect();
        order.sort_by_key(|&i| {
            let a = &anns[i];
            (std::cmp::Reverse(a.segments.token_count()), a.bounds().start, i)
        });
        let mut keep = vec![false; anns.len()];
        for &i in &order {
            let clash = (0..anns.len()).any(|j| {
                keep[j] && anns[j].concept == anns[i].concept && anns[j].segments.intersects(&anns[i].segments)
            });
            keep[i] = !clash;
        }
        return anns
            .into_iter()
            .zip(keep)
            .filter_map(|(a, k)| k.then_some(a))
            .collect();
    }
    let keep: Vec<bool> = (0..anns.len())
        .map(|i| {
            let a = &anns[i];
            !anns.iter().enumerate().any(|(j, b)| {
                j != i
                    && b.concept == a.concept
                    && b.segments.contains(&a.segments)
                    && (b.segments != a.segments || j < i)
            })
        })
        .collect();
    anns.into_iter()
        .zip(keep)
        .filter_map(|(a, k)| k.then_some(a))
        .collect()
}

fn drop_in_references(anns: Vec<Annotation>, references: &[Span]) -> Vec<Annotation> {
    anns.into_iter()
        .filter(|a| !inside_reference(a.concept, &a.segments, references))
        .collect()
}

fn drop_generic(anns: Vec<Annotation>) -> Vec<Annotation> {
    let keep: Vec<bool> = anns
        .iter()
        .map(|a| {
            !anns
                .iter()
                .any(|b| b.segments == a.segments && a.concept.generalizes(b.concept))
        })
        .collect();
    anns.into_iter()
        .zip(keep)
        .filter_map(|(a, k)| k.then_some(a))
        .collect()
}

/// True when `concept` (or a specialization of it) already covers `segments`,
/// or could not survive there. When partial overlaps are merged, an
/// overlapping annotation of that type is enough, since a second one would be
/// pruned.
pub fn ambiguity_satisfied(
    anns: &[Annotation],
    concept: Concept,
    segments: &SegmentSet,
    references: &[Span],
    opts: &HeuristicOptions,
) -> bool {
    inside_reference(concept, segments, references)
        || anns.iter().any(|a| {
            (a.concept == concept || concept.generalizes(a.concept))
                && if opts.merge_partial_overlaps {
                    a.segments.intersects(segments)
                } else {
                    a.segments.contains(segments)
                }
        })
}

/// For each annotation holding a marker of its own type that the lexicon also
/// lists under another phrase-level concept, the missing annotations.
pub(crate) fn ambiguous_additions(
    anns: &[Annotation],
    tokens: &[Token],
    references: &[Span],
    lex: &Lexicon,
    cache: &mut OccurrenceCache,
    opts: &HeuristicOptions,
) -> Vec<Annotation> {
    let mut out: Vec<Annotation> = Vec::new();
    for a in anns {
        if a.concept == Concept::Action || a.segments.spans().len() != 1 {
            continue;
        }
        let span = a.bounds();
        let occs: Vec<_> = cache
            .get(lex, tokens, a.concept, Scope::Full)
            .iter()
            .filter(|o| span.contains(&o.span))
            .cloned()
            .collect();
        for occ in occs {
            let Some(marker) = lex.marker_for(&occ, Scope::Full) else {
                continue;
            };
            for other in lex.also_listed_under(a.concept, marker) {
                if !other.is_phrase_level()
                    || other == Concept::Action
                    || other.generalizes(a.concept)
                    || a.concept.generalizes(other)
                {
                    continue;
                }
                if ambiguity_satisfied(anns, other, &a.segments, references, opts)
                    || ambiguity_satisfied(&out, other, &a.segments, references, opts)
                {
                    continue;
                }
                out.push(Annotation::new(other, a.segments.clone(), format!("{}+ambiguous", a.rule)));
            }
        }
    }
    out
}

fn prune(anns: Vec<Annotation>, references: &[Span], opts: &HeuristicOptions) -> Vec<Annotation> {
    drop_generic(drop_in_references(drop_nested(anns, opts), references))
}

/// Applies all four heuristics. Annotations added for ambiguous markers go
/// through the pruning steps again, until nothing changes.
pub fn apply_heuristics(
    anns: Vec<Annotation>,
    tokens: &[Token],
    references: &[Span],
    lex: &Lexicon,
    opts: &HeuristicOptions,
) -> Vec<Annotation> {
    let mut cache = OccurrenceCache::default();
    let mut anns = prune(anns, references, opts);
    for _ in 0..MAX_ROUNDS {
        let extra = ambiguous_additions(&anns, tokens, references, lex, &mut cache, opts);
        if extra.is_empty() {
            break;
        }
        anns.extend(extra);
        anns = prune(anns, references, opts);
    }
    anns
}
