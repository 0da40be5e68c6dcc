//! The annotation pipeline: phrase rules, the action residual, heuristics and
//! statement classification.

mod annotation;
mod heuristics;
mod rules;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::concept::Concept;
use crate::corpus::{DepLabel, DependencyGraph, Statement};
use crate::lexicon::{Lexicon, Scope};
use crate::query::{MatchContext, TreePattern};
use crate::span::{SegmentSet, Span};

pub use annotation::{
    load_annotated, parse_annotated, to_jsonl, AnnotatedStatement, Annotation, AnnotationFileError,
};
pub use heuristics::{
    ambiguity_satisfied, apply_heuristics, inside_reference, HeuristicOptions, REFERENCE_SENSITIVE,
};
pub use rules::{
    DepCondition, Phase, PhraseRule, RuleError, RuleSet, StatementRule, StatementTerm, Voice,
};

/// Concepts carved out of action spans.
pub const PRE_ACTION: [Concept; 4] = [
    Concept::Modality,
    Concept::Condition,
    Concept::Exception,
    Concept::Reason,
];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineOptions {
    pub heuristics: HeuristicOptions,
}

/// The token representing a constituent: the one whose dependency head lies
/// outside `span` (leftmost if several, `span.start` if none).
pub fn head_token(deps: &DependencyGraph, span: Span) -> usize {
    (span.start..span.end)
        .find(|&t| deps.head(t).is_none_or(|h| !span.contains_index(h)))
        .unwrap_or(span.start)
}

/// Label and governor of `token`, looking through coordination: a second
/// conjunct takes the attachment of the first.
pub fn attachment(deps: &DependencyGraph, token: usize) -> (DepLabel, Option<usize>) {
    let mut t = token;
    for _ in 0..deps.len() {
        if !deps.label(t).is_coordination() {
            break;
        }
        match deps.head(t) {
            Some(h) => t = h,
            None => break,
        }
    }
    (deps.label(t), deps.head(t))
}

fn dependency_ok(rule: &PhraseRule, deps: &DependencyGraph, span: Span) -> bool {
    if let Some(v) = rule.voice {
        if deps.is_passive() != (v == Voice::Passive) {
            return false;
        }
    }
    let Some(cond) = rule.dep else {
        return true;
    };
    let (label, governor) = attachment(deps, head_token(deps, span));
    match cond {
        DepCondition::Subject => label == DepLabel::Suj && governor == Some(deps.root()),
        DepCondition::Object => label.is_object(),
    }
}

fn scope_of(rule: &PhraseRule) -> Scope<'_> {
    rule.scope.as_deref().map_or(Scope::Full, Scope::Rule)
}

fn target_spans(ctx: &MatchContext<'_>, pattern: &TreePattern, scope: Scope<'_>) -> Vec<Span> {
    let mut spans: Vec<Span> = ctx
        .find(pattern, scope)
        .into_iter()
        .map(|m| ctx.tree().node_yield(m.target))
        .collect();
    spans.sort();
    spans.dedup();
    spans
}

/// `span` minus every pre-action segment, or `None` when nothing is left.
pub fn action_residual(span: Span, existing: &[Annotation]) -> Option<SegmentSet> {
    let removed: Vec<Span> = existing
        .iter()
        .filter(|a| PRE_ACTION.contains(&a.concept))
        .flat_map(|a| a.segments.spans().iter().copied())
        .collect();
    let rest = SegmentSet::subtract(span, &removed);
    (!rest.is_empty()).then_some(rest)
}

/// One action annotation per VP, with pre-action spans cut out.
pub fn annotate_action(s: &Statement, existing: &[Annotation]) -> Vec<Annotation> {
    let tree = s.tree();
    let mut spans: Vec<Span> = (0..tree.len())
        .filter(|&n| !tree.node(n).is_leaf() && tree.node(n).label == "VP")
        .map(|n| tree.node_yield(n))
        .collect();
    spans.sort();
    spans.dedup();
    spans
        .into_iter()
        .filter_map(|sp| action_residual(sp, existing))
        .map(|segs| Annotation::new(Concept::Action, segs, "action"))
        .collect()
}

fn run_phase(
    ctx: &MatchContext<'_>,
    s: &Statement,
    rules: &RuleSet,
    phase: Phase,
    out: &mut Vec<Annotation>,
) {
    for rule in rules.phase(phase) {
        let spans = target_spans(ctx, &rule.pattern, scope_of(rule));
        for sp in spans {
            match phase {
                Phase::Action => {
                    if let Some(segs) = action_residual(sp, out) {
                        out.push(Annotation::new(rule.concept, segs, &rule.id));
                    }
                }
                Phase::Fallback => {
                    let segs = SegmentSet::single(sp);
                    if !out.iter().any(|a| a.segments == segs) {
                        out.push(Annotation::new(rule.concept, segs, &rule.id));
                    }
                }
                _ => {
                    if dependency_ok(rule, s.deps(), sp) {
                        out.push(Annotation::span(rule.concept, sp, &rule.id));
                    }
                }
            }
        }
    }
}

/// Raw rule output, before heuristics: pre-action rules, the action rule,
/// the remaining rules, then fallback rules.
pub fn annotate_phrases(s: &Statement, rules: &RuleSet, lex: &Lexicon) -> Vec<Annotation> {
    let ctx = MatchContext::new(s, lex);
    let mut out = Vec::new();
    for phase in [Phase::PreAction, Phase::Action, Phase::Main] {
        run_phase(&ctx, s, rules, phase, &mut out);
    }
    // Fallbacks compare against every earlier annotation, including the
    // externally supplied references.
    out.extend(reference_annotations(s));
    run_phase(&ctx, s, rules, Phase::Fallback, &mut out);
    out
}

fn reference_annotations(s: &Statement) -> Vec<Annotation> {
    s.references()
        .iter()
        .map(|&r| Annotation::span(Concept::Reference, r, "reference"))
        .collect()
}

/// Marker spans per concept. For statement-level concepts an occurrence
/// nested in a longer occurrence of another statement-level concept is not
/// counted, so "can not" reads as a prohibition and not as "can".
fn statement_markers(s: &Statement, lex: &Lexicon, rules: &RuleSet) -> HashMap<Concept, Vec<Span>> {
    let mut wanted: Vec<Concept> = Concept::STATEMENT_LEVEL.to_vec();
    for r in rules.statement_rules() {
        for t in &r.terms {
            match t {
                StatementTerm::Marker(c) | StatementTerm::AnnotationWithMarker(_, c) => wanted.push(*c),
                StatementTerm::Annotation(_) => {}
            }
        }
    }
    wanted.sort();
    wanted.dedup();
    let raw: HashMap<Concept, Vec<Span>> = wanted
        .iter()
        .map(|&c| {
            let spans = lex
                .find_marker_occurrences(c, s.tokens(), Scope::Full)
                .into_iter()
                .map(|o| o.span)
                .collect();
            (c, spans)
        })
        .collect();
    raw.iter()
        .map(|(&c, spans)| {
            if !c.is_statement_level() {
                return (c, spans.clone());
            }
            let kept = spans
                .iter()
                .copied()
                .filter(|sp| {
                    !raw.iter().any(|(&o, others)| {
                        o != c
                            && o.is_statement_level()
                            && others.iter().any(|x| x.contains(sp) && x.len() > sp.len())
                    })
                })
                .collect();
            (c, kept)
        })
        .collect()
}

/// First statement rule (by priority) with a satisfied term; obligation when
/// none fires.
pub fn classify_statement(
    s: &Statement,
    anns: &[Annotation],
    rules: &RuleSet,
    lex: &Lexicon,
) -> Concept {
    if rules.statement_rules().is_empty() {
        return Concept::Obligation;
    }
    let markers = statement_markers(s, lex, rules);
    let spans = |c: Concept| markers.get(&c).map_or(&[][..], Vec::as_slice);
    let holds = |t: &StatementTerm| match *t {
        StatementTerm::Annotation(c) => anns.iter().any(|a| a.concept == c),
        StatementTerm::Marker(c) => !spans(c).is_empty(),
        StatementTerm::AnnotationWithMarker(a, m) => anns.iter().any(|x| {
            x.concept == a
                && spans(m)
                    .iter()
                    .any(|sp| x.segments.spans().iter().any(|seg| seg.contains(sp)))
        }),
    };
    rules
        .statement_rules()
        .iter()
        .find(|r| r.terms.iter().any(holds))
        .map_or(Concept::Obligation, |r| r.concept)
}

/// Rules, lexicon and options shared by every statement.
#[derive(Clone, Debug)]
pub struct Engine {
    rules: RuleSet,
    lexicon: Lexicon,
    options: EngineOptions,
}

impl Engine {
    pub fn new(rules: RuleSet, lexicon: Lexicon, options: EngineOptions) -> Self {
        Engine {
            rules,
            lexicon,
            options,
        }
    }

    /// Shipped rules and lexicon with default options.
    pub fn builtin() -> Self {
        Self::new(RuleSet::builtin(), Lexicon::builtin(), EngineOptions::default())
    }

    pub fn rules(&self) -> &RuleSet {
        &self.rules
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn options(&self) -> &EngineOptions {
        &self.options
    }

    /// Final phrase annotations of `s`, after heuristics.
    pub fn phrase_annotations(&self, s: &Statement) -> Vec<Annotation> {
        let raw = annotate_phrases(s, &self.rules, &self.lexicon);
        apply_heuristics(raw, s.tokens(), s.references(), &self.lexicon, &self.options.heuristics)
    }

    pub fn annotate(&self, s: &Statement) -> AnnotatedStatement {
        let annotations = self.phrase_annotations(s);
        let statement_type = classify_statement(s, &annotations, &self.rules, &self.lexicon);
        let mut out = AnnotatedStatement {
            id: s.id().to_string(),
            statement_type,
            annotations,
        };
        out.canonicalize();
        out.fill_chars(s);
        out
    }

    /// Annotates every statement on `workers` threads (0 = all cores). The
    /// result is sorted by statement id and independent of `workers`.
    pub fn annotate_all(&self, statements: &[Statement], workers: usize) -> Vec<AnnotatedStatement> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("thread pool");
        let mut out: Vec<AnnotatedStatement> =
            pool.install(|| statements.par_iter().map(|s| self.annotate(s)).collect());
        out.sort_by(|a, b| a.id.cmp(&b.id));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_bracketed_tree;
    use crate::corpus::Token;
    use crate::ValidationMode;

    // Tokens get the dependency structure given as (head, label); head None is the root.
    fn statement(tree: &str, deps: &[(Option<usize>, DepLabel)]) -> Statement {
        let tree = parse_bracketed_tree(tree).unwrap();
        let tokens: Vec<Token> = tree
            .words()
            .enumerate()
            .map(|(i, w)| Token {
                index: i,
                surface: w.to_string(),
                lemma: None,
                pos: "X".into(),
            })
            .collect();
        let graph = DependencyGraph::new(
            deps.iter().map(|d| d.0).collect(),
            deps.iter().map(|d| d.1).collect(),
        )
        .unwrap();
        Statement::new("t", "", tokens, tree, graph, Vec::new()).unwrap()
    }

    fn flat(n: usize, root: usize) -> Vec<(Option<usize>, DepLabel)> {
        (0..n)
            .map(|i| if i == root { (None, DepLabel::Root) } else { (Some(root), DepLabel::Dep) })
            .collect()
    }

    #[test]
    fn head_token_is_outward_attached() {
        // the municipal authorities regulate
        let deps = DependencyGraph::new(
            vec![Some(2), Some(2), Some(3), None],
            vec![DepLabel::Det, DepLabel::Mod, DepLabel::Suj, DepLabel::Root],
        )
        .unwrap();
        assert_eq!(head_token(&deps, Span::new(0, 3)), 2);
        assert_eq!(head_token(&deps, Span::new(0, 4)), 3);
    }

    #[test]
    fn coordination_inherits_attachment() {
        // judge and prosecutor decide
        let deps = DependencyGraph::new(
            vec![Some(3), Some(0), Some(1), None],
            vec![DepLabel::Suj, DepLabel::Coord, DepLabel::DepCoord, DepLabel::Root],
        )
        .unwrap();
        assert_eq!(attachment(&deps, 2), (DepLabel::Suj, Some(3)));
    }

    #[test]
    fn action_with_holes() {
        let s = statement(
            "(S (VP (V a) (VN (V may)) (V c) (V d) (PP (P if) (N e)) (V f)))",
            &flat(7, 0),
        );
        let existing = vec![
            Annotation::span(Concept::Modality, Span::new(1, 2), "m"),
            Annotation::span(Concept::Condition, Span::new(4, 6), "c"),
            Annotation::span(Concept::Time, Span::new(2, 3), "t"),
        ];
        let acts = annotate_action(&s, &existing);
        assert_eq!(acts.len(), 1);
        assert_eq!(
            acts[0].segments.spans(),
            &[Span::new(0, 1), Span::new(2, 4), Span::new(6, 7)]
        );
    }

    #[test]
    fn action_fully_covered_is_dropped() {
        let s = statement("(S (VP (V a) (V b)))", &flat(2, 0));
        let existing = vec![Annotation::span(Concept::Condition, Span::new(0, 2), "c")];
        assert!(annotate_action(&s, &existing).is_empty());
        let acts = annotate_action(&s, &[]);
        assert_eq!(acts[0].segments, SegmentSet::single(Span::new(0, 2)));
    }

    #[test]
    fn default_artifact() {
        let s = statement("(S (NP (D the) (A blue) (N cover)))", &flat(3, 2));
        let rules = RuleSet::builtin();
        let anns = annotate_phrases(&s, &rules, &Lexicon::builtin());
        assert_eq!(anns.len(), 1);
        assert_eq!(anns[0].concept, Concept::Artifact);
        assert_eq!(anns[0].rule, "artifact.default");
    }

    #[test]
    fn empty_rules() {
        let s = statement("(S (NP (D the) (A blue) (N cover)))", &flat(3, 2));
        let e = Engine::new(RuleSet::default(), Lexicon::builtin(), EngineOptions::default());
        let out = e.annotate(&s);
        assert!(out.annotations.is_empty());
        assert_eq!(out.statement_type, Concept::Obligation);
    }

    #[test]
    fn statement_priorities() {
        let lex = Lexicon::builtin();
        let rules = RuleSet::builtin();
        let s = statement("(S (NP (N x)) (VN (V may)) (VP (V pay) (NP (N fines))))", &flat(4, 2));
        let modality = Annotation::span(Concept::Modality, Span::new(1, 2), "m");
        assert_eq!(classify_statement(&s, std::slice::from_ref(&modality), &rules, &lex), Concept::Permission);
        let sanction = Annotation::span(Concept::Sanction, Span::new(3, 4), "s");
        assert_eq!(classify_statement(&s, &[modality, sanction], &rules, &lex), Concept::Penalty);
        assert_eq!(classify_statement(&s, &[], &rules, &lex), Concept::Obligation);
    }

    #[test]
    fn longer_statement_marker_wins() {
        let lex = Lexicon::from_files(
            [("permission.txt", "can"), ("prohibition.txt", "can not")],
            ValidationMode::Strict,
        )
        .unwrap();
        let rules = RuleSet::parse(
            "statement permission priority=1 :: annotation:modality < marker:permission\n\
             statement prohibition priority=2 :: annotation:modality < marker:prohibition",
        )
        .unwrap();
        let s = statement("(S (NP (N x)) (VN (V can) (ADV not)) (VP (V park)))", &flat(4, 3));
        let modality = Annotation::span(Concept::Modality, Span::new(1, 3), "m");
        assert_eq!(classify_statement(&s, &[modality], &rules, &lex), Concept::Prohibition);
    }
}
