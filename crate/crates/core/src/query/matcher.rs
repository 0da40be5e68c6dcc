use std::cell::RefCell;

use crate::concept::Concept;
use crate::corpus::{ConstituencyTree, NodeId, Statement, Token};
use crate::lexicon::{Lexicon, OccurrenceCache, Scope};
use crate::span::Span;

use super::pattern::{LabelTest, NodeExpr, RelOp, TreePattern};

/// One way the pattern matched: the node bound to the pattern root and the
/// captured node. `bindings` records a witness node for every positive
/// node expression, by expression id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Match {
    pub root: NodeId,
    pub target: NodeId,
    pub bindings: Vec<(usize, NodeId)>,
}

#[derive(Clone, Debug)]
struct Partial {
    capture: Option<NodeId>,
    bindings: Vec<(usize, NodeId)>,
}

/// Matching state for one statement. Marker occurrences are computed once per
/// concept and scope and shared by every pattern run through the context.
pub struct MatchContext<'a> {
    tree: &'a ConstituencyTree,
    tokens: &'a [Token],
    lex: &'a Lexicon,
    cache: RefCell<OccurrenceCache>,
}

impl<'a> MatchContext<'a> {
    pub fn new(statement: &'a Statement, lex: &'a Lexicon) -> Self {
        Self::from_parts(statement.tree(), statement.tokens(), lex)
    }

    pub fn from_parts(tree: &'a ConstituencyTree, tokens: &'a [Token], lex: &'a Lexicon) -> Self {
        MatchContext {
            tree,
            tokens,
            lex,
            cache: RefCell::new(OccurrenceCache::default()),
        }
    }

    pub fn tree(&self) -> &'a ConstituencyTree {
        self.tree
    }

    /// Spans of the `concept` markers found in the statement.
    pub fn marker_spans(&self, concept: Concept, scope: Scope<'_>) -> Vec<Span> {
        let mut cache = self.cache.borrow_mut();
        cache
            .get(self.lex, self.tokens, concept, scope)
            .iter()
            .map(|o| o.span)
            .collect()
    }

    /// True when a `concept` marker lies inside the yield of `node`.
    pub fn has_marker(&self, node: NodeId, concept: Concept, scope: Scope<'_>) -> bool {
        let y = self.tree.node_yield(node);
        let mut cache = self.cache.borrow_mut();
        cache
            .get(self.lex, self.tokens, concept, scope)
            .iter()
            .any(|o| y.contains(&o.span))
    }

    fn test(&self, test: &LabelTest, node: NodeId, scope: Scope<'_>) -> bool {
        match test {
            LabelTest::Any => true,
            LabelTest::Category(c) => {
                let n = self.tree.node(node);
                !n.is_leaf() && n.label == *c
            }
            LabelTest::Marker(c) => self.has_marker(node, *c, scope),
        }
    }

    // A multi-word marker can straddle several children, so no proper
    // descendant holds it whole; a bare marker under `<<` is therefore tested
    // against the node's own yield. For single words this is the same thing.
    fn candidates(&self, op: RelOp, node: NodeId, operand: &NodeExpr) -> Vec<NodeId> {
        match op {
            RelOp::Descendant if operand.is_bare_marker() => vec![node],
            RelOp::Child => self.tree.node(node).children.clone(),
            RelOp::Descendant => self.tree.descendants(node).collect(),
            RelOp::Sister => self.tree.sisters(node).collect(),
        }
    }

    // With `first` set, stops at the first solution.
    fn solve(&self, e: &NodeExpr, node: NodeId, scope: Scope<'_>, first: bool) -> Vec<Partial> {
        if !self.test(&e.test, node, scope) {
            return Vec::new();
        }
        let mut partials = vec![Partial {
            capture: e.capture.then_some(node),
            bindings: vec![(e.id, node)],
        }];
        for r in &e.relations {
            let cands = self.candidates(r.op, node, &r.operand);
            if r.negated {
                if cands
                    .iter()
                    .any(|&c| !self.solve(&r.operand, c, scope, true).is_empty())
                {
                    return Vec::new();
                }
                continue;
            }
            if r.operand.holds_capture() && !first {
                let mut subs: Vec<Partial> = Vec::new();
                for &c in &cands {
                    for s in self.solve(&r.operand, c, scope, false) {
                        if !subs.iter().any(|x| x.capture == s.capture) {
                            subs.push(s);
                        }
                    }
                }
                if subs.is_empty() {
                    return Vec::new();
                }
                // Only one relation can hold the capture, so `partials` has one element here.
                let base = partials.pop().expect("single partial");
                partials = subs
                    .into_iter()
                    .map(|s| {
                        let mut b = base.bindings.clone();
                        b.extend(s.bindings);
                        Partial {
                            capture: s.capture,
                            bindings: b,
                        }
                    })
                    .collect();
            } else {
                let witness = cands.iter().find_map(|&c| {
                    self.solve(&r.operand, c, scope, true).into_iter().next()
                });
                let Some(w) = witness else {
                    return Vec::new();
                };
                for p in &mut partials {
                    p.bindings.extend(w.bindings.iter().copied());
                    if p.capture.is_none() {
                        p.capture = w.capture;
                    }
                }
            }
        }
        partials
    }

    /// All matches, ordered by target then root in document order.
    pub fn find(&self, pattern: &TreePattern, scope: Scope<'_>) -> Vec<Match> {
        let mut out = Vec::new();
        for node in 0..self.tree.len() {
            for p in self.solve(pattern.root(), node, scope, false) {
                let mut bindings = p.bindings;
                bindings.sort_unstable();
                out.push(Match {
                    root: node,
                    target: p.capture.unwrap_or(node),
                    bindings,
                });
            }
        }
        out.sort_by_key(|m| (m.target, m.root));
        out
    }

    /// Nodes the pattern root can bind to, without enumerating captures.
    pub fn roots(&self, pattern: &TreePattern, scope: Scope<'_>) -> Vec<NodeId> {
        (0..self.tree.len())
            .filter(|&n| !self.solve(pattern.root(), n, scope, true).is_empty())
            .collect()
    }
}

/// Matches `pattern` against one statement using full marker lists.
pub fn find_matches(pattern: &TreePattern, statement: &Statement, lex: &Lexicon) -> Vec<Match> {
    MatchContext::new(statement, lex).find(pattern, Scope::Full)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_bracketed_tree, DependencyGraph, DepLabel};
    use crate::query::compile_pattern;
    use crate::ValidationMode;

    fn statement(tree: &str) -> Statement {
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
        let n = tokens.len();
        let heads = (0..n).map(|i| if i == 0 { None } else { Some(0) }).collect();
        let labels = (0..n).map(|_| DepLabel::Dep).collect();
        let deps = DependencyGraph::new(heads, labels).unwrap();
        Statement::new("s", "", tokens, tree, deps, Vec::new()).unwrap()
    }

    fn lex() -> Lexicon {
        Lexicon::from_files(
            [
                ("condition.txt", "provided that\nif"),
                ("time.txt", "within\nday"),
                ("actor.txt", "authority"),
            ],
            ValidationMode::Strict,
        )
        .unwrap()
    }

    const WITHIN: &str = "(PP (P Within) (NP (D the) (N limits)))";

    #[test]
    fn marker_inside_pp() {
        let s = statement(WITHIN);
        let l = lex();
        let m = find_matches(&compile_pattern("PP << marker:time").unwrap(), &s, &l);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].root, 0);
        assert_eq!(m[0].target, 0);
        assert!(find_matches(&compile_pattern("PP << marker:condition").unwrap(), &s, &l).is_empty());
        assert!(find_matches(&compile_pattern("NP << marker:time").unwrap(), &s, &l).is_empty());
    }

    #[test]
    fn capture_below_root() {
        let s = statement(WITHIN);
        let l = lex();
        let m = find_matches(&compile_pattern("PP < (P < marker:time) $ NP=t").unwrap(), &s, &l);
        assert!(m.is_empty(), "PP has no sister");
        let m = find_matches(&compile_pattern("P $ NP=t").unwrap(), &s, &l);
        assert_eq!(m.len(), 1);
        assert_eq!(s.tree().node(m[0].target).label, "NP");
        assert_eq!(s.tree().node(m[0].root).label, "P");
    }

    #[test]
    fn negation_and_wildcard() {
        let s = statement("(S (NP (N authority)) (VP (V acts) (NP (N today))))");
        let l = lex();
        let p = compile_pattern("NP !<< marker:actor").unwrap();
        let m = find_matches(&p, &s, &l);
        assert_eq!(m.len(), 1);
        assert_eq!(s.tree().node(m[0].root).label, "NP");
        assert_eq!(s.tree().node_yield(m[0].root), Span::new(2, 3));
        let any = find_matches(&compile_pattern("__ < NP").unwrap(), &s, &l);
        assert_eq!(any.len(), 2);
    }

    #[test]
    fn one_match_per_capture() {
        let s = statement("(S (NP (N a)) (NP (N b)) (NP (N c)))");
        let l = lex();
        let m = find_matches(&compile_pattern("S < NP=t").unwrap(), &s, &l);
        assert_eq!(m.iter().map(|m| m.target).collect::<Vec<_>>(), [1, 4, 7]);
        assert!(m.iter().all(|m| m.root == 0));
    }

    #[test]
    fn words_are_not_categories() {
        let s = statement("(S (NP NP))");
        let l = lex();
        assert_eq!(find_matches(&compile_pattern("NP").unwrap(), &s, &l).len(), 1);
    }
}
