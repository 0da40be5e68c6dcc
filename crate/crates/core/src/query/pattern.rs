//! Compiler for the tree-pattern language.
//!
//! ```text
//! pattern   := nodeexpr
//! nodeexpr  := labeltest capture? relation*
//! labeltest := IDENT | "__" | "marker:" IDENT
//! capture   := "=t"
//! relation  := "!"? relop operand ("&" "!"? relop operand)*
//! relop     := "<" | "<<" | "$"
//! operand   := labeltest capture? | "(" nodeexpr ")"
//! ```
//!
//! Relations following a node expression all constrain that node, so
//! `PP < P $ NP` reads "a PP with a P child and an NP sister".

use std::fmt;

use crate::concept::Concept;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LabelTest {
    Category(String),
    Any,
    Marker(Concept),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RelOp {
    /// `<`: immediate dominance.
    Child,
    /// `<<`: dominance.
    Descendant,
    /// `$`: sisterhood, either side.
    Sister,
}

impl RelOp {
    pub fn symbol(self) -> &'static str {
        match self {
            RelOp::Child => "<",
            RelOp::Descendant => "<<",
            RelOp::Sister => "$",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    pub negated: bool,
    pub op: RelOp,
    pub operand: NodeExpr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeExpr {
    /// Pre-order position within the pattern.
    pub id: usize,
    pub test: LabelTest,
    pub capture: bool,
    pub relations: Vec<Relation>,
}

impl NodeExpr {
    /// A marker test with no relations of its own.
    pub fn is_bare_marker(&self) -> bool {
        matches!(self.test, LabelTest::Marker(_)) && self.relations.is_empty()
    }

    pub fn holds_capture(&self) -> bool {
        self.capture || self.relations.iter().any(|r| r.operand.holds_capture())
    }

    fn walk<'a>(&'a self, out: &mut Vec<&'a NodeExpr>) {
        out.push(self);
        for r in &self.relations {
            r.operand.walk(out);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreePattern {
    source: String,
    root: NodeExpr,
    capture: usize,
    expr_count: usize,
}

impl TreePattern {
    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn root(&self) -> &NodeExpr {
        &self.root
    }

    /// Id of the captured node expression.
    pub fn capture_id(&self) -> usize {
        self.capture
    }

    pub fn expr_count(&self) -> usize {
        self.expr_count
    }

    pub fn exprs(&self) -> Vec<&NodeExpr> {
        let mut out = Vec::new();
        self.root.walk(&mut out);
        out
    }

    /// Concepts referenced by `marker:` tests.
    pub fn marker_concepts(&self) -> Vec<Concept> {
        let mut out: Vec<Concept> = self
            .exprs()
            .iter()
            .filter_map(|e| match e.test {
                LabelTest::Marker(c) => Some(c),
                _ => None,
            })
            .collect();
        out.sort();
        out.dedup();
        out
    }
}

impl fmt::Display for TreePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PatternError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("second capture at {pos}; a pattern has exactly one capture")]
    MultipleCaptures { pos: usize },
    #[error("unsupported relation operator `{op}` at {pos}")]
    UnknownRelationOperator { pos: usize, op: String },
}

impl PatternError {
    pub fn position(&self) -> usize {
        match self {
            PatternError::Syntax { pos, .. }
            | PatternError::MultipleCaptures { pos }
            | PatternError::UnknownRelationOperator { pos, .. } => *pos,
        }
    }

    /// The source line with a caret under the error position.
    pub fn render(&self, source: &str) -> String {
        let col = source[..self.position().min(source.len())].chars().count();
        format!("{}\n{}^ {}", source, " ".repeat(col), self)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Wildcard,
    Marker(String),
    Capture,
    Bang,
    Rel(RelOp),
    Amp,
    LParen,
    RParen,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{}`", s),
            Tok::Wildcard => "`__`".into(),
            Tok::Marker(c) => format!("`marker:{}`", c),
            Tok::Capture => "`=t`".into(),
            Tok::Bang => "`!`".into(),
            Tok::Rel(op) => format!("`{}`", op.symbol()),
            Tok::Amp => "`&`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
        }
    }
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '-'
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, PatternError> {
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let at = |i: usize| chars.get(i).map(|&(_, c)| c);
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        let unknown = |len: usize| {
            let end = chars.get(i + len).map_or(src.len(), |&(p, _)| p);
            PatternError::UnknownRelationOperator {
                pos,
                op: src[pos..end].to_string(),
            }
        };
        match c {
            _ if c.is_whitespace() => i += 1,
            '(' => {
                out.push((pos, Tok::LParen));
                i += 1;
            }
            ')' => {
                out.push((pos, Tok::RParen));
                i += 1;
            }
            '&' => {
                out.push((pos, Tok::Amp));
                i += 1;
            }
            '!' => {
                out.push((pos, Tok::Bang));
                i += 1;
            }
            '<' => {
                let (op, len) = if at(i + 1) == Some('<') {
                    (RelOp::Descendant, 2)
                } else {
                    (RelOp::Child, 1)
                };
                // Tregex variants such as <-, <,, <+(..), <#, <<: are not supported.
                if let Some(n) = at(i + len) {
                    if "-+,#:`'=".contains(n) || n.is_ascii_digit() {
                        return Err(unknown(len + 1));
                    }
                }
                out.push((pos, Tok::Rel(op)));
                i += len;
            }
            '$' => {
                if let Some(n) = at(i + 1) {
                    if "+-.,;".contains(n) {
                        let mut len = 2;
                        while at(i + len).is_some_and(|c| "+-.,;".contains(c)) {
                            len += 1;
                        }
                        return Err(unknown(len));
                    }
                }
                out.push((pos, Tok::Rel(RelOp::Sister)));
                i += 1;
            }
            '>' | '.' | ',' | '~' | ':' | '|' => {
                let mut len = 1;
                while at(i + len).is_some_and(|n| "><.,+-~:|".contains(n)) {
                    len += 1;
                }
                return Err(unknown(len));
            }
            '=' => {
                if at(i + 1) == Some('t') && !at(i + 2).is_some_and(is_ident_char) {
                    out.push((pos, Tok::Capture));
                    i += 2;
                } else {
                    return Err(PatternError::Syntax {
                        pos,
                        msg: "the only capture name is `=t`".into(),
                    });
                }
            }
            _ if is_ident_char(c) => {
                while at(i).is_some_and(is_ident_char) {
                    i += 1;
                }
                let end = chars.get(i).map_or(src.len(), |&(p, _)| p);
                let word = &src[pos..end];
                if word == "marker" && at(i) == Some(':') {
                    i += 1;
                    let cstart = i;
                    while at(i).is_some_and(is_ident_char) {
                        i += 1;
                    }
                    if i == cstart {
                        return Err(PatternError::Syntax {
                            pos,
                            msg: "`marker:` needs a concept name".into(),
                        });
                    }
                    let cpos = chars[cstart].0;
                    let cend = chars.get(i).map_or(src.len(), |&(p, _)| p);
                    out.push((pos, Tok::Marker(src[cpos..cend].to_string())));
                } else if word == "__" {
                    out.push((pos, Tok::Wildcard));
                } else if word.starts_with('-') {
                    return Err(PatternError::Syntax {
                        pos,
                        msg: format!("`{}` is not a valid label", word),
                    });
                } else {
                    out.push((pos, Tok::Ident(word.to_string())));
                }
            }
            _ => {
                return Err(PatternError::Syntax {
                    pos,
                    msg: format!("unexpected character `{}`", c),
                })
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    src: &'a str,
    next_id: usize,
    capture: Option<(usize, usize)>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map_or(self.src.len(), |(p, _)| *p)
    }

    fn syntax<T>(&self, msg: impl Into<String>) -> Result<T, PatternError> {
        Err(PatternError::Syntax {
            pos: self.here(),
            msg: msg.into(),
        })
    }

    fn found(&self) -> String {
        self.peek()
            .map_or_else(|| "end of pattern".to_string(), Tok::describe)
    }

    fn label_test(&mut self) -> Result<LabelTest, PatternError> {
        let test = match self.peek() {
            Some(Tok::Ident(s)) => LabelTest::Category(s.clone()),
            Some(Tok::Wildcard) => LabelTest::Any,
            Some(Tok::Marker(c)) => match c.parse::<Concept>() {
                Ok(c) => LabelTest::Marker(c),
                Err(_) => return self.syntax(format!("unknown concept `{}`", c)),
            },
            _ => return self.syntax(format!("expected a node label, found {}", self.found())),
        };
        self.pos += 1;
        Ok(test)
    }

    fn capture_mark(&mut self, id: usize, negated: bool) -> Result<bool, PatternError> {
        if self.peek() != Some(&Tok::Capture) {
            return Ok(false);
        }
        let at = self.here();
        if negated {
            return self.syntax("a capture cannot sit under a negated relation");
        }
        if self.capture.is_some() {
            return Err(PatternError::MultipleCaptures { pos: at });
        }
        self.capture = Some((id, at));
        self.pos += 1;
        Ok(true)
    }

    fn node_expr(&mut self, negated: bool) -> Result<NodeExpr, PatternError> {
        let id = self.next_id;
        self.next_id += 1;
        let test = self.label_test()?;
        let capture = self.capture_mark(id, negated)?;
        let mut relations = Vec::new();
        loop {
            match self.peek() {
                Some(Tok::Amp) => {
                    if relations.is_empty() {
                        return self.syntax("`&` must join two relations");
                    }
                    self.pos += 1;
                    if !matches!(self.peek(), Some(Tok::Bang) | Some(Tok::Rel(_))) {
                        return self.syntax(format!("expected a relation after `&`, found {}", self.found()));
                    }
                }
                Some(Tok::Bang) | Some(Tok::Rel(_)) => {}
                _ => break,
            }
            let neg = if self.peek() == Some(&Tok::Bang) {
                self.pos += 1;
                true
            } else {
                false
            };
            let op = match self.peek() {
                Some(Tok::Rel(op)) => *op,
                _ => return self.syntax(format!("expected `<`, `<<` or `$`, found {}", self.found())),
            };
            self.pos += 1;
            let operand = self.operand(negated || neg)?;
            relations.push(Relation {
                negated: neg,
                op,
                operand,
            });
        }
        Ok(NodeExpr {
            id,
            test,
            capture,
            relations,
        })
    }

    fn operand(&mut self, negated: bool) -> Result<NodeExpr, PatternError> {
        match self.peek() {
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.node_expr(negated)?;
                if self.peek() != Some(&Tok::RParen) {
                    return self.syntax(format!("expected `)`, found {}", self.found()));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(Tok::Ident(_)) | Some(Tok::Wildcard) | Some(Tok::Marker(_)) => {
                // A bare operand takes no relations, but may carry the capture.
                let id = self.next_id;
                self.next_id += 1;
                let test = self.label_test()?;
                let capture = self.capture_mark(id, negated)?;
                Ok(NodeExpr {
                    id,
                    test,
                    capture,
                    relations: Vec::new(),
                })
            }
            _ => self.syntax(format!("expected a node or `(`, found {}", self.found())),
        }
    }
}

/// Compiles pattern text. The capture is the node marked `=t`, or the root.
pub fn compile_pattern(source: &str) -> Result<TreePattern, PatternError> {
    let toks = lex(source)?;
    let mut p = Parser {
        toks,
        pos: 0,
        src: source,
        next_id: 0,
        capture: None,
    };
    if p.peek().is_none() {
        return p.syntax("empty pattern");
    }
    let root = p.node_expr(false)?;
    if p.peek().is_some() {
        return p.syntax(format!("unexpected {}", p.found()));
    }
    let capture = p.capture.map_or(0, |(id, _)| id);
    Ok(TreePattern {
        source: source.trim().to_string(),
        root,
        capture,
        expr_count: p.next_id,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pp_contains_condition_marker() {
        let p = compile_pattern("PP << marker:condition").unwrap();
        assert_eq!(p.capture_id(), 0);
        assert_eq!(p.root().test, LabelTest::Category("PP".into()));
        let r = &p.root().relations[0];
        assert_eq!(r.op, RelOp::Descendant);
        assert!(!r.negated);
        assert_eq!(r.operand.test, LabelTest::Marker(Concept::Condition));
    }

    #[test]
    fn nested_negations() {
        let p = compile_pattern("NP < (VPinf !<< marker:exception & !<< marker:reason)").unwrap();
        let child = &p.root().relations[0].operand;
        assert_eq!(child.test, LabelTest::Category("VPinf".into()));
        assert_eq!(child.relations.len(), 2);
        assert!(child.relations.iter().all(|r| r.negated && r.op == RelOp::Descendant));
        assert_eq!(p.expr_count(), 4);
    }

    #[test]
    fn juxtaposed_relations_bind_to_head() {
        let p = compile_pattern("PP < P $ (NP=t < marker:actor)").unwrap();
        assert_eq!(p.root().relations.len(), 2);
        assert_eq!(p.root().relations[1].op, RelOp::Sister);
        assert_eq!(p.capture_id(), 2);
    }

    #[test]
    fn syntax_errors() {
        assert!(matches!(
            compile_pattern("PP << << NP"),
            Err(PatternError::Syntax { pos: 6, .. })
        ));
        assert!(matches!(compile_pattern(""), Err(PatternError::Syntax { .. })));
        assert!(matches!(compile_pattern("PP < (NP"), Err(PatternError::Syntax { .. })));
        assert!(matches!(compile_pattern("PP & < NP"), Err(PatternError::Syntax { .. })));
        assert!(matches!(compile_pattern("PP < marker:gizmo"), Err(PatternError::Syntax { .. })));
        assert!(matches!(compile_pattern("PP < (NP) NP"), Err(PatternError::Syntax { .. })));
        assert!(matches!(compile_pattern("NP !< (PP=t)"), Err(PatternError::Syntax { .. })));
        assert!(matches!(compile_pattern("NP !< PP=t"), Err(PatternError::Syntax { .. })));
    }

    #[test]
    fn capture_errors() {
        assert_eq!(
            compile_pattern("NP=t < (PP=t)"),
            Err(PatternError::MultipleCaptures { pos: 10 })
        );
        assert!(matches!(compile_pattern("NP=x"), Err(PatternError::Syntax { .. })));
    }

    #[test]
    fn unsupported_operators() {
        for (src, op) in [
            ("NP > PP", ">"),
            ("NP >> PP", ">>"),
            ("NP $+ PP", "$+"),
            ("NP $++ PP", "$++"),
            ("NP <- PP", "<-"),
            ("NP <<, PP", "<<,"),
            ("NP .. PP", ".."),
        ] {
            match compile_pattern(src) {
                Err(PatternError::UnknownRelationOperator { op: got, pos }) => {
                    assert_eq!(got, op, "{}", src);
                    assert_eq!(pos, 3);
                }
                other => panic!("{}: {:?}", src, other),
            }
        }
    }

    #[test]
    fn caret_rendering() {
        let err = compile_pattern("PP << << NP").unwrap_err();
        let rendered = err.render("PP << << NP");
        assert!(rendered.starts_with("PP << << NP\n      ^"));
    }
}
