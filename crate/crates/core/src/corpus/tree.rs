//! Constituency trees read from bracketed (Penn-style) notation.
//!
//! Nodes live in an arena in pre-order, so a node id is also its document
//! position and the subtree of `n` occupies ids `n..subtree_end(n)`. Words are
//! leaf nodes whose label is the word itself; each carries its token index.

use std::fmt::Write;

use crate::span::Span;

pub type NodeId = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub label: String,
    pub children: Vec<NodeId>,
    pub parent: Option<NodeId>,
    /// Token index for leaves.
    pub token: Option<usize>,
    span: Span,
    subtree_end: NodeId,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        self.token.is_some()
    }

    pub fn span(&self) -> Span {
        self.span
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstituencyTree {
    nodes: Vec<Node>,
    leaves: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TreeError {
    #[error("unbalanced brackets at byte {pos}")]
    UnbalancedBrackets { pos: usize },
    #[error("empty node label at byte {pos}")]
    EmptyLabel { pos: usize },
    #[error("empty tree")]
    EmptyTree,
    #[error("node `{label}` at byte {pos} has no children")]
    NoChildren { label: String, pos: usize },
    #[error("unexpected input after the tree at byte {pos}")]
    TrailingInput { pos: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Lexeme<'a> {
    Open,
    Close,
    Atom(&'a str),
}

fn lex(src: &str) -> Vec<(usize, Lexeme<'_>)> {
    let mut out = Vec::new();
    let bytes = src.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'(' => {
                out.push((i, Lexeme::Open));
                i += 1;
            }
            b')' => {
                out.push((i, Lexeme::Close));
                i += 1;
            }
            c if c.is_ascii_whitespace() => i += 1,
            _ => {
                let start = i;
                while i < bytes.len()
                    && !matches!(bytes[i], b'(' | b')')
                    && !bytes[i].is_ascii_whitespace()
                {
                    i += 1;
                }
                out.push((start, Lexeme::Atom(&src[start..i])));
            }
        }
    }
    out
}

struct Builder<'a> {
    lexemes: Vec<(usize, Lexeme<'a>)>,
    pos: usize,
    src_len: usize,
    nodes: Vec<Node>,
    leaves: Vec<NodeId>,
}

impl<'a> Builder<'a> {
    fn peek(&self) -> Option<(usize, Lexeme<'a>)> {
        self.lexemes.get(self.pos).copied()
    }

    fn push(&mut self, label: &str, parent: Option<NodeId>, token: Option<usize>) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(Node {
            label: label.to_string(),
            children: Vec::new(),
            parent,
            token,
            span: Span::new(0, 0),
            subtree_end: id + 1,
        });
        if let Some(p) = parent {
            self.nodes[p].children.push(id);
        }
        id
    }

    // Called with the cursor on an Open lexeme.
    fn node(&mut self, parent: Option<NodeId>) -> Result<NodeId, TreeError> {
        let (open_pos, _) = self.peek().expect("caller checked");
        self.pos += 1;
        let label = match self.peek() {
            Some((_, Lexeme::Atom(a))) => {
                self.pos += 1;
                a
            }
            Some((p, _)) => return Err(TreeError::EmptyLabel { pos: p }),
            None => return Err(TreeError::UnbalancedBrackets { pos: self.src_len }),
        };
        let id = self.push(label, parent, None);
        loop {
            match self.peek() {
                Some((_, Lexeme::Open)) => {
                    self.node(Some(id))?;
                }
                Some((_, Lexeme::Atom(word))) => {
                    self.pos += 1;
                    let k = self.leaves.len();
                    let leaf = self.push(word, Some(id), Some(k));
                    self.leaves.push(leaf);
                }
                Some((_, Lexeme::Close)) => {
                    self.pos += 1;
                    break;
                }
                None => return Err(TreeError::UnbalancedBrackets { pos: self.src_len }),
            }
        }
        if self.nodes[id].children.is_empty() {
            return Err(TreeError::NoChildren {
                label: label.to_string(),
                pos: open_pos,
            });
        }
        self.nodes[id].subtree_end = self.nodes.len();
        Ok(id)
    }
}

/// Parses one bracketed tree such as `(PP (P Within) (NP (D the) (N limits)))`.
pub fn parse_bracketed_tree(source: &str) -> Result<ConstituencyTree, TreeError> {
    let lexemes = lex(source);
    let mut b = Builder {
        lexemes,
        pos: 0,
        src_len: source.len(),
        nodes: Vec::new(),
        leaves: Vec::new(),
    };
    match b.peek() {
        None => return Err(TreeError::EmptyTree),
        Some((_, Lexeme::Open)) => {}
        Some((p, Lexeme::Close)) => return Err(TreeError::UnbalancedBrackets { pos: p }),
        // a bare word is not a tree
        Some((p, Lexeme::Atom(_))) => return Err(TreeError::TrailingInput { pos: p }),
    }
    b.node(None)?;
    if let Some((p, lx)) = b.peek() {
        return Err(match lx {
            Lexeme::Close => TreeError::UnbalancedBrackets { pos: p },
            _ => TreeError::TrailingInput { pos: p },
        });
    }
    let mut tree = ConstituencyTree {
        nodes: b.nodes,
        leaves: b.leaves,
    };
    tree.compute_spans();
    Ok(tree)
}

impl ConstituencyTree {
    fn compute_spans(&mut self) {
        // Reverse pre-order visits children before parents.
        for id in (0..self.nodes.len()).rev() {
            let span = match self.nodes[id].token {
                Some(k) => Span::new(k, k + 1),
                None => {
                    let kids = &self.nodes[id].children;
                    let first = self.nodes[kids[0]].span;
                    let last = self.nodes[*kids.last().unwrap()].span;
                    Span::new(first.start, last.end)
                }
            };
            self.nodes[id].span = span;
        }
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    pub fn leaves(&self) -> &[NodeId] {
        &self.leaves
    }

    /// Token range covered by `id`.
    pub fn node_yield(&self, id: NodeId) -> Span {
        self.nodes[id].span
    }

    /// Leaf words, left to right.
    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.leaves.iter().map(move |&l| self.nodes[l].label.as_str())
    }

    /// True when `b` is a proper descendant of `a`.
    pub fn dominates(&self, a: NodeId, b: NodeId) -> bool {
        a < b && b < self.nodes[a].subtree_end
    }

    pub fn is_child(&self, parent: NodeId, child: NodeId) -> bool {
        self.nodes[child].parent == Some(parent)
    }

    pub fn are_sisters(&self, a: NodeId, b: NodeId) -> bool {
        a != b && self.nodes[a].parent.is_some() && self.nodes[a].parent == self.nodes[b].parent
    }

    /// Proper descendants of `id` in pre-order.
    pub fn descendants(&self, id: NodeId) -> std::ops::Range<NodeId> {
        id + 1..self.nodes[id].subtree_end
    }

    pub fn sisters(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        let siblings: &[NodeId] = match self.nodes[id].parent {
            Some(p) => &self.nodes[p].children,
            None => &[],
        };
        siblings.iter().copied().filter(move |&s| s != id)
    }

    pub fn to_bracketed(&self) -> String {
        let mut out = String::new();
        self.write_node(self.root(), &mut out);
        out
    }

    fn write_node(&self, id: NodeId, out: &mut String) {
        let n = &self.nodes[id];
        if n.is_leaf() {
            out.push_str(&n.label);
            return;
        }
        write!(out, "({}", n.label).unwrap();
        for &c in &n.children {
            out.push(' ');
            self.write_node(c, out);
        }
        out.push(')');
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn within_the_limits() {
        let t = parse_bracketed_tree("(PP (P Within) (NP (D the) (N limits)))").unwrap();
        assert_eq!(t.leaf_count(), 3);
        assert_eq!(t.node(t.root()).label, "PP");
        assert_eq!(t.node_yield(t.root()), Span::new(0, 3));
        assert_eq!(t.words().collect::<Vec<_>>(), ["Within", "the", "limits"]);
    }

    #[test]
    fn minimal_tree() {
        let t = parse_bracketed_tree("(X a)").unwrap();
        assert_eq!(t.leaf_count(), 1);
        assert_eq!(t.node(0).label, "X");
        assert_eq!(t.node(1).token, Some(0));
        assert_eq!(t.node_yield(1), Span::new(0, 1));
    }

    #[test]
    fn malformed() {
        assert!(matches!(
            parse_bracketed_tree("(PP (P Within)"),
            Err(TreeError::UnbalancedBrackets { .. })
        ));
        assert!(matches!(
            parse_bracketed_tree("(PP (P a)))"),
            Err(TreeError::UnbalancedBrackets { .. })
        ));
        assert_eq!(parse_bracketed_tree("  "), Err(TreeError::EmptyTree));
        assert!(matches!(
            parse_bracketed_tree("((NP a))"),
            Err(TreeError::EmptyLabel { pos: 1 })
        ));
        assert!(matches!(
            parse_bracketed_tree("(NP)"),
            Err(TreeError::NoChildren { .. })
        ));
        assert!(matches!(
            parse_bracketed_tree("(NP a) (NP b)"),
            Err(TreeError::TrailingInput { .. })
        ));
    }

    #[test]
    fn yields_are_unions_of_children() {
        let t = parse_bracketed_tree("(S (NP (D a) (N b)) (VP (V c) (NP (N d) (N e))))").unwrap();
        assert_eq!(t.node_yield(0), Span::new(0, 5));
        for n in 0..t.len() {
            let node = t.node(n);
            if let Some(k) = node.token {
                assert_eq!(t.node_yield(n), Span::new(k, k + 1));
            } else {
                let first = t.node_yield(node.children[0]);
                let last = t.node_yield(*node.children.last().unwrap());
                assert_eq!(t.node_yield(n), Span::new(first.start, last.end));
            }
        }
        assert!(t.dominates(0, 4));
        assert!(!t.dominates(4, 4));
        assert!(t.are_sisters(1, 6));
    }
}
