//! Tree patterns over constituency parses.

mod matcher;
mod pattern;

pub use matcher::{find_matches, Match, MatchContext};
pub use pattern::{compile_pattern, LabelTest, NodeExpr, PatternError, RelOp, Relation, TreePattern};
