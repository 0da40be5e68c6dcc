pub mod actors;
pub mod concept;
pub mod corpus;
pub mod engine;
pub mod eval;
pub mod lexicon;
pub mod query;
pub mod span;
pub mod synthetic;

pub use actors::{
    classify_actors, decide_role, extract_features, ActorFeatures, ActorModel, ClassifierScores, FeatureContext,
    ForestParams, Role, RoleDecision, RoleScorer, Thresholds, TransitivityLexicon,
};
pub use concept::{Concept, UnknownConcept};
pub use corpus::{
    load_corpus, parse_corpus, Corpus, IngestError, LoadOptions, Statement, StatementRecord, Token, ValidationMode,
};
pub use engine::{AnnotatedStatement, Annotation, Engine, EngineOptions, RuleSet};
pub use eval::{cohen_kappa, evaluate, match_status, EvalOptions, EvalReport, KappaResult, MatchStatus};
pub use lexicon::{Lexicon, LexiconError, MatchPolicy, Scope};
pub use query::{compile_pattern, find_matches, Match, MatchContext, PatternError, TreePattern};
pub use span::{SegmentSet, Span};
