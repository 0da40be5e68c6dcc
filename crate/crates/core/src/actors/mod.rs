//! Actor role classification: features, random forests per role, and the
//! final decision between agent, target and auxiliary party.

mod decision;
mod features;
mod forest;

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::concept::Concept;
use crate::corpus::Statement;
use crate::engine::{AnnotatedStatement, Annotation};

pub use decision::{decide_role, ClassifierScores, RoleDecision, Thresholds};
pub use features::{
    extract_features, ActorFeatures, FeatureContext, FeatureError, Transitivity,
    TransitivityError, TransitivityLexicon, CATEGORICAL, FEATURE_NAMES, NULL,
};
pub use forest::{
    cross_validate, fold_assignment, train_forest, DecisionTree, Forest, ForestParams, Schema,
    TrainError, TreeNode,
};

pub const MODEL_FORMAT: &str = "legalmeta-actor-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Agent,
    Target,
    AuxiliaryParty,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::Agent, Role::Target, Role::AuxiliaryParty];

    pub fn concept(self) -> Concept {
        match self {
            Role::Agent => Concept::Agent,
            Role::Target => Concept::Target,
            Role::AuxiliaryParty => Concept::AuxiliaryParty,
        }
    }

    pub fn from_concept(c: Concept) -> Option<Role> {
        Role::ALL.into_iter().find(|r| r.concept() == c)
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.concept().name())
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.parse::<Concept>()
            .ok()
            .and_then(Role::from_concept)
            .ok_or_else(|| format!("`{}` is not an actor role", s))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed model file: {0}")]
    Format(String),
    #[error(transparent)]
    Train(#[from] TrainError),
}

/// One forest per role over a shared feature schema.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActorModel {
    pub format: String,
    pub version: u32,
    pub params: ForestParams,
    pub schema: Schema,
    pub agent: Forest,
    pub target: Forest,
    pub auxiliary_party: Forest,
}

impl ActorModel {
    /// Trains the three role forests (in parallel) on feature rows. Each role
    /// uses the base seed offset by its position.
    pub fn train(rows: &[Vec<String>], labels: &[Role], params: &ForestParams) -> Result<Self, TrainError> {
        if rows.len() != labels.len() {
            return Err(TrainError::SchemaMismatch(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        let schema = Schema::fit(&FEATURE_NAMES, &CATEGORICAL, rows)?;
        let x = rows
            .iter()
            .map(|r| schema.encode(r))
            .collect::<Result<Vec<_>, _>>()?;
        let fit = |k: u64, role: Role| {
            let y: Vec<bool> = labels.iter().map(|&l| l == role).collect();
            let p = ForestParams {
                seed: params.seed.wrapping_add(k),
                ..*params
            };
            train_forest(&x, &y, &p)
        };
        let (agent, (target, aux)) = rayon::join(
            || fit(0, Role::Agent),
            || rayon::join(|| fit(1, Role::Target), || fit(2, Role::AuxiliaryParty)),
        );
        Ok(ActorModel {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            params: *params,
            schema,
            agent: agent?,
            target: target?,
            auxiliary_party: aux?,
        })
    }

    pub fn forest(&self, role: Role) -> &Forest {
        match role {
            Role::Agent => &self.agent,
            Role::Target => &self.target,
            Role::AuxiliaryParty => &self.auxiliary_party,
        }
    }

    pub fn score_row(&self, row: &[String]) -> Result<ClassifierScores, TrainError> {
        let x = self.schema.encode(row)?;
        Ok(ClassifierScores::new(
            self.agent.score(&x),
            self.target.score(&x),
            self.auxiliary_party.score(&x),
        ))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let m: ActorModel = serde_json::from_str(text).map_err(|e| ModelError::Format(e.to_string()))?;
        if m.format != MODEL_FORMAT {
            return Err(ModelError::Format(format!("unexpected format tag `{}`", m.format)));
        }
        if m.version != MODEL_VERSION {
            return Err(ModelError::Format(format!("unsupported version {}", m.version)));
        }
        if m.schema.columns != FEATURE_NAMES {
            return Err(TrainError::SchemaMismatch("model was trained on other feature columns".into()).into());
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|source| ModelError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }
}

/// Anything that can score an actor for the three roles.
pub trait RoleScorer: Sync {
    fn score(&self, features: &ActorFeatures) -> Result<ClassifierScores, TrainError>;
}

impl RoleScorer for ActorModel {
    fn score(&self, features: &ActorFeatures) -> Result<ClassifierScores, TrainError> {
        self.score_row(&features.to_row())
    }
}

impl<F> RoleScorer for F
where
    F: Fn(&ActorFeatures) -> ClassifierScores + Sync,
{
    fn score(&self, features: &ActorFeatures) -> Result<ClassifierScores, TrainError> {
        Ok(self(features))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ActorError {
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error("statement `{id}`: {source}")]
    Score {
        id: String,
        #[source]
        source: TrainError,
    },
}

/// Refines every `actor` annotation into agent, target or auxiliary party,
/// or flags it `cannot_classify`.
pub fn classify_actors(
    annotated: &mut AnnotatedStatement,
    s: &Statement,
    ctx: FeatureContext<'_>,
    scorer: &dyn RoleScorer,
    th: &Thresholds,
) -> Result<(), ActorError> {
    let actors: Vec<usize> = (0..annotated.annotations.len())
        .filter(|&i| annotated.annotations[i].concept == Concept::Actor)
        .collect();
    let mut decisions = Vec::with_capacity(actors.len());
    for &i in &actors {
        let f = extract_features(s, &annotated.annotations, i, ctx)?;
        let sc = scorer.score(&f).map_err(|source| ActorError::Score {
            id: s.id().to_string(),
            source,
        })?;
        decisions.push(decide_role(&sc, th));
    }
    for (&i, d) in actors.iter().zip(decisions) {
        let a = &mut annotated.annotations[i];
        match d.concept() {
            Some(c) => a.concept = c,
            None => a.cannot_classify = true,
        }
    }
    annotated.canonicalize();
    Ok(())
}

/// Feature rows for every actor-family annotation of `anns`, labelled with
/// its role when it has one.
pub fn feature_rows(
    s: &Statement,
    anns: &[Annotation],
    ctx: FeatureContext<'_>,
) -> Result<Vec<(ActorFeatures, Option<Role>)>, FeatureError> {
    let mut out = Vec::new();
    for (i, a) in anns.iter().enumerate() {
        if a.concept.is_actor_family() {
            out.push((extract_features(s, anns, i, ctx)?, Role::from_concept(a.concept)));
        }
    }
    Ok(out)
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("unexpected header; expected the 31 feature columns followed by `label`")]
    Header,
    #[error("row {row}: {msg}")]
    Row { row: usize, msg: String },
}

pub fn write_dataset<W: Write>(out: W, rows: &[(Vec<String>, Option<Role>)]) -> Result<(), DatasetError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = FEATURE_NAMES.to_vec();
    header.push("label");
    w.write_record(&header)?;
    for (row, label) in rows {
        let label = label.map_or(String::new(), |r| r.to_string());
        w.write_record(row.iter().map(String::as_str).chain([label.as_str()]))?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Reads a labelled dataset; rows without a label are skipped.
pub fn read_dataset<R: Read>(input: R) -> Result<Vec<(Vec<String>, Role)>, DatasetError> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.len() != FEATURE_NAMES.len() + 1
        || header.iter().zip(FEATURE_NAMES).any(|(a, b)| a != b)
        || &header[FEATURE_NAMES.len()] != "label"
    {
        return Err(DatasetError::Header);
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let label = &rec[FEATURE_NAMES.len()];
        if label.is_empty() {
            continue;
        }
        let role = label.parse().map_err(|msg| DatasetError::Row { row: i + 1, msg })?;
        let row = rec.iter().take(FEATURE_NAMES.len()).map(str::to_string).collect();
        out.push((row, role));
    }
    Ok(out)
}
