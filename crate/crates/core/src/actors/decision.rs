//! Turning the three classifier scores into one role.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::concept::Concept;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierScores {
    pub agent: f64,
    pub target: f64,
    pub auxiliary_party: f64,
}

impl ClassifierScores {
    pub fn new(agent: f64, target: f64, auxiliary_party: f64) -> Self {
        ClassifierScores {
            agent,
            target,
            auxiliary_party,
        }
    }

    /// Best and second-best score.
    pub fn top_two(&self) -> (f64, f64) {
        let mut v = [self.agent, self.target, self.auxiliary_party];
        v.sort_by(|a, b| b.total_cmp(a));
        (v[0], v[1])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// Agent score above which the actor is an agent outright.
    pub t1: f64,
    /// Largest gap to the best score at which a second-ranked agent still wins.
    pub t2: f64,
    /// Gap between the two best scores below which no decision is made.
    pub t3: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            t1: 0.9,
            t2: 0.1,
            t3: 0.1,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [("t1", self.t1), ("t2", self.t2), ("t3", self.t3)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("{} must lie in [0, 1], got {}", name, v));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoleDecision {
    Agent,
    Target,
    AuxiliaryParty,
    CannotClassify,
}

impl RoleDecision {
    /// The refined concept, or `None` when undecided.
    pub fn concept(self) -> Option<Concept> {
        match self {
            RoleDecision::Agent => Some(Concept::Agent),
            RoleDecision::Target => Some(Concept::Target),
            RoleDecision::AuxiliaryParty => Some(Concept::AuxiliaryParty),
            RoleDecision::CannotClassify => None,
        }
    }
}

impl fmt::Display for RoleDecision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RoleDecision::Agent => "agent",
            RoleDecision::Target => "target",
            RoleDecision::AuxiliaryParty => "auxiliary_party",
            RoleDecision::CannotClassify => "cannot_classify",
        })
    }
}

/// Agent acceptance first, then the uncertainty test, then target
/// acceptance; auxiliary party otherwise. Scores are compared exactly.
pub fn decide_role(sc: &ClassifierScores, th: &Thresholds) -> RoleDecision {
    let (s1, s2) = sc.top_two();
    let sa = sc.agent;
    let agent = sa > th.t1 || sa == s1 || (sa == s2 && s1 - s2 < th.t2);
    if agent {
        RoleDecision::Agent
    } else if s1 - s2 < th.t3 {
        RoleDecision::CannotClassify
    } else if sc.target == s1 {
        RoleDecision::Target
    } else {
        RoleDecision::AuxiliaryParty
    }
}
