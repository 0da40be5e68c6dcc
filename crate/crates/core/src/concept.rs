//! The concept type system: 18 phrase-level and 6 statement-level metadata
//! types, with the generalization edges between them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Concept {
    // phrase level
    Action,
    Actor,
    Agent,
    Target,
    AuxiliaryParty,
    Artifact,
    Condition,
    Constraint,
    Exception,
    Location,
    Modality,
    Reason,
    Reference,
    Result,
    Sanction,
    Situation,
    Time,
    Violation,
    // statement level
    Fact,
    Definition,
    Obligation,
    Penalty,
    Permission,
    Prohibition,
}

impl Concept {
    pub const ALL: [Concept; 24] = [
        Concept::Action,
        Concept::Actor,
        Concept::Agent,
        Concept::Target,
        Concept::AuxiliaryParty,
        Concept::Artifact,
        Concept::Condition,
        Concept::Constraint,
        Concept::Exception,
        Concept::Location,
        Concept::Modality,
        Concept::Reason,
        Concept::Reference,
        Concept::Result,
        Concept::Sanction,
        Concept::Situation,
        Concept::Time,
        Concept::Violation,
        Concept::Fact,
        Concept::Definition,
        Concept::Obligation,
        Concept::Penalty,
        Concept::Permission,
        Concept::Prohibition,
    ];

    pub const STATEMENT_LEVEL: [Concept; 6] = [
        Concept::Fact,
        Concept::Definition,
        Concept::Obligation,
        Concept::Penalty,
        Concept::Permission,
        Concept::Prohibition,
    ];

    pub fn is_statement_level(self) -> bool {
        Self::STATEMENT_LEVEL.contains(&self)
    }

    pub fn is_phrase_level(self) -> bool {
        !self.is_statement_level()
    }

    pub fn phrase_level() -> impl Iterator<Item = Concept> {
        Self::ALL.into_iter().filter(|c| c.is_phrase_level())
    }

    /// Direct generalization, if any.
    pub fn parent(self) -> Option<Concept> {
        use Concept::*;
        match self {
            Sanction => Some(Result),
            Result => Some(Situation),
            Condition | Exception => Some(Constraint),
            Violation => Some(Condition),
            Agent | Target | AuxiliaryParty => Some(Actor),
            _ => None,
        }
    }

    /// True when `self` is a strict (transitive) generalization of `other`.
    pub fn generalizes(self, other: Concept) -> bool {
        let mut cur = other.parent();
        while let Some(c) = cur {
            if c == self {
                return true;
            }
            cur = c.parent();
        }
        false
    }

    /// Actor or one of its role refinements.
    pub fn is_actor_family(self) -> bool {
        self == Concept::Actor || Concept::Actor.generalizes(self)
    }

    pub fn name(self) -> &'static str {
        use Concept::*;
        match self {
            Action => "action",
            Actor => "actor",
            Agent => "agent",
            Target => "target",
            AuxiliaryParty => "auxiliary_party",
            Artifact => "artifact",
            Condition => "condition",
            Constraint => "constraint",
            Exception => "exception",
            Location => "location",
            Modality => "modality",
            Reason => "reason",
            Reference => "reference",
            Result => "result",
            Sanction => "sanction",
            Situation => "situation",
            Time => "time",
            Violation => "violation",
            Fact => "fact",
            Definition => "definition",
            Obligation => "obligation",
            Penalty => "penalty",
            Permission => "permission",
            Prohibition => "prohibition",
        }
    }
}

impl fmt::Display for Concept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown concept `{0}`")]
pub struct UnknownConcept(pub String);

impl FromStr for Concept {
    type Err = UnknownConcept;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        Concept::ALL
            .into_iter()
            .find(|c| c.name() == norm)
            .ok_or_else(|| UnknownConcept(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_partition() {
        assert_eq!(Concept::phrase_level().count(), 18);
        assert_eq!(Concept::ALL.iter().filter(|c| c.is_statement_level()).count(), 6);
    }

    #[test]
    fn generalization_is_acyclic_and_transitive() {
        for c in Concept::ALL {
            assert!(!c.generalizes(c), "{} generalizes itself", c);
            for d in Concept::ALL {
                assert!(!(c.generalizes(d) && d.generalizes(c)));
            }
        }
        assert!(Concept::Situation.generalizes(Concept::Sanction));
        assert!(Concept::Constraint.generalizes(Concept::Violation));
        assert!(!Concept::Sanction.generalizes(Concept::Situation));
    }

    #[test]
    fn parse_names() {
        for c in Concept::ALL {
            assert_eq!(c.name().parse::<Concept>().unwrap(), c);
        }
        assert_eq!("Auxiliary-Party".parse::<Concept>().unwrap(), Concept::AuxiliaryParty);
        assert!("widget".parse::<Concept>().is_err());
    }
}
