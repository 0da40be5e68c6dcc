//! Synthetic data: actor datasets for training checks and benchmarks, and
//! annotation sets built to produce given evaluation counts.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::actors::{ActorFeatures, Role, Transitivity};
use crate::concept::Concept;
use crate::corpus::DepLabel;
use crate::engine::{AnnotatedStatement, Annotation};
use crate::span::Span;

/// Agents, targets and auxiliary parties in the reference actor dataset.
pub const ROLE_WEIGHTS: [(Role, usize); 3] = [
    (Role::Agent, 183),
    (Role::Target, 481),
    (Role::AuxiliaryParty, 336),
];

/// Splits `n` actors across roles in proportion to `ROLE_WEIGHTS`
/// (largest remainder, ties to the earlier role).
pub fn role_counts(n: usize) -> [usize; 3] {
    let total: usize = ROLE_WEIGHTS.iter().map(|w| w.1).sum();
    let mut counts = [0; 3];
    let mut rem = [(0usize, 0usize); 3];
    for (i, &(_, w)) in ROLE_WEIGHTS.iter().enumerate() {
        counts[i] = n * w / total;
        rem[i] = (n * w % total, i);
    }
    let left = n - counts.iter().sum::<usize>();
    rem.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in rem.iter().take(left) {
        counts[i] += 1;
    }
    counts
}

const CONTEXT: [Concept; 8] = [
    Concept::Action,
    Concept::Condition,
    Concept::Modality,
    Concept::Artifact,
    Concept::Time,
    Concept::Location,
    Concept::Exception,
    Concept::Reason,
];
const POS: [&str; 5] = ["P", "D", "PONCT", "V", "N"];
const MODALS: [&str; 4] = ["may", "shall", "must", "can not"];

fn pick<T: Copy>(rng: &mut ChaCha8Rng, items: &[T]) -> T {
    *items.choose(rng).expect("non-empty")
}

fn maybe<T: Copy>(rng: &mut ChaCha8Rng, p: f64, items: &[T]) -> Option<T> {
    rng.gen_bool(p).then(|| pick(rng, items))
}

fn random_chain(rng: &mut ChaCha8Rng, first: DepLabel) -> Vec<DepLabel> {
    let mut chain = vec![first];
    for _ in 0..rng.gen_range(0..3) {
        chain.push(pick(rng, &[DepLabel::Mod, DepLabel::PObj, DepLabel::Dep, DepLabel::Obj, DepLabel::ModRel]));
    }
    chain
}

fn base_features(rng: &mut ChaCha8Rng, active: bool, chain: Vec<DepLabel>) -> ActorFeatures {
    let actors = rng.gen_range(1..=4);
    ActorFeatures {
        active_voice: active,
        transitivity: pick(
            rng,
            &[Transitivity::Transitive, Transitivity::Intransitive, Transitivity::Both, Transitivity::Unknown],
        ),
        modal_verbs: maybe(rng, 0.6, &MODALS).map(|m| vec![m.to_string()]).unwrap_or_default(),
        number_of_actors: actors,
        actor_position: rng.gen_range(1..=actors),
        annotation_container: maybe(rng, 0.5, &CONTEXT),
        preceding_annotation: maybe(rng, 0.7, &CONTEXT),
        following_annotation: maybe(rng, 0.7, &CONTEXT),
        preceding_pos: maybe(rng, 0.9, &POS).map(str::to_string),
        distance_to_main_verb: rng.gen_range(0..5),
        dependency_chain: chain,
    }
}

/// Actors with role-typical but noisy features, in the reference role
/// proportions, shuffled.
pub fn actor_dataset(n: usize, seed: u64) -> Vec<(ActorFeatures, Role)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let counts = role_counts(n);
    let mut out = Vec::with_capacity(n);
    for (k, &(role, _)) in ROLE_WEIGHTS.iter().enumerate() {
        for _ in 0..counts[k] {
            let typical = rng.gen_bool(0.8);
            let (first, active, container) = match (role, typical) {
                (Role::Agent, true) => (DepLabel::Suj, true, None),
                (Role::Target, true) => (DepLabel::Obj, true, Some(Concept::Action)),
                (Role::AuxiliaryParty, true) => (DepLabel::PObj, rng.gen_bool(0.5), Some(Concept::Condition)),
                _ => (
                    pick(&mut rng, &[DepLabel::Suj, DepLabel::Obj, DepLabel::PObj, DepLabel::Mod]),
                    rng.gen_bool(0.5),
                    maybe(&mut rng, 0.5, &CONTEXT),
                ),
            };
            let chain = random_chain(&mut rng, first);
            let mut f = base_features(&mut rng, active, chain);
            f.annotation_container = container;
            out.push((f, role));
        }
    }
    out.shuffle(&mut rng);
    out
}

/// Actors labelled positive exactly when the chain holds a subject relation
/// and the statement is active.
pub fn separable_dataset(n: usize, seed: u64) -> Vec<(ActorFeatures, bool)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let active = rng.gen_bool(0.6);
            let first = if rng.gen_bool(0.6) {
                DepLabel::Suj
            } else {
                pick(&mut rng, &[DepLabel::Obj, DepLabel::PObj, DepLabel::Mod, DepLabel::AObj])
            };
            let chain = random_chain(&mut rng, first);
            let f = base_features(&mut rng, active, chain);
            let label = f.active_voice && f.dependency_chain.contains(&DepLabel::Suj);
            (f, label)
        })
        .collect()
}

fn one(id: String, t: Concept, anns: Vec<Annotation>) -> AnnotatedStatement {
    AnnotatedStatement {
        id,
        statement_type: t,
        annotations: anns,
    }
}

/// Predictions and gold that evaluate to the given `(concept, tp, fp, fn)`
/// per row. Each counted event gets its own statement so rows cannot
/// interact; `extra_gold` adds gold-only annotations (for excluded types).
pub fn phrase_count_fixture(
    rows: &[(Concept, usize, usize, usize)],
    extra_gold: &[(Concept, usize)],
) -> (Vec<AnnotatedStatement>, Vec<AnnotatedStatement>) {
    let span = Span::new(0, 2);
    let mk = |c: Concept| vec![Annotation::span(c, span, "fixture")];
    let (mut preds, mut golds) = (Vec::new(), Vec::new());
    let mut push = |id: String, p: Vec<Annotation>, g: Vec<Annotation>| {
        preds.push(one(id.clone(), Concept::Obligation, p));
        golds.push(one(id, Concept::Obligation, g));
    };
    for &(c, tp, fp, fn_) in rows {
        for i in 0..tp {
            push(format!("{}-tp-{:05}", c, i), mk(c), mk(c));
        }
        for i in 0..fp {
            push(format!("{}-fp-{:05}", c, i), mk(c), Vec::new());
        }
        for i in 0..fn_ {
            push(format!("{}-fn-{:05}", c, i), Vec::new(), mk(c));
        }
    }
    for &(c, n) in extra_gold {
        for i in 0..n {
            push(format!("{}-gold-{:05}", c, i), Vec::new(), mk(c));
        }
    }
    (preds, golds)
}

/// Statements with no phrase annotations whose predicted and gold types are
/// given as `(predicted, gold, count)`.
pub fn statement_count_fixture(
    rows: &[(Concept, Concept, usize)],
) -> (Vec<AnnotatedStatement>, Vec<AnnotatedStatement>) {
    let (mut preds, mut golds) = (Vec::new(), Vec::new());
    for &(p, g, n) in rows {
        for i in 0..n {
            let id = format!("{}-{}-{:05}", p, g, i);
            preds.push(one(id.clone(), p, Vec::new()));
            golds.push(one(id, g, Vec::new()));
        }
    }
    (preds, golds)
}
