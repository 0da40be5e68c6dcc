mod common;

use std::collections::BTreeSet;

use legalmeta::actors::Thresholds;
use legalmeta::corpus::parse_bracketed_tree;
use legalmeta::eval::Ratio;
use legalmeta::synthetic::{actor_dataset, separable_dataset};
use legalmeta::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;

const WORDS: [&str; 8] = ["limit", "judge", "the", "of", "road", "day", "fine", "x"];

fn tree_from_seed(seed: u64, labels: &[&str]) -> RandTree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_tree(&mut rng, 15, labels, &WORDS)
}

fn pairs(s: &Statement, lex: &Lexicon, pattern: &str) -> BTreeSet<(usize, usize)> {
    let p = compile_pattern(pattern).unwrap();
    MatchContext::new(s, lex)
        .find(&p, Scope::Full)
        .iter()
        .map(|m| (m.root, m.target))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn bracketed_round_trip(seed in any::<u64>()) {
        let t = tree_from_seed(seed, &CATEGORIES);
        let parsed = parse_bracketed_tree(&t.bracketed(0)).unwrap();
        let again = parse_bracketed_tree(&parsed.to_bracketed()).unwrap();
        prop_assert_eq!(&parsed, &again);
        prop_assert_eq!(parsed.len(), t.len());
        for n in 0..parsed.len() {
            let y = parsed.node_yield(n);
            prop_assert!(y.start < y.end && y.end <= parsed.leaf_count());
            prop_assert_eq!(y.len(), t.words(n).len());
        }
    }

    #[test]
    fn child_matches_are_descendant_matches(seed in any::<u64>(), a in 0usize..4, b in 0usize..4) {
        let labels = ["NP", "PP", "VP", "P"];
        let t = tree_from_seed(seed, &labels);
        let s = statement_from_tree("p", &t);
        let lex = word_lexicon();
        let child = pairs(&s, &lex, &format!("{} < {}=t", labels[a], labels[b]));
        let desc = pairs(&s, &lex, &format!("{} << {}=t", labels[a], labels[b]));
        prop_assert!(child.is_subset(&desc));
    }

    #[test]
    fn sisterhood_is_symmetric(seed in any::<u64>(), a in 0usize..4, b in 0usize..4) {
        let labels = ["NP", "PP", "VP", "P"];
        let t = tree_from_seed(seed, &labels);
        let s = statement_from_tree("p", &t);
        let lex = word_lexicon();
        let ab = pairs(&s, &lex, &format!("{} $ {}=t", labels[a], labels[b]));
        let ba: BTreeSet<(usize, usize)> = pairs(&s, &lex, &format!("{} $ {}=t", labels[b], labels[a]))
            .into_iter()
            .map(|(x, y)| (y, x))
            .collect();
        prop_assert_eq!(ab, ba);
    }

    #[test]
    fn matches_come_in_document_order(seed in any::<u64>()) {
        let t = tree_from_seed(seed, &CATEGORIES);
        let s = statement_from_tree("p", &t);
        let lex = word_lexicon();
        let p = compile_pattern("__ << __=t").unwrap();
        let m = MatchContext::new(&s, &lex).find(&p, Scope::Full);
        prop_assert!(m.windows(2).all(|w| (w[0].target, w[0].root) < (w[1].target, w[1].root)));
    }

    #[test]
    fn lexicon_occurrences(words in prop::collection::vec(prop::sample::select(vec![
        "provided", "that", "in", "case", "of", "if", "who", "limit", "can", "not", "may", "the", "day",
    ]), 1..14), upper in any::<bool>()) {
        let lex = Lexicon::builtin();
        let mk = |up: bool| -> Vec<Token> {
            words.iter().enumerate().map(|(i, w)| Token {
                index: i,
                surface: if up { w.to_uppercase() } else { w.to_string() },
                lemma: None,
                pos: "X".into(),
            }).collect()
        };
        let (lower, cased) = (mk(false), mk(upper));
        for c in Concept::ALL {
            let full = lex.find_marker_occurrences(c, &lower, Scope::Full);
            for w in full.windows(2) {
                prop_assert!(!w[0].span.intersects(&w[1].span));
            }
            let scoped = lex.find_marker_occurrences(c, &lower, Scope::Rule("general"));
            for o in &scoped {
                prop_assert!(full.iter().any(|f| f.span == o.span));
            }
            let spans = |v: &[lexicon::MarkerOccurrence]| v.iter().map(|o| o.span).collect::<Vec<_>>();
            prop_assert_eq!(spans(&full), spans(&lex.find_marker_occurrences(c, &cased, Scope::Full)));
        }
    }

    #[test]
    fn annotation_is_pure_and_total(seed in any::<u64>()) {
        let labels = ["NP", "PP", "VP", "VN", "Ssub", "SENT", "P"];
        let t = tree_from_seed(seed, &labels);
        let s = statement_from_tree("p", &t);
        let engine = Engine::builtin();
        let a = engine.annotate(&s);
        prop_assert_eq!(&a, &engine.annotate(&s));
        prop_assert!(a.statement_type.is_statement_level());
        let empty = Engine::new(RuleSet::parse("").unwrap(), Lexicon::builtin(), EngineOptions::default());
        prop_assert_eq!(empty.annotate(&s).statement_type, Concept::Obligation);
    }

    #[test]
    fn self_evaluation_is_perfect(seed in any::<u64>()) {
        let labels = ["NP", "PP", "VP", "VN", "Ssub", "SENT"];
        let statements: Vec<Statement> = (0..4)
            .map(|i| statement_from_tree(&format!("s{}", i), &tree_from_seed(seed.wrapping_add(i), &labels)))
            .collect();
        let ann = Engine::builtin().annotate_all(&statements, 1);
        let r = evaluate(&ann, &ann, &EvalOptions { excluded: vec![] }).unwrap();
        for row in r.phrase.iter().chain(&r.statement) {
            prop_assert_eq!((row.fp, row.fn_), (0, 0));
            if row.ground_truth > 0 {
                prop_assert_eq!(row.precision().unwrap().value(), 1.0);
                prop_assert_eq!(row.recall().unwrap().value(), 1.0);
            }
        }
        let predicted: usize = ann.iter().map(|s| s.annotations.len()).sum();
        prop_assert_eq!(r.phrase_total.tp + r.phrase_total.fp, predicted);
    }

    #[test]
    fn rounding_is_half_up(num in 0usize..5000, extra in 0usize..5000) {
        let den = num + extra;
        prop_assume!(den > 0);
        let t = Ratio::new(num, den).unwrap().tenths() as u128;
        let (n, d) = (num as u128, den as u128);
        // t - 0.5 <= 1000 n / d < t + 0.5
        prop_assert!((2 * t).saturating_sub(1) * d <= 2000 * n || t == 0);
        prop_assert!(2000 * n < (2 * t + 1) * d);
    }

    #[test]
    fn agent_above_t1(sa in 0.0f64..=1.0, st in 0.0f64..=1.0, sx in 0.0f64..=1.0, t1 in 0.0f64..=1.0) {
        let th = Thresholds { t1, ..Thresholds::default() };
        let d = decide_role(&ClassifierScores::new(sa, st, sx), &th);
        if sa > t1 {
            prop_assert_eq!(d, RoleDecision::Agent);
        }
        prop_assert_eq!(decide_role(&ClassifierScores::new(st, st, st), &th), RoleDecision::Agent);
    }

    #[test]
    fn label_counts_sum_to_chain_length(seed in any::<u64>()) {
        for (f, _) in actor_dataset(40, seed) {
            prop_assert_eq!(f.label_counts().iter().sum::<usize>(), f.dependency_chain.len());
        }
        for (f, _) in separable_dataset(40, seed) {
            prop_assert_eq!(f.label_counts().iter().sum::<usize>(), f.dependency_chain.len());
            prop_assert_eq!(f.to_row().len(), 31);
        }
    }
}
