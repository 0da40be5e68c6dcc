//! Scoring predicted annotations against gold, and inter-annotator agreement.
//!
//! A prediction matches when some gold annotation of the same type overlaps
//! it; otherwise it is misclassified. A gold annotation no prediction
//! overlaps is missed. Each prediction is judged on its own, so one gold
//! annotation may license several matches.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::{self, Write};

use serde::{Deserialize, Serialize};

use crate::concept::Concept;
use crate::engine::{AnnotatedStatement, Annotation};
use crate::span::SegmentSet;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalOptions {
    /// Types left out of every count.
    pub excluded: Vec<Concept>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            excluded: vec![Concept::Constraint, Concept::Result, Concept::Reference],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatchStatus {
    Match,
    Misclassified,
}

/// Same type and overlapping segments.
pub fn match_status(pred: &Annotation, gold: &[Annotation]) -> MatchStatus {
    if gold
        .iter()
        .any(|g| g.concept == pred.concept && g.segments.intersects(&pred.segments))
    {
        MatchStatus::Match
    } else {
        MatchStatus::Misclassified
    }
}

/// A percentage kept as an exact fraction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub num: usize,
    pub den: usize,
}

impl Ratio {
    pub fn new(num: usize, den: usize) -> Option<Self> {
        (den > 0).then_some(Ratio { num, den })
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Tenths of a percent, rounded half up.
    pub fn tenths(self) -> u64 {
        let (n, d) = (self.num as u128, self.den as u128);
        ((2000 * n + d) / (2 * d)) as u64
    }

    /// Percentage rounded half up to one decimal.
    pub fn percent(self) -> f64 {
        self.tenths() as f64 / 10.0
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = self.tenths();
        write!(f, "{}.{}%", t / 10, t % 10)
    }
}

fn pct(r: Option<Ratio>) -> String {
    r.map_or_else(|| "N/A".to_string(), |r| r.to_string())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Row {
    pub concept: Concept,
    /// Role rows restate part of the actor row and stay out of subtotals.
    pub subtype: bool,
    pub extracted: usize,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub ground_truth: usize,
}

impl Row {
    fn new(concept: Concept, subtype: bool) -> Self {
        Row {
            concept,
            subtype,
            extracted: 0,
            tp: 0,
            fp: 0,
            fn_: 0,
            ground_truth: 0,
        }
    }

    pub fn precision(&self) -> Option<Ratio> {
        Ratio::new(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> Option<Ratio> {
        Ratio::new(self.tp, self.tp + self.fn_)
    }

    fn add(&mut self, o: &Row) {
        self.extracted += o.extracted;
        self.tp += o.tp;
        self.fp += o.fp;
        self.fn_ += o.fn_;
        self.ground_truth += o.ground_truth;
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Totals {
    pub extracted: usize,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// Every gold annotation, excluded types included.
    pub ground_truth: usize,
    pub precision: Option<Ratio>,
    pub recall: Option<Ratio>,
}

impl Totals {
    fn from_row(r: &Row, ground_truth: usize) -> Self {
        Totals {
            extracted: r.extracted,
            tp: r.tp,
            fp: r.fp,
            fn_: r.fn_,
            ground_truth,
            precision: r.precision(),
            recall: r.recall(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalReport {
    pub matching: String,
    pub phrase: Vec<Row>,
    pub phrase_total: Totals,
    pub statement: Vec<Row>,
    pub statement_total: Totals,
    pub excluded: Vec<Concept>,
    /// Gold annotations of excluded types.
    pub excluded_ground_truth: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("statement ids differ: {missing_in_pred} missing from predictions, {missing_in_gold} missing from gold (first: `{example}`)")]
    IdMismatch {
        missing_in_pred: usize,
        missing_in_gold: usize,
        example: String,
    },
    #[error("statement id `{0}` appears twice")]
    DuplicateId(String),
}

const MATCHING_NOTE: &str =
    "predictions judged independently; one gold annotation may match several predictions";

fn index(list: &[AnnotatedStatement]) -> Result<HashMap<&str, &AnnotatedStatement>, EvalError> {
    let mut map = HashMap::new();
    for s in list {
        if map.insert(s.id.as_str(), s).is_some() {
            return Err(EvalError::DuplicateId(s.id.clone()));
        }
    }
    Ok(map)
}

fn aligned<'a>(
    preds: &'a [AnnotatedStatement],
    golds: &'a [AnnotatedStatement],
) -> Result<Vec<(&'a AnnotatedStatement, &'a AnnotatedStatement)>, EvalError> {
    let p = index(preds)?;
    let g = index(golds)?;
    let missing_in_pred: Vec<&str> = g.keys().filter(|k| !p.contains_key(*k)).copied().collect();
    let missing_in_gold: Vec<&str> = p.keys().filter(|k| !g.contains_key(*k)).copied().collect();
    if !missing_in_pred.is_empty() || !missing_in_gold.is_empty() {
        let mut all: Vec<&str> = missing_in_pred.iter().chain(&missing_in_gold).copied().collect();
        all.sort();
        return Err(EvalError::IdMismatch {
            missing_in_pred: missing_in_pred.len(),
            missing_in_gold: missing_in_gold.len(),
            example: all[0].to_string(),
        });
    }
    let mut pairs: Vec<_> = golds.iter().map(|gs| (p[gs.id.as_str()], gs)).collect();
    pairs.sort_by(|a, b| a.1.id.cmp(&b.1.id));
    Ok(pairs)
}

// The actor row pools the whole actor family; other rows are exact.
fn row_class(row: Concept, c: Concept) -> bool {
    if row == Concept::Actor {
        c.is_actor_family()
    } else {
        c == row
    }
}

fn count_row(row: &mut Row, pred: &[Annotation], gold: &[Annotation]) {
    let in_class = |a: &&Annotation| row_class(row.concept, a.concept);
    let p: Vec<&Annotation> = pred.iter().filter(in_class).collect();
    let g: Vec<&Annotation> = gold.iter().filter(in_class).collect();
    for a in &p {
        row.extracted += 1;
        if g.iter().any(|x| x.segments.intersects(&a.segments)) {
            row.tp += 1;
        } else {
            row.fp += 1;
        }
    }
    row.ground_truth += g.len();
    row.fn_ += g
        .iter()
        .filter(|x| !p.iter().any(|a| a.segments.intersects(&x.segments)))
        .count();
}

pub fn evaluate(
    preds: &[AnnotatedStatement],
    golds: &[AnnotatedStatement],
    opts: &EvalOptions,
) -> Result<EvalReport, EvalError> {
    let pairs = aligned(preds, golds)?;
    let excluded: HashSet<Concept> = opts.excluded.iter().copied().collect();

    let mut seen: HashSet<Concept> = HashSet::new();
    for (p, g) in &pairs {
        seen.extend(p.annotations.iter().chain(&g.annotations).map(|a| a.concept));
    }
    let mut rows: Vec<Row> = Vec::new();
    let actor_seen = seen.iter().any(|c| c.is_actor_family());
    for c in Concept::phrase_level() {
        if excluded.contains(&c) {
            continue;
        }
        let subtype = c.is_actor_family() && c != Concept::Actor;
        let present = if c == Concept::Actor { actor_seen } else { seen.contains(&c) };
        if present {
            rows.push(Row::new(c, subtype));
        }
    }
    let mut excluded_gt: BTreeMap<String, usize> = BTreeMap::new();
    for (p, g) in &pairs {
        for row in &mut rows {
            count_row(row, &p.annotations, &g.annotations);
        }
        for a in &g.annotations {
            if excluded.contains(&a.concept) {
                *excluded_gt.entry(a.concept.name().to_string()).or_default() += 1;
            }
        }
    }
    let mut sum = Row::new(Concept::Action, false);
    for r in rows.iter().filter(|r| !r.subtype) {
        sum.add(r);
    }
    let phrase_total = Totals::from_row(&sum, sum.ground_truth + excluded_gt.values().sum::<usize>());

    let mut st: BTreeMap<Concept, Row> = BTreeMap::new();
    for (p, g) in &pairs {
        let gt = p.statement_type;
        let gold_type = g.statement_type;
        st.entry(gold_type).or_insert_with(|| Row::new(gold_type, false)).ground_truth += 1;
        let prow = st.entry(gt).or_insert_with(|| Row::new(gt, false));
        prow.extracted += 1;
        if gt == gold_type {
            prow.tp += 1;
        } else {
            prow.fp += 1;
            st.get_mut(&gold_type).expect("inserted above").fn_ += 1;
        }
    }
    let statement: Vec<Row> = Concept::STATEMENT_LEVEL
        .iter()
        .filter_map(|c| st.get(c).cloned())
        .collect();
    let mut ssum = Row::new(Concept::Obligation, false);
    for r in &statement {
        ssum.add(r);
    }
    let statement_total = Totals::from_row(&ssum, ssum.ground_truth);

    let mut excluded_list = opts.excluded.clone();
    excluded_list.sort();
    excluded_list.dedup();
    Ok(EvalReport {
        matching: MATCHING_NOTE.to_string(),
        phrase: rows,
        phrase_total,
        statement,
        statement_total,
        excluded: excluded_list,
        excluded_ground_truth: excluded_gt,
    })
}

impl EvalReport {
    /// Aligned plain-text table.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# {}", self.matching).unwrap();
        if !self.excluded.is_empty() {
            let names: Vec<&str> = self.excluded.iter().map(|c| c.name()).collect();
            writeln!(out, "# excluded: {}", names.join(", ")).unwrap();
        }
        let header = format!(
            "{:<18} {:>9} {:>7} {:>13} {:>7} {:>12} {:>9} {:>7}",
            "concept", "extracted", "match", "misclassified", "missed", "ground truth", "precision", "recall"
        );
        let line = |out: &mut String, name: &str, r: &Totals| {
            writeln!(
                out,
                "{:<18} {:>9} {:>7} {:>13} {:>7} {:>12} {:>9} {:>7}",
                name,
                r.extracted,
                r.tp,
                r.fp,
                r.fn_,
                r.ground_truth,
                pct(r.precision),
                pct(r.recall)
            )
            .unwrap();
        };
        for (title, rows, total) in [
            ("phrase level", &self.phrase, &self.phrase_total),
            ("statement level", &self.statement, &self.statement_total),
        ] {
            writeln!(out, "\n{}", title).unwrap();
            writeln!(out, "{}", header).unwrap();
            for r in rows {
                let name = if r.subtype { format!("  {}", r.concept) } else { r.concept.to_string() };
                line(&mut out, &name, &Totals::from_row(r, r.ground_truth));
            }
            if title == "phrase level" {
                for (name, gt) in &self.excluded_ground_truth {
                    writeln!(out, "{:<18} {:>9} {:>7} {:>13} {:>7} {:>12} {:>9} {:>7}", format!("({})", name), "-", "-", "-", "-", gt, "-", "-").unwrap();
                }
            }
            line(&mut out, "subtotal", total);
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaResult {
    pub items: usize,
    pub observed: f64,
    pub expected: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KappaError {
    #[error("neither annotator annotated anything")]
    EmptyUnion,
    #[error(transparent)]
    Ids(#[from] EvalError),
}

pub const NONE_LABEL: &str = "none";

/// Cohen's kappa over paired categorical labels.
pub fn kappa_from_labels<S: AsRef<str>>(pairs: &[(S, S)]) -> Result<KappaResult, KappaError> {
    if pairs.is_empty() {
        return Err(KappaError::EmptyUnion);
    }
    let n = pairs.len() as f64;
    let agree = pairs.iter().filter(|(a, b)| a.as_ref() == b.as_ref()).count();
    let mut ma: BTreeMap<&str, usize> = BTreeMap::new();
    let mut mb: BTreeMap<&str, usize> = BTreeMap::new();
    for (a, b) in pairs {
        *ma.entry(a.as_ref()).or_default() += 1;
        *mb.entry(b.as_ref()).or_default() += 1;
    }
    let expected: f64 = ma
        .iter()
        .map(|(k, &ca)| ca as f64 * mb.get(k).copied().unwrap_or(0) as f64)
        .sum::<f64>()
        / (n * n);
    let observed = agree as f64 / n;
    let kappa = if expected == 1.0 {
        1.0
    } else {
        (observed - expected) / (1.0 - expected)
    };
    Ok(KappaResult {
        items: pairs.len(),
        observed,
        expected,
        kappa,
    })
}

fn labels_by_span(anns: &[Annotation]) -> BTreeMap<&SegmentSet, String> {
    let mut by: BTreeMap<&SegmentSet, Vec<&str>> = BTreeMap::new();
    for a in anns {
        by.entry(&a.segments).or_default().push(a.concept.name());
    }
    by.into_iter()
        .map(|(k, mut v)| {
            v.sort_unstable();
            v.dedup();
            (k, v.join("+"))
        })
        .collect()
}

/// Agreement between two annotators. Items are the distinct spans either of
/// them annotated; an annotator who left a span unannotated contributes
/// `none`, and several types on one span form a joint label.
pub fn cohen_kappa(a: &[AnnotatedStatement], b: &[AnnotatedStatement]) -> Result<KappaResult, KappaError> {
    let pairs = aligned(a, b)?;
    let mut labels: Vec<(String, String)> = Vec::new();
    for (x, y) in pairs {
        let lx = labels_by_span(&x.annotations);
        let ly = labels_by_span(&y.annotations);
        let mut spans: Vec<&SegmentSet> = lx.keys().chain(ly.keys()).copied().collect();
        spans.sort();
        spans.dedup();
        for sp in spans {
            let get = |m: &BTreeMap<&SegmentSet, String>| m.get(sp).cloned().unwrap_or_else(|| NONE_LABEL.to_string());
            labels.push((get(&lx), get(&ly)));
        }
    }
    kappa_from_labels(&labels)
}
