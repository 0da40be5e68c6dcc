use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Half-open token range `[start, end)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end, "span start {} > end {}", start, end);
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn intersects(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn contains_index(&self, i: usize) -> bool {
        self.start <= i && i < self.end
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{})", self.start, self.end)
    }
}

impl Serialize for Span {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.start, self.end].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Span {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [start, end] = <[usize; 2]>::deserialize(d)?;
        if start >= end {
            return Err(serde::de::Error::custom(format!(
                "span [{},{}) is empty or reversed",
                start, end
            )));
        }
        Ok(Span { start, end })
    }
}

/// Sorted, pairwise-disjoint, non-empty spans. Adjacent spans are kept apart
/// so that removal holes stay visible.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct SegmentSet(Vec<Span>);

impl SegmentSet {
    pub fn single(span: Span) -> Self {
        SegmentSet(vec![span])
    }

    /// Builds a set from arbitrary spans; returns `None` when they overlap or
    /// any is empty.
    pub fn from_spans(mut spans: Vec<Span>) -> Option<Self> {
        spans.sort();
        if spans.iter().any(|s| s.is_empty()) {
            return None;
        }
        if spans.windows(2).any(|w| w[0].end > w[1].start) {
            return None;
        }
        Some(SegmentSet(spans))
    }

    pub fn spans(&self) -> &[Span] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Smallest span covering every segment.
    pub fn bounds(&self) -> Span {
        match (self.0.first(), self.0.last()) {
            (Some(a), Some(b)) => Span::new(a.start, b.end),
            _ => Span::new(0, 0),
        }
    }

    pub fn token_count(&self) -> usize {
        self.0.iter().map(Span::len).sum()
    }

    pub fn covers(&self, i: usize) -> bool {
        self.0.iter().any(|s| s.contains_index(i))
    }

    /// True when every token of `other` is covered by `self`.
    pub fn contains(&self, other: &SegmentSet) -> bool {
        other
            .0
            .iter()
            .all(|o| (o.start..o.end).all(|i| self.covers(i)))
    }

    pub fn intersects(&self, other: &SegmentSet) -> bool {
        self.0
            .iter()
            .any(|a| other.0.iter().any(|b| a.intersects(b)))
    }

    /// `span` minus the union of `removed`, as maximal runs.
    pub fn subtract(span: Span, removed: &[Span]) -> SegmentSet {
        let mut out = Vec::new();
        let mut run_start: Option<usize> = None;
        for i in span.start..span.end {
            let hit = removed.iter().any(|r| r.contains_index(i));
            match (hit, run_start) {
                (false, None) => run_start = Some(i),
                (true, Some(s)) => {
                    out.push(Span::new(s, i));
                    run_start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = run_start {
            out.push(Span::new(s, span.end));
        }
        SegmentSet(out)
    }
}

impl Serialize for SegmentSet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SegmentSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let spans = Vec::<Span>::deserialize(d)?;
        if spans.is_empty() {
            return Err(serde::de::Error::custom("annotation has no segments"));
        }
        SegmentSet::from_spans(spans)
            .ok_or_else(|| serde::de::Error::custom("segments overlap"))
    }
}
