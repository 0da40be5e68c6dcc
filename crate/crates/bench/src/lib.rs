//! Inputs shared by the benchmarks.

use legalmeta::corpus::StatementRecord;
use legalmeta::{parse_corpus, LoadOptions, Statement};

const MICRO_CORPUS: &str = include_str!("../../core/tests/fixtures/micro_corpus.jsonl");

pub fn micro_corpus() -> Vec<Statement> {
    parse_corpus(MICRO_CORPUS, &LoadOptions::default())
        .expect("fixture corpus loads")
        .statements
}

/// `copies` renamed copies of the micro corpus.
pub fn replicated_corpus(copies: usize) -> Vec<Statement> {
    let base = micro_corpus();
    let map = LoadOptions::default();
    let mut out = Vec::with_capacity(base.len() * copies);
    for i in 0..copies {
        for s in &base {
            let mut rec = StatementRecord::from_statement(s);
            rec.id = format!("{}-{:04}", rec.id, i);
            let line = serde_json::to_string(&rec).expect("record serializes");
            out.extend(parse_corpus(&line, &map).expect("copy loads").statements);
        }
    }
    out
}
