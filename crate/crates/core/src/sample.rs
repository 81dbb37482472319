//! Bundled synthetic sample: eight short robot-leadership interviews with one
//! reference summary each.

use crate::corpus::{parse_corpus, parse_summaries, Corpus, SummaryRecord};

pub const CORPUS_JSONL: &str = include_str!("../data/sample/corpus.jsonl");
pub const SUMMARIES_JSONL: &str = include_str!("../data/sample/summaries.jsonl");

pub fn corpus() -> Corpus {
    parse_corpus(CORPUS_JSONL).expect("bundled sample corpus is valid")
}

pub fn summaries() -> Vec<SummaryRecord> {
    parse_summaries(SUMMARIES_JSONL).expect("bundled sample summaries are valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::serialize_corpus;

    #[test]
    fn sample_shape() {
        let c = corpus();
        assert_eq!(c.len(), 8);
        assert_eq!(summaries().len(), 8);
        assert!(summaries().iter().all(|s| c.contains(&s.dialogue_id)));
        // the bundled file is already canonical
        assert_eq!(serialize_corpus(&c), CORPUS_JSONL);
    }
}
