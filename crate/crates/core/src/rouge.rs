//! ROUGE-N and ROUGE-L scoring.
//!
//! ROUGE-N counts clipped n-gram matches: each reference n-gram is credited
//! `min(reference count, candidate count)` times. Recall divides by the
//! reference n-gram total, precision by the candidate total. ROUGE-L uses the
//! longest common subsequence in place of the overlap count.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::preprocess::is_punctuation;

/// A tokenized text. Tokens are never empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct TokenSeq(Vec<String>);

impl TokenSeq {
    /// Wraps pre-split tokens, dropping empty strings.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        TokenSeq(tokens.into_iter().map(Into::into).filter(|t: &String| !t.is_empty()).collect())
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Lowercases, then splits on whitespace and punctuation, dropping the
/// punctuation.
pub fn tokenize(text: &str) -> TokenSeq {
    TokenSeq(
        text.to_lowercase()
            .split(|c: char| c.is_whitespace() || is_punctuation(c))
            .filter(|t| !t.is_empty())
            .map(str::to_string)
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NGramMultiset {
    n: usize,
    counts: HashMap<Vec<String>, usize>,
}

impl NGramMultiset {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, gram: &[String]) -> usize {
        self.counts.get(gram).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[String], usize)> {
        self.counts.iter().map(|(g, &c)| (g.as_slice(), c))
    }

    fn absorb(&mut self, other: NGramMultiset) {
        for (gram, c) in other.counts {
            *self.counts.entry(gram).or_insert(0) += c;
        }
    }

    /// Sum over this multiset's grams of `min(count here, count in other)`.
    pub fn clipped_overlap(&self, other: &NGramMultiset) -> usize {
        self.counts.iter().map(|(g, &c)| c.min(other.get(g))).sum()
    }
}

/// Sliding-window n-gram counts.
///
/// # Panics
/// If `n` is 0.
pub fn count_ngrams(seq: &TokenSeq, n: usize) -> NGramMultiset {
    assert!(n >= 1, "n-gram order must be positive");
    let mut counts = HashMap::new();
    for w in seq.0.windows(n) {
        *counts.entry(w.to_vec()).or_insert(0) += 1;
    }
    NGramMultiset { n, counts }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RougeScore {
    #[serde(rename = "r")]
    pub recall: f64,
    #[serde(rename = "p")]
    pub precision: f64,
    #[serde(rename = "f")]
    pub f1: f64,
}

impl RougeScore {
    pub const ZERO: RougeScore = RougeScore {
        recall: 0.0,
        precision: 0.0,
        f1: 0.0,
    };

    pub fn new(recall: f64, precision: f64) -> Self {
        let f1 = if recall + precision == 0.0 {
            0.0
        } else {
            2.0 * recall * precision / (recall + precision)
        };
        RougeScore { recall, precision, f1 }
    }

    /// Scores from a match count; a zero denominator gives 0 for that field.
    pub fn from_counts(matched: usize, reference_total: usize, candidate_total: usize) -> Self {
        let ratio = |den: usize| if den == 0 { 0.0 } else { matched as f64 / den as f64 };
        RougeScore::new(ratio(reference_total), ratio(candidate_total))
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RougeError {
    #[error("at least one reference is required")]
    NoReferences,
    #[error("n-gram order must be positive")]
    ZeroOrder,
    #[error("no candidate/reference pairs to score")]
    NoPairs,
}

/// How several references combine in ROUGE-N.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiReference {
    /// Reference counts are summed into one multiset.
    #[default]
    Pool,
    /// Each reference is scored alone; the best F1 wins (ties: higher recall).
    Max,
}

pub fn rouge_n(candidate: &TokenSeq, references: &[TokenSeq], n: usize) -> Result<RougeScore, RougeError> {
    rouge_n_with(candidate, references, n, MultiReference::Pool)
}

pub fn rouge_n_with(
    candidate: &TokenSeq,
    references: &[TokenSeq],
    n: usize,
    mode: MultiReference,
) -> Result<RougeScore, RougeError> {
    if n == 0 {
        return Err(RougeError::ZeroOrder);
    }
    if references.is_empty() {
        return Err(RougeError::NoReferences);
    }
    let cand = count_ngrams(candidate, n);
    let score_against = |reference: &NGramMultiset| {
        RougeScore::from_counts(reference.clipped_overlap(&cand), reference.total(), cand.total())
    };
    Ok(match mode {
        MultiReference::Pool => {
            let mut pooled = count_ngrams(&references[0], n);
            for r in &references[1..] {
                pooled.absorb(count_ngrams(r, n));
            }
            score_against(&pooled)
        }
        MultiReference::Max => references
            .iter()
            .map(|r| score_against(&count_ngrams(r, n)))
            .max_by(|a, b| a.f1.total_cmp(&b.f1).then(a.recall.total_cmp(&b.recall)))
            .unwrap(),
    })
}

/// Longest common subsequence length over any comparable items.
///
/// Single-row dynamic programme over the shorter input: O(m·n) time,
/// O(min(m, n)) memory.
pub fn lcs_len<T: PartialEq>(x: &[T], y: &[T]) -> usize {
    let (long, short) = if x.len() >= y.len() { (x, y) } else { (y, x) };
    let mut row = vec![0usize; short.len() + 1];
    for a in long {
        // diag holds row[j-1] from the previous iteration of the outer loop
        let mut diag = 0;
        for (j, b) in short.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if a == b { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[short.len()]
}

pub fn lcs_length(x: &TokenSeq, y: &TokenSeq) -> usize {
    lcs_len(x.tokens(), y.tokens())
}

pub fn rouge_l(candidate: &TokenSeq, reference: &TokenSeq) -> RougeScore {
    RougeScore::from_counts(lcs_length(candidate, reference), reference.len(), candidate.len())
}

/// Macro-averaged scores over a set of pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    #[serde(flatten)]
    pub metrics: BTreeMap<String, RougeScore>,
    pub pairs: usize,
}

pub fn metric_name_n(n: usize) -> String {
    format!("rouge-{n}")
}

pub const ROUGE_L: &str = "rouge-l";

/// Scores each (candidate, reference) pair and averages every field across
/// pairs. Keys are `rouge-<n>` for each requested order plus `rouge-l`.
pub fn score_corpus<C, R>(pairs: &[(C, R)], ns: &BTreeSet<usize>) -> Result<ScoreReport, RougeError>
where
    C: AsRef<str>,
    R: AsRef<str>,
{
    score_corpus_with(pairs, ns, MultiReference::Pool)
}

pub fn score_corpus_with<C, R>(
    pairs: &[(C, R)],
    ns: &BTreeSet<usize>,
    mode: MultiReference,
) -> Result<ScoreReport, RougeError>
where
    C: AsRef<str>,
    R: AsRef<str>,
{
    if pairs.is_empty() {
        return Err(RougeError::NoPairs);
    }
    if ns.contains(&0) {
        return Err(RougeError::ZeroOrder);
    }
    let mut sums: BTreeMap<String, [f64; 3]> = BTreeMap::new();
    let mut add = |key: String, s: RougeScore| {
        let acc = sums.entry(key).or_insert([0.0; 3]);
        acc[0] += s.recall;
        acc[1] += s.precision;
        acc[2] += s.f1;
    };
    for (cand, reference) in pairs {
        let cand = tokenize(cand.as_ref());
        let reference = [tokenize(reference.as_ref())];
        for &n in ns {
            add(metric_name_n(n), rouge_n_with(&cand, &reference, n, mode)?);
        }
        add(ROUGE_L.to_string(), rouge_l(&cand, &reference[0]));
    }
    let count = pairs.len() as f64;
    let metrics = sums
        .into_iter()
        .map(|(k, [r, p, f])| {
            (
                k,
                RougeScore {
                    recall: r / count,
                    precision: p / count,
                    f1: f / count,
                },
            )
        })
        .collect();
    Ok(ScoreReport {
        metrics,
        pairs: pairs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(tokens: &[&str]) -> TokenSeq {
        TokenSeq::from_tokens(tokens.iter().copied())
    }

    #[test]
    fn tokenizer_examples() {
        assert_eq!(tokenize("The cat sat."), seq(&["the", "cat", "sat"]));
        assert_eq!(tokenize(""), seq(&[]));
        assert_eq!(tokenize("Q: why-not?"), seq(&["q", "why", "not"]));
        assert_eq!(tokenize("Über „Straße“…"), seq(&["über", "straße"]));
    }

    #[test]
    fn ngram_examples() {
        let m = count_ngrams(&seq(&["a", "b", "a"]), 1);
        assert_eq!(m.get(&["a".to_string()]), 2);
        assert_eq!(m.get(&["b".to_string()]), 1);
        assert_eq!(count_ngrams(&seq(&["a", "b"]), 3).total(), 0);
        let m = count_ngrams(&seq(&["a", "b", "a", "b"]), 2);
        assert_eq!(m.get(&["a".into(), "b".into()]), 2);
        assert_eq!(m.get(&["b".into(), "a".into()]), 1);
        assert_eq!(m.distinct(), 2);
        assert_eq!(m.total(), 3);
    }

    #[test]
    fn rouge_n_examples() {
        let s = seq(&["the", "cat", "sat"]);
        assert_eq!(rouge_n(&s, std::slice::from_ref(&s), 1).unwrap(), RougeScore::new(1.0, 1.0));
        let cand = seq(&["the", "cat", "sat", "on", "mat"]);
        let reference = seq(&["the", "cat", "on", "the", "mat"]);
        let score = rouge_n(&cand, &[reference], 2).unwrap();
        assert!((score.recall - 0.25).abs() < 1e-12);
        assert!((score.precision - 0.25).abs() < 1e-12);
        let zero = rouge_n(&seq(&["a"]), &[seq(&["b"])], 1).unwrap();
        assert_eq!(zero, RougeScore::ZERO);
        assert_eq!(rouge_n(&s, &[], 1), Err(RougeError::NoReferences));
        assert_eq!(rouge_n(&s, std::slice::from_ref(&s), 0), Err(RougeError::ZeroOrder));
    }

    #[test]
    fn multi_reference_modes() {
        let cand = seq(&["a", "b"]);
        let refs = [seq(&["a", "b"]), seq(&["c", "d"])];
        let pooled = rouge_n(&cand, &refs, 1).unwrap();
        assert_eq!(pooled.recall, 0.5);
        assert_eq!(pooled.precision, 1.0);
        let best = rouge_n_with(&cand, &refs, 1, MultiReference::Max).unwrap();
        assert_eq!(best, RougeScore::new(1.0, 1.0));
    }

    #[test]
    fn lcs_examples() {
        let x = seq(&["A", "B", "C", "B", "D", "A", "B"]);
        let y = seq(&["B", "D", "C", "A", "B", "A"]);
        assert_eq!(lcs_length(&x, &y), 4);
        assert_eq!(lcs_length(&x, &x), 7);
        assert_eq!(lcs_length(&x, &seq(&[])), 0);
    }

    #[test]
    fn rouge_l_examples() {
        let s = seq(&["a", "b"]);
        assert_eq!(rouge_l(&s, &s), RougeScore::new(1.0, 1.0));
        assert_eq!(rouge_l(&seq(&["a"]), &seq(&["b"])), RougeScore::ZERO);
        let r = rouge_l(&seq(&["a", "c"]), &seq(&["a", "b", "c"]));
        assert!((r.recall - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.precision, 1.0);
        assert!((r.f1 - 0.8).abs() < 1e-12);
        assert_eq!(rouge_l(&seq(&[]), &seq(&[])), RougeScore::ZERO);
    }

    #[test]
    fn corpus_scoring() {
        let ns: BTreeSet<usize> = [1, 2].into();
        let report = score_corpus(&[("the cat sat", "the cat sat")], &ns).unwrap();
        assert_eq!(report.metrics.keys().collect::<Vec<_>>(), ["rouge-1", "rouge-2", "rouge-l"]);
        assert!(report.metrics.values().all(|s| *s == RougeScore::new(1.0, 1.0)));
        let report = score_corpus(&[("a b", "a b"), ("c d", "e f")], &ns).unwrap();
        assert_eq!(report.metrics["rouge-1"].recall, 0.5);
        assert_eq!(report.pairs, 2);
        let empty: [(&str, &str); 0] = [];
        assert_eq!(score_corpus(&empty, &ns), Err(RougeError::NoPairs));
    }

    #[test]
    fn report_json_shape() {
        let report = score_corpus(&[("x y", "x y")], &[1].into()).unwrap();
        let json = serde_json::to_string(&report).unwrap();
        assert_eq!(
            json,
            r#"{"rouge-1":{"r":1.0,"p":1.0,"f":1.0},"rouge-l":{"r":1.0,"p":1.0,"f":1.0},"pairs":1}"#
        );
        let back: ScoreReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }

    fn small_seq() -> impl Strategy<Value = TokenSeq> {
        proptest::collection::vec(prop_oneof![Just("a"), Just("b"), Just("c")], 0..12)
            .prop_map(TokenSeq::from_tokens)
    }

    proptest! {
        #[test]
        fn lcs_is_symmetric(x in small_seq(), y in small_seq()) {
            prop_assert_eq!(lcs_length(&x, &y), lcs_length(&y, &x));
        }

        #[test]
        fn scores_are_bounded(x in small_seq(), y in small_seq(), n in 1usize..4) {
            for s in [rouge_n(&x, std::slice::from_ref(&y), n).unwrap(), rouge_l(&x, &y)] {
                for v in [s.recall, s.precision, s.f1] {
                    prop_assert!((0.0..=1.0).contains(&v));
                }
            }
        }

        #[test]
        fn superset_candidate_has_full_recall(reference in small_seq(), extra in small_seq(), n in 1usize..3) {
            prop_assume!(reference.len() >= n);
            let mut tokens = reference.tokens().to_vec();
            tokens.extend(extra.tokens().iter().cloned());
            let cand = TokenSeq::from_tokens(tokens);
            prop_assert_eq!(rouge_n(&cand, &[reference], n).unwrap().recall, 1.0);
        }

        #[test]
        fn appending_matching_token_never_lowers_overlap(
            cand in small_seq(), reference in small_seq(), pick in 0usize..12, n in 1usize..3,
        ) {
            prop_assume!(!reference.is_empty());
            let r = count_ngrams(&reference, n);
            let before = r.clipped_overlap(&count_ngrams(&cand, n));
            let mut tokens = cand.tokens().to_vec();
            tokens.push(reference.tokens()[pick % reference.len()].clone());
            let after = r.clipped_overlap(&count_ngrams(&TokenSeq::from_tokens(tokens), n));
            prop_assert!(after >= before);
        }

        #[test]
        fn tokenizer_is_deterministic(text in "\\PC{0,40}") {
            let a = tokenize(&text);
            prop_assert_eq!(&a, &tokenize(&text));
            prop_assert!(a.tokens().iter().all(|t| !t.is_empty()));
        }
    }
}
