//! Window-based dialogue corruption for denoising training pairs.
//!
//! A window of consecutive turns is selected and up to five corruptions run
//! over it, always in the order speaker mask, turn split, turn merge, text
//! infill, turn permutation. Every random choice is drawn from one ChaCha8
//! stream per (seed, dialogue, replica) and written to the plan's
//! `op_trace`, so the corruption can be replayed without the generator.

use std::collections::BTreeSet;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{DenoisePair, Dialogue, DialogueError, Turn, MASK_SPEAKER};

/// Token that replaces an infilled span.
pub const MASK_TOKEN: &str = "[MASK]";

pub type NoiseRng = ChaCha8Rng;

/// Derives the generator for one dialogue replica.
///
/// The 32-byte ChaCha seed is SHA-256 over `seed` (LE), `replica` (LE) and
/// the UTF-8 interview id, so streams are independent of corpus order and
/// of how many threads process the corpus.
pub fn dialogue_rng(seed: u64, interview_id: &str, replica: u32) -> NoiseRng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(replica.to_le_bytes());
    hasher.update(interview_id.as_bytes());
    ChaCha8Rng::from_seed(hasher.finalize().into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseOp {
    SpeakerMask,
    TurnSplit,
    TurnMerge,
    TextInfill,
    TurnPermute,
}

impl NoiseOp {
    pub const CANONICAL_ORDER: [NoiseOp; 5] = [
        NoiseOp::SpeakerMask,
        NoiseOp::TurnSplit,
        NoiseOp::TurnMerge,
        NoiseOp::TextInfill,
        NoiseOp::TurnPermute,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NoiseOp::SpeakerMask => "speaker_mask",
            NoiseOp::TurnSplit => "turn_split",
            NoiseOp::TurnMerge => "turn_merge",
            NoiseOp::TextInfill => "text_infill",
            NoiseOp::TurnPermute => "turn_permute",
        }
    }
}

/// What a speaker-mask ratio counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeakerMaskMode {
    /// A fraction of the window's turns.
    #[default]
    PerTurn,
    /// A fraction of the window's distinct speakers; all their turns are masked.
    PerSpeaker,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub seed: u64,
    pub speaker_mask_ratio: f64,
    pub speaker_mask_mode: SpeakerMaskMode,
    /// Poisson mean of infill span lengths.
    pub infill_lambda: f64,
    pub infill_token_ratio: f64,
    pub merge_probability: f64,
    pub split_parts: usize,
    pub window_fraction: f64,
    pub enabled_ops: Vec<NoiseOp>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            seed: 42,
            speaker_mask_ratio: 0.5,
            speaker_mask_mode: SpeakerMaskMode::PerTurn,
            infill_lambda: 3.0,
            infill_token_ratio: 0.15,
            merge_probability: 0.3,
            split_parts: 2,
            window_fraction: 1.0,
            enabled_ops: NoiseOp::CANONICAL_ORDER.to_vec(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum NoiseConfigError {
    #[error("{field} must be in [0, 1], got {value}")]
    FractionOutOfRange { field: &'static str, value: f64 },
    #[error("window_fraction must be in (0, 1], got {0}")]
    WindowFraction(f64),
    #[error("infill_lambda must be positive and finite, got {0}")]
    Lambda(f64),
    #[error("split_parts must be at least 2, got {0}")]
    SplitParts(usize),
    #[error("enabled_ops must not be empty")]
    NoOps,
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<(), NoiseConfigError> {
        for (field, value) in [
            ("speaker_mask_ratio", self.speaker_mask_ratio),
            ("infill_token_ratio", self.infill_token_ratio),
            ("merge_probability", self.merge_probability),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(NoiseConfigError::FractionOutOfRange { field, value });
            }
        }
        if !(self.window_fraction > 0.0 && self.window_fraction <= 1.0) {
            return Err(NoiseConfigError::WindowFraction(self.window_fraction));
        }
        if !(self.infill_lambda > 0.0 && self.infill_lambda.is_finite()) {
            return Err(NoiseConfigError::Lambda(self.infill_lambda));
        }
        if self.split_parts < 2 {
            return Err(NoiseConfigError::SplitParts(self.split_parts));
        }
        if self.enabled_ops.is_empty() {
            return Err(NoiseConfigError::NoOps);
        }
        Ok(())
    }

    /// Enabled operations in canonical order.
    pub fn ops_in_order(&self) -> impl Iterator<Item = NoiseOp> + '_ {
        NoiseOp::CANONICAL_ORDER
            .into_iter()
            .filter(|op| self.enabled_ops.contains(op))
    }
}

/// A masked token span inside one turn of the window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskSpan {
    /// Position of the turn in the window at infill time.
    pub turn: usize,
    /// First masked whitespace token.
    pub start: usize,
    pub len: usize,
}

/// One executed corruption with every choice it made.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum OpRecord {
    /// Window positions whose speaker was masked, ascending.
    SpeakerMask { indices: Vec<usize> },
    /// Turn at `index` cut before each token offset in `cuts`; no cuts means no change.
    TurnSplit { index: usize, cuts: Vec<usize> },
    /// Sizes of consecutive groups merged into one turn each; sums to the window length.
    TurnMerge { groups: Vec<usize> },
    /// Spans in draw order.
    TextInfill { spans: Vec<MaskSpan> },
    /// Output position `i` holds input turn `order[i]`.
    TurnPermute { order: Vec<usize> },
}

impl OpRecord {
    pub fn op(&self) -> NoiseOp {
        match self {
            OpRecord::SpeakerMask { .. } => NoiseOp::SpeakerMask,
            OpRecord::TurnSplit { .. } => NoiseOp::TurnSplit,
            OpRecord::TurnMerge { .. } => NoiseOp::TurnMerge,
            OpRecord::TextInfill { .. } => NoiseOp::TextInfill,
            OpRecord::TurnPermute { .. } => NoiseOp::TurnPermute,
        }
    }
}

/// Where the window sits and what was done to it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorruptionPlan {
    pub window_start: usize,
    pub window_len: usize,
    pub op_trace: Vec<OpRecord>,
}

#[derive(Debug, Error, PartialEq)]
pub enum ReplayError {
    #[error("window {start}+{len} does not fit a dialogue of {turns} turns")]
    WindowOutOfRange { start: usize, len: usize, turns: usize },
    #[error("{op}: index {index} out of range for {len} turns")]
    IndexOutOfRange { op: &'static str, index: usize, len: usize },
    #[error("turn_split: cuts {0:?} are not strictly increasing inside the turn")]
    BadCuts(Vec<usize>),
    #[error("turn_merge: group sizes sum to {got}, window has {expected} turns")]
    GroupMismatch { got: usize, expected: usize },
    #[error("text_infill: span {0:?} overlaps another span or leaves its turn")]
    BadSpan(MaskSpan),
    #[error("turn_permute: {0:?} is not a permutation of the window")]
    BadPermutation(Vec<usize>),
    #[error(transparent)]
    Dialogue(#[from] DialogueError),
}

#[derive(Debug, Error, PartialEq)]
pub enum NoiseError {
    #[error(transparent)]
    Config(#[from] NoiseConfigError),
    #[error(transparent)]
    Dialogue(#[from] DialogueError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
}

fn round_count(ratio: f64, n: usize) -> usize {
    ((ratio * n as f64).round() as usize).min(n)
}

/// Picks the corruption window: `len = max(1, round(fraction * turns))`,
/// start uniform over the valid positions.
pub fn select_window(turns: usize, window_fraction: f64, rng: &mut impl Rng) -> (usize, usize) {
    assert!(turns > 0, "cannot select a window in an empty dialogue");
    let len = round_count(window_fraction, turns).max(1);
    let start = rng.random_range(0..=turns - len);
    (start, len)
}

// ----------------------------------------------------------------------------
// Planning: draw the random choices for one op.

pub fn plan_speaker_mask(window: &[Turn], ratio: f64, mode: SpeakerMaskMode, rng: &mut impl Rng) -> OpRecord {
    let mut indices = match mode {
        SpeakerMaskMode::PerTurn => {
            let count = round_count(ratio, window.len());
            index::sample(rng, window.len(), count).into_vec()
        }
        SpeakerMaskMode::PerSpeaker => {
            let mut speakers: Vec<&str> = Vec::new();
            for t in window {
                if !speakers.contains(&t.speaker.as_str()) {
                    speakers.push(&t.speaker);
                }
            }
            let count = round_count(ratio, speakers.len());
            let chosen: BTreeSet<&str> = index::sample(rng, speakers.len(), count)
                .into_iter()
                .map(|i| speakers[i])
                .collect();
            window
                .iter()
                .enumerate()
                .filter(|(_, t)| chosen.contains(t.speaker.as_str()))
                .map(|(i, _)| i)
                .collect()
        }
    };
    indices.sort_unstable();
    OpRecord::SpeakerMask { indices }
}

fn ends_sentence(token: &str) -> bool {
    let trimmed = token.trim_end_matches(['"', '\'', ')', ']', '\u{201d}', '\u{2019}', '\u{bb}']);
    trimmed.ends_with(['.', '!', '?', '\u{2026}'])
}

/// Index of the longest turn by character count; ties go to the earliest.
pub fn longest_turn(window: &[Turn]) -> Option<usize> {
    let mut best: Option<(usize, usize)> = None;
    for (i, t) in window.iter().enumerate() {
        let len = t.text.chars().count();
        if best.is_none_or(|(_, b)| len > b) {
            best = Some((i, len));
        }
    }
    best.map(|(i, _)| i)
}

/// Token offsets at which to cut `tokens` into `parts` fragments.
///
/// Cut `k` aims at `k/parts` of the text's character length and takes the
/// nearest sentence boundary that still leaves every fragment non-empty,
/// else the nearest token boundary. Fewer tokens than parts gives one
/// fragment per token.
pub fn split_points(tokens: &[&str], parts: usize) -> Vec<usize> {
    let parts = parts.min(tokens.len());
    if parts < 2 {
        return Vec::new();
    }
    // offsets[b] = character offset of token b in the space-joined text
    let mut offsets = Vec::with_capacity(tokens.len() + 1);
    let mut pos = 0usize;
    for tok in tokens {
        offsets.push(pos);
        pos += tok.chars().count() + 1;
    }
    let total = pos - 1;

    let mut cuts = Vec::with_capacity(parts - 1);
    let mut prev = 0usize;
    for k in 1..parts {
        let target = (k * total) as f64 / parts as f64;
        let lo = prev + 1;
        let hi = tokens.len() - (parts - k);
        let nearest = |sentence_only: bool| {
            (lo..=hi)
                .filter(|&b| !sentence_only || ends_sentence(tokens[b - 1]))
                .min_by(|&a, &b| {
                    let da = (offsets[a] as f64 - target).abs();
                    let db = (offsets[b] as f64 - target).abs();
                    da.total_cmp(&db).then(a.cmp(&b))
                })
        };
        let cut = nearest(true).or_else(|| nearest(false)).expect("range is non-empty");
        cuts.push(cut);
        prev = cut;
    }
    cuts
}

pub fn plan_turn_split(window: &[Turn], parts: usize) -> OpRecord {
    let index = longest_turn(window).expect("window is non-empty");
    let tokens: Vec<&str> = window[index].tokens().collect();
    OpRecord::TurnSplit {
        index,
        cuts: split_points(&tokens, parts),
    }
}

pub fn plan_turn_merge(window: &[Turn], p: f64, rng: &mut impl Rng) -> OpRecord {
    let mut groups = vec![1usize];
    for _ in 1..window.len() {
        if rng.random_bool(p) {
            *groups.last_mut().unwrap() += 1;
        } else {
            groups.push(1);
        }
    }
    OpRecord::TurnMerge { groups }
}

/// Draws infill spans until at least `token_ratio` of the window's tokens
/// are covered or no unmasked token remains. Lengths come from
/// Poisson(`lambda`) raised to at least 1, and are shortened to the longest
/// free run when nothing that long is left. Starts are uniform over every
/// placement that stays inside one turn and avoids earlier spans.
pub fn plan_text_infill(window: &[Turn], lambda: f64, token_ratio: f64, rng: &mut impl Rng) -> OpRecord {
    let poisson = Poisson::new(lambda).expect("lambda validated as positive and finite");
    // free runs of unmasked tokens: (turn, start, len)
    let mut runs: Vec<(usize, usize, usize)> = window
        .iter()
        .enumerate()
        .map(|(i, t)| (i, 0, t.tokens().count()))
        .filter(|r| r.2 > 0)
        .collect();
    let total: usize = runs.iter().map(|r| r.2).sum();
    let target = token_ratio * total as f64;

    let mut spans = Vec::new();
    let mut masked = 0usize;
    while (masked as f64) < target && !runs.is_empty() {
        let drawn = (poisson.sample(rng) as usize).max(1);
        let longest = runs.iter().map(|r| r.2).max().unwrap();
        let len = drawn.min(longest);
        let placements: usize = runs.iter().map(|r| r.2.saturating_sub(len - 1)).sum();
        let mut k = rng.random_range(0..placements);
        let ri = runs
            .iter()
            .position(|r| {
                let here = r.2.saturating_sub(len - 1);
                if k < here {
                    true
                } else {
                    k -= here;
                    false
                }
            })
            .unwrap();
        let (turn, run_start, run_len) = runs[ri];
        let start = run_start + k;
        let mut replacement = Vec::with_capacity(2);
        if start > run_start {
            replacement.push((turn, run_start, start - run_start));
        }
        let after = run_start + run_len - (start + len);
        if after > 0 {
            replacement.push((turn, start + len, after));
        }
        runs.splice(ri..=ri, replacement);
        spans.push(MaskSpan { turn, start, len });
        masked += len;
    }
    OpRecord::TextInfill { spans }
}

pub fn plan_turn_permute(window: &[Turn], rng: &mut impl Rng) -> OpRecord {
    let mut order: Vec<usize> = (0..window.len()).collect();
    // Fisher-Yates
    for i in (1..order.len()).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    OpRecord::TurnPermute { order }
}

// ----------------------------------------------------------------------------
// Application: execute a recorded op deterministically.

impl OpRecord {
    /// Applies the recorded choices to `window`, checking they fit it.
    pub fn apply(&self, mut window: Vec<Turn>) -> Result<Vec<Turn>, ReplayError> {
        let n = window.len();
        let out_of_range = |op: NoiseOp, index: usize| ReplayError::IndexOutOfRange {
            op: op.name(),
            index,
            len: n,
        };
        match self {
            OpRecord::SpeakerMask { indices } => {
                for &i in indices {
                    let turn = window.get_mut(i).ok_or_else(|| out_of_range(NoiseOp::SpeakerMask, i))?;
                    turn.speaker = MASK_SPEAKER.to_string();
                }
                Ok(window)
            }
            OpRecord::TurnSplit { index, cuts } => {
                let index = *index;
                if index >= n {
                    return Err(out_of_range(NoiseOp::TurnSplit, index));
                }
                if cuts.is_empty() {
                    return Ok(window);
                }
                let original = window[index].clone();
                let tokens: Vec<&str> = original.tokens().collect();
                let valid = cuts.windows(2).all(|w| w[0] < w[1])
                    && cuts[0] > 0
                    && *cuts.last().unwrap() < tokens.len();
                if !valid {
                    return Err(ReplayError::BadCuts(cuts.clone()));
                }
                let bounds: Vec<usize> = std::iter::once(0)
                    .chain(cuts.iter().copied())
                    .chain(std::iter::once(tokens.len()))
                    .collect();
                let fragments: Vec<Turn> = bounds
                    .windows(2)
                    .enumerate()
                    .map(|(k, w)| {
                        let mut t = original.clone();
                        t.text = tokens[w[0]..w[1]].join(" ");
                        if k > 0 {
                            t.speaker = MASK_SPEAKER.to_string();
                        }
                        t
                    })
                    .collect();
                window.splice(index..=index, fragments);
                Ok(window)
            }
            OpRecord::TurnMerge { groups } => {
                let got: usize = groups.iter().sum();
                if got != n || groups.contains(&0) {
                    return Err(ReplayError::GroupMismatch { got, expected: n });
                }
                let mut turns = window.into_iter();
                let merged = groups
                    .iter()
                    .map(|&size| {
                        let mut head = turns.next().unwrap();
                        for next in turns.by_ref().take(size - 1) {
                            head.text.push(' ');
                            head.text.push_str(&next.text);
                            head.tags.extend(next.tags);
                        }
                        head
                    })
                    .collect();
                Ok(merged)
            }
            OpRecord::TextInfill { spans } => {
                let mut masks: Vec<Vec<Option<usize>>> = window
                    .iter()
                    .map(|t| vec![None; t.tokens().count()])
                    .collect();
                for span in spans {
                    let slots = masks
                        .get_mut(span.turn)
                        .ok_or_else(|| out_of_range(NoiseOp::TextInfill, span.turn))?;
                    let end = span.start.checked_add(span.len).filter(|&e| e <= slots.len() && span.len > 0);
                    let Some(end) = end else {
                        return Err(ReplayError::BadSpan(*span));
                    };
                    if slots[span.start..end].iter().any(Option::is_some) {
                        return Err(ReplayError::BadSpan(*span));
                    }
                    slots[span.start] = Some(span.len);
                    for s in &mut slots[span.start + 1..end] {
                        *s = Some(0);
                    }
                }
                for (turn, slots) in window.iter_mut().zip(&masks) {
                    if slots.iter().all(Option::is_none) {
                        continue;
                    }
                    let tokens: Vec<&str> = turn.tokens().collect();
                    let rebuilt: Vec<&str> = tokens
                        .iter()
                        .zip(slots)
                        .filter_map(|(tok, slot)| match slot {
                            None => Some(*tok),
                            Some(0) => None,
                            Some(_) => Some(MASK_TOKEN),
                        })
                        .collect();
                    turn.text = rebuilt.join(" ");
                }
                Ok(window)
            }
            OpRecord::TurnPermute { order } => {
                let mut sorted = order.clone();
                sorted.sort_unstable();
                if sorted != (0..n).collect::<Vec<_>>() {
                    return Err(ReplayError::BadPermutation(order.clone()));
                }
                let mut slots: Vec<Option<Turn>> = window.into_iter().map(Some).collect();
                Ok(order.iter().map(|&i| slots[i].take().unwrap()).collect())
            }
        }
    }
}

// ----------------------------------------------------------------------------
// Single-op entry points.

fn run(record: OpRecord, window: &[Turn]) -> Vec<Turn> {
    record.apply(window.to_vec()).expect("freshly planned op fits its window")
}

/// Masks exactly `round(ratio * len)` speakers chosen without replacement.
pub fn speaker_mask(window: &[Turn], ratio: f64, rng: &mut impl Rng) -> Vec<Turn> {
    run(plan_speaker_mask(window, ratio, SpeakerMaskMode::PerTurn, rng), window)
}

/// Splits the longest turn into `parts` fragments; fragments after the first
/// are anonymized.
pub fn split_longest_turn(window: &[Turn], parts: usize) -> Vec<Turn> {
    run(plan_turn_split(window, parts), window)
}

/// Merges each adjacent pair with probability `p`, left to right; a merged
/// turn keeps the left speaker and can keep absorbing its right neighbour.
pub fn merge_turns(window: &[Turn], p: f64, rng: &mut impl Rng) -> Vec<Turn> {
    run(plan_turn_merge(window, p, rng), window)
}

pub fn infill_text(window: &[Turn], lambda: f64, token_ratio: f64, rng: &mut impl Rng) -> Vec<Turn> {
    run(plan_text_infill(window, lambda, token_ratio, rng), window)
}

pub fn permute_turns(window: &[Turn], rng: &mut impl Rng) -> Vec<Turn> {
    run(plan_turn_permute(window, rng), window)
}

// ----------------------------------------------------------------------------
// Composition.

fn plan_op(op: NoiseOp, window: &[Turn], cfg: &NoiseConfig, rng: &mut NoiseRng) -> OpRecord {
    match op {
        NoiseOp::SpeakerMask => plan_speaker_mask(window, cfg.speaker_mask_ratio, cfg.speaker_mask_mode, rng),
        NoiseOp::TurnSplit => plan_turn_split(window, cfg.split_parts),
        NoiseOp::TurnMerge => plan_turn_merge(window, cfg.merge_probability, rng),
        NoiseOp::TextInfill => plan_text_infill(window, cfg.infill_lambda, cfg.infill_token_ratio, rng),
        NoiseOp::TurnPermute => plan_turn_permute(window, rng),
    }
}

fn reassemble(original: &Dialogue, start: usize, len: usize, window: Vec<Turn>) -> Result<Dialogue, DialogueError> {
    let turns = original.turns[..start]
        .iter()
        .cloned()
        .chain(window)
        .chain(original.turns[start + len..].iter().cloned())
        .collect();
    Dialogue::from_ordered(original.interview_id.clone(), turns)
}

/// Corrupts one window of `dialogue` using replica 0 of its stream.
pub fn apply_window_denoise(dialogue: &Dialogue, cfg: &NoiseConfig) -> Result<DenoisePair, NoiseError> {
    denoise_replica(dialogue, cfg, 0)
}

/// Corrupts one window of `dialogue` using the given replica's stream.
///
/// Turns outside the window keep their content; all turns are re-indexed
/// since splitting and merging change the count.
pub fn denoise_replica(dialogue: &Dialogue, cfg: &NoiseConfig, replica: u32) -> Result<DenoisePair, NoiseError> {
    cfg.validate()?;
    dialogue.validate()?;
    let mut rng = dialogue_rng(cfg.seed, &dialogue.interview_id, replica);
    let (start, len) = select_window(dialogue.len(), cfg.window_fraction, &mut rng);
    let pristine = dialogue.turns[start..start + len].to_vec();

    let mut window = pristine.clone();
    let mut op_trace = Vec::new();
    for op in cfg.ops_in_order() {
        let record = plan_op(op, &window, cfg, &mut rng);
        window = record.apply(window)?;
        op_trace.push(record);
    }

    Ok(DenoisePair {
        dialogue_id: dialogue.interview_id.clone(),
        corrupted: reassemble(dialogue, start, len, window)?,
        reconstruction_target: Dialogue::from_ordered(dialogue.interview_id.clone(), pristine)?,
        plan: CorruptionPlan {
            window_start: start,
            window_len: len,
            op_trace,
        },
    })
}

/// Re-executes a plan against the original dialogue.
pub fn replay(original: &Dialogue, plan: &CorruptionPlan) -> Result<Dialogue, ReplayError> {
    let (start, len) = (plan.window_start, plan.window_len);
    if len == 0 || start.checked_add(len).is_none_or(|end| end > original.len()) {
        return Err(ReplayError::WindowOutOfRange {
            start,
            len,
            turns: original.len(),
        });
    }
    let mut window = original.turns[start..start + len].to_vec();
    for record in &plan.op_trace {
        window = record.apply(window)?;
    }
    Ok(reassemble(original, start, len, window)?)
}
