//! Dialogue data model and the line-delimited record format.
//!
//! One turn per line:
//! `{"interview_id": str, "turn_index": int, "speaker": str, "role": "question"|"response"|"other",
//!   "text": str, "lang": str, "tags": [str]}`
//!
//! Fields the model does not know about are carried through untouched so a
//! parse/serialize cycle never loses data.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::noise::CorruptionPlan;

/// Speaker label written over masked or anonymized turns.
pub const MASK_SPEAKER: &str = "[MASK SPEAKER]";

/// Language tag used when a record does not carry one.
pub const UNDETERMINED_LANG: &str = "und";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Question,
    Response,
    #[default]
    Other,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Question => "question",
            Role::Response => "response",
            Role::Other => "other",
        })
    }
}

fn default_lang() -> String {
    UNDETERMINED_LANG.to_string()
}

/// A single utterance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub interview_id: String,
    pub turn_index: usize,
    pub speaker: String,
    #[serde(default)]
    pub role: Role,
    pub text: String,
    #[serde(default = "default_lang")]
    pub lang: String,
    #[serde(default)]
    pub tags: BTreeSet<String>,
    /// Unrecognised record fields, preserved verbatim.
    #[serde(flatten)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

impl Turn {
    pub fn new(
        interview_id: impl Into<String>,
        turn_index: usize,
        speaker: impl Into<String>,
        role: Role,
        text: impl Into<String>,
    ) -> Self {
        Turn {
            interview_id: interview_id.into(),
            turn_index,
            speaker: speaker.into(),
            role,
            text: text.into(),
            lang: default_lang(),
            tags: BTreeSet::new(),
            extra: BTreeMap::new(),
        }
    }

    pub fn is_speaker_masked(&self) -> bool {
        self.speaker == MASK_SPEAKER
    }

    /// Whitespace-delimited tokens of the turn text.
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.text.split_whitespace()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum DialogueError {
    #[error("dialogue {0} has no turns")]
    Empty(String),
    #[error("turn {turn_index} belongs to {found}, expected {expected}")]
    MixedInterview {
        expected: String,
        found: String,
        turn_index: usize,
    },
    #[error("non-contiguous turn_index at {interview_id} (expected {expected}, found {found})")]
    NonContiguous {
        interview_id: String,
        expected: usize,
        found: usize,
    },
    #[error("empty speaker at ({interview_id},{turn_index})")]
    EmptySpeaker {
        interview_id: String,
        turn_index: usize,
    },
}

/// The ordered turns of one interview.
#[derive(Debug, Clone, PartialEq)]
pub struct Dialogue {
    pub interview_id: String,
    pub turns: Vec<Turn>,
}

impl Dialogue {
    /// Builds a dialogue, checking that turns share the interview id and are
    /// indexed 0, 1, 2, ... in order.
    pub fn new(interview_id: impl Into<String>, turns: Vec<Turn>) -> Result<Self, DialogueError> {
        let dialogue = Dialogue {
            interview_id: interview_id.into(),
            turns,
        };
        dialogue.validate()?;
        Ok(dialogue)
    }

    /// Builds a dialogue from turns in their final order, rewriting
    /// `interview_id` and `turn_index` so the result is valid.
    pub fn from_ordered(interview_id: impl Into<String>, mut turns: Vec<Turn>) -> Result<Self, DialogueError> {
        let interview_id = interview_id.into();
        for (i, turn) in turns.iter_mut().enumerate() {
            turn.turn_index = i;
            turn.interview_id.clone_from(&interview_id);
        }
        Dialogue::new(interview_id, turns)
    }

    pub fn validate(&self) -> Result<(), DialogueError> {
        if self.turns.is_empty() {
            return Err(DialogueError::Empty(self.interview_id.clone()));
        }
        for (expected, turn) in self.turns.iter().enumerate() {
            if turn.interview_id != self.interview_id {
                return Err(DialogueError::MixedInterview {
                    expected: self.interview_id.clone(),
                    found: turn.interview_id.clone(),
                    turn_index: turn.turn_index,
                });
            }
            if turn.turn_index != expected {
                return Err(DialogueError::NonContiguous {
                    interview_id: self.interview_id.clone(),
                    expected,
                    found: turn.turn_index,
                });
            }
            if turn.speaker.trim().is_empty() {
                return Err(DialogueError::EmptySpeaker {
                    interview_id: self.interview_id.clone(),
                    turn_index: turn.turn_index,
                });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.turns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }
}

/// Dialogues keyed and ordered by interview id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    dialogues: BTreeMap<String, Dialogue>,
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a dialogue, replacing any existing one with the same id.
    pub fn insert(&mut self, dialogue: Dialogue) -> Option<Dialogue> {
        self.dialogues.insert(dialogue.interview_id.clone(), dialogue)
    }

    pub fn get(&self, interview_id: &str) -> Option<&Dialogue> {
        self.dialogues.get(interview_id)
    }

    pub fn contains(&self, interview_id: &str) -> bool {
        self.dialogues.contains_key(interview_id)
    }

    pub fn dialogues(&self) -> impl ExactSizeIterator<Item = &Dialogue> {
        self.dialogues.values()
    }

    pub fn len(&self) -> usize {
        self.dialogues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dialogues.is_empty()
    }

    pub fn turn_count(&self) -> usize {
        self.dialogues.values().map(Dialogue::len).sum()
    }
}

impl FromIterator<Dialogue> for Corpus {
    fn from_iter<I: IntoIterator<Item = Dialogue>>(iter: I) -> Self {
        let mut corpus = Corpus::new();
        for d in iter {
            corpus.insert(d);
        }
        corpus
    }
}

impl IntoIterator for Corpus {
    type Item = Dialogue;
    type IntoIter = std::collections::btree_map::IntoValues<String, Dialogue>;

    fn into_iter(self) -> Self::IntoIter {
        self.dialogues.into_values()
    }
}

/// A dialogue rendered as source text together with a supplied summary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SummaryPair {
    pub dialogue_id: String,
    pub source_text: String,
    pub target_summary: String,
}

/// One line of a summary file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummaryRecord {
    pub dialogue_id: String,
    pub summary: String,
}

#[derive(Debug, Error, PartialEq)]
pub enum SummaryError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: empty summary for {dialogue_id}")]
    EmptySummary { line: usize, dialogue_id: String },
    #[error("line {line}: duplicate dialogue_id {dialogue_id}")]
    Duplicate { line: usize, dialogue_id: String },
    #[error("summary references unknown dialogue {0}")]
    UnknownDialogue(String),
}

impl SummaryPair {
    /// Pairs each summary with the Q/R source text of its dialogue.
    pub fn from_records(corpus: &Corpus, records: &[SummaryRecord]) -> Result<Vec<SummaryPair>, SummaryError> {
        records
            .iter()
            .map(|rec| {
                let dialogue = corpus
                    .get(&rec.dialogue_id)
                    .ok_or_else(|| SummaryError::UnknownDialogue(rec.dialogue_id.clone()))?;
                Ok(SummaryPair {
                    dialogue_id: rec.dialogue_id.clone(),
                    source_text: crate::preprocess::build_qr_text(dialogue),
                    target_summary: rec.summary.clone(),
                })
            })
            .collect()
    }
}

/// Parses a summary file. Ids must be unique within the file.
pub fn parse_summaries(input: &str) -> Result<Vec<SummaryRecord>, SummaryError> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (i, raw) in input.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let rec: SummaryRecord = serde_json::from_str(raw).map_err(|e| SummaryError::Malformed {
            line,
            message: e.to_string(),
        })?;
        if rec.summary.trim().is_empty() {
            return Err(SummaryError::EmptySummary {
                line,
                dialogue_id: rec.dialogue_id,
            });
        }
        if !seen.insert(rec.dialogue_id.clone()) {
            return Err(SummaryError::Duplicate {
                line,
                dialogue_id: rec.dialogue_id,
            });
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn serialize_summaries(records: &[SummaryRecord]) -> String {
    let mut out = String::new();
    for rec in records {
        out.push_str(&serde_json::to_string(rec).expect("summary records always serialize"));
        out.push('\n');
    }
    out
}

/// A corrupted dialogue with the pristine window it should be restored to.
#[derive(Debug, Clone, PartialEq)]
pub struct DenoisePair {
    pub dialogue_id: String,
    pub corrupted: Dialogue,
    /// The selected window before corruption, re-indexed from 0.
    pub reconstruction_target: Dialogue,
    pub plan: CorruptionPlan,
}

#[derive(Serialize, Deserialize)]
struct DenoiseRecord {
    dialogue_id: String,
    plan: CorruptionPlan,
    corrupted: Vec<Turn>,
    target: Vec<Turn>,
}

#[derive(Debug, Error)]
pub enum DenoiseRecordError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: {source}")]
    Invalid { line: usize, source: DialogueError },
}

impl DenoisePair {
    pub fn to_record(&self) -> String {
        let rec = DenoiseRecord {
            dialogue_id: self.dialogue_id.clone(),
            plan: self.plan.clone(),
            corrupted: self.corrupted.turns.clone(),
            target: self.reconstruction_target.turns.clone(),
        };
        serde_json::to_string(&rec).expect("denoise records always serialize")
    }
}

pub fn serialize_denoise_pairs(pairs: &[DenoisePair]) -> String {
    let mut out = String::new();
    for p in pairs {
        out.push_str(&p.to_record());
        out.push('\n');
    }
    out
}

pub fn parse_denoise_pairs(input: &str) -> Result<Vec<DenoisePair>, DenoiseRecordError> {
    let mut out = Vec::new();
    for (i, raw) in input.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let rec: DenoiseRecord = serde_json::from_str(raw).map_err(|e| DenoiseRecordError::Malformed {
            line,
            message: e.to_string(),
        })?;
        let invalid = |source| DenoiseRecordError::Invalid { line, source };
        out.push(DenoisePair {
            corrupted: Dialogue::new(rec.dialogue_id.clone(), rec.corrupted).map_err(invalid)?,
            reconstruction_target: Dialogue::new(rec.dialogue_id.clone(), rec.target).map_err(invalid)?,
            dialogue_id: rec.dialogue_id,
            plan: rec.plan,
        });
    }
    Ok(out)
}

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: empty speaker at ({interview_id},{turn_index})")]
    EmptySpeaker {
        line: usize,
        interview_id: String,
        turn_index: usize,
    },
    #[error("line {line}: duplicate turn ({interview_id},{turn_index})")]
    Duplicate {
        line: usize,
        interview_id: String,
        turn_index: usize,
    },
    #[error("line {line}: non-contiguous turn_index at {interview_id} (expected {expected}, found {found})")]
    NonContiguous {
        line: usize,
        interview_id: String,
        expected: usize,
        found: usize,
    },
}

impl ParseError {
    pub fn line(&self) -> usize {
        match self {
            ParseError::Malformed { line, .. }
            | ParseError::EmptySpeaker { line, .. }
            | ParseError::Duplicate { line, .. }
            | ParseError::NonContiguous { line, .. } => *line,
        }
    }
}

/// Parses line-delimited turn records into a corpus.
///
/// Records may arrive in any order; turns of one interview are grouped and
/// sorted by `turn_index`, which must then run 0, 1, 2, ... without gaps.
/// Blank lines are skipped. Every error names the offending line.
pub fn parse_corpus(input: &str) -> Result<Corpus, ParseError> {
    // interview_id -> turn_index -> (line, turn)
    let mut grouped: BTreeMap<String, BTreeMap<usize, (usize, Turn)>> = BTreeMap::new();
    for (i, raw) in input.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let turn: Turn = serde_json::from_str(raw).map_err(|e| ParseError::Malformed {
            line,
            message: e.to_string(),
        })?;
        if turn.speaker.trim().is_empty() {
            return Err(ParseError::EmptySpeaker {
                line,
                interview_id: turn.interview_id,
                turn_index: turn.turn_index,
            });
        }
        let slot = grouped.entry(turn.interview_id.clone()).or_default();
        if slot.contains_key(&turn.turn_index) {
            return Err(ParseError::Duplicate {
                line,
                interview_id: turn.interview_id,
                turn_index: turn.turn_index,
            });
        }
        slot.insert(turn.turn_index, (line, turn));
    }

    let mut corpus = Corpus::new();
    for (interview_id, turns) in grouped {
        for (expected, (&found, (line, _))) in turns.iter().enumerate() {
            if found != expected {
                return Err(ParseError::NonContiguous {
                    line: *line,
                    interview_id,
                    expected,
                    found,
                });
            }
        }
        let turns: Vec<Turn> = turns.into_values().map(|(_, t)| t).collect();
        corpus.insert(Dialogue { interview_id, turns });
    }
    Ok(corpus)
}

/// Writes one record per turn, ordered by (interview_id, turn_index).
pub fn serialize_corpus(corpus: &Corpus) -> String {
    let mut out = String::new();
    for dialogue in corpus.dialogues() {
        for turn in &dialogue.turns {
            out.push_str(&serde_json::to_string(turn).expect("turn records always serialize"));
            out.push('\n');
        }
    }
    out
}
