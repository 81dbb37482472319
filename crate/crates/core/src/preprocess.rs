//! Translation, Q/R concatenation and text cleaning.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_general_category::{get_general_category, GeneralCategory};

use crate::corpus::{Corpus, Dialogue, Role};

/// Maps a turn's text into the target language.
pub trait Translator: Sync {
    fn translate(&self, text: &str, target_lang: &str) -> Result<String, String>;
}

/// Leaves text untouched.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl Translator for Identity {
    fn translate(&self, text: &str, _target_lang: &str) -> Result<String, String> {
        Ok(text.to_string())
    }
}

/// Word-for-word substitution from a fixed table.
///
/// Tokens are looked up with surrounding punctuation removed, first as
/// written and then lowercased; the punctuation is re-attached to the
/// replacement. Unknown tokens pass through unchanged.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Glossary {
    pub entries: BTreeMap<String, String>,
}

impl Glossary {
    pub fn new(entries: BTreeMap<String, String>) -> Self {
        Glossary { entries }
    }

    fn lookup(&self, word: &str) -> Option<&str> {
        self.entries
            .get(word)
            .or_else(|| self.entries.get(&word.to_lowercase()))
            .map(String::as_str)
    }
}

impl Translator for Glossary {
    fn translate(&self, text: &str, _target_lang: &str) -> Result<String, String> {
        let mut out = String::with_capacity(text.len());
        for piece in split_keep_whitespace(text) {
            if piece.starts_with(char::is_whitespace) {
                out.push_str(piece);
                continue;
            }
            let core_start = piece.find(|c: char| !is_punctuation(c)).unwrap_or(piece.len());
            let core_end = piece
                .rfind(|c: char| !is_punctuation(c))
                .map(|i| i + piece[i..].chars().next().map_or(0, char::len_utf8))
                .unwrap_or(core_start)
                .max(core_start);
            let core = &piece[core_start..core_end];
            match self.lookup(core) {
                Some(rep) if !core.is_empty() => {
                    out.push_str(&piece[..core_start]);
                    out.push_str(rep);
                    out.push_str(&piece[core_end..]);
                }
                _ => out.push_str(piece),
            }
        }
        Ok(out)
    }
}

/// Adapts a plain function or closure.
pub struct FnTranslator<F>(pub F);

impl<F, E> Translator for FnTranslator<F>
where
    F: Fn(&str) -> Result<String, E> + Sync,
    E: fmt::Display,
{
    fn translate(&self, text: &str, _target_lang: &str) -> Result<String, String> {
        (self.0)(text).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("translate failed at ({interview_id},{turn_index}): {message}")]
pub struct TranslateError {
    pub interview_id: String,
    pub turn_index: usize,
    pub message: String,
}

/// Runs every turn through `translator` and stamps `target_lang`.
pub fn translate_stage(
    dialogue: &Dialogue,
    translator: &dyn Translator,
    target_lang: &str,
) -> Result<Dialogue, TranslateError> {
    let mut out = dialogue.clone();
    for turn in &mut out.turns {
        turn.text = translator
            .translate(&turn.text, target_lang)
            .map_err(|message| TranslateError {
                interview_id: turn.interview_id.clone(),
                turn_index: turn.turn_index,
                message,
            })?;
        turn.lang = target_lang.to_string();
    }
    Ok(out)
}

/// Joins turns into one text, one line per turn.
///
/// Questions get `Q: `, responses `R: `, anything else `<speaker>: `.
pub fn build_qr_text(dialogue: &Dialogue) -> String {
    let mut out = String::new();
    for (i, turn) in dialogue.turns.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        match turn.role {
            Role::Question => out.push_str("Q: "),
            Role::Response => out.push_str("R: "),
            Role::Other => {
                out.push_str(&turn.speaker);
                out.push_str(": ");
            }
        }
        // a newline inside a turn would break the one-line-per-turn layout
        if turn.text.contains(['\n', '\r']) {
            out.push_str(&turn.text.split(['\n', '\r']).filter(|s| !s.is_empty()).collect::<Vec<_>>().join(" "));
        } else {
            out.push_str(&turn.text);
        }
    }
    out
}

pub fn is_punctuation(c: char) -> bool {
    matches!(
        get_general_category(c),
        GeneralCategory::ConnectorPunctuation
            | GeneralCategory::DashPunctuation
            | GeneralCategory::OpenPunctuation
            | GeneralCategory::ClosePunctuation
            | GeneralCategory::InitialPunctuation
            | GeneralCategory::FinalPunctuation
            | GeneralCategory::OtherPunctuation
    )
}

/// Punctuation left in place by the default policy. The curly single quotes
/// are kept because they double as apostrophes.
pub const DEFAULT_KEEP: &[char] = &['.', '?', '!', '\'', '-', '\u{2018}', '\u{2019}'];

/// Punctuation from Basic Latin, Latin-1 and General Punctuation, minus
/// [`DEFAULT_KEEP`].
pub fn default_strip_chars() -> BTreeSet<char> {
    ('\u{0}'..='\u{ff}')
        .chain('\u{2000}'..='\u{206f}')
        .filter(|&c| is_punctuation(c) && !DEFAULT_KEEP.contains(&c))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CleanPolicy {
    #[serde(with = "char_set")]
    pub strip_chars: BTreeSet<char>,
    pub collapse_whitespace: bool,
    pub drop_untranslatable: bool,
    pub untranslatable_lexicon: BTreeSet<String>,
}

impl Default for CleanPolicy {
    fn default() -> Self {
        CleanPolicy {
            strip_chars: default_strip_chars(),
            collapse_whitespace: true,
            drop_untranslatable: false,
            untranslatable_lexicon: BTreeSet::new(),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PolicyError {
    #[error("strip_chars may not contain letters or digits (found {0:?})")]
    AlphanumericStrip(char),
}

impl CleanPolicy {
    pub fn validate(&self) -> Result<(), PolicyError> {
        match self.strip_chars.iter().find(|c| c.is_alphanumeric()) {
            Some(&c) => Err(PolicyError::AlphanumericStrip(c)),
            None => Ok(()),
        }
    }
}

/// Serializes a character set as one string.
mod char_set {
    use std::collections::BTreeSet;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(set: &BTreeSet<char>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&set.iter().collect::<String>())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeSet<char>, D::Error> {
        Ok(String::deserialize(d)?.chars().collect())
    }
}

/// Splits into alternating runs of whitespace and non-whitespace.
fn split_keep_whitespace(text: &str) -> impl Iterator<Item = &str> {
    let mut rest = text;
    std::iter::from_fn(move || {
        let first = rest.chars().next()?;
        let ws = first.is_whitespace();
        let end = rest
            .char_indices()
            .find(|&(_, c)| c.is_whitespace() != ws)
            .map_or(rest.len(), |(i, _)| i);
        let (piece, tail) = rest.split_at(end);
        rest = tail;
        Some(piece)
    })
}

/// Removes special characters and untranslated words.
///
/// Steps run in order: drop `strip_chars`; drop whole tokens found
/// (case-insensitively) in the lexicon when enabled; collapse whitespace
/// runs when enabled; trim.
pub fn clean_text(text: &str, policy: &CleanPolicy) -> String {
    let stripped: String = text.chars().filter(|c| !policy.strip_chars.contains(c)).collect();

    let filtered = if policy.drop_untranslatable && !policy.untranslatable_lexicon.is_empty() {
        let lexicon: BTreeSet<String> = policy.untranslatable_lexicon.iter().map(|w| w.to_lowercase()).collect();
        split_keep_whitespace(&stripped)
            .filter(|piece| piece.starts_with(char::is_whitespace) || !lexicon.contains(&piece.to_lowercase()))
            .collect::<String>()
    } else {
        stripped
    };

    if policy.collapse_whitespace {
        filtered.split_whitespace().collect::<Vec<_>>().join(" ")
    } else {
        filtered.trim().to_string()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PreprocessError {
    #[error(transparent)]
    Translate(#[from] TranslateError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

/// Result of preprocessing one dialogue.
#[derive(Debug, Clone, PartialEq)]
pub struct Preprocessed {
    /// `None` when every turn was emptied by cleaning.
    pub dialogue: Option<Dialogue>,
    pub dropped_turns: usize,
}

/// Translates and cleans every turn. Turns whose text is empty after cleaning
/// are dropped and the remainder re-indexed.
pub fn preprocess_dialogue(
    dialogue: &Dialogue,
    translator: &dyn Translator,
    target_lang: &str,
    policy: &CleanPolicy,
) -> Result<Preprocessed, PreprocessError> {
    policy.validate()?;
    let translated = translate_stage(dialogue, translator, target_lang)?;
    let before = translated.turns.len();
    let turns: Vec<_> = translated
        .turns
        .into_iter()
        .filter_map(|mut t| {
            t.text = clean_text(&t.text, policy);
            (!t.text.is_empty()).then_some(t)
        })
        .collect();
    let dropped_turns = before - turns.len();
    let dialogue = if turns.is_empty() {
        None
    } else {
        Some(Dialogue::from_ordered(dialogue.interview_id.clone(), turns).expect("re-indexed turns are valid"))
    };
    Ok(Preprocessed { dialogue, dropped_turns })
}

/// Preprocesses a whole corpus. Returns the cleaned corpus and the number of
/// dropped turns.
pub fn preprocess_corpus(
    corpus: &Corpus,
    translator: &dyn Translator,
    target_lang: &str,
    policy: &CleanPolicy,
) -> Result<(Corpus, usize), PreprocessError> {
    use rayon::prelude::*;

    let dialogues: Vec<&Dialogue> = corpus.dialogues().collect();
    let results = dialogues
        .par_iter()
        .map(|d| preprocess_dialogue(d, translator, target_lang, policy))
        .collect::<Result<Vec<_>, _>>()?;
    let dropped = results.iter().map(|r| r.dropped_turns).sum();
    Ok((results.into_iter().filter_map(|r| r.dialogue).collect(), dropped))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Turn;
    use proptest::prelude::*;

    fn dialogue(turns: &[(Role, &str, &str)]) -> Dialogue {
        Dialogue::from_ordered(
            "I1",
            turns
                .iter()
                .map(|&(role, speaker, text)| Turn::new("I1", 0, speaker, role, text))
                .collect(),
        )
        .unwrap()
    }

    fn strip(chars: &str) -> CleanPolicy {
        CleanPolicy {
            strip_chars: chars.chars().collect(),
            collapse_whitespace: true,
            drop_untranslatable: false,
            untranslatable_lexicon: BTreeSet::new(),
        }
    }

    #[test]
    fn identity_translation_updates_lang_only() {
        let d = dialogue(&[(Role::Question, "I", "Wie geht's?"), (Role::Response, "P", "Gut.")]);
        let out = translate_stage(&d, &Identity, "en").unwrap();
        assert_eq!(out.turns[0].text, "Wie geht's?");
        assert!(out.turns.iter().all(|t| t.lang == "en"));
    }

    #[test]
    fn uppercase_adapter_keeps_order() {
        let d = dialogue(&[(Role::Question, "I", "a"), (Role::Response, "P", "b"), (Role::Other, "X", "c")]);
        let upper = FnTranslator(|s: &str| Ok::<_, String>(s.to_uppercase()));
        let out = translate_stage(&d, &upper, "en").unwrap();
        let texts: Vec<_> = out.turns.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(texts, ["A", "B", "C"]);
    }

    #[test]
    fn failing_adapter_names_turn() {
        let d = dialogue(&[(Role::Question, "I", "ok"), (Role::Response, "P", "boom")]);
        let failing = FnTranslator(|s: &str| if s == "boom" { Err("quota") } else { Ok(s.to_string()) });
        let err = translate_stage(&d, &failing, "en").unwrap_err();
        assert!(err.to_string().starts_with("translate failed at (I1,1)"), "{err}");
    }

    #[test]
    fn glossary_replaces_tokens() {
        let g = Glossary::new([("Roboter".to_string(), "robot".to_string())].into());
        assert_eq!(g.translate("Der Roboter, ja.", "en").unwrap(), "Der robot, ja.");
        assert_eq!(g.translate("roboter  x", "en").unwrap(), "roboter  x");
        let lower = Glossary::new([("roboter".to_string(), "robot".to_string())].into());
        assert_eq!(lower.translate("(Roboter)", "en").unwrap(), "(robot)");
    }

    #[test]
    fn qr_text_prefixes() {
        let d = dialogue(&[(Role::Question, "I", "why?"), (Role::Response, "P", "because.")]);
        assert_eq!(build_qr_text(&d), "Q: why?\nR: because.");
        let d = dialogue(&[(Role::Other, "PM", "hi")]);
        assert_eq!(build_qr_text(&d), "PM: hi");
    }

    #[test]
    fn qr_text_line_per_turn() {
        let d = dialogue(&[
            (Role::Other, "A", "one"),
            (Role::Question, "B", "two\nlines"),
            (Role::Response, "C", "three"),
            (Role::Other, "D", "four"),
        ]);
        let text = build_qr_text(&d);
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines, ["A: one", "Q: two lines", "R: three", "D: four"]);
    }

    #[test]
    fn clean_examples() {
        assert_eq!(clean_text("a  b", &strip("")), "a b");
        assert_eq!(clean_text("héllo~!", &strip("~!")), "héllo");
        let policy = CleanPolicy {
            drop_untranslatable: true,
            untranslatable_lexicon: ["der".to_string()].into(),
            ..strip("")
        };
        assert_eq!(clean_text("der cat sat", &policy), "cat sat");
        assert_eq!(clean_text("Der cat der", &policy), "cat");
    }

    #[test]
    fn clean_without_collapse_keeps_inner_runs() {
        let policy = CleanPolicy {
            collapse_whitespace: false,
            ..strip("#")
        };
        assert_eq!(clean_text("  a  #b  ", &policy), "a  b");
    }

    #[test]
    fn default_strip_set() {
        let set = default_strip_chars();
        for c in [',', ';', ':', '"', '(', ')', '\u{201c}', '\u{2026}', '\u{2014}', '\u{bf}'] {
            assert!(set.contains(&c), "{c:?} should be stripped");
        }
        for &c in DEFAULT_KEEP {
            assert!(!set.contains(&c));
        }
        for c in ['$', '+', '~', 'a', 'é', '7'] {
            assert!(!set.contains(&c), "{c:?} should be kept");
        }
        assert_eq!(clean_text("Er sagte: „Hallo“ – gut!", &CleanPolicy::default()), "Er sagte Hallo gut!");
        CleanPolicy::default().validate().unwrap();
    }

    #[test]
    fn alphanumeric_strip_rejected() {
        assert_eq!(strip("a!").validate(), Err(PolicyError::AlphanumericStrip('a')));
        assert_eq!(strip("٣").validate(), Err(PolicyError::AlphanumericStrip('٣')));
    }

    #[test]
    fn preprocess_drops_emptied_turns() {
        let d = dialogue(&[(Role::Question, "I", "why?"), (Role::Other, "X", ";;"), (Role::Response, "P", "so")]);
        let out = preprocess_dialogue(&d, &Identity, "en", &strip(";?")).unwrap();
        assert_eq!(out.dropped_turns, 1);
        let d2 = out.dialogue.unwrap();
        assert_eq!(d2.turns.len(), 2);
        assert_eq!(d2.turns[1].turn_index, 1);
        assert_eq!(d2.turns[0].text, "why");
    }

    proptest! {
        #[test]
        fn clean_is_idempotent(
            text in "[a-zé ~!.,\\t\\n]{0,40}",
            collapse in any::<bool>(),
            drop in any::<bool>(),
        ) {
            let policy = CleanPolicy {
                strip_chars: "~,".chars().collect(),
                collapse_whitespace: collapse,
                drop_untranslatable: drop,
                untranslatable_lexicon: ["a".to_string(), "bé".to_string()].into(),
            };
            let once = clean_text(&text, &policy);
            prop_assert_eq!(clean_text(&once, &policy), once);
        }

        #[test]
        fn identity_translation_is_identity(texts in proptest::collection::vec("[^\\n]{1,20}", 1..6)) {
            let d = Dialogue::from_ordered(
                "P",
                texts.iter().map(|t| Turn::new("P", 0, "s", Role::Other, t.clone())).collect(),
            ).unwrap();
            let out = translate_stage(&d, &Identity, "xx").unwrap();
            for (a, b) in d.turns.iter().zip(&out.turns) {
                prop_assert_eq!(&a.text, &b.text);
            }
        }
    }
}
