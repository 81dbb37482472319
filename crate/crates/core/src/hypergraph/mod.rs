//! Hypertext model of a dialogue corpus.
//!
//! Dialogues are cut into segments; segments, supplied summaries, themes and
//! leadership styles become nodes, joined by typed navigational edges. The
//! graph can be written as a static HTML site or as line-delimited records.

mod html;
mod record;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{Corpus, Dialogue, Role, SummaryPair, MASK_SPEAKER};
use crate::preprocess::build_qr_text;
use crate::rouge::tokenize;

pub use html::{export_html, ExportError};
pub use record::{export_graph_record, parse_graph_record, RecordError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Segment,
    Summary,
    Theme,
    Style,
}

impl NodeKind {
    pub const ALL: [NodeKind; 4] = [NodeKind::Segment, NodeKind::Summary, NodeKind::Theme, NodeKind::Style];

    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Segment => "segment",
            NodeKind::Summary => "summary",
            NodeKind::Theme => "theme",
            NodeKind::Style => "style",
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    TemporalNext,
    SameTheme,
    SameSpeaker,
    SummaryOf,
    StyleOf,
}

impl EdgeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeKind::TemporalNext => "temporal_next",
            EdgeKind::SameTheme => "same_theme",
            EdgeKind::SameSpeaker => "same_speaker",
            EdgeKind::SummaryOf => "summary_of",
            EdgeKind::StyleOf => "style_of",
        }
    }
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Turn span a segment was cut from (inclusive).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceRef {
    pub interview_id: String,
    pub first_turn: usize,
    pub last_turn: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperNode {
    pub id: String,
    pub kind: NodeKind,
    pub title: String,
    pub body: String,
    pub source_ref: Option<SourceRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperEdge {
    pub src: String,
    pub dst: String,
    pub kind: EdgeKind,
}

impl HyperEdge {
    pub fn new(src: impl Into<String>, dst: impl Into<String>, kind: EdgeKind) -> Self {
        HyperEdge {
            src: src.into(),
            dst: dst.into(),
            kind,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("duplicate node id {0}")]
    DuplicateNode(String),
    #[error("{kind} edge {src} -> {dst} names a missing node")]
    DanglingEdge { src: String, dst: String, kind: EdgeKind },
    #[error("segment {0} has no source_ref")]
    MissingSourceRef(String),
    #[error("summary references unknown dialogue {0}")]
    UnknownDialogue(String),
    #[error("temporal chain broken: {0}")]
    BrokenChain(String),
}

/// Nodes sorted by id and edges sorted by (src, dst, kind), with every edge
/// endpoint present.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct HyperGraph {
    nodes: Vec<HyperNode>,
    edges: Vec<HyperEdge>,
}

impl HyperGraph {
    /// Sorts, removes duplicate edges and checks referential integrity.
    pub fn new(mut nodes: Vec<HyperNode>, edges: Vec<HyperEdge>) -> Result<Self, GraphError> {
        nodes.sort_by(|a, b| a.id.cmp(&b.id));
        for w in nodes.windows(2) {
            if w[0].id == w[1].id {
                return Err(GraphError::DuplicateNode(w[0].id.clone()));
            }
        }
        if let Some(n) = nodes.iter().find(|n| n.kind == NodeKind::Segment && n.source_ref.is_none()) {
            return Err(GraphError::MissingSourceRef(n.id.clone()));
        }
        let edges: Vec<HyperEdge> = edges.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let graph = HyperGraph { nodes, edges };
        for e in &graph.edges {
            if graph.node(&e.src).is_none() || graph.node(&e.dst).is_none() {
                return Err(GraphError::DanglingEdge {
                    src: e.src.clone(),
                    dst: e.dst.clone(),
                    kind: e.kind,
                });
            }
        }
        Ok(graph)
    }

    pub fn nodes(&self) -> &[HyperNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[HyperEdge] {
        &self.edges
    }

    pub fn node(&self, id: &str) -> Option<&HyperNode> {
        self.nodes
            .binary_search_by(|n| n.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.nodes[i])
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn outgoing<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a HyperEdge> + 'a {
        self.edges.iter().filter(move |e| e.src == id)
    }

    pub fn incoming<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a HyperEdge> + 'a {
        self.edges.iter().filter(move |e| e.dst == id)
    }

    pub fn edges_of_kind(&self, kind: EdgeKind) -> impl Iterator<Item = &HyperEdge> {
        self.edges.iter().filter(move |e| e.kind == kind)
    }

    /// Checks that, per interview, `temporal_next` edges form one simple path
    /// through all of its segments in turn order.
    pub fn check_temporal_chains(&self) -> Result<(), GraphError> {
        let mut by_dialogue: BTreeMap<&str, Vec<&HyperNode>> = BTreeMap::new();
        for n in self.nodes.iter().filter(|n| n.kind == NodeKind::Segment) {
            let src = n.source_ref.as_ref().ok_or_else(|| GraphError::MissingSourceRef(n.id.clone()))?;
            by_dialogue.entry(&src.interview_id).or_default().push(n);
        }
        let mut next: BTreeMap<&str, &str> = BTreeMap::new();
        let mut has_prev: BTreeSet<&str> = BTreeSet::new();
        for e in self.edges_of_kind(EdgeKind::TemporalNext) {
            if next.insert(&e.src, &e.dst).is_some() {
                return Err(GraphError::BrokenChain(format!("{} has two successors", e.src)));
            }
            if !has_prev.insert(&e.dst) {
                return Err(GraphError::BrokenChain(format!("{} has two predecessors", e.dst)));
            }
        }
        let mut covered = 0usize;
        for (interview, mut segments) in by_dialogue {
            segments.sort_by_key(|n| n.source_ref.as_ref().map(|s| s.first_turn));
            let head = segments[0].id.as_str();
            if has_prev.contains(head) {
                return Err(GraphError::BrokenChain(format!("first segment of {interview} has a predecessor")));
            }
            let mut cur = head;
            for seg in &segments[1..] {
                match next.get(cur) {
                    Some(&n) if n == seg.id => cur = n,
                    _ => return Err(GraphError::BrokenChain(format!("{cur} is not followed by {}", seg.id))),
                }
            }
            if let Some(extra) = next.get(cur) {
                return Err(GraphError::BrokenChain(format!("last segment {cur} continues to {extra}")));
            }
            covered += segments.len() - 1;
        }
        if covered != next.len() {
            return Err(GraphError::BrokenChain("temporal edges outside segment chains".to_string()));
        }
        Ok(())
    }
}

/// Trigger phrases for themes and leadership styles.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThemeLexicon {
    pub themes: BTreeMap<String, BTreeSet<String>>,
    pub styles: BTreeMap<String, BTreeSet<String>>,
}

fn phrases(list: &[&str]) -> BTreeSet<String> {
    list.iter().map(|s| s.to_string()).collect()
}

impl Default for ThemeLexicon {
    fn default() -> Self {
        let themes = [
            (
                "reaction_to_robot_behavior",
                phrases(&[
                    "behavior",
                    "behaviour",
                    "gestures",
                    "facial expressions",
                    "pre-programmed",
                    "scripted",
                    "voice",
                    "movements",
                    "responded",
                    "role model",
                    "human-like",
                ]),
            ),
            (
                "emotional_response",
                phrases(&[
                    "friendly",
                    "felt",
                    "feel",
                    "uncomfortable",
                    "comfortable",
                    "empathy",
                    "enthusiasm",
                    "passion",
                    "cold",
                    "emotional",
                    "trust",
                ]),
            ),
            (
                "leadership_applicability",
                phrases(&[
                    "leader",
                    "leadership",
                    "employees",
                    "team",
                    "authority",
                    "credibility",
                    "manager",
                    "motivate",
                    "supervisor",
                ]),
            ),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        let styles = [
            (
                "transformational",
                phrases(&[
                    "transformational",
                    "inspiring",
                    "inspired",
                    "vision",
                    "motivating",
                    "passion",
                    "enthusiasm",
                    "role model",
                ]),
            ),
            (
                "transactional",
                phrases(&[
                    "transactional",
                    "reward",
                    "rewards",
                    "bonus",
                    "targets",
                    "rules",
                    "instructions",
                    "performance",
                ]),
            ),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        ThemeLexicon { themes, styles }
    }
}

impl ThemeLexicon {
    pub fn empty() -> Self {
        ThemeLexicon {
            themes: BTreeMap::new(),
            styles: BTreeMap::new(),
        }
    }
}

/// Theme and style names that apply to a node.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Tags {
    pub themes: BTreeSet<String>,
    pub styles: BTreeSet<String>,
}

impl Tags {
    pub fn is_empty(&self) -> bool {
        self.themes.is_empty() && self.styles.is_empty()
    }
}

fn contains_run(haystack: &[String], needle: &[String]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}

fn matching(body: &[String], table: &BTreeMap<String, BTreeSet<String>>) -> BTreeSet<String> {
    table
        .iter()
        .filter(|(_, triggers)| {
            triggers
                .iter()
                .any(|phrase| contains_run(body, tokenize(phrase).tokens()))
        })
        .map(|(name, _)| name.clone())
        .collect()
}

/// Every theme/style with a trigger phrase whose tokens appear as a
/// contiguous run of the body's tokens. Matching uses the ROUGE tokenizer,
/// so it ignores case and punctuation.
pub fn tag_themes(node: &HyperNode, lexicon: &ThemeLexicon) -> Tags {
    let body = tokenize(&node.body);
    Tags {
        themes: matching(body.tokens(), &lexicon.themes),
        styles: matching(body.tokens(), &lexicon.styles),
    }
}

/// File-name-safe form of `s`. Anything outside `[A-Za-z0-9_-]` is replaced
/// and a short hash of the original appended, keeping distinct inputs
/// distinct.
pub fn slug(s: &str) -> String {
    let clean: String = s
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    if clean == s && !s.is_empty() {
        clean
    } else {
        format!("{clean}-{}", short_hash(s.as_bytes()))
    }
}

fn short_hash(bytes: &[u8]) -> String {
    Sha256::digest(bytes)[..4].iter().map(|b| format!("{b:02x}")).collect()
}

pub fn segment_id(interview_id: &str, first: usize, last: usize) -> String {
    format!("seg-{}-{first:05}-{last:05}", slug(interview_id))
}

pub fn summary_id(dialogue_id: &str, summary: &str) -> String {
    let mut key = dialogue_id.as_bytes().to_vec();
    key.push(0);
    key.extend_from_slice(summary.as_bytes());
    format!("sum-{}-{}", slug(dialogue_id), short_hash(&key))
}

pub fn theme_id(name: &str) -> String {
    format!("theme-{}", slug(name))
}

pub fn style_id(name: &str) -> String {
    format!("style-{}", slug(name))
}

fn humanize(name: &str) -> String {
    let spaced = name.replace('_', " ");
    let mut chars = spaced.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => spaced,
    }
}

/// Groups consecutive turns into segments of at most `max_turns` turns.
///
/// A question immediately followed by a response is never split across two
/// segments when `max_turns >= 2`; the boundary moves back by one turn
/// instead.
pub fn segment_dialogue(dialogue: &Dialogue, max_turns: usize) -> Vec<HyperNode> {
    assert!(max_turns >= 1, "segments need at least one turn");
    let turns = &dialogue.turns;
    let mut nodes = Vec::new();
    let mut start = 0;
    while start < turns.len() {
        let mut end = (start + max_turns).min(turns.len());
        if end < turns.len()
            && end - start >= 2
            && turns[end - 1].role == Role::Question
            && turns[end].role == Role::Response
        {
            end -= 1;
        }
        let part = Dialogue {
            interview_id: dialogue.interview_id.clone(),
            turns: turns[start..end].to_vec(),
        };
        let (first, last) = (turns[start].turn_index, turns[end - 1].turn_index);
        nodes.push(HyperNode {
            id: segment_id(&dialogue.interview_id, first, last),
            kind: NodeKind::Segment,
            title: format!("Interview {}, turns {first}-{last}", dialogue.interview_id),
            body: build_qr_text(&part),
            source_ref: Some(SourceRef {
                interview_id: dialogue.interview_id.clone(),
                first_turn: first,
                last_turn: last,
            }),
        });
        start = end;
    }
    nodes
}

fn tag_node(name: &str, kind: NodeKind, triggers: &BTreeSet<String>) -> HyperNode {
    let (id, label) = match kind {
        NodeKind::Theme => (theme_id(name), "Theme"),
        _ => (style_id(name), "Leadership style"),
    };
    HyperNode {
        id,
        kind,
        title: humanize(name),
        body: format!(
            "{label}: {name}\nTrigger phrases: {}",
            triggers.iter().map(String::as_str).collect::<Vec<_>>().join(", ")
        ),
        source_ref: None,
    }
}

/// Builds the hypertext graph.
///
/// Edges:
/// - `temporal_next` between consecutive segments of a dialogue;
/// - `same_theme` between every two segments sharing a theme (stored
///   lower id to higher id), and from each segment to its theme nodes;
/// - `same_speaker` from a segment to the next segment of the same dialogue
///   in which one of its speakers talks again (masked speakers ignored);
/// - `summary_of` from a summary to every segment of its dialogue;
/// - `style_of` from a style node to each segment it tags.
pub fn build_graph(
    corpus: &Corpus,
    summaries: &[SummaryPair],
    lexicon: &ThemeLexicon,
    max_turns: usize,
) -> Result<HyperGraph, GraphError> {
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let mut segments_of: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    let mut theme_members: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut style_members: BTreeMap<String, Vec<String>> = BTreeMap::new();

    for dialogue in corpus.dialogues() {
        let segments = segment_dialogue(dialogue, max_turns);
        let mut last_seen: BTreeMap<&str, String> = BTreeMap::new();
        for (i, seg) in segments.iter().enumerate() {
            if i > 0 {
                edges.push(HyperEdge::new(&segments[i - 1].id, &seg.id, EdgeKind::TemporalNext));
            }
            let src = seg.source_ref.as_ref().unwrap();
            let speakers: BTreeSet<&str> = dialogue.turns[src.first_turn..=src.last_turn]
                .iter()
                .map(|t| t.speaker.as_str())
                .filter(|s| *s != MASK_SPEAKER)
                .collect();
            let mut prev_segments = BTreeSet::new();
            for speaker in speakers {
                if let Some(prev) = last_seen.insert(speaker, seg.id.clone()) {
                    prev_segments.insert(prev);
                }
            }
            for prev in prev_segments {
                edges.push(HyperEdge::new(prev, &seg.id, EdgeKind::SameSpeaker));
            }
            let tags = tag_themes(seg, lexicon);
            for t in tags.themes {
                theme_members.entry(t).or_default().push(seg.id.clone());
            }
            for s in tags.styles {
                style_members.entry(s).or_default().push(seg.id.clone());
            }
        }
        segments_of.insert(&dialogue.interview_id, segments.iter().map(|s| s.id.clone()).collect());
        nodes.extend(segments);
    }

    for pair in summaries {
        let segs = segments_of
            .get(pair.dialogue_id.as_str())
            .ok_or_else(|| GraphError::UnknownDialogue(pair.dialogue_id.clone()))?;
        let id = summary_id(&pair.dialogue_id, &pair.target_summary);
        for seg in segs {
            edges.push(HyperEdge::new(&id, seg, EdgeKind::SummaryOf));
        }
        nodes.push(HyperNode {
            id,
            kind: NodeKind::Summary,
            title: format!("Summary of interview {}", pair.dialogue_id),
            body: pair.target_summary.clone(),
            source_ref: None,
        });
    }

    for (theme, members) in &theme_members {
        let node = tag_node(theme, NodeKind::Theme, &lexicon.themes[theme]);
        for (i, a) in members.iter().enumerate() {
            edges.push(HyperEdge::new(a, &node.id, EdgeKind::SameTheme));
            for b in &members[i + 1..] {
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                edges.push(HyperEdge::new(lo, hi, EdgeKind::SameTheme));
            }
        }
        nodes.push(node);
    }
    for (style, members) in &style_members {
        let node = tag_node(style, NodeKind::Style, &lexicon.styles[style]);
        for seg in members {
            edges.push(HyperEdge::new(&node.id, seg, EdgeKind::StyleOf));
        }
        nodes.push(node);
    }

    HyperGraph::new(nodes, edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Turn;

    fn dialogue(id: &str, roles: &[Role]) -> Dialogue {
        Dialogue::from_ordered(
            id,
            roles
                .iter()
                .enumerate()
                .map(|(i, &r)| {
                    let speaker = if r == Role::Question { "Interviewer" } else { "P1" };
                    Turn::new(id, i, speaker, r, format!("turn {i}"))
                })
                .collect(),
        )
        .unwrap()
    }

    fn node(body: &str) -> HyperNode {
        HyperNode {
            id: "n".into(),
            kind: NodeKind::Segment,
            title: String::new(),
            body: body.into(),
            source_ref: None,
        }
    }

    #[test]
    fn segment_counts() {
        let d = dialogue("I1", &[Role::Other; 4]);
        assert_eq!(segment_dialogue(&d, 2).len(), 2);
        let d = dialogue("I1", &[Role::Other]);
        assert_eq!(segment_dialogue(&d, 5).len(), 1);
    }

    #[test]
    fn question_response_pair_kept_together() {
        let d = dialogue("I1", &[Role::Other, Role::Question, Role::Response, Role::Other]);
        let segs = segment_dialogue(&d, 2);
        let spans: Vec<_> = segs
            .iter()
            .map(|s| {
                let r = s.source_ref.as_ref().unwrap();
                (r.first_turn, r.last_turn)
            })
            .collect();
        assert_eq!(spans, [(0, 0), (1, 2), (3, 3)]);
        assert_eq!(segs[1].body, "Q: turn 1\nR: turn 2");
    }

    #[test]
    fn pair_preserved_for_every_placement() {
        for n in 2..9 {
            for q in 0..n - 1 {
                for max in 2..5 {
                    let mut roles = vec![Role::Other; n];
                    roles[q] = Role::Question;
                    roles[q + 1] = Role::Response;
                    let segs = segment_dialogue(&dialogue("X", &roles), max);
                    let owner = |t: usize| {
                        segs.iter()
                            .position(|s| {
                                let r = s.source_ref.as_ref().unwrap();
                                (r.first_turn..=r.last_turn).contains(&t)
                            })
                            .unwrap()
                    };
                    assert_eq!(owner(q), owner(q + 1), "n={n} q={q} max={max}");
                    let covered: usize = segs
                        .iter()
                        .map(|s| {
                            let r = s.source_ref.as_ref().unwrap();
                            assert!(r.last_turn - r.first_turn < max);
                            r.last_turn - r.first_turn + 1
                        })
                        .sum();
                    assert_eq!(covered, n);
                }
            }
        }
    }

    #[test]
    fn tagging() {
        let mut lex = ThemeLexicon::empty();
        lex.themes.insert("emotional_response".into(), ["friendly".to_string()].into());
        let tags = tag_themes(&node("Still, he came across as friendly."), &lex);
        assert_eq!(tags.themes, ["emotional_response".to_string()].into());
        assert!(tag_themes(&node("anything"), &ThemeLexicon::empty()).is_empty());

        lex.themes.insert("leadership_applicability".into(), ["role model".to_string()].into());
        let tags = tag_themes(&node("friendly role model"), &lex);
        assert_eq!(tags.themes.len(), 2);
        // phrase tokens must be adjacent
        let tags = tag_themes(&node("role of a model"), &lex);
        assert!(tags.themes.is_empty());
    }

    #[test]
    fn default_lexicon_hits_quoted_answer() {
        let body = "R: It felt more like a pre-programmed sequence. Still, he came across as friendly.";
        let tags = tag_themes(&node(body), &ThemeLexicon::default());
        assert!(tags.themes.contains("emotional_response"));
        assert!(tags.themes.contains("reaction_to_robot_behavior"));
    }

    #[test]
    fn slugs() {
        assert_eq!(slug("I1"), "I1");
        assert_ne!(slug("a b"), slug("a_b"));
        assert!(slug("Ü/x").starts_with("__x-"));
        assert!(segment_id("I1", 10, 11) > segment_id("I1", 2, 3));
    }

    #[test]
    fn small_graph_counts() {
        let d = dialogue("I1", &[Role::Question, Role::Response, Role::Question, Role::Response]);
        let corpus: Corpus = [d.clone()].into_iter().collect();
        let pair = SummaryPair {
            dialogue_id: "I1".into(),
            source_text: build_qr_text(&d),
            target_summary: "short".into(),
        };
        let g = build_graph(&corpus, &[pair], &ThemeLexicon::empty(), 2).unwrap();
        assert_eq!(g.nodes().len(), 3);
        assert_eq!(g.edges_of_kind(EdgeKind::TemporalNext).count(), 1);
        assert_eq!(g.edges_of_kind(EdgeKind::SummaryOf).count(), 2);
        assert_eq!(g.edges_of_kind(EdgeKind::SameSpeaker).count(), 1);
        g.check_temporal_chains().unwrap();
    }

    #[test]
    fn shared_theme_edge_is_canonical() {
        let mut turns = Vec::new();
        for (i, text) in ["so friendly", "ok", "very friendly", "ok"].iter().enumerate() {
            let role = if i % 2 == 0 { Role::Question } else { Role::Response };
            turns.push(Turn::new("I1", i, "s", role, *text));
        }
        let corpus: Corpus = [Dialogue::new("I1", turns).unwrap()].into_iter().collect();
        let mut lex = ThemeLexicon::empty();
        lex.themes.insert("emotional_response".into(), ["friendly".to_string()].into());
        let g = build_graph(&corpus, &[], &lex, 2).unwrap();
        let a = segment_id("I1", 0, 1);
        let b = segment_id("I1", 2, 3);
        assert!(g.edges().contains(&HyperEdge::new(&a, &b, EdgeKind::SameTheme)));
        assert!(!g.edges().contains(&HyperEdge::new(&b, &a, EdgeKind::SameTheme)));
        let t = theme_id("emotional_response");
        assert!(g.edges().contains(&HyperEdge::new(&a, &t, EdgeKind::SameTheme)));
        assert_eq!(g.node(&t).unwrap().title, "Emotional response");
    }

    #[test]
    fn empty_and_unknown() {
        let g = build_graph(&Corpus::new(), &[], &ThemeLexicon::default(), 2).unwrap();
        assert!(g.is_empty());
        assert!(g.edges().is_empty());
        let bad = SummaryPair {
            dialogue_id: "nope".into(),
            source_text: String::new(),
            target_summary: "x".into(),
        };
        assert_eq!(
            build_graph(&Corpus::new(), &[bad], &ThemeLexicon::default(), 2),
            Err(GraphError::UnknownDialogue("nope".into()))
        );
    }

    #[test]
    fn integrity_checks() {
        let n = |id: &str| HyperNode {
            id: id.into(),
            kind: NodeKind::Theme,
            title: id.into(),
            body: String::new(),
            source_ref: None,
        };
        assert_eq!(
            HyperGraph::new(vec![n("a"), n("a")], vec![]),
            Err(GraphError::DuplicateNode("a".into()))
        );
        assert!(matches!(
            HyperGraph::new(vec![n("a")], vec![HyperEdge::new("a", "b", EdgeKind::SameTheme)]),
            Err(GraphError::DanglingEdge { .. })
        ));
        let g = HyperGraph::new(vec![n("b"), n("a")], vec![]).unwrap();
        assert_eq!(g.nodes()[0].id, "a");
    }

    #[test]
    fn broken_chain_detected() {
        let d = dialogue("I1", &[Role::Other; 6]);
        let corpus: Corpus = [d].into_iter().collect();
        let g = build_graph(&corpus, &[], &ThemeLexicon::empty(), 2).unwrap();
        g.check_temporal_chains().unwrap();
        let edges: Vec<_> = g
            .edges()
            .iter()
            .filter(|e| e.kind != EdgeKind::TemporalNext)
            .cloned()
            .chain([HyperEdge::new(segment_id("I1", 0, 1), segment_id("I1", 4, 5), EdgeKind::TemporalNext)])
            .collect();
        let broken = HyperGraph::new(g.nodes().to_vec(), edges).unwrap();
        assert!(matches!(broken.check_temporal_chains(), Err(GraphError::BrokenChain(_))));
    }
}
