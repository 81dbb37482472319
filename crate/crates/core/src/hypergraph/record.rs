use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{GraphError, HyperEdge, HyperGraph, HyperNode};

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum Line {
    Node(HyperNode),
    Edge(HyperEdge),
}

#[derive(Debug, Error, PartialEq)]
pub enum RecordError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: node after edges")]
    NodeAfterEdge { line: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Nodes (by id) then edges (by src, dst, kind), one JSON object per line.
pub fn export_graph_record(graph: &HyperGraph) -> String {
    let mut out = String::new();
    let nodes = graph.nodes().iter().cloned().map(Line::Node);
    let edges = graph.edges().iter().cloned().map(Line::Edge);
    for line in nodes.chain(edges) {
        out.push_str(&serde_json::to_string(&line).expect("graph records always serialize"));
        out.push('\n');
    }
    out
}

pub fn parse_graph_record(input: &str) -> Result<HyperGraph, RecordError> {
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for (i, raw) in input.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(raw) {
            Ok(Line::Node(n)) if edges.is_empty() => nodes.push(n),
            Ok(Line::Node(_)) => return Err(RecordError::NodeAfterEdge { line }),
            Ok(Line::Edge(e)) => edges.push(e),
            Err(e) => {
                return Err(RecordError::Malformed {
                    line,
                    message: e.to_string(),
                })
            }
        }
    }
    Ok(HyperGraph::new(nodes, edges)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::{EdgeKind, NodeKind, SourceRef};

    fn graph() -> HyperGraph {
        let seg = |id: &str, t: usize| HyperNode {
            id: id.into(),
            kind: NodeKind::Segment,
            title: id.into(),
            body: "Q: hi".into(),
            source_ref: Some(SourceRef {
                interview_id: "I1".into(),
                first_turn: t,
                last_turn: t,
            }),
        };
        let theme = HyperNode {
            id: "theme-x".into(),
            kind: NodeKind::Theme,
            title: "X".into(),
            body: String::new(),
            source_ref: None,
        };
        HyperGraph::new(
            vec![seg("seg-a", 0), seg("seg-b", 1), theme],
            vec![
                HyperEdge::new("seg-a", "seg-b", EdgeKind::TemporalNext),
                HyperEdge::new("seg-a", "theme-x", EdgeKind::SameTheme),
            ],
        )
        .unwrap()
    }

    #[test]
    fn line_counts_and_shape() {
        assert_eq!(export_graph_record(&HyperGraph::default()), "");
        let text = export_graph_record(&graph());
        assert_eq!(text.lines().count(), 5);
        assert!(text.starts_with(
            r#"{"node":{"id":"seg-a","kind":"segment","title":"seg-a","body":"Q: hi","source_ref":{"interview_id":"I1","first_turn":0,"last_turn":0}}}"#
        ));
        assert!(text.ends_with("{\"edge\":{\"src\":\"seg-a\",\"dst\":\"theme-x\",\"kind\":\"same_theme\"}}\n"));
    }

    #[test]
    fn round_trip() {
        let g = graph();
        let text = export_graph_record(&g);
        let back = parse_graph_record(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(export_graph_record(&back), text);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(parse_graph_record("{}"), Err(RecordError::Malformed { line: 1, .. })));
        let text = export_graph_record(&graph());
        let mut lines: Vec<&str> = text.lines().collect();
        lines.swap(0, 4);
        assert!(matches!(
            parse_graph_record(&lines.join("\n")),
            Err(RecordError::NodeAfterEdge { line: 2 })
        ));
        let dangling = r#"{"edge":{"src":"a","dst":"b","kind":"style_of"}}"#;
        assert!(matches!(parse_graph_record(dangling), Err(RecordError::Graph(_))));
    }
}
