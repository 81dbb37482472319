use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::{HyperEdge, HyperGraph, HyperNode, NodeKind};

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

fn page_name(id: &str) -> String {
    format!("{id}.html")
}

fn header(out: &mut String, title: &str) {
    out.push_str("<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n");
    let _ = writeln!(out, "<title>{}</title>", escape(title));
    out.push_str("</head>\n<body>\n");
}

fn link_item(out: &mut String, graph: &HyperGraph, target: &str, edge: &HyperEdge) {
    let title = graph.node(target).map_or(target, |n| n.title.as_str());
    let _ = writeln!(
        out,
        "<li><a href=\"{}\">{}</a> <span class=\"edge-kind\">[{}]</span></li>",
        escape(&page_name(target)),
        escape(title),
        edge.kind
    );
}

fn render_node(graph: &HyperGraph, node: &HyperNode) -> String {
    let mut out = String::new();
    header(&mut out, &node.title);
    out.push_str("<nav><a href=\"index.html\">Index</a></nav>\n");
    let _ = writeln!(out, "<h1>{}</h1>", escape(&node.title));
    let _ = writeln!(out, "<p class=\"kind\">{}</p>", node.kind);
    if let Some(src) = &node.source_ref {
        let _ = writeln!(
            out,
            "<p class=\"source\">Interview {}, turns {}-{}</p>",
            escape(&src.interview_id),
            src.first_turn,
            src.last_turn
        );
    }
    let _ = writeln!(out, "<pre class=\"body\">{}</pre>", escape(&node.body));

    let outgoing: Vec<_> = graph.outgoing(&node.id).collect();
    if !outgoing.is_empty() {
        out.push_str("<h2>Links</h2>\n<ul>\n");
        for e in outgoing {
            link_item(&mut out, graph, &e.dst, e);
        }
        out.push_str("</ul>\n");
    }
    let incoming: Vec<_> = graph.incoming(&node.id).collect();
    if !incoming.is_empty() {
        out.push_str("<h2>Linked from</h2>\n<ul>\n");
        for e in incoming {
            link_item(&mut out, graph, &e.src, e);
        }
        out.push_str("</ul>\n");
    }
    out.push_str("</body>\n</html>\n");
    out
}

fn render_index(graph: &HyperGraph) -> String {
    let mut out = String::new();
    header(&mut out, "Dialogue hypertext");
    out.push_str("<h1>Dialogue hypertext</h1>\n");
    let _ = writeln!(
        out,
        "<p>{} nodes, {} edges</p>",
        graph.nodes().len(),
        graph.edges().len()
    );
    for kind in NodeKind::ALL {
        let members: Vec<_> = graph.nodes().iter().filter(|n| n.kind == kind).collect();
        if members.is_empty() {
            continue;
        }
        let _ = writeln!(out, "<h2>{kind}</h2>\n<ul>");
        for n in members {
            let _ = writeln!(
                out,
                "<li><a href=\"{}\">{}</a></li>",
                escape(&page_name(&n.id)),
                escape(&n.title)
            );
        }
        out.push_str("</ul>\n");
    }
    out.push_str("</body>\n</html>\n");
    out
}

/// Writes `index.html` plus one `<id>.html` page per node into `out_dir`.
///
/// Pages are plain static markup with relative links only. Each edge is
/// listed on both of its endpoints' pages. Returns the written paths,
/// index first, then pages in node id order.
pub fn export_html(graph: &HyperGraph, out_dir: &Path) -> Result<Vec<PathBuf>, ExportError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| ExportError::Io { path, source }
    };
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;

    let mut manifest = Vec::with_capacity(graph.nodes().len() + 1);
    let index = out_dir.join("index.html");
    fs::write(&index, render_index(graph)).map_err(io_err(&index))?;
    manifest.push(index);
    for node in graph.nodes() {
        let path = out_dir.join(page_name(&node.id));
        fs::write(&path, render_node(graph, node)).map_err(io_err(&path))?;
        manifest.push(path);
    }
    Ok(manifest)
}
