//! Cluster-graph documents.
//!
//! ```json
//! {
//!   "name": "synth_40(160)",
//!   "n_clusters": 40,
//!   "edges": [
//!     [0, 7, 12],
//!     [0, 9, 3]
//!   ]
//! }
//! ```
//!
//! Each edge is `[src, dst, weight]` with cluster ids in `0..n_clusters`.
//! Unknown fields are rejected.

use std::fmt::Write as _;

use ladderbus_core::{ClusterGraph, Edge, GraphError};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphFileError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{location}: {source}")]
    Invalid {
        location: String,
        #[source]
        source: GraphError,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphDoc {
    name: String,
    n_clusters: usize,
    edges: Vec<(usize, usize, u32)>,
}

pub fn parse_cluster_graph(text: &str) -> Result<ClusterGraph, GraphFileError> {
    let doc: GraphDoc = serde_json::from_str(text).map_err(|e| GraphFileError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let edges = doc
        .edges
        .iter()
        .map(|&(src, dst, weight)| Edge { src, dst, weight })
        .collect();
    ClusterGraph::new(doc.name, doc.n_clusters, edges).map_err(|source| {
        let location = match source {
            GraphError::IdOutOfRange { index, .. }
            | GraphError::SelfLoop { index, .. }
            | GraphError::DuplicateEdge { index, .. } => format!("edges[{index}]"),
            _ => "n_clusters".to_string(),
        };
        GraphFileError::Invalid { location, source }
    })
}

/// One edge per line; byte-stable for a given graph.
pub fn write_cluster_graph(g: &ClusterGraph) -> String {
    let mut out = String::new();
    let name = serde_json::to_string(g.name()).expect("string serializes");
    writeln!(out, "{{").unwrap();
    writeln!(out, "  \"name\": {name},").unwrap();
    writeln!(out, "  \"n_clusters\": {},", g.n_clusters()).unwrap();
    if g.edges().is_empty() {
        writeln!(out, "  \"edges\": []").unwrap();
    } else {
        writeln!(out, "  \"edges\": [").unwrap();
        for (i, e) in g.edges().iter().enumerate() {
            let sep = if i + 1 < g.n_edges() { "," } else { "" };
            writeln!(out, "    [{}, {}, {}]{sep}", e.src, e.dst, e.weight).unwrap();
        }
        writeln!(out, "  ]").unwrap();
    }
    writeln!(out, "}}").unwrap();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ladderbus_core::appgraph::generate_synthetic;

    #[test]
    fn minimal_document() {
        let g = parse_cluster_graph(r#"{"name": "pair", "n_clusters": 2, "edges": [[0, 1, 5]]}"#)
            .unwrap();
        assert_eq!((g.n_clusters(), g.n_edges()), (2, 1));
        assert_eq!(g.edges()[0].weight, 5);
    }

    #[test]
    fn self_loop_has_location() {
        let err = parse_cluster_graph(
            r#"{"name": "x", "n_clusters": 4, "edges": [[0, 1, 1], [3, 3, 1]]}"#,
        )
        .unwrap_err();
        assert!(matches!(
            &err,
            GraphFileError::Invalid { location, source: GraphError::SelfLoop { id: 3, .. } }
                if location == "edges[1]"
        ));
    }

    #[test]
    fn duplicate_and_range_errors() {
        let dup = r#"{"name": "x", "n_clusters": 3, "edges": [[0, 1, 1], [0, 1, 2]]}"#;
        assert!(matches!(
            parse_cluster_graph(dup),
            Err(GraphFileError::Invalid { source: GraphError::DuplicateEdge { index: 1, .. }, .. })
        ));
        let range = r#"{"name": "x", "n_clusters": 3, "edges": [[0, 3, 1]]}"#;
        assert!(matches!(
            parse_cluster_graph(range),
            Err(GraphFileError::Invalid { source: GraphError::IdOutOfRange { id: 3, .. }, .. })
        ));
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_cluster_graph("{\n  \"name\": \"x\",\n  \"n_clusters\": ,\n}").unwrap_err();
        assert!(matches!(err, GraphFileError::Syntax { line: 3, .. }), "{err}");
        let unknown = r#"{"name": "x", "n_clusters": 2, "edges": [], "extra": 1}"#;
        assert!(matches!(parse_cluster_graph(unknown), Err(GraphFileError::Syntax { .. })));
        let short_edge = r#"{"name": "x", "n_clusters": 2, "edges": [[0, 1]]}"#;
        assert!(matches!(parse_cluster_graph(short_edge), Err(GraphFileError::Syntax { .. })));
    }

    #[test]
    fn write_parse_round_trip() {
        let g = generate_synthetic(12, 30, 5).unwrap();
        let text = write_cluster_graph(&g);
        assert_eq!(parse_cluster_graph(&text).unwrap(), g);
        assert_eq!(write_cluster_graph(&parse_cluster_graph(&text).unwrap()), text);
        let empty = ClusterGraph::new("empty \"q\"", 3, Vec::new()).unwrap();
        assert_eq!(parse_cluster_graph(&write_cluster_graph(&empty)).unwrap(), empty);
    }
}
