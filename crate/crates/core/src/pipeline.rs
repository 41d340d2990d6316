//! Validity checking for tool-execution pipelines.
//!
//! A pipeline is an ordered node-id sequence through the graph, alternating
//! database / file / tool elements and ending at the terminal evaluation node.
//! Five constraints are checked:
//!
//! * C1 — the first node is a database-type node;
//! * C2 — every tool node is immediately preceded by a file node that feeds it
//!   through a `rels_input` edge;
//! * C3 — every tool node produces at least one file through a `rels_output`
//!   edge somewhere in the graph;
//! * C4 — for each consecutive pair of tool nodes, some file listed between
//!   them in the path is produced by the first (`rels_output`) and consumed by
//!   the second (`rels_input`);
//! * C5 — the path ends at the terminal-type node, reached by an edge from the
//!   element before it.
//!
//! The result is semantic: it depends only on ids, types and relations, never
//! on node/edge index positions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{HeteroGraph, REL_INPUT, REL_OUTPUT};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("empty path")]
    EmptyPath,
    #[error("unknown node id in path: {0}")]
    UnknownId(String),
}

/// Distinguished entity-type names the checker relies on. Defaults match the
/// shipped fixtures; override for schemas that name their types differently.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineRules {
    pub database_type: String,
    pub tool_type: String,
    pub file_type: String,
}

impl Default for PipelineRules {
    fn default() -> Self {
        PipelineRules {
            database_type: "Database".to_string(),
            tool_type: "Tool".to_string(),
            file_type: "File".to_string(),
        }
    }
}

pub const CONSTRAINT_IDS: [&str; 5] = ["C1", "C2", "C3", "C4", "C5"];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstraintResult {
    pub id: String,
    pub description: String,
    pub passed: bool,
    /// Offending node ids, empty when the constraint holds.
    pub offenders: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub path: Vec<String>,
    pub constraints: Vec<ConstraintResult>,
    pub valid: bool,
}

impl ValidationReport {
    pub fn constraint(&self, id: &str) -> &ConstraintResult {
        self.constraints
            .iter()
            .find(|c| c.id == id)
            .expect("known constraint id")
    }
}

fn has_edge(graph: &HeteroGraph, src: &str, dst: &str, relation: &str) -> bool {
    graph
        .edges()
        .iter()
        .any(|e| e.src == src && e.dst == dst && e.relation == relation)
}

fn any_edge(graph: &HeteroGraph, src: &str, dst: &str) -> bool {
    graph.edges().iter().any(|e| e.src == src && e.dst == dst)
}

/// Check the five pipeline constraints over `path`.
pub fn validate_pipeline(
    graph: &HeteroGraph,
    path: &[String],
    rules: &PipelineRules,
) -> Result<ValidationReport, PipelineError> {
    if path.is_empty() {
        return Err(PipelineError::EmptyPath);
    }
    for id in path {
        if graph.node(id).is_none() {
            return Err(PipelineError::UnknownId(id.clone()));
        }
    }

    let node_type = |id: &str| graph.node(id).map(|n| n.entity_type.as_str()).unwrap();
    let tool_positions: Vec<usize> = path
        .iter()
        .enumerate()
        .filter(|(_, id)| node_type(id) == rules.tool_type)
        .map(|(i, _)| i)
        .collect();

    // C1: database start.
    let c1_pass = node_type(&path[0]) == rules.database_type;
    let c1 = ConstraintResult {
        id: "C1".to_string(),
        description: "path starts at a database-type node".to_string(),
        passed: c1_pass,
        offenders: if c1_pass {
            vec![]
        } else {
            vec![path[0].clone()]
        },
    };

    // C2: each tool is fed by the file right before it.
    let mut c2_offenders = Vec::new();
    for &i in &tool_positions {
        let tool = &path[i];
        let ok = i >= 1
            && node_type(&path[i - 1]) == rules.file_type
            && has_edge(graph, &path[i - 1], tool, REL_INPUT);
        if !ok {
            c2_offenders.push(tool.clone());
        }
    }
    let c2 = ConstraintResult {
        id: "C2".to_string(),
        description: "every tool consumes the preceding file via rels_input".to_string(),
        passed: c2_offenders.is_empty(),
        offenders: c2_offenders,
    };

    // C3: each tool produces at least one file.
    let mut c3_offenders = Vec::new();
    for &i in &tool_positions {
        let tool = &path[i];
        let ok = graph.edges().iter().any(|e| {
            e.src == *tool && e.relation == REL_OUTPUT && node_type(&e.dst) == rules.file_type
        });
        if !ok {
            c3_offenders.push(tool.clone());
        }
    }
    let c3 = ConstraintResult {
        id: "C3".to_string(),
        description: "every tool produces at least one file via rels_output".to_string(),
        passed: c3_offenders.is_empty(),
        offenders: c3_offenders,
    };

    // C4: handoff between consecutive tools goes through a file listed between
    // them in the path.
    let mut c4_offenders = Vec::new();
    for pair in tool_positions.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let (tool_a, tool_b) = (&path[a], &path[b]);
        let handoff = path[a + 1..b].iter().any(|mid| {
            node_type(mid) == rules.file_type
                && has_edge(graph, tool_a, mid, REL_OUTPUT)
                && has_edge(graph, mid, tool_b, REL_INPUT)
        });
        if !handoff {
            c4_offenders.push(format!("{tool_a}->{tool_b}"));
        }
    }
    let c4 = ConstraintResult {
        id: "C4".to_string(),
        description: "each tool's output file is consumed by the next tool via rels_input"
            .to_string(),
        passed: c4_offenders.is_empty(),
        offenders: c4_offenders,
    };

    // C5: terminal reached.
    let last = path.last().unwrap();
    let c5_pass = node_type(last) == graph.schema().terminal_type
        && path.len() >= 2
        && any_edge(graph, &path[path.len() - 2], last);
    let c5 = ConstraintResult {
        id: "C5".to_string(),
        description: "path terminates at a node connected to the terminal evaluation node"
            .to_string(),
        passed: c5_pass,
        offenders: if c5_pass { vec![] } else { vec![last.clone()] },
    };

    let constraints = vec![c1, c2, c3, c4, c5];
    let valid = constraints.iter().all(|c| c.passed);
    Ok(ValidationReport {
        path: path.to_vec(),
        constraints,
        valid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::graph::{Edge, HeteroGraph, Node};

    fn fixture() -> (HeteroGraph, Vec<String>, PipelineRules) {
        (
            fixtures::transcript_assembly(),
            fixtures::transcript_assembly_path(),
            PipelineRules::default(),
        )
    }

    /// Rebuild the fixture graph without one edge.
    fn without_edge(graph: &HeteroGraph, edge_id: &str) -> HeteroGraph {
        let edges: Vec<Edge> = graph
            .edges()
            .iter()
            .filter(|e| e.id != edge_id)
            .cloned()
            .collect();
        assert_eq!(edges.len(), graph.edge_count() - 1, "edge {edge_id} absent");
        HeteroGraph::new(graph.schema().clone(), graph.nodes().to_vec(), edges).unwrap()
    }

    #[test]
    fn fixture_pipeline_passes_all_constraints() {
        let (g, path, rules) = fixture();
        let report = validate_pipeline(&g, &path, &rules).unwrap();
        assert!(report.valid, "{report:#?}");
        for c in &report.constraints {
            assert!(c.passed, "{} failed: {:?}", c.id, c.offenders);
        }
    }

    #[test]
    fn single_node_path_fails_only_c5() {
        let (g, _, rules) = fixture();
        let report = validate_pipeline(&g, &["NCBI".to_string()], &rules).unwrap();
        assert!(report.constraint("C1").passed);
        assert!(report.constraint("C2").passed);
        assert!(report.constraint("C3").passed);
        assert!(report.constraint("C4").passed);
        assert!(!report.constraint("C5").passed);
        assert!(!report.valid);
    }

    #[test]
    fn dropped_hisat2_input_edge_fails_c2_naming_hisat2() {
        let (g, path, rules) = fixture();
        let mutated = without_edge(&g, "e_reads_hisat2");
        let report = validate_pipeline(&mutated, &path, &rules).unwrap();
        let c2 = report.constraint("C2");
        assert!(!c2.passed);
        assert_eq!(c2.offenders, vec!["Hisat2".to_string()]);
        for id in ["C1", "C3", "C4", "C5"] {
            assert!(report.constraint(id).passed, "{id} should still pass");
        }
    }

    #[test]
    fn unknown_id_and_empty_path_errors() {
        let (g, _, rules) = fixture();
        let err = validate_pipeline(&g, &["nope".to_string()], &rules).unwrap_err();
        assert!(matches!(err, PipelineError::UnknownId(id) if id == "nope"));
        let err = validate_pipeline(&g, &[], &rules).unwrap_err();
        assert!(matches!(err, PipelineError::EmptyPath));
    }

    #[test]
    fn report_invariant_under_index_permutation() {
        let (g, path, rules) = fixture();
        let before = validate_pipeline(&g, &path, &rules).unwrap();

        // Reverse node and edge order; constraint outcomes must not change.
        let mut nodes: Vec<Node> = g.nodes().to_vec();
        nodes.reverse();
        let mut edges: Vec<Edge> = g.edges().to_vec();
        edges.reverse();
        let permuted = HeteroGraph::new(g.schema().clone(), nodes, edges).unwrap();
        let after = validate_pipeline(&permuted, &path, &rules).unwrap();

        assert_eq!(before.valid, after.valid);
        for (b, a) in before.constraints.iter().zip(&after.constraints) {
            assert_eq!(b.passed, a.passed, "{} changed under permutation", b.id);
        }
    }

    #[test]
    fn five_corruptions_fail_exactly_their_constraint() {
        let (g, path, rules) = fixture();

        // (constraint expected to fail, mutated graph, mutated path)
        let cases: Vec<(&str, HeteroGraph, Vec<String>)> = vec![
            ("C2", without_edge(&g, "e_reads_hisat2"), path.clone()),
            ("C3", without_edge(&g, "e_gffcompare_stats"), path.clone()),
            ("C1", g.clone(), path[1..].to_vec()),
            ("C4", g.clone(), {
                // Reroute the Samtools -> Scallop handoff through a file
                // Samtools never produced.
                let mut p = path.clone();
                let pos = p.iter().position(|id| id == "bam_sorted").unwrap();
                p[pos] = "ref_annotation".to_string();
                p
            }),
            ("C5", g.clone(), path[..path.len() - 1].to_vec()),
        ];

        for (target, graph, mutated_path) in cases {
            let report = validate_pipeline(&graph, &mutated_path, &rules).unwrap();
            for c in &report.constraints {
                if c.id == target {
                    assert!(!c.passed, "{target} should fail");
                } else {
                    assert!(c.passed, "{} should pass when targeting {target}", c.id);
                }
            }
        }
    }
}
