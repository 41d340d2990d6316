//! Heterogeneous knowledge-graph data model: typed nodes and edges with free-text
//! attributes, a schema registry, JSON (de)serialization and mask-based subgraph
//! extraction.
//!
//! Node and edge indices are assigned in file order and are stable: every mask
//! vector elsewhere in this crate is positionally aligned to them.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The three relation names that model data flow through a pipeline.
pub const REL_INPUT: &str = "rels_input";
pub const REL_OUTPUT: &str = "rels_output";
pub const REL_DOWNLOAD_FROM: &str = "rels_download_from";

/// Default name of the virtual terminal entity type.
pub const DEFAULT_TERMINAL_TYPE: &str = "Evaluation Information";

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("i/o error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("edge {edge} references missing node {node}")]
    DanglingEndpoint { edge: String, node: String },
    #[error("duplicate {kind} id {id}")]
    DuplicateId { kind: &'static str, id: String },
    #[error("mask length mismatch: expected {expected} {kind} entries, got {got}")]
    LengthMismatch {
        kind: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("unknown node id {0}")]
    UnknownNode(String),
}

/// Entity/relation type inventory plus the distinguished names the pipeline
/// checker and loss terms rely on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaRegistry {
    pub entity_types: Vec<String>,
    pub relation_types: Vec<String>,
    #[serde(default = "default_terminal_type")]
    pub terminal_type: String,
}

fn default_terminal_type() -> String {
    DEFAULT_TERMINAL_TYPE.to_string()
}

impl SchemaRegistry {
    /// The reserved relation names for pipeline data flow.
    pub fn core_relations() -> [&'static str; 3] {
        [REL_INPUT, REL_OUTPUT, REL_DOWNLOAD_FROM]
    }

    pub fn has_entity_type(&self, name: &str) -> bool {
        self.entity_types.iter().any(|t| t == name)
    }

    pub fn has_relation_type(&self, name: &str) -> bool {
        self.relation_types.iter().any(|t| t == name)
    }

    fn validate(&self) -> Result<(), GraphError> {
        if self.entity_types.len() <= 1 {
            return Err(GraphError::Schema(format!(
                "need more than one entity type, got {}",
                self.entity_types.len()
            )));
        }
        if self.relation_types.len() <= 1 {
            return Err(GraphError::Schema(format!(
                "need more than one relation type, got {}",
                self.relation_types.len()
            )));
        }
        for core in Self::core_relations() {
            if !self.has_relation_type(core) {
                return Err(GraphError::Schema(format!(
                    "core relation {core} missing from relation_types"
                )));
            }
        }
        if !self.has_entity_type(&self.terminal_type) {
            return Err(GraphError::Schema(format!(
                "terminal type {} missing from entity_types",
                self.terminal_type
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    #[serde(rename = "type")]
    pub entity_type: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub id: String,
    pub src: String,
    pub dst: String,
    pub relation: String,
    pub text: String,
}

/// An immutable heterogeneous graph. Iteration order over `nodes`/`edges`
/// equals insertion order from the serialized file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "GraphFile", into = "GraphFile")]
pub struct HeteroGraph {
    schema: SchemaRegistry,
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    #[serde(skip)]
    node_pos: HashMap<String, usize>,
    #[serde(skip)]
    edge_pos: HashMap<String, usize>,
}

/// Raw on-disk shape; `HeteroGraph` is validated on conversion.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct GraphFile {
    schema: SchemaRegistry,
    nodes: Vec<Node>,
    edges: Vec<Edge>,
}

impl TryFrom<GraphFile> for HeteroGraph {
    type Error = GraphError;

    fn try_from(file: GraphFile) -> Result<Self, Self::Error> {
        HeteroGraph::new(file.schema, file.nodes, file.edges)
    }
}

impl From<HeteroGraph> for GraphFile {
    fn from(g: HeteroGraph) -> Self {
        GraphFile {
            schema: g.schema,
            nodes: g.nodes,
            edges: g.edges,
        }
    }
}

impl HeteroGraph {
    pub fn new(
        schema: SchemaRegistry,
        nodes: Vec<Node>,
        edges: Vec<Edge>,
    ) -> Result<Self, GraphError> {
        schema.validate()?;
        if nodes.is_empty() || edges.is_empty() {
            return Err(GraphError::Schema(
                "graph must contain at least one node and one edge".to_string(),
            ));
        }

        let mut node_pos = HashMap::with_capacity(nodes.len());
        for (i, node) in nodes.iter().enumerate() {
            if node.id.is_empty() {
                return Err(GraphError::Schema("empty node id".to_string()));
            }
            if !schema.has_entity_type(&node.entity_type) {
                return Err(GraphError::Schema(format!(
                    "node {} has unknown entity type {}",
                    node.id, node.entity_type
                )));
            }
            if node_pos.insert(node.id.clone(), i).is_some() {
                return Err(GraphError::DuplicateId {
                    kind: "node",
                    id: node.id.clone(),
                });
            }
        }

        let mut edge_pos = HashMap::with_capacity(edges.len());
        for (i, edge) in edges.iter().enumerate() {
            if edge.id.is_empty() {
                return Err(GraphError::Schema("empty edge id".to_string()));
            }
            if !schema.has_relation_type(&edge.relation) {
                return Err(GraphError::Schema(format!(
                    "edge {} has unknown relation type {}",
                    edge.id, edge.relation
                )));
            }
            for endpoint in [&edge.src, &edge.dst] {
                if !node_pos.contains_key(endpoint) {
                    return Err(GraphError::DanglingEndpoint {
                        edge: edge.id.clone(),
                        node: endpoint.clone(),
                    });
                }
            }
            if edge_pos.insert(edge.id.clone(), i).is_some() {
                return Err(GraphError::DuplicateId {
                    kind: "edge",
                    id: edge.id.clone(),
                });
            }
        }

        Ok(HeteroGraph {
            schema,
            nodes,
            edges,
            node_pos,
            edge_pos,
        })
    }

    pub fn schema(&self) -> &SchemaRegistry {
        &self.schema
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.node_pos.get(id).copied()
    }

    pub fn edge_index(&self, id: &str) -> Option<usize> {
        self.edge_pos.get(id).copied()
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.node_index(id).map(|i| &self.nodes[i])
    }

    pub fn edge(&self, id: &str) -> Option<&Edge> {
        self.edge_index(id).map(|i| &self.edges[i])
    }

    /// Indices of edges touching the given node (as source or destination).
    pub fn incident_edges(&self, node_id: &str) -> Vec<usize> {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.src == node_id || e.dst == node_id)
            .map(|(i, _)| i)
            .collect()
    }

    /// Count of nodes whose entity type equals `entity_type`.
    pub fn count_nodes_of_type(&self, entity_type: &str) -> usize {
        self.nodes
            .iter()
            .filter(|n| n.entity_type == entity_type)
            .count()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GraphError> {
        let path = path.as_ref();
        let raw = std::fs::read_to_string(path).map_err(|source| GraphError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&raw)
    }

    pub fn from_json(raw: &str) -> Result<Self, GraphError> {
        let file: GraphFile = serde_json::from_str(raw)?;
        file.try_into()
    }

    /// Canonical serialized form: pretty JSON, key order fixed, trailing newline.
    /// `load` followed by `to_json` is byte-identical for files in this form.
    pub fn to_json(&self) -> String {
        let file = GraphFile {
            schema: self.schema.clone(),
            nodes: self.nodes.clone(),
            edges: self.edges.clone(),
        };
        let mut out = serde_json::to_string_pretty(&file).expect("graph serialization");
        out.push('\n');
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), GraphError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|source| GraphError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    /// Keep exactly the flagged nodes/edges. Edges with a dropped endpoint are
    /// dropped as well and reported in `implied_edge_drops`. Indices of the
    /// resulting graph are re-assigned in the original relative order; the
    /// schema is carried over unchanged.
    pub fn subgraph_by_mask(
        &self,
        node_keep: &[bool],
        edge_keep: &[bool],
    ) -> Result<SubgraphResult, GraphError> {
        if node_keep.len() != self.nodes.len() {
            return Err(GraphError::LengthMismatch {
                kind: "node",
                expected: self.nodes.len(),
                got: node_keep.len(),
            });
        }
        if edge_keep.len() != self.edges.len() {
            return Err(GraphError::LengthMismatch {
                kind: "edge",
                expected: self.edges.len(),
                got: edge_keep.len(),
            });
        }

        let kept_ids: HashSet<&str> = self
            .nodes
            .iter()
            .zip(node_keep)
            .filter(|(_, keep)| **keep)
            .map(|(n, _)| n.id.as_str())
            .collect();

        let nodes: Vec<Node> = self
            .nodes
            .iter()
            .zip(node_keep)
            .filter(|(_, keep)| **keep)
            .map(|(n, _)| n.clone())
            .collect();

        let mut edges = Vec::new();
        let mut implied = Vec::new();
        for (edge, keep) in self.edges.iter().zip(edge_keep) {
            if !*keep {
                continue;
            }
            if kept_ids.contains(edge.src.as_str()) && kept_ids.contains(edge.dst.as_str()) {
                edges.push(edge.clone());
            } else {
                implied.push(edge.id.clone());
            }
        }

        let mut node_pos = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            node_pos.insert(n.id.clone(), i);
        }
        let mut edge_pos = HashMap::with_capacity(edges.len());
        for (i, e) in edges.iter().enumerate() {
            edge_pos.insert(e.id.clone(), i);
        }

        Ok(SubgraphResult {
            graph: HeteroGraph {
                schema: self.schema.clone(),
                nodes,
                edges,
                node_pos,
                edge_pos,
            },
            implied_edge_drops: implied,
        })
    }
}

impl fmt::Display for HeteroGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "graph with {} nodes, {} edges",
            self.nodes.len(),
            self.edges.len()
        )
    }
}

/// Output of [`HeteroGraph::subgraph_by_mask`]. The extracted graph may be
/// empty; it bypasses the loader's non-emptiness check on purpose.
#[derive(Debug, Clone)]
pub struct SubgraphResult {
    pub graph: HeteroGraph,
    /// Ids of edges that were flagged keep but lost an endpoint.
    pub implied_edge_drops: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn fixture_has_expected_tool_nodes() {
        let g = fixtures::transcript_assembly();
        for tool in ["Hisat2", "Samtools", "Scallop", "Gffcompare"] {
            let node = g.node(tool).unwrap_or_else(|| panic!("missing {tool}"));
            assert_eq!(node.entity_type, "Tool");
        }
        assert_eq!(g.count_nodes_of_type("Tool"), 4);
    }

    #[test]
    fn empty_graph_rejected() {
        let raw = r#"{
            "schema": {"entity_types": ["A", "B"], "relation_types": ["rels_input", "rels_output", "rels_download_from"], "terminal_type": "A"},
            "nodes": [],
            "edges": []
        }"#;
        let err = HeteroGraph::from_json(raw).unwrap_err();
        assert!(matches!(err, GraphError::Schema(_)), "got {err:?}");
    }

    #[test]
    fn dangling_endpoint_names_missing_node() {
        let raw = r#"{
            "schema": {"entity_types": ["Tool", "File", "Evaluation Information"], "relation_types": ["rels_input", "rels_output", "rels_download_from"], "terminal_type": "Evaluation Information"},
            "nodes": [{"id": "a", "type": "Tool", "text": ""}],
            "edges": [{"id": "e", "src": "a", "dst": "X", "relation": "rels_input", "text": ""}]
        }"#;
        let err = HeteroGraph::from_json(raw).unwrap_err();
        match err {
            GraphError::DanglingEndpoint { node, .. } => assert_eq!(node, "X"),
            other => panic!("expected dangling endpoint, got {other:?}"),
        }
    }

    #[test]
    fn unknown_entity_type_rejected() {
        let raw = r#"{
            "schema": {"entity_types": ["Tool", "File"], "relation_types": ["rels_input", "rels_output", "rels_download_from"], "terminal_type": "Tool"},
            "nodes": [{"id": "a", "type": "Mystery", "text": ""}],
            "edges": []
        }"#;
        let err = HeteroGraph::from_json(raw).unwrap_err();
        assert!(matches!(err, GraphError::Schema(_)), "got {err:?}");
    }

    #[test]
    fn duplicate_node_id_rejected() {
        let raw = r#"{
            "schema": {"entity_types": ["Tool", "File"], "relation_types": ["rels_input", "rels_output", "rels_download_from"], "terminal_type": "Tool"},
            "nodes": [{"id": "a", "type": "Tool", "text": ""}, {"id": "a", "type": "File", "text": ""}],
            "edges": [{"id": "e", "src": "a", "dst": "a", "relation": "rels_input", "text": ""}]
        }"#;
        let err = HeteroGraph::from_json(raw).unwrap_err();
        assert!(matches!(err, GraphError::DuplicateId { .. }), "got {err:?}");
    }

    #[test]
    fn roundtrip_is_byte_identical() {
        let path = fixtures::path("transcript_assembly.json");
        let raw = std::fs::read_to_string(&path).unwrap();
        let g = HeteroGraph::from_json(&raw).unwrap();
        assert_eq!(g.to_json(), raw);
    }

    #[test]
    fn subgraph_identity_and_empty() {
        let g = fixtures::transcript_assembly();
        let all_true = vec![true; g.node_count()];
        let all_true_e = vec![true; g.edge_count()];
        let same = g.subgraph_by_mask(&all_true, &all_true_e).unwrap();
        assert_eq!(same.graph.node_count(), g.node_count());
        assert_eq!(same.graph.edge_count(), g.edge_count());
        assert!(same.implied_edge_drops.is_empty());

        let none = g
            .subgraph_by_mask(
                &vec![false; g.node_count()],
                &vec![false; g.edge_count()],
            )
            .unwrap();
        assert_eq!(none.graph.node_count(), 0);
        assert_eq!(none.graph.edge_count(), 0);
        assert_eq!(none.graph.schema(), g.schema());
    }

    #[test]
    fn dropping_samtools_cascades_incident_edges() {
        let g = fixtures::transcript_assembly();
        let samtools = g.node_index("Samtools").unwrap();
        let mut node_keep = vec![true; g.node_count()];
        node_keep[samtools] = false;
        let edge_keep = vec![true; g.edge_count()];
        let result = g.subgraph_by_mask(&node_keep, &edge_keep).unwrap();

        // Oracle: enumerate incident edges of Samtools directly.
        let expected: Vec<String> = g
            .incident_edges("Samtools")
            .into_iter()
            .map(|i| g.edges()[i].id.clone())
            .collect();
        assert_eq!(result.implied_edge_drops, expected);
        assert!(result.graph.node("Samtools").is_none());
        for id in &expected {
            assert!(result.graph.edge(id).is_none());
        }
    }

    #[test]
    fn subgraph_is_idempotent() {
        let g = fixtures::transcript_assembly();
        let node_keep: Vec<bool> = (0..g.node_count()).map(|i| i % 3 != 0).collect();
        let edge_keep: Vec<bool> = (0..g.edge_count()).map(|i| i % 2 == 0).collect();
        let once = g.subgraph_by_mask(&node_keep, &edge_keep).unwrap();
        let again = once
            .graph
            .subgraph_by_mask(
                &vec![true; once.graph.node_count()],
                &vec![true; once.graph.edge_count()],
            )
            .unwrap();
        assert_eq!(once.graph.nodes(), again.graph.nodes());
        assert_eq!(once.graph.edges(), again.graph.edges());
        assert!(again.implied_edge_drops.is_empty());
    }

    #[test]
    fn mask_length_mismatch_rejected() {
        let g = fixtures::transcript_assembly();
        let err = g
            .subgraph_by_mask(&[true], &vec![true; g.edge_count()])
            .unwrap_err();
        assert!(matches!(err, GraphError::LengthMismatch { .. }));
    }
}
