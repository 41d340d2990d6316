//! Perturbation baselines: random and attention-guided binary masks whose
//! removal budgets are count- and type-aligned to a reference counterfactual,
//! plus adjacency heatmap emission.
//!
//! Budgeted removals are sampled without replacement from the seeded stream;
//! removing a node always cascades to its incident edges, and cascaded edge
//! removals are reported separately from budgeted ones.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::HeteroGraph;
use crate::rng::SeedStream;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("infeasible budget: want to remove {requested} {kind}, only {available} available")]
    InfeasibleBudget {
        kind: String,
        requested: usize,
        available: usize,
    },
    #[error("node {0} has no attention score")]
    MissingScore(String),
    #[error("strategy {0} needs attention scores")]
    NeedsAttention(&'static str),
    #[error("aligned type histogram sums to {histogram_sum}, node budget is {node_budget}")]
    HistogramMismatch {
        histogram_sum: usize,
        node_budget: usize,
    },
}

/// The seven perturbation strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    RandomNode,
    RandomEdge,
    RandomNodeEdge,
    RandomNodeAlign,
    RandomNodeEdgeAlign,
    AttentionHigh,
    AttentionLow,
}

impl Strategy {
    pub const ALL: [Strategy; 7] = [
        Strategy::RandomNode,
        Strategy::RandomEdge,
        Strategy::RandomNodeEdge,
        Strategy::RandomNodeAlign,
        Strategy::RandomNodeEdgeAlign,
        Strategy::AttentionHigh,
        Strategy::AttentionLow,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::RandomNode => "random-node",
            Strategy::RandomEdge => "random-edge",
            Strategy::RandomNodeEdge => "random-node-edge",
            Strategy::RandomNodeAlign => "random-node-align",
            Strategy::RandomNodeEdgeAlign => "random-node-edge-align",
            Strategy::AttentionHigh => "attention-high",
            Strategy::AttentionLow => "attention-low",
        }
    }

    pub fn parse(name: &str) -> Option<Strategy> {
        Strategy::ALL.iter().copied().find(|s| s.name() == name)
    }

    pub fn removes_nodes(&self) -> bool {
        !matches!(self, Strategy::RandomEdge)
    }

    /// Strategies that draw an explicit edge-removal budget (others only
    /// remove edges by cascade).
    pub fn removes_edges(&self) -> bool {
        matches!(
            self,
            Strategy::RandomEdge | Strategy::RandomNodeEdge | Strategy::RandomNodeEdgeAlign
        )
    }

    pub fn type_aligned(&self) -> bool {
        matches!(
            self,
            Strategy::RandomNodeAlign
                | Strategy::RandomNodeEdgeAlign
                | Strategy::AttentionHigh
                | Strategy::AttentionLow
        )
    }

    pub fn needs_attention(&self) -> bool {
        matches!(self, Strategy::AttentionHigh | Strategy::AttentionLow)
    }
}

/// Removal budgets derived from a reference counterfactual's binary masks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budgets {
    pub node_budget: usize,
    pub edge_budget: usize,
    pub type_histogram: BTreeMap<String, usize>,
}

/// Count removed nodes/edges in the reference masks and the removed-node
/// type histogram.
pub fn derive_budgets(graph: &HeteroGraph, node_keep: &[bool], edge_keep: &[bool]) -> Budgets {
    let mut type_histogram: BTreeMap<String, usize> = BTreeMap::new();
    let mut node_budget = 0;
    for (node, &keep) in graph.nodes().iter().zip(node_keep) {
        if !keep {
            node_budget += 1;
            *type_histogram.entry(node.entity_type.clone()).or_insert(0) += 1;
        }
    }
    let edge_budget = edge_keep.iter().filter(|&&k| !k).count();
    Budgets {
        node_budget,
        edge_budget,
        type_histogram,
    }
}

/// A fully specified perturbation: strategy plus budgets plus seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub strategy: Strategy,
    pub budgets: Budgets,
    pub seed: u64,
}

/// Keep flags per element, with node-removal cascade already applied to the
/// edge vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryGraphMask {
    pub node_keep: Vec<bool>,
    pub edge_keep: Vec<bool>,
}

/// Which edges a mask removed by explicit budget versus endpoint cascade.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CascadeReport {
    pub removed_nodes: Vec<String>,
    pub budgeted_edge_removals: Vec<String>,
    pub cascaded_edge_removals: Vec<String>,
}

fn feasibility(graph: &HeteroGraph, spec: &PerturbationSpec) -> Result<(), BaselineError> {
    let budgets = &spec.budgets;
    if spec.strategy.removes_nodes() && budgets.node_budget > graph.node_count() {
        return Err(BaselineError::InfeasibleBudget {
            kind: "nodes".to_string(),
            requested: budgets.node_budget,
            available: graph.node_count(),
        });
    }
    if spec.strategy.removes_edges() && budgets.edge_budget > graph.edge_count() {
        return Err(BaselineError::InfeasibleBudget {
            kind: "edges".to_string(),
            requested: budgets.edge_budget,
            available: graph.edge_count(),
        });
    }
    if spec.strategy.type_aligned() {
        let histogram_sum: usize = budgets.type_histogram.values().sum();
        if !budgets.type_histogram.is_empty() && histogram_sum != budgets.node_budget {
            return Err(BaselineError::HistogramMismatch {
                histogram_sum,
                node_budget: budgets.node_budget,
            });
        }
        for (entity_type, &count) in &budgets.type_histogram {
            let available = graph.count_nodes_of_type(entity_type);
            if count > available {
                return Err(BaselineError::InfeasibleBudget {
                    kind: format!("nodes of type {entity_type}"),
                    requested: count,
                    available,
                });
            }
        }
    }
    Ok(())
}

fn finalize(
    graph: &HeteroGraph,
    removed_nodes: Vec<usize>,
    budgeted_edges: Vec<usize>,
) -> (BinaryGraphMask, CascadeReport) {
    let mut node_keep = vec![true; graph.node_count()];
    for &i in &removed_nodes {
        node_keep[i] = false;
    }
    let mut edge_keep = vec![true; graph.edge_count()];
    let mut budgeted = vec![false; graph.edge_count()];
    for &i in &budgeted_edges {
        edge_keep[i] = false;
        budgeted[i] = true;
    }

    let mut report = CascadeReport {
        removed_nodes: removed_nodes
            .iter()
            .map(|&i| graph.nodes()[i].id.clone())
            .collect(),
        ..CascadeReport::default()
    };
    for (i, edge) in graph.edges().iter().enumerate() {
        if budgeted[i] {
            report.budgeted_edge_removals.push(edge.id.clone());
            continue;
        }
        let src_kept = node_keep[graph.node_index(&edge.src).unwrap()];
        let dst_kept = node_keep[graph.node_index(&edge.dst).unwrap()];
        if !(src_kept && dst_kept) {
            edge_keep[i] = false;
            report.cascaded_edge_removals.push(edge.id.clone());
        }
    }

    (BinaryGraphMask { node_keep, edge_keep }, report)
}

/// Sample node removals matching the type histogram exactly.
fn aligned_node_sample(
    graph: &HeteroGraph,
    histogram: &BTreeMap<String, usize>,
    stream: &mut SeedStream,
) -> Vec<usize> {
    let mut removed = Vec::new();
    for (entity_type, &count) in histogram {
        let candidates: Vec<usize> = graph
            .nodes()
            .iter()
            .enumerate()
            .filter(|(_, n)| &n.entity_type == entity_type)
            .map(|(i, _)| i)
            .collect();
        for pick in stream.sample_indices(candidates.len(), count) {
            removed.push(candidates[pick]);
        }
    }
    removed.sort_unstable();
    removed
}

/// Uniform random removal under the spec's strategy and budgets.
pub fn random_mask(
    graph: &HeteroGraph,
    spec: &PerturbationSpec,
) -> Result<(BinaryGraphMask, CascadeReport), BaselineError> {
    if spec.strategy.needs_attention() {
        return Err(BaselineError::NeedsAttention(spec.strategy.name()));
    }
    feasibility(graph, spec)?;
    let mut stream = SeedStream::new(spec.seed);
    let budgets = &spec.budgets;

    let removed_nodes = match spec.strategy {
        Strategy::RandomNode | Strategy::RandomNodeEdge => {
            stream.sample_indices(graph.node_count(), budgets.node_budget)
        }
        Strategy::RandomNodeAlign | Strategy::RandomNodeEdgeAlign => {
            aligned_node_sample(graph, &budgets.type_histogram, &mut stream)
        }
        Strategy::RandomEdge => Vec::new(),
        _ => unreachable!(),
    };
    let budgeted_edges = if spec.strategy.removes_edges() {
        stream.sample_indices(graph.edge_count(), budgets.edge_budget)
    } else {
        Vec::new()
    };

    Ok(finalize(graph, removed_nodes, budgeted_edges))
}

/// Attention-guided removal: attention-high removes the top-k scored nodes,
/// attention-low the bottom-k; when the histogram is present, selection is
/// per entity type. Ties break by ascending node index.
pub fn attention_mask(
    graph: &HeteroGraph,
    spec: &PerturbationSpec,
    attention: &BTreeMap<String, f64>,
) -> Result<(BinaryGraphMask, CascadeReport), BaselineError> {
    feasibility(graph, spec)?;
    let high = match spec.strategy {
        Strategy::AttentionHigh => true,
        Strategy::AttentionLow => false,
        _ => return Err(BaselineError::NeedsAttention(spec.strategy.name())),
    };

    let score_of = |idx: usize| -> Result<f64, BaselineError> {
        let node = &graph.nodes()[idx];
        attention
            .get(&node.id)
            .copied()
            .ok_or_else(|| BaselineError::MissingScore(node.id.clone()))
    };

    let rank_and_take = |candidates: &[usize], k: usize| -> Result<Vec<usize>, BaselineError> {
        let mut scored: Vec<(usize, f64)> = Vec::with_capacity(candidates.len());
        for &idx in candidates {
            scored.push((idx, score_of(idx)?));
        }
        scored.sort_by(|a, b| {
            let ord = if high {
                b.1.partial_cmp(&a.1).unwrap()
            } else {
                a.1.partial_cmp(&b.1).unwrap()
            };
            ord.then(a.0.cmp(&b.0))
        });
        Ok(scored.into_iter().take(k).map(|(i, _)| i).collect())
    };

    let budgets = &spec.budgets;
    let mut removed_nodes = if budgets.type_histogram.is_empty() {
        let all: Vec<usize> = (0..graph.node_count()).collect();
        rank_and_take(&all, budgets.node_budget)?
    } else {
        let mut removed = Vec::new();
        for (entity_type, &count) in &budgets.type_histogram {
            let candidates: Vec<usize> = graph
                .nodes()
                .iter()
                .enumerate()
                .filter(|(_, n)| &n.entity_type == entity_type)
                .map(|(i, _)| i)
                .collect();
            removed.extend(rank_and_take(&candidates, count)?);
        }
        removed
    };
    removed_nodes.sort_unstable();

    Ok(finalize(graph, removed_nodes, Vec::new()))
}

/// Square matrix over node indices: diagonal cells encode node retention,
/// off-diagonal cells encode directed-edge retention, empty cells mean no
/// edge. Directed, hence asymmetric.
#[derive(Debug, Clone)]
pub struct AdjacencyHeatmap {
    pub node_ids: Vec<String>,
    /// `cells[i][j]`: Some(1) kept, Some(0) removed, None no edge (i != j).
    pub cells: Vec<Vec<Option<u8>>>,
}

pub fn adjacency_heatmap(graph: &HeteroGraph, mask: &BinaryGraphMask) -> AdjacencyHeatmap {
    let n = graph.node_count();
    let mut cells = vec![vec![None; n]; n];
    for (i, &keep) in mask.node_keep.iter().enumerate() {
        cells[i][i] = Some(u8::from(keep));
    }
    for (e, edge) in graph.edges().iter().enumerate() {
        let i = graph.node_index(&edge.src).unwrap();
        let j = graph.node_index(&edge.dst).unwrap();
        if i == j {
            continue; // diagonal is reserved for node retention
        }
        let kept = u8::from(mask.edge_keep[e]);
        // Parallel edges collapse to "kept if any kept".
        cells[i][j] = Some(cells[i][j].map_or(kept, |prev| prev.max(kept)));
    }
    AdjacencyHeatmap {
        node_ids: graph.nodes().iter().map(|n| n.id.clone()).collect(),
        cells,
    }
}

impl AdjacencyHeatmap {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let mut header = vec![String::new()];
        header.extend(self.node_ids.iter().cloned());
        crate::csvutil::write_row(&mut out, &header);
        for (i, row) in self.cells.iter().enumerate() {
            let mut fields = vec![self.node_ids[i].clone()];
            fields.extend(row.iter().map(|c| match c {
                Some(v) => v.to_string(),
                None => String::new(),
            }));
            crate::csvutil::write_row(&mut out, &fields);
        }
        out
    }
}

/// Mask export: one row per element in index order.
pub fn mask_csv(graph: &HeteroGraph, mask: &BinaryGraphMask) -> String {
    let mut out = String::from("element_id,kind,keep\n");
    for (node, &keep) in graph.nodes().iter().zip(&mask.node_keep) {
        out.push_str(&format!(
            "{},node,{}\n",
            crate::csvutil::escape(&node.id),
            u8::from(keep)
        ));
    }
    for (edge, &keep) in graph.edges().iter().zip(&mask.edge_keep) {
        out.push_str(&format!(
            "{},edge,{}\n",
            crate::csvutil::escape(&edge.id),
            u8::from(keep)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn fixture() -> HeteroGraph {
        fixtures::transcript_assembly()
    }

    fn spec(strategy: Strategy, budgets: Budgets, seed: u64) -> PerturbationSpec {
        PerturbationSpec {
            strategy,
            budgets,
            seed,
        }
    }

    #[test]
    fn derive_budgets_counts_removals_by_type() {
        let g = fixture();
        // Remove 3 Tool nodes and 1 File node, plus 5 edges.
        let removed_nodes = ["Samtools", "Scallop", "Gffcompare", "bam_sorted"];
        let node_keep: Vec<bool> = g
            .nodes()
            .iter()
            .map(|n| !removed_nodes.contains(&n.id.as_str()))
            .collect();
        let edge_keep: Vec<bool> = (0..g.edge_count()).map(|i| i >= 5).collect();
        let budgets = derive_budgets(&g, &node_keep, &edge_keep);
        assert_eq!(budgets.node_budget, 4);
        assert_eq!(budgets.edge_budget, 5);
        assert_eq!(budgets.type_histogram["Tool"], 3);
        assert_eq!(budgets.type_histogram["File"], 1);
        assert_eq!(budgets.type_histogram.len(), 2);
    }

    #[test]
    fn zero_budgets_degenerate_to_identity() {
        let g = fixture();
        let budgets = derive_budgets(
            &g,
            &vec![true; g.node_count()],
            &vec![true; g.edge_count()],
        );
        assert_eq!(budgets.node_budget, 0);
        assert_eq!(budgets.edge_budget, 0);
        for strategy in [
            Strategy::RandomNode,
            Strategy::RandomEdge,
            Strategy::RandomNodeEdge,
            Strategy::RandomNodeAlign,
            Strategy::RandomNodeEdgeAlign,
        ] {
            let (mask, report) = random_mask(&g, &spec(strategy, budgets.clone(), 7)).unwrap();
            assert!(mask.node_keep.iter().all(|&k| k), "{strategy:?}");
            assert!(mask.edge_keep.iter().all(|&k| k), "{strategy:?}");
            assert!(report.cascaded_edge_removals.is_empty());
        }
    }

    #[test]
    fn full_node_budget_empties_graph() {
        let g = fixture();
        let budgets = Budgets {
            node_budget: g.node_count(),
            edge_budget: 0,
            type_histogram: BTreeMap::new(),
        };
        let (mask, report) = random_mask(&g, &spec(Strategy::RandomNode, budgets, 3)).unwrap();
        assert!(mask.node_keep.iter().all(|&k| !k));
        // Every edge cascades away.
        assert!(mask.edge_keep.iter().all(|&k| !k));
        assert_eq!(report.cascaded_edge_removals.len(), g.edge_count());
        assert!(report.budgeted_edge_removals.is_empty());
    }

    #[test]
    fn budget_counts_exact_over_seeds() {
        let g = fixture();
        let budgets = Budgets {
            node_budget: 3,
            edge_budget: 4,
            type_histogram: BTreeMap::from([("Tool".to_string(), 2), ("File".to_string(), 1)]),
        };
        for seed in 0..100u64 {
            for strategy in [
                Strategy::RandomNode,
                Strategy::RandomEdge,
                Strategy::RandomNodeEdge,
                Strategy::RandomNodeAlign,
                Strategy::RandomNodeEdgeAlign,
            ] {
                let (mask, report) =
                    random_mask(&g, &spec(strategy, budgets.clone(), seed)).unwrap();
                let removed_nodes = mask.node_keep.iter().filter(|&&k| !k).count();
                let expected_nodes = if strategy.removes_nodes() { 3 } else { 0 };
                assert_eq!(removed_nodes, expected_nodes, "{strategy:?} seed {seed}");
                let expected_edges = if strategy.removes_edges() { 4 } else { 0 };
                assert_eq!(
                    report.budgeted_edge_removals.len(),
                    expected_edges,
                    "{strategy:?} seed {seed}"
                );
                // Cascade accounting: every removed edge is budgeted or cascaded.
                let removed_edges = mask.edge_keep.iter().filter(|&&k| !k).count();
                assert_eq!(
                    removed_edges,
                    report.budgeted_edge_removals.len() + report.cascaded_edge_removals.len()
                );
            }
        }
    }

    #[test]
    fn aligned_histogram_matched_exactly_over_seeds() {
        let g = fixture();
        let budgets = Budgets {
            node_budget: 2,
            edge_budget: 0,
            type_histogram: BTreeMap::from([("Tool".to_string(), 2)]),
        };
        for seed in 0..100u64 {
            let (mask, _) =
                random_mask(&g, &spec(Strategy::RandomNodeAlign, budgets.clone(), seed)).unwrap();
            let mut removed_by_type: BTreeMap<&str, usize> = BTreeMap::new();
            for (node, &keep) in g.nodes().iter().zip(&mask.node_keep) {
                if !keep {
                    *removed_by_type.entry(node.entity_type.as_str()).or_insert(0) += 1;
                }
            }
            assert_eq!(removed_by_type.get("Tool"), Some(&2), "seed {seed}");
            assert_eq!(removed_by_type.len(), 1, "seed {seed}: {removed_by_type:?}");
        }
    }

    #[test]
    fn masks_are_seed_deterministic() {
        let g = fixture();
        let budgets = Budgets {
            node_budget: 3,
            edge_budget: 2,
            type_histogram: BTreeMap::new(),
        };
        let s = spec(Strategy::RandomNodeEdge, budgets, 11);
        let (a, _) = random_mask(&g, &s).unwrap();
        let (b, _) = random_mask(&g, &s).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn infeasible_budgets_rejected() {
        let g = fixture();
        let budgets = Budgets {
            node_budget: g.node_count() + 1,
            edge_budget: 0,
            type_histogram: BTreeMap::new(),
        };
        let err = random_mask(&g, &spec(Strategy::RandomNode, budgets, 1)).unwrap_err();
        assert!(matches!(err, BaselineError::InfeasibleBudget { .. }));

        let budgets = Budgets {
            node_budget: 5,
            edge_budget: 0,
            type_histogram: BTreeMap::from([("Tool".to_string(), 5)]),
        };
        let err = random_mask(&g, &spec(Strategy::RandomNodeAlign, budgets, 1)).unwrap_err();
        assert!(matches!(err, BaselineError::InfeasibleBudget { .. }));

        // Histogram inconsistent with the node budget.
        let budgets = Budgets {
            node_budget: 3,
            edge_budget: 0,
            type_histogram: BTreeMap::from([("Tool".to_string(), 2)]),
        };
        let err = random_mask(&g, &spec(Strategy::RandomNodeAlign, budgets, 1)).unwrap_err();
        assert!(matches!(err, BaselineError::HistogramMismatch { .. }));
    }

    fn tool_attention(g: &HeteroGraph) -> BTreeMap<String, f64> {
        // Case-study attention values for the three pruned tools; the rest of
        // the graph gets synthetic higher scores.
        let mut scores = BTreeMap::new();
        for node in g.nodes() {
            let s = match node.id.as_str() {
                "Scallop" => 0.0015,
                "Samtools" => 0.0015,
                "Gffcompare" => 0.001,
                "Hisat2" => 0.0024,
                _ => 0.005,
            };
            scores.insert(node.id.clone(), s);
        }
        scores
    }

    #[test]
    fn attention_low_removes_lowest_scored_tool() {
        let g = fixture();
        let scores = tool_attention(&g);
        let budgets = Budgets {
            node_budget: 1,
            edge_budget: 0,
            type_histogram: BTreeMap::from([("Tool".to_string(), 1)]),
        };
        let (mask, report) =
            attention_mask(&g, &spec(Strategy::AttentionLow, budgets, 0), &scores).unwrap();
        assert_eq!(report.removed_nodes, vec!["Gffcompare".to_string()]);
        let idx = g.node_index("Gffcompare").unwrap();
        assert!(!mask.node_keep[idx]);
    }

    #[test]
    fn attention_high_tie_breaks_by_lower_index() {
        let g = fixture();
        // Samtools and Scallop tie on top among tools; the pick must be the
        // lower-indexed node, deterministically.
        let mut scores = tool_attention(&g);
        scores.insert("Hisat2".to_string(), 0.0001);
        let budgets = Budgets {
            node_budget: 1,
            edge_budget: 0,
            type_histogram: BTreeMap::from([("Tool".to_string(), 1)]),
        };
        let (_, report) =
            attention_mask(&g, &spec(Strategy::AttentionHigh, budgets, 0), &scores).unwrap();
        let samtools = g.node_index("Samtools").unwrap();
        let scallop = g.node_index("Scallop").unwrap();
        let expected = if samtools < scallop { "Samtools" } else { "Scallop" };
        assert_eq!(report.removed_nodes, vec![expected.to_string()]);
    }

    #[test]
    fn attention_zero_budget_is_identity() {
        let g = fixture();
        let scores = tool_attention(&g);
        let budgets = Budgets {
            node_budget: 0,
            edge_budget: 0,
            type_histogram: BTreeMap::new(),
        };
        let (mask, _) =
            attention_mask(&g, &spec(Strategy::AttentionHigh, budgets, 0), &scores).unwrap();
        assert!(mask.node_keep.iter().all(|&k| k));
        assert!(mask.edge_keep.iter().all(|&k| k));
    }

    #[test]
    fn attention_missing_score_reported() {
        let g = fixture();
        let budgets = Budgets {
            node_budget: 1,
            edge_budget: 0,
            type_histogram: BTreeMap::new(),
        };
        let err = attention_mask(
            &g,
            &spec(Strategy::AttentionHigh, budgets, 0),
            &BTreeMap::new(),
        )
        .unwrap_err();
        assert!(matches!(err, BaselineError::MissingScore(_)));
    }

    #[test]
    fn heatmap_identity_and_empty() {
        let g = fixture();
        let identity = BinaryGraphMask {
            node_keep: vec![true; g.node_count()],
            edge_keep: vec![true; g.edge_count()],
        };
        let h = adjacency_heatmap(&g, &identity);
        for i in 0..g.node_count() {
            assert_eq!(h.cells[i][i], Some(1));
        }
        let edge_cells: Vec<u8> = h
            .cells
            .iter()
            .enumerate()
            .flat_map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .filter(move |(j, _)| i != *j)
                    .filter_map(|(_, c)| *c)
            })
            .collect();
        assert_eq!(edge_cells.len(), g.edge_count());
        assert!(edge_cells.iter().all(|&c| c == 1));

        let empty = BinaryGraphMask {
            node_keep: vec![false; g.node_count()],
            edge_keep: vec![false; g.edge_count()],
        };
        let h = adjacency_heatmap(&g, &empty);
        for i in 0..g.node_count() {
            assert_eq!(h.cells[i][i], Some(0));
            for j in 0..g.node_count() {
                if i != j {
                    assert_ne!(h.cells[i][j], Some(1));
                }
            }
        }
    }

    #[test]
    fn heatmap_removed_node_zeroes_its_row_and_column_edges() {
        let g = fixture();
        let samtools = g.node_index("Samtools").unwrap();
        let mut node_keep = vec![true; g.node_count()];
        node_keep[samtools] = false;
        let mut edge_keep = vec![true; g.edge_count()];
        for idx in g.incident_edges("Samtools") {
            edge_keep[idx] = false;
        }
        let mask = BinaryGraphMask { node_keep, edge_keep };
        let h = adjacency_heatmap(&g, &mask);
        assert_eq!(h.cells[samtools][samtools], Some(0));
        for j in 0..g.node_count() {
            if j == samtools {
                continue;
            }
            if let Some(v) = h.cells[samtools][j] {
                assert_eq!(v, 0, "outgoing edge cell must be removed");
            }
            if let Some(v) = h.cells[j][samtools] {
                assert_eq!(v, 0, "incoming edge cell must be removed");
            }
        }
    }

    #[test]
    fn heatmap_csv_shape() {
        let g = fixture();
        let identity = BinaryGraphMask {
            node_keep: vec![true; g.node_count()],
            edge_keep: vec![true; g.edge_count()],
        };
        let csv = adjacency_heatmap(&g, &identity).to_csv();
        let rows = crate::csvutil::parse(&csv).unwrap();
        assert_eq!(rows.len(), g.node_count() + 1);
        assert_eq!(rows[0].len(), g.node_count() + 1);
        assert_eq!(rows[0][1], g.nodes()[0].id);
        assert_eq!(rows[1][0], g.nodes()[0].id);
    }
}
