//! The multi-objective mask loss and its analytic gradient.
//!
//! Total loss over node masks m_v and edge masks m_e:
//!
//! ```text
//! L = L_structure + alpha * (w_prompt * L_semantic) + beta * L_entropy
//!   + gamma * L_preserve + delta * L_hard + epsilon * L_smooth
//! ```
//!
//! * structure: lambda_V * sum_v lambda_v m_v + lambda_E * sum_e lambda_rel m_e
//! * semantic:  1 - cos(full graph vector, mask-weighted vector), optionally
//!   reweighted by prompt relevance w = 1 + sum_v (1 - m_v) sim(doc_v, prompt)
//! * entropy:   binary entropy pushing masks toward {0, 1}
//! * preserve:  ReLU(T - 1 - K) with T the tool-node count and K the number of
//!   edges at mask >= 0.5. The reported value uses the hard count; gradients
//!   flow through the sharp-sigmoid surrogate K~ = sum_e sigmoid((m_e-0.5)/kappa)
//! * hard:      ReLU(0.5 - m) over a protected node/edge set
//! * smooth:    mean squared gap between each edge mask and the type-weighted
//!   mean of its endpoint masks

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::HeteroGraph;
use crate::optim::gumbel::{sigmoid, CLAMP_EPS};
use crate::semantics::{SemanticContext, SemanticsError, TfidfModel};

/// Sharpness of the preserve-count surrogate.
pub const PRESERVE_KAPPA: f64 = 0.05;

#[derive(Debug, Error)]
pub enum LossError {
    #[error("negative loss weight {name} = {value}")]
    NegativeWeight { name: &'static str, value: f64 },
    #[error("unknown {kind} id in hard set: {id}")]
    UnknownHardId { kind: &'static str, id: String },
    #[error("edge {edge}: both endpoint type weights are zero")]
    ZeroTypeWeights { edge: String },
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
}

/// All coefficients of the total loss. Per-type maps fall back to 1.0 for
/// types they do not mention.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub alpha_semantic: f64,
    pub beta_entropy: f64,
    pub gamma_preserve: f64,
    pub delta_hard: f64,
    pub epsilon_smooth: f64,
    pub lambda_node: f64,
    pub lambda_edge: f64,
    pub per_node_lambda: BTreeMap<String, f64>,
    pub per_relation_lambda: BTreeMap<String, f64>,
    pub node_type_weights: BTreeMap<String, f64>,
}

impl Default for LossWeights {
    /// The case-study coefficient configuration.
    fn default() -> Self {
        let mut per_relation_lambda = BTreeMap::new();
        per_relation_lambda.insert("rels_input".to_string(), 4.0);
        per_relation_lambda.insert("rels_output".to_string(), 4.0);
        per_relation_lambda.insert("rels_download_from".to_string(), 0.5);
        per_relation_lambda.insert("END".to_string(), 1.0);
        LossWeights {
            alpha_semantic: 400.0,
            beta_entropy: 0.05,
            gamma_preserve: 10.0,
            delta_hard: 10.0,
            epsilon_smooth: 5.0,
            lambda_node: 0.1,
            lambda_edge: 0.5,
            per_node_lambda: BTreeMap::new(),
            per_relation_lambda,
            node_type_weights: BTreeMap::new(),
        }
    }
}

impl LossWeights {
    pub fn node_lambda(&self, entity_type: &str) -> f64 {
        self.per_node_lambda.get(entity_type).copied().unwrap_or(1.0)
    }

    pub fn relation_lambda(&self, relation: &str) -> f64 {
        self.per_relation_lambda
            .get(relation)
            .copied()
            .unwrap_or(1.0)
    }

    pub fn type_weight(&self, entity_type: &str) -> f64 {
        self.node_type_weights
            .get(entity_type)
            .copied()
            .unwrap_or(1.0)
    }

    pub fn validate(&self) -> Result<(), LossError> {
        let named = [
            ("alpha_semantic", self.alpha_semantic),
            ("beta_entropy", self.beta_entropy),
            ("gamma_preserve", self.gamma_preserve),
            ("delta_hard", self.delta_hard),
            ("epsilon_smooth", self.epsilon_smooth),
            ("lambda_node", self.lambda_node),
            ("lambda_edge", self.lambda_edge),
        ];
        for (name, value) in named {
            if value < 0.0 {
                return Err(LossError::NegativeWeight { name, value });
            }
        }
        for map in [
            &self.per_node_lambda,
            &self.per_relation_lambda,
            &self.node_type_weights,
        ] {
            if map.values().any(|v| *v < 0.0) {
                return Err(LossError::NegativeWeight {
                    name: "per-type map entry",
                    value: *map.values().find(|v| **v < 0.0).unwrap(),
                });
            }
        }
        Ok(())
    }
}

/// Nodes and edges penalized for dropping below the retention threshold.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct HardSets {
    pub hard_nodes: Vec<String>,
    pub hard_edges: Vec<String>,
}

/// Structure sparsity: lambda_V * sum_v lambda_v m_v + lambda_E * sum_e lambda_rel m_e.
pub fn structure_loss(
    graph: &HeteroGraph,
    weights: &LossWeights,
    node_masks: &[f64],
    edge_masks: &[f64],
) -> f64 {
    let node_sum: f64 = graph
        .nodes()
        .iter()
        .zip(node_masks)
        .map(|(n, m)| weights.node_lambda(&n.entity_type) * m)
        .sum();
    let edge_sum: f64 = graph
        .edges()
        .iter()
        .zip(edge_masks)
        .map(|(e, m)| weights.relation_lambda(&e.relation) * m)
        .sum();
    weights.lambda_node * node_sum + weights.lambda_edge * edge_sum
}

/// Binary entropy summed over all masks, clamped away from the log poles.
pub fn entropy_loss(node_masks: &[f64], edge_masks: &[f64]) -> f64 {
    node_masks
        .iter()
        .chain(edge_masks)
        .map(|&m| {
            let m = m.clamp(CLAMP_EPS, 1.0 - CLAMP_EPS);
            -(m * m.ln() + (1.0 - m) * (1.0 - m).ln())
        })
        .sum()
}

/// Count of edges at mask >= 0.5.
fn kept_edge_count(edge_masks: &[f64]) -> usize {
    edge_masks.iter().filter(|&&m| m >= 0.5).count()
}

/// Smooth stand-in for the kept-edge count used on the gradient path.
fn kept_edge_count_surrogate(edge_masks: &[f64]) -> f64 {
    edge_masks
        .iter()
        .map(|&m| sigmoid((m - 0.5) / PRESERVE_KAPPA))
        .sum()
}

/// Minimum structure preservation: ReLU(T - 1 - K) with the hard count K.
pub fn preserve_loss(graph: &HeteroGraph, tool_type: &str, edge_masks: &[f64]) -> f64 {
    let tools = graph.count_nodes_of_type(tool_type) as f64;
    (tools - 1.0 - kept_edge_count(edge_masks) as f64).max(0.0)
}

/// Preserve term with the surrogate count; this is the differentiable value
/// finite-difference checks must probe.
pub fn preserve_loss_surrogate(graph: &HeteroGraph, tool_type: &str, edge_masks: &[f64]) -> f64 {
    let tools = graph.count_nodes_of_type(tool_type) as f64;
    (tools - 1.0 - kept_edge_count_surrogate(edge_masks)).max(0.0)
}

/// Hard retention penalty over index-resolved hard sets:
/// sum ReLU(0.5 - m) over protected nodes and edges.
pub fn hard_loss(
    hard_node_idx: &[usize],
    hard_edge_idx: &[usize],
    node_masks: &[f64],
    edge_masks: &[f64],
) -> f64 {
    let nodes: f64 = hard_node_idx
        .iter()
        .map(|&i| (0.5 - node_masks[i]).max(0.0))
        .sum();
    let edges: f64 = hard_edge_idx
        .iter()
        .map(|&i| (0.5 - edge_masks[i]).max(0.0))
        .sum();
    nodes + edges
}

/// Resolve hard-set ids to indices, rejecting unknown ids.
pub fn resolve_hard_sets(
    graph: &HeteroGraph,
    hard: &HardSets,
) -> Result<(Vec<usize>, Vec<usize>), LossError> {
    let mut nodes = Vec::with_capacity(hard.hard_nodes.len());
    for id in &hard.hard_nodes {
        nodes.push(graph.node_index(id).ok_or_else(|| LossError::UnknownHardId {
            kind: "node",
            id: id.clone(),
        })?);
    }
    let mut edges = Vec::with_capacity(hard.hard_edges.len());
    for id in &hard.hard_edges {
        edges.push(graph.edge_index(id).ok_or_else(|| LossError::UnknownHardId {
            kind: "edge",
            id: id.clone(),
        })?);
    }
    Ok((nodes, edges))
}

/// Edge-mask smoothness: (1/|E|) sum_e (m_e - weighted endpoint mean)^2.
pub fn smooth_loss(
    graph: &HeteroGraph,
    weights: &LossWeights,
    node_masks: &[f64],
    edge_masks: &[f64],
) -> Result<f64, LossError> {
    if graph.edge_count() == 0 {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for (edge, &m_e) in graph.edges().iter().zip(edge_masks) {
        let u = graph.node_index(&edge.src).unwrap();
        let v = graph.node_index(&edge.dst).unwrap();
        let w_u = weights.type_weight(&graph.nodes()[u].entity_type);
        let w_v = weights.type_weight(&graph.nodes()[v].entity_type);
        if w_u + w_v == 0.0 {
            return Err(LossError::ZeroTypeWeights {
                edge: edge.id.clone(),
            });
        }
        let mean = (w_u * node_masks[u] + w_v * node_masks[v]) / (w_u + w_v);
        sum += (m_e - mean) * (m_e - mean);
    }
    Ok(sum / graph.edge_count() as f64)
}

/// Every loss term, unweighted and as its weighted contribution to the total.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub structure: f64,
    pub semantic: f64,
    pub prompt_weight: f64,
    pub entropy: f64,
    pub preserve: f64,
    pub hard: f64,
    pub smooth: f64,
    pub weighted_semantic: f64,
    pub weighted_entropy: f64,
    pub weighted_preserve: f64,
    pub weighted_hard: f64,
    pub weighted_smooth: f64,
    pub total: f64,
}

/// How the preserve term enters a total-loss evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreserveMode {
    /// Hard indicator count: the reported value.
    Hard,
    /// Sharp-sigmoid surrogate: the value whose gradient the trainer follows.
    Surrogate,
}

/// A graph plus everything needed to evaluate the total loss and its
/// gradient: the frozen semantic context, validated weights, index-resolved
/// hard sets, and optional prompt similarities.
pub struct Objective<'g> {
    graph: &'g HeteroGraph,
    ctx: SemanticContext,
    weights: LossWeights,
    tool_type: String,
    hard_node_idx: Vec<usize>,
    hard_edge_idx: Vec<usize>,
    prompt_sims: Option<Vec<f64>>,
    /// (src index, dst index, w_src/(w_src+w_dst), w_dst/(w_src+w_dst)) per edge.
    smooth_terms: Vec<(usize, usize, f64, f64)>,
}

impl<'g> Objective<'g> {
    pub fn new(
        graph: &'g HeteroGraph,
        model: &TfidfModel,
        weights: LossWeights,
        hard: &HardSets,
        tool_type: &str,
        prompt: Option<&str>,
    ) -> Result<Self, LossError> {
        weights.validate()?;
        let (hard_node_idx, hard_edge_idx) = resolve_hard_sets(graph, hard)?;
        let ctx = SemanticContext::new(graph, model);
        let prompt_sims = prompt.map(|p| ctx.prompt_similarities(model, p));

        let mut smooth_terms = Vec::with_capacity(graph.edge_count());
        for edge in graph.edges() {
            let u = graph.node_index(&edge.src).unwrap();
            let v = graph.node_index(&edge.dst).unwrap();
            let w_u = weights.type_weight(&graph.nodes()[u].entity_type);
            let w_v = weights.type_weight(&graph.nodes()[v].entity_type);
            if w_u + w_v == 0.0 {
                return Err(LossError::ZeroTypeWeights {
                    edge: edge.id.clone(),
                });
            }
            smooth_terms.push((u, v, w_u / (w_u + w_v), w_v / (w_u + w_v)));
        }

        Ok(Objective {
            graph,
            ctx,
            weights,
            tool_type: tool_type.to_string(),
            hard_node_idx,
            hard_edge_idx,
            prompt_sims,
            smooth_terms,
        })
    }

    pub fn graph(&self) -> &HeteroGraph {
        self.graph
    }

    pub fn weights(&self) -> &LossWeights {
        &self.weights
    }

    pub fn semantic_context(&self) -> &SemanticContext {
        &self.ctx
    }

    fn prompt_weight(&self, node_masks: &[f64]) -> f64 {
        match &self.prompt_sims {
            Some(sims) => self.ctx.prompt_weight(sims, node_masks),
            None => 1.0,
        }
    }

    /// Full term-by-term evaluation at the given masks.
    pub fn breakdown(
        &self,
        node_masks: &[f64],
        edge_masks: &[f64],
        mode: PreserveMode,
    ) -> Result<LossBreakdown, LossError> {
        let w = &self.weights;
        let structure = structure_loss(self.graph, w, node_masks, edge_masks);
        let semantic = self.ctx.semantic_loss(node_masks, edge_masks)?;
        let prompt_weight = self.prompt_weight(node_masks);
        let entropy = entropy_loss(node_masks, edge_masks);
        let preserve = match mode {
            PreserveMode::Hard => preserve_loss(self.graph, &self.tool_type, edge_masks),
            PreserveMode::Surrogate => {
                preserve_loss_surrogate(self.graph, &self.tool_type, edge_masks)
            }
        };
        let hard = hard_loss(
            &self.hard_node_idx,
            &self.hard_edge_idx,
            node_masks,
            edge_masks,
        );
        let smooth = smooth_loss(self.graph, w, node_masks, edge_masks)?;

        let weighted_semantic = w.alpha_semantic * prompt_weight * semantic;
        let weighted_entropy = w.beta_entropy * entropy;
        let weighted_preserve = w.gamma_preserve * preserve;
        let weighted_hard = w.delta_hard * hard;
        let weighted_smooth = w.epsilon_smooth * smooth;
        let total = structure
            + weighted_semantic
            + weighted_entropy
            + weighted_preserve
            + weighted_hard
            + weighted_smooth;
        Ok(LossBreakdown {
            structure,
            semantic,
            prompt_weight,
            entropy,
            preserve,
            hard,
            smooth,
            weighted_semantic,
            weighted_entropy,
            weighted_preserve,
            weighted_hard,
            weighted_smooth,
            total,
        })
    }

    /// Scalar total with the hard preserve count (the reported objective).
    pub fn total(&self, node_masks: &[f64], edge_masks: &[f64]) -> Result<f64, LossError> {
        Ok(self
            .breakdown(node_masks, edge_masks, PreserveMode::Hard)?
            .total)
    }

    /// Scalar total with the surrogate preserve count: smooth in every mask
    /// except at the ReLU hinge, hence the function finite differences probe.
    pub fn total_surrogate(&self, node_masks: &[f64], edge_masks: &[f64]) -> Result<f64, LossError> {
        Ok(self
            .breakdown(node_masks, edge_masks, PreserveMode::Surrogate)?
            .total)
    }

    /// Signed distance of the surrogate preserve argument from its hinge;
    /// positive means the preserve term is active.
    pub fn preserve_hinge_margin(&self, edge_masks: &[f64]) -> f64 {
        self.graph.count_nodes_of_type(&self.tool_type) as f64
            - 1.0
            - kept_edge_count_surrogate(edge_masks)
    }

    /// Analytic gradient of the surrogate total with respect to the masks.
    pub fn grad_masks(
        &self,
        node_masks: &[f64],
        edge_masks: &[f64],
    ) -> Result<(Vec<f64>, Vec<f64>), LossError> {
        let w = &self.weights;
        let mut node_g = vec![0.0; node_masks.len()];
        let mut edge_g = vec![0.0; edge_masks.len()];

        // Structure: constant slope per element.
        for (i, node) in self.graph.nodes().iter().enumerate() {
            node_g[i] += w.lambda_node * w.node_lambda(&node.entity_type);
        }
        for (i, edge) in self.graph.edges().iter().enumerate() {
            edge_g[i] += w.lambda_edge * w.relation_lambda(&edge.relation);
        }

        // Semantic, with optional prompt reweighting:
        // d/dm [w(m_V) * L(m)] = w * dL/dm + dw/dm * L, and dw/dm_v = -sim_v.
        if w.alpha_semantic > 0.0 {
            let (sn, se) = self.ctx.semantic_loss_grad(node_masks, edge_masks)?;
            let pw = self.prompt_weight(node_masks);
            match &self.prompt_sims {
                Some(sims) => {
                    let sem = self.ctx.semantic_loss(node_masks, edge_masks)?;
                    for i in 0..node_g.len() {
                        node_g[i] += w.alpha_semantic * (pw * sn[i] - sims[i] * sem);
                    }
                }
                None => {
                    for i in 0..node_g.len() {
                        node_g[i] += w.alpha_semantic * sn[i];
                    }
                }
            }
            for i in 0..edge_g.len() {
                edge_g[i] += w.alpha_semantic * pw * se[i];
            }
        }

        // Entropy: d/dm = ln((1-m)/m).
        if w.beta_entropy > 0.0 {
            for (g, &m) in node_g.iter_mut().zip(node_masks) {
                let m = m.clamp(CLAMP_EPS, 1.0 - CLAMP_EPS);
                *g += w.beta_entropy * ((1.0 - m) / m).ln();
            }
            for (g, &m) in edge_g.iter_mut().zip(edge_masks) {
                let m = m.clamp(CLAMP_EPS, 1.0 - CLAMP_EPS);
                *g += w.beta_entropy * ((1.0 - m) / m).ln();
            }
        }

        // Preserve: active only past the hinge; gradient of the surrogate.
        if w.gamma_preserve > 0.0 && self.preserve_hinge_margin(edge_masks) > 0.0 {
            for (g, &m) in edge_g.iter_mut().zip(edge_masks) {
                let s = sigmoid((m - 0.5) / PRESERVE_KAPPA);
                *g += w.gamma_preserve * (-(s * (1.0 - s)) / PRESERVE_KAPPA);
            }
        }

        // Hard retention: -1 below the threshold.
        if w.delta_hard > 0.0 {
            for &i in &self.hard_node_idx {
                if node_masks[i] < 0.5 {
                    node_g[i] -= w.delta_hard;
                }
            }
            for &i in &self.hard_edge_idx {
                if edge_masks[i] < 0.5 {
                    edge_g[i] -= w.delta_hard;
                }
            }
        }

        // Smoothness.
        if w.epsilon_smooth > 0.0 && !self.smooth_terms.is_empty() {
            let scale = w.epsilon_smooth * 2.0 / self.smooth_terms.len() as f64;
            for (e, &(u, v, fu, fv)) in self.smooth_terms.iter().enumerate() {
                let residual = edge_masks[e] - (fu * node_masks[u] + fv * node_masks[v]);
                edge_g[e] += scale * residual;
                node_g[u] -= scale * residual * fu;
                node_g[v] -= scale * residual * fv;
            }
        }

        Ok((node_g, edge_g))
    }
}
