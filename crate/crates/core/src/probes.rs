//! Low-rank adapter introspection: directional shifts of token embeddings
//! under the scaled down/up projection pair, per-node attention aggregation,
//! and the three-signal alignment table (mask score / attention / shift norm).
//!
//! The full adapted weight matrix is never materialized; only the low-rank
//! pair is loaded and applied.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("embedding length mismatch: adapter expects {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("malformed adapter: {0}")]
    MalformedAdapter(String),
    #[error("adapter parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

/// A low-rank adapter pair: `down` projects input-dim -> rank, `up` projects
/// rank -> output-dim, scaled by a scalar. The composition order is forced by
/// the dimensions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdapterWeights {
    #[serde(rename = "module")]
    pub module_name: String,
    /// Scalar multiplier on the low-rank update; whether exported norms
    /// already include it depends on the exporter, so it is a load-time
    /// parameter defaulting to 1.
    #[serde(default = "default_scaling")]
    pub scaling: f64,
    pub rank: usize,
    /// rank x input-dim, row-major.
    pub down: Vec<Vec<f64>>,
    /// output-dim x rank, row-major.
    pub up: Vec<Vec<f64>>,
}

fn default_scaling() -> f64 {
    1.0
}

impl AdapterWeights {
    pub fn from_json(raw: &str) -> Result<Self, ProbeError> {
        let adapter: AdapterWeights = serde_json::from_str(raw)?;
        adapter.validate()?;
        Ok(adapter)
    }

    pub fn input_dim(&self) -> usize {
        self.down.first().map_or(0, Vec::len)
    }

    pub fn output_dim(&self) -> usize {
        self.up.len()
    }

    pub fn validate(&self) -> Result<(), ProbeError> {
        if self.rank == 0 {
            return Err(ProbeError::MalformedAdapter("rank must be >= 1".to_string()));
        }
        if self.down.len() != self.rank {
            return Err(ProbeError::MalformedAdapter(format!(
                "down has {} rows, rank is {}",
                self.down.len(),
                self.rank
            )));
        }
        let d_in = self.input_dim();
        if d_in == 0 || self.down.iter().any(|row| row.len() != d_in) {
            return Err(ProbeError::MalformedAdapter(
                "down rows must be nonempty and equal-length".to_string(),
            ));
        }
        let d_out = self.output_dim();
        if d_out == 0 || self.up.iter().any(|row| row.len() != self.rank) {
            return Err(ProbeError::MalformedAdapter(
                "up rows must have rank entries".to_string(),
            ));
        }
        if self.rank > d_in.min(d_out) {
            return Err(ProbeError::MalformedAdapter(format!(
                "rank {} exceeds min dimension {}",
                self.rank,
                d_in.min(d_out)
            )));
        }
        let all_finite = self
            .down
            .iter()
            .chain(self.up.iter())
            .flatten()
            .all(|v| v.is_finite())
            && self.scaling.is_finite();
        if !all_finite {
            return Err(ProbeError::MalformedAdapter(
                "non-finite matrix entry".to_string(),
            ));
        }
        Ok(())
    }

    /// Directional shift of a token embedding:
    /// delta = scaling * up * (down * e); the Euclidean norm of delta proxies
    /// the token's fine-tuning sensitivity.
    pub fn shift(&self, embedding: &[f64]) -> Result<(Vec<f64>, f64), ProbeError> {
        let d_in = self.input_dim();
        if embedding.len() != d_in {
            return Err(ProbeError::DimensionMismatch {
                expected: d_in,
                actual: embedding.len(),
            });
        }
        let low: Vec<f64> = self
            .down
            .iter()
            .map(|row| row.iter().zip(embedding).map(|(w, x)| w * x).sum())
            .collect();
        let delta: Vec<f64> = self
            .up
            .iter()
            .map(|row| {
                self.scaling
                    * row
                        .iter()
                        .zip(&low)
                        .map(|(w, x)| w * x)
                        .sum::<f64>()
            })
            .collect();
        let norm = delta.iter().map(|v| v * v).sum::<f64>().sqrt();
        Ok((delta, norm))
    }
}

/// A token embedding read from the embeddings CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenEmbedding {
    pub token: String,
    pub vector: Vec<f64>,
}

/// Pre-averaged attention score for one token, produced upstream.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionRecord {
    pub token: String,
    pub mean_attention: f64,
}

/// Per-node attention after aggregating over the node's tokens. Nodes whose
/// tokens are all absent from the records are reported missing, not zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeAttention {
    pub node_id: String,
    pub score: Option<f64>,
    pub missing_tokens: Vec<String>,
}

/// Mean attention per node over its token list.
pub fn attention_table(
    records: &[AttentionRecord],
    node_tokens: &BTreeMap<String, Vec<String>>,
) -> Vec<NodeAttention> {
    let by_token: BTreeMap<&str, f64> = records
        .iter()
        .map(|r| (r.token.as_str(), r.mean_attention))
        .collect();
    node_tokens
        .iter()
        .map(|(node_id, tokens)| {
            let mut present = Vec::new();
            let mut missing_tokens = Vec::new();
            for token in tokens {
                match by_token.get(token.as_str()) {
                    Some(&score) => present.push(score),
                    None => missing_tokens.push(token.clone()),
                }
            }
            let score = if present.is_empty() {
                None
            } else {
                Some(present.iter().sum::<f64>() / present.len() as f64)
            };
            NodeAttention {
                node_id: node_id.clone(),
                score,
                missing_tokens,
            }
        })
        .collect()
}

/// One row of the three-signal alignment table. Ranks are descending
/// (1 = largest) within each signal's present nodes, ties broken by node id.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlignmentRow {
    pub node_id: String,
    pub mask_score: Option<f64>,
    pub attention: Option<f64>,
    pub shift_norm: Option<f64>,
    pub rank_mask: Option<usize>,
    pub rank_attn: Option<usize>,
    pub rank_shift: Option<usize>,
    /// Bottom tercile in attention but top tercile in shift norm.
    pub discrepancy: bool,
}

fn ranks_desc(values: &BTreeMap<String, f64>) -> BTreeMap<String, usize> {
    let mut order: Vec<(&String, &f64)> = values.iter().collect();
    order.sort_by(|a, b| b.1.partial_cmp(a.1).unwrap().then(a.0.cmp(b.0)));
    order
        .into_iter()
        .enumerate()
        .map(|(i, (id, _))| (id.clone(), i + 1))
        .collect()
}

/// Join the three signals per node, rank each, and flag nodes that sit in the
/// bottom attention tercile yet the top shift tercile. Terciles need at least
/// three scored nodes in both signals; below that the flag is suppressed.
pub fn alignment_table(
    mask_scores: &BTreeMap<String, f64>,
    attention_scores: &BTreeMap<String, f64>,
    shift_norms: &BTreeMap<String, f64>,
) -> Vec<AlignmentRow> {
    let rank_mask = ranks_desc(mask_scores);
    let rank_attn = ranks_desc(attention_scores);
    let rank_shift = ranks_desc(shift_norms);

    let mut node_ids: BTreeMap<String, ()> = BTreeMap::new();
    for id in mask_scores
        .keys()
        .chain(attention_scores.keys())
        .chain(shift_norms.keys())
    {
        node_ids.insert(id.clone(), ());
    }

    let n_attn = attention_scores.len();
    let n_shift = shift_norms.len();
    let terciles_defined = n_attn >= 3 && n_shift >= 3;
    let attn_tercile = n_attn.div_ceil(3);
    let shift_tercile = n_shift.div_ceil(3);

    node_ids
        .into_keys()
        .map(|node_id| {
            let ra = rank_attn.get(&node_id).copied();
            let rs = rank_shift.get(&node_id).copied();
            let discrepancy = terciles_defined
                && matches!((ra, rs), (Some(ra), Some(rs))
                    if ra > n_attn - attn_tercile && rs <= shift_tercile);
            AlignmentRow {
                mask_score: mask_scores.get(&node_id).copied(),
                attention: attention_scores.get(&node_id).copied(),
                shift_norm: shift_norms.get(&node_id).copied(),
                rank_mask: rank_mask.get(&node_id).copied(),
                rank_attn: ra,
                rank_shift: rs,
                discrepancy,
                node_id,
            }
        })
        .collect()
}

fn opt_num(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn opt_rank(v: Option<usize>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn alignment_csv(rows: &[AlignmentRow]) -> String {
    let mut out = String::from(
        "node_id,mask_score,attention,shift_norm,rank_mask,rank_attn,rank_shift,discrepancy_flag\n",
    );
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            crate::csvutil::escape(&row.node_id),
            opt_num(row.mask_score),
            opt_num(row.attention),
            opt_num(row.shift_norm),
            opt_rank(row.rank_mask),
            opt_rank(row.rank_attn),
            opt_rank(row.rank_shift),
            u8::from(row.discrepancy),
        ));
    }
    out
}
