//! Graph textualization and the TF-IDF semantic surrogate.
//!
//! Every node and edge is rendered to a deterministic element document; a
//! TF-IDF model is fitted once on the original graph's documents and frozen.
//! The graph-level vector of a masked graph is the mask-weighted sum of the
//! per-element vectors, which equals the vector of the concatenated retained
//! documents at binary masks and interpolates linearly in between. Semantic
//! loss is one minus cosine similarity against the full-graph vector.

use std::collections::BTreeMap;
use std::collections::HashMap;

use thiserror::Error;

use crate::graph::HeteroGraph;

#[derive(Debug, Error)]
pub enum SemanticsError {
    #[error("empty corpus: cannot fit tf-idf on zero documents")]
    EmptyCorpus,
    #[error("mask length mismatch: expected {expected} {kind} entries, got {got}")]
    LengthMismatch {
        kind: &'static str,
        expected: usize,
        got: usize,
    },
}

/// Which graph element a document was rendered from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementRef {
    Node(usize),
    Edge(usize),
}

/// Rendered textual form of one node or edge.
#[derive(Debug, Clone)]
pub struct ElementDocument {
    pub element: ElementRef,
    pub text: String,
}

/// Lowercase and split on non-alphanumeric characters, keeping digits.
/// "rels_input" tokenizes to ["rels", "input"].
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_string())
        .collect()
}

/// Render one document per node and per edge, in index order.
pub fn element_documents(graph: &HeteroGraph) -> Vec<ElementDocument> {
    let mut docs = Vec::with_capacity(graph.node_count() + graph.edge_count());
    for (i, node) in graph.nodes().iter().enumerate() {
        let text = if node.text.is_empty() {
            format!("{} {}:", node.entity_type, node.id)
        } else {
            format!("{} {}: {}", node.entity_type, node.id, node.text)
        };
        docs.push(ElementDocument {
            element: ElementRef::Node(i),
            text,
        });
    }
    for (i, edge) in graph.edges().iter().enumerate() {
        let text = if edge.text.is_empty() {
            format!("{} --{}--> {}:", edge.src, edge.relation, edge.dst)
        } else {
            format!(
                "{} --{}--> {}: {}",
                edge.src, edge.relation, edge.dst, edge.text
            )
        };
        docs.push(ElementDocument {
            element: ElementRef::Edge(i),
            text,
        });
    }
    docs
}

/// Frozen vocabulary and smoothed IDF weights.
#[derive(Debug, Clone)]
pub struct TfidfModel {
    vocabulary: Vec<String>,
    index: HashMap<String, usize>,
    idf: Vec<f64>,
    fitted_on: u64,
}

impl TfidfModel {
    /// Fit on a corpus: vocabulary is the sorted term set, and
    /// idf(t) = ln((1 + N) / (1 + df(t))) + 1 with N the corpus size.
    pub fn fit(corpus: &[ElementDocument]) -> Result<Self, SemanticsError> {
        Self::fit_texts(corpus.iter().map(|d| d.text.as_str()))
    }

    pub fn fit_texts<'a>(texts: impl IntoIterator<Item = &'a str>) -> Result<Self, SemanticsError> {
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        let mut n_docs = 0usize;
        let mut fingerprint = Fnv1a::new();
        for text in texts {
            n_docs += 1;
            fingerprint.update(text.as_bytes());
            fingerprint.update(&[0x1f]);
            let mut seen: Vec<String> = tokenize(text);
            seen.sort();
            seen.dedup();
            for term in seen {
                *df.entry(term).or_insert(0) += 1;
            }
        }
        if n_docs == 0 {
            return Err(SemanticsError::EmptyCorpus);
        }

        let vocabulary: Vec<String> = df.keys().cloned().collect();
        let idf: Vec<f64> = df
            .values()
            .map(|&d| ((1.0 + n_docs as f64) / (1.0 + d as f64)).ln() + 1.0)
            .collect();
        let index = vocabulary
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Ok(TfidfModel {
            vocabulary,
            index,
            idf,
            fitted_on: fingerprint.finish(),
        })
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn fitted_on(&self) -> u64 {
        self.fitted_on
    }

    /// Raw term counts multiplied by idf; out-of-vocabulary terms are ignored
    /// and no normalization is applied (cosine is scale-invariant).
    pub fn embed(&self, text: &str) -> TermVector {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for term in tokenize(text) {
            if let Some(&i) = self.index.get(&term) {
                *counts.entry(i).or_insert(0.0) += 1.0;
            }
        }
        for (i, w) in counts.iter_mut() {
            *w *= self.idf[*i];
        }
        TermVector { weights: counts }
    }

    /// Vocabulary dump as CSV rows (term, index, idf).
    pub fn vocabulary_csv(&self) -> String {
        let mut out = String::from("term,index,idf\n");
        for (i, term) in self.vocabulary.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", term, i, self.idf[i]));
        }
        out
    }
}

/// Sparse nonnegative term-weight vector.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TermVector {
    weights: BTreeMap<usize, f64>,
}

impl TermVector {
    pub fn zero() -> Self {
        TermVector::default()
    }

    pub fn is_zero(&self) -> bool {
        self.weights.values().all(|w| *w == 0.0)
    }

    pub fn get(&self, index: usize) -> f64 {
        self.weights.get(&index).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.weights.iter().map(|(&i, &w)| (i, w))
    }

    pub fn dot(&self, other: &TermVector) -> f64 {
        // Iterate the sparser side.
        let (small, large) = if self.weights.len() <= other.weights.len() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .weights
            .iter()
            .map(|(i, w)| w * large.get(*i))
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.weights.values().map(|w| w * w).sum::<f64>().sqrt()
    }

    pub fn add_scaled(&mut self, other: &TermVector, scale: f64) {
        for (&i, &w) in &other.weights {
            *self.weights.entry(i).or_insert(0.0) += scale * w;
        }
    }
}

/// Cosine similarity with the zero-vector convention: if either norm is zero
/// the similarity is 0.
pub fn cosine(a: &TermVector, b: &TermVector) -> f64 {
    let na = a.norm();
    let nb = b.norm();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    a.dot(b) / (na * nb)
}

/// Pre-embedded element documents for one graph under one frozen model.
/// All soft-mask semantic quantities are computed against this context.
#[derive(Debug, Clone)]
pub struct SemanticContext {
    node_vectors: Vec<TermVector>,
    edge_vectors: Vec<TermVector>,
    /// Vector of the full textualization (all masks at one).
    full: TermVector,
}

impl SemanticContext {
    pub fn new(graph: &HeteroGraph, model: &TfidfModel) -> Self {
        let docs = element_documents(graph);
        let mut node_vectors = vec![TermVector::zero(); graph.node_count()];
        let mut edge_vectors = vec![TermVector::zero(); graph.edge_count()];
        for doc in &docs {
            let v = model.embed(&doc.text);
            match doc.element {
                ElementRef::Node(i) => node_vectors[i] = v,
                ElementRef::Edge(i) => edge_vectors[i] = v,
            }
        }
        let mut full = TermVector::zero();
        for v in node_vectors.iter().chain(edge_vectors.iter()) {
            full.add_scaled(v, 1.0);
        }
        SemanticContext {
            node_vectors,
            edge_vectors,
            full,
        }
    }

    pub fn node_vector(&self, i: usize) -> &TermVector {
        &self.node_vectors[i]
    }

    pub fn edge_vector(&self, i: usize) -> &TermVector {
        &self.edge_vectors[i]
    }

    pub fn full_vector(&self) -> &TermVector {
        &self.full
    }

    fn check_lengths(&self, node_masks: &[f64], edge_masks: &[f64]) -> Result<(), SemanticsError> {
        if node_masks.len() != self.node_vectors.len() {
            return Err(SemanticsError::LengthMismatch {
                kind: "node",
                expected: self.node_vectors.len(),
                got: node_masks.len(),
            });
        }
        if edge_masks.len() != self.edge_vectors.len() {
            return Err(SemanticsError::LengthMismatch {
                kind: "edge",
                expected: self.edge_vectors.len(),
                got: edge_masks.len(),
            });
        }
        Ok(())
    }

    /// Mask-weighted graph vector: sum of m_v * vec(doc_v) and m_e * vec(doc_e).
    pub fn soft_graph_vector(
        &self,
        node_masks: &[f64],
        edge_masks: &[f64],
    ) -> Result<TermVector, SemanticsError> {
        self.check_lengths(node_masks, edge_masks)?;
        let mut out = TermVector::zero();
        for (v, &m) in self.node_vectors.iter().zip(node_masks) {
            out.add_scaled(v, m);
        }
        for (v, &m) in self.edge_vectors.iter().zip(edge_masks) {
            out.add_scaled(v, m);
        }
        Ok(out)
    }

    /// 1 - cos(full graph vector, mask-weighted vector).
    pub fn semantic_loss(
        &self,
        node_masks: &[f64],
        edge_masks: &[f64],
    ) -> Result<f64, SemanticsError> {
        let soft = self.soft_graph_vector(node_masks, edge_masks)?;
        Ok(1.0 - cosine(&self.full, &soft))
    }

    /// Analytic gradient of `semantic_loss` with respect to every mask entry.
    ///
    /// With s the soft vector and g the fixed full vector,
    /// d cos / d m_i = (g . v_i) / (|g||s|) - (g . s)(s . v_i) / (|g||s|^3),
    /// and the loss gradient is its negation.
    pub fn semantic_loss_grad(
        &self,
        node_masks: &[f64],
        edge_masks: &[f64],
    ) -> Result<(Vec<f64>, Vec<f64>), SemanticsError> {
        let soft = self.soft_graph_vector(node_masks, edge_masks)?;
        let g_norm = self.full.norm();
        let s_norm = soft.norm();
        if g_norm == 0.0 || s_norm < 1e-300 {
            return Ok((
                vec![0.0; node_masks.len()],
                vec![0.0; edge_masks.len()],
            ));
        }
        let gs = self.full.dot(&soft);
        let grad_for = |v: &TermVector| {
            let gv = self.full.dot(v);
            let sv = soft.dot(v);
            -(gv / (g_norm * s_norm) - gs * sv / (g_norm * s_norm.powi(3)))
        };
        let node_grad = self.node_vectors.iter().map(grad_for).collect();
        let edge_grad = self.edge_vectors.iter().map(grad_for).collect();
        Ok((node_grad, edge_grad))
    }

    /// Per-node TF-IDF cosine similarity between node documents and a prompt.
    pub fn prompt_similarities(&self, model: &TfidfModel, prompt: &str) -> Vec<f64> {
        let p = model.embed(prompt);
        self.node_vectors.iter().map(|v| cosine(v, &p)).collect()
    }

    /// Prompt-relevance reweighting factor:
    /// w = 1 + sum_v (1 - m_v) * sim(doc_v, prompt). Always >= 1 for
    /// nonnegative similarities and masks in [0, 1].
    pub fn prompt_weight(&self, prompt_sims: &[f64], node_masks: &[f64]) -> f64 {
        1.0 + prompt_sims
            .iter()
            .zip(node_masks)
            .map(|(s, m)| (1.0 - m) * s)
            .sum::<f64>()
    }
}

/// FNV-1a, used only to fingerprint the fitted corpus.
struct Fnv1a(u64);

impl Fnv1a {
    fn new() -> Self {
        Fnv1a(0xcbf29ce484222325)
    }
    fn update(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x100000001b3);
        }
    }
    fn finish(&self) -> u64 {
        self.0
    }
}
