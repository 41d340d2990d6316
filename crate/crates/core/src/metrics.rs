//! Semantic-drift measurements over model output texts: toolchain extraction
//! against a name lexicon, Jaccard similarity over tool sets, token-level
//! edit distance, common-prefix path overlap, and TF-IDF output cosine.
//!
//! Toolchains are kept in pipeline order (order of first mention), not
//! alphabetically; the common-prefix overlap is only meaningful in that order.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::semantics::{cosine, TfidfModel};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("lexicon is empty")]
    EmptyLexicon,
    #[error("lexicon row {0} needs canonical_name and alias columns")]
    MalformedLexicon(usize),
    #[error("lexicon csv: {0}")]
    LexiconCsv(#[from] crate::csvutil::CsvError),
}

/// Canonical tool names plus their aliases, matched case-insensitively and
/// longest-first.
#[derive(Debug, Clone)]
pub struct Lexicon {
    /// (lowercased alias chars, canonical name), longest alias first.
    entries: Vec<(Vec<char>, String)>,
}

impl Lexicon {
    /// Build from (canonical, alias) pairs. Every canonical name is also its
    /// own alias.
    pub fn new(pairs: &[(String, String)]) -> Result<Self, MetricsError> {
        if pairs.is_empty() {
            return Err(MetricsError::EmptyLexicon);
        }
        let mut entries: Vec<(Vec<char>, String)> = Vec::new();
        let mut seen: BTreeSet<String> = BTreeSet::new();
        let mut push = |alias: &str, canonical: &str, entries: &mut Vec<(Vec<char>, String)>| {
            let key = alias.to_lowercase();
            if !key.is_empty() && seen.insert(key.clone()) {
                entries.push((key.chars().collect(), canonical.to_string()));
            }
        };
        for (canonical, alias) in pairs {
            push(canonical, canonical, &mut entries);
            push(alias, canonical, &mut entries);
        }
        entries.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then(a.0.cmp(&b.0)));
        Ok(Lexicon { entries })
    }

    /// Parse lexicon CSV with header (canonical_name, alias).
    pub fn from_csv(text: &str) -> Result<Self, MetricsError> {
        let rows = crate::csvutil::parse(text)?;
        let mut pairs = Vec::new();
        for (i, row) in rows.iter().enumerate().skip(1) {
            if row.len() < 2 {
                return Err(MetricsError::MalformedLexicon(i + 1));
            }
            pairs.push((row[0].clone(), row[1].clone()));
        }
        Lexicon::new(&pairs)
    }
}

/// Ordered tool-name sequence extracted from one output text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Toolchain {
    pub tools: Vec<String>,
}

impl Toolchain {
    pub fn tool_set(&self) -> BTreeSet<String> {
        self.tools.iter().cloned().collect()
    }

    pub fn is_empty(&self) -> bool {
        self.tools.is_empty()
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// Case-insensitive longest-alias matching at word boundaries; tools ordered
/// by first occurrence with adjacent duplicates collapsed.
pub fn extract_toolchain(text: &str, lexicon: &Lexicon) -> Toolchain {
    let chars: Vec<char> = text.to_lowercase().chars().collect();
    let mut tools: Vec<String> = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let at_boundary = i == 0 || !is_word_char(chars[i - 1]);
        if at_boundary && is_word_char(chars[i]) {
            let mut matched = None;
            for (alias, canonical) in &lexicon.entries {
                let end = i + alias.len();
                if end <= chars.len()
                    && &chars[i..end] == alias.as_slice()
                    && (end == chars.len() || !is_word_char(chars[end]))
                {
                    matched = Some((end, canonical));
                    break;
                }
            }
            if let Some((end, canonical)) = matched {
                if tools.last().map(String::as_str) != Some(canonical.as_str()) {
                    tools.push(canonical.clone());
                }
                i = end;
                continue;
            }
        }
        i += 1;
    }
    Toolchain { tools }
}

/// |A intersect B| / |A union B|; 1.0 when both sets are empty.
pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let intersection = a.intersection(b).count() as f64;
    let union = a.union(b).count() as f64;
    intersection / union
}

/// Token-level Levenshtein distance with unit costs.
pub fn edit_distance(a: &[String], b: &[String]) -> usize {
    let (n, m) = (a.len(), b.len());
    if n == 0 {
        return m;
    }
    if m == 0 {
        return n;
    }
    let mut prev: Vec<usize> = (0..=m).collect();
    let mut curr = vec![0usize; m + 1];
    for i in 1..=n {
        curr[0] = i;
        for j in 1..=m {
            let substitution = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
            curr[j] = substitution.min(prev[j] + 1).min(curr[j - 1] + 1);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[m]
}

/// Longest-common-prefix length over min length; 0 when either is empty.
pub fn path_overlap(a: &[String], b: &[String]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let prefix = a.iter().zip(b).take_while(|(x, y)| x == y).count();
    prefix as f64 / a.len().min(b.len()) as f64
}

/// TF-IDF cosine between two texts under a model fitted on exactly this pair.
/// Returns (similarity, dissimilarity).
pub fn output_cosine(text_a: &str, text_b: &str) -> (f64, f64) {
    let model = TfidfModel::fit_texts([text_a, text_b]).expect("two documents");
    let va = model.embed(text_a);
    let vb = model.embed(text_b);
    let sim = cosine(&va, &vb);
    (sim, 1.0 - sim)
}

/// Drift measurements for one ordered pair of output texts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DriftReport {
    pub chain_a: Toolchain,
    pub chain_b: Toolchain,
    pub jaccard: f64,
    pub edit_distance: usize,
    /// Edit distance over max chain length; 0 when both chains are empty.
    pub edit_normalized: f64,
    pub path_overlap: f64,
    pub cosine_similarity: f64,
    pub cosine_dissimilarity: f64,
}

/// Compare two output texts end to end.
pub fn pair_report(text_a: &str, text_b: &str, lexicon: &Lexicon) -> DriftReport {
    let chain_a = extract_toolchain(text_a, lexicon);
    let chain_b = extract_toolchain(text_b, lexicon);
    let edit = edit_distance(&chain_a.tools, &chain_b.tools);
    let max_len = chain_a.tools.len().max(chain_b.tools.len());
    let edit_normalized = if max_len == 0 {
        0.0
    } else {
        edit as f64 / max_len as f64
    };
    let (cosine_similarity, cosine_dissimilarity) = output_cosine(text_a, text_b);
    DriftReport {
        jaccard: jaccard(&chain_a.tool_set(), &chain_b.tool_set()),
        edit_distance: edit,
        edit_normalized,
        path_overlap: path_overlap(&chain_a.tools, &chain_b.tools),
        cosine_similarity,
        cosine_dissimilarity,
        chain_a,
        chain_b,
    }
}

/// The primary drift comparison plus the base-vs-fine-tuned fidelity check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DriftAnalysis {
    /// Fine-tuned model on the original graph vs on the counterfactual.
    pub primary: DriftReport,
    /// Base vs fine-tuned model on the original graph.
    pub fidelity: DriftReport,
    /// True when base and fine-tuned toolchains on the original graph are
    /// identical sequences.
    pub fidelity_preserved: bool,
}

pub fn drift_report(
    out_base_g: &str,
    out_ft_g: &str,
    out_ft_gc: &str,
    lexicon: &Lexicon,
) -> DriftAnalysis {
    let primary = pair_report(out_ft_g, out_ft_gc, lexicon);
    let fidelity = pair_report(out_base_g, out_ft_g, lexicon);
    let fidelity_preserved = fidelity.chain_a == fidelity.chain_b;
    DriftAnalysis {
        primary,
        fidelity,
        fidelity_preserved,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedStream;

    fn lexicon() -> Lexicon {
        let names = [
            "Hisat2",
            "Samtools",
            "Scallop",
            "Gffcompare",
            "Ballgown",
            "Cufflinks",
            "Ensembl",
            "IGV",
            "StringTie",
            "VEP",
            "NCBI",
        ];
        let pairs: Vec<(String, String)> = names
            .iter()
            .map(|n| (n.to_string(), n.to_string()))
            .collect();
        Lexicon::new(&pairs).unwrap()
    }

    fn chain(tools: &[&str]) -> Vec<String> {
        tools.iter().map(|t| t.to_string()).collect()
    }

    #[test]
    fn extraction_is_case_insensitive_and_ordered_by_mention() {
        let text = "First run HISAT2, then samtools, then Scallop, finally gffcompare";
        let tc = extract_toolchain(text, &lexicon());
        assert_eq!(
            tc.tools,
            chain(&["Hisat2", "Samtools", "Scallop", "Gffcompare"])
        );
    }

    #[test]
    fn extraction_empty_text_and_adjacent_collapse() {
        let lex = lexicon();
        assert!(extract_toolchain("", &lex).is_empty());
        let tc = extract_toolchain("Hisat2 Hisat2 Samtools", &lex);
        assert_eq!(tc.tools, chain(&["Hisat2", "Samtools"]));
    }

    #[test]
    fn extraction_respects_word_boundaries_and_longest_alias() {
        let pairs = vec![
            ("Samtools".to_string(), "Samtools".to_string()),
            ("GTF Annotation".to_string(), "gtf annotation".to_string()),
            ("GATK".to_string(), "GATK".to_string()),
        ];
        let lex = Lexicon::new(&pairs).unwrap();
        // "samtoolsx" must not match; the multiword alias must.
        let tc = extract_toolchain("samtoolsx then gtf annotation via GATK", &lex);
        assert_eq!(tc.tools, chain(&["GTF Annotation", "GATK"]));
    }

    #[test]
    fn extraction_insensitive_to_casing_property() {
        let lex = lexicon();
        let mut rng = SeedStream::new(5);
        let vocab = ["Hisat2", "Samtools", "word", "VEP", "and", "IGV"];
        for _ in 0..50 {
            let words: Vec<&str> = (0..10).map(|_| vocab[rng.below(vocab.len())]).collect();
            let text = words.join(" ");
            let upper = extract_toolchain(&text.to_uppercase(), &lex);
            let lower = extract_toolchain(&text.to_lowercase(), &lex);
            assert_eq!(upper, lower);
        }
    }

    #[test]
    fn jaccard_published_tool_sets() {
        let a: BTreeSet<String> = chain(&["Gffcompare", "Hisat2", "Samtools", "Scallop"])
            .into_iter()
            .collect();
        let b: BTreeSet<String> = chain(&[
            "Ballgown",
            "Cufflinks",
            "Ensembl",
            "Hisat2",
            "IGV",
            "StringTie",
            "VEP",
        ])
        .into_iter()
        .collect();
        let j = jaccard(&a, &b);
        assert!((j - 0.1).abs() < 1e-15, "{j}");
    }

    #[test]
    fn jaccard_conventions() {
        let a: BTreeSet<String> = chain(&["x", "y"]).into_iter().collect();
        let empty = BTreeSet::new();
        assert_eq!(jaccard(&a, &a), 1.0);
        assert_eq!(jaccard(&empty, &empty), 1.0);
        let b: BTreeSet<String> = chain(&["z"]).into_iter().collect();
        assert_eq!(jaccard(&a, &b), 0.0);
        assert_eq!(jaccard(&a, &empty), 0.0);
    }

    #[test]
    fn edit_distance_published_chains() {
        // Pipeline-ordered chains: 4 tools vs 7 tools sharing only the head.
        let a = chain(&["Hisat2", "Samtools", "Scallop", "Gffcompare"]);
        let b = chain(&[
            "Hisat2",
            "StringTie",
            "Cufflinks",
            "IGV",
            "Ballgown",
            "VEP",
            "Ensembl",
        ]);
        assert_eq!(edit_distance(&a, &b), 6);
    }

    #[test]
    fn edit_distance_basics() {
        let a = chain(&["x", "y", "z"]);
        assert_eq!(edit_distance(&a, &a), 0);
        assert_eq!(edit_distance(&[], &a), 3);
        assert_eq!(edit_distance(&a, &[]), 3);
    }

    #[test]
    fn edit_distance_metric_properties_on_random_triples() {
        let mut rng = SeedStream::new(31);
        let vocab = ["a", "b", "c", "d"];
        let random_chain = |rng: &mut SeedStream| -> Vec<String> {
            let len = rng.below(6);
            (0..len).map(|_| vocab[rng.below(4)].to_string()).collect()
        };
        for _ in 0..200 {
            let a = random_chain(&mut rng);
            let b = random_chain(&mut rng);
            let c = random_chain(&mut rng);
            let dab = edit_distance(&a, &b);
            let dba = edit_distance(&b, &a);
            assert_eq!(dab, dba, "symmetry");
            assert_eq!(edit_distance(&a, &a), 0, "identity");
            let dac = edit_distance(&a, &c);
            let dcb = edit_distance(&c, &b);
            assert!(dab <= dac + dcb, "triangle inequality");
            // Bounds.
            assert!(dab >= a.len().abs_diff(b.len()));
            assert!(dab <= a.len().max(b.len()));
        }
    }

    #[test]
    fn path_overlap_published_chains() {
        let a = chain(&["Hisat2", "Samtools", "Scallop", "Gffcompare"]);
        let b = chain(&[
            "Hisat2",
            "StringTie",
            "Cufflinks",
            "IGV",
            "Ballgown",
            "VEP",
            "Ensembl",
        ]);
        assert!((path_overlap(&a, &b) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn path_overlap_conventions() {
        let a = chain(&["x", "y"]);
        let b = chain(&["z", "y"]);
        assert_eq!(path_overlap(&a, &a), 1.0);
        assert_eq!(path_overlap(&a, &b), 0.0);
        assert_eq!(path_overlap(&a, &[]), 0.0);
    }

    #[test]
    fn output_cosine_conventions_and_reference() {
        let (sim, dissim) = output_cosine("same words here", "same words here");
        assert!((sim - 1.0).abs() < 1e-12);
        assert!(dissim.abs() < 1e-12);

        let (sim, _) = output_cosine("alpha beta", "gamma delta");
        assert_eq!(sim, 0.0);

        // Reference oracle: recompute the pair tf-idf by hand.
        let a = "the aligner maps reads";
        let b = "the assembler joins reads into transcripts";
        let (sim, _) = output_cosine(a, b);

        let model = TfidfModel::fit_texts([a, b]).unwrap();
        let va = model.embed(a);
        let vb = model.embed(b);
        let expected = va.dot(&vb) / (va.norm() * vb.norm());
        assert!((sim - expected).abs() < 1e-10);
        assert!(sim > 0.0 && sim < 1.0);
    }

    #[test]
    fn drift_report_fidelity_flag_and_paper_values() {
        let lex = lexicon();
        let base_g = "Use Hisat2, then Samtools, then Scallop, then Gffcompare.";
        let ft_g = "Pipeline: HISAT2 -> SAMTOOLS -> SCALLOP -> GFFCOMPARE.";
        let ft_gc = "Align with Hisat2, quantify with StringTie and Cufflinks, \
                     inspect in IGV, analyze with Ballgown, annotate with VEP using Ensembl.";
        let analysis = drift_report(base_g, ft_g, ft_gc, &lex);
        assert!(analysis.fidelity_preserved);
        assert!((analysis.primary.jaccard - 0.1).abs() < 1e-15);
        assert_eq!(analysis.primary.edit_distance, 6);
        assert!((analysis.primary.path_overlap - 0.25).abs() < 1e-15);
        assert!((analysis.primary.edit_normalized - 6.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn drift_report_identical_everything() {
        let lex = lexicon();
        let text = "Hisat2 then Samtools.";
        let analysis = drift_report(text, text, text, &lex);
        assert!(analysis.fidelity_preserved);
        assert_eq!(analysis.primary.edit_distance, 0);
        assert_eq!(analysis.primary.jaccard, 1.0);
        assert_eq!(analysis.primary.path_overlap, 1.0);
        assert!((analysis.primary.cosine_similarity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_lexicon_rejected() {
        assert!(matches!(Lexicon::new(&[]), Err(MetricsError::EmptyLexicon)));
    }
}
