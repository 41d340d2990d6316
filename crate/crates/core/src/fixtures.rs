//! Paths to the fixture data shipped at the workspace root, plus loaders for
//! the two graphs used throughout the test suites.

use std::path::PathBuf;

use crate::graph::HeteroGraph;

/// Absolute path of a file under the workspace `fixtures/` directory.
pub fn path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

/// The transcript-assembly pipeline graph (12 nodes, 12 edges).
pub fn transcript_assembly() -> HeteroGraph {
    HeteroGraph::load(path("transcript_assembly.json")).expect("fixture graph")
}

/// A minimal pipeline graph with 9 maskable elements (5 nodes, 4 edges);
/// small enough to enumerate every binary mask exhaustively.
pub fn tiny_pipeline() -> HeteroGraph {
    HeteroGraph::load(path("tiny_pipeline.json")).expect("fixture graph")
}

/// The canonical valid path through the transcript-assembly fixture.
pub fn transcript_assembly_path() -> Vec<String> {
    [
        "NCBI",
        "fastq_reads",
        "Hisat2",
        "sam_alignments",
        "Samtools",
        "bam_sorted",
        "Scallop",
        "gtf_assembly",
        "Gffcompare",
        "eval_info",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}
