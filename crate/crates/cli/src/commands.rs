//! Subcommand implementations. Each returns the process exit code on the Ok
//! path; Err is classified by the caller.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};

use cfkg::baselines::{
    adjacency_heatmap, attention_mask, derive_budgets, mask_csv, random_mask, BinaryGraphMask,
    Budgets, PerturbationSpec, Strategy,
};
use cfkg::csvutil;
use cfkg::graph::HeteroGraph;
use cfkg::metrics::{drift_report, pair_report, Lexicon};
use cfkg::optim::{self, ExplainConfig};
use cfkg::pipeline::{validate_pipeline, PipelineRules};
use cfkg::probes::{alignment_csv, alignment_table, AdapterWeights};
use cfkg::semantics::{element_documents, TfidfModel};

fn ensure_out_dir(out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating output directory {}", out.display()))
}

fn write_file(out_dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = out_dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// `@file` indirection for text arguments.
fn text_or_file(arg: &str) -> Result<String> {
    match arg.strip_prefix('@') {
        Some(path) => read_to_string(Path::new(path)),
        None => Ok(arg.to_string()),
    }
}

pub fn validate(graph_path: &Path, path_arg: &str, out: &Path) -> Result<u8> {
    let graph = HeteroGraph::load(graph_path).context("loading graph")?;
    let raw = text_or_file(path_arg)?;
    let ids: Vec<String> = if path_arg.starts_with('@') {
        raw.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect()
    } else {
        raw.split(',')
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect()
    };

    let report = validate_pipeline(&graph, &ids, &PipelineRules::default())
        .context("validating pipeline")?;
    ensure_out_dir(out)?;
    write_file(
        out,
        "validation_report.json",
        &format!("{}\n", serde_json::to_string_pretty(&report)?),
    )?;
    for c in &report.constraints {
        let status = if c.passed { "pass" } else { "FAIL" };
        println!("{}: {status} ({})", c.id, c.description);
    }
    Ok(u8::from(!report.valid))
}

pub fn explain(
    graph_path: &Path,
    config_path: Option<&Path>,
    prompt_arg: Option<&str>,
    seed: Option<u64>,
    out: &Path,
) -> Result<u8> {
    let graph = HeteroGraph::load(graph_path).context("loading graph")?;
    let mut config: ExplainConfig = match config_path {
        Some(p) => serde_json::from_str(&read_to_string(p)?)
            .with_context(|| format!("parsing config {}", p.display()))?,
        None => ExplainConfig::default(),
    };
    if let Some(seed) = seed {
        config.train.seed = seed;
    }
    let prompt = match prompt_arg {
        Some(arg) => Some(text_or_file(arg)?),
        None => None,
    };

    let model = TfidfModel::fit(&element_documents(&graph)).context("fitting tf-idf")?;
    let result = optim::train(
        &graph,
        &model,
        config.weights.clone(),
        &config.hard,
        &config.train,
        prompt.as_deref(),
    )?;

    ensure_out_dir(out)?;
    write_file(out, "trace.csv", &optim::trace_csv(&result.trace))?;
    write_file(out, "masks.csv", &optim::masks_csv(&graph, &result))?;
    write_file(out, "counterfactual.json", &result.subgraph.graph.to_json())?;
    write_file(out, "vocabulary.csv", &model.vocabulary_csv())?;

    let mut node_heatmap = String::from("node_id,type,soft_mask,binary_mask\n");
    for (i, node) in graph.nodes().iter().enumerate() {
        node_heatmap.push_str(&format!(
            "{},{},{},{}\n",
            csvutil::escape(&node.id),
            csvutil::escape(&node.entity_type),
            result.soft_node_masks[i],
            u8::from(result.node_keep[i]),
        ));
    }
    write_file(out, "node_heatmap.csv", &node_heatmap)?;

    let mut edge_heatmap = String::from("edge_id,src,dst,relation,soft_mask,binary_mask\n");
    for (i, edge) in graph.edges().iter().enumerate() {
        edge_heatmap.push_str(&format!(
            "{},{},{},{},{},{}\n",
            csvutil::escape(&edge.id),
            csvutil::escape(&edge.src),
            csvutil::escape(&edge.dst),
            csvutil::escape(&edge.relation),
            result.soft_edge_masks[i],
            u8::from(result.edge_keep[i]),
        ));
    }
    write_file(out, "edge_heatmap.csv", &edge_heatmap)?;

    let summary = serde_json::json!({
        "nodes_total": graph.node_count(),
        "edges_total": graph.edge_count(),
        "nodes_kept": result.node_keep.iter().filter(|&&k| k).count(),
        "edges_kept": result.edge_keep.iter().filter(|&&k| k).count(),
        "implied_edge_drops": result.subgraph.implied_edge_drops,
        "final_breakdown": result.final_breakdown,
        "steps": config.train.steps,
        "seed": config.train.seed,
    });
    write_file(
        out,
        "summary.json",
        &format!("{}\n", serde_json::to_string_pretty(&summary)?),
    )?;
    println!(
        "counterfactual keeps {}/{} nodes, {}/{} edges (final total loss {})",
        result.node_keep.iter().filter(|&&k| k).count(),
        graph.node_count(),
        result.edge_keep.iter().filter(|&&k| k).count(),
        graph.edge_count(),
        result.final_breakdown.total,
    );
    Ok(0)
}

/// Read the binary masks out of an explain masks.csv, aligned to graph order.
fn read_reference_masks(graph: &HeteroGraph, path: &Path) -> Result<(Vec<bool>, Vec<bool>)> {
    let rows = csvutil::parse(&read_to_string(path)?)
        .with_context(|| format!("parsing {}", path.display()))?;
    let mut node_by_id: BTreeMap<String, bool> = BTreeMap::new();
    let mut edge_by_id: BTreeMap<String, bool> = BTreeMap::new();
    for (i, row) in rows.iter().enumerate().skip(1) {
        if row.len() < 4 {
            bail!("masks.csv row {} is malformed", i + 1);
        }
        let keep = row[3].trim() == "1";
        match row[1].trim() {
            "node" => node_by_id.insert(row[0].clone(), keep),
            "edge" => edge_by_id.insert(row[0].clone(), keep),
            other => bail!("masks.csv row {}: unknown kind {other}", i + 1),
        };
    }
    let node_keep = graph
        .nodes()
        .iter()
        .map(|n| {
            node_by_id
                .get(&n.id)
                .copied()
                .with_context(|| format!("masks.csv is missing node {}", n.id))
        })
        .collect::<Result<Vec<bool>>>()?;
    let edge_keep = graph
        .edges()
        .iter()
        .map(|e| {
            edge_by_id
                .get(&e.id)
                .copied()
                .with_context(|| format!("masks.csv is missing edge {}", e.id))
        })
        .collect::<Result<Vec<bool>>>()?;
    Ok((node_keep, edge_keep))
}

fn read_attention_csv(path: &Path) -> Result<BTreeMap<String, f64>> {
    let rows = csvutil::parse(&read_to_string(path)?)
        .with_context(|| format!("parsing {}", path.display()))?;
    let mut scores = BTreeMap::new();
    for (i, row) in rows.iter().enumerate().skip(1) {
        if row.len() < 2 {
            bail!("attention csv row {} is malformed", i + 1);
        }
        let value: f64 = row[1]
            .trim()
            .parse()
            .with_context(|| format!("attention csv row {}: bad number {}", i + 1, row[1]))?;
        if !value.is_finite() {
            bail!("attention csv row {}: non-finite score {value}", i + 1);
        }
        scores.insert(row[0].clone(), value);
    }
    Ok(scores)
}

pub fn perturb(
    graph_path: &Path,
    reference: &Path,
    strategy_arg: &str,
    repetitions: usize,
    attention_path: Option<&Path>,
    seed: u64,
    out: &Path,
) -> Result<u8> {
    let graph = HeteroGraph::load(graph_path).context("loading graph")?;
    let (node_keep, edge_keep) = read_reference_masks(&graph, &reference.join("masks.csv"))?;
    let budgets = derive_budgets(&graph, &node_keep, &edge_keep);

    let strategies: Vec<Strategy> = if strategy_arg == "all" {
        Strategy::ALL.to_vec()
    } else {
        match Strategy::parse(strategy_arg) {
            Some(s) => vec![s],
            None => bail!(
                "unknown strategy {strategy_arg}; expected one of {} or all",
                Strategy::ALL.map(|s| s.name()).join(", ")
            ),
        }
    };

    let needs_attention = strategies.iter().any(Strategy::needs_attention);
    let attention = match (needs_attention, attention_path) {
        (true, None) => bail!("attention strategies requested but --attention not provided"),
        (_, Some(p)) => Some(read_attention_csv(p)?),
        (false, None) => None,
    };

    ensure_out_dir(out)?;
    write_file(
        out,
        "budgets.json",
        &format!("{}\n", serde_json::to_string_pretty(&budgets)?),
    )?;

    for (s_idx, &strategy) in strategies.iter().enumerate() {
        let reps = if strategy.needs_attention() { 1 } else { repetitions.max(1) };
        for rep in 1..=reps {
            let spec = PerturbationSpec {
                strategy,
                budgets: budgets_for(strategy, &budgets),
                seed: seed
                    .wrapping_add(s_idx as u64 * 1000)
                    .wrapping_add(rep as u64),
            };
            let (mask, report) = match strategy {
                Strategy::AttentionHigh | Strategy::AttentionLow => {
                    attention_mask(&graph, &spec, attention.as_ref().unwrap())?
                }
                _ => random_mask(&graph, &spec)?,
            };
            let stem = format!("{}_{rep}", strategy.name());
            write_masks_bundle(out, &graph, &stem, &mask, &report)?;
        }
    }
    Ok(0)
}

/// Aligned variants consume the histogram; unaligned ones only the counts.
fn budgets_for(strategy: Strategy, budgets: &Budgets) -> Budgets {
    let mut b = budgets.clone();
    if !strategy.type_aligned() {
        b.type_histogram.clear();
    }
    b
}

fn write_masks_bundle(
    out: &Path,
    graph: &HeteroGraph,
    stem: &str,
    mask: &BinaryGraphMask,
    report: &cfkg::baselines::CascadeReport,
) -> Result<()> {
    write_file(out, &format!("{stem}_mask.csv"), &mask_csv(graph, mask))?;
    write_file(
        out,
        &format!("{stem}_heatmap.csv"),
        &adjacency_heatmap(graph, mask).to_csv(),
    )?;
    write_file(
        out,
        &format!("{stem}_report.json"),
        &format!("{}\n", serde_json::to_string_pretty(report)?),
    )?;
    Ok(())
}

pub fn metrics(outputs: &Path, lexicon_path: &Path, out: &Path) -> Result<u8> {
    let lexicon = Lexicon::from_csv(&read_to_string(lexicon_path)?)
        .context("parsing lexicon csv")?;

    // Collect <graph>_<model>.txt files.
    let mut texts: BTreeMap<(String, String), String> = BTreeMap::new();
    for entry in fs::read_dir(outputs)
        .with_context(|| format!("reading outputs directory {}", outputs.display()))?
    {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("txt") {
            continue;
        }
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default();
        let Some((experiment, model)) = stem.rsplit_once('_') else {
            continue;
        };
        texts.insert(
            (experiment.to_string(), model.to_string()),
            read_to_string(&path)?,
        );
    }
    if texts.is_empty() {
        bail!("no <graph>_<model>.txt files found in {}", outputs.display());
    }

    let mut csv = String::from(
        "experiment,model,jaccard,edit_distance,edit_norm,path_overlap,cosine_similarity,cosine_dissimilarity,missing_reference\n",
    );
    let mut heatmap = String::from("row,jaccard,edit_norm,path_overlap\n");
    for ((experiment, model), text) in &texts {
        if experiment == "G" {
            continue;
        }
        match texts.get(&("G".to_string(), model.clone())) {
            Some(reference) => {
                let r = pair_report(reference, text, &lexicon);
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{},{},0\n",
                    csvutil::escape(experiment),
                    csvutil::escape(model),
                    r.jaccard,
                    r.edit_distance,
                    r.edit_normalized,
                    r.path_overlap,
                    r.cosine_similarity,
                    r.cosine_dissimilarity,
                ));
                heatmap.push_str(&format!(
                    "{}_{},{},{},{}\n",
                    csvutil::escape(experiment),
                    csvutil::escape(model),
                    r.jaccard,
                    r.edit_normalized,
                    r.path_overlap,
                ));
            }
            None => {
                csv.push_str(&format!(
                    "{},{},,,,,,,1\n",
                    csvutil::escape(experiment),
                    csvutil::escape(model),
                ));
            }
        }
    }

    ensure_out_dir(out)?;
    write_file(out, "metrics.csv", &csv)?;
    write_file(out, "heatmap_matrix.csv", &heatmap)?;

    // Full drift analysis when the case-study triple is present.
    let triple = (
        texts.get(&("G".to_string(), "base".to_string())),
        texts.get(&("G".to_string(), "adapter".to_string())),
        texts.get(&("Gc".to_string(), "adapter".to_string())),
    );
    if let (Some(base_g), Some(ft_g), Some(ft_gc)) = triple {
        let analysis = drift_report(base_g, ft_g, ft_gc, &lexicon);
        write_file(
            out,
            "drift_analysis.json",
            &format!("{}\n", serde_json::to_string_pretty(&analysis)?),
        )?;
        println!(
            "primary drift: jaccard {}, edit {}, overlap {} (fidelity preserved: {})",
            analysis.primary.jaccard,
            analysis.primary.edit_distance,
            analysis.primary.path_overlap,
            analysis.fidelity_preserved,
        );
    }
    Ok(0)
}

fn read_embeddings_csv(path: &Path) -> Result<Vec<(String, Vec<f64>)>> {
    let rows = csvutil::parse(&read_to_string(path)?)
        .with_context(|| format!("parsing {}", path.display()))?;
    let mut embeddings = Vec::new();
    for (i, row) in rows.iter().enumerate().skip(1) {
        if row.len() < 2 {
            bail!("embeddings csv row {} is malformed", i + 1);
        }
        let mut vector = Vec::with_capacity(row.len() - 1);
        for field in &row[1..] {
            let value = field
                .trim()
                .parse::<f64>()
                .with_context(|| format!("embeddings csv row {}: bad number", i + 1))?;
            if !value.is_finite() {
                bail!("embeddings csv row {}: non-finite entry {value}", i + 1);
            }
            vector.push(value);
        }
        embeddings.push((row[0].clone(), vector));
    }
    Ok(embeddings)
}

/// Node soft-mask scores from an explain masks.csv.
fn read_mask_scores(path: &Path) -> Result<BTreeMap<String, f64>> {
    let rows = csvutil::parse(&read_to_string(path)?)
        .with_context(|| format!("parsing {}", path.display()))?;
    let mut scores = BTreeMap::new();
    for (i, row) in rows.iter().enumerate().skip(1) {
        if row.len() < 4 {
            bail!("masks.csv row {} is malformed", i + 1);
        }
        if row[1].trim() == "node" {
            let value = row[2]
                .trim()
                .parse::<f64>()
                .with_context(|| format!("masks.csv row {}: bad soft mask", i + 1))?;
            if !value.is_finite() {
                bail!("masks.csv row {}: non-finite soft mask {value}", i + 1);
            }
            scores.insert(row[0].clone(), value);
        }
    }
    Ok(scores)
}

pub fn probe(
    adapter_path: &Path,
    embeddings_path: &Path,
    attention_path: Option<&Path>,
    masks_path: Option<&Path>,
    out: &Path,
) -> Result<u8> {
    let adapter =
        AdapterWeights::from_json(&read_to_string(adapter_path)?).context("loading adapter")?;
    let embeddings = read_embeddings_csv(embeddings_path)?;

    let mut shift_norms: BTreeMap<String, f64> = BTreeMap::new();
    let mut shifts_csv = String::from("token,shift_norm\n");
    for (token, vector) in &embeddings {
        let (_, norm) = adapter.shift(vector)?;
        shift_norms.insert(token.clone(), norm);
    }
    for (token, norm) in &shift_norms {
        shifts_csv.push_str(&format!("{},{}\n", csvutil::escape(token), norm));
    }

    let attention = match attention_path {
        Some(p) => read_attention_csv(p)?,
        None => BTreeMap::new(),
    };
    let mask_scores = match masks_path {
        Some(p) => read_mask_scores(p)?,
        None => BTreeMap::new(),
    };

    let rows = alignment_table(&mask_scores, &attention, &shift_norms);
    ensure_out_dir(out)?;
    write_file(out, "shifts.csv", &shifts_csv)?;
    write_file(out, "alignment.csv", &alignment_csv(&rows))?;
    let flagged: Vec<&str> = rows
        .iter()
        .filter(|r| r.discrepancy)
        .map(|r| r.node_id.as_str())
        .collect();
    println!(
        "probed {} tokens under adapter {} (discrepancy flags: {})",
        embeddings.len(),
        adapter.module_name,
        if flagged.is_empty() {
            "none".to_string()
        } else {
            flagged.join(", ")
        },
    );
    Ok(0)
}

pub fn report(out: &Path) -> Result<u8> {
    let mut sections = serde_json::Map::new();
    let summary_path = out.join("summary.json");
    if summary_path.exists() {
        let summary: serde_json::Value = serde_json::from_str(&read_to_string(&summary_path)?)?;
        sections.insert("explain".to_string(), summary);
    }
    let trace_path = out.join("trace.csv");
    if trace_path.exists() {
        let rows = csvutil::parse(&read_to_string(&trace_path)?)?;
        sections.insert(
            "trace_steps".to_string(),
            serde_json::json!(rows.len().saturating_sub(1)),
        );
    }
    let metrics_path = out.join("metrics.csv");
    if metrics_path.exists() {
        let rows = csvutil::parse(&read_to_string(&metrics_path)?)?;
        sections.insert(
            "metric_rows".to_string(),
            serde_json::json!(rows.len().saturating_sub(1)),
        );
    }
    let budgets_path = out.join("budgets.json");
    if budgets_path.exists() {
        let budgets: serde_json::Value = serde_json::from_str(&read_to_string(&budgets_path)?)?;
        sections.insert("perturb_budgets".to_string(), budgets);
    }
    if sections.is_empty() {
        bail!("no known artifacts found in {}", out.display());
    }
    let report = serde_json::Value::Object(sections);
    write_file(
        out,
        "report.json",
        &format!("{}\n", serde_json::to_string_pretty(&report)?),
    )?;
    Ok(0)
}
