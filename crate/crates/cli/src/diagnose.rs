use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use clap::Args;
use ecgparam::diagnostics::evaluate_detector;
use ecgparam::{Condition, DiagnosticReport, IntervalReport, SourceTag};
use serde::Serialize;

use crate::analyze::AnalyzeOutput;
use crate::config::Config;
use crate::io::{ensure_dir, parse_table, read_input, read_json, write_json, write_text};
use crate::manifest::RunManifest;
use crate::plot::roc_svg;
use crate::{CliError, Common};

pub const LABEL_HEADER: [&str; 3] = ["record_id", "condition", "truth"];

#[derive(Args, Debug)]
pub struct DiagnoseArgs {
    /// `intervals.json` written by `analyze`.
    #[arg(long)]
    pub reports: PathBuf,
    /// Truth labels, header `record_id,condition,truth`.
    #[arg(long)]
    pub labels: PathBuf,
    /// Evaluate only this condition (LQT or AVBI); default is every
    /// condition present in the labels.
    #[arg(long)]
    pub condition: Option<Condition>,
    /// QTc cut-off for LQT, overriding the configuration.
    #[arg(long)]
    pub lqt_threshold: Option<f64>,
    /// PR cut-off for AVBI applied to every source, overriding the
    /// per-source configuration.
    #[arg(long)]
    pub avbi_threshold: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Serialize)]
struct DiagnoseOutput {
    manifest: RunManifest,
    reports: Vec<DiagnosticReport>,
}

fn parse_truth(cell: &str) -> Option<bool> {
    match cell.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" => Some(true),
        "0" | "false" | "no" => Some(false),
        _ => None,
    }
}

/// Operating threshold for one condition over the given reports.
fn threshold_for(condition: Condition, reports: &[&IntervalReport], config: &Config) -> Result<f64, CliError> {
    match condition {
        Condition::Lqt => Ok(config.diagnostics.lqt_threshold_ms),
        Condition::Avbi => {
            let sources: BTreeSet<SourceTag> = reports.iter().map(|r| r.source_tag).collect();
            match sources.len() {
                0 => Ok(config.diagnostics.avbi.machine_ms),
                1 => {
                    let source = *sources.iter().next().unwrap();
                    config.diagnostics.avbi.for_source(source).map_err(|e| {
                        CliError::Config(format!(
                            "{e} (set diagnostics.avbi.synthetic_ms or pass --avbi-threshold)"
                        ))
                    })
                }
                _ => Err(CliError::Config(
                    "AVBI reports mix source tags; evaluate each source separately or pass --avbi-threshold".into(),
                )),
            }
        }
    }
}

/// The configuration with command-line threshold overrides applied.
fn effective_config(args: &DiagnoseArgs, config: &Config) -> Result<Config, CliError> {
    let mut config = config.clone();
    if let Some(t) = args.lqt_threshold {
        config.diagnostics.lqt_threshold_ms = t;
    }
    if let Some(t) = args.avbi_threshold {
        let avbi = &mut config.diagnostics.avbi;
        avbi.wearable_ms = t;
        avbi.machine_ms = t;
        avbi.synthetic_ms = Some(t);
    }
    config.validate()?;
    Ok(config)
}

pub fn run(args: &DiagnoseArgs, config: &Config) -> Result<(), CliError> {
    let config = &effective_config(args, config)?;
    let (analyzed, reports_digest): (AnalyzeOutput, _) = read_json(&args.reports)?;
    let (label_text, label_digest) = read_input(&args.labels)?;
    let rows = parse_table(&label_text, &LABEL_HEADER, &args.labels)?;

    let by_id: BTreeMap<&str, &IntervalReport> = analyzed.results.iter().map(|r| (r.record_id.as_str(), r)).collect();
    // condition -> record_id -> truth, first row wins
    let mut labels: BTreeMap<Condition, BTreeMap<String, bool>> = BTreeMap::new();
    for (i, row) in rows.iter().enumerate() {
        let bad = |what: &str| CliError::Data(format!("{} row {}: bad {what}", args.labels.display(), i + 2));
        let condition: Condition = row[1].parse().map_err(|_| bad("condition"))?;
        let truth = parse_truth(&row[2]).ok_or_else(|| bad("truth"))?;
        labels
            .entry(condition)
            .or_default()
            .entry(row[0].clone())
            .or_insert(truth);
    }
    if let Some(c) = args.condition {
        labels.retain(|k, _| *k == c);
    }
    if labels.is_empty() {
        return Err(CliError::Data("no labels for the requested condition".into()));
    }

    ensure_dir(&args.common.out)?;
    let mut reports = Vec::new();
    for (condition, truth_by_id) in &labels {
        let matched: Vec<&IntervalReport> = truth_by_id.keys().filter_map(|id| by_id.get(id.as_str()).copied()).collect();
        let threshold = threshold_for(*condition, &matched, config)?;
        let scores: Vec<Option<f64>> = truth_by_id
            .keys()
            .map(|id| by_id.get(id.as_str()).and_then(|r| r.value(condition.parameter())))
            .collect();
        let truth: Vec<bool> = truth_by_id.values().copied().collect();
        let report = evaluate_detector(&scores, &truth, *condition, threshold)
            .map_err(|e| CliError::Data(format!("{condition}: {e}")))?;
        write_text(&args.common.out.join(format!("roc_{condition}.svg")), &roc_svg(&report))?;
        eprintln!(
            "{condition}: auc {:.3}, {} skipped (no measurement)",
            report.auc, report.skipped
        );
        reports.push(report);
    }

    let output = DiagnoseOutput {
        manifest: RunManifest::new(
            "diagnose",
            config,
            args.common.seed,
            vec![reports_digest, label_digest],
        ),
        reports,
    };
    write_json(&args.common.out.join("diagnostics.json"), &output)
}
