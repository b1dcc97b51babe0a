use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use ecgparam::agreement::{
    agreement_report, agreement_table_csv, bland_altman, stratified_correlation, stratified_table_csv, StratifiedRow,
    DEFAULT_LOA_Z,
};
use ecgparam::record::{pair_by_record, parse_annotations, MeasurementPair};
use ecgparam::{AgreementReport, AnnotationSet, PairedMeasurements, Parameter};
use serde::Serialize;

use crate::analyze::AnalyzeOutput;
use crate::config::Config;
use crate::io::{ensure_dir, parse_table, read_input, read_json, write_json, write_text};
use crate::manifest::RunManifest;
use crate::plot::bland_altman_svg;
use crate::{CliError, Common};

/// Annotator id given to measured intervals in joins and plots.
pub const MEASURED_SOURCE: &str = "ecgparam";
/// Lower edges of the quality bins used by `--stratify-by-quality`.
const QUALITY_BIN_EDGES: [f64; 5] = [0.5, 0.6, 0.7, 0.8, 0.9];

#[derive(Args, Debug)]
pub struct ValidateArgs {
    /// `intervals.json` written by `analyze`.
    #[arg(long)]
    pub reports: PathBuf,
    /// Reference annotation CSV.
    #[arg(long)]
    pub annotations: PathBuf,
    /// CSV with header `record_id,group` for a per-group correlation table.
    #[arg(long)]
    pub stratify_by: Option<PathBuf>,
    /// Per-group correlation table over quality-score bins.
    #[arg(long)]
    pub stratify_by_quality: bool,
    #[command(flatten)]
    pub common: Common,
}

/// One entry per parameter: the agreement report, or a warning row when the
/// join or the statistics could not be computed.
#[derive(Debug, Serialize)]
#[serde(untagged)]
enum ParameterOutcome {
    Report {
        #[serde(flatten)]
        report: AgreementReport,
        /// Records present on one side only or missing this parameter.
        skipped: Vec<String>,
    },
    Warning {
        parameter: Parameter,
        warning: String,
        skipped: Vec<String>,
    },
}

#[derive(Debug, Serialize)]
struct ValidateOutput {
    manifest: RunManifest,
    parameters: Vec<ParameterOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    stratified: Option<Vec<StratifiedRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    stratified_by_quality: Option<Vec<StratifiedRow>>,
}

fn quality_bin(q: f64) -> String {
    match QUALITY_BIN_EDGES.iter().rev().find(|&&e| q >= e) {
        Some(e) => format!("q{:.1}-{:.1}", e, e + 0.1),
        None => "q<0.5".to_string(),
    }
}

/// Splits each parameter's pairs by group and correlates within groups.
fn stratify(joined: &[PairedMeasurements], group_of: &BTreeMap<String, String>) -> Vec<StratifiedRow> {
    let mut rows = Vec::new();
    for paired in joined {
        let mut groups: BTreeMap<String, PairedMeasurements> = BTreeMap::new();
        for pair in &paired.pairs {
            let Some(group) = group_of.get(&pair.record_id) else {
                continue;
            };
            groups
                .entry(group.clone())
                .or_insert_with(|| PairedMeasurements {
                    parameter: paired.parameter,
                    source_a: paired.source_a.clone(),
                    source_b: paired.source_b.clone(),
                    pairs: Vec::new(),
                })
                .pairs
                .push(MeasurementPair::clone(pair));
        }
        rows.extend(stratified_correlation(&groups));
    }
    rows
}

pub fn run(args: &ValidateArgs, config: &Config) -> Result<(), CliError> {
    let (analyzed, reports_digest): (AnalyzeOutput, _) = read_json(&args.reports)?;
    let (ann_text, ann_digest) = read_input(&args.annotations)?;
    let references = parse_annotations(&ann_text)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.annotations.display())))?;
    let mut digests = vec![reports_digest, ann_digest];

    let measured: Vec<AnnotationSet> = analyzed
        .results
        .iter()
        .map(|r| r.to_annotation(MEASURED_SOURCE))
        .collect();

    ensure_dir(&args.common.out)?;
    let mut outcomes = Vec::new();
    let mut reports = Vec::new();
    let mut joined = Vec::new();
    for parameter in Parameter::ALL {
        let join = match pair_by_record(&measured, &references, parameter) {
            Ok(j) => j,
            Err(e) => {
                eprintln!("warning: {parameter}: {e}");
                outcomes.push(ParameterOutcome::Warning {
                    parameter,
                    warning: e.to_string(),
                    skipped: Vec::new(),
                });
                continue;
            }
        };
        if let Ok(ba) = bland_altman(&join.paired, DEFAULT_LOA_Z) {
            let path = args.common.out.join(format!("bland_altman_{parameter}.svg"));
            write_text(&path, &bland_altman_svg(&join.paired, &ba))?;
        }
        let skipped = join.skipped;
        outcomes.push(match agreement_report(&join.paired) {
            Ok(report) => {
                reports.push(report.clone());
                ParameterOutcome::Report { report, skipped }
            }
            Err(e) => {
                eprintln!("warning: {parameter}: {e}");
                ParameterOutcome::Warning {
                    parameter,
                    warning: e.to_string(),
                    skipped,
                }
            }
        });
        joined.push(join.paired);
    }

    write_text(&args.common.out.join("agreement_table.csv"), &agreement_table_csv(&reports))?;

    let stratified = match &args.stratify_by {
        None => None,
        Some(path) => {
            let (text, digest) = read_input(path)?;
            digests.push(digest);
            let group_of: BTreeMap<String, String> = parse_table(&text, &["record_id", "group"], path)?
                .into_iter()
                .map(|row| (row[0].clone(), row[1].clone()))
                .collect();
            let rows = stratify(&joined, &group_of);
            write_text(&args.common.out.join("stratified.csv"), &stratified_table_csv(&rows))?;
            Some(rows)
        }
    };
    let stratified_by_quality = if args.stratify_by_quality {
        let group_of: BTreeMap<String, String> = analyzed
            .results
            .iter()
            .map(|r| (r.record_id.clone(), quality_bin(r.quality)))
            .collect();
        let rows = stratify(&joined, &group_of);
        write_text(
            &args.common.out.join("stratified_quality.csv"),
            &stratified_table_csv(&rows),
        )?;
        Some(rows)
    } else {
        None
    };

    let output = ValidateOutput {
        manifest: RunManifest::new("validate", config, args.common.seed, digests),
        parameters: outcomes,
        stratified,
        stratified_by_quality,
    };
    write_json(&args.common.out.join("agreement.json"), &output)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quality_bins() {
        assert_eq!(quality_bin(0.5), "q0.5-0.6");
        assert_eq!(quality_bin(0.85), "q0.8-0.9");
        assert_eq!(quality_bin(1.0), "q0.9-1.0");
        assert_eq!(quality_bin(0.2), "q<0.5");
    }
}
