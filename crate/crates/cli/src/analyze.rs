use std::path::{Path, PathBuf};

use clap::Args;
use ecgparam::preprocess::passes_gate;
use ecgparam::record::parse_record;
use ecgparam::{analyze_record, signal_quality, FiducialSet, IntervalReport, QualityScore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::io::{ensure_dir, expand_inputs, read_input, write_json};
use crate::manifest::{InputDigest, RunManifest};
use crate::{CliError, Common};

pub const REPORT_FILE: &str = "intervals.json";

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// Record CSV files, or directories of them.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Also write per-beat fiducial indices to `<out>/fiducials/`.
    #[arg(long)]
    pub fiducials: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Excluded {
    pub record_id: String,
    pub quality: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputFailure {
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeOutput {
    pub manifest: RunManifest,
    pub results: Vec<IntervalReport>,
    pub excluded: Vec<Excluded>,
    pub errors: Vec<InputFailure>,
}

enum Outcome {
    Measured(IntervalReport, FiducialSet),
    Excluded(Excluded),
    Failed(InputFailure),
}

fn analyze_one(path: &Path, text: &str, config: &Config) -> Outcome {
    let fail = |message: String| {
        Outcome::Failed(InputFailure {
            path: path.display().to_string(),
            message,
        })
    };
    let record = match parse_record(text) {
        Ok(r) => r,
        Err(e) => return fail(e.to_string()),
    };
    // records too short to score are treated as unusable, not as errors
    let quality = signal_quality(&record).unwrap_or_else(|_| QualityScore::zero());
    if !passes_gate(quality.value, config.preprocess.quality_threshold) {
        return Outcome::Excluded(Excluded {
            record_id: record.record_id,
            quality: quality.value,
        });
    }
    match analyze_record(
        &record,
        &quality,
        &config.preprocess,
        &config.delineator,
        config.intervals.qtc_formula,
    ) {
        Ok((report, fiducials)) => Outcome::Measured(report, fiducials),
        Err(e) => fail(format!("{}: {e}", record.record_id)),
    }
}

pub fn run(args: &AnalyzeArgs, config: &Config) -> Result<(), CliError> {
    let files = expand_inputs(&args.inputs)?;
    if files.is_empty() {
        return Err(CliError::Config("no input records found".into()));
    }

    let mut digests: Vec<InputDigest> = Vec::new();
    let mut failures = Vec::new();
    let mut texts = Vec::new();
    for path in &files {
        match read_input(path) {
            Ok((text, digest)) => {
                digests.push(digest);
                texts.push((path.clone(), text));
            }
            Err(e) => failures.push(InputFailure {
                path: path.display().to_string(),
                message: e.to_string(),
            }),
        }
    }

    let outcomes: Vec<Outcome> = texts
        .par_iter()
        .map(|(path, text)| analyze_one(path, text, config))
        .collect();

    let mut results = Vec::new();
    let mut excluded = Vec::new();
    for outcome in outcomes {
        match outcome {
            Outcome::Measured(r, f) => results.push((r, f)),
            Outcome::Excluded(e) => excluded.push(e),
            Outcome::Failed(f) => failures.push(f),
        }
    }
    results.sort_by(|a, b| a.0.record_id.cmp(&b.0.record_id));
    excluded.sort_by(|a, b| a.record_id.cmp(&b.record_id));
    failures.sort_by(|a, b| a.path.cmp(&b.path));

    ensure_dir(&args.common.out)?;
    if args.fiducials {
        let dir = args.common.out.join("fiducials");
        ensure_dir(&dir)?;
        for (report, fiducials) in &results {
            fiducials
                .write_csv(&dir.join(format!("{}.csv", report.record_id)))
                .map_err(|e| CliError::Data(e.to_string()))?;
        }
    }

    let failed = failures.len();
    let output = AnalyzeOutput {
        manifest: RunManifest::new("analyze", config, args.common.seed, digests),
        results: results.into_iter().map(|(r, _)| r).collect(),
        excluded,
        errors: failures,
    };
    write_json(&args.common.out.join(REPORT_FILE), &output)?;
    eprintln!(
        "analyzed {} records: {} measured, {} excluded by quality, {} failed",
        files.len(),
        output.results.len(),
        output.excluded.len(),
        failed
    );
    if failed > 0 {
        return Err(CliError::Data(format!("{failed} input(s) could not be analyzed; see {REPORT_FILE}")));
    }
    Ok(())
}
