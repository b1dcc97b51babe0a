use clap::{Args, ValueEnum};
use ecgparam::record::{write_annotations_csv, write_record_csv};
use ecgparam::synth::{
    cohort_params, derive_seed, generate, noise_record, CohortMember, CohortSpec, LabelSpec, NoiseKind, NoiseSpec,
};
use ecgparam::{record_intervals, AnnotationSet, QualityScore};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::Config;
use crate::diagnose::LABEL_HEADER;
use crate::io::{ensure_dir, write_json, write_text};
use crate::manifest::RunManifest;
use crate::{CliError, Common};

/// Annotator id of the planted ground truth.
pub const TRUTH_SOURCE: &str = "truth";
/// Keeps noise-only record seeds apart from cohort member seeds.
const NOISE_RECORD_SALT: u64 = 0x006e_6f69_7365;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CohortArg {
    /// Unlabeled records over physiologic ranges.
    None,
    /// Normal PR 120-180 ms against first-degree block 210-320 ms.
    Avbi,
    /// QTc 380-430 ms against long QT 470-520 ms.
    Lqt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseArg {
    None,
    White,
    Drift,
    Mains,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Number of ECG records.
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = CohortArg::None)]
    pub condition: CohortArg,
    #[arg(long, default_value_t = 30.0)]
    pub duration_s: f64,
    #[arg(long, default_value_t = 500.0)]
    pub fs: f64,
    #[arg(long, value_enum, default_value_t = NoiseArg::None)]
    pub noise: NoiseArg,
    /// White-noise SNR in dB.
    #[arg(long, default_value_t = 10.0)]
    pub snr_db: f64,
    /// Drift or mains frequency; defaults to 0.3 Hz or 50 Hz.
    #[arg(long)]
    pub noise_hz: Option<f64>,
    /// Drift or mains amplitude.
    #[arg(long, default_value_t = 0.5)]
    pub noise_mv: f64,
    /// Extra records of pure Gaussian noise (no ECG), for gate checks.
    #[arg(long, default_value_t = 0)]
    pub noise_records: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Serialize)]
struct SynthManifest<'a> {
    manifest: RunManifest,
    cohort: &'a CohortSpec,
    records: Vec<String>,
}

fn noise_spec(args: &SynthArgs) -> Result<NoiseSpec, CliError> {
    let spec = match args.noise {
        NoiseArg::None => NoiseSpec::default(),
        NoiseArg::White => NoiseSpec::white(args.snr_db),
        NoiseArg::Drift => NoiseSpec::drift(args.noise_hz.unwrap_or(0.3), args.noise_mv),
        NoiseArg::Mains => NoiseSpec::mains(args.noise_hz.unwrap_or(50.0), args.noise_mv),
    };
    if spec.kind == NoiseKind::White && !args.snr_db.is_finite() {
        return Err(CliError::Config("--snr-db must be finite".into()));
    }
    Ok(spec)
}

pub fn run(args: &SynthArgs, config: &Config) -> Result<(), CliError> {
    if args.n == 0 && args.noise_records == 0 {
        return Err(CliError::Config("nothing to generate; set --n or --noise-records".into()));
    }
    let seed = args.common.seed.unwrap_or(0);
    let labels = match args.condition {
        CohortArg::None => LabelSpec::Normal,
        CohortArg::Avbi => LabelSpec::avbi(),
        CohortArg::Lqt => LabelSpec::lqt(),
    };
    let spec = CohortSpec {
        duration_s: args.duration_s,
        sampling_rate_hz: args.fs,
        noise: noise_spec(args)?,
        ..CohortSpec::new(labels)
    };

    let members: Vec<CohortMember> = (0..args.n)
        .into_par_iter()
        .map(|i| {
            let (params, label) = cohort_params(&spec, i, seed);
            let (record, truth) = generate(&params).map_err(|e| CliError::Config(format!("{}: {e}", params.record_id)))?;
            Ok(CohortMember {
                record,
                truth,
                params,
                condition: labels.condition(),
                label,
            })
        })
        .collect::<Result<_, CliError>>()?;

    let out = &args.common.out;
    let records_dir = out.join("records");
    let truth_dir = out.join("truth");
    ensure_dir(&records_dir)?;
    ensure_dir(&truth_dir)?;
    let data_err = |e: ecgparam::RecordError| CliError::Data(e.to_string());

    let mut ids = Vec::new();
    let mut annotations = Vec::new();
    let mut label_csv = LABEL_HEADER.join(",") + "\n";
    for m in &members {
        let id = &m.record.record_id;
        write_record_csv(&m.record, &records_dir.join(format!("{id}.csv"))).map_err(data_err)?;
        m.truth
            .fiducials
            .write_csv(&truth_dir.join(format!("{id}_fiducials.csv")))
            .map_err(data_err)?;
        let perfect = QualityScore::from_components(ecgparam::preprocess::QualityComponents {
            beat_agreement: 1.0,
            spectral_ratio: 1.0,
            kurtosis_score: 1.0,
        });
        let truth = record_intervals(id, m.record.source_tag, m.truth.per_beat.clone(), &perfect);
        annotations.push(AnnotationSet {
            record_id: id.clone(),
            annotator_id: TRUTH_SOURCE.to_string(),
            intervals: truth.record_level,
        });
        if let (Some(condition), Some(label)) = (m.condition, m.label) {
            label_csv.push_str(&format!("{id},{condition},{}\n", u8::from(label)));
        }
        ids.push(id.clone());
    }
    for k in 0..args.noise_records {
        let id = format!("noise{k:04}");
        let record = noise_record(&id, args.fs, args.duration_s, 0.5, derive_seed(seed ^ NOISE_RECORD_SALT, k as u64));
        write_record_csv(&record, &records_dir.join(format!("{id}.csv"))).map_err(data_err)?;
        ids.push(id);
    }
    write_annotations_csv(&annotations, &out.join("annotations.csv")).map_err(data_err)?;
    if labels.condition().is_some() {
        write_text(&out.join("labels.csv"), &label_csv)?;
    }
    let manifest = SynthManifest {
        manifest: RunManifest::new("synth", config, Some(seed), Vec::new()),
        cohort: &spec,
        records: ids,
    };
    write_json(&out.join("manifest.json"), &manifest)?;
    eprintln!("wrote {} records to {}", manifest.records.len(), records_dir.display());
    Ok(())
}
