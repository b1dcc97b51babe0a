use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use ecgparam::agreement::{auto_correlation, bland_altman};
use ecgparam::diagnostics::roc_auc;
use ecgparam::preprocess::median_filter;
use ecgparam::{
    analyze_record, delineate, detect_r_peaks, preprocess, signal_quality, DelineatorConfig, PairedMeasurements,
    Parameter, PreprocessConfig, QtcFormula,
};
use ecgparam_bench::fixture_record;

fn stages(c: &mut Criterion) {
    let record = fixture_record(500.0, Some(20.0));
    let pre = PreprocessConfig::default();
    let del = DelineatorConfig::default();
    let clean = preprocess(&record, &pre).unwrap();
    let peaks = detect_r_peaks(&clean, &del);

    let mut group = c.benchmark_group("stages");
    group.throughput(Throughput::Elements(record.len() as u64));
    group.bench_function("median_filter_600ms", |b| b.iter(|| median_filter(black_box(&record.samples), 301)));
    group.bench_function("preprocess", |b| b.iter(|| preprocess(black_box(&record), &pre)));
    group.bench_function("quality", |b| b.iter(|| signal_quality(black_box(&record))));
    group.bench_function("r_peaks", |b| b.iter(|| detect_r_peaks(black_box(&clean), &del)));
    group.bench_function("delineate", |b| b.iter(|| delineate(black_box(&clean), &peaks, &del)));
    group.finish();
}

fn end_to_end(c: &mut Criterion) {
    let pre = PreprocessConfig::default();
    let del = DelineatorConfig::default();
    let mut group = c.benchmark_group("analyze_record");
    for fs in [250.0, 500.0, 1000.0] {
        let record = fixture_record(fs, None);
        let quality = signal_quality(&record).unwrap();
        group.bench_function(format!("{fs}Hz"), |b| {
            b.iter(|| analyze_record(black_box(&record), &quality, &pre, &del, QtcFormula::Bazett))
        });
    }
    group.finish();
}

fn statistics(c: &mut Criterion) {
    let n = 1000;
    let a: Vec<f64> = (0..n).map(|i| 380.0 + ((i * 7919) % 97) as f64).collect();
    let b: Vec<f64> = a.iter().enumerate().map(|(i, v)| v + ((i * 31) % 13) as f64 - 6.0).collect();
    let pairs = PairedMeasurements::from_columns(Parameter::Qt, &a, &b);
    let truth: Vec<bool> = (0..n).map(|i| i % 3 == 0).collect();

    let mut group = c.benchmark_group("statistics");
    group.bench_function("auto_correlation_1000", |bch| bch.iter(|| auto_correlation(black_box(&pairs))));
    group.bench_function("bland_altman_1000", |bch| bch.iter(|| bland_altman(black_box(&pairs), 1.96)));
    group.bench_function("roc_auc_1000", |bch| bch.iter(|| roc_auc(black_box(&a), &truth)));
    group.finish();
}

criterion_group!(benches, stages, end_to_end, statistics);
criterion_main!(benches);
