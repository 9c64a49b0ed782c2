//! Corpus scoring: the library path (rayon when the `parallel` feature is on)
//! against a plain sequential loop over the same work.
//!
//! `cargo bench -p slideguide-core` compares both in one run;
//! `cargo bench -p slideguide-core --no-default-features` benches the
//! sequential fallback of the library itself.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use slideguide_core::corpus::Corpus;
use slideguide_core::features::{FeatureConfig, FeatureExtractor};
use slideguide_core::layout::{layout_feature, layout_similarity, rank_layouts};
use slideguide_core::matching::{image_similarity, score_diagrams, MatcherConfig};
use slideguide_core::par;
use slideguide_core::synth::{random_diagram, random_layouts};

fn backend() -> &'static str {
    if par::is_parallel() {
        "rayon"
    } else {
        "sequential-build"
    }
}

fn layouts(c: &mut Criterion) {
    let corpus = Corpus::from_parts(random_layouts(1000, 1), vec![], (32, 18), FeatureConfig::default());
    let query = layout_feature(&random_layouts(1, 2)[0], 32, 18);
    let mut g = c.benchmark_group("layout_rank_1000");
    g.bench_function(backend(), |b| b.iter(|| rank_layouts(black_box(&query), corpus.slides(), 20)));
    g.bench_function("sequential", |b| {
        b.iter(|| {
            let mut scored: Vec<(f64, &str)> = corpus
                .slides()
                .iter()
                .map(|s| (layout_similarity(&query, &s.feature).unwrap_or(0.0), s.slide_id.as_str()))
                .collect();
            scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
            scored.truncate(20);
            black_box(scored)
        })
    });
    g.finish();
}

fn diagrams(c: &mut Criterion) {
    let cfg = FeatureConfig::default();
    let ex = FeatureExtractor::new(cfg);
    let parts = (0..200u64).map(|i| (format!("d{i:03}"), "s".into(), ex.extract(&random_diagram(i)))).collect();
    let corpus = Corpus::from_parts(vec![], parts, (32, 18), cfg);
    let query = ex.extract(&random_diagram(9999));
    let mcfg = MatcherConfig::default();
    let mut g = c.benchmark_group("diagram_score_200");
    g.sample_size(20);
    g.bench_function(backend(), |b| b.iter(|| score_diagrams(black_box(&query), corpus.diagrams(), 10, &mcfg)));
    g.bench_function("sequential", |b| {
        b.iter(|| {
            let mut scored: Vec<(f64, usize, &str)> = corpus
                .diagrams()
                .iter()
                .map(|d| {
                    let r = image_similarity(&query, &d.features, &mcfg);
                    (r.score, r.good.len(), d.diagram_id.as_str())
                })
                .collect();
            scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.cmp(&a.1)).then_with(|| a.2.cmp(b.2)));
            scored.truncate(10);
            black_box(scored)
        })
    });
    g.finish();
}

criterion_group!(benches, layouts, diagrams);
criterion_main!(benches);
