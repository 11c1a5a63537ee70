use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ddce_bench::fixture;
use ddce_core::est_dl::{DlEstimator, Pipeline, PreStage};

const N_SYMBOLS: usize = 100;

fn pre_stages(c: &mut Criterion) {
    let mut g = c.benchmark_group("pre_stage");
    for p in Pipeline::ALL {
        let f = fixture(p, N_SYMBOLS);
        let pre = PreStage::new(p, Default::default());
        // Warm the cached RBF interpolator outside the timing loop.
        pre.estimate(&f.frame.rx, &f.ctx, &f.info).unwrap();
        g.bench_function(BenchmarkId::from_parameter(p.name()), |b| {
            b.iter(|| pre.estimate(&f.frame.rx, &f.ctx, &f.info).unwrap())
        });
    }
    g.finish();
}

fn sbs_pipelines(c: &mut Criterion) {
    let mut g = c.benchmark_group("pipeline");
    for p in Pipeline::ALL.into_iter().filter(|p| p.is_sbs()) {
        let f = fixture(p, N_SYMBOLS);
        let nets = p.init_nets(&f.ctx, 1).unwrap();
        let est = DlEstimator::new(p, nets, Default::default(), &f.ctx).unwrap();
        g.bench_function(BenchmarkId::from_parameter(p.name()), |b| {
            b.iter(|| est.estimate(&f.frame.rx, &f.ctx, &f.info).unwrap())
        });
    }
    g.finish();
}

fn fbf_pipelines(c: &mut Criterion) {
    let mut g = c.benchmark_group("pipeline_fbf");
    g.sample_size(10);
    for p in Pipeline::ALL.into_iter().filter(|p| !p.is_sbs()) {
        let f = fixture(p, N_SYMBOLS);
        let nets = p.init_nets(&f.ctx, 1).unwrap();
        let est = DlEstimator::new(p, nets, Default::default(), &f.ctx).unwrap();
        g.bench_function(BenchmarkId::from_parameter(p.name()), |b| {
            b.iter(|| est.estimate(&f.frame.rx, &f.ctx, &f.info).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, pre_stages, sbs_pipelines, fbf_pipelines);
criterion_main!(benches);
