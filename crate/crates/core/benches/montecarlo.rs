use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use ebfir::estimators::KernelFamily;
use ebfir::exec::ExecMode;
use ebfir::montecarlo::{Collection, ExperimentConfig, ExperimentPlan, SystemType};

fn plan(kernel: KernelFamily) -> ExperimentPlan {
    let mut cfg = ExperimentConfig::new(kernel, SystemType::T1);
    cfg.records = 64;
    cfg.systems = 2;
    cfg.collections = vec![Collection { a: 0.7, cu2: 0.5 }];
    ExperimentPlan::new(cfg, ExecMode::Sequential).expect("valid config")
}

fn records(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_records");
    group.sample_size(10);
    for kernel in [KernelFamily::Ridge, KernelFamily::Tc] {
        let plan = plan(kernel);
        for mode in [ExecMode::Sequential, ExecMode::Parallel] {
            let id = BenchmarkId::new(kernel.name(), format!("{mode:?}"));
            group.bench_with_input(id, &mode, |b, &mode| b.iter(|| plan.run_records(mode)));
        }
    }
    group.finish();
}

criterion_group!(benches, records);
criterion_main!(benches);
