use criterion::{criterion_group, criterion_main, Criterion};
use rcac_autopilot::scenario::{run_scenario, ScenarioConfig};

fn scenario(c: &mut Criterion) {
    let mut group = c.benchmark_group("scenario_10s");
    group.sample_size(10);
    for adaptive in [false, true] {
        let mut config = ScenarioConfig {
            duration: 10.0,
            ..Default::default()
        };
        config.adaptive.enabled = adaptive;
        let label = if adaptive { "adaptive" } else { "fixed" };
        group.bench_function(label, |b| b.iter(|| run_scenario(&config).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, scenario);
criterion_main!(benches);
