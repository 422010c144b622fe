use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use unifi_core::csi::synthesize_csi;
use unifi_core::features::{dser, extract_sequence, plcr, subcarrier_correlation};
use unifi_core::{Point2, RadioConfig, Trajectory, WindowConfig};

fn walking_csi(rate: f64, n: usize) -> (RadioConfig, Vec<unifi_core::CsiFrame>) {
    let radio = RadioConfig {
        sample_rate_hz: rate,
        ..RadioConfig::calibrated()
    };
    let traj = Trajectory::linear(Point2::new(1.0, 1.0), Point2::new(0.4, 0.3), n, rate);
    let frames = synthesize_csi(&traj, &radio, &vec![true; n]).unwrap();
    (radio, frames)
}

fn window_ops(c: &mut Criterion) {
    let (radio, frames) = walking_csi(500.0, 1000);
    let mut g = c.benchmark_group("window");
    g.bench_function("corr_0.5s", |b| b.iter(|| subcarrier_correlation(black_box(&frames[..250])).unwrap()));
    g.bench_function("dser_2s", |b| b.iter(|| dser(black_box(&frames)).unwrap()));
    g.bench_function("plcr_0.1s", |b| b.iter(|| plcr(black_box(&frames[..50]), radio.wavelength()).unwrap()));
    g.finish();
}

fn extraction(c: &mut Criterion) {
    let mut g = c.benchmark_group("extract_10s");
    g.sample_size(10);
    for rate in [100.0, 500.0] {
        let (radio, frames) = walking_csi(rate, (10.0 * rate) as usize);
        g.bench_with_input(BenchmarkId::from_parameter(rate), &frames, |b, f| {
            b.iter(|| extract_sequence(f, &WindowConfig::default(), &radio).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, window_ops, extraction);
criterion_main!(benches);
