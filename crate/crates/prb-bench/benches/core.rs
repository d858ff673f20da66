//! Hot-path benchmarks: sequence generation, the closed-form and LP guessing
//! bounds, full protocol sessions and rate evaluation.

use criterion::{black_box, criterion_group, criterion_main, Criterion};

use prb_core::analytics::{rate_prb, zeta};
use prb_core::bounds::{binomial_cdf, GuessBoundProblem};
use prb_core::legendre::{pattern_count, LegendrePrime, LegendreTable};
use prb_core::protocol::{run_session, ProtocolParams};
use prb_core::{BoundSource, RateModel, RegisterKeySet};

const BIG_PERIOD: u64 = 9_999_999_967;

fn bench_legendre(c: &mut Criterion) {
    let l = LegendrePrime::new(1_000_003).unwrap();
    c.bench_function("legendre_table_build_1e6", |b| {
        b.iter(|| LegendreTable::new(black_box(l)).unwrap())
    });

    let l_small = LegendrePrime::new(10_007).unwrap();
    c.bench_function("pattern_count_s4_1e4", |b| {
        b.iter(|| pattern_count(black_box(&[0, 3, 11, 42]), &[1, 0, 1, 1], l_small).unwrap())
    });
}

fn bench_bounds(c: &mut Criterion) {
    c.bench_function("binomial_cdf_s1000", |b| {
        b.iter(|| binomial_cdf(black_box(1000), black_box(480)))
    });

    let problem = GuessBoundProblem::new(BIG_PERIOD, 0.4, 12, 12).unwrap();
    c.bench_function("closed_form_bound_s12", |b| {
        b.iter(|| black_box(&problem).corollary1().unwrap())
    });

    let lp = GuessBoundProblem::new(BIG_PERIOD, 0.4, 12, 1000).unwrap();
    c.bench_function("lp_bound_s12_S1000", |b| {
        b.iter(|| black_box(&lp).corollary2_lp().unwrap())
    });
}

fn bench_protocol(c: &mut Criterion) {
    let l = LegendrePrime::new(1019).unwrap();
    let params = ProtocolParams {
        prime: l,
        keys: RegisterKeySet::new(vec![3, 77, 500], l).unwrap(),
        pulses: 1019,
        reception_rate: 1.0,
        intrinsic_error: 0.0,
        rng_seed: 1,
    };
    c.bench_function("session_m3_1019_pulses", |b| {
        b.iter(|| run_session(black_box(&params), None).unwrap())
    });
}

fn bench_rates(c: &mut Criterion) {
    let model = RateModel::new(
        BIG_PERIOD,
        10,
        BoundSource::Corollary2Lp {
            s_pattern: 12,
            s_keys: 1000,
        },
    );
    // First call pays for the QBER inversion scan; afterwards the per-gamma
    // cache makes this the steady-state cost of one grid point.
    c.bench_function("rate_lp_model_warm", |b| {
        b.iter(|| rate_prb(black_box(0.03), 1.0, &model).unwrap())
    });

    c.bench_function("zeta_4096", |b| b.iter(|| zeta(black_box(4096)).unwrap()));
}

criterion_group!(benches, bench_legendre, bench_bounds, bench_protocol, bench_rates);
criterion_main!(benches);
