use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use sparseseq_bench::view;
use sparseseq_core::apc::{apc_batch_loss, init_projection, ApcConfig};
use sparseseq_core::encoders::{encode, Batch, EncoderConfig};
use sparseseq_core::numcore::{seeded_rng, Graph};

fn forward_backward(c: &mut Criterion) {
    let mut group = c.benchmark_group("encode_32x100");
    for (name, cfg) in [("gru", EncoderConfig::gru(64)), ("gru_d", EncoderConfig::gru_d(64))] {
        let v = view(32, 100, 0.3, cfg.scheme);
        let batch = Batch::from_view(&v, &(0..32).collect::<Vec<_>>());
        let params = cfg.init_params(v.n_vars, &mut seeded_rng(1)).unwrap();
        group.bench_function(format!("{name}_forward"), |b| {
            b.iter(|| {
                let mut g = Graph::new();
                let p = params.bind(&mut g, |_| false);
                encode(&mut g, &p, &cfg, &batch, None).unwrap().last
            })
        });
        group.bench_function(format!("{name}_apc_step"), |b| {
            let mut params = params.clone();
            init_projection(&mut params, cfg.hidden, v.n_vars, &mut seeded_rng(2));
            let apc = ApcConfig::default();
            b.iter_batched(
                Graph::new,
                |mut g| {
                    let p = params.bind(&mut g, |_| true);
                    let (loss, _) = apc_batch_loss(&mut g, &p, &cfg, &apc, &batch, None).unwrap();
                    g.backward(loss).unwrap()
                },
                BatchSize::SmallInput,
            )
        });
    }
    group.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = forward_backward
}
criterion_main!(benches);
