use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion, Throughput};
use molproof_bench::{passing_corpus, Fixture};
use molproof_core::data_processor::ThresholdProfile;
use molproof_core::field_poseidon;
use molproof_core::pipeline::{run_batch, BatchOptions};
use molproof_core::snark::{prove, verify};
use molproof_core::{commitment, compute_witness, nullifier, FieldElement, NullifierSet};

fn hashing(c: &mut Criterion) {
    let f = Fixture::new(1);
    let mut g = c.benchmark_group("poseidon");
    for arity in [2usize, 7] {
        let inputs: Vec<FieldElement> = (1..=arity as u64).map(FieldElement::from_u64).collect();
        g.bench_with_input(BenchmarkId::new("inputs", arity), &inputs, |b, inputs| {
            b.iter(|| field_poseidon::hash(black_box(inputs)).unwrap())
        });
    }
    g.bench_function("commitment+nullifier", |b| {
        b.iter(|| nullifier(commitment(black_box(&f.metrics), f.salt), f.task))
    });
    g.finish();
}

fn circuit(c: &mut Criterion) {
    let mut f = Fixture::new(2);
    let mut g = c.benchmark_group("groth16");
    g.sample_size(20).measurement_time(Duration::from_secs(8));
    g.bench_function("witness", |b| {
        b.iter(|| compute_witness(black_box(&f.metrics), f.salt, &f.thresholds, f.task).unwrap())
    });
    g.bench_function("prove", |b| {
        b.iter(|| prove(&f.keys.pk, black_box(&f.witness), &mut f.rng).unwrap())
    });
    let public = f.witness.public_values();
    g.bench_function("verify", |b| {
        b.iter(|| verify(&f.keys.vk, black_box(&public), &f.proof).unwrap())
    });
    g.finish();
}

fn batch(c: &mut Criterion) {
    let f = Fixture::new(3);
    let profile = ThresholdProfile::default();
    let mut g = c.benchmark_group("batch");
    g.sample_size(10).measurement_time(Duration::from_secs(15));
    for n in [1usize, 10] {
        let records = passing_corpus(n, 4);
        g.throughput(Throughput::Elements(n as u64));
        g.bench_with_input(BenchmarkId::from_parameter(n), &records, |b, records| {
            b.iter_batched(
                NullifierSet::in_memory,
                |registry| {
                    run_batch(
                        records,
                        &f.keys,
                        &profile,
                        &registry,
                        &BatchOptions::default(),
                    )
                },
                BatchSize::SmallInput,
            )
        });
    }
    g.finish();
}

criterion_group!(benches, hashing, circuit, batch);
criterion_main!(benches);
