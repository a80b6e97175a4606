// Copyright 2026 The qdc-emu Contributors
// SPDX-License-Identifier: Apache-2.0

//! Sequential vs parallel execution on the three hot paths.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use qdc_core::algorithms::{qft_on_input, Layout};
use qdc_core::engine::evolve_exact;
use qdc_core::noise::NoiseLinkSpec;
use qdc_core::runner::{self, ExperimentConfig};
use qdc_core::tomography;
use qdc_core::Exec;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn sweep(c: &mut Criterion) {
    let cfg = ExperimentConfig::from_json(
        r#"{"experiment":{"kind":"remote_cnot","protocol":"cat_comm","control_init":1},"steps_range":[1,10],"shots":"exact"}"#,
    )
    .unwrap();
    let mut g = c.benchmark_group("remote_cnot_sweep");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| b.iter(|| runner::run_with(&cfg, exec).unwrap()));
    }
    g.finish();
}

fn shots(c: &mut Criterion) {
    let cfg = ExperimentConfig::from_json(
        r#"{"experiment":{"kind":"grover","marked":"01"},"fiber_types":["G652D"],"steps_range":[1,2],"shots":2048,"seed":3}"#,
    )
    .unwrap();
    let mut g = c.benchmark_group("grover_shots");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| b.iter(|| runner::run_with(&cfg, exec).unwrap()));
    }
    g.finish();
}

fn tomography(c: &mut Criterion) {
    let a = qft_on_input(5, 7, &Layout::distributed(NoiseLinkSpec::default().with_steps(2))).unwrap();
    let state = a.output_state(&evolve_exact(&a.circuit, None).unwrap()).unwrap();
    let mut g = c.benchmark_group("tomography_5q");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new("exact", name), &exec, |b, &exec| {
            b.iter(|| tomography::reconstruct(&tomography::exact_data(&state, exec).unwrap()).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("shots", name), &exec, |b, &exec| {
            b.iter(|| tomography::sample_data(&state, 1000, 11, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, sweep, shots, tomography);
criterion_main!(benches);
