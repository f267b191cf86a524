use std::hint::black_box;
use std::path::PathBuf;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use solvstruct::exec::Exec;
use solvstruct::oracle::{check_solution, grid};
use solvstruct::pipeline::{run_verify, Options};
use solvstruct::problem::{expr, Problem};
use solvstruct::structure::verify_structure;
use solvstruct::symbolic::{Point, Symbol, ZeroTest};

fn load(name: &str) -> Problem {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(format!("{}.json", name));
    Problem::load(&path).unwrap()
}

const MODES: [(&str, Exec); 2] = [("parallel", Exec::Parallel), ("sequential", Exec::Sequential)];

fn structures(c: &mut Criterion) {
    let mut g = c.benchmark_group("verify_structure");
    g.sample_size(10);
    for name in ["example1", "example3"] {
        let p = load(name);
        let ys = p.structure().unwrap();
        let zt = ZeroTest::default();
        for (mode, exec) in MODES {
            g.bench_with_input(BenchmarkId::new(mode, name), &exec, |b, &exec| {
                b.iter(|| verify_structure(&p.z, black_box(&ys), &p.volume(), &zt, exec).unwrap())
            });
        }
    }
    g.finish();
}

fn oracle(c: &mut Criterion) {
    let mut g = c.benchmark_group("run_verify");
    g.sample_size(10);
    for name in ["example1", "example5"] {
        let p = load(name);
        for (mode, exec) in MODES {
            let o = Options { exec, ..Options::default() };
            g.bench_with_input(BenchmarkId::new(mode, name), &o, |b, o| b.iter(|| run_verify(black_box(&p), o).unwrap()));
        }
    }
    g.finish();
}

fn residuals(c: &mut Criterion) {
    let mut g = c.benchmark_group("check_solution");
    let p = load("example5");
    let u = expr(&p.file.fixtures.solutions[0]).unwrap();
    let consts: Point = [(Symbol::new("C"), 1.0), (Symbol::new("K"), 1.0)].into_iter().collect();
    let xs = grid(0.5, 1.5, 200);
    for (mode, exec) in MODES {
        g.bench_function(mode, |b| b.iter(|| check_solution(black_box(&u), &p.ode, &consts, &xs, 1e-6, exec).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, structures, oracle, residuals);
criterion_main!(benches);
