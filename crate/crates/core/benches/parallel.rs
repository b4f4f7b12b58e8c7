use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rgroups::cayley::{ball, Solver, Strategy};
use rgroups::experiments::{run, ExperimentConfig};
use rgroups::par;
use rgroups::search::{enumerate_reduced_diagrams, SearchBudget};
use rgroups::smallcancel::PieceIndex;
use rgroups::words::{sample_presentation, Presentation};

const MODES: [(&str, bool); 2] = [("parallel", true), ("sequential", false)];

fn pieces(c: &mut Criterion) {
    let p = sample_presentation(2, 24, "0.3".parse().unwrap(), 1).unwrap();
    let mut g = c.benchmark_group("piece_index");
    for (name, on) in MODES {
        g.bench_function(BenchmarkId::new(name, p.relators.len()), |b| {
            par::set_parallel(on);
            b.iter(|| PieceIndex::new(&p).max_piece_len())
        });
    }
    g.finish();
}

fn enumeration(c: &mut Criterion) {
    let p = Presentation::parse(None, &["aabb", "abAB"]).unwrap();
    let mut g = c.benchmark_group("enumerate_3_faces");
    g.sample_size(10);
    for (name, on) in MODES {
        g.bench_function(name, |b| {
            par::set_parallel(on);
            b.iter(|| enumerate_reduced_diagrams(&p, &SearchBudget::faces(3)).diagrams.len())
        });
    }
    g.finish();
}

fn cayley_ball(c: &mut Criterion) {
    let p = Presentation::parse(None, &["abab"]).unwrap();
    let s = Solver::new(&p, Strategy::DiagramSearch(SearchBudget::faces(2))).unwrap();
    let mut g = c.benchmark_group("ball_radius_7");
    g.sample_size(10);
    for (name, on) in MODES {
        g.bench_function(name, |b| {
            par::set_parallel(on);
            b.iter(|| ball(&s, 7, 100_000).unwrap().len())
        });
    }
    g.finish();
}

fn experiment(c: &mut Criterion) {
    let cfg = ExperimentConfig::from_toml(
        "trials = 8\nseed = 1\nchecks = [\"c_prime(1/6)\", \"cp(6)\", \"piece_stats\"]\ngrid = [{ m = 2, l = 20, d = \"0.2\" }]",
    )
    .unwrap();
    let mut g = c.benchmark_group("experiment");
    g.sample_size(10);
    for (name, on) in MODES {
        g.bench_function(name, |b| {
            par::set_parallel(on);
            b.iter(|| run(&cfg).unwrap().len())
        });
    }
    g.finish();
}

criterion_group!(benches, pieces, enumeration, cayley_ball, experiment);
criterion_main!(benches);
