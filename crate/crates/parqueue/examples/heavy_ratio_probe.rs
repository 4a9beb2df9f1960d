// Probe: heavy series vs MC ratios at the acceptance points.
use parqueue::asympt::heavy_series;
use parqueue::dist::Pmf;
use parqueue::mc::heavy_first_passage;
use parqueue::model::ParallelQueueModel;
use std::time::Instant;

fn main() {
    let model = ParallelQueueModel::new(
        Pmf::discrete_pareto(2.5).unwrap(),
        Pmf::deterministic(2),
        Pmf::deterministic(3),
    )
    .unwrap();
    let reps: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20_000);
    let seed: u64 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(1);
    for n in [25u64, 50, 100] {
        let t0 = Instant::now();
        let series = heavy_series(&model, [1.0, 1.0], n, 1e-9).unwrap();
        let est = heavy_first_passage(&model, n, n, reps, 1_000_000, seed).unwrap();
        let ratio = est.value / series.value;
        println!(
            "n {:3}: series {:.6e}  mc {:.6e} (se {:.1e})  ratio {:.3} +- {:.3}  [{:.0}s]",
            n,
            series.value,
            est.value,
            est.stderr,
            ratio,
            est.stderr / series.value,
            t0.elapsed().as_secs_f64()
        );
    }
}
