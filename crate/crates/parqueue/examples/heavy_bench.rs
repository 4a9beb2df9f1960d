// Timing probe for the heavy-tail walk loop.
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
    // 2000 reps x 1e6 cap ~ 2e9 steps upper bound; successes shorten paths.
    let reps = 2_000u64;
    let cap = 1_000_000u64;
    let t0 = Instant::now();
    let est = heavy_first_passage(&model, 50, 50, reps, cap, 1).unwrap();
    let dt = t0.elapsed().as_secs_f64();
    let steps = (1.0 - est.value) * reps as f64 * cap as f64;
    println!(
        "value {:.4e} stderr {:.2e} time {:.2}s -> {:.2} ns/step ({} reps)",
        est.value,
        est.stderr,
        dt,
        dt / steps * 1e9,
        reps
    );
    println!(
        "full criterion cost est: 3 points x 1e5 reps -> {:.0} s",
        dt / reps as f64 * 100_000.0 * 3.0
    );
}
