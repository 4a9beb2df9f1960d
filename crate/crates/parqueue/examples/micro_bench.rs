// Microbenchmarks of the walk-loop components.
use parqueue::dist::{Pmf, Sampler};
use parqueue::rng::Rng;
use std::hint::black_box;
use std::time::Instant;

fn main() {
    let n = 200_000_000u64;

    let mut rng = Rng::new(1, 0);
    let t0 = Instant::now();
    let mut acc = 0u64;
    for _ in 0..n {
        acc = acc.wrapping_add(rng.next_u64());
    }
    black_box(acc);
    println!("next_u64: {:.2} ns", t0.elapsed().as_secs_f64() / n as f64 * 1e9);

    let mut rng = Rng::new(1, 0);
    let t0 = Instant::now();
    let mut facc = 0.0f64;
    for _ in 0..n {
        facc += rng.next_f64();
    }
    black_box(facc);
    println!("next_f64: {:.2} ns", t0.elapsed().as_secs_f64() / n as f64 * 1e9);

    let d = Pmf::discrete_pareto(2.5).unwrap();
    let s = Sampler::new(&d);
    let mut rng = Rng::new(1, 0);
    let t0 = Instant::now();
    let mut acc = 0u64;
    for _ in 0..n {
        acc = acc.wrapping_add(s.draw(&mut rng));
    }
    black_box(acc);
    println!("pareto sampler draw: {:.2} ns", t0.elapsed().as_secs_f64() / n as f64 * 1e9);

    let c = Sampler::new(&Pmf::deterministic(2));
    let mut rng = Rng::new(1, 0);
    let t0 = Instant::now();
    let mut acc = 0u64;
    for _ in 0..n {
        acc = acc.wrapping_add(c.draw(&mut rng));
    }
    black_box(acc);
    println!("const sampler draw: {:.2} ns", t0.elapsed().as_secs_f64() / n as f64 * 1e9);
}
