//! Seeded instance builders shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sinr_core::{Instance, InstanceParams, MetricSpace, RoutingProblem};

/// `n` links with senders uniform in a `side x side` square and lengths in `[1, 20)`.
pub fn uniform_square(n: usize, side: f64, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(2 * n);
    for _ in 0..n {
        let (x, y) = (rng.random_range(0.0..side), rng.random_range(0.0..side));
        let len = rng.random_range(1.0..20.0);
        let angle = rng.random_range(0.0..std::f64::consts::TAU);
        points.push(vec![x, y]);
        points.push(vec![x + len * angle.cos(), y + len * angle.sin()]);
    }
    let pairs: Vec<_> = (0..n).map(|i| (2 * i, 2 * i + 1)).collect();
    let metric = MetricSpace::euclidean(points).expect("distinct points");
    Instance::new(metric, InstanceParams::new(3.0, 1.0, 1e-6).unwrap(), &pairs).expect("valid instance")
}

/// A `width x width` grid with 10-unit spacing, edges both ways between
/// neighbours, and `commodities` random source/target pairs.
pub fn grid_problem(width: usize, commodities: usize, seed: u64) -> (Instance, RoutingProblem) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = width * width;
    let points: Vec<Vec<f64>> = (0..n).map(|i| vec![10.0 * (i % width) as f64, 10.0 * (i / width) as f64]).collect();
    let mut edges = Vec::new();
    for u in 0..n {
        let (x, y) = (u % width, u / width);
        if x + 1 < width {
            edges.extend([(u, u + 1), (u + 1, u)]);
        }
        if y + 1 < width {
            edges.extend([(u, u + width), (u + width, u)]);
        }
    }
    let pairs: Vec<_> = (0..commodities)
        .map(|_| {
            let s = rng.random_range(0..n);
            let t = (s + rng.random_range(1..n)) % n;
            (s, t)
        })
        .collect();
    let metric = MetricSpace::euclidean(points).expect("distinct points");
    let base = Instance::new(metric, InstanceParams::new(3.0, 1.0, 1e-6).unwrap(), &[]).expect("valid instance");
    (base, RoutingProblem::new(n, edges, pairs).expect("connected grid"))
}
