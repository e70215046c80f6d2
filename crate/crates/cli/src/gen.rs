//! Seeded random instance generators.

use std::collections::{HashSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sinr_core::InstanceParams;

use crate::error::{CliError, CliResult};
use crate::format::{InstanceFile, MetricFile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum GenKind {
    /// Links on a line, random direction.
    Line,
    /// Senders uniform in a square, receivers at a random angle.
    UniformSquare,
    /// Senders grouped around a few random centres.
    Clustered,
    /// A jittered grid network with edges, commodities and shortest paths.
    Grid,
}

#[derive(Debug, Clone, Copy)]
pub struct GenOptions {
    pub kind: GenKind,
    /// Link count; commodity count for `Grid`.
    pub n: usize,
    pub seed: u64,
    pub params: InstanceParams,
    /// Square side, line length, or grid width in nodes. Chosen from `n` when absent.
    pub side: Option<f64>,
}

pub fn generate(opts: &GenOptions) -> CliResult<InstanceFile> {
    if opts.n == 0 {
        return Err(CliError::Input("n must be at least 1".into()));
    }
    opts.params.validate()?;
    if let Some(side) = opts.side {
        if !(side.is_finite() && side > 0.0) {
            return Err(CliError::Input(format!("side must be positive, got {side}")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut doc = match opts.kind {
        GenKind::Line => line(&mut rng, opts),
        GenKind::UniformSquare => plane(&mut rng, opts, false),
        GenKind::Clustered => plane(&mut rng, opts, true),
        GenKind::Grid => grid(&mut rng, opts)?,
    };
    doc.alpha = opts.params.alpha;
    doc.beta = opts.params.beta;
    doc.noise = opts.params.noise;
    Ok(doc)
}

fn empty(points: Vec<Vec<f64>>, links: Vec<[usize; 2]>) -> InstanceFile {
    InstanceFile {
        alpha: 0.0,
        beta: 0.0,
        noise: 0.0,
        metric: MetricFile::Euclidean { points },
        links,
        paths: None,
        edges: None,
        commodities: None,
    }
}

/// Keeps drawing until the point differs from every earlier one.
fn fresh(seen: &mut HashSet<Vec<u64>>, mut draw: impl FnMut() -> Vec<f64>) -> Vec<f64> {
    loop {
        let p = draw();
        if seen.insert(p.iter().map(|x| x.to_bits()).collect()) {
            return p;
        }
    }
}

fn line(rng: &mut ChaCha8Rng, opts: &GenOptions) -> InstanceFile {
    let extent = opts.side.unwrap_or(50.0 * opts.n as f64);
    let mut seen = HashSet::new();
    let mut points = Vec::with_capacity(2 * opts.n);
    let mut links = Vec::with_capacity(opts.n);
    for i in 0..opts.n {
        let s = fresh(&mut seen, || vec![rng.random_range(0.0..extent)]);
        let r = fresh(&mut seen, || {
            let len = rng.random_range(1.0..10.0);
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            vec![s[0] + sign * len]
        });
        points.push(s);
        points.push(r);
        links.push([2 * i, 2 * i + 1]);
    }
    empty(points, links)
}

fn plane(rng: &mut ChaCha8Rng, opts: &GenOptions, clustered: bool) -> InstanceFile {
    let side = opts.side.unwrap_or(50.0 * (opts.n as f64).sqrt());
    let centres: Vec<[f64; 2]> = if clustered {
        (0..opts.n.div_ceil(5)).map(|_| [rng.random_range(0.0..side), rng.random_range(0.0..side)]).collect()
    } else {
        Vec::new()
    };
    let max_len = if clustered { 10.0 } else { 20.0 };
    let mut seen = HashSet::new();
    let mut points = Vec::with_capacity(2 * opts.n);
    let mut links = Vec::with_capacity(opts.n);
    for i in 0..opts.n {
        let s = fresh(&mut seen, || {
            if clustered {
                let c = centres[rng.random_range(0..centres.len())];
                let radius = 30.0 * rng.random::<f64>().sqrt();
                let angle = rng.random_range(0.0..std::f64::consts::TAU);
                vec![c[0] + radius * angle.cos(), c[1] + radius * angle.sin()]
            } else {
                vec![rng.random_range(0.0..side), rng.random_range(0.0..side)]
            }
        });
        let r = fresh(&mut seen, || {
            let len = rng.random_range(1.0..max_len);
            let angle = rng.random_range(0.0..std::f64::consts::TAU);
            vec![s[0] + len * angle.cos(), s[1] + len * angle.sin()]
        });
        points.push(s);
        points.push(r);
        links.push([2 * i, 2 * i + 1]);
    }
    empty(points, links)
}

fn grid(rng: &mut ChaCha8Rng, opts: &GenOptions) -> CliResult<InstanceFile> {
    let width = opts.side.map_or(4, |s| s.round() as usize);
    if width < 2 {
        return Err(CliError::Input("grid width must be at least 2".into()));
    }
    let nodes = width * width;
    let points: Vec<Vec<f64>> = (0..nodes)
        .map(|v| {
            let (x, y) = ((v % width) as f64, (v / width) as f64);
            vec![10.0 * x + rng.random_range(-1.0..1.0), 10.0 * y + rng.random_range(-1.0..1.0)]
        })
        .collect();
    let mut edges = Vec::new();
    for v in 0..nodes {
        let (x, y) = (v % width, v / width);
        if x + 1 < width {
            edges.push([v, v + 1]);
            edges.push([v + 1, v]);
        }
        if y + 1 < width {
            edges.push([v, v + width]);
            edges.push([v + width, v]);
        }
    }
    let mut adjacency = vec![Vec::new(); nodes];
    for &[u, v] in &edges {
        adjacency[u].push(v);
    }

    let mut commodities = Vec::with_capacity(opts.n);
    let mut paths = Vec::with_capacity(opts.n);
    for _ in 0..opts.n {
        let s = rng.random_range(0..nodes);
        let mut t = rng.random_range(0..nodes - 1);
        if t >= s {
            t += 1;
        }
        commodities.push([s, t]);
        paths.push(shortest_path(&adjacency, s, t));
    }
    let mut links: Vec<[usize; 2]> = paths.iter().flat_map(|p| p.windows(2).map(|w| [w[0], w[1]])).collect();
    links.sort_unstable();
    links.dedup();

    let mut doc = empty(points, links);
    doc.edges = Some(edges);
    doc.commodities = Some(commodities);
    doc.paths = Some(paths);
    Ok(doc)
}

fn shortest_path(adjacency: &[Vec<usize>], s: usize, t: usize) -> Vec<usize> {
    let mut parent = vec![usize::MAX; adjacency.len()];
    parent[s] = s;
    let mut queue = VecDeque::from([s]);
    while let Some(u) = queue.pop_front() {
        if u == t {
            break;
        }
        for &v in &adjacency[u] {
            if parent[v] == usize::MAX {
                parent[v] = u;
                queue.push_back(v);
            }
        }
    }
    let mut path = vec![t];
    while *path.last().unwrap() != s {
        path.push(parent[*path.last().unwrap()]);
    }
    path.reverse();
    path
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(kind: GenKind, n: usize) -> GenOptions {
        GenOptions { kind, n, seed: 7, params: InstanceParams::new(3.0, 1.0, 0.0).unwrap(), side: None }
    }

    #[test]
    fn every_kind_builds_a_valid_instance() {
        for kind in [GenKind::Line, GenKind::UniformSquare, GenKind::Clustered, GenKind::Grid] {
            let doc = generate(&opts(kind, 12)).unwrap();
            let inst = doc.to_instance(doc.params()).unwrap();
            assert!(!inst.is_empty());
            if kind != GenKind::Grid {
                assert_eq!(inst.len(), 12);
            }
        }
    }

    #[test]
    fn same_seed_same_document() {
        let a = generate(&opts(GenKind::Clustered, 20)).unwrap();
        let b = generate(&opts(GenKind::Clustered, 20)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_links_rejected() {
        assert!(matches!(generate(&opts(GenKind::Line, 0)), Err(CliError::Input(_))));
    }

    #[test]
    fn grid_paths_follow_edges() {
        let doc = generate(&opts(GenKind::Grid, 5)).unwrap();
        let edges: HashSet<[usize; 2]> = doc.edges.clone().unwrap().into_iter().collect();
        for (path, c) in doc.paths.unwrap().iter().zip(doc.commodities.unwrap()) {
            assert_eq!(path[0], c[0]);
            assert_eq!(*path.last().unwrap(), c[1]);
            assert!(path.windows(2).all(|w| edges.contains(&[w[0], w[1]])));
        }
    }
}
