//! Joint path selection and scheduling.
//!
//! Paths are chosen through a fractional multi-commodity flow that minimizes `z`,
//! an upper bound on both the longest path (in hops) and the weighted
//! interference load probed at every edge. The fractional flow is decomposed into
//! paths, paths longer than `2z` are dropped, one path per commodity is drawn at
//! random, and the chosen paths are handed to the multi-hop scheduler.

pub mod lp;

use std::collections::VecDeque;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{Instance, NodeId};
use crate::scheduling::{schedule_multi_hop, MultiHopRequest, MultiHopSchedule};
use crate::weights::WeightGraph;

pub use lp::{LinearProgram, LpSolution, Relation};

/// Flow values at or below this are treated as zero during decomposition.
pub const ZERO_FLOW: f64 = 1e-12;
/// Tolerance on conservation and on path weights summing to one.
pub const FLOW_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct RoutingProblem {
    node_count: usize,
    edges: Vec<(NodeId, NodeId)>,
    commodities: Vec<(NodeId, NodeId)>,
}

impl RoutingProblem {
    pub fn new(node_count: usize, edges: Vec<(NodeId, NodeId)>, commodities: Vec<(NodeId, NodeId)>) -> Result<Self> {
        for (e, &(u, v)) in edges.iter().enumerate() {
            if u >= node_count || v >= node_count {
                return Err(Error::InvalidNode { node: u.max(v), len: node_count });
            }
            if u == v {
                return Err(Error::input(format!("edge {e} is a self-loop at node {u}")));
            }
            if edges[..e].contains(&(u, v)) {
                return Err(Error::input(format!("edge {e} ({u},{v}) is listed twice")));
            }
        }
        let problem = RoutingProblem { node_count, edges, commodities };
        for (i, &(s, t)) in problem.commodities.iter().enumerate() {
            if s >= node_count || t >= node_count {
                return Err(Error::InvalidNode { node: s.max(t), len: node_count });
            }
            if s == t {
                return Err(Error::input(format!("commodity {i} has identical endpoints {s}")));
            }
            if !problem.reachable(s, t) {
                return Err(Error::input(format!("commodity {i}: node {t} is unreachable from {s}")));
            }
        }
        Ok(problem)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn commodities(&self) -> &[(NodeId, NodeId)] {
        &self.commodities
    }

    fn reachable(&self, s: NodeId, t: NodeId) -> bool {
        let mut seen = vec![false; self.node_count];
        let mut queue = VecDeque::from([s]);
        seen[s] = true;
        while let Some(u) = queue.pop_front() {
            if u == t {
                return true;
            }
            for &(a, b) in &self.edges {
                if a == u && !seen[b] {
                    seen[b] = true;
                    queue.push_back(b);
                }
            }
        }
        false
    }
}

/// The routing LP together with its variable layout.
#[derive(Debug, Clone)]
pub struct RoutingLp {
    pub lp: LinearProgram,
    pub commodities: usize,
    pub edges: usize,
}

impl RoutingLp {
    /// Index of `y(i, e)`.
    pub fn flow_var(&self, commodity: usize, edge: usize) -> usize {
        commodity * self.edges + edge
    }

    pub fn z_var(&self) -> usize {
        self.commodities * self.edges
    }
}

/// The edges as requests over the base metric and parameters; edge weights and
/// tie-breaking follow edge indices.
pub fn edge_instance(base: &Instance, problem: &RoutingProblem) -> Result<Instance> {
    if problem.node_count() != base.metric().len() {
        return Err(Error::input(format!(
            "routing problem has {} nodes but the metric has {}",
            problem.node_count(),
            base.metric().len()
        )));
    }
    base.with_requests(problem.edges())
}

/// Relaxed routing LP:
///
/// ```text
/// min z
///   out(s_i) - in(s_i) = 1                       per commodity
///   out(v) - in(v) = 0                           per commodity, v not in {s_i, t_i}
///   sum_e y(i, e) <= z                           per commodity
///   sum_i sum_e' w(l, e') y(i, e') <= z          per probe edge l
///   0 <= y(i, e) <= 1
/// ```
pub fn build_routing_lp(base: &Instance, problem: &RoutingProblem) -> Result<RoutingLp> {
    let edges_inst = edge_instance(base, problem)?;
    let weights = WeightGraph::new(&edges_inst);
    let (m, ne) = (problem.commodities().len(), problem.edges().len());
    let mut layout = RoutingLp { lp: LinearProgram::new(), commodities: m, edges: ne };
    for _ in 0..m * ne {
        layout.lp.add_variable(0.0, 1.0, 0.0);
    }
    let z = layout.lp.add_variable(0.0, f64::INFINITY, 1.0);
    let mut lp = std::mem::take(&mut layout.lp);
    for (i, &(s, t)) in problem.commodities().iter().enumerate() {
        for v in 0..problem.node_count() {
            if v == t {
                continue;
            }
            let mut coeffs = Vec::new();
            for (e, &(a, b)) in problem.edges().iter().enumerate() {
                if a == v {
                    coeffs.push((layout.flow_var(i, e), 1.0));
                } else if b == v {
                    coeffs.push((layout.flow_var(i, e), -1.0));
                }
            }
            let rhs = if v == s { 1.0 } else { 0.0 };
            if coeffs.is_empty() && rhs == 0.0 {
                continue;
            }
            lp.add_constraint(coeffs, Relation::Eq, rhs);
        }
    }
    for i in 0..m {
        let mut coeffs: Vec<(usize, f64)> = (0..ne).map(|e| (layout.flow_var(i, e), 1.0)).collect();
        coeffs.push((z, -1.0));
        lp.add_constraint(coeffs, Relation::Le, 0.0);
    }
    if m > 0 {
        for probe in 0..ne {
            let mut coeffs = Vec::new();
            for e in 0..ne {
                let w = weights.weight(probe, e);
                if w > 0.0 {
                    coeffs.extend((0..m).map(|i| (layout.flow_var(i, e), w)));
                }
            }
            if coeffs.is_empty() {
                continue;
            }
            coeffs.push((z, -1.0));
            lp.add_constraint(coeffs, Relation::Le, 0.0);
        }
    }
    layout.lp = lp;
    Ok(layout)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FractionalFlow {
    /// `y[i][e]`.
    pub y: Vec<Vec<f64>>,
    /// Optimal LP objective `z*`.
    pub z: f64,
}

pub fn solve_routing_lp(base: &Instance, problem: &RoutingProblem) -> Result<FractionalFlow> {
    let layout = build_routing_lp(base, problem)?;
    let solution = layout.lp.solve()?;
    let y = (0..layout.commodities)
        .map(|i| (0..layout.edges).map(|e| solution.values[layout.flow_var(i, e)]).collect())
        .collect();
    Ok(FractionalFlow { y, z: solution.values[layout.z_var()] })
}

/// Worst violations of the routing constraints by a fractional flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowResiduals {
    pub conservation: f64,
    pub dilation: f64,
    pub load: f64,
}

pub fn flow_residuals(base: &Instance, problem: &RoutingProblem, flow: &FractionalFlow) -> Result<FlowResiduals> {
    let edges_inst = edge_instance(base, problem)?;
    let weights = WeightGraph::new(&edges_inst);
    let mut conservation = 0.0f64;
    let mut dilation = 0.0f64;
    for (i, &(s, t)) in problem.commodities().iter().enumerate() {
        let balance = node_balance(problem, &flow.y[i]);
        for (v, b) in balance.iter().enumerate() {
            let target = if v == s { 1.0 } else if v == t { -1.0 } else { 0.0 };
            conservation = conservation.max((b - target).abs());
        }
        dilation = dilation.max(flow.y[i].iter().sum::<f64>() - flow.z);
    }
    let mut load = 0.0f64;
    for probe in 0..problem.edges().len() {
        let l: f64 = flow
            .y
            .iter()
            .map(|row| row.iter().enumerate().map(|(e, y)| weights.weight(probe, e) * y).sum::<f64>())
            .sum();
        load = load.max(l - flow.z);
    }
    Ok(FlowResiduals { conservation, dilation: dilation.max(0.0), load: load.max(0.0) })
}

/// Net outflow per node.
fn node_balance(problem: &RoutingProblem, y: &[f64]) -> Vec<f64> {
    let mut balance = vec![0.0; problem.node_count()];
    for (&(a, b), &f) in problem.edges().iter().zip(y) {
        balance[a] += f;
        balance[b] -= f;
    }
    balance
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedPath {
    pub nodes: Vec<NodeId>,
    pub edges: Vec<usize>,
    pub weight: f64,
}

impl WeightedPath {
    pub fn hops(&self) -> usize {
        self.edges.len()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FlowDecomposition {
    /// Source-to-sink paths; their weights sum to the flow value.
    pub paths: Vec<WeightedPath>,
    /// Circulations carrying no throughput, dropped from routing.
    pub cycles: Vec<WeightedPath>,
}

impl FlowDecomposition {
    /// Per-edge flow rebuilt from paths and cycles.
    pub fn accumulate(&self, edge_count: usize) -> Vec<f64> {
        let mut y = vec![0.0; edge_count];
        for p in self.paths.iter().chain(&self.cycles) {
            for &e in &p.edges {
                y[e] += p.weight;
            }
        }
        y
    }
}

/// Peels `s -> t` paths off the flow of one commodity, each carrying the smallest
/// residual on it. Walks follow the positive edge with the smallest head node;
/// a walk that closes a loop extracts that loop as a cycle instead.
pub fn decompose_flow(problem: &RoutingProblem, flow: &FractionalFlow, commodity: usize) -> Result<FlowDecomposition> {
    let (s, t) = *problem
        .commodities()
        .get(commodity)
        .ok_or_else(|| Error::input(format!("no commodity {commodity}")))?;
    let y = &flow.y[commodity];
    if y.len() != problem.edges().len() {
        return Err(Error::input("flow row does not match the edge count"));
    }
    let balance = node_balance(problem, y);
    for (v, &b) in balance.iter().enumerate() {
        if v != s && v != t && b.abs() > FLOW_TOL {
            return Err(Error::input(format!("flow of commodity {commodity} is not conserved at node {v} ({b})")));
        }
    }
    if (balance[s] + balance[t]).abs() > FLOW_TOL {
        return Err(Error::input(format!("flow of commodity {commodity} leaves {s} and reaches {t} in different amounts")));
    }

    let mut residual: Vec<f64> = y.iter().map(|&f| if f > ZERO_FLOW { f } else { 0.0 }).collect();
    let mut out_edges: Vec<Vec<usize>> = vec![Vec::new(); problem.node_count()];
    for (e, &(a, _)) in problem.edges().iter().enumerate() {
        out_edges[a].push(e);
    }
    for list in out_edges.iter_mut() {
        list.sort_by_key(|&e| (problem.edges()[e].1, e));
    }
    let next_edge = |residual: &[f64], v: NodeId| out_edges[v].iter().copied().find(|&e| residual[e] > ZERO_FLOW);

    let mut out = FlowDecomposition::default();
    let mut start = Some(s);
    while let Some(origin) = start {
        let mut nodes = vec![origin];
        let mut edges: Vec<usize> = Vec::new();
        let mut position = vec![usize::MAX; problem.node_count()];
        position[origin] = 0;
        let mut v = origin;
        loop {
            if v == t && origin == s {
                out.paths.push(peel(&mut residual, nodes, edges));
                break;
            }
            let Some(e) = next_edge(&residual, v) else {
                // dust left by rounding; nothing more to follow from here
                for &e in &edges {
                    residual[e] = 0.0;
                }
                if origin != s {
                    residual.iter_mut().filter(|r| **r <= FLOW_TOL).for_each(|r| *r = 0.0);
                }
                break;
            };
            let w = problem.edges()[e].1;
            edges.push(e);
            if position[w] != usize::MAX {
                let from = position[w];
                let mut cycle_nodes = nodes[from..].to_vec();
                cycle_nodes.push(w);
                let cycle_edges = edges[from..].to_vec();
                out.cycles.push(peel(&mut residual, cycle_nodes, cycle_edges));
                break;
            }
            position[w] = nodes.len();
            nodes.push(w);
            v = w;
        }
        start = if next_edge(&residual, s).is_some() {
            Some(s)
        } else {
            (0..residual.len()).find(|&e| residual[e] > ZERO_FLOW).map(|e| problem.edges()[e].0)
        };
    }
    Ok(out)
}

fn peel(residual: &mut [f64], nodes: Vec<NodeId>, edges: Vec<usize>) -> WeightedPath {
    let weight = edges.iter().map(|&e| residual[e]).fold(f64::INFINITY, f64::min);
    for &e in &edges {
        residual[e] -= weight;
        if residual[e] <= ZERO_FLOW {
            residual[e] = 0.0;
        }
    }
    WeightedPath { nodes, edges, weight }
}

/// Paths of one commodity with positive weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub paths: Vec<WeightedPath>,
}

/// Drops paths with more than `2 z` hops and spreads their weight proportionally
/// over the survivors.
pub fn prune_paths(paths: Vec<WeightedPath>, z: f64) -> Result<PathSet> {
    let total: f64 = paths.iter().map(|p| p.weight).sum();
    if (total - 1.0).abs() > FLOW_TOL {
        return Err(Error::input(format!("path weights sum to {total}, expected 1")));
    }
    let limit = 2.0 * z + FLOW_TOL;
    let mut kept: Vec<WeightedPath> = paths.into_iter().filter(|p| p.hops() as f64 <= limit).collect();
    let kept_total: f64 = kept.iter().map(|p| p.weight).sum();
    if kept.is_empty() || kept_total <= 0.0 {
        return Err(Error::Internal(format!("every path exceeds 2z = {}", 2.0 * z)));
    }
    for p in kept.iter_mut() {
        p.weight /= kept_total;
    }
    Ok(PathSet { paths: kept })
}

/// One independent weighted draw per commodity; returns the chosen path index
/// within each set.
pub fn round_paths(sets: &[PathSet], seed: u64) -> Result<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sets.iter()
        .enumerate()
        .map(|(i, set)| {
            let dist = WeightedIndex::new(set.paths.iter().map(|p| p.weight))
                .map_err(|e| Error::input(format!("commodity {i}: {e}")))?;
            Ok(dist.sample(&mut rng))
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct ClmOutcome {
    pub flow: FractionalFlow,
    pub path_sets: Vec<PathSet>,
    /// Chosen node sequence per commodity.
    pub paths: Vec<Vec<NodeId>>,
    /// Hop count of the longest chosen path.
    pub dilation: usize,
    pub schedule: MultiHopSchedule,
}

/// Seed offset separating the delay stream from the rounding stream.
const DELAY_STREAM: u64 = 0x9E37_79B9_7F4A_7C15;

/// LP, decomposition, pruning, rounding and multi-hop scheduling in sequence.
pub fn solve_clm(base: &Instance, problem: &RoutingProblem, seed: u64, tau: f64) -> Result<ClmOutcome> {
    let flow = solve_routing_lp(base, problem)?;
    let mut path_sets = Vec::with_capacity(problem.commodities().len());
    for i in 0..problem.commodities().len() {
        let decomposition = decompose_flow(problem, &flow, i)?;
        path_sets.push(prune_paths(decomposition.paths, flow.z)?);
    }
    let choice = round_paths(&path_sets, seed)?;
    let paths: Vec<Vec<NodeId>> = path_sets.iter().zip(&choice).map(|(set, &c)| set.paths[c].nodes.clone()).collect();
    let request = MultiHopRequest::new(paths.clone())?;
    let dilation = request.dilation();
    if dilation as f64 > 2.0 * flow.z + FLOW_TOL {
        return Err(Error::Internal(format!("dilation {dilation} exceeds 2z = {}", 2.0 * flow.z)));
    }
    let schedule = schedule_multi_hop(base, &request, seed.wrapping_add(DELAY_STREAM), tau)?;
    Ok(ClmOutcome { flow, path_sets, paths, dilation, schedule })
}
