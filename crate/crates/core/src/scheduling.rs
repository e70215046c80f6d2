//! Single-hop interference scheduling and multi-hop scheduling on fixed paths.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::capacity::{assign_powers, verification_error};
use crate::error::{Error, Result};
use crate::model::{check_feasible, Instance, NodeId, PowerAssignment};
use crate::weights::WeightGraph;

#[derive(Debug, Clone, PartialEq)]
pub struct Slot {
    pub links: Vec<usize>,
    pub powers: PowerAssignment,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Schedule {
    pub slots: Vec<Slot>,
}

impl Schedule {
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }
}

/// Upper bound on the single-hop schedule length for `n` links:
/// `floor((W(R) / tau + 1) * ln n) + 1`, and exactly `n` for `n <= 1`.
pub fn slot_bound(max_weight: f64, tau: f64, n: usize) -> usize {
    if n <= 1 {
        return n;
    }
    ((max_weight / tau + 1.0) * (n as f64).ln()).floor() as usize + 1
}

/// Schedules every request, placing each link (by increasing length) into the
/// first slot where the greedy condition holds.
pub fn schedule_single_hop(instance: &Instance, tau: f64) -> Result<Schedule> {
    let weights = WeightGraph::new(instance);
    let all: Vec<usize> = (0..instance.len()).collect();
    schedule_links(&weights, &all, tau)
}

/// Single-hop schedule of a subset of the requests of `weights.instance()`.
///
/// Every slot is checked for feasibility and the length against [`slot_bound`],
/// with `W` probed from every request of the instance.
pub fn schedule_links(weights: &WeightGraph<'_>, links: &[usize], tau: f64) -> Result<Schedule> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::input(format!("tau must lie in (0, 1), got {tau}")));
    }
    let instance = weights.instance();
    instance.check_indices(links)?;
    let mut member = vec![false; instance.len()];
    for &l in links {
        if std::mem::replace(&mut member[l], true) {
            return Err(Error::input(format!("link {l} listed twice")));
        }
    }

    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &link in weights.order().iter().filter(|&&l| member[l]) {
        match groups.iter_mut().find(|g| weights.condition_holds(g, link, tau)) {
            Some(group) => group.push(link),
            None => groups.push(vec![link]),
        }
    }

    let mut slots = Vec::with_capacity(groups.len());
    for (index, links) in groups.into_iter().enumerate() {
        let powers = assign_powers(instance, &links)?;
        let report = check_feasible(instance, &links, &powers)?;
        if !report.feasible {
            return Err(verification_error(index, &report));
        }
        slots.push(Slot { links, powers });
    }

    let bound = slot_bound(weights.max_weight(links), tau, links.len());
    if slots.len() > bound {
        return Err(Error::Internal(format!("schedule uses {} slots, bound is {bound}", slots.len())));
    }
    Ok(Schedule { slots })
}

/// Packets travelling along fixed node sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiHopRequest {
    paths: Vec<Vec<NodeId>>,
}

impl MultiHopRequest {
    pub fn new(paths: Vec<Vec<NodeId>>) -> Result<Self> {
        for (i, path) in paths.iter().enumerate() {
            if path.len() < 2 {
                return Err(Error::input(format!("path {i} has fewer than two nodes")));
            }
            if path.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::input(format!("path {i} repeats a node on consecutive hops")));
            }
        }
        Ok(MultiHopRequest { paths })
    }

    pub fn paths(&self) -> &[Vec<NodeId>] {
        &self.paths
    }

    /// Hop count of the longest path.
    pub fn dilation(&self) -> usize {
        self.paths.iter().map(|p| p.len() - 1).max().unwrap_or(0)
    }

    /// All hop links `(P[i][j], P[i][j+1])`, path by path.
    pub fn hop_links(&self) -> Vec<(NodeId, NodeId)> {
        self.paths.iter().flat_map(|p| p.windows(2).map(|w| (w[0], w[1]))).collect()
    }
}

#[derive(Debug, Clone)]
pub struct MultiHopSchedule {
    /// The hop links as requests, numbered path by path; slot link indices refer to it.
    pub hop_instance: Instance,
    /// `hop_index[i][j]` is the request index of hop `j` of path `i`.
    pub hop_index: Vec<Vec<usize>>,
    pub slots: Vec<Slot>,
    /// `hop_slot[i][j]` is the slot serving hop `j` of path `i`.
    pub hop_slot: Vec<Vec<usize>>,
    /// Delay of each packet, drawn from `1..=delay_bound`.
    pub delays: Vec<usize>,
    pub delay_bound: usize,
    /// Slots spent on each super-slot `t = delay + j`, for `t = 1, 2, ...`.
    pub super_slot_lengths: Vec<usize>,
    /// `W(R)` over all hop links.
    pub max_weight: f64,
}

impl MultiHopSchedule {
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }
}

/// `max(1, ceil(W(R) / (3 ln n)))` for `n >= 2` hop links, else 1.
pub fn delay_bound(max_weight: f64, n: usize) -> usize {
    if n < 2 {
        return 1;
    }
    ((max_weight / (3.0 * (n as f64).ln())).ceil() as usize).max(1)
}

/// Random-delay multi-hop scheduling.
///
/// Each packet `i` draws a delay uniformly from `1..=K`; hop `j` of packet `i`
/// joins super-slot `delay_i + j`. Super-slots are scheduled independently with
/// the single-hop algorithm and concatenated in order, so hops of one packet are
/// always served in path order.
pub fn schedule_multi_hop(base: &Instance, request: &MultiHopRequest, seed: u64, tau: f64) -> Result<MultiHopSchedule> {
    let hop_instance = base.with_requests(&request.hop_links())?;
    let mut hop_index = Vec::with_capacity(request.paths().len());
    let mut next = 0;
    for path in request.paths() {
        let hops = path.len() - 1;
        hop_index.push((next..next + hops).collect::<Vec<_>>());
        next += hops;
    }

    let weights = WeightGraph::new(&hop_instance);
    let all: Vec<usize> = (0..hop_instance.len()).collect();
    let max_weight = weights.max_weight(&all);
    let bound = delay_bound(max_weight, hop_instance.len());

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let delays: Vec<usize> = hop_index.iter().map(|_| rng.random_range(1..=bound)).collect();

    let super_count = hop_index
        .iter()
        .zip(&delays)
        .map(|(hops, &d)| d + hops.len() - 1)
        .max()
        .unwrap_or(0);
    let mut super_slots: Vec<Vec<usize>> = vec![Vec::new(); super_count];
    for (hops, &d) in hop_index.iter().zip(&delays) {
        for (j, &link) in hops.iter().enumerate() {
            super_slots[d + j - 1].push(link);
        }
    }

    let mut slots = Vec::new();
    let mut slot_of = vec![usize::MAX; hop_instance.len()];
    let mut super_slot_lengths = Vec::with_capacity(super_count);
    for members in &super_slots {
        let schedule = schedule_links(&weights, members, tau)?;
        super_slot_lengths.push(schedule.len());
        for slot in schedule.slots {
            for &l in &slot.links {
                slot_of[l] = slots.len();
            }
            slots.push(slot);
        }
    }
    let hop_slot = hop_index.iter().map(|hops| hops.iter().map(|&l| slot_of[l]).collect()).collect();

    Ok(MultiHopSchedule {
        hop_instance,
        hop_index,
        slots,
        hop_slot,
        delays,
        delay_bound: bound,
        super_slot_lengths,
        max_weight,
    })
}
