//! The interference-weight graph.
//!
//! For links `l = (s, r)` and `l' = (s', r')` with `l` strictly shorter than `l'`
//! in the tie-broken order,
//!
//! ```text
//! w(l, l') = min{1, d(l)^alpha / d(s, r')^alpha} + min{1, d(l)^alpha / d(s', r)^alpha}
//! ```
//!
//! and `w(l, l') = 0` otherwise. Weights flow from shorter links towards longer
//! ones, so the greedy condition for a candidate is the sum of incoming weights
//! from the links already in a channel.

use crate::model::{Instance, InstanceParams};

/// Above this many requests the weight table is not cached.
pub const DENSE_CACHE_LIMIT: usize = 4096;

/// Greedy acceptance threshold `1 / (2 * 3^alpha * (4 beta + 2))`.
pub fn tau(params: &InstanceParams) -> f64 {
    1.0 / (2.0 * 3f64.powf(params.alpha) * (4.0 * params.beta + 2.0))
}

/// `min{1, num / den}` with a vanishing denominator capped at 1.
#[inline]
fn capped_ratio(num: f64, den: f64) -> f64 {
    if den <= 0.0 {
        1.0
    } else {
        (num / den).min(1.0)
    }
}

pub struct WeightGraph<'a> {
    instance: &'a Instance,
    order: Vec<usize>,
    cache: Option<Vec<f64>>,
}

impl<'a> WeightGraph<'a> {
    pub fn new(instance: &'a Instance) -> Self {
        let order = instance.length_order();
        let n = instance.len();
        let mut graph = WeightGraph { instance, order, cache: None };
        if n <= DENSE_CACHE_LIMIT {
            let mut table = vec![0.0; n * n];
            for a in 0..n {
                for b in 0..n {
                    table[a * n + b] = graph.compute(a, b);
                }
            }
            graph.cache = Some(table);
        }
        graph
    }

    pub fn instance(&self) -> &'a Instance {
        self.instance
    }

    /// Request indices by increasing `(length, index)`.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    fn compute(&self, from: usize, to: usize) -> f64 {
        if !self.instance.is_shorter(from, to) {
            return 0.0;
        }
        let metric = self.instance.metric();
        let alpha = self.instance.params().alpha;
        let a = self.instance.link(from);
        let b = self.instance.link(to);
        let own = a.length.powf(alpha);
        capped_ratio(own, metric.dist(a.sender, b.receiver).powf(alpha))
            + capped_ratio(own, metric.dist(b.sender, a.receiver).powf(alpha))
    }

    /// `w(from, to)`.
    #[inline]
    pub fn weight(&self, from: usize, to: usize) -> f64 {
        match &self.cache {
            Some(table) => table[from * self.instance.len() + to],
            None => self.compute(from, to),
        }
    }

    /// `W_probe(set) = sum_{l' in set} w(probe, l')`. The probe need not be in the set.
    pub fn out_weight(&self, probe: usize, set: &[usize]) -> f64 {
        set.iter().map(|&to| self.weight(probe, to)).sum()
    }

    /// `W(set)`: the largest out-weight into `set` over every request, member or not.
    pub fn max_weight(&self, set: &[usize]) -> f64 {
        (0..self.instance.len()).map(|probe| self.out_weight(probe, set)).fold(0.0, f64::max)
    }

    /// Incoming weight of `candidate` from the links in `slot`.
    pub fn incoming(&self, slot: &[usize], candidate: usize) -> f64 {
        slot.iter().map(|&from| self.weight(from, candidate)).sum()
    }

    /// Greedy acceptance: `sum_{l in slot} w(l, candidate) <= tau`.
    ///
    /// Capped weights decide the same predicate as the uncapped sum whenever
    /// `tau < 1`, since a capped term already exceeds `tau` on its own.
    pub fn condition_holds(&self, slot: &[usize], candidate: usize, tau: f64) -> bool {
        self.incoming(slot, candidate) <= tau
    }
}
