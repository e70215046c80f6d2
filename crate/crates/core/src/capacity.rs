//! k-channel capacity maximization.
//!
//! Links are visited by increasing length and placed into the first channel whose
//! incoming weight stays within `tau`; the rest are discarded. Each channel then
//! receives powers by a recursion over decreasing length, which yields a feasible
//! assignment for every channel built this way.

use crate::error::{Error, Result};
use crate::model::{check_feasible, FeasibilityReport, Instance, PowerAssignment};
use crate::weights::{tau, WeightGraph};

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelAssignment {
    /// Accepted links per channel, in acceptance (increasing length) order.
    pub channels: Vec<Vec<usize>>,
    pub discarded: Vec<usize>,
    /// One entry per channel; empty until powers are assigned.
    pub powers: Vec<PowerAssignment>,
}

impl ChannelAssignment {
    /// Number of accepted links over all channels.
    pub fn accepted(&self) -> usize {
        self.channels.iter().map(Vec::len).sum()
    }

    pub fn accepted_links(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.channels.iter().flatten().copied().collect();
        all.sort_unstable();
        all
    }
}

/// First-fit greedy selection into `k` channels under threshold `tau`.
pub fn greedy_select(weights: &WeightGraph<'_>, k: usize, tau: f64) -> Result<ChannelAssignment> {
    if k == 0 {
        return Err(Error::input("number of channels must be at least 1"));
    }
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::input(format!("tau must lie in (0, 1), got {tau}")));
    }
    let mut channels: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut discarded = Vec::new();
    for &link in weights.order() {
        match channels.iter_mut().find(|c| weights.condition_holds(c, link, tau)) {
            Some(channel) => channel.push(link),
            None => discarded.push(link),
        }
    }
    Ok(ChannelAssignment { channels, discarded, powers: Vec::new() })
}

/// Recursive powers for one channel.
///
/// The longest link gets power 1. Going down in length, link `l' = (s', r')`
/// gets `4 beta * d(l')^alpha * sum_{longer l = (s, r)} p(l) / d(s, r')^alpha`.
/// Finally all powers are scaled by one common factor so that
/// `p(l) >= 2 max(1, beta) noise d(l)^alpha` holds for every link. Interference
/// then takes at most half the signal and noise at most the other half.
pub fn assign_powers(instance: &Instance, channel: &[usize]) -> Result<PowerAssignment> {
    instance.check_indices(channel)?;
    let params = instance.params();
    let (alpha, beta, noise) = (params.alpha, params.beta, params.noise);

    let mut by_length = channel.to_vec();
    by_length.sort_by(|&a, &b| {
        instance.link(b).length.total_cmp(&instance.link(a).length).then(b.cmp(&a))
    });

    let mut powers: Vec<f64> = Vec::with_capacity(by_length.len());
    for (pos, &link) in by_length.iter().enumerate() {
        // every link before `pos` is longer and already has its power
        let received: f64 = by_length[..pos]
            .iter()
            .zip(&powers)
            .map(|(&longer, &p)| p / instance.cross_gain_distance(longer, link))
            .sum();
        let p = if received > 0.0 {
            4.0 * beta * received * instance.link(link).length.powf(alpha)
        } else {
            1.0
        };
        powers.push(p);
    }

    let factor = by_length
        .iter()
        .zip(&powers)
        .map(|(&link, &p)| 2.0 * beta.max(1.0) * noise * instance.link(link).length.powf(alpha) / p)
        .fold(1.0, f64::max);

    let mut assignment = PowerAssignment::new();
    for (&link, &p) in by_length.iter().zip(&powers) {
        assignment.insert(link, p * factor).map_err(|e| Error::Internal(format!("power recursion: {e}")))?;
    }
    Ok(assignment)
}

#[derive(Debug, Clone)]
pub struct CapacityOutcome {
    pub assignment: ChannelAssignment,
    pub reports: Vec<FeasibilityReport>,
    pub tau: f64,
}

/// Greedy selection with the default threshold, powers per channel, and a
/// feasibility check on every channel.
pub fn maximize_capacity(instance: &Instance, k: usize) -> Result<CapacityOutcome> {
    maximize_capacity_with_tau(instance, k, tau(instance.params()))
}

pub fn maximize_capacity_with_tau(instance: &Instance, k: usize, tau: f64) -> Result<CapacityOutcome> {
    let weights = WeightGraph::new(instance);
    let mut assignment = greedy_select(&weights, k, tau)?;
    let mut reports = Vec::with_capacity(k);
    for (group, channel) in assignment.channels.iter().enumerate() {
        let powers = assign_powers(instance, channel)?;
        let report = check_feasible(instance, channel, &powers)?;
        if !report.feasible {
            return Err(verification_error(group, &report));
        }
        assignment.powers.push(powers);
        reports.push(report);
    }
    Ok(CapacityOutcome { assignment, reports, tau })
}

pub(crate) fn verification_error(group: usize, report: &FeasibilityReport) -> Error {
    Error::Verification {
        group,
        links: report.violations.clone(),
        margins: report.violations.iter().map(|l| report.margins[l]).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{InstanceParams, MetricSpace};
    use approx::assert_relative_eq;

    fn line_instance(xs: &[f64], pairs: &[(usize, usize)], noise: f64) -> Instance {
        let m = MetricSpace::euclidean(xs.iter().map(|&x| vec![x]).collect()).unwrap();
        Instance::new(m, InstanceParams::new(3.0, 1.0, noise).unwrap(), pairs).unwrap()
    }

    #[test]
    fn single_link_single_channel() {
        let inst = line_instance(&[0.0, 1.0], &[(0, 1)], 0.0);
        let out = maximize_capacity(&inst, 1).unwrap();
        assert_eq!(out.assignment.channels, vec![vec![0]]);
        assert!(out.assignment.discarded.is_empty());
    }

    #[test]
    fn conflicting_pair_one_channel() {
        let inst = line_instance(&[0.0, 1.0, 3.0, 5.0], &[(0, 1), (2, 3)], 0.0);
        let g = WeightGraph::new(&inst);
        let a = greedy_select(&g, 1, 1.0 / 324.0).unwrap();
        assert_eq!(a.channels, vec![vec![0]]);
        assert_eq!(a.discarded, vec![1]);
    }

    #[test]
    fn conflicting_pair_two_channels() {
        let inst = line_instance(&[0.0, 1.0, 3.0, 5.0], &[(0, 1), (2, 3)], 0.0);
        let g = WeightGraph::new(&inst);
        let a = greedy_select(&g, 2, 1.0 / 324.0).unwrap();
        assert_eq!(a.channels, vec![vec![0], vec![1]]);
        assert!(a.discarded.is_empty());
    }

    #[test]
    fn greedy_rejects_bad_arguments() {
        let inst = line_instance(&[0.0, 1.0], &[(0, 1)], 0.0);
        let g = WeightGraph::new(&inst);
        assert!(greedy_select(&g, 0, 0.1).is_err());
        assert!(greedy_select(&g, 1, 1.5).is_err());
    }

    #[test]
    fn powers_single_link() {
        let inst = line_instance(&[0.0, 10.0], &[(0, 1)], 0.0);
        let p = assign_powers(&inst, &[0]).unwrap();
        assert_eq!(p.get(0), Some(1.0));
    }

    #[test]
    fn powers_one_step_recursion() {
        let inst = line_instance(&[0.0, 10.0, 100.0, 101.0], &[(0, 1), (2, 3)], 0.0);
        let p = assign_powers(&inst, &[1, 0]).unwrap();
        assert_eq!(p.get(0), Some(1.0));
        assert_relative_eq!(p.get(1).unwrap(), 4.0 / 1_030_301.0, max_relative = 1e-14);
        assert!(check_feasible(&inst, &[0, 1], &p).unwrap().feasible);
    }

    #[test]
    fn powers_scaled_for_noise() {
        let inst = line_instance(&[0.0, 1.0], &[(0, 1)], 10.0);
        let p = assign_powers(&inst, &[0]).unwrap();
        assert_relative_eq!(p.get(0).unwrap(), 20.0, max_relative = 1e-15);
        let report = check_feasible(&inst, &[0], &p).unwrap();
        assert!(report.feasible);
        assert_relative_eq!(report.margins[&0], 10.0, max_relative = 1e-14);
    }

    #[test]
    fn noise_scaling_with_small_gain() {
        // with beta < 1 the scaled signal must still cover noise plus interference
        let m = MetricSpace::euclidean(vec![vec![0.0], vec![1.0], vec![30.0], vec![32.0]]).unwrap();
        let inst = Instance::new(m, InstanceParams::new(3.0, 0.5, 1e-3).unwrap(), &[(0, 1), (2, 3)]).unwrap();
        let p = assign_powers(&inst, &[0, 1]).unwrap();
        for l in [0, 1] {
            assert!(p.get(l).unwrap() >= 2.0 * 1e-3 * inst.link(l).length.powi(3) * (1.0 - 1e-15));
        }
        assert!(check_feasible(&inst, &[0, 1], &p).unwrap().feasible);
    }

    #[test]
    fn empty_channel_has_no_powers() {
        let inst = line_instance(&[0.0, 1.0], &[(0, 1)], 0.0);
        assert!(assign_powers(&inst, &[]).unwrap().is_empty());
    }

    #[test]
    fn empty_request_set() {
        let inst = line_instance(&[0.0, 1.0], &[], 0.0);
        let out = maximize_capacity(&inst, 2).unwrap();
        assert_eq!(out.assignment.accepted(), 0);
        assert_eq!(out.assignment.channels.len(), 2);
        assert!(out.reports.iter().all(|r| r.feasible));
    }

    #[test]
    fn far_apart_pair_is_accepted_together() {
        let inst = line_instance(&[0.0, 1.0, 1000.0, 1002.0], &[(0, 1), (2, 3)], 0.0);
        let out = maximize_capacity(&inst, 1).unwrap();
        assert_eq!(out.assignment.channels, vec![vec![0, 1]]);
        assert!(out.reports[0].margins.values().all(|&m| m >= 0.0));
    }

    #[test]
    fn deterministic() {
        let inst = line_instance(&[0.0, 1.0, 3.0, 5.0, 40.0, 42.5, 90.0, 91.0], &[(0, 1), (2, 3), (4, 5), (6, 7)], 1e-6);
        let a = maximize_capacity(&inst, 2).unwrap().assignment;
        let b = maximize_capacity(&inst, 2).unwrap().assignment;
        assert_eq!(a, b);
    }
}
