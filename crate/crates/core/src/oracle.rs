//! Ground truth for small instances: exhaustive capacity and scheduling optima,
//! and the classic fixed-point power iteration.

use crate::error::{Error, Result};
use crate::model::{admissible, gain_matrix, power_equation_rhs, Instance, PowerAssignment};

pub use crate::spectral::{perron_bracket, spectral_radius, PerronBracket};

pub const CAPACITY_LIMIT: usize = 12;
pub const SCHEDULE_LIMIT: usize = 10;

const FIXED_POINT_MAX_ITERATIONS: usize = 100_000;
const FIXED_POINT_RTOL: f64 = 1e-12;
const DIVERGENCE_GUARD: f64 = 1e150;

/// Admissibility of every subset of the requests, indexed by bitmask.
#[derive(Debug, Clone)]
pub struct AdmissibleSets {
    admissible: Vec<bool>,
    /// Subsets on which the spectral test actually ran.
    pub evaluated: usize,
}

impl AdmissibleSets {
    /// Enumerates subsets by increasing size. A subset with an inadmissible
    /// one-smaller subset is rejected without evaluation.
    pub fn enumerate(instance: &Instance, limit: usize) -> Result<Self> {
        let n = instance.len();
        if n > limit {
            return Err(Error::SizeGuard { n, limit });
        }
        let full = 1usize << n;
        let mut masks: Vec<usize> = (1..full).collect();
        masks.sort_by_key(|m| (m.count_ones(), *m));
        let mut table = vec![false; full];
        table[0] = true;
        let mut evaluated = 0;
        for mask in masks {
            let all_children = (0..n).filter(|b| mask >> b & 1 == 1).all(|b| table[mask & !(1 << b)]);
            if !all_children {
                continue;
            }
            evaluated += 1;
            table[mask] = admissible(instance, &members(mask))?.admissible;
        }
        Ok(AdmissibleSets { admissible: table, evaluated })
    }

    pub fn is_admissible(&self, mask: usize) -> bool {
        self.admissible[mask]
    }

    /// Admissible sets that are not contained in a larger admissible set.
    pub fn maximal(&self) -> Vec<usize> {
        let full = self.admissible.len();
        let n = full.trailing_zeros() as usize;
        (1..full)
            .filter(|&m| self.admissible[m] && (0..n).all(|b| m >> b & 1 == 1 || !self.admissible[m | 1 << b]))
            .collect()
    }
}

pub fn members(mask: usize) -> Vec<usize> {
    (0..usize::BITS as usize).filter(|b| mask >> b & 1 == 1).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub optimum: usize,
    /// Disjoint admissible link sets attaining the optimum.
    pub witness: Vec<Vec<usize>>,
    pub admissible_sets_enumerated: usize,
}

impl OracleResult {
    pub fn witness_union(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.witness.iter().flatten().copied().collect();
        all.sort_unstable();
        all
    }
}

/// Maximum joint cardinality of `k` disjoint admissible sets.
pub fn brute_force_capacity(instance: &Instance, k: usize) -> Result<OracleResult> {
    if k == 0 {
        return Err(Error::input("number of channels must be at least 1"));
    }
    let sets = AdmissibleSets::enumerate(instance, CAPACITY_LIMIT)?;
    let full = (1usize << instance.len()) - 1;

    // best[j][mask]: largest total size of j disjoint admissible subsets of mask
    let mut best = vec![vec![0usize; full + 1]];
    let mut choice = vec![vec![0usize; full + 1]];
    for _ in 0..k {
        let prev = best.last().unwrap();
        let mut level = vec![0usize; full + 1];
        let mut pick = vec![0usize; full + 1];
        for mask in 0..=full {
            let mut sub = mask;
            loop {
                if sets.is_admissible(sub) {
                    let value = sub.count_ones() as usize + prev[mask & !sub];
                    if value > level[mask] {
                        level[mask] = value;
                        pick[mask] = sub;
                    }
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & mask;
            }
        }
        best.push(level);
        choice.push(pick);
    }

    let mut witness = Vec::with_capacity(k);
    let mut mask = full;
    for j in (1..=k).rev() {
        let sub = choice[j][mask];
        witness.push(members(sub));
        mask &= !sub;
    }
    Ok(OracleResult { optimum: best[k][full], witness, admissible_sets_enumerated: sets.evaluated })
}

/// Minimum number of admissible groups partitioning the requests, with a witness.
pub fn brute_force_schedule(instance: &Instance) -> Result<(usize, Vec<Vec<usize>>)> {
    let n = instance.len();
    let sets = AdmissibleSets::enumerate(instance, SCHEDULE_LIMIT)?;
    let full = (1usize << n) - 1;
    let mut best = vec![usize::MAX; full + 1];
    let mut pick = vec![0usize; full + 1];
    best[0] = 0;
    for mask in 1..=full {
        let low = mask & mask.wrapping_neg();
        let rest = mask & !low;
        // groups containing the lowest remaining link
        let mut sub = rest;
        loop {
            let group = sub | low;
            if sets.is_admissible(group) && best[mask & !group] != usize::MAX {
                let value = best[mask & !group] + 1;
                if value < best[mask] {
                    best[mask] = value;
                    pick[mask] = group;
                }
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
    }
    let mut groups = Vec::new();
    let mut mask = full;
    while mask != 0 {
        groups.push(members(pick[mask]));
        mask &= !pick[mask];
    }
    Ok((best[full], groups))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    pub converged: bool,
    pub powers: PowerAssignment,
    pub iterations: usize,
}

/// Iterates `p <- beta * M p + c` from `p = d^alpha`, with `c` as in
/// [`power_equation_rhs`]. Converges iff the relative change drops below 1e-12
/// within 1e5 steps; blowing past 1e150 counts as divergence.
pub fn fixed_point_powers(instance: &Instance, set: &[usize]) -> Result<FixedPoint> {
    if set.is_empty() {
        return Err(Error::input("fixed-point iteration needs a nonempty set"));
    }
    instance.check_indices(set)?;
    let beta = instance.params().beta;
    let m = gain_matrix(instance, set);
    let c = power_equation_rhs(instance, set);
    let lengths: Vec<f64> = set.iter().map(|&i| instance.link(i).length.powf(instance.params().alpha)).collect();
    let mut p = lengths;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < FIXED_POINT_MAX_ITERATIONS {
        iterations += 1;
        let next: Vec<f64> = m
            .iter()
            .zip(&c)
            .map(|(row, ci)| beta * row.iter().zip(&p).map(|(a, b)| a * b).sum::<f64>() + ci)
            .collect();
        let change = next
            .iter()
            .zip(&p)
            .map(|(a, b)| (a - b).abs() / a.abs())
            .fold(0.0, f64::max);
        p = next;
        if p.iter().any(|v| !v.is_finite() || *v > DIVERGENCE_GUARD) {
            break;
        }
        if change < FIXED_POINT_RTOL {
            converged = true;
            break;
        }
    }
    let powers = if converged { set.iter().copied().zip(p).collect() } else { PowerAssignment::new() };
    Ok(FixedPoint { converged, powers, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{check_feasible, InstanceParams, MetricSpace};

    fn line_instance(xs: &[f64], pairs: &[(usize, usize)]) -> Instance {
        let m = MetricSpace::euclidean(xs.iter().map(|&x| vec![x]).collect()).unwrap();
        Instance::new(m, InstanceParams::new(3.0, 1.0, 0.0).unwrap(), pairs).unwrap()
    }

    #[test]
    fn capacity_of_admissible_pair() {
        let inst = line_instance(&[0.0, 1.0, 3.0, 5.0], &[(0, 1), (2, 3)]);
        let r = brute_force_capacity(&inst, 1).unwrap();
        assert_eq!(r.optimum, 2);
        assert_eq!(r.witness, vec![vec![0, 1]]);
    }

    #[test]
    fn capacity_single_link() {
        let inst = line_instance(&[0.0, 1.0], &[(0, 1)]);
        assert_eq!(brute_force_capacity(&inst, 1).unwrap().optimum, 1);
    }

    #[test]
    fn capacity_of_conflicting_pair() {
        let inst = line_instance(&[0.0, 1.0, 1.2, 2.2], &[(0, 1), (2, 3)]);
        assert_eq!(brute_force_capacity(&inst, 1).unwrap().optimum, 1);
        let two = brute_force_capacity(&inst, 2).unwrap();
        assert_eq!(two.optimum, 2);
        assert_eq!(two.witness_union(), vec![0, 1]);
    }

    #[test]
    fn capacity_size_guard() {
        let xs: Vec<f64> = (0..26).map(|i| i as f64 * 10.0).collect();
        let pairs: Vec<_> = (0..13).map(|i| (2 * i, 2 * i + 1)).collect();
        let inst = line_instance(&xs, &pairs);
        assert_eq!(brute_force_capacity(&inst, 1), Err(Error::SizeGuard { n: 13, limit: 12 }));
    }

    #[test]
    fn schedule_cases() {
        let empty = line_instance(&[0.0, 1.0], &[]);
        assert_eq!(brute_force_schedule(&empty).unwrap().0, 0);
        let far = line_instance(&[0.0, 1.0, 1e4, 1e4 + 1.0, 2e4, 2e4 + 1.0], &[(0, 1), (2, 3), (4, 5)]);
        assert_eq!(brute_force_schedule(&far).unwrap().0, 1);
        // each pair overlaps heavily
        let chain = line_instance(&[0.0, 1.0, 1.1, 2.1, 0.05, 1.05], &[(0, 1), (2, 3), (4, 5)]);
        let (slots, groups) = brute_force_schedule(&chain).unwrap();
        assert_eq!(slots, 3);
        assert_eq!(groups.len(), 3);
    }

    #[test]
    fn fixed_point_cases() {
        let single = line_instance(&[0.0, 1.0], &[(0, 1)]);
        let fp = fixed_point_powers(&single, &[0]).unwrap();
        assert!(fp.converged);
        assert!(fp.iterations <= 2);

        let good = line_instance(&[0.0, 1.0, 2.0, 3.0], &[(0, 1), (2, 3)]);
        let fp = fixed_point_powers(&good, &[0, 1]).unwrap();
        assert!(fp.converged);
        assert!(check_feasible(&good, &[0, 1], &fp.powers).unwrap().feasible);

        let bad = line_instance(&[0.0, 1.0, 1.2, 2.2], &[(0, 1), (2, 3)]);
        let fp = fixed_point_powers(&bad, &[0, 1]).unwrap();
        assert!(!fp.converged);
        assert!(fp.iterations < 1000);
    }

    #[test]
    fn maximal_sets() {
        let inst = line_instance(&[0.0, 1.0, 1.2, 2.2, 1e4, 1e4 + 1.0], &[(0, 1), (2, 3), (4, 5)]);
        let sets = AdmissibleSets::enumerate(&inst, 12).unwrap();
        assert_eq!(sets.maximal(), vec![0b101, 0b110]);
    }
}
