//! Instances of the physical interference model.
//!
//! A transmission from `s` at power `p` is received at `r` with strength
//! `p / d(s, r)^alpha`. A set of simultaneously active links is feasible under
//! powers `p` if every link satisfies
//!
//! ```text
//! p(l) / d(l)^alpha >= beta * sum_{l' != l} p(l') / d(s', r)^alpha + noise
//! ```
//!
//! Interference excludes the target link itself and the noise term is not scaled
//! by `beta`.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::spectral;

pub type NodeId = usize;

/// Relative tolerance on the SINR margin used by every feasibility check.
pub const FEASIBILITY_RTOL: f64 = 1e-9;

/// Links are admissible when the spectral radius of `beta * M` is below `1 - SPECTRAL_EPS`.
pub const SPECTRAL_EPS: f64 = 1e-9;

/// Relative slack allowed when validating symmetry and the triangle inequality of a
/// distance matrix read from a file.
const MATRIX_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum MetricSpace {
    Euclidean { points: Vec<Vec<f64>> },
    Matrix { distances: Vec<Vec<f64>> },
}

impl MetricSpace {
    /// Points in R^k with the Euclidean distance. All points must share a
    /// dimension and be pairwise distinct.
    pub fn euclidean(points: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(first) = points.first() {
            let dim = first.len();
            if dim == 0 {
                return Err(Error::input("points must have at least one coordinate"));
            }
            for (i, p) in points.iter().enumerate() {
                if p.len() != dim {
                    return Err(Error::input(format!(
                        "point {i} has dimension {}, expected {dim}",
                        p.len()
                    )));
                }
                if p.iter().any(|c| !c.is_finite()) {
                    return Err(Error::input(format!("point {i} has a non-finite coordinate")));
                }
            }
            for i in 0..points.len() {
                for j in (i + 1)..points.len() {
                    if points[i] == points[j] {
                        return Err(Error::input(format!("points {i} and {j} coincide")));
                    }
                }
            }
        }
        Ok(MetricSpace::Euclidean { points })
    }

    /// An explicit distance table. Rejects tables that are not square, have a
    /// nonzero diagonal, are asymmetric, have nonpositive off-diagonal entries or
    /// violate the triangle inequality.
    pub fn matrix(distances: Vec<Vec<f64>>) -> Result<Self> {
        let n = distances.len();
        for (i, row) in distances.iter().enumerate() {
            if row.len() != n {
                return Err(Error::input(format!(
                    "distance matrix row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            for (j, &d) in row.iter().enumerate() {
                if !d.is_finite() {
                    return Err(Error::input(format!("distance ({i},{j}) is not finite")));
                }
                if i == j && d != 0.0 {
                    return Err(Error::input(format!("distance ({i},{i}) must be zero")));
                }
                if i != j && d <= 0.0 {
                    return Err(Error::input(format!("distance ({i},{j}) must be positive")));
                }
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (distances[i][j], distances[j][i]);
                if (a - b).abs() > MATRIX_RTOL * a.max(b) {
                    return Err(Error::input(format!("distance matrix is not symmetric at ({i},{j})")));
                }
            }
        }
        for u in 0..n {
            for v in 0..n {
                for w in 0..n {
                    let direct = distances[u][w];
                    let detour = distances[u][v] + distances[v][w];
                    if direct > detour * (1.0 + MATRIX_RTOL) {
                        return Err(Error::TriangleInequality { u, v, w });
                    }
                }
            }
        }
        Ok(MetricSpace::Matrix { distances })
    }

    pub fn len(&self) -> usize {
        match self {
            MetricSpace::Euclidean { points } => points.len(),
            MetricSpace::Matrix { distances } => distances.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn check_node(&self, node: NodeId) -> Result<()> {
        if node < self.len() {
            Ok(())
        } else {
            Err(Error::InvalidNode { node, len: self.len() })
        }
    }

    pub fn distance(&self, u: NodeId, v: NodeId) -> Result<f64> {
        self.check_node(u)?;
        self.check_node(v)?;
        Ok(self.dist(u, v))
    }

    /// Unchecked distance; callers must have validated both node ids.
    #[inline]
    pub(crate) fn dist(&self, u: NodeId, v: NodeId) -> f64 {
        match self {
            MetricSpace::Euclidean { points } => {
                if u == v {
                    return 0.0;
                }
                points[u]
                    .iter()
                    .zip(&points[v])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            }
            MetricSpace::Matrix { distances } => distances[u][v],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceParams {
    /// Path-loss exponent.
    pub alpha: f64,
    /// Gain, the SINR threshold.
    pub beta: f64,
    /// Ambient noise.
    pub noise: f64,
}

impl InstanceParams {
    pub fn new(alpha: f64, beta: f64, noise: f64) -> Result<Self> {
        let params = InstanceParams { alpha, beta, noise };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::input(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::input(format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::input(format!("noise must be nonnegative, got {}", self.noise)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub sender: NodeId,
    pub receiver: NodeId,
    /// Cached `d(sender, receiver)`.
    pub length: f64,
}

/// A metric, physical parameters and a request set. Request indices are stable
/// and break ties between links of equal length (lower index counts as shorter).
#[derive(Debug, Clone)]
pub struct Instance {
    metric: Arc<MetricSpace>,
    params: InstanceParams,
    requests: Vec<Link>,
}

impl Instance {
    pub fn new(metric: MetricSpace, params: InstanceParams, pairs: &[(NodeId, NodeId)]) -> Result<Self> {
        Self::with_shared_metric(Arc::new(metric), params, pairs)
    }

    pub fn with_shared_metric(
        metric: Arc<MetricSpace>,
        params: InstanceParams,
        pairs: &[(NodeId, NodeId)],
    ) -> Result<Self> {
        params.validate()?;
        let requests = pairs
            .iter()
            .enumerate()
            .map(|(i, &(s, r))| {
                metric.check_node(s)?;
                metric.check_node(r)?;
                if s == r {
                    return Err(Error::input(format!("link {i} has identical sender and receiver {s}")));
                }
                let length = metric.dist(s, r);
                if !(length > 0.0) {
                    return Err(Error::input(format!("link {i} has zero length")));
                }
                Ok(Link { sender: s, receiver: r, length })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Instance { metric, params, requests })
    }

    /// A new instance over the same metric and parameters with a different request set.
    pub fn with_requests(&self, pairs: &[(NodeId, NodeId)]) -> Result<Self> {
        Self::with_shared_metric(Arc::clone(&self.metric), self.params, pairs)
    }

    /// Same metric and requests, different physical parameters.
    pub fn with_params(&self, params: InstanceParams) -> Result<Self> {
        params.validate()?;
        Ok(Instance { metric: Arc::clone(&self.metric), params, requests: self.requests.clone() })
    }

    pub fn metric(&self) -> &MetricSpace {
        &self.metric
    }

    pub fn shared_metric(&self) -> Arc<MetricSpace> {
        Arc::clone(&self.metric)
    }

    pub fn params(&self) -> &InstanceParams {
        &self.params
    }

    pub fn requests(&self) -> &[Link] {
        &self.requests
    }

    pub fn link(&self, index: usize) -> &Link {
        &self.requests[index]
    }

    pub fn len(&self) -> usize {
        self.requests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requests.is_empty()
    }

    pub fn pairs(&self) -> Vec<(NodeId, NodeId)> {
        self.requests.iter().map(|l| (l.sender, l.receiver)).collect()
    }

    /// Whether link `a` precedes link `b` in the tie-broken length order.
    #[inline]
    pub fn is_shorter(&self, a: usize, b: usize) -> bool {
        let (la, lb) = (self.requests[a].length, self.requests[b].length);
        la < lb || (la == lb && a < b)
    }

    /// Request indices sorted by increasing `(length, index)`.
    pub fn length_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.requests.len()).collect();
        order.sort_by(|&a, &b| {
            self.requests[a].length.total_cmp(&self.requests[b].length).then(a.cmp(&b))
        });
        order
    }

    /// `d(s_from, r_to)^alpha`.
    #[inline]
    pub(crate) fn cross_gain_distance(&self, from: usize, to: usize) -> f64 {
        let a = &self.requests[from];
        let b = &self.requests[to];
        self.metric.dist(a.sender, b.receiver).powf(self.params.alpha)
    }

    pub(crate) fn check_indices(&self, set: &[usize]) -> Result<()> {
        for &i in set {
            if i >= self.requests.len() {
                return Err(Error::input(format!(
                    "link index {i} out of range ({} requests)",
                    self.requests.len()
                )));
            }
        }
        Ok(())
    }
}

/// Strictly positive transmit powers keyed by request index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PowerAssignment {
    powers: BTreeMap<usize, f64>,
}

impl PowerAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, link: usize, power: f64) -> Result<()> {
        if !(power > 0.0 && power.is_finite()) {
            return Err(Error::input(format!("power for link {link} must be positive and finite, got {power}")));
        }
        self.powers.insert(link, power);
        Ok(())
    }

    pub fn get(&self, link: usize) -> Option<f64> {
        self.powers.get(&link).copied()
    }

    pub fn len(&self) -> usize {
        self.powers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.powers.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.powers.iter().map(|(&k, &v)| (k, v))
    }

    /// Multiplies every power by `factor > 0`.
    pub fn scale(&mut self, factor: f64) {
        for p in self.powers.values_mut() {
            *p *= factor;
        }
    }
}

impl FromIterator<(usize, f64)> for PowerAssignment {
    fn from_iter<I: IntoIterator<Item = (usize, f64)>>(iter: I) -> Self {
        PowerAssignment { powers: iter.into_iter().collect() }
    }
}

/// The three quantities entering one link's SINR constraint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrTerms {
    /// `p(l) / d(l)^alpha`.
    pub signal: f64,
    /// Unscaled interference `sum_{l' != l} p(l') / d(s', r)^alpha`.
    pub interference: f64,
    pub noise: f64,
}

impl SinrTerms {
    /// `beta * interference + noise`.
    pub fn rhs(&self, beta: f64) -> f64 {
        beta * self.interference + self.noise
    }

    /// `signal - (beta * interference + noise)`; nonnegative iff the constraint holds.
    pub fn margin(&self, beta: f64) -> f64 {
        self.signal - self.rhs(beta)
    }

    pub fn ratio(&self) -> f64 {
        self.signal / (self.interference + self.noise)
    }

    /// Constraint check with relative slack [`FEASIBILITY_RTOL`].
    pub fn satisfied(&self, beta: f64) -> bool {
        self.margin(beta) >= -FEASIBILITY_RTOL * self.signal
    }
}

/// SINR terms for arbitrary `(sender, receiver)` pairs active at once with the
/// given powers. This is the instance-free evaluation used to re-verify reports.
pub fn evaluate_sinr(
    metric: &MetricSpace,
    params: &InstanceParams,
    links: &[(NodeId, NodeId)],
    powers: &[f64],
) -> Result<Vec<SinrTerms>> {
    if links.len() != powers.len() {
        return Err(Error::input(format!("{} links but {} powers", links.len(), powers.len())));
    }
    for &(s, r) in links {
        metric.check_node(s)?;
        metric.check_node(r)?;
    }
    let alpha = params.alpha;
    Ok(links
        .iter()
        .enumerate()
        .map(|(i, &(s, r))| {
            let interference = links
                .iter()
                .zip(powers)
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, (&(s2, _), &p2))| p2 / metric.dist(s2, r).powf(alpha))
                .sum();
            SinrTerms {
                signal: powers[i] / metric.dist(s, r).powf(alpha),
                interference,
                noise: params.noise,
            }
        })
        .collect())
}

fn collect_powers(active: &[usize], powers: &PowerAssignment) -> Result<Vec<f64>> {
    active
        .iter()
        .map(|&i| powers.get(i).ok_or_else(|| Error::input(format!("no power assigned to link {i}"))))
        .collect()
}

/// SINR terms of `target` when all links in `active` transmit.
pub fn sinr_of(instance: &Instance, active: &[usize], powers: &PowerAssignment, target: usize) -> Result<SinrTerms> {
    instance.check_indices(active)?;
    let pos = active
        .iter()
        .position(|&i| i == target)
        .ok_or_else(|| Error::input(format!("link {target} is not in the active set")))?;
    let pairs: Vec<_> = active.iter().map(|&i| (instance.link(i).sender, instance.link(i).receiver)).collect();
    let p = collect_powers(active, powers)?;
    let terms = evaluate_sinr(instance.metric(), instance.params(), &pairs, &p)?;
    Ok(terms[pos])
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub feasible: bool,
    /// Absolute margin `signal - (beta * interference + noise)` per link.
    pub margins: BTreeMap<usize, f64>,
    /// Links whose margin is below `-FEASIBILITY_RTOL * signal`.
    pub violations: Vec<usize>,
}

pub fn check_feasible(instance: &Instance, active: &[usize], powers: &PowerAssignment) -> Result<FeasibilityReport> {
    instance.check_indices(active)?;
    let pairs: Vec<_> = active.iter().map(|&i| (instance.link(i).sender, instance.link(i).receiver)).collect();
    let p = collect_powers(active, powers)?;
    let terms = evaluate_sinr(instance.metric(), instance.params(), &pairs, &p)?;
    let beta = instance.params().beta;
    let mut margins = BTreeMap::new();
    let mut violations = Vec::new();
    for (&link, t) in active.iter().zip(&terms) {
        margins.insert(link, t.margin(beta));
        if !t.satisfied(beta) {
            violations.push(link);
        }
    }
    Ok(FeasibilityReport { feasible: violations.is_empty(), margins, violations })
}

/// Normalized gain matrix `M[a][b] = d(a)^alpha / d(s_b, r_a)^alpha` for `a != b`,
/// zero on the diagonal, rows and columns in the order of `set`.
pub fn gain_matrix(instance: &Instance, set: &[usize]) -> Vec<Vec<f64>> {
    let alpha = instance.params().alpha;
    set.iter()
        .map(|&a| {
            let own = instance.link(a).length.powf(alpha);
            set.iter()
                .map(|&b| if a == b { 0.0 } else { own / instance.cross_gain_distance(b, a) })
                .collect()
        })
        .collect()
}

/// Right-hand side of the power equation `p = beta * M p + c`: `noise * d^alpha`
/// when noise is present, `d^alpha` otherwise.
pub fn power_equation_rhs(instance: &Instance, set: &[usize]) -> Vec<f64> {
    let params = instance.params();
    let scale = if params.noise > 0.0 { params.noise } else { 1.0 };
    set.iter().map(|&i| scale * instance.link(i).length.powf(params.alpha)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Admissibility {
    pub admissible: bool,
    /// Witness powers when admissible.
    pub powers: Option<PowerAssignment>,
    /// Spectral radius of `beta * M`.
    pub spectral_radius: f64,
}

/// Decides whether some positive power assignment makes `set` feasible.
///
/// The set is admissible iff `rho(beta * M) < 1 - SPECTRAL_EPS`; in that case the
/// witness solves `(I - beta * M) p = c` with `c` from [`power_equation_rhs`].
pub fn admissible(instance: &Instance, set: &[usize]) -> Result<Admissibility> {
    if set.is_empty() {
        return Err(Error::input("admissibility of an empty set is undefined"));
    }
    instance.check_indices(set)?;
    let beta = instance.params().beta;
    let scaled: Vec<Vec<f64>> = gain_matrix(instance, set)
        .into_iter()
        .map(|row| row.into_iter().map(|m| beta * m).collect())
        .collect();
    let rho = spectral::spectral_radius(&scaled);
    let rejected = Admissibility { admissible: false, powers: None, spectral_radius: rho };
    if !(rho < 1.0 - SPECTRAL_EPS) {
        return Ok(rejected);
    }

    let n = set.len();
    let system = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 - scaled[i][j] } else { -scaled[i][j] });
    let rhs = DVector::from_vec(power_equation_rhs(instance, set));
    let Some(solution) = system.lu().solve(&rhs) else {
        return Ok(rejected);
    };
    if solution.iter().any(|p| !(*p > 0.0 && p.is_finite())) {
        return Ok(rejected);
    }
    let powers = set.iter().copied().zip(solution.iter().copied()).collect();
    Ok(Admissibility { admissible: true, powers: Some(powers), spectral_radius: rho })
}
