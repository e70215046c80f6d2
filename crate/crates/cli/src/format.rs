//! JSON documents read and written by the `sinr` binary.

use serde::{Deserialize, Serialize};
use sinr_core::{Instance, InstanceParams, MetricSpace, NodeId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MetricFile {
    Euclidean { points: Vec<Vec<f64>> },
    Matrix { distances: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub alpha: f64,
    pub beta: f64,
    pub noise: f64,
    pub metric: MetricFile,
    pub links: Vec<[NodeId; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths: Option<Vec<Vec<NodeId>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<[NodeId; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub commodities: Option<Vec<[NodeId; 2]>>,
}

impl InstanceFile {
    pub fn params(&self) -> InstanceParams {
        InstanceParams { alpha: self.alpha, beta: self.beta, noise: self.noise }
    }

    pub fn metric_space(&self) -> sinr_core::Result<MetricSpace> {
        match &self.metric {
            MetricFile::Euclidean { points } => MetricSpace::euclidean(points.clone()),
            MetricFile::Matrix { distances } => MetricSpace::matrix(distances.clone()),
        }
    }

    pub fn link_pairs(&self) -> Vec<(NodeId, NodeId)> {
        self.links.iter().map(|&[s, r]| (s, r)).collect()
    }

    /// Validates the whole document and builds the instance with `params`.
    pub fn to_instance(&self, params: InstanceParams) -> sinr_core::Result<Instance> {
        let instance = Instance::new(self.metric_space()?, params, &self.link_pairs())?;
        let n = instance.metric().len();
        let check = |v: NodeId| instance.metric().check_node(v);
        for path in self.paths.iter().flatten() {
            path.iter().try_for_each(|&v| check(v))?;
        }
        for &[u, v] in self.edges.iter().flatten().chain(self.commodities.iter().flatten()) {
            check(u)?;
            check(v)?;
        }
        debug_assert!(n == instance.metric().len());
        Ok(instance)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsEcho {
    pub alpha: f64,
    pub beta: f64,
    pub noise: f64,
}

impl From<InstanceParams> for ParamsEcho {
    fn from(p: InstanceParams) -> Self {
        ParamsEcho { alpha: p.alpha, beta: p.beta, noise: p.noise }
    }
}

impl From<ParamsEcho> for InstanceParams {
    fn from(p: ParamsEcho) -> Self {
        InstanceParams { alpha: p.alpha, beta: p.beta, noise: p.noise }
    }
}

/// One transmitting link inside a channel or slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupLink {
    /// Index into the instance links (capacity, schedule) or into the hop list
    /// (multihop, route).
    pub request: usize,
    pub sender: NodeId,
    pub receiver: NodeId,
    pub power: f64,
    /// `signal - (beta * interference + noise)`.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Group {
    pub links: Vec<GroupLink>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stats {
    pub tau: f64,
    /// `W(R)` over the scheduled request set.
    pub max_weight: f64,
    pub requests: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accepted: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slots: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slot_bound: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dilation: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay_bound: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub super_slot_lengths: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lp_objective: Option<f64>,
    /// Wall-clock solve time; only present when requested, as it breaks byte-stability.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportFile {
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    pub params: ParamsEcho,
    /// Channels (capacity) or time slots (all other commands), in order.
    pub groups: Vec<Group>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub discarded: Vec<usize>,
    /// Node sequences served (multihop, route).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths: Option<Vec<Vec<NodeId>>>,
    /// Request index of hop `j` of path `i` (multihop, route).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hop_requests: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delays: Option<Vec<usize>>,
    pub stats: Stats,
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("documents serialize");
    s.push('\n');
    s
}
