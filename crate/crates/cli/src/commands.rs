//! The solving commands and report verification, independent of argument parsing.

use std::collections::{BTreeSet, HashSet};

use sinr_core::capacity::maximize_capacity_with_tau;
use sinr_core::routing::{solve_clm, RoutingProblem};
use sinr_core::scheduling::{schedule_multi_hop, slot_bound};
use sinr_core::{
    evaluate_sinr, schedule_single_hop, tau, Instance, InstanceParams, MultiHopRequest, MultiHopSchedule,
    PowerAssignment, WeightGraph, FEASIBILITY_RTOL,
};

use crate::error::{CliError, CliResult};
use crate::format::{Group, GroupLink, InstanceFile, ParamsEcho, ReportFile, Stats};

/// Parameter overrides applied on top of the instance file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub noise: Option<f64>,
    pub tau: Option<f64>,
}

impl Overrides {
    pub fn params(&self, doc: &InstanceFile) -> InstanceParams {
        InstanceParams {
            alpha: self.alpha.unwrap_or(doc.alpha),
            beta: self.beta.unwrap_or(doc.beta),
            noise: self.noise.unwrap_or(doc.noise),
        }
    }

    fn tau(&self, params: &InstanceParams) -> f64 {
        self.tau.unwrap_or_else(|| tau(params))
    }
}

fn load(doc: &InstanceFile, overrides: &Overrides) -> CliResult<Instance> {
    Ok(doc.to_instance(overrides.params(doc))?)
}

/// Builds a report group; margins are evaluated over exactly the listed links.
fn group(instance: &Instance, requests: &[usize], powers: &PowerAssignment) -> CliResult<Group> {
    let pairs: Vec<_> = requests.iter().map(|&i| (instance.link(i).sender, instance.link(i).receiver)).collect();
    let p: Vec<f64> = requests
        .iter()
        .map(|&i| powers.get(i).ok_or_else(|| sinr_core::Error::Internal(format!("link {i} has no power"))))
        .collect::<Result<_, _>>()?;
    let terms = evaluate_sinr(instance.metric(), instance.params(), &pairs, &p)?;
    let links = requests
        .iter()
        .zip(&pairs)
        .zip(p.iter().zip(&terms))
        .map(|((&request, &(sender, receiver)), (&power, t))| GroupLink {
            request,
            sender,
            receiver,
            power,
            margin: t.margin(instance.params().beta),
        })
        .collect();
    Ok(Group { links })
}

fn all_requests(instance: &Instance) -> Vec<usize> {
    (0..instance.len()).collect()
}

pub fn capacity(doc: &InstanceFile, k: usize, overrides: &Overrides) -> CliResult<ReportFile> {
    let instance = load(doc, overrides)?;
    let tau = overrides.tau(instance.params());
    let outcome = maximize_capacity_with_tau(&instance, k, tau)?;
    let assignment = &outcome.assignment;
    let groups = assignment
        .channels
        .iter()
        .zip(&assignment.powers)
        .map(|(channel, powers)| group(&instance, channel, powers))
        .collect::<CliResult<_>>()?;
    let max_weight = WeightGraph::new(&instance).max_weight(&all_requests(&instance));
    Ok(ReportFile {
        command: "capacity".into(),
        seed: None,
        k: Some(k),
        params: (*instance.params()).into(),
        groups,
        discarded: assignment.discarded.clone(),
        paths: None,
        hop_requests: None,
        delays: None,
        stats: Stats {
            tau,
            max_weight,
            requests: instance.len(),
            accepted: Some(assignment.accepted()),
            ..Stats::default()
        },
    })
}

pub fn schedule(doc: &InstanceFile, overrides: &Overrides) -> CliResult<ReportFile> {
    let instance = load(doc, overrides)?;
    let tau = overrides.tau(instance.params());
    let schedule = schedule_single_hop(&instance, tau)?;
    let groups = schedule.slots.iter().map(|s| group(&instance, &s.links, &s.powers)).collect::<CliResult<_>>()?;
    let max_weight = WeightGraph::new(&instance).max_weight(&all_requests(&instance));
    Ok(ReportFile {
        command: "schedule".into(),
        seed: None,
        k: None,
        params: (*instance.params()).into(),
        groups,
        discarded: Vec::new(),
        paths: None,
        hop_requests: None,
        delays: None,
        stats: Stats {
            tau,
            max_weight,
            requests: instance.len(),
            slots: Some(schedule.len()),
            slot_bound: Some(slot_bound(max_weight, tau, instance.len())),
            ..Stats::default()
        },
    })
}

fn multi_hop_report(
    command: &str,
    seed: u64,
    tau: f64,
    paths: Vec<Vec<usize>>,
    schedule: &MultiHopSchedule,
    lp_objective: Option<f64>,
) -> CliResult<ReportFile> {
    let hops = &schedule.hop_instance;
    let groups = schedule.slots.iter().map(|s| group(hops, &s.links, &s.powers)).collect::<CliResult<_>>()?;
    let dilation = paths.iter().map(|p| p.len() - 1).max().unwrap_or(0);
    Ok(ReportFile {
        command: command.into(),
        seed: Some(seed),
        k: None,
        params: (*hops.params()).into(),
        groups,
        discarded: Vec::new(),
        paths: Some(paths),
        hop_requests: Some(schedule.hop_index.clone()),
        delays: Some(schedule.delays.clone()),
        stats: Stats {
            tau,
            max_weight: schedule.max_weight,
            requests: hops.len(),
            slots: Some(schedule.len()),
            dilation: Some(dilation),
            delay_bound: Some(schedule.delay_bound),
            super_slot_lengths: Some(schedule.super_slot_lengths.clone()),
            lp_objective,
            ..Stats::default()
        },
    })
}

pub fn multihop(doc: &InstanceFile, seed: u64, overrides: &Overrides) -> CliResult<ReportFile> {
    let paths = doc.paths.clone().ok_or_else(|| CliError::Input("instance has no \"paths\"".into()))?;
    let instance = load(doc, overrides)?;
    let tau = overrides.tau(instance.params());
    let request = MultiHopRequest::new(paths.clone())?;
    let schedule = schedule_multi_hop(&instance, &request, seed, tau)?;
    multi_hop_report("multihop", seed, tau, paths, &schedule, None)
}

pub fn route(doc: &InstanceFile, seed: u64, overrides: &Overrides) -> CliResult<ReportFile> {
    let (Some(edges), Some(commodities)) = (&doc.edges, &doc.commodities) else {
        return Err(CliError::Input("instance needs both \"edges\" and \"commodities\"".into()));
    };
    let instance = load(doc, overrides)?;
    let tau = overrides.tau(instance.params());
    let problem = RoutingProblem::new(
        instance.metric().len(),
        edges.iter().map(|&[u, v]| (u, v)).collect(),
        commodities.iter().map(|&[s, t]| (s, t)).collect(),
    )?;
    let outcome = solve_clm(&instance, &problem, seed, tau)?;
    multi_hop_report("route", seed, tau, outcome.paths, &outcome.schedule, Some(outcome.flow.z))
}

/// Re-checks a report against its instance from scratch. Returns one message per
/// problem found; an empty list means the report is valid.
pub fn verify(doc: &InstanceFile, report: &ReportFile) -> CliResult<Vec<String>> {
    let params: InstanceParams = report.params.into();
    let instance = doc.to_instance(params)?;
    let metric = instance.metric();
    let mut problems = Vec::new();

    for (g, grp) in report.groups.iter().enumerate() {
        let mut pairs = Vec::with_capacity(grp.links.len());
        let mut powers = Vec::with_capacity(grp.links.len());
        for l in &grp.links {
            if metric.check_node(l.sender).is_err() || metric.check_node(l.receiver).is_err() || l.sender == l.receiver {
                problems.push(format!("group {g}: request {} has invalid endpoints", l.request));
            } else if !(l.power.is_finite() && l.power > 0.0) {
                problems.push(format!("group {g}: request {} has invalid power {}", l.request, l.power));
            } else {
                pairs.push((l.sender, l.receiver));
                powers.push(l.power);
                continue;
            }
            pairs.clear();
            break;
        }
        if pairs.len() != grp.links.len() {
            continue;
        }
        let terms = evaluate_sinr(metric, &params, &pairs, &powers)?;
        for (l, t) in grp.links.iter().zip(&terms) {
            let margin = t.margin(params.beta);
            if !t.satisfied(params.beta) {
                problems.push(format!("group {g}: request {} violates SINR (margin {margin:e})", l.request));
            }
            if (margin - l.margin).abs() > FEASIBILITY_RTOL * t.signal.max(l.margin.abs()) {
                problems.push(format!(
                    "group {g}: request {} reports margin {:e}, recomputed {margin:e}",
                    l.request, l.margin
                ));
            }
        }
    }

    match report.command.as_str() {
        "capacity" => check_partition(&instance, report, false, &mut problems),
        "schedule" => check_partition(&instance, report, true, &mut problems),
        "multihop" | "route" => check_paths(doc, report, &mut problems),
        other => problems.push(format!("unknown report command {other:?}")),
    }
    Ok(problems)
}

/// Each instance link must appear at most once across groups and discards, with
/// matching endpoints; a schedule must serve every link.
fn check_partition(instance: &Instance, report: &ReportFile, complete: bool, problems: &mut Vec<String>) {
    if let Some(k) = report.k {
        if report.groups.len() > k {
            problems.push(format!("{} channels used but k = {k}", report.groups.len()));
        }
    }
    let mut seen = BTreeSet::new();
    for l in report.groups.iter().flat_map(|g| &g.links) {
        if l.request >= instance.len() {
            problems.push(format!("request {} does not exist", l.request));
            continue;
        }
        let link = instance.link(l.request);
        if (link.sender, link.receiver) != (l.sender, l.receiver) {
            problems.push(format!("request {} endpoints do not match the instance", l.request));
        }
        if !seen.insert(l.request) {
            problems.push(format!("request {} appears more than once", l.request));
        }
    }
    for &d in &report.discarded {
        if d >= instance.len() || !seen.insert(d) {
            problems.push(format!("discarded request {d} is unknown or also scheduled"));
        }
    }
    let missing: Vec<usize> = (0..instance.len()).filter(|i| !seen.contains(i)).collect();
    if !missing.is_empty() {
        problems.push(format!("requests never accounted for: {missing:?}"));
    }
    if complete && !report.discarded.is_empty() {
        problems.push("a schedule cannot discard requests".into());
    }
}

/// Hops must be served once each, in path order, along the paths the instance allows.
fn check_paths(doc: &InstanceFile, report: &ReportFile, problems: &mut Vec<String>) {
    let (Some(paths), Some(hop_requests)) = (&report.paths, &report.hop_requests) else {
        problems.push("report lacks paths or hop_requests".into());
        return;
    };
    if paths.len() != hop_requests.len() {
        problems.push("paths and hop_requests differ in length".into());
        return;
    }
    if report.command == "multihop" && doc.paths.as_ref() != Some(paths) {
        problems.push("paths differ from the instance paths".into());
    }
    if report.command == "route" {
        let edges: HashSet<[usize; 2]> = doc.edges.iter().flatten().copied().collect();
        let commodities = doc.commodities.as_deref().unwrap_or_default();
        if commodities.len() != paths.len() {
            problems.push("one path per commodity expected".into());
        }
        for (i, (path, c)) in paths.iter().zip(commodities).enumerate() {
            if path.first() != Some(&c[0]) || path.last() != Some(&c[1]) {
                problems.push(format!("path {i} does not connect its commodity"));
            }
            if path.windows(2).any(|w| !edges.contains(&[w[0], w[1]])) {
                problems.push(format!("path {i} uses a missing edge"));
            }
        }
    }

    let mut slot_of = std::collections::HashMap::new();
    for (g, grp) in report.groups.iter().enumerate() {
        for l in &grp.links {
            if slot_of.insert(l.request, (g, l.sender, l.receiver)).is_some() {
                problems.push(format!("hop request {} served more than once", l.request));
            }
        }
    }
    let hop_total: usize = hop_requests.iter().map(Vec::len).sum();
    if slot_of.len() != hop_total {
        problems.push(format!("{} hops served but {hop_total} expected", slot_of.len()));
    }
    for (i, (path, hops)) in paths.iter().zip(hop_requests).enumerate() {
        if path.len() != hops.len() + 1 {
            problems.push(format!("path {i}: hop count does not match its length"));
            continue;
        }
        let mut previous = None;
        for (j, &h) in hops.iter().enumerate() {
            let Some(&(slot, s, r)) = slot_of.get(&h) else {
                problems.push(format!("path {i}: hop {j} is never served"));
                continue;
            };
            if (s, r) != (path[j], path[j + 1]) {
                problems.push(format!("path {i}: hop {j} has the wrong endpoints"));
            }
            if previous.is_some_and(|p| p >= slot) {
                problems.push(format!("path {i}: hop {j} is served before its predecessor"));
            }
            previous = Some(slot);
        }
    }
}

/// Human-readable summary of a report.
pub fn render_text(report: &ReportFile) -> String {
    let mut out = String::new();
    let ParamsEcho { alpha, beta, noise } = report.params;
    out.push_str(&format!("{}: alpha={alpha} beta={beta} noise={noise}\n", report.command));
    let s = &report.stats;
    out.push_str(&format!("requests={} tau={:e} W(R)={:.6}\n", s.requests, s.tau, s.max_weight));
    if let Some(a) = s.accepted {
        out.push_str(&format!("accepted={a} discarded={}\n", report.discarded.len()));
    }
    if let Some(t) = s.slots {
        out.push_str(&format!("slots={t}"));
        if let Some(b) = s.slot_bound {
            out.push_str(&format!(" bound={b}"));
        }
        out.push('\n');
    }
    if let (Some(d), Some(k)) = (s.dilation, s.delay_bound) {
        out.push_str(&format!("dilation={d} delay_bound={k}\n"));
    }
    if let Some(z) = s.lp_objective {
        out.push_str(&format!("lp_objective={z:.6}\n"));
    }
    let label = if report.command == "capacity" { "channel" } else { "slot" };
    for (g, grp) in report.groups.iter().enumerate() {
        let ids: Vec<String> = grp.links.iter().map(|l| l.request.to_string()).collect();
        out.push_str(&format!("{label} {g}: {}\n", ids.join(" ")));
    }
    out
}
