//! Dependency graph construction and PageRank.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::registry::{normalize_name, PackageRecord};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DependencyGraph {
    pub nodes: BTreeSet<String>,
    /// Nodes created for dependencies that have no record in the snapshot.
    pub stubs: BTreeSet<String>,
    /// `(dependent, dependency)` pairs.
    pub edges: BTreeSet<(String, String)>,
    pub skipped_dependencies: usize,
    #[serde(default)]
    pub pagerank: BTreeMap<String, f64>,
}

/// Extracts the distribution name from a requirement string, dropping
/// environment markers, extras and version specifiers.
pub fn dependency_name(requirement: &str) -> Option<String> {
    static NAME: OnceLock<Regex> = OnceLock::new();
    let re = NAME.get_or_init(|| {
        Regex::new(r"^\s*([A-Za-z0-9](?:[A-Za-z0-9._-]*[A-Za-z0-9])?)\s*(?:$|[\[\(<>=!~;@ ])")
            .expect("valid regex")
    });
    let spec = requirement.split(';').next().unwrap_or_default();
    re.captures(spec).map(|c| normalize_name(&c[1]))
}

pub fn build_dependency_graph(records: &[PackageRecord]) -> DependencyGraph {
    let mut graph = DependencyGraph::default();
    for record in records.iter().filter(|r| r.is_ok()) {
        graph.nodes.insert(record.name.clone());
    }
    for record in records.iter().filter(|r| r.is_ok()) {
        for requirement in &record.dependencies {
            let Some(dep) = dependency_name(requirement) else {
                log::debug!("{}: cannot parse dependency {requirement:?}", record.name);
                graph.skipped_dependencies += 1;
                continue;
            };
            if dep == record.name {
                continue;
            }
            if !graph.nodes.contains(&dep) {
                graph.stubs.insert(dep.clone());
            }
            graph.edges.insert((record.name.clone(), dep));
        }
    }
    graph.nodes.extend(graph.stubs.iter().cloned());
    graph
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PageRankParams {
    pub damping: f64,
    pub epsilon: f64,
    pub max_iter: usize,
}

impl Default for PageRankParams {
    fn default() -> Self {
        Self {
            damping: 0.85,
            epsilon: 1e-10,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageRankOutcome {
    pub scores: BTreeMap<String, f64>,
    pub iterations: usize,
    pub converged: bool,
    pub final_delta: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum PageRankError {
    #[error("damping must lie in (0, 1), got {0}")]
    Damping(f64),
    #[error("epsilon must be positive, got {0}")]
    Epsilon(f64),
}

/// Power iteration with uniform teleport and uniform redistribution of the
/// mass held by nodes without outgoing edges.
pub fn pagerank(graph: &DependencyGraph, params: PageRankParams) -> Result<PageRankOutcome, PageRankError> {
    if !(params.damping > 0.0 && params.damping < 1.0) {
        return Err(PageRankError::Damping(params.damping));
    }
    if params.epsilon.is_nan() || params.epsilon <= 0.0 {
        return Err(PageRankError::Epsilon(params.epsilon));
    }
    let names: Vec<&String> = graph.nodes.iter().collect();
    let n = names.len();
    if n == 0 {
        return Ok(PageRankOutcome {
            scores: BTreeMap::new(),
            iterations: 0,
            converged: true,
            final_delta: 0.0,
        });
    }
    let index: BTreeMap<&str, usize> = names.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let mut out_degree = vec![0usize; n];
    let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (from, to) in &graph.edges {
        let (Some(&f), Some(&t)) = (index.get(from.as_str()), index.get(to.as_str())) else {
            continue;
        };
        out_degree[f] += 1;
        incoming[t].push(f);
    }

    let nf = n as f64;
    let d = params.damping;
    let mut scores = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    let mut iterations = 0;
    let mut delta = f64::INFINITY;
    while iterations < params.max_iter {
        iterations += 1;
        let dangling: f64 = (0..n).filter(|&i| out_degree[i] == 0).map(|i| scores[i]).sum();
        let base = (1.0 - d) / nf + d * dangling / nf;
        for v in 0..n {
            let inflow: f64 = incoming[v].iter().map(|&u| scores[u] / out_degree[u] as f64).sum();
            next[v] = base + d * inflow;
        }
        delta = scores.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut scores, &mut next);
        if delta < params.epsilon {
            break;
        }
    }
    let total: f64 = scores.iter().sum();
    let scores = names
        .into_iter()
        .zip(scores)
        .map(|(name, s)| (name.clone(), s / total))
        .collect();
    Ok(PageRankOutcome {
        scores,
        iterations,
        converged: delta < params.epsilon,
        final_delta: delta,
    })
}

/// Names sorted by descending score, ties broken by name.
pub fn ranking(scores: &BTreeMap<String, f64>) -> Vec<(&str, f64)> {
    let mut ranked: Vec<(&str, f64)> = scores.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked
}
