//! End-to-end orchestration: solve a horizon, group it into bases, run
//! merger strategies, and write the artifact files.

use crate::aggregation::{
    check_exactness, group_bases, solve_aggregated, AggregatedSolution, BasisSet, ExactnessReport,
    LpTemplate,
};
use crate::error::Error;
use crate::lp::{extract_active_set, solve_lp, LpStatus, TOL_ACTIVE};
use crate::merging::{solve_merged, verify_hosts, ComEvaluator, Partition};
use crate::metrics::{
    describe_basis, emit_tables, error_generator, error_ov, production_by_generator,
    render_bases_table_csv, BasisDescriptor, ErrorReport,
};
use crate::strategies::{
    detect_adjacency, exhaustive_strategy, greedy_adjacent_strategy, greedy_strategy,
    AdjacencyList, AdjacencyMode, StrategyKind, StrategyTrace,
};
use crate::transport::{NetworkModel, TimestepData};
use crate::Result;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

/// Everything the downstream stages need from one solved horizon.
pub struct Analysis {
    pub net: NetworkModel,
    pub template: LpTemplate,
    pub steps: Vec<TimestepData>,
    pub rhs_by_t: Vec<Vec<f64>>,
    pub full_objectives: Vec<f64>,
    pub full_objective: f64,
    pub bases: BasisSet,
    pub aggregated: AggregatedSolution,
    pub exactness: ExactnessReport,
    pub descriptors: Vec<BasisDescriptor>,
}

/// Solve every time step, group by active set, solve the aggregation, and
/// audit exactness. Infeasible or unbounded time steps abort with the
/// offending 1-based `t`.
pub fn analyze(net: NetworkModel, steps: Vec<TimestepData>) -> Result<Analysis> {
    net.validate()?;
    let (cost, matrix, row_kinds) = net.lp_structure();
    let template = LpTemplate {
        cost,
        matrix,
        row_kinds,
    };

    let mut per_timestep = Vec::with_capacity(steps.len());
    let mut full_objectives = Vec::with_capacity(steps.len());
    let mut rhs_by_t = Vec::with_capacity(steps.len());
    for (t, data) in steps.iter().enumerate() {
        let rhs = net.rhs_for(data)?;
        let lp = template.instantiate(rhs.clone());
        let sol = solve_lp(&lp)?;
        match &sol.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible { farkas_row } => {
                return Err(Error::InfeasibleTimestep {
                    t: t + 1,
                    farkas_row: *farkas_row,
                })
            }
            LpStatus::Unbounded { .. } => return Err(Error::UnboundedTimestep { t: t + 1 }),
        }
        let active = extract_active_set(&lp, &sol, TOL_ACTIVE)?;
        full_objectives.push(sol.objective);
        rhs_by_t.push(rhs.clone());
        per_timestep.push((rhs, sol, active));
    }

    let mut bases = group_bases(&template, &per_timestep)?;
    drop(per_timestep);
    let aggregated = solve_aggregated(&mut bases)?;
    let exactness = check_exactness(&full_objectives, &bases, &aggregated, 1e-9)?;
    let descriptors = bases
        .groups
        .iter()
        .map(|g| describe_basis(g, &net))
        .collect();

    Ok(Analysis {
        net,
        template,
        steps,
        rhs_by_t,
        full_objective: full_objectives.iter().sum(),
        full_objectives,
        bases,
        aggregated,
        exactness,
        descriptors,
    })
}

// ---------------------------------------------------------------------------
// artifact files
// ---------------------------------------------------------------------------

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

#[derive(Serialize)]
struct SolvesFile<'a> {
    schema_version: u32,
    horizon: usize,
    total_objective: f64,
    objectives: &'a [f64],
}

/// `solves.json`: per-time-step objectives of the full model.
pub fn write_solves(dir: &Path, analysis: &Analysis) -> Result<()> {
    write_json(
        &dir.join("solves.json"),
        &SolvesFile {
            schema_version: SCHEMA_VERSION,
            horizon: analysis.steps.len(),
            total_objective: analysis.full_objective,
            objectives: &analysis.full_objectives,
        },
    )
}

#[derive(Serialize)]
struct BasisEntry<'a> {
    basis_id: usize,
    active_rows: &'a [usize],
    weight: usize,
    centroid: &'a [f64],
    /// `[start, len]` runs of 1-based member time steps
    members_rle: Vec<[usize; 2]>,
    degenerate: bool,
    descriptor: &'a BasisDescriptor,
}

#[derive(Serialize)]
struct BasesFile<'a> {
    schema_version: u32,
    horizon: usize,
    n_bases: usize,
    warnings: &'a [String],
    exactness: &'a ExactnessReport,
    bases: Vec<BasisEntry<'a>>,
}

fn run_length_encode(members: &[usize]) -> Vec<[usize; 2]> {
    let mut runs = Vec::new();
    let mut iter = members.iter().copied();
    let Some(first) = iter.next() else {
        return runs;
    };
    let mut start = first;
    let mut len = 1;
    let mut prev = first;
    for m in iter {
        if m == prev + 1 {
            len += 1;
        } else {
            runs.push([start + 1, len]);
            start = m;
            len = 1;
        }
        prev = m;
    }
    runs.push([start + 1, len]);
    runs
}

/// `bases.json`, `bases_table.csv`, `exactness.json`, and `points.csv`.
pub fn write_bases_artifacts(dir: &Path, analysis: &Analysis) -> Result<()> {
    let bs = &analysis.bases;
    let entries: Vec<BasisEntry> = bs
        .groups
        .iter()
        .zip(&analysis.descriptors)
        .map(|(g, d)| BasisEntry {
            basis_id: g.id + 1,
            active_rows: &g.active_set.indices,
            weight: g.weight,
            centroid: &g.centroid,
            members_rle: run_length_encode(&g.members),
            degenerate: g.degenerate,
            descriptor: d,
        })
        .collect();
    write_json(
        &dir.join("bases.json"),
        &BasesFile {
            schema_version: SCHEMA_VERSION,
            horizon: bs.horizon,
            n_bases: bs.n_bases(),
            warnings: &bs.warnings,
            exactness: &analysis.exactness,
            bases: entries,
        },
    )?;
    #[derive(Serialize)]
    struct ExactnessFile<'a> {
        schema_version: u32,
        #[serde(flatten)]
        report: &'a ExactnessReport,
    }
    write_json(
        &dir.join("exactness.json"),
        &ExactnessFile {
            schema_version: SCHEMA_VERSION,
            report: &analysis.exactness,
        },
    )?;
    write_text(
        &dir.join("bases_table.csv"),
        &render_bases_table_csv(bs, &analysis.descriptors),
    )?;
    write_text(&dir.join("points.csv"), &points_csv(analysis))
}

/// Tidy per-point table for external plotting: inputs plus basis membership.
fn points_csv(analysis: &Analysis) -> String {
    let net = &analysis.net;
    let cf_gens: Vec<&str> = net
        .generators
        .iter()
        .filter(|g| g.uses_cf_series)
        .map(|g| g.id.as_str())
        .collect();
    let mut basis_of = vec![0usize; analysis.steps.len()];
    for g in &analysis.bases.groups {
        for &t in &g.members {
            basis_of[t] = g.id;
        }
    }
    let mut out = String::from("t");
    for n in &net.nodes {
        out.push_str(&format!(",D_{n}"));
    }
    for g in &cf_gens {
        out.push_str(&format!(",CF_{g}"));
    }
    out.push_str(",basis\n");
    for (t, step) in analysis.steps.iter().enumerate() {
        out.push_str(&format!("{}", t + 1));
        for n in &net.nodes {
            out.push_str(&format!(",{}", step.demand.get(n).copied().unwrap_or(0.0)));
        }
        for g in &cf_gens {
            out.push_str(&format!(
                ",{}",
                step.capacity_factor.get(*g).copied().unwrap_or(1.0)
            ));
        }
        out.push_str(&format!(",{}\n", basis_of[t] + 1));
    }
    out
}

// ---------------------------------------------------------------------------
// strategies over an analysis
// ---------------------------------------------------------------------------

/// Where the adjacency list for the greedy-adjacent strategy comes from.
#[derive(Clone, Debug)]
pub enum AdjacencySource {
    Detect(AdjacencyMode),
    File(std::path::PathBuf),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdjacencyInfo {
    pub source: String,
    /// contact distance used by input-space detection
    pub delta: Option<f64>,
    /// 1-based basis pairs
    pub pairs: Vec<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
struct AdjacencyFile {
    schema_version: u32,
    /// 1-based basis pairs
    pairs: Vec<(usize, usize)>,
}

pub fn load_adjacency(path: &Path, n_bases: usize) -> Result<AdjacencyList> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let file: AdjacencyFile = serde_json::from_str(&text)
        .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
    let mut list = AdjacencyList::new();
    for (a, b) in file.pairs {
        if a == 0 || b == 0 || a > n_bases || b > n_bases {
            return Err(Error::parse(
                path.display().to_string(),
                format!("pair ({a}, {b}) outside 1..={n_bases}"),
            ));
        }
        list.insert(a - 1, b - 1);
    }
    Ok(list)
}

/// Resolve an adjacency list for `analysis` from a file or by detection.
pub fn resolve_adjacency(
    analysis: &Analysis,
    source: &AdjacencySource,
) -> Result<(AdjacencyList, AdjacencyInfo)> {
    let (list, source_name, delta) = match source {
        AdjacencySource::File(path) => {
            let list = load_adjacency(path, analysis.bases.n_bases())?;
            (list, format!("file:{}", path.display()), None)
        }
        AdjacencySource::Detect(mode) => {
            let (list, delta) = detect_adjacency(&analysis.bases, &analysis.rhs_by_t, *mode);
            let name = match mode {
                AdjacencyMode::InputSpace => "input-space",
                AdjacencyMode::ActiveSet => "active-set",
            };
            (list, name.to_string(), delta)
        }
    };
    let info = AdjacencyInfo {
        source: source_name,
        delta,
        pairs: list.iter().map(|(a, b)| (a + 1, b + 1)).collect(),
    };
    Ok((list, info))
}

/// Run one strategy over an analysis.
pub fn run_strategy(
    analysis: &Analysis,
    kind: StrategyKind,
    target_k: usize,
    exhaustive_cap: usize,
    adjacency: Option<&AdjacencyList>,
) -> Result<StrategyTrace> {
    match kind {
        StrategyKind::Exhaustive => exhaustive_strategy(&analysis.bases, exhaustive_cap, target_k),
        StrategyKind::Greedy => greedy_strategy(&analysis.bases, target_k),
        StrategyKind::GreedyAdjacent => {
            let adj = adjacency.ok_or_else(|| {
                Error::Contract("greedy-adjacent requires an adjacency list".into())
            })?;
            greedy_adjacent_strategy(&analysis.bases, adj, target_k)
        }
    }
}

#[derive(Serialize)]
struct TraceLevelOut<'a> {
    k: usize,
    partition: String,
    com: f64,
    eps_ov: f64,
    evaluated: u64,
    adjacency_fallback: bool,
    clusters: Vec<ClusterOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    verification: Option<&'a LevelVerification>,
}

#[derive(Serialize)]
struct ClusterOut {
    bases: Vec<usize>,
    weight: usize,
    host: Option<usize>,
    host_com: Option<f64>,
    host_tied: Option<bool>,
}

/// One cluster's host audit with 1-based basis ids, as written to files.
#[derive(Clone, Debug, Serialize)]
pub struct HostAuditOut {
    pub cluster: Vec<usize>,
    pub analytic_host: usize,
    pub solved_host: Option<usize>,
    pub agrees: bool,
}

/// Residuals recorded when `--verify-hosts` re-solves merged problems.
#[derive(Clone, Debug, Serialize)]
pub struct LevelVerification {
    pub resolved_objective: f64,
    pub analytic_com: f64,
    pub resolved_com: f64,
    /// `|analytic - resolved| / max(1, |ov_identity|)`
    pub com_gap_rel: f64,
    pub host_audits: Vec<HostAuditOut>,
    pub host_violations: usize,
}

#[derive(Serialize)]
struct MergersFile<'a> {
    schema_version: u32,
    strategy: StrategyKind,
    ov_identity: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    adjacency: Option<&'a AdjacencyInfo>,
    levels: Vec<TraceLevelOut<'a>>,
}

#[derive(Serialize)]
struct TraceFile {
    schema_version: u32,
    strategy: StrategyKind,
    levels: Vec<TraceLevelLite>,
}

#[derive(Serialize)]
struct TraceLevelLite {
    k: usize,
    partition: String,
    com: f64,
    evaluated: u64,
    adjacency_fallback: bool,
}

/// Re-solve every level of a trace and audit hosts against the analytics.
pub fn verify_trace(analysis: &Analysis, trace: &StrategyTrace) -> Result<Vec<LevelVerification>> {
    let eval = ComEvaluator::new(&analysis.bases);
    let mut out = Vec::with_capacity(trace.levels.len());
    for level in &trace.levels {
        let mut partition = level.partition.clone();
        let evaluation = eval.evaluate(&mut partition);
        let resolved = solve_merged(&partition, &analysis.bases)?;
        let resolved_com = evaluation.ov_identity - resolved.objective;
        let audits: Vec<HostAuditOut> = verify_hosts(&mut partition, &analysis.bases)?
            .into_iter()
            .map(|a| HostAuditOut {
                cluster: a.cluster.iter().map(|i| i + 1).collect(),
                analytic_host: a.analytic_host + 1,
                solved_host: a.solved_host.map(|h| h + 1),
                agrees: a.agrees,
            })
            .collect();
        let host_violations = audits.iter().filter(|a| !a.agrees).count();
        out.push(LevelVerification {
            resolved_objective: resolved.objective,
            analytic_com: evaluation.com,
            resolved_com,
            com_gap_rel: (evaluation.com - resolved_com).abs()
                / evaluation.ov_identity.abs().max(1.0),
            host_audits: audits,
            host_violations,
        });
    }
    Ok(out)
}

/// `strategy_trace.json` and `mergers.json` (the latter with host detail and
/// optional verification residuals).
pub fn write_merge_artifacts(
    dir: &Path,
    analysis: &Analysis,
    trace: &StrategyTrace,
    adjacency: Option<&AdjacencyInfo>,
    verifications: Option<&[LevelVerification]>,
) -> Result<()> {
    let eval = ComEvaluator::new(&analysis.bases);
    write_json(
        &dir.join("strategy_trace.json"),
        &TraceFile {
            schema_version: SCHEMA_VERSION,
            strategy: trace.strategy,
            levels: trace
                .levels
                .iter()
                .map(|l| TraceLevelLite {
                    k: l.k,
                    partition: l.partition.display_one_based(),
                    com: l.com,
                    evaluated: l.evaluated,
                    adjacency_fallback: l.adjacency_fallback,
                })
                .collect(),
        },
    )?;

    let levels: Vec<TraceLevelOut> = trace
        .levels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let mut partition = l.partition.clone();
            eval.evaluate(&mut partition);
            TraceLevelOut {
                k: l.k,
                partition: partition.display_one_based(),
                com: l.com,
                eps_ov: l.com / eval.ov_identity(),
                evaluated: l.evaluated,
                adjacency_fallback: l.adjacency_fallback,
                clusters: partition
                    .clusters
                    .iter()
                    .map(|c| ClusterOut {
                        bases: c.basis_ids.iter().map(|i| i + 1).collect(),
                        weight: c.weight,
                        host: c.host.map(|h| h.basis + 1),
                        host_com: c.host.map(|h| h.com),
                        host_tied: c.host.map(|h| h.tied),
                    })
                    .collect(),
                verification: verifications.and_then(|v| v.get(i)),
            }
        })
        .collect();
    write_json(
        &dir.join("mergers.json"),
        &MergersFile {
            schema_version: SCHEMA_VERSION,
            strategy: trace.strategy,
            ov_identity: eval.ov_identity(),
            adjacency,
            levels,
        },
    )
}

/// Per-level error reports for a trace, re-solving each merged problem for
/// the production-side errors.
pub fn trace_error_reports(analysis: &Analysis, trace: &StrategyTrace) -> Result<Vec<ErrorReport>> {
    let net = &analysis.net;
    let bs = &analysis.bases;
    let eval = ComEvaluator::new(bs);

    let identity = Partition::identity(bs);
    let identity_weights: Vec<usize> = identity.clusters.iter().map(|c| c.weight).collect();
    let identity_primals: Vec<&[f64]> = analysis
        .aggregated
        .per_basis
        .iter()
        .map(|b| b.primal.as_slice())
        .collect();
    let prod_identity = production_by_generator(net, &identity_weights, &identity_primals);

    let per_basis_ovs: Vec<f64> = analysis
        .aggregated
        .per_basis
        .iter()
        .map(|b| b.objective)
        .collect();

    let mut reports = Vec::with_capacity(trace.levels.len());
    for level in &trace.levels {
        let mut partition = level.partition.clone();
        let evaluation = eval.evaluate(&mut partition);
        let resolved = solve_merged(&partition, bs)?;
        let weights: Vec<usize> = partition.clusters.iter().map(|c| c.weight).collect();
        let primals: Vec<&[f64]> = resolved
            .per_cluster
            .iter()
            .map(|s| s.primal.as_slice())
            .collect();
        let prod_merged = production_by_generator(net, &weights, &primals);

        let eps_ov = error_ov(&per_basis_ovs, &evaluation.per_cluster_ov)?;
        let eps_gen = net
            .generators
            .iter()
            .enumerate()
            .map(|(g, gen)| {
                (
                    gen.id.clone(),
                    error_generator(&prod_identity[g], &prod_merged[g]),
                )
            })
            .collect();
        reports.push(ErrorReport {
            k: level.k,
            partition: partition.display_one_based(),
            eps_ov,
            eps_gen,
            com_abs: evaluation.com.abs(),
            ov_identity: evaluation.ov_identity,
            ov_merged: evaluation.ov_merged,
        });
    }
    Ok(reports)
}

/// `counts.csv` and `optimal_mergers.csv` for a set of traces; the merger
/// table is rendered from `table_trace`.
pub fn write_report_artifacts(
    dir: &Path,
    analysis: &Analysis,
    traces: &[&StrategyTrace],
    table_trace: &StrategyTrace,
) -> Result<()> {
    let reports = trace_error_reports(analysis, table_trace)?;
    let gen_ids: Vec<String> = analysis
        .net
        .generators
        .iter()
        .map(|g| g.id.clone())
        .collect();
    emit_tables(dir, &gen_ids, &reports, traces)
}
