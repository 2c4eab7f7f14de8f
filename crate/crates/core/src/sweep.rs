//! Simulation sweeps over environment complexity, kernels and learning rates.
//!
//! A sweep generates `envs_per_cell` environments for every
//! `(feature types, instances per type)` cell, runs the simulated-user
//! learning loop for every kernel and learning rate on each of them, and
//! reduces the per-run normalized costs to medians per iteration. For each
//! cell and kernel the reported curve uses the learning rate with the
//! lowest final-iteration median.
//!
//! Runs execute in parallel on the rayon pool that is current when
//! [`run_sweep`] is called; results are collected in
//! `(F, M, kernel, beta, seed)` order so outputs do not depend on scheduling.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deform::deformation_profile;
use crate::env::{generate_scenario, GenConfig, Scenario};
use crate::error::{Error, Result};
use crate::io::{fmt_f64, to_json_string};
use crate::kernel::{make_kernel, KernelKind};
use crate::learner::{run_loop, LearningContext, TraceRecord};
use crate::planner::{plan, PlannerConfig};
use crate::sim_user::{SimUserConfig, SimulatedUser, Strategy};

pub const DEFAULT_BETA_GRID: [f64; 7] = [0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0];

/// A kernel to evaluate, optionally with its own learning-rate grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelEntry {
    #[serde(flatten)]
    pub kind: KernelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub betas: Option<Vec<f64>>,
}

impl From<KernelKind> for KernelEntry {
    fn from(kind: KernelKind) -> Self {
        Self { kind, betas: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSpec {
    pub feature_counts: Vec<usize>,
    pub instance_counts: Vec<usize>,
    pub envs_per_cell: usize,
    pub kernels: Vec<KernelEntry>,
    /// Learning-rate grid for kernels without their own.
    pub betas: Vec<f64>,
    #[serde(alias = "N")]
    pub iterations: usize,
    pub base_seed: u64,
    pub strategy: Strategy,
    pub noise: f64,
    pub generation: GenConfig,
    /// Also keep the full per-iteration records of every run.
    pub emit_traces: bool,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            feature_counts: vec![1, 2, 5],
            instance_counts: vec![1, 2, 5],
            envs_per_cell: 25,
            kernels: vec![
                KernelKind::Identity.into(),
                KernelKind::Velocity.into(),
                KernelKind::Rbf { sigma: 1.0 }.into(),
                KernelKind::Rbf { sigma: 5.0 }.into(),
            ],
            betas: DEFAULT_BETA_GRID.to_vec(),
            iterations: 20,
            base_seed: 0,
            strategy: Strategy::Largest,
            noise: 0.0,
            generation: GenConfig::default(),
            emit_traces: false,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: &str| {
            Err(Error::InvalidParameter {
                name,
                reason: reason.to_string(),
            })
        };
        if self.feature_counts.is_empty() || self.feature_counts.contains(&0) {
            return bad("feature_counts", "need at least one positive entry");
        }
        if self.instance_counts.is_empty() || self.instance_counts.contains(&0) {
            return bad("instance_counts", "need at least one positive entry");
        }
        if self.envs_per_cell == 0 {
            return bad("envs_per_cell", "must be at least 1");
        }
        if self.kernels.is_empty() {
            return bad("kernels", "need at least one kernel");
        }
        if self.iterations == 0 {
            return bad("iterations", "must be at least 1");
        }
        for k in &self.kernels {
            let grid = self.grid_for(k);
            if grid.is_empty() {
                return bad("betas", "learning-rate grid is empty");
            }
            if grid.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
                return bad("betas", "learning rates must be positive");
            }
        }
        self.generation.planner.validate()
    }

    pub fn grid_for<'a>(&'a self, entry: &'a KernelEntry) -> &'a [f64] {
        entry.betas.as_deref().unwrap_or(&self.betas)
    }

    pub fn planner(&self) -> &PlannerConfig {
        &self.generation.planner
    }

    pub fn env_seed(&self, index: usize) -> u64 {
        self.base_seed.wrapping_add(index as u64)
    }

    fn sim_user(&self, seed: u64) -> SimUserConfig {
        SimUserConfig {
            strategy: self.strategy,
            seed,
            noise: self.noise,
        }
    }
}

/// Normalized cost per iteration of one learning run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub num_types: usize,
    pub num_instances: usize,
    pub kernel: String,
    pub beta: f64,
    pub env_seed: u64,
    /// Iterations actually executed; fewer than requested if the user stopped early.
    pub iterations_run: usize,
    /// Normalized cost of the planned trajectory at iterations `1..=N`. After an
    /// early stop the plan no longer changes, so its cost is carried forward.
    pub normalized_cost: Vec<f64>,
    pub final_w: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub num_types: usize,
    pub num_instances: usize,
    pub kernel: Option<String>,
    pub beta: Option<f64>,
    pub env_seed: u64,
    pub error: String,
}

/// Median curve for one `(F, M, kernel)` at that kernel's best learning rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub num_types: usize,
    pub num_instances: usize,
    pub kernel: KernelKind,
    pub beta: f64,
    pub medians: Vec<f64>,
}

/// Median curve for every learning rate tried.
#[derive(Debug, Clone, PartialEq)]
pub struct TuningRow {
    pub num_types: usize,
    pub num_instances: usize,
    pub kernel: KernelKind,
    pub beta: f64,
    pub runs: usize,
    pub medians: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
struct TraceLine<'a> {
    num_types: usize,
    num_instances: usize,
    kernel: &'a str,
    beta: f64,
    env_seed: u64,
    #[serde(flatten)]
    record: &'a TraceRecord,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub runs: Vec<RunSummary>,
    pub failures: Vec<Failure>,
    pub tuning: Vec<TuningRow>,
    pub aggregate: Vec<AggregateRow>,
    traces: Vec<(usize, Vec<TraceRecord>)>,
}

impl SweepResult {
    pub fn aggregate_for(&self, num_types: usize, num_instances: usize, kernel: KernelKind) -> Option<&AggregateRow> {
        self.aggregate
            .iter()
            .find(|r| r.num_types == num_types && r.num_instances == num_instances && r.kernel == kernel)
    }

    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Median of a non-empty sample; the mean of the two middle values for even sizes.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty sample");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

/// Medians across runs for each iteration. All curves must have the same length.
pub fn median_curve(curves: &[&[f64]]) -> Vec<f64> {
    let len = curves.first().map_or(0, |c| c.len());
    (0..len)
        .map(|i| median(&curves.iter().map(|c| c[i]).collect::<Vec<_>>()))
        .collect()
}

/// Picks the learning rate whose final median is lowest; ties go to the smaller rate.
pub fn select_beta(candidates: &[(f64, f64)]) -> Option<f64> {
    candidates
        .iter()
        .copied()
        .min_by(|(b1, m1), (b2, m2)| m1.total_cmp(m2).then(b1.total_cmp(b2)))
        .map(|(beta, _)| beta)
}

struct RunOutput {
    summary: RunSummary,
    trace: Option<Vec<TraceRecord>>,
}

fn run_one(
    scenario: &Scenario,
    planner: &PlannerConfig,
    kernel: KernelKind,
    beta: f64,
    iterations: usize,
    user: SimUserConfig,
    num_instances: usize,
    keep_trace: bool,
) -> Result<RunOutput> {
    let ctx = LearningContext::from_scenario(scenario, planner.clone());
    let k = make_kernel(kernel, planner.horizon)?;
    let mut source = SimulatedUser::new(scenario.truth.optimal.clone(), user);
    let trace = run_loop(&ctx, k, beta, iterations, &mut source)?;

    let mut costs: Vec<f64> = trace
        .records()
        .iter()
        .map(|r| r.normalized_cost.expect("scenario carries ground truth"))
        .collect();
    let final_w = trace
        .final_weights()
        .map(<[f64]>::to_vec)
        .unwrap_or_else(|| vec![0.0; scenario.env.num_types]);
    if costs.len() < iterations {
        let settled = plan(&ctx.env, &final_w, planner, None)?;
        let value = ctx.normalized(&settled)?.expect("scenario carries ground truth");
        costs.resize(iterations, value);
    }
    Ok(RunOutput {
        summary: RunSummary {
            num_types: scenario.env.num_types,
            num_instances,
            kernel: kernel.to_string(),
            beta,
            env_seed: scenario.env.seed.unwrap_or_default(),
            iterations_run: trace.len(),
            normalized_cost: costs,
            final_w,
        },
        trace: keep_trace.then(|| trace.records().to_vec()),
    })
}

/// Runs the learning loop for one kernel and learning rate on every
/// scenario and returns the per-run normalized cost curves.
pub fn evaluate_beta(
    scenarios: &[Scenario],
    planner: &PlannerConfig,
    kernel: KernelKind,
    beta: f64,
    iterations: usize,
    strategy: Strategy,
) -> Result<Vec<Vec<f64>>> {
    scenarios
        .par_iter()
        .map(|s| {
            let user = SimUserConfig {
                strategy,
                seed: s.env.seed.unwrap_or_default(),
                noise: 0.0,
            };
            run_one(s, planner, kernel, beta, iterations, user, 0, false).map(|o| o.summary.normalized_cost)
        })
        .collect()
}

/// Returns the grid learning rate with the lowest median final-iteration
/// normalized cost over `scenarios` (ties to the smaller rate), together with
/// the final median of every grid entry in grid order.
pub fn tune_beta(
    scenarios: &[Scenario],
    planner: &PlannerConfig,
    kernel: KernelKind,
    grid: &[f64],
    iterations: usize,
    strategy: Strategy,
) -> Result<(f64, Vec<(f64, f64)>)> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter {
            name: "grid",
            reason: "learning-rate grid is empty".into(),
        });
    }
    if scenarios.is_empty() {
        return Err(Error::InvalidParameter {
            name: "scenarios",
            reason: "need at least one environment".into(),
        });
    }
    let mut finals = Vec::with_capacity(grid.len());
    for &beta in grid {
        let curves = evaluate_beta(scenarios, planner, kernel, beta, iterations, strategy)?;
        let last: Vec<f64> = curves.iter().map(|c| *c.last().expect("iterations >= 1")).collect();
        finals.push((beta, median(&last)));
    }
    let best = select_beta(&finals).expect("grid is non-empty");
    Ok((best, finals))
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let planner = spec.planner();
    let cells: Vec<(usize, usize)> = spec
        .feature_counts
        .iter()
        .flat_map(|&f| spec.instance_counts.iter().map(move |&m| (f, m)))
        .collect();

    // Environments for every cell, in (cell, seed) order.
    let generated: Vec<Vec<(u64, Result<Scenario>)>> = cells
        .par_iter()
        .map(|&(f, m)| {
            (0..spec.envs_per_cell)
                .into_par_iter()
                .map(|e| {
                    let seed = spec.env_seed(e);
                    (seed, generate_scenario(f, m, seed, &spec.generation))
                })
                .collect()
        })
        .collect();

    let mut failures = Vec::new();
    let mut jobs = Vec::new();
    for (cell_index, (&(f, m), envs)) in cells.iter().zip(&generated).enumerate() {
        for (seed, outcome) in envs {
            if let Err(e) = outcome {
                failures.push(Failure {
                    num_types: f,
                    num_instances: m,
                    kernel: None,
                    beta: None,
                    env_seed: *seed,
                    error: e.to_string(),
                });
            }
        }
        for (kernel_index, entry) in spec.kernels.iter().enumerate() {
            for &beta in spec.grid_for(entry) {
                for (env_index, (_, outcome)) in envs.iter().enumerate() {
                    if outcome.is_ok() {
                        jobs.push((cell_index, kernel_index, beta, env_index));
                    }
                }
            }
        }
    }

    let outputs: Vec<Result<RunOutput>> = jobs
        .par_iter()
        .map(|&(cell, kernel, beta, env)| {
            let scenario = generated[cell][env].1.as_ref().expect("only generated scenarios are queued");
            let seed = generated[cell][env].0;
            run_one(
                scenario,
                planner,
                spec.kernels[kernel].kind,
                beta,
                spec.iterations,
                spec.sim_user(seed),
                cells[cell].1,
                spec.emit_traces,
            )
        })
        .collect();

    let mut runs = Vec::new();
    let mut traces = Vec::new();
    // (cell, kernel) -> beta grid position -> curves
    let mut grouped: BTreeMap<(usize, usize), Vec<(f64, Vec<usize>)>> = BTreeMap::new();
    for (&(cell, kernel, beta, env), out) in jobs.iter().zip(outputs) {
        let (f, m) = cells[cell];
        let group = grouped.entry((cell, kernel)).or_default();
        if group.last().is_none_or(|(b, _)| *b != beta) {
            group.push((beta, Vec::new()));
        }
        match out {
            Ok(o) => {
                group.last_mut().unwrap().1.push(runs.len());
                if let Some(t) = o.trace {
                    traces.push((runs.len(), t));
                }
                runs.push(o.summary);
            }
            Err(e) => failures.push(Failure {
                num_types: f,
                num_instances: m,
                kernel: Some(spec.kernels[kernel].kind.to_string()),
                beta: Some(beta),
                env_seed: generated[cell][env].0,
                error: e.to_string(),
            }),
        }
    }

    let mut tuning = Vec::new();
    let mut aggregate = Vec::new();
    for ((cell, kernel), betas) in &grouped {
        let (f, m) = cells[*cell];
        let kind = spec.kernels[*kernel].kind;
        let mut finals = Vec::new();
        let mut curves_by_beta = Vec::new();
        for (beta, indices) in betas {
            if indices.is_empty() {
                continue;
            }
            let curves: Vec<&[f64]> = indices.iter().map(|&i| runs[i].normalized_cost.as_slice()).collect();
            let medians = median_curve(&curves);
            finals.push((*beta, *medians.last().unwrap()));
            tuning.push(TuningRow {
                num_types: f,
                num_instances: m,
                kernel: kind,
                beta: *beta,
                runs: indices.len(),
                medians: medians.clone(),
            });
            curves_by_beta.push((*beta, medians));
        }
        if let Some(best) = select_beta(&finals) {
            let medians = curves_by_beta.into_iter().find(|(b, _)| *b == best).unwrap().1;
            aggregate.push(AggregateRow {
                num_types: f,
                num_instances: m,
                kernel: kind,
                beta: best,
                medians,
            });
        }
    }

    Ok(SweepResult {
        spec: spec.clone(),
        runs,
        failures,
        tuning,
        aggregate,
        traces,
    })
}

/// File names written by [`write_outputs`].
pub mod files {
    pub const AGGREGATE: &str = "aggregate.csv";
    pub const TUNING: &str = "tuning.csv";
    pub const RUNS: &str = "runs.jsonl";
    pub const TRACES: &str = "traces.jsonl";
    pub const FAILURES: &str = "failures.csv";
    pub const SPEC: &str = "spec.json";
    pub const PLOT_MEDIANS: &str = "plot_median_cost.csv";
    pub const PLOT_PROFILES: &str = "plot_profiles.csv";
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Format(format!("{}: {e}", path.display()))
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| io_err(&path, e))?;
    Ok(path)
}

pub fn aggregate_csv(result: &SweepResult) -> String {
    let mut out = String::from("num_types,num_instances,kernel,beta");
    for i in 1..=result.spec.iterations {
        write!(out, ",iter_{i}").unwrap();
    }
    out.push('\n');
    for row in &result.aggregate {
        write!(out, "{},{},{},{}", row.num_types, row.num_instances, row.kernel, fmt_f64(row.beta)).unwrap();
        for m in &row.medians {
            write!(out, ",{}", fmt_f64(*m)).unwrap();
        }
        out.push('\n');
    }
    out
}

fn tuning_csv(result: &SweepResult) -> String {
    let mut out = String::from("num_types,num_instances,kernel,beta,runs,final_median,selected\n");
    for row in &result.tuning {
        let selected = result
            .aggregate_for(row.num_types, row.num_instances, row.kernel)
            .is_some_and(|a| a.beta == row.beta);
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            row.num_types,
            row.num_instances,
            row.kernel,
            fmt_f64(row.beta),
            row.runs,
            fmt_f64(*row.medians.last().unwrap()),
            selected
        )
        .unwrap();
    }
    out
}

fn failures_csv(result: &SweepResult) -> String {
    let mut out = String::from("num_types,num_instances,kernel,beta,env_seed,error\n");
    for f in &result.failures {
        writeln!(
            out,
            "{},{},{},{},{},\"{}\"",
            f.num_types,
            f.num_instances,
            f.kernel.as_deref().unwrap_or(""),
            f.beta.map(fmt_f64).unwrap_or_default(),
            f.env_seed,
            f.error.replace('"', "'")
        )
        .unwrap();
    }
    out
}

fn plot_medians_csv(result: &SweepResult) -> String {
    let mut out = String::from("num_types,num_instances,kernel,beta,iteration,median_normalized_cost\n");
    for row in &result.aggregate {
        for (i, m) in row.medians.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                row.num_types,
                row.num_instances,
                row.kernel,
                fmt_f64(row.beta),
                i + 1,
                fmt_f64(*m)
            )
            .unwrap();
        }
    }
    out
}

fn plot_profiles_csv(spec: &SweepSpec) -> Result<String> {
    let horizon = spec.planner().horizon;
    let t = horizon / 2;
    let mut out = String::from("kernel,horizon,corrected_timepoint,timepoint,value\n");
    for entry in &spec.kernels {
        let kernel = make_kernel(entry.kind, horizon)?;
        let profile = deformation_profile(&kernel, t)?;
        let values = std::iter::once(0.0).chain(profile).chain(std::iter::once(0.0));
        for (timepoint, v) in values.enumerate() {
            writeln!(out, "{},{horizon},{t},{timepoint},{}", entry.kind, fmt_f64(v)).unwrap();
        }
    }
    Ok(out)
}

/// Writes the sweep outputs into `dir` (created if missing) and returns the
/// paths written. With `plot_data`, long-format CSVs for the learning curves
/// and the deformation profiles are added.
pub fn write_outputs(result: &SweepResult, dir: &Path, plot_data: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut written = vec![
        write_file(dir, files::SPEC, &(to_json_string(&result.spec) + "\n"))?,
        write_file(dir, files::AGGREGATE, &aggregate_csv(result))?,
        write_file(dir, files::TUNING, &tuning_csv(result))?,
        write_file(dir, files::FAILURES, &failures_csv(result))?,
    ];

    let mut runs = String::new();
    for r in &result.runs {
        runs.push_str(&to_json_string(r));
        runs.push('\n');
    }
    written.push(write_file(dir, files::RUNS, &runs)?);

    if result.spec.emit_traces {
        let mut text = String::new();
        for (run_index, records) in &result.traces {
            let run = &result.runs[*run_index];
            for record in records {
                let line = TraceLine {
                    num_types: run.num_types,
                    num_instances: run.num_instances,
                    kernel: &run.kernel,
                    beta: run.beta,
                    env_seed: run.env_seed,
                    record,
                };
                text.push_str(&to_json_string(&line));
                text.push('\n');
            }
        }
        written.push(write_file(dir, files::TRACES, &text)?);
    }

    if plot_data {
        written.push(write_file(dir, files::PLOT_MEDIANS, &plot_medians_csv(result))?);
        written.push(write_file(dir, files::PLOT_PROFILES, &plot_profiles_csv(&result.spec)?)?);
    }
    Ok(written)
}

/// Outcome of recomputing the aggregate table from the per-run summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossCheck {
    pub rows_checked: usize,
    pub mismatches: Vec<String>,
}

/// Recomputes `aggregate.csv` from `runs.jsonl` in a sweep output directory
/// and reports any row that differs.
pub fn cross_check(dir: &Path) -> Result<CrossCheck> {
    let read = |name: &str| {
        let path = dir.join(name);
        fs::read_to_string(&path).map_err(|e| io_err(&path, e))
    };
    let runs_text = read(files::RUNS)?;
    let aggregate_text = read(files::AGGREGATE)?;

    // (F, M, kernel) in first-seen order -> beta in first-seen order -> curves
    let mut groups: Vec<((usize, usize, String), Vec<(f64, Vec<Vec<f64>>)>)> = Vec::new();
    for line in runs_text.lines().filter(|l| !l.trim().is_empty()) {
        let run: RunSummary = serde_json::from_str(line)?;
        let key = (run.num_types, run.num_instances, run.kernel.clone());
        let pos = match groups.iter().position(|(k, _)| *k == key) {
            Some(p) => p,
            None => {
                groups.push((key, Vec::new()));
                groups.len() - 1
            }
        };
        let betas = &mut groups[pos].1;
        match betas.iter_mut().find(|(b, _)| *b == run.beta) {
            Some((_, curves)) => curves.push(run.normalized_cost),
            None => betas.push((run.beta, vec![run.normalized_cost])),
        }
    }

    let mut expected = Vec::new();
    for ((f, m, kernel), betas) in &groups {
        let mut finals = Vec::new();
        let mut curves_by_beta = Vec::new();
        for (beta, curves) in betas {
            let refs: Vec<&[f64]> = curves.iter().map(Vec::as_slice).collect();
            let medians = median_curve(&refs);
            finals.push((*beta, *medians.last().unwrap()));
            curves_by_beta.push((*beta, medians));
        }
        let best = select_beta(&finals).unwrap();
        let medians = &curves_by_beta.iter().find(|(b, _)| *b == best).unwrap().1;
        let mut line = format!("{f},{m},{kernel},{}", fmt_f64(best));
        for v in medians {
            write!(line, ",{}", fmt_f64(*v)).unwrap();
        }
        expected.push(line);
    }

    let actual: Vec<&str> = aggregate_text.lines().skip(1).filter(|l| !l.is_empty()).collect();
    let mut mismatches = Vec::new();
    if actual.len() != expected.len() {
        mismatches.push(format!(
            "aggregate has {} rows, recomputed {}",
            actual.len(),
            expected.len()
        ));
    }
    for (a, e) in actual.iter().zip(&expected) {
        if *a != e {
            mismatches.push(format!("expected {e}\n     got {a}"));
        }
    }
    Ok(CrossCheck {
        rows_checked: expected.len(),
        mismatches,
    })
}
