//! End-to-end evaluation: predict, repair, route, and compare against the
//! optimum as sum-of-costs ratios per split and component.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use covertour::dataset::Split;
use covertour::ml::{predict_scp, predict_tsp, MlpModel};
use covertour::repair::{repair_full, sweep_alpha, verify, SweepResult};
use covertour::{ArcMatrix, CostBreakdown, Instance, LabeledInstance, Solution};

use crate::error::{write_file, CliError, CliResult};
use crate::pipeline::{load_manifest, load_models, load_split};

pub const RATIOS_FILE: &str = "ratios.csv";
pub const EVAL_JSON: &str = "eval.json";
pub const FIXED_ALPHA_FILE: &str = "fixed_alpha.csv";
pub const BEST_ALPHA_FILE: &str = "best_alpha.csv";
pub const HISTOGRAM_FILE: &str = "histogram.csv";
pub const SWEEP_JSON: &str = "sweep.json";
pub const TIMING_FILE: &str = "timing.json";

/// Where the probabilities come from.
pub enum Predictor {
    Models { scp: MlpModel, tsp: MlpModel },
    /// Replays the optimal labels as 0/1 probabilities.
    Oracle,
}

impl Predictor {
    pub fn from_dir(dir: &Path) -> CliResult<Self> {
        let (scp, tsp) = load_models(dir)?;
        Ok(Predictor::Models { scp, tsp })
    }

    fn facility_probs(&self, label: &LabeledInstance) -> CliResult<Vec<f64>> {
        match self {
            Predictor::Models { scp, .. } => Ok(predict_scp(scp, &label.instance)?),
            Predictor::Oracle => Ok(label.g_star.clone()),
        }
    }

    fn arc_probs(&self, label: &LabeledInstance, inst: &Instance, open: &[bool]) -> covertour::Result<ArcMatrix> {
        match self {
            Predictor::Models { tsp, .. } => predict_tsp(tsp, inst, open),
            Predictor::Oracle => Ok(label.pz_star.clone()),
        }
    }
}

fn repair_with(predictor: &Predictor, path: &Path, label: &LabeledInstance, alpha: f64) -> CliResult<Solution> {
    let g = predictor.facility_probs(label)?;
    let arcs = |inst: &Instance, open: &[bool]| predictor.arc_probs(label, inst, open);
    let sol = repair_full(&label.instance, &g, &arcs, alpha)?;
    check_repaired(path, label, &sol)?;
    Ok(sol)
}

fn check_repaired(path: &Path, label: &LabeledInstance, sol: &Solution) -> CliResult<()> {
    verify(&label.instance, sol).map_err(|source| CliError::RepairInfeasible {
        path: path.to_path_buf(),
        source,
    })
}

/// Summed predicted and optimal costs over one set of instances.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct SplitCosts {
    pub instances: usize,
    pub predicted: Costs,
    pub optimal: Costs,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Costs {
    pub facility: f64,
    pub assignment: f64,
    pub transport: f64,
    pub total: f64,
}

impl From<CostBreakdown> for Costs {
    fn from(c: CostBreakdown) -> Self {
        Costs {
            facility: c.facility,
            assignment: c.assignment,
            transport: c.transport,
            total: c.total,
        }
    }
}

impl SplitCosts {
    fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a CostBreakdown, &'a CostBreakdown)>) -> Self {
        let mut pred = CostBreakdown::default();
        let mut opt = CostBreakdown::default();
        let mut count = 0;
        for (p, o) in pairs {
            pred.accumulate(p);
            opt.accumulate(o);
            count += 1;
        }
        SplitCosts {
            instances: count,
            predicted: pred.into(),
            optimal: opt.into(),
        }
    }

    /// Percentages for facility, assignment, transport and total; `None` when
    /// the optimal sum is zero.
    pub fn ratios(&self) -> [Option<f64>; 4] {
        let r = |p: f64, o: f64| (o > 0.0).then(|| 100.0 * p / o);
        [
            r(self.predicted.facility, self.optimal.facility),
            r(self.predicted.assignment, self.optimal.assignment),
            r(self.predicted.transport, self.optimal.transport),
            r(self.predicted.total, self.optimal.total),
        ]
    }

    pub fn total_ratio(&self) -> Option<f64> {
        self.ratios()[3]
    }

    fn csv_cells(&self) -> String {
        self.ratios()
            .iter()
            .map(|r| r.map_or_else(|| "NA".to_string(), |v| format!("{v:.2}")))
            .collect::<Vec<_>>()
            .join(",")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitRow {
    pub split: String,
    #[serde(flatten)]
    pub costs: SplitCosts,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioReport {
    pub alpha: f64,
    pub rows: Vec<SplitRow>,
}

impl RatioReport {
    pub fn row(&self, split: Split) -> Option<&SplitCosts> {
        self.rows.iter().find(|r| r.split == split.as_str()).map(|r| &r.costs)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("split,examples,facility_pct,assignment_pct,tsp_pct,total_pct\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{}\n", r.split, r.costs.instances, r.costs.csv_cells()));
        }
        out
    }
}

fn write_timing(out_dir: &Path, started: Instant) -> CliResult<()> {
    let doc = serde_json::json!({ "seconds": started.elapsed().as_secs_f64() });
    write_file(&out_dir.join(TIMING_FILE), serde_json::to_string_pretty(&doc)?)
}

/// Repairs every instance of every split at `alpha`, re-checks feasibility
/// and writes the ratio table (`ratios.csv`) and raw sums (`eval.json`).
pub fn cmd_eval(manifest_path: &Path, predictor: &Predictor, alpha: f64, out_dir: &Path) -> CliResult<RatioReport> {
    let started = Instant::now();
    let (root, manifest) = load_manifest(manifest_path)?;
    let mut rows = Vec::new();
    for split in Split::ALL {
        let labeled = load_split(&root, &manifest, split)?;
        let sols: Vec<Solution> = labeled
            .par_iter()
            .map(|(path, label)| repair_with(predictor, path, label, alpha))
            .collect::<CliResult<_>>()?;
        let costs = SplitCosts::from_pairs(
            sols.iter()
                .zip(&labeled)
                .map(|(s, (_, l))| (&s.cost, &l.optimal.cost)),
        );
        rows.push(SplitRow {
            split: split.to_string(),
            costs,
        });
    }
    let report = RatioReport { alpha, rows };
    write_file(&out_dir.join(RATIOS_FILE), report.to_csv())?;
    write_file(&out_dir.join(EVAL_JSON), serde_json::to_string_pretty(&report)? + "\n")?;
    write_timing(out_dir, started)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaRow {
    pub alpha: f64,
    #[serde(flatten)]
    pub costs: SplitCosts,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub split: String,
    pub grid: Vec<f64>,
    /// Every instance repaired at the same threshold.
    pub fixed_alpha: Vec<AlphaRow>,
    /// Each instance at its own best threshold.
    pub best_overall: SplitCosts,
    /// Restricted to the instances for which the threshold is among the best.
    pub best_by_alpha: Vec<AlphaRow>,
    /// For each grid threshold, the number of instances where it attains the minimum.
    pub histogram: Vec<(f64, usize)>,
    /// Instances for which every grid threshold is optimal.
    pub indifferent: usize,
    pub instances: usize,
}

impl SweepReport {
    fn fixed_csv(&self) -> String {
        let mut out = String::from("alpha,examples,facility_pct,assignment_pct,tsp_pct,total_pct\n");
        for r in &self.fixed_alpha {
            out.push_str(&format!("{},{},{}\n", r.alpha, r.costs.instances, r.costs.csv_cells()));
        }
        out
    }

    fn best_csv(&self) -> String {
        let mut out = String::from("alpha,examples,facility_pct,assignment_pct,tsp_pct,total_pct\n");
        out.push_str(&format!(
            "Overall,{},{}\n",
            self.best_overall.instances,
            self.best_overall.csv_cells()
        ));
        for r in &self.best_by_alpha {
            out.push_str(&format!("{},{},{}\n", r.alpha, r.costs.instances, r.costs.csv_cells()));
        }
        out
    }

    fn histogram_csv(&self) -> String {
        let mut out = String::from("alpha,best_count\n");
        for (a, c) in &self.histogram {
            out.push_str(&format!("{a},{c}\n"));
        }
        out
    }
}

/// Sweeps the threshold grid over one split and writes the fixed-threshold
/// table, the best-threshold table, and the best-threshold histogram.
pub fn cmd_sweep(
    manifest_path: &Path,
    predictor: &Predictor,
    grid: &[f64],
    split: Split,
    out_dir: &Path,
) -> CliResult<SweepReport> {
    let started = Instant::now();
    let (root, manifest) = load_manifest(manifest_path)?;
    let labeled = load_split(&root, &manifest, split)?;
    let sweeps: Vec<SweepResult> = labeled
        .par_iter()
        .map(|(path, label)| sweep_instance(predictor, path, label, grid))
        .collect::<CliResult<_>>()?;
    let report = summarize_sweep(split, grid, &labeled, &sweeps);

    write_file(&out_dir.join(FIXED_ALPHA_FILE), report.fixed_csv())?;
    write_file(&out_dir.join(BEST_ALPHA_FILE), report.best_csv())?;
    write_file(&out_dir.join(HISTOGRAM_FILE), report.histogram_csv())?;
    write_file(&out_dir.join(SWEEP_JSON), serde_json::to_string_pretty(&report)? + "\n")?;
    write_timing(out_dir, started)?;
    Ok(report)
}

fn sweep_instance(predictor: &Predictor, path: &Path, label: &LabeledInstance, grid: &[f64]) -> CliResult<SweepResult> {
    let g = predictor.facility_probs(label)?;
    let arcs = |inst: &Instance, open: &[bool]| predictor.arc_probs(label, inst, open);
    let res = sweep_alpha(&label.instance, &g, &arcs, grid)?;
    for (_, sol) in &res.per_alpha {
        check_repaired(path, label, sol)?;
    }
    Ok(res)
}

fn summarize_sweep(
    split: Split,
    grid: &[f64],
    labeled: &[(PathBuf, LabeledInstance)],
    sweeps: &[SweepResult],
) -> SweepReport {
    let optimal = |i: usize| &labeled[i].1.optimal.cost;
    let fixed_alpha = grid
        .iter()
        .enumerate()
        .map(|(k, &alpha)| AlphaRow {
            alpha,
            costs: SplitCosts::from_pairs(sweeps.iter().enumerate().map(|(i, s)| (&s.per_alpha[k].1.cost, optimal(i)))),
        })
        .collect();
    let best_overall = SplitCosts::from_pairs(sweeps.iter().enumerate().map(|(i, s)| (&s.best().cost, optimal(i))));
    let best_by_alpha = grid
        .iter()
        .enumerate()
        .map(|(k, &alpha)| AlphaRow {
            alpha,
            costs: SplitCosts::from_pairs(
                sweeps
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| s.best_alphas.contains(&alpha))
                    .map(|(i, s)| (&s.per_alpha[k].1.cost, optimal(i))),
            ),
        })
        .collect();
    let histogram = grid
        .iter()
        .map(|&a| (a, sweeps.iter().filter(|s| s.best_alphas.contains(&a)).count()))
        .collect();
    SweepReport {
        split: split.to_string(),
        grid: grid.to_vec(),
        fixed_alpha,
        best_overall,
        best_by_alpha,
        histogram,
        indifferent: sweeps.iter().filter(|s| s.is_indifferent()).count(),
        instances: sweeps.len(),
    }
}
