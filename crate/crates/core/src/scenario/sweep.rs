use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::*;
use crate::case_io::{scale_demands_by, to_json};
use crate::dlr::{build_rating_series, RatingConditions, RatingSeries};
use crate::formulation::{build, SolutionPoint, TopologyReport};
use crate::solver::{run, SolveStatus};

/// Outcome of one period of one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodResult {
    pub hour: usize,
    pub weight: f64,
    pub status: SolveStatus,
    /// true generation cost plus shedding, $/h (absent without incumbent)
    pub objective_total: Option<f64>,
    /// the solver's objective at the incumbent
    pub objective_model: Option<f64>,
    pub cost_generation: Option<f64>,
    pub cost_load_shedding: Option<f64>,
    pub best_bound: f64,
    pub rel_gap: Option<f64>,
    pub nodes: usize,
    pub flows: Option<PeriodFlows>,
    pub topology: Option<TopologyReport>,
    /// seconds; not serialized so stored results stay byte-stable
    #[serde(skip)]
    pub wall_time: f64,
}

/// Builds and solves one period on an already equipped, congested network.
pub fn solve_period(
    net: &Network,
    period: &Period,
    ratings: &RatingSeries,
    formulation: &FormulationConfig,
    solver: &SolverConfig,
) -> Result<(PeriodResult, Option<SolutionPoint>), ScenarioError> {
    let scaled = scale_demands_by(net, period.load_multiplier);
    let f = build(&scaled, ratings, formulation, period.hour)
        .map_err(|source| ScenarioError::Formulation { hour: period.hour, source })?;
    let r = run(&f, solver);
    let s = r.incumbent.as_ref();
    let result = PeriodResult {
        hour: period.hour,
        weight: period.weight,
        status: r.status,
        objective_total: s.map(|s| s.objective_total),
        objective_model: s.map(|s| s.objective_model),
        cost_generation: s.map(|s| s.cost_generation),
        cost_load_shedding: s.map(|s| s.cost_load_shedding),
        best_bound: r.best_bound,
        rel_gap: r.rel_gap,
        nodes: r.nodes_explored,
        flows: s.map(|s| PeriodFlows::from_solution(period.hour, period.weight, s)),
        topology: s.map(|s| s.topology.clone()),
        wall_time: r.wall_time,
    };
    Ok((result, r.incumbent))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub dlr: usize,
    pub vid: usize,
    /// digest of everything that determines this cell's value
    pub fingerprint: String,
    pub periods: Vec<PeriodResult>,
    /// weighted sum of `objective_total` over the horizon
    pub objective: Option<f64>,
    pub status: SolveStatus,
    pub max_gap: Option<f64>,
    pub loading: Option<LineLoading>,
}

fn status_rank(s: SolveStatus) -> u8 {
    match s {
        SolveStatus::OptimalWithinGap => 0,
        SolveStatus::NodeLimit => 1,
        SolveStatus::TimeLimit => 2,
        SolveStatus::Infeasible => 3,
    }
}

impl CellResult {
    fn assemble(dlr: usize, vid: usize, fingerprint: String, periods: Vec<PeriodResult>, ratings: &RatingSeries) -> Self {
        let objective = periods.iter().map(|p| p.objective_total.map(|v| p.weight * v)).sum::<Option<f64>>();
        let status = periods.iter().map(|p| p.status).max_by_key(|s| status_rank(*s)).unwrap_or(SolveStatus::OptimalWithinGap);
        let max_gap = periods.iter().map(|p| p.rel_gap).collect::<Option<Vec<f64>>>().map(|g| g.into_iter().fold(0.0, f64::max));
        let flows: Option<Vec<PeriodFlows>> = periods.iter().map(|p| p.flows.clone()).collect();
        let loading = flows.and_then(|f| mean_line_loading(&f, ratings).ok());
        CellResult { dlr, vid, fingerprint, periods, objective, status, max_gap, loading }
    }

    pub fn wall_time(&self) -> f64 {
        self.periods.iter().map(|p| p.wall_time).sum()
    }

    fn log_text(&self) -> String {
        let mut s = format!("cell dlr={} vid={}\n", self.dlr, self.vid);
        for p in &self.periods {
            let _ = writeln!(
                s,
                "hour={} status={} objective={} bound={:.4} gap={} nodes={} time={:.3}s",
                p.hour,
                p.status.label(),
                p.objective_total.map_or("-".into(), |v| format!("{v:.4}")),
                p.best_bound,
                p.rel_gap.map_or("-".into(), |g| format!("{:.4}%", 100.0 * g)),
                p.nodes,
                p.wall_time
            );
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostCell {
    pub dlr: usize,
    pub vid: usize,
    pub objective: Option<f64>,
    /// percent change against cell (0, 0)
    pub change_pct: Option<f64>,
    pub status: SolveStatus,
    pub max_gap: Option<f64>,
}

/// Horizon objective per (#DLR lines, #VID lines) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostMatrix {
    pub scenario: String,
    pub case_id: String,
    pub weather: String,
    pub topology_mode: TopologyMode,
    pub congestion_factor: f64,
    pub rel_gap_target: f64,
    pub dlr_counts: Vec<usize>,
    pub vid_counts: Vec<usize>,
    /// equipment order; both technologies take prefixes of this list
    pub priority: Vec<LineId>,
    pub cells: Vec<CostCell>,
}

impl CostMatrix {
    pub fn cell(&self, dlr: usize, vid: usize) -> Option<&CostCell> {
        self.cells.iter().find(|c| c.dlr == dlr && c.vid == vid)
    }

    pub fn objective(&self, dlr: usize, vid: usize) -> Option<f64> {
        self.cell(dlr, vid).and_then(|c| c.objective)
    }

    /// One row per cell; objective in $ with 2 decimals, change in percent
    /// with 1 decimal, worst per-period gap in percent with 4 decimals.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("dlr,vid,objective,change_pct,status,max_gap_pct\n");
        for c in &self.cells {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                c.dlr,
                c.vid,
                c.objective.map_or(String::new(), |v| format!("{v:.2}")),
                c.change_pct.map_or(String::new(), |v| format!("{v:.1}")),
                c.status.label(),
                c.max_gap.map_or(String::new(), |g| format!("{:.4}", 100.0 * g))
            );
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("cost matrix serializes")
    }

    /// Matrix layout in units of 10^6 with the percent change in brackets.
    pub fn to_markdown(&self) -> String {
        let mut s = String::from("| DLR \\ VID |");
        for v in &self.vid_counts {
            let _ = write!(s, " {v} |");
        }
        s.push_str("\n|---|");
        s.push_str(&"---|".repeat(self.vid_counts.len()));
        s.push('\n');
        for &d in &self.dlr_counts {
            let _ = write!(s, "| {d} |");
            for &v in &self.vid_counts {
                match self.cell(d, v) {
                    Some(CostCell { objective: Some(o), change_pct: Some(p), .. }) => {
                        let _ = write!(s, " {:.3} ({:+.1}%) |", o / 1e6, p);
                    }
                    _ => s.push_str(" - |"),
                }
            }
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    /// worker threads; 0 uses all cores
    pub workers: usize,
    /// per-cell JSON and logs are written here and reused when present
    pub out_dir: Option<PathBuf>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { workers: 1, out_dir: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub matrix: CostMatrix,
    pub loading: Vec<LoadingReport>,
    /// baseline mean loading per line, in priority order
    pub baseline_loading: Vec<(LineId, f64)>,
    pub cells: Vec<CellResult>,
    /// the congested network every cell starts from
    pub network: Network,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> ScenarioError {
    ScenarioError::Io { path: path.display().to_string(), msg: e.to_string() }
}

fn solve_all(
    net: &Network,
    periods: &[Period],
    ratings: &RatingSeries,
    formulation: &FormulationConfig,
    solver: &SolverConfig,
) -> Result<Vec<PeriodResult>, ScenarioError> {
    periods.par_iter().map(|p| solve_period(net, p, ratings, formulation, solver).map(|r| r.0)).collect()
}

/// `net` with minimum outputs zeroed and limits scaled by `factor`. Cases
/// with unrated lines get a fixed-topology uncongested solve first, whose
/// flows set those lines' limits.
pub fn congested_network(
    net: &Network,
    periods: &[Period],
    factor: f64,
    formulation: &FormulationConfig,
    solver: &SolverConfig,
) -> Result<Network, ScenarioError> {
    let base = net.clone().with_zero_min_output();
    let uncongested = if has_unlimited_lines(&base) {
        let keys: Vec<usize> = periods.iter().map(|p| p.hour).collect();
        let plain = base.equip(&[], &[]);
        let fixed = FormulationConfig { topology_mode: TopologyMode::Fixed, ..formulation.clone() };
        baseline_flows(&solve_all(&plain, periods, &RatingSeries::static_only(&plain, &keys), &fixed, solver)?)?
    } else {
        Vec::new()
    };
    apply_congestion(&base, &uncongested, factor)
}

fn baseline_flows(results: &[PeriodResult]) -> Result<Vec<PeriodFlows>, ScenarioError> {
    results.iter().map(|r| r.flows.clone().ok_or(ScenarioError::MissingBaseline(r.hour))).collect()
}

/// Runs the whole protocol: congestion, baseline ranking, then every
/// (d, v) cell over the horizon.
pub fn run_sweep(spec: &ScenarioSpec, inputs: &ScenarioInputs, opts: &SweepOptions) -> Result<SweepOutput, ScenarioError> {
    spec.check(&inputs.network)?;
    if spec.dlr_counts[0] != 0 || spec.vid_counts[0] != 0 {
        return Err(ScenarioError::Invalid("counts must start at 0 so cell (0, 0) is the baseline".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
    pool.install(|| sweep_inner(spec, inputs, opts))
}

fn sweep_inner(spec: &ScenarioSpec, inputs: &ScenarioInputs, opts: &SweepOptions) -> Result<SweepOutput, ScenarioError> {
    let base_net = inputs.network.equip(&[], &[]);
    let periods = periods(&spec.horizon, &inputs.profile, &inputs.weather)?;
    let keys: Vec<usize> = periods.iter().map(|p| p.hour).collect();
    let weather = WeatherSeries::new(periods.iter().map(|p| p.weather).collect())?;
    let fixed = FormulationConfig { topology_mode: TopologyMode::Fixed, ..spec.formulation.clone() };

    let net = congested_network(&base_net, &periods, spec.congestion_factor, &fixed, &spec.solver)?;
    let static_ratings = RatingSeries::static_only(&net, &keys);
    let base = baseline_flows(&solve_all(&net, &periods, &static_ratings, &fixed, &spec.solver)?)?;
    let base_loading = mean_line_loading(&base, &static_ratings)?;
    let priority = match &spec.priority {
        Priority::Auto => rank_priority_lines(&net, &base, &static_ratings)?,
        Priority::Explicit(list) => list.clone(),
    };
    let baseline_loading =
        priority.iter().map(|id| (*id, base_loading.per_line.get(id).copied().unwrap_or(0.0))).collect();

    let mut hasher = Sha256::new();
    hasher.update(serde_json::to_vec(spec).expect("spec serializes"));
    hasher.update(to_json(&net));
    hasher.update(serde_json::to_vec(&periods).expect("periods serialize"));
    hasher.update(serde_json::to_vec(&inputs.conductors).expect("conductors serialize"));
    hasher.update(serde_json::to_vec(&priority).expect("ids serialize"));
    let fingerprint = hex::encode(hasher.finalize());

    let cell_dir = opts.out_dir.as_ref().map(|d| d.join("cells"));
    if let Some(d) = &cell_dir {
        std::fs::create_dir_all(d).map_err(|e| io_err(d, e))?;
    }
    let grid: Vec<(usize, usize)> =
        spec.dlr_counts.iter().flat_map(|&d| spec.vid_counts.iter().map(move |&v| (d, v))).collect();
    let slr = RatingConditions::slr_reference();
    let cells: Vec<CellResult> = grid
        .par_iter()
        .map(|&(d, v)| -> Result<CellResult, ScenarioError> {
            let path = cell_dir.as_ref().map(|dir| dir.join(format!("cell_d{d}_v{v}.json")));
            if let Some(p) = &path {
                if let Ok(text) = std::fs::read_to_string(p) {
                    match serde_json::from_str::<CellResult>(&text) {
                        Ok(c) if c.fingerprint == fingerprint => {
                            log::info!("cell ({d}, {v}): reusing {}", p.display());
                            return Ok(c);
                        }
                        _ => log::info!("cell ({d}, {v}): stale result at {}, recomputing", p.display()),
                    }
                }
            }
            let started = Instant::now();
            let cell_net = net.equip(&priority[..d], &priority[..v]);
            let ratings = build_rating_series(&cell_net, &weather, &inputs.conductors, &slr, &keys)?;
            let cell_cfg = FormulationConfig { topology_mode: spec.topology_mode, ..spec.formulation.clone() };
            let results = solve_all(&cell_net, &periods, &ratings, &cell_cfg, &spec.solver)?;
            let cell = CellResult::assemble(d, v, fingerprint.clone(), results, &ratings);
            log::info!(
                "cell ({d}, {v}): objective {} status {} in {:.1}s",
                cell.objective.map_or("-".into(), |o| format!("{o:.2}")),
                cell.status.label(),
                started.elapsed().as_secs_f64()
            );
            if let Some(p) = &path {
                let json = serde_json::to_string_pretty(&cell).expect("cell serializes");
                std::fs::write(p, json).map_err(|e| io_err(p, e))?;
                let log_path = p.with_extension("log");
                std::fs::write(&log_path, cell.log_text()).map_err(|e| io_err(&log_path, e))?;
            }
            Ok(cell)
        })
        .collect::<Result<_, _>>()?;

    let base_obj = cells.iter().find(|c| c.dlr == 0 && c.vid == 0).and_then(|c| c.objective);
    let matrix = CostMatrix {
        scenario: spec.name.clone(),
        case_id: spec.case_id.clone(),
        weather: spec.weather.label().to_string(),
        topology_mode: spec.topology_mode,
        congestion_factor: spec.congestion_factor,
        rel_gap_target: spec.solver.rel_gap_target,
        dlr_counts: spec.dlr_counts.clone(),
        vid_counts: spec.vid_counts.clone(),
        priority,
        cells: cells
            .iter()
            .map(|c| CostCell {
                dlr: c.dlr,
                vid: c.vid,
                objective: c.objective,
                change_pct: match (c.objective, base_obj) {
                    (Some(o), Some(b)) if b != 0.0 => Some(100.0 * (o - b) / b),
                    _ => None,
                },
                status: c.status,
                max_gap: c.max_gap,
            })
            .collect(),
    };
    let by_cell: BTreeMap<(usize, usize), &CellResult> = cells.iter().map(|c| ((c.dlr, c.vid), c)).collect();
    let mut loading = Vec::new();
    if let Some(base) = by_cell.get(&(0, 0)).and_then(|c| c.loading.as_ref()) {
        for cell in &spec.loading_cells {
            if let Some(treated) = by_cell.get(cell).and_then(|c| c.loading.as_ref()) {
                loading.push(LoadingReport::compare(*cell, base, treated));
            }
        }
    }
    Ok(SweepOutput { matrix, loading, baseline_loading, cells, network: net })
}

impl SweepOutput {
    pub fn loading_csv(&self) -> String {
        let mut s = LoadingReport::csv_header().to_string();
        for r in &self.loading {
            s.push_str(&r.csv_rows());
        }
        s
    }

    pub fn priority_csv(&self) -> String {
        let mut s = String::from("rank,line,baseline_loading\n");
        for (k, (id, u)) in self.baseline_loading.iter().enumerate() {
            let _ = writeln!(s, "{},{},{:.6}", k + 1, id.0, u);
        }
        s
    }

    /// `(dlr, vid, seconds, nodes)` per cell. Wall-clock is not
    /// deterministic, so it stays out of the result files; reused cells
    /// report zero seconds.
    pub fn timings(&self) -> Vec<(usize, usize, f64, usize)> {
        self.cells.iter().map(|c| (c.dlr, c.vid, c.wall_time(), c.periods.iter().map(|p| p.nodes).sum())).collect()
    }

    /// Writes the matrix, loading and priority files plus the SVG
    /// figures into `dir`; returns the written paths.
    pub fn write_files(&self, dir: &Path) -> Result<Vec<PathBuf>, ScenarioError> {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let files = [
            ("cost_matrix.csv", self.matrix.to_csv()),
            ("cost_matrix.json", self.matrix.to_json()),
            ("cost_matrix.md", self.matrix.to_markdown()),
            ("loading_report.csv", self.loading_csv()),
            ("priority.csv", self.priority_csv()),
            ("cost_matrix.svg", cost_heatmap_svg(&self.matrix)),
        ];
        let mut out = Vec::new();
        for (name, body) in files {
            let p = dir.join(name);
            std::fs::write(&p, body).map_err(|e| io_err(&p, e))?;
            out.push(p);
        }
        for r in &self.loading {
            let p = dir.join(format!("loading_d{}_v{}.svg", r.cell.0, r.cell.1));
            std::fs::write(&p, loading_scatter_svg(r)).map_err(|e| io_err(&p, e))?;
            out.push(p);
        }
        Ok(out)
    }
}
