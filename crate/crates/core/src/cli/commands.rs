use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::json;

use getco::case_io::{parse_case, validate_network, LoadProfile, WeatherSeries};
use getco::dlr::{build_rating_series, rating_factor, ConductorSet, RatingConditions};
use getco::formulation::{FormulationConfig, TopologyMode};
use getco::network::{LineId, Network};
use getco::scenario::{
    congested_network, cost_heatmap_svg, loading_scatter_svg, periods, run_sweep, solve_period, CostMatrix, Horizon,
    LoadingReport, LoadingRow, Priority, ScenarioInputs, ScenarioSpec, SweepOptions, WeatherProfile, CASE118, CASE24,
    CONDUCTORS_DRAKE, LOAD_PROFILE_RTS,
};
use getco::solver::{BranchingRule, SolveStatus, SolverConfig};

use super::manifest::{InputDigest, RunManifest};
use super::{input_err, Branching, Cli, Command, ModelArgs, Outcome, RateArgs, ReportArgs, SolveArgs, SweepArgs, WeatherArgs};

/// Settings shared by `solve` and `sweep`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ScenarioSection {
    name: Option<String>,
    congestion_factor: Option<f64>,
    profile: Option<String>,
    weather: Option<PathBuf>,
    load_profile: Option<PathBuf>,
    conductors: Option<PathBuf>,
    dlr_counts: Option<Vec<usize>>,
    vid_counts: Option<Vec<usize>>,
    hours: Option<Vec<usize>>,
    six_hour_blocks: Option<bool>,
    priority: Option<Vec<u32>>,
    loading_cells: Option<Vec<(usize, usize)>>,
    workers: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ConfigFile {
    formulation: FormulationConfig,
    solver: SolverConfig,
    scenario: ScenarioSection,
}

fn load_config(path: Option<&Path>, digests: &mut Vec<InputDigest>) -> Result<ConfigFile> {
    let Some(p) = path else {
        return Ok(ConfigFile::default());
    };
    let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
    digests.push(InputDigest::of(p.display().to_string(), text.as_bytes()));
    toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))
}

fn read_input(p: &Path, digests: &mut Vec<InputDigest>) -> Result<String> {
    let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
    digests.push(InputDigest::of(p.display().to_string(), text.as_bytes()));
    Ok(text)
}

fn bundled(name: &str, text: &str, digests: &mut Vec<InputDigest>) -> String {
    digests.push(InputDigest::of(format!("bundled:{name}"), text.as_bytes()));
    text.to_string()
}

/// A path, or `case24` / `case118` (with or without `.m`) for the bundled
/// cases when no such file exists. Returns the network and a case id.
fn load_case(arg: &str, digests: &mut Vec<InputDigest>) -> Result<(Network, String)> {
    let p = Path::new(arg);
    let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let text = if p.exists() {
        read_input(p, digests)?
    } else {
        match stem.as_str() {
            "case24" | "case24_ieee_rts" => bundled("case24", CASE24, digests),
            "case118" => bundled("case118", CASE118, digests),
            _ => return Err(input_err(format!("case file {arg} not found"))),
        }
    };
    let net = parse_case(&text).with_context(|| format!("parsing case {arg}"))?;
    let diags = validate_network(&net);
    if !diags.is_empty() {
        let list: Vec<String> = diags.iter().map(|d| d.to_string()).collect();
        return Err(input_err(format!("case {arg} is not usable:\n  {}", list.join("\n  "))));
    }
    let id = if stem.starts_with("case24") { "case24".to_string() } else { stem };
    Ok((net, id))
}

fn load_weather(w: &WeatherArgs, section: &ScenarioSection, digests: &mut Vec<InputDigest>) -> Result<WeatherProfile> {
    let path = w.weather.clone().or_else(|| if w.profile.is_some() { None } else { section.weather.clone() });
    if let Some(p) = path {
        let csv = read_input(&p, digests)?;
        return Ok(WeatherProfile::Custom { label: p.display().to_string(), csv });
    }
    let name = w.profile.clone().or_else(|| section.profile.clone()).unwrap_or_else(|| "high_wind".into());
    let profile = WeatherProfile::by_name(&name)
        .ok_or_else(|| input_err(format!("unknown weather profile `{name}` (high_wind, low_wind, slr_ref)")))?;
    digests.push(InputDigest::of(format!("bundled:weather_{name}"), profile_csv(&profile).as_bytes()));
    Ok(profile)
}

fn profile_csv(p: &WeatherProfile) -> String {
    p.series().map(|s| s.to_csv()).unwrap_or_default()
}

fn load_profile(path: Option<&Path>, digests: &mut Vec<InputDigest>) -> Result<LoadProfile> {
    let text = match path {
        Some(p) => read_input(p, digests)?,
        None => bundled("load_profile_rts", LOAD_PROFILE_RTS, digests),
    };
    Ok(LoadProfile::from_csv(&text)?)
}

fn load_conductors(path: Option<&Path>, digests: &mut Vec<InputDigest>) -> Result<ConductorSet> {
    let text = match path {
        Some(p) => read_input(p, digests)?,
        None => bundled("conductor_drake", CONDUCTORS_DRAKE, digests),
    };
    Ok(ConductorSet::from_json(&text)?)
}

/// `12`, `0-23`, `6,12,18` or mixtures like `0-5,12`.
fn parse_hours(s: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bad = || input_err(format!("invalid hour list `{s}`"));
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
                if a > b {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| bad())?),
        }
    }
    if out.is_empty() || out.iter().any(|&h| h >= 24) {
        return Err(input_err(format!("hours must lie in 0..=23, got `{s}`")));
    }
    Ok(out)
}

fn merge_model(cfg: &ConfigFile, m: &ModelArgs) -> Result<(FormulationConfig, SolverConfig)> {
    let mut f = cfg.formulation.clone();
    if let Some(v) = m.theta_max {
        f.theta_max = v;
    }
    if let Some(v) = m.voll {
        f.voll = v;
    }
    if let Some(v) = m.vid_range {
        f.vid_range = v;
    }
    if let Some(v) = m.cost_segments {
        f.cost_segments = v;
    }
    if m.strict_balance {
        f.strict_balance = true;
    }
    if m.fixed_topology {
        f.topology_mode = TopologyMode::Fixed;
    }
    if m.optimized_topology {
        f.topology_mode = TopologyMode::Optimized;
    }
    f.check().map_err(|e| input_err(e.to_string()))?;
    let mut s = cfg.solver.clone();
    if let Some(v) = m.gap {
        s.rel_gap_target = v;
    }
    if let Some(v) = m.time_limit {
        s.time_limit = v;
    }
    if let Some(v) = m.node_limit {
        s.node_limit = v;
    }
    if let Some(b) = m.branching {
        s.branching_rule = match b {
            Branching::MostFractional => BranchingRule::MostFractional,
            Branching::PseudoCost => BranchingRule::PseudoCost,
        };
    }
    s.check().map_err(input_err)?;
    Ok((f, s))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_file(dir: &Path, name: &str, body: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    let p = dir.join(name);
    std::fs::write(&p, body).with_context(|| format!("writing {}", p.display()))?;
    written.push(p);
    Ok(())
}

fn fmt_opt(v: Option<f64>, decimals: usize) -> String {
    v.map_or(String::new(), |v| {
        let s = format!("{v:.decimals$}");
        // no "-0.00" for solver noise
        match s.strip_prefix('-') {
            Some(rest) if rest.bytes().all(|b| b == b'0' || b == b'.') => rest.to_string(),
            _ => s,
        }
    })
}

pub fn run(cli: &Cli, argv: &[String]) -> Result<Outcome> {
    let mut digests = Vec::new();
    let cfg = load_config(cli.config.as_deref(), &mut digests)?;
    match &cli.command {
        Command::Solve(a) => solve(a, &cfg, argv, digests),
        Command::Rate(a) => rate(a, &cfg, argv, digests),
        Command::Sweep(a) => sweep(a, &cfg, argv, digests),
        Command::Report(a) => report(a, argv),
    }
}

fn line_ids(net: &Network, ids: &[u32], what: &str) -> Result<Vec<LineId>> {
    ids.iter()
        .map(|&k| {
            let id = LineId(k);
            net.line_position(id).map(|_| id).ok_or_else(|| input_err(format!("{what}: no line {k} in the case")))
        })
        .collect()
}

fn solve(a: &SolveArgs, cfg: &ConfigFile, argv: &[String], mut digests: Vec<InputDigest>) -> Result<Outcome> {
    let sec = &cfg.scenario;
    let (net, case_id) = load_case(&a.case, &mut digests)?;
    let (fcfg, scfg) = merge_model(cfg, &a.model)?;
    let profile = load_profile(a.model.load_profile.as_deref().or(sec.load_profile.as_deref()), &mut digests)?;
    let weather = load_weather(&a.model.weather, sec, &mut digests)?;
    let conductors = load_conductors(a.model.conductors.as_deref().or(sec.conductors.as_deref()), &mut digests)?;
    let congestion = a.model.congestion.or(sec.congestion_factor).unwrap_or(1.0);
    let horizon = if a.blocks || (a.hour.is_none() && sec.six_hour_blocks == Some(true)) {
        Horizon::SixHourBlocks
    } else {
        match &a.hour {
            Some(h) => Horizon::Hours(parse_hours(h)?),
            None => sec.hours.clone().map_or_else(Horizon::full_day, Horizon::Hours),
        }
    };
    let dlr = line_ids(&net, &a.dlr_lines, "--dlr-lines")?;
    let vid = line_ids(&net, &a.vid_lines, "--vid-lines")?;

    let series = weather.series()?;
    let periods = periods(&horizon, &profile, &series)?;
    let keys: Vec<usize> = periods.iter().map(|p| p.hour).collect();
    // factor 1 leaves the case exactly as given
    let net = if congestion == 1.0 { net } else { congested_network(&net, &periods, congestion, &fcfg, &scfg)? };
    let net = net.equip(&dlr, &vid);
    let period_weather = WeatherSeries::new(periods.iter().map(|p| p.weather).collect())?;
    let ratings = build_rating_series(&net, &period_weather, &conductors, &RatingConditions::slr_reference(), &keys)?;

    ensure_dir(&a.out)?;
    let mut summary = String::from("hour,weight,status,cost_generation,cost_load_shedding,objective,model_bound,gap_pct,nodes\n");
    let mut solutions = Vec::new();
    let mut limit = false;
    let mut timings = Vec::new();
    let (mut c_gen, mut c_ls, mut c_obj) = (0.0, 0.0, 0.0);
    let mut complete = true;
    for p in &periods {
        let (r, sol) = solve_period(&net, p, &ratings, &fcfg, &scfg)?;
        limit |= matches!(r.status, SolveStatus::TimeLimit | SolveStatus::NodeLimit);
        let _ = writeln!(
            summary,
            "{},{},{},{},{},{},{:.4},{},{}",
            r.hour,
            r.weight,
            r.status.label(),
            fmt_opt(r.cost_generation, 4),
            fmt_opt(r.cost_load_shedding, 4),
            fmt_opt(r.objective_total, 4),
            r.best_bound,
            fmt_opt(r.rel_gap.map(|g| 100.0 * g), 4),
            r.nodes
        );
        println!(
            "hour {:>2}: {:<18} C^Gen {:>14}  C^LS {:>12}  C^Obj {:>14}  gap {}%",
            r.hour,
            r.status.label(),
            fmt_opt(r.cost_generation, 2),
            fmt_opt(r.cost_load_shedding, 2),
            fmt_opt(r.objective_total, 2),
            fmt_opt(r.rel_gap.map(|g| 100.0 * g), 4)
        );
        match (r.cost_generation, r.cost_load_shedding, r.objective_total) {
            (Some(g), Some(l), Some(o)) => {
                c_gen += p.weight * g;
                c_ls += p.weight * l;
                c_obj += p.weight * o;
            }
            _ => complete = false,
        }
        timings.push(json!({"hour": r.hour, "seconds": r.wall_time, "nodes": r.nodes}));
        solutions.push(json!({"hour": r.hour, "weight": r.weight, "status": r.status, "rel_gap": r.rel_gap,
            "best_bound": r.best_bound, "solution": sol}));
    }
    if complete {
        println!("total:    C^Gen {c_gen:.2}  C^LS {c_ls:.2}  C^Obj {c_obj:.2}");
    } else {
        println!("total:    incomplete (some periods have no solution)");
    }
    if !complete && !limit {
        return Err(input_err("the model is infeasible for at least one period"));
    }

    let mut written = Vec::new();
    write_file(&a.out, "summary.csv", &summary, &mut written)?;
    write_file(&a.out, "solution.json", &serde_json::to_string_pretty(&solutions)?, &mut written)?;
    write_file(&a.out, "ratings.csv", &ratings.to_csv(), &mut written)?;
    let config = json!({
        "case": case_id,
        "horizon": horizon,
        "congestion_factor": congestion,
        "weather": weather.label(),
        "dlr_lines": dlr,
        "vid_lines": vid,
        "formulation": fcfg,
        "solver": scfg,
    });
    let mut m = RunManifest::new("solve", argv, config, digests);
    m.record(&a.out, &written);
    m.timings = json!(timings);
    m.write(&a.out)?;
    Ok(if limit { Outcome::LimitReached } else { Outcome::Done })
}

fn rate(a: &RateArgs, cfg: &ConfigFile, argv: &[String], mut digests: Vec<InputDigest>) -> Result<Outcome> {
    let sec = &cfg.scenario;
    let weather = load_weather(&a.weather, sec, &mut digests)?;
    let conductors = load_conductors(a.conductors.as_deref().or(sec.conductors.as_deref()), &mut digests)?;
    let series = weather.series()?;
    let slr = RatingConditions::slr_reference();
    let body = match &a.case {
        Some(case) => {
            let (net, _) = load_case(case, &mut digests)?;
            let ids: Vec<LineId> = net.lines.iter().map(|l| l.id).collect();
            let net = net.equip(&ids, &[]);
            let hours: Vec<usize> = series.samples().iter().map(|s| s.hour).collect();
            build_rating_series(&net, &series, &conductors, &slr, &hours)?.to_csv()
        }
        None => {
            let mut s = String::from("hour,temp_c,wind_mps,alpha,i_dlr_a,i_slr_a\n");
            for w in series.samples() {
                let cond = slr.with_weather(w.ambient_temp, w.wind_speed, w.hour as f64 + 0.5);
                let r = rating_factor(&conductors.default, &cond, &slr)?;
                let _ = writeln!(
                    s,
                    "{},{:.3},{:.3},{:.6},{:.3},{:.3}",
                    w.hour, w.ambient_temp, w.wind_speed, r.alpha, r.i_dlr, r.i_slr
                );
            }
            s
        }
    };
    print!("{body}");
    ensure_dir(&a.out)?;
    let mut written = Vec::new();
    write_file(&a.out, "ratings.csv", &body, &mut written)?;
    let config = json!({"weather": weather.label(), "case": a.case, "slr_reference": slr});
    let mut m = RunManifest::new("rate", argv, config, digests);
    m.record(&a.out, &written);
    m.write(&a.out)?;
    Ok(Outcome::Done)
}

fn sweep(a: &SweepArgs, cfg: &ConfigFile, argv: &[String], mut digests: Vec<InputDigest>) -> Result<Outcome> {
    let sec = &cfg.scenario;
    let (network, case_id) = load_case(&a.case, &mut digests)?;
    let (formulation, mut solver) = merge_model(cfg, &a.model)?;
    let profile = load_profile(a.model.load_profile.as_deref().or(sec.load_profile.as_deref()), &mut digests)?;
    let weather = load_weather(&a.model.weather, sec, &mut digests)?;
    let conductors = load_conductors(a.model.conductors.as_deref().or(sec.conductors.as_deref()), &mut digests)?;
    let defaults = ScenarioSpec::default();
    if cli_log_every_unset(cfg) {
        solver.log_every = defaults.solver.log_every;
    }
    let horizon = if a.blocks {
        Horizon::SixHourBlocks
    } else if let Some(h) = &a.hours {
        Horizon::Hours(parse_hours(h)?)
    } else if let Some(h) = &sec.hours {
        Horizon::Hours(h.clone())
    } else if sec.six_hour_blocks == Some(true) || case_id == "case118" {
        Horizon::SixHourBlocks
    } else {
        Horizon::full_day()
    };
    let priority = match a.priority.as_ref().or(sec.priority.as_ref()) {
        Some(ids) => Priority::Explicit(line_ids(&network, ids, "priority")?),
        None => Priority::Auto,
    };
    let spec = ScenarioSpec {
        name: a.name.clone().or_else(|| sec.name.clone()).unwrap_or(defaults.name),
        case_id,
        weather: weather.clone(),
        congestion_factor: a.model.congestion.or(sec.congestion_factor).unwrap_or(defaults.congestion_factor),
        dlr_counts: a.dlr.clone().or_else(|| sec.dlr_counts.clone()).unwrap_or(defaults.dlr_counts),
        vid_counts: a.vid.clone().or_else(|| sec.vid_counts.clone()).unwrap_or(defaults.vid_counts),
        topology_mode: formulation.topology_mode,
        horizon,
        priority,
        loading_cells: sec.loading_cells.clone().unwrap_or(defaults.loading_cells),
        formulation,
        solver,
    };
    let workers = a.workers.or(sec.workers).unwrap_or(1);
    let inputs = ScenarioInputs { network, profile, weather: weather.series()?, conductors };
    ensure_dir(&a.out)?;
    let out = run_sweep(&spec, &inputs, &SweepOptions { workers, out_dir: Some(a.out.clone()) })?;
    let written = out.write_files(&a.out)?;
    print!("{}", out.matrix.to_markdown());

    let mut config = serde_json::to_value(&spec)?;
    // the CSV text of custom weather is digested, not repeated
    if let WeatherProfile::Custom { label, .. } = &spec.weather {
        config["weather"] = json!({ "custom": label });
    }
    config["workers"] = json!(workers);
    let mut m = RunManifest::new("sweep", argv, config, digests);
    m.record(&a.out, &written);
    m.timings = json!(out
        .timings()
        .iter()
        .map(|(d, v, s, n)| json!({"dlr": d, "vid": v, "seconds": s, "nodes": n}))
        .collect::<Vec<_>>());
    m.write(&a.out)?;
    let limited = out.cells.iter().any(|c| matches!(c.status, SolveStatus::TimeLimit | SolveStatus::NodeLimit));
    Ok(if limited { Outcome::LimitReached } else { Outcome::Done })
}

/// Sweeps log nothing per node unless the config asks for it.
fn cli_log_every_unset(cfg: &ConfigFile) -> bool {
    cfg.solver.log_every == SolverConfig::default().log_every
}

fn csv_to_markdown(text: &str) -> Result<String> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut s = format!("| {} |\n|{}\n", header.join(" | "), "---|".repeat(header.len()));
    for rec in rdr.records() {
        let rec = rec?;
        let _ = writeln!(s, "| {} |", rec.iter().collect::<Vec<_>>().join(" | "));
    }
    Ok(s)
}

fn parse_loading_csv(text: &str) -> Result<Vec<LoadingReport>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let mut cells: BTreeMap<(usize, usize), Vec<LoadingRow>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let field = |k: usize| rec.get(k).ok_or_else(|| input_err("short row in loading_report.csv"));
        let num = |k: usize| -> Result<f64> { field(k)?.parse().map_err(|_| input_err("bad number in loading_report.csv")) };
        let cell = (num(0)? as usize, num(1)? as usize);
        cells.entry(cell).or_default().push(LoadingRow {
            line: LineId(num(2)? as u32),
            baseline: num(3)?,
            treated: num(4)?,
            delta: num(5)?,
        });
    }
    Ok(cells
        .into_iter()
        .map(|(cell, rows)| {
            let mean_delta = rows.iter().map(|r| r.delta).sum::<f64>() / rows.len().max(1) as f64;
            LoadingReport { cell, rows, mean_delta }
        })
        .collect())
}

fn report(a: &ReportArgs, argv: &[String]) -> Result<Outcome> {
    let source = RunManifest::read(&a.dir).map_err(|e| input_err(format!("{e:#}")))?;
    let out = a.out.clone().unwrap_or_else(|| a.dir.join("report"));
    ensure_dir(&out)?;
    let mut digests = Vec::new();
    let mut written = Vec::new();
    let mut md = format!("# {} run\n\n", source.command);
    let _ = writeln!(md, "tool version {}, run at {}\n", source.tool_version, source.timestamp);
    match source.command.as_str() {
        "sweep" => {
            let text = read_input(&a.dir.join("cost_matrix.json"), &mut digests)?;
            let matrix: CostMatrix = serde_json::from_str(&text)?;
            let _ = writeln!(
                md,
                "{} ({}), {} topology, congestion factor {}, gap target {}%\n",
                matrix.case_id,
                matrix.weather,
                serde_json::to_value(matrix.topology_mode)?.as_str().unwrap_or("?"),
                matrix.congestion_factor,
                100.0 * matrix.rel_gap_target
            );
            md.push_str("## Cost matrix (10^6 $, change vs. no GETs)\n\n");
            md.push_str(&matrix.to_markdown());
            write_file(&out, "cost_matrix.svg", &cost_heatmap_svg(&matrix), &mut written)?;
            let loading_path = a.dir.join("loading_report.csv");
            if loading_path.exists() {
                let reports = parse_loading_csv(&read_input(&loading_path, &mut digests)?)?;
                if !reports.is_empty() {
                    md.push_str("\n## Mean line loading\n\n| DLR | VID | mean change |\n|---|---|---|\n");
                }
                for r in &reports {
                    let _ = writeln!(md, "| {} | {} | {:+.4} |", r.cell.0, r.cell.1, r.mean_delta);
                    let name = format!("loading_d{}_v{}.svg", r.cell.0, r.cell.1);
                    write_file(&out, &name, &loading_scatter_svg(r), &mut written)?;
                }
            }
        }
        "solve" => {
            let text = read_input(&a.dir.join("summary.csv"), &mut digests)?;
            md.push_str("## Per-period costs ($/h)\n\n");
            md.push_str(&csv_to_markdown(&text)?);
        }
        "rate" => {
            let text = read_input(&a.dir.join("ratings.csv"), &mut digests)?;
            md.push_str("## Ratings\n\n");
            md.push_str(&csv_to_markdown(&text)?);
        }
        other => return Err(input_err(format!("don't know how to report a `{other}` run"))),
    }
    print!("{md}");
    write_file(&out, "report.md", &md, &mut written)?;
    let mut m = RunManifest::new("report", argv, json!({"source": a.dir, "out": out}), digests);
    m.record(&out, &written);
    m.write(&out)?;
    Ok(Outcome::Done)
}
