use serde::{Deserialize, Serialize};

use super::*;
use crate::network::{DemandId, GenId, SubstationId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenDispatch {
    pub id: GenId,
    pub p_mw: f64,
    /// 1 or 2
    pub busbar: u8,
    /// $/h from the quadratic curve
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadService {
    pub id: DemandId,
    pub demand_mw: f64,
    pub served_mw: f64,
    pub shed_mw: f64,
    pub busbar: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineReport {
    pub id: LineId,
    pub flow_mw: f64,
    pub limit_mw: f64,
    /// |flow| / limit
    pub loading: f64,
    pub in_service: bool,
    pub from_busbar: u8,
    pub to_busbar: u8,
    /// per-unit susceptance deviation, VID lines only
    pub delta_b: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TopologyReport {
    /// substations whose coupler is open
    pub split_substations: Vec<SubstationId>,
    pub open_lines: Vec<LineId>,
    /// elements attached to busbar 2, e.g. `gen3`, `line7:to`
    pub busbar2_elements: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub tag: Tag,
    /// row index, absent for bounds and the exact product check
    pub row: Option<usize>,
    pub amount: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionPoint {
    pub values: Vec<f64>,
    /// quadratic generation cost plus shedding cost, $/h
    pub objective_total: f64,
    pub cost_generation: f64,
    /// generation cost as seen by the piecewise-linear surrogate
    pub cost_generation_pwl: f64,
    pub pwl_gap: f64,
    pub cost_load_shedding: f64,
    /// the formulation's own objective at `values`
    pub objective_model: f64,
    pub generators: Vec<GenDispatch>,
    pub loads: Vec<LoadService>,
    pub lines: Vec<LineReport>,
    pub topology: TopologyReport,
    pub violations: Vec<Violation>,
}

pub const FEASIBILITY_TOL: f64 = 1e-6;

fn busbar(on_two: Option<f64>) -> u8 {
    if on_two.unwrap_or(0.0) >= 0.5 {
        2
    } else {
        1
    }
}

/// Reads a raw point back into network terms and checks it against every row,
/// every bound and the exact product on in-service VID lines.
pub fn extract_solution(f: &Formulation, raw: &[f64]) -> SolutionPoint {
    extract_solution_with_tol(f, raw, FEASIBILITY_TOL)
}

pub fn extract_solution_with_tol(f: &Formulation, raw: &[f64], tol: f64) -> SolutionPoint {
    assert_eq!(raw.len(), f.variables.len(), "point length must match the formulation");
    let net = &f.network;
    let base = net.base_mva;
    let idx = f.index_map();
    let val = |k: VarKind| idx.get(&k).map(|&j| raw[j]).unwrap_or(0.0);
    let bin = |b: BinaryVar| f.binary_value(b, raw);

    let mut generators = Vec::with_capacity(net.generators.len());
    for (g, gen) in net.generators.iter().enumerate() {
        let p = (val(VarKind::GenBus(g, 0)) + val(VarKind::GenBus(g, 1))) * base;
        generators.push(GenDispatch { id: gen.id, p_mw: p, busbar: busbar(bin(BinaryVar::Gen(g))), cost: gen.cost(p) });
    }
    let mut loads = Vec::with_capacity(net.demands.len());
    for (d, dem) in net.demands.iter().enumerate() {
        let served = (val(VarKind::DemandBus(d, 0)) + val(VarKind::DemandBus(d, 1))) * base;
        loads.push(LoadService {
            id: dem.id,
            demand_mw: dem.p_max_nominal,
            served_mw: served,
            shed_mw: dem.p_max_nominal - served,
            busbar: busbar(bin(BinaryVar::Demand(d))),
        });
    }
    let mut lines = Vec::with_capacity(net.lines.len());
    let mut topology = TopologyReport::default();
    for (l, line) in net.lines.iter().enumerate() {
        let flow = val(VarKind::LineFlow(l)) * base;
        let limit = f.meta.line_limits[l];
        let in_service = bin(BinaryVar::Line(l)).unwrap_or(1.0) >= 0.5;
        if !in_service {
            topology.open_lines.push(line.id);
        }
        let ends = End::BOTH.map(|e| busbar(bin(BinaryVar::LineEnd(l, e))));
        for (e, &bb) in End::BOTH.iter().zip(&ends) {
            if bb == 2 {
                topology.busbar2_elements.push(format!("{}:{}", line.id, e.short()));
            }
        }
        lines.push(LineReport {
            id: line.id,
            flow_mw: flow,
            limit_mw: limit,
            loading: flow.abs() / limit,
            in_service,
            from_busbar: ends[0],
            to_busbar: ends[1],
            delta_b: idx.get(&VarKind::SusceptanceDev(l)).map(|&j| raw[j]),
        });
    }
    for (s, sub) in net.substations.iter().enumerate() {
        if bin(BinaryVar::Busbar(s)).unwrap_or(1.0) < 0.5 {
            topology.split_substations.push(sub.id);
        }
    }
    for g in &generators {
        if g.busbar == 2 {
            topology.busbar2_elements.push(g.id.to_string());
        }
    }
    for d in &loads {
        if d.busbar == 2 {
            topology.busbar2_elements.push(d.id.to_string());
        }
    }

    let cost_generation: f64 = generators.iter().map(|g| g.cost).sum();
    let cost_generation_pwl: f64 = net
        .generators
        .iter()
        .zip(&f.meta.breakpoints)
        .map(|(g, bp)| g.cost(bp[0]))
        .sum::<f64>()
        + f.objective.terms.iter().filter(|t| t.tag == Tag::GenCost).map(|t| t.coef * raw[t.var]).sum::<f64>();
    let cost_load_shedding = f.meta.config.voll * loads.iter().map(|d| d.shed_mw).sum::<f64>();

    let mut violations = Vec::new();
    for (r, c) in f.constraints.iter().enumerate() {
        let scale = c.coeffs.iter().fold(1.0f64, |m, &(_, a)| m.max(a.abs()));
        let v = c.violation(raw);
        if v > tol * scale {
            violations.push(Violation { tag: c.tag, row: Some(r), amount: v, detail: format!("{:?} {}", c.sense, c.rhs) });
        }
    }
    for (j, v) in f.variables.iter().enumerate() {
        let x = raw[j];
        if x < v.lo - tol || x > v.hi + tol || !x.is_finite() {
            violations.push(Violation {
                tag: Tag::DlrLimit,
                row: None,
                amount: (v.lo - x).max(x - v.hi),
                detail: format!("{} = {x} outside [{}, {}]", f.var_name(j), v.lo, v.hi),
            });
        }
    }
    for v in &f.vid {
        if !lines[v.line].in_service {
            continue;
        }
        let delta = raw[v.theta_from] - raw[v.theta_to];
        let exact = (v.susceptance + raw[v.delta_b]) * delta;
        let gap = (exact - raw[idx[&VarKind::LineFlow(v.line)]]).abs();
        if gap > tol * v.susceptance.abs().max(1.0) {
            violations.push(Violation {
                tag: Tag::VidSusceptance,
                row: None,
                amount: gap,
                detail: format!("{}: exact product flow differs", net.lines[v.line].id),
            });
        }
    }

    SolutionPoint {
        values: raw.to_vec(),
        objective_total: cost_generation + cost_load_shedding,
        cost_generation,
        cost_generation_pwl,
        pwl_gap: cost_generation_pwl - cost_generation,
        cost_load_shedding,
        objective_model: f.objective.value(raw),
        generators,
        loads,
        lines,
        topology,
        violations,
    }
}

impl SolutionPoint {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}
