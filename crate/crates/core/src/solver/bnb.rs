use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::sync::Arc;
use std::time::Instant;

use super::lp::{LpBackend, LpEdit, LpModel, LpStatus, MicroLp};
use super::{relative_gap, BranchingRule, SolveResult, SolveStatus, SolverConfig, SpatialRule};
use crate::formulation::{
    envelope_rows, extract_solution, fix_binaries, nominal_assignment, BinaryVar, Formulation, Sense, VarKind,
};
use crate::relax::{split_term, Axis, BilinearTerm};

/// Branching state of one node: binary fixings (formulation column, value)
/// and the current `(Δb, δ)` box of every VID term.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    pub fixings: Vec<(usize, u8)>,
    pub boxes: Vec<BilinearTerm>,
    /// LP bound inherited from the parent (-inf at the root)
    pub bound: f64,
    pub depth: u32,
}

impl NodeState {
    pub fn root(f: &Formulation) -> Self {
        NodeState {
            fixings: Vec::new(),
            boxes: f.vid.iter().map(|v| v.term).collect(),
            bound: f64::NEG_INFINITY,
            depth: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Relaxation {
    Optimal { bound: f64, point: Vec<f64> },
    Infeasible,
    Failed(String),
}

/// Cold LP model of a node: fixings and boxes as bounds, envelope rows
/// rebuilt for the node's boxes.
pub fn node_model(f: &Formulation, node: &NodeState) -> Option<LpModel> {
    let mut lo: Vec<f64> = f.variables.iter().map(|v| v.lo).collect();
    let mut hi: Vec<f64> = f.variables.iter().map(|v| v.hi).collect();
    for &(j, v) in &node.fixings {
        lo[j] = v as f64;
        hi[j] = v as f64;
    }
    let mut rows: Vec<_> = f.constraints.iter().filter(|c| c.envelope_of.is_none()).cloned().collect();
    for (k, v) in f.vid.iter().enumerate() {
        let (a, b) = node.boxes[k].x_bounds;
        lo[v.delta_b] = lo[v.delta_b].max(a);
        hi[v.delta_b] = hi[v.delta_b].min(b);
        rows.extend(envelope_rows(v, &node.boxes[k], k));
    }
    LpModel::build(f, &lo, &hi, &rows)
}

/// Solves the node relaxation from scratch.
pub fn solve_relaxation(f: &Formulation, node: &NodeState) -> Relaxation {
    let Some(model) = node_model(f, node) else {
        return Relaxation::Infeasible;
    };
    match MicroLp.solve(&Arc::new(model)) {
        LpStatus::Optimal { objective, x, .. } => Relaxation::Optimal { bound: objective, point: x },
        LpStatus::Infeasible => Relaxation::Infeasible,
        LpStatus::Failed(m) => Relaxation::Failed(m),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Children {
    /// children fixing the column to 0 and to 1
    Binary { col: usize, value: f64, children: [NodeState; 2] },
    /// children with the box of `term` cut at `at` along `axis`
    /// (`X` is `Δb`, `Y` is the angle difference)
    Spatial { term: usize, axis: Axis, at: f64, children: [NodeState; 2] },
}

fn fractionality(x: f64) -> f64 {
    (x - x.floor()).min(x.ceil() - x)
}

fn fractional_binaries(f: &Formulation, point: &[f64], tol: f64) -> Vec<usize> {
    f.binaries().map(|(j, _)| j).filter(|&j| fractionality(point[j]) > tol).collect()
}

fn in_service(f: &Formulation, k: usize, point: &[f64]) -> bool {
    f.binary_value(BinaryVar::Line(f.vid[k].line), point).is_none_or(|v| v > 0.5)
}

/// Distance from `w` to the products reachable by moving `Δb` inside its
/// box at the current angle difference. Zero means the point can be made
/// exact by changing `Δb` alone, which appears in no other row.
pub fn residual(term: &BilinearTerm, delta: f64, w: f64) -> f64 {
    let (a, b) = (term.x_bounds.0 * delta, term.x_bounds.1 * delta);
    (a.min(b) - w).max(w - a.max(b)).max(0.0)
}

fn term_residual(f: &Formulation, node: &NodeState, point: &[f64], k: usize) -> f64 {
    let v = &f.vid[k];
    if !in_service(f, k, point) {
        return 0.0;
    }
    residual(&node.boxes[k], point[v.theta_from] - point[v.theta_to], point[v.product])
}

/// `(term, residual)` with the largest residual, lowest index on ties.
fn worst_term(f: &Formulation, node: &NodeState, point: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for k in 0..f.vid.len() {
        let r = term_residual(f, node, point, k);
        if best.is_none_or(|(_, b)| r > b) {
            best = Some((k, r));
        }
    }
    best
}

/// Copy of `point` with every `Δb` moved to `w/δ` (clamped to its box).
fn snap(f: &Formulation, node: &NodeState, point: &[f64]) -> Vec<f64> {
    let mut x = point.to_vec();
    for (k, v) in f.vid.iter().enumerate() {
        let (lo, hi) = node.boxes[k].x_bounds;
        let delta = x[v.theta_from] - x[v.theta_to];
        if delta.abs() > 1e-12 {
            x[v.delta_b] = (x[v.product] / delta).clamp(lo, hi);
        } else {
            x[v.delta_b] = x[v.delta_b].clamp(lo, hi);
        }
    }
    x
}

fn split_point(lo: f64, hi: f64, at: f64) -> f64 {
    let margin = 0.2 * (hi - lo);
    at.clamp(lo + margin, hi - margin)
}

fn spatial_children(
    f: &Formulation,
    node: &NodeState,
    point: &[f64],
    k: usize,
    rule: SpatialRule,
) -> Result<Children, String> {
    let t = &node.boxes[k];
    let (axis, at) = match rule {
        SpatialRule::AngleSign if t.y_bounds.0 < 0.0 && t.y_bounds.1 > 0.0 => (Axis::Y, 0.0),
        _ => {
            let (lo, hi) = t.x_bounds;
            (Axis::X, split_point(lo, hi, point[f.vid[k].delta_b]))
        }
    };
    let (a, b) = split_term(t, axis, at).map_err(|e| e.to_string())?;
    let mut left = node.clone();
    let mut right = node.clone();
    left.boxes[k] = a;
    right.boxes[k] = b;
    for c in [&mut left, &mut right] {
        c.depth += 1;
    }
    Ok(Children::Spatial { term: k, axis, at, children: [left, right] })
}

fn binary_children(node: &NodeState, col: usize, value: f64) -> Children {
    let mut children = [node.clone(), node.clone()];
    for (v, c) in children.iter_mut().enumerate() {
        c.fixings.push((col, v as u8));
        c.depth += 1;
    }
    Children::Binary { col, value, children }
}

/// Most-fractional binary branching; on integral points, a split of the VID
/// box with the largest residual according to `cfg.spatial_rule`.
pub fn branch(f: &Formulation, node: &NodeState, point: &[f64], cfg: &SolverConfig) -> Result<Children, String> {
    let frac = fractional_binaries(f, point, cfg.integer_tol);
    if let Some(&col) = frac.iter().max_by(|&&a, &&b| {
        fractionality(point[a]).total_cmp(&fractionality(point[b])).then(b.cmp(&a))
    }) {
        return Ok(binary_children(node, col, point[col]));
    }
    match worst_term(f, node, point) {
        Some((k, r)) if r > cfg.envelope_tol => spatial_children(f, node, point, k, cfg.spatial_rule),
        _ => Err("point is integral and every product is exact; nothing to branch on".into()),
    }
}

#[derive(Default, Clone, Copy)]
struct Pseudo {
    sum: [f64; 2],
    count: [u32; 2],
}

struct Open<W> {
    id: u64,
    state: NodeState,
    warm: Option<Arc<W>>,
    edits: Vec<LpEdit>,
    /// (column, went up, fractional distance, parent objective)
    origin: Option<(usize, bool, f64, f64)>,
}

impl<W> PartialEq for Open<W> {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl<W> Eq for Open<W> {}
impl<W> PartialOrd for Open<W> {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl<W> Ord for Open<W> {
    // max-heap: smaller bound first, then smaller id
    fn cmp(&self, o: &Self) -> Ordering {
        o.state.bound.total_cmp(&self.state.bound).then(o.id.cmp(&self.id))
    }
}

pub(super) struct Search<'a, B: LpBackend> {
    backend: &'a B,
    f: &'a Formulation,
    cfg: &'a SolverConfig,
    start: Instant,
    deadline: f64,
    heap: BinaryHeap<Open<B::Warm>>,
    next_id: u64,
    incumbent: Option<(f64, Vec<f64>)>,
    /// lowest bound among nodes closed without further branching
    closed_bound: f64,
    unresolved_bound: f64,
    unresolved: usize,
    explored: usize,
    lp_solves: usize,
    regressions: usize,
    pseudo: BTreeMap<usize, Pseudo>,
    /// `P_l` column of every VID term
    flow_cols: Vec<usize>,
}

impl<'a, B: LpBackend> Search<'a, B> {
    pub(super) fn new(backend: &'a B, f: &'a Formulation, cfg: &'a SolverConfig) -> Self {
        Search {
            backend,
            f,
            cfg,
            start: Instant::now(),
            deadline: cfg.time_limit,
            heap: BinaryHeap::new(),
            next_id: 0,
            incumbent: None,
            closed_bound: f64::INFINITY,
            unresolved_bound: f64::INFINITY,
            unresolved: 0,
            explored: 0,
            lp_solves: 0,
            regressions: 0,
            pseudo: BTreeMap::new(),
            flow_cols: f.vid.iter().map(|v| f.var_index(VarKind::LineFlow(v.line)).expect("VID line has a flow")).collect(),
        }
    }

    fn elapsed(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    fn cutoff(&self) -> f64 {
        match &self.incumbent {
            Some((v, _)) => v - 1e-9 * v.abs().max(1.0),
            None => f64::INFINITY,
        }
    }

    fn best_bound(&self) -> f64 {
        let open = self.heap.peek().map_or(f64::INFINITY, |n| n.state.bound);
        let inc = self.incumbent.as_ref().map_or(f64::INFINITY, |(v, _)| *v);
        open.min(self.closed_bound).min(self.unresolved_bound).min(inc)
    }

    fn gap(&self) -> Option<f64> {
        self.incumbent.as_ref().map(|(v, _)| relative_gap(*v, self.best_bound()))
    }

    /// Worst scaled violation of the true (non-relaxed) problem.
    fn true_violation(&self, x: &[f64]) -> f64 {
        let f = self.f;
        let mut worst: f64 = 0.0;
        for c in f.constraints.iter().filter(|c| c.envelope_of.is_none()) {
            let scale = c.coeffs.iter().fold(1.0f64, |m, &(_, a)| m.max(a.abs()));
            worst = worst.max(c.violation(x) / scale);
        }
        for (j, v) in f.variables.iter().enumerate() {
            worst = worst.max(v.lo - x[j]).max(x[j] - v.hi);
            if v.is_binary() {
                worst = worst.max(fractionality(x[j]));
            }
        }
        for (k, v) in f.vid.iter().enumerate() {
            if in_service(f, k, x) {
                let delta = x[v.theta_from] - x[v.theta_to];
                let exact = (v.susceptance + x[v.delta_b]) * delta;
                worst = worst.max((exact - x[self.flow_cols[k]]).abs() / v.susceptance.abs().max(1.0));
            }
        }
        worst
    }

    fn offer(&mut self, x: Vec<f64>) -> bool {
        if self.true_violation(&x) > self.cfg.feasibility_tol {
            return false;
        }
        let obj = self.f.objective.value(&x);
        if self.incumbent.as_ref().is_none_or(|(v, _)| obj < *v - 1e-12 * v.abs().max(1.0)) {
            log::debug!("incumbent {obj:.6} at node {}", self.explored);
            self.incumbent = Some((obj, x));
            return true;
        }
        false
    }

    fn solve_cold(&mut self, state: &NodeState) -> LpStatus<B::Warm> {
        self.lp_solves += 1;
        match node_model(self.f, state) {
            None => LpStatus::Infeasible,
            Some(m) => self.backend.solve(&Arc::new(m)),
        }
    }

    fn node_violation(&self, state: &NodeState, x: &[f64]) -> f64 {
        match node_model(self.f, state) {
            None => f64::INFINITY,
            Some(m) => m.max_violation(x),
        }
    }

    fn solve_node(&mut self, node: &Open<B::Warm>) -> LpStatus<B::Warm> {
        if let Some(w) = &node.warm {
            self.lp_solves += 1;
            match self.backend.resolve(w, &node.edits) {
                LpStatus::Optimal { objective, x, warm } => {
                    if self.node_violation(&node.state, &x) <= 1e-6 {
                        return LpStatus::Optimal { objective, x, warm };
                    }
                    log::debug!("node {}: warm solution off by more than 1e-6, re-solving cold", node.id);
                }
                LpStatus::Infeasible => return LpStatus::Infeasible,
                LpStatus::Failed(m) => log::debug!("node {}: warm re-solve failed ({m}), re-solving cold", node.id),
            }
        }
        match self.solve_cold(&node.state) {
            LpStatus::Optimal { objective, x, warm } if self.node_violation(&node.state, &x) > 1e-5 => {
                let _ = (objective, warm);
                LpStatus::Failed(format!("node {} LP point violates its rows", node.id))
            }
            other => other,
        }
    }

    /// Exact LP with binaries rounded and every `Δb` pinned at its value in
    /// `x` (callers pass a snapped point).
    fn repair(&mut self, state: &NodeState, x: &[f64], warm: Option<&Arc<B::Warm>>) -> Option<Vec<f64>> {
        let f = self.f;
        let mut fixed = state.clone();
        for (j, _) in f.binaries() {
            if !state.fixings.iter().any(|&(c, _)| c == j) {
                fixed.fixings.push((j, x[j].round() as u8));
            }
        }
        for (k, v) in f.vid.iter().enumerate() {
            let (lo, hi) = state.boxes[k].x_bounds;
            let c = x[v.delta_b].clamp(lo, hi);
            fixed.boxes[k].x_bounds = (c, c);
        }
        if let Some(w) = warm {
            let mut edits: Vec<LpEdit> =
                fixed.fixings[state.fixings.len()..].iter().map(|&(j, v)| LpEdit::Fix(j, v as f64)).collect();
            for (k, v) in f.vid.iter().enumerate() {
                let c = fixed.boxes[k].x_bounds.0;
                edits.push(LpEdit::Fix(v.delta_b, c));
                edits.push(LpEdit::Row(
                    vec![(v.product, 1.0), (v.theta_from, -c), (v.theta_to, c)],
                    Sense::Eq,
                    0.0,
                ));
            }
            self.lp_solves += 1;
            if let LpStatus::Optimal { x, .. } = self.backend.resolve(w, &edits) {
                if self.true_violation(&x) <= self.cfg.feasibility_tol {
                    return Some(x);
                }
            }
        }
        match self.solve_cold(&fixed) {
            LpStatus::Optimal { x, .. } => Some(x),
            _ => None,
        }
    }

    fn seed(&mut self) {
        let f = self.f;
        let free: BTreeMap<_, _> = nominal_assignment(f);
        let Ok(fixed) = fix_binaries(f, &free) else {
            log::warn!("nominal topology is inconsistent with the formulation; no seed");
            return;
        };
        let mut cfg = self.cfg.clone();
        cfg.seed_nominal = false;
        cfg.time_limit = (self.deadline - self.elapsed()).max(1e-3);
        let inner = Search::new(self.backend, &fixed, &cfg).run_raw();
        self.lp_solves += inner.lp_solves;
        if let Some((_, xs)) = inner.incumbent {
            let target = f.index_map();
            let mut x = vec![0.0; f.variables.len()];
            for (j, v) in fixed.variables.iter().enumerate() {
                x[target[&v.kind]] = xs[j];
            }
            for (b, v) in &free {
                x[target[&VarKind::Binary(*b)]] = *v as f64;
            }
            if self.offer(x) {
                log::debug!("seeded incumbent from nominal topology");
            }
        }
    }

    fn push(&mut self, state: NodeState, warm: Option<Arc<B::Warm>>, edits: Vec<LpEdit>, origin: Option<(usize, bool, f64, f64)>) {
        let id = self.next_id;
        self.next_id += 1;
        let warm = if self.heap.len() < self.cfg.max_warm_nodes && self.cfg.warm_start { warm } else { None };
        self.heap.push(Open { id, state, warm, edits, origin });
    }

    fn score(&self, col: usize, x: f64) -> f64 {
        let frac_down = x - x.floor();
        let frac_up = x.ceil() - x;
        let avg = |dir: usize| {
            let known: Vec<f64> = self
                .pseudo
                .values()
                .filter(|p| p.count[dir] > 0)
                .map(|p| p.sum[dir] / p.count[dir] as f64)
                .collect();
            if known.is_empty() {
                1.0
            } else {
                known.iter().sum::<f64>() / known.len() as f64
            }
        };
        let p = self.pseudo.get(&col).copied().unwrap_or_default();
        let est = |dir: usize| if p.count[dir] > 0 { p.sum[dir] / p.count[dir] as f64 } else { avg(dir) };
        (est(0) * frac_down).max(1e-6) * (est(1) * frac_up).max(1e-6)
    }

    fn choose(&self, state: &NodeState, x: &[f64]) -> Result<Children, String> {
        if self.cfg.branching_rule == BranchingRule::PseudoCost {
            let frac = fractional_binaries(self.f, x, self.cfg.integer_tol);
            if let Some(&col) =
                frac.iter().max_by(|&&a, &&b| self.score(a, x[a]).total_cmp(&self.score(b, x[b])).then(b.cmp(&a)))
            {
                return Ok(binary_children(state, col, x[col]));
            }
        }
        branch(self.f, state, x, self.cfg)
    }

    fn run_raw(mut self) -> RawOutcome {
        let root = NodeState::root(self.f);
        self.push(root, None, Vec::new(), None);
        if self.f.binary_count() > 0 && self.cfg.seed_nominal {
            self.seed();
        }
        let mut status = None;
        let mut since_plunge = 0usize;
        let mut dive: Option<Open<B::Warm>> = None;
        loop {
            let (node, diving) = match dive.take() {
                Some(n) => (n, true),
                None => match self.heap.pop() {
                    Some(n) => (n, false),
                    None => break,
                },
            };
            if node.state.bound >= self.cutoff() {
                continue;
            }
            if self.elapsed() >= self.deadline {
                self.heap.push(node);
                status = Some(SolveStatus::TimeLimit);
                break;
            }
            if self.explored >= self.cfg.node_limit {
                self.heap.push(node);
                status = Some(SolveStatus::NodeLimit);
                break;
            }
            self.explored += 1;
            if self.cfg.log_every > 0 && self.explored.is_multiple_of(self.cfg.log_every) {
                self.log_progress();
            }
            let (objective, x, warm) = match self.solve_node(&node) {
                LpStatus::Optimal { objective, x, warm } => (objective, x, warm),
                LpStatus::Infeasible => continue,
                LpStatus::Failed(m) => {
                    log::warn!("node {}: LP failed ({m}); keeping parent bound {}", node.id, node.state.bound);
                    self.unresolved += 1;
                    self.unresolved_bound = self.unresolved_bound.min(node.state.bound);
                    continue;
                }
            };
            let parent = node.state.bound;
            if parent.is_finite() && objective < parent - 1e-6 * parent.abs().max(1.0) {
                self.regressions += 1;
                log::debug!("node {}: bound {objective} below parent {parent}", node.id);
            }
            if let Some((col, up, dist, pobj)) = node.origin {
                let e = self.pseudo.entry(col).or_default();
                let d = up as usize;
                e.sum[d] += (objective - pobj).max(0.0) / dist.max(1e-6);
                e.count[d] += 1;
            }
            let bound = objective.max(parent);
            let mut state = node.state;
            state.bound = bound;
            if bound >= self.cutoff() {
                continue;
            }
            let warm = Arc::new(warm);
            let frac = fractional_binaries(self.f, &x, self.cfg.integer_tol);
            if frac.is_empty() {
                let worst = worst_term(self.f, &state, &x).map_or(0.0, |(_, r)| r);
                let snapped = snap(self.f, &state, &x);
                if worst <= self.cfg.envelope_tol {
                    // the relaxation is exact here: the snapped point is
                    // optimal for the whole subtree
                    if !self.offer(snapped) && bound < self.cutoff() {
                        self.closed_bound = self.closed_bound.min(bound);
                    }
                    continue;
                }
                let local = match self.repair(&state, &snapped, Some(&warm)) {
                    Some(r) => {
                        let v = self.f.objective.value(&r);
                        self.offer(r);
                        Some(v)
                    }
                    None => None,
                };
                if local.is_some_and(|v| relative_gap(v, bound) <= 0.1 * self.cfg.rel_gap_target) {
                    if bound < self.cutoff() {
                        self.closed_bound = self.closed_bound.min(bound);
                    }
                    continue;
                }
            }
            let children = match self.choose(&state, &x) {
                Ok(c) => c,
                Err(m) => {
                    log::debug!("node {}: {m}", node.id);
                    self.closed_bound = self.closed_bound.min(bound);
                    continue;
                }
            };
            since_plunge += 1;
            let plunge = self.cfg.plunge_every > 0 && (diving || since_plunge >= self.cfg.plunge_every);
            let (prefer, pair) = match children {
                Children::Binary { col, value, children } => {
                    let [down, up] = children;
                    let f_down = value - value.floor();
                    let make = |s: NodeState, v: u8| (s, vec![LpEdit::Fix(col, v as f64)], Some((col, v == 1, if v == 1 { 1.0 - f_down } else { f_down }, objective)));
                    (if value >= 0.5 { 1 } else { 0 }, [make(down, 0), make(up, 1)])
                }
                Children::Spatial { term, axis, at, children } => {
                    let [left, right] = children;
                    let v = &self.f.vid[term];
                    let rows = |s: &NodeState, sense: Sense| {
                        let mut e = Vec::with_capacity(7);
                        if axis == Axis::X {
                            e.push(LpEdit::Row(vec![(v.delta_b, 1.0)], sense, at));
                        }
                        for r in envelope_rows(v, &s.boxes[term], term) {
                            e.push(LpEdit::Row(r.coeffs, r.sense, r.rhs));
                        }
                        e
                    };
                    let el = rows(&left, Sense::Le);
                    let er = rows(&right, Sense::Ge);
                    let here = match axis {
                        Axis::X => x[v.delta_b],
                        Axis::Y => x[v.theta_from] - x[v.theta_to],
                    };
                    (if here >= at { 1 } else { 0 }, [(left, el, None), (right, er, None)])
                }
            };
            let mut pair = pair.into_iter().enumerate().collect::<Vec<_>>();
            if plunge {
                since_plunge = 0;
                let (_, (s, e, o)) = pair.remove(prefer);
                let id = self.next_id;
                self.next_id += 1;
                for (_, (s2, e2, o2)) in pair {
                    self.push(s2, Some(warm.clone()), e2, o2);
                }
                dive = Some(Open { id, state: s, warm: Some(warm), edits: e, origin: o });
            } else {
                for (_, (s, e, o)) in pair {
                    self.push(s, Some(warm.clone()), e, o);
                }
            }
            if let Some(g) = self.gap() {
                if g <= self.cfg.rel_gap_target && dive.is_none() {
                    status = Some(SolveStatus::OptimalWithinGap);
                    break;
                }
            }
        }
        let bound = self.best_bound();
        let status = match (status, &self.incumbent) {
            (Some(SolveStatus::OptimalWithinGap), _) => SolveStatus::OptimalWithinGap,
            (Some(s), _) if self.gap().is_none_or(|g| g > self.cfg.rel_gap_target) => s,
            (_, Some(_)) => SolveStatus::OptimalWithinGap,
            (None, None) if self.unresolved > 0 => SolveStatus::NodeLimit,
            (None, None) => SolveStatus::Infeasible,
            (Some(s), None) => s,
        };
        if self.cfg.log_every > 0 {
            self.log_progress();
        }
        RawOutcome {
            status,
            incumbent: self.incumbent,
            best_bound: bound,
            explored: self.explored,
            lp_solves: self.lp_solves,
            regressions: self.regressions,
            unresolved: self.unresolved,
        }
    }

    fn log_progress(&self) {
        let inc = self.incumbent.as_ref().map_or("-".to_string(), |(v, _)| format!("{v:.6}"));
        let gap = self.gap().map_or("-".to_string(), |g| format!("{:.4}%", 100.0 * g));
        log::info!(
            "nodes={} open={} bound={:.6} incumbent={} gap={}",
            self.explored,
            self.heap.len(),
            self.best_bound(),
            inc,
            gap
        );
    }

    pub(super) fn run(self) -> SolveResult {
        let f = self.f;
        let start = self.start;
        let raw = self.run_raw();
        let incumbent = raw.incumbent.as_ref().map(|(_, x)| extract_solution(f, x));
        let best_bound = match &raw.incumbent {
            Some((v, _)) => raw.best_bound.min(*v),
            None => raw.best_bound,
        };
        SolveResult {
            status: raw.status,
            rel_gap: raw.incumbent.as_ref().map(|(v, _)| relative_gap(*v, best_bound)),
            incumbent,
            best_bound,
            nodes_explored: raw.explored,
            lp_solves: raw.lp_solves,
            wall_time: start.elapsed().as_secs_f64(),
            bound_regressions: raw.regressions,
            unresolved_nodes: raw.unresolved,
        }
    }
}

struct RawOutcome {
    status: SolveStatus,
    incumbent: Option<(f64, Vec<f64>)>,
    best_bound: f64,
    explored: usize,
    lp_solves: usize,
    regressions: usize,
    unresolved: usize,
}
