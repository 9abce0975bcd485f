//! Branch-and-bound over topology binaries with spatial branching on the
//! VID boxes.
//!
//! The search is serial and deterministic: nodes are explored best-first by
//! `(bound, node id)` with a depth-first plunge every `plunge_every` nodes.
//! Parallelism lives one level up (independent hours and sweep cells).
//!
//! Progress is logged at `info` level every `log_every` nodes as
//! `nodes=<n> open=<n> bound=<f> incumbent=<f|-> gap=<pct|->`.

mod bnb;
pub mod lp;

use serde::{Deserialize, Serialize};

use crate::formulation::{Formulation, SolutionPoint};

pub use bnb::{branch, node_model, residual, solve_relaxation, Children, NodeState, Relaxation};
pub use lp::{LpBackend, MicroLp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchingRule {
    MostFractional,
    PseudoCost,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpatialRule {
    /// bisect `Δb` of the worst term at its LP value
    MaxViolation,
    /// split the worst term's angle box at zero while it straddles zero,
    /// then fall back to `MaxViolation`
    AngleSign,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub rel_gap_target: f64,
    /// seconds
    pub time_limit: f64,
    pub node_limit: usize,
    pub branching_rule: BranchingRule,
    pub spatial_rule: SpatialRule,
    /// scaled row tolerance for accepting an incumbent
    pub feasibility_tol: f64,
    pub integer_tol: f64,
    /// per-unit residual of a product term below which it is not branched on
    pub envelope_tol: f64,
    pub log_every: usize,
    pub plunge_every: usize,
    /// seed the incumbent with the nominal topology when binaries are free
    pub seed_nominal: bool,
    pub warm_start: bool,
    /// open nodes beyond which children stop keeping a warm basis
    pub max_warm_nodes: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rel_gap_target: 0.005,
            time_limit: 1800.0,
            node_limit: 1_000_000,
            branching_rule: BranchingRule::MostFractional,
            spatial_rule: SpatialRule::AngleSign,
            feasibility_tol: 1e-6,
            integer_tol: 1e-6,
            envelope_tol: 1e-7,
            log_every: 200,
            plunge_every: 20,
            seed_nominal: true,
            warm_start: true,
            max_warm_nodes: 2000,
        }
    }
}

impl SolverConfig {
    pub fn check(&self) -> Result<(), String> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !pos(self.rel_gap_target) {
            return Err("rel_gap_target must be positive".into());
        }
        if !(pos(self.feasibility_tol) && pos(self.integer_tol) && pos(self.envelope_tol)) {
            return Err("tolerances must be positive".into());
        }
        if !(self.time_limit > 0.0) {
            return Err("time_limit must be positive".into());
        }
        if self.integer_tol >= 0.5 {
            return Err("integer_tol must be below 0.5".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    OptimalWithinGap,
    Infeasible,
    TimeLimit,
    NodeLimit,
}

impl SolveStatus {
    pub fn label(self) -> &'static str {
        match self {
            SolveStatus::OptimalWithinGap => "optimal_within_gap",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::TimeLimit => "time_limit",
            SolveStatus::NodeLimit => "node_limit",
        }
    }
}

/// Outcome of [`run`]. Gap and bound refer to the formulation objective
/// (piecewise-linear generation cost plus shedding), i.e.
/// `incumbent.objective_model`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub incumbent: Option<SolutionPoint>,
    pub best_bound: f64,
    /// absent without an incumbent
    pub rel_gap: Option<f64>,
    pub nodes_explored: usize,
    pub lp_solves: usize,
    /// seconds
    pub wall_time: f64,
    /// children whose LP bound fell below the parent's (numerical noise)
    pub bound_regressions: usize,
    /// nodes whose LP could not be solved even cold; their parent bound is
    /// kept in `best_bound`
    pub unresolved_nodes: usize,
}

impl SolveResult {
    pub fn objective(&self) -> Option<f64> {
        self.incumbent.as_ref().map(|s| s.objective_model)
    }
}

/// Relative gap with the denominator guarded away from zero.
pub fn relative_gap(incumbent: f64, bound: f64) -> f64 {
    ((incumbent - bound) / incumbent.abs().max(1e-9)).max(0.0)
}

pub fn run(f: &Formulation, cfg: &SolverConfig) -> SolveResult {
    run_with(&MicroLp, f, cfg)
}

pub fn run_with<B: LpBackend>(backend: &B, f: &Formulation, cfg: &SolverConfig) -> SolveResult {
    bnb::Search::new(backend, f, cfg).run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case_io::{parse_case, tests::TRIANGLE};
    use crate::dlr::RatingSeries;
    use crate::formulation::{build, nominal_assignment, BinaryVar, FormulationConfig, TopologyMode};
    use crate::network::{LineId, Network};

    fn formulate(net: &Network, mode: TopologyMode) -> Formulation {
        let cfg = FormulationConfig { topology_mode: mode, ..Default::default() };
        build(net, &RatingSeries::static_only(net, &[0]), &cfg, 0).unwrap()
    }

    fn quiet() -> SolverConfig {
        SolverConfig { log_every: 0, ..Default::default() }
    }

    #[test]
    fn fixed_triangle_is_a_plain_dispatch() {
        let net = parse_case(TRIANGLE).unwrap();
        let r = run(&formulate(&net, TopologyMode::Fixed), &quiet());
        assert_eq!(r.status, SolveStatus::OptimalWithinGap);
        let s = r.incumbent.unwrap();
        assert!(s.is_feasible(), "{:?}", s.violations);
        assert!((s.generators[0].p_mw - 100.0).abs() < 1e-6);
        // equal reactance on both paths: 50 MW each
        assert!((s.lines[2].flow_mw - 50.0).abs() < 1e-6);
        assert_eq!(r.nodes_explored, 1);
    }

    #[test]
    fn optimized_never_worse_than_fixed() {
        let mut net = parse_case(TRIANGLE).unwrap();
        net.lines[2].p_max_static = 30.0;
        let fixed = run(&formulate(&net, TopologyMode::Fixed), &quiet());
        let opt = run(&formulate(&net, TopologyMode::Optimized), &quiet());
        assert_eq!(opt.status, SolveStatus::OptimalWithinGap);
        let (a, b) = (fixed.objective().unwrap(), opt.objective().unwrap());
        assert!(b <= a + 1e-6 * a.abs(), "optimized {b} > fixed {a}");
        assert!(opt.incumbent.unwrap().is_feasible());
    }

    #[test]
    fn vid_line_gets_exact_product() {
        let net = parse_case(TRIANGLE).unwrap();
        let mut net = net.equip(&[], &[LineId(3)]);
        net.lines[2].p_max_static = 30.0;
        let r = run(&formulate(&net, TopologyMode::Fixed), &quiet());
        assert_eq!(r.status, SolveStatus::OptimalWithinGap);
        let s = r.incumbent.unwrap();
        assert!(s.is_feasible(), "{:?}", s.violations);
        assert!(s.lines[2].flow_mw <= 30.0 + 1e-6);
        assert!(r.rel_gap.unwrap() <= 0.005);
    }

    #[test]
    fn nominal_fixings_reproduce_fixed_bound() {
        let net = parse_case(TRIANGLE).unwrap();
        let opt = formulate(&net, TopologyMode::Optimized);
        let mut node = NodeState::root(&opt);
        for (b, v) in nominal_assignment(&opt) {
            node.fixings.push((opt.var_index(crate::formulation::VarKind::Binary(b)).unwrap(), v));
        }
        let Relaxation::Optimal { bound, .. } = solve_relaxation(&opt, &node) else { panic!() };
        let fixed = run(&formulate(&net, TopologyMode::Fixed), &quiet()).objective().unwrap();
        assert!((bound - fixed).abs() <= 1e-6 * fixed.abs().max(1.0), "{bound} vs {fixed}");
    }

    #[test]
    fn fractional_line_status_branches_in_two() {
        let net = parse_case(TRIANGLE).unwrap();
        let f = formulate(&net, TopologyMode::Optimized);
        let root = NodeState::root(&f);
        let Relaxation::Optimal { mut point, .. } = solve_relaxation(&f, &root) else { panic!() };
        for (j, _) in f.binaries() {
            point[j] = point[j].round();
        }
        let col = f.var_index(crate::formulation::VarKind::Binary(BinaryVar::Line(2))).unwrap();
        point[col] = 0.5;
        let Ok(Children::Binary { col: c, children, .. }) = branch(&f, &root, &point, &quiet()) else { panic!() };
        assert_eq!(c, col);
        assert_eq!(children[0].fixings, vec![(col, 0)]);
        assert_eq!(children[1].fixings, vec![(col, 1)]);
        assert!(children.iter().all(|n| n.depth == 1));
    }

    #[test]
    fn spatial_split_partitions_the_box() {
        let net = parse_case(TRIANGLE).unwrap().equip(&[], &[LineId(3)]);
        let f = formulate(&net, TopologyMode::Fixed);
        let root = NodeState::root(&f);
        let Relaxation::Optimal { mut point, .. } = solve_relaxation(&f, &root) else { panic!() };
        let v = &f.vid[0];
        // a point far from the product surface
        point[v.delta_b] = 0.0;
        point[v.product] = 1.0;
        let cfg = SolverConfig { spatial_rule: SpatialRule::MaxViolation, ..quiet() };
        let Ok(Children::Spatial { term, at, children, .. }) = branch(&f, &root, &point, &cfg) else { panic!() };
        assert_eq!(term, 0);
        let (lo, hi) = root.boxes[0].x_bounds;
        assert_eq!(children[0].boxes[0].x_bounds, (lo, at));
        assert_eq!(children[1].boxes[0].x_bounds, (at, hi));
        assert!(at > lo && at < hi);
        // the default rule cuts the straddling angle box at zero instead
        let Ok(Children::Spatial { axis, at, children, .. }) = branch(&f, &root, &point, &quiet()) else { panic!() };
        assert_eq!((axis, at), (crate::relax::Axis::Y, 0.0));
        assert_eq!(children[0].boxes[0].y_bounds.1, 0.0);
        assert_eq!(children[1].boxes[0].y_bounds.0, 0.0);
    }

    #[test]
    fn impossible_minimum_output_is_infeasible() {
        let mut net = parse_case(TRIANGLE).unwrap();
        net.generators[0].p_min = 200.0;
        let r = run(&formulate(&net, TopologyMode::Fixed), &quiet());
        assert_eq!(r.status, SolveStatus::Infeasible);
        assert!(r.incumbent.is_none());
    }

    #[test]
    fn repeated_runs_agree() {
        let mut net = parse_case(TRIANGLE).unwrap().equip(&[], &[LineId(3)]);
        net.lines[2].p_max_static = 30.0;
        let f = formulate(&net, TopologyMode::Optimized);
        let a = run(&f, &quiet());
        let b = run(&f, &quiet());
        assert_eq!(a.nodes_explored, b.nodes_explored);
        assert_eq!(a.objective(), b.objective());
        assert_eq!(a.best_bound, b.best_bound);
    }
}
