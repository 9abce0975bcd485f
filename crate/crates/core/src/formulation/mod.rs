//! Solver-agnostic assembly of the co-optimization problem.
//!
//! The optimized-topology problem is always built first; fixed-topology
//! instances are derived from it by [`fix_topology`] with the nominal
//! assignment, so both modes share one emission path.
//!
//! Internally powers are per-unit on the network base, angles are radians and
//! the objective is in $/h.

mod build;
mod dump;
mod extract;
mod fix;

pub use build::{big_m_auto, build, envelope_rows};
pub use dump::to_lp_text;
pub use extract::{extract_solution, extract_solution_with_tol, GenDispatch, LineReport, LoadService, SolutionPoint, TopologyReport, Violation, FEASIBILITY_TOL};
pub use fix::{fix_binaries, fix_susceptances, fix_topology, nominal_assignment};

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{LineId, Network};
use crate::relax::BilinearTerm;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormulationError {
    #[error("no rating for {line} at hour {hour}")]
    MissingRating { line: LineId, hour: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid network: {0}")]
    Network(String),
    #[error("assignment leaves {0} unset")]
    IncompleteAssignment(String),
    #[error("assignment names {0}, which is not a binary of this formulation")]
    UnknownBinary(String),
    #[error("assignment violates {tag} ({detail})")]
    Infeasible { tag: Tag, detail: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyMode {
    Fixed,
    Optimized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BigM {
    Auto,
    /// per-line value in per-unit
    PerLine(BTreeMap<LineId, f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FormulationConfig {
    /// rad
    pub theta_max: f64,
    /// $/MWh
    pub voll: f64,
    pub big_m: BigM,
    /// fraction of nominal susceptance a VID may add or remove
    pub vid_range: f64,
    pub cost_segments: usize,
    pub topology_mode: TopologyMode,
    /// Balance rows sum the total line flow instead of the busbar shares.
    pub strict_balance: bool,
}

impl Default for FormulationConfig {
    fn default() -> Self {
        FormulationConfig {
            theta_max: 0.6,
            voll: 2000.0,
            big_m: BigM::Auto,
            vid_range: 0.1,
            cost_segments: 8,
            topology_mode: TopologyMode::Fixed,
            strict_balance: false,
        }
    }
}

impl FormulationConfig {
    pub fn check(&self) -> Result<(), FormulationError> {
        let bad = |m: &str| Err(FormulationError::InvalidConfig(m.to_string()));
        if !(self.theta_max > 0.0 && self.theta_max.is_finite()) {
            return bad("theta_max must be positive");
        }
        if !(self.voll > 0.0 && self.voll.is_finite()) {
            return bad("voll must be positive");
        }
        if !(0.0..=1.0).contains(&self.vid_range) {
            return bad("vid_range must lie in [0, 1]");
        }
        if self.cost_segments == 0 {
            return bad("cost_segments must be at least 1");
        }
        if let BigM::PerLine(m) = &self.big_m {
            if m.values().any(|v| !(*v > 0.0 && v.is_finite())) {
                return bad("big-M values must be positive");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum End {
    From,
    To,
}

impl End {
    pub const BOTH: [End; 2] = [End::From, End::To];

    pub fn index(self) -> usize {
        self as usize
    }

    fn short(self) -> &'static str {
        match self {
            End::From => "fr",
            End::To => "to",
        }
    }
}

/// Binary decision, addressed by element position in the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BinaryVar {
    /// 1 = busbar coupler closed (both busbars at one angle)
    Busbar(usize),
    /// 1 = generator on busbar 2
    Gen(usize),
    /// 1 = demand on busbar 2
    Demand(usize),
    /// 1 = line end on busbar 2
    LineEnd(usize, End),
    /// 1 = line in service
    Line(usize),
}

/// What a variable stands for. Busbar indices are 0 (busbar 1) and 1 (busbar 2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum VarKind {
    LineFlow(usize),
    GenBus(usize, usize),
    GenSegment(usize, usize),
    DemandBus(usize, usize),
    LineEndBus(usize, End, usize),
    BusAngle(usize, usize),
    LineEndAngle(usize, End),
    SusceptanceDev(usize),
    Product(usize),
    Binary(BinaryVar),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub kind: VarKind,
    pub lo: f64,
    pub hi: f64,
}

impl Variable {
    pub fn is_binary(&self) -> bool {
        matches!(self.kind, VarKind::Binary(_))
    }
}

/// Which model equation a row (or objective term) implements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tag {
    DcFlow,
    MaxVoltage,
    PgMax1,
    PgMax2,
    PdMax1,
    PdMax2,
    PlMax1,
    PlMax2,
    HlMax,
    Hl,
    SumPl,
    PfNto,
    ThetaMax1,
    ThetaMax2,
    Hg1,
    Hd1,
    Hle1,
    Balance1,
    Balance2,
    DlrLimit,
    VidSusceptance,
    VidRange,
    GenCost,
    LoadShedding,
    ReferencePin,
}

impl Tag {
    /// Every model equation the formulation must emit somewhere.
    pub const MODEL: [Tag; 24] = [
        Tag::DcFlow,
        Tag::MaxVoltage,
        Tag::PgMax1,
        Tag::PgMax2,
        Tag::PdMax1,
        Tag::PdMax2,
        Tag::PlMax1,
        Tag::PlMax2,
        Tag::HlMax,
        Tag::Hl,
        Tag::SumPl,
        Tag::PfNto,
        Tag::ThetaMax1,
        Tag::ThetaMax2,
        Tag::Hg1,
        Tag::Hd1,
        Tag::Hle1,
        Tag::Balance1,
        Tag::Balance2,
        Tag::DlrLimit,
        Tag::VidSusceptance,
        Tag::VidRange,
        Tag::GenCost,
        Tag::LoadShedding,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Tag::DcFlow => "dc_flow",
            Tag::MaxVoltage => "max_voltage",
            Tag::PgMax1 => "pgmax_1",
            Tag::PgMax2 => "pgmax_2",
            Tag::PdMax1 => "pdmax_1",
            Tag::PdMax2 => "pdmax_2",
            Tag::PlMax1 => "plmax_1",
            Tag::PlMax2 => "plmax_2",
            Tag::HlMax => "hl_max",
            Tag::Hl => "hl",
            Tag::SumPl => "sum_pl",
            Tag::PfNto => "pf_nto",
            Tag::ThetaMax1 => "theta_max_1",
            Tag::ThetaMax2 => "theta_max_2",
            Tag::Hg1 => "hg1",
            Tag::Hd1 => "hd1",
            Tag::Hle1 => "hle1",
            Tag::Balance1 => "balance1",
            Tag::Balance2 => "balance2",
            Tag::DlrLimit => "dlr_limit",
            Tag::VidSusceptance => "vid_susceptance",
            Tag::VidRange => "vid_range",
            Tag::GenCost => "gen_cost",
            Tag::LoadShedding => "load_shedding",
            Tag::ReferencePin => "reference_pin",
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
    pub tag: Tag,
    /// index into `Formulation::vid` for envelope rows that depend on the
    /// current bilinear box
    pub envelope_of: Option<usize>,
}

impl Constraint {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates the row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let a = self.activity(x);
        match self.sense {
            Sense::Le => (a - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - a).max(0.0),
            Sense::Eq => (a - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveTerm {
    pub var: usize,
    pub coef: f64,
    pub tag: Tag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub terms: Vec<ObjectiveTerm>,
    pub constant: f64,
}

impl Objective {
    pub fn value(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|t| t.coef * x[t.var]).sum::<f64>()
    }
}

/// A VID-equipped line and the variables of its product term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VidLine {
    pub line: usize,
    pub susceptance: f64,
    pub delta_b: usize,
    pub product: usize,
    pub theta_from: usize,
    pub theta_to: usize,
    /// root box: `x` is `Δb`, `y` is `θ_from - θ_to`
    pub term: BilinearTerm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub hour: usize,
    pub scenario: String,
    pub mode: TopologyMode,
    pub config: FormulationConfig,
    /// effective rating per line at this hour, MW
    pub line_limits: Vec<f64>,
    /// big-M per line, per-unit
    pub big_m: Vec<f64>,
    /// PWL breakpoints per generator, MW
    pub breakpoints: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Formulation {
    pub network: Network,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: Objective,
    pub vid: Vec<VidLine>,
    /// binaries replaced by constants
    pub fixed: BTreeMap<BinaryVar, u8>,
    pub meta: Meta,
}

impl Formulation {
    pub fn base_mva(&self) -> f64 {
        self.network.base_mva
    }

    pub fn binaries(&self) -> impl Iterator<Item = (usize, BinaryVar)> + '_ {
        self.variables.iter().enumerate().filter_map(|(j, v)| match v.kind {
            VarKind::Binary(b) => Some((j, b)),
            _ => None,
        })
    }

    pub fn binary_count(&self) -> usize {
        self.binaries().count()
    }

    pub fn var_index(&self, kind: VarKind) -> Option<usize> {
        self.variables.iter().position(|v| v.kind == kind)
    }

    /// Lookup table from kind to column.
    pub fn index_map(&self) -> BTreeMap<VarKind, usize> {
        self.variables.iter().enumerate().map(|(j, v)| (v.kind, j)).collect()
    }

    /// Value of a binary in a point: the column value or the folded constant.
    pub fn binary_value(&self, b: BinaryVar, x: &[f64]) -> Option<f64> {
        if let Some(&v) = self.fixed.get(&b) {
            return Some(v as f64);
        }
        self.var_index(VarKind::Binary(b)).map(|j| x[j])
    }

    pub fn var_name(&self, j: usize) -> String {
        let net = &self.network;
        let bus = |i: usize| i + 1;
        match self.variables[j].kind {
            VarKind::LineFlow(l) => format!("P_{}", net.lines[l].id),
            VarKind::GenBus(g, i) => format!("Pg_{}_b{}", net.generators[g].id, bus(i)),
            VarKind::GenSegment(g, k) => format!("seg_{}_{}", net.generators[g].id, k),
            VarKind::DemandBus(d, i) => format!("Pd_{}_b{}", net.demands[d].id, bus(i)),
            VarKind::LineEndBus(l, e, i) => format!("P_{}_{}_b{}", net.lines[l].id, e.short(), bus(i)),
            VarKind::BusAngle(b, i) => format!("th_{}_b{}", net.substations[b].id, bus(i)),
            VarKind::LineEndAngle(l, e) => format!("th_{}_{}", net.lines[l].id, e.short()),
            VarKind::SusceptanceDev(l) => format!("db_{}", net.lines[l].id),
            VarKind::Product(l) => format!("w_{}", net.lines[l].id),
            VarKind::Binary(b) => self.binary_name(b),
        }
    }

    pub fn binary_name(&self, b: BinaryVar) -> String {
        let net = &self.network;
        match b {
            BinaryVar::Busbar(s) => format!("hb_{}", net.substations[s].id),
            BinaryVar::Gen(g) => format!("hg_{}", net.generators[g].id),
            BinaryVar::Demand(d) => format!("hd_{}", net.demands[d].id),
            BinaryVar::LineEnd(l, e) => format!("hle_{}_{}", net.lines[l].id, e.short()),
            BinaryVar::Line(l) => format!("hl_{}", net.lines[l].id),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case_io::{parse_case, tests::TRIANGLE};
    use crate::dlr::RatingSeries;

    fn triangle(mode: TopologyMode) -> Formulation {
        let net = parse_case(TRIANGLE).unwrap();
        let ratings = RatingSeries::static_only(&net, &[0]);
        let cfg = FormulationConfig { topology_mode: mode, ..Default::default() };
        build(&net, &ratings, &cfg, 0).unwrap()
    }

    fn count(f: &Formulation, tag: Tag, sense: Option<Sense>) -> usize {
        f.constraints.iter().filter(|c| c.tag == tag && sense.is_none_or(|s| c.sense == s)).count()
    }

    #[test]
    fn fixed_triangle_folds_binaries() {
        let f = triangle(TopologyMode::Fixed);
        assert_eq!(f.binary_count(), 0);
        assert_eq!(count(&f, Tag::DcFlow, Some(Sense::Eq)), 3);
        assert_eq!(count(&f, Tag::PfNto, None), 0);
        assert_eq!(f.fixed.len(), 3 + 1 + 1 + 3 * 3);
    }

    #[test]
    fn optimized_binary_count_case24() {
        let net = parse_case(include_str!("../../data/case24_ieee_rts.m")).unwrap();
        let ratings = RatingSeries::static_only(&net, &[5]);
        let cfg = FormulationConfig { topology_mode: TopologyMode::Optimized, ..Default::default() };
        let f = build(&net, &ratings, &cfg, 5).unwrap();
        let expected = net.substations.len() + net.generators.len() + net.demands.len() + 3 * net.lines.len();
        assert_eq!(f.binary_count(), expected);
        assert_eq!(expected, 188);
    }

    #[test]
    fn vid_columns_and_bounds() {
        let net = parse_case(include_str!("../../data/case24_ieee_rts.m")).unwrap();
        let vid: Vec<LineId> = net.lines.iter().take(20).map(|l| l.id).collect();
        let net = net.equip(&[], &vid);
        let f = build(&net, &RatingSeries::static_only(&net, &[0]), &FormulationConfig::default(), 0).unwrap();
        let devs: Vec<&Variable> =
            f.variables.iter().filter(|v| matches!(v.kind, VarKind::SusceptanceDev(_))).collect();
        assert_eq!(devs.len(), 20);
        for v in devs {
            let VarKind::SusceptanceDev(l) = v.kind else { unreachable!() };
            let bound = 0.1 * net.lines[l].susceptance_nominal.abs();
            assert!((v.hi - bound).abs() < 1e-12 && (v.lo + bound).abs() < 1e-12);
        }
    }

    #[test]
    fn exclusivity_violation_rejected() {
        let f = triangle(TopologyMode::Optimized);
        let mut a = nominal_assignment(&f);
        a.insert(BinaryVar::Gen(0), 1);
        let err = fix_topology(&f, &a).unwrap_err();
        assert!(matches!(err, FormulationError::Infeasible { tag: Tag::Hg1, .. }), "{err}");
    }

    #[test]
    fn incomplete_assignment_rejected() {
        let f = triangle(TopologyMode::Optimized);
        let mut a = nominal_assignment(&f);
        a.remove(&BinaryVar::Line(1));
        assert!(matches!(fix_topology(&f, &a), Err(FormulationError::IncompleteAssignment(_))));
    }

    #[test]
    fn open_line_pins_its_flows() {
        let f = triangle(TopologyMode::Optimized);
        let mut a = nominal_assignment(&f);
        a.insert(BinaryVar::Line(2), 0);
        let g = fix_topology(&f, &a).unwrap();
        let idx = g.index_map();
        let flows = [
            idx[&VarKind::LineFlow(2)],
            idx[&VarKind::LineEndBus(2, End::From, 0)],
            idx[&VarKind::LineEndBus(2, End::To, 0)],
        ];
        for j in flows {
            let pinned = g.constraints.iter().any(|c| {
                c.coeffs.len() == 1 && c.coeffs[0].0 == j && c.sense == Sense::Eq && c.rhs == 0.0
            });
            assert!(pinned, "{} not pinned", g.var_name(j));
        }
        // the open line has no flow law left
        assert_eq!(count(&g, Tag::DcFlow, None), 2);
    }

    #[test]
    fn every_row_is_tagged_and_objective_constant() {
        let f = triangle(TopologyMode::Optimized);
        let voll = f.meta.config.voll;
        for t in &f.objective.terms {
            if matches!(f.variables[t.var].kind, VarKind::DemandBus(..)) {
                assert_eq!(t.tag, Tag::LoadShedding);
                assert!((t.coef + voll * f.base_mva()).abs() < 1e-9);
            }
        }
        let gen_const: f64 = f.network.generators.iter().map(|g| g.cost(g.p_min)).sum();
        assert!((f.objective.constant - gen_const - voll * f.network.total_demand()).abs() < 1e-9);
        let text = to_lp_text(&f);
        assert!(text.contains("\\ pf_nto") && text.contains("Binaries"));
    }

    #[test]
    fn config_validation() {
        let net = parse_case(TRIANGLE).unwrap();
        let r = RatingSeries::static_only(&net, &[0]);
        let bad = FormulationConfig { cost_segments: 0, ..Default::default() };
        assert!(matches!(build(&net, &r, &bad, 0), Err(FormulationError::InvalidConfig(_))));
        assert!(matches!(
            build(&net, &r, &FormulationConfig::default(), 3),
            Err(FormulationError::MissingRating { hour: 3, .. })
        ));
    }
}
