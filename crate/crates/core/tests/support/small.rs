//! Random 3–4 substation instances and the solver-versus-enumeration check.

use std::collections::BTreeMap;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use getco::dlr::RatingSeries;
use getco::formulation::{build, fix_binaries, nominal_assignment, BinaryVar, End, FormulationConfig, TopologyMode};
use getco::network::{Demand, DemandId, GenId, Generator, Line, LineId, Network, Substation, SubstationId};
use getco::solver::{run, SolveStatus, SolverConfig};

use super::oracle::{dc_opf, enumerate, plain_network, Settings, Switch, Topology};

pub const VID_RANGE: f64 = 0.5;
pub const GRID_STEP: f64 = 0.001;

#[derive(Debug, Clone)]
pub struct SmallInstance {
    pub seed: u64,
    pub net: Network,
    pub free: Vec<BinaryVar>,
}

/// A small meshed network with two generators of different price and
/// lines tight enough to congest.
pub fn random_network(rng: &mut ChaCha8Rng) -> Network {
    let n = rng.random_range(3..=4u32);
    let substations =
        (1..=n).map(|k| Substation { id: SubstationId(k), is_reference: k == 1 }).collect::<Vec<_>>();
    let mut pairs: Vec<(u32, u32)> = (1..=n).map(|k| (k, k % n + 1)).collect();
    if n == 4 && rng.random_bool(0.5) {
        pairs.push((1, 3));
    }
    let lines = pairs
        .iter()
        .enumerate()
        .map(|(k, &(a, b))| Line {
            id: LineId(k as u32 + 1),
            from_sub: SubstationId(a),
            to_sub: SubstationId(b),
            susceptance_nominal: rng.random_range(2.0..15.0),
            p_max_static: rng.random_range(25.0..90.0),
            vid_equipped: false,
            dlr_equipped: false,
        })
        .collect();
    let cheap_at = rng.random_range(1..=n);
    let dear_at = (cheap_at + rng.random_range(0..n - 1)) % n + 1;
    let generators = [(cheap_at, 10.0..20.0), (dear_at, 40.0..80.0)]
        .into_iter()
        .enumerate()
        .map(|(k, (sub, price))| Generator {
            id: GenId(k as u32 + 1),
            substation: SubstationId(sub),
            p_min: 0.0,
            p_max: rng.random_range(100.0..300.0),
            cost_quadratic: rng.random_range(0.0..0.05),
            cost_linear: rng.random_range(price),
            cost_constant: rng.random_range(0.0..50.0),
        })
        .collect();
    let demands = (0..rng.random_range(1..=3u32))
        .map(|k| Demand {
            id: DemandId(k + 1),
            substation: SubstationId(rng.random_range(1..=n)),
            p_max_nominal: rng.random_range(50.0..120.0),
        })
        .collect();
    Network { name: "random".into(), base_mva: 100.0, substations, lines, generators, demands }
}

/// Instance `seed` with `vid` VID lines and `free` free binaries (the rest
/// fixed at the base configuration).
pub fn instance(seed: u64, vid: usize, free: usize) -> SmallInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let net = random_network(&mut rng);
    let mut ids: Vec<LineId> = net.lines.iter().map(|l| l.id).collect();
    let mut chosen = Vec::new();
    for _ in 0..vid.min(ids.len()) {
        chosen.push(ids.remove(rng.random_range(0..ids.len())));
    }
    let net = net.equip(&[], &chosen);
    let f = build(&net, &RatingSeries::static_only(&net, &[0]), &config(), 0).unwrap();
    let mut picked = candidates(&net, &f.binaries().map(|(_, b)| b).collect::<Vec<_>>(), &mut rng);
    picked.truncate(free);
    picked.sort();
    SmallInstance { seed, net, free: picked }
}

/// Orders binaries so that any prefix is a useful free set: line statuses
/// first for one-binary sets, otherwise a substation's coupler together with
/// the elements that could move to its second busbar, then line statuses.
fn candidates(net: &Network, all: &[BinaryVar], rng: &mut ChaCha8Rng) -> Vec<BinaryVar> {
    let shuffle = |v: &mut Vec<BinaryVar>, rng: &mut ChaCha8Rng| {
        for k in (1..v.len()).rev() {
            v.swap(k, rng.random_range(0..=k));
        }
    };
    let mut lines: Vec<BinaryVar> = all.iter().copied().filter(|b| matches!(b, BinaryVar::Line(_))).collect();
    shuffle(&mut lines, rng);
    let mut out = vec![lines[0]];
    let sub = rng.random_range(0..net.substations.len());
    let mut at_sub: Vec<BinaryVar> = all
        .iter()
        .copied()
        .filter(|b| match *b {
            BinaryVar::Gen(g) => net.substation_position(net.generators[g].substation) == Some(sub),
            BinaryVar::Demand(d) => net.substation_position(net.demands[d].substation) == Some(sub),
            BinaryVar::LineEnd(l, e) => {
                let id = if e == End::From { net.lines[l].from_sub } else { net.lines[l].to_sub };
                net.substation_position(id) == Some(sub)
            }
            _ => false,
        })
        .collect();
    shuffle(&mut at_sub, rng);
    out.push(BinaryVar::Busbar(sub));
    out.extend(at_sub);
    out.extend(lines[1..].iter().copied());
    let rest: Vec<BinaryVar> = all.iter().copied().filter(|b| !out.contains(b)).collect();
    out.extend(rest);
    out
}

pub fn config() -> FormulationConfig {
    FormulationConfig { topology_mode: TopologyMode::Optimized, vid_range: VID_RANGE, cost_segments: 4, ..Default::default() }
}

fn switch(b: BinaryVar) -> Switch {
    match b {
        BinaryVar::Busbar(s) => Switch::Coupler(s),
        BinaryVar::Gen(g) => Switch::Gen(g),
        BinaryVar::Demand(d) => Switch::Demand(d),
        BinaryVar::Line(l) => Switch::Line(l),
        BinaryVar::LineEnd(l, e) => Switch::End(l, if e == End::From { 0 } else { 1 }),
    }
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub seed: u64,
    pub solver: Option<f64>,
    pub enumerated: Option<f64>,
    pub evaluated: usize,
    pub nodes: usize,
    /// base configuration at nominal susceptances
    pub nominal: Option<f64>,
}

impl Comparison {
    pub fn rel_diff(&self) -> Option<f64> {
        match (self.solver, self.enumerated) {
            (Some(a), Some(b)) => Some((a - b).abs() / b.abs().max(1.0)),
            _ => None,
        }
    }

    /// The optimum improves on the base configuration.
    pub fn improves(&self) -> bool {
        matches!((self.enumerated, self.nominal), (Some(e), Some(n)) if e < n - 1e-6 * n.abs())
    }

    /// Within `tol` relative, or infeasible on both sides.
    pub fn agrees(&self, tol: f64) -> bool {
        match (self.solver, self.enumerated) {
            (None, None) => true,
            _ => self.rel_diff().is_some_and(|d| d <= tol),
        }
    }
}

pub fn compare(inst: &SmallInstance) -> Comparison {
    let cfg = config();
    let f = build(&inst.net, &RatingSeries::static_only(&inst.net, &[0]), &cfg, 0).unwrap();
    let fixed: BTreeMap<BinaryVar, u8> =
        nominal_assignment(&f).into_iter().filter(|(b, _)| !inst.free.contains(b)).collect();
    let f = fix_binaries(&f, &fixed).unwrap();
    let scfg = SolverConfig { rel_gap_target: 1e-4, time_limit: 120.0, log_every: 0, ..Default::default() };
    let r = run(&f, &scfg);
    assert!(
        matches!(r.status, SolveStatus::OptimalWithinGap | SolveStatus::Infeasible),
        "seed {}: {:?}",
        inst.seed,
        r.status
    );
    let free: Vec<Switch> = inst.free.iter().map(|&b| switch(b)).collect();
    let vid: Vec<usize> = (0..inst.net.lines.len()).filter(|&l| inst.net.lines[l].vid_equipped).collect();
    let limits: Vec<f64> = inst.net.lines.iter().map(|l| l.p_max_static).collect();
    let settings = Settings { theta_max: cfg.theta_max, voll: cfg.voll, segments: cfg.cost_segments };
    let e = enumerate(&inst.net, &free, &vid, VID_RANGE, GRID_STEP, &limits, &settings);
    let b: Vec<f64> = inst.net.lines.iter().map(|l| l.susceptance_nominal).collect();
    let nominal = plain_network(&inst.net, &Topology::nominal(&inst.net), &b, &limits).and_then(|p| dc_opf(&p, &settings));
    Comparison {
        seed: inst.seed,
        solver: r.objective(),
        enumerated: e.as_ref().map(|e| e.objective),
        evaluated: e.map_or(0, |e| e.evaluated),
        nodes: r.nodes_explored,
        nominal,
    }
}

/// The instance mix: cycling through 0, 1 and 2 VID lines with as many
/// free binaries as keeps the enumeration affordable.
pub fn suite(count: u64) -> Vec<SmallInstance> {
    (0..count)
        .map(|seed| match seed % 3 {
            0 => instance(seed, 0, 8),
            1 => instance(seed, 1, 5),
            _ => instance(seed, 2, 1),
        })
        .collect()
}
