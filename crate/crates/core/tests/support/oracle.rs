//! Busbar-level DC-OPF on the dense reference simplex, plus exhaustive
//! enumeration of substation and line configurations.

use getco::network::Network;

use super::simplex::{Cmp, Lp};

#[derive(Debug, Clone, Copy)]
pub struct Settings {
    pub theta_max: f64,
    /// $/MWh
    pub voll: f64,
    /// equal-width cost segments per generator
    pub segments: usize,
}

#[derive(Debug, Clone)]
pub struct PlainGen {
    pub node: usize,
    pub p_min: f64,
    pub p_max: f64,
    /// `a p² + b p + c`, p in MW
    pub cost: (f64, f64, f64),
}

#[derive(Debug, Clone)]
pub struct PlainBranch {
    pub from: usize,
    pub to: usize,
    /// per-unit
    pub b: f64,
    /// MW
    pub p_max: f64,
}

/// A network of electrical nodes, each with its own angle.
#[derive(Debug, Clone)]
pub struct PlainNet {
    pub base: f64,
    pub nodes: usize,
    pub reference: usize,
    pub gens: Vec<PlainGen>,
    /// (node, MW)
    pub demands: Vec<(usize, f64)>,
    pub branches: Vec<PlainBranch>,
    /// node pairs whose angle difference is limited to `theta_max`
    pub couplings: Vec<(usize, usize)>,
}

/// Minimum hourly cost ($/h) with piecewise-linear generator costs and
/// shedding at `voll`; `None` when infeasible.
pub fn dc_opf(p: &PlainNet, s: &Settings) -> Option<f64> {
    let base = p.base;
    let mut lp = Lp::default();
    let mut constant = 0.0;
    let mut injection: Vec<Vec<(usize, f64)>> = vec![Vec::new(); p.nodes];
    let mut fixed = vec![0.0; p.nodes];
    for g in &p.gens {
        let cost = |x: f64| g.cost.0 * x * x + g.cost.1 * x + g.cost.2;
        constant += cost(g.p_min);
        fixed[g.node] += g.p_min / base;
        if g.p_max > g.p_min {
            let w = (g.p_max - g.p_min) / s.segments as f64;
            for k in 0..s.segments {
                let a = g.p_min + w * k as f64;
                let slope = (cost(a + w) - cost(a)) / w;
                let v = lp.var(slope * base, 0.0, w / base);
                injection[g.node].push((v, 1.0));
            }
        }
    }
    for &(node, pd) in &p.demands {
        constant += s.voll * pd;
        let v = lp.var(-s.voll * base, 0.0, pd / base);
        injection[node].push((v, -1.0));
    }
    let theta: Vec<usize> = (0..p.nodes)
        .map(|n| if n == p.reference { lp.var(0.0, 0.0, 0.0) } else { lp.var(0.0, -s.theta_max, s.theta_max) })
        .collect();
    for br in &p.branches {
        let cap = br.p_max / base;
        let f = lp.var(0.0, -cap, cap);
        lp.row(vec![(f, 1.0), (theta[br.from], -br.b), (theta[br.to], br.b)], Cmp::Eq, 0.0);
        injection[br.from].push((f, -1.0));
        injection[br.to].push((f, 1.0));
    }
    for (n, row) in injection.into_iter().enumerate() {
        lp.row(row, Cmp::Eq, -fixed[n]);
    }
    for &(a, b) in &p.couplings {
        lp.row(vec![(theta[a], 1.0), (theta[b], -1.0)], Cmp::Le, s.theta_max);
        lp.row(vec![(theta[a], 1.0), (theta[b], -1.0)], Cmp::Ge, -s.theta_max);
    }
    lp.solve().objective().map(|o| o + constant)
}

/// Substation and line configuration. `true` means: coupler closed,
/// element on busbar 2, line in service, line end on busbar 2.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub merged: Vec<bool>,
    pub gen_bus2: Vec<bool>,
    pub demand_bus2: Vec<bool>,
    pub line_in: Vec<bool>,
    pub end_bus2: Vec<[bool; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Switch {
    Coupler(usize),
    Gen(usize),
    Demand(usize),
    Line(usize),
    End(usize, usize),
}

impl Topology {
    pub fn nominal(net: &Network) -> Topology {
        Topology {
            merged: vec![true; net.substations.len()],
            gen_bus2: vec![false; net.generators.len()],
            demand_bus2: vec![false; net.demands.len()],
            line_in: vec![true; net.lines.len()],
            end_bus2: vec![[false; 2]; net.lines.len()],
        }
    }

    pub fn set(&mut self, s: Switch, v: bool) {
        match s {
            Switch::Coupler(k) => self.merged[k] = v,
            Switch::Gen(k) => self.gen_bus2[k] = v,
            Switch::Demand(k) => self.demand_bus2[k] = v,
            Switch::Line(k) => self.line_in[k] = v,
            Switch::End(k, e) => self.end_bus2[k][e] = v,
        }
    }
}

fn sub_pos(net: &Network, id: getco::network::SubstationId) -> usize {
    net.substations.iter().position(|s| s.id == id).expect("valid reference")
}

/// Electrical network for a configuration, or `None` if the configuration
/// is not allowed (something on busbar 2 of a closed coupler, or a line end
/// moved on a line that is out of service).
pub fn plain_network(net: &Network, topo: &Topology, susceptance: &[f64], limits_mw: &[f64]) -> Option<PlainNet> {
    let n_sub = net.substations.len();
    let gen_sub: Vec<usize> = net.generators.iter().map(|g| sub_pos(net, g.substation)).collect();
    let dem_sub: Vec<usize> = net.demands.iter().map(|d| sub_pos(net, d.substation)).collect();
    let ends: Vec<[usize; 2]> =
        net.lines.iter().map(|l| [sub_pos(net, l.from_sub), sub_pos(net, l.to_sub)]).collect();
    for (g, &s) in gen_sub.iter().enumerate() {
        if topo.merged[s] && topo.gen_bus2[g] {
            return None;
        }
    }
    for (d, &s) in dem_sub.iter().enumerate() {
        if topo.merged[s] && topo.demand_bus2[d] {
            return None;
        }
    }
    for (l, e) in ends.iter().enumerate() {
        for k in 0..2 {
            if topo.end_bus2[l][k] && (topo.merged[e[k]] || !topo.line_in[l]) {
                return None;
            }
        }
    }
    let mut node_of = vec![[0usize; 2]; n_sub];
    let mut nodes = 0;
    let mut couplings = Vec::new();
    for s in 0..n_sub {
        if topo.merged[s] {
            node_of[s] = [nodes, nodes];
            nodes += 1;
        } else {
            node_of[s] = [nodes, nodes + 1];
            couplings.push((nodes, nodes + 1));
            nodes += 2;
        }
    }
    let reference = net.substations.iter().position(|s| s.is_reference)?;
    let at = |s: usize, bus2: bool| node_of[s][bus2 as usize];
    Some(PlainNet {
        base: net.base_mva,
        nodes,
        reference: node_of[reference][0],
        gens: net
            .generators
            .iter()
            .enumerate()
            .map(|(g, gen)| PlainGen {
                node: at(gen_sub[g], topo.gen_bus2[g]),
                p_min: gen.p_min,
                p_max: gen.p_max,
                cost: (gen.cost_quadratic, gen.cost_linear, gen.cost_constant),
            })
            .collect(),
        demands: net
            .demands
            .iter()
            .enumerate()
            .map(|(d, dem)| (at(dem_sub[d], topo.demand_bus2[d]), dem.p_max_nominal))
            .collect(),
        branches: (0..net.lines.len())
            .filter(|&l| topo.line_in[l])
            .map(|l| PlainBranch {
                from: at(ends[l][0], topo.end_bus2[l][0]),
                to: at(ends[l][1], topo.end_bus2[l][1]),
                b: susceptance[l],
                p_max: limits_mw[l],
            })
            .collect(),
        couplings,
    })
}

#[derive(Debug, Clone)]
pub struct Enumerated {
    pub objective: f64,
    pub topology: Topology,
    pub susceptance: Vec<f64>,
    pub evaluated: usize,
}

/// Best configuration over every assignment of `free` (the rest nominal)
/// and, for in-service lines in `vid`, every susceptance on the grid
/// `b̄ + k·step·|b̄|` within `±range·|b̄|`.
pub fn enumerate(
    net: &Network,
    free: &[Switch],
    vid: &[usize],
    range: f64,
    step: f64,
    limits_mw: &[f64],
    s: &Settings,
) -> Option<Enumerated> {
    assert!(vid.len() <= 2);
    let nominal: Vec<f64> = net.lines.iter().map(|l| l.susceptance_nominal).collect();
    let half = (range / step).round() as i64;
    let mut best: Option<Enumerated> = None;
    let mut evaluated = 0;
    for mask in 0u32..(1 << free.len()) {
        let mut topo = Topology::nominal(net);
        for (k, &sw) in free.iter().enumerate() {
            let nominal_on = !matches!(sw, Switch::Gen(_) | Switch::Demand(_) | Switch::End(..));
            let flip = mask >> k & 1 == 1;
            topo.set(sw, nominal_on != flip);
        }
        let active: Vec<usize> = vid.iter().copied().filter(|&l| topo.line_in[l]).collect();
        let nominal = &nominal;
        let grid = |l: usize| (-half..=half).map(move |k| nominal[l] + k as f64 * step * nominal[l].abs());
        let mut points: Vec<Vec<f64>> = Vec::new();
        match active[..] {
            [] => points.push(nominal.to_vec()),
            [a] => points.extend(grid(a).map(|v| {
                let mut b = nominal.to_vec();
                b[a] = v;
                b
            })),
            [a, c] => {
                for va in grid(a) {
                    for vc in grid(c) {
                        let mut b = nominal.to_vec();
                        b[a] = va;
                        b[c] = vc;
                        points.push(b);
                    }
                }
            }
            _ => unreachable!(),
        }
        for b in points {
            let Some(plain) = plain_network(net, &topo, &b, limits_mw) else { break };
            evaluated += 1;
            if let Some(obj) = dc_opf(&plain, s) {
                if best.as_ref().is_none_or(|e| obj < e.objective) {
                    best = Some(Enumerated { objective: obj, topology: topo.clone(), susceptance: b, evaluated: 0 });
                }
            }
        }
    }
    best.map(|mut e| {
        e.evaluated = evaluated;
        e
    })
}
