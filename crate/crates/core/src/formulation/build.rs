use std::collections::BTreeMap;

use super::*;
use crate::dlr::RatingSeries;
use crate::relax::{mccormick_envelope, BilinearTerm, CutSense};

struct Builder {
    vars: Vec<Variable>,
    rows: Vec<Constraint>,
}

impl Builder {
    fn var(&mut self, kind: VarKind, lo: f64, hi: f64) -> usize {
        self.vars.push(Variable { kind, lo, hi });
        self.vars.len() - 1
    }

    fn row(&mut self, tag: Tag, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.rows.push(Constraint { coeffs, sense, rhs, tag, envelope_of: None });
    }

    /// `lo <= expr <= hi` as an adjacent `Ge`/`Le` pair (merged later when
    /// constants make them coincide).
    fn pair(&mut self, tag: Tag, lower: (Vec<(usize, f64)>, f64), upper: (Vec<(usize, f64)>, f64)) {
        self.row(tag, lower.0, Sense::Ge, lower.1);
        self.row(tag, upper.0, Sense::Le, upper.1);
    }
}

/// Default big-M, per-unit: `|b̄|(1+r)·2θmax + Pmax`.
pub fn big_m_auto(susceptance: f64, p_max_pu: f64, cfg: &FormulationConfig) -> f64 {
    susceptance.abs() * (1.0 + cfg.vid_range) * 2.0 * cfg.theta_max + p_max_pu
}

/// Equal-width PWL breakpoints over `[p_min, p_max]`, MW.
fn breakpoints(p_min: f64, p_max: f64, segments: usize) -> Vec<f64> {
    if p_max <= p_min {
        return vec![p_min];
    }
    (0..=segments).map(|k| p_min + (p_max - p_min) * k as f64 / segments as f64).collect()
}

/// Builds the problem for one hour. Demands are taken as given (already
/// scaled); line limits come from `ratings`.
pub fn build(
    net: &Network,
    ratings: &RatingSeries,
    cfg: &FormulationConfig,
    hour: usize,
) -> Result<Formulation, FormulationError> {
    cfg.check()?;
    let inc = net.incidence().map_err(|e| FormulationError::Network(e.to_string()))?;
    let reference = inc
        .reference
        .ok_or_else(|| FormulationError::Network("no reference substation".into()))?;
    let base = net.base_mva;
    if !(base > 0.0) {
        return Err(FormulationError::Network(format!("base_mva {base}")));
    }
    let th = cfg.theta_max;

    let mut line_limits = Vec::with_capacity(net.lines.len());
    for l in &net.lines {
        let p = ratings
            .limit(l.id, hour)
            .ok_or(FormulationError::MissingRating { line: l.id, hour })?;
        if !(p > 0.0 && p.is_finite()) {
            return Err(FormulationError::Network(format!("{} has rating {p} MW at hour {hour}", l.id)));
        }
        line_limits.push(p);
    }
    let mut big_m = Vec::with_capacity(net.lines.len());
    for (k, l) in net.lines.iter().enumerate() {
        let m = match &cfg.big_m {
            BigM::Auto => big_m_auto(l.susceptance_nominal, line_limits[k] / base, cfg),
            BigM::PerLine(map) => *map
                .get(&l.id)
                .ok_or_else(|| FormulationError::InvalidConfig(format!("no big-M for {}", l.id)))?,
        };
        big_m.push(m);
    }

    let mut b = Builder { vars: Vec::new(), rows: Vec::new() };

    // columns
    let h_b: Vec<usize> = (0..net.substations.len())
        .map(|s| b.var(VarKind::Binary(BinaryVar::Busbar(s)), 0.0, 1.0))
        .collect();
    let theta: Vec<[usize; 2]> = (0..net.substations.len())
        .map(|s| [0, 1].map(|i| b.var(VarKind::BusAngle(s, i), -th, th)))
        .collect();

    let mut h_g = Vec::new();
    let mut p_g = Vec::new();
    let mut segs = Vec::new();
    let mut bps = Vec::new();
    for (g, gen) in net.generators.iter().enumerate() {
        if !(gen.p_min >= 0.0 && gen.p_min <= gen.p_max && gen.cost_quadratic >= 0.0) {
            return Err(FormulationError::Network(format!("{} has invalid limits or cost", gen.id)));
        }
        h_g.push(b.var(VarKind::Binary(BinaryVar::Gen(g)), 0.0, 1.0));
        p_g.push([0, 1].map(|i| b.var(VarKind::GenBus(g, i), 0.0, gen.p_max / base)));
        let bp = breakpoints(gen.p_min, gen.p_max, cfg.cost_segments);
        segs.push(
            bp.windows(2)
                .enumerate()
                .map(|(k, w)| b.var(VarKind::GenSegment(g, k), 0.0, (w[1] - w[0]) / base))
                .collect::<Vec<_>>(),
        );
        bps.push(bp);
    }

    let mut h_d = Vec::new();
    let mut p_d = Vec::new();
    for (d, dem) in net.demands.iter().enumerate() {
        if !(dem.p_max_nominal >= 0.0) {
            return Err(FormulationError::Network(format!("{} has negative demand", dem.id)));
        }
        h_d.push(b.var(VarKind::Binary(BinaryVar::Demand(d)), 0.0, 1.0));
        p_d.push([0, 1].map(|i| b.var(VarKind::DemandBus(d, i), 0.0, dem.p_max_nominal / base)));
    }

    let mut h_l = Vec::new();
    let mut h_le = Vec::new();
    let mut p_l = Vec::new();
    let mut p_le = Vec::new();
    let mut th_le = Vec::new();
    let mut vid = Vec::new();
    for (l, line) in net.lines.iter().enumerate() {
        let pmax = line_limits[l] / base;
        h_l.push(b.var(VarKind::Binary(BinaryVar::Line(l)), 0.0, 1.0));
        h_le.push(End::BOTH.map(|e| b.var(VarKind::Binary(BinaryVar::LineEnd(l, e)), 0.0, 1.0)));
        p_l.push(b.var(VarKind::LineFlow(l), -pmax, pmax));
        p_le.push(End::BOTH.map(|e| [0, 1].map(|i| b.var(VarKind::LineEndBus(l, e, i), -pmax, pmax))));
        th_le.push(End::BOTH.map(|e| b.var(VarKind::LineEndAngle(l, e), -th, th)));
        if line.vid_equipped {
            let dev = cfg.vid_range * line.susceptance_nominal.abs();
            let db = b.var(VarKind::SusceptanceDev(l), -dev, dev);
            let wmax = dev * 2.0 * th;
            let w = b.var(VarKind::Product(l), -wmax, wmax);
            vid.push(VidLine {
                line: l,
                susceptance: line.susceptance_nominal,
                delta_b: db,
                product: w,
                theta_from: th_le[l][0],
                theta_to: th_le[l][1],
                term: BilinearTerm {
                    line: line.id,
                    x_bounds: (-dev, dev),
                    y_bounds: (-2.0 * th, 2.0 * th),
                    aux_var: w,
                },
            });
        }
    }

    // substation rows
    for s in 0..net.substations.len() {
        let (t1, t2, hb) = (theta[s][0], theta[s][1], h_b[s]);
        b.pair(
            Tag::MaxVoltage,
            (vec![(t1, 1.0), (t2, -1.0), (hb, -th)], -th),
            (vec![(t1, 1.0), (t2, -1.0), (hb, th)], th),
        );
    }

    for (g, gen) in net.generators.iter().enumerate() {
        let (pmin, pmax) = (gen.p_min / base, gen.p_max / base);
        let [p1, p2] = p_g[g];
        let hg = h_g[g];
        b.pair(Tag::PgMax1, (vec![(p1, 1.0), (hg, pmin)], pmin), (vec![(p1, 1.0), (hg, pmax)], pmax));
        b.pair(Tag::PgMax2, (vec![(p2, 1.0), (hg, -pmin)], 0.0), (vec![(p2, 1.0), (hg, -pmax)], 0.0));
        b.row(Tag::Hg1, vec![(h_b[inc.gen_sub[g]], 1.0), (hg, 1.0)], Sense::Le, 1.0);
        let mut link = vec![(p1, 1.0), (p2, 1.0)];
        link.extend(segs[g].iter().map(|&s| (s, -1.0)));
        b.row(Tag::GenCost, link, Sense::Eq, pmin);
    }

    for (d, dem) in net.demands.iter().enumerate() {
        let pd = dem.p_max_nominal / base;
        let [p1, p2] = p_d[d];
        let hd = h_d[d];
        b.pair(Tag::PdMax1, (vec![(p1, 1.0)], 0.0), (vec![(p1, 1.0), (hd, pd)], pd));
        b.pair(Tag::PdMax2, (vec![(p2, 1.0)], 0.0), (vec![(p2, 1.0), (hd, -pd)], 0.0));
        b.row(Tag::Hd1, vec![(h_b[inc.demand_sub[d]], 1.0), (hd, 1.0)], Sense::Le, 1.0);
    }

    for (l, line) in net.lines.iter().enumerate() {
        let pmax = line_limits[l] / base;
        let (hl, pl) = (h_l[l], p_l[l]);
        let ends = inc.line_ends[l];
        for e in End::BOTH {
            let sub = if e == End::From { ends.0 } else { ends.1 };
            let hle = h_le[l][e.index()];
            let [q1, q2] = p_le[l][e.index()];
            b.pair(
                Tag::PlMax1,
                (vec![(q1, 1.0), (hle, -pmax)], -pmax),
                (vec![(q1, 1.0), (hle, pmax)], pmax),
            );
            b.pair(Tag::PlMax2, (vec![(q2, 1.0), (hle, pmax)], 0.0), (vec![(q2, 1.0), (hle, -pmax)], 0.0));
            b.pair(Tag::HlMax, (vec![(q1, 1.0), (hl, pmax)], 0.0), (vec![(q1, 1.0), (hl, -pmax)], 0.0));
            b.row(Tag::Hl, vec![(hle, 1.0), (hl, -1.0)], Sense::Le, 0.0);
            b.row(Tag::SumPl, vec![(pl, 1.0), (q1, -1.0), (q2, -1.0)], Sense::Eq, 0.0);
            let te = th_le[l][e.index()];
            let [b1, b2] = theta[sub];
            b.pair(
                Tag::ThetaMax1,
                (vec![(te, 1.0), (b1, -1.0), (hle, th)], 0.0),
                (vec![(te, 1.0), (b1, -1.0), (hle, -th)], 0.0),
            );
            b.pair(
                Tag::ThetaMax2,
                (vec![(te, 1.0), (b2, -1.0), (hle, -th)], -th),
                (vec![(te, 1.0), (b2, -1.0), (hle, th)], th),
            );
            b.row(Tag::Hle1, vec![(h_b[sub], 1.0), (hle, 1.0)], Sense::Le, 1.0);
        }
        b.pair(Tag::HlMax, (vec![(pl, 1.0), (hl, pmax)], 0.0), (vec![(pl, 1.0), (hl, -pmax)], 0.0));
        b.pair(Tag::DlrLimit, (vec![(pl, 1.0)], -pmax), (vec![(pl, 1.0)], pmax));

        let m = big_m[l];
        let bb = line.susceptance_nominal;
        let [tf, tt] = th_le[l];
        let mut law = vec![(tf, bb), (tt, -bb), (pl, -1.0)];
        if let Some(v) = vid.iter().find(|v| v.line == l) {
            law.push((v.product, 1.0));
        }
        let mut lower = law.clone();
        lower.push((hl, -m));
        let mut upper = law;
        upper.push((hl, m));
        b.pair(Tag::PfNto, (lower, -m), (upper, m));
    }

    for (k, v) in vid.iter().enumerate() {
        let (lo, hi) = v.term.x_bounds;
        b.pair(Tag::VidRange, (vec![(v.delta_b, 1.0)], lo), (vec![(v.delta_b, 1.0)], hi));
        for row in envelope_rows(v, &v.term, k) {
            b.rows.push(row);
        }
    }

    for s in 0..net.substations.len() {
        for (i, tag) in [(0, Tag::Balance1), (1, Tag::Balance2)] {
            let mut row = Vec::new();
            for &g in &inc.gens_at[s] {
                row.push((p_g[g][i], 1.0));
            }
            for &d in &inc.demands_at[s] {
                row.push((p_d[d][i], -1.0));
            }
            for &l in &inc.lines_from[s] {
                let col = if cfg.strict_balance { p_l[l] } else { p_le[l][0][i] };
                row.push((col, -1.0));
            }
            for &l in &inc.lines_to[s] {
                let col = if cfg.strict_balance { p_l[l] } else { p_le[l][1][i] };
                row.push((col, 1.0));
            }
            b.row(tag, row, Sense::Eq, 0.0);
        }
    }

    b.row(Tag::ReferencePin, vec![(theta[reference][0], 1.0)], Sense::Eq, 0.0);

    // objective
    let mut terms = Vec::new();
    let mut constant = 0.0;
    for (g, gen) in net.generators.iter().enumerate() {
        let bp = &bps[g];
        constant += gen.cost(bp[0]);
        for (k, &s) in segs[g].iter().enumerate() {
            let (a, c) = (bp[k], bp[k + 1]);
            let slope = (gen.cost(c) - gen.cost(a)) / (c - a);
            terms.push(ObjectiveTerm { var: s, coef: slope * base, tag: Tag::GenCost });
        }
    }
    for (d, dem) in net.demands.iter().enumerate() {
        constant += cfg.voll * dem.p_max_nominal;
        for i in 0..2 {
            terms.push(ObjectiveTerm { var: p_d[d][i], coef: -cfg.voll * base, tag: Tag::LoadShedding });
        }
    }

    let mut f = Formulation {
        network: net.clone(),
        variables: b.vars,
        constraints: b.rows,
        objective: Objective { terms, constant },
        vid,
        fixed: BTreeMap::new(),
        meta: Meta {
            hour,
            scenario: String::new(),
            mode: TopologyMode::Optimized,
            config: cfg.clone(),
            line_limits,
            big_m,
            breakpoints: bps,
        },
    };
    if cfg.topology_mode == TopologyMode::Fixed {
        let a = nominal_assignment(&f);
        f = fix_topology(&f, &a)?;
    }
    Ok(f)
}

/// Envelope and `δ`-box rows for `box_` on VID line `v` (index `k`).
pub fn envelope_rows(v: &VidLine, box_: &BilinearTerm, k: usize) -> Vec<Constraint> {
    let cuts = mccormick_envelope(box_).expect("formulation boxes are finite");
    let mut out = Vec::with_capacity(6);
    let (yl, yu) = box_.y_bounds;
    let delta = vec![(v.theta_from, 1.0), (v.theta_to, -1.0)];
    out.push(Constraint { coeffs: delta.clone(), sense: Sense::Ge, rhs: yl, tag: Tag::VidSusceptance, envelope_of: Some(k) });
    out.push(Constraint { coeffs: delta, sense: Sense::Le, rhs: yu, tag: Tag::VidSusceptance, envelope_of: Some(k) });
    for c in cuts {
        // w - cx·Δb - cy·(θf - θt) (>= or <=) c0
        let coeffs = vec![(v.product, 1.0), (v.delta_b, -c.cx), (v.theta_from, -c.cy), (v.theta_to, c.cy)];
        let sense = match c.sense {
            CutSense::Below => Sense::Ge,
            CutSense::Above => Sense::Le,
        };
        out.push(Constraint { coeffs, sense, rhs: c.c0, tag: Tag::VidSusceptance, envelope_of: Some(k) });
    }
    out
}
