use std::collections::BTreeMap;

use super::build::envelope_rows;
use super::*;

/// The base network: couplers closed, every element on busbar 1, every line
/// in service.
pub fn nominal_assignment(f: &Formulation) -> BTreeMap<BinaryVar, u8> {
    f.binaries()
        .map(|(_, b)| {
            let v = match b {
                BinaryVar::Busbar(_) | BinaryVar::Line(_) => 1,
                _ => 0,
            };
            (b, v)
        })
        .collect()
}

/// Replaces every binary by a constant. The assignment must cover all of
/// them.
pub fn fix_topology(f: &Formulation, assignment: &BTreeMap<BinaryVar, u8>) -> Result<Formulation, FormulationError> {
    if let Some((_, b)) = f.binaries().find(|(_, b)| !assignment.contains_key(b)) {
        return Err(FormulationError::IncompleteAssignment(f.binary_name(b)));
    }
    let mut out = fix_binaries(f, assignment)?;
    out.meta.mode = TopologyMode::Fixed;
    Ok(out)
}

const CONST_TOL: f64 = 1e-9;

/// Replaces the listed binaries by constants, leaving the others free.
pub fn fix_binaries(f: &Formulation, assignment: &BTreeMap<BinaryVar, u8>) -> Result<Formulation, FormulationError> {
    let index = f.index_map();
    let mut value: Vec<Option<f64>> = vec![None; f.variables.len()];
    for (&b, &v) in assignment {
        if v > 1 {
            return Err(FormulationError::InvalidConfig(format!("{} = {v} is not binary", f.binary_name(b))));
        }
        match index.get(&VarKind::Binary(b)) {
            Some(&j) => value[j] = Some(v as f64),
            None if f.fixed.get(&b) == Some(&v) => {}
            None => return Err(FormulationError::UnknownBinary(format!("{b:?}"))),
        }
    }

    let mut remap = vec![usize::MAX; f.variables.len()];
    let mut variables = Vec::with_capacity(f.variables.len());
    for (j, v) in f.variables.iter().enumerate() {
        if value[j].is_none() {
            remap[j] = variables.len();
            variables.push(v.clone());
        }
    }

    let mut rows: Vec<Constraint> = Vec::with_capacity(f.constraints.len());
    for c in &f.constraints {
        let mut rhs = c.rhs;
        let mut coeffs = Vec::with_capacity(c.coeffs.len());
        for &(j, a) in &c.coeffs {
            match value[j] {
                Some(v) => rhs -= a * v,
                None => coeffs.push((remap[j], a)),
            }
        }
        if coeffs.is_empty() {
            let ok = match c.sense {
                Sense::Le => 0.0 <= rhs + CONST_TOL,
                Sense::Ge => 0.0 >= rhs - CONST_TOL,
                Sense::Eq => rhs.abs() <= CONST_TOL,
            };
            if !ok {
                return Err(FormulationError::Infeasible {
                    tag: c.tag,
                    detail: format!("constant row 0 {:?} {rhs}", c.sense),
                });
            }
            continue;
        }
        let row = Constraint { coeffs, sense: c.sense, rhs, tag: c.tag, envelope_of: c.envelope_of };
        if let Some(prev) = rows.last_mut() {
            let pair = prev.sense == Sense::Ge && row.sense == Sense::Le && prev.tag == row.tag;
            if pair && prev.coeffs == row.coeffs && (prev.rhs - row.rhs).abs() <= CONST_TOL {
                prev.sense = Sense::Eq;
                if prev.tag == Tag::PfNto {
                    prev.tag = Tag::DcFlow;
                }
                continue;
            }
        }
        rows.push(row);
    }

    let objective = Objective {
        terms: f
            .objective
            .terms
            .iter()
            .map(|t| ObjectiveTerm { var: remap[t.var], ..t.clone() })
            .collect(),
        constant: f.objective.constant,
    };
    let mut fixed = f.fixed.clone();
    for (&b, &v) in assignment {
        fixed.insert(b, v);
    }
    let mut vid: Vec<VidLine> = f
        .vid
        .iter()
        .map(|v| {
            let mut v = v.clone();
            v.delta_b = remap[v.delta_b];
            v.product = remap[v.product];
            v.theta_from = remap[v.theta_from];
            v.theta_to = remap[v.theta_to];
            v.term.aux_var = v.product;
            v
        })
        .collect();

    // closed VID lines get the flow-limit-implied angle box
    let cfg = &f.meta.config;
    let mut retighten = Vec::new();
    for (k, v) in vid.iter_mut().enumerate() {
        if fixed.get(&BinaryVar::Line(v.line)) == Some(&1) && f.fixed.get(&BinaryVar::Line(v.line)) != Some(&1) {
            let pmax = f.meta.line_limits[v.line] / f.network.base_mva;
            let implied = pmax / ((1.0 - cfg.vid_range) * v.susceptance.abs());
            let half = (2.0 * cfg.theta_max).min(implied);
            let (lo, hi) = v.term.y_bounds;
            v.term.y_bounds = (lo.max(-half), hi.min(half));
            retighten.push(k);
        }
    }
    if !retighten.is_empty() {
        rows.retain(|c| !matches!(c.envelope_of, Some(k) if retighten.contains(&k)));
        for &k in &retighten {
            rows.extend(envelope_rows(&vid[k], &vid[k].term, k));
        }
    }

    Ok(Formulation {
        network: f.network.clone(),
        variables,
        constraints: rows,
        objective,
        vid,
        fixed,
        meta: f.meta.clone(),
    })
}

/// Pins `Δb` of the listed VID entries (index into `f.vid`) so the product
/// becomes linear and exact.
pub fn fix_susceptances(f: &Formulation, values: &[(usize, f64)]) -> Result<Formulation, FormulationError> {
    let mut out = f.clone();
    for &(k, c) in values {
        let v = out
            .vid
            .get_mut(k)
            .ok_or_else(|| FormulationError::InvalidConfig(format!("no VID entry {k}")))?;
        let (lo, hi) = v.term.x_bounds;
        if !(c >= lo - 1e-12 && c <= hi + 1e-12) {
            return Err(FormulationError::InvalidConfig(format!("Δb {c} outside [{lo}, {hi}]")));
        }
        let c = c.clamp(lo, hi);
        v.term.x_bounds = (c, c);
        out.variables[v.delta_b].lo = c;
        out.variables[v.delta_b].hi = c;
    }
    let touched: Vec<usize> = values.iter().map(|&(k, _)| k).collect();
    out.constraints.retain(|c| !matches!(c.envelope_of, Some(k) if touched.contains(&k)));
    for &k in &touched {
        let rows = envelope_rows(&out.vid[k], &out.vid[k].term, k);
        out.constraints.extend(rows);
    }
    Ok(out)
}
