use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::network::{Network, SubstationId};

/// One violated network invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub invariant: &'static str,
    pub element: String,
    pub detail: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}: {}", self.invariant, self.element, self.detail)
    }
}

fn diag(invariant: &'static str, element: impl fmt::Display, detail: impl Into<String>) -> Diagnostic {
    Diagnostic { invariant, element: element.to_string(), detail: detail.into() }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.0[hi] = lo;
        }
    }
}

/// Checks every network invariant; empty result means the network is usable.
///
/// Connectivity is judged on the base topology (all lines closed, busbars
/// merged).
pub fn validate_network(net: &Network) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut index: BTreeMap<SubstationId, usize> = BTreeMap::new();
    for (k, s) in net.substations.iter().enumerate() {
        if index.insert(s.id, k).is_some() {
            out.push(diag("unique-id", s.id, "duplicate substation id"));
        }
    }
    let refs = net.substations.iter().filter(|s| s.is_reference).count();
    if refs != 1 {
        out.push(diag("single-reference", "network", format!("{refs} reference substations (expected 1)")));
    }
    if !(net.base_mva > 0.0 && net.base_mva.is_finite()) {
        out.push(diag("base-mva", "network", format!("invalid base {}", net.base_mva)));
    }
    let mut ids = BTreeSet::new();
    for l in &net.lines {
        if !ids.insert(l.id) {
            out.push(diag("unique-id", l.id, "duplicate line id"));
        }
        for end in [l.from_sub, l.to_sub] {
            if !index.contains_key(&end) {
                out.push(diag("dangling-reference", l.id, format!("endpoint {end} does not exist")));
            }
        }
        if l.susceptance_nominal == 0.0 || !l.susceptance_nominal.is_finite() {
            out.push(diag("nonzero-susceptance", l.id, format!("susceptance {}", l.susceptance_nominal)));
        }
        if !(l.p_max_static > 0.0 && l.p_max_static.is_finite()) {
            out.push(diag("positive-rating", l.id, format!("rating {} MW", l.p_max_static)));
        }
    }
    let mut ids = BTreeSet::new();
    for g in &net.generators {
        if !ids.insert(g.id) {
            out.push(diag("unique-id", g.id, "duplicate generator id"));
        }
        if !index.contains_key(&g.substation) {
            out.push(diag("dangling-reference", g.id, format!("substation {} does not exist", g.substation)));
        }
        if !(0.0 <= g.p_min && g.p_min <= g.p_max && g.p_max.is_finite()) {
            out.push(diag("generator-limits", g.id, format!("need 0 <= p_min ({}) <= p_max ({})", g.p_min, g.p_max)));
        }
        if !(g.cost_quadratic >= 0.0) {
            out.push(diag("convex-cost", g.id, format!("quadratic cost {} < 0", g.cost_quadratic)));
        }
    }
    let mut ids = BTreeSet::new();
    for d in &net.demands {
        if !ids.insert(d.id) {
            out.push(diag("unique-id", d.id, "duplicate demand id"));
        }
        if !index.contains_key(&d.substation) {
            out.push(diag("dangling-reference", d.id, format!("substation {} does not exist", d.substation)));
        }
        if !(d.p_max_nominal >= 0.0 && d.p_max_nominal.is_finite()) {
            out.push(diag("nonnegative-demand", d.id, format!("demand {} MW", d.p_max_nominal)));
        }
    }

    if !net.substations.is_empty() {
        let mut uf = UnionFind((0..net.substations.len()).collect());
        for l in &net.lines {
            if let (Some(&a), Some(&b)) = (index.get(&l.from_sub), index.get(&l.to_sub)) {
                uf.union(a, b);
            }
        }
        let mut comps: BTreeMap<usize, Vec<SubstationId>> = BTreeMap::new();
        for (k, s) in net.substations.iter().enumerate() {
            comps.entry(uf.find(k)).or_default().push(s.id);
        }
        if comps.len() > 1 {
            let listing: Vec<String> = comps
                .values()
                .map(|c| format!("{{{}}}", c.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(", ")))
                .collect();
            out.push(diag(
                "connected",
                "network",
                format!("{} components: {}", comps.len(), listing.join(" ")),
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case_io::{parse_case, tests::TRIANGLE};

    #[test]
    fn triangle_is_clean() {
        assert!(validate_network(&parse_case(TRIANGLE).unwrap()).is_empty());
    }

    #[test]
    fn dangling_line_endpoint() {
        let mut net = parse_case(TRIANGLE).unwrap();
        net.lines[2].to_sub = SubstationId(42);
        let d = validate_network(&net);
        assert_eq!(d.len(), 1, "{d:?}");
        assert_eq!(d[0].invariant, "dangling-reference");
        assert_eq!(d[0].element, "line3");
    }

    #[test]
    fn disconnected_components_reported_once() {
        let mut net = parse_case(TRIANGLE).unwrap();
        // keep only 1-2; substation 3 becomes an island
        net.lines.retain(|l| l.id.0 == 1);
        let d = validate_network(&net);
        assert_eq!(d.len(), 1, "{d:?}");
        assert_eq!(d[0].invariant, "connected");
        assert!(d[0].detail.contains("{sub1, sub2}"));
        assert!(d[0].detail.contains("{sub3}"));
    }

    #[test]
    fn incidence_consistent_with_elements() {
        let net = parse_case(include_str!("../../data/case24_ieee_rts.m")).unwrap();
        assert!(validate_network(&net).is_empty());
        let inc = net.incidence().unwrap();
        for (b, gens) in inc.gens_at.iter().enumerate() {
            for &g in gens {
                assert_eq!(net.generators[g].substation, net.substations[b].id);
            }
        }
        for (b, ls) in inc.lines_from.iter().enumerate() {
            for &l in ls {
                assert_eq!(net.lines[l].from_sub, net.substations[b].id);
            }
        }
        for (b, ls) in inc.lines_to.iter().enumerate() {
            for &l in ls {
                assert_eq!(net.lines[l].to_sub, net.substations[b].id);
            }
        }
        assert_eq!(inc.gens_at.iter().map(Vec::len).sum::<usize>(), net.generators.len());
        assert_eq!(inc.demands_at.iter().map(Vec::len).sum::<usize>(), net.demands.len());
    }
}
