//! Node-breaker network data model.
//!
//! Every substation carries two busbars implicitly; which busbar an element
//! attaches to is an optimization decision, not part of the data. Powers are
//! stored in MW, susceptances in per-unit on `base_mva`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::case_io::CaseError;

macro_rules! id_newtype {
    ($name:ident, $prefix:literal) => {
        #[derive(
            Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

id_newtype!(SubstationId, "sub");
id_newtype!(LineId, "line");
id_newtype!(GenId, "gen");
id_newtype!(DemandId, "load");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Substation {
    pub id: SubstationId,
    #[serde(default)]
    pub is_reference: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub id: LineId,
    pub from_sub: SubstationId,
    pub to_sub: SubstationId,
    /// Nominal susceptance `1/x` in per-unit (positive for inductive branches).
    pub susceptance_nominal: f64,
    /// Static thermal rating in MW.
    pub p_max_static: f64,
    #[serde(default)]
    pub vid_equipped: bool,
    #[serde(default)]
    pub dlr_equipped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub id: GenId,
    pub substation: SubstationId,
    pub p_min: f64,
    pub p_max: f64,
    /// $/MW²h
    pub cost_quadratic: f64,
    /// $/MWh
    pub cost_linear: f64,
    /// $/h
    pub cost_constant: f64,
}

impl Generator {
    /// Hourly cost of producing `p` MW.
    pub fn cost(&self, p: f64) -> f64 {
        self.cost_quadratic * p * p + self.cost_linear * p + self.cost_constant
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Demand {
    pub id: DemandId,
    pub substation: SubstationId,
    /// Maximum (nominal) demand in MW.
    pub p_max_nominal: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    #[serde(default)]
    pub name: String,
    pub base_mva: f64,
    pub substations: Vec<Substation>,
    pub lines: Vec<Line>,
    pub generators: Vec<Generator>,
    pub demands: Vec<Demand>,
}

/// Index-based incidence sets: `G_b`, `D_b`, `LF_b`, `LT_b` per substation
/// position, plus the reverse maps.
#[derive(Debug, Clone, PartialEq)]
pub struct Incidence {
    pub sub_index: BTreeMap<SubstationId, usize>,
    pub gens_at: Vec<Vec<usize>>,
    pub demands_at: Vec<Vec<usize>>,
    pub lines_from: Vec<Vec<usize>>,
    pub lines_to: Vec<Vec<usize>>,
    pub gen_sub: Vec<usize>,
    pub demand_sub: Vec<usize>,
    /// `(from, to)` substation positions per line.
    pub line_ends: Vec<(usize, usize)>,
    pub reference: Option<usize>,
}

impl Network {
    pub fn substation_position(&self, id: SubstationId) -> Option<usize> {
        self.substations.iter().position(|s| s.id == id)
    }

    pub fn line_position(&self, id: LineId) -> Option<usize> {
        self.lines.iter().position(|l| l.id == id)
    }

    pub fn reference_substation(&self) -> Option<&Substation> {
        self.substations.iter().find(|s| s.is_reference)
    }

    pub fn total_demand(&self) -> f64 {
        self.demands.iter().map(|d| d.p_max_nominal).sum()
    }

    /// Resolves every cross-reference into positional incidence sets.
    pub fn incidence(&self) -> Result<Incidence, CaseError> {
        let mut sub_index = BTreeMap::new();
        for (pos, s) in self.substations.iter().enumerate() {
            if sub_index.insert(s.id, pos).is_some() {
                return Err(CaseError::DuplicateId(s.id.to_string()));
            }
        }
        let n = self.substations.len();
        let lookup = |id: SubstationId, owner: String| {
            sub_index
                .get(&id)
                .copied()
                .ok_or(CaseError::DanglingReference { owner, target: id.to_string() })
        };
        let mut inc = Incidence {
            gens_at: vec![Vec::new(); n],
            demands_at: vec![Vec::new(); n],
            lines_from: vec![Vec::new(); n],
            lines_to: vec![Vec::new(); n],
            gen_sub: Vec::with_capacity(self.generators.len()),
            demand_sub: Vec::with_capacity(self.demands.len()),
            line_ends: Vec::with_capacity(self.lines.len()),
            reference: self.substations.iter().position(|s| s.is_reference),
            sub_index: BTreeMap::new(),
        };
        for (k, g) in self.generators.iter().enumerate() {
            let b = lookup(g.substation, g.id.to_string())?;
            inc.gens_at[b].push(k);
            inc.gen_sub.push(b);
        }
        for (k, d) in self.demands.iter().enumerate() {
            let b = lookup(d.substation, d.id.to_string())?;
            inc.demands_at[b].push(k);
            inc.demand_sub.push(b);
        }
        for (k, l) in self.lines.iter().enumerate() {
            let f = lookup(l.from_sub, l.id.to_string())?;
            let t = lookup(l.to_sub, l.id.to_string())?;
            inc.lines_from[f].push(k);
            inc.lines_to[t].push(k);
            inc.line_ends.push((f, t));
        }
        inc.sub_index = sub_index;
        Ok(inc)
    }

    /// Sets `p_min` of every generator to zero.
    pub fn with_zero_min_output(mut self) -> Self {
        for g in &mut self.generators {
            g.p_min = 0.0;
        }
        self
    }

    /// Marks exactly the given lines as DLR / VID equipped, clearing all
    /// other flags.
    pub fn equip(&self, dlr: &[LineId], vid: &[LineId]) -> Network {
        let mut net = self.clone();
        for l in &mut net.lines {
            l.dlr_equipped = dlr.contains(&l.id);
            l.vid_equipped = vid.contains(&l.id);
        }
        net
    }
}
