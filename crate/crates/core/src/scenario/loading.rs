use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ScenarioError;
use crate::dlr::RatingSeries;
use crate::formulation::SolutionPoint;
use crate::network::{LineId, Network};

/// Line flows of one solved period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodFlows {
    pub hour: usize,
    pub weight: f64,
    /// MW, zero for lines out of service
    pub flows: BTreeMap<LineId, f64>,
}

impl PeriodFlows {
    pub fn from_solution(hour: usize, weight: f64, s: &SolutionPoint) -> Self {
        let flows = s.lines.iter().map(|l| (l.id, if l.in_service { l.flow_mw } else { 0.0 })).collect();
        PeriodFlows { hour, weight, flows }
    }
}

/// Time-averaged `|P_l| / P_l^max(t)` per line.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LineLoading {
    pub per_line: BTreeMap<LineId, f64>,
}

impl LineLoading {
    pub fn mean(&self) -> f64 {
        if self.per_line.is_empty() {
            return 0.0;
        }
        self.per_line.values().sum::<f64>() / self.per_line.len() as f64
    }
}

/// Weighted mean loading over the periods, using each period's own limit
/// (DLR-adjusted where the ratings say so).
pub fn mean_line_loading(periods: &[PeriodFlows], ratings: &RatingSeries) -> Result<LineLoading, ScenarioError> {
    let total: f64 = periods.iter().map(|p| p.weight).sum();
    if periods.is_empty() || !(total > 0.0) {
        return Err(ScenarioError::HourMismatch("no periods to average".into()));
    }
    let mut per_line: BTreeMap<LineId, f64> = BTreeMap::new();
    for p in periods {
        for (&id, &flow) in &p.flows {
            let limit = ratings
                .limit(id, p.hour)
                .ok_or_else(|| ScenarioError::HourMismatch(format!("no rating for {id} at hour {}", p.hour)))?;
            *per_line.entry(id).or_default() += p.weight * flow.abs() / limit;
        }
    }
    for v in per_line.values_mut() {
        *v /= total;
    }
    Ok(LineLoading { per_line })
}

/// Lines by descending baseline mean loading, ties by id.
pub fn rank_priority_lines(
    net: &Network,
    base: &[PeriodFlows],
    ratings: &RatingSeries,
) -> Result<Vec<LineId>, ScenarioError> {
    for &h in &ratings.hours {
        if !base.iter().any(|p| p.hour == h) {
            return Err(ScenarioError::MissingBaseline(h));
        }
    }
    let loading = mean_line_loading(base, ratings)?;
    let mut order: Vec<(LineId, f64)> =
        net.lines.iter().map(|l| (l.id, loading.per_line.get(&l.id).copied().unwrap_or(0.0))).collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(order.into_iter().map(|(id, _)| id).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadingRow {
    pub line: LineId,
    pub baseline: f64,
    pub treated: f64,
    pub delta: f64,
}

/// Per-line mean loading of one treated cell against the baseline cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadingReport {
    pub cell: (usize, usize),
    pub rows: Vec<LoadingRow>,
    pub mean_delta: f64,
}

impl LoadingReport {
    pub fn compare(cell: (usize, usize), baseline: &LineLoading, treated: &LineLoading) -> Self {
        let rows: Vec<LoadingRow> = baseline
            .per_line
            .iter()
            .map(|(&line, &b)| {
                let t = treated.per_line.get(&line).copied().unwrap_or(0.0);
                LoadingRow { line, baseline: b, treated: t, delta: t - b }
            })
            .collect();
        let mean_delta = if rows.is_empty() { 0.0 } else { rows.iter().map(|r| r.delta).sum::<f64>() / rows.len() as f64 };
        LoadingReport { cell, rows, mean_delta }
    }

    pub fn csv_header() -> &'static str {
        "dlr,vid,line,baseline_loading,treated_loading,delta\n"
    }

    pub fn csv_rows(&self) -> String {
        let mut s = String::new();
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{:.6},{:.6},{:.6}\n",
                self.cell.0, self.cell.1, r.line.0, r.baseline, r.treated, r.delta
            ));
        }
        s
    }
}
