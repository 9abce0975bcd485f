//! LP relaxation layer.
//!
//! [`LpModel`] is a presolved column/row description derived from a
//! formulation; [`LpBackend`] solves it cold or re-solves a previous optimum
//! after edits (bound fixings, added rows) from its final basis.

use std::sync::Arc;

use microlp::{ComparisonOp, OptimizationDirection, Problem, Variable as MlpVar};

use crate::formulation::{Constraint, Formulation, Sense};

const BOUND_TOL: f64 = 1e-9;

/// Where a formulation column ended up after presolve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LpCol {
    Var(usize),
    Fixed(f64),
}

#[derive(Debug, Clone)]
pub struct LpRow {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub struct LpModel {
    pub cols: Vec<LpCol>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub cost: Vec<f64>,
    pub constant: f64,
    pub rows: Vec<LpRow>,
}

/// A change applied on top of a solved LP, in formulation columns.
#[derive(Debug, Clone, PartialEq)]
pub enum LpEdit {
    Fix(usize, f64),
    Row(Vec<(usize, f64)>, Sense, f64),
}

#[derive(Debug, Clone)]
pub enum LpStatus<W> {
    /// objective (including the constant), values in formulation columns
    Optimal { objective: f64, x: Vec<f64>, warm: W },
    Infeasible,
    Failed(String),
}

impl LpModel {
    /// Presolves `constraints` over the formulation's columns with the given
    /// bounds. Returns `None` if bounds or constant rows are contradictory.
    pub fn build(f: &Formulation, lo: &[f64], hi: &[f64], constraints: &[Constraint]) -> Option<LpModel> {
        let n = f.variables.len();
        let (mut lo, mut hi) = (lo.to_vec(), hi.to_vec());
        // single-column rows become bounds
        let mut multi = Vec::with_capacity(constraints.len());
        for c in constraints {
            if let [(j, a)] = c.coeffs[..] {
                if a == 0.0 {
                    continue;
                }
                let v = c.rhs / a;
                let (as_upper, as_lower) = match (c.sense, a > 0.0) {
                    (Sense::Eq, _) => (true, true),
                    (Sense::Le, true) | (Sense::Ge, false) => (true, false),
                    (Sense::Le, false) | (Sense::Ge, true) => (false, true),
                };
                if as_upper {
                    hi[j] = hi[j].min(v);
                }
                if as_lower {
                    lo[j] = lo[j].max(v);
                }
            } else {
                multi.push(c);
            }
        }
        let mut cols = Vec::with_capacity(n);
        let (mut lp_lo, mut lp_hi) = (Vec::new(), Vec::new());
        for j in 0..n {
            if lo[j] > hi[j] + BOUND_TOL * (1.0 + hi[j].abs()) {
                return None;
            }
            if hi[j] - lo[j] <= BOUND_TOL {
                cols.push(LpCol::Fixed(0.5 * (lo[j] + hi[j])));
            } else {
                cols.push(LpCol::Var(lp_lo.len()));
                lp_lo.push(lo[j]);
                lp_hi.push(hi[j]);
            }
        }
        let mut cost = vec![0.0; lp_lo.len()];
        let mut constant = f.objective.constant;
        for t in &f.objective.terms {
            match cols[t.var] {
                LpCol::Var(k) => cost[k] += t.coef,
                LpCol::Fixed(v) => constant += t.coef * v,
            }
        }
        let mut rows = Vec::with_capacity(multi.len());
        for c in multi {
            let row = substitute(&cols, &c.coeffs, c.sense, c.rhs)?;
            if let Some(r) = row {
                rows.push(r);
            }
        }
        Some(LpModel { cols, lo: lp_lo, hi: lp_hi, cost, constant, rows })
    }

    pub fn num_cols(&self) -> usize {
        self.lo.len()
    }

    /// Lifts LP values back to formulation columns.
    pub fn lift(&self, lp_x: &[f64]) -> Vec<f64> {
        self.cols
            .iter()
            .map(|c| match *c {
                LpCol::Var(k) => lp_x[k],
                LpCol::Fixed(v) => v,
            })
            .collect()
    }

    /// Largest scaled row or bound violation of `x` (formulation columns).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        let mut lp_x = vec![0.0; self.num_cols()];
        for (j, c) in self.cols.iter().enumerate() {
            if let LpCol::Var(k) = *c {
                lp_x[k] = x[j];
            }
        }
        for (k, &v) in lp_x.iter().enumerate() {
            worst = worst.max(self.lo[k] - v).max(v - self.hi[k]);
        }
        for r in &self.rows {
            let act: f64 = r.coeffs.iter().map(|&(k, a)| a * lp_x[k]).sum();
            let scale = r.coeffs.iter().fold(1.0f64, |m, &(_, a)| m.max(a.abs()));
            let v = match r.sense {
                Sense::Le => act - r.rhs,
                Sense::Ge => r.rhs - act,
                Sense::Eq => (act - r.rhs).abs(),
            };
            worst = worst.max(v / scale);
        }
        worst
    }
}

/// Rewrites a row over formulation columns into LP columns. `Err`-like
/// `None` means a contradictory constant row; `Some(None)` a dropped one.
fn substitute(cols: &[LpCol], coeffs: &[(usize, f64)], sense: Sense, rhs: f64) -> Option<Option<LpRow>> {
    let mut rhs = rhs;
    let mut out = Vec::with_capacity(coeffs.len());
    for &(j, a) in coeffs {
        match cols[j] {
            LpCol::Var(k) => out.push((k, a)),
            LpCol::Fixed(v) => rhs -= a * v,
        }
    }
    if out.is_empty() {
        let tol = 1e-7 * (1.0 + rhs.abs());
        let ok = match sense {
            Sense::Le => rhs >= -tol,
            Sense::Ge => rhs <= tol,
            Sense::Eq => rhs.abs() <= tol,
        };
        return if ok { Some(None) } else { None };
    }
    Some(Some(LpRow { coeffs: out, sense, rhs }))
}

/// An LP engine able to re-solve from a previous optimum.
pub trait LpBackend: Send + Sync {
    type Warm: Clone + Send + Sync;

    fn solve(&self, model: &Arc<LpModel>) -> LpStatus<Self::Warm>;

    fn resolve(&self, warm: &Self::Warm, edits: &[LpEdit]) -> LpStatus<Self::Warm>;
}

/// Sparse primal/dual simplex from the `microlp` crate.
#[derive(Debug, Clone, Copy, Default)]
pub struct MicroLp;

#[derive(Clone)]
pub struct MicroWarm {
    model: Arc<LpModel>,
    vars: Arc<Vec<MlpVar>>,
    solution: microlp::Solution,
}

fn op(sense: Sense) -> ComparisonOp {
    match sense {
        Sense::Le => ComparisonOp::Le,
        Sense::Ge => ComparisonOp::Ge,
        Sense::Eq => ComparisonOp::Eq,
    }
}

impl MicroLp {
    fn finish(
        model: &Arc<LpModel>,
        vars: &Arc<Vec<MlpVar>>,
        outcome: Result<microlp::SolveOutcome, microlp::Error>,
    ) -> LpStatus<MicroWarm> {
        match outcome {
            Ok(microlp::SolveOutcome::Solution(solution)) => {
                let lp_x: Vec<f64> = vars.iter().map(|&v| solution.var_value_raw(v)).collect();
                let objective = solution.objective() + model.constant;
                LpStatus::Optimal {
                    objective,
                    x: model.lift(&lp_x),
                    warm: MicroWarm { model: model.clone(), vars: vars.clone(), solution },
                }
            }
            Ok(microlp::SolveOutcome::Interrupted(_)) => LpStatus::Failed("interrupted".into()),
            Err(microlp::Error::Infeasible) => LpStatus::Infeasible,
            Err(e) => LpStatus::Failed(e.to_string()),
        }
    }
}

impl LpBackend for MicroLp {
    type Warm = MicroWarm;

    fn solve(&self, model: &Arc<LpModel>) -> LpStatus<MicroWarm> {
        let mut p = Problem::new(OptimizationDirection::Minimize);
        let vars: Vec<MlpVar> = (0..model.num_cols()).map(|k| p.add_var(model.cost[k], (model.lo[k], model.hi[k]))).collect();
        for r in &model.rows {
            let expr: Vec<(MlpVar, f64)> = r.coeffs.iter().map(|&(k, a)| (vars[k], a)).collect();
            p.add_constraint(expr.as_slice(), op(r.sense), r.rhs);
        }
        let vars = Arc::new(vars);
        Self::finish(model, &vars, p.solve())
    }

    fn resolve(&self, warm: &MicroWarm, edits: &[LpEdit]) -> LpStatus<MicroWarm> {
        let model = &warm.model;
        let mut solution = warm.solution.clone();
        for e in edits {
            let step = match e {
                LpEdit::Fix(j, v) => match model.cols[*j] {
                    LpCol::Var(k) => solution.fix_var(warm.vars[k], *v),
                    LpCol::Fixed(c) if (c - v).abs() <= 1e-7 => continue,
                    LpCol::Fixed(_) => return LpStatus::Infeasible,
                },
                LpEdit::Row(coeffs, sense, rhs) => match substitute(&model.cols, coeffs, *sense, *rhs) {
                    None => return LpStatus::Infeasible,
                    Some(None) => continue,
                    Some(Some(r)) => {
                        let expr: Vec<(MlpVar, f64)> = r.coeffs.iter().map(|&(k, a)| (warm.vars[k], a)).collect();
                        solution.add_constraint(expr.as_slice(), op(r.sense), r.rhs)
                    }
                },
            };
            solution = match step {
                Ok(microlp::SolveOutcome::Solution(s)) => s,
                other => return Self::finish(model, &warm.vars, other),
            };
        }
        Self::finish(model, &warm.vars, Ok(microlp::SolveOutcome::Solution(solution)))
    }
}
