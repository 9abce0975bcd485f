//! Dense bounded-variable two-phase primal simplex. Slow but simple; used only
//! as an independent reference for the library's LP layer.

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Default)]
pub struct Lp {
    pub cost: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub rows: Vec<(Vec<(usize, f64)>, Cmp, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpResult {
    Optimal { objective: f64, x: Vec<f64> },
    Infeasible,
}

impl LpResult {
    pub fn objective(&self) -> Option<f64> {
        match self {
            LpResult::Optimal { objective, .. } => Some(*objective),
            LpResult::Infeasible => None,
        }
    }
}

impl Lp {
    /// Adds a column; `lo` must be finite.
    pub fn var(&mut self, cost: f64, lo: f64, hi: f64) -> usize {
        assert!(lo.is_finite() && lo <= hi, "bad bounds [{lo}, {hi}]");
        self.cost.push(cost);
        self.lo.push(lo);
        self.hi.push(hi);
        self.cost.len() - 1
    }

    pub fn row(&mut self, coeffs: Vec<(usize, f64)>, cmp: Cmp, rhs: f64) {
        self.rows.push((coeffs, cmp, rhs));
    }

    pub fn solve(&self) -> LpResult {
        Tableau::new(self).run(self)
    }
}

const PIVOT_EPS: f64 = 1e-9;

struct Tableau {
    m: usize,
    n_struct: usize,
    width: usize,
    /// B^{-1}A, row-major m × width
    t: Vec<f64>,
    /// B^{-1}b
    beta: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    /// values of nonbasic columns
    x: Vec<f64>,
    first_art: usize,
}

impl Tableau {
    fn new(lp: &Lp) -> Tableau {
        let m = lp.rows.len();
        let n = lp.cost.len();
        let slacks = lp.rows.iter().filter(|r| r.1 != Cmp::Eq).count();
        let width = n + slacks + m;
        let first_art = n + slacks;
        let mut t = vec![0.0; m * width];
        let mut lo = lp.lo.clone();
        let mut hi = lp.hi.clone();
        lo.resize(width, 0.0);
        hi.resize(first_art, f64::INFINITY);
        hi.resize(width, f64::INFINITY);
        let mut beta = vec![0.0; m];
        let mut s = n;
        for (i, (coeffs, cmp, rhs)) in lp.rows.iter().enumerate() {
            for &(j, a) in coeffs {
                t[i * width + j] += a;
            }
            match cmp {
                Cmp::Le => {
                    t[i * width + s] = 1.0;
                    s += 1;
                }
                Cmp::Ge => {
                    t[i * width + s] = -1.0;
                    s += 1;
                }
                Cmp::Eq => {}
            }
            beta[i] = *rhs;
        }
        let x: Vec<f64> = lo.clone();
        // residual at the starting point decides each artificial's sign
        for i in 0..m {
            let r: f64 = beta[i] - (0..first_art).map(|j| t[i * width + j] * x[j]).sum::<f64>();
            let sign = if r < 0.0 { -1.0 } else { 1.0 };
            t[i * width + first_art + i] = sign;
            if sign < 0.0 {
                for j in 0..width {
                    t[i * width + j] = -t[i * width + j];
                }
                beta[i] = -beta[i];
            }
        }
        let basis: Vec<usize> = (0..m).map(|i| first_art + i).collect();
        let mut is_basic = vec![false; width];
        for &b in &basis {
            is_basic[b] = true;
        }
        Tableau { m, n_struct: n, width, t, beta, lo, hi, basis, is_basic, x, first_art }
    }

    fn basic_values(&self) -> Vec<f64> {
        let mut xb = self.beta.clone();
        for j in 0..self.width {
            if !self.is_basic[j] && self.x[j] != 0.0 {
                for (i, v) in xb.iter_mut().enumerate() {
                    *v -= self.t[i * self.width + j] * self.x[j];
                }
            }
        }
        xb
    }

    fn reduced_costs(&self, c: &[f64]) -> Vec<f64> {
        let mut d = c.to_vec();
        for i in 0..self.m {
            let cb = c[self.basis[i]];
            if cb != 0.0 {
                for j in 0..self.width {
                    d[j] -= cb * self.t[i * self.width + j];
                }
            }
        }
        d
    }

    fn pivot(&mut self, r: usize, j: usize, d: &mut [f64]) {
        let w = self.width;
        let p = self.t[r * w + j];
        for k in 0..w {
            self.t[r * w + k] /= p;
        }
        self.beta[r] /= p;
        let (pivot_row, br) = (self.t[r * w..(r + 1) * w].to_vec(), self.beta[r]);
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * w + j];
            if f != 0.0 {
                for k in 0..w {
                    self.t[i * w + k] -= f * pivot_row[k];
                }
                self.beta[i] -= f * br;
            }
        }
        let dj = d[j];
        if dj != 0.0 {
            for k in 0..w {
                d[k] -= dj * pivot_row[k];
            }
        }
        let leaving = self.basis[r];
        self.is_basic[leaving] = false;
        self.is_basic[j] = true;
        self.basis[r] = j;
    }

    /// Minimises `c` from the current basis. Returns false if unbounded.
    fn optimize(&mut self, c: &[f64]) -> bool {
        let mut d = self.reduced_costs(c);
        let scale = c.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let dtol = 1e-11 * scale;
        let mut degenerate = 0usize;
        for _ in 0..100_000 {
            let xb = self.basic_values();
            let bland = degenerate > 50;
            let mut enter: Option<(usize, f64)> = None;
            for j in 0..self.width {
                if self.is_basic[j] || self.hi[j] - self.lo[j] <= 0.0 {
                    continue;
                }
                let at_lo = self.x[j] <= self.lo[j];
                let dir = if d[j] < -dtol && at_lo {
                    1.0
                } else if d[j] > dtol && !at_lo {
                    -1.0
                } else {
                    continue;
                };
                if bland {
                    enter = Some((j, dir));
                    break;
                }
                if enter.is_none_or(|(k, _)| d[j].abs() > d[k].abs()) {
                    enter = Some((j, dir));
                }
            }
            let Some((j, dir)) = enter else { return true };
            let mut step = self.hi[j] - self.lo[j];
            let mut leave: Option<(usize, bool)> = None;
            let mut best_alpha = 0.0;
            for i in 0..self.m {
                let alpha = self.t[i * self.width + j];
                let delta = -dir * alpha;
                let b = self.basis[i];
                let lim = if delta < -PIVOT_EPS {
                    (xb[i] - self.lo[b]).max(0.0) / -delta
                } else if delta > PIVOT_EPS && self.hi[b].is_finite() {
                    (self.hi[b] - xb[i]).max(0.0) / delta
                } else {
                    continue;
                };
                if lim < step - 1e-12 || (lim <= step + 1e-12 && leave.is_some() && alpha.abs() > best_alpha) {
                    step = lim;
                    leave = Some((i, delta > 0.0));
                    best_alpha = alpha.abs();
                }
            }
            if !step.is_finite() {
                return false;
            }
            degenerate = if step <= 1e-12 { degenerate + 1 } else { 0 };
            match leave {
                None => {
                    // bound flip
                    self.x[j] = if dir > 0.0 { self.hi[j] } else { self.lo[j] };
                }
                Some((r, to_upper)) => {
                    let b = self.basis[r];
                    self.x[b] = if to_upper { self.hi[b] } else { self.lo[b] };
                    self.x[j] = 0.0;
                    self.pivot(r, j, &mut d);
                }
            }
        }
        panic!("simplex iteration limit");
    }

    fn run(mut self, lp: &Lp) -> LpResult {
        let mut c1 = vec![0.0; self.width];
        for c in &mut c1[self.first_art..] {
            *c = 1.0;
        }
        assert!(self.optimize(&c1), "phase one cannot be unbounded");
        let xb = self.basic_values();
        let infeas: f64 = (0..self.m).filter(|&i| self.basis[i] >= self.first_art).map(|i| xb[i]).sum::<f64>()
            + (self.first_art..self.width).filter(|&j| !self.is_basic[j]).map(|j| self.x[j]).sum::<f64>();
        let bscale = lp.rows.iter().fold(1.0f64, |m, r| m.max(r.2.abs()));
        if infeas > 1e-8 * bscale {
            return LpResult::Infeasible;
        }
        for j in self.first_art..self.width {
            self.hi[j] = 0.0;
            if !self.is_basic[j] {
                self.x[j] = 0.0;
            }
        }
        let mut c2 = lp.cost.clone();
        c2.resize(self.width, 0.0);
        assert!(self.optimize(&c2), "reference LPs are bounded");
        let xb = self.basic_values();
        let mut x = self.x[..self.n_struct].to_vec();
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.n_struct {
                x[b] = xb[i];
            }
        }
        let objective = x.iter().zip(&lp.cost).map(|(v, c)| v * c).sum();
        LpResult::Optimal { objective, x }
    }
}
