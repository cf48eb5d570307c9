//! Bounded-variable primal simplex on a dense tableau, with Bland's rule.
//!
//! Problems are tiny (LP relaxations of quantile-regression MIOs and
//! Chebyshev fits), so the tableau is rebuilt from scratch per solve.

use crate::error::{Error, Result};

use super::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bound {
    pub lower: f64,
    pub upper: f64,
}

impl Bound {
    pub const FREE: Bound = Bound {
        lower: f64::NEG_INFINITY,
        upper: f64::INFINITY,
    };
    pub const NONNEG: Bound = Bound {
        lower: 0.0,
        upper: f64::INFINITY,
    };

    pub fn new(lower: f64, upper: f64) -> Self {
        Bound { lower, upper }
    }
}

/// `min c.x  s.t.  A x (<=,=,>=) b,  lower <= x <= upper`.
#[derive(Clone, Debug)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub constraints: Vec<Vec<f64>>,
    pub senses: Vec<Sense>,
    pub rhs: Vec<f64>,
    pub bounds: Vec<Bound>,
}

impl LpProblem {
    /// All variables start non-negative.
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        LpProblem {
            objective,
            constraints: Vec::new(),
            senses: Vec::new(),
            rhs: Vec::new(),
            bounds: vec![Bound::NONNEG; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_constraint(&mut self, row: Vec<f64>, sense: Sense, rhs: f64) {
        self.constraints.push(row);
        self.senses.push(sense);
        self.rhs.push(rhs);
    }

    /// Sparse convenience form of [`LpProblem::add_constraint`].
    pub fn add_sparse(&mut self, terms: &[(usize, f64)], sense: Sense, rhs: f64) {
        let mut row = vec![0.0; self.num_vars()];
        for &(j, a) in terms {
            row[j] += a;
        }
        self.add_constraint(row, sense, rhs);
    }

    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        self.bounds[j] = Bound { lower, upper };
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.bounds.len() != n {
            return Err(Error::Dimension(format!(
                "{} bounds for {n} variables",
                self.bounds.len()
            )));
        }
        if self.senses.len() != self.constraints.len() || self.rhs.len() != self.constraints.len()
        {
            return Err(Error::Dimension(
                "constraint rows, senses and right-hand sides differ in length".into(),
            ));
        }
        for (i, row) in self.constraints.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Dimension(format!(
                    "constraint {i} has {} coefficients for {n} variables",
                    row.len()
                )));
            }
            if row.iter().any(|a| !a.is_finite()) || !self.rhs[i].is_finite() {
                return Err(Error::NonFinite("lp constraint"));
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("lp objective"));
        }
        for (j, b) in self.bounds.iter().enumerate() {
            if b.lower.is_nan() || b.upper.is_nan() || b.lower > b.upper {
                return Err(Error::InvalidArgument(format!(
                    "variable {j} has bounds [{}, {}]",
                    b.lower, b.upper
                )));
            }
        }
        Ok(())
    }

    /// Largest violation of any constraint or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0_f64;
        for (i, row) in self.constraints.iter().enumerate() {
            let ax: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
            let r = ax - self.rhs[i];
            let v = match self.senses[i] {
                Sense::Le => r.max(0.0),
                Sense::Ge => (-r).max(0.0),
                Sense::Eq => r.abs(),
            };
            worst = worst.max(v);
        }
        for (b, &xj) in self.bounds.iter().zip(x) {
            worst = worst.max(b.lower - xj).max(xj - b.upper);
        }
        worst
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            LpOutcome::Optimal { value, .. } => Some(*value),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LpOptions {
    pub max_iterations: usize,
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub pivot_tol: f64,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions {
            max_iterations: 50_000,
            feasibility_tol: 1e-9,
            optimality_tol: 1e-10,
            pivot_tol: 1e-11,
        }
    }
}

pub fn solve_lp(p: &LpProblem) -> Result<LpOutcome> {
    solve_lp_with(p, LpOptions::default())
}

pub fn solve_lp_with(p: &LpProblem, opts: LpOptions) -> Result<LpOutcome> {
    p.validate()?;
    let mut t = Tableau::build(p, opts);
    if t.artificial_count > 0 {
        let phase1: Vec<f64> = (0..t.ncols)
            .map(|j| if t.is_artificial(j) { 1.0 } else { 0.0 })
            .collect();
        match t.run(&phase1)? {
            Step::Optimal => {}
            Step::Unbounded => unreachable!("phase one objective is bounded below"),
        }
        let infeas: f64 = (0..t.ncols)
            .filter(|&j| t.is_artificial(j))
            .map(|j| t.x[j])
            .sum();
        let scale = 1.0 + p.rhs.iter().fold(0.0_f64, |m, b| m.max(b.abs()));
        if infeas > opts.feasibility_tol * scale {
            return Ok(LpOutcome::Infeasible);
        }
        for j in 0..t.ncols {
            if t.is_artificial(j) {
                t.lower[j] = 0.0;
                t.upper[j] = 0.0;
                t.x[j] = 0.0;
            }
        }
        t.recompute_basics();
    }
    let mut cost = p.objective.clone();
    cost.resize(t.ncols, 0.0);
    match t.run(&cost)? {
        Step::Unbounded => Ok(LpOutcome::Unbounded),
        Step::Optimal => {
            let x: Vec<f64> = t.x[..p.num_vars()].to_vec();
            let value = x.iter().zip(&p.objective).map(|(a, b)| a * b).sum();
            Ok(LpOutcome::Optimal { x, value })
        }
    }
}

enum Step {
    Optimal,
    Unbounded,
}

struct Tableau {
    opts: LpOptions,
    nrows: usize,
    ncols: usize,
    first_artificial: usize,
    artificial_count: usize,
    /// `B^{-1} [A | slacks | artificials]`, row-major.
    t: Matrix,
    /// `B^{-1} b` is not stored; basic values are tracked in `x` directly.
    x: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    a_orig: Matrix,
    b_orig: Vec<f64>,
}

impl Tableau {
    fn build(p: &LpProblem, opts: LpOptions) -> Tableau {
        let n = p.num_vars();
        let m = p.constraints.len();
        let mut lower: Vec<f64> = p.bounds.iter().map(|b| b.lower).collect();
        let mut upper: Vec<f64> = p.bounds.iter().map(|b| b.upper).collect();
        let mut x: Vec<f64> = p
            .bounds
            .iter()
            .map(|b| {
                if b.lower.is_finite() {
                    b.lower
                } else if b.upper.is_finite() {
                    b.upper
                } else {
                    0.0
                }
            })
            .collect();
        // slack columns n..n+m: row_i . x + s_i = b_i
        for s in &p.senses {
            let (lo, hi) = match s {
                Sense::Le => (0.0, f64::INFINITY),
                Sense::Ge => (f64::NEG_INFINITY, 0.0),
                Sense::Eq => (0.0, 0.0),
            };
            lower.push(lo);
            upper.push(hi);
            x.push(0.0);
        }
        let mut basis = vec![0; m];
        let mut art_rows = Vec::new();
        let mut art_sign = Vec::new();
        for i in 0..m {
            let ax: f64 = p.constraints[i].iter().zip(&x[..n]).map(|(a, b)| a * b).sum();
            let need = p.rhs[i] - ax;
            let (lo, hi) = (lower[n + i], upper[n + i]);
            if need >= lo && need <= hi {
                x[n + i] = need;
                basis[i] = n + i;
            } else {
                let clamped = need.clamp(lo, hi);
                x[n + i] = clamped;
                let resid = need - clamped;
                art_rows.push(i);
                art_sign.push(resid.signum());
            }
        }
        let first_artificial = n + m;
        let ncols = first_artificial + art_rows.len();
        let mut a_orig = Matrix::zeros(m, ncols);
        for i in 0..m {
            for j in 0..n {
                a_orig[(i, j)] = p.constraints[i][j];
            }
            a_orig[(i, n + i)] = 1.0;
        }
        for (k, (&i, &sgn)) in art_rows.iter().zip(&art_sign).enumerate() {
            let j = first_artificial + k;
            a_orig[(i, j)] = sgn;
            lower.push(0.0);
            upper.push(f64::INFINITY);
            let ax: f64 = (0..first_artificial).map(|c| a_orig[(i, c)] * x[c]).sum();
            x.push((p.rhs[i] - ax) * sgn);
            basis[i] = j;
        }
        let mut is_basic = vec![false; ncols];
        for &b in &basis {
            is_basic[b] = true;
        }
        // Initial basis columns are +-unit vectors, so B^{-1} A is A with
        // artificial rows scaled by their sign.
        let mut t = a_orig.clone();
        for (&i, &sgn) in art_rows.iter().zip(&art_sign) {
            if sgn < 0.0 {
                for j in 0..ncols {
                    t[(i, j)] = -t[(i, j)];
                }
            }
        }
        Tableau {
            opts,
            nrows: m,
            ncols,
            first_artificial,
            artificial_count: art_rows.len(),
            t,
            x,
            lower,
            upper,
            basis,
            is_basic,
            a_orig,
            b_orig: p.rhs.clone(),
        }
    }

    fn is_artificial(&self, j: usize) -> bool {
        j >= self.first_artificial
    }

    /// Re-derives basic values from the nonbasic ones: `x_B = B^{-1}(b - N x_N)`,
    /// using the identity `T = B^{-1} A` (so `B^{-1} b = x_B + T_N x_N` at any
    /// consistent point). Used after fixing artificials to zero.
    fn recompute_basics(&mut self) {
        // B^{-1} (b - N x_N): solve through the original system with a dense
        // Gaussian elimination on the basis columns.
        let m = self.nrows;
        if m == 0 {
            return;
        }
        let mut bmat = Matrix::zeros(m, m);
        for (k, &j) in self.basis.iter().enumerate() {
            for i in 0..m {
                bmat[(i, k)] = self.a_orig[(i, j)];
            }
        }
        let mut rhs = self.b_orig.clone();
        for j in 0..self.ncols {
            if self.is_basic[j] || self.x[j] == 0.0 {
                continue;
            }
            for (i, r) in rhs.iter_mut().enumerate() {
                *r -= self.a_orig[(i, j)] * self.x[j];
            }
        }
        if let Ok(Some(xb)) = super::solve_linear(&bmat, &rhs) {
            for (k, &j) in self.basis.iter().enumerate() {
                self.x[j] = xb[k];
            }
        }
    }

    fn run(&mut self, cost: &[f64]) -> Result<Step> {
        let opts = self.opts;
        for _ in 0..opts.max_iterations {
            // reduced costs d_j = c_j - c_B . T_j
            let mut entering = None;
            for j in 0..self.ncols {
                if self.is_basic[j] || self.lower[j] == self.upper[j] {
                    continue;
                }
                let mut d = cost[j];
                for i in 0..self.nrows {
                    d -= cost[self.basis[i]] * self.t[(i, j)];
                }
                let can_increase = self.x[j] < self.upper[j];
                let can_decrease = self.x[j] > self.lower[j];
                if d < -opts.optimality_tol && can_increase {
                    entering = Some((j, 1.0));
                    break;
                }
                if d > opts.optimality_tol && can_decrease {
                    entering = Some((j, -1.0));
                    break;
                }
            }
            let Some((j, dir)) = entering else {
                return Ok(Step::Optimal);
            };

            // ratio test
            let mut theta = f64::INFINITY;
            let mut leave: Option<(usize, f64)> = None; // (row, bound value hit)
            for i in 0..self.nrows {
                let a = self.t[(i, j)];
                if a.abs() <= opts.pivot_tol {
                    continue;
                }
                let b = self.basis[i];
                let delta = -dir * a;
                let (limit, hit) = if delta < 0.0 {
                    if !self.lower[b].is_finite() {
                        continue;
                    }
                    (((self.x[b] - self.lower[b]) / -delta).max(0.0), self.lower[b])
                } else {
                    if !self.upper[b].is_finite() {
                        continue;
                    }
                    (((self.upper[b] - self.x[b]) / delta).max(0.0), self.upper[b])
                };
                let better = match leave {
                    None => limit < theta,
                    Some((r, _)) => {
                        limit < theta - 1e-15 * theta.abs().max(1.0)
                            || (limit <= theta + 1e-15 * theta.abs().max(1.0)
                                && b < self.basis[r])
                    }
                };
                if better {
                    theta = limit;
                    leave = Some((i, hit));
                }
            }
            let flip = self.upper[j] - self.lower[j];
            if flip.is_finite() && flip <= theta {
                self.shift(j, dir, flip);
                self.x[j] = if dir > 0.0 { self.upper[j] } else { self.lower[j] };
                continue;
            }
            let Some((r, hit)) = leave else {
                return Ok(Step::Unbounded);
            };
            self.shift(j, dir, theta);
            let leaving = self.basis[r];
            self.x[leaving] = hit;
            self.pivot(r, j);
        }
        Err(Error::NoConvergence {
            what: "simplex",
            iterations: opts.max_iterations,
        })
    }

    fn shift(&mut self, j: usize, dir: f64, theta: f64) {
        if theta == 0.0 {
            return;
        }
        self.x[j] += dir * theta;
        for i in 0..self.nrows {
            let a = self.t[(i, j)];
            if a != 0.0 {
                let b = self.basis[i];
                self.x[b] -= dir * a * theta;
            }
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let piv = self.t[(r, j)];
        for c in 0..self.ncols {
            self.t[(r, c)] /= piv;
        }
        for i in 0..self.nrows {
            if i == r {
                continue;
            }
            let f = self.t[(i, j)];
            if f == 0.0 {
                continue;
            }
            for c in 0..self.ncols {
                let v = self.t[(r, c)];
                self.t[(i, c)] -= f * v;
            }
            self.t[(i, j)] = 0.0;
        }
        let old = self.basis[r];
        self.is_basic[old] = false;
        self.is_basic[j] = true;
        self.basis[r] = j;
    }
}
