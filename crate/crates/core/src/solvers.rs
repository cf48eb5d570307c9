//! Nominal, regularized and robust linear regression with unsquared norm
//! losses, `min_β ‖y − Xβ‖_p + c ‖β‖_h`.
//!
//! The solver is the primal-dual hybrid gradient method on the saddle form
//! `min_β max_{‖ζ‖_{p*} ≤ 1} ζᵀ(Xβ − y) + c‖β‖_h`; feasible dual points give
//! a lower bound, so every run ends with a duality gap.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::norms::{dual_witness, project_ball, vec_norm, Exponent};
use crate::numerics::{pseudo_inverse, svd, Matrix};
use crate::robustify::{
    adversarial_witness, classify_equivalence, rank_one_norm, worst_case_loss, Regularizer,
    UncertaintySet,
};
use crate::sampling;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegressionProblem {
    pub x: Matrix,
    pub y: Vec<f64>,
    pub loss_p: Exponent,
}

impl RegressionProblem {
    pub fn new(x: Matrix, y: Vec<f64>, loss_p: Exponent) -> Result<Self> {
        if x.rows() == 0 || x.cols() == 0 {
            return Err(Error::Dimension("design matrix must be nonempty".into()));
        }
        if y.len() != x.rows() {
            return Err(Error::Dimension(format!(
                "{} responses for {} rows",
                y.len(),
                x.rows()
            )));
        }
        if !x.is_finite() || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("regression data"));
        }
        Ok(RegressionProblem { x, y, loss_p })
    }

    pub fn residual(&self, beta: &[f64]) -> Vec<f64> {
        let xb = self.x.mul_vec(beta).expect("validated shape");
        self.y.iter().zip(xb).map(|(a, b)| a - b).collect()
    }

    pub fn loss(&self, beta: &[f64]) -> f64 {
        vec_norm(&self.residual(beta), self.loss_p)
    }

    pub fn objective(&self, reg: &Regularizer, beta: &[f64]) -> f64 {
        self.loss(beta) + reg.eval(beta)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Stop once `objective − dual bound ≤ gap_tol · (1 + objective)`.
    pub gap_tol: f64,
    pub check_every: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iterations: 200_000,
            gap_tol: 1e-10,
            check_every: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveReport {
    pub beta: Vec<f64>,
    pub objective: f64,
    /// `(lower, upper)` optimal values of the two bound problems when the
    /// robust problem is not equivalent to a regularized one.
    pub bracket: Option<(f64, f64)>,
    pub iterations: usize,
    pub converged: bool,
    pub duality_gap: f64,
    /// Relative norm of the smallest subgradient found at `beta`.
    pub certificate: f64,
    /// Best objective so far, recorded at every gap check.
    pub trace: Vec<f64>,
}

pub fn solve_regularized(prob: &RegressionProblem, h_coeff: f64, h_exponent: Exponent) -> Result<SolveReport> {
    if !(h_coeff >= 0.0) || !h_coeff.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "penalty coefficient must be finite and nonnegative, got {h_coeff}"
        )));
    }
    let reg = Regularizer {
        coefficient: h_coeff,
        exponent: h_exponent,
    };
    solve_regularized_with(prob, &reg, SolverOptions::default())
}

pub fn solve_regularized_with(prob: &RegressionProblem, reg: &Regularizer, opts: SolverOptions) -> Result<SolveReport> {
    let (m, n) = prob.x.shape();
    let c = reg.coefficient;
    let h = reg.exponent;
    let p = prob.loss_p;
    let big = svd(&prob.x)?.singular_values[0];
    if big == 0.0 {
        let beta = vec![0.0; n];
        let objective = prob.objective(reg, &beta);
        return Ok(SolveReport {
            certificate: optimality_certificate(prob, reg, &beta)?,
            beta,
            objective,
            bracket: None,
            iterations: 0,
            converged: true,
            duality_gap: 0.0,
            trace: vec![objective],
        });
    }
    let step = 0.99 / big;
    let range_proj = {
        let pinv = pseudo_inverse(&prob.x, 1e-12)?;
        prob.x.matmul(&pinv)?
    };
    let dual_bound = |zeta: &[f64]| -> f64 {
        let mut best = 0.0_f64;
        let mut consider = |z: &[f64]| {
            let zn = vec_norm(z, p.dual());
            if zn == 0.0 {
                return;
            }
            let xt = prob.x.tr_mul_vec(z).expect("shape");
            let xn = vec_norm(&xt, h.dual());
            let mut s = 1.0 / zn;
            if xn > 0.0 {
                if c == 0.0 {
                    if xn > 1e-12 * zn * big {
                        return;
                    }
                } else {
                    s = s.min(c / xn);
                }
            }
            let val = -s * z.iter().zip(&prob.y).map(|(a, b)| a * b).sum::<f64>();
            best = best.max(val);
        };
        consider(zeta);
        let pr = range_proj.mul_vec(zeta).expect("shape");
        let null: Vec<f64> = zeta.iter().zip(pr).map(|(a, b)| a - b).collect();
        consider(&null);
        best
    };

    let mut beta = vec![0.0; n];
    let mut bar = beta.clone();
    let mut zeta = vec![0.0; m];
    let mut best_beta = beta.clone();
    let mut best_obj = prob.objective(reg, &beta);
    let mut best_dual = dual_bound(&zeta);
    let mut trace = vec![best_obj];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iterations {
        iterations += 1;
        let xb = prob.x.mul_vec(&bar)?;
        let arg: Vec<f64> = (0..m).map(|i| zeta[i] + step * (xb[i] - prob.y[i])).collect();
        zeta = project_ball(&arg, p.dual(), 1.0);
        let xtz = prob.x.tr_mul_vec(&zeta)?;
        let w: Vec<f64> = (0..n).map(|j| beta[j] - step * xtz[j]).collect();
        let next: Vec<f64> = if c == 0.0 {
            w
        } else {
            let shrink = project_ball(&w, h.dual(), step * c);
            w.iter().zip(shrink).map(|(a, b)| a - b).collect()
        };
        for j in 0..n {
            bar[j] = 2.0 * next[j] - beta[j];
        }
        beta = next;
        if iterations % opts.check_every == 0 || iterations == opts.max_iterations {
            let obj = prob.objective(reg, &beta);
            if obj < best_obj {
                best_obj = obj;
                best_beta.clone_from(&beta);
            }
            best_dual = best_dual.max(dual_bound(&zeta));
            trace.push(best_obj);
            if best_obj - best_dual <= opts.gap_tol * (1.0 + best_obj) {
                converged = true;
                break;
            }
        }
    }
    Ok(SolveReport {
        certificate: optimality_certificate(prob, reg, &best_beta)?,
        beta: best_beta,
        objective: best_obj,
        bracket: None,
        iterations,
        converged,
        duality_gap: (best_obj - best_dual).max(0.0),
        trace,
    })
}

/// One factor of the subdifferential, as a set to project onto.
#[derive(Clone, Debug)]
enum Piece {
    Point(Vec<f64>),
    /// `None` coordinates range over `[-1, 1]`.
    Box(Vec<Option<f64>>),
    /// `Σ_k w_k s_k e_{i_k}` with `w` in the simplex.
    SignedSimplex { len: usize, active: Vec<(usize, f64)> },
    Ball(Exponent),
}

impl Piece {
    /// Subdifferential of `‖·‖_q` at `v`, with entries within `tol` of a kink
    /// treated as sitting on it.
    fn of_norm(v: &[f64], q: Exponent, tol: f64) -> Piece {
        let big = v.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
        let sgn = |x: f64| if x < 0.0 { -1.0 } else { 1.0 };
        if big <= tol {
            return Piece::Ball(q.dual());
        }
        if q.is_one() {
            return Piece::Box(v.iter().map(|&x| (x.abs() > tol).then(|| sgn(x))).collect());
        }
        if q.is_inf() {
            let active = v
                .iter()
                .enumerate()
                .filter(|(_, x)| x.abs() >= big - tol)
                .map(|(i, &x)| (i, sgn(x)))
                .collect();
            return Piece::SignedSimplex { len: v.len(), active };
        }
        Piece::Point(dual_witness(v, q.dual()).expect("nonzero"))
    }

    fn project(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Piece::Point(p) => p.clone(),
            Piece::Box(b) => b
                .iter()
                .zip(x)
                .map(|(f, &v)| f.unwrap_or(v.clamp(-1.0, 1.0)))
                .collect(),
            Piece::SignedSimplex { len, active } => {
                let w: Vec<f64> = active.iter().map(|&(i, s)| s * x[i]).collect();
                let w = project_simplex(&w);
                let mut out = vec![0.0; *len];
                for (k, &(i, s)) in active.iter().enumerate() {
                    out[i] = s * w[k];
                }
                out
            }
            Piece::Ball(q) => project_ball(x, *q, 1.0),
        }
    }
}

fn project_simplex(w: &[f64]) -> Vec<f64> {
    let mut s: Vec<f64> = w.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &sk) in s.iter().enumerate() {
        cum += sk;
        let t = (cum - 1.0) / (k + 1) as f64;
        if sk > t {
            theta = t;
        }
    }
    w.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Smallest `‖Xᵀg + c s‖` over `g ∈ ∂‖Xβ − y‖_p`, `s ∈ ∂‖β‖_h`, relative to
/// `‖X‖₂ + c`. Entries within `1e-6` (relative) of a kink count as on it.
pub fn optimality_certificate(prob: &RegressionProblem, reg: &Regularizer, beta: &[f64]) -> Result<f64> {
    let x = &prob.x;
    let c = reg.coefficient;
    let r: Vec<f64> = prob.residual(beta).iter().map(|v| -v).collect();
    let yscale = 1.0 + vec_norm(&prob.y, Exponent::INF);
    let bscale = 1.0 + vec_norm(beta, Exponent::INF);
    let gp = Piece::of_norm(&r, prob.loss_p, 1e-6 * yscale);
    let sp = if c > 0.0 {
        Piece::of_norm(beta, reg.exponent, 1e-6 * bscale)
    } else {
        Piece::Point(vec![0.0; beta.len()])
    };
    let xnorm = svd(x)?.singular_values[0];
    let scale = (xnorm + c).max(f64::MIN_POSITIVE);
    let apply = |g: &[f64], s: &[f64]| -> Vec<f64> {
        let xt = x.tr_mul_vec(g).expect("shape");
        xt.iter().zip(s).map(|(a, b)| a + c * b).collect()
    };
    let lip = 2.0 * (xnorm * xnorm + c * c);
    let mut g = gp.project(&vec![0.0; r.len()]);
    let mut s = sp.project(&vec![0.0; beta.len()]);
    let (mut g_prev, mut s_prev) = (g.clone(), s.clone());
    let mut best = vec_norm(&apply(&g, &s), Exponent::TWO);
    let mut t = 1.0_f64;
    for _ in 0..20_000 {
        if best <= 1e-9 * scale {
            break;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let mom = (t - 1.0) / t_next;
        let gy: Vec<f64> = g.iter().zip(&g_prev).map(|(a, b)| a + mom * (a - b)).collect();
        let sy: Vec<f64> = s.iter().zip(&s_prev).map(|(a, b)| a + mom * (a - b)).collect();
        let res = apply(&gy, &sy);
        let grad_g = x.mul_vec(&res)?;
        let gn: Vec<f64> = gy.iter().zip(&grad_g).map(|(a, b)| a - 2.0 * b / lip).collect();
        let sn: Vec<f64> = sy.iter().zip(&res).map(|(a, b)| a - 2.0 * c * b / lip).collect();
        g_prev = std::mem::replace(&mut g, gp.project(&gn));
        s_prev = std::mem::replace(&mut s, sp.project(&sn));
        t = t_next;
        best = best.min(vec_norm(&apply(&g, &s), Exponent::TWO));
    }
    Ok(best / scale)
}

/// `min ‖y − Xβ‖₂² + λ‖β‖₁` by cyclic coordinate descent. The scalar case
/// is `β = sign(y) max(|y| − λ/2, 0)`.
pub fn lasso_squared(x: &Matrix, y: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let (m, n) = x.shape();
    if y.len() != m {
        return Err(Error::Dimension("response length".into()));
    }
    let mut beta = vec![0.0; n];
    let mut r: Vec<f64> = y.to_vec();
    let col_sq: Vec<f64> = (0..n).map(|j| x.column(j).iter().map(|v| v * v).sum()).collect();
    for sweep in 0..100_000 {
        let mut moved = 0.0_f64;
        for j in 0..n {
            if col_sq[j] == 0.0 {
                continue;
            }
            let rho: f64 = (0..m).map(|i| x[(i, j)] * r[i]).sum::<f64>() + col_sq[j] * beta[j];
            let new = rho.signum() * (rho.abs() - lambda / 2.0).max(0.0) / col_sq[j];
            let d = new - beta[j];
            if d != 0.0 {
                for i in 0..m {
                    r[i] -= x[(i, j)] * d;
                }
                beta[j] = new;
                moved = moved.max(d.abs());
            }
        }
        if moved <= 1e-14 * (1.0 + vec_norm(&beta, Exponent::INF)) {
            return Ok(beta);
        }
        if sweep == 99_999 {
            break;
        }
    }
    Err(Error::NoConvergence {
        what: "lasso coordinate descent",
        iterations: 100_000,
    })
}

/// `min ‖y − Xβ‖₂² + λ‖β‖₂²`, i.e. `(XᵀX + λI)β = Xᵀy`.
pub fn ridge_squared(x: &Matrix, y: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let n = x.cols();
    let mut g = x.transpose().matmul(x)?;
    for j in 0..n {
        g[(j, j)] += lambda;
    }
    let rhs = x.tr_mul_vec(y)?;
    crate::numerics::solve_linear(&g, &rhs)?
        .ok_or_else(|| Error::InvalidArgument("ridge system is singular".into()))
}

/// Robust regression over `set`. Equivalent sets are solved as the
/// regularized problem they equal. Otherwise both bound problems are solved;
/// the upper-bound minimizer is returned, `bracket` holds both optimal
/// values and `objective` is the worst-case loss at the returned `β`.
pub fn solve_robust(prob: &RegressionProblem, set: &UncertaintySet) -> Result<SolveReport> {
    if set.rows != prob.x.rows() || set.cols != prob.x.cols() {
        return Err(Error::Dimension("uncertainty set shape differs from the design".into()));
    }
    let verdict = classify_equivalence(prob.loss_p, set)?;
    let opts = SolverOptions::default();
    let mut upper = solve_regularized_with(prob, &verdict.regularizer, opts)?;
    if verdict.is_exact() {
        return Ok(upper);
    }
    let lower = solve_regularized_with(prob, &verdict.lower(), opts)?;
    let z = prob.residual(&upper.beta);
    let wc = worst_case_loss(&z, &upper.beta, set, prob.loss_p)?;
    upper.bracket = Some((lower.objective, upper.objective));
    upper.objective = wc.value;
    upper.converged &= lower.converged;
    Ok(upper)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Audit {
    /// Exact worst case, or the best lower bound when `exact` is false.
    pub analytic: f64,
    pub exact: bool,
    /// `‖z‖_p + h̄(β)`, always an upper bound.
    pub upper_bound: f64,
    pub sampled_max: f64,
    pub trials: usize,
}

/// Largest loss `‖y − (X + Δ)β‖_p` over `trials` random `Δ` on the boundary
/// of `set`, against the analytic worst case. With `inject_witness` the
/// exact-regime witness is added to the sample.
pub fn robust_objective_audit(
    beta: &[f64],
    prob: &RegressionProblem,
    set: &UncertaintySet,
    trials: usize,
    seed: u64,
    inject_witness: bool,
) -> Result<Audit> {
    if trials == 0 {
        return Err(Error::InvalidArgument("audit needs at least one trial".into()));
    }
    let (m, n) = prob.x.shape();
    let p = prob.loss_p;
    let z = prob.residual(beta);
    let verdict = classify_equivalence(p, set)?;
    let wc = worst_case_loss(&z, beta, set, p)?;
    let upper_bound = vec_norm(&z, p) + verdict.regularizer.eval(beta);
    let loss_with = |delta: &Matrix| -> Result<f64> {
        let db = delta.mul_vec(beta)?;
        let r: Vec<f64> = z.iter().zip(db).map(|(a, b)| a - b).collect();
        Ok(vec_norm(&r, p))
    };
    let full_norm_available = set
        .norm_of(&sampling::normal_matrix(&mut sampling::rng(seed ^ 1), m, n))
        .is_ok();
    let mut rng = sampling::rng(seed);
    let mut sampled = f64::NEG_INFINITY;
    for t in 0..trials {
        let delta = if full_norm_available && t % 2 == 0 {
            let d = sampling::normal_matrix(&mut rng, m, n);
            let nd = set.norm_of(&d)?;
            if nd == 0.0 {
                continue;
            }
            d.scale(set.radius / nd)
        } else {
            let u = sampling::normal_vec(&mut rng, m);
            let w = sampling::normal_vec(&mut rng, n);
            let nd = rank_one_norm(&u, &w, &set.shape)?;
            if nd == 0.0 {
                continue;
            }
            Matrix::outer(&u, &w).scale(set.radius / nd)
        };
        sampled = sampled.max(loss_with(&delta)?);
    }
    if inject_witness {
        // the witness maximizes ‖z + Δβ‖; the loss uses z − Δβ, so flip it
        let w = if verdict.is_exact() {
            adversarial_witness(&z, beta, set, p)?
        } else {
            wc.witness.clone().expect("worst case carries a witness")
        };
        sampled = sampled.max(loss_with(&w.perturbation.scale(-1.0))?);
    }
    Ok(Audit {
        analytic: wc.value,
        exact: wc.exact,
        upper_bound,
        sampled_max: sampled,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use crate::norms::MatrixNormSpec;

    fn e(p: f64) -> Exponent {
        Exponent::new(p).unwrap()
    }

    #[test]
    fn nominal_identity_fit() {
        let prob = RegressionProblem::new(Matrix::identity(2), vec![1.0, 2.0], e(2.0)).unwrap();
        let r = solve_regularized(&prob, 0.0, e(2.0)).unwrap();
        assert!(r.objective < 1e-8, "{r:?}");
        assert!((r.beta[0] - 1.0).abs() < 1e-8 && (r.beta[1] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn scalar_lasso_soft_threshold() {
        let b = lasso_squared(&Matrix::identity(1), &[1.0], 0.5).unwrap();
        assert_relative_eq!(b[0], 0.75, max_relative = 1e-14);
    }

    #[test]
    fn dominant_penalty_gives_zero() {
        let prob = RegressionProblem::new(Matrix::identity(2), vec![3.0, 4.0], e(2.0)).unwrap();
        for c in [5.0, 7.0] {
            let r = solve_regularized(&prob, c, e(2.0)).unwrap();
            assert!(vec_norm(&r.beta, e(2.0)) < 1e-8, "{r:?}");
            assert_relative_eq!(r.objective, 5.0, max_relative = 1e-9);
        }
    }

    #[test]
    fn zero_design_returns_zero() {
        let prob = RegressionProblem::new(Matrix::zeros(3, 2), vec![1.0, -1.0, 2.0], e(1.0)).unwrap();
        let r = solve_regularized(&prob, 0.3, e(1.0)).unwrap();
        assert_eq!(r.beta, vec![0.0, 0.0]);
        assert_eq!(r.iterations, 0);
        assert_eq!(r.objective, 4.0);
    }

    #[test]
    fn robust_lasso_matches_regularized() {
        let x = Matrix::from_rows(&[vec![1.0, 0.5], vec![-0.3, 2.0], vec![0.7, 0.1]]).unwrap();
        let prob = RegressionProblem::new(x, vec![1.0, -2.0, 0.4], e(2.0)).unwrap();
        let set = UncertaintySet::new(MatrixNormSpec::Induced { h: e(1.0), g: e(2.0) }, 0.3, 3, 2).unwrap();
        let rob = solve_robust(&prob, &set).unwrap();
        let reg = solve_regularized(&prob, 0.3, e(1.0)).unwrap();
        assert!((rob.objective - reg.objective).abs() < 1e-5);
        for (a, b) in rob.beta.iter().zip(&reg.beta) {
            assert!((a - b).abs() < 1e-5);
        }
        assert!(rob.certificate < 1e-4, "{}", rob.certificate);
    }

    #[test]
    fn bounds_only_bracket() {
        let x = Matrix::from_rows(&[vec![1.0, 0.5], vec![-0.3, 2.0], vec![0.7, 0.1]]).unwrap();
        let prob = RegressionProblem::new(x, vec![1.0, -2.0, 0.4], e(3.0)).unwrap();
        let set = UncertaintySet::new(MatrixNormSpec::FrobeniusP(e(2.0)), 1.0, 3, 2).unwrap();
        let r = solve_robust(&prob, &set).unwrap();
        let (lo, hi) = r.bracket.unwrap();
        assert!(lo <= r.objective + 1e-9 && r.objective <= hi + 1e-9, "{lo} {} {hi}", r.objective);
    }

    #[test]
    fn audit_with_witness_attains() {
        let x = Matrix::from_rows(&[vec![1.0, 0.5], vec![-0.3, 2.0]]).unwrap();
        let prob = RegressionProblem::new(x, vec![1.0, -2.0], e(2.0)).unwrap();
        let set = UncertaintySet::new(MatrixNormSpec::FrobeniusP(e(2.0)), 0.4, 2, 2).unwrap();
        let beta = [0.2, -0.7];
        let a = robust_objective_audit(&beta, &prob, &set, 500, 3, false).unwrap();
        assert!(a.sampled_max <= a.analytic + 1e-8);
        let a = robust_objective_audit(&beta, &prob, &set, 10, 3, true).unwrap();
        assert!((a.sampled_max - a.analytic).abs() <= 1e-8);
    }

    #[test]
    fn zero_radius_is_nominal() {
        let x = Matrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        let prob = RegressionProblem::new(x, vec![1.0, 1.0], e(2.0)).unwrap();
        let set = UncertaintySet::new(MatrixNormSpec::FrobeniusP(e(2.0)), 0.0, 2, 1).unwrap();
        let beta = [0.4];
        let a = robust_objective_audit(&beta, &prob, &set, 5, 1, false).unwrap();
        assert_relative_eq!(a.analytic, prob.loss(&beta), max_relative = 1e-14);
        assert_relative_eq!(a.sampled_max, prob.loss(&beta), max_relative = 1e-14);
    }
}
