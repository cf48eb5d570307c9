//! Least quantile of squares: minimize the `q`-th smallest absolute
//! residual, nominally or under perturbations of the design matrix.
//!
//! The mixed-integer formulations are solved by branch and bound over SOS-1
//! pairs (`ab = 0`), each node an LP relaxation with some members fixed to
//! zero.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::norms::{dual_witness, vec_norm, Exponent};
use crate::numerics::{bisect, nelder_mead, solve_lp, BisectOptions, LpOutcome, LpProblem, Matrix, Sense};
use crate::sampling;

/// Norm `φ` in the separable factorization of the uncertainty set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Phi {
    /// Per-coordinate budget: residuals shift by `λψ(β)` each.
    L1,
    /// Total budget `λψ(β)` shared across residuals.
    LInf,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RobustSpec {
    pub phi: Phi,
    pub psi: Exponent,
    pub lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LqsProblem {
    pub x: Matrix,
    pub y: Vec<f64>,
    pub q: usize,
    pub robust: Option<RobustSpec>,
}

impl LqsProblem {
    pub fn new(x: Matrix, y: Vec<f64>, q: usize, robust: Option<RobustSpec>) -> Result<Self> {
        let m = x.rows();
        if m == 0 || x.cols() == 0 {
            return Err(Error::Dimension("design matrix must be nonempty".into()));
        }
        if y.len() != m {
            return Err(Error::Dimension(format!("{} responses for {m} rows", y.len())));
        }
        if q == 0 || q > m {
            return Err(Error::InvalidArgument(format!("order q = {q} outside 1..={m}")));
        }
        if !x.is_finite() || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("lqs data"));
        }
        if let Some(r) = robust {
            if !(r.lambda > 0.0) || !r.lambda.is_finite() {
                return Err(Error::InvalidArgument("robust lqs needs lambda > 0".into()));
            }
            let ok = r.psi.is_one() || r.psi.is_two() || r.psi.is_inf();
            if !ok {
                return Err(Error::Unsupported(format!("psi = l{}", r.psi)));
            }
        }
        Ok(LqsProblem { x, y, q, robust })
    }

    pub fn m(&self) -> usize {
        self.x.rows()
    }

    pub fn n(&self) -> usize {
        self.x.cols()
    }

    pub fn residual(&self, beta: &[f64]) -> Vec<f64> {
        let xb = self.x.mul_vec(beta).expect("validated shape");
        self.y.iter().zip(xb).map(|(a, b)| a - b).collect()
    }

    /// The (worst-case) `q`-th order statistic at `β`.
    pub fn objective(&self, beta: &[f64]) -> f64 {
        let r = self.residual(beta);
        match self.robust {
            None => order_statistic(&r, self.q).expect("validated q"),
            Some(spec) => {
                let budget = spec.lambda * vec_norm(beta, spec.psi);
                robust_lqs_inner(&r, self.q, spec.phi, budget).expect("validated q")
            }
        }
    }

    pub fn nominal(&self) -> LqsProblem {
        LqsProblem {
            robust: None,
            ..self.clone()
        }
    }
}

/// `|r|_(q)`, the `q`-th smallest absolute value.
pub fn order_statistic(r: &[f64], q: usize) -> Result<f64> {
    if q == 0 || q > r.len() {
        return Err(Error::InvalidArgument(format!(
            "order q = {q} outside 1..={}",
            r.len()
        )));
    }
    let mut a: Vec<f64> = r.iter().map(|v| v.abs()).collect();
    a.sort_by(f64::total_cmp);
    Ok(a[q - 1])
}

/// The level `ν` with `Σ_{i ≥ q} (ν − |r|_(i))₊ = budget`.
///
/// Bisection on `[|r|_(q), |r|_(q) + budget]` locates the linear piece, on
/// which the equation is then solved directly.
pub fn waterfill(abs_residuals: &[f64], q: usize, budget: f64) -> Result<f64> {
    if !(budget >= 0.0) || !budget.is_finite() {
        return Err(Error::InvalidArgument(format!("budget must be >= 0, got {budget}")));
    }
    let base = order_statistic(abs_residuals, q)?;
    if budget == 0.0 {
        return Ok(base);
    }
    let mut tail: Vec<f64> = abs_residuals.iter().map(|v| v.abs()).collect();
    tail.sort_by(f64::total_cmp);
    let tail = &tail[q - 1..];
    let excess = |nu: f64| tail.iter().map(|a| (nu - a).max(0.0)).sum::<f64>() - budget;
    let opts = BisectOptions {
        tol: 1e-13 * (base + budget),
        ..BisectOptions::default()
    };
    let hi = base + budget;
    if excess(hi) <= 0.0 {
        // budget below the resolution of `base`
        return Ok(hi);
    }
    let nu = bisect(excess, base, hi, opts)?;
    let below: Vec<f64> = tail.iter().copied().filter(|&a| a < nu).collect();
    if below.is_empty() {
        return Ok(nu);
    }
    let exact = (budget + below.iter().sum::<f64>()) / below.len() as f64;
    Ok(if excess(exact).abs() <= excess(nu).abs() { exact } else { nu })
}

/// `max ord_q |r + u|` over `‖u‖_∞ ≤ b` (for `φ = ℓ1`) or `‖u‖_1 ≤ b` (for
/// `φ = ℓ∞`), where `b = psi_value`.
pub fn robust_lqs_inner(r: &[f64], q: usize, phi: Phi, psi_value: f64) -> Result<f64> {
    if !(psi_value >= 0.0) {
        return Err(Error::InvalidArgument("budget must be >= 0".into()));
    }
    match phi {
        Phi::L1 => Ok(order_statistic(r, q)? + psi_value),
        Phi::LInf => {
            let a: Vec<f64> = r.iter().map(|v| v.abs()).collect();
            waterfill(&a, q, psi_value)
        }
    }
}

fn binomial(m: usize, q: usize) -> f64 {
    let k = q.min(m - q);
    (0..k).fold(1.0, |acc, i| acc * (m - i) as f64 / (i + 1) as f64)
}

pub const ORACLE_CAP: f64 = 1e4;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LqsSolution {
    pub beta: Vec<f64>,
    pub value: f64,
}

/// `min_β max_{i ∈ S} |y_i − x_iᵀβ|` as an LP.
pub fn chebyshev_fit(x: &Matrix, y: &[f64], subset: &[usize]) -> Result<LqsSolution> {
    let n = x.cols();
    let mut obj = vec![0.0; n + 1];
    obj[n] = 1.0;
    let mut lp = LpProblem::new(obj);
    for j in 0..n {
        lp.set_bounds(j, f64::NEG_INFINITY, f64::INFINITY);
    }
    for &i in subset {
        let mut plus: Vec<f64> = x.row(i).to_vec();
        plus.push(1.0);
        lp.add_constraint(plus, Sense::Ge, y[i]);
        let mut minus: Vec<f64> = x.row(i).iter().map(|v| -v).collect();
        minus.push(1.0);
        lp.add_constraint(minus, Sense::Ge, -y[i]);
    }
    match solve_lp(&lp)? {
        LpOutcome::Optimal { x: sol, value } => Ok(LqsSolution {
            beta: sol[..n].to_vec(),
            value,
        }),
        other => Err(Error::InvalidArgument(format!("chebyshev LP ended {other:?}"))),
    }
}

/// Exact nominal LQS by enumerating every `q`-subset and fitting it in the
/// Chebyshev sense.
pub fn lqs_oracle(prob: &LqsProblem) -> Result<LqsSolution> {
    let (m, q) = (prob.m(), prob.q);
    if binomial(m, q) > ORACLE_CAP {
        return Err(Error::ScaleCap(format!("C({m}, {q}) subsets")));
    }
    let nominal = prob.nominal();
    let mut best: Option<LqsSolution> = None;
    let mut subset: Vec<usize> = (0..q).collect();
    loop {
        let fit = chebyshev_fit(&prob.x, &prob.y, &subset)?;
        // the fit bounds the order statistic at its own β; report the latter
        let value = nominal.objective(&fit.beta);
        if best.as_ref().is_none_or(|b| value < b.value) {
            best = Some(LqsSolution {
                beta: fit.beta,
                value,
            });
        }
        // next combination in lexicographic order
        let mut k = q;
        while k > 0 && subset[k - 1] == m - q + k - 1 {
            k -= 1;
        }
        if k == 0 {
            break;
        }
        subset[k - 1] += 1;
        for j in k..q {
            subset[j] = subset[j - 1] + 1;
        }
    }
    Ok(best.expect("at least one subset"))
}

#[derive(Clone, Copy, Debug)]
pub struct MioOptions {
    /// Absolute optimality gap at which the search stops.
    pub gap_tol: f64,
    pub node_limit: usize,
    /// Seed the incumbent from [`lqs_oracle`] when it is within its cap.
    pub warm_start: bool,
}

impl Default for MioOptions {
    fn default() -> Self {
        MioOptions {
            gap_tol: 1e-9,
            node_limit: 500_000,
            warm_start: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MioResult {
    pub beta: Vec<f64>,
    /// Objective at `beta`, evaluated exactly.
    pub value: f64,
    pub lower_bound: f64,
    pub proved_gap: f64,
    pub nodes: usize,
    /// False when the node limit stopped the search.
    pub proved: bool,
    /// For `ψ = ℓ2`: relative slack of the polygonal outer approximation of
    /// the Euclidean norm used in the relaxations.
    pub approximation_tolerance: Option<f64>,
}

/// Branching state: the LP relaxation is the model's LP with `fixed`
/// variables pinned to zero.
#[derive(Clone, Debug)]
pub struct MioNode {
    /// `(pair id, member fixed to zero: 0 or 1)`.
    pub fixed: Vec<(usize, u8)>,
    pub bound: f64,
    seq: u64,
}

impl PartialEq for MioNode {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for MioNode {}
impl PartialOrd for MioNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for MioNode {
    // max-heap: smallest bound first, then oldest
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Model {
    lp: LpProblem,
    sos: Vec<(usize, usize)>,
    n: usize,
    approximation_tolerance: Option<f64>,
}

struct Builder {
    lp: LpProblem,
}

impl Builder {
    fn var(&mut self, lower: f64, upper: f64, cost: f64) -> usize {
        self.lp.objective.push(cost);
        self.lp.bounds.push(crate::numerics::Bound::new(lower, upper));
        for row in &mut self.lp.constraints {
            row.push(0.0);
        }
        self.lp.objective.len() - 1
    }

    fn row(&mut self, terms: &[(usize, f64)], sense: Sense, rhs: f64) {
        self.lp.add_sparse(terms, sense, rhs);
    }
}

const PSI_L2_SEGMENTS: usize = 16;

/// Adds `s ≥ ψ(β)` (polyhedral; an outer approximation for `ℓ2`) and
/// returns `s` with the approximation tolerance.
fn add_psi(b: &mut Builder, beta: &[usize], psi: Exponent) -> Result<(usize, Option<f64>)> {
    let s = b.var(0.0, f64::INFINITY, 0.0);
    if psi.is_inf() {
        for &j in beta {
            b.row(&[(s, 1.0), (j, -1.0)], Sense::Ge, 0.0);
            b.row(&[(s, 1.0), (j, 1.0)], Sense::Ge, 0.0);
        }
        return Ok((s, None));
    }
    if psi.is_one() {
        let mut sum = vec![(s, 1.0)];
        for &j in beta {
            let t = b.var(0.0, f64::INFINITY, 0.0);
            b.row(&[(t, 1.0), (j, -1.0)], Sense::Ge, 0.0);
            b.row(&[(t, 1.0), (j, 1.0)], Sense::Ge, 0.0);
            sum.push((t, -1.0));
        }
        b.row(&sum, Sense::Ge, 0.0);
        return Ok((s, None));
    }
    match beta.len() {
        1 => {
            b.row(&[(s, 1.0), (beta[0], -1.0)], Sense::Ge, 0.0);
            b.row(&[(s, 1.0), (beta[0], 1.0)], Sense::Ge, 0.0);
            Ok((s, None))
        }
        2 => {
            for k in 0..PSI_L2_SEGMENTS {
                let th = 2.0 * std::f64::consts::PI * k as f64 / PSI_L2_SEGMENTS as f64;
                b.row(
                    &[(s, 1.0), (beta[0], -th.cos()), (beta[1], -th.sin())],
                    Sense::Ge,
                    0.0,
                );
            }
            let slack = 1.0 - (std::f64::consts::PI / PSI_L2_SEGMENTS as f64).cos();
            Ok((s, Some(slack)))
        }
        n => Err(Error::Unsupported(format!(
            "psi = l2 is approximated for n <= 2 only (n = {n})"
        ))),
    }
}

fn build_model(prob: &LqsProblem) -> Result<Model> {
    let (m, n, q) = (prob.m(), prob.n(), prob.q);
    let mut b = Builder {
        lp: LpProblem::new(vec![]),
    };
    let beta: Vec<usize> = (0..n)
        .map(|_| b.var(f64::NEG_INFINITY, f64::INFINITY, 0.0))
        .collect();
    let mut sos = Vec::new();
    let mut rp = Vec::with_capacity(m);
    let mut rm = Vec::with_capacity(m);
    for i in 0..m {
        let p = b.var(0.0, f64::INFINITY, 0.0);
        let mi = b.var(0.0, f64::INFINITY, 0.0);
        // r⁺ − r⁻ = y_i − x_iᵀβ
        let mut terms = vec![(p, 1.0), (mi, -1.0)];
        terms.extend(beta.iter().map(|&j| (j, prob.x[(i, j)])));
        b.row(&terms, Sense::Eq, prob.y[i]);
        sos.push((p, mi));
        rp.push(p);
        rm.push(mi);
    }
    let mut approximation_tolerance = None;
    match prob.robust {
        None | Some(RobustSpec { phi: Phi::L1, .. }) => {
            let gamma = b.var(0.0, f64::INFINITY, 1.0);
            let mut zsum = Vec::with_capacity(m);
            for i in 0..m {
                let mub = b.var(0.0, f64::INFINITY, 0.0);
                let mu = b.var(0.0, f64::INFINITY, 0.0);
                let z = b.var(0.0, 1.0, 0.0);
                // r⁺ + r⁻ − γ = μ̄ − μ
                b.row(
                    &[(rp[i], 1.0), (rm[i], 1.0), (gamma, -1.0), (mub, -1.0), (mu, 1.0)],
                    Sense::Eq,
                    0.0,
                );
                b.row(&[(gamma, 1.0), (mu, -1.0)], Sense::Ge, 0.0);
                sos.push((mub, mu));
                // selected points fit within γ
                sos.push((z, mub));
                zsum.push((z, 1.0));
            }
            b.row(&zsum, Sense::Eq, q as f64);
            if let Some(spec) = prob.robust {
                let (s, tol) = add_psi(&mut b, &beta, spec.psi)?;
                b.lp.objective[s] = spec.lambda;
                approximation_tolerance = tol;
            }
        }
        Some(RobustSpec {
            phi: Phi::LInf,
            psi,
            lambda,
        }) => {
            let nu = b.var(0.0, f64::INFINITY, 1.0);
            let rho = b.var(f64::NEG_INFINITY, f64::INFINITY, 0.0);
            let (s, tol) = add_psi(&mut b, &beta, psi)?;
            approximation_tolerance = tol;
            let mut budget = vec![(rho, (m - q + 1) as f64), (s, -lambda)];
            let mut wsum = Vec::with_capacity(m);
            for i in 0..m {
                let pi = b.var(0.0, f64::INFINITY, 0.0);
                let tau = b.var(0.0, f64::INFINITY, 0.0);
                let e = b.var(0.0, f64::INFINITY, 0.0);
                // e = π − ν + a,  a = r⁺ + r⁻
                b.row(
                    &[(e, 1.0), (pi, -1.0), (nu, 1.0), (rp[i], -1.0), (rm[i], -1.0)],
                    Sense::Eq,
                    0.0,
                );
                b.row(&[(pi, 1.0), (rho, -1.0), (tau, 1.0)], Sense::Ge, 0.0);
                budget.push((tau, -1.0));
                sos.push((e, pi));
                // at least q residuals lie at or below ν, which the budget
                // row alone does not enforce when ψ(β) = 0
                let w = b.var(0.0, 1.0, 0.0);
                sos.push((w, e));
                wsum.push((w, 1.0));
            }
            b.row(&budget, Sense::Ge, 0.0);
            b.row(&wsum, Sense::Eq, q as f64);
        }
    }
    Ok(Model {
        lp: b.lp,
        sos,
        n,
        approximation_tolerance,
    })
}

/// Branch and bound for nominal and robust LQS with best-bound node
/// selection and most-violated SOS-1 branching.
pub fn lqs_mio(prob: &LqsProblem, opts: MioOptions) -> Result<MioResult> {
    let model = build_model(prob)?;
    let n = model.n;
    let mut best_beta = vec![0.0; n];
    let mut incumbent = prob.objective(&best_beta);
    if opts.warm_start && binomial(prob.m(), prob.q) <= ORACLE_CAP {
        let o = lqs_oracle(prob)?;
        let v = prob.objective(&o.beta);
        if v < incumbent {
            incumbent = v;
            best_beta = o.beta;
        }
    }
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    heap.push(MioNode {
        fixed: vec![],
        bound: f64::NEG_INFINITY,
        seq,
    });
    let mut nodes = 0usize;
    let mut lower_bound = f64::NEG_INFINITY;
    let mut proved = true;
    while let Some(node) = heap.pop() {
        if node.bound >= incumbent - opts.gap_tol {
            lower_bound = node.bound.min(incumbent);
            heap.clear();
            break;
        }
        if nodes >= opts.node_limit {
            lower_bound = node.bound;
            proved = false;
            break;
        }
        nodes += 1;
        let mut lp = model.lp.clone();
        for &(pair, side) in &node.fixed {
            let v = if side == 0 { model.sos[pair].0 } else { model.sos[pair].1 };
            lp.bounds[v].lower = 0.0;
            lp.bounds[v].upper = 0.0;
        }
        let (x, value) = match solve_lp(&lp)? {
            LpOutcome::Optimal { x, value } => (x, value),
            LpOutcome::Infeasible => continue,
            LpOutcome::Unbounded => {
                return Err(Error::InvalidArgument("lqs relaxation is unbounded".into()))
            }
        };
        let beta = x[..n].to_vec();
        let v = prob.objective(&beta);
        if v < incumbent {
            incumbent = v;
            best_beta = beta;
        }
        if value >= incumbent - opts.gap_tol {
            continue;
        }
        let scale = 1e-9 * (1.0 + value.abs());
        let mut worst: Option<(usize, f64)> = None;
        for (k, &(a, b)) in model.sos.iter().enumerate() {
            let viol = x[a].min(x[b]);
            if viol > scale && worst.is_none_or(|(_, w)| viol > w) {
                worst = Some((k, viol));
            }
        }
        let Some((pair, _)) = worst else {
            // SOS-feasible: the relaxation solves this subproblem
            continue;
        };
        for side in 0..2u8 {
            seq += 1;
            let mut fixed = node.fixed.clone();
            fixed.push((pair, side));
            heap.push(MioNode {
                fixed,
                bound: value,
                seq,
            });
        }
    }
    if heap.is_empty() && proved && lower_bound == f64::NEG_INFINITY {
        lower_bound = incumbent;
    }
    let lower_bound = lower_bound.min(incumbent);
    Ok(MioResult {
        value: incumbent,
        beta: best_beta,
        lower_bound,
        proved_gap: incumbent - lower_bound,
        nodes,
        proved,
        approximation_tolerance: model.approximation_tolerance,
    })
}

/// Validation oracle for robust instances with `n ≤ 2`: a grid of 201
/// points per axis over `±2‖β_nominal‖_∞` (at least `±1`), then repeated
/// Nelder–Mead from the best grid points.
pub fn robust_grid_oracle(prob: &LqsProblem) -> Result<LqsSolution> {
    let n = prob.n();
    if n > 2 {
        return Err(Error::ScaleCap(format!("grid oracle needs n <= 2, got {n}")));
    }
    let nominal = lqs_oracle(prob)?;
    let half = (2.0 * vec_norm(&nominal.beta, Exponent::INF)).max(1.0);
    let pts: Vec<f64> = (0..201).map(|k| -half + half * k as f64 / 100.0).collect();
    let mut scored: Vec<(f64, Vec<f64>)> = Vec::new();
    if n == 1 {
        for &a in &pts {
            scored.push((prob.objective(&[a]), vec![a]));
        }
    } else {
        for &a in &pts {
            for &b in &pts {
                scored.push((prob.objective(&[a, b]), vec![a, b]));
            }
        }
    }
    scored.push((prob.objective(&nominal.beta), nominal.beta.clone()));
    scored.push((prob.objective(&vec![0.0; n]), vec![0.0; n]));
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let f = |b: &[f64]| prob.objective(b);
    let mut best = LqsSolution {
        beta: scored[0].1.clone(),
        value: scored[0].0,
    };
    for (_, start) in scored.iter().take(20) {
        let mut x = start.clone();
        let mut val = f(&x);
        let mut step = half / 50.0;
        for _ in 0..40 {
            let (nx, nv) = nelder_mead(&f, &x, step, 4000);
            if nv < val - 1e-15 {
                x = nx;
                val = nv;
            } else {
                step *= 0.3;
                if step < 1e-12 {
                    break;
                }
            }
        }
        if val < best.value {
            best = LqsSolution { beta: x, value: val };
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LqsAudit {
    /// Largest `|y − (X + Δ)β|_(q)` over the sampled perturbations.
    pub sampled_max: f64,
    /// The worst case reported by [`LqsProblem::objective`].
    pub reported: f64,
    pub trials: usize,
}

/// Samples explicit rank-one perturbations `Δ = u wᵀ` with `Δβ = u` and `u`
/// in the residual budget ball (`ℓ∞` for `φ = ℓ1`, `ℓ1` for `φ = ℓ∞`), and
/// evaluates the perturbed order statistic directly.
pub fn lqs_adversary_audit(prob: &LqsProblem, beta: &[f64], trials: usize, seed: u64) -> Result<LqsAudit> {
    if beta.len() != prob.n() {
        return Err(Error::Dimension(format!("{} coefficients for {} columns", beta.len(), prob.n())));
    }
    let reported = prob.objective(beta);
    let Some(spec) = prob.robust else {
        return Ok(LqsAudit {
            sampled_max: order_statistic(&prob.residual(beta), prob.q)?,
            reported,
            trials: 0,
        });
    };
    let pb = vec_norm(beta, spec.psi);
    let budget = spec.lambda * pb;
    let m = prob.m();
    let w: Vec<f64> = if pb == 0.0 {
        vec![0.0; beta.len()]
    } else {
        dual_witness(beta, spec.psi.dual())?.into_iter().map(|v| v / pb).collect()
    };
    let mut rng = sampling::rng(seed);
    let mut sampled_max = f64::NEG_INFINITY;
    for t in 0..trials {
        let u: Vec<f64> = match spec.phi {
            Phi::L1 => (0..m)
                .map(|_| {
                    if t % 2 == 0 {
                        budget * if sampling::uniform(&mut rng, 0.0, 1.0) < 0.5 { -1.0 } else { 1.0 }
                    } else {
                        sampling::uniform(&mut rng, -budget, budget.max(f64::MIN_POSITIVE))
                    }
                })
                .collect(),
            Phi::LInf => {
                let raw = sampling::normal_vec(&mut rng, m);
                let s = vec_norm(&raw, Exponent::ONE);
                raw.into_iter().map(|v| budget * v / s).collect()
            }
        };
        let delta = Matrix::outer(&u, &w);
        let perturbed = prob.x.add(&delta)?;
        let fit = perturbed.mul_vec(beta)?;
        let r: Vec<f64> = prob.y.iter().zip(&fit).map(|(a, b)| a - b).collect();
        sampled_max = sampled_max.max(order_statistic(&r, prob.q)?);
    }
    Ok(LqsAudit {
        sampled_max,
        reported,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ones_column(m: usize) -> Matrix {
        Matrix::from_vec(m, 1, vec![1.0; m]).unwrap()
    }

    #[test]
    fn order_statistics() {
        assert_eq!(order_statistic(&[3.0, -1.0, 2.0], 2).unwrap(), 2.0);
        assert_eq!(order_statistic(&[3.0, -7.0, 2.0], 3).unwrap(), 7.0);
        assert_eq!(order_statistic(&[0.0, 0.0, 5.0], 2).unwrap(), 0.0);
        assert!(order_statistic(&[1.0], 2).is_err());
        assert!(order_statistic(&[1.0], 0).is_err());
    }

    #[test]
    fn waterfill_examples() {
        assert_relative_eq!(waterfill(&[1.0, 2.0, 3.0], 2, 1.0).unwrap(), 3.0, max_relative = 1e-14);
        assert_eq!(waterfill(&[4.0, 1.0, 2.5], 2, 0.0).unwrap(), 2.5);
        assert_relative_eq!(waterfill(&[0.0, 0.0], 1, 4.0).unwrap(), 2.0, max_relative = 1e-14);
        assert!(waterfill(&[1.0], 1, -1.0).is_err());
    }

    #[test]
    fn inner_examples() {
        assert_relative_eq!(robust_lqs_inner(&[1.0, -2.0, 3.0], 2, Phi::L1, 0.5).unwrap(), 2.5);
        assert_eq!(robust_lqs_inner(&[1.0, -2.0, 3.0], 2, Phi::LInf, 0.0).unwrap(), 2.0);
        assert_relative_eq!(robust_lqs_inner(&[1.0, 2.0, 3.0], 2, Phi::LInf, 1.0).unwrap(), 3.0);
    }

    #[test]
    fn oracle_examples() {
        let p = LqsProblem::new(ones_column(3), vec![0.0, 0.0, 10.0], 2, None).unwrap();
        assert_eq!(lqs_oracle(&p).unwrap().value, 0.0);
        // q = m is Chebyshev regression: midrange of (0, 0, 10)
        let p = LqsProblem::new(ones_column(3), vec![0.0, 0.0, 10.0], 3, None).unwrap();
        assert_relative_eq!(lqs_oracle(&p).unwrap().value, 5.0, max_relative = 1e-12);
        let x = Matrix::from_rows(&[vec![1.0, 2.0], vec![-1.0, 0.5]]).unwrap();
        let p = LqsProblem::new(x, vec![3.0, -4.0], 1, None).unwrap();
        assert!(lqs_oracle(&p).unwrap().value < 1e-12);
    }

    #[test]
    fn mio_nominal_toy() {
        let p = LqsProblem::new(ones_column(3), vec![0.0, 0.0, 10.0], 2, None).unwrap();
        let opts = MioOptions {
            warm_start: false,
            ..MioOptions::default()
        };
        let r = lqs_mio(&p, opts).unwrap();
        assert!(r.value.abs() < 1e-9 && r.proved, "{r:?}");
    }

    #[test]
    fn mio_robust_l1_toy() {
        let spec = RobustSpec {
            phi: Phi::L1,
            psi: Exponent::ONE,
            lambda: 0.1,
        };
        let p = LqsProblem::new(ones_column(3), vec![0.0, 0.0, 10.0], 2, Some(spec)).unwrap();
        let r = lqs_mio(&p, MioOptions { warm_start: false, ..MioOptions::default() }).unwrap();
        assert!(r.value.abs() < 1e-9, "{r:?}");
        assert!(r.beta[0].abs() < 1e-9);
    }

    #[test]
    fn mio_robust_linf_small() {
        let x = Matrix::from_rows(&[vec![1.0], vec![2.0], vec![-1.0], vec![0.5]]).unwrap();
        let spec = RobustSpec {
            phi: Phi::LInf,
            psi: Exponent::ONE,
            lambda: 0.2,
        };
        let p = LqsProblem::new(x, vec![1.0, 2.2, -0.7, 3.0], 3, Some(spec)).unwrap();
        let r = lqs_mio(&p, MioOptions { warm_start: false, ..MioOptions::default() }).unwrap();
        let g = robust_grid_oracle(&p).unwrap();
        assert!(r.proved);
        assert!((r.value - g.value).abs() < 1e-4, "mio {} grid {}", r.value, g.value);
    }

    #[test]
    fn sampled_adversaries_stay_below_worst_case() {
        let x = Matrix::from_rows(&[vec![1.0, 0.3], vec![2.0, -1.0], vec![-1.0, 0.5], vec![0.5, 2.0]]).unwrap();
        let y = vec![1.0, 2.2, -0.7, 3.0];
        for phi in [Phi::L1, Phi::LInf] {
            let spec = RobustSpec { phi, psi: Exponent::ONE, lambda: 0.3 };
            let p = LqsProblem::new(x.clone(), y.clone(), 3, Some(spec)).unwrap();
            let a = lqs_adversary_audit(&p, &[0.4, -0.8], 2000, 5).unwrap();
            assert!(a.sampled_max <= a.reported + 1e-8);
            assert!(a.sampled_max >= p.nominal().objective(&[0.4, -0.8]));
        }
    }

    #[test]
    fn psi_l2_reports_tolerance() {
        let x = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let spec = RobustSpec {
            phi: Phi::L1,
            psi: Exponent::TWO,
            lambda: 0.1,
        };
        let p = LqsProblem::new(x, vec![1.0, 1.0, 2.5], 2, Some(spec)).unwrap();
        let r = lqs_mio(&p, MioOptions::default()).unwrap();
        assert!(r.approximation_tolerance.unwrap() > 0.0);
        assert!(r.lower_bound <= r.value);
    }
}
