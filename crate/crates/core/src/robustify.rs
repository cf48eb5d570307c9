//! Worst-case losses over uncertainty sets on the design matrix.
//!
//! For a set that is a ball of a norm whose dual separates on rank-one
//! matrices, `‖u vᵀ‖_* = φ(u) ψ(v)`, the inner maximization
//! `max_{Δ ∈ U} ‖z + Δβ‖_p` equals `max { ‖z + u‖_p : ‖u‖_r ≤ ρ }` with
//! `r = φ*` and `ρ = λ ψ(β)`. Every maximizer `u` lifts back to a rank-one
//! `Δ = u wᵀ` in the set with `Δβ = u`.

use serde::Serialize;

use crate::discrepancy::{delta, delta_value};
use crate::error::{Error, Result};
use crate::norms::{dual_witness, mat_norm, separable_factors, vec_norm, Exponent, MatrixNormSpec};
use crate::numerics::Matrix;
use crate::sampling;

/// Relative slack used for membership tests.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UncertaintySet {
    pub shape: MatrixNormSpec,
    pub radius: f64,
    pub rows: usize,
    pub cols: usize,
}

impl UncertaintySet {
    /// `radius = 0` is accepted and denotes the nominal problem.
    pub fn new(shape: MatrixNormSpec, radius: f64, rows: usize, cols: usize) -> Result<Self> {
        if !radius.is_finite() || radius < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "uncertainty radius must be finite and nonnegative, got {radius}"
            )));
        }
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension("uncertainty set needs m, n >= 1".into()));
        }
        if matches!(shape, MatrixNormSpec::ProjectedF2(_)) {
            return Err(Error::Unsupported(
                "projected Frobenius sets belong to matrix estimation".into(),
            ));
        }
        Ok(UncertaintySet {
            shape,
            radius,
            rows,
            cols,
        })
    }

    /// Norm of `Δ` under the set's shape. Induced pairs without a closed form
    /// are an error.
    pub fn norm_of(&self, delta: &Matrix) -> Result<f64> {
        self.check_shape(delta)?;
        mat_norm(delta, &self.shape)
    }

    pub fn contains(&self, delta: &Matrix) -> Result<bool> {
        Ok(self.norm_of(delta)? <= self.radius * (1.0 + MEMBERSHIP_TOL) + MEMBERSHIP_TOL)
    }

    fn check_shape(&self, delta: &Matrix) -> Result<()> {
        if delta.shape() != (self.rows, self.cols) {
            return Err(Error::Dimension(format!(
                "perturbation is {}x{}, set is {}x{}",
                delta.rows(),
                delta.cols(),
                self.rows,
                self.cols
            )));
        }
        Ok(())
    }
}

/// Norm of `u wᵀ` under `spec`, exact for every supported shape.
pub fn rank_one_norm(u: &[f64], w: &[f64], spec: &MatrixNormSpec) -> Result<f64> {
    match spec.canonical() {
        MatrixNormSpec::FrobeniusP(p) => Ok(vec_norm(u, p) * vec_norm(w, p)),
        MatrixNormSpec::SchattenP(_) => Ok(vec_norm(u, Exponent::TWO) * vec_norm(w, Exponent::TWO)),
        MatrixNormSpec::Induced { h, g } => Ok(vec_norm(u, g) * vec_norm(w, h.dual())),
        other => Err(Error::Unsupported(format!("rank-one norm under {other}"))),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Status {
    Exact,
    BoundsOnly,
}

/// `coefficient · ‖β‖_exponent`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Regularizer {
    pub coefficient: f64,
    pub exponent: Exponent,
}

impl Regularizer {
    pub fn eval(&self, beta: &[f64]) -> f64 {
        if self.coefficient == 0.0 {
            0.0
        } else {
            self.coefficient * vec_norm(beta, self.exponent)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EquivalenceVerdict {
    pub status: Status,
    /// The upper-bound penalty `h̄`; the exact penalty when `status` is exact.
    pub regularizer: Regularizer,
    pub lower_coefficient: f64,
    pub upper_coefficient: f64,
}

impl EquivalenceVerdict {
    pub fn is_exact(&self) -> bool {
        self.status == Status::Exact
    }

    pub fn lower(&self) -> Regularizer {
        Regularizer {
            coefficient: self.lower_coefficient,
            exponent: self.regularizer.exponent,
        }
    }
}

/// Reduction data: the inner ball exponent `r` and penalty norm `ψ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Reduction {
    pub r: Exponent,
    pub psi: Exponent,
}

pub fn reduction(shape: &MatrixNormSpec) -> Result<Reduction> {
    let f = separable_factors(shape)?;
    Ok(Reduction {
        r: f.phi.dual(),
        psi: f.psi,
    })
}

/// Whether `max_{‖u‖_r ≤ ρ} ‖z + u‖_p = ‖z‖_p + ρ δ_m(p, r)` for all `z`.
pub fn ball_is_additive(p: Exponent, r: Exponent, m: usize) -> bool {
    m == 1 || p.approx_eq(r) || p.is_extreme()
}

pub fn classify_equivalence(p: Exponent, set: &UncertaintySet) -> Result<EquivalenceVerdict> {
    let m = set.rows;
    let lambda = set.radius;
    let exact = match set.shape {
        MatrixNormSpec::ProjectedF2(_) => {
            return Err(Error::Unsupported(
                "projected Frobenius sets are classified by the matrix module".into(),
            ))
        }
        MatrixNormSpec::SchattenP(_) => m == 1 || p.is_extreme() || p.is_two(),
        MatrixNormSpec::RowWise(_) => m == 1 || p.is_extreme(),
        _ => {
            let red = reduction(&set.shape)?;
            ball_is_additive(p, red.r, m)
        }
    };
    let red = reduction(&set.shape)?;
    let upper = lambda * delta_value(m, p, red.r);
    let lower = if exact {
        upper
    } else {
        lambda / delta_value(m, red.r, p)
    };
    Ok(EquivalenceVerdict {
        status: if exact { Status::Exact } else { Status::BoundsOnly },
        regularizer: Regularizer {
            coefficient: upper,
            exponent: red.psi,
        },
        lower_coefficient: lower,
        upper_coefficient: upper,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BallSup {
    pub value: f64,
    /// Maximizer with `‖u‖_r ≤ ρ`.
    pub u: Vec<f64>,
    pub exact: bool,
}

fn sign(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// `max { ‖z + u‖_p : ‖u‖_r ≤ ρ }`.
///
/// Exact for `r ∈ {1, ∞}` and for the additive regimes of
/// [`ball_is_additive`]; otherwise the best of a multistart
/// conditional-gradient ascent, reported with `exact = false`.
pub fn ball_sup(z: &[f64], rho: f64, p: Exponent, r: Exponent) -> Result<BallSup> {
    let m = z.len();
    if z.iter().any(|v| !v.is_finite()) || !rho.is_finite() {
        return Err(Error::NonFinite("worst-case residual"));
    }
    if rho < 0.0 {
        return Err(Error::InvalidArgument("negative ball radius".into()));
    }
    if m == 0 {
        return Ok(BallSup { value: 0.0, u: vec![], exact: true });
    }
    let eval = |u: &[f64]| {
        let s: Vec<f64> = z.iter().zip(u).map(|(a, b)| a + b).collect();
        vec_norm(&s, p)
    };
    let finish = |u: Vec<f64>, exact: bool| BallSup { value: eval(&u), u, exact };
    if rho == 0.0 {
        return Ok(finish(vec![0.0; m], true));
    }
    if r.is_inf() {
        return Ok(finish(z.iter().map(|&v| rho * sign(v)).collect(), true));
    }
    if r.is_one() {
        let mut best: Option<(f64, usize)> = None;
        for i in 0..m {
            let mut u = vec![0.0; m];
            u[i] = rho * sign(z[i]);
            let v = eval(&u);
            if best.is_none_or(|(bv, _)| v > bv) {
                best = Some((v, i));
            }
        }
        let (_, i) = best.expect("m >= 1");
        let mut u = vec![0.0; m];
        u[i] = rho * sign(z[i]);
        return Ok(finish(u, true));
    }
    let zn = vec_norm(z, p);
    if m == 1 {
        return Ok(finish(vec![rho * sign(z[0])], true));
    }
    if p.approx_eq(r) {
        let u = if zn > 0.0 {
            z.iter().map(|v| rho * v / zn).collect()
        } else {
            let mut e = vec![0.0; m];
            e[0] = rho;
            e
        };
        return Ok(finish(u, true));
    }
    if p.is_inf() {
        let big = z.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let k = z.iter().position(|v| v.abs() == big).expect("nonempty");
        let mut u = vec![0.0; m];
        u[k] = rho * sign(z[k]);
        return Ok(finish(u, true));
    }
    if p.is_one() {
        let d = delta(m, p, r)?;
        let scale = rho * d.witness[0];
        return Ok(finish(z.iter().map(|&v| scale * sign(v)).collect(), true));
    }
    Ok(ascent(z, rho, p, r))
}

fn ascent(z: &[f64], rho: f64, p: Exponent, r: Exponent) -> BallSup {
    let m = z.len();
    let eval = |u: &[f64]| {
        let s: Vec<f64> = z.iter().zip(u).map(|(a, b)| a + b).collect();
        vec_norm(&s, p)
    };
    let onto_sphere = |v: Vec<f64>| -> Vec<f64> {
        let s = vec_norm(&v, r);
        if s == 0.0 {
            let mut e = vec![0.0; v.len()];
            e[0] = rho;
            e
        } else {
            v.into_iter().map(|x| rho * x / s).collect()
        }
    };
    let mut starts: Vec<Vec<f64>> = Vec::new();
    starts.push(onto_sphere(z.to_vec()));
    starts.push(onto_sphere(z.iter().map(|&v| sign(v)).collect()));
    if m <= 4 {
        for mask in 0..(1u32 << m) {
            let s: Vec<f64> = (0..m)
                .map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 })
                .collect();
            starts.push(onto_sphere(s));
        }
    }
    for i in 0..m {
        let mut e = vec![0.0; m];
        e[i] = sign(z[i]);
        starts.push(onto_sphere(e));
    }
    let mut rng = sampling::rng(0x5eed);
    for _ in 0..64 {
        starts.push(onto_sphere(sampling::normal_vec(&mut rng, m)));
    }
    let mut best_u = starts[0].clone();
    let mut best = eval(&best_u);
    for mut u in starts {
        let mut val = eval(&u);
        for _ in 0..2000 {
            let s: Vec<f64> = z.iter().zip(&u).map(|(a, b)| a + b).collect();
            let Ok(g) = dual_witness(&s, p.dual()) else { break };
            let Ok(dir) = dual_witness(&g, r) else { break };
            let next: Vec<f64> = dir.into_iter().map(|x| rho * x).collect();
            let nv = eval(&next);
            if nv <= val * (1.0 + 1e-15) {
                if nv > val {
                    u = next;
                    val = nv;
                }
                break;
            }
            u = next;
            val = nv;
        }
        if val > best {
            best = val;
            best_u = u;
        }
    }
    BallSup {
        value: best,
        u: best_u,
        exact: false,
    }
}

/// A perturbation in the set together with the loss it attains.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub perturbation: Matrix,
    /// `‖z + Δβ‖_p`.
    pub attained_value: f64,
    /// Norm of `Δ` under the set's shape.
    pub norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WorstCase {
    pub value: f64,
    /// False when `value` is only a lower bound from ascent.
    pub exact: bool,
    pub witness: Option<Witness>,
}

/// `Δ = u wᵀ` with `w = dual_witness(β, ψ*) / ψ(β)`, so `Δβ = u`.
pub fn lift_rank_one(
    u: &[f64],
    beta: &[f64],
    set: &UncertaintySet,
    z: &[f64],
    p: Exponent,
) -> Result<Witness> {
    let red = reduction(&set.shape)?;
    let pb = vec_norm(beta, red.psi);
    let w: Vec<f64> = if pb == 0.0 {
        vec![0.0; beta.len()]
    } else {
        dual_witness(beta, red.psi.dual())?
            .into_iter()
            .map(|x| x / pb)
            .collect()
    };
    let delta = Matrix::outer(u, &w);
    witness_from(delta, u, &w, beta, set, z, p)
}

fn witness_from(
    delta: Matrix,
    u: &[f64],
    w: &[f64],
    beta: &[f64],
    set: &UncertaintySet,
    z: &[f64],
    p: Exponent,
) -> Result<Witness> {
    let norm = rank_one_norm(u, w, &set.shape)?;
    let db = delta.mul_vec(beta)?;
    let pert: Vec<f64> = z.iter().zip(&db).map(|(a, b)| a + b).collect();
    Ok(Witness {
        attained_value: vec_norm(&pert, p),
        perturbation: delta,
        norm,
    })
}

fn check_dims(z: &[f64], beta: &[f64], set: &UncertaintySet) -> Result<()> {
    if z.len() != set.rows || beta.len() != set.cols {
        return Err(Error::Dimension(format!(
            "residual of length {} and coefficients of length {} for a {}x{} set",
            z.len(),
            beta.len(),
            set.rows,
            set.cols
        )));
    }
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::NonFinite("coefficients"));
    }
    Ok(())
}

/// `max_{Δ ∈ U} ‖z + Δβ‖_p`, with a rank-one perturbation attaining the
/// reported value.
pub fn worst_case_loss(z: &[f64], beta: &[f64], set: &UncertaintySet, p: Exponent) -> Result<WorstCase> {
    check_dims(z, beta, set)?;
    let red = reduction(&set.shape)?;
    let rho = set.radius * vec_norm(beta, red.psi);
    let sup = ball_sup(z, rho, p, red.r)?;
    let witness = lift_rank_one(&sup.u, beta, set, z, p)?;
    Ok(WorstCase {
        value: sup.value,
        exact: sup.exact,
        witness: Some(witness),
    })
}

/// The perturbation attaining `‖z‖_p + h̄(β)`, available in exact regimes,
/// or attaining `h̄(β)` itself when `z = 0`.
pub fn adversarial_witness(z: &[f64], beta: &[f64], set: &UncertaintySet, p: Exponent) -> Result<Witness> {
    check_dims(z, beta, set)?;
    let verdict = classify_equivalence(p, set)?;
    let red = reduction(&set.shape)?;
    let z_is_zero = z.iter().all(|&v| v == 0.0);
    let lambda = set.radius;
    if verdict.is_exact() {
        if let MatrixNormSpec::Induced { h, g } = set.shape {
            if g.approx_eq(p) && beta.iter().any(|&b| b != 0.0) {
                // Δ = (λ / g(z)) z vᵀ
                let v = dual_witness(beta, h.dual())?;
                let gz = vec_norm(z, g);
                let u: Vec<f64> = if gz > 0.0 {
                    z.iter().map(|x| lambda * x / gz).collect()
                } else {
                    let mut e = vec![0.0; z.len()];
                    e[0] = lambda;
                    e
                };
                let delta = Matrix::outer(&u, &v);
                return witness_from(delta, &u, &v, beta, set, z, p);
            }
        }
        let rho = lambda * vec_norm(beta, red.psi);
        let sup = ball_sup(z, rho, p, red.r)?;
        debug_assert!(sup.exact);
        return lift_rank_one(&sup.u, beta, set, z, p);
    }
    if !z_is_zero {
        return Err(Error::Refused(format!(
            "no perturbation attains the regularized bound for p = {p} and {}: the regime is bounds-only",
            set.shape
        )));
    }
    let rho = lambda * vec_norm(beta, red.psi);
    let d = delta(z.len(), p, red.r)?;
    let u: Vec<f64> = d.witness.iter().map(|x| rho * x).collect();
    lift_rank_one(&u, beta, set, z, p)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeReport {
    pub trials: usize,
    /// Trials with `upper − worst case > 1e-6`.
    pub strict: usize,
    pub fraction: f64,
    pub min_gap: f64,
    pub max_gap: f64,
    /// Trials where the worst case fell outside `[lower, upper]`.
    pub sandwich_violations: usize,
}

pub const STRICT_GAP: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    pub gap: f64,
    pub sandwich_ok: bool,
}

/// One probe trial: standard normal `z` (length `m`) and `β` (length `n`)
/// drawn from the trial's own stream.
pub fn probe_trial(p: Exponent, set: &UncertaintySet, seed: u64, index: u64) -> Result<TrialOutcome> {
    let mut rng = sampling::trial_rng(seed, index);
    let z = sampling::normal_vec(&mut rng, set.rows);
    let beta = sampling::normal_vec(&mut rng, set.cols);
    let verdict = classify_equivalence(p, set)?;
    let wc = worst_case_loss(&z, &beta, set, p)?;
    let zn = vec_norm(&z, p);
    let upper = zn + verdict.regularizer.eval(&beta);
    let lower = zn + verdict.lower().eval(&beta);
    let slack = 1e-9 * (1.0 + upper);
    Ok(TrialOutcome {
        gap: upper - wc.value,
        sandwich_ok: wc.value >= lower - slack && wc.value <= upper + slack,
    })
}

pub fn summarize(outcomes: &[TrialOutcome]) -> ProbeReport {
    let strict = outcomes.iter().filter(|o| o.gap > STRICT_GAP).count();
    let trials = outcomes.len();
    ProbeReport {
        trials,
        strict,
        fraction: if trials == 0 { 0.0 } else { strict as f64 / trials as f64 },
        min_gap: outcomes.iter().map(|o| o.gap).fold(f64::INFINITY, f64::min),
        max_gap: outcomes.iter().map(|o| o.gap).fold(f64::NEG_INFINITY, f64::max),
        sandwich_violations: outcomes.iter().filter(|o| !o.sandwich_ok).count(),
    }
}

/// Probe over an arbitrary set in a bounds-only regime.
pub fn strictness_probe_set(p: Exponent, set: &UncertaintySet, trials: usize, seed: u64) -> Result<ProbeReport> {
    if classify_equivalence(p, set)?.is_exact() {
        return Err(Error::InvalidArgument(format!(
            "p = {p} with {} is an equality regime; strictness is not defined",
            set.shape
        )));
    }
    let outcomes = (0..trials as u64)
        .map(|i| probe_trial(p, set, seed, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(&outcomes))
}

/// Fraction of random `(z, β)` for which the `F_q`-ball worst case is
/// strictly below `‖z‖_p + λ δ_m(p, q) ‖β‖_{q*}`. Uses `λ = 1`, `n = 2`.
pub fn strictness_probe(p: Exponent, q: Exponent, m: usize, trials: usize, seed: u64) -> Result<ProbeReport> {
    if p.is_extreme() || p.approx_eq(q) || m < 2 {
        return Err(Error::InvalidArgument(format!(
            "strictness needs p in (1, inf), p != q and m >= 2; got p = {p}, q = {q}, m = {m}"
        )));
    }
    let set = UncertaintySet::new(MatrixNormSpec::FrobeniusP(q), 1.0, m, 2)?;
    strictness_probe_set(p, &set, trials, seed)
}

/// `λ ‖β‖_{q*} ‖z^{p−1}‖_{q*} / ‖z‖_p^{p−1}`: the limit of
/// `worst case(αz) − ‖αz‖_p` as `α → ∞` for the `F_q` ball.
pub fn scaling_gap_limit(z: &[f64], beta: &[f64], q: Exponent, p: Exponent, lambda: f64) -> Result<f64> {
    let Exponent::Finite(pv) = p else {
        return Err(Error::InvalidArgument("gap limit needs finite p".into()));
    };
    if pv <= 1.0 {
        return Err(Error::InvalidArgument("gap limit needs p > 1".into()));
    }
    let zn = vec_norm(z, p);
    if zn == 0.0 {
        return Err(Error::InvalidArgument("gap limit needs z != 0".into()));
    }
    // normalize before powering to keep magnitudes near one
    let pow: Vec<f64> = z.iter().map(|v| (v.abs() / zn).powf(pv - 1.0)).collect();
    Ok(lambda * vec_norm(beta, q.dual()) * vec_norm(&pow, q.dual()))
}

/// `worst case(αz) − ‖αz‖_p` for the `F_q` ball, per `α`.
pub fn scaling_gap_sequence(
    z: &[f64],
    beta: &[f64],
    q: Exponent,
    p: Exponent,
    lambda: f64,
    alphas: &[f64],
) -> Result<Vec<f64>> {
    let set = UncertaintySet::new(MatrixNormSpec::FrobeniusP(q), lambda, z.len(), beta.len())?;
    alphas
        .iter()
        .map(|&a| {
            let za: Vec<f64> = z.iter().map(|v| a * v).collect();
            let wc = worst_case_loss(&za, beta, &set, p)?;
            Ok(wc.value - vec_norm(&za, p))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LassoSet {
    /// `‖Δ‖_{(1,2)} ≤ λ`.
    U,
    /// `‖Δβ‖₂ ≤ λ ‖β‖₀` for all `‖β‖_p ≤ 1`.
    UPrime,
    /// Every column has `ℓ₂` norm at most `λ`.
    UDoublePrime,
}

/// Membership in the three descriptions of the Lasso uncertainty set.
///
/// `UPrime` is decided on the basis vectors (which suffice) and then
/// re-checked on a seeded sample of sparse `β` on the `ℓ_p` sphere.
pub fn uncertainty_membership(delta: &Matrix, which: LassoSet, lambda: f64, p: Exponent) -> Result<bool> {
    if !delta.is_finite() {
        return Err(Error::NonFinite("perturbation"));
    }
    let limit = |l: f64| l * (1.0 + MEMBERSHIP_TOL) + MEMBERSHIP_TOL;
    let n = delta.cols();
    match which {
        LassoSet::U => {
            let spec = MatrixNormSpec::Induced {
                h: Exponent::ONE,
                g: Exponent::TWO,
            };
            Ok(mat_norm(delta, &spec)? <= limit(lambda))
        }
        LassoSet::UDoublePrime => Ok((0..n).all(|j| vec_norm(&delta.column(j), Exponent::TWO) <= limit(lambda))),
        LassoSet::UPrime => {
            let basis_ok = (0..n).all(|j| vec_norm(&delta.column(j), Exponent::TWO) <= limit(lambda));
            let mut rng = sampling::rng(0x10);
            let mut sample_ok = true;
            for _ in 0..256 {
                let support = sampling::uniform(&mut rng, 1.0, n as f64 + 1.0).floor() as usize;
                let mut beta = vec![0.0; n];
                let raw = sampling::normal_vec(&mut rng, support.min(n));
                for (k, v) in raw.into_iter().enumerate() {
                    beta[(k * 7 + support) % n] += v;
                }
                let nb = vec_norm(&beta, p);
                if nb == 0.0 {
                    continue;
                }
                let beta: Vec<f64> = beta.iter().map(|b| b / nb).collect();
                let l0 = beta.iter().filter(|b| **b != 0.0).count() as f64;
                if vec_norm(&delta.mul_vec(&beta)?, Exponent::TWO) > limit(lambda * l0) {
                    sample_ok = false;
                }
            }
            Ok(basis_ok && sample_ok)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn e(p: f64) -> Exponent {
        Exponent::new(p).unwrap()
    }

    fn induced(h: f64, g: f64) -> MatrixNormSpec {
        MatrixNormSpec::Induced { h: e(h), g: e(g) }
    }

    #[test]
    fn lasso_set_worst_case() {
        let set = UncertaintySet::new(induced(1.0, 2.0), 0.5, 2, 2).unwrap();
        let wc = worst_case_loss(&[1.0, 0.0], &[1.0, -2.0], &set, e(2.0)).unwrap();
        assert_relative_eq!(wc.value, 2.5, max_relative = 1e-14);
        assert!(wc.exact);
        let w = wc.witness.unwrap();
        assert_relative_eq!(w.attained_value, 2.5, max_relative = 1e-14);
        assert!(w.norm <= 0.5 * (1.0 + 1e-12));
        assert!(set.contains(&w.perturbation).unwrap());
    }

    #[test]
    fn zero_coefficients_leave_nominal_loss() {
        let set = UncertaintySet::new(MatrixNormSpec::FrobeniusP(e(3.0)), 2.0, 3, 2).unwrap();
        let z = [1.0, -2.0, 0.5];
        let wc = worst_case_loss(&z, &[0.0, 0.0], &set, e(1.5)).unwrap();
        assert_eq!(wc.value, vec_norm(&z, e(1.5)));
    }

    #[test]
    fn row_wise_set() {
        let set = UncertaintySet::new(MatrixNormSpec::RowWise(e(2.0)), 1.0, 2, 2).unwrap();
        let wc = worst_case_loss(&[1.0, -1.0], &[3.0, 4.0], &set, e(1.0)).unwrap();
        assert_relative_eq!(wc.value, 12.0, max_relative = 1e-14);
        let w = wc.witness.unwrap();
        assert!(set.contains(&w.perturbation).unwrap());
        assert!(classify_equivalence(e(1.0), &set).unwrap().is_exact());
    }

    #[test]
    fn witness_examples() {
        let set = UncertaintySet::new(induced(1.0, 2.0), 1.0, 2, 2).unwrap();
        let w = adversarial_witness(&[2.0, 0.0], &[1.0, 0.0], &set, e(2.0)).unwrap();
        assert_relative_eq!(w.attained_value, 3.0, max_relative = 1e-14);
        assert_eq!(w.perturbation.row(0), &[1.0, 1.0]);

        let f2 = UncertaintySet::new(MatrixNormSpec::FrobeniusP(e(2.0)), 1.0, 2, 2).unwrap();
        let w = adversarial_witness(&[0.0, 0.0], &[1.0, 1.0], &f2, e(2.0)).unwrap();
        assert_relative_eq!(w.attained_value, 2f64.sqrt(), max_relative = 1e-14);

        let f1 = UncertaintySet::new(MatrixNormSpec::FrobeniusP(e(1.0)), 2.0, 2, 2).unwrap();
        let w = adversarial_witness(&[1.0, 1.0], &[0.0, 3.0], &f1, e(1.0)).unwrap();
        assert_relative_eq!(w.attained_value, 8.0, max_relative = 1e-14);
        assert!(f1.contains(&w.perturbation).unwrap());
    }

    #[test]
    fn witness_refused_outside_equality_regime() {
        let set = UncertaintySet::new(MatrixNormSpec::FrobeniusP(e(2.0)), 1.0, 3, 2).unwrap();
        assert!(matches!(
            adversarial_witness(&[1.0, 2.0, 3.0], &[1.0, 1.0], &set, e(3.0)),
            Err(Error::Refused(_))
        ));
        let w = adversarial_witness(&[0.0; 3], &[1.0, 1.0], &set, e(3.0)).unwrap();
        let v = classify_equivalence(e(3.0), &set).unwrap();
        assert_relative_eq!(w.attained_value, v.regularizer.eval(&[1.0, 1.0]), max_relative = 1e-12);
    }

    #[test]
    fn classifier_examples() {
        let f2 = UncertaintySet::new(MatrixNormSpec::FrobeniusP(e(2.0)), 0.7, 4, 3).unwrap();
        let v = classify_equivalence(e(2.0), &f2).unwrap();
        assert!(v.is_exact());
        assert_eq!(v.regularizer.exponent, e(2.0));
        assert_relative_eq!(v.regularizer.coefficient, 0.7);

        let s = UncertaintySet::new(MatrixNormSpec::SchattenP(e(5.0)), 0.7, 4, 3).unwrap();
        let v = classify_equivalence(e(2.0), &s).unwrap();
        assert!(v.is_exact());
        assert_relative_eq!(v.regularizer.coefficient, 0.7);

        let v = classify_equivalence(e(3.0), &f2).unwrap();
        assert_eq!(v.status, Status::BoundsOnly);
        assert_relative_eq!(v.upper_coefficient, 0.7 * delta_value(4, e(3.0), e(2.0)));
        assert_relative_eq!(v.lower_coefficient, 0.7 / delta_value(4, e(2.0), e(3.0)));
    }

    #[test]
    fn probe_examples() {
        let r = strictness_probe(e(2.0), e(1.0), 3, 200, 1).unwrap();
        assert_eq!(r.fraction, 1.0);
        assert_eq!(r.sandwich_violations, 0);
        let r = strictness_probe(e(1.5), e(3.0), 2, 200, 1).unwrap();
        assert_eq!(r.fraction, 1.0);
        assert!(strictness_probe(e(1.0), e(2.0), 3, 10, 1).is_err());
    }

    #[test]
    fn gap_limit_equality_regime() {
        let l = scaling_gap_limit(&[1.0, 1.0], &[1.0, 0.0], e(2.0), e(2.0), 1.0).unwrap();
        assert_relative_eq!(l, 1.0, max_relative = 1e-14);
        assert!(scaling_gap_limit(&[0.0, 0.0], &[1.0, 0.0], e(2.0), e(2.0), 1.0).is_err());
    }

    #[test]
    fn gap_limit_converges() {
        let z = [1.0, 2.0];
        let beta = [0.0, 1.0];
        let lim = scaling_gap_limit(&z, &beta, e(1.5), e(3.0), 2.0).unwrap();
        let seq = scaling_gap_sequence(&z, &beta, e(1.5), e(3.0), 2.0, &[1.0, 10.0, 100.0, 1e3, 1e4]).unwrap();
        assert!((seq[4] - lim).abs() <= 1e-3 * lim, "{seq:?} vs {lim}");
    }

    #[test]
    fn lasso_membership_examples() {
        let lambda = 0.8;
        let mut d = Matrix::zeros(3, 2);
        d[(0, 0)] = lambda;
        for which in [LassoSet::U, LassoSet::UPrime, LassoSet::UDoublePrime] {
            assert!(uncertainty_membership(&d, which, lambda, e(2.0)).unwrap());
        }
        d[(1, 1)] = 1.01 * lambda;
        for which in [LassoSet::U, LassoSet::UPrime, LassoSet::UDoublePrime] {
            assert!(!uncertainty_membership(&d, which, lambda, e(2.0)).unwrap());
        }
    }
}
