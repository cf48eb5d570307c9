//! Vector and matrix (semi)norms, dual exponents and dual-norm maximizers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numerics::{svd, Matrix};
use crate::sampling;

/// A norm exponent in `[1, ∞]`. Infinity is a separate variant so formulas
/// never divide by a floating infinity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub const ONE: Exponent = Exponent::Finite(1.0);
    pub const TWO: Exponent = Exponent::Finite(2.0);
    pub const INF: Exponent = Exponent::Infinity;

    const SNAP: f64 = 1e-12;

    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidArgument(format!(
                "norm exponent must lie in [1, inf], got {p}"
            )));
        }
        if p.is_infinite() {
            Ok(Exponent::Infinity)
        } else {
            Ok(Exponent::Finite(p))
        }
    }

    pub fn is_inf(self) -> bool {
        matches!(self, Exponent::Infinity)
    }

    pub fn is_one(self) -> bool {
        self.approx_eq(Exponent::ONE)
    }

    pub fn is_two(self) -> bool {
        self.approx_eq(Exponent::TWO)
    }

    /// Either endpoint of `[1, ∞]`.
    pub fn is_extreme(self) -> bool {
        self.is_one() || self.is_inf()
    }

    /// The exponent as a float, with `f64::INFINITY` for ∞.
    pub fn value(self) -> f64 {
        match self {
            Exponent::Finite(p) => p,
            Exponent::Infinity => f64::INFINITY,
        }
    }

    /// `1/p`, exactly 0 for ∞.
    pub fn recip(self) -> f64 {
        match self {
            Exponent::Finite(p) => 1.0 / p,
            Exponent::Infinity => 0.0,
        }
    }

    /// Hölder conjugate `p*` with `1/p + 1/p* = 1`.
    pub fn dual(self) -> Exponent {
        match self {
            Exponent::Infinity => Exponent::ONE,
            Exponent::Finite(p) if (p - 1.0).abs() <= Self::SNAP => Exponent::Infinity,
            Exponent::Finite(p) => Exponent::Finite(p / (p - 1.0)),
        }
    }

    pub fn approx_eq(self, other: Exponent) -> bool {
        match (self, other) {
            (Exponent::Infinity, Exponent::Infinity) => true,
            (Exponent::Finite(a), Exponent::Finite(b)) => (a - b).abs() <= Self::SNAP * a.max(b),
            _ => false,
        }
    }

    /// `self < other` on `[1, ∞]`, with near-equal exponents treated as equal.
    pub fn less_than(self, other: Exponent) -> bool {
        !self.approx_eq(other) && self.value() < other.value()
    }
}

pub fn dual_exponent(p: Exponent) -> Exponent {
    p.dual()
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Infinity => write!(f, "inf"),
            Exponent::Finite(p) => write!(f, "{p}"),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        match t.to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => return Ok(Exponent::Infinity),
            _ => {}
        }
        let p: f64 = t
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("not a norm exponent: {s:?}")))?;
        Exponent::new(p)
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Exponent::Finite(p) => s.serialize_f64(*p),
            Exponent::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        let parsed = match Raw::deserialize(d)? {
            Raw::Num(p) => Exponent::new(p),
            Raw::Text(s) => s.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

/// `‖x‖_p`. Entries are rescaled by the largest magnitude first, so large
/// exponents and large entries cannot overflow.
pub fn vec_norm(x: &[f64], p: Exponent) -> f64 {
    let big = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if big == 0.0 || !big.is_finite() {
        return big;
    }
    match p {
        Exponent::Infinity => big,
        Exponent::Finite(p) if p == 1.0 => x.iter().map(|v| v.abs()).sum(),
        Exponent::Finite(p) if p == 2.0 => {
            big * x.iter().map(|v| (v / big) * (v / big)).sum::<f64>().sqrt()
        }
        Exponent::Finite(p) => {
            big * x.iter().map(|v| (v.abs() / big).powf(p)).sum::<f64>().powf(1.0 / p)
        }
    }
}

/// A unit vector `v` (`‖v‖_q = 1`) with `vᵀβ = ‖β‖_{q*}`.
///
/// Ties are broken toward the lowest index for `q = 1`, and zero entries map
/// to `+1` for `q = ∞`.
pub fn dual_witness(beta: &[f64], q: Exponent) -> Result<Vec<f64>> {
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::NonFinite("dual_witness input"));
    }
    let big = beta.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if big == 0.0 {
        return Err(Error::InvalidArgument(
            "dual witness of the zero vector is not unique".into(),
        ));
    }
    let sign = |b: f64| if b < 0.0 { -1.0 } else { 1.0 };
    match q {
        Exponent::Infinity => Ok(beta.iter().map(|&b| sign(b)).collect()),
        _ if q.is_one() => {
            let k = beta
                .iter()
                .position(|b| b.abs() == big)
                .expect("maximum is attained");
            let mut v = vec![0.0; beta.len()];
            v[k] = sign(beta[k]);
            Ok(v)
        }
        Exponent::Finite(_) => {
            let qs = q.dual().value();
            let raw: Vec<f64> = beta
                .iter()
                .map(|&b| sign(b) * (b.abs() / big).powf(qs - 1.0))
                .collect();
            let s = vec_norm(&raw, q);
            Ok(raw.into_iter().map(|v| v / s).collect())
        }
    }
}

/// Euclidean projection of `v` onto `{x : ‖x‖_q ≤ radius}`.
pub fn project_ball(v: &[f64], q: Exponent, radius: f64) -> Vec<f64> {
    if radius <= 0.0 {
        return vec![0.0; v.len()];
    }
    if vec_norm(v, q) <= radius {
        return v.to_vec();
    }
    let sign = |x: f64| if x < 0.0 { -1.0 } else { 1.0 };
    match q {
        Exponent::Infinity => v.iter().map(|x| x.clamp(-radius, radius)).collect(),
        _ if q.is_two() => {
            let s = radius / vec_norm(v, q);
            v.iter().map(|x| x * s).collect()
        }
        _ if q.is_one() => {
            // soft threshold at the level that lands on the sphere
            let mut a: Vec<f64> = v.iter().map(|x| x.abs()).collect();
            a.sort_by(|x, y| y.total_cmp(x));
            let mut cum = 0.0;
            let mut theta = 0.0;
            for (k, &ak) in a.iter().enumerate() {
                cum += ak;
                let t = (cum - radius) / (k + 1) as f64;
                if ak > t {
                    theta = t;
                } else {
                    break;
                }
            }
            v.iter().map(|&x| sign(x) * (x.abs() - theta).max(0.0)).collect()
        }
        Exponent::Finite(qv) => {
            let a: Vec<f64> = v.iter().map(|x| x.abs() / radius).collect();
            let t = project_lq_magnitudes(&a, qv);
            v.iter().zip(t).map(|(&x, ti)| sign(x) * ti * radius).collect()
        }
    }
}

/// Projection of nonnegative `a` with `‖a‖_q > 1` onto the unit `ℓq` ball,
/// `1 < q < ∞`. KKT: `t_i + μ q t_i^{q-1} = a_i` with `Σ t_i^q = 1`.
fn project_lq_magnitudes(a: &[f64], q: f64) -> Vec<f64> {
    let solve_t = |ai: f64, mu: f64| -> (f64, f64) {
        // returns (t, dt/dmu)
        if ai == 0.0 {
            return (0.0, 0.0);
        }
        let k = mu * q;
        let (mut lo, mut hi) = (0.0_f64, ai);
        let mut t = ai / (1.0 + k * ai.powf(q - 2.0)).max(1.0);
        for _ in 0..100 {
            let f = t + k * t.powf(q - 1.0) - ai;
            if f > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let df = 1.0 + k * (q - 1.0) * t.powf(q - 2.0);
            let mut next = t - f / df;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            if (next - t).abs() <= 1e-16 * ai || hi - lo <= 1e-16 * ai {
                t = next;
                break;
            }
            t = next;
        }
        let df = 1.0 + k * (q - 1.0) * t.powf(q - 2.0);
        let dt = if t > 0.0 { -q * t.powf(q - 1.0) / df } else { 0.0 };
        (t, dt)
    };
    let phi = |mu: f64| -> (f64, f64, Vec<f64>) {
        let mut s = 0.0;
        let mut ds = 0.0;
        let mut ts = Vec::with_capacity(a.len());
        for &ai in a {
            let (t, dt) = solve_t(ai, mu);
            s += t.powf(q);
            ds += q * t.powf(q - 1.0) * dt;
            ts.push(t);
        }
        (s - 1.0, ds, ts)
    };
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while phi(hi).0 > 0.0 {
        lo = hi;
        hi *= 4.0;
    }
    let mut mu = 0.5 * (lo + hi);
    let mut best = phi(mu).2;
    for _ in 0..200 {
        let (f, df, ts) = phi(mu);
        best = ts;
        if f.abs() <= 1e-15 {
            break;
        }
        if f > 0.0 {
            lo = mu;
        } else {
            hi = mu;
        }
        let mut next = if df < 0.0 { mu - f / df } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
        mu = next;
    }
    let s = vec_norm(&best, Exponent::Finite(q));
    if s > 1.0 {
        best.iter_mut().for_each(|t| *t /= s);
    }
    best
}

/// Observation pattern for the projected Frobenius seminorm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mask {
    rows: usize,
    cols: usize,
    observed: Vec<bool>,
}

impl Mask {
    pub fn new(rows: usize, cols: usize, observed: Vec<bool>) -> Result<Self> {
        if observed.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "mask of length {} for a {rows}x{cols} matrix",
                observed.len()
            )));
        }
        Ok(Mask {
            rows,
            cols,
            observed,
        })
    }

    pub fn full(rows: usize, cols: usize) -> Self {
        Mask {
            rows,
            cols,
            observed: vec![true; rows * cols],
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        self.observed[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.observed
    }

    /// Zeroes the unobserved entries of `a`.
    pub fn project(&self, a: &Matrix) -> Result<Matrix> {
        self.check(a)?;
        let data = a
            .as_slice()
            .iter()
            .zip(&self.observed)
            .map(|(&v, &o)| if o { v } else { 0.0 })
            .collect();
        Matrix::from_vec(self.rows, self.cols, data)
    }

    fn check(&self, a: &Matrix) -> Result<()> {
        if a.shape() != (self.rows, self.cols) {
            return Err(Error::Dimension(format!(
                "mask is {}x{} but matrix is {}x{}",
                self.rows,
                self.cols,
                a.rows(),
                a.cols()
            )));
        }
        Ok(())
    }
}

/// A matrix (semi)norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum MatrixNormSpec {
    /// Entrywise `ℓp`.
    FrobeniusP(Exponent),
    /// `ℓp` of the singular values.
    SchattenP(Exponent),
    /// `max_β g(Aβ) / h(β)`.
    Induced { h: Exponent, g: Exponent },
    /// Euclidean norm of the observed entries only.
    ProjectedF2(Mask),
    /// Largest row `ℓq` norm; the same norm as `Induced { h: q*, g: ∞ }`.
    RowWise(Exponent),
}

impl MatrixNormSpec {
    /// Rewrites row-wise norms as the induced norm they equal.
    pub fn canonical(&self) -> MatrixNormSpec {
        match self {
            MatrixNormSpec::RowWise(q) => MatrixNormSpec::Induced {
                h: q.dual(),
                g: Exponent::INF,
            },
            other => other.clone(),
        }
    }

    /// The dual norm, for the specs whose dual is again in this family.
    pub fn dual(&self) -> Result<MatrixNormSpec> {
        match self {
            MatrixNormSpec::FrobeniusP(p) => Ok(MatrixNormSpec::FrobeniusP(p.dual())),
            MatrixNormSpec::SchattenP(p) => Ok(MatrixNormSpec::SchattenP(p.dual())),
            other => Err(Error::Unsupported(format!(
                "dual norm of {other} has no closed form here"
            ))),
        }
    }
}

impl fmt::Display for MatrixNormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixNormSpec::FrobeniusP(p) => write!(f, "F_{p}"),
            MatrixNormSpec::SchattenP(p) => write!(f, "sigma_{p}"),
            MatrixNormSpec::Induced { h, g } => write!(f, "induced({h},{g})"),
            MatrixNormSpec::ProjectedF2(_) => write!(f, "P(F_2)"),
            MatrixNormSpec::RowWise(q) => write!(f, "rowwise({q})"),
        }
    }
}

pub fn singular_values(a: &Matrix) -> Result<Vec<f64>> {
    Ok(svd(a)?.singular_values)
}

/// Value of `‖A‖` under `spec`.
///
/// Induced norms are exact for `(1, p)`, `(q, ∞)` and `(2, 2)`. Any other
/// pair returns [`Error::ApproximateOnly`] carrying the ascent estimate; see
/// [`induced_norm_estimate`].
pub fn mat_norm(a: &Matrix, spec: &MatrixNormSpec) -> Result<f64> {
    if !a.is_finite() {
        return Err(Error::NonFinite("mat_norm input"));
    }
    match spec {
        MatrixNormSpec::FrobeniusP(p) => Ok(vec_norm(a.as_slice(), *p)),
        MatrixNormSpec::SchattenP(p) => Ok(vec_norm(&singular_values(a)?, *p)),
        MatrixNormSpec::ProjectedF2(mask) => Ok(vec_norm(mask.project(a)?.as_slice(), Exponent::TWO)),
        MatrixNormSpec::RowWise(q) => Ok((0..a.rows())
            .map(|i| vec_norm(a.row(i), *q))
            .fold(0.0, f64::max)),
        MatrixNormSpec::Induced { h, g } => match induced_closed_form(a, *h, *g)? {
            Some(v) => Ok(v),
            None => Err(Error::ApproximateOnly {
                lower_bound: induced_norm_estimate(a, *h, *g, 0).value,
            }),
        },
    }
}

fn induced_closed_form(a: &Matrix, h: Exponent, g: Exponent) -> Result<Option<f64>> {
    if h.is_one() {
        return Ok(Some(
            (0..a.cols())
                .map(|j| vec_norm(&a.column(j), g))
                .fold(0.0, f64::max),
        ));
    }
    if g.is_inf() {
        let qs = h.dual();
        return Ok(Some(
            (0..a.rows()).map(|i| vec_norm(a.row(i), qs)).fold(0.0, f64::max),
        ));
    }
    if h.is_two() && g.is_two() {
        return Ok(Some(singular_values(a)?.first().copied().unwrap_or(0.0)));
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq)]
pub struct InducedEstimate {
    pub value: f64,
    /// Maximizing direction with `h(β) = 1`.
    pub argmax: Vec<f64>,
    /// True when `value` came from a closed form.
    pub exact: bool,
}

/// Induced norm `max g(Aβ)/h(β)`: closed form where available, otherwise
/// the best of several alternating-maximization runs (a lower bound).
pub fn induced_norm_estimate(a: &Matrix, h: Exponent, g: Exponent, seed: u64) -> InducedEstimate {
    let n = a.cols();
    let eval = |b: &[f64]| {
        let hb = vec_norm(b, h);
        if hb == 0.0 {
            0.0
        } else {
            vec_norm(&a.mul_vec(b).expect("shape"), g) / hb
        }
    };
    let mut starts: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();
    let mut rng = sampling::rng(seed);
    for _ in 0..32 {
        starts.push(sampling::normal_vec(&mut rng, n));
    }
    let mut best = InducedEstimate {
        value: 0.0,
        argmax: starts.first().cloned().unwrap_or_default(),
        exact: false,
    };
    for mut b in starts {
        let mut val = eval(&b);
        for _ in 0..500 {
            let ab = a.mul_vec(&b).expect("shape");
            let Ok(w) = dual_witness(&ab, g.dual()) else { break };
            let atw = a.tr_mul_vec(&w).expect("shape");
            let Ok(next) = dual_witness(&atw, h) else { break };
            let nv = eval(&next);
            b = next;
            if nv <= val * (1.0 + 1e-14) {
                val = val.max(nv);
                break;
            }
            val = nv;
        }
        if val > best.value {
            let s = vec_norm(&b, h);
            best = InducedEstimate {
                value: val,
                argmax: b.iter().map(|x| x / s).collect(),
                exact: false,
            };
        }
    }
    if let Ok(Some(v)) = induced_closed_form(a, h, g) {
        best.value = v;
        best.exact = true;
    }
    best
}

/// Factors `(φ, ψ)` with `‖u vᵀ‖_* = φ(u) ψ(v)` for the dual norm `‖·‖_*`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparableFactors {
    pub phi: Exponent,
    pub psi: Exponent,
}

pub fn separable_factors(spec: &MatrixNormSpec) -> Result<SeparableFactors> {
    match spec.canonical() {
        MatrixNormSpec::FrobeniusP(p) => Ok(SeparableFactors {
            phi: p.dual(),
            psi: p.dual(),
        }),
        MatrixNormSpec::SchattenP(_) => Ok(SeparableFactors {
            phi: Exponent::TWO,
            psi: Exponent::TWO,
        }),
        MatrixNormSpec::Induced { h, g } => Ok(SeparableFactors { phi: g.dual(), psi: h }),
        MatrixNormSpec::ProjectedF2(_) => Err(Error::Unsupported(
            "the projected Frobenius seminorm does not measure perturbations".into(),
        )),
        MatrixNormSpec::RowWise(_) => unreachable!("canonical form is induced"),
    }
}

/// A matrix `Q` of unit dual norm with `⟨Q, X⟩ = ‖X‖`, for the entrywise,
/// Schatten and projected Frobenius (semi)norms.
pub fn matrix_dual_witness(x: &Matrix, spec: &MatrixNormSpec) -> Result<Matrix> {
    let (m, n) = x.shape();
    match spec {
        MatrixNormSpec::FrobeniusP(p) => {
            Matrix::from_vec(m, n, dual_witness(x.as_slice(), p.dual())?)
        }
        MatrixNormSpec::SchattenP(p) => {
            let d = svd(x)?;
            let w = dual_witness(&d.singular_values, p.dual())?;
            let mut q = Matrix::zeros(m, n);
            for (k, wk) in w.iter().enumerate() {
                if *wk == 0.0 {
                    continue;
                }
                let uk = d.u.column(k);
                let vk = d.v.column(k);
                q = q.add_scaled(*wk, &Matrix::outer(&uk, &vk))?;
            }
            Ok(q)
        }
        MatrixNormSpec::ProjectedF2(mask) => {
            let px = mask.project(x)?;
            let s = px.frobenius();
            if s == 0.0 {
                return Err(Error::InvalidArgument(
                    "dual witness of a matrix with zero seminorm".into(),
                ));
            }
            Ok(px.scale(1.0 / s))
        }
        other => Err(Error::Unsupported(format!("dual witness for {other}"))),
    }
}
