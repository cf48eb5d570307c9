//! Matrix estimation under linear-map uncertainty `min_X max_Δ g(Y − X − Δ(X))`:
//! worst-case values with attaining maps, the penalties they reduce to,
//! nuclear norm completion, PCA and robust PCA.

use serde::Serialize;

use crate::discrepancy::delta_value;
use crate::error::{Error, Result};
use crate::norms::{
    dual_witness, mat_norm, matrix_dual_witness, vec_norm, Exponent, Mask, MatrixNormSpec,
};
use crate::numerics::{svd, Matrix, Svd};
use crate::robustify::{
    ball_is_additive, ball_sup, classify_equivalence, lift_rank_one, worst_case_loss, Status,
    UncertaintySet,
};
use crate::sampling;

/// Slack used when deciding whether an estimated map norm is inside a ball.
pub const MEMBERSHIP_MARGIN: f64 = 1e-6;

/// A linear map on `m × n` matrices. Vectorization is row-major throughout:
/// entry `(i, j)` sits at index `i·n + j`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum LinearMatrixMap {
    /// `[Δ(X)]_ij = ⟨Δ^(ij), X⟩`; `coefficients[i·n + j]` is `Δ^(ij)`.
    General {
        rows: usize,
        cols: usize,
        coefficients: Vec<Matrix>,
    },
    /// `Z ↦ scale · ⟨Q, Z⟩ · direction`.
    RankOneInduced {
        q: Matrix,
        direction: Matrix,
        scale: f64,
    },
    /// Column `j` of `Δ(X)` is `Δ^(j) X_j`.
    ColumnWise { rows: usize, blocks: Vec<Matrix> },
}

impl LinearMatrixMap {
    pub fn general(rows: usize, cols: usize, coefficients: Vec<Matrix>) -> Result<Self> {
        if coefficients.len() != rows * cols || coefficients.iter().any(|c| c.shape() != (rows, cols)) {
            return Err(Error::Dimension(format!(
                "a general map on {rows}x{cols} matrices needs {} coefficient matrices of that shape",
                rows * cols
            )));
        }
        Ok(LinearMatrixMap::General {
            rows,
            cols,
            coefficients,
        })
    }

    pub fn rank_one(q: Matrix, direction: Matrix, scale: f64) -> Result<Self> {
        if q.shape() != direction.shape() {
            return Err(Error::Dimension(format!(
                "Q is {:?} but the direction is {:?}",
                q.shape(),
                direction.shape()
            )));
        }
        if !scale.is_finite() {
            return Err(Error::NonFinite("map scale"));
        }
        Ok(LinearMatrixMap::RankOneInduced { q, direction, scale })
    }

    pub fn column_wise(rows: usize, blocks: Vec<Matrix>) -> Result<Self> {
        if blocks.iter().any(|b| b.shape() != (rows, rows)) {
            return Err(Error::Dimension(format!(
                "column blocks must be {rows}x{rows}"
            )));
        }
        Ok(LinearMatrixMap::ColumnWise { rows, blocks })
    }

    pub fn zero(rows: usize, cols: usize) -> Self {
        LinearMatrixMap::RankOneInduced {
            q: Matrix::zeros(rows, cols),
            direction: Matrix::zeros(rows, cols),
            scale: 0.0,
        }
    }

    /// The map whose `mn × mn` representation is `rep`.
    pub fn from_representation(rows: usize, cols: usize, rep: &Matrix) -> Result<Self> {
        let k = rows * cols;
        if rep.shape() != (k, k) {
            return Err(Error::Dimension(format!(
                "representation of a map on {rows}x{cols} matrices must be {k}x{k}"
            )));
        }
        let coefficients = (0..k)
            .map(|r| Matrix::from_vec(rows, cols, rep.row(r).to_vec()))
            .collect::<Result<Vec<_>>>()?;
        LinearMatrixMap::general(rows, cols, coefficients)
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            LinearMatrixMap::General { rows, cols, .. } => (*rows, *cols),
            LinearMatrixMap::RankOneInduced { q, .. } => q.shape(),
            LinearMatrixMap::ColumnWise { rows, blocks } => (*rows, blocks.len()),
        }
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        if x.shape() != self.shape() {
            return Err(Error::Dimension(format!(
                "map acts on {:?} matrices, got {:?}",
                self.shape(),
                x.shape()
            )));
        }
        Ok(())
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        self.check_input(x)?;
        let (m, n) = self.shape();
        match self {
            LinearMatrixMap::General { coefficients, .. } => {
                let data = coefficients
                    .iter()
                    .map(|c| c.inner(x))
                    .collect::<Result<Vec<_>>>()?;
                Matrix::from_vec(m, n, data)
            }
            LinearMatrixMap::RankOneInduced { q, direction, scale } => {
                Ok(direction.scale(scale * q.inner(x)?))
            }
            LinearMatrixMap::ColumnWise { blocks, .. } => {
                let mut out = Matrix::zeros(m, n);
                for (j, b) in blocks.iter().enumerate() {
                    out.set_column(j, &b.mul_vec(&x.column(j))?);
                }
                Ok(out)
            }
        }
    }

    /// `Δ*(W)`, so that `⟨W, Δ(X)⟩ = ⟨Δ*(W), X⟩`.
    pub fn adjoint_apply(&self, w: &Matrix) -> Result<Matrix> {
        self.check_input(w)?;
        let (m, n) = self.shape();
        match self {
            LinearMatrixMap::General { coefficients, .. } => {
                let mut out = Matrix::zeros(m, n);
                for (c, &wij) in coefficients.iter().zip(w.as_slice()) {
                    if wij != 0.0 {
                        out = out.add_scaled(wij, c)?;
                    }
                }
                Ok(out)
            }
            LinearMatrixMap::RankOneInduced { q, direction, scale } => {
                Ok(q.scale(scale * direction.inner(w)?))
            }
            LinearMatrixMap::ColumnWise { blocks, .. } => {
                let mut out = Matrix::zeros(m, n);
                for (j, b) in blocks.iter().enumerate() {
                    out.set_column(j, &b.tr_mul_vec(&w.column(j))?);
                }
                Ok(out)
            }
        }
    }

    /// The `mn × mn` matrix `M` with `vec(Δ(X)) = M vec(X)`.
    pub fn representation(&self) -> Matrix {
        let (m, n) = self.shape();
        let k = m * n;
        let mut rep = Matrix::zeros(k, k);
        match self {
            LinearMatrixMap::General { coefficients, .. } => {
                for (r, c) in coefficients.iter().enumerate() {
                    for (s, &v) in c.as_slice().iter().enumerate() {
                        rep[(r, s)] = v;
                    }
                }
            }
            LinearMatrixMap::RankOneInduced { q, direction, scale } => {
                for (r, &d) in direction.as_slice().iter().enumerate() {
                    for (s, &qv) in q.as_slice().iter().enumerate() {
                        rep[(r, s)] = scale * d * qv;
                    }
                }
            }
            LinearMatrixMap::ColumnWise { blocks, .. } => {
                for (j, b) in blocks.iter().enumerate() {
                    for i in 0..m {
                        for l in 0..m {
                            rep[(i * n + j, l * n + j)] = b[(i, l)];
                        }
                    }
                }
            }
        }
        rep
    }

    pub fn scaled(&self, a: f64) -> LinearMatrixMap {
        match self {
            LinearMatrixMap::General {
                rows,
                cols,
                coefficients,
            } => LinearMatrixMap::General {
                rows: *rows,
                cols: *cols,
                coefficients: coefficients.iter().map(|c| c.scale(a)).collect(),
            },
            LinearMatrixMap::RankOneInduced { q, direction, scale } => LinearMatrixMap::RankOneInduced {
                q: q.clone(),
                direction: direction.clone(),
                scale: scale * a,
            },
            LinearMatrixMap::ColumnWise { rows, blocks } => LinearMatrixMap::ColumnWise {
                rows: *rows,
                blocks: blocks.iter().map(|b| b.scale(a)).collect(),
            },
        }
    }
}

pub fn apply_map(delta: &LinearMatrixMap, x: &Matrix) -> Result<Matrix> {
    delta.apply(x)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum MatrixSetKind {
    /// Maps with `g(Δ(X)) ≤ λ h(X)` for every `X`.
    InducedMaps { h: MatrixNormSpec, g: MatrixNormSpec },
    /// Maps whose `mn × mn` representation lies in a ball of this norm.
    RepresentationBall(MatrixNormSpec),
    /// Column-wise maps with `‖Δ^(j)‖_{F_{q_j}} ≤ λ`.
    ColumnWiseBalls(Vec<Exponent>),
    /// Maps with `g(Δ(X)) ≤ λ rank(X)` on the `σ_p` unit ball, `g` being the loss.
    RankInduced(Exponent),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatrixUncertaintySet {
    pub kind: MatrixSetKind,
    pub lambda: f64,
    pub rows: usize,
    pub cols: usize,
}

fn is_norm_with_dual(spec: &MatrixNormSpec) -> bool {
    matches!(spec, MatrixNormSpec::FrobeniusP(_) | MatrixNormSpec::SchattenP(_))
}

fn check_mask(spec: &MatrixNormSpec, rows: usize, cols: usize) -> Result<()> {
    if let MatrixNormSpec::ProjectedF2(mask) = spec {
        if mask.shape() != (rows, cols) {
            return Err(Error::Dimension(format!(
                "mask is {:?} for {rows}x{cols} matrices",
                mask.shape()
            )));
        }
        if !mask.as_slice().iter().any(|&o| o) {
            return Err(Error::InvalidArgument(
                "a mask with no observed entry gives an identically zero loss".into(),
            ));
        }
    }
    Ok(())
}

impl MatrixUncertaintySet {
    fn build(kind: MatrixSetKind, lambda: f64, rows: usize, cols: usize) -> Result<Self> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "uncertainty radius must be finite and non-negative, got {lambda}"
            )));
        }
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension("empty matrix shape".into()));
        }
        Ok(MatrixUncertaintySet {
            kind,
            lambda,
            rows,
            cols,
        })
    }

    /// `h` must be an entrywise or Schatten norm; `g` any (semi)norm.
    pub fn induced_maps(h: MatrixNormSpec, g: MatrixNormSpec, lambda: f64, rows: usize, cols: usize) -> Result<Self> {
        if !is_norm_with_dual(&h) {
            return Err(Error::Unsupported(format!(
                "induced map sets measure X with an entrywise or Schatten norm, not {h}"
            )));
        }
        check_mask(&g, rows, cols)?;
        Self::build(MatrixSetKind::InducedMaps { h, g }, lambda, rows, cols)
    }

    pub fn representation_ball(spec: MatrixNormSpec, lambda: f64, rows: usize, cols: usize) -> Result<Self> {
        if !is_norm_with_dual(&spec) {
            return Err(Error::Unsupported(format!(
                "representation balls use entrywise or Schatten norms, not {spec}"
            )));
        }
        Self::build(MatrixSetKind::RepresentationBall(spec), lambda, rows, cols)
    }

    pub fn column_wise(q: Vec<Exponent>, lambda: f64, rows: usize) -> Result<Self> {
        let cols = q.len();
        Self::build(MatrixSetKind::ColumnWiseBalls(q), lambda, rows, cols)
    }

    pub fn rank_induced(p: Exponent, lambda: f64, rows: usize, cols: usize) -> Result<Self> {
        Self::build(MatrixSetKind::RankInduced(p), lambda, rows, cols)
    }

    fn check(&self, a: &Matrix, what: &str) -> Result<()> {
        if a.shape() != (self.rows, self.cols) {
            return Err(Error::Dimension(format!(
                "{what} is {:?} for a set on {}x{} matrices",
                a.shape(),
                self.rows,
                self.cols
            )));
        }
        if !a.is_finite() {
            return Err(Error::NonFinite("matrix data"));
        }
        Ok(())
    }
}

/// A map in the set together with the loss it attains.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatrixWitness {
    pub map: LinearMatrixMap,
    /// `g(Y − X − Δ(X))`.
    pub attained_value: f64,
    /// Size of the map in the set's own measure (at most `λ`).
    pub norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatrixWorstCase {
    pub value: f64,
    /// False when `value` is only an attained lower bound.
    pub exact: bool,
    /// Bounds on the worst case from the regularized comparison, when the
    /// regularized form is not exact.
    pub bracket: Option<(f64, f64)>,
    pub witness: Option<MatrixWitness>,
}

/// A matrix with `g = 1`, taken along the first basis direction that `g` sees.
fn unit_direction(g: &MatrixNormSpec, rows: usize, cols: usize) -> Result<Matrix> {
    for k in 0..rows * cols {
        let mut e = Matrix::zeros(rows, cols);
        e.as_mut_slice()[k] = 1.0;
        let ge = mat_norm(&e, g)?;
        if ge > 0.0 {
            return Ok(e.scale(1.0 / ge));
        }
    }
    Err(Error::InvalidArgument(format!("{g} is identically zero")))
}

/// The map `Z ↦ λ⟨Q, Z⟩/g(Y − X) · (X − Y)` with `Q` the dual-norm maximizer
/// of `h` at `X`; it lies in the `(h, g)` induced ball and attains
/// `g(Y − X) + λ h(X)`.
pub fn induced_witness(
    y: &Matrix,
    x: &Matrix,
    h: &MatrixNormSpec,
    g: &MatrixNormSpec,
    lambda: f64,
) -> Result<MatrixWitness> {
    let (m, n) = x.shape();
    let z = y.sub(x)?;
    let gz = mat_norm(&z, g)?;
    let hx = mat_norm(x, h)?;
    let map = if hx == 0.0 || lambda == 0.0 {
        LinearMatrixMap::zero(m, n)
    } else {
        let q = matrix_dual_witness(x, h)?;
        if gz > 0.0 {
            LinearMatrixMap::rank_one(q, x.sub(y)?, lambda / gz)?
        } else {
            LinearMatrixMap::rank_one(q, unit_direction(g, m, n)?, lambda)?
        }
    };
    let norm = match &map {
        LinearMatrixMap::RankOneInduced { q, direction, scale } if *scale != 0.0 => {
            scale.abs() * mat_norm(direction, g)? * mat_norm(q, &h.dual()?)?
        }
        _ => 0.0,
    };
    let attained_value = mat_norm(&z.sub(&map.apply(x)?)?, g)?;
    Ok(MatrixWitness {
        map,
        attained_value,
        norm,
    })
}

/// Smallest known `κ` with `a(W) ≤ κ b(W)` for all `W`.
pub fn norm_ratio_bound(a: &MatrixNormSpec, b: &MatrixNormSpec, rows: usize, cols: usize) -> Result<f64> {
    use MatrixNormSpec::*;
    let k = rows.min(cols);
    match (a, b) {
        (FrobeniusP(p), FrobeniusP(q)) => Ok(delta_value(rows * cols, *p, *q)),
        (SchattenP(p), SchattenP(q)) => Ok(delta_value(k, *p, *q)),
        (FrobeniusP(p), SchattenP(q)) if p.is_two() => Ok(delta_value(k, Exponent::TWO, *q)),
        (SchattenP(p), FrobeniusP(q)) if q.is_two() => Ok(delta_value(k, *p, Exponent::TWO)),
        (ProjectedF2(_), FrobeniusP(q)) => Ok(delta_value(rows * cols, Exponent::TWO, *q)),
        _ => Err(Error::Unsupported(format!("no ratio bound between {a} and {b}"))),
    }
}

/// `max_{Δ ∈ U} loss(Y − X − Δ(X))` with a map attaining the value.
pub fn matrix_worst_case(
    y: &Matrix,
    x: &Matrix,
    set: &MatrixUncertaintySet,
    loss: &MatrixNormSpec,
) -> Result<MatrixWorstCase> {
    set.check(y, "Y")?;
    set.check(x, "X")?;
    check_mask(loss, set.rows, set.cols)?;
    let lambda = set.lambda;
    match &set.kind {
        MatrixSetKind::InducedMaps { h, g } => {
            let witness = induced_witness(y, x, h, g, lambda)?;
            let z = y.sub(x)?;
            if loss == g {
                return Ok(MatrixWorstCase {
                    value: mat_norm(&z, g)? + lambda * mat_norm(x, h)?,
                    exact: true,
                    bracket: None,
                    witness: Some(witness),
                });
            }
            // The same map, measured by a different loss, is only a lower bound.
            let attained = mat_norm(&z.sub(&witness.map.apply(x)?)?, loss)?;
            let kappa = norm_ratio_bound(loss, g, set.rows, set.cols)?;
            let upper = mat_norm(&z, loss)? + lambda * kappa * mat_norm(x, h)?;
            Ok(MatrixWorstCase {
                value: attained,
                exact: false,
                bracket: Some((attained, upper)),
                witness: Some(MatrixWitness {
                    attained_value: attained,
                    ..witness
                }),
            })
        }
        MatrixSetKind::RankInduced(p) => {
            if mat_norm(x, &MatrixNormSpec::SchattenP(*p))? > 1.0 + 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "rank-induced sets are defined on the sigma_{p} unit ball"
                )));
            }
            let h = MatrixNormSpec::SchattenP(Exponent::ONE);
            let witness = induced_witness(y, x, &h, loss, lambda)?;
            Ok(MatrixWorstCase {
                value: mat_norm(&y.sub(x)?, loss)? + lambda * mat_norm(x, &h)?,
                exact: true,
                bracket: None,
                witness: Some(witness),
            })
        }
        MatrixSetKind::RepresentationBall(spec) => {
            let MatrixNormSpec::FrobeniusP(p) = loss else {
                return Err(Error::Unsupported(format!(
                    "representation balls are evaluated for entrywise losses, not {loss}"
                )));
            };
            let k = set.rows * set.cols;
            let vset = UncertaintySet::new(spec.clone(), lambda, k, k)?;
            let z = y.sub(x)?;
            let wc = worst_case_loss(z.as_slice(), x.as_slice(), &vset, *p)?;
            let verdict = classify_equivalence(*p, &vset)?;
            let bracket = if verdict.is_exact() {
                None
            } else {
                let zp = vec_norm(z.as_slice(), *p);
                Some((
                    zp + verdict.lower().eval(x.as_slice()),
                    zp + verdict.regularizer.eval(x.as_slice()),
                ))
            };
            let witness = match wc.witness {
                Some(w) => {
                    // The vector witness maximizes ‖z + Mβ‖; the matrix loss subtracts Δ(X).
                    let map = LinearMatrixMap::from_representation(set.rows, set.cols, &w.perturbation.scale(-1.0))?;
                    let attained_value = mat_norm(&z.sub(&map.apply(x)?)?, loss)?;
                    Some(MatrixWitness {
                        map,
                        attained_value,
                        norm: w.norm,
                    })
                }
                None => None,
            };
            Ok(MatrixWorstCase {
                value: wc.value,
                exact: wc.exact,
                bracket,
                witness,
            })
        }
        MatrixSetKind::ColumnWiseBalls(qs) => {
            let MatrixNormSpec::FrobeniusP(p) = loss else {
                return Err(Error::Unsupported(format!(
                    "column-wise sets are evaluated for entrywise losses, not {loss}"
                )));
            };
            let z = y.sub(x)?;
            let m = set.rows;
            let mut sups = Vec::with_capacity(set.cols);
            let mut blocks = Vec::with_capacity(set.cols);
            let mut exact = true;
            let mut norm = 0.0_f64;
            for (j, q) in qs.iter().enumerate() {
                let zj = z.column(j);
                let xj = x.column(j);
                let rho = lambda * vec_norm(&xj, q.dual());
                let sup = ball_sup(&zj, rho, *p, *q)?;
                let cset = UncertaintySet::new(MatrixNormSpec::FrobeniusP(*q), lambda, m, m)?;
                let w = lift_rank_one(&sup.u, &xj, &cset, &zj, *p)?;
                exact &= sup.exact;
                norm = norm.max(w.norm);
                sups.push(sup.value);
                blocks.push(w.perturbation.scale(-1.0));
            }
            let map = LinearMatrixMap::column_wise(m, blocks)?;
            let attained_value = mat_norm(&z.sub(&map.apply(x)?)?, loss)?;
            let verdict = matrix_classify(loss, set)?;
            let zp = mat_norm(&z, loss)?;
            let bracket = if verdict.status == Status::Exact {
                None
            } else {
                Some((zp, zp + verdict.penalty.eval(x)?))
            };
            Ok(MatrixWorstCase {
                value: vec_norm(&sups, *p),
                exact,
                bracket,
                witness: Some(MatrixWitness {
                    map,
                    attained_value,
                    norm,
                }),
            })
        }
    }
}

/// A penalty on `X`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum MatrixPenalty {
    /// `coefficient · ‖X‖`.
    Scaled { coefficient: f64, norm: MatrixNormSpec },
    /// `‖(w_j ‖X_j‖_{e_j})_j‖_p` over the columns `X_j`.
    ColumnWeighted {
        p: Exponent,
        weights: Vec<f64>,
        exponents: Vec<Exponent>,
    },
}

impl MatrixPenalty {
    pub fn eval(&self, x: &Matrix) -> Result<f64> {
        match self {
            MatrixPenalty::Scaled { coefficient, norm } => {
                if *coefficient == 0.0 {
                    Ok(0.0)
                } else {
                    Ok(coefficient * mat_norm(x, norm)?)
                }
            }
            MatrixPenalty::ColumnWeighted { p, weights, exponents } => {
                if weights.len() != x.cols() {
                    return Err(Error::Dimension(format!(
                        "{} column weights for {} columns",
                        weights.len(),
                        x.cols()
                    )));
                }
                let per: Vec<f64> = (0..x.cols())
                    .map(|j| weights[j] * vec_norm(&x.column(j), exponents[j]))
                    .collect();
                Ok(vec_norm(&per, *p))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatrixVerdict {
    pub status: Status,
    /// Upper-bound penalty; the exact one when `status` is exact.
    pub penalty: MatrixPenalty,
    /// Lower-bound penalty, when a regularized lower bound exists.
    pub lower: Option<MatrixPenalty>,
    pub note: Option<String>,
}

impl MatrixVerdict {
    pub fn is_exact(&self) -> bool {
        self.status == Status::Exact
    }
}

/// Whether `max_Δ loss(Z + Δ(X)) = loss(Z) + h̄(X)` for every `Z, X`, and the
/// penalty `h̄`.
///
/// For column-wise balls with more than one column the penalty is attained
/// for every residual only when `p = 1`: with `p > 1` the per-column worst
/// cases combine through an `ℓp` sum, which is strictly below the sum of the
/// two `ℓp` norms unless the column profiles are proportional.
pub fn matrix_classify(loss: &MatrixNormSpec, set: &MatrixUncertaintySet) -> Result<MatrixVerdict> {
    let lambda = set.lambda;
    match &set.kind {
        MatrixSetKind::InducedMaps { h, g } => {
            if loss == g {
                Ok(MatrixVerdict {
                    status: Status::Exact,
                    penalty: MatrixPenalty::Scaled {
                        coefficient: lambda,
                        norm: h.clone(),
                    },
                    lower: None,
                    note: None,
                })
            } else {
                let kappa = norm_ratio_bound(loss, g, set.rows, set.cols)?;
                Ok(MatrixVerdict {
                    status: Status::BoundsOnly,
                    penalty: MatrixPenalty::Scaled {
                        coefficient: lambda * kappa,
                        norm: h.clone(),
                    },
                    lower: None,
                    note: Some(format!("the set bounds {g}, but the loss is {loss}")),
                })
            }
        }
        MatrixSetKind::RankInduced(p) => Ok(MatrixVerdict {
            status: Status::Exact,
            penalty: MatrixPenalty::Scaled {
                coefficient: lambda,
                norm: MatrixNormSpec::SchattenP(Exponent::ONE),
            },
            lower: None,
            note: Some(format!("valid for X in the sigma_{p} unit ball")),
        }),
        MatrixSetKind::RepresentationBall(spec) => {
            let MatrixNormSpec::FrobeniusP(p) = loss else {
                return Err(Error::Unsupported(format!(
                    "representation balls are classified for entrywise losses, not {loss}"
                )));
            };
            let k = set.rows * set.cols;
            let v = classify_equivalence(*p, &UncertaintySet::new(spec.clone(), lambda, k, k)?)?;
            let norm = MatrixNormSpec::FrobeniusP(v.regularizer.exponent);
            Ok(MatrixVerdict {
                status: v.status,
                penalty: MatrixPenalty::Scaled {
                    coefficient: v.upper_coefficient,
                    norm: norm.clone(),
                },
                lower: (!v.is_exact()).then(|| MatrixPenalty::Scaled {
                    coefficient: v.lower_coefficient,
                    norm,
                }),
                note: None,
            })
        }
        MatrixSetKind::ColumnWiseBalls(qs) => {
            let MatrixNormSpec::FrobeniusP(p) = loss else {
                return Err(Error::Unsupported(format!(
                    "column-wise sets are classified for entrywise losses, not {loss}"
                )));
            };
            let m = set.rows;
            let weights = qs.iter().map(|q| lambda * delta_value(m, *p, *q)).collect();
            let exponents = qs.iter().map(|q| q.dual()).collect();
            let exact = p.is_one() || (qs.len() == 1 && ball_is_additive(*p, qs[0], m));
            let note = if !exact && (p.is_inf() || qs.iter().all(|q| q.approx_eq(*p))) {
                Some(
                    "per-column worst cases are additive, but their l_p combination is not; \
                     the penalty is the value at Z = 0 and an upper bound elsewhere"
                        .to_string(),
                )
            } else {
                None
            };
            Ok(MatrixVerdict {
                status: if exact { Status::Exact } else { Status::BoundsOnly },
                penalty: MatrixPenalty::ColumnWeighted {
                    p: *p,
                    weights,
                    exponents,
                },
                lower: None,
                note,
            })
        }
    }
}

/// Nuclear norm completion data. Unobserved entries of `y` are stored as 0.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompletionProblem {
    pub y: Matrix,
    pub mask: Mask,
    pub lambda: f64,
}

impl CompletionProblem {
    /// Zeroes the unobserved entries of `y`.
    pub fn new(y: Matrix, mask: Mask, lambda: f64) -> Result<Self> {
        if y.shape() != mask.shape() {
            return Err(Error::Dimension(format!(
                "Y is {:?} but the mask is {:?}",
                y.shape(),
                mask.shape()
            )));
        }
        if !y.is_finite() {
            return Err(Error::NonFinite("completion data"));
        }
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "lambda must be finite and non-negative, got {lambda}"
            )));
        }
        let y = mask.project(&y)?;
        Ok(CompletionProblem { y, mask, lambda })
    }

    pub fn loss(&self, x: &Matrix) -> Result<f64> {
        Ok(self.mask.project(&self.y.sub(x)?)?.frobenius())
    }

    /// `‖Y − X‖_{P(F2)} + λ‖X‖_{σ1}`.
    pub fn objective(&self, x: &Matrix) -> Result<f64> {
        Ok(self.loss(x)? + self.lambda * nuclear_norm(x)?)
    }
}

pub fn nuclear_norm(x: &Matrix) -> Result<f64> {
    Ok(vec_norm(&svd(x)?.singular_values, Exponent::ONE))
}

fn spectral_norm(x: &Matrix) -> Result<f64> {
    Ok(svd(x)?.singular_values.first().copied().unwrap_or(0.0))
}

/// Proximal map of `τ‖·‖_{σ1}`.
pub fn singular_value_threshold(a: &Matrix, tau: f64) -> Result<Matrix> {
    let d = svd(a)?;
    let s = d.singular_values.iter().map(|s| (s - tau).max(0.0)).collect();
    Ok(Svd {
        u: d.u,
        singular_values: s,
        v: d.v,
    }
    .reconstruct())
}

/// Objective comparison against random low-rank perturbations.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DescentAudit {
    pub directions: usize,
    /// Largest `(f(X) − f(X + tD)) / f(X)` seen, or 0 when no step decreased `f`.
    pub max_relative_improvement: f64,
    pub passed: bool,
}

pub const DESCENT_AUDIT_TOL: f64 = 1e-6;

/// Tries `directions` random directions of rank 1 to 3 at three step sizes;
/// passes when none improves the objective by more than 1e-6 relative.
pub fn descent_audit(
    f: impl Fn(&Matrix) -> Result<f64>,
    x: &Matrix,
    directions: usize,
    seed: u64,
) -> Result<DescentAudit> {
    let (m, n) = x.shape();
    let f0 = f(x)?;
    let denom = f0.abs().max(f64::MIN_POSITIVE);
    let scale = 1.0 + x.frobenius();
    let mut rng = sampling::rng(seed);
    let mut worst = 0.0_f64;
    for d in 0..directions {
        let r = 1 + d % 3.min(m.min(n)).max(1);
        let a = sampling::normal_matrix(&mut rng, m, r);
        let b = sampling::normal_matrix(&mut rng, n, r);
        let dir = a.matmul(&b.transpose())?;
        let nd = dir.frobenius();
        if nd == 0.0 {
            continue;
        }
        let dir = dir.scale(1.0 / nd);
        for t in [1e-1, 1e-3, 1e-5] {
            let fx = f(&x.add_scaled(t * scale, &dir)?)?;
            worst = worst.max((f0 - fx) / denom);
        }
    }
    Ok(DescentAudit {
        directions,
        max_relative_improvement: worst,
        passed: worst <= DESCENT_AUDIT_TOL,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MatrixSolverOptions {
    pub max_iterations: usize,
    pub tol: f64,
    pub audit_directions: usize,
    pub seed: u64,
}

impl MatrixSolverOptions {
    pub fn completion() -> Self {
        MatrixSolverOptions {
            max_iterations: 200_000,
            tol: 1e-10,
            audit_directions: 10_000,
            seed: 0,
        }
    }

    pub fn robust_pca() -> Self {
        MatrixSolverOptions {
            max_iterations: 10_000,
            tol: 1e-8,
            audit_directions: 10_000,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatrixSolveReport {
    pub x: Matrix,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective minus the best dual bound found.
    pub duality_gap: f64,
    pub audit: DescentAudit,
}

pub fn mc_nuclear_solve(prob: &CompletionProblem) -> Result<MatrixSolveReport> {
    mc_nuclear_solve_with(prob, MatrixSolverOptions::completion())
}

/// `min_X ‖Y − X‖_{P(F2)} + λ‖X‖_{σ1}` by a primal-dual method whose primal
/// step is singular value thresholding.
pub fn mc_nuclear_solve_with(prob: &CompletionProblem, opts: MatrixSolverOptions) -> Result<MatrixSolveReport> {
    let (m, n) = prob.y.shape();
    let lambda = prob.lambda;
    let py = prob.y.clone();
    let s = py.frobenius();
    let obj = |x: &Matrix| prob.objective(x);
    let finish = |x: Matrix, iterations: usize, converged: bool, gap: f64| -> Result<MatrixSolveReport> {
        let audit = descent_audit(obj, &x, opts.audit_directions, opts.seed)?;
        Ok(MatrixSolveReport {
            objective: obj(&x)?,
            x,
            iterations,
            converged,
            duality_gap: gap,
            audit,
        })
    };
    if lambda == 0.0 {
        return finish(py, 0, true, 0.0);
    }
    if s == 0.0 || lambda >= spectral_norm(&py)? / s {
        return finish(Matrix::zeros(m, n), 0, true, 0.0);
    }
    let y = py.scale(1.0 / s);
    let (tau, sigma) = (0.99, 0.99);
    let mut x = Matrix::zeros(m, n);
    let mut xbar = x.clone();
    let mut dual = Matrix::zeros(m, n);
    let f = |x: &Matrix| -> Result<f64> {
        Ok(prob.mask.project(&y.sub(x)?)?.frobenius() + lambda * nuclear_norm(x)?)
    };
    let mut best_x = x.clone();
    let mut best_f = f(&x)?;
    let mut best_dual = 0.0_f64;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iterations {
        iterations += 1;
        let step = prob.mask.project(&dual.add_scaled(sigma, &xbar.sub(&y)?)?)?;
        let nrm = step.frobenius();
        dual = if nrm > 1.0 { step.scale(1.0 / nrm) } else { step };
        let next = singular_value_threshold(&x.add_scaled(-tau, &dual)?, tau * lambda)?;
        xbar = next.scale(2.0).sub(&x)?;
        x = next;
        if iterations % 20 == 0 {
            let fx = f(&x)?;
            if fx < best_f {
                best_f = fx;
                best_x = x.clone();
            }
            let sn = spectral_norm(&dual)?;
            let feasible = if sn > lambda { dual.scale(lambda / sn) } else { dual.clone() };
            best_dual = best_dual.max(-feasible.inner(&y)?);
            if best_f - best_dual <= opts.tol * (1.0 + best_f) {
                converged = true;
                break;
            }
        }
    }
    let gap = (best_f - best_dual).max(0.0) * s;
    finish(best_x.scale(s), iterations, converged, gap)
}

/// Best rank-`k` approximation: the leading `k` singular triplets of `Y`.
pub fn pca_truncate(y: &Matrix, k: usize) -> Result<Matrix> {
    let (m, n) = y.shape();
    if k > m.min(n) {
        return Err(Error::InvalidArgument(format!(
            "rank {k} exceeds min({m}, {n})"
        )));
    }
    let d = svd(y)?;
    let s = d
        .singular_values
        .iter()
        .enumerate()
        .map(|(i, &v)| if i < k { v } else { 0.0 })
        .collect();
    Ok(Svd {
        u: d.u,
        singular_values: s,
        v: d.v,
    }
    .reconstruct())
}

pub fn robust_pca_objective(y: &Matrix, x: &Matrix, lambda: f64) -> Result<f64> {
    Ok(vec_norm(y.sub(x)?.as_slice(), Exponent::ONE) + lambda * nuclear_norm(x)?)
}

pub fn robust_pca_solve(y: &Matrix, lambda: f64) -> Result<MatrixSolveReport> {
    robust_pca_solve_with(y, lambda, MatrixSolverOptions::robust_pca())
}

/// `min_X ‖Y − X‖_{F1} + λ‖X‖_{σ1}` by ADMM on `X + E = Y` with unit penalty.
pub fn robust_pca_solve_with(y: &Matrix, lambda: f64, opts: MatrixSolverOptions) -> Result<MatrixSolveReport> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "robust PCA needs a positive finite lambda, got {lambda}"
        )));
    }
    if !y.is_finite() {
        return Err(Error::NonFinite("robust PCA data"));
    }
    let (m, n) = y.shape();
    let s = y.frobenius();
    let obj = |x: &Matrix| robust_pca_objective(y, x, lambda);
    if s == 0.0 {
        let x = Matrix::zeros(m, n);
        let audit = descent_audit(obj, &x, opts.audit_directions, opts.seed)?;
        return Ok(MatrixSolveReport {
            x,
            objective: 0.0,
            iterations: 0,
            converged: true,
            duality_gap: 0.0,
            audit,
        });
    }
    let yn = y.scale(1.0 / s);
    let soft = |a: &Matrix, t: f64| a.map(|v| v.signum() * (v.abs() - t).max(0.0));
    let mut x = Matrix::zeros(m, n);
    let mut e = yn.clone();
    let mut w = Matrix::zeros(m, n);
    let f = |x: &Matrix| robust_pca_objective(&yn, x, lambda);
    let mut best_x = x.clone();
    let mut best_f = f(&x)?;
    let mut best_dual = 0.0_f64;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iterations {
        iterations += 1;
        x = singular_value_threshold(&yn.sub(&e)?.sub(&w)?, lambda)?;
        let e_prev = e;
        e = soft(&yn.sub(&x)?.sub(&w)?, 1.0);
        let r = x.add(&e)?.sub(&yn)?;
        w = w.add(&r)?;
        let primal = r.frobenius();
        let dual_res = e.sub(&e_prev)?.frobenius();
        let check = primal <= opts.tol && dual_res <= opts.tol;
        if check || iterations % 20 == 0 {
            let fx = f(&x)?;
            if fx < best_f {
                best_f = fx;
                best_x = x.clone();
            }
            let c = 1.0_f64.max(w.max_abs()).max(spectral_norm(&w)? / lambda);
            best_dual = best_dual.max(-w.inner(&yn)? / c);
            if check || best_f - best_dual <= 1e-10 * (1.0 + best_f) {
                converged = true;
                break;
            }
        }
    }
    let x = best_x.scale(s);
    let audit = descent_audit(obj, &x, opts.audit_directions, opts.seed)?;
    Ok(MatrixSolveReport {
        objective: obj(&x)?,
        x,
        iterations,
        converged,
        duality_gap: (best_f - best_dual).max(0.0) * s,
        audit,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Counterexample {
    pub y: Matrix,
    pub x: Matrix,
    pub lambda: f64,
    /// `max_Δ ‖Y − X − Δ(X)‖` under the tested loss.
    pub robust_value: f64,
    /// `‖Y − X‖_{F1} + λ‖X‖_{σ1}`.
    pub target: f64,
    pub mismatch: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Characterization {
    pub loss: MatrixNormSpec,
    /// Whether some induced set reproduces the robust PCA objective.
    pub holds: bool,
    pub trials: usize,
    /// Largest deviation seen between the worst case and the target.
    pub max_mismatch: f64,
    pub counterexample: Option<Counterexample>,
}

/// Whether `‖Y − X‖_{F1} + λ‖X‖_{σ1}` is the worst case of `loss` under some
/// linear-map uncertainty set.
///
/// For `F_1` the set `U(σ1, F1)` is checked on random instances. Otherwise
/// the search runs at `X = 0`, where `Δ(X) = 0` for every map, so the worst
/// case is `‖Y‖` whatever the set and whatever penalty is matched to it.
pub fn robust_pca_characterization_check(loss: &MatrixNormSpec, trials: usize, seed: u64) -> Result<Characterization> {
    let mut rng = sampling::rng(seed);
    let f1 = MatrixNormSpec::FrobeniusP(Exponent::ONE);
    let sigma1 = MatrixNormSpec::SchattenP(Exponent::ONE);
    let mut max_mismatch = 0.0_f64;
    for t in 0..trials {
        let m = 2 + t % 3;
        let n = 2 + (t / 3) % 3;
        let y = sampling::normal_matrix(&mut rng, m, n);
        let lambda = sampling::uniform(&mut rng, 0.1, 2.0);
        let (x, robust_value) = if *loss == f1 {
            let x = sampling::normal_matrix(&mut rng, m, n);
            let set = MatrixUncertaintySet::induced_maps(sigma1.clone(), f1.clone(), lambda, m, n)?;
            let wc = matrix_worst_case(&y, &x, &set, loss)?;
            let attained = wc.witness.map(|w| w.attained_value).unwrap_or(f64::NAN);
            (x, attained)
        } else {
            (Matrix::zeros(m, n), mat_norm(&y, loss)?)
        };
        let target = robust_pca_objective(&y, &x, lambda)?;
        let mismatch = (robust_value - target).abs();
        max_mismatch = max_mismatch.max(mismatch);
        if mismatch > 1e-6 * (1.0 + target) {
            return Ok(Characterization {
                loss: loss.clone(),
                holds: false,
                trials: t + 1,
                max_mismatch,
                counterexample: Some(Counterexample {
                    y,
                    x,
                    lambda,
                    robust_value,
                    target,
                    mismatch,
                }),
            });
        }
    }
    Ok(Characterization {
        loss: loss.clone(),
        holds: true,
        trials,
        max_mismatch,
        counterexample: None,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Membership {
    Member,
    NonMember,
    /// The estimate is within the margin of the radius.
    Inconclusive,
}

fn decide(estimate: f64, lambda: f64) -> Membership {
    let margin = MEMBERSHIP_MARGIN * lambda.max(1.0);
    if estimate > lambda + margin {
        Membership::NonMember
    } else if estimate < lambda - margin {
        Membership::Member
    } else {
        Membership::Inconclusive
    }
}

/// Conditional-gradient ascent of `g(Δ(X))` over a compact set given by its
/// linear maximization oracle.
fn ascend(
    map: &LinearMatrixMap,
    g: &MatrixNormSpec,
    lmo: &dyn Fn(&Matrix) -> Result<Matrix>,
    start: Matrix,
) -> Result<(f64, Matrix)> {
    let mut x = start;
    let mut val = mat_norm(&map.apply(&x)?, g)?;
    for _ in 0..500 {
        let w = map.apply(&x)?;
        if mat_norm(&w, g)? == 0.0 {
            break;
        }
        let Ok(q) = matrix_dual_witness(&w, g) else { break };
        let grad = map.adjoint_apply(&q)?;
        if grad.max_abs() == 0.0 {
            break;
        }
        let next = lmo(&grad)?;
        let nv = mat_norm(&map.apply(&next)?, g)?;
        if nv <= val * (1.0 + 1e-14) {
            break;
        }
        x = next;
        val = nv;
    }
    Ok((val, x))
}

/// `argmax ⟨G, X⟩` over rank-`r` matrices with `‖X‖_{σp} ≤ 1`.
fn rank_lmo(grad: &Matrix, r: usize, p: Exponent) -> Result<Matrix> {
    let (m, n) = grad.shape();
    let d = svd(grad)?;
    let k = r.min(d.singular_values.len());
    let top = &d.singular_values[..k];
    if top.iter().all(|&v| v == 0.0) {
        return Ok(Matrix::zeros(m, n));
    }
    let w = dual_witness(top, p)?;
    let mut x = Matrix::zeros(m, n);
    for (i, wi) in w.iter().enumerate() {
        if *wi != 0.0 {
            x = x.add_scaled(*wi, &Matrix::outer(&d.u.column(i), &d.v.column(i)))?;
        }
    }
    Ok(x)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MembershipReport {
    pub verdict: Membership,
    /// Estimate of the map's size in the set's measure.
    pub estimate: f64,
    /// True when `estimate` is the exact value.
    pub exact: bool,
}

/// `max g(Δ(X)) / h(X)`: exact for rank-one maps and for `h = F_1`,
/// otherwise the best of several ascents (a lower bound).
pub fn induced_map_norm(map: &LinearMatrixMap, h: &MatrixNormSpec, g: &MatrixNormSpec, seed: u64) -> Result<(f64, bool)> {
    if !is_norm_with_dual(h) {
        return Err(Error::Unsupported(format!("induced map norm with h = {h}")));
    }
    let (m, n) = map.shape();
    if let LinearMatrixMap::RankOneInduced { q, direction, scale } = map {
        if *scale == 0.0 {
            return Ok((0.0, true));
        }
        return Ok((scale.abs() * mat_norm(direction, g)? * mat_norm(q, &h.dual()?)?, true));
    }
    let basis = |k: usize| {
        let mut e = Matrix::zeros(m, n);
        e.as_mut_slice()[k] = 1.0;
        e
    };
    if *h == MatrixNormSpec::FrobeniusP(Exponent::ONE) {
        let mut best = 0.0_f64;
        for k in 0..m * n {
            best = best.max(mat_norm(&map.apply(&basis(k))?, g)?);
        }
        return Ok((best, true));
    }
    let hd = h.dual()?;
    let lmo = |grad: &Matrix| matrix_dual_witness(grad, &hd);
    let mut starts: Vec<Matrix> = (0..m * n)
        .map(|k| {
            let e = basis(k);
            let he = mat_norm(&e, h)?;
            Ok(e.scale(1.0 / he))
        })
        .collect::<Result<_>>()?;
    let mut rng = sampling::rng(seed);
    for _ in 0..16 {
        let r = sampling::normal_matrix(&mut rng, m, n);
        let hr = mat_norm(&r, h)?;
        starts.push(r.scale(1.0 / hr));
    }
    let mut best = 0.0_f64;
    for s in starts {
        best = best.max(ascend(map, g, &lmo, s)?.0);
    }
    Ok((best, false))
}

/// An upper bound on `max g(Δ(X)) / h(X)` through the Euclidean operator
/// norm of the representation.
pub fn induced_map_norm_upper(map: &LinearMatrixMap, h: &MatrixNormSpec, g: &MatrixNormSpec) -> Result<f64> {
    let (m, n) = map.shape();
    let k = m.min(n);
    let kg = match g {
        MatrixNormSpec::FrobeniusP(p) => delta_value(m * n, *p, Exponent::TWO),
        MatrixNormSpec::SchattenP(p) => delta_value(k, *p, Exponent::TWO),
        MatrixNormSpec::ProjectedF2(_) => 1.0,
        other => return Err(Error::Unsupported(format!("operator bound for g = {other}"))),
    };
    let kh = match h {
        MatrixNormSpec::FrobeniusP(p) => delta_value(m * n, Exponent::TWO, *p),
        MatrixNormSpec::SchattenP(p) => delta_value(k, Exponent::TWO, *p),
        other => return Err(Error::Unsupported(format!("operator bound for h = {other}"))),
    };
    Ok(kg * kh * spectral_norm(&map.representation())?)
}

/// Membership of `Δ` in the `(h, g)` induced ball of radius `λ`.
pub fn induced_membership(
    map: &LinearMatrixMap,
    h: &MatrixNormSpec,
    g: &MatrixNormSpec,
    lambda: f64,
    seed: u64,
) -> Result<MembershipReport> {
    let (estimate, exact) = induced_map_norm(map, h, g, seed)?;
    Ok(MembershipReport {
        verdict: decide(estimate, lambda),
        estimate,
        exact,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankMembership {
    pub verdict: Membership,
    /// Estimate of `max g(Δ(X)) / rank(X)` over the `σ_p` unit ball.
    pub ratio: f64,
    /// Best `g(Δ(X))` found over rank-`r` matrices, `r = 1, 2, ...`.
    pub per_rank: Vec<f64>,
}

pub const RANK_SEARCH_CAP: usize = 4;
pub const RANK_SEARCH_STARTS: usize = 32;

/// Tests `g(Δ(X)) ≤ λ rank(X)` over `‖X‖_{σp} ≤ 1` by a separate ascent over
/// each rank.
pub fn rank_set_membership(
    map: &LinearMatrixMap,
    p: Exponent,
    lambda: f64,
    loss: &MatrixNormSpec,
    seed: u64,
) -> Result<RankMembership> {
    let (m, n) = map.shape();
    if m > RANK_SEARCH_CAP || n > RANK_SEARCH_CAP {
        return Err(Error::ScaleCap(format!(
            "rank search supports matrices up to {RANK_SEARCH_CAP}x{RANK_SEARCH_CAP}, got {m}x{n}"
        )));
    }
    let sp = MatrixNormSpec::SchattenP(p);
    let mut rng = sampling::rng(seed);
    let mut per_rank = Vec::new();
    for r in 1..=m.min(n) {
        let lmo = move |grad: &Matrix| rank_lmo(grad, r, p);
        let mut best = 0.0_f64;
        for _ in 0..RANK_SEARCH_STARTS {
            let a = sampling::normal_matrix(&mut rng, m, r);
            let b = sampling::normal_matrix(&mut rng, n, r);
            let x0 = a.matmul(&b.transpose())?;
            let s = mat_norm(&x0, &sp)?;
            if s == 0.0 {
                continue;
            }
            best = best.max(ascend(map, loss, &lmo, x0.scale(1.0 / s))?.0);
        }
        per_rank.push(best);
    }
    let ratio = per_rank
        .iter()
        .enumerate()
        .map(|(i, v)| v / (i + 1) as f64)
        .fold(0.0, f64::max);
    Ok(RankMembership {
        verdict: decide(ratio, lambda),
        ratio,
        per_rank,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn basis(rows: usize, cols: usize, k: usize) -> Matrix {
        let mut e = Matrix::zeros(rows, cols);
        e.as_mut_slice()[k] = 1.0;
        e
    }

    #[test]
    fn identity_general_map() {
        let id = LinearMatrixMap::general(2, 3, (0..6).map(|k| basis(2, 3, k)).collect()).unwrap();
        let x = m(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]]);
        assert_eq!(id.apply(&x).unwrap(), x);
    }

    #[test]
    fn rank_one_map_definition() {
        let q = m(&[&[1.0, 0.0], &[0.0, 2.0]]);
        let d = m(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let map = LinearMatrixMap::rank_one(q, d.clone(), 3.0).unwrap();
        let x = m(&[&[1.0, 5.0], &[7.0, 2.0]]);
        assert_eq!(map.apply(&x).unwrap(), d.scale(15.0));
    }

    #[test]
    fn column_wise_scaling() {
        let map = LinearMatrixMap::column_wise(2, vec![Matrix::identity(2), Matrix::identity(2).scale(2.0)]).unwrap();
        let x = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(map.apply(&x).unwrap(), m(&[&[1.0, 4.0], &[3.0, 8.0]]));
    }

    #[test]
    fn representation_and_adjoint_agree_with_apply() {
        let mut rng = sampling::rng(3);
        let (rows, cols) = (2, 3);
        let general = LinearMatrixMap::general(
            rows,
            cols,
            (0..6).map(|_| sampling::normal_matrix(&mut rng, rows, cols)).collect(),
        )
        .unwrap();
        let col = LinearMatrixMap::column_wise(
            rows,
            (0..cols).map(|_| sampling::normal_matrix(&mut rng, rows, rows)).collect(),
        )
        .unwrap();
        let r1 = LinearMatrixMap::rank_one(
            sampling::normal_matrix(&mut rng, rows, cols),
            sampling::normal_matrix(&mut rng, rows, cols),
            0.7,
        )
        .unwrap();
        for map in [general, col, r1] {
            let rep = map.representation();
            let x = sampling::normal_matrix(&mut rng, rows, cols);
            let w = sampling::normal_matrix(&mut rng, rows, cols);
            let via_rep = rep.mul_vec(x.as_slice()).unwrap();
            let direct = map.apply(&x).unwrap();
            for (a, b) in via_rep.iter().zip(direct.as_slice()) {
                assert_relative_eq!(a, b, epsilon = 1e-12);
            }
            let lhs = w.inner(&direct).unwrap();
            let rhs = map.adjoint_apply(&w).unwrap().inner(&x).unwrap();
            assert_relative_eq!(lhs, rhs, epsilon = 1e-12);
            let back = LinearMatrixMap::from_representation(rows, cols, &rep).unwrap();
            let again = back.apply(&x).unwrap();
            for (a, b) in again.as_slice().iter().zip(direct.as_slice()) {
                assert_relative_eq!(a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn column_wise_output_depends_on_own_column() {
        let mut rng = sampling::rng(5);
        let map = LinearMatrixMap::column_wise(3, (0..2).map(|_| sampling::normal_matrix(&mut rng, 3, 3)).collect()).unwrap();
        let x = sampling::normal_matrix(&mut rng, 3, 2);
        let mut x2 = x.clone();
        x2.set_column(1, &[9.0, -9.0, 4.0]);
        assert_eq!(map.apply(&x).unwrap().column(0), map.apply(&x2).unwrap().column(0));
    }

    fn completion_mask() -> Mask {
        Mask::new(3, 3, vec![true, false, true, true, true, false, false, true, true]).unwrap()
    }

    #[test]
    fn nuclear_projected_worst_case_at_zero() {
        let mask = completion_mask();
        let g = MatrixNormSpec::ProjectedF2(mask.clone());
        let set = MatrixUncertaintySet::induced_maps(MatrixNormSpec::SchattenP(Exponent::ONE), g.clone(), 0.5, 3, 3).unwrap();
        let y = sampling::normal_matrix(&mut sampling::rng(8), 3, 3);
        let wc = matrix_worst_case(&y, &Matrix::zeros(3, 3), &set, &g).unwrap();
        assert_relative_eq!(wc.value, mask.project(&y).unwrap().frobenius(), max_relative = 1e-14);
    }

    #[test]
    fn nuclear_projected_witness_attains() {
        let mask = completion_mask();
        let g = MatrixNormSpec::ProjectedF2(mask.clone());
        let h = MatrixNormSpec::SchattenP(Exponent::ONE);
        let set = MatrixUncertaintySet::induced_maps(h.clone(), g.clone(), 0.5, 3, 3).unwrap();
        let mut rng = sampling::rng(9);
        let y = sampling::normal_matrix(&mut rng, 3, 3);
        let x = sampling::normal_matrix(&mut rng, 3, 3);
        let wc = matrix_worst_case(&y, &x, &set, &g).unwrap();
        let expect = mat_norm(&y.sub(&x).unwrap(), &g).unwrap() + 0.5 * mat_norm(&x, &h).unwrap();
        assert_relative_eq!(wc.value, expect, max_relative = 1e-14);
        let w = wc.witness.unwrap();
        assert!((w.attained_value - expect).abs() <= 1e-8);
        assert!(w.norm <= 0.5 + 1e-12);
    }

    #[test]
    fn witness_when_residual_is_invisible() {
        let mask = completion_mask();
        let g = MatrixNormSpec::ProjectedF2(mask.clone());
        let h = MatrixNormSpec::SchattenP(Exponent::TWO);
        let x = m(&[&[1.0, 2.0, 0.0], &[0.0, 1.0, 3.0], &[1.0, 0.0, 1.0]]);
        // Y differs from X only where nothing is observed.
        let mut y = x.clone();
        y[(0, 1)] += 4.0;
        let w = induced_witness(&y, &x, &h, &g, 0.3).unwrap();
        assert_relative_eq!(w.attained_value, 0.3 * mat_norm(&x, &h).unwrap(), max_relative = 1e-12);
    }

    #[test]
    fn column_wise_value_is_columnwise_combination() {
        let mut rng = sampling::rng(12);
        let (rows, cols, lambda) = (3, 3, 0.4);
        let set = MatrixUncertaintySet::column_wise(vec![Exponent::TWO; cols], lambda, rows).unwrap();
        let loss = MatrixNormSpec::FrobeniusP(Exponent::TWO);
        let y = sampling::normal_matrix(&mut rng, rows, cols);
        let x = sampling::normal_matrix(&mut rng, rows, cols);
        let wc = matrix_worst_case(&y, &x, &set, &loss).unwrap();
        let z = y.sub(&x).unwrap();
        let per: Vec<f64> = (0..cols)
            .map(|j| vec_norm(&z.column(j), Exponent::TWO) + lambda * vec_norm(&x.column(j), Exponent::TWO))
            .collect();
        assert_relative_eq!(wc.value, vec_norm(&per, Exponent::TWO), max_relative = 1e-12);
        assert!(wc.exact);
        let w = wc.witness.unwrap();
        assert_relative_eq!(w.attained_value, wc.value, max_relative = 1e-12);
        // The closed-form penalty bounds it from above.
        let penalized = z.frobenius() + lambda * x.frobenius();
        assert!(wc.value <= penalized + 1e-12);
    }

    #[test]
    fn column_wise_penalty_attained_for_proportional_profiles() {
        let lambda = 0.5;
        let set = MatrixUncertaintySet::column_wise(vec![Exponent::TWO; 2], lambda, 2).unwrap();
        let loss = MatrixNormSpec::FrobeniusP(Exponent::TWO);
        let x = m(&[&[1.0, 0.0], &[0.0, 2.0]]);
        // Residual column norms 2 and 4, proportional to the column norms of X.
        let z = m(&[&[2.0, 0.0], &[0.0, 4.0]]);
        let y = z.add(&x).unwrap();
        let wc = matrix_worst_case(&y, &x, &set, &loss).unwrap();
        assert_relative_eq!(wc.value, z.frobenius() + lambda * x.frobenius(), max_relative = 1e-12);
    }

    #[test]
    fn column_wise_penalty_not_attained_in_general() {
        let set = MatrixUncertaintySet::column_wise(vec![Exponent::TWO; 2], 1.0, 1).unwrap();
        let loss = MatrixNormSpec::FrobeniusP(Exponent::TWO);
        let x = m(&[&[0.0, 1.0]]);
        let y = m(&[&[1.0, 1.0]]);
        let wc = matrix_worst_case(&y, &x, &set, &loss).unwrap();
        assert_relative_eq!(wc.value, 2f64.sqrt(), max_relative = 1e-14);
        let v = matrix_classify(&loss, &set).unwrap();
        assert!(!v.is_exact());
        assert_relative_eq!(v.penalty.eval(&x).unwrap(), 1.0);
    }

    #[test]
    fn classify_table_rows() {
        let f2 = MatrixNormSpec::FrobeniusP(Exponent::TWO);
        let sigma = MatrixUncertaintySet::representation_ball(MatrixNormSpec::SchattenP(Exponent::Finite(3.0)), 0.7, 2, 3).unwrap();
        let v = matrix_classify(&f2, &sigma).unwrap();
        assert!(v.is_exact());
        assert_eq!(
            v.penalty,
            MatrixPenalty::Scaled {
                coefficient: 0.7,
                norm: f2.clone()
            }
        );

        let f3 = MatrixNormSpec::FrobeniusP(Exponent::Finite(3.0));
        let ball = MatrixUncertaintySet::representation_ball(f2.clone(), 1.0, 2, 2).unwrap();
        let v = matrix_classify(&f3, &ball).unwrap();
        assert!(!v.is_exact());
        let MatrixPenalty::Scaled { coefficient, .. } = v.penalty else { panic!() };
        // max ‖u‖_3/‖u‖_2 = 1 on R^4; max ‖u‖_2/‖u‖_3 = 4^(1/2 - 1/3).
        assert_relative_eq!(coefficient, 1.0, max_relative = 1e-12);
        let Some(MatrixPenalty::Scaled { coefficient: lo, .. }) = v.lower else { panic!() };
        assert_relative_eq!(lo, 1.0 / 4f64.powf(1.0 / 6.0), max_relative = 1e-12);

        let any = MatrixNormSpec::SchattenP(Exponent::INF);
        let induced = MatrixUncertaintySet::induced_maps(MatrixNormSpec::SchattenP(Exponent::ONE), any.clone(), 1.0, 3, 3).unwrap();
        assert!(matrix_classify(&any, &induced).unwrap().is_exact());

        let cw = MatrixUncertaintySet::column_wise(vec![Exponent::Finite(3.0); 3], 1.0, 2).unwrap();
        assert!(matrix_classify(&MatrixNormSpec::FrobeniusP(Exponent::ONE), &cw).unwrap().is_exact());
        assert!(!matrix_classify(&MatrixNormSpec::FrobeniusP(Exponent::INF), &cw).unwrap().is_exact());
    }

    fn quick() -> MatrixSolverOptions {
        MatrixSolverOptions {
            audit_directions: 300,
            ..MatrixSolverOptions::completion()
        }
    }

    #[test]
    fn completion_without_penalty_interpolates() {
        let mask = completion_mask();
        let y = sampling::normal_matrix(&mut sampling::rng(1), 3, 3);
        let prob = CompletionProblem::new(y, mask.clone(), 0.0).unwrap();
        let r = mc_nuclear_solve_with(&prob, quick()).unwrap();
        assert_eq!(r.objective, 0.0);
        assert_eq!(r.x, prob.y);
        assert_eq!(r.x[(0, 1)], 0.0);
    }

    #[test]
    fn completion_above_threshold_is_zero() {
        let mask = completion_mask();
        let y = sampling::normal_matrix(&mut sampling::rng(2), 3, 3);
        let prob = CompletionProblem::new(y, mask, 0.0).unwrap();
        let thr = spectral_norm(&prob.y).unwrap() / prob.y.frobenius();
        let prob = CompletionProblem { lambda: thr * 1.01, ..prob };
        let r = mc_nuclear_solve_with(&prob, quick()).unwrap();
        assert_eq!(r.x, Matrix::zeros(3, 3));
        assert_relative_eq!(r.objective, prob.y.frobenius());
        assert!(r.audit.passed);
    }

    #[test]
    fn completion_rank_one_matches_scalar_problem() {
        let u = [0.6, 0.8, 0.0];
        let v = [1.0 / 2f64.sqrt(), -1.0 / 2f64.sqrt()];
        let s = 2.5;
        let y = Matrix::outer(&u, &v).scale(s);
        for lambda in [0.2, 0.7] {
            let prob = CompletionProblem::new(y.clone(), Mask::full(3, 2), lambda).unwrap();
            let r = mc_nuclear_solve_with(&prob, quick()).unwrap();
            // min_t |s − t| + λ|t| on a grid fine enough to pin the kink.
            let scalar = (0..=25_000)
                .map(|i| {
                    let t = i as f64 * 1e-4;
                    (s - t).abs() + lambda * t
                })
                .fold(f64::INFINITY, f64::min);
            assert!((r.objective - scalar).abs() <= 1e-6, "{} vs {scalar}", r.objective);
            assert!(r.converged);
            assert!(r.audit.passed);
        }
    }

    #[test]
    fn completion_general_instance_certified() {
        let mut rng = sampling::rng(44);
        let y = sampling::normal_matrix(&mut rng, 4, 4);
        let prob = CompletionProblem::new(
            y,
            Mask::new(4, 4, (0..16).map(|k| k % 3 != 1).collect()).unwrap(),
            0.3,
        )
        .unwrap();
        let r = mc_nuclear_solve_with(&prob, quick()).unwrap();
        assert!(r.converged, "{r:?}");
        assert!(r.duality_gap <= 1e-8);
        assert!(r.audit.passed);
    }

    #[test]
    fn pca_examples() {
        let y = Matrix::diag(&[3.0, 1.0]);
        let x = pca_truncate(&y, 1).unwrap();
        assert_relative_eq!(x[(0, 0)], 3.0, epsilon = 1e-12);
        assert!(x[(1, 1)].abs() < 1e-12 && x[(0, 1)].abs() < 1e-12);

        let mut rng = sampling::rng(7);
        let y = sampling::normal_matrix(&mut rng, 4, 3);
        let full = pca_truncate(&y, 3).unwrap();
        assert!(full.sub(&y).unwrap().max_abs() < 1e-12);
        let x2 = pca_truncate(&y, 2).unwrap();
        let s = singular_values_of(&y);
        assert_relative_eq!(y.sub(&x2).unwrap().frobenius(), s[2], max_relative = 1e-10);
        assert!(pca_truncate(&y, 4).is_err());
    }

    fn singular_values_of(a: &Matrix) -> Vec<f64> {
        svd(a).unwrap().singular_values
    }

    fn quick_rpca() -> MatrixSolverOptions {
        MatrixSolverOptions {
            audit_directions: 300,
            ..MatrixSolverOptions::robust_pca()
        }
    }

    #[test]
    fn robust_pca_examples() {
        let mut rng = sampling::rng(4);
        let y = sampling::normal_matrix(&mut rng, 3, 4);
        let r = robust_pca_solve_with(&y, 1e6, quick_rpca()).unwrap();
        assert_eq!(r.x, Matrix::zeros(3, 4));
        assert_relative_eq!(r.objective, vec_norm(y.as_slice(), Exponent::ONE));

        let r = robust_pca_solve_with(&Matrix::zeros(2, 2), 0.5, quick_rpca()).unwrap();
        assert_eq!(r.objective, 0.0);

        let c = -1.7;
        let r = robust_pca_solve_with(&m(&[&[c]]), 0.4, quick_rpca()).unwrap();
        assert_relative_eq!(r.x[(0, 0)], c, epsilon = 1e-8);
        assert_relative_eq!(r.objective, 0.4 * c.abs(), epsilon = 1e-8);
        assert!(robust_pca_solve(&y, 0.0).is_err());
    }

    #[test]
    fn robust_pca_general_instance_certified() {
        let mut rng = sampling::rng(21);
        let mut y = pca_truncate(&sampling::normal_matrix(&mut rng, 5, 5), 1).unwrap();
        y[(1, 3)] += 6.0;
        y[(4, 0)] -= 5.0;
        let r = robust_pca_solve_with(&y, 0.5, quick_rpca()).unwrap();
        assert!(r.audit.passed, "{:?}", r.audit);
        assert!(r.duality_gap <= 1e-6 * (1.0 + r.objective), "{}", r.duality_gap);
    }

    #[test]
    fn characterization_cases() {
        let f1 = robust_pca_characterization_check(&MatrixNormSpec::FrobeniusP(Exponent::ONE), 50, 1).unwrap();
        assert!(f1.holds);
        assert!(f1.max_mismatch < 1e-9);
        for loss in [
            MatrixNormSpec::FrobeniusP(Exponent::TWO),
            MatrixNormSpec::SchattenP(Exponent::INF),
        ] {
            let c = robust_pca_characterization_check(&loss, 10_000, 1).unwrap();
            assert!(!c.holds);
            let ce = c.counterexample.unwrap();
            assert!(ce.mismatch > 1e-6);
        }
    }

    #[test]
    fn rank_membership_examples() {
        let mut rng = sampling::rng(30);
        let loss = MatrixNormSpec::ProjectedF2(completion_mask());
        let h = MatrixNormSpec::SchattenP(Exponent::ONE);
        let q = sampling::normal_matrix(&mut rng, 3, 3);
        let d = sampling::normal_matrix(&mut rng, 3, 3);
        let unit = LinearMatrixMap::rank_one(q.clone(), d.clone(), 1.0).unwrap();
        let norm = induced_map_norm(&unit, &h, &loss, 0).unwrap().0;
        let lambda = 1.0;
        let inside = unit.scaled(0.8 * lambda / norm);
        let outside = unit.scaled(1.1 * lambda / norm);
        for (map, expect) in [
            (inside, Membership::Member),
            (outside, Membership::NonMember),
            (LinearMatrixMap::zero(3, 3), Membership::Member),
        ] {
            let rank = rank_set_membership(&map, Exponent::Finite(3.0), lambda, &loss, 2).unwrap();
            let induced = induced_membership(&map, &h, &loss, lambda, 2).unwrap();
            assert_eq!(rank.verdict, expect);
            assert_eq!(induced.verdict, expect);
        }
        let big = LinearMatrixMap::zero(5, 2);
        assert!(matches!(
            rank_set_membership(&big, Exponent::TWO, 1.0, &MatrixNormSpec::FrobeniusP(Exponent::TWO), 0),
            Err(Error::ScaleCap(_))
        ));
    }
}
