//! `δ_m(a, b) = max { ‖u‖_a : ‖u‖_b = 1, u ∈ ℝ^m }`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::norms::{dual_witness, vec_norm, Exponent};
use crate::sampling;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscrepancyResult {
    pub value: f64,
    /// `‖witness‖_b = 1` and `‖witness‖_a = value`.
    pub witness: Vec<f64>,
    pub exact: bool,
}

/// Closed form: `m^{1/a - 1/b}` with the uniform witness when `a < b`,
/// otherwise 1 with witness `e₁`.
pub fn delta(m: usize, a: Exponent, b: Exponent) -> Result<DiscrepancyResult> {
    if m == 0 {
        return Err(Error::InvalidArgument("discrepancy needs m >= 1".into()));
    }
    if a.less_than(b) {
        let value = (m as f64).powf(a.recip() - b.recip());
        let entry = (m as f64).powf(-b.recip());
        Ok(DiscrepancyResult {
            value,
            witness: vec![entry; m],
            exact: true,
        })
    } else {
        let mut witness = vec![0.0; m];
        witness[0] = 1.0;
        Ok(DiscrepancyResult {
            value: 1.0,
            witness,
            exact: true,
        })
    }
}

/// Value of [`delta`]; `m = 0` is treated as 1.
pub fn delta_value(m: usize, a: Exponent, b: Exponent) -> f64 {
    delta(m.max(1), a, b).map(|d| d.value).unwrap_or(1.0)
}

#[derive(Clone, Debug)]
pub struct OracleRun {
    pub value: f64,
    /// Local maximizers reached from each start, normalized to `‖u‖_b = 1`.
    pub maximizers: Vec<Vec<f64>>,
}

/// Numeric maximization of `‖u‖_a` over the `b`-sphere: dense random
/// sampling plus conditional-gradient ascent from 64 random starts. Does not
/// consult the closed form.
pub fn delta_oracle(m: usize, a: Exponent, b: Exponent) -> f64 {
    delta_oracle_run(m, a, b, 0).value
}

pub fn delta_oracle_run(m: usize, a: Exponent, b: Exponent, seed: u64) -> OracleRun {
    if m <= 1 {
        return OracleRun {
            value: 1.0,
            maximizers: vec![vec![1.0; m]],
        };
    }
    let mut rng = sampling::rng(seed);
    let on_sphere = |u: Vec<f64>| {
        let s = vec_norm(&u, b);
        u.into_iter().map(|x| x / s).collect::<Vec<_>>()
    };
    let mut best = 0.0_f64;
    for _ in 0..4096 {
        let u = on_sphere(sampling::normal_vec(&mut rng, m));
        best = best.max(vec_norm(&u, a));
    }
    let mut maximizers = Vec::new();
    for _ in 0..64 {
        let mut u = on_sphere(sampling::normal_vec(&mut rng, m));
        let mut val = vec_norm(&u, a);
        for _ in 0..5000 {
            // gradient of ‖·‖_a at u, then the b-ball point maximizing it
            let Ok(g) = dual_witness(&u, a.dual()) else { break };
            let Ok(next) = dual_witness(&g, b) else { break };
            let nv = vec_norm(&next, a);
            let moved = next
                .iter()
                .zip(&u)
                .fold(0.0_f64, |d, (x, y)| d.max((x - y).abs()));
            u = next;
            val = val.max(nv);
            if moved < 1e-15 {
                break;
            }
        }
        best = best.max(val);
        maximizers.push(u);
    }
    let keep: Vec<Vec<f64>> = maximizers
        .into_iter()
        .filter(|u| vec_norm(u, a) >= best * (1.0 - 1e-6))
        .collect();
    OracleRun {
        value: best,
        maximizers: keep,
    }
}

/// Whether `δ_m(p*, q*) = δ_m(q, p)` to `1e-9`; true for every input.
pub fn delta_duality_check(m: usize, p: Exponent, q: Exponent) -> bool {
    let lhs = delta_value(m, p.dual(), q.dual());
    let rhs = delta_value(m, q, p);
    (lhs - rhs).abs() <= 1e-9 * lhs.max(rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn e(p: f64) -> Exponent {
        Exponent::new(p).unwrap()
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(delta(5, e(2.0), e(2.0)).unwrap().value, 1.0);
        assert_eq!(delta(4, Exponent::INF, e(2.0)).unwrap().value, 1.0);
        assert_relative_eq!(delta(3, e(1.0), e(2.0)).unwrap().value, 3f64.sqrt(), max_relative = 1e-15);
        assert_eq!(delta(2, e(1.0), Exponent::INF).unwrap().value, 2.0);
        assert!(delta(0, e(1.0), e(2.0)).is_err());
    }

    #[test]
    fn witness_attains_value() {
        for (a, b) in [(1.0, 2.0), (1.5, 3.0), (3.0, 1.0), (2.0, f64::INFINITY)] {
            let d = delta(4, e(a), e(b)).unwrap();
            assert_relative_eq!(vec_norm(&d.witness, e(b)), 1.0, max_relative = 1e-12);
            assert_relative_eq!(vec_norm(&d.witness, e(a)), d.value, max_relative = 1e-12);
        }
    }

    #[test]
    fn oracle_examples() {
        assert_relative_eq!(delta_oracle(2, e(1.0), Exponent::INF), 2.0, max_relative = 1e-9);
        let want = 3f64.powf(1.0 / 1.5 - 1.0 / 3.0);
        assert_relative_eq!(delta_oracle(3, e(1.5), e(3.0)), want, max_relative = 1e-6);
        assert_eq!(delta_oracle(1, e(1.5), e(7.0)), 1.0);
    }

    #[test]
    fn duality_examples() {
        assert!(delta_duality_check(4, e(2.0), e(1.0)));
        assert!(delta_duality_check(2, e(3.0), e(3.0)));
        assert!(delta_duality_check(5, e(1.2), e(4.0)));
    }
}
