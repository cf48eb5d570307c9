use proptest::prelude::*;
use robreg::discrepancy::{delta, delta_value};
use robreg::norms::{dual_witness, mat_norm, project_ball, vec_norm};
use robreg::numerics::{dot, Matrix};
use robreg::robustify::{ball_sup, classify_equivalence, worst_case_loss, UncertaintySet};
use robreg::{Exponent, MatrixNormSpec};

fn exponent() -> impl Strategy<Value = Exponent> {
    prop_oneof![
        Just(Exponent::ONE),
        Just(Exponent::TWO),
        Just(Exponent::INF),
        (1.1f64..6.0).prop_map(Exponent::Finite),
    ]
}

fn vector(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, len)
}

fn nonzero(v: &[f64]) -> bool {
    v.iter().any(|x| x.abs() > 1e-3)
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    vector(rows * cols).prop_map(move |d| Matrix::from_vec(rows, cols, d).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn holder_inequality_is_tight_at_the_dual_witness(
        v in vector(5), beta in vector(5), q in exponent(),
    ) {
        prop_assume!(nonzero(&beta));
        let qs = q.dual();
        prop_assert!(dot(&v, &beta).abs() <= vec_norm(&v, q) * vec_norm(&beta, qs) * (1.0 + 1e-12) + 1e-12);
        let w = dual_witness(&beta, q).unwrap();
        prop_assert!((vec_norm(&w, q) - 1.0).abs() < 1e-12);
        let target = vec_norm(&beta, qs);
        prop_assert!((dot(&w, &beta) - target).abs() < 1e-10 * (1.0 + target));
    }

    #[test]
    fn norms_decrease_in_the_exponent(v in vector(6), a in exponent(), b in exponent()) {
        let (lo, hi) = if a.less_than(b) { (a, b) } else { (b, a) };
        prop_assert!(vec_norm(&v, hi) <= vec_norm(&v, lo) * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn discrepancy_sandwiches_every_vector(v in vector(4), a in exponent(), b in exponent()) {
        prop_assume!(nonzero(&v));
        let d = delta_value(4, a, b);
        prop_assert!(vec_norm(&v, a) <= d * vec_norm(&v, b) * (1.0 + 1e-12));
        let w = delta(4, a, b).unwrap().witness;
        prop_assert!((vec_norm(&w, b) - 1.0).abs() < 1e-12);
        prop_assert!((vec_norm(&w, a) - d).abs() < 1e-12 * d);
    }

    #[test]
    fn discrepancy_is_invariant_under_sign_flips_and_permutations(
        v in vector(4), a in exponent(), b in exponent(), shift in 0usize..4,
    ) {
        prop_assume!(nonzero(&v));
        let mut w: Vec<f64> = v.iter().map(|x| -x).collect();
        w.rotate_left(shift);
        let r = |u: &[f64]| vec_norm(u, a) / vec_norm(u, b);
        prop_assert!((r(&v) - r(&w)).abs() < 1e-12 * r(&v));
    }

    #[test]
    fn projection_lands_in_the_ball_and_is_idempotent(
        v in vector(5), q in exponent(), radius in 0.1f64..3.0,
    ) {
        let p = project_ball(&v, q, radius);
        prop_assert!(vec_norm(&p, q) <= radius * (1.0 + 1e-9));
        let pp = project_ball(&p, q, radius);
        let moved: f64 = p.iter().zip(&pp).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(moved < 1e-8 * (1.0 + radius));
        if vec_norm(&v, q) <= radius {
            prop_assert_eq!(&p, &v);
        }
    }

    #[test]
    fn schatten_two_equals_frobenius_two(a in matrix(3, 4)) {
        let s = mat_norm(&a, &MatrixNormSpec::SchattenP(Exponent::TWO)).unwrap();
        let f = mat_norm(&a, &MatrixNormSpec::FrobeniusP(Exponent::TWO)).unwrap();
        prop_assert!((s - f).abs() < 1e-12 * (1.0 + f));
    }

    #[test]
    fn matrix_norms_obey_the_triangle_inequality(
        a in matrix(3, 3), b in matrix(3, 3), p in exponent(), schatten in any::<bool>(),
    ) {
        let spec = if schatten { MatrixNormSpec::SchattenP(p) } else { MatrixNormSpec::FrobeniusP(p) };
        let n = |m: &Matrix| mat_norm(m, &spec).unwrap();
        let s = a.add(&b).unwrap();
        prop_assert!(n(&s) <= (n(&a) + n(&b)) * (1.0 + 1e-10) + 1e-10);
    }

    #[test]
    fn ball_sup_dominates_the_center_and_grows_with_the_radius(
        z in vector(3), p in exponent(), r in exponent(), rho in 0.0f64..2.0, extra in 0.0f64..1.0,
    ) {
        let a = ball_sup(&z, rho, p, r).unwrap();
        let b = ball_sup(&z, rho + extra, p, r).unwrap();
        prop_assert!(vec_norm(&a.u, r) <= rho * (1.0 + 1e-9) + 1e-12);
        let attained: Vec<f64> = z.iter().zip(&a.u).map(|(x, y)| x + y).collect();
        prop_assert!((vec_norm(&attained, p) - a.value).abs() < 1e-9 * (1.0 + a.value));
        prop_assert!(a.value >= vec_norm(&z, p) * (1.0 - 1e-12));
        if a.exact && b.exact {
            prop_assert!(b.value >= a.value * (1.0 - 1e-12));
        }
        // triangle inequality caps every regime
        let cap = vec_norm(&z, p) + rho * delta_value(3, p, r);
        prop_assert!(a.value <= cap * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn worst_case_sits_inside_the_regularizer_bracket(
        z in vector(3), beta in vector(2), p in exponent(), q in exponent(), lambda in 0.01f64..2.0,
    ) {
        prop_assume!(nonzero(&beta));
        let set = UncertaintySet::new(MatrixNormSpec::SchattenP(q), lambda, 3, 2).unwrap();
        let verdict = classify_equivalence(p, &set).unwrap();
        let wc = worst_case_loss(&z, &beta, &set, p).unwrap();
        let zp = vec_norm(&z, p);
        let lo = zp + verdict.lower().eval(&beta);
        let hi = zp + verdict.regularizer.eval(&beta);
        prop_assert!(wc.value <= hi * (1.0 + 1e-9) + 1e-12);
        if wc.exact {
            prop_assert!(wc.value >= lo * (1.0 - 1e-9) - 1e-12);
        }
        if verdict.is_exact() {
            prop_assert!((wc.value - hi).abs() < 1e-9 * (1.0 + hi));
        }
        if let Some(w) = wc.witness {
            prop_assert!(set.contains(&w.perturbation).unwrap());
        }
    }

    #[test]
    fn worst_case_is_positively_homogeneous(
        z in vector(3), beta in vector(3), p in exponent(), q in exponent(), t in 0.1f64..10.0,
    ) {
        prop_assume!(nonzero(&beta));
        let set = UncertaintySet::new(MatrixNormSpec::FrobeniusP(q), 0.7, 3, 3).unwrap();
        let a = worst_case_loss(&z, &beta, &set, p).unwrap();
        prop_assume!(a.exact);
        let zt: Vec<f64> = z.iter().map(|x| t * x).collect();
        let bt: Vec<f64> = beta.iter().map(|x| t * x).collect();
        let b = worst_case_loss(&zt, &bt, &set, p).unwrap();
        prop_assert!((b.value - t * a.value).abs() < 1e-9 * (1.0 + t * a.value));
    }
}
