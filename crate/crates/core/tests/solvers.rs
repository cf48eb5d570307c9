use rand::Rng;
use robreg::norms::vec_norm;
use robreg::numerics::{nelder_mead, Matrix};
use robreg::robustify::{classify_equivalence, worst_case_loss, Regularizer, UncertaintySet};
use robreg::sampling;
use robreg::solvers::{
    lasso_squared, ridge_squared, robust_objective_audit, solve_regularized, solve_robust, RegressionProblem,
};
use robreg::{Exponent, MatrixNormSpec};

fn instance(seed: u64, m: usize, n: usize, p: Exponent) -> RegressionProblem {
    let mut rng = sampling::rng(seed);
    let x = sampling::normal_matrix(&mut rng, m, n);
    let y = sampling::normal_vec(&mut rng, m);
    RegressionProblem::new(x, y, p).unwrap()
}

fn oracle_minimum(prob: &RegressionProblem, reg: &Regularizer) -> f64 {
    let f = |b: &[f64]| prob.objective(reg, b);
    let n = prob.x.cols();
    let (mut best, mut val) = nelder_mead(&f, &vec![0.0; n], 1.0, 20_000);
    for _ in 0..4 {
        let (b, v) = nelder_mead(&f, &best, 0.1, 20_000);
        best = b;
        val = v;
    }
    val
}

#[test]
fn exact_robust_problems_coincide_with_their_regularized_form() {
    let shapes = [
        (Exponent::TWO, MatrixNormSpec::SchattenP(Exponent::Finite(3.0))),
        (Exponent::Finite(1.5), MatrixNormSpec::Induced { h: Exponent::Finite(1.5), g: Exponent::Finite(1.5) }),
        (Exponent::ONE, MatrixNormSpec::FrobeniusP(Exponent::TWO)),
        (Exponent::INF, MatrixNormSpec::RowWise(Exponent::TWO)),
    ];
    for (k, (p, shape)) in shapes.into_iter().enumerate() {
        let prob = instance(100 + k as u64, 6, 3, p);
        let set = UncertaintySet::new(shape, 0.4, 6, 3).unwrap();
        let verdict = classify_equivalence(p, &set).unwrap();
        assert!(verdict.is_exact());
        let robust = solve_robust(&prob, &set).unwrap();
        let reg = solve_regularized(&prob, verdict.regularizer.coefficient, verdict.regularizer.exponent).unwrap();
        assert!(robust.converged && reg.converged);
        assert!((robust.objective - reg.objective).abs() < 1e-7 * (1.0 + reg.objective));
        let wc = worst_case_loss(&prob.residual(&robust.beta), &robust.beta, &set, p).unwrap();
        assert!((wc.value - robust.objective).abs() < 1e-7 * (1.0 + wc.value));
        let audit = robust_objective_audit(&robust.beta, &prob, &set, 300, 5, true).unwrap();
        assert!(audit.sampled_max <= audit.analytic * (1.0 + 1e-9));
        assert!((audit.sampled_max - audit.analytic).abs() < 1e-9 * (1.0 + audit.analytic));
    }
}

#[test]
fn regularized_solver_matches_a_derivative_free_search() {
    for (k, (p, h)) in [
        (Exponent::TWO, Exponent::TWO),
        (Exponent::ONE, Exponent::ONE),
        (Exponent::INF, Exponent::Finite(3.0)),
        (Exponent::Finite(1.5), Exponent::INF),
    ]
    .into_iter()
    .enumerate()
    {
        let prob = instance(200 + k as u64, 5, 2, p);
        let reg = Regularizer { coefficient: 0.3, exponent: h };
        let sol = solve_regularized(&prob, reg.coefficient, reg.exponent).unwrap();
        let oracle = oracle_minimum(&prob, &reg);
        assert!(sol.objective <= oracle + 1e-7 * (1.0 + oracle), "{} vs {oracle}", sol.objective);
        assert!(sol.objective >= oracle - 1e-5 * (1.0 + oracle));
    }
}

#[test]
fn bounds_only_solutions_respect_their_bracket() {
    let p = Exponent::Finite(3.0);
    let prob = instance(300, 5, 3, p);
    let set = UncertaintySet::new(MatrixNormSpec::SchattenP(Exponent::TWO), 0.5, 5, 3).unwrap();
    assert!(!classify_equivalence(p, &set).unwrap().is_exact());
    let sol = solve_robust(&prob, &set).unwrap();
    let (lo, hi) = sol.bracket.expect("bounds-only carries a bracket");
    assert!(lo <= hi * (1.0 + 1e-9));
    assert!(sol.objective >= lo * (1.0 - 1e-7));
    assert!(sol.objective <= hi * (1.0 + 1e-7));
}

#[test]
fn scaling_the_data_scales_the_optimal_value() {
    let prob = instance(400, 6, 3, Exponent::TWO);
    let base = solve_regularized(&prob, 0.5, Exponent::ONE).unwrap();
    let t = 3.5;
    let scaled = RegressionProblem::new(prob.x.scale(t), prob.y.iter().map(|v| t * v).collect(), Exponent::TWO).unwrap();
    let s = solve_regularized(&scaled, 0.5 * t, Exponent::ONE).unwrap();
    assert!((s.objective - t * base.objective).abs() < 1e-7 * (1.0 + t * base.objective));
}

#[test]
fn ridge_path_shrinks_and_satisfies_the_normal_equations() {
    let mut rng = sampling::rng(500);
    let x = sampling::normal_matrix(&mut rng, 8, 4);
    let y = sampling::normal_vec(&mut rng, 8);
    let mut last = f64::INFINITY;
    for k in 0..12 {
        let lambda = 10f64.powf(-3.0 + 0.5 * k as f64);
        let beta = ridge_squared(&x, &y, lambda).unwrap();
        let r: Vec<f64> = x.mul_vec(&beta).unwrap().iter().zip(&y).map(|(a, b)| a - b).collect();
        let grad: Vec<f64> = x.tr_mul_vec(&r).unwrap().iter().zip(&beta).map(|(g, b)| g + lambda * b).collect();
        assert!(vec_norm(&grad, Exponent::INF) < 1e-10 * (1.0 + lambda));
        let size = vec_norm(&beta, Exponent::TWO);
        assert!(size <= last * (1.0 + 1e-12));
        last = size;
    }
}

#[test]
fn lasso_satisfies_its_optimality_conditions() {
    let mut rng = sampling::rng(600);
    for _ in 0..20 {
        let x = sampling::normal_matrix(&mut rng, 7, 4);
        let y = sampling::normal_vec(&mut rng, 7);
        let lambda = rng.random_range(0.1..4.0);
        let beta = lasso_squared(&x, &y, lambda).unwrap();
        let r: Vec<f64> = y.iter().zip(x.mul_vec(&beta).unwrap()).map(|(a, b)| a - b).collect();
        let corr = x.tr_mul_vec(&r).unwrap();
        for (c, b) in corr.iter().zip(&beta) {
            if *b == 0.0 {
                assert!(c.abs() <= lambda / 2.0 + 1e-9);
            } else {
                assert!((2.0 * c - lambda * b.signum()).abs() < 1e-9 * (1.0 + lambda));
            }
        }
    }
}

#[test]
fn lasso_scalar_case_is_soft_thresholding() {
    let x = Matrix::from_rows(&[vec![1.0]]).unwrap();
    for (y, lambda, want) in [(3.0, 2.0, 2.0), (-3.0, 2.0, -2.0), (0.5, 2.0, 0.0)] {
        let beta = lasso_squared(&x, &[y], lambda).unwrap();
        assert!((beta[0] - want).abs() < 1e-12);
    }
}
