use rand::Rng;
use robreg::numerics::{solve_linear, solve_lp, svd, LpOutcome, LpProblem, Matrix, Sense};
use robreg::sampling;

/// Brute force over every vertex of `{x >= 0, A x <= b}`: each choice of `n`
/// active rows (constraints or coordinate planes) that is nonsingular and
/// feasible.
fn vertex_minimum(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Option<f64> {
    let n = c.len();
    let mut rows: Vec<(Vec<f64>, f64)> = a.iter().cloned().zip(b.iter().copied()).collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        rows.push((e, 0.0));
    }
    let total = rows.len();
    let mut best: Option<f64> = None;
    let mut pick = vec![0usize; n];
    fn next(pick: &mut [usize], total: usize) -> bool {
        let n = pick.len();
        let mut i = n;
        while i > 0 {
            i -= 1;
            if pick[i] < total - n + i {
                pick[i] += 1;
                for k in i + 1..n {
                    pick[k] = pick[k - 1] + 1;
                }
                return true;
            }
        }
        false
    }
    for (i, p) in pick.iter_mut().enumerate() {
        *p = i;
    }
    loop {
        let mut m = Matrix::zeros(n, n);
        let mut rhs = vec![0.0; n];
        for (r, &k) in pick.iter().enumerate() {
            for j in 0..n {
                m[(r, j)] = rows[k].0[j];
            }
            rhs[r] = rows[k].1;
        }
        if let Ok(Some(x)) = solve_linear(&m, &rhs) {
            let feasible = x.iter().all(|&v| v >= -1e-9)
                && a.iter().zip(b).all(|(row, &bi)| {
                    row.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() <= bi + 1e-9
                });
            if feasible {
                let v: f64 = c.iter().zip(&x).map(|(p, q)| p * q).sum();
                best = Some(best.map_or(v, |b: f64| b.min(v)));
            }
        }
        if !next(&mut pick, total) {
            break;
        }
    }
    best
}

#[test]
fn simplex_matches_vertex_enumeration() {
    let mut rng = sampling::rng(41);
    for _ in 0..60 {
        let n = rng.random_range(2..=3);
        let k = rng.random_range(2..=4);
        let c: Vec<f64> = (0..n).map(|_| sampling::uniform(&mut rng, -1.0, 1.0)).collect();
        // positive rows and right-hand sides keep the polytope bounded and nonempty
        let a: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..n).map(|_| sampling::uniform(&mut rng, 0.1, 2.0)).collect())
            .collect();
        let b: Vec<f64> = (0..k).map(|_| sampling::uniform(&mut rng, 0.5, 3.0)).collect();
        let mut lp = LpProblem::new(c.clone());
        for (row, &bi) in a.iter().zip(&b) {
            lp.add_constraint(row.clone(), Sense::Le, bi);
        }
        let want = vertex_minimum(&c, &a, &b).expect("origin is a vertex");
        match solve_lp(&lp).unwrap() {
            LpOutcome::Optimal { x, value } => {
                assert!((value - want).abs() < 1e-9 * (1.0 + want.abs()), "{value} vs {want}");
                assert!(lp.max_violation(&x) < 1e-9);
            }
            other => panic!("expected optimum, got {other:?}"),
        }
    }
}

#[test]
fn infeasible_and_unbounded_are_reported() {
    let mut lp = LpProblem::new(vec![1.0, 1.0]);
    lp.add_constraint(vec![1.0, 1.0], Sense::Le, -1.0);
    assert_eq!(solve_lp(&lp).unwrap(), LpOutcome::Infeasible);

    let mut lp = LpProblem::new(vec![-1.0, 0.0]);
    lp.add_constraint(vec![0.0, 1.0], Sense::Le, 1.0);
    assert_eq!(solve_lp(&lp).unwrap(), LpOutcome::Unbounded);
}

fn orthonormal_columns(q: &Matrix) -> f64 {
    let g = q.transpose().matmul(q).unwrap();
    g.sub(&Matrix::identity(q.cols())).unwrap().max_abs()
}

#[test]
fn svd_round_trip_on_random_matrices() {
    let mut rng = sampling::rng(7);
    for _ in 0..100 {
        let m = rng.random_range(1..=7);
        let n = rng.random_range(1..=7);
        let a = sampling::normal_matrix(&mut rng, m, n);
        let d = svd(&a).unwrap();
        let scale = 1.0 + a.max_abs();
        assert!(d.reconstruct().sub(&a).unwrap().max_abs() < 1e-12 * scale);
        assert!(orthonormal_columns(&d.u) < 1e-12);
        assert!(orthonormal_columns(&d.v) < 1e-12);
        assert!(d.singular_values.windows(2).all(|w| w[0] >= w[1]));
        assert!(d.singular_values.iter().all(|&s| s >= 0.0));
        let energy: f64 = d.singular_values.iter().map(|s| s * s).sum();
        assert!((energy.sqrt() - a.frobenius()).abs() < 1e-12 * scale);
    }
}

#[test]
fn svd_of_low_rank_products() {
    let mut rng = sampling::rng(8);
    for trial in 0..100 {
        let (m, n) = if trial % 2 == 0 { (5, 3) } else { (3, 5) };
        let r = 1 + trial % 2;
        let a = sampling::normal_matrix(&mut rng, m, r)
            .matmul(&sampling::normal_matrix(&mut rng, r, n))
            .unwrap();
        let d = svd(&a).unwrap();
        assert!(d.singular_values[r] <= 1e-12 * d.singular_values[0]);
        assert!(d.reconstruct().sub(&a).unwrap().max_abs() < 1e-12 * (1.0 + a.max_abs()));
    }
}
