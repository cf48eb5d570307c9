//! Derivative-free local minimization.

/// Minimizes `f` from `start` by Nelder–Mead with an initial simplex of
/// side `step`.
pub fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, start: &[f64], step: f64, max_evals: usize) -> (Vec<f64>, f64) {
    let n = start.len();
    let mut pts: Vec<Vec<f64>> = vec![start.to_vec()];
    for j in 0..n {
        let mut p = start.to_vec();
        p[j] += step;
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| f(p)).collect();
    let mut evals = n + 1;
    while evals < max_evals {
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = idx.iter().map(|&i| pts[i].clone()).collect();
        vals = idx.iter().map(|&i| vals[i]).collect();
        let size = pts[1..]
            .iter()
            .map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        let scale = pts[0].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if size < 1e-13 * (1.0 + scale) {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| pts[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            (0..n).map(|j| centroid[j] + t * (pts[n][j] - centroid[j])).collect()
        };
        let refl = along(-1.0);
        let fr = f(&refl);
        evals += 1;
        if fr < vals[0] {
            let exp = along(-2.0);
            let fe = f(&exp);
            evals += 1;
            if fe < fr {
                pts[n] = exp;
                vals[n] = fe;
            } else {
                pts[n] = refl;
                vals[n] = fr;
            }
        } else if fr < vals[n - 1] {
            pts[n] = refl;
            vals[n] = fr;
        } else {
            let (con, fc) = if fr < vals[n] {
                let c = along(-0.5);
                let v = f(&c);
                (c, v)
            } else {
                let c = along(0.5);
                let v = f(&c);
                (c, v)
            };
            evals += 1;
            if fc < vals[n].min(fr) {
                pts[n] = con;
                vals[n] = fc;
            } else {
                for k in 1..=n {
                    pts[k] = (0..n).map(|j| 0.5 * (pts[0][j] + pts[k][j])).collect();
                    vals[k] = f(&pts[k]);
                }
                evals += n;
            }
        }
    }
    let k = (0..=n).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).expect("nonempty");
    (pts[k].clone(), vals[k])
}
