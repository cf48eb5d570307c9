//! One function per subcommand.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use serde_json::{json, Value};

use robreg::discrepancy::{delta, delta_duality_check, delta_oracle_run};
use robreg::lqs::{lqs_adversary_audit, lqs_mio, lqs_oracle, robust_grid_oracle, LqsProblem, MioOptions};
use robreg::matrix_reg::{
    descent_audit, mc_nuclear_solve_with, pca_truncate, robust_pca_solve_with,
    CompletionProblem, MatrixSolveReport, MatrixSolverOptions,
};
use robreg::norms::{dual_witness, mat_norm, vec_norm, Mask};
use robreg::numerics::nelder_mead;
use robreg::robustify::{
    adversarial_witness, classify_equivalence, probe_trial, summarize,
    worst_case_loss, EquivalenceVerdict, Regularizer, UncertaintySet, MEMBERSHIP_TOL,
};
use robreg::sampling;
use robreg::solvers::{robust_objective_audit, solve_regularized, solve_robust, RegressionProblem, SolveReport};
use robreg::{Error, Exponent, Matrix, MatrixNormSpec};

use crate::problem::{self, Task};
use crate::report::{num, par_map, value, CmdResult, Failure, Outcome, Settings};

#[derive(Args, Debug)]
pub struct CheckEquivArgs {
    /// Loss exponent p (a number >= 1 or `inf`).
    #[arg(long)]
    pub loss: Exponent,
    /// Uncertainty set: induced:h,g | frob:q | schatten:q | rowwise:q.
    #[arg(long)]
    pub set: String,
    /// Rows of the perturbation (samples).
    #[arg(long, default_value_t = 4)]
    pub m: usize,
    /// Columns of the perturbation (features).
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    /// Radius of the set.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
}

#[derive(Args, Debug)]
pub struct FileArgs {
    /// Problem file (JSON).
    pub path: PathBuf,
    /// Sample this many adversaries and compare with the reported worst case.
    #[arg(long, value_name = "N")]
    pub audit: Option<usize>,
    /// Cross-check against a brute-force or derivative-free search.
    #[arg(long)]
    pub oracle: bool,
}

#[derive(Args, Debug)]
pub struct DeltaArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub a: Exponent,
    #[arg(long)]
    pub b: Exponent,
    /// Compare with numeric maximization over the b-sphere.
    #[arg(long)]
    pub oracle: bool,
}

#[derive(Args, Debug)]
pub struct DualArgs {
    #[arg(long)]
    pub p: Exponent,
    /// Comma-separated entries.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub vector: Vec<f64>,
}

fn verdict_line(v: &EquivalenceVerdict) -> String {
    let reg = &v.regularizer;
    match v.status {
        robreg::robustify::Status::Exact => {
            format!("Exact: worst case = loss + {} ‖β‖_{}", num(reg.coefficient), reg.exponent)
        }
        robreg::robustify::Status::BoundsOnly => format!(
            "BoundsOnly: loss + {} ‖β‖_{e} <= worst case <= loss + {} ‖β‖_{e}",
            num(v.lower_coefficient),
            num(v.upper_coefficient),
            e = reg.exponent
        ),
    }
}

pub(crate) struct EqualityTrial {
    pub gap: f64,
    pub witness_gap: f64,
    pub witness_inside: bool,
    pub exact: bool,
}

/// Worst case and witness against `‖z‖_p + h̄(β)` on one random instance.
pub(crate) fn equality_trial(
    p: Exponent,
    set: &UncertaintySet,
    verdict: &EquivalenceVerdict,
    seed: u64,
    index: u64,
) -> robreg::Result<EqualityTrial> {
    let mut rng = sampling::trial_rng(seed, index);
    let z = sampling::normal_vec(&mut rng, set.rows);
    let beta = sampling::normal_vec(&mut rng, set.cols);
    let target = vec_norm(&z, p) + verdict.regularizer.eval(&beta);
    let wc = worst_case_loss(&z, &beta, set, p)?;
    let w = adversarial_witness(&z, &beta, set, p)?;
    Ok(EqualityTrial {
        gap: (wc.value - target).abs(),
        witness_gap: (w.attained_value - target).abs(),
        witness_inside: w.norm <= set.radius * (1.0 + MEMBERSHIP_TOL) + MEMBERSHIP_TOL,
        exact: wc.exact,
    })
}

pub fn check_equiv(args: &CheckEquivArgs, s: &Settings) -> CmdResult {
    let shape = problem::parse_set(&args.set)?;
    if args.trials == 0 {
        return Err(Failure::Usage("--trials must be at least 1".into()));
    }
    let seed = s.seed_or(None);
    let set = UncertaintySet::new(shape, args.lambda, args.m, args.n)?;
    let p = args.loss;
    let verdict = classify_equivalence(p, &set)?;
    let mut text = format!("loss ℓ_{p}, set {} (λ = {}, {}×{})\n", set.shape, num(args.lambda), args.m, args.n);
    writeln!(text, "{}", verdict_line(&verdict)).unwrap();
    let (result, ok) = if verdict.is_exact() {
        let trials = par_map(args.trials, s.workers, |i| equality_trial(p, &set, &verdict, seed, i as u64));
        let trials: Vec<EqualityTrial> = trials.into_iter().collect::<Result<_, _>>()?;
        let gaps: Vec<f64> = trials.iter().map(|t| t.gap).collect();
        let max_gap = gaps.iter().cloned().fold(0.0, f64::max);
        let max_witness_gap = trials.iter().map(|t| t.witness_gap).fold(0.0, f64::max);
        let outside = trials.iter().filter(|t| !t.witness_inside).count();
        let inexact = trials.iter().filter(|t| !t.exact).count();
        let ok = max_gap <= s.tol && max_witness_gap <= s.tol && outside == 0 && inexact == 0;
        writeln!(
            text,
            "equality probe: {} trials, max gap {}, max witness gap {}, witnesses outside the set {}",
            args.trials,
            num(max_gap),
            num(max_witness_gap),
            outside
        )
        .unwrap();
        (
            json!({
                "probe": "equality",
                "trials": args.trials,
                "gaps": gaps,
                "max_gap": max_gap,
                "max_witness_gap": max_witness_gap,
                "witnesses_outside": outside,
                "inexact_evaluations": inexact,
            }),
            ok,
        )
    } else {
        let outcomes = par_map(args.trials, s.workers, |i| probe_trial(p, &set, seed, i as u64));
        let outcomes: Vec<_> = outcomes.into_iter().collect::<Result<_, _>>()?;
        let report = summarize(&outcomes);
        let ok = report.fraction == 1.0 && report.sandwich_violations == 0;
        writeln!(
            text,
            "strictness probe: {} trials, strict fraction {}, gap range [{}, {}], sandwich violations {}",
            report.trials,
            num(report.fraction),
            num(report.min_gap),
            num(report.max_gap),
            report.sandwich_violations
        )
        .unwrap();
        let gaps: Vec<f64> = outcomes.iter().map(|o| o.gap).collect();
        (
            json!({
                "probe": "strictness",
                "trials": report.trials,
                "gaps": gaps,
                "summary": value(&report),
            }),
            ok,
        )
    };
    writeln!(text, "{}", if ok { "matches the classification" } else { "DOES NOT match the classification" }).unwrap();
    let mut result = result;
    result["verdict"] = value(&verdict);
    result["set"] = json!(set.shape.to_string());
    result["loss_p"] = value(&p);
    result["matches_prediction"] = json!(ok);
    Ok(Outcome { text, result, ok, seed })
}

fn oracle_minimum(f: &dyn Fn(&[f64]) -> f64, starts: &[Vec<f64>]) -> (Vec<f64>, f64) {
    let mut best: Option<(Vec<f64>, f64)> = None;
    for start in starts {
        let scale = start.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let mut x = start.clone();
        let mut fx = f(&x);
        for round in 0..4 {
            let step = (0.25 * (1.0 + scale)) / 4f64.powi(round);
            let (nx, nf) = nelder_mead(f, &x, step, 4000 * (x.len() + 1));
            if nf < fx {
                x = nx;
                fx = nf;
            }
        }
        if best.as_ref().is_none_or(|(_, b)| fx < *b) {
            best = Some((x, fx));
        }
    }
    best.expect("at least one start")
}

const NM_ORACLE_MAX_N: usize = 10;

fn solve_summary(r: &SolveReport) -> Value {
    json!({
        "beta": r.beta,
        "objective": r.objective,
        "bracket": r.bracket.map(|(a, b)| json!([a, b])),
        "iterations": r.iterations,
        "converged": r.converged,
        "duality_gap": r.duality_gap,
        "certificate": r.certificate,
    })
}

pub fn solve(args: &FileArgs, s: &Settings) -> CmdResult {
    let loaded = problem::load(&args.path)?;
    loaded.expect_task(&[Task::Regression], "solve")?;
    let f = &loaded.file;
    let x = loaded.matrix(f.x.as_ref(), "X")?;
    let y = loaded.vector(f.y.as_ref(), "y")?;
    let p = f.loss_p.unwrap_or(Exponent::TWO);
    let seed = s.seed_or(f.seed);
    let prob = RegressionProblem::new(x, y, p)?;
    let (m, n) = prob.x.shape();

    let mut text = String::new();
    let mut result = json!({"task": "regression", "loss_p": value(&p), "m": m, "n": n});
    let mut ok = true;

    let (report, set, reg) = match (&f.uncertainty, &f.regularizer) {
        (Some(_), Some(_)) => {
            return Err(Failure::Usage("give either uncertainty or regularizer, not both".into()));
        }
        (Some(u), None) => {
            let set = UncertaintySet::new(problem::set_shape(u)?, u.lambda, m, n)?;
            let verdict = classify_equivalence(p, &set)?;
            writeln!(text, "robust regression over {} (λ = {})", set.shape, num(u.lambda)).unwrap();
            writeln!(text, "{}", verdict_line(&verdict)).unwrap();
            result["mode"] = json!("robust");
            result["set"] = json!(set.shape.to_string());
            result["lambda"] = json!(u.lambda);
            result["verdict"] = value(&verdict);
            let report = solve_robust(&prob, &set)?;
            (report, Some((set, verdict)), None)
        }
        (None, reg) => {
            let reg = match reg {
                Some(r) => Regularizer {
                    coefficient: r.coefficient,
                    exponent: r.exponent,
                },
                None => Regularizer {
                    coefficient: 0.0,
                    exponent: Exponent::TWO,
                },
            };
            if reg.coefficient == 0.0 {
                writeln!(text, "nominal regression").unwrap();
                result["mode"] = json!("nominal");
            } else {
                writeln!(text, "regularized regression, penalty {} ‖β‖_{}", num(reg.coefficient), reg.exponent).unwrap();
                result["mode"] = json!("regularized");
            }
            result["regularizer"] = value(&reg);
            let report = solve_regularized(&prob, reg.coefficient, reg.exponent)?;
            (report, None, Some(reg))
        }
    };

    writeln!(text, "objective {}", num(report.objective)).unwrap();
    if let Some((lo, hi)) = report.bracket {
        writeln!(text, "bound problems: lower {}, upper {}", num(lo), num(hi)).unwrap();
    }
    writeln!(
        text,
        "β = [{}]",
        report.beta.iter().map(|b| num(*b)).collect::<Vec<_>>().join(", ")
    )
    .unwrap();
    writeln!(
        text,
        "iterations {}, converged {}, duality gap {}, certificate {}",
        report.iterations,
        report.converged,
        num(report.duality_gap),
        num(report.certificate)
    )
    .unwrap();
    if !report.converged {
        ok = false;
        writeln!(text, "solver stopped before reaching its gap tolerance").unwrap();
    }
    result["solution"] = solve_summary(&report);

    if let Some((set, _)) = &set {
        let z = prob.residual(&report.beta);
        if let Ok(w) = adversarial_witness(&z, &report.beta, set, p) {
            result["witness"] = json!({"norm": w.norm, "attained_value": w.attained_value});
            writeln!(text, "adversary: norm {}, attained loss {}", num(w.norm), num(w.attained_value)).unwrap();
        }
    }

    if let Some(trials) = args.audit {
        let Some((set, _)) = &set else {
            return Err(Failure::Usage("--audit needs an uncertainty set in the problem file".into()));
        };
        let audit = robust_objective_audit(&report.beta, &prob, set, trials, seed, true)?;
        let slack = 1e-9 * (1.0 + audit.upper_bound.abs());
        let mut passed = audit.sampled_max <= audit.upper_bound + slack;
        if audit.exact {
            passed &= audit.sampled_max <= audit.analytic + slack;
        }
        writeln!(
            text,
            "audit: {} sampled adversaries, max loss {}, analytic {}, upper bound {}: {}",
            audit.trials,
            num(audit.sampled_max),
            num(audit.analytic),
            num(audit.upper_bound),
            if passed { "ok" } else { "EXCEEDED" }
        )
        .unwrap();
        ok &= passed;
        result["audit"] = value(&audit);
        result["audit"]["passed"] = json!(passed);
    }

    if args.oracle {
        if n > NM_ORACLE_MAX_N {
            writeln!(text, "oracle skipped: n = {n} exceeds {NM_ORACLE_MAX_N}").unwrap();
            result["oracle"] = json!({"skipped": true});
        } else {
            let (objective, target): (Box<dyn Fn(&[f64]) -> f64>, f64) = match (&set, reg) {
                (Some((set, verdict)), _) if verdict.is_exact() => {
                    let set = set.clone();
                    let prob = prob.clone();
                    (
                        Box::new(move |b: &[f64]| {
                            worst_case_loss(&prob.residual(b), b, &set, p)
                                .map(|w| w.value)
                                .unwrap_or(f64::INFINITY)
                        }),
                        report.objective,
                    )
                }
                (Some((_, verdict)), _) => {
                    let reg = verdict.regularizer;
                    let prob = prob.clone();
                    let upper = report.bracket.map(|(_, hi)| hi).unwrap_or(report.objective);
                    (Box::new(move |b: &[f64]| prob.objective(&reg, b)), upper)
                }
                (None, Some(reg)) => {
                    let prob = prob.clone();
                    (Box::new(move |b: &[f64]| prob.objective(&reg, b)), report.objective)
                }
                (None, None) => unreachable!("either a set or a regularizer is present"),
            };
            let starts = vec![report.beta.clone(), vec![0.0; n]];
            let (beta_nm, best) = oracle_minimum(objective.as_ref(), &starts);
            let passed = best >= target - 1e-6 * (1.0 + target.abs());
            writeln!(
                text,
                "oracle: Nelder–Mead minimum {} against {}: {}",
                num(best),
                num(target),
                if passed { "ok" } else { "BETTER POINT FOUND" }
            )
            .unwrap();
            ok &= passed;
            result["oracle"] = json!({"method": "nelder_mead", "value": best, "beta": beta_nm, "target": target, "passed": passed});
        }
    }
    Ok(Outcome { text, result, ok, seed })
}

pub fn lqs(args: &FileArgs, s: &Settings) -> CmdResult {
    let loaded = problem::load(&args.path)?;
    loaded.expect_task(&[Task::Lqs], "lqs")?;
    let f = &loaded.file;
    let x = loaded.matrix(f.x.as_ref(), "X")?;
    let y = loaded.vector(f.y.as_ref(), "y")?;
    let q = f.q.ok_or_else(|| Failure::Usage("missing field q".into()))?;
    let robust = f.uncertainty.as_ref().map(problem::lqs_robust).transpose()?;
    let seed = s.seed_or(f.seed);
    let prob = LqsProblem::new(x, y, q, robust)?;

    let mut text = String::new();
    match &robust {
        Some(r) => writeln!(
            text,
            "robust LQS, q = {q}, φ = {:?}, ψ = ℓ_{}, λ = {}",
            r.phi,
            r.psi,
            num(r.lambda)
        )
        .unwrap(),
        None => writeln!(text, "LQS, q = {q}").unwrap(),
    }
    let res = lqs_mio(&prob, MioOptions::default())?;
    writeln!(
        text,
        "value {}, lower bound {}, gap {}, nodes {}, proved {}",
        num(res.value),
        num(res.lower_bound),
        num(res.proved_gap),
        res.nodes,
        res.proved
    )
    .unwrap();
    writeln!(text, "β = [{}]", res.beta.iter().map(|b| num(*b)).collect::<Vec<_>>().join(", ")).unwrap();
    let mut ok = res.proved;
    let mut result = json!({
        "task": "lqs",
        "q": q,
        "robust": value(&robust),
        "solution": value(&res),
    });

    if let Some(trials) = args.audit {
        let audit = lqs_adversary_audit(&prob, &res.beta, trials, seed)?;
        let passed = audit.sampled_max <= audit.reported + 1e-9 * (1.0 + audit.reported.abs());
        writeln!(
            text,
            "audit: {} sampled adversaries, max order statistic {}, reported {}: {}",
            audit.trials,
            num(audit.sampled_max),
            num(audit.reported),
            if passed { "ok" } else { "EXCEEDED" }
        )
        .unwrap();
        ok &= passed;
        result["audit"] = value(&audit);
        result["audit"]["passed"] = json!(passed);
    }

    if args.oracle {
        let (oracle, tol, method) = if robust.is_none() {
            (lqs_oracle(&prob), 1e-6, "subset_enumeration")
        } else {
            (robust_grid_oracle(&prob), 1e-4, "grid_search")
        };
        match oracle {
            Ok(sol) => {
                let passed = (sol.value - res.value).abs() <= tol * (1.0 + sol.value.abs());
                writeln!(
                    text,
                    "oracle ({method}): {} against {}: {}",
                    num(sol.value),
                    num(res.value),
                    if passed { "ok" } else { "MISMATCH" }
                )
                .unwrap();
                ok &= passed;
                result["oracle"] = json!({"method": method, "value": sol.value, "beta": sol.beta, "passed": passed});
            }
            Err(Error::ScaleCap(why)) => {
                writeln!(text, "oracle skipped: {why}").unwrap();
                result["oracle"] = json!({"method": method, "skipped": why});
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(Outcome { text, result, ok, seed })
}

fn rows_of(a: &Matrix) -> Vec<Vec<f64>> {
    (0..a.rows()).map(|i| a.row(i).to_vec()).collect()
}

fn matrix_summary(r: &MatrixSolveReport) -> Value {
    json!({
        "X": rows_of(&r.x),
        "objective": r.objective,
        "iterations": r.iterations,
        "converged": r.converged,
        "duality_gap": r.duality_gap,
        "descent_audit": value(&r.audit),
    })
}

fn solve_lines(text: &mut String, r: &MatrixSolveReport) {
    writeln!(
        text,
        "objective {}, iterations {}, converged {}, duality gap {}",
        num(r.objective),
        r.iterations,
        r.converged,
        num(r.duality_gap)
    )
    .unwrap();
    writeln!(
        text,
        "descent audit: {} directions, best relative improvement {}: {}",
        r.audit.directions,
        num(r.audit.max_relative_improvement),
        if r.audit.passed { "ok" } else { "DESCENT FOUND" }
    )
    .unwrap();
}

const PCA_CANDIDATES: usize = 200;

pub fn matrix(args: &FileArgs, s: &Settings) -> CmdResult {
    let loaded = problem::load(&args.path)?;
    let task = loaded.expect_task(&[Task::Completion, Task::Pca, Task::RobustPca], "matrix")?;
    let f = &loaded.file;
    let y = loaded.matrix(f.y_matrix.as_ref(), "Y")?;
    let seed = s.seed_or(f.seed);
    let (m, n) = y.shape();
    let mut text = String::new();
    let mut result = json!({"task": task.name(), "m": m, "n": n});
    let ok;
    match task {
        Task::Completion => {
            let lambda = loaded.lambda()?;
            let mask = match &f.mask {
                Some(_) => {
                    let mm = loaded.matrix(f.mask.as_ref(), "mask")?;
                    if mm.shape() != (m, n) {
                        return Err(Failure::Usage(format!("mask is {:?} but Y is {m}x{n}", mm.shape())));
                    }
                    Mask::new(m, n, mm.as_slice().iter().map(|&v| v != 0.0).collect())?
                }
                None => Mask::full(m, n),
            };
            let prob = CompletionProblem::new(y, mask, lambda)?;
            let mut opts = MatrixSolverOptions::completion();
            opts.seed = seed;
            if let Some(d) = args.audit {
                opts.audit_directions = d;
            }
            writeln!(text, "nuclear norm completion, λ = {}", num(lambda)).unwrap();
            let r = mc_nuclear_solve_with(&prob, opts)?;
            solve_lines(&mut text, &r);
            ok = r.converged && r.audit.passed;
            result["lambda"] = json!(lambda);
            result["solution"] = matrix_summary(&r);
        }
        Task::RobustPca => {
            let lambda = loaded.lambda()?;
            let mut opts = MatrixSolverOptions::robust_pca();
            opts.seed = seed;
            if let Some(d) = args.audit {
                opts.audit_directions = d;
            }
            writeln!(text, "robust PCA, λ = {}", num(lambda)).unwrap();
            let r = robust_pca_solve_with(&y, lambda, opts)?;
            solve_lines(&mut text, &r);
            ok = r.converged && r.audit.passed;
            result["lambda"] = json!(lambda);
            result["solution"] = matrix_summary(&r);
        }
        Task::Pca => {
            let k = f.k.ok_or_else(|| Failure::Usage("missing field k".into()))?;
            let x = pca_truncate(&y, k)?;
            let resid = y.sub(&x)?;
            let f2 = resid.frobenius();
            let spec = mat_norm(&resid, &MatrixNormSpec::SchattenP(Exponent::INF))?;
            writeln!(text, "rank-{k} PCA: ‖Y − X‖_F = {}, ‖Y − X‖_σ∞ = {}", num(f2), num(spec)).unwrap();
            result["k"] = json!(k);
            result["solution"] = json!({"X": rows_of(&x), "residual_frobenius": f2, "residual_spectral": spec});
            let mut passed = true;
            if let Some(d) = args.audit {
                let obj = |c: &Matrix| Ok(y.sub(c)?.frobenius());
                let audit = descent_audit(obj, &x, d, seed)?;
                writeln!(
                    text,
                    "descent audit (Frobenius residual, rank ignored): best relative improvement {}",
                    num(audit.max_relative_improvement)
                )
                .unwrap();
                result["descent_audit"] = value(&audit);
            }
            if args.oracle {
                let (best_f2, best_spec) = pca_candidates(&y, k, seed)?;
                passed = best_f2 >= f2 - 1e-10 * (1.0 + f2) && best_spec >= spec - 1e-10 * (1.0 + spec);
                writeln!(
                    text,
                    "oracle: best of {PCA_CANDIDATES} rank-{k} candidates gives {} and {}: {}",
                    num(best_f2),
                    num(best_spec),
                    if passed { "ok" } else { "BETTER CANDIDATE FOUND" }
                )
                .unwrap();
                result["oracle"] = json!({
                    "candidates": PCA_CANDIDATES,
                    "best_frobenius": best_f2,
                    "best_spectral": best_spec,
                    "passed": passed,
                });
            }
            ok = passed;
        }
        _ => unreachable!("task checked above"),
    }
    Ok(Outcome { text, result, ok, seed })
}

/// Smallest residuals over random rank-`k` matrices: truncations of
/// perturbed data at several noise levels and plain random products.
fn pca_candidates(y: &Matrix, k: usize, seed: u64) -> Result<(f64, f64), Failure> {
    let (m, n) = y.shape();
    let scale = (y.frobenius() / ((m * n) as f64).sqrt()).max(1e-12);
    let spec = MatrixNormSpec::SchattenP(Exponent::INF);
    let mut best = (f64::INFINITY, f64::INFINITY);
    for c in 0..PCA_CANDIDATES {
        let mut rng = sampling::trial_rng(seed, c as u64);
        let cand = if k == 0 {
            Matrix::zeros(m, n)
        } else if c % 5 == 4 {
            let a = sampling::normal_matrix(&mut rng, m, k).scale(scale);
            let b = sampling::normal_matrix(&mut rng, n, k);
            a.matmul(&b.transpose())?
        } else {
            let eps = scale * 10f64.powi(-((c % 4) as i32));
            let noise = sampling::normal_matrix(&mut rng, m, n).scale(eps);
            pca_truncate(&y.add(&noise)?, k)?
        };
        let r = y.sub(&cand)?;
        best.0 = best.0.min(r.frobenius());
        best.1 = best.1.min(mat_norm(&r, &spec)?);
    }
    Ok(best)
}

pub fn delta_cmd(args: &DeltaArgs, s: &Settings) -> CmdResult {
    let seed = s.seed_or(None);
    let d = delta(args.m, args.a, args.b)?;
    let duality = delta_duality_check(args.m, args.a, args.b);
    let mut text = format!(
        "δ_{}(ℓ_{}, ℓ_{}) = {}\nwitness [{}]\n",
        args.m,
        args.a,
        args.b,
        num(d.value),
        d.witness.iter().map(|v| num(*v)).collect::<Vec<_>>().join(", ")
    );
    writeln!(text, "duality identity: {}", if duality { "holds" } else { "FAILS" }).unwrap();
    let mut ok = duality;
    let mut result = json!({
        "m": args.m,
        "a": value(&args.a),
        "b": value(&args.b),
        "delta": value(&d),
        "duality_identity": duality,
    });
    if args.oracle {
        let run = delta_oracle_run(args.m, args.a, args.b, seed);
        let passed = (run.value - d.value).abs() <= 1e-6 * d.value;
        writeln!(
            text,
            "oracle: {} ({})",
            num(run.value),
            if passed { "agrees" } else { "DISAGREES" }
        )
        .unwrap();
        ok &= passed;
        result["oracle"] = json!({"value": run.value, "passed": passed});
    }
    Ok(Outcome { text, result, ok, seed })
}

pub fn dual_cmd(args: &DualArgs, s: &Settings) -> CmdResult {
    let p = args.p;
    let v = &args.vector;
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Failure::Usage("vector entries must be finite".into()));
    }
    let pd = p.dual();
    let norm_p = vec_norm(v, p);
    let norm_dual = vec_norm(v, pd);
    let w = dual_witness(v, p)?;
    let pairing: f64 = w.iter().zip(v).map(|(a, b)| a * b).sum();
    let unit = vec_norm(&w, p);
    let ok = (pairing - norm_dual).abs() <= s.tol * (1.0 + norm_dual) && (unit - 1.0).abs() <= s.tol;
    let mut text = format!("p = {p}, p* = {pd}\n‖v‖_p = {}\n‖v‖_p* = {}\n", num(norm_p), num(norm_dual));
    writeln!(
        text,
        "maximizer w = [{}] with ‖w‖_p = {} and wᵀv = {}",
        w.iter().map(|x| num(*x)).collect::<Vec<_>>().join(", "),
        num(unit),
        num(pairing)
    )
    .unwrap();
    let result = json!({
        "p": value(&p),
        "dual_exponent": value(&pd),
        "norm": norm_p,
        "dual_norm": norm_dual,
        "maximizer": w,
        "pairing": pairing,
    });
    Ok(Outcome {
        text,
        result,
        ok,
        seed: s.seed_or(None),
    })
}
