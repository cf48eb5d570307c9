//! Equivalence tables with every cell checked on random instances.

use std::fmt::Write as _;

use clap::ValueEnum;
use serde_json::{json, Value};

use robreg::matrix_reg::{
    induced_map_norm, induced_map_norm_upper, matrix_classify, matrix_worst_case, LinearMatrixMap,
    MatrixUncertaintySet,
};
use robreg::norms::mat_norm;
use robreg::robustify::{
    classify_equivalence, probe_trial, summarize, Status, UncertaintySet, MEMBERSHIP_TOL, STRICT_GAP,
};
use robreg::sampling;
use robreg::{Exponent, MatrixNormSpec};

use crate::commands::equality_trial;
use crate::report::{par_map, CmdResult, Failure, Outcome, Settings};

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum TableKind {
    Linreg,
    Matrix,
}

const GRID: [Exponent; 5] = [
    Exponent::Finite(1.0),
    Exponent::Finite(1.5),
    Exponent::Finite(2.0),
    Exponent::Finite(3.0),
    Exponent::Infinity,
];

struct Row {
    loss: &'static str,
    set: &'static str,
    penalty: &'static str,
    condition: &'static str,
}

struct Cell {
    status: Status,
    verified: bool,
    detail: Value,
}

impl Cell {
    fn mark(&self) -> String {
        let sym = match self.status {
            Status::Exact => "=",
            Status::BoundsOnly => "<",
        };
        format!("{sym} {}", if self.verified { "✓" } else { "✗ FAILED" })
    }
}

const LINREG_M: usize = 3;
const LINREG_N: usize = 2;
const MATRIX_M: usize = 2;
const MATRIX_N: usize = 3;
const SAMPLED_MAPS: usize = 8;

fn linreg_rows() -> Vec<(Row, fn(Exponent) -> MatrixNormSpec)> {
    vec![
        (
            Row {
                loss: "seminorm g = ℓ_p",
                set: "U(h, g), h = ℓ_1.5",
                penalty: "λ h(β)",
                condition: "always",
            },
            |p| MatrixNormSpec::Induced {
                h: Exponent::Finite(1.5),
                g: p,
            },
        ),
        (
            Row {
                loss: "ℓ_p",
                set: "σ_q ball, q = 3",
                penalty: "λ δ_m(p, 2) ‖β‖_2",
                condition: "p ∈ {1, 2, ∞}",
            },
            |_| MatrixNormSpec::SchattenP(Exponent::Finite(3.0)),
        ),
        (
            Row {
                loss: "ℓ_p",
                set: "F_q ball, q = 2",
                penalty: "λ δ_m(p, q) ‖β‖_q*",
                condition: "p = q or p ∈ {1, ∞}",
            },
            |_| MatrixNormSpec::FrobeniusP(Exponent::TWO),
        ),
        (
            Row {
                loss: "ℓ_p",
                set: "U(q, r), q = 1.5, r = 2",
                penalty: "λ δ_m(p, r) ‖β‖_q",
                condition: "p = r or p ∈ {1, ∞}",
            },
            |_| MatrixNormSpec::Induced {
                h: Exponent::Finite(1.5),
                g: Exponent::TWO,
            },
        ),
        (
            Row {
                loss: "ℓ_p",
                set: "rows ‖δ_i‖_q ≤ λ, q = 2",
                penalty: "λ m^(1/p) ‖β‖_q*",
                condition: "p ∈ {1, ∞}",
            },
            |_| MatrixNormSpec::RowWise(Exponent::TWO),
        ),
    ]
}

fn cell_seed(seed: u64, row: usize, col: usize) -> u64 {
    seed.wrapping_mul(1_000_003).wrapping_add((row * GRID.len() + col) as u64 * 7919)
}

fn linreg_cell(shape: MatrixNormSpec, p: Exponent, trials: usize, seed: u64, tol: f64) -> robreg::Result<Cell> {
    let set = UncertaintySet::new(shape, 1.0, LINREG_M, LINREG_N)?;
    let verdict = classify_equivalence(p, &set)?;
    if verdict.is_exact() {
        let mut max_gap = 0.0_f64;
        let mut all_ok = true;
        for i in 0..trials {
            let t = equality_trial(p, &set, &verdict, seed, i as u64)?;
            max_gap = max_gap.max(t.gap).max(t.witness_gap);
            all_ok &= t.witness_inside && t.exact;
        }
        Ok(Cell {
            status: verdict.status,
            verified: all_ok && max_gap <= tol,
            detail: json!({"trials": trials, "max_gap": max_gap}),
        })
    } else {
        let outcomes = (0..trials)
            .map(|i| probe_trial(p, &set, seed, i as u64))
            .collect::<robreg::Result<Vec<_>>>()?;
        let rep = summarize(&outcomes);
        Ok(Cell {
            status: verdict.status,
            verified: rep.strict > 0 && rep.sandwich_violations == 0,
            detail: json!({
                "trials": trials,
                "strict_fraction": rep.fraction,
                "max_gap": rep.max_gap,
                "sandwich_violations": rep.sandwich_violations,
            }),
        })
    }
}

fn matrix_rows() -> Vec<(Row, fn(Exponent) -> robreg::Result<MatrixUncertaintySet>)> {
    vec![
        (
            Row {
                loss: "seminorm g = F_p",
                set: "maps with g(Δ(X)) ≤ λ h(X), h = σ_1",
                penalty: "λ h(X)",
                condition: "always",
            },
            |p| {
                MatrixUncertaintySet::induced_maps(
                    MatrixNormSpec::SchattenP(Exponent::ONE),
                    MatrixNormSpec::FrobeniusP(p),
                    1.0,
                    MATRIX_M,
                    MATRIX_N,
                )
            },
        ),
        (
            Row {
                loss: "F_p",
                set: "σ_q ball on the representation, q = 3",
                penalty: "λ δ_mn(p, 2) ‖X‖_F2",
                condition: "p ∈ {1, 2, ∞}",
            },
            |_| {
                MatrixUncertaintySet::representation_ball(
                    MatrixNormSpec::SchattenP(Exponent::Finite(3.0)),
                    1.0,
                    MATRIX_M,
                    MATRIX_N,
                )
            },
        ),
        (
            Row {
                loss: "F_p",
                set: "F_q ball on the representation, q = 2",
                penalty: "λ δ_mn(p, q) ‖X‖_Fq*",
                condition: "p = q or p ∈ {1, ∞}",
            },
            |_| MatrixUncertaintySet::representation_ball(MatrixNormSpec::FrobeniusP(Exponent::TWO), 1.0, MATRIX_M, MATRIX_N),
        ),
        (
            Row {
                loss: "F_p",
                set: "column-wise, ‖Δ^(j)‖_F2 ≤ λ",
                penalty: "λ ‖(δ_m(p, 2) ‖X_j‖_2)_j‖_p",
                condition: "p = 1",
            },
            |_| MatrixUncertaintySet::column_wise(vec![Exponent::TWO; MATRIX_N], 1.0, MATRIX_M),
        ),
    ]
}

/// Random maps inside an induced set: rank-one maps at their exact norm and
/// dense maps scaled by a guaranteed upper bound on theirs.
fn sampled_map(
    h: &MatrixNormSpec,
    g: &MatrixNormSpec,
    lambda: f64,
    rng: &mut sampling::Rng64,
    k: usize,
) -> robreg::Result<LinearMatrixMap> {
    let (m, n) = (MATRIX_M, MATRIX_N);
    if k % 2 == 0 {
        let q = sampling::normal_matrix(rng, m, n);
        let d = sampling::normal_matrix(rng, m, n);
        let map = LinearMatrixMap::rank_one(q, d, 1.0)?;
        let (norm, _) = induced_map_norm(&map, h, g, 0)?;
        Ok(map.scaled(lambda / norm))
    } else {
        let rep = sampling::normal_matrix(rng, m * n, m * n);
        let map = LinearMatrixMap::from_representation(m, n, &rep)?;
        let upper = induced_map_norm_upper(&map, h, g)?;
        Ok(map.scaled(lambda / upper))
    }
}

fn matrix_cell(set: MatrixUncertaintySet, p: Exponent, trials: usize, seed: u64, tol: f64) -> robreg::Result<Cell> {
    let loss = MatrixNormSpec::FrobeniusP(p);
    let verdict = matrix_classify(&loss, &set)?;
    let mut max_gap = 0.0_f64;
    let mut min_gap = f64::INFINITY;
    let mut strict = 0usize;
    let mut violations = 0usize;
    for i in 0..trials {
        let mut rng = sampling::trial_rng(seed, i as u64);
        let y = sampling::normal_matrix(&mut rng, set.rows, set.cols);
        let x = sampling::normal_matrix(&mut rng, set.rows, set.cols);
        let z = y.sub(&x)?;
        let base = mat_norm(&z, &loss)?;
        let upper = base + verdict.penalty.eval(&x)?;
        let wc = matrix_worst_case(&y, &x, &set, &loss)?;
        let slack = 1e-9 * (1.0 + upper);
        if let Some(w) = &wc.witness {
            if (w.attained_value - wc.value).abs() > tol * (1.0 + wc.value) && wc.exact {
                violations += 1;
            }
            if w.norm > set.lambda * (1.0 + MEMBERSHIP_TOL) + MEMBERSHIP_TOL {
                violations += 1;
            }
        }
        if let robreg::matrix_reg::MatrixSetKind::InducedMaps { h, g } = &set.kind {
            for k in 0..SAMPLED_MAPS {
                let map = sampled_map(h, g, set.lambda, &mut rng, k)?;
                let hit = mat_norm(&z.sub(&map.apply(&x)?)?, &loss)?;
                if hit > wc.value + slack {
                    violations += 1;
                }
            }
        }
        if verdict.is_exact() {
            if !wc.exact {
                violations += 1;
            }
            let gap = (wc.value - upper).abs();
            max_gap = max_gap.max(gap);
            if gap > tol * (1.0 + upper) {
                violations += 1;
            }
        } else {
            let gap = upper - wc.value;
            max_gap = max_gap.max(gap);
            min_gap = min_gap.min(gap);
            if gap > STRICT_GAP {
                strict += 1;
            }
            let lower = match &verdict.lower {
                Some(l) => base + l.eval(&x)?,
                None => base,
            };
            if wc.value < lower - slack || wc.value > upper + slack {
                violations += 1;
            }
        }
    }
    let verified = violations == 0 && (verdict.is_exact() || strict > 0);
    let detail = if verdict.is_exact() {
        json!({"trials": trials, "max_gap": max_gap, "violations": violations})
    } else {
        json!({
            "trials": trials,
            "strict_fraction": strict as f64 / trials as f64,
            "min_gap": min_gap,
            "max_gap": max_gap,
            "violations": violations,
        })
    };
    Ok(Cell {
        status: verdict.status,
        verified,
        detail,
    })
}

fn render(title: &str, rows: &[Row], cells: &[Vec<Cell>], header_set: &str) -> String {
    let mut out = format!("## {title}\n\n");
    write!(out, "| Loss | {header_set} | Penalty | Equivalent when |").unwrap();
    for p in GRID {
        write!(out, " p = {p} |").unwrap();
    }
    out.push('\n');
    out.push_str("|---|---|---|---|");
    for _ in GRID {
        out.push_str(":---:|");
    }
    out.push('\n');
    for (row, cs) in rows.iter().zip(cells) {
        write!(out, "| {} | {} | {} | {} |", row.loss, row.set, row.penalty, row.condition).unwrap();
        for c in cs {
            write!(out, " {} |", c.mark()).unwrap();
        }
        out.push('\n');
    }
    out.push_str("\n`=` worst case equals loss plus penalty on every instance; `<` a strictly smaller worst case was found and the bounds held. ✓ means the sampled instances confirmed the entry.\n");
    out
}

pub fn table(which: TableKind, trials: usize, s: &Settings) -> CmdResult {
    if trials == 0 {
        return Err(Failure::Usage("--trials must be at least 1".into()));
    }
    let seed = s.seed_or(None);
    let tol = s.tol;
    let (title, header, rows, cells): (&str, &str, Vec<Row>, Vec<robreg::Result<Cell>>) = match which {
        TableKind::Linreg => {
            let specs = linreg_rows();
            let cells = par_map(specs.len() * GRID.len(), s.workers, |k| {
                let (r, c) = (k / GRID.len(), k % GRID.len());
                linreg_cell((specs[r].1)(GRID[c]), GRID[c], trials, cell_seed(seed, r, c), tol)
            });
            (
                "Linear regression: worst case over Δ of ‖y − (X + Δ)β‖_p",
                "Uncertainty set",
                specs.into_iter().map(|(r, _)| r).collect(),
                cells,
            )
        }
        TableKind::Matrix => {
            let specs = matrix_rows();
            let cells = par_map(specs.len() * GRID.len(), s.workers, |k| {
                let (r, c) = (k / GRID.len(), k % GRID.len());
                let set = (specs[r].1)(GRID[c])?;
                matrix_cell(set, GRID[c], trials, cell_seed(seed, r, c), tol)
            });
            (
                "Matrix estimation: worst case over linear maps Δ of ‖Y − X − Δ(X)‖",
                "Maps Δ",
                specs.into_iter().map(|(r, _)| r).collect(),
                cells,
            )
        }
    };
    let cells: Vec<Cell> = cells.into_iter().collect::<robreg::Result<_>>()?;
    let grid: Vec<Vec<Cell>> = {
        let mut it = cells.into_iter();
        rows.iter().map(|_| it.by_ref().take(GRID.len()).collect()).collect()
    };
    let ok = grid.iter().flatten().all(|c| c.verified);
    let text = render(title, &rows, &grid, header);
    let json_rows: Vec<Value> = rows
        .iter()
        .zip(&grid)
        .map(|(r, cs)| {
            json!({
                "loss": r.loss,
                "set": r.set,
                "penalty": r.penalty,
                "condition": r.condition,
                "cells": GRID.iter().zip(cs).map(|(p, c)| json!({
                    "p": p.to_string(),
                    "status": format!("{:?}", c.status),
                    "verified": c.verified,
                    "detail": c.detail,
                })).collect::<Vec<_>>(),
            })
        })
        .collect();
    let result = json!({
        "table": match which { TableKind::Linreg => "linreg", TableKind::Matrix => "matrix" },
        "trials_per_cell": trials,
        "rows": json_rows,
        "markdown": text,
    });
    Ok(Outcome { text, result, ok, seed })
}
