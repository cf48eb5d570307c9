//! Problem files and set descriptors.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use robreg::lqs::{Phi, RobustSpec};
use robreg::{Exponent, Matrix, MatrixNormSpec};

use crate::report::Failure;

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Regression,
    Lqs,
    Completion,
    Pca,
    RobustPca,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Regression => "regression",
            Task::Lqs => "lqs",
            Task::Completion => "completion",
            Task::Pca => "pca",
            Task::RobustPca => "robust_pca",
        }
    }
}

/// Inline row-major rows, or a CSV path relative to the problem file.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum MatrixSource {
    Rows(Vec<Vec<f64>>),
    Csv(String),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UncertaintySpec {
    /// `induced:h,g`, `frob:q`, `schatten:q`, `rowwise:q`, or just the kind
    /// with the exponents given separately.
    pub shape: Option<String>,
    pub lambda: f64,
    pub q: Option<Exponent>,
    pub r: Option<Exponent>,
    pub h: Option<Exponent>,
    pub g: Option<Exponent>,
    pub psi: Option<Exponent>,
    pub phi: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularizerSpec {
    pub coefficient: f64,
    pub exponent: Exponent,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub task: Task,
    #[serde(rename = "X")]
    pub x: Option<MatrixSource>,
    #[serde(rename = "Y")]
    pub y_matrix: Option<MatrixSource>,
    pub y: Option<Vec<f64>>,
    pub loss_p: Option<Exponent>,
    pub uncertainty: Option<UncertaintySpec>,
    pub regularizer: Option<RegularizerSpec>,
    pub q: Option<usize>,
    pub k: Option<usize>,
    pub mask: Option<MatrixSource>,
    pub lambda: Option<f64>,
    pub seed: Option<u64>,
}

pub struct Loaded {
    pub file: ProblemFile,
    dir: PathBuf,
}

pub fn load(path: &Path) -> Result<Loaded, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    let file: ProblemFile = serde_json::from_str(&text)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Loaded { file, dir })
}

fn finite(x: f64, what: &str) -> Result<f64, Failure> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Failure::Usage(format!("{what} must be finite")))
    }
}

impl Loaded {
    pub fn expect_task(&self, allowed: &[Task], command: &str) -> Result<Task, Failure> {
        if allowed.contains(&self.file.task) {
            Ok(self.file.task)
        } else {
            Err(Failure::Usage(format!(
                "task {:?} cannot be run by `{command}`",
                self.file.task.name()
            )))
        }
    }

    pub fn matrix(&self, src: Option<&MatrixSource>, what: &str) -> Result<Matrix, Failure> {
        let src = src.ok_or_else(|| Failure::Usage(format!("missing field {what}")))?;
        let rows = match src {
            MatrixSource::Rows(rows) => rows.clone(),
            MatrixSource::Csv(rel) => read_csv(&self.dir.join(rel), what)?,
        };
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Failure::Usage(format!("{what} has a non-finite entry")));
        }
        Matrix::from_rows(&rows).map_err(|e| Failure::Usage(format!("{what}: {e}")))
    }

    pub fn vector(&self, v: Option<&Vec<f64>>, what: &str) -> Result<Vec<f64>, Failure> {
        let v = v.ok_or_else(|| Failure::Usage(format!("missing field {what}")))?;
        for &x in v {
            finite(x, what)?;
        }
        Ok(v.clone())
    }

    pub fn lambda(&self) -> Result<f64, Failure> {
        let l = self
            .file
            .lambda
            .ok_or_else(|| Failure::Usage("missing field lambda".into()))?;
        finite(l, "lambda")
    }
}

fn read_csv(path: &Path, what: &str) -> Result<Vec<Vec<f64>>, Failure> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Failure::Usage(format!("{what}: cannot read {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Failure::Usage(format!("{what}: {e}")))?;
        let row = record
            .iter()
            .map(|field| {
                field
                    .parse::<f64>()
                    .map_err(|_| Failure::Usage(format!("{what}: {field:?} is not a number")))
            })
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(row);
    }
    Ok(rows)
}

fn exponent(s: &str) -> Result<Exponent, Failure> {
    s.parse().map_err(|e: robreg::Error| Failure::Usage(e.to_string()))
}

/// Parses `induced:h,g`, `frob:q`, `schatten:q` or `rowwise:q`.
pub fn parse_set(s: &str) -> Result<MatrixNormSpec, Failure> {
    let (kind, args) = s
        .split_once(':')
        .ok_or_else(|| Failure::Usage(format!("set {s:?} should look like kind:exponents")))?;
    let args: Vec<&str> = args.split(',').map(str::trim).collect();
    let one = |args: &[&str]| -> Result<Exponent, Failure> {
        match args {
            [q] => exponent(q),
            _ => Err(Failure::Usage(format!("set {s:?} takes one exponent"))),
        }
    };
    match kind.trim().to_ascii_lowercase().as_str() {
        "induced" => match args.as_slice() {
            [h, g] => Ok(MatrixNormSpec::Induced {
                h: exponent(h)?,
                g: exponent(g)?,
            }),
            _ => Err(Failure::Usage(format!("set {s:?} takes two exponents h,g"))),
        },
        "frob" | "frobenius" => Ok(MatrixNormSpec::FrobeniusP(one(&args)?)),
        "schatten" | "sigma" => Ok(MatrixNormSpec::SchattenP(one(&args)?)),
        "rowwise" | "rows" => Ok(MatrixNormSpec::RowWise(one(&args)?)),
        other => Err(Failure::Usage(format!("unknown set kind {other:?}"))),
    }
}

pub fn set_shape(u: &UncertaintySpec) -> Result<MatrixNormSpec, Failure> {
    let shape = u
        .shape
        .as_deref()
        .ok_or_else(|| Failure::Usage("uncertainty needs a shape".into()))?;
    if shape.contains(':') {
        return parse_set(shape);
    }
    let need = |e: Option<Exponent>, name: &str| {
        e.ok_or_else(|| Failure::Usage(format!("uncertainty shape {shape:?} needs {name}")))
    };
    match shape.to_ascii_lowercase().as_str() {
        "induced" => {
            let h = u.h.or(u.q);
            let g = u.g.or(u.r);
            Ok(MatrixNormSpec::Induced {
                h: need(h, "h (or q)")?,
                g: need(g, "g (or r)")?,
            })
        }
        "frob" | "frobenius" => Ok(MatrixNormSpec::FrobeniusP(need(u.q, "q")?)),
        "schatten" | "sigma" => Ok(MatrixNormSpec::SchattenP(need(u.q, "q")?)),
        "rowwise" | "rows" => Ok(MatrixNormSpec::RowWise(need(u.q, "q")?)),
        other => Err(Failure::Usage(format!("unknown uncertainty shape {other:?}"))),
    }
}

pub fn lqs_robust(u: &UncertaintySpec) -> Result<RobustSpec, Failure> {
    let phi = match u.phi.as_deref().map(str::to_ascii_lowercase).as_deref() {
        Some("l1" | "1") => Phi::L1,
        Some("linf" | "inf") => Phi::LInf,
        Some(other) => return Err(Failure::Usage(format!("phi must be l1 or linf, not {other:?}"))),
        None => return Err(Failure::Usage("lqs uncertainty needs phi (l1 or linf)".into())),
    };
    Ok(RobustSpec {
        phi,
        psi: u.psi.unwrap_or(Exponent::Finite(1.0)),
        lambda: finite(u.lambda, "lambda")?,
    })
}
