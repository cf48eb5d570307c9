//! Report assembly, JSON rendering and the trial pool.

use std::io;
use std::path::Path;

use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{json, Value};

use robreg::matrix_reg::{DESCENT_AUDIT_TOL, MEMBERSHIP_MARGIN};
use robreg::robustify::{MEMBERSHIP_TOL, STRICT_GAP};

/// Flags shared by every command.
#[derive(Clone, Copy, Debug)]
pub struct Settings {
    pub seed: Option<u64>,
    pub workers: usize,
    pub tol: f64,
}

impl Settings {
    /// Command-line seed, else the problem file's, else 0.
    pub fn seed_or(&self, file_seed: Option<u64>) -> u64 {
        self.seed.or(file_seed).unwrap_or(0)
    }
}

#[derive(Debug)]
pub enum Failure {
    /// Bad arguments or a malformed problem file (exit 2).
    Usage(String),
    /// A numerical routine failed (exit 3).
    Numerical(String),
}

impl From<robreg::Error> for Failure {
    fn from(e: robreg::Error) -> Self {
        use robreg::Error as E;
        match e {
            E::Dimension(_) | E::InvalidArgument(_) | E::NonFinite(_) | E::Unsupported(_) | E::ScaleCap(_) => {
                Failure::Usage(e.to_string())
            }
            E::NoConvergence { .. } | E::InvalidBracket { .. } | E::ApproximateOnly { .. } | E::Refused(_) => {
                Failure::Numerical(e.to_string())
            }
        }
    }
}

pub type CmdResult = Result<Outcome, Failure>;

/// What a command produced. `ok = false` means a check failed or a solver
/// stopped early; the report is still written.
pub struct Outcome {
    pub text: String,
    pub result: Value,
    pub ok: bool,
    pub seed: u64,
}

pub fn build(command: &str, settings: &Settings, outcome: &Outcome, timing_ms: Option<f64>) -> Value {
    let mut report = json!({
        "tool": "robreg",
        "version": env!("CARGO_PKG_VERSION"),
        "core_version": robreg::VERSION,
        "command": command,
        "seed": outcome.seed,
        "workers": settings.workers,
        "tolerances": {
            "check": settings.tol,
            "strict_gap": STRICT_GAP,
            "membership": MEMBERSHIP_TOL,
            "membership_margin": MEMBERSHIP_MARGIN,
            "descent_audit": DESCENT_AUDIT_TOL,
        },
        "ok": outcome.ok,
        "result": outcome.result,
    });
    if let (Some(ms), Value::Object(map)) = (timing_ms, &mut report) {
        map.insert("timing_ms".into(), json!(ms));
    }
    report
}

/// Pretty JSON with every float written as `d.dddddddddddddddde±x`
/// (17 significant digits, so values read back bit-exact).
struct SigFigs {
    inner: PrettyFormatter<'static>,
}

impl Formatter for SigFigs {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

pub fn to_json_string(value: &Value) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(
        &mut out,
        SigFigs {
            inner: PrettyFormatter::new(),
        },
    );
    serde::Serialize::serialize(value, &mut ser).expect("in-memory JSON write");
    out.push(b'\n');
    String::from_utf8(out).expect("JSON is UTF-8")
}

pub fn write_json(path: &Path, value: &Value) -> io::Result<()> {
    std::fs::write(path, to_json_string(value))
}

/// `to_value` for core types; `NaN`/`inf` fields serialize as `null`.
pub fn value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).unwrap_or(Value::Null)
}

/// Maps `f` over `0..n` on up to `workers` threads. Each index is handled
/// independently, so the result does not depend on `workers`.
pub fn par_map<T, F>(n: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let workers = workers.clamp(1, n.max(1));
    if workers == 1 {
        return (0..n).map(&f).collect();
    }
    let chunk = n.div_ceil(workers);
    let mut out: Vec<T> = Vec::with_capacity(n);
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let f = &f;
                scope.spawn(move || (w * chunk..((w + 1) * chunk).min(n)).map(f).collect::<Vec<T>>())
            })
            .collect();
        for h in handles {
            out.extend(h.join().expect("worker panicked"));
        }
    });
    out
}

/// Shortest round-trip form, in exponent notation when very small or large.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e9).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_carry_seventeen_digits() {
        let s = to_json_string(&json!({"a": 0.1, "b": 3}));
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("\"b\": 3"), "{s}");
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["a"].as_f64().unwrap(), 0.1);
    }

    #[test]
    fn keys_come_out_sorted() {
        let s = to_json_string(&json!({"zeta": 1, "alpha": 2}));
        assert!(s.find("alpha").unwrap() < s.find("zeta").unwrap());
    }

    #[test]
    fn par_map_ignores_worker_count() {
        let one = par_map(37, 1, |i| i * i);
        let many = par_map(37, 5, |i| i * i);
        assert_eq!(one, many);
        assert!(par_map(0, 4, |i| i).is_empty());
    }
}
