use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct BisectOptions {
    /// Stop once the bracket is no wider than this.
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for BisectOptions {
    fn default() -> Self {
        BisectOptions {
            tol: 1e-12,
            max_iterations: 400,
        }
    }
}

/// Root of a monotone `f` on `[lo, hi]`, requiring `f(lo) * f(hi) <= 0`.
///
/// Returns the midpoint of the final bracket. An exact zero at either end is
/// returned as is.
pub fn bisect(f: impl Fn(f64) -> f64, lo: f64, hi: f64, opts: BisectOptions) -> Result<f64> {
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(Error::InvalidBracket { lo, hi });
    }
    let (mut a, mut b) = (lo, hi);
    let (fa, fb) = (f(a), f(b));
    if fa.is_nan() || fb.is_nan() || fa * fb > 0.0 {
        return Err(Error::InvalidBracket { lo, hi });
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    let increasing = fa < 0.0;
    for _ in 0..opts.max_iterations {
        if b - a <= opts.tol {
            break;
        }
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm < 0.0) == increasing {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(tol: f64) -> BisectOptions {
        BisectOptions {
            tol,
            ..BisectOptions::default()
        }
    }

    #[test]
    fn linear() {
        let r = bisect(|x| x - 2.0, 0.0, 4.0, opts(1e-12)).unwrap();
        assert!((r - 2.0).abs() < 1e-12);
    }

    #[test]
    fn cubic() {
        let r = bisect(|x| x * x * x - 8.0, 0.0, 4.0, opts(1e-10)).unwrap();
        assert!((r - 2.0).abs() <= 1e-10);
    }

    #[test]
    fn piecewise_linear() {
        let f = |v: f64| (v - 2.0).max(0.0) + (v - 3.0).max(0.0) - 1.0;
        let r = bisect(f, 2.0, 4.0, opts(1e-12)).unwrap();
        assert!((r - 3.0).abs() < 1e-11);
    }

    #[test]
    fn decreasing_function() {
        let r = bisect(|x| 1.0 - x, 0.0, 3.0, opts(1e-12)).unwrap();
        assert!((r - 1.0).abs() < 1e-11);
    }

    #[test]
    fn bad_bracket() {
        assert!(matches!(
            bisect(|x| x + 1.0, 0.0, 1.0, opts(1e-9)),
            Err(Error::InvalidBracket { .. })
        ));
        assert!(bisect(|x| x, 1.0, 0.0, opts(1e-9)).is_err());
    }
}
