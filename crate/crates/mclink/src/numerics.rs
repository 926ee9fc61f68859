//! Small dense numerical kernels shared by the design and analysis modules:
//! a Cholesky factorization for symmetric positive-definite systems (tap
//! design solves systems of order ≤ a few dozen), a power-iteration condition
//! estimate, golden-section maximization for the CIR peak search, a cached
//! log-factorial, and an inverse normal CDF for confidence intervals.
//!
//! Systems are always solved through the factorization; explicit matrix
//! inversion is deliberately not provided.

use crate::Error;
use std::sync::OnceLock;

/// Condition-number ceiling beyond which tap design refuses to solve.
pub const CONDITION_LIMIT: f64 = 1e12;

// ---------------------------------------------------------------------------
// Cholesky factorization and SPD solves
// ---------------------------------------------------------------------------

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix,
/// stored dense row-major.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Vec<f64>,
    n: usize,
}

impl Cholesky {
    /// Factors the symmetric matrix `a` (row-major, `n`×`n`; only the lower
    /// triangle is read). Fails if a pivot is not strictly positive, which is
    /// the definition of "not positive definite" at working precision.
    pub fn factor(a: &[f64], n: usize) -> Result<Self, Error> {
        assert_eq!(a.len(), n * n, "matrix storage must be n*n");
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::Numerical(format!(
                            "matrix is not positive definite (pivot {s:.3e} at row {i})"
                        )));
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Ok(Cholesky { l, n })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = rhs` via forward/back substitution on the factor.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.n, "rhs length must match matrix order");
        let n = self.n;
        let mut x = rhs.to_vec();
        // L y = rhs
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= self.l[i * n + k] * x[k];
            }
            x[i] = s / self.l[i * n + i];
        }
        // L^T x = y
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * x[k];
            }
            x[i] = s / self.l[i * n + i];
        }
        x
    }
}

/// 2-norm condition estimate for a symmetric positive-definite matrix:
/// largest eigenvalue by power iteration on `a`, smallest by inverse
/// iteration through the factor. A few dozen iterations are plenty for the
/// well-separated spectra seen here; the estimate only gates a hard error
/// threshold, it is not reported as a precise quantity.
pub fn spd_condition_estimate(a: &[f64], n: usize, chol: &Cholesky) -> f64 {
    let matvec = |v: &[f64], out: &mut [f64]| {
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                s += a[i * n + j] * v[j];
            }
            out[i] = s;
        }
    };
    let normalize = |v: &mut [f64]| -> f64 {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for x in v.iter_mut() {
                *x /= norm;
            }
        }
        norm
    };
    // Deterministic, not-axis-aligned start vector.
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64) * 0.37).collect();
    normalize(&mut v);
    let mut w = vec![0.0; n];
    let mut lambda_max = 0.0;
    for _ in 0..60 {
        matvec(&v, &mut w);
        lambda_max = normalize(&mut w);
        std::mem::swap(&mut v, &mut w);
    }
    let mut u: Vec<f64> = (0..n).map(|i| 1.0 - (i as f64) * 0.21).collect();
    normalize(&mut u);
    let mut inv_norm = 1.0;
    for _ in 0..60 {
        let y = chol.solve(&u);
        u = y;
        inv_norm = normalize(&mut u);
    }
    // inv_norm converges to 1/lambda_min.
    lambda_max * inv_norm
}

/// Solves the symmetric positive-definite system `a x = rhs`, refusing when
/// the condition estimate exceeds [`CONDITION_LIMIT`]. Returns the solution
/// together with the factor so callers can reuse it for further solves.
pub fn spd_solve(a: &[f64], n: usize, rhs: &[f64]) -> Result<(Vec<f64>, Cholesky), Error> {
    let chol = Cholesky::factor(a, n)?;
    let cond = spd_condition_estimate(a, n, &chol);
    if cond > CONDITION_LIMIT {
        return Err(Error::Numerical(format!(
            "system too ill-conditioned to solve (condition estimate {cond:.3e} > {CONDITION_LIMIT:.0e})"
        )));
    }
    Ok((chol.solve(rhs), chol))
}

// ---------------------------------------------------------------------------
// Golden-section maximization
// ---------------------------------------------------------------------------

/// Maximizes a unimodal function on `[lo, hi]` by golden-section search down
/// to relative interval width `rel_tol`. Returns `(argmax, max)`.
pub fn golden_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, rel_tol: f64) -> (f64, f64) {
    assert!(lo < hi, "empty search interval");
    const INVPHI: f64 = 0.618_033_988_749_894_9; // (sqrt(5)-1)/2
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a) > rel_tol * (a.abs() + b.abs()) * 0.5 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

// ---------------------------------------------------------------------------
// Log-factorial
// ---------------------------------------------------------------------------

const LN_FACT_CACHE: usize = 1024;

fn ln_fact_table() -> &'static [f64; LN_FACT_CACHE] {
    static TABLE: OnceLock<[f64; LN_FACT_CACHE]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [0.0; LN_FACT_CACHE];
        for g in 2..LN_FACT_CACHE {
            t[g] = t[g - 1] + (g as f64).ln();
        }
        t
    })
}

/// ln(g!) — cumulative-sum table for small `g`, log-gamma beyond. Relative
/// accuracy is far inside 1e-12 over the supported range (g ≤ 1e6 and past).
pub fn ln_factorial(g: u64) -> f64 {
    if (g as usize) < LN_FACT_CACHE {
        ln_fact_table()[g as usize]
    } else {
        libm::lgamma(g as f64 + 1.0)
    }
}

// ---------------------------------------------------------------------------
// Inverse normal CDF
// ---------------------------------------------------------------------------

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Inverse standard normal CDF: Acklam's rational approximation (|relative
/// error| < 1.2e-9) polished by one Halley step through `erfc`, which lands
/// within a few ulp — enough to make confidence-interval z-values exact at
/// working precision.
pub fn inv_norm_cdf(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile argument must be in (0,1)");
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;
    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    // One Halley refinement: u = (Phi(x) - p) / phi(x).
    let phi = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let u = (norm_cdf(x) - p) / phi;
    x - u / (1.0 + 0.5 * x * u)
}

// ---------------------------------------------------------------------------
