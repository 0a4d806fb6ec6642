//! Special functions and the small linear-algebra kernels used by the fitters and tests.
//!
//! Everything here is a pure function of its arguments.

use crate::error::{Result, WilksError};

/// Convergence controls shared by the iterative solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    /// Bound on the sup-norm of the likelihood-equation residual.
    pub abs_eps: f64,
    /// Minimum relative residual decrease counted as progress.
    pub rel_eps: f64,
    pub max_iter: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs_eps: 1e-8,
            rel_eps: 1e-10,
            max_iter: 5000,
        }
    }
}

impl Tolerance {
    pub fn new(abs_eps: f64, rel_eps: f64, max_iter: usize) -> Result<Self> {
        let tol = Tolerance {
            abs_eps,
            rel_eps,
            max_iter,
        };
        tol.validate()?;
        Ok(tol)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_eps > 0.0) || !self.abs_eps.is_finite() {
            return Err(WilksError::InvalidTolerance(format!("abs_eps must be > 0, got {}", self.abs_eps)));
        }
        if !(self.rel_eps > 0.0) || !self.rel_eps.is_finite() {
            return Err(WilksError::InvalidTolerance(format!("rel_eps must be > 0, got {}", self.rel_eps)));
        }
        if self.max_iter == 0 {
            return Err(WilksError::InvalidTolerance("max_iter must be >= 1".into()));
        }
        Ok(())
    }
}

/// Logistic function, branching on sign so neither side overflows.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^x)` without overflow for large `x` or cancellation for very negative `x`.
#[inline]
pub fn log1p_exp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `log(e^a + e^b)`.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    a.max(b) + (-(a - b).abs()).exp().ln_1p()
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0` (Lanczos approximation).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

const GAMMA_EPS: f64 = 1e-16;
const GAMMA_MAX_ITER: usize = 100_000;
const TINY: f64 = 1e-300;

/// Regularized upper incomplete gamma `Q(a, x)`, for `a > 0`, `x >= 0`.
///
/// Uses the power series for `P` when `x < a + 1` and the Legendre continued
/// fraction (modified Lentz) for `Q` otherwise.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_continued_fraction(a, x)
    }
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        gamma_p_series(a, x)
    } else {
        1.0 - gamma_q_continued_fraction(a, x)
    }
}

fn log_prefactor(a: f64, x: f64) -> f64 {
    -x + a * x.ln() - ln_gamma(a)
}

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..GAMMA_MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * GAMMA_EPS {
            break;
        }
    }
    (sum.ln() + log_prefactor(a, x)).exp()
}

fn gamma_q_continued_fraction(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..GAMMA_MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < GAMMA_EPS {
            break;
        }
    }
    (h.ln() + log_prefactor(a, x)).exp()
}

#[inline]
fn clamp_prob(p: f64) -> f64 {
    p.clamp(0.0, 1.0)
}

/// Upper tail `P(X > x)` of a chi-square variable with `df` degrees of freedom.
pub fn chi_square_sf(x: f64, df: u32) -> Result<f64> {
    if df < 1 {
        return Err(WilksError::Domain(format!("chi-square df must be >= 1, got {df}")));
    }
    if !(x >= 0.0) {
        return Err(WilksError::Domain(format!("chi-square argument must be >= 0, got {x}")));
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok(clamp_prob(gamma_q(df as f64 / 2.0, x / 2.0)))
}

/// Lower tail `P(X <= x)` of a chi-square variable.
pub fn chi_square_cdf(x: f64, df: u32) -> Result<f64> {
    chi_square_sf(x, df).map(|q| clamp_prob(1.0 - q))
}

/// Quantile of the chi-square distribution: the `x` with `P(X <= x) = p`, by bisection on the tail.
pub fn chi_square_quantile(p: f64, df: u32) -> Result<f64> {
    if df < 1 {
        return Err(WilksError::Domain(format!("chi-square df must be >= 1, got {df}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(WilksError::Domain(format!("probability must lie in [0, 1], got {p}")));
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    if p == 1.0 {
        return Ok(f64::INFINITY);
    }
    let target_sf = 1.0 - p;
    let mut lo = 0.0;
    let mut hi = (df as f64).max(1.0);
    while chi_square_sf(hi, df)? > target_sf {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chi_square_sf(mid, df)? > target_sf {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi.max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Complementary error function via `erfc(x) = Q(1/2, x^2)` for `x >= 0`.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x >= 0.0 {
        gamma_q(0.5, x * x)
    } else {
        2.0 - gamma_q(0.5, x * x)
    }
}

/// Standard normal upper tail `1 - Φ(z)`.
pub fn normal_sf(z: f64) -> f64 {
    if z >= 0.0 {
        clamp_prob(0.5 * erfc(z / std::f64::consts::SQRT_2))
    } else {
        clamp_prob(1.0 - 0.5 * erfc(-z / std::f64::consts::SQRT_2))
    }
}

pub fn normal_cdf(z: f64) -> f64 {
    normal_sf(-z)
}

/// Standard normal quantile `Φ⁻¹(p)`: Acklam's rational approximation polished by Newton steps.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(WilksError::Domain(format!("probability must lie in [0, 1], got {p}")));
    }
    if p == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if p == 1.0 {
        return Ok(f64::INFINITY);
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;
    let mut x = if p < P_LOW {
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
    for _ in 0..3 {
        let density = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        if density <= 0.0 {
            break;
        }
        // Work on whichever tail is smaller to keep relative precision.
        let err = if x < 0.0 {
            normal_cdf(x) - p
        } else {
            (1.0 - p) - normal_sf(x)
        };
        x -= err / density;
    }
    Ok(x)
}

/// Symmetric tridiagonal matrix stored as its diagonal and first off-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalMatrix {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl TridiagonalMatrix {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(WilksError::DimensionMismatch { expected: 1, found: 0 });
        }
        if off.len() + 1 != diag.len() {
            return Err(WilksError::DimensionMismatch {
                expected: diag.len() - 1,
                found: off.len(),
            });
        }
        Ok(TridiagonalMatrix { diag, off })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off(&self) -> &[f64] {
        &self.off
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if x.len() != n {
            return Err(WilksError::DimensionMismatch { expected: n, found: x.len() });
        }
        let mut y: Vec<f64> = self.diag.iter().zip(x).map(|(d, v)| d * v).collect();
        for k in 0..n - 1 {
            y[k] += self.off[k] * x[k + 1];
            y[k + 1] += self.off[k] * x[k];
        }
        Ok(y)
    }
}

const PIVOT_FLOOR: f64 = 1e-14;

/// Solves `m x = rhs` for symmetric positive definite tridiagonal `m` (Thomas algorithm in LDLᵀ form).
pub fn tridiag_solve(m: &TridiagonalMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = m.dim();
    if rhs.len() != n {
        return Err(WilksError::DimensionMismatch { expected: n, found: rhs.len() });
    }
    let mut pivots = Vec::with_capacity(n);
    let mut mult = Vec::with_capacity(n.saturating_sub(1));
    let mut y = Vec::with_capacity(n);

    let mut pivot = m.diag[0];
    if !(pivot > PIVOT_FLOOR) {
        return Err(WilksError::SingularMatrix { pivot: 0, value: pivot });
    }
    pivots.push(pivot);
    y.push(rhs[0]);
    for k in 1..n {
        let l = m.off[k - 1] / pivots[k - 1];
        pivot = m.diag[k] - l * m.off[k - 1];
        if !(pivot > PIVOT_FLOOR) {
            return Err(WilksError::SingularMatrix { pivot: k, value: pivot });
        }
        mult.push(l);
        pivots.push(pivot);
        y.push(rhs[k] - l * y[k - 1]);
    }
    let mut x = vec![0.0; n];
    x[n - 1] = y[n - 1] / pivots[n - 1];
    for k in (0..n - 1).rev() {
        x[k] = y[k] / pivots[k] - mult[k] * x[k + 1];
    }
    Ok(x)
}

/// In-place Cholesky solve of a dense SPD system stored row-major; `a` is overwritten by its factor.
pub(crate) fn cholesky_solve(a: &mut [f64], n: usize, b: &[f64]) -> Result<Vec<f64>> {
    debug_assert_eq!(a.len(), n * n);
    for j in 0..n {
        let mut s = a[j * n + j];
        for k in 0..j {
            s -= a[j * n + k] * a[j * n + k];
        }
        if !(s > PIVOT_FLOOR) {
            return Err(WilksError::SingularMatrix { pivot: j, value: s });
        }
        let ljj = s.sqrt();
        a[j * n + j] = ljj;
        for i in j + 1..n {
            let mut t = a[i * n + j];
            for k in 0..j {
                t -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = t / ljj;
        }
    }
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= a[i * n + k] * y[k];
        }
        y[i] /= a[i * n + i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= a[k * n + i] * y[k];
        }
        y[i] /= a[i * n + i];
    }
    Ok(y)
}

/// Kolmogorov–Smirnov distance between a sample and a continuous CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    if sample.is_empty() {
        return 0.0;
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            let above = (i as f64 + 1.0) / m - f;
            let below = f - i as f64 / m;
            above.max(below)
        })
        .fold(0.0, f64::max)
}

/// Sample mean and unbiased sample variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let m = xs.len();
    if m == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / m as f64;
    if m == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, ss / (m - 1) as f64)
}
