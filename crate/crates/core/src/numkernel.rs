//! Special-function primitives: log-factorials, the modified Bessel function
//! I0, normalized Hermite functions, displaced-Fock matrix elements and the
//! Gaussian tail probability.
//!
//! Everything that carries a factorial is assembled in log space and
//! exponentiated last; at local-oscillator amplitude 10 each detector sees
//! about a hundred photons and raw factorials overflow.

use crate::error::{domain, Result};

/// Largest argument accepted by [`bessel_i0`]; I0(700) is about 1.5e302.
pub const BESSEL_I0_MAX_ARG: f64 = 700.0;

/// Largest order accepted by [`hermite_psi`].
pub const HERMITE_MAX_ORDER: usize = 200;

/// Switch-over between the power series and the asymptotic expansion of I0.
const BESSEL_SERIES_LIMIT: f64 = 30.0;

/// Precomputed `ln(n!)` for `n` in `0..=n_max`.
#[derive(Debug, Clone)]
pub struct LogFactorialTable {
    values: Vec<f64>,
}

impl LogFactorialTable {
    pub fn new(n_max: usize) -> Self {
        let mut values = Vec::with_capacity(n_max + 1);
        values.push(0.0);
        let mut acc = 0.0;
        for n in 1..=n_max {
            acc += (n as f64).ln();
            values.push(acc);
        }
        Self { values }
    }

    pub fn n_max(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `ln(n!)`. Panics if `n` exceeds the table.
    #[inline]
    pub fn ln_factorial(&self, n: usize) -> f64 {
        self.values[n]
    }

    /// `ln C(n, k)` for `k <= n`.
    #[inline]
    pub fn ln_binomial(&self, n: usize, k: usize) -> f64 {
        debug_assert!(k <= n);
        self.values[n] - self.values[k] - self.values[n - k]
    }
}

/// Modified Bessel function of the first kind, order zero.
///
/// Power series below x = 30, Hankel asymptotic expansion above; both hold
/// relative accuracy near 1e-14 over the accepted range.
pub fn bessel_i0(x: f64) -> Result<f64> {
    check_bessel_arg(x)?;
    if x <= BESSEL_SERIES_LIMIT {
        Ok(i0_series(x))
    } else {
        Ok(x.exp() * i0_asymptotic_scaled(x))
    }
}

/// `ln I0(x)`, finite over the same domain as [`bessel_i0`].
pub fn ln_bessel_i0(x: f64) -> Result<f64> {
    check_bessel_arg(x)?;
    if x <= BESSEL_SERIES_LIMIT {
        Ok(i0_series(x).ln())
    } else {
        Ok(x + i0_asymptotic_scaled(x).ln())
    }
}

fn check_bessel_arg(x: f64) -> Result<()> {
    if !(0.0..=BESSEL_I0_MAX_ARG).contains(&x) {
        return Err(domain("x", x, "bessel_i0 needs 0 <= x <= 700"));
    }
    Ok(())
}

fn i0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= q / (k * k);
        sum += term;
        if term <= sum * 1e-17 {
            return sum;
        }
        k += 1.0;
    }
}

/// `e^{-x} I0(x)` from the large-argument expansion.
fn i0_asymptotic_scaled(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        let next = term * odd * odd / (8.0 * k as f64 * x);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() <= sum * 1e-17 {
            break;
        }
    }
    sum / (2.0 * std::f64::consts::PI * x).sqrt()
}

/// Normalized eigenfunction of the quadrature `X = a + a†` (unit vacuum
/// variance): `(2π)^{-1/4} (2^n n!)^{-1/2} H_n(x/√2) e^{-x²/4}`.
///
/// Evaluated by upward recurrence on the normalized functions, so raw
/// Hermite polynomials never appear.
pub fn hermite_psi(n: usize, x: f64) -> Result<f64> {
    if n > HERMITE_MAX_ORDER {
        return Err(domain("n", n as f64, "hermite_psi needs n <= 200"));
    }
    let mut prev = 0.0;
    let mut cur = hermite_psi0(x);
    for k in 0..n {
        let next = (x * cur - (k as f64).sqrt() * prev) / ((k + 1) as f64).sqrt();
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

#[inline]
fn hermite_psi0(x: f64) -> f64 {
    (2.0 * std::f64::consts::PI).powf(-0.25) * (-0.25 * x * x).exp()
}

/// `psi_n(x_k)` for every `n <= n_max` and every abscissa; row `n` holds order `n`.
pub fn hermite_table(n_max: usize, xs: &[f64]) -> Result<Vec<Vec<f64>>> {
    if n_max > HERMITE_MAX_ORDER {
        return Err(domain("n_max", n_max as f64, "hermite_table needs n_max <= 200"));
    }
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n_max + 1);
    rows.push(xs.iter().map(|&x| hermite_psi0(x)).collect());
    for k in 0..n_max {
        let cur = &rows[k];
        let next: Vec<f64> = if k == 0 {
            xs.iter().zip(cur).map(|(&x, &c)| x * c).collect()
        } else {
            let prev = &rows[k - 1];
            let sk = (k as f64).sqrt();
            let norm = ((k + 1) as f64).sqrt();
            xs.iter()
                .zip(cur.iter().zip(prev))
                .map(|(&x, (&c, &p))| (x * c - sk * p) / norm)
                .collect()
        };
        rows.push(next);
    }
    Ok(rows)
}

/// Matrix element `<m| D(beta) |n>` of the displacement operator for real `beta`.
///
/// Associated-Laguerre closed form with the factorial ratio in log space.
/// `<m|D(beta)|0> = e^{-beta²/2} beta^m / sqrt(m!)`.
pub fn displaced_fock_overlap(m: usize, n: usize, beta: f64) -> f64 {
    if beta == 0.0 {
        return if m == n { 1.0 } else { 0.0 };
    }
    let x = beta * beta;
    let (lo, hi) = if m >= n { (n, m) } else { (m, n) };
    let diff = hi - lo;

    // 0.5 * (ln lo! - ln hi!) = -0.5 * sum_{k=lo+1}^{hi} ln k
    let ln_ratio: f64 = -0.5 * (lo + 1..=hi).map(|k| (k as f64).ln()).sum::<f64>();
    let ln_mag = ln_ratio + diff as f64 * beta.abs().ln() - 0.5 * x;

    let mut sign = if beta < 0.0 && diff % 2 == 1 { -1.0 } else { 1.0 };
    if m < n && diff % 2 == 1 {
        sign = -sign;
    }
    sign * ln_mag.exp() * laguerre(lo, diff as f64, x)
}

/// Generalized Laguerre polynomial `L_k^{(a)}(x)` by the forward three-term recurrence.
fn laguerre(k: usize, a: f64, x: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = 1.0 + a - x;
    for j in 1..k {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + a - x) * cur - (jf + a) * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// `<p| D(beta) |k>` for `p <= p_max`, `k <= k_max`, stored row-major by `p`.
#[derive(Debug, Clone)]
pub struct DisplacedFockTable {
    p_max: usize,
    k_max: usize,
    beta: f64,
    values: Vec<f64>,
}

impl DisplacedFockTable {
    pub fn new(p_max: usize, k_max: usize, beta: f64) -> Self {
        let mut values = Vec::with_capacity((p_max + 1) * (k_max + 1));
        for p in 0..=p_max {
            for k in 0..=k_max {
                values.push(displaced_fock_overlap(p, k, beta));
            }
        }
        Self {
            p_max,
            k_max,
            beta,
            values,
        }
    }

    #[inline]
    pub fn get(&self, p: usize, k: usize) -> f64 {
        self.values[p * (self.k_max + 1) + k]
    }

    pub fn p_max(&self) -> usize {
        self.p_max
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// Probability that zero-mean Gaussian noise of standard deviation `sigma`
/// is at least `-i`, i.e. `Phi(i / sigma)`.
///
/// With `sigma == 0` this is the sharp classification: 1 for `i >= 0`, else 0.
pub fn gaussian_tail(i: f64, sigma: f64) -> f64 {
    debug_assert!(sigma >= 0.0, "negative noise width {sigma}");
    if sigma == 0.0 {
        return if i >= 0.0 { 1.0 } else { 0.0 };
    }
    0.5 * libm::erfc(-i / (sigma * std::f64::consts::SQRT_2))
}
