//! The two state families, both kept in Schmidt form.
//!
//! A dense four-mode tensor at local-oscillator amplitude 10 would need about
//! 1e8 Fock cells; the Schmidt rank stays at `n_max + 1`.

use crate::error::{domain, Error, Result};
use crate::numkernel::{ln_bessel_i0, LogFactorialTable};

/// Default bound on the discarded pair-coherent probability.
pub const DEFAULT_TAIL_TOL: f64 = 1e-16;

/// Largest accepted pump parameter.
pub const MAX_R0: f64 = 3.0;

/// Largest accepted spin-pair photon number.
pub const MAX_SPIN_N: u32 = 200;

/// `sum_n c_n |n>_{a-} |n>_{b-}` with coherent local oscillators `|alpha>_{a+}`, `|beta>_{b+}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtState {
    coeffs: Vec<f64>,
    alpha: f64,
    beta: f64,
    r0: f64,
    truncated_mass: f64,
}

impl SchmidtState {
    /// Pair-coherent signal/idler state with pump parameter `r0`.
    pub fn pair_coherent(r0: f64, alpha: f64, beta: f64, tail_tol: f64) -> Result<Self> {
        check_amplitude("alpha", alpha)?;
        check_amplitude("beta", beta)?;
        let raw = pair_coherent_unnormalized(r0, tail_tol)?;
        let mass: f64 = raw.iter().map(|c| c * c).sum();
        let norm = mass.sqrt();
        Ok(Self {
            coeffs: raw.iter().map(|c| c / norm).collect(),
            alpha,
            beta,
            r0,
            truncated_mass: (1.0 - mass).max(0.0),
        })
    }

    /// Arbitrary nonnegative Schmidt coefficients; normalized on the way in.
    pub fn from_coefficients(coeffs: Vec<f64>, alpha: f64, beta: f64) -> Result<Self> {
        check_amplitude("alpha", alpha)?;
        check_amplitude("beta", beta)?;
        if coeffs.is_empty() {
            return Err(Error::InvalidConfig("empty Schmidt coefficient list".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::InvalidConfig(
                "Schmidt coefficients must be finite and nonnegative".into(),
            ));
        }
        let norm = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidConfig("Schmidt coefficients are all zero".into()));
        }
        Ok(Self {
            coeffs: coeffs.into_iter().map(|c| c / norm).collect(),
            alpha,
            beta,
            r0: f64::NAN,
            truncated_mass: 0.0,
        })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// Highest Fock index kept.
    pub fn n_max(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Pump parameter; NaN for states built from explicit coefficients.
    pub fn r0(&self) -> f64 {
        self.r0
    }

    /// Probability discarded by the Fock truncation before renormalization.
    pub fn truncated_mass(&self) -> f64 {
        self.truncated_mass
    }

    /// Same signal/idler state with different local oscillators.
    pub fn with_oscillators(&self, alpha: f64, beta: f64) -> Result<Self> {
        check_amplitude("alpha", alpha)?;
        check_amplitude("beta", beta)?;
        Ok(Self {
            alpha,
            beta,
            ..self.clone()
        })
    }
}

fn check_amplitude(name: &'static str, v: f64) -> Result<()> {
    if !v.is_finite() || v < 0.0 {
        return Err(domain(name, v, "local-oscillator amplitudes are real and nonnegative"));
    }
    Ok(())
}

/// Normalized pair-coherent coefficients `c_n = I0(2 r0²)^{-1/2} (r0²)^n / n!`,
/// truncated at the first `n_max` whose tail bound drops below `tail_tol` and
/// renormalized over the kept support.
pub fn pair_coherent_coeffs(r0: f64, tail_tol: f64) -> Result<Vec<f64>> {
    let raw = pair_coherent_unnormalized(r0, tail_tol)?;
    let norm = raw.iter().map(|c| c * c).sum::<f64>().sqrt();
    Ok(raw.into_iter().map(|c| c / norm).collect())
}

/// Upper bound on `sum_{n > n_max} c_n²` for the untruncated state.
///
/// Consecutive terms of `c_n²` shrink by `r0⁴/(n+1)²`, so past `n_max` the
/// tail is dominated by a geometric series with ratio `r0⁴/(n_max+2)²`.
/// Returns infinity while that ratio is not below one.
pub fn pair_coherent_tail_bound(r0: f64, n_max: usize) -> Result<f64> {
    check_r0(r0)?;
    if r0 == 0.0 {
        return Ok(0.0);
    }
    let s = r0 * r0;
    let ratio = s * s / ((n_max + 2) as f64).powi(2);
    if ratio >= 1.0 {
        return Ok(f64::INFINITY);
    }
    let lf = LogFactorialTable::new(n_max + 1);
    let n1 = n_max + 1;
    let ln_next = 2.0 * (n1 as f64 * s.ln() - lf.ln_factorial(n1)) - ln_bessel_i0(2.0 * s)?;
    Ok(ln_next.exp() / (1.0 - ratio))
}

fn check_r0(r0: f64) -> Result<()> {
    if !(0.0..=MAX_R0).contains(&r0) {
        return Err(domain("r0", r0, "pump parameter must lie in [0, 3]"));
    }
    Ok(())
}

fn pair_coherent_unnormalized(r0: f64, tail_tol: f64) -> Result<Vec<f64>> {
    check_r0(r0)?;
    if !(tail_tol > 0.0 && tail_tol <= 1e-6) {
        return Err(domain("tail_tol", tail_tol, "tail tolerance must lie in (0, 1e-6]"));
    }
    if r0 == 0.0 {
        return Ok(vec![1.0]);
    }
    let mut n_max = 0;
    while pair_coherent_tail_bound(r0, n_max)? >= tail_tol {
        n_max += 1;
    }
    let s = r0 * r0;
    let half_ln_norm = 0.5 * ln_bessel_i0(2.0 * s)?;
    let lf = LogFactorialTable::new(n_max);
    Ok((0..=n_max)
        .map(|n| (n as f64 * s.ln() - lf.ln_factorial(n) - half_ln_norm).exp())
        .collect())
}

/// `(a₊'†b₊'† + a₋'†b₋'†)^N |0> / (N! sqrt(N+1))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpinPairState {
    n: u32,
}

impl SpinPairState {
    pub fn new(n: u32) -> Result<Self> {
        if !(1..=MAX_SPIN_N).contains(&n) {
            return Err(domain("N", n as f64, "spin-pair photon number must lie in 1..=200"));
        }
        Ok(Self { n })
    }

    pub fn photons(&self) -> u32 {
        self.n
    }
}

/// One term `amplitude |k, N-k>_A |k, N-k>_B` of the spin-pair Schmidt expansion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinSchmidtTerm {
    pub k: u32,
    pub amplitude: f64,
}

/// Binomial expansion of the spin-pair state. Every amplitude equals
/// `(N+1)^{-1/2}`; it is derived term by term rather than assumed.
pub fn spin_schmidt(n: u32) -> Result<Vec<SpinSchmidtTerm>> {
    let state = SpinPairState::new(n)?;
    let n = state.photons() as usize;
    let lf = LogFactorialTable::new(n);
    let ln_prefactor = -lf.ln_factorial(n) - 0.5 * ((n + 1) as f64).ln();
    Ok((0..=n)
        .map(|k| {
            // C(N,k) (a₊'†b₊'†)^k (a₋'†b₋'†)^{N-k}|0> = C(N,k) k! (N-k)! |k,N-k>|k,N-k>
            let ln_amp = lf.ln_binomial(n, k) + lf.ln_factorial(k) + lf.ln_factorial(n - k) + ln_prefactor;
            SpinSchmidtTerm {
                k: k as u32,
                amplitude: ln_amp.exp(),
            }
        })
        .collect())
}
