//! Finite-amplitude photon counting behind the local-oscillator beam splitters.
//!
//! At site A the output modes are `c'± = (a₊ ± a₋ e^{-iθ})/√2`. Writing
//! `γ = α/√2`, the input `|α>_{a+} |n>_{a-}` leaves the beam splitter as
//!
//! ```text
//! e^{-inθ} D₊(γ) D₋(γ) Σ_k (-1)^{n-k} sqrt(C(n,k)/2^n) |k>₊ |n-k>₋
//! ```
//!
//! so every count amplitude is a short binomial sum of displaced-Fock matrix
//! elements `<p|D(γ)|k>` with a phase that only depends on `n`. The joint
//! amplitude for counts `(p₊, p₋; q₊, q₋)` is `Σ_n c_n e^{-in(θ+φ)} R_n(p) R_n(q)`
//! with real `R_n`. Squaring and summing over all count tuples sharing the
//! differences `(i, j)` gives
//!
//! ```text
//! P(i, j) = Σ_{n,m} c_n c_m cos((n-m)(θ+φ)) G_nm(i) G_nm(j),
//! G_nm(i) = Σ_{p₊-p₋=i} R_n(p₊,p₋) R_m(p₊,p₋).
//! ```

use log::warn;
use rayon::prelude::*;

use super::{JointIntegerDistribution, MASS_DEFICIT_LIMIT};
use crate::error::{domain, Error, Result};
use crate::numkernel::{DisplacedFockTable, LogFactorialTable};
use crate::states::SchmidtState;

/// Largest local-oscillator amplitude the count window tables are sized for.
pub const MAX_EXACT_AMPLITUDE: f64 = 12.0;

/// Half-width of the per-detector count window in Poisson standard deviations.
pub const WINDOW_SIGMAS: f64 = 8.0;

/// Marginal probabilities below this are trimmed from the window edges.
const TRIM_LEVEL: f64 = 1e-30;

/// Per-detector photon-count window `0..=p_max` for one site.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountWindow {
    pub p_max: usize,
}

impl CountWindow {
    /// Covers the mean `amplitude²/2` plus [`WINDOW_SIGMAS`] standard
    /// deviations, widened by the signal photons the Schmidt index can add.
    pub fn for_amplitude(amplitude: f64, n_max: usize) -> Self {
        let mean = 0.5 * amplitude * amplitude;
        let p_max = (mean + WINDOW_SIGMAS * mean.sqrt()).ceil() as usize + 2 * n_max + 8;
        Self { p_max }
    }
}

/// Pairwise count-difference correlations `G_nm(i)` for one site, `n <= m`.
struct SiteCorrelations {
    n_max: usize,
    offset: i64,
    /// `pairs[idx(n,m)][i + offset]`
    pairs: Vec<Vec<f64>>,
}

fn pair_index(n: usize, m: usize, n_max: usize) -> usize {
    debug_assert!(n <= m);
    n * (2 * n_max + 3 - n) / 2 + (m - n)
}

impl SiteCorrelations {
    fn new(amplitude: f64, n_max: usize) -> Self {
        let window = CountWindow::for_amplitude(amplitude, n_max);
        let p_len = window.p_max + 1;
        let gamma = amplitude / std::f64::consts::SQRT_2;
        let table = DisplacedFockTable::new(window.p_max, n_max, gamma);
        let lf = LogFactorialTable::new(n_max);

        // R_n(p₊, p₋), row-major in p₊
        let amplitudes: Vec<Vec<f64>> = (0..=n_max)
            .into_par_iter()
            .map(|n| {
                let split: Vec<f64> = (0..=n)
                    .map(|k| {
                        let mag = (0.5 * (lf.ln_binomial(n, k) - n as f64 * std::f64::consts::LN_2)).exp();
                        if (n - k) % 2 == 1 {
                            -mag
                        } else {
                            mag
                        }
                    })
                    .collect();
                let mut r = vec![0.0; p_len * p_len];
                for pp in 0..p_len {
                    for pm in 0..p_len {
                        let mut acc = 0.0;
                        for (k, b) in split.iter().enumerate() {
                            acc += b * table.get(pp, k) * table.get(pm, n - k);
                        }
                        r[pp * p_len + pm] = acc;
                    }
                }
                r
            })
            .collect();

        let offset = window.p_max as i64;
        let n_diff = 2 * window.p_max + 1;
        let index_pairs: Vec<(usize, usize)> =
            (0..=n_max).flat_map(|n| (n..=n_max).map(move |m| (n, m))).collect();
        let pairs: Vec<Vec<f64>> = index_pairs
            .par_iter()
            .map(|&(n, m)| {
                let (rn, rm) = (&amplitudes[n], &amplitudes[m]);
                let mut g = vec![0.0; n_diff];
                for pp in 0..p_len {
                    for pm in 0..p_len {
                        let idx = pp * p_len + pm;
                        g[pp + window.p_max - pm] += rn[idx] * rm[idx];
                    }
                }
                g
            })
            .collect();
        Self { n_max, offset, pairs }
    }

    fn len(&self) -> usize {
        self.pairs[0].len()
    }

    /// Marginal `Σ_n w_n G_nn(i)` used for trimming.
    fn diagonal(&self, weights: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for (n, w) in weights.iter().enumerate() {
            for (o, g) in out.iter_mut().zip(&self.pairs[pair_index(n, n, self.n_max)]) {
                *o += w * g;
            }
        }
        out
    }
}

fn support(marginal: &[f64]) -> (usize, usize) {
    let lo = marginal.iter().position(|&p| p > TRIM_LEVEL).unwrap_or(0);
    let hi = marginal.iter().rposition(|&p| p > TRIM_LEVEL).unwrap_or(marginal.len() - 1);
    (lo, hi.max(lo))
}

/// Joint distribution of the photon-number differences `(i, j)` for the
/// Schmidt state with its local oscillators, measured at angles `theta`, `phi`.
pub fn exact_joint_distribution(state: &SchmidtState, theta: f64, phi: f64) -> Result<JointIntegerDistribution> {
    for amp in [state.alpha(), state.beta()] {
        if amp > MAX_EXACT_AMPLITUDE {
            return Err(Error::WindowOverflow {
                amplitude: amp,
                max: MAX_EXACT_AMPLITUDE,
            });
        }
    }
    if !theta.is_finite() || !phi.is_finite() {
        return Err(domain("angle", if theta.is_finite() { phi } else { theta }, "angles must be finite"));
    }
    let c = state.coefficients();
    let n_max = state.n_max();

    let site_a = SiteCorrelations::new(state.alpha(), n_max);
    let site_b_owned;
    let site_b = if state.beta() == state.alpha() {
        &site_a
    } else {
        site_b_owned = SiteCorrelations::new(state.beta(), n_max);
        &site_b_owned
    };

    let probs_sq: Vec<f64> = c.iter().map(|v| v * v).collect();
    let (a_lo, a_hi) = support(&site_a.diagonal(&probs_sq));
    let (b_lo, b_hi) = support(&site_b.diagonal(&probs_sq));

    let total_angle = theta + phi;
    let mut weights = Vec::with_capacity(site_a.pairs.len());
    for n in 0..=n_max {
        for m in n..=n_max {
            let mult = if n == m { 1.0 } else { 2.0 };
            weights.push(mult * c[n] * c[m] * ((n as f64 - m as f64) * total_angle).cos());
        }
    }

    // B correlations transposed so each j reads one contiguous slice of pairs.
    let n_pairs = weights.len();
    let b_cols: Vec<Vec<f64>> = (b_lo..=b_hi)
        .map(|jb| site_b.pairs.iter().map(|g| g[jb]).collect())
        .collect();
    debug_assert!(b_cols.iter().all(|col| col.len() == n_pairs));

    let rows: Vec<Vec<f64>> = (a_lo..=a_hi)
        .into_par_iter()
        .map(|ia| {
            let v: Vec<f64> = weights
                .iter()
                .zip(&site_a.pairs)
                .map(|(w, g)| w * g[ia])
                .collect();
            b_cols
                .iter()
                .map(|col| v.iter().zip(col).map(|(a, b)| a * b).sum::<f64>())
                .collect()
        })
        .collect();

    let probs: Vec<f64> = rows.into_iter().flatten().map(|p| p.max(0.0)).collect();
    let dist = JointIntegerDistribution::from_dense(
        a_lo as i64 - site_a.offset,
        a_hi as i64 - site_a.offset,
        b_lo as i64 - site_b.offset,
        b_hi as i64 - site_b.offset,
        probs,
    )?;
    let deficit = dist.mass_deficit();
    if deficit > MASS_DEFICIT_LIMIT {
        warn!("exact distribution captured only {} of the probability", 1.0 - deficit);
    }
    Ok(dist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{SchmidtState, DEFAULT_TAIL_TOL};

    #[test]
    fn pair_index_is_dense() {
        let n_max = 6;
        let mut seen = Vec::new();
        for n in 0..=n_max {
            for m in n..=n_max {
                seen.push(pair_index(n, m, n_max));
            }
        }
        let want: Vec<usize> = (0..seen.len()).collect();
        assert_eq!(seen, want);
    }

    #[test]
    fn vacuum_signal_factorizes_and_is_symmetric() {
        let s = SchmidtState::pair_coherent(0.0, 3.0, 3.0, DEFAULT_TAIL_TOL).unwrap();
        let d = exact_joint_distribution(&s, 0.4, -1.3).unwrap();
        assert!(d.mass_deficit() < 1e-12);
        let ma = d.marginal_a();
        let mb = d.marginal_b();
        for &(i, pi) in &ma {
            for &(j, pj) in &mb {
                assert!((d.get(i, j) - pi * pj).abs() < 1e-14);
            }
            let mirrored = ma.iter().find(|(k, _)| *k == -i).map(|x| x.1).unwrap_or(0.0);
            assert!((pi - mirrored).abs() < 1e-14, "i={i}");
        }
    }

    #[test]
    fn amplitude_bound_is_enforced() {
        let s = SchmidtState::pair_coherent(1.1, 12.5, 10.0, DEFAULT_TAIL_TOL).unwrap();
        assert!(matches!(
            exact_joint_distribution(&s, 0.0, 0.0),
            Err(Error::WindowOverflow { .. })
        ));
    }

    #[test]
    fn depends_on_angles_only_through_their_sum() {
        let s = SchmidtState::pair_coherent(1.1, 4.0, 4.0, DEFAULT_TAIL_TOL).unwrap();
        let a = exact_joint_distribution(&s, 0.3, 0.5).unwrap();
        let b = exact_joint_distribution(&s, 1.1, -0.3).unwrap();
        assert!(a.max_abs_difference(&b) < 1e-15);
    }

    #[test]
    fn asymmetric_oscillators_keep_normalization() {
        let s = SchmidtState::pair_coherent(1.1, 3.0, 5.0, DEFAULT_TAIL_TOL).unwrap();
        let d = exact_joint_distribution(&s, 0.0, -0.7).unwrap();
        assert!(d.mass_deficit() < 1e-10);
    }
}
