//! Slow, independent reference computations for the production distribution
//! builders: a literal four-mode Fock tensor, a seeded Monte Carlo sampler of
//! the noisy binarized readout, and a symbolic expansion of the spin-pair state.
//!
//! None of these share code paths with `measurement` beyond the output type.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::bell::NoiseModel;
use crate::error::{domain, Error, Result};
use crate::measurement::JointIntegerDistribution;

pub const MAX_DENSE_AMPLITUDE: f64 = 3.0;
pub const MAX_DENSE_CUTOFF: usize = 40;
/// Largest norm the truncated tensor may miss.
pub const CUTOFF_MASS_LIMIT: f64 = 1e-8;
pub const MIN_MC_SAMPLES: u64 = 10_000;
pub const MAX_SYMBOLIC_N: u32 = 4;

/// Independent Monte Carlo streams; fixed so tallies do not depend on the
/// thread count.
const MC_STREAMS: u64 = 64;

fn ln_fact(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

fn binomial_i128(n: usize, k: usize) -> i128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: i128 = 1;
    for t in 0..k {
        acc = acc * (n - t) as i128 / (t + 1) as i128;
    }
    acc
}

/// Amplitudes `ψ[k₊][k₋][l₊][l₋]` over the modes `(a₊, a₋, b₊, b₋)`, each
/// truncated at `cutoff` photons.
#[derive(Debug, Clone)]
pub struct DenseFockTensor {
    cutoff: usize,
    data: Vec<Complex64>,
}

impl DenseFockTensor {
    /// `Σ_n c_n |α>|n>|β>|n>` with `c_n ∝ (r0²)^n / n!`, built cell by cell.
    /// The pair coefficients are normalized by direct summation of the series
    /// far past the cutoff, so the tensor norm exposes the truncation loss.
    pub fn pair_coherent(r0: f64, alpha: f64, beta: f64, cutoff: usize) -> Result<Self> {
        if !(0.0..=MAX_DENSE_AMPLITUDE).contains(&alpha) || !(0.0..=MAX_DENSE_AMPLITUDE).contains(&beta) {
            return Err(domain("alpha", alpha.max(beta), "dense oracle supports amplitudes up to 3"));
        }
        if cutoff > MAX_DENSE_CUTOFF || cutoff == 0 {
            return Err(domain("cutoff", cutoff as f64, "dense oracle cutoff must lie in 1..=40"));
        }
        if !(0.0..=3.0).contains(&r0) {
            return Err(domain("r0", r0, "pump parameter must lie in [0, 3]"));
        }
        let x = r0 * r0;
        let series: Vec<f64> = (0..400)
            .map(|n| if x == 0.0 { if n == 0 { 1.0 } else { 0.0 } } else { (n as f64 * x.ln() - ln_fact(n)).exp() })
            .collect();
        let norm: f64 = series.iter().map(|v| v * v).sum::<f64>().sqrt();
        let coherent = |amp: f64, k: usize| -> f64 {
            if amp == 0.0 {
                return if k == 0 { 1.0 } else { 0.0 };
            }
            (-0.5 * amp * amp + k as f64 * amp.ln() - 0.5 * ln_fact(k)).exp()
        };
        let d = cutoff + 1;
        let mut data = vec![Complex64::new(0.0, 0.0); d * d * d * d];
        for kp in 0..d {
            for n in 0..d {
                for lp in 0..d {
                    let v = series[n] / norm * coherent(alpha, kp) * coherent(beta, lp);
                    data[((kp * d + n) * d + lp) * d + n] = Complex64::new(v, 0.0);
                }
            }
        }
        let t = Self { cutoff, data };
        let missing = 1.0 - t.norm_sqr();
        if missing > CUTOFF_MASS_LIMIT {
            return Err(Error::CutoffMass(missing));
        }
        Ok(t)
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn get(&self, kp: usize, km: usize, lp: usize, lm: usize) -> Complex64 {
        let d = self.cutoff + 1;
        self.data[((kp * d + km) * d + lp) * d + lm]
    }
}

/// `<p, T-p|_{c'} |k, T-k>_a` for `c'± = (a₊ ± a₋ e^{-iφ})/√2`, from
/// `a₊† = (c'₊† + c'₋†)/√2`, `a₋† = e^{-iφ}(c'₊† − c'₋†)/√2` with exact integer
/// binomial sums.
fn beam_splitter_block(total: usize, angle: f64) -> Vec<Vec<Complex64>> {
    let mut u = vec![vec![Complex64::new(0.0, 0.0); total + 1]; total + 1];
    for k in 0..=total {
        let l = total - k;
        let phase = Complex64::from_polar(1.0, -(l as f64) * angle);
        for p in 0..=total {
            let mut sum: i128 = 0;
            for r in 0..=k.min(p) {
                let s = p - r;
                if s > l {
                    continue;
                }
                let term = binomial_i128(k, r) * binomial_i128(l, s);
                if (l - s) % 2 == 1 {
                    sum -= term;
                } else {
                    sum += term;
                }
            }
            if sum == 0 {
                continue;
            }
            let ln_mag = 0.5 * (ln_fact(p) + ln_fact(total - p) - ln_fact(k) - ln_fact(l)) - 0.5 * total as f64 * std::f64::consts::LN_2;
            u[p][k] = phase * (sum as f64) * ln_mag.exp();
        }
    }
    u
}

/// Builds the four-mode tensor, sends each site through its beam splitter and
/// tallies `|amplitude|²` by count difference.
pub fn dense_state_and_measure(r0: f64, alpha: f64, theta: f64, phi: f64, cutoff: usize) -> Result<JointIntegerDistribution> {
    let tensor = DenseFockTensor::pair_coherent(r0, alpha, alpha, cutoff)?;
    measure_dense(&tensor, theta, phi)
}

/// Count-difference distribution of an arbitrary dense tensor.
pub fn measure_dense(tensor: &DenseFockTensor, theta: f64, phi: f64) -> Result<JointIntegerDistribution> {
    let c = tensor.cutoff();
    let max_total = 2 * c;
    let blocks_a: Vec<_> = (0..=max_total).map(|t| beam_splitter_block(t, theta)).collect();
    let blocks_b: Vec<_> = (0..=max_total).map(|t| beam_splitter_block(t, phi)).collect();
    let k_range = |t: usize| t.saturating_sub(c)..=t.min(c);

    let partial: Vec<BTreeMap<(i64, i64), f64>> = (0..=max_total)
        .into_par_iter()
        .map(|ta| {
            let mut acc = BTreeMap::new();
            let ua = &blocks_a[ta];
            for tb in 0..=max_total {
                let ub = &blocks_b[tb];
                // m[p][k'] = Σ_k U_A[p][k] ψ[k, ta-k, k', tb-k']
                let mut m = vec![vec![Complex64::new(0.0, 0.0); tb + 1]; ta + 1];
                let mut any = false;
                for k in k_range(ta) {
                    for kb in k_range(tb) {
                        let psi = tensor.get(k, ta - k, kb, tb - kb);
                        if psi.norm_sqr() == 0.0 {
                            continue;
                        }
                        any = true;
                        for (p, row) in m.iter_mut().enumerate() {
                            row[kb] += ua[p][k] * psi;
                        }
                    }
                }
                if !any {
                    continue;
                }
                for (p, row) in m.iter().enumerate() {
                    for q in 0..=tb {
                        let amp: Complex64 = k_range(tb).map(|kb| ub[q][kb] * row[kb]).sum();
                        let prob = amp.norm_sqr();
                        if prob > 0.0 {
                            let i = 2 * p as i64 - ta as i64;
                            let j = 2 * q as i64 - tb as i64;
                            *acc.entry((i, j)).or_insert(0.0) += prob;
                        }
                    }
                }
            }
            acc
        })
        .collect();

    let mut total = BTreeMap::new();
    for part in partial {
        for (key, v) in part {
            *total.entry(key).or_insert(0.0) += v;
        }
    }
    JointIntegerDistribution::from_entries(total.into_iter().map(|((i, j), p)| (i, j, p)))
}

/// Empirical binarized statistics with binomial standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub n_samples: u64,
    pub count_pp: u64,
    pub count_a: u64,
    pub count_b: u64,
    pub p_pp: f64,
    pub p_a: f64,
    pub p_b: f64,
    pub se_pp: f64,
    pub se_a: f64,
    pub se_b: f64,
}

/// Draws `(i, j)` from `dist`, adds independent Gaussian noise of width
/// `noise.sigma` on each side and counts `+` outcomes (`value >= 0`).
pub fn mc_sample(dist: &JointIntegerDistribution, noise: &NoiseModel, n_samples: u64, seed: u64) -> Result<McEstimate> {
    if n_samples < MIN_MC_SAMPLES {
        return Err(domain("n_samples", n_samples as f64, "Monte Carlo needs at least 1e4 samples"));
    }
    let cells: Vec<(i64, i64, f64)> = dist.iter().collect();
    let mut cdf = Vec::with_capacity(cells.len());
    let mut run = 0.0;
    for c in &cells {
        run += c.2;
        cdf.push(run);
    }
    let mass = run;
    let sigma = noise.sigma();

    let per_stream = n_samples / MC_STREAMS;
    let extra = n_samples % MC_STREAMS;
    let tallies: Vec<[u64; 3]> = (0..MC_STREAMS)
        .into_par_iter()
        .map(|stream| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream);
            let count = per_stream + u64::from(stream < extra);
            let mut t = [0u64; 3];
            for _ in 0..count {
                let u: f64 = rng.random::<f64>() * mass;
                let idx = cdf.partition_point(|&c| c <= u).min(cells.len() - 1);
                let (i, j, _) = cells[idx];
                let (mut x, mut y) = (i as f64, j as f64);
                if sigma > 0.0 {
                    let na: f64 = StandardNormal.sample(&mut rng);
                    let nb: f64 = StandardNormal.sample(&mut rng);
                    x += sigma * na;
                    y += sigma * nb;
                }
                let (a, b) = (x >= 0.0, y >= 0.0);
                t[0] += u64::from(a && b);
                t[1] += u64::from(a);
                t[2] += u64::from(b);
            }
            t
        })
        .collect();
    let mut sum = [0u64; 3];
    for t in tallies {
        for k in 0..3 {
            sum[k] += t[k];
        }
    }
    let n = n_samples as f64;
    let est = |c: u64| {
        let p = c as f64 / n;
        (p, (p * (1.0 - p) / n).sqrt())
    };
    let (p_pp, se_pp) = est(sum[0]);
    let (p_a, se_a) = est(sum[1]);
    let (p_b, se_b) = est(sum[2]);
    Ok(McEstimate {
        n_samples,
        count_pp: sum[0],
        count_a: sum[1],
        count_b: sum[2],
        p_pp,
        p_a,
        p_b,
        se_pp,
        se_a,
        se_b,
    })
}

/// Polynomial in the four output creation operators `(c_A₊†, c_A₋†, c_B₊†, c_B₋†)`.
type Poly = BTreeMap<[u32; 4], f64>;

fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = Poly::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            let e = [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2], ea[3] + eb[3]];
            *out.entry(e).or_insert(0.0) += ca * cb;
        }
    }
    out
}

/// Fock amplitudes of the spin-pair state in the rotated output modes,
/// obtained by expanding `(a₊'†b₊'† + a₋'†b₋'†)^N / (N! sqrt(N+1))` after
/// substituting `a₊'† = cos c₊† + sin c₋†`, `a₋'† = sin c₊† − cos c₋†`
/// (half-angles `θ/2` at A and `φ/2` at B).
pub fn symbolic_spin_state(n: u32, theta: f64, phi: f64) -> Result<BTreeMap<[u32; 4], f64>> {
    if n == 0 || n > MAX_SYMBOLIC_N {
        return Err(domain("N", n as f64, "symbolic oracle supports 1 <= N <= 4"));
    }
    let (sa, ca) = (0.5 * theta).sin_cos();
    let (sb, cb) = (0.5 * phi).sin_cos();
    let plus_a: Poly = [([1, 0, 0, 0], ca), ([0, 1, 0, 0], sa)].into_iter().collect();
    let minus_a: Poly = [([1, 0, 0, 0], sa), ([0, 1, 0, 0], -ca)].into_iter().collect();
    let plus_b: Poly = [([0, 0, 1, 0], cb), ([0, 0, 0, 1], sb)].into_iter().collect();
    let minus_b: Poly = [([0, 0, 1, 0], sb), ([0, 0, 0, 1], -cb)].into_iter().collect();
    let mut pair = poly_mul(&plus_a, &plus_b);
    for (e, c) in poly_mul(&minus_a, &minus_b) {
        *pair.entry(e).or_insert(0.0) += c;
    }
    let mut acc: Poly = [([0, 0, 0, 0], 1.0)].into_iter().collect();
    for _ in 0..n {
        acc = poly_mul(&acc, &pair);
    }
    let fact = |m: u32| (1..=m).map(f64::from).product::<f64>();
    let prefactor = 1.0 / (fact(n) * f64::from(n + 1).sqrt());
    Ok(acc
        .into_iter()
        .map(|(e, c)| {
            // (c†)^m |0> = sqrt(m!) |m>
            let amp = c * prefactor * e.iter().map(|&m| fact(m).sqrt()).product::<f64>();
            (e, amp)
        })
        .collect())
}

/// Count-difference distribution from [`symbolic_spin_state`].
pub fn symbolic_spin_expand(n: u32, theta: f64, phi: f64) -> Result<JointIntegerDistribution> {
    let amps = symbolic_spin_state(n, theta, phi)?;
    JointIntegerDistribution::from_entries(amps.into_iter().map(|(e, a)| {
        (i64::from(e[0]) - i64::from(e[1]), i64::from(e[2]) - i64::from(e[3]), a * a)
    }))
}
