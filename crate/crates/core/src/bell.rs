//! Noisy binarized readout, the CH ratio `S`, its noise cutoff, and the angle
//! search for the spin-pair family.
//!
//! A readout `i` plus zero-mean Gaussian noise of width `σ` is classified `+`
//! when the sum is `>= 0`, which happens with probability `Φ(i/σ)`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::measurement::{
    apply_loss_quadrature, exact_joint_distribution, quadrature_joint_density, spin_joint_distribution, GridSpec,
    JointIntegerDistribution, JointQuadratureDensity, LossChannel, MASS_DEFICIT_LIMIT,
};
use crate::numkernel::gaussian_tail;
use crate::states::{SchmidtState, SpinPairState};

/// Denominators of `S` below this are treated as degenerate.
pub const MIN_DENOMINATOR: f64 = 1e-12;

/// Coarse cutoff scan: at least this many steps of `scale / 8`.
const MIN_SCAN_STEPS: usize = 64;
const MAX_SCAN_STEPS: usize = 4096;
/// Rounding slack allowed when asserting `S(σ)` is nonincreasing.
const MONOTONE_SLACK: f64 = 1e-12;

/// Points in the coarse `ψ` scan over `(0, π/2]`.
pub const PSI_SCAN_POINTS: usize = 200;
/// Width of the final golden-section bracket in radians.
pub const PSI_TOL: f64 = 1e-6;

/// Gaussian readout noise plus detector efficiency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    sigma: f64,
    eta: f64,
}

impl NoiseModel {
    pub fn new(sigma: f64, eta: f64) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(domain("sigma", sigma, "noise width must be finite and >= 0"));
        }
        LossChannel::new(eta)?;
        Ok(Self { sigma, eta })
    }

    /// Lossless detectors with readout noise `sigma`.
    pub fn readout(sigma: f64) -> Result<Self> {
        Self::new(sigma, 1.0)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
}

/// Analyzer angles `(θ, φ, θ′, φ′)` in radians, stored unreduced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChSettings {
    pub theta: f64,
    pub phi: f64,
    pub theta_prime: f64,
    pub phi_prime: f64,
}

impl ChSettings {
    pub fn new(theta: f64, phi: f64, theta_prime: f64, phi_prime: f64) -> Result<Self> {
        for (name, v) in [("theta", theta), ("phi", phi), ("theta'", theta_prime), ("phi'", phi_prime)] {
            if !v.is_finite() {
                return Err(domain(name, v, "angles must be finite"));
            }
        }
        Ok(Self {
            theta,
            phi,
            theta_prime,
            phi_prime,
        })
    }

    /// `(0, −π/4, π/2, −3π/4)`, the settings used for the pair-coherent source.
    pub fn pair_coherent_default() -> Self {
        Self {
            theta: 0.0,
            phi: -FRAC_PI_4,
            theta_prime: FRAC_PI_2,
            phi_prime: -3.0 * FRAC_PI_4,
        }
    }

    /// Equally spaced settings `(0, ψ, 2ψ, 3ψ)`.
    pub fn from_psi(psi: f64) -> Self {
        Self {
            theta: 0.0,
            phi: psi,
            theta_prime: 2.0 * psi,
            phi_prime: 3.0 * psi,
        }
    }

    /// The four joint settings in the order `(θ,φ), (θ,φ′), (θ′,φ), (θ′,φ′)`.
    pub fn pairs(&self) -> [(f64, f64); 4] {
        [
            (self.theta, self.phi),
            (self.theta, self.phi_prime),
            (self.theta_prime, self.phi),
            (self.theta_prime, self.phi_prime),
        ]
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.theta, self.phi, self.theta_prime, self.phi_prime]
    }
}

/// `P₊₊`, `P₊^A`, `P₊^B` for one pair of settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinarizedProbs {
    pub p_pp: f64,
    pub p_a: f64,
    pub p_b: f64,
}

/// Distributions that can be turned into `+`/`−` statistics under readout noise.
///
/// Probabilities are taken relative to the captured mass, so a window that
/// misses `1e-9` of the probability does not bias the ratios.
pub trait Binarize {
    fn binarize(&self, sigma: f64) -> BinarizedProbs;
}

fn check_sigma(sigma: f64) {
    assert!(sigma >= 0.0 && sigma.is_finite(), "sigma must be finite and >= 0, got {sigma}");
}

impl Binarize for JointIntegerDistribution {
    fn binarize(&self, sigma: f64) -> BinarizedProbs {
        check_sigma(sigma);
        let (_, _, j_min, j_max) = self.window();
        let wb: Vec<f64> = (j_min..=j_max).map(|j| gaussian_tail(j as f64, sigma)).collect();
        let (mut mass, mut pp, mut pa, mut pb) = (0.0, 0.0, 0.0, 0.0);
        for (i, row) in self.rows() {
            let wa = gaussian_tail(i as f64, sigma);
            let row_mass: f64 = row.iter().sum();
            let row_b: f64 = row.iter().zip(&wb).map(|(p, w)| p * w).sum();
            mass += row_mass;
            pa += wa * row_mass;
            pb += row_b;
            pp += wa * row_b;
        }
        BinarizedProbs {
            p_pp: pp / mass,
            p_a: pa / mass,
            p_b: pb / mass,
        }
    }
}

/// Per-node `+` weight on a grid. For `σ = 0` each node stands for the cell
/// `[x − h/2, x + h/2]`, so the node at the origin counts half.
fn grid_weights(grid: &GridSpec, sigma: f64) -> Vec<f64> {
    let h = grid.step();
    grid.points()
        .into_iter()
        .map(|x| {
            if sigma > 0.0 {
                gaussian_tail(x, sigma)
            } else {
                ((x + 0.5 * h) / h).clamp(0.0, 1.0)
            }
        })
        .collect()
}

impl Binarize for JointQuadratureDensity {
    fn binarize(&self, sigma: f64) -> BinarizedProbs {
        check_sigma(sigma);
        let w = grid_weights(self.grid(), sigma);
        let n = w.len();
        let v = self.values();
        let (mut mass, mut pp, mut pa, mut pb) = (0.0, 0.0, 0.0, 0.0);
        for (ix, wa) in w.iter().enumerate() {
            let row = &v[ix * n..(ix + 1) * n];
            let row_mass: f64 = row.iter().sum();
            let row_b: f64 = row.iter().zip(&w).map(|(p, wb)| p * wb).sum();
            mass += row_mass;
            pa += wa * row_mass;
            pb += row_b;
            pp += wa * row_b;
        }
        BinarizedProbs {
            p_pp: pp / mass,
            p_a: pa / mass,
            p_b: pb / mass,
        }
    }
}

/// Binarized statistics of `dist` under `noise.sigma`.
pub fn binarized_probs<D: Binarize + ?Sized>(dist: &D, noise: &NoiseModel) -> BinarizedProbs {
    dist.binarize(noise.sigma)
}

/// Everything entering `S` at one noise level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChEvaluation {
    pub settings: ChSettings,
    pub sigma: f64,
    /// `P₊₊` at `(θ,φ), (θ,φ′), (θ′,φ), (θ′,φ′)`.
    pub p_pp: [f64; 4],
    /// `P₊^A(θ′)`
    pub p_a: f64,
    /// `P₊^B(φ)`
    pub p_b: f64,
    pub s: f64,
}

impl ChEvaluation {
    fn assemble(settings: ChSettings, sigma: f64, probs: &[BinarizedProbs; 4]) -> Result<Self> {
        let p_pp = [probs[0].p_pp, probs[1].p_pp, probs[2].p_pp, probs[3].p_pp];
        // P_A(θ′) from the (θ′, φ) run, P_B(φ) from the (θ, φ) run
        let p_a = probs[2].p_a;
        let p_b = probs[0].p_b;
        let den = p_a + p_b;
        if !(den > MIN_DENOMINATOR) {
            return Err(Error::DegenerateDenominator(den));
        }
        let s = (p_pp[0] - p_pp[1] + p_pp[2] + p_pp[3]) / den;
        Ok(Self {
            settings,
            sigma,
            p_pp,
            p_a,
            p_b,
            s,
        })
    }

    /// Whether the evaluation violates the CH bound `S <= 1`.
    pub fn violates(&self) -> bool {
        self.s > 1.0
    }
}

/// A state together with the measurement scheme used to read it out.
#[derive(Debug, Clone)]
pub enum Source {
    /// Finite-amplitude photon counting.
    Exact(SchmidtState),
    /// Large-oscillator limit on a quadrature grid; noise is in quadrature units.
    Quadrature { state: SchmidtState, grid: GridSpec },
    /// Spin-pair state through rotated polarizers.
    Spin(SpinPairState),
}

impl Source {
    /// Natural unit for the noise width: one quadrature unit in the
    /// asymptotic mode, `max(α, β)` photons in the exact mode, one photon for
    /// the spin-pair state.
    pub fn noise_scale(&self) -> f64 {
        match self {
            Source::Exact(s) => s.alpha().max(s.beta()).max(1.0),
            Source::Quadrature { .. } | Source::Spin(_) => 1.0,
        }
    }

    pub fn mode_name(&self) -> &'static str {
        match self {
            Source::Exact(_) => "exact",
            Source::Quadrature { .. } => "quadrature",
            Source::Spin(_) => "spin",
        }
    }
}

#[derive(Debug, Clone)]
enum Prepared {
    Integer(Vec<JointIntegerDistribution>),
    Grid(Vec<JointQuadratureDensity>),
}

/// The four joint distributions for one source and setting choice; `S` can
/// then be evaluated cheaply at any noise level.
#[derive(Debug, Clone)]
pub struct ChExperiment {
    settings: ChSettings,
    scale: f64,
    mode: &'static str,
    prepared: Prepared,
}

fn check_mass(deficit: f64) -> Result<()> {
    if deficit > MASS_DEFICIT_LIMIT {
        return Err(Error::MassDeficit {
            deficit,
            limit: MASS_DEFICIT_LIMIT,
        });
    }
    Ok(())
}

impl ChExperiment {
    /// Builds the distributions at the four setting pairs. Detector loss
    /// (`eta < 1`) is only modelled in the quadrature mode.
    pub fn prepare(source: &Source, settings: ChSettings, eta: f64) -> Result<Self> {
        let channel = LossChannel::new(eta)?;
        let pairs = settings.pairs();
        let prepared = match source {
            Source::Quadrature { state, grid } => {
                let dists = pairs
                    .par_iter()
                    .map(|&(t, p)| {
                        let d = quadrature_joint_density(state, t, p, grid)?;
                        let d = apply_loss_quadrature(&d, &channel);
                        check_mass(d.mass_deficit())?;
                        Ok(d)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Prepared::Grid(dists)
            }
            Source::Exact(state) => {
                if eta < 1.0 {
                    return Err(Error::Unsupported("detector loss in the exact counting mode".into()));
                }
                // the exact distribution depends on the angles only through θ+φ
                let mut dists: Vec<JointIntegerDistribution> = Vec::with_capacity(4);
                for (k, &(t, p)) in pairs.iter().enumerate() {
                    let reuse = (0..k).find(|&m| pairs[m].0 + pairs[m].1 == t + p);
                    let d = match reuse {
                        Some(m) => dists[m].clone(),
                        None => exact_joint_distribution(state, t, p)?,
                    };
                    check_mass(d.mass_deficit())?;
                    dists.push(d);
                }
                Prepared::Integer(dists)
            }
            Source::Spin(state) => {
                if eta < 1.0 {
                    return Err(Error::Unsupported("detector loss for the spin-pair state".into()));
                }
                let dists = pairs
                    .par_iter()
                    .map(|&(t, p)| {
                        let d = spin_joint_distribution(state, t, p)?;
                        check_mass(d.mass_deficit())?;
                        Ok(d)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Prepared::Integer(dists)
            }
        };
        Ok(Self {
            settings,
            scale: source.noise_scale(),
            mode: source.mode_name(),
            prepared,
        })
    }

    pub fn settings(&self) -> ChSettings {
        self.settings
    }

    pub fn noise_scale(&self) -> f64 {
        self.scale
    }

    pub fn mode_name(&self) -> &'static str {
        self.mode
    }

    /// Binarized statistics of the four runs at noise `sigma`.
    pub fn binarized(&self, sigma: f64) -> [BinarizedProbs; 4] {
        let f = |k: usize| match &self.prepared {
            Prepared::Integer(d) => d[k].binarize(sigma),
            Prepared::Grid(d) => d[k].binarize(sigma),
        };
        [f(0), f(1), f(2), f(3)]
    }

    pub fn evaluate(&self, sigma: f64) -> Result<ChEvaluation> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(domain("sigma", sigma, "noise width must be finite and >= 0"));
        }
        ChEvaluation::assemble(self.settings, sigma, &self.binarized(sigma))
    }

    /// Largest noise width that still violates the CH bound.
    ///
    /// `S(σ)` is scanned upward in steps of `scale/8` (at least 64 steps, and
    /// on while `S > 1`), must not increase anywhere along the scan, and the
    /// last crossing of `S = 1` is refined by bisection until the bracket is
    /// narrower than `tol · scale`.
    pub fn sigma_cutoff(&self, tol: f64) -> Result<SigmaCutoff> {
        if !(tol > 0.0 && tol <= 1e-3) {
            return Err(domain("tol", tol, "cutoff tolerance must lie in (0, 1e-3]"));
        }
        let s0 = self.evaluate(0.0)?.s;
        let mut scan = vec![(0.0, s0)];
        if s0 <= 1.0 {
            return Ok(SigmaCutoff {
                sigma_c: 0.0,
                s_at_zero: s0,
                violated: false,
                scan,
            });
        }
        let step = self.scale / 8.0;
        let mut next = 1;
        loop {
            let chunk: Vec<(f64, f64)> = (next..next + MIN_SCAN_STEPS)
                .into_par_iter()
                .map(|k| {
                    let sigma = k as f64 * step;
                    self.evaluate(sigma).map(|e| (sigma, e.s))
                })
                .collect::<Result<_>>()?;
            next += MIN_SCAN_STEPS;
            scan.extend(chunk);
            let last = scan.last().unwrap();
            if last.1 <= 1.0 {
                break;
            }
            if next > MAX_SCAN_STEPS {
                return Err(Error::CutoffNotBracketed(last.0));
            }
        }
        for w in scan.windows(2) {
            if w[1].1 > w[0].1 + MONOTONE_SLACK {
                return Err(Error::NonMonotone {
                    sigma_before: w[0].0,
                    s_before: w[0].1,
                    sigma_after: w[1].0,
                    s_after: w[1].1,
                });
            }
        }
        let k = scan.iter().rposition(|&(_, s)| s > 1.0).expect("S(0) > 1");
        let (mut lo, mut hi) = (scan[k].0, scan[k + 1].0);
        while hi - lo > tol * self.scale {
            let mid = 0.5 * (lo + hi);
            if self.evaluate(mid)?.s > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(SigmaCutoff {
            sigma_c: 0.5 * (lo + hi),
            s_at_zero: s0,
            violated: true,
            scan,
        })
    }
}

/// Result of [`ChExperiment::sigma_cutoff`]. `sigma_c` is 0 when the
/// noiseless source does not violate.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaCutoff {
    pub sigma_c: f64,
    pub s_at_zero: f64,
    pub violated: bool,
    /// Coarse `(σ, S)` scan.
    pub scan: Vec<(f64, f64)>,
}

/// One-shot `S` evaluation.
pub fn ch_ratio(source: &Source, settings: ChSettings, noise: &NoiseModel) -> Result<ChEvaluation> {
    ChExperiment::prepare(source, settings, noise.eta)?.evaluate(noise.sigma)
}

/// One-shot noise cutoff search.
pub fn sigma_cutoff(source: &Source, settings: ChSettings, eta: f64, tol: f64) -> Result<SigmaCutoff> {
    ChExperiment::prepare(source, settings, eta)?.sigma_cutoff(tol)
}

/// Best equally spaced settings for the spin-pair state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiOptimum {
    pub psi: f64,
    pub evaluation: ChEvaluation,
}

fn spin_s(state: &SpinPairState, psi: f64, noise: &NoiseModel) -> Result<ChEvaluation> {
    ch_ratio(&Source::Spin(*state), ChSettings::from_psi(psi), noise)
}

/// Maximizes `S` over settings `(0, ψ, 2ψ, 3ψ)`: a 200-point scan of
/// `(0, π/2]` followed by golden-section refinement of the best bracket.
pub fn optimize_psi(state: &SpinPairState, noise: &NoiseModel) -> Result<PsiOptimum> {
    let h = FRAC_PI_2 / PSI_SCAN_POINTS as f64;
    let scan: Vec<(f64, f64)> = (1..=PSI_SCAN_POINTS)
        .into_par_iter()
        .map(|k| {
            let psi = k as f64 * h;
            spin_s(state, psi, noise).map(|e| (psi, e.s))
        })
        .collect::<Result<_>>()?;
    let best = scan
        .iter()
        .enumerate()
        .fold(0, |b, (k, v)| if v.1 > scan[b].1 { k } else { b });

    let mut a = (scan[best].0 - h).max(0.0);
    let mut b = (scan[best].0 + h).min(FRAC_PI_2);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = spin_s(state, c, noise)?.s;
    let mut fd = spin_s(state, d, noise)?.s;
    while b - a > PSI_TOL {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = spin_s(state, c, noise)?.s;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = spin_s(state, d, noise)?.s;
        }
    }
    let refined = 0.5 * (a + b);
    let refined_eval = spin_s(state, refined, noise)?;
    // keep the scan point if refinement lands on a flat or noisy plateau
    let (psi, evaluation) = if refined_eval.s >= scan[best].1 {
        (refined, refined_eval)
    } else {
        (scan[best].0, spin_s(state, scan[best].0, noise)?)
    };
    Ok(PsiOptimum { psi, evaluation })
}
