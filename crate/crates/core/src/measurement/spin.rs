//! Rotated-polarizer readout of the spin-pair state.
//!
//! At site A the detected modes are `c₊ = a₊' cos(θ/2) + a₋' sin(θ/2)` and
//! `c₋ = a₊' sin(θ/2) − a₋' cos(θ/2)`, outcome `i = n(c₊) − n(c₋)`.

use rayon::prelude::*;

use super::JointIntegerDistribution;
use crate::error::{domain, Result};
use crate::states::SpinPairState;

/// `U[p * (N+1) + k] = <p, N-p|_c |k, N-k>_{a'}` for the polarizer angle `theta`.
///
/// The transform is a sign flip of the `-` mode followed by a rotation by
/// `θ/2` in the `(c₊, c₋)` plane, so `U = exp((θ/2) L) · diag((-1)^{N-k})` with
/// `L = c₋†c₊ − c₊†c₋`. The exponential is taken by scaling and squaring; every
/// factor is orthogonal, which keeps the result orthogonal to rounding even
/// at `N = 200`.
pub fn spin_rotation_matrix(n: usize, theta: f64) -> Vec<f64> {
    let dim = n + 1;
    let half = 0.5 * theta;
    // generator, scaled so its infinity norm is at most 1/2
    let mut gen = vec![0.0; dim * dim];
    for p in 0..dim {
        if p >= 1 {
            gen[(p - 1) * dim + p] = ((p * (n - p + 1)) as f64).sqrt();
        }
        if p < n {
            gen[(p + 1) * dim + p] = -(((p + 1) * (n - p)) as f64).sqrt();
        }
    }
    let norm = (0..dim)
        .map(|r| gen[r * dim..(r + 1) * dim].iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
        * half.abs();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scale = half * f64::powi(0.5, squarings as i32);
    for g in gen.iter_mut() {
        *g *= scale;
    }

    // Taylor series of exp(gen)
    let mut out = identity(dim);
    let mut term = identity(dim);
    for order in 1..=30 {
        term = matmul(&term, &gen, dim);
        let inv = 1.0 / order as f64;
        let mut biggest: f64 = 0.0;
        for (o, t) in out.iter_mut().zip(term.iter_mut()) {
            *t *= inv;
            *o += *t;
            biggest = biggest.max(t.abs());
        }
        if biggest < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        out = matmul(&out, &out, dim);
    }
    for k in 0..dim {
        if (n - k) % 2 == 1 {
            for p in 0..dim {
                out[p * dim + k] = -out[p * dim + k];
            }
        }
    }
    out
}

fn identity(dim: usize) -> Vec<f64> {
    let mut m = vec![0.0; dim * dim];
    for i in 0..dim {
        m[i * dim + i] = 1.0;
    }
    m
}

fn matmul(a: &[f64], b: &[f64], dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim * dim];
    out.par_chunks_mut(dim).enumerate().for_each(|(i, row)| {
        for (k, &aik) in a[i * dim..(i + 1) * dim].iter().enumerate() {
            if aik == 0.0 {
                continue;
            }
            for (r, bkj) in row.iter_mut().zip(&b[k * dim..(k + 1) * dim]) {
                *r += aik * bkj;
            }
        }
    });
    out
}

/// `P(i, j)` with `i = 2 m_A`, `j = 2 m_B`; amplitude
/// `(N+1)^{-1/2} Σ_k U^θ_{p,k} U^φ_{q,k}` for `p = (N+i)/2`, `q = (N+j)/2`.
pub fn spin_joint_distribution(state: &SpinPairState, theta: f64, phi: f64) -> Result<JointIntegerDistribution> {
    if !theta.is_finite() || !phi.is_finite() {
        return Err(domain("angle", if theta.is_finite() { phi } else { theta }, "angles must be finite"));
    }
    let n = state.photons() as usize;
    let dim = n + 1;
    let ua = spin_rotation_matrix(n, theta);
    let ub = spin_rotation_matrix(n, phi);
    let norm = 1.0 / dim as f64;

    let amp_sq: Vec<Vec<f64>> = (0..dim)
        .into_par_iter()
        .map(|p| {
            let row_a = &ua[p * dim..(p + 1) * dim];
            (0..dim)
                .map(|q| {
                    let row_b = &ub[q * dim..(q + 1) * dim];
                    let a: f64 = row_a.iter().zip(row_b).map(|(x, y)| x * y).sum();
                    a * a * norm
                })
                .collect()
        })
        .collect();

    let side = 2 * n + 1;
    let mut probs = vec![0.0; side * side];
    for (p, row) in amp_sq.iter().enumerate() {
        for (q, v) in row.iter().enumerate() {
            probs[2 * p * side + 2 * q] = *v;
        }
    }
    let edge = n as i64;
    JointIntegerDistribution::from_dense(-edge, edge, -edge, edge, probs)
}
