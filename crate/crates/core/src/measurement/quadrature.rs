//! Large-oscillator limit: the number differences become `α X_θ` and `β X_φ`
//! with `X_θ = a₋ e^{-iθ} + a₋† e^{iθ}`. Since `<x|_θ |n> = e^{-inθ} ψ_n(x)`, the
//! Schmidt state has the joint quadrature amplitude
//! `Σ_n c_n e^{-in(θ+φ)} ψ_n(x) ψ_n(y)`.

use rayon::prelude::*;

use super::{GridSpec, JointQuadratureDensity, LossChannel};
use crate::error::{domain, Error, Result};
use crate::numkernel::hermite_table;
use crate::states::SchmidtState;

/// Widest acceptable grid step and narrowest acceptable half-range.
const MAX_STEP: f64 = 1.0 / 32.0;
const MIN_HALF_RANGE: f64 = 8.0;

fn check_grid(grid: &GridSpec) -> Result<()> {
    if grid.step() > MAX_STEP + 1e-15 {
        return Err(domain("step", grid.step(), "quadrature grid step must be at most 1/32"));
    }
    if grid.min() > -MIN_HALF_RANGE || grid.max() < MIN_HALF_RANGE {
        return Err(Error::InvalidConfig(format!(
            "quadrature grid [{}, {}] must cover [-8, 8]",
            grid.min(),
            grid.max()
        )));
    }
    Ok(())
}

/// `|Σ_n c_n e^{-in(θ+φ)} ψ_n(x) ψ_n(y)|²` sampled on `grid`.
pub fn quadrature_joint_density(
    state: &SchmidtState,
    theta: f64,
    phi: f64,
    grid: &GridSpec,
) -> Result<JointQuadratureDensity> {
    check_grid(grid)?;
    if !theta.is_finite() || !phi.is_finite() {
        return Err(domain("angle", if theta.is_finite() { phi } else { theta }, "angles must be finite"));
    }
    let xs = grid.points();
    let psi = hermite_table(state.n_max(), &xs)?;
    let total = theta + phi;
    let c = state.coefficients();
    let re_w: Vec<f64> = c.iter().enumerate().map(|(n, v)| v * (n as f64 * total).cos()).collect();
    let im_w: Vec<f64> = c.iter().enumerate().map(|(n, v)| -v * (n as f64 * total).sin()).collect();

    // psi transposed: one contiguous row of orders per grid point
    let by_point: Vec<Vec<f64>> = (0..xs.len())
        .map(|k| psi.iter().map(|row| row[k]).collect())
        .collect();

    let values: Vec<f64> = by_point
        .par_iter()
        .flat_map_iter(|px| {
            let re_x: Vec<f64> = re_w.iter().zip(px).map(|(w, p)| w * p).collect();
            let im_x: Vec<f64> = im_w.iter().zip(px).map(|(w, p)| w * p).collect();
            by_point.iter().map(move |py| {
                let re: f64 = re_x.iter().zip(py).map(|(a, b)| a * b).sum();
                let im: f64 = im_x.iter().zip(py).map(|(a, b)| a * b).sum();
                re * re + im * im
            })
        })
        .collect();
    JointQuadratureDensity::from_values(*grid, values)
}

/// Detector loss in the quadrature limit: each readout becomes
/// `η X + N(0, 1 - η)`, applied as a per-axis scaling by `η` followed by a
/// Gaussian convolution of width `sqrt(1 - η)`.
///
/// The kernel is column-normalized on the grid so that mass is conserved even
/// when the noise width drops below the grid step.
pub fn apply_loss_quadrature(density: &JointQuadratureDensity, channel: &LossChannel) -> JointQuadratureDensity {
    let eta = channel.eta();
    if eta == 1.0 {
        return density.clone();
    }
    let grid = *density.grid();
    let n = grid.len();
    let xs = grid.points();
    let s = channel.vacuum_noise();

    // kernel[k * n + l]: weight moving input point l to output point k
    let mut kernel = vec![0.0; n * n];
    for l in 0..n {
        let centre = eta * xs[l];
        let mut col_sum = 0.0;
        for k in 0..n {
            let z = (xs[k] - centre) / s;
            let w = (-0.5 * z * z).exp();
            kernel[k * n + l] = w;
            col_sum += w;
        }
        if col_sum > 0.0 {
            for k in 0..n {
                kernel[k * n + l] /= col_sum;
            }
        } else {
            let nearest = (((centre - grid.min()) / grid.step()).round() as usize).min(n - 1);
            kernel[nearest * n + l] = 1.0;
        }
    }

    let input = density.values();
    // along x: tmp[k][y] = Σ_l K[k][l] f[l][y]
    let tmp: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|k| {
            let mut row = vec![0.0; n];
            for l in 0..n {
                let w = kernel[k * n + l];
                if w == 0.0 {
                    continue;
                }
                for (r, f) in row.iter_mut().zip(&input[l * n..(l + 1) * n]) {
                    *r += w * f;
                }
            }
            row
        })
        .collect();
    // along y: out[x][k] = Σ_l K[k][l] tmp[x][l]
    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|x| {
            let src = &tmp[x * n..(x + 1) * n];
            let kernel = &kernel;
            (0..n).map(move |k| {
                kernel[k * n..(k + 1) * n]
                    .iter()
                    .zip(src)
                    .map(|(w, f)| w * f)
                    .sum::<f64>()
            })
        })
        .collect();
    JointQuadratureDensity::from_values(grid, values).expect("loss preserves grid shape and sign")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::DEFAULT_TAIL_TOL;

    fn state(r0: f64) -> SchmidtState {
        SchmidtState::pair_coherent(r0, 10.0, 10.0, DEFAULT_TAIL_TOL).unwrap()
    }

    #[test]
    fn vacuum_is_product_of_unit_variance_gaussians() {
        let d = quadrature_joint_density(&state(0.0), 0.2, 0.9, &GridSpec::standard()).unwrap();
        assert!(d.mass_deficit() < 1e-6);
        let (mx, vx) = d.moments(&d.marginal_x());
        let (my, vy) = d.moments(&d.marginal_y());
        assert!(mx.abs() < 1e-12 && my.abs() < 1e-12);
        assert!((vx - 1.0).abs() < 1e-9 && (vy - 1.0).abs() < 1e-9);
        let g = |x: f64| (-x * x / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let grid = d.grid();
        for &(ix, iy) in &[(256, 256), (200, 300), (100, 400)] {
            let want = g(grid.point(ix)) * g(grid.point(iy));
            assert!((d.get(ix, iy) - want).abs() < 1e-14);
        }
    }

    #[test]
    fn density_is_normalized_and_symmetric_under_swap() {
        let d = quadrature_joint_density(&state(1.1), 0.0, -std::f64::consts::FRAC_PI_4, &GridSpec::standard())
            .unwrap();
        assert!(d.mass_deficit() < 1e-6);
        let n = d.grid().len();
        for &(a, b) in &[(10, 300), (256, 100), (400, 401)] {
            assert!((d.get(a, b) - d.get(b, a)).abs() < 1e-15);
        }
        assert_eq!(d.values().len(), n * n);
    }

    #[test]
    fn depends_on_angles_only_through_their_sum() {
        let g = GridSpec::standard();
        let a = quadrature_joint_density(&state(1.1), 0.4, 0.2, &g).unwrap();
        let b = quadrature_joint_density(&state(1.1), -0.9, 1.5, &g).unwrap();
        let worst = a
            .values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-13);
    }

    #[test]
    fn rejects_coarse_or_narrow_grids() {
        let s = state(1.1);
        assert!(quadrature_joint_density(&s, 0.0, 0.0, &GridSpec::new(-8.0, 8.0, 0.0625).unwrap()).is_err());
        assert!(quadrature_joint_density(&s, 0.0, 0.0, &GridSpec::new(-6.0, 6.0, 1.0 / 32.0).unwrap()).is_err());
    }

    #[test]
    fn lossless_channel_is_identity() {
        let d = quadrature_joint_density(&state(1.1), 0.0, 0.3, &GridSpec::standard()).unwrap();
        assert_eq!(apply_loss_quadrature(&d, &LossChannel::lossless()), d);
    }

    #[test]
    fn loss_propagates_second_moments() {
        let g = GridSpec::new(-12.0, 12.0, 1.0 / 32.0).unwrap();
        let d = quadrature_joint_density(&state(1.1), 0.0, 0.0, &g).unwrap();
        let lossy = apply_loss_quadrature(&d, &LossChannel::new(0.5).unwrap());
        let (_, v_in) = d.moments(&d.marginal_x());
        let (_, v_out) = lossy.moments(&lossy.marginal_x());
        assert!((v_out - (0.25 * v_in + 0.5)).abs() < 1e-6, "{v_out} vs {}", 0.25 * v_in + 0.5);
        let (_, vy_out) = lossy.moments(&lossy.marginal_y());
        assert!((vy_out - (0.25 * v_in + 0.5)).abs() < 1e-6);
        assert!(lossy.mass_deficit() < 1e-6);
    }

    #[test]
    fn narrow_loss_noise_keeps_mass() {
        let d = quadrature_joint_density(&state(1.1), 0.0, 0.0, &GridSpec::standard()).unwrap();
        let lossy = apply_loss_quadrature(&d, &LossChannel::new(1.0 - 1e-12).unwrap());
        assert!(lossy.mass_deficit() < 1e-6);
    }
}
