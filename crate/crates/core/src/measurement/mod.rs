//! Joint outcome statistics for the two measurement arrangements.
//!
//! * [`exact_joint_distribution`]: photon-number differences behind 50:50
//!   beam splitters mixing each signal mode with a coherent local oscillator,
//!   at finite oscillator amplitude.
//! * [`quadrature_joint_density`]: the large-amplitude limit, where the
//!   number difference at A reads `alpha * X_theta`.
//! * [`spin_joint_distribution`]: the rotated-polarizer readout of the
//!   spin-pair state.
//! * [`apply_loss_quadrature`]: detector inefficiency in the quadrature limit.

mod csv;
mod exact;
mod quadrature;
mod spin;

pub use self::csv::format_g12;
pub use self::exact::{exact_joint_distribution, CountWindow, MAX_EXACT_AMPLITUDE, WINDOW_SIGMAS};
pub use self::quadrature::{apply_loss_quadrature, quadrature_joint_density};
pub use self::spin::{spin_joint_distribution, spin_rotation_matrix};

use std::io::{self, Write};

use crate::error::{domain, Error, Result};

/// Captured-mass shortfall above which builders log a warning and the CH
/// evaluation refuses to proceed.
pub const MASS_DEFICIT_LIMIT: f64 = 1e-6;

/// Probability table over integer outcome pairs `(i, j)`, stored densely over
/// the rectangular window `i_min..=i_max` x `j_min..=j_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointIntegerDistribution {
    i_min: i64,
    i_max: i64,
    j_min: i64,
    j_max: i64,
    probs: Vec<f64>,
}

impl JointIntegerDistribution {
    /// Builds a distribution from row-major probabilities (`i` outer, `j` inner).
    /// Rounding-level negatives (above -1e-12) are clamped to zero.
    pub fn from_dense(i_min: i64, i_max: i64, j_min: i64, j_max: i64, mut probs: Vec<f64>) -> Result<Self> {
        if i_max < i_min || j_max < j_min {
            return Err(Error::InvalidConfig("empty outcome window".into()));
        }
        let want = ((i_max - i_min + 1) * (j_max - j_min + 1)) as usize;
        if probs.len() != want {
            return Err(Error::InvalidConfig(format!(
                "window holds {want} cells but {} probabilities were given",
                probs.len()
            )));
        }
        for p in probs.iter_mut() {
            if !p.is_finite() || *p < -1e-12 {
                return Err(domain("p", *p, "probabilities must be finite and nonnegative"));
            }
            *p = p.max(0.0);
        }
        Ok(Self {
            i_min,
            i_max,
            j_min,
            j_max,
            probs,
        })
    }

    /// Collects `(i, j, p)` triples; repeated cells accumulate.
    pub fn from_entries<I>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (i64, i64, f64)>,
    {
        let entries: Vec<_> = entries.into_iter().collect();
        if entries.is_empty() {
            return Err(Error::InvalidConfig("no entries".into()));
        }
        let i_min = entries.iter().map(|e| e.0).min().unwrap();
        let i_max = entries.iter().map(|e| e.0).max().unwrap();
        let j_min = entries.iter().map(|e| e.1).min().unwrap();
        let j_max = entries.iter().map(|e| e.1).max().unwrap();
        let width = (j_max - j_min + 1) as usize;
        let mut probs = vec![0.0; (i_max - i_min + 1) as usize * width];
        for (i, j, p) in entries {
            probs[(i - i_min) as usize * width + (j - j_min) as usize] += p;
        }
        Self::from_dense(i_min, i_max, j_min, j_max, probs)
    }

    /// All mass on a single outcome pair.
    pub fn point_mass(i: i64, j: i64) -> Self {
        Self {
            i_min: i,
            i_max: i,
            j_min: j,
            j_max: j,
            probs: vec![1.0],
        }
    }

    /// `(i_min, i_max, j_min, j_max)`.
    pub fn window(&self) -> (i64, i64, i64, i64) {
        (self.i_min, self.i_max, self.j_min, self.j_max)
    }

    fn width(&self) -> usize {
        (self.j_max - self.j_min + 1) as usize
    }

    pub fn get(&self, i: i64, j: i64) -> f64 {
        if i < self.i_min || i > self.i_max || j < self.j_min || j > self.j_max {
            return 0.0;
        }
        self.probs[(i - self.i_min) as usize * self.width() + (j - self.j_min) as usize]
    }

    /// Outcome values along the A axis.
    pub fn i_values(&self) -> impl Iterator<Item = i64> + '_ {
        self.i_min..=self.i_max
    }

    pub fn j_values(&self) -> impl Iterator<Item = i64> + '_ {
        self.j_min..=self.j_max
    }

    /// Rows of the dense table, one per `i`.
    pub fn rows(&self) -> impl Iterator<Item = (i64, &[f64])> + '_ {
        let w = self.width();
        (self.i_min..=self.i_max).zip(self.probs.chunks(w))
    }

    /// Nonzero cells in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (i64, i64, f64)> + '_ {
        let j_min = self.j_min;
        self.rows().flat_map(move |(i, row)| {
            row.iter()
                .enumerate()
                .filter(|(_, p)| **p != 0.0)
                .map(move |(dj, &p)| (i, j_min + dj as i64, p))
        })
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// `1 - total_mass`, floored at zero.
    pub fn mass_deficit(&self) -> f64 {
        (1.0 - self.total_mass()).max(0.0)
    }

    /// `P(i)` summed over `j`, indexed from `i_min`.
    pub fn marginal_a(&self) -> Vec<(i64, f64)> {
        self.rows().map(|(i, row)| (i, row.iter().sum())).collect()
    }

    /// `P(j)` summed over `i`, indexed from `j_min`.
    pub fn marginal_b(&self) -> Vec<(i64, f64)> {
        let mut acc = vec![0.0; self.width()];
        for (_, row) in self.rows() {
            for (a, p) in acc.iter_mut().zip(row) {
                *a += p;
            }
        }
        self.j_values().zip(acc).collect()
    }

    /// Largest absolute cell difference over the union of both windows.
    pub fn max_abs_difference(&self, other: &Self) -> f64 {
        let i_lo = self.i_min.min(other.i_min);
        let i_hi = self.i_max.max(other.i_max);
        let j_lo = self.j_min.min(other.j_min);
        let j_hi = self.j_max.max(other.j_max);
        let mut worst: f64 = 0.0;
        for i in i_lo..=i_hi {
            for j in j_lo..=j_hi {
                worst = worst.max((self.get(i, j) - other.get(i, j)).abs());
            }
        }
        worst
    }

    /// CSV with header `i,j,p`; zero cells are omitted.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "i,j,p")?;
        for (i, j, p) in self.iter() {
            writeln!(out, "{i},{j},{}", format_g12(p))?;
        }
        Ok(())
    }
}

/// Uniform axis `min, min + step, ..., max`, shared by both quadrature axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    min: f64,
    max: f64,
    step: f64,
}

impl GridSpec {
    pub fn new(min: f64, max: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(domain("step", step, "grid step must be positive"));
        }
        if !(max > min && min.is_finite() && max.is_finite()) {
            return Err(Error::InvalidConfig(format!("grid bounds [{min}, {max}] are empty")));
        }
        let cells = (max - min) / step;
        if (cells - cells.round()).abs() > 1e-9 * cells.max(1.0) {
            return Err(Error::InvalidConfig(format!(
                "grid step {step} does not divide [{min}, {max}]"
            )));
        }
        Ok(Self { min, max, step })
    }

    /// `[-8, 8]` with step `1/32`.
    pub fn standard() -> Self {
        Self {
            min: -8.0,
            max: 8.0,
            step: 1.0 / 32.0,
        }
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Number of points per axis.
    pub fn len(&self) -> usize {
        ((self.max - self.min) / self.step).round() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point(&self, k: usize) -> f64 {
        self.min + k as f64 * self.step
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.point(k)).collect()
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::standard()
    }
}

/// Joint density of the two quadrature readouts on a square grid; `x` (site A)
/// is the outer index.
#[derive(Debug, Clone, PartialEq)]
pub struct JointQuadratureDensity {
    grid: GridSpec,
    values: Vec<f64>,
}

impl JointQuadratureDensity {
    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        let n = grid.len();
        if values.len() != n * n {
            return Err(Error::InvalidConfig(format!(
                "grid holds {} points but {} values were given",
                n * n,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidConfig("densities must be finite and nonnegative".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[ix * self.grid.len() + iy]
    }

    /// Riemann sum of the density.
    pub fn mass(&self) -> f64 {
        let h = self.grid.step;
        self.values.iter().sum::<f64>() * h * h
    }

    /// `|1 - mass|`.
    pub fn mass_deficit(&self) -> f64 {
        (1.0 - self.mass()).abs()
    }

    /// Density of `x`, integrated over `y`.
    pub fn marginal_x(&self) -> Vec<f64> {
        let h = self.grid.step;
        self.values
            .chunks(self.grid.len())
            .map(|row| row.iter().sum::<f64>() * h)
            .collect()
    }

    /// Density of `y`, integrated over `x`.
    pub fn marginal_y(&self) -> Vec<f64> {
        let n = self.grid.len();
        let h = self.grid.step;
        let mut acc = vec![0.0; n];
        for row in self.values.chunks(n) {
            for (a, v) in acc.iter_mut().zip(row) {
                *a += v * h;
            }
        }
        acc
    }

    /// `(mean, variance)` of a marginal on this grid.
    pub fn moments(&self, marginal: &[f64]) -> (f64, f64) {
        let h = self.grid.step;
        let pts = self.grid.points();
        let m0: f64 = marginal.iter().sum::<f64>() * h;
        let m1: f64 = marginal.iter().zip(&pts).map(|(p, x)| p * x).sum::<f64>() * h / m0;
        let m2: f64 = marginal.iter().zip(&pts).map(|(p, x)| p * x * x).sum::<f64>() * h / m0;
        (m1, m2 - m1 * m1)
    }

    /// CSV with header `x,y,p`, every grid point.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "x,y,p")?;
        let n = self.grid.len();
        for ix in 0..n {
            let x = format_g12(self.grid.point(ix));
            for iy in 0..n {
                writeln!(
                    out,
                    "{x},{},{}",
                    format_g12(self.grid.point(iy)),
                    format_g12(self.values[ix * n + iy])
                )?;
            }
        }
        Ok(())
    }
}

/// Detector efficiency in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossChannel {
    eta: f64,
}

impl LossChannel {
    pub fn new(eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(domain("eta", eta, "detector efficiency must lie in (0, 1]"));
        }
        Ok(Self { eta })
    }

    pub fn lossless() -> Self {
        Self { eta: 1.0 }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Standard deviation of the vacuum noise added per side, `sqrt(1 - eta)`.
    pub fn vacuum_noise(&self) -> f64 {
        (1.0 - self.eta).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_distribution_accessors() {
        let d = JointIntegerDistribution::from_entries([(0, 1, 0.25), (-1, 1, 0.5), (0, 1, 0.25)]).unwrap();
        assert_eq!(d.window(), (-1, 0, 1, 1));
        assert_eq!(d.get(0, 1), 0.5);
        assert_eq!(d.get(7, 7), 0.0);
        assert_eq!(d.total_mass(), 1.0);
        assert_eq!(d.mass_deficit(), 0.0);
        assert_eq!(d.marginal_a(), vec![(-1, 0.5), (0, 0.5)]);
        assert_eq!(d.marginal_b(), vec![(1, 1.0)]);
        assert_eq!(d.iter().count(), 2);
    }

    #[test]
    fn integer_distribution_rejects_bad_tables() {
        assert!(JointIntegerDistribution::from_dense(0, 1, 0, 0, vec![1.0]).is_err());
        assert!(JointIntegerDistribution::from_dense(0, 0, 0, 0, vec![-0.1]).is_err());
        let d = JointIntegerDistribution::from_dense(0, 1, 0, 0, vec![1.0, -1e-15]).unwrap();
        assert_eq!(d.get(1, 0), 0.0);
    }

    #[test]
    fn integer_csv_schema() {
        let d = JointIntegerDistribution::from_entries([(3, -1, 0.75), (0, 0, 0.25)]).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "i,j,p\n0,0,0.25\n3,-1,0.75\n");
    }

    #[test]
    fn grid_spec_validation() {
        assert_eq!(GridSpec::standard().len(), 513);
        assert!(GridSpec::new(-1.0, 1.0, 0.3).is_err());
        assert!(GridSpec::new(1.0, -1.0, 0.5).is_err());
        assert!(GridSpec::new(-1.0, 1.0, 0.0).is_err());
        assert_eq!(GridSpec::new(-1.0, 1.0, 0.5).unwrap().points(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    }

    #[test]
    fn loss_channel_domain() {
        assert!(LossChannel::new(0.0).is_err());
        assert!(LossChannel::new(1.01).is_err());
        assert_eq!(LossChannel::new(0.75).unwrap().vacuum_noise(), 0.5);
    }
}
