//! Uniform grids on a truncated line and sampled profiles on them.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::potential::PotentialSpec;
use crate::{Error, Result};

/// Nodes `x_j = left + j h`, `j = 0..=n`.
///
/// A fresh grid is symmetric, `left = -half_width`. Translation by whole
/// cells moves `left` and keeps everything else.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub half_width: f64,
    pub h: f64,
    pub n: usize,
    pub left: f64,
    /// Abscissa at which the action weight is normalized to one.
    pub x_ref: f64,
}

/// Smallest cell count accepted by the solvers.
pub const MIN_CELLS: usize = 64;
/// Largest spacing accepted by the solvers.
pub const MAX_SPACING: f64 = 0.05;

/// Grid on `[-M, M]` with spacing `h`; `2M/h` must be an integer within
/// `1e-9`.
pub fn make_grid(half_width: f64, h: f64, x_ref: f64) -> Result<Grid> {
    if !(half_width > 0.0 && h > 0.0) || !x_ref.is_finite() {
        return Err(Error::Grid(format!(
            "need M > 0, h > 0 and finite x_ref; got M = {half_width}, h = {h}, x_ref = {x_ref}"
        )));
    }
    let cells = 2.0 * half_width / h;
    let n = cells.round();
    if (cells - n).abs() > 1e-9 || n < 1.0 {
        return Err(Error::Grid(format!(
            "2M/h = {cells} is not an integer (M = {half_width}, h = {h})"
        )));
    }
    Ok(Grid {
        half_width,
        h,
        n: n as usize,
        left: -half_width,
        x_ref,
    })
}

impl Grid {
    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x(&self, j: usize) -> f64 {
        self.left + j as f64 * self.h
    }

    pub fn right(&self) -> f64 {
        self.x(self.n)
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..=self.n).map(|j| self.x(j)).collect()
    }

    /// The same grid moved by `k` cells.
    pub fn shifted(&self, k: i64) -> Grid {
        Grid {
            left: self.left + k as f64 * self.h,
            ..self.clone()
        }
    }

    pub fn with_x_ref(&self, x_ref: f64) -> Grid {
        Grid {
            x_ref,
            ..self.clone()
        }
    }

    /// Index of the node nearest to `x`, clamped to the grid.
    pub fn nearest(&self, x: f64) -> usize {
        ((x - self.left) / self.h).round().clamp(0.0, self.n as f64) as usize
    }

    /// Checks the resolution limits the solvers rely on.
    pub fn check_solver_limits(&self) -> Result<()> {
        if self.n < MIN_CELLS {
            return Err(Error::Grid(format!(
                "{} cells is below the minimum {MIN_CELLS}",
                self.n
            )));
        }
        if self.h > MAX_SPACING + 1e-12 {
            return Err(Error::Grid(format!(
                "spacing {} exceeds {MAX_SPACING}",
                self.h
            )));
        }
        Ok(())
    }
}

/// Samples of a map `R -> R^N` at the nodes of a grid, stored node-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    pub grid: Grid,
    pub dim: usize,
    pub values: Vec<f64>,
    /// End values are pinned to `a⁻` (left) and `a⁺` (right).
    pub clamped: bool,
}

impl Profile {
    pub fn new(grid: Grid, dim: usize, values: Vec<f64>, clamped: bool) -> Result<Self> {
        if dim == 0 || values.len() != grid.len() * dim {
            return Err(Error::Dimension {
                expected: grid.len() * dim.max(1),
                got: values.len(),
            });
        }
        Ok(Profile {
            grid,
            dim,
            values,
            clamped,
        })
    }

    pub fn from_fn(grid: Grid, dim: usize, clamped: bool, f: impl Fn(f64) -> Vec<f64>) -> Self {
        let mut values = Vec::with_capacity(grid.len() * dim);
        for j in 0..grid.len() {
            let v = f(grid.x(j));
            assert_eq!(v.len(), dim, "profile sample has wrong dimension");
            values.extend(v);
        }
        Profile {
            grid,
            dim,
            values,
            clamped,
        }
    }

    pub fn constant(grid: Grid, point: &[f64], clamped: bool) -> Self {
        Self::from_fn(grid, point.len(), clamped, |_| point.to_vec())
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point(&self, j: usize) -> &[f64] {
        &self.values[j * self.dim..(j + 1) * self.dim]
    }

    pub fn point_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.values[j * self.dim..(j + 1) * self.dim]
    }

    /// Component `i` at every node.
    pub fn component(&self, i: usize) -> Vec<f64> {
        self.values.iter().skip(i).step_by(self.dim).copied().collect()
    }

    /// Moves samples `k` nodes to the right on the same grid, filling the
    /// vacated nodes with `left_fill` or `right_fill`.
    pub fn shift_samples(&self, k: i64, left_fill: &[f64], right_fill: &[f64]) -> Profile {
        let n = self.len() as i64;
        let mut out = self.clone();
        for j in 0..n {
            let src = j - k;
            let v: &[f64] = if src < 0 {
                left_fill
            } else if src >= n {
                right_fill
            } else {
                self.point(src as usize)
            };
            out.point_mut(j as usize).copy_from_slice(v);
        }
        out
    }

    /// Largest node-wise Euclidean distance to another profile on the same
    /// node count.
    pub fn max_distance(&self, other: &Profile) -> f64 {
        (0..self.len().min(other.len()))
            .map(|j| crate::potential::dist(self.point(j), other.point(j)))
            .fold(0.0, f64::max)
    }

    /// Writes `x,u1,...,uN` with 17 significant digits.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(file);
        let mut header = vec!["x".to_string()];
        header.extend((1..=self.dim).map(|i| format!("u{i}")));
        w.write_record(&header)?;
        for j in 0..self.len() {
            let mut row = vec![format!("{:.16e}", self.grid.x(j))];
            row.extend(self.point(j).iter().map(|v| format!("{v:.16e}")));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    /// Reads a profile written by [`write_csv`](Self::write_csv). The grid
    /// spacing and extent are recovered from the abscissae.
    pub fn read_csv(path: &Path, x_ref: f64, clamped: bool) -> Result<Profile> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = csv::Reader::from_reader(file);
        let dim = r.headers()?.len().saturating_sub(1);
        let mut xs = Vec::new();
        let mut values = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let mut fields = rec.iter().map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Grid(format!("bad number `{f}` in {}", path.display())))
            });
            xs.push(fields.next().transpose()?.unwrap_or(f64::NAN));
            for v in fields {
                values.push(v?);
            }
        }
        if xs.len() < 2 || dim == 0 {
            return Err(Error::Grid(format!("{} holds no profile", path.display())));
        }
        let n = xs.len() - 1;
        let h = (xs[n] - xs[0]) / n as f64;
        for (j, x) in xs.iter().enumerate() {
            if (x - (xs[0] + j as f64 * h)).abs() > 1e-9 * (1.0 + x.abs()) {
                return Err(Error::Grid(format!("non-uniform abscissae in {}", path.display())));
            }
        }
        let grid = Grid {
            half_width: 0.5 * (xs[n] - xs[0]),
            h,
            n,
            left: xs[0],
            x_ref,
        };
        Profile::new(grid, dim, values, clamped)
    }
}

/// Samples of the ramp `U^t_aff`: `a⁻` for `x ≤ -t`, `a⁺` for `x ≥ t`,
/// affine in between. End nodes are pinned to `a±`.
pub fn affine_seed(grid: &Grid, p: &PotentialSpec, t: f64) -> Result<Profile> {
    affine_seed_at(grid, p, t, 0.0)
}

/// [`affine_seed`] with the ramp centered at `center`.
pub fn affine_seed_at(grid: &Grid, p: &PotentialSpec, t: f64, center: f64) -> Result<Profile> {
    if !(t > 0.0 && t <= grid.half_width) {
        return Err(Error::Grid(format!(
            "ramp half-width t = {t} must lie in (0, M = {}]",
            grid.half_width
        )));
    }
    let (am, ap) = (&p.a_minus, &p.a_plus);
    let mut prof = Profile::from_fn(grid.clone(), p.dim, true, |x| {
        let s = ((x - center + t) / (2.0 * t)).clamp(0.0, 1.0);
        am.iter().zip(ap).map(|(m, pl)| m + s * (pl - m)).collect()
    });
    let last = prof.len() - 1;
    prof.point_mut(0).copy_from_slice(am);
    prof.point_mut(last).copy_from_slice(ap);
    Ok(prof)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_shapes() {
        let g = make_grid(20.0, 0.01, 5.0).unwrap();
        assert_eq!(g.len(), 4001);
        assert_eq!(g.x(0), -20.0);
        assert!((g.right() - 20.0).abs() < 1e-12);
        let g = make_grid(1.0, 0.5, 0.0).unwrap();
        assert_eq!(g.xs(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert!(make_grid(1.0, 0.3, 0.0).is_err());
        assert!(g.check_solver_limits().is_err());
    }

    #[test]
    fn shift_pads_with_fill_values() {
        let g = make_grid(1.0, 0.5, 0.0).unwrap();
        let p = Profile::new(g, 1, vec![1.0, 2.0, 3.0, 4.0, 5.0], false).unwrap();
        let s = p.shift_samples(2, &[0.0], &[9.0]);
        assert_eq!(s.values, vec![0.0, 0.0, 1.0, 2.0, 3.0]);
        let s = p.shift_samples(-1, &[0.0], &[9.0]);
        assert_eq!(s.values, vec![2.0, 3.0, 4.0, 5.0, 9.0]);
    }

    #[test]
    fn csv_round_trip() {
        let g = make_grid(1.0, 0.25, 0.0).unwrap();
        let p = Profile::from_fn(g, 2, true, |x| vec![x.sin() / 3.0, 1e-17 + x.exp()]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        p.write_csv(&path).unwrap();
        let q = Profile::read_csv(&path, 0.0, true).unwrap();
        assert_eq!(p.values, q.values);
        assert_eq!(p.grid.n, q.grid.n);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("x,u1,u2\n"));
    }
}
