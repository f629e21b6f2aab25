//! Sampled geometry of the sublevel sets `{W ≤ α}` and the constants the
//! existence theory is phrased in.

use std::collections::VecDeque;
use std::f64::consts::TAU;

use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::transform::random_direction;
use super::{dist, norm, PotentialSpec};
use crate::{Error, Result};

/// Axis-aligned probe box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl ProbeBox {
    /// Bounding box of `{a⁺, a⁻}`, inflated by a factor 2 about its center
    /// plus an absolute margin of 1.
    pub fn default_for(p: &PotentialSpec) -> Self {
        let (mut lo, mut hi) = (Vec::new(), Vec::new());
        for i in 0..p.dim {
            let mid = 0.5 * (p.a_plus[i] + p.a_minus[i]);
            let half = 0.5 * (p.a_plus[i] - p.a_minus[i]).abs();
            let r = 2.0 * half + 1.0;
            lo.push(mid - r);
            hi.push(mid + r);
        }
        ProbeBox { lo, hi }
    }

    fn contains(&self, u: &[f64]) -> bool {
        u.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(x, (l, h))| *l <= *x && *x <= *h)
    }

    fn diameter(&self) -> f64 {
        dist(&self.lo, &self.hi)
    }
}

/// Pass/fail of the structural hypotheses on the sampled geometry.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypothesisFlags {
    /// Local radial monotonicity around both minima.
    pub h: bool,
    /// Two disjoint compact components, `a⁻` a global minimum in the box,
    /// and a nondegenerate boundary `|∇W| > 0` on `∂C_0⁻`.
    pub h_star_1: bool,
    /// Strict radial monotonicity inside `C_α⁻` (`w* > 0`).
    pub h_star_2: bool,
    /// `W_u · n ≥ c₀ > 0` on `∂C_0⁻`.
    pub h3_i: bool,
    /// `W_uu ≥ c₀ I` on `∂C_0⁻`.
    pub h3_ii: bool,
}

/// Geometric constants of a potential at level `alpha` and radius `r0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryReport {
    pub alpha: f64,
    pub r0: f64,
    /// `dist(C_α⁻, B(a⁺, r0))`.
    pub d_alpha: f64,
    /// `d_alpha` at `alpha = 0`.
    pub d0: f64,
    /// Distance between the level sets `{W = α₀}` and `{W = -α₀}` around
    /// `a⁻`.
    pub d0_geom: f64,
    /// Level of the convexity band used for `d0_geom`.
    pub alpha0: f64,
    /// Largest value of `W` on the segment `[a⁻, a⁺]`, the barrier height
    /// above `W(a⁺) = 0`.
    pub barrier: f64,
    pub component_count: usize,
    /// Whether the `a⁻` component stays clear of the probe box boundary.
    pub compact: bool,
    /// Component detection was by sampling (`N > 2`) rather than flood fill.
    pub sampled: bool,
    pub r0_max: f64,
    pub w_star: f64,
    pub r_alpha_max: f64,
    pub c0: f64,
    pub b: f64,
    /// Largest boundary curvature, `None` in one dimension.
    pub kappa_max: Option<f64>,
    /// `kappa_max` is the estimate `b/c0` rather than a measurement.
    pub kappa_estimated: bool,
    pub lambda_margin: f64,
    pub alpha_bar0: f64,
    pub hypothesis_flags: HypothesisFlags,
    pub probe_box: ProbeBox,
    pub resolution: usize,
    pub boundary_points: usize,
}

impl HypothesisFlags {
    /// Names of the failed flags among (h) and (h*).
    pub fn failed(&self) -> Vec<&'static str> {
        [
            (self.h, "(h)"),
            (self.h_star_1, "(h*) item 1"),
            (self.h_star_2, "(h*) item 2"),
        ]
        .into_iter()
        .filter(|(ok, _)| !ok)
        .map(|(_, name)| name)
        .collect()
    }
}

impl GeometryReport {
    /// All hypotheses the solver relies on: (h), both items of (h*).
    pub fn h_star_ok(&self) -> bool {
        let f = &self.hypothesis_flags;
        f.h && f.h_star_1 && f.h_star_2
    }
}

/// Samples the sublevel geometry of `p`.
///
/// `resolution` is the grid size per axis for `N ≤ 2` (at least 201) and
/// scales the ray count for `N > 2` (at least 10⁵ samples in total).
pub fn geometry_probe(
    p: &PotentialSpec,
    alpha: f64,
    r0: f64,
    probe_box: Option<&ProbeBox>,
    resolution: usize,
) -> Result<GeometryReport> {
    if !(alpha >= 0.0) {
        return Err(Error::Geometry(format!("alpha = {alpha} must be >= 0")));
    }
    if !(r0 > 0.0) {
        return Err(Error::Geometry(format!("r0 = {r0} must be > 0")));
    }
    let bx = probe_box
        .cloned()
        .unwrap_or_else(|| ProbeBox::default_for(p));
    if bx.lo.len() != p.dim || bx.hi.len() != p.dim {
        return Err(Error::Dimension {
            expected: p.dim,
            got: bx.lo.len(),
        });
    }
    if !(bx.contains(&p.a_plus) && bx.contains(&p.a_minus)) {
        return Err(Error::Geometry("probe box must contain both minima".into()));
    }
    let resolution = resolution.max(201);
    let sampler = Sampler {
        p,
        bx: &bx,
        res: resolution,
    };

    let at_alpha = sampler.level(alpha);
    let at_zero = sampler.level(0.0);
    if at_alpha.boundary.is_empty() || at_zero.boundary.is_empty() {
        return Err(Error::Geometry(
            "sublevel component of a- has no sampled boundary".into(),
        ));
    }

    let d_of = |set: &LevelSet| {
        let nearest = set
            .boundary
            .iter()
            .map(|b| dist(b, &p.a_plus))
            .fold(f64::INFINITY, f64::min);
        if set.contains_a_plus {
            0.0
        } else {
            (nearest - r0).max(0.0)
        }
    };
    let d_alpha = d_of(&at_alpha);
    let d0 = d_of(&at_zero);
    let r_alpha_max = at_alpha
        .boundary
        .iter()
        .map(|b| dist(b, &p.a_minus))
        .fold(0.0, f64::max);

    let barrier = segment_barrier(p);
    let alpha0 = 0.5 * p.depth().min(if barrier > 0.0 { barrier } else { p.depth() });
    let upper = sampler.level(alpha0);
    let lower = sampler.level(-alpha0);
    let d0_geom = set_distance(&upper.boundary, &lower.boundary);

    let grads: Vec<(f64, Vec<f64>)> = at_zero
        .boundary
        .par_iter()
        .map(|b| {
            let g = p.grad_vec(b);
            let normal_speed = if p.dim == 1 {
                g[0] * (b[0] - p.a_minus[0]).signum()
            } else {
                norm(&g)
            };
            (normal_speed, g)
        })
        .collect();
    let c0 = grads.iter().map(|(s, _)| *s).fold(f64::INFINITY, f64::min);

    let b = at_zero
        .inner
        .par_iter()
        .chain(at_zero.boundary.par_iter())
        .map(|u| {
            let h = p.hess(u);
            SymmetricEigen::new(h).eigenvalues.max()
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    let h3_ii_min = at_zero
        .boundary
        .par_iter()
        .map(|u| SymmetricEigen::new(p.hess(u)).eigenvalues.min())
        .reduce(|| f64::INFINITY, f64::min);

    let (kappa_max, kappa_estimated) = match p.dim {
        1 => (None, false),
        2 => {
            let k = at_zero
                .boundary
                .iter()
                .zip(&grads)
                .map(|(u, (_, g))| {
                    let h = p.hess(u);
                    let (wx, wy) = (g[0], g[1]);
                    let num = h[(1, 1)] * wx * wx - 2.0 * h[(0, 1)] * wx * wy + h[(0, 0)] * wy * wy;
                    num.abs() / (wx * wx + wy * wy).powf(1.5)
                })
                .fold(0.0, f64::max);
            (Some(k), false)
        }
        _ => (Some(b / c0), true),
    };

    let mut lambda_margin = (c0 / (2.0 * b)).min(d0_geom);
    if let Some(k) = kappa_max {
        if k > 0.0 {
            lambda_margin = lambda_margin.min(0.9 / k);
        }
    }
    let alpha_bar0 = c0 * lambda_margin / 4.0;

    let dirs = sampler.directions();
    let w_star = radial_floor(p, &dirs, r0, r_alpha_max, alpha);
    let r0_max = monotone_radius(p, &dirs);

    let h_star_1 = at_alpha.count == 2
        && at_zero.count == 2
        && at_alpha.compact
        && at_zero.compact
        && !at_alpha.contains_a_plus
        && sampler.global_min_ok()
        && c0 > 0.0;
    let hypothesis_flags = HypothesisFlags {
        h: r0_max > 0.0 && r0 <= r0_max,
        h_star_1,
        h_star_2: w_star > 0.0,
        h3_i: c0 > 0.0,
        h3_ii: c0 > 0.0 && h3_ii_min >= c0,
    };

    Ok(GeometryReport {
        alpha,
        r0,
        d_alpha,
        d0,
        d0_geom,
        alpha0,
        barrier,
        component_count: at_alpha.count,
        compact: at_alpha.compact,
        sampled: at_alpha.sampled,
        r0_max,
        w_star,
        r_alpha_max,
        c0,
        b,
        kappa_max,
        kappa_estimated,
        lambda_margin,
        alpha_bar0,
        hypothesis_flags,
        probe_box: bx.clone(),
        resolution,
        boundary_points: at_alpha.boundary.len(),
    })
}

/// Largest value of `W` on the segment from `a⁻` to `a⁺`.
fn segment_barrier(p: &PotentialSpec) -> f64 {
    let n = 4000;
    (0..=n)
        .map(|k| {
            let s = k as f64 / n as f64;
            let u: Vec<f64> = p
                .a_minus
                .iter()
                .zip(&p.a_plus)
                .map(|(m, pl)| m + s * (pl - m))
                .collect();
            p.eval(&u)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn set_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.par_iter()
        .map(|x| b.iter().map(|y| dist(x, y)).fold(f64::INFINITY, f64::min))
        .reduce(|| f64::INFINITY, f64::min)
}

/// `w* = min ∂_t W(a⁻ + tξ)` over `r0 ≤ t ≤ R^α_max`, restricted to the
/// part of each ray inside `C_α⁻`.
fn radial_floor(p: &PotentialSpec, dirs: &[Vec<f64>], r0: f64, r_max: f64, alpha: f64) -> f64 {
    let steps = 200;
    let hi = r_max.max(r0);
    dirs.par_iter()
        .map(|xi| {
            let mut floor = f64::INFINITY;
            for k in 0..=steps {
                let t = r0 + (hi - r0) * k as f64 / steps as f64;
                let u: Vec<f64> = p.a_minus.iter().zip(xi).map(|(a, d)| a + t * d).collect();
                if k > 0 && p.eval(&u) > alpha {
                    break;
                }
                let g = p.grad_vec(&u);
                floor = floor.min(g.iter().zip(xi).map(|(gi, di)| gi * di).sum());
            }
            floor
        })
        .reduce(|| f64::INFINITY, f64::min)
}

/// Largest radius on the ladder `|a⁺ - a⁻|/2^k` on which `t ↦ W(a± + tξ)`
/// has a strictly positive derivative for all sampled `ξ`.
fn monotone_radius(p: &PotentialSpec, dirs: &[Vec<f64>]) -> f64 {
    let steps = 64;
    let sep = p.separation();
    for k in 1..=40 {
        let radius = sep / f64::powi(2.0, k);
        let ok = [&p.a_plus, &p.a_minus].iter().all(|a| {
            dirs.par_iter().all(|xi| {
                (1..=steps).all(|i| {
                    let t = radius * i as f64 / steps as f64;
                    let u: Vec<f64> = a.iter().zip(xi).map(|(ai, d)| ai + t * d).collect();
                    let g = p.grad_vec(&u);
                    g.iter().zip(xi).map(|(gi, di)| gi * di).sum::<f64>() > 0.0
                })
            })
        });
        if ok {
            return radius;
        }
    }
    0.0
}

struct LevelSet {
    count: usize,
    compact: bool,
    sampled: bool,
    contains_a_plus: bool,
    boundary: Vec<Vec<f64>>,
    inner: Vec<Vec<f64>>,
}

struct Sampler<'a> {
    p: &'a PotentialSpec,
    bx: &'a ProbeBox,
    res: usize,
}

impl Sampler<'_> {
    fn directions(&self) -> Vec<Vec<f64>> {
        match self.p.dim {
            1 => vec![vec![-1.0], vec![1.0]],
            2 => (0..720)
                .map(|k| {
                    let t = TAU * k as f64 / 720.0;
                    vec![t.cos(), t.sin()]
                })
                .collect(),
            n => {
                let mut rng = ChaCha8Rng::seed_from_u64(0xd1e5);
                (0..2000).map(|_| random_direction(&mut rng, n)).collect()
            }
        }
    }

    fn axis(&self, i: usize) -> Vec<f64> {
        let (lo, hi) = (self.bx.lo[i], self.bx.hi[i]);
        (0..self.res)
            .map(|k| lo + (hi - lo) * k as f64 / (self.res - 1) as f64)
            .collect()
    }

    fn global_min_ok(&self) -> bool {
        let floor = self.p.w_at_a_minus - 1e-9 * (1.0 + self.p.depth());
        match self.p.dim {
            1 => self.axis(0).iter().all(|x| self.p.eval(&[*x]) >= floor),
            2 => {
                let (xs, ys) = (self.axis(0), self.axis(1));
                xs.par_iter()
                    .all(|x| ys.iter().all(|y| self.p.eval(&[*x, *y]) >= floor))
            }
            n => {
                let mut rng = ChaCha8Rng::seed_from_u64(0x9106);
                let pts: Vec<Vec<f64>> = (0..100_000)
                    .map(|_| {
                        (0..n)
                            .map(|i| rng.random_range(self.bx.lo[i]..=self.bx.hi[i]))
                            .collect()
                    })
                    .collect();
                pts.par_iter().all(|u| self.p.eval(u) >= floor)
            }
        }
    }

    /// Point on the segment `[inside, outside]` where `W` crosses `level`.
    fn bisect(&self, inside: &[f64], outside: &[f64], level: f64) -> Vec<f64> {
        let (mut a, mut b) = (inside.to_vec(), outside.to_vec());
        let mut mid = a.clone();
        for _ in 0..60 {
            for i in 0..a.len() {
                mid[i] = 0.5 * (a[i] + b[i]);
            }
            if self.p.eval(&mid) <= level {
                a.clone_from(&mid);
            } else {
                b.clone_from(&mid);
            }
            if dist(&a, &b) < 1e-14 * (1.0 + norm(&a)) {
                break;
            }
        }
        a
    }

    fn level(&self, level: f64) -> LevelSet {
        match self.p.dim {
            1 => self.level_1d(level),
            2 => self.level_2d(level),
            _ => self.level_rays(level),
        }
    }

    fn level_1d(&self, level: f64) -> LevelSet {
        let p = self.p;
        let xs = self.axis(0);
        let nearest = |a: f64| {
            ((a - xs[0]) / (xs[1] - xs[0]))
                .round()
                .clamp(0.0, (xs.len() - 1) as f64) as usize
        };
        let mut mask: Vec<bool> = xs.iter().map(|x| p.eval(&[*x]) <= level).collect();
        let (ip, im) = (nearest(p.a_plus[0]), nearest(p.a_minus[0]));
        if p.eval(&p.a_plus) <= level {
            mask[ip] = true;
        }
        mask[im] = true;
        let count = mask
            .iter()
            .enumerate()
            .filter(|(i, m)| **m && (*i == 0 || !mask[i - 1]))
            .count();
        let (mut s, mut e) = (im, im);
        while s > 0 && mask[s - 1] {
            s -= 1;
        }
        while e + 1 < xs.len() && mask[e + 1] {
            e += 1;
        }
        let am = p.a_minus[0];
        let inside_left = if s == im { am } else { xs[s] };
        let inside_right = if e == im { am } else { xs[e] };
        let mut boundary = Vec::new();
        if s > 0 {
            boundary.push(self.bisect(&[inside_left], &[xs[s - 1]], level));
        } else {
            boundary.push(vec![xs[0]]);
        }
        if e + 1 < xs.len() {
            boundary.push(self.bisect(&[inside_right], &[xs[e + 1]], level));
        } else {
            boundary.push(vec![xs[xs.len() - 1]]);
        }
        LevelSet {
            count,
            compact: s > 0 && e + 1 < xs.len(),
            sampled: false,
            contains_a_plus: (s..=e).contains(&ip),
            boundary,
            inner: xs[s..=e].iter().map(|x| vec![*x]).collect(),
        }
    }

    fn level_2d(&self, level: f64) -> LevelSet {
        let p = self.p;
        let (xs, ys) = (self.axis(0), self.axis(1));
        let n = self.res;
        let idx = |i: usize, j: usize| i * n + j;
        let mut mask: Vec<bool> = (0..n * n)
            .into_par_iter()
            .map(|k| p.eval(&[xs[k / n], ys[k % n]]) <= level)
            .collect();
        let nearest = |a: &[f64]| {
            let f = |v: f64, ax: &[f64]| {
                ((v - ax[0]) / (ax[1] - ax[0]))
                    .round()
                    .clamp(0.0, (n - 1) as f64) as usize
            };
            (f(a[0], &xs), f(a[1], &ys))
        };
        let (ip, jp) = nearest(&p.a_plus);
        let (im, jm) = nearest(&p.a_minus);
        if p.eval(&p.a_plus) <= level {
            mask[idx(ip, jp)] = true;
        }
        mask[idx(im, jm)] = true;

        let mut label = vec![usize::MAX; n * n];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for start in 0..n * n {
            if !mask[start] || label[start] != usize::MAX {
                continue;
            }
            label[start] = count;
            queue.push_back(start);
            while let Some(k) = queue.pop_front() {
                let (i, j) = (k / n, k % n);
                for (di, dj) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
                    let (ni, nj) = (i as i64 + di, j as i64 + dj);
                    if ni < 0 || nj < 0 || ni >= n as i64 || nj >= n as i64 {
                        continue;
                    }
                    let nk = idx(ni as usize, nj as usize);
                    if mask[nk] && label[nk] == usize::MAX {
                        label[nk] = count;
                        queue.push_back(nk);
                    }
                }
            }
            count += 1;
        }

        let target = label[idx(im, jm)];
        let mut compact = true;
        let mut boundary = Vec::new();
        let mut inner = Vec::new();
        for k in 0..n * n {
            if label[k] != target {
                continue;
            }
            let (i, j) = (k / n, k % n);
            if i == 0 || j == 0 || i == n - 1 || j == n - 1 {
                compact = false;
            }
            let here = [xs[i], ys[j]];
            let inside_pt: Vec<f64> = if (i, j) == (im, jm) {
                p.a_minus.clone()
            } else {
                here.to_vec()
            };
            inner.push(here.to_vec());
            for (di, dj) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
                let (ni, nj) = (i as i64 + di, j as i64 + dj);
                if ni < 0 || nj < 0 || ni >= n as i64 || nj >= n as i64 {
                    continue;
                }
                let nk = idx(ni as usize, nj as usize);
                if label[nk] != target {
                    let out = [xs[ni as usize], ys[nj as usize]];
                    boundary.push(self.bisect(&inside_pt, &out, level));
                }
            }
        }
        LevelSet {
            count,
            compact,
            sampled: false,
            contains_a_plus: label[idx(ip, jp)] == target,
            boundary,
            inner,
        }
    }

    fn level_rays(&self, level: f64) -> LevelSet {
        let p = self.p;
        let rays = (self.res * 10).max(2000);
        let steps = 64;
        let reach = self.bx.diameter();
        let mut rng = ChaCha8Rng::seed_from_u64(0x4a75);
        let dirs: Vec<Vec<f64>> = (0..rays)
            .map(|_| random_direction(&mut rng, p.dim))
            .collect();
        let hits: Vec<(Vec<f64>, bool, Vec<Vec<f64>>)> = dirs
            .par_iter()
            .map(|xi| {
                let mut prev = p.a_minus.clone();
                let mut inner = Vec::new();
                for k in 1..=steps {
                    let t = reach * k as f64 / steps as f64;
                    let u: Vec<f64> = p.a_minus.iter().zip(xi).map(|(a, d)| a + t * d).collect();
                    if !self.bx.contains(&u) {
                        return (prev, false, inner);
                    }
                    if p.eval(&u) > level {
                        return (self.bisect(&prev, &u, level), true, inner);
                    }
                    inner.push(u.clone());
                    prev = u;
                }
                (prev, false, inner)
            })
            .collect();
        let compact = hits.iter().all(|h| h.1);
        let mut boundary = Vec::with_capacity(rays);
        let mut inner = Vec::new();
        for (b, _, i) in hits {
            boundary.push(b);
            inner.extend(i);
        }

        let probes = 4000;
        let inside: Vec<bool> = (0..=probes)
            .map(|k| {
                let s = k as f64 / probes as f64;
                let u: Vec<f64> = p
                    .a_minus
                    .iter()
                    .zip(&p.a_plus)
                    .map(|(m, pl)| m + s * (pl - m))
                    .collect();
                (k == 0) || (k == probes && p.eval(&p.a_plus) <= level) || p.eval(&u) <= level
            })
            .collect();
        let runs = inside
            .iter()
            .enumerate()
            .filter(|(i, m)| **m && (*i == 0 || !inside[i - 1]))
            .count();
        let contains_a_plus = inside.iter().all(|m| *m);
        LevelSet {
            count: runs,
            compact,
            sampled: true,
            contains_a_plus,
            boundary,
            inner,
        }
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::super::make_builtin;
    use super::*;

    fn nagumo(a: f64) -> PotentialSpec {
        let params: BTreeMap<String, f64> = [("a".to_string(), a)].into_iter().collect();
        make_builtin("nagumo", &params).unwrap()
    }

    #[test]
    fn default_box() {
        let b = ProbeBox::default_for(&nagumo(0.25));
        assert_eq!(b.lo, vec![-1.5]);
        assert_eq!(b.hi, vec![2.5]);
    }

    #[test]
    fn nagumo_constants() {
        let p = nagumo(0.25);
        let g = geometry_probe(&p, 0.0, 0.05, None, 201).unwrap();
        let root = (5.0 / 12.0 - (25.0f64 / 144.0 - 0.125).sqrt()) * 2.0;
        assert!((g.d_alpha - (root - 0.05)).abs() < 1e-9);
        assert_eq!(g.component_count, 2);
        assert!((g.r_alpha_max - (1.0 - root)).abs() < 1e-9);
        assert!((g.c0 - root * (root - 0.25) * (1.0 - root)).abs() < 1e-9);
        assert_eq!(g.r0_max, 0.125);
        assert!(g.hypothesis_flags.h_star_1 && g.hypothesis_flags.h_star_2);
        assert!(!g.hypothesis_flags.h3_ii);
        assert_eq!(g.alpha_bar0, g.c0 * g.lambda_margin / 4.0);
    }
}
