//! Desk-scale brute-force zero enumeration: Newton iteration from a dense
//! grid of complex seeds, deduplicated and polished. This is the independent
//! ground-truth engine used by the tests; certificates never cite it.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::poly::PolySystem;
use crate::region::{RegionPredicate, Verdict};

/// Complex box: per-variable real and imaginary ranges.
#[derive(Clone, Debug)]
pub struct ComplexBox {
    pub re: Vec<(f64, f64)>,
    pub im: Vec<(f64, f64)>,
}

impl ComplexBox {
    pub fn cube(n: usize, re: (f64, f64), im: (f64, f64)) -> Self {
        ComplexBox { re: vec![re; n], im: vec![im; n] }
    }
}

#[derive(Clone, Debug)]
pub struct FoundZero {
    pub point: Vec<Complex64>,
    pub residual: f64,
    /// False when the Jacobian at the zero is numerically singular.
    pub simple: bool,
}

#[derive(Clone, Debug)]
pub struct ZeroList {
    pub points: Vec<FoundZero>,
    pub dedup_radius: f64,
}

impl ZeroList {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub const DEFAULT_GRID: usize = 21;
pub const DEFAULT_NEWTON_ITERS: usize = 50;
pub const DEFAULT_DEDUP_RADIUS: f64 = 1e-6;
const CONVERGENCE: f64 = 1e-13;

/// Newton iteration from every grid seed; converged points are polished,
/// deduplicated, and classified. Completeness is heuristic.
pub fn enumerate_zeros(
    f: &PolySystem,
    bx: &ComplexBox,
    grid_per_dim: usize,
    newton_iters: usize,
) -> Result<ZeroList> {
    enumerate_zeros_with_dedup(f, bx, grid_per_dim, newton_iters, DEFAULT_DEDUP_RADIUS)
}

pub fn enumerate_zeros_with_dedup(
    f: &PolySystem,
    bx: &ComplexBox,
    grid_per_dim: usize,
    newton_iters: usize,
    dedup_radius: f64,
) -> Result<ZeroList> {
    f.require_square()?;
    let n = f.n;
    if bx.re.len() != n || bx.im.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: bx.re.len() });
    }
    let total_seeds = (grid_per_dim as u128).pow(2 * n as u32);
    if total_seeds > 20_000_000 {
        return Err(Error::Degenerate(format!(
            "{total_seeds} seeds exceed the search budget; lower the grid resolution"
        )));
    }
    let scale: f64 = f
        .polys
        .iter()
        .map(|p| p.max_coeff_abs())
        .fold(0.0, f64::max)
        .max(1.0);
    let grid_coord = |range: (f64, f64), idx: usize| {
        if grid_per_dim == 1 {
            0.5 * (range.0 + range.1)
        } else {
            range.0 + (range.1 - range.0) * idx as f64 / (grid_per_dim - 1) as f64
        }
    };
    let seeds: Vec<Vec<Complex64>> = (0..total_seeds as u64)
        .map(|flat| {
            let mut rest = flat as usize;
            let mut z = Vec::with_capacity(n);
            for v in 0..n {
                let ri = rest % grid_per_dim;
                rest /= grid_per_dim;
                let ii = rest % grid_per_dim;
                rest /= grid_per_dim;
                z.push(Complex64::new(
                    grid_coord(bx.re[v], ri),
                    grid_coord(bx.im[v], ii),
                ));
            }
            z
        })
        .collect();
    let converged: Vec<Vec<Complex64>> = seeds
        .par_iter()
        .filter_map(|seed| newton_polish(f, seed.clone(), newton_iters, scale))
        .collect();
    // deterministic dedup: sort by coordinates, then sweep
    let mut sorted = converged;
    sorted.sort_by(|a, b| {
        for (x, y) in a.iter().zip(b) {
            match x.re.partial_cmp(&y.re).unwrap().then(x.im.partial_cmp(&y.im).unwrap()) {
                std::cmp::Ordering::Equal => continue,
                ord => return ord,
            }
        }
        std::cmp::Ordering::Equal
    });
    let mut unique: Vec<Vec<Complex64>> = Vec::new();
    for z in sorted {
        let dup = unique.iter().any(|u| dist(u, &z) <= dedup_radius);
        if !dup {
            unique.push(z);
        }
    }
    let points = unique
        .into_iter()
        .map(|z| {
            let vals = f.evaluate_mid(&z);
            let residual = vals.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            let j = jacobian_mid(f, &z);
            let svd = j.svd(false, false);
            let smin = svd
                .singular_values
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
            FoundZero {
                point: z,
                residual,
                simple: smax > 0.0 && smin > 1e-8 * smax,
            }
        })
        .collect();
    Ok(ZeroList { points, dedup_radius })
}

fn dist(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

fn jacobian_mid(f: &PolySystem, z: &[Complex64]) -> DMatrix<Complex64> {
    let n = f.n;
    DMatrix::from_fn(n, n, |i, j| f.polys[i].derivative(j).evaluate_mid(z))
}

fn newton_polish(
    f: &PolySystem,
    mut z: Vec<Complex64>,
    iters: usize,
    scale: f64,
) -> Option<Vec<Complex64>> {
    let n = f.n;
    for _ in 0..iters {
        let vals = f.evaluate_mid(&z);
        let resid = vals.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if resid < CONVERGENCE * scale {
            return Some(z);
        }
        let j = jacobian_mid(f, &z);
        let rhs = DMatrix::from_fn(n, 1, |i, _| -vals[i]);
        let lu = j.lu();
        let step = lu.solve(&rhs)?;
        let step_norm = step.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !step_norm.is_finite() || step_norm > 1e6 {
            return None;
        }
        for i in 0..n {
            z[i] += step[(i, 0)];
        }
        if step_norm < 1e-16 {
            break;
        }
    }
    let vals = f.evaluate_mid(&z);
    let resid = vals.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if resid < CONVERGENCE * scale {
        Some(z)
    } else {
        None
    }
}

/// Counts of enumerated zeros inside a region, with boundary-indeterminate
/// points reported separately.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RegionCount {
    pub inside: usize,
    pub boundary: usize,
}

pub fn count_in_region(zeros: &ZeroList, region: &RegionPredicate) -> Result<RegionCount> {
    let mut inside = 0;
    let mut boundary = 0;
    for z in &zeros.points {
        match region.contains_mid(&z.point)? {
            Verdict::In => inside += 1,
            Verdict::Boundary => boundary += 1,
            Verdict::Out => {}
        }
    }
    Ok(RegionCount { inside, boundary })
}
