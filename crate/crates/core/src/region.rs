//! Isolating regions in the original coordinates: a rigorous membership
//! predicate and a contour sampler for the real slice.
//!
//! A region is the image of the epsilon-ball under the inverse of the logged
//! transforms. Membership of a point y: undo the affine stage, undo the
//! variable substitutions (exactly triangular), and test
//! sum_i |w_i|^(2/weight_i) <= eps^2.

use num_complex::Complex64;

use crate::ball::{BallC, RInt};
use crate::cmatrix::BallMatrix;
use crate::error::{Error, Result};
use crate::preinflate::TransformLog;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    In,
    Out,
    /// The membership value straddles the threshold within its enclosure.
    Boundary,
}

/// Membership predicate for the region of radius `epsilon`.
#[derive(Clone, Debug)]
pub struct RegionPredicate {
    a_inv: BallMatrix,
    shift: Vec<BallC>,
    var_subs: Vec<(usize, crate::poly::Polynomial)>,
    weights: Vec<u32>,
    pub epsilon: f64,
    pub kappa: usize,
}

impl RegionPredicate {
    pub fn from_log(log: &TransformLog, epsilon: f64) -> Result<Self> {
        if epsilon < 0.0 {
            return Err(Error::Degenerate("epsilon must be non-negative".into()));
        }
        Ok(RegionPredicate {
            a_inv: log.amat.inverse()?,
            shift: log.shift.clone(),
            var_subs: log.var_subs.clone(),
            weights: log.weights.clone(),
            epsilon,
            kappa: log.kappa,
        })
    }

    pub fn nvars(&self) -> usize {
        self.weights.len()
    }

    /// Enclosure of the membership functional sum_i |w_i|^(2/weight_i) at y.
    pub fn membership_value(&self, y: &[BallC]) -> Result<RInt> {
        let n = self.nvars();
        if y.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: y.len() });
        }
        // undo the affine stage
        let translated: Vec<BallC> = y
            .iter()
            .zip(&self.shift)
            .map(|(a, b)| a.sub(b))
            .collect();
        let mut u = self.a_inv.mul_vec(&translated);
        // undo the variable substitutions: w_i = u_i - q_i(u_head)
        for (i, q) in &self.var_subs {
            let qv = q.evaluate(&u)?;
            u[*i] = u[*i].sub(&qv);
        }
        let mut acc = RInt::ZERO;
        for (i, w) in self.weights.iter().enumerate() {
            let a = u[i].abs();
            let sq = RInt::new(a.lo, a.hi).powi(2);
            let term = if *w == 1 { sq } else { sq.nth_root(*w) };
            acc = acc.add(term);
        }
        Ok(acc)
    }

    pub fn contains(&self, y: &[BallC]) -> Result<Verdict> {
        let value = self.membership_value(y)?;
        let eps2 = RInt::point(self.epsilon).powi(2);
        if value.hi <= eps2.lo {
            Ok(Verdict::In)
        } else if value.lo > eps2.hi {
            Ok(Verdict::Out)
        } else {
            Ok(Verdict::Boundary)
        }
    }

    pub fn contains_mid(&self, y: &[Complex64]) -> Result<Verdict> {
        let yb: Vec<BallC> = y.iter().map(|c| BallC::from_mid(*c)).collect();
        self.contains(&yb)
    }

    /// Midpoint membership functional on the real slice, for plotting.
    fn field_value(&self, x: f64, yv: f64) -> f64 {
        let y = [BallC::real(x), BallC::real(yv)];
        match self.membership_value(&y) {
            Ok(v) => 0.5 * (v.lo + v.hi) - self.epsilon * self.epsilon,
            Err(_) => f64::NAN,
        }
    }
}

/// An ordered polyline in the plane.
pub type Polyline = Vec<(f64, f64)>;

/// Extract the region boundary on the real (x1, x2) slice by marching
/// squares over `resolution x resolution` cells of the window. Segments are
/// chained into ordered polylines.
pub fn contour_sample(
    r: &RegionPredicate,
    window: ((f64, f64), (f64, f64)),
    resolution: usize,
) -> Result<Vec<Polyline>> {
    if r.nvars() != 2 {
        return Err(Error::Degenerate(
            "contour sampling works on the plane; supply a two-variable system".into(),
        ));
    }
    if resolution < 2 {
        return Err(Error::Degenerate("resolution must be at least 2".into()));
    }
    let ((x0, x1), (y0, y1)) = window;
    let nx = resolution;
    let ny = resolution;
    let dx = (x1 - x0) / nx as f64;
    let dy = (y1 - y0) / ny as f64;
    // sample grid values
    let mut grid = vec![vec![0.0f64; nx + 1]; ny + 1];
    for (j, row) in grid.iter_mut().enumerate() {
        for (i, v) in row.iter_mut().enumerate() {
            *v = r.field_value(x0 + i as f64 * dx, y0 + j as f64 * dy);
        }
    }
    let mut segments: Vec<((f64, f64), (f64, f64))> = Vec::new();
    let interp = |va: f64, vb: f64, a: f64, b: f64| {
        if (vb - va).abs() < 1e-300 {
            0.5 * (a + b)
        } else {
            a + (0.0 - va) / (vb - va) * (b - a)
        }
    };
    for j in 0..ny {
        for i in 0..nx {
            let xa = x0 + i as f64 * dx;
            let xb = xa + dx;
            let ya = y0 + j as f64 * dy;
            let yb = ya + dy;
            let v00 = grid[j][i];
            let v10 = grid[j][i + 1];
            let v01 = grid[j + 1][i];
            let v11 = grid[j + 1][i + 1];
            if v00.is_nan() || v10.is_nan() || v01.is_nan() || v11.is_nan() {
                continue;
            }
            let mut idx = 0u8;
            if v00 < 0.0 {
                idx |= 1;
            }
            if v10 < 0.0 {
                idx |= 2;
            }
            if v11 < 0.0 {
                idx |= 4;
            }
            if v01 < 0.0 {
                idx |= 8;
            }
            if idx == 0 || idx == 15 {
                continue;
            }
            // edge crossing points
            let bottom = (interp(v00, v10, xa, xb), ya);
            let top = (interp(v01, v11, xa, xb), yb);
            let left = (xa, interp(v00, v01, ya, yb));
            let right = (xb, interp(v10, v11, ya, yb));
            let mut push = |a: (f64, f64), b: (f64, f64)| segments.push((a, b));
            match idx {
                1 => push(left, bottom),
                2 => push(bottom, right),
                3 => push(left, right),
                4 => push(right, top),
                5 => {
                    // ambiguous saddle: split by the cell center sign
                    let c = r.field_value(0.5 * (xa + xb), 0.5 * (ya + yb));
                    if c < 0.0 {
                        push(left, top);
                        push(bottom, right);
                    } else {
                        push(left, bottom);
                        push(right, top);
                    }
                }
                6 => push(bottom, top),
                7 => push(left, top),
                8 => push(top, left),
                9 => push(top, bottom),
                10 => {
                    let c = r.field_value(0.5 * (xa + xb), 0.5 * (ya + yb));
                    if c < 0.0 {
                        push(top, right);
                        push(left, bottom);
                    } else {
                        push(top, left);
                        push(bottom, right);
                    }
                }
                11 => push(top, right),
                12 => push(right, left),
                13 => push(right, bottom),
                14 => push(bottom, left),
                _ => unreachable!(),
            }
        }
    }
    if segments.is_empty() {
        return Err(Error::Degenerate(
            "the contour does not intersect the window".into(),
        ));
    }
    Ok(chain_segments(segments, dx.hypot(dy) * 1e-6))
}

/// Join segments into polylines by matching endpoints within `tol`.
fn chain_segments(mut segments: Vec<((f64, f64), (f64, f64))>, tol: f64) -> Vec<Polyline> {
    let close = |a: (f64, f64), b: (f64, f64)| {
        (a.0 - b.0).hypot(a.1 - b.1) <= tol
    };
    let mut polylines = Vec::new();
    while let Some((a, b)) = segments.pop() {
        let mut line = vec![a, b];
        loop {
            let mut extended = false;
            let tail = *line.last().unwrap();
            let head = line[0];
            let mut i = 0;
            while i < segments.len() {
                let (s, e) = segments[i];
                if close(s, tail) {
                    line.push(e);
                    segments.swap_remove(i);
                    extended = true;
                } else if close(e, tail) {
                    line.push(s);
                    segments.swap_remove(i);
                    extended = true;
                } else if close(e, head) {
                    line.insert(0, s);
                    segments.swap_remove(i);
                    extended = true;
                } else if close(s, head) {
                    line.insert(0, e);
                    segments.swap_remove(i);
                    extended = true;
                } else {
                    i += 1;
                }
            }
            if !extended {
                break;
            }
        }
        polylines.push(line);
    }
    polylines
}

/// True when a polyline closes onto itself within a relative tolerance.
pub fn is_closed(line: &Polyline, tol: f64) -> bool {
    if line.len() < 4 {
        return false;
    }
    let a = line[0];
    let b = *line.last().unwrap();
    (a.0 - b.0).hypot(a.1 - b.1) <= tol
}
