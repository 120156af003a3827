//! Local Hilbert function, multiplicity, and regularity predicates, computed
//! through Macaulay dual spaces.
//!
//! The local Hilbert function at a zero counts standard monomials per degree;
//! its values appear here as corank increments of the dual-space matrices.
//! Rank decisions use the singular-value gap of the midpoint matrices: a
//! degree without a clear gap is reported as indeterminate rather than
//! silently resolved.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::ball::BallC;
use crate::error::{Error, Result};
use crate::poly::{Exponent, PolySystem, Polynomial};

/// Default relative threshold separating "zero" singular values.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;
/// Minimal ratio between consecutive singular values across the cut.
pub const DEFAULT_GAP: f64 = 1e2;

/// Local Hilbert function values h(0..=D) with bookkeeping.
#[derive(Clone, Debug, PartialEq)]
pub struct HilbertProfile {
    pub values: Vec<usize>,
    pub terminated: bool,
    pub truncation: usize,
}

impl HilbertProfile {
    pub fn kappa(&self) -> usize {
        self.values.get(1).copied().unwrap_or(0)
    }

    /// Sum of the series; meaningful as the multiplicity only when the
    /// profile terminated.
    pub fn multiplicity(&self) -> usize {
        self.values.iter().sum()
    }
}

/// All monomials of `n` variables with total degree exactly `d`.
pub fn monomials_of_degree(n: usize, d: u32) -> Vec<Exponent> {
    fn rec(out: &mut Vec<Exponent>, cur: &mut Vec<u32>, pos: usize, left: u32) {
        if pos + 1 == cur.len() {
            cur[pos] = left;
            out.push(Exponent(cur.clone()));
            cur[pos] = 0;
            return;
        }
        for e in 0..=left {
            cur[pos] = e;
            rec(out, cur, pos + 1, left - e);
        }
        cur[pos] = 0;
    }
    let mut out = Vec::new();
    if n == 0 {
        if d == 0 {
            out.push(Exponent(vec![]));
        }
        return out;
    }
    let mut cur = vec![0u32; n];
    rec(&mut out, &mut cur, 0, d);
    out
}

/// All monomials of total degree <= d, grouped by ascending degree.
pub fn monomials_upto(n: usize, d: u32) -> Vec<Exponent> {
    (0..=d).flat_map(|t| monomials_of_degree(n, t)).collect()
}

/// Numerical rank by singular-value gap. The threshold is relative to the
/// larger of the matrix's top singular value and the caller's scale anchor
/// (typically the coefficient scale of the system), so that blocks made
/// entirely of roundoff debris rank as zero.
fn rank_with_gap(
    m: &DMatrix<Complex64>,
    rho: f64,
    gap: f64,
    degree: usize,
    anchor: f64,
) -> Result<usize> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(0);
    }
    // real-coefficient systems are common; their singular values come much
    // cheaper from a real SVD
    let sv = if m.iter().all(|c| c.im == 0.0) {
        let real = DMatrix::<f64>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].re);
        real.singular_values()
    } else {
        m.clone().singular_values()
    };
    let smax = sv.iter().copied().fold(0.0f64, f64::max);
    if smax == 0.0 {
        return Ok(0);
    }
    let thresh = rho * smax.max(anchor);
    let rank = sv.iter().filter(|&&s| s > thresh).count();
    if rank > 0 && rank < sv.len() {
        let below = sv[rank];
        if below > 0.0 {
            let ratio = sv[rank - 1] / below;
            if ratio < gap {
                return Err(Error::RankIndeterminate { degree, gap: ratio });
            }
        }
    }
    Ok(rank)
}

fn system_scale(p: &PolySystem) -> f64 {
    p.polys
        .iter()
        .map(|q| q.max_coeff_abs())
        .fold(0.0f64, f64::max)
        .max(1e-300)
}

/// Dimension of the dual space truncated at order `t` for the system
/// translated so that `z` sits at the origin.
fn dual_dimension(local: &PolySystem, t: u32, rho: f64, gap: f64) -> Result<usize> {
    let n = local.n;
    let cols = monomials_upto(n, t);
    let scale = system_scale(local);
    if t == 0 {
        // the evaluation functional survives iff every constant term is zero;
        // treat approximate zeros through the same rank machinery
        let consts: Vec<Complex64> = local
            .polys
            .iter()
            .map(|p| p.coeff(&Exponent::zero(n)).mid())
            .collect();
        let m = DMatrix::from_fn(local.polys.len(), 1, |i, _| consts[i]);
        let rank = if m.norm() / scale > rho { 1 } else { 0 };
        return Ok(1 - rank);
    }
    let col_index = |e: &Exponent| cols.iter().position(|x| x == e).unwrap();
    let shifts = monomials_upto(n, t - 1);
    let nrows = shifts.len() * local.polys.len();
    let mut m = DMatrix::<Complex64>::zeros(nrows, cols.len());
    let mut row = 0;
    for gamma in &shifts {
        for p in &local.polys {
            for (e, c) in p.terms() {
                let shifted = e.mul(gamma);
                if shifted.total_degree() <= t {
                    m[(row, col_index(&shifted))] += c.mid();
                }
            }
            row += 1;
        }
    }
    let rank = rank_with_gap(&m, rho, gap, t as usize, scale)?;
    Ok(cols.len() - rank)
}

fn translate_to_origin(p: &PolySystem, z: &[BallC]) -> Result<PolySystem> {
    if z.iter().all(|c| c.is_exact_zero()) {
        return Ok(p.clone());
    }
    let n = p.n;
    let id: Vec<Vec<BallC>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { BallC::ONE } else { BallC::ZERO })
                .collect()
        })
        .collect();
    p.try_map(|q| q.compose_affine(&id, z))
}

/// Local Hilbert function of `p` at `z`, truncated at degree `d_top`.
pub fn hilbert_profile(p: &PolySystem, z: &[BallC], d_top: u32) -> Result<HilbertProfile> {
    hilbert_profile_tol(p, z, d_top, DEFAULT_RANK_TOL, DEFAULT_GAP)
}

pub fn hilbert_profile_tol(
    p: &PolySystem,
    z: &[BallC],
    d_top: u32,
    rho: f64,
    gap: f64,
) -> Result<HilbertProfile> {
    let local = translate_to_origin(p, z)?;
    let mut dims = Vec::with_capacity(d_top as usize + 1);
    let mut values = Vec::with_capacity(d_top as usize + 1);
    let mut terminated = false;
    for t in 0..=d_top {
        let dim = dual_dimension(&local, t, rho, gap)?;
        let h = if t == 0 { dim } else { dim - dims[t as usize - 1] };
        dims.push(dim);
        values.push(h);
        if h == 0 {
            terminated = true;
            break;
        }
    }
    Ok(HilbertProfile { values, terminated, truncation: d_top as usize })
}

/// Multiplicity of an isolated zero: extends the truncation degree until the
/// Hilbert function hits zero or the cap is reached.
pub fn multiplicity(p: &PolySystem, z: &[BallC], cap: u32) -> Result<usize> {
    let profile = hilbert_profile(p, z, cap)?;
    if !profile.terminated {
        return Err(Error::Degenerate(format!(
            "Hilbert function did not terminate by degree {cap}; the zero may not be isolated"
        )));
    }
    Ok(profile.multiplicity())
}

/// Coefficients of (1 + t + ... + t^(d-1))^kappa.
pub fn target_series(kappa: usize, d: u32) -> Vec<usize> {
    let block: Vec<usize> = vec![1; d as usize];
    let mut acc = vec![1usize];
    for _ in 0..kappa {
        let mut next = vec![0usize; acc.len() + block.len() - 1];
        for (i, a) in acc.iter().enumerate() {
            for (j, b) in block.iter().enumerate() {
                next[i + j] += a * b;
            }
        }
        acc = next;
    }
    acc
}

/// True iff the local Hilbert series at `z` is exactly
/// (1 + t + ... + t^(d-1))^kappa.
pub fn is_regular_zero(p: &PolySystem, z: &[BallC], kappa: usize, d: u32) -> Result<bool> {
    let target = target_series(kappa, d);
    let d_top = (kappa as u32) * (d - 1) + 1;
    let profile = hilbert_profile(p, z, d_top)?;
    let mut padded = profile.values.clone();
    while padded.len() < d_top as usize + 1 {
        padded.push(0);
    }
    let mut expect = target.clone();
    while expect.len() < d_top as usize + 1 {
        expect.push(0);
    }
    Ok(padded == expect && profile.terminated)
}

/// Hilbert function per degree of the ideal generated by homogeneous forms.
pub fn graded_hilbert_function(forms: &[Polynomial], n: usize, d_top: u32) -> Result<Vec<usize>> {
    let degs: Vec<u32> = forms
        .iter()
        .map(|f| {
            f.min_degree()
                .filter(|&d| d == f.max_degree())
                .ok_or_else(|| Error::Degenerate("form is not homogeneous".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut hf = Vec::with_capacity(d_top as usize + 1);
    for s in 0..=d_top {
        let cols = monomials_of_degree(n, s);
        let col_index = |e: &Exponent| cols.iter().position(|x| x == e).unwrap();
        let mut rows: Vec<Vec<Complex64>> = Vec::new();
        for (f, &df) in forms.iter().zip(&degs) {
            if s < df {
                continue;
            }
            for gamma in monomials_of_degree(n, s - df) {
                let mut row = vec![Complex64::new(0.0, 0.0); cols.len()];
                for (e, c) in f.terms() {
                    row[col_index(&e.mul(&gamma))] += c.mid();
                }
                rows.push(row);
            }
        }
        let rank = if rows.is_empty() {
            0
        } else {
            let m = DMatrix::from_fn(rows.len(), cols.len(), |i, j| rows[i][j]);
            let anchor = forms.iter().map(|f| f.max_coeff_abs()).fold(0.0f64, f64::max).max(1e-300);
            rank_with_gap(&m, DEFAULT_RANK_TOL, DEFAULT_GAP, s as usize, anchor)?
        };
        hf.push(cols.len() - rank);
    }
    Ok(hf)
}

/// Coefficients of prod_i (1 - t^{d_i}) / (1 - t)^n up to degree d_top: the
/// complete-intersection series for homogeneous forms of the given degrees.
pub fn complete_intersection_series(degs: &[u32], n: usize, d_top: u32) -> Vec<usize> {
    // numerator as signed coefficients
    let mut num = vec![0i64; d_top as usize + 1];
    num[0] = 1;
    for &d in degs {
        let mut next = vec![0i64; d_top as usize + 1];
        for (i, &c) in num.iter().enumerate() {
            if c != 0 {
                next[i] += c;
                if i + d as usize <= d_top as usize {
                    next[i + d as usize] -= c;
                }
            }
        }
        num = next;
    }
    // divide by (1-t)^n: multiply by the binomial series n times
    let mut acc = num;
    for _ in 0..n {
        let mut run = 0i64;
        for c in acc.iter_mut() {
            run += *c;
            *c = run;
        }
    }
    acc.into_iter()
        .map(|c| {
            debug_assert!(c >= 0);
            c.max(0) as usize
        })
        .collect()
}

/// Verdict of the regular-sequence test for homogeneous forms: compares the
/// graded Hilbert function with the complete-intersection series. Degrees may
/// be mixed.
pub fn regular_sequence_check(forms: &[Polynomial], n: usize) -> Result<bool> {
    if forms.is_empty() {
        return Ok(true);
    }
    let degs: Vec<u32> = forms
        .iter()
        .map(|f| {
            f.min_degree()
                .filter(|&d| d == f.max_degree())
                .ok_or_else(|| Error::Degenerate("form is not homogeneous".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    let d_top: u32 = degs.iter().map(|&d| d - 1).sum::<u32>() + 1;
    let hf = graded_hilbert_function(forms, n, d_top)?;
    let ci = complete_intersection_series(&degs, n, d_top);
    Ok(hf == ci[..hf.len()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::poly_from_terms;

    fn running_example() -> PolySystem {
        PolySystem::new(
            2,
            vec![
                poly_from_terms(2, &[(&[1, 0], 2.0, 0.0), (&[0, 1], 1.0, 0.0), (&[2, 0], 1.0, 0.0)]),
                poly_from_terms(2, &[(&[1, 0], 8.0, 0.0), (&[0, 1], 4.0, 0.0), (&[0, 2], 1.0, 0.0)]),
            ],
        )
    }

    fn origin(n: usize) -> Vec<BallC> {
        vec![BallC::ZERO; n]
    }

    #[test]
    fn triple_zero_profile() {
        let g = running_example();
        let prof = hilbert_profile(&g, &origin(2), 4).unwrap();
        assert_eq!(prof.values, vec![1, 1, 1, 0]);
        assert!(prof.terminated);
        assert_eq!(prof.multiplicity(), 3);
        assert_eq!(prof.kappa(), 1);
    }

    #[test]
    fn simple_zero_profile() {
        let f = PolySystem::new(
            3,
            (0..3).map(|i| Polynomial::variable(3, i)).collect(),
        );
        let prof = hilbert_profile(&f, &origin(3), 3).unwrap();
        assert_eq!(prof.values, vec![1, 0]);
        assert_eq!(prof.multiplicity(), 1);
    }

    #[test]
    fn cross_cubics_multiplicity_eleven() {
        let g = PolySystem::new(
            3,
            vec![
                poly_from_terms(3, &[(&[1, 1, 0], 1.0, 0.0), (&[0, 0, 3], -1.0, 0.0)]),
                poly_from_terms(3, &[(&[0, 1, 1], 1.0, 0.0), (&[3, 0, 0], -1.0, 0.0)]),
                poly_from_terms(3, &[(&[1, 0, 1], 1.0, 0.0), (&[0, 3, 0], -1.0, 0.0)]),
            ],
        );
        let m = multiplicity(&g, &origin(3), 8).unwrap();
        assert_eq!(m, 11);
        let prof = hilbert_profile(&g, &origin(3), 6).unwrap();
        assert_eq!(prof.values, vec![1, 3, 3, 3, 1, 0]);
    }

    #[test]
    fn regular_zero_verdicts() {
        let g = running_example();
        assert!(is_regular_zero(&g, &origin(2), 1, 3).unwrap());
        assert!(!is_regular_zero(&g, &origin(2), 1, 2).unwrap());
        // simple zero is regular of order 1
        let f = PolySystem::new(2, vec![Polynomial::variable(2, 0), Polynomial::variable(2, 1)]);
        assert!(is_regular_zero(&f, &origin(2), 1, 1).unwrap());
    }

    #[test]
    fn mixed_order_system_is_not_regular_of_order_six() {
        // {x1, x2^2 + a x3^2 + x3^4, x3^3} with a != 0 has multiplicity 6 but
        // series (1+t)(1+t+t^2), so no (kappa, d) with d^kappa = 6 matches
        let g = PolySystem::new(
            3,
            vec![
                poly_from_terms(3, &[(&[1, 0, 0], 1.0, 0.0)]),
                poly_from_terms(3, &[(&[0, 2, 0], 1.0, 0.0), (&[0, 0, 2], 1.0, 0.0), (&[0, 0, 4], 1.0, 0.0)]),
                poly_from_terms(3, &[(&[0, 0, 3], 1.0, 0.0)]),
            ],
        );
        assert_eq!(multiplicity(&g, &origin(3), 8).unwrap(), 6);
        assert!(!is_regular_zero(&g, &origin(3), 1, 6).unwrap());
        // and the Jacobian kernel has dimension 2, so kappa = 1 is also wrong
        let prof = hilbert_profile(&g, &origin(3), 4).unwrap();
        assert_eq!(prof.kappa(), 2);
    }

    #[test]
    fn target_series_values() {
        assert_eq!(target_series(1, 3), vec![1, 1, 1]);
        assert_eq!(target_series(3, 1), vec![1]);
        assert_eq!(target_series(2, 2), vec![1, 2, 1]);
        assert_eq!(target_series(2, 2).iter().sum::<usize>(), 4);
    }

    #[test]
    fn regular_sequence_examples() {
        // single cubic in one variable
        let f = vec![poly_from_terms(1, &[(&[3], 1.0, 0.0)])];
        assert!(regular_sequence_check(&f, 1).unwrap());
        // x1^2, x1 x2 share the line x1 = 0
        let f = vec![
            poly_from_terms(2, &[(&[2, 0], 1.0, 0.0)]),
            poly_from_terms(2, &[(&[1, 1], 1.0, 0.0)]),
        ];
        assert!(!regular_sequence_check(&f, 2).unwrap());
        // the inflated initial forms x1^3, x2^3
        let f = vec![
            poly_from_terms(2, &[(&[3, 0], 1.0, 0.0)]),
            poly_from_terms(2, &[(&[0, 3], 1.0, 0.0)]),
        ];
        assert!(regular_sequence_check(&f, 2).unwrap());
    }

    #[test]
    fn ci_series_mixed_degrees() {
        let s = complete_intersection_series(&[4, 4, 5], 3, 11);
        assert_eq!(s, vec![1, 3, 6, 10, 13, 14, 13, 10, 6, 3, 1, 0]);
        assert_eq!(s.iter().sum::<usize>(), 80);
    }

    #[test]
    fn weak_gap_is_reported_not_guessed() {
        // linear coefficients 3e-8 and 1e-8 straddle the rank threshold with
        // a ratio far below the required gap
        let g = PolySystem::new(
            2,
            vec![
                poly_from_terms(2, &[(&[2, 0], 1.0, 0.0), (&[0, 1], 3.0e-8, 0.0)]),
                poly_from_terms(2, &[(&[0, 2], 1.0, 0.0), (&[1, 0], 1.0e-8, 0.0)]),
            ],
        );
        let err = hilbert_profile(&g, &origin(2), 3).unwrap_err();
        assert!(matches!(err, crate::error::Error::RankIndeterminate { .. }), "got {err}");
    }

    #[test]
    fn profile_at_translated_point() {
        // translate the running example away from the origin and ask there
        let g = running_example();
        let z = [BallC::real(0.25), BallC::real(-0.5)];
        let id = vec![vec![BallC::ONE, BallC::ZERO], vec![BallC::ZERO, BallC::ONE]];
        let shift: Vec<BallC> = z.iter().map(|c| c.neg()).collect();
        let moved = g.try_map(|p| p.compose_affine(&id, &shift)).unwrap();
        let prof = hilbert_profile(&moved, &z, 4).unwrap();
        assert_eq!(prof.values, vec![1, 1, 1, 0]);
    }
}
