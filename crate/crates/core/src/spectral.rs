//! Jacobian evaluation, numerical rank and kernel detection via SVD, and the
//! construction of a nearby singular system.
//!
//! The SVD runs on ball midpoints. Rigor is not needed here: the constructed
//! singular system is made exact by construction (its kernel is enforced
//! algebraically), and the certification burden stays with the Rouché step.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::ball::BallC;
use crate::cmatrix::BallMatrix;
use crate::error::{Error, Result};
use crate::poly::{Exponent, PolySystem, Polynomial};

/// Default relative threshold for "small" singular values.
pub const DEFAULT_TAU_REL: f64 = 1e-4;

/// Jacobian of a square system at a point, with its midpoint SVD.
#[derive(Clone, Debug)]
pub struct JacobianData {
    pub matrix: BallMatrix,
    pub singular_values: Vec<f64>,
    /// Columns are left singular vectors.
    pub left_vectors: DMatrix<Complex64>,
    /// Columns are right singular vectors.
    pub right_vectors: DMatrix<Complex64>,
}

/// Result of breadth detection: how many singular values fall below the
/// threshold, and an orthonormal basis approximating the kernel.
#[derive(Clone, Debug)]
pub struct BreadthReport {
    pub kappa: usize,
    /// kappa orthonormal vectors spanning the numerical kernel.
    pub kernel_basis: Vec<Vec<Complex64>>,
    pub tau_used: f64,
}

/// Entrywise Jacobian enclosure plus a midpoint SVD.
pub fn jacobian_at(f: &PolySystem, z: &[BallC]) -> Result<JacobianData> {
    f.require_square()?;
    let n = f.n;
    let mut m = BallMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = f.polys[i].derivative(j).evaluate(z)?;
        }
    }
    let mid = m.to_mid();
    let svd = mid
        .clone()
        .try_svd(true, true, 1e-14, 10_000)
        .ok_or_else(|| Error::Degenerate("SVD did not converge".into()))?;
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    Ok(JacobianData {
        matrix: m,
        singular_values: svd.singular_values.iter().copied().collect(),
        left_vectors: u,
        right_vectors: v_t.adjoint(),
    })
}

/// Count singular values below the absolute threshold `tau` and return the
/// corresponding right singular vectors as a kernel basis.
pub fn detect_breadth(j: &JacobianData, tau: f64) -> Result<BreadthReport> {
    if tau <= 0.0 {
        return Err(Error::Degenerate("tau must be positive".into()));
    }
    let n = j.singular_values.len();
    let sigma_max = j.singular_values.first().copied().unwrap_or(0.0);
    if sigma_max < tau && sigma_max > 0.0 {
        return Err(Error::Degenerate(format!(
            "tau {tau:.3e} exceeds the largest singular value {sigma_max:.3e}; every direction counts as small"
        )));
    }
    let kappa = j.singular_values.iter().filter(|&&s| s < tau).count();
    let mut kernel_basis = Vec::with_capacity(kappa);
    for k in 0..kappa {
        let col = j.right_vectors.column(n - kappa + k);
        kernel_basis.push(phase_normalize(col.iter().copied().collect()));
    }
    Ok(BreadthReport { kappa, kernel_basis, tau_used: tau })
}

/// Convenience: breadth at the default relative threshold.
pub fn detect_breadth_rel(j: &JacobianData, tau_rel: f64) -> Result<BreadthReport> {
    let sigma_max = j.singular_values.first().copied().unwrap_or(0.0);
    let tau = if sigma_max > 0.0 { tau_rel * sigma_max } else { tau_rel };
    detect_breadth(j, tau)
}

/// Rotate a vector's phase so its first significant component is real
/// positive. Keeps kernel choices deterministic across SVD backends.
fn phase_normalize(mut v: Vec<Complex64>) -> Vec<Complex64> {
    let maxmod = v.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if maxmod == 0.0 {
        return v;
    }
    let lead = v
        .iter()
        .find(|c| c.norm() > 1e-12 * maxmod)
        .copied()
        .unwrap_or(Complex64::new(1.0, 0.0));
    let phase = lead / lead.norm();
    for c in &mut v {
        *c /= phase;
        if c.im.abs() < 1e-300 {
            c.im = 0.0;
        }
    }
    v
}

/// Unitary matrix sending e_1..e_kappa onto the kernel basis and the
/// remaining coordinate vectors onto its orthogonal complement.
pub fn rotation_for_kernel(j: &JacobianData, report: &BreadthReport) -> Result<BallMatrix> {
    let n = j.right_vectors.nrows();
    if report.kappa == 0 {
        return Err(Error::Degenerate("breadth zero: no kernel to rotate".into()));
    }
    let mut cols: Vec<Vec<Complex64>> = report.kernel_basis.clone();
    for k in 0..n - report.kappa {
        let col = j.right_vectors.column(k);
        cols.push(phase_normalize(col.iter().copied().collect()));
    }
    let mut m = BallMatrix::zeros(n, n);
    for (jcol, col) in cols.iter().enumerate() {
        for i in 0..n {
            m[(i, jcol)] = BallC::from_mid(col[i]);
        }
    }
    Ok(m)
}

/// Output of the nearby-singular-system construction.
#[derive(Clone, Debug)]
pub struct NearbySingular {
    pub system: PolySystem,
    pub kappa: usize,
    /// Rigorous upper bound on the coefficient one-norm of the modification.
    pub distance: f64,
}

/// Construct a system with an exact singular zero at `z` by zeroing the
/// `kappa` smallest singular values of the Jacobian and correcting the
/// constant terms.
///
/// The returned system has exact (zero-radius) coefficients: it is a chosen
/// object, not an enclosure. Its value at `z` is a ball with midpoint exactly
/// zero, and its Jacobian at `z` has a kernel of dimension `kappa` up to
/// roundoff.
pub fn nearest_singular(f: &PolySystem, z: &[BallC], tau_rel: f64) -> Result<NearbySingular> {
    f.require_square()?;
    let n = f.n;
    let jd = jacobian_at(f, z)?;
    let report = detect_breadth_rel(&jd, tau_rel)?;
    let kappa = report.kappa;
    if kappa == 0 {
        return Err(Error::Degenerate(
            "Jacobian is numerically nonsingular; certify a simple zero instead".into(),
        ));
    }
    // truncated Jacobian: zero the kappa smallest singular values
    let mut d = DMatrix::<Complex64>::zeros(n, n);
    for (i, s) in jd.singular_values.iter().enumerate() {
        if i < n - kappa {
            d[(i, i)] = Complex64::new(*s, 0.0);
        }
    }
    let truncated = &jd.left_vectors * d * jd.right_vectors.adjoint();
    let delta = &truncated - jd.matrix.to_mid();

    let mut polys = Vec::with_capacity(n);
    let mut distance = crate::ball::RInt::ZERO;
    for i in 0..n {
        // midpoints only: the constructed system is exact by fiat
        let mut p = f.polys[i].filter_terms(|_| true);
        let mut p_exact = Polynomial::zero(n);
        for (e, c) in p.terms() {
            p_exact.add_term(e.clone(), BallC::from_mid(c.mid()));
        }
        p = p_exact;
        // linear correction (J' - J)(x - z)
        for jv in 0..n {
            let c = delta[(i, jv)];
            if c != Complex64::new(0.0, 0.0) {
                p.add_term(Exponent::unit(n, jv), BallC::from_mid(c));
                let shift_c = -c * z[jv].mid();
                p.add_term(Exponent::zero(n), BallC::from_mid(shift_c));
                distance = distance
                    .add(BallC::from_mid(c).abs())
                    .add(BallC::from_mid(shift_c).abs());
            }
        }
        // constant correction: make the deterministic evaluation at z vanish
        // exactly at the midpoint level (the constant term is summed last)
        let e0 = Exponent::zero(n);
        let c0 = p.coeff(&e0);
        p.remove_term(&e0);
        let partial = p.evaluate(z)?;
        let new_c0 = BallC::from_mid(-partial.mid());
        if !new_c0.is_exact_zero() {
            p.add_term(e0.clone(), new_c0);
        }
        distance = distance.add(BallC::from_mid(new_c0.mid() - c0.mid()).abs());
        polys.push(p);
    }
    let system = PolySystem::new(n, polys);
    Ok(NearbySingular { system, kappa, distance: distance.hi })
}

/// Smallest order d in 2..=d_max whose pre-inflated, inflated degree-d slice
/// passes the nonvanishing lower-bound test with margin above `tol`.
pub fn suggest_order(
    g: &PolySystem,
    z: &[BallC],
    kappa: usize,
    d_max: u32,
    tol: f64,
) -> Option<u32> {
    for d in 2..=d_max {
        let Ok((p, log)) = crate::preinflate::preinflate(g, z, kappa, d, d) else {
            continue;
        };
        let inflated = crate::inflation::InflationMap::standard(g.n, kappa, d).apply(&p);
        let slice = PolySystem::new(g.n, inflated.polys.iter().map(|q| q.homogeneous_part(d)).collect());
        if let Ok(report) = crate::bounds::lower_bound_sphere(
            &slice,
            d,
            crate::bounds::Strategy::DominantDiagonal,
        ) {
            if report.lo > tol {
                drop(log);
                return Some(d);
            }
        }
    }
    None
}
