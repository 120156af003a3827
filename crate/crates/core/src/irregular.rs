//! The matrix-transform route for systems the inflation pipeline cannot
//! handle: apply a supplied polynomial matrix T to reach a system whose
//! initial forms share a degree, certify an isolating region there, and
//! report a multiplicity upper bound.
//!
//! The bound itself comes from the monomial-content-reduced rows: stripping
//! the common monomial factor from each row of T keeps the reduced rows
//! inside the ideal, and when their initial forms are a regular sequence the
//! local count of that initial system is the product of its degrees.

use crate::ball::{BallC, RInt};
use crate::bounds::{self, Strategy};
use crate::certify::{rouche_window, Certificate, CertificateMode};
use crate::cmatrix::BallMatrix;
use crate::error::{Error, Result};
use crate::hilbert;
use crate::poly::{Exponent, PolySystem, Polynomial};
use crate::preinflate::TransformLog;

/// An n x m matrix of polynomials acting on systems from the left.
#[derive(Clone, Debug)]
pub struct MatrixTransform {
    pub entries: Vec<Vec<Polynomial>>,
}

impl MatrixTransform {
    pub fn new(entries: Vec<Vec<Polynomial>>) -> Result<Self> {
        let cols = entries.first().map_or(0, |r| r.len());
        if entries.iter().any(|r| r.len() != cols) {
            return Err(Error::Degenerate("ragged transform matrix".into()));
        }
        Ok(MatrixTransform { entries })
    }

    pub fn nrows(&self) -> usize {
        self.entries.len()
    }

    pub fn ncols(&self) -> usize {
        self.entries.first().map_or(0, |r| r.len())
    }

    /// Local invertibility: the determinant's constant term is a ball
    /// excluding zero. Only meaningful for square transforms.
    pub fn locally_invertible(&self) -> Result<bool> {
        if self.nrows() != self.ncols() {
            return Ok(false);
        }
        let n = self.nrows();
        let nvars = self.entries[0][0].nvars();
        fn det(m: &MatrixTransform, rows: &[usize], cols: &[usize], nvars: usize) -> Polynomial {
            if rows.is_empty() {
                return Polynomial::one(nvars);
            }
            let r = rows[0];
            let mut acc = Polynomial::zero(nvars);
            for (k, &c) in cols.iter().enumerate() {
                if m.entries[r][c].is_zero() {
                    continue;
                }
                let rest: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
                let minor = det(m, &rows[1..], &rest, nvars);
                let term = m.entries[r][c].mul(&minor);
                acc = if k % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
            }
            acc
        }
        let d = det(
            self,
            &(0..n).collect::<Vec<_>>(),
            &(0..n).collect::<Vec<_>>(),
            nvars,
        );
        Ok(!d.coeff(&Exponent::zero(nvars)).contains_zero())
    }

    /// The per-row monomial content: the exponentwise minimum over the
    /// significant terms of the whole row of T.
    pub fn row_content(&self, row: usize) -> Exponent {
        let nvars = self.entries[0][0].nvars();
        let mut content: Option<Vec<u32>> = None;
        for entry in &self.entries[row] {
            for (e, c) in entry.terms() {
                if c.mid().norm() == 0.0 {
                    continue;
                }
                content = Some(match content {
                    None => e.0.clone(),
                    Some(cur) => cur.iter().zip(&e.0).map(|(a, b)| (*a).min(*b)).collect(),
                });
            }
        }
        Exponent(content.unwrap_or_else(|| vec![0; nvars]))
    }

    /// Divide a row by a monomial (requires divisibility of every term).
    fn divide_row(&self, row: usize, m: &Exponent) -> Result<Vec<Polynomial>> {
        self.entries[row]
            .iter()
            .map(|p| {
                let n = p.nvars();
                let mut out = Polynomial::zero(n);
                for (e, c) in p.terms() {
                    if e.0.iter().zip(&m.0).any(|(a, b)| a < b) {
                        return Err(Error::Degenerate(
                            "row content does not divide a term".into(),
                        ));
                    }
                    out.add_term(
                        Exponent(e.0.iter().zip(&m.0).map(|(a, b)| a - b).collect()),
                        *c,
                    );
                }
                Ok(out)
            })
            .collect()
    }

    /// Transform with the monomial content stripped from each row. The
    /// reduced rows applied to a system stay inside the generated ideal.
    pub fn content_reduced(&self) -> Result<MatrixTransform> {
        let entries = (0..self.nrows())
            .map(|r| self.divide_row(r, &self.row_content(r)))
            .collect::<Result<Vec<_>>>()?;
        MatrixTransform::new(entries)
    }
}

/// Row i of the result is the sum over j of `T[i][j] * G_j`.
pub fn apply_matrix(t: &MatrixTransform, g: &PolySystem) -> Result<PolySystem> {
    if t.ncols() != g.polys.len() {
        return Err(Error::DimensionMismatch { expected: g.polys.len(), got: t.ncols() });
    }
    let n = g.n;
    let polys = t
        .entries
        .iter()
        .map(|row| {
            let mut acc = Polynomial::zero(n);
            for (j, entry) in row.iter().enumerate() {
                if !entry.is_zero() {
                    acc = acc.add(&entry.mul(&g.polys[j]));
                }
            }
            acc
        })
        .collect();
    Ok(PolySystem::new(n, polys))
}

/// Report of the upper-bound certification.
#[derive(Clone, Debug)]
pub struct UpperBoundReport {
    pub certificate: Certificate,
    /// Product of the initial degrees of the content-reduced rows.
    pub bound: u64,
    /// Initial degrees entering the bound.
    pub reduced_degrees: Vec<u32>,
    /// Zero count of T*G (with multiplicity) in every admissible ball.
    pub transformed_count: u64,
    pub locally_invertible: bool,
}

/// Certify an isolating region for T*G around the origin and bound the
/// multiplicity of the original system there.
///
/// Requirements: all initial forms of T*G share a common degree (so the
/// Rouché step applies), and the initial forms of the content-reduced rows
/// form a regular sequence (so the bound is the product of their degrees).
/// When `f` is supplied, the bounds are computed on T*f instead, covering a
/// cluster of the original system near the origin.
pub fn certify_upper_bound(
    g: &PolySystem,
    t: &MatrixTransform,
    f: Option<&PolySystem>,
    strategy: Strategy,
) -> Result<UpperBoundReport> {
    let p = apply_matrix(t, g)?;
    if p.polys.len() != p.n {
        return Err(Error::NotSquare { m: p.polys.len(), n: p.n });
    }
    let n = p.n;
    // common initial degree of T*G
    let degrees: Vec<u32> = p
        .polys
        .iter()
        .map(|q| q.min_degree().ok_or(Error::ZeroPolynomial))
        .collect::<Result<Vec<_>>>()?;
    let d = degrees[0];
    if degrees.iter().any(|&x| x != d) {
        return Err(Error::Degenerate(format!(
            "initial degrees {degrees:?} are mixed; equalize them with an uneven inflation first"
        )));
    }
    // the Rouché side runs on T*f when a perturbed system is supplied
    let certified_system = match f {
        Some(f_sys) => apply_matrix(t, f_sys)?,
        None => p.clone(),
    };
    let slice = PolySystem::new(
        n,
        certified_system
            .polys
            .iter()
            .map(|q| q.homogeneous_part(d))
            .collect(),
    );
    let lb = bounds::lower_bound_sphere(&slice, d, strategy)?;
    let m1 = bounds::upper_bound_high(&certified_system, d);
    let m2 = bounds::upper_bound_low(&certified_system, d);
    let (eps_minus, eps_plus) = rouche_window(RInt::point(lb.lo), m1, m2, d)?;
    // the transformed zero count: n homogeneous forms of degree d with no
    // common sphere zero form a regular sequence, so the count is d^n
    let transformed_count = (d as u64).pow(n as u32);

    // content-reduced rows stay in the ideal; their initial forms give the bound
    let reduced = t.content_reduced()?;
    let h = apply_matrix(&reduced, g)?;
    let reduced_degrees: Vec<u32> = h
        .polys
        .iter()
        .map(|q| q.min_degree().ok_or(Error::ZeroPolynomial))
        .collect::<Result<Vec<_>>>()?;
    let initial_forms: Vec<Polynomial> = h
        .polys
        .iter()
        .map(|q| q.initial_form())
        .collect::<Result<Vec<_>>>()?;
    if !hilbert::regular_sequence_check(&initial_forms, n)? {
        return Err(Error::BoundFailure(
            "initial forms of the content-reduced rows are not a regular sequence; \
             no finite product bound applies"
                .into(),
        ));
    }
    let bound: u64 = reduced_degrees.iter().map(|&x| x as u64).product();
    let locally_invertible = t.locally_invertible()?;

    // the matrix acts on equations, not coordinates, so the region is the
    // plain epsilon-ball; storing T as the polynomial-matrix stage makes the
    // log replay reproduce T times the system for independent verification
    let log = TransformLog {
        amat: BallMatrix::identity(n),
        shift: vec![BallC::ZERO; n],
        bmat: BallMatrix::identity(t.ncols()),
        cmat: t.entries.clone(),
        var_subs: Vec::new(),
        weights: vec![1; n],
        kappa: n,
        k: d,
        ell: d,
    };
    let certificate = Certificate {
        mode: CertificateMode::Bound,
        kappa: n,
        d,
        m: lb.lo,
        m1: m1.hi,
        m2: m2.hi,
        eps_minus,
        eps_plus,
        inflated_count: transformed_count,
        cluster_count: bound,
        count_is_upper_bound: true,
        strategy_used: lb.strategy_used,
        log,
        valid: true,
        reason: format!(
            "region certified on the transformed system; count bounded by the \
             content-reduced initial degrees {reduced_degrees:?}"
        ),
    };
    Ok(UpperBoundReport {
        certificate,
        bound,
        reduced_degrees,
        transformed_count,
        locally_invertible,
    })
}
