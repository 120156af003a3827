//! The four-stage normalization that brings a square system with a singular
//! zero into pre-inflatable form, together with a replayable transform log.
//!
//! Stage A rotates the domain so the Jacobian kernel is spanned by the first
//! coordinate vectors and translates the zero to the origin. Stage B row
//! reduces the linear parts. Stage C eliminates low-degree tail-variable terms
//! from the first kappa rows using the tail rows as pivots. Stage D absorbs
//! low-degree head-only terms of the tail rows into changes of variables.
//!
//! Every transform is an exactly chosen object (zero-radius entries); the log
//! can be replayed on any system in the same variables, which is how the
//! original (perturbed) system is pushed through the same normalization.

use crate::ball::BallC;
use crate::cmatrix::BallMatrix;
use crate::error::{Error, Result};
use crate::poly::{Exponent, PolySystem, Polynomial};
use crate::spectral::{self, BreadthReport};

/// Relative size below which a coefficient is ignored when *choosing*
/// pivots and normalizations. Choices stay sound regardless; this only
/// keeps roundoff debris from steering them.
const CHOICE_TOL: f64 = 1e-9;

/// Composable record of the normalization: the affine rotation and shift, the
/// constant row operations, the polynomial elimination matrix, the variable
/// substitutions, and (once inflation happens) the weight vector.
#[derive(Clone, Debug)]
pub struct TransformLog {
    pub amat: BallMatrix,
    pub shift: Vec<BallC>,
    pub bmat: BallMatrix,
    /// Polynomial matrix of the elimination stage, row-major.
    pub cmat: Vec<Vec<Polynomial>>,
    /// Variable substitutions x_i -> x_i + q_i with q_i in the head variables.
    pub var_subs: Vec<(usize, Polynomial)>,
    /// Inflation weights; all ones until inflation is applied.
    pub weights: Vec<u32>,
    pub kappa: usize,
    pub k: u32,
    pub ell: u32,
}

impl TransformLog {
    /// Replay the logged transforms on an arbitrary system in the same
    /// variables: rotate and shift the domain, row-reduce, eliminate,
    /// substitute, inflate.
    pub fn replay(&self, f: &PolySystem) -> Result<PolySystem> {
        let rotated = f.try_map(|p| p.compose_affine(&self.amat.rows(), &self.shift))?;
        let rowed = apply_matrix_rows(&self.bmat, &rotated);
        let eliminated = apply_poly_matrix(&self.cmat, &rowed);
        let mut subbed = eliminated;
        for (i, q) in &self.var_subs {
            subbed = subbed.try_map(|p| p.substitute_variable(*i, q))?;
        }
        Ok(subbed.map(|p| p.substitute_powers(&self.weights)))
    }

    /// Verify the invertibility of every stage: the affine matrix and row
    /// matrix have determinant balls excluding zero, and the elimination
    /// matrix has an exactly constant nonzero determinant.
    pub fn verify_invertible(&self) -> Result<()> {
        if self.amat.det()?.contains_zero() {
            return Err(Error::Degenerate("affine stage is not invertible".into()));
        }
        if self.bmat.det()?.contains_zero() {
            return Err(Error::Degenerate("row stage is not invertible".into()));
        }
        let nvars = self.weights.len();
        if self.cmat.len() != nvars || self.cmat.iter().any(|row| row.len() != nvars) {
            return Err(Error::NotSquare { m: self.cmat.len(), n: nvars });
        }
        let det_c = poly_matrix_det(&self.cmat);
        let constant = det_c.coeff(&Exponent::zero(nvars));
        if constant.contains_zero() {
            return Err(Error::Degenerate(
                "elimination matrix determinant has no invertible constant term".into(),
            ));
        }
        // nonconstant part must vanish within radii
        for (e, c) in det_c.terms() {
            if !e.is_constant() && !c.contains_zero() {
                return Err(Error::Degenerate(
                    "elimination matrix determinant is not constant".into(),
                ));
            }
        }
        for (i, q) in &self.var_subs {
            for (e, _) in q.terms() {
                if e.0[*i..].iter().any(|&x| x > 0) {
                    return Err(Error::BadSubstitution { index: *i });
                }
            }
            if q.min_degree().is_some_and(|d| d < 2) {
                return Err(Error::Degenerate(
                    "variable substitution carries terms of degree below two".into(),
                ));
            }
        }
        Ok(())
    }
}

fn apply_matrix_rows(m: &BallMatrix, s: &PolySystem) -> PolySystem {
    let n = s.n;
    let polys = (0..m.nrows)
        .map(|i| {
            let mut acc = Polynomial::zero(n);
            for j in 0..m.ncols {
                let c = m[(i, j)];
                if !c.is_exact_zero() {
                    acc = acc.add(&s.polys[j].scale(c));
                }
            }
            acc
        })
        .collect();
    PolySystem::new(n, polys)
}

fn apply_poly_matrix(m: &[Vec<Polynomial>], s: &PolySystem) -> PolySystem {
    let n = s.n;
    let polys = m
        .iter()
        .map(|row| {
            let mut acc = Polynomial::zero(n);
            for (j, entry) in row.iter().enumerate() {
                if !entry.is_zero() {
                    acc = acc.add(&entry.mul(&s.polys[j]));
                }
            }
            acc
        })
        .collect();
    PolySystem::new(n, polys)
}

fn poly_matrix_det(m: &[Vec<Polynomial>]) -> Polynomial {
    let n = m.len();
    let nvars = m[0][0].nvars();
    fn rec(m: &[Vec<Polynomial>], rows: &[usize], cols: &[usize], nvars: usize) -> Polynomial {
        if rows.is_empty() {
            return Polynomial::one(nvars);
        }
        let r = rows[0];
        let mut acc = Polynomial::zero(nvars);
        for (k, &c) in cols.iter().enumerate() {
            if m[r][c].is_zero() {
                continue;
            }
            let rest: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
            let minor = rec(m, &rows[1..], &rest, nvars);
            let term = m[r][c].mul(&minor);
            acc = if k % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
        }
        acc
    }
    rec(
        m,
        &(0..n).collect::<Vec<_>>(),
        &(0..n).collect::<Vec<_>>(),
        nvars,
    )
}

/// Stage A: affine change of coordinates sending the origin to `z` with the
/// kernel rotated onto the leading coordinates.
pub fn step_a(
    g: &PolySystem,
    z: &[BallC],
    report: &BreadthReport,
) -> Result<(PolySystem, BallMatrix)> {
    let jd = spectral::jacobian_at(g, z)?;
    let amat = spectral::rotation_for_kernel(&jd, report)?;
    let out = g.try_map(|p| p.compose_affine(&amat.rows(), z))?;
    Ok((out, amat))
}

/// Stage B: row reduction of the linear parts. After stage A the linear parts
/// involve only the tail variables; the returned matrix B makes rows
/// kappa+1..n have linear part exactly x_i while the first kappa rows lose
/// their linear parts.
pub fn step_b(s: &PolySystem, kappa: usize) -> Result<(PolySystem, BallMatrix)> {
    let n = s.n;
    let nt = n - kappa;
    // linear coefficient matrix, tail columns only
    let mut work: Vec<Vec<BallC>> = (0..n)
        .map(|i| {
            (0..nt)
                .map(|c| s.polys[i].coeff(&Exponent::unit(n, kappa + c)))
                .collect()
        })
        .collect();
    let mut b = BallMatrix::identity(n);
    let mut avail: Vec<usize> = (0..n).collect();
    let mut pivots = Vec::with_capacity(nt);
    for c in 0..nt {
        let pr = *avail
            .iter()
            .max_by(|&&x, &&y| {
                work[x][c]
                    .abs_up()
                    .partial_cmp(&work[y][c].abs_up())
                    .unwrap()
            })
            .ok_or_else(|| Error::Degenerate("no pivot row left".into()))?;
        let piv = work[pr][c];
        if piv.contains_zero() {
            return Err(Error::Degenerate(format!(
                "linear parts are rank-deficient at tail column {c}: breadth may be misdetected"
            )));
        }
        avail.retain(|&x| x != pr);
        pivots.push(pr);
        let inv = piv.recip();
        for jc in 0..nt {
            work[pr][jc] = work[pr][jc].mul(&inv);
        }
        work[pr][c] = BallC::ONE;
        for jc in 0..n {
            b[(pr, jc)] = b[(pr, jc)].mul(&inv);
        }
        for r in 0..n {
            if r != pr && !work[r][c].is_exact_zero() {
                let f = work[r][c];
                for jc in 0..nt {
                    let sub = f.mul(&work[pr][jc]);
                    work[r][jc] = work[r][jc].sub(&sub);
                }
                work[r][c] = BallC::ZERO;
                for jc in 0..n {
                    let sub = f.mul(&b[(pr, jc)]);
                    b[(r, jc)] = b[(r, jc)].sub(&sub);
                }
            }
        }
    }
    // reorder: non-pivot rows first, then pivot rows in tail-column order
    let order: Vec<usize> = avail.into_iter().chain(pivots).collect();
    let mut bm = BallMatrix::zeros(n, n);
    for (newr, &oldr) in order.iter().enumerate() {
        for jc in 0..n {
            bm[(newr, jc)] = b[(oldr, jc)];
        }
    }
    // recenter the normalized linear slots; widening the radius by the
    // midpoint miss keeps the enclosure sound
    let mut out = apply_matrix_rows(&bm, s);
    let scale = s
        .polys
        .iter()
        .map(|p| p.max_coeff_abs())
        .fold(0.0f64, f64::max)
        .max(1.0);
    for (newr, p) in out.polys.iter_mut().enumerate() {
        for c in 0..nt {
            let e = Exponent::unit(n, kappa + c);
            let expected_one = newr == kappa + c;
            let target = if expected_one { BallC::ONE } else { BallC::ZERO };
            let cur = match p.remove_term(&e) {
                Some(cur) => cur,
                None if expected_one => {
                    return Err(Error::Degenerate(
                        "row reduction lost a pivot linear term".into(),
                    ))
                }
                None => continue,
            };
            let miss = (cur.mid() - target.mid()).norm();
            if miss > 1e-6 * scale {
                return Err(Error::Degenerate(format!(
                    "row reduction missed a linear slot by {miss:.3e}: breadth may be misdetected"
                )));
            }
            let mut fixed = target;
            fixed.rad = (cur.rad + miss).next_up();
            if !fixed.is_exact_zero() {
                p.add_term(e, fixed);
            }
        }
    }
    Ok((out, bm))
}

/// Stage C: eliminate every term of total degree <= k that involves a tail
/// variable from the first kappa rows, using the tail rows as pivots, then
/// scale each of the first kappa rows so the initial coefficient of its
/// degree-k slice is one.
pub fn step_c(
    s: &PolySystem,
    kappa: usize,
    k: u32,
) -> Result<(PolySystem, Vec<Vec<Polynomial>>)> {
    let n = s.n;
    let mut out: Vec<Polynomial> = s.polys.clone();
    let mut cmat: Vec<Vec<Polynomial>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        Polynomial::one(n)
                    } else {
                        Polynomial::zero(n)
                    }
                })
                .collect()
        })
        .collect();
    for j in 0..kappa {
        let mut guard = 0usize;
        loop {
            // offending term: smallest in the graded local order first
            // (highest degree, then lex-smallest exponent)
            // only terms with a nonzero midpoint can be cancelled; residual
            // zero-centered balls stay and are absorbed by the bounds later
            let off = out[j]
                .terms()
                .filter(|(e, c)| {
                    e.total_degree() <= k
                        && e.touches_tail(kappa)
                        && c.mid() != num_complex::Complex64::new(0.0, 0.0)
                })
                .map(|(e, c)| (e.clone(), *c))
                .min_by(|(a, _), (b, _)| a.cmp(b));
            let Some((e, c)) = off else { break };
            // pivot: the tail variable of largest index with positive exponent
            let piv = (kappa..n).rev().find(|&t| e.0[t] > 0).unwrap();
            let mut shifted = e.clone();
            shifted.0[piv] -= 1;
            // subtract mid(c) * x^shifted * p_piv; choosing the midpoint keeps
            // the cancelled slot centered at zero
            let mono = Polynomial::monomial(n, shifted, BallC::from_mid(c.mid()));
            out[j] = out[j].sub(&mono.mul(&out[piv]));
            for col in 0..n {
                if !cmat[piv][col].is_zero() {
                    let delta = mono.mul(&cmat[piv][col]);
                    cmat[j][col] = cmat[j][col].sub(&delta);
                }
            }
            guard += 1;
            if guard > 20_000 {
                return Err(Error::Degenerate(
                    "elimination did not terminate; input degrees too large".into(),
                ));
            }
        }
        // normalize on the degree-k slice when it carries a significant term;
        // the scaling is a choice, so an empty slice just skips it
        let rowmax = out[j].max_coeff_abs();
        let slice = out[j].homogeneous_part(k);
        let scale_from = slice
            .terms()
            .filter(|(_, c)| c.mid().norm() >= CHOICE_TOL * rowmax)
            .map(|(e, c)| (e.clone(), *c))
            .max_by(|(a, _), (b, _)| a.cmp(b));
        if let Some((e_norm, c_norm)) = scale_from {
            let inv = BallC::from_mid(c_norm.mid()).recip();
            out[j] = out[j].scale(inv);
            // recenter the normalized slot at one, widening by the midpoint miss
            let cur = out[j].coeff(&e_norm);
            let miss = (cur.mid() - num_complex::Complex64::new(1.0, 0.0)).norm();
            out[j].remove_term(&e_norm);
            let mut fixed = BallC::ONE;
            fixed.rad = (cur.rad + miss).next_up();
            out[j].add_term(e_norm, fixed);
            for col in 0..n {
                cmat[j][col] = cmat[j][col].scale(inv);
            }
        }
    }
    Ok((PolySystem::new(n, out), cmat))
}

/// Stage D: absorb head-only terms of degree 2..=ell from the tail rows into
/// substitutions x_i -> x_i - t, applied to the whole system.
pub fn step_d(
    s: &PolySystem,
    kappa: usize,
    ell: u32,
) -> Result<(PolySystem, Vec<(usize, Polynomial)>)> {
    let n = s.n;
    let mut out = s.clone();
    let mut qs: Vec<Polynomial> = vec![Polynomial::zero(n); n];
    let mut guard = 0usize;
    loop {
        let mut found: Option<(usize, Exponent, BallC)> = None;
        for i in kappa..n {
            let head = out.polys[i]
                .terms()
                .filter(|(e, c)| {
                    let d = e.total_degree();
                    d >= 2
                        && d <= ell
                        && e.head_only(kappa)
                        && c.mid() != num_complex::Complex64::new(0.0, 0.0)
                })
                .map(|(e, c)| (e.clone(), *c))
                .min_by(|(a, _), (b, _)| a.cmp(b));
            if let Some((e, c)) = head {
                found = Some((i, e, c));
                break;
            }
        }
        let Some((i, e, c)) = found else { break };
        let t = Polynomial::monomial(n, e, BallC::from_mid(c.mid()));
        let neg_t = t.neg();
        out = out.try_map(|p| p.substitute_variable(i, &neg_t))?;
        qs[i] = qs[i].add(&neg_t);
        guard += 1;
        if guard > 5_000 {
            return Err(Error::Degenerate(
                "variable absorption did not terminate".into(),
            ));
        }
    }
    let subs: Vec<(usize, Polynomial)> = (kappa..n)
        .filter(|&i| !qs[i].is_zero())
        .map(|i| (i, qs[i].clone()))
        .collect();
    Ok((out, subs))
}

/// Run the full normalization. Returns the pre-inflatable system together
/// with the transform log (with all-ones weights).
pub fn preinflate(
    g: &PolySystem,
    z: &[BallC],
    kappa: usize,
    k: u32,
    ell: u32,
) -> Result<(PolySystem, TransformLog)> {
    g.require_square()?;
    let n = g.n;
    if kappa == 0 || kappa > n {
        return Err(Error::Degenerate(format!("breadth {kappa} out of range")));
    }
    let (a_sys, amat) = if kappa == n {
        // zero Jacobian: nothing to rotate
        let amat = BallMatrix::identity(n);
        let sys = g.try_map(|p| p.compose_affine(&amat.rows(), z))?;
        (sys, amat)
    } else {
        let jd = spectral::jacobian_at(g, z)?;
        let sigma_max = jd.singular_values.first().copied().unwrap_or(0.0);
        // threshold between sigma_{n-kappa} and sigma_{n-kappa+1}
        let hi = jd.singular_values[n - kappa - 1];
        let lo = jd.singular_values[n - kappa];
        let tau = if lo < hi { (lo + hi) / 2.0 } else { 1e-4 * sigma_max };
        let report = spectral::detect_breadth(&jd, tau.max(f64::MIN_POSITIVE))?;
        if report.kappa != kappa {
            return Err(Error::Degenerate(format!(
                "requested breadth {kappa} but the Jacobian supports {}",
                report.kappa
            )));
        }
        step_a(g, z, &report)?
    };
    let (b_sys, bmat) = if kappa == n {
        (a_sys.clone(), BallMatrix::identity(n))
    } else {
        step_b(&a_sys, kappa)?
    };
    let (c_sys, cmat) = step_c(&b_sys, kappa, k)?;
    let (p_sys, var_subs) = step_d(&c_sys, kappa, ell)?;
    let log = TransformLog {
        amat,
        shift: z.to_vec(),
        bmat,
        cmat,
        var_subs,
        weights: vec![1; n],
        kappa,
        k,
        ell,
    };
    Ok((p_sys, log))
}

/// Relative size below which a forbidden slot counts as residue of the
/// working precision rather than a structural violation.
pub const NEGLIGIBLE_REL: f64 = 1e-12;

/// Verdict of the structural pre-inflatable check.
#[derive(Clone, Debug)]
pub struct PreInflatableCheck {
    pub is_preinflatable: bool,
    /// Terms that violate the definition beyond working precision: their
    /// coefficient balls exclude zero and are not negligible.
    pub offending_terms: Vec<(usize, Exponent)>,
    /// Forbidden slots that are not proven zero but are negligible at working
    /// precision (zero-centered balls or sub-threshold residues).
    pub indeterminate_terms: Vec<(usize, Exponent)>,
    /// Largest magnitude bound among the indeterminate slots.
    pub max_indeterminate_radius: f64,
}

/// Check the three structural clauses: kernel along the leading coordinates,
/// no low-degree tail terms in the head rows, no low-degree head-only terms
/// in the tail rows.
///
/// A slot fails only when its value provably exceeds the negligibility
/// threshold relative to the system scale; residues at roundoff size are
/// reported but do not refute the structure (the certification bounds absorb
/// them regardless).
pub fn check_preinflatable(
    p: &PolySystem,
    kappa: usize,
    k: u32,
    ell: u32,
) -> Result<PreInflatableCheck> {
    p.require_square()?;
    let n = p.n;
    let scale = p
        .polys
        .iter()
        .map(|q| q.max_coeff_abs())
        .fold(0.0f64, f64::max)
        .max(1e-300);
    let mut offending = Vec::new();
    let mut indeterminate = Vec::new();
    let mut max_rad = 0.0f64;
    let flag = |cond_violated: &BallC, i: usize, e: &Exponent,
                    offending: &mut Vec<(usize, Exponent)>,
                    indeterminate: &mut Vec<(usize, Exponent)>,
                    max_rad: &mut f64| {
        if cond_violated.contains_zero() || cond_violated.abs().hi <= NEGLIGIBLE_REL * scale {
            if !cond_violated.is_exact_zero() {
                indeterminate.push((i, e.clone()));
                *max_rad = max_rad.max(cond_violated.abs().hi);
            }
        } else {
            offending.push((i, e.clone()));
        }
    };
    for (i, poly) in p.polys.iter().enumerate() {
        for (e, c) in poly.terms() {
            let d = e.total_degree();
            // clause 1 (kernel): head rows have no linear terms at all, and
            // the linear form of tail row i is x_i alone
            if d == 1 {
                let var = e.0.iter().position(|&x| x > 0).unwrap();
                let bad = i < kappa || var < kappa || var != i;
                if bad {
                    flag(c, i, e, &mut offending, &mut indeterminate, &mut max_rad);
                }
                continue;
            }
            // clause 2: head rows carry no tail terms of degree <= k
            if i < kappa && d <= k && e.touches_tail(kappa) {
                flag(c, i, e, &mut offending, &mut indeterminate, &mut max_rad);
            }
            // clause 3: tail rows carry no head-only terms of degree <= ell
            if i >= kappa && d <= ell && e.head_only(kappa) {
                flag(c, i, e, &mut offending, &mut indeterminate, &mut max_rad);
            }
        }
        // the linear coefficient of tail row i must be one
        if i >= kappa {
            let miss = poly.coeff(&Exponent::unit(n, i)).sub(&BallC::ONE);
            if !miss.contains_zero() && miss.abs().hi > NEGLIGIBLE_REL * scale {
                offending.push((i, Exponent::unit(n, i)));
            }
        }
    }
    Ok(PreInflatableCheck {
        is_preinflatable: offending.is_empty(),
        offending_terms: offending,
        indeterminate_terms: indeterminate,
        max_indeterminate_radius: max_rad,
    })
}
