//! The certification core: the Rouché window computation and the two
//! end-to-end pipelines, one for an exact singular zero and one for a cluster
//! approximated through a nearby singular system.
//!
//! A certificate asserts: inside the image of the epsilon-ball under the
//! logged (invertible) transforms, the system has exactly `inflated_count`
//! zeros after inflation, hence `cluster_count` zeros of the original system
//! in the isolating region. Emission requires the strict inequality
//! eps_minus < eps_plus on outward-rounded bounds.

use serde::{Deserialize, Serialize};

use crate::ball::{BallC, RInt};
use crate::bounds::{self, Strategy};
use crate::error::{Error, Result};
use crate::hilbert;
use crate::inflation::InflationMap;
use crate::poly::PolySystem;
use crate::preinflate::{self, TransformLog};
use crate::spectral;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CertificateMode {
    /// Exact singular zero: the inner region degenerates to the point itself.
    Singular,
    /// Cluster of zeros of a nearby system.
    Cluster,
    /// Upper-bound certification through a supplied matrix transform.
    Bound,
}

/// The machine-checkable output of a certification run.
#[derive(Clone, Debug)]
pub struct Certificate {
    pub mode: CertificateMode,
    pub kappa: usize,
    pub d: u32,
    /// Certified lower bound of the degree-d part on the unit sphere.
    pub m: f64,
    /// Upper bound for the high-degree tail (coefficient sum).
    pub m1: f64,
    /// Upper bound for the low-degree part (coefficient sum).
    pub m2: f64,
    pub eps_minus: f64,
    pub eps_plus: f64,
    /// Zero count of the inflated system in every admissible epsilon-ball.
    pub inflated_count: u64,
    /// Zero count (or upper bound, in Bound mode) attributed to the cluster.
    pub cluster_count: u64,
    /// True when `cluster_count` is only an upper bound.
    pub count_is_upper_bound: bool,
    pub strategy_used: Strategy,
    pub log: TransformLog,
    pub valid: bool,
    pub reason: String,
}

/// The admissible window: eps_minus = (2 M2 / M)^(1/d) rounded up,
/// eps_plus = min(M / (2 M1), 1) rounded down. Succeeds iff the window is
/// nonempty on those outward-rounded endpoints.
pub fn rouche_window(m: RInt, m1: RInt, m2: RInt, d: u32) -> Result<(f64, f64)> {
    if m.lo <= 0.0 {
        return Err(Error::BoundFailure("M must be positive".into()));
    }
    let eps_minus = if m2.hi == 0.0 {
        0.0
    } else {
        let ratio = RInt::point(2.0).mul(RInt::point(m2.hi)).div(RInt::point(m.lo));
        ratio.nth_root(d).hi
    };
    let eps_plus = if m1.hi == 0.0 {
        1.0
    } else {
        RInt::point(m.lo)
            .div(RInt::point(2.0).mul(RInt::point(m1.hi)))
            .lo
            .min(1.0)
    };
    if eps_minus < eps_plus {
        debug_assert!(window_chain_holds(m, m1, m2, d, eps_plus));
        Ok((eps_minus, eps_plus))
    } else {
        Err(Error::EmptyWindow { eps_minus, eps_plus })
    }
}

/// The inequality chain M1 eps^(d+1) + M2 <= M eps^d, verified in interval
/// arithmetic at a given radius.
pub fn window_chain_holds(m: RInt, m1: RInt, m2: RInt, d: u32, eps: f64) -> bool {
    let e = RInt::point(eps);
    let lhs = RInt::point(m1.hi).mul(e.powi(d + 1)).add(RInt::point(m2.hi));
    let rhs = RInt::point(m.lo).mul(e.powi(d));
    lhs.hi <= rhs.lo
}

fn certificate_counts(n: usize, kappa: usize, d: u32) -> (u64, u64) {
    let inflated = (d as u64).pow(n as u32);
    let cluster = (d as u64).pow(kappa as u32);
    (inflated, cluster)
}

/// Options shared by the pipelines.
#[derive(Clone, Copy, Debug)]
pub struct PipelineOptions {
    /// Relative threshold for small singular values.
    pub tau_rel: f64,
    /// Order to use; when absent, candidates 2..=d_max are tried.
    pub d: Option<u32>,
    pub d_max: u32,
    pub strategy: Strategy,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            tau_rel: spectral::DEFAULT_TAU_REL,
            d: None,
            d_max: 6,
            strategy: Strategy::Auto,
        }
    }
}

/// Certify an exact singular zero: normalize, confirm the zero is regular of
/// the detected breadth and chosen order, inflate, and bound.
pub fn isolate_singular(g: &PolySystem, z: &[BallC], opts: &PipelineOptions) -> Result<Certificate> {
    g.require_square()?;
    let jd = spectral::jacobian_at(g, z)?;
    let report = spectral::detect_breadth_rel(&jd, opts.tau_rel)?;
    if report.kappa == 0 {
        return Err(Error::Degenerate(
            "the zero is numerically simple (breadth 0); nothing to inflate".into(),
        ));
    }
    let kappa = report.kappa;
    let candidates: Vec<u32> = match opts.d {
        Some(d) => vec![d],
        None => (2..=opts.d_max).collect(),
    };
    let mut last_err: Option<Error> = None;
    for d in candidates {
        match try_singular_order(g, z, kappa, d, opts) {
            Ok(cert) => return Ok(cert),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or_else(|| Error::Degenerate("no admissible order found".into())))
}

fn try_singular_order(
    g: &PolySystem,
    z: &[BallC],
    kappa: usize,
    d: u32,
    opts: &PipelineOptions,
) -> Result<Certificate> {
    let (p, mut log) = preinflate::preinflate(g, z, kappa, d, d)?;
    if !hilbert::is_regular_zero(&p, &vec![BallC::ZERO; g.n], kappa, d)? {
        return Err(Error::NotRegular {
            kappa,
            d,
            reason: "the Hilbert series does not match (1 + t + ... + t^(d-1))^kappa; \
                     consider the matrix-transform upper-bound route"
                .into(),
        });
    }
    let map = InflationMap::standard(g.n, kappa, d);
    log.weights = map.weights.clone();
    // certify on the replayed transforms so that verification recomputes the
    // exact same object
    let inflated = log.replay(g)?;
    let slice = PolySystem::new(
        g.n,
        inflated.polys.iter().map(|q| q.homogeneous_part(d)).collect(),
    );
    let lb = bounds::lower_bound_sphere(&slice, d, opts.strategy)?;
    let m1 = bounds::upper_bound_high(&inflated, d);
    let m2 = bounds::upper_bound_low(&inflated, d);
    let m = RInt::point(lb.lo);
    let (eps_minus, eps_plus) = rouche_window(m, m1, m2, d)?;
    log.verify_invertible()?;
    let (inflated_count, cluster_count) = certificate_counts(g.n, kappa, d);
    Ok(Certificate {
        mode: CertificateMode::Singular,
        kappa,
        d,
        m: lb.lo,
        m1: m1.hi,
        m2: m2.hi,
        eps_minus,
        eps_plus,
        inflated_count,
        cluster_count,
        count_is_upper_bound: false,
        strategy_used: lb.strategy_used,
        log,
        valid: true,
        reason: "window nonempty and transforms invertible".into(),
    })
}

/// Collect a certificate for every admissible order in 2..=d_max. Several
/// orders certifying at once is reported through the `agree` flag so callers
/// can surface the ambiguity instead of silently picking one.
pub fn isolate_singular_all(
    g: &PolySystem,
    z: &[BallC],
    opts: &PipelineOptions,
) -> Result<(Vec<Certificate>, bool)> {
    g.require_square()?;
    let mut certs = Vec::new();
    for d in 2..=opts.d_max {
        let per_d = PipelineOptions { d: Some(d), ..*opts };
        if let Ok(cert) = isolate_singular(g, z, &per_d) {
            certs.push(cert);
        }
    }
    let agree = certs
        .windows(2)
        .all(|w| w[0].cluster_count == w[1].cluster_count);
    Ok((certs, agree))
}

/// Certify a cluster: build a nearby singular system, normalize it, replay
/// the collected transforms on the original system, and bound that replay.
pub fn isolate_cluster(f: &PolySystem, z: &[BallC], opts: &PipelineOptions) -> Result<Certificate> {
    f.require_square()?;
    let near = spectral::nearest_singular(f, z, opts.tau_rel)?;
    let kappa = near.kappa;
    let candidates: Vec<u32> = match opts.d {
        Some(d) => vec![d],
        None => (2..=opts.d_max).collect(),
    };
    let mut last_err: Option<Error> = None;
    for d in candidates {
        match try_cluster_order(f, &near.system, z, kappa, d, opts) {
            Ok(cert) => return Ok(cert),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or_else(|| Error::Degenerate("no admissible order found".into())))
}

fn try_cluster_order(
    f: &PolySystem,
    g: &PolySystem,
    z: &[BallC],
    kappa: usize,
    d: u32,
    opts: &PipelineOptions,
) -> Result<Certificate> {
    let (_p_g, mut log) = preinflate::preinflate(g, z, kappa, d, d)?;
    let map = InflationMap::standard(f.n, kappa, d);
    log.weights = map.weights.clone();
    // replay the same transforms on the original system
    let p_f = log.replay(f)?;
    let slice = PolySystem::new(
        f.n,
        p_f.polys.iter().map(|q| q.homogeneous_part(d)).collect(),
    );
    let lb = bounds::lower_bound_sphere(&slice, d, opts.strategy)?;
    let m1 = bounds::upper_bound_high(&p_f, d);
    let m2 = bounds::upper_bound_low(&p_f, d);
    let m = RInt::point(lb.lo);
    let (eps_minus, eps_plus) = rouche_window(m, m1, m2, d)?;
    log.verify_invertible()?;
    let (inflated_count, cluster_count) = certificate_counts(f.n, kappa, d);
    Ok(Certificate {
        mode: CertificateMode::Cluster,
        kappa,
        d,
        m: lb.lo,
        m1: m1.hi,
        m2: m2.hi,
        eps_minus,
        eps_plus,
        inflated_count,
        cluster_count,
        count_is_upper_bound: false,
        strategy_used: lb.strategy_used,
        log,
        valid: true,
        reason: "window nonempty and transforms invertible".into(),
    })
}

/// Recompute every bound of a certificate from its transform log and the
/// original system, ignoring the stored values, and check consistency.
///
/// In bound mode the polynomial-matrix stage holds the supplied transform,
/// which need not be invertible; the count is then re-derived from the
/// content-reduced rows instead of kappa and d.
pub fn verify_certificate(cert: &Certificate, original: &PolySystem) -> Result<()> {
    if cert.mode == CertificateMode::Bound {
        verify_bound_certificate(cert, original)?;
    } else {
        cert.log.verify_invertible()?;
    }
    let replayed = cert.log.replay(original)?;
    let d = cert.d;
    let slice = PolySystem::new(
        original.n,
        replayed.polys.iter().map(|q| q.homogeneous_part(d)).collect(),
    );
    let lb = bounds::lower_bound_sphere(&slice, d, cert.strategy_used)
        .or_else(|_| bounds::lower_bound_sphere(&slice, d, Strategy::Auto))?;
    let m1 = bounds::upper_bound_high(&replayed, d);
    let m2 = bounds::upper_bound_low(&replayed, d);
    let (eps_minus, eps_plus) = rouche_window(RInt::point(lb.lo), m1, m2, d)?;
    // the stored window must sit inside the recomputed admissible window
    if cert.eps_minus < eps_minus || cert.eps_plus > eps_plus {
        return Err(Error::Verify(format!(
            "stored window [{:.6}, {:.6}] is not contained in the recomputed window [{:.6}, {:.6}]",
            cert.eps_minus, cert.eps_plus, eps_minus, eps_plus
        )));
    }
    // counts must be consistent with the weights
    let map = InflationMap { weights: cert.log.weights.clone() };
    let cover = map.cover_degree();
    if cert.mode != CertificateMode::Bound {
        let (expect_inflated, expect_cluster) =
            certificate_counts(original.n, cert.kappa, cert.d);
        if cert.inflated_count != expect_inflated || cert.cluster_count != expect_cluster {
            return Err(Error::Verify("stored counts do not match kappa and d".into()));
        }
        if cert.cluster_count * cover != cert.inflated_count {
            return Err(Error::Verify("counts are inconsistent with the cover degree".into()));
        }
    }
    if !window_chain_holds(RInt::point(lb.lo), m1, m2, d, cert.eps_plus) {
        return Err(Error::Verify("certification inequality fails at eps_plus".into()));
    }
    Ok(())
}

fn verify_bound_certificate(cert: &Certificate, original: &PolySystem) -> Result<()> {
    if cert.log.amat.det()?.contains_zero() || cert.log.bmat.det()?.contains_zero() {
        return Err(Error::Verify("constant stages are not invertible".into()));
    }
    if !cert.count_is_upper_bound {
        return Err(Error::Verify("bound-mode certificate must flag its count".into()));
    }
    let t = crate::irregular::MatrixTransform::new(cert.log.cmat.clone())?;
    let reduced = t.content_reduced()?;
    let h = crate::irregular::apply_matrix(&reduced, original)?;
    let forms = h
        .polys
        .iter()
        .map(|q| q.initial_form())
        .collect::<Result<Vec<_>>>()?;
    if !crate::hilbert::regular_sequence_check(&forms, original.n)? {
        return Err(Error::Verify(
            "content-reduced initial forms are not a regular sequence".into(),
        ));
    }
    let bound: u64 = h
        .polys
        .iter()
        .map(|q| q.min_degree().unwrap_or(0) as u64)
        .product();
    if bound != cert.cluster_count {
        return Err(Error::Verify(format!(
            "stored bound {} does not match the recomputed product {}",
            cert.cluster_count, bound
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{poly_from_terms, Exponent};

    fn running_example() -> PolySystem {
        PolySystem::new(
            2,
            vec![
                poly_from_terms(2, &[(&[1, 0], 2.0, 0.0), (&[0, 1], 1.0, 0.0), (&[2, 0], 1.0, 0.0)]),
                poly_from_terms(2, &[(&[1, 0], 8.0, 0.0), (&[0, 1], 4.0, 0.0), (&[0, 2], 1.0, 0.0)]),
            ],
        )
    }

    fn origin() -> Vec<BallC> {
        vec![BallC::ZERO, BallC::ZERO]
    }

    #[test]
    fn window_reference_values() {
        let (em, ep) = rouche_window(
            RInt::point(0.4984),
            RInt::point(0.2746),
            RInt::point(0.009757),
            3,
        )
        .unwrap();
        assert!((em - 0.3396).abs() < 5e-4, "eps_minus {em}");
        assert!((ep - 0.9075).abs() < 5e-4, "eps_plus {ep}");
    }

    #[test]
    fn window_exact_singular_degenerates() {
        let (em, ep) = rouche_window(RInt::point(0.5), RInt::point(0.3), RInt::ZERO, 3).unwrap();
        assert_eq!(em, 0.0);
        assert!(ep > 0.8);
    }

    #[test]
    fn window_upper_clamp_and_inequality() {
        let (em, ep) =
            rouche_window(RInt::point(0.5), RInt::point(0.251981), RInt::ZERO, 3).unwrap();
        assert_eq!(em, 0.0);
        assert!((ep - 0.992139).abs() < 1e-5);
        // the displayed inequality at eps = 0.99
        assert!(0.251981f64 * 0.99f64.powi(4) < 0.5 * 0.99f64.powi(3));
        // M1 = 0 clamps to 1
        let (_, ep1) = rouche_window(RInt::point(0.5), RInt::ZERO, RInt::ZERO, 3).unwrap();
        assert_eq!(ep1, 1.0);
    }

    #[test]
    fn empty_window_is_an_error() {
        let r = rouche_window(RInt::point(0.1), RInt::point(10.0), RInt::point(0.05), 2);
        assert!(matches!(r, Err(Error::EmptyWindow { .. })));
    }

    #[test]
    fn singular_pipeline_on_running_example() {
        let g = running_example();
        let cert = isolate_singular(&g, &origin(), &PipelineOptions::default()).unwrap();
        assert!(cert.valid);
        assert_eq!(cert.mode, CertificateMode::Singular);
        assert_eq!(cert.kappa, 1);
        assert_eq!(cert.d, 3);
        assert_eq!(cert.inflated_count, 9);
        assert_eq!(cert.cluster_count, 3);
        assert!((cert.m - 0.5).abs() < 1e-9, "m = {}", cert.m);
        // the 0.2743.. coefficient tail of the inflated normalized system
        assert!((cert.m1 - 0.274341451030075).abs() < 1e-6, "m1 = {}", cert.m1);
        assert!(cert.m2 < 1e-12);
        assert!(cert.eps_minus < 1e-3);
        assert!(cert.eps_plus > 0.9);
        verify_certificate(&cert, &g).unwrap();
    }

    #[test]
    fn singular_pipeline_rejects_simple_zero() {
        let f = PolySystem::new(
            2,
            vec![
                crate::poly::Polynomial::variable(2, 0),
                crate::poly::Polynomial::variable(2, 1),
            ],
        );
        assert!(isolate_singular(&f, &origin(), &PipelineOptions::default()).is_err());
    }

    #[test]
    fn planted_breadth_two_order_two() {
        // x1^2 + x3-ish tails absent: simple planted system with kappa = 2, d = 2
        let g = PolySystem::new(
            2,
            vec![
                poly_from_terms(2, &[(&[2, 0], 1.0, 0.0), (&[3, 0], 0.25, 0.0)]),
                poly_from_terms(2, &[(&[0, 2], 1.0, 0.0), (&[1, 3], -0.125, 0.0)]),
            ],
        );
        let cert = isolate_singular(&g, &origin(), &PipelineOptions::default()).unwrap();
        assert_eq!(cert.kappa, 2);
        assert_eq!(cert.d, 2);
        assert_eq!(cert.cluster_count, 4);
        assert_eq!(cert.inflated_count, 4);
        // cross-check multiplicity
        assert_eq!(hilbert::multiplicity(&g, &origin(), 6).unwrap(), 4);
    }

    #[test]
    fn cluster_pipeline_on_perturbed_example() {
        let mut f = running_example();
        for p in &mut f.polys {
            p.add_term(Exponent::zero(2), BallC::real(0.001));
        }
        let z = [BallC::real(-0.0001), BallC::real(-0.0001)];
        let opts = PipelineOptions { tau_rel: 1e-2, d: Some(3), ..Default::default() };
        let cert = isolate_cluster(&f, &z, &opts).unwrap();
        assert!(cert.valid);
        assert_eq!(cert.kappa, 1);
        assert_eq!(cert.cluster_count, 3);
        assert!(cert.m >= 0.4984 * 0.99, "m = {}", cert.m);
        assert!(cert.m1 <= 0.2746 * 1.01, "m1 = {}", cert.m1);
        assert!(cert.m2 <= 0.009757 * 1.01, "m2 = {}", cert.m2);
        assert!(cert.eps_minus >= 0.30 && cert.eps_minus <= 0.37, "em = {}", cert.eps_minus);
        assert!(cert.eps_plus >= 0.85 && cert.eps_plus <= 0.95, "ep = {}", cert.eps_plus);
        verify_certificate(&cert, &f).unwrap();
    }

    #[test]
    fn cluster_pipeline_reduces_on_exact_input() {
        // exact-coefficient singular fixture: the nearby system is the input
        // itself and the low-degree bound vanishes identically
        let g = PolySystem::new(
            2,
            vec![
                poly_from_terms(2, &[(&[2, 0], 1.0, 0.0), (&[0, 3], 1.0, 0.0)]),
                poly_from_terms(2, &[(&[0, 1], 1.0, 0.0), (&[3, 0], 0.5, 0.0)]),
            ],
        );
        let opts = PipelineOptions { d: Some(2), ..Default::default() };
        let cert = isolate_cluster(&g, &origin(), &opts).unwrap();
        assert_eq!(cert.m2, 0.0);
        assert_eq!(cert.eps_minus, 0.0);
        assert_eq!(cert.cluster_count, 2);
    }

    #[test]
    fn order_enumeration_is_unambiguous_here() {
        let g = running_example();
        let (certs, agree) =
            isolate_singular_all(&g, &origin(), &PipelineOptions::default()).unwrap();
        assert_eq!(certs.len(), 1, "only order 3 certifies this system");
        assert_eq!(certs[0].d, 3);
        assert!(agree);
    }

    #[test]
    fn tampered_certificate_fails_verification() {
        let g = running_example();
        let mut cert = isolate_singular(&g, &origin(), &PipelineOptions::default()).unwrap();
        cert.eps_plus = 1.0;
        assert!(verify_certificate(&cert, &g).is_err());
    }

    #[test]
    fn rouche_chain_pointwise() {
        // sample the inequality chain over random radii inside the window
        let g = running_example();
        let cert = isolate_singular(&g, &origin(), &PipelineOptions::default()).unwrap();
        let inflated = {
            let map = InflationMap { weights: cert.log.weights.clone() };
            let (p, _) = preinflate::preinflate(&g, &origin(), cert.kappa, cert.d, cert.d).unwrap();
            map.apply(&p)
        };
        let d = cert.d;
        let q = PolySystem::new(2, inflated.polys.iter().map(|p| p.homogeneous_part(d)).collect());
        let mut state = 42u64;
        let mut rnd = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..1000 {
            let eps = cert.eps_minus.max(1e-6) + rnd() * (cert.eps_plus - cert.eps_minus.max(1e-6));
            let (a, b) = (rnd() * 2.0 - 1.0, rnd() * 2.0 - 1.0);
            let (c, dd) = (rnd() * 2.0 - 1.0, rnd() * 2.0 - 1.0);
            let mut v = [num_complex::Complex64::new(a, b), num_complex::Complex64::new(c, dd)];
            let norm = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
            if norm < 1e-9 {
                continue;
            }
            v[0] *= eps / norm;
            v[1] *= eps / norm;
            let pv = inflated.evaluate_mid(&v);
            let qv = q.evaluate_mid(&v);
            let diff = ((pv[0] - qv[0]).norm_sqr() + (pv[1] - qv[1]).norm_sqr()).sqrt();
            let qn = (qv[0].norm_sqr() + qv[1].norm_sqr()).sqrt();
            let bound = cert.m1 * eps.powi(d as i32 + 1) + cert.m2;
            assert!(diff <= bound + 1e-9);
            assert!(bound <= cert.m * eps.powi(d as i32) + 1e-9);
            assert!(cert.m * eps.powi(d as i32) <= qn + 1e-9);
        }
    }
}
