//! Sparse multivariate polynomials over complex ball coefficients, with the
//! graded local monomial order used throughout the crate.
//!
//! Under the graded local order a *lower* total degree means a *larger*
//! monomial; ties inside a degree are broken lexicographically with the first
//! variable heaviest. The initial term of a polynomial is its largest term
//! (lowest degree), and the initial form is the whole homogeneous slice of
//! lowest degree.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::ball::{BallC, RInt};
use crate::error::{Error, Result};

/// Exponent vector of a monomial. Ordered by the graded local order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Exponent(pub Vec<u32>);

impl Exponent {
    pub fn zero(n: usize) -> Self {
        Exponent(vec![0; n])
    }

    pub fn unit(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        Exponent(e)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn mul(&self, o: &Exponent) -> Exponent {
        Exponent(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }

    pub fn is_constant(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    /// True if any variable with index >= kappa appears.
    pub fn touches_tail(&self, kappa: usize) -> bool {
        self.0[kappa..].iter().any(|&e| e > 0)
    }

    /// True if only variables with index < kappa appear (and it is not constant).
    pub fn head_only(&self, kappa: usize) -> bool {
        !self.is_constant() && !self.touches_tail(kappa)
    }
}

/// The graded local comparison: lower total degree is larger; ties broken by
/// lexicographic comparison of the exponent sequences (larger lex = larger).
pub fn graded_local_cmp(a: &Exponent, b: &Exponent) -> Ordering {
    debug_assert_eq!(a.dim(), b.dim(), "exponent dimension mismatch");
    match b.total_degree().cmp(&a.total_degree()) {
        Ordering::Equal => a.0.cmp(&b.0),
        ord => ord,
    }
}

impl PartialOrd for Exponent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Exponent {
    fn cmp(&self, other: &Self) -> Ordering {
        graded_local_cmp(self, other)
    }
}

/// Sparse polynomial: finite map from exponents to complex ball coefficients.
///
/// A term is stored unless its coefficient is the exact zero ball; balls that
/// merely contain zero are kept, since dropping them would be unsound for the
/// upper bounds computed later.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    n: usize,
    terms: BTreeMap<Exponent, BallC>,
}

impl Polynomial {
    pub fn zero(n: usize) -> Self {
        Polynomial { n, terms: BTreeMap::new() }
    }

    pub fn constant(n: usize, c: BallC) -> Self {
        let mut p = Polynomial::zero(n);
        p.add_term(Exponent::zero(n), c);
        p
    }

    pub fn one(n: usize) -> Self {
        Polynomial::constant(n, BallC::ONE)
    }

    pub fn variable(n: usize, i: usize) -> Self {
        assert!(i < n);
        let mut p = Polynomial::zero(n);
        p.add_term(Exponent::unit(n, i), BallC::ONE);
        p
    }

    pub fn monomial(n: usize, e: Exponent, c: BallC) -> Self {
        assert_eq!(e.dim(), n);
        let mut p = Polynomial::zero(n);
        p.add_term(e, c);
        p
    }

    pub fn nvars(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in ascending graded-local order (highest degree first, constant
    /// term last). This iteration order is part of the crate's determinism
    /// contract: evaluation sums terms in exactly this order.
    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &BallC)> {
        self.terms.iter()
    }

    pub fn coeff(&self, e: &Exponent) -> BallC {
        self.terms.get(e).copied().unwrap_or(BallC::ZERO)
    }

    pub fn add_term(&mut self, e: Exponent, c: BallC) {
        debug_assert_eq!(e.dim(), self.n);
        match self.terms.entry(e) {
            std::collections::btree_map::Entry::Occupied(mut slot) => {
                let s = slot.get().add(&c);
                if s.is_exact_zero() {
                    slot.remove();
                } else {
                    *slot.get_mut() = s;
                }
            }
            std::collections::btree_map::Entry::Vacant(slot) => {
                if !c.is_exact_zero() {
                    slot.insert(c);
                }
            }
        }
    }

    /// Drop a stored term entirely (used when a transform cancels it by
    /// construction, never for balls that merely contain zero).
    pub fn remove_term(&mut self, e: &Exponent) -> Option<BallC> {
        self.terms.remove(e)
    }

    pub fn max_degree(&self) -> u32 {
        self.terms.keys().map(|e| e.total_degree()).max().unwrap_or(0)
    }

    /// Smallest total degree among stored terms.
    pub fn min_degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.total_degree()).min()
    }

    pub fn add(&self, o: &Polynomial) -> Polynomial {
        assert_eq!(self.n, o.n);
        let mut out = self.clone();
        for (e, c) in o.terms() {
            out.add_term(e.clone(), *c);
        }
        out
    }

    pub fn sub(&self, o: &Polynomial) -> Polynomial {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Polynomial {
        Polynomial {
            n: self.n,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c.neg())).collect(),
        }
    }

    pub fn scale(&self, s: BallC) -> Polynomial {
        if s.is_exact_zero() {
            return Polynomial::zero(self.n);
        }
        let mut out = Polynomial::zero(self.n);
        for (e, c) in self.terms() {
            out.add_term(e.clone(), c.mul(&s));
        }
        out
    }

    pub fn mul(&self, o: &Polynomial) -> Polynomial {
        assert_eq!(self.n, o.n);
        let mut out = Polynomial::zero(self.n);
        for (e1, c1) in self.terms() {
            for (e2, c2) in o.terms() {
                out.add_term(e1.mul(e2), c1.mul(c2));
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Polynomial {
        let mut acc = Polynomial::one(self.n);
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    /// Partial derivative with respect to variable `j`.
    pub fn derivative(&self, j: usize) -> Polynomial {
        assert!(j < self.n);
        let mut out = Polynomial::zero(self.n);
        for (e, c) in self.terms() {
            if e.0[j] > 0 {
                let mut f = e.clone();
                f.0[j] -= 1;
                out.add_term(f, c.scale(e.0[j] as f64));
            }
        }
        out
    }

    /// Largest nonzero term under the graded local order.
    pub fn initial_term(&self) -> Result<(Exponent, BallC)> {
        self.terms
            .iter()
            .next_back()
            .map(|(e, c)| (e.clone(), *c))
            .ok_or(Error::ZeroPolynomial)
    }

    /// Homogeneous part of smallest total degree among stored terms.
    pub fn initial_form(&self) -> Result<Polynomial> {
        let d = self.min_degree().ok_or(Error::ZeroPolynomial)?;
        Ok(self.homogeneous_part(d))
    }

    pub fn homogeneous_part(&self, d: u32) -> Polynomial {
        self.filter_terms(|e| e.total_degree() == d)
    }

    pub fn parts_below(&self, d: u32) -> Polynomial {
        self.filter_terms(|e| e.total_degree() < d)
    }

    pub fn parts_above(&self, d: u32) -> Polynomial {
        self.filter_terms(|e| e.total_degree() > d)
    }

    pub fn filter_terms(&self, keep: impl Fn(&Exponent) -> bool) -> Polynomial {
        Polynomial {
            n: self.n,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| keep(e))
                .map(|(e, c)| (e.clone(), *c))
                .collect(),
        }
    }

    /// Exact expansion of p(A·x + shift).
    pub fn compose_affine(&self, a: &[Vec<BallC>], shift: &[BallC]) -> Result<Polynomial> {
        let n = self.n;
        if a.len() != n || a.iter().any(|row| row.len() != n) || shift.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: a.len() });
        }
        let reps: Vec<Polynomial> = (0..n)
            .map(|i| {
                let mut rep = Polynomial::constant(n, shift[i]);
                for (j, item) in a[i].iter().enumerate() {
                    rep.add_term(Exponent::unit(n, j), *item);
                }
                rep
            })
            .collect();
        Ok(self.substitute_all(&reps))
    }

    /// Substitute every variable i by the polynomial `reps[i]`, exactly.
    pub fn substitute_all(&self, reps: &[Polynomial]) -> Polynomial {
        let n = self.n;
        assert_eq!(reps.len(), n);
        let max_deg = self.max_degree() as usize;
        // cache powers of each replacement up to the needed degree
        let mut pow_cache: Vec<Vec<Polynomial>> = reps
            .iter()
            .map(|r| vec![Polynomial::one(n), r.clone()])
            .collect();
        for (j, cache) in pow_cache.iter_mut().enumerate() {
            let need = self
                .terms
                .keys()
                .map(|e| e.0[j] as usize)
                .max()
                .unwrap_or(0)
                .min(max_deg);
            while cache.len() <= need {
                let next = cache.last().unwrap().mul(&reps[j]);
                cache.push(next);
            }
        }
        let mut out = Polynomial::zero(n);
        for (e, c) in self.terms() {
            let mut term = Polynomial::constant(n, *c);
            for (j, &exp) in e.0.iter().enumerate() {
                if exp > 0 {
                    term = term.mul(&pow_cache[j][exp as usize]);
                }
            }
            out = out.add(&term);
        }
        out
    }

    /// Map exponents through per-variable powers: x_i -> x_i^{w_i}.
    pub fn substitute_powers(&self, w: &[u32]) -> Polynomial {
        assert_eq!(w.len(), self.n);
        assert!(w.iter().all(|&wi| wi >= 1));
        Polynomial {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| {
                    (
                        Exponent(e.0.iter().zip(w).map(|(a, b)| a * b).collect()),
                        *c,
                    )
                })
                .collect(),
        }
    }

    /// Exact expansion after the substitution x_i -> x_i + q, where q may only
    /// involve variables with index strictly below i.
    pub fn substitute_variable(&self, i: usize, q: &Polynomial) -> Result<Polynomial> {
        assert!(i < self.n && q.n == self.n);
        for (e, _) in q.terms() {
            if e.0[i..].iter().any(|&x| x > 0) {
                return Err(Error::BadSubstitution { index: i });
            }
        }
        let mut rep = Polynomial::variable(self.n, i);
        let rep = {
            rep = rep.add(q);
            rep
        };
        let max_exp = self.terms.keys().map(|e| e.0[i]).max().unwrap_or(0);
        let mut powers = vec![Polynomial::one(self.n), rep.clone()];
        while powers.len() <= max_exp as usize {
            let next = powers.last().unwrap().mul(&rep);
            powers.push(next);
        }
        let mut out = Polynomial::zero(self.n);
        for (e, c) in self.terms() {
            let k = e.0[i];
            if k == 0 {
                out.add_term(e.clone(), *c);
            } else {
                let mut rest = e.clone();
                rest.0[i] = 0;
                let term = Polynomial::monomial(self.n, rest, *c).mul(&powers[k as usize]);
                out = out.add(&term);
            }
        }
        Ok(out)
    }

    /// Rigorous upper bound on the sum of coefficient moduli.
    pub fn coeff_one_norm(&self) -> RInt {
        let mut acc = RInt::ZERO;
        for (_, c) in self.terms() {
            acc = acc.add(c.abs());
        }
        RInt::new(0.0f64.max(acc.lo), acc.hi)
    }

    /// Enclosure of p(z). Terms are summed in ascending graded-local order
    /// (constant term last); this order is deterministic and relied upon.
    pub fn evaluate(&self, z: &[BallC]) -> Result<BallC> {
        if z.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: z.len() });
        }
        let mut pow_cache: Vec<Vec<BallC>> = (0..self.n).map(|_| vec![BallC::ONE]).collect();
        let mut acc = BallC::ZERO;
        for (e, c) in self.terms() {
            let mut v = *c;
            for (j, &exp) in e.0.iter().enumerate() {
                if exp > 0 {
                    let cache = &mut pow_cache[j];
                    while cache.len() <= exp as usize {
                        let next = cache.last().unwrap().mul(&z[j]);
                        cache.push(next);
                    }
                    v = v.mul(&cache[exp as usize]);
                }
            }
            acc = acc.add(&v);
        }
        Ok(acc)
    }

    /// Midpoint-only evaluation (for the search oracle and plotting).
    pub fn evaluate_mid(&self, z: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (e, c) in self.terms() {
            let mut v = c.mid();
            for (j, &exp) in e.0.iter().enumerate() {
                for _ in 0..exp {
                    v *= z[j];
                }
            }
            acc += v;
        }
        acc
    }

    /// Largest coefficient modulus (midpoint scale of the polynomial).
    pub fn max_coeff_abs(&self) -> f64 {
        self.terms
            .values()
            .map(|c| c.mid().norm())
            .fold(0.0, f64::max)
    }

    /// Smallest total degree among terms with |mid| >= threshold.
    pub fn min_significant_degree(&self, threshold: f64) -> Option<u32> {
        self.terms
            .iter()
            .filter(|(_, c)| c.mid().norm() >= threshold)
            .map(|(e, _)| e.total_degree())
            .min()
    }
}

/// A finite sequence of polynomials in a shared ambient dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct PolySystem {
    pub n: usize,
    pub polys: Vec<Polynomial>,
}

impl PolySystem {
    pub fn new(n: usize, polys: Vec<Polynomial>) -> Self {
        assert!(polys.iter().all(|p| p.nvars() == n));
        PolySystem { n, polys }
    }

    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    pub fn is_square(&self) -> bool {
        self.polys.len() == self.n
    }

    pub fn require_square(&self) -> Result<()> {
        if self.is_square() {
            Ok(())
        } else {
            Err(Error::NotSquare { m: self.polys.len(), n: self.n })
        }
    }

    pub fn map(&self, f: impl Fn(&Polynomial) -> Polynomial) -> PolySystem {
        PolySystem::new(self.n, self.polys.iter().map(f).collect())
    }

    pub fn try_map(&self, f: impl Fn(&Polynomial) -> Result<Polynomial>) -> Result<PolySystem> {
        Ok(PolySystem::new(
            self.n,
            self.polys.iter().map(f).collect::<Result<Vec<_>>>()?,
        ))
    }

    pub fn evaluate(&self, z: &[BallC]) -> Result<Vec<BallC>> {
        self.polys.iter().map(|p| p.evaluate(z)).collect()
    }

    pub fn evaluate_mid(&self, z: &[Complex64]) -> Vec<Complex64> {
        self.polys.iter().map(|p| p.evaluate_mid(z)).collect()
    }

    /// Sum of coefficient one-norms of the pairwise differences.
    pub fn coeff_distance(&self, o: &PolySystem) -> RInt {
        assert_eq!(self.polys.len(), o.polys.len());
        let mut acc = RInt::ZERO;
        for (p, q) in self.polys.iter().zip(&o.polys) {
            acc = acc.add(p.sub(q).coeff_one_norm());
        }
        acc
    }
}

/// Parse helper for tests and fixtures: builds a polynomial from
/// (exponents, re, im) triples with exact f64 coefficients.
pub fn poly_from_terms(n: usize, terms: &[(&[u32], f64, f64)]) -> Polynomial {
    let mut p = Polynomial::zero(n);
    for (e, re, im) in terms {
        assert_eq!(e.len(), n);
        p.add_term(Exponent(e.to_vec()), BallC::exact(*re, *im));
    }
    p
}
