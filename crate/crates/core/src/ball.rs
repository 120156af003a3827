//! Complex ball arithmetic and directed real intervals over f64.
//!
//! A [`BallC`] is a disc in the complex plane: a midpoint stored as two f64
//! components and a non-negative radius. Every operation is outward rounded,
//! so the result ball contains the exact result for all points of the operand
//! balls. Midpoints follow ordinary IEEE round-to-nearest; the rounding error
//! is recovered exactly with error-free transformations (`two_sum`,
//! `two_prod`) and folded into the radius.
//!
//! Exactness is preserved: operations whose midpoint arithmetic is exact and
//! whose operands have zero radius produce zero-radius results. This is what
//! lets integer-coefficient fixtures stay exact through the whole pipeline.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Smallest positive subnormal, used to repair products that flush to zero.
const TINY: f64 = f64::MIN_POSITIVE * f64::EPSILON;

/// `s + e == a + b` exactly.
#[inline]
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

/// `p + e == a * b` exactly (via FMA).
#[inline]
pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let e = f64::mul_add(a, b, -p);
    (p, e)
}

/// Upper bound of `a + b` for non-negative operands.
#[inline]
fn radd(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        return b;
    }
    if b == 0.0 {
        return a;
    }
    let (s, e) = two_sum(a, b);
    if e <= 0.0 {
        s
    } else {
        s.next_up()
    }
}

/// Upper bound of `a * b` for non-negative operands.
#[inline]
fn rmul(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    if a == 1.0 {
        return b;
    }
    if b == 1.0 {
        return a;
    }
    let (p, e) = two_prod(a, b);
    if p == 0.0 {
        return TINY;
    }
    if e <= 0.0 {
        p
    } else {
        p.next_up()
    }
}

/// A real interval `[lo, hi]` with directed rounding.
///
/// Used for the rigorous scalar quantities of the certification step: norms,
/// coefficient sums, window endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RInt {
    pub lo: f64,
    pub hi: f64,
}

impl RInt {
    pub fn point(x: f64) -> Self {
        RInt { lo: x, hi: x }
    }

    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi);
        RInt { lo, hi }
    }

    pub const ZERO: RInt = RInt { lo: 0.0, hi: 0.0 };
    pub const ONE: RInt = RInt { lo: 1.0, hi: 1.0 };

    pub fn add(self, o: RInt) -> RInt {
        RInt {
            lo: dir_down(two_sum(self.lo, o.lo)),
            hi: dir_up(two_sum(self.hi, o.hi)),
        }
    }

    pub fn sub(self, o: RInt) -> RInt {
        RInt {
            lo: dir_down(two_sum(self.lo, -o.hi)),
            hi: dir_up(two_sum(self.hi, -o.lo)),
        }
    }

    pub fn neg(self) -> RInt {
        RInt { lo: -self.hi, hi: -self.lo }
    }

    pub fn mul(self, o: RInt) -> RInt {
        let cands = [
            (self.lo, o.lo),
            (self.lo, o.hi),
            (self.hi, o.lo),
            (self.hi, o.hi),
        ];
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (a, b) in cands {
            let (p, e) = two_prod(a, b);
            lo = lo.min(dir_down((p, e)));
            hi = hi.max(dir_up((p, e)));
        }
        RInt { lo, hi }
    }

    /// Division; requires `o` to exclude zero.
    pub fn div(self, o: RInt) -> RInt {
        assert!(o.lo > 0.0 || o.hi < 0.0, "interval division by zero");
        let cands = [
            (self.lo, o.lo),
            (self.lo, o.hi),
            (self.hi, o.lo),
            (self.hi, o.hi),
        ];
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (a, b) in cands {
            let q = a / b;
            // exact residual: a - q*b decides the rounding direction
            let (p, e) = two_prod(q, b);
            let r = (a - p) - e; // exact when no overflow: a - q*b
            let (qlo, qhi) = if r == 0.0 {
                (q, q)
            } else if (r > 0.0) == (b > 0.0) {
                (q, q.next_up())
            } else {
                (q.next_down(), q)
            };
            lo = lo.min(qlo);
            hi = hi.max(qhi);
        }
        RInt { lo, hi }
    }

    /// Square root; requires `lo >= 0`.
    pub fn sqrt(self) -> RInt {
        assert!(self.lo >= 0.0, "sqrt of interval with negative part");
        RInt { lo: sqrt_down(self.lo), hi: sqrt_up(self.hi) }
    }

    /// Integer power with outward rounding. Computed by repeated interval
    /// multiplication, so even powers of sign-straddling intervals are
    /// conservative (they may extend below zero).
    pub fn powi(self, k: u32) -> RInt {
        let mut acc = RInt::ONE;
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    /// Rigorous enclosure of the k-th root of a non-negative interval.
    pub fn nth_root(self, k: u32) -> RInt {
        assert!(self.lo >= 0.0 && k >= 1);
        RInt {
            lo: nth_root_down(self.lo, k),
            hi: nth_root_up(self.hi, k),
        }
    }

    pub fn max(self, o: RInt) -> RInt {
        RInt { lo: self.lo.max(o.lo), hi: self.hi.max(o.hi) }
    }

    pub fn min(self, o: RInt) -> RInt {
        RInt { lo: self.lo.min(o.lo), hi: self.hi.min(o.hi) }
    }

    pub fn hull(self, o: RInt) -> RInt {
        RInt { lo: self.lo.min(o.lo), hi: self.hi.max(o.hi) }
    }

    pub fn contains(self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

#[inline]
fn dir_down((s, e): (f64, f64)) -> f64 {
    if e >= 0.0 {
        s
    } else {
        s.next_down()
    }
}

#[inline]
fn dir_up((s, e): (f64, f64)) -> f64 {
    if e <= 0.0 {
        s
    } else {
        s.next_up()
    }
}

/// Lower bound of sqrt(x); x >= 0.
fn sqrt_down(x: f64) -> f64 {
    let s = x.sqrt();
    let (p, e) = two_prod(s, s);
    // s*s == x exactly means sqrt was exact
    if p == x && e == 0.0 {
        s
    } else {
        // correctly rounded sqrt is within half an ulp
        s.next_down()
    }
}

/// Upper bound of sqrt(x); x >= 0.
fn sqrt_up(x: f64) -> f64 {
    let s = x.sqrt();
    let (p, e) = two_prod(s, s);
    if p == x && e == 0.0 {
        s
    } else {
        s.next_up()
    }
}

/// Verified upper bound for x^(1/k), x >= 0. The candidate comes from powf
/// and is inflated until its k-th power certifiably dominates x; if that
/// somehow never happens the sound answer is infinity.
fn nth_root_up(x: f64, k: u32) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if k == 1 {
        return x;
    }
    if k == 2 {
        return sqrt_up(x);
    }
    let mut c = x.powf(1.0 / k as f64);
    for _ in 0..64 {
        if RInt::point(c).powi(k).lo >= x {
            return c;
        }
        c = c.next_up();
    }
    f64::INFINITY
}

/// Verified lower bound for x^(1/k), x >= 0.
fn nth_root_down(x: f64, k: u32) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if k == 1 {
        return x;
    }
    if k == 2 {
        return sqrt_down(x);
    }
    let mut c = x.powf(1.0 / k as f64);
    for _ in 0..64 {
        if RInt::point(c).powi(k).hi <= x {
            return c;
        }
        c = c.next_down();
    }
    0.0
}

/// A complex ball: disc with midpoint `re + im*i` and radius `rad`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallC {
    pub re: f64,
    pub im: f64,
    pub rad: f64,
}

impl BallC {
    pub const ZERO: BallC = BallC { re: 0.0, im: 0.0, rad: 0.0 };
    pub const ONE: BallC = BallC { re: 1.0, im: 0.0, rad: 0.0 };

    pub fn exact(re: f64, im: f64) -> Self {
        BallC { re, im, rad: 0.0 }
    }

    pub fn real(x: f64) -> Self {
        BallC { re: x, im: 0.0, rad: 0.0 }
    }

    pub fn new(re: f64, im: f64, rad: f64) -> Self {
        debug_assert!(rad >= 0.0 && rad.is_finite());
        BallC { re, im, rad }
    }

    pub fn from_mid(m: Complex64) -> Self {
        BallC { re: m.re, im: m.im, rad: 0.0 }
    }

    pub fn mid(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    pub fn is_exact(&self) -> bool {
        self.rad == 0.0
    }

    pub fn is_exact_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0 && self.rad == 0.0
    }

    pub fn contains_zero(&self) -> bool {
        self.abs().lo <= 0.0
    }

    pub fn conj(&self) -> Self {
        BallC { re: self.re, im: -self.im, rad: self.rad }
    }

    pub fn neg(&self) -> Self {
        BallC { re: -self.re, im: -self.im, rad: self.rad }
    }

    /// Enclosure of |z| over the ball.
    pub fn abs(&self) -> RInt {
        let m = abs_mid(self.re, self.im);
        RInt {
            lo: dir_down(two_sum(m.lo, -self.rad)).max(0.0),
            hi: radd(m.hi, self.rad),
        }
    }

    /// Upper bound of |z| over the ball.
    pub fn abs_up(&self) -> f64 {
        self.abs().hi
    }

    pub fn add(&self, o: &BallC) -> Self {
        let (sre, ere) = two_sum(self.re, o.re);
        let (sim, eim) = two_sum(self.im, o.im);
        let rad = radd(radd(self.rad, o.rad), radd(ere.abs(), eim.abs()));
        BallC { re: sre, im: sim, rad }
    }

    pub fn sub(&self, o: &BallC) -> Self {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &BallC) -> Self {
        // midpoint product with exact error recovery
        let (p1, e1) = two_prod(self.re, o.re);
        let (p2, e2) = two_prod(self.im, o.im);
        let (p3, e3) = two_prod(self.re, o.im);
        let (p4, e4) = two_prod(self.im, o.re);
        let (sre, fre) = two_sum(p1, -p2);
        let (sim, fim) = two_sum(p3, p4);
        let mid_err = radd(
            radd(radd(e1.abs(), e2.abs()), fre.abs()),
            radd(radd(e3.abs(), e4.abs()), fim.abs()),
        );
        let a1 = abs_mid(self.re, self.im).hi;
        let a2 = abs_mid(o.re, o.im).hi;
        let cross = radd(
            radd(rmul(a1, o.rad), rmul(a2, self.rad)),
            rmul(self.rad, o.rad),
        );
        BallC { re: sre, im: sim, rad: radd(cross, mid_err) }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.mul(&BallC::real(s))
    }

    /// Ball division; the divisor ball must exclude zero.
    pub fn div(&self, o: &BallC) -> Self {
        let od = o.abs();
        assert!(od.lo > 0.0, "ball division by a ball containing zero");
        let q = self.mid() / o.mid();
        // rigorous residual: self - q * o, with q treated as exact
        let qb = BallC::from_mid(q);
        let resid = self.sub(&qb.mul(o));
        // (z1/z2 - q) = resid_at(z1,z2) / z2, |z2| >= od.lo
        let extra = resid.abs().hi / od.lo;
        let extra = if extra == 0.0 { 0.0 } else { extra.next_up() };
        BallC { re: q.re, im: q.im, rad: extra }
    }

    /// Reciprocal; the ball must exclude zero.
    pub fn recip(&self) -> Self {
        BallC::ONE.div(self)
    }

    pub fn powi(&self, k: u32) -> Self {
        let mut acc = BallC::ONE;
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    /// True if the balls overlap (their exact values could coincide).
    pub fn overlaps(&self, o: &BallC) -> bool {
        self.sub(o).contains_zero()
    }
}

/// Enclosure of sqrt(re^2 + im^2) for exact f64 components.
fn abs_mid(re: f64, im: f64) -> RInt {
    if im == 0.0 {
        return RInt::point(re.abs());
    }
    if re == 0.0 {
        return RInt::point(im.abs());
    }
    let sq = RInt::point(re).powi(2).add(RInt::point(im).powi(2));
    sq.sqrt()
}

impl std::ops::Add for BallC {
    type Output = BallC;
    fn add(self, o: BallC) -> BallC {
        BallC::add(&self, &o)
    }
}

impl std::ops::Sub for BallC {
    type Output = BallC;
    fn sub(self, o: BallC) -> BallC {
        BallC::sub(&self, &o)
    }
}

impl std::ops::Mul for BallC {
    type Output = BallC;
    fn mul(self, o: BallC) -> BallC {
        BallC::mul(&self, &o)
    }
}

impl std::ops::Neg for BallC {
    type Output = BallC;
    fn neg(self) -> BallC {
        BallC::neg(&self)
    }
}
