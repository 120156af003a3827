//! Property tests for the polynomial core: order-compatible arithmetic,
//! slice recombination, substitution identities, and ball soundness against
//! exact rational arithmetic.

use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

use zcluster::ball::BallC;
use zcluster::poly::{Exponent, Polynomial};

/// Exact complex rational: the reference arithmetic for soundness checks.
#[derive(Clone, Debug, PartialEq)]
struct QC {
    re: BigRational,
    im: BigRational,
}

impl QC {
    fn from_dyadic(num: i64, den_pow2: u32) -> Self {
        QC {
            re: BigRational::new(BigInt::from(num), BigInt::from(1i64 << den_pow2)),
            im: BigRational::from_integer(BigInt::from(0)),
        }
    }

    fn zero() -> Self {
        QC {
            re: BigRational::from_integer(BigInt::from(0)),
            im: BigRational::from_integer(BigInt::from(0)),
        }
    }

    fn add(&self, o: &QC) -> QC {
        QC { re: &self.re + &o.re, im: &self.im + &o.im }
    }

    fn mul(&self, o: &QC) -> QC {
        QC {
            re: &self.re * &o.re - &self.im * &o.im,
            im: &self.re * &o.im + &self.im * &o.re,
        }
    }

    fn to_f64(&self) -> (f64, f64) {
        use num_traits::ToPrimitive;
        (self.re.to_f64().unwrap(), self.im.to_f64().unwrap())
    }
}

/// A dyadic test polynomial paired with its exact rational shadow.
#[derive(Clone, Debug)]
struct DyadicPoly {
    poly: Polynomial,
    shadow: Vec<(Vec<u32>, QC)>,
}

fn dyadic_poly(n: usize, terms: &[(Vec<u32>, i64)]) -> DyadicPoly {
    let mut poly = Polynomial::zero(n);
    let mut shadow = Vec::new();
    for (e, num) in terms {
        let c = *num as f64 / 16.0;
        poly.add_term(Exponent(e.clone()), BallC::real(c));
        shadow.push((e.clone(), QC::from_dyadic(*num, 4)));
    }
    DyadicPoly { poly, shadow }
}

fn shadow_eval(shadow: &[(Vec<u32>, QC)], z: &[QC]) -> QC {
    let mut acc = QC::zero();
    for (e, c) in shadow {
        let mut term = c.clone();
        for (j, &exp) in e.iter().enumerate() {
            for _ in 0..exp {
                term = term.mul(&z[j]);
            }
        }
        acc = acc.add(&term);
    }
    acc
}

fn exponent_strategy(n: usize, max_deg: u32) -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(0..=max_deg, n).prop_filter("degree cap", move |v| {
        v.iter().sum::<u32>() <= max_deg
    })
}

fn poly_strategy(n: usize) -> impl Strategy<Value = DyadicPoly> {
    prop::collection::vec((exponent_strategy(n, 4), -24i64..=24), 1..6)
        .prop_map(move |terms| dyadic_poly(n, &terms))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// Slices below / at / above any degree recombine to the original.
    #[test]
    fn slices_recombine(dp in poly_strategy(2), d in 0u32..6) {
        let p = &dp.poly;
        let rec = p.parts_below(d).add(&p.homogeneous_part(d)).add(&p.parts_above(d));
        prop_assert_eq!(&rec, p);
    }

    /// Product of initial forms is the initial form of the product.
    #[test]
    fn initial_form_multiplicative(a in poly_strategy(2), b in poly_strategy(2)) {
        prop_assume!(!a.poly.is_zero() && !b.poly.is_zero());
        let prod = a.poly.mul(&b.poly);
        prop_assume!(!prod.is_zero());
        // with dyadic inputs the product is exact, so the initial forms match
        // term for term
        let lhs = prod.initial_form().unwrap();
        let rhs = a.poly.initial_form().unwrap().mul(&b.poly.initial_form().unwrap());
        if rhs.terms().all(|(_, c)| !c.is_exact_zero()) && !rhs.is_zero() {
            for (e, c) in rhs.terms() {
                let got = lhs.coeff(e);
                prop_assert!(got.sub(c).contains_zero());
            }
        }
    }

    /// Ball evaluation contains the exact rational value.
    #[test]
    fn evaluation_is_sound(
        dp in poly_strategy(3),
        z_nums in prop::collection::vec((-40i64..=40, -40i64..=40), 3),
    ) {
        let z_balls: Vec<BallC> = z_nums
            .iter()
            .map(|(re, im)| BallC::exact(*re as f64 / 16.0, *im as f64 / 16.0))
            .collect();
        let z_exact: Vec<QC> = z_nums
            .iter()
            .map(|(re, im)| {
                let mut q = QC::from_dyadic(*re, 4);
                q.im = BigRational::new(BigInt::from(*im), BigInt::from(16));
                q
            })
            .collect();
        let ball = dp.poly.evaluate(&z_balls).unwrap();
        let exact = shadow_eval(&dp.shadow, &z_exact);
        let (er, ei) = exact.to_f64();
        let dist = ((ball.re - er).powi(2) + (ball.im - ei).powi(2)).sqrt();
        // the rational-to-f64 conversion adds at most an ulp of slack
        prop_assert!(
            dist <= ball.rad + 1e-12 * (1.0 + er.abs() + ei.abs()),
            "exact value escaped the ball: dist {dist}, rad {}",
            ball.rad
        );
    }

    /// Multiplication is sound: the product ball contains the exact product
    /// evaluated at rational points.
    #[test]
    fn product_is_sound(
        a in poly_strategy(2),
        b in poly_strategy(2),
        z_nums in prop::collection::vec((-24i64..=24, -24i64..=24), 2),
    ) {
        let prod = a.poly.mul(&b.poly);
        let z_balls: Vec<BallC> = z_nums
            .iter()
            .map(|(re, im)| BallC::exact(*re as f64 / 16.0, *im as f64 / 16.0))
            .collect();
        let z_exact: Vec<QC> = z_nums
            .iter()
            .map(|(re, im)| {
                let mut q = QC::from_dyadic(*re, 4);
                q.im = BigRational::new(BigInt::from(*im), BigInt::from(16));
                q
            })
            .collect();
        let ball = prod.evaluate(&z_balls).unwrap();
        let exact = shadow_eval(&a.shadow, &z_exact).mul(&shadow_eval(&b.shadow, &z_exact));
        let (er, ei) = exact.to_f64();
        let dist = ((ball.re - er).powi(2) + (ball.im - ei).powi(2)).sqrt();
        prop_assert!(dist <= ball.rad + 1e-9 * (1.0 + er.abs() + ei.abs()));
    }

    /// Identity substitutions act as identities on the stored terms.
    #[test]
    fn identity_substitutions(dp in poly_strategy(3)) {
        let p = &dp.poly;
        prop_assert_eq!(&p.substitute_powers(&[1, 1, 1]), p);
        let id = vec![
            vec![BallC::ONE, BallC::ZERO, BallC::ZERO],
            vec![BallC::ZERO, BallC::ONE, BallC::ZERO],
            vec![BallC::ZERO, BallC::ZERO, BallC::ONE],
        ];
        let shift = vec![BallC::ZERO; 3];
        prop_assert_eq!(&p.compose_affine(&id, &shift).unwrap(), p);
        let q = Polynomial::zero(3);
        prop_assert_eq!(&p.substitute_variable(2, &q).unwrap(), p);
    }

    /// The one-norm bound dominates sampled values on the unit ball.
    #[test]
    fn one_norm_dominates_samples(dp in poly_strategy(2), seed in 0u64..1000) {
        let norm = dp.poly.coeff_one_norm();
        let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(11);
        let mut rnd = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        for _ in 0..20 {
            let mut z = [
                num_complex::Complex64::new(rnd(), rnd()),
                num_complex::Complex64::new(rnd(), rnd()),
            ];
            let n2 = (z[0].norm_sqr() + z[1].norm_sqr()).sqrt();
            if n2 > 1.0 {
                z[0] /= n2;
                z[1] /= n2;
            }
            let v = dp.poly.evaluate_mid(&z);
            prop_assert!(v.norm() <= norm.hi + 1e-9);
        }
    }
}
