//! The inflation operator: per-variable power substitutions that raise every
//! initial form to a common degree, and the bookkeeping that converts zero
//! counts of the inflated system back to cluster counts.

use crate::error::{Error, Result};
use crate::poly::PolySystem;

/// A power substitution x_i -> x_i^{w_i}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InflationMap {
    pub weights: Vec<u32>,
}

impl InflationMap {
    /// The standard operator of breadth `kappa` and order `d`: the first
    /// kappa variables stay, the rest are raised to the d-th power.
    pub fn standard(n: usize, kappa: usize, d: u32) -> Self {
        let weights = (0..n).map(|i| if i < kappa { 1 } else { d }).collect();
        InflationMap { weights }
    }

    pub fn identity(n: usize) -> Self {
        InflationMap { weights: vec![1; n] }
    }

    /// Number of preimages of a generic point with nonzero coordinates in
    /// every inflated variable: the product of the weights above one.
    pub fn cover_degree(&self) -> u64 {
        self.weights
            .iter()
            .filter(|&&w| w > 1)
            .map(|&w| w as u64)
            .product()
    }

    pub fn apply(&self, p: &PolySystem) -> PolySystem {
        p.map(|q| q.substitute_powers(&self.weights))
    }
}

/// Convert the inflated zero count to the original count through the cover.
pub fn cluster_count_from_inflated(inflated_count: u64, map: &InflationMap) -> Result<u64> {
    let cover = map.cover_degree();
    if cover == 0 || inflated_count % cover != 0 {
        return Err(Error::Degenerate(format!(
            "inflated count {inflated_count} is not divisible by the cover degree {cover}"
        )));
    }
    Ok(inflated_count / cover)
}

/// Search for a weight vector (entries 1..=w_max) under which every member of
/// the system reaches a common initial degree and the joint initial forms
/// pass the nonvanishing lower-bound test. Weight vectors are tried by
/// ascending common degree, then lexicographically; the first success wins.
pub fn uneven_weights_search(g: &PolySystem, w_max: u32) -> Option<(InflationMap, u32)> {
    let n = g.n;
    let total = (w_max as u64).pow(n as u32);
    let mut candidates: Vec<(u32, Vec<u32>)> = Vec::new();
    for idx in 0..total {
        let mut w = vec![1u32; n];
        let mut rest = idx;
        for slot in w.iter_mut().rev() {
            *slot = (rest % w_max as u64) as u32 + 1;
            rest /= w_max as u64;
        }
        if let Some(degree) = common_initial_degree(g, &w) {
            candidates.push((degree, w));
        }
    }
    candidates.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    for (degree, w) in candidates {
        let map = InflationMap { weights: w };
        let inflated = map.apply(g);
        let slice = PolySystem::new(
            n,
            inflated.polys.iter().map(|p| p.homogeneous_part(degree)).collect(),
        );
        if let Ok(report) =
            crate::bounds::lower_bound_sphere(&slice, degree, crate::bounds::Strategy::DominantDiagonal)
        {
            if report.lo > 0.0 {
                return Some((map, degree));
            }
        }
    }
    None
}

/// The common initial degree of the system under weights `w`, if every member
/// attains the same one (judged on midpoints).
fn common_initial_degree(g: &PolySystem, w: &[u32]) -> Option<u32> {
    let mut common: Option<u32> = None;
    for p in &g.polys {
        let d = p
            .terms()
            .filter(|(_, c)| c.mid() != num_complex::Complex64::new(0.0, 0.0))
            .map(|(e, _)| e.0.iter().zip(w).map(|(a, b)| a * b).sum::<u32>())
            .min()?;
        match common {
            None => common = Some(d),
            Some(c) if c != d => return None,
            _ => {}
        }
    }
    common
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ball::BallC;
    use crate::poly::{poly_from_terms, Exponent};

    fn mixed_order_system(a: f64) -> PolySystem {
        let mut row2 = vec![(vec![0u32, 2, 0], 1.0), (vec![0, 0, 4], 1.0)];
        if a != 0.0 {
            row2.push((vec![0, 0, 2], a));
        }
        PolySystem::new(
            3,
            vec![
                poly_from_terms(3, &[(&[1, 0, 0], 1.0, 0.0)]),
                {
                    let mut p = crate::poly::Polynomial::zero(3);
                    for (e, c) in &row2 {
                        p.add_term(Exponent(e.clone()), BallC::real(*c));
                    }
                    p
                },
                poly_from_terms(3, &[(&[0, 0, 3], 1.0, 0.0)]),
            ],
        )
    }

    #[test]
    fn standard_map_has_power_cover() {
        let m = InflationMap::standard(3, 1, 3);
        assert_eq!(m.weights, vec![1, 3, 3]);
        assert_eq!(m.cover_degree(), 9);
        assert_eq!(InflationMap::standard(2, 1, 1).cover_degree(), 1);
    }

    #[test]
    fn inflate_identity_for_unit_weights() {
        let g = mixed_order_system(0.0);
        assert_eq!(InflationMap::identity(3).apply(&g), g);
    }

    #[test]
    fn weight_search_finds_six_three_two() {
        let g = mixed_order_system(0.0);
        let (map, degree) = uneven_weights_search(&g, 8).expect("weights exist");
        assert_eq!(map.weights, vec![6, 3, 2]);
        assert_eq!(degree, 6);
        assert_eq!(map.cover_degree(), 36);
        let inflated = map.apply(&g);
        assert_eq!(
            inflated.polys[1].coeff(&Exponent(vec![0, 6, 0])).mid().re,
            1.0
        );
        assert_eq!(
            inflated.polys[1].coeff(&Exponent(vec![0, 0, 8])).mid().re,
            1.0
        );
    }

    #[test]
    fn weight_search_fails_when_blocked() {
        let g = mixed_order_system(0.5);
        assert!(uneven_weights_search(&g, 8).is_none());
    }

    #[test]
    fn cover_arithmetic() {
        let m = InflationMap { weights: vec![6, 3, 2] };
        assert_eq!(cluster_count_from_inflated(216, &m).unwrap(), 6);
        let m31 = InflationMap::standard(2, 1, 3);
        assert_eq!(cluster_count_from_inflated(9, &m31).unwrap(), 3);
        assert!(cluster_count_from_inflated(10, &m31).is_err());
        let id = InflationMap::identity(2);
        assert_eq!(cluster_count_from_inflated(7, &id).unwrap(), 7);
    }

    #[test]
    fn fiber_count_matches_cover() {
        use num_complex::Complex64;
        // preimages of generic points: enumerate per-coordinate roots and
        // count the distinct tuples that map back
        let maps = [
            InflationMap::standard(2, 1, 3),
            InflationMap { weights: vec![6, 3, 2] },
        ];
        let mut state = 77u64;
        let mut rnd = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        for map in &maps {
            let n = map.weights.len();
            for _ in 0..20 {
                let y: Vec<Complex64> = (0..n)
                    .map(|_| Complex64::new(rnd() + 2.0, rnd()))
                    .collect();
                let mut fiber = 1u64;
                for (i, &w) in map.weights.iter().enumerate() {
                    if w == 1 {
                        continue;
                    }
                    let r = y[i].norm().powf(1.0 / w as f64);
                    let th = y[i].arg() / w as f64;
                    let mut count = 0;
                    for k in 0..w {
                        let root = Complex64::from_polar(
                            r,
                            th + 2.0 * std::f64::consts::PI * k as f64 / w as f64,
                        );
                        if (root.powu(w) - y[i]).norm() < 1e-9 * y[i].norm() {
                            count += 1;
                        }
                    }
                    fiber *= count;
                }
                assert_eq!(fiber, map.cover_degree());
            }
        }
    }
}
