//! Small dense matrices over complex balls.
//!
//! Sized for the ambient dimensions this crate works at (a handful of
//! variables), so determinants and inverses go through exact cofactor
//! expansion in ball arithmetic.

use num_complex::Complex64;

use crate::ball::BallC;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct BallMatrix {
    pub nrows: usize,
    pub ncols: usize,
    data: Vec<BallC>,
}

impl BallMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        BallMatrix { nrows, ncols, data: vec![BallC::ZERO; nrows * ncols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = BallMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = BallC::ONE;
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<BallC>>) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == ncols));
        BallMatrix { nrows, ncols, data: rows.into_iter().flatten().collect() }
    }

    pub fn from_mid(m: &nalgebra::DMatrix<Complex64>) -> Self {
        let mut out = BallMatrix::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out[(i, j)] = BallC::from_mid(m[(i, j)]);
            }
        }
        out
    }

    pub fn to_mid(&self) -> nalgebra::DMatrix<Complex64> {
        nalgebra::DMatrix::from_fn(self.nrows, self.ncols, |i, j| self[(i, j)].mid())
    }

    pub fn row(&self, i: usize) -> &[BallC] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn rows(&self) -> Vec<Vec<BallC>> {
        (0..self.nrows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn mul(&self, o: &BallMatrix) -> BallMatrix {
        assert_eq!(self.ncols, o.nrows);
        let mut out = BallMatrix::zeros(self.nrows, o.ncols);
        for i in 0..self.nrows {
            for j in 0..o.ncols {
                let mut acc = BallC::ZERO;
                for k in 0..self.ncols {
                    acc = acc.add(&self[(i, k)].mul(&o[(k, j)]));
                }
                out[(i, j)] = acc;
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[BallC]) -> Vec<BallC> {
        assert_eq!(self.ncols, v.len());
        (0..self.nrows)
            .map(|i| {
                let mut acc = BallC::ZERO;
                for k in 0..self.ncols {
                    acc = acc.add(&self[(i, k)].mul(&v[k]));
                }
                acc
            })
            .collect()
    }

    /// Determinant by cofactor expansion (square matrices only).
    pub fn det(&self) -> Result<BallC> {
        if self.nrows != self.ncols {
            return Err(Error::NotSquare { m: self.nrows, n: self.ncols });
        }
        if self.nrows > 7 {
            return Err(Error::Degenerate(
                "cofactor determinant limited to dimension 7".into(),
            ));
        }
        Ok(self.det_rec(&(0..self.ncols).collect::<Vec<_>>(), 0))
    }

    fn det_rec(&self, cols: &[usize], row: usize) -> BallC {
        if cols.is_empty() {
            return BallC::ONE;
        }
        let mut acc = BallC::ZERO;
        for (k, &c) in cols.iter().enumerate() {
            let entry = self[(row, c)];
            if entry.is_exact_zero() {
                continue;
            }
            let rest: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
            let minor = self.det_rec(&rest, row + 1);
            let signed = if k % 2 == 0 { entry } else { entry.neg() };
            acc = acc.add(&signed.mul(&minor));
        }
        acc
    }

    /// Rigorous inverse enclosure via the adjugate; fails if the determinant
    /// ball contains zero.
    pub fn inverse(&self) -> Result<BallMatrix> {
        let n = self.nrows;
        if n != self.ncols {
            return Err(Error::NotSquare { m: self.nrows, n: self.ncols });
        }
        let d = self.det()?;
        if d.contains_zero() {
            return Err(Error::Degenerate(
                "matrix determinant ball contains zero".into(),
            ));
        }
        let mut out = BallMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                // cofactor C_ji / det
                let rows: Vec<usize> = (0..n).filter(|&r| r != j).collect();
                let cols: Vec<usize> = (0..n).filter(|&c| c != i).collect();
                let minor = self.minor_det(&rows, &cols);
                let sign = if (i + j) % 2 == 0 { minor } else { minor.neg() };
                out[(i, j)] = sign.div(&d);
            }
        }
        Ok(out)
    }

    fn minor_det(&self, rows: &[usize], cols: &[usize]) -> BallC {
        if rows.is_empty() {
            return BallC::ONE;
        }
        let r = rows[0];
        let mut acc = BallC::ZERO;
        for (k, &c) in cols.iter().enumerate() {
            let entry = self[(r, c)];
            if entry.is_exact_zero() {
                continue;
            }
            let rest_cols: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
            let minor = self.minor_det(&rows[1..], &rest_cols);
            let signed = if k % 2 == 0 { entry } else { entry.neg() };
            acc = acc.add(&signed.mul(&minor));
        }
        acc
    }

    /// Max absolute midpoint entry of (self * o - I); a cheap unitarity /
    /// inverse-quality diagnostic.
    pub fn product_identity_defect(&self, o: &BallMatrix) -> f64 {
        let p = self.mul(o);
        let mut worst: f64 = 0.0;
        for i in 0..p.nrows {
            for j in 0..p.ncols {
                let target = if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
                worst = worst.max((p[(i, j)].mid() - target).norm());
            }
        }
        worst
    }

    pub fn conj_transpose(&self) -> BallMatrix {
        let mut out = BallMatrix::zeros(self.ncols, self.nrows);
        for i in 0..self.nrows {
            for j in 0..self.ncols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for BallMatrix {
    type Output = BallC;
    fn index(&self, (i, j): (usize, usize)) -> &BallC {
        &self.data[i * self.ncols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for BallMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BallC {
        &mut self.data[i * self.ncols + j]
    }
}
