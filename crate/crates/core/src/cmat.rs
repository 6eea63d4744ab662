//! Minimal column-major complex matrix used by the simulation pipeline.
//!
//! The dimensions involved are small on one side (K and eta are single
//! digits) and large on the other (M up to a few thousand), so a flat
//! `Vec<Complex64>` with column slices covers everything the pipeline
//! needs without pulling in a linear-algebra dependency.

use num_complex::Complex64;

#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn from_columns(columns: &[Vec<Complex64>]) -> Self {
        let cols = columns.len();
        let rows = if cols == 0 { 0 } else { columns[0].len() };
        let mut data = Vec::with_capacity(rows * cols);
        for c in columns {
            assert_eq!(c.len(), rows, "ragged column set");
            data.extend_from_slice(c);
        }
        CMat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn col(&self, j: usize) -> &[Complex64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [Complex64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[j * self.rows + i]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[j * self.rows + i] = v;
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    /// `self * rhs`, optionally conjugating `rhs` entrywise first
    /// (`A * B^*`, which is how pilot despreading is written).
    pub fn mul(&self, rhs: &CMat, conj_rhs: bool) -> CMat {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch in mul");
        let mut out = CMat::zeros(self.rows, rhs.cols);
        for j in 0..rhs.cols {
            let rcol = rhs.col(j);
            let ocol = out.col_mut(j);
            for (p, &r) in rcol.iter().enumerate() {
                let f = if conj_rhs { r.conj() } else { r };
                if f == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let scol = self.col(p);
                for (o, &s) in ocol.iter_mut().zip(scol) {
                    *o += s * f;
                }
            }
        }
        out
    }
}

/// Hermitian inner product `a^H b`.
pub fn hdot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .fold(Complex64::new(0.0, 0.0), |acc, (&x, &y)| acc + x.conj() * y)
}

/// Squared 2-norm of a complex vector.
pub fn norm_sq(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Orthonormalize the columns of `m` in place (modified Gram-Schmidt with
/// one re-orthogonalization pass). Returns false if a column is linearly
/// dependent on the previous ones.
pub fn orthonormalize_columns(m: &mut CMat) -> bool {
    let cols = m.cols();
    for j in 0..cols {
        for _pass in 0..2 {
            for i in 0..j {
                let proj = {
                    let (a, b) = (m.col(i), m.col(j));
                    hdot(a, b)
                };
                let prev = m.col(i).to_vec();
                for (x, p) in m.col_mut(j).iter_mut().zip(prev) {
                    *x -= proj * p;
                }
            }
        }
        let n = norm_sq(m.col(j)).sqrt();
        if n < 1e-150 {
            return false;
        }
        for x in m.col_mut(j) {
            *x /= n;
        }
    }
    true
}
