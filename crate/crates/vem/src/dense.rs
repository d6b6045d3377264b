//! Minimal row-major dense matrix used for per-element operators. Construction
//! goes through nalgebra; the time-stepping hot path only needs `matvec`.

#[derive(Debug, Clone)]
pub struct Dense {
    pub rows: usize,
    pub cols: usize,
    /// Row-major entries, `a[i * cols + j]`.
    pub a: Vec<f64>,
}

impl Dense {
    pub fn zeros(rows: usize, cols: usize) -> Dense {
        Dense {
            rows,
            cols,
            a: vec![0.0; rows * cols],
        }
    }

    pub fn from_na(m: &nalgebra::DMatrix<f64>) -> Dense {
        let (rows, cols) = m.shape();
        let mut a = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                a.push(m[(i, j)]);
            }
        }
        Dense { rows, cols, a }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.cols + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.a[i * self.cols..(i + 1) * self.cols]
    }

    /// out = A x
    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for i in 0..self.rows {
            let row = self.row(i);
            let mut s = 0.0;
            for j in 0..self.cols {
                s += row[j] * x[j];
            }
            out[i] = s;
        }
    }

    /// out = A^T x
    pub fn matvec_t(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        out.fill(0.0);
        for i in 0..self.rows {
            let row = self.row(i);
            let xi = x[i];
            for j in 0..self.cols {
                out[j] += row[j] * xi;
            }
        }
    }
}
