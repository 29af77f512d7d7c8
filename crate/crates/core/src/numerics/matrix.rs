//! Minimal row-major f64 matrix with the three GEMM variants the MLP
//! forward/backward passes need. Loop order is fixed, so results are
//! bit-identical across runs and platforms.

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length mismatch");
        Mat { rows, cols, data }
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Mat {
            rows: rows.len(),
            cols,
            data,
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols)
    }

    /// C = A · Bᵀ. B is (n × k) with contiguous rows, so the inner product
    /// runs over two contiguous slices. This is the layer forward pass
    /// (inputs · weightsᵀ) with weights stored (out × in).
    pub fn mul_bt(&self, b: &Mat) -> Mat {
        assert_eq!(self.cols, b.cols, "inner dimension mismatch");
        let mut out = Mat::zeros(self.rows, b.rows);
        for (i, a_row) in self.iter_rows().enumerate() {
            let out_row = out.row_mut(i);
            for (j, b_row) in b.iter_rows().enumerate() {
                out_row[j] = dot(a_row, b_row);
            }
        }
        out
    }

    /// C = A · B with the k-loop outermost per row, accumulating scaled rows
    /// of B. Used for the input gradient (dZ · W).
    pub fn mul(&self, b: &Mat) -> Mat {
        assert_eq!(self.cols, b.rows, "inner dimension mismatch");
        let mut out = Mat::zeros(self.rows, b.cols);
        for (i, a_row) in self.iter_rows().enumerate() {
            let out_row = out.row_mut(i);
            for (k, &a_ik) in a_row.iter().enumerate() {
                if a_ik == 0.0 {
                    continue;
                }
                axpy(a_ik, b.row(k), out_row);
            }
        }
        out
    }

    /// C = Aᵀ · B. Used for the weight gradient (dZᵀ · X), accumulated one
    /// batch row at a time so every inner loop stays contiguous.
    pub fn t_mul(&self, b: &Mat) -> Mat {
        assert_eq!(self.rows, b.rows, "outer dimension mismatch");
        let mut out = Mat::zeros(self.cols, b.cols);
        for (a_row, b_row) in self.iter_rows().zip(b.iter_rows()) {
            for (k, &a_rk) in a_row.iter().enumerate() {
                if a_rk == 0.0 {
                    continue;
                }
                axpy(a_rk, b_row, out.row_mut(k));
            }
        }
        out
    }

    /// Column sums, used for bias gradients.
    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for row in self.iter_rows() {
            axpy(1.0, row, &mut sums);
        }
        sums
    }

    /// Adds `bias` (length = cols) to every row.
    pub fn add_bias(&mut self, bias: &[f64]) {
        assert_eq!(bias.len(), self.cols);
        for row in self.data.chunks_exact_mut(self.cols) {
            for (x, b) in row.iter_mut().zip(bias) {
                *x += b;
            }
        }
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // Four independent accumulators so the compiler can vectorize without
    // reassociating (the summation order is part of the contract).
    let chunks = a.len() / 4;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    for c in 0..chunks {
        let i = c * 4;
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in chunks * 4..a.len() {
        tail += a[i] * b[i];
    }
    (s0 + s1) + (s2 + s3) + tail
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
