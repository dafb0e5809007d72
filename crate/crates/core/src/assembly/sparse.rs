//! Row-compressed sparse matrix with sorted column indices.

/// CSR matrix. Column indices are stored as `u32` to halve the index memory of
/// the wide nonlocal stencils.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    /// Zero matrix with the given sorted, duplicate-free row patterns.
    pub fn from_pattern(n_cols: usize, rows: &[Vec<u32>]) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        row_ptr.push(0);
        let nnz: usize = rows.iter().map(Vec::len).sum();
        let mut cols = Vec::with_capacity(nnz);
        for r in rows {
            debug_assert!(r.windows(2).all(|w| w[0] < w[1]));
            cols.extend_from_slice(r);
            row_ptr.push(cols.len());
        }
        Self { n_rows: rows.len(), n_cols, row_ptr, cols, vals: vec![0.0; nnz] }
    }

    /// Build from raw CSR arrays.
    pub fn from_csr(n_cols: usize, row_ptr: Vec<usize>, cols: Vec<u32>, vals: Vec<f64>) -> Self {
        assert_eq!(cols.len(), vals.len());
        assert_eq!(*row_ptr.last().unwrap_or(&0), cols.len());
        Self { n_rows: row_ptr.len() - 1, n_cols, row_ptr, cols, vals }
    }

    /// Dense row-major input, dropping exact zeros.
    pub fn from_dense(n: usize, dense: &[f64]) -> Self {
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let v = dense[i * n + j];
                if v != 0.0 {
                    cols.push(j as u32);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self { n_rows: n, n_cols: n, row_ptr, cols, vals }
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_indices(&self) -> &[u32] {
        &self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.vals
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.vals
    }

    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    pub fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        self.row_ptr[i]..self.row_ptr[i + 1]
    }

    /// Storage position of entry (i, j), if it is in the pattern.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let r = self.row_range(i);
        self.cols[r.clone()].binary_search(&(j as u32)).ok().map(|k| r.start + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |p| self.vals[p])
    }

    /// Adds to an existing pattern entry; panics if (i, j) is not stored.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let p = self.position(i, j).unwrap_or_else(|| panic!("entry ({i}, {j}) not in pattern"));
        self.vals[p] += v;
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n_rows) {
            let (c, v) = self.row(i);
            *yi = c.iter().zip(v).map(|(&j, a)| a * x[j as usize]).sum();
        }
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n_rows).map(|i| self.row(i).1.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// ‖A − Aᵀ‖∞ restricted to rows and columns with `mask` set.
    pub fn asymmetry_inf(&self, mask: &[bool]) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n_rows {
            if !mask[i] {
                continue;
            }
            let (c, v) = self.row(i);
            let mut s = 0.0;
            for (&j, a) in c.iter().zip(v) {
                if mask[j as usize] {
                    s += (a - self.get(j as usize, i)).abs();
                }
            }
            worst = worst.max(s);
        }
        worst
    }

    /// A ← (A + Aᵀ)/2 on the rows and columns with `mask` set. Requires a
    /// structurally symmetric pattern on that block.
    pub fn symmetrize(&mut self, mask: &[bool]) {
        for i in 0..self.n_rows {
            if !mask[i] {
                continue;
            }
            for p in self.row_range(i) {
                let j = self.cols[p] as usize;
                if j <= i || !mask[j] {
                    continue;
                }
                let q = self.position(j, i).expect("pattern is not structurally symmetric");
                let avg = 0.5 * (self.vals[p] + self.vals[q]);
                self.vals[p] = avg;
                self.vals[q] = avg;
            }
        }
    }

    /// Dense row-major copy (small matrices only).
    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n_rows * self.n_cols];
        for i in 0..self.n_rows {
            let (c, v) = self.row(i);
            for (&j, a) in c.iter().zip(v) {
                d[i * self.n_cols + j as usize] = *a;
            }
        }
        d
    }
}
