use std::sync::Arc;

/// Compressed-row sparsity pattern of a square matrix. Column indices are sorted within rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsityPattern {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
}

impl SparsityPattern {
    /// Pattern in which every pair of nodes sharing an element is coupled.
    ///
    /// `elements` holds `npe` global node ids per element, concatenated.
    pub fn from_elements(n: usize, elements: &[usize], npe: usize) -> Self {
        assert!(npe > 0 && elements.len() % npe == 0);
        let ne = elements.len() / npe;
        // node -> incident elements
        let mut inc_ptr = vec![0usize; n + 1];
        for &v in elements {
            inc_ptr[v + 1] += 1;
        }
        for i in 0..n {
            inc_ptr[i + 1] += inc_ptr[i];
        }
        let mut fill = inc_ptr.clone();
        let mut inc = vec![0u32; elements.len()];
        for e in 0..ne {
            for &v in &elements[e * npe..(e + 1) * npe] {
                inc[fill[v]] = e as u32;
                fill[v] += 1;
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut col_idx: Vec<u32> = Vec::new();
        let mut scratch: Vec<u32> = Vec::new();
        for v in 0..n {
            scratch.clear();
            for &e in &inc[inc_ptr[v]..inc_ptr[v + 1]] {
                let e = e as usize;
                scratch.extend(elements[e * npe..(e + 1) * npe].iter().map(|&x| x as u32));
            }
            scratch.sort_unstable();
            scratch.dedup();
            col_idx.extend_from_slice(&scratch);
            row_ptr.push(col_idx.len());
        }
        Self {
            n,
            row_ptr,
            col_idx,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[u32] {
        &self.col_idx
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        self.row(i)
            .binary_search(&(j as u32))
            .ok()
            .map(|p| self.row_ptr[i] + p)
    }

    /// Pattern restricted to the sorted index set `keep`, renumbered `0..keep.len()`.
    fn restrict(&self, keep: &[usize]) -> (Self, Vec<usize>) {
        let mut new_index = vec![u32::MAX; self.n];
        for (k, &g) in keep.iter().enumerate() {
            new_index[g] = k as u32;
        }
        let mut row_ptr = Vec::with_capacity(keep.len() + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut source = Vec::new();
        for &g in keep {
            for p in self.row_ptr[g]..self.row_ptr[g + 1] {
                let c = new_index[self.col_idx[p] as usize];
                if c != u32::MAX {
                    col_idx.push(c);
                    source.push(p);
                }
            }
            row_ptr.push(col_idx.len());
        }
        (
            Self {
                n: keep.len(),
                row_ptr,
                col_idx,
            },
            source,
        )
    }
}

/// Square sparse matrix in CSR form. Matrices assembled together share one pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pattern: Arc<SparsityPattern>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(pattern: Arc<SparsityPattern>) -> Self {
        let values = vec![0.0; pattern.nnz()];
        Self { pattern, values }
    }

    /// Builds a matrix from `(row, col, value)` triplets; duplicates are summed in input order.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_by_key(|&t| (triplets[t].0, triplets[t].1));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        let mut last = None;
        for &t in &order {
            let (r, c, v) = triplets[t];
            assert!(r < n && c < n, "triplet ({r}, {c}) out of range for n = {n}");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c as u32);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            pattern: Arc::new(SparsityPattern {
                n,
                row_ptr,
                col_idx,
            }),
            values,
        }
    }

    /// Sparse copy of a dense row-major matrix, keeping only nonzero entries.
    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut trip = Vec::new();
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), n);
            for (j, &v) in r.iter().enumerate() {
                if v != 0.0 {
                    trip.push((i, j, v));
                }
            }
        }
        Self::from_triplets(n, &trip)
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let trip: Vec<_> = d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        Self::from_triplets(d.len(), &trip)
    }

    pub fn dim(&self) -> usize {
        self.pattern.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn pattern(&self) -> &Arc<SparsityPattern> {
        &self.pattern
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let r = self.pattern.row_ptr[i]..self.pattern.row_ptr[i + 1];
        (&self.pattern.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pattern
            .position(i, j)
            .map_or(0.0, |p| self.values[p])
    }

    /// Adds a dense `nodes.len()²` local matrix (row-major) at the given global indices.
    ///
    /// Panics if an entry falls outside the pattern.
    pub fn add_local(&mut self, nodes: &[usize], local: &[f64]) {
        let k = nodes.len();
        debug_assert_eq!(local.len(), k * k);
        for (a, &ra) in nodes.iter().enumerate() {
            let start = self.pattern.row_ptr[ra];
            let row = self.pattern.row(ra);
            for (b, &cb) in nodes.iter().enumerate() {
                let p = row
                    .binary_search(&(cb as u32))
                    .expect("local entry outside sparsity pattern");
                self.values[start + p] += local[a * k + b];
            }
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        let p = &*self.pattern;
        for i in 0..p.n {
            let mut s = 0.0;
            for q in p.row_ptr[i]..p.row_ptr[i + 1] {
                s += self.values[q] * x[p.col_idx[q] as usize];
            }
            y[i] = s;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.matvec(x, &mut y);
        y
    }

    /// Exact (bitwise) symmetry check.
    pub fn is_symmetric(&self) -> bool {
        (0..self.dim()).all(|i| {
            let (cols, vals) = self.row(i);
            cols.iter()
                .zip(vals)
                .all(|(&j, &v)| self.get(j as usize, i).to_bits() == v.to_bits())
        })
    }

    /// True when both matrices store exactly the same structural positions.
    pub fn same_pattern(&self, other: &SparseMatrix) -> bool {
        Arc::ptr_eq(&self.pattern, &other.pattern) || *self.pattern == *other.pattern
    }

    /// Positions whose stored value is nonzero.
    pub fn nonzero_positions(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.dim() {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if v != 0.0 {
                    out.push((i, j as usize));
                }
            }
        }
        out
    }

    /// Principal submatrix on the sorted index set `keep`.
    pub fn principal_submatrix(&self, keep: &[usize]) -> SparseMatrix {
        let (pattern, source) = self.pattern.restrict(keep);
        Self {
            pattern: Arc::new(pattern),
            values: source.iter().map(|&p| self.values[p]).collect(),
        }
    }

    /// Principal submatrices of two matrices sharing a pattern; the results share one too.
    pub fn principal_submatrix_pair(
        a: &SparseMatrix,
        b: &SparseMatrix,
        keep: &[usize],
    ) -> (SparseMatrix, SparseMatrix) {
        assert!(Arc::ptr_eq(&a.pattern, &b.pattern) || a.pattern == b.pattern);
        let (pattern, source) = a.pattern.restrict(keep);
        let pattern = Arc::new(pattern);
        (
            Self {
                pattern: pattern.clone(),
                values: source.iter().map(|&p| a.values[p]).collect(),
            },
            Self {
                pattern,
                values: source.iter().map(|&p| b.values[p]).collect(),
            },
        )
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    /// Maximum absolute row sum (the induced ∞-norm, equal to the 1-norm for symmetric input).
    pub fn norm_inf(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.row(i).1.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&mut self, c: f64) {
        for v in &mut self.values {
            *v *= c;
        }
    }

    /// `self + c·other` for matrices sharing a pattern.
    pub fn add_scaled(&self, c: f64, other: &SparseMatrix) -> SparseMatrix {
        assert!(self.same_pattern(other), "patterns differ");
        Self {
            pattern: self.pattern.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + c * b)
                .collect(),
        }
    }

    /// Dense row-major copy.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut d = vec![vec![0.0; n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                row[j as usize] = v;
            }
        }
        d
    }
}
