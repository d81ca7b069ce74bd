//! Smallest eigenpairs of the symmetric pencil `K u = λ B u`.
//!
//! The sparse solver builds a B-orthonormal basis by repeatedly applying the shift-invert
//! operator `(K − σB)⁻¹ B` to blocks of unconverged Ritz vectors, with Rayleigh–Ritz on
//! `VᵀKV` and a thick restart that keeps the leading Ritz vectors. Blocks let clustered and
//! repeated eigenvalues (spheres, cubes) converge together.

use faer::linalg::triangular_solve::{solve_lower_triangular_in_place, solve_upper_triangular_in_place};
use faer::dyn_stack::{MemBuffer, MemStack};
use faer::perm::PermRef;
use faer::sparse::linalg::cholesky::{
    factorize_symbolic_cholesky, LltRef, SymbolicCholesky, SymmetricOrdering,
};
use faer::sparse::{FaerError, SparseColMatRef, SymbolicSparseColMatRef};
use faer::linalg::matmul::matmul;
use faer::{Accum, Conj, Mat, MatMut, MatRef, Par, Side};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::fem::SparseMatrix;
use crate::geom::Point3;
use crate::rng::seeded;

/// Largest system accepted by the dense oracle.
pub const DENSE_LIMIT: usize = 3000;

#[derive(Debug, Clone)]
pub struct EigenOptions {
    /// Normwise backward-error tolerance per eigenpair.
    pub tol: f64,
    /// Seed of the random starting block.
    pub seed: u64,
    /// Spectral shift `σ`. `None` picks `−1e-4·trace(K)/trace(B)`, which keeps `K − σB`
    /// positive definite when `K` is only semidefinite.
    pub shift: Option<f64>,
    pub block_size: Option<usize>,
    /// Cap on block expansions; `None` means `50·k`.
    pub max_expansions: Option<usize>,
    pub want_vectors: bool,
    /// Systems up to this size are solved densely.
    pub dense_threshold: usize,
    /// Fill-reducing ordering for the sparse Cholesky factor, `order[new] = old`.
    /// `None` uses approximate minimum degree.
    pub fill_ordering: Option<Vec<usize>>,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            seed: 0x1b5e_c7a1,
            shift: None,
            block_size: None,
            max_expansions: None,
            want_vectors: false,
            dense_threshold: 300,
            fill_ordering: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// B-orthonormal eigenvectors, one per eigenvalue, when requested.
    pub eigenvectors: Option<Vec<Vec<f64>>>,
    /// `‖Ku − λBu‖ / ((‖K‖∞ + |λ|‖B‖∞)‖u‖)` per pair.
    pub residuals: Vec<f64>,
    /// System dimension.
    pub n: usize,
    /// Number of slightly negative eigenvalues floored to zero.
    pub clamped: usize,
    /// Block expansions used (0 for the dense path).
    pub expansions: usize,
}

impl Spectrum {
    pub fn k(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// The `k` smallest eigenpairs of `K u = λ B u` for symmetric `K ⪰ 0` and `B ≻ 0`.
pub fn smallest_eigenpairs(
    k: &SparseMatrix,
    b: &SparseMatrix,
    nev: usize,
    opts: &EigenOptions,
) -> Result<Spectrum> {
    let n = k.dim();
    if b.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "K is {n}×{n} but B is {}×{}",
            b.dim(),
            b.dim()
        )));
    }
    if nev == 0 || nev > n {
        return Err(Error::InvalidArgument(format!(
            "requested {nev} eigenvalues of a system of dimension {n}"
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    if let Some(i) = b.diagonal().iter().position(|&d| !(d > 0.0)) {
        return Err(Error::NotPositiveDefinite(format!(
            "mass matrix has nonpositive diagonal entry at row {i}"
        )));
    }
    let norms = (k.norm_inf(), b.norm_inf());
    let mut spectrum = if n <= opts.dense_threshold.min(DENSE_LIMIT) || 3 * nev > n {
        if n > DENSE_LIMIT {
            return Err(Error::InvalidArgument(format!(
                "{nev} of {n} eigenvalues requested; too many for the sparse solver"
            )));
        }
        dense_path(k, b, nev, norms, opts)?
    } else {
        BlockSolver::new(k, b, nev, norms, opts)?.run()?
    };
    clamp_negatives(&mut spectrum);
    Ok(spectrum)
}

fn clamp_negatives(s: &mut Spectrum) {
    let top = s.eigenvalues.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    for v in &mut s.eigenvalues {
        if *v < 0.0 {
            if -*v <= 1e-6 * top {
                *v = 0.0;
                s.clamped += 1;
            } else {
                log::warn!("eigenvalue {v:e} is negative beyond round-off; K may be indefinite");
            }
        }
    }
    if s.clamped > 0 {
        log::debug!("floored {} round-off negative eigenvalue(s) to zero", s.clamped);
    }
}

fn backward_error(
    k: &SparseMatrix,
    u: &[f64],
    bu: &[f64],
    lambda: f64,
    (knorm, bnorm): (f64, f64),
) -> f64 {
    let ku = k.mul_vec(u);
    let r: f64 = ku
        .iter()
        .zip(bu)
        .map(|(a, c)| (a - lambda * c).powi(2))
        .sum::<f64>()
        .sqrt();
    let unorm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let denom = (knorm + lambda.abs() * bnorm) * unorm;
    if denom > 0.0 {
        r / denom
    } else {
        r
    }
}

fn dense_path(
    k: &SparseMatrix,
    b: &SparseMatrix,
    nev: usize,
    norms: (f64, f64),
    opts: &EigenOptions,
) -> Result<Spectrum> {
    let (vals, vecs) = dense_generalized_eigpairs(&k.to_dense(), &b.to_dense())?;
    let mut residuals = Vec::with_capacity(nev);
    for (i, u) in vecs.iter().take(nev).enumerate() {
        residuals.push(backward_error(k, u, &b.mul_vec(u), vals[i], norms));
    }
    Ok(Spectrum {
        eigenvalues: vals[..nev].to_vec(),
        eigenvectors: opts
            .want_vectors
            .then(|| vecs.into_iter().take(nev).collect()),
        residuals,
        n: k.dim(),
        clamped: 0,
        expansions: 0,
    })
}

fn to_mat(rows: &[Vec<f64>], name: &str) -> Result<Mat<f64>> {
    let n = rows.len();
    if let Some(r) = rows.iter().find(|r| r.len() != n) {
        return Err(Error::DimensionMismatch(format!(
            "{name} is not square ({n} rows, a row of length {})",
            r.len()
        )));
    }
    Ok(Mat::from_fn(n, n, |i, j| rows[i][j]))
}

/// Full ascending spectrum of a dense symmetric pencil.
pub fn dense_generalized_eig(k: &[Vec<f64>], b: &[Vec<f64>]) -> Result<Vec<f64>> {
    Ok(dense_generalized_eigpairs(k, b)?.0)
}

/// Full ascending spectrum with B-orthonormal eigenvectors, via `B = LLᵀ` and the symmetric
/// eigendecomposition of `L⁻¹ K L⁻ᵀ`.
pub fn dense_generalized_eigpairs(
    k: &[Vec<f64>],
    b: &[Vec<f64>],
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = k.len();
    if n > DENSE_LIMIT {
        return Err(Error::InvalidArgument(format!(
            "dense eigensolver limited to dimension {DENSE_LIMIT}, got {n}"
        )));
    }
    if b.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "K is {n}×{n} but B has {} rows",
            b.len()
        )));
    }
    let km = to_mat(k, "K")?;
    let bm = to_mat(b, "B")?;
    let llt = bm
        .llt(Side::Lower)
        .map_err(|e| Error::NotPositiveDefinite(format!("B: {e:?}")))?;
    let l = llt.L();
    // C = L⁻¹ K L⁻ᵀ = L⁻¹ (L⁻¹ K)ᵀ for symmetric K
    let mut x = km.clone();
    solve_lower_triangular_in_place(l, x.as_mut(), Par::Seq);
    let mut c = x.transpose().to_owned();
    solve_lower_triangular_in_place(l, c.as_mut(), Par::Seq);
    let c = Mat::from_fn(n, n, |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
    let evd = c
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::NoConvergence {
            iterations: 0,
            tol: 0.0,
            achieved: vec![],
        })?;
    let vals: Vec<f64> = (0..n).map(|i| evd.S()[i]).collect();
    let mut u = evd.U().to_owned();
    solve_upper_triangular_in_place(l.transpose(), u.as_mut(), Par::Seq);
    let vecs = (0..n)
        .map(|j| (0..n).map(|i| u[(i, j)]).collect())
        .collect();
    Ok((vals, vecs))
}

/// Cholesky factor of `K − σB`, applied as `x ↦ (K − σB)⁻¹ B x`.
struct ShiftInvert<'a> {
    b: &'a SparseMatrix,
    symbolic: SymbolicCholesky<u32>,
    values: Vec<f64>,
}

impl<'a> ShiftInvert<'a> {
    fn new(
        k: &SparseMatrix,
        b: &'a SparseMatrix,
        sigma: f64,
        ordering: Option<&[usize]>,
    ) -> Result<Self> {
        let a = if sigma == 0.0 {
            k.clone()
        } else {
            k.add_scaled(-sigma, b)
        };
        let n = a.dim();
        // lower triangle in CSC; the CSR rows of a symmetric matrix are its columns
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::new();
        let mut a_values = Vec::new();
        col_ptr.push(0u32);
        for j in 0..n {
            let (cols, vals) = a.row(j);
            for (&i, &v) in cols.iter().zip(vals) {
                if i as usize >= j {
                    row_idx.push(i);
                    a_values.push(v);
                }
            }
            let len = u32::try_from(row_idx.len()).map_err(|_| {
                Error::Unsupported("matrix too large for 32-bit sparse indices".into())
            })?;
            col_ptr.push(len);
        }
        drop(a);
        let pattern = SymbolicSparseColMatRef::new_checked(n, n, &col_ptr, None, &row_idx);
        let perm = match ordering {
            Some(order) => {
                if !is_permutation(order, n) {
                    return Err(Error::InvalidArgument(
                        "fill ordering is not a permutation of the unknowns".into(),
                    ));
                }
                let fwd: Vec<u32> = order.iter().map(|&v| v as u32).collect();
                let mut inv = vec![0u32; n];
                for (new, &old) in order.iter().enumerate() {
                    inv[old] = new as u32;
                }
                Some((fwd, inv))
            }
            None => None,
        };
        let method = match &perm {
            Some((fwd, inv)) => SymmetricOrdering::Custom(PermRef::new_checked(fwd, inv, n)),
            None => SymmetricOrdering::Amd,
        };
        let symbolic = factorize_symbolic_cholesky(pattern, Side::Lower, method, Default::default())
            .map_err(|e| match e {
                FaerError::OutOfMemory => {
                    Error::Unsupported("Cholesky factor does not fit in memory".into())
                }
                e => Error::Unsupported(format!("symbolic factorization: {e:?}")),
            })?;
        log::debug!("Cholesky factor: n={n} nnz={}", symbolic.len_val());
        let mut values = Vec::new();
        values
            .try_reserve_exact(symbolic.len_val())
            .map_err(|_| Error::Unsupported("Cholesky factor does not fit in memory".into()))?;
        values.resize(symbolic.len_val(), 0.0);
        let mut buf = MemBuffer::new(
            symbolic.factorize_numeric_llt_scratch::<f64>(Par::Seq, Default::default()),
        );
        symbolic
            .factorize_numeric_llt(
                &mut values,
                SparseColMatRef::new(pattern, &a_values),
                Side::Lower,
                Default::default(),
                Par::Seq,
                MemStack::new(&mut buf),
                Default::default(),
            )
            .map_err(|e| {
                Error::NotPositiveDefinite(format!("K − σB with σ = {sigma:e}: {e:?}"))
            })?;
        Ok(Self {
            b,
            symbolic,
            values,
        })
    }

    fn apply(&self, x: MatRef<'_, f64>) -> Mat<f64> {
        let n = x.nrows();
        let mut rhs = Mat::<f64>::zeros(n, x.ncols());
        let mut xc = vec![0.0; n];
        let mut y = vec![0.0; n];
        for c in 0..x.ncols() {
            for i in 0..n {
                xc[i] = x[(i, c)];
            }
            self.b.matvec(&xc, &mut y);
            for i in 0..n {
                rhs[(i, c)] = y[i];
            }
        }
        let mut buf = MemBuffer::new(
            self.symbolic
                .solve_in_place_scratch::<f64>(x.ncols(), Par::Seq),
        );
        LltRef::new(&self.symbolic, &self.values).solve_in_place_with_conj(
            Conj::No,
            rhs.as_mut(),
            Par::Seq,
            MemStack::new(&mut buf),
        );
        rhs
    }
}

fn is_permutation(order: &[usize], n: usize) -> bool {
    let mut seen = vec![false; n];
    order.len() == n
        && order
            .iter()
            .all(|&v| v < n && !std::mem::replace(&mut seen[v], true))
}

/// Geometric nested-dissection ordering of a symmetric sparsity pattern, with
/// `order[new] = old`. Each set is bisected at the median of its longest extent and the
/// smaller one-sided boundary becomes the separator, numbered after both halves.
/// For 3D meshes this gives far less Cholesky fill than minimum degree.
pub fn nested_dissection(a: &SparseMatrix, positions: &[Point3]) -> Result<Vec<usize>> {
    let n = a.dim();
    if positions.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} positions for {n} unknowns",
            positions.len()
        )));
    }
    let mut label = vec![0u8; n];
    let mut order = Vec::with_capacity(n);
    enum Task {
        Split(Vec<usize>),
        Emit(Vec<usize>),
    }
    // pushed in reverse so each separator is numbered after both of its halves
    let mut tasks = vec![Task::Split((0..n).collect())];
    while let Some(task) = tasks.pop() {
        let set = match task {
            Task::Emit(s) => {
                order.extend(s);
                continue;
            }
            Task::Split(s) => s,
        };
        if set.len() <= 64 {
            order.extend(set);
            continue;
        }
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &v in &set {
            for d in 0..3 {
                lo[d] = lo[d].min(positions[v][d]);
                hi[d] = hi[d].max(positions[v][d]);
            }
        }
        let axis = (0..3)
            .max_by(|&p, &q| (hi[p] - lo[p]).total_cmp(&(hi[q] - lo[q])))
            .unwrap_or(0);
        let mut c: Vec<f64> = set.iter().map(|&v| positions[v][axis]).collect();
        let mid = c.len() / 2;
        let m = *c.select_nth_unstable_by(mid, f64::total_cmp).1;
        let mut n_left = 0;
        for &v in &set {
            label[v] = if positions[v][axis] < m { 1 } else { 2 };
            n_left += usize::from(label[v] == 1);
        }
        let (mut sl, mut sr) = (Vec::new(), Vec::new());
        for &v in &set {
            let other = 3 - label[v];
            if a.row(v).0.iter().any(|&u| label[u as usize] == other) {
                if label[v] == 1 {
                    sl.push(v);
                } else {
                    sr.push(v);
                }
            }
        }
        let sep = if sr.len() <= sl.len() { sr } else { sl };
        if n_left == 0 || sep.len() * 2 > set.len() {
            for &v in &set {
                label[v] = 0;
            }
            order.extend(set);
            continue;
        }
        for &v in &sep {
            label[v] = 3;
        }
        let left: Vec<usize> = set.iter().copied().filter(|&v| label[v] == 1).collect();
        let right: Vec<usize> = set.iter().copied().filter(|&v| label[v] == 2).collect();
        for &v in &set {
            label[v] = 0;
        }
        tasks.push(Task::Emit(sep));
        tasks.push(Task::Split(right));
        tasks.push(Task::Split(left));
    }
    Ok(order)
}

/// Column-major `n × cap` storage with `len` active columns.
struct Basis {
    n: usize,
    len: usize,
    data: Vec<f64>,
}

impl Basis {
    fn new(n: usize, cap: usize) -> Self {
        Self {
            n,
            len: 0,
            data: vec![0.0; n * cap],
        }
    }

    fn view(&self) -> MatRef<'_, f64> {
        MatRef::from_column_major_slice(&self.data[..self.n * self.len], self.n, self.len)
    }

    fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.n..(j + 1) * self.n]
    }

    fn push(&mut self, x: &[f64], scale: f64) {
        let j = self.len;
        for (d, &v) in self.data[j * self.n..(j + 1) * self.n].iter_mut().zip(x) {
            *d = v * scale;
        }
        self.len += 1;
    }

    fn replace(&mut self, m: MatRef<'_, f64>) {
        self.len = m.ncols();
        let mut dst = MatMut::from_column_major_slice_mut(
            &mut self.data[..self.n * self.len],
            self.n,
            self.len,
        );
        dst.copy_from(m);
    }
}

struct BlockSolver<'a> {
    k: &'a SparseMatrix,
    b: &'a SparseMatrix,
    op: ShiftInvert<'a>,
    nev: usize,
    block: usize,
    cap: usize,
    norms: (f64, f64),
    opts: &'a EigenOptions,
    v: Basis,
    bv: Basis,
    /// `VᵀKV`, row-major `cap × cap`, upper triangle filled.
    h: Vec<f64>,
}

impl<'a> BlockSolver<'a> {
    fn new(
        k: &'a SparseMatrix,
        b: &'a SparseMatrix,
        nev: usize,
        norms: (f64, f64),
        opts: &'a EigenOptions,
    ) -> Result<Self> {
        let n = k.dim();
        let block = opts
            .block_size
            .unwrap_or_else(|| nev.div_ceil(2).clamp(4, 16))
            .max(1);
        let cap = (2 * nev + 2 * block).max(nev + 4 * block).min(n);
        let sigma = match opts.shift {
            Some(s) => s,
            None => {
                let tb = b.trace();
                if tb > 0.0 {
                    -1e-4 * k.trace() / tb
                } else {
                    -1e-4
                }
            }
        };
        log::debug!("block solver: n={n} nev={nev} block={block} cap={cap} sigma={sigma:e}");
        let op = ShiftInvert::new(k, b, sigma, opts.fill_ordering.as_deref())?;
        Ok(Self {
            k,
            b,
            op,
            nev,
            block,
            cap,
            norms,
            opts,
            v: Basis::new(n, cap),
            bv: Basis::new(n, cap),
            h: vec![0.0; cap * cap],
        })
    }

    fn n(&self) -> usize {
        self.k.dim()
    }

    /// B-orthonormalises the columns of `z` against the basis and each other, appending the
    /// survivors. Returns how many were kept.
    fn extend(&mut self, mut z: Mat<f64>) -> Result<usize> {
        let n = self.n();
        let j0 = self.v.len;
        let m = z.ncols().min(self.cap - j0);
        let mut bcol = vec![0.0; n];
        let mut orig = vec![0.0; m];
        for (c, o) in orig.iter_mut().enumerate() {
            self.b.matvec(z.col_as_slice(c), &mut bcol);
            *o = dot(z.col_as_slice(c), &bcol);
            if *o < 0.0 {
                return Err(Error::NotPositiveDefinite(
                    "mass matrix produced a negative B-norm".into(),
                ));
            }
        }
        // block classical Gram–Schmidt against the existing basis, twice
        if j0 > 0 {
            for _ in 0..2 {
                let coef = self.bv.view().transpose() * z.subcols(0, m);
                matmul(
                    z.subcols_mut(0, m),
                    Accum::Add,
                    self.v.view(),
                    &coef,
                    -1.0,
                    Par::Seq,
                );
            }
        }
        for c in 0..m {
            if !(orig[c] > 0.0) {
                continue;
            }
            let col = z.col_as_slice_mut(c);
            for _ in 0..2 {
                for i in j0..self.v.len {
                    let g = dot(self.bv.col(i), col);
                    for (x, &v) in col.iter_mut().zip(self.v.col(i)) {
                        *x -= g * v;
                    }
                }
            }
            self.b.matvec(col, &mut bcol);
            let nrm2 = dot(col, &bcol);
            if !(nrm2 > 1e-20 * orig[c]) {
                continue;
            }
            let s = 1.0 / nrm2.sqrt();
            self.v.push(col, s);
            self.bv.push(&bcol, s);
        }
        let j1 = self.v.len;
        if j1 > j0 {
            // new columns of VᵀKV
            let mut kv = Mat::<f64>::zeros(n, j1 - j0);
            for c in j0..j1 {
                self.k.matvec(self.v.col(c), kv.col_as_slice_mut(c - j0));
            }
            let hb = self.v.view().transpose() * &kv;
            for c in j0..j1 {
                for r in 0..=c {
                    self.h[r * self.cap + c] = hb[(r, c - j0)];
                }
            }
        }
        Ok(j1 - j0)
    }

    /// Ritz values and vectors (as coefficient matrix) of the current basis.
    fn rayleigh_ritz(&self) -> Result<(Vec<f64>, Mat<f64>)> {
        let j = self.v.len;
        let hm = Mat::from_fn(j, j, |r, c| {
            let (a, b) = if r <= c { (r, c) } else { (c, r) };
            self.h[a * self.cap + b]
        });
        let evd = hm.self_adjoint_eigen(Side::Lower).map_err(|_| Error::NoConvergence {
            iterations: 0,
            tol: self.opts.tol,
            achieved: vec![],
        })?;
        let theta = (0..j).map(|i| evd.S()[i]).collect();
        Ok((theta, evd.U().to_owned()))
    }

    fn start_block(&self) -> Mat<f64> {
        let mut rng = seeded(self.opts.seed);
        Mat::from_fn(self.n(), self.block, |_, _| StandardNormal.sample(&mut rng))
    }

    fn run(mut self) -> Result<Spectrum> {
        let n = self.n();
        let nev = self.nev;
        let max_exp = self.opts.max_expansions.unwrap_or(50 * nev.max(1));
        let mut x = self.start_block();
        let mut residuals = vec![f64::INFINITY; nev];
        let mut expansions = 0;
        loop {
            if expansions >= max_exp {
                return Err(Error::NoConvergence {
                    iterations: expansions,
                    tol: self.opts.tol,
                    achieved: residuals,
                });
            }
            let z = self.op.apply(x.as_ref());
            expansions += 1;
            let kept = self.extend(z)?;
            if kept == 0 && self.v.len < self.cap {
                // expansion collapsed into the basis; perturb with fresh random directions
                let mut rng = seeded(crate::rng::derive_seed(self.opts.seed, &[expansions as u64]));
                x = Mat::from_fn(n, self.block, |_, _| StandardNormal.sample(&mut rng));
                continue;
            }
            let j = self.v.len;
            let (theta, s) = self.rayleigh_ritz()?;
            let nc = j.min(nev + self.block);
            let coef = s.subcols(0, nc);
            let y = self.v.view() * coef;
            let by = self.bv.view() * coef;
            let mut unconverged = Vec::new();
            if j >= nev {
                for i in 0..nev {
                    residuals[i] = backward_error(
                        self.k,
                        y.col_as_slice(i),
                        by.col_as_slice(i),
                        theta[i],
                        self.norms,
                    );
                    if !(residuals[i] <= self.opts.tol) {
                        unconverged.push(i);
                    }
                }
                let enough_room = j >= (nev + self.block).min(n) || j == self.cap;
                if unconverged.is_empty() && enough_room {
                    log::debug!("converged after {expansions} expansions, basis {j}");
                    let eigenvectors = self.opts.want_vectors.then(|| {
                        (0..nev)
                            .map(|i| y.col_as_slice(i).to_vec())
                            .collect()
                    });
                    return Ok(Spectrum {
                        eigenvalues: theta[..nev].to_vec(),
                        eigenvectors,
                        residuals,
                        n,
                        clamped: 0,
                        expansions,
                    });
                }
            } else {
                unconverged.extend(0..j.min(nev));
            }
            // next block: unconverged Ritz vectors, topped up with the following ones
            let mut pick: Vec<usize> = unconverged.into_iter().take(self.block).collect();
            let mut extra = nev.min(nc);
            while pick.len() < self.block && extra < nc {
                pick.push(extra);
                extra += 1;
            }
            if pick.is_empty() {
                pick.extend(0..nc.min(self.block));
            }
            x = Mat::from_fn(n, pick.len(), |r, c| y[(r, pick[c])]);
            if j + self.block > self.cap {
                let keep = nc;
                self.v.replace(y.as_ref());
                self.bv.replace(by.as_ref());
                self.h.iter_mut().for_each(|v| *v = 0.0);
                for i in 0..keep {
                    self.h[i * self.cap + i] = theta[i];
                }
                if keep + self.block > self.cap {
                    // basis cannot grow: only the dense path would help
                    return Err(Error::NoConvergence {
                        iterations: expansions,
                        tol: self.opts.tol,
                        achieved: residuals,
                    });
                }
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
