//! Compressed sparse row matrices and linear solvers.
//!
//! Direct solves use a sparse LU factorization with partial pivoting; the
//! iterative path runs Jacobi-preconditioned conjugate gradients for
//! symmetric systems and BiCGSTAB otherwise. Every solve checks the achieved
//! residual against the requested tolerance before returning.

use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::error::{Error, Result};

/// Relative residual target for every solve.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;
/// Absolute residual target when the right-hand side vanishes.
pub const ZERO_RHS_TOLERANCE: f64 = 1e-12;
/// Largest admissible `m^T p` returned by [`solve_saddle`].
pub const MEAN_CONSTRAINT_TOLERANCE: f64 = 1e-8;

/// Sparse matrix in compressed row storage with sorted, unique columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Accumulates `(row, col, value)` contributions; duplicates are summed in
/// insertion order when the matrix is finalized.
#[derive(Debug, Clone, Default)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, capacity: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::with_capacity(capacity),
        }
    }

    #[inline]
    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.entries.push((row, col, value));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn build(self) -> Result<SparseMatrix> {
        SparseMatrix::from_triplets(self.nrows, self.ncols, &self.entries)
    }
}

impl SparseMatrix {
    pub fn from_triplets(nrows: usize, ncols: usize, entries: &[(usize, usize, f64)]) -> Result<Self> {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, c, v) in entries {
            if r >= nrows || c >= ncols {
                return Err(Error::InvalidArgument(format!(
                    "entry ({r}, {c}) outside a {nrows}x{ncols} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    location: format!("matrix entry ({r}, {c})"),
                    value: v,
                });
            }
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut raw = vec![(0usize, 0.0f64); entries.len()];
        for &(r, c, v) in entries {
            raw[next[r]] = (c, v);
            next[r] += 1;
        }
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        row_ptr.push(0);
        for r in 0..nrows {
            let row = &mut raw[counts[r]..counts[r + 1]];
            row.sort_by_key(|&(c, _)| c);
            for &(c, v) in row.iter() {
                if col_idx.len() > *row_ptr.last().unwrap() && *col_idx.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[range.clone()], &self.values[range])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map(|k| vals[k]).unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum()
            })
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let entries: Vec<_> = self.iter().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, &entries).expect("transpose of a valid matrix")
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        self.iter()
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let triplets: Vec<_> = self.iter().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &triplets)
            .map_err(|e| Error::InvalidArgument(format!("sparse conversion failed: {e:?}")))
    }

    /// Whether a sparse Cholesky factorization succeeds, i.e. the matrix is
    /// numerically symmetric positive definite.
    pub fn cholesky_succeeds(&self) -> bool {
        if self.nrows != self.ncols || self.asymmetry() > 1e-12 * self.max_abs().max(1.0) {
            return false;
        }
        match self.to_faer() {
            Ok(m) => m.sp_cholesky(faer::Side::Lower).is_ok(),
            Err(_) => false,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `P A P^T` for the permutation `perm[old] = new`.
    pub fn permute_symmetric(&self, perm: &[usize]) -> Self {
        let entries: Vec<_> = self
            .iter()
            .map(|(i, j, v)| (perm[i], perm[j], v))
            .collect();
        Self::from_triplets(self.nrows, self.ncols, &entries).expect("permutation of a valid matrix")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverKind {
    #[default]
    Direct,
    Iterative,
}

impl std::str::FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Self::Direct),
            "iterative" => Ok(Self::Iterative),
            other => Err(Error::InvalidArgument(format!("unknown solver `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub kind: SolverKind,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            kind: SolverKind::Direct,
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: 20_000,
        }
    }
}

/// A square system `A x = b`.
#[derive(Debug, Clone)]
pub struct LinearSystem<'a> {
    pub matrix: &'a SparseMatrix,
    pub rhs: &'a [f64],
    pub symmetric: bool,
    pub settings: SolverSettings,
}

impl<'a> LinearSystem<'a> {
    pub fn new(matrix: &'a SparseMatrix, rhs: &'a [f64]) -> Self {
        Self {
            matrix,
            rhs,
            symmetric: false,
            settings: SolverSettings::default(),
        }
    }

    pub fn symmetric(mut self, symmetric: bool) -> Self {
        self.symmetric = symmetric;
        self
    }

    pub fn with_settings(mut self, settings: SolverSettings) -> Self {
        self.settings = settings;
        self
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn residual(a: &SparseMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    a.mul_vec(x).iter().zip(b).map(|(ax, bi)| bi - ax).collect()
}

/// Residual measure used by the accuracy contract: relative when `b != 0`,
/// absolute otherwise.
pub fn residual_norm(a: &SparseMatrix, x: &[f64], b: &[f64]) -> f64 {
    let r = norm2(&residual(a, x, b));
    let nb = norm2(b);
    if nb > 0.0 {
        r / nb
    } else {
        r
    }
}

fn target(b: &[f64], tolerance: f64) -> f64 {
    if norm2(b) > 0.0 {
        tolerance
    } else {
        ZERO_RHS_TOLERANCE
    }
}

/// Solves the system, returning an error if the residual contract cannot be met.
pub fn solve(system: &LinearSystem<'_>) -> Result<Vec<f64>> {
    let a = system.matrix;
    if a.nrows() != a.ncols() {
        return Err(Error::InvalidArgument(format!(
            "matrix is {}x{}, expected square",
            a.nrows(),
            a.ncols()
        )));
    }
    if system.rhs.len() != a.nrows() {
        return Err(Error::InvalidArgument(format!(
            "right-hand side has length {}, matrix has {} rows",
            system.rhs.len(),
            a.nrows()
        )));
    }
    if let Some((i, v)) = system.rhs.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite {
            location: format!("right-hand side entry {i}"),
            value: *v,
        });
    }
    match system.settings.kind {
        SolverKind::Direct => solve_direct(a, system.rhs, system.settings.tolerance),
        SolverKind::Iterative if system.symmetric => solve_pcg(a, system.rhs, &system.settings),
        SolverKind::Iterative => solve_bicgstab(a, system.rhs, &system.settings),
    }
}

/// Sparse LU of `a` as a solve operator.
fn lu_solver(a: &SparseMatrix) -> Result<impl Fn(&[f64]) -> Vec<f64>> {
    let n = a.nrows();
    faer::set_global_parallelism(faer::Par::Seq);
    let lu = a.to_faer()?.sp_lu().map_err(|e| Error::SingularSystem {
        reason: format!("sparse LU failed: {e:?}"),
        residual: f64::NAN,
    })?;
    Ok(move |rhs: &[f64]| -> Vec<f64> {
        let mut x = Mat::<f64>::from_fn(n, 1, |i, _| rhs[i]);
        lu.solve_in_place(x.as_mut());
        (0..n).map(|i| x[(i, 0)]).collect()
    })
}

/// Relative residual below which refinement stops; close to round-off.
const REFINE_FLOOR: f64 = 1e-15;

/// Applies `apply` (an approximate inverse of `a`) with a few rounds of
/// iterative refinement against `a` itself. Refinement continues past
/// `tolerance` while it still gains at least a factor of two, so that
/// conservation identities hold to round-off rather than to the tolerance.
fn refine(a: &SparseMatrix, b: &[f64], tolerance: f64, apply: impl Fn(&[f64]) -> Vec<f64>) -> Result<Vec<f64>> {
    let mut x = apply(b);
    let goal = target(b, tolerance);
    let mut achieved = residual_norm(a, &x, b);
    for _ in 0..3 {
        if achieved <= goal.min(REFINE_FLOOR) || !achieved.is_finite() {
            break;
        }
        let r = residual(a, &x, b);
        let dx = apply(&r);
        let candidate: Vec<f64> = x.iter().zip(&dx).map(|(xi, di)| xi + di).collect();
        let next = residual_norm(a, &candidate, b);
        if next < achieved {
            x = candidate;
        }
        if !(next < 0.5 * achieved) {
            achieved = achieved.min(next);
            break;
        }
        achieved = next;
    }
    if achieved <= goal && x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(Error::SingularSystem {
            reason: "direct factorization did not reach the residual target".into(),
            residual: achieved,
        })
    }
}

fn solve_direct(a: &SparseMatrix, b: &[f64], tolerance: f64) -> Result<Vec<f64>> {
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    refine(a, b, tolerance, lu_solver(a)?)
}

fn jacobi(a: &SparseMatrix) -> Vec<f64> {
    a.diagonal()
        .into_iter()
        .map(|d| if d.abs() > 0.0 { 1.0 / d } else { 1.0 })
        .collect()
}

fn solve_pcg(a: &SparseMatrix, b: &[f64], settings: &SolverSettings) -> Result<Vec<f64>> {
    let n = a.nrows();
    let inv_diag = jacobi(a);
    let goal = target(b, settings.tolerance);
    let scale = if norm2(b) > 0.0 { norm2(b) } else { 1.0 };
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, d)| ri * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for _ in 0..settings.max_iterations {
        if norm2(&r) / scale <= goal {
            break;
        }
        let ap = a.mul_vec(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    finish_iterative(a, x, b, goal, "conjugate gradients")
}

fn solve_bicgstab(a: &SparseMatrix, b: &[f64], settings: &SolverSettings) -> Result<Vec<f64>> {
    let n = a.nrows();
    let inv_diag = jacobi(a);
    let goal = target(b, settings.tolerance);
    let scale = if norm2(b) > 0.0 { norm2(b) } else { 1.0 };
    let precond = |v: &[f64]| -> Vec<f64> { v.iter().zip(&inv_diag).map(|(a, d)| a * d).collect() };
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    for _ in 0..settings.max_iterations {
        if norm2(&r) / scale <= goal {
            break;
        }
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 || !rho_new.is_finite() {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        let y = precond(&p);
        v = a.mul_vec(&y);
        let denom = dot(&r_hat, &v);
        if denom == 0.0 {
            break;
        }
        alpha = rho / denom;
        let s: Vec<f64> = r.iter().zip(&v).map(|(ri, vi)| ri - alpha * vi).collect();
        let z = precond(&s);
        let t = a.mul_vec(&z);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        for i in 0..n {
            x[i] += alpha * y[i] + omega * z[i];
            r[i] = s[i] - omega * t[i];
        }
        if omega == 0.0 {
            break;
        }
    }
    finish_iterative(a, x, b, goal, "BiCGSTAB")
}

fn finish_iterative(a: &SparseMatrix, x: Vec<f64>, b: &[f64], goal: f64, name: &str) -> Result<Vec<f64>> {
    let achieved = residual_norm(a, &x, b);
    if achieved <= goal {
        Ok(x)
    } else {
        Err(Error::SingularSystem {
            reason: format!("{name} stalled above the residual target"),
            residual: achieved,
        })
    }
}

/// Solution of a constrained saddle-point system.
#[derive(Debug, Clone, PartialEq)]
pub struct SaddleSolution {
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    /// Lagrange multiplier of the mean constraint; zero for compatible data.
    pub multiplier: f64,
}

/// Assembles `[[M, B^T, 0], [B, 0, m], [0, m^T, 0]]`.
pub fn saddle_matrix(m_block: &SparseMatrix, b_block: &SparseMatrix, mean: &[f64]) -> Result<SparseMatrix> {
    let nu = m_block.nrows();
    let np = b_block.nrows();
    if m_block.ncols() != nu || b_block.ncols() != nu || mean.len() != np {
        return Err(Error::InvalidArgument(format!(
            "inconsistent saddle blocks: M {}x{}, B {}x{}, mean {}",
            m_block.nrows(),
            m_block.ncols(),
            b_block.nrows(),
            b_block.ncols(),
            mean.len()
        )));
    }
    let n = nu + np + 1;
    let mut entries = Vec::with_capacity(m_block.nnz() + 2 * b_block.nnz() + 2 * np);
    entries.extend(m_block.iter());
    for (i, j, v) in b_block.iter() {
        entries.push((nu + i, j, v));
        entries.push((j, nu + i, v));
    }
    for (i, &w) in mean.iter().enumerate() {
        if w != 0.0 {
            entries.push((nu + i, n - 1, w));
            entries.push((n - 1, nu + i, w));
        }
    }
    SparseMatrix::from_triplets(n, n, &entries)
}

/// Exact solver for the full bordered saddle matrix.
///
/// A dense constraint row couples every pressure column and makes the sparse
/// LU fill in badly. The matrix is therefore factorized with only one entry
/// of `mean` kept (which still fixes the constant mode), and the remaining
/// symmetric rank-2 border is added back with the Woodbury identity.
fn bordered_solver(
    m_block: &SparseMatrix,
    b_block: &SparseMatrix,
    mean: &[f64],
) -> Result<impl Fn(&[f64]) -> Vec<f64>> {
    let nu = m_block.nrows();
    let pin = mean.iter().position(|&w| w != 0.0).ok_or_else(|| {
        Error::InvalidArgument("mean constraint vector is zero".into())
    })?;
    let mut kept = vec![0.0; mean.len()];
    kept[pin] = mean[pin];
    let apply = lu_solver(&saddle_matrix(m_block, b_block, &kept)?)?;
    let n = nu + mean.len() + 1;
    let mut d = vec![0.0; n];
    for (i, &w) in mean.iter().enumerate() {
        if i != pin {
            d[nu + i] = w;
        }
    }
    let mut e = vec![0.0; n];
    e[n - 1] = 1.0;
    // full = kept + d e^T + e d^T
    let z_d = apply(&d);
    let z_e = apply(&e);
    let s = [[1.0 + z_d[n - 1], z_e[n - 1]], [dot(&d, &z_d), 1.0 + dot(&d, &z_e)]];
    let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
    let scale = s.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    if !det.is_finite() || det.abs() <= 1e-14 * scale * scale {
        return Err(Error::SingularSystem {
            reason: "saddle border capacitance matrix is singular".into(),
            residual: f64::NAN,
        });
    }
    Ok(move |rhs: &[f64]| -> Vec<f64> {
        let y = apply(rhs);
        let (g0, g1) = (y[n - 1], dot(&d, &y));
        let c0 = (s[1][1] * g0 - s[0][1] * g1) / det;
        let c1 = (s[0][0] * g1 - s[1][0] * g0) / det;
        y.iter().zip(z_d.iter().zip(&z_e)).map(|(yi, (a, b))| yi - c0 * a - c1 * b).collect()
    })
}

/// Solves the mixed system with the pressure normalized by `mean^T p = 0`.
///
/// The system is factorized monolithically; the iterative setting is ignored
/// because the block matrix is indefinite.
pub fn solve_saddle(
    m_block: &SparseMatrix,
    b_block: &SparseMatrix,
    rhs_u: &[f64],
    rhs_p: &[f64],
    mean: &[f64],
    settings: &SolverSettings,
) -> Result<SaddleSolution> {
    let nu = m_block.nrows();
    let np = b_block.nrows();
    if rhs_u.len() != nu || rhs_p.len() != np {
        return Err(Error::InvalidArgument("saddle right-hand side has the wrong length".into()));
    }
    let a = saddle_matrix(m_block, b_block, mean)?;
    let mut rhs = Vec::with_capacity(nu + np + 1);
    rhs.extend_from_slice(rhs_u);
    rhs.extend_from_slice(rhs_p);
    rhs.push(0.0);
    let x = refine(&a, &rhs, settings.tolerance, bordered_solver(m_block, b_block, mean)?)?;
    let u = x[..nu].to_vec();
    let p = x[nu..nu + np].to_vec();
    let multiplier = x[nu + np];
    let weighted_mean = dot(mean, &p);
    if weighted_mean.abs() > MEAN_CONSTRAINT_TOLERANCE {
        return Err(Error::ConstraintViolation { mean: weighted_mean });
    }
    Ok(SaddleSolution { u, p, multiplier })
}

/// Inverse of a small dense matrix given by rows.
pub fn invert_dense(rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = rows.len();
    let a = Mat::<f64>::from_fn(n, n, |i, j| rows[i][j]);
    let inv = a.partial_piv_lu().inverse();
    let out: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| inv[(i, j)]).collect()).collect();
    if out.iter().flatten().all(|v| v.is_finite()) {
        Ok(out)
    } else {
        Err(Error::SingularSystem {
            reason: "singular dense matrix".into(),
            residual: f64::NAN,
        })
    }
}
