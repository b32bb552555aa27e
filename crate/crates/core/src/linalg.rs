//! Linear algebra kernels: tridiagonal solves, sparse symmetric matrices, envelope
//! Cholesky factorisation with reverse Cuthill-McKee ordering, preconditioned CG.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Solves a tridiagonal system in place (Thomas algorithm). `lower[0]` and
/// `upper[n-1]` are ignored. On return `rhs` holds the solution.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) -> Result<()> {
    let n = diag.len();
    if lower.len() != n || upper.len() != n || rhs.len() != n {
        return Err(Error::LinearSolver("tridiagonal dimension mismatch".into()));
    }
    let mut c = vec![0.0; n];
    let mut beta = diag[0];
    if beta == 0.0 || !beta.is_finite() {
        return Err(Error::LinearSolver("zero pivot in tridiagonal solve".into()));
    }
    rhs[0] /= beta;
    for i in 1..n {
        c[i - 1] = upper[i - 1] / beta;
        beta = diag[i] - lower[i] * c[i - 1];
        if beta == 0.0 || !beta.is_finite() {
            return Err(Error::LinearSolver("zero pivot in tridiagonal solve".into()));
        }
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
    Ok(())
}

/// Compressed sparse row matrix with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(n: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col = Vec::with_capacity(t.len());
        let mut val: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in t {
            if last == Some((r, c)) {
                *val.last_mut().unwrap() += v;
            } else {
                col.push(c);
                val.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n,
            row_ptr,
            col,
            val,
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.val[k] * x[self.col[k]];
            }
            y[i] = s;
        }
    }

    /// Position of the diagonal entry of each row in `val`.
    pub fn diag_positions(&self) -> Vec<usize> {
        (0..self.n)
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1])
                    .find(|&k| self.col[k] == i)
                    .expect("structurally nonzero diagonal")
            })
            .collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.diag_positions().into_iter().map(|k| self.val[k]).collect()
    }

    /// Returns the matrix with row and column `g` replaced by the identity row.
    pub fn grounded(&self, g: usize) -> CsrMatrix {
        let mut m = self.clone();
        for i in 0..m.n {
            for k in m.row_ptr[i]..m.row_ptr[i + 1] {
                let c = m.col[k];
                if i == g || c == g {
                    m.val[k] = if i == c { 1.0 } else { 0.0 };
                }
            }
        }
        m
    }
}

/// Application of an approximate inverse.
pub trait Preconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

/// Diagonal (Jacobi) preconditioner.
#[derive(Debug, Clone)]
pub struct Jacobi {
    inv_diag: Vec<f64>,
}

impl Jacobi {
    pub fn new(a: &CsrMatrix) -> Self {
        Self {
            inv_diag: a
                .diagonal()
                .into_iter()
                .map(|d| if d != 0.0 { 1.0 / d } else { 1.0 })
                .collect(),
        }
    }
}

impl Preconditioner for Jacobi {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        for ((zi, ri), di) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *zi = ri * di;
        }
    }
}

/// Envelope Cholesky when the envelope fits into a memory budget, Jacobi otherwise.
#[derive(Debug, Clone)]
pub enum AutoPreconditioner {
    Cholesky(EnvelopeCholesky),
    Jacobi(Jacobi),
}

impl AutoPreconditioner {
    pub fn new(a: &CsrMatrix, max_envelope: usize) -> Result<Self> {
        Ok(match EnvelopeCholesky::factor_within(a, max_envelope)? {
            Some(c) => Self::Cholesky(c),
            None => Self::Jacobi(Jacobi::new(a)),
        })
    }

    pub fn is_cholesky(&self) -> bool {
        matches!(self, Self::Cholesky(_))
    }
}

impl Preconditioner for AutoPreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        match self {
            Self::Cholesky(c) => c.apply(r, z),
            Self::Jacobi(j) => j.apply(r, z),
        }
    }
}

/// Reverse Cuthill-McKee permutation (`perm[new] = old`) of the matrix graph.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.n;
    let degree: Vec<usize> = (0..n).map(|i| a.row_ptr[i + 1] - a.row_ptr[i]).collect();
    let neighbors = |i: usize| {
        a.col[a.row_ptr[i]..a.row_ptr[i + 1]]
            .iter()
            .copied()
            .filter(move |&c| c != i)
    };
    let mut order = Vec::with_capacity(n);
    let mut visited = vec![false; n];
    let bfs_levels = |start: usize, level: &mut Vec<usize>| -> (usize, usize) {
        // returns (eccentricity, a minimum-degree node in the last level)
        level.iter_mut().for_each(|l| *l = usize::MAX);
        let mut q = VecDeque::new();
        level[start] = 0;
        q.push_back(start);
        let mut last = start;
        let mut ecc = 0;
        while let Some(v) = q.pop_front() {
            for w in neighbors(v) {
                if level[w] == usize::MAX {
                    level[w] = level[v] + 1;
                    if level[w] > ecc || (level[w] == ecc && degree[w] < degree[last]) {
                        ecc = level[w];
                        last = w;
                    }
                    q.push_back(w);
                }
            }
        }
        (ecc, last)
    };
    let mut level = vec![usize::MAX; n];
    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        // pseudo-peripheral start node
        let mut start = seed;
        let (mut ecc, mut cand) = bfs_levels(start, &mut level);
        for _ in 0..8 {
            let (e2, c2) = bfs_levels(cand, &mut level);
            if e2 > ecc {
                start = cand;
                ecc = e2;
                cand = c2;
            } else {
                break;
            }
        }
        let mut q = VecDeque::new();
        visited[start] = true;
        q.push_back(start);
        while let Some(v) = q.pop_front() {
            order.push(v);
            let mut nb: Vec<usize> = neighbors(v).filter(|&w| !visited[w]).collect();
            nb.sort_by_key(|&w| (degree[w], w));
            for w in nb {
                visited[w] = true;
                q.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// Cholesky factor `L` of `P A P^T` stored row-wise over the envelope.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    perm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    data: Vec<f64>,
}

impl EnvelopeCholesky {
    /// Factors a symmetric positive definite matrix.
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        Self::factor_within(a, usize::MAX).map(|f| f.expect("unlimited envelope"))
    }

    /// Like [`Self::factor`], but returns `None` when the envelope would hold more
    /// than `max_entries` values.
    pub fn factor_within(a: &CsrMatrix, max_entries: usize) -> Result<Option<Self>> {
        let n = a.n;
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first = vec![0usize; n];
        for new in 0..n {
            let old = perm[new];
            let mut f = new;
            for k in a.row_ptr[old]..a.row_ptr[old + 1] {
                f = f.min(inv[a.col[k]]);
            }
            first[new] = f;
        }
        let mut start = vec![0usize; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i - first[i] + 1);
        }
        if start[n] > max_entries {
            return Ok(None);
        }
        let mut data = vec![0.0; start[n]];
        for new in 0..n {
            let old = perm[new];
            for k in a.row_ptr[old]..a.row_ptr[old + 1] {
                let c = inv[a.col[k]];
                if c <= new {
                    data[start[new] + c - first[new]] += a.val[k];
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            let si = start[i];
            for j in fi..i {
                let fj = first[j];
                let sj = start[j];
                let lo = fi.max(fj);
                let mut s = data[si + j - fi];
                let ri = &data[si + lo - fi..si + j - fi];
                let rj = &data[sj + lo - fj..sj + j - fj];
                s -= dot(ri, rj);
                data[si + j - fi] = s / data[sj + j - fj];
            }
            let row = &data[si..si + i - fi];
            let d = data[si + i - fi] - dot(row, row);
            if !(d > 0.0) {
                return Err(Error::LinearSolver(format!(
                    "matrix not positive definite (pivot {d:e} at row {i})"
                )));
            }
            data[si + i - fi] = d.sqrt();
        }
        Ok(Some(Self {
            perm,
            first,
            start,
            data,
        }))
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64], x: &mut [f64]) {
        let n = self.perm.len();
        let mut y: Vec<f64> = self.perm.iter().map(|&o| b[o]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let si = self.start[i];
            let s = dot(&self.data[si..si + i - fi], &y[fi..i]);
            y[i] = (y[i] - s) / self.data[si + i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let si = self.start[i];
            y[i] /= self.data[si + i - fi];
            let xi = y[i];
            for (yj, lij) in y[fi..i].iter_mut().zip(&self.data[si..si + i - fi]) {
                *yj -= lij * xi;
            }
        }
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
    }
}

impl Preconditioner for EnvelopeCholesky {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        self.solve(r, z)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    // four partial sums in a fixed order: deterministic and vectorisable
    let mut s = [0.0f64; 4];
    let chunks = a.len() / 4;
    for k in 0..chunks {
        for l in 0..4 {
            s[l] += a[4 * k + l] * b[4 * k + l];
        }
    }
    let mut tail = 0.0;
    for k in 4 * chunks..a.len() {
        tail += a[k] * b[k];
    }
    (s[0] + s[1]) + (s[2] + s[3]) + tail
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Preconditioned conjugate gradients for a symmetric positive (semi)definite matrix.
/// Stops when `||b - A x|| <= rel_tol ||b||`. `x` holds the initial guess on entry.
pub fn pcg(
    a: &CsrMatrix,
    b: &[f64],
    x: &mut [f64],
    pc: &dyn Preconditioner,
    rel_tol: f64,
    max_iter: usize,
) -> Result<CgOutcome> {
    let n = a.n;
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgOutcome {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let mut r = vec![0.0; n];
    a.matvec(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut rel = norm2(&r) / bnorm;
    if rel <= rel_tol {
        return Ok(CgOutcome {
            iterations: 0,
            relative_residual: rel,
        });
    }
    let mut z = vec![0.0; n];
    pc.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    for it in 1..=max_iter {
        a.matvec(&p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            return Err(Error::LinearSolver(format!(
                "CG breakdown (p.Ap = {pq:e}) at iteration {it}"
            )));
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        rel = norm2(&r) / bnorm;
        if rel <= rel_tol {
            // confirm with the true residual to guard against drift
            a.matvec(x, &mut q);
            let true_rel = b
                .iter()
                .zip(&q)
                .map(|(bi, qi)| (bi - qi) * (bi - qi))
                .sum::<f64>()
                .sqrt()
                / bnorm;
            if true_rel <= rel_tol * 10.0 {
                return Ok(CgOutcome {
                    iterations: it,
                    relative_residual: true_rel,
                });
            }
            for i in 0..n {
                r[i] = b[i] - q[i];
            }
        }
        pc.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::LinearSolver(format!(
        "CG did not reach relative residual {rel_tol:e} in {max_iter} iterations (at {rel:e})"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_2d(m: usize, shift: f64) -> CsrMatrix {
        let id = |i: usize, j: usize| i * m + j;
        let mut t = Vec::new();
        for i in 0..m {
            for j in 0..m {
                t.push((id(i, j), id(i, j), 4.0 + shift));
                if i > 0 {
                    t.push((id(i, j), id(i - 1, j), -1.0));
                }
                if i + 1 < m {
                    t.push((id(i, j), id(i + 1, j), -1.0));
                }
                if j > 0 {
                    t.push((id(i, j), id(i, j - 1), -1.0));
                }
                if j + 1 < m {
                    t.push((id(i, j), id(i, j + 1), -1.0));
                }
            }
        }
        CsrMatrix::from_triplets(m * m, t)
    }

    #[test]
    fn tridiagonal_matches_dense() {
        let n = 6;
        let lower = vec![0.0, -1.0, -0.5, -1.0, -2.0, -1.0];
        let diag = vec![4.0, 3.0, 5.0, 4.0, 6.0, 3.0];
        let upper = vec![-1.0, -2.0, -1.0, -0.5, -1.0, 0.0];
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 1.0).collect();
        let mut b = vec![0.0; n];
        for i in 0..n {
            b[i] = diag[i] * x[i];
            if i > 0 {
                b[i] += lower[i] * x[i - 1];
            }
            if i + 1 < n {
                b[i] += upper[i] * x[i + 1];
            }
        }
        solve_tridiagonal(&lower, &diag, &upper, &mut b).unwrap();
        for i in 0..n {
            assert!((b[i] - x[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn cholesky_solves_laplacian() {
        let a = laplace_2d(12, 0.01);
        let f = EnvelopeCholesky::factor(&a).unwrap();
        let x: Vec<f64> = (0..a.n).map(|i| ((i * 7) % 13) as f64 - 6.0).collect();
        let mut b = vec![0.0; a.n];
        a.matvec(&x, &mut b);
        let mut y = vec![0.0; a.n];
        f.solve(&b, &mut y);
        for i in 0..a.n {
            assert!((y[i] - x[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn rcm_is_a_permutation() {
        let a = laplace_2d(7, 0.0);
        let mut p = reverse_cuthill_mckee(&a);
        p.sort();
        assert_eq!(p, (0..49).collect::<Vec<_>>());
    }

    #[test]
    fn pcg_with_jacobi_and_cholesky() {
        let a = laplace_2d(20, 0.1);
        let b: Vec<f64> = (0..a.n).map(|i| (i as f64 * 0.37).cos()).collect();
        let mut x1 = vec![0.0; a.n];
        let o1 = pcg(&a, &b, &mut x1, &Jacobi::new(&a), 1e-12, 2000).unwrap();
        let f = EnvelopeCholesky::factor(&a).unwrap();
        let mut x2 = vec![0.0; a.n];
        let o2 = pcg(&a, &b, &mut x2, &f, 1e-12, 50).unwrap();
        assert!(o2.iterations <= 2 && o1.iterations > o2.iterations);
        for i in 0..a.n {
            assert!((x1[i] - x2[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn grounded_neumann_system_is_solvable() {
        // pure Neumann 2D Laplacian is singular; grounding node 0 makes it SPD
        let a = laplace_2d(6, 0.0);
        let mut t = Vec::new();
        for i in 0..a.n {
            let mut off = 0.0;
            for k in a.row_ptr[i]..a.row_ptr[i + 1] {
                if a.col[k] != i {
                    t.push((i, a.col[k], -1.0));
                    off += 1.0;
                }
            }
            t.push((i, i, off));
        }
        let k = CsrMatrix::from_triplets(a.n, t);
        let g = k.grounded(0);
        assert!(EnvelopeCholesky::factor(&g).is_ok());
    }
}
