use super::sparse::{dot, norm2, CsrMatrix};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreconditionerKind {
    Jacobi,
    /// Smoothed-aggregation algebraic multigrid V-cycle.
    Amg,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Defaults to `10000 + 50 sqrt(n)` for Jacobi and 1000 for multigrid.
    pub max_iter: Option<usize>,
    pub preconditioner: PreconditionerKind,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { abs_tol: 1e-12, rel_tol: 1e-12, max_iter: None, preconditioner: PreconditionerKind::Amg }
    }
}

impl SolverOptions {
    pub fn jacobi() -> Self {
        SolverOptions { preconditioner: PreconditionerKind::Jacobi, ..Self::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    /// `|b - A x| / |b|`, recomputed after the final iterate.
    pub relative_residual: f64,
    pub unknowns: usize,
}

pub trait Preconditioner {
    /// `z ≈ A^{-1} r`.
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

pub struct Jacobi {
    inv_diag: Vec<f64>,
}

impl Jacobi {
    pub fn new(a: &CsrMatrix) -> Self {
        Jacobi { inv_diag: a.diagonal().iter().map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 }).collect() }
    }
}

impl Preconditioner for Jacobi {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        for ((z, r), d) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *z = r * d;
        }
    }
}

struct Level {
    a: CsrMatrix,
    p: CsrMatrix,
    r: CsrMatrix,
}

/// Dense Cholesky factor for the coarsest level.
struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    fn new(a: &CsrMatrix) -> Option<Self> {
        let n = a.n_rows;
        let dense = a.to_dense();
        let mut l = vec![0.0; n * n];
        let scale = (0..n).map(|i| dense[i][i].abs()).fold(0.0, f64::max);
        for j in 0..n {
            let mut d = dense[j][j];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if d <= 1e-14 * scale {
                return None;
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            for i in j + 1..n {
                let mut s = dense[i][j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / d;
            }
        }
        Some(Cholesky { n, l })
    }

    fn solve(&self, b: &[f64], x: &mut [f64]) {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] -= self.l[i * n + k] * y[k];
            }
            y[i] /= self.l[i * n + i];
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                y[i] -= self.l[k * n + i] * y[k];
            }
            y[i] /= self.l[i * n + i];
        }
        x.copy_from_slice(&y);
    }
}

/// Smoothed-aggregation AMG with symmetric Gauss–Seidel smoothing, usable as
/// a symmetric positive definite preconditioner for SPD matrices.
pub struct Amg {
    levels: Vec<Level>,
    coarse_a: CsrMatrix,
    coarse: Cholesky,
}

const COARSE_SIZE: usize = 400;
const STRENGTH: f64 = 0.08;

fn aggregate(a: &CsrMatrix) -> (Vec<u32>, usize) {
    let n = a.n_rows;
    let diag = a.diagonal();
    let strong = |i: usize, k: usize| {
        let j = a.col_idx[k] as usize;
        j != i && a.values[k].abs() >= STRENGTH * (diag[i] * diag[j]).abs().sqrt()
    };
    const NONE: u32 = u32::MAX;
    let mut agg = vec![NONE; n];
    let mut count = 0u32;
    for i in 0..n {
        if agg[i] != NONE {
            continue;
        }
        let row = a.row_ptr[i]..a.row_ptr[i + 1];
        if row.clone().filter(|&k| strong(i, k)).all(|k| agg[a.col_idx[k] as usize] == NONE) {
            agg[i] = count;
            for k in row.filter(|&k| strong(i, k)) {
                agg[a.col_idx[k] as usize] = count;
            }
            count += 1;
        }
    }
    let phase1 = agg.clone();
    for i in 0..n {
        if agg[i] != NONE {
            continue;
        }
        let mut best: Option<(f64, u32)> = None;
        for k in a.row_ptr[i]..a.row_ptr[i + 1] {
            let j = a.col_idx[k] as usize;
            if strong(i, k) && phase1[j] != NONE && best.is_none_or(|b| a.values[k].abs() > b.0) {
                best = Some((a.values[k].abs(), phase1[j]));
            }
        }
        if let Some((_, g)) = best {
            agg[i] = g;
        }
    }
    for i in 0..n {
        if agg[i] != NONE {
            continue;
        }
        agg[i] = count;
        for k in a.row_ptr[i]..a.row_ptr[i + 1] {
            let j = a.col_idx[k] as usize;
            if strong(i, k) && agg[j] == NONE {
                agg[j] = count;
            }
        }
        count += 1;
    }
    (agg, count as usize)
}

/// Largest eigenvalue of `D^{-1} A` by power iteration from a fixed start vector.
fn spectral_radius(a: &CsrMatrix, inv_diag: &[f64]) -> f64 {
    let n = a.n_rows;
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 101) as f64 / 101.0).collect();
    let mut w = vec![0.0; n];
    let mut rho = 1.0;
    for _ in 0..15 {
        let nv = norm2(&v);
        v.iter_mut().for_each(|x| *x /= nv);
        a.spmv(&v, &mut w);
        w.iter_mut().zip(inv_diag).for_each(|(x, d)| *x *= d);
        rho = norm2(&w);
        std::mem::swap(&mut v, &mut w);
    }
    rho
}

impl Amg {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let mut levels = Vec::new();
        let mut current = a.clone();
        while current.n_rows > COARSE_SIZE && levels.len() < 30 {
            let (agg, n_agg) = aggregate(&current);
            if n_agg == 0 || n_agg * 10 > current.n_rows * 9 {
                break;
            }
            let p0 = CsrMatrix {
                n_rows: current.n_rows,
                n_cols: n_agg,
                row_ptr: (0..=current.n_rows).collect(),
                col_idx: agg,
                values: vec![1.0; current.n_rows],
            };
            let inv_diag: Vec<f64> = current.diagonal().iter().map(|&d| 1.0 / d).collect();
            let omega = 4.0 / (3.0 * spectral_radius(&current, &inv_diag));
            let mut p = current.matmul(&p0);
            for i in 0..p.n_rows {
                let own = p0.col_idx[i];
                for k in p.row_ptr[i]..p.row_ptr[i + 1] {
                    p.values[k] *= -omega * inv_diag[i];
                    if p.col_idx[k] == own {
                        p.values[k] += 1.0;
                    }
                }
            }
            let r = p.transpose();
            let coarse = r.matmul(&current.matmul(&p));
            levels.push(Level { a: std::mem::replace(&mut current, coarse), p, r });
        }
        let coarse = Cholesky::new(&current).ok_or_else(|| Error::NonConvergence {
            iterations: 0,
            residual: f64::NAN,
            diagnostic: "coarse multigrid operator is not positive definite".into(),
        })?;
        Ok(Amg { levels, coarse_a: current, coarse })
    }

    pub fn depth(&self) -> usize {
        self.levels.len() + 1
    }

    fn cycle(&self, level: usize, b: &[f64], x: &mut [f64]) {
        if level == self.levels.len() {
            debug_assert_eq!(b.len(), self.coarse_a.n_rows);
            self.coarse.solve(b, x);
            return;
        }
        let lv = &self.levels[level];
        let a = &lv.a;
        x.fill(0.0);
        gauss_seidel(a, b, x, true);
        let mut res = vec![0.0; a.n_rows];
        a.spmv(x, &mut res);
        res.iter_mut().zip(b).for_each(|(r, b)| *r = b - *r);
        let mut bc = vec![0.0; lv.r.n_rows];
        lv.r.spmv(&res, &mut bc);
        let mut xc = vec![0.0; lv.r.n_rows];
        self.cycle(level + 1, &bc, &mut xc);
        lv.p.spmv(&xc, &mut res);
        x.iter_mut().zip(&res).for_each(|(x, c)| *x += c);
        gauss_seidel(a, b, x, false);
    }
}

fn gauss_seidel(a: &CsrMatrix, b: &[f64], x: &mut [f64], forward: bool) {
    let sweep = |i: usize, x: &mut [f64]| {
        let mut s = b[i];
        let mut d = 1.0;
        for k in a.row_ptr[i]..a.row_ptr[i + 1] {
            let j = a.col_idx[k] as usize;
            if j == i {
                d = a.values[k];
            } else {
                s -= a.values[k] * x[j];
            }
        }
        x[i] = s / d;
    };
    if forward {
        (0..a.n_rows).for_each(|i| sweep(i, x));
    } else {
        (0..a.n_rows).rev().for_each(|i| sweep(i, x));
    }
}

impl Preconditioner for Amg {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        self.cycle(0, r, z);
    }
}

/// Preconditioned conjugate gradients on an SPD (or consistent semidefinite) system.
///
/// With `mean_weights`, the iterate is kept orthogonal to constants in the
/// weighted inner product and residuals are kept sum-free, which solves the
/// singular periodic problem in the mean-zero class.
pub fn pcg(
    a: &CsrMatrix,
    b: &[f64],
    x: &mut [f64],
    precond: &dyn Preconditioner,
    opts: &SolverOptions,
    mean_weights: Option<&[f64]>,
) -> Result<SolveStats> {
    let n = a.n_rows;
    let max_iter = opts.max_iter.unwrap_or(match opts.preconditioner {
        PreconditionerKind::Jacobi => 10_000 + 50 * (n as f64).sqrt() as usize,
        PreconditionerKind::Amg => 1000,
    });
    let project = |x: &mut [f64]| {
        if let Some(w) = mean_weights {
            let mean = dot(w, x) / w.iter().sum::<f64>();
            x.iter_mut().for_each(|v| *v -= mean);
        }
    };
    let sum_free = |r: &mut [f64]| {
        if mean_weights.is_some() {
            let mean = r.iter().sum::<f64>() / r.len() as f64;
            r.iter_mut().for_each(|v| *v -= mean);
        }
    };
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        x.fill(0.0);
        return Ok(SolveStats { iterations: 0, relative_residual: 0.0, unknowns: n });
    }
    let mut r = vec![0.0; n];
    a.spmv(x, &mut r);
    r.iter_mut().zip(b).for_each(|(r, b)| *r = b - *r);
    sum_free(&mut r);
    let mut z = vec![0.0; n];
    precond.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let tol = opts.abs_tol.max(opts.rel_tol * bnorm);
    let mut iterations = 0;
    let mut converged = norm2(&r) <= tol;
    while !converged && iterations < max_iter {
        iterations += 1;
        a.spmv(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rz / pap;
        x.iter_mut().zip(&p).for_each(|(x, p)| *x += alpha * p);
        r.iter_mut().zip(&ap).for_each(|(r, q)| *r -= alpha * q);
        sum_free(&mut r);
        if norm2(&r) <= tol {
            converged = true;
            break;
        }
        precond.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.iter_mut().zip(&z).for_each(|(p, z)| *p = z + beta * *p);
    }
    project(x);
    a.spmv(x, &mut r);
    r.iter_mut().zip(b).for_each(|(r, b)| *r = b - *r);
    sum_free(&mut r);
    let relative_residual = norm2(&r) / bnorm;
    if !converged && relative_residual > 1e-10 {
        return Err(Error::NonConvergence {
            iterations,
            residual: relative_residual,
            diagnostic: format!("{n} unknowns, {:?} preconditioner", opts.preconditioner),
        });
    }
    Ok(SolveStats { iterations, relative_residual, unknowns: n })
}

/// Solves `A x = b` with the preconditioner chosen in `opts`.
pub fn solve(a: &CsrMatrix, b: &[f64], opts: &SolverOptions, mean_weights: Option<&[f64]>) -> Result<(Vec<f64>, SolveStats)> {
    let mut x = vec![0.0; a.n_rows];
    let stats = match opts.preconditioner {
        PreconditionerKind::Jacobi => pcg(a, b, &mut x, &Jacobi::new(a), opts, mean_weights)?,
        PreconditionerKind::Amg => {
            let amg = Amg::new(a)?;
            pcg(a, b, &mut x, &amg, opts, mean_weights)?
        }
    };
    Ok((x, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &t)
    }

    #[test]
    fn amg_and_jacobi_agree_on_1d_laplacian() {
        let a = laplace_1d(3000);
        let b: Vec<f64> = (0..3000).map(|i| ((i as f64) * 0.01).sin()).collect();
        let (x1, s1) = solve(&a, &b, &SolverOptions::default(), None).unwrap();
        let (x2, _) = solve(&a, &b, &SolverOptions::jacobi(), None).unwrap();
        assert!(s1.relative_residual <= 1e-10);
        let diff = x1.iter().zip(&x2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let scale = x1.iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(diff <= 1e-6 * scale, "{diff} vs {scale}");
    }
}
