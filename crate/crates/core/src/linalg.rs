//! Sparse storage and the direct solvers used by the eigen and evolution
//! routines: Thomas for tridiagonal systems, Sherman–Morrison on top of it
//! for periodic (cyclic) tridiagonal systems, and dense LU for the small 2D
//! tori.

use crate::error::{Error, Result};

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from per-row `(column, value)` lists; duplicate columns are
    /// summed and entries sorted by column.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                assert!(c < n, "column {c} out of range");
                if last == Some(c) {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(cols.len());
        }
        CsrMatrix { n, row_ptr, cols, vals }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|e| e.0 == j).map_or(0.0, |e| e.1)
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    /// `alpha·self + beta·I`.
    pub fn scaled_plus_identity(&self, alpha: f64, beta: f64) -> CsrMatrix {
        let rows = (0..self.n)
            .map(|i| {
                let mut r: Vec<(usize, f64)> = self.row(i).map(|(j, v)| (j, alpha * v)).collect();
                r.push((i, beta));
                r
            })
            .collect();
        CsrMatrix::from_rows(rows)
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|e| e.1).sum()).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] += v;
            }
        }
        d
    }

    /// Bands of a tridiagonal or cyclic tridiagonal matrix:
    /// `(lower, diag, upper, corner_top_right, corner_bottom_left)`.
    /// Returns `None` if other entries are present.
    fn tridiagonal_bands(&self) -> Option<Bands> {
        let n = self.n;
        let mut b = Bands {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
            top_right: 0.0,
            bottom_left: 0.0,
        };
        for i in 0..n {
            for (j, v) in self.row(i) {
                if j == i {
                    b.diag[i] += v;
                } else if j + 1 == i {
                    b.lower[i] += v;
                } else if j == i + 1 {
                    b.upper[i] += v;
                } else if i == 0 && j == n - 1 {
                    b.top_right += v;
                } else if i == n - 1 && j == 0 {
                    b.bottom_left += v;
                } else {
                    return None;
                }
            }
        }
        Some(b)
    }
}

#[derive(Debug, Clone)]
struct Bands {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    top_right: f64,
    bottom_left: f64,
}

/// Thomas factorization of a tridiagonal matrix, reusable across right-hand
/// sides.
#[derive(Debug, Clone)]
pub struct TridiagonalLu {
    lower: Vec<f64>,
    /// Modified super-diagonal `c'ᵢ`.
    upper: Vec<f64>,
    /// Pivots `dᵢ − aᵢ c'ᵢ₋₁`.
    pivots: Vec<f64>,
}

impl TridiagonalLu {
    /// `lower[0]` and `upper[n−1]` are ignored.
    pub fn new(lower: &[f64], diag: &[f64], upper: &[f64]) -> Result<Self> {
        let n = diag.len();
        if n == 0 || lower.len() != n || upper.len() != n {
            return Err(Error::usage("tridiagonal bands must be non-empty and of equal length"));
        }
        let mut cp = vec![0.0; n];
        let mut piv = vec![0.0; n];
        for i in 0..n {
            let p = if i == 0 {
                diag[0]
            } else {
                diag[i] - lower[i] * cp[i - 1]
            };
            if p == 0.0 || !p.is_finite() {
                return Err(Error::numerical(
                    "tridiagonal solve",
                    format!("zero pivot at row {i}"),
                    p,
                ));
            }
            piv[i] = p;
            cp[i] = if i + 1 < n { upper[i] / p } else { 0.0 };
        }
        Ok(TridiagonalLu {
            lower: lower.to_vec(),
            upper: cp,
            pivots: piv,
        })
    }

    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = self.pivots.len();
        rhs[0] /= self.pivots[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.lower[i] * rhs[i - 1]) / self.pivots[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.upper[i] * rhs[i + 1];
        }
    }
}

/// One-shot Thomas solve.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) -> Result<()> {
    TridiagonalLu::new(lower, diag, upper)?.solve_in_place(rhs);
    Ok(())
}

/// Periodic tridiagonal solver via the Sherman–Morrison correction of a
/// perturbed Thomas factorization.
#[derive(Debug, Clone)]
pub struct CyclicTridiagonalLu {
    inner: TridiagonalLu,
    /// `A'⁻¹u` for the rank-one correction.
    z: Vec<f64>,
    v_last: f64,
    denom: f64,
}

impl CyclicTridiagonalLu {
    /// `top_right = A[0][n−1]`, `bottom_left = A[n−1][0]`.
    pub fn new(lower: &[f64], diag: &[f64], upper: &[f64], top_right: f64, bottom_left: f64) -> Result<Self> {
        let n = diag.len();
        if n < 3 {
            return Err(Error::usage("cyclic tridiagonal systems need at least 3 unknowns"));
        }
        let gamma = -diag[0];
        let mut d = diag.to_vec();
        d[0] -= gamma;
        d[n - 1] -= bottom_left * top_right / gamma;
        let inner = TridiagonalLu::new(lower, &d, upper)?;
        let mut z = vec![0.0; n];
        z[0] = gamma;
        z[n - 1] = bottom_left;
        inner.solve_in_place(&mut z);
        let v_last = top_right / gamma;
        let denom = 1.0 + z[0] + v_last * z[n - 1];
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::numerical(
                "cyclic tridiagonal solve",
                "singular correction",
                denom,
            ));
        }
        Ok(CyclicTridiagonalLu {
            inner,
            z,
            v_last,
            denom,
        })
    }

    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = rhs.len();
        self.inner.solve_in_place(rhs);
        let fact = (rhs[0] + self.v_last * rhs[n - 1]) / self.denom;
        for (r, z) in rhs.iter_mut().zip(&self.z) {
            *r -= fact * z;
        }
    }
}

/// Dense LU with partial pivoting.
#[derive(Debug, Clone)]
pub struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl DenseLu {
    pub fn new(a: &[Vec<f64>]) -> Result<Self> {
        let n = a.len();
        let mut lu: Vec<f64> = a.iter().flat_map(|r| r.iter().copied()).collect();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pv) = (k..n)
                .map(|i| (i, lu[i * n + k].abs()))
                .fold((k, -1.0), |acc, e| if e.1 > acc.1 { e } else { acc });
            if pv == 0.0 {
                return Err(Error::numerical("dense LU", format!("singular at column {k}"), 0.0));
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let piv = lu[k * n + k];
            for i in k + 1..n {
                let f = lu[i * n + k] / piv;
                lu[i * n + k] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        lu[i * n + j] -= f * lu[k * n + j];
                    }
                }
            }
        }
        Ok(DenseLu { n, lu, perm })
    }

    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&p| rhs[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            y[i] -= row.iter().zip(&y[..i]).map(|(l, v)| l * v).sum::<f64>();
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n + i + 1..(i + 1) * n];
            let s = y[i] - row.iter().zip(&y[i + 1..]).map(|(u, v)| u * v).sum::<f64>();
            y[i] = s / self.lu[i * n + i];
        }
        rhs.copy_from_slice(&y);
    }
}

/// A factorized matrix, choosing the cheapest direct method its sparsity
/// pattern allows.
#[derive(Debug, Clone)]
pub enum Factorization {
    Tridiagonal(TridiagonalLu),
    Cyclic(CyclicTridiagonalLu),
    Dense(DenseLu),
}

impl Factorization {
    pub fn new(m: &CsrMatrix) -> Result<Self> {
        if let Some(b) = m.tridiagonal_bands() {
            if b.top_right == 0.0 && b.bottom_left == 0.0 {
                return Ok(Factorization::Tridiagonal(TridiagonalLu::new(
                    &b.lower, &b.diag, &b.upper,
                )?));
            }
            if m.n >= 3 {
                return Ok(Factorization::Cyclic(CyclicTridiagonalLu::new(
                    &b.lower,
                    &b.diag,
                    &b.upper,
                    b.top_right,
                    b.bottom_left,
                )?));
            }
        }
        Ok(Factorization::Dense(DenseLu::new(&m.to_dense())?))
    }

    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        match self {
            Factorization::Tridiagonal(f) => f.solve_in_place(rhs),
            Factorization::Cyclic(f) => f.solve_in_place(rhs),
            Factorization::Dense(f) => f.solve_in_place(rhs),
        }
    }
}

pub fn sup_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn sup_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(m: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
        sup_dist(&m.matvec(x), b)
    }

    fn cyclic(n: usize) -> CsrMatrix {
        let rows = (0..n)
            .map(|i| {
                vec![
                    ((i + n - 1) % n, -1.0 - 0.1 * i as f64),
                    (i, 4.0 + (i % 3) as f64),
                    ((i + 1) % n, -0.5),
                ]
            })
            .collect();
        CsrMatrix::from_rows(rows)
    }

    #[test]
    fn cyclic_solver_matches_dense() {
        for n in [3, 4, 9, 32] {
            let m = cyclic(n);
            let f = Factorization::new(&m).unwrap();
            assert!(matches!(f, Factorization::Cyclic(_)));
            let b: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 1.0).collect();
            let mut x = b.clone();
            f.solve_in_place(&mut x);
            assert!(residual(&m, &x, &b) < 1e-12, "n = {n}");
            let mut y = b.clone();
            DenseLu::new(&m.to_dense()).unwrap().solve_in_place(&mut y);
            assert!(sup_dist(&x, &y) < 1e-12);
        }
    }

    #[test]
    fn thomas_on_dirichlet_laplacian() {
        let n = 50;
        let rows = (0..n)
            .map(|i| {
                let mut r = vec![(i, 2.0)];
                if i > 0 {
                    r.push((i - 1, -1.0));
                }
                if i + 1 < n {
                    r.push((i + 1, -1.0));
                }
                r
            })
            .collect();
        let m = CsrMatrix::from_rows(rows);
        let f = Factorization::new(&m).unwrap();
        assert!(matches!(f, Factorization::Tridiagonal(_)));
        let b = vec![1.0; n];
        let mut x = b.clone();
        f.solve_in_place(&mut x);
        assert!(residual(&m, &x, &b) < 1e-10);
        // discrete solution of −u'' = 1 with zero ends: i(n+1−i)/2
        let i = 10;
        assert!((x[i - 1] - (i * (n + 1 - i)) as f64 / 2.0).abs() < 1e-9);
    }

    #[test]
    fn dense_lu_pivots() {
        let a = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let lu = DenseLu::new(&a).unwrap();
        let mut b = vec![2.0, 3.0];
        lu.solve_in_place(&mut b);
        assert_eq!(b, vec![3.0, 2.0]);
        assert!(DenseLu::new(&[vec![1.0, 1.0], vec![1.0, 1.0]]).is_err());
    }

    #[test]
    fn duplicate_entries_are_summed() {
        let m = CsrMatrix::from_rows(vec![vec![(0, 1.0), (0, 2.0)], vec![(1, 1.0)]]);
        assert_eq!(m.get(0, 0), 3.0);
        assert_eq!(m.row_sums(), vec![3.0, 1.0]);
    }
}
