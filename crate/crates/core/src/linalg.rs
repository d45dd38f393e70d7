//! Small dense and tridiagonal linear algebra.
//!
//! The systems in this crate are tiny (bordered solves of size m+1 with
//! m up to a few hundred, Vandermonde solves up to 25x25), so a plain
//! row-major LU with partial pivoting is all we need. Keeping the solver
//! in-crate also guarantees bitwise reproducible results.

/// Symmetric tridiagonal matrix stored as diagonal and off-diagonal bands.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    /// Off-diagonal band; `off[i]` couples rows `i` and `i+1`.
    pub off: Vec<f64>,
}

impl SymTridiag {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(
            off.len() + 1,
            diag.len(),
            "off-diagonal band must have one entry less than the diagonal"
        );
        Self { diag, off }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(x.len(), n, "dimension mismatch in tridiagonal matvec");
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut v = self.diag[i] * x[i];
            if i > 0 {
                v += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                v += self.off[i] * x[i + 1];
            }
            y[i] = v;
        }
        y
    }
}

/// Dense row-major matrix, only as large as the bordered continuation systems.
#[derive(Debug, Clone)]
pub struct DenseMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }
}

/// LU factorization with partial pivoting.
pub struct LuFactors {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

/// Factor `a` in place. Returns `None` when a pivot is exactly zero
/// (structurally singular matrix).
pub fn lu_factor(mut a: DenseMatrix) -> Option<LuFactors> {
    let n = a.n;
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        // partial pivoting on column k
        let mut piv = k;
        let mut max = a.at(k, k).abs();
        for i in (k + 1)..n {
            let v = a.at(i, k).abs();
            if v > max {
                max = v;
                piv = i;
            }
        }
        if max == 0.0 {
            return None;
        }
        if piv != k {
            for j in 0..n {
                let t = a.at(k, j);
                a.set(k, j, a.at(piv, j));
                a.set(piv, j, t);
            }
            perm.swap(k, piv);
        }
        let pivot = a.at(k, k);
        for i in (k + 1)..n {
            let l = a.at(i, k) / pivot;
            a.set(i, k, l);
            for j in (k + 1)..n {
                let v = a.at(i, j) - l * a.at(k, j);
                a.set(i, j, v);
            }
        }
    }
    Some(LuFactors {
        n,
        lu: a.data,
        perm,
    })
}

impl LuFactors {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n, "dimension mismatch in LU solve");
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        // forward substitution with unit lower factor
        for i in 1..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        // back substitution
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        x
    }

    /// Solve with right-hand sides whose entries are linear values
    /// (scalars or state vectors). Used by the tensor Vandermonde solves.
    pub fn solve_values<T: LinearValue>(&self, b: &[T]) -> Vec<T> {
        assert_eq!(b.len(), self.n, "dimension mismatch in LU solve");
        let n = self.n;
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p].clone()).collect();
        for i in 1..n {
            for j in 0..i {
                let (head, tail) = x.split_at_mut(i);
                tail[0].axpy(-self.lu[i * n + j], &head[j]);
            }
        }
        for i in (0..n).rev() {
            for j in (i + 1)..n {
                let (head, tail) = x.split_at_mut(i + 1);
                let coeff = -self.lu[i * n + j];
                head[i].axpy(coeff, &tail[j - i - 1]);
            }
            x[i].scale(1.0 / self.lu[i * n + i]);
        }
        x
    }
}

/// Values that interpolation and gPC coefficients can be built from:
/// plain scalars or whole state vectors.
pub trait LinearValue: Clone + Send + Sync {
    fn zeros_like(&self) -> Self;
    fn scale(&mut self, factor: f64);
    /// `self += factor * other`
    fn axpy(&mut self, factor: f64, other: &Self);
    /// `acc += self * self` componentwise; used for variance accumulation.
    fn accumulate_square(&self, acc: &mut Self);
}

impl LinearValue for f64 {
    fn zeros_like(&self) -> Self {
        0.0
    }
    fn scale(&mut self, factor: f64) {
        *self *= factor;
    }
    fn axpy(&mut self, factor: f64, other: &Self) {
        *self += factor * other;
    }
    fn accumulate_square(&self, acc: &mut Self) {
        *acc += self * self;
    }
}

impl LinearValue for Vec<f64> {
    fn zeros_like(&self) -> Self {
        vec![0.0; self.len()]
    }
    fn scale(&mut self, factor: f64) {
        for v in self.iter_mut() {
            *v *= factor;
        }
    }
    fn axpy(&mut self, factor: f64, other: &Self) {
        assert_eq!(self.len(), other.len(), "axpy dimension mismatch");
        for (v, o) in self.iter_mut().zip(other) {
            *v += factor * o;
        }
    }
    fn accumulate_square(&self, acc: &mut Self) {
        assert_eq!(self.len(), acc.len(), "accumulate dimension mismatch");
        for (a, v) in acc.iter_mut().zip(self) {
            *a += v * v;
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_solves_small_system() {
        let mut a = DenseMatrix::zeros(3);
        let entries = [[2.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 2.0]];
        for i in 0..3 {
            for j in 0..3 {
                a.set(i, j, entries[i][j]);
            }
        }
        let x_true = [1.0, -2.0, 3.0];
        let b: Vec<f64> = (0..3)
            .map(|i| (0..3).map(|j| entries[i][j] * x_true[j]).sum())
            .collect();
        let lu = lu_factor(a).unwrap();
        let x = lu.solve(&b);
        for (xi, ti) in x.iter().zip(x_true.iter()) {
            assert!((xi - ti).abs() < 1e-13);
        }
    }

    #[test]
    fn lu_reports_singular() {
        let mut a = DenseMatrix::zeros(2);
        a.set(0, 0, 1.0);
        a.set(0, 1, 2.0);
        a.set(1, 0, 2.0);
        a.set(1, 1, 4.0);
        assert!(lu_factor(a).is_none());
    }

    #[test]
    fn solve_values_matches_scalar_solve() {
        let mut a = DenseMatrix::zeros(3);
        let entries = [[4.0, 1.0, 0.5], [1.0, 3.0, 1.0], [0.5, 1.0, 2.0]];
        for i in 0..3 {
            for j in 0..3 {
                a.set(i, j, entries[i][j]);
            }
        }
        let b = [1.0, 2.0, -1.0];
        let lu = lu_factor(a).unwrap();
        let x_scalar = lu.solve(&b);
        let b_vec: Vec<Vec<f64>> = b.iter().map(|&v| vec![v, 2.0 * v]).collect();
        let x_vec = lu.solve_values(&b_vec);
        for i in 0..3 {
            assert!((x_vec[i][0] - x_scalar[i]).abs() < 1e-14);
            assert!((x_vec[i][1] - 2.0 * x_scalar[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn tridiag_matvec() {
        let t = SymTridiag::new(vec![2.0, 2.0, 2.0], vec![-1.0, -1.0]);
        let y = t.matvec(&[1.0, 1.0, 1.0]);
        assert_eq!(y, vec![1.0, 0.0, 1.0]);
    }
}
