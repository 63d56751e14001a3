use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

#[allow(unused_imports)]
use num_traits::Float;

use crate::{Complex, Error, Result};

/// Dense real matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct RMat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self {
            rows: r,
            cols: c,
            data,
        }
    }

    /// Diagonal matrix from the given entries.
    pub fn from_diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// y = self · x for a vector x.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        self.matvec_into(x, &mut out);
        out
    }

    pub fn matvec_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(self.cols, x.len());
        assert_eq!(self.rows, out.len());
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for x in &mut out.data {
            *x *= s;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (x, y) in out.data.iter_mut().zip(&other.data) {
            *x += y;
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scaled(-1.0))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Matrix exponential by scaling-and-squaring with a [6/6] Padé
    /// approximant. Plenty for the small, well-scaled drift matrices used
    /// here.
    pub fn expm(&self) -> Self {
        assert_eq!(self.rows, self.cols, "expm needs a square matrix");
        let n = self.rows;
        if n == 0 {
            return Self::zeros(0, 0);
        }
        let norm = self.norm_inf();
        let s = if norm > 0.5 {
            (norm / 0.5).log2().ceil() as u32
        } else {
            0
        };
        let a = self.scaled(0.5f64.powi(s as i32));

        let mut num = Self::identity(n);
        let mut den = Self::identity(n);
        let mut term = Self::identity(n);
        let mut c = 1.0;
        let p = 6;
        for k in 1..=p {
            c *= (p - k + 1) as f64 / (k * (2 * p - k + 1)) as f64;
            term = term.matmul(&a);
            num = num.add(&term.scaled(c));
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            den = den.add(&term.scaled(sign * c));
        }
        let mut x = lu_solve_matrix(&den, &num).expect("Padé denominator singular");
        for _ in 0..s {
            x = x.matmul(&x);
        }
        x
    }
}

impl Index<(usize, usize)> for RMat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for RMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorization with partial pivoting; returns `None` for a singular
/// matrix.
struct Lu {
    lu: RMat,
    piv: Vec<usize>,
}

fn lu_factor(a: &RMat) -> Option<Lu> {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let mut lu = a.clone();
    let mut piv: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let (mut p, mut maxv) = (k, lu[(k, k)].abs());
        for i in k + 1..n {
            let v = lu[(i, k)].abs();
            if v > maxv {
                p = i;
                maxv = v;
            }
        }
        if maxv == 0.0 {
            return None;
        }
        if p != k {
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(p, j)];
                lu[(p, j)] = tmp;
            }
            piv.swap(k, p);
        }
        for i in k + 1..n {
            let f = lu[(i, k)] / lu[(k, k)];
            lu[(i, k)] = f;
            for j in k + 1..n {
                let s = f * lu[(k, j)];
                lu[(i, j)] -= s;
            }
        }
    }
    Some(Lu { lu, piv })
}

impl Lu {
    fn solve_vec(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.rows;
        let mut x: Vec<f64> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            for j in 0..i {
                x[i] -= self.lu[(i, j)] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= self.lu[(i, j)] * x[j];
            }
            x[i] /= self.lu[(i, i)];
        }
        x
    }
}

/// Solves A · X = B.
fn lu_solve_matrix(a: &RMat, b: &RMat) -> Option<RMat> {
    let lu = lu_factor(a)?;
    let n = a.rows;
    let mut x = RMat::zeros(n, b.cols);
    let mut col = vec![0.0; n];
    for j in 0..b.cols {
        for i in 0..n {
            col[i] = b[(i, j)];
        }
        let sol = lu.solve_vec(&col);
        for i in 0..n {
            x[(i, j)] = sol[i];
        }
    }
    Some(x)
}

/// Solves the continuous Lyapunov equation A·X + X·Aᵀ + Q = 0 by a dense
/// Kronecker system; fails if A is not Hurwitz.
pub fn lyapunov(a: &RMat, q: &RMat) -> Result<RMat> {
    assert_eq!(a.rows, a.cols);
    assert_eq!((q.rows, q.cols), (a.rows, a.cols));
    let m = a.rows;
    if m == 0 {
        return Ok(RMat::zeros(0, 0));
    }
    if !is_hurwitz(a) {
        return Err(Error::NotHurwitz);
    }
    let n2 = m * m;
    let mut sys = RMat::zeros(n2, n2);
    let mut rhs = vec![0.0; n2];
    for i in 0..m {
        for j in 0..m {
            let u = i * m + j;
            rhs[u] = -q[(i, j)];
            for k in 0..m {
                sys[(u, k * m + j)] += a[(i, k)];
                sys[(u, i * m + k)] += a[(j, k)];
            }
        }
    }
    let lu = lu_factor(&sys).ok_or(Error::NotHurwitz)?;
    let x = lu.solve_vec(&rhs);
    let mut out = RMat::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            // The solution is symmetric up to roundoff; enforce it.
            out[(i, j)] = 0.5 * (x[i * m + j] + x[j * m + i]);
        }
    }
    Ok(out)
}

/// Whether every eigenvalue of `a` has a negative real part, decided from
/// the spectral radius of e^A via repeated squaring (no eigensolver needed,
/// so defective matrices are fine).
pub fn is_hurwitz(a: &RMat) -> bool {
    assert_eq!(a.rows, a.cols);
    if a.rows == 0 {
        return true;
    }
    let scale = 1.0 / a.norm_inf().max(1.0);
    let mut g = a.scaled(scale).expm();
    let mut log_norm = 0.0;
    let mut power = 1.0;
    for _ in 0..40 {
        let n = g.frobenius();
        if n == 0.0 {
            return true;
        }
        log_norm += n.ln();
        g = g.scaled(1.0 / n);
        g = g.matmul(&g);
        power *= 2.0;
        log_norm *= 2.0;
    }
    // log ρ(e^{A·scale}) ≈ log_norm / power
    log_norm / power < -1e-12
}

/// Cholesky factor L (lower triangular, L·Lᵀ = A) of a symmetric positive
/// *semi*definite matrix. Pivots below `tol`·max|A| are treated as zero,
/// which handles rank-deficient covariances (e.g. uncoupled baths).
pub fn cholesky_psd(a: &RMat, tol: f64) -> Result<RMat> {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let scale = a.max_abs().max(1e-300);
    let mut l = RMat::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= tol * scale {
            if d < -tol * scale {
                return Err(Error::InvalidInput(alloc::format!(
                    "matrix not positive semidefinite: pivot {d:.3e} at {j}"
                )));
            }
            // Semidefinite direction: zero column.
            continue;
        }
        l[(j, j)] = d.sqrt();
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / l[(j, j)];
        }
    }
    Ok(l)
}

/// Dense complex square matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    n: usize,
    data: Vec<Complex>,
}

impl CMat {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex::ZERO; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex::ONE;
        }
        m
    }

    pub fn from_rows(rows: &[&[Complex]]) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            assert_eq!(row.len(), n, "not square");
            data.extend_from_slice(row);
        }
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[Complex] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[Complex] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn dagger(&self) -> Self {
        let mut out = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let mut out = Self::zeros(self.n);
        out.matmul_into(self, other);
        out
    }

    /// self = a · b without allocating.
    pub fn matmul_into(&mut self, a: &Self, b: &Self) {
        let n = a.n;
        assert_eq!(n, b.n);
        assert_eq!(n, self.n);
        for x in &mut self.data {
            *x = Complex::ZERO;
        }
        for i in 0..n {
            for k in 0..n {
                let av = a[(i, k)];
                if av == Complex::ZERO {
                    continue;
                }
                for j in 0..n {
                    self.data[i * n + j] += av * b.data[k * n + j];
                }
            }
        }
    }

    pub fn matvec(&self, x: &[Complex], out: &mut [Complex]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(out.len(), self.n);
        for i in 0..self.n {
            let mut s = Complex::ZERO;
            for (a, b) in self.row(i).iter().zip(x) {
                s += a * b;
            }
            out[i] = s;
        }
    }

    pub fn scaled(&self, s: Complex) -> Self {
        let mut out = self.clone();
        for x in &mut out.data {
            *x *= s;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let mut out = self.clone();
        for (x, y) in out.data.iter_mut().zip(&other.data) {
            *x += y;
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let mut out = self.clone();
        for (x, y) in out.data.iter_mut().zip(&other.data) {
            *x -= y;
        }
        out
    }

    pub fn trace(&self) -> Complex {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.norm()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (x, y)| m.max((x - y).norm()))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        for i in 0..self.n {
            for j in i..self.n {
                if (self[(i, j)] - self[(j, i)].conj()).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
    /// rotations. Returns eigenvalues (ascending) and the unitary matrix of
    /// eigenvectors as columns.
    pub fn hermitian_eigen(&self) -> (Vec<f64>, CMat) {
        let n = self.n;
        let mut a = self.clone();
        let mut v = CMat::identity(n);
        let scale = self.max_abs().max(1e-300);
        for _sweep in 0..60 {
            let mut off = 0.0f64;
            for p in 0..n {
                for q in p + 1..n {
                    off = off.max(a[(p, q)].norm());
                }
            }
            if off < 1e-15 * scale {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[(p, q)];
                    let r = apq.norm();
                    if r < 1e-18 * scale {
                        continue;
                    }
                    let phase = apq / r;
                    let app = a[(p, p)].re;
                    let aqq = a[(q, q)].re;
                    let tau = (aqq - app) / (2.0 * r);
                    let t = if tau >= 0.0 {
                        1.0 / (tau + (1.0 + tau * tau).sqrt())
                    } else {
                        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    // J = [[c, s·phase], [-s·phase*, c]] acting on columns p, q.
                    for i in 0..n {
                        let aip = a[(i, p)];
                        let aiq = a[(i, q)];
                        a[(i, p)] = aip * c - aiq * s * phase.conj();
                        a[(i, q)] = aip * s * phase + aiq * c;
                    }
                    for j in 0..n {
                        let apj = a[(p, j)];
                        let aqj = a[(q, j)];
                        a[(p, j)] = apj * c - aqj * s * phase;
                        a[(q, j)] = apj * s * phase.conj() + aqj * c;
                    }
                    for i in 0..n {
                        let vip = v[(i, p)];
                        let viq = v[(i, q)];
                        v[(i, p)] = vip * c - viq * s * phase.conj();
                        v[(i, q)] = vip * s * phase + viq * c;
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).unwrap());
        let vals: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
        let mut vecs = CMat::zeros(n);
        for (newc, &oldc) in order.iter().enumerate() {
            for i in 0..n {
                vecs[(i, newc)] = v[(i, oldc)];
            }
        }
        (vals, vecs)
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = Complex;
    fn index(&self, (i, j): (usize, usize)) -> &Complex {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex {
        &mut self.data[i * self.n + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn expm_matches_series_small() {
        let a = RMat::from_rows(&[&[0.0, 1.0], &[-1.0, -0.3]]);
        let e = a.expm();
        // Brute-force Taylor series as the oracle.
        let mut sum = RMat::identity(2);
        let mut term = RMat::identity(2);
        for k in 1..60 {
            term = term.matmul(&a).scaled(1.0 / k as f64);
            sum = sum.add(&term);
        }
        assert!(e.sub(&sum).max_abs() < 1e-14);
    }

    #[test]
    fn expm_diagonal() {
        let a = RMat::from_diag(&[-1.0, -2.0]);
        let e = a.expm();
        assert_relative_eq!(e[(0, 0)], (-1.0f64).exp(), epsilon = 1e-14);
        assert_relative_eq!(e[(1, 1)], (-2.0f64).exp(), epsilon = 1e-14);
        assert_eq!(e[(0, 1)], 0.0);
    }

    #[test]
    fn lyapunov_scalar() {
        // A = -γ, B·Bᵀ = b² ⟹ Σ = b²/(2γ).
        let a = RMat::from_rows(&[&[-0.7]]);
        let q = RMat::from_rows(&[&[2.25]]);
        let s = lyapunov(&a, &q).unwrap();
        assert_relative_eq!(s[(0, 0)], 2.25 / 1.4, epsilon = 1e-13);
    }

    #[test]
    fn lyapunov_residual_3x3() {
        let a = RMat::from_rows(&[
            &[-1.0, 0.4, 0.0],
            &[-0.2, -0.5, 0.3],
            &[0.1, 0.0, -2.0],
        ]);
        let b = RMat::from_diag(&[1.0, 0.5, 2.0]);
        let q = b.matmul(&b.transpose());
        let s = lyapunov(&a, &q).unwrap();
        let res = a.matmul(&s).add(&s.matmul(&a.transpose())).add(&q);
        assert!(res.max_abs() < 1e-12);
    }

    #[test]
    fn lyapunov_rejects_unstable() {
        let a = RMat::from_rows(&[&[0.5]]);
        let q = RMat::from_rows(&[&[1.0]]);
        assert_eq!(lyapunov(&a, &q), Err(Error::NotHurwitz));
    }

    #[test]
    fn hurwitz_detection() {
        assert!(is_hurwitz(&RMat::from_rows(&[&[0.0, 1.0], &[-1.01, -2.0]])));
        assert!(!is_hurwitz(&RMat::from_rows(&[&[0.1, 0.0], &[0.0, -1.0]])));
        assert!(!is_hurwitz(&RMat::from_rows(&[&[0.0]])));
    }

    #[test]
    fn cholesky_recovers_matrix() {
        let l0 = RMat::from_rows(&[&[1.5, 0.0], &[-0.3, 0.8]]);
        let a = l0.matmul(&l0.transpose());
        let l = cholesky_psd(&a, 1e-14).unwrap();
        assert!(l.matmul(&l.transpose()).sub(&a).max_abs() < 1e-13);
    }

    #[test]
    fn cholesky_semidefinite_zero() {
        let a = RMat::zeros(3, 3);
        let l = cholesky_psd(&a, 1e-14).unwrap();
        assert_eq!(l.max_abs(), 0.0);
    }

    #[test]
    fn hermitian_eigen_2x2() {
        let h = CMat::from_rows(&[
            &[Complex::new(1.0, 0.0), Complex::new(0.4, 0.0)],
            &[Complex::new(0.4, 0.0), Complex::new(0.0, 0.0)],
        ]);
        let (vals, vecs) = h.hermitian_eigen();
        // Eigenvalues 0.5 ± √(0.25 + 0.16).
        let split = (0.25f64 + 0.16).sqrt();
        assert_relative_eq!(vals[0], 0.5 - split, epsilon = 1e-13);
        assert_relative_eq!(vals[1], 0.5 + split, epsilon = 1e-13);
        // Residual ‖H·v − λ·v‖.
        for k in 0..2 {
            let v: Vec<Complex> = (0..2).map(|i| vecs[(i, k)]).collect();
            let mut hv = vec![Complex::ZERO; 2];
            h.matvec(&v, &mut hv);
            for i in 0..2 {
                assert!((hv[i] - v[i] * vals[k]).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn hermitian_eigen_complex_offdiag() {
        let h = CMat::from_rows(&[
            &[Complex::new(0.3, 0.0), Complex::new(0.1, -0.7)],
            &[Complex::new(0.1, 0.7), Complex::new(-1.2, 0.0)],
        ]);
        let (vals, vecs) = h.hermitian_eigen();
        // tr and det preserved.
        assert_relative_eq!(vals[0] + vals[1], -0.9, epsilon = 1e-12);
        let det = 0.3 * (-1.2) - (0.1f64 * 0.1 + 0.7 * 0.7);
        assert_relative_eq!(vals[0] * vals[1], det, epsilon = 1e-12);
        // Unitarity of the eigenvector matrix.
        let vtv = vecs.dagger().matmul(&vecs);
        assert!(vtv.max_abs_diff(&CMat::identity(2)) < 1e-12);
    }
}
