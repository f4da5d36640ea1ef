//! Symmetric tridiagonal eigenproblems: Sturm-sequence bisection for
//! eigenvalues and inverse iteration for eigenvectors.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TridiagError {
    #[error("off-diagonal length {off} does not match diagonal length {diag}")]
    Shape { diag: usize, off: usize },
    #[error("matrix is empty")]
    Empty,
    #[error("non-finite entry")]
    NonFinite,
    #[error("eigenvalue index {index} out of range for size {len}")]
    Index { index: usize, len: usize },
}

/// `T = diag(d) + offdiag(e)`, with `e[i]` coupling rows `i` and `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self, TridiagError> {
        if diag.is_empty() {
            return Err(TridiagError::Empty);
        }
        if off.len() + 1 != diag.len() {
            return Err(TridiagError::Shape {
                diag: diag.len(),
                off: off.len(),
            });
        }
        if diag.iter().chain(&off).any(|v| !v.is_finite()) {
            return Err(TridiagError::NonFinite);
        }
        Ok(Self { diag, off })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off(&self) -> &[f64] {
        &self.off
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.off[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// Interval containing the whole spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn sturm_count(&self, x: f64) -> usize {
        let (lo, hi) = self.gershgorin();
        let tiny = f64::MIN_POSITIVE.sqrt() * (hi - lo).abs().max(1.0);
        let mut count = 0;
        let mut q = self.diag[0] - x;
        for i in 0..self.len() {
            if i > 0 {
                let e = self.off[i - 1];
                q = self.diag[i] - x - e * e / q;
            }
            if q == 0.0 {
                q = -tiny;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `k`-th smallest eigenvalue (0-based), bisected to machine precision.
    pub fn eigenvalue(&self, k: usize) -> Result<f64, TridiagError> {
        if k >= self.len() {
            return Err(TridiagError::Index {
                index: k,
                len: self.len(),
            });
        }
        let (mut lo, mut hi) = self.gershgorin();
        let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= 2.0 * f64::EPSILON * scale {
                break;
            }
            if self.sturm_count(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// The `count` smallest eigenvalues, ascending.
    pub fn lowest_eigenvalues(&self, count: usize) -> Result<Vec<f64>, TridiagError> {
        (0..count).map(|k| self.eigenvalue(k)).collect()
    }

    /// Unit eigenvector for an (accurate) eigenvalue, by inverse iteration with
    /// a partially pivoted LU factorization of `T - lambda I`. The sign is
    /// fixed so that the largest component is positive.
    pub fn eigenvector(&self, lambda: f64) -> Vec<f64> {
        let n = self.len();
        if n == 1 {
            return vec![1.0];
        }
        let (lo, hi) = self.gershgorin();
        let shift = lambda + f64::EPSILON * (hi - lo).abs().max(1.0);
        let lu = TridiagLu::factor(self, shift);
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.01 * ((i * 7919) % 13) as f64).collect();
        for _ in 0..4 {
            x = lu.solve(&x);
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            x.iter_mut().for_each(|v| *v /= norm);
        }
        let imax = (0..n)
            .max_by(|&a, &b| x[a].abs().total_cmp(&x[b].abs()))
            .unwrap();
        if x[imax] < 0.0 {
            x.iter_mut().for_each(|v| *v = -*v);
        }
        x
    }
}

/// LU factors of a tridiagonal matrix with row interchanges: `U` has two
/// superdiagonals.
struct TridiagLu {
    u0: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    l: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagLu {
    fn factor(t: &SymTridiagonal, shift: f64) -> Self {
        let n = t.len();
        let tiny = f64::EPSILON * t.gershgorin().1.abs().max(t.gershgorin().0.abs()).max(1.0);
        let mut u0 = vec![0.0; n];
        let mut u1 = vec![0.0; n];
        let mut u2 = vec![0.0; n];
        let mut l = vec![0.0; n];
        let mut swapped = vec![false; n];
        // Working row i: (a, b, c) at columns i, i+1, i+2.
        let mut a = t.diag[0] - shift;
        let mut b = if n > 1 { t.off[0] } else { 0.0 };
        let mut c = 0.0;
        for i in 0..n {
            if i + 1 == n {
                u0[i] = if a.abs() < tiny { tiny } else { a };
                break;
            }
            // Next row entries at columns i, i+1, i+2.
            let na = t.off[i];
            let nb = t.diag[i + 1] - shift;
            let nc = if i + 2 < n { t.off[i + 1] } else { 0.0 };
            if na.abs() > a.abs() {
                swapped[i] = true;
                u0[i] = na;
                u1[i] = nb;
                u2[i] = nc;
                let m = a / na;
                l[i] = m;
                a = b - m * nb;
                b = c - m * nc;
            } else {
                let piv = if a.abs() < tiny { tiny } else { a };
                u0[i] = piv;
                u1[i] = b;
                u2[i] = c;
                let m = na / piv;
                l[i] = m;
                a = nb - m * b;
                b = nc - m * c;
            }
            c = 0.0;
        }
        Self { u0, u1, u2, l, swapped }
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = rhs.len();
        let mut y = rhs.to_vec();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                y.swap(i, i + 1);
                // After the swap, row i+1 holds the old row i.
                y[i + 1] -= self.l[i] * y[i];
            } else {
                y[i + 1] -= self.l[i] * y[i];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = y[i];
            if i + 1 < n {
                s -= self.u1[i] * x[i + 1];
            }
            if i + 2 < n {
                s -= self.u2[i] * x[i + 2];
            }
            x[i] = s / self.u0[i];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn dense(t: &SymTridiagonal) -> DMatrix<f64> {
        let n = t.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = t.diag()[i];
            if i + 1 < n {
                m[(i, i + 1)] = t.off()[i];
                m[(i + 1, i)] = t.off()[i];
            }
        }
        m
    }

    #[test]
    fn shape_errors() {
        assert_eq!(SymTridiagonal::new(vec![], vec![]), Err(TridiagError::Empty));
        assert!(matches!(SymTridiagonal::new(vec![1.0, 2.0], vec![]), Err(TridiagError::Shape { .. })));
        assert_eq!(SymTridiagonal::new(vec![f64::NAN], vec![]), Err(TridiagError::NonFinite));
    }

    #[test]
    fn free_particle_chain_has_cosine_spectrum() {
        let n = 50;
        let t = SymTridiagonal::new(vec![2.0; n], vec![-1.0; n - 1]).unwrap();
        for k in 0..n {
            let exact = 2.0 - 2.0 * (std::f64::consts::PI * (k + 1) as f64 / (n + 1) as f64).cos();
            assert!((t.eigenvalue(k).unwrap() - exact).abs() < 1e-13);
        }
        assert!(t.eigenvalue(n).is_err());
    }

    proptest! {
        #[test]
        fn matches_dense_eigensolver(
            d in prop::collection::vec(-50.0f64..50.0, 2..40),
            seed in prop::collection::vec(-5.0f64..5.0, 40),
        ) {
            let n = d.len();
            let off: Vec<f64> = seed[..n - 1].to_vec();
            let t = SymTridiagonal::new(d, off).unwrap();
            let mut reference: Vec<f64> = dense(&t).symmetric_eigen().eigenvalues.iter().copied().collect();
            reference.sort_by(f64::total_cmp);
            for (k, r) in reference.iter().enumerate() {
                let v = t.eigenvalue(k).unwrap();
                prop_assert!((v - r).abs() < 1e-9 * (1.0 + r.abs()), "k={} {} vs {}", k, v, r);
            }
            // Residual of the lowest eigenpair.
            let lambda = t.eigenvalue(0).unwrap();
            let x = t.eigenvector(lambda);
            let tx = t.matvec(&x);
            let res: f64 = tx.iter().zip(&x).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
            prop_assert!(res < 1e-8 * (1.0 + lambda.abs()), "residual {}", res);
        }
    }
}
