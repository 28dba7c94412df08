use crate::error::{Error, Result};
use faer::{c64, Mat};

/// Eigenvalues with right eigenvectors stored column-wise.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<c64>,
    pub vectors: Mat<c64>,
}

impl EigenDecomposition {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn vector(&self, j: usize) -> Vec<c64> {
        (0..self.vectors.nrows()).map(|i| self.vectors[(i, j)]).collect()
    }

    pub fn pairs(&self) -> Vec<(c64, Vec<c64>)> {
        (0..self.len()).map(|j| (self.values[j], self.vector(j))).collect()
    }
}

fn failure(a: &Mat<f64>) -> Error {
    let mut finite = true;
    let mut max_abs: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let v = a[(i, j)];
            finite &= v.is_finite();
            max_abs = max_abs.max(v.abs());
        }
    }
    Error::EigFailed { n: a.nrows(), max_abs, finite }
}

/// All eigenpairs of a dense real matrix.
pub fn dense_eig(a: &Mat<f64>) -> Result<EigenDecomposition> {
    assert_eq!(a.nrows(), a.ncols(), "dense_eig: matrix must be square");
    let e = a.eigen().map_err(|_| failure(a))?;
    let s = e.S().column_vector();
    let values: Vec<c64> = (0..a.nrows()).map(|i| s[i]).collect();
    if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(failure(a));
    }
    Ok(EigenDecomposition { values, vectors: e.U().to_owned() })
}

/// Eigenvalues only.
pub fn dense_eigenvalues(a: &Mat<f64>) -> Result<Vec<c64>> {
    let v = a.eigenvalues().map_err(|_| failure(a))?;
    if v.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(failure(a));
    }
    Ok(v)
}

/// `‖Av − λv‖ / (‖A‖_F ‖v‖)`.
pub fn eig_residual(a: &Mat<f64>, lambda: c64, v: &[c64]) -> f64 {
    let n = a.nrows();
    let mut r2 = 0.0;
    for i in 0..n {
        let mut s = c64::new(0.0, 0.0);
        for j in 0..n {
            s += v[j] * a[(i, j)];
        }
        s -= lambda * v[i];
        r2 += s.norm_sqr();
    }
    let vn: f64 = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    r2.sqrt() / (a.norm_l2() * vn)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_matrix(n: usize, seed: u64) -> Mat<f64> {
        // xorshift keeps the test free of RNG dependencies
        let mut s = seed.wrapping_mul(0x9E3779B97F4A7C15) | 1;
        Mat::from_fn(n, n, |_, _| {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
    }

    #[test]
    fn identity_and_diagonal() {
        let e = dense_eig(&Mat::<f64>::identity(3, 3)).unwrap();
        assert!(e.values.iter().all(|v| (v.re - 1.0).abs() < 1e-15 && v.im == 0.0));
        let d = Mat::from_fn(3, 3, |i, j| if i == j { (i + 1) as f64 } else { 0.0 });
        let mut v: Vec<f64> = dense_eig(&d).unwrap().values.iter().map(|z| z.re).collect();
        v.sort_by(f64::total_cmp);
        assert_eq!(v, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn random_residuals() {
        let a = random_matrix(50, 7);
        let e = dense_eig(&a).unwrap();
        for (l, v) in e.pairs() {
            assert!(eig_residual(&a, l, &v) <= 1e-8);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn trace_and_conjugate_closure(n in 2usize..40, seed in any::<u64>()) {
            let a = random_matrix(n, seed);
            let e = dense_eig(&a).unwrap();
            let tr: f64 = (0..n).map(|i| a[(i, i)]).sum();
            let sum: c64 = e.values.iter().sum();
            prop_assert!((sum.re - tr).abs() <= 1e-8 * (1.0 + tr.abs() + a.norm_l2()));
            prop_assert!(sum.im.abs() <= 1e-8 * (1.0 + a.norm_l2()));
            for v in &e.values {
                if v.im.abs() > 1e-12 {
                    let found = e.values.iter().any(|w| (w - v.conj()).norm() < 1e-8);
                    prop_assert!(found);
                }
            }
        }
    }
}
