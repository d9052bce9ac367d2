//! Small dense symmetric linear algebra: Jacobi eigendecomposition, PSD
//! square roots, orthonormal frames. Sized for the d x d matrices of the
//! synthetic generators (d up to a few hundred), not for large systems.

use crate::error::{Error, Result};
use crate::seed::Rng;

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMat {
    pub data: Vec<f64>,
    pub dim: usize,
}

impl SquareMat {
    pub fn zeros(dim: usize) -> Self {
        SquareMat {
            data: vec![0.0; dim * dim],
            dim,
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn from_rows(data: Vec<f64>, dim: usize) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::invalid(format!(
                "matrix buffer length {} != {}^2",
                data.len(),
                dim
            )));
        }
        Ok(SquareMat { data, dim })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                if (self.get(i, j) - self.get(j, i)).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn matmul(&self, other: &SquareMat) -> SquareMat {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = SquareMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> SquareMat {
        let n = self.dim;
        let mut out = SquareMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dim;
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                s += self.get(i, j) * x[j];
            }
            out[i] = s;
        }
    }
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns (eigenvalues, eigenvectors as columns of the returned matrix).
pub fn jacobi_eigen(mat: &SquareMat) -> Result<(Vec<f64>, SquareMat)> {
    if !mat.is_symmetric(1e-9) {
        return Err(Error::NotPsd("matrix is not symmetric".into()));
    }
    let n = mat.dim;
    let mut a = mat.clone();
    let mut v = SquareMat::identity(n);

    let max_sweeps = 64;
    for _ in 0..max_sweeps {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a.get(i, j) * a.get(i, j);
            }
        }
        if off.sqrt() < 1e-14 * (1.0 + a.trace().abs()) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }

    let eigenvalues: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    Ok((eigenvalues, v))
}

/// PSD check: symmetric with eigenvalues >= -tol * max(|lambda|).
pub fn check_psd(mat: &SquareMat) -> Result<()> {
    let (vals, _) = jacobi_eigen(mat)?;
    let scale = vals.iter().fold(0.0f64, |m, &v| m.max(v.abs())).max(1.0);
    if let Some(bad) = vals.iter().find(|&&v| v < -1e-9 * scale) {
        return Err(Error::NotPsd(format!("negative eigenvalue {bad}")));
    }
    Ok(())
}

/// Symmetric PSD square root via eigendecomposition, clamping eigenvalues at
/// zero (floating-point drift can leave tiny negatives on PSD inputs).
pub fn psd_sqrt(mat: &SquareMat) -> Result<SquareMat> {
    let (vals, vecs) = jacobi_eigen(mat)?;
    let scale = vals.iter().fold(0.0f64, |m, &v| m.max(v.abs())).max(1.0);
    let n = mat.dim;
    let mut out = SquareMat::zeros(n);
    for (k, &lam) in vals.iter().enumerate() {
        if lam < -1e-9 * scale {
            return Err(Error::NotPsd(format!("negative eigenvalue {lam}")));
        }
        let root = lam.max(0.0).sqrt();
        if root == 0.0 {
            continue;
        }
        for i in 0..n {
            let vi = vecs.get(i, k) * root;
            if vi == 0.0 {
                continue;
            }
            for j in 0..n {
                out.data[i * n + j] += vi * vecs.get(j, k);
            }
        }
    }
    // Symmetrize to kill rounding skew.
    for i in 0..n {
        for j in (i + 1)..n {
            let m = 0.5 * (out.get(i, j) + out.get(j, i));
            out.set(i, j, m);
            out.set(j, i, m);
        }
    }
    Ok(out)
}

/// Draw a d x k frame with orthonormal columns: Gaussian entries followed by
/// modified Gram-Schmidt. Returned row-major as d rows of k entries.
pub fn orthonormal_frame(d: usize, k: usize, rng: &mut Rng) -> Result<Vec<f64>> {
    if k > d {
        return Err(Error::invalid(format!("frame rank {k} exceeds ambient {d}")));
    }
    let mut cols: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..d).map(|_| rng.normal()).collect())
        .collect();
    for j in 0..k {
        for prev in 0..j {
            let dot: f64 = (0..d).map(|i| cols[j][i] * cols[prev][i]).sum();
            for i in 0..d {
                cols[j][i] -= dot * cols[prev][i];
            }
        }
        let norm: f64 = cols[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return Err(Error::invalid("degenerate frame draw"));
        }
        for v in cols[j].iter_mut() {
            *v /= norm;
        }
    }
    let mut frame = vec![0.0; d * k];
    for i in 0..d {
        for j in 0..k {
            frame[i * k + j] = cols[j][i];
        }
    }
    Ok(frame)
}
