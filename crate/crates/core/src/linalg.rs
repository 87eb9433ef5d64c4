//! Dense Cholesky factorization for the small symmetric positive-definite
//! blocks the Newton step solves with.

/// Lower-triangular factor `L` with `A = L Lᵀ`, stored row-major.
#[derive(Clone, Debug)]
pub struct Cholesky {
    dim: usize,
    lower: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NotPositiveDefinite {
    pub pivot: usize,
    pub value: f64,
}

impl Cholesky {
    /// Factorizes the row-major `dim x dim` symmetric matrix `a`. Only the
    /// lower triangle is read.
    pub fn factor(a: &[f64], dim: usize) -> Result<Self, NotPositiveDefinite> {
        assert_eq!(a.len(), dim * dim);
        let mut l = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..=i {
                let (ri, rj) = (&l[i * dim..i * dim + j], &l[j * dim..j * dim + j]);
                let dot: f64 = ri.iter().zip(rj).map(|(x, y)| x * y).sum();
                let v = a[i * dim + j] - dot;
                if i == j {
                    if !(v > 0.0) || !v.is_finite() {
                        return Err(NotPositiveDefinite { pivot: i, value: v });
                    }
                    l[i * dim + i] = v.sqrt();
                } else {
                    l[i * dim + j] = v / l[j * dim + j];
                }
            }
        }
        Ok(Self { dim, lower: l })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.dim;
        assert_eq!(b.len(), n);
        let l = &self.lower;
        for i in 0..n {
            let dot: f64 = l[i * n..i * n + i].iter().zip(&b[..i]).map(|(x, y)| x * y).sum();
            b[i] = (b[i] - dot) / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut v = b[i];
            for k in i + 1..n {
                v -= l[k * n + i] * b[k];
            }
            b[i] = v / l[i * n + i];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
