//! Dense lower-triangular Cholesky factor stored row by row, with
//! single-row extension for incremental kernel matrices.

#[derive(Debug, Clone, Default)]
pub struct Cholesky {
    /// Row `i` holds `L[i][0..=i]`.
    rows: Vec<Vec<f64>>,
}

impl Cholesky {
    /// Factors the symmetric matrix given by `entry(i, j)` for `j <= i`.
    /// Returns `None` if a pivot is not strictly positive.
    pub fn factor<F>(n: usize, entry: F) -> Option<Self>
    where
        F: Fn(usize, usize) -> f64,
    {
        let mut chol = Cholesky { rows: Vec::with_capacity(n) };
        for i in 0..n {
            let col: Vec<f64> = (0..i).map(|j| entry(i, j)).collect();
            if !chol.append(&col, entry(i, i)) {
                return None;
            }
        }
        Some(chol)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Grows the factor by one row for a new variable with covariances `cross`
    /// against the existing ones and variance `diag`.
    pub fn append(&mut self, cross: &[f64], diag: f64) -> bool {
        debug_assert_eq!(cross.len(), self.rows.len());
        let mut row = self.forward(cross);
        let pivot = diag - row.iter().map(|x| x * x).sum::<f64>();
        if !(pivot > 0.0) || !pivot.is_finite() {
            return false;
        }
        row.push(pivot.sqrt());
        self.rows.push(row);
        true
    }

    /// Solves `L y = rhs`.
    pub fn forward(&self, rhs: &[f64]) -> Vec<f64> {
        let mut y = Vec::with_capacity(rhs.len());
        for (i, row) in self.rows.iter().enumerate() {
            let acc: f64 = row[..i].iter().zip(&y).map(|(l, v)| l * v).sum();
            y.push((rhs[i] - acc) / row[i]);
        }
        y
    }

    /// Solves `L^T x = rhs`.
    pub fn backward(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.rows.len();
        let mut x = rhs.to_vec();
        for i in (0..n).rev() {
            x[i] /= self.rows[i][i];
            let xi = x[i];
            for (j, l) in self.rows[i][..i].iter().enumerate() {
                x[j] -= l * xi;
            }
        }
        x
    }

    /// Solves `(L L^T) x = rhs`.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        self.backward(&self.forward(rhs))
    }
}
