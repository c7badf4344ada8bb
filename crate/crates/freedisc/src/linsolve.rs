//! Dense and banded linear solvers.
//!
//! `solve_dense` is Gaussian elimination with partial pivoting, generic over
//! [`Scalar`]: exact over `BigRational`, numerically stable over `f64`. The
//! systems here are small (Hermite boundary systems, at most 32x32), so no
//! blocking or pivoting refinements beyond column-max are needed.
//! `BandedSpd` holds a symmetric positive definite band matrix and factors it
//! as LDL^T for the minimizer's fixed-pattern Newton solves (bandwidth k).

use crate::error::{Error, Result};
use crate::rational::Scalar;

/// Solve `a x = b` by partial-pivoted elimination. Consumes its inputs.
pub fn solve_dense<S: Scalar>(mut a: Vec<Vec<S>>, mut b: Vec<S>) -> Result<Vec<S>> {
    let n = a.len();
    if n == 0 || b.len() != n || a.iter().any(|row| row.len() != n) {
        return Err(Error::validation("solve_dense: matrix/rhs shape mismatch"));
    }
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| {
                a[i][col]
                    .abs_val()
                    .partial_cmp(&a[j][col].abs_val())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        if a[pivot_row][col].is_zero() {
            return Err(Error::numerics("solve_dense: singular matrix"));
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        let inv = a[col][col].recip_val();
        for row in col + 1..n {
            if a[row][col].is_zero() {
                continue;
            }
            let factor = a[row][col].clone() * inv.clone();
            for j in col..n {
                let sub = factor.clone() * a[col][j].clone();
                a[row][j] = a[row][j].clone() - sub;
            }
            let sub = factor * b[col].clone();
            b[row] = b[row].clone() - sub;
        }
    }
    let mut x = vec![S::zero(); n];
    for row in (0..n).rev() {
        let mut acc = b[row].clone();
        for j in row + 1..n {
            acc = acc - a[row][j].clone() * x[j].clone();
        }
        x[row] = acc / a[row][row].clone();
    }
    Ok(x)
}

/// Float solve with one step of iterative refinement; residual via fused
/// multiply-add accumulation. Keeps the floating Hermite backend at ~1e-13
/// relative even for the k=8 boundary systems.
pub fn solve_refined(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let x0 = solve_dense(a.to_vec(), b.to_vec())?;
    let n = b.len();
    let mut r = vec![0.0; n];
    for i in 0..n {
        let mut acc = -b[i];
        for j in 0..n {
            acc = a[i][j].mul_add(x0[j], acc);
        }
        r[i] = acc;
    }
    let dx = solve_dense(a.to_vec(), r)?;
    Ok((0..n).map(|i| x0[i] - dx[i]).collect())
}

/// Symmetric positive definite band matrix in lower band storage:
/// `bands[d][i] = A[i+d][i]` for `d = 0..=bandwidth`.
#[derive(Debug, Clone)]
pub struct BandedSpd {
    pub n: usize,
    pub bandwidth: usize,
    pub bands: Vec<Vec<f64>>,
}

impl BandedSpd {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        let bands = (0..=bandwidth).map(|d| vec![0.0; n - d.min(n)]).collect();
        BandedSpd { n, bandwidth, bands }
    }

    /// Add `v` to `A[i][j]` (and its mirror); `|i - j|` must be within the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        debug_assert!(hi - lo <= self.bandwidth);
        self.bands[hi - lo][lo] += v;
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            y[i] += self.bands[0][i] * x[i];
        }
        for d in 1..=self.bandwidth {
            for j in 0..self.n.saturating_sub(d) {
                let v = self.bands[d][j];
                y[j + d] += v * x[j];
                y[j] += v * x[j + d];
            }
        }
        y
    }

    /// LDL^T factorization. Fails if a pivot drops below `min_pivot`
    /// (matrix not positive definite to working accuracy).
    pub fn ldlt(&self, min_pivot: f64) -> Result<BandedLdlt> {
        let n = self.n;
        let bw = self.bandwidth;
        let mut l: Vec<Vec<f64>> = (0..=bw).map(|d| vec![0.0; n - d.min(n)]).collect();
        let mut diag = vec![0.0; n];
        for j in 0..n {
            let mut dj = self.bands[0][j];
            for p in j.saturating_sub(bw)..j {
                let ljp = l[j - p][p];
                dj -= ljp * ljp * diag[p];
            }
            if !(dj > min_pivot) {
                return Err(Error::numerics(format!(
                    "banded LDL^T: pivot {dj:.3e} at row {j} below {min_pivot:.3e}"
                )));
            }
            diag[j] = dj;
            for d in 1..=bw {
                let i = j + d;
                if i >= n {
                    break;
                }
                let mut v = self.bands[d][j];
                for p in i.saturating_sub(bw)..j {
                    v -= l[i - p][p] * l[j - p][p] * diag[p];
                }
                l[d][j] = v / dj;
            }
        }
        Ok(BandedLdlt { n, bandwidth: bw, l, diag })
    }
}

#[derive(Debug, Clone)]
pub struct BandedLdlt {
    n: usize,
    bandwidth: usize,
    l: Vec<Vec<f64>>,
    diag: Vec<f64>,
}

impl BandedLdlt {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let (n, bw) = (self.n, self.bandwidth);
        let mut x = rhs.to_vec();
        for i in 0..n {
            let mut acc = x[i];
            for p in i.saturating_sub(bw)..i {
                acc -= self.l[i - p][p] * x[p];
            }
            x[i] = acc;
        }
        for i in 0..n {
            x[i] /= self.diag[i];
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for d in 1..=bw {
                if i + d < n {
                    acc -= self.l[d][i] * x[i + d];
                }
            }
            x[i] = acc;
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_int, Rational};

    #[test]
    fn exact_solve_small_system() {
        // [[2,1],[1,3]] x = [5, 10] -> x = [1, 3]
        let a = vec![vec![rat_int(2), rat_int(1)], vec![rat_int(1), rat_int(3)]];
        let b = vec![rat_int(5), rat_int(10)];
        let x = solve_dense(a, b).unwrap();
        assert_eq!(x, vec![rat_int(1), rat_int(3)]);
    }

    #[test]
    fn exact_solve_needs_pivot() {
        // Leading zero pivot forces the row swap.
        let a = vec![vec![rat_int(0), rat_int(1)], vec![rat_int(1), rat_int(0)]];
        let b = vec![rat(1, 2), rat(1, 3)];
        let x = solve_dense(a, b).unwrap();
        assert_eq!(x, vec![rat(1, 3), rat(1, 2)]);
    }

    #[test]
    fn singular_matrix_rejected() {
        let a = vec![vec![rat_int(1), rat_int(2)], vec![rat_int(2), rat_int(4)]];
        let b = vec![rat_int(1), rat_int(2)];
        assert!(solve_dense(a, b).is_err());
    }

    #[test]
    fn refined_solve_matches_exact() {
        // Pascal-flavored ill-conditioned 6x6 system, exact answer via rationals.
        let n = 6;
        let af: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| crate::rational::binomial(i + j, i).to_string().parse().unwrap()).collect())
            .collect();
        let bf: Vec<f64> = (0..n).map(|i| (i + 1) as f64).collect();
        let ar: Vec<Vec<Rational>> = (0..n)
            .map(|i| (0..n).map(|j| Rational::from_integer(crate::rational::binomial(i + j, i))).collect())
            .collect();
        let br: Vec<Rational> = (0..n).map(|i| rat_int(i as i64 + 1)).collect();
        let xf = solve_refined(&af, &bf).unwrap();
        let xr = solve_dense(ar, br).unwrap();
        for (f, r) in xf.iter().zip(&xr) {
            let exact = crate::rational::Scalar::to_f64(r);
            assert!((f - exact).abs() <= 1e-9 * (1.0 + exact.abs()), "{f} vs {exact}");
        }
    }

    #[test]
    fn banded_ldlt_solves_tridiagonal() {
        // -u'' discretization plus identity: diag 3, off-diag -1, n=50.
        let n = 50;
        let mut a = BandedSpd::zeros(n, 1);
        for i in 0..n {
            a.add(i, i, 3.0);
        }
        for i in 0..n - 1 {
            a.add(i + 1, i, -1.0);
        }
        let x_true: Vec<f64> = (0..n).map(|i| ((i * 7919) % 23) as f64 / 23.0 - 0.4).collect();
        let rhs = a.mul_vec(&x_true);
        let x = a.ldlt(0.0).unwrap().solve(&rhs);
        for (xi, ti) in x.iter().zip(&x_true) {
            assert!((xi - ti).abs() < 1e-12);
        }
    }

    #[test]
    fn banded_ldlt_wider_band_matches_dense() {
        // Random SPD band matrix with bandwidth 3 via B^T B + I on band structure.
        let n = 24;
        let bw = 3;
        let mut a = BandedSpd::zeros(n, bw);
        let mut seed = 42u64;
        let mut rng = move || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 33) as f64) / (u32::MAX as f64) - 0.5
        };
        for i in 0..n {
            a.add(i, i, 4.0 + rng().abs());
            for d in 1..=bw {
                if i + d < n {
                    a.add(i + d, i, rng());
                }
            }
        }
        // Dense mirror.
        let mut dense = vec![vec![0.0; n]; n];
        for i in 0..n {
            dense[i][i] = a.bands[0][i];
        }
        for d in 1..=bw {
            for j in 0..n - d {
                dense[j + d][j] = a.bands[d][j];
                dense[j][j + d] = a.bands[d][j];
            }
        }
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let xb = a.ldlt(0.0).unwrap().solve(&rhs);
        let xd = solve_refined(&dense, &rhs).unwrap();
        for (b, d) in xb.iter().zip(&xd) {
            assert!((b - d).abs() < 1e-10);
        }
    }

    #[test]
    fn non_spd_rejected() {
        let mut a = BandedSpd::zeros(3, 1);
        a.add(0, 0, 1.0);
        a.add(1, 1, -2.0);
        a.add(2, 2, 1.0);
        assert!(a.ldlt(0.0).is_err());
    }
}
