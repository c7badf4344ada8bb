//! Polynomials in the monomial basis centered at an interval midpoint.
//!
//! The centered representation keeps Hermite boundary systems well scaled: on
//! `[mid - hw, mid + hw]` every basis function is `(t - mid)^j`, so endpoint
//! jets only involve powers of `hw` and odd/even symmetry is visible in the
//! coefficients. Generic over [`Scalar`] so the same code serves the exact
//! rational path and the float path.

use crate::error::{Error, Result};
use crate::rational::Scalar;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial<S> {
    /// Coefficient of `(t - mid)^j` at index `j`.
    pub coefficients: Vec<S>,
    /// Interval midpoint.
    pub mid: S,
    /// Interval half-width; the polynomial's natural domain is `[mid - hw, mid + hw]`.
    pub half_width: S,
}

impl<S: Scalar> Polynomial<S> {
    pub fn new(coefficients: Vec<S>, mid: S, half_width: S) -> Result<Self> {
        if half_width <= S::zero() {
            return Err(Error::validation("polynomial half-width must be positive"));
        }
        if coefficients.is_empty() {
            return Err(Error::validation("polynomial needs at least one coefficient"));
        }
        Ok(Polynomial { coefficients, mid, half_width })
    }

    pub fn zero(mid: S, half_width: S) -> Self {
        Polynomial { coefficients: vec![S::zero()], mid, half_width }
    }

    /// Degree after trimming trailing zero coefficients (zero polynomial -> 0).
    pub fn degree(&self) -> usize {
        let mut d = self.coefficients.len() - 1;
        while d > 0 && self.coefficients[d].is_zero() {
            d -= 1;
        }
        d
    }

    pub fn eval(&self, t: &S) -> S {
        let x = t.clone() - self.mid.clone();
        let mut acc = S::zero();
        for c in self.coefficients.iter().rev() {
            acc = acc * x.clone() + c.clone();
        }
        acc
    }

    pub fn derivative(&self) -> Self {
        if self.coefficients.len() == 1 {
            return Self::zero(self.mid.clone(), self.half_width.clone());
        }
        let coeffs = self
            .coefficients
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, c)| S::from_int(j as i64) * c.clone())
            .collect();
        Polynomial { coefficients: coeffs, mid: self.mid.clone(), half_width: self.half_width.clone() }
    }

    pub fn derivative_n(&self, n: usize) -> Self {
        let mut p = self.clone();
        for _ in 0..n {
            p = p.derivative();
        }
        p
    }

    /// Antiderivative with value 0 at `mid`.
    pub fn antiderivative(&self) -> Self {
        let mut coeffs = vec![S::zero()];
        for (j, c) in self.coefficients.iter().enumerate() {
            coeffs.push(c.clone() / S::from_int((j + 1) as i64));
        }
        Polynomial { coefficients: coeffs, mid: self.mid.clone(), half_width: self.half_width.clone() }
    }

    /// Exact integral of the polynomial over its own interval.
    pub fn integrate(&self) -> S {
        // Odd powers of (t - mid) vanish by symmetry.
        let mut acc = S::zero();
        let hw2 = self.half_width.clone() * self.half_width.clone();
        let mut pow = self.half_width.clone(); // hw^(j+1) for even j
        let two = S::from_int(2);
        for j in (0..self.coefficients.len()).step_by(2) {
            acc = acc
                + two.clone() * self.coefficients[j].clone() * pow.clone()
                    / S::from_int((j + 1) as i64);
            pow = pow * hw2.clone();
        }
        acc
    }

    /// Exact integral of the square of the polynomial over its own interval.
    pub fn integrate_square(&self) -> S {
        self.mul_same_interval(self).integrate()
    }

    /// Product of two polynomials sharing the same centered interval.
    pub fn mul_same_interval(&self, other: &Self) -> Self {
        let mut coeffs = vec![S::zero(); self.coefficients.len() + other.coefficients.len() - 1];
        for (i, a) in self.coefficients.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coefficients.iter().enumerate() {
                coeffs[i + j] = coeffs[i + j].clone() + a.clone() * b.clone();
            }
        }
        Polynomial { coefficients: coeffs, mid: self.mid.clone(), half_width: self.half_width.clone() }
    }

    pub fn scale(&self, factor: &S) -> Self {
        let coeffs = self.coefficients.iter().map(|c| c.clone() * factor.clone()).collect();
        Polynomial { coefficients: coeffs, mid: self.mid.clone(), half_width: self.half_width.clone() }
    }

    pub fn add_same_interval(&self, other: &Self) -> Self {
        let n = self.coefficients.len().max(other.coefficients.len());
        let mut coeffs = vec![S::zero(); n];
        for (j, c) in self.coefficients.iter().enumerate() {
            coeffs[j] = coeffs[j].clone() + c.clone();
        }
        for (j, c) in other.coefficients.iter().enumerate() {
            coeffs[j] = coeffs[j].clone() + c.clone();
        }
        Polynomial { coefficients: coeffs, mid: self.mid.clone(), half_width: self.half_width.clone() }
    }

    /// Reparameterize by the affine map `t = shift + scale * s`, returning the
    /// polynomial in `s` centered at `new_mid` with half-width `new_hw`.
    ///
    /// Used to rescale transition profiles between the unit cell and a window
    /// of physical length; the map must send the new interval onto (a subset
    /// of) the old one for the domain to stay meaningful.
    pub fn compose_affine(&self, shift: &S, scale: &S, new_mid: S, new_hw: S) -> Result<Self> {
        if new_hw <= S::zero() {
            return Err(Error::validation("affine reparameterization needs positive half-width"));
        }
        // p(shift + scale*s) with x = s - new_mid: argument = (shift + scale*new_mid - mid) + scale*x.
        let a0 = shift.clone() + scale.clone() * new_mid.clone() - self.mid.clone();
        // Horner in the linear polynomial (a0 + scale*x).
        let mut acc = vec![S::zero()];
        for c in self.coefficients.iter().rev() {
            // acc = acc*(a0 + scale*x) + c
            let mut next = vec![S::zero(); acc.len() + 1];
            for (j, a) in acc.iter().enumerate() {
                next[j] = next[j].clone() + a.clone() * a0.clone();
                next[j + 1] = next[j + 1].clone() + a.clone() * scale.clone();
            }
            next[0] = next[0].clone() + c.clone();
            acc = next;
        }
        acc.truncate(self.coefficients.len().max(1));
        Polynomial::new(acc, new_mid, new_hw)
    }

    pub fn to_f64_poly(&self) -> Polynomial<f64> {
        Polynomial {
            coefficients: self.coefficients.iter().map(|c| c.to_f64()).collect(),
            mid: self.mid.to_f64(),
            half_width: self.half_width.to_f64(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_int, Rational};

    fn p64(coeffs: &[f64]) -> Polynomial<f64> {
        Polynomial::new(coeffs.to_vec(), 0.0, 1.0).unwrap()
    }

    #[test]
    fn eval_and_derivative() {
        // p(t) = 1 + 2t + 3t^2 centered at 0
        let p = p64(&[1.0, 2.0, 3.0]);
        assert_eq!(p.eval(&2.0), 1.0 + 4.0 + 12.0);
        let d = p.derivative();
        assert_eq!(d.eval(&2.0), 2.0 + 12.0);
        assert_eq!(p.derivative_n(2).eval(&0.5), 6.0);
        assert_eq!(p.derivative_n(3).degree(), 0);
    }

    #[test]
    fn integrate_exact_rational() {
        // t^2 on [-1/2, 1/2]: integral 1/12, square integral 1/80.
        let p = Polynomial::new(
            vec![rat_int(0), rat_int(0), rat_int(1)],
            rat_int(0),
            rat(1, 2),
        )
        .unwrap();
        assert_eq!(p.integrate(), rat(1, 12));
        assert_eq!(p.integrate_square(), rat(1, 80));
    }

    #[test]
    fn integrate_uses_centered_interval() {
        // Constant 1 centered at 5 with half-width 3: integral 6.
        let p = Polynomial::new(vec![rat_int(1)], rat_int(5), rat_int(3)).unwrap();
        assert_eq!(p.integrate(), rat_int(6));
    }

    #[test]
    fn compose_affine_matches_pointwise() {
        // p(t) = t^3 - t on [-2, 2]; q(s) = p(1 + 0.5 s) on s in [-1, 1].
        let p = Polynomial::new(vec![0.0, -1.0, 0.0, 1.0], 0.0, 2.0).unwrap();
        let q = p.compose_affine(&1.0, &0.5, 0.0, 1.0).unwrap();
        for i in 0..=10 {
            let s = -1.0 + 0.2 * i as f64;
            let expect = {
                let t: f64 = 1.0 + 0.5 * s;
                t.powi(3) - t
            };
            assert!((q.eval(&s) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn antiderivative_inverts_derivative() {
        let p = p64(&[2.0, -3.0, 0.5, 4.0]);
        let back = p.antiderivative().derivative();
        for (a, b) in back.coefficients.iter().zip(&p.coefficients) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn rational_float_agreement() {
        let pr = Polynomial::new(
            vec![rat(1, 3), rat(-2, 7), rat(5, 11), rat(4, 13)],
            rat_int(0),
            rat(3, 2),
        )
        .unwrap();
        let pf = pr.to_f64_poly();
        let exact: Rational = pr.integrate_square();
        assert!((exact.to_f64() - pf.integrate_square()).abs() < 1e-14);
    }

    use proptest::prelude::*;

    fn rational_poly() -> impl Strategy<Value = Polynomial<Rational>> {
        (
            proptest::collection::vec((-9i64..=9, 1i64..=6), 1..=7),
            -4i64..=4,
            (1i64..=5, 1i64..=3),
        )
            .prop_map(|(coeffs, mid, (hn, hd))| {
                Polynomial::new(
                    coeffs.into_iter().map(|(n, d)| rat(n, d)).collect(),
                    rat_int(mid),
                    rat(hn, hd),
                )
                .unwrap()
            })
    }

    proptest! {
        // Exact in the rational backend: no tolerance on any of these.
        #[test]
        fn prop_derivative_undoes_antiderivative(p in rational_poly()) {
            let back = p.antiderivative().derivative();
            for i in -4i64..=4 {
                let t = rat(i, 3) + p.mid.clone();
                prop_assert_eq!(back.eval(&t), p.eval(&t));
            }
        }

        #[test]
        fn prop_square_integral_nonnegative(p in rational_poly()) {
            prop_assert!(p.integrate_square() >= rat_int(0));
        }

        #[test]
        fn prop_affine_reparametrization_is_pointwise(
            p in rational_poly(),
            shift in -3i64..=3,
            scale in 1i64..=4,
            s_num in -8i64..=8,
        ) {
            let shift = rat_int(shift);
            let scale = rat(scale, 2);
            let q = p.compose_affine(&shift, &scale, rat_int(0), rat_int(1)).unwrap();
            let s = rat(s_num, 4);
            let t = shift + scale * s.clone();
            prop_assert_eq!(q.eval(&s), p.eval(&t));
        }
    }
}
