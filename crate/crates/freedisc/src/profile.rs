//! Optimal transition profiles and their constants.
//!
//! The order-k profile problem: among functions v on (-T/2, T/2) with
//! prescribed endpoint jets, minimize the square integral of the k-th
//! derivative. The Euler-Lagrange equation is v^(2k) = 0, so the minimizer is
//! the degree-(2k-1) Hermite interpolant of the jets. Adding the interval
//! length and optimizing over T yields the jump constants m_k; box-bounding
//! the endpoint derivatives yields the constrained constants m_k^n(N).
//!
//! Boundary systems are solved in exact rational arithmetic by default
//! (monomial Hermite matrices are ill-conditioned beyond k of about 6); the
//! floating backend normalizes the system to a Pascal-type integer matrix so
//! partial-pivoted elimination stays accurate, and is cross-validated against
//! the exact backend in tests.

use crate::error::{Error, Result};
use crate::linsolve::solve_dense;
use crate::poly::Polynomial;
use crate::qp::BoxQp;
use crate::rational::{rat_string, Rational, Scalar};
use crate::search::{bisect_root, multistart_log_golden};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::cell::RefCell;
use std::collections::BTreeMap;
use std::sync::{Mutex, OnceLock};

/// Exact-arithmetic degree cap; profiles have degree 2k-1.
pub const MAX_K: usize = 16;

/// Endpoint data for the profile problem on (-T/2, T/2).
#[derive(Debug, Clone)]
pub struct BoundarySpec<S> {
    pub k: usize,
    /// Jump z: order-0 endpoint values are -z/2 on the left, +z/2 on the right.
    pub jump: S,
    /// Equality values for derivative orders 1..=k-1: order -> (left, right).
    pub exact_values: BTreeMap<usize, (S, S)>,
    /// Orders constrained by a symmetric box in the constrained problem.
    pub boxed_orders: Vec<usize>,
    /// Box half-width (1/N) for the boxed orders.
    pub bound: Option<S>,
}

impl<S: Scalar> BoundarySpec<S> {
    /// Pure jump profile: value +-z/2, all derivative jets zero.
    pub fn jump_only(k: usize, jump: S) -> Result<Self> {
        Self::with_jets(k, jump, &[])
    }

    /// Jump plus explicit derivative jets; unspecified orders default to zero.
    pub fn with_jets(k: usize, jump: S, jets: &[(usize, S, S)]) -> Result<Self> {
        if k < 1 || k > MAX_K {
            return Err(Error::validation(format!("k must be in 1..={MAX_K}, got {k}")));
        }
        let mut exact_values = BTreeMap::new();
        for ell in 1..k {
            exact_values.insert(ell, (S::zero(), S::zero()));
        }
        for (ell, l, r) in jets {
            if *ell == 0 || *ell >= k {
                return Err(Error::validation(format!(
                    "jet order {ell} outside 1..={} for k={k}",
                    k - 1
                )));
            }
            exact_values.insert(*ell, (l.clone(), r.clone()));
        }
        Ok(BoundarySpec { k, jump, exact_values, boxed_orders: vec![], bound: None })
    }

    fn validate_equality(&self, k: usize) -> Result<()> {
        if self.k != k {
            return Err(Error::validation("BoundarySpec.k disagrees with operation k"));
        }
        for ell in 1..k {
            if !self.exact_values.contains_key(&ell) {
                return Err(Error::validation(format!(
                    "equality profile needs a jet value for order {ell}"
                )));
            }
        }
        Ok(())
    }

    /// Odd profiles satisfy v^(l)(-T/2) = (-1)^(l+1) v^(l)(T/2).
    fn is_odd_symmetric(&self) -> bool {
        self.exact_values.iter().all(|(ell, (l, r))| {
            let mirrored = if ell % 2 == 1 { r.clone() } else { -r.clone() };
            *l == mirrored
        })
    }
}

fn binom_i64(n: usize, k: usize) -> i64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: i128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as i128 / (i + 1) as i128;
    }
    acc as i64
}

fn fact_i64(n: usize) -> i64 {
    (2..=n as i64).product::<i64>().max(1)
}

fn s_pow<S: Scalar>(base: &S, exp: usize) -> S {
    let mut acc = S::one();
    for _ in 0..exp {
        acc = acc * base.clone();
    }
    acc
}

/// One refinement pass on top of the dense solve; exact arithmetic passes
/// through unchanged (zero residual), floats gain a couple of digits.
fn solve_refined_generic<S: Scalar>(a: &[Vec<S>], b: &[S]) -> Result<Vec<S>> {
    let x0 = solve_dense(a.to_vec(), b.to_vec())?;
    let n = b.len();
    let mut r = vec![S::zero(); n];
    for i in 0..n {
        let mut acc = -b[i].clone();
        for j in 0..n {
            acc = acc + a[i][j].clone() * x0[j].clone();
        }
        r[i] = acc;
    }
    let dx = solve_dense(a.to_vec(), r)?;
    Ok((0..n).map(|i| x0[i].clone() - dx[i].clone()).collect())
}

/// The unique degree-(2k-1) polynomial matching the requested boundary jet on
/// (-T/2, T/2); global minimizer of the k-th derivative square integral
/// under those conditions. Equality-constrained case only.
pub fn hermite_profile<S: Scalar>(k: usize, spec: &BoundarySpec<S>, t: S) -> Result<Polynomial<S>> {
    if k < 1 || k > MAX_K {
        return Err(Error::validation(format!("k must be in 1..={MAX_K}, got {k}")));
    }
    if t <= S::zero() {
        return Err(Error::validation("profile interval length T must be positive"));
    }
    spec.validate_equality(k)?;
    let hw = t.clone() / S::from_int(2);
    let two = S::from_int(2);

    let jet_right = |ell: usize| -> S {
        if ell == 0 {
            spec.jump.clone() / two.clone()
        } else {
            spec.exact_values[&ell].1.clone()
        }
    };
    let jet_left = |ell: usize| -> S {
        if ell == 0 {
            -spec.jump.clone() / two.clone()
        } else {
            spec.exact_values[&ell].0.clone()
        }
    };

    // Column scaling u_j = c_j * hw^j and row scaling by l!/hw^l turn the
    // boundary matrix into Pascal-type integers C(j, l), independent of T.
    let mut coeffs = vec![S::zero(); 2 * k];
    if spec.is_odd_symmetric() {
        // Odd monomials j = 2m+1 only; conditions at +T/2 suffice.
        let mut a = vec![vec![S::zero(); k]; k];
        let mut rhs = vec![S::zero(); k];
        for ell in 0..k {
            for m in 0..k {
                a[ell][m] = S::from_int(binom_i64(2 * m + 1, ell));
            }
            rhs[ell] = jet_right(ell) * s_pow(&hw, ell) / S::from_int(fact_i64(ell));
        }
        let u = solve_refined_generic(&a, &rhs)?;
        for (m, um) in u.into_iter().enumerate() {
            coeffs[2 * m + 1] = um / s_pow(&hw, 2 * m + 1);
        }
    } else {
        let n = 2 * k;
        let mut a = vec![vec![S::zero(); n]; n];
        let mut rhs = vec![S::zero(); n];
        for ell in 0..k {
            for j in 0..n {
                let c = S::from_int(binom_i64(j, ell));
                a[ell][j] = c.clone();
                a[k + ell][j] = if (j - ell.min(j)) % 2 == 0 { c } else { -c };
            }
            let w = s_pow(&hw, ell) / S::from_int(fact_i64(ell));
            rhs[ell] = jet_right(ell) * w.clone();
            rhs[k + ell] = jet_left(ell) * w;
        }
        let u = solve_refined_generic(&a, &rhs)?;
        for (j, uj) in u.into_iter().enumerate() {
            coeffs[j] = uj / s_pow(&hw, j);
        }
    }

    let poly = Polynomial::new(coeffs, S::zero(), hw.clone())?;

    // Verify the full jet (both endpoints); exact backend must be exact, the
    // floating backend is allowed solver tolerance.
    let denom_scale = poly
        .coefficients
        .iter()
        .fold(S::zero(), |acc, c| acc + c.abs_val())
        .to_f64()
        .max(1.0);
    for ell in 0..k {
        let d = poly.derivative_n(ell);
        let right_err = (d.eval(&hw) - jet_right(ell)).to_f64().abs();
        let left_err = (d.eval(&(-hw.clone())) - jet_left(ell)).to_f64().abs();
        let tol = 1e-8 * denom_scale.max(jet_right(ell).to_f64().abs());
        if right_err > tol || left_err > tol {
            return Err(Error::numerics(format!(
                "hermite solve lost boundary condition at order {ell} (errors {right_err:.2e}/{left_err:.2e})"
            )));
        }
    }
    Ok(poly)
}

/// A_k: square integral of the k-th derivative of the unit-jump, zero-jet,
/// T = 1 profile, in exact rational arithmetic. The energy of the same
/// profile at length T is A_k * T^(1-2k).
pub fn profile_energy_constant(k: usize) -> Result<Rational> {
    static CACHE: OnceLock<Mutex<BTreeMap<usize, Rational>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(BTreeMap::new()));
    if let Some(v) = cache.lock().unwrap().get(&k) {
        return Ok(v.clone());
    }
    let spec = BoundarySpec::<Rational>::jump_only(k, Rational::one())?;
    let v1 = hermite_profile(k, &spec, Rational::one())?;
    let a_k = v1.derivative_n(k).integrate_square();
    cache.lock().unwrap().insert(k, a_k.clone());
    Ok(a_k)
}

/// Profile problem outcome: minimizing length, energy, profile polynomial and
/// the exact normalization constant A_k.
#[derive(Debug, Clone)]
pub struct ProfileResult {
    pub optimal_t: f64,
    pub energy: f64,
    pub profile: Polynomial<f64>,
    pub normalization_constant: Rational,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RationalJson {
    pub num: String,
    pub den: String,
}

/// JSON shape for profile results, shared by the CLI and experiment reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileJson {
    pub k: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub big_n: Option<u64>,
    pub b: f64,
    pub c: f64,
    #[serde(rename = "T_star")]
    pub t_star: f64,
    pub energy: f64,
    #[serde(rename = "A_k")]
    pub a_k: RationalJson,
    pub coefficients: Vec<f64>,
}

impl ProfileResult {
    pub fn to_json(&self, k: usize, n: Option<usize>, big_n: Option<u64>, b: f64, c: f64) -> ProfileJson {
        let parts: Vec<String> = rat_string(&self.normalization_constant)
            .split('/')
            .map(str::to_owned)
            .collect();
        ProfileJson {
            k,
            n,
            big_n,
            b,
            c,
            t_star: self.optimal_t,
            energy: self.energy,
            a_k: RationalJson { num: parts[0].clone(), den: parts[1].clone() },
            coefficients: self.profile.coefficients.clone(),
        }
    }
}

/// The jump constant m_k: exact minimizer of E(T) = T + A_k T^(1-2k),
/// optimal T = ((2k-1) A_k)^(1/2k), energy = 2k/(2k-1) * optimal T.
pub fn m_k(k: usize) -> Result<ProfileResult> {
    let a_k = profile_energy_constant(k)?;
    let af = a_k.to_f64();
    let t_star = ((2 * k - 1) as f64 * af).powf(1.0 / (2 * k) as f64);
    let energy = (2 * k) as f64 / (2 * k - 1) as f64 * t_star;
    let spec = BoundarySpec::<f64>::jump_only(k, 1.0)?;
    let profile = hermite_profile(k, &spec, t_star)?;
    Ok(ProfileResult { optimal_t: t_star, energy, profile, normalization_constant: a_k })
}

/// Scaled constant m_k^{b,c} for the energy b T + c * (k-th derivative term):
/// equals b^((2k-1)/2k) c^(1/2k) m_k.
pub fn m_k_general(k: usize, b: f64, c: f64) -> Result<ProfileResult> {
    if !(b > 0.0) || !(c > 0.0) || !b.is_finite() || !c.is_finite() {
        return Err(Error::validation("m_k_general needs finite b > 0 and c > 0"));
    }
    let base = m_k(k)?;
    let tk = 2 * k as i32;
    let t_star = ((2 * k - 1) as f64 * c * base.normalization_constant.to_f64() / b)
        .powf(1.0 / f64::from(tk));
    let energy = b.powf((2 * k - 1) as f64 / (2 * k) as f64) * c.powf(1.0 / (2 * k) as f64) * base.energy;
    let spec = BoundarySpec::<f64>::jump_only(k, 1.0)?;
    let profile = hermite_profile(k, &spec, t_star)?;
    Ok(ProfileResult {
        optimal_t: t_star,
        energy,
        profile,
        normalization_constant: base.normalization_constant,
    })
}

/// Exact rational Gram data of the boundary-jet energy quadratic form at T=1.
struct JetGram {
    /// orders (1..k-1) twice: index i covers (order, side) pairs, left first.
    orders: Vec<usize>,
    g: Vec<Vec<f64>>,
    lin: Vec<f64>,
    a_k: f64,
}

fn jet_gram(k: usize) -> Result<JetGram> {
    let one = Rational::one();
    let psi = hermite_profile(k, &BoundarySpec::<Rational>::jump_only(k, one.clone())?, one.clone())?;
    let psi_k = psi.derivative_n(k);
    let mut orders = Vec::new();
    let mut basis_k = Vec::new();
    for side in 0..2 {
        for ell in 1..k {
            let unit = if side == 0 {
                (ell, one.clone(), Rational::zero())
            } else {
                (ell, Rational::zero(), one.clone())
            };
            let spec = BoundarySpec::with_jets(k, Rational::zero(), &[unit])?;
            let phi = hermite_profile(k, &spec, one.clone())?;
            orders.push(ell);
            basis_k.push(phi.derivative_n(k));
        }
    }
    let d = basis_k.len();
    let mut g = vec![vec![0.0; d]; d];
    let mut lin = vec![0.0; d];
    for i in 0..d {
        for j in i..d {
            let v = basis_k[i].mul_same_interval(&basis_k[j]).integrate().to_f64();
            g[i][j] = v;
            g[j][i] = v;
        }
        lin[i] = psi_k.mul_same_interval(&basis_k[i]).integrate().to_f64();
    }
    Ok(JetGram { orders, g, lin, a_k: profile_energy_constant(k)?.to_f64() })
}

/// The constrained constant m_k^n(N): endpoint derivatives of orders 1..=n are
/// box-bounded by 1/N, orders n+1..k-1 stay free, and the interval length is
/// optimized by a seeded golden-section search.
pub fn m_k_constrained(k: usize, n: usize, big_n: u64) -> Result<ProfileResult> {
    if k < 2 || k > MAX_K {
        return Err(Error::validation(format!("m_k_constrained needs 2 <= k <= {MAX_K}")));
    }
    if n < 1 || n > k - 1 {
        return Err(Error::validation(format!("constrained orders n must satisfy 1 <= n <= {}", k - 1)));
    }
    if 2 * n < k {
        return Err(Error::validation(format!("need 2n >= k for a coercive problem (n={n}, k={k})")));
    }
    if big_n == 0 {
        return Err(Error::validation("N must be a positive integer"));
    }
    let gram = jet_gram(k)?;
    let d = gram.orders.len();
    let bound = 1.0 / big_n as f64;
    let base = m_k(k)?;
    let t_eq = base.optimal_t;
    let warm: RefCell<Option<Vec<f64>>> = RefCell::new(None);

    let inner = |t: f64| -> Result<(f64, Vec<f64>)> {
        let pow = |e: i32| t.powi(e);
        let shift = 1 - 2 * k as i32;
        let mut a = vec![vec![0.0; d]; d];
        for i in 0..d {
            for j in 0..d {
                a[i][j] = gram.g[i][j] * pow(gram.orders[i] as i32 + gram.orders[j] as i32 + shift);
            }
        }
        let b: Vec<f64> = (0..d)
            .map(|i| gram.lin[i] * pow(gram.orders[i] as i32 + shift))
            .collect();
        let mut lo = vec![f64::NEG_INFINITY; d];
        let mut hi = vec![f64::INFINITY; d];
        for i in 0..d {
            if gram.orders[i] <= n {
                lo[i] = -bound;
                hi[i] = bound;
            }
        }
        let qp = BoxQp { a, b, c0: gram.a_k * pow(shift), lo, hi };
        let start = warm.borrow().clone();
        let sol = qp.solve(start.as_deref())?;
        *warm.borrow_mut() = Some(sol.x.clone());
        Ok((sol.value, sol.x))
    };

    let objective = |t: f64| -> f64 {
        match inner(t) {
            Ok((v, _)) => t + v,
            Err(_) => f64::INFINITY,
        }
    };
    let (t_opt, energy) =
        multistart_log_golden(objective, 1e-3 * t_eq, 1e3 * t_eq, 64, 1e-10)?;
    if !energy.is_finite() {
        return Err(Error::numerics("constrained profile search failed at every seed"));
    }
    let (_, x_opt) = inner(t_opt)?;
    let jets: Vec<(usize, f64, f64)> = (0..k - 1)
        .map(|idx| (gram.orders[idx], x_opt[idx], x_opt[idx + (k - 1)]))
        .collect();
    let spec = BoundarySpec::with_jets(k, 1.0, &jets)?;
    let profile = hermite_profile(k, &spec, t_opt)?;
    Ok(ProfileResult {
        optimal_t: t_opt,
        energy,
        profile,
        normalization_constant: profile_energy_constant(k)?,
    })
}

/// Minimal transition cost over an interval of the given length with
/// prescribed endpoint jets (orders 0..k-1 each side):
/// length/eps + eps^(2k-1) * (k-th derivative square integral of the
/// jet-matching Hermite interpolant).
pub fn transition_cost(
    k: usize,
    eps: f64,
    interval_length: f64,
    left_jet: &[f64],
    right_jet: &[f64],
) -> Result<f64> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::validation("transition_cost needs eps > 0"));
    }
    if !(interval_length > 0.0) || !interval_length.is_finite() {
        return Err(Error::validation("transition_cost needs a positive interval length"));
    }
    if left_jet.len() != k || right_jet.len() != k {
        return Err(Error::validation(format!("jets must carry orders 0..{} (length {k})", k - 1)));
    }
    let jump = right_jet[0] - left_jet[0];
    let jets: Vec<(usize, f64, f64)> = (1..k).map(|ell| (ell, left_jet[ell], right_jet[ell])).collect();
    let spec = BoundarySpec::with_jets(k, jump, &jets)?;
    let v = hermite_profile(k, &spec, interval_length)?;
    let bending = v.derivative_n(k).integrate_square();
    Ok(interval_length / eps + eps.powi(2 * k as i32 - 1) * bending)
}

/// Calibration constant c_k with m_k^{1, c_k} = mu, found by scalar root
/// finding on the scaling law (closed form (mu/m_k)^(2k) serves as bracket
/// center and cross-check).
pub fn calibrate_c_k(k: usize, mu: f64) -> Result<f64> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::validation("calibrate_c_k needs mu > 0"));
    }
    let m = m_k(k)?.energy;
    let closed = (mu / m).powi(2 * k as i32);
    let f = |c: f64| match m_k_general(k, 1.0, c) {
        Ok(r) => r.energy - mu,
        Err(_) => f64::NAN,
    };
    bisect_root(f, closed * 0.5, closed * 2.0, 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_int};

    /// Test-local golden-section oracle, independent of crate::search.
    fn golden_oracle<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> (f64, f64) {
        let phi = 0.618_033_988_749_894_9;
        let mut x1 = hi - phi * (hi - lo);
        let mut x2 = lo + phi * (hi - lo);
        let (mut f1, mut f2) = (f(x1), f(x2));
        for _ in 0..200 {
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - phi * (hi - lo);
                f1 = f(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + phi * (hi - lo);
                f2 = f(x2);
            }
        }
        let x = 0.5 * (lo + hi);
        (x, f(x))
    }

    #[test]
    fn hermite_k1_is_linear_ramp() {
        let spec = BoundarySpec::<Rational>::jump_only(1, rat_int(1)).unwrap();
        let v = hermite_profile(1, &spec, rat_int(1)).unwrap();
        assert_eq!(v.coefficients, vec![rat_int(0), rat_int(1)]);
    }

    #[test]
    fn hermite_k2_matches_hand_solution() {
        // v(t) = -2 t^3 + (3/2) t on (-1/2, 1/2).
        let spec = BoundarySpec::<Rational>::jump_only(2, rat_int(1)).unwrap();
        let v = hermite_profile(2, &spec, rat_int(1)).unwrap();
        assert_eq!(v.coefficients, vec![rat_int(0), rat(3, 2), rat_int(0), rat_int(-2)]);
    }

    #[test]
    fn hermite_k3_matches_hand_solution() {
        // v(t) = 6 t^5 - 5 t^3 + (15/8) t on (-1/2, 1/2).
        let spec = BoundarySpec::<Rational>::jump_only(3, rat_int(1)).unwrap();
        let v = hermite_profile(3, &spec, rat_int(1)).unwrap();
        assert_eq!(
            v.coefficients,
            vec![rat_int(0), rat(15, 8), rat_int(0), rat_int(-5), rat_int(0), rat_int(6)]
        );
    }

    #[test]
    fn odd_profiles_have_no_even_coefficients() {
        for k in 1..=8 {
            let spec = BoundarySpec::<Rational>::jump_only(k, rat_int(1)).unwrap();
            let v = hermite_profile(k, &spec, rat(7, 3)).unwrap();
            for j in (0..v.coefficients.len()).step_by(2) {
                assert!(num_traits::Zero::is_zero(&v.coefficients[j]), "k={k} coeff {j}");
            }
        }
    }

    #[test]
    fn general_jets_satisfied_exactly() {
        // Asymmetric jets force the full 2k x 2k path.
        let jets = vec![(1, rat(1, 3), rat(-2, 5)), (2, rat_int(1), rat_int(1))];
        let spec = BoundarySpec::with_jets(3, rat(4, 7), &jets).unwrap();
        let v = hermite_profile(3, &spec, rat(5, 2)).unwrap();
        let hw = rat(5, 4);
        assert_eq!(v.eval(&hw), rat(2, 7));
        assert_eq!(v.eval(&(-hw.clone())), rat(-2, 7));
        assert_eq!(v.derivative().eval(&hw), rat(-2, 5));
        assert_eq!(v.derivative().eval(&(-hw.clone())), rat(1, 3));
        assert_eq!(v.derivative_n(2).eval(&hw), rat_int(1));
    }

    #[test]
    fn energy_constants_first_three() {
        assert_eq!(profile_energy_constant(1).unwrap(), rat_int(1));
        assert_eq!(profile_energy_constant(2).unwrap(), rat_int(12));
        assert_eq!(profile_energy_constant(3).unwrap(), rat_int(720));
    }

    #[test]
    fn energy_constants_match_factorial_identity() {
        // A_k = (2k-1)! (2k-2)! / ((k-1)!)^2; independent closed form used
        // only as a cross-check, never as the implementation path.
        use crate::rational::factorial;
        for k in 1..=10 {
            let expect = Rational::new(
                factorial(2 * k - 1) * factorial(2 * k - 2),
                factorial(k - 1) * factorial(k - 1),
            );
            assert_eq!(profile_energy_constant(k).unwrap(), expect, "k={k}");
        }
    }

    #[test]
    fn float_backend_matches_exact_a_k() {
        for k in 1..=8 {
            let spec = BoundarySpec::<f64>::jump_only(k, 1.0).unwrap();
            let v = hermite_profile(k, &spec, 1.0).unwrap();
            let float_ak = v.derivative_n(k).integrate_square();
            let exact = profile_energy_constant(k).unwrap().to_f64();
            assert!(
                (float_ak - exact).abs() <= 1e-12 * exact,
                "k={k}: float {float_ak} vs exact {exact}"
            );
        }
    }

    #[test]
    fn m_k_matches_golden_section_oracle() {
        for k in 1..=6 {
            let r = m_k(k).unwrap();
            let af = profile_energy_constant(k).unwrap().to_f64();
            let e = |t: f64| t + af * t.powi(1 - 2 * k as i32);
            let (t_oracle, m_oracle) = golden_oracle(e, 1e-3 * r.optimal_t, 1e3 * r.optimal_t);
            assert!((r.energy - m_oracle).abs() <= 1e-9 * m_oracle, "k={k}");
            assert!((r.optimal_t - t_oracle).abs() <= 1e-6 * t_oracle, "k={k}");
        }
    }

    #[test]
    fn m_k_known_values() {
        use approx::assert_relative_eq;
        assert_relative_eq!(m_k(1).unwrap().energy, 2.0, max_relative = 1e-14);
        assert_relative_eq!(m_k(1).unwrap().optimal_t, 1.0, max_relative = 1e-14);
        let m2 = (4.0 / 3.0) * 36f64.powf(0.25);
        assert_relative_eq!(m_k(2).unwrap().energy, m2, max_relative = 1e-13);
        let m3 = (6.0 / 5.0) * 3600f64.powf(1.0 / 6.0);
        assert_relative_eq!(m_k(3).unwrap().energy, m3, max_relative = 1e-13);
    }

    #[test]
    fn optimality_condition_at_t_star() {
        // E'(T) = 1 + (1-2k) A_k T^(-2k) vanishes at the returned optimum.
        for k in 1..=MAX_K {
            let r = m_k(k).unwrap();
            let af = r.normalization_constant.to_f64();
            let deriv = 1.0 + (1.0 - 2.0 * k as f64) * af * r.optimal_t.powi(-2 * k as i32);
            assert!(deriv.abs() <= 1e-12, "k={k}: E'(T*)={deriv:.3e}");
        }
    }

    #[test]
    fn m_k_general_scaling_examples() {
        let m2 = m_k(2).unwrap().energy;
        let r = m_k_general(2, 16.0, 1.0).unwrap();
        assert!((r.energy - 8.0 * m2).abs() < 1e-10 * m2);
        let r = m_k_general(2, 1.0, 16.0).unwrap();
        assert!((r.energy - 2.0 * m2).abs() < 1e-10 * m2);
        let r = m_k_general(3, 1.0, 1.0).unwrap();
        assert!((r.energy - m_k(3).unwrap().energy).abs() < 1e-14);
    }

    #[test]
    fn m_k_general_matches_direct_minimization() {
        let cases = [(2usize, 16.0, 1.0), (2, 1.0, 16.0), (3, 0.3, 2.5), (4, 5.0, 0.01)];
        for &(k, b, c) in &cases {
            let af = profile_energy_constant(k).unwrap().to_f64();
            let e = |t: f64| b * t + c * af * t.powi(1 - 2 * k as i32);
            let guess = ((2 * k - 1) as f64 * c * af / b).powf(1.0 / (2 * k) as f64);
            let (_, direct) = golden_oracle(e, 1e-3 * guess, 1e3 * guess);
            let r = m_k_general(k, b, c).unwrap();
            assert!((r.energy - direct).abs() <= 1e-8 * direct, "k={k} b={b} c={c}");
        }
    }

    #[test]
    fn transition_cost_constant_jets() {
        // v identically constant: only the length term remains.
        let jets = vec![5.0, 0.0, 0.0];
        let c = transition_cost(3, 0.25, 2.0, &jets, &jets).unwrap();
        assert!((c - 8.0).abs() < 1e-12);
    }

    #[test]
    fn transition_cost_optimal_jets_recover_m_k() {
        // Optimal profile jets at scale beta = eps |z|^(1/k), window beta*T*.
        for &(k, z, eps) in &[(2usize, 1.0f64, 0.01f64), (2, 0.3, 0.05), (3, 2.0, 0.02)] {
            let r = m_k(k).unwrap();
            let beta = eps * z.abs().powf(1.0 / k as f64);
            let len = beta * r.optimal_t;
            let left: Vec<f64> = (0..k).map(|l| if l == 0 { -z / 2.0 } else { 0.0 }).collect();
            let right: Vec<f64> = (0..k).map(|l| if l == 0 { z / 2.0 } else { 0.0 }).collect();
            let cost = transition_cost(k, eps, len, &left, &right).unwrap();
            let expect = r.energy * z.abs().powf(1.0 / k as f64);
            assert!((cost - expect).abs() <= 1e-10 * expect, "k={k} z={z} eps={eps}");
        }
    }

    #[test]
    fn jump_density_law_randomized() {
        // min over L of transition_cost equals m_k |z|^(1/k); simple LCG draws.
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut unit = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for k in 2..=4usize {
            for _ in 0..5 {
                let z = 10f64.powf(-3.0 + 6.0 * unit());
                let eps = 10f64.powf(-3.0 + 2.0 * unit());
                let r = m_k(k).unwrap();
                let beta = eps * z.powf(1.0 / k as f64);
                let left: Vec<f64> = (0..k).map(|l| if l == 0 { -z / 2.0 } else { 0.0 }).collect();
                let right: Vec<f64> = (0..k).map(|l| if l == 0 { z / 2.0 } else { 0.0 }).collect();
                let cost_at = |len: f64| transition_cost(k, eps, len, &left, &right).unwrap();
                let (_, best) = golden_oracle(cost_at, 1e-2 * beta * r.optimal_t, 1e2 * beta * r.optimal_t);
                let expect = r.energy * z.powf(1.0 / k as f64);
                assert!(
                    (best - expect).abs() <= 1e-8 * expect,
                    "k={k} z={z:.3e} eps={eps:.3e}: {best} vs {expect}"
                );
            }
        }
    }

    #[test]
    fn constrained_k2_n1_unit_box_hand_value() {
        // Closed-form reference: E(T) = T + 12 (sT - 1)^2 / T^3 with the slope
        // s clamped to [-1, 1]; interior optimum s = 1/T when T >= 1.
        let reference = {
            let e = |t: f64| {
                let s = (1.0 / t).clamp(-1.0, 1.0);
                t + 12.0 * (s * t - 1.0).powi(2) / t.powi(3)
            };
            golden_oracle(e, 1e-3, 1e3).1
        };
        let r = m_k_constrained(2, 1, 1).unwrap();
        assert!((r.energy - reference).abs() <= 1e-6 * reference, "{} vs {reference}", r.energy);
        assert!((r.energy - 0.98136).abs() < 5e-4);
    }

    #[test]
    fn constrained_large_n_approaches_m_k() {
        let m2 = m_k(2).unwrap().energy;
        let r = m_k_constrained(2, 1, 1_000_000).unwrap();
        assert!((r.energy - m2).abs() < 1e-3, "{} vs {m2}", r.energy);
        assert!(r.energy <= m2 + 1e-9);
    }

    #[test]
    fn constrained_monotone_in_n_small() {
        let e1 = m_k_constrained(3, 2, 1).unwrap().energy;
        let e2 = m_k_constrained(3, 2, 2).unwrap().energy;
        let m3 = m_k(3).unwrap().energy;
        assert!(e1 <= e2 + 1e-9, "{e1} vs {e2}");
        assert!(e2 <= m3 + 1e-9);
        assert!(e1 > 0.0);
    }

    #[test]
    fn constrained_rejects_bad_orders() {
        assert!(m_k_constrained(3, 1, 4).is_err()); // 2n < k
        assert!(m_k_constrained(2, 2, 4).is_err()); // n > k-1
        assert!(m_k_constrained(2, 1, 0).is_err()); // N = 0
    }

    #[test]
    fn calibrate_matches_closed_form() {
        for &(k, mu) in &[(2usize, 1.0), (2, 0.5), (3, 2.0), (4, 3.0), (6, 1.0)] {
            let m = m_k(k).unwrap().energy;
            let closed = (mu / m).powi(2 * k as i32);
            let c = calibrate_c_k(k, mu).unwrap();
            assert!((c - closed).abs() <= 1e-10 * closed, "k={k} mu={mu}");
        }
        // mu = m_k gives the identity calibration.
        let m2 = m_k(2).unwrap().energy;
        assert!((calibrate_c_k(2, m2).unwrap() - 1.0).abs() < 1e-10);
        // k=2, mu=1: exactly 81/9216.
        assert!((calibrate_c_k(2, 1.0).unwrap() - 81.0 / 9216.0).abs() < 1e-12);
    }

    #[test]
    fn profile_json_round_trip() {
        let r = m_k(2).unwrap();
        let j = r.to_json(2, None, None, 1.0, 1.0);
        let s = serde_json::to_string(&j).unwrap();
        assert!(s.contains("\"A_k\""));
        assert!(s.contains("\"T_star\""));
        let back: ProfileJson = serde_json::from_str(&s).unwrap();
        assert_eq!(back.a_k.num, "12");
        assert_eq!(back.a_k.den, "1");
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert!(hermite_profile(2, &BoundarySpec::<f64>::jump_only(2, 1.0).unwrap(), 0.0).is_err());
        assert!(transition_cost(2, -0.1, 1.0, &[0.0, 0.0], &[1.0, 0.0]).is_err());
        assert!(transition_cost(2, 0.1, 1.0, &[0.0], &[1.0, 0.0]).is_err());
        assert!(m_k_general(2, 0.0, 1.0).is_err());
        assert!(calibrate_c_k(2, -1.0).is_err());
        assert!(BoundarySpec::<f64>::jump_only(0, 1.0).is_err());
        assert!(BoundarySpec::<f64>::jump_only(MAX_K + 1, 1.0).is_err());
    }
}
