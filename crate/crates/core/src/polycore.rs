//! Dense complex polynomials: Horner evaluation, differentiation, arithmetic,
//! and a companion-matrix root finder.
//!
//! Every higher module stores its polynomial data (discriminants, the
//! `alpha`/`beta`/`gamma` triple of a periodic m-function, first/second kind
//! recurrence polynomials) as a [`Poly`].

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative tolerance under which nearby roots are merged into one cluster
/// and reported with multiplicity. Band edges and closed gaps produce exact
/// double roots, which the QR eigensolver splits by about `sqrt(eps)`.
pub const ROOT_CLUSTER_TOL: f64 = 1e-8;

/// Dense polynomial with complex coefficients in ascending degree order.
///
/// The zero polynomial is the empty coefficient list (degree −1). Trailing
/// coefficients are trimmed only when they are exactly zero: inputs here are
/// constructed, not measured, so no epsilon trim is applied.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<Complex64>,
}

impl Poly {
    /// Builds a polynomial from ascending coefficients, trimming exact-zero
    /// leading terms.
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.last().is_some_and(|c| c.re == 0.0 && c.im == 0.0) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Poly::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Poly::from_real(&[1.0])
    }

    pub fn constant(c: Complex64) -> Self {
        Poly::new(vec![c])
    }

    /// The monomial `z`.
    pub fn x() -> Self {
        Poly::from_real(&[0.0, 1.0])
    }

    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut p = Poly::one();
        for &r in roots {
            p = &p * &Poly::new(vec![-r, Complex64::new(1.0, 0.0)]);
        }
        p
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Degree, with the zero polynomial at −1.
    pub fn degree(&self) -> isize {
        self.coeffs.len() as isize - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn leading(&self) -> Option<Complex64> {
        self.coeffs.last().copied()
    }

    /// Horner evaluation; deterministic left-to-right accumulation.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    /// Coefficientwise derivative.
    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::zero();
        }
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    pub fn scale(&self, s: Complex64) -> Poly {
        Poly::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    /// Real parts of the coefficients, if all imaginary parts vanish within
    /// `tol` relative to the coefficient scale.
    pub fn real_coeffs(&self, tol: f64) -> Option<Vec<f64>> {
        let scale = self.coeff_scale().max(1.0);
        if self.coeffs.iter().all(|c| c.im.abs() <= tol * scale) {
            Some(self.coeffs.iter().map(|c| c.re).collect())
        } else {
            None
        }
    }

    /// Max coefficient magnitude (0 for the zero polynomial).
    pub fn coeff_scale(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// All `degree` roots with multiplicity, via a balanced companion matrix,
    /// QR eigenvalues, and one Newton polish step per root. Roots closer
    /// than `ROOT_CLUSTER_TOL * (1 + |r|)` are merged and reported with
    /// multiplicity. Sorted by (real part, imaginary part) ascending.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        let n = self.degree();
        if n < 1 {
            return Err(Error::NoRootsDefined(n));
        }
        let n = n as usize;
        if n == 1 {
            return Ok(vec![-self.coeffs[0] / self.coeffs[1]]);
        }

        // Monic normalization, then the Frobenius companion matrix.
        let lead = self.coeffs[n];
        let monic: Vec<Complex64> = self.coeffs[..n].iter().map(|&c| c / lead).collect();
        let mut comp = DMatrix::<Complex64>::zeros(n, n);
        for i in 1..n {
            comp[(i, i - 1)] = Complex64::new(1.0, 0.0);
        }
        for i in 0..n {
            comp[(i, n - 1)] = -monic[i];
        }
        balance_in_place(&mut comp);

        let eigs = comp
            .schur()
            .eigenvalues()
            .ok_or_else(|| Error::Invalid("companion eigenvalue iteration failed".into()))?;

        let deriv = self.derivative();
        let mut roots: Vec<Complex64> = eigs
            .iter()
            .map(|&r| {
                // One Newton step, kept only if it does not increase |p|.
                let d = deriv.eval(r);
                if d.norm() > 0.0 {
                    let cand = r - self.eval(r) / d;
                    if self.eval(cand).norm() <= self.eval(r).norm() {
                        return cand;
                    }
                }
                r
            })
            .collect();

        sort_complex(&mut roots);
        let mut clustered = cluster_roots(&roots);
        sort_complex(&mut clustered);
        Ok(clustered)
    }

    /// Interpolating polynomial through the given (node, value) pairs, by
    /// Newton divided differences. Nodes must be pairwise distinct.
    pub fn interpolate(points: &[(Complex64, Complex64)]) -> Poly {
        let n = points.len();
        if n == 0 {
            return Poly::zero();
        }
        let xs: Vec<Complex64> = points.iter().map(|p| p.0).collect();
        let mut dd: Vec<Complex64> = points.iter().map(|p| p.1).collect();
        for k in 1..n {
            for i in (k..n).rev() {
                dd[i] = (dd[i] - dd[i - 1]) / (xs[i] - xs[i - k]);
            }
        }
        // Horner assembly of the Newton form.
        let mut p = Poly::constant(dd[n - 1]);
        for i in (0..n - 1).rev() {
            p = &(&p * &Poly::new(vec![-xs[i], Complex64::new(1.0, 0.0)])) + &Poly::constant(dd[i]);
        }
        p
    }
}

/// Sort by (re, im) ascending with a total order on f64.
pub fn sort_complex(values: &mut [Complex64]) {
    values.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

fn cluster_roots(sorted: &[Complex64]) -> Vec<Complex64> {
    let n = sorted.len();
    let mut assigned = vec![false; n];
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        if assigned[i] {
            continue;
        }
        let mut members = vec![sorted[i]];
        assigned[i] = true;
        // Grow the cluster transitively against its running mean.
        let mut changed = true;
        while changed {
            changed = false;
            let mean = members.iter().sum::<Complex64>() / members.len() as f64;
            let tol = ROOT_CLUSTER_TOL * (1.0 + mean.norm());
            for (j, &r) in sorted.iter().enumerate() {
                if !assigned[j] && (r - mean).norm() <= tol {
                    members.push(r);
                    assigned[j] = true;
                    changed = true;
                }
            }
        }
        let mean = members.iter().sum::<Complex64>() / members.len() as f64;
        for _ in 0..members.len() {
            out.push(mean);
        }
    }
    out
}

/// Parlett–Reinsch style balancing with powers of two (no rounding error).
fn balance_in_place(m: &mut DMatrix<Complex64>) {
    let n = m.nrows();
    for _sweep in 0..8 {
        let mut converged = true;
        for i in 0..n {
            let mut row_norm = 0.0;
            let mut col_norm = 0.0;
            for j in 0..n {
                if j != i {
                    row_norm += m[(i, j)].norm();
                    col_norm += m[(j, i)].norm();
                }
            }
            if row_norm == 0.0 || col_norm == 0.0 {
                continue;
            }
            let mut factor = 1.0f64;
            let mut c = col_norm;
            let mut r = row_norm;
            while c < r / 2.0 {
                c *= 2.0;
                r /= 2.0;
                factor *= 2.0;
            }
            while c > r * 2.0 {
                c /= 2.0;
                r *= 2.0;
                factor /= 2.0;
            }
            if factor != 1.0 {
                converged = false;
                for j in 0..n {
                    m[(i, j)] /= factor;
                }
                for j in 0..n {
                    m[(j, i)] *= factor;
                }
            }
        }
        if converged {
            break;
        }
    }
}

impl std::ops::Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (i, &c) in self.coeffs.iter().enumerate() {
            out[i] += c;
        }
        for (i, &c) in rhs.coeffs.iter().enumerate() {
            out[i] += c;
        }
        Poly::new(out)
    }
}

impl std::ops::Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (i, &c) in self.coeffs.iter().enumerate() {
            out[i] += c;
        }
        for (i, &c) in rhs.coeffs.iter().enumerate() {
            out[i] -= c;
        }
        Poly::new(out)
    }
}

impl std::ops::Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }
}


#[cfg(test)]
mod prop_tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_coeff() -> impl Strategy<Value = Complex64> {
        // Coefficients in the unit disc.
        (-1.0f64..1.0, -1.0f64..1.0)
            .prop_map(|(re, im)| Complex64::new(re, im))
            .prop_filter("unit disc", |z| z.norm() <= 1.0)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn root_residuals_are_small(coeffs in prop::collection::vec(arb_coeff(), 2..=13)) {
            let p = Poly::new(coeffs);
            prop_assume!(p.degree() >= 1);
            prop_assume!(p.leading().unwrap().norm() > 1e-3);
            let scale = p.coeff_scale();
            for r in p.roots().unwrap() {
                let bound = scale * (1.0f64.max(r.norm())).powi(p.degree() as i32);
                prop_assert!(p.eval(r).norm() / bound <= 1e-9);
            }
        }

        #[test]
        fn derivative_matches_central_difference(
            coeffs in prop::collection::vec(arb_coeff(), 1..=10),
            zre in -2.0f64..2.0,
            zim in -2.0f64..2.0,
        ) {
            let p = Poly::new(coeffs);
            let z = Complex64::new(zre, zim);
            let h = 1e-6 * 1.0f64.max(z.norm());
            let fd = (p.eval(z + Complex64::new(h, 0.0)) - p.eval(z - Complex64::new(h, 0.0)))
                / Complex64::new(2.0 * h, 0.0);
            let d = p.derivative().eval(z);
            let denom = d.norm().max(1.0);
            prop_assert!((d - fd).norm() / denom <= 1e-6);
        }

        #[test]
        fn real_poly_roots_closed_under_conjugation(
            coeffs in prop::collection::vec(-1.0f64..1.0, 2..=9),
        ) {
            let p = Poly::from_real(&coeffs);
            prop_assume!(p.degree() >= 1);
            prop_assume!(p.leading().unwrap().norm() > 1e-3);
            let roots = p.roots().unwrap();
            for r in &roots {
                let conj_hit = roots
                    .iter()
                    .any(|s| (s - r.conj()).norm() <= 1e-8 * (1.0 + r.norm()));
                prop_assert!(conj_hit);
            }
        }
    }
}
