//! Periodic coefficient data: the discriminant polynomial, band/gap
//! structure, branch-labeled preimages of the discriminant, logarithmic
//! capacity, and the isospectral-torus membership test.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::jacobi::PerturbedJacobi;
use crate::polycore::{sort_complex, Poly, ROOT_CLUSTER_TOL};

/// Deviation threshold for the torus membership test.
pub const TORUS_TOL: f64 = 1e-10;

/// Absolute-relative tolerance for treating a point as a critical value of
/// the discriminant.
pub const CRITICAL_TOL: f64 = 1e-10;

/// Period-p coefficient pair defining a point of an isospectral torus.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicJacobi {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl PeriodicJacobi {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.is_empty() || a.len() != b.len() {
            return Err(Error::Invalid(format!(
                "period arrays must be nonempty and equal length ({} vs {})",
                a.len(),
                b.len()
            )));
        }
        for &x in &a {
            if !x.is_finite() || x <= 0.0 {
                return Err(Error::CouplingNotPositive(x));
            }
        }
        Ok(PeriodicJacobi { a, b })
    }

    /// `a ≡ 1`, `b ≡ 0` with period 1.
    pub fn free() -> Self {
        PeriodicJacobi {
            a: vec![1.0],
            b: vec![0.0],
        }
    }

    pub fn period(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// Coefficients shifted by `k`: the rolled operator's index 1 is this
    /// operator's index `k + 1`.
    pub fn rolled(&self, k: usize) -> Self {
        let p = self.period();
        let k = k % p;
        let mut a = Vec::with_capacity(p);
        let mut b = Vec::with_capacity(p);
        for i in 0..p {
            a.push(self.a[(i + k) % p]);
            b.push(self.b[(i + k) % p]);
        }
        PeriodicJacobi { a, b }
    }

    /// View as a semi-infinite operator with empty prefix.
    pub fn as_operator(&self) -> PerturbedJacobi {
        PerturbedJacobi::from_periodic(self.clone())
    }

    /// Trace of the ordered transfer-matrix product
    /// `prod_{j=p..1} (1/a_j) [[z - b_j, -1], [a_j^2, 0]]`,
    /// a degree-p polynomial with real coefficients and leading coefficient
    /// `1/(a_1 ... a_p)`.
    pub fn discriminant(&self) -> Poly {
        let p = self.period();
        let mut m = Mat2Poly::identity();
        for j in 1..=p {
            let a = self.a[j - 1];
            let b = self.b[j - 1];
            let step = Mat2Poly {
                e: [
                    [
                        Poly::from_real(&[-b / a, 1.0 / a]),
                        Poly::from_real(&[-1.0 / a]),
                    ],
                    [Poly::from_real(&[a]), Poly::zero()],
                ],
            };
            m = step.mul(&m); // left-multiplication accumulates j = p .. 1
        }
        &m.e[0][0] + &m.e[1][1]
    }
}

struct Mat2Poly {
    e: [[Poly; 2]; 2],
}

impl Mat2Poly {
    fn identity() -> Self {
        Mat2Poly {
            e: [[Poly::one(), Poly::zero()], [Poly::zero(), Poly::one()]],
        }
    }

    fn mul(&self, rhs: &Mat2Poly) -> Mat2Poly {
        let mut out = Mat2Poly {
            e: [[Poly::zero(), Poly::zero()], [Poly::zero(), Poly::zero()]],
        };
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = Poly::zero();
                for k in 0..2 {
                    acc = &acc + &(&self.e[i][k] * &rhs.e[k][j]);
                }
                out.e[i][j] = acc;
            }
        }
        out
    }
}

/// A gap between consecutive bands, with its open/closed flag.
#[derive(Debug, Clone, PartialEq)]
pub struct Gap {
    pub lo: f64,
    pub hi: f64,
    pub closed: bool,
}

/// Bands, gaps, critical data and capacity carried by a discriminant.
#[derive(Debug, Clone)]
pub struct BandStructure {
    /// Closed real intervals, ascending, disjoint up to touching.
    pub bands: Vec<(f64, f64)>,
    pub gaps: Vec<Gap>,
    /// Real critical points of the discriminant, ascending (one per gap).
    pub gamma: Vec<f64>,
    /// Discriminant values at the critical points.
    pub critical_values: Vec<f64>,
    /// Leading coefficient of the discriminant.
    pub c0: f64,
    /// Logarithmic capacity `|c0|^(-1/p)`.
    pub capacity: f64,
}

impl BandStructure {
    /// True when `x` lies in some band, within `tol` absolutely.
    pub fn contains(&self, x: f64, tol: f64) -> bool {
        self.bands
            .iter()
            .any(|&(lo, hi)| x >= lo - tol && x <= hi + tol)
    }

    pub fn x_min(&self) -> f64 {
        self.bands.first().map(|b| b.0).unwrap_or(0.0)
    }

    pub fn x_max(&self) -> f64 {
        self.bands.last().map(|b| b.1).unwrap_or(0.0)
    }

    /// All band edges, ascending.
    pub fn edges(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.bands.len());
        for &(lo, hi) in &self.bands {
            out.push(lo);
            out.push(hi);
        }
        out
    }
}

/// Logarithmic capacity of the band set of `delta`:
/// `|leading coefficient|^(-1/p)`.
pub fn capacity(delta: &Poly) -> Result<f64> {
    let p = delta.degree();
    if p < 1 {
        return Err(Error::Invalid("capacity needs degree >= 1".into()));
    }
    let lead = delta.leading().unwrap().norm();
    Ok(lead.powf(-1.0 / p as f64))
}

/// Band/gap structure of `delta^{-1}([-2, 2])`.
///
/// Bands come from pairing the sorted real roots of `delta - 2` and
/// `delta + 2` per the interlacing pattern of a discriminant; a gap whose
/// consecutive edges coincide within the root-cluster tolerance is closed.
pub fn band_structure(delta: &Poly) -> Result<BandStructure> {
    let p = delta.degree();
    if p < 1 {
        return Err(Error::NotADiscriminant(format!("degree {p} polynomial")));
    }
    let p = p as usize;
    let coeffs = delta
        .real_coeffs(1e-12)
        .ok_or_else(|| Error::NotADiscriminant("complex coefficients".into()))?;
    let c0 = coeffs[p];

    let two = Poly::from_real(&[2.0]);
    let roots_plus = real_roots_checked(&(delta - &two), "delta - 2")?;
    let roots_minus = real_roots_checked(&(&(delta.clone()) + &two), "delta + 2")?;
    // For a negative leading coefficient the roles of the two root lists in
    // the interlacing pattern swap; bands themselves are unchanged.
    let (xp, xm) = if c0 >= 0.0 {
        (roots_plus, roots_minus)
    } else {
        (roots_minus, roots_plus)
    };

    // Descending chain x_p^+ > x_p^- >= x_{p-1}^- > x_{p-1}^+ >= ... pairs
    // each band's upper and lower edge, alternating which family supplies
    // which edge from the top down.
    let mut bands_desc: Vec<(f64, f64)> = Vec::with_capacity(p);
    for k in 0..p {
        let hi_src = if k % 2 == 0 { &xp } else { &xm };
        let lo_src = if k % 2 == 0 { &xm } else { &xp };
        let hi = hi_src[p - 1 - k];
        let lo = lo_src[p - 1 - k];
        let tol = ROOT_CLUSTER_TOL * (1.0 + hi.abs().max(lo.abs()));
        if lo > hi + tol {
            return Err(Error::NotADiscriminant(format!(
                "interlacing fails: band candidate [{lo}, {hi}] inverted"
            )));
        }
        if let Some(&(prev_lo, _)) = bands_desc.last() {
            if hi > prev_lo + tol {
                return Err(Error::NotADiscriminant(format!(
                    "interlacing fails: band edge {hi} overlaps band above starting at {prev_lo}"
                )));
            }
        }
        bands_desc.push((lo, hi));
    }
    let bands: Vec<(f64, f64)> = bands_desc.into_iter().rev().collect();

    let mut gaps = Vec::with_capacity(p.saturating_sub(1));
    for w in bands.windows(2) {
        let lo = w[0].1;
        let hi = w[1].0;
        let closed = (hi - lo).abs() <= ROOT_CLUSTER_TOL * (1.0 + lo.abs().max(hi.abs()));
        gaps.push(Gap { lo, hi, closed });
    }

    let dprime = delta.derivative();
    let mut gamma = if p >= 2 {
        real_roots_checked(&dprime, "delta'")?
    } else {
        Vec::new()
    };
    gamma.sort_by(f64::total_cmp);
    let critical_values: Vec<f64> = gamma
        .iter()
        .map(|&g| delta.eval(Complex64::new(g, 0.0)).re)
        .collect();

    // Each critical point must land in the closure of its gap, interior
    // when the gap is open.
    for (g, gap) in gamma.iter().zip(gaps.iter()) {
        let tol = ROOT_CLUSTER_TOL * (1.0 + g.abs());
        if *g < gap.lo - tol || *g > gap.hi + tol {
            return Err(Error::NotADiscriminant(format!(
                "critical point {g} escapes its gap [{}, {}]",
                gap.lo, gap.hi
            )));
        }
    }

    let capacity = c0.abs().powf(-1.0 / p as f64);
    Ok(BandStructure {
        bands,
        gaps,
        gamma,
        critical_values,
        c0,
        capacity,
    })
}

fn real_roots_checked(poly: &Poly, what: &str) -> Result<Vec<f64>> {
    let roots = poly
        .roots()
        .map_err(|e| Error::NotADiscriminant(format!("{what}: {e}")))?;
    let mut out = Vec::with_capacity(roots.len());
    for r in roots {
        if r.im.abs() > 1e-7 * (1.0 + r.re.abs()) {
            return Err(Error::NotADiscriminant(format!(
                "{what} has a non-real root {r}"
            )));
        }
        out.push(r.re + 0.0); // normalizes -0.0
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// Branch-labeled preimages `f_1(lambda) .. f_p(lambda)` of the
/// discriminant.
#[derive(Debug, Clone)]
pub struct Preimages {
    /// The p roots of `delta(z) - lambda`. Branch-labeled unless `critical`.
    pub values: Vec<Complex64>,
    /// Set when `lambda` sits on a critical value of the discriminant;
    /// roots are then reported with multiplicity and labels are undefined.
    pub critical: bool,
}

/// The real critical values `delta(gamma_j)` of a real-coefficient
/// discriminant.
pub fn critical_values(delta: &Poly) -> Result<Vec<f64>> {
    if delta.degree() < 2 {
        return Ok(Vec::new());
    }
    let dprime = delta.derivative();
    let roots = dprime.roots()?;
    let mut out = Vec::new();
    for r in roots {
        if r.im.abs() <= 1e-7 * (1.0 + r.re.abs()) {
            out.push(delta.eval(Complex64::new(r.re, 0.0)).re);
        }
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// Computes the p preimages of `lambda` under `delta`, labels assigned by
/// analytic continuation from the base point `2 + i` (labels there ordered
/// by descending real part, then descending imaginary part). Real `lambda`
/// is evaluated as the limit from the upper half plane and polished back
/// onto the real target.
pub fn delta_preimages(delta: &Poly, lambda: Complex64) -> Result<Preimages> {
    let p = delta.degree();
    if p < 1 {
        return Err(Error::Invalid(
            "preimages need a nonconstant discriminant".into(),
        ));
    }

    let cvs = critical_values(delta)?;
    for &cv in &cvs {
        if (lambda - Complex64::new(cv, 0.0)).norm() <= CRITICAL_TOL * (1.0 + cv.abs()) {
            let mut values = roots_at(delta, lambda)?;
            sort_complex(&mut values);
            return Ok(Preimages {
                values,
                critical: true,
            });
        }
    }

    let base = Complex64::new(2.0, 1.0);
    let mut base_roots = roots_at(delta, base)?;
    // Base-point labels: descending by (re, im).
    base_roots.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));

    let target = if lambda.im == 0.0 {
        lambda + Complex64::new(0.0, 1e-9 * (1.0 + lambda.norm()))
    } else {
        lambda
    };

    // Both base and target avoid the real critical values: a straight
    // segment works for targets in the closed upper half plane, and targets
    // below pass through 0 (never a critical value, since |cv| >= 2).
    let path: Vec<Complex64> = if target.im >= 0.0 {
        vec![base, target]
    } else {
        vec![base, Complex64::new(0.0, 0.0), target]
    };

    let mut tracked = track_roots(delta, base_roots, &path)?;

    if lambda.im == 0.0 {
        // Polish each labeled root onto the exact real target.
        let dprime = delta.derivative();
        for r in tracked.iter_mut() {
            for _ in 0..4 {
                let f = delta.eval(*r) - lambda;
                let d = dprime.eval(*r);
                if d.norm() == 0.0 {
                    break;
                }
                let step = f / d;
                *r -= step;
                if step.norm() <= 1e-15 * (1.0 + r.norm()) {
                    break;
                }
            }
        }
    }

    Ok(Preimages {
        values: tracked,
        critical: false,
    })
}

fn roots_at(delta: &Poly, lambda: Complex64) -> Result<Vec<Complex64>> {
    (delta - &Poly::constant(lambda)).roots()
}

/// Continuation of a labeled root set along a polyline in the lambda plane,
/// with adaptive step halving keeping every root's move below half the
/// minimum pairwise separation.
fn track_roots(
    delta: &Poly,
    mut roots: Vec<Complex64>,
    path: &[Complex64],
) -> Result<Vec<Complex64>> {
    for leg in path.windows(2) {
        let (from, to) = (leg[0], leg[1]);
        if (to - from).norm() == 0.0 {
            continue;
        }
        let mut t = 0.0f64;
        let mut step = 0.5f64;
        while t < 1.0 {
            let s = step.min(1.0 - t);
            let lam = from + (to - from) * (t + s);
            let candidates = roots_at(delta, lam)?;
            match assign_nearest(&roots, &candidates) {
                Some(next) => {
                    roots = next;
                    t += s;
                    step = (step * 2.0).min(0.5);
                }
                None => {
                    step *= 0.5;
                    if step < 1e-12 {
                        return Err(Error::Invalid(
                            "root continuation stalled (path too close to a branch point)".into(),
                        ));
                    }
                }
            }
        }
    }
    Ok(roots)
}

/// Matches each old root to its nearest candidate; succeeds only when the
/// matching is a bijection and every move stays below 0.45 of the minimum
/// pairwise separation of the old set.
fn assign_nearest(old: &[Complex64], new: &[Complex64]) -> Option<Vec<Complex64>> {
    let n = old.len();
    if n == 1 {
        return Some(vec![new[0]]);
    }
    let mut min_sep = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            min_sep = min_sep.min((old[i] - old[j]).norm());
        }
    }
    let mut used = vec![false; n];
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n {
        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        for (j, &cand) in new.iter().enumerate() {
            let d = (old[i] - cand).norm();
            if d < best_d {
                best_d = d;
                best = j;
            }
        }
        if best == usize::MAX || used[best] || best_d > 0.45 * min_sep {
            return None;
        }
        used[best] = true;
        out[i] = new[best];
    }
    Some(out)
}

/// Result of the torus membership test.
#[derive(Debug, Clone, Copy)]
pub struct TorusCheck {
    pub passes: bool,
    /// Max absolute deviation of the examined rows of `delta(J)` from the
    /// two-shift pattern (1 on the `±deg(delta)` diagonals, 0 elsewhere).
    pub deviation: f64,
}

/// Evaluates the banded entries of `delta(J)` over the rows
/// `p deg(delta) + 1 ..= window` and reports the maximum deviation from the
/// `S^p + S^{-p}` pattern; the skipped leading rows carry the one-sided
/// boundary block that deviates even for torus points.
pub fn torus_check(j: &PerturbedJacobi, delta: &Poly, window: usize) -> Result<TorusCheck> {
    let d = delta.degree();
    if d < 1 {
        return Err(Error::Invalid("torus check needs degree >= 1".into()));
    }
    let d = d as usize;
    let p = match j.tail() {
        crate::jacobi::Tail::Periodic { tail, .. } => tail.period(),
        crate::jacobi::Tail::Truncated => 1,
    };
    if window < 3 * p {
        return Err(Error::WindowTooSmall {
            need: 3 * p,
            got: window,
        });
    }
    let start = p * d + 1;
    if window < start {
        return Err(Error::WindowTooSmall {
            need: start,
            got: window,
        });
    }

    let size = window + d + 2;
    let mat = poly_of_operator_window(j, delta, size)?;
    let mut deviation = 0.0f64;
    for r in start..=window {
        let i = r - 1;
        for c in 0..size {
            let expected = if c + d == i || i + d == c { 1.0 } else { 0.0 };
            deviation = deviation.max((mat[(i, c)] - expected).abs());
        }
    }
    Ok(TorusCheck {
        passes: deviation <= TORUS_TOL,
        deviation,
    })
}

/// Dense window evaluation of `poly(J)` on the leading `size x size`
/// truncation of the operator, by Horner on banded multiplication.
pub(crate) fn poly_of_operator_window(
    j: &PerturbedJacobi,
    poly: &Poly,
    size: usize,
) -> Result<DMatrix<f64>> {
    let coeffs = poly
        .real_coeffs(1e-12)
        .ok_or_else(|| Error::Invalid("operator polynomial must have real coefficients".into()))?;
    let mut jm = DMatrix::<f64>::zeros(size, size);
    for n in 1..=size {
        let (a, b) = j.coeff(n)?;
        jm[(n - 1, n - 1)] = b;
        if n < size {
            jm[(n - 1, n)] = a;
            jm[(n, n - 1)] = a;
        }
    }
    let mut acc = DMatrix::<f64>::identity(size, size) * *coeffs.last().unwrap();
    for k in (0..coeffs.len() - 1).rev() {
        acc *= &jm;
        for i in 0..size {
            acc[(i, i)] += coeffs[k];
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn j2() -> PeriodicJacobi {
        PeriodicJacobi::new(vec![1.0, 1.0], vec![1.0, -1.0]).unwrap()
    }

    #[test]
    fn discriminant_examples() {
        // Free: delta = z.
        let free = PeriodicJacobi::free().discriminant();
        assert_eq!(free.real_coeffs(0.0).unwrap(), vec![0.0, 1.0]);

        // Hand transfer-matrix product: z^2 - 3.
        let d = j2().discriminant();
        let c = d.real_coeffs(1e-14).unwrap();
        assert!((c[0] + 3.0).abs() < 1e-14);
        assert!(c[1].abs() < 1e-14);
        assert!((c[2] - 1.0).abs() < 1e-14);

        // p = 1, a = 2, b = 1: (z - 1)/2.
        let d = PeriodicJacobi::new(vec![2.0], vec![1.0])
            .unwrap()
            .discriminant();
        let c = d.real_coeffs(0.0).unwrap();
        assert_eq!(c, vec![-0.5, 0.5]);
    }

    #[test]
    fn discriminant_leading_coefficient() {
        let pj = PeriodicJacobi::new(vec![0.7, 1.3, 2.1], vec![0.2, -0.4, 1.0]).unwrap();
        let d = pj.discriminant();
        let lead = d.leading().unwrap().re;
        let expect = 1.0 / (0.7 * 1.3 * 2.1);
        assert!((lead - expect).abs() < 1e-12 * expect);
        assert_eq!(d.degree(), 3);
    }

    #[test]
    fn band_structure_free() {
        let bs = band_structure(&Poly::x()).unwrap();
        assert_eq!(bs.bands, vec![(-2.0, 2.0)]);
        assert!(bs.gaps.is_empty());
        assert!(bs.gamma.is_empty());
        assert!((bs.capacity - 1.0).abs() < 1e-14);
    }

    #[test]
    fn band_structure_j2() {
        let bs = band_structure(&j2().discriminant()).unwrap();
        let s5 = 5.0f64.sqrt();
        assert_eq!(bs.bands.len(), 2);
        assert!((bs.bands[0].0 + s5).abs() < 1e-10);
        assert!((bs.bands[0].1 + 1.0).abs() < 1e-10);
        assert!((bs.bands[1].0 - 1.0).abs() < 1e-10);
        assert!((bs.bands[1].1 - s5).abs() < 1e-10);
        assert_eq!(bs.gaps.len(), 1);
        assert!(!bs.gaps[0].closed);
        assert_eq!(bs.gamma, vec![0.0]);
        assert!((bs.critical_values[0] + 3.0).abs() < 1e-12);
        assert!((bs.c0 - 1.0).abs() < 1e-14);
        assert!((bs.capacity - 1.0).abs() < 1e-14);
    }

    #[test]
    fn band_structure_closed_gap() {
        // delta = z^2 - 2: bands [-2, 0], [0, 2], gap at 0 closed.
        let bs = band_structure(&Poly::from_real(&[-2.0, 0.0, 1.0])).unwrap();
        assert_eq!(bs.bands.len(), 2);
        assert!((bs.bands[0].0 + 2.0).abs() < 1e-9);
        assert!(bs.bands[0].1.abs() < 1e-7);
        assert!(bs.bands[1].0.abs() < 1e-7);
        assert!((bs.bands[1].1 - 2.0).abs() < 1e-9);
        assert!(bs.gaps[0].closed);
    }

    #[test]
    fn band_structure_rejects_non_discriminant() {
        // z^2 + 4 has no real preimage of [-2, 2] at all.
        assert!(band_structure(&Poly::from_real(&[4.0, 0.0, 1.0])).is_err());
    }

    #[test]
    fn preimages_identity_branch() {
        let pre = delta_preimages(&Poly::x(), Complex64::new(5.0, 0.0)).unwrap();
        assert!(!pre.critical);
        assert_eq!(pre.values.len(), 1);
        assert!((pre.values[0] - Complex64::new(5.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn preimages_j2() {
        let d = j2().discriminant();
        let pre = delta_preimages(&d, Complex64::new(6.0, 0.0)).unwrap();
        assert!(!pre.critical);
        let mut vals = pre.values.clone();
        sort_complex(&mut vals);
        assert!((vals[0] - Complex64::new(-3.0, 0.0)).norm() < 1e-10);
        assert!((vals[1] - Complex64::new(3.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn preimages_critical_flag() {
        let d = j2().discriminant();
        let pre = delta_preimages(&d, Complex64::new(-3.0, 0.0)).unwrap();
        assert!(pre.critical);
        assert_eq!(pre.values.len(), 2);
        assert!(pre.values[0].norm() < 1e-7);
        assert!(pre.values[1].norm() < 1e-7);
    }

    #[test]
    fn preimage_labels_stable_around_loop() {
        // Monodromy-free on a contractible loop avoiding critical values.
        let d = j2().discriminant();
        let start = Complex64::new(1.0, 1.0);
        let first = delta_preimages(&d, start).unwrap().values;
        let mut prev = first.clone();
        let steps = 40;
        for k in 1..=steps {
            let th = 2.0 * std::f64::consts::PI * k as f64 / steps as f64;
            let lam = start + Complex64::new(0.4 * th.sin(), 0.4 * (1.0 - th.cos()));
            let cur = delta_preimages(&d, lam).unwrap().values;
            for (a, b) in prev.iter().zip(cur.iter()) {
                assert!((a - b).norm() < 0.5, "labels must move continuously");
            }
            prev = cur;
        }
        for (a, b) in first.iter().zip(prev.iter()) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn torus_check_examples() {
        let free = PerturbedJacobi::free();
        let tc = torus_check(&free, &Poly::x(), 12).unwrap();
        assert!(tc.passes);
        assert_eq!(tc.deviation, 0.0);

        let d = j2().discriminant();
        let tc = torus_check(&j2().as_operator(), &d, 16).unwrap();
        assert!(tc.passes, "deviation {}", tc.deviation);

        // Free operator against z^2 - 3: interior diagonal of J^2 - 3 is -1,
        // so the deviation is 1.
        let tc = torus_check(&free, &d, 16).unwrap();
        assert!(!tc.passes);
        assert!((tc.deviation - 1.0).abs() < 1e-12);
    }

    #[test]
    fn torus_check_window_too_small() {
        assert!(matches!(
            torus_check(&PerturbedJacobi::free(), &Poly::x(), 2),
            Err(Error::WindowTooSmall { .. })
        ));
    }

    #[test]
    fn capacity_examples() {
        assert!((capacity(&Poly::x()).unwrap() - 1.0).abs() < 1e-14);
        assert!((capacity(&j2().discriminant()).unwrap() - 1.0).abs() < 1e-12);
        // (z-1)/2 has leading coefficient 1/2 and p = 1: capacity 2, matching
        // the interval [-3, 5] of length 8.
        let d = Poly::from_real(&[-0.5, 0.5]);
        assert!((capacity(&d).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn interlacing_chain_on_random_operators() {
        // x_p^+ > x_p^- >= x_{p-1}^- > x_{p-1}^+ >= x_{p-2}^+ > ... for the
        // sorted roots of delta -/+ 2 of any periodic operator's
        // discriminant, up to period 5.
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for trial in 0..40 {
            let p = 1 + trial % 5;
            let a: Vec<f64> = (0..p).map(|_| 0.5 + 1.5 * next()).collect();
            let b: Vec<f64> = (0..p).map(|_| -1.0 + 2.0 * next()).collect();
            let pj = PeriodicJacobi::new(a, b).unwrap();
            let d = pj.discriminant();
            let two = Poly::from_real(&[2.0]);
            let xp = real_roots_checked(&(&d - &two), "d-2").unwrap();
            let xm = real_roots_checked(&(&d + &two), "d+2").unwrap();
            // Descending chain, alternating strict band steps and
            // gap steps that may touch.
            let mut chain = Vec::with_capacity(2 * p);
            for k in 0..p {
                if k % 2 == 0 {
                    chain.push(xp[p - 1 - k]);
                    chain.push(xm[p - 1 - k]);
                } else {
                    chain.push(xm[p - 1 - k]);
                    chain.push(xp[p - 1 - k]);
                }
            }
            for (i, w) in chain.windows(2).enumerate() {
                let tol = ROOT_CLUSTER_TOL * (1.0 + w[0].abs());
                if i % 2 == 0 {
                    assert!(w[0] > w[1], "band step must be strict: {chain:?}");
                } else {
                    assert!(w[0] >= w[1] - tol, "gap step out of order: {chain:?}");
                }
            }
            // And band_structure accepts the discriminant.
            band_structure(&d).unwrap();
        }
    }

    #[test]
    fn disc_fact_reproduces_delta() {
        // c0 * prod (z - f_j(lambda)) == delta(z) - lambda at random probes.
        let pj = PeriodicJacobi::new(vec![0.8, 1.4, 1.1], vec![-0.3, 0.5, 0.1]).unwrap();
        let d = pj.discriminant();
        let c0 = d.leading().unwrap();
        let lambdas = [
            Complex64::new(0.7, 0.9),
            Complex64::new(-1.3, -0.6),
            Complex64::new(3.0, 0.2),
        ];
        for lam in lambdas {
            let pre = delta_preimages(&d, lam).unwrap();
            for k in 0..10 {
                let zt = Complex64::new(-1.5 + 0.41 * k as f64, 0.3 + 0.13 * k as f64);
                let mut prod = c0;
                for &f in &pre.values {
                    prod *= zt - f;
                }
                let expect = d.eval(zt) - lam;
                assert!(
                    (prod - expect).norm() <= 1e-9 * expect.norm().max(1.0),
                    "disc_fact residual too large"
                );
            }
        }
    }

    #[test]
    fn derivative_sum_formula() {
        // c0 * sum_l prod_{j != l} (z - f_j(lambda)) == delta'(z).
        let pj = PeriodicJacobi::new(vec![1.2, 0.9], vec![0.4, -0.2]).unwrap();
        let d = pj.discriminant();
        let dp = d.derivative();
        let c0 = d.leading().unwrap();
        let lam = Complex64::new(1.1, 0.7);
        let pre = delta_preimages(&d, lam).unwrap();
        for k in 0..10 {
            let zt = Complex64::new(0.9 - 0.3 * k as f64, -0.5 + 0.21 * k as f64);
            let mut sum = Complex64::new(0.0, 0.0);
            for l in 0..pre.values.len() {
                let mut prod = Complex64::new(1.0, 0.0);
                for (jj, &f) in pre.values.iter().enumerate() {
                    if jj != l {
                        prod *= zt - f;
                    }
                }
                sum += prod;
            }
            let got = c0 * sum;
            let expect = dp.eval(zt);
            assert!((got - expect).norm() <= 1e-9 * expect.norm().max(1.0));
        }
    }
}
