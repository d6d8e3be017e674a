//! Borel transforms on both sheets: the closed form for periodic operators,
//! backward-recursion continuation for eventually periodic operators,
//! spectral density and point-mass extraction, decay-rate estimation, and
//! the continuation-condition checker.

mod conditions;

pub use conditions::{
    check_conditions, scan_conditions, ConditionReport, ContinuationRegion, CustomSurfaceMap,
    EdgeOrder, SamplerConfig, SurfaceMap, Witness,
};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::jacobi::{m_step, MValue, PerturbedJacobi};
use crate::periodic::{BandStructure, PeriodicJacobi};
use crate::polycore::Poly;
use crate::surface::{sharp, Sheet, SqrtDisc, SurfacePoint};

/// Closed-form m-function data of a periodic operator: m is a root of
/// `alpha m^2 + beta m + gamma = 0` with `beta^2 - 4 alpha gamma =
/// delta^2 - 4`, the two roots being the two sheets.
#[derive(Debug, Clone)]
pub struct MFunctionPeriodic {
    pub alpha: Poly,
    pub beta: Poly,
    pub gamma: Poly,
    pub delta: Poly,
    sq: SqrtDisc,
}

impl MFunctionPeriodic {
    pub fn new(pj: &PeriodicJacobi) -> Result<Self> {
        let p = pj.period();
        let op = pj.as_operator();
        let pk = op.first_kind_polys(p)?;
        let qk = op.second_kind_polys(p)?;
        let ap = pj.a()[p - 1];
        let alpha = pk[p - 1].scale(ap.into());
        let beta = &pk[p] + &qk[p - 1].scale(ap.into());
        let gamma = qk[p].clone();
        let delta = pj.discriminant();
        let sq = SqrtDisc::new(&delta)?;
        Ok(MFunctionPeriodic {
            alpha,
            beta,
            gamma,
            delta,
            sq,
        })
    }

    pub fn bands(&self) -> &BandStructure {
        self.sq.bands()
    }

    /// `(-beta(z) + s) / (2 alpha(z))` with the branch of `s` making
    /// `m ~ -1/z` toward `+infinity` on the plus sheet. A zero of `alpha`
    /// against a nonzero numerator is a pole; 0/0 is removable and resolved
    /// by a symmetric two-point limit.
    pub fn eval(&self, x: &SurfacePoint) -> MValue {
        self.eval_inner(x, true)
    }

    fn eval_inner(&self, x: &SurfacePoint, allow_limit: bool) -> MValue {
        let z = x.z;
        let s = self.sq.eval(x);
        let alpha = self.alpha.eval(z);
        let num = -self.beta.eval(z) + s;
        let zpow = |p: &Poly| 1.0f64.max(z.norm()).powi(p.degree().max(0) as i32);
        let alpha_scale = (self.alpha.coeff_scale() * zpow(&self.alpha)).max(1e-300);
        let num_scale = (self.beta.coeff_scale() * zpow(&self.beta) + s.norm()).max(1e-300);
        // The direct quotient stays accurate however small alpha gets, as
        // long as the numerator rises above rounding noise; only a
        // noise-level numerator (candidate 0/0) needs the local limit.
        let num_is_noise = num.norm() <= 1e-12 * num_scale;
        if !num_is_noise {
            return if alpha.norm() == 0.0 {
                MValue::Pole
            } else {
                MValue::Finite(num / (2.0 * alpha))
            };
        }
        if alpha.norm() > 1e-13 * alpha_scale {
            return MValue::Finite(num / (2.0 * alpha));
        }
        if !allow_limit {
            return MValue::Pole;
        }
        // 0/0: probe the two-point limit at two step sizes. A removable
        // point stabilizes; growth marks a pole in the edge coordinate.
        let h = 1e-6 * (1.0 + z.norm());
        let bands = self.sq.bands().clone();
        let probe = |h: f64| -> (Option<Complex64>, f64) {
            let mut sum = Complex64::new(0.0, 0.0);
            let mut count = 0usize;
            let mut mag = 0.0f64;
            for dz in [Complex64::new(h, 0.0), Complex64::new(-h, 0.0)] {
                let pt = SurfacePoint::on_surface(&bands, z + dz, x.sheet);
                if let MValue::Finite(v) = self.eval_inner(&pt, false) {
                    sum += v;
                    count += 1;
                    mag = mag.max(v.norm());
                }
            }
            if count == 0 {
                (None, f64::INFINITY)
            } else {
                (Some(sum / count as f64), mag)
            }
        };
        let (avg0, mag0) = probe(h);
        let (avg1, mag1) = probe(h / 2.0);
        match (avg0, avg1) {
            (Some(a0), Some(a1)) => {
                if mag1 > 1.25 * mag0 {
                    MValue::Pole
                } else {
                    MValue::Finite((4.0 * a1 - a0) / 3.0)
                }
            }
            (None, Some(a1)) => MValue::Finite(a1),
            (Some(a0), None) => MValue::Finite(a0),
            (None, None) => MValue::Pole,
        }
    }
}

/// Evaluates the periodic m-function at a surface point.
pub fn m_periodic_eval(pj: &PeriodicJacobi, x: &SurfacePoint) -> Result<MValue> {
    Ok(MFunctionPeriodic::new(pj)?.eval(x))
}

/// Side from which a band point is approached on the plus sheet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutSide {
    Above,
    Below,
}

/// Meromorphic continuation of the m-function of an eventually periodic
/// operator to the full surface: the periodic tail's closed form, unwound
/// through the prefix by the backward recursion.
#[derive(Debug, Clone)]
pub struct MContinuation {
    op: PerturbedJacobi,
    tail_m: MFunctionPeriodic,
}

impl MContinuation {
    pub fn new(op: &PerturbedJacobi) -> Result<Self> {
        let rolled = op.rolled_tail()?;
        let tail_m = MFunctionPeriodic::new(&rolled)?;
        Ok(MContinuation {
            op: op.clone(),
            tail_m,
        })
    }

    pub fn operator(&self) -> &PerturbedJacobi {
        &self.op
    }

    pub fn delta(&self) -> &Poly {
        &self.tail_m.delta
    }

    pub fn bands(&self) -> &BandStructure {
        self.tail_m.bands()
    }

    /// Surface point with cut membership decided against this operator's
    /// band set.
    pub fn point(&self, z: Complex64, sheet: Sheet) -> SurfacePoint {
        SurfacePoint::on_surface(self.bands(), z, sheet)
    }

    /// m at `x`: the tail's closed form unwound through the prefix. On-cut
    /// points evaluate as the limit from the upper half plane on the plus
    /// sheet regardless of the sheet tag (the glued edge both tags name).
    pub fn eval(&self, x: &SurfacePoint) -> MValue {
        let mut m = self.tail_m.eval(x);
        for k in (1..=self.op.prefix_len()).rev() {
            let (a, b) = self.op.coeff(k).expect("prefix coefficient");
            m = m_step(m, a, b, x.z);
        }
        m
    }

    /// `m_sharp(x) = conj(m(sharp(x)))`.
    pub fn eval_sharp(&self, x: &SurfacePoint) -> MValue {
        match self.eval(&sharp(x)) {
            MValue::Finite(v) => MValue::Finite(v.conj()),
            MValue::Pole => MValue::Pole,
        }
    }

    /// Band-point value approached from the given side of the plus sheet:
    /// `Above` is the default on-cut value, `Below` its conjugate.
    pub fn eval_on_cut_sided(&self, x: f64, side: CutSide) -> MValue {
        let pt = self.point(Complex64::new(x, 0.0), Sheet::Plus);
        let above = self.eval(&pt);
        match (side, above) {
            (CutSide::Above, v) => v,
            (CutSide::Below, MValue::Finite(v)) => MValue::Finite(v.conj()),
            (CutSide::Below, MValue::Pole) => MValue::Pole,
        }
    }

    /// Sharp companion of [`Self::eval_on_cut_sided`]: the boundary value of
    /// `m_sharp` from the same side.
    pub fn eval_sharp_on_cut_sided(&self, x: f64, side: CutSide) -> MValue {
        self.eval_on_cut_sided(
            x,
            match side {
                CutSide::Above => CutSide::Below,
                CutSide::Below => CutSide::Above,
            },
        )
    }
}

/// Spectral density at a band-interior point: `Im m(x + i0) / pi`.
///
/// Cross-checked internally against a direct evaluation slightly off the
/// cut; refuses points within `1e-8` (relative) of a band edge.
pub fn herglotz_density(m: &MContinuation, x: f64) -> Result<f64> {
    let bands = m.bands();
    let in_open_band = bands.bands.iter().any(|&(lo, hi)| x > lo && x < hi);
    if !in_open_band {
        return Err(Error::EdgeDegenerate(x));
    }
    for e in bands.edges() {
        if (x - e).abs() <= 1e-8 * (1.0 + e.abs()) {
            return Err(Error::EdgeDegenerate(x));
        }
    }
    let v = m
        .eval(&m.point(Complex64::new(x, 0.0), Sheet::Plus))
        .finite()
        .ok_or_else(|| Error::Invalid(format!("pole of m on a band interior at {x}")))?;
    // Consistency against the off-cut approach.
    let delta = 1e-7 * (1.0 + x.abs());
    let off = m
        .eval(&m.point(Complex64::new(x, delta), Sheet::Plus))
        .finite()
        .ok_or_else(|| Error::Invalid(format!("pole of m just above the band at {x}")))?;
    if (off - v).norm() > 1e-3 * (1.0 + v.norm()) {
        return Err(Error::Invalid(format!(
            "branch inconsistency at {x}: on-cut {v} vs limit {off}"
        )));
    }
    Ok(v.im / std::f64::consts::PI)
}

/// Density without the edge guard, for quadrature (vanishing or integrably
/// singular at the edges after the trigonometric substitution).
fn density_raw(m: &MContinuation, x: f64) -> f64 {
    match m.eval(&m.point(Complex64::new(x, 0.0), Sheet::Plus)) {
        MValue::Finite(v) => v.im / std::f64::consts::PI,
        MValue::Pole => f64::INFINITY,
    }
}

/// A plus-sheet point mass of the spectral measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointMass {
    pub location: f64,
    pub mass: f64,
}

/// Locates real poles of m on the plus sheet (gap eigenvalues and points
/// outside the convex hull of the bands) by a sign-change scan of `1/m`,
/// then extracts each mass as the residue by symmetric two-sided
/// extrapolation with one Richardson step.
pub fn point_masses(m: &MContinuation, region: Option<(f64, f64)>) -> Result<Vec<PointMass>> {
    let bands = m.bands();
    let (lo, hi) = region.unwrap_or_else(|| default_search_region(m));
    let mut intervals: Vec<(f64, f64)> = Vec::new();
    let margin = 1e-9;
    let mut cursor = lo;
    for &(blo, bhi) in &bands.bands {
        if blo > cursor {
            intervals.push((cursor, blo - margin * (1.0 + blo.abs())));
        }
        cursor = bhi + margin * (1.0 + bhi.abs());
    }
    if hi > cursor {
        intervals.push((cursor, hi));
    }

    let g = |x: f64| -> f64 {
        match m.eval(&m.point(Complex64::new(x, 0.0), Sheet::Plus)) {
            MValue::Finite(v) => {
                if v.norm() == 0.0 {
                    f64::INFINITY
                } else {
                    (1.0 / v).re
                }
            }
            MValue::Pole => 0.0,
        }
    };
    let bisect_pole = |mut a: f64, mut b: f64| -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if g(mid) > 0.0 {
                a = mid;
            } else {
                b = mid;
            }
        }
        0.5 * (a + b)
    };

    let mut masses: Vec<PointMass> = Vec::new();
    let record = |masses: &mut Vec<PointMass>, location: f64| {
        if masses
            .iter()
            .any(|pm| (pm.location - location).abs() <= 1e-8 * (1.0 + location.abs()))
        {
            return;
        }
        let mass = residue_mass(m, location);
        if mass > 0.0 {
            masses.push(PointMass { location, mass });
        }
    };

    for &(ilo, ihi) in &intervals {
        if ihi <= ilo {
            continue;
        }
        let samples = 600usize;
        let mut prev_x = ilo;
        let mut prev_g = g(prev_x);
        for k in 1..=samples {
            let x = ilo + (ihi - ilo) * k as f64 / samples as f64;
            let gx = g(x);
            // A pole of m flips 1/m from positive to negative; zeros of m
            // flip the other way and are skipped. A sample landing exactly
            // on a pole shows up as 1/m == 0.
            if gx == 0.0 {
                record(&mut masses, x);
            } else if prev_g > 0.0 && gx < 0.0 {
                record(&mut masses, bisect_pole(prev_x, x));
            }
            prev_x = x;
            prev_g = gx;
        }
    }

    // The grid scan straddles a pole whose paired zero of m sits closer
    // than the spacing. Eigenvalues of a large truncation seed those: they
    // converge exponentially to the off-band point spectrum, and each seed
    // is confirmed by a shrinking sign bracket of 1/m before it counts.
    let op = m.operator();
    let p = op.rolled_tail().map(|t| t.period()).unwrap_or(1);
    let ntr = (op.prefix_len() + 60 * p).clamp(240, 600);
    for &(ilo, ihi) in &intervals {
        if ihi <= ilo {
            continue;
        }
        for ev in truncation_eigenvalues_in(op, ntr, ilo, ihi)? {
            if masses
                .iter()
                .any(|pm| (pm.location - ev).abs() <= 1e-6 * (1.0 + ev.abs()))
            {
                continue;
            }
            for w in [1e-3, 1e-4, 1e-6, 1e-8] {
                let width = w * (1.0 + ev.abs());
                let a = (ev - width).max(ilo);
                let b = (ev + width).min(ihi);
                if a < b && g(a) > 0.0 && g(b) < 0.0 {
                    record(&mut masses, bisect_pole(a, b));
                    break;
                }
            }
        }
    }

    masses.sort_by(|a, b| a.location.total_cmp(&b.location));
    masses.dedup_by(|a, b| (a.location - b.location).abs() <= 1e-9 * (1.0 + b.location.abs()));
    Ok(masses)
}

/// Eigenvalues of the leading `n x n` truncation inside `(lo, hi)`, by
/// bisection on the Sturm negative-pivot count of `T - x`.
fn truncation_eigenvalues_in(
    op: &PerturbedJacobi,
    n: usize,
    lo: f64,
    hi: f64,
) -> Result<Vec<f64>> {
    let mut coeffs = Vec::with_capacity(n);
    for k in 1..=n {
        coeffs.push(op.coeff(k)?);
    }
    let count = |x: f64| -> usize {
        let mut neg = 0usize;
        let mut prev = 1.0f64;
        for (k, &(_, b)) in coeffs.iter().enumerate() {
            let coupling = if k == 0 { 0.0 } else { coeffs[k - 1].0 };
            let mut d = (b - x) - coupling * coupling / prev;
            if d == 0.0 {
                d = -f64::MIN_POSITIVE;
            }
            if d < 0.0 {
                neg += 1;
            }
            prev = d;
        }
        neg
    };
    let c_lo = count(lo);
    let c_hi = count(hi);
    let mut out = Vec::with_capacity(c_hi.saturating_sub(c_lo));
    for idx in c_lo..c_hi {
        // Locate the eigenvalue with exactly idx eigenvalues below it.
        let mut a = lo;
        let mut b = hi;
        for _ in 0..120 {
            let mid = 0.5 * (a + b);
            if count(mid) <= idx {
                a = mid;
            } else {
                b = mid;
            }
        }
        out.push(0.5 * (a + b));
    }
    Ok(out)
}

fn default_search_region(m: &MContinuation) -> (f64, f64) {
    let op = m.operator();
    let mut amax: f64 = 0.0;
    let mut bmax: f64 = 0.0;
    for i in 0..op.prefix_len() {
        amax = amax.max(op.prefix_a()[i]);
        bmax = bmax.max(op.prefix_b()[i].abs());
    }
    if let Ok(t) = op.rolled_tail() {
        for &a in t.a() {
            amax = amax.max(a);
        }
        for &b in t.b() {
            bmax = bmax.max(b.abs());
        }
    }
    let bound = bmax + 2.0 * amax + 1.0;
    (-bound, bound)
}

fn residue_mass(m: &MContinuation, location: f64) -> f64 {
    let eval = |x: f64| -> Complex64 {
        m.eval(&m.point(Complex64::new(x, 0.0), Sheet::Plus))
            .finite()
            .unwrap_or(Complex64::new(f64::INFINITY, 0.0))
    };
    let w_at = |h: f64| -> f64 {
        let plus = eval(location + h);
        let minus = eval(location - h);
        (-0.5 * h * (plus - minus)).re
    };
    // The regular part carries square-root singularities at the band
    // edges; the probe step must stay well inside the pole's distance to
    // the nearest edge or the extrapolation error blows up.
    let edge_dist = m
        .bands()
        .edges()
        .iter()
        .map(|e| (location - e).abs())
        .fold(f64::INFINITY, f64::min);
    let h = (1e-3 * (1.0 + location.abs()))
        .min(0.125 * edge_dist)
        .max(1e-12);
    let w1 = w_at(h);
    let w2 = w_at(h / 2.0);
    (4.0 * w2 - w1) / 3.0
}

/// Integral of the spectral density over all bands by adaptive Simpson after
/// the substitution `x = c + r sin(theta)` flattening the edge behavior.
///
/// Pointwise sampling cannot see density spikes narrower than its
/// resolution (a continuation pole hugging the cut concentrates order-one
/// mass in an arbitrarily thin Lorentzian); [`band_measures`] stays exact
/// in that regime.
pub fn band_density_integral(m: &MContinuation, tol: f64) -> f64 {
    let bands = m.bands().bands.clone();
    let mut total = 0.0;
    for (lo, hi) in bands {
        let c = 0.5 * (lo + hi);
        let r = 0.5 * (hi - lo);
        let f = |theta: f64| -> f64 {
            let x = c + r * theta.sin();
            let d = density_raw(m, x);
            if d.is_finite() {
                d * r * theta.cos()
            } else {
                0.0
            }
        };
        let half_pi = std::f64::consts::FRAC_PI_2;
        // Edge poles of m leave half-integer cusps after the substitution;
        // the recursion must go deep enough to pin them at tolerance.
        total += adaptive_simpson(&f, -half_pi, half_pi, tol, 40);
    }
    total
}

/// A band cluster (maximal run of touching bands) with its measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandMeasure {
    pub lo: f64,
    pub hi: f64,
    pub mass: f64,
}

/// Measures of the band clusters by the contour integral
/// `-(1/2 pi i) \oint m dz` over rectangles that enclose one cluster each
/// and exclude the given atoms. The contour stays away from the spectrum,
/// so the result is insensitive to how the density distributes inside.
pub fn band_measures(m: &MContinuation, atoms: &[PointMass]) -> Result<Vec<BandMeasure>> {
    let bands = &m.bands().bands;
    let gaps = &m.bands().gaps;
    // Group touching bands.
    let mut groups: Vec<(f64, f64)> = Vec::new();
    for (i, &(lo, hi)) in bands.iter().enumerate() {
        let touches_prev = i > 0 && gaps[i - 1].closed;
        if touches_prev {
            groups.last_mut().unwrap().1 = hi;
        } else {
            groups.push((lo, hi));
        }
    }

    let mut out = Vec::with_capacity(groups.len());
    for (gi, &(lo, hi)) in groups.iter().enumerate() {
        let mut clearance = 0.05 * (1.0 + hi - lo);
        for pm in atoms {
            clearance = clearance.min((pm.location - lo).abs());
            clearance = clearance.min((pm.location - hi).abs());
        }
        if gi > 0 {
            clearance = clearance.min(lo - groups[gi - 1].1);
        }
        if gi + 1 < groups.len() {
            clearance = clearance.min(groups[gi + 1].0 - hi);
        }
        let w = 0.4 * clearance;
        if !(w > 0.0) {
            return Err(Error::Invalid(format!(
                "no clearance around band cluster [{lo}, {hi}] for a contour"
            )));
        }
        let corners = [
            Complex64::new(lo - w, -w),
            Complex64::new(hi + w, -w),
            Complex64::new(hi + w, w),
            Complex64::new(lo - w, w),
            Complex64::new(lo - w, -w),
        ];
        let mut acc = Complex64::new(0.0, 0.0);
        for seg in corners.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            let f = |t: f64| -> Complex64 {
                let z = a + (b - a) * t;
                m.eval(&SurfacePoint::new(z, Sheet::Plus))
                    .finite()
                    .unwrap_or(Complex64::new(0.0, 0.0))
                    * (b - a)
            };
            acc += adaptive_simpson_complex(&f, 0.0, 1.0, 1e-10, 28);
        }
        let mass = (acc / Complex64::new(0.0, -2.0 * std::f64::consts::PI)).re;
        out.push(BandMeasure { lo, hi, mass });
    }
    Ok(out)
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    simpson_rec(f, a, b, fa, fm, fb, simpson(a, b, fa, fm, fb), tol, depth)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive_simpson_complex(
    f: &dyn Fn(f64) -> Complex64,
    a: f64,
    b: f64,
    tol: f64,
    depth: usize,
) -> Complex64 {
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec_complex(f, a, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec_complex(
    f: &dyn Fn(f64) -> Complex64,
    a: f64,
    b: f64,
    fa: Complex64,
    fm: Complex64,
    fb: Complex64,
    whole: Complex64,
    tol: f64,
    depth: usize,
) -> Complex64 {
    let m = 0.5 * (a + b);
    let lm = f(0.5 * (a + m));
    let rm = f(0.5 * (m + b));
    let left = (m - a) / 6.0 * (fa + 4.0 * lm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * rm + fb);
    if depth == 0 || (left + right - whole).norm() <= 15.0 * tol {
        left + right + (left + right - whole) / 15.0
    } else {
        simpson_rec_complex(f, a, m, fa, lm, fm, left, tol / 2.0, depth - 1)
            + simpson_rec_complex(f, m, b, fm, rm, fb, right, tol / 2.0, depth - 1)
    }
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = f(0.5 * (a + m));
    let rm = f(0.5 * (m + b));
    let left = simpson(a, m, fa, lm, fm);
    let right = simpson(m, b, fm, rm, fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        left + right + (left + right - whole) / 15.0
    } else {
        simpson_rec(f, a, m, fa, lm, fm, left, tol / 2.0, depth - 1)
            + simpson_rec(f, m, b, fm, rm, fb, right, tol / 2.0, depth - 1)
    }
}

/// Decay-rate estimate from the coefficient deviations against a reference
/// periodic operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayRate {
    Finite(f64),
    /// All examined tail deviations vanish (eventually periodic).
    Infinite,
}

/// Least-squares fit of `log d_n` over the tail half `[N/2, N]` of the
/// deviations `d_n = |a_n - a_n^0| + |b_n - b_n^0|`, zero terms ignored;
/// returns `exp(-slope/2)`.
pub fn decay_rate(j: &PerturbedJacobi, j0: &PeriodicJacobi, n_max: usize) -> Result<DecayRate> {
    let p = j0.period();
    if n_max < 10 * p {
        return Err(Error::WindowTooSmall {
            need: 10 * p,
            got: n_max,
        });
    }
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for n in (n_max / 2)..=n_max {
        if n == 0 {
            continue;
        }
        let (a, b) = j.coeff(n)?;
        let a0 = j0.a()[(n - 1) % p];
        let b0 = j0.b()[(n - 1) % p];
        let d = (a - a0).abs() + (b - b0).abs();
        if d > 1e-300 {
            pts.push((n as f64, d.ln()));
        }
    }
    if pts.is_empty() {
        return Ok(DecayRate::Infinite);
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom == 0.0 {
        return Ok(DecayRate::Infinite);
    }
    let slope = (n * sxy - sx * sy) / denom;
    Ok(DecayRate::Finite((-slope / 2.0).exp()))
}
