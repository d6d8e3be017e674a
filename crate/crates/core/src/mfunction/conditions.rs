//! Sampled verification of the continuation conditions: no poles on band
//! interiors with at-most-simple edge poles, no zeros of `m - m_sharp` in
//! the continuation region with at-most-simple edge zeros, and no
//! sharp-paired poles off the bands.

use num_complex::Complex64;

use crate::jacobi::MValue;
use crate::mfunction::MContinuation;
use crate::periodic::BandStructure;
use crate::polycore::Poly;
use crate::surface::{er_membership, sharp, Membership, Sheet, SurfacePoint};

/// A meromorphic function on the two-sheeted cover, as seen by the scanner.
pub trait SurfaceMap {
    fn eval(&self, x: &SurfacePoint) -> MValue;
    fn bands(&self) -> &BandStructure;
    fn delta(&self) -> &Poly;
    fn eval_sharp(&self, x: &SurfacePoint) -> MValue {
        match self.eval(&sharp(x)) {
            MValue::Finite(v) => MValue::Finite(v.conj()),
            MValue::Pole => MValue::Pole,
        }
    }
    /// Whether a global meromorphic continuation is structurally available.
    fn continuation_defined(&self) -> bool {
        true
    }
}

impl SurfaceMap for MContinuation {
    fn eval(&self, x: &SurfacePoint) -> MValue {
        MContinuation::eval(self, x)
    }
    fn bands(&self) -> &BandStructure {
        MContinuation::bands(self)
    }
    fn delta(&self) -> &Poly {
        MContinuation::delta(self)
    }
    fn eval_sharp(&self, x: &SurfacePoint) -> MValue {
        MContinuation::eval_sharp(self, x)
    }
}

/// A surface function given by a closure, for exercising the scanner on
/// synthetic inputs.
pub struct CustomSurfaceMap {
    pub f: Box<dyn Fn(&SurfacePoint) -> MValue>,
    pub bands: BandStructure,
    pub delta: Poly,
    pub continuation_ok: bool,
}

impl SurfaceMap for CustomSurfaceMap {
    fn eval(&self, x: &SurfacePoint) -> MValue {
        (self.f)(x)
    }
    fn bands(&self) -> &BandStructure {
        &self.bands
    }
    fn delta(&self) -> &Poly {
        &self.delta
    }
    fn continuation_defined(&self) -> bool {
        self.continuation_ok
    }
}

/// Continuation region to scan: a finite level `R` of the Joukowski
/// coordinate, or the whole surface (scanned over a fixed large box).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ContinuationRegion {
    Radius(f64),
    Full,
}

#[derive(Debug, Clone)]
pub struct SamplerConfig {
    /// On-cut samples per band.
    pub band_samples: usize,
    /// Off-cut grid points per axis, per sheet.
    pub grid: usize,
    /// |m| beyond which a chased maximum counts as a pole.
    pub pole_threshold: f64,
    /// Cap on witnesses per violation class.
    pub max_witnesses: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            band_samples: 180,
            grid: 40,
            pole_threshold: 1e8,
            max_witnesses: 16,
        }
    }
}

/// A flagged location with the value that triggered it.
#[derive(Debug, Clone, Copy)]
pub struct Witness {
    pub z: Complex64,
    pub sheet: Sheet,
    pub value: Complex64,
}

/// Measured orders at a band edge, in the local coordinate
/// `sqrt(z - z0)`.
#[derive(Debug, Clone, Copy)]
pub struct EdgeOrder {
    pub edge: f64,
    /// Pole order of m (0 = regular); above 1 violates the conditions.
    pub m_pole_order: i32,
    /// Zero order of `m - m_sharp` (negative = pole); above 1 violates.
    pub mm_sharp_zero_order: i32,
    pub violating: bool,
}

#[derive(Debug, Clone, Default)]
pub struct ConditionReport {
    pub continuation_ok: bool,
    pub band_pole_violations: Vec<Witness>,
    pub band_edge_pole_orders: Vec<EdgeOrder>,
    pub mm_sharp_zero_violations: Vec<Witness>,
    pub sharp_pair_pole_violations: Vec<Witness>,
    pub samples_used: usize,
}

impl ConditionReport {
    pub fn all_pass(&self) -> bool {
        self.continuation_ok
            && self.band_pole_violations.is_empty()
            && self.mm_sharp_zero_violations.is_empty()
            && self.sharp_pair_pole_violations.is_empty()
            && self.band_edge_pole_orders.iter().all(|e| !e.violating)
    }
}

/// Runs the full condition scan for an eventually periodic operator.
pub fn check_conditions(
    m: &MContinuation,
    region: ContinuationRegion,
    cfg: &SamplerConfig,
) -> ConditionReport {
    scan_conditions(m, region, cfg)
}

/// Condition scan over any surface function.
pub fn scan_conditions(
    map: &dyn SurfaceMap,
    region: ContinuationRegion,
    cfg: &SamplerConfig,
) -> ConditionReport {
    let mut samples = 0usize;
    let mut report = ConditionReport {
        continuation_ok: map.continuation_defined(),
        ..Default::default()
    };

    scan_band_poles(map, cfg, &mut report, &mut samples);
    scan_edge_orders(map, &mut report, &mut samples);
    scan_mm_sharp_zeros(map, region, cfg, &mut report, &mut samples);
    scan_sharp_pairs(map, region, cfg, &mut report, &mut samples);

    report.samples_used = samples;
    report
}

fn eval_mag(map: &dyn SurfaceMap, x: &SurfacePoint, samples: &mut usize) -> f64 {
    *samples += 1;
    map.eval(x).magnitude()
}

fn on_cut_point(map: &dyn SurfaceMap, x: f64) -> SurfacePoint {
    SurfacePoint::on_surface(map.bands(), Complex64::new(x, 0.0), Sheet::Plus)
}

fn scan_band_poles(
    map: &dyn SurfaceMap,
    cfg: &SamplerConfig,
    report: &mut ConditionReport,
    samples: &mut usize,
) {
    let bands = map.bands().bands.clone();
    for (lo, hi) in bands {
        let len = hi - lo;
        let margin = (1e-3 * len).max(1e-9);
        let n = cfg.band_samples.max(8);
        let spacing = (len - 2.0 * margin) / (n - 1) as f64;
        let mags: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let x = lo + margin + spacing * i as f64;
                (x, eval_mag(map, &on_cut_point(map, x), samples))
            })
            .collect();
        let mut sorted: Vec<f64> = mags.iter().map(|m| m.1).collect();
        sorted.sort_by(f64::total_cmp);
        let median = sorted[sorted.len() / 2];

        // Chase the global maximum plus every clear local maximum.
        let mut starts: Vec<f64> = Vec::new();
        if let Some(&(x, _)) = mags.iter().max_by(|a, b| a.1.total_cmp(&b.1)) {
            starts.push(x);
        }
        for w in mags.windows(3) {
            if w[1].1 > w[0].1 && w[1].1 > w[2].1 && w[1].1 > 3.0 * median + 1.0 {
                starts.push(w[1].0);
            }
        }
        for x in starts {
            let (loc, peak) = chase_max_on_band(
                map,
                x,
                spacing,
                (lo + margin, hi - margin),
                cfg.pole_threshold,
                samples,
            );
            if peak > cfg.pole_threshold
                && !report
                    .band_pole_violations
                    .iter()
                    .any(|w| (w.z.re - loc).abs() <= 1e-6 * (1.0 + loc.abs()))
                && report.band_pole_violations.len() < cfg.max_witnesses
            {
                report.band_pole_violations.push(Witness {
                    z: Complex64::new(loc, 0.0),
                    sheet: Sheet::Plus,
                    value: Complex64::new(peak, 0.0),
                });
            }
        }
    }
}

fn chase_max_on_band(
    map: &dyn SurfaceMap,
    x0: f64,
    radius0: f64,
    range: (f64, f64),
    threshold: f64,
    samples: &mut usize,
) -> (f64, f64) {
    let mut best_x = x0;
    let mut best_v = eval_mag(map, &on_cut_point(map, x0), samples);
    let mut r = radius0;
    while r > 1e-13 * (1.0 + best_x.abs()) {
        for k in 0..17 {
            let x = (best_x - r + 2.0 * r * k as f64 / 16.0).clamp(range.0, range.1);
            let v = eval_mag(map, &on_cut_point(map, x), samples);
            if v > best_v {
                best_v = v;
                best_x = x;
            }
        }
        if best_v > 10.0 * threshold {
            break;
        }
        r /= 6.0;
    }
    (best_x, best_v)
}

fn scan_edge_orders(map: &dyn SurfaceMap, report: &mut ConditionReport, samples: &mut usize) {
    let bands = map.bands().bands.clone();
    let nb = bands.len();
    for (bi, &(lo, hi)) in bands.iter().enumerate() {
        let blen = hi - lo;
        // (edge, direction into the adjacent off-band segment, room there)
        let mut sides = Vec::new();
        let room_left = if bi == 0 { 1.0 } else { lo - bands[bi - 1].1 };
        let room_right = if bi + 1 == nb {
            1.0
        } else {
            bands[bi + 1].0 - hi
        };
        if room_left > 1e-6 {
            sides.push((lo, -1.0, room_left));
        }
        if room_right > 1e-6 {
            sides.push((hi, 1.0, room_right));
        }
        for (edge, dir, room) in sides {
            let scale = (0.4 * room).min(0.4 * blen).min(1.0);
            let radii = [1e-2, 1e-3, 1e-4, 1e-5];
            let mut pts_m = Vec::new();
            let mut pts_h = Vec::new();
            for &rr in &radii {
                let t = scale * rr * rr; // local coordinate u = sqrt(t / scale-normalized)
                let u = t.sqrt();
                let x = SurfacePoint::new(Complex64::new(edge + dir * t, 0.0), Sheet::Plus);
                *samples += 2;
                let mv = map.eval(&x);
                let hv = match (mv, map.eval_sharp(&x)) {
                    (MValue::Finite(a), MValue::Finite(b)) => Some(a - b),
                    _ => None,
                };
                if let MValue::Finite(v) = mv {
                    if v.norm() > 0.0 {
                        pts_m.push((u.ln(), v.norm().ln()));
                    }
                }
                if let Some(h) = hv {
                    if h.norm() > 0.0 {
                        pts_h.push((u.ln(), h.norm().ln()));
                    }
                }
            }
            let slope_m = ls_slope(&pts_m).unwrap_or(0.0);
            let slope_h = ls_slope(&pts_h).unwrap_or(0.0);
            let m_pole_order = (-slope_m).round().max(0.0) as i32;
            let mm_sharp_zero_order = slope_h.round() as i32;
            let violating = m_pole_order > 1 || mm_sharp_zero_order > 1;
            report.band_edge_pole_orders.push(EdgeOrder {
                edge,
                m_pole_order,
                mm_sharp_zero_order,
                violating,
            });
        }
    }
}

fn ls_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom == 0.0 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

fn region_box(map: &dyn SurfaceMap, region: ContinuationRegion) -> (f64, f64, f64) {
    let bands = map.bands();
    let (xmin, xmax) = (bands.x_min(), bands.x_max());
    let pad = match region {
        ContinuationRegion::Radius(r) => {
            let p = map.delta().degree().max(1) as f64;
            ((r + 1.0 / r) / bands.c0.abs()).powf(1.0 / p) + 0.5
        }
        ContinuationRegion::Full => 2.0 * (xmax - xmin).max(1.0) + 2.0,
    };
    (xmin - pad, xmax + pad, pad)
}

fn inside_region(map: &dyn SurfaceMap, region: ContinuationRegion, z: Complex64) -> bool {
    match region {
        ContinuationRegion::Full => true,
        ContinuationRegion::Radius(r) => {
            matches!(er_membership(map.delta(), r, z), Ok(Membership::Inside))
        }
    }
}

fn eval_h(map: &dyn SurfaceMap, x: &SurfacePoint, samples: &mut usize) -> Option<Complex64> {
    *samples += 2;
    match (map.eval(x), map.eval_sharp(x)) {
        (MValue::Finite(a), MValue::Finite(b)) => Some(a - b),
        _ => None,
    }
}

fn scan_mm_sharp_zeros(
    map: &dyn SurfaceMap,
    region: ContinuationRegion,
    cfg: &SamplerConfig,
    report: &mut ConditionReport,
    samples: &mut usize,
) {
    let (x0, x1, pad) = region_box(map, region);
    let edges = map.bands().edges();
    let n = cfg.grid.max(8);
    let dx = (x1 - x0) / n as f64;
    let dy = 2.0 * pad / n as f64;

    let mut grid: Vec<(SurfacePoint, Complex64)> = Vec::new();
    for sheet in [Sheet::Plus, Sheet::Minus] {
        for iy in 0..=n {
            let y = -pad + iy as f64 * dy;
            for ix in 0..=n {
                let x = x0 + ix as f64 * dx;
                let z = Complex64::new(x, y);
                // The cut is scanned separately.
                if y.abs() < 0.5 * dy && map.bands().contains(x, dy) {
                    continue;
                }
                if !inside_region(map, region, z) {
                    continue;
                }
                let pt = SurfacePoint::new(z, sheet);
                if let Some(h) = eval_h(map, &pt, samples) {
                    grid.push((pt, h));
                }
            }
        }
    }
    if grid.is_empty() {
        return;
    }
    let mut mags: Vec<f64> = grid.iter().map(|(_, h)| h.norm()).collect();
    mags.sort_by(f64::total_cmp);
    let h_scale = mags[mags.len() / 2];

    // Identically vanishing difference: every point witnesses.
    if h_scale <= 1e-12 {
        for (pt, h) in grid.iter().take(cfg.max_witnesses) {
            report.mm_sharp_zero_violations.push(Witness {
                z: pt.z,
                sheet: pt.sheet,
                value: *h,
            });
        }
        return;
    }

    // Isolated zero candidates: polish the smallest grid values by Newton
    // and confirm by the argument principle on a small circle.
    let mut cands: Vec<(SurfacePoint, f64)> = grid.iter().map(|(p, h)| (*p, h.norm())).collect();
    cands.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut found: Vec<Witness> = Vec::new();
    for (pt, mag) in cands.into_iter().take(24) {
        if mag > 0.2 * h_scale {
            break;
        }
        if let Some((z_star, h_star)) = newton_zero(map, &pt, samples) {
            if !inside_region(map, region, z_star) {
                continue;
            }
            if edges
                .iter()
                .any(|&e| (z_star - Complex64::new(e, 0.0)).norm() <= 1e-5 * (1.0 + e.abs()))
            {
                continue;
            }
            if h_star.norm() > 1e-8 * h_scale {
                continue;
            }
            if found.iter().any(|w| {
                w.sheet == pt.sheet && (w.z - z_star).norm() <= 1e-6 * (1.0 + z_star.norm())
            }) {
                continue;
            }
            let start = pt.z;
            let radius = (2.0 * (z_star - start).norm()).max(1e-6);
            if winding_on_circle(map, pt.sheet, z_star, radius, samples) >= 1 {
                found.push(Witness {
                    z: z_star,
                    sheet: pt.sheet,
                    value: h_star,
                });
            }
        }
    }

    // On-cut zeros of the boundary difference 2i Im m (vanishing density).
    let bands = map.bands().bands.clone();
    for (lo, hi) in bands {
        let len = hi - lo;
        let margin = (1e-3 * len).max(1e-9);
        let k = cfg.band_samples.max(8);
        let mut vals: Vec<(f64, f64)> = Vec::new();
        for i in 0..k {
            let x = lo + margin + (len - 2.0 * margin) * i as f64 / (k - 1) as f64;
            if let Some(h) = eval_h(map, &on_cut_point(map, x), samples) {
                vals.push((x, h.norm()));
            }
        }
        if vals.is_empty() {
            continue;
        }
        let mut m2: Vec<f64> = vals.iter().map(|v| v.1).collect();
        m2.sort_by(f64::total_cmp);
        let cut_scale = m2[m2.len() / 2];
        for &(x, hv) in &vals {
            if hv <= 1e-9 * cut_scale.max(1e-9) {
                if found
                    .iter()
                    .any(|w| (w.z - Complex64::new(x, 0.0)).norm() <= 1e-6)
                {
                    continue;
                }
                found.push(Witness {
                    z: Complex64::new(x, 0.0),
                    sheet: Sheet::Plus,
                    value: Complex64::new(hv, 0.0),
                });
            }
        }
    }

    found.truncate(cfg.max_witnesses);
    report.mm_sharp_zero_violations = found;
}

fn newton_zero(
    map: &dyn SurfaceMap,
    start: &SurfacePoint,
    samples: &mut usize,
) -> Option<(Complex64, Complex64)> {
    let mut z = start.z;
    let sheet = start.sheet;
    let h_at = |z: Complex64, samples: &mut usize| -> Option<Complex64> {
        eval_h(map, &SurfacePoint::new(z, sheet), samples)
    };
    for _ in 0..40 {
        let f = h_at(z, samples)?;
        let step_scale = 1e-7 * (1.0 + z.norm());
        let d = (h_at(z + Complex64::new(step_scale, 0.0), samples)?
            - h_at(z - Complex64::new(step_scale, 0.0), samples)?)
            / Complex64::new(2.0 * step_scale, 0.0);
        if d.norm() == 0.0 {
            return None;
        }
        let step = f / d;
        z -= step;
        if !z.re.is_finite() || !z.im.is_finite() {
            return None;
        }
        if step.norm() <= 1e-12 * (1.0 + z.norm()) {
            let f = h_at(z, samples)?;
            return Some((z, f));
        }
    }
    None
}

fn winding_on_circle(
    map: &dyn SurfaceMap,
    sheet: Sheet,
    center: Complex64,
    radius: f64,
    samples: &mut usize,
) -> i32 {
    let n = 128;
    let mut prev: Option<f64> = None;
    let mut total = 0.0;
    for k in 0..=n {
        let th = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
        let z = center + radius * Complex64::new(th.cos(), th.sin());
        let h = match eval_h(map, &SurfacePoint::new(z, sheet), samples) {
            Some(h) if h.norm() > 0.0 => h,
            _ => return 0,
        };
        let arg = h.arg();
        if let Some(p) = prev {
            let mut d = arg - p;
            while d > std::f64::consts::PI {
                d -= 2.0 * std::f64::consts::PI;
            }
            while d < -std::f64::consts::PI {
                d += 2.0 * std::f64::consts::PI;
            }
            total += d;
        }
        prev = Some(arg);
    }
    (total / (2.0 * std::f64::consts::PI)).round() as i32
}

fn scan_sharp_pairs(
    map: &dyn SurfaceMap,
    region: ContinuationRegion,
    cfg: &SamplerConfig,
    report: &mut ConditionReport,
    samples: &mut usize,
) {
    let (x0, x1, pad) = region_box(map, region);
    let bands = map.bands();
    // Real-line pole scan over gaps and exterior segments, on both sheets.
    let mut segs: Vec<(f64, f64)> = Vec::new();
    let mut cursor = x0;
    for &(blo, bhi) in &bands.bands {
        if blo > cursor {
            segs.push((cursor, blo - 1e-9 * (1.0 + blo.abs())));
        }
        cursor = bhi + 1e-9 * (1.0 + bhi.abs());
    }
    if x1 > cursor {
        segs.push((cursor, x1));
    }

    let mut poles: Vec<(Complex64, Sheet)> = Vec::new();
    for sheet in [Sheet::Plus, Sheet::Minus] {
        for &(lo, hi) in &segs {
            if hi <= lo {
                continue;
            }
            let k = 400usize;
            let g = |x: f64, samples: &mut usize| -> f64 {
                *samples += 1;
                match map.eval(&SurfacePoint::new(Complex64::new(x, 0.0), sheet)) {
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
            let mut px = lo;
            let mut pg = g(px, samples);
            for i in 1..=k {
                let x = lo + (hi - lo) * i as f64 / k as f64;
                let gx = g(x, samples);
                if gx == 0.0 {
                    let loc = Complex64::new(x, 0.0);
                    if inside_region(map, region, loc) {
                        poles.push((loc, sheet));
                    }
                } else if pg > 0.0 && gx < 0.0 {
                    let (mut a, mut b) = (px, x);
                    for _ in 0..100 {
                        let mid = 0.5 * (a + b);
                        if g(mid, samples) > 0.0 {
                            a = mid;
                        } else {
                            b = mid;
                        }
                    }
                    let loc = Complex64::new(0.5 * (a + b), 0.0);
                    if inside_region(map, region, loc) {
                        poles.push((loc, sheet));
                    }
                }
                px = x;
                pg = gx;
            }
        }
    }

    // Off-axis poles on the minus sheet: chase grid maxima of |m|.
    let n = cfg.grid.max(8);
    let dx = (x1 - x0) / n as f64;
    let dy = 2.0 * pad / n as f64;
    let mut hot: Vec<Complex64> = Vec::new();
    for iy in 0..=n {
        let y = -pad + iy as f64 * dy;
        if y.abs() < 0.25 * dy {
            continue;
        }
        for ix in 0..=n {
            let z = Complex64::new(x0 + ix as f64 * dx, y);
            if !inside_region(map, region, z) {
                continue;
            }
            let v = eval_mag(map, &SurfacePoint::new(z, Sheet::Minus), samples);
            if v > 1e4 {
                hot.push(z);
            }
        }
    }
    for z in hot {
        if let Some((loc, peak)) = chase_max_2d(map, Sheet::Minus, z, dx.max(dy), cfg, samples) {
            if peak > cfg.pole_threshold
                && inside_region(map, region, loc)
                && !poles.iter().any(|(p, s)| {
                    *s == Sheet::Minus && (p - loc).norm() <= 1e-6 * (1.0 + loc.norm())
                })
            {
                poles.push((loc, Sheet::Minus));
            }
        }
    }

    // Sharp partner probe at each pole.
    for (z, sheet) in poles {
        let bands_contains = bands.contains(z.re, 1e-9) && z.im.abs() <= 1e-9;
        if bands_contains {
            continue;
        }
        let partner = sharp(&SurfacePoint::new(z, sheet));
        let direct = eval_mag(map, &partner, samples);
        let chased = chase_max_2d(map, partner.sheet, partner.z, 1e-7, cfg, samples)
            .map(|(_, v)| v)
            .unwrap_or(direct);
        if direct.max(chased) > cfg.pole_threshold
            && report.sharp_pair_pole_violations.len() < cfg.max_witnesses
        {
            report.sharp_pair_pole_violations.push(Witness {
                z,
                sheet,
                value: Complex64::new(direct.max(chased), 0.0),
            });
        }
    }
}

fn chase_max_2d(
    map: &dyn SurfaceMap,
    sheet: Sheet,
    z0: Complex64,
    radius0: f64,
    cfg: &SamplerConfig,
    samples: &mut usize,
) -> Option<(Complex64, f64)> {
    let mut best = z0;
    let mut best_v = eval_mag(map, &SurfacePoint::new(z0, sheet), samples);
    let mut r = radius0;
    while r > 1e-12 * (1.0 + best.norm()) {
        for iy in -2i32..=2 {
            for ix in -2i32..=2 {
                let z = best + Complex64::new(ix as f64 * r / 2.0, iy as f64 * r / 2.0);
                let v = eval_mag(map, &SurfacePoint::new(z, sheet), samples);
                if v > best_v {
                    best_v = v;
                    best = z;
                }
            }
        }
        if best_v > 10.0 * cfg.pole_threshold {
            break;
        }
        r /= 4.0;
    }
    Some((best, best_v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jacobi::{PerturbedJacobi, Tail};
    use crate::periodic::PeriodicJacobi;

    fn free_tail(prefix_a: Vec<f64>, prefix_b: Vec<f64>) -> PerturbedJacobi {
        PerturbedJacobi::new(
            prefix_a,
            prefix_b,
            Tail::Periodic {
                tail: PeriodicJacobi::free(),
                phase: 0,
            },
        )
        .unwrap()
    }

    #[test]
    fn free_operator_all_pass() {
        let m = MContinuation::new(&PerturbedJacobi::free()).unwrap();
        let report = check_conditions(
            &m,
            ContinuationRegion::Radius(2.0),
            &SamplerConfig::default(),
        );
        assert!(report.all_pass(), "{report:?}");
        assert!(report.samples_used > 0);
    }

    #[test]
    fn single_pole_operator_passes() {
        // One plus-sheet pole at 10/3; its sharp partner is regular.
        let m = MContinuation::new(&free_tail(vec![1.0], vec![3.0])).unwrap();
        let report = check_conditions(&m, ContinuationRegion::Full, &SamplerConfig::default());
        assert!(report.all_pass(), "{report:?}");
    }

    #[test]
    fn synthetic_band_pole_is_flagged() {
        // m_free plus a pole sitting on the band at x0 = 0.5.
        let base = MContinuation::new(&PerturbedJacobi::free()).unwrap();
        let bands = base.bands().clone();
        let delta = base.delta().clone();
        let x0 = 0.5;
        let map = CustomSurfaceMap {
            f: Box::new(move |x: &SurfacePoint| match base.eval(x) {
                MValue::Finite(v) => {
                    let d = x.z - Complex64::new(x0, 0.0);
                    if d.norm() == 0.0 {
                        MValue::Pole
                    } else {
                        MValue::Finite(v + 0.1 / d)
                    }
                }
                MValue::Pole => MValue::Pole,
            }),
            bands,
            delta,
            continuation_ok: true,
        };
        let report = scan_conditions(
            &map,
            ContinuationRegion::Radius(2.0),
            &SamplerConfig::default(),
        );
        assert!(!report.band_pole_violations.is_empty());
        let w = report.band_pole_violations[0];
        assert!((w.z.re - x0).abs() < 1e-3, "witness at {}", w.z.re);
    }

    #[test]
    fn synthetic_symmetric_m_is_flagged() {
        // m + m_sharp is sharp-invariant, so the difference vanishes
        // identically.
        let base = MContinuation::new(&PerturbedJacobi::free()).unwrap();
        let bands = base.bands().clone();
        let delta = base.delta().clone();
        let base2 = base.clone();
        let map = CustomSurfaceMap {
            f: Box::new(
                move |x: &SurfacePoint| match (base2.eval(x), base2.eval_sharp(x)) {
                    (MValue::Finite(a), MValue::Finite(b)) => MValue::Finite(a + b),
                    _ => MValue::Pole,
                },
            ),
            bands,
            delta,
            continuation_ok: true,
        };
        let report = scan_conditions(
            &map,
            ContinuationRegion::Radius(2.0),
            &SamplerConfig::default(),
        );
        assert!(!report.mm_sharp_zero_violations.is_empty());
    }

    #[test]
    fn synthetic_edge_zero_order_is_flagged() {
        // Multiplying by (z - 2) raises the edge zero of m - m_sharp at 2
        // to order 3 in the local coordinate.
        let base = MContinuation::new(&PerturbedJacobi::free()).unwrap();
        let bands = base.bands().clone();
        let delta = base.delta().clone();
        let base2 = base.clone();
        let map = CustomSurfaceMap {
            f: Box::new(move |x: &SurfacePoint| match base2.eval(x) {
                MValue::Finite(v) => MValue::Finite(v * (x.z - 2.0)),
                MValue::Pole => MValue::Pole,
            }),
            bands,
            delta,
            continuation_ok: true,
        };
        let report = scan_conditions(
            &map,
            ContinuationRegion::Radius(2.0),
            &SamplerConfig::default(),
        );
        let edge = report
            .band_edge_pole_orders
            .iter()
            .find(|e| (e.edge - 2.0).abs() < 1e-9)
            .expect("edge entry");
        assert!(edge.violating, "{edge:?}");
        assert!(edge.mm_sharp_zero_order >= 2);
    }
}
