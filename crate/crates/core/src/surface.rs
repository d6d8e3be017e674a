//! Two-sheeted cover arithmetic: surface points, the sharp involution, the
//! branch-tracked square root of `delta^2 - 4`, the Joukowski coordinate,
//! and the continuation regions bounded by its level sets.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::periodic::{band_structure, delta_preimages, BandStructure};
use crate::polycore::Poly;

/// Absolute tolerance for identifying a base point with the band set, where
/// the two sheets are glued.
pub const ON_CUT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sheet {
    Plus,
    Minus,
}

impl Sheet {
    pub fn flip(self) -> Sheet {
        match self {
            Sheet::Plus => Sheet::Minus,
            Sheet::Minus => Sheet::Plus,
        }
    }

    pub fn signum(self) -> f64 {
        match self {
            Sheet::Plus => 1.0,
            Sheet::Minus => -1.0,
        }
    }
}

/// A point of the two-sheeted cover: base value plus sheet tag. `on_cut`
/// marks base points lying in the band set, where the sheets are glued and
/// the tag no longer distinguishes points.
#[derive(Debug, Clone, Copy)]
pub struct SurfacePoint {
    pub z: Complex64,
    pub sheet: Sheet,
    pub on_cut: bool,
}

impl SurfacePoint {
    /// A point declared off the cut.
    pub fn new(z: Complex64, sheet: Sheet) -> Self {
        SurfacePoint {
            z,
            sheet,
            on_cut: false,
        }
    }

    /// A point with cut membership decided against the given band set.
    pub fn on_surface(bands: &BandStructure, z: Complex64, sheet: Sheet) -> Self {
        let on_cut = z.im.abs() <= ON_CUT_TOL && bands.contains(z.re, ON_CUT_TOL);
        SurfacePoint { z, sheet, on_cut }
    }
}

impl PartialEq for SurfacePoint {
    fn eq(&self, other: &Self) -> bool {
        if self.on_cut && other.on_cut {
            self.z == other.z
        } else {
            self.z == other.z && self.sheet == other.sheet && self.on_cut == other.on_cut
        }
    }
}

/// The sharp involution: conjugate base point on the opposite sheet, fixing
/// the cut.
pub fn sharp(x: &SurfacePoint) -> SurfacePoint {
    if x.on_cut {
        *x
    } else {
        SurfacePoint {
            z: x.z.conj(),
            sheet: x.sheet.flip(),
            on_cut: false,
        }
    }
}

/// Branch-tracked square root of `delta^2 - 4` on the two-sheeted cover.
///
/// The branch is anchored at a real point to the right of all bands, where
/// `s / delta -> 1` toward `+infinity` on the plus sheet, and transported by
/// continuity along paths that do not cross the band set. The minus sheet
/// carries the negated value. At on-cut points the limit from the upper half
/// plane on the plus sheet is returned regardless of the sheet tag, matching
/// the convention that the sharp involution fixes cut points.
#[derive(Debug, Clone)]
pub struct SqrtDisc {
    delta: Poly,
    disc: Poly,
    bands: BandStructure,
    anchor: f64,
    s_anchor: Complex64,
}

impl SqrtDisc {
    pub fn new(delta: &Poly) -> Result<Self> {
        let bands = band_structure(delta)?;
        Self::with_bands(delta, bands)
    }

    pub fn with_bands(delta: &Poly, bands: BandStructure) -> Result<Self> {
        let d2 = delta * delta;
        let disc = &d2 - &Poly::from_real(&[4.0]);
        let span = (bands.x_max() - bands.x_min()).max(1.0);
        let anchor = bands.x_max() + 0.5 * span + 1.0;
        let dv = delta.eval(Complex64::new(anchor, 0.0)).re;
        let mag = (dv * dv - 4.0).max(0.0).sqrt();
        if mag == 0.0 {
            return Err(Error::Invalid("anchor landed on a band edge".into()));
        }
        let s_anchor = Complex64::new(dv.signum() * mag, 0.0);
        Ok(SqrtDisc {
            delta: delta.clone(),
            disc,
            bands,
            anchor,
            s_anchor,
        })
    }

    pub fn delta(&self) -> &Poly {
        &self.delta
    }

    pub fn bands(&self) -> &BandStructure {
        &self.bands
    }

    /// The branch value at `x`, with `s^2 = delta(z)^2 - 4` exact up to one
    /// final square root rounding.
    pub fn eval(&self, x: &SurfacePoint) -> Complex64 {
        let s_plus = self.eval_plus(x.z, x.on_cut);
        if x.on_cut {
            s_plus
        } else {
            match x.sheet {
                Sheet::Plus => s_plus,
                Sheet::Minus => -s_plus,
            }
        }
    }

    /// Plus-sheet value at base `z`; on-cut points take the limit from the
    /// upper half plane.
    fn eval_plus(&self, z: Complex64, on_cut: bool) -> Complex64 {
        let target = if on_cut || (z.im == 0.0 && self.bands.contains(z.re, ON_CUT_TOL)) {
            Complex64::new(z.re, 1e-7 * (1.0 + z.re.abs()))
        } else {
            z
        };
        let path = self.path_to(target);
        let transported = self.transport(&path);
        // Snap to an exact square root of disc(z), keeping the transported
        // branch.
        let w = self.disc.eval(z);
        let r = w.sqrt();
        if (r - transported).norm() <= (-r - transported).norm() {
            r
        } else {
            -r
        }
    }

    fn path_to(&self, t: Complex64) -> Vec<Complex64> {
        // Around the band set at height H, then straight down (or up) onto
        // the target; the descent at Re(t) stays clear of the branch points
        // until the very end.
        let a = Complex64::new(self.anchor, 0.0);
        let h = (1.0 + 0.5 * (self.bands.x_max() - self.bands.x_min())).max(1.5 * t.im.abs());
        let h = if t.im < 0.0 { -h } else { h };
        vec![
            a,
            Complex64::new(self.anchor, h),
            Complex64::new(t.re, h),
            t,
        ]
    }

    fn transport(&self, path: &[Complex64]) -> Complex64 {
        // The branch points of disc = delta^2 - 4 are exactly the band
        // edges, so |d arg(disc)/dl| <= deg / dist(z, edges). Stepping with
        // h = 0.15 * dist / deg keeps the true rotation of s below ~0.1 rad
        // per step, making nearest-candidate selection alias-free (the
        // wrong branch always sits a half turn away).
        let edges = self.bands.edges();
        let deg = self.disc.degree().max(2) as f64;
        let mut s = self.s_anchor;
        for leg in path.windows(2) {
            let (from, to) = (leg[0], leg[1]);
            let len = (to - from).norm();
            if len == 0.0 {
                continue;
            }
            let mut t = 0.0f64;
            while t < 1.0 {
                let z_cur = from + (to - from) * t;
                let dist = edges
                    .iter()
                    .map(|&e| (z_cur - Complex64::new(e, 0.0)).norm())
                    .fold(f64::INFINITY, f64::min);
                if dist <= 1e-12 * (1.0 + z_cur.norm()) {
                    // Touching a branch zero: s vanishes there and the sign
                    // is settled by the final snap.
                    break;
                }
                let h = 0.15 * dist / deg;
                t = (t + h / len).min(1.0);
                let z = from + (to - from) * t;
                let r = self.disc.eval(z).sqrt();
                s = if (r - s).norm() <= (-r - s).norm() { r } else { -r };
            }
        }
        s
    }
}

/// One-shot branch-tracked square root of `delta(z)^2 - 4` at `x`.
pub fn sqrt_disc(delta: &Poly, x: &SurfacePoint) -> Result<Complex64> {
    Ok(SqrtDisc::new(delta)?.eval(x))
}

/// The solution of `w + 1/w = delta(z)` with `|w| >= 1`; ties on `|w| = 1`
/// resolve to nonnegative imaginary part.
pub fn joukowski_coord(delta: &Poly, z: Complex64) -> Complex64 {
    let d = delta.eval(z);
    let r = (d * d - 4.0).sqrt();
    let w1 = (d + r) / 2.0;
    let w2 = (d - r) / 2.0;
    let n1 = w1.norm();
    let n2 = w2.norm();
    if (n1 - n2).abs() <= 1e-12 * (n1 + n2) {
        if w1.im >= 0.0 {
            w1
        } else {
            w2
        }
    } else if n1 > n2 {
        w1
    } else {
        w2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Membership {
    Inside,
    Boundary,
    Outside,
}

/// Classifies `z` against the region bounded by the level `|w| = R` of the
/// Joukowski coordinate, with boundary tolerance `1e-9 * R`.
pub fn er_membership(delta: &Poly, r: f64, z: Complex64) -> Result<Membership> {
    if !r.is_finite() || r <= 1.0 {
        return Err(Error::Invalid(format!("R must exceed 1 (got {r})")));
    }
    let tol = 1e-9 * r;
    let w = joukowski_coord(delta, z).norm();
    Ok(if w < r - tol {
        Membership::Inside
    } else if w <= r + tol {
        Membership::Boundary
    } else {
        Membership::Outside
    })
}

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

/// Marching-squares contours of `|w(z)| - R`.
#[derive(Debug, Clone)]
pub struct LevelSet {
    /// Polylines, closed ones oriented counterclockwise.
    pub contours: Vec<Vec<(f64, f64)>>,
    /// Set when the bounding box does not contain all bands (contours may
    /// be clipped).
    pub clipped: bool,
}

/// Extracts the level set `|joukowski_coord| = R` on a `resolution` by
/// `resolution` cell grid over `bbox`. Deterministic for fixed inputs;
/// saddle cells are disambiguated by sampling the cell midpoint.
pub fn er_levelset(delta: &Poly, r: f64, bbox: Rect, resolution: usize) -> Result<LevelSet> {
    if resolution < 16 {
        return Err(Error::Invalid(format!(
            "resolution must be at least 16 (got {resolution})"
        )));
    }
    if !r.is_finite() || r <= 1.0 {
        return Err(Error::Invalid(format!("R must exceed 1 (got {r})")));
    }
    let bands = band_structure(delta)?;
    let clipped =
        !(bbox.x0 <= bands.x_min() && bbox.x1 >= bands.x_max() && bbox.y0 <= 0.0 && bbox.y1 >= 0.0);
    let g = |x: f64, y: f64| joukowski_coord(delta, Complex64::new(x, y)).norm() - r;
    let contours = marching_squares(&g, bbox, resolution);
    Ok(LevelSet { contours, clipped })
}

/// Zero-contour tracer for `g < 0` regions on a regular grid: linear
/// interpolation on cell edges, midpoint sampling at saddle cells, chains
/// assembled in key order, closed chains oriented counterclockwise.
fn marching_squares(g: &dyn Fn(f64, f64) -> f64, bbox: Rect, n: usize) -> Vec<Vec<(f64, f64)>> {
    let dx = (bbox.x1 - bbox.x0) / n as f64;
    let dy = (bbox.y1 - bbox.y0) / n as f64;

    let mut values = vec![0.0f64; (n + 1) * (n + 1)];
    for iy in 0..=n {
        for ix in 0..=n {
            let v = g(bbox.x0 + ix as f64 * dx, bbox.y0 + iy as f64 * dy);
            // A node exactly on the contour would spawn degenerate chains;
            // count it as outside by an infinitesimal margin.
            values[iy * (n + 1) + ix] = if v == 0.0 { f64::MIN_POSITIVE } else { v };
        }
    }
    let val = |ix: usize, iy: usize| values[iy * (n + 1) + ix];

    // Crossing points keyed by grid edge; segments connect two edges.
    type EdgeKey = (usize, usize, u8); // (ix, iy, 0 = horizontal from (ix,iy), 1 = vertical)
    let interp = |a: f64, b: f64| a / (a - b);
    let point_on = |key: EdgeKey| -> (f64, f64) {
        let (ix, iy, dir) = key;
        let x = bbox.x0 + ix as f64 * dx;
        let y = bbox.y0 + iy as f64 * dy;
        if dir == 0 {
            let t = interp(val(ix, iy), val(ix + 1, iy));
            (x + t * dx, y)
        } else {
            let t = interp(val(ix, iy), val(ix, iy + 1));
            (x, y + t * dy)
        }
    };

    let mut segments: Vec<(EdgeKey, EdgeKey)> = Vec::new();
    for iy in 0..n {
        for ix in 0..n {
            let c00 = val(ix, iy) < 0.0;
            let c10 = val(ix + 1, iy) < 0.0;
            let c11 = val(ix + 1, iy + 1) < 0.0;
            let c01 = val(ix, iy + 1) < 0.0;
            let case = (c00 as u8) | (c10 as u8) << 1 | (c11 as u8) << 2 | (c01 as u8) << 3;
            if case == 0 || case == 15 {
                continue;
            }
            let bottom: EdgeKey = (ix, iy, 0);
            let top: EdgeKey = (ix, iy + 1, 0);
            let left: EdgeKey = (ix, iy, 1);
            let right: EdgeKey = (ix + 1, iy, 1);
            let mut push = |a: EdgeKey, b: EdgeKey| segments.push((a, b));
            match case {
                1 | 14 => push(left, bottom),
                2 | 13 => push(bottom, right),
                3 | 12 => push(left, right),
                4 | 11 => push(right, top),
                6 | 9 => push(bottom, top),
                7 | 8 => push(left, top),
                5 | 10 => {
                    // Saddle: the midpoint sample decides whether the
                    // inside corners join across the diagonal (arcs then
                    // cut off the two outside corners) or stay isolated.
                    let cx = bbox.x0 + (ix as f64 + 0.5) * dx;
                    let cy = bbox.y0 + (iy as f64 + 0.5) * dy;
                    let mid_inside = g(cx, cy) < 0.0;
                    if (case == 5) == mid_inside {
                        push(left, top);
                        push(bottom, right);
                    } else {
                        push(left, bottom);
                        push(right, top);
                    }
                }
                _ => unreachable!(),
            }
        }
    }

    // Chain segments into polylines, deterministically from the smallest key.
    use std::collections::BTreeMap;
    let mut adj: BTreeMap<EdgeKey, Vec<usize>> = BTreeMap::new();
    for (i, (a, b)) in segments.iter().enumerate() {
        adj.entry(*a).or_default().push(i);
        adj.entry(*b).or_default().push(i);
    }
    let mut used = vec![false; segments.len()];
    let mut contours = Vec::new();
    let keys: Vec<EdgeKey> = adj.keys().cloned().collect();
    for start_key in keys {
        let start_seg = match adj[&start_key].iter().find(|&&s| !used[s]) {
            Some(&s) => s,
            None => continue,
        };
        used[start_seg] = true;
        let (a0, b0) = segments[start_seg];
        let mut chain = vec![a0, b0];
        // Extend forward from the tail, then from the head.
        for end in 0..2 {
            loop {
                let tip = if end == 0 {
                    *chain.last().unwrap()
                } else {
                    chain[0]
                };
                let next = adj
                    .get(&tip)
                    .and_then(|list| list.iter().find(|&&s| !used[s]).copied());
                match next {
                    Some(s) => {
                        used[s] = true;
                        let (a, b) = segments[s];
                        let other = if a == tip { b } else { a };
                        if end == 0 {
                            chain.push(other);
                        } else {
                            chain.insert(0, other);
                        }
                    }
                    None => break,
                }
            }
        }
        let mut pts: Vec<(f64, f64)> = chain.iter().map(|&k| point_on(k)).collect();
        let closed = chain.first() == chain.last() && chain.len() > 2;
        if closed {
            pts.pop();
            if signed_area(&pts) < 0.0 {
                pts.reverse();
            }
            pts.push(pts[0]);
        }
        contours.push(pts);
    }

    contours
}

fn signed_area(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len();
    let mut acc = 0.0;
    for i in 0..n {
        let (x0, y0) = pts[i];
        let (x1, y1) = pts[(i + 1) % n];
        acc += x0 * y1 - x1 * y0;
    }
    acc / 2.0
}

/// Lifts a point of the genus-zero cover through the j-th branch of the
/// discriminant preimage: base value `f_j(pi(lambda))`, sheet tag copied.
pub fn lift_preimage(delta: &Poly, lambda: &SurfacePoint, j: usize) -> Result<SurfacePoint> {
    let pre = delta_preimages(delta, lambda.z)?;
    if pre.critical {
        return Err(Error::CriticalValue(lambda.z));
    }
    if j >= pre.values.len() {
        return Err(Error::Invalid(format!(
            "branch index {j} out of range for degree {}",
            pre.values.len()
        )));
    }
    let bands = band_structure(delta)?;
    Ok(SurfacePoint::on_surface(
        &bands,
        pre.values[j],
        lambda.sheet,
    ))
}
