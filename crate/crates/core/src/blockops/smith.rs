//! Local Smith–McMillan orders of a matrix-valued meromorphic function,
//! estimated from singular-value slopes on shrinking circles and
//! cross-checked against the winding number of the determinant.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Local orders `kappa_1 >= ... >= kappa_p` at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct SmithOrders {
    pub kappas: Vec<i32>,
    /// `max(0, -kappa_p)`.
    pub pole_order: i32,
    /// `sum kappa_j`, the order of `det f` (negative for a det pole).
    pub zero_order_det: i32,
    /// Kernel dimension when `f` is analytic at the point (all orders
    /// nonnegative): the count of strictly positive orders.
    pub kernel_dim_at_point: Option<usize>,
}

const RADII: [f64; 4] = [1e-2, 1e-3, 1e-4, 1e-5];
/// Fallback ladder for wide order spreads, where the classic radii would
/// push the singular values past the f64 dynamic range.
const RADII_COMPACT: [f64; 4] = [1e-1, 4.641588833612778e-2, 2.1544346900318832e-2, 1e-2];
const CIRCLE_SAMPLES: usize = 16;
const SLOPE_SNAP_TOL: f64 = 0.2;

/// Estimates the Smith–McMillan orders of `f` at `z0`. `scale` sets the
/// sampling-radius unit; the function must be analytic on the punctured
/// disc of radius `0.1 * scale` with `det f` not identically zero.
pub fn smith_orders<F>(f: F, z0: Complex64, scale: f64) -> Result<SmithOrders>
where
    F: Fn(Complex64) -> DMatrix<Complex64>,
{
    if !scale.is_finite() || scale <= 0.0 {
        return Err(Error::Invalid(format!(
            "scale must be positive, got {scale}"
        )));
    }
    let probe = f(z0 + Complex64::new(scale * RADII[0], 0.0));
    let p = probe.nrows();
    if p == 0 || probe.ncols() != p {
        return Err(Error::Invalid(
            "sampler must produce square matrices".into(),
        ));
    }

    // Probe the order spread: past spread ~2.6 the smallest singular value
    // at radius 1e-5 would sink below the f64 noise floor of the largest,
    // so a compact ladder takes over.
    let probe_svd = probe.svd(false, false);
    let smax = probe_svd
        .singular_values
        .iter()
        .fold(0.0f64, |a, &b| a.max(b));
    let smin = probe_svd
        .singular_values
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b));
    let radii: &[f64; 4] = if smin > 1e-5 * smax {
        &RADII
    } else {
        &RADII_COMPACT
    };

    // Mean log singular values per circle. nalgebra sorts singular values
    // descending, so index i tracks the i-th smallest exponent.
    let mut mean_log_sv = vec![[0.0f64; RADII.len()]; p];
    for (ci, &rr) in radii.iter().enumerate() {
        let r = scale * rr;
        let mut acc = vec![0.0f64; p];
        for k in 0..CIRCLE_SAMPLES {
            let th = 2.0 * std::f64::consts::PI * k as f64 / CIRCLE_SAMPLES as f64;
            let z = z0 + r * Complex64::new(th.cos(), th.sin());
            let svd = f(z).svd(false, false);
            for (slot, &sv) in acc.iter_mut().zip(svd.singular_values.iter()) {
                *slot += sv.max(1e-300).ln();
            }
        }
        for i in 0..p {
            mean_log_sv[i][ci] = acc[i] / CIRCLE_SAMPLES as f64;
        }
    }

    let log_radii: Vec<f64> = radii.iter().map(|&rr| (scale * rr).ln()).collect();
    let mut kappas = Vec::with_capacity(p);
    for logs in &mean_log_sv {
        let slope = slope_fit(&log_radii, logs);
        let snapped = slope.round();
        if (slope - snapped).abs() > SLOPE_SNAP_TOL {
            return Err(Error::OrderEstimation(format!(
                "singular-value slope {slope:.3} too far from an integer"
            )));
        }
        kappas.push(snapped as i32);
    }
    kappas.sort_unstable_by(|a, b| b.cmp(a));

    let total: i32 = kappas.iter().sum();
    let winding = det_winding(&f, z0, scale * radii[radii.len() - 1])?;
    if winding != total {
        return Err(Error::OrderEstimation(format!(
            "winding {winding} of det disagrees with sum of orders {total} (kappas {kappas:?})"
        )));
    }

    let pole_order = (-kappas[p - 1]).max(0);
    let kernel_dim_at_point = if kappas[p - 1] >= 0 {
        Some(kappas.iter().filter(|&&k| k >= 1).count())
    } else {
        None
    };
    Ok(SmithOrders {
        kappas,
        pole_order,
        zero_order_det: total,
        kernel_dim_at_point,
    })
}

fn slope_fit(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

fn det_winding<F>(f: &F, z0: Complex64, radius: f64) -> Result<i32>
where
    F: Fn(Complex64) -> DMatrix<Complex64>,
{
    let n = 256;
    let mut prev: Option<f64> = None;
    let mut total = 0.0;
    for k in 0..=n {
        let th = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
        let z = z0 + radius * Complex64::new(th.cos(), th.sin());
        let d = f(z).lu().determinant();
        if d.norm() == 0.0 {
            return Err(Error::OrderEstimation(
                "determinant vanished on the winding circle".into(),
            ));
        }
        let arg = d.arg();
        if let Some(p) = prev {
            let mut diff = arg - p;
            while diff > std::f64::consts::PI {
                diff -= 2.0 * std::f64::consts::PI;
            }
            while diff < -std::f64::consts::PI {
                diff += 2.0 * std::f64::consts::PI;
            }
            total += diff;
        }
        prev = Some(arg);
    }
    let w = total / (2.0 * std::f64::consts::PI);
    if (w - w.round()).abs() > 0.2 {
        return Err(Error::OrderEstimation(format!(
            "non-integer winding estimate {w:.3}"
        )));
    }
    Ok(w.round() as i32)
}
