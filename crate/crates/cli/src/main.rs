//! Command-line front end: parses operator files, dispatches to the library,
//! and serializes reports, tables, and contour figures.
//!
//! Exit codes: 0 success, 1 violations found by a check command, 2 input
//! errors.

mod opfile;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use fgs_core::blockops;
use fgs_core::mfunction::{
    self, check_conditions, ContinuationRegion, DecayRate, MContinuation, SamplerConfig,
};
use fgs_core::periodic::{band_structure, torus_check};
use fgs_core::surface::{er_levelset, Rect, Sheet};

use opfile::{parse_operator_file, OperatorInput};

#[derive(Parser)]
#[command(
    name = "fgs",
    version,
    about = "Periodic Jacobi operators on finite gap sets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Args)]
struct Common {
    /// Operator file (JSON).
    #[arg(long)]
    input: PathBuf,
    /// Output file; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Level parameter R (> 1) for region commands.
    #[arg(long = "R", value_name = "R")]
    r: Option<f64>,
    /// Bounding box x0,y0,x1,y1.
    #[arg(long, value_parser = parse_bbox)]
    bbox: Option<Rect>,
    /// Grid resolution (cells per axis).
    #[arg(long)]
    resolution: Option<usize>,
    /// Seed for randomized sample placement.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sample count (or window size, where a command scans rows).
    #[arg(long)]
    samples: Option<usize>,
}

fn parse_bbox(text: &str) -> Result<Rect, String> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 4 {
        return Err("expected x0,y0,x1,y1".into());
    }
    let mut vals = [0.0f64; 4];
    for (i, p) in parts.iter().enumerate() {
        vals[i] = p.trim().parse::<f64>().map_err(|e| e.to_string())?;
    }
    if vals[0] >= vals[2] || vals[1] >= vals[3] {
        return Err("bbox must satisfy x0 < x1 and y0 < y1".into());
    }
    Ok(Rect {
        x0: vals[0],
        y0: vals[1],
        x1: vals[2],
        y1: vals[3],
    })
}

#[derive(Subcommand)]
enum Command {
    /// Discriminant polynomial of the periodic part.
    Discriminant(Common),
    /// Band and gap structure.
    Bands(Common),
    /// Torus membership test against the periodic part's discriminant.
    TorusCheck(Common),
    /// Sample the m-function on the plus sheet.
    Mfun(Common),
    /// Sample the meromorphic continuation on the minus sheet.
    Continue(Common),
    /// Level-set contours of the Joukowski coordinate.
    ErRegion(Common),
    /// Two-path identity verifers: resolvent sum, determinants, eigenvalues.
    VerifyIdentities(Common),
    /// Decay rate of the coefficients against the phase-aligned tail.
    DecayRate(Common),
    /// Continuation-condition report.
    Conditions(Common),
    /// Plus-sheet point masses and the total-mass account.
    PointMasses(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = thread_cap() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let result = match &cli.command {
        Command::Discriminant(c) => cmd_discriminant(c),
        Command::Bands(c) => cmd_bands(c),
        Command::TorusCheck(c) => cmd_torus_check(c),
        Command::Mfun(c) => cmd_mfun(c, Sheet::Plus),
        Command::Continue(c) => cmd_mfun(c, Sheet::Minus),
        Command::ErRegion(c) => cmd_er_region(c),
        Command::VerifyIdentities(c) => cmd_verify_identities(c),
        Command::DecayRate(c) => cmd_decay_rate(c),
        Command::Conditions(c) => cmd_conditions(c),
        Command::PointMasses(c) => cmd_point_masses(c),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// FGS_THREADS caps internal parallelism. Evaluation currently runs on one
/// thread, which honors any valid cap; the value is still validated so
/// misconfigured environments fail loudly.
fn thread_cap() -> anyhow::Result<usize> {
    match std::env::var("FGS_THREADS") {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .map_err(|_| anyhow!("FGS_THREADS must be a positive integer, got {v:?}"))?;
            if n == 0 {
                bail!("FGS_THREADS must be at least 1");
            }
            Ok(n)
        }
        Err(_) => Ok(1),
    }
}

fn emit(common: &Common, content: &str) -> anyhow::Result<()> {
    match &common.output {
        Some(path) => {
            std::fs::write(path, content).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn emit_json(common: &Common, value: &serde_json::Value) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    emit(common, &text)
}

fn load(common: &Common) -> anyhow::Result<OperatorInput> {
    parse_operator_file(&common.input)
}

fn continuation(common: &Common) -> anyhow::Result<MContinuation> {
    let op = load(common)?.as_perturbed();
    MContinuation::new(&op).map_err(|e| anyhow!("{e}"))
}

fn cmd_discriminant(common: &Common) -> anyhow::Result<u8> {
    let pp = load(common)?.periodic_part()?;
    let d = pp.discriminant();
    let coeffs = d
        .real_coeffs(1e-12)
        .ok_or_else(|| anyhow!("discriminant coefficients not real"))?;
    let cap = fgs_core::periodic::capacity(&d).map_err(|e| anyhow!("{e}"))?;
    emit_json(
        common,
        &json!({
            "degree": d.degree(),
            "coefficients": coeffs,
            "c0": coeffs.last(),
            "capacity": cap,
        }),
    )?;
    Ok(0)
}

fn cmd_bands(common: &Common) -> anyhow::Result<u8> {
    let pp = load(common)?.periodic_part()?;
    let bs = band_structure(&pp.discriminant()).map_err(|e| anyhow!("{e}"))?;
    match common.format {
        Format::Json => {
            let gaps: Vec<_> = bs
                .gaps
                .iter()
                .map(|g| json!({"lo": g.lo, "hi": g.hi, "closed": g.closed}))
                .collect();
            emit_json(
                common,
                &json!({
                    "bands": bs.bands,
                    "gaps": gaps,
                    "gamma": bs.gamma,
                    "critical_values": bs.critical_values,
                    "c0": bs.c0,
                    "capacity": bs.capacity,
                }),
            )?;
        }
        Format::Csv => emit(common, &output::bands_csv(&bs.bands))?,
        Format::Svg => emit(common, &output::band_diagram_svg(&bs.bands, &bs.gamma))?,
    }
    Ok(0)
}

fn cmd_torus_check(common: &Common) -> anyhow::Result<u8> {
    let input = load(common)?;
    let j = input.as_perturbed();
    let delta = input.periodic_part()?.discriminant();
    let p = input.periodic_part()?.period();
    let d = delta.degree().max(1) as usize;
    let window = common
        .samples
        .unwrap_or((p * d + 1).max(3 * p) + 8 * p.max(d));
    let tc = torus_check(&j, &delta, window).map_err(|e| anyhow!("{e}"))?;
    emit_json(
        common,
        &json!({
            "passes": tc.passes,
            "deviation": tc.deviation,
            "window": window,
        }),
    )?;
    Ok(if tc.passes { 0 } else { 1 })
}

fn cmd_mfun(common: &Common, sheet: Sheet) -> anyhow::Result<u8> {
    let m = continuation(common)?;
    let bands = m.bands();
    let bbox = common.bbox.unwrap_or(Rect {
        x0: bands.x_min() - 1.0,
        y0: -1.5,
        x1: bands.x_max() + 1.0,
        y1: 1.5,
    });
    let k = common.samples.unwrap_or(200);
    let mut rng = ChaCha8Rng::seed_from_u64(common.seed);
    let mut rows = Vec::with_capacity(k);
    for _ in 0..k {
        let x = rng.gen_range(bbox.x0..bbox.x1);
        let y = rng.gen_range(bbox.y0..bbox.y1);
        let z = Complex64::new(x, y);
        let v = m.eval(&m.point(z, sheet));
        rows.push((z, v.finite()));
    }
    let sheet_tag = match sheet {
        Sheet::Plus => 1,
        Sheet::Minus => -1,
    };
    match common.format {
        Format::Csv => {
            let csv_rows: Vec<output::MSample> = rows
                .iter()
                .map(|(z, v)| output::MSample {
                    re_z: z.re,
                    im_z: z.im,
                    sheet: sheet_tag,
                    re_m: v.map(|m| m.re).unwrap_or(f64::INFINITY),
                    im_m: v.map(|m| m.im).unwrap_or(f64::INFINITY),
                })
                .collect();
            emit(common, &output::msamples_csv(&csv_rows))?;
        }
        _ => {
            let json_rows: Vec<_> = rows
                .iter()
                .map(|(z, v)| {
                    json!({
                        "re_z": z.re,
                        "im_z": z.im,
                        "sheet": sheet_tag,
                        "re_m": v.map(|m| m.re),
                        "im_m": v.map(|m| m.im),
                    })
                })
                .collect();
            emit_json(common, &json!({ "samples": json_rows }))?;
        }
    }
    Ok(0)
}

fn cmd_er_region(common: &Common) -> anyhow::Result<u8> {
    let pp = load(common)?.periodic_part()?;
    let delta = pp.discriminant();
    let r = common.r.ok_or_else(|| anyhow!("--R is required"))?;
    let bs = band_structure(&delta).map_err(|e| anyhow!("{e}"))?;
    let p = delta.degree() as f64;
    let pad = ((r + 1.0 / r) / bs.c0.abs()).powf(1.0 / p) + 0.5;
    let bbox = common.bbox.unwrap_or(Rect {
        x0: bs.x_min() - pad,
        y0: -pad,
        x1: bs.x_max() + pad,
        y1: pad,
    });
    let resolution = common.resolution.unwrap_or(256);
    let ls = er_levelset(&delta, r, bbox, resolution).map_err(|e| anyhow!("{e}"))?;
    match common.format {
        Format::Svg => emit(common, &output::polylines_svg(&ls.contours))?,
        _ => {
            emit_json(
                common,
                &json!({
                    "contours": ls.contours,
                    "clipped": ls.clipped,
                    "count": ls.contours.len(),
                }),
            )?;
        }
    }
    Ok(0)
}

fn cmd_verify_identities(common: &Common) -> anyhow::Result<u8> {
    let m = continuation(common)?;
    let k = common.samples.unwrap_or(50);
    let mut rng = ChaCha8Rng::seed_from_u64(common.seed);
    let mut lambdas = Vec::with_capacity(k);
    for _ in 0..k {
        let x = rng.gen_range(-2.8..2.8);
        let y = rng.gen_range(0.4..1.8);
        lambdas.push(blockops::r_cover_point(Complex64::new(x, y), Sheet::Plus));
    }

    let mut sum_max = 0.0f64;
    let mut skipped = 0usize;
    for lam in &lambdas {
        match blockops::verify_sum_identity(&m, lam).map_err(|e| anyhow!("{e}"))? {
            Some(res) => sum_max = sum_max.max(res),
            None => skipped += 1,
        }
    }
    let det = blockops::verify_det_identities(&m, &lambdas).map_err(|e| anyhow!("{e}"))?;
    let mut eig_max = 0.0f64;
    for lam in &lambdas {
        eig_max = eig_max.max(
            blockops::eig_relation_check(m.operator(), m.delta(), lam.z)
                .map_err(|e| anyhow!("{e}"))?,
        );
    }

    let constant = |c: &blockops::ConstantEstimate| {
        json!({
            "measured_re": c.measured.re,
            "measured_im": c.measured.im,
            "relative_spread": c.rel_spread,
            "stated": c.stated,
            "corrected": c.corrected,
        })
    };
    let pass = sum_max <= 1e-8
        && eig_max <= 1e-8
        && det.det_u.rel_spread <= 1e-8
        && det.det_l.rel_spread <= 1e-8
        && det.det_mm.rel_spread <= 1e-8;
    emit_json(
        common,
        &json!({
            "sum_identity_max_residual": sum_max,
            "eig_relation_max_distance": eig_max,
            "det_u": constant(&det.det_u),
            "det_l": constant(&det.det_l),
            "det_mm": constant(&det.det_mm),
            "samples": k,
            "skipped": skipped,
            "pass": pass,
        }),
    )?;
    Ok(if pass { 0 } else { 1 })
}

fn cmd_decay_rate(common: &Common) -> anyhow::Result<u8> {
    let op = load(common)?.as_perturbed();
    let tail = op.rolled_tail().map_err(|e| anyhow!("{e}"))?;
    let p = tail.period();
    let phase_to_origin = {
        // Reference torus point aligned so its index n matches the tail's
        // continuation of the full operator at index n.
        let l = op.prefix_len() % p;
        (p - l) % p
    };
    let reference = tail.rolled(phase_to_origin);
    let n = common
        .samples
        .unwrap_or_else(|| (10 * p).max(op.prefix_len().min(200)).max(20));
    let rate = mfunction::decay_rate(&op, &reference, n).map_err(|e| anyhow!("{e}"))?;
    let (r_est, infinite) = match rate {
        DecayRate::Finite(r) => (Some(r), false),
        DecayRate::Infinite => (None, true),
    };
    emit_json(
        common,
        &json!({
            "r_est": r_est,
            "infinite": infinite,
            "n": n,
        }),
    )?;
    Ok(0)
}

fn cmd_conditions(common: &Common) -> anyhow::Result<u8> {
    let m = continuation(common)?;
    let region = match common.r {
        Some(r) => ContinuationRegion::Radius(r),
        None => ContinuationRegion::Full,
    };
    let mut cfg = SamplerConfig::default();
    if let Some(k) = common.samples {
        cfg.band_samples = k.max(8);
    }
    if let Some(g) = common.resolution {
        cfg.grid = g.max(8);
    }
    let report = check_conditions(&m, region, &cfg);
    let witness = |w: &mfunction::Witness| {
        json!({
            "re_z": w.z.re,
            "im_z": w.z.im,
            "sheet": match w.sheet { Sheet::Plus => 1, Sheet::Minus => -1 },
            "value_re": w.value.re,
            "value_im": w.value.im,
        })
    };
    let edges: Vec<_> = report
        .band_edge_pole_orders
        .iter()
        .map(|e| {
            json!({
                "edge": e.edge,
                "m_pole_order": e.m_pole_order,
                "mm_sharp_zero_order": e.mm_sharp_zero_order,
                "violating": e.violating,
            })
        })
        .collect();
    let pass = report.all_pass();
    emit_json(
        common,
        &json!({
            "continuation_ok": report.continuation_ok,
            "band_pole_violations": report.band_pole_violations.iter().map(witness).collect::<Vec<_>>(),
            "band_edge_orders": edges,
            "mm_sharp_zero_violations": report.mm_sharp_zero_violations.iter().map(witness).collect::<Vec<_>>(),
            "sharp_pair_pole_violations": report.sharp_pair_pole_violations.iter().map(witness).collect::<Vec<_>>(),
            "samples_used": report.samples_used,
            "pass": pass,
        }),
    )?;
    Ok(if pass { 0 } else { 1 })
}

fn cmd_point_masses(common: &Common) -> anyhow::Result<u8> {
    let m = continuation(common)?;
    let masses = mfunction::point_masses(&m, None).map_err(|e| anyhow!("{e}"))?;
    let integral = mfunction::band_density_integral(&m, 1e-9);
    let total_pp: f64 = masses.iter().map(|pm| pm.mass).sum();
    let rows: Vec<_> = masses
        .iter()
        .map(|pm| json!({"location": pm.location, "mass": pm.mass}))
        .collect();
    emit_json(
        common,
        &json!({
            "masses": rows,
            "total_point_mass": total_pp,
            "band_integral": integral,
            "total": total_pp + integral,
        }),
    )?;
    Ok(0)
}
