use fgs_core::jacobi::{PerturbedJacobi, Tail};
use fgs_core::mfunction::{band_density_integral, band_measures, point_masses, MContinuation};
use fgs_core::periodic::PeriodicJacobi;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    for seed in [20260810u64, 7, 99, 12345] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst_density = 0.0f64;
        let mut worst_contour = 0.0f64;
        let mut note = String::new();
        for trial in 0..80 {
            let p = 1 + trial % 5;
            let tail = PeriodicJacobi::new(
                (0..p).map(|_| rng.gen_range(0.3..2.5)).collect(),
                (0..p).map(|_| rng.gen_range(-1.6..1.6)).collect(),
            ).unwrap();
            let l = trial % 6;
            let op = PerturbedJacobi::new(
                (0..l).map(|_| rng.gen_range(0.3..2.2)).collect(),
                (0..l).map(|_| rng.gen_range(-1.8..1.8)).collect(),
                Tail::Periodic { tail, phase: rng.gen_range(0..p) },
            ).unwrap();
            let m = MContinuation::new(&op).unwrap();
            let masses = point_masses(&m, None).unwrap();
            let pp: f64 = masses.iter().map(|x| x.mass).sum();
            let ac = band_density_integral(&m, 1e-9);
            let e1 = (pp + ac - 1.0).abs();
            if e1 > worst_density { worst_density = e1; note = format!("seed {seed} trial {trial} p={p} l={l}"); }
            match band_measures(&m, &masses) {
                Ok(bm) => {
                    let acc: f64 = bm.iter().map(|b| b.mass).sum();
                    let e2 = (pp + acc - 1.0).abs();
                    if e2 > worst_contour { worst_contour = e2; }
                }
                Err(e) => println!("seed {seed} trial {trial}: contour err {e}"),
            }
        }
        println!("seed {seed}: worst density-route {worst_density:.2e} ({note}), worst contour-route {worst_contour:.2e}");
    }
}
