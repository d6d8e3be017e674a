use fgs_core::jacobi::{PerturbedJacobi, Tail};
use fgs_core::mfunction::{MContinuation, MFunctionPeriodic};
use fgs_core::periodic::PeriodicJacobi;
use fgs_core::surface::{Sheet, SurfacePoint};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(20260810);
    let mut target = None;
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
        if trial == 29 { target = Some(op); break; }
    }
    let op = target.unwrap();
    let m = MContinuation::new(&op).unwrap();
    let tail = op.rolled_tail().unwrap();
    let tail_op = tail.as_operator();
    let mf = MFunctionPeriodic::new(&tail).unwrap();
    let cf = |op: &PerturbedJacobi, z: Complex64| -> Complex64 {
        let mut v = Complex64::new(0.0, 0.0);
        for n in (1..=200000usize).rev() {
            let (a, b) = op.coeff(n).unwrap();
            v = 1.0 / (Complex64::new(b, 0.0) - z - a * a * v);
        }
        v
    };
    println!("x        full(lib vs cf)        tail(lib vs cf)");
    for k in 0..14 {
        let x = 1.0 + 0.01 * k as f64;
        let z = Complex64::new(x, 0.0);
        let full_lib = m.eval(&m.point(z, Sheet::Plus)).finite().unwrap();
        let full_cf = cf(&op, z);
        let tail_lib = mf.eval(&SurfacePoint::new(z, Sheet::Plus)).finite().unwrap();
        let tail_cf = cf(&tail_op, z);
        println!("{x:.3}  {:+9.4} vs {:+9.4}   {:+9.4} vs {:+9.4}",
            full_lib.re, full_cf.re, tail_lib.re, tail_cf.re);
    }
}
