use driftwatch::mlfilters::{sample_gradient, sample_objective, Algo};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-6;

fn rel(a: f64, n: f64) -> f64 {
    let scale = a.abs().max(n.abs());
    if scale < 1e-8 {
        (a - n).abs()
    } else {
        (a - n).abs() / scale
    }
}

/// Worst relative error between the analytic gradient and central finite
/// differences over `cases` random (sample, weight) pairs. Hinge samples
/// within 1e-3 of the kink are redrawn.
pub fn worst_error(algo: Algo, cases: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l2 = 1e-3;
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < cases {
        let dims = rng.gen_range(1..8);
        let w: Vec<f64> = (0..dims).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let x: Vec<f64> = (0..dims).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b = rng.gen_range(-1.0..1.0);
        let y = rng.gen_bool(0.5);
        let z = (if y { 1.0 } else { -1.0 }) * (w.iter().zip(&x).map(|(a, c)| a * c).sum::<f64>() + b);
        if algo == Algo::Hinge && (z - 1.0).abs() < 1e-3 {
            continue;
        }
        let (gw, gb) = sample_gradient(&w, b, &x, y, algo, l2);
        for i in 0..dims {
            let (mut up, mut down) = (w.clone(), w.clone());
            up[i] += H;
            down[i] -= H;
            let n = (sample_objective(&up, b, &x, y, algo, l2) - sample_objective(&down, b, &x, y, algo, l2)) / (2.0 * H);
            worst = worst.max(rel(gw[i], n));
        }
        let n = (sample_objective(&w, b + H, &x, y, algo, l2) - sample_objective(&w, b - H, &x, y, algo, l2)) / (2.0 * H);
        worst = worst.max(rel(gb, n));
        done += 1;
    }
    worst
}
