//! Metric implementations checked against naive reference loops.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use drivevqa_core::metrics::{cosine_similarity, mae, pearson, rmse};

fn naive_mae(xs: &[f64], ys: &[f64]) -> f64 {
    let mut sum = 0.0;
    for i in 0..xs.len() {
        sum += (xs[i] - ys[i]).abs();
    }
    sum / xs.len() as f64
}

fn naive_rmse(xs: &[f64], ys: &[f64]) -> f64 {
    let mut sum = 0.0;
    for i in 0..xs.len() {
        sum += (xs[i] - ys[i]).powi(2);
    }
    (sum / xs.len() as f64).sqrt()
}

fn naive_pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mut mx = 0.0;
    let mut my = 0.0;
    for i in 0..xs.len() {
        mx += xs[i] / n;
        my += ys[i] / n;
    }
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for i in 0..xs.len() {
        cov += (xs[i] - mx) * (ys[i] - my);
        vx += (xs[i] - mx) * (xs[i] - mx);
        vy += (ys[i] - my) * (ys[i] - my);
    }
    cov / (vx.sqrt() * vy.sqrt())
}

fn random_pair(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let len = rng.gen_range(2..100);
    let xs: Vec<f64> = (0..len).map(|_| rng.gen_range(-10.0..10.0)).collect();
    let ys: Vec<f64> = (0..len).map(|_| rng.gen_range(-10.0..10.0)).collect();
    (xs, ys)
}

#[test]
fn mae_and_rmse_match_naive_loops_on_1000_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    for _ in 0..1000 {
        let (xs, ys) = random_pair(&mut rng);
        assert!((mae(&xs, &ys).unwrap() - naive_mae(&xs, &ys)).abs() < 1e-12);
        assert!((rmse(&xs, &ys).unwrap() - naive_rmse(&xs, &ys)).abs() < 1e-12);
    }
}

#[test]
fn pearson_matches_naive_loop_on_1000_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(4243);
    for _ in 0..1000 {
        let (xs, ys) = random_pair(&mut rng);
        let got = pearson(&xs, &ys).unwrap();
        assert!((got - naive_pearson(&xs, &ys)).abs() < 1e-9);
        assert!((-1.0..=1.0).contains(&got));
    }
}

#[test]
fn mae_never_exceeds_rmse_nor_max_error() {
    let mut rng = ChaCha8Rng::seed_from_u64(4244);
    for _ in 0..1000 {
        let (xs, ys) = random_pair(&mut rng);
        let a = mae(&xs, &ys).unwrap();
        let r = rmse(&xs, &ys).unwrap();
        let max_err = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0f64, f64::max);
        assert!(a <= r + 1e-12, "mae {a} > rmse {r}");
        assert!(r <= max_err + 1e-12, "rmse {r} > max error {max_err}");
    }
}

#[test]
fn cosine_symmetry_and_scale_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(4245);
    for _ in 0..500 {
        let len = rng.gen_range(2..32);
        let u: Vec<f64> = (0..len).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let v: Vec<f64> = (0..len).map(|_| rng.gen_range(-5.0..5.0)).collect();
        if u.iter().all(|x| *x == 0.0) || v.iter().all(|x| *x == 0.0) {
            continue;
        }
        let uv = cosine_similarity(&u, &v).unwrap();
        let vu = cosine_similarity(&v, &u).unwrap();
        assert!((uv - vu).abs() < 1e-12);

        let alpha = rng.gen_range(0.1..10.0);
        let beta = rng.gen_range(0.1..10.0);
        let su: Vec<f64> = u.iter().map(|x| alpha * x).collect();
        let sv: Vec<f64> = v.iter().map(|x| beta * x).collect();
        assert!((cosine_similarity(&su, &sv).unwrap() - uv).abs() < 1e-9);

        assert!((cosine_similarity(&u, &u).unwrap() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn pearson_is_affine_invariant_with_sign_flip() {
    let mut rng = ChaCha8Rng::seed_from_u64(4246);
    for _ in 0..500 {
        let (xs, ys) = random_pair(&mut rng);
        let r = pearson(&xs, &ys).unwrap();
        let a = rng.gen_range(0.1..5.0);
        let b = rng.gen_range(-3.0..3.0);
        let scaled: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
        assert!((pearson(&scaled, &ys).unwrap() - r).abs() < 1e-9);
        let flipped: Vec<f64> = xs.iter().map(|x| -a * x + b).collect();
        assert!((pearson(&flipped, &ys).unwrap() + r).abs() < 1e-9);
    }
}
