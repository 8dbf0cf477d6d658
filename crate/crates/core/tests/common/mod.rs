#![allow(dead_code)]

use geofuse::tensor::{Tape, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// Values bounded away from zero, for checks through ReLU kinks.
pub fn away_from_zero(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    let data = (0..n)
        .map(|_| {
            let m = rng.gen_range(0.2..1.0);
            if rng.gen::<bool>() {
                m
            } else {
                -m
            }
        })
        .collect();
    Tensor::new(shape.to_vec(), data).unwrap()
}

/// Largest relative discrepancy between reverse-mode gradients and central
/// differences with step `h`. `build` maps parameter leaves to a scalar loss
/// and must be deterministic.
pub fn gradcheck<F>(params: &[Tensor], h: f64, build: F) -> f64
where
    F: Fn(&mut Tape, &[Var]) -> Var,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = params.iter().map(|p| tape.param(p.clone())).collect();
    let loss = build(&mut tape, &vars);
    tape.backward(loss).unwrap();
    let analytic: Vec<Tensor> = vars.iter().map(|v| tape.grad(*v).unwrap().clone()).collect();

    let eval = |ps: &[Tensor]| {
        let mut t = Tape::new();
        let vs: Vec<Var> = ps.iter().map(|p| t.param(p.clone())).collect();
        let l = build(&mut t, &vs);
        t.value(l).item()
    };
    let mut worst: f64 = 0.0;
    for (pi, p) in params.iter().enumerate() {
        for i in 0..p.numel() {
            let mut plus = params.to_vec();
            plus[pi].data_mut()[i] += h;
            let mut minus = params.to_vec();
            minus[pi].data_mut()[i] -= h;
            let numeric = (eval(&plus) - eval(&minus)) / (2.0 * h);
            let a = analytic[pi].data()[i];
            let denom = a.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max((a - numeric).abs() / denom);
        }
    }
    worst
}

/// `sum(x ⊙ r)` for a fixed random `r`, so every output element carries a distinct weight.
pub fn weighted_sum(tape: &mut Tape, x: Var, seed: u64) -> Var {
    let mut g = rng(seed);
    let r = random_tensor(&mut g, tape.shape(x));
    let r = tape.constant(r);
    let p = tape.mul(x, r).unwrap();
    tape.sum(p).unwrap()
}
