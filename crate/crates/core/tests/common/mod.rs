#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use roughreach::expr::Expr;
use roughreach::signature::PiecewiseLinearPath;
use roughreach::tensor::TruncatedTensor;
use roughreach::vf::VectorFieldFamily;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_vec(rng: &mut ChaCha8Rng, len: usize, r: f64) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(-r..r)).collect()
}

/// Random increments on unit-duration segments from the origin.
pub fn random_path(n: usize, segments: usize, seed: u64) -> PiecewiseLinearPath {
    let mut rng = rng(seed);
    let incs: Vec<Vec<f64>> = (0..segments)
        .map(|_| uniform_vec(&mut rng, n, 1.0))
        .collect();
    PiecewiseLinearPath::from_increments(&vec![0.0; n], &incs, &vec![1.0; segments]).unwrap()
}

pub fn random_tensor(n: usize, depth: usize, seed: u64, scalar: f64) -> TruncatedTensor {
    let mut rng = rng(seed);
    let mut levels = vec![vec![scalar]];
    for k in 1..=depth {
        levels.push(uniform_vec(&mut rng, n.pow(k as u32), 1.0));
    }
    TruncatedTensor::from_levels(n, depth, levels).unwrap()
}

/// Random group element: exponential of a random Lie-like element built as
/// a path signature.
pub fn random_group(n: usize, depth: usize, seed: u64) -> TruncatedTensor {
    roughreach::signature::sig_pl(&random_path(n, 4, seed), depth)
        .unwrap()
        .group
}

/// Component strings of the linear field `y ↦ A y`.
pub fn linear_strings(a: &DMatrix<f64>) -> Vec<String> {
    (0..a.nrows())
        .map(|r| {
            (0..a.ncols())
                .map(|c| format!("({:e})*y{}", a[(r, c)], c + 1))
                .collect::<Vec<_>>()
                .join(" + ")
        })
        .collect()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, d: usize, r: f64) -> DMatrix<f64> {
    DMatrix::from_fn(d, d, |_, _| rng.gen_range(-r..r))
}

pub fn linear_family(mats: &[DMatrix<f64>]) -> VectorFieldFamily {
    let d = mats[0].nrows();
    let fields: Vec<Vec<String>> = mats.iter().map(linear_strings).collect();
    VectorFieldFamily::from_strings(d, &fields).unwrap()
}

/// Quadratic polynomial fields in `R^2` with small coefficients.
pub fn random_polynomial_family(n: usize, seed: u64) -> VectorFieldFamily {
    let mut rng = rng(seed);
    let monomials = ["1", "y1", "y2", "y1*y2", "y1^2", "y2^2"];
    let fields: Vec<Vec<String>> = (0..n)
        .map(|_| {
            (0..2)
                .map(|_| {
                    monomials
                        .iter()
                        .map(|m| format!("({:e})*{m}", rng.gen_range(-0.5..0.5)))
                        .collect::<Vec<_>>()
                        .join(" + ")
                })
                .collect()
        })
        .collect();
    VectorFieldFamily::from_strings(2, &fields).unwrap()
}

/// Random expression tree of depth at most `depth` over `dim` variables,
/// free of singularities on all of `R^dim`.
pub fn random_expr(rng: &mut ChaCha8Rng, dim: usize, depth: usize) -> Expr {
    if depth == 0 || rng.gen_bool(0.25) {
        return if rng.gen_bool(0.6) {
            Expr::Var(rng.gen_range(0..dim))
        } else {
            Expr::Const(rng.gen_range(-2.0..2.0))
        };
    }
    let sub = |rng: &mut ChaCha8Rng| random_expr(rng, dim, depth - 1);
    match rng.gen_range(0..9) {
        0 => Expr::Add(Box::new(sub(rng)), Box::new(sub(rng))),
        1 => Expr::Sub(Box::new(sub(rng)), Box::new(sub(rng))),
        2 => Expr::Mul(Box::new(sub(rng)), Box::new(sub(rng))),
        3 => Expr::Div(
            Box::new(sub(rng)),
            Box::new(Expr::Add(
                Box::new(Expr::Const(2.0)),
                Box::new(Expr::Cos(Box::new(sub(rng)))),
            )),
        ),
        4 => Expr::Pow(Box::new(sub(rng)), rng.gen_range(0..4)),
        5 => Expr::Sin(Box::new(sub(rng))),
        6 => Expr::Cos(Box::new(sub(rng))),
        7 => Expr::Exp(Box::new(Expr::Sin(Box::new(sub(rng))))),
        _ => Expr::Neg(Box::new(sub(rng))),
    }
}

/// `e^A` by scaling and squaring with a truncated Taylor series.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let norm = a.abs().row_sum().max();
    let mut s = 0;
    while norm / 2f64.powi(s) > 0.25 {
        s += 1;
    }
    let b = a / 2f64.powi(s);
    let d = a.nrows();
    let mut term = DMatrix::identity(d, d);
    let mut sum = term.clone();
    for k in 1..=20 {
        term = &term * &b / k as f64;
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
