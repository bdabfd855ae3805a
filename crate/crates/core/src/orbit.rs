//! Estimates of the distribution `P_D(y)` spanned by pushforwards of the
//! family along D-diffeomorphisms, with an iterated-bracket cross-check.
//!
//! Sampling is existential in nature: a rank below the true dimension
//! after the budget is spent means "not found", never a certificate.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flows::{apply_ddiffeo, pushforward, DDiffeo, IntegratorSettings};
use crate::vf::{VectorField, VectorFieldFamily};

const SAMPLE_CHUNK: usize = 8;
const MAX_STAGES: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitOptions {
    pub budget: usize,
    pub seed: u64,
    /// Stage times are drawn uniformly from `[-tau, tau]`.
    pub tau: f64,
    /// Mean of the geometric stage-count distribution.
    pub mean_length: f64,
    /// Relative singular-value threshold.
    pub rank_tol: f64,
    pub settings: IntegratorSettings,
}

impl Default for OrbitOptions {
    fn default() -> Self {
        Self {
            budget: 50,
            seed: 0,
            tau: 0.3,
            mean_length: 2.0,
            rank_tol: 1e-8,
            settings: IntegratorSettings::default(),
        }
    }
}

/// A spanning vector `g_*(f^i(g^{-1}(y)))` and where it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    pub ddiffeo: DDiffeo,
    pub field: usize,
    pub vector: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistributionEstimate {
    pub base: Vec<f64>,
    pub generators: Vec<Generator>,
    pub singular_values: Vec<f64>,
    pub rank: usize,
    /// Orthonormal basis of the estimated `P_D(y)`.
    pub basis: Vec<Vec<f64>>,
    pub samples_used: usize,
    pub samples_failed: usize,
}

/// Numerical rank of a set of vectors in `R^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpanRank {
    pub rank: usize,
    pub singular_values: Vec<f64>,
    pub basis: Vec<Vec<f64>>,
}

pub fn span_rank(vectors: &[&[f64]], dim: usize, rank_tol: f64) -> SpanRank {
    if vectors.is_empty() {
        return SpanRank {
            rank: 0,
            singular_values: Vec::new(),
            basis: Vec::new(),
        };
    }
    let m = DMatrix::from_fn(dim, vectors.len(), |r, c| vectors[c][r]);
    let svd = m.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let singular_values: Vec<f64> = order.iter().map(|&k| svd.singular_values[k]).collect();
    let smax = singular_values[0];
    let rank = if smax > 0.0 {
        singular_values
            .iter()
            .filter(|&&s| s > rank_tol * smax)
            .count()
    } else {
        0
    };
    let basis = order[..rank]
        .iter()
        .map(|&k| u.column(k).iter().copied().collect())
        .collect();
    SpanRank {
        rank,
        singular_values,
        basis,
    }
}

fn sample_ddiffeo(n: usize, seed: u64, index: usize, opts: &OrbitOptions) -> DDiffeo {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let cont = (1.0 - 1.0 / opts.mean_length.max(1.0)).clamp(0.0, 1.0);
    let mut len = 1;
    while len < MAX_STAGES && rng.gen_bool(cont) {
        len += 1;
    }
    let stages = (0..len)
        .map(|_| {
            let i = rng.gen_range(0..n);
            let t = if opts.tau > 0.0 {
                rng.gen_range(-opts.tau..=opts.tau)
            } else {
                0.0
            };
            (i, t)
        })
        .collect();
    DDiffeo::new(stages)
}

/// All `g_*(f^i(g^{-1}(y)))` for one sampled `g`.
fn sample_generators(
    family: &VectorFieldFamily,
    y: &[f64],
    g: &DDiffeo,
    settings: IntegratorSettings,
) -> Result<Vec<Generator>> {
    let z = apply_ddiffeo(&g.inverse(), family, y, settings)?;
    let push = pushforward(g, family, &z, settings)?;
    family
        .fields()
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let v = nalgebra::DVector::from_vec(f.eval(&z)?);
            let w = &push.jacobian * v;
            Ok(Generator {
                ddiffeo: g.clone(),
                field: i,
                vector: w.iter().copied().collect(),
            })
        })
        .collect()
}

/// Sample D-diffeomorphisms until the pushed-forward family spans `R^d` or
/// the budget runs out. Deterministic for a given seed, independent of
/// the thread count.
pub fn distribution_rank(
    family: &VectorFieldFamily,
    y: &[f64],
    opts: &OrbitOptions,
) -> Result<DistributionEstimate> {
    let d = family.dim();
    if y.len() != d {
        return Err(Error::dim(format!(
            "point has {} coordinates, family lives in R^{d}",
            y.len()
        )));
    }
    let mut generators = family
        .fields()
        .iter()
        .enumerate()
        .map(|(i, f)| {
            Ok(Generator {
                ddiffeo: DDiffeo::identity(),
                field: i,
                vector: f.eval(y)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let rank_of = |gens: &[Generator]| {
        let vs: Vec<&[f64]> = gens.iter().map(|g| g.vector.as_slice()).collect();
        span_rank(&vs, d, opts.rank_tol)
    };
    let mut current = rank_of(&generators);
    let mut used = 0;
    let mut failed = 0;
    let n = family.inputs();

    'outer: while used < opts.budget && current.rank < d {
        let chunk: Vec<usize> = (used..(used + SAMPLE_CHUNK).min(opts.budget)).collect();
        let results: Vec<Result<Vec<Generator>>> = chunk
            .par_iter()
            .map(|&k| {
                let g = sample_ddiffeo(n, opts.seed, k, opts);
                sample_generators(family, y, &g, opts.settings)
            })
            .collect();
        for res in results {
            used += 1;
            match res {
                Ok(gens) => {
                    generators.extend(gens);
                    current = rank_of(&generators);
                    if current.rank == d {
                        break 'outer;
                    }
                }
                Err(_) => failed += 1,
            }
        }
    }
    if used > 0 && failed == used {
        return Err(Error::Estimation(format!(
            "all {used} sampled D-diffeomorphisms failed to integrate"
        )));
    }
    Ok(DistributionEstimate {
        base: y.to_vec(),
        generators,
        singular_values: current.singular_values,
        rank: current.rank,
        basis: current.basis,
        samples_used: used,
        samples_failed: failed,
    })
}

/// A right-nested bracket `[f^{i1}, [f^{i2}, .., f^{ik}]]` evaluated at a
/// point. `word` holds zero-based field indices.
#[derive(Clone, Debug, PartialEq)]
pub struct BracketValue {
    pub word: Vec<usize>,
    pub vector: Vec<f64>,
}

impl BracketValue {
    /// `"[1,[1,2]]"` style label with one-based indices.
    pub fn label(&self) -> String {
        let (last, head) = self.word.split_last().expect("nonempty word");
        let mut s = (last + 1).to_string();
        for i in head.iter().rev() {
            s = format!("[{},{}]", i + 1, s);
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BracketSpan {
    pub rank: usize,
    pub singular_values: Vec<f64>,
    pub basis: Vec<Vec<f64>>,
    pub brackets: Vec<BracketValue>,
}

/// Rank of all iterated brackets of depth `<= depth` at `y`. Right-nested
/// brackets suffice: by the Jacobi identity they span the generated Lie
/// algebra.
pub fn bracket_span_rank(
    family: &VectorFieldFamily,
    y: &[f64],
    depth: usize,
    rank_tol: f64,
) -> Result<BracketSpan> {
    let d = family.dim();
    if depth == 0 {
        return Err(Error::domain("bracket depth must be at least 1"));
    }
    if y.len() != d {
        return Err(Error::dim(format!(
            "point has {} coordinates, family lives in R^{d}",
            y.len()
        )));
    }
    let mut layer: Vec<(Vec<usize>, VectorField)> = family
        .fields()
        .iter()
        .enumerate()
        .map(|(i, f)| (vec![i], f.clone()))
        .collect();
    let mut brackets = Vec::new();
    for level in 1..=depth {
        for (word, f) in &layer {
            brackets.push(BracketValue {
                word: word.clone(),
                vector: f.eval(y)?,
            });
        }
        if level == depth {
            break;
        }
        let mut next = Vec::new();
        for (i, fi) in family.fields().iter().enumerate() {
            for (word, f) in &layer {
                if f.is_identically_zero() || word[0] == i && word.len() == 1 {
                    continue;
                }
                let b = VectorField::bracket(fi, f)?;
                if b.is_identically_zero() {
                    continue;
                }
                let mut w = vec![i];
                w.extend_from_slice(word);
                next.push((w, b));
            }
        }
        layer = next;
    }
    let vs: Vec<&[f64]> = brackets.iter().map(|b| b.vector.as_slice()).collect();
    let sr = span_rank(&vs, d, rank_tol);
    Ok(BracketSpan {
        rank: sr.rank,
        singular_values: sr.singular_values,
        basis: sr.basis,
        brackets,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankProfile {
    pub ranks: Vec<usize>,
    pub constant: bool,
}

pub fn rank_profile(
    family: &VectorFieldFamily,
    trajectory: &[Vec<f64>],
    opts: &OrbitOptions,
) -> Result<RankProfile> {
    if trajectory.is_empty() {
        return Err(Error::domain("rank profile needs a nonempty trajectory"));
    }
    let ranks = trajectory
        .iter()
        .map(|y| distribution_rank(family, y, opts).map(|e| e.rank))
        .collect::<Result<Vec<_>>>()?;
    let constant = ranks.windows(2).all(|w| w[0] == w[1]);
    Ok(RankProfile { ranks, constant })
}
