//! Level-2 geometric rough paths and the log-ODE solver, plus the classical
//! controlled ODE driven by piecewise-linear paths.
//!
//! On each partition interval the log-ODE step integrates
//! `dy/ds = sum_i λ_i f^i(y) + sum_{i<j} μ_ij [f^i, f^j](y)` for `s ∈ [0, 1]`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flows::rk4;
use crate::signature::PiecewiseLinearPath;
use crate::tensor::{check_area, LieElement, TruncatedTensor};
use crate::vf::{VectorField, VectorFieldFamily};

pub const DEFAULT_SUBSTEPS: usize = 64;

/// Log-signature of the rough path over one partition interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogIncrement {
    pub lambda: Vec<f64>,
    pub mu: Vec<Vec<f64>>,
}

impl LogIncrement {
    pub fn zero(n: usize) -> Self {
        Self {
            lambda: vec![0.0; n],
            mu: vec![vec![0.0; n]; n],
        }
    }

    pub fn lie_element(&self) -> Result<LieElement> {
        LieElement::from_drift_area(&self.lambda, &self.mu)
    }

    fn scaled(&self, c: f64) -> Self {
        Self {
            lambda: self.lambda.iter().map(|x| c * x).collect(),
            mu: self
                .mu
                .iter()
                .map(|r| r.iter().map(|x| c * x).collect())
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RoughRepr", into = "RoughRepr")]
pub struct RoughPathL2 {
    dim: usize,
    times: Vec<f64>,
    increments: Vec<LogIncrement>,
    start: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RoughRepr {
    n: usize,
    times: Vec<f64>,
    increments: Vec<LogIncrement>,
    #[serde(default)]
    start: Option<Vec<f64>>,
}

impl TryFrom<RoughRepr> for RoughPathL2 {
    type Error = Error;

    fn try_from(r: RoughRepr) -> Result<Self> {
        let start = r.start.unwrap_or_else(|| vec![0.0; r.n]);
        RoughPathL2::new(r.n, r.times, r.increments, start)
    }
}

impl From<RoughPathL2> for RoughRepr {
    fn from(r: RoughPathL2) -> Self {
        RoughRepr {
            n: r.dim,
            times: r.times,
            increments: r.increments,
            start: Some(r.start),
        }
    }
}

impl RoughPathL2 {
    pub fn new(
        dim: usize,
        times: Vec<f64>,
        increments: Vec<LogIncrement>,
        start: Vec<f64>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("rough path dimension must be positive"));
        }
        if times.is_empty() {
            return Err(Error::domain(
                "rough path needs at least one partition time",
            ));
        }
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain(
                "partition times must be finite and strictly increasing",
            ));
        }
        if increments.len() + 1 != times.len() {
            return Err(Error::dim(format!(
                "{} partition times need {} increments, got {}",
                times.len(),
                times.len() - 1,
                increments.len()
            )));
        }
        if start.len() != dim {
            return Err(Error::dim("start point dimension differs from n"));
        }
        for (k, inc) in increments.iter().enumerate() {
            if inc.lambda.len() != dim {
                return Err(Error::dim(format!(
                    "increment {k}: drift must have {dim} entries"
                )));
            }
            if inc.lambda.iter().any(|x| !x.is_finite()) {
                return Err(Error::domain(format!("increment {k}: non-finite drift")));
            }
            check_area(&inc.mu, dim).map_err(|e| Error::domain(format!("increment {k}: {e}")))?;
        }
        Ok(Self {
            dim,
            times,
            increments,
            start,
        })
    }

    /// Zero rough path over `[0, horizon]` in one interval.
    pub fn null(dim: usize, horizon: f64) -> Result<Self> {
        Self::new(
            dim,
            vec![0.0, horizon],
            vec![LogIncrement::zero(dim)],
            vec![0.0; dim],
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn increments(&self) -> &[LogIncrement] {
        &self.increments
    }

    pub fn start(&self) -> &[f64] {
        &self.start
    }

    pub fn horizon(&self) -> f64 {
        self.times.last().unwrap() - self.times[0]
    }

    /// Split every interval into `factor` equal pieces carrying
    /// `λ / factor` and `μ / factor`; the level-2 rough path is unchanged.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::domain("refinement factor must be positive"));
        }
        let mut times = vec![self.times[0]];
        let mut increments = Vec::new();
        for (w, inc) in self.times.windows(2).zip(&self.increments) {
            let piece = inc.scaled(1.0 / factor as f64);
            for k in 1..=factor {
                times.push(if k == factor {
                    w[1]
                } else {
                    w[0] + (w[1] - w[0]) * k as f64 / factor as f64
                });
                increments.push(piece.clone());
            }
        }
        Self::new(self.dim, times, increments, self.start.clone())
    }

    /// Depth-2 signature over the whole partition (Chen product of the
    /// per-interval `exp(λ + μ)`).
    pub fn total_signature(&self) -> Result<TruncatedTensor> {
        let mut g = TruncatedTensor::identity(self.dim, 2)?;
        for inc in &self.increments {
            g = g.mul(&inc.lie_element()?.exp()?)?;
        }
        Ok(g)
    }
}

/// Canonical lift of a piecewise-linear path: one interval per segment,
/// drift = increment, no area.
pub fn pl_lift(path: &PiecewiseLinearPath) -> RoughPathL2 {
    let n = path.dim();
    let (times, increments) = if path.segment_count() == 0 {
        let t0 = path.start_time();
        (vec![t0], Vec::new())
    } else {
        (
            path.times().to_vec(),
            path.increments()
                .map(|lambda| LogIncrement {
                    lambda,
                    mu: vec![vec![0.0; n]; n],
                })
                .collect(),
        )
    };
    RoughPathL2::new(n, times, increments, path.points()[0].clone())
        .expect("lift of a valid path is valid")
}

/// Pure-area rough path on `[0, 1]`: `K` equal intervals, zero drift, area
/// `A / K` in the plane `(i, j)` (zero-based) on each.
pub fn pure_area(
    n: usize,
    plane: (usize, usize),
    area: f64,
    intervals: usize,
) -> Result<RoughPathL2> {
    let (i, j) = plane;
    if i == j {
        return Err(Error::domain("pure-area plane needs two distinct axes"));
    }
    if i >= n || j >= n {
        return Err(Error::domain(format!(
            "plane ({}, {}) outside R^{n}",
            i + 1,
            j + 1
        )));
    }
    if intervals == 0 {
        return Err(Error::domain(
            "pure-area rough path needs at least one interval",
        ));
    }
    if !area.is_finite() {
        return Err(Error::domain("area must be finite"));
    }
    let a = area / intervals as f64;
    let mut inc = LogIncrement::zero(n);
    inc.mu[i][j] = a;
    inc.mu[j][i] = -a;
    let times = (0..=intervals)
        .map(|k| k as f64 / intervals as f64)
        .collect();
    RoughPathL2::new(n, times, vec![inc; intervals], vec![0.0; n])
}

/// Limit of the oscillating family: area `π` in the plane of `R^2`.
pub fn oscillating_limit(intervals: usize) -> Result<RoughPathL2> {
    pure_area(2, (0, 1), PI, intervals)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RdeSolution {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub terminal: Vec<f64>,
    pub substeps: usize,
    pub scheme: String,
}

fn check_start(family: &VectorFieldFamily, start: &[f64]) -> Result<()> {
    if start.len() != family.dim() {
        return Err(Error::dim(format!(
            "start has {} coordinates, family lives in R^{}",
            start.len(),
            family.dim()
        )));
    }
    if start.iter().any(|x| !x.is_finite()) {
        return Err(Error::domain("start point must be finite"));
    }
    Ok(())
}

/// Integrate one interval of the driving signal over `s ∈ [0, 1]`,
/// appending every substep to the trajectory.
fn integrate_interval(
    rhs: impl FnMut(&[f64], &mut [f64]) -> Result<()>,
    y: &mut [f64],
    (t0, t1): (f64, f64),
    substeps: usize,
    interval: usize,
    out: &mut RdeSolution,
) -> Result<()> {
    let d = y.len();
    let mut times = Vec::with_capacity(substeps);
    let mut states = Vec::with_capacity(substeps);
    rk4(rhs, y, 1.0, substeps, d, |k, s| {
        times.push(if k == substeps {
            t1
        } else {
            t0 + (t1 - t0) * k as f64 / substeps as f64
        });
        states.push(s.to_vec());
    })
    .map_err(|e| match e {
        Error::BlowUp { time, .. } => Error::BlowUp {
            stage: Some(interval),
            time: t0 + (t1 - t0) * time,
        },
        other => other,
    })?;
    out.times.extend(times);
    out.states.extend(states);
    Ok(())
}

/// Log-ODE solve of `dY = f(Y) dX`, `Y_0 = start`.
pub fn solve_rde(
    family: &VectorFieldFamily,
    rough: &RoughPathL2,
    start: &[f64],
    substeps: usize,
) -> Result<RdeSolution> {
    check_start(family, start)?;
    if rough.dim() != family.inputs() {
        return Err(Error::dim(format!(
            "rough path lives in R^{} but the family has {} fields",
            rough.dim(),
            family.inputs()
        )));
    }
    if substeps == 0 {
        return Err(Error::domain("substeps must be positive"));
    }
    let n = rough.dim();
    let d = family.dim();
    let mut brackets: Vec<((usize, usize), VectorField)> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rough.increments().iter().any(|inc| inc.mu[i][j] != 0.0) {
                brackets.push(((i, j), family.lie_bracket(i, j)?));
            }
        }
    }
    let mut sol = RdeSolution {
        times: vec![rough.times()[0]],
        states: vec![start.to_vec()],
        terminal: Vec::new(),
        substeps,
        scheme: "log-ode-rk4".into(),
    };
    let mut y = start.to_vec();
    let mut tmp = vec![0.0; d];
    for (k, (w, inc)) in rough.times().windows(2).zip(rough.increments()).enumerate() {
        let active: Vec<(f64, &VectorField)> = brackets
            .iter()
            .filter(|((i, j), _)| inc.mu[*i][*j] != 0.0)
            .map(|((i, j), b)| (inc.mu[*i][*j], b))
            .collect();
        let rhs = |s: &[f64], out: &mut [f64]| {
            family.eval_combination(&inc.lambda, s, out)?;
            for (c, b) in &active {
                b.eval_into(s, &mut tmp)?;
                for (o, v) in out.iter_mut().zip(&tmp) {
                    *o += c * v;
                }
            }
            Ok(())
        };
        integrate_interval(rhs, &mut y, (w[0], w[1]), substeps, k, &mut sol)?;
    }
    sol.terminal = y;
    Ok(sol)
}

/// Classical solve of `dy = f(y) dx` for a piecewise-linear control.
pub fn solve_ode(
    family: &VectorFieldFamily,
    path: &PiecewiseLinearPath,
    start: &[f64],
    substeps: usize,
) -> Result<RdeSolution> {
    check_start(family, start)?;
    if path.dim() != family.inputs() {
        return Err(Error::dim(format!(
            "path lives in R^{} but the family has {} fields",
            path.dim(),
            family.inputs()
        )));
    }
    if substeps == 0 {
        return Err(Error::domain("substeps must be positive"));
    }
    let mut sol = RdeSolution {
        times: vec![path.start_time()],
        states: vec![start.to_vec()],
        terminal: Vec::new(),
        substeps,
        scheme: "rk4".into(),
    };
    let mut y = start.to_vec();
    for (k, (w, inc)) in path.times().windows(2).zip(path.increments()).enumerate() {
        // over s ∈ [0,1] the segment contributes its full increment
        let rhs = |s: &[f64], out: &mut [f64]| family.eval_combination(&inc, s, out);
        integrate_interval(rhs, &mut y, (w[0], w[1]), substeps, k, &mut sol)?;
    }
    sol.terminal = y;
    Ok(sol)
}
