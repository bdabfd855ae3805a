//! Piecewise-linear paths and their truncated signatures.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::TruncatedTensor;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PathRepr", into = "PathRepr")]
pub struct PiecewiseLinearPath {
    dim: usize,
    times: Vec<f64>,
    points: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct PathRepr {
    n: usize,
    times: Vec<f64>,
    points: Vec<Vec<f64>>,
}

impl TryFrom<PathRepr> for PiecewiseLinearPath {
    type Error = Error;

    fn try_from(r: PathRepr) -> Result<Self> {
        PiecewiseLinearPath::new(r.n, r.times, r.points)
    }
}

impl From<PiecewiseLinearPath> for PathRepr {
    fn from(p: PiecewiseLinearPath) -> Self {
        PathRepr {
            n: p.dim,
            times: p.times,
            points: p.points,
        }
    }
}

impl PiecewiseLinearPath {
    pub fn new(dim: usize, times: Vec<f64>, points: Vec<Vec<f64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("path dimension must be positive"));
        }
        if times.is_empty() {
            return Err(Error::domain("path needs at least one point"));
        }
        if times.len() != points.len() {
            return Err(Error::dim(format!(
                "{} times but {} points",
                times.len(),
                points.len()
            )));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::domain("path times must be finite"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("path times must be strictly increasing"));
        }
        for (k, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::dim(format!(
                    "point {k} has {} coordinates, expected {dim}",
                    p.len()
                )));
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::domain(format!(
                    "point {k} has a non-finite coordinate"
                )));
            }
        }
        Ok(Self { dim, times, points })
    }

    /// Path starting at `origin` at time 0 and moving by `increments`, each
    /// taking the matching duration.
    pub fn from_increments(
        origin: &[f64],
        increments: &[Vec<f64>],
        durations: &[f64],
    ) -> Result<Self> {
        if increments.len() != durations.len() {
            return Err(Error::dim("increments and durations differ in length"));
        }
        let mut times = vec![0.0];
        let mut points = vec![origin.to_vec()];
        for (inc, &dt) in increments.iter().zip(durations) {
            if inc.len() != origin.len() {
                return Err(Error::dim("increment dimension differs from origin"));
            }
            let last = points.last().unwrap();
            let next = last.iter().zip(inc).map(|(a, b)| a + b).collect();
            times.push(times.last().unwrap() + dt);
            points.push(next);
        }
        Self::new(origin.len(), times, points)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn segment_count(&self) -> usize {
        self.times.len() - 1
    }

    pub fn start_time(&self) -> f64 {
        self.times[0]
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn increments(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        self.points
            .windows(2)
            .map(|w| w[1].iter().zip(&w[0]).map(|(b, a)| b - a).collect())
    }

    /// Total Euclidean length.
    pub fn length(&self) -> f64 {
        self.increments()
            .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
            .sum()
    }

    /// Same trace run backwards over the same time interval.
    pub fn reverse(&self) -> Self {
        let (t0, t1) = (self.start_time(), self.end_time());
        let times = self.times.iter().rev().map(|t| t0 + (t1 - t)).collect();
        let points = self.points.iter().rev().cloned().collect();
        Self {
            dim: self.dim,
            times,
            points,
        }
    }

    /// Map the time grid affinely onto `[0, horizon]`.
    pub fn reparametrize(&self, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::domain("reparametrization horizon must be positive"));
        }
        let (t0, t1) = (self.start_time(), self.end_time());
        let times = if self.times.len() == 1 {
            vec![0.0]
        } else {
            let span = t1 - t0;
            let mut ts: Vec<f64> = self
                .times
                .iter()
                .map(|t| (t - t0) / span * horizon)
                .collect();
            *ts.last_mut().unwrap() = horizon;
            ts
        };
        Self::new(self.dim, times, self.points.clone())
    }

    /// Concatenation `self * other`: `other` is translated to start where
    /// `self` ends and its clock is shifted to follow.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::dim(
                "cannot concatenate paths of different dimension",
            ));
        }
        let end = self.points.last().unwrap();
        let shift: Vec<f64> = end
            .iter()
            .zip(&other.points[0])
            .map(|(a, b)| a - b)
            .collect();
        let dt = self.end_time() - other.start_time();
        let mut times = self.times.clone();
        let mut points = self.points.clone();
        for (t, p) in other.times.iter().zip(&other.points).skip(1) {
            times.push(t + dt);
            points.push(p.iter().zip(&shift).map(|(x, s)| x + s).collect());
        }
        Self::new(self.dim, times, points)
    }

    /// Multiply every point by `c`.
    pub fn scale_values(&self, c: f64) -> Self {
        let points = self
            .points
            .iter()
            .map(|p| p.iter().map(|x| c * x).collect())
            .collect();
        Self {
            dim: self.dim,
            times: self.times.clone(),
            points,
        }
    }
}

/// `t -> (cos(2π n² t)/n, sin(2π n² t)/n)` on `[0, 1]`, sampled at
/// `segments` equally spaced times.
pub fn oscillating_path(n: u32, segments: usize) -> Result<PiecewiseLinearPath> {
    if n == 0 || segments == 0 {
        return Err(Error::domain(
            "oscillating path needs n >= 1 and segments >= 1",
        ));
    }
    let nf = n as f64;
    let freq = 2.0 * PI * nf * nf;
    let times: Vec<f64> = (0..=segments).map(|k| k as f64 / segments as f64).collect();
    let points = times
        .iter()
        .map(|&t| vec![(freq * t).cos() / nf, (freq * t).sin() / nf])
        .collect();
    PiecewiseLinearPath::new(2, times, points)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SignatureResult {
    pub group: TruncatedTensor,
    pub interval: Option<(f64, f64)>,
}

/// `exp(v)` in closed form: level `k` is `v^{⊗k} / k!`.
pub fn segment_exp(v: &[f64], depth: usize) -> Result<TruncatedTensor> {
    let mut t = TruncatedTensor::identity(v.len(), depth)?;
    for k in 1..=depth {
        let prev = t.level(k - 1).to_vec();
        let inv_k = 1.0 / k as f64;
        let dst = t.level_mut(k);
        for (i, &p) in prev.iter().enumerate() {
            for (j, &x) in v.iter().enumerate() {
                dst[i * v.len() + j] = p * x * inv_k;
            }
        }
    }
    Ok(t)
}

/// Order-`depth` signature of a piecewise-linear path, as the ordered
/// product of its segment exponentials.
pub fn sig_pl(path: &PiecewiseLinearPath, depth: usize) -> Result<SignatureResult> {
    let mut g = TruncatedTensor::identity(path.dim(), depth)?;
    for inc in path.increments() {
        g = g.mul(&segment_exp(&inc, depth)?)?;
    }
    // level 1 is the total increment; taking it from the endpoints makes
    // closed paths exactly zero there
    if depth >= 1 && path.segment_count() > 0 {
        let first = &path.points()[0];
        let last = &path.points()[path.segment_count()];
        for ((dst, a), b) in g.level_mut(1).iter_mut().zip(first).zip(last) {
            *dst = b - a;
        }
    }
    Ok(SignatureResult {
        group: g,
        interval: Some((path.start_time(), path.end_time())),
    })
}

/// Chen's identity: the signature of a concatenation is the product.
pub fn chen_concat(s1: &SignatureResult, s2: &SignatureResult) -> Result<SignatureResult> {
    let interval = match (s1.interval, s2.interval) {
        (Some((a, b)), Some((c, d))) => {
            if (b - c).abs() > 1e-12 * (1.0 + b.abs()) {
                return Err(Error::domain(format!(
                    "intervals do not abut: first ends at {b}, second starts at {c}"
                )));
            }
            Some((a, d))
        }
        _ => None,
    };
    Ok(SignatureResult {
        group: s1.group.mul(&s2.group)?,
        interval,
    })
}
