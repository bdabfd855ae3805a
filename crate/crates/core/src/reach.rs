//! Piecewise-linear controls that reproduce the terminal state of a
//! rough-path-driven system.
//!
//! For the depth-2 signature ODE the control is built in closed form (one
//! drift segment plus one square loop per coordinate plane). For general
//! families a multi-start Levenberg–Marquardt shooting search is used and a
//! failure is reported as such; it is never a proof of unreachability.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orbit::{rank_profile, OrbitOptions};
use crate::rde::{solve_ode, solve_rde, RoughPathL2, DEFAULT_SUBSTEPS};
use crate::signature::PiecewiseLinearPath;
use crate::tensor::{shuffle_check, TruncatedTensor};
use crate::vf::{Builtin, VectorFieldFamily};

const STEP2_SHUFFLE_TOL: f64 = 1e-8;
const DURATION_SUM_TOL: f64 = 1e-12;
const START_CHUNK: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlSegment {
    pub direction: Vec<f64>,
    pub duration: f64,
}

/// Ordered `(direction, duration)` segments over `[0, horizon]`. An empty
/// segment list means "stay put for the whole horizon".
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlProgram {
    pub dim: usize,
    pub horizon: f64,
    pub segments: Vec<ControlSegment>,
}

impl ControlProgram {
    pub fn new(dim: usize, horizon: f64, segments: Vec<ControlSegment>) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::domain("control horizon must be positive"));
        }
        for s in &segments {
            if s.direction.len() != dim {
                return Err(Error::dim("control direction has the wrong dimension"));
            }
            if !(s.duration > 0.0) || s.direction.iter().any(|x| !x.is_finite()) {
                return Err(Error::domain(
                    "control durations must be positive and directions finite",
                ));
            }
        }
        if !segments.is_empty() {
            let total: f64 = segments.iter().map(|s| s.duration).sum();
            if (total - horizon).abs() > DURATION_SUM_TOL * horizon.max(1.0) {
                return Err(Error::domain(format!(
                    "durations sum to {total}, horizon is {horizon}"
                )));
            }
        }
        Ok(Self {
            dim,
            horizon,
            segments,
        })
    }

    pub fn idle(dim: usize, horizon: f64) -> Result<Self> {
        Self::new(dim, horizon, Vec::new())
    }

    /// Equal-duration segments with the given directions.
    pub fn uniform(dim: usize, horizon: f64, directions: &[f64]) -> Result<Self> {
        if directions.is_empty() || !directions.len().is_multiple_of(dim) {
            return Err(Error::dim(
                "direction vector length must be a positive multiple of n",
            ));
        }
        let k = directions.len() / dim;
        let tau = horizon / k as f64;
        let segments = directions
            .chunks(dim)
            .map(|d| ControlSegment {
                direction: d.to_vec(),
                duration: tau,
            })
            .collect();
        Self::new(dim, horizon, segments)
    }

    /// Segments that realize the given increments, durations proportional
    /// to their Euclidean lengths.
    pub fn from_increments(dim: usize, horizon: f64, increments: &[Vec<f64>]) -> Result<Self> {
        let lengths: Vec<f64> = increments
            .iter()
            .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect();
        let total: f64 = lengths.iter().sum();
        if increments.is_empty() || total == 0.0 {
            return Self::idle(dim, horizon);
        }
        let segments = increments
            .iter()
            .zip(&lengths)
            .filter(|(_, &l)| l > 0.0)
            .map(|(v, &l)| {
                let duration = horizon * l / total;
                ControlSegment {
                    direction: v.iter().map(|x| x / duration).collect(),
                    duration,
                }
            })
            .collect();
        Self::new(dim, horizon, segments)
    }

    /// The driving path, starting at the origin at time 0.
    pub fn realize(&self) -> PiecewiseLinearPath {
        if self.segments.is_empty() {
            return PiecewiseLinearPath::new(
                self.dim,
                vec![0.0, self.horizon],
                vec![vec![0.0; self.dim]; 2],
            )
            .expect("idle path is valid");
        }
        let increments: Vec<Vec<f64>> = self
            .segments
            .iter()
            .map(|s| s.direction.iter().map(|u| u * s.duration).collect())
            .collect();
        let durations: Vec<f64> = self.segments.iter().map(|s| s.duration).collect();
        PiecewiseLinearPath::from_increments(&vec![0.0; self.dim], &increments, &durations)
            .expect("control segments are valid")
    }

    /// Durations times `c`, directions divided by `c`: same trace.
    pub fn rescale(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::domain("time-rescaling factor must be positive"));
        }
        let segments = self
            .segments
            .iter()
            .map(|s| ControlSegment {
                direction: s.direction.iter().map(|u| u / c).collect(),
                duration: s.duration * c,
            })
            .collect();
        Self::new(self.dim, self.horizon * c, segments)
    }

    pub fn path_length(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| s.duration * s.direction.iter().map(|u| u * u).sum::<f64>().sqrt())
            .sum()
    }

    fn increments(&self) -> Vec<Vec<f64>> {
        self.segments
            .iter()
            .map(|s| s.direction.iter().map(|u| u * s.duration).collect())
            .collect()
    }
}

/// Closed-form control whose depth-2 signature equals `target`: the
/// level-1 increment as one segment, then a square loop of signed area
/// `A_ij` in each coordinate plane that carries area.
pub fn reach_step2_exact(target: &TruncatedTensor, horizon: f64) -> Result<ControlProgram> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::domain("horizon must be positive"));
    }
    if target.depth() != 2 {
        return Err(Error::domain(format!(
            "exact construction needs a depth-2 target, got depth {}",
            target.depth()
        )));
    }
    let report =
        shuffle_check(target, STEP2_SHUFFLE_TOL).map_err(|_| Error::NotGroupLike(f64::INFINITY))?;
    if !report.passed {
        return Err(Error::NotGroupLike(report.worst_violation));
    }
    let n = target.width();
    let v = target.level(1).to_vec();
    let head = TruncatedTensor::from_vector(&v, 2)?.exp()?;
    let residual = head.inverse()?.mul(target)?;
    let mut increments = Vec::new();
    if v.iter().any(|x| *x != 0.0) {
        increments.push(v);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let area = 0.5 * (residual.coeff(&[i, j]) - residual.coeff(&[j, i]));
            if area == 0.0 {
                continue;
            }
            let side = area.abs().sqrt();
            let (a, b) = if area > 0.0 { (i, j) } else { (j, i) };
            for (axis, sign) in [(a, 1.0), (b, 1.0), (a, -1.0), (b, -1.0)] {
                let mut e = vec![0.0; n];
                e[axis] = sign * side;
                increments.push(e);
            }
        }
    }
    ControlProgram::from_increments(n, horizon, &increments)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReachStatus {
    Exact,
    Converged,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReachReport {
    pub status: ReachStatus,
    pub control: ControlProgram,
    pub achieved: Vec<f64>,
    pub target: Vec<f64>,
    pub residual: f64,
    pub tolerance: f64,
    pub iterations: usize,
    pub restarts_used: usize,
    pub seed: u64,
    pub path_length: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_profile: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_constant: Option<bool>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShootingOptions {
    pub horizon: f64,
    pub segments: usize,
    pub tol: f64,
    /// Number of random starts after the structured ones.
    pub restarts: usize,
    pub seed: u64,
    pub substeps: usize,
    pub max_iters: usize,
    /// Finite-difference step for the Jacobian.
    pub fd_step: f64,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self {
            horizon: 1.0,
            segments: 4,
            tol: 1e-6,
            restarts: 8,
            seed: 0,
            substeps: DEFAULT_SUBSTEPS,
            max_iters: 200,
            fd_step: 1e-6,
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

struct Shooter<'a> {
    family: &'a VectorFieldFamily,
    start: &'a [f64],
    target: &'a [f64],
    opts: &'a ShootingOptions,
}

#[derive(Clone, Debug)]
struct StartOutcome {
    params: Vec<f64>,
    residual: f64,
    iterations: usize,
}

impl Shooter<'_> {
    fn residual(&self, params: &[f64]) -> Result<Vec<f64>> {
        let n = self.family.inputs();
        let prog = ControlProgram::uniform(n, self.opts.horizon, params)?;
        let sol = solve_ode(self.family, &prog.realize(), self.start, self.opts.substeps)?;
        Ok(diff(&sol.terminal, self.target))
    }

    fn jacobian(&self, params: &[f64]) -> Result<DMatrix<f64>> {
        let h = self.opts.fd_step;
        let d = self.target.len();
        let mut jac = DMatrix::zeros(d, params.len());
        let mut p = params.to_vec();
        for k in 0..params.len() {
            p[k] = params[k] + h;
            let plus = self.residual(&p)?;
            p[k] = params[k] - h;
            let minus = self.residual(&p)?;
            p[k] = params[k];
            for r in 0..d {
                jac[(r, k)] = (plus[r] - minus[r]) / (2.0 * h);
            }
        }
        Ok(jac)
    }

    /// Levenberg–Marquardt on `‖terminal(p) − target‖²`.
    fn solve_from(&self, p0: Vec<f64>) -> Result<StartOutcome> {
        let mut p = p0;
        let mut r = self.residual(&p)?;
        let mut cost = norm(&r);
        let mut lambda = 1e-3;
        let mut iterations = 0;
        while iterations < self.opts.max_iters && cost > self.opts.tol {
            iterations += 1;
            let jac = match self.jacobian(&p) {
                Ok(j) => j,
                Err(_) => break,
            };
            let jt = jac.transpose();
            let a = &jt * &jac;
            let g = &jt * DVector::from_column_slice(&r);
            let mut improved = false;
            while lambda < 1e12 {
                let mut m = a.clone();
                for i in 0..m.nrows() {
                    m[(i, i)] += lambda * (1.0 + a[(i, i)]);
                }
                let step = match m.cholesky() {
                    Some(ch) => ch.solve(&(-&g)),
                    None => {
                        lambda *= 4.0;
                        continue;
                    }
                };
                let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(x, s)| x + s).collect();
                match self.residual(&trial) {
                    Ok(rt) if norm(&rt) < cost => {
                        p = trial;
                        cost = norm(&rt);
                        r = rt;
                        lambda = (lambda / 3.0).max(1e-12);
                        improved = true;
                        break;
                    }
                    _ => lambda *= 4.0,
                }
                if step.norm() < 1e-15 * (1.0 + norm(&p)) {
                    break;
                }
            }
            if !improved {
                break;
            }
        }
        Ok(StartOutcome {
            params: p,
            residual: cost,
            iterations,
        })
    }
}

/// Group element reached by the signature ODE from `start` to `terminal`
/// (the fields act by right multiplication).
fn signature_increment(
    family: &VectorFieldFamily,
    start: &[f64],
    terminal: &[f64],
) -> Option<TruncatedTensor> {
    let Some(Builtin::SignatureOde { depth: 2, width }) = family.builtin() else {
        return None;
    };
    let a = TruncatedTensor::from_flat(width, 2, start).ok()?;
    let b = TruncatedTensor::from_flat(width, 2, terminal).ok()?;
    if a.scalar() == 0.0 {
        return None;
    }
    a.inverse().ok()?.mul(&b).ok()
}

/// Map a program onto `k` equal-duration segments of the same trace.
fn as_uniform_params(prog: &ControlProgram, k: usize) -> Option<Vec<f64>> {
    let incs = prog.increments();
    if incs.len() > k {
        return None;
    }
    let tau = prog.horizon / k as f64;
    let mut params = vec![0.0; k * prog.dim];
    for (slot, inc) in params.chunks_mut(prog.dim).zip(&incs) {
        for (s, x) in slot.iter_mut().zip(inc) {
            *s = x / tau;
        }
    }
    Some(params)
}

/// Search `K` equal-duration directions driving `start` to `target`.
pub fn reach_shooting(
    family: &VectorFieldFamily,
    start: &[f64],
    target: &[f64],
    opts: &ShootingOptions,
) -> Result<ReachReport> {
    let d = family.dim();
    let n = family.inputs();
    if start.len() != d || target.len() != d {
        return Err(Error::dim(format!("start and target must live in R^{d}")));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::domain("tolerance must be positive"));
    }
    if opts.segments == 0 {
        return Err(Error::domain("need at least one control segment"));
    }
    if !(opts.horizon > 0.0) || !opts.horizon.is_finite() {
        return Err(Error::domain("horizon must be positive"));
    }
    let shooter = Shooter {
        family,
        start,
        target,
        opts,
    };
    let k = opts.segments;
    let zero = vec![0.0; k * n];

    let mut starts: Vec<Vec<f64>> = Vec::new();
    if norm(&diff(target, start)) > opts.tol {
        if let Some(g) = signature_increment(family, start, target) {
            if let Some(p) = reach_step2_exact(&g, opts.horizon)
                .ok()
                .and_then(|prog| as_uniform_params(&prog, k))
            {
                starts.push(p);
            }
        }
        // least-squares linearization: F(ξ) u T ≈ target − ξ
        let cols = DMatrix::from_fn(d, n, |r, c| {
            family.fields()[c].components()[r]
                .eval(start)
                .unwrap_or(0.0)
        });
        let disp = DVector::from_vec(diff(target, start));
        if let Ok(pinv) = cols.pseudo_inverse(1e-12) {
            let u = pinv * disp / opts.horizon;
            starts.push(u.iter().copied().cycle().take(k * n).collect());
        }
        let scale = (1.0 + norm(&diff(target, start))) / opts.horizon;
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        for _ in 0..opts.restarts {
            starts.push((0..k * n).map(|_| rng.gen_range(-scale..=scale)).collect());
        }
    } else {
        starts.push(zero);
    }

    let mut best: Option<StartOutcome> = None;
    let mut used = 0;
    let mut total_iters = 0;
    for chunk in starts.chunks(START_CHUNK) {
        let outcomes: Vec<Result<StartOutcome>> = chunk
            .par_iter()
            .map(|p0| shooter.solve_from(p0.clone()))
            .collect();
        used += chunk.len();
        let mut converged_here = false;
        for out in outcomes.into_iter().flatten() {
            total_iters += out.iterations;
            if out.residual <= opts.tol {
                converged_here = true;
            }
            let better = best.as_ref().is_none_or(|b| out.residual < b.residual);
            if better {
                best = Some(out);
            }
        }
        if converged_here {
            break;
        }
    }
    let Some(best) = best else {
        let control = ControlProgram::uniform(n, opts.horizon, &vec![0.0; k * n])?;
        return Ok(ReachReport {
            status: ReachStatus::Failed,
            path_length: 0.0,
            control,
            achieved: Vec::new(),
            target: target.to_vec(),
            residual: f64::INFINITY,
            tolerance: opts.tol,
            iterations: total_iters,
            restarts_used: used,
            seed: opts.seed,
            rank_profile: None,
            rank_constant: None,
            warnings: vec!["every start blew up".into()],
        });
    };
    let control = ControlProgram::uniform(n, opts.horizon, &best.params)?;
    let achieved = solve_ode(family, &control.realize(), start, opts.substeps)?.terminal;
    let residual = norm(&diff(&achieved, target));
    Ok(ReachReport {
        status: if residual <= opts.tol {
            ReachStatus::Converged
        } else {
            ReachStatus::Failed
        },
        path_length: control.path_length(),
        control,
        achieved,
        target: target.to_vec(),
        residual,
        tolerance: opts.tol,
        iterations: total_iters,
        restarts_used: used,
        seed: opts.seed,
        rank_profile: None,
        rank_constant: None,
        warnings: Vec::new(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyOptions {
    pub tol: f64,
    /// Defaults to the rough path's own time span.
    pub horizon: Option<f64>,
    pub substeps: usize,
    pub shooting: ShootingOptions,
    pub orbit: OrbitOptions,
    /// Number of trajectory points at which the orbit rank is sampled.
    pub profile_points: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            horizon: None,
            substeps: DEFAULT_SUBSTEPS,
            shooting: ShootingOptions::default(),
            orbit: OrbitOptions::default(),
            profile_points: 10,
        }
    }
}

fn profile_indices(len: usize, points: usize) -> Vec<usize> {
    if points == 0 || len == 0 {
        return Vec::new();
    }
    if points == 1 {
        return vec![len - 1];
    }
    let mut idx: Vec<usize> = (0..points)
        .map(|k| ((k as f64) * (len - 1) as f64 / (points - 1) as f64).round() as usize)
        .collect();
    idx.dedup();
    idx
}

/// Solve the RDE, then produce a piecewise-linear control reaching its
/// terminal state through the classical ODE, and check the trajectory's
/// orbit rank along the way.
pub fn verify_accessibility(
    family: &VectorFieldFamily,
    start: &[f64],
    rough: &RoughPathL2,
    opts: &VerifyOptions,
) -> Result<ReachReport> {
    let rde = solve_rde(family, rough, start, opts.substeps)?;
    let target = rde.terminal.clone();
    let horizon = opts.horizon.unwrap_or_else(|| rough.horizon());
    let n = family.inputs();
    let mut warnings = Vec::new();

    let null_driver = rough.increments().iter().all(|inc| {
        inc.lambda
            .iter()
            .chain(inc.mu.iter().flatten())
            .all(|x| *x == 0.0)
    });
    let exact = if null_driver {
        Some(ControlProgram::idle(n, horizon)?)
    } else if let Some(g) = signature_increment(family, start, &target) {
        match reach_step2_exact(&g, horizon) {
            Ok(p) => Some(p),
            Err(e) => {
                warnings.push(format!("exact construction unavailable: {e}"));
                None
            }
        }
    } else {
        None
    };

    let mut report = match exact {
        Some(control) => {
            let achieved = solve_ode(family, &control.realize(), start, opts.substeps)?.terminal;
            let residual = norm(&diff(&achieved, &target));
            ReachReport {
                status: if residual <= opts.tol {
                    ReachStatus::Exact
                } else {
                    ReachStatus::Failed
                },
                path_length: control.path_length(),
                control,
                achieved,
                target: target.clone(),
                residual,
                tolerance: opts.tol,
                iterations: 0,
                restarts_used: 0,
                seed: opts.shooting.seed,
                rank_profile: None,
                rank_constant: None,
                warnings: Vec::new(),
            }
        }
        None => {
            let shooting = ShootingOptions {
                horizon,
                tol: opts.tol,
                substeps: opts.substeps,
                ..opts.shooting.clone()
            };
            reach_shooting(family, start, &target, &shooting)?
        }
    };

    let points: Vec<Vec<f64>> = profile_indices(rde.states.len(), opts.profile_points)
        .into_iter()
        .map(|i| rde.states[i].clone())
        .collect();
    if !points.is_empty() {
        let profile = rank_profile(family, &points, &opts.orbit)?;
        if !profile.constant {
            warnings.push(format!(
                "orbit rank not constant along the RDE trajectory: {:?}",
                profile.ranks
            ));
        }
        report.rank_constant = Some(profile.constant);
        report.rank_profile = Some(profile.ranks);
    }
    report.warnings.extend(warnings);
    Ok(report)
}
