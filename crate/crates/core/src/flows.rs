//! Flows of vector fields, D-diffeomorphisms and their differentials.
//!
//! Everything is integrated with fixed-step classical RK4. Pushforwards
//! come from the variational equation `dJ/ds = Df(γ(s)) J` integrated
//! jointly with the trajectory.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::vf::VectorFieldFamily;

/// States whose max-norm exceeds this are treated as a blow-up.
pub const BLOWUP_LIMIT: f64 = 1e8;

const DEFAULT_MIN_STEPS: usize = 64;
const DEFAULT_MAX_STEP: f64 = 0.01;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IntegratorSettings {
    /// Fixed step size; `None` picks `|t| / max(64, ⌈|t| / 0.01⌉)`.
    pub step: Option<f64>,
}

impl IntegratorSettings {
    pub fn with_step(step: f64) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::domain("integrator step must be positive"));
        }
        Ok(Self { step: Some(step) })
    }

    pub fn steps_for(&self, duration: f64) -> usize {
        let t = duration.abs();
        match self.step {
            Some(h) => ((t / h).ceil() as usize).max(1),
            None => DEFAULT_MIN_STEPS.max((t / DEFAULT_MAX_STEP).ceil() as usize),
        }
    }
}

/// Integrate `dy/ds = rhs(y)` over `[0, duration]` in `steps` RK4 steps,
/// calling `observe(k, y)` after each step. Only the first `guarded`
/// coordinates are subject to the blow-up bound.
pub(crate) fn rk4<F, O>(
    mut rhs: F,
    y: &mut [f64],
    duration: f64,
    steps: usize,
    guarded: usize,
    mut observe: O,
) -> Result<()>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<()>,
    O: FnMut(usize, &[f64]),
{
    let m = y.len();
    let h = duration / steps as f64;
    let mut k1 = vec![0.0; m];
    let mut k2 = vec![0.0; m];
    let mut k3 = vec![0.0; m];
    let mut k4 = vec![0.0; m];
    let mut tmp = vec![0.0; m];
    for step in 0..steps {
        let blow = |_: Error| Error::BlowUp {
            stage: None,
            time: step as f64 * h,
        };
        rhs(y, &mut k1)?;
        for i in 0..m {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        check_state(&tmp, guarded).map_err(blow)?;
        rhs(&tmp, &mut k2)?;
        for i in 0..m {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        check_state(&tmp, guarded).map_err(blow)?;
        rhs(&tmp, &mut k3)?;
        for i in 0..m {
            tmp[i] = y[i] + h * k3[i];
        }
        check_state(&tmp, guarded).map_err(blow)?;
        rhs(&tmp, &mut k4)?;
        for i in 0..m {
            tmp[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        check_state(&tmp, guarded).map_err(blow)?;
        y.copy_from_slice(&tmp);
        observe(step + 1, y);
    }
    Ok(())
}

fn check_state(y: &[f64], guarded: usize) -> Result<()> {
    let bad = y
        .iter()
        .enumerate()
        .any(|(i, v)| !v.is_finite() || (i < guarded && v.abs() > BLOWUP_LIMIT));
    if bad {
        Err(Error::BlowUp {
            stage: None,
            time: 0.0,
        })
    } else {
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Direction {
    /// Zero-based field index.
    Field(usize),
    /// Constant mixture `sum_i x_i f^i`.
    Combination(Vec<f64>),
}

impl Direction {
    fn coeffs(&self, family: &VectorFieldFamily) -> Result<Vec<f64>> {
        match self {
            Direction::Field(i) => {
                family.field(*i)?;
                let mut c = vec![0.0; family.inputs()];
                c[*i] = 1.0;
                Ok(c)
            }
            Direction::Combination(c) => {
                if c.len() != family.inputs() {
                    return Err(Error::dim(format!(
                        "direction has {} entries, family has {} fields",
                        c.len(),
                        family.inputs()
                    )));
                }
                Ok(c.clone())
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct FlowRequest<'a> {
    pub family: &'a VectorFieldFamily,
    pub direction: Direction,
    pub time: f64,
    pub start: Vec<f64>,
    pub settings: IntegratorSettings,
}

impl FlowRequest<'_> {
    fn validate(&self) -> Result<Vec<f64>> {
        if !self.time.is_finite() {
            return Err(Error::domain("flow time must be finite"));
        }
        if self.start.len() != self.family.dim() {
            return Err(Error::dim(format!(
                "start has {} coordinates, family lives in R^{}",
                self.start.len(),
                self.family.dim()
            )));
        }
        if self.start.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("start point must be finite"));
        }
        self.direction.coeffs(self.family)
    }
}

/// Endpoint of the flow `f̃_t(y)`.
pub fn flow(req: &FlowRequest) -> Result<Vec<f64>> {
    let coeffs = req.validate()?;
    let mut y = req.start.clone();
    if req.time == 0.0 {
        return Ok(y);
    }
    let steps = req.settings.steps_for(req.time);
    let d = y.len();
    rk4(
        |s, out| req.family.eval_combination(&coeffs, s, out),
        &mut y,
        req.time,
        steps,
        d,
        |_, _| {},
    )?;
    Ok(y)
}

/// Flow endpoint together with its differential with respect to the start.
pub fn flow_with_jacobian(req: &FlowRequest) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let coeffs = req.validate()?;
    let d = req.start.len();
    if req.time == 0.0 {
        return Ok((req.start.clone(), DMatrix::identity(d, d)));
    }
    let mut state = vec![0.0; d + d * d];
    state[..d].copy_from_slice(&req.start);
    for i in 0..d {
        state[d + i * d + i] = 1.0;
    }
    let steps = req.settings.steps_for(req.time);
    rk4(
        |s, out| {
            let (y, j) = s.split_at(d);
            let (dy, dj) = out.split_at_mut(d);
            req.family.eval_combination(&coeffs, y, dy)?;
            let a = req.family.combination_jacobian(&coeffs, y)?;
            // dJ = A J, both row-major
            for r in 0..d {
                for c in 0..d {
                    let mut acc = 0.0;
                    for k in 0..d {
                        acc += a[r * d + k] * j[k * d + c];
                    }
                    dj[r * d + c] = acc;
                }
            }
            Ok(())
        },
        &mut state,
        req.time,
        steps,
        d,
        |_, _| {},
    )?;
    let jac = DMatrix::from_row_slice(d, d, &state[d..]);
    state.truncate(d);
    Ok((state, jac))
}

/// A finite composition `f̃^{i_k}_{t_k} ∘ .. ∘ f̃^{i_1}_{t_1}`, applied
/// first stage first.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DDiffeo {
    /// `(zero-based field index, time)` in application order.
    pub stages: Vec<(usize, f64)>,
}

impl DDiffeo {
    pub fn new(stages: Vec<(usize, f64)>) -> Self {
        Self { stages }
    }

    pub fn identity() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    pub fn inverse(&self) -> Self {
        Self {
            stages: self.stages.iter().rev().map(|&(i, t)| (i, -t)).collect(),
        }
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &Self) -> Self {
        let mut stages = self.stages.clone();
        stages.extend_from_slice(&other.stages);
        Self { stages }
    }

    fn validate(&self, family: &VectorFieldFamily) -> Result<()> {
        for &(i, t) in &self.stages {
            family.field(i)?;
            if !t.is_finite() {
                return Err(Error::domain("D-diffeomorphism times must be finite"));
            }
        }
        Ok(())
    }
}

pub fn apply_ddiffeo(
    g: &DDiffeo,
    family: &VectorFieldFamily,
    y: &[f64],
    settings: IntegratorSettings,
) -> Result<Vec<f64>> {
    g.validate(family)?;
    let mut cur = y.to_vec();
    for (k, &(i, t)) in g.stages.iter().enumerate() {
        let req = FlowRequest {
            family,
            direction: Direction::Field(i),
            time: t,
            start: cur,
            settings,
        };
        cur = flow(&req).map_err(|e| e.with_stage(k))?;
    }
    Ok(cur)
}

pub fn inverse_ddiffeo(g: &DDiffeo) -> DDiffeo {
    g.inverse()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Pushforward {
    pub endpoint: Vec<f64>,
    pub jacobian: DMatrix<f64>,
    pub determinant: f64,
    /// `|det J|` fell below `1e-10`; flows are diffeomorphisms, so this
    /// signals numerical trouble rather than a true singularity.
    pub near_singular: bool,
}

/// `D(g)(y)` by the chain rule across stages.
pub fn pushforward(
    g: &DDiffeo,
    family: &VectorFieldFamily,
    y: &[f64],
    settings: IntegratorSettings,
) -> Result<Pushforward> {
    g.validate(family)?;
    let d = family.dim();
    if y.len() != d {
        return Err(Error::dim(format!(
            "point has {} coordinates, family lives in R^{d}",
            y.len()
        )));
    }
    let mut cur = y.to_vec();
    let mut jac = DMatrix::identity(d, d);
    for (k, &(i, t)) in g.stages.iter().enumerate() {
        let req = FlowRequest {
            family,
            direction: Direction::Field(i),
            time: t,
            start: cur,
            settings,
        };
        let (next, jk) = flow_with_jacobian(&req).map_err(|e| e.with_stage(k))?;
        jac = jk * jac;
        cur = next;
    }
    let determinant = jac.determinant();
    Ok(Pushforward {
        endpoint: cur,
        near_singular: determinant.abs() < 1e-10,
        determinant,
        jacobian: jac,
    })
}
