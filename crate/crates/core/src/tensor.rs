//! Truncated tensor algebra `T^(N)(R^n)` and its group-like elements.
//!
//! Elements are stored densely, one coefficient array per level. Level `k`
//! holds `n^k` coefficients indexed by words `(i_1, .., i_k)` in
//! lexicographic order, letters running over `0..n`.

use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_MAX_DEPTH: usize = 6;
pub const DEFAULT_SHUFFLE_TOL: f64 = 1e-10;
pub const DEFAULT_LIE_TOL: f64 = 1e-10;

static MAX_DEPTH: AtomicUsize = AtomicUsize::new(DEFAULT_MAX_DEPTH);

/// Largest truncation depth accepted by tensor constructors.
pub fn max_depth() -> usize {
    MAX_DEPTH.load(Ordering::Relaxed)
}

/// Raise or lower the depth cap (process-wide).
pub fn set_max_depth(depth: usize) {
    MAX_DEPTH.store(depth.max(1), Ordering::Relaxed);
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TensorRepr", into = "TensorRepr")]
pub struct TruncatedTensor {
    width: usize,
    depth: usize,
    levels: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct TensorRepr {
    n: usize,
    #[serde(rename = "N")]
    depth: usize,
    levels: Vec<Vec<f64>>,
}

impl TryFrom<TensorRepr> for TruncatedTensor {
    type Error = Error;

    fn try_from(r: TensorRepr) -> Result<Self> {
        TruncatedTensor::from_levels(r.n, r.depth, r.levels)
    }
}

impl From<TruncatedTensor> for TensorRepr {
    fn from(t: TruncatedTensor) -> Self {
        TensorRepr {
            n: t.width,
            depth: t.depth,
            levels: t.levels,
        }
    }
}

fn check_shape(width: usize, depth: usize) -> Result<()> {
    if width == 0 {
        return Err(Error::domain("tensor width must be positive"));
    }
    if depth == 0 {
        return Err(Error::domain("tensor depth must be positive"));
    }
    if depth > max_depth() {
        return Err(Error::domain(format!(
            "depth {depth} exceeds the configured maximum {}",
            max_depth()
        )));
    }
    Ok(())
}

/// Number of coefficients in levels `0..=depth`.
pub fn flat_len(width: usize, depth: usize) -> usize {
    (0..=depth).map(|k| width.pow(k as u32)).sum()
}

impl TruncatedTensor {
    pub fn zeros(width: usize, depth: usize) -> Result<Self> {
        check_shape(width, depth)?;
        let levels = (0..=depth)
            .map(|k| vec![0.0; width.pow(k as u32)])
            .collect();
        Ok(Self {
            width,
            depth,
            levels,
        })
    }

    /// The unit `(1, 0, .., 0)`.
    pub fn identity(width: usize, depth: usize) -> Result<Self> {
        let mut t = Self::zeros(width, depth)?;
        t.levels[0][0] = 1.0;
        Ok(t)
    }

    pub fn from_levels(width: usize, depth: usize, levels: Vec<Vec<f64>>) -> Result<Self> {
        check_shape(width, depth)?;
        if levels.len() != depth + 1 {
            return Err(Error::dim(format!(
                "expected {} levels, got {}",
                depth + 1,
                levels.len()
            )));
        }
        for (k, lvl) in levels.iter().enumerate() {
            let want = width.pow(k as u32);
            if lvl.len() != want {
                return Err(Error::dim(format!(
                    "level {k} has {} coefficients, expected {want}",
                    lvl.len()
                )));
            }
            if lvl.iter().any(|c| !c.is_finite()) {
                return Err(Error::domain(format!(
                    "level {k} has a non-finite coefficient"
                )));
            }
        }
        Ok(Self {
            width,
            depth,
            levels,
        })
    }

    /// Element `(0, v, 0, .., 0)`.
    pub fn from_vector(v: &[f64], depth: usize) -> Result<Self> {
        let mut t = Self::zeros(v.len(), depth)?;
        t.levels[1].copy_from_slice(v);
        Ok(t)
    }

    /// Rebuild from the concatenation of all levels (the layout used by
    /// the signature-ODE vector fields).
    pub fn from_flat(width: usize, depth: usize, flat: &[f64]) -> Result<Self> {
        check_shape(width, depth)?;
        if flat.len() != flat_len(width, depth) {
            return Err(Error::dim(format!(
                "flat tensor of width {width} depth {depth} needs {} entries, got {}",
                flat_len(width, depth),
                flat.len()
            )));
        }
        let mut levels = Vec::with_capacity(depth + 1);
        let mut offset = 0;
        for k in 0..=depth {
            let len = width.pow(k as u32);
            levels.push(flat[offset..offset + len].to_vec());
            offset += len;
        }
        Self::from_levels(width, depth, levels)
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.levels.iter().flatten().copied().collect()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn levels(&self) -> &[Vec<f64>] {
        &self.levels
    }

    pub fn level(&self, k: usize) -> &[f64] {
        &self.levels[k]
    }

    pub fn level_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.levels[k]
    }

    pub fn scalar(&self) -> f64 {
        self.levels[0][0]
    }

    pub fn word_index(&self, word: &[usize]) -> usize {
        word.iter()
            .fold(0, |acc, &letter| acc * self.width + letter)
    }

    /// Coefficient of a word (letters are zero-based).
    pub fn coeff(&self, word: &[usize]) -> f64 {
        self.levels[word.len()][self.word_index(word)]
    }

    pub fn set_coeff(&mut self, word: &[usize], value: f64) {
        let idx = self.word_index(word);
        self.levels[word.len()][idx] = value;
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.width != other.width || self.depth != other.depth {
            return Err(Error::dim(format!(
                "tensor shapes differ: (n={}, N={}) vs (n={}, N={})",
                self.width, self.depth, other.width, other.depth
            )));
        }
        Ok(())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.same_shape(other)?;
        let levels = self
            .levels
            .iter()
            .zip(&other.levels)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect())
            .collect();
        Ok(Self {
            width: self.width,
            depth: self.depth,
            levels,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.levels.iter_mut().flatten().for_each(|x| *x *= c);
        out
    }

    /// Largest coefficient-wise absolute difference.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.same_shape(other)?;
        Ok(self
            .levels
            .iter()
            .flatten()
            .zip(other.levels.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub fn max_abs(&self) -> f64 {
        self.levels
            .iter()
            .flatten()
            .map(|x| x.abs())
            .fold(0.0, f64::max)
    }

    /// Truncated tensor product: level `k` is `sum_j a_j ⊗ b_{k-j}`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        let mut out = Self::zeros(self.width, self.depth)?;
        for k in 0..=self.depth {
            let dst = &mut out.levels[k];
            for j in 0..=k {
                let a = &self.levels[j];
                let b = &other.levels[k - j];
                let stride = b.len();
                for (ia, &ca) in a.iter().enumerate() {
                    if ca == 0.0 {
                        continue;
                    }
                    let row = &mut dst[ia * stride..(ia + 1) * stride];
                    for (d, &cb) in row.iter_mut().zip(b) {
                        *d += ca * cb;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Group exponential `sum_k x^k / k!`; requires a zero scalar part.
    pub fn exp(&self) -> Result<Self> {
        if self.scalar() != 0.0 {
            return Err(Error::domain("exp requires a zero level-0 coefficient"));
        }
        let mut sum = Self::identity(self.width, self.depth)?;
        let mut term = sum.clone();
        for k in 1..=self.depth {
            term = term.mul(self)?.scale(1.0 / k as f64);
            sum = sum.add(&term)?;
        }
        Ok(sum)
    }

    /// Logarithm `sum_k (-1)^(k+1) (g - 1)^k / k`; requires a unit scalar part.
    pub fn log(&self) -> Result<Self> {
        if self.scalar() != 1.0 {
            return Err(Error::domain("log requires level-0 coefficient equal to 1"));
        }
        let mut x = self.clone();
        x.levels[0][0] = 0.0;
        let mut sum = Self::zeros(self.width, self.depth)?;
        let mut power = x.clone();
        for k in 1..=self.depth {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            sum = sum.add(&power.scale(sign / k as f64))?;
            if k < self.depth {
                power = power.mul(&x)?;
            }
        }
        Ok(sum)
    }

    /// Multiplicative inverse, defined whenever the scalar part is nonzero.
    pub fn inverse(&self) -> Result<Self> {
        let a0 = self.scalar();
        if a0 == 0.0 {
            return Err(Error::domain(
                "tensor with zero scalar part is not invertible",
            ));
        }
        // g = a0 (1 + x)  =>  g^-1 = a0^-1 sum_k (-x)^k
        let mut x = self.scale(1.0 / a0);
        x.levels[0][0] = 0.0;
        let neg = x.scale(-1.0);
        let mut sum = Self::identity(self.width, self.depth)?;
        let mut power = sum.clone();
        for _ in 1..=self.depth {
            power = power.mul(&neg)?;
            sum = sum.add(&power)?;
        }
        Ok(sum.scale(1.0 / a0))
    }

    /// Dynkin projection onto Lie polynomials: word `w` maps to its
    /// right-nested bracket divided by `|w|`. Level 0 is dropped.
    pub fn lie_projection(&self) -> Self {
        let mut out = Self::zeros(self.width, self.depth).expect("shape already validated");
        for k in 1..=self.depth {
            let mut word = vec![0usize; k];
            for (idx, &c) in self.levels[k].iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                decode_word(idx, self.width, &mut word);
                let bracket = right_bracket(&word, self.width);
                let w = c / k as f64;
                for (d, b) in out.levels[k].iter_mut().zip(&bracket) {
                    *d += w * b;
                }
            }
        }
        out
    }

    /// Max-norm distance to the free Lie subspace (level 0 included).
    pub fn lie_residual(&self) -> f64 {
        let proj = self.lie_projection();
        self.max_abs_diff(&proj).expect("same shape")
    }
}

fn decode_word(mut idx: usize, width: usize, word: &mut [usize]) {
    for slot in word.iter_mut().rev() {
        *slot = idx % width;
        idx /= width;
    }
}

/// Coefficients of `[e_{w1}, [e_{w2}, .., e_{wk}]]` at level `k`.
fn right_bracket(word: &[usize], width: usize) -> Vec<f64> {
    let k = word.len();
    let mut cur = vec![0.0; width];
    cur[word[k - 1]] = 1.0;
    for &letter in word[..k - 1].iter().rev() {
        let len = cur.len();
        let mut next = vec![0.0; len * width];
        for (i, &c) in cur.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            // e_letter ⊗ cur
            next[letter * len + i] += c;
            // cur ⊗ e_letter
            next[i * width + letter] -= c;
        }
        cur = next;
    }
    cur
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShuffleReport {
    pub passed: bool,
    pub worst_violation: f64,
}

/// Test `<g,u><g,v> = <g, u ⧢ v>` for every pair of nonempty words with
/// `|u| + |v| <= N`.
pub fn shuffle_check(g: &TruncatedTensor, tol: f64) -> Result<ShuffleReport> {
    if (g.scalar() - 1.0).abs() > tol {
        return Err(Error::domain(
            "shuffle check requires level-0 coefficient 1",
        ));
    }
    let n = g.width;
    let mut worst: f64 = 0.0;
    let mut u = Vec::new();
    let mut v = Vec::new();
    for lu in 1..g.depth {
        for lv in lu..=(g.depth - lu) {
            u.resize(lu, 0);
            v.resize(lv, 0);
            for iu in 0..n.pow(lu as u32) {
                decode_word(iu, n, &mut u);
                let gu = g.levels[lu][iu];
                for iv in 0..n.pow(lv as u32) {
                    decode_word(iv, n, &mut v);
                    let lhs = gu * g.levels[lv][iv];
                    let rhs = shuffle_pair(g, &u, &v);
                    worst = worst.max((lhs - rhs).abs());
                }
            }
        }
    }
    Ok(ShuffleReport {
        passed: worst <= tol,
        worst_violation: worst,
    })
}

/// `<g, u ⧢ v>` summed over all interleavings.
fn shuffle_pair(g: &TruncatedTensor, u: &[usize], v: &[usize]) -> f64 {
    fn go(g: &TruncatedTensor, u: &[usize], v: &[usize], prefix: usize, total: usize) -> f64 {
        match (u.split_first(), v.split_first()) {
            (None, None) => g.levels[total][prefix],
            (Some((&a, ur)), None) => go(g, ur, v, prefix * g.width + a, total),
            (None, Some((&b, vr))) => go(g, u, vr, prefix * g.width + b, total),
            (Some((&a, ur)), Some((&b, vr))) => {
                go(g, ur, v, prefix * g.width + a, total)
                    + go(g, u, vr, prefix * g.width + b, total)
            }
        }
    }
    go(g, u, v, 0, u.len() + v.len())
}

/// An element of the truncated free Lie algebra, e.g. a log-signature.
#[derive(Clone, Debug, PartialEq)]
pub struct LieElement(TruncatedTensor);

impl LieElement {
    pub fn from_tensor(t: TruncatedTensor, tol: f64) -> Result<Self> {
        if t.scalar() != 0.0 {
            return Err(Error::domain(
                "Lie element must have zero level-0 coefficient",
            ));
        }
        let residual = t.lie_residual();
        if residual > tol {
            return Err(Error::domain(format!(
                "tensor is not a Lie polynomial (projection residual {residual:e})"
            )));
        }
        Ok(Self(t))
    }

    /// Depth-2 element `λ + μ` from a drift and an antisymmetric area matrix.
    pub fn from_drift_area(drift: &[f64], area: &[Vec<f64>]) -> Result<Self> {
        let n = drift.len();
        check_area(area, n)?;
        let mut t = TruncatedTensor::zeros(n, 2)?;
        t.levels[1].copy_from_slice(drift);
        for (i, row) in area.iter().enumerate() {
            t.levels[2][i * n..(i + 1) * n].copy_from_slice(row);
        }
        Ok(Self(t))
    }

    pub fn tensor(&self) -> &TruncatedTensor {
        &self.0
    }

    pub fn into_tensor(self) -> TruncatedTensor {
        self.0
    }

    pub fn drift(&self) -> &[f64] {
        self.0.level(1)
    }

    /// Level-2 coefficients as an `n × n` matrix (antisymmetric for Lie
    /// elements).
    pub fn area(&self) -> Option<Vec<Vec<f64>>> {
        if self.0.depth < 2 {
            return None;
        }
        Some(
            self.0
                .level(2)
                .chunks(self.0.width)
                .map(|r| r.to_vec())
                .collect(),
        )
    }

    pub fn exp(&self) -> Result<TruncatedTensor> {
        self.0.exp()
    }
}

/// Exact antisymmetry check: `μ + μᵀ = 0` with no tolerance.
#[allow(clippy::needless_range_loop)]
pub fn check_area(area: &[Vec<f64>], n: usize) -> Result<()> {
    if area.len() != n || area.iter().any(|r| r.len() != n) {
        return Err(Error::dim(format!("area matrix must be {n}×{n}")));
    }
    for i in 0..n {
        for j in 0..n {
            if !area[i][j].is_finite() {
                return Err(Error::domain("area matrix has a non-finite entry"));
            }
            if area[i][j] != -area[j][i] {
                return Err(Error::domain(format!(
                    "area matrix is not antisymmetric at ({i},{j})"
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: &TruncatedTensor, b: &TruncatedTensor, tol: f64) {
        let d = a.max_abs_diff(b).unwrap();
        assert!(d <= tol, "max diff {d:e} > {tol:e}\n{a:?}\n{b:?}");
    }

    #[test]
    fn identity_is_neutral() {
        let a = TruncatedTensor::from_levels(
            2,
            2,
            vec![vec![0.3], vec![1.0, -2.0], vec![0.5, 0.25, -1.0, 4.0]],
        )
        .unwrap();
        let one = TruncatedTensor::identity(2, 2).unwrap();
        assert_eq!(one.mul(&a).unwrap(), a);
        assert_eq!(a.mul(&one).unwrap(), a);
    }

    #[test]
    fn product_of_line_elements() {
        let v = [1.0, 2.0];
        let w = [-0.5, 3.0];
        let mut a = TruncatedTensor::from_vector(&v, 2).unwrap();
        a.level_mut(0)[0] = 1.0;
        let mut b = TruncatedTensor::from_vector(&w, 2).unwrap();
        b.level_mut(0)[0] = 1.0;
        let p = a.mul(&b).unwrap();
        assert_eq!(p.level(1), &[0.5, 5.0]);
        assert_eq!(p.level(2), &[-0.5, 3.0, -1.0, 6.0]);
    }

    #[test]
    fn basis_product_hits_word_12() {
        let mut a = TruncatedTensor::identity(2, 2).unwrap();
        a.set_coeff(&[0], 1.0);
        let mut b = TruncatedTensor::identity(2, 2).unwrap();
        b.set_coeff(&[1], 1.0);
        let p = a.mul(&b).unwrap();
        assert_eq!(p.level(2), &[0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let a = TruncatedTensor::identity(2, 2).unwrap();
        let b = TruncatedTensor::identity(3, 2).unwrap();
        assert!(matches!(a.mul(&b), Err(Error::Dimension(_))));
        let c = TruncatedTensor::identity(2, 3).unwrap();
        assert!(matches!(a.mul(&c), Err(Error::Dimension(_))));
    }

    #[test]
    fn exp_cases() {
        let zero = TruncatedTensor::zeros(3, 3).unwrap();
        assert_eq!(
            zero.exp().unwrap(),
            TruncatedTensor::identity(3, 3).unwrap()
        );

        let v = TruncatedTensor::from_vector(&[2.0, -1.0], 2).unwrap();
        let e = v.exp().unwrap();
        assert_eq!(e.level(2), &[2.0, -1.0, -1.0, 0.5]);

        let a = 1.7;
        let mut x = TruncatedTensor::zeros(2, 2).unwrap();
        x.set_coeff(&[0, 1], a);
        x.set_coeff(&[1, 0], -a);
        let mut expected = x.clone();
        expected.level_mut(0)[0] = 1.0;
        assert_eq!(x.exp().unwrap(), expected);
    }

    #[test]
    fn exp_and_log_domain_errors() {
        let one = TruncatedTensor::identity(2, 2).unwrap();
        assert!(matches!(one.exp(), Err(Error::Domain(_))));
        let zero = TruncatedTensor::zeros(2, 2).unwrap();
        assert!(matches!(zero.log(), Err(Error::Domain(_))));
    }

    #[test]
    fn log_of_identity_and_line() {
        let one = TruncatedTensor::identity(2, 4).unwrap();
        assert_eq!(one.log().unwrap(), TruncatedTensor::zeros(2, 4).unwrap());
        let v = TruncatedTensor::from_vector(&[0.3, -1.1], 4).unwrap();
        approx(&v.exp().unwrap().log().unwrap(), &v, 1e-15);
    }

    #[test]
    fn log_of_parabola_signature() {
        // iterated integrals of t -> (t, t^2) on [0,1]
        let g = TruncatedTensor::from_levels(
            2,
            2,
            vec![
                vec![1.0],
                vec![1.0, 1.0],
                vec![0.5, 2.0 / 3.0, 1.0 / 3.0, 0.5],
            ],
        )
        .unwrap();
        let l = LieElement::from_tensor(g.log().unwrap(), 1e-12).unwrap();
        assert_eq!(l.drift(), &[1.0, 1.0]);
        let mu = l.area().unwrap();
        assert!(mu[0][0].abs() < 1e-15 && mu[1][1].abs() < 1e-15);
        assert!((mu[0][1] - 1.0 / 6.0).abs() < 1e-15);
        assert!((mu[1][0] + 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn shuffle_cases() {
        let one = TruncatedTensor::identity(2, 3).unwrap();
        let r = shuffle_check(&one, 1e-12).unwrap();
        assert!(r.passed);
        assert_eq!(r.worst_violation, 0.0);

        let mut bad = TruncatedTensor::identity(2, 2).unwrap();
        bad.set_coeff(&[0, 0], 1.0);
        let r = shuffle_check(&bad, 1e-10).unwrap();
        assert!(!r.passed);
        assert_eq!(r.worst_violation, 2.0);
    }

    #[test]
    fn shuffle_requires_unit_scalar() {
        let zero = TruncatedTensor::zeros(2, 2).unwrap();
        assert!(shuffle_check(&zero, 1e-10).is_err());
    }

    #[test]
    fn lie_projection_fixes_brackets_and_kills_symmetric() {
        let mut x = TruncatedTensor::zeros(2, 3).unwrap();
        x.set_coeff(&[0], 0.7);
        x.set_coeff(&[0, 1], 2.0);
        x.set_coeff(&[1, 0], -2.0);
        // [e1,[e1,e2]] = e112 - 2 e121 + e211
        x.set_coeff(&[0, 0, 1], 1.0);
        x.set_coeff(&[0, 1, 0], -2.0);
        x.set_coeff(&[1, 0, 0], 1.0);
        assert!(x.lie_residual() < 1e-15);

        let mut sym = TruncatedTensor::zeros(2, 2).unwrap();
        sym.set_coeff(&[0, 1], 1.0);
        sym.set_coeff(&[1, 0], 1.0);
        assert_eq!(sym.lie_residual(), 1.0);
    }

    #[test]
    fn inverse_matches_exp_of_negated_log() {
        let v = TruncatedTensor::from_vector(&[0.4, -0.2, 0.9], 3).unwrap();
        let g = v.exp().unwrap();
        let inv = g.inverse().unwrap();
        approx(&inv, &g.log().unwrap().scale(-1.0).exp().unwrap(), 1e-15);
        approx(
            &g.mul(&inv).unwrap(),
            &TruncatedTensor::identity(3, 3).unwrap(),
            1e-15,
        );
    }

    #[test]
    fn area_must_be_exactly_antisymmetric() {
        assert!(
            LieElement::from_drift_area(&[0.0, 0.0], &[vec![0.0, 1.0], vec![-1.0, 0.0]]).is_ok()
        );
        assert!(LieElement::from_drift_area(
            &[0.0, 0.0],
            &[vec![0.0, 1.0], vec![-1.0 + 1e-16, 0.0]]
        )
        .is_err());
    }

    #[test]
    fn depth_cap_enforced() {
        assert!(TruncatedTensor::zeros(2, DEFAULT_MAX_DEPTH + 1).is_err());
        assert!(TruncatedTensor::zeros(2, 0).is_err());
    }

    #[test]
    fn json_form() {
        let t = TruncatedTensor::from_levels(
            2,
            2,
            vec![vec![1.0], vec![0.1, 1.0 / 3.0], vec![0.0, 1e-17, -2.5, 7.0]],
        )
        .unwrap();
        let s = serde_json::to_string(&t).unwrap();
        assert!(s.starts_with(r#"{"n":2,"N":2,"levels":"#));
        let back: TruncatedTensor = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
        let bad = r#"{"n":2,"N":2,"levels":[[1],[0,0],[0,0,0]]}"#;
        assert!(serde_json::from_str::<TruncatedTensor>(bad).is_err());
    }
}
