//! Vector-field families `D = {f^1, .., f^n}` on `R^d`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{parse, Expr};
use crate::tensor::flat_len;

/// One vector field with its symbolic Jacobian.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    components: Vec<Expr>,
    /// `jacobian[r][c] = ∂ components[r] / ∂ y_c`
    jacobian: Vec<Vec<Expr>>,
}

impl VectorField {
    pub fn new(dim: usize, components: Vec<Expr>) -> Result<Self> {
        if components.len() != dim {
            return Err(Error::dim(format!(
                "field has {} components, expected {dim}",
                components.len()
            )));
        }
        if let Some(bad) = components.iter().find(|e| e.arity() > dim) {
            return Err(Error::dim(format!(
                "component {bad} uses a variable beyond y{dim}"
            )));
        }
        let jacobian = components
            .iter()
            .map(|e| (0..dim).map(|c| e.diff(c)).collect())
            .collect();
        Ok(Self {
            components,
            jacobian,
        })
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn jacobian_exprs(&self) -> &[Vec<Expr>] {
        &self.jacobian
    }

    pub fn eval_into(&self, y: &[f64], out: &mut [f64]) -> Result<()> {
        for (o, e) in out.iter_mut().zip(&self.components) {
            *o = e.eval(y)?;
        }
        Ok(())
    }

    pub fn eval(&self, y: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(y, &mut out)?;
        Ok(out)
    }

    /// Row-major `d × d` Jacobian at `y`.
    pub fn eval_jacobian(&self, y: &[f64]) -> Result<Vec<f64>> {
        let d = self.dim();
        let mut out = vec![0.0; d * d];
        for (r, row) in self.jacobian.iter().enumerate() {
            for (c, e) in row.iter().enumerate() {
                if !e.is_zero() {
                    out[r * d + c] = e.eval(y)?;
                }
            }
        }
        Ok(out)
    }

    pub fn is_identically_zero(&self) -> bool {
        self.components.iter().all(Expr::is_zero)
    }

    /// `[a, b] = Db·a − Da·b`.
    pub fn bracket(a: &VectorField, b: &VectorField) -> Result<VectorField> {
        if a.dim() != b.dim() {
            return Err(Error::dim("bracket of fields with different dimensions"));
        }
        let d = a.dim();
        let components = (0..d)
            .map(|r| {
                let mut acc = Expr::zero();
                for c in 0..d {
                    acc = Expr::add(
                        acc,
                        Expr::mul(b.jacobian[r][c].clone(), a.components[c].clone()),
                    );
                    acc = Expr::sub(
                        acc,
                        Expr::mul(a.jacobian[r][c].clone(), b.components[c].clone()),
                    );
                }
                acc
            })
            .collect();
        VectorField::new(d, components)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Builtin {
    /// Linear fields `f^i(a) = (0, a_0 e_i, .., a_{N-1} ⊗ e_i)` on the
    /// flattened truncated tensor algebra.
    SignatureOde { depth: usize, width: usize },
    /// `{(-y2, y1)}` on `R^2`.
    Rotation,
    /// `{(1, 0), (0, y1)}` on `R^2`.
    BracketDemo,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VectorFieldFamily {
    dim: usize,
    fields: Vec<VectorField>,
    builtin: Option<Builtin>,
}

/// Deterministic points in `[-1, 1]^d` used to sanity-check user fields.
fn test_box_points(dim: usize) -> impl Iterator<Item = Vec<f64>> {
    const PHI: f64 = 0.618_033_988_749_894_9;
    (1..=8).map(move |k| {
        (0..dim)
            .map(|j| {
                let u = (k as f64 * PHI + (j as f64 + 1.0) * 0.414_213_562_373_095_1).fract();
                2.0 * u - 1.0
            })
            .collect()
    })
}

impl VectorFieldFamily {
    pub fn new(dim: usize, fields: Vec<Vec<Expr>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("ambient dimension must be positive"));
        }
        if fields.is_empty() {
            return Err(Error::domain("family needs at least one field"));
        }
        let fields = fields
            .into_iter()
            .map(|c| VectorField::new(dim, c))
            .collect::<Result<Vec<_>>>()?;
        let family = Self {
            dim,
            fields,
            builtin: None,
        };
        for y in test_box_points(dim) {
            for (i, f) in family.fields.iter().enumerate() {
                f.eval(&y).map_err(|e| {
                    Error::domain(format!(
                        "field {} fails on the test box at {y:?}: {e}",
                        i + 1
                    ))
                })?;
            }
        }
        Ok(family)
    }

    /// Parse each component string in the variables `y1..y{dim}`.
    pub fn from_strings(dim: usize, fields: &[Vec<String>]) -> Result<Self> {
        let parsed = fields
            .iter()
            .map(|f| f.iter().map(|s| parse(s, dim)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::new(dim, parsed)
    }

    pub fn signature_ode(depth: usize, width: usize) -> Result<Self> {
        if depth == 0 || width == 0 {
            return Err(Error::domain("signature-ode needs N >= 1 and n >= 1"));
        }
        // validates the depth cap
        crate::tensor::TruncatedTensor::zeros(width, depth)?;
        let dim = flat_len(width, depth);
        let fields = (0..width)
            .map(|i| {
                let mut comps = vec![Expr::zero(); dim];
                // word w·i at level k+1 receives coefficient of w at level k
                let mut src = 0;
                let mut dst = 1;
                for k in 0..depth {
                    let len = width.pow(k as u32);
                    for w in 0..len {
                        comps[dst + w * width + i] = Expr::Var(src + w);
                    }
                    src += len;
                    dst += len * width;
                }
                VectorField::new(dim, comps)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dim,
            fields,
            builtin: Some(Builtin::SignatureOde { depth, width }),
        })
    }

    pub fn rotation() -> Self {
        let f = vec![Expr::neg(Expr::Var(1)), Expr::Var(0)];
        Self {
            dim: 2,
            fields: vec![VectorField::new(2, f).expect("valid")],
            builtin: Some(Builtin::Rotation),
        }
    }

    pub fn bracket_demo() -> Self {
        let f1 = vec![Expr::one(), Expr::zero()];
        let f2 = vec![Expr::zero(), Expr::Var(0)];
        Self {
            dim: 2,
            fields: vec![
                VectorField::new(2, f1).expect("valid"),
                VectorField::new(2, f2).expect("valid"),
            ],
            builtin: Some(Builtin::BracketDemo),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of fields `n` (the driving dimension).
    pub fn inputs(&self) -> usize {
        self.fields.len()
    }

    pub fn builtin(&self) -> Option<Builtin> {
        self.builtin
    }

    pub fn fields(&self) -> &[VectorField] {
        &self.fields
    }

    pub fn field(&self, i: usize) -> Result<&VectorField> {
        self.fields.get(i).ok_or_else(|| {
            Error::domain(format!(
                "field index {} out of range (family has {})",
                i + 1,
                self.fields.len()
            ))
        })
    }

    /// Symbolic `[f^i, f^j]` (zero-based indices).
    pub fn lie_bracket(&self, i: usize, j: usize) -> Result<VectorField> {
        VectorField::bracket(self.field(i)?, self.field(j)?)
    }

    fn check_point(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.dim {
            return Err(Error::dim(format!(
                "point has {} coordinates, family lives in R^{}",
                y.len(),
                self.dim
            )));
        }
        Ok(())
    }

    fn check_coeffs(&self, coeffs: &[f64]) -> Result<()> {
        if coeffs.len() != self.inputs() {
            return Err(Error::dim(format!(
                "{} coefficients for a family of {} fields",
                coeffs.len(),
                self.inputs()
            )));
        }
        Ok(())
    }

    /// `f(y)(x) = sum_i x_i f^i(y)`.
    pub fn eval_combination(&self, coeffs: &[f64], y: &[f64], out: &mut [f64]) -> Result<()> {
        self.check_point(y)?;
        self.check_coeffs(coeffs)?;
        out.iter_mut().for_each(|o| *o = 0.0);
        for (&c, f) in coeffs.iter().zip(&self.fields) {
            if c == 0.0 {
                continue;
            }
            for (o, e) in out.iter_mut().zip(&f.components) {
                if !e.is_zero() {
                    *o += c * e.eval(y)?;
                }
            }
        }
        Ok(())
    }

    /// Row-major Jacobian of `sum_i x_i f^i` at `y`.
    pub fn combination_jacobian(&self, coeffs: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.check_point(y)?;
        self.check_coeffs(coeffs)?;
        let d = self.dim;
        let mut out = vec![0.0; d * d];
        for (&c, f) in coeffs.iter().zip(&self.fields) {
            if c == 0.0 {
                continue;
            }
            for (o, j) in out.iter_mut().zip(f.eval_jacobian(y)?) {
                *o += c * j;
            }
        }
        Ok(out)
    }
}

/// JSON form of a family: explicit component strings or a builtin name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FamilySpec {
    Builtin {
        builtin: String,
        #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
        depth: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
    },
    Explicit {
        d: usize,
        n: usize,
        fields: Vec<Vec<String>>,
    },
}

impl FamilySpec {
    pub fn build(&self) -> Result<VectorFieldFamily> {
        match self {
            FamilySpec::Explicit { d, n, fields } => {
                if fields.len() != *n {
                    return Err(Error::dim(format!(
                        "declared n = {n} but {} fields given",
                        fields.len()
                    )));
                }
                VectorFieldFamily::from_strings(*d, fields)
            }
            FamilySpec::Builtin { builtin, depth, n } => match builtin.as_str() {
                "signature-ode" => {
                    let depth = depth.ok_or_else(|| Error::domain("signature-ode needs \"N\""))?;
                    let n = n.ok_or_else(|| Error::domain("signature-ode needs \"n\""))?;
                    VectorFieldFamily::signature_ode(depth, n)
                }
                "rotation" => Ok(VectorFieldFamily::rotation()),
                "bracket-demo" => Ok(VectorFieldFamily::bracket_demo()),
                other => Err(Error::domain(format!("unknown builtin family '{other}'"))),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_fields_commute() {
        let fam = VectorFieldFamily::from_strings(
            2,
            &[vec!["1".into(), "0".into()], vec!["0".into(), "1".into()]],
        )
        .unwrap();
        assert!(fam.lie_bracket(0, 1).unwrap().is_identically_zero());
    }

    #[test]
    fn bracket_demo_bracket_is_unit_y2() {
        let fam = VectorFieldFamily::bracket_demo();
        let b = fam.lie_bracket(0, 1).unwrap();
        assert_eq!(b.components(), &[Expr::zero(), Expr::one()]);
        let b = fam.lie_bracket(1, 0).unwrap();
        assert_eq!(b.eval(&[0.3, 0.2]).unwrap(), vec![0.0, -1.0]);
    }

    #[test]
    fn signature_ode_bracket_is_area_generator() {
        let fam = VectorFieldFamily::signature_ode(2, 2).unwrap();
        assert_eq!(fam.dim(), 7);
        let b = fam.lie_bracket(0, 1).unwrap();
        let a = [0.7, 0.1, -0.4, 0.5, 0.2, 0.9, -1.0];
        let v = b.eval(&a).unwrap();
        assert_eq!(v, vec![0.0, 0.0, 0.0, 0.0, 0.7, -0.7, 0.0]);
    }

    #[test]
    fn signature_ode_fields_shift_levels() {
        let fam = VectorFieldFamily::signature_ode(2, 2).unwrap();
        let a = [2.0, 3.0, 5.0, 0.0, 0.0, 0.0, 0.0];
        // f^2(a) = (0, a0 e2, a1 ⊗ e2)
        assert_eq!(
            fam.field(1).unwrap().eval(&a).unwrap(),
            vec![0.0, 0.0, 2.0, 0.0, 3.0, 0.0, 5.0]
        );
    }

    #[test]
    fn mismatched_components_rejected() {
        assert!(VectorFieldFamily::from_strings(2, &[vec!["y1".into()]]).is_err());
        assert!(VectorFieldFamily::from_strings(1, &[vec!["y2".into()]]).is_err());
    }

    #[test]
    fn test_box_rejects_singular_field() {
        assert!(VectorFieldFamily::from_strings(1, &[vec!["1/(y1 - y1)".into()]]).is_err());
    }

    #[test]
    fn family_json_forms() {
        let s: FamilySpec =
            serde_json::from_str(r#"{"builtin":"signature-ode","N":2,"n":2}"#).unwrap();
        assert_eq!(s.build().unwrap().dim(), 7);
        let s: FamilySpec =
            serde_json::from_str(r#"{"d":2,"n":1,"fields":[["-y2","y1"]]}"#).unwrap();
        let fam = s.build().unwrap();
        assert_eq!(
            fam.eval_combination_vec(&[1.0], &[1.0, 0.0]),
            vec![0.0, 1.0]
        );
        let s: FamilySpec =
            serde_json::from_str(r#"{"d":2,"n":2,"fields":[["-y2","y1"]]}"#).unwrap();
        assert!(s.build().is_err());
        let s: FamilySpec = serde_json::from_str(r#"{"builtin":"nope"}"#).unwrap();
        assert!(s.build().is_err());
    }

    impl VectorFieldFamily {
        fn eval_combination_vec(&self, c: &[f64], y: &[f64]) -> Vec<f64> {
            let mut out = vec![0.0; self.dim()];
            self.eval_combination(c, y, &mut out).unwrap();
            out
        }
    }
}
