//! In-memory mixed-integer conic-quadratic instances and their JSON file format.
//!
//! An instance is always stored in maximization form:
//!
//! ```text
//! max  c x
//! s.t. E x <= h
//!      || A^l x + b^l ||_2 <= a^l . x + b0^l     l = 1..q
//!      lb <= x <= ub,  x_j integer for j in I
//! ```
//!
//! Files that declare `"maximize": false` have their objective negated on read
//! and restored on write; [`MicqpInstance::source_minimize`] records the flip.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::de::{self, Deserializer, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("dimension mismatch in `{field}`: {detail}")]
    Dimension { field: String, detail: String },
    #[error("invalid value in `{field}`: {detail}")]
    Invalid { field: String, detail: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

fn dim_err(field: impl Into<String>, detail: impl Into<String>) -> ModelError {
    ModelError::Dimension {
        field: field.into(),
        detail: detail.into(),
    }
}

/// One conic constraint `|| A x + b || <= a . x + b0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeBlock {
    /// `A`, one row per cone coordinate (d rows of length n).
    pub matrix: Vec<Vec<f64>>,
    /// `b`, length d.
    pub offset: Vec<f64>,
    /// `a`, length n.
    pub radius: Vec<f64>,
    /// `b0`.
    pub radius_offset: f64,
}

impl ConeBlock {
    pub fn new(matrix: Vec<Vec<f64>>, offset: Vec<f64>, radius: Vec<f64>, radius_offset: f64) -> Self {
        Self {
            matrix,
            offset,
            radius,
            radius_offset,
        }
    }

    /// Identity cone `|| x || <= r` over all `n` variables.
    pub fn norm_ball(n: usize, r: f64) -> Self {
        let matrix = (0..n)
            .map(|i| {
                let mut row = vec![0.0; n];
                row[i] = 1.0;
                row
            })
            .collect();
        Self::new(matrix, vec![0.0; n], vec![0.0; n], r)
    }

    pub fn dim(&self) -> usize {
        self.matrix.len()
    }

    /// `y0 = a . x + b0`.
    pub fn head(&self, x: &[f64]) -> f64 {
        dot(&self.radius, x) + self.radius_offset
    }

    /// `y = A x + b`.
    pub fn tail(&self, x: &[f64]) -> Vec<f64> {
        self.matrix
            .iter()
            .zip(&self.offset)
            .map(|(row, b)| dot(row, x) + b)
            .collect()
    }

    /// `|| A x + b ||^2 - (a . x + b0)^2`, the raw violation measure.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let y0 = self.head(x);
        let y = self.tail(x);
        y.iter().map(|v| v * v).sum::<f64>() - y0 * y0
    }

    /// True when the point lies in the cone up to `tol` on the squared measure
    /// and the head is not negative beyond `tol`.
    pub fn is_satisfied(&self, x: &[f64], tol: f64) -> bool {
        self.head(x) >= -tol && self.violation(x) <= tol
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// A mixed-integer conic-quadratic program in maximization form.
#[derive(Debug, Clone, PartialEq)]
pub struct MicqpInstance {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    /// Rows of `E` (each of length `num_vars`).
    pub rows: Vec<Vec<f64>>,
    /// `h`.
    pub rhs: Vec<f64>,
    pub cones: Vec<ConeBlock>,
    /// Sorted, duplicate-free indices of integer-constrained variables.
    pub int_vars: Vec<usize>,
    pub lb: Vec<f64>,
    pub ub: Vec<f64>,
    /// The source declared a minimization objective (already negated here).
    pub source_minimize: bool,
}

impl MicqpInstance {
    /// Empty continuous instance with free variables and zero objective.
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            objective: vec![0.0; num_vars],
            rows: Vec::new(),
            rhs: Vec::new(),
            cones: Vec::new(),
            int_vars: Vec::new(),
            lb: vec![f64::NEG_INFINITY; num_vars],
            ub: vec![f64::INFINITY; num_vars],
            source_minimize: false,
        }
    }

    pub fn add_row(&mut self, row: Vec<f64>, rhs: f64) {
        self.rows.push(row);
        self.rhs.push(rhs);
    }

    /// Adds `row . x = rhs` as the pair of inequalities the file format supports.
    pub fn add_equality(&mut self, row: Vec<f64>, rhs: f64) {
        let neg: Vec<f64> = row.iter().map(|v| -v).collect();
        self.add_row(row, rhs);
        self.add_row(neg, -rhs);
    }

    pub fn num_cones(&self) -> usize {
        self.cones.len()
    }

    pub fn is_integer(&self, j: usize) -> bool {
        self.int_vars.binary_search(&j).is_ok()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        dot(&self.objective, x)
    }

    /// Objective value in the sense the source file declared.
    pub fn reported_objective(&self, value: f64) -> f64 {
        if self.source_minimize {
            -value
        } else {
            value
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let n = self.num_vars;
        if self.objective.len() != n {
            return Err(dim_err("c", format!("expected {n} entries, got {}", self.objective.len())));
        }
        if self.rows.len() != self.rhs.len() {
            return Err(dim_err(
                "h",
                format!("E has {} rows but h has {} entries", self.rows.len(), self.rhs.len()),
            ));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != n {
                return Err(dim_err("E", format!("row {i} has {} entries, expected {n}", row.len())));
            }
        }
        for (l, cone) in self.cones.iter().enumerate() {
            let d = cone.dim();
            if d == 0 {
                return Err(dim_err(format!("cones[{l}].A"), "cone dimension must be at least 1"));
            }
            if cone.offset.len() != d {
                return Err(dim_err(
                    format!("cones[{l}].b"),
                    format!("A has {d} rows but b has {} entries", cone.offset.len()),
                ));
            }
            for (i, row) in cone.matrix.iter().enumerate() {
                if row.len() != n {
                    return Err(dim_err(
                        format!("cones[{l}].A"),
                        format!("row {i} has {} entries, expected {n}", row.len()),
                    ));
                }
            }
            if cone.radius.len() != n {
                return Err(dim_err(
                    format!("cones[{l}].a"),
                    format!("expected {n} entries, got {}", cone.radius.len()),
                ));
            }
        }
        if self.lb.len() != n {
            return Err(dim_err("lb", format!("expected {n} entries, got {}", self.lb.len())));
        }
        if self.ub.len() != n {
            return Err(dim_err("ub", format!("expected {n} entries, got {}", self.ub.len())));
        }
        for j in 0..n {
            if self.lb[j] > self.ub[j] {
                return Err(ModelError::Invalid {
                    field: "lb".into(),
                    detail: format!("lb[{j}] = {} exceeds ub[{j}] = {}", self.lb[j], self.ub[j]),
                });
            }
        }
        for w in self.int_vars.windows(2) {
            if w[0] >= w[1] {
                return Err(ModelError::Invalid {
                    field: "int_vars".into(),
                    detail: "indices must be strictly increasing".into(),
                });
            }
        }
        if let Some(&last) = self.int_vars.last() {
            if last >= n {
                return Err(ModelError::Invalid {
                    field: "int_vars".into(),
                    detail: format!("index {last} out of range for n = {n}"),
                });
            }
        }
        let finite = |v: &f64| !v.is_nan();
        let all_numbers = self.objective.iter().all(finite)
            && self.rows.iter().flatten().all(|v| v.is_finite())
            && self.rhs.iter().all(finite)
            && self.cones.iter().all(|c| {
                c.matrix.iter().flatten().all(|v| v.is_finite())
                    && c.offset.iter().all(|v| v.is_finite())
                    && c.radius.iter().all(|v| v.is_finite())
                    && c.radius_offset.is_finite()
            })
            && self.lb.iter().all(finite)
            && self.ub.iter().all(finite);
        if !all_numbers {
            return Err(ModelError::Invalid {
                field: "instance".into(),
                detail: "NaN or infinite coefficient".into(),
            });
        }
        Ok(())
    }

    /// True when every integer-constrained coordinate is within `tol` of an integer.
    pub fn is_integral(&self, x: &[f64], tol: f64) -> bool {
        self.int_vars.iter().all(|&j| (x[j] - x[j].round()).abs() <= tol)
    }

    pub fn cones_satisfied(&self, x: &[f64], tol: f64) -> bool {
        self.cones.iter().all(|c| c.is_satisfied(x, tol))
    }

    /// Largest violation of `E x <= h` and of the variable bounds (0 when feasible).
    pub fn linear_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (row, h) in self.rows.iter().zip(&self.rhs) {
            worst = worst.max(dot(row, x) - h);
        }
        for j in 0..self.num_vars {
            worst = worst.max(self.lb[j] - x[j]).max(x[j] - self.ub[j]);
        }
        worst
    }
}

/// Maximum over cones of `|| A^l x + b^l ||^2 - (a^l . x + b0^l)^2`.
///
/// The value is raw: it is negative when every cone is strictly satisfied.
/// With no cones the result is `-inf`.
pub fn max_cone_violation(inst: &MicqpInstance, x: &[f64]) -> f64 {
    inst.cones
        .iter()
        .map(|c| c.violation(x))
        .fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    TimeLimit,
    IterLimit,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "Optimal",
            SolveStatus::Infeasible => "Infeasible",
            SolveStatus::Unbounded => "Unbounded",
            SolveStatus::TimeLimit => "TimeLimit",
            SolveStatus::IterLimit => "IterLimit",
        }
    }

    /// Optimal and Infeasible are proofs; everything else is a stopped run.
    pub fn is_solved(&self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::Infeasible)
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SolveStatus {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Optimal" => Ok(SolveStatus::Optimal),
            "Infeasible" => Ok(SolveStatus::Infeasible),
            "Unbounded" => Ok(SolveStatus::Unbounded),
            "TimeLimit" => Ok(SolveStatus::TimeLimit),
            "IterLimit" => Ok(SolveStatus::IterLimit),
            other => Err(format!("unknown status `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub status: SolveStatus,
}

// ---------------------------------------------------------------------------
// File format

/// A float that serializes infinities as the string tokens `"inf"` / `"-inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Num(f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0 == f64::INFINITY {
            s.serialize_str("inf")
        } else if self.0 == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else if self.0.is_nan() {
            Err(serde::ser::Error::custom("NaN cannot be serialized"))
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct NumVisitor;
        impl<'de> Visitor<'de> for NumVisitor {
            type Value = Num;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or one of \"inf\", \"-inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Num, E> {
                Ok(Num(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Num, E> {
                Ok(Num(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Num, E> {
                Ok(Num(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Num, E> {
                match v {
                    "inf" | "+inf" => Ok(Num(f64::INFINITY)),
                    "-inf" => Ok(Num(f64::NEG_INFINITY)),
                    other => Err(E::custom(format!("unexpected token `{other}`"))),
                }
            }
        }
        d.deserialize_any(NumVisitor)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCone {
    #[serde(rename = "A")]
    matrix: Vec<Vec<Num>>,
    b: Vec<Num>,
    a: Vec<Num>,
    b0: Num,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    n: usize,
    maximize: bool,
    c: Vec<Num>,
    #[serde(rename = "E")]
    e: Vec<Vec<Num>>,
    h: Vec<Num>,
    cones: Vec<RawCone>,
    int_vars: Vec<usize>,
    lb: Vec<Num>,
    ub: Vec<Num>,
}

fn unwrap_vec(v: Vec<Num>) -> Vec<f64> {
    v.into_iter().map(|x| x.0).collect()
}

fn wrap_vec(v: &[f64]) -> Vec<Num> {
    v.iter().copied().map(Num).collect()
}

impl MicqpInstance {
    pub fn from_json_str(text: &str) -> Result<Self, ModelError> {
        let raw: RawInstance = serde_json::from_str(text).map_err(|e| ModelError::Parse(e.to_string()))?;
        let mut objective = unwrap_vec(raw.c);
        if !raw.maximize {
            for v in objective.iter_mut() {
                *v = -*v;
            }
        }
        let inst = MicqpInstance {
            num_vars: raw.n,
            objective,
            rows: raw.e.into_iter().map(unwrap_vec).collect(),
            rhs: unwrap_vec(raw.h),
            cones: raw
                .cones
                .into_iter()
                .map(|c| ConeBlock {
                    matrix: c.matrix.into_iter().map(unwrap_vec).collect(),
                    offset: unwrap_vec(c.b),
                    radius: unwrap_vec(c.a),
                    radius_offset: c.b0.0,
                })
                .collect(),
            int_vars: raw.int_vars,
            lb: unwrap_vec(raw.lb),
            ub: unwrap_vec(raw.ub),
            source_minimize: !raw.maximize,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn to_json_string(&self) -> Result<String, ModelError> {
        let c: Vec<f64> = if self.source_minimize {
            self.objective.iter().map(|v| -v).collect()
        } else {
            self.objective.clone()
        };
        let raw = RawInstance {
            n: self.num_vars,
            maximize: !self.source_minimize,
            c: wrap_vec(&c),
            e: self.rows.iter().map(|r| wrap_vec(r)).collect(),
            h: wrap_vec(&self.rhs),
            cones: self
                .cones
                .iter()
                .map(|c| RawCone {
                    matrix: c.matrix.iter().map(|r| wrap_vec(r)).collect(),
                    b: wrap_vec(&c.offset),
                    a: wrap_vec(&c.radius),
                    b0: Num(c.radius_offset),
                })
                .collect(),
            int_vars: self.int_vars.clone(),
            lb: wrap_vec(&self.lb),
            ub: wrap_vec(&self.ub),
        };
        serde_json::to_string(&raw).map_err(|e| ModelError::Parse(e.to_string()))
    }
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<MicqpInstance, ModelError> {
    let text = fs::read_to_string(path)?;
    MicqpInstance::from_json_str(&text)
}

pub fn write_instance(inst: &MicqpInstance, path: impl AsRef<Path>) -> Result<(), ModelError> {
    inst.validate()?;
    fs::write(path, inst.to_json_string()?)?;
    Ok(())
}
