use std::collections::BTreeMap;

use super::math::{Transform, Vec3};
use super::KernelError;

/// A keyword argument value handed to the kernel builders.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    Number(f64),
    Bool(bool),
    Text(String),
    /// Two- or three-component numeric tuple.
    Tuple(Vec<f64>),
    /// Tuple of flags, e.g. mirror axes.
    Flags(Vec<bool>),
    Points(Vec<Vec3>),
}

impl ParamValue {
    pub fn type_name(&self) -> &'static str {
        match self {
            ParamValue::Number(_) => "number",
            ParamValue::Bool(_) => "bool",
            ParamValue::Text(_) => "string",
            ParamValue::Tuple(_) => "tuple",
            ParamValue::Flags(_) => "flag tuple",
            ParamValue::Points(_) => "point list",
        }
    }
}

/// Keyword map with typed accessors. Missing keys fall back to the supplied
/// default; present keys of the wrong type are an error.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Params {
    values: BTreeMap<String, ParamValue>,
}

fn invalid(name: &str, reason: impl Into<String>) -> KernelError {
    KernelError::InvalidParam {
        name: name.to_string(),
        reason: reason.into(),
    }
}

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, v: ParamValue) -> Self {
        self.values.insert(name.to_string(), v);
        self
    }

    pub fn num(self, name: &str, v: f64) -> Self {
        self.with(name, ParamValue::Number(v))
    }

    pub fn flag(self, name: &str, v: bool) -> Self {
        self.with(name, ParamValue::Bool(v))
    }

    pub fn text(self, name: &str, v: &str) -> Self {
        self.with(name, ParamValue::Text(v.to_string()))
    }

    pub fn vec3(self, name: &str, v: Vec3) -> Self {
        self.with(name, ParamValue::Tuple(v.to_array().to_vec()))
    }

    pub fn points(self, name: &str, v: Vec<Vec3>) -> Self {
        self.with(name, ParamValue::Points(v))
    }

    pub fn insert(&mut self, name: impl Into<String>, v: ParamValue) {
        self.values.insert(name.into(), v);
    }

    pub fn get(&self, name: &str) -> Option<&ParamValue> {
        self.values.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.values.contains_key(name)
    }

    pub fn number(&self, name: &str, default: f64) -> Result<f64, KernelError> {
        match self.values.get(name) {
            None => Ok(default),
            Some(ParamValue::Number(v)) if v.is_finite() => Ok(*v),
            Some(ParamValue::Number(_)) => Err(invalid(name, "must be finite")),
            Some(other) => Err(invalid(name, format!("expected a number, got {}", other.type_name()))),
        }
    }

    pub fn positive(&self, name: &str, default: f64) -> Result<f64, KernelError> {
        let v = self.number(name, default)?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(invalid(name, format!("must be positive, got {v}")))
        }
    }

    pub fn non_negative(&self, name: &str, default: f64) -> Result<f64, KernelError> {
        let v = self.number(name, default)?;
        if v >= 0.0 {
            Ok(v)
        } else {
            Err(invalid(name, format!("must not be negative, got {v}")))
        }
    }

    /// Integer parameter with a lower bound.
    pub fn count(&self, name: &str, default: usize, min: usize) -> Result<usize, KernelError> {
        let v = self.number(name, default as f64)?;
        if v.fract() != 0.0 {
            return Err(invalid(name, format!("must be an integer, got {v}")));
        }
        if v < min as f64 {
            return Err(invalid(name, format!("must be at least {min}, got {v}")));
        }
        if v > 100_000.0 {
            return Err(invalid(name, format!("must be at most 100000, got {v}")));
        }
        Ok(v as usize)
    }

    pub fn boolean(&self, name: &str, default: bool) -> Result<bool, KernelError> {
        match self.values.get(name) {
            None => Ok(default),
            Some(ParamValue::Bool(b)) => Ok(*b),
            Some(other) => Err(invalid(name, format!("expected true or false, got {}", other.type_name()))),
        }
    }

    pub fn string(&self, name: &str, default: &str) -> Result<String, KernelError> {
        match self.values.get(name) {
            None => Ok(default.to_string()),
            Some(ParamValue::Text(s)) => Ok(s.clone()),
            Some(other) => Err(invalid(name, format!("expected a string, got {}", other.type_name()))),
        }
    }

    /// Three-component tuple; a two-component tuple gets `z = 0`.
    pub fn vec3_or(&self, name: &str, default: Vec3) -> Result<Vec3, KernelError> {
        match self.values.get(name) {
            None => Ok(default),
            Some(ParamValue::Tuple(t)) => {
                if t.iter().any(|v| !v.is_finite()) {
                    return Err(invalid(name, "components must be finite"));
                }
                match t.len() {
                    3 => Ok(Vec3::new(t[0], t[1], t[2])),
                    2 => Ok(Vec3::new(t[0], t[1], 0.0)),
                    n => Err(invalid(name, format!("expected 2 or 3 components, got {n}"))),
                }
            }
            Some(other) => Err(invalid(name, format!("expected a tuple, got {}", other.type_name()))),
        }
    }

    pub fn flags3(&self, name: &str, default: [bool; 3]) -> Result<[bool; 3], KernelError> {
        match self.values.get(name) {
            None => Ok(default),
            Some(ParamValue::Flags(f)) if f.len() == 3 => Ok([f[0], f[1], f[2]]),
            Some(ParamValue::Flags(f)) => Err(invalid(name, format!("expected 3 flags, got {}", f.len()))),
            Some(other) => Err(invalid(name, format!("expected a tuple of true/false, got {}", other.type_name()))),
        }
    }

    pub fn point_list(&self, name: &str) -> Result<Vec<Vec3>, KernelError> {
        match self.values.get(name) {
            None => Err(invalid(name, "is required")),
            Some(ParamValue::Points(p)) => {
                if p.iter().any(|v| !v.is_finite()) {
                    return Err(invalid(name, "coordinates must be finite"));
                }
                Ok(p.clone())
            }
            Some(other) => Err(invalid(name, format!("expected a list of points, got {}", other.type_name()))),
        }
    }

    /// `position` (or `location`), `rotation` and `scale`.
    pub fn transform(&self) -> Result<Transform, KernelError> {
        let position = if self.contains("location") && !self.contains("position") {
            self.vec3_or("location", Vec3::ZERO)?
        } else {
            self.vec3_or("position", Vec3::ZERO)?
        };
        Ok(Transform::new(
            position,
            self.vec3_or("rotation", Vec3::ZERO)?,
            self.vec3_or("scale", Vec3::ONE)?,
        ))
    }
}
