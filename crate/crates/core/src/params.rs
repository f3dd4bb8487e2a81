//! Named parameter vectors with open-interval constraints and the bijections
//! used to optimize them without constraints.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Open interval `(lower, upper)`; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

/// Map from `(-1, 1)` onto the real line used for doubly bounded parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum IntervalMap {
    /// `y = tanh(u)`; on `(0, 1)` this is the logit up to a factor of two.
    #[default]
    Tanh,
    /// `y = u / sqrt(1 + u^2)`.
    Algebraic,
}

impl Bounds {
    pub const REAL: Bounds = Bounds {
        lower: f64::NEG_INFINITY,
        upper: f64::INFINITY,
    };

    pub fn new(lower: f64, upper: f64) -> Self {
        Self { lower, upper }
    }

    pub fn positive() -> Self {
        Self::new(0.0, f64::INFINITY)
    }

    pub fn above(lower: f64) -> Self {
        Self::new(lower, f64::INFINITY)
    }

    pub fn unit_interval() -> Self {
        Self::new(0.0, 1.0)
    }

    pub fn symmetric_unit() -> Self {
        Self::new(-1.0, 1.0)
    }

    pub fn contains(&self, value: f64) -> bool {
        value.is_finite() && value > self.lower && value < self.upper
    }

    fn half_and_mid(&self) -> (f64, f64) {
        (
            0.5 * (self.upper - self.lower),
            0.5 * (self.upper + self.lower),
        )
    }

    pub fn to_unconstrained(&self, value: f64, map: IntervalMap) -> f64 {
        match (self.lower.is_finite(), self.upper.is_finite()) {
            (false, false) => value,
            (true, false) => (value - self.lower).ln(),
            (false, true) => (self.upper - value).ln(),
            (true, true) => {
                let (half, mid) = self.half_and_mid();
                let y = (value - mid) / half;
                match map {
                    IntervalMap::Tanh => y.atanh(),
                    IntervalMap::Algebraic => y / (1.0 - y * y).sqrt(),
                }
            }
        }
    }

    pub fn from_unconstrained(&self, u: f64, map: IntervalMap) -> f64 {
        match (self.lower.is_finite(), self.upper.is_finite()) {
            (false, false) => u,
            (true, false) => self.lower + u.exp(),
            (false, true) => self.upper - u.exp(),
            (true, true) => {
                let (half, mid) = self.half_and_mid();
                let y = match map {
                    IntervalMap::Tanh => u.tanh(),
                    IntervalMap::Algebraic => u / (1.0 + u * u).sqrt(),
                };
                mid + half * y
            }
        }
    }

    /// `d value / d u` at the unconstrained coordinate `u`.
    pub fn derivative(&self, u: f64, map: IntervalMap) -> f64 {
        match (self.lower.is_finite(), self.upper.is_finite()) {
            (false, false) => 1.0,
            (true, false) => u.exp(),
            (false, true) => -u.exp(),
            (true, true) => {
                let (half, _) = self.half_and_mid();
                match map {
                    IntervalMap::Tanh => {
                        let t = u.tanh();
                        half * (1.0 - t * t)
                    }
                    IntervalMap::Algebraic => half * (1.0 + u * u).powf(-1.5),
                }
            }
        }
    }
}

/// Ordered, named parameter values `theta = (theta_1, ..., theta_q)`.
///
/// Every value lies strictly inside its bounds; constructors enforce this.
/// Serializes as a JSON object `{name: value}` in parameter order. Bounds are
/// not serialized: a deserialized vector is unbounded until passed through
/// [`ParamVector::assign`] on a model template.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    values: Vec<f64>,
    names: Vec<String>,
    bounds: Vec<Bounds>,
}

impl ParamVector {
    pub fn new(names: Vec<String>, values: Vec<f64>, bounds: Vec<Bounds>) -> Result<Self> {
        if names.len() != values.len() || bounds.len() != values.len() {
            return Err(Error::InvalidParams(format!(
                "{} names, {} values, {} bounds",
                names.len(),
                values.len(),
                bounds.len()
            )));
        }
        let pv = Self {
            values,
            names,
            bounds,
        };
        pv.check()?;
        Ok(pv)
    }

    pub fn from_parts(spec: &[(&str, f64, Bounds)]) -> Result<Self> {
        Self::new(
            spec.iter().map(|(n, _, _)| n.to_string()).collect(),
            spec.iter().map(|(_, v, _)| *v).collect(),
            spec.iter().map(|(_, _, b)| *b).collect(),
        )
    }

    fn check(&self) -> Result<()> {
        for ((name, &v), b) in self.names.iter().zip(&self.values).zip(&self.bounds) {
            if !b.contains(v) {
                return Err(Error::Inadmissible(format!(
                    "{name} = {v} outside ({}, {})",
                    b.lower, b.upper
                )));
            }
        }
        Ok(())
    }

    /// Same names and bounds, new values.
    pub fn with_values(&self, values: &[f64]) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(Error::InvalidParams(format!(
                "expected {} values, got {}",
                self.values.len(),
                values.len()
            )));
        }
        let pv = Self {
            values: values.to_vec(),
            names: self.names.clone(),
            bounds: self.bounds.clone(),
        };
        pv.check()?;
        Ok(pv)
    }

    pub fn with_value(&self, name: &str, value: f64) -> Result<Self> {
        let i = self
            .index_of(name)
            .ok_or_else(|| Error::InvalidParams(format!("no parameter named {name}")))?;
        let mut values = self.values.clone();
        values[i] = value;
        self.with_values(&values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn bounds(&self) -> &[Bounds] {
        &self.bounds
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.index_of(name).map(|i| self.values[i])
    }

    pub fn to_unconstrained(&self, map: IntervalMap) -> Vec<f64> {
        self.values
            .iter()
            .zip(&self.bounds)
            .map(|(&v, b)| b.to_unconstrained(v, map))
            .collect()
    }

    pub fn from_unconstrained(&self, u: &[f64], map: IntervalMap) -> Result<Self> {
        let values: Vec<f64> = u
            .iter()
            .zip(&self.bounds)
            .map(|(&ui, b)| b.from_unconstrained(ui, map))
            .collect();
        self.with_values(&values)
    }

    /// Copies the values of `other` into `self` by name; every name of `self`
    /// must be present in `other` and vice versa.
    pub fn assign(&self, other: &ParamVector) -> Result<Self> {
        if other.len() != self.len() {
            return Err(Error::InvalidParams(format!(
                "expected parameters {:?}, got {:?}",
                self.names, other.names
            )));
        }
        let values = self
            .names
            .iter()
            .map(|n| {
                other
                    .get(n)
                    .ok_or_else(|| Error::InvalidParams(format!("missing parameter {n}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        self.with_values(&values)
    }

    /// Diagonal of `d theta / d u`.
    pub fn jacobian_diag(&self, u: &[f64], map: IntervalMap) -> Vec<f64> {
        u.iter()
            .zip(&self.bounds)
            .map(|(&ui, b)| b.derivative(ui, map))
            .collect()
    }
}

impl Serialize for ParamVector {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> core::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = serializer.serialize_map(Some(self.len()))?;
        for (n, v) in self.names.iter().zip(&self.values) {
            map.serialize_entry(n, v)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for ParamVector {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> core::result::Result<Self, D::Error> {
        struct Visitor;

        impl<'de> serde::de::Visitor<'de> for Visitor {
            type Value = ParamVector;

            fn expecting(&self, f: &mut core::fmt::Formatter) -> core::fmt::Result {
                f.write_str("an object of parameter values keyed by name")
            }

            fn visit_map<A: serde::de::MapAccess<'de>>(
                self,
                mut access: A,
            ) -> core::result::Result<ParamVector, A::Error> {
                let mut names = Vec::new();
                let mut values = Vec::new();
                while let Some((n, v)) = access.next_entry::<String, f64>()? {
                    if names.contains(&n) {
                        return Err(serde::de::Error::custom(format!("duplicate parameter {n}")));
                    }
                    names.push(n);
                    values.push(v);
                }
                let bounds = alloc::vec![Bounds::REAL; names.len()];
                ParamVector::new(names, values, bounds).map_err(serde::de::Error::custom)
            }
        }

        deserializer.deserialize_map(Visitor)
    }
}
