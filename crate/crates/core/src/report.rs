//! Uniform pass/fail records for the verification checks.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// How a measured quantity must compare with its bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
}

impl Relation {
    pub fn holds(self, measured: f64, bound: f64) -> bool {
        match self {
            Relation::Le => measured <= bound,
            Relation::Ge => measured >= bound,
        }
    }
}

/// A violating sample: the nodes involved and the values observed there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub location: Vec<usize>,
    #[serde(with = "real_vec")]
    pub values: Vec<f64>,
}

impl Witness {
    pub fn node(node: usize, values: Vec<f64>) -> Self {
        Self { location: vec![node], values }
    }

    pub fn pair(a: usize, b: usize, value: f64) -> Self {
        Self { location: vec![a, b], values: vec![value] }
    }
}

/// Bounds already include the declared discretization slack, so `pass` is
/// the conjunction of `relation(measured, bound)` over all criteria.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check: String,
    pub pass: bool,
    #[serde(with = "real_map")]
    pub measured: BTreeMap<String, f64>,
    #[serde(with = "real_map")]
    pub bound: BTreeMap<String, f64>,
    pub relations: BTreeMap<String, Relation>,
    /// Slack constant `C` of the check.
    pub tolerance: f64,
    pub witnesses: Vec<Witness>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
}

/// Cap on stored witnesses per report.
pub const MAX_WITNESSES: usize = 20;

impl VerificationReport {
    pub fn new(check: &str, tolerance: f64) -> Self {
        Self {
            check: check.to_string(),
            pass: true,
            measured: BTreeMap::new(),
            bound: BTreeMap::new(),
            relations: BTreeMap::new(),
            tolerance,
            witnesses: Vec::new(),
            provenance: None,
        }
    }

    /// Records a criterion and refreshes `pass`.
    pub fn criterion(&mut self, name: &str, measured: f64, bound: f64, relation: Relation) -> &mut Self {
        self.measured.insert(name.to_string(), measured);
        self.bound.insert(name.to_string(), bound);
        self.relations.insert(name.to_string(), relation);
        self.pass = self.rederive_pass();
        self
    }

    /// An informational quantity with no bound attached.
    pub fn note(&mut self, name: &str, value: f64) -> &mut Self {
        self.measured.insert(name.to_string(), value);
        self
    }

    pub fn witness(&mut self, w: Witness) {
        if self.witnesses.len() < MAX_WITNESSES {
            self.witnesses.push(w);
        }
    }

    pub fn with_provenance(mut self, hash: impl Into<String>) -> Self {
        self.provenance = Some(hash.into());
        self
    }

    /// Recomputes the verdict from the stored numbers alone.
    pub fn rederive_pass(&self) -> bool {
        self.relations.iter().all(|(name, rel)| match (self.measured.get(name), self.bound.get(name)) {
            (Some(&m), Some(&b)) => rel.holds(m, b),
            _ => false,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization is infallible")
    }
}

/// JSON has no infinities; non-finite reals are written as strings.
mod real {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    pub(super) enum Repr {
        Num(f64),
        Text(String),
    }

    pub(super) fn to_repr(v: f64) -> Repr {
        if v.is_finite() {
            Repr::Num(v)
        } else if v.is_nan() {
            Repr::Text("nan".into())
        } else if v > 0.0 {
            Repr::Text("inf".into())
        } else {
            Repr::Text("-inf".into())
        }
    }

    pub(super) fn from_repr<E: serde::de::Error>(r: Repr) -> Result<f64, E> {
        match r {
            Repr::Num(v) => Ok(v),
            Repr::Text(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(E::custom(format!("not a real: {other}"))),
            },
        }
    }

    pub(super) fn ser<S: Serializer>(v: f64, s: S) -> Result<S::Ok, S::Error> {
        to_repr(v).serialize(s)
    }

    pub(super) fn de<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        from_repr(Repr::deserialize(d)?)
    }
}

mod real_map {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serializer};

    use super::real::{from_repr, to_repr, Repr};

    pub fn serialize<S: Serializer>(m: &BTreeMap<String, f64>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_map(m.iter().map(|(k, v)| (k, to_repr(*v))))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, f64>, D::Error> {
        BTreeMap::<String, Repr>::deserialize(d)?.into_iter().map(|(k, r)| Ok((k, from_repr(r)?))).collect()
    }
}

mod real_vec {
    use serde::{Deserialize, Deserializer, Serializer};

    use super::real::{from_repr, to_repr, Repr};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|x| to_repr(*x)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Repr>::deserialize(d)?.into_iter().map(from_repr).collect()
    }
}

/// Serde adapter for a single real that may be infinite.
pub mod real_value {
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        super::real::ser(*v, s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        super::real::de(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_is_conjunction_of_criteria() {
        let mut r = VerificationReport::new("demo", 5.0);
        assert!(r.pass);
        r.criterion("upper", 0.9, 1.0, Relation::Le);
        assert!(r.pass);
        r.criterion("lower", -1.2, -1.0, Relation::Ge);
        assert!(!r.pass);
        assert_eq!(r.pass, r.rederive_pass());
    }

    #[test]
    fn json_round_trip_keeps_infinities() {
        let mut r = VerificationReport::new("demo", 1.0);
        r.criterion("gap", f64::INFINITY, 2.0, Relation::Le);
        r.note("count", 3.0);
        r.witness(Witness::node(4, vec![f64::NEG_INFINITY, 1.5]));
        let back: VerificationReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert!(!back.rederive_pass());
        assert!(r.to_json().contains("\"<=\""));
    }

    #[test]
    fn witnesses_are_capped() {
        let mut r = VerificationReport::new("demo", 1.0);
        for k in 0..100 {
            r.witness(Witness::node(k, vec![]));
        }
        assert_eq!(r.witnesses.len(), MAX_WITNESSES);
    }
}
