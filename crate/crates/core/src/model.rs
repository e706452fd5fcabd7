//! JSON model files.
//!
//! ```json
//! {
//!   "variables": [{"id": 0, "cardinality": 2}, {"id": 1, "cardinality": 2}],
//!   "factors": [{"vars": [0, 1], "table": [0.0, 1.0, 1.0, 0.0], "kind": "energy"}],
//!   "options": {"close": true, "include_empty": true}
//! }
//! ```
//!
//! Tables are row-major with the smallest variable id slowest, so `vars`
//! must be strictly increasing. `kind: potential` tables hold positive
//! weights and are read as `h = −ln(table)`.

use crate::complex::{Complex, Field};
use crate::diffusion::{clamp_boundary, DivergenceMode};
use crate::error::{Error, Result};
use crate::hypergraph::{Hypergraph, Region};
use crate::tensor::{Domain, Tensor};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub variables: Vec<VariableSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regions: Option<Vec<Vec<usize>>>,
    pub factors: Vec<FactorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<BoundarySpec>,
    #[serde(default)]
    pub options: ModelOptions,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableSpec {
    pub id: usize,
    pub cardinality: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorKind {
    #[default]
    Energy,
    Potential,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorSpec {
    pub vars: Vec<usize>,
    pub table: Vec<f64>,
    #[serde(default)]
    pub kind: FactorKind,
}

/// Boundary variables and the tables pinned on boundary members. Members
/// without a clamp table keep their own potentials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySpec {
    pub vars: Vec<usize>,
    #[serde(default)]
    pub clamp: Vec<FactorSpec>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelOptions {
    #[serde(default = "yes")]
    pub close: bool,
    #[serde(default = "yes")]
    pub include_empty: bool,
}

fn yes() -> bool {
    true
}

impl Default for ModelOptions {
    fn default() -> Self {
        ModelOptions { close: true, include_empty: true }
    }
}

#[derive(Clone, Debug)]
pub struct Boundary {
    pub vars: Region,
    /// Full degree 0 field; only boundary members are read.
    pub values: Field,
}

#[derive(Clone, Debug)]
pub struct Model {
    pub complex: Complex,
    pub potentials: Field,
    pub boundary: Option<Boundary>,
}

fn model_err(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Model { path: path.into(), message: message.into() }
}

pub fn parse_model(path: &Path) -> Result<ModelSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| model_err(path.display().to_string(), e.to_string()))?;
    ModelSpec::from_json(&text)
}

impl ModelSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            model_err(if path == "." { "$".to_string() } else { path }, e.into_inner().to_string())
        })
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| model_err("$", e.to_string()))
    }

    fn domain(&self) -> Result<Domain> {
        let mut seen = BTreeSet::new();
        for (i, v) in self.variables.iter().enumerate() {
            if !seen.insert(v.id) {
                return Err(model_err(format!("variables[{i}].id"), format!("duplicate id {}", v.id)));
            }
            if v.cardinality == 0 {
                return Err(model_err(format!("variables[{i}].cardinality"), "must be at least 1"));
            }
        }
        Domain::new(self.variables.iter().map(|v| (v.id, v.cardinality)))
    }

    fn support(&self, domain: &Domain, vars: &[usize], path: &str) -> Result<Region> {
        if vars.windows(2).any(|w| w[0] >= w[1]) {
            return Err(model_err(path, "variables must be strictly increasing"));
        }
        if let Some(v) = vars.iter().find(|&&v| domain.card(v).is_none()) {
            return Err(model_err(path, format!("undeclared variable {v}")));
        }
        Ok(Region::new(vars.iter().copied()))
    }

    fn energy(&self, domain: &Domain, f: &FactorSpec, path: &str) -> Result<Tensor> {
        let shape = domain.shape(&self.support(domain, &f.vars, &format!("{path}.vars"))?)?;
        if f.table.len() != shape.size() {
            return Err(model_err(
                format!("{path}.table"),
                format!("expected {} entries, found {}", shape.size(), f.table.len()),
            ));
        }
        let mut values = Vec::with_capacity(f.table.len());
        for (j, &t) in f.table.iter().enumerate() {
            let h = match f.kind {
                FactorKind::Energy if t.is_finite() => t,
                FactorKind::Potential if t.is_finite() && t > 0.0 => -t.ln(),
                FactorKind::Energy => return Err(model_err(format!("{path}.table[{j}]"), "energy must be finite")),
                FactorKind::Potential => {
                    return Err(model_err(format!("{path}.table[{j}]"), format!("potential {t} is not positive")))
                }
            };
            values.push(h);
        }
        Tensor::new(shape, values)
    }

    /// Hypergraph, domain and potentials. Each factor is added to the
    /// smallest member containing its support.
    pub fn build(&self) -> Result<Model> {
        if self.factors.is_empty() {
            return Err(model_err("factors", "at least one factor is required"));
        }
        let domain = self.domain()?;
        let tables = self
            .factors
            .iter()
            .enumerate()
            .map(|(i, f)| self.energy(&domain, f, &format!("factors[{i}]")))
            .collect::<Result<Vec<_>>>()?;

        let mut regions: Vec<Region> = match &self.regions {
            Some(rs) => {
                let mut out: Vec<Region> = Vec::new();
                for (i, r) in rs.iter().enumerate() {
                    let path = format!("regions[{i}]");
                    let r = self.support(&domain, r, &path)?;
                    if out.contains(&r) {
                        return Err(model_err(path, format!("duplicate region {r}")));
                    }
                    out.push(r);
                }
                for (i, t) in tables.iter().enumerate() {
                    if !out.iter().any(|r| t.region().is_subset(r)) {
                        return Err(model_err(format!("factors[{i}].vars"), "not covered by any region"));
                    }
                }
                out
            }
            None => {
                let set: BTreeSet<Region> = tables.iter().map(|t| t.region().clone()).collect();
                set.into_iter().collect()
            }
        };
        let covered = regions.iter().fold(Region::empty(), |acc, r| acc.union(r));
        for v in &self.variables {
            if !covered.contains(v.id) {
                regions.push(Region::from([v.id]));
            }
        }
        let x = Hypergraph::build(&regions, self.options.close, self.options.include_empty)?;
        let complex = Complex::new(x, domain)?;

        let mut potentials = complex.zeros(0)?;
        for t in &tables {
            let a = smallest_cover(&complex, t.region()).expect("supports are covered");
            let ext = t.extend(complex.shape(a))?;
            potentials.get_mut(a).add_assign(&ext)?;
        }

        let boundary = match &self.boundary {
            None => None,
            Some(b) => Some(self.boundary(&complex, &potentials, b)?),
        };
        Ok(Model { complex, potentials, boundary })
    }

    fn boundary(&self, cx: &Complex, h: &Field, spec: &BoundarySpec) -> Result<Boundary> {
        let vars = Region::strict(&spec.vars).map_err(|e| model_err("boundary.vars", e.to_string()))?;
        if let Some(v) = vars.vars().iter().find(|&&v| cx.domain().card(v).is_none()) {
            return Err(model_err("boundary.vars", format!("undeclared variable {v}")));
        }
        let split = cx.hypergraph().boundary_split(&vars).map_err(|e| model_err("boundary.vars", e.to_string()))?;
        let mut values = h.clone();
        for (i, f) in spec.clamp.iter().enumerate() {
            let path = format!("boundary.clamp[{i}]");
            let t = self.energy(cx.domain(), f, &path)?;
            let b =
                cx.hypergraph().index_of(t.region()).filter(|b| split.is_boundary[*b]).ok_or_else(|| {
                    model_err(format!("{path}.vars"), format!("{} is not a boundary member", t.region()))
                })?;
            *values.get_mut(b) = t;
        }
        Ok(Boundary { vars, values })
    }
}

fn smallest_cover(cx: &Complex, s: &Region) -> Option<usize> {
    (0..cx.len()).rev().find(|&a| s.is_subset(cx.region(a)))
}

impl Model {
    pub fn from_json(text: &str) -> Result<Self> {
        ModelSpec::from_json(text)?.build()
    }

    pub fn load(path: &Path) -> Result<Self> {
        parse_model(path)?.build()
    }

    /// Initial potentials and divergence mode for a clamped run.
    pub fn clamped(&self) -> Result<(Field, DivergenceMode)> {
        let b =
            self.boundary.as_ref().ok_or_else(|| Error::Precondition("model declares no boundary to clamp".into()))?;
        let u = clamp_boundary(&self.complex, &self.potentials, &b.vars, &b.values)?;
        Ok((u, DivergenceMode::Interior { boundary: b.vars.clone() }))
    }
}
