//! JSON problem files and their translation into fields and charts.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::covering::{nonlocal_symmetry_field, CoveringSystem};
use crate::error::{Error, Result};
use crate::jet::{Chart, DifferentialForm, OdeProblem, VectorField};
use crate::symbolic::{parse, Expr, Symbol};
use crate::symmetry::{evolutive_field, prolong_components};

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default)]
    pub name: Option<String>,
    pub ode: OdeBlock,
    #[serde(default)]
    pub covering: Option<CoveringBlock>,
    #[serde(default)]
    pub symmetries: Vec<SymmetryEntry>,
    /// Named subsets whose commutator tables are computed.
    #[serde(default)]
    pub algebras: Vec<Vec<String>>,
    #[serde(default)]
    pub structure: Vec<FieldRef>,
    #[serde(default)]
    pub fixtures: Fixtures,
    #[serde(default)]
    pub oracle: Option<OracleBlock>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdeBlock {
    pub order: usize,
    pub f: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoveringBlock {
    #[serde(rename = "H")]
    pub h: String,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymmetryEntry {
    pub name: String,
    #[serde(default)]
    pub xi: Option<String>,
    #[serde(default)]
    pub eta: Option<String>,
    #[serde(default)]
    pub phi: Option<String>,
    #[serde(default)]
    pub phi1: Option<String>,
    #[serde(default)]
    pub phi2: Option<String>,
    /// Explicit components by coordinate name.
    #[serde(default)]
    pub field: Option<BTreeMap<String, String>>,
    #[serde(default = "yes")]
    pub expect_symmetry: bool,
    /// Structure member only; checked through `candidates`, not as a symmetry of `Z`.
    #[serde(default)]
    pub auxiliary: bool,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldRef {
    Name(String),
    Components(BTreeMap<String, String>),
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fixtures {
    /// Expected `Δ`, up to sign.
    #[serde(default)]
    pub delta: Option<String>,
    /// `i → coordinate → coefficient` of `ωᵢ`.
    #[serde(default)]
    pub omegas: BTreeMap<usize, BTreeMap<String, String>>,
    /// Printed first integrals; lower ones may use `c{j}` of the higher ones.
    #[serde(default)]
    pub integrals: BTreeMap<usize, String>,
    /// Indices `i` with `dωᵢ = 0` on the full chart.
    #[serde(default)]
    pub closed: Option<Vec<usize>>,
    /// Expected explicit solutions (one per branch).
    #[serde(default)]
    pub solutions: Vec<String>,
    #[serde(default)]
    pub solution_constants: Vec<String>,
    #[serde(default)]
    pub candidates: Vec<Candidate>,
    #[serde(default)]
    pub rejected_orders: Vec<RejectedOrder>,
    /// Reorderings that must also be solvable structures.
    #[serde(default)]
    pub accepted_orders: Vec<Vec<FieldRef>>,
    #[serde(default)]
    pub partial: Option<PartialFixture>,
}

/// A field checked against the determining equations of `chain`
/// (the flow field is prepended).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Candidate {
    pub chain: Vec<FieldRef>,
    pub field: FieldRef,
    #[serde(default = "yes")]
    pub expect_pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RejectedOrder {
    pub order: Vec<FieldRef>,
    pub rejected_at: usize,
    /// Indices `i` with `dωᵢ = 0` in this order.
    #[serde(default)]
    pub closed: Option<Vec<usize>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialFixture {
    pub symmetry: FieldRef,
    pub frame: Vec<FieldRef>,
    /// Invariant name → expression, in order.
    pub invariants: Vec<(String, String)>,
    /// Target 1-form in the invariants, by invariant name.
    pub target: BTreeMap<String, String>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleBlock {
    #[serde(default)]
    pub inits: Vec<BTreeMap<String, f64>>,
    #[serde(default = "default_span")]
    pub span: f64,
    #[serde(default = "default_step")]
    pub step: f64,
    /// Interval for solution residuals.
    #[serde(default)]
    pub solution_range: Option<(f64, f64)>,
    /// Constant values for the produced explicit solution.
    #[serde(default)]
    pub solution_constants: Vec<BTreeMap<String, f64>>,
    /// Constant values for the fixture solutions.
    #[serde(default)]
    pub fixture_constants: Vec<BTreeMap<String, f64>>,
    /// Where produced and fixture solutions are matched.
    #[serde(default)]
    pub match_point: Option<f64>,
    #[serde(default)]
    pub base_point: Option<f64>,
}

fn default_span() -> f64 {
    0.5
}

fn default_step() -> f64 {
    0.05
}

/// A problem file with every expression parsed.
#[derive(Clone, Debug)]
pub struct Problem {
    pub file: ProblemFile,
    pub ode: OdeProblem,
    pub covering: Option<CoveringSystem>,
    pub chart: Chart,
    /// `D̄ₓ` or `D̃ₓ`.
    pub z: VectorField,
    pub fields: Vec<(String, VectorField)>,
}

pub fn expr(s: &str) -> Result<Expr> {
    parse(s)
}

impl Problem {
    pub fn load(path: &Path) -> Result<Problem> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {}", path.display(), e)))?;
        Problem::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Problem> {
        let file: ProblemFile = serde_json::from_str(text).map_err(|e| Error::Input(format!("problem file: {}", e)))?;
        Problem::new(file)
    }

    pub fn new(file: ProblemFile) -> Result<Problem> {
        let ode = OdeProblem::new(file.ode.order, expr(&file.ode.f)?)?;
        let covering = match &file.covering {
            Some(c) => Some(CoveringSystem::new(ode.clone(), expr(&c.h)?)?),
            None => None,
        };
        let (chart, z) = match &covering {
            Some(c) => (c.chart.clone(), c.total_derivative_field()),
            None => (ode.chart.clone(), ode.total_derivative_field()),
        };
        let mut p = Problem { file: file.clone(), ode, covering, chart, z, fields: Vec::new() };
        for s in &file.symmetries {
            if p.fields.iter().any(|(n, _)| n == &s.name) {
                return Err(Error::Input(format!("duplicate symmetry name {}", s.name)));
            }
            let f = p.build_symmetry(s)?;
            p.fields.push((s.name.clone(), f));
        }
        for r in &file.structure {
            p.field_ref(r)?;
        }
        for (i, _) in file.fixtures.omegas.iter() {
            if *i == 0 || *i >= p.chart.dim() {
                return Err(Error::Input(format!("fixture ω{} out of range", i)));
            }
        }
        Ok(p)
    }

    fn build_symmetry(&self, s: &SymmetryEntry) -> Result<VectorField> {
        let opt = |o: &Option<String>| o.as_deref().map(expr).transpose();
        let (xi, eta, phi, phi1, phi2) = (opt(&s.xi)?, opt(&s.eta)?, opt(&s.phi)?, opt(&s.phi1)?, opt(&s.phi2)?);
        let local = |f: VectorField| f.on_chart(&self.chart);
        match (&s.field, xi, eta, phi, phi1, phi2) {
            (Some(m), None, None, None, None, None) => self.components(m),
            (None, xi, Some(eta), None, None, None) => local(prolong_components(&xi.unwrap_or_else(Expr::zero), &eta, &self.ode)),
            (None, None, None, Some(phi), None, None) => local(evolutive_field(&phi, &self.ode)),
            (None, None, None, None, Some(p1), p2) => {
                let cov = self.covering.as_ref().ok_or_else(|| Error::Input(format!("{}: phi1 needs a covering", s.name)))?;
                Ok(nonlocal_symmetry_field(&p1, &p2.unwrap_or_else(Expr::zero), cov).field)
            }
            _ => Err(Error::Input(format!("{}: give exactly one of field, xi/eta, phi, phi1/phi2", s.name))),
        }
    }

    pub fn components(&self, m: &BTreeMap<String, String>) -> Result<VectorField> {
        let mut map = BTreeMap::new();
        for (k, v) in m {
            let s = Symbol::new(k);
            if self.chart.index(&s).is_none() {
                return Err(Error::Input(format!("{} is not a chart coordinate", k)));
            }
            let e = expr(v)?;
            if let Some(bad) = e.free_symbols().iter().find(|s| self.chart.index(s).is_none()) {
                return Err(Error::Input(format!("component {} uses {} outside the chart", k, bad)));
            }
            map.insert(s, e);
        }
        VectorField::from_map(&self.chart, &map)
    }

    pub fn field(&self, name: &str) -> Result<&VectorField> {
        self.fields.iter().find(|(n, _)| n == name).map(|(_, f)| f).ok_or_else(|| Error::Input(format!("unknown field {}", name)))
    }

    pub fn field_ref(&self, r: &FieldRef) -> Result<VectorField> {
        match r {
            FieldRef::Name(n) => self.field(n).cloned(),
            FieldRef::Components(m) => self.components(m),
        }
    }

    pub fn fields_of(&self, rs: &[FieldRef]) -> Result<Vec<VectorField>> {
        rs.iter().map(|r| self.field_ref(r)).collect()
    }

    pub fn structure(&self) -> Result<Vec<VectorField>> {
        self.fields_of(&self.file.structure)
    }

    pub fn volume(&self) -> DifferentialForm {
        DifferentialForm::volume(&self.chart)
    }

    pub fn name(&self) -> String {
        self.file.name.clone().unwrap_or_else(|| "problem".into())
    }
}

pub fn ref_name(r: &FieldRef) -> String {
    match r {
        FieldRef::Name(n) => n.clone(),
        FieldRef::Components(m) => {
            let parts: Vec<String> = m.iter().map(|(k, v)| format!("({})∂_{}", v, k)).collect();
            parts.join(" + ")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_file() {
        let p = Problem::from_json(r#"{"ode": {"order": 1, "f": "u"}, "symmetries": [{"name": "S", "phi": "u"}], "structure": ["S"]}"#).unwrap();
        assert_eq!(p.structure().unwrap().len(), 1);
        assert_eq!(p.name(), "problem");
    }

    #[test]
    fn rejects_unknown_coordinates() {
        let e = Problem::from_json(r#"{"ode": {"order": 1, "f": "u"}, "structure": [{"v": "1"}]}"#).unwrap_err();
        assert!(matches!(e, Error::Input(_)));
        assert!(Problem::from_json(r#"{"ode": {"order": 1, "f": "u2"}}"#).is_err());
        assert!(Problem::from_json(r#"{"ode": {"order": 1, "f": "u"}, "symmetries": [{"name": "S", "phi1": "u"}]}"#).is_err());
    }
}
