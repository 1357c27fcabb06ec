//! Boundary-condition scenarios and the data functions that drive them.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{PoroError, Result};
use crate::mesh::{Mesh, Point};

pub type ScalarFn = Arc<dyn Fn(&Point, f64) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&Point, f64) -> Point + Send + Sync>;
/// Boundary data that also sees the unit outward normal.
pub type NormalScalarFn = Arc<dyn Fn(&Point, f64, &Point) -> f64 + Send + Sync>;
pub type NormalVectorFn = Arc<dyn Fn(&Point, f64, &Point) -> Point + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DisplacementBc {
    Dirichlet,
    Traction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PressureBc {
    Dirichlet,
    Flux,
}

/// Right-hand sides and boundary data as functions of `(x, t)`.
#[derive(Clone, Default)]
pub struct ProblemData {
    pub body_force: Option<VectorFn>,
    pub source: Option<ScalarFn>,
    pub displacement: Option<VectorFn>,
    pub traction: Option<NormalVectorFn>,
    pub pressure: Option<ScalarFn>,
    pub flux: Option<NormalScalarFn>,
}

impl ProblemData {
    /// All data identically zero.
    pub fn zero() -> Self {
        ProblemData {
            body_force: Some(Arc::new(|_, _| [0.0; 3])),
            source: Some(Arc::new(|_, _| 0.0)),
            displacement: Some(Arc::new(|_, _| [0.0; 3])),
            traction: Some(Arc::new(|_, _, _| [0.0; 3])),
            pressure: Some(Arc::new(|_, _| 0.0)),
            flux: Some(Arc::new(|_, _, _| 0.0)),
        }
    }
}

impl fmt::Debug for ProblemData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemData")
            .field("body_force", &self.body_force.is_some())
            .field("source", &self.source.is_some())
            .field("displacement", &self.displacement.is_some())
            .field("traction", &self.traction.is_some())
            .field("pressure", &self.pressure.is_some())
            .field("flux", &self.flux.is_some())
            .finish()
    }
}

/// Boundary-tag → condition maps for both fields plus the data functions.
#[derive(Debug, Clone)]
pub struct ScenarioSpec {
    pub name: String,
    pub displacement: BTreeMap<String, DisplacementBc>,
    pub pressure: BTreeMap<String, PressureBc>,
    pub data: ProblemData,
}

impl ScenarioSpec {
    /// Same condition on every listed tag.
    pub fn uniform(name: &str, tags: &[&str], u: DisplacementBc, p: PressureBc, data: ProblemData) -> Self {
        ScenarioSpec {
            name: name.to_string(),
            displacement: tags.iter().map(|t| (t.to_string(), u)).collect(),
            pressure: tags.iter().map(|t| (t.to_string(), p)).collect(),
            data,
        }
    }

    /// Pure Dirichlet for both fields on every box face of a `dim`-box.
    pub fn pure_dirichlet(dim: usize, data: ProblemData) -> Self {
        let tags = &crate::mesh::BOX_FACE_TAGS[..2 * dim];
        Self::uniform("I", tags, DisplacementBc::Dirichlet, PressureBc::Dirichlet, data)
    }

    /// Dirichlet everywhere except the `right` face (x = max), which carries
    /// traction and flux conditions.
    pub fn mixed_right_neumann(dim: usize, data: ProblemData) -> Self {
        let mut s = Self::pure_dirichlet(dim, data);
        s.name = "II".into();
        s.displacement.insert("right".into(), DisplacementBc::Traction);
        s.pressure.insert("right".into(), PressureBc::Flux);
        s
    }

    pub fn displacement_bc(&self, tag: &str) -> Result<DisplacementBc> {
        self.displacement
            .get(tag)
            .copied()
            .ok_or_else(|| PoroError::Config(format!("no displacement condition for boundary tag '{tag}'")))
    }

    pub fn pressure_bc(&self, tag: &str) -> Result<PressureBc> {
        self.pressure
            .get(tag)
            .copied()
            .ok_or_else(|| PoroError::Config(format!("no pressure condition for boundary tag '{tag}'")))
    }

    /// True when no boundary facet of `mesh` carries a traction condition.
    pub fn is_pure_dirichlet(&self, mesh: &Mesh) -> Result<bool> {
        for tag in mesh.boundary_tags().values() {
            if self.displacement_bc(tag)? == DisplacementBc::Traction {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Every boundary facet must be tagged and every tag must have both conditions.
    pub fn validate(&self, mesh: &Mesh) -> Result<()> {
        for f in mesh.boundary_facets() {
            let tag = mesh
                .boundary_tag(f)
                .ok_or_else(|| PoroError::Config(format!("boundary facet {f} has no tag")))?;
            self.displacement_bc(tag)?;
            self.pressure_bc(tag)?;
        }
        let used = |want: &dyn Fn(&str) -> bool| mesh.boundary_tags().values().any(|t| want(t));
        let d = &self.data;
        let need = [
            ("displacement", used(&|t| self.displacement[t] == DisplacementBc::Dirichlet), d.displacement.is_some()),
            ("traction", used(&|t| self.displacement[t] == DisplacementBc::Traction), d.traction.is_some()),
            ("pressure", used(&|t| self.pressure[t] == PressureBc::Dirichlet), d.pressure.is_some()),
            ("flux", used(&|t| self.pressure[t] == PressureBc::Flux), d.flux.is_some()),
            ("body_force", true, d.body_force.is_some()),
            ("source", true, d.source.is_some()),
        ];
        for (name, needed, present) in need {
            if needed && !present {
                return Err(PoroError::Config(format!("scenario '{}' is missing the {name} data function", self.name)));
            }
        }
        Ok(())
    }
}
