//! Parametric primitive models with their declared symmetry groups.

use anyhow::{Context, Result};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use scenepose::geometry::{SymmetryGroup, SymmetrySpec, TriMesh};
use scenepose::scene::{ModelLibrary, ObjectModel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    /// Axis-aligned box centered at the origin, meters.
    Cuboid { size: [f64; 3] },
    /// Regular prism along z with one vertex on +x; many sides approximate a cylinder.
    Prism { sides: usize, radius: f64, height: f64 },
}

impl Shape {
    pub fn mesh(&self) -> Result<TriMesh> {
        Ok(match *self {
            Shape::Cuboid { size } => TriMesh::cuboid(size[0], size[1], size[2])?,
            Shape::Prism { sides, radius, height } => TriMesh::regular_prism(sides, radius, height)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrimitiveSpec {
    pub name: String,
    pub shape: Shape,
    pub symmetry: SymmetrySpec,
}

impl PrimitiveSpec {
    pub fn build(&self) -> Result<ObjectModel> {
        let mesh = self.shape.mesh().with_context(|| format!("model {}", self.name))?;
        let sym = SymmetryGroup::from_spec(&self.symmetry).with_context(|| format!("symmetry of {}", self.name))?;
        Ok(ObjectModel::new(self.name.clone(), mesh, sym))
    }
}

fn dihedral(order: usize) -> SymmetrySpec {
    SymmetrySpec::Dihedral { axis: [0.0, 0.0, 1.0], order }
}

/// The six test objects.
pub fn default_primitives() -> Vec<PrimitiveSpec> {
    let p = |name: &str, shape, symmetry| PrimitiveSpec { name: name.into(), shape, symmetry };
    vec![
        p("box", Shape::Cuboid { size: [0.08, 0.05, 0.04] }, dihedral(2)),
        p("square_prism", Shape::Cuboid { size: [0.05, 0.05, 0.09] }, dihedral(4)),
        p("cube", Shape::Cuboid { size: [0.05, 0.05, 0.05] }, SymmetrySpec::Cube),
        // 72 sides: the continuous symmetry discretized at 5 degrees
        p("cylinder", Shape::Prism { sides: 72, radius: 0.03, height: 0.07 }, dihedral(72)),
        p("hex_prism", Shape::Prism { sides: 6, radius: 0.035, height: 0.05 }, dihedral(6)),
        p("tri_prism", Shape::Prism { sides: 3, radius: 0.04, height: 0.04 }, dihedral(3)),
    ]
}

pub fn build_library(specs: &[PrimitiveSpec]) -> Result<ModelLibrary> {
    let mut lib = ModelLibrary::new();
    for s in specs {
        anyhow::ensure!(!lib.contains_key(&s.name), "duplicate model name {}", s.name);
        lib.insert(s.name.clone(), s.build()?);
    }
    Ok(lib)
}

/// Half-extent along z of the model's bounding box.
pub fn half_height(model: &ObjectModel) -> f64 {
    let (lo, hi) = model.mesh.bounds();
    (hi.z - lo.z) / 2.0
}

/// Radius of the model's footprint in the xy plane.
pub fn footprint_radius(model: &ObjectModel) -> f64 {
    model.mesh.vertices().iter().map(|v| Vector3::new(v.x, v.y, 0.0).norm()).fold(0.0, f64::max)
}
