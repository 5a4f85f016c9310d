//! Object models and scene ground truth.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{MeshBvh, Pose, SymmetryGroup, TriMesh};
use crate::physics::ConvexProxy;
use crate::render::CameraModel;
use crate::ObjectId;

/// A mesh with its symmetry group and the query structures built from it.
#[derive(Clone, Debug)]
pub struct ObjectModel {
    pub name: String,
    pub mesh: Arc<TriMesh>,
    pub symmetry: SymmetryGroup,
    pub bvh: Arc<MeshBvh>,
    pub hull: Arc<ConvexProxy>,
}

impl ObjectModel {
    pub fn new(name: impl Into<String>, mesh: TriMesh, symmetry: SymmetryGroup) -> Self {
        let bvh = Arc::new(MeshBvh::new(&mesh));
        let hull = Arc::new(ConvexProxy::new(&mesh));
        Self { name: name.into(), mesh: Arc::new(mesh), symmetry, bvh, hull }
    }
}

pub type ModelLibrary = BTreeMap<String, ObjectModel>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub id: ObjectId,
    /// Key into the model library.
    pub model: String,
    pub pose: Pose,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneGroundTruth {
    pub objects: Vec<SceneObject>,
    pub camera: CameraModel,
    pub table_height: f64,
}

impl SceneGroundTruth {
    pub fn model<'a>(&self, lib: &'a ModelLibrary, id: ObjectId) -> Result<&'a ObjectModel> {
        let obj = self.objects.iter().find(|o| o.id == id).ok_or(Error::MissingObject(id.0))?;
        lib.get(&obj.model).ok_or(Error::MissingObject(id.0))
    }

    pub fn pose(&self, id: ObjectId) -> Option<Pose> {
        self.objects.iter().find(|o| o.id == id).map(|o| o.pose)
    }

    /// `(mesh, pose)` for every object, in listing order.
    pub fn posed_meshes(&self, lib: &ModelLibrary) -> Result<Vec<(Arc<TriMesh>, Pose)>> {
        self.objects
            .iter()
            .map(|o| {
                lib.get(&o.model)
                    .map(|m| (m.mesh.clone(), o.pose))
                    .ok_or(Error::MissingObject(o.id.0))
            })
            .collect()
    }
}
