use std::f64::consts::PI;

use nalgebra::{Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const CLOSURE_TOL: f64 = 1e-6;

/// Finite group of model-frame rotations that leave an object's shape unchanged.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetryGroup {
    rotations: Vec<UnitQuaternion<f64>>,
    /// Set for cyclic and dihedral groups, whose nearest element has a closed form.
    axial: Option<Axial>,
}

/// Groups up to this size are scanned; larger axial groups use the closed form.
const AXIAL_SCAN_LIMIT: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq)]
struct Axial {
    axis: Vector3<f64>,
    order: usize,
    /// Half-turn axis of a dihedral group.
    flip: Option<Vector3<f64>>,
}

/// Declarative form of a symmetry group as it appears in scene and model files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SymmetrySpec {
    None,
    /// `order` rotations about `axis`.
    Cyclic { axis: [f64; 3], order: usize },
    /// `order` rotations about `axis` plus half-turns about perpendicular axes,
    /// one of which is +x projected off `axis`.
    Dihedral { axis: [f64; 3], order: usize },
    /// Rotation group of a cube (24 elements).
    Cube,
    /// Explicit list of `[w, x, y, z]` quaternions.
    Explicit { rotations: Vec<[f64; 4]> },
}

impl Axial {
    /// ⟨r, s_k⟩ = A·cos(πk/n − φ) over the cyclic part, and likewise for the
    /// half-turns s_k·f, so the best k is the multiple of π/n nearest φ.
    fn nearest_index(&self, r: &UnitQuaternion<f64>, rotations: &[UnitQuaternion<f64>]) -> usize {
        let n = self.order as i64;
        let v = r.imag();
        let slot = |c: f64, s: f64| ((s.atan2(c) * n as f64 / PI).round() as i64).rem_euclid(n) as usize;
        let dot = |i: usize| r.coords.dot(&rotations[i].coords).abs();
        let k = slot(r.w, v.dot(&self.axis));
        match self.flip {
            Some(b) => {
                let kf = self.order + slot(v.dot(&b), v.dot(&self.axis.cross(&b)));
                if dot(kf) > dot(k) { kf } else { k }
            }
            None => k,
        }
    }
}

fn same_rotation(a: &UnitQuaternion<f64>, b: &UnitQuaternion<f64>, tol: f64) -> bool {
    1.0 - a.coords.dot(&b.coords).abs() < tol * tol
}

/// Half-turn axis of a dihedral group: +x projected off `axis`, or +y when
/// `axis` is close to x. Matches prisms whose first vertex lies on +x.
fn flip_axis(axis: &Vector3<f64>) -> Vector3<f64> {
    let a = axis.normalize();
    let helper = if a.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    (helper - a * a.dot(&helper)).normalize()
}

impl SymmetryGroup {
    pub fn trivial() -> Self {
        Self { rotations: vec![UnitQuaternion::identity()], axial: None }
    }

    pub fn cyclic(axis: Vector3<f64>, order: usize) -> Self {
        let axis = Unit::new_normalize(axis);
        let order = order.max(1);
        let rotations = (0..order)
            .map(|k| UnitQuaternion::from_axis_angle(&axis, 2.0 * PI * k as f64 / order as f64))
            .collect();
        Self { rotations, axial: Some(Axial { axis: axis.into_inner(), order, flip: None }) }
    }

    pub fn dihedral(axis: Vector3<f64>, order: usize) -> Self {
        let cyc = Self::cyclic(axis, order);
        let b = flip_axis(&axis);
        let flip = UnitQuaternion::from_axis_angle(&Unit::new_normalize(b), PI);
        let mut rotations = cyc.rotations.clone();
        rotations.extend(cyc.rotations.iter().map(|r| r * flip));
        let axial = cyc.axial.map(|a| Axial { flip: Some(b), ..a });
        Self { rotations, axial }
    }

    pub fn cube() -> Self {
        let gens = [
            UnitQuaternion::from_axis_angle(&Vector3::z_axis(), PI / 2.0),
            UnitQuaternion::from_axis_angle(&Vector3::x_axis(), PI / 2.0),
        ];
        Self::generated_by(&gens, 64).expect("cube group is finite")
    }

    /// Closure of `generators` under composition, failing if it exceeds `limit` elements.
    pub fn generated_by(generators: &[UnitQuaternion<f64>], limit: usize) -> Result<Self> {
        let mut rotations = vec![UnitQuaternion::identity()];
        let mut frontier = rotations.clone();
        while let Some(r) = frontier.pop() {
            for g in generators {
                let mut c = r * g;
                c.renormalize();
                if !rotations.iter().any(|e| same_rotation(e, &c, CLOSURE_TOL)) {
                    if rotations.len() >= limit {
                        return Err(Error::InvalidSymmetry("generated group exceeds element limit".into()));
                    }
                    rotations.push(c);
                    frontier.push(c);
                }
            }
        }
        Ok(Self { rotations, axial: None })
    }

    /// Validates identity membership and closure.
    pub fn from_rotations(rotations: Vec<UnitQuaternion<f64>>) -> Result<Self> {
        let group = Self { rotations, axial: None };
        if !group.rotations.iter().any(|r| same_rotation(r, &UnitQuaternion::identity(), CLOSURE_TOL)) {
            return Err(Error::InvalidSymmetry("group does not contain the identity".into()));
        }
        if !group.is_closed(CLOSURE_TOL) {
            return Err(Error::InvalidSymmetry("group is not closed under composition".into()));
        }
        Ok(group)
    }

    pub fn from_spec(spec: &SymmetrySpec) -> Result<Self> {
        match spec {
            SymmetrySpec::None => Ok(Self::trivial()),
            SymmetrySpec::Cyclic { axis, order } => Ok(Self::cyclic(Vector3::from(*axis), *order)),
            SymmetrySpec::Dihedral { axis, order } => Ok(Self::dihedral(Vector3::from(*axis), *order)),
            SymmetrySpec::Cube => Ok(Self::cube()),
            SymmetrySpec::Explicit { rotations } => Self::from_rotations(
                rotations
                    .iter()
                    .map(|[w, x, y, z]| UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(*w, *x, *y, *z)))
                    .collect(),
            ),
        }
    }

    pub fn is_closed(&self, tol: f64) -> bool {
        self.rotations.iter().all(|a| {
            self.rotations.iter().all(|b| {
                let c = a * b;
                self.rotations.iter().any(|e| same_rotation(e, &c, tol))
            })
        })
    }

    pub fn rotations(&self) -> &[UnitQuaternion<f64>] {
        &self.rotations
    }

    /// Element `s` maximizing `|⟨r, s⟩|`, i.e. the one nearest to `r` in angle.
    pub fn nearest(&self, r: &UnitQuaternion<f64>) -> &UnitQuaternion<f64> {
        match self.axial {
            Some(ax) if self.rotations.len() > AXIAL_SCAN_LIMIT => &self.rotations[ax.nearest_index(r, &self.rotations)],
            _ => {
                let mut best = (0, f64::NEG_INFINITY);
                for (i, s) in self.rotations.iter().enumerate() {
                    let d = r.coords.dot(&s.coords).abs();
                    if d > best.1 {
                        best = (i, d);
                    }
                }
                &self.rotations[best.0]
            }
        }
    }

    pub fn len(&self) -> usize {
        self.rotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rotations.is_empty()
    }
}

impl Default for SymmetryGroup {
    fn default() -> Self {
        Self::trivial()
    }
}
