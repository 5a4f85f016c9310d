//! Support and occlusion relations between detected objects, and the
//! placement orders they induce.

use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::cmp::Reverse;
use std::fmt::Write as _;

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::physics::convex_hull_2d;
use crate::render::CameraModel;
use crate::sensing::Detection;
use crate::ObjectId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    /// `to` rests on `from`.
    Support,
    /// `from` is in front of `to`.
    Occlusion,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: ObjectId,
    pub to: ObjectId,
    pub kind: EdgeKind,
    /// Centroid height difference (support) or depth difference (occlusion), meters.
    pub margin: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DependencyGraph {
    pub vertices: Vec<ObjectId>,
    pub edges: Vec<Edge>,
    /// Edges deleted to break cycles; non-empty means the two rules disagreed.
    pub removed: Vec<Edge>,
}

impl DependencyGraph {
    pub fn has_conflicts(&self) -> bool {
        !self.removed.is_empty()
    }

    pub fn has_edge(&self, from: ObjectId, to: ObjectId, kind: EdgeKind) -> bool {
        self.edges.iter().any(|e| e.from == from && e.to == to && e.kind == kind)
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph dependency {\n");
        for v in &self.vertices {
            let _ = writeln!(s, "  \"{v}\";");
        }
        for e in &self.edges {
            let _ = writeln!(s, "  \"{}\" -> \"{}\" [label=\"{}\"];", e.from, e.to, kind_name(e.kind));
        }
        for e in &self.removed {
            let _ = writeln!(
                s,
                "  \"{}\" -> \"{}\" [label=\"{} (removed)\", style=dashed, color=red];",
                e.from,
                e.to,
                kind_name(e.kind)
            );
        }
        s.push_str("}\n");
        s
    }
}

fn kind_name(k: EdgeKind) -> &'static str {
    match k {
        EdgeKind::Support => "support",
        EdgeKind::Occlusion => "occlusion",
    }
}

/// Separating-axis test on two convex polygons (also valid for points and segments).
pub(crate) fn hulls_intersect(a: &[Vector2<f64>], b: &[Vector2<f64>]) -> bool {
    if a.is_empty() || b.is_empty() {
        return false;
    }
    let mut axes = Vec::new();
    for poly in [a, b] {
        let n = poly.len();
        for i in 0..n {
            let e = poly[(i + 1) % n] - poly[i];
            if e.norm_squared() > 1e-24 {
                axes.push(Vector2::new(-e.y, e.x));
                if n == 2 {
                    axes.push(e);
                }
            }
        }
    }
    if axes.is_empty() {
        return (a[0] - b[0]).norm() < 1e-12;
    }
    let range = |p: &[Vector2<f64>], ax: &Vector2<f64>| {
        p.iter().map(|q| q.dot(ax)).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)))
    };
    axes.iter().all(|ax| {
        let (alo, ahi) = range(a, ax);
        let (blo, bhi) = range(b, ax);
        alo <= bhi && blo <= ahi
    })
}

fn xy_hull(c: &PointCloud) -> Vec<Vector2<f64>> {
    convex_hull_2d(c.points.iter().map(|p| Vector2::new(p.x, p.y)).collect())
}

/// Edges i→j by the support rule (x-y hulls intersect and Pⱼ is higher) and
/// the occlusion rule (boxes intersect and Pⱼ is deeper), then cycle-breaking.
pub fn build_dependency_graph(
    segments: &BTreeMap<ObjectId, PointCloud>,
    detections: &BTreeMap<ObjectId, Detection>,
    cam: &CameraModel,
) -> Result<DependencyGraph> {
    let vertices: Vec<ObjectId> = segments.keys().copied().collect();
    for v in &vertices {
        if segments[v].is_empty() {
            return Err(Error::DegenerateSegment(format!("empty segment for object {v}")));
        }
        if !detections.contains_key(v) {
            return Err(Error::MissingObject(v.0));
        }
    }
    let to_cam = cam.world_to_camera();
    let hulls: Vec<Vec<Vector2<f64>>> = vertices.iter().map(|v| xy_hull(&segments[v])).collect();
    let centroids: Vec<Vector3<f64>> = vertices.iter().map(|v| segments[v].centroid().expect("non-empty")).collect();
    let depths: Vec<f64> = centroids.iter().map(|c| to_cam.transform_point(c).z).collect();
    let mut edges = Vec::new();
    for i in 0..vertices.len() {
        for j in 0..vertices.len() {
            if i == j {
                continue;
            }
            let dz = centroids[j].z - centroids[i].z;
            if dz > 0.0 && hulls_intersect(&hulls[i], &hulls[j]) {
                edges.push(Edge { from: vertices[i], to: vertices[j], kind: EdgeKind::Support, margin: dz });
            }
            let dd = depths[j] - depths[i];
            if dd > 0.0 && detections[&vertices[i]].bbox.intersects(&detections[&vertices[j]].bbox) {
                edges.push(Edge { from: vertices[i], to: vertices[j], kind: EdgeKind::Occlusion, margin: dd });
            }
        }
    }
    let mut g = DependencyGraph { vertices, edges, removed: vec![] };
    break_cycles(&mut g);
    Ok(g)
}

/// Edge indices along some directed cycle, if one exists.
fn find_cycle(g: &DependencyGraph) -> Option<Vec<usize>> {
    let idx: BTreeMap<ObjectId, usize> = g.vertices.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let n = g.vertices.len();
    let mut out: Vec<Vec<usize>> = vec![vec![]; n];
    for (k, e) in g.edges.iter().enumerate() {
        out[idx[&e.from]].push(k);
    }
    // 0 unvisited, 1 on stack, 2 done
    let mut state = vec![0u8; n];
    let mut via: Vec<Option<usize>> = vec![None; n];
    for start in 0..n {
        if state[start] != 0 {
            continue;
        }
        let mut stack = vec![(start, 0usize)];
        state[start] = 1;
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            if *next < out[v].len() {
                let k = out[v][*next];
                *next += 1;
                let w = idx[&g.edges[k].to];
                match state[w] {
                    0 => {
                        state[w] = 1;
                        via[w] = Some(k);
                        stack.push((w, 0));
                    }
                    1 => {
                        let mut cycle = vec![k];
                        let mut cur = v;
                        while cur != w {
                            let e = via[cur].expect("on-stack vertex has a parent edge");
                            cycle.push(e);
                            cur = idx[&g.edges[e].from];
                        }
                        return Some(cycle);
                    }
                    _ => {}
                }
            } else {
                state[v] = 2;
                stack.pop();
            }
        }
    }
    None
}

/// Deletes the smallest-margin edge of each remaining cycle until none is left.
fn break_cycles(g: &mut DependencyGraph) {
    while let Some(cycle) = find_cycle(g) {
        let k = *cycle
            .iter()
            .min_by(|&&a, &&b| g.edges[a].margin.total_cmp(&g.edges[b].margin).then(a.cmp(&b)))
            .expect("cycle has edges");
        let e = g.edges.remove(k);
        g.removed.push(e);
    }
}

/// Weakly connected components, each topologically sorted with ascending-id
/// tie-break; components are ordered by their smallest id.
pub fn ordered_lists(g: &DependencyGraph) -> Result<Vec<Vec<ObjectId>>> {
    let idx: BTreeMap<ObjectId, usize> = g.vertices.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let n = g.vertices.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut indeg = vec![0usize; n];
    let mut out: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for e in &g.edges {
        let (a, b) = (
            *idx.get(&e.from).ok_or(Error::MissingObject(e.from.0))?,
            *idx.get(&e.to).ok_or(Error::MissingObject(e.to.0))?,
        );
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        parent[ra] = rb;
        if out[a].insert(b) {
            indeg[b] += 1;
        }
    }
    let mut comps: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for v in 0..n {
        let r = find(&mut parent, v);
        comps.entry(r).or_default().push(v);
    }
    let mut lists = Vec::new();
    for members in comps.into_values() {
        let mut ready: BinaryHeap<Reverse<(ObjectId, usize)>> =
            members.iter().filter(|&&v| indeg[v] == 0).map(|&v| Reverse((g.vertices[v], v))).collect();
        let mut order = Vec::with_capacity(members.len());
        while let Some(Reverse((id, v))) = ready.pop() {
            order.push(id);
            for &w in &out[v] {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    ready.push(Reverse((g.vertices[w], w)));
                }
            }
        }
        if order.len() != members.len() {
            return Err(Error::Cycle);
        }
        lists.push(order);
    }
    lists.sort_by_key(|l| l.iter().min().copied());
    Ok(lists)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensing::BBox;
    use proptest::prelude::*;

    fn cam() -> CameraModel {
        CameraModel::look_at(160, 120, 200.0, Vector3::new(0.0, -0.4, 0.5), Vector3::zeros(), Vector3::z()).unwrap()
    }

    fn slab(cx: f64, cy: f64, z: f64, half: f64) -> PointCloud {
        let mut points = vec![];
        for i in 0..5 {
            for j in 0..5 {
                points.push(Vector3::new(cx - half + half * i as f64 / 2.0, cy - half + half * j as f64 / 2.0, z));
            }
        }
        PointCloud { points }
    }

    fn det(id: u32, u: usize, v: usize, w: usize) -> Detection {
        Detection { object_id: ObjectId(id), bbox: BBox { u_min: u, v_min: v, u_max: u + w, v_max: v + w } }
    }

    #[test]
    fn side_by_side_has_no_edges() {
        let segs = BTreeMap::from([(ObjectId(0), slab(-0.1, 0.0, 0.02, 0.03)), (ObjectId(1), slab(0.1, 0.0, 0.03, 0.03))]);
        let dets = BTreeMap::from([(ObjectId(0), det(0, 10, 10, 20)), (ObjectId(1), det(1, 60, 10, 20))]);
        let g = build_dependency_graph(&segs, &dets, &cam()).unwrap();
        assert!(g.edges.is_empty());
        assert_eq!(ordered_lists(&g).unwrap(), vec![vec![ObjectId(0)], vec![ObjectId(1)]]);
    }

    #[test]
    fn stack_gives_support_edge() {
        let segs = BTreeMap::from([(ObjectId(0), slab(0.0, 0.0, 0.1, 0.03)), (ObjectId(1), slab(0.0, 0.0, 0.05, 0.05))]);
        let dets = BTreeMap::from([(ObjectId(0), det(0, 10, 10, 20)), (ObjectId(1), det(1, 60, 10, 20))]);
        let g = build_dependency_graph(&segs, &dets, &cam()).unwrap();
        assert_eq!(g.edges.len(), 1);
        assert!(g.has_edge(ObjectId(1), ObjectId(0), EdgeKind::Support));
        assert!((g.edges[0].margin - 0.05).abs() < 1e-12);
        assert_eq!(ordered_lists(&g).unwrap(), vec![vec![ObjectId(1), ObjectId(0)]]);
        let dot = g.to_dot();
        assert!(dot.contains("\"1\" -> \"0\" [label=\"support\"]"));
    }

    #[test]
    fn conflicting_rules_break_smallest_margin() {
        // 0 sits higher than 1 and overlaps it in x-y, but 0 is also farther from
        // the camera with overlapping boxes: support 1→0 and occlusion 0→1.
        let c = cam();
        let eye = c.center();
        let toward = (Vector3::zeros() - eye).normalize();
        let near = slab(0.0, 0.0, 0.0, 0.02);
        let mut far = slab(0.0, 0.0, 0.0, 0.02);
        let shift = toward * 0.05 + Vector3::new(0.0, 0.0, 0.001);
        for p in &mut far.points {
            *p += shift;
        }
        let segs = BTreeMap::from([(ObjectId(0), far), (ObjectId(1), near)]);
        let dets = BTreeMap::from([(ObjectId(0), det(0, 10, 10, 20)), (ObjectId(1), det(1, 15, 15, 20))]);
        let g = build_dependency_graph(&segs, &dets, &c).unwrap();
        assert!(g.has_conflicts());
        assert_eq!(g.removed.len(), 1);
        assert_eq!(g.removed[0].kind, EdgeKind::Support);
        assert!(g.has_edge(ObjectId(1), ObjectId(0), EdgeKind::Occlusion));
        assert!(g.to_dot().contains("removed"));
        assert_eq!(ordered_lists(&g).unwrap(), vec![vec![ObjectId(1), ObjectId(0)]]);
    }

    fn graph(n: u32, edges: &[(u32, u32)]) -> DependencyGraph {
        DependencyGraph {
            vertices: (0..n).map(ObjectId).collect(),
            edges: edges
                .iter()
                .map(|&(a, b)| Edge { from: ObjectId(a), to: ObjectId(b), kind: EdgeKind::Support, margin: 0.01 })
                .collect(),
            removed: vec![],
        }
    }

    #[test]
    fn list_examples() {
        let ids = |v: &[u32]| v.iter().map(|&i| ObjectId(i)).collect::<Vec<_>>();
        assert_eq!(ordered_lists(&graph(3, &[])).unwrap(), vec![ids(&[0]), ids(&[1]), ids(&[2])]);
        assert_eq!(ordered_lists(&graph(3, &[(0, 1), (1, 2)])).unwrap(), vec![ids(&[0, 1, 2])]);
        assert_eq!(ordered_lists(&graph(3, &[(2, 0)])).unwrap(), vec![ids(&[2, 0]), ids(&[1])]);
        assert!(matches!(ordered_lists(&graph(2, &[(0, 1), (1, 0)])), Err(Error::Cycle)));
    }

    proptest! {
        #[test]
        fn lists_respect_edges_and_partition(n in 1u32..8, raw in proptest::collection::vec((0u32..8, 0u32..8), 0..12)) {
            // forward edges only, so the graph is acyclic
            let edges: Vec<(u32, u32)> = raw.into_iter().filter(|(a, b)| a < b && *b < n).collect();
            let g = graph(n, &edges);
            let lists = ordered_lists(&g).unwrap();
            let all: Vec<ObjectId> = lists.iter().flatten().copied().collect();
            let uniq: BTreeSet<ObjectId> = all.iter().copied().collect();
            prop_assert_eq!(all.len(), n as usize);
            prop_assert_eq!(uniq.len(), n as usize);
            let which = |v: u32| lists.iter().position(|l| l.contains(&ObjectId(v))).unwrap();
            let pos = |v: u32| lists[which(v)].iter().position(|x| *x == ObjectId(v)).unwrap();
            for &(a, b) in &edges {
                prop_assert_eq!(which(a), which(b));
                prop_assert!(pos(a) < pos(b));
            }
            // brute-force undirected reachability
            let mut reach = vec![vec![false; n as usize]; n as usize];
            for (i, row) in reach.iter_mut().enumerate() { row[i] = true; }
            for &(a, b) in &edges { reach[a as usize][b as usize] = true; reach[b as usize][a as usize] = true; }
            for k in 0..n as usize { for i in 0..n as usize { for j in 0..n as usize {
                if reach[i][k] && reach[k][j] { reach[i][j] = true; }
            }}}
            for i in 0..n { for j in 0..n {
                prop_assert_eq!(reach[i as usize][j as usize], which(i) == which(j));
            }}
        }

        #[test]
        fn random_segments_yield_dag_with_valid_predicates(
            boxes in proptest::collection::vec((-0.1f64..0.1, -0.1f64..0.1, 0.0f64..0.1, 0usize..100, 0usize..80), 1..6)
        ) {
            let c = cam();
            let mut segs = BTreeMap::new();
            let mut dets = BTreeMap::new();
            for (i, (x, y, z, u, v)) in boxes.iter().enumerate() {
                segs.insert(ObjectId(i as u32), slab(*x, *y, *z, 0.03));
                dets.insert(ObjectId(i as u32), det(i as u32, *u, *v, 30));
            }
            let g = build_dependency_graph(&segs, &dets, &c).unwrap();
            prop_assert!(ordered_lists(&g).is_ok());
            let to_cam = c.world_to_camera();
            for e in &g.edges {
                let (a, b) = (&segs[&e.from], &segs[&e.to]);
                match e.kind {
                    EdgeKind::Support => {
                        prop_assert!(b.centroid().unwrap().z > a.centroid().unwrap().z);
                        prop_assert!(hulls_intersect(&xy_hull(a), &xy_hull(b)));
                    }
                    EdgeKind::Occlusion => {
                        prop_assert!(to_cam.transform_point(&b.centroid().unwrap()).z > to_cam.transform_point(&a.centroid().unwrap()).z);
                        prop_assert!(dets[&e.from].bbox.intersects(&dets[&e.to].bbox));
                    }
                }
            }
        }
    }
}
