//! Uniform-grid spatial hash for fixed-radius and nearest-neighbor queries.

use nalgebra::Vector3;

const MAX_CELLS: usize = 1 << 22;

/// Immutable grid over a point set, cells stored in CSR layout.
#[derive(Clone, Debug)]
pub struct GridIndex {
    cell: f64,
    origin: Vector3<f64>,
    dims: [usize; 3],
    starts: Vec<u32>,
    items: Vec<u32>,
    points: Vec<Vector3<f64>>,
}

impl GridIndex {
    /// Builds the grid with the requested cell size, enlarged if the grid would be huge.
    pub fn new(points: &[Vector3<f64>], cell: f64) -> Self {
        let mut cell = cell.max(1e-6);
        let (lo, hi) = points.iter().fold(
            (Vector3::repeat(f64::INFINITY), Vector3::repeat(f64::NEG_INFINITY)),
            |(lo, hi), p| (lo.inf(p), hi.sup(p)),
        );
        let origin = if points.is_empty() { Vector3::zeros() } else { lo };
        let extent = if points.is_empty() { Vector3::zeros() } else { hi - lo };
        let mut dims;
        loop {
            dims = [0, 1, 2].map(|k| (extent[k] / cell).floor() as usize + 1);
            if dims[0].saturating_mul(dims[1]).saturating_mul(dims[2]) <= MAX_CELLS {
                break;
            }
            cell *= 2.0;
        }
        let ncells = dims[0] * dims[1] * dims[2];
        let mut counts = vec![0u32; ncells + 1];
        let flat: Vec<usize> = points
            .iter()
            .map(|p| {
                let c = [0, 1, 2].map(|k| (((p[k] - origin[k]) / cell).floor() as usize).min(dims[k] - 1));
                (c[2] * dims[1] + c[1]) * dims[0] + c[0]
            })
            .collect();
        for &f in &flat {
            counts[f + 1] += 1;
        }
        for i in 0..ncells {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut items = vec![0u32; points.len()];
        for (i, &f) in flat.iter().enumerate() {
            items[fill[f] as usize] = i as u32;
            fill[f] += 1;
        }
        Self { cell, origin, dims, starts: counts, items, points: points.to_vec() }
    }

    pub fn points(&self) -> &[Vector3<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    fn cell_coord(&self, p: &Vector3<f64>) -> [i64; 3] {
        [0, 1, 2].map(|k| ((p[k] - self.origin[k]) / self.cell).floor() as i64)
    }

    #[inline]
    fn cell_items(&self, c: [i64; 3]) -> &[u32] {
        let f = (c[2] as usize * self.dims[1] + c[1] as usize) * self.dims[0] + c[0] as usize;
        &self.items[self.starts[f] as usize..self.starts[f + 1] as usize]
    }

    fn clamp_range(&self, lo: [i64; 3], hi: [i64; 3]) -> Option<([i64; 3], [i64; 3])> {
        let lo = [0, 1, 2].map(|k| lo[k].max(0));
        let hi = [0, 1, 2].map(|k| hi[k].min(self.dims[k] as i64 - 1));
        (0..3).all(|k| lo[k] <= hi[k]).then_some((lo, hi))
    }

    /// Nearest point within `radius`, as `(index, squared distance)`.
    pub fn nearest_within(&self, p: &Vector3<f64>, radius: f64) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let lo = self.cell_coord(&(p - Vector3::repeat(radius)));
        let hi = self.cell_coord(&(p + Vector3::repeat(radius)));
        let (lo, hi) = self.clamp_range(lo, hi)?;
        let mut best: Option<(usize, f64)> = None;
        let r2 = radius * radius;
        for z in lo[2]..=hi[2] {
            for y in lo[1]..=hi[1] {
                for x in lo[0]..=hi[0] {
                    for &i in self.cell_items([x, y, z]) {
                        let d2 = (self.points[i as usize] - p).norm_squared();
                        if d2 <= r2 && best.is_none_or(|(_, b)| d2 < b) {
                            best = Some((i as usize, d2));
                        }
                    }
                }
            }
        }
        best
    }

    /// Whether any point lies within `radius` of `p`.
    pub fn any_within(&self, p: &Vector3<f64>, radius: f64) -> bool {
        if self.points.is_empty() {
            return false;
        }
        let lo = self.cell_coord(&(p - Vector3::repeat(radius)));
        let hi = self.cell_coord(&(p + Vector3::repeat(radius)));
        let Some((lo, hi)) = self.clamp_range(lo, hi) else { return false };
        let r2 = radius * radius;
        for z in lo[2]..=hi[2] {
            for y in lo[1]..=hi[1] {
                for x in lo[0]..=hi[0] {
                    if self.cell_items([x, y, z]).iter().any(|&i| (self.points[i as usize] - p).norm_squared() <= r2) {
                        return true;
                    }
                }
            }
        }
        false
    }

    /// Calls `f(index)` for every point within `radius` of `p`.
    pub fn for_each_within(&self, p: &Vector3<f64>, radius: f64, mut f: impl FnMut(usize)) {
        if self.points.is_empty() {
            return;
        }
        let lo = self.cell_coord(&(p - Vector3::repeat(radius)));
        let hi = self.cell_coord(&(p + Vector3::repeat(radius)));
        let Some((lo, hi)) = self.clamp_range(lo, hi) else { return };
        let r2 = radius * radius;
        for z in lo[2]..=hi[2] {
            for y in lo[1]..=hi[1] {
                for x in lo[0]..=hi[0] {
                    for &i in self.cell_items([x, y, z]) {
                        if (self.points[i as usize] - p).norm_squared() <= r2 {
                            f(i as usize);
                        }
                    }
                }
            }
        }
    }

    /// Exact nearest neighbor by expanding shells of cells.
    pub fn nearest(&self, p: &Vector3<f64>) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let c = self.cell_coord(p);
        let dims = self.dims.map(|d| d as i64);
        // Chebyshev distance from the query cell to the grid, in cells
        let outside = (0..3).map(|k| (-c[k]).max(c[k] - (dims[k] - 1)).max(0)).max().unwrap_or(0);
        let max_ring = (0..3).map(|k| (c[k]).abs().max((c[k] - (dims[k] - 1)).abs())).max().unwrap_or(0);
        let mut best: Option<(usize, f64)> = None;
        let mut ring = outside;
        while ring <= max_ring {
            let lo = [c[0] - ring, c[1] - ring, c[2] - ring];
            let hi = [c[0] + ring, c[1] + ring, c[2] + ring];
            if let Some((clo, chi)) = self.clamp_range(lo, hi) {
                for z in clo[2]..=chi[2] {
                    for y in clo[1]..=chi[1] {
                        let on_yz_shell = z == lo[2] || z == hi[2] || y == lo[1] || y == hi[1];
                        let xs: Box<dyn Iterator<Item = i64>> = if on_yz_shell {
                            Box::new(clo[0]..=chi[0])
                        } else {
                            Box::new([lo[0], hi[0]].into_iter().filter(move |x| *x >= clo[0] && *x <= chi[0]))
                        };
                        for x in xs {
                            for &i in self.cell_items([x, y, z]) {
                                let d2 = (self.points[i as usize] - p).norm_squared();
                                if best.is_none_or(|(_, b)| d2 < b) {
                                    best = Some((i as usize, d2));
                                }
                            }
                        }
                    }
                }
            }
            if let Some((_, b)) = best {
                // any cell on a later ring is at least `ring * cell` away
                let reach = ring as f64 * self.cell;
                if reach * reach >= b {
                    break;
                }
            }
            ring += 1;
        }
        best
    }
}
