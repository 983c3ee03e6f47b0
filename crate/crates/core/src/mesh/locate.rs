use super::Mesh;
use crate::geometry::{signed_area, Point};

/// Uniform bucket grid over triangle bounding boxes.
pub struct PointLocator<'a> {
    mesh: &'a Mesh,
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl<'a> PointLocator<'a> {
    pub fn new(mesh: &'a Mesh) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in mesh.vertices() {
            for k in 0..2 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        let per_side = (mesh.num_triangles() as f64).sqrt().ceil().max(1.0);
        let cell = ((hi[0] - lo[0]).max(hi[1] - lo[1]) / per_side).max(1e-12);
        let nx = ((hi[0] - lo[0]) / cell).floor() as usize + 1;
        let ny = ((hi[1] - lo[1]) / cell).floor() as usize + 1;
        let mut locator = Self {
            mesh,
            origin: lo,
            cell,
            nx,
            ny,
            buckets: vec![Vec::new(); nx * ny],
        };
        for t in 0..mesh.num_triangles() {
            let v = mesh.triangle_vertices(t);
            let (mut tlo, mut thi) = (v[0], v[0]);
            for p in &v[1..] {
                for k in 0..2 {
                    tlo[k] = tlo[k].min(p[k]);
                    thi[k] = thi[k].max(p[k]);
                }
            }
            let (i0, j0) = locator.bucket(tlo);
            let (i1, j1) = locator.bucket(thi);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    locator.buckets[j * nx + i].push(t);
                }
            }
        }
        locator
    }

    fn bucket(&self, p: Point) -> (usize, usize) {
        let i = ((p[0] - self.origin[0]) / self.cell).floor().max(0.0) as usize;
        let j = ((p[1] - self.origin[1]) / self.cell).floor().max(0.0) as usize;
        (i.min(self.nx - 1), j.min(self.ny - 1))
    }

    /// Triangle containing `p` together with the barycentric coordinates of
    /// `p` in it. Points on shared edges resolve to the first candidate found;
    /// points slightly outside (within `1e-10` in barycentric terms) are
    /// accepted.
    pub fn locate(&self, p: Point) -> Option<(usize, [f64; 3])> {
        let (i, j) = self.bucket(p);
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for &t in &self.buckets[j * self.nx + i] {
            let l = barycentric_coordinates(self.mesh.triangle_vertices(t), p);
            let worst = l[0].min(l[1]).min(l[2]);
            if worst >= 0.0 {
                return Some((t, l));
            }
            if best.as_ref().is_none_or(|b| worst > b.2) {
                best = Some((t, l, worst));
            }
        }
        best.filter(|b| b.2 > -1e-10).map(|(t, l, _)| (t, l))
    }
}

pub fn barycentric_coordinates(v: [Point; 3], p: Point) -> [f64; 3] {
    let area = signed_area(v[0], v[1], v[2]);
    let l0 = signed_area(p, v[1], v[2]) / area;
    let l1 = signed_area(v[0], p, v[2]) / area;
    [l0, l1, 1.0 - l0 - l1]
}
