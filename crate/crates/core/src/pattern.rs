//! Tiling and meso-structure pattern generation.
//!
//! A [`Tiling`] is the coarse polygon mesh (corner vertices, faces, unique
//! edges and one winding sign per edge). A [`PatternGeometry`] replaces every
//! tiling edge with a polyline, either a zig-zag spring ([`build_complex_pattern`])
//! or an evenly subdivided straight edge ([`build_simple_pattern`]).
//!
//! Zig-zag springs are built in the edge-local frame: start `(0,0)`, end
//! `(1,0)`, owning cell center at `(0.5,1)`, so amplitudes are fractions of the
//! distance from the edge midpoint to the cell center.

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type P2 = [f64; 2];

/// Relative tolerance used to weld coincident corners (times the circumradius).
pub const WELD_TOLERANCE: f64 = 1e-6;
/// Segments shorter than this (mm) are treated as zero length.
pub const ZERO_LENGTH: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    Hexagon,
    Rectangle,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TilingSpec {
    /// Center of the bottom-left cell (mm).
    pub origin: P2,
    pub nx: usize,
    pub ny: usize,
    /// Cell circumradius (mm).
    pub radius: f64,
    pub cell_kind: CellKind,
}

impl TilingSpec {
    pub fn hexagons(nx: usize, ny: usize, radius: f64) -> Self {
        Self { origin: [0.0, 0.0], nx, ny, radius, cell_kind: CellKind::Hexagon }
    }

    pub fn rectangles(nx: usize, ny: usize, radius: f64) -> Self {
        Self { origin: [0.0, 0.0], nx, ny, radius, cell_kind: CellKind::Rectangle }
    }

    fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::invalid(format!("cell counts must be positive, got {}x{}", self.nx, self.ny)));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::invalid(format!("circumradius must be positive, got {}", self.radius)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tiling {
    pub vertices: Vec<P2>,
    pub faces: Vec<Vec<usize>>,
    /// Unique undirected edges, stored in the direction of their first traversal.
    pub edges: Vec<[usize; 2]>,
    pub signs: Vec<i8>,
    /// Face that first visited each edge; its center fixes the edge-local frame.
    pub edge_owner: Vec<usize>,
    pub centers: Vec<P2>,
}

impl Tiling {
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges.len() as i64 + self.faces.len() as i64
    }

    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        self.edges.iter().position(|e| (e[0] == a && e[1] == b) || (e[0] == b && e[1] == a))
    }

    /// Signs of a face's edges in traversal order, expressed in that face's own
    /// frame: an edge owned by a neighbor has its local y-axis flipped, so its
    /// sign is negated.
    pub fn face_relative_signs(&self, face: usize) -> Vec<i8> {
        let f = &self.faces[face];
        (0..f.len())
            .map(|k| {
                let e = self.edge_index(f[k], f[(k + 1) % f.len()]).expect("face edge missing");
                if self.edge_owner[e] == face {
                    self.signs[e]
                } else {
                    -self.signs[e]
                }
            })
            .collect()
    }

    /// Vector from the midpoint of edge `e` to its owning cell's center.
    pub fn inward(&self, e: usize) -> P2 {
        let [a, b] = self.edges[e];
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        let c = self.centers[self.edge_owner[e]];
        [c[0] - 0.5 * (pa[0] + pb[0]), c[1] - 0.5 * (pa[1] + pb[1])]
    }
}

/// Welds points closer than `tol`, returning the unique points and the index
/// of each input point among them.
pub fn weld(points: &[P2], tol: f64) -> (Vec<P2>, Vec<usize>) {
    let cell = |p: P2| ((p[0] / tol).floor() as i64, (p[1] / tol).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let mut unique: Vec<P2> = Vec::new();
    let mut map = Vec::with_capacity(points.len());
    for &p in points {
        let (cx, cy) = cell(p);
        let mut found = None;
        'search: for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(ids) = grid.get(&(cx + dx, cy + dy)) {
                    for &i in ids {
                        let q = unique[i];
                        if (p[0] - q[0]).hypot(p[1] - q[1]) < tol {
                            found = Some(i);
                            break 'search;
                        }
                    }
                }
            }
        }
        let id = found.unwrap_or_else(|| {
            unique.push(p);
            grid.entry((cx, cy)).or_default().push(unique.len() - 1);
            unique.len() - 1
        });
        map.push(id);
    }
    (unique, map)
}

fn tiling_from_cells(spec: &TilingSpec, centers: Vec<P2>, corners: Vec<Vec<P2>>, start_sign: impl Fn(usize) -> i8) -> Tiling {
    let flat: Vec<P2> = corners.iter().flatten().copied().collect();
    let (vertices, map) = weld(&flat, WELD_TOLERANCE * spec.radius);
    let mut faces = Vec::with_capacity(corners.len());
    let mut offset = 0;
    for c in &corners {
        faces.push(map[offset..offset + c.len()].to_vec());
        offset += c.len();
    }
    let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
    let (mut edges, mut signs, mut edge_owner) = (Vec::new(), Vec::new(), Vec::new());
    for (fi, f) in faces.iter().enumerate() {
        let mut sign = start_sign(fi);
        for k in 0..f.len() {
            let (a, b) = (f[k], f[(k + 1) % f.len()]);
            let key = (a.min(b), a.max(b));
            if let std::collections::hash_map::Entry::Vacant(slot) = seen.entry(key) {
                slot.insert(edges.len());
                edges.push([a, b]);
                signs.push(sign);
                edge_owner.push(fi);
            }
            sign = -sign;
        }
    }
    Tiling { vertices, faces, edges, signs, edge_owner, centers }
}

/// Regular hexagonal tiling with flat-topped cells laid out in columns.
///
/// Centers of the first row advance by `r (1 + sin(π/6), ±cos(π/6))`
/// (alternating vertical offset), further rows are shifted by the incircle
/// diameter `2 r sin(π/3)`. Corners sit at `center + r (cos(iπ/3), sin(iπ/3))`.
pub fn generate_hex_tiling(spec: &TilingSpec) -> Result<Tiling> {
    spec.validate()?;
    if spec.cell_kind != CellKind::Hexagon {
        return Err(Error::invalid("generate_hex_tiling needs cell_kind = hexagon"));
    }
    let r = spec.radius;
    let d = 2.0 * r * (PI / 3.0).sin();
    let step = |j: usize| {
        let s = if j % 2 == 0 { 1.0 } else { -1.0 };
        [r * (1.0 + (PI / 6.0).sin()), s * r * (PI / 6.0).cos()]
    };
    let mut first_row = vec![spec.origin];
    for i in 1..spec.nx {
        let prev = first_row[i - 1];
        let s = step(i - 1);
        first_row.push([prev[0] + s[0], prev[1] + s[1]]);
    }
    let mut centers = Vec::with_capacity(spec.nx * spec.ny);
    for row in 0..spec.ny {
        for c in &first_row {
            centers.push([c[0], c[1] + row as f64 * d]);
        }
    }
    let corners = centers
        .iter()
        .map(|c| {
            (0..6)
                .map(|i| {
                    let a = i as f64 * PI / 3.0;
                    [c[0] + r * a.cos(), c[1] + r * a.sin()]
                })
                .collect()
        })
        .collect();
    Ok(tiling_from_cells(spec, centers, corners, |_| 1))
}

/// Axis-aligned square tiling; `radius` is the square's circumradius.
///
/// Traversal starts with a checkerboard sign so that each pair of
/// edge-adjacent squares carries inverted signs.
pub fn generate_quad_tiling(spec: &TilingSpec) -> Result<Tiling> {
    spec.validate()?;
    if spec.cell_kind != CellKind::Rectangle {
        return Err(Error::invalid("generate_quad_tiling needs cell_kind = rectangle"));
    }
    let side = spec.radius * std::f64::consts::SQRT_2;
    let h = 0.5 * side;
    let mut centers = Vec::with_capacity(spec.nx * spec.ny);
    let mut parity = Vec::with_capacity(spec.nx * spec.ny);
    for j in 0..spec.ny {
        for i in 0..spec.nx {
            centers.push([spec.origin[0] + i as f64 * side, spec.origin[1] + j as f64 * side]);
            parity.push(if (i + j) % 2 == 0 { 1 } else { -1 });
        }
    }
    let corners = centers
        .iter()
        .map(|c| vec![[c[0] - h, c[1] - h], [c[0] + h, c[1] - h], [c[0] + h, c[1] + h], [c[0] - h, c[1] + h]])
        .collect();
    Ok(tiling_from_cells(spec, centers, corners, |f| parity[f]))
}

pub fn generate_tiling(spec: &TilingSpec) -> Result<Tiling> {
    match spec.cell_kind {
        CellKind::Hexagon => generate_hex_tiling(spec),
        CellKind::Rectangle => generate_quad_tiling(spec),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZigZagSpec {
    /// Peak heights relative to the incircle radius, each in `[0, 1]`.
    pub amplitudes: Vec<f64>,
    /// Polyline points per sampled semicircle (endpoints included).
    #[serde(default = "default_arc_samples")]
    pub arc_samples: usize,
    /// Maximum segment length after post-processing (mm).
    pub max_seg_len: f64,
    /// Treat the semi-ellipse width as the full axis instead of the semi-axis.
    #[serde(default)]
    pub ellipse_full_width: bool,
}

fn default_arc_samples() -> usize {
    8
}

impl ZigZagSpec {
    pub fn new(amplitudes: Vec<f64>, max_seg_len: f64) -> Self {
        Self { amplitudes, arc_samples: default_arc_samples(), max_seg_len, ellipse_full_width: false }
    }

    pub fn validate(&self) -> Result<()> {
        if self.amplitudes.is_empty() {
            return Err(Error::invalid("zig-zag needs at least one amplitude"));
        }
        if let Some(a) = self.amplitudes.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::invalid(format!("amplitude {a} outside [0, 1]")));
        }
        if self.arc_samples < 2 {
            return Err(Error::invalid("arc_samples must be at least 2"));
        }
        if !(self.max_seg_len > 0.0) {
            return Err(Error::invalid("max_seg_len must be positive"));
        }
        Ok(())
    }

    /// Semicircle radius in edge-local units.
    pub fn peak_radius(&self) -> f64 {
        1.0 / (2.0 * (self.amplitudes.len() as f64 + 2.0))
    }
}

/// Builds the edge-local zig-zag polyline (x along the edge in `[0,1]`, y
/// toward the owning cell center) for edge sign `sign`.
pub fn zigzag_local(sign: i8, spec: &ZigZagSpec) -> Result<Vec<P2>> {
    spec.validate()?;
    let n = spec.amplitudes.len();
    let rq = spec.peak_radius();
    let w = 2.0 * rq;
    let s_e = f64::from(sign.signum());
    let peak_sign = |i: usize| if i % 2 == 0 { s_e } else { -s_e };
    // (center y, horizontal semi-axis, vertical semi-axis) of peak i (1-based)
    let peak = |i: usize| {
        let a = spec.amplitudes[i - 1];
        if a >= rq {
            (peak_sign(i) * (a - rq), rq, rq)
        } else {
            let rx = if spec.ellipse_full_width { 0.5 * rq } else { rq };
            (0.0, rx, a)
        }
    };
    let quarter = (spec.arc_samples + 1) / 2;
    let quarter = quarter.max(2);
    let mut pts: Vec<P2> = vec![[0.0, 0.0], [rq, 0.0]];
    let push_unique = |pts: &mut Vec<P2>, p: P2| {
        if pts.last() != Some(&p) {
            pts.push(p);
        }
    };

    // leading quarter arc from (rq, 0) up to the first peak's leg
    let (cy1, _, _) = peak(1);
    let h1 = rq.min(cy1.abs());
    let sgn1 = peak_sign(1);
    for k in 1..quarter {
        let t = 0.5 * PI * k as f64 / (quarter - 1) as f64;
        push_unique(&mut pts, [rq + rq * t.sin(), sgn1 * h1 * (1.0 - t.cos())]);
    }

    for i in 1..=n {
        let (cy, rx, ry) = peak(i);
        let s = peak_sign(i);
        let xc = i as f64 * w + rq;
        for k in 0..spec.arc_samples {
            let t = PI * k as f64 / (spec.arc_samples - 1) as f64;
            let p = [xc - rx * t.cos(), cy + s * ry * t.sin()];
            if k == 0 && i == 1 {
                push_unique(&mut pts, p);
            } else {
                pts.push(p);
            }
        }
    }

    // trailing quarter arc, mirror image of the leading one
    let (cyn, _, _) = peak(n);
    let hn = rq.min(cyn.abs());
    let sgnn = peak_sign(n);
    for k in (0..quarter).rev() {
        let t = 0.5 * PI * k as f64 / (quarter - 1) as f64;
        push_unique(&mut pts, [1.0 - rq - rq * t.sin(), sgnn * hn * (1.0 - t.cos())]);
    }
    pts.push([1.0, 0.0]);
    Ok(pts)
}

/// Zig-zag spring between `start` and `end`; `inward` is the world vector that
/// the local point `(0.5, 1)` maps to relative to the edge midpoint.
///
/// The returned polyline starts at `start` and ends at `end` exactly.
pub fn construct_zigzag(start: P2, end: P2, inward: P2, sign: i8, spec: &ZigZagSpec) -> Result<Vec<P2>> {
    let local = zigzag_local(sign, spec)?;
    let dx = [end[0] - start[0], end[1] - start[1]];
    let last = local.len() - 1;
    Ok(local
        .iter()
        .enumerate()
        .map(|(k, &[x, y])| match k {
            0 => start,
            k if k == last => end,
            _ => [start[0] + x * dx[0] + y * inward[0], start[1] + x * dx[1] + y * inward[1]],
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeStyle {
    ZigZag(ZigZagSpec),
    Subdivided(usize),
}

/// Polylines replacing every tiling edge.
#[derive(Clone, Debug, PartialEq)]
pub struct PatternGeometry {
    pub tiling_spec: Option<TilingSpec>,
    pub style: EdgeStyle,
    /// Tiling corner vertices (connection points).
    pub vertices: Vec<P2>,
    pub edges: Vec<[usize; 2]>,
    pub signs: Vec<i8>,
    /// One polyline per tiling edge, from `vertices[edges[e][0]]` to `vertices[edges[e][1]]`.
    pub polylines: Vec<Vec<P2>>,
}

/// Incidence of a polyline end at a tiling corner.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeEnd {
    pub edge: usize,
    /// `false` for the polyline start, `true` for its end.
    pub at_end: bool,
}

impl PatternGeometry {
    /// For each tiling corner, the polyline endpoints meeting there.
    pub fn connection_map(&self) -> Vec<Vec<EdgeEnd>> {
        let mut map = vec![Vec::new(); self.vertices.len()];
        for (e, &[a, b]) in self.edges.iter().enumerate() {
            map[a].push(EdgeEnd { edge: e, at_end: false });
            map[b].push(EdgeEnd { edge: e, at_end: true });
        }
        map
    }

    /// Distinct pattern vertices: corners plus interior polyline points.
    pub fn vertex_count(&self) -> usize {
        self.vertices.len() + self.polylines.iter().map(|p| p.len().saturating_sub(2)).sum::<usize>()
    }

    pub fn segment_count(&self) -> usize {
        self.polylines.iter().map(|p| p.len().saturating_sub(1)).sum()
    }

    pub fn max_segment_length(&self) -> f64 {
        self.polylines.iter().flat_map(|p| p.windows(2).map(|w| dist(w[0], w[1]))).fold(0.0, f64::max)
    }

    pub fn min_segment_length(&self) -> f64 {
        self.polylines.iter().flat_map(|p| p.windows(2).map(|w| dist(w[0], w[1]))).fold(f64::INFINITY, f64::min)
    }

    /// Axis-aligned extent of all polylines (width, height).
    pub fn extent(&self) -> [f64; 2] {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in self.polylines.iter().flatten().chain(self.vertices.iter()) {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        [hi[0] - lo[0], hi[1] - lo[1]]
    }
}

pub(crate) fn dist(a: P2, b: P2) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Replaces each tiling edge with a zig-zag spring oriented by its sign.
pub fn build_complex_pattern(tiling: &Tiling, spec: &ZigZagSpec, tiling_spec: Option<TilingSpec>) -> Result<PatternGeometry> {
    spec.validate()?;
    let polylines = (0..tiling.edges.len())
        .map(|e| {
            let [a, b] = tiling.edges[e];
            construct_zigzag(tiling.vertices[a], tiling.vertices[b], tiling.inward(e), tiling.signs[e], spec)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PatternGeometry {
        tiling_spec,
        style: EdgeStyle::ZigZag(spec.clone()),
        vertices: tiling.vertices.clone(),
        edges: tiling.edges.clone(),
        signs: tiling.signs.clone(),
        polylines,
    })
}

/// Splits every tiling edge into `subdivisions` equal straight segments.
pub fn build_simple_pattern(tiling: &Tiling, subdivisions: usize, tiling_spec: Option<TilingSpec>) -> Result<PatternGeometry> {
    if subdivisions == 0 {
        return Err(Error::invalid("subdivisions must be at least 1"));
    }
    let polylines = tiling
        .edges
        .iter()
        .map(|&[a, b]| {
            let (pa, pb) = (tiling.vertices[a], tiling.vertices[b]);
            (0..=subdivisions)
                .map(|k| match k {
                    0 => pa,
                    k if k == subdivisions => pb,
                    k => {
                        let t = k as f64 / subdivisions as f64;
                        [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]
                    }
                })
                .collect()
        })
        .collect();
    Ok(PatternGeometry {
        tiling_spec,
        style: EdgeStyle::Subdivided(subdivisions),
        vertices: tiling.vertices.clone(),
        edges: tiling.edges.clone(),
        signs: tiling.signs.clone(),
        polylines,
    })
}

/// Removes zero-length segments and splits segments longer than
/// `max_seg_len` into the minimal number of equal parts. Endpoints are kept
/// bit-exact.
pub fn postprocess(pattern: &PatternGeometry, max_seg_len: f64) -> Result<PatternGeometry> {
    if !(max_seg_len > 0.0) {
        return Err(Error::invalid("max_seg_len must be positive"));
    }
    let mut out = pattern.clone();
    for poly in &mut out.polylines {
        *poly = clean_polyline(poly, max_seg_len);
    }
    Ok(out)
}

fn clean_polyline(poly: &[P2], max_seg_len: f64) -> Vec<P2> {
    let Some((&first, rest)) = poly.split_first() else {
        return Vec::new();
    };
    let mut kept = vec![first];
    for &p in rest {
        if dist(*kept.last().unwrap(), p) > ZERO_LENGTH {
            kept.push(p);
        }
    }
    let end = *poly.last().unwrap();
    if kept.len() > 1 && *kept.last().unwrap() != end {
        // the final point was dropped as a near-duplicate of its predecessor
        kept.pop();
        kept.push(end);
    }
    let mut out = vec![kept[0]];
    for w in kept.windows(2) {
        let len = dist(w[0], w[1]);
        let parts = (len / max_seg_len).ceil().max(1.0) as usize;
        for k in 1..parts {
            let t = k as f64 / parts as f64;
            out.push([w[0][0] + t * (w[1][0] - w[0][0]), w[0][1] + t * (w[1][1] - w[0][1])]);
        }
        out.push(w[1]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hex(nx: usize, ny: usize) -> Tiling {
        generate_hex_tiling(&TilingSpec::hexagons(nx, ny, 1.0)).unwrap()
    }

    fn brute_force_weld_count(t: &TilingSpec) -> usize {
        let r = t.radius;
        let d = 2.0 * r * (PI / 3.0).sin();
        let mut pts: Vec<P2> = Vec::new();
        for row in 0..t.ny {
            let mut c = [t.origin[0], t.origin[1] + row as f64 * d];
            for i in 0..t.nx {
                if i > 0 {
                    c[0] += 1.5 * r;
                    c[1] += if (i - 1) % 2 == 0 { 0.5 * 3f64.sqrt() * r } else { -0.5 * 3f64.sqrt() * r };
                }
                for k in 0..6 {
                    let a = k as f64 * PI / 3.0;
                    let p = [c[0] + r * a.cos(), c[1] + r * a.sin()];
                    if !pts.iter().any(|q| dist(*q, p) < 1e-6 * r) {
                        pts.push(p);
                    }
                }
            }
        }
        pts.len()
    }

    #[test]
    fn hex_centers_and_row_offset() {
        let t = hex(2, 2);
        let c1 = t.centers[1];
        assert!((c1[0] - 1.5).abs() < 1e-12 && (c1[1] - 0.8660254037844386).abs() < 1e-12);
        let d = t.centers[2][1] - t.centers[0][1];
        assert!((d - 1.7320508075688772).abs() < 1e-12);
    }

    #[test]
    fn hex_corner_offsets() {
        let t = hex(1, 1);
        let c = t.centers[0];
        let p = t.vertices[t.faces[0][1]];
        assert!((p[0] - c[0] - 0.5).abs() < 1e-12);
        assert!((p[1] - c[1] - 0.8660254037844386).abs() < 1e-12);
    }

    #[test]
    fn two_hexagons_weld_to_ten_vertices() {
        let t = hex(2, 1);
        assert_eq!(t.vertices.len(), 10);
        assert_eq!(t.edges.len(), 11);
        assert_eq!(t.signs.len(), t.edges.len());
    }

    #[test]
    fn seven_by_six_counts() {
        let t = generate_hex_tiling(&TilingSpec::hexagons(7, 6, 7.0)).unwrap();
        assert_eq!((t.vertices.len(), t.edges.len(), t.faces.len()), (110, 151, 42));
        assert_eq!(t.euler_characteristic(), 1);
    }

    #[test]
    fn weld_matches_brute_force_and_is_idempotent() {
        for nx in 1..=4 {
            for ny in 1..=4 {
                let spec = TilingSpec::hexagons(nx, ny, 2.5);
                let t = generate_hex_tiling(&spec).unwrap();
                assert_eq!(t.vertices.len(), brute_force_weld_count(&spec));
                let (again, map) = weld(&t.vertices, WELD_TOLERANCE * spec.radius);
                assert_eq!(again, t.vertices);
                assert!(map.iter().enumerate().all(|(i, &j)| i == j));
            }
        }
    }

    #[test]
    fn hex_face_signs_alternate() {
        let t = hex(3, 3);
        for f in 0..t.faces.len() {
            let s = t.face_relative_signs(f);
            assert_eq!(s.len(), 6);
            for k in 0..6 {
                assert_eq!(s[k], -s[(k + 1) % 6], "face {f}");
            }
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(generate_hex_tiling(&TilingSpec::hexagons(0, 1, 1.0)).is_err());
        assert!(generate_hex_tiling(&TilingSpec::hexagons(1, 1, 0.0)).is_err());
        assert!(generate_quad_tiling(&TilingSpec::rectangles(1, 0, 1.0)).is_err());
        assert!(generate_quad_tiling(&TilingSpec::hexagons(1, 1, 1.0)).is_err());
    }

    #[test]
    fn single_quad() {
        let t = generate_quad_tiling(&TilingSpec::rectangles(1, 1, 1.0)).unwrap();
        assert_eq!(t.vertices.len(), 4);
        assert_eq!(t.edges.len(), 4);
        assert_eq!(t.signs, vec![1, -1, 1, -1]);
    }

    #[test]
    fn quad_shared_edge_visited_once() {
        let t = generate_quad_tiling(&TilingSpec::rectangles(2, 1, 1.0)).unwrap();
        assert_eq!(t.edges.len(), 7);
        assert_eq!(t.signs.len(), 7);
        let shared = t.edge_index(t.faces[0][1], t.faces[0][2]).unwrap();
        assert_eq!(t.edges.iter().filter(|e| e.contains(&t.faces[0][1]) && e.contains(&t.faces[0][2])).count(), 1);
        assert_eq!(t.edge_owner[shared], 0);
    }

    #[test]
    fn adjacent_quads_have_inverted_traversal() {
        let t = generate_quad_tiling(&TilingSpec::rectangles(2, 2, 1.0)).unwrap();
        for a in 0..4 {
            for b in (a + 1)..4 {
                let fa = &t.faces[a];
                let fb = &t.faces[b];
                let shared: Vec<_> = fa.iter().filter(|v| fb.contains(v)).collect();
                if shared.len() != 2 {
                    continue;
                }
                // both faces alternate in their own frames ...
                let sa = t.face_relative_signs(a);
                let sb = t.face_relative_signs(b);
                for k in 0..4 {
                    assert_eq!(sa[k], -sa[(k + 1) % 4]);
                    assert_eq!(sb[k], -sb[(k + 1) % 4]);
                }
                // ... and their traversal start signs are inverted
                assert_eq!(sa[0], -sb[0], "faces {a} and {b}");
            }
        }
    }

    #[test]
    fn peak_radius_for_three_peaks() {
        let spec = ZigZagSpec::new(vec![0.3, 0.5, 0.3], 1.0);
        assert!((spec.peak_radius() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn zero_offset_peaks_touch_base_line() {
        // odd sample count so the apex is sampled
        let spec = ZigZagSpec { arc_samples: 9, ..ZigZagSpec::new(vec![0.1, 0.1, 0.1], 1.0) };
        let pts = zigzag_local(1, &spec).unwrap();
        // every arc starts and ends on the base line
        for i in 1..=3 {
            let x0 = i as f64 * 0.2;
            assert!(pts.iter().any(|p| (p[0] - x0).abs() < 1e-12 && p[1].abs() < 1e-12));
            assert!(pts.iter().any(|p| (p[0] - x0 - 0.2).abs() < 1e-12 && p[1].abs() < 1e-12));
        }
        let top = pts.iter().map(|p| p[1].abs()).fold(0.0, f64::max);
        assert!((top - 0.1).abs() < 1e-12);
    }

    #[test]
    fn opposite_signs_are_mirror_images() {
        let spec = ZigZagSpec::new(vec![0.5], 1.0);
        let (a, b) = ([1.0, 2.0], [4.0, 6.0]);
        let inward = [-4.0 * 0.8, 3.0 * 0.8];
        let plus = construct_zigzag(a, b, inward, 1, &spec).unwrap();
        let minus = construct_zigzag(a, b, inward, -1, &spec).unwrap();
        assert_eq!(plus.len(), minus.len());
        let u = [0.6, 0.8];
        for (p, q) in plus.iter().zip(&minus) {
            // reflect p across the line through a with direction u
            let v = [p[0] - a[0], p[1] - a[1]];
            let along = v[0] * u[0] + v[1] * u[1];
            let refl = [a[0] + 2.0 * along * u[0] - v[0], a[1] + 2.0 * along * u[1] - v[1]];
            assert!(dist(refl, *q) < 1e-12);
        }
    }

    #[test]
    fn zigzag_endpoints_are_exact() {
        let spec = ZigZagSpec::new(vec![0.2, 0.6, 0.9, 0.05], 0.3);
        let (a, b) = ([0.1, -3.3], [7.2, 1.7]);
        let poly = construct_zigzag(a, b, [-2.5, 3.5], -1, &spec).unwrap();
        assert_eq!(poly[0], a);
        assert_eq!(*poly.last().unwrap(), b);
    }

    #[test]
    fn zigzag_rejects_bad_amplitudes() {
        assert!(zigzag_local(1, &ZigZagSpec::new(vec![], 1.0)).is_err());
        assert!(zigzag_local(1, &ZigZagSpec::new(vec![1.2], 1.0)).is_err());
        assert!(zigzag_local(1, &ZigZagSpec::new(vec![-0.1], 1.0)).is_err());
    }

    #[test]
    fn middle_peaks_alternate_inward_outward() {
        let t = hex(1, 1);
        let spec = ZigZagSpec::new(vec![0.3, 0.6, 0.3], 10.0);
        let pat = build_complex_pattern(&t, &spec, None).unwrap();
        let c = t.centers[0];
        let mut inward = Vec::new();
        for (e, poly) in pat.polylines.iter().enumerate() {
            let [a, b] = t.edges[e];
            let mid = [(t.vertices[a][0] + t.vertices[b][0]) / 2.0, (t.vertices[a][1] + t.vertices[b][1]) / 2.0];
            // the middle peak is the polyline point farthest from the base line near the edge midpoint
            let tip = poly
                .iter()
                .min_by(|p, q| dist(**p, mid).partial_cmp(&dist(**q, mid)).unwrap().reverse().then(std::cmp::Ordering::Equal))
                .unwrap();
            let near_mid = poly
                .iter()
                .filter(|p| dist(**p, mid) < 0.35)
                .max_by(|p, q| dist(**p, mid).partial_cmp(&dist(**q, mid)).unwrap())
                .unwrap_or(tip);
            inward.push(dist(*near_mid, c) < dist(mid, c));
        }
        for k in 0..6 {
            assert_ne!(inward[k], inward[(k + 1) % 6]);
        }
    }

    #[test]
    fn empty_tiling_gives_empty_pattern() {
        let t = Tiling { vertices: vec![], faces: vec![], edges: vec![], signs: vec![], edge_owner: vec![], centers: vec![] };
        let pat = build_complex_pattern(&t, &ZigZagSpec::new(vec![0.5], 1.0), None).unwrap();
        assert!(pat.polylines.is_empty());
        assert_eq!(pat.vertex_count(), 0);
    }

    #[test]
    fn simple_pattern_counts_seven_by_six() {
        let t = generate_hex_tiling(&TilingSpec::hexagons(7, 6, 7.0)).unwrap();
        let p = build_simple_pattern(&t, 4, None).unwrap();
        assert_eq!(p.vertex_count(), 563);
        assert_eq!(p.segment_count(), 604);
    }

    #[test]
    fn simple_pattern_closed_forms() {
        for nx in 1..=4 {
            for ny in 1..=4 {
                let t = hex(nx, ny);
                for k in 1..=8 {
                    let p = build_simple_pattern(&t, k, None).unwrap();
                    assert_eq!(p.vertex_count(), t.vertices.len() + (k - 1) * t.edges.len());
                    assert_eq!(p.segment_count(), k * t.edges.len());
                }
            }
        }
    }

    #[test]
    fn unit_subdivision_is_identity() {
        let t = hex(2, 2);
        let p = build_simple_pattern(&t, 1, None).unwrap();
        for (poly, &[a, b]) in p.polylines.iter().zip(&t.edges) {
            assert_eq!(poly, &vec![t.vertices[a], t.vertices[b]]);
        }
    }

    #[test]
    fn postprocess_splits_long_segment() {
        let pat = PatternGeometry {
            tiling_spec: None,
            style: EdgeStyle::Subdivided(1),
            vertices: vec![[0.0, 0.0], [10.0, 0.0]],
            edges: vec![[0, 1]],
            signs: vec![1],
            polylines: vec![vec![[0.0, 0.0], [10.0, 0.0]]],
        };
        let out = postprocess(&pat, 3.0).unwrap();
        assert_eq!(out.polylines[0].len(), 5);
        for w in out.polylines[0].windows(2) {
            assert!((dist(w[0], w[1]) - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn postprocess_removes_duplicate_peak_points() {
        // amplitudes below the peak radius make consecutive peaks share points
        let spec = ZigZagSpec::new(vec![0.05, 0.05, 0.05], 10.0);
        let raw = zigzag_local(1, &spec).unwrap();
        assert!(raw.windows(2).any(|w| dist(w[0], w[1]) <= ZERO_LENGTH));
        let pat = PatternGeometry {
            tiling_spec: None,
            style: EdgeStyle::ZigZag(spec),
            vertices: vec![[0.0, 0.0], [1.0, 0.0]],
            edges: vec![[0, 1]],
            signs: vec![1],
            polylines: vec![raw],
        };
        let out = postprocess(&pat, 10.0).unwrap();
        assert!(out.min_segment_length() > ZERO_LENGTH);
        assert_eq!(out.polylines[0][0], [0.0, 0.0]);
        assert_eq!(*out.polylines[0].last().unwrap(), [1.0, 0.0]);
    }

    #[test]
    fn postprocess_fixed_point() {
        let t = hex(2, 1);
        let p = build_simple_pattern(&t, 4, None).unwrap();
        assert_eq!(postprocess(&p, 1.0).unwrap(), p);
    }
}
