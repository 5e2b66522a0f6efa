//! Rod network assembled from a pattern, its simulation state and anchors.
//!
//! Every tiling corner becomes a rigid joint with a position `c` and an
//! orientation `q`. The terminal segment of each incident rod is slaved to its
//! joint: the end vertex coincides with `c` and the next vertex sits at
//! `c + ℓ R(q) t̄`, where `t̄` is the rest direction of that segment and `ℓ` its
//! (stretchable) length. Terminal segments carry the joint's material frame,
//! whose first director is `R(q) ẑ`, the plane normal at rest.
//!
//! Interior vertices are free 3d points, interior segments carry a twist
//! angle `θ` measured from a reference director that is parallel transported
//! whenever the segment tangent changes.
//!
//! Generalized coordinates, in order: per joint `(Δc, Δω)`, then per rod
//! `(ℓ_start, ℓ_end, P_2 … P_{n-2}, θ_1 … θ_{n-2})`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::elastic::kernels;
use crate::error::{Error, Result};
use crate::geometry::{transport, Quat, V3};
use crate::pattern::PatternGeometry;

/// Conversion of the stiffness coefficients (given in Pa-like magnitudes) to
/// N/mm², so that energies come out in N·mm next to the unit-weight anchors.
pub const MODULUS_SCALE: f64 = 1e-6;

/// Minimum number of segments per rod: both terminal segments are owned by
/// joints and must be distinct.
pub const MIN_ROD_SEGMENTS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    pub k_stretch: f64,
    pub k_bend: f64,
    pub k_twist: f64,
    /// In-plane extent of the cross section (mm).
    pub width: f64,
    /// Out-of-plane extent of the cross section (mm).
    pub thickness: f64,
}

impl MaterialParams {
    pub fn new(k_stretch: f64, k_bend: f64, k_twist: f64, width: f64, thickness: f64) -> Self {
        Self { k_stretch, k_bend, k_twist, width, thickness }
    }

    pub fn validate(&self) -> Result<()> {
        let all = self.to_array();
        if all.iter().all(|v| *v > 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(Error::invalid(format!("material parameters must be positive and finite, got {all:?}")))
        }
    }

    pub fn to_array(&self) -> [f64; 5] {
        [self.k_stretch, self.k_bend, self.k_twist, self.width, self.thickness]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self::new(a[0], a[1], a[2], a[3], a[4])
    }

    /// Per-term stiffness weights derived from the coefficients and the
    /// rectangular cross section.
    pub fn weights(&self) -> Weights {
        let (w, t) = (self.width, self.thickness);
        Weights {
            stretch: MODULUS_SCALE * self.k_stretch * w * t,
            bend_normal: MODULUS_SCALE * self.k_bend * w * t.powi(3) / 12.0,
            bend_in_plane: MODULUS_SCALE * self.k_bend * t * w.powi(3) / 12.0,
            twist: MODULUS_SCALE * self.k_twist * w * t * (w * w + t * t) / 12.0,
        }
    }
}

/// Stiffnesses actually entering the energy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Weights {
    pub stretch: f64,
    /// Bending about the in-plane axis (curvature component along the second director).
    pub bend_normal: f64,
    /// Bending within the rest plane.
    pub bend_in_plane: f64,
    pub twist: f64,
}

/// Constraint pinning a point on a rod segment to a target position and
/// material direction. Serialized as the 9-tuple
/// `[rod, segment, β, px, py, pz, mx, my, mz]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Anchor {
    pub rod: usize,
    pub segment: usize,
    pub beta: f64,
    pub position: V3,
    pub direction: V3,
}

impl TryFrom<Vec<f64>> for Anchor {
    type Error = String;

    fn try_from(v: Vec<f64>) -> std::result::Result<Self, String> {
        if v.len() != 9 {
            return Err(format!("anchor needs 9 entries, got {}", v.len()));
        }
        let index = |x: f64, what: &str| {
            if x >= 0.0 && x.fract() == 0.0 && x < u32::MAX as f64 {
                Ok(x as usize)
            } else {
                Err(format!("anchor {what} index must be a non-negative integer, got {x}"))
            }
        };
        Ok(Anchor {
            rod: index(v[0], "rod")?,
            segment: index(v[1], "segment")?,
            beta: v[2],
            position: V3::new(v[3], v[4], v[5]),
            direction: V3::new(v[6], v[7], v[8]),
        })
    }
}

impl From<Anchor> for Vec<f64> {
    fn from(a: Anchor) -> Self {
        vec![
            a.rod as f64,
            a.segment as f64,
            a.beta,
            a.position.x,
            a.position.y,
            a.position.z,
            a.direction.x,
            a.direction.y,
            a.direction.z,
        ]
    }
}

impl Anchor {
    pub fn validate(&self, network: &RodNetwork) -> Result<()> {
        let rod = network
            .rods
            .get(self.rod)
            .ok_or_else(|| Error::invalid(format!("anchor rod {} out of range ({} rods)", self.rod, network.rods.len())))?;
        if self.segment >= rod.segment_count() {
            return Err(Error::invalid(format!(
                "anchor segment {} out of range for rod {} ({} segments)",
                self.segment,
                self.rod,
                rod.segment_count()
            )));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::invalid(format!("anchor barycentric coordinate {} outside [0, 1]", self.beta)));
        }
        if !self.position.is_finite() || !self.direction.is_finite() || self.direction.norm() == 0.0 {
            return Err(Error::invalid("anchor target must be finite with a nonzero direction"));
        }
        Ok(())
    }

    /// Design entries `(p_a, m_a)`.
    pub fn design(&self) -> [f64; 6] {
        let (p, m) = (self.position, self.direction);
        [p.x, p.y, p.z, m.x, m.y, m.z]
    }

    pub fn with_design(&self, u: &[f64]) -> Anchor {
        Anchor { position: V3::new(u[0], u[1], u[2]), direction: V3::new(u[3], u[4], u[5]), ..*self }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RodEnd {
    pub rod: usize,
    /// `false` for the rod's first vertex, `true` for its last.
    pub at_end: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Joint {
    pub rest_position: V3,
    pub ends: Vec<RodEnd>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rod {
    pub start_joint: usize,
    pub end_joint: usize,
    pub rest_points: Vec<V3>,
    pub rest_lengths: Vec<f64>,
    /// Material curvatures `(κ1, κ2)` at interior vertices `1..n`.
    pub rest_kappa: Vec<[f64; 2]>,
    pub rest_twist: Vec<f64>,
    /// Unit rest directions of the two terminal segments pointing away from
    /// their joints, in the joint's rest frame.
    pub arm_directions: [V3; 2],
}

impl Rod {
    pub fn segment_count(&self) -> usize {
        self.rest_lengths.len()
    }

    pub fn free_vertex_count(&self) -> usize {
        self.segment_count() - 3
    }

    pub fn free_angle_count(&self) -> usize {
        self.segment_count() - 2
    }

    pub fn dof_count(&self) -> usize {
        2 + 3 * self.free_vertex_count() + self.free_angle_count()
    }

    /// Average rest length of the two segments meeting at vertex `i`.
    pub fn vertex_length(&self, i: usize) -> f64 {
        0.5 * (self.rest_lengths[i - 1] + self.rest_lengths[i])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RodNetwork {
    pub rods: Vec<Rod>,
    /// One joint per tiling corner, with the same index.
    pub joints: Vec<Joint>,
    pub dofs: DofMap,
}

/// Offsets of every generalized coordinate block.
#[derive(Clone, Debug, PartialEq)]
pub struct DofMap {
    pub joint_count: usize,
    pub rod_offsets: Vec<usize>,
    pub len: usize,
}

impl DofMap {
    fn new(joints: usize, rods: &[Rod]) -> Self {
        let mut offset = 6 * joints;
        let mut rod_offsets = Vec::with_capacity(rods.len());
        for r in rods {
            rod_offsets.push(offset);
            offset += r.dof_count();
        }
        Self { joint_count: joints, rod_offsets, len: offset }
    }

    pub fn joint_position(&self, j: usize) -> usize {
        6 * j
    }

    pub fn joint_rotation(&self, j: usize) -> usize {
        6 * j + 3
    }

    /// Arm length of the start (`at_end = false`) or end joint.
    pub fn arm_length(&self, rod: usize, at_end: bool) -> usize {
        self.rod_offsets[rod] + usize::from(at_end)
    }

    /// First coordinate of free vertex `k` (`2 ≤ k ≤ n-2`).
    pub fn free_vertex(&self, rod: usize, k: usize) -> usize {
        self.rod_offsets[rod] + 2 + 3 * (k - 2)
    }

    /// Twist angle of interior segment `j` (`1 ≤ j ≤ n-2`).
    pub fn angle(&self, network: &RodNetwork, rod: usize, j: usize) -> usize {
        self.rod_offsets[rod] + 2 + 3 * network.rods[rod].free_vertex_count() + (j - 1)
    }
}

impl RodNetwork {
    pub fn dof_count(&self) -> usize {
        self.dofs.len
    }

    pub fn connection_count(&self) -> usize {
        self.joints.len()
    }

    /// Distinct vertices: joints followed by each rod's vertices `1..n`.
    pub fn vertex_count(&self) -> usize {
        self.joints.len() + self.rods.iter().map(|r| r.segment_count() - 1).sum::<usize>()
    }

    pub fn segment_count(&self) -> usize {
        self.rods.iter().map(Rod::segment_count).sum()
    }

    pub fn rest_state(&self) -> State {
        State {
            joints: self.joints.iter().map(|j| JointState { position: j.rest_position, orientation: Quat::IDENTITY }).collect(),
            rods: self
                .rods
                .iter()
                .map(|r| {
                    let n = r.segment_count();
                    RodState {
                        arm_lengths: [r.rest_lengths[0], r.rest_lengths[n - 1]],
                        free_points: r.rest_points[2..n - 1].to_vec(),
                        angles: vec![0.0; n - 2],
                        reference_d1: vec![V3::Z; n - 2],
                    }
                })
                .collect(),
        }
    }

    /// Extent of the rest geometry along x and y.
    pub fn rest_extent(&self) -> [f64; 2] {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in self.rods.iter().flat_map(|r| r.rest_points.iter()) {
            lo = [lo[0].min(p.x), lo[1].min(p.y)];
            hi = [hi[0].max(p.x), hi[1].max(p.y)];
        }
        [hi[0] - lo[0], hi[1] - lo[1]]
    }
}

/// Builds one rod per pattern polyline and one rigid joint per tiling corner.
///
/// Stiffness is not baked in; material parameters are supplied when the
/// energy is evaluated so that the same network serves every fit iteration.
pub fn assemble_network(pattern: &PatternGeometry) -> Result<RodNetwork> {
    let mut joints: Vec<Joint> = pattern
        .vertices
        .iter()
        .map(|p| Joint { rest_position: V3::new(p[0], p[1], 0.0), ends: Vec::new() })
        .collect();
    let mut rods = Vec::with_capacity(pattern.polylines.len());
    for (e, poly) in pattern.polylines.iter().enumerate() {
        let [a, b] = pattern.edges[e];
        let n = poly.len().saturating_sub(1);
        if n < MIN_ROD_SEGMENTS {
            return Err(Error::invalid(format!(
                "rod {e} has {n} segments; at least {MIN_ROD_SEGMENTS} are needed (use more subdivisions)"
            )));
        }
        let pts: Vec<V3> = poly.iter().map(|p| V3::new(p[0], p[1], 0.0)).collect();
        let lengths: Vec<f64> = pts.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
        if let Some(k) = lengths.iter().position(|l| *l <= crate::pattern::ZERO_LENGTH) {
            return Err(Error::invalid(format!("rod {e} segment {k} has zero length; run postprocess first")));
        }
        if (pts[0] - joints[a].rest_position).max_abs() > 1e-9 || (pts[n] - joints[b].rest_position).max_abs() > 1e-9 {
            return Err(Error::invalid(format!("rod {e} endpoints do not match its tiling corners")));
        }
        let tangents: Vec<V3> = pts.windows(2).map(|w| (w[1] - w[0]).normalized()).collect();
        let mut rest_kappa = Vec::with_capacity(n - 1);
        let mut rest_twist = Vec::with_capacity(n - 1);
        for i in 1..n {
            let (e0, e1) = (pts[i] - pts[i - 1], pts[i + 1] - pts[i]);
            let f0 = kernels::material_frame(tangents[i - 1], V3::Z, 0.0);
            let f1 = kernels::material_frame(tangents[i], V3::Z, 0.0);
            rest_kappa.push(kernels::material_curvature(e0, e1, f0, f1));
            rest_twist.push(kernels::reference_twist(V3::Z, tangents[i - 1], V3::Z, tangents[i]));
        }
        joints[a].ends.push(RodEnd { rod: e, at_end: false });
        joints[b].ends.push(RodEnd { rod: e, at_end: true });
        rods.push(Rod {
            start_joint: a,
            end_joint: b,
            arm_directions: [tangents[0], -tangents[n - 1]],
            rest_points: pts,
            rest_lengths: lengths,
            rest_kappa,
            rest_twist,
        });
    }
    let dofs = DofMap::new(joints.len(), &rods);
    Ok(RodNetwork { rods, joints, dofs })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointState {
    pub position: V3,
    pub orientation: Quat,
}

impl JointState {
    /// Material direction of the joint (rest plane normal carried along).
    pub fn normal(&self) -> V3 {
        self.orientation.rotate(V3::Z)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RodState {
    pub arm_lengths: [f64; 2],
    /// Vertices `2..=n-2`.
    pub free_points: Vec<V3>,
    /// Twist of interior segments `1..=n-2`.
    pub angles: Vec<f64>,
    /// Reference first director of interior segments `1..=n-2`.
    pub reference_d1: Vec<V3>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub joints: Vec<JointState>,
    pub rods: Vec<RodState>,
}

/// Material frame of one segment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentFrame {
    pub tangent: V3,
    /// Reference director the twist angle is measured from.
    pub reference: V3,
    pub angle: f64,
    pub m1: V3,
    pub m2: V3,
}

impl State {
    pub fn check(&self, network: &RodNetwork) -> Result<()> {
        if self.joints.len() != network.joints.len() || self.rods.len() != network.rods.len() {
            return Err(Error::invalid("state does not match the network layout"));
        }
        for (r, (rs, rod)) in self.rods.iter().zip(&network.rods).enumerate() {
            let n = rod.segment_count();
            if rs.free_points.len() != n - 3 || rs.angles.len() != n - 2 || rs.reference_d1.len() != n - 2 {
                return Err(Error::invalid(format!("state of rod {r} does not match its segment count")));
            }
        }
        Ok(())
    }

    /// World position of the terminal arm direction of a rod end.
    pub fn arm_direction(&self, network: &RodNetwork, rod: usize, at_end: bool) -> V3 {
        let r = &network.rods[rod];
        let joint = if at_end { r.end_joint } else { r.start_joint };
        self.joints[joint].orientation.rotate(r.arm_directions[usize::from(at_end)])
    }

    /// Vertex `k` of rod `rod`.
    pub fn point(&self, network: &RodNetwork, rod: usize, k: usize) -> V3 {
        let r = &network.rods[rod];
        let n = r.segment_count();
        let rs = &self.rods[rod];
        match k {
            0 => self.joints[r.start_joint].position,
            1 => self.joints[r.start_joint].position + self.arm_direction(network, rod, false) * rs.arm_lengths[0],
            k if k == n => self.joints[r.end_joint].position,
            k if k == n - 1 => self.joints[r.end_joint].position + self.arm_direction(network, rod, true) * rs.arm_lengths[1],
            k => rs.free_points[k - 2],
        }
    }

    pub fn rod_points(&self, network: &RodNetwork, rod: usize) -> Vec<V3> {
        (0..=network.rods[rod].segment_count()).map(|k| self.point(network, rod, k)).collect()
    }

    pub fn segment_frame(&self, network: &RodNetwork, rod: usize, j: usize) -> SegmentFrame {
        let n = network.rods[rod].segment_count();
        let t = (self.point(network, rod, j + 1) - self.point(network, rod, j)).normalized();
        let r = &network.rods[rod];
        let (reference, angle) = if j == 0 {
            (self.joints[r.start_joint].normal(), 0.0)
        } else if j == n - 1 {
            (self.joints[r.end_joint].normal(), 0.0)
        } else {
            (self.rods[rod].reference_d1[j - 1], self.rods[rod].angles[j - 1])
        };
        let [m1, m2] = kernels::material_frame(t, reference, angle);
        SegmentFrame { tangent: t, reference, angle, m1, m2 }
    }

    /// Reads the generalized coordinates that are stored directly (arm
    /// lengths, free points, angles); joint entries are left at zero since
    /// they only exist as increments.
    pub fn flat_rod_coordinates(&self, network: &RodNetwork) -> Vec<f64> {
        let mut x = vec![0.0; network.dof_count()];
        for (r, rs) in self.rods.iter().enumerate() {
            let o = network.dofs.rod_offsets[r];
            x[o] = rs.arm_lengths[0];
            x[o + 1] = rs.arm_lengths[1];
            for (k, p) in rs.free_points.iter().enumerate() {
                x[o + 2 + 3 * k..o + 5 + 3 * k].copy_from_slice(&p.to_array());
            }
            let a = o + 2 + 3 * rs.free_points.len();
            x[a..a + rs.angles.len()].copy_from_slice(&rs.angles);
        }
        x
    }

    /// Moves the state along a generalized increment: positions and lengths
    /// are added, joint rotations are composed on the left, reference
    /// directors are parallel transported to the new segment tangents.
    pub fn apply_step(&self, network: &RodNetwork, delta: &[f64]) -> State {
        debug_assert_eq!(delta.len(), network.dof_count());
        let old_tangents: Vec<Vec<V3>> = (0..network.rods.len())
            .map(|r| {
                let n = network.rods[r].segment_count();
                (1..n - 1).map(|j| (self.point(network, r, j + 1) - self.point(network, r, j)).normalized()).collect()
            })
            .collect();
        let mut next = self.clone();
        for (j, js) in next.joints.iter_mut().enumerate() {
            let o = network.dofs.joint_position(j);
            js.position += V3::new(delta[o], delta[o + 1], delta[o + 2]);
            let w = V3::new(delta[o + 3], delta[o + 4], delta[o + 5]);
            js.orientation = Quat::from_rotation_vector(w).mul(js.orientation).normalized();
        }
        for (r, rs) in next.rods.iter_mut().enumerate() {
            let o = network.dofs.rod_offsets[r];
            rs.arm_lengths[0] += delta[o];
            rs.arm_lengths[1] += delta[o + 1];
            for (k, p) in rs.free_points.iter_mut().enumerate() {
                *p += V3::new(delta[o + 2 + 3 * k], delta[o + 3 + 3 * k], delta[o + 4 + 3 * k]);
            }
            let a = o + 2 + 3 * rs.free_points.len();
            for (k, th) in rs.angles.iter_mut().enumerate() {
                *th += delta[a + k];
            }
        }
        for r in 0..network.rods.len() {
            let n = network.rods[r].segment_count();
            for j in 1..n - 1 {
                let t_new = (next.point(network, r, j + 1) - next.point(network, r, j)).normalized();
                let t_old = old_tangents[r][j - 1];
                let d = transport(next.rods[r].reference_d1[j - 1], t_old, t_new);
                // remove roundoff drift off the tangent plane
                next.rods[r].reference_d1[j - 1] = (d - t_new * d.dot(t_new)).normalized();
            }
        }
        next
    }

    /// Rest state with a small random out-of-plane offset of every joint and
    /// free vertex, used to break the planar symmetry before buckling.
    pub fn perturbed(network: &RodNetwork, state: &State, amplitude: f64, seed: u64) -> State {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut delta = vec![0.0; network.dof_count()];
        for j in 0..network.joints.len() {
            delta[network.dofs.joint_position(j) + 2] = amplitude * rng.gen_range(-1.0..1.0);
        }
        for (r, rod) in network.rods.iter().enumerate() {
            for k in 2..rod.segment_count() - 1 {
                delta[network.dofs.free_vertex(r, k) + 2] = amplitude * rng.gen_range(-1.0..1.0);
            }
        }
        state.apply_step(network, &delta)
    }

    /// Applies the rigid motion `x ↦ R x + t` to the whole state.
    pub fn rigidly_moved(&self, rotation: Quat, translation: V3) -> State {
        let mut s = self.clone();
        for j in &mut s.joints {
            j.position = rotation.rotate(j.position) + translation;
            j.orientation = rotation.mul(j.orientation).normalized();
        }
        for r in &mut s.rods {
            for p in &mut r.free_points {
                *p = rotation.rotate(*p) + translation;
            }
            for d in &mut r.reference_d1 {
                *d = rotation.rotate(*d);
            }
        }
        s
    }

    /// All distinct vertices, ordered as in [`RodNetwork::vertex_count`].
    pub fn vertices(&self, network: &RodNetwork) -> Vec<V3> {
        let mut v: Vec<V3> = self.joints.iter().map(|j| j.position).collect();
        for r in 0..network.rods.len() {
            for k in 1..network.rods[r].segment_count() {
                v.push(self.point(network, r, k));
            }
        }
        v
    }

    /// First material director of every segment, rods in order.
    pub fn material_directions(&self, network: &RodNetwork) -> Vec<V3> {
        (0..network.rods.len())
            .flat_map(|r| (0..network.rods[r].segment_count()).map(move |j| (r, j)))
            .map(|(r, j)| self.segment_frame(network, r, j).m1)
            .collect()
    }
}

/// Joint positions and material directions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConnectionSnapshot {
    pub positions: Vec<V3>,
    pub directions: Vec<V3>,
}

impl ConnectionSnapshot {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

pub fn snapshot_connections(network: &RodNetwork, state: &State) -> ConnectionSnapshot {
    debug_assert_eq!(state.joints.len(), network.joints.len());
    ConnectionSnapshot {
        positions: state.joints.iter().map(|j| j.position).collect(),
        directions: state.joints.iter().map(JointState::normal).collect(),
    }
}

/// `(1-β) p_i + β p_{i+1}` on the anchored segment.
pub fn anchor_point(network: &RodNetwork, state: &State, anchor: &Anchor) -> Result<V3> {
    anchor.validate(network)?;
    let a = state.point(network, anchor.rod, anchor.segment);
    let b = state.point(network, anchor.rod, anchor.segment + 1);
    Ok(a * (1.0 - anchor.beta) + b * anchor.beta)
}

/// Material direction `m` of the anchored segment.
pub fn anchor_material(network: &RodNetwork, state: &State, anchor: &Anchor) -> Result<V3> {
    anchor.validate(network)?;
    Ok(state.segment_frame(network, anchor.rod, anchor.segment).m1)
}

/// Anchor that is satisfied by `state`: target position and direction are
/// copied from the current configuration.
pub fn anchor_at(network: &RodNetwork, state: &State, rod: usize, segment: usize, beta: f64) -> Result<Anchor> {
    let mut a = Anchor { rod, segment, beta, position: V3::ZERO, direction: V3::Z };
    a.position = anchor_point(network, state, &a)?;
    a.direction = anchor_material(network, state, &a)?;
    Ok(a)
}
