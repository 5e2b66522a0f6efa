//! Named target deformations for the four corner anchors of a flat pattern.
//!
//! Each scenario maps a rest point `(x, y, 0)` to a point on a surface and
//! gives the surface normal there; a corner anchor targets the mapped joint
//! position with the normal as material direction. Because the anchor sits
//! on a terminal segment, its material vector at rest is the joint normal
//! `ẑ`, so a zero amount leaves the rest state satisfied.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::elastic::corner_anchor_sites;
use crate::error::{Error, Result};
use crate::geometry::V3;
use crate::network::{anchor_at, Anchor, RodNetwork};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    /// Spherical cap; radial distances from the center are kept.
    Dome,
    /// Hyperbolic paraboloid `z = c (x - x0)(y - y0)`.
    Saddle,
    /// Cylinder with axis along `y`; distances along `x` are kept.
    Tunnel,
    /// Twist about the `x` axis proportional to `x - x0`.
    Manta,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [Scenario::Dome, Scenario::Saddle, Scenario::Tunnel, Scenario::Manta];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Dome => "dome",
            Scenario::Saddle => "saddle",
            Scenario::Tunnel => "tunnel",
            Scenario::Manta => "manta",
        }
    }

    /// Image and unit normal of the rest point `p` for a pattern centered at
    /// `center` with half extents `half`. `amount = 1` is the nominal
    /// deformation; `0` is the identity.
    pub fn map(self, p: V3, center: V3, half: [f64; 2], amount: f64) -> (V3, V3) {
        let (dx, dy) = (p.x - center.x, p.y - center.y);
        match self {
            Scenario::Dome => {
                let rho = dx.hypot(dy);
                let reach = half[0].hypot(half[1]);
                let k = 0.6 * amount / reach;
                if rho == 0.0 || k == 0.0 {
                    return (V3::new(p.x, p.y, 0.0), V3::Z);
                }
                let (s, c) = (k * rho).sin_cos();
                let (ux, uy) = (dx / rho, dy / rho);
                let r = s / k;
                (V3::new(center.x + r * ux, center.y + r * uy, (c - 1.0) / k), V3::new(s * ux, s * uy, c))
            }
            Scenario::Saddle => {
                let c = 0.25 * amount / half[0].min(half[1]);
                (V3::new(p.x, p.y, c * dx * dy), V3::new(-c * dy, -c * dx, 1.0).normalized())
            }
            Scenario::Tunnel => {
                let k = 0.8 * amount / half[0];
                if k == 0.0 {
                    return (V3::new(p.x, p.y, 0.0), V3::Z);
                }
                let (s, c) = (k * dx).sin_cos();
                (V3::new(center.x + s / k, p.y, (c - 1.0) / k), V3::new(s, 0.0, c))
            }
            Scenario::Manta => {
                let rate = 0.5 * amount / half[0];
                let (s, c) = (rate * dx).sin_cos();
                (V3::new(p.x, center.y + dy * c, dy * s), V3::new(-dy * rate, -s, c).normalized())
            }
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown scenario '{s}' (expected dome, saddle, tunnel or manta)")))
    }
}

/// Center and half extents of the rest joint positions.
pub fn joint_frame(network: &RodNetwork) -> (V3, [f64; 2]) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for j in &network.joints {
        let p = j.rest_position;
        lo = [lo[0].min(p.x), lo[1].min(p.y)];
        hi = [hi[0].max(p.x), hi[1].max(p.y)];
    }
    let center = V3::new(0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1]), 0.0);
    let half = [(0.5 * (hi[0] - lo[0])).max(1e-12), (0.5 * (hi[1] - lo[1])).max(1e-12)];
    (center, half)
}

/// Corner anchors of `network` satisfied by the rest state.
pub fn rest_corner_anchors(network: &RodNetwork) -> Result<Vec<Anchor>> {
    let rest = network.rest_state();
    corner_anchor_sites(network).into_iter().map(|(r, s, b)| anchor_at(network, &rest, r, s, b)).collect()
}

/// Corner anchors whose targets follow `scenario` at the given amount.
pub fn scenario_anchors(network: &RodNetwork, scenario: Scenario, amount: f64) -> Result<Vec<Anchor>> {
    let (center, half) = joint_frame(network);
    Ok(rest_corner_anchors(network)?
        .into_iter()
        .map(|a| {
            let (position, direction) = scenario.map(a.position, center, half, amount);
            Anchor { position, direction, ..a }
        })
        .collect())
}
