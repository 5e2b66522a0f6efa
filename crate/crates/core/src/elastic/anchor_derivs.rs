//! Closed-form first and second derivatives of the anchor residuals.
//!
//! The direction residual is `φ(m, m_a)` where `m = d1 cos θ + d2 sin θ` is
//! the material vector of the anchored segment with edge vector `e`. The
//! reference directors `d1, d2` follow `e` by parallel transport, so at the
//! current configuration `∂m/∂e = -t mᵀ / ‖e‖`.
//!
//! With `s = ‖m × m_a‖` the helper vector
//! `z = (m (m·m_a) - m_a ‖m‖²) / s` is `‖m‖²` times the gradient of `φ` in `m`.
//!
//! The `e`-`e` block is the derivative of the Jacobian field along `e` with
//! the frame transported to each `e`; it is not symmetric. Its symmetric part
//! is the Hessian of `φ` in the transported chart.

use crate::error::{Error, Result};
use crate::geometry::{transport, M3, V3};

use super::kernels::{self, DEGENERATE_CROSS};

/// Segment geometry and target seen by one anchor direction term.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DirectionConfig {
    pub e: V3,
    /// Unit reference director, perpendicular to `e`.
    pub d1: V3,
    pub theta: f64,
    pub m_a: V3,
}

/// Jacobian blocks of the direction residual.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DirectionJacobian {
    pub de: V3,
    pub dtheta: f64,
    pub dm_a: V3,
}

/// Second-derivative blocks of the direction residual. `ee[i][j]` is the
/// derivative of the `i`-th entry of the `e` Jacobian along `e_j`; `e_ma`
/// likewise along `m_a`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DirectionHessian {
    pub ee: M3,
    pub e_theta: V3,
    pub theta_theta: f64,
    pub e_ma: M3,
    pub theta_ma: V3,
}

impl DirectionConfig {
    pub fn tangent(&self) -> V3 {
        self.e.normalized()
    }

    pub fn d2(&self) -> V3 {
        self.tangent().cross(self.d1)
    }

    pub fn m(&self) -> V3 {
        self.d1 * self.theta.cos() + self.d2() * self.theta.sin()
    }

    pub fn dm_dtheta(&self) -> V3 {
        self.d2() * self.theta.cos() - self.d1 * self.theta.sin()
    }

    fn d2m_dtheta2(&self) -> V3 {
        -(self.d1 * self.theta.cos() + self.d2() * self.theta.sin())
    }

    pub fn phi(&self) -> f64 {
        kernels::phi(self.m(), self.m_a)
    }

    /// Same segment with edge `e_new`; the reference director is parallel
    /// transported to the new tangent.
    pub fn moved_edge(&self, e_new: V3) -> DirectionConfig {
        DirectionConfig { e: e_new, d1: transport(self.d1, self.tangent(), e_new.normalized()), ..*self }
    }

    fn cross_norm(&self) -> Result<f64> {
        let s = self.m().cross(self.m_a).norm();
        if s < DEGENERATE_CROSS {
            return Err(Error::Degenerate(format!("material direction parallel to the anchor target (‖m × m_a‖ = {s:.1e})")));
        }
        Ok(s)
    }
}

/// `∂r_pos/∂p_i`, `∂r_pos/∂p_{i+1}`, `∂r_pos/∂p_a` for `r_pos = (1-β) p_i + β p_{i+1} - p_a`.
pub fn jacobian_anchor_position(beta: f64) -> [M3; 3] {
    [M3::scaled_identity(1.0 - beta), M3::scaled_identity(beta), M3::scaled_identity(-1.0)]
}

/// `z = (m (m·m_a) - m_a ‖m‖²) / ‖m × m_a‖`.
pub fn z_vector(m: V3, m_a: V3) -> V3 {
    let s = m.cross(m_a).norm();
    (m * m.dot(m_a) - m_a * m.norm_squared()) * (1.0 / s)
}

/// `∂‖m × m_a‖/∂m`.
pub fn dcross_norm_dm(m: V3, m_a: V3) -> V3 {
    let s = m.cross(m_a).norm();
    (m * m_a.norm_squared() - m_a * m.dot(m_a)) * (1.0 / s)
}

/// `∂z/∂m`.
pub fn dz_dm(m: V3, m_a: V3) -> M3 {
    let s = m.cross(m_a).norm();
    let num = m * m.dot(m_a) - m_a * m.norm_squared();
    let dnum = M3::scaled_identity(m.dot(m_a)) + m.outer(m_a) - m_a.outer(m) * 2.0;
    dnum * (1.0 / s) - num.outer(dcross_norm_dm(m, m_a)) * (1.0 / (s * s))
}

/// `∂z/∂m_a`.
pub fn dz_dma(m: V3, m_a: V3) -> M3 {
    let s = m.cross(m_a).norm();
    let num = m * m.dot(m_a) - m_a * m.norm_squared();
    let ds = dcross_norm_dm(m_a, m);
    let dnum = m.outer(m) - M3::scaled_identity(m.norm_squared());
    dnum * (1.0 / s) - num.outer(ds) * (1.0 / (s * s))
}

/// `∂m/∂e = -t mᵀ / ‖e‖` at the current frame.
pub fn dm_de(cfg: &DirectionConfig) -> M3 {
    cfg.tangent().outer(cfg.m()) * (-1.0 / cfg.e.norm())
}

/// `∂t/∂e = (I - t tᵀ) / ‖e‖`.
pub fn dt_de(cfg: &DirectionConfig) -> M3 {
    let t = cfg.tangent();
    (M3::IDENTITY - t.outer(t)) * (1.0 / cfg.e.norm())
}

/// Jacobian of `φ(m, m_a)` with respect to the edge, the twist angle and the
/// target direction.
pub fn jacobian_anchor_direction(cfg: &DirectionConfig) -> Result<DirectionJacobian> {
    cfg.cross_norm()?;
    let (m, ma, t) = (cfg.m(), cfg.m_a, cfg.tangent());
    let z = z_vector(m, ma);
    let za = z_vector(ma, m);
    Ok(DirectionJacobian {
        de: m * (-z.dot(t) / cfg.e.norm()),
        dtheta: z.dot(cfg.dm_dtheta()),
        dm_a: za * (1.0 / ma.norm_squared()),
    })
}

/// Second-derivative blocks of `φ(m, m_a)`.
pub fn hessian_anchor_direction(cfg: &DirectionConfig) -> Result<DirectionHessian> {
    cfg.cross_norm()?;
    let (m, ma, t) = (cfg.m(), cfg.m_a, cfg.tangent());
    let len = cfg.e.norm();
    let z = z_vector(m, ma);
    let zt = z.dot(t);
    let dzm = dz_dm(m, ma);
    let dz_de = dzm.matmul(dm_de(cfg));
    let dz_dtheta = dzm.mul_vec(cfg.dm_dtheta());
    let dz_dma = dz_dma(m, ma);
    // tᵀ ∂z/∂e + zᵀ ∂t/∂e, as a row
    let row = dz_de.left_mul_vec(t) + dt_de(cfg).left_mul_vec(z);
    let ee = -(m.outer(row) + dm_de(cfg) * zt) * (1.0 / len) + m.outer(t) * (zt / (len * len));
    let e_theta = -(m * dz_dtheta.dot(t) + cfg.dm_dtheta() * zt) * (1.0 / len);
    let theta_theta = dz_dtheta.dot(cfg.dm_dtheta()) + z.dot(cfg.d2m_dtheta2());
    let e_ma = -m.outer(dz_dma.left_mul_vec(t)) * (1.0 / len);
    let theta_ma = dz_dma.left_mul_vec(cfg.dm_dtheta());
    Ok(DirectionHessian { ee, e_theta, theta_theta, e_ma, theta_ma })
}
