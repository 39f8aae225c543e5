use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TgdError};

/// Parameters `(q, alpha)` of the transmuted geometric distribution.
///
/// `q` is the geometric success-decay parameter and must lie strictly inside
/// `(0, 1)`. `alpha` is the transmutation parameter on the closed interval
/// `[-1, 1]`; the endpoints are the max/min of two geometric draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TgdParams {
    q: f64,
    alpha: f64,
}

impl TgdParams {
    pub fn new(q: f64, alpha: f64) -> Result<Self> {
        if !(q.is_finite() && q > 0.0 && q < 1.0) {
            return Err(TgdError::Domain(format!("q must lie in (0, 1), got {q}")));
        }
        if !(alpha.is_finite() && (-1.0..=1.0).contains(&alpha)) {
            return Err(TgdError::Domain(format!(
                "alpha must lie in [-1, 1], got {alpha}"
            )));
        }
        Ok(Self { q, alpha })
    }

    /// Geometric special case (`alpha = 0`).
    pub fn geometric(q: f64) -> Result<Self> {
        Self::new(q, 0.0)
    }

    #[inline]
    pub fn q(&self) -> f64 {
        self.q
    }

    #[inline]
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// True when `alpha` is strictly inside `(-1, 1)`.
    pub fn is_interior(&self) -> bool {
        self.alpha > -1.0 && self.alpha < 1.0
    }

    /// Distance to the nearest edge of the open box `(0,1) x (-1,1)`.
    pub fn boundary_distance(&self) -> f64 {
        self.q
            .min(1.0 - self.q)
            .min(1.0 + self.alpha)
            .min(1.0 - self.alpha)
    }

    /// Clamp into the open box shrunk by `eps` on every side.
    pub fn clamped(q: f64, alpha: f64, eps: f64) -> Self {
        Self {
            q: q.clamp(eps, 1.0 - eps),
            alpha: alpha.clamp(-1.0 + eps, 1.0 - eps),
        }
    }
}

/// Seed for a reproducible sample stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Counter-based child seed for `(cell, replicate)` under this master seed.
    pub fn derive(self, cell: u64, replicate: u64) -> RngSeed {
        let mut h = splitmix64(self.0);
        h = splitmix64(h ^ cell.wrapping_mul(0xD1B5_4A32_D192_ED03));
        h = splitmix64(h ^ replicate.wrapping_mul(0x8CB9_2BA7_2F3D_8DD7));
        RngSeed(h)
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
