//! The 8-way direction set shared by graph edges, sign cues and actions.
//!
//! Index `i` maps to the relative heading `i·π/4` wrapped into `[-π, π)`,
//! i.e. the fixed order `{0, π/4, π/2, 3π/4, π, -3π/4, -π/2, -π/4}`.
//! Headings are counterclockwise from +x (east).

use core::f64::consts::{FRAC_PI_4, PI};
use core::fmt;

use crate::error::{Error, Result};
use crate::math::{self, Point2};

const HEADINGS: [f64; 8] = [
    0.0,
    FRAC_PI_4,
    2.0 * FRAC_PI_4,
    3.0 * FRAC_PI_4,
    PI,
    -3.0 * FRAC_PI_4,
    -2.0 * FRAC_PI_4,
    -FRAC_PI_4,
];

// cos/sin of each heading, used by the observation model hot loop.
pub(crate) const COS: [f64; 8] = [
    1.0,
    core::f64::consts::FRAC_1_SQRT_2,
    0.0,
    -core::f64::consts::FRAC_1_SQRT_2,
    -1.0,
    -core::f64::consts::FRAC_1_SQRT_2,
    0.0,
    core::f64::consts::FRAC_1_SQRT_2,
];
pub(crate) const SIN: [f64; 8] = [
    0.0,
    core::f64::consts::FRAC_1_SQRT_2,
    1.0,
    core::f64::consts::FRAC_1_SQRT_2,
    0.0,
    -core::f64::consts::FRAC_1_SQRT_2,
    -1.0,
    -core::f64::consts::FRAC_1_SQRT_2,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct DirectionCategory(u8);

impl DirectionCategory {
    pub const COUNT: usize = 8;
    pub const AHEAD: DirectionCategory = DirectionCategory(0);
    pub const LEFT: DirectionCategory = DirectionCategory(2);
    pub const BEHIND: DirectionCategory = DirectionCategory(4);
    pub const RIGHT: DirectionCategory = DirectionCategory(6);

    pub fn new(index: u8) -> Result<Self> {
        if (index as usize) < Self::COUNT {
            Ok(Self(index))
        } else {
            Err(Error::InvalidArgument(alloc::format!(
                "direction index {index} outside 0..8"
            )))
        }
    }

    pub fn all() -> impl Iterator<Item = DirectionCategory> + Clone {
        (0..Self::COUNT as u8).map(DirectionCategory)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Relative heading in radians from the fixed table.
    pub fn relative_heading(self) -> f64 {
        HEADINGS[self.0 as usize]
    }

    pub fn unit_vector(self) -> Point2 {
        Point2::new(COS[self.0 as usize], SIN[self.0 as usize])
    }

    /// Number of 45° steps between two categories, in `0..=4`.
    pub fn steps_between(self, other: DirectionCategory) -> u8 {
        let d = (self.0 as i16 - other.0 as i16).rem_euclid(8) as u8;
        d.min(8 - d)
    }

    /// Rotates by `steps` × 45° counterclockwise.
    pub fn rotated(self, steps: i32) -> DirectionCategory {
        DirectionCategory((self.0 as i32 + steps).rem_euclid(8) as u8)
    }

    /// Nearest category to `theta` (wrapped into `[-π, π)`). Exact midpoints
    /// between two categories resolve to the lower index.
    pub fn discretize(theta: f64) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::InvalidArgument(alloc::format!(
                "cannot discretize non-finite angle {theta}"
            )));
        }
        let k = math::wrap_angle(theta) / FRAC_PI_4;
        let lo = math::floor(k);
        let frac = k - lo;
        let lo_idx = (lo as i64).rem_euclid(8) as u8;
        let hi_idx = (lo as i64 + 1).rem_euclid(8) as u8;
        let idx = if (frac - 0.5).abs() <= 1e-12 {
            lo_idx.min(hi_idx)
        } else if frac < 0.5 {
            lo_idx
        } else {
            hi_idx
        };
        Ok(DirectionCategory(idx))
    }
}

impl fmt::Display for DirectionCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl TryFrom<u8> for DirectionCategory {
    type Error = Error;

    fn try_from(value: u8) -> Result<Self> {
        DirectionCategory::new(value)
    }
}
