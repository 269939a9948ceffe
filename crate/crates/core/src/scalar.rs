//! Floating-point scalar abstraction shared by features, learners and cost models.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumCast, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point: f32 or f64.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumCast
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Width tag written into model files so a model is never loaded at the wrong precision.
    const TAG: u8;

    fn from_f64_lossy(v: f64) -> Self {
        <Self as NumCast>::from(v).unwrap_or_else(Self::nan)
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {
    const TAG: u8 = 4;
}

impl Scalar for f64 {
    const TAG: u8 = 8;
}
