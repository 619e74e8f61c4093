//! Floating-point scalar abstraction shared by every numeric module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use ndarray::NdFloat;
use num_traits::{FromPrimitive, ToPrimitive};

/// A real scalar usable for storage and computation: `f32` or `f64`.
///
/// Besides the arithmetic bounds it carries the little-endian byte codec used
/// by the NPY reader/writer, so a tensor of any `Real` can be persisted
/// without a separate element trait.
pub trait Real:
    NdFloat + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// NPY type descriptor, e.g. `<f8`.
    const DESCR: &'static str;
    /// Width of one element in bytes.
    const WIDTH: usize;

    fn from_le_slice(bytes: &[u8]) -> Self;
    fn extend_le(self, out: &mut Vec<u8>);

    /// Lossy conversion from `f64`. Panics never; out-of-range values saturate to infinity.
    fn of(v: f64) -> Self {
        Self::from_f64(v).unwrap_or_else(Self::infinity)
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Lossy conversion between two scalar types.
    fn cast<T: Real>(self) -> T {
        T::of(self.as_f64())
    }
}

impl Real for f32 {
    const DESCR: &'static str = "<f4";
    const WIDTH: usize = 4;

    fn from_le_slice(bytes: &[u8]) -> Self {
        f32::from_le_bytes([bytes[0], bytes[1], bytes[2], bytes[3]])
    }

    fn extend_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
}

impl Real for f64 {
    const DESCR: &'static str = "<f8";
    const WIDTH: usize = 8;

    fn from_le_slice(bytes: &[u8]) -> Self {
        let mut b = [0u8; 8];
        b.copy_from_slice(&bytes[..8]);
        f64::from_le_bytes(b)
    }

    fn extend_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
}
