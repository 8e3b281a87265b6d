use std::fmt;

/// Floating-point scalar used by the continuous solver stages.
///
/// Implemented for `f32` and `f64`. The `num_traits::Float` bound supplies
/// the arithmetic and `log2`/`ln`; casts from literal defaults go through
/// `num_traits::NumCast`.
pub trait Scalar: num_traits::Float + fmt::Debug + fmt::Display + 'static {
    /// Lossy conversion from `f64`, used for configuration defaults.
    fn from_f64(x: f64) -> Self {
        num_traits::NumCast::from(x).expect("finite f64 converts to any float scalar")
    }

    /// Lossy conversion to `f64`, used for reporting.
    fn to_f64(self) -> f64 {
        num_traits::NumCast::from(self).expect("float scalar converts to f64")
    }

    /// Exact conversion from a small unsigned count.
    fn from_count(n: usize) -> Self {
        Self::from_f64(n as f64)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
