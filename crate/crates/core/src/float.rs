//! Float math that works without `std`.
//!
//! `f64::exp` and friends live in `std`, not `core`. When the `std` feature
//! is off, this extension trait routes them through `libm` so call sites keep
//! the usual method syntax.

#[cfg(not(feature = "std"))]
pub(crate) trait FloatExt {
    fn exp(self) -> f64;
    fn ln(self) -> f64;
    fn sqrt(self) -> f64;
    fn powf(self, exp: f64) -> f64;
    fn powi(self, exp: i32) -> f64;
}

#[cfg(not(feature = "std"))]
impl FloatExt for f64 {
    #[inline]
    fn exp(self) -> f64 {
        libm::exp(self)
    }

    #[inline]
    fn ln(self) -> f64 {
        libm::log(self)
    }

    #[inline]
    fn sqrt(self) -> f64 {
        libm::sqrt(self)
    }

    #[inline]
    fn powf(self, exp: f64) -> f64 {
        libm::pow(self, exp)
    }

    #[inline]
    fn powi(self, exp: i32) -> f64 {
        libm::pow(self, exp as f64)
    }
}
