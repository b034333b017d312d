//! Float functions missing from `core`, backed by libm.

// unused when a dependency links std and the inherent methods win
#[allow(dead_code)]
pub(crate) trait FloatExt {
    fn sqrt(self) -> f64;
    fn powi(self, n: i32) -> f64;
    fn fract(self) -> f64;
}

impl FloatExt for f64 {
    fn sqrt(self) -> f64 {
        libm::sqrt(self)
    }
    fn powi(self, n: i32) -> f64 {
        libm::pow(self, n as f64)
    }
    fn fract(self) -> f64 {
        self - libm::trunc(self)
    }
}
