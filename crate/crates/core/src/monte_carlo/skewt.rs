//! Azzalini-Capitanio skew-t density.

use statrs::distribution::{Continuous, ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Skew-t parameters: location, scale, shape (skewness), degrees of
/// freedom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkewT {
    pub location: f64,
    pub scale: f64,
    pub shape: f64,
    pub df: f64,
}

impl SkewT {
    pub fn new(location: f64, scale: f64, shape: f64, df: f64) -> Result<Self> {
        if scale.is_nan() || scale <= 0.0 || df.is_nan() || df <= 0.0 {
            return Err(Error::config(format!(
                "skew-t requires positive scale and df, got scale {scale}, df {df}"
            )));
        }
        Ok(SkewT { location, scale, shape, df })
    }

    /// Unnormalized on a truncated support; the full-line density is
    /// `2/w t_v(z) T_{v+1}(a z sqrt((v+1)/(v+z^2)))`.
    pub fn pdf(&self, x: f64) -> f64 {
        let z = (x - self.location) / self.scale;
        let t = StudentsT::new(0.0, 1.0, self.df).expect("validated df");
        let t1 = StudentsT::new(0.0, 1.0, self.df + 1.0).expect("validated df");
        let w = self.shape * z * ((self.df + 1.0) / (self.df + z * z)).sqrt();
        2.0 / self.scale * t.pdf(z) * t1.cdf(w)
    }
}
