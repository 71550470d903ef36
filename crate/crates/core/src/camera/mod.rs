//! Generic polynomial fisheye camera model.
//!
//! The lens maps the incidence angle θ of a ray to a focal-normalized
//! radial distance
//!
//! ```text
//! r(θ) = k1·θ + k2·θ³ + k3·θ⁵ + k4·θ⁷ + k5·θ⁹
//! ```
//!
//! and the pixel follows from the polar angle φ, which the projection leaves
//! untouched: `u = u0 + f·r·cos φ`, `v = v0 + f·r·sin φ`. Going back from a
//! pixel requires solving the polynomial for θ, done here by a safeguarded
//! Newton iteration.

mod calibrate;
pub(crate) mod poly;

use std::f64::consts::FRAC_PI_2;

pub use calibrate::{
    calibrate, CalibrationOptions, CalibrationResult, Correspondence, DEFAULT_MAX_ITERATIONS, MIN_CORRESPONDENCES,
    MIN_DISTINCT_RADII,
};

/// Number of odd-power coefficients in the radial polynomial.
pub const NUM_COEFFS: usize = 5;

/// Largest supported incidence angle; rays at or beyond the horizon are rejected.
pub const THETA_MAX: f64 = FRAC_PI_2;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CameraError {
    #[error("invalid model parameter {name}: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("radial polynomial is not increasing on [0, pi/2] (min slope {min_slope:e})")]
    NotMonotonic { min_slope: f64 },
    #[error("incidence angle {0} outside [0, pi/2]")]
    AngleOutOfRange(f64),
    #[error("radial distance {r} outside the image circle (max {r_max})")]
    OutsideImageCircle { r: f64, r_max: f64 },
    #[error("point with depth {0} is not in front of the camera")]
    BehindCamera(f64),
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("calibration: {0}")]
    Calibration(String),
    #[error("calibration did not converge within {iterations} iterations (best rms {best_rms_px} px)")]
    NoConvergence { iterations: usize, best_rms_px: f64 },
}

/// A pixel location.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ImagePoint {
    pub u: f64,
    pub v: f64,
}

impl ImagePoint {
    pub const fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }

    pub fn distance(&self, other: &ImagePoint) -> f64 {
        (self.u - other.u).hypot(self.v - other.v)
    }

    /// Rotate about `pivot` by `angle` radians (counter-clockwise in the u-v plane).
    pub fn rotate_about(&self, pivot: &ImagePoint, angle: f64) -> ImagePoint {
        if angle == 0.0 {
            return *self;
        }
        let (s, c) = angle.sin_cos();
        let du = self.u - pivot.u;
        let dv = self.v - pivot.v;
        ImagePoint::new(pivot.u + c * du - s * dv, pivot.v + s * du + c * dv)
    }
}

/// A point in the camera frame, meters. Z runs along the optical axis
/// towards the floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl WorldPoint {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }
}

/// A back-projected pixel: focal-normalized coordinates plus the ray angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedRay {
    pub x: f64,
    pub y: f64,
    pub r: f64,
    /// Incidence angle from the optical axis, `[0, π/2]`.
    pub theta: f64,
    /// Polar angle, `(−π, π]`; 0 at the principal point.
    pub phi: f64,
}

/// Intrinsics of the polynomial fisheye model, plus the optional mounting
/// altitude needed to put rays on the floor.
///
/// Immutable after construction; the constructor certifies that the radial
/// polynomial is strictly increasing on `[0, π/2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisheyeModel {
    f: f64,
    u0: f64,
    v0: f64,
    k: [f64; NUM_COEFFS],
    altitude: Option<f64>,
}

impl FisheyeModel {
    pub fn new(
        f: f64,
        u0: f64,
        v0: f64,
        k: [f64; NUM_COEFFS],
        altitude: Option<f64>,
    ) -> Result<Self, CameraError> {
        if !(f.is_finite() && f > 0.0) {
            return Err(CameraError::InvalidParameter { name: "f", value: f });
        }
        if !u0.is_finite() {
            return Err(CameraError::InvalidParameter { name: "u0", value: u0 });
        }
        if !v0.is_finite() {
            return Err(CameraError::InvalidParameter { name: "v0", value: v0 });
        }
        const NAMES: [&str; NUM_COEFFS] = ["k1", "k2", "k3", "k4", "k5"];
        for (name, &ki) in NAMES.iter().zip(&k) {
            if !ki.is_finite() {
                return Err(CameraError::InvalidParameter { name, value: ki });
            }
        }
        if k[0] <= 0.0 {
            return Err(CameraError::InvalidParameter { name: "k1", value: k[0] });
        }
        if let Some(z) = altitude {
            if !(z.is_finite() && z > 0.0) {
                return Err(CameraError::InvalidParameter { name: "Z", value: z });
            }
        }
        let min_slope = min_slope_of(&k);
        if min_slope <= 0.0 {
            return Err(CameraError::NotMonotonic { min_slope });
        }
        Ok(Self { f, u0, v0, k, altitude })
    }

    /// The equidistant lens `r = θ`.
    pub fn equidistant(f: f64, u0: f64, v0: f64, altitude: Option<f64>) -> Result<Self, CameraError> {
        Self::new(f, u0, v0, [1.0, 0.0, 0.0, 0.0, 0.0], altitude)
    }

    pub fn focal(&self) -> f64 {
        self.f
    }

    pub fn principal_point(&self) -> ImagePoint {
        ImagePoint::new(self.u0, self.v0)
    }

    pub fn coefficients(&self) -> [f64; NUM_COEFFS] {
        self.k
    }

    pub fn altitude(&self) -> Option<f64> {
        self.altitude
    }

    pub fn with_altitude(mut self, altitude: Option<f64>) -> Result<Self, CameraError> {
        if let Some(z) = altitude {
            if !(z.is_finite() && z > 0.0) {
                return Err(CameraError::InvalidParameter { name: "Z", value: z });
            }
        }
        self.altitude = altitude;
        Ok(self)
    }

    /// Smallest value of `dr/dθ` on `[0, π/2]`.
    pub fn min_slope(&self) -> f64 {
        min_slope_of(&self.k)
    }

    /// Normalized radius of the horizon, `r(π/2)`.
    pub fn max_radius(&self) -> f64 {
        self.eval_radial(THETA_MAX)
    }

    /// Pixel radius of the image circle.
    pub fn image_circle_radius(&self) -> f64 {
        self.f * self.max_radius()
    }

    fn eval_radial(&self, theta: f64) -> f64 {
        let t2 = theta * theta;
        let [k1, k2, k3, k4, k5] = self.k;
        theta * (k1 + t2 * (k2 + t2 * (k3 + t2 * (k4 + t2 * k5))))
    }

    fn eval_slope(&self, theta: f64) -> f64 {
        let t2 = theta * theta;
        let [k1, k2, k3, k4, k5] = self.k;
        k1 + t2 * (3.0 * k2 + t2 * (5.0 * k3 + t2 * (7.0 * k4 + t2 * 9.0 * k5)))
    }

    /// `r(θ)`.
    pub fn radial_forward(&self, theta: f64) -> Result<f64, CameraError> {
        if !(0.0..=THETA_MAX).contains(&theta) {
            return Err(CameraError::AngleOutOfRange(theta));
        }
        Ok(self.eval_radial(theta))
    }

    /// Solve `r(θ) = r` for θ.
    ///
    /// Newton from `θ₀ = r / k1`, kept inside a shrinking bracket; any step
    /// that would leave the bracket is replaced by bisection. Monotonicity
    /// makes the root unique and the bracket always valid.
    pub fn radial_inverse(&self, r: f64) -> Result<f64, CameraError> {
        let r_max = self.max_radius();
        if !(0.0..=r_max).contains(&r) {
            return Err(CameraError::OutsideImageCircle { r, r_max });
        }
        if r == 0.0 {
            return Ok(0.0);
        }
        if r == r_max {
            return Ok(THETA_MAX);
        }
        let (mut lo, mut hi) = (0.0, THETA_MAX);
        let mut theta = (r / self.k[0]).clamp(lo, hi);
        for _ in 0..200 {
            let resid = self.eval_radial(theta) - r;
            if resid == 0.0 {
                return Ok(theta);
            }
            if resid > 0.0 {
                hi = theta;
            } else {
                lo = theta;
            }
            let slope = self.eval_slope(theta);
            let newton = theta - resid / slope;
            let next = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            let step = (next - theta).abs();
            theta = next;
            if step <= f64::EPSILON * theta.max(1e-300) || hi - lo <= f64::EPSILON * hi {
                break;
            }
        }
        debug_assert!((self.eval_radial(theta) - r).abs() <= 1e-10);
        Ok(theta)
    }

    /// Normalize a pixel and solve for its ray angles.
    pub fn pixel_to_ray(&self, p: ImagePoint) -> Result<NormalizedRay, CameraError> {
        if !p.is_finite() {
            return Err(CameraError::NonFinite);
        }
        let x = (p.u - self.u0) / self.f;
        let y = (p.v - self.v0) / self.f;
        let r = x.hypot(y);
        let phi = if r == 0.0 { 0.0 } else { y.atan2(x) };
        let theta = self.radial_inverse(r)?;
        Ok(NormalizedRay { x, y, r, theta, phi })
    }

    /// Pixel of the ray with incidence `theta` and polar angle `phi`.
    pub fn angles_to_pixel(&self, theta: f64, phi: f64) -> Result<ImagePoint, CameraError> {
        let r = self.radial_forward(theta)?;
        let (s, c) = phi.sin_cos();
        Ok(ImagePoint::new(self.u0 + self.f * r * c, self.v0 + self.f * r * s))
    }

    /// Project a camera-frame point to its pixel.
    pub fn ray_to_pixel(&self, p: WorldPoint) -> Result<ImagePoint, CameraError> {
        if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
            return Err(CameraError::NonFinite);
        }
        if p.z <= 0.0 {
            return Err(CameraError::BehindCamera(p.z));
        }
        let rho = p.x.hypot(p.y);
        let theta = rho.atan2(p.z);
        let phi = p.y.atan2(p.x);
        self.angles_to_pixel(theta, phi)
    }
}

fn min_slope_of(k: &[f64; NUM_COEFFS]) -> f64 {
    // dr/dθ as a polynomial in t = θ²
    let slope = [k[0], 3.0 * k[1], 5.0 * k[2], 7.0 * k[3], 9.0 * k[4]];
    poly::min_on(&slope, 0.0, THETA_MAX * THETA_MAX)
}
