//! Intrinsic calibration from known floor-point correspondences.
//!
//! f and k1 only appear as the product `f·k1`, so the fit holds `k1 = 1`
//! and lets f carry the scale. Free parameters are `(f, u0, v0, k2..k5)`,
//! or `(f, k2..k5)` with the principal point pinned.

use nalgebra::{DMatrix, DVector};

use super::{CameraError, FisheyeModel, ImagePoint, WorldPoint, NUM_COEFFS};

pub const MIN_CORRESPONDENCES: usize = 7;
pub const MIN_DISTINCT_RADII: usize = 3;
pub const DEFAULT_MAX_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence {
    pub world: WorldPoint,
    pub pixel: ImagePoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationOptions {
    pub initial_focal: f64,
    /// Starting principal point; estimated from the data when absent.
    pub principal: Option<ImagePoint>,
    /// Hold the principal point fixed at `principal`.
    pub pin_principal: bool,
    pub max_iterations: usize,
}

impl CalibrationOptions {
    pub fn new(initial_focal: f64) -> Self {
        Self {
            initial_focal,
            principal: None,
            pin_principal: false,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub model: FisheyeModel,
    /// Root mean square of the per-point pixel reprojection distance.
    pub rms_px: f64,
    pub iterations: usize,
}

struct Sample {
    // θ, θ³, …, θ⁹
    powers: [f64; NUM_COEFFS],
    cos_phi: f64,
    sin_phi: f64,
    pixel: ImagePoint,
}

struct Problem {
    samples: Vec<Sample>,
    pinned: Option<ImagePoint>,
}

// Parameter layout: [f, (u0, v0,) k2, k3, k4, k5]
impl Problem {
    fn n_params(&self) -> usize {
        if self.pinned.is_some() {
            5
        } else {
            7
        }
    }

    fn unpack(&self, p: &DVector<f64>) -> (f64, f64, f64, [f64; NUM_COEFFS]) {
        let (u0, v0, off) = match self.pinned {
            Some(pp) => (pp.u, pp.v, 1),
            None => (p[1], p[2], 3),
        };
        let k = [1.0, p[off], p[off + 1], p[off + 2], p[off + 3]];
        (p[0], u0, v0, k)
    }

    fn residuals(&self, p: &DVector<f64>) -> DVector<f64> {
        let (f, u0, v0, k) = self.unpack(p);
        let mut res = DVector::zeros(2 * self.samples.len());
        for (i, s) in self.samples.iter().enumerate() {
            let r: f64 = s.powers.iter().zip(&k).map(|(t, c)| t * c).sum();
            res[2 * i] = u0 + f * r * s.cos_phi - s.pixel.u;
            res[2 * i + 1] = v0 + f * r * s.sin_phi - s.pixel.v;
        }
        res
    }

    fn jacobian(&self, p: &DVector<f64>) -> DMatrix<f64> {
        let (f, _, _, k) = self.unpack(p);
        let m = self.n_params();
        let mut jac = DMatrix::zeros(2 * self.samples.len(), m);
        let off = if self.pinned.is_some() { 1 } else { 3 };
        for (i, s) in self.samples.iter().enumerate() {
            let r: f64 = s.powers.iter().zip(&k).map(|(t, c)| t * c).sum();
            let (ru, rv) = (2 * i, 2 * i + 1);
            jac[(ru, 0)] = r * s.cos_phi;
            jac[(rv, 0)] = r * s.sin_phi;
            if self.pinned.is_none() {
                jac[(ru, 1)] = 1.0;
                jac[(rv, 2)] = 1.0;
            }
            for j in 0..4 {
                jac[(ru, off + j)] = f * s.powers[j + 1] * s.cos_phi;
                jac[(rv, off + j)] = f * s.powers[j + 1] * s.sin_phi;
            }
        }
        jac
    }
}

fn rms_px(residuals: &DVector<f64>) -> f64 {
    let n = residuals.len() / 2;
    (residuals.norm_squared() / n as f64).sqrt()
}

/// Fit `(f, u0, v0, k2..k5)` to pixel observations of known camera-frame
/// points by Levenberg–Marquardt on the pixel reprojection error.
pub fn calibrate(
    correspondences: &[Correspondence],
    options: &CalibrationOptions,
) -> Result<CalibrationResult, CameraError> {
    if correspondences.len() < MIN_CORRESPONDENCES {
        return Err(CameraError::Calibration(format!(
            "need at least {MIN_CORRESPONDENCES} correspondences, got {}",
            correspondences.len()
        )));
    }
    if !(options.initial_focal.is_finite() && options.initial_focal > 0.0) {
        return Err(CameraError::InvalidParameter { name: "f", value: options.initial_focal });
    }
    if options.pin_principal && options.principal.is_none() {
        return Err(CameraError::Calibration(
            "pinning the principal point requires a principal point".into(),
        ));
    }

    let mut samples = Vec::with_capacity(correspondences.len());
    for c in correspondences {
        let w = c.world;
        if !(w.x.is_finite() && w.y.is_finite() && w.z.is_finite() && c.pixel.is_finite()) {
            return Err(CameraError::NonFinite);
        }
        if w.z <= 0.0 {
            return Err(CameraError::BehindCamera(w.z));
        }
        let theta = w.x.hypot(w.y).atan2(w.z);
        let phi = w.y.atan2(w.x);
        let t2 = theta * theta;
        let mut powers = [theta; NUM_COEFFS];
        for i in 1..NUM_COEFFS {
            powers[i] = powers[i - 1] * t2;
        }
        samples.push(Sample {
            powers,
            cos_phi: phi.cos(),
            sin_phi: phi.sin(),
            pixel: c.pixel,
        });
    }

    let mut thetas: Vec<f64> = samples.iter().map(|s| s.powers[0]).collect();
    thetas.sort_by(f64::total_cmp);
    let distinct = 1 + thetas.windows(2).filter(|w| w[1] - w[0] > 1e-9).count();
    if distinct < MIN_DISTINCT_RADII {
        return Err(CameraError::Calibration(format!(
            "correspondences span {distinct} distinct radial distances, need {MIN_DISTINCT_RADII}"
        )));
    }

    let z0 = correspondences[0].world.z;
    let altitude = correspondences
        .iter()
        .all(|c| (c.world.z - z0).abs() <= 1e-9)
        .then_some(z0);

    let f0 = options.initial_focal;
    let principal = options.principal.unwrap_or_else(|| {
        // equidistant guess, averaged offset of each observation
        let n = samples.len() as f64;
        let (su, sv) = samples.iter().fold((0.0, 0.0), |(su, sv), s| {
            let r = f0 * s.powers[0];
            (su + s.pixel.u - r * s.cos_phi, sv + s.pixel.v - r * s.sin_phi)
        });
        ImagePoint::new(su / n, sv / n)
    });
    let problem = Problem {
        samples,
        pinned: options.pin_principal.then_some(principal),
    };
    let mut params = DVector::zeros(problem.n_params());
    params[0] = f0;
    if problem.pinned.is_none() {
        params[1] = principal.u;
        params[2] = principal.v;
    }

    let (params, iterations) = levenberg_marquardt(&problem, params, options.max_iterations)?;
    let residuals = problem.residuals(&params);
    let (f, u0, v0, k) = problem.unpack(&params);
    let model = FisheyeModel::new(f, u0, v0, k, altitude).map_err(|e| match e {
        CameraError::NotMonotonic { min_slope } => CameraError::Calibration(format!(
            "fitted lens polynomial is not monotonic (min slope {min_slope:e})"
        )),
        other => other,
    })?;
    Ok(CalibrationResult {
        model,
        rms_px: rms_px(&residuals),
        iterations,
    })
}

fn levenberg_marquardt(
    problem: &Problem,
    mut params: DVector<f64>,
    max_iterations: usize,
) -> Result<(DVector<f64>, usize), CameraError> {
    let n_res = 2 * problem.samples.len();
    let mut residuals = problem.residuals(&params);
    let mut cost = residuals.norm_squared();
    let mut lambda: f64 = 1e-3;

    for iter in 1..=max_iterations {
        // RMS below 1e-12 px: nothing left to fit
        if cost <= 1e-24 * n_res as f64 {
            return Ok((params, iter - 1));
        }
        let jac = problem.jacobian(&params);
        let m = jac.ncols();
        let scale: Vec<f64> = (0..m)
            .map(|j| {
                let n = jac.column(j).norm();
                if n > 0.0 {
                    n
                } else {
                    1.0
                }
            })
            .collect();

        loop {
            // min ‖J δ + r‖² + λ ‖D δ‖², solved through the augmented system
            let mut aug = DMatrix::zeros(n_res + m, m);
            aug.view_mut((0, 0), (n_res, m)).copy_from(&jac);
            for j in 0..m {
                aug[(n_res + j, j)] = lambda.sqrt() * scale[j];
            }
            let mut rhs = DVector::zeros(n_res + m);
            rhs.rows_mut(0, n_res).copy_from(&(-&residuals));
            let step = aug
                .svd(true, true)
                .solve(&rhs, 1e-14)
                .map_err(|e| CameraError::Calibration(e.to_string()))?;

            let candidate = &params + &step;
            let trial_res = problem.residuals(&candidate);
            let trial_cost = trial_res.norm_squared();
            let scaled_step: f64 = (0..m).map(|j| (step[j] * scale[j]).powi(2)).sum::<f64>().sqrt();
            let scaled_params: f64 = (0..m).map(|j| (params[j] * scale[j]).powi(2)).sum::<f64>().sqrt();

            if candidate[0] > 0.0 && trial_cost.is_finite() && trial_cost < cost {
                let reduction = (cost - trial_cost) / cost;
                params = candidate;
                residuals = trial_res;
                cost = trial_cost;
                lambda = (lambda / 3.0).max(1e-12);
                if reduction < 1e-12 || scaled_step <= 1e-13 * (scaled_params + 1e-13) {
                    return Ok((params, iter));
                }
                break;
            }
            lambda *= 10.0;
            if lambda > 1e16 || scaled_step <= 1e-15 * (scaled_params + 1e-15) {
                // no descent direction left at machine precision
                return Ok((params, iter));
            }
        }
    }
    Err(CameraError::NoConvergence {
        iterations: max_iterations,
        best_rms_px: rms_px(&residuals),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ruler_points(model: &FisheyeModel, z: f64) -> Vec<Correspondence> {
        let mut out = Vec::new();
        for dir in 0..4 {
            let phi = 0.3 + dir as f64 * std::f64::consts::FRAC_PI_2;
            for step in 1..=10 {
                let d = step as f64;
                let w = WorldPoint::new(d * phi.cos(), d * phi.sin(), z);
                out.push(Correspondence { world: w, pixel: model.ray_to_pixel(w).unwrap() });
            }
        }
        out
    }

    #[test]
    fn too_few_points() {
        let m = FisheyeModel::equidistant(900.0, 1476.0, 1476.0, None).unwrap();
        let pts = &ruler_points(&m, 3.0)[..3];
        let err = calibrate(pts, &CalibrationOptions::new(900.0)).unwrap_err();
        assert!(matches!(err, CameraError::Calibration(_)));
    }

    #[test]
    fn too_few_radii() {
        let m = FisheyeModel::equidistant(900.0, 1476.0, 1476.0, None).unwrap();
        let pts: Vec<_> = ruler_points(&m, 3.0).into_iter().filter(|c| {
            let d = c.world.x.hypot(c.world.y);
            (d - 1.0).abs() < 1e-9 || (d - 2.0).abs() < 1e-9
        }).collect();
        assert_eq!(pts.len(), 8);
        assert!(matches!(
            calibrate(&pts, &CalibrationOptions::new(900.0)),
            Err(CameraError::Calibration(_))
        ));
    }

    #[test]
    fn pinned_principal_recovers_gauge_parameters() {
        let truth = FisheyeModel::new(940.0, 1470.0, 1480.0, [1.0, -0.04, 0.002, 0.0, 0.0], Some(3.0))
            .unwrap();
        let pts = ruler_points(&truth, 3.0);
        let mut opts = CalibrationOptions::new(800.0);
        opts.principal = Some(truth.principal_point());
        opts.pin_principal = true;
        let res = calibrate(&pts, &opts).unwrap();
        assert!(res.rms_px < 1e-6, "rms {}", res.rms_px);
        assert!((res.model.focal() - 940.0).abs() < 1e-5);
        assert_eq!(res.model.altitude(), Some(3.0));
        assert_eq!(res.model.principal_point(), truth.principal_point());
    }
}
