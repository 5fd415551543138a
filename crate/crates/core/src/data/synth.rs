use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::FeatureSet;
use crate::numerics::{dot_product, Matrix};
use crate::{math, Error, Result, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SynthKind {
    /// Isotropic Gaussian cluster per class.
    Blobs,
    /// Noisy circle in a class-specific random 2-plane.
    Ring,
    /// Sine-warped line segment in a class-specific random 2-plane.
    Manifold,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthParams {
    pub kind: SynthKind,
    pub classes: usize,
    pub per_class: usize,
    pub dim: usize,
    /// Distance between class centers.
    pub separation: f64,
    /// Standard deviation of the isotropic noise added to every sample.
    pub noise: f64,
    /// Ring radius, or half-length of the manifold curve.
    pub extent: f64,
    /// Upper bound of a per-dimension baseline shared by all classes, drawn
    /// uniformly from `[0, offset)`. Mimics the non-centered, unevenly scaled
    /// activations of a ReLU backbone.
    pub offset: f64,
}

impl SynthParams {
    pub fn new(kind: SynthKind, classes: usize, per_class: usize, dim: usize) -> Self {
        let (separation, noise, extent, offset) = match kind {
            SynthKind::Blobs => (10.0, 1.0, 0.0, 0.0),
            SynthKind::Ring => (10.0, 0.2, 3.0, 0.0),
            SynthKind::Manifold => (1.0, 0.1, 3.0, 20.0),
        };
        SynthParams {
            kind,
            classes,
            per_class,
            dim,
            separation,
            noise,
            extent,
            offset,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.classes == 0 || self.per_class == 0 {
            return Err(Error::Parameter(
                "synthetic data needs at least one class and one sample".into(),
            ));
        }
        let min_dim = match self.kind {
            SynthKind::Blobs => self.classes,
            SynthKind::Ring | SynthKind::Manifold => self.classes.max(2),
        };
        if self.dim < min_dim {
            return Err(Error::Parameter(format!(
                "{:?} with {} classes needs dim >= {min_dim}, got {}",
                self.kind, self.classes, self.dim
            )));
        }
        for (name, v) in [
            ("separation", self.separation),
            ("noise", self.noise),
            ("extent", self.extent),
            ("offset", self.offset),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Parameter(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Random orthonormal pair in `dim` dimensions (Gram-Schmidt on Gaussians).
fn random_plane(rng: &mut Rng, dim: usize) -> (Vec<f64>, Vec<f64>) {
    let mut u = vec![0.0; dim];
    let mut v = vec![0.0; dim];
    rng.fill_standard_normal(&mut u);
    rng.fill_standard_normal(&mut v);
    let nu = math::sqrt(dot_product(&u, &u));
    u.iter_mut().for_each(|x| *x /= nu);
    let proj = dot_product(&u, &v);
    v.iter_mut().zip(&u).for_each(|(x, y)| *x -= proj * y);
    let nv = math::sqrt(dot_product(&v, &v));
    v.iter_mut().for_each(|x| *x /= nv);
    (u, v)
}

/// Generates one [`FeatureSet`] per class, tagged `class0`, `class1`, ...
///
/// Class centers sit at `separation / sqrt(2)` along distinct coordinate
/// axes, so every pair of centers is `separation` apart.
pub fn synth_dataset(params: &SynthParams, rng: &mut Rng) -> Result<Vec<FeatureSet>> {
    params.validate()?;
    let d = params.dim;
    let axis = params.separation / math::sqrt(2.0);
    let mut offset_rng = rng.substream("offset");
    let baseline: Vec<f64> = (0..d).map(|_| params.offset * offset_rng.uniform()).collect();
    (0..params.classes)
        .map(|c| {
            let mut class_rng = rng.substream(&format!("class{c}"));
            let plane = match params.kind {
                SynthKind::Blobs => None,
                _ => Some(random_plane(&mut class_rng, d)),
            };
            let mut data = vec![0.0; params.per_class * d];
            class_rng.fill_standard_normal(&mut data);
            for row in data.chunks_exact_mut(d) {
                row.iter_mut().for_each(|x| *x *= params.noise);
                row[c] += axis;
                row.iter_mut().zip(&baseline).for_each(|(x, o)| *x += o);
                if let Some((u, v)) = &plane {
                    let (a, b) = match params.kind {
                        SynthKind::Ring => {
                            let theta = 2.0 * PI * class_rng.uniform();
                            (params.extent * math::cos(theta), params.extent * math::sin(theta))
                        }
                        _ => {
                            let t = class_rng.uniform_range(-1.0, 1.0);
                            (params.extent * t, 0.5 * params.extent * math::sin(PI * 1.5 * t))
                        }
                    };
                    for k in 0..d {
                        row[k] += a * u[k] + b * v[k];
                    }
                }
            }
            Ok(FeatureSet::new(
                Matrix::from_raw(params.per_class, d, data),
                format!("class{c}"),
            ))
        })
        .collect()
}
