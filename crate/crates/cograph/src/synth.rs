//! Synthetic paired image/text dataset with a planted cross-modal signal.
//!
//! Each dataset draws three fixed directions: an image prototype `p_I`, a
//! text prototype `p_T` and a latent axis `v`. A sample with label `y`
//! (`s = 2y - 1`) and latent sign `ε = ±1` gets
//!
//! ```text
//! image node = s·a_I·p_I + strength·ε·v   + σ·noise
//! text node  = s·a_T·p_T + strength·s·ε·v + σ·noise
//! ```
//!
//! The prototypes give each modality a weak label signal of its own. The
//! latent sign is random per sample, so on its own it says nothing about
//! the label; the label is carried by whether the two modalities' latent
//! signs agree.

use cograph_core::{rng, PairedSample};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::record::{FieldError, SampleRecord, MAX_IMAGES, MIN_IMAGES, MIN_TEXTS};

pub const MAX_TEXTS: usize = 20;
/// Prototype amplitudes `a_I`, `a_T`, per coordinate.
pub const IMAGE_SIGNAL: f64 = 0.15;
pub const TEXT_SIGNAL: f64 = 0.12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub n_samples: usize,
    pub feature_dim: usize,
    pub noise_sigma: f64,
    pub cross_modal_strength: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_samples: 1000,
            feature_dim: 256,
            noise_sigma: 4.0,
            cross_modal_strength: 0.8,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), String> {
        if self.feature_dim == 0 {
            return Err("feature_dim must be positive".into());
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(format!("noise_sigma must be finite and nonnegative, got {}", self.noise_sigma));
        }
        if !(0.0..=1.0).contains(&self.cross_modal_strength) {
            return Err(format!(
                "cross_modal_strength must lie in [0, 1], got {}",
                self.cross_modal_strength
            ));
        }
        Ok(())
    }
}

/// The dataset-level directions.
#[derive(Debug, Clone, PartialEq)]
pub struct Prototypes {
    pub image: Vec<f64>,
    pub text: Vec<f64>,
    pub latent: Vec<f64>,
}

fn gaussian(r: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.sample(StandardNormal)).collect()
}

pub fn prototypes(spec: &SynthSpec) -> Prototypes {
    let mut r = rng::stream(spec.seed, "synth.prototypes");
    let d = spec.feature_dim;
    Prototypes {
        image: gaussian(&mut r, d),
        text: gaussian(&mut r, d),
        latent: gaussian(&mut r, d),
    }
}

/// Exactly balanced labels (the odd one out is 0), seeded order.
fn labels(spec: &SynthSpec) -> Vec<usize> {
    let n = spec.n_samples;
    let mut y: Vec<usize> = (0..n).map(|i| usize::from(i < n / 2)).collect();
    y.shuffle(&mut rng::stream(spec.seed, "synth.labels"));
    y
}

fn nodes(
    r: &mut impl Rng,
    count: usize,
    center: &[f64],
    sigma: f64,
) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| {
            center
                .iter()
                .map(|&c| {
                    let z: f64 = r.sample(StandardNormal);
                    c + sigma * z
                })
                .collect()
        })
        .collect()
}

/// Feature-only records (no edge lists).
pub fn generate_records(spec: &SynthSpec) -> Vec<SampleRecord> {
    let protos = prototypes(spec);
    let k = spec.cross_modal_strength;
    labels(spec)
        .into_iter()
        .enumerate()
        .map(|(i, y)| {
            let mut r = rng::stream(spec.seed, &format!("synth.sample{i}"));
            let s = if y == 1 { 1.0 } else { -1.0 };
            let eps = if r.random_bool(0.5) { 1.0 } else { -1.0 };
            let ni = r.random_range(MIN_IMAGES..=MAX_IMAGES);
            let nt = r.random_range(MIN_TEXTS..=MAX_TEXTS);
            let image_center: Vec<f64> = protos
                .image
                .iter()
                .zip(&protos.latent)
                .map(|(p, v)| s * IMAGE_SIGNAL * p + k * eps * v)
                .collect();
            let text_center: Vec<f64> = protos
                .text
                .iter()
                .zip(&protos.latent)
                .map(|(p, v)| s * TEXT_SIGNAL * p + k * s * eps * v)
                .collect();
            SampleRecord {
                id: format!("synth-{i}"),
                label: y,
                image_features: nodes(&mut r, ni, &image_center, spec.noise_sigma),
                text_features: nodes(&mut r, nt, &text_center, spec.noise_sigma),
                image_edges: None,
                text_edges: None,
            }
        })
        .collect()
}

pub fn generate_synthetic(spec: &SynthSpec) -> Vec<PairedSample> {
    generate_records(spec)
        .iter()
        .map(|rec| rec.to_sample())
        .collect::<Result<_, FieldError>>()
        .expect("generated records satisfy the record invariants")
}
