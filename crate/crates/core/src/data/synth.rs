//! Synthetic multi-label + landmark data with controllable difficulty and
//! class imbalance.
//!
//! Every attribute owns a rectangular region of the image and a geometric
//! stamp. A positive label draws the stamp into the region; the attribute's
//! difficulty attenuates the stamp contrast and adds pixel noise over the
//! region (for both classes, so the region alone gives the label away only
//! through the stamp). Objective attributes get mutually disjoint regions in
//! the upper half of the image; subjective attributes get overlapping
//! regions in the lower half. Landmarks sit at region centers, displaced
//! along the diagonal by the sign of their attribute's label, so the
//! landmark task genuinely carries attribute information.
//!
//! Images are quantized to 8-bit levels and landmarks to whole pixels at
//! generation time, which makes the on-disk dataset a lossless image of the
//! in-memory one.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data::{DatasetSplit, Sample};
use crate::error::{Error, Result};
use crate::network::{AttributeGroup, AttributeSpec};
use crate::tensor::Tensor;

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub names: Vec<String>,
    pub groups: Vec<AttributeGroup>,
    /// Per-attribute positive rate, each in (0, 1).
    pub positive_rates: Vec<f64>,
    /// Per-attribute rendering difficulty, >= 0. Zero means a clean,
    /// linearly separable stamp.
    pub difficulties: Vec<f64>,
    /// Square image edge length in pixels (>= 8 so the default backbone's
    /// three pooling stages keep a nonempty feature map).
    pub image_size: usize,
    pub landmark_count: usize,
    pub train: usize,
    pub val: usize,
    pub test: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    /// Six attributes: three clean geometric ones (one rare at a 5% positive
    /// rate, to exercise threshold adaptation) and three noisy overlapping
    /// ones of mixed difficulty.
    fn default() -> Self {
        SynthConfig {
            names: ["box", "cross", "dot", "ring", "slash", "checker"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            groups: vec![
                AttributeGroup::Objective,
                AttributeGroup::Objective,
                AttributeGroup::Objective,
                AttributeGroup::Subjective,
                AttributeGroup::Subjective,
                AttributeGroup::Subjective,
            ],
            positive_rates: vec![0.5, 0.35, 0.05, 0.4, 0.45, 0.4],
            difficulties: vec![0.0, 0.0, 0.0, 0.6, 1.0, 0.8],
            image_size: 16,
            landmark_count: 4,
            train: 2000,
            val: 500,
            test: 500,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn attribute_count(&self) -> usize {
        self.names.len()
    }

    pub fn spec(&self) -> Result<AttributeSpec> {
        AttributeSpec::new(self.names.clone(), self.groups.clone())
    }

    fn validate(&self) -> Result<()> {
        let j = self.names.len();
        if j == 0 {
            return Err(Error::InvalidConfig("generator needs at least one attribute".into()));
        }
        if self.groups.len() != j || self.positive_rates.len() != j || self.difficulties.len() != j
        {
            return Err(Error::InvalidConfig(format!(
                "per-attribute vectors must all have length {j}"
            )));
        }
        if self
            .positive_rates
            .iter()
            .any(|r| !(*r > 0.0 && *r < 1.0))
        {
            return Err(Error::InvalidConfig("positive rates must lie in (0, 1)".into()));
        }
        if self.difficulties.iter().any(|d| *d < 0.0 || !d.is_finite()) {
            return Err(Error::InvalidConfig("difficulties must be finite and >= 0".into()));
        }
        if self.image_size < 8 {
            return Err(Error::InvalidConfig("image size must be at least 8".into()));
        }
        if self.landmark_count == 0 {
            return Err(Error::InvalidConfig("landmark count must be positive".into()));
        }
        if self.train == 0 {
            return Err(Error::InvalidConfig("training split must be nonempty".into()));
        }
        Ok(())
    }
}

/// Unit-square region `[y0, y1) x [x0, x1)` owned by one attribute.
#[derive(Debug, Clone, Copy)]
struct Region {
    y0: f64,
    y1: f64,
    x0: f64,
    x1: f64,
}

impl Region {
    fn pixel_bounds(&self, size: usize) -> (usize, usize, usize, usize) {
        let n = size as f64;
        let clamp = |v: f64| (v.floor() as usize).min(size - 1);
        let py0 = clamp(self.y0 * n);
        let px0 = clamp(self.x0 * n);
        let py1 = ((self.y1 * n).floor() as usize).clamp(py0 + 1, size);
        let px1 = ((self.x1 * n).floor() as usize).clamp(px0 + 1, size);
        (py0, py1, px0, px1)
    }

    fn center(&self) -> (f64, f64) {
        ((self.y0 + self.y1) / 2.0, (self.x0 + self.x1) / 2.0)
    }

    fn half_extent(&self) -> (f64, f64) {
        ((self.y1 - self.y0) / 2.0, (self.x1 - self.x0) / 2.0)
    }
}

/// Region layout: objective attributes tile the top half of the image
/// disjointly; subjective ones form an overlapping chain across the bottom
/// half.
fn region_for(spec_groups: &[AttributeGroup], j: usize) -> Region {
    let group = spec_groups[j];
    let members: Vec<usize> = spec_groups
        .iter()
        .enumerate()
        .filter(|(_, g)| **g == group)
        .map(|(i, _)| i)
        .collect();
    let slot = members.iter().position(|&i| i == j).expect("j is a member") as f64;
    let n = members.len() as f64;
    match group {
        AttributeGroup::Objective => {
            // disjoint vertical strips with a small inset
            let width = 1.0 / n;
            let x0 = slot * width;
            Region {
                y0: 0.06,
                y1: 0.44,
                x0: x0 + 0.12 * width,
                x1: x0 + 0.88 * width,
            }
        }
        AttributeGroup::Subjective => {
            // each region spans two slots' width, so neighbours overlap
            let step = 1.0 / (n + 1.0);
            Region {
                y0: 0.54,
                y1: 0.96,
                x0: slot * step,
                x1: (slot + 2.0) * step,
            }
        }
    }
}

/// Stamp intensity at local coordinates (u, v) in [0, 1)^2, cycled by
/// attribute index.
fn stamp(j: usize, u: f64, v: f64) -> f64 {
    match j % 6 {
        // solid block
        0 => 1.0,
        // plus sign
        1 => {
            if (u - 0.5).abs() < 0.18 || (v - 0.5).abs() < 0.18 {
                1.0
            } else {
                0.0
            }
        }
        // bright dot
        2 => {
            let r2 = (u - 0.5).powi(2) + (v - 0.5).powi(2);
            if r2 < 0.12 {
                1.0
            } else {
                0.0
            }
        }
        // ring
        3 => {
            let r = ((u - 0.5).powi(2) + (v - 0.5).powi(2)).sqrt();
            if (0.22..0.42).contains(&r) {
                1.0
            } else {
                0.0
            }
        }
        // diagonal band
        4 => {
            if (u - v).abs() < 0.22 {
                1.0
            } else {
                0.0
            }
        }
        // checkerboard
        _ => {
            let cell = ((u * 3.0).floor() + (v * 3.0).floor()) as i64;
            if cell % 2 == 0 {
                1.0
            } else {
                0.0
            }
        }
    }
}

fn quantize_pixel(v: f64) -> f64 {
    (v.clamp(0.0, 1.0) * 255.0).round() / 255.0
}

fn render_sample(config: &SynthConfig, rng: &mut ChaCha8Rng) -> Sample {
    let j = config.attribute_count();
    let size = config.image_size;

    let labels: Vec<f64> = config
        .positive_rates
        .iter()
        .map(|&rate| if rng.random_range(0.0..1.0) < rate { 1.0 } else { -1.0 })
        .collect();

    let mut pixels = vec![0.0f64; size * size];
    for jj in 0..j {
        let region = region_for(&config.groups, jj);
        let (y0, y1, x0, x1) = region.pixel_bounds(size);
        let d = config.difficulties[jj];
        let contrast = 0.85 / (1.0 + 0.75 * d);
        if labels[jj] > 0.0 {
            for y in y0..y1 {
                for x in x0..x1 {
                    let u = (y - y0) as f64 / (y1 - y0) as f64;
                    let v = (x - x0) as f64 / (x1 - x0) as f64;
                    pixels[y * size + x] += contrast * stamp(jj, u, v);
                }
            }
        }
        if d > 0.0 {
            let noise = Normal::new(0.0, 0.18 * d).expect("finite sigma");
            for y in y0..y1 {
                for x in x0..x1 {
                    pixels[y * size + x] += noise.sample(rng);
                }
            }
        }
    }
    for p in &mut pixels {
        *p = quantize_pixel(*p);
    }
    let image = Tensor::new(vec![1, size, size], pixels).expect("image shape consistent");

    // landmark t follows attribute (t mod J): at the region center, shifted
    // along the diagonal by the label sign, then pixel-quantized
    let mut landmarks = Vec::with_capacity(2 * config.landmark_count);
    for t in 0..config.landmark_count {
        let owner = t % j;
        let region = region_for(&config.groups, owner);
        let (cy, cx) = region.center();
        let (hy, hx) = region.half_extent();
        let shift = 0.55 * labels[owner];
        let sigma = 0.015 + 0.03 * config.difficulties[owner];
        let noise = Normal::new(0.0, sigma).expect("finite sigma");
        let x = cx + shift * hx + noise.sample(rng);
        let y = cy + shift * hy + noise.sample(rng);
        let quant = |v: f64| {
            let px = (v.clamp(0.0, 1.0) * size as f64).round().min(size as f64);
            px / size as f64
        };
        landmarks.push(quant(x));
        landmarks.push(quant(y));
    }

    Sample::new(image, labels, landmarks).expect("generated sample is valid")
}

pub fn generate_synthetic(config: &SynthConfig) -> Result<DatasetSplit> {
    config.validate()?;
    let spec = config.spec()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut split_of = |n: usize| -> Vec<Sample> {
        (0..n).map(|_| render_sample(config, &mut rng)).collect()
    };
    let train = split_of(config.train);
    let val = split_of(config.val);
    let test = split_of(config.test);
    DatasetSplit::new(spec, train, val, test)
}

/// Template-matching oracle: correlates each attribute's region against its
/// stamp and thresholds at half the stamp's energy. Exact on clean
/// (difficulty 0) attributes with disjoint regions; used by tests as an
/// implementation-independent check that rendered images carry the labels.
pub fn oracle_decode(config: &SynthConfig, image: &Tensor) -> Vec<f64> {
    let size = config.image_size;
    let data = image.data();
    (0..config.attribute_count())
        .map(|jj| {
            let region = region_for(&config.groups, jj);
            let (y0, y1, x0, x1) = region.pixel_bounds(size);
            let d = config.difficulties[jj];
            let contrast = 0.85 / (1.0 + 0.75 * d);
            let mut score = 0.0;
            let mut energy = 0.0;
            for y in y0..y1 {
                for x in x0..x1 {
                    let u = (y - y0) as f64 / (y1 - y0) as f64;
                    let v = (x - x0) as f64 / (x1 - x0) as f64;
                    let s = stamp(jj, u, v);
                    score += s * data[y * size + x];
                    energy += s * s * contrast;
                }
            }
            if score > 0.5 * energy {
                1.0
            } else {
                -1.0
            }
        })
        .collect()
}

use rand::SeedableRng;
