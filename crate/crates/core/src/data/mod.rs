//! Dataset types, file ingestion, and the synthetic generator.
//!
//! On disk a dataset is a directory:
//!
//! ```text
//! <root>/attribute_groups.txt        one "name objective|subjective" line each
//! <root>/{train,val,test}/attributes.txt
//! <root>/{train,val,test}/landmarks.txt
//! <root>/{train,val,test}/images/<filename>.pgm
//! ```

mod format;
mod synth;

pub use format::{
    normalize_landmarks, parse_attribute_file, parse_landmark_file, read_raster,
    write_attribute_file, write_landmark_file, write_raster,
};
pub use synth::{generate_synthetic, oracle_decode, SynthConfig};

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::network::{AttributeGroup, AttributeSpec};
use crate::tensor::Tensor;

/// One labeled image: pixels in [0, 1], labels in {+1, -1}, landmark
/// coordinates normalized to [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub image: Tensor,
    pub labels: Vec<f64>,
    pub landmarks: Vec<f64>,
}

impl Sample {
    pub fn new(image: Tensor, labels: Vec<f64>, landmarks: Vec<f64>) -> Result<Self> {
        if let Some(v) = labels.iter().find(|v| **v != 1.0 && **v != -1.0) {
            return Err(Error::InvalidValue(format!("label must be +1 or -1, got {v}")));
        }
        if let Some(v) = landmarks.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidValue(format!(
                "landmark coordinate must be normalized to [0, 1], got {v}"
            )));
        }
        Ok(Sample {
            image,
            labels,
            landmarks,
        })
    }
}

#[derive(Debug, Clone)]
pub struct DatasetSplit {
    pub spec: AttributeSpec,
    pub train: Vec<Sample>,
    pub val: Vec<Sample>,
    pub test: Vec<Sample>,
}

impl DatasetSplit {
    pub fn new(
        spec: AttributeSpec,
        train: Vec<Sample>,
        val: Vec<Sample>,
        test: Vec<Sample>,
    ) -> Result<Self> {
        let j = spec.len();
        for sample in train.iter().chain(&val).chain(&test) {
            if sample.labels.len() != j {
                return Err(Error::ShapeMismatch {
                    context: "dataset sample labels".to_string(),
                    expected: vec![j],
                    actual: vec![sample.labels.len()],
                });
            }
        }
        Ok(DatasetSplit {
            spec,
            train,
            val,
            test,
        })
    }

    /// Landmark count implied by the first sample.
    pub fn landmark_count(&self) -> usize {
        self.train
            .first()
            .or(self.val.first())
            .or(self.test.first())
            .map(|s| s.landmarks.len() / 2)
            .unwrap_or(0)
    }

    pub fn input_channels(&self) -> usize {
        self.train
            .first()
            .or(self.val.first())
            .or(self.test.first())
            .map(|s| s.image.shape()[0])
            .unwrap_or(1)
    }
}

pub fn save_dataset(root: &Path, data: &DatasetSplit) -> Result<()> {
    fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;

    let mut groups = String::new();
    for (name, group) in data.spec.names().iter().zip(data.spec.groups()) {
        let tag = match group {
            AttributeGroup::Objective => "objective",
            AttributeGroup::Subjective => "subjective",
        };
        groups.push_str(&format!("{name} {tag}\n"));
    }
    let groups_path = root.join("attribute_groups.txt");
    fs::write(&groups_path, groups).map_err(|e| Error::io(&groups_path, e))?;

    for (split_name, samples) in [
        ("train", &data.train),
        ("val", &data.val),
        ("test", &data.test),
    ] {
        let dir = root.join(split_name);
        let images = dir.join("images");
        fs::create_dir_all(&images).map_err(|e| Error::io(&images, e))?;

        let mut attr_rows = Vec::with_capacity(samples.len());
        let mut lm_rows = Vec::with_capacity(samples.len());
        for (i, sample) in samples.iter().enumerate() {
            let filename = format!("img_{i:06}.pgm");
            write_raster(&images.join(&filename), &sample.image)?;
            attr_rows.push((filename.clone(), sample.labels.clone()));
            // landmarks are stored as raw pixel coordinates
            let (h, w) = (sample.image.shape()[1], sample.image.shape()[2]);
            let raw: Vec<f64> = sample
                .landmarks
                .iter()
                .enumerate()
                .map(|(k, &v)| v * if k % 2 == 0 { w as f64 } else { h as f64 })
                .map(|v| v.round())
                .collect();
            lm_rows.push((filename, raw));
        }
        write_attribute_file(&dir.join("attributes.txt"), data.spec.names(), &attr_rows)?;
        write_landmark_file(&dir.join("landmarks.txt"), &lm_rows)?;
    }
    Ok(())
}

pub fn load_dataset(root: &Path) -> Result<DatasetSplit> {
    let groups_path = root.join("attribute_groups.txt");
    let text = fs::read_to_string(&groups_path).map_err(|e| Error::io(&groups_path, e))?;
    let mut names = Vec::new();
    let mut groups = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let name = tokens
            .next()
            .ok_or_else(|| Error::parse(&groups_path, idx + 1, "missing attribute name"))?;
        let group = match tokens.next() {
            Some("objective") => AttributeGroup::Objective,
            Some("subjective") => AttributeGroup::Subjective,
            other => {
                return Err(Error::parse(
                    &groups_path,
                    idx + 1,
                    format!("expected objective|subjective, got {other:?}"),
                ))
            }
        };
        names.push(name.to_string());
        groups.push(group);
    }
    let spec = AttributeSpec::new(names, groups)?;

    let mut splits = Vec::with_capacity(3);
    let mut landmark_count: Option<usize> = None;
    for split_name in ["train", "val", "test"] {
        let dir = root.join(split_name);
        let (file_names, attr_rows) = parse_attribute_file(&dir.join("attributes.txt"))?;
        if file_names != spec.names() {
            return Err(Error::InvalidConfig(format!(
                "attribute names in {split_name} differ from attribute_groups.txt"
            )));
        }

        // landmark count comes from the first data line seen
        let lm_path = dir.join("landmarks.txt");
        let t = match landmark_count {
            Some(t) => t,
            None => {
                let text = fs::read_to_string(&lm_path).map_err(|e| Error::io(&lm_path, e))?;
                let t = text
                    .lines()
                    .find(|l| !l.trim().is_empty())
                    .map(|l| (l.split_whitespace().count() - 1) / 2)
                    .unwrap_or(0);
                landmark_count = Some(t);
                t
            }
        };
        let lm_rows = parse_landmark_file(&lm_path, t)?;
        let lm_by_name: BTreeMap<&str, &Vec<f64>> =
            lm_rows.iter().map(|(n, c)| (n.as_str(), c)).collect();

        let mut samples = Vec::with_capacity(attr_rows.len());
        for (filename, labels) in &attr_rows {
            let image = read_raster(&dir.join("images").join(filename))?;
            let raw = lm_by_name.get(filename.as_str()).ok_or_else(|| {
                Error::parse(&lm_path, 0, format!("no landmarks for {filename}"))
            })?;
            let (h, w) = (image.shape()[1], image.shape()[2]);
            let landmarks = normalize_landmarks(raw, w, h)?;
            samples.push(Sample::new(image, labels.clone(), landmarks)?);
        }
        splits.push(samples);
    }
    let test = splits.pop().unwrap();
    let val = splits.pop().unwrap();
    let train = splits.pop().unwrap();
    DatasetSplit::new(spec, train, val, test)
}
