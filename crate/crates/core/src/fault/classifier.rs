//! Tiny INT8 fully-connected classifier used as an accuracy probe.
//!
//! A model is a JSON manifest naming one raw INT8 weight blob (row-major,
//! `out_features x in_features`) and one little-endian `i32` bias blob per
//! layer; blob paths are relative to the manifest. A dataset is an INT8
//! input tensor of shape `n x in_features` plus a labels CSV with one
//! integer class per row under a `label` header.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{inject, InjectionConfig};
use crate::error::{Error, Result};
use crate::tensor::read_tensor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerManifest {
    pub name: String,
    pub in_features: usize,
    pub out_features: usize,
    pub weights: String,
    pub bias: String,
    pub input_scale: f64,
    pub weight_scale: f64,
    pub output_scale: f64,
    #[serde(default)]
    pub relu: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelManifest {
    pub layers: Vec<LayerManifest>,
    /// Clean accuracy measured when the fixture was built.
    #[serde(default)]
    pub baseline_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub meta: LayerManifest,
    pub weights: Vec<i8>,
    pub bias: Vec<i32>,
}

impl DenseLayer {
    /// Requantization multiplier from the accumulator to the output grid.
    fn multiplier(&self) -> f64 {
        self.meta.input_scale * self.meta.weight_scale / self.meta.output_scale
    }

    fn accumulate(&self, weights: &[i8], x: &[i8], out: &mut [i32]) {
        let n = self.meta.in_features;
        for (o, acc) in out.iter_mut().enumerate() {
            let row = &weights[o * n..(o + 1) * n];
            *acc = self.bias[o]
                + row
                    .iter()
                    .zip(x)
                    .map(|(&w, &a)| i32::from(w) * i32::from(a))
                    .sum::<i32>();
        }
    }

    fn requantize(&self, acc: i32) -> i8 {
        let v = (f64::from(acc) * self.multiplier()).round();
        let v = if self.meta.relu { v.max(0.0) } else { v };
        v.clamp(-128.0, 127.0) as i8
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    pub layers: Vec<DenseLayer>,
    pub baseline_accuracy: Option<f64>,
}

fn read_blob(dir: &Path, rel: &str) -> Result<Vec<u8>> {
    let p = dir.join(rel);
    fs::read(&p).map_err(|e| Error::io(&p, e))
}

pub fn load_classifier(manifest_path: &Path) -> Result<Classifier> {
    let text = fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let manifest: ModelManifest =
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", manifest_path.display())))?;
    if manifest.layers.is_empty() {
        return Err(Error::Format("model has no layers".into()));
    }
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let mut layers = Vec::with_capacity(manifest.layers.len());
    for (i, meta) in manifest.layers.into_iter().enumerate() {
        if let Some(prev) = layers.last().map(|l: &DenseLayer| l.meta.out_features) {
            if prev != meta.in_features {
                return Err(Error::Format(format!(
                    "layer {} expects {} inputs but layer {} produces {prev}",
                    meta.name,
                    meta.in_features,
                    i - 1
                )));
            }
        }
        for (what, s) in [
            ("input_scale", meta.input_scale),
            ("weight_scale", meta.weight_scale),
            ("output_scale", meta.output_scale),
        ] {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::Format(format!("layer {}: {what} must be positive", meta.name)));
            }
        }
        let weights: Vec<i8> = read_blob(dir, &meta.weights)?.into_iter().map(|b| b as i8).collect();
        if weights.len() != meta.in_features * meta.out_features {
            return Err(Error::Format(format!(
                "layer {}: weight blob has {} bytes, expected {}",
                meta.name,
                weights.len(),
                meta.in_features * meta.out_features
            )));
        }
        let raw = read_blob(dir, &meta.bias)?;
        if raw.len() != 4 * meta.out_features {
            return Err(Error::Format(format!(
                "layer {}: bias blob has {} bytes, expected {}",
                meta.name,
                raw.len(),
                4 * meta.out_features
            )));
        }
        let bias = raw
            .chunks_exact(4)
            .map(|c| i32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        layers.push(DenseLayer { meta, weights, bias });
    }
    Ok(Classifier {
        layers,
        baseline_accuracy: manifest.baseline_accuracy,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub features: usize,
    pub inputs: Vec<i8>,
    pub labels: Vec<usize>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

pub fn load_dataset(inputs: &Path, labels: &Path) -> Result<Dataset> {
    let t = read_tensor(inputs)?;
    let name = labels.display().to_string();
    let file = fs::File::open(labels).map_err(|e| Error::io(labels, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let mut ys = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::parse(&name, i + 2, e.to_string()))?;
        let y = rec
            .get(0)
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| Error::parse(&name, i + 2, "bad label"))?;
        ys.push(y);
    }
    if ys.is_empty() {
        return Err(Error::EmptyInput("dataset has no samples"));
    }
    if t.data.len() % ys.len() != 0 || (t.shape.len() == 2 && t.shape[0] != ys.len()) {
        return Err(Error::Shape(format!(
            "{} inputs do not split into {} samples",
            t.data.len(),
            ys.len()
        )));
    }
    Ok(Dataset {
        features: t.data.len() / ys.len(),
        inputs: t.data,
        labels: ys,
    })
}

/// Derives an independent seed per (layer, operand).
fn derive_seed(seed: u64, layer: usize, operand: u64) -> u64 {
    let mut z = seed ^ ((layer as u64) << 8 | operand).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Classifier {
    /// Predicted class per sample. With `cfg`, the layer's weights and its
    /// input activations are passed through the retention-error injector
    /// before each layer is computed.
    pub fn predict(&self, data: &Dataset, cfg: Option<&InjectionConfig>) -> Result<Vec<usize>> {
        let first = &self.layers[0].meta;
        if data.features != first.in_features {
            return Err(Error::Shape(format!(
                "dataset has {} features, model expects {}",
                data.features, first.in_features
            )));
        }
        let n = data.len();
        let mut acts = data.inputs.clone();
        let mut acc = Vec::new();
        for (li, layer) in self.layers.iter().enumerate() {
            let (weights, x) = match cfg {
                Some(c) => (
                    inject(
                        &layer.weights,
                        &InjectionConfig {
                            seed: derive_seed(c.seed, li, 0),
                            ..*c
                        },
                    )?,
                    inject(
                        &acts,
                        &InjectionConfig {
                            seed: derive_seed(c.seed, li, 1),
                            ..*c
                        },
                    )?,
                ),
                None => (layer.weights.clone(), acts),
            };
            let (fi, fo) = (layer.meta.in_features, layer.meta.out_features);
            acc = vec![0i32; n * fo];
            for s in 0..n {
                layer.accumulate(&weights, &x[s * fi..(s + 1) * fi], &mut acc[s * fo..(s + 1) * fo]);
            }
            acts = acc.iter().map(|&a| layer.requantize(a)).collect();
        }
        let classes = self.layers.last().map_or(0, |l| l.meta.out_features);
        Ok(acc
            .chunks(classes)
            .map(|row| {
                row.iter()
                    .enumerate()
                    .fold((0, i32::MIN), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
                    .0
            })
            .collect())
    }

    pub fn accuracy(&self, data: &Dataset, cfg: Option<&InjectionConfig>) -> Result<f64> {
        let pred = self.predict(data, cfg)?;
        let hits = pred.iter().zip(&data.labels).filter(|(p, y)| p == y).count();
        Ok(hits as f64 / data.len() as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierReport {
    pub samples: usize,
    pub baseline_accuracy: f64,
    pub injected_accuracy: f64,
    pub accuracy_drop: f64,
}

pub fn eval_classifier(model: &Path, inputs: &Path, labels: &Path, cfg: &InjectionConfig) -> Result<ClassifierReport> {
    cfg.validate()?;
    let clf = load_classifier(model)?;
    let data = load_dataset(inputs, labels)?;
    let baseline = clf.accuracy(&data, None)?;
    let injected = clf.accuracy(&data, Some(cfg))?;
    Ok(ClassifierReport {
        samples: data.len(),
        baseline_accuracy: baseline,
        injected_accuracy: injected,
        accuracy_drop: baseline - injected,
    })
}
