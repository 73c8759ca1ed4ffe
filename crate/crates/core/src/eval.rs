//! Metrics and scheme-comparison harness.
//!
//! Accuracy is `(tp + tn) / N` per attribute; balanced accuracy averages the
//! true-positive and true-negative rates, scoring an undefined rate (no
//! samples of that class) as 0.5. Plain accuracy is the headline number,
//! balanced accuracy exists because threshold adaptation on a rare attribute
//! barely moves plain accuracy.

use crate::data::DatasetSplit;
use crate::error::{Error, Result};
use crate::network::{DmmNetwork, NetworkConfig};
use crate::scheduler::{count_fp_fn, predict_labels};
use crate::trainer::{run_training, TrainConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeStats {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_count: u64,
    pub accuracy: f64,
    pub balanced_accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct EvalReport {
    pub attribute_names: Vec<String>,
    pub per_attribute: Vec<AttributeStats>,
    pub mean_accuracy: f64,
}

/// Evaluates the network on `samples`, thresholding raw outputs at `tau`.
pub fn evaluate(
    net: &DmmNetwork,
    samples: &[crate::data::Sample],
    tau: &[f64],
) -> Result<EvalReport> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("evaluation sample set".into()));
    }
    let j = net.spec().len();
    if tau.len() != j {
        return Err(Error::ShapeMismatch {
            context: "evaluation thresholds".to_string(),
            expected: vec![j],
            actual: vec![tau.len()],
        });
    }
    let mut outputs = Vec::with_capacity(samples.len());
    let mut labels = Vec::with_capacity(samples.len());
    for sample in samples {
        outputs.push(net.forward(&sample.image)?.attributes);
        labels.push(sample.labels.clone());
    }
    let decisions = predict_labels(&outputs, tau);
    let (fp, fn_count) = count_fp_fn(&decisions, &labels)?;

    let n = samples.len() as u64;
    let mut per_attribute = Vec::with_capacity(j);
    for jj in 0..j {
        let positives = labels.iter().filter(|row| row[jj] > 0.0).count() as u64;
        let negatives = n - positives;
        let tp = positives - fn_count[jj];
        let tn = negatives - fp[jj];
        let accuracy = (tp + tn) as f64 / n as f64;
        let rate = |hit: u64, total: u64| {
            if total == 0 {
                0.5
            } else {
                hit as f64 / total as f64
            }
        };
        let balanced_accuracy = (rate(tp, positives) + rate(tn, negatives)) / 2.0;
        per_attribute.push(AttributeStats {
            tp,
            tn,
            fp: fp[jj],
            fn_count: fn_count[jj],
            accuracy,
            balanced_accuracy,
        });
    }
    let mean_accuracy =
        per_attribute.iter().map(|a| a.accuracy).sum::<f64>() / per_attribute.len() as f64;
    Ok(EvalReport {
        attribute_names: net.spec().names().to_vec(),
        per_attribute,
        mean_accuracy,
    })
}

#[derive(Debug, Clone)]
pub struct SchemeRow {
    pub scheme: String,
    pub seed: u64,
    pub mean_accuracy: f64,
}

/// Trains every (scheme, seed) pair on the same data and reports test mean
/// accuracy per run. Runs execute on worker threads; the returned rows are
/// ordered scheme-major, seed-minor.
pub fn compare_schemes(
    data: &DatasetSplit,
    schemes: &[(String, TrainConfig)],
    net_config: &NetworkConfig,
    seeds: &[u64],
) -> Result<Vec<SchemeRow>> {
    if schemes.len() < 2 {
        return Err(Error::InvalidConfig("scheme comparison needs at least two schemes".into()));
    }
    if seeds.is_empty() {
        return Err(Error::InvalidConfig("scheme comparison needs at least one seed".into()));
    }
    let results: Vec<Result<SchemeRow>> = std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for (name, config) in schemes {
            for &seed in seeds {
                let mut config = config.clone();
                config.seed = seed;
                let name = name.clone();
                handles.push(scope.spawn(move || -> Result<SchemeRow> {
                    let model = run_training(data, &config, net_config)?;
                    let report = evaluate(&model.network, &data.test, model.scheduler.tau())?;
                    Ok(SchemeRow {
                        scheme: name,
                        seed,
                        mean_accuracy: report.mean_accuracy,
                    })
                }));
            }
        }
        handles.into_iter().map(|h| h.join().expect("no panics")).collect()
    });
    results.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, Sample, SynthConfig};
    use crate::network::{
        build_network, AttributeGroup, AttributeSpec, BackboneConfig, HeadConfig,
    };
    use crate::tensor::Tensor;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn desk_net(spec: &AttributeSpec, seed: u64) -> DmmNetwork {
        let config = NetworkConfig {
            backbone: BackboneConfig {
                in_channels: 1,
                block_channels: vec![4],
                conv_kernel: 3,
                pool_size: 2,
            },
            heads: HeadConfig {
                objective_hidden: 8,
                subjective_hidden: (8, 4),
                fld_hidden: 8,
            },
            grouped: true,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        build_network(spec, &config, 2, &mut rng).unwrap()
    }

    fn samples_with_labels(labels: Vec<Vec<f64>>) -> Vec<Sample> {
        labels
            .into_iter()
            .map(|l| {
                Sample::new(Tensor::zeros(vec![1, 8, 8]), l, vec![0.5, 0.5, 0.5, 0.5]).unwrap()
            })
            .collect()
    }

    #[test]
    fn zero_network_on_all_negative_labels_is_perfect() {
        // a zeroed network outputs 0 everywhere; with tau = 0 every
        // prediction is -1, which matches all-negative labels exactly
        let spec = AttributeSpec::new(
            vec!["a".into(), "b".into()],
            vec![AttributeGroup::Objective, AttributeGroup::Subjective],
        )
        .unwrap();
        let mut net = desk_net(&spec, 3);
        for t in net.param_tensors_mut() {
            t.fill(0.0);
        }
        let samples = samples_with_labels(vec![vec![-1.0, -1.0]; 6]);
        let report = evaluate(&net, &samples, &[0.0, 0.0]).unwrap();
        for stats in &report.per_attribute {
            assert_eq!(stats.accuracy, 1.0);
        }
        assert_eq!(report.mean_accuracy, 1.0);
    }

    #[test]
    fn constant_negative_predictor_on_rare_attribute() {
        // 5% positives, all predicted negative: accuracy 0.95, balanced 0.5
        let spec = AttributeSpec::new(
            vec!["rare".into(), "other".into()],
            vec![AttributeGroup::Objective, AttributeGroup::Subjective],
        )
        .unwrap();
        let mut net = desk_net(&spec, 5);
        for t in net.param_tensors_mut() {
            t.fill(0.0);
        }
        let mut labels = vec![vec![-1.0, -1.0]; 20];
        labels[3][0] = 1.0; // exactly 1 of 20 positive on the rare attribute
        let samples = samples_with_labels(labels);
        let report = evaluate(&net, &samples, &[0.0, 0.0]).unwrap();
        assert_eq!(report.per_attribute[0].accuracy, 0.95);
        assert_eq!(report.per_attribute[0].balanced_accuracy, 0.5);
    }

    #[test]
    fn counts_match_confusion_matrix_oracle() {
        let spec = AttributeSpec::new(
            vec!["x".into(), "y".into()],
            vec![AttributeGroup::Objective, AttributeGroup::Subjective],
        )
        .unwrap();
        let net = desk_net(&spec, 11);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let samples: Vec<Sample> = (0..30)
            .map(|_| {
                let image = Tensor::new(
                    vec![1, 8, 8],
                    (0..64).map(|_| rng.random_range(0.0..1.0)).collect(),
                )
                .unwrap();
                let labels = (0..2)
                    .map(|_| if rng.random_range(0.0..1.0) < 0.5 { 1.0 } else { -1.0 })
                    .collect();
                Sample::new(image, labels, vec![0.5; 4]).unwrap()
            })
            .collect();
        let tau = [0.05, -0.1];
        let report = evaluate(&net, &samples, &tau).unwrap();

        // brute-force confusion matrix
        for jj in 0..2 {
            let mut counts = (0u64, 0u64, 0u64, 0u64); // tp tn fp fn
            for s in &samples {
                let out = net.forward(&s.image).unwrap().attributes[jj];
                let pred = if out > tau[jj] { 1.0 } else { -1.0 };
                match (pred > 0.0, s.labels[jj] > 0.0) {
                    (true, true) => counts.0 += 1,
                    (false, false) => counts.1 += 1,
                    (true, false) => counts.2 += 1,
                    (false, true) => counts.3 += 1,
                }
            }
            let stats = &report.per_attribute[jj];
            assert_eq!((stats.tp, stats.tn, stats.fp, stats.fn_count), counts);
            assert_eq!(stats.tp + stats.tn + stats.fp + stats.fn_count, 30);
            assert_eq!(stats.accuracy, (counts.0 + counts.1) as f64 / 30.0);
        }
        let mean: f64 = report.per_attribute.iter().map(|a| a.accuracy).sum::<f64>() / 2.0;
        assert_eq!(report.mean_accuracy, mean);
    }

    #[test]
    fn evaluation_is_pure() {
        let spec = AttributeSpec::new(
            vec!["x".into(), "y".into()],
            vec![AttributeGroup::Objective, AttributeGroup::Subjective],
        )
        .unwrap();
        let net = desk_net(&spec, 17);
        let samples = samples_with_labels(vec![vec![1.0, -1.0]; 4]);
        let a = evaluate(&net, &samples, &[0.0, 0.0]).unwrap();
        let b = evaluate(&net, &samples, &[0.0, 0.0]).unwrap();
        assert_eq!(a.per_attribute, b.per_attribute);
        assert_eq!(a.mean_accuracy, b.mean_accuracy);
    }

    #[test]
    fn empty_sample_set_is_an_error() {
        let spec = AttributeSpec::new(
            vec!["x".into(), "y".into()],
            vec![AttributeGroup::Objective, AttributeGroup::Subjective],
        )
        .unwrap();
        let net = desk_net(&spec, 19);
        assert!(matches!(
            evaluate(&net, &[], &[0.0, 0.0]),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn identical_scheme_configs_produce_identical_rows() {
        let data = generate_synthetic(&SynthConfig {
            train: 40,
            val: 15,
            test: 15,
            seed: 23,
            ..SynthConfig::default()
        })
        .unwrap();
        let net_config = NetworkConfig {
            backbone: BackboneConfig {
                in_channels: 1,
                block_channels: vec![4],
                conv_kernel: 3,
                pool_size: 2,
            },
            heads: HeadConfig {
                objective_hidden: 8,
                subjective_hidden: (8, 4),
                fld_hidden: 8,
            },
            grouped: true,
        };
        let config = TrainConfig {
            max_iterations: 6,
            update_interval: 3,
            batch_size: 8,
            ..TrainConfig::default()
        };
        let schemes = vec![
            ("first".to_string(), config.clone()),
            ("second".to_string(), config),
        ];
        let rows = compare_schemes(&data, &schemes, &net_config, &[1, 2]).unwrap();
        assert_eq!(rows.len(), 4);
        // same config, same seed, different label: identical accuracy
        assert_eq!(rows[0].mean_accuracy, rows[2].mean_accuracy);
        assert_eq!(rows[1].mean_accuracy, rows[3].mean_accuracy);
        assert_eq!(
            rows.iter().map(|r| r.seed).collect::<Vec<_>>(),
            vec![1, 2, 1, 2]
        );
    }
}
