//! The joint training loop.
//!
//! Iteration structure: the loop counter starts at 0 and every iteration
//! whose counter is a multiple of the update interval P first runs a
//! scheduler pass over the whole validation source — per-attribute
//! validation losses, then the threshold update, then the weight update,
//! then the update counter increment — before the minibatch joint loss and
//! SGD step for that iteration. The pass at counter 0 sees an untrained
//! network and no previous losses, so it serves as the baseline: it records
//! the reference losses and leaves weights at 1 and thresholds at 0.
//! Training performs exactly `max_iterations` gradient steps; a final
//! scheduler pass lands on the closing boundary when the interval divides
//! the iteration count, so a run always logs `M / P + 1` scheduler passes.
//!
//! The learning rate decays by a fixed factor when the validation objective
//! has not improved for `plateau_patience` consecutive scheduler passes; the
//! streak resets after each decay so a plateau triggers at most one cut.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::DatasetSplit;
use crate::error::{Error, Result};
use crate::eval::evaluate;
use crate::losses::{fac_loss_grad, fac_loss_per_attribute, fld_loss, fld_loss_grad, joint_loss};
use crate::network::{build_network, DmmNetwork, NetworkConfig};
use crate::scheduler::{count_fp_fn, predict_labels, SchedulerState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidationSource {
    /// Scheduler statistics come from the validation split.
    ValSplit,
    /// No validation split exists; statistics come from the training split.
    TrainSplit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlateauMetric {
    /// Weighted joint validation loss.
    JointLoss,
    /// Unweighted mean of the per-attribute validation losses.
    MeanFacLoss,
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub max_iterations: u64,
    /// Scheduler update interval P, in iterations.
    pub update_interval: u64,
    pub batch_size: usize,
    pub base_lr: f64,
    pub lr_decay_factor: f64,
    /// Scheduler passes without improvement before one LR cut.
    pub plateau_patience: u32,
    pub plateau_metric: PlateauMetric,
    /// Weight of the landmark loss in the joint objective.
    pub beta: f64,
    /// Threshold adaptation step constant.
    pub gamma: f64,
    pub momentum: f64,
    pub seed: u64,
    pub use_fld: bool,
    pub use_dynamic_weights: bool,
    pub use_adaptive_threshold: bool,
    pub use_grouping: bool,
    pub validation_source: ValidationSource,
    /// Optional cap on dynamic weights; off by default.
    pub lambda_cap: Option<f64>,
    pub freeze_backbone: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_iterations: 3000,
            update_interval: 100,
            batch_size: 64,
            base_lr: 0.001,
            lr_decay_factor: 0.1,
            plateau_patience: 3,
            plateau_metric: PlateauMetric::JointLoss,
            beta: 0.5,
            gamma: 0.01,
            momentum: 0.0,
            seed: 0,
            use_fld: true,
            use_dynamic_weights: true,
            use_adaptive_threshold: true,
            use_grouping: true,
            validation_source: ValidationSource::ValSplit,
            lambda_cap: None,
            freeze_backbone: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max iterations must be positive".into()));
        }
        if self.update_interval == 0 {
            return Err(Error::InvalidConfig("update interval must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be positive".into()));
        }
        if !(self.base_lr > 0.0) {
            return Err(Error::InvalidConfig("base learning rate must be positive".into()));
        }
        if !(self.lr_decay_factor > 0.0 && self.lr_decay_factor <= 1.0) {
            return Err(Error::InvalidConfig("LR decay factor must lie in (0, 1]".into()));
        }
        if self.beta < 0.0 || self.gamma < 0.0 {
            return Err(Error::InvalidConfig("beta and gamma must be non-negative".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidConfig("momentum must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// One attribute's numbers at one scheduler pass.
#[derive(Debug, Clone, PartialEq)]
pub struct AttrTraceRow {
    pub val_loss: f64,
    pub lambda: f64,
    pub tau: f64,
    pub fp: u64,
    pub fn_count: u64,
}

/// One scheduler pass: per-attribute rows in canonical attribute order.
#[derive(Debug, Clone, PartialEq)]
pub struct SchedulerUpdate {
    pub iteration: u64,
    pub epoch: u64,
    /// 0 for the baseline pass, then 1, 2, ... per pass.
    pub update_index: u64,
    pub rows: Vec<AttrTraceRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LrEvent {
    pub iteration: u64,
    pub old_lr: f64,
    pub new_lr: f64,
}

/// Instrumented loop events, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopEvent {
    ValidationLoss { iteration: u64 },
    ThresholdUpdate { iteration: u64 },
    WeightUpdate { iteration: u64 },
    CounterIncrement { iteration: u64, t: u64 },
    JointLoss { iteration: u64 },
    SgdStep { iteration: u64 },
}

#[derive(Debug, Clone, Default)]
pub struct TrainLog {
    pub attribute_names: Vec<String>,
    pub scheduler_updates: Vec<SchedulerUpdate>,
    /// (iteration, minibatch joint loss), one entry per gradient step.
    pub loss_curve: Vec<(u64, f64)>,
    pub lr_events: Vec<LrEvent>,
    pub events: Vec<LoopEvent>,
}

/// Tracks the best seen loss and decays once per completed
/// non-improvement streak.
#[derive(Debug, Clone)]
pub struct PlateauTracker {
    best: f64,
    streak: u32,
    patience: u32,
}

impl PlateauTracker {
    pub fn new(patience: u32) -> Self {
        PlateauTracker {
            best: f64::INFINITY,
            streak: 0,
            patience,
        }
    }

    /// Returns true when a decay should fire now.
    pub fn observe(&mut self, loss: f64) -> bool {
        if loss < self.best {
            self.best = loss;
            self.streak = 0;
            return false;
        }
        self.streak += 1;
        if self.streak >= self.patience {
            self.streak = 0;
            return true;
        }
        false
    }
}

/// Final learning rate after feeding a validation-loss history through the
/// plateau rule, starting from `base_lr`.
pub fn lr_policy(history: &[f64], base_lr: f64, decay_factor: f64, patience: u32) -> f64 {
    let mut tracker = PlateauTracker::new(patience);
    let mut lr = base_lr;
    for &loss in history {
        if tracker.observe(loss) {
            lr *= decay_factor;
        }
    }
    lr
}

/// Epoch-wise shuffling without replacement; the order of each epoch is a
/// pure function of (seed, epoch).
struct BatchSampler {
    n: usize,
    batch_size: usize,
    seed: u64,
    order: Vec<usize>,
    pos: usize,
    samples_seen: u64,
    epochs_shuffled: u64,
}

impl BatchSampler {
    fn new(n: usize, batch_size: usize, seed: u64) -> Self {
        let mut sampler = BatchSampler {
            n,
            batch_size,
            seed,
            order: (0..n).collect(),
            pos: 0,
            samples_seen: 0,
            epochs_shuffled: 0,
        };
        sampler.shuffle();
        sampler
    }

    fn shuffle(&mut self) {
        let mix = self
            .seed
            .wrapping_add(self.epochs_shuffled.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut rng = ChaCha8Rng::seed_from_u64(mix);
        self.order = (0..self.n).collect();
        self.order.shuffle(&mut rng);
        self.epochs_shuffled += 1;
        self.pos = 0;
    }

    /// 1-based epoch of the next batch.
    fn epoch(&self) -> u64 {
        self.samples_seen / self.n as u64 + 1
    }

    fn next_batch(&mut self) -> Vec<usize> {
        if self.pos >= self.n {
            self.shuffle();
        }
        let take = self.batch_size.min(self.n - self.pos);
        let batch = self.order[self.pos..self.pos + take].to_vec();
        self.pos += take;
        self.samples_seen += take as u64;
        batch
    }
}

struct ValStats {
    fac: Vec<f64>,
    fld: f64,
    fp: Vec<u64>,
    fn_count: Vec<u64>,
    size: usize,
}

fn validation_stats(
    net: &DmmNetwork,
    samples: &[crate::data::Sample],
    tau: &[f64],
) -> Result<ValStats> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("validation source has no samples".into()));
    }
    let mut attr_preds = Vec::with_capacity(samples.len());
    let mut labels = Vec::with_capacity(samples.len());
    let mut lm_preds = Vec::with_capacity(samples.len());
    let mut lm_truth = Vec::with_capacity(samples.len());
    for sample in samples {
        let pred = net.forward(&sample.image)?;
        attr_preds.push(pred.attributes);
        lm_preds.push(pred.landmarks);
        labels.push(sample.labels.clone());
        lm_truth.push(sample.landmarks.clone());
    }
    let fac = fac_loss_per_attribute(&attr_preds, &labels)?;
    let fld = fld_loss(&lm_preds, &lm_truth)?;
    let decisions = predict_labels(&attr_preds, tau);
    let (fp, fn_count) = count_fp_fn(&decisions, &labels)?;
    Ok(ValStats {
        fac,
        fld,
        fp,
        fn_count,
        size: samples.len(),
    })
}

/// Trains `net` in place and returns the log together with the final
/// scheduler state.
pub fn train(
    net: &mut DmmNetwork,
    data: &DatasetSplit,
    config: &TrainConfig,
) -> Result<(TrainLog, SchedulerState)> {
    config.validate()?;
    if net.config().grouped != config.use_grouping {
        return Err(Error::InvalidConfig(
            "network grouping does not match the training configuration".into(),
        ));
    }
    let j = data.spec.len();
    if net.spec() != &data.spec {
        return Err(Error::InvalidConfig(
            "network attribute spec does not match the dataset".into(),
        ));
    }
    let val_samples: &[crate::data::Sample] = match config.validation_source {
        ValidationSource::ValSplit => {
            if data.val.is_empty() {
                return Err(Error::EmptyInput(
                    "validation split is empty; switch the scheduler to the training split".into(),
                ));
            }
            &data.val
        }
        ValidationSource::TrainSplit => &data.train,
    };

    let mut scheduler = SchedulerState::new(j, config.gamma, config.lambda_cap)?;
    let mut sampler = BatchSampler::new(data.train.len(), config.batch_size, config.seed);
    let mut plateau = PlateauTracker::new(config.plateau_patience);
    let mut lr = config.base_lr;
    let mut log = TrainLog {
        attribute_names: data.spec.names().to_vec(),
        ..TrainLog::default()
    };
    let mut update_index = 0u64;

    let mut iteration = 0u64;
    loop {
        scheduler.set_epoch(sampler.epoch());

        if iteration % config.update_interval == 0 {
            let stats = validation_stats(net, val_samples, scheduler.tau())?;
            log.events.push(LoopEvent::ValidationLoss { iteration });

            if scheduler.has_baseline() {
                if config.use_adaptive_threshold {
                    scheduler.update_thresholds(&stats.fp, &stats.fn_count, stats.size)?;
                    log.events.push(LoopEvent::ThresholdUpdate { iteration });
                }
                if config.use_dynamic_weights {
                    scheduler.update_weights(&stats.fac)?;
                    log.events.push(LoopEvent::WeightUpdate { iteration });
                    log.events.push(LoopEvent::CounterIncrement {
                        iteration,
                        t: scheduler.update_count(),
                    });
                } else {
                    // keep the reference losses current even with fixed weights
                    scheduler.record_baseline(&stats.fac)?;
                }
                update_index += 1;
            } else {
                scheduler.record_baseline(&stats.fac)?;
            }

            log.scheduler_updates.push(SchedulerUpdate {
                iteration,
                epoch: scheduler.epoch(),
                update_index,
                rows: (0..j)
                    .map(|jj| AttrTraceRow {
                        val_loss: stats.fac[jj],
                        lambda: scheduler.lambda()[jj],
                        tau: scheduler.tau()[jj],
                        fp: stats.fp[jj],
                        fn_count: stats.fn_count[jj],
                    })
                    .collect(),
            });

            let metric = match config.plateau_metric {
                PlateauMetric::JointLoss => {
                    let fld_term = if config.use_fld { stats.fld } else { 0.0 };
                    joint_loss(&stats.fac, scheduler.lambda(), fld_term, config.beta)?
                }
                PlateauMetric::MeanFacLoss => {
                    stats.fac.iter().sum::<f64>() / stats.fac.len() as f64
                }
            };
            if plateau.observe(metric) {
                let old_lr = lr;
                lr *= config.lr_decay_factor;
                log.lr_events.push(LrEvent {
                    iteration,
                    old_lr,
                    new_lr: lr,
                });
            }
        }

        if iteration >= config.max_iterations {
            break;
        }

        // minibatch joint loss and one SGD step
        let batch = sampler.next_batch();
        let mut traces = Vec::with_capacity(batch.len());
        let mut attr_preds = Vec::with_capacity(batch.len());
        let mut labels = Vec::with_capacity(batch.len());
        let mut lm_preds = Vec::with_capacity(batch.len());
        let mut lm_truth = Vec::with_capacity(batch.len());
        for &idx in &batch {
            let sample = &data.train[idx];
            let trace = net.forward_trace(&sample.image)?;
            attr_preds.push(trace.outputs.attributes.clone());
            lm_preds.push(trace.outputs.landmarks.clone());
            labels.push(sample.labels.clone());
            lm_truth.push(sample.landmarks.clone());
            traces.push(trace);
        }

        let fac = fac_loss_per_attribute(&attr_preds, &labels)?;
        let fld = if config.use_fld {
            fld_loss(&lm_preds, &lm_truth)?
        } else {
            0.0
        };
        let joint = joint_loss(&fac, scheduler.lambda(), fld, config.beta)?;
        if !joint.is_finite() {
            return Err(Error::NonFiniteLoss {
                iteration,
                attribute_losses: fac,
                fld_loss: fld,
            });
        }
        log.events.push(LoopEvent::JointLoss { iteration });
        log.loss_curve.push((iteration, joint));

        let d_attr = fac_loss_grad(&attr_preds, &labels, scheduler.lambda())?;
        let d_lm: Vec<Vec<f64>> = if config.use_fld {
            fld_loss_grad(&lm_preds, &lm_truth)?
                .into_iter()
                .map(|row| row.into_iter().map(|g| config.beta * g).collect())
                .collect()
        } else {
            lm_truth.iter().map(|row| vec![0.0; row.len()]).collect()
        };
        for ((trace, da), dl) in traces.iter().zip(&d_attr).zip(&d_lm) {
            net.backward_from_trace(trace, da, dl)?;
        }
        net.sgd_step(lr, config.momentum, config.freeze_backbone);
        log.events.push(LoopEvent::SgdStep { iteration });

        iteration += 1;
    }

    Ok((log, scheduler))
}

/// A trained model with everything needed to evaluate or checkpoint it.
#[derive(Debug)]
pub struct TrainedModel {
    pub network: DmmNetwork,
    pub scheduler: SchedulerState,
    pub log: TrainLog,
}

/// Builds a network matching `data` and `config`, then trains it. The
/// network's input channels and landmark count come from the dataset; the
/// grouping flag comes from the training configuration.
pub fn run_training(
    data: &DatasetSplit,
    config: &TrainConfig,
    net_config: &NetworkConfig,
) -> Result<TrainedModel> {
    let mut net_config = net_config.clone();
    net_config.grouped = config.use_grouping;
    net_config.backbone.in_channels = data.input_channels();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut network = build_network(&data.spec, &net_config, data.landmark_count(), &mut rng)?;
    let (log, scheduler) = train(&mut network, data, config)?;
    Ok(TrainedModel {
        network,
        scheduler,
        log,
    })
}

/// The seven training variants: every combination of the four switches used
/// in the ablation grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AblationVariant {
    pub name: &'static str,
    pub use_fld: bool,
    pub use_dynamic_weights: bool,
    pub use_adaptive_threshold: bool,
    pub use_grouping: bool,
}

pub fn ablation_variants() -> [AblationVariant; 7] {
    [
        AblationVariant {
            name: "Baseline",
            use_fld: false,
            use_dynamic_weights: false,
            use_adaptive_threshold: false,
            use_grouping: false,
        },
        AblationVariant {
            name: "DMM-FAC",
            use_fld: false,
            use_dynamic_weights: true,
            use_adaptive_threshold: true,
            use_grouping: true,
        },
        AblationVariant {
            name: "DMM-EQ-FIX",
            use_fld: true,
            use_dynamic_weights: false,
            use_adaptive_threshold: false,
            use_grouping: true,
        },
        AblationVariant {
            name: "DMM-EQ-AT",
            use_fld: true,
            use_dynamic_weights: false,
            use_adaptive_threshold: true,
            use_grouping: true,
        },
        AblationVariant {
            name: "DMM-DW-FIX",
            use_fld: true,
            use_dynamic_weights: true,
            use_adaptive_threshold: false,
            use_grouping: true,
        },
        AblationVariant {
            name: "DMM-SPP",
            use_fld: true,
            use_dynamic_weights: true,
            use_adaptive_threshold: true,
            use_grouping: false,
        },
        AblationVariant {
            name: "DMM-CNN",
            use_fld: true,
            use_dynamic_weights: true,
            use_adaptive_threshold: true,
            use_grouping: true,
        },
    ]
}

impl AblationVariant {
    pub fn apply(&self, base: &TrainConfig) -> TrainConfig {
        TrainConfig {
            use_fld: self.use_fld,
            use_dynamic_weights: self.use_dynamic_weights,
            use_adaptive_threshold: self.use_adaptive_threshold,
            use_grouping: self.use_grouping,
            ..base.clone()
        }
    }
}

#[derive(Debug, Clone)]
pub struct AblationRow {
    pub variant: String,
    pub per_attribute_accuracy: Vec<f64>,
    pub mean_accuracy: f64,
}

/// Trains all seven variants on the same data and seed, evaluating each on
/// the test split at its own final thresholds. Variants run on worker
/// threads; results keep the grid order.
pub fn run_ablation_suite(
    data: &DatasetSplit,
    base: &TrainConfig,
    net_config: &NetworkConfig,
) -> Result<Vec<AblationRow>> {
    let variants = ablation_variants();
    let results: Vec<Result<AblationRow>> = std::thread::scope(|scope| {
        let handles: Vec<_> = variants
            .iter()
            .map(|variant| {
                scope.spawn(move || -> Result<AblationRow> {
                    let config = variant.apply(base);
                    let model = run_training(data, &config, net_config)?;
                    let report = evaluate(&model.network, &data.test, model.scheduler.tau())?;
                    Ok(AblationRow {
                        variant: variant.name.to_string(),
                        per_attribute_accuracy: report
                            .per_attribute
                            .iter()
                            .map(|a| a.accuracy)
                            .collect(),
                        mean_accuracy: report.mean_accuracy,
                    })
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("no panics")).collect()
    });
    results.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SynthConfig};
    use crate::network::{BackboneConfig, HeadConfig};

    fn tiny_data() -> DatasetSplit {
        let config = SynthConfig {
            train: 60,
            val: 20,
            test: 20,
            seed: 5,
            ..SynthConfig::default()
        };
        generate_synthetic(&config).unwrap()
    }

    fn tiny_net_config() -> NetworkConfig {
        NetworkConfig {
            backbone: BackboneConfig {
                in_channels: 1,
                block_channels: vec![4, 8],
                conv_kernel: 3,
                pool_size: 2,
            },
            heads: HeadConfig {
                objective_hidden: 16,
                subjective_hidden: (16, 8),
                fld_hidden: 16,
            },
            grouped: true,
        }
    }

    fn tiny_config(m: u64, p: u64) -> TrainConfig {
        TrainConfig {
            max_iterations: m,
            update_interval: p,
            batch_size: 8,
            seed: 1,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn scheduler_pass_count_and_weight_updates() {
        let data = tiny_data();
        let model = run_training(&data, &tiny_config(10, 5), &tiny_net_config()).unwrap();
        // passes at iterations 0, 5, 10
        assert_eq!(model.log.scheduler_updates.len(), 3);
        let iterations: Vec<u64> = model
            .log
            .scheduler_updates
            .iter()
            .map(|u| u.iteration)
            .collect();
        assert_eq!(iterations, vec![0, 5, 10]);
        // baseline does not advance the weight-update counter
        assert_eq!(model.scheduler.update_count(), 2);
        assert_eq!(model.log.loss_curve.len(), 10);
    }

    #[test]
    fn pass_count_with_indivisible_interval() {
        let data = tiny_data();
        let model = run_training(&data, &tiny_config(10, 3), &tiny_net_config()).unwrap();
        let iterations: Vec<u64> = model
            .log
            .scheduler_updates
            .iter()
            .map(|u| u.iteration)
            .collect();
        assert_eq!(iterations, vec![0, 3, 6, 9]);
    }

    #[test]
    fn all_switches_off_reduces_to_plain_mse_training() {
        let data = tiny_data();
        let mut config = tiny_config(10, 5);
        config.use_fld = false;
        config.use_dynamic_weights = false;
        config.use_adaptive_threshold = false;
        config.use_grouping = false;
        let model = run_training(&data, &config, &tiny_net_config()).unwrap();
        // weights stay uniform, thresholds stay zero, counter never advances
        for update in &model.log.scheduler_updates {
            for row in &update.rows {
                assert_eq!(row.lambda, 1.0);
                assert_eq!(row.tau, 0.0);
            }
        }
        assert_eq!(model.scheduler.update_count(), 0);
    }

    #[test]
    fn fixed_seed_reproduces_the_log_and_parameters() {
        let data = tiny_data();
        let a = run_training(&data, &tiny_config(12, 4), &tiny_net_config()).unwrap();
        let b = run_training(&data, &tiny_config(12, 4), &tiny_net_config()).unwrap();
        assert_eq!(a.log.loss_curve, b.log.loss_curve);
        assert_eq!(a.log.scheduler_updates, b.log.scheduler_updates);
        for (x, y) in a
            .network
            .param_tensors()
            .iter()
            .zip(b.network.param_tensors())
        {
            assert_eq!(x.data(), y.data());
        }
    }

    #[test]
    fn disabling_fld_equals_zero_beta() {
        let data = tiny_data();
        let mut without_fld = tiny_config(8, 4);
        without_fld.use_fld = false;
        let mut zero_beta = tiny_config(8, 4);
        zero_beta.use_fld = true;
        zero_beta.beta = 0.0;
        let a = run_training(&data, &without_fld, &tiny_net_config()).unwrap();
        let b = run_training(&data, &zero_beta, &tiny_net_config()).unwrap();
        for (x, y) in a
            .network
            .param_tensors()
            .iter()
            .zip(b.network.param_tensors())
        {
            assert_eq!(x.data(), y.data());
        }
    }

    #[test]
    fn event_order_within_each_iteration() {
        let data = tiny_data();
        let model = run_training(&data, &tiny_config(4, 2), &tiny_net_config()).unwrap();
        // iteration 0: baseline pass (validation only), then step
        // iteration 2: full pass, then step; closing pass at 4
        use LoopEvent::*;
        let expected = vec![
            ValidationLoss { iteration: 0 },
            JointLoss { iteration: 0 },
            SgdStep { iteration: 0 },
            JointLoss { iteration: 1 },
            SgdStep { iteration: 1 },
            ValidationLoss { iteration: 2 },
            ThresholdUpdate { iteration: 2 },
            WeightUpdate { iteration: 2 },
            CounterIncrement { iteration: 2, t: 1 },
            JointLoss { iteration: 2 },
            SgdStep { iteration: 2 },
            JointLoss { iteration: 3 },
            SgdStep { iteration: 3 },
            ValidationLoss { iteration: 4 },
            ThresholdUpdate { iteration: 4 },
            WeightUpdate { iteration: 4 },
            CounterIncrement { iteration: 4, t: 2 },
        ];
        assert_eq!(model.log.events, expected);
    }

    #[test]
    fn empty_validation_split_is_rejected() {
        let config = SynthConfig {
            train: 30,
            val: 0,
            test: 10,
            seed: 2,
            ..SynthConfig::default()
        };
        let data = generate_synthetic(&config).unwrap();
        let err = run_training(&data, &tiny_config(4, 2), &tiny_net_config()).unwrap_err();
        assert!(matches!(err, Error::EmptyInput(_)));

        // the training-split source is the escape hatch
        let mut cfg = tiny_config(4, 2);
        cfg.validation_source = ValidationSource::TrainSplit;
        assert!(run_training(&data, &cfg, &tiny_net_config()).is_ok());
    }

    #[test]
    fn lr_unchanged_on_strictly_decreasing_history() {
        let history = [5.0, 4.0, 3.0, 2.0, 1.0];
        assert_eq!(lr_policy(&history, 0.001, 0.1, 3), 0.001);
    }

    #[test]
    fn lr_decays_once_after_patience_flat_updates() {
        // first value sets the best; three non-improvements complete a plateau
        let history = [1.0, 1.0, 1.0, 1.0];
        let lr = lr_policy(&history, 0.001, 0.1, 3);
        assert!((lr - 0.0001).abs() < 1e-12);
    }

    #[test]
    fn two_plateaus_decay_twice() {
        let history = [1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        let lr = lr_policy(&history, 0.001, 0.1, 3);
        assert!((lr - 0.00001).abs() < 1e-12);
    }

    #[test]
    fn ablation_grid_matches_the_seven_variant_table() {
        let variants = ablation_variants();
        let as_tuple = |v: &AblationVariant| {
            (
                v.name,
                v.use_fld,
                v.use_dynamic_weights,
                v.use_adaptive_threshold,
                v.use_grouping,
            )
        };
        let expected = [
            ("Baseline", false, false, false, false),
            ("DMM-FAC", false, true, true, true),
            ("DMM-EQ-FIX", true, false, false, true),
            ("DMM-EQ-AT", true, false, true, true),
            ("DMM-DW-FIX", true, true, false, true),
            ("DMM-SPP", true, true, true, false),
            ("DMM-CNN", true, true, true, true),
        ];
        assert_eq!(variants.map(|v| as_tuple(&v)), expected);
    }

    #[test]
    fn sampler_epochs_are_pure_functions_of_seed() {
        let mut a = BatchSampler::new(10, 4, 3);
        let mut b = BatchSampler::new(10, 4, 3);
        for _ in 0..7 {
            assert_eq!(a.next_batch(), b.next_batch());
        }
        // batches within one epoch never repeat an index
        let mut c = BatchSampler::new(10, 3, 9);
        let mut seen = Vec::new();
        for _ in 0..4 {
            seen.extend(c.next_batch());
        }
        let mut epoch: Vec<usize> = seen[..10].to_vec();
        epoch.sort_unstable();
        assert_eq!(epoch, (0..10).collect::<Vec<_>>());
    }
}
