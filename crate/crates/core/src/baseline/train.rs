use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::features::{extract_features, FeatureConfig, FeatureVector};
use super::model::{loss_and_logit_gradient, Head, LinearModel, Target};
use crate::error::{Error, Result};
use crate::ingest::{PredictionPayload, PredictionRecord};
use crate::labels::{
    counts_to_distribution, ConversionConfig, FourWayLabel, LabelDistribution, LabelSet,
};
use crate::metrics::{fourway_report, multilabel_report, MultilabelOptions};
use crate::relabel::LabeledItem;
use crate::rng;

/// One training or evaluation item with targets for every head.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub uid: String,
    pub features: FeatureVector,
    pub fourway: FourWayLabel,
    pub multilabel: LabelSet,
    /// Normalized vote distribution.
    pub soft: [f64; 3],
}

impl Example {
    pub fn from_labeled(item: &LabeledItem, features: &FeatureConfig) -> Result<Self> {
        Ok(Example {
            uid: item.item.uid.clone(),
            features: extract_features(&item.item.premise, &item.item.hypothesis, features)?,
            fourway: item.fourway,
            multilabel: item.multilabel,
            soft: counts_to_distribution(&item.item.counts)?.as_array(),
        })
    }

    pub fn target(&self, head: Head) -> Target {
        match head {
            Head::Softmax4 => Target::Class(self.fourway.index()),
            Head::Sigmoid3 => Target::Labels(self.multilabel),
            Head::MixupSoftmax3 => Target::Soft(self.soft),
        }
    }
}

/// A virtual item interpolating two examples' features and soft labels.
pub fn mixup_pair(a: &Example, b: &Example, lambda: f64) -> Result<(FeatureVector, [f64; 3])> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidInput(format!("mixup lambda {lambda} outside [0, 1]")));
    }
    let soft = std::array::from_fn(|i| lambda * a.soft[i] + (1.0 - lambda) * b.soft[i]);
    Ok((FeatureVector::mix(&a.features, &b.features, lambda), soft))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub head: Head,
    pub initial_lr: f64,
    pub lr_decay_factor: f64,
    /// Non-improving epochs before the learning rate decays.
    pub plateau_epochs_for_decay: usize,
    pub max_epochs: usize,
    /// Non-improving epochs before training stops.
    pub early_stop_patience: usize,
    pub seed: u64,
    pub batch_size: usize,
    /// Beta(alpha, alpha) for MixUp lambda; 0 means lambda is 0 or 1 with
    /// equal odds.
    pub mixup_alpha: f64,
    /// Use this lambda instead of sampling.
    pub mixup_lambda: Option<f64>,
    /// Turn interpolation off and train on plain soft labels.
    pub mixup_enabled: bool,
    pub conversion: ConversionConfig,
    pub features: FeatureConfig,
}

impl TrainConfig {
    /// Default schedule for each head.
    pub fn for_head(head: Head) -> Self {
        let (initial_lr, plateau, patience) = match head {
            Head::Softmax4 => (1e-5, 2, 10),
            Head::Sigmoid3 => (5e-6, 1, 10),
            Head::MixupSoftmax3 => (1e-6, 2, 5),
        };
        TrainConfig {
            head,
            initial_lr,
            lr_decay_factor: 0.8,
            plateau_epochs_for_decay: plateau,
            max_epochs: 30,
            early_stop_patience: patience,
            seed: 0,
            batch_size: 32,
            mixup_alpha: 1.0,
            mixup_lambda: None,
            mixup_enabled: true,
            conversion: ConversionConfig::default(),
            features: FeatureConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if !(self.lr_decay_factor > 0.0 && self.lr_decay_factor < 1.0) {
            return fail(format!("lr_decay_factor must lie in (0, 1), got {}", self.lr_decay_factor));
        }
        if !(self.initial_lr > 0.0 && self.initial_lr.is_finite()) {
            return fail(format!("initial_lr must be positive, got {}", self.initial_lr));
        }
        if self.early_stop_patience < self.plateau_epochs_for_decay {
            return fail(format!(
                "early_stop_patience ({}) must be at least plateau_epochs_for_decay ({})",
                self.early_stop_patience, self.plateau_epochs_for_decay
            ));
        }
        if self.plateau_epochs_for_decay == 0 || self.max_epochs == 0 || self.batch_size == 0 {
            return fail("plateau_epochs_for_decay, max_epochs and batch_size must be positive".to_string());
        }
        if !(self.mixup_alpha >= 0.0 && self.mixup_alpha.is_finite()) {
            return fail(format!("mixup_alpha must be nonnegative, got {}", self.mixup_alpha));
        }
        if let Some(l) = self.mixup_lambda {
            if !(0.0..=1.0).contains(&l) {
                return fail(format!("mixup_lambda must lie in [0, 1], got {l}"));
            }
        }
        self.conversion.validate()?;
        self.features.validate()
    }

    /// SHA-256 of the JSON form, hex encoded.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    fn mixes(&self) -> bool {
        self.head == Head::MixupSoftmax3 && self.mixup_enabled
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Learning rate used during the epoch.
    pub lr: f64,
    pub train_loss: f64,
    pub dev_f1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    /// Parameters after the best dev epoch.
    pub model: LinearModel,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
}

pub fn history_csv(history: &[EpochRecord]) -> String {
    let mut out = String::from("epoch,lr,train_loss,dev_f1\n");
    for r in history {
        out.push_str(&format!("{},{:e},{:.10},{:.6}\n", r.epoch, r.lr, r.train_loss, r.dev_f1));
    }
    out
}

/// Dev score used for model selection: 4-way macro F1 for softmax4,
/// multilabel macro F1 otherwise (the KL head's distribution is thresholded
/// first).
pub fn dev_macro_f1(model: &LinearModel, dev: &[Example], conversion: &ConversionConfig) -> Result<f64> {
    match model.head {
        Head::Softmax4 => {
            let gold: Vec<FourWayLabel> = dev.iter().map(|e| e.fourway).collect();
            let pred = dev
                .iter()
                .map(|e| Ok(argmax4(&model.softmax_forward(&e.features)?)))
                .collect::<Result<Vec<_>>>()?;
            Ok(fourway_report(&gold, &pred)?.macro_f1)
        }
        Head::Sigmoid3 | Head::MixupSoftmax3 => {
            let gold: Vec<LabelSet> = dev.iter().map(|e| e.multilabel).collect();
            let pred = predict(model, dev)?
                .iter()
                .map(|r| r.payload.to_multilabel(conversion))
                .collect::<Result<Vec<_>>>()?;
            Ok(multilabel_report(&gold, &pred, MultilabelOptions::default())?.macro_f1)
        }
    }
}

fn argmax4(p: &[f64]) -> FourWayLabel {
    let mut best = 0;
    for (i, v) in p.iter().enumerate() {
        if *v > p[best] {
            best = i;
        }
    }
    FourWayLabel::ALL[best]
}

enum LambdaDraw {
    Fixed(f64),
    Coin,
    Beta(Beta<f64>),
}

/// One plain SGD step on the mean batch loss; returns the summed loss at
/// the parameters before the step.
pub fn sgd_step(model: &mut LinearModel, batch: &[(&FeatureVector, Target)], lr: f64) -> Result<f64> {
    // all gradients at the current parameters, then one update
    let steps = batch
        .iter()
        .map(|(x, t)| loss_and_logit_gradient(model.head, &model.logits(x), t))
        .collect::<Result<Vec<_>>>()?;
    let scale = -lr / batch.len() as f64;
    let mut loss_sum = 0.0;
    for ((x, _), (loss, g)) in batch.iter().zip(&steps) {
        loss_sum += loss;
        model.add_outer(x, g, scale);
    }
    Ok(loss_sum)
}

/// Mini-batch SGD from zero weights with decay on plateaus and early
/// stopping; returns the parameters of the best dev epoch.
///
/// The shuffle order and the MixUp partner/lambda draws come from separate
/// seeded streams, so turning MixUp on or off leaves the item order alone.
pub fn train(train_set: &[Example], dev: &[Example], cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_set.is_empty() || dev.is_empty() {
        return Err(Error::InvalidInput("training needs nonempty train and dev sets".to_string()));
    }
    let mut model = LinearModel::zeros(cfg.head, cfg.features);
    let lambda_draw = match (cfg.mixup_lambda, cfg.mixup_alpha) {
        (Some(l), _) => LambdaDraw::Fixed(l),
        (None, 0.0) => LambdaDraw::Coin,
        (None, a) => LambdaDraw::Beta(Beta::new(a, a).map_err(|e| Error::Config(format!("mixup_alpha: {e}")))?),
    };
    let mut order_rng = rng::stream(cfg.seed, 0);
    let mut mix_rng = rng::stream(cfg.seed, 1);
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    let mut lr = cfg.initial_lr;
    let mut best_f1 = f64::NEG_INFINITY;
    let mut best = (model.clone(), 0);
    let mut since_best = 0;
    let mut since_decay = 0;
    let mut history = Vec::new();

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut order_rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let mixed: Vec<(FeatureVector, Target)> = if cfg.mixes() {
                chunk
                    .iter()
                    .map(|&i| {
                        let partner = mix_rng.random_range(0..train_set.len());
                        let lambda = match &lambda_draw {
                            LambdaDraw::Fixed(l) => *l,
                            LambdaDraw::Coin => f64::from(u8::from(mix_rng.random_bool(0.5))),
                            LambdaDraw::Beta(beta) => beta.sample(&mut mix_rng),
                        };
                        let (x, soft) = mixup_pair(&train_set[i], &train_set[partner], lambda)?;
                        Ok((x, Target::Soft(soft)))
                    })
                    .collect::<Result<_>>()?
            } else {
                Vec::new()
            };
            let batch: Vec<(&FeatureVector, Target)> = if cfg.mixes() {
                mixed.iter().map(|(x, t)| (x, *t)).collect()
            } else {
                chunk.iter().map(|&i| (&train_set[i].features, train_set[i].target(cfg.head))).collect()
            };
            loss_sum += sgd_step(&mut model, &batch, lr)?;
        }
        let train_loss = loss_sum / train_set.len() as f64;
        if !train_loss.is_finite() {
            return Err(Error::Diverged {
                epoch,
                message: format!("training loss became {train_loss} at learning rate {lr:e}"),
            });
        }
        if model.weights.iter().chain(&model.bias).any(|w| !w.is_finite()) {
            return Err(Error::Diverged {
                epoch,
                message: format!("parameters overflowed at learning rate {lr:e}"),
            });
        }
        let dev_f1 = dev_macro_f1(&model, dev, &cfg.conversion)?;
        history.push(EpochRecord { epoch, lr, train_loss, dev_f1 });
        if dev_f1 > best_f1 {
            best_f1 = dev_f1;
            best = (model.clone(), epoch);
            since_best = 0;
            since_decay = 0;
        } else {
            since_best += 1;
            since_decay += 1;
            if since_decay >= cfg.plateau_epochs_for_decay {
                lr *= cfg.lr_decay_factor;
                since_decay = 0;
            }
            if since_best >= cfg.early_stop_patience {
                break;
            }
        }
    }
    Ok(TrainOutcome {
        model: best.0,
        history,
        best_epoch: best.1,
    })
}

/// Raw output of a model for one item; thresholds are applied downstream.
/// The 4-way head reports its most probable class.
pub fn predict_one(model: &LinearModel, x: &FeatureVector) -> Result<PredictionPayload> {
    Ok(match model.head {
        Head::Softmax4 => PredictionPayload::FourWay(argmax4(&model.softmax_forward(x)?)),
        Head::Sigmoid3 => PredictionPayload::PerLabelProbs(model.sigmoid_forward(x)?),
        Head::MixupSoftmax3 => {
            let p = model.softmax_forward(x)?;
            let sum: f64 = p.iter().sum();
            PredictionPayload::Distribution(LabelDistribution::new([p[0] / sum, p[1] / sum, p[2] / sum])?)
        }
    })
}

pub fn predict(model: &LinearModel, items: &[Example]) -> Result<Vec<PredictionRecord>> {
    model.check_shape()?;
    items
        .iter()
        .map(|e| {
            Ok(PredictionRecord {
                uid: e.uid.clone(),
                payload: predict_one(model, &e.features)?,
            })
        })
        .collect()
}

/// Model file format version.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub config_sha256: String,
    pub config: TrainConfig,
    pub best_epoch: usize,
    pub model: LinearModel,
}

impl ModelFile {
    pub fn new(config: TrainConfig, outcome: &TrainOutcome) -> Self {
        ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            config_sha256: config.digest(),
            config,
            best_epoch: outcome.best_epoch,
            model: outcome.model.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    /// Parses and checks version, config digest and parameter shape.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("model file: {e}")))?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::InvalidInput(format!(
                "model format version {} is not supported (expected {MODEL_FORMAT_VERSION})",
                file.format_version
            )));
        }
        if file.config.digest() != file.config_sha256 {
            return Err(Error::InvalidInput("model config digest does not match its config".to_string()));
        }
        if file.model.head != file.config.head || file.model.features != file.config.features {
            return Err(Error::InvalidInput("model parameters do not match its config".to_string()));
        }
        file.model.check_shape()?;
        Ok(file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baseline::synthetic::separable_items;
    use crate::labels::NliLabel;

    fn small_features() -> FeatureConfig {
        FeatureConfig { hash_dim: 256, cross_features: false }
    }

    fn examples(n: usize, seed: u64) -> Vec<Example> {
        separable_items(n, seed)
            .unwrap()
            .iter()
            .map(|it| Example::from_labeled(it, &small_features()).unwrap())
            .collect()
    }

    fn config(head: Head) -> TrainConfig {
        TrainConfig {
            initial_lr: 0.5,
            max_epochs: 4,
            features: small_features(),
            seed: 11,
            ..TrainConfig::for_head(head)
        }
    }

    #[test]
    fn mixup_pair_examples() {
        let ex = examples(2, 1);
        let (mut a, mut b) = (ex[0].clone(), ex[1].clone());
        a.soft = [1.0, 0.0, 0.0];
        b.soft = [0.0, 1.0, 0.0];
        let (x, y) = mixup_pair(&a, &b, 1.0).unwrap();
        assert_eq!(y, a.soft);
        assert_eq!(x.dense, a.features.dense);
        assert_eq!(mixup_pair(&a, &b, 0.5).unwrap().1, [0.5, 0.5, 0.0]);
        assert!(mixup_pair(&a, &b, 1.5).is_err());
        assert!(mixup_pair(&a, &b, -0.1).is_err());
        let mut rng = rng::stream(5, 0);
        for _ in 0..1000 {
            let (c, d) = (&ex[rng.random_range(0..2)], &ex[rng.random_range(0..2)]);
            let y = mixup_pair(c, d, rng.random()).unwrap().1;
            assert!((y.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn config_defaults_and_validation() {
        let c = TrainConfig::for_head(Head::Softmax4);
        assert_eq!((c.initial_lr, c.plateau_epochs_for_decay, c.early_stop_patience), (1e-5, 2, 10));
        let c = TrainConfig::for_head(Head::Sigmoid3);
        assert_eq!((c.initial_lr, c.plateau_epochs_for_decay), (5e-6, 1));
        let c = TrainConfig::for_head(Head::MixupSoftmax3);
        assert_eq!((c.initial_lr, c.early_stop_patience, c.lr_decay_factor), (1e-6, 5, 0.8));
        assert!(c.validate().is_ok());
        assert!(TrainConfig { lr_decay_factor: 1.0, ..c }.validate().is_err());
        assert!(TrainConfig { early_stop_patience: 1, ..c }.validate().is_err());
        assert!(TrainConfig { mixup_lambda: Some(2.0), ..c }.validate().is_err());
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<TrainConfig>(&json).unwrap(), c);
        assert_ne!(c.digest(), TrainConfig { seed: 1, ..c }.digest());
    }

    #[test]
    fn flat_dev_score_stops_after_patience() {
        // one class, one text: predictions never change
        let mut ex = examples(1, 2);
        ex[0].fourway = FourWayLabel::Entailment;
        let train_set = vec![ex[0].clone(); 8];
        let cfg = TrainConfig {
            features: small_features(),
            ..TrainConfig::for_head(Head::Softmax4)
        };
        let out = train(&train_set, &ex, &cfg).unwrap();
        assert_eq!(out.history.len(), 11);
        assert_eq!(out.best_epoch, 1);
        let lrs: Vec<f64> = out.history.iter().map(|r| r.lr).collect();
        assert_eq!(lrs[2], 1e-5);
        assert_eq!(lrs[3], 1e-5 * 0.8);
        assert_eq!(lrs[5], 1e-5 * 0.8 * 0.8);
        assert!(history_csv(&out.history).starts_with("epoch,lr,train_loss,dev_f1\n1,"));
    }

    #[test]
    fn fixed_lambda_one_matches_plain_soft_labels() {
        let ex = examples(60, 4);
        let mixed = TrainConfig { mixup_lambda: Some(1.0), ..config(Head::MixupSoftmax3) };
        let plain = TrainConfig { mixup_enabled: false, ..config(Head::MixupSoftmax3) };
        let a = train(&ex[..40], &ex[40..], &mixed).unwrap();
        let b = train(&ex[..40], &ex[40..], &plain).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn degenerate_alpha_replays_as_plain_training() {
        let ex = examples(50, 6);
        let (train_set, dev) = (&ex[..35], &ex[35..]);
        let cfg = TrainConfig { mixup_alpha: 0.0, batch_size: 8, ..config(Head::MixupSoftmax3) };
        let out = train(train_set, dev, &cfg).unwrap();

        // replay: lambda in {0, 1} picks one endpoint of each pair
        let mut model = LinearModel::zeros(cfg.head, cfg.features);
        let mut order_rng = rng::stream(cfg.seed, 0);
        let mut mix_rng = rng::stream(cfg.seed, 1);
        let mut order: Vec<usize> = (0..train_set.len()).collect();
        for record in &out.history {
            order.shuffle(&mut order_rng);
            let mut loss = 0.0;
            for chunk in order.chunks(cfg.batch_size) {
                let picked: Vec<usize> = chunk
                    .iter()
                    .map(|&i| {
                        let partner = mix_rng.random_range(0..train_set.len());
                        if mix_rng.random_bool(0.5) { i } else { partner }
                    })
                    .collect();
                let batch: Vec<(&FeatureVector, Target)> =
                    picked.iter().map(|&j| (&train_set[j].features, Target::Soft(train_set[j].soft))).collect();
                loss += sgd_step(&mut model, &batch, record.lr).unwrap();
            }
            assert_eq!(loss / train_set.len() as f64, record.train_loss);
            if record.epoch == out.best_epoch {
                assert_eq!(model, out.model);
            }
        }
    }

    #[test]
    fn small_steps_lower_a_convex_loss() {
        let ex = examples(40, 8);
        for head in Head::ALL {
            let batch: Vec<(&FeatureVector, Target)> = ex.iter().map(|e| (&e.features, e.target(head))).collect();
            let mut model = LinearModel::zeros(head, small_features());
            let mut last = f64::INFINITY;
            for _ in 0..20 {
                let before = sgd_step(&mut model, &batch, 1e-4).unwrap();
                assert!(before <= last, "{head}: {before} > {last}");
                last = before;
            }
        }
    }

    #[test]
    fn learns_separable_data() {
        let ex = examples(600, 9);
        let (train_set, dev) = (&ex[..450], &ex[450..]);
        for head in Head::ALL {
            let cfg = TrainConfig { max_epochs: 15, ..config(head) };
            let out = train(train_set, dev, &cfg).unwrap();
            let f1 = dev_macro_f1(&out.model, dev, &cfg.conversion).unwrap();
            assert!(f1 > 95.0, "{head}: dev macro F1 {f1}");
            assert_eq!(out.history[out.best_epoch - 1].dev_f1, f1);
        }
    }

    #[test]
    fn divergence_is_reported() {
        let ex = examples(30, 10);
        let cfg = TrainConfig { initial_lr: f64::MAX, ..config(Head::Softmax4) };
        let err = train(&ex[..20], &ex[20..], &cfg).unwrap_err();
        assert!(matches!(err, Error::Diverged { .. }), "{err}");
    }

    #[test]
    fn predictions() {
        let ex = examples(5, 12);
        let cfg = ConversionConfig::default();
        let zero = LinearModel::zeros(Head::Sigmoid3, small_features());
        let recs = predict(&zero, &ex).unwrap();
        assert_eq!(recs[0].payload, PredictionPayload::PerLabelProbs([0.5; 3]));
        assert_eq!(recs[0].payload.to_multilabel(&cfg).unwrap(), LabelSet::singleton(NliLabel::Entailment));
        let out = train(&ex, &ex, &config(Head::MixupSoftmax3)).unwrap();
        let recs = predict(&out.model, &ex).unwrap();
        assert_eq!(recs, predict(&out.model, &ex).unwrap());
        for r in &recs {
            let PredictionPayload::Distribution(d) = r.payload else { panic!("{r:?}") };
            assert!((d.as_array().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let zero4 = LinearModel::zeros(Head::Softmax4, small_features());
        assert_eq!(predict(&zero4, &ex).unwrap()[0].payload, PredictionPayload::FourWay(FourWayLabel::Entailment));
    }

    #[test]
    fn model_file_round_trip() {
        let ex = examples(30, 13);
        let cfg = config(Head::Sigmoid3);
        let out = train(&ex[..20], &ex[20..], &cfg).unwrap();
        let file = ModelFile::new(cfg, &out);
        let text = file.to_json();
        assert_eq!(ModelFile::from_json(&text).unwrap(), file);
        let tampered = text.replace("\"seed\":11", "\"seed\":12");
        assert!(ModelFile::from_json(&tampered).unwrap_err().to_string().contains("digest"));
        let mut bad = file.clone();
        bad.format_version = 99;
        assert!(ModelFile::from_json(&bad.to_json()).is_err());
    }
}
