//! The column encoder and softmax head: one model, two input forms.

mod distribution;
mod io;
mod model;
mod optim;
mod tokenizer;

pub use distribution::LabelDistribution;
pub use io::{load_model, model_from_bytes, model_to_bytes, save_model};
pub use model::{softmax, DenseBlocks, Gradients, Hyperparameters, Model, Parameters};
pub use optim::{AdamConfig, AdamState};
pub use tokenizer::{ColumnInput, InputForm, TokenId, Tokenizer, TokenizerConfig, CLS, SEP};

use crate::error::{Error, Result};

impl Model {
    /// One Adam step on the mean cross-entropy of `batch`. Returns the loss
    /// measured before the update.
    pub fn train_step(&mut self, batch: &[(ColumnInput, usize)], adam: &AdamConfig) -> Result<f64> {
        let (loss, grads) = self.loss_and_gradients(batch)?;
        if !loss.is_finite() || !grads.is_finite() {
            return Err(Error::NonFinite(format!("training loss {loss}")));
        }
        self.apply_gradients(&grads, adam);
        Ok(loss)
    }

    pub fn apply_gradients(&mut self, grads: &Gradients, adam: &AdamConfig) {
        let (params, opt) = self.params_and_optimizer();
        opt.apply(params, grads, adam);
    }

    /// Context is dropped for values-only models.
    pub fn serialize_input<S: AsRef<str>>(
        &self,
        values: &[String],
        context: Option<&[S]>,
    ) -> ColumnInput {
        let context = context.filter(|_| !self.hyperparameters().values_only);
        self.tokenizer().serialize_input(values, context)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::LabelVocabulary;

    fn vals(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    fn toy(labels: usize, seed: u64) -> Model {
        let vocab = LabelVocabulary::new((0..labels).map(|i| format!("l{i}"))).unwrap();
        Model::new(
            vocab,
            Hyperparameters {
                embedding_dim: 4,
                hidden: 6,
                tokenizer: TokenizerConfig {
                    buckets: 97,
                    ..TokenizerConfig::default()
                },
                init_seed: seed,
                ..Hyperparameters::default()
            },
        )
    }

    #[test]
    fn zero_head_is_uniform() {
        let mut m = toy(4, 1);
        m.zero_head();
        let d = m
            .forward(&m.serialize_input::<&str>(&vals(&["x"]), None))
            .unwrap();
        assert!(d.probs().iter().all(|&p| (p - 0.25).abs() < 1e-15));
        assert_eq!(d.argmax(), 0);
        let batch = vec![(m.serialize_input::<&str>(&vals(&["x"]), None), 2)];
        assert!((m.loss(&batch).unwrap() - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn near_one_hot_gives_zero_loss() {
        let mut m = toy(3, 1);
        m.zero_head();
        m.parameters_mut().dense.b2[1] = 800.0;
        let batch = vec![(m.serialize_input::<&str>(&vals(&["x"]), None), 1)];
        assert_eq!(m.loss(&batch).unwrap(), 0.0);
    }

    #[test]
    fn distribution_sums_to_one_for_both_forms() {
        let m = toy(5, 3);
        for input in [
            m.serialize_input::<&str>(&vals(&["a b", "c"]), None),
            m.serialize_input(&vals(&["a b", "c"]), Some(&["l1", "l2"])),
        ] {
            let d = m.forward(&input).unwrap();
            assert_eq!(d.len(), 5);
            assert!((d.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn errors() {
        let m = toy(3, 1);
        let other = Tokenizer::default().serialize_input::<&str>(&vals(&["x"]), None);
        assert!(matches!(
            m.forward(&other),
            Err(Error::FingerprintMismatch { .. })
        ));
        let input = m.serialize_input::<&str>(&vals(&["x"]), None);
        assert!(matches!(
            m.loss_and_gradients(&[(input, 3)]),
            Err(Error::LabelOutOfRange { .. })
        ));
        assert!(m.loss_and_gradients(&[]).is_err());
    }

    #[test]
    fn context_can_flip_the_prediction() {
        let mut m = toy(2, 5);
        let adam = AdamConfig {
            learning_rate: 0.05,
            ..AdamConfig::default()
        };
        let country = vals(&["france", "spain", "peru"]);
        let a = m.serialize_input(&country, Some(&["player", "team"]));
        let b = m.serialize_input(&country, Some(&["driver", "car"]));
        for _ in 0..200 {
            m.train_step(&[(a.clone(), 0), (b.clone(), 1)], &adam)
                .unwrap();
        }
        let pa = m.forward(&a).unwrap();
        let pb = m.forward(&b).unwrap();
        assert_eq!(pa.argmax(), 0);
        assert_eq!(pb.argmax(), 1);
        assert_ne!(pa.probs(), pb.probs());
    }

    #[test]
    fn save_load_round_trip() {
        let mut m = toy(3, 2);
        let adam = AdamConfig::default();
        let input = m.serialize_input(&vals(&["q r"]), Some(&["l0"]));
        m.train_step(&[(input.clone(), 1)], &adam).unwrap();
        let bytes = model_to_bytes(&m);
        let back = model_from_bytes(&bytes).unwrap();
        assert_eq!(back, m);
        assert_eq!(
            back.forward(&input).unwrap().probs(),
            m.forward(&input).unwrap().probs()
        );
        assert_eq!(model_to_bytes(&back), bytes);
        assert!(model_from_bytes(&bytes[..bytes.len() / 2]).is_err());
        let mut flipped = bytes.clone();
        let last = flipped.len() - 20;
        flipped[last] ^= 1;
        assert!(model_from_bytes(&flipped).is_err());
        let mut wrong_version = bytes;
        wrong_version[8] = 9;
        assert!(matches!(
            model_from_bytes(&wrong_version),
            Err(Error::ModelFormat(_))
        ));
    }

    #[test]
    fn resume_equals_continuous_training() {
        let adam = AdamConfig::default();
        let mut a = toy(3, 4);
        let i1 = a.serialize_input(&vals(&["alpha"]), Some(&["l2"]));
        let i2 = a.serialize_input::<&str>(&vals(&["beta gamma"]), None);
        a.train_step(&[(i1.clone(), 0)], &adam).unwrap();
        let mut b = model_from_bytes(&model_to_bytes(&a)).unwrap();
        a.train_step(&[(i2.clone(), 2)], &adam).unwrap();
        b.train_step(&[(i2, 2)], &adam).unwrap();
        assert_eq!(a, b);
    }
}
