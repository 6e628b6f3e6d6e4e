#![allow(dead_code)]

use schemalabel::corpus::{
    generate_synthetic_corpus, split_corpus, GeneratorConfig, LabelVocabulary, Table,
};
use schemalabel::encoder::{AdamConfig, Hyperparameters, Model};
use schemalabel::prepared::{prepare_tables, PreparedTable};
use schemalabel::training::{fit, EpochStats, TrainConfig};

pub const VALUE_CAP: usize = 100;

pub struct Trained {
    pub generator: GeneratorConfig,
    pub train: Vec<Table>,
    pub test: Vec<Table>,
    pub model: Model,
    pub curve: Vec<EpochStats>,
}

impl Trained {
    pub fn prepared_test(&self) -> Vec<PreparedTable> {
        prepare_tables(&self.model, &self.test, VALUE_CAP, 0)
    }

    pub fn vocab(&self) -> &LabelVocabulary {
        self.model.vocabulary()
    }
}

pub fn train_config(seed: u64, epochs: usize) -> TrainConfig {
    TrainConfig {
        epochs,
        adam: AdamConfig::default(),
        seed,
        value_cap: VALUE_CAP,
        ..TrainConfig::default()
    }
}

/// Generates the default ambiguity corpus, splits 80/20 and trains.
pub fn trained(seed: u64, tables: usize, epochs: usize, values_only: bool) -> Trained {
    let generator = GeneratorConfig {
        tables,
        ..GeneratorConfig::default()
    };
    let corpus = generate_synthetic_corpus(&generator, seed).unwrap();
    let split = split_corpus(&corpus, 0.8, seed).unwrap();
    let (train, test) = split.partition(&corpus);
    let vocab = LabelVocabulary::from_tables(&train, 1).unwrap();
    let mut model = Model::new(
        vocab,
        Hyperparameters {
            init_seed: seed,
            values_only,
            ..Hyperparameters::default()
        },
    );
    let prepared = prepare_tables(&model, &train, VALUE_CAP, seed);
    let curve = fit(
        &mut model,
        &prepared,
        &train_config(seed, epochs),
        |_, _| Ok(()),
    )
    .unwrap();
    Trained {
        generator,
        train,
        test,
        model,
        curve,
    }
}
