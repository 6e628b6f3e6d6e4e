//! Versioned binary model file.
//!
//! Layout (little endian): magic `SLMODEL\0`, u32 version, u32 header length,
//! JSON header (hyperparameters, labels, fingerprints), then parameter
//! blocks, then optimizer state, then an FNV-1a checksum of everything
//! before it. Embedding rows and optimizer rows are stored sparsely.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{DenseBlocks, Hyperparameters, Model, Parameters};
use super::optim::AdamState;
use crate::corpus::LabelVocabulary;
use crate::error::{Error, Result};
use crate::seed::hash_bytes;

pub const MAGIC: &[u8; 8] = b"SLMODEL\0";
pub const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    hyperparameters: Hyperparameters,
    labels: Vec<String>,
    tokenizer_fingerprint: u64,
    vocabulary_fingerprint: u64,
}

struct Writer(Vec<u8>);

impl Writer {
    fn u32(&mut self, x: u32) {
        self.0.extend(x.to_le_bytes());
    }
    fn u64(&mut self, x: u64) {
        self.0.extend(x.to_le_bytes());
    }
    fn floats(&mut self, xs: &[f64]) {
        self.u64(xs.len() as u64);
        for x in xs {
            self.0.extend(x.to_le_bytes());
        }
    }
    fn dense(&mut self, d: &DenseBlocks) {
        for b in d.blocks() {
            self.floats(b);
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

fn corrupt(m: impl std::fmt::Display) -> Error {
    Error::ModelFormat(m.to_string())
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| corrupt("truncated file"))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }
    fn floats(&mut self, expected: usize) -> Result<Vec<f64>> {
        let n = self.u64()? as usize;
        if n != expected {
            return Err(corrupt(format!("block of {n} values, expected {expected}")));
        }
        (0..n).map(|_| self.f64()).collect()
    }
    fn dense(&mut self, shape: &DenseBlocks) -> Result<DenseBlocks> {
        let mut out = shape.zeros_like();
        for b in out.blocks_mut() {
            *b = self.floats(b.len())?;
        }
        Ok(out)
    }
}

pub fn model_to_bytes(model: &Model) -> Vec<u8> {
    let hyper = *model.hyperparameters();
    let d = hyper.embedding_dim;
    let header = Header {
        hyperparameters: hyper,
        labels: model.vocabulary().labels().to_vec(),
        tokenizer_fingerprint: model.tokenizer().fingerprint(),
        vocabulary_fingerprint: model.vocabulary().fingerprint(),
    };
    let header = serde_json::to_vec(&header).expect("header serializes");
    let mut w = Writer(Vec::new());
    w.0.extend(MAGIC);
    w.u32(VERSION);
    w.u32(header.len() as u32);
    w.0.extend(&header);

    let params = model.parameters();
    let rows: Vec<(usize, &[f64])> = params
        .embeddings
        .chunks(d)
        .enumerate()
        .filter(|(_, r)| r.iter().any(|&x| x.to_bits() != 0))
        .collect();
    w.u64(rows.len() as u64);
    for (i, r) in rows {
        w.u32(i as u32);
        for x in r {
            w.0.extend(x.to_le_bytes());
        }
    }
    w.dense(&params.dense);

    let opt = model.optimizer();
    w.u64(opt.step);
    w.dense(&opt.m);
    w.dense(&opt.v);
    w.u64(opt.rows.len() as u64);
    for (row, (m, v)) in &opt.rows {
        w.u32(*row);
        for x in m.iter().chain(v) {
            w.0.extend(x.to_le_bytes());
        }
    }
    let sum = hash_bytes(&w.0);
    w.u64(sum);
    w.0
}

pub fn model_from_bytes(buf: &[u8]) -> Result<Model> {
    if buf.len() < MAGIC.len() + 4 || &buf[..MAGIC.len()] != MAGIC {
        return Err(corrupt("not a model file (bad magic)"));
    }
    let mut r = Reader {
        buf,
        pos: MAGIC.len(),
    };
    let version = r.u32()?;
    if version != VERSION {
        return Err(corrupt(format!("unsupported model version {version}")));
    }
    if buf.len() < 8 {
        return Err(corrupt("truncated file"));
    }
    let (body, tail) = buf.split_at(buf.len() - 8);
    let header_len = r.u32()? as usize;
    let header: Header =
        serde_json::from_slice(r.take(header_len)?).map_err(|e| corrupt(format!("header: {e}")))?;
    if hash_bytes(body) != u64::from_le_bytes(tail.try_into().expect("8 bytes")) {
        return Err(corrupt("checksum mismatch"));
    }
    let hyper = header.hyperparameters;
    let vocabulary = LabelVocabulary::new(&header.labels)?;
    if vocabulary.fingerprint() != header.vocabulary_fingerprint {
        return Err(corrupt("vocabulary fingerprint mismatch"));
    }
    let d = hyper.embedding_dim;
    let buckets = hyper.tokenizer.buckets as usize;
    let shape = DenseBlocks::zeros(d, hyper.hidden, vocabulary.len());

    let mut embeddings = vec![0.0; buckets * d];
    let n_rows = r.u64()?;
    for _ in 0..n_rows {
        let row = r.u32()? as usize;
        if row >= buckets {
            return Err(corrupt(format!("embedding row {row} out of range")));
        }
        for x in &mut embeddings[row * d..(row + 1) * d] {
            *x = r.f64()?;
        }
    }
    let dense = r.dense(&shape)?;
    let mut opt = AdamState::new(&shape);
    opt.step = r.u64()?;
    opt.m = r.dense(&shape)?;
    opt.v = r.dense(&shape)?;
    let n_opt = r.u64()?;
    for _ in 0..n_opt {
        let row = r.u32()?;
        let m = (0..d).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        let v = (0..d).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        opt.rows.insert(row, (m, v));
    }
    if r.pos != body.len() {
        return Err(corrupt("trailing bytes"));
    }
    let model = Model::from_parts(
        hyper,
        vocabulary,
        Parameters { embeddings, dense },
        Some(opt),
    );
    if model.tokenizer().fingerprint() != header.tokenizer_fingerprint {
        return Err(corrupt("tokenizer fingerprint mismatch"));
    }
    Ok(model)
}

pub fn save_model(model: &Model, path: &Path) -> Result<()> {
    fs::write(path, model_to_bytes(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<Model> {
    let buf = fs::read(path).map_err(|e| Error::io(path, e))?;
    model_from_bytes(&buf)
}
