//! Obligation encodings for the value model.
//!
//! Hashed mode is a pure function of the canonical text. Autoencoded mode
//! uses the latent state of a trained recurrent autoencoder.

mod lstm;

use std::hash::Hasher;

use fnv::FnvHasher;
use serde::{Deserialize, Serialize};

use crate::env::{lex, Obligation, Token};

pub use lstm::{
    train_autoencoder, AeEpoch, Autoencoder, AutoencoderConfig, AutoencoderError, Vocabulary,
    AUTOENCODER_VERSION,
};

pub const DEFAULT_DIM: usize = 64;
pub const MIN_HASHED_DIM: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncodingMode {
    Hashed,
    Autoencoded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoding {
    pub vector: Vec<f64>,
    pub mode: EncodingMode,
}

/// Tokens of the canonical text. Reversible through
/// [`crate::env::obligation_from_tokens`].
pub fn tokenize(ob: &Obligation) -> Vec<Token> {
    lex(&ob.canonical())
        .expect("canonical text always lexes")
        .into_iter()
        .map(|(t, _)| t)
        .collect()
}

/// Signed feature hashing of token unigrams and bigrams, scaled so the
/// largest magnitude is 1.
pub fn encode_hashed(ob: &Obligation, dim: usize, salt: u64) -> Encoding {
    assert!(dim >= MIN_HASHED_DIM, "hashed dimension must be at least {MIN_HASHED_DIM}");
    let tokens = tokenize(ob);
    let mut v = vec![0.0; dim];
    let mut add = |parts: &[&str]| {
        let mut h = FnvHasher::default();
        h.write_u64(salt);
        for p in parts {
            h.write(p.as_bytes());
            h.write_u8(0xff);
        }
        let x = h.finish();
        let bucket = (x % dim as u64) as usize;
        v[bucket] += if x >> 63 == 0 { 1.0 } else { -1.0 };
    };
    for (i, t) in tokens.iter().enumerate() {
        add(&[t.text()]);
        if let Some(next) = tokens.get(i + 1) {
            add(&[t.text(), next.text()]);
        }
    }
    let max = v.iter().fold(0.0_f64, |m: f64, x: &f64| m.max(x.abs()));
    if max > 0.0 {
        for x in &mut v {
            *x /= max;
        }
    }
    Encoding {
        vector: v,
        mode: EncodingMode::Hashed,
    }
}

/// A configured encoder. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Encoder {
    Hashed { dim: usize, salt: u64 },
    Autoencoded { model: Box<Autoencoder> },
}

impl Default for Encoder {
    fn default() -> Self {
        Encoder::Hashed {
            dim: DEFAULT_DIM,
            salt: 0,
        }
    }
}

impl Encoder {
    pub fn dim(&self) -> usize {
        match self {
            Encoder::Hashed { dim, .. } => *dim,
            Encoder::Autoencoded { model } => model.latent_dim(),
        }
    }

    pub fn mode(&self) -> EncodingMode {
        match self {
            Encoder::Hashed { .. } => EncodingMode::Hashed,
            Encoder::Autoencoded { .. } => EncodingMode::Autoencoded,
        }
    }

    pub fn encode(&self, ob: &Obligation) -> Encoding {
        match self {
            Encoder::Hashed { dim, salt } => encode_hashed(ob, *dim, *salt),
            Encoder::Autoencoded { model } => model.encode(ob),
        }
    }
}
