//! Binary model files.
//!
//! `W2V1`: magic, then `u32` dim, V, mode (0 = CBOW, 1 = Skip-gram), window,
//! negatives, followed by the V×dim input and output matrices.
//!
//! `D2V1`: magic, then `u32` dim, V, N, combine (0 = average,
//! 1 = concatenate), window, negatives, followed by the V×dim word matrix,
//! the N×dim paragraph matrix, the V×h output matrix (h = dim, or
//! dim·(window+1) when concatenating) and the V unigram counts of the noise
//! distribution.
//!
//! All header fields and values are little-endian; matrices are row-major
//! `f32`.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use super::{Combine, DocEmbeddingModel, NoiseDistribution, Word2VecMode, WordEmbeddingModel};
use crate::binio::*;
use crate::corpus::{TokenId, Vocabulary};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const WORD2VEC_MAGIC: &[u8; 4] = b"W2V1";
pub const DOC2VEC_MAGIC: &[u8; 4] = b"D2V1";

impl WordEmbeddingModel {
    pub fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        write_magic(w, WORD2VEC_MAGIC)?;
        write_u32(w, self.dim)?;
        write_u32(w, self.vocab_size())?;
        write_u32(w, matches!(self.mode, Word2VecMode::SkipGram) as usize)?;
        write_u32(w, self.window)?;
        write_u32(w, self.negatives)?;
        write_f32s(w, self.input.as_slice())?;
        write_f32s(w, self.output.as_slice())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        read_magic(r, WORD2VEC_MAGIC)?;
        let dim = read_u32(r)?;
        let vocab = read_u32(r)?;
        let mode = match read_u32(r)? {
            0 => Word2VecMode::Cbow,
            1 => Word2VecMode::SkipGram,
            other => return Err(Error::Format(format!("unknown word2vec mode flag {other}"))),
        };
        let window = read_u32(r)?;
        let negatives = read_u32(r)?;
        let input = read_matrix(r, vocab, dim)?;
        let output = read_matrix(r, vocab, dim)?;
        expect_eof(r)?;
        Ok(Self { input, output, mode, window, negatives, dim })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        save_with(path, |w| self.write_to(w))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(&mut BufReader::new(file))
    }
}

impl DocEmbeddingModel {
    pub fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        write_magic(w, DOC2VEC_MAGIC)?;
        write_u32(w, self.dim)?;
        write_u32(w, self.vocab_size())?;
        write_u32(w, self.num_docs())?;
        write_u32(w, matches!(self.combine, Combine::Concatenate) as usize)?;
        write_u32(w, self.window)?;
        write_u32(w, self.negatives)?;
        write_f32s(w, self.word.as_slice())?;
        write_f32s(w, self.doc.as_slice())?;
        write_f32s(w, self.output.as_slice())?;
        let counts: Vec<f64> = self.noise.counts().iter().map(|&c| c as f64).collect();
        write_f32s(w, &counts)
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        read_magic(r, DOC2VEC_MAGIC)?;
        let dim = read_u32(r)?;
        let vocab = read_u32(r)?;
        let docs = read_u32(r)?;
        let combine = match read_u32(r)? {
            0 => Combine::Average,
            1 => Combine::Concatenate,
            other => return Err(Error::Format(format!("unknown doc2vec combine flag {other}"))),
        };
        let window = read_u32(r)?;
        let negatives = read_u32(r)?;
        let hidden = match combine {
            Combine::Average => dim,
            Combine::Concatenate => dim * (window + 1),
        };
        let word = read_matrix(r, vocab, dim)?;
        let doc = read_matrix(r, docs, dim)?;
        let output = read_matrix(r, vocab, hidden)?;
        let counts: Vec<u64> = read_f32s(r, vocab)?.into_iter().map(|c| c.max(0.0) as u64).collect();
        expect_eof(r)?;
        Ok(Self {
            word,
            doc,
            output,
            noise: NoiseDistribution::from_counts(&counts),
            combine,
            window,
            negatives,
            dim,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        save_with(path, |w| self.write_to(w))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(&mut BufReader::new(file))
    }
}

/// `token v1 ... vd` lines, one per vocabulary id.
pub fn export_text(vectors: &Matrix, vocab: &Vocabulary, w: &mut impl Write) -> Result<()> {
    if vectors.rows() != vocab.len() {
        return Err(Error::invalid(format!(
            "embedding has {} rows but the vocabulary has {} tokens",
            vectors.rows(),
            vocab.len()
        )));
    }
    let write = |w: &mut dyn Write| -> std::io::Result<()> {
        for id in 0..vocab.len() {
            write!(w, "{}", vocab.token(id as TokenId).unwrap_or_default())?;
            for v in vectors.row(id) {
                write!(w, " {}", *v as f32)?;
            }
            writeln!(w)?;
        }
        Ok(())
    };
    write(w).map_err(|e| Error::Format(format!("export failed: {e}")))
}
