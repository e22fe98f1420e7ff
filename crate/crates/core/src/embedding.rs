use faer::{Mat, MatRef};

use crate::error::{Error, Result};

/// `N`-dimensional embeddings for `W` words, stored word-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn zeros(dim: usize, words: usize) -> Self {
        EmbeddingMatrix {
            dim,
            data: vec![0.0; dim * words],
        }
    }

    /// Takes ownership of word-major data (`words * dim` values).
    pub fn from_vec(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.len() % dim != 0 {
            return Err(Error::Shape(format!(
                "{} values do not split into vectors of length {dim}",
                data.len()
            )));
        }
        Ok(EmbeddingMatrix { dim, data })
    }

    /// From an `N x W` factor whose columns are embeddings.
    pub fn from_columns(v: MatRef<'_, f64>) -> Self {
        let (dim, words) = (v.nrows(), v.ncols());
        let mut data = Vec::with_capacity(dim * words);
        for i in 0..words {
            data.extend((0..dim).map(|k| v[(k, i)]));
        }
        EmbeddingMatrix { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.data.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vector_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn dot(&self, i: usize, j: usize) -> f64 {
        dot(self.vector(i), self.vector(j))
    }

    /// `N x W` matrix with embeddings as columns.
    pub fn to_columns(&self) -> Mat<f64> {
        Mat::from_fn(self.dim, self.len(), |k, i| self.data[i * self.dim + k])
    }

    /// Columns `range` as an `N x |range|` matrix.
    pub fn columns(&self, range: std::ops::Range<usize>) -> Mat<f64> {
        Mat::from_fn(self.dim, range.len(), |k, b| self.data[(range.start + b) * self.dim + k])
    }

    /// Unit-length copies of every vector; zero vectors stay zero.
    pub fn normalized(&self) -> EmbeddingMatrix {
        let mut out = self.clone();
        for i in 0..out.len() {
            let v = out.vector_mut(i);
            let n = dot(v, v).sqrt();
            if n > 0.0 {
                v.iter_mut().for_each(|x| *x /= n);
            }
        }
        out
    }

    pub fn cosine(&self, i: usize, j: usize) -> f64 {
        cosine(self.vector(i), self.vector(j))
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cosine similarity; 0 if either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let d = (dot(a, a) * dot(b, b)).sqrt();
    if d > 0.0 {
        dot(a, b) / d
    } else {
        0.0
    }
}
