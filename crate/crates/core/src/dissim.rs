//! Frame dissimilarities and DTW-averaged token dissimilarity.

use serde::{Deserialize, Serialize};

use crate::corpus::FrameSlice;
use crate::error::{Error, Result};

/// Additive smoothing applied to posteriorgram frames before the KL terms.
pub const KL_SMOOTHING: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum DissimKind {
    /// arccos of the cosine, scaled to [0, 1].
    Angular,
    /// Symmetrized base-2 KL divergence between smoothed distributions.
    #[value(name = "kl")]
    #[serde(rename = "kl")]
    SymmetricKl,
}

impl DissimKind {
    pub fn name(self) -> &'static str {
        match self {
            DissimKind::Angular => "angular",
            DissimKind::SymmetricKl => "kl",
        }
    }
}

/// Divisor applied to the summed cost of the optimal warping path.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Number of cells on the optimal path.
    #[default]
    #[value(name = "path")]
    PathLength,
    /// Length of the longer sequence.
    #[value(name = "max")]
    MaxLength,
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

#[inline]
fn angular_from_parts(dot: f64, norm_u: f64, norm_v: f64) -> f64 {
    if norm_u == 0.0 || norm_v == 0.0 {
        return 0.5;
    }
    let cos = (dot / (norm_u * norm_v).sqrt()).clamp(-1.0, 1.0);
    cos.acos() / std::f64::consts::PI
}

/// Angular dissimilarity in [0, 1].
///
/// A zero vector carries no direction and scores 0.5 against anything.
pub fn angular(u: &[f64], v: &[f64]) -> f64 {
    assert_eq!(u.len(), v.len(), "angular: dimension mismatch");
    angular_from_parts(dot(u, v), dot(u, u), dot(v, v))
}

pub fn is_zero(v: &[f64]) -> bool {
    v.iter().all(|&x| x == 0.0)
}

fn smoothed(p: &[f64]) -> Result<Vec<f64>> {
    if p.iter().any(|&x| x < 0.0 || x.is_nan()) {
        return Err(Error::NegativeEntry);
    }
    let total: f64 = p.iter().map(|&x| x + KL_SMOOTHING).sum();
    Ok(p.iter().map(|&x| (x + KL_SMOOTHING) / total).collect())
}

/// `(KL(p||q) + KL(q||p)) / 2` in bits, after smoothing both inputs.
pub fn symmetric_kl(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(p.len(), q.len()));
    }
    let p = smoothed(p)?;
    let q = smoothed(q)?;
    let lp: Vec<f64> = p.iter().map(|x| x.log2()).collect();
    let lq: Vec<f64> = q.iter().map(|x| x.log2()).collect();
    Ok(kl_from_parts(&p, &lp, &q, &lq))
}

#[inline]
fn kl_from_parts(p: &[f64], log_p: &[f64], q: &[f64], log_q: &[f64]) -> f64 {
    // KL(p||q) + KL(q||p) = sum (p - q)(log p - log q)
    let mut s = 0.0;
    for i in 0..p.len() {
        s += (p[i] - q[i]) * (log_p[i] - log_q[i]);
    }
    0.5 * s.max(0.0)
}

/// Frames in the form the frame dissimilarity consumes: raw vectors plus
/// squared norms for angular, smoothed distributions plus log2 for KL.
#[derive(Debug, Clone)]
pub struct PreparedFrames {
    kind: DissimKind,
    dim: usize,
    len: usize,
    data: Vec<f64>,
    aux: Vec<f64>,
}

impl PreparedFrames {
    pub fn new(frames: FrameSlice<'_>, kind: DissimKind) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::EmptySequence);
        }
        let dim = frames.dim();
        let len = frames.len();
        let (data, aux) = match kind {
            DissimKind::Angular => {
                let data: Vec<f64> = frames.frames().flatten().copied().collect();
                let aux = frames.frames().map(|f| dot(f, f)).collect();
                (data, aux)
            }
            DissimKind::SymmetricKl => {
                let mut data = Vec::with_capacity(len * dim);
                for f in frames.frames() {
                    data.extend(smoothed(f)?);
                }
                let aux = data.iter().map(|x| x.log2()).collect();
                (data, aux)
            }
        };
        Ok(PreparedFrames {
            kind,
            dim,
            len,
            data,
            aux,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    fn frame_dissim(&self, i: usize, other: &PreparedFrames, j: usize) -> f64 {
        match self.kind {
            DissimKind::Angular => {
                angular_from_parts(dot(self.row(i), other.row(j)), self.aux[i], other.aux[j])
            }
            DissimKind::SymmetricKl => {
                let d = self.dim;
                kl_from_parts(
                    self.row(i),
                    &self.aux[i * d..(i + 1) * d],
                    other.row(j),
                    &other.aux[j * d..(j + 1) * d],
                )
            }
        }
    }

    /// Fills `out` with the `self.len() x other.len()` frame cost matrix.
    pub fn cost_matrix(&self, other: &PreparedFrames, out: &mut Vec<f64>) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        out.clear();
        out.reserve(self.len * other.len);
        for i in 0..self.len {
            for j in 0..other.len {
                out.push(self.frame_dissim(i, other, j));
            }
        }
        Ok(())
    }
}

/// Optimal-path DTW over a precomputed `rows x cols` cost matrix.
///
/// With `transpose` the matrix is read as `cols x rows`, i.e. the alignment
/// of the second sequence against the first. Predecessor ties resolve
/// diagonal, then vertical (advance in the row sequence), then horizontal.
pub fn align(cost: &[f64], rows: usize, cols: usize, transpose: bool, norm: Normalization) -> f64 {
    debug_assert_eq!(cost.len(), rows * cols);
    let (r_len, c_len) = if transpose {
        (cols, rows)
    } else {
        (rows, cols)
    };
    let at = |r: usize, c: usize| {
        if transpose {
            cost[c * cols + r]
        } else {
            cost[r * cols + c]
        }
    };

    let mut prev_cost = vec![0.0f64; c_len];
    let mut prev_len = vec![0u32; c_len];
    let mut cur_cost = vec![0.0f64; c_len];
    let mut cur_len = vec![0u32; c_len];
    for r in 0..r_len {
        for c in 0..c_len {
            let (best, steps) = match (r, c) {
                (0, 0) => (0.0, 0),
                (0, _) => (cur_cost[c - 1], cur_len[c - 1]),
                (_, 0) => (prev_cost[0], prev_len[0]),
                _ => {
                    let diag = prev_cost[c - 1];
                    let vert = prev_cost[c];
                    let horiz = cur_cost[c - 1];
                    if diag <= vert && diag <= horiz {
                        (diag, prev_len[c - 1])
                    } else if vert <= horiz {
                        (vert, prev_len[c])
                    } else {
                        (horiz, cur_len[c - 1])
                    }
                }
            };
            cur_cost[c] = best + at(r, c);
            cur_len[c] = steps + 1;
        }
        std::mem::swap(&mut prev_cost, &mut cur_cost);
        std::mem::swap(&mut prev_len, &mut cur_len);
    }
    let total = prev_cost[c_len - 1];
    match norm {
        Normalization::PathLength => total / prev_len[c_len - 1] as f64,
        Normalization::MaxLength => total / r_len.max(c_len) as f64,
    }
}

/// DTW dissimilarity between two frame sequences, path-length normalized.
pub fn dtw_dissim(a: FrameSlice<'_>, b: FrameSlice<'_>, kind: DissimKind) -> Result<f64> {
    dtw_dissim_with(a, b, kind, Normalization::PathLength)
}

pub fn dtw_dissim_with(
    a: FrameSlice<'_>,
    b: FrameSlice<'_>,
    kind: DissimKind,
    norm: Normalization,
) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySequence);
    }
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    let pa = PreparedFrames::new(a, kind)?;
    let pb = PreparedFrames::new(b, kind)?;
    let mut cost = Vec::new();
    pa.cost_matrix(&pb, &mut cost)?;
    Ok(align(&cost, pa.len(), pb.len(), false, norm))
}
