//! Random rankings under both models and a reproducible Monte Carlo
//! estimator of AP@k moments.
//!
//! Samples are split into fixed-size chunks. Chunk `i` draws from a ChaCha8
//! stream seeded with the user seed and stream id `i`, so the set of draws
//! does not depend on how chunks are scheduled. Per-chunk moments are merged
//! in chunk order, which makes the result bit-identical for any worker count.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{ap_with_total, Normalization, RelevanceVector};
use crate::model::{check_probability, ModelSpec};

/// Samples per seed-derived stream.
pub const CHUNK_SIZE: usize = 8192;

/// Default number of histogram bins.
pub const DEFAULT_BINS: usize = 40;

/// Empirical moments of AP@k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleMoments {
    pub mean: f64,
    /// Unbiased (n - 1) sample variance.
    pub variance: f64,
    /// `sqrt(variance / n)`.
    pub std_error: f64,
    pub n: u64,
}

/// Streaming mean / sum of squared deviations.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Pairwise combination of two partial accumulators.
    pub fn merge(self, other: Welford) -> Welford {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let (na, nb, nf) = (self.n as f64, other.n as f64, n as f64);
        Welford {
            n,
            mean: self.mean + delta * nb / nf,
            m2: self.m2 + other.m2 + delta * delta * na * nb / nf,
        }
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn moments(&self) -> SampleMoments {
        let variance = if self.n > 1 {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        } else {
            0.0
        };
        SampleMoments {
            mean: self.mean,
            variance,
            std_error: (variance / self.n.max(1) as f64).sqrt(),
            n: self.n,
        }
    }
}

/// Generator for one chunk of a seeded run.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Full length-`N` ranking with exactly `m` relevant positions chosen by a
/// partial Fisher–Yates shuffle.
pub fn sample_wor<R: Rng + ?Sized>(items: usize, relevant: usize, rng: &mut R) -> Result<RelevanceVector> {
    ModelSpec::wor(items, relevant)?;
    let mut out = vec![false; items];
    let mut scratch = Vec::with_capacity(items);
    fill_wor(&mut out, relevant, &mut scratch, rng);
    RelevanceVector::new(out)
}

fn fill_wor<R: Rng + ?Sized>(out: &mut [bool], relevant: usize, scratch: &mut Vec<usize>, rng: &mut R) {
    let n = out.len();
    scratch.clear();
    scratch.extend(0..n);
    out.fill(false);
    for i in 0..relevant {
        let j = rng.random_range(i..n);
        scratch.swap(i, j);
        out[scratch[i]] = true;
    }
}

/// `k` independent Bernoulli(p) indicators.
pub fn sample_wr<R: Rng + ?Sized>(k: usize, p: f64, rng: &mut R) -> Result<RelevanceVector> {
    check_probability(p)?;
    if k == 0 {
        return Err(Error::CutoffOutOfRange { k, len: 0 });
    }
    let mut out = vec![false; k];
    fill_wr(&mut out, p, rng);
    RelevanceVector::new(out)
}

fn fill_wr<R: Rng + ?Sized>(out: &mut [bool], p: f64, rng: &mut R) {
    for slot in out.iter_mut() {
        *slot = rng.random_bool(p);
    }
}

/// Reusable per-chunk sampler that yields one AP@k value per call.
struct ApSampler {
    model: ModelSpec,
    k: usize,
    norm: Normalization,
    buf: Vec<bool>,
    scratch: Vec<usize>,
}

impl ApSampler {
    fn new(model: ModelSpec, k: usize, norm: Normalization) -> Self {
        let len = match model {
            ModelSpec::Wor { items, .. } => items,
            ModelSpec::Wr { .. } => k,
        };
        Self {
            model,
            k,
            norm,
            buf: vec![false; len],
            scratch: Vec::with_capacity(len),
        }
    }

    fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        match self.model {
            ModelSpec::Wor { relevant, .. } => {
                fill_wor(&mut self.buf, relevant, &mut self.scratch, rng);
                ap_with_total(&self.buf, self.k, self.norm, relevant)
            }
            ModelSpec::Wr { p } => {
                fill_wr(&mut self.buf, p, rng);
                let hits = self.buf.iter().filter(|&&r| r).count();
                ap_with_total(&self.buf, self.k, self.norm, hits)
            }
        }
    }
}

fn chunk_bounds(n_samples: u64) -> impl IndexedParallelIterator<Item = (u64, u64)> {
    let chunk = CHUNK_SIZE as u64;
    let chunks = usize::try_from(n_samples.div_ceil(chunk)).expect("chunk count fits in usize");
    (0..chunks).into_par_iter().map(move |i| {
        let i = i as u64;
        (i, chunk.min(n_samples - i * chunk))
    })
}

/// Runs `visit` over every sampled AP@k value of one chunk and returns the
/// per-chunk results in chunk order.
fn run_chunks<T: Send>(
    model: &ModelSpec,
    k: usize,
    norm: Normalization,
    n_samples: u64,
    seed: u64,
    init: impl Fn() -> T + Sync,
    visit: impl Fn(&mut T, f64) + Sync,
) -> Result<Vec<T>> {
    model.validate_cutoff(k)?;
    if n_samples < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 samples (got {n_samples})"
        )));
    }
    let model = *model;
    Ok(chunk_bounds(n_samples)
        .map(|(stream, len)| {
            let mut rng = stream_rng(seed, stream);
            let mut sampler = ApSampler::new(model, k, norm);
            let mut acc = init();
            for _ in 0..len {
                visit(&mut acc, sampler.draw(&mut rng));
            }
            acc
        })
        .collect())
}

/// Sample moments of AP@k over `n_samples` seeded draws.
///
/// Runs on the current rayon pool; results do not depend on its size.
pub fn monte_carlo(
    model: &ModelSpec,
    k: usize,
    norm: Normalization,
    n_samples: u64,
    seed: u64,
) -> Result<SampleMoments> {
    let parts = run_chunks(model, k, norm, n_samples, seed, Welford::default, Welford::push)?;
    Ok(parts.into_iter().fold(Welford::default(), Welford::merge).moments())
}

/// Equal-width histogram of AP@k draws over `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramData {
    /// `n_bins + 1` ascending edges from 0 to 1.
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub model_label: String,
    pub n: u64,
}

impl HistogramData {
    pub fn empty(n_bins: usize, model_label: impl Into<String>) -> Result<Self> {
        if n_bins < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 bins (got {n_bins})")));
        }
        Ok(Self {
            bin_edges: (0..=n_bins).map(|i| i as f64 / n_bins as f64).collect(),
            counts: vec![0; n_bins],
            model_label: model_label.into(),
            n: 0,
        })
    }

    /// Bin index for a value in `[0, 1]`; exactly 1.0 lands in the last bin.
    pub fn bin_of(&self, value: f64) -> usize {
        let bins = self.counts.len();
        ((value * bins as f64) as usize).min(bins - 1)
    }

    pub fn add(&mut self, value: f64) {
        let b = self.bin_of(value);
        self.counts[b] += 1;
        self.n += 1;
    }

    fn absorb(mut self, other: &HistogramData) -> Self {
        for (c, o) in self.counts.iter_mut().zip(&other.counts) {
            *c += o;
        }
        self.n += other.n;
        self
    }

    pub fn bins(&self) -> impl Iterator<Item = (f64, f64, u64)> + '_ {
        self.bin_edges
            .windows(2)
            .zip(&self.counts)
            .map(|(w, &c)| (w[0], w[1], c))
    }

    /// Count-weighted mean of bin centres.
    pub fn center_mean(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        self.bins().map(|(lo, hi, c)| 0.5 * (lo + hi) * c as f64).sum::<f64>() / self.n as f64
    }
}

pub fn histogram(
    model: &ModelSpec,
    k: usize,
    norm: Normalization,
    n_samples: u64,
    seed: u64,
    n_bins: usize,
) -> Result<HistogramData> {
    let label = format!("{model} k={k} norm={norm}");
    let template = HistogramData::empty(n_bins, label)?;
    let parts = run_chunks(model, k, norm, n_samples, seed, || template.clone(), HistogramData::add)?;
    Ok(parts.iter().fold(template.clone(), |acc, part| acc.absorb(part)))
}
