//! Collapsed Gibbs sampling for latent Dirichlet allocation.
//!
//! Each token's topic is resampled from
//!
//! ```text
//! p(z = k | rest) ∝ (n_dk + alpha) * (n_kw + beta) / (n_k + V * beta)
//! ```
//!
//! with the token's own assignment removed from every count. The
//! generator is ChaCha8 seeded from a `u64`, so a fixed seed gives the
//! same chain on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Post-burn-in sweeps between two accumulated samples.
pub const SAMPLE_LAG: usize = 10;

#[derive(Debug, Error, PartialEq)]
pub enum LdaError {
    #[error("invalid LDA parameters: {0}")]
    InvalidParams(String),
    #[error("corpus has no documents")]
    EmptyCorpus,
    #[error("document {0} has no tokens")]
    EmptyDocument(usize),
    #[error("token id {token} out of range for vocabulary of {vocab_size}")]
    TokenOutOfRange { token: usize, vocab_size: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdaParams {
    pub topics: usize,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl Default for LdaParams {
    fn default() -> Self {
        Self::with_topics(10)
    }
}

impl LdaParams {
    /// Conventional defaults for `topics` topics: alpha = 50/K, beta = 0.01,
    /// 1000 sweeps with 200 discarded.
    pub fn with_topics(topics: usize) -> Self {
        Self {
            topics,
            alpha: 50.0 / topics.max(1) as f64,
            beta: 0.01,
            iterations: 1000,
            burn_in: 200,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), LdaError> {
        let fail = |m: &str| Err(LdaError::InvalidParams(m.to_string()));
        if self.topics == 0 {
            return fail("topics must be at least 1");
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return fail("alpha must be positive and finite");
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return fail("beta must be positive and finite");
        }
        if self.iterations <= self.burn_in {
            return fail("iterations must exceed burn_in");
        }
        Ok(())
    }

    /// Whether the state after sweep `sweep` (1-based) enters the estimate.
    pub fn is_sample_sweep(&self, sweep: usize) -> bool {
        sweep > self.burn_in
            && ((sweep - self.burn_in).is_multiple_of(SAMPLE_LAG) || sweep == self.iterations)
    }
}

/// Chain state: token assignments plus the three count tables.
#[derive(Debug, Clone)]
pub struct GibbsSampler {
    topics: usize,
    vocab_size: usize,
    alpha: f64,
    beta: f64,
    words: Vec<u32>,
    doc_bounds: Vec<(usize, usize)>,
    assignments: Vec<u32>,
    // documents x topics
    doc_topic: Vec<u32>,
    // words x topics
    word_topic: Vec<u32>,
    topic_total: Vec<u32>,
    weights: Vec<f64>,
    rng: ChaCha8Rng,
}

impl GibbsSampler {
    /// Initializes every token to a uniformly drawn topic.
    pub fn new(
        docs: &[Vec<usize>],
        vocab_size: usize,
        params: &LdaParams,
    ) -> Result<Self, LdaError> {
        params.validate()?;
        if docs.is_empty() {
            return Err(LdaError::EmptyCorpus);
        }
        let k = params.topics;
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let n_tokens: usize = docs.iter().map(Vec::len).sum();
        let mut words = Vec::with_capacity(n_tokens);
        let mut doc_bounds = Vec::with_capacity(docs.len());
        let mut assignments = Vec::with_capacity(n_tokens);
        let mut doc_topic = vec![0u32; docs.len() * k];
        let mut word_topic = vec![0u32; vocab_size * k];
        let mut topic_total = vec![0u32; k];

        for (d, doc) in docs.iter().enumerate() {
            if doc.is_empty() {
                return Err(LdaError::EmptyDocument(d));
            }
            let start = words.len();
            for &w in doc {
                if w >= vocab_size {
                    return Err(LdaError::TokenOutOfRange {
                        token: w,
                        vocab_size,
                    });
                }
                let z = rng.gen_range(0..k);
                words.push(w as u32);
                assignments.push(z as u32);
                doc_topic[d * k + z] += 1;
                word_topic[w * k + z] += 1;
                topic_total[z] += 1;
            }
            doc_bounds.push((start, words.len()));
        }

        Ok(Self {
            topics: k,
            vocab_size,
            alpha: params.alpha,
            beta: params.beta,
            words,
            doc_bounds,
            assignments,
            doc_topic,
            word_topic,
            topic_total,
            weights: vec![0.0; k],
            rng,
        })
    }

    /// One systematic scan resampling every token in document order.
    pub fn sweep(&mut self) {
        let k = self.topics;
        let v_beta = self.vocab_size as f64 * self.beta;
        for d in 0..self.doc_bounds.len() {
            let (start, end) = self.doc_bounds[d];
            let dt = &mut self.doc_topic[d * k..(d + 1) * k];
            for i in start..end {
                let w = self.words[i] as usize;
                let old = self.assignments[i] as usize;
                let wt = &mut self.word_topic[w * k..(w + 1) * k];
                dt[old] -= 1;
                wt[old] -= 1;
                self.topic_total[old] -= 1;

                let mut total = 0.0;
                for t in 0..k {
                    let p = (dt[t] as f64 + self.alpha) * (wt[t] as f64 + self.beta)
                        / (self.topic_total[t] as f64 + v_beta);
                    total += p;
                    self.weights[t] = total;
                }
                let u = self.rng.gen::<f64>() * total;
                let new = self.weights.iter().position(|&c| u < c).unwrap_or(k - 1);

                self.assignments[i] = new as u32;
                dt[new] += 1;
                wt[new] += 1;
                self.topic_total[new] += 1;
            }
        }
    }

    pub fn assignments(&self) -> &[u32] {
        &self.assignments
    }

    pub fn topics(&self) -> usize {
        self.topics
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn num_docs(&self) -> usize {
        self.doc_bounds.len()
    }

    pub fn doc_topic_counts(&self) -> &[u32] {
        &self.doc_topic
    }

    pub fn word_topic_counts(&self) -> &[u32] {
        &self.word_topic
    }

    pub fn topic_totals(&self) -> &[u32] {
        &self.topic_total
    }

    /// Recomputes every count table from the assignments and compares.
    pub fn counts_consistent(&self) -> bool {
        let k = self.topics;
        let mut dt = vec![0u32; self.doc_topic.len()];
        let mut wt = vec![0u32; self.word_topic.len()];
        let mut tt = vec![0u32; k];
        for (d, &(start, end)) in self.doc_bounds.iter().enumerate() {
            for i in start..end {
                let z = self.assignments[i] as usize;
                dt[d * k + z] += 1;
                wt[self.words[i] as usize * k + z] += 1;
                tt[z] += 1;
            }
        }
        let lengths_ok = self.doc_bounds.iter().enumerate().all(|(d, &(s, e))| {
            self.doc_topic[d * k..(d + 1) * k].iter().sum::<u32>() as usize == e - s
        });
        lengths_ok && dt == self.doc_topic && wt == self.word_topic && tt == self.topic_total
    }
}

/// Smoothed distributions estimated from a chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    /// topics x vocabulary
    pub phi: Vec<Vec<f64>>,
    /// documents x topics
    pub theta: Vec<Vec<f64>>,
}

/// Running sums of the count tables over sampled sweeps.
#[derive(Debug)]
struct Accumulator {
    samples: usize,
    doc_topic: Vec<f64>,
    word_topic: Vec<f64>,
}

impl Accumulator {
    fn new(sampler: &GibbsSampler) -> Self {
        Self {
            samples: 0,
            doc_topic: vec![0.0; sampler.doc_topic.len()],
            word_topic: vec![0.0; sampler.word_topic.len()],
        }
    }

    fn add(&mut self, sampler: &GibbsSampler) {
        self.samples += 1;
        for (acc, &n) in self.doc_topic.iter_mut().zip(&sampler.doc_topic) {
            *acc += n as f64;
        }
        for (acc, &n) in self.word_topic.iter_mut().zip(&sampler.word_topic) {
            *acc += n as f64;
        }
    }

    fn finish(self, sampler: &GibbsSampler, alpha: f64, beta: f64) -> Estimate {
        let k = sampler.topics;
        let v = sampler.vocab_size;
        let s = self.samples as f64;
        let mean_wt: Vec<f64> = self.word_topic.iter().map(|x| x / s).collect();
        let mean_dt: Vec<f64> = self.doc_topic.iter().map(|x| x / s).collect();

        let phi = (0..k)
            .map(|t| {
                let n_k: f64 = (0..v).map(|w| mean_wt[w * k + t]).sum();
                let denom = n_k + v as f64 * beta;
                (0..v)
                    .map(|w| (mean_wt[w * k + t] + beta) / denom)
                    .collect()
            })
            .collect();
        let theta = sampler
            .doc_bounds
            .iter()
            .enumerate()
            .map(|(d, &(start, end))| {
                let denom = (end - start) as f64 + k as f64 * alpha;
                (0..k)
                    .map(|t| (mean_dt[d * k + t] + alpha) / denom)
                    .collect()
            })
            .collect();
        Estimate { phi, theta }
    }
}

/// Runs the full chain and averages counts over the sampled sweeps.
pub fn run_chain(
    docs: &[Vec<usize>],
    vocab_size: usize,
    params: &LdaParams,
) -> Result<Estimate, LdaError> {
    let mut sampler = GibbsSampler::new(docs, vocab_size, params)?;
    let mut acc = Accumulator::new(&sampler);
    for sweep in 1..=params.iterations {
        sampler.sweep();
        if params.is_sample_sweep(sweep) {
            acc.add(&sampler);
        }
    }
    Ok(acc.finish(&sampler, params.alpha, params.beta))
}
