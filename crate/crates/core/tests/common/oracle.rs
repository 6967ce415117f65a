//! Exact distribution of a single Gibbs sweep, by enumeration.
//!
//! Full conditionals are taken as ratios of the collapsed joint
//! likelihood (Dirichlet-multinomial in both directions), so this path
//! shares nothing with the sampler's incremental formula.

use statrs::function::gamma::ln_gamma;

pub struct TinyLda<'a> {
    pub docs: &'a [Vec<usize>],
    pub vocab_size: usize,
    pub topics: usize,
    pub alpha: f64,
    pub beta: f64,
}

impl TinyLda<'_> {
    pub fn tokens(&self) -> Vec<(usize, usize)> {
        self.docs
            .iter()
            .enumerate()
            .flat_map(|(d, doc)| doc.iter().map(move |&w| (d, w)))
            .collect()
    }

    /// log p(w, z) up to a constant.
    pub fn log_joint(&self, z: &[usize]) -> f64 {
        let (k, v) = (self.topics, self.vocab_size);
        let tokens = self.tokens();
        let mut doc_topic = vec![vec![0usize; k]; self.docs.len()];
        let mut topic_word = vec![vec![0usize; v]; k];
        for (&(d, w), &t) in tokens.iter().zip(z) {
            doc_topic[d][t] += 1;
            topic_word[t][w] += 1;
        }
        let ka = k as f64 * self.alpha;
        let vb = v as f64 * self.beta;
        let mut lp = 0.0;
        for counts in &doc_topic {
            let n: usize = counts.iter().sum();
            lp += ln_gamma(ka) - ln_gamma(n as f64 + ka);
            for &c in counts {
                lp += ln_gamma(c as f64 + self.alpha) - ln_gamma(self.alpha);
            }
        }
        for counts in &topic_word {
            let n: usize = counts.iter().sum();
            lp += ln_gamma(vb) - ln_gamma(n as f64 + vb);
            for &c in counts {
                lp += ln_gamma(c as f64 + self.beta) - ln_gamma(self.beta);
            }
        }
        lp
    }

    pub fn state_index(&self, z: &[usize]) -> usize {
        z.iter().fold(0, |acc, &t| acc * self.topics + t)
    }

    fn state(&self, mut index: usize, n: usize) -> Vec<usize> {
        let mut z = vec![0; n];
        for slot in z.iter_mut().rev() {
            *slot = index % self.topics;
            index /= self.topics;
        }
        z
    }

    /// Distribution over assignment states after one systematic sweep
    /// from a uniform random initialization.
    pub fn one_sweep_distribution(&self) -> Vec<f64> {
        let n = self.tokens().len();
        let states = self.topics.pow(n as u32);
        let mut dist = vec![1.0 / states as f64; states];
        for i in 0..n {
            let mut next = vec![0.0; states];
            for (s, &p) in dist.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                let z = self.state(s, n);
                let logs: Vec<f64> = (0..self.topics)
                    .map(|t| {
                        let mut zt = z.clone();
                        zt[i] = t;
                        self.log_joint(&zt)
                    })
                    .collect();
                let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let weights: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
                let total: f64 = weights.iter().sum();
                for (t, w) in weights.iter().enumerate() {
                    let mut zt = z.clone();
                    zt[i] = t;
                    next[self.state_index(&zt)] += p * w / total;
                }
            }
            dist = next;
        }
        dist
    }
}

/// Pearson chi-square statistic and its upper-tail p-value.
pub fn chi_square(observed: &[u64], expected_probs: &[f64]) -> (f64, f64) {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let total: u64 = observed.iter().sum();
    let mut stat = 0.0;
    let mut cells = 0;
    for (&o, &p) in observed.iter().zip(expected_probs) {
        let e = p * total as f64;
        if e > 0.0 {
            stat += (o as f64 - e).powi(2) / e;
            cells += 1;
        } else {
            assert_eq!(o, 0, "observed a state with zero probability");
        }
    }
    let dist = ChiSquared::new((cells - 1) as f64).unwrap();
    (stat, 1.0 - dist.cdf(stat))
}
