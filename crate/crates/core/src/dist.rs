//! Finite probability distributions over integer-vector configurations.

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::sixvertex::LogSum;

#[derive(Clone, Debug, PartialEq)]
pub struct ExactDistribution {
    pub model: String,
    pub params_digest: String,
    /// Sorted, duplicate-free.
    pub support: Vec<Vec<i64>>,
    pub log_probs: Vec<f64>,
}

impl ExactDistribution {
    /// Normalizes unnormalized log-weights. Zero-weight configurations are
    /// dropped from the support.
    pub fn from_log_weights(
        model: &str,
        params: &str,
        items: Vec<(Vec<i64>, f64)>,
    ) -> Result<ExactDistribution> {
        let mut items: Vec<_> = items.into_iter().filter(|(_, w)| *w > f64::NEG_INFINITY).collect();
        if items.is_empty() {
            return Err(Error::InvalidParameter(format!("{model}: every configuration has zero weight")));
        }
        items.sort_by(|a, b| a.0.cmp(&b.0));
        if items.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidParameter(format!("{model}: duplicate configuration in support")));
        }
        let mut acc = LogSum::default();
        for (_, w) in &items {
            acc.add(*w);
        }
        let log_z = acc.value();
        let (support, log_probs) = items.into_iter().map(|(c, w)| (c, w - log_z)).unzip();
        Ok(ExactDistribution {
            model: model.to_string(),
            params_digest: hex(&Sha256::digest(params.as_bytes())),
            support,
            log_probs,
        })
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn probs(&self) -> Vec<f64> {
        self.log_probs.iter().map(|x| x.exp()).collect()
    }

    pub fn total(&self) -> f64 {
        self.log_probs.iter().map(|x| x.exp()).sum()
    }

    pub fn prob_of(&self, config: &[i64]) -> f64 {
        match self.support.binary_search_by(|c| c.as_slice().cmp(config)) {
            Ok(i) => self.log_probs[i].exp(),
            Err(_) => 0.0,
        }
    }

    pub fn event_prob<F: Fn(&[i64]) -> bool>(&self, event: F) -> f64 {
        self.support
            .iter()
            .zip(&self.log_probs)
            .filter(|(c, _)| event(c))
            .map(|(_, lp)| lp.exp())
            .sum()
    }

    pub fn expectation<F: Fn(&[i64]) -> f64>(&self, f: F) -> f64 {
        self.support.iter().zip(&self.log_probs).map(|(c, lp)| f(c) * lp.exp()).sum()
    }

    /// Largest absolute probability difference over the union of supports.
    pub fn max_abs_diff(&self, other: &ExactDistribution) -> f64 {
        let mut worst: f64 = 0.0;
        for (c, lp) in self.support.iter().zip(&self.log_probs) {
            worst = worst.max((lp.exp() - other.prob_of(c)).abs());
        }
        for (c, lp) in other.support.iter().zip(&other.log_probs) {
            worst = worst.max((lp.exp() - self.prob_of(c)).abs());
        }
        worst
    }

    /// Total-variation distance to an empirical histogram.
    pub fn tv_to_counts(&self, counts: &std::collections::HashMap<Vec<i64>, u64>) -> f64 {
        let n: u64 = counts.values().sum();
        if n == 0 {
            return 1.0;
        }
        let mut tv = 0.0;
        for (c, lp) in self.support.iter().zip(&self.log_probs) {
            let emp = counts.get(c).copied().unwrap_or(0) as f64 / n as f64;
            tv += (lp.exp() - emp).abs();
        }
        for (c, k) in counts {
            if self.support.binary_search(c).is_err() {
                tv += *k as f64 / n as f64;
            }
        }
        tv / 2.0
    }

    /// Pushforward through `f`, merging configurations with the same image.
    pub fn map<F: Fn(&[i64]) -> Vec<i64>>(&self, model: &str, f: F) -> ExactDistribution {
        let mut merged: std::collections::BTreeMap<Vec<i64>, LogSum> = Default::default();
        for (c, lp) in self.support.iter().zip(&self.log_probs) {
            merged.entry(f(c)).or_default().add(*lp);
        }
        let (support, log_probs) = merged.into_iter().map(|(c, s)| (c, s.value())).unzip();
        ExactDistribution {
            model: model.to_string(),
            params_digest: self.params_digest.clone(),
            support,
            log_probs,
        }
    }

    /// Hash of the support and of the probabilities printed to ten
    /// significant digits.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.model.as_bytes());
        hasher.update(b"\n");
        hasher.update(self.params_digest.as_bytes());
        hasher.update(b"\n");
        for (c, lp) in self.support.iter().zip(&self.log_probs) {
            let line = c.iter().map(i64::to_string).collect::<Vec<_>>().join(",");
            hasher.update(format!("{line};{:.9e}\n", lp.exp()).as_bytes());
        }
        hex(&hasher.finalize())
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
