//! Vose's alias method for O(1) sampling from a fixed discrete distribution.

use rand::Rng;

use crate::error::{PecError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AliasTable {
    prob: Vec<f64>,
    alias: Vec<usize>,
}

impl AliasTable {
    /// Build from nonnegative, not necessarily normalized weights.
    pub fn new(weights: &[f64]) -> Result<Self> {
        let n = weights.len();
        if n == 0 {
            return Err(PecError::invalid("alias table needs at least one outcome"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(PecError::invalid(
                "alias weights must be finite and nonnegative",
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(PecError::invalid("alias weights sum to zero"));
        }

        let mut scaled: Vec<f64> = weights.iter().map(|w| w * n as f64 / total).collect();
        let mut prob = vec![1.0; n];
        let mut alias: Vec<usize> = (0..n).collect();
        let (mut small, mut large): (Vec<usize>, Vec<usize>) =
            (0..n).partition(|&i| scaled[i] < 1.0);

        while let (Some(s), Some(&l)) = (small.pop(), large.last()) {
            prob[s] = scaled[s];
            alias[s] = l;
            scaled[l] -= 1.0 - scaled[s];
            if scaled[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // leftovers are full cells up to rounding
        for i in small.into_iter().chain(large) {
            prob[i] = 1.0;
            alias[i] = i;
        }
        Ok(Self { prob, alias })
    }

    pub fn len(&self) -> usize {
        self.prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prob.is_empty()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let i = rng.random_range(0..self.prob.len());
        if self.prob[i] >= 1.0 || rng.random::<f64>() < self.prob[i] {
            i
        } else {
            self.alias[i]
        }
    }

    /// The distribution the table actually samples from.
    pub fn probabilities(&self) -> Vec<f64> {
        let n = self.prob.len() as f64;
        let mut p: Vec<f64> = self.prob.iter().map(|&x| x / n).collect();
        for (i, &a) in self.alias.iter().enumerate() {
            if a != i {
                p[a] += (1.0 - self.prob[i]) / n;
            }
        }
        p
    }

    /// True when every cell keeps its own outcome (no aliasing).
    pub fn is_trivial(&self) -> bool {
        self.prob.iter().all(|&x| x >= 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    #[test]
    fn two_outcome_empirical_match() {
        let t = AliasTable::new(&[0.2, 0.8]).unwrap();
        let mut rng = seed::rng(11);
        let draws = 100_000;
        let mut counts = [0usize; 2];
        for _ in 0..draws {
            counts[t.sample(&mut rng)] += 1;
        }
        let l1 = (counts[0] as f64 / draws as f64 - 0.2).abs()
            + (counts[1] as f64 / draws as f64 - 0.8).abs();
        assert!(l1 <= 0.01, "L1 = {l1}");
    }

    #[test]
    fn uniform_needs_no_alias() {
        let t = AliasTable::new(&[3.0; 5]).unwrap();
        assert!(t.is_trivial());
        for p in t.probabilities() {
            assert!((p - 0.2).abs() < 1e-15);
        }
    }

    #[test]
    fn single_outcome_always_returned() {
        let t = AliasTable::new(&[0.7]).unwrap();
        let mut rng = seed::rng(3);
        assert!((0..1000).all(|_| t.sample(&mut rng) == 0));
    }

    #[test]
    fn reconstructs_distribution() {
        let w = [1.0, 0.0, 3.0, 0.5, 5.5];
        let t = AliasTable::new(&w).unwrap();
        let total: f64 = w.iter().sum();
        for (p, wi) in t.probabilities().iter().zip(w) {
            assert!((p - wi / total).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(AliasTable::new(&[]).is_err());
        assert!(AliasTable::new(&[0.0, 0.0]).is_err());
        assert!(AliasTable::new(&[1.0, -0.1]).is_err());
        assert!(AliasTable::new(&[f64::NAN]).is_err());
    }
}
