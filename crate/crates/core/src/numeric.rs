//! Small numerical helpers shared by the models and the analysis code.

/// Running Neumaier (improved Kahan) sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Compensated sum of a sequence.
pub fn sum(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().collect::<CompensatedSum>().value()
}

/// `ln C(n, k)`, evaluated as a product of ratios so it stays finite for large `n`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    let mut acc = CompensatedSum::new();
    for j in 1..=k {
        acc.add(((n - k + j) as f64).ln() - (j as f64).ln());
    }
    acc.value()
}

/// Binomial pmf `P(X = k)` for `X ~ Binomial(n, p)`.
pub fn binomial_pmf(n: u64, k: u64, p: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    if p == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if p == 1.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    (ln_binomial(n, k) + k as f64 * p.ln() + (n - k) as f64 * (-p).ln_1p()).exp()
}

/// Table of `ln(i!)` for `i = 0..len`.
pub fn ln_factorials(len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut acc = CompensatedSum::new();
    for i in 0..len {
        if i > 1 {
            acc.add((i as f64).ln());
        }
        out.push(acc.value());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut values = vec![1.0e16];
        values.extend(std::iter::repeat_n(1.0, 1000));
        values.push(-1.0e16);
        assert_eq!(sum(values), 1000.0);
    }

    #[test]
    fn ln_binomial_small_values() {
        assert!((ln_binomial(4, 2).exp() - 6.0).abs() < 1e-12);
        assert!((ln_binomial(10, 0)).abs() < 1e-15);
        assert!((ln_binomial(52, 5).exp() - 2_598_960.0).abs() < 1e-4);
        assert_eq!(ln_binomial(3, 4), f64::NEG_INFINITY);
    }

    #[test]
    fn binomial_pmf_sums_to_one() {
        let total: f64 = (0..=20).map(|k| binomial_pmf(20, k, 0.3)).sum();
        assert!((total - 1.0).abs() < 1e-13);
        assert_eq!(binomial_pmf(5, 0, 0.0), 1.0);
        assert_eq!(binomial_pmf(5, 5, 1.0), 1.0);
    }

    #[test]
    fn ln_factorial_table() {
        let t = ln_factorials(8);
        assert_eq!(t[0], 0.0);
        assert_eq!(t[1], 0.0);
        assert!((t[5].exp() - 120.0).abs() < 1e-10);
    }
}
