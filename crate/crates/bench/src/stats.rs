/// Running summary of per-build means.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Samples {
    values: Vec<f64>,
}

impl Samples {
    pub fn push(&mut self, v: f64) {
        self.values.push(v);
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Standard error of the mean with the `n - 1` variance estimator; zero
    /// below two samples.
    pub fn sem(&self) -> f64 {
        let n = self.values.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        let var = self.values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    }

    /// SEM as a fraction of the mean; infinite below two samples.
    pub fn relative_sem(&self) -> f64 {
        if self.values.len() < 2 {
            return f64::INFINITY;
        }
        let m = self.mean();
        if m == 0.0 {
            0.0
        } else {
            self.sem() / m.abs()
        }
    }
}
