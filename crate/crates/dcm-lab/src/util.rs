//! Small numeric helpers shared across modules.

/// Neumaier-compensated accumulator. Used wherever a tolerance in the
/// 1e-10..1e-14 range must survive sums over up to `m ~ 1e7` terms.
#[derive(Clone, Copy, Debug, Default)]
pub struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of a slice.
pub fn ksum(xs: &[f64]) -> f64 {
    let mut acc = Kahan::default();
    for &x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Compensated L1 distance between two equal-length vectors.
pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut acc = Kahan::default();
    for (x, y) in a.iter().zip(b) {
        acc.add((x - y).abs());
    }
    acc.value()
}

/// Sample mean, unbiased variance and a normal-approximation 95% confidence
/// half-width (1.96 * sd / sqrt(k)). Returns zeros for empty input.
pub fn mean_var_ci(xs: &[f64]) -> (f64, f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let k = xs.len() as f64;
    let mean = ksum(xs) / k;
    if xs.len() < 2 {
        return (mean, 0.0, 0.0);
    }
    let mut acc = Kahan::default();
    for &x in xs {
        acc.add((x - mean) * (x - mean));
    }
    let var = acc.value() / (k - 1.0);
    (mean, var, 1.96 * (var / k).sqrt())
}

/// Ordinary least squares y = a + b x. Returns (intercept, slope, r_squared).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2);
    let n = xs.len() as f64;
    let mx = ksum(xs) / n;
    let my = ksum(ys) / n;
    let (mut sxx, mut sxy, mut syy) = (Kahan::default(), Kahan::default(), Kahan::default());
    for (&x, &y) in xs.iter().zip(ys) {
        sxx.add((x - mx) * (x - mx));
        sxy.add((x - mx) * (y - my));
        syy.add((y - my) * (y - my));
    }
    let slope = sxy.value() / sxx.value();
    let r2 = if syy.value() == 0.0 {
        1.0
    } else {
        (sxy.value() * sxy.value()) / (sxx.value() * syy.value())
    };
    (my - slope * mx, slope, r2)
}

/// Two-sample Kolmogorov-Smirnov distance. Both inputs are sorted in place.
pub fn ks_distance(a: &mut [f64], b: &mut [f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty());
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_beats_naive_on_adversarial_sum() {
        let xs = vec![1e16, 1.0, -1e16, 1.0];
        assert_eq!(ksum(&xs), 2.0);
    }

    #[test]
    fn linear_fit_recovers_exact_line() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 2.0 * x).collect();
        let (a, b, r2) = linear_fit(&xs, &ys);
        assert!((a - 3.0).abs() < 1e-12);
        assert!((b + 2.0).abs() < 1e-12);
        assert!((r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ks_of_identical_samples_is_zero() {
        let mut a = vec![0.3, 0.1, 0.2];
        let mut b = vec![0.2, 0.3, 0.1];
        assert_eq!(ks_distance(&mut a, &mut b), 0.0);
    }

    #[test]
    fn ks_of_disjoint_samples_is_one() {
        let mut a = vec![0.0, 1.0];
        let mut b = vec![5.0, 6.0];
        assert_eq!(ks_distance(&mut a, &mut b), 1.0);
    }
}
