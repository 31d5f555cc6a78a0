//! Proxy-validation metrics.

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MetricsError {
    #[error("series lengths differ ({estimated} estimated vs {measured} measured)")]
    LengthMismatch { estimated: usize, measured: usize },
    #[error("at least two points are required, got {0}")]
    TooShort(usize),
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("{0} series has zero rank variance")]
    ZeroVariance(&'static str),
    #[error("estimated extrema coincide; calibration anchors are undefined")]
    DegenerateAnchors,
    #[error("point ({accuracy}, {latency}) lies outside the reference box")]
    OutsideReference { accuracy: f64, latency: f64 },
}

/// Estimated and measured values of the same configurations.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSeries {
    estimated: Vec<f64>,
    measured: Vec<f64>,
    ids: Vec<String>,
}

impl PairedSeries {
    pub fn new(estimated: Vec<f64>, measured: Vec<f64>) -> Result<Self, MetricsError> {
        let ids = (0..estimated.len()).map(|i| i.to_string()).collect();
        Self::with_ids(estimated, measured, ids)
    }

    pub fn with_ids(
        estimated: Vec<f64>,
        measured: Vec<f64>,
        ids: Vec<String>,
    ) -> Result<Self, MetricsError> {
        if estimated.len() != measured.len() || ids.len() != estimated.len() {
            return Err(MetricsError::LengthMismatch {
                estimated: estimated.len(),
                measured: measured.len(),
            });
        }
        if estimated.len() < 2 {
            return Err(MetricsError::TooShort(estimated.len()));
        }
        if let Some(i) =
            (0..estimated.len()).find(|&i| !estimated[i].is_finite() || !measured[i].is_finite())
        {
            return Err(MetricsError::NonFinite(i));
        }
        Ok(Self {
            estimated,
            measured,
            ids,
        })
    }

    pub fn estimated(&self) -> &[f64] {
        &self.estimated
    }

    pub fn measured(&self) -> &[f64] {
        &self.measured
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.estimated.len()
    }

    pub fn is_empty(&self) -> bool {
        self.estimated.is_empty()
    }
}

/// 1-based ranks; tied values share the mean of their positions.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation with fractional ranks for ties.
pub fn spearman(series: &PairedSeries) -> Result<f64, MetricsError> {
    let x = average_ranks(&series.estimated);
    let y = average_ranks(&series.measured);
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(&y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 {
        return Err(MetricsError::ZeroVariance("estimated"));
    }
    if syy == 0.0 {
        return Err(MetricsError::ZeroVariance("measured"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Fraction of pairs whose differences have the same sign; a tie agrees only with a tie.
pub fn pairwise_agreement(series: &PairedSeries) -> f64 {
    let (e, m) = (&series.estimated, &series.measured);
    let n = e.len();
    let mut agree = 0u64;
    for i in 0..n {
        for j in i + 1..n {
            if (e[i] - e[j]).partial_cmp(&0.0) == (m[i] - m[j]).partial_cmp(&0.0) {
                agree += 1;
            }
        }
    }
    agree as f64 / (n * (n - 1) / 2) as f64
}

/// Mean absolute error after mapping the estimated extrema onto their measured values.
pub fn calibrated_mae(series: &PairedSeries) -> Result<f64, MetricsError> {
    let (e, m) = (&series.estimated, &series.measured);
    let mut lo = 0;
    let mut hi = 0;
    for i in 1..e.len() {
        if e[i] < e[lo] {
            lo = i;
        }
        if e[i] > e[hi] {
            hi = i;
        }
    }
    if e[hi] == e[lo] {
        return Err(MetricsError::DegenerateAnchors);
    }
    let slope = (m[hi] - m[lo]) / (e[hi] - e[lo]);
    let total: f64 = e
        .iter()
        .zip(m)
        .map(|(&ei, &mi)| (m[lo] + slope * (ei - e[lo]) - mi).abs())
        .sum();
    Ok(total / e.len() as f64)
}

/// Area dominated by `points` (higher accuracy, lower latency) inside the box
/// `[reference.0, 1] x [0, reference.1]`.
pub fn hypervolume_2d(points: &[(f64, f64)], reference: (f64, f64)) -> Result<f64, MetricsError> {
    let (acc0, lat_max) = reference;
    for &(a, l) in points {
        if !(a >= acc0 && a <= 1.0 && l >= 0.0 && l <= lat_max) {
            return Err(MetricsError::OutsideReference {
                accuracy: a,
                latency: l,
            });
        }
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1).then(b.0.total_cmp(&a.0)));
    let mut area = 0.0;
    let mut best = acc0;
    for (i, &(a, l)) in sorted.iter().enumerate() {
        best = best.max(a);
        let next = sorted.get(i + 1).map_or(lat_max, |p| p.1);
        area += (best - acc0) * (next - l);
    }
    Ok(area)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn series(e: &[f64], m: &[f64]) -> PairedSeries {
        PairedSeries::new(e.to_vec(), m.to_vec()).unwrap()
    }

    #[test]
    fn spearman_cases() {
        let e = [0.1, 0.5, 0.2, 0.9, 0.3];
        let exp: Vec<f64> = e.iter().map(|x: &f64| x.exp() * 3.0 + 1.0).collect();
        assert_eq!(spearman(&series(&e, &exp)).unwrap(), 1.0);
        let rev: Vec<f64> = e.iter().map(|x| -x).collect();
        assert_eq!(spearman(&series(&e, &rev)).unwrap(), -1.0);
        assert_relative_eq!(
            spearman(&series(
                &[1.0, 2.0, 3.0, 4.0, 5.0],
                &[1.0, 2.0, 3.0, 5.0, 4.0]
            ))
            .unwrap(),
            0.9,
            max_relative = 1e-12
        );
        assert_eq!(
            spearman(&series(&[1.0, 1.0], &[1.0, 2.0])).unwrap_err(),
            MetricsError::ZeroVariance("estimated")
        );
    }

    #[test]
    fn spearman_with_ties_uses_average_ranks() {
        assert_eq!(
            average_ranks(&[3.0, 1.0, 3.0, 2.0]),
            vec![3.5, 1.0, 3.5, 2.0]
        );
    }

    #[test]
    fn pairwise_agreement_cases() {
        assert_eq!(
            pairwise_agreement(&series(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0])),
            1.0
        );
        assert_eq!(
            pairwise_agreement(&series(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0])),
            0.0
        );
        assert_relative_eq!(
            pairwise_agreement(&series(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0])),
            5.0 / 6.0
        );
        assert_eq!(pairwise_agreement(&series(&[1.0, 1.0], &[2.0, 3.0])), 0.0);
        assert_eq!(pairwise_agreement(&series(&[1.0, 1.0], &[2.0, 2.0])), 1.0);
    }

    #[test]
    fn calibrated_mae_cases() {
        let e = [0.2, 0.9, 0.4, 0.1];
        let affine: Vec<f64> = e.iter().map(|x| 2.5 * x - 1.0).collect();
        assert!(calibrated_mae(&series(&e, &affine)).unwrap() < 1e-12);
        assert_relative_eq!(
            calibrated_mae(&series(&[0.0, 1.0, 2.0], &[0.0, 10.0, 14.0])).unwrap(),
            1.0,
            max_relative = 1e-12
        );
        // Anchors map 0 -> 4 and 2 -> 0, so the middle point calibrates to 2 against 10.
        assert_relative_eq!(
            calibrated_mae(&series(&[0.0, 1.0, 2.0], &[4.0, 10.0, 0.0])).unwrap(),
            8.0 / 3.0,
            max_relative = 1e-12
        );
        assert_eq!(
            calibrated_mae(&series(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0])).unwrap_err(),
            MetricsError::DegenerateAnchors
        );
    }

    #[test]
    fn hypervolume_cases() {
        let l = 7.0;
        assert_eq!(hypervolume_2d(&[(1.0, 0.0)], (0.0, l)).unwrap(), l);
        let hv = hypervolume_2d(&[(0.5, 0.2 * l), (0.8, 0.6 * l)], (0.0, l)).unwrap();
        assert!((hv - 0.52 * l).abs() <= 1e-12 * l);
        assert_eq!(hypervolume_2d(&[], (0.0, l)).unwrap(), 0.0);
        let with_dominated =
            hypervolume_2d(&[(0.5, 0.2 * l), (0.8, 0.6 * l), (0.4, 0.5 * l)], (0.0, l)).unwrap();
        assert_eq!(with_dominated, hv);
        assert!(matches!(
            hypervolume_2d(&[(0.5, 8.0)], (0.0, l)),
            Err(MetricsError::OutsideReference { .. })
        ));
    }

    #[test]
    fn series_validation() {
        assert_eq!(
            PairedSeries::new(vec![1.0], vec![1.0]).unwrap_err(),
            MetricsError::TooShort(1)
        );
        assert!(matches!(
            PairedSeries::new(vec![1.0, 2.0], vec![1.0]),
            Err(MetricsError::LengthMismatch { .. })
        ));
        assert_eq!(
            PairedSeries::new(vec![1.0, f64::NAN], vec![1.0, 2.0]).unwrap_err(),
            MetricsError::NonFinite(1)
        );
    }
}
