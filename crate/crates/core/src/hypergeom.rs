//! Exact null distribution of true-positive adjacencies under random edge
//! placement, closed-form expectations and quantiles of the five adjacency
//! metrics, and the one-sided skeleton-fit test.
//!
//! Conditional on `(m_max, m_true, m_est)`, the number of true positives of
//! a uniformly placed skeleton is `HyperGeom(m_max, m_true, m_est)`. Every
//! adjacency metric below is an increasing affine function of TP once the
//! margins are fixed, so expectations are plug-ins of `E[TP]` and quantiles
//! are transforms of TP quantiles.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `m_max` for which probabilities are also kept as exact integer
/// ratios.
pub const EXACT_MODE_LIMIT: u64 = 60;

/// Slack used when comparing a cumulative probability against a level.
const CDF_SLACK: f64 = 1e-12;

/// The conditioning margins of the exact null.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HyperParams {
    pub m_max: u64,
    pub m_true: u64,
    pub m_est: u64,
}

impl HyperParams {
    pub fn new(m_max: u64, m_true: u64, m_est: u64) -> Result<Self> {
        let p = HyperParams {
            m_max,
            m_true,
            m_est,
        };
        p.validate()?;
        Ok(p)
    }

    /// Margins for DAGs over `d` nodes.
    pub fn for_nodes(d: u64, m_true: u64, m_est: u64) -> Result<Self> {
        Self::new(d * d.saturating_sub(1) / 2, m_true, m_est)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_true > self.m_max {
            return Err(Error::InvalidArgument(format!(
                "m_true = {} exceeds m_max = {}",
                self.m_true, self.m_max
            )));
        }
        if self.m_est > self.m_max {
            return Err(Error::InvalidArgument(format!(
                "m_est = {} exceeds m_max = {}",
                self.m_est, self.m_max
            )));
        }
        Ok(())
    }

    /// Smallest TP value with positive probability.
    pub fn support_min(&self) -> u64 {
        (self.m_est + self.m_true).saturating_sub(self.m_max)
    }

    pub fn support_max(&self) -> u64 {
        self.m_est.min(self.m_true)
    }
}

impl fmt::Display for HyperParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "HyperGeom(m_max = {}, m_true = {}, m_est = {})",
            self.m_max, self.m_true, self.m_est
        )
    }
}

/// TP/FP/FN/TN of an adjacency or endpoint classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        ConfusionCounts { tp, fp, fn_, tn }
    }

    /// Adjacency table with the given TP under fixed margins.
    pub fn from_margins(tp: u64, p: &HyperParams) -> Result<Self> {
        p.validate()?;
        if tp < p.support_min() || tp > p.support_max() {
            return Err(Error::InvalidArgument(format!(
                "tp = {tp} is impossible under {p}"
            )));
        }
        Ok(ConfusionCounts {
            tp,
            fp: p.m_est - tp,
            fn_: p.m_true - tp,
            tn: p.m_max + tp - p.m_est - p.m_true,
        })
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Margins implied by an adjacency table.
    pub fn margins(&self) -> HyperParams {
        HyperParams {
            m_max: self.total(),
            m_true: self.tp + self.fn_,
            m_est: self.tp + self.fp,
        }
    }
}

/// A metric value that may be undefined (zero denominator).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "Option<f64>", into = "Option<f64>")]
pub enum MetricValue {
    Value(f64),
    #[default]
    Missing,
}

impl MetricValue {
    pub fn ratio(num: f64, den: f64) -> Self {
        if den == 0.0 {
            MetricValue::Missing
        } else {
            MetricValue::Value(num / den)
        }
    }

    pub fn value(&self) -> Option<f64> {
        match *self {
            MetricValue::Value(v) => Some(v),
            MetricValue::Missing => None,
        }
    }

    pub fn is_missing(&self) -> bool {
        matches!(self, MetricValue::Missing)
    }
}

impl From<Option<f64>> for MetricValue {
    fn from(v: Option<f64>) -> Self {
        v.map_or(MetricValue::Missing, MetricValue::Value)
    }
}

impl From<MetricValue> for Option<f64> {
    fn from(v: MetricValue) -> Self {
        v.value()
    }
}

impl From<f64> for MetricValue {
    fn from(v: f64) -> Self {
        MetricValue::Value(v)
    }
}

impl fmt::Display for MetricValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricValue::Value(v) => write!(f, "{v}"),
            MetricValue::Missing => f.write_str("NA"),
        }
    }
}

/// The five adjacency metrics with closed-form nulls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricId {
    Precision,
    Recall,
    F1,
    Npv,
    Specificity,
}

impl MetricId {
    pub const ALL: [MetricId; 5] = [
        MetricId::Precision,
        MetricId::Recall,
        MetricId::F1,
        MetricId::Npv,
        MetricId::Specificity,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            MetricId::Precision => "precision",
            MetricId::Recall => "recall",
            MetricId::F1 => "f1",
            MetricId::Npv => "npv",
            MetricId::Specificity => "specificity",
        }
    }

    /// Write the metric as `(a + b * TP) / den` under fixed margins.
    fn affine(&self, p: &HyperParams) -> Result<(f64, f64, u64)> {
        let HyperParams {
            m_max,
            m_true,
            m_est,
        } = *p;
        let (offset, slope, den, margin) = match self {
            MetricId::Precision => (0.0, 1.0, m_est, "m_est"),
            MetricId::Recall => (0.0, 1.0, m_true, "m_true"),
            MetricId::F1 => (0.0, 2.0, m_est + m_true, "m_est + m_true"),
            MetricId::Npv => (
                m_max as f64 - m_est as f64 - m_true as f64,
                1.0,
                m_max - m_est,
                "m_max - m_est",
            ),
            MetricId::Specificity => (
                m_max as f64 - m_est as f64 - m_true as f64,
                1.0,
                m_max - m_true,
                "m_max - m_true",
            ),
        };
        if den == 0 {
            return Err(Error::Degenerate(format!(
                "{} is undefined because {margin} = 0",
                self.name()
            )));
        }
        Ok((offset, slope, den))
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for MetricId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        MetricId::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown adjacency metric '{s}'")))
    }
}

fn binom_u128(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * u128::from(n - i) / u128::from(i + 1);
    }
    c
}

/// Tabulated `HyperGeom(m_max, m_true, m_est)`.
#[derive(Debug, Clone)]
pub struct HyperGeom {
    params: HyperParams,
    lo: u64,
    pmf: Vec<f64>,
    /// Exact numerators over a common denominator (small `m_max` only).
    exact: Option<(Vec<u128>, u128)>,
}

impl HyperGeom {
    pub fn new(params: HyperParams) -> Result<Self> {
        params.validate()?;
        let HyperParams {
            m_max,
            m_true,
            m_est,
        } = params;
        let lo = params.support_min();
        let hi = params.support_max();

        if m_max <= EXACT_MODE_LIMIT {
            let den = binom_u128(m_max, m_est);
            let nums: Vec<u128> = (lo..=hi)
                .map(|k| binom_u128(m_true, k) * binom_u128(m_max - m_true, m_est - k))
                .collect();
            debug_assert_eq!(nums.iter().sum::<u128>(), den);
            let pmf = nums.iter().map(|&n| n as f64 / den as f64).collect();
            return Ok(HyperGeom {
                params,
                lo,
                pmf,
                exact: Some((nums, den)),
            });
        }

        // ln k! accumulated once up to m_max.
        let mut lf = Vec::with_capacity(m_max as usize + 1);
        lf.push(0.0f64);
        for i in 1..=m_max {
            lf.push(lf[i as usize - 1] + (i as f64).ln());
        }
        let ln_binom = |n: u64, k: u64| lf[n as usize] - lf[k as usize] - lf[(n - k) as usize];
        let ln_den = ln_binom(m_max, m_est);
        let pmf = (lo..=hi)
            .map(|k| (ln_binom(m_true, k) + ln_binom(m_max - m_true, m_est - k) - ln_den).exp())
            .collect();
        Ok(HyperGeom {
            params,
            lo,
            pmf,
            exact: None,
        })
    }

    pub fn params(&self) -> &HyperParams {
        &self.params
    }

    pub fn support(&self) -> std::ops::RangeInclusive<u64> {
        self.lo..=self.params.support_max()
    }

    pub fn pmf(&self, k: u64) -> f64 {
        if k < self.lo {
            return 0.0;
        }
        self.pmf.get((k - self.lo) as usize).copied().unwrap_or(0.0)
    }

    /// `P(X <= k)`.
    pub fn cdf(&self, k: u64) -> f64 {
        if k < self.lo {
            return 0.0;
        }
        if k >= self.params.support_max() {
            return 1.0;
        }
        if let Some((nums, den)) = &self.exact {
            let s: u128 = nums[..=(k - self.lo) as usize].iter().sum();
            return s as f64 / *den as f64;
        }
        self.pmf[..=(k - self.lo) as usize]
            .iter()
            .sum::<f64>()
            .min(1.0)
    }

    /// `P(X >= k)`, summed from the far tail inward.
    pub fn sf(&self, k: u64) -> f64 {
        if k <= self.lo {
            return 1.0;
        }
        if k > self.params.support_max() {
            return 0.0;
        }
        if let Some((nums, den)) = &self.exact {
            let s: u128 = nums[(k - self.lo) as usize..].iter().sum();
            return s as f64 / *den as f64;
        }
        self.pmf[(k - self.lo) as usize..]
            .iter()
            .rev()
            .sum::<f64>()
            .min(1.0)
    }

    /// `P(X >= k)` as an exact fraction `(numerator, denominator)`, available
    /// when `m_max <= EXACT_MODE_LIMIT`.
    pub fn sf_exact(&self, k: u64) -> Option<(u128, u128)> {
        let (nums, den) = self.exact.as_ref()?;
        let start = k.saturating_sub(self.lo) as usize;
        Some((nums.iter().skip(start).sum(), *den))
    }

    /// `P(X <= k)` as an exact fraction.
    pub fn cdf_exact(&self, k: u64) -> Option<(u128, u128)> {
        let (nums, den) = self.exact.as_ref()?;
        if k < self.lo {
            return Some((0, *den));
        }
        let end = ((k - self.lo) as usize + 1).min(nums.len());
        Some((nums[..end].iter().sum(), *den))
    }

    /// Smallest `k` in the support with `P(X <= k) >= level`.
    pub fn quantile(&self, level: f64) -> Result<u64> {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "quantile level must lie in (0, 1), got {level}"
            )));
        }
        let mut acc = 0.0;
        let mut acc_exact: u128 = 0;
        for (idx, &p) in self.pmf.iter().enumerate() {
            let cdf = match &self.exact {
                Some((nums, den)) => {
                    acc_exact += nums[idx];
                    acc_exact as f64 / *den as f64
                }
                None => {
                    acc += p;
                    acc
                }
            };
            if cdf + CDF_SLACK >= level {
                return Ok(self.lo + idx as u64);
            }
        }
        Ok(self.params.support_max())
    }

    pub fn mean(&self) -> f64 {
        if self.params.m_max == 0 {
            return 0.0;
        }
        self.params.m_est as f64 * self.params.m_true as f64 / self.params.m_max as f64
    }
}

/// `P(TP = k)`; zero outside the support.
pub fn pmf(k: u64, p: &HyperParams) -> Result<f64> {
    Ok(HyperGeom::new(*p)?.pmf(k))
}

/// Generalized inverse of the TP distribution function.
pub fn quantile(level: f64, p: &HyperParams) -> Result<u64> {
    HyperGeom::new(*p)?.quantile(level)
}

/// `E[TP] = m_est * m_true / m_max`.
pub fn expected_tp(p: &HyperParams) -> Result<f64> {
    p.validate()?;
    if p.m_max == 0 {
        return Err(Error::Degenerate(
            "E[TP] is undefined because m_max = 0".into(),
        ));
    }
    Ok(p.m_est as f64 * p.m_true as f64 / p.m_max as f64)
}

/// Metric value from a confusion table; missing when the denominator is 0.
pub fn metric_from_counts(metric: MetricId, c: &ConfusionCounts) -> MetricValue {
    let (tp, fp, fn_, tn) = (c.tp as f64, c.fp as f64, c.fn_ as f64, c.tn as f64);
    match metric {
        MetricId::Precision => MetricValue::ratio(tp, tp + fp),
        MetricId::Recall => MetricValue::ratio(tp, tp + fn_),
        MetricId::F1 => MetricValue::ratio(2.0 * tp, 2.0 * tp + fp + fn_),
        MetricId::Npv => MetricValue::ratio(tn, tn + fn_),
        MetricId::Specificity => MetricValue::ratio(tn, tn + fp),
    }
}

/// Expected metric value under random guessing.
pub fn expected_metric(metric: MetricId, p: &HyperParams) -> Result<f64> {
    p.validate()?;
    let (offset, slope, den) = metric.affine(p)?;
    let e_tp = expected_tp(p)?;
    let v = match metric {
        MetricId::Precision => p.m_true as f64 / p.m_max as f64,
        MetricId::Recall => p.m_est as f64 / p.m_max as f64,
        MetricId::F1 => {
            2.0 * p.m_est as f64 * p.m_true as f64
                / (p.m_max as f64 * p.m_est as f64 + p.m_max as f64 * p.m_true as f64)
        }
        MetricId::Npv => 1.0 - p.m_true as f64 / p.m_max as f64,
        MetricId::Specificity => 1.0 - p.m_est as f64 / p.m_max as f64,
    };
    debug_assert!((v - (offset + slope * e_tp) / den as f64).abs() < 1e-9);
    Ok(v)
}

/// Metric value at a TP count under fixed margins.
pub fn metric_at_tp(metric: MetricId, tp: u64, p: &HyperParams) -> Result<f64> {
    let (offset, slope, den) = metric.affine(p)?;
    Ok((offset + slope * tp as f64) / den as f64)
}

/// Quantile of a metric under random guessing: the metric's transform of the
/// TP quantile.
pub fn metric_quantile(metric: MetricId, level: f64, p: &HyperParams) -> Result<f64> {
    metric.affine(p)?;
    let q = quantile(level, p)?;
    metric_at_tp(metric, q, p)
}

/// Exact rational `num / den` in lowest terms, `den > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub num: i128,
    pub den: i128,
}

impl Ratio {
    pub fn new(num: i128, den: i128) -> Self {
        assert!(den != 0, "zero denominator");
        let (mut a, mut b) = (num.abs(), den.abs());
        while b != 0 {
            (a, b) = (b, a % b);
        }
        let g = a.max(1) * den.signum();
        Ratio {
            num: num / g,
            den: den / g,
        }
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

fn affine_exact(metric: MetricId, p: &HyperParams) -> Result<(i128, i128, i128)> {
    let (_, slope, den) = metric.affine(p)?;
    let offset = match metric {
        MetricId::Npv | MetricId::Specificity => {
            p.m_max as i128 - p.m_est as i128 - p.m_true as i128
        }
        _ => 0,
    };
    Ok((offset, slope as i128, den as i128))
}

/// [`metric_at_tp`] as an exact fraction.
pub fn metric_ratio_at_tp(metric: MetricId, tp: u64, p: &HyperParams) -> Result<Ratio> {
    let (a, b, den) = affine_exact(metric, p)?;
    Ok(Ratio::new(a + b * tp as i128, den))
}

/// [`expected_metric`] as an exact fraction.
pub fn expected_metric_ratio(metric: MetricId, p: &HyperParams) -> Result<Ratio> {
    p.validate()?;
    if p.m_max == 0 {
        return Err(Error::Degenerate(
            "expectation is undefined because m_max = 0".into(),
        ));
    }
    let (a, b, den) = affine_exact(metric, p)?;
    let m_max = p.m_max as i128;
    Ok(Ratio::new(
        a * m_max + b * p.m_true as i128 * p.m_est as i128,
        den * m_max,
    ))
}

/// One-sided exact p-value `P(TP >= tp_obs)` for the hypothesis that the
/// estimate's `m_est` edges were placed uniformly at random.
pub fn skeleton_fit_test(tp_obs: u64, p: &HyperParams) -> Result<f64> {
    p.validate()?;
    if p.m_est == 0 {
        return Err(Error::Degenerate(
            "skeleton-fit test is undefined for an empty estimate (m_est = 0)".into(),
        ));
    }
    if tp_obs > p.support_max() {
        return Err(Error::InvalidArgument(format!(
            "observed tp = {tp_obs} exceeds min(m_true, m_est) = {}",
            p.support_max()
        )));
    }
    Ok(HyperGeom::new(*p)?.sf(tp_obs))
}
