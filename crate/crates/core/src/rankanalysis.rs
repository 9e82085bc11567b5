//! Singular values, threshold-based channel rank, condition numbers and
//! population statistics.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;
use crate::mimo::Channel;
use crate::propagation::Coverage;
use crate::{Error, Result};

/// Singular values at or below this fraction of `σ₁` are numerical noise and
/// are stored as exact zeros.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Descending, non-negative singular values of a channel matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularSpectrum(Vec<f64>);

impl SingularSpectrum {
    /// Validates ordering and sign; no noise flushing is applied.
    pub fn new(sigma: Vec<f64>) -> Result<Self> {
        if sigma.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::Domain(format!("singular values must be finite and >= 0: {sigma:?}")));
        }
        if sigma.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Domain(format!("singular values must be descending: {sigma:?}")));
        }
        Ok(SingularSpectrum(sigma))
    }

    pub fn sigma(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&s| s == 0.0)
    }

    pub fn scaled(&self, c: f64) -> Self {
        SingularSpectrum(self.0.iter().map(|s| s * c.abs()).collect())
    }
}

/// Singular values of `H`, sorted descending, with values below
/// `RANK_TOLERANCE · σ₁` flushed to zero.
pub fn singular_values(ch: &Channel) -> Result<SingularSpectrum> {
    if ch.h.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::Domain("channel matrix has non-finite entries".into()));
    }
    let mut sigma: Vec<f64> = ch.h.clone().svd(false, false).singular_values.iter().copied().collect();
    sigma.sort_by(|a, b| b.total_cmp(a));
    let floor = sigma.first().copied().unwrap_or(0.0) * RANK_TOLERANCE;
    for s in &mut sigma {
        if *s <= floor {
            *s = 0.0;
        }
    }
    SingularSpectrum::new(sigma)
}

/// Threshold rule for counting singular values.
#[derive(Debug, Clone, PartialEq)]
pub enum RankCriterion {
    /// `σ_Thr = σ₁ / K`.
    RelativeK(f64),
    /// Per-order threshold: the population mean of the s-th singular value.
    PopulationMean(Vec<f64>),
}

impl RankCriterion {
    pub fn relative(k: f64) -> Result<Self> {
        if !(k > 1.0) || !k.is_finite() {
            return Err(Error::Domain(format!("K must be > 1, got {k}")));
        }
        Ok(RankCriterion::RelativeK(k))
    }

    pub fn population_mean(means: Vec<f64>) -> Result<Self> {
        SingularSpectrum::new(means.clone())?;
        Ok(RankCriterion::PopulationMean(means))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Thresholded {
    pub sigma: Vec<f64>,
    pub rank: usize,
}

impl Thresholded {
    pub fn spectrum(&self) -> SingularSpectrum {
        // survivors under the mean rule can be non-contiguous; re-sort
        let mut s = self.sigma.clone();
        s.sort_by(|a, b| b.total_cmp(a));
        SingularSpectrum(s)
    }
}

/// `σ̃_s = σ_s` if `σ_s ≥ σ_Thr` (and non-zero), else 0. The rank counts survivors.
pub fn apply_threshold(spectrum: &SingularSpectrum, criterion: &RankCriterion) -> Thresholded {
    let sigma: Vec<f64> = match criterion {
        RankCriterion::RelativeK(k) => {
            let thr = spectrum.0.first().copied().unwrap_or(0.0) / k;
            spectrum.0.iter().map(|&s| if s > 0.0 && s >= thr { s } else { 0.0 }).collect()
        }
        RankCriterion::PopulationMean(means) => spectrum
            .0
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                let thr = means.get(i).copied().unwrap_or(0.0);
                if s > 0.0 && s >= thr {
                    s
                } else {
                    0.0
                }
            })
            .collect(),
    };
    let rank = sigma.iter().filter(|&&s| s > 0.0).count();
    Thresholded { sigma, rank }
}

/// `20·log10(σ₁/σ₂)`; `None` when `σ₂ = 0` or fewer than two values exist.
pub fn condition_number_db(spectrum: &SingularSpectrum) -> Option<f64> {
    match spectrum.0.as_slice() {
        [s1, s2, ..] if *s2 > 0.0 => Some(20.0 * (s1 / s2).log10()),
        _ => None,
    }
}

/// Rank criterion as configured, before population means are known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CriterionSpec {
    RelativeK(f64),
    Mean,
}

impl CriterionSpec {
    /// Column-safe label: `k10`, `k100`, `k10000`, `k2p5`, `mean`.
    pub fn label(&self) -> String {
        match self {
            CriterionSpec::Mean => "mean".into(),
            CriterionSpec::RelativeK(k) if k.fract() == 0.0 && *k < 1e15 => format!("k{}", *k as u64),
            CriterionSpec::RelativeK(k) => format!("k{k}").replace('.', "p"),
        }
    }
}

impl fmt::Display for CriterionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for CriterionSpec {
    type Err = Error;

    /// Accepts `mean` or `k:<K>` (e.g. `k:100`, `k:1e4`).
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        if t == "mean" {
            return Ok(CriterionSpec::Mean);
        }
        let k = t
            .strip_prefix("k:")
            .and_then(|v| v.trim().parse::<f64>().ok())
            .ok_or_else(|| Error::Config(format!("rank criterion `{s}`: expected `mean` or `k:<K>`")))?;
        RankCriterion::relative(k).map_err(|e| Error::Config(e.to_string()))?;
        Ok(CriterionSpec::RelativeK(k))
    }
}

/// Which sites enter the population mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanPopulation {
    /// Covered sites only.
    #[default]
    Covered,
    /// Every site; uncovered sites contribute zeros.
    AllAsZero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriterionOutcome {
    pub rank: usize,
    /// Condition number of the thresholded spectrum.
    pub cn_db: Option<f64>,
}

/// Per-receiver analysis record.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteResult {
    pub position: Vec3,
    pub coverage: Coverage,
    pub rssi_dbm: Option<f64>,
    pub spectrum: Option<SingularSpectrum>,
    /// Unthresholded `σ₁/σ₂` in dB.
    pub cn_db: Option<f64>,
    /// One entry per configured criterion, empty unless covered.
    pub outcomes: Vec<CriterionOutcome>,
}

impl SiteResult {
    pub fn uncovered(position: Vec3, coverage: Coverage) -> Self {
        SiteResult {
            position,
            coverage,
            rssi_dbm: None,
            spectrum: None,
            cn_db: None,
            outcomes: Vec::new(),
        }
    }
}

/// Per-order means of the singular values over a population of sites.
pub fn population_mean_thresholds(results: &[SiteResult], population: MeanPopulation) -> Result<Vec<f64>> {
    let spectra: Vec<&SingularSpectrum> = results.iter().filter_map(|r| r.spectrum.as_ref()).collect();
    if spectra.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    let n_orders = spectra.iter().map(|s| s.len()).max().unwrap_or(0);
    let mut sums = vec![0.0; n_orders];
    for s in &spectra {
        for (acc, v) in sums.iter_mut().zip(s.sigma()) {
            *acc += v;
        }
    }
    let n = match population {
        MeanPopulation::Covered => spectra.len(),
        MeanPopulation::AllAsZero => results.len(),
    } as f64;
    Ok(sums.into_iter().map(|s| s / n).collect())
}

/// Right-continuous empirical CDF.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Ecdf {
    /// Distinct sorted values.
    pub breakpoints: Vec<f64>,
    /// `F(breakpoints[i])`.
    pub probabilities: Vec<f64>,
}

impl Ecdf {
    pub fn eval(&self, x: f64) -> f64 {
        match self.breakpoints.partition_point(|&b| b <= x) {
            0 => 0.0,
            i => self.probabilities[i - 1],
        }
    }

    pub fn is_empty(&self) -> bool {
        self.breakpoints.is_empty()
    }

    /// Smallest breakpoint with `F >= q`.
    pub fn quantile(&self, q: f64) -> Option<f64> {
        let i = self.probabilities.partition_point(|&p| p < q);
        self.breakpoints.get(i).copied()
    }
}

/// Empirical CDF; non-finite values are ignored.
pub fn ecdf(values: &[f64]) -> Ecdf {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut out = Ecdf::default();
    for (i, &x) in v.iter().enumerate() {
        if out.breakpoints.last() == Some(&x) {
            *out.probabilities.last_mut().unwrap() = (i + 1) as f64 / n;
        } else {
            out.breakpoints.push(x);
            out.probabilities.push((i + 1) as f64 / n);
        }
    }
    out
}

/// Site counts by coverage class and, per criterion, by rank.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageStats {
    pub n_total: usize,
    pub n_z: usize,
    pub n_b: usize,
    /// `rank_counts[c][r]`: covered sites with rank `r` under criterion `c`.
    pub rank_counts: Vec<Vec<usize>>,
}

impl CoverageStats {
    pub fn p_z(&self) -> f64 {
        self.n_z as f64 / self.n_total as f64
    }

    pub fn p_b(&self) -> f64 {
        self.n_b as f64 / self.n_total as f64
    }

    pub fn p_rank(&self, criterion: usize, rank: usize) -> f64 {
        self.rank_counts[criterion].get(rank).copied().unwrap_or(0) as f64 / self.n_total as f64
    }

    pub fn p_r1(&self, criterion: usize) -> f64 {
        self.p_rank(criterion, 1)
    }

    /// `|Z| + |B| + Σ_r |rank r| == N` for every criterion, on integer counts.
    pub fn is_conserved(&self) -> bool {
        self.rank_counts
            .iter()
            .all(|counts| self.n_z + self.n_b + counts.iter().sum::<usize>() == self.n_total)
    }
}

/// Coverage and rank-class counts over a list of site results.
pub fn coverage_probabilities(results: &[SiteResult], n_criteria: usize) -> CoverageStats {
    let max_rank = results
        .iter()
        .filter_map(|r| r.spectrum.as_ref().map(SingularSpectrum::len))
        .max()
        .unwrap_or(0);
    let mut stats = CoverageStats {
        n_total: results.len(),
        n_z: 0,
        n_b: 0,
        rank_counts: vec![vec![0; max_rank + 1]; n_criteria],
    };
    for r in results {
        match r.coverage {
            Coverage::NoCoverage => stats.n_z += 1,
            Coverage::InBuilding => stats.n_b += 1,
            Coverage::Covered => {
                for (c, o) in r.outcomes.iter().enumerate().take(n_criteria) {
                    stats.rank_counts[c][o.rank] += 1;
                }
            }
        }
    }
    stats
}
