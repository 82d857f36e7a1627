//! Active regions on `[0, 1]` and the metrics used to score them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spline::{Interval, SplineBasis};

/// Sorted, pairwise disjoint closed intervals. Serialized as `[[a, b], ...]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct Region {
    intervals: Vec<Interval>,
}

impl Region {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Union of arbitrary intervals; overlapping or touching pieces are merged.
    pub fn from_union<I: IntoIterator<Item = Interval>>(pieces: I) -> Result<Self> {
        let mut pieces: Vec<Interval> = pieces.into_iter().collect();
        for iv in &pieces {
            if !(0.0 <= iv.start && iv.start <= iv.end && iv.end <= 1.0) {
                return Err(Error::Data(format!(
                    "interval [{}, {}] is not a subinterval of [0, 1]",
                    iv.start, iv.end
                )));
            }
        }
        pieces.sort_by(|a, b| a.start.total_cmp(&b.start));
        let mut merged: Vec<Interval> = Vec::with_capacity(pieces.len());
        for iv in pieces {
            match merged.last_mut() {
                Some(last) if iv.start <= last.end => last.end = last.end.max(iv.end),
                _ => merged.push(iv),
            }
        }
        Ok(Self { intervals: merged })
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Lebesgue measure.
    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(Interval::len).sum()
    }

    pub fn contains(&self, t: f64) -> bool {
        self.intervals.iter().any(|iv| iv.contains(t))
    }

    /// Measure of the intersection with `other`.
    pub fn overlap(&self, other: &Region) -> f64 {
        let (a, b) = (&self.intervals, &other.intervals);
        let (mut i, mut j) = (0, 0);
        let mut total = 0.0;
        while i < a.len() && j < b.len() {
            let lo = a[i].start.max(b[j].start);
            let hi = a[i].end.min(b[j].end);
            if hi > lo {
                total += hi - lo;
            }
            if a[i].end < b[j].end {
                i += 1;
            } else {
                j += 1;
            }
        }
        total
    }
}

impl TryFrom<Vec<[f64; 2]>> for Region {
    type Error = Error;

    fn try_from(pairs: Vec<[f64; 2]>) -> Result<Self> {
        Region::from_union(pairs.into_iter().map(|[a, b]| Interval::new(a, b)))
    }
}

impl From<Region> for Vec<[f64; 2]> {
    fn from(r: Region) -> Self {
        r.intervals.into_iter().map(|iv| [iv.start, iv.end]).collect()
    }
}

/// Union of the supports of the selected basis functions (zero-based indices).
pub fn features_to_region(selected: &[usize], basis: &SplineBasis) -> Result<Region> {
    if let Some(&j) = selected.iter().find(|&&j| j >= basis.count()) {
        return Err(Error::InvalidConfig(format!(
            "feature index {j} out of range for {} basis functions",
            basis.count()
        )));
    }
    Region::from_union(selected.iter().map(|&j| basis.support(j)))
}

/// Indices `j` with `pips[j] > tau`.
pub fn select_features(pips: &[f64], tau: f64) -> Result<Vec<usize>> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "selection threshold must lie in (0, 1), got {tau}"
        )));
    }
    Ok(pips
        .iter()
        .enumerate()
        .filter(|(_, &q)| q > tau)
        .map(|(j, _)| j)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionMetrics {
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
}

/// Recall, precision and F1 of an estimated region by interval measure.
///
/// An empty truth gives recall 1; an empty estimate gives precision 1 only
/// when the truth is empty too.
pub fn region_metrics(estimated: &Region, truth: &Region) -> RegionMetrics {
    let hit = estimated.overlap(truth);
    let truth_measure = truth.measure();
    let est_measure = estimated.measure();
    let recall = if truth_measure > 0.0 {
        hit / truth_measure
    } else {
        1.0
    };
    let precision = if est_measure > 0.0 {
        hit / est_measure
    } else if truth_measure == 0.0 {
        1.0
    } else {
        0.0
    };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    RegionMetrics {
        recall,
        precision,
        f1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionMetrics {
    pub rmse: f64,
    pub mae: f64,
}

pub fn prediction_metrics(predicted: &[f64], observed: &[f64]) -> Result<PredictionMetrics> {
    if predicted.len() != observed.len() {
        return Err(Error::Shape {
            expected: observed.len(),
            got: predicted.len(),
        });
    }
    if observed.is_empty() {
        return Err(Error::Data("no observations to score".into()));
    }
    let n = observed.len() as f64;
    let (sq, abs) = predicted
        .iter()
        .zip(observed)
        .fold((0.0, 0.0), |(sq, abs), (p, y)| {
            let r = p - y;
            (sq + r * r, abs + r.abs())
        });
    Ok(PredictionMetrics {
        rmse: (sq / n).sqrt(),
        mae: abs / n,
    })
}
