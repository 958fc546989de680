//! Weighted merit figure and ranking.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::criteria::CriteriaScores;
use crate::error::{invalid, Error, Result};

/// Criterion weights in the order EmR, ReG, EcF, SS, ESA. They must sum to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 5]", into = "[f64; 5]")]
pub struct WeightVector([f64; 5]);

impl WeightVector {
    pub fn new(w: [f64; 5]) -> Result<Self> {
        if w.iter().any(|a| !(*a >= 0.0)) {
            return Err(invalid(format!("weights must be >= 0, got {w:?}")));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("weights must sum to 1, got {sum}")));
        }
        Ok(Self(w))
    }

    pub fn equal() -> Self {
        Self([0.2; 5])
    }

    pub fn values(&self) -> [f64; 5] {
        self.0
    }
}

impl Default for WeightVector {
    fn default() -> Self {
        Self::equal()
    }
}

impl TryFrom<[f64; 5]> for WeightVector {
    type Error = Error;
    fn try_from(w: [f64; 5]) -> Result<Self> {
        Self::new(w)
    }
}

impl From<WeightVector> for [f64; 5] {
    fn from(w: WeightVector) -> Self {
        w.0
    }
}

impl FromStr for WeightVector {
    type Err = Error;

    /// Parses `a,b,c,d,e`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 5 {
            return Err(invalid(format!("expected 5 comma-separated weights, got {}", parts.len())));
        }
        let mut w = [0.0; 5];
        for (slot, p) in w.iter_mut().zip(parts) {
            *slot = p.parse().map_err(|_| invalid(format!("bad weight `{p}`")))?;
        }
        Self::new(w)
    }
}

/// Weighted sum of the five scores.
pub fn merit_figure(scores: &CriteriaScores, w: &WeightVector) -> Result<f64> {
    let w = WeightVector::new(w.0)?;
    Ok(scores.as_array().iter().zip(w.0).map(|(s, a)| s * a).sum())
}

/// A scored candidate awaiting ranking. `item` carries caller data through the ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scored<T> {
    pub item: T,
    pub label: String,
    pub npc: f64,
    pub scores: CriteriaScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedDesign<T> {
    pub rank: usize,
    pub label: String,
    pub npc: f64,
    pub scores: CriteriaScores,
    pub cp: f64,
    pub item: T,
}

/// Sorts by descending merit figure; ties go to lower NPC, then label.
pub fn rank<T>(candidates: Vec<Scored<T>>, w: &WeightVector) -> Result<Vec<RankedDesign<T>>> {
    if candidates.is_empty() {
        return Err(invalid("nothing to rank"));
    }
    let mut rows = candidates
        .into_iter()
        .map(|c| {
            let cp = merit_figure(&c.scores, w)?;
            Ok(RankedDesign { rank: 0, label: c.label, npc: c.npc, scores: c.scores, cp, item: c.item })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| {
        b.cp.total_cmp(&a.cp).then_with(|| a.npc.total_cmp(&b.npc)).then_with(|| a.label.cmp(&b.label))
    });
    for (i, r) in rows.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    Ok(rows)
}

/// Rounds half away from zero at `decimals` places, tolerating binary representation error.
pub fn round_half_up(x: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    let scaled = x * scale;
    let nudge = scaled.abs() * 1e-12;
    (scaled.abs() + nudge + 0.5).floor().copysign(scaled) / scale
}

/// Renders a fraction as a percentage with two decimals, half-up.
pub fn percent(frac: f64) -> String {
    format!("{:.2}", round_half_up(frac * 100.0, 2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: [f64; 5]) -> CriteriaScores {
        CriteriaScores::from_array(v.map(|x| x / 100.0))
    }

    #[test]
    fn weights_validated() {
        assert!(WeightVector::new([0.2; 5]).is_ok());
        assert!(WeightVector::new([0.3, 0.2, 0.2, 0.2, 0.2]).is_err());
        assert!(WeightVector::new([1.2, -0.2, 0.0, 0.0, 0.0]).is_err());
        assert_eq!("1,0,0,0,0".parse::<WeightVector>().unwrap().values(), [1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!("1,0,0".parse::<WeightVector>().is_err());
    }

    #[test]
    fn constant_scores_give_constant_cp() {
        let w = WeightVector::new([0.1, 0.4, 0.2, 0.1, 0.2]).unwrap();
        let cp = merit_figure(&CriteriaScores::from_array([0.37; 5]), &w).unwrap();
        assert!((cp - 0.37).abs() < 1e-15);
    }

    #[test]
    fn table_rows_10_and_37() {
        let w = WeightVector::equal();
        let cp10 = merit_figure(&s([88.84, 100.0, 83.13, 83.29, 88.85]), &w).unwrap();
        let cp37 = merit_figure(&s([67.95, 91.04, 68.56, 98.14, 80.89]), &w).unwrap();
        assert_eq!(percent(cp10), "88.82");
        assert_eq!(percent(cp37), "81.32");
    }

    #[test]
    fn half_up() {
        assert_eq!(percent(0.00125), "0.13");
        assert_eq!(percent(0.026749999999), "2.67");
        assert_eq!(round_half_up(2.675, 2), 2.68);
        assert_eq!(round_half_up(-1.005, 2), -1.01);
    }

    #[test]
    fn single_and_empty() {
        let one = vec![Scored { item: (), label: "a".into(), npc: 1.0, scores: s([50.0; 5]) }];
        assert_eq!(rank(one, &WeightVector::equal()).unwrap()[0].rank, 1);
        assert!(rank::<()>(vec![], &WeightVector::equal()).is_err());
    }

    #[test]
    fn ties_break_on_npc_then_label() {
        let mk = |label: &str, npc: f64| Scored { item: (), label: label.into(), npc, scores: s([50.0; 5]) };
        let r = rank(vec![mk("b", 2.0), mk("c", 1.0), mk("a", 2.0)], &WeightVector::equal()).unwrap();
        let order: Vec<_> = r.iter().map(|d| d.label.as_str()).collect();
        assert_eq!(order, ["c", "a", "b"]);
    }
}
