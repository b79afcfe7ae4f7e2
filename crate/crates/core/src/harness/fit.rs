//! Least-squares slopes of median regret against corruption level.

use std::collections::BTreeMap;
use std::fmt;

use super::run::SummaryRow;
use crate::error::{Error, Result};

pub const GROUP_KEYS: &[&str] = &["alg", "env", "d", "seed"];
pub const MIN_LEVELS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct GroupFit {
    /// `(key, value)` pairs identifying the group.
    pub group: Vec<(String, String)>,
    pub levels: Vec<f64>,
    pub medians: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub residuals: Vec<f64>,
}

impl GroupFit {
    pub fn label(&self) -> String {
        self.group.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.group.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn rss(&self) -> f64 {
        self.residuals.iter().map(|r| r * r).sum()
    }
}

/// `slope(other) / slope(base)` for groups differing only in `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeRatio {
    pub base: String,
    pub other: String,
    pub base_d: usize,
    pub other_d: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub groups: Vec<GroupFit>,
    pub ratios: Vec<SlopeRatio>,
}

impl ScalingReport {
    pub fn ratio(&self, base_d: usize, other_d: usize) -> Option<f64> {
        self.ratios
            .iter()
            .find(|r| r.base_d == base_d && r.other_d == other_d)
            .map(|r| r.ratio)
    }
}

impl fmt::Display for ScalingReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "group,levels,slope,intercept,rss")?;
        for g in &self.groups {
            writeln!(f, "{},{},{},{},{}", g.label(), g.levels.len(), g.slope, g.intercept, g.rss())?;
        }
        if !self.ratios.is_empty() {
            writeln!(f, "base,other,ratio")?;
            for r in &self.ratios {
                writeln!(f, "{},{},{}", r.base, r.other, r.ratio)?;
            }
        }
        Ok(())
    }
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Ordinary least squares `y ≈ intercept + slope·x`.
pub fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

fn key_value(row: &SummaryRow, key: &str) -> String {
    match key {
        "alg" => row.alg.clone(),
        "env" => row.env.clone(),
        "d" => row.d.to_string(),
        "seed" => row.seed.to_string(),
        _ => unreachable!("validated"),
    }
}

pub fn fit_scaling(rows: &[SummaryRow], group_keys: &[&str]) -> Result<ScalingReport> {
    for k in group_keys {
        if !GROUP_KEYS.contains(k) {
            return Err(Error::Fit(format!("unknown group key `{k}` (known: {})", GROUP_KEYS.join(", "))));
        }
    }
    let mut buckets: BTreeMap<Vec<String>, BTreeMap<u64, Vec<f64>>> = BTreeMap::new();
    for row in rows {
        let key: Vec<String> = group_keys.iter().map(|k| key_value(row, k)).collect();
        buckets
            .entry(key)
            .or_default()
            .entry(row.level.to_bits())
            .or_default()
            .push(row.final_regret);
    }
    let mut groups = Vec::new();
    for (key, by_level) in buckets {
        let mut pairs: Vec<(f64, f64)> = by_level
            .into_iter()
            .map(|(bits, mut v)| (f64::from_bits(bits), median(&mut v)))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let group: Vec<(String, String)> = group_keys.iter().map(|k| k.to_string()).zip(key).collect();
        if pairs.len() < MIN_LEVELS {
            let label = group.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";");
            return Err(Error::Fit(format!(
                "group {label} has {} corruption levels, need at least {MIN_LEVELS}",
                pairs.len()
            )));
        }
        let (levels, medians): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let (slope, intercept) = least_squares(&levels, &medians);
        let residuals = levels.iter().zip(&medians).map(|(x, y)| y - (intercept + slope * x)).collect();
        groups.push(GroupFit {
            group,
            levels,
            medians,
            slope,
            intercept,
            residuals,
        });
    }
    groups.sort_by(|a, b| {
        let da = a.get("d").and_then(|v| v.parse::<usize>().ok());
        let db = b.get("d").and_then(|v| v.parse::<usize>().ok());
        (others(a), da).cmp(&(others(b), db))
    });
    let mut ratios = Vec::new();
    if group_keys.contains(&"d") {
        for (i, base) in groups.iter().enumerate() {
            for other in &groups[i + 1..] {
                if others(base) != others(other) {
                    continue;
                }
                let (bd, od) = (dim_of(base), dim_of(other));
                if bd < od {
                    ratios.push(SlopeRatio {
                        base: base.label(),
                        other: other.label(),
                        base_d: bd,
                        other_d: od,
                        ratio: other.slope / base.slope,
                    });
                }
            }
        }
    }
    Ok(ScalingReport { groups, ratios })
}

fn others(g: &GroupFit) -> Vec<(String, String)> {
    g.group.iter().filter(|(k, _)| k != "d").cloned().collect()
}

fn dim_of(g: &GroupFit) -> usize {
    g.get("d").and_then(|v| v.parse().ok()).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(alg: &str, d: usize, level: f64, seed: u64, regret: f64) -> SummaryRow {
        SummaryRow {
            alg: alg.into(),
            env: "e".into(),
            d,
            level,
            seed,
            final_regret: regret,
            c: 0.0,
            c_inf: 0.0,
        }
    }

    #[test]
    fn exact_line() {
        let rows: Vec<_> = [0.0, 1.0, 2.0, 5.0].iter().map(|&l| row("a", 2, l, 1, 10.0 + 2.0 * l)).collect();
        let rep = fit_scaling(&rows, &["alg"]).unwrap();
        assert!((rep.groups[0].slope - 2.0).abs() < 1e-12);
        assert!((rep.groups[0].intercept - 10.0).abs() < 1e-12);
        assert!(rep.groups[0].rss() < 1e-20);
    }

    #[test]
    fn constant_regret_has_zero_slope() {
        let rows: Vec<_> = [0.0, 1.0, 2.0].iter().map(|&l| row("a", 2, l, 1, 7.0)).collect();
        assert_eq!(fit_scaling(&rows, &["alg"]).unwrap().groups[0].slope, 0.0);
    }

    #[test]
    fn uses_medians_and_reports_ratios() {
        let mut rows = Vec::new();
        for &(d, s) in &[(2usize, 1.0), (8, 2.0)] {
            for &l in &[0.0, 10.0, 20.0] {
                rows.push(row("a", d, l, 1, s * l));
                rows.push(row("a", d, l, 2, s * l + 1000.0));
                rows.push(row("a", d, l, 3, s * l - 1.0));
            }
        }
        let rep = fit_scaling(&rows, &["d", "alg"]).unwrap();
        assert_eq!(rep.groups.len(), 2);
        assert!((rep.ratio(2, 8).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_levels() {
        let rows = vec![row("a", 2, 0.0, 1, 1.0), row("a", 2, 1.0, 1, 2.0)];
        assert!(matches!(fit_scaling(&rows, &["alg"]), Err(Error::Fit(_))));
        assert!(matches!(fit_scaling(&rows, &["level"]), Err(Error::Fit(_))));
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
