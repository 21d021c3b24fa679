//! Quota presets, stratified sampling and balance tables.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::record::EpisodeRecord;
use super::{CurationError, Provenance};
use crate::simworld::{Difficulty, Maneuver, TimeOfDay, Weather};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Time,
    Weather,
    Maneuver,
    Difficulty,
    Provenance,
}

impl Dimension {
    pub const REPORTED: [Dimension; 3] = [Dimension::Time, Dimension::Weather, Dimension::Maneuver];

    pub fn name(&self) -> &'static str {
        match self {
            Dimension::Time => "time",
            Dimension::Weather => "weather",
            Dimension::Maneuver => "maneuver",
            Dimension::Difficulty => "difficulty",
            Dimension::Provenance => "provenance",
        }
    }

    pub fn labels(&self) -> &'static [&'static str] {
        match self {
            Dimension::Time => &["day", "night"],
            Dimension::Weather => &["sunny", "rainy"],
            Dimension::Maneuver => &["straight", "turn"],
            Dimension::Difficulty => &["E2D", "H2D"],
            Dimension::Provenance => &["sim", "real"],
        }
    }
}

/// Anything that can be assigned to strata.
pub trait Stratify {
    fn label(&self, dim: Dimension) -> &'static str;
}

/// Bare stratum labels, handy for large synthetic pools.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StratumLabels {
    pub time: TimeOfDay,
    pub weather: Weather,
    pub maneuver: Maneuver,
    pub provenance: Provenance,
}

fn labels_of(
    dim: Dimension,
    time: TimeOfDay,
    weather: Weather,
    maneuver: Maneuver,
    provenance: Provenance,
) -> &'static str {
    match dim {
        Dimension::Time => match time {
            TimeOfDay::Day => "day",
            TimeOfDay::Night => "night",
        },
        Dimension::Weather => match weather {
            Weather::Sunny => "sunny",
            Weather::Rainy => "rainy",
        },
        Dimension::Maneuver => match maneuver {
            Maneuver::Straight => "straight",
            Maneuver::Turn => "turn",
        },
        Dimension::Difficulty => {
            let hard =
                time == TimeOfDay::Night || weather == Weather::Rainy || maneuver == Maneuver::Turn;
            if hard {
                "H2D"
            } else {
                "E2D"
            }
        }
        Dimension::Provenance => provenance.as_str(),
    }
}

impl Stratify for StratumLabels {
    fn label(&self, dim: Dimension) -> &'static str {
        labels_of(dim, self.time, self.weather, self.maneuver, self.provenance)
    }
}

impl Stratify for EpisodeRecord {
    fn label(&self, dim: Dimension) -> &'static str {
        debug_assert_eq!(
            labels_of(Dimension::Difficulty, self.env.time, self.env.weather, self.maneuver, self.provenance) == "H2D",
            self.difficulty() == Difficulty::H2D
        );
        labels_of(dim, self.env.time, self.env.weather, self.maneuver, self.provenance)
    }
}

/// Target fractions per dimension. Joint strata take the product of the
/// marginals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<Dimension, BTreeMap<String, f64>>", into = "BTreeMap<Dimension, BTreeMap<String, f64>>")]
pub struct StratumQuota {
    dims: BTreeMap<Dimension, BTreeMap<String, f64>>,
}

impl TryFrom<BTreeMap<Dimension, BTreeMap<String, f64>>> for StratumQuota {
    type Error = CurationError;
    fn try_from(dims: BTreeMap<Dimension, BTreeMap<String, f64>>) -> Result<Self, Self::Error> {
        StratumQuota::new(dims)
    }
}

impl From<StratumQuota> for BTreeMap<Dimension, BTreeMap<String, f64>> {
    fn from(q: StratumQuota) -> Self {
        q.dims
    }
}

impl StratumQuota {
    pub const PRESETS: [&'static str; 2] = ["HASS", "nuScenes-like"];

    pub fn new(dims: BTreeMap<Dimension, BTreeMap<String, f64>>) -> Result<Self, CurationError> {
        if dims.is_empty() {
            return Err(CurationError::InvalidQuota("no dimensions".into()));
        }
        for (dim, fr) in &dims {
            let mut sum = 0.0;
            for (label, &f) in fr {
                if !dim.labels().contains(&label.as_str()) {
                    return Err(CurationError::InvalidQuota(format!(
                        "{}: unknown label {label:?}",
                        dim.name()
                    )));
                }
                if !(0.0..=1.0).contains(&f) {
                    return Err(CurationError::InvalidQuota(format!(
                        "{}/{label}: fraction {f} outside [0, 1]",
                        dim.name()
                    )));
                }
                sum += f;
            }
            if (sum - 1.0).abs() > 1e-9 {
                return Err(CurationError::InvalidQuota(format!(
                    "{}: fractions sum to {sum}",
                    dim.name()
                )));
            }
        }
        Ok(StratumQuota { dims })
    }

    fn from_counts(rows: &[(Dimension, [(&str, u64); 2])]) -> Self {
        let dims = rows
            .iter()
            .map(|(dim, pairs)| {
                let total: u64 = pairs.iter().map(|p| p.1).sum();
                let fr = pairs
                    .iter()
                    .map(|(l, c)| (l.to_string(), *c as f64 / total as f64))
                    .collect();
                (*dim, fr)
            })
            .collect();
        StratumQuota::new(dims).expect("preset is valid")
    }

    /// Named presets. `HASS` is the balanced simulated mix; `nuScenes-like`
    /// the day-heavy, straight-heavy real mix.
    pub fn preset(name: &str) -> Result<Self, CurationError> {
        match name {
            "HASS" => Ok(Self::from_counts(&[
                (Dimension::Time, [("day", 27891), ("night", 19662)]),
                (Dimension::Weather, [("sunny", 23010), ("rainy", 24543)]),
                (Dimension::Maneuver, [("straight", 22076), ("turn", 25477)]),
            ])),
            "nuScenes-like" => Ok(Self::from_counts(&[
                (Dimension::Time, [("day", 24745), ("night", 3385)]),
                (Dimension::Weather, [("sunny", 22548), ("rainy", 5582)]),
                (Dimension::Maneuver, [("straight", 24996), ("turn", 3134)]),
            ])),
            other => Err(CurationError::UnknownPreset(other.to_string())),
        }
    }

    pub fn dimensions(&self) -> impl Iterator<Item = Dimension> + '_ {
        self.dims.keys().copied()
    }

    pub fn fraction(&self, dim: Dimension, label: &str) -> Option<f64> {
        self.dims.get(&dim).map(|m| m.get(label).copied().unwrap_or(0.0))
    }

    /// Joint strata in key order with their target fraction.
    pub fn joint_strata(&self) -> Vec<(Vec<&'static str>, f64)> {
        let mut out: Vec<(Vec<&'static str>, f64)> = vec![(vec![], 1.0)];
        for (dim, fr) in &self.dims {
            let mut next = Vec::new();
            for (key, f) in &out {
                for &label in dim.labels() {
                    let g = fr.get(label).copied().unwrap_or(0.0);
                    let mut k = key.clone();
                    k.push(label);
                    next.push((k, f * g));
                }
            }
            out = next;
        }
        out
    }

    pub fn key_of<T: Stratify>(&self, item: &T) -> Vec<&'static str> {
        self.dims.keys().map(|d| item.label(*d)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StratumAllocation {
    pub key: Vec<String>,
    pub allocated: usize,
    pub available: usize,
    pub selected: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shortfall {
    pub key: Vec<String>,
    pub allocated: usize,
    pub available: usize,
}

impl fmt::Display for Shortfall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: allocated {}, available {}",
            self.key.join("/"),
            self.allocated,
            self.available
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleResult<T> {
    pub records: Vec<T>,
    /// Pool indices of the selected records, ascending.
    pub indices: Vec<usize>,
    pub allocations: Vec<StratumAllocation>,
    pub shortfall: Vec<Shortfall>,
}

impl<T> SampleResult<T> {
    pub fn is_complete(&self) -> bool {
        self.shortfall.is_empty()
    }
}

/// Largest-remainder allocation of `n` over `fractions`. Ties go to the
/// earlier stratum.
pub(crate) fn largest_remainder(fractions: &[f64], n: usize) -> Vec<usize> {
    let exact: Vec<f64> = fractions.iter().map(|f| f * n as f64).collect();
    let mut alloc: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let assigned: usize = alloc.iter().sum();
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        alloc[i] += 1;
    }
    alloc
}

/// Draws `n` items matching `quota`. Strata that cannot be filled are
/// reported in `shortfall` and filled as far as the pool allows.
pub fn stratified_sample<T: Stratify + Clone>(
    pool: &[T],
    quota: &StratumQuota,
    n: usize,
    seed: u64,
) -> Result<SampleResult<T>, CurationError> {
    if n > pool.len() {
        return Err(CurationError::PoolTooSmall {
            requested: n,
            available: pool.len(),
        });
    }
    let strata = quota.joint_strata();
    let fractions: Vec<f64> = strata.iter().map(|s| s.1).collect();
    let alloc = largest_remainder(&fractions, n);

    let mut groups: BTreeMap<Vec<&'static str>, Vec<usize>> = BTreeMap::new();
    for (i, item) in pool.iter().enumerate() {
        groups.entry(quota.key_of(item)).or_default().push(i);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices = Vec::with_capacity(n);
    let mut allocations = Vec::new();
    let mut shortfall = Vec::new();
    for ((key, _), &want) in strata.iter().zip(&alloc) {
        let members = groups.get(key).map(Vec::as_slice).unwrap_or(&[]);
        let take = want.min(members.len());
        if take > 0 {
            for j in index::sample(&mut rng, members.len(), take).into_iter() {
                indices.push(members[j]);
            }
        }
        let key_s: Vec<String> = key.iter().map(|s| s.to_string()).collect();
        if want > members.len() {
            shortfall.push(Shortfall {
                key: key_s.clone(),
                allocated: want,
                available: members.len(),
            });
        }
        allocations.push(StratumAllocation {
            key: key_s,
            allocated: want,
            available: members.len(),
            selected: take,
        });
    }
    indices.sort_unstable();
    Ok(SampleResult {
        records: indices.iter().map(|&i| pool[i].clone()).collect(),
        indices,
        allocations,
        shortfall,
    })
}

/// Largest `n` the pool can serve under `quota` without a shortfall.
pub fn max_feasible_size<T: Stratify>(pool: &[T], quota: &StratumQuota) -> usize {
    let strata = quota.joint_strata();
    let fractions: Vec<f64> = strata.iter().map(|s| s.1).collect();
    let mut avail: BTreeMap<Vec<&'static str>, usize> = BTreeMap::new();
    for item in pool {
        *avail.entry(quota.key_of(item)).or_insert(0) += 1;
    }
    let fits = |n: usize| {
        largest_remainder(&fractions, n)
            .iter()
            .zip(&strata)
            .all(|(&a, (k, _))| a <= avail.get(k).copied().unwrap_or(0))
    };
    // Feasibility is monotone in n up to rounding, so bisect and then walk
    // down to the first size that fits.
    let (mut lo, mut hi) = (0, pool.len());
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    while lo > 0 && !fits(lo) {
        lo -= 1;
    }
    lo
}

/// `"count (pp.pp%)"` with the percentage rounded half-to-even on exact
/// integers.
pub fn format_count_pct(count: usize, total: usize) -> String {
    if total == 0 {
        return format!("{count} (0.00%)");
    }
    let num = count as u128 * 10_000;
    let t = total as u128;
    let mut q = num / t;
    let r = num % t;
    if 2 * r > t || (2 * r == t && q % 2 == 1) {
        q += 1;
    }
    format!("{count} ({}.{:02}%)", q / 100, q % 100)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalanceRow {
    pub dimension: Dimension,
    pub label: String,
    pub count: usize,
    pub cell: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub total: usize,
    pub rows: Vec<BalanceRow>,
}

impl BalanceReport {
    pub fn cell(&self, label: &str) -> Option<&str> {
        self.rows.iter().find(|r| r.label == label).map(|r| r.cell.as_str())
    }

    pub fn count(&self, label: &str) -> Option<usize> {
        self.rows.iter().find(|r| r.label == label).map(|r| r.count)
    }
}

impl fmt::Display for BalanceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.rows.is_empty() {
            return Ok(());
        }
        writeln!(f, "{:<10} {:<9} count (share)", "dimension", "value")?;
        for r in &self.rows {
            writeln!(f, "{:<10} {:<9} {}", r.dimension.name(), r.label, r.cell)?;
        }
        Ok(())
    }
}

/// Per-dimension counts for day/night, sunny/rainy and straight/turn.
pub fn balance_report<T: Stratify>(records: &[T]) -> BalanceReport {
    let total = records.len();
    let mut rows = Vec::new();
    if total == 0 {
        return BalanceReport { total, rows };
    }
    for dim in Dimension::REPORTED {
        for &label in dim.labels() {
            let count = records.iter().filter(|r| r.label(dim) == label).count();
            rows.push(BalanceRow {
                dimension: dim,
                label: label.to_string(),
                count,
                cell: format_count_pct(count, total),
            });
        }
    }
    BalanceReport { total, rows }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn item(night: bool) -> StratumLabels {
        StratumLabels {
            time: if night { TimeOfDay::Night } else { TimeOfDay::Day },
            weather: Weather::Sunny,
            maneuver: Maneuver::Straight,
            provenance: Provenance::Sim,
        }
    }

    fn pool(day: usize, night: usize) -> Vec<StratumLabels> {
        let mut v = vec![item(false); day];
        v.extend(vec![item(true); night]);
        v
    }

    fn day_night(day: f64) -> StratumQuota {
        let mut m = BTreeMap::new();
        m.insert(
            Dimension::Time,
            BTreeMap::from([("day".to_string(), day), ("night".to_string(), 1.0 - day)]),
        );
        StratumQuota::new(m).unwrap()
    }

    #[test]
    fn even_split() {
        let r = stratified_sample(&pool(70, 10), &day_night(0.5), 20, 1).unwrap();
        let nights = r.records.iter().filter(|x| x.time == TimeOfDay::Night).count();
        assert_eq!((r.records.len() - nights, nights), (10, 10));
        assert!(r.is_complete());
    }

    #[test]
    fn all_day() {
        let r = stratified_sample(&pool(70, 10), &day_night(1.0), 5, 1).unwrap();
        assert_eq!(r.records.len(), 5);
        assert!(r.records.iter().all(|x| x.time == TimeOfDay::Day));
    }

    #[test]
    fn shortfall_is_reported() {
        let r = stratified_sample(&pool(70, 10), &day_night(0.5), 30, 1).unwrap();
        assert_eq!(
            r.shortfall,
            vec![Shortfall { key: vec!["night".into()], allocated: 15, available: 10 }]
        );
        assert_eq!(r.records.len(), 25);
        assert!(stratified_sample(&pool(3, 0), &day_night(0.5), 4, 1).is_err());
    }

    #[test]
    fn largest_remainder_by_hand() {
        assert_eq!(largest_remainder(&[0.5, 0.5], 3), vec![2, 1]);
        assert_eq!(largest_remainder(&[0.2, 0.3, 0.5], 7), vec![1, 2, 4]);
        assert_eq!(largest_remainder(&[1.0 / 3.0; 3], 10).iter().sum::<usize>(), 10);
    }

    #[test]
    fn count_pct_cells() {
        assert_eq!(format_count_pct(27891, 27891 + 19662), "27891 (58.65%)");
        assert_eq!(format_count_pct(19662, 27891 + 19662), "19662 (41.35%)");
        assert_eq!(format_count_pct(22076, 47553), "22076 (46.42%)");
        assert_eq!(format_count_pct(25477, 47553), "25477 (53.58%)");
        assert_eq!(format_count_pct(1, 1), "1 (100.00%)");
        // Exact ties go to the even neighbour.
        assert_eq!(format_count_pct(1, 8), "1 (12.50%)");
        assert_eq!(format_count_pct(1, 80000), "1 (0.00%)");
        assert_eq!(format_count_pct(3, 80000), "3 (0.00%)");
        assert_eq!(format_count_pct(5, 80000), "5 (0.01%)");
    }

    #[test]
    fn report_shapes() {
        assert!(balance_report::<StratumLabels>(&[]).rows.is_empty());
        let r = balance_report(&[item(false)]);
        assert_eq!(r.cell("day"), Some("1 (100.00%)"));
        assert_eq!(r.cell("night"), Some("0 (0.00%)"));
        assert_eq!(r.rows.len(), 6);
    }

    #[test]
    fn feasible_size() {
        // 21 splits 11/10 with the tie going to day.
        assert_eq!(max_feasible_size(&pool(70, 10), &day_night(0.5)), 21);
        assert_eq!(max_feasible_size(&pool(70, 10), &day_night(1.0)), 70);
        let n = max_feasible_size(&pool(70, 10), &day_night(0.7));
        assert!(stratified_sample(&pool(70, 10), &day_night(0.7), n, 0).unwrap().is_complete());
        assert!(!stratified_sample(&pool(70, 10), &day_night(0.7), n + 1, 0).unwrap().is_complete());
    }

    #[test]
    fn presets() {
        let q = StratumQuota::preset("HASS").unwrap();
        assert!((q.fraction(Dimension::Time, "day").unwrap() - 0.5865).abs() < 1e-4);
        assert_eq!(q.joint_strata().len(), 8);
        let total: f64 = q.joint_strata().iter().map(|s| s.1).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let r = StratumQuota::preset("nuScenes-like").unwrap();
        let ratio = r.fraction(Dimension::Time, "day").unwrap() / r.fraction(Dimension::Time, "night").unwrap();
        assert!((ratio - 7.31).abs() < 0.01);
        assert!(StratumQuota::preset("bogus").is_err());
        let json = serde_json::to_string(&q).unwrap();
        assert_eq!(serde_json::from_str::<StratumQuota>(&json).unwrap(), q);
        assert!(serde_json::from_str::<StratumQuota>(r#"{"time":{"day":0.7,"night":0.2}}"#).is_err());
    }
}
