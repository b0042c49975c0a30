use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::ops::RangeInclusive;
use std::path::Path;

use log::warn;

use crate::error::{Error, Result};

pub const VOTES_HEADER: [&str; 4] = ["unit_id", "period", "item_id", "vote"];

/// Orders labels numerically when both parse as numbers, otherwise as text.
pub fn label_cmp(a: &str, b: &str) -> Ordering {
    if let (Ok(x), Ok(y)) = (a.parse::<i64>(), b.parse::<i64>()) {
        return x.cmp(&y).then_with(|| a.cmp(b));
    }
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) if x.is_finite() && y.is_finite() => {
            x.partial_cmp(&y).unwrap_or(Ordering::Equal).then_with(|| a.cmp(b))
        }
        _ => a.cmp(b),
    }
}

/// One row of the long-format votes table. `vote == None` is a missing vote.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoteRecord {
    pub unit: String,
    pub period: String,
    pub item: String,
    pub vote: Option<bool>,
}

/// An observed vote with dense indices. `item` is local to its period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Vote {
    pub period: usize,
    pub item: usize,
    pub unit: usize,
    pub reverse: bool,
}

/// A vote as seen from an item: who voted, at which row of their path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CaseVote {
    pub unit: usize,
    pub slot: usize,
    pub reverse: bool,
}

/// A vote as seen from a unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnitVote {
    pub slot: usize,
    pub case: usize,
    pub reverse: bool,
}

/// Sparse binary votes indexed by (unit, item, period).
///
/// Units, periods and per-period items are kept in natural label order and
/// addressed by dense 0-based indices. A "case" is one (period, item) pair,
/// numbered period-major.
#[derive(Debug, Clone)]
pub struct VoteDataset {
    units: Vec<String>,
    periods: Vec<String>,
    items: Vec<Vec<String>>,
    service: Vec<(usize, usize)>,
    votes: Vec<Vote>,
    case_start: Vec<usize>,
    by_case: Vec<Vec<CaseVote>>,
    by_unit: Vec<Vec<UnitVote>>,
}

impl PartialEq for VoteDataset {
    fn eq(&self, other: &Self) -> bool {
        self.units == other.units
            && self.periods == other.periods
            && self.items == other.items
            && self.service == other.service
            && self.votes == other.votes
    }
}

impl VoteDataset {
    /// Builds a dataset from rows. Missing votes extend service ranges and
    /// declare items but are otherwise dropped.
    pub fn from_records(records: &[VoteRecord]) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::NoRecords);
        }
        let mut seen = BTreeSet::new();
        for r in records {
            if !seen.insert((&r.unit, &r.item, &r.period)) {
                return Err(Error::DuplicateVote {
                    line: 0,
                    unit: r.unit.clone(),
                    item: r.item.clone(),
                    period: r.period.clone(),
                });
            }
        }

        let mut units: Vec<String> = records.iter().map(|r| r.unit.clone()).collect();
        units.sort_by(|a, b| label_cmp(a, b));
        units.dedup();
        let mut periods: Vec<String> = records.iter().map(|r| r.period.clone()).collect();
        periods.sort_by(|a, b| label_cmp(a, b));
        periods.dedup();
        let unit_ix: HashMap<&str, usize> = units.iter().enumerate().map(|(i, u)| (u.as_str(), i)).collect();
        let period_ix: HashMap<&str, usize> = periods.iter().enumerate().map(|(i, p)| (p.as_str(), i)).collect();

        let mut items: Vec<Vec<String>> = vec![Vec::new(); periods.len()];
        for r in records {
            items[period_ix[r.period.as_str()]].push(r.item.clone());
        }
        for list in &mut items {
            list.sort_by(|a, b| label_cmp(a, b));
            list.dedup();
        }
        let item_ix: Vec<HashMap<&str, usize>> = items
            .iter()
            .map(|l| l.iter().enumerate().map(|(i, x)| (x.as_str(), i)).collect())
            .collect();

        let mut service = vec![(usize::MAX, 0); units.len()];
        let mut votes = Vec::new();
        for r in records {
            let u = unit_ix[r.unit.as_str()];
            let p = period_ix[r.period.as_str()];
            let s = &mut service[u];
            s.0 = s.0.min(p);
            s.1 = s.1.max(p);
            if let Some(reverse) = r.vote {
                votes.push(Vote {
                    period: p,
                    item: item_ix[p][r.item.as_str()],
                    unit: u,
                    reverse,
                });
            }
        }
        Self::from_parts(units, periods, items, service, votes)
    }

    /// Assembles a dataset from already-indexed parts, checking every invariant.
    pub fn from_parts(
        units: Vec<String>,
        periods: Vec<String>,
        items: Vec<Vec<String>>,
        service: Vec<(usize, usize)>,
        mut votes: Vec<Vote>,
    ) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if units.is_empty() || periods.is_empty() {
            return Err(Error::NoRecords);
        }
        if items.len() != periods.len() || service.len() != units.len() {
            return bad("dataset parts have inconsistent lengths".into());
        }
        for (u, &(a, b)) in service.iter().enumerate() {
            if a > b || b >= periods.len() {
                return bad(format!("unit {:?} has an invalid service range", units[u]));
            }
        }
        votes.sort();
        for w in votes.windows(2) {
            if (w[0].period, w[0].item, w[0].unit) == (w[1].period, w[1].item, w[1].unit) {
                return bad("duplicate vote key".into());
            }
        }
        for v in &votes {
            if v.unit >= units.len() || v.period >= periods.len() || v.item >= items[v.period].len() {
                return bad("vote references an undeclared unit, period or item".into());
            }
            let (a, b) = service[v.unit];
            if v.period < a || v.period > b {
                return bad(format!("unit {:?} votes outside its service range", units[v.unit]));
            }
        }

        let mut case_start = Vec::with_capacity(periods.len() + 1);
        let mut acc = 0;
        for list in &items {
            case_start.push(acc);
            acc += list.len();
        }
        case_start.push(acc);

        let mut by_case = vec![Vec::new(); acc];
        let mut by_unit = vec![Vec::new(); units.len()];
        for v in &votes {
            let case = case_start[v.period] + v.item;
            let slot = v.period - service[v.unit].0;
            by_case[case].push(CaseVote {
                unit: v.unit,
                slot,
                reverse: v.reverse,
            });
            by_unit[v.unit].push(UnitVote {
                slot,
                case,
                reverse: v.reverse,
            });
        }

        let ds = VoteDataset {
            units,
            periods,
            items,
            service,
            votes,
            case_start,
            by_case,
            by_unit,
        };
        for p in ds.uninformative_periods() {
            warn!("period {:?} has no item with two differing votes", ds.periods[p]);
        }
        Ok(ds)
    }

    pub fn n_units(&self) -> usize {
        self.units.len()
    }

    pub fn n_periods(&self) -> usize {
        self.periods.len()
    }

    pub fn n_cases(&self) -> usize {
        self.by_case.len()
    }

    pub fn n_votes(&self) -> usize {
        self.votes.len()
    }

    pub fn unit_ids(&self) -> &[String] {
        &self.units
    }

    pub fn period_ids(&self) -> &[String] {
        &self.periods
    }

    pub fn item_ids(&self, period: usize) -> &[String] {
        &self.items[period]
    }

    pub fn unit_index(&self, id: &str) -> Option<usize> {
        self.units.iter().position(|u| u == id)
    }

    pub fn period_index(&self, id: &str) -> Option<usize> {
        self.periods.iter().position(|p| p == id)
    }

    /// Inclusive range of period indices the unit serves.
    pub fn service(&self, unit: usize) -> RangeInclusive<usize> {
        let (a, b) = self.service[unit];
        a..=b
    }

    pub fn service_len(&self, unit: usize) -> usize {
        let (a, b) = self.service[unit];
        b - a + 1
    }

    /// Row of the unit's path that corresponds to `period`, if served.
    pub fn slot(&self, unit: usize, period: usize) -> Option<usize> {
        let (a, b) = self.service[unit];
        (a..=b).contains(&period).then(|| period - a)
    }

    pub fn votes(&self) -> &[Vote] {
        &self.votes
    }

    /// Case indices belonging to one period.
    pub fn period_cases(&self, period: usize) -> std::ops::Range<usize> {
        self.case_start[period]..self.case_start[period + 1]
    }

    pub fn case_index(&self, period: usize, item: usize) -> usize {
        self.case_start[period] + item
    }

    /// (period, item) of a case.
    pub fn case_key(&self, case: usize) -> (usize, usize) {
        let period = self.case_start.partition_point(|&s| s <= case) - 1;
        (period, case - self.case_start[period])
    }

    pub fn case_votes(&self, case: usize) -> &[CaseVote] {
        &self.by_case[case]
    }

    pub fn unit_votes(&self, unit: usize) -> &[UnitVote] {
        &self.by_unit[unit]
    }

    /// Units serving a period.
    pub fn period_units(&self, period: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.units.len()).filter(move |&u| self.service(u).contains(&period))
    }

    /// Periods in which no item has two observed votes that differ.
    pub fn uninformative_periods(&self) -> Vec<usize> {
        (0..self.periods.len())
            .filter(|&p| {
                !self.period_cases(p).any(|c| {
                    let v = &self.by_case[c];
                    v.iter().any(|x| x.reverse) && v.iter().any(|x| !x.reverse)
                })
            })
            .collect()
    }

    /// The same design with a different observed vote on every existing key.
    pub fn with_vote_values(&self, mut value: impl FnMut(&Vote) -> bool) -> Result<Self> {
        let votes = self
            .votes
            .iter()
            .map(|v| Vote {
                reverse: value(v),
                ..*v
            })
            .collect();
        Self::from_parts(
            self.units.clone(),
            self.periods.clone(),
            self.items.clone(),
            self.service.clone(),
            votes,
        )
    }

    /// Rows that reproduce this dataset, including missing-vote rows that
    /// preserve service ranges and declare items without observed votes.
    pub fn to_records(&self) -> Vec<VoteRecord> {
        let mut rows: BTreeMap<(usize, usize, usize), Option<bool>> = BTreeMap::new();
        for v in &self.votes {
            rows.insert((v.period, v.item, v.unit), Some(v.reverse));
        }
        for u in 0..self.units.len() {
            for p in self.service(u) {
                let voted = self.by_unit[u]
                    .iter()
                    .any(|uv| self.case_key(uv.case).0 == p);
                if !voted {
                    rows.entry((p, 0, u)).or_insert(None);
                }
            }
        }
        for p in 0..self.periods.len() {
            for (i, c) in self.period_cases(p).enumerate() {
                if self.by_case[c].is_empty() {
                    let u = self.period_units(p).next().expect("every period has a serving unit");
                    rows.entry((p, i, u)).or_insert(None);
                }
            }
        }
        rows.into_iter()
            .map(|((p, i, u), vote)| VoteRecord {
                unit: self.units[u].clone(),
                period: self.periods[p].clone(),
                item: self.items[p][i].clone(),
                vote,
            })
            .collect()
    }
}

/// Reads a long-format votes table (`unit_id,period,item_id,vote`).
pub fn parse_votes(path: impl AsRef<Path>) -> Result<VoteDataset> {
    let text = std::fs::read_to_string(path.as_ref())?;
    parse_votes_str(&text)
}

pub fn parse_votes_str(text: &str) -> Result<VoteDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::NoRecords);
    }
    if headers.iter().collect::<Vec<_>>() != VOTES_HEADER {
        return Err(Error::MalformedRow {
            line: 1,
            message: format!("expected header {:?}, got {:?}", VOTES_HEADER.join(","), headers.iter().collect::<Vec<_>>().join(",")),
        });
    }

    let mut records = Vec::new();
    let mut keys: HashMap<(String, String, String), u64> = HashMap::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() == 1 && row[0].is_empty() {
            continue;
        }
        if row.len() != 4 {
            return Err(Error::MalformedRow {
                line,
                message: format!("expected 4 fields, found {}", row.len()),
            });
        }
        if row.iter().take(3).any(|f| f.is_empty()) {
            return Err(Error::MalformedRow {
                line,
                message: "empty identifier".into(),
            });
        }
        let vote = match &row[3] {
            "0" => Some(false),
            "1" => Some(true),
            "NA" => None,
            other => {
                return Err(Error::InvalidVote {
                    line,
                    value: other.to_string(),
                })
            }
        };
        let key = (row[0].to_string(), row[2].to_string(), row[1].to_string());
        if keys.insert(key.clone(), line).is_some() {
            return Err(Error::DuplicateVote {
                line,
                unit: key.0,
                item: key.1,
                period: key.2,
            });
        }
        records.push(VoteRecord {
            unit: key.0,
            period: key.2,
            item: key.1,
            vote,
        });
    }
    VoteDataset::from_records(&records)
}

/// Writes the dataset in the same long format [`parse_votes`] reads.
pub fn write_votes(dataset: &VoteDataset, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    w.write_record(VOTES_HEADER)?;
    for r in dataset.to_records() {
        let vote = match r.vote {
            Some(true) => "1",
            Some(false) => "0",
            None => "NA",
        };
        w.write_record([r.unit.as_str(), r.period.as_str(), r.item.as_str(), vote])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn three_rows_with_one_missing() {
        let ds = parse_votes_str("unit_id,period,item_id,vote\na,1,x,1\nb,1,x,0\nc,1,x,NA\n").unwrap();
        assert_eq!(ds.n_votes(), 2);
        assert_eq!(ds.n_units(), 3);
        assert_eq!(ds.service(2), 0..=0);
        assert!(ds.uninformative_periods().is_empty());
    }

    #[test]
    fn empty_file_has_no_records() {
        assert!(matches!(parse_votes_str(""), Err(Error::NoRecords)));
        assert!(matches!(parse_votes_str("unit_id,period,item_id,vote\n"), Err(Error::NoRecords)));
    }

    #[test]
    fn duplicate_key_is_rejected() {
        let err = parse_votes_str("unit_id,period,item_id,vote\na,1,x,1\na,1,x,0\n").unwrap_err();
        assert!(matches!(err, Error::DuplicateVote { line: 3, .. }), "{err}");
    }

    #[test]
    fn bad_vote_and_bad_row_report_lines() {
        let err = parse_votes_str("unit_id,period,item_id,vote\na,1,x,1\nb,1,x,2\n").unwrap_err();
        assert!(matches!(err, Error::InvalidVote { line: 3, .. }), "{err}");
        let err = parse_votes_str("unit_id,period,item_id,vote\na,1,x\n").unwrap_err();
        assert!(matches!(err, Error::MalformedRow { line: 2, .. }), "{err}");
        let err = parse_votes_str("who,when,what,vote\na,1,x,1\n").unwrap_err();
        assert!(matches!(err, Error::MalformedRow { line: 1, .. }), "{err}");
    }

    #[test]
    fn periods_sort_numerically_and_slots_follow_service() {
        let text = "unit_id,period,item_id,vote\na,10,x,1\na,9,y,0\nb,10,x,0\na,11,z,NA\n";
        let ds = parse_votes_str(text).unwrap();
        assert_eq!(ds.period_ids(), ["9", "10", "11"]);
        assert_eq!(ds.service(0), 0..=2);
        assert_eq!(ds.service(1), 1..=1);
        assert_eq!(ds.slot(0, 1), Some(1));
        assert_eq!(ds.slot(1, 0), None);
        assert_eq!(ds.n_cases(), 3);
        assert_eq!(ds.case_key(2), (2, 0));
        assert!(ds.case_votes(2).is_empty());
    }

    #[test]
    fn flags_uninformative_period() {
        let ds = parse_votes_str("unit_id,period,item_id,vote\na,1,x,1\nb,1,x,1\na,2,y,1\nb,2,y,0\n").unwrap();
        assert_eq!(ds.uninformative_periods(), vec![0]);
    }

    fn arb_records() -> impl Strategy<Value = Vec<VoteRecord>> {
        prop::collection::btree_map(
            (0u8..5, 0u8..4, 0u8..4),
            prop::option::weighted(0.8, any::<bool>()),
            1..40,
        )
        .prop_map(|m| {
            m.into_iter()
                .map(|((u, p, i), vote)| VoteRecord {
                    unit: format!("u{u}"),
                    period: format!("{}", 1990 + p as u32),
                    item: format!("c{i}"),
                    vote,
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn write_then_parse_is_identity(records in arb_records()) {
            let ds = VoteDataset::from_records(&records).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("votes.csv");
            write_votes(&ds, &path).unwrap();
            let back = parse_votes(&path).unwrap();
            prop_assert_eq!(back, ds);
        }
    }
}
