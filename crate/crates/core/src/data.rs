//! Price ingestion, log returns, temporal aggregation, pair alignment and
//! estimation/holdout splitting.
//!
//! Returns are decimal fractions throughout; percentages only appear in
//! rendered reports.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::Path;

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Cash,
    Futures,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::Cash => f.write_str("cash"),
            Role::Futures => f.write_str("futures"),
        }
    }
}

/// Dated positive price levels, strictly increasing in date.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    dates: Vec<NaiveDate>,
    prices: Vec<f64>,
    pub label: String,
    pub role: Role,
}

impl PriceSeries {
    /// Builds a series from unordered observations, sorting by date.
    pub fn new(
        label: impl Into<String>,
        role: Role,
        mut rows: Vec<(NaiveDate, f64)>,
    ) -> Result<Self> {
        for (i, &(_, p)) in rows.iter().enumerate() {
            if !(p > 0.0) || !p.is_finite() {
                return Err(Error::NonPositivePrice { row: i + 1, price: p });
            }
        }
        rows.sort_by_key(|&(d, _)| d);
        if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicateDate(w[0].0));
        }
        let (dates, prices) = rows.into_iter().unzip();
        Ok(Self {
            dates,
            prices,
            label: label.into(),
            role,
        })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }
}

/// Log returns at a frequency of `frequency_h` base periods per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    dates: Vec<NaiveDate>,
    returns: Vec<f64>,
    frequency_h: usize,
    pub label: String,
}

impl ReturnSeries {
    pub fn new(
        label: impl Into<String>,
        dates: Vec<NaiveDate>,
        returns: Vec<f64>,
        frequency_h: usize,
    ) -> Result<Self> {
        if dates.len() != returns.len() {
            return Err(Error::DateMismatch(format!(
                "{} dates for {} returns",
                dates.len(),
                returns.len()
            )));
        }
        if frequency_h == 0 {
            return Err(Error::Config("frequency_h must be >= 1".into()));
        }
        if let Some(w) = dates.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::DuplicateDate(w[1]));
        }
        Ok(Self {
            dates,
            returns,
            frequency_h,
            label: label.into(),
        })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn returns(&self) -> &[f64] {
        &self.returns
    }

    pub fn frequency_h(&self) -> usize {
        self.frequency_h
    }

    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }

    fn subset(&self, range: std::ops::Range<usize>) -> Self {
        Self {
            dates: self.dates[range.clone()].to_vec(),
            returns: self.returns[range].to_vec(),
            frequency_h: self.frequency_h,
            label: self.label.clone(),
        }
    }
}

/// Cash and futures returns on an identical date grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPair {
    cash: ReturnSeries,
    futures: ReturnSeries,
}

impl AlignedPair {
    /// Pairs two legs that already share dates and frequency.
    pub fn new(cash: ReturnSeries, futures: ReturnSeries) -> Result<Self> {
        if cash.frequency_h != futures.frequency_h {
            return Err(Error::FrequencyMismatch(
                cash.frequency_h,
                futures.frequency_h,
            ));
        }
        if cash.dates != futures.dates {
            return Err(Error::DateMismatch(
                "cash and futures legs have different dates".into(),
            ));
        }
        Ok(Self { cash, futures })
    }

    pub fn cash(&self) -> &ReturnSeries {
        &self.cash
    }

    pub fn futures(&self) -> &ReturnSeries {
        &self.futures
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.cash.dates
    }

    pub fn frequency_h(&self) -> usize {
        self.cash.frequency_h
    }

    pub fn len(&self) -> usize {
        self.cash.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cash.is_empty()
    }

    /// Legs swapped (futures becomes cash).
    pub fn swapped(&self) -> Self {
        Self {
            cash: self.futures.clone(),
            futures: self.cash.clone(),
        }
    }

    /// Aggregates both legs to `h` base periods with the same block grid.
    pub fn aggregate(&self, h: usize) -> Result<Self> {
        Ok(Self {
            cash: aggregate(&self.cash, h)?,
            futures: aggregate(&self.futures, h)?,
        })
    }

    /// Observations with dates in `[from, to]`.
    pub fn between(&self, from: NaiveDate, to: NaiveDate) -> Self {
        let lo = self.dates().partition_point(|d| *d < from);
        let hi = self.dates().partition_point(|d| *d <= to);
        let hi = hi.max(lo);
        Self {
            cash: self.cash.subset(lo..hi),
            futures: self.futures.subset(lo..hi),
        }
    }

    /// Appends `later`, whose dates must all follow this pair's dates.
    pub fn concat(&self, later: &AlignedPair) -> Result<Self> {
        if self.frequency_h() != later.frequency_h() {
            return Err(Error::FrequencyMismatch(
                self.frequency_h(),
                later.frequency_h(),
            ));
        }
        if let (Some(a), Some(b)) = (self.dates().last(), later.dates().first()) {
            if a >= b {
                return Err(Error::DateMismatch(format!(
                    "cannot append {b} after {a}"
                )));
            }
        }
        let join = |x: &ReturnSeries, y: &ReturnSeries| ReturnSeries {
            dates: x.dates.iter().chain(&y.dates).copied().collect(),
            returns: x.returns.iter().chain(&y.returns).copied().collect(),
            frequency_h: x.frequency_h,
            label: x.label.clone(),
        };
        Ok(Self {
            cash: join(&self.cash, &later.cash),
            futures: join(&self.futures, &later.futures),
        })
    }
}

/// Estimation and holdout samples of one aligned pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSplit {
    pub estimation: AlignedPair,
    pub holdout: AlignedPair,
    pub split_date: NaiveDate,
}

impl SampleSplit {
    /// The full pair (estimation followed by holdout).
    pub fn full(&self) -> AlignedPair {
        self.estimation
            .concat(&self.holdout)
            .expect("split halves are ordered by construction")
    }
}

#[derive(Debug, Deserialize)]
struct PriceRow {
    date: String,
    price: String,
}

/// Reads a `date,price` CSV (ISO-8601 dates, header row).
pub fn load_prices(path: impl AsRef<Path>, label: &str, role: Role) -> Result<PriceSeries> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::ParseError {
            row: 0,
            message: e.to_string(),
        })?;
    let mut rows = Vec::new();
    for (i, rec) in reader.deserialize::<PriceRow>().enumerate() {
        // header is line 1
        let row = i + 2;
        let rec = rec.map_err(|e| Error::ParseError {
            row,
            message: e.to_string(),
        })?;
        let date = NaiveDate::parse_from_str(&rec.date, "%Y-%m-%d").map_err(|e| {
            Error::ParseError {
                row,
                message: format!("date {:?}: {e}", rec.date),
            }
        })?;
        let price: f64 = rec.price.parse().map_err(|e| Error::ParseError {
            row,
            message: format!("price {:?}: {e}", rec.price),
        })?;
        if !(price > 0.0) || !price.is_finite() {
            return Err(Error::NonPositivePrice { row, price });
        }
        rows.push((date, price));
    }
    PriceSeries::new(label, role, rows)
}

/// Writes a series in the format read by [`load_prices`].
pub fn write_prices(path: impl AsRef<Path>, series: &PriceSeries) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::with_capacity(series.len() * 24);
    out.push_str("date,price\n");
    for (d, p) in series.dates.iter().zip(&series.prices) {
        out.push_str(&format!("{},{}\n", d.format("%Y-%m-%d"), p));
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Differenced log prices; the first date is dropped.
pub fn log_returns(p: &PriceSeries) -> Result<ReturnSeries> {
    if p.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: p.len(),
        });
    }
    let returns = p
        .prices
        .windows(2)
        .map(|w| w[1].ln() - w[0].ln())
        .collect();
    Ok(ReturnSeries {
        dates: p.dates[1..].to_vec(),
        returns,
        frequency_h: 1,
        label: p.label.clone(),
    })
}

/// Sums non-overlapping blocks of `h` base returns.
///
/// Blocks are anchored at the last observation, so any partial block is the
/// leading one and is discarded. Each output is dated at its block's final
/// date.
pub fn aggregate(r: &ReturnSeries, h: usize) -> Result<ReturnSeries> {
    if h == 0 {
        return Err(Error::Config("aggregation horizon must be >= 1".into()));
    }
    if r.frequency_h != 1 {
        return Err(Error::FrequencyMismatch(1, r.frequency_h));
    }
    if h == 1 {
        return Ok(r.clone());
    }
    let n = r.len();
    if n < h {
        return Err(Error::TooShort { needed: h, got: n });
    }
    let skip = n % h;
    let blocks = n / h;
    let mut dates = Vec::with_capacity(blocks);
    let mut returns = Vec::with_capacity(blocks);
    for k in 0..blocks {
        let start = skip + k * h;
        let end = start + h;
        returns.push(r.returns[start..end].iter().sum());
        dates.push(r.dates[end - 1]);
    }
    Ok(ReturnSeries {
        dates,
        returns,
        frequency_h: h,
        label: r.label.clone(),
    })
}

/// Block sums of a plain slice with the same anchoring as [`aggregate`];
/// `h = 0` yields nothing.
pub fn aggregate_slice(r: &[f64], h: usize) -> Vec<f64> {
    if h == 0 {
        return Vec::new();
    }
    r[r.len() % h..].chunks_exact(h).map(|b| b.iter().sum()).collect()
}

/// Number of leading base returns [`aggregate`] discards.
pub fn leading_discard(n: usize, h: usize) -> usize {
    if h == 0 {
        0
    } else {
        n % h
    }
}

/// Restricts both legs to their common dates.
pub fn align(cash: &ReturnSeries, fut: &ReturnSeries) -> Result<AlignedPair> {
    if cash.frequency_h != fut.frequency_h {
        return Err(Error::FrequencyMismatch(cash.frequency_h, fut.frequency_h));
    }
    let fut_index: BTreeMap<NaiveDate, f64> =
        fut.dates.iter().copied().zip(fut.returns.iter().copied()).collect();
    let mut dates = Vec::new();
    let mut rc = Vec::new();
    let mut rf = Vec::new();
    for (d, &c) in cash.dates.iter().zip(&cash.returns) {
        if let Some(&f) = fut_index.get(d) {
            dates.push(*d);
            rc.push(c);
            rf.push(f);
        }
    }
    if dates.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    Ok(AlignedPair {
        cash: ReturnSeries {
            dates: dates.clone(),
            returns: rc,
            frequency_h: cash.frequency_h,
            label: cash.label.clone(),
        },
        futures: ReturnSeries {
            dates,
            returns: rf,
            frequency_h: fut.frequency_h,
            label: fut.label.clone(),
        },
    })
}

/// Aligns two price series and takes log returns on the common calendar.
///
/// Intersecting prices first keeps each return spanning the same interval on
/// both legs.
pub fn align_prices(cash: &PriceSeries, fut: &PriceSeries) -> Result<AlignedPair> {
    let fut_index: BTreeMap<NaiveDate, f64> =
        fut.dates.iter().copied().zip(fut.prices.iter().copied()).collect();
    let mut c_rows = Vec::new();
    let mut f_rows = Vec::new();
    for (d, &c) in cash.dates.iter().zip(&cash.prices) {
        if let Some(&f) = fut_index.get(d) {
            c_rows.push((*d, c));
            f_rows.push((*d, f));
        }
    }
    if c_rows.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let c = PriceSeries::new(cash.label.clone(), Role::Cash, c_rows)?;
    let f = PriceSeries::new(fut.label.clone(), Role::Futures, f_rows)?;
    AlignedPair::new(log_returns(&c)?, log_returns(&f)?)
}

/// Splits at `split_date`: estimation is `<= split_date`, holdout after.
pub fn split(pair: &AlignedPair, split_date: NaiveDate) -> Result<SampleSplit> {
    let (first, last) = match (pair.dates().first(), pair.dates().last()) {
        (Some(f), Some(l)) => (*f, *l),
        _ => {
            return Err(Error::TooShort { needed: 1, got: 0 });
        }
    };
    if split_date < first || split_date > last {
        return Err(Error::SplitOutOfRange {
            split: split_date,
            first,
            last,
        });
    }
    let k = pair.dates().partition_point(|d| *d <= split_date);
    let n = pair.len();
    if k == n {
        log::warn!("split at {split_date} leaves an empty holdout sample");
    }
    Ok(SampleSplit {
        estimation: AlignedPair {
            cash: pair.cash.subset(0..k),
            futures: pair.futures.subset(0..k),
        },
        holdout: AlignedPair {
            cash: pair.cash.subset(k..n),
            futures: pair.futures.subset(k..n),
        },
        split_date,
    })
}

/// `n` consecutive weekdays starting at `start` (rolled forward to a weekday).
pub fn business_days(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d.succ_opt().expect("date overflow");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn series(prices: &[f64]) -> PriceSeries {
        let dates = business_days(d("2000-01-03"), prices.len());
        PriceSeries::new("x", Role::Cash, dates.into_iter().zip(prices.iter().copied()).collect())
            .unwrap()
    }

    fn rets(values: &[f64]) -> ReturnSeries {
        ReturnSeries::new(
            "r",
            business_days(d("2000-01-03"), values.len()),
            values.to_vec(),
            1,
        )
        .unwrap()
    }

    #[test]
    fn price_series_sorts_and_rejects() {
        let p = PriceSeries::new(
            "x",
            Role::Cash,
            vec![(d("2000-01-05"), 99.0), (d("2000-01-03"), 100.0), (d("2000-01-04"), 101.0)],
        )
        .unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p.prices(), &[100.0, 101.0, 99.0]);

        let zero = PriceSeries::new("x", Role::Cash, vec![(d("2000-01-03"), 0.0)]);
        assert!(matches!(zero, Err(Error::NonPositivePrice { .. })));

        let dup = PriceSeries::new(
            "x",
            Role::Cash,
            vec![(d("2000-01-03"), 1.0), (d("2000-01-03"), 2.0)],
        );
        assert!(matches!(dup, Err(Error::DuplicateDate(_))));
    }

    #[test]
    fn log_return_examples() {
        assert_eq!(log_returns(&series(&[100.0, 100.0])).unwrap().returns(), &[0.0]);
        // ln(1.1) and ln(0.9) to 16 digits
        let up = log_returns(&series(&[100.0, 110.0])).unwrap().returns()[0];
        assert!((up - 0.095_310_179_804_324_86).abs() < 1e-14);
        let down = log_returns(&series(&[100.0, 90.0])).unwrap().returns()[0];
        assert!((down + 0.105_360_515_657_826_3).abs() < 1e-14);
        assert!(matches!(
            log_returns(&series(&[100.0])),
            Err(Error::TooShort { .. })
        ));
    }

    #[test]
    fn log_returns_drop_first_date() {
        let p = series(&[100.0, 101.0, 102.0]);
        let r = log_returns(&p).unwrap();
        assert_eq!(r.dates(), &p.dates()[1..]);
        assert_eq!(r.frequency_h(), 1);
    }

    #[test]
    fn aggregate_examples() {
        let r = rets(&[0.1, 0.2, 0.3, 0.4, 0.5]);
        assert_eq!(aggregate(&r, 1).unwrap(), r);
        let a = aggregate(&r, 5).unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(a.returns()[0], 0.1 + 0.2 + 0.3 + 0.4 + 0.5);
        assert_eq!(a.dates()[0], r.dates()[4]);
        assert_eq!(a.frequency_h(), 5);

        let long = rets(&vec![0.001; 2601]);
        assert_eq!(aggregate(&long, 5).unwrap().len(), 520);
        assert_eq!(aggregate(&long, 20).unwrap().len(), 130);
        assert!(matches!(aggregate(&r, 6), Err(Error::TooShort { .. })));
    }

    #[test]
    fn aggregate_discards_leading_partial_block() {
        let r = rets(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        let a = aggregate(&r, 3).unwrap();
        assert_eq!(a.returns(), &[2.0 + 3.0 + 4.0, 5.0 + 6.0 + 7.0]);
        assert_eq!(a.dates().last(), r.dates().last());
        assert_eq!(leading_discard(7, 3), 1);
    }

    #[test]
    fn align_examples() {
        let a = rets(&[1.0, 2.0, 3.0]);
        let pair = align(&a, &a).unwrap();
        assert_eq!(pair.cash(), &a);
        assert_eq!(pair.futures(), &a);

        let b = rets(&[1.0, 2.0, 3.0, 4.0]);
        let pair = align(&a, &b).unwrap();
        assert_eq!(pair.len(), 3);

        let later = ReturnSeries::new("z", vec![d("2010-01-04")], vec![1.0], 1).unwrap();
        assert!(matches!(align(&a, &later), Err(Error::EmptyIntersection)));
    }

    #[test]
    fn split_examples() {
        let a = rets(&(0..30).map(|i| i as f64).collect::<Vec<_>>());
        let pair = align(&a, &a).unwrap();
        let last = *pair.dates().last().unwrap();
        let s = split(&pair, last).unwrap();
        assert!(s.holdout.is_empty());
        assert_eq!(s.estimation.len(), 30);

        let before = pair.dates()[0].pred_opt().unwrap();
        assert!(matches!(split(&pair, before), Err(Error::SplitOutOfRange { .. })));
    }

    #[test]
    fn split_fifteen_years_at_year_ten() {
        let n = 15 * 261;
        let a = rets(&vec![0.0; n]);
        let pair = align(&a, &a).unwrap();
        let start = pair.dates()[0];
        let split_date = start.with_year(start.year() + 10).unwrap();
        let s = split(&pair, split_date).unwrap();
        // Count the weekdays in the first ten years directly.
        let expected = pair.dates().iter().filter(|x| **x <= split_date).count();
        assert_eq!(s.estimation.len(), expected);
        let frac = s.estimation.len() as f64 / n as f64;
        assert!((frac - 2.0 / 3.0).abs() < 0.01, "{frac}");
        assert!(s.estimation.dates().iter().all(|x| *x <= split_date));
        assert!(s.holdout.dates().iter().all(|x| *x > split_date));
        assert_eq!(s.full(), pair);
    }

    #[test]
    fn load_rejects_missing_and_bad_rows() {
        let dir = tempfile::tempdir().unwrap();
        let missing = load_prices(dir.path().join("nope.csv"), "x", Role::Cash);
        assert!(matches!(missing, Err(Error::MissingFile(_))));

        let p = dir.path().join("bad.csv");
        std::fs::write(&p, "date,price\n2000-01-03,100\n2000-13-01,101\n").unwrap();
        assert!(matches!(
            load_prices(&p, "x", Role::Cash),
            Err(Error::ParseError { row: 3, .. })
        ));

        std::fs::write(&p, "date,price\n2000-01-03,100\n2000-01-04,0\n").unwrap();
        assert!(matches!(
            load_prices(&p, "x", Role::Cash),
            Err(Error::NonPositivePrice { row: 3, .. })
        ));

        std::fs::write(&p, "date,price\n2000-01-05,99\n2000-01-03,100\n2000-01-04,101\n")
            .unwrap();
        let s = load_prices(&p, "x", Role::Cash).unwrap();
        assert_eq!(s.prices(), &[100.0, 101.0, 99.0]);
    }

    #[test]
    fn write_then_load_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("p.csv");
        let s = series(&[100.0, 100.123456789012345, 0.1 + 0.2, 1e-7]);
        write_prices(&p, &s).unwrap();
        let back = load_prices(&p, "x", Role::Cash).unwrap();
        assert_eq!(back.prices(), s.prices());
        assert_eq!(back.dates(), s.dates());
    }

    proptest! {
        #[test]
        fn aggregate_is_block_log_difference(
            prices in prop::collection::vec(1.0f64..1000.0, 2..200),
            h in 1usize..25,
        ) {
            let p = series(&prices);
            let r = log_returns(&p).unwrap();
            prop_assume!(r.len() >= h);
            let a = aggregate(&r, h).unwrap();
            let skip = leading_discard(r.len(), h);
            for (k, v) in a.returns().iter().enumerate() {
                let lo = skip + k * h;
                let expected = prices[lo + h].ln() - prices[lo].ln();
                prop_assert!((v - expected).abs() < 1e-9);
            }
            let consumed: f64 = r.returns()[skip..].iter().sum();
            let total: f64 = a.returns().iter().sum();
            prop_assert!((consumed - total).abs() < 1e-9);
        }

        #[test]
        fn align_is_idempotent_and_symmetric(
            mask_a in prop::collection::vec(any::<bool>(), 40),
            mask_b in prop::collection::vec(any::<bool>(), 40),
        ) {
            let all = business_days(d("2001-01-01"), 40);
            let pick = |mask: &[bool]| {
                let (ds, rs): (Vec<_>, Vec<_>) = all
                    .iter()
                    .zip(mask)
                    .enumerate()
                    .filter(|(_, (_, keep))| **keep)
                    .map(|(i, (dt, _))| (*dt, i as f64))
                    .unzip();
                ReturnSeries::new("s", ds, rs, 1).unwrap()
            };
            let (a, b) = (pick(&mask_a), pick(&mask_b));
            match (align(&a, &b), align(&b, &a)) {
                (Ok(ab), Ok(ba)) => {
                    prop_assert_eq!(ab.dates(), ba.dates());
                    let again = align(ab.cash(), ab.futures()).unwrap();
                    prop_assert_eq!(again, ab);
                }
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "asymmetric failure"),
            }
        }
    }
}
