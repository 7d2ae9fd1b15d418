//! Per-step memory size records and their CSV form.
//!
//! CSV columns: `t, intersection_id, m_s, m_L, m_q, msize_dual, msize_q,
//! zeta_num, zeta_den, zeta_decimal`. An undefined ratio leaves the three
//! `zeta_*` cells empty.

use std::fmt::Display;
use std::io::{Read, Write};
use std::str::FromStr;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::memory::Step;
use crate::num::{rational_to_f64, Rational};

pub const CSV_HEADER: [&str; 10] = [
    "t",
    "intersection_id",
    "m_s",
    "m_L",
    "m_q",
    "msize_dual",
    "msize_q",
    "zeta_num",
    "zeta_den",
    "zeta_decimal",
];

/// Count type of a sample: `u64` for one memory, [`Rational`] for averages.
pub trait Count: Clone + PartialEq + Display + FromStr + std::fmt::Debug {
    fn to_rational(&self) -> Rational;
}

impl Count for u64 {
    fn to_rational(&self) -> Rational {
        Rational::from_integer(*self as i64)
    }
}

impl Count for Rational {
    fn to_rational(&self) -> Rational {
        *self
    }
}

/// Memory sizes at one time step.
#[derive(Clone, Debug, PartialEq)]
pub struct SizeSample<C = u64> {
    pub t: Step,
    pub m_s: C,
    pub m_l: C,
    pub m_q: C,
    pub msize_dual: C,
    pub msize_q: C,
}

impl SizeSample<u64> {
    pub fn from_counts(t: Step, action_count: usize, m_s: usize, m_l: usize, m_q: usize) -> Self {
        let a = action_count as u64;
        SizeSample {
            t,
            m_s: m_s as u64,
            m_l: m_l as u64,
            m_q: m_q as u64,
            msize_dual: 3 * m_l as u64 + a * m_s as u64,
            msize_q: a * m_q as u64,
        }
    }
}

impl<C: Count> SizeSample<C> {
    /// `msize_q / msize_dual`, undefined when the dual memory is empty.
    pub fn zeta(&self) -> Option<Rational> {
        let d = self.msize_dual.to_rational();
        if d.is_zero() {
            None
        } else {
            Some(self.msize_q.to_rational() / d)
        }
    }
}

/// Element-wise mean over equally long series.
pub fn mean_series(series: &[Vec<SizeSample>]) -> Vec<SizeSample<Rational>> {
    let Some(first) = series.first() else {
        return Vec::new();
    };
    let k = series.len() as i64;
    let avg = |f: &dyn Fn(&SizeSample) -> u64, i: usize| Rational::new(series.iter().map(|s| f(&s[i]) as i64).sum(), k);
    (0..first.len())
        .map(|i| SizeSample {
            t: first[i].t,
            m_s: avg(&|s| s.m_s, i),
            m_l: avg(&|s| s.m_l, i),
            m_q: avg(&|s| s.m_q, i),
            msize_dual: avg(&|s| s.msize_dual, i),
            msize_q: avg(&|s| s.msize_q, i),
        })
        .collect()
}

/// Writes `samples` under the shared header.
pub fn write_csv<C: Count, W: Write>(w: W, intersection_id: &str, samples: &[SizeSample<C>]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    for s in samples {
        let (num, den, dec) = match s.zeta() {
            Some(z) => (
                z.numer().to_string(),
                z.denom().to_string(),
                format!("{:.6}", rational_to_f64(z)),
            ),
            None => (String::new(), String::new(), String::new()),
        };
        out.write_record([
            s.t.to_string(),
            intersection_id.to_string(),
            s.m_s.to_string(),
            s.m_l.to_string(),
            s.m_q.to_string(),
            s.msize_dual.to_string(),
            s.msize_q.to_string(),
            num,
            den,
            dec,
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// A parsed CSV series.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesFile<C = u64> {
    pub intersection_id: String,
    pub samples: Vec<SizeSample<C>>,
}

/// Reads a series back, checking the header and the stored ratio columns.
pub fn read_csv<C: Count, R: Read>(r: R) -> Result<SeriesFile<C>> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers()?.clone();
    for (i, expected) in CSV_HEADER.iter().enumerate() {
        match headers.get(i) {
            Some(h) if h == *expected => {}
            Some(h) => {
                return Err(Error::Schema {
                    column: h.to_string(),
                    reason: format!("expected `{expected}` at position {i}"),
                })
            }
            None => {
                return Err(Error::Schema {
                    column: expected.to_string(),
                    reason: "missing".into(),
                })
            }
        }
    }
    if let Some(extra) = headers.get(CSV_HEADER.len()) {
        return Err(Error::Schema {
            column: extra.to_string(),
            reason: "unexpected column".into(),
        });
    }
    let mut id = None;
    let mut samples = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let cell = |i: usize| record.get(i).unwrap_or("");
        fn parse<T: FromStr>(col: usize, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::Schema {
                column: CSV_HEADER[col].to_string(),
                reason: format!("cannot parse `{v}`"),
            })
        }
        let sample = SizeSample {
            t: parse(0, cell(0))?,
            m_s: parse::<C>(2, cell(2))?,
            m_l: parse::<C>(3, cell(3))?,
            m_q: parse::<C>(4, cell(4))?,
            msize_dual: parse::<C>(5, cell(5))?,
            msize_q: parse::<C>(6, cell(6))?,
        };
        let stored = if cell(7).is_empty() {
            None
        } else {
            Some(Rational::new(parse(7, cell(7))?, parse(8, cell(8))?))
        };
        if stored != sample.zeta() {
            return Err(Error::Schema {
                column: "zeta_num".into(),
                reason: format!("ratio at t={} disagrees with the size columns", sample.t),
            });
        }
        id.get_or_insert_with(|| cell(1).to_string());
        samples.push(sample);
    }
    if samples.is_empty() {
        return Err(Error::Schema {
            column: "t".into(),
            reason: "no rows".into(),
        });
    }
    Ok(SeriesFile {
        intersection_id: id.unwrap_or_default(),
        samples,
    })
}
