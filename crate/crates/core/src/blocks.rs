//! Block maxima, their order statistics and the tail empirical distribution function.

use std::io::BufRead;

use crate::error::{EvtError, Result};

/// A finite raw sample `X_1, ..., X_n`, in observation order.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSample {
    values: Vec<f64>,
}

impl RawSample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(EvtError::InsufficientData { needed: 1, got: 0 });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(EvtError::Data(format!(
                "non-finite value {} at position {pos}",
                values[pos]
            )));
        }
        Ok(Self { values })
    }

    /// Parses newline-delimited numbers or a single-column CSV.
    ///
    /// Blank lines and lines starting with `#` are ignored. When `header` is
    /// set the first non-blank line is skipped. A trailing `,` field or
    /// surrounding quotes are tolerated; more than one non-empty column is not.
    pub fn from_reader<R: BufRead>(reader: R, header: bool) -> Result<Self> {
        let mut values = Vec::new();
        let mut skip_header = header;
        for (lineno, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| EvtError::Data(format!("read failed: {e}")))?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if skip_header {
                skip_header = false;
                continue;
            }
            let mut fields = trimmed.split(',').map(str::trim).filter(|f| !f.is_empty());
            let field = fields.next().unwrap_or("");
            if fields.next().is_some() {
                return Err(EvtError::Data(format!(
                    "line {}: expected a single column, got `{trimmed}`",
                    lineno + 1
                )));
            }
            let field = field.trim_matches('"');
            let value: f64 = field.parse().map_err(|_| {
                EvtError::Data(format!("line {}: `{field}` is not a number", lineno + 1))
            })?;
            values.push(value);
        }
        Self::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Maxima of the `k = floor(n / m)` complete blocks, sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMaximaSample {
    sorted_maxima: Vec<f64>,
    m: usize,
    n_source: usize,
}

impl BlockMaximaSample {
    /// Wraps already-computed maxima (any order); `n_source` defaults to `k * m`.
    pub fn from_maxima(mut maxima: Vec<f64>, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(EvtError::Domain("block size must be at least 1".into()));
        }
        if maxima.is_empty() {
            return Err(EvtError::InsufficientData { needed: 1, got: 0 });
        }
        if maxima.iter().any(|v| !v.is_finite()) {
            return Err(EvtError::Data("block maxima must be finite".into()));
        }
        maxima.sort_by(f64::total_cmp);
        let n_source = maxima.len() * m;
        Ok(Self {
            sorted_maxima: maxima,
            m,
            n_source,
        })
    }

    pub fn sorted_maxima(&self) -> &[f64] {
        &self.sorted_maxima
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n_source(&self) -> usize {
        self.n_source
    }

    pub fn k(&self) -> usize {
        self.sorted_maxima.len()
    }

    /// `M_{k-i:k}`, the `(i+1)`-th largest block maximum.
    pub fn upper_order_statistic(&self, i: usize) -> Result<f64> {
        let k = self.k();
        if i >= k {
            return Err(EvtError::Index { index: i, len: k });
        }
        Ok(self.sorted_maxima[k - 1 - i])
    }

    /// Fraction of block maxima strictly greater than `x`.
    pub fn tail_empirical_df(&self, x: f64) -> f64 {
        let at_or_below = self.sorted_maxima.partition_point(|&v| v <= x);
        (self.k() - at_or_below) as f64 / self.k() as f64
    }
}

/// Maxima of consecutive blocks `(i-1)m+1 ..= im`, in block order.
///
/// A trailing partial block is dropped.
pub fn block_maxima_unsorted(data: &[f64], m: usize) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(EvtError::Domain("block size must be at least 1".into()));
    }
    if data.len() < m {
        return Err(EvtError::InsufficientData {
            needed: m,
            got: data.len(),
        });
    }
    Ok(data
        .chunks_exact(m)
        .map(|block| block.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect())
}

pub fn block_maxima(data: &RawSample, m: usize) -> Result<BlockMaximaSample> {
    let mut maxima = block_maxima_unsorted(data.values(), m)?;
    maxima.sort_by(f64::total_cmp);
    Ok(BlockMaximaSample {
        sorted_maxima: maxima,
        m,
        n_source: data.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn raw(v: &[f64]) -> RawSample {
        RawSample::new(v.to_vec()).unwrap()
    }

    fn sorted(mut v: Vec<f64>) -> Vec<f64> {
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn two_blocks_of_four() {
        let b = block_maxima(&raw(&[3., 1., 4., 1., 5., 9., 2., 6.]), 4).unwrap();
        assert_eq!(b.sorted_maxima(), &[4., 9.]);
        assert_eq!((b.k(), b.m(), b.n_source()), (2, 4, 8));
    }

    #[test]
    fn trailing_partial_block_dropped() {
        let b = block_maxima(&raw(&[3., 1., 4., 1., 5., 9., 2.]), 3).unwrap();
        assert_eq!(b.sorted_maxima(), &[4., 9.]);
        assert_eq!(b.n_source(), 7);
    }

    #[test]
    fn unit_blocks_sort_the_data() {
        let data = [2.5, -1.0, 7.0, 0.0];
        let b = block_maxima(&raw(&data), 1).unwrap();
        assert_eq!(b.sorted_maxima(), sorted(data.to_vec()).as_slice());
        assert_eq!(b.k(), 4);
    }

    #[test]
    fn block_size_errors() {
        let data = raw(&[1., 2., 3.]);
        assert!(matches!(block_maxima(&data, 0), Err(EvtError::Domain(_))));
        assert!(matches!(
            block_maxima(&data, 4),
            Err(EvtError::InsufficientData { needed: 4, got: 3 })
        ));
    }

    #[test]
    fn raw_sample_rejects_non_finite() {
        assert!(RawSample::new(vec![1.0, f64::NAN]).is_err());
        assert!(RawSample::new(vec![]).is_err());
    }

    #[test]
    fn order_statistics() {
        let b = BlockMaximaSample::from_maxima(vec![8., 2., 4., 1.], 1).unwrap();
        assert_eq!(b.upper_order_statistic(0).unwrap(), 8.);
        assert_eq!(b.upper_order_statistic(2).unwrap(), 2.);
        assert!(matches!(
            b.upper_order_statistic(4),
            Err(EvtError::Index { index: 4, len: 4 })
        ));
        let single = BlockMaximaSample::from_maxima(vec![5.], 3).unwrap();
        assert_eq!(single.upper_order_statistic(0).unwrap(), 5.);
    }

    #[test]
    fn tail_edf() {
        let b = BlockMaximaSample::from_maxima(vec![1., 2., 4., 8.], 1).unwrap();
        assert_eq!(b.tail_empirical_df(3.0), 0.5);
        assert_eq!(b.tail_empirical_df(0.0), 1.0);
        assert_eq!(b.tail_empirical_df(8.0), 0.0);
        assert_eq!(b.tail_empirical_df(4.0), 0.25);
    }

    #[test]
    fn parse_text_and_csv() {
        let text = "1.5\n\n2\n# comment\n-3e2\n";
        let s = RawSample::from_reader(text.as_bytes(), false).unwrap();
        assert_eq!(s.values(), &[1.5, 2.0, -300.0]);
        let csv = "value\n\"4\"\n5,\n";
        let s = RawSample::from_reader(csv.as_bytes(), true).unwrap();
        assert_eq!(s.values(), &[4.0, 5.0]);
        assert!(matches!(
            RawSample::from_reader("value\n1\n".as_bytes(), false),
            Err(EvtError::Data(_))
        ));
        assert!(RawSample::from_reader("1,2\n".as_bytes(), false).is_err());
    }

    proptest! {
        #[test]
        fn unit_blocks_preserve_multiset(data in prop::collection::vec(-1e6f64..1e6, 1..200)) {
            let b = block_maxima(&raw(&data), 1).unwrap();
            prop_assert_eq!(b.sorted_maxima().to_vec(), sorted(data));
        }

        #[test]
        fn blocking_composes(
            data in prop::collection::vec(-1e3f64..1e3, 1..40),
            a in 1usize..5,
            b in 1usize..5,
        ) {
            // Make n divisible by a*b.
            let mut data = data;
            let n = (data.len() / (a * b)).max(1) * a * b;
            data.resize(n, 0.5);
            let inner = block_maxima_unsorted(&data, a).unwrap();
            let nested = block_maxima_unsorted(&inner, b).unwrap();
            let direct = block_maxima_unsorted(&data, a * b).unwrap();
            prop_assert_eq!(sorted(nested), sorted(direct));
        }

        #[test]
        fn tail_edf_is_nonincreasing_on_grid(
            data in prop::collection::vec(-100f64..100., 1..60),
            xs in prop::collection::vec(-120f64..120., 2..20),
        ) {
            let b = block_maxima(&raw(&data), 1).unwrap();
            let xs = sorted(xs);
            let k = b.k() as f64;
            let vals: Vec<f64> = xs.iter().map(|&x| b.tail_empirical_df(x)).collect();
            for w in vals.windows(2) {
                prop_assert!(w[1] <= w[0]);
            }
            for v in vals {
                prop_assert!((v * k - (v * k).round()).abs() < 1e-9);
            }
        }
    }
}
