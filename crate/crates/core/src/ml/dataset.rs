use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::recompose::Permutation;

/// `x[i]` is the 1-based original index of the module at position `i`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FeatureRow {
    pub x: Vec<u32>,
    pub label: bool,
}

impl FeatureRow {
    pub fn new(x: Vec<u32>, label: bool) -> Result<Self> {
        let n = x.len();
        let mut seen = vec![false; n + 1];
        for &v in &x {
            let v = v as usize;
            if v == 0 || v > n || std::mem::replace(&mut seen[v], true) {
                return Err(Error::Permutation(format!("{x:?} is not a permutation of 1..={n}")));
            }
        }
        Ok(Self { x, label })
    }

    pub fn from_permutation(p: &Permutation, label: bool) -> Self {
        Self {
            x: p.as_slice().iter().map(|&i| i as u32 + 1).collect(),
            label,
        }
    }
}

/// Checks that every row has `n` features.
pub(crate) fn dimension(rows: &[FeatureRow]) -> Result<usize> {
    let n = rows.first().ok_or(Error::Empty("training rows"))?.x.len();
    if let Some(r) = rows.iter().find(|r| r.x.len() != n) {
        return Err(Error::Dimension {
            expected: n,
            got: r.x.len(),
        });
    }
    Ok(n)
}

/// Writes rows as CSV with columns `pos_1..pos_N,label`.
pub fn write_rows_csv<W: Write>(rows: &[FeatureRow], out: W) -> Result<()> {
    let n = dimension(rows)?;
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=n).map(|i| format!("pos_{i}")).collect();
    header.push("label".into());
    w.write_record(&header).map_err(csv_err)?;
    for r in rows {
        let mut rec: Vec<String> = r.x.iter().map(u32::to_string).collect();
        rec.push(u8::from(r.label).to_string());
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Param(e.to_string()))?;
    Ok(())
}

/// Reads rows written by [`write_rows_csv`].
pub fn read_rows_csv<R: Read>(input: R) -> Result<Vec<FeatureRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    let n = header.len().saturating_sub(1);
    let expected: Vec<String> = (1..=n).map(|i| format!("pos_{i}")).chain(["label".into()]).collect();
    if n == 0 || header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::Param(format!("unexpected feature header `{}`", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let parse = |s: &str| s.trim().parse::<u32>().map_err(|_| Error::Param(format!("bad feature value `{s}`")));
        let x = rec.iter().take(n).map(parse).collect::<Result<Vec<_>>>()?;
        let label = match rec.get(n).map(str::trim) {
            Some("1") => true,
            Some("0") => false,
            other => return Err(Error::Param(format!("bad label `{}`", other.unwrap_or("")))),
        };
        rows.push(FeatureRow::new(x, label)?);
    }
    Ok(rows)
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Param(format!("csv: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let rows = vec![
            FeatureRow::new(vec![3, 1, 2], true).unwrap(),
            FeatureRow::new(vec![1, 2, 3], false).unwrap(),
        ];
        let mut buf = Vec::new();
        write_rows_csv(&rows, &mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("pos_1,pos_2,pos_3,label\n3,1,2,1\n"));
        assert_eq!(read_rows_csv(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn rejects_non_permutations() {
        assert!(FeatureRow::new(vec![0, 1], true).is_err());
        assert!(FeatureRow::new(vec![2, 2], true).is_err());
        let p: Permutation = "2,3,1".parse().unwrap();
        assert_eq!(FeatureRow::from_permutation(&p, true).x, vec![2, 3, 1]);
    }
}
