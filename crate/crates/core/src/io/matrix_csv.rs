//! Dense matrices as CSV: one row per line, comma separated, no header.

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Result, Ts1Error};
use crate::scalar::Real;

pub fn parse_matrix_csv<T: Real, R: std::io::Read>(reader: R) -> Result<DMatrix<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut data = Vec::new();
    let mut ncols = None;
    let mut nrows = 0;
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Ts1Error::Decode(format!("csv: {e}")))?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        match ncols {
            None => ncols = Some(record.len()),
            Some(c) if c != record.len() => {
                return Err(Ts1Error::Decode(format!(
                    "row {} has {} fields, expected {c}",
                    line + 1,
                    record.len()
                )))
            }
            _ => {}
        }
        for field in record.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| Ts1Error::Decode(format!("row {}: invalid number {field:?}", line + 1)))?;
            data.push(T::lit(v));
        }
        nrows += 1;
    }
    let ncols = ncols.ok_or_else(|| Ts1Error::Decode("empty matrix".into()))?;
    Ok(DMatrix::from_row_slice(nrows, ncols, &data))
}

pub fn read_matrix_csv<T: Real>(path: &Path) -> Result<DMatrix<T>> {
    let f = std::fs::File::open(path).map_err(|source| Ts1Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_matrix_csv(f).map_err(|e| match e {
        Ts1Error::Decode(msg) => Ts1Error::Decode(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Values are written with shortest round-trip formatting.
pub fn format_matrix_csv<T: Real>(m: &DMatrix<T>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{}", m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_matrix_csv<T: Real>(path: &Path, m: &DMatrix<T>) -> Result<()> {
    std::fs::write(path, format_matrix_csv(m)).map_err(|source| Ts1Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_basic() {
        let m: DMatrix<f64> = parse_matrix_csv("1,2.5,-3\n4e-3, 5 ,6\n".as_bytes()).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 3, &[1.0, 2.5, -3.0, 4e-3, 5.0, 6.0]));
    }

    #[test]
    fn parse_errors() {
        assert!(parse_matrix_csv::<f64, _>("1,2\n3\n".as_bytes()).is_err());
        assert!(parse_matrix_csv::<f64, _>("1,x\n".as_bytes()).is_err());
        assert!(parse_matrix_csv::<f64, _>("".as_bytes()).is_err());
    }

    #[test]
    fn round_trip_is_exact() {
        let m = DMatrix::from_fn(4, 3, |i, j| (i as f64 + 0.1).powf(j as f64 + 0.7) / 3.0);
        let back: DMatrix<f64> = parse_matrix_csv(format_matrix_csv(&m).as_bytes()).unwrap();
        assert_eq!(back, m);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        write_matrix_csv(&path, &m).unwrap();
        assert_eq!(read_matrix_csv::<f64>(&path).unwrap(), m);
    }
}
