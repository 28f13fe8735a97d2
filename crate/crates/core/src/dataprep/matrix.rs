use std::io::{BufRead, Write};

use super::DataprepError;

/// A dense row-major matrix with text I/O: the first line carries the shape
/// as `rows cols`, each following line one row of space-separated values.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Matrix, DataprepError> {
        if data.len() != rows * cols {
            return Err(DataprepError::LengthMismatch {
                left: data.len(),
                right: rows * cols,
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Matrix, DataprepError> {
        if rows.is_empty() {
            return Err(DataprepError::EmptyMatrix);
        }
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        let n = rows.len();
        for row in rows {
            if row.len() != cols {
                return Err(DataprepError::LengthMismatch {
                    left: row.len(),
                    right: cols,
                });
            }
            data.extend(row);
        }
        Ok(Matrix {
            rows: n,
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.rows).map(move |r| self.row(r))
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.rows, self.cols)?;
        for r in 0..self.rows {
            let line: Vec<String> = self.row(r).iter().map(|v| format!("{v}")).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Matrix, DataprepError> {
        let bad = |m: &str| DataprepError::MalformedMatrix(m.to_string());
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| bad("missing shape header"))?
            .map_err(|e| DataprepError::MalformedMatrix(e.to_string()))?;
        let mut parts = header.split_whitespace();
        let rows: usize = parts
            .next()
            .and_then(|p| p.parse().ok())
            .ok_or_else(|| bad("bad rows in header"))?;
        let cols: usize = parts
            .next()
            .and_then(|p| p.parse().ok())
            .ok_or_else(|| bad("bad cols in header"))?;
        let mut data = Vec::with_capacity(rows * cols);
        for line in lines {
            let line = line.map_err(|e| DataprepError::MalformedMatrix(e.to_string()))?;
            for tok in line.split_whitespace() {
                let v: f64 = tok.parse().map_err(|_| bad("bad value"))?;
                data.push(v);
            }
        }
        if data.len() != rows * cols {
            return Err(bad(&format!(
                "expected {} values, found {}",
                rows * cols,
                data.len()
            )));
        }
        Matrix::new(rows, cols, data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn io_roundtrip_is_exact() {
        let m = Matrix::from_rows(vec![vec![1.5, -2.25], vec![1e-15, 3.0]]).unwrap();
        let mut buf = Vec::new();
        m.write(&mut buf).unwrap();
        let back = Matrix::read(buf.as_slice()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        assert!(Matrix::new(2, 2, vec![1.0, 2.0, 3.0]).is_err());
        assert!(Matrix::read("2 2\n1 2\n3\n".as_bytes()).is_err());
    }
}
