//! Plain-text matrix format.
//!
//! ```text
//! 2 2 complex
//! 1.5-0.25i 0
//! 0 2+1i
//! ```
//!
//! The header names the shape and whether entries carry imaginary parts.
//! Real files hold one float per entry. Complex entries are `re+imi` or
//! `re-imi`; a bare float is read as real, and `imi` alone as imaginary.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{LinalgError, Matrix, Result, C64};

fn parse_err(line: usize, msg: impl Into<String>) -> LinalgError {
    LinalgError::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_float(s: &str, line: usize) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| parse_err(line, format!("invalid number {s:?}")))
}

fn parse_complex(tok: &str, line: usize) -> Result<C64> {
    let Some(body) = tok.strip_suffix('i') else {
        return Ok(C64::new(parse_float(tok, line)?, 0.0));
    };
    // split at the last sign that is not leading and not an exponent sign
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    match split {
        Some(k) => {
            let re = parse_float(&body[..k], line)?;
            let im_str = &body[k..];
            let im = match im_str {
                "+" => 1.0,
                "-" => -1.0,
                s => parse_float(s, line)?,
            };
            Ok(C64::new(re, im))
        }
        None => {
            let im = match body {
                "" | "+" => 1.0,
                "-" => -1.0,
                s => parse_float(s, line)?,
            };
            Ok(C64::new(0.0, im))
        }
    }
}

/// Parses the text format.
pub fn from_text(text: &str) -> Result<Matrix> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(parse_err(hline, "header must be \"rows cols real|complex\""));
    }
    let rows: usize = fields[0]
        .parse()
        .map_err(|_| parse_err(hline, "bad row count"))?;
    let cols: usize = fields[1]
        .parse()
        .map_err(|_| parse_err(hline, "bad column count"))?;
    let complex = match fields[2] {
        "real" => false,
        "complex" => true,
        other => return Err(parse_err(hline, format!("unknown field kind {other:?}"))),
    };
    if rows == 0 || cols == 0 {
        return Err(parse_err(hline, "dimensions must be positive"));
    }

    let mut data = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| parse_err(hline + r + 1, format!("expected {rows} rows, found {r}")))?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != cols {
            return Err(parse_err(
                ln,
                format!("expected {cols} entries, found {}", toks.len()),
            ));
        }
        for tok in toks {
            let z = if complex {
                parse_complex(tok, ln)?
            } else {
                C64::new(parse_float(tok, ln)?, 0.0)
            };
            data.push(z);
        }
    }
    if let Some((ln, _)) = lines.next() {
        return Err(parse_err(ln, "trailing content after last row"));
    }
    Matrix::from_complex(rows, cols, data)
}

/// Renders `a` losslessly; real matrices use the `real` header.
pub fn to_text(a: &Matrix) -> String {
    let real = a.is_real();
    let mut out = format!(
        "{} {} {}\n",
        a.rows(),
        a.cols(),
        if real { "real" } else { "complex" }
    );
    for i in 0..a.rows() {
        for (j, z) in a.row(i).iter().enumerate() {
            if j > 0 {
                out.push(' ');
            }
            if real {
                write!(out, "{:?}", z.re).unwrap();
            } else {
                let sign = if z.im.is_sign_negative() { '-' } else { '+' };
                write!(out, "{:?}{sign}{:?}i", z.re, z.im.abs()).unwrap();
            }
        }
        out.push('\n');
    }
    out
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<Matrix> {
    from_text(&fs::read_to_string(path)?)
}

pub fn write_matrix(path: impl AsRef<Path>, a: &Matrix) -> Result<()> {
    fs::write(path, to_text(a))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_complex_tokens() {
        let cases = [
            ("1.5-0.25i", C64::new(1.5, -0.25)),
            ("2", C64::new(2.0, 0.0)),
            ("-3i", C64::new(0.0, -3.0)),
            ("1e-3+2E+1i", C64::new(1e-3, 20.0)),
            ("-1-i", C64::new(-1.0, -1.0)),
            ("i", C64::new(0.0, 1.0)),
        ];
        for (tok, want) in cases {
            assert_eq!(parse_complex(tok, 1).unwrap(), want, "{tok}");
        }
        assert!(parse_complex("1+xi", 1).is_err());
    }

    #[test]
    fn round_trips() {
        let a = Matrix::from_fn(2, 3, |i, j| C64::new(i as f64 - 0.1, -(j as f64) / 3.0));
        assert_eq!(from_text(&to_text(&a)).unwrap(), a);
        let r = Matrix::from_rows(&[[1.0, -2.5e-300], [f64::MAX, 0.1]]);
        let text = to_text(&r);
        assert!(text.starts_with("2 2 real\n"));
        assert_eq!(from_text(&text).unwrap(), r);
    }

    #[test]
    fn rejects_malformed_files() {
        assert!(from_text("").is_err());
        assert!(from_text("2 2 real\n1 2\n").is_err());
        assert!(from_text("1 2 real\n1 2 3\n").is_err());
        assert!(from_text("1 1 quaternion\n1\n").is_err());
        assert!(from_text("1 1 real\n1\n2\n").is_err());
        assert!(matches!(
            from_text("1 1 real\nnan\n"),
            Err(LinalgError::NonFinite(0, 0))
        ));
    }
}
