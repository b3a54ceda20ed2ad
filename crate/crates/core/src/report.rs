//! Plain-text emission helpers shared by the experiment modules.

use std::fmt::Write as _;

/// A real with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_real(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    format!("{x:.16e}")
}

pub fn join_reals(xs: &[f64]) -> String {
    xs.iter().map(|x| fmt_real(*x)).collect::<Vec<_>>().join(";")
}

pub fn join_ints(xs: &[i64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

/// Minimal CSV writer: header row, LF line endings, fields quoted only when
/// they contain a comma, quote or newline.
#[derive(Debug, Clone, Default)]
pub struct Csv {
    out: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut csv = Self::default();
        csv.row(header.iter().map(|s| s.to_string()));
        csv
    }

    /// Prepends a `# key=value ...` comment line; call before any rows.
    pub fn with_comment(comment: &str, header: &[&str]) -> Self {
        let mut csv = Self {
            out: format!("# {comment}\n"),
        };
        csv.row(header.iter().map(|s| s.to_string()));
        csv
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut first = true;
        for field in fields {
            if !first {
                self.out.push(',');
            }
            first = false;
            let f = field.as_ref();
            if f.contains([',', '"', '\n']) {
                let _ = write!(self.out, "\"{}\"", f.replace('"', "\"\""));
            } else {
                self.out.push_str(f);
            }
        }
        self.out.push('\n');
    }

    pub fn finish(self) -> String {
        self.out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 12345.678901234567] {
            let s = fmt_real(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_real(0.0), "0");
    }

    #[test]
    fn csv_quotes() {
        let mut csv = Csv::with_comment("tool=x", &["a", "b"]);
        csv.row(["1", "x,y"]);
        assert_eq!(csv.finish(), "# tool=x\na,b\n1,\"x,y\"\n");
    }
}
