//! CSV assembly with a versioned comment header.

use crate::CliError;

pub const SCHEMA_VERSION: &str = "1";

/// Renders `value` with `digits` significant digits; non-finite values
/// become `NA`.
pub fn sig(value: f64, digits: usize) -> String {
    if !value.is_finite() {
        return "NA".into();
    }
    if value == 0.0 {
        return format!("{:.*}", digits.saturating_sub(1), 0.0);
    }
    let exponent = value.abs().log10().floor() as i32;
    if (-4..15).contains(&exponent) {
        let decimals = (digits as i32 - 1 - exponent).max(0) as usize;
        let text = format!("{value:.decimals$}");
        // rounding can carry into a new leading digit, e.g. 9.9995 -> 10.000
        let carried = text
            .trim_start_matches('-')
            .split('.')
            .next()
            .unwrap_or("")
            .len()
            > (exponent + 1).max(1) as usize;
        if carried && decimals > 0 {
            return format!("{value:.prec$}", prec = decimals - 1);
        }
        text
    } else {
        format!("{value:.prec$e}", prec = digits.saturating_sub(1))
    }
}

/// Full-precision rendering used for raw sample output.
pub fn full(value: f64) -> String {
    sig(value, 10)
}

pub struct CsvDoc {
    comments: Vec<String>,
    writer: csv::Writer<Vec<u8>>,
}

impl CsvDoc {
    pub fn new(command: &str, config_hash: &str, seed: u64) -> Self {
        Self {
            comments: vec![format!(
                "# gibbs-scan {} schema={SCHEMA_VERSION} command={command} config_hash={config_hash} seed={seed}",
                env!("CARGO_PKG_VERSION")
            )],
            writer: csv::WriterBuilder::new()
                .terminator(csv::Terminator::CRLF)
                .from_writer(Vec::new()),
        }
    }

    pub fn comment(&mut self, text: impl Into<String>) {
        self.comments.push(format!("# {}", text.into()));
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer
            .write_record(fields)
            .map_err(gibbs_scan::Error::from)?;
        Ok(())
    }

    pub fn finish(self) -> Result<Vec<u8>, CliError> {
        let body = self
            .writer
            .into_inner()
            .map_err(|e| CliError::Runtime(format!("csv buffer: {e}")))?;
        let mut out = Vec::new();
        for c in &self.comments {
            out.extend_from_slice(c.as_bytes());
            out.extend_from_slice(b"\r\n");
        }
        out.extend_from_slice(&body);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(sig(2.99612, 4), "2.996");
        assert_eq!(sig(0.0067, 4), "0.006700");
        assert_eq!(sig(19.2891, 4), "19.29");
        assert_eq!(sig(-0.04851, 4), "-0.04851");
        assert_eq!(sig(9.99951, 4), "10.00");
        assert_eq!(sig(0.0, 4), "0.000");
        assert_eq!(sig(f64::NAN, 4), "NA");
        assert_eq!(sig(1.5e20, 4), "1.500e20");
    }

    #[test]
    fn header_then_rows() {
        let mut doc = CsvDoc::new("trace", "abc", 7);
        doc.row(["iteration", "y"]).unwrap();
        doc.row(["1", "0.5"]).unwrap();
        let text = String::from_utf8(doc.finish().unwrap()).unwrap();
        assert!(text.starts_with("# gibbs-scan"));
        assert!(text.ends_with("iteration,y\r\n1,0.5\r\n"));
    }
}
