//! CSV helpers shared by the emitters.

/// Round-trip formatting with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{:.16e}", x)
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Builds a CSV document with `#`-prefixed metadata lines.
pub struct CsvWriter {
    out: String,
}

impl CsvWriter {
    pub fn new() -> Self {
        CsvWriter { out: String::new() }
    }

    pub fn meta(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        self.out.push_str(&format!("# {key}: {value}\n"));
        self
    }

    pub fn header(&mut self, cols: &[&str]) -> &mut Self {
        self.out.push_str(&cols.join(","));
        self.out.push('\n');
        self
    }

    pub fn row(&mut self, cells: &[String]) -> &mut Self {
        self.out.push_str(&cells.join(","));
        self.out.push('\n');
        self
    }

    pub fn finish(&self) -> String {
        self.out.clone()
    }
}

impl Default for CsvWriter {
    fn default() -> Self {
        Self::new()
    }
}
