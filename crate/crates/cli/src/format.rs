//! CSV and number formatting shared by the commands.

/// 17 significant digits; `-inf`/`inf`/`nan` spelled out.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Empty field for undefined values.
pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Quotes a field when it contains a separator or quote.
pub fn field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub struct Csv {
    out: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut out = header.join(",");
        out.push('\n');
        Csv { out }
    }

    pub fn row<S: AsRef<str>>(&mut self, fields: impl IntoIterator<Item = S>) {
        let cells: Vec<String> = fields.into_iter().map(|f| field(f.as_ref())).collect();
        self.out.push_str(&cells.join(","));
        self.out.push('\n');
    }

    pub fn finish(self) -> String {
        self.out
    }
}

pub fn json(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_keep_seventeen_digits() {
        assert_eq!(num(std::f64::consts::LN_2), "6.9314718055994529e-1");
        assert_eq!(num(f64::NEG_INFINITY), "-inf");
        assert_eq!(opt(None), "");
    }

    #[test]
    fn fields_are_quoted_when_needed() {
        assert_eq!(field("(1,0)"), "\"(1,0)\"");
        assert_eq!(field("plain"), "plain");
        let mut c = Csv::new(&["a", "b"]);
        c.row(["x,y", "z"]);
        assert_eq!(c.finish(), "a,b\n\"x,y\",z\n");
    }
}
