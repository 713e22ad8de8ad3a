//! Plain CSV output with lossless floats.

/// 17 significant digits; parses back to the same `f64`.
pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn row<I, S>(fields: I) -> String
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut out = String::new();
    for (i, f) in fields.into_iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(f.as_ref());
    }
    out.push('\n');
    out
}
