//! Number formatting shared by all writers.

/// 17 significant digits, enough to round-trip any f64.
pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv_line(fields: &[String]) -> String {
    let mut line = fields.join(",");
    line.push('\n');
    line
}
