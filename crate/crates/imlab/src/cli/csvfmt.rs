//! Deterministic number formatting and the results CSV schema.

/// Bit-exact column header of the results CSV.
pub const CSV_HEADER: &str =
    "algo,env,T,seed,iter,J_exact,J_expert,eps,bound_id,bound_rhs,slack,expert_queries,dataset_size,wall_ms";

/// Formats with 12 significant digits, `.` decimal separator, no grouping.
/// Plain decimal notation for exponents in `[-4, 12)`, scientific
/// otherwise.
pub fn fmt_sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.11e}", x);
    let (mantissa, exp_str) = sci.split_once('e').expect("scientific notation");
    let exp: i32 = exp_str.parse().expect("exponent");
    if !(-4..12).contains(&exp) {
        return format!("{mantissa}e{exp}");
    }
    let neg = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    debug_assert_eq!(digits.len(), 12);
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    if exp >= 0 {
        let point = (exp + 1) as usize;
        if point >= digits.len() {
            out.push_str(&digits);
            for _ in 0..point - digits.len() {
                out.push('0');
            }
        } else {
            out.push_str(&digits[..point]);
            out.push('.');
            out.push_str(&digits[point..]);
        }
    } else {
        out.push_str("0.");
        for _ in 0..(-exp - 1) as usize {
            out.push('0');
        }
        out.push_str(&digits);
    }
    out
}

/// One CSV data row. Bound columns are empty on per-iteration rows and
/// filled on the per-theorem summary rows.
#[derive(Clone, Debug)]
pub struct CsvRow {
    pub algo: String,
    pub env: String,
    pub horizon: usize,
    pub seed: u64,
    pub iter: usize,
    pub j_exact: f64,
    pub j_expert: f64,
    pub eps: f64,
    pub bound_id: Option<u8>,
    pub bound_rhs: Option<f64>,
    pub slack: Option<f64>,
    pub expert_queries: u64,
    pub dataset_size: usize,
    pub wall_ms: u64,
}

impl CsvRow {
    pub fn to_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.algo,
            self.env,
            self.horizon,
            self.seed,
            self.iter,
            fmt_sig12(self.j_exact),
            fmt_sig12(self.j_expert),
            fmt_sig12(self.eps),
            self.bound_id.map(|b| b.to_string()).unwrap_or_default(),
            self.bound_rhs.map(fmt_sig12).unwrap_or_default(),
            self.slack.map(fmt_sig12).unwrap_or_default(),
            self.expert_queries,
            self.dataset_size,
            self.wall_ms,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats_plain_decimals() {
        assert_eq!(fmt_sig12(0.0), "0");
        assert_eq!(fmt_sig12(1.0), "1.00000000000");
        assert_eq!(fmt_sig12(-2.5), "-2.50000000000");
        assert_eq!(fmt_sig12(22.56), "22.5600000000");
        assert_eq!(fmt_sig12(0.05), "0.0500000000000");
    }

    #[test]
    fn switches_to_scientific_for_extreme_exponents() {
        assert_eq!(fmt_sig12(1.5e-7), "1.50000000000e-7");
        assert_eq!(fmt_sig12(3.0e14), "3.00000000000e14");
    }

    #[test]
    fn rounding_carries_cleanly() {
        assert_eq!(fmt_sig12(9.999999999999), "10.0000000000");
    }

    #[test]
    fn round_trips_within_12_digits() {
        for &x in &[0.1, 1.0 / 3.0, 123.456, 9.87654321e-3] {
            let s = fmt_sig12(x);
            let back: f64 = s.parse().unwrap();
            assert!((back - x).abs() <= x.abs() * 1e-11);
        }
    }
}
