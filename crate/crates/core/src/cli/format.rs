//! Stable text formatting for CSV output.

use crate::analysis::{reference_threshold, SweepRow, ThresholdResult};

pub const SWEEP_HEADER: &str = "d,n_mubs,scenario,convention,Q,r,t1,t2,t3,t4,lambda1,warnings";
pub const THRESHOLD_HEADER: &str = "d,n_mubs,scenario,convention,q_star,paper_reference,abs_diff";

/// Nine significant digits, '.' separator, no trailing zeros; scientific
/// notation outside [1e−4, 1e9).
pub fn num(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs();
    if !(1e-4..1e9).contains(&mag) {
        let s = format!("{x:.8e}");
        let (mantissa, exp) = s.split_once('e').expect("exponent present");
        return format!("{}e{exp}", trim(mantissa));
    }
    let decimals = (8 - mag.log10().floor() as i32).max(0) as usize;
    let s = format!("{x:.decimals$}");
    let s = trim(&s);
    if s == "-0" {
        "0".to_string()
    } else {
        s
    }
}

fn trim(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

pub fn sweep_row(r: &SweepRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{}",
        r.d,
        r.n_mubs,
        r.scenario,
        r.convention,
        num(r.q),
        num(r.r),
        num(r.t[0]),
        num(r.t[1]),
        num(r.t[2]),
        num(r.t[3]),
        num(r.lambda1),
        r.warnings
    )
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&sweep_row(r));
        out.push('\n');
    }
    out
}

/// Published threshold for the result's configuration and |q* − reference|.
pub fn reference_for(t: &ThresholdResult) -> Option<(f64, f64)> {
    let c = &t.config;
    reference_threshold(c.d, c.n_mubs, c.scenario).map(|p| (p, (t.q_star - p).abs()))
}

pub fn threshold_row(t: &ThresholdResult) -> String {
    let c = &t.config;
    let (reference, diff) = match reference_for(t) {
        Some((p, diff)) => (num(p), num(diff)),
        None => (String::new(), String::new()),
    };
    format!(
        "{},{},{},{},{},{},{}",
        c.d,
        c.n_mubs,
        c.scenario,
        c.convention,
        num(t.q_star),
        reference,
        diff
    )
}

pub fn threshold_csv(results: &[ThresholdResult]) -> String {
    let mut out = String::from(THRESHOLD_HEADER);
    out.push('\n');
    for t in results {
        out.push_str(&threshold_row(t));
        out.push('\n');
    }
    out
}
