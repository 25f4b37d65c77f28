//! Deterministic serialization: every float is rendered with 17 significant
//! digits so identical runs produce identical bytes.

use csa_core::experiments::{QuantileTable, SweepRow};
use csa_core::rates::{RateReport, RelStd};

/// 17 significant digits in scientific notation; enough to round-trip any
/// f64 bit pattern.
pub fn g17(v: f64) -> String {
    format!("{v:.16e}")
}

fn rel_std_field(r: &RelStd) -> (String, String) {
    match r {
        RelStd::Finite(v) => (g17(*v), g17(*v)),
        // JSON has no infinity literal; both formats spell it out.
        RelStd::Infinite => ("inf".to_string(), "\"inf\"".to_string()),
    }
}

/// Key/value pairs of a rate report, in output order.
fn rate_report_fields(report: &RateReport) -> Vec<(&'static str, String, String)> {
    let p = &report.params;
    let v = &report.variance;
    let (rel_csv, rel_json) = rel_std_field(&v.rel_std);
    let mut fields: Vec<(&'static str, String, String)> = vec![
        ("lambda", p.lambda.to_string(), p.lambda.to_string()),
        ("n", p.n.to_string(), p.n.to_string()),
        ("c", g17(p.c), g17(p.c)),
        ("d_sigma", g17(p.d_sigma), g17(p.d_sigma)),
        ("seed", p.seed.to_string(), p.seed.to_string()),
    ];
    for (name, value) in [
        ("rate_no_cumulation", report.rate_no_cumulation),
        ("rate_with_cumulation", report.rate_with_cumulation),
        ("a", v.a),
        ("k4", v.k4),
        ("k31", v.k31),
        ("k22", v.k22),
        ("k211", v.k211),
        ("k1111", v.k1111),
        ("second_moment_limit", v.second_moment_limit),
        ("fourth_moment_limit", v.fourth_moment_limit),
        ("variance", v.variance),
    ] {
        fields.push((name, g17(value), g17(value)));
    }
    fields.push(("rel_std", rel_csv, rel_json));
    fields
}

pub fn rate_report_json(report: &RateReport) -> String {
    let mut out = String::from("{\n");
    let fields = rate_report_fields(report);
    for (i, (key, _, json)) in fields.iter().enumerate() {
        let sep = if i + 1 == fields.len() { "" } else { "," };
        out.push_str(&format!("  \"{key}\": {json}{sep}\n"));
    }
    out.push_str("}\n");
    out
}

pub fn rate_report_csv(report: &RateReport) -> String {
    let mut out = String::from("key,value\n");
    for (key, csv, _) in rate_report_fields(report) {
        out.push_str(&format!("{key},{csv}\n"));
    }
    out
}

/// One row per (t, level, value), t outermost.
pub fn quantiles_csv(table: &QuantileTable) -> String {
    let cols = table.values.cols();
    let mut out = String::with_capacity(cols * table.levels.len() * 32);
    out.push_str("t,level,value\n");
    for t in 0..cols {
        for (l, &level) in table.levels.iter().enumerate() {
            out.push_str(&format!(
                "{t},{},{}\n",
                g17(level),
                g17(table.values.get(l, t))
            ));
        }
    }
    out
}

pub fn quantiles_json(table: &QuantileTable) -> String {
    let cols = table.values.cols();
    let mut out = String::from("{\"rows\":[\n");
    let mut first = true;
    for t in 0..cols {
        for (l, &level) in table.levels.iter().enumerate() {
            if !first {
                out.push_str(",\n");
            }
            first = false;
            out.push_str(&format!(
                "{{\"t\":{t},\"level\":{},\"value\":{}}}",
                g17(level),
                g17(table.values.get(l, t))
            ));
        }
    }
    out.push_str("\n]}\n");
    out
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("policy,n,rel_std\n");
    for row in rows {
        let (csv, _) = rel_std_field(&row.rel_std);
        out.push_str(&format!("{},{},{}\n", row.policy, row.n, csv));
    }
    out
}

pub fn sweep_json(rows: &[SweepRow]) -> String {
    let mut out = String::from("{\"rows\":[\n");
    for (i, row) in rows.iter().enumerate() {
        let (_, json) = rel_std_field(&row.rel_std);
        let sep = if i + 1 == rows.len() { "" } else { "," };
        out.push_str(&format!(
            "{{\"policy\":\"{}\",\"n\":{},\"rel_std\":{}}}{sep}\n",
            row.policy, row.n, json
        ));
    }
    out.push_str("]}\n");
    out
}

#[cfg(test)]
#[allow(clippy::excessive_precision)] // frozen oracle constants
mod tests {
    use super::*;

    #[test]
    fn g17_has_seventeen_significant_digits() {
        assert_eq!(g17(0.025), "2.5000000000000001e-2");
        assert_eq!(g17(1.0), "1.0000000000000000e0");
        let v = 0.034988374366473436;
        let parsed: f64 = g17(v).parse().unwrap();
        assert_eq!(parsed, v);
    }
}
