//! Fixed-format tables. Numbers are written with 12 significant digits so
//! that reruns of a deterministic computation are byte-identical.

use crate::certify::SweepRow;
use std::collections::BTreeSet;

/// `{:.11e}` rendering, with `nan`/`inf` spelled out.
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v:.11e}")
    }
}

/// CSV with header `sweep_param,k,value,residual` followed by the sorted
/// union of extra column names. Rows lacking an extra leave it empty.
pub fn csv_bytes(rows: &[SweepRow]) -> csv::Result<Vec<u8>> {
    let extras: BTreeSet<&str> = rows.iter().flat_map(|r| r.extra.keys().map(String::as_str)).collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["sweep_param", "k", "value", "residual"];
    header.extend(extras.iter().copied());
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            format_number(r.param),
            r.k.to_string(),
            format_number(r.value),
            format_number(r.residual),
        ];
        rec.extend(extras.iter().map(|k| r.extra.get(*k).map(|v| format_number(*v)).unwrap_or_default()));
        w.write_record(&rec)?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_have_twelve_significant_digits() {
        assert_eq!(format_number(std::f64::consts::PI), "3.14159265359e0");
        assert_eq!(format_number(-1.0e-7), "-1.00000000000e-7");
        assert_eq!(format_number(f64::NAN), "nan");
    }

    #[test]
    fn csv_has_fixed_header_and_union_of_extras() {
        let mut a = SweepRow {
            param: 0.1,
            k: 1,
            value: 2.0,
            residual: 1e-12,
            extra: Default::default(),
        };
        a.extra.insert("zeta".into(), 1.0);
        let mut b = a.clone();
        b.extra.clear();
        b.extra.insert("alpha".into(), 3.0);
        let text = String::from_utf8(csv_bytes(&[a, b]).unwrap()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("sweep_param,k,value,residual,alpha,zeta"));
        assert_eq!(
            lines.next(),
            Some("1.00000000000e-1,1,2.00000000000e0,1.00000000000e-12,,1.00000000000e0")
        );
    }
}
