//! Artifact writers. Every file is written to a temporary sibling and then
//! renamed, so readers never see a partial file.

pub use specweights_core::table::csv_bytes;
use specweights_core::SweepRow;
use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn json_bytes(v: &serde_json::Value) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(v).expect("JSON values always serialize");
    out.push(b'\n');
    out
}

/// Line plot of `value` against `sweep_param`, one polyline per index `k`.
/// Axes switch to log scale when the data spans more than two decades.
pub fn svg(title: &str, x_label: &str, rows: &[SweepRow]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const PAD: f64 = 60.0;
    let pts: Vec<(usize, f64, f64)> = rows
        .iter()
        .filter(|r| r.param.is_finite() && r.value.is_finite())
        .map(|r| (r.k, r.param, r.value))
        .collect();
    let log_axis = |vals: &mut dyn Iterator<Item = f64>| {
        let v: Vec<f64> = vals.collect();
        let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(*x), b.max(*x)));
        lo > 0.0 && hi / lo > 100.0
    };
    let log_x = log_axis(&mut pts.iter().map(|p| p.1));
    let log_y = log_axis(&mut pts.iter().map(|p| p.2));
    let tx = |v: f64| if log_x { v.log10() } else { v };
    let ty = |v: f64| if log_y { v.log10() } else { v };
    let range = |it: &mut dyn Iterator<Item = f64>| {
        let (lo, hi) = it.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
        if !lo.is_finite() {
            (0.0, 1.0)
        } else if hi - lo < 1e-300 {
            (lo - 0.5, hi + 0.5)
        } else {
            (lo, hi)
        }
    };
    let (x0, x1) = range(&mut pts.iter().map(|p| tx(p.1)));
    let (y0, y1) = range(&mut pts.iter().map(|p| ty(p.2)));
    let sx = |v: f64| PAD + (tx(v) - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |v: f64| H - PAD - (ty(v) - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b"];

    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n\
         <line x1=\"{PAD}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n\
         <line x1=\"{PAD}\" y1=\"{PAD}\" x2=\"{PAD}\" y2=\"{}\" stroke=\"black\"/>\n",
        W / 2.0,
        escape(title),
        H - PAD,
        W - PAD,
        H - PAD,
        H - PAD
    );
    let unlog = |v: f64, log: bool| if log { 10f64.powf(v) } else { v };
    s += &format!(
        "<text x=\"{PAD}\" y=\"{}\" text-anchor=\"middle\">{:.4e}</text>\n<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{:.4e}</text>\n",
        H - PAD + 18.0,
        unlog(x0, log_x),
        W - PAD,
        H - PAD + 18.0,
        unlog(x1, log_x)
    );
    s += &format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.4e}</text>\n<text x=\"{}\" y=\"{PAD}\" text-anchor=\"end\">{:.4e}</text>\n",
        PAD - 4.0,
        H - PAD,
        unlog(y0, log_y),
        PAD - 4.0,
        unlog(y1, log_y)
    );
    s += &format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}{}</text>\n",
        W / 2.0,
        H - 16.0,
        escape(x_label),
        if log_x { " (log)" } else { "" }
    );
    let ks: BTreeSet<usize> = pts.iter().map(|p| p.0).collect();
    for (i, k) in ks.iter().enumerate() {
        let color = colors[i % colors.len()];
        let line: Vec<String> = pts
            .iter()
            .filter(|p| p.0 == *k)
            .map(|p| format!("{:.2},{:.2}", sx(p.1), sy(p.2)))
            .collect();
        s += &format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            line.join(" ")
        );
        s += &format!(
            "<text x=\"{}\" y=\"{}\" fill=\"{color}\">k = {k}</text>\n",
            W - PAD + 6.0,
            PAD + 14.0 * i as f64
        );
    }
    s += "</svg>\n";
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("nested/out.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn svg_is_well_formed_enough() {
        let rows: Vec<SweepRow> = (1..5)
            .map(|i| SweepRow {
                param: 10f64.powi(-i),
                k: 1,
                value: 10f64.powi(-2 * i),
                residual: 0.0,
                extra: Default::default(),
            })
            .collect();
        let s = svg("decay <test>", "eps", &rows);
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert!(s.contains("&lt;test&gt;") && s.contains("(log)"));
    }
}
