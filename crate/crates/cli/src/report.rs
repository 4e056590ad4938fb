//! Output files: report.json, summary.csv, curves/*.csv and metadata.json.
//!
//! Everything except metadata.json is a pure function of the report, so two
//! runs with the same configuration write identical bytes.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::run::Report;

#[derive(Debug, Serialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub elapsed_seconds: f64,
    pub output_dir: PathBuf,
    pub cache_enabled: bool,
    pub cache_hits: usize,
    pub cache_misses: usize,
    pub jobs: usize,
    pub exit_code: i32,
}

/// File-name safe form of a family id.
pub fn slug(id: &str) -> String {
    let mut s: String = id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '_' }).collect();
    while s.ends_with('_') {
        s.pop();
    }
    s
}

fn csv_writer(path: &Path) -> std::io::Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(std::io::Error::other)
}

fn flush(mut w: csv::Writer<std::fs::File>) -> std::io::Result<()> {
    w.flush()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_outputs(dir: &Path, report: &Report, meta: &Metadata) -> std::io::Result<()> {
    std::fs::create_dir_all(dir.join("curves"))?;
    let mut json = serde_json::to_string_pretty(report).map_err(std::io::Error::other)?;
    json.push('\n');
    std::fs::write(dir.join("report.json"), json)?;
    write_summary(&dir.join("summary.csv"), report)?;
    write_curves(&dir.join("curves"), report)?;
    let mut meta_json = serde_json::to_string_pretty(meta).map_err(std::io::Error::other)?;
    meta_json.push('\n');
    std::fs::write(dir.join("metadata.json"), meta_json)
}

fn write_summary(path: &Path, report: &Report) -> std::io::Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["family", "q", "k", "y_norm", "y_strong", "c_class", "c_exponent"]).map_err(std::io::Error::other)?;
    for fr in &report.families {
        for s in &fr.sections {
            let k_max = s.smoothness.as_ref().map(|r| r.k_max).or(s.study.as_ref().map(|r| r.k_max)).unwrap_or(0);
            for k in 0..=k_max {
                let yn = s.smoothness.as_ref().and_then(|r| r.norm_verdict(k)).map(|v| v.symbol()).unwrap_or("");
                let ys = s.smoothness.as_ref().and_then(|r| r.strong_verdict(k)).map(|v| v.symbol()).unwrap_or("");
                let order = s.study.as_ref().and_then(|r| r.orders.get(k));
                let cc = order.map(|o| format!("{:?}", o.class).to_lowercase()).unwrap_or_default();
                let ce = opt(order.and_then(|o| o.max_exponent));
                w.write_record([fr.family.as_str(), &s.q.to_string(), &k.to_string(), yn, ys, &cc, &ce])
                    .map_err(std::io::Error::other)?;
            }
        }
    }
    for d in &report.garding {
        for row in &d.rows {
            for o in &row.smoothed.orders {
                let fam = format!("G[{}]({})", row.width, d.family);
                let cc = format!("{:?}", o.class).to_lowercase();
                w.write_record([fam.as_str(), &d.q.to_string(), &o.k.to_string(), "", "", &cc, &opt(o.max_exponent)])
                    .map_err(std::io::Error::other)?;
            }
        }
    }
    flush(w)
}

fn write_curves(dir: &Path, report: &Report) -> std::io::Result<()> {
    for fr in &report.families {
        let base = slug(&fr.family);
        for s in &fr.sections {
            let q = s.q.to_string();
            if let Some(study) = &s.study {
                let mut w = csv_writer(&dir.join(format!("{base}_q{q}_commutators.csv")))?;
                w.write_record(["word", "k", "points", "length", "norm", "noise_floor", "class"]).map_err(std::io::Error::other)?;
                for ws in &study.words {
                    for (i, g) in study.grids.iter().enumerate() {
                        w.write_record([
                            ws.name.as_str(),
                            &ws.word.len().to_string(),
                            &g.points.to_string(),
                            &g.length.to_string(),
                            &ws.norms[i].to_string(),
                            &ws.noise_floor[i].to_string(),
                            &format!("{:?}", ws.growth.class).to_lowercase(),
                        ])
                        .map_err(std::io::Error::other)?;
                    }
                }
                flush(w)?;
            }
            if let Some(sm) = &s.smoothness {
                let mut w = csv_writer(&dir.join(format!("{base}_q{q}_continuity.csv")))?;
                w.write_record(["points", "topology", "radius", "modulus"]).map_err(std::io::Error::other)?;
                for (g, pair) in sm.grids.iter().zip(&sm.continuity) {
                    for (topo, c) in ["norm", "strong"].iter().zip(pair.iter()) {
                        for (r, m) in c.radii.iter().zip(&c.moduli) {
                            w.write_record([&g.points.to_string(), *topo, &r.to_string(), &m.to_string()]).map_err(std::io::Error::other)?;
                        }
                    }
                }
                flush(w)?;
                let mut w = csv_writer(&dir.join(format!("{base}_q{q}_cauchy.csv")))?;
                w.write_record(["word", "topology", "points", "relative_step", "gap"]).map_err(std::io::Error::other)?;
                for o in &sm.orders {
                    for wr in &o.words {
                        for (topo, diags) in [("norm", &wr.norm_cauchy), ("strong", &wr.strong_cauchy)] {
                            for (g, d) in sm.grids.iter().zip(diags.iter()) {
                                for (st, gap) in d.relative_steps.iter().zip(&d.gaps) {
                                    w.write_record([wr.name.as_str(), topo, &g.points.to_string(), &st.to_string(), &gap.to_string()])
                                        .map_err(std::io::Error::other)?;
                                }
                            }
                        }
                    }
                }
                flush(w)?;
            }
        }
    }
    for d in &report.garding {
        let mut w = csv_writer(&dir.join(format!("{}_garding.csv", slug(&d.family))))?;
        w.write_record(["width", "points", "deviation"]).map_err(std::io::Error::other)?;
        for row in &d.rows {
            for (g, dev) in row.smoothed.grids.iter().zip(&row.deviations) {
                w.write_record([&row.width.to_string(), &g.points.to_string(), &dev.to_string()]).map_err(std::io::Error::other)?;
            }
        }
        flush(w)?;
    }
    if let Some(weyl) = &report.weyl {
        for a in &weyl.audits {
            let mut w = csv_writer(&dir.join(format!("{}_symbol.csv", slug(&a.symbol.family))))?;
            w.write_record(["alpha", "points", "norm", "class"]).map_err(std::io::Error::other)?;
            for ds in &a.symbol.derivatives {
                let alpha: Vec<String> = ds.alpha.iter().map(|x| x.to_string()).collect();
                for (g, v) in a.symbol.grids.iter().zip(&ds.norms) {
                    w.write_record([&alpha.join(" "), &g.points.to_string(), &v.to_string(), &format!("{:?}", ds.growth.class).to_lowercase()])
                        .map_err(std::io::Error::other)?;
                }
            }
            flush(w)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slugs_are_file_safe() {
        assert_eq!(slug("triangle_wave(period=2,slope=1)"), "triangle_wave_period_2_slope_1");
        assert_eq!(slug("G[0.5](x)"), "G_0.5__x");
    }
}
