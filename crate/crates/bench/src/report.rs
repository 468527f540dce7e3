//! CSV, SVG and plain-text renderings of a suite result.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::config::ModeName;
use crate::error::{BenchError, Result};
use crate::suite::{EpisodeRecord, PointSummary, SuiteResult};

pub const CSV_HEADER: &str = "family,map,agents,seed,mode,H,success,steps";

pub fn csv_string(records: &[EpisodeRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.family,
            r.map,
            r.agents,
            r.seed,
            r.mode.as_str(),
            r.horizon,
            r.success as u8,
            r.steps
        );
    }
    out
}

pub fn emit_csv(result: &SuiteResult, path: impl AsRef<Path>) -> Result<()> {
    if result.episodes.is_empty() {
        return Err(BenchError::EmptyResult);
    }
    std::fs::write(path, csv_string(&result.episodes))?;
    Ok(())
}

pub fn parse_csv(text: &str) -> Result<Vec<EpisodeRecord>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(CSV_HEADER) {
        return Err(BenchError::Csv(format!("expected header '{CSV_HEADER}'")));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let bad = |what: &str| BenchError::Csv(format!("row {}: {what}", i + 1));
            let f: Vec<&str> = line.trim().split(',').collect();
            if f.len() != 8 {
                return Err(bad("expected 8 fields"));
            }
            let num = |s: &str, name: &str| s.parse::<u64>().map_err(|_| bad(name));
            Ok(EpisodeRecord {
                family: f[0].to_string(),
                map: num(f[1], "map")? as usize,
                agents: num(f[2], "agents")? as usize,
                seed: num(f[3], "seed")?,
                mode: ModeName::parse(f[4]).ok_or_else(|| bad("mode"))?,
                horizon: num(f[5], "H")? as usize,
                success: match f[6] {
                    "1" => true,
                    "0" => false,
                    _ => return Err(bad("success")),
                },
                steps: num(f[7], "steps")? as usize,
            })
        })
        .collect()
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<EpisodeRecord>> {
    parse_csv(&std::fs::read_to_string(path)?)
}

/// Fixed-width success-rate table, one row per point.
pub fn sr_table(points: &[PointSummary]) -> String {
    let mut out = format!("{:<10} {:<14} {:>6} {:>8} {:>6} {:>10}\n", "family", "mode", "agents", "episodes", "SR", "mean steps");
    for p in points {
        let steps = p.mean_steps.map_or("-".to_string(), |s| format!("{s:.1}"));
        let _ = writeln!(
            out,
            "{:<10} {:<14} {:>6} {:>8} {:>6.3} {:>10}",
            p.family,
            p.label(),
            p.agents,
            p.episodes,
            p.success_rate,
            steps
        );
    }
    out
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Success rate against agent count, one curve per mode, one panel per family.
pub fn svg_string(points: &[PointSummary]) -> String {
    let mut families: BTreeMap<&str, Vec<&PointSummary>> = BTreeMap::new();
    for p in points {
        families.entry(&p.family).or_default().push(p);
    }
    let mut labels: Vec<String> = points.iter().map(PointSummary::label).collect();
    labels.sort();
    labels.dedup();

    let (pw, ph, margin, legend_w) = (360.0, 260.0, 50.0, 150.0);
    let width = families.len().max(1) as f64 * (pw + margin) + margin + legend_w;
    let height = ph + 2.0 * margin;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);

    for (fi, (family, pts)) in families.iter().enumerate() {
        let x0 = margin + fi as f64 * (pw + margin);
        let y0 = margin;
        let mut agents: Vec<usize> = pts.iter().map(|p| p.agents).collect();
        agents.sort_unstable();
        agents.dedup();
        let (amin, amax) = (agents[0] as f64, *agents.last().unwrap() as f64);
        let xmap = |a: usize| {
            if amax > amin {
                x0 + (a as f64 - amin) / (amax - amin) * pw
            } else {
                x0 + pw / 2.0
            }
        };
        let ymap = |sr: f64| y0 + (1.0 - sr) * ph;

        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-weight="bold">{}</text>"#, x0 + pw / 2.0, y0 - 15.0, escape(family));
        let _ = writeln!(s, r#"<rect x="{x0}" y="{y0}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
        for k in 0..=4 {
            let sr = k as f64 / 4.0;
            let y = ymap(sr);
            let _ = writeln!(s, r##"<line x1="{x0}" y1="{y}" x2="{}" y2="{y}" stroke="#ddd"/>"##, x0 + pw);
            let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{sr:.2}</text>"#, x0 - 5.0, y + 4.0);
        }
        for &a in &agents {
            let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{a}</text>"#, xmap(a), y0 + ph + 16.0);
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">agents</text>"#, x0 + pw / 2.0, y0 + ph + 34.0);
        if fi == 0 {
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="middle" transform="rotate(-90 {} {})">success rate</text>"#,
                x0 - 35.0,
                y0 + ph / 2.0,
                x0 - 35.0,
                y0 + ph / 2.0
            );
        }

        for (li, label) in labels.iter().enumerate() {
            let mut curve: Vec<&&PointSummary> = pts.iter().filter(|p| &p.label() == label).collect();
            if curve.is_empty() {
                continue;
            }
            curve.sort_by_key(|p| p.agents);
            let color = PALETTE[li % PALETTE.len()];
            let coords: Vec<String> = curve.iter().map(|p| format!("{:.2},{:.2}", xmap(p.agents), ymap(p.success_rate))).collect();
            let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, coords.join(" "));
            for p in &curve {
                let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, xmap(p.agents), ymap(p.success_rate));
            }
        }
    }

    let lx = width - legend_w;
    for (li, label) in labels.iter().enumerate() {
        let y = margin + 10.0 + li as f64 * 18.0;
        let color = PALETTE[li % PALETTE.len()];
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, y + 4.0, escape(label));
    }
    s.push_str("</svg>\n");
    s
}

pub fn emit_plot(result: &SuiteResult, path: impl AsRef<Path>) -> Result<()> {
    if result.points.is_empty() {
        return Err(BenchError::EmptyResult);
    }
    std::fs::write(path, svg_string(&result.points))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_rejects_garbage() {
        assert!(parse_csv("a,b\n").is_err());
        let bad_mode = format!("{CSV_HEADER}\nempty,0,2,7,turbo,0,1,5\n");
        assert!(parse_csv(&bad_mode).is_err());
        let bad_success = format!("{CSV_HEADER}\nempty,0,2,7,fast,0,yes,5\n");
        assert!(parse_csv(&bad_success).is_err());
        assert_eq!(parse_csv(&format!("{CSV_HEADER}\n")).unwrap(), vec![]);
    }

    #[test]
    fn escapes_labels() {
        assert_eq!(escape("a<b & \"c\""), "a&lt;b &amp; &quot;c&quot;");
    }
}
