use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::io::fmt_f64;

use super::{CellSummary, ResultGrid};

pub const RESULTS_HEADER: &str = "kind,m,n,k,k_prime,noise_fraction,noise_mode,algorithm,run,seed,success,dist_supp,rel_l2_loss,wasserstein,supports_explored,supports_after_init,t_best,loss_best,runtime_ms";

const CELLS_HEADER: &str = "m,k,algorithm,runs,success_rate,mean_dist_supp,mean_dist_supp_largest,mean_rel_loss,mean_wasserstein,mean_supports_explored,mean_supports_after_init";

/// One line per solver run, in sweep order.
pub fn results_csv(grid: &ResultGrid) -> String {
    let mut s = String::from(RESULTS_HEADER);
    s.push('\n');
    for r in &grid.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.kind,
            r.m,
            r.n,
            r.k,
            r.k_prime,
            fmt_f64(r.noise_fraction),
            r.noise_mode,
            r.algorithm,
            r.run,
            r.seed,
            u8::from(r.success),
            fmt_f64(r.dist_supp),
            fmt_f64(r.rel_l2_loss),
            fmt_f64(r.wasserstein),
            r.supports_explored,
            r.supports_after_init,
            r.t_best,
            fmt_f64(r.loss_best),
            fmt_f64(r.runtime_ms),
        );
    }
    s
}

pub fn cells_csv(grid: &ResultGrid) -> String {
    let mut s = String::from(CELLS_HEADER);
    s.push('\n');
    for c in &grid.cells {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            c.m,
            c.k,
            c.algorithm,
            c.runs,
            fmt_f64(c.success_rate),
            fmt_f64(c.mean_dist_supp),
            fmt_f64(c.mean_dist_supp_largest),
            fmt_f64(c.mean_rel_loss),
            fmt_f64(c.mean_wasserstein),
            fmt_f64(c.mean_supports_explored),
            fmt_f64(c.mean_supports_after_init),
        );
    }
    s
}

pub fn thresholds_csv(grid: &ResultGrid) -> String {
    let mut s = String::from("m,zeta,algorithm,k,rho\n");
    for t in &grid.thresholds {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            t.m,
            fmt_f64(t.m as f64 / grid.n as f64),
            t.algorithm,
            t.k,
            fmt_f64(t.k as f64 / t.m as f64)
        );
    }
    s
}

pub fn emit_csv(grid: &ResultGrid, path: &Path) -> Result<()> {
    fs::write(path, results_csv(grid))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// `ρ = k/m` of the 95% success threshold against `ζ = m/n`.
    Thresholds,
    SuccessRate,
    DistSupp,
    RelLoss,
    Wasserstein,
    SupportsExplored,
}

impl PlotKind {
    pub fn file_stem(&self) -> &'static str {
        match self {
            PlotKind::Thresholds => "thresholds",
            PlotKind::SuccessRate => "success_rate",
            PlotKind::DistSupp => "dist_supp",
            PlotKind::RelLoss => "rel_l2_loss",
            PlotKind::Wasserstein => "wasserstein",
            PlotKind::SupportsExplored => "supports_explored",
        }
    }

    fn labels(&self) -> (&'static str, &'static str) {
        match self {
            PlotKind::Thresholds => ("m/n", "k/m at 95% success"),
            PlotKind::SuccessRate => ("k", "success rate"),
            PlotKind::DistSupp => ("k", "mean support distance"),
            PlotKind::RelLoss => ("k", "mean relative l2 loss"),
            PlotKind::Wasserstein => ("k", "mean Wasserstein distance"),
            PlotKind::SupportsExplored => ("k", "mean supports explored"),
        }
    }

    fn metric(&self, c: &CellSummary) -> f64 {
        match self {
            PlotKind::Thresholds | PlotKind::SuccessRate => c.success_rate,
            PlotKind::DistSupp => c.mean_dist_supp,
            PlotKind::RelLoss => c.mean_rel_loss,
            PlotKind::Wasserstein => c.mean_wasserstein,
            PlotKind::SupportsExplored => c.mean_supports_explored,
        }
    }
}

type Series = (String, Vec<(f64, f64)>);

fn series(grid: &ResultGrid, kind: PlotKind) -> Vec<Series> {
    grid.algorithms
        .iter()
        .map(|a| {
            let pts = match kind {
                PlotKind::Thresholds => grid
                    .thresholds
                    .iter()
                    .filter(|t| &t.algorithm == a)
                    .map(|t| (t.m as f64 / grid.n as f64, t.k as f64 / t.m as f64))
                    .collect(),
                _ => grid
                    .cells
                    .iter()
                    .filter(|c| &c.algorithm == a)
                    .map(|c| (c.k as f64, kind.metric(c)))
                    .filter(|p| p.1.is_finite())
                    .collect(),
            };
            (a.clone(), pts)
        })
        .collect()
}

const PALETTE: [&str; 10] =
    ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"];
const DASHES: [&str; 2] = ["", " stroke-dasharray=\"6 3\""];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Line plot with a legend of solver ids. Coordinates are printed with
/// fixed precision so the bytes depend only on the data.
pub fn render_svg(title: &str, x_label: &str, y_label: &str, data: &[Series]) -> String {
    let (w, h) = (720.0, 440.0);
    let (left, right, top, bottom) = (70.0, 190.0, 40.0, 50.0);
    let pw = w - left - right;
    let ph = h - top - bottom;
    let pts = data.iter().flat_map(|s| s.1.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y1) = (0.0, 1.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| top + ph - (y - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(s, "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>");
    let _ = writeln!(s, "<text x=\"{:.1}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>", left + pw / 2.0, escape(title));
    let _ = writeln!(
        s,
        "<rect x=\"{left}\" y=\"{top}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"#333\"/>"
    );
    for i in 0..=5 {
        let f = i as f64 / 5.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(
            s,
            "<line x1=\"{px:.2}\" y1=\"{top}\" x2=\"{px:.2}\" y2=\"{:.2}\" stroke=\"#ddd\"/><text x=\"{px:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
            top + ph,
            top + ph + 16.0,
            tick(xv)
        );
        let _ = writeln!(
            s,
            "<line x1=\"{left}\" y1=\"{py:.2}\" x2=\"{:.2}\" y2=\"{py:.2}\" stroke=\"#ddd\"/><text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
            left + pw,
            left - 6.0,
            py + 4.0,
            tick(yv)
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
        left + pw / 2.0,
        h - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        "<text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">{}</text>",
        top + ph / 2.0,
        top + ph / 2.0,
        escape(y_label)
    );
    for (i, (label, pts)) in data.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let dash = DASHES[(i / PALETTE.len()) % DASHES.len()];
        if !pts.is_empty() {
            let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
            let _ = writeln!(
                s,
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"{dash} points=\"{}\"/>",
                path.join(" ")
            );
            for &(x, y) in pts {
                let _ = writeln!(s, "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"{color}\"/>", sx(x), sy(y));
            }
        }
        let ly = top + 10.0 + 18.0 * i as f64;
        let lx = left + pw + 16.0;
        let _ = writeln!(
            s,
            "<line x1=\"{lx:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\" stroke-width=\"2\"{dash}/><text x=\"{:.1}\" y=\"{:.1}\">{}</text>",
            lx + 22.0,
            lx + 28.0,
            ly + 4.0,
            escape(label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-2..1e5).contains(&a) {
        format!("{v:.1e}")
    } else if a >= 100.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

pub fn emit_svg(grid: &ResultGrid, path: &Path, kind: PlotKind) -> Result<()> {
    let (xl, yl) = kind.labels();
    let title = format!("{} (n = {})", grid.kind.replace('_', " "), grid.n);
    fs::write(path, render_svg(&title, xl, yl, &series(grid, kind)))?;
    Ok(())
}

/// Writes the CSV tables and the plots suited to the sweep; returns the
/// paths written, in order.
pub fn write_outputs(grid: &ResultGrid, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: &str, body: String| -> Result<()> {
        let p = dir.join(name);
        fs::write(&p, body)?;
        written.push(p);
        Ok(())
    };
    put("results.csv", results_csv(grid))?;
    put("cells.csv", cells_csv(grid))?;
    let plots: &[PlotKind] = if grid.kind == "phase_transition" {
        put("thresholds.csv", thresholds_csv(grid))?;
        &[PlotKind::Thresholds]
    } else {
        &[PlotKind::DistSupp, PlotKind::RelLoss, PlotKind::Wasserstein, PlotKind::SupportsExplored]
    };
    for kind in plots {
        let (xl, yl) = kind.labels();
        let title = format!("{} (n = {})", grid.kind.replace('_', " "), grid.n);
        put(&format!("{}.svg", kind.file_stem()), render_svg(&title, xl, yl, &series(grid, *kind)))?;
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::super::RunRow;
    use super::*;

    fn row(k: usize, alg: &str) -> RunRow {
        RunRow {
            kind: "deconvolution".into(),
            m: 16,
            n: 16,
            k,
            k_prime: k,
            noise_fraction: 0.1,
            noise_mode: "after_A".into(),
            algorithm: alg.into(),
            run: 0,
            seed: 9,
            success: true,
            dist_supp: 0.0,
            dist_supp_largest: 0.0,
            rel_l2_loss: 0.05,
            wasserstein: 0.0,
            supports_explored: 3,
            supports_after_init: 3,
            t_best: 2,
            loss_best: 1e-3,
            init_loss: None,
            runtime_ms: 0.0,
        }
    }

    #[test]
    fn empty_grid_is_header_only() {
        let g = ResultGrid::default();
        assert_eq!(results_csv(&g), format!("{RESULTS_HEADER}\n"));
    }

    #[test]
    fn two_rows_fixed_width() {
        let g = ResultGrid { rows: vec![row(1, "sea"), row(2, "omp")], ..Default::default() };
        let csv = results_csv(&g);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        let width = RESULTS_HEADER.split(',').count();
        assert!(lines.iter().all(|l| l.split(',').count() == width));
        assert_eq!(lines[1], "deconvolution,16,16,1,1,0.1,after_A,sea,0,9,1,0,0.05,0,3,3,2,0.001,0");
    }

    #[test]
    fn outputs_are_byte_stable() {
        let g = ResultGrid {
            kind: "deconvolution".into(),
            n: 16,
            algorithms: vec!["sea".into()],
            rows: vec![row(1, "sea")],
            ..Default::default()
        };
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let pa = write_outputs(&g, a.path()).unwrap();
        let pb = write_outputs(&g, b.path()).unwrap();
        for (x, y) in pa.iter().zip(&pb) {
            assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap());
        }
        let svg = fs::read_to_string(a.path().join("dist_supp.svg")).unwrap();
        assert!(svg.starts_with("<svg") && svg.contains(">sea</text>"));
    }
}
