//! Output directory handling: CSV/summary/SVG emission and the checksum
//! manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use sha2::{Digest, Sha256};

use netlqr::decomposition::decompose;
use netlqr::simulator::Trajectory;
use netlqr::SpectralData;

use crate::CliError;

/// Collects written files so the manifest can list them with checksums.
pub struct OutputDir {
    dir: PathBuf,
    files: Vec<FileEntry>,
}

struct FileEntry {
    name: String,
    sha256: String,
    bytes: usize,
}

impl OutputDir {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::validation(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents)
            .map_err(|e| CliError::validation(format!("cannot write {}: {e}", path.display())))?;
        let digest = Sha256::digest(contents.as_bytes());
        let mut sha256 = String::with_capacity(64);
        for b in digest {
            write!(sha256, "{b:02x}").unwrap();
        }
        self.files.push(FileEntry {
            name: name.to_string(),
            sha256,
            bytes: contents.len(),
        });
        Ok(())
    }

    /// Write `manifest.json` listing every emitted file.
    pub fn finish(self) -> Result<(), CliError> {
        let entries: Vec<serde_json::Value> = self
            .files
            .iter()
            .map(|f| {
                serde_json::json!({
                    "name": f.name,
                    "sha256": f.sha256,
                    "bytes": f.bytes,
                })
            })
            .collect();
        let manifest = serde_json::json!({ "files": entries });
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        let path = self.dir.join("manifest.json");
        std::fs::write(&path, text)
            .map_err(|e| CliError::validation(format!("cannot write {}: {e}", path.display())))?;
        Ok(())
    }
}

fn push_row(out: &mut String, time: f64, node: usize, kind: &str, values: &[f64]) {
    write!(out, "{time:.9}").unwrap();
    write!(out, ",{node},{kind}").unwrap();
    for v in values {
        write!(out, ",{v:.12e}").unwrap();
    }
    out.push('\n');
}

/// Trajectory CSV: one row per (time, node, component kind), components being
/// the raw state, each eigenstate, and the auxiliary state, with the control
/// split the same way. `stride` thins the time grid.
pub fn trajectory_csv(
    traj: &Trajectory,
    spec: &SpectralData,
    stride: usize,
) -> Result<String, CliError> {
    let d_x = traj.states[0].nrows();
    let d_u = traj.controls[0].nrows();
    let mut out = String::from("time,node,kind");
    for k in 0..d_x {
        write!(out, ",x{k}").unwrap();
    }
    for k in 0..d_u {
        write!(out, ",u{k}").unwrap();
    }
    out.push('\n');

    let n = traj.states[0].ncols();
    let last = traj.times.len() - 1;
    for (k, &t) in traj.times.iter().enumerate() {
        if k % stride != 0 && k != last {
            continue;
        }
        let x = &traj.states[k];
        let u = &traj.controls[k];
        let dx = decompose(x, spec)?;
        let du = decompose(u, spec)?;
        for i in 0..n {
            let mut row: Vec<f64> = x.column(i).iter().copied().collect();
            row.extend(u.column(i).iter());
            push_row(&mut out, t, i, "raw", &row);
            for l in 0..spec.rank() {
                let mut row: Vec<f64> = dx.eigen[l].column(i).iter().copied().collect();
                row.extend(du.eigen[l].column(i).iter());
                push_row(&mut out, t, i, &format!("eigen{l}"), &row);
            }
            let mut row: Vec<f64> = dx.auxiliary.column(i).iter().copied().collect();
            row.extend(du.auxiliary.column(i).iter());
            push_row(&mut out, t, i, "auxiliary", &row);
        }
    }
    Ok(out)
}

/// Spectrum CSV: eigenvalue index, group, eigenvalue, eigenvector entries.
pub fn spectrum_csv(spec: &SpectralData) -> String {
    let mut out = String::from("l,group,eigenvalue");
    for i in 0..spec.n() {
        write!(out, ",v{i}").unwrap();
    }
    out.push('\n');
    for l in 0..spec.rank() {
        write!(out, "{l},{},{:.12e}", spec.group_of(l), spec.eigenvalues()[l]).unwrap();
        for i in 0..spec.n() {
            write!(out, ",{:.12e}", spec.eigenvector(l)[i]).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Gain CSV: one row per (time, component, matrix entry).
pub fn gains_csv(
    times: &[f64],
    k_aux: &[DMatrix<f64>],
    k_group: &[Vec<DMatrix<f64>>],
) -> String {
    let mut out = String::from("time,component,row,col,value\n");
    let emit = |t: f64, name: &str, k: &DMatrix<f64>, out: &mut String| {
        for r in 0..k.nrows() {
            for c in 0..k.ncols() {
                writeln!(out, "{t:.9},{name},{r},{c},{:.12e}", k[(r, c)]).unwrap();
            }
        }
    };
    for (idx, &t) in times.iter().enumerate() {
        emit(t, "aux", &k_aux[idx], &mut out);
        for (g, samples) in k_group.iter().enumerate() {
            emit(t, &format!("group{g}"), &samples[idx], &mut out);
        }
    }
    out
}

/// Minimal SVG line chart: one polyline per series over a shared time axis.
pub fn svg_chart(title: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    const W: f64 = 800.0;
    const H: f64 = 420.0;
    const PAD: f64 = 45.0;
    const COLORS: [&str; 8] = [
        "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
    ];

    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for (_, pts) in series {
        for &(x, y) in pts {
            x_min = x_min.min(x);
            x_max = x_max.max(x);
            y_min = y_min.min(y);
            y_max = y_max.max(y);
        }
    }
    if !x_min.is_finite() {
        x_min = 0.0;
        x_max = 1.0;
        y_min = 0.0;
        y_max = 1.0;
    }
    if (y_max - y_min).abs() < 1e-15 {
        y_max = y_min + 1.0;
    }
    let sx = |x: f64| PAD + (x - x_min) / (x_max - x_min) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y_min) / (y_max - y_min) * (H - 2.0 * PAD);

    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {W} {H}\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{title}</text>\n",
        W / 2.0
    );
    // axes
    write!(
        out,
        "<line x1=\"{PAD}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"black\"/>\n\
         <line x1=\"{PAD}\" y1=\"{PAD}\" x2=\"{PAD}\" y2=\"{0}\" stroke=\"black\"/>\n\
         <text x=\"{PAD}\" y=\"{2}\" font-size=\"10\">{x_min:.2}</text>\n\
         <text x=\"{1}\" y=\"{2}\" text-anchor=\"end\" font-size=\"10\">{x_max:.2}</text>\n\
         <text x=\"5\" y=\"{0}\" font-size=\"10\">{y_min:.2}</text>\n\
         <text x=\"5\" y=\"{PAD}\" font-size=\"10\">{y_max:.2}</text>\n",
        H - PAD,
        W - PAD,
        H - PAD + 14.0
    )
    .unwrap();
    for (idx, (name, pts)) in series.iter().enumerate() {
        let color = COLORS[idx % COLORS.len()];
        write!(out, "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1\" points=\"").unwrap();
        for &(x, y) in pts {
            write!(out, "{:.2},{:.2} ", sx(x), sy(y)).unwrap();
        }
        writeln!(out, "\"><title>{name}</title></polyline>").unwrap();
    }
    out.push_str("</svg>\n");
    out
}
