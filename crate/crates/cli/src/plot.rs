//! Plot-ready tables derived from run artifacts.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    Fig3,
    Fig4,
    SrProfile,
}

impl PlotKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PlotKind::Fig3 => "fig3",
            PlotKind::Fig4 => "fig4",
            PlotKind::SrProfile => "sr_profile",
        }
    }
}

impl fmt::Display for PlotKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PlotKind {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<PlotKind> {
        match s {
            "fig3" => Ok(PlotKind::Fig3),
            "fig4" => Ok(PlotKind::Fig4),
            "sr_profile" => Ok(PlotKind::SrProfile),
            _ => Err(CliError::Config(format!("unknown plot kind {s:?}"))),
        }
    }
}

/// Copies selected columns of `src` into `dst` under a commented header;
/// a column written `source:name` is renamed on the way.
fn project(src: &Path, dst: &Path, columns: &[&str], comment: &[&str]) -> CliResult<()> {
    if !src.exists() {
        return Err(CliError::MissingArtifact(src.to_path_buf()));
    }
    let mut r = csv::Reader::from_path(src)?;
    let headers = r.headers()?.clone();
    let (sources, names): (Vec<&str>, Vec<&str>) = columns.iter().map(|c| c.split_once(':').unwrap_or((c, c))).unzip();
    let idx: Vec<usize> = sources
        .iter()
        .map(|c| {
            headers
                .iter()
                .position(|h| h == *c)
                .ok_or_else(|| CliError::Config(format!("{} lacks column {c}", src.display())))
        })
        .collect::<CliResult<_>>()?;
    let mut out = fs::File::create(dst)?;
    for line in comment {
        writeln!(out, "# {line}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&names)?;
    for rec in r.records() {
        let rec = rec?;
        w.write_record(idx.iter().map(|i| &rec[*i]))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `plot_<kind>*.csv` next to the run artifacts in `dir`; returns the paths written.
pub fn emit_plotdata(dir: &Path, kind: PlotKind) -> CliResult<Vec<PathBuf>> {
    match kind {
        PlotKind::Fig3 => {
            let dst = dir.join("plot_fig3.csv");
            project(
                &dir.join("fig3.csv"),
                &dst,
                &["epsilon", "A_extracted:A_fit", "A_predicted:A_theory", "precision"],
                &[
                    "epsilon: asymmetry of the right well",
                    "A_fit: large-order amplitude fitted from the exact coefficients",
                    "A_theory: closed-form amplitude",
                    "precision: spread between the two highest fit orders",
                ],
            )?;
            Ok(vec![dst])
        }
        PlotKind::Fig4 => {
            let dst = dir.join("plot_fig4.csv");
            project(
                &dir.join("fig4.csv"),
                &dst,
                &["g2", "level", "dE_num", "dE_valley", "precision"],
                &[
                    "g2: coupling squared",
                    "level: right-well level index",
                    "dE_num: diagonalization energy minus its zeroth order",
                    "dE_valley: order alpha^2 valley prediction",
                    "precision: eigenvalue change under the last basis doubling",
                ],
            )?;
            Ok(vec![dst])
        }
        PlotKind::SrProfile => {
            let a = dir.join("plot_sr_profile.csv");
            let b = dir.join("plot_sr_jacobian.csv");
            project(
                &dir.join("valley_profile.csv"),
                &a,
                &["R", "S", "lambda", "precision"],
                &[
                    "R: pair separation",
                    "S: g^2 times the action",
                    "lambda: valley eigenvalue",
                    "precision: valley-equation defect relative to max |F|",
                ],
            )?;
            project(
                &dir.join("valley_jacobian.csv"),
                &b,
                &["t", "F", "f", "precision"],
                &[
                    "t: S(R)",
                    "F: 1/(dS/dR)",
                    "f: F sqrt(2t) (1/3 - t)",
                    "precision: spread of F between one-sided differences",
                ],
            )?;
            Ok(vec![a, b])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_source_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        match emit_plotdata(dir.path(), PlotKind::SrProfile) {
            Err(CliError::MissingArtifact(p)) => assert!(p.ends_with("valley_profile.csv")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn projection_keeps_requested_columns() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("fig3.csv"), "epsilon,A_extracted,A_predicted,rel_err,precision,pass\n0.5,1.0,1.1,-0.09,1e-3,false\n").unwrap();
        let out = emit_plotdata(dir.path(), PlotKind::Fig3).unwrap();
        let text = fs::read_to_string(&out[0]).unwrap();
        let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body, ["epsilon,A_fit,A_theory,precision", "0.5,1.0,1.1,1e-3"]);
    }
}
