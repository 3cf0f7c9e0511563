use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::RunConfig;
use crate::error::{Error, Result};
use crate::forward::FullField;
use crate::fracops::TimeGrid;
use crate::modesolver::{ModeField, SpaceGrid};

/// Shortest decimal that round-trips to the same `f64`.
pub fn full(x: f64) -> String {
    format!("{x:?}")
}

/// `printf("%.{sig}g")`.
pub fn format_g(x: f64, sig: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sig = sig.max(1);
    let e_form = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp) = e_form.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= sig as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", strip_zeros(mantissa), exp.abs())
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        strip_zeros(&format!("{x:.decimals$}"))
    }
}

fn strip_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// `t,x,<name>` rows of an `nt × nx` field.
pub fn write_tx_csv(
    path: &Path,
    name: &str,
    values: &Array2<f64>,
    time: &TimeGrid,
    space: &SpaceGrid,
) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "t,x,{name}")?;
    for ((i, j), v) in values.indexed_iter() {
        writeln!(w, "{},{},{}", full(time.t(i)), full(space.x(j)), full(*v))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_mode_csv(dir: &Path, mode: &ModeField) -> Result<PathBuf> {
    let path = dir.join(format!("mode_{}.csv", mode.k));
    write_tx_csv(
        &path,
        &format!("u_{}", mode.k),
        &mode.values,
        &mode.time,
        &mode.space,
    )?;
    Ok(path)
}

/// `t,x,y,u` on the quadrature `y`-nodes.
pub fn write_full_csv(path: &Path, field: &FullField) -> Result<()> {
    let grid = field.to_grid();
    let time = field.state.time();
    let space = field.state.space();
    let mut w = create(path)?;
    writeln!(w, "t,x,y,u")?;
    for ((i, j, n), v) in grid.indexed_iter() {
        writeln!(
            w,
            "{},{},{},{}",
            full(time.t(i)),
            full(space.x(j)),
            full(field.y_nodes[n]),
            full(*v)
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Reads `t,x,psi` rows back into an `nt × nx` array (row-major order).
pub fn read_psi_csv(path: &Path, nt: usize, nx: usize) -> Result<Array2<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut values = Vec::with_capacity(nt * nx);
    for (n, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let last = line
            .rsplit(',')
            .next()
            .ok_or_else(|| Error::Data(format!("{}:{}: empty row", path.display(), n + 1)))?;
        let v: f64 = last.trim().parse().map_err(|_| {
            Error::Data(format!("{}:{}: bad value `{last}`", path.display(), n + 1))
        })?;
        values.push(v);
    }
    if values.len() != nt * nx {
        return Err(Error::Grid(format!(
            "{} holds {} samples, the grid needs {nt}x{nx}",
            path.display(),
            values.len()
        )));
    }
    Array2::from_shape_vec((nt, nx), values).map_err(|e| Error::Data(e.to_string()))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Record of one run; rewritten at start (status `running`) and at exit.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub status: String,
    pub exit_code: Option<i32>,
    pub config: RunConfig,
    pub timings: BTreeMap<String, f64>,
    pub files: Vec<FileEntry>,
    pub messages: Vec<String>,
}

impl RunManifest {
    pub fn start(config: &RunConfig) -> Result<Self> {
        std::fs::create_dir_all(&config.output)?;
        let m = Self {
            tool: "fracinv",
            version: env!("CARGO_PKG_VERSION"),
            status: "running".into(),
            exit_code: None,
            config: config.clone(),
            timings: BTreeMap::new(),
            files: Vec::new(),
            messages: Vec::new(),
        };
        m.save()?;
        Ok(m)
    }

    pub fn path(&self) -> PathBuf {
        self.config.output.join("manifest.json")
    }

    pub fn save(&self) -> Result<()> {
        write_json(&self.path(), self)
    }

    pub fn record(&mut self, path: &Path) -> Result<()> {
        let bytes = std::fs::metadata(path)?.len();
        let name = path
            .strip_prefix(&self.config.output)
            .unwrap_or(path)
            .display()
            .to_string();
        self.files.push(FileEntry {
            path: name,
            bytes,
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    pub fn finish(&mut self, status: &str, exit_code: i32) -> Result<()> {
        self.status = status.to_string();
        self.exit_code = Some(exit_code);
        self.save()
    }
}
