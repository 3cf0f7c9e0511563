use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inverse::{DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::problem::ProblemParams;
use crate::spectral::{DEFAULT_EPSILON, DEFAULT_MODES};
use crate::verify::{default_params, StudyTarget};

/// Keys accepted in a JSON config file. Every key can also be given as a flag,
/// which takes precedence.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub case: Option<String>,
    pub alpha: Option<f64>,
    #[serde(rename = "T", alias = "t_final")]
    pub t_final: Option<f64>,
    pub l0: Option<f64>,
    pub epsilon: Option<f64>,
    #[serde(rename = "K", alias = "modes")]
    pub modes: Option<usize>,
    pub nt: Option<usize>,
    pub nx: Option<usize>,
    pub ny: Option<usize>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub noise_level: Option<f64>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub dump_full: Option<bool>,
    pub dump_modes: Option<bool>,
    pub fine_factor: Option<usize>,
    pub psi_file: Option<PathBuf>,
    pub target: Option<StudyTarget>,
    pub ladder: Option<Vec<[usize; 2]>>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Fields of `other` that are set replace those of `self`.
    pub fn overlay(self, other: ConfigFile) -> ConfigFile {
        macro_rules! pick {
            ($($f:ident),*) => {
                ConfigFile { $($f: other.$f.or(self.$f)),* }
            };
        }
        pick!(
            case,
            alpha,
            t_final,
            l0,
            epsilon,
            modes,
            nt,
            nx,
            ny,
            tol,
            max_iter,
            noise_level,
            seed,
            output,
            dump_full,
            dump_modes,
            fine_factor,
            psi_file,
            target,
            ladder
        )
    }
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub case: String,
    pub params: ProblemParams,
    pub tol: f64,
    pub max_iter: usize,
    pub noise_level: f64,
    pub seed: u64,
    pub output: PathBuf,
    pub dump_full: bool,
    pub dump_modes: bool,
    pub fine_factor: usize,
    pub psi_file: Option<PathBuf>,
    pub target: StudyTarget,
    pub ladder: Vec<[usize; 2]>,
}

pub const DEFAULT_CASE: &str = "MMS-1";
pub const DEFAULT_OUTPUT: &str = "fracinv-out";

impl RunConfig {
    pub fn resolve(command: &str, file: ConfigFile) -> Result<Self> {
        let case = file.case.unwrap_or_else(|| DEFAULT_CASE.to_string());
        let base = default_params(&case)?;
        let modes = file.modes.unwrap_or(DEFAULT_MODES);
        let params = ProblemParams {
            alpha: file.alpha.unwrap_or(base.alpha),
            t_final: file.t_final.unwrap_or(base.t_final),
            l0: file.l0.unwrap_or(base.l0),
            modes,
            epsilon: file.epsilon.unwrap_or(DEFAULT_EPSILON),
            nt: file.nt.unwrap_or(base.nt),
            nx: file.nx.unwrap_or(base.nx),
            ny: file.ny.unwrap_or(ProblemParams::default_ny(modes)),
        };
        params
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        let tol = file.tol.unwrap_or(DEFAULT_TOL);
        if !(tol > 0.0) {
            return Err(Error::Config(format!("tol must be positive, got {tol}")));
        }
        let max_iter = file.max_iter.unwrap_or(DEFAULT_MAX_ITER);
        if max_iter < 1 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        let noise_level = file.noise_level.unwrap_or(0.0);
        if !(noise_level >= 0.0) {
            return Err(Error::Config(format!(
                "noise_level must be non-negative, got {noise_level}"
            )));
        }
        let fine_factor = file.fine_factor.unwrap_or(1);
        if fine_factor < 1 {
            return Err(Error::Config("fine_factor must be at least 1".into()));
        }
        let ladder = file
            .ladder
            .unwrap_or_else(|| vec![[17, 17], [33, 33], [65, 65]]);
        Ok(Self {
            command: command.to_string(),
            case,
            params,
            tol,
            max_iter,
            noise_level,
            seed: file.seed.unwrap_or(0),
            output: file.output.unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT)),
            dump_full: file.dump_full.unwrap_or(false),
            dump_modes: file.dump_modes.unwrap_or(false),
            fine_factor,
            psi_file: file.psi_file,
            target: file.target.unwrap_or(StudyTarget::Forward),
            ladder,
        })
    }
}

/// Parses `33x33,65x65,...` into `(nt, nx)` pairs.
pub fn parse_ladder(s: &str) -> Result<Vec<[usize; 2]>> {
    s.split(',')
        .map(|level| {
            let (a, b) = level
                .trim()
                .split_once('x')
                .ok_or_else(|| Error::Config(format!("ladder level `{level}` is not NTxNX")))?;
            let nt = a
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad nt in `{level}`")))?;
            let nx = b
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad nx in `{level}`")))?;
            Ok([nt, nx])
        })
        .collect()
}
