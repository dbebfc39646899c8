//! Parameter-sweep engine with CSV/JSON export.
//!
//! A sweep evaluates observables over a 1-D or 2-D grid of the parameters
//! `v, w, u, L, E`. Cells are computed in parallel and failures are
//! recorded per cell instead of aborting the run; output files are
//! deterministic (no timestamps, fixed 12-significant-digit formatting).

use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::branchpoints::{critical_coupling, critical_lengths, BranchPoint};
use crate::error::{Error, Result};
use crate::fmt_g12;
use crate::model::{
    build_effective_hamiltonian_from, channel_from_energy, closed_spectrum, DoubleDotSpec,
};
use crate::spectral::{
    eigendecompose, solve_fixed_points, track_trajectories, EigenSet, ResonanceState, Trajectories,
};
use crate::transmission::transmission_resolvent_from;

/// A sweepable parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParam {
    #[serde(rename = "v")]
    V,
    #[serde(rename = "w")]
    W,
    #[serde(rename = "u")]
    U,
    #[serde(rename = "L")]
    L,
    #[serde(rename = "E")]
    E,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::V => "v",
            SweepParam::W => "w",
            SweepParam::U => "u",
            SweepParam::L => "L",
            SweepParam::E => "E",
        }
    }
}

/// Write parameter values into a spec/energy pair.
///
/// `v` drives both lead couplings when the base spec is symmetric and `w`
/// is not driven separately — the symmetric studies sweep "the" coupling,
/// while `(v, w)` grids control the two leads independently.
pub fn apply_params(spec: &mut DoubleDotSpec, energy: &mut f64, values: &[(SweepParam, f64)]) {
    let drives_w = values.iter().any(|(p, _)| *p == SweepParam::W);
    let symmetric = spec.lead_coupling_left == spec.lead_coupling_right;
    for &(p, x) in values {
        match p {
            SweepParam::V => {
                spec.lead_coupling_left = x;
                if symmetric && !drives_w {
                    spec.lead_coupling_right = x;
                }
            }
            SweepParam::W => spec.lead_coupling_right = x,
            SweepParam::U => spec.internal_coupling = x,
            SweepParam::L => spec.length = x,
            SweepParam::E => *energy = x,
        }
    }
}

/// Energy axes are clipped into the open band with this margin.
pub const E_CLIP: f64 = 1e-6;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Axis {
    pub param: SweepParam,
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Axis {
    pub fn new(param: SweepParam, min: f64, max: f64, points: usize) -> Self {
        Axis { param, min, max, points }
    }

    fn validate(&self) -> Result<()> {
        if self.points == 0 {
            return Err(Error::Config(format!(
                "axis {}: points must be >= 1",
                self.param.name()
            )));
        }
        if !(self.min.is_finite() && self.max.is_finite()) {
            return Err(Error::Config(format!(
                "axis {}: non-finite bounds",
                self.param.name()
            )));
        }
        if self.points > 1 && !(self.min < self.max) {
            return Err(Error::Config(format!(
                "axis {}: need min < max",
                self.param.name()
            )));
        }
        Ok(())
    }

    /// Grid values; energy axes are clipped to `(-2 + 1e-6, 2 - 1e-6)`.
    pub fn values(&self) -> Vec<f64> {
        let (mut lo, mut hi) = (self.min, self.max);
        if self.param == SweepParam::E {
            lo = lo.max(-2.0 + E_CLIP);
            hi = hi.min(2.0 - E_CLIP);
        }
        if self.points == 1 {
            return vec![lo];
        }
        (0..self.points)
            .map(|i| lo + (hi - lo) * i as f64 / (self.points - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    /// `T = |t|^2` per cell.
    Transmission,
    /// Labeled eigenvalue trajectories along axis1, one set per axis2 value.
    Eigenvalues,
    /// Minimum phase rigidity per cell.
    Rigidity,
    /// Fixed-point resonances of the base spec (axis-independent).
    FixedPoints,
    /// Analytic branch points of the base spec (axis-independent).
    BranchPoints,
}

impl Observable {
    pub fn name(&self) -> &'static str {
        match self {
            Observable::Transmission => "transmission",
            Observable::Eigenvalues => "eigenvalues",
            Observable::Rigidity => "rigidity",
            Observable::FixedPoints => "fixed_points",
            Observable::BranchPoints => "branch_points",
        }
    }
}

fn default_energy() -> f64 {
    0.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    pub spec: DoubleDotSpec,
    pub axis1: Axis,
    #[serde(default)]
    pub axis2: Option<Axis>,
    /// Energy used when `E` is not an axis.
    #[serde(default = "default_energy")]
    pub energy: f64,
    pub observables: Vec<Observable>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl SweepConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: SweepConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        self.axis1.validate()?;
        if let Some(ax2) = &self.axis2 {
            ax2.validate()?;
            if ax2.param == self.axis1.param {
                return Err(Error::Config("axis1 and axis2 must differ".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CellError {
    pub i: usize,
    pub j: usize,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectorySlice {
    /// The axis2 value this slice was computed at, if a second axis exists.
    pub axis2_value: Option<f64>,
    pub trajectories: Trajectories,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub spec: DoubleDotSpec,
    pub energy: f64,
    pub axis1: Axis,
    pub axis2: Option<Axis>,
    pub axis1_values: Vec<f64>,
    pub axis2_values: Vec<f64>,
    pub observables: Vec<Observable>,
    /// Row-major `[i * n2 + j]` grids; `None` cells failed.
    pub transmission: Option<Vec<Option<f64>>>,
    pub rigidity: Option<Vec<Option<f64>>>,
    pub trajectories: Vec<TrajectorySlice>,
    pub fixed_points: Option<Vec<ResonanceState>>,
    pub branch_points: Option<Vec<BranchPoint>>,
    pub errors: Vec<CellError>,
}

impl SweepResult {
    fn n2(&self) -> usize {
        self.axis2_values.len().max(1)
    }
}

pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let a1 = config.axis1.values();
    let a2: Vec<f64> = config.axis2.as_ref().map(|a| a.values()).unwrap_or_default();
    let n1 = a1.len();
    let n2 = a2.len().max(1);

    let want = |o: Observable| config.observables.contains(&o);
    let mut result = SweepResult {
        spec: config.spec.clone(),
        energy: config.energy,
        axis1: config.axis1.clone(),
        axis2: config.axis2.clone(),
        axis1_values: a1.clone(),
        axis2_values: a2.clone(),
        observables: config.observables.clone(),
        transmission: None,
        rigidity: None,
        trajectories: Vec::new(),
        fixed_points: None,
        branch_points: None,
        errors: Vec::new(),
    };

    let cell_params = |i: usize, j: usize| -> (DoubleDotSpec, f64) {
        let mut spec = config.spec.clone();
        let mut energy = config.energy;
        let mut vals = vec![(config.axis1.param, a1[i])];
        if let Some(ax2) = &config.axis2 {
            vals.push((ax2.param, a2[j]));
        }
        apply_params(&mut spec, &mut energy, &vals);
        (spec, energy)
    };

    // scalar grids
    if want(Observable::Transmission) || want(Observable::Rigidity) {
        struct CellOut {
            t: Option<f64>,
            rig: Option<f64>,
            err: Option<String>,
        }
        let cells: Vec<CellOut> = (0..n1 * n2)
            .into_par_iter()
            .map(|idx| {
                let (i, j) = (idx / n2, idx % n2);
                let (spec, energy) = cell_params(i, j);
                let run = || -> Result<(Option<f64>, Option<f64>)> {
                    let spectrum = closed_spectrum(&spec)?;
                    let t = if want(Observable::Transmission) {
                        Some(transmission_resolvent_from(&spec, &spectrum, energy)?.transmission)
                    } else {
                        None
                    };
                    let rig = if want(Observable::Rigidity) {
                        let ch = channel_from_energy(energy)?;
                        let h = build_effective_hamiltonian_from(&spec, &spectrum, &ch)?;
                        Some(eigendecompose(&h)?.min_rigidity())
                    } else {
                        None
                    };
                    Ok((t, rig))
                };
                match run() {
                    Ok((t, rig)) => CellOut { t, rig, err: None },
                    Err(e) => CellOut {
                        t: None,
                        rig: None,
                        err: Some(e.to_string()),
                    },
                }
            })
            .collect();
        if want(Observable::Transmission) {
            result.transmission = Some(cells.iter().map(|c| c.t).collect());
        }
        if want(Observable::Rigidity) {
            result.rigidity = Some(cells.iter().map(|c| c.rig).collect());
        }
        for (idx, c) in cells.iter().enumerate() {
            if let Some(m) = &c.err {
                result.errors.push(CellError {
                    i: idx / n2,
                    j: idx % n2,
                    message: m.clone(),
                });
            }
        }
    }

    // labeled eigenvalue trajectories along axis1
    if want(Observable::Eigenvalues) {
        for j in 0..n2 {
            let sets: Vec<std::result::Result<EigenSet, String>> = (0..n1)
                .into_par_iter()
                .map(|i| {
                    let (spec, energy) = cell_params(i, j);
                    (|| -> Result<EigenSet> {
                        let ch = channel_from_energy(energy)?;
                        let spectrum = closed_spectrum(&spec)?;
                        let h = build_effective_hamiltonian_from(&spec, &spectrum, &ch)?;
                        eigendecompose(&h)
                    })()
                    .map_err(|e| e.to_string())
                })
                .collect();
            let mut ok = Vec::with_capacity(n1);
            let mut failed = false;
            for (i, s) in sets.into_iter().enumerate() {
                match s {
                    Ok(set) => ok.push(set),
                    Err(m) => {
                        failed = true;
                        result.errors.push(CellError { i, j, message: m });
                    }
                }
            }
            if !failed {
                result.trajectories.push(TrajectorySlice {
                    axis2_value: config.axis2.as_ref().map(|_| a2[j]),
                    trajectories: track_trajectories(&a1, &ok),
                });
            }
        }
    }

    if want(Observable::FixedPoints) {
        let mut all = Vec::new();
        for label in 0..config.spec.dim() {
            match solve_fixed_points(&config.spec, label) {
                Ok(mut roots) => all.append(&mut roots),
                Err(e) => result.errors.push(CellError {
                    i: label,
                    j: usize::MAX,
                    message: e.to_string(),
                }),
            }
        }
        result.fixed_points = Some(all);
    }

    if want(Observable::BranchPoints) {
        let mut all = Vec::new();
        match critical_coupling(&config.spec) {
            Ok(bp) => all.push(bp),
            Err(e) => result.errors.push(CellError {
                i: usize::MAX,
                j: usize::MAX,
                message: e.to_string(),
            }),
        }
        if let Ok(mut bps) = critical_lengths(&config.spec) {
            all.append(&mut bps);
        }
        result.branch_points = Some(all);
    }

    Ok(result)
}

/// Write the result as CSV grids plus JSON side files and a manifest.
/// Returns the written paths. Output is byte-deterministic for a given
/// result.
pub fn export(result: &SweepResult, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::new();

    let write_grid = |name: &str, grid: &[Option<f64>]| -> Result<PathBuf> {
        let path = dir.join(format!("{name}.csv"));
        let mut out = std::io::BufWriter::new(std::fs::File::create(&path)?);
        let n2 = result.n2();
        match &result.axis2 {
            Some(ax2) => writeln!(
                out,
                "{},{},{}",
                result.axis1.param.name(),
                ax2.param.name(),
                name
            )?,
            None => writeln!(out, "{},{}", result.axis1.param.name(), name)?,
        }
        for (idx, cell) in grid.iter().enumerate() {
            let (i, j) = (idx / n2, idx % n2);
            let value = cell.map(fmt_g12).unwrap_or_else(|| "nan".to_string());
            match &result.axis2 {
                Some(_) => writeln!(
                    out,
                    "{},{},{}",
                    fmt_g12(result.axis1_values[i]),
                    fmt_g12(result.axis2_values[j]),
                    value
                )?,
                None => writeln!(out, "{},{}", fmt_g12(result.axis1_values[i]), value)?,
            }
        }
        Ok(path)
    };

    if let Some(grid) = &result.transmission {
        files.push(write_grid("transmission", grid)?);
    }
    if let Some(grid) = &result.rigidity {
        files.push(write_grid("rigidity", grid)?);
    }
    if !result.trajectories.is_empty() {
        let path = dir.join("trajectories.json");
        std::fs::write(&path, serde_json::to_string_pretty(&result.trajectories)?)?;
        files.push(path);
    }
    if let Some(fp) = &result.fixed_points {
        let path = dir.join("fixed_points.json");
        std::fs::write(&path, serde_json::to_string_pretty(fp)?)?;
        files.push(path);
    }
    if let Some(bp) = &result.branch_points {
        let path = dir.join("branch_points.json");
        std::fs::write(&path, serde_json::to_string_pretty(bp)?)?;
        files.push(path);
    }

    let manifest = serde_json::json!({
        "version": env!("CARGO_PKG_VERSION"),
        "spec": result.spec,
        "spec_hash": format!("{:016x}", result.spec.hash_id()),
        "energy": result.energy,
        "axis1": result.axis1,
        "axis2": result.axis2,
        "observables": result.observables,
        "cell_failures": result.errors.len(),
        "errors": result.errors,
        "files": files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect::<Vec<_>>(),
    });
    let mpath = dir.join("manifest.json");
    std::fs::write(&mpath, serde_json::to_string_pretty(&manifest)?)?;
    files.push(mpath);
    Ok(files)
}
