//! Built-in figure-reproduction presets.
//!
//! Each preset id (`fig1` ... `fig14`) expands to one sweep job per panel;
//! [`reproduce_figure`] runs them and writes the data files whose plotted
//! form corresponds to the named figure of the underlying parameter study,
//! together with a manifest of the parameter values.

use std::path::{Path, PathBuf};

use crate::branchpoints::{critical_lengths, critical_u_double_coincidence};
use crate::error::{Error, Result};
use crate::model::DoubleDotSpec;
use crate::sweep::{export, run_sweep, Axis, Observable, SweepConfig, SweepParam};

/// One panel of a figure: a named sweep job.
#[derive(Debug, Clone)]
pub struct FigureJob {
    pub panel: String,
    pub note: String,
    pub config: SweepConfig,
}

pub const FIGURE_IDS: [&str; 14] = [
    "fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10", "fig11",
    "fig12", "fig13", "fig14",
];

/// Detuned reference system: one level per dot at 1, wire `2 - L/5`, L = 3.
fn detuned(v: f64) -> DoubleDotSpec {
    DoubleDotSpec::three_state(1.0, 2.0, -0.2, 3.0, 0.25, v)
}

/// Resonant system: level 0, wire `2 - L/5` at L = 10 so `eps(L) = eps1 = 0`.
fn resonant(v: f64) -> DoubleDotSpec {
    DoubleDotSpec::three_state(0.0, 2.0, -0.2, 10.0, 0.25, v)
}

/// Two levels (1/2, 1) per dot, wire `3/2 - L/7`.
fn two_level_w7(v: f64, length: f64) -> DoubleDotSpec {
    DoubleDotSpec::symmetric(vec![0.5, 1.0], 1.5, -1.0 / 7.0, length, 0.25, v)
}

/// Two levels (1/2, 1) per dot, wire `2 - L/4`.
fn two_level_w4(v: f64, length: f64) -> DoubleDotSpec {
    DoubleDotSpec::symmetric(vec![0.5, 1.0], 2.0, -0.25, length, 0.25, v)
}

/// Five levels per dot, wire `1 - L/8` at L = 1.5.
fn five_level(v: f64) -> DoubleDotSpec {
    DoubleDotSpec::symmetric(
        vec![0.25, 1.0 / 3.0, 0.5, 0.75, 1.0],
        1.0,
        -0.125,
        1.5,
        0.2,
        v,
    )
}

const LINE_PTS: usize = 200;
const GRID_PTS: usize = 150;

fn v_axis() -> Axis {
    Axis::new(SweepParam::V, 0.0, 1.4, LINE_PTS)
}

fn e_axis(points: usize) -> Axis {
    Axis::new(SweepParam::E, -2.0, 2.0, points)
}

fn job(panel: &str, note: &str, config: SweepConfig) -> FigureJob {
    FigureJob {
        panel: panel.to_string(),
        note: note.to_string(),
        config,
    }
}

fn line(spec: DoubleDotSpec, axis: Axis, energy: f64) -> SweepConfig {
    SweepConfig {
        spec,
        axis1: axis,
        axis2: None,
        energy,
        observables: vec![Observable::Eigenvalues, Observable::Rigidity],
        output: None,
    }
}

fn t_grid(spec: DoubleDotSpec, axis1: Axis, axis2: Axis) -> SweepConfig {
    SweepConfig {
        spec,
        axis1,
        axis2: Some(axis2),
        energy: 0.0,
        observables: vec![Observable::Transmission],
        output: None,
    }
}

fn t_line(spec: DoubleDotSpec, axis: Axis, energy: f64) -> SweepConfig {
    SweepConfig {
        spec,
        axis1: axis,
        axis2: None,
        energy,
        observables: vec![Observable::Transmission],
        output: None,
    }
}

/// Expand a figure id into its panel jobs.
pub fn figure_jobs(id: &str) -> Result<Vec<FigureJob>> {
    let jobs = match id {
        // eigenvalue trajectories vs v at the coalescence energy of the
        // detuned system (v_c = 0.9013, E_c = 0.9847)
        "fig1" => vec![job(
            "a_b",
            "eigenvalue trajectories vs v at E = E_c = 0.9847; detuned dot",
            line(detuned(0.0), v_axis(), 0.9847),
        )],
        // transmission vs (v, E); panel b with u = u_c so that the
        // coalescence energy coincides with the fixed point at E = 7/5
        "fig2" => {
            let uc = critical_u_double_coincidence(&detuned(0.0))?.params["u"];
            vec![
                job(
                    "a",
                    "transmission vs (v, E), detuned dot, u = 1/4",
                    t_grid(detuned(0.0), v_axis_grid(), e_axis(GRID_PTS)),
                ),
                job(
                    "b",
                    "transmission vs (v, E) at u = u_c where E_c = E_k = 7/5",
                    t_grid(
                        detuned(0.0).with_internal_coupling(uc),
                        v_axis_grid(),
                        e_axis(GRID_PTS),
                    ),
                ),
            ]
        }
        // symmetric resonant case eps(L) = eps1 = 0, E = 0
        "fig3" => vec![job(
            "a_b",
            "eigenvalue trajectories vs v at E = 0; resonant dot, v_c = 0.8409",
            line(resonant(0.0), v_axis(), 0.0),
        )],
        "fig4" => {
            let mut jobs = vec![job(
                "a",
                "transmission vs (v, E), resonant dot",
                t_grid(resonant(0.0), v_axis_grid(), e_axis(GRID_PTS)),
            )];
            for v in [0.2, 0.53, 0.83] {
                jobs.push(job(
                    &format!("b_v{v}"),
                    &format!("transmission vs E at v = {v}; v = 0.53 is the perfect filter"),
                    t_line(resonant(v), e_axis(LINE_PTS), 0.0),
                ));
            }
            jobs
        }
        // trajectories vs wire length at four energies around E_c = +-sqrt(2)
        "fig5" => {
            let sqrt2 = std::f64::consts::SQRT_2;
            let panels = [
                ("a_b", -sqrt2 - 0.1),
                ("c_d", -sqrt2),
                ("e_f", -sqrt2 + 0.1),
                ("g_h", sqrt2),
            ];
            panels
                .iter()
                .map(|&(p, e)| {
                    job(
                        p,
                        &format!("eigenvalue trajectories vs L at E = {e:.5}; v = 1"),
                        line(
                            detuned(1.0),
                            Axis::new(SweepParam::L, 0.0, 10.0, LINE_PTS),
                            e,
                        ),
                    )
                })
                .collect()
        }
        // transmission around the second critical length L = 8.5355
        "fig6" => {
            let bps = critical_lengths(&detuned(1.0))?;
            let l2c = bps.last().unwrap().params["L"];
            vec![
                job(
                    "a",
                    "transmission vs (E, v) at the second critical length",
                    t_grid(
                        detuned(0.0).with_length(l2c),
                        e_axis(GRID_PTS),
                        Axis::new(SweepParam::V, 0.0, 1.4, GRID_PTS),
                    ),
                ),
                job(
                    "b",
                    "transmission vs E at v = 0.85: one narrow peak on a broad background",
                    t_line(detuned(0.85).with_length(l2c), e_axis(LINE_PTS), 0.0),
                ),
            ]
        }
        // trajectories vs E around the first critical length L = 1.4645
        "fig7" => {
            let bps = critical_lengths(&detuned(1.0))?;
            let l1c = bps.first().unwrap().params["L"];
            [("a_b", l1c - 0.1), ("c_d", l1c), ("e_f", l1c + 0.1)]
                .iter()
                .map(|&(p, l)| {
                    job(
                        p,
                        &format!("eigenvalue trajectories vs E at L = {l:.4}; v = 1"),
                        line(detuned(1.0).with_length(l), e_axis(LINE_PTS), 0.0),
                    )
                })
                .collect()
        }
        // asymmetric couplings: Re z vs w (left column) and T(v, w) grids
        // (right column) at three energies
        "fig8" => {
            let base = DoubleDotSpec::three_state(1.0, 2.0, -0.2, 4.0, 0.15, 0.0);
            let cases = [("a", "b", 0.1, 1.0), ("c", "d", 0.06, 0.92), ("e", "f", 0.1, 1.26)];
            let mut jobs = Vec::new();
            for (pl, pr, v, e) in cases {
                jobs.push(job(
                    pl,
                    &format!("eigenvalue trajectories vs w at v = {v}, E = {e}"),
                    line(
                        base.with_couplings(v, 0.0),
                        Axis::new(SweepParam::W, 0.0, 1.4, LINE_PTS),
                        e,
                    ),
                ));
                jobs.push(job(
                    pr,
                    &format!("transmission vs (v, w) at E = {e}"),
                    SweepConfig {
                        spec: base.clone(),
                        axis1: Axis::new(SweepParam::V, 0.0, 1.0, GRID_PTS),
                        axis2: Some(Axis::new(SweepParam::W, 0.0, 1.0, GRID_PTS)),
                        energy: e,
                        observables: vec![Observable::Transmission],
                        output: None,
                    },
                ));
            }
            jobs
        }
        // two-level dots: T(E, L) for four couplings, wire 3/2 - L/7
        "fig9" => [0.25, 0.5, 0.75, 1.0]
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                job(
                    &char::from(b'a' + i as u8).to_string(),
                    &format!("transmission vs (E, L) at v = {v}; zero fixed at E = 3/4"),
                    t_grid(
                        two_level_w7(v, 0.0),
                        e_axis(GRID_PTS),
                        Axis::new(SweepParam::L, 0.0, 10.0, GRID_PTS),
                    ),
                )
            })
            .collect(),
        // two-level dots: trajectories vs L at E = 0.25
        "fig10" => [("a_b", 0.35), ("c_d", 0.8), ("e_f", 1.1)]
            .iter()
            .map(|&(p, v)| {
                job(
                    p,
                    &format!("eigenvalue trajectories vs L at v = {v}, E = 0.25"),
                    line(
                        two_level_w7(v, 0.0),
                        Axis::new(SweepParam::L, 0.0, 10.0, LINE_PTS),
                        0.25,
                    ),
                )
            })
            .collect(),
        // two-level dots, wire 2 - L/4: T(v, E) at L = 2 and 5
        "fig11" => [("a", 2.0), ("b", 5.0)]
            .iter()
            .map(|&(p, l)| {
                job(
                    p,
                    &format!("transmission vs (v, E) at L = {l}; zero fixed at E = 3/4"),
                    t_grid(two_level_w4(0.0, l), v_axis_grid(), e_axis(GRID_PTS)),
                )
            })
            .collect(),
        // two-level dots: trajectories vs v at E = 3/4 for three lengths;
        // the outermost pair coalesces only at L = 3.03
        "fig12" => [("a_b", 0.7), ("c_d", 2.0), ("e_f", 3.03)]
            .iter()
            .map(|&(p, l)| {
                job(
                    p,
                    &format!("eigenvalue trajectories vs v at L = {l}, E = 0.75"),
                    line(two_level_w4(0.0, l), v_axis(), 0.75),
                )
            })
            .collect(),
        // five-level dots: T(v, E), four coupling-independent zeros
        "fig13" => vec![job(
            "a",
            "transmission vs (v, E), five levels per dot, L = 1.5",
            t_grid(five_level(0.0), v_axis_grid(), e_axis(GRID_PTS)),
        )],
        // five-level dots: the 11 trajectories vs v at E = 0
        "fig14" => vec![job(
            "a_b",
            "eigenvalue trajectories vs v at E = 0, five levels per dot",
            line(five_level(0.0), v_axis(), 0.0),
        )],
        other => return Err(Error::UnknownFigure(other.to_string())),
    };
    Ok(jobs)
}

fn v_axis_grid() -> Axis {
    Axis::new(SweepParam::V, 0.0, 1.4, GRID_PTS)
}

/// Run every panel of a figure and write its data files under
/// `out_dir/<id>/<panel>/`, plus a figure-level manifest. Returns all
/// written paths.
pub fn reproduce_figure(id: &str, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let jobs = figure_jobs(id)?;
    let fig_dir = out_dir.join(id);
    std::fs::create_dir_all(&fig_dir)?;
    let mut files = Vec::new();
    let mut panels = Vec::new();
    for j in &jobs {
        let result = run_sweep(&j.config)?;
        let panel_dir = fig_dir.join(&j.panel);
        files.extend(export(&result, &panel_dir)?);
        panels.push(serde_json::json!({
            "panel": j.panel,
            "note": j.note,
            "spec": j.config.spec,
            "energy": j.config.energy,
            "axis1": j.config.axis1,
            "axis2": j.config.axis2,
            "cell_failures": result.errors.len(),
        }));
    }
    let manifest = serde_json::json!({
        "figure": id,
        "version": env!("CARGO_PKG_VERSION"),
        "panels": panels,
    });
    let mpath = fig_dir.join("figure.json");
    std::fs::write(&mpath, serde_json::to_string_pretty(&manifest)?)?;
    files.push(mpath);
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn all_ids_expand() {
        for id in FIGURE_IDS {
            let jobs = figure_jobs(id).unwrap();
            assert!(!jobs.is_empty(), "{id}");
            for j in &jobs {
                j.config.validate().unwrap();
            }
        }
        assert!(matches!(
            figure_jobs("fig15"),
            Err(Error::UnknownFigure(_))
        ));
    }

    #[test]
    fn preset_parameters_match_captions() {
        let fig1 = &figure_jobs("fig1").unwrap()[0].config;
        assert_eq!(fig1.spec.left_levels, vec![1.0]);
        assert_abs_diff_eq!(fig1.spec.wire_level(), 1.4, epsilon = 1e-15);
        assert_eq!(fig1.spec.internal_coupling, 0.25);
        assert_abs_diff_eq!(fig1.energy, 0.9847, epsilon = 1e-12);

        let fig3 = &figure_jobs("fig3").unwrap()[0].config;
        assert_eq!(fig3.spec.wire_level(), 0.0);
        assert_eq!(fig3.energy, 0.0);

        let fig5 = figure_jobs("fig5").unwrap();
        assert_eq!(fig5.len(), 4);
        assert_abs_diff_eq!(fig5[3].config.energy, std::f64::consts::SQRT_2, epsilon = 1e-15);

        let fig9 = figure_jobs("fig9").unwrap();
        assert_eq!(fig9.len(), 4);
        assert_eq!(fig9[0].config.spec.left_levels, vec![0.5, 1.0]);
        assert_abs_diff_eq!(
            fig9[0].config.spec.with_length(7.0).wire_level(),
            0.5,
            epsilon = 1e-12
        );

        let fig12 = figure_jobs("fig12").unwrap();
        assert_eq!(fig12[2].config.spec.length, 3.03);
        assert_eq!(fig12[2].config.energy, 0.75);

        let fig13 = &figure_jobs("fig13").unwrap()[0].config;
        assert_eq!(fig13.spec.left_levels.len(), 5);
        assert_abs_diff_eq!(fig13.spec.wire_level(), 1.0 - 1.5 / 8.0, epsilon = 1e-15);
    }

    #[test]
    fn fig1_trajectories_coalesce_near_vc() {
        // shrink the sweep for test speed, keep the physics
        let mut cfg = figure_jobs("fig1").unwrap()[0].config.clone();
        cfg.axis1.points = 120;
        let res = run_sweep(&cfg).unwrap();
        let traj = &res.trajectories[0].trajectories;
        // minimum gap between the outer branches along v
        let mut vmin = f64::NAN;
        let mut gmin = f64::INFINITY;
        for (p1, p3) in traj.series[0].points.iter().zip(&traj.series[2].points) {
            let g = ((p1.re_z - p3.re_z).powi(2) + (p1.im_z - p3.im_z).powi(2)).sqrt();
            if g < gmin {
                gmin = g;
                vmin = p1.param;
            }
        }
        assert_abs_diff_eq!(vmin, 0.9013, epsilon = 0.02);
    }

    #[test]
    fn reproduce_writes_files_and_manifest() {
        let tmp = tempfile::tempdir().unwrap();
        let files = reproduce_figure("fig1", tmp.path()).unwrap();
        assert!(files.iter().any(|f| f.ends_with("figure.json")));
        assert!(tmp.path().join("fig1/a_b/trajectories.json").exists());
        assert!(tmp.path().join("fig1/a_b/manifest.json").exists());
        let manifest: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(tmp.path().join("fig1/figure.json")).unwrap())
                .unwrap();
        assert_eq!(manifest["figure"], "fig1");
        assert_eq!(manifest["panels"][0]["cell_failures"], 0);
        assert!(matches!(
            reproduce_figure("nope", tmp.path()),
            Err(Error::UnknownFigure(_))
        ));
    }
}
