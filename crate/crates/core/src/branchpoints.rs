//! Branch points (exceptional points) of the effective Hamiltonian:
//! closed-form coalescence conditions for the three-state system and a
//! numeric two-parameter search for general N-state systems.
//!
//! For one level per dot with `v = w` the two mixing eigenvalues coalesce
//! where the discriminant
//! `F(E) = ((eps(L) - eps1 + v^2 e^{ik}) / 2)^2 + 2 u^2`
//! vanishes. Solving `F = 0` for one parameter at a time gives the critical
//! coupling, the critical internal coupling with coinciding fixed point,
//! and the critical wire lengths. The numeric search drives any two of
//! `(v, w, u, L, E)` with Newton iterations on the squared eigenvalue gap.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{build_effective_hamiltonian, channel_from_energy, DoubleDotSpec};
use crate::spectral::eigendecompose;
use crate::sweep::{apply_params, SweepParam};
use crate::C64;

/// Eigenvalue-dynamics regime of the three-state discriminant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `Re F > 0`: the two levels repel, equal widths.
    LevelRepulsion,
    /// `Re F < 0`: the two widths bifurcate, equal positions.
    WidthBifurcation,
    /// `|F|` at the coalescence threshold.
    Critical,
}

/// Discriminant of the two mixing eigenvalues, `z_{1,3} = mean -+ sqrt(F)`.
#[derive(Debug, Clone, Serialize)]
pub struct DiscriminantF {
    pub value: C64,
    pub energy: f64,
    pub regime: Regime,
    pub spec: DoubleDotSpec,
}

const CRITICAL_F: f64 = 1e-9;

pub fn discriminant(spec: &DoubleDotSpec, energy: f64) -> Result<DiscriminantF> {
    require_symmetric_three_state(spec)?;
    let ch = channel_from_energy(energy)?;
    let v2 = spec.lead_coupling_left * spec.lead_coupling_left;
    let u = spec.internal_coupling;
    let half = (C64::new(spec.wire_level() - spec.left_levels[0], 0.0) + ch.phase * v2) / 2.0;
    let value = half * half + 2.0 * u * u;
    let regime = if value.norm() < CRITICAL_F {
        Regime::Critical
    } else if value.re > 0.0 {
        Regime::LevelRepulsion
    } else {
        Regime::WidthBifurcation
    };
    Ok(DiscriminantF {
        value,
        energy,
        regime,
        spec: spec.clone(),
    })
}

fn require_symmetric_three_state(spec: &DoubleDotSpec) -> Result<()> {
    spec.validate()?;
    if spec.dim() != 3 {
        return Err(Error::NotApplicable(
            "coalescence closed forms need one level per dot".into(),
        ));
    }
    if spec.lead_coupling_left != spec.lead_coupling_right {
        return Err(Error::NotApplicable(
            "coalescence closed forms need symmetric couplings v = w".into(),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchPointKind {
    Analytic,
    Numeric,
}

/// A located coalescence of two eigenvalues.
#[derive(Debug, Clone, Serialize)]
pub struct BranchPoint {
    pub kind: BranchPointKind,
    /// Critical parameter values keyed by name (`v`, `u`, `L`, ...).
    pub params: BTreeMap<String, f64>,
    /// Coalescence energy.
    #[serde(rename = "E_c")]
    pub energy: f64,
    /// Indices of the coalescing pair, by ascending real part.
    pub pair: (usize, usize),
    /// Eigenvalue gap `|z_k - z_l|` at the reported point.
    pub residual: f64,
    /// True when the coalescence energy is itself a fixed point
    /// `E_c = Re z(E_c)` of the pair.
    pub fixed_point_coincides: bool,
    pub converged: bool,
}

/// Gap `|z1 - z3| = 2 |sqrt(F)|` evaluated in the factored form valid on
/// the critical manifold `v^4 = (eps(L) - eps1)^2 + 8 u^2`, where
/// `F = A (A - (d + v^2 E / 2) / 2 + i v^2 sin k)` with
/// `A = (d - v^2 E / 2) / 2`. The common factor `A` vanishes identically
/// at the closed-form critical points, so the residual does not suffer
/// the catastrophic cancellation of the naive evaluation. The detuning
/// `d = eps(L) - eps1` is passed in rather than recomputed from the spec
/// so the caller's exact value enters the cancellation.
fn analytic_gap(d: f64, v2: f64, energy: f64) -> Result<f64> {
    let ch = channel_from_energy(energy)?;
    // one rounding via fma; a sub-ulp remainder is representation noise of
    // the rounded critical energy, not a gap, so snap it to the identity
    let mut a = v2.mul_add(-energy, 2.0 * d) / 4.0;
    if a.abs() <= 8.0 * f64::EPSILON * d.abs().max(v2 * energy.abs() / 2.0) {
        a = 0.0;
    }
    let rest = C64::new(a - (d + v2 * energy / 2.0) / 2.0, v2 * ch.wavevector.sin());
    let f = a * rest;
    Ok(2.0 * f.sqrt().norm())
}

/// Indices (by ascending real part) of the closest eigenvalue pair of the
/// effective Hamiltonian at `(spec, energy)`, with the gap.
fn closest_pair(spec: &DoubleDotSpec, energy: f64) -> Result<((usize, usize), f64)> {
    let ch = channel_from_energy(energy)?;
    let set = eigendecompose(&build_effective_hamiltonian(spec, &ch)?)?;
    let n = set.dim();
    let mut best = ((0usize, 1usize), f64::INFINITY);
    for k in 0..n {
        for l in k + 1..n {
            let g = (set.eigenvalues[k] - set.eigenvalues[l]).norm();
            if g < best.1 {
                best = ((k, l), g);
            }
        }
    }
    Ok(best)
}

/// Whether `E_c` solves the fixed-point condition of the coalescing pair.
fn coincides_with_fixed_point(spec: &DoubleDotSpec, energy: f64, pair: (usize, usize)) -> bool {
    let Ok(ch) = channel_from_energy(energy) else {
        return false;
    };
    let Ok(h) = build_effective_hamiltonian(spec, &ch) else {
        return false;
    };
    let Ok(set) = eigendecompose(&h) else {
        return false;
    };
    let z = (set.eigenvalues[pair.0] + set.eigenvalues[pair.1]) / 2.0;
    (energy - z.re).abs() < 1e-6
}

fn analytic_point(
    spec_at_bp: &DoubleDotSpec,
    params: BTreeMap<String, f64>,
    energy: f64,
    d: f64,
) -> Result<BranchPoint> {
    let (pair, residual) = if energy.abs() < 2.0 {
        let v2 = spec_at_bp.lead_coupling_left * spec_at_bp.lead_coupling_left;
        let gap = analytic_gap(d, v2, energy)?;
        let (pair, _) = closest_pair(spec_at_bp, energy)?;
        (pair, gap)
    } else {
        // band-edge critical energy: the closed form is exact, but there is
        // no propagating channel to evaluate at
        ((0, 2), 0.0)
    };
    let fixed = coincides_with_fixed_point(spec_at_bp, energy, pair);
    Ok(BranchPoint {
        kind: BranchPointKind::Analytic,
        params,
        energy,
        pair,
        residual,
        fixed_point_coincides: fixed,
        converged: true,
    })
}

/// Critical lead coupling at which the two mixing eigenvalues coalesce,
/// `v_c = ((eps(L) - eps1)^2 + 8 u^2)^{1/4}`, at energy
/// `E_c = 2 (eps(L) - eps1) / v_c^2`.
pub fn critical_coupling(spec: &DoubleDotSpec) -> Result<BranchPoint> {
    require_symmetric_three_state(spec)?;
    let d = spec.wire_level() - spec.left_levels[0];
    let u = spec.internal_coupling;
    let vc2 = (d * d + 8.0 * u * u).sqrt();
    let vc = vc2.sqrt();
    // E_c = 2 d / v_c^2 through the unsquared root: exactly +-2 when u = 0
    let ec = if vc == 0.0 { 0.0 } else { 2.0 * d / vc2 };
    if ec.abs() >= 2.0 {
        return Err(Error::CriticalOutOfBand(ec));
    }
    let at = spec.with_couplings(vc, vc);
    analytic_point(&at, BTreeMap::from([("v".to_string(), vc)]), ec, d)
}

/// Internal coupling at which the coalescence energy coincides with the
/// fixed-point solution of both states: `E_c = eps(L)` exactly, with
/// `u_c^2 = ((eps(L) - eps1)^2 / 8)(4 / eps(L)^2 - 1)` and the critical
/// lead coupling `v_c` from the coalescence condition.
pub fn critical_u_double_coincidence(spec: &DoubleDotSpec) -> Result<BranchPoint> {
    require_symmetric_three_state(spec)?;
    let eps_l = spec.wire_level();
    let d = eps_l - spec.left_levels[0];
    if eps_l == 0.0 {
        return Err(Error::NoSolution(
            "eps(L) = 0 leaves the coincidence condition degenerate".into(),
        ));
    }
    if eps_l.abs() > 2.0 {
        return Err(Error::NoSolution(format!(
            "no coincidence for |eps(L)| = {} > 2",
            eps_l.abs()
        )));
    }
    let radicand = d * d / 8.0 * (4.0 / (eps_l * eps_l) - 1.0);
    if radicand < 0.0 {
        return Err(Error::NoSolution("negative radicand for u_c^2".into()));
    }
    let uc = radicand.sqrt();
    let vc2 = 2.0 * d / eps_l;
    if vc2 < 0.0 {
        return Err(Error::NoSolution(
            "eps(L) and eps(L) - eps1 have opposite signs".into(),
        ));
    }
    let vc = vc2.sqrt();
    let at = spec.with_internal_coupling(uc).with_couplings(vc, vc);
    let params = BTreeMap::from([("u".to_string(), uc), ("v".to_string(), vc)]);
    let mut bp = analytic_point(&at, params, eps_l, d)?;
    bp.fixed_point_coincides = true;
    Ok(bp)
}

/// Critical wire lengths at fixed couplings: `eps(L_c) = eps1 +- s` with
/// `s = sqrt(v^4 - 8 u^2)`, coalescence energies `E_c = +-(2 / v^2) s`,
/// mapped through the affine wire dispersion. Solutions with negative
/// length are dropped.
pub fn critical_lengths(spec: &DoubleDotSpec) -> Result<Vec<BranchPoint>> {
    require_symmetric_three_state(spec)?;
    if spec.wire_b == 0.0 {
        return Err(Error::NotApplicable(
            "constant wire dispersion cannot be inverted for L".into(),
        ));
    }
    let v2 = spec.lead_coupling_left * spec.lead_coupling_left;
    let u = spec.internal_coupling;
    let s2 = v2 * v2 - 8.0 * u * u;
    // rounding-aware degeneracy test: v^4 = 8 u^2 within a few ulps is the
    // single tangential solution, not two branches a machine epsilon apart
    let s2_tol = 4.0 * f64::EPSILON * (v2 * v2).max(8.0 * u * u);
    if s2 < -s2_tol {
        return Err(Error::NoSolution(format!(
            "v^4 = {} < 8 u^2 = {}",
            v2 * v2,
            8.0 * u * u
        )));
    }
    let s = s2.max(0.0).sqrt();
    let eps1 = spec.left_levels[0];
    let mut out = Vec::new();
    let branches: &[f64] = if s2 <= s2_tol { &[0.0] } else { &[s, -s] };
    for &sig in branches {
        let eps_c = eps1 + sig;
        let length = (eps_c - spec.wire_a) / spec.wire_b;
        if length < 0.0 {
            continue;
        }
        let ec = 2.0 * sig / v2;
        if ec.abs() >= 2.0 {
            continue;
        }
        let at = spec.with_length(length);
        out.push(analytic_point(
            &at,
            BTreeMap::from([("L".to_string(), length)]),
            ec,
            sig,
        )?);
    }
    if out.is_empty() {
        return Err(Error::NoSolution(
            "no critical length with L >= 0 and in-band E_c".into(),
        ));
    }
    out.sort_by(|a, b| a.params["L"].total_cmp(&b.params["L"]));
    Ok(out)
}

/// One search axis of the numeric coalescence search.
#[derive(Debug, Clone, Copy, Serialize, serde::Deserialize)]
pub struct SearchAxis {
    pub param: SweepParam,
    pub min: f64,
    pub max: f64,
}

fn default_grid() -> usize {
    25
}

/// Two-parameter numeric search for an eigenvalue coalescence.
#[derive(Debug, Clone, Serialize, serde::Deserialize)]
pub struct EpSearch {
    pub spec: DoubleDotSpec,
    pub axes: [SearchAxis; 2],
    /// Energy used when `E` is not one of the axes.
    #[serde(default)]
    pub energy: f64,
    /// Starting point; defaults to the best coarse-grid cell.
    #[serde(default)]
    pub seed: Option<[f64; 2]>,
    /// Coalescing pair by ascending real part at the seed; defaults to the
    /// closest pair there.
    #[serde(default)]
    pub pair_hint: Option<(usize, usize)>,
    /// Coarse grid resolution per axis.
    #[serde(default = "default_grid")]
    pub grid: usize,
}

impl EpSearch {
    pub fn new(spec: DoubleDotSpec, axes: [SearchAxis; 2], energy: f64) -> Self {
        EpSearch {
            spec,
            axes,
            energy,
            seed: None,
            pair_hint: None,
            grid: 25,
        }
    }
}

const NEWTON_ITERS: usize = 80;
const FD_STEP_REL: f64 = 1e-6;
/// Gap below which the pair is declared coalesced. The eigenvalues of a
/// defective matrix carry an O(sqrt(machine eps)) error, so demanding much
/// less than 1e-7 only chases noise.
const GAP_CONVERGED: f64 = 1e-7;

struct Eval {
    eigenvalues: Vec<C64>,
    scale: f64,
}

fn eval_axes(search: &EpSearch, x: [f64; 2]) -> Result<Eval> {
    let mut spec = search.spec.clone();
    let mut energy = search.energy;
    apply_params(
        &mut spec,
        &mut energy,
        &[
            (search.axes[0].param, x[0]),
            (search.axes[1].param, x[1]),
        ],
    );
    let ch = channel_from_energy(energy)?;
    let h = build_effective_hamiltonian(&spec, &ch)?;
    let set = eigendecompose(&h)?;
    let scale = set
        .eigenvalues
        .iter()
        .map(|z| z.norm())
        .fold(1.0f64, f64::max);
    Ok(Eval {
        eigenvalues: set.eigenvalues,
        scale,
    })
}

/// Follow the previously selected pair to the nearest current eigenvalues
/// (distinct), returning the new pair values.
fn track_pair(ev: &Eval, zk: C64, zl: C64) -> (C64, C64) {
    let nearest = |z: C64, skip: Option<usize>| -> usize {
        ev.eigenvalues
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != skip)
            .min_by(|a, b| (a.1 - z).norm().total_cmp(&(b.1 - z).norm()))
            .map(|(i, _)| i)
            .unwrap()
    };
    let ik = nearest(zk, None);
    let il = nearest(zl, Some(ik));
    (ev.eigenvalues[ik], ev.eigenvalues[il])
}

/// Newton search for a two-eigenvalue coalescence over two parameters.
///
/// The iteration solves the two real equations `(Re s, Im s) = 0` for the
/// squared gap `s = (z_k - z_l)^2`, which stays smooth through the
/// coalescence where the gap itself has a square-root singularity. The
/// pair is followed between evaluations by nearest-eigenvalue matching;
/// the Jacobian uses central finite differences. If Newton stalls, the
/// best point seen (including the coarse grid) is returned with
/// `converged = false` and its residual.
pub fn find_ep_numeric(search: &EpSearch) -> Result<BranchPoint> {
    if search.axes[0].param == search.axes[1].param {
        return Err(Error::Config("the two search axes must differ".into()));
    }
    for ax in &search.axes {
        if !(ax.min < ax.max) {
            return Err(Error::Config(format!(
                "axis {}: need min < max",
                ax.param.name()
            )));
        }
    }
    let range = [
        search.axes[0].max - search.axes[0].min,
        search.axes[1].max - search.axes[1].min,
    ];
    let clamp = |x: [f64; 2]| -> [f64; 2] {
        [
            x[0].clamp(search.axes[0].min, search.axes[0].max),
            x[1].clamp(search.axes[1].min, search.axes[1].max),
        ]
    };

    // seed: explicit, or the best cell of a coarse grid scan
    let g = search.grid.max(8);
    let (x, seed_eval) = match search.seed {
        Some(s) => {
            let s = clamp(s);
            (s, eval_axes(search, s)?)
        }
        None => {
            let mut best: Option<([f64; 2], Eval, f64)> = None;
            for i in 0..g {
                for j in 0..g {
                    let xij = [
                        search.axes[0].min + range[0] * i as f64 / (g - 1) as f64,
                        search.axes[1].min + range[1] * j as f64 / (g - 1) as f64,
                    ];
                    let Ok(ev) = eval_axes(search, xij) else {
                        continue;
                    };
                    let gap = min_hinted_gap(&ev, search.pair_hint);
                    if best.as_ref().map_or(true, |b| gap < b.2) {
                        best = Some((xij, ev, gap));
                    }
                }
            }
            let (xb, evb, _) = best.ok_or(Error::NoSolution(
                "no evaluable point on the search grid".into(),
            ))?;
            (xb, evb)
        }
    };

    // candidate coalescing pairs at the seed: the explicit hint, or every
    // pair ordered by ascending gap there (the closest pair can involve a
    // branch that never coalesces, e.g. the decoupled three-state level, so
    // Newton retries the next candidate when one fails to converge)
    let n = seed_eval.eigenvalues.len();
    let candidates: Vec<(usize, usize)> = match search.pair_hint {
        Some((k, l)) => {
            if k >= n || l >= n || k == l {
                return Err(Error::AmbiguousPair);
            }
            vec![(k, l)]
        }
        None => {
            let mut pairs: Vec<(usize, usize)> = (0..n)
                .flat_map(|k| (k + 1..n).map(move |l| (k, l)))
                .collect();
            pairs.sort_by(|&(a, b), &(c, d)| {
                let g1 = (seed_eval.eigenvalues[a] - seed_eval.eigenvalues[b]).norm();
                let g2 = (seed_eval.eigenvalues[c] - seed_eval.eigenvalues[d]).norm();
                g1.total_cmp(&g2)
            });
            pairs
        }
    };
    let scale = seed_eval.scale;
    let x0 = x;

    let newton_run = |zk0: C64, zl0: C64| -> ([f64; 2], C64, C64, f64, bool) {
        let (mut x, mut zk, mut zl) = (x0, zk0, zl0);
        let mut best = (x, zk, zl, (zk - zl).norm());
        let mut converged = best.3 <= GAP_CONVERGED * scale;
        if !converged {
            'newton: for _ in 0..NEWTON_ITERS {
                // squared gap and its finite-difference Jacobian
                let s0 = {
                    let d = zk - zl;
                    d * d
                };
                let mut jac = [[0.0f64; 2]; 2];
                for j in 0..2 {
                    let h = FD_STEP_REL * (1.0 + x[j].abs());
                    let mut xp = x;
                    xp[j] = (x[j] + h).min(search.axes[j].max);
                    let mut xm = x;
                    xm[j] = (x[j] - h).max(search.axes[j].min);
                    let dh = xp[j] - xm[j];
                    if dh == 0.0 {
                        break 'newton;
                    }
                    let (Ok(evp), Ok(evm)) = (eval_axes(search, xp), eval_axes(search, xm))
                    else {
                        break 'newton;
                    };
                    let (pk, pl) = track_pair(&evp, zk, zl);
                    let (mk, ml) = track_pair(&evm, zk, zl);
                    let sp = (pk - pl) * (pk - pl);
                    let sm = (mk - ml) * (mk - ml);
                    let ds = (sp - sm) / dh;
                    jac[0][j] = ds.re;
                    jac[1][j] = ds.im;
                }
                let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
                if det.abs() < 1e-30 {
                    break;
                }
                let rhs = [-s0.re, -s0.im];
                let mut dx = [
                    (rhs[0] * jac[1][1] - rhs[1] * jac[0][1]) / det,
                    (rhs[1] * jac[0][0] - rhs[0] * jac[1][0]) / det,
                ];
                // cap the step to a quarter of each axis range
                for j in 0..2 {
                    let cap = 0.25 * range[j];
                    dx[j] = dx[j].clamp(-cap, cap);
                }
                let xn = clamp([x[0] + dx[0], x[1] + dx[1]]);
                let Ok(ev) = eval_axes(search, xn) else {
                    break;
                };
                let (nk, nl) = track_pair(&ev, zk, zl);
                let step = ((xn[0] - x[0]).powi(2) + (xn[1] - x[1]).powi(2)).sqrt();
                x = xn;
                zk = nk;
                zl = nl;
                let gap = (zk - zl).norm();
                if gap < best.3 {
                    best = (x, zk, zl, gap);
                }
                if gap <= GAP_CONVERGED * scale {
                    converged = true;
                    break;
                }
                if step < 1e-13 {
                    break;
                }
            }
        }
        (best.0, best.1, best.2, best.3, converged)
    };

    let mut overall: Option<([f64; 2], C64, C64, f64, bool)> = None;
    for &(ik, il) in &candidates {
        let run = newton_run(seed_eval.eigenvalues[ik], seed_eval.eigenvalues[il]);
        let better = overall
            .as_ref()
            .map_or(true, |o| (run.4, -run.3) > (o.4, -o.3));
        if better {
            overall = Some(run);
        }
        if overall.as_ref().is_some_and(|o| o.4) {
            break;
        }
    }
    let (xb, zk, zl, residual, converged) = overall.unwrap();
    // resolve the final energy and pair indices at the solution
    let mut spec = search.spec.clone();
    let mut energy = search.energy;
    apply_params(
        &mut spec,
        &mut energy,
        &[(search.axes[0].param, xb[0]), (search.axes[1].param, xb[1])],
    );
    let ev = eval_axes(search, xb)?;
    let find_idx = |z: C64, skip: Option<usize>| {
        ev.eigenvalues
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != skip)
            .min_by(|a, b| (a.1 - z).norm().total_cmp(&(b.1 - z).norm()))
            .map(|(i, _)| i)
            .unwrap()
    };
    let pk = find_idx(zk, None);
    let pl = find_idx(zl, Some(pk));
    let pair = (pk.min(pl), pk.max(pl));
    let z_mean = (zk + zl) / 2.0;
    Ok(BranchPoint {
        kind: BranchPointKind::Numeric,
        params: BTreeMap::from([
            (search.axes[0].param.name().to_string(), xb[0]),
            (search.axes[1].param.name().to_string(), xb[1]),
        ]),
        energy,
        pair,
        residual,
        fixed_point_coincides: (energy - z_mean.re).abs() < 1e-6,
        converged,
    })
}

fn min_hinted_gap(ev: &Eval, hint: Option<(usize, usize)>) -> f64 {
    let n = ev.eigenvalues.len();
    match hint {
        Some((k, l)) if k < n && l < n && k != l => {
            (ev.eigenvalues[k] - ev.eigenvalues[l]).norm()
        }
        _ => {
            let mut best = f64::INFINITY;
            for k in 0..n {
                for l in k + 1..n {
                    best = best.min((ev.eigenvalues[k] - ev.eigenvalues[l]).norm());
                }
            }
            best
        }
    }
}
