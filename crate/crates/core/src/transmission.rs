//! Transmission amplitude, scattering matrix and coupling-independent
//! transmission zeros.
//!
//! The amplitude is `t(E) = -4 pi i V_L^T (E - H_eff)^{-1} V_R`, evaluated
//! either through the resolvent (LU solve) or through the spectral
//! decomposition `t = -4 pi i sum_k (V_L|k)(k|V_R)/(E - z_k)` with
//! biorthogonal eigenvectors. With the coupling vectors carrying
//! `sqrt(sin k / 2 pi)` this normalization makes the 2x2 scattering matrix
//! unitary and caps the transmission at one.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    build_effective_hamiltonian_from, channel_from_energy, closed_spectrum, coupling_vectors_from,
    ClosedSpectrum, DoubleDotSpec,
};
use crate::spectral::{eigendecompose, schur};
use crate::C64;

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// Transmission at a single energy.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TransmissionPoint {
    pub energy: f64,
    /// Complex amplitude `t(E)`.
    pub amplitude: C64,
    /// `T = |t|^2`.
    pub transmission: f64,
}

fn point(energy: f64, amplitude: C64) -> TransmissionPoint {
    TransmissionPoint {
        energy,
        amplitude,
        transmission: amplitude.norm_sqr(),
    }
}

/// Transmission through the resolvent, reusing a closed spectrum.
///
/// Solves `(E - H_eff) x = V_R` by LU with a residual check. If the
/// resolvent is singular at `E` but the couplings have no weight on the
/// singular direction (a bound state in the continuum), the amplitude is
/// recovered from the spectral sum with the decoupled mode skipped;
/// otherwise [`Error::SingularResolvent`] is returned.
pub fn transmission_resolvent_from(
    spec: &DoubleDotSpec,
    spectrum: &ClosedSpectrum,
    energy: f64,
) -> Result<TransmissionPoint> {
    let ch = channel_from_energy(energy)?;
    let h = build_effective_hamiltonian_from(spec, spectrum, &ch)?;
    let (vl, vr) = coupling_vectors_from(spec, spectrum, &ch)?;
    let n = spec.dim();
    let vlc = vl.map(|x| C64::new(x, 0.0));
    let vrc = vr.map(|x| C64::new(x, 0.0));
    let a = DMatrix::<C64>::from_diagonal_element(n, n, C64::new(energy, 0.0)) - &h.matrix;
    let scale = a.map(|z| z.norm()).max().max(1.0);

    let lu = a.clone().lu();
    if let Some(x) = lu.solve(&vrc) {
        let residual = (&a * &x - &vrc).map(|z| z.norm()).max();
        let x_norm = x.map(|z| z.norm()).max();
        // a huge solution with a small relative residual still means the
        // amplitude is dominated by cancellation along a near-null
        // direction; route that through the spectral sum as well
        if residual <= 1e-9 * scale * x_norm.max(1.0) && x_norm < 1e12 {
            let dot: C64 = vlc.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
            return Ok(point(energy, C64::new(0.0, -FOUR_PI) * dot));
        }
    }
    // singular or ill-conditioned resolvent: fall back to the spectral sum
    spectral_sum(spec, spectrum, energy, true)
}

pub fn transmission_resolvent(spec: &DoubleDotSpec, energy: f64) -> Result<TransmissionPoint> {
    let spectrum = closed_spectrum(spec)?;
    transmission_resolvent_from(spec, &spectrum, energy)
}

/// Transmission through the biorthogonal spectral decomposition. Fails with
/// [`Error::DefectiveDecomposition`] at an exceptional point and with
/// [`Error::SingularResolvent`] when `E` hits a pole with nonzero coupling
/// weight.
pub fn transmission_spectral(spec: &DoubleDotSpec, energy: f64) -> Result<TransmissionPoint> {
    let spectrum = closed_spectrum(spec)?;
    transmission_spectral_from(spec, &spectrum, energy)
}

pub fn transmission_spectral_from(
    spec: &DoubleDotSpec,
    spectrum: &ClosedSpectrum,
    energy: f64,
) -> Result<TransmissionPoint> {
    spectral_sum(spec, spectrum, energy, false)
}

fn spectral_sum(
    spec: &DoubleDotSpec,
    spectrum: &ClosedSpectrum,
    energy: f64,
    skip_decoupled_poles: bool,
) -> Result<TransmissionPoint> {
    let ch = channel_from_energy(energy)?;
    let h = build_effective_hamiltonian_from(spec, spectrum, &ch)?;
    let (vl, vr) = coupling_vectors_from(spec, spectrum, &ch)?;
    let set = eigendecompose(&h)?;
    if let Some(k) = set.defective.iter().position(|&d| d) {
        return Err(Error::DefectiveDecomposition(format!(
            "eigenvector {k} is self-orthogonal at E = {energy}; the spectral \
             sum does not exist at an exceptional point"
        )));
    }
    let scale = h.matrix.map(|z| z.norm()).max().max(1.0);
    let v_scale = vl.map(f64::abs).max().max(vr.map(f64::abs).max()).max(1e-300);
    let mut sum = C64::new(0.0, 0.0);
    for k in 0..set.dim() {
        let col = set.right_vectors.column(k);
        let nl: C64 = vl.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
        let nr: C64 = vr.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
        let denom = C64::new(energy, 0.0) - set.eigenvalues[k];
        if denom.norm() < 1e-12 * scale {
            // pole on the real axis: a bound state in the continuum if the
            // residue vanishes
            let residue = (nl * nr).norm();
            if skip_decoupled_poles && residue < 1e-10 * v_scale * v_scale {
                continue;
            }
            return Err(Error::SingularResolvent(energy));
        }
        sum += nl * nr / denom;
    }
    Ok(point(energy, C64::new(0.0, -FOUR_PI) * sum))
}

/// 2x2 scattering matrix `S = 1 - 4 pi i W^T (E - H_eff)^{-1} W` with
/// `W = [V_L, V_R]`. Unitary for real parameters in the open band.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScatteringMatrix {
    pub energy: f64,
    /// Row-major entries: `[[r, t'], [t, r']]`.
    pub s: [[C64; 2]; 2],
}

impl ScatteringMatrix {
    /// Reflection amplitude for a wave incident from the left.
    pub fn r(&self) -> C64 {
        self.s[0][0]
    }

    /// Transmission amplitude left -> right.
    pub fn t(&self) -> C64 {
        self.s[1][0]
    }

    /// Transmission amplitude right -> left.
    pub fn t_prime(&self) -> C64 {
        self.s[0][1]
    }

    /// Reflection amplitude for a wave incident from the right.
    pub fn r_prime(&self) -> C64 {
        self.s[1][1]
    }

    pub fn transmission(&self) -> f64 {
        self.t().norm_sqr()
    }

    /// `max |S^dagger S - 1|` over entries.
    pub fn unitarity_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let mut e: C64 = (0..2).map(|k| self.s[k][i].conj() * self.s[k][j]).sum();
                if i == j {
                    e -= C64::new(1.0, 0.0);
                }
                worst = worst.max(e.norm());
            }
        }
        worst
    }
}

pub fn scattering_matrix(spec: &DoubleDotSpec, energy: f64) -> Result<ScatteringMatrix> {
    let spectrum = closed_spectrum(spec)?;
    scattering_matrix_from(spec, &spectrum, energy)
}

pub fn scattering_matrix_from(
    spec: &DoubleDotSpec,
    spectrum: &ClosedSpectrum,
    energy: f64,
) -> Result<ScatteringMatrix> {
    let ch = channel_from_energy(energy)?;
    let h = build_effective_hamiltonian_from(spec, spectrum, &ch)?;
    let (vl, vr) = coupling_vectors_from(spec, spectrum, &ch)?;
    let n = spec.dim();
    let a = DMatrix::<C64>::from_diagonal_element(n, n, C64::new(energy, 0.0)) - &h.matrix;
    let lu = a.clone().lu();
    let cols = [vl, vr];
    let mut g = [[C64::new(0.0, 0.0); 2]; 2];
    for (j, c) in cols.iter().enumerate() {
        let b = c.map(|x| C64::new(x, 0.0));
        let x = match lu.solve(&b) {
            Some(x) => x,
            None => return Err(Error::SingularResolvent(energy)),
        };
        let scale = a.map(|z| z.norm()).max().max(1.0);
        let residual = (&a * &x - &b).map(|z| z.norm()).max();
        if residual > 1e-8 * scale * x.map(|z| z.norm()).max().max(1.0) {
            return Err(Error::SingularResolvent(energy));
        }
        for (i, ci) in cols.iter().enumerate() {
            g[i][j] = ci.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
        }
    }
    let mut s = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            s[i][j] = C64::new(0.0, -FOUR_PI) * g[i][j];
            if i == j {
                s[i][j] += C64::new(1.0, 0.0);
            }
        }
    }
    Ok(ScatteringMatrix { energy, s })
}

/// Coupling-independent transmission zeros of a symmetric double dot.
#[derive(Debug, Clone, Serialize)]
pub struct TransmissionZeros {
    /// Zero energies, ascending. Not restricted to the open band.
    pub energies: Vec<f64>,
    pub multiplicities: Vec<usize>,
}

/// Zeros of `t(E)` that are independent of `u`, `v`, `w`, `L`: the roots of
/// `p'(E)` with `p(E) = prod_i (E - eps_i)` over the (shared) dot levels.
///
/// They exist only when both dots carry the same level set (the left and
/// right contact functions share the factor `p'`); a single level per dot
/// gives no zeros.
pub fn predict_transmission_zeros(spec: &DoubleDotSpec) -> Result<TransmissionZeros> {
    spec.validate()?;
    if spec.left_levels != spec.right_levels {
        return Err(Error::NotApplicable(
            "transmission zeros of this kind need identical dot spectra".into(),
        ));
    }
    let m = spec.left_levels.len();
    if m < 2 {
        return Err(Error::NoZeros);
    }
    // p(E) = prod (E - eps_i), expanded by convolution
    let mut p = vec![0.0; m + 1];
    p[0] = 1.0;
    let mut deg = 0usize;
    for &eps in &spec.left_levels {
        for i in (0..=deg).rev() {
            p[i + 1] += p[i];
            p[i] *= -eps;
        }
        deg += 1;
    }
    // derivative, then monic
    let mut dp: Vec<f64> = (1..=m).map(|i| p[i] * i as f64).collect();
    let lead = dp[m - 1];
    for c in dp.iter_mut() {
        *c /= lead;
    }
    let d = m - 1;
    let mut roots: Vec<f64> = if d == 1 {
        vec![-dp[0]]
    } else {
        let mut companion = DMatrix::<C64>::zeros(d, d);
        for i in 1..d {
            companion[(i, i - 1)] = C64::new(1.0, 0.0);
        }
        for i in 0..d {
            companion[(i, d - 1)] = C64::new(-dp[i], 0.0);
        }
        let (values, _) = schur::eigen(&companion)?;
        // roots of the derivative of a real-rooted polynomial are real
        values.into_iter().map(|z| z.re).collect()
    };
    roots.sort_by(f64::total_cmp);
    // polish with a few Newton steps: Horner on the monic polynomial
    // x^d + dp[d-1] x^{d-1} + ... + dp[0] and its derivative
    let eval = |e: f64| -> (f64, f64) {
        let mut v = 1.0;
        let mut dv = 0.0;
        for i in (0..d).rev() {
            dv = dv * e + v;
            v = v * e + dp[i];
        }
        (v, dv)
    };
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let (v, dv) = eval(*r);
            if dv != 0.0 {
                *r -= v / dv;
            }
        }
    }
    // cluster near-coincident roots into multiplicities
    let mut energies = Vec::new();
    let mut multiplicities = Vec::new();
    for &r in &roots {
        match energies.last() {
            Some(&last) if (r - last as f64).abs() < 1e-8 => {
                *multiplicities.last_mut().unwrap() += 1;
            }
            _ => {
                energies.push(r);
                multiplicities.push(1);
            }
        }
    }
    Ok(TransmissionZeros {
        energies,
        multiplicities,
    })
}
