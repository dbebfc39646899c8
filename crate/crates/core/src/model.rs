//! System definition and Hamiltonian assembly.
//!
//! The closed double dot has `M` levels in each single dot plus one wire
//! mode, giving `N = 2M + 1` states. Opening it to two semi-infinite
//! tight-binding leads (dispersion `E = -2 cos k`) adds the self-energy
//! `-e^{ik} (v^2 |L><L| + w^2 |R><R|)` on the contact amplitudes, which
//! makes the Hamiltonian complex symmetric and energy dependent.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

/// Full parametrization of the closed double dot plus lead couplings.
///
/// Energies are dimensionless (lead hopping units). The wire mode
/// disperses affinely with the wire length: `eps(L) = wire_a + wire_b * L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoubleDotSpec {
    pub left_levels: Vec<f64>,
    pub right_levels: Vec<f64>,
    pub wire_a: f64,
    pub wire_b: f64,
    pub length: f64,
    /// Dot-wire coupling u.
    #[serde(rename = "u")]
    pub internal_coupling: f64,
    /// Left lead coupling v.
    #[serde(rename = "v")]
    pub lead_coupling_left: f64,
    /// Right lead coupling w.
    #[serde(rename = "w")]
    pub lead_coupling_right: f64,
}

impl DoubleDotSpec {
    /// One level per dot, symmetric lead couplings `v = w`.
    pub fn three_state(eps1: f64, wire_a: f64, wire_b: f64, length: f64, u: f64, v: f64) -> Self {
        DoubleDotSpec {
            left_levels: vec![eps1],
            right_levels: vec![eps1],
            wire_a,
            wire_b,
            length,
            internal_coupling: u,
            lead_coupling_left: v,
            lead_coupling_right: v,
        }
    }

    /// Identical multi-level dots, symmetric couplings.
    pub fn symmetric(levels: Vec<f64>, wire_a: f64, wire_b: f64, length: f64, u: f64, v: f64) -> Self {
        DoubleDotSpec {
            left_levels: levels.clone(),
            right_levels: levels,
            wire_a,
            wire_b,
            length,
            internal_coupling: u,
            lead_coupling_left: v,
            lead_coupling_right: v,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.left_levels.is_empty() || self.right_levels.is_empty() {
            return Err(Error::InvalidSpec("each dot needs at least one level".into()));
        }
        let all = self
            .left_levels
            .iter()
            .chain(self.right_levels.iter())
            .chain([&self.wire_a, &self.wire_b, &self.length].into_iter())
            .chain([&self.internal_coupling, &self.lead_coupling_left, &self.lead_coupling_right]);
        for x in all {
            if !x.is_finite() {
                return Err(Error::InvalidSpec("non-finite parameter".into()));
            }
        }
        if self.length < 0.0 {
            return Err(Error::InvalidSpec("length must be non-negative".into()));
        }
        if self.internal_coupling < 0.0
            || self.lead_coupling_left < 0.0
            || self.lead_coupling_right < 0.0
        {
            return Err(Error::InvalidSpec("couplings must be non-negative".into()));
        }
        Ok(())
    }

    /// Total dimension `N = |left| + 1 + |right|`.
    pub fn dim(&self) -> usize {
        self.left_levels.len() + 1 + self.right_levels.len()
    }

    /// Index of the wire mode in the site basis.
    pub fn wire_index(&self) -> usize {
        self.left_levels.len()
    }

    /// Wire mode energy `eps(L) = a + b L`.
    pub fn wire_level(&self) -> f64 {
        self.wire_a + self.wire_b * self.length
    }

    /// True iff `v == w` and the two dot spectra are identical.
    pub fn is_symmetric(&self) -> bool {
        self.lead_coupling_left == self.lead_coupling_right
            && self.left_levels == self.right_levels
    }

    pub fn with_length(&self, length: f64) -> Self {
        DoubleDotSpec { length, ..self.clone() }
    }

    pub fn with_couplings(&self, v: f64, w: f64) -> Self {
        DoubleDotSpec {
            lead_coupling_left: v,
            lead_coupling_right: w,
            ..self.clone()
        }
    }

    pub fn with_internal_coupling(&self, u: f64) -> Self {
        DoubleDotSpec { internal_coupling: u, ..self.clone() }
    }

    /// Stable identifier over the numeric content, used to tag derived data.
    pub fn hash_id(&self) -> u64 {
        // FNV-1a over the raw bit patterns
        let mut h: u64 = 0xcbf29ce484222325;
        let mut eat = |x: f64| {
            for b in x.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        eat(self.left_levels.len() as f64);
        self.left_levels.iter().for_each(|&x| eat(x));
        self.right_levels.iter().for_each(|&x| eat(x));
        eat(self.wire_a);
        eat(self.wire_b);
        eat(self.length);
        eat(self.internal_coupling);
        eat(self.lead_coupling_left);
        eat(self.lead_coupling_right);
        h
    }
}

/// Propagating lead channel at energy `E`, with `E = -2 cos k`, `k` on (0, pi).
#[derive(Debug, Clone, Copy)]
pub struct Channel {
    pub energy: f64,
    pub wavevector: f64,
    /// `e^{ik}`, imaginary part positive (outgoing branch).
    pub phase: C64,
}

/// Wavevector and phase factor of the in-band channel.
///
/// Energies at or beyond the band edges `|E| >= 2` are rejected; the
/// evanescent regime is not modeled.
pub fn channel_from_energy(energy: f64) -> Result<Channel> {
    if !(energy > -2.0 && energy < 2.0) {
        return Err(Error::EnergyOutOfBand(energy));
    }
    let k = (-energy / 2.0).acos();
    let (sin_k, cos_k) = (k.sin(), -energy / 2.0);
    Ok(Channel {
        energy,
        wavevector: k,
        phase: C64::new(cos_k, sin_k),
    })
}

/// Real symmetric Hamiltonian of the closed double dot.
///
/// Diagonal: left levels, wire level, right levels. The wire couples with
/// strength `u` to every dot level; the dots do not couple directly.
pub fn build_closed_hamiltonian(spec: &DoubleDotSpec) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let n = spec.dim();
    let wi = spec.wire_index();
    let u = spec.internal_coupling;
    let mut h = DMatrix::zeros(n, n);
    for (i, &e) in spec.left_levels.iter().enumerate() {
        h[(i, i)] = e;
    }
    h[(wi, wi)] = spec.wire_level();
    for (j, &e) in spec.right_levels.iter().enumerate() {
        h[(wi + 1 + j, wi + 1 + j)] = e;
    }
    for i in 0..n {
        if i != wi {
            h[(wi, i)] = u;
            h[(i, wi)] = u;
        }
    }
    Ok(h)
}

/// Real eigenpairs of the closed Hamiltonian, ascending.
#[derive(Debug, Clone)]
pub struct ClosedSpectrum {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as matrix columns, in the site basis.
    pub eigenvectors: DMatrix<f64>,
    /// For `N = 3`: `(eta, delta_eps)` with `eta^2 = delta_eps^2 + 2 u^2`
    /// and `delta_eps = (eps_1 - eps(L)) / 2`.
    pub aux_3state: Option<(f64, f64)>,
}

impl ClosedSpectrum {
    /// Contact amplitude of eigenstate `m` on the left (resp. right) dot:
    /// the sum of its components over that dot's levels.
    pub fn contact_amplitudes(&self, spec: &DoubleDotSpec) -> (Vec<f64>, Vec<f64>) {
        let n = spec.dim();
        let wi = spec.wire_index();
        let mut left = vec![0.0; n];
        let mut right = vec![0.0; n];
        for m in 0..n {
            let col = self.eigenvectors.column(m);
            left[m] = (0..wi).map(|i| col[i]).sum();
            right[m] = (wi + 1..n).map(|i| col[i]).sum();
        }
        (left, right)
    }
}

pub fn closed_spectrum(spec: &DoubleDotSpec) -> Result<ClosedSpectrum> {
    let h = build_closed_hamiltonian(spec)?;
    let n = spec.dim();
    let se = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (m, &i) in order.iter().enumerate() {
        let mut col = se.eigenvectors.column(i).clone_owned();
        // sign convention: largest-magnitude component positive
        let imax = col
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, _)| i)
            .unwrap();
        if col[imax] < 0.0 {
            col.neg_mut();
        }
        eigenvectors.set_column(m, &col);
    }
    let aux_3state = if n == 3 {
        let delta_eps = (spec.left_levels[0] - spec.wire_level()) / 2.0;
        let eta = (delta_eps * delta_eps + 2.0 * spec.internal_coupling * spec.internal_coupling)
            .sqrt();
        Some((eta, delta_eps))
    } else {
        None
    };
    Ok(ClosedSpectrum {
        eigenvalues,
        eigenvectors,
        aux_3state,
    })
}

/// Lead coupling vectors in the eigenbasis of the closed Hamiltonian:
/// `V_m(C) = v_C sqrt(sin k / 2 pi) * (contact amplitude of state m on dot C)`.
pub fn coupling_vectors(
    spec: &DoubleDotSpec,
    ch: &Channel,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let spectrum = closed_spectrum(spec)?;
    coupling_vectors_from(spec, &spectrum, ch)
}

/// Same as [`coupling_vectors`] but reusing an existing closed spectrum.
pub fn coupling_vectors_from(
    spec: &DoubleDotSpec,
    spectrum: &ClosedSpectrum,
    ch: &Channel,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let amp = (ch.wavevector.sin() / (2.0 * std::f64::consts::PI)).sqrt();
    let (left, right) = spectrum.contact_amplitudes(spec);
    let v = spec.lead_coupling_left;
    let w = spec.lead_coupling_right;
    let vl = DVector::from_iterator(spec.dim(), left.iter().map(|&p| v * amp * p));
    let vr = DVector::from_iterator(spec.dim(), right.iter().map(|&p| w * amp * p));
    Ok((vl, vr))
}

/// Energy-dependent complex symmetric effective Hamiltonian with its channel.
#[derive(Debug, Clone)]
pub struct EffectiveHamiltonian {
    pub matrix: DMatrix<C64>,
    pub channel: Channel,
    pub spec_hash: u64,
}

/// Effective Hamiltonian in the eigenbasis of the closed system:
/// `(H_eff)_{mn} = E_m^B d_{mn} - (v^2 p_m^L p_n^L + w^2 p_m^R p_n^R) e^{ik}`
/// with `p^C` the contact amplitudes.
pub fn build_effective_hamiltonian(
    spec: &DoubleDotSpec,
    ch: &Channel,
) -> Result<EffectiveHamiltonian> {
    let spectrum = closed_spectrum(spec)?;
    build_effective_hamiltonian_from(spec, &spectrum, ch)
}

/// Same as [`build_effective_hamiltonian`] but reusing a closed spectrum.
pub fn build_effective_hamiltonian_from(
    spec: &DoubleDotSpec,
    spectrum: &ClosedSpectrum,
    ch: &Channel,
) -> Result<EffectiveHamiltonian> {
    let n = spec.dim();
    let (left, right) = spectrum.contact_amplitudes(spec);
    let v2 = spec.lead_coupling_left * spec.lead_coupling_left;
    let w2 = spec.lead_coupling_right * spec.lead_coupling_right;
    let mut m = DMatrix::<C64>::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let coupling = v2 * left[a] * left[b] + w2 * right[a] * right[b];
            let mut e = -ch.phase * coupling;
            if a == b {
                e += C64::new(spectrum.eigenvalues[a], 0.0);
            }
            m[(a, b)] = e;
            m[(b, a)] = e;
        }
    }
    Ok(EffectiveHamiltonian {
        matrix: m,
        channel: *ch,
        spec_hash: spec.hash_id(),
    })
}

/// Effective Hamiltonian in the site basis: closed Hamiltonian plus the
/// rank-one lead self-energies on the contact indicator vectors. Spectrally
/// equivalent to the eigenbasis form; used for cross-checks.
pub fn build_effective_hamiltonian_site(
    spec: &DoubleDotSpec,
    ch: &Channel,
) -> Result<EffectiveHamiltonian> {
    let hb = build_closed_hamiltonian(spec)?;
    let n = spec.dim();
    let wi = spec.wire_index();
    let v2 = spec.lead_coupling_left * spec.lead_coupling_left;
    let w2 = spec.lead_coupling_right * spec.lead_coupling_right;
    let mut m = hb.map(|x| C64::new(x, 0.0));
    for i in 0..n {
        for j in 0..n {
            let l = if i < wi && j < wi { v2 } else { 0.0 };
            let r = if i > wi && j > wi { w2 } else { 0.0 };
            if l + r != 0.0 {
                m[(i, j)] -= ch.phase * (l + r);
            }
        }
    }
    Ok(EffectiveHamiltonian {
        matrix: m,
        channel: *ch,
        spec_hash: spec.hash_id(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn fig1_spec(v: f64) -> DoubleDotSpec {
        DoubleDotSpec::three_state(1.0, 2.0, -0.2, 3.0, 0.25, v)
    }

    #[test]
    fn channel_band_center() {
        let ch = channel_from_energy(0.0).unwrap();
        assert_abs_diff_eq!(ch.wavevector, std::f64::consts::FRAC_PI_2, epsilon = 1e-15);
        assert_abs_diff_eq!(ch.phase.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ch.phase.im, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn channel_inverts_dispersion() {
        // oracle: k must satisfy E = -2 cos k to machine precision
        let ch = channel_from_energy(0.9847).unwrap();
        assert_abs_diff_eq!(-2.0 * ch.wavevector.cos(), 0.9847, epsilon = 1e-12);
        assert_abs_diff_eq!(ch.wavevector, 2.08558, epsilon = 1e-5);
        assert_abs_diff_eq!(ch.wavevector.sin(), 0.87040, epsilon = 1e-5);
        assert!(ch.phase.im > 0.0);
    }

    #[test]
    fn channel_rejects_band_edge() {
        assert!(matches!(channel_from_energy(2.0), Err(Error::EnergyOutOfBand(_))));
        assert!(matches!(channel_from_energy(-2.0), Err(Error::EnergyOutOfBand(_))));
        assert!(matches!(channel_from_energy(2.5), Err(Error::EnergyOutOfBand(_))));
    }

    #[test]
    fn closed_hamiltonian_three_state() {
        let h = build_closed_hamiltonian(&fig1_spec(0.5)).unwrap();
        let expect = [[1.0, 0.25, 0.0], [0.25, 1.4, 0.25], [0.0, 0.25, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(h[(i, j)], expect[i][j]);
            }
        }
    }

    #[test]
    fn closed_hamiltonian_decoupled() {
        let mut spec = fig1_spec(0.5);
        spec.internal_coupling = 0.0;
        let h = build_closed_hamiltonian(&spec).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert_eq!(h[(i, j)], 0.0);
                }
            }
        }
        assert_eq!(h[(1, 1)], 1.4);
    }

    #[test]
    fn closed_hamiltonian_five_state_wire_row() {
        let spec = DoubleDotSpec::symmetric(vec![0.5, 1.0], 1.5, -1.0 / 7.0, 3.0, 0.25, 0.5);
        let h = build_closed_hamiltonian(&spec).unwrap();
        assert_eq!(spec.wire_index(), 2);
        for j in [0usize, 1, 3, 4] {
            assert_eq!(h[(2, j)], 0.25);
        }
        assert_eq!(h[(2, 2)], spec.wire_level());
        assert_eq!(h[(0, 4)], 0.0);
    }

    #[test]
    fn closed_spectrum_matches_three_state_forms() {
        // eta^2 = delta^2 + 2u^2 closed forms at the Fig. 1 parameters
        let spec = fig1_spec(0.5);
        let s = closed_spectrum(&spec).unwrap();
        let (eta, delta) = s.aux_3state.unwrap();
        assert_abs_diff_eq!(delta, -0.2, epsilon = 1e-14);
        assert_abs_diff_eq!(eta, 0.40620, epsilon = 1e-5);
        assert_abs_diff_eq!(s.eigenvalues[0], 0.79380, epsilon = 1e-5);
        assert_abs_diff_eq!(s.eigenvalues[1], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.eigenvalues[2], 1.60620, epsilon = 1e-5);
        // exact closed forms
        let mean = (1.0 + 1.4) / 2.0;
        assert_abs_diff_eq!(s.eigenvalues[0], mean - eta, epsilon = 1e-12);
        assert_abs_diff_eq!(s.eigenvalues[2], mean + eta, epsilon = 1e-12);
        // residual and orthonormality
        let h = build_closed_hamiltonian(&spec).unwrap();
        for m in 0..3 {
            let col = s.eigenvectors.column(m).clone_owned();
            let r = &h * &col - s.eigenvalues[m] * &col;
            assert!(r.amax() < 1e-12);
        }
        let gram = s.eigenvectors.transpose() * &s.eigenvectors;
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(gram[(i, j)], want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn closed_spectrum_decoupled_and_resonant() {
        let mut spec = fig1_spec(0.5);
        spec.internal_coupling = 0.0;
        let s = closed_spectrum(&spec).unwrap();
        assert_eq!(s.eigenvalues, vec![1.0, 1.0, 1.4]);

        // eps(L) = eps1 = 0: eigenvalues (-u sqrt2, 0, u sqrt2)
        let spec = DoubleDotSpec::three_state(0.0, 0.0, 0.0, 1.0, 0.25, 0.5);
        let s = closed_spectrum(&spec).unwrap();
        assert_abs_diff_eq!(s.eigenvalues[0], -0.35355, epsilon = 1e-5);
        assert_abs_diff_eq!(s.eigenvalues[1], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.eigenvalues[2], 0.35355, epsilon = 1e-5);
    }

    #[test]
    fn coupling_vector_antisymmetric_state() {
        // state |2> = (1, 0, -1)/sqrt2 gives V_2(L) = (v/2) sqrt(sin k / pi)
        let spec = fig1_spec(0.7);
        let ch = channel_from_energy(0.3).unwrap();
        let (vl, vr) = coupling_vectors(&spec, &ch).unwrap();
        let expect = 0.7 / 2.0 * (ch.wavevector.sin() / std::f64::consts::PI).sqrt();
        assert_abs_diff_eq!(vl[1].abs(), expect, epsilon = 1e-12);
        assert_abs_diff_eq!(vr[1].abs(), expect, epsilon = 1e-12);
        // opposite signs on the two contacts
        assert_relative_eq!(vl[1], -vr[1], epsilon = 1e-12);
    }

    #[test]
    fn coupling_vector_disconnected_lead() {
        let mut spec = fig1_spec(0.7);
        spec.lead_coupling_left = 0.0;
        let ch = channel_from_energy(0.3).unwrap();
        let (vl, _) = coupling_vectors(&spec, &ch).unwrap();
        assert_eq!(vl.amax(), 0.0);
    }

    #[test]
    fn coupling_amplitude_factor() {
        // sqrt(sin k / 2 pi) at E = 0.9847
        let ch = channel_from_energy(0.9847).unwrap();
        let amp = (ch.wavevector.sin() / (2.0 * std::f64::consts::PI)).sqrt();
        assert_abs_diff_eq!(amp, 0.37219, epsilon = 1e-5);
    }

    #[test]
    fn effective_hamiltonian_decoupled_state_pattern() {
        // v = w: rows/columns of the antisymmetric state vanish to rounding
        // (the closed eigenvectors carry ~1e-17 asymmetry)
        let spec = fig1_spec(0.8);
        let ch = channel_from_energy(0.5).unwrap();
        let h = build_effective_hamiltonian(&spec, &ch).unwrap();
        assert!(h.matrix[(0, 1)].norm() < 1e-15);
        assert!(h.matrix[(1, 2)].norm() < 1e-15);
    }

    #[test]
    fn effective_hamiltonian_middle_element() {
        // (2,2) element is eps1 - v^2 e^{ik} at the Fig. 1 branch point
        let bp = crate::branchpoints::critical_coupling(&fig1_spec(0.0)).unwrap();
        let vc = bp.params["v"];
        let spec = fig1_spec(vc);
        let ch = channel_from_energy(bp.energy).unwrap();
        let h = build_effective_hamiltonian(&spec, &ch).unwrap();
        let z2 = h.matrix[(1, 1)];
        assert_abs_diff_eq!(z2.re, 1.40001, epsilon = 1e-4);
        assert_abs_diff_eq!(z2.im, -0.70706, epsilon = 1e-4);
        let direct = C64::new(1.0, 0.0) - ch.phase * vc * vc;
        assert_abs_diff_eq!((z2 - direct).norm(), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn effective_hamiltonian_closed_limit() {
        let spec = fig1_spec(0.0);
        let ch = channel_from_energy(0.5).unwrap();
        let h = build_effective_hamiltonian(&spec, &ch).unwrap();
        let s = closed_spectrum(&spec).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(h.matrix[(i, i)].re, s.eigenvalues[i], epsilon = 1e-14);
            assert_eq!(h.matrix[(i, i)].im, 0.0);
        }
    }

    #[test]
    fn effective_hamiltonian_symmetric_and_dissipative() {
        let spec = DoubleDotSpec {
            left_levels: vec![0.3, 0.9],
            right_levels: vec![0.3, 0.9],
            wire_a: 1.0,
            wire_b: -0.1,
            length: 2.0,
            internal_coupling: 0.2,
            lead_coupling_left: 0.6,
            lead_coupling_right: 0.4,
        };
        let ch = channel_from_energy(-0.7).unwrap();
        let h = build_effective_hamiltonian(&spec, &ch).unwrap();
        let n = spec.dim();
        for i in 0..n {
            assert!(h.matrix[(i, i)].im <= 0.0);
            for j in 0..n {
                assert_eq!(h.matrix[(i, j)], h.matrix[(j, i)]);
            }
        }
    }

    /// Closed-form three-state effective Hamiltonian for general (v, w),
    /// element magnitudes only (off-diagonal signs depend on eigenvector
    /// sign conventions).
    fn three_state_closed_form_abs(spec: &DoubleDotSpec, ch: &Channel) -> [[f64; 3]; 3] {
        let s = closed_spectrum(spec).unwrap();
        let (eta, de) = s.aux_3state.unwrap();
        let u = spec.internal_coupling;
        let v2 = spec.lead_coupling_left.powi(2);
        let w2 = spec.lead_coupling_right.powi(2);
        let eik = ch.phase;
        let e1b = C64::new(s.eigenvalues[0], 0.0);
        let e2b = C64::new(spec.left_levels[0], 0.0);
        let e3b = C64::new(s.eigenvalues[2], 0.0);
        let h11 = e1b - eik * ((v2 + w2) * u * u / (2.0 * eta * (eta + de)));
        let h22 = e2b - eik * ((v2 + w2) / 2.0);
        let h33 = e3b - eik * ((v2 + w2) * u * u / (2.0 * eta * (eta - de)));
        let h12 = eik * (u * (v2 - w2) / (2.0 * (eta * (eta + de)).sqrt()));
        let h23 = eik * (u * (v2 - w2) / (2.0 * (eta * (eta - de)).sqrt()));
        let h13 = eik * (u * (v2 + w2) / (2.0 * std::f64::consts::SQRT_2 * eta));
        [
            [h11.norm(), h12.norm(), h13.norm()],
            [h12.norm(), h22.norm(), h23.norm()],
            [h13.norm(), h23.norm(), h33.norm()],
        ]
    }

    #[test]
    fn matches_asymmetric_closed_form() {
        let base = fig1_spec(0.0);
        let ch = channel_from_energy(0.6).unwrap();
        for (v, w) in [(0.5, 0.3), (0.2, 0.9), (0.7, 0.7)] {
            let spec = base.with_couplings(v, w);
            let h = build_effective_hamiltonian(&spec, &ch).unwrap();
            let want = three_state_closed_form_abs(&spec, &ch);
            for i in 0..3 {
                for j in 0..3 {
                    assert_abs_diff_eq!(h.matrix[(i, j)].norm(), want[i][j], epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn asymmetric_reduces_to_symmetric() {
        // setting w = v must reproduce the symmetric zero pattern and the
        // symmetric closed form element-wise over an (E, v) grid
        let base = fig1_spec(0.0);
        for ie in 1..10 {
            let e = -1.8 + 0.4 * ie as f64;
            let ch = channel_from_energy(e).unwrap();
            for iv in 0..10 {
                let v = 0.15 * iv as f64;
                let spec = base.with_couplings(v, v);
                let h = build_effective_hamiltonian(&spec, &ch).unwrap();
                let want = three_state_closed_form_abs(&spec, &ch);
                for i in 0..3 {
                    for j in 0..3 {
                        assert_abs_diff_eq!(
                            h.matrix[(i, j)].norm(),
                            want[i][j],
                            epsilon = 1e-13
                        );
                    }
                }
                assert!(h.matrix[(0, 1)].norm() < 1e-15);
                assert!(h.matrix[(1, 2)].norm() < 1e-15);
            }
        }
    }

    #[test]
    fn spec_json_roundtrip() {
        let spec = fig1_spec(0.42);
        let json = serde_json::to_string(&spec).unwrap();
        assert!(json.contains("\"u\":0.25"));
        assert!(json.contains("wire_a"));
        let back: DoubleDotSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(spec, back);
    }
}
