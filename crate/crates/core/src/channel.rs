//! Per-band channel vectors, DFT codebooks, beam selection and link rate.
//!
//! Channel vectors for a `M_y x M_z` uniform planar array are vectorized with
//! the y index running fastest: entry `mz * M_y + my`. The full codebook is the
//! Kronecker product `F_z ⊗ F_y`, so its columns follow the same ordering.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Thermal noise density in dBm/Hz.
pub const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Sub6,
    #[serde(rename = "mmwave")]
    MmWave,
}

impl Band {
    pub const ALL: [Band; 2] = [Band::Sub6, Band::MmWave];

    pub fn other(self) -> Band {
        match self {
            Band::Sub6 => Band::MmWave,
            Band::MmWave => Band::Sub6,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Band::Sub6 => "sub6",
            Band::MmWave => "mmwave",
        }
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A channel vector with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVector(Vec<Complex64>);

impl ComplexVector {
    pub fn new(entries: Vec<Complex64>) -> Result<Self> {
        if let Some(i) = entries.iter().position(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::Degenerate(format!("channel entry {i} is not finite")));
        }
        Ok(Self(entries))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![Complex64::new(0.0, 0.0); len])
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(self.0.iter().map(|v| v * c).collect())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }
}

/// Per-band radio parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandConfig {
    pub band: Band,
    pub center_frequency_hz: f64,
    pub bandwidth_hz: f64,
    pub antennas_y: usize,
    pub antennas_z: usize,
    /// Transmit energy per Hz of bandwidth (W/Hz); total power is this times the bandwidth.
    pub tx_energy_per_hz: f64,
    pub noise_figure_db: f64,
    pub codebook_size: usize,
}

impl BandConfig {
    /// 3.5 GHz, one 180 kHz PRB, 64x4 UPA, 1 W/Hz.
    pub fn sub6_default() -> Self {
        Self {
            band: Band::Sub6,
            center_frequency_hz: 3.5e9,
            bandwidth_hz: 180e3,
            antennas_y: 64,
            antennas_z: 4,
            tx_energy_per_hz: 1.0,
            noise_figure_db: 7.0,
            codebook_size: 64,
        }
    }

    /// 28 GHz, ten 180 kHz PRBs, 64x4 UPA, 0.1 W/Hz.
    pub fn mmwave_default() -> Self {
        Self {
            band: Band::MmWave,
            center_frequency_hz: 28e9,
            bandwidth_hz: 1800e3,
            antennas_y: 64,
            antennas_z: 4,
            tx_energy_per_hz: 0.1,
            noise_figure_db: 7.0,
            codebook_size: 64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.antennas_y == 0 || self.antennas_z == 0 {
            return Err(Error::Config(format!("{}: antenna counts must be positive", self.band)));
        }
        if self.codebook_size != self.antennas_y {
            return Err(Error::Config(format!(
                "{}: codebook size {} must equal antennas_y {} (no oversampling)",
                self.band, self.codebook_size, self.antennas_y
            )));
        }
        for (name, v) in [
            ("center_frequency_hz", self.center_frequency_hz),
            ("bandwidth_hz", self.bandwidth_hz),
            ("tx_energy_per_hz", self.tx_energy_per_hz),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{}: {name} must be positive", self.band)));
            }
        }
        if !self.noise_figure_db.is_finite() {
            return Err(Error::Config(format!("{}: noise figure must be finite", self.band)));
        }
        Ok(())
    }

    pub fn antenna_count(&self) -> usize {
        self.antennas_y * self.antennas_z
    }

    pub fn wavelength_m(&self) -> f64 {
        crate::framing::SPEED_OF_LIGHT / self.center_frequency_hz
    }

    /// Noise power in watts: -174 dBm/Hz over the bandwidth plus the noise figure.
    pub fn noise_power_w(&self) -> f64 {
        let dbm = THERMAL_NOISE_DBM_PER_HZ + 10.0 * self.bandwidth_hz.log10() + self.noise_figure_db;
        10f64.powf((dbm - 30.0) / 10.0)
    }

    pub fn tx_power_w(&self) -> f64 {
        self.tx_energy_per_hz * self.bandwidth_hz
    }
}

/// Column-major matrix of unit-norm beamforming vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub band: Band,
    rows: usize,
    cols: usize,
    beams: Vec<Complex64>,
}

impl Codebook {
    pub fn from_columns(band: Band, rows: usize, columns: Vec<Vec<Complex64>>) -> Result<Self> {
        let cols = columns.len();
        let mut beams = Vec::with_capacity(rows * cols);
        for col in columns {
            if col.len() != rows {
                return Err(Error::DimensionMismatch { expected: rows, actual: col.len() });
            }
            beams.extend(col);
        }
        Ok(Self { band, rows, cols, beams })
    }

    pub fn num_antennas(&self) -> usize {
        self.rows
    }

    pub fn num_beams(&self) -> usize {
        self.cols
    }

    pub fn column(&self, k: usize) -> &[Complex64] {
        &self.beams[k * self.rows..(k + 1) * self.rows]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[Complex64]> {
        self.beams.chunks_exact(self.rows)
    }
}

/// Normalized `n`-point DFT matrix, column-major: column k, row m is `exp(j2πmk/n)/√n`.
pub fn dft_matrix(n: usize) -> Vec<Complex64> {
    let scale = 1.0 / (n as f64).sqrt();
    let mut out = Vec::with_capacity(n * n);
    for k in 0..n {
        for m in 0..n {
            let phase = 2.0 * PI * ((m * k) % n) as f64 / n as f64;
            out.push(Complex64::from_polar(scale, phase));
        }
    }
    out
}

/// Full `F_z ⊗ F_y` codebook with `M_y * M_z` unit-norm columns.
pub fn build_dft_codebook(band: &BandConfig) -> Result<Codebook> {
    let (my, mz) = (band.antennas_y, band.antennas_z);
    if my == 0 || mz == 0 {
        return Err(Error::Config(format!("{}: antenna counts must be positive", band.band)));
    }
    let fy = dft_matrix(my);
    let fz = dft_matrix(mz);
    let m = my * mz;
    let mut columns = Vec::with_capacity(m);
    for kz in 0..mz {
        for ky in 0..my {
            let mut col = Vec::with_capacity(m);
            for iz in 0..mz {
                let z = fz[kz * mz + iz];
                for iy in 0..my {
                    col.push(z * fy[ky * my + iy]);
                }
            }
            columns.push(col);
        }
    }
    Codebook::from_columns(band.band, m, columns)
}

/// The `N_CB = M_y` beams actually searched: every azimuth DFT beam with the
/// z-direction beam held at broadside (DFT column 0).
pub fn search_codebook(band: &BandConfig) -> Result<Codebook> {
    band.validate()?;
    let full = build_dft_codebook(band)?;
    let columns = (0..band.codebook_size).map(|ky| full.column(ky).to_vec()).collect();
    Codebook::from_columns(band.band, full.num_antennas(), columns)
}

/// `|hᴴ f|²` for one codeword.
pub fn beam_gain(h: &[Complex64], f: &[Complex64]) -> f64 {
    h.iter().zip(f).map(|(a, b)| a.conj() * b).sum::<Complex64>().norm_sqr()
}

/// Exhaustive search for the codeword maximizing `|hᴴ f|²`; ties go to the lowest index.
pub fn best_beam(h: &ComplexVector, cb: &Codebook) -> Result<(usize, f64)> {
    if h.len() != cb.num_antennas() {
        return Err(Error::DimensionMismatch { expected: cb.num_antennas(), actual: h.len() });
    }
    if cb.num_beams() == 0 {
        return Err(Error::Config("empty codebook".into()));
    }
    let mut best = (0usize, f64::NEG_INFINITY);
    for (k, col) in cb.columns().enumerate() {
        let g = beam_gain(h.as_slice(), col);
        if g > best.1 {
            best = (k, g);
        }
    }
    Ok(best)
}

/// Linear receive SNR for a given beamforming gain.
pub fn snr(band: &BandConfig, beam_gain: f64) -> f64 {
    band.tx_power_w() / band.noise_power_w() * beam_gain
}

/// Shannon rate in bits/s.
pub fn achievable_rate(band: &BandConfig, snr: f64) -> f64 {
    band.bandwidth_hz * (1.0 + snr).log2()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn band(my: usize, mz: usize) -> BandConfig {
        BandConfig { antennas_y: my, antennas_z: mz, codebook_size: my, ..BandConfig::sub6_default() }
    }

    #[test]
    fn identity_codebook() {
        let cb = build_dft_codebook(&band(1, 1)).unwrap();
        assert_eq!(cb.num_beams(), 1);
        assert_abs_diff_eq!(cb.column(0)[0].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(cb.column(0)[0].im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn two_point_dft() {
        let cb = build_dft_codebook(&band(2, 1)).unwrap();
        let s = 1.0 / 2f64.sqrt();
        let expect = [[s, s], [s, -s]];
        for (k, col) in expect.iter().enumerate() {
            for (m, v) in col.iter().enumerate() {
                assert_abs_diff_eq!(cb.column(k)[m].re, *v, epsilon = 1e-12);
                assert_abs_diff_eq!(cb.column(k)[m].im, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn zero_antennas_rejected() {
        assert!(matches!(build_dft_codebook(&band(0, 1)), Err(Error::Config(_))));
        assert!(matches!(build_dft_codebook(&band(4, 0)), Err(Error::Config(_))));
    }

    #[test]
    fn codebook_size_must_match_antennas_y() {
        let mut b = band(8, 2);
        b.codebook_size = 16;
        assert!(search_codebook(&b).is_err());
    }

    #[test]
    fn search_codebook_is_broadside_in_z() {
        let b = band(4, 2);
        let cb = search_codebook(&b).unwrap();
        assert_eq!(cb.num_beams(), 4);
        assert_eq!(cb.num_antennas(), 8);
        for col in cb.columns() {
            for my in 0..4 {
                assert_abs_diff_eq!((col[my] - col[4 + my]).norm(), 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn aligned_channel_picks_column() {
        let cb = build_dft_codebook(&band(4, 2)).unwrap();
        let h = ComplexVector::new(cb.column(3).iter().map(|c| c * 2.0).collect()).unwrap();
        let (k, g) = best_beam(&h, &cb).unwrap();
        assert_eq!(k, 3);
        assert_abs_diff_eq!(g, 4.0, epsilon = 1e-10);
    }

    #[test]
    fn orthogonal_channel_picks_zero() {
        let cb = build_dft_codebook(&band(4, 1)).unwrap();
        let h = ComplexVector::new(cb.column(0).to_vec()).unwrap();
        assert_eq!(best_beam(&h, &cb).unwrap().0, 0);
    }

    #[test]
    fn dimension_mismatch() {
        let cb = build_dft_codebook(&band(4, 1)).unwrap();
        let h = ComplexVector::zeros(3);
        assert!(matches!(best_beam(&h, &cb), Err(Error::DimensionMismatch { expected: 4, actual: 3 })));
    }

    #[test]
    fn zero_channel_ties_to_lowest_index() {
        let cb = build_dft_codebook(&band(8, 1)).unwrap();
        assert_eq!(best_beam(&ComplexVector::zeros(8), &cb).unwrap(), (0, 0.0));
    }

    #[test]
    fn non_finite_entries_rejected() {
        assert!(ComplexVector::new(vec![Complex64::new(f64::NAN, 0.0)]).is_err());
    }

    #[test]
    fn snr_unity_when_power_equals_noise() {
        let mut b = BandConfig::sub6_default();
        b.tx_energy_per_hz = b.noise_power_w() / b.bandwidth_hz;
        assert_abs_diff_eq!(snr(&b, 1.0), 1.0, epsilon = 1e-12);
        assert_eq!(snr(&b, 0.0), 0.0);
    }

    #[test]
    fn snr_matches_db_budget() {
        // Independent dB-domain link budget: P[dBm] - N[dBm] + G[dB].
        for b in [BandConfig::sub6_default(), BandConfig::mmwave_default()] {
            let gain: f64 = 3.7e-18;
            let p_dbm = 10.0 * (b.tx_energy_per_hz * b.bandwidth_hz * 1e3).log10();
            let n_dbm = -174.0 + 10.0 * b.bandwidth_hz.log10() + 7.0;
            let expect_db = p_dbm - n_dbm + 10.0 * gain.log10();
            let got_db = 10.0 * snr(&b, gain).log10();
            assert_abs_diff_eq!(got_db, expect_db, epsilon = 1e-9);
        }
    }

    #[test]
    fn rate_examples() {
        let mut b = BandConfig::sub6_default();
        assert_eq!(achievable_rate(&b, 0.0), 0.0);
        assert_abs_diff_eq!(achievable_rate(&b, 1.0), 180e3, epsilon = 1e-6);
        b.bandwidth_hz = 1800e3;
        assert_abs_diff_eq!(achievable_rate(&b, 3.0), 3600e3, epsilon = 1e-6);
    }
}
