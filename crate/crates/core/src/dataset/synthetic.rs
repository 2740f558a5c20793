//! Synthetic street scene standing in for ray-traced channels.
//!
//! UEs sit on a regular grid along a street. Each band's channel is a sum of
//! a direct path and one reflection off each street wall (image method),
//! scaled by log-distance path loss and a log-normal shadowing field. The
//! shadowing fields are Gaussian processes with an exponential kernel,
//! approximated by random Fourier features; the two bands share a common
//! field weighted by the cross-band coefficient.

use std::borrow::Cow;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{ChannelSample, ChannelSource};
use crate::channel::{BandConfig, ComplexVector};
use crate::error::{Error, Result};
use crate::framing::SPEED_OF_LIGHT;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSceneConfig {
    /// Street length along x (m).
    pub grid_length: f64,
    /// Street width along y (m).
    pub grid_width: f64,
    pub grid_spacing: f64,
    pub ue_height: f64,
    /// UEs drawn without replacement from the grid; `None` keeps every point.
    pub ue_count: Option<usize>,
    pub bs_position: [f64; 3],
    pub path_loss_exponent_sub6: f64,
    pub path_loss_exponent_mmwave: f64,
    /// Extra fixed loss per band (dB), calibrating rates into a realistic range.
    pub system_loss_db_sub6: f64,
    pub system_loss_db_mmwave: f64,
    pub shadowing_std_db: f64,
    pub shadowing_correlation_m: f64,
    /// Share of the shadowing field common to both bands, in [0, 1].
    pub cross_band_coefficient: f64,
    /// Wall positions along y (m); each contributes one reflected path.
    pub wall_positions: Vec<f64>,
    pub reflection_loss_db: f64,
    /// Attenuation of the direct mmWave path when blocked (dB).
    pub blockage_loss_db: f64,
    /// Random Fourier features per shadowing field.
    pub shadowing_features: usize,
    pub rng_seed: u64,
}

impl Default for SyntheticSceneConfig {
    fn default() -> Self {
        Self {
            grid_length: 550.0,
            grid_width: 35.0,
            grid_spacing: 0.2,
            ue_height: 2.0,
            ue_count: Some(54_480),
            bs_position: [275.0, -5.0, 6.0],
            path_loss_exponent_sub6: 2.8,
            path_loss_exponent_mmwave: 4.4,
            system_loss_db_sub6: 88.0,
            system_loss_db_mmwave: 58.0,
            shadowing_std_db: 5.0,
            shadowing_correlation_m: 10.0,
            cross_band_coefficient: 0.7,
            wall_positions: vec![-10.0, 45.0],
            reflection_loss_db: 8.0,
            blockage_loss_db: 25.0,
            shadowing_features: 256,
            rng_seed: 0,
        }
    }
}

impl SyntheticSceneConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("synthetic scene: {m}")));
        if !(self.grid_spacing > 0.0 && self.grid_spacing.is_finite()) {
            return bad("grid spacing must be positive");
        }
        if !(self.grid_length >= 0.0 && self.grid_width >= 0.0) {
            return bad("grid extent must be non-negative");
        }
        if self.grid_spacing > self.grid_length.max(self.grid_width) {
            return bad("grid too small for its spacing");
        }
        if !(self.shadowing_correlation_m > 0.0) {
            return bad("shadowing correlation distance must be positive");
        }
        if !(0.0..=1.0).contains(&self.cross_band_coefficient) {
            return bad("cross-band coefficient must lie in [0, 1]");
        }
        if !(self.shadowing_std_db >= 0.0) || self.shadowing_features == 0 {
            return bad("shadowing needs a non-negative std and at least one feature");
        }
        if self.ue_count == Some(0) {
            return bad("ue_count must be positive");
        }
        let finite = [
            self.ue_height,
            self.path_loss_exponent_sub6,
            self.path_loss_exponent_mmwave,
            self.system_loss_db_sub6,
            self.system_loss_db_mmwave,
            self.reflection_loss_db,
            self.blockage_loss_db,
        ];
        if !finite.iter().chain(&self.bs_position).chain(&self.wall_positions).all(|v| v.is_finite()) {
            return bad("parameters must be finite");
        }
        Ok(())
    }

    fn axis_points(&self, extent: f64) -> usize {
        (extent / self.grid_spacing + 1e-9).floor() as usize + 1
    }

    /// Number of points on the full grid.
    pub fn grid_points(&self) -> usize {
        self.axis_points(self.grid_length) * self.axis_points(self.grid_width)
    }
}

/// Stationary Gaussian field with unit variance and covariance
/// `exp(−‖Δ‖ / d_c)`. The exponential kernel's spectral density in 2-D is a
/// bivariate Cauchy law, sampled as `Z / (d_c |g|)`.
#[derive(Debug, Clone, PartialEq)]
struct FourierField {
    omega: Vec<[f64; 2]>,
    phase: Vec<f64>,
}

impl FourierField {
    fn new<R: Rng>(features: usize, correlation_m: f64, rng: &mut R) -> Self {
        let mut omega = Vec::with_capacity(features);
        let mut phase = Vec::with_capacity(features);
        for _ in 0..features {
            let zx: f64 = rng.sample(StandardNormal);
            let zy: f64 = rng.sample(StandardNormal);
            let g: f64 = rng.sample::<f64, _>(StandardNormal).abs().max(1e-12);
            omega.push([zx / (correlation_m * g), zy / (correlation_m * g)]);
            phase.push(rng.gen_range(0.0..2.0 * PI));
        }
        Self { omega, phase }
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        let k = self.omega.len() as f64;
        let s: f64 = self.omega.iter().zip(&self.phase).map(|(w, p)| (w[0] * x + w[1] * y + p).cos()).sum();
        s * (2.0 / k).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    cfg: SyntheticSceneConfig,
    sub6: BandConfig,
    mmwave: BandConfig,
    positions: Vec<(u64, [f64; 3])>,
    common: FourierField,
    own_sub6: FourierField,
    own_mmwave: FourierField,
}

struct Path {
    length: f64,
    u_x: f64,
    u_z: f64,
    loss_db: f64,
}

impl SyntheticScene {
    pub fn new(cfg: SyntheticSceneConfig, sub6: &BandConfig, mmwave: &BandConfig) -> Result<Self> {
        cfg.validate()?;
        sub6.validate()?;
        mmwave.validate()?;
        let nx = cfg.axis_points(cfg.grid_length);
        let ny = cfg.axis_points(cfg.grid_width);
        let total = nx * ny;
        let mut rng = crate::seed::rng(cfg.rng_seed, 0, "scene-grid");
        let mut ids: Vec<usize> = match cfg.ue_count {
            Some(n) if n < total => sample(&mut rng, total, n).into_vec(),
            _ => (0..total).collect(),
        };
        ids.sort_unstable();
        let positions = ids
            .into_iter()
            .map(|id| {
                let (ix, iy) = (id / ny, id % ny);
                (id as u64, [ix as f64 * cfg.grid_spacing, iy as f64 * cfg.grid_spacing, cfg.ue_height])
            })
            .collect();
        let field = |name: &str| {
            let mut r = crate::seed::rng(cfg.rng_seed, 0, name);
            FourierField::new(cfg.shadowing_features, cfg.shadowing_correlation_m, &mut r)
        };
        Ok(Self {
            common: field("shadow-common"),
            own_sub6: field("shadow-sub6"),
            own_mmwave: field("shadow-mmwave"),
            cfg,
            sub6: sub6.clone(),
            mmwave: mmwave.clone(),
            positions,
        })
    }

    pub fn config(&self) -> &SyntheticSceneConfig {
        &self.cfg
    }

    /// Shadowing in dB at a point, `(sub-6, mmWave)`.
    pub fn shadowing_db(&self, x: f64, y: f64) -> (f64, f64) {
        let c = self.cfg.cross_band_coefficient;
        let shared = self.common.eval(x, y);
        let s = self.cfg.shadowing_std_db;
        (
            s * (c.sqrt() * shared + (1.0 - c).sqrt() * self.own_sub6.eval(x, y)),
            s * (c.sqrt() * shared + (1.0 - c).sqrt() * self.own_mmwave.eval(x, y)),
        )
    }

    fn paths(&self, ue: [f64; 3]) -> Vec<Path> {
        let bs = self.cfg.bs_position;
        let make = |by: f64, loss_db: f64| {
            let (dx, dy, dz) = (ue[0] - bs[0], ue[1] - by, ue[2] - bs[2]);
            let length = (dx * dx + dy * dy + dz * dz).sqrt().max(1.0);
            Path { length, u_x: dx / length, u_z: dz / length, loss_db }
        };
        let mut out = vec![make(bs[1], 0.0)];
        for &wall in &self.cfg.wall_positions {
            out.push(make(2.0 * wall - bs[1], self.cfg.reflection_loss_db));
        }
        out
    }

    /// Sum of path contributions, element `mz * M_y + my` carrying the
    /// half-wavelength phase progression along x (y-index) and z.
    fn channel(
        &self,
        band: &BandConfig,
        paths: &[Path],
        exponent: f64,
        extra_db: f64,
        first_path_db: f64,
    ) -> Vec<Complex64> {
        let (my, mz) = (band.antennas_y, band.antennas_z);
        let lambda = SPEED_OF_LIGHT / band.center_frequency_hz;
        let fspl_1m = 20.0 * (4.0 * PI / lambda).log10();
        let mut h = vec![Complex64::new(0.0, 0.0); my * mz];
        for (p, path) in paths.iter().enumerate() {
            let mut loss = fspl_1m + 10.0 * exponent * path.length.log10() + path.loss_db + extra_db;
            if p == 0 {
                loss += first_path_db;
            }
            let amp = 10f64.powf(-loss / 20.0);
            let a = Complex64::from_polar(amp, -2.0 * PI * (path.length / lambda).fract());
            let step_y = Complex64::from_polar(1.0, PI * path.u_x);
            let step_z = Complex64::from_polar(1.0, PI * path.u_z);
            let mut az = a;
            for iz in 0..mz {
                let mut v = az;
                for iy in 0..my {
                    h[iz * my + iy] += v;
                    v *= step_y;
                }
                az *= step_z;
            }
        }
        h
    }

    fn build(&self, index: usize) -> ChannelSample {
        let (ue_id, coords) = self.positions[index];
        let (sh_sub6, sh_mm) = self.shadowing_db(coords[0], coords[1]);
        let paths = self.paths(coords);
        let c = &self.cfg;
        let sub6 = self.channel(&self.sub6, &paths, c.path_loss_exponent_sub6, c.system_loss_db_sub6 - sh_sub6, 0.0);
        let mm_loss = c.system_loss_db_mmwave - sh_mm;
        let nb = self.channel(&self.mmwave, &paths, c.path_loss_exponent_mmwave, mm_loss, 0.0);
        let b = self.channel(&self.mmwave, &paths, c.path_loss_exponent_mmwave, mm_loss, c.blockage_loss_db);
        let vec = |v: Vec<Complex64>| ComplexVector::new(v).expect("finite by construction");
        ChannelSample { ue_id, coords, h_sub6: vec(sub6), h_mm_nb: vec(nb), h_mm_b: vec(b) }
    }

    pub fn samples(&self) -> Vec<ChannelSample> {
        (0..self.positions.len()).map(|i| self.build(i)).collect()
    }
}

impl ChannelSource for SyntheticScene {
    fn len(&self) -> usize {
        self.positions.len()
    }

    fn sample(&self, index: usize) -> Cow<'_, ChannelSample> {
        Cow::Owned(self.build(index))
    }
}

/// Materializes every UE of the scene. Large scenes are better consumed
/// lazily through [`SyntheticScene`] as a [`ChannelSource`].
pub fn generate_synthetic_scene(
    cfg: &SyntheticSceneConfig,
    sub6: &BandConfig,
    mmwave: &BandConfig,
) -> Result<Vec<ChannelSample>> {
    Ok(SyntheticScene::new(cfg.clone(), sub6, mmwave)?.samples())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn small() -> SyntheticSceneConfig {
        SyntheticSceneConfig {
            grid_length: 20.0,
            grid_width: 4.0,
            grid_spacing: 1.0,
            ue_count: None,
            ..Default::default()
        }
    }

    fn bands() -> (BandConfig, BandConfig) {
        let s = BandConfig { antennas_y: 8, antennas_z: 2, codebook_size: 8, ..BandConfig::sub6_default() };
        let m = BandConfig { antennas_y: 16, antennas_z: 2, codebook_size: 16, ..BandConfig::mmwave_default() };
        (s, m)
    }

    #[test]
    fn spacing_equal_to_length_is_single_row() {
        let (s, m) = bands();
        let cfg =
            SyntheticSceneConfig { grid_length: 10.0, grid_width: 0.0, grid_spacing: 10.0, ue_count: None, ..small() };
        let scene = generate_synthetic_scene(&cfg, &s, &m).unwrap();
        assert!(scene.iter().all(|u| u.coords[1] == 0.0));
        assert_eq!(scene.len(), 2);
    }

    #[test]
    fn oversized_spacing_rejected() {
        let (s, m) = bands();
        let cfg = SyntheticSceneConfig { grid_spacing: 100.0, ..small() };
        assert!(matches!(generate_synthetic_scene(&cfg, &s, &m), Err(Error::Config(_))));
    }

    #[test]
    fn vector_lengths_follow_bands() {
        let (s, m) = bands();
        let scene = generate_synthetic_scene(&small(), &s, &m).unwrap();
        assert_eq!(scene.len(), 21 * 5);
        for u in &scene {
            assert_eq!(u.h_sub6.len(), 16);
            assert_eq!(u.h_mm_nb.len(), 32);
            assert_eq!(u.h_mm_b.len(), 32);
            assert_eq!(u.coords[2], 2.0);
        }
    }

    #[test]
    fn blockage_attenuates_direct_path_only() {
        let (s, m) = bands();
        let los_only = SyntheticSceneConfig { wall_positions: vec![], ..small() };
        let ratio = 10f64.powf(-25.0 / 10.0);
        for u in generate_synthetic_scene(&los_only, &s, &m).unwrap() {
            assert_relative_eq!(u.h_mm_b.norm_sqr(), ratio * u.h_mm_nb.norm_sqr(), max_relative = 1e-9);
        }
        // With reflections the blocked channel keeps some energy but loses most on average.
        let scene = generate_synthetic_scene(&small(), &s, &m).unwrap();
        let e_b: f64 = scene.iter().map(|u| u.h_mm_b.norm_sqr()).sum();
        let e_nb: f64 = scene.iter().map(|u| u.h_mm_nb.norm_sqr()).sum();
        assert!(e_b < 0.5 * e_nb && e_b > ratio * e_nb);
    }

    #[test]
    fn subsampling_keeps_requested_count() {
        let (s, m) = bands();
        let cfg = SyntheticSceneConfig { ue_count: Some(17), ..small() };
        let scene = generate_synthetic_scene(&cfg, &s, &m).unwrap();
        assert_eq!(scene.len(), 17);
        assert!(scene.windows(2).all(|w| w[0].ue_id < w[1].ue_id));
    }

    #[test]
    fn unit_variance_field() {
        let mut rng = crate::seed::rng(1, 0, "field-test");
        let f = FourierField::new(512, 1.0, &mut rng);
        let vals: Vec<f64> = (0..4000).map(|i| f.eval((i % 80) as f64 * 3.0, (i / 80) as f64 * 3.0)).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
        assert!((var - 1.0).abs() < 0.15, "variance {var}");
    }
}
