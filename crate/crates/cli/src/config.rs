//! Run configuration: TOML ingestion, defaults and validation.
//!
//! Every field is optional. Omitted fields take the reference scenario
//! values: a 10x10 half-wavelength RIS fed by four sources 60 cm behind it,
//! `T = 0.64 us`, `W = 100 MHz`, `f_c = 3 GHz`, `K = 64` frequencies,
//! `36 x 36` directions, `P = 10 W` and `P_fa = 1e-6`. The `desk` profile
//! shrinks the grids to `K = 16` and `18 x 18`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8};
use std::fmt;

use ris_dfrc_core::{
    AngleBox, ElementPattern, Grids, MimoScene, OptimConfig, PlanarArray, Scene, SignalParams, SourceSet,
    TwoBeamLayout, WaveformSolver, SPEED_OF_LIGHT,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// One problem found while reading or validating a config.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid configuration:\n{}", format_issues(.0))]
pub struct ConfigError(pub Vec<ConfigIssue>);

impl ConfigError {
    pub fn issues(&self) -> &[ConfigIssue] {
        &self.0
    }

    /// True if some issue is reported at `path`.
    pub fn mentions(&self, path: &str) -> bool {
        self.0.iter().any(|i| i.path == path)
    }
}

fn format_issues(issues: &[ConfigIssue]) -> String {
    issues.iter().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// `K = 64`, `36 x 36` directions.
    #[default]
    Paper,
    /// `K = 16`, `18 x 18` directions.
    Desk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverName {
    #[default]
    Auto,
    Decoupled,
    Dense,
    Iterative,
}

impl From<SolverName> for WaveformSolver {
    fn from(s: SolverName) -> Self {
        match s {
            SolverName::Auto => WaveformSolver::Auto,
            SolverName::Decoupled => WaveformSolver::Decoupled,
            SolverName::Dense => WaveformSolver::Dense,
            SolverName::Iterative => WaveformSolver::Iterative,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub ris_rows: usize,
    pub ris_cols: usize,
    /// Element pitch in meters; half a carrier wavelength when omitted.
    pub element_spacing_m: Option<f64>,
    /// Sources on a `[tiles_x, tiles_y]` partition of the RIS.
    pub source_tiles: [usize; 2],
    pub source_distance_m: f64,
    pub element_gain: f64,
    pub source_gain: f64,
    pub pulse_duration_s: f64,
    pub bandwidth_hz: f64,
    pub carrier_hz: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            ris_rows: 10,
            ris_cols: 10,
            element_spacing_m: None,
            source_tiles: [2, 2],
            source_distance_m: 0.6,
            element_gain: 4.0,
            source_gain: 4.0,
            pulse_duration_s: 0.64e-6,
            bandwidth_hz: 100e6,
            carrier_hz: 3e9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub freq_points: Option<usize>,
    pub theta_points: Option<usize>,
    pub phi_points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesiredConfig {
    pub eta: f64,
    pub eta_list: Vec<f64>,
    pub radar_band_hz: Option<[f64; 2]>,
    pub radar_theta_rad: [f64; 2],
    pub radar_phi_rad: [f64; 2],
    pub comm_band_hz: Option<[f64; 2]>,
    pub comm_theta_rad: [f64; 2],
    pub comm_phi_rad: [f64; 2],
}

impl Default for DesiredConfig {
    fn default() -> Self {
        Self {
            eta: 0.5,
            eta_list: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            radar_band_hz: None,
            radar_theta_rad: [0.0, FRAC_PI_8],
            radar_phi_rad: [0.0, FRAC_PI_8],
            comm_band_hz: None,
            comm_theta_rad: [-FRAC_PI_4, -FRAC_PI_8],
            comm_phi_rad: [-FRAC_PI_4, -FRAC_PI_8],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub power_w: f64,
    pub max_outer_iters: usize,
    pub rel_obj_tol: f64,
    pub lambda_bisect_tol: f64,
    pub lambda_bisect_max_iters: usize,
    pub x_inner_sweeps: usize,
    pub seed: u64,
    pub solver: SolverName,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        let d = OptimConfig::default();
        Self {
            power_w: 10.0,
            max_outer_iters: d.max_outer_iters,
            rel_obj_tol: d.rel_obj_tol,
            lambda_bisect_tol: d.lambda_bisect_tol,
            lambda_bisect_max_iters: d.lambda_bisect_max_iters,
            x_inner_sweeps: d.x_inner_sweeps,
            seed: d.seed,
            solver: SolverName::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerformanceConfig {
    pub p_fa: f64,
    pub pulses: u32,
    pub snr_db: Vec<f64>,
    pub mc_samples: usize,
    pub mc_seed: u64,
}

impl Default for PerformanceConfig {
    fn default() -> Self {
        Self {
            p_fa: 1e-6,
            pulses: 1,
            snr_db: vec![5.0, 10.0, 15.0, 20.0, 30.0],
            mc_samples: 10_000,
            mc_seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MimoConfig {
    pub rows: usize,
    pub cols: usize,
    pub element_spacing_m: Option<f64>,
}

impl Default for MimoConfig {
    fn default() -> Self {
        Self {
            rows: 10,
            cols: 10,
            element_spacing_m: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
    pub cut_freqs_mhz: Vec<f64>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: "out".into(),
            cut_freqs_mhz: vec![-37.5, 37.5],
        }
    }
}

/// Fully resolved run configuration. After [`RunConfig::from_toml`] every
/// optional field holds its effective value.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub profile: Profile,
    pub scenario: ScenarioConfig,
    pub grids: GridConfig,
    pub desired: DesiredConfig,
    pub optimizer: OptimizerConfig,
    pub performance: PerformanceConfig,
    pub mimo: MimoConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    /// Parses, fills defaults and validates.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let de = toml::Deserializer::new(text);
        let mut cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            ConfigError(vec![ConfigIssue {
                path: if path == "." { String::from("<root>") } else { path },
                message: inner.message().trim().to_string(),
            }])
        })?;
        cfg.resolve();
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reference scenario with every default filled in.
    pub fn paper() -> Self {
        Self::from_toml("").expect("defaults are valid")
    }

    /// Reduced grids for quick runs.
    pub fn desk() -> Self {
        Self::from_toml("profile = \"desk\"").expect("defaults are valid")
    }

    fn resolve(&mut self) {
        let (k, n) = match self.profile {
            Profile::Paper => (64, 36),
            Profile::Desk => (16, 18),
        };
        self.grids.freq_points.get_or_insert(k);
        self.grids.theta_points.get_or_insert(n);
        self.grids.phi_points.get_or_insert(n);
        let half_wave = SPEED_OF_LIGHT / self.scenario.carrier_hz / 2.0;
        self.scenario.element_spacing_m.get_or_insert(half_wave);
        self.mimo.element_spacing_m.get_or_insert(half_wave);
        let w = self.scenario.bandwidth_hz;
        self.desired.radar_band_hz.get_or_insert([-w / 2.0, -w / 4.0]);
        self.desired.comm_band_hz.get_or_insert([-w / 2.0, w / 2.0]);
    }

    /// Re-applies validation after programmatic edits such as CLI overrides.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut issues = Vec::new();
        let mut bad = |path: &str, message: String| {
            issues.push(ConfigIssue {
                path: path.to_string(),
                message,
            })
        };
        let s = &self.scenario;
        for (path, v) in [("scenario.ris_rows", s.ris_rows), ("scenario.ris_cols", s.ris_cols)] {
            if v == 0 {
                bad(path, "must be at least 1".into());
            }
        }
        if s.source_tiles.contains(&0) {
            bad("scenario.source_tiles", "tile counts must be at least 1".into());
        }
        for (path, v) in [
            ("scenario.element_spacing_m", s.element_spacing_m.unwrap_or(f64::NAN)),
            ("scenario.source_distance_m", s.source_distance_m),
            ("scenario.element_gain", s.element_gain),
            ("scenario.source_gain", s.source_gain),
            ("scenario.pulse_duration_s", s.pulse_duration_s),
            ("scenario.bandwidth_hz", s.bandwidth_hz),
            ("scenario.carrier_hz", s.carrier_hz),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                bad(path, format!("must be positive and finite, got {v}"));
            }
        }
        if let Err(e) = SignalParams::new(s.pulse_duration_s, s.bandwidth_hz, s.carrier_hz) {
            bad("scenario", e.to_string());
        }
        for (path, v) in [
            ("grids.freq_points", self.grids.freq_points),
            ("grids.theta_points", self.grids.theta_points),
            ("grids.phi_points", self.grids.phi_points),
        ] {
            if v == Some(0) {
                bad(path, "must be at least 1".into());
            }
        }

        let d = &self.desired;
        if !(0.0..=1.0).contains(&d.eta) {
            bad("desired.eta", format!("must lie in [0, 1], got {}", d.eta));
        }
        if d.eta_list.is_empty() {
            bad("desired.eta_list", "must not be empty".into());
        }
        for (i, e) in d.eta_list.iter().enumerate() {
            if !(0.0..=1.0).contains(e) {
                bad(&format!("desired.eta_list[{i}]"), format!("must lie in [0, 1], got {e}"));
            }
        }
        let half_w = s.bandwidth_hz / 2.0;
        for (path, band) in [("desired.radar_band_hz", d.radar_band_hz), ("desired.comm_band_hz", d.comm_band_hz)] {
            let [lo, hi] = band.unwrap_or([f64::NAN; 2]);
            if !(lo <= hi && lo >= -half_w && hi <= half_w) {
                bad(path, format!("need -W/2 <= low <= high <= W/2, got [{lo}, {hi}]"));
            }
        }
        for (path, range) in [
            ("desired.radar_theta_rad", d.radar_theta_rad),
            ("desired.radar_phi_rad", d.radar_phi_rad),
            ("desired.comm_theta_rad", d.comm_theta_rad),
            ("desired.comm_phi_rad", d.comm_phi_rad),
        ] {
            let [lo, hi] = range;
            if !(lo <= hi && lo > -FRAC_PI_2 && hi < FRAC_PI_2) {
                bad(path, format!("need -pi/2 < low <= high < pi/2, got [{lo}, {hi}]"));
            }
        }

        let o = &self.optimizer;
        if !(o.power_w > 0.0 && o.power_w.is_finite()) {
            bad("optimizer.power_w", format!("must be positive and finite, got {}", o.power_w));
        }
        if let Err(ris_dfrc_core::Error::InvalidParameter { name, reason }) = self.optim().validate() {
            bad(&format!("optimizer.{name}"), reason);
        }

        let p = &self.performance;
        if !(p.p_fa > 0.0 && p.p_fa < 1.0) {
            bad("performance.p_fa", format!("must lie in (0, 1), got {}", p.p_fa));
        }
        if p.pulses == 0 {
            bad("performance.pulses", "must be at least 1".into());
        }
        if p.snr_db.is_empty() {
            bad("performance.snr_db", "must not be empty".into());
        }
        for (i, v) in p.snr_db.iter().enumerate() {
            if !v.is_finite() {
                bad(&format!("performance.snr_db[{i}]"), "must be finite".into());
            }
        }
        if p.mc_samples == 0 {
            bad("performance.mc_samples", "must be at least 1".into());
        }

        let m = &self.mimo;
        for (path, v) in [("mimo.rows", m.rows), ("mimo.cols", m.cols)] {
            if v == 0 {
                bad(path, "must be at least 1".into());
            }
        }
        let ms = m.element_spacing_m.unwrap_or(f64::NAN);
        if !(ms > 0.0 && ms.is_finite()) {
            bad("mimo.element_spacing_m", format!("must be positive and finite, got {ms}"));
        }

        if self.output.dir.is_empty() {
            bad("output.dir", "must not be empty".into());
        }
        for (i, f) in self.output.cut_freqs_mhz.iter().enumerate() {
            if f.is_nan() || f.abs() * 1e6 > half_w {
                bad(&format!("output.cut_freqs_mhz[{i}]"), format!("{f} MHz lies outside the band"));
            }
        }

        if issues.is_empty() {
            Ok(())
        } else {
            Err(ConfigError(issues))
        }
    }

    /// The configuration with the output directory blanked; this is what
    /// gets hashed and recorded in metadata.
    pub fn canonical(&self) -> Self {
        let mut c = self.clone();
        c.output.dir.clear();
        c
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(&self.canonical()).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn signal(&self) -> SignalParams {
        let s = &self.scenario;
        SignalParams::new(s.pulse_duration_s, s.bandwidth_hz, s.carrier_hz).expect("validated")
    }

    pub fn scene(&self) -> ris_dfrc_core::Result<Scene> {
        let s = &self.scenario;
        let ris = PlanarArray::new(s.ris_rows, s.ris_cols, s.element_spacing_m.expect("resolved"))?;
        let sources = SourceSet::tiled(&ris, s.source_tiles[0], s.source_tiles[1], s.source_distance_m)?;
        Scene::new(
            &ris,
            sources,
            ElementPattern::cosine(s.element_gain)?,
            ElementPattern::cosine(s.source_gain)?,
            self.signal(),
        )
    }

    pub fn mimo_scene(&self) -> ris_dfrc_core::Result<MimoScene> {
        let m = &self.mimo;
        let array = PlanarArray::new(m.rows, m.cols, m.element_spacing_m.expect("resolved"))?;
        Ok(MimoScene::new(
            &array,
            ElementPattern::cosine(self.scenario.element_gain)?,
            self.signal(),
        ))
    }

    pub fn grids(&self) -> ris_dfrc_core::Result<Grids> {
        let g = &self.grids;
        Grids::uniform(
            &self.signal(),
            g.freq_points.expect("resolved"),
            g.theta_points.expect("resolved"),
            g.phi_points.expect("resolved"),
        )
    }

    /// Number of space-frequency grid points `K L`.
    pub fn grid_points(&self) -> usize {
        let g = &self.grids;
        g.freq_points.unwrap_or(0) * g.theta_points.unwrap_or(0) * g.phi_points.unwrap_or(0)
    }

    pub fn layout(&self) -> TwoBeamLayout {
        let d = &self.desired;
        TwoBeamLayout {
            radar_band: d.radar_band_hz.expect("resolved"),
            radar_box: AngleBox {
                theta: d.radar_theta_rad,
                phi: d.radar_phi_rad,
            },
            comm_band: d.comm_band_hz.expect("resolved"),
            comm_box: AngleBox {
                theta: d.comm_theta_rad,
                phi: d.comm_phi_rad,
            },
        }
    }

    pub fn optim(&self) -> OptimConfig {
        let o = &self.optimizer;
        OptimConfig {
            max_outer_iters: o.max_outer_iters,
            rel_obj_tol: o.rel_obj_tol,
            lambda_bisect_tol: o.lambda_bisect_tol,
            lambda_bisect_max_iters: o.lambda_bisect_max_iters,
            x_inner_sweeps: o.x_inner_sweeps,
            seed: o.seed,
            solver: o.solver.into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_reference_scenario() {
        let cfg = RunConfig::from_toml("").unwrap();
        let scene = cfg.scene().unwrap();
        assert_eq!(scene.num_elements(), 100);
        assert_eq!(scene.num_sources(), 4);
        assert_eq!(scene.signal.samples(), 64);
        let g = cfg.grids().unwrap();
        assert_eq!((g.num_freqs(), g.num_angles()), (64, 1296));
        assert_eq!(cfg.optimizer.power_w, 10.0);
        assert_eq!(cfg.performance.p_fa, 1e-6);
        assert_eq!(cfg.mimo_scene().unwrap().num_antennas(), 100);
        assert!((cfg.scenario.element_spacing_m.unwrap() - 0.05).abs() < 1e-3);
    }

    #[test]
    fn desk_profile_shrinks_grids() {
        let cfg = RunConfig::desk();
        let g = cfg.grids().unwrap();
        assert_eq!((g.num_freqs(), g.shape()), (16, Some((18, 18))));
        let explicit = RunConfig::from_toml("profile = \"desk\"\n[grids]\nfreq_points = 8").unwrap();
        assert_eq!(explicit.grids().unwrap().num_freqs(), 8);
    }

    #[test]
    fn default_layout_is_standard() {
        let cfg = RunConfig::paper();
        assert_eq!(cfg.layout(), TwoBeamLayout::standard(&cfg.signal()));
    }

    #[test]
    fn range_errors_name_the_field() {
        let err = RunConfig::from_toml("[desired]\neta = 1.5").unwrap_err();
        assert!(err.mentions("desired.eta"), "{err}");
        let err = RunConfig::from_toml("[grids]\nfreq_points = 0").unwrap_err();
        assert!(err.mentions("grids.freq_points"), "{err}");
        let err = RunConfig::from_toml("[optimizer]\nx_inner_sweeps = 0\npower_w = -1").unwrap_err();
        assert!(err.mentions("optimizer.x_inner_sweeps") && err.mentions("optimizer.power_w"), "{err}");
    }

    #[test]
    fn unknown_and_mistyped_keys_are_rejected() {
        let err = RunConfig::from_toml("[grids]\nfreq_pts = 4").unwrap_err();
        assert_eq!(err.issues().len(), 1);
        assert!(err.issues()[0].path.starts_with("grids"), "{err}");
        assert!(err.issues()[0].message.contains("freq_pts"), "{err}");
        let err = RunConfig::from_toml("[optimizer]\npower_w = \"ten\"").unwrap_err();
        assert_eq!(err.issues()[0].path, "optimizer.power_w");
        assert!(RunConfig::from_toml("bogus = 1").is_err());
    }

    #[test]
    fn hash_ignores_output_dir_only() {
        let a = RunConfig::paper();
        let mut b = a.clone();
        b.output.dir = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        b.optimizer.seed = 7;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn resolved_config_round_trips_through_toml() {
        let a = RunConfig::desk();
        let b = RunConfig::from_toml(&a.to_toml()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.hash(), b.hash());
    }
}
