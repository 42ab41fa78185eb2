//! Experiment orchestration: single designs, beampattern cuts and
//! operating-characteristic sweeps, each persisted as tables plus a JSON
//! sidecar.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use ris_dfrc_core::desired::build_desired_with;
use ris_dfrc_core::scene::normalized_power_db;
use ris_dfrc_core::{
    beampattern_map, evaluate_design, BeampatternMap, Calibration, CommPerf, DesignVariables, ExcitedAperture, Init,
    McConfig, MimoProblem, ObjectiveTrace, OperatingPoint, RadarPerf, RisProblem, C64,
};
use serde_json::json;

use crate::config::RunConfig;
use crate::error::{CliError, Context};
use crate::table::{fmt_f64, Table};

/// Runs with more space-frequency points than this need `full_scale`.
pub const FULL_SCALE_LIMIT: usize = 20_000;

/// Environment variable selecting the worker thread count.
pub const THREADS_ENV: &str = "RIS_DFRC_THREADS";

/// Frequencies closer than this (Hz) to a grid frequency select it.
const FREQ_TOL_HZ: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Leave wall-clock times out of the metadata so reruns are byte-identical.
    pub deterministic: bool,
    pub full_scale: bool,
}

impl RunOptions {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        Self {
            out_dir: out_dir.into(),
            deterministic: false,
            full_scale: false,
        }
    }
}

fn check_scale(cfg: &RunConfig, opts: &RunOptions) -> Result<(), CliError> {
    let points = cfg.grid_points();
    if points > FULL_SCALE_LIMIT && !opts.full_scale {
        return Err(CliError::ScaleGate {
            points,
            limit: FULL_SCALE_LIMIT,
        });
    }
    Ok(())
}

fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("json serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn complex_table(kind: &str, cfg: &RunConfig, values: &[C64]) -> Table {
    let mut t = Table::new(kind, &["index", "re", "im"])
        .with_meta("config_hash", cfg.hash())
        .with_meta("seed", cfg.optimizer.seed);
    for (i, z) in values.iter().enumerate() {
        t.push(vec![i.to_string(), fmt_f64(z.re), fmt_f64(z.im)]);
    }
    t
}

/// Reads an `index re im` table back into complex values.
pub fn read_complex(table: &Table) -> Result<Vec<C64>, CliError> {
    let re = table.column_f64("re")?;
    let im = table.column_f64("im")?;
    Ok(re.into_iter().zip(im).map(|(r, i)| C64::new(r, i)).collect())
}

/// A beampattern map together with the grid it was sampled on.
#[derive(Debug, Clone, PartialEq)]
pub struct MapData {
    pub freqs_hz: Vec<f64>,
    /// `(theta, phi)` in degrees, theta-major.
    pub angles_deg: Vec<(f64, f64)>,
    pub map: BeampatternMap,
    pub config_hash: String,
    pub seed: String,
}

impl MapData {
    pub fn to_table(&self) -> Table {
        let mut t = Table::new("beampattern", &["k", "l", "freq_hz", "theta_deg", "phi_deg", "value"])
            .with_meta("config_hash", &self.config_hash)
            .with_meta("seed", &self.seed)
            .with_meta("grid", "theta-major angular cell centers; theta elevation, phi azimuth")
            .with_meta("value", "amplitude beampattern B");
        for (k, f) in self.freqs_hz.iter().enumerate() {
            for (l, (t_deg, p_deg)) in self.angles_deg.iter().enumerate() {
                t.push(vec![
                    k.to_string(),
                    l.to_string(),
                    fmt_f64(*f),
                    fmt_f64(*t_deg),
                    fmt_f64(*p_deg),
                    fmt_f64(self.map.get(k, l)),
                ]);
            }
        }
        t
    }

    pub fn from_table(table: &Table) -> Result<Self, CliError> {
        let k_idx = table.column_f64("k")?;
        let l_idx = table.column_f64("l")?;
        let freq = table.column_f64("freq_hz")?;
        let theta = table.column_f64("theta_deg")?;
        let phi = table.column_f64("phi_deg")?;
        let values = table.column_f64("value")?;
        let n_l = l_idx.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
        let n_k = k_idx.iter().map(|&k| k as usize + 1).max().unwrap_or(0);
        if n_k * n_l != values.len() || n_l == 0 {
            return Err(CliError::Table(format!(
                "beampattern table has {} rows, expected a full {n_k} x {n_l} grid",
                values.len()
            )));
        }
        for (row, (&k, &l)) in k_idx.iter().zip(&l_idx).enumerate() {
            if k as usize != row / n_l || l as usize != row % n_l {
                return Err(CliError::Table(format!("beampattern row {row} is out of order")));
            }
        }
        Ok(Self {
            freqs_hz: (0..n_k).map(|k| freq[k * n_l]).collect(),
            angles_deg: (0..n_l).map(|l| (theta[l], phi[l])).collect(),
            map: BeampatternMap {
                values,
                freqs: n_k,
                angles: n_l,
            },
            config_hash: table.meta_value("config_hash").unwrap_or_default().to_string(),
            seed: table.meta_value("seed").unwrap_or_default().to_string(),
        })
    }

    fn freq_index(&self, freq_hz: f64) -> Result<usize, CliError> {
        if let Some(k) = self.freqs_hz.iter().position(|f| (f - freq_hz).abs() <= FREQ_TOL_HZ) {
            return Ok(k);
        }
        let mut nearest = self.freqs_hz.clone();
        nearest.sort_by(|a, b| (a - freq_hz).abs().total_cmp(&(b - freq_hz).abs()));
        nearest.truncate(3);
        Err(CliError::OffGrid {
            freq_mhz: freq_hz / 1e6,
            nearest_mhz: nearest.iter().map(|f| f / 1e6).collect(),
        })
    }
}

/// One frequency slice of a map: rows `theta_deg phi_deg value`, where the
/// value is the normalized power beampattern in dB (relative to the peak
/// power over the whole map) when `normalize` is set and the amplitude
/// beampattern otherwise.
pub fn export_cut(data: &MapData, freq_hz: f64, normalize: bool) -> Result<Table, CliError> {
    let k = data.freq_index(freq_hz)?;
    let values: Vec<f64> = if normalize {
        let db = normalized_power_db(&data.map).context("normalizing beampattern")?;
        db[k * data.map.angles..(k + 1) * data.map.angles].to_vec()
    } else {
        data.map.cut(k).to_vec()
    };
    let mut t = Table::new("beampattern cut", &["theta_deg", "phi_deg", "value"])
        .with_meta("config_hash", &data.config_hash)
        .with_meta("seed", &data.seed)
        .with_meta("freq_hz", fmt_f64(data.freqs_hz[k]))
        .with_meta("grid", "theta-major angular cell centers; theta elevation, phi azimuth")
        .with_meta(
            "value",
            if normalize {
                "normalized power beampattern, dB relative to the peak over all frequencies"
            } else {
                "amplitude beampattern B"
            },
        );
    for ((t_deg, p_deg), v) in data.angles_deg.iter().zip(values) {
        t.push(vec![fmt_f64(*t_deg), fmt_f64(*p_deg), fmt_f64(v)]);
    }
    Ok(t)
}

pub fn cut_file_name(freq_mhz: f64, normalize: bool) -> String {
    format!("cut_f{freq_mhz:+}MHz{}.tsv", if normalize { "" } else { "_amp" })
}

#[derive(Debug, Clone)]
pub struct DesignOutcome {
    pub design: DesignVariables,
    pub trace: ObjectiveTrace,
    pub map: MapData,
    pub files: Vec<PathBuf>,
}

/// Designs the RIS transmitter for the configured `eta` and writes the
/// waveform, RIS phases, objective trace, beampattern map and the
/// configured cuts into `opts.out_dir`.
pub fn run_design(cfg: &RunConfig, opts: &RunOptions) -> Result<DesignOutcome, CliError> {
    cfg.validate()?;
    check_scale(cfg, opts)?;
    let start = Instant::now();
    let scene = cfg.scene().context("building scene")?;
    let grids = cfg.grids().context("building grids")?;
    let eta = cfg.desired.eta;
    let desired = build_desired_with(eta, &cfg.layout(), &scene.signal, &grids).context("building desired pattern")?;
    let problem = RisProblem::new(&scene, &grids, &desired).context("setting up design problem")?;
    let (dv, trace) = problem
        .run(Init::Random, cfg.optimizer.power_w, &cfg.optim())
        .context(format!("designing for eta = {eta}"))?;
    let map = beampattern_map(&dv, &grids, &scene).context("evaluating beampattern")?;
    let elapsed = start.elapsed().as_secs_f64();

    let hash = cfg.hash();
    let seed = cfg.optimizer.seed.to_string();
    let data = MapData {
        freqs_hz: grids.freqs().to_vec(),
        angles_deg: grids.angles().iter().map(|(t, p)| (t.to_degrees(), p.to_degrees())).collect(),
        map,
        config_hash: hash.clone(),
        seed: seed.clone(),
    };

    prepare_dir(&opts.out_dir)?;
    let mut files = Vec::new();
    let mut emit = |name: &str, table: Table| -> Result<(), CliError> {
        let path = opts.out_dir.join(name);
        table.write(&path)?;
        files.push(path);
        Ok(())
    };
    emit(
        "waveform.tsv",
        complex_table("waveform", cfg, &dv.s)
            .with_meta("layout", "sample-major: entry n*J + j is sample n of source j")
            .with_meta("sources", scene.num_sources())
            .with_meta("samples", scene.signal.samples()),
    )?;
    emit("ris_phases.tsv", complex_table("ris phases", cfg, &dv.x))?;
    let mut trace_table = Table::new("objective trace", &["iteration", "objective"])
        .with_meta("config_hash", &hash)
        .with_meta("seed", &seed)
        .with_meta("converged", trace.converged);
    for (i, v) in trace.values.iter().enumerate() {
        trace_table.push(vec![i.to_string(), fmt_f64(*v)]);
    }
    emit("trace.tsv", trace_table)?;
    emit("beampattern.tsv", data.to_table())?;
    for &f in &cfg.output.cut_freqs_mhz {
        emit(&cut_file_name(f, true), export_cut(&data, f * 1e6, true)?)?;
    }

    let mut meta = json!({
        "kind": "design",
        "config_hash": hash,
        "seed": cfg.optimizer.seed,
        "eta": eta,
        "power_w": cfg.optimizer.power_w,
        "final_objective": trace.final_objective,
        "iterations": trace.iterations,
        "converged": trace.converged,
        "waveform_power_w": dv.power(scene.signal.samples()),
        "ris_modulus_error": dv.modulus_error(),
        "freq_points": grids.num_freqs(),
        "angle_points": grids.num_angles(),
        "files": files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect::<Vec<_>>(),
        "config": cfg.canonical(),
    });
    if !opts.deterministic {
        meta["wall_time_s"] = json!(elapsed);
    }
    let meta_path = opts.out_dir.join("design_meta.json");
    write_json(&meta_path, &meta)?;
    files.push(meta_path);

    Ok(DesignOutcome {
        design: dv,
        trace,
        map: data,
        files,
    })
}

/// Reads `beampattern.tsv` from a design directory and writes one cut.
pub fn run_cut(design_dir: &Path, freq_mhz: f64, normalize: bool, out_dir: &Path) -> Result<PathBuf, CliError> {
    let data = MapData::from_table(&Table::read(&design_dir.join("beampattern.tsv"))?)?;
    let table = export_cut(&data, freq_mhz * 1e6, normalize)?;
    prepare_dir(out_dir)?;
    let path = out_dir.join(cut_file_name(freq_mhz, normalize));
    table.write(&path)?;
    Ok(path)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Arch {
    Ris,
    Mimo,
}

impl Arch {
    pub fn name(self) -> &'static str {
        match self {
            Arch::Ris => "ris",
            Arch::Mimo => "mimo",
        }
    }
}

/// Operating points of one designed transmitter, one per nominal SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchCurvePoint {
    pub arch: Arch,
    pub eta: f64,
    pub final_objective: f64,
    pub iterations: usize,
    pub points: Vec<OperatingPoint>,
}

fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => n,
            _ => return Err(CliError::Threads(format!("expected a positive integer, got `{v}`"))),
        },
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Threads(e.to_string()))
}

/// Designs every `(architecture, eta)` pair and evaluates it at each
/// configured nominal SNR. Results are ordered by architecture, then eta.
/// The Monte Carlo draws use the same seed for every design.
pub fn tradeoff_points(cfg: &RunConfig, archs: &[Arch]) -> Result<Vec<ArchCurvePoint>, CliError> {
    let scene = cfg.scene().context("building scene")?;
    let mimo = cfg.mimo_scene().context("building MIMO array")?;
    let grids = cfg.grids().context("building grids")?;
    let signal = scene.signal;
    let layout = cfg.layout();
    let reference = build_desired_with(1.0, &layout, &signal, &grids).context("building desired pattern")?;
    let radar = RadarPerf {
        pulses: cfg.performance.pulses,
        ..RadarPerf::for_desired(&reference, cfg.performance.p_fa).context("radar receiver")?
    };
    let comm = CommPerf::for_desired(&reference).context("user receiver")?;
    let calibration = Calibration::new(&layout, &signal, &grids, &radar, &comm).context("calibrating noise levels")?;
    let mc = McConfig::new(cfg.performance.mc_samples, cfg.performance.mc_seed).context("Monte Carlo settings")?;
    let optim = cfg.optim();
    let power = cfg.optimizer.power_w;

    let jobs: Vec<(Arch, f64)> = archs
        .iter()
        .flat_map(|&a| cfg.desired.eta_list.iter().map(move |&e| (a, e)))
        .collect();
    let run_one = |&(arch, eta): &(Arch, f64)| -> Result<ArchCurvePoint, CliError> {
        let label = format!("{} design for eta = {eta}", arch.name());
        let desired = build_desired_with(eta, &layout, &signal, &grids).context(&label)?;
        let (aperture, trace) = match arch {
            Arch::Ris => {
                let (dv, trace) = RisProblem::new(&scene, &grids, &desired)
                    .and_then(|p| p.run(Init::Random, power, &optim))
                    .context(&label)?;
                (ExcitedAperture::ris(&scene, &dv, grids.freqs()).context(&label)?, trace)
            }
            Arch::Mimo => {
                let (s, trace) = MimoProblem::new(&desired, &mimo, &grids, &optim)
                    .and_then(|p| p.run(power))
                    .context(&label)?;
                let ap = ExcitedAperture::digital(mimo.antennas(), mimo.element_pattern, mimo.signal, &s, grids.freqs())
                    .context(&label)?;
                (ap, trace)
            }
        };
        let points = evaluate_design(&aperture, eta, &radar, &comm, &calibration, &cfg.performance.snr_db, &mc)
            .context(format!("evaluating {label}"))?;
        Ok(ArchCurvePoint {
            arch,
            eta,
            final_objective: trace.final_objective,
            iterations: trace.iterations,
            points,
        })
    };
    let pool = thread_pool()?;
    pool.install(|| jobs.par_iter().map(run_one).collect())
}

pub fn tradeoff_file_name(snr_db: f64) -> String {
    format!("tradeoff_snr{snr_db}dB.tsv")
}

/// Runs the sweep and writes one table per nominal SNR plus
/// `tradeoff_meta.json`.
pub fn run_tradeoff(cfg: &RunConfig, archs: &[Arch], opts: &RunOptions) -> Result<Vec<PathBuf>, CliError> {
    cfg.validate()?;
    check_scale(cfg, opts)?;
    if archs.is_empty() {
        return Err(CliError::Usage("no architecture selected".into()));
    }
    let start = Instant::now();
    let curves = tradeoff_points(cfg, archs)?;
    let elapsed = start.elapsed().as_secs_f64();
    let hash = cfg.hash();

    prepare_dir(&opts.out_dir)?;
    let mut files = Vec::new();
    for (s, &snr) in cfg.performance.snr_db.iter().enumerate() {
        let mut t = Table::new("operating characteristic", &["eta", "rate", "rate_stderr", "pd", "pd_stderr", "architecture"])
            .with_meta("config_hash", &hash)
            .with_meta("seed", cfg.optimizer.seed)
            .with_meta("mc_seed", cfg.performance.mc_seed)
            .with_meta("mc_samples", cfg.performance.mc_samples)
            .with_meta("nominal_snr_db", snr)
            .with_meta("p_fa", cfg.performance.p_fa);
        for c in &curves {
            let p = &c.points[s];
            t.push(vec![
                fmt_f64(p.eta),
                fmt_f64(p.rate),
                fmt_f64(p.rate_std_error),
                fmt_f64(p.pd),
                fmt_f64(p.pd_std_error),
                c.arch.name().to_string(),
            ]);
        }
        let path = opts.out_dir.join(tradeoff_file_name(snr));
        t.write(&path)?;
        files.push(path);
    }

    let designs: Vec<_> = curves
        .iter()
        .map(|c| {
            json!({
                "architecture": c.arch.name(),
                "eta": c.eta,
                "final_objective": c.final_objective,
                "iterations": c.iterations,
            })
        })
        .collect();
    let mut meta = json!({
        "kind": "tradeoff",
        "config_hash": hash,
        "seed": cfg.optimizer.seed,
        "mc_seed": cfg.performance.mc_seed,
        "architectures": archs.iter().map(|a| a.name()).collect::<Vec<_>>(),
        "eta_list": cfg.desired.eta_list,
        "snr_db": cfg.performance.snr_db,
        "designs": designs,
        "files": files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect::<Vec<_>>(),
        "config": cfg.canonical(),
    });
    if !opts.deterministic {
        meta["wall_time_s"] = json!(elapsed);
    }
    let meta_path = opts.out_dir.join("tradeoff_meta.json");
    write_json(&meta_path, &meta)?;
    files.push(meta_path);
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_map(values: Vec<f64>, k: usize, l: usize) -> MapData {
        MapData {
            freqs_hz: (0..k).map(|i| -50e6 + i as f64 * 100e6 / k as f64).collect(),
            angles_deg: (0..l).map(|i| (i as f64, -(i as f64))).collect(),
            map: BeampatternMap {
                values,
                freqs: k,
                angles: l,
            },
            config_hash: "h".into(),
            seed: "0".into(),
        }
    }

    #[test]
    fn constant_map_normalizes_to_zero_db() {
        let data = tiny_map(vec![0.3; 8], 4, 2);
        let cut = export_cut(&data, -25e6, true).unwrap();
        assert_eq!(cut.rows.len(), 2);
        assert!(cut.column_f64("value").unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn normalization_spans_all_frequencies() {
        let data = tiny_map(vec![1.0, 1.0, 10.0, 1.0], 2, 2);
        let cut = export_cut(&data, -50e6, true).unwrap();
        let v = cut.column_f64("value").unwrap();
        assert!((v[0] + 20.0).abs() < 1e-12);
        let raw = export_cut(&data, 0.0, false).unwrap();
        assert_eq!(raw.column_f64("value").unwrap(), vec![10.0, 1.0]);
    }

    #[test]
    fn off_grid_frequency_lists_neighbours() {
        let data = tiny_map(vec![1.0; 4], 4, 1);
        match export_cut(&data, 1e6, true) {
            Err(CliError::OffGrid { nearest_mhz, .. }) => assert_eq!(nearest_mhz[0], 0.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn map_table_round_trips() {
        let data = tiny_map((0..6).map(|i| 0.1 * i as f64 + 1.0 / 3.0).collect(), 3, 2);
        let back = MapData::from_table(&Table::parse(&data.to_table().render()).unwrap()).unwrap();
        assert_eq!(back, data);
    }

    #[test]
    fn scale_gate() {
        let cfg = RunConfig::paper();
        let opts = RunOptions::new("unused");
        assert!(matches!(check_scale(&cfg, &opts), Err(CliError::ScaleGate { .. })));
        assert!(check_scale(&RunConfig::desk(), &opts).is_ok());
        let full = RunOptions {
            full_scale: true,
            ..opts
        };
        assert!(check_scale(&cfg, &full).is_ok());
    }

    #[test]
    fn file_names() {
        assert_eq!(cut_file_name(-37.5, true), "cut_f-37.5MHz.tsv");
        assert_eq!(cut_file_name(37.5, false), "cut_f+37.5MHz_amp.tsv");
        assert_eq!(tradeoff_file_name(10.0), "tradeoff_snr10dB.tsv");
    }
}
