//! Experiment dispatch, run manifests and artifact layout.

use std::path::{Path, PathBuf};

use holonome::experiments::{
    log_space, run_entanglement, run_state_transfer, run_sweep, verify_identities, IdentityReport, ObservableSeries,
    Scenario, SweepGrid, SweepSpec,
};
use holonome::holonomy::{compose, plan_pulse, PulsePlan};
use holonome::lindblad::{InvariantReport, NoiseParams};
use holonome::C64;
use serde::Serialize;

use crate::config::{Experiment, Format, Provenance, RunConfig};
use crate::error::{CliError, Result};
use crate::output::{grid_csv, series_csv, to_json, write_atomic};
use crate::plot::{grid_svg, series_svg};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const THREADS_ENV: &str = "HOLONOME_THREADS";

/// Quantities computed from the config before running.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Derived {
    pub g0_rad_per_us: f64,
    pub tau_us: f64,
    /// Per pulse, `[re, im]` in rad/μs.
    pub g1: Vec<[f64; 2]>,
    pub g2: Vec<[f64; 2]>,
    pub kappa_rad_per_us: f64,
    pub gamma_m_rad_per_us: f64,
    pub n_th: f64,
    pub cavity_cutoff: usize,
    pub mechanical_cutoff: usize,
    pub hilbert_dim: usize,
}

/// Everything needed to reproduce a run. The timestamp is serialized first
/// and so occupies its own line.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub timestamp: String,
    pub artifact: String,
    pub version: String,
    pub config: RunConfig,
    pub provenance: Provenance,
    pub derived: Derived,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub invariants: Option<InvariantReport>,
    pub warnings: Vec<String>,
    pub outputs: Vec<String>,
}

/// Result of a run, for printing.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub files: Vec<String>,
    pub summary: String,
    pub verify_passed: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
struct GateReport {
    name: Option<String>,
    /// Rows of `[re, im]` pairs.
    unitary: [[[f64; 2]; 2]; 2],
    pulses: Vec<PulsePlan>,
}

fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

fn derive(config: &RunConfig, plans: &[PulsePlan]) -> Result<Derived> {
    let g0 = config.g0_angular();
    let noise = config.noise_angular();
    let space = config.truncation.space()?;
    Ok(Derived {
        g0_rad_per_us: g0,
        tau_us: std::f64::consts::PI / g0,
        g1: plans.iter().map(|p| pair(p.couplings.g1)).collect(),
        g2: plans.iter().map(|p| pair(p.couplings.g2)).collect(),
        kappa_rad_per_us: noise.kappa1,
        gamma_m_rad_per_us: noise.gamma_m,
        n_th: noise.n_th,
        cavity_cutoff: config.truncation.cavity,
        mechanical_cutoff: config.truncation.mechanical,
        hilbert_dim: space.dim(),
    })
}

fn scenario(config: &RunConfig) -> Scenario {
    Scenario { g0: config.g0_angular(), truncation: config.truncation, integrator: config.integrator }
}

fn sweep_spec(config: &RunConfig) -> SweepSpec {
    let axes = &config.sweep;
    SweepSpec {
        gate: config.gate_name().unwrap_or(holonome::GateName::Not),
        kappa: log_space(axes.kappa_range[0], axes.kappa_range[1], axes.points),
        gamma_m: log_space(axes.gamma_m_range[0], axes.gamma_m_range[1], axes.points),
        n_th: config.noise.n_th,
        convention: config.units.kappa,
    }
}

/// Rayon pool size from `HOLONOME_THREADS`; unset means the global pool.
pub fn thread_limit() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Config(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        },
    }
}

fn sweep_with_limit(spec: &SweepSpec, scenario: &Scenario) -> Result<SweepGrid> {
    match thread_limit()? {
        None => Ok(run_sweep(spec, scenario)?),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(format!("cannot build thread pool: {e}")))?;
            Ok(pool.install(|| run_sweep(spec, scenario))?)
        }
    }
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<String>,
}

impl Writer<'_> {
    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.dir.join(name), bytes)?;
        self.files.push(name.to_string());
        Ok(())
    }
}

fn series_summary(label: &str, s: &ObservableSeries) -> String {
    let k = s.len() - 1;
    format!(
        "{label}: tau = {:.6} us, {} steps of {:.3e} us\nfinal P1 = {:.6}, P2 = {:.6}, P3 = {:.6}, F = {:.6}",
        s.plan.duration_tau, s.steps, s.dt, s.p1[k], s.p2[k], s.p3[k], s.fidelity[k]
    )
}

fn identity_summary(r: &IdentityReport) -> String {
    format!(
        "gate algebra max error        {:.3e}\n\
         holonomy consistency max error {:.3e} ({} grid points)\n\
         unitary property max error     {:.3e}\n\
         parallel transport (NOT)       {:.3e}, cyclicity {:.3e}\n\
         parallel transport (Hadamard)  {:.3e}, cyclicity {:.3e}\n\
         dark / bright phase at alpha = pi: {:.6} / {:.6}\n\
         note: the bright branch carries a gauge factor, so cyclicity is checked on rays\n\
         {}",
        r.gate_algebra_error,
        r.holonomy_consistency_error,
        r.grid_points,
        r.unitary_property_error,
        r.not_transport.max_violation,
        r.not_transport.cyclicity_error,
        r.hadamard_transport.max_violation,
        r.hadamard_transport.cyclicity_error,
        r.propagator_dark_phase,
        r.propagator_bright_phase,
        if r.passed { "all identities hold" } else { "IDENTITY CHECK FAILED" }
    )
}

/// Run the experiment selected by `config` and write its artifacts and manifest.
pub fn dispatch(config: &RunConfig, provenance: &Provenance) -> Result<RunOutcome> {
    config.validate()?;
    let g0 = config.g0_angular();
    let specs = config.gate_specs()?;
    let plans: Vec<PulsePlan> = specs.iter().map(|s| plan_pulse(s, g0)).collect::<holonome::Result<_>>()?;
    let derived = derive(config, &plans)?;
    let dir = config.output.dir.clone();
    let wants = |f: Format| config.output.formats.contains(&f);
    let mut w = Writer { dir: &dir, files: Vec::new() };
    let mut invariants = None;
    let mut warnings = Vec::new();
    let mut verify_passed = None;

    let summary = match config.experiment {
        Experiment::Gate => {
            let u = compose(&specs)?;
            let report = GateReport {
                name: config.gate_name().map(|n| n.to_string()),
                unitary: [[pair(u[(0, 0)]), pair(u[(0, 1)])], [pair(u[(1, 0)]), pair(u[(1, 1)])]],
                pulses: plans.clone(),
            };
            if wants(Format::Json) {
                w.put("gate.json", &to_json(&report))?;
            }
            let fmt = |z: C64| format!("{:+.6}{:+.6}i", z.re, z.im);
            let mut s =
                format!("U = [[{}, {}], [{}, {}]]", fmt(u[(0, 0)]), fmt(u[(0, 1)]), fmt(u[(1, 0)]), fmt(u[(1, 1)]));
            for (k, p) in plans.iter().enumerate() {
                s.push_str(&format!(
                    "\npulse {}: G1 = {:+.6}{:+.6}i, G2 = {:+.6}{:+.6}i rad/us, tau = {:.6} us, alpha = {:.6}",
                    k + 1,
                    p.couplings.g1.re,
                    p.couplings.g1.im,
                    p.couplings.g2.re,
                    p.couplings.g2.im,
                    p.duration_tau,
                    p.pulse_area_alpha
                ));
            }
            s
        }
        Experiment::Transfer | Experiment::Entangle => {
            let noise: NoiseParams = config.noise_angular();
            let sc = scenario(config);
            let series = if config.experiment == Experiment::Transfer {
                run_state_transfer(&noise, &sc)?
            } else {
                run_entanglement(&noise, &sc)?
            };
            let stem = config.experiment.as_str();
            if wants(Format::Csv) {
                w.put(&format!("{stem}.csv"), &series_csv(&series))?;
            }
            if wants(Format::Json) {
                w.put(&format!("{stem}.json"), &to_json(&series))?;
            }
            if wants(Format::Svg) {
                w.put(&format!("{stem}.svg"), series_svg(&series, stem)?.as_bytes())?;
            }
            invariants = Some(series.report);
            warnings.extend(series.warnings.iter().cloned());
            series_summary(stem, &series)
        }
        Experiment::Sweep => {
            let spec = sweep_spec(config);
            let grid = sweep_with_limit(&spec, &scenario(config))?;
            if wants(Format::Csv) {
                w.put("sweep.csv", &grid_csv(&grid))?;
            }
            if wants(Format::Json) {
                w.put("sweep.json", &to_json(&grid))?;
            }
            if wants(Format::Svg) {
                w.put("sweep.svg", grid_svg(&grid, &format!("{} fidelity", grid.gate))?.as_bytes())?;
            }
            invariants = Some(grid.report);
            format!(
                "sweep {}: {}x{} points, rates {}; F at lowest damping {:.6}, at highest {:.6}",
                grid.gate,
                grid.kappa_values.len(),
                grid.gamma_values.len(),
                grid.convention.as_str(),
                grid.low_damping_corner(),
                grid.high_damping_corner()
            )
        }
        Experiment::Verify => {
            let report = verify_identities(8, 100)?;
            if wants(Format::Json) {
                w.put("verify.json", &to_json(&report))?;
            }
            verify_passed = Some(report.passed);
            identity_summary(&report)
        }
    };

    let manifest = RunManifest {
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        artifact: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        provenance: provenance.clone(),
        derived,
        invariants,
        warnings,
        outputs: w.files.clone(),
    };
    write_atomic(&dir.join(MANIFEST_FILE), &to_json(&manifest))?;
    let mut files = w.files;
    files.push(MANIFEST_FILE.to_string());

    if verify_passed == Some(false) {
        return Err(CliError::Numerical(format!("identity checks failed\n{summary}")));
    }
    Ok(RunOutcome { dir, files, summary, verify_passed })
}
