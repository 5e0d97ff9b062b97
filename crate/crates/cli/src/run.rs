//! Subcommand bodies: everything between a parsed config and the files on
//! disk.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use propchaos::diagnostics::{propagation_sweep, run_replica, DiagnosticsReport, InitialFamily, InitialLaw};
use propchaos::entropy::{entropy_convergence_check, EntropyCheck, OccupancyFamily};
use propchaos::meanfield::{
    reference_limit_by_large_n, solve_kac_caricature, solve_mckean_vlasov_fp1d, GridLaw1D, KacPdeOptions,
};
use propchaos::processes::TransitionKernel;
use propchaos::{AtomicMeasure, Configuration, Error, Point, PointKind};
use serde::Serialize;

use crate::config::{ConfigErrors, EntropySpec, ExperimentConfig, ReferenceSpec};

/// Default Kac PDE step.
const KAC_PDE_DT: f64 = 0.05;
/// Upper bound on the default Fokker–Planck step, and the fraction of the
/// CFL limit it uses.
const FP_MAX_DT: f64 = 0.01;
const FP_CFL_FRACTION: f64 = 0.5;

#[derive(Debug)]
pub enum CliError {
    Config(ConfigErrors),
    Io(String),
    Run(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Run(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "invalid configuration:\n{e}"),
            CliError::Io(e) => write!(f, "I/O error: {e}"),
            CliError::Run(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Run(e.to_string())
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Writes `name` under the output directory, creating it if needed.
fn write_out(dir: &Path, name: &str, contents: &str, written: &mut Vec<PathBuf>) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| io_err(&path, e))?;
    written.push(path);
    Ok(())
}

/// Largest step not above `cap` that divides `t` into whole steps.
fn fitting_step(t: f64, cap: f64) -> f64 {
    if t == 0.0 {
        return cap;
    }
    t / (t / cap).ceil()
}

fn initial_grid(law: &InitialLaw, cells: usize, half_width: Option<f64>) -> Result<GridLaw1D, CliError> {
    match *law {
        InitialLaw::Gaussian { mean, std } => match half_width {
            None => Ok(GridLaw1D::gaussian(mean, std, cells)?),
            Some(v) => Ok(GridLaw1D::from_density(v, cells, |x| (-0.5 * ((x - mean) / std).powi(2)).exp())?),
        },
        InitialLaw::Uniform { lo, hi } => {
            let v = half_width.unwrap_or(3.0 * lo.abs().max(hi.abs()));
            Ok(GridLaw1D::from_density(v, cells, |x| if (lo..=hi).contains(&x) { 1.0 } else { 0.0 })?)
        }
        ref other => Err(CliError::Run(format!(
            "the pde reference needs a gaussian or uniform initial law, got {other}"
        ))),
    }
}

/// Reference law for the concentration test, plus the grid law when it
/// came from a PDE solver.
pub fn build_reference(cfg: &ExperimentConfig) -> Result<(AtomicMeasure, Option<GridLaw1D>), CliError> {
    match &cfg.reference {
        ReferenceSpec::Atoms(mu) => Ok((mu.clone(), None)),
        ReferenceSpec::LargeN { n, cap } => {
            let initial = cfg.initial.atomic_approximation(*n)?;
            let mu = reference_limit_by_large_n(&cfg.kernel, &initial, cfg.t, *n, cfg.seed, *cap)?;
            Ok((mu, None))
        }
        ReferenceSpec::Pde { cells, half_width, dt, theta_nodes } => {
            let law = match &cfg.initial {
                InitialFamily::Product(l) | InitialFamily::PureAtomic(l) => l,
                InitialFamily::Mixture(_) => {
                    return Err(CliError::Run("the pde reference does not support mixture initial laws".into()))
                }
            };
            let f0 = initial_grid(law, *cells, *half_width)?;
            let grid = match cfg.kernel {
                TransitionKernel::Kac { tau } => {
                    let dt = dt.unwrap_or_else(|| fitting_step(cfg.t, KAC_PDE_DT));
                    solve_kac_caricature(&f0, cfg.t, tau, dt, &KacPdeOptions { theta_nodes: *theta_nodes })?
                }
                TransitionKernel::McKeanVlasov { drift, diffusion, .. } => {
                    let dx = f0.dx();
                    let s = diffusion.sup();
                    let cfl = if s > 0.0 { FP_CFL_FRACTION * 0.4 * dx * dx / (s * s) } else { FP_MAX_DT };
                    let dt = dt.unwrap_or_else(|| fitting_step(cfg.t, cfl.min(FP_MAX_DT)));
                    solve_mckean_vlasov_fp1d(&f0, cfg.t, drift, diffusion, dt)?
                }
                ref k => {
                    return Err(CliError::Run(format!("no pde solver for kernel {}", k.kind())));
                }
            };
            Ok((grid.to_atomic()?, Some(grid)))
        }
    }
}

/// The entropy ladder to run: the configured one, or one derived from a
/// finite initial law along the sweep ladder.
pub fn entropy_spec(cfg: &ExperimentConfig) -> Option<EntropySpec> {
    if let Some(s) = &cfg.entropy {
        return Some(s.clone());
    }
    let (law, pure) = match &cfg.initial {
        InitialFamily::Product(l) => (l, false),
        InitialFamily::PureAtomic(l) => (l, true),
        InitialFamily::Mixture(_) => return None,
    };
    let p = match law {
        InitialLaw::Bernoulli { p } => vec![1.0 - p, *p],
        InitialLaw::Atoms(mu) if mu.kind() == PointKind::Symbol => {
            let k = mu.atoms().iter().filter_map(Point::as_symbol).max()? as usize + 1;
            let mut p = vec![0.0; k];
            for (a, w) in mu.iter() {
                p[a.as_symbol()? as usize] += w;
            }
            p
        }
        _ => return None,
    };
    let family = if pure { OccupancyFamily::PureAtomic { p } } else { OccupancyFamily::Product { p } };
    Some(EntropySpec { family, ladder: cfg.n_ladder.clone() })
}

pub fn run_entropy(spec: &EntropySpec) -> Result<EntropyCheck, CliError> {
    let fam = spec.family.clone();
    Ok(entropy_convergence_check(|n| fam.law(n), spec.family.target(), &spec.ladder)?)
}

pub fn entropy_summary(check: &EntropyCheck) -> String {
    let mut out = format!("specific entropy ladder, target H(p) = {:.6}\n", check.target);
    let _ = writeln!(out, "{:>8}  {:>12}  {:>12}", "n", "S_n", "gap");
    for r in &check.rows {
        let f = |x: Option<f64>| x.map_or("-".into(), |v| format!("{v:.6}"));
        let _ = writeln!(out, "{:>8}  {:>12}  {:>12}", r.n, f(r.specific_entropy), f(r.gap));
        if let Some(e) = &r.error {
            let _ = writeln!(out, "{:>8}  error: {e}", "");
        }
    }
    let _ = writeln!(
        out,
        "gaps strictly decrease: {} | envelope C = {:.4}",
        check.gaps_strictly_decrease(),
        check.envelope
    );
    out
}

pub struct SweepOutcome {
    pub report: DiagnosticsReport,
    pub entropy: Option<EntropyCheck>,
    pub written: Vec<PathBuf>,
}

/// Runs the sweep (and the entropy ladder on finite state spaces) and
/// writes the report files.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<SweepOutcome, CliError> {
    let (reference, _) = build_reference(cfg)?;
    let report = propagation_sweep(
        &cfg.kernel,
        &cfg.initial,
        &cfg.n_ladder,
        cfg.t,
        cfg.replicas,
        cfg.seed,
        &reference,
        &cfg.diagnostics,
    )?;
    let entropy = entropy_spec(cfg).map(|s| run_entropy(&s)).transpose()?;
    let mut written = Vec::new();
    if cfg.format.json() {
        write_out(&cfg.out_dir, "report.json", &report.to_json(), &mut written)?;
    }
    if cfg.format.csv() {
        write_out(&cfg.out_dir, "report.csv", &report.to_csv(), &mut written)?;
    }
    if let Some(e) = &entropy {
        write_entropy(cfg, e, &mut written)?;
    }
    Ok(SweepOutcome { report, entropy, written })
}

fn write_entropy(cfg: &ExperimentConfig, check: &EntropyCheck, written: &mut Vec<PathBuf>) -> Result<(), CliError> {
    if cfg.format.json() {
        let mut s = serde_json::to_string_pretty(check).expect("entropy check serializes");
        s.push('\n');
        write_out(&cfg.out_dir, "entropy.json", &s, written)?;
    }
    if cfg.format.csv() {
        write_out(&cfg.out_dir, "entropy.csv", &check.to_csv(), written)?;
    }
    Ok(())
}

/// The `entropy` subcommand.
pub fn run_entropy_command(cfg: &ExperimentConfig) -> Result<(EntropyCheck, Vec<PathBuf>), CliError> {
    let spec = entropy_spec(cfg).ok_or_else(|| {
        CliError::Run("no [entropy] table and the initial law is not on a finite alphabet".into())
    })?;
    let check = run_entropy(&spec)?;
    let mut written = Vec::new();
    write_entropy(cfg, &check, &mut written)?;
    Ok((check, written))
}

/// Header and rows with one column per real coordinate (or the symbol).
fn points_csv(points: impl Iterator<Item = (String, Point)>, kind: &PointKind, extra: &str) -> String {
    let columns: Vec<String> = match kind {
        PointKind::Scalar => vec!["v".into()],
        PointKind::Vec3 => vec!["v1".into(), "v2".into(), "v3".into()],
        PointKind::Phase(d) => (1..=*d).map(|i| format!("x{i}")).chain((1..=*d).map(|i| format!("v{i}"))).collect(),
        PointKind::Symbol => vec!["symbol".into()],
        PointKind::Tuple(_) => (0..kind.real_dim().unwrap_or(0)).map(|i| format!("c{i}")).collect(),
    };
    let mut out = format!("{extra},{}\n", columns.join(","));
    for (label, p) in points {
        let cells: Vec<String> = match (p.as_symbol(), p.coords()) {
            (Some(s), _) => vec![s.to_string()],
            (None, Some(c)) => c.iter().map(|x| format!("{x:?}")).collect(),
            (None, None) => vec![format!("{p:?}")],
        };
        let _ = writeln!(out, "{label},{}", cells.join(","));
    }
    out
}

#[derive(Serialize)]
struct SimulateRecord<'a> {
    kernel: String,
    initial: String,
    n: usize,
    t: f64,
    seed: u64,
    events: u64,
    flags: &'a [String],
    configuration: &'a Configuration,
}

/// The `simulate` subcommand: replica 0 of the sweep cell with the
/// configured particle count.
pub fn run_simulate(cfg: &ExperimentConfig) -> Result<(String, Vec<PathBuf>), CliError> {
    let n = cfg.simulate_n.unwrap_or_else(|| *cfg.n_ladder.last().expect("validated ladder"));
    let out = run_replica(&cfg.kernel, &cfg.initial, n, cfg.t, cfg.seed, 0)?;
    let mut written = Vec::new();
    if cfg.format.json() {
        let rec = SimulateRecord {
            kernel: cfg.kernel.to_string(),
            initial: cfg.initial.to_string(),
            n,
            t: cfg.t,
            seed: cfg.seed,
            events: out.events,
            flags: &out.flags,
            configuration: &out.config,
        };
        let mut s = serde_json::to_string_pretty(&rec).expect("configuration serializes");
        s.push('\n');
        write_out(&cfg.out_dir, "configuration.json", &s, &mut written)?;
    }
    if cfg.format.csv() {
        let rows = out.config.points().iter().enumerate().map(|(i, p)| (i.to_string(), p.clone()));
        write_out(&cfg.out_dir, "configuration.csv", &points_csv(rows, &out.config.kind(), "index"), &mut written)?;
    }
    let mut summary = format!("{} from {} | n = {n} | t = {} | seed {}\n", cfg.kernel, cfg.initial, cfg.t, cfg.seed);
    let _ = writeln!(summary, "events: {}", out.events);
    for f in &out.flags {
        let _ = writeln!(summary, "flag: {f}");
    }
    Ok((summary, written))
}

/// The `limit` subcommand: the reference law alone.
pub fn run_limit(cfg: &ExperimentConfig) -> Result<(String, Vec<PathBuf>), CliError> {
    let (mu, grid) = build_reference(cfg)?;
    let mut written = Vec::new();
    if cfg.format.json() {
        let mut s = serde_json::to_string_pretty(&mu).expect("measure serializes");
        s.push('\n');
        write_out(&cfg.out_dir, "reference.json", &s, &mut written)?;
    }
    if cfg.format.csv() {
        let rows = mu.iter().map(|(p, w)| (format!("{w:?}"), p.clone()));
        write_out(&cfg.out_dir, "reference.csv", &points_csv(rows, &mu.kind(), "weight"), &mut written)?;
        if let Some(g) = &grid {
            write_out(&cfg.out_dir, "reference_grid.csv", &g.to_csv(), &mut written)?;
        }
    }
    let mut summary = format!("reference for {} from {} at t = {}\n", cfg.kernel, cfg.initial, cfg.t);
    let _ = writeln!(summary, "atoms: {}", mu.len());
    if let Some(g) = &grid {
        let _ = writeln!(summary, "grid: {} cells on [-{v}, {v}], mean {:.6}, energy {:.6}", g.cells(), g.mean(), g.energy(), v = g.half_width());
    }
    Ok((summary, written))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn fitting_step_divides() {
        let dt = fitting_step(0.5, 0.05);
        assert!(((0.5 / dt).round() * dt - 0.5).abs() < 1e-12);
        assert!(dt <= 0.05);
        assert_eq!(fitting_step(0.0, 0.05), 0.05);
        let dt = fitting_step(1.0, 0.03);
        assert!((dt - 1.0 / 34.0).abs() < 1e-15);
    }

    #[test]
    fn entropy_derived_from_bernoulli() {
        let cfg = parse_config(
            "seed = 1\nt = 1\nn_ladder = [4, 8, 16]\n[kernel]\nkind = \"counterexample\"\n[initial]\nfamily = \"pure-atomic\"\nlaw = \"bernoulli\"\np = 0.25\n",
        )
        .unwrap();
        let s = entropy_spec(&cfg).unwrap();
        assert_eq!(s.family, OccupancyFamily::PureAtomic { p: vec![0.75, 0.25] });
        assert_eq!(s.ladder, vec![4, 8, 16]);
    }

    #[test]
    fn points_csv_layout() {
        let rows = vec![("0".to_string(), Point::Phase { x: vec![1.0], v: vec![-0.5] })];
        assert_eq!(points_csv(rows.into_iter(), &PointKind::Phase(1), "index"), "index,x1,v1\n0,1.0,-0.5\n");
    }
}
