//! Command-line front end: reproducible generator spectra, Jordan-structure
//! reports, splitting-exponent fits with Newton diagrams, population
//! dynamics, quantum-metric scans, and the verification suite.

use clap::{Args, Parser, Subcommand};
use mbep_core::dynamics::{evolve_scaled, prefactor_degree, preset_time_scale, time_grid};
use mbep_core::jordan::{detect_structure, predict_kron_sum_blocks, JordanReport};
use mbep_core::linalg::{eig, small_rational_from_f64, CMatrix};
use mbep_core::model::{
    build_parts, preset_from_name, LindbladParts, OpenSystemSpec, Preset,
};
use mbep_core::perturb::{
    log_grid, newton_diagram, splitting_exponent_fit, CharPolyRateFamily, ClosedFormRateFamily,
    GammaPolynomial, NewtonDiagram, NumericRateFamily, QutritCase, RateFamily,
    SplittingFitReport,
};
use mbep_core::qgt::{metric_scan, PresetDriveFamily, QgtOptions, QgtScan};
use mbep_core::Error as CoreError;
use num::complex::Complex64 as C64;
use serde::Deserialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_VERIFY: u8 = 4;

#[derive(Parser)]
#[command(
    name = "mbep",
    about = "Lindbladian exceptional-point analysis for small driven-dissipative systems",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// JSON config file: a model under "model" or preset under "preset",
    /// plus per-command option blocks. Command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Preset name: qubit_i, qubit_ii, qutrit_i, qutrit_ii.
    #[arg(long)]
    preset: Option<String>,
    /// Preset parameter, repeatable: gamma_i=0.2, gamma_e=0.9, gamma_h=0.4,
    /// omega=0.175, big_gamma=0.0. Omitting omega selects the coalescence
    /// drive.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    /// Output directory for data files.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker cap for parallelizable passes.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues of every generator matrix -> spectrum.csv
    Spectrum(SpectrumArgs),
    /// Jordan structures and the Kronecker-sum prediction -> jordan.json
    Jordan(JordanArgs),
    /// Splitting-exponent fits and Newton diagram -> perturb.json + CSV
    Perturb(PerturbArgs),
    /// Population dynamics -> evolve.csv
    Evolve(EvolveArgs),
    /// Quantum-metric scan -> qgt.csv + qgt_critical.json
    Qgt(QgtArgs),
    /// Run the verification suite; exit 4 on any failure.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct SpectrumArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct JordanArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Eigenvalue clustering tolerance.
    #[arg(long)]
    cluster_tol: Option<f64>,
    /// Relative rank tolerance for the staircase.
    #[arg(long)]
    rank_tol: Option<f64>,
}

#[derive(Args)]
struct PerturbArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    rate_min: Option<f64>,
    #[arg(long)]
    rate_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    /// Eigenvalue route: closed | charpoly | numeric (default picks the best
    /// available for the preset).
    #[arg(long)]
    route: Option<String>,
}

#[derive(Args)]
struct EvolveArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    tau_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    /// 1-based level index whose pure state seeds the evolution
    /// (default: the first excited level).
    #[arg(long)]
    initial_level: Option<usize>,
    /// Use the full generator including the ground state.
    #[arg(long)]
    full: bool,
    /// Interpret the time grid as raw generator time instead of the
    /// preset's dimensionless unit.
    #[arg(long)]
    raw_time: bool,
}

#[derive(Args)]
struct QgtArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    omega_min: Option<f64>,
    #[arg(long)]
    omega_max: Option<f64>,
    #[arg(long)]
    omega_step: Option<f64>,
    /// Relative finite-difference step.
    #[arg(long)]
    fd_step: Option<f64>,
    #[arg(long)]
    richardson: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Comma-separated criterion ids (default: all).
    #[arg(long, value_delimiter = ',')]
    criteria: Vec<usize>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    model: Option<OpenSystemSpec>,
    preset: Option<PresetConfig>,
    jordan: Option<JordanConfig>,
    perturb: Option<PerturbConfig>,
    evolve: Option<EvolveConfig>,
    qgt: Option<QgtConfig>,
}

#[derive(Deserialize)]
struct PresetConfig {
    name: String,
    gamma_i: Option<f64>,
    gamma_e: Option<f64>,
    gamma_h: Option<f64>,
    omega: Option<f64>,
    big_gamma: Option<f64>,
}

#[derive(Deserialize, Default, Clone)]
struct JordanConfig {
    cluster_tol: Option<f64>,
    rank_tol: Option<f64>,
}

#[derive(Deserialize, Default, Clone)]
struct PerturbConfig {
    rate_min: Option<f64>,
    rate_max: Option<f64>,
    points: Option<usize>,
    route: Option<String>,
}

#[derive(Deserialize, Default, Clone)]
struct EvolveConfig {
    tau_max: Option<f64>,
    points: Option<usize>,
    initial_level: Option<usize>,
    full: Option<bool>,
    raw_time: Option<bool>,
}

#[derive(Deserialize, Default, Clone)]
struct QgtConfig {
    omega_min: Option<f64>,
    omega_max: Option<f64>,
    omega_step: Option<f64>,
    fd_step: Option<f64>,
    richardson: Option<bool>,
}

enum CliError {
    Config(String),
    Numeric(String),
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidSpec(_)
            | CoreError::UnknownPreset(_)
            | CoreError::DimensionMismatch { .. }
            | CoreError::IrrationalParameter { .. } => CliError::Config(e.to_string()),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Spectrum(args) => cmd_spectrum(args),
        Command::Jordan(args) => cmd_jordan(args),
        Command::Perturb(args) => cmd_perturb(args),
        Command::Evolve(args) => cmd_evolve(args),
        Command::Qgt(args) => cmd_qgt(args),
        Command::Verify(args) => return cmd_verify(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(CliError::Numeric(msg)) => {
            eprintln!("numeric error: {msg}");
            ExitCode::from(EXIT_NUMERIC)
        }
    }
}

fn load_config(common: &CommonArgs) -> CliResult<FileConfig> {
    match &common.config {
        None => Ok(FileConfig::default()),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
        }
    }
}

/// Model resolution: CLI preset flags beat the config preset, which beats an
/// inline config model.
enum ModelSource {
    Preset(Preset),
    Spec(OpenSystemSpec),
}

impl ModelSource {
    fn parts(&self) -> CliResult<LindbladParts> {
        match self {
            ModelSource::Preset(p) => Ok(p.parts()?),
            ModelSource::Spec(s) => Ok(build_parts(s)?),
        }
    }

    fn n_levels(&self) -> usize {
        match self {
            ModelSource::Preset(p) => {
                if p.is_qubit() {
                    3
                } else {
                    4
                }
            }
            ModelSource::Spec(s) => s.n_levels,
        }
    }

    fn preset(&self) -> Option<Preset> {
        match self {
            ModelSource::Preset(p) => Some(*p),
            ModelSource::Spec(_) => None,
        }
    }
}

fn resolve_model(common: &CommonArgs, config: &FileConfig) -> CliResult<ModelSource> {
    let mut kv = std::collections::BTreeMap::new();
    for p in &common.params {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("parameter {p} is not KEY=VALUE")))?;
        let v: f64 = v
            .parse()
            .map_err(|e| CliError::Config(format!("parameter {p}: {e}")))?;
        kv.insert(k.to_string(), v);
    }
    if let Some(name) = &common.preset {
        let preset = preset_from_name(name, |k| kv.get(k).copied())?;
        return Ok(ModelSource::Preset(preset));
    }
    if let Some(pc) = &config.preset {
        let preset = preset_from_name(&pc.name, |k| {
            kv.get(k).copied().or(match k {
                "gamma_i" => pc.gamma_i,
                "gamma_e" => pc.gamma_e,
                "gamma_h" => pc.gamma_h,
                "omega" => pc.omega,
                "big_gamma" | "rate" => pc.big_gamma,
                _ => None,
            })
        })?;
        return Ok(ModelSource::Preset(preset));
    }
    if let Some(spec) = &config.model {
        spec.validate()?;
        return Ok(ModelSource::Spec(spec.clone()));
    }
    Err(CliError::Config(
        "no model: pass --preset NAME or a config file with \"model\" or \"preset\"".into(),
    ))
}

fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_c(z: C64) -> String {
    format!("[{}, {}]", fmt_f(z.re), fmt_f(z.im))
}

fn write_file(dir: &Path, name: &str, contents: &str) -> CliResult<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Config(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, contents)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_spectrum(args: SpectrumArgs) -> CliResult<()> {
    let config = load_config(&args.common)?;
    let model = resolve_model(&args.common, &config)?;
    let parts = model.parts()?;
    let matrices: [(&str, &CMatrix); 5] = [
        ("hamiltonian", &parts.hamiltonian),
        ("h_eff", &parts.h_eff),
        ("liouvillian_eff", &parts.liouvillian_eff),
        ("lindbladian_eff", &parts.lindbladian_eff),
        ("full_lindbladian", &parts.full_lindbladian),
    ];
    let mut csv = String::from("matrix,index,re,im\n");
    for (name, m) in matrices {
        let sys = eig(m).map_err(CliError::from)?;
        for (k, ev) in sys.eigenvalues.iter().enumerate() {
            writeln!(csv, "{name},{k},{},{}", fmt_f(ev.re), fmt_f(ev.im)).unwrap();
        }
    }
    write_file(&args.common.out, "spectrum.csv", &csv)
}

fn jordan_json(report: &JordanReport) -> String {
    let mut out = String::from("[");
    for (k, s) in report.structures.iter().enumerate() {
        if k > 0 {
            out.push_str(", ");
        }
        write!(
            out,
            "{{\"eigenvalue\": {}, \"segre\": {:?}, \"weyr\": {:?}, \"cluster_radius\": {}}}",
            fmt_c(s.eigenvalue),
            s.segre,
            s.weyr,
            fmt_f(s.cluster_radius)
        )
        .unwrap();
    }
    out.push(']');
    out
}

fn cmd_jordan(args: JordanArgs) -> CliResult<()> {
    let config = load_config(&args.common)?;
    let jc = config.jordan.clone().unwrap_or_default();
    let cluster_tol = args
        .cluster_tol
        .or(jc.cluster_tol)
        .unwrap_or(mbep_core::jordan::DEFAULT_CLUSTER_TOL);
    let rank_tol = args
        .rank_tol
        .or(jc.rank_tol)
        .unwrap_or(mbep_core::jordan::DEFAULT_RANK_TOL);
    if !(cluster_tol > 0.0 && rank_tol > 0.0) {
        return Err(CliError::Config("tolerances must be positive".into()));
    }
    let model = resolve_model(&args.common, &config)?;
    let parts = model.parts()?;

    let h_report = detect_structure(&parts.h_eff, cluster_tol, rank_tol)?;
    let liou_report = detect_structure(&parts.liouvillian_eff, cluster_tol, rank_tol)?;
    let lind_report = detect_structure(&parts.lindbladian_eff, cluster_tol, rank_tol)?;

    // Predict the coherent-part structure from the effective Hamiltonian's
    // blocks and cross-report agreement with the detected one.
    let h_blocks: Vec<(usize, C64)> = h_report
        .structures
        .iter()
        .flat_map(|s| s.segre.iter().map(|&b| (b, s.eigenvalue)))
        .collect();
    let predicted = predict_kron_sum_blocks(&h_blocks, &h_blocks, cluster_tol);
    let mut agreement = predicted.len() == liou_report.structures.len();
    if agreement {
        for p in &predicted {
            let found = liou_report
                .structures
                .iter()
                .any(|s| (s.eigenvalue - p.eigenvalue).norm() < 1e-6 && s.segre == p.segre);
            if !found {
                agreement = false;
            }
        }
    }

    let mut warnings: Vec<String> = Vec::new();
    warnings.extend(h_report.warnings.iter().cloned());
    warnings.extend(liou_report.warnings.iter().cloned());
    warnings.extend(lind_report.warnings.iter().cloned());
    let mut json = String::from("{\n");
    writeln!(json, "  \"h_eff\": {},", jordan_json(&h_report)).unwrap();
    writeln!(json, "  \"liouvillian_eff\": {},", jordan_json(&liou_report)).unwrap();
    writeln!(json, "  \"lindbladian_eff\": {},", jordan_json(&lind_report)).unwrap();
    let pred_report = JordanReport { structures: predicted, warnings: vec![] };
    writeln!(json, "  \"predicted_liouvillian\": {},", jordan_json(&pred_report)).unwrap();
    writeln!(json, "  \"prediction_agrees\": {agreement},").unwrap();
    writeln!(json, "  \"warnings\": {warnings:?}").unwrap();
    json.push('}');
    json.push('\n');
    write_file(&args.common.out, "jordan.json", &json)
}

fn diagram_json(d: &NewtonDiagram) -> String {
    let mut out = String::from("{\"points\": [");
    for (k, p) in d.points.iter().enumerate() {
        if k > 0 {
            out.push_str(", ");
        }
        write!(out, "[{}, {}]", p.0, p.1).unwrap();
    }
    out.push_str("], \"segments\": [");
    for (k, s) in d.segments.iter().enumerate() {
        if k > 0 {
            out.push_str(", ");
        }
        write!(
            out,
            "{{\"slope\": [{}, {}], \"span\": {}, \"polynomial\": [",
            s.slope.numer(),
            s.slope.denom(),
            s.span
        )
        .unwrap();
        for (j, c) in s.polynomial.iter().enumerate() {
            if j > 0 {
                out.push_str(", ");
            }
            out.push_str(&fmt_c(c.to_c64()));
        }
        out.push_str("]}");
    }
    write!(out, "], \"reduced_zero_roots\": {}}}", d.reduced_zero_roots).unwrap();
    out
}

/// Exact Newton diagram of the preset's rate family, where an exact route
/// exists: qubits at small-rational parameters, qutrits at the
/// triple-degeneracy drive.
fn attempt_diagram(preset: &Preset) -> Option<NewtonDiagram> {
    let shifted_charpoly = |m: &mbep_core::perturb::RateMatrix,
                            shift: num::rational::BigRational|
     -> Option<GammaPolynomial> {
        let shifted = mbep_core::perturb::charpoly::shift_diagonal(m, &shift);
        GammaPolynomial::char_poly(&shifted).ok()
    };
    let two = num::rational::BigRational::from_integer(2.into());
    let chi = match *preset {
        Preset::QubitI { gamma_i, gamma_e, omega, .. }
        | Preset::QubitII { gamma_i, gamma_e, omega, .. } => {
            let gi = small_rational_from_f64(gamma_i).ok()?;
            let ge = small_rational_from_f64(gamma_e).ok()?;
            let om = small_rational_from_f64(omega).ok()?;
            let case_i = matches!(preset, Preset::QubitI { .. });
            let m = mbep_core::perturb::qubit_symbolic_lindbladian(&gi, &ge, &om, case_i).ok()?;
            shifted_charpoly(&m, (&gi + &ge) / &two)?
        }
        Preset::QutritI { gamma_h, gamma_e, omega, .. }
        | Preset::QutritII { gamma_h, gamma_e, omega, .. } => {
            let (_, ep_omega, _) = mbep_core::model::qutrit_ep_parameters(gamma_h, gamma_e).ok()?;
            if (omega - ep_omega).abs() > 1e-12 * ep_omega.abs().max(1.0) {
                return None; // exact route exists only at the degeneracy drive
            }
            let gh = small_rational_from_f64(gamma_h).ok()?;
            let ge = small_rational_from_f64(gamma_e).ok()?;
            let case = if matches!(preset, Preset::QutritI { .. }) {
                QutritCase::Decays
            } else {
                QutritCase::Dephasing
            };
            let m = mbep_core::perturb::qutrit_symbolic_lindbladian_at_ep(&gh, &ge, case).ok()?;
            shifted_charpoly(&m, (&gh + &ge) / &two)?
        }
    };
    newton_diagram(&chi).ok()
}

fn cmd_perturb(args: PerturbArgs) -> CliResult<()> {
    let config = load_config(&args.common)?;
    let pc = config.perturb.clone().unwrap_or_default();
    let model = resolve_model(&args.common, &config)?;
    let preset = model.preset().ok_or_else(|| {
        CliError::Config("perturb needs a rate-parameterized preset (--preset)".into())
    })?;
    let rate_min = args.rate_min.or(pc.rate_min).unwrap_or(1e-8);
    let rate_max = args.rate_max.or(pc.rate_max).unwrap_or(1e-4);
    let points = args.points.or(pc.points).unwrap_or(12);
    if !(rate_min > 0.0 && rate_max > rate_min && points >= 3) {
        return Err(CliError::Config("need 0 < rate_min < rate_max and points >= 3".into()));
    }
    let route = args.route.or(pc.route).unwrap_or_else(|| "auto".into());

    let family: Box<dyn RateFamily> = match (route.as_str(), &preset) {
        ("numeric", _) => Box::new(NumericRateFamily(preset)),
        ("closed", Preset::QutritI { .. }) => {
            return Err(CliError::Config(
                "the decay cascade has no closed-form spectrum; use charpoly or numeric".into(),
            ))
        }
        ("closed", _) => Box::new(ClosedFormRateFamily(preset)),
        ("charpoly" | "auto", Preset::QutritI { gamma_h, gamma_e, omega, .. }) => {
            let (_, ep_omega, _) = mbep_core::model::qutrit_ep_parameters(*gamma_h, *gamma_e)?;
            if (omega - ep_omega).abs() > 1e-12 {
                Box::new(NumericRateFamily(preset))
            } else {
                let gh = small_rational_from_f64(*gamma_h)?;
                let ge = small_rational_from_f64(*gamma_e)?;
                Box::new(CharPolyRateFamily::qutrit_cascade(&gh, &ge)?)
            }
        }
        ("auto", _) => Box::new(ClosedFormRateFamily(preset)),
        ("charpoly", _) => {
            return Err(CliError::Config(
                "the exact-polynomial route is wired for the qutrit decay cascade".into(),
            ))
        }
        (other, _) => {
            return Err(CliError::Config(format!(
                "unknown route {other}; choose closed, charpoly or numeric"
            )))
        }
    };

    let grid = log_grid(rate_min, rate_max, points);
    let report: SplittingFitReport = splitting_exponent_fit(family.as_ref(), &grid)?;

    let mut csv = String::from("gamma,branch,re_lambda,im_lambda\n");
    for &g in &grid {
        let evs = family.eigenvalues(g).map_err(CliError::from)?;
        for (b, ev) in evs.iter().enumerate() {
            writeln!(csv, "{},{b},{},{}", fmt_f(g), fmt_f(ev.re), fmt_f(ev.im)).unwrap();
        }
    }

    let diagram = attempt_diagram(&preset);
    let mut json = String::from("{\n  \"branches\": [");
    for (k, b) in report.branches.iter().enumerate() {
        if k > 0 {
            json.push_str(", ");
        }
        if b.stationary {
            write!(json, "{{\"stationary\": true, \"reference\": {}}}", fmt_c(b.reference))
                .unwrap();
        } else {
            write!(
                json,
                "{{\"exponent\": {}, \"coefficient\": {}, \"r2\": {}, \"reference\": {}}}",
                fmt_f(b.exponent),
                fmt_c(b.coefficient),
                fmt_f(b.r_squared),
                fmt_c(b.reference)
            )
            .unwrap();
        }
    }
    json.push_str("],\n  \"diagram\": ");
    match &diagram {
        Some(d) => json.push_str(&diagram_json(d)),
        None => json.push_str("null"),
    }
    writeln!(json, ",\n  \"warnings\": {:?}\n}}", report.warnings).unwrap();
    write_file(&args.common.out, "perturb_branches.csv", &csv)?;
    write_file(&args.common.out, "perturb.json", &json)
}

fn cmd_evolve(args: EvolveArgs) -> CliResult<()> {
    let config = load_config(&args.common)?;
    let ec = config.evolve.clone().unwrap_or_default();
    let model = resolve_model(&args.common, &config)?;
    let parts = model.parts()?;
    let tau_max = args.tau_max.or(ec.tau_max).unwrap_or(12.0);
    let points = args.points.or(ec.points).unwrap_or(400);
    let full = args.full || ec.full.unwrap_or(false);
    let raw_time = args.raw_time || ec.raw_time.unwrap_or(false);
    if !(tau_max > 0.0 && points >= 2) {
        return Err(CliError::Config("need tau_max > 0 and points >= 2".into()));
    }
    let n = model.n_levels();
    let initial_level = args.initial_level.or(ec.initial_level).unwrap_or(2);
    if !(1..=n).contains(&initial_level) || (!full && initial_level == 1) {
        return Err(CliError::Config(format!(
            "initial level {initial_level} out of range for this generator"
        )));
    }

    let (generator, dim, first_level) = if full {
        (parts.full_lindbladian_naive(), n, 1usize)
    } else {
        (parts.lindbladian_eff.clone(), n - 1, 2usize)
    };
    let mut rho0 = CMatrix::zeros(dim, dim);
    rho0[(initial_level - first_level, initial_level - first_level)] = C64::new(1.0, 0.0);

    let scale = if raw_time {
        1.0
    } else {
        match model.preset() {
            Some(p) => preset_time_scale(&p),
            None => 1.0,
        }
    };
    let taus = time_grid(tau_max, points);
    let table = evolve_chunked(&generator, &rho0, &taus, scale, args.common.jobs.max(1))?;

    let mut csv = String::from("tau");
    for l in 0..dim {
        write!(csv, ",rho_{}", first_level + l).unwrap();
    }
    for l in 0..dim {
        write!(csv, ",prefactor_{}", first_level + l).unwrap();
    }
    csv.push('\n');
    let prefactor = table.prefactor.as_ref().expect("prefactor requested");
    for (k, &tau) in table.times.iter().enumerate() {
        let mut row = fmt_f(tau);
        for series in &table.populations {
            row.push(',');
            row.push_str(&fmt_f(series[k]));
        }
        for series in prefactor {
            row.push(',');
            row.push_str(&fmt_f(series[k]));
        }
        csv.push_str(&row);
        csv.push('\n');
    }
    write_file(&args.common.out, "evolve.csv", &csv)?;

    // Late-window polynomial degree, as a convenience summary.
    let window = (0.6 * tau_max, tau_max);
    match prefactor_degree(&table, initial_level - first_level, window, 6) {
        Ok(fit) => println!(
            "prefactor degree {} over tau in [{:.2}, {:.2}] (residual {:.2e})",
            fit.degree, window.0, window.1, fit.residual
        ),
        Err(e) => println!("prefactor fit: {e}"),
    }
    Ok(())
}

/// Time points are independent (one matrix exponential each), so the grid
/// splits into contiguous chunks across workers; chunk tables are spliced
/// back in order, so the result is identical to a sequential run.
fn evolve_chunked(
    generator: &CMatrix,
    rho0: &CMatrix,
    taus: &[f64],
    scale: f64,
    jobs: usize,
) -> CliResult<mbep_core::dynamics::TrajectoryTable> {
    let jobs = jobs.min(taus.len()).max(1);
    if jobs == 1 {
        return Ok(evolve_scaled(generator, rho0, taus, scale)?);
    }
    let chunk = taus.len().div_ceil(jobs);
    let pieces: Vec<Result<mbep_core::dynamics::TrajectoryTable, CoreError>> =
        std::thread::scope(|scope| {
            let handles: Vec<_> = taus
                .chunks(chunk)
                .map(|ts| scope.spawn(move || evolve_scaled(generator, rho0, ts, scale)))
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        });
    let mut merged: Option<mbep_core::dynamics::TrajectoryTable> = None;
    for piece in pieces {
        let piece = piece?;
        match &mut merged {
            None => merged = Some(piece),
            Some(t) => {
                t.times.extend_from_slice(&piece.times);
                for (dst, src) in t.populations.iter_mut().zip(&piece.populations) {
                    dst.extend_from_slice(src);
                }
                if let (Some(dst), Some(src)) = (t.prefactor.as_mut(), piece.prefactor.as_ref()) {
                    for (d, s) in dst.iter_mut().zip(src) {
                        d.extend_from_slice(s);
                    }
                }
            }
        }
    }
    Ok(merged.expect("nonempty grid"))
}

fn cmd_qgt(args: QgtArgs) -> CliResult<()> {
    let config = load_config(&args.common)?;
    let qc = config.qgt.clone().unwrap_or_default();
    let model = resolve_model(&args.common, &config)?;
    let preset = model
        .preset()
        .ok_or_else(|| CliError::Config("qgt scans vary a preset's drive (--preset)".into()))?;
    let omega_min = args.omega_min.or(qc.omega_min).unwrap_or(0.05);
    let omega_max = args.omega_max.or(qc.omega_max).unwrap_or(0.35);
    let omega_step = args.omega_step.or(qc.omega_step).unwrap_or(1e-3);
    if !(omega_step > 0.0 && omega_max > omega_min) {
        return Err(CliError::Config("need omega_min < omega_max and a positive step".into()));
    }
    let mut opts = QgtOptions {
        richardson: args.richardson || qc.richardson.unwrap_or(false),
        jobs: args.common.jobs.max(1),
        ..QgtOptions::default()
    };
    if let Some(step) = args.fd_step.or(qc.fd_step) {
        if step <= 0.0 {
            return Err(CliError::Config("fd step must be positive".into()));
        }
        opts.step = step;
    }

    let count = ((omega_max - omega_min) / omega_step).floor() as usize + 1;
    let omegas: Vec<f64> = (0..count).map(|k| omega_min + omega_step * k as f64).collect();
    let scan: QgtScan = metric_scan(&PresetDriveFamily(preset), &omegas, &opts)?;

    let mut csv = String::from("omega,mode,re_lambda,im_lambda,metric,cond,flag\n");
    for (g, &w) in scan.omegas.iter().enumerate() {
        for (mode, series) in scan.series.iter().enumerate() {
            let p = &series[g];
            writeln!(
                csv,
                "{},{mode},{},{},{},{},{}",
                fmt_f(w),
                fmt_f(p.lambda.re),
                fmt_f(p.lambda.im),
                fmt_f(p.metric),
                fmt_f(p.cond),
                p.flag.as_str()
            )
            .unwrap();
        }
    }
    write_file(&args.common.out, "qgt.csv", &csv)?;

    let mut json = String::from("{\n  \"critical_points\": [");
    for (k, cp) in scan.critical_points.iter().enumerate() {
        if k > 0 {
            json.push_str(", ");
        }
        write!(
            json,
            "{{\"omega\": {}, \"modes\": {:?}, \"exponent\": {}, \"peak_metric\": {}}}",
            fmt_f(cp.omega),
            cp.modes,
            fmt_f(cp.exponent),
            fmt_f(cp.peak_metric)
        )
        .unwrap();
    }
    writeln!(json, "],\n  \"warnings\": {:?}\n}}", scan.warnings).unwrap();
    write_file(&args.common.out, "qgt_critical.json", &json)
}

fn cmd_verify(args: VerifyArgs) -> ExitCode {
    let results = if args.criteria.is_empty() {
        mbep_core::acceptance::run_all()
    } else {
        mbep_core::acceptance::run_selected(&args.criteria)
    };
    if results.is_empty() {
        eprintln!("no matching criteria");
        return ExitCode::from(EXIT_CONFIG);
    }
    let mut failures = 0;
    for r in &results {
        let status = if r.passed { "PASS" } else { "FAIL" };
        println!("criterion {:>2} [{}] {}: {}", r.id, status, r.name, r.details);
        if !r.passed {
            failures += 1;
        }
    }
    if failures > 0 {
        eprintln!("{failures} criteria failed");
        ExitCode::from(EXIT_VERIFY)
    } else {
        ExitCode::SUCCESS
    }
}
