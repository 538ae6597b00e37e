//! The `natcop` command line: synthetic data, marginal fits, copula
//! estimation, flow diagnostics and correlation, with deterministic JSON or
//! CSV reports.

pub mod args;
pub mod report;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::Parser;

use natural_copula::copula::wasserstein_cost;
use natural_copula::hydro::{
    flow_summary, velocity_field, CopulaPotential, FlowSummary, PolynomialPotential, Potential,
    PotentialKind,
};
use natural_copula::ingest::{bin_levels, load_csv, ma_smooth, to_csv_string};
use natural_copula::marginals::FitResult;
use natural_copula::synth::{synthesize, Preset, SynthConfig};
use natural_copula::{
    correlation_ct, discretize, estimate_copula, fit_marginal, gauss_legendre_rule, solve_ot_1d,
    ContourConvention, CopulaConfig, CopulaModel, DomainMap, EmpiricalHistogram, Exec, FitConfig,
    MarginalDensity, MonomialBasis, QuadratureRule, Side,
};

use args::{
    Cli, Command, ConventionArg, FormatArg, PipelineArgs, PotentialArg, PresetName, SynthArgs,
    TestPotential,
};
use report::{
    fmt12, r12, r12_all, CopulaSection, CorrSection, FitSection, HydroSection, Params, Report,
    SideFit, SCHEMA,
};

/// Support size of the discretized marginals behind `ot_lower_bound`.
const OT_POINTS: usize = 200;
const FLUX_TOL: f64 = 1e-6;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or flag combinations; exit code 1.
    Usage(String),
    /// Data, numerical or I/O failure; exit code 2.
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
        }
    }
}

impl From<natural_copula::Error> for CliError {
    fn from(e: natural_copula::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if code == 0 { stdout } else { stderr };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    match run(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "natcop: {e}");
            e.exit_code()
        }
    }
}

fn run(command: Command, stdout: &mut dyn Write) -> CliResult<()> {
    match command {
        Command::Synth(a) => cmd_synth(&a, stdout),
        Command::Fit(a) => pipeline(&a, Stages::FIT, stdout),
        Command::Copula(a) => pipeline(&a, Stages::COPULA, stdout),
        Command::Hydro(a) => pipeline(&a, Stages::HYDRO, stdout),
        Command::Corr(a) => pipeline(&a, Stages::CORR, stdout),
        Command::Run(a) => pipeline(&a, Stages::ALL, stdout),
    }
}

fn emit(stdout: &mut dyn Write, text: &str) -> CliResult<()> {
    stdout
        .write_all(text.as_bytes())
        .map_err(|e| CliError::Data(format!("stdout: {e}")))
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn cmd_synth(a: &SynthArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let preset = match a.preset {
        PresetName::Ibm => Preset::ibm(),
        PresetName::Spdr => Preset::spdr(),
    };
    let mut config = SynthConfig::from_preset(&preset);
    for (spec, coeffs, volume, center) in [
        (&mut config.buy, &a.buy_coeffs, a.buy_volume, a.buy_center),
        (
            &mut config.sell,
            &a.sell_coeffs,
            a.sell_volume,
            a.sell_center,
        ),
    ] {
        if let Some(c) = coeffs {
            spec.coeffs.copy_from_slice(c);
        }
        if let Some(v) = volume {
            spec.volume = v;
        }
        if let Some(p) = center {
            spec.center = p;
        }
        if let Some(w) = a.width {
            spec.width = w;
        }
        if let Some(x) = a.xi {
            spec.xi = x;
        }
        if let Some(t) = a.theta {
            spec.theta = t;
        }
    }
    config.levels = a.levels;
    config.seed = a.seed;
    config.noise = a.noise;
    let csv = to_csv_string(&synthesize(&config)?);
    match &a.out {
        Some(path) => write_file(path, &csv),
        None => emit(stdout, &csv),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Stages {
    fit: bool,
    copula: bool,
    hydro: bool,
    corr: bool,
}

impl Stages {
    const FIT: Self = Self {
        fit: true,
        copula: false,
        hydro: false,
        corr: false,
    };
    const COPULA: Self = Self {
        fit: false,
        copula: true,
        hydro: false,
        corr: false,
    };
    const HYDRO: Self = Self {
        fit: false,
        copula: false,
        hydro: true,
        corr: false,
    };
    const CORR: Self = Self {
        fit: false,
        copula: false,
        hydro: false,
        corr: true,
    };
    const ALL: Self = Self {
        fit: true,
        copula: true,
        hydro: true,
        corr: true,
    };
}

fn potential_name(p: PotentialArg) -> &'static str {
    match p {
        PotentialArg::Density => "density",
        PotentialArg::Cdf => "cdf",
    }
}

fn convention_name(c: ConventionArg) -> &'static str {
    match c {
        ConventionArg::Paper => "paper",
        ConventionArg::Counterclockwise => "counterclockwise",
    }
}

fn test_potential_name(t: TestPotential) -> &'static str {
    match t {
        TestPotential::Xy => "xy",
        TestPotential::Bowl => "bowl",
    }
}

struct Marginals {
    f_x: MarginalDensity,
    f_y: MarginalDensity,
    fit: Option<(DomainMap, FitResult, FitResult)>,
}

fn smoothed(
    records: &[natural_copula::PriceLevelRecord],
    a: &PipelineArgs,
    side: Side,
) -> CliResult<EmpiricalHistogram> {
    let h = bin_levels(records, a.bins as usize, side)?;
    let masses = ma_smooth(h.masses(), a.ma_order as usize)?;
    Ok(EmpiricalHistogram::new(h.bin_centers().to_vec(), masses)?)
}

fn load_marginals(a: &PipelineArgs, rule: &QuadratureRule) -> CliResult<Marginals> {
    let Some(input) = &a.input else {
        let u = MarginalDensity::uniform();
        return Ok(Marginals {
            f_x: u.clone(),
            f_y: u,
            fit: None,
        });
    };
    let records = load_csv(input)?;
    let buy = smoothed(&records, a, Side::Buy)?;
    let sell = smoothed(&records, a, Side::Sell)?;
    let lo = [&buy, &sell]
        .iter()
        .map(|h| h.bin_centers()[0] - h.bin_width())
        .fold(f64::INFINITY, f64::min);
    let hi = [&buy, &sell]
        .iter()
        .map(|h| h.bin_centers()[h.len() - 1] + h.bin_width())
        .fold(f64::NEG_INFINITY, f64::max);
    let map = DomainMap::new(lo, hi)?;
    let config = FitConfig {
        xi: a.xi,
        ..FitConfig::default()
    };
    let fb = fit_marginal(&buy, &map, &config, rule)?;
    let fs = fit_marginal(&sell, &map, &config, rule)?;
    Ok(Marginals {
        f_x: fb.density.clone(),
        f_y: fs.density.clone(),
        fit: Some((map, fb, fs)),
    })
}

fn side_fit(f: &FitResult) -> SideFit {
    let s = &f.spec;
    SideFit {
        coeffs: r12_all(&s.coeffs),
        xi: r12(s.xi),
        center: r12(s.center),
        width: r12(s.width),
        theta: r12(s.theta),
        volume: r12(s.volume),
        residual: r12(f.residual),
        iterations: f.iterations,
        converged: f.converged,
        support: f
            .density
            .support()
            .iter()
            .map(|&(a, b)| [r12(a), r12(b)])
            .collect(),
    }
}

fn basis_for(a: &PipelineArgs) -> CliResult<MonomialBasis> {
    if a.product {
        return Ok(MonomialBasis::empty());
    }
    MonomialBasis::parse(&a.basis).map_err(|e| CliError::Usage(format!("--basis: {e}")))
}

fn copula_section(
    model: &CopulaModel,
    rule: &QuadratureRule,
    grid: &[Vec<f64>],
) -> CliResult<CopulaSection> {
    let cost = wasserstein_cost(model, rule)?;
    let lower = solve_ot_1d(
        &discretize(&model.f_x, OT_POINTS)?,
        &discretize(&model.f_y, OT_POINTS)?,
    )
    .cost;
    let min_density = grid.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    Ok(CopulaSection {
        constant: r12(model.constant),
        basis: model.basis.labels(),
        coefficients: r12_all(&model.coefficients),
        cost: r12(cost),
        mass: r12(model.mass),
        constraint_residual: r12(model.constraint_residual()),
        marginal_deviation: r12(model.marginal_deviation(rule)?),
        ot_lower_bound: r12(lower),
        ot_gap: r12(cost - lower),
        min_density: r12(min_density),
        cuts: model.cuts,
    })
}

fn density_csv(grid: &[Vec<f64>]) -> String {
    let n = grid.len();
    let axis = natural_copula::copula::unit_grid(n);
    let mut out = String::from("x,y,density\n");
    for (row, &x) in grid.iter().zip(&axis) {
        for (&p, &y) in row.iter().zip(&axis) {
            out.push_str(&format!("{},{},{}\n", fmt12(x), fmt12(y), fmt12(p)));
        }
    }
    out
}

fn hydro_run<V: Potential>(
    v: &V,
    a: &PipelineArgs,
    rule: &QuadratureRule,
    potential: &'static str,
) -> CliResult<(HydroSection, String)> {
    let convention = match a.contour_convention {
        ConventionArg::Paper => ContourConvention::Literal,
        ConventionArg::Counterclockwise => ContourConvention::CounterClockwise,
    };
    let FlowSummary {
        circulation,
        flux,
        green_residual,
    } = flow_summary(v, rule, convention)?;
    let field = velocity_field(v, a.grid_res as usize, Exec::default())?;
    let mut csv = String::from("x,y,vx,vy\n");
    for ((&(x, y), &vx), &vy) in field.points.iter().zip(&field.vx).zip(&field.vy) {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            fmt12(x),
            fmt12(y),
            fmt12(vx),
            fmt12(vy)
        ));
    }
    Ok((
        HydroSection {
            potential,
            contour_convention: convention_name(a.contour_convention),
            gamma: r12(circulation),
            phi: r12(flux),
            green_residual: r12(green_residual),
            stream_function: flux.abs() < FLUX_TOL,
        },
        csv,
    ))
}

fn test_potential(t: TestPotential) -> PolynomialPotential {
    match t {
        TestPotential::Xy => PolynomialPotential::new(vec![(1.0, 1, 1)]),
        TestPotential::Bowl => PolynomialPotential::new(vec![(1.0, 2, 0), (1.0, 0, 2)]),
    }
}

fn pipeline(a: &PipelineArgs, stages: Stages, stdout: &mut dyn Write) -> CliResult<()> {
    if !(a.xi.is_finite() && a.xi > 0.0) {
        return Err(CliError::Usage(format!(
            "--xi must be positive, got {}",
            a.xi
        )));
    }
    if a.input.is_none() && !a.uniform && !(stages == Stages::HYDRO && a.test_potential.is_some()) {
        return Err(CliError::Usage("--input or --uniform is required".into()));
    }
    let basis = basis_for(a)?;
    let rule = gauss_legendre_rule(a.quad_n as usize)?;
    let mut files: Vec<(&str, String)> = Vec::new();

    let params = Params {
        input: a.input.as_ref().map(|p| p.display().to_string()),
        uniform: a.uniform,
        bins: a.bins,
        ma_order: a.ma_order,
        basis: basis.labels(),
        grid_n: a.grid_n,
        quad_n: a.quad_n,
        moment_constraints: a.moment_constraints,
        potential: potential_name(a.potential),
        contour_convention: convention_name(a.contour_convention),
        test_potential: a.test_potential.map(test_potential_name),
        xi: r12(a.xi),
        grid_res: a.grid_res,
    };
    let mut report = Report {
        schema: SCHEMA,
        params,
        fit: None,
        copula: None,
        hydro: None,
        corr: None,
    };

    // A pure test-potential hydro run needs no data.
    if stages == Stages::HYDRO && a.input.is_none() && !a.uniform {
        let t = a.test_potential.expect("checked above");
        let (section, csv) = hydro_run(&test_potential(t), a, &rule, test_potential_name(t))?;
        report.hydro = Some(section);
        files.push(("vector_field.csv", csv));
        return finish(a, &report, files, stdout);
    }

    let marginals = load_marginals(a, &rule)?;
    if stages.fit {
        if let Some((map, fb, fs)) = &marginals.fit {
            report.fit = Some(FitSection {
                domain: [r12(map.lo), r12(map.hi)],
                buy: side_fit(fb),
                sell: side_fit(fs),
            });
            files.push((
                "marginals.csv",
                marginals_csv(&marginals, a.grid_res as usize, map),
            ));
        }
        if stages == Stages::FIT {
            if marginals.fit.is_none() {
                return Err(CliError::Usage("fit needs --input".into()));
            }
            return finish(a, &report, files, stdout);
        }
    }

    let config = CopulaConfig {
        quad_n: a.quad_n as usize,
        grid_n: a.grid_n as usize,
        moment_constraints: a.moment_constraints as usize,
        ..CopulaConfig::default()
    };
    let model = estimate_copula(&marginals.f_x, &marginals.f_y, &basis, &config)?;

    if stages.copula {
        let grid = model.density_grid(a.grid_res as usize, Exec::default());
        report.copula = Some(copula_section(&model, &rule, &grid)?);
        files.push(("density_grid.csv", density_csv(&grid)));
    }
    if stages.hydro {
        let (section, csv) = match a.test_potential {
            Some(t) => hydro_run(&test_potential(t), a, &rule, test_potential_name(t))?,
            None => {
                let kind = match a.potential {
                    PotentialArg::Density => PotentialKind::Density,
                    PotentialArg::Cdf => PotentialKind::Cumulative,
                };
                let v = CopulaPotential::new(&model, kind, &rule);
                hydro_run(&v, a, &rule, potential_name(a.potential))?
            }
        };
        report.hydro = Some(section);
        files.push(("vector_field.csv", csv));
    }
    if stages.corr {
        let c = correlation_ct(&model, &rule)?;
        report.corr = Some(CorrSection {
            ct: r12(c.ct),
            variance: r12(c.variance),
            variance_residual: c.variance_residual.map(r12),
            normalization_active: c.normalization_active,
            warning: (!c.normalization_active).then(|| {
                "normalization constraint inactive; variance identity not checked".to_string()
            }),
        });
    }
    finish(a, &report, files, stdout)
}

fn marginals_csv(m: &Marginals, n: usize, map: &DomainMap) -> String {
    let mut out = String::from("u,price,buy,sell\n");
    for &u in &natural_copula::copula::unit_grid(n) {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt12(u),
            fmt12(map.to_price(u)),
            fmt12(m.f_x.value(u)),
            fmt12(m.f_y.value(u))
        ));
    }
    out
}

fn finish(
    a: &PipelineArgs,
    report: &Report,
    files: Vec<(&str, String)>,
    stdout: &mut dyn Write,
) -> CliResult<()> {
    let (name, text) = match a.format {
        FormatArg::Json => ("report.json", report::to_json(report)),
        FormatArg::Csv => ("report.csv", report::to_csv(report)),
    };
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
        write_file(&dir.join(name), &text)?;
        for (file, contents) in &files {
            write_file(&PathBuf::from(dir).join(file), contents)?;
        }
    }
    emit(stdout, &text)
}
