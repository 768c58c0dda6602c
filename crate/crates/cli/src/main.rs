use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bolax::certify::{
    estimate_cs, halfplane_certificate, kappa_mu_gap_certificates, region_bound_certificates,
    CertReport, DEFAULT_SEED,
};
use bolax::finitegap::{gn_convergence_table, potential_from_roots, FiniteGapSpec};
use bolax::fourier::{Potential, SobolevParams};
use bolax::genfun::{functionals, h_grid};
use bolax::io::{self, Format};
use bolax::spectrum::{
    contour_spectrum, counting_certificate, gaps_and_moment_map, SpectralData, SpectralOptions,
};
use bolax::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::json;

const THREADS_ENV: &str = "BOLAX_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "bolax",
    version,
    about = "Spectral toolkit for the Benjamin-Ono Lax operator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Labelled eigenvalues λ_0..λ_{n_max}.
    Spectrum(SpectrumArgs),
    /// Gaps, weighted gap norm and the trace/action identity residuals.
    Gaps(RunArgs),
    /// F_n, κ_n, μ_n by every available method, or samples of H.
    Genfun(GenfunArgs),
    /// Bounds on κ_n and μ_n behind the small-gap gate.
    KappaMu(RunArgs),
    /// Finite-gap potential from roots q_j.
    Fingap(FingapArgs),
    /// Convergence of g_n to g_∞ for a real potential.
    Asymptotics(RunArgs),
    /// Machine-checked versions of the explicit estimates.
    Certify(CertifyArgs),
    /// Run the built-in invariant suite.
    Selftest(CommonArgs),
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// Sobolev index s in [0, 1/2).
    #[arg(long, default_value_t = 0.0)]
    s: f64,
    /// Truncation K; defaults to n_max + 8B + 32.
    #[arg(long)]
    k: Option<usize>,
    /// Initial trapezoid node count, a multiple of 8.
    #[arg(long, default_value_t = 64)]
    nodes: usize,
    #[arg(long, default_value_t = 10)]
    n_max: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = OutFormat::Json)]
    format: OutFormat,
    /// Worker threads; overrides BOLAX_THREADS.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    potential: PathBuf,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EigenMethod {
    Dense,
    Contour,
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, value_enum, default_value_t = EigenMethod::Dense)]
    method: EigenMethod,
}

#[derive(Args, Debug)]
struct GenfunArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Emit H on a grid `re_min,re_max,im_min,im_max` instead of the table.
    #[arg(long, allow_hyphen_values = true)]
    h_grid: Option<String>,
    #[arg(long, default_value_t = 41)]
    steps: usize,
}

#[derive(Args, Debug)]
struct FingapArgs {
    /// Roots as `re` or `re:im`, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    roots: Vec<String>,
    #[arg(long)]
    band: Option<usize>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Which {
    Halfplane,
    Regions,
    Counting,
    KappaMu,
    All,
}

#[derive(Args, Debug)]
struct CertifyArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, value_enum, default_value_t = Which::All)]
    which: Which,
    /// Margin ρ of the Vert regions and counting discs.
    #[arg(long, default_value_t = 0.25)]
    rho: f64,
    /// Bound M on ‖u‖_(−s) for the half-plane check; defaults to ‖u‖_(−s).
    #[arg(long)]
    big_m: Option<f64>,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// Trials used to estimate C_s.
    #[arg(long, default_value_t = 2000)]
    cs_trials: usize,
    /// Real reference potential for the counting discs; defaults to Re u.
    #[arg(long)]
    reference: Option<PathBuf>,
}

/// Reason a run stopped, mapped onto the process exit code.
enum Failure {
    Usage(String),
    Certificate(String),
    Gate(String),
    Numerical(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(m) | Error::Schema(m) => Failure::Usage(m),
            Error::Io(e) => Failure::Usage(e.to_string()),
            Error::BoundViolated { .. } => Failure::Certificate(e.to_string()),
            Error::GateFailed { .. } => Failure::Gate(e.to_string()),
            other => Failure::Numerical(other),
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

fn variant_name(e: &Error) -> String {
    let d = format!("{e:?}");
    d.split(|c: char| !c.is_alphanumeric())
        .next()
        .unwrap_or("Error")
        .to_string()
}

fn configure_threads(requested: Option<usize>) -> Outcome {
    let n = match requested {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(v.parse::<usize>().map_err(|_| {
                Failure::Usage(format!("{THREADS_ENV} must be a positive integer"))
            })?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(Failure::Usage("thread budget must be positive".into()));
        }
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(())
}

fn validate(c: &CommonArgs) -> std::result::Result<SobolevParams, Failure> {
    configure_threads(c.threads)?;
    if c.nodes == 0 || c.nodes % 8 != 0 {
        return Err(Failure::Usage(format!(
            "--nodes must be a positive multiple of 8, got {}",
            c.nodes
        )));
    }
    if let Some(k) = c.k {
        if k < c.n_max + 2 {
            return Err(Failure::Usage(format!(
                "--k {k} must be at least n_max + 2 = {}",
                c.n_max + 2
            )));
        }
    }
    Ok(SobolevParams::new(c.s)?)
}

fn options(c: &CommonArgs) -> SpectralOptions {
    SpectralOptions {
        n_max: c.n_max,
        truncation: c.k,
        nodes: c.nodes,
        ..SpectralOptions::default()
    }
}

fn format_of(c: &CommonArgs) -> Format {
    match c.format {
        OutFormat::Json => Format::Json,
        OutFormat::Csv => Format::Csv,
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Outcome {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load(path: &Path) -> std::result::Result<Potential, Failure> {
    io::read_potential(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn load_data(run: &RunArgs) -> std::result::Result<SpectralData, Failure> {
    let params = validate(&run.common)?;
    let u = load(&run.potential)?;
    Ok(SpectralData::compute_with(
        &u,
        options(&run.common),
        params,
    )?)
}

fn spectrum(args: SpectrumArgs) -> Outcome {
    let mut data = load_data(&args.run)?;
    if let EigenMethod::Contour = args.method {
        data.spectrum = contour_spectrum(&data.lax, &data.layout, data.options.nodes)?;
        data.gaps = gaps_and_moment_map(&data.spectrum, data.params);
    }
    let table = io::spectrum_table(&data);
    emit(
        &args.run.common.out,
        &table.render(format_of(&args.run.common)),
    )
}

fn gaps(args: RunArgs) -> Outcome {
    let data = load_data(&args)?;
    let mut table = io::gaps_table(&data);
    let id = data.identities();
    table.meta("trace_tail", id.trace_tail);
    table.meta(
        "trace_residual_max",
        id.trace.iter().copied().fold(0.0, f64::max),
    );
    if let Some(a) = id.action {
        table.meta("action_residual", a);
    }
    if let Some(t) = id.action_tail {
        table.meta("action_tail", t);
    }
    emit(&args.common.out, &table.render(format_of(&args.common)))
}

fn genfun(args: GenfunArgs) -> Outcome {
    let data = load_data(&args.run)?;
    let table = match args.h_grid {
        Some(spec) => {
            let b = spec
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .ok()
                .filter(|b| b.len() == 4)
                .ok_or_else(|| {
                    Failure::Usage(format!("--h-grid expects four numbers, got '{spec}'"))
                })?;
            io::h_grid_table(&h_grid(&data, (b[0], b[1]), (b[2], b[3]), args.steps))
        }
        None => io::functionals_table(&data, &functionals(&data, data.n_max())?),
    };
    emit(
        &args.run.common.out,
        &table.render(format_of(&args.run.common)),
    )
}

fn report_text(reports: &[CertReport]) -> String {
    let mut s = serde_json::to_string_pretty(reports).expect("reports serialize");
    s.push('\n');
    s
}

fn finish_reports(out: &Option<PathBuf>, reports: Vec<CertReport>) -> Outcome {
    emit(out, &report_text(&reports))?;
    for r in &reports {
        let failed = r.failures().count();
        for m in r.failures().take(5) {
            eprintln!(
                "FAIL {}: {} value {:e} bound {:e}",
                r.name, m.label, m.value, m.bound
            );
        }
        if failed > 5 {
            eprintln!("FAIL {}: {} more failing margins", r.name, failed - 5);
        }
        for n in &r.notes {
            eprintln!("note {}: {n}", r.name);
        }
    }
    match reports.iter().find(|r| !r.passed) {
        Some(r) => Err(Failure::Certificate(format!(
            "certificate '{}' failed",
            r.name
        ))),
        None => Ok(()),
    }
}

fn kappa_mu(args: RunArgs) -> Outcome {
    let data = load_data(&args)?;
    let rep = kappa_mu_gap_certificates(&data)?;
    finish_reports(&args.common.out, vec![rep])
}

fn parse_root(s: &str) -> std::result::Result<Complex64, Failure> {
    let bad = || Failure::Usage(format!("cannot parse root '{s}'"));
    let mut parts = s.split(':');
    let re = parts
        .next()
        .ok_or_else(bad)?
        .trim()
        .parse::<f64>()
        .map_err(|_| bad())?;
    let im = match parts.next() {
        Some(p) => p.trim().parse::<f64>().map_err(|_| bad())?,
        None => 0.0,
    };
    if parts.next().is_some() {
        return Err(bad());
    }
    Ok(Complex64::new(re, im))
}

fn fingap(args: FingapArgs) -> Outcome {
    validate(&args.common)?;
    let roots = args
        .roots
        .iter()
        .map(|r| parse_root(r))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let spec = FiniteGapSpec::new(roots)?;
    let band = args.band.unwrap_or_else(|| spec.minimal_band());
    let u = potential_from_roots(&spec, band)?;
    emit(&args.common.out, &u.to_json())
}

fn asymptotics(args: RunArgs) -> Outcome {
    let data = load_data(&args)?;
    let table = gn_convergence_table(&data, data.n_max())?;
    emit(
        &args.common.out,
        &io::convergence_table(&data, &table).render(format_of(&args.common)),
    )
}

fn certify(args: CertifyArgs) -> Outcome {
    let c = &args.run.common;
    let params = validate(c)?;
    let u = load(&args.run.potential)?;
    let s = params.s();
    let k = c.k.unwrap_or_else(|| options(c).truncation_for(&u));
    let want = |w: Which| args.which == w || args.which == Which::All;
    let mut reports = Vec::new();
    let needs_cs = want(Which::Halfplane) || want(Which::Regions);
    let cs = if needs_cs {
        estimate_cs(s, args.cs_trials, c.seed)?
    } else {
        1.0
    };
    if want(Which::Halfplane) {
        let big_m = args.big_m.unwrap_or_else(|| u.norm(-s)).max(1e-12);
        reports.push(halfplane_certificate(
            &u,
            params,
            big_m,
            args.samples,
            cs,
            k,
        )?);
    }
    if want(Which::Regions) {
        let per_n = args.samples.div_ceil(c.n_max + 1).max(1);
        reports.push(region_bound_certificates(
            &u,
            params,
            args.rho,
            0..=c.n_max,
            cs,
            k,
            per_n,
        )?);
    }
    if want(Which::Counting) {
        let w = match &args.reference {
            Some(p) => load(p)?,
            None if u.is_hermitian() => u.clone(),
            None => u.real_part(),
        };
        reports.push(counting_certificate(
            &u, &w, args.rho, c.n_max, c.k, c.nodes,
        )?);
    }
    if want(Which::KappaMu) {
        let data = SpectralData::compute_with(&u, options(c), params)?;
        match kappa_mu_gap_certificates(&data) {
            Ok(r) => reports.push(r),
            Err(Error::GateFailed { sum }) if args.which == Which::All => {
                eprintln!("skipping kappa-mu: gap sum {sum:e} exceeds the 1/5 gate");
            }
            Err(e) => return Err(e.into()),
        }
    }
    finish_reports(&c.out, reports)
}

fn check(name: &str, ok: bool, detail: String, failures: &mut usize) {
    println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    if !ok {
        *failures += 1;
    }
}

fn selftest(c: CommonArgs) -> Outcome {
    validate(&c)?;
    let mut failures = 0;
    let q: f64 = 0.3;
    let n_max = c.n_max.min(12);
    let opts = SpectralOptions {
        n_max,
        truncation: Some(c.k.unwrap_or(64).max(n_max + 2)),
        nodes: c.nodes,
        ..SpectralOptions::default()
    };

    let zero = SpectralData::compute(&Potential::zero(), opts)?;
    let err = (0..=n_max)
        .map(|n| (zero.lambda(n) - n as f64).norm())
        .fold(0.0, f64::max);
    check(
        "zero potential spectrum",
        err < 1e-12,
        format!("max |λ_n − n| = {err:.2e}"),
        &mut failures,
    );

    let one = potential_from_roots(&FiniteGapSpec::new(vec![Complex64::new(q, 0.0)])?, 24)?;
    let data = SpectralData::compute(&one, opts)?;
    let g1 = q * q / (1.0 - q * q);
    let err = (data.gamma(1) - g1)
        .norm()
        .max((data.lambda(0) + g1).norm());
    check(
        "one-gap spectrum",
        err < 1e-8,
        format!("error {err:.2e}"),
        &mut failures,
    );

    let contour = contour_spectrum(&data.lax, &data.layout, data.options.nodes)?;
    let err = (0..=n_max)
        .map(|n| (contour.eigenvalues[n] - data.lambda(n)).norm())
        .fold(0.0, f64::max);
    check(
        "dense and contour agree",
        err < 1e-8,
        format!("max difference {err:.2e}"),
        &mut failures,
    );

    let id = data.identities();
    let trace = id.trace.iter().copied().fold(0.0, f64::max);
    check(
        "trace formula",
        trace < 1e-7,
        format!("max residual {trace:.2e}"),
        &mut failures,
    );
    let action = id.action.unwrap_or(f64::INFINITY);
    check(
        "action identity",
        action < 1e-6,
        format!("residual {action:.2e}"),
        &mut failures,
    );

    let h = bolax::genfun::h_resolvent(&data.lax, data.lambda(0) + 1.0)?.norm();
    check(
        "H vanishes at λ_0 + 1",
        h < 1e-8,
        format!("|H| = {h:.2e}"),
        &mut failures,
    );

    let f = functionals(&data, n_max.min(6))?;
    let spread = f.rows.iter().map(|r| r.f_discrepancy).fold(0.0, f64::max);
    check(
        "F_n method agreement",
        spread < 1e-8,
        format!("max spread {spread:.2e}"),
        &mut failures,
    );

    let rep = kappa_mu_gap_certificates(&data)?;
    check(
        "κ/μ bounds",
        rep.passed,
        format!("{} margins", rep.margins.len()),
        &mut failures,
    );

    let conv = gn_convergence_table(&data, n_max.min(6))?;
    let ok = conv.rows.iter().all(|r| r.step_bound_holds)
        && conv.rows[1..]
            .iter()
            .all(|r| r.to_limit.is_some_and(|d| d < 1e-8));
    check(
        "g_n = g_∞ beyond the last gap",
        ok,
        format!("{} rows", conv.rows.len()),
        &mut failures,
    );

    if failures > 0 {
        Err(Failure::Certificate(format!(
            "{failures} self-test checks failed"
        )))
    } else {
        Ok(())
    }
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Spectrum(a) => spectrum(a),
        Command::Gaps(a) => gaps(a),
        Command::Genfun(a) => genfun(a),
        Command::KappaMu(a) => kappa_mu(a),
        Command::Fingap(a) => fingap(a),
        Command::Asymptotics(a) => asymptotics(a),
        Command::Certify(a) => certify(a),
        Command::Selftest(a) => selftest(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Certificate(m)) => {
            eprintln!("certificate failure: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Gate(m)) => {
            eprintln!("gate failure: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Numerical(e)) => {
            let diag = json!({ "error": variant_name(&e), "message": e.to_string() });
            eprintln!("{diag}");
            ExitCode::from(4)
        }
    }
}
