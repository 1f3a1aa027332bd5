//! `superselect` command-line front end.
//!
//! [`run`] parses arguments, executes one subcommand and writes either a
//! short human summary or (with `--json`) the full [`RunReport`]. Exit codes:
//! 0 on success, 2 when a state violates superselection, 1 on usage, IO or
//! schema errors.

use std::ffi::OsString;
use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex;
use serde_json::{json, Value};
use superselect_core::{
    apply_u1_gauge, build_packaged_entangled_basis, build_scenario, charge_conjugate, check_expectations,
    entanglement_entropy, internal_charge_marginal, is_packaged_entangled, measure_spin, ppt_check, registries,
    sample_measurement, schmidt, sector_decompose, validate_superselection, verify_basis, Bipartition, BuilderConfig,
    Error, SectorIndex, SpeciesRegistry, SpinObservable, StateVector,
};

pub mod report;

pub use report::{strip_timestamp, InputDigest, RunReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VIOLATION: i32 = 2;

/// Canned registries accepted as `--registry builtin:<name>`.
pub const BUILTIN_REGISTRIES: [&str; 6] =
    ["electron_positron", "electron_positron_spin", "qed", "qed_spin", "neutral_kaons", "color_toy"];

#[derive(Debug, Parser)]
#[command(name = "superselect", version, about = "Packaged-charge superselection and entanglement toolkit")]
struct Cli {
    /// Emit the full JSON run report instead of a summary.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Also write the JSON run report to this file.
    #[arg(long, global = true, value_name = "FILE")]
    report: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Inputs {
    /// Registry JSON file, or `builtin:<name>`.
    #[arg(long)]
    registry: String,
    /// State JSON file.
    #[arg(long)]
    state: PathBuf,
    /// Renormalize the state after loading.
    #[arg(long)]
    normalize: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Observable {
    SpinZ,
    SpinX,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a canned scenario and verify its expectations.
    Demo {
        scenario: String,
        /// Amplitude `re[,im]` of the first term (hybrid_pair, meson_superposition).
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        beta: Option<String>,
        /// Save the scenario state.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        /// Save the scenario registry.
        #[arg(long, value_name = "FILE")]
        registry_out: Option<PathBuf>,
    },
    /// Check that a state lies in a single superselection sector.
    Validate {
        #[command(flatten)]
        inputs: Inputs,
    },
    /// Build an orthonormal basis of entangled states for one sector.
    Basis {
        #[arg(long)]
        registry: String,
        #[arg(long)]
        registers: usize,
        /// Gauged charges, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        charge: String,
        /// Restrict registers to these species, comma separated.
        #[arg(long)]
        allowed: Option<String>,
        /// Fail instead of flagging a degenerate basis.
        #[arg(long)]
        strict: bool,
        /// Directory for the vector files and diagnostics.json.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Schmidt values, entropies and the entanglement verdict.
    Entangle {
        #[command(flatten)]
        inputs: Inputs,
        /// Left registers of a single cut, comma separated.
        #[arg(long)]
        cut: Option<String>,
        /// Also PPT-test the internal-charge marginal across the cut.
        #[arg(long)]
        marginal: bool,
    },
    /// Projective spin measurement on one register.
    Measure {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        register: usize,
        #[arg(long, value_enum, default_value = "spin-z")]
        observable: Observable,
        /// Draw a single outcome using the seed.
        #[arg(long)]
        sample: bool,
        /// Directory for post-measurement state files.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Apply charge conjugation.
    Conjugate {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Apply a U(1) gauge transformation on one gauged component.
    Gauge {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, allow_hyphen_values = true)]
        theta: f64,
        #[arg(long)]
        component: String,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
    detail: Value,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into(), detail: Value::Null }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match &e {
            Error::Superselection(v) => Self {
                code: EXIT_VIOLATION,
                message: e.to_string(),
                detail: json!({ "sectors": sector_weights(&v.sectors) }),
            },
            _ => Self::usage(e.to_string()),
        }
    }
}

fn sector_weights(sectors: &[(SectorIndex, f64)]) -> Value {
    sectors.iter().map(|(q, w)| json!({ "sector": q, "weight": w })).collect()
}

/// What a command hands back: the machine results and the summary lines.
struct Outcome {
    results: Value,
    summary: Vec<String>,
    code: i32,
}

impl Outcome {
    fn ok(results: Value, summary: Vec<String>) -> Self {
        Self { results, summary, code: EXIT_OK }
    }
}

struct Style {
    color: bool,
}

impl Style {
    fn paint(&self, code: &str, text: &str) -> String {
        if self.color {
            format!("\x1b[{code}m{text}\x1b[0m")
        } else {
            text.to_string()
        }
    }
}

/// Runs the CLI with color decided by the environment: ANSI styling only
/// when stdout is a terminal and `SUPERSELECT_NO_COLOR` is unset.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let color = std::env::var_os("SUPERSELECT_NO_COLOR").is_none() && std::io::stdout().is_terminal();
    run_with(args, out, err, color)
}

pub fn run_with<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write, color: bool) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind::*;
            let informational = matches!(e.kind(), DisplayHelp | DisplayVersion);
            let sink: &mut dyn Write = if informational { out } else { err };
            let _ = write!(sink, "{e}");
            return if informational { EXIT_OK } else { EXIT_USAGE };
        }
    };
    let style = Style { color: color && !cli.json };
    let command = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    let mut report = RunReport::new(command, cli.seed);

    let outcome = execute(&cli, &mut report.inputs);
    let (code, summary) = match outcome {
        Ok(o) => {
            report.results = o.results;
            (o.code, o.summary)
        }
        Err(f) => {
            report.results = json!({ "error": f.message, "detail": f.detail });
            let _ = writeln!(err, "{} {}", style.paint("31", "error:"), f.message);
            (f.code, Vec::new())
        }
    };
    report.exit_code = code;
    report.status = match code {
        EXIT_OK => "ok",
        EXIT_VIOLATION => "violation",
        _ => "error",
    };

    let text = report.to_json();
    if let Some(path) = &cli.report {
        if let Err(e) = std::fs::write(path, format!("{text}\n")) {
            let _ = writeln!(err, "error: cannot write report {}: {e}", path.display());
            return EXIT_USAGE;
        }
    }
    if cli.json {
        let _ = writeln!(out, "{text}");
    } else {
        for line in summary {
            let line = match line.split_once(": ") {
                Some((key, rest)) => format!("{}: {rest}", style.paint("1", key)),
                None => line,
            };
            let _ = writeln!(out, "{line}");
        }
        if code == EXIT_VIOLATION && report.results.get("sectors").is_some() {
            let _ = writeln!(out, "{}", style.paint("31", "rejected: superselection violation"));
        }
    }
    code
}

fn execute(cli: &Cli, inputs: &mut Vec<InputDigest>) -> Result<Outcome, Failure> {
    match &cli.command {
        Command::Demo { scenario, alpha, beta, out, registry_out } => {
            demo(scenario, alpha.as_deref(), beta.as_deref(), out.as_deref(), registry_out.as_deref())
        }
        Command::Validate { inputs: i } => {
            let (registry, state) = load_inputs(i, inputs)?;
            validate(&registry, &state)
        }
        Command::Basis { registry, registers, charge, allowed, strict, out } => {
            let registry = load_registry(registry, inputs)?;
            basis(&registry, *registers, charge, allowed.as_deref(), *strict, cli.seed, out.as_deref())
        }
        Command::Entangle { inputs: i, cut, marginal } => {
            let (registry, state) = load_inputs(i, inputs)?;
            entangle(&registry, &state, cut.as_deref(), *marginal)
        }
        Command::Measure { inputs: i, register, observable, sample, out } => {
            let (registry, state) = load_inputs(i, inputs)?;
            let sample = sample.then_some(cli.seed);
            measure(&registry, &state, *register, *observable, sample, out.as_deref())
        }
        Command::Conjugate { inputs: i, out } => {
            let (registry, state) = load_inputs(i, inputs)?;
            let image = charge_conjugate(&registry, &state)?;
            transformed(&registry, &state, image, out.as_deref(), "conjugate")
        }
        Command::Gauge { inputs: i, theta, component, out } => {
            let (registry, state) = load_inputs(i, inputs)?;
            let image = apply_u1_gauge(&registry, &state, component, *theta)?;
            transformed(&registry, &state, image, out.as_deref(), "gauge")
        }
    }
}

fn read_file(path: &Path, role: &str, inputs: &mut Vec<InputDigest>) -> Result<String, Failure> {
    let bytes =
        std::fs::read(path).map_err(|e| Failure::usage(format!("cannot read {role} {}: {e}", path.display())))?;
    inputs.push(InputDigest::of_bytes(role, &path.display().to_string(), &bytes));
    String::from_utf8(bytes).map_err(|_| Failure::usage(format!("{role} {} is not UTF-8", path.display())))
}

pub fn builtin_registry(name: &str) -> Option<SpeciesRegistry> {
    Some(match name {
        "electron_positron" => registries::electron_positron(1),
        "electron_positron_spin" => registries::electron_positron(2),
        "qed" => registries::qed(1),
        "qed_spin" => registries::qed(2),
        "neutral_kaons" => registries::neutral_kaons(),
        "color_toy" => registries::color_toy(),
        _ => return None,
    })
}

fn load_registry(source: &str, inputs: &mut Vec<InputDigest>) -> Result<SpeciesRegistry, Failure> {
    if let Some(name) = source.strip_prefix("builtin:") {
        let registry = builtin_registry(name).ok_or_else(|| {
            Failure::usage(format!(
                "unknown builtin registry `{name}` (expected one of {})",
                BUILTIN_REGISTRIES.join(", ")
            ))
        })?;
        inputs.push(InputDigest::of_bytes("registry", source, registry.to_json().as_bytes()));
        return Ok(registry);
    }
    let path = Path::new(source);
    let text = read_file(path, "registry", inputs)?;
    SpeciesRegistry::from_json(&text).map_err(|e| Failure::usage(format!("registry {}: {e}", path.display())))
}

fn load_inputs(i: &Inputs, inputs: &mut Vec<InputDigest>) -> Result<(SpeciesRegistry, StateVector<f64>), Failure> {
    let registry = load_registry(&i.registry, inputs)?;
    let text = read_file(&i.state, "state", inputs)?;
    let state = StateVector::from_json(&text, i.normalize)
        .map_err(|e| Failure::usage(format!("state {}: {e}", i.state.display())))?;
    state.check_labels(&registry).map_err(|e| Failure::usage(format!("state {}: {e}", i.state.display())))?;
    Ok((registry, state))
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Failure::usage(format!("cannot create {}: {e}", dir.display())))?;
    }
    std::fs::write(path, format!("{text}\n"))
        .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, Failure> {
    text.split(',')
        .map(|part| part.trim().parse().map_err(|_| Failure::usage(format!("invalid {what} `{part}` in `{text}`"))))
        .collect()
}

fn parse_amplitude(text: Option<&str>, name: &str) -> Result<Option<Complex<f64>>, Failure> {
    let Some(text) = text else { return Ok(None) };
    let parts: Vec<f64> = parse_list(text, name)?;
    match parts[..] {
        [re] => Ok(Some(Complex::new(re, 0.0))),
        [re, im] => Ok(Some(Complex::new(re, im))),
        _ => Err(Failure::usage(format!("--{name} expects `re` or `re,im`, got `{text}`"))),
    }
}

fn demo(
    name: &str,
    alpha: Option<&str>,
    beta: Option<&str>,
    out: Option<&Path>,
    registry_out: Option<&Path>,
) -> Result<Outcome, Failure> {
    let h = Complex::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let alpha = parse_amplitude(alpha, "alpha")?.unwrap_or(h);
    let beta = parse_amplitude(beta, "beta")?.unwrap_or(h);
    let id = superselect_core::ScenarioId::parse_with(name, alpha, beta)?;
    let scenario = build_scenario::<f64>(id)?;
    let check = check_expectations(&scenario)?;
    if let Some(path) = out {
        write_text(path, &scenario.state.to_json())?;
    }
    if let Some(path) = registry_out {
        write_text(path, &scenario.registry.to_json())?;
    }

    let mut summary = vec![format!("scenario: {}", id.name()), format!("state: {}", describe(&scenario.state))];
    let o = &check.observed;
    match &o.sector {
        Some(q) => summary.push(format!("sector: Q={q}")),
        None => summary.push(format!("sectors: {}", weights_text(&o.violation_sectors))),
    }
    if let Some(e) = o.entangled {
        summary.push(format!("entangled: {e}"));
    }
    if let Some(h) = o.entropy {
        summary.push(format!("entropy: {h} nats"));
    }
    if let Some(sv) = &o.schmidt_values {
        summary.push(format!("schmidt values: {sv:?}"));
    }
    for flag in &scenario.expected.flags {
        summary.push(format!("note: {flag}"));
    }
    summary.push(format!("expectations: {}", if check.passed() { "verified" } else { "MISMATCH" }));
    summary.extend(check.mismatches.iter().map(|m| format!("mismatch: {m}")));

    let code = if check.passed() { EXIT_OK } else { EXIT_USAGE };
    let results = json!({
        "scenario": id.name(),
        "state": scenario.state,
        "check": check,
        "passed": check.passed(),
    });
    Ok(Outcome { results, summary, code })
}

fn describe(s: &StateVector<f64>) -> String {
    s.iter().map(|(b, a)| format!("({}{:+}i){b}", a.re, a.im)).collect::<Vec<_>>().join(" + ")
}

fn weights_text(sectors: &[(SectorIndex, f64)]) -> String {
    sectors.iter().map(|(q, w)| format!("Q={q} weight {w}")).collect::<Vec<_>>().join(", ")
}

fn validate(registry: &SpeciesRegistry, state: &StateVector<f64>) -> Result<Outcome, Failure> {
    let norm = state.norm();
    match validate_superselection(registry, state) {
        Ok(q) => Ok(Outcome::ok(
            json!({ "accepted": true, "sector": q, "norm": norm, "normalized": state.is_normalized() }),
            vec![format!("accepted: sector Q={q}"), format!("norm: {norm}")],
        )),
        Err(Error::Superselection(v)) => {
            let decomposition = sector_decompose(registry, state)?;
            let total = decomposition.total_weight();
            Ok(Outcome {
                results: json!({
                    "accepted": false,
                    "sectors": sector_weights(&v.sectors),
                    "total_weight": total,
                    "norm": norm,
                }),
                summary: vec![format!("sectors: {}", weights_text(&v.sectors))],
                code: EXIT_VIOLATION,
            })
        }
        Err(e) => Err(e.into()),
    }
}

fn basis(
    registry: &SpeciesRegistry,
    n: usize,
    charge: &str,
    allowed: Option<&str>,
    strict: bool,
    seed: u64,
    out: Option<&Path>,
) -> Result<Outcome, Failure> {
    let sector = SectorIndex::new(parse_list(charge, "charge")?);
    let allowed: Option<Vec<String>> = allowed.map(|a| a.split(',').map(|s| s.trim().to_string()).collect());
    let allowed_refs: Option<Vec<&str>> = allowed.as_ref().map(|a| a.iter().map(String::as_str).collect());
    let config = BuilderConfig { rng_seed: seed, strict, ..BuilderConfig::default() };
    let basis = build_packaged_entangled_basis(registry, n, &sector, allowed_refs.as_deref(), &config)?;
    let verification = verify_basis(&basis, registry)?;

    let files: Vec<String> = (0..basis.vectors.len()).map(|i| format!("vector_{i:03}.json")).collect();
    let diagnostics = json!({
        "sector": basis.sector,
        "registers": basis.registers,
        "allowed": basis.allowed,
        "seed": seed,
        "dimension": basis.vectors.len(),
        "degenerate": basis.degenerate,
        "separable": basis.separable,
        "ortho_tolerance": basis.ortho_tolerance,
        "verification": verification,
        "repairs": basis.diagnostics,
        "files": files,
    });
    if let Some(dir) = out {
        for (name, v) in files.iter().zip(&basis.vectors) {
            write_text(&dir.join(name), &v.to_json())?;
        }
        write_text(&dir.join("diagnostics.json"), &serde_json::to_string_pretty(&diagnostics).expect("json"))?;
    }

    let entangled = verification.entangled.iter().filter(|&&e| e).count();
    let mut summary = vec![
        format!("sector: Q={} on {n} registers", basis.sector),
        format!("dimension: {}", basis.vectors.len()),
        format!("entangled: {entangled}/{}", basis.vectors.len()),
        format!("gram deviation: {:e}", verification.max_gram_deviation),
        format!("span deviation: {:e}", verification.span_deviation),
    ];
    if basis.degenerate {
        summary.push(format!("degenerate: separable vectors {:?}", basis.separable));
    }
    if let Some(dir) = out {
        summary.push(format!("written: {} files to {}", files.len() + 1, dir.display()));
    }
    let code = if verification.is_clean() { EXIT_OK } else { EXIT_USAGE };
    if code != EXIT_OK {
        summary.push(format!("findings: {:?}", verification.findings));
    }
    let vectors: Vec<&StateVector<f64>> = basis.vectors.iter().collect();
    Ok(Outcome { results: json!({ "diagnostics": diagnostics, "vectors": vectors }), summary, code })
}

fn parse_cut(n: usize, text: &str) -> Result<Bipartition, Failure> {
    Ok(Bipartition::new(n, parse_list::<usize>(text, "register")?)?)
}

fn entangle(
    registry: &SpeciesRegistry,
    state: &StateVector<f64>,
    cut: Option<&str>,
    marginal: bool,
) -> Result<Outcome, Failure> {
    let report = is_packaged_entangled(registry, state)?;
    let mut summary = vec![format!("registers: {}", report.registers)];
    if let Some(q) = &report.sector {
        summary.push(format!("sector: Q={q}"));
    }
    let mut results = json!({ "report": report });
    let chosen = match cut {
        Some(text) => Some(parse_cut(state.registers(), text)?),
        None if marginal && state.registers() > 1 => Some(Bipartition::new(state.registers(), [0])?),
        None => None,
    };
    if !report.defined {
        summary.push("entangled: undefined for a single register".into());
    } else if let (Some(c), Some(_)) = (&chosen, cut) {
        let sr = schmidt(state, c)?;
        let h = entanglement_entropy(state, c)?;
        summary.push(format!("cut: {c}"));
        summary.push(format!("schmidt values: {:?}", sr.singular_values));
        summary.push(format!("schmidt rank: {}", sr.rank));
        summary.push(format!("entropy: {h} nats"));
        results["cut"] = json!({ "cut": c, "schmidt": sr, "entropy": h, "entangled": sr.rank > 1 });
    } else {
        for c in &report.cuts {
            summary.push(format!("cut {}: rank {} entropy {}", c.cut, c.rank, c.entropy));
        }
    }
    if report.defined {
        summary.push(format!("packaged entangled: {}", report.packaged_entangled));
    }
    if marginal {
        let rho = internal_charge_marginal(registry, state)?;
        let c = chosen.ok_or_else(|| Failure::usage("--marginal needs at least two registers"))?;
        let ppt = ppt_check(&rho, &c)?;
        summary.push(format!(
            "charge marginal: {:?} (min partial-transpose eigenvalue {}, conclusive {})",
            ppt.verdict, ppt.min_eigenvalue, ppt.conclusive
        ));
        results["marginal"] = json!({ "density_matrix": rho, "ppt": ppt, "cut": c });
    }
    Ok(Outcome::ok(results, summary))
}

fn measure(
    registry: &SpeciesRegistry,
    state: &StateVector<f64>,
    register: usize,
    observable: Observable,
    sample: Option<u64>,
    out: Option<&Path>,
) -> Result<Outcome, Failure> {
    let obs = match observable {
        Observable::SpinZ => SpinObservable::spin_z(registry, register),
        Observable::SpinX => SpinObservable::spin_x(registry, register),
    };
    let name = match observable {
        Observable::SpinZ => "spin-z",
        Observable::SpinX => "spin-x",
    };
    let records = match sample {
        Some(seed) => vec![sample_measurement(registry, state, &obs, seed)?],
        None => measure_spin(registry, state, &obs)?,
    };
    let sector = validate_superselection(registry, state)?;
    let mut summary = vec![format!("observable: {name} on register {register}"), format!("sector: Q={sector}")];
    let mut entries = Vec::new();
    for r in &records {
        let post_sector = validate_superselection(registry, &r.post_state)?;
        let mut entry = json!({ "outcome": r.outcome, "probability": r.probability, "post_sector": post_sector });
        match out {
            Some(dir) => {
                let file = format!("post_{name}_r{register}_o{}.json", r.outcome);
                write_text(&dir.join(&file), &r.post_state.to_json())?;
                entry["post_state_file"] = json!(file);
            }
            None => entry["post_state"] = json!(r.post_state),
        }
        entries.push(entry);
        summary.push(format!("outcome {}: p = {} -> {}", r.outcome, r.probability, describe(&r.post_state)));
    }
    let results = json!({
        "observable": name,
        "register": register,
        "sector": sector,
        "sampled": sample.is_some(),
        "records": entries,
    });
    Ok(Outcome::ok(results, summary))
}

fn transformed(
    registry: &SpeciesRegistry,
    before: &StateVector<f64>,
    image: StateVector<f64>,
    out: Option<&Path>,
    what: &str,
) -> Result<Outcome, Failure> {
    let sector_of = |s: &StateVector<f64>| validate_superselection(registry, s).ok();
    if let Some(path) = out {
        write_text(path, &image.to_json())?;
    }
    let (a, b) = (sector_of(before), sector_of(&image));
    let show = |q: &Option<SectorIndex>| q.as_ref().map_or("mixed".to_string(), |q| format!("Q={q}"));
    let summary = vec![format!("{what}: {}", describe(&image)), format!("sector: {} -> {}", show(&a), show(&b))];
    Ok(Outcome::ok(json!({ "sector_before": a, "sector_after": b, "state": image }), summary))
}
