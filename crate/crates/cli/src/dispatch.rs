//! Command table and exit-code policy.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use gup_core::magnus::QuadraturePlan;
use gup_core::oracle::{
    check_commutator_identities, check_dropped_terms_quadratic, check_nested_commutator, check_nested_commutator_odd,
    coincidence_weight_oracle, dirac_cumulative_phi, smoothed_pulse_limit, CoincidencePattern, FockTruncation,
};
use gup_core::pulsed::{phi_chain, phi_single, quadratic_phase_pulsed, scan_lattice, ScanTemplate};
use gup_core::{ChainSpecF64, Error, Method};

use crate::config::RunConfig;
use crate::output::{Cell, Document, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;

/// Tolerance of the built-in cross-check between the Heaviside and
/// cumulative routes to the Dirac-train phase.
const ROUTE_TOL: f64 = 1e-9;

/// Nondimensional pulse times and couplings fed to the Fock-space checks.
const FOCK_TIMES: [f64; 5] = [2.3, 1.7, 1.1, 0.6, 0.2];
const FOCK_G: [f64; 5] = [0.9, 1.2, 0.7, 1.1, 0.8];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Modes,
    PhaseStandard,
    PhaseGupSingle,
    PhaseGupChain,
    Scan,
    OracleFock,
    OracleSmoothing,
    OracleCoincidence,
    OracleDroppedTerms,
}

impl Command {
    pub const ALL: [Command; 9] = [
        Command::Modes,
        Command::PhaseStandard,
        Command::PhaseGupSingle,
        Command::PhaseGupChain,
        Command::Scan,
        Command::OracleFock,
        Command::OracleSmoothing,
        Command::OracleCoincidence,
        Command::OracleDroppedTerms,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Modes => "modes",
            Command::PhaseStandard => "phase-standard",
            Command::PhaseGupSingle => "phase-gup-single",
            Command::PhaseGupChain => "phase-gup-chain",
            Command::Scan => "scan",
            Command::OracleFock => "oracle fock",
            Command::OracleSmoothing => "oracle smoothing",
            Command::OracleCoincidence => "oracle coincidence",
            Command::OracleDroppedTerms => "oracle dropped-terms",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = String;

    /// `oracle fock`, `oracle-fock` and `oracle:fock` are all accepted.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let words: Vec<&str> = s.split_whitespace().collect();
        let joined = words.join(" ");
        let norm = match joined.strip_prefix("oracle") {
            Some(rest) if !rest.is_empty() => {
                format!("oracle {}", rest.trim_start_matches([' ', '-', ':']))
            }
            _ => joined,
        };
        Command::ALL
            .into_iter()
            .find(|c| c.name() == norm)
            .ok_or_else(|| format!("unknown command `{s}`"))
    }
}

pub fn usage() -> String {
    let names: Vec<&str> = Command::ALL.iter().map(|c| c.name()).collect();
    format!(
        "usage: gup --config <path> --command <name> [--out <path>] [--format csv|jsonl]\ncommands: {}",
        names.join(", ")
    )
}

/// Rows written plus the exit code they imply.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub document: Document,
    pub exit_code: i32,
    /// Human-readable reason for a nonzero exit code.
    pub note: Option<String>,
}

/// A run that produced nothing worth writing.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub exit_code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            exit_code: exit_code_for(&e),
            message: e.to_string(),
        }
    }
}

pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::InvalidInput(_) | Error::IndexOutOfRange { .. } | Error::ScheduleMismatch(_) => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

fn config_failure(message: impl Into<String>) -> Failure {
    Failure {
        exit_code: EXIT_CONFIG,
        message: message.into(),
    }
}

/// Pass/fail rows of a built-in check.
struct Checks {
    table: Table,
    failed: Vec<String>,
}

impl Checks {
    fn new() -> Self {
        Self {
            table: Table::new("checks", &["check", "value", "lower", "upper", "pass"]),
            failed: Vec::new(),
        }
    }

    fn push(&mut self, name: &str, value: f64, lower: Option<f64>, upper: Option<f64>, pass: bool) {
        if !pass {
            self.failed.push(name.to_string());
        }
        self.table.push(vec![
            Cell::from(name),
            Cell::Real(value),
            Cell::from(lower),
            Cell::from(upper),
            Cell::Bool(pass),
        ]);
    }

    fn at_most(&mut self, name: &str, value: f64, upper: f64) {
        self.push(name, value, None, Some(upper), value <= upper);
    }

    fn within(&mut self, name: &str, value: f64, lower: f64, upper: f64) {
        self.push(name, value, Some(lower), Some(upper), (lower..=upper).contains(&value));
    }

    fn finish(self, metadata: Vec<(String, Cell)>, mut tables: Vec<Table>) -> Outcome {
        let (exit_code, note) = if self.failed.is_empty() {
            (EXIT_OK, None)
        } else {
            (
                EXIT_INVARIANT,
                Some(format!("failed checks: {}", self.failed.join(", "))),
            )
        };
        tables.push(self.table);
        Outcome {
            document: Document { metadata, tables },
            exit_code,
            note,
        }
    }
}

fn ok(metadata: Vec<(String, Cell)>, tables: Vec<Table>) -> Outcome {
    Outcome {
        document: Document { metadata, tables },
        exit_code: EXIT_OK,
        note: None,
    }
}

fn relative(a: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        (a - reference).abs()
    } else {
        (a - reference).abs() / reference.abs()
    }
}

fn chain(config: &RunConfig, n: usize) -> gup_core::Result<ChainSpecF64> {
    ChainSpecF64::new(n, config.mass_kg, config.omega(), config.omega_c())
}

pub fn dispatch(command: Command, config: &RunConfig) -> Result<Outcome, Failure> {
    let mut metadata = vec![("command".to_string(), Cell::from(command.name()))];
    metadata.extend(config.echo());
    match command {
        Command::Modes => modes(config, metadata),
        Command::PhaseStandard => phase_standard(config, metadata),
        Command::PhaseGupSingle => phase_gup_single(config, metadata),
        Command::PhaseGupChain => phase_gup_chain(config, metadata),
        Command::Scan => scan(config, metadata),
        Command::OracleFock => oracle_fock(config, metadata),
        Command::OracleSmoothing => oracle_smoothing(config, metadata),
        Command::OracleCoincidence => oracle_coincidence(config, metadata),
        Command::OracleDroppedTerms => oracle_dropped_terms(config, metadata),
    }
}

fn modes(config: &RunConfig, metadata: Vec<(String, Cell)>) -> Result<Outcome, Failure> {
    let n = config.n_sites;
    let spec = chain(config, n)?;
    let modes = spec.normal_modes()?;
    let mut header = vec!["mode".to_string(), "frequency_rad_s".into(), "frequency_hz".into()];
    header.extend((0..n).map(|i| format!("p_{i}")));
    let mut table = Table {
        name: "modes".into(),
        header,
        rows: Vec::new(),
    };
    let p = modes.p_matrix();
    for (k, &w) in modes.frequencies().iter().enumerate() {
        let mut row = vec![Cell::from(k), Cell::Real(w), Cell::Real(w / TAU)];
        row.extend((0..n).map(|i| Cell::Real(p[(i, k)])));
        table.push(row);
    }
    let mut checks = Checks::new();
    checks.at_most("orthogonality_defect", modes.orthogonality_defect(), 1e-10);
    checks.at_most("canonical_defect", modes.canonical_defect(), 1e-10);
    Ok(checks.finish(metadata, vec![table]))
}

fn phase_standard(config: &RunConfig, metadata: Vec<(String, Cell)>) -> Result<Outcome, Failure> {
    let n = config.n_sites;
    let spec = chain(config, n)?;
    let modes = spec.normal_modes()?;
    let sched = config.schedule(n)?;
    let f = quadratic_phase_pulsed(&spec, &modes, &sched)?;
    let lambda = sched.strength();
    let mut table = Table::new(
        "phase",
        &[
            "n_sites",
            "eval_time_s",
            "method",
            "pulse_strength",
            "f",
            "f_over_strength_sq",
        ],
    );
    table.push(vec![
        Cell::from(n),
        Cell::Real(sched.eval_time()),
        Cell::from(Method::ClosedForm.as_str()),
        Cell::Real(lambda),
        Cell::Real(f),
        Cell::from((lambda != 0.0).then(|| f / (lambda * lambda))),
    ]);
    Ok(ok(metadata, vec![table]))
}

fn route_check(checks: &mut Checks, config: &RunConfig, n: usize, phi: f64) -> Result<(), Failure> {
    let spec = chain(config, n)?;
    let modes = spec.normal_modes()?;
    let sched = config.schedule(n)?;
    let alt = dirac_cumulative_phi(&spec, &modes, &sched, 24)?;
    checks.at_most("cumulative_route_relative_deviation", relative(phi, alt), ROUTE_TOL);
    Ok(())
}

fn phase_gup_single(config: &RunConfig, metadata: Vec<(String, Cell)>) -> Result<Outcome, Failure> {
    if config.n_sites != 1 {
        return Err(config_failure(format!(
            "phase-gup-single needs n_sites = 1, got {}; use phase-gup-chain",
            config.n_sites
        )));
    }
    let omega = config.omega();
    let sched = config.schedule(1)?;
    let times: Vec<f64> = sched.pulses().into_iter().map(|p| p.2).collect();
    let times: [f64; 4] = times.try_into().expect("four pulses per site");
    let phi = phi_single(omega, times, sched.eval_time())?;
    let f = gup_core::pulsed::quadratic_phase_delta(omega, &times, sched.strength());
    let mut table = Table::new(
        "phase",
        &["omega_rad_s", "eval_time_s", "method", "phi_s", "phi_times_omega", "f"],
    );
    table.push(vec![
        Cell::Real(omega),
        Cell::Real(sched.eval_time()),
        Cell::from(Method::ClosedForm.as_str()),
        Cell::Real(phi),
        Cell::Real(phi * omega),
        Cell::Real(f),
    ]);
    let mut checks = Checks::new();
    route_check(&mut checks, config, 1, phi)?;
    Ok(checks.finish(metadata, vec![table]))
}

fn phase_gup_chain(config: &RunConfig, metadata: Vec<(String, Cell)>) -> Result<Outcome, Failure> {
    let n = config.n_sites;
    let spec = chain(config, n)?;
    let modes = spec.normal_modes()?;
    let sched = config.schedule(n)?;
    let r = phi_chain(&spec, &modes, &sched)?;
    let phi = r.quartic_coefficient;
    let mut table = Table::new(
        "phase",
        &[
            "n_sites",
            "omega_c_hz",
            "eval_time_s",
            "method",
            "phi_s",
            "phi_times_omega",
            "f",
        ],
    );
    table.push(vec![
        Cell::from(n),
        Cell::Real(config.coupling_freq_hz),
        Cell::Real(r.evaluation_time),
        Cell::from(r.method.as_str()),
        Cell::Real(phi),
        Cell::Real(phi * config.omega()),
        Cell::from(r.quadratic_coefficient),
    ]);
    let mut checks = Checks::new();
    route_check(&mut checks, config, n, phi)?;
    Ok(checks.finish(metadata, vec![table]))
}

fn scan(config: &RunConfig, metadata: Vec<(String, Cell)>) -> Result<Outcome, Failure> {
    if config.period_s.is_some() || config.site_delay_s.is_some() || config.eval_time_s.is_some() {
        return Err(config_failure(
            "scan always uses quarter-period spacing with tau = T/(2N); remove period_s, site_delay_s and eval_time_s",
        ));
    }
    let template = ScanTemplate {
        mass: config.mass_kg,
        trap_freq: config.omega(),
        t0: config.t0_s,
        strength: config.pulse_strength,
    };
    let list: Vec<f64> = config.scan.omega_c_hz_list.iter().map(|&f| TAU * f).collect();
    let result = scan_lattice(&template, config.scan.n_min..=config.scan.n_max, &list)?;

    let mut rows = Table::new("scan", &["n", "omega_c_hz", "phi_s", "abs_phi_s", "n_times_phi1_s"]);
    let mut failures = Vec::new();
    for r in &result.rows {
        let hz = r.omega_c / TAU;
        if let Some(e) = &r.failure {
            failures.push(format!("N = {}, omega_c_hz = {hz}: {e}", r.n));
        }
        rows.push(vec![
            Cell::from(r.n),
            Cell::Real(hz),
            Cell::from(r.phi),
            Cell::from(r.abs_phi()),
            Cell::Real(r.n_times_abs_phi1),
        ]);
    }
    let mut fits = Table::new("fit", &["omega_c_hz", "slope", "residual"]);
    for f in &result.fits {
        fits.push(vec![
            Cell::Real(f.omega_c / TAU),
            Cell::from(f.slope),
            Cell::from(f.residual),
        ]);
    }
    let mut out = ok(metadata, vec![rows, fits]);
    if !failures.is_empty() {
        out.exit_code = EXIT_NUMERICAL;
        out.note = Some(failures.join("; "));
    }
    Ok(out)
}

fn fock_truncation(config: &RunConfig) -> Result<FockTruncation, Failure> {
    Ok(FockTruncation::new(
        config.oracle.fock_dimension,
        config.oracle.fock_inner_block,
    )?)
}

fn ratio_checks(checks: &mut Checks, config: &RunConfig, trunc: &FockTruncation) -> Result<Table, Failure> {
    let beta = config.oracle.beta;
    let r = check_dropped_terms_quadratic(trunc, 1.0, FOCK_TIMES, FOCK_G, beta)?;
    let mut terms = Table::new(
        "terms",
        &["beta", "dropped_norm", "kept_norm", "dropped_ratio", "kept_ratio"],
    );
    terms.push(vec![
        Cell::Real(beta),
        Cell::Real(r.dropped_at_beta),
        Cell::Real(r.kept_at_beta),
        Cell::Real(r.dropped),
        Cell::Real(r.kept),
    ]);
    checks.within("dropped_term_doubling_ratio", r.dropped, 3.8, 4.2);
    checks.within("kept_term_doubling_ratio", r.kept, 1.9, 2.1);
    Ok(terms)
}

fn oracle_fock(config: &RunConfig, metadata: Vec<(String, Cell)>) -> Result<Outcome, Failure> {
    let trunc = fock_truncation(config)?;
    let beta = config.oracle.beta;
    let mut checks = Checks::new();
    for n in 1..=4u32 {
        let dev = check_commutator_identities(&trunc, 1.0, 0.3, 1.9, n)?;
        checks.at_most(&format!("commutator_identity_n{n}"), dev, 1e-10);
    }
    let nested = check_nested_commutator(&trunc, 1.0, FOCK_TIMES, FOCK_G, beta);
    checks.at_most("nested_commutator_relative_deviation", nested, 1e-4);
    let odd = check_nested_commutator_odd(&trunc, 1.0, FOCK_TIMES, FOCK_G, beta);
    checks.at_most("nested_commutator_odd_part_relative_deviation", odd, 1e-4);
    let terms = ratio_checks(&mut checks, config, &trunc)?;
    Ok(checks.finish(metadata, vec![terms]))
}

fn oracle_dropped_terms(config: &RunConfig, metadata: Vec<(String, Cell)>) -> Result<Outcome, Failure> {
    let trunc = fock_truncation(config)?;
    let mut checks = Checks::new();
    let terms = ratio_checks(&mut checks, config, &trunc)?;
    Ok(checks.finish(metadata, vec![terms]))
}

fn oracle_coincidence(config: &RunConfig, metadata: Vec<(String, Cell)>) -> Result<Outcome, Failure> {
    let patterns: Vec<(&str, CoincidencePattern<f64>)> = vec![
        ("pair", CoincidencePattern::tie(2)?),
        ("triple", CoincidencePattern::tie(3)?),
        ("quadruple", CoincidencePattern::tie(4)?),
        ("pair_at_eval_time", CoincidencePattern::new(Some(1.0), vec![1.0, 0.0])?),
        ("strict", CoincidencePattern::new(None, vec![3.0, 2.0, 1.0])?),
        ("violated", CoincidencePattern::new(None, vec![1.0, 2.0])?),
    ];
    let samples = config.oracle.samples;
    let mut table = Table::new(
        "coincidence",
        &["pattern", "samples", "seed", "fraction", "rule", "abs_error"],
    );
    let mut checks = Checks::new();
    for (k, (name, p)) in patterns.iter().enumerate() {
        let seed = config.oracle.seed.wrapping_add(k as u64);
        let e = coincidence_weight_oracle(p, samples, seed)?;
        let err = (e.fraction - e.rule).abs();
        table.push(vec![
            Cell::from(*name),
            Cell::from(samples),
            Cell::Int(seed as i64),
            Cell::Real(e.fraction),
            Cell::Real(e.rule),
            Cell::Real(err),
        ]);
        checks.at_most(&format!("{name}_fraction_abs_error"), err, 0.01);
    }
    Ok(checks.finish(metadata, vec![table]))
}

fn oracle_smoothing(config: &RunConfig, metadata: Vec<(String, Cell)>) -> Result<Outcome, Failure> {
    let n = config.n_sites;
    let spec = chain(config, n)?;
    let modes = spec.normal_modes()?;
    let sched = config.schedule(n)?;
    let reference = phi_chain(&spec, &modes, &sched)?;
    let period = sched.period();
    let r = config.quadrature.sigma_over_t;
    let ratios = [4.0 * r, 2.0 * r, r];
    let sigmas: Vec<f64> = ratios.iter().map(|x| x * period).collect();
    let plan = QuadraturePlan::with_order(config.quadrature.order)?;
    let report = smoothed_pulse_limit(reference.quartic_coefficient, &spec, &modes, &sched, &sigmas, &plan)?;

    let mut table = Table::new(
        "smoothing",
        &["sigma_s", "sigma_over_T", "phi_s", "abs_error_s", "relative_error", "f"],
    );
    for k in 0..sigmas.len() {
        table.push(vec![
            Cell::Real(sigmas[k]),
            Cell::Real(ratios[k]),
            Cell::Real(report.values[k]),
            Cell::Real(report.errors[k]),
            Cell::Real(report.relative_errors[k]),
            Cell::from(report.quadratic_values.as_ref().map(|q| q[k])),
        ]);
    }
    let mut checks = Checks::new();
    let worst = report
        .errors
        .windows(2)
        .map(|w| if w[0] == 0.0 { 0.0 } else { w[1] / w[0] })
        .fold(0.0f64, f64::max);
    checks.push("error_ratio_max", worst, None, Some(1.0), report.strictly_decreasing);
    let last = *report.relative_errors.last().expect("three widths");
    checks.at_most("final_relative_error", last, 1e-2);
    if let Some(x) = report.extrapolated {
        checks.at_most("extrapolated_relative_error", relative(x, report.reference), 1e-3);
    }
    if let (Some(q), Some(qr)) = (&report.quadratic_values, report.quadratic_reference) {
        let last = *q.last().expect("three widths");
        checks.at_most("final_f_relative_error", relative(last, qr), 1e-3);
    }
    Ok(checks.finish(metadata, vec![table]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn command_names_round_trip() {
        for c in Command::ALL {
            assert_eq!(c.name().parse::<Command>().unwrap(), c);
        }
        assert_eq!("oracle-fock".parse::<Command>().unwrap(), Command::OracleFock);
        assert_eq!(
            "  oracle   dropped-terms ".parse::<Command>().unwrap(),
            Command::OracleDroppedTerms
        );
        assert!("oracle".parse::<Command>().is_err());
        assert!("phase".parse::<Command>().is_err());
    }

    #[test]
    fn error_mapping() {
        assert_eq!(exit_code_for(&Error::InvalidInput("x".into())), EXIT_CONFIG);
        assert_eq!(
            exit_code_for(&Error::UnstableChain { min: 0.0, max: 1.0 }),
            EXIT_NUMERICAL
        );
        assert_eq!(exit_code_for(&Error::NumericalFailure("x".into())), EXIT_NUMERICAL);
    }

    #[test]
    fn single_closed_form_row() {
        let c = parse_config("n_sites = 1\ntrap_freq_hz = 1e5\n").unwrap();
        let out = dispatch(Command::PhaseGupSingle, &c).unwrap();
        assert_eq!(out.exit_code, EXIT_OK, "{:?}", out.note);
        let t = &out.document.tables[0];
        let col = t.column("phi_times_omega").unwrap();
        let Cell::Real(x) = t.rows[0][col] else { panic!() };
        let closed = 5.0 * (9.0 * std::f64::consts::PI - 16.0) / 32.0;
        assert!((x - closed).abs() < 1e-10 * closed);
    }

    #[test]
    fn single_rejects_chains() {
        let c = parse_config("n_sites = 2\ntrap_freq_hz = 1e5\n").unwrap();
        assert_eq!(
            dispatch(Command::PhaseGupSingle, &c).unwrap_err().exit_code,
            EXIT_CONFIG
        );
    }

    #[test]
    fn scan_rejects_custom_spacing() {
        let c = parse_config("n_sites = 2\ntrap_freq_hz = 1e5\nperiod_s = 1e-5\n").unwrap();
        assert_eq!(dispatch(Command::Scan, &c).unwrap_err().exit_code, EXIT_CONFIG);
    }
}
