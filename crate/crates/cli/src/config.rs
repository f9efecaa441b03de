//! Flat `key = value` run configuration.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use gup_core::oracle::coincidence::DEFAULT_SEED;
use gup_core::PulseScheduleF64;

use crate::output::Cell;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            message: message.into(),
        }
    }

    fn general(message: impl Into<String>) -> Self {
        Self {
            line: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Jsonl,
}

impl Format {
    pub fn as_str(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Jsonl => "jsonl",
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "jsonl" => Ok(Format::Jsonl),
            other => Err(format!("unknown format `{other}` (expected csv or jsonl)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub n_min: usize,
    pub n_max: usize,
    pub omega_c_hz_list: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureConfig {
    pub order: usize,
    /// Smallest Gaussian width of the smoothing ladder, as a fraction of the period.
    pub sigma_over_t: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    pub beta: f64,
    pub fock_dimension: usize,
    pub fock_inner_block: usize,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    pub format: Format,
}

/// Parsed configuration. Optional timing fields stay `None` until resolved
/// against a site count by [`RunConfig::schedule`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n_sites: usize,
    pub mass_kg: f64,
    pub trap_freq_hz: f64,
    pub coupling_freq_hz: f64,
    pub pulse_strength: f64,
    pub t0_s: f64,
    pub period_s: Option<f64>,
    pub site_delay_s: Option<f64>,
    pub eval_time_s: Option<f64>,
    pub scan: ScanConfig,
    pub quadrature: QuadratureConfig,
    pub oracle: OracleConfig,
    pub output: OutputConfig,
}

pub const DEFAULT_MASS_KG: f64 = 1e-11;

const KEYS: &[&str] = &[
    "n_sites",
    "mass_kg",
    "trap_freq_hz",
    "coupling_freq_hz",
    "pulse_strength",
    "t0_s",
    "period_s",
    "site_delay_s",
    "eval_time_s",
    "scan.n_min",
    "scan.n_max",
    "scan.omega_c_hz_list",
    "quadrature.order",
    "quadrature.sigma_over_T",
    "oracle.beta",
    "oracle.fock_dimension",
    "oracle.fock_inner_block",
    "oracle.samples",
    "oracle.seed",
    "output.path",
    "output.format",
];

struct Entries<'a> {
    map: HashMap<&'a str, (usize, &'a str)>,
}

impl<'a> Entries<'a> {
    fn raw(&self, key: &str) -> Option<(usize, &'a str)> {
        self.map.get(key).copied()
    }

    fn parsed<V: FromStr>(&self, key: &str) -> Result<Option<(usize, V)>, ConfigError>
    where
        V::Err: fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse::<V>()
                .map(|x| Some((line, x)))
                .map_err(|e| ConfigError::at(line, format!("cannot parse `{v}` for `{key}`: {e}"))),
        }
    }

    fn count(&self, key: &str) -> Result<Option<(usize, usize)>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => {
                // accept `1e6` style counts as long as they are whole numbers
                if let Ok(n) = v.parse::<usize>() {
                    return Ok(Some((line, n)));
                }
                match v.parse::<f64>() {
                    Ok(x) if x.is_finite() && x >= 0.0 && x.fract() == 0.0 && x < 1e15 => Ok(Some((line, x as usize))),
                    _ => Err(ConfigError::at(
                        line,
                        format!("cannot parse `{v}` for `{key}` as a count"),
                    )),
                }
            }
        }
    }

    fn real(&self, key: &str) -> Result<Option<(usize, f64)>, ConfigError> {
        let r = self.parsed::<f64>(key)?;
        if let Some((line, x)) = r {
            if !x.is_finite() {
                return Err(ConfigError::at(line, format!("`{key}` must be finite, got {x}")));
            }
        }
        Ok(r)
    }
}

fn check(cond: bool, line: Option<usize>, message: String) -> Result<(), ConfigError> {
    if cond {
        Ok(())
    } else {
        Err(ConfigError { line, message })
    }
}

fn line_of(v: Option<(usize, impl Sized)>) -> Option<usize> {
    v.map(|(l, _)| l)
}

/// Parses and validates a configuration file.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut map = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (k, v) = content
            .split_once('=')
            .ok_or_else(|| ConfigError::at(line, format!("expected `key = value`, got `{content}`")))?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(ConfigError::at(line, format!("unknown key `{k}`")));
        }
        if v.is_empty() {
            return Err(ConfigError::at(line, format!("missing value for `{k}`")));
        }
        if let Some((first, _)) = map.insert(k, (line, v)) {
            return Err(ConfigError::at(
                line,
                format!("duplicate key `{k}` (first set on line {first})"),
            ));
        }
    }
    let e = Entries { map };

    let (n_line, n_sites) = e
        .count("n_sites")?
        .ok_or_else(|| ConfigError::general("missing required key `n_sites`"))?;
    check(n_sites >= 1, Some(n_line), "n_sites must be ≥ 1".into())?;
    let (f_line, trap_freq_hz) = e
        .real("trap_freq_hz")?
        .ok_or_else(|| ConfigError::general("missing required key `trap_freq_hz`"))?;
    check(
        trap_freq_hz > 0.0,
        Some(f_line),
        format!("trap_freq_hz must be > 0, got {trap_freq_hz}"),
    )?;

    let mass = e.real("mass_kg")?;
    let mass_kg = mass.map_or(DEFAULT_MASS_KG, |m| m.1);
    check(
        mass_kg > 0.0,
        line_of(mass),
        format!("mass_kg must be > 0, got {mass_kg}"),
    )?;

    let coupling = e.real("coupling_freq_hz")?;
    let coupling_freq_hz = coupling.map_or(0.0, |c| c.1);
    check(
        coupling_freq_hz >= 0.0,
        line_of(coupling),
        format!("coupling_freq_hz must be ≥ 0, got {coupling_freq_hz}"),
    )?;

    let strength = e.real("pulse_strength")?;
    let pulse_strength = strength.map_or(1.0, |s| s.1);
    check(
        pulse_strength >= 0.0,
        line_of(strength),
        format!("pulse_strength must be ≥ 0, got {pulse_strength}"),
    )?;

    let t0 = e.real("t0_s")?;
    let t0_s = t0.map_or(0.0, |t| t.1);
    check(t0_s >= 0.0, line_of(t0), format!("t0_s must be ≥ 0, got {t0_s}"))?;

    let period = e.real("period_s")?;
    if let Some((l, p)) = period {
        check(p > 0.0, Some(l), format!("period_s must be > 0, got {p}"))?;
    }
    let delay = e.real("site_delay_s")?;
    if let Some((l, d)) = delay {
        check(d >= 0.0, Some(l), format!("site_delay_s must be ≥ 0, got {d}"))?;
    }
    let eval = e.real("eval_time_s")?;

    let n_min = e.count("scan.n_min")?;
    let n_max = e.count("scan.n_max")?;
    let scan_n_min = n_min.map_or(1, |x| x.1);
    let scan_n_max = n_max.map_or(n_sites.max(scan_n_min), |x| x.1);
    check(scan_n_min >= 1, line_of(n_min), "scan.n_min must be ≥ 1".into())?;
    check(
        scan_n_max >= scan_n_min,
        line_of(n_max).or(line_of(n_min)),
        format!("scan.n_max ({scan_n_max}) must be ≥ scan.n_min ({scan_n_min})"),
    )?;
    let omega_c_hz_list = match e.raw("scan.omega_c_hz_list") {
        None => vec![coupling_freq_hz],
        Some((line, v)) => {
            let mut out = Vec::new();
            for item in v.split(',') {
                let item = item.trim();
                let x: f64 = item.parse().map_err(|err| {
                    ConfigError::at(line, format!("cannot parse `{item}` in scan.omega_c_hz_list: {err}"))
                })?;
                check(
                    x.is_finite() && x >= 0.0,
                    Some(line),
                    format!("coupling frequencies must be finite and ≥ 0, got {x}"),
                )?;
                out.push(x);
            }
            out
        }
    };

    let order = e.count("quadrature.order")?;
    let q_order = order.map_or(24, |x| x.1);
    check(
        q_order >= 4,
        line_of(order),
        format!("quadrature.order must be ≥ 4, got {q_order}"),
    )?;
    let sig = e.real("quadrature.sigma_over_T")?;
    let sigma_over_t = sig.map_or(1.0 / 200.0, |x| x.1);
    check(
        sigma_over_t > 0.0 && sigma_over_t <= 0.025,
        line_of(sig),
        format!("quadrature.sigma_over_T must be in (0, 0.025], got {sigma_over_t}"),
    )?;

    let beta = e.real("oracle.beta")?.map_or(1e-6, |x| x.1);
    let dim = e.count("oracle.fock_dimension")?;
    let fock_dimension = dim.map_or(40, |x| x.1);
    let block = e.count("oracle.fock_inner_block")?;
    let fock_inner_block = block.map_or(fock_dimension / 2, |x| x.1);
    check(
        fock_inner_block >= 2 && fock_inner_block <= fock_dimension,
        line_of(block).or(line_of(dim)),
        format!("oracle.fock_inner_block must be in 2..={fock_dimension}, got {fock_inner_block}"),
    )?;
    let samples = e.count("oracle.samples")?;
    let oracle_samples = samples.map_or(gup_core::oracle::coincidence::DEFAULT_SAMPLES, |x| x.1);
    check(
        oracle_samples >= 1,
        line_of(samples),
        "oracle.samples must be ≥ 1".into(),
    )?;
    let seed = e.parsed::<u64>("oracle.seed")?.map_or(DEFAULT_SEED, |x| x.1);

    let path = e.raw("output.path").map(|(_, v)| PathBuf::from(v));
    let format = match e.raw("output.format") {
        None => Format::Csv,
        Some((line, v)) => v.parse().map_err(|m: String| ConfigError::at(line, m))?,
    };

    Ok(RunConfig {
        n_sites,
        mass_kg,
        trap_freq_hz,
        coupling_freq_hz,
        pulse_strength,
        t0_s,
        period_s: period.map(|x| x.1),
        site_delay_s: delay.map(|x| x.1),
        eval_time_s: eval.map(|x| x.1),
        scan: ScanConfig {
            n_min: scan_n_min,
            n_max: scan_n_max,
            omega_c_hz_list,
        },
        quadrature: QuadratureConfig {
            order: q_order,
            sigma_over_t,
        },
        oracle: OracleConfig {
            beta,
            fock_dimension,
            fock_inner_block,
            samples: oracle_samples,
            seed,
        },
        output: OutputConfig { path, format },
    })
}

impl RunConfig {
    /// Trap frequency in rad/s.
    pub fn omega(&self) -> f64 {
        TAU * self.trap_freq_hz
    }

    pub fn omega_c(&self) -> f64 {
        TAU * self.coupling_freq_hz
    }

    pub fn period(&self) -> f64 {
        self.period_s.unwrap_or(PI / (2.0 * self.omega()))
    }

    pub fn site_delay(&self, n: usize) -> f64 {
        self.site_delay_s.unwrap_or(self.period() / (2.0 * n as f64))
    }

    /// Pulse schedule for `n` sites with every default resolved.
    pub fn schedule(&self, n: usize) -> gup_core::Result<PulseScheduleF64> {
        let period = self.period();
        let delay = self.site_delay(n);
        let eval = self
            .eval_time_s
            .unwrap_or_else(|| PulseScheduleF64::default_eval_time(n, self.t0_s, period, delay, self.omega()));
        PulseScheduleF64::new(n, self.t0_s, period, delay, self.pulse_strength, eval)
    }

    /// Every setting with defaults filled in, in a fixed order.
    pub fn echo(&self) -> Vec<(String, Cell)> {
        let n = self.n_sites;
        let eval = self.schedule(n).map(|s| s.eval_time()).ok();
        let list = self
            .scan
            .omega_c_hz_list
            .iter()
            .map(|&x| crate::output::fmt_real(x))
            .collect::<Vec<_>>()
            .join(";");
        let mut out: Vec<(String, Cell)> = vec![
            ("n_sites".into(), Cell::Int(n as i64)),
            ("mass_kg".into(), Cell::Real(self.mass_kg)),
            ("trap_freq_hz".into(), Cell::Real(self.trap_freq_hz)),
            ("trap_freq_rad_s".into(), Cell::Real(self.omega())),
            ("coupling_freq_hz".into(), Cell::Real(self.coupling_freq_hz)),
            ("coupling_freq_rad_s".into(), Cell::Real(self.omega_c())),
            ("pulse_strength".into(), Cell::Real(self.pulse_strength)),
            ("t0_s".into(), Cell::Real(self.t0_s)),
            ("period_s".into(), Cell::Real(self.period())),
            ("site_delay_s".into(), Cell::Real(self.site_delay(n))),
            ("eval_time_s".into(), eval.map_or(Cell::Empty, Cell::Real)),
            ("scan.n_min".into(), Cell::Int(self.scan.n_min as i64)),
            ("scan.n_max".into(), Cell::Int(self.scan.n_max as i64)),
            ("scan.omega_c_hz_list".into(), Cell::Text(list)),
            ("quadrature.order".into(), Cell::Int(self.quadrature.order as i64)),
            (
                "quadrature.sigma_over_T".into(),
                Cell::Real(self.quadrature.sigma_over_t),
            ),
            ("oracle.beta".into(), Cell::Real(self.oracle.beta)),
            (
                "oracle.fock_dimension".into(),
                Cell::Int(self.oracle.fock_dimension as i64),
            ),
            (
                "oracle.fock_inner_block".into(),
                Cell::Int(self.oracle.fock_inner_block as i64),
            ),
            ("oracle.samples".into(), Cell::Int(self.oracle.samples as i64)),
            ("oracle.seed".into(), Cell::Int(self.oracle.seed as i64)),
        ];
        out.push((
            "output.path".into(),
            self.output
                .path
                .as_ref()
                .map_or(Cell::Text("-".into()), |p| Cell::Text(p.display().to_string())),
        ));
        out.push(("output.format".into(), Cell::Text(self.output.format.as_str().into())));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "n_sites = 3\ntrap_freq_hz = 1e5\n";

    #[test]
    fn minimal_config_resolves_defaults() {
        let c = parse_config(BASE).unwrap();
        assert_eq!(c.n_sites, 3);
        assert!((c.omega() - 2.0 * PI * 1e5).abs() < 1e-6);
        assert!((c.period() - PI / (2.0 * c.omega())).abs() < 1e-20);
        assert_eq!(c.site_delay(3), c.period() / 6.0);
        assert_eq!(c.scan.omega_c_hz_list, vec![0.0]);
        assert_eq!(c.output.format, Format::Csv);
        let s = c.schedule(3).unwrap();
        assert!((s.eval_time() - s.last_pulse_time() - 1e-5).abs() < 1e-18);
    }

    #[test]
    fn empty_text_names_n_sites() {
        let e = parse_config("").unwrap_err();
        assert!(e.message.contains("n_sites"), "{e}");
        let e = parse_config("# only a comment\n\n").unwrap_err();
        assert!(e.message.contains("n_sites"));
    }

    #[test]
    fn zero_sites_rejected() {
        let e = parse_config("n_sites = 0\ntrap_freq_hz = 1\n").unwrap_err();
        assert_eq!(e.message, "n_sites must be ≥ 1");
        assert_eq!(e.line, Some(1));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_config("n_sites = 2\n# c\nbogus = 1\n").unwrap_err();
        assert_eq!(e.line, Some(3));
        assert!(e.message.contains("bogus"));
        let e = parse_config("n_sites = 2\ntrap_freq_hz = abc\n").unwrap_err();
        assert_eq!(e.line, Some(2));
        let e = parse_config("n_sites = 2\nn_sites = 3\n").unwrap_err();
        assert_eq!(e.line, Some(2));
        let e = parse_config("n_sites\n").unwrap_err();
        assert_eq!(e.line, Some(1));
    }

    #[test]
    fn lists_counts_and_comments() {
        let c = parse_config(
            "n_sites = 2 # trailing\ntrap_freq_hz = 1e5\nscan.omega_c_hz_list = 1e4, 5e4\noracle.samples = 1e6\noutput.format = jsonl\n",
        )
        .unwrap();
        assert_eq!(c.scan.omega_c_hz_list, vec![1e4, 5e4]);
        assert_eq!(c.oracle.samples, 1_000_000);
        assert_eq!(c.output.format, Format::Jsonl);
        assert!(parse_config("n_sites = 2.5\ntrap_freq_hz = 1\n").is_err());
        assert!(parse_config("n_sites = 2\ntrap_freq_hz = 1\noutput.format = xml\n").is_err());
    }

    #[test]
    fn echo_is_complete() {
        let c = parse_config(BASE).unwrap();
        let keys: Vec<String> = c.echo().into_iter().map(|(k, _)| k).collect();
        for k in KEYS {
            assert!(keys.iter().any(|x| x == k), "{k} missing from echo");
        }
    }
}
