//! Flat key-value run configuration.
//!
//! The config format is one `key = value` pair per line with dotted keys and
//! `#` comments, e.g.
//!
//! ```text
//! family.kind = oscillating
//! family.gamma = 0.5
//! shift.block = 1
//! grid.x_lo = -1.5
//! grid.x_hi = 1.5
//! grid.count = 11
//! ```
//!
//! Echoing a parsed config reproduces it key for key, so a run can always be
//! replayed from its own JSON artifact.

use std::collections::BTreeMap;
use std::fmt;

use turandet::families::FamilySpec;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub family: FamilySpec,
    /// Block length `N` of the transfer products `X_{nN+i}`.
    pub block: usize,
    /// Residue `i`.
    pub residue: usize,
    /// Refinement depth `r`.
    pub depth: usize,
    pub x_lo: f64,
    pub x_hi: f64,
    pub grid_count: usize,
    /// Largest block index used by scans, chains and fits.
    pub n_max: usize,
    pub tol: f64,
    pub window: usize,
    pub delta_min: f64,
    pub delta_guard: f64,
    /// Staleness bound for the limit-matrix probe.
    pub limit_tol: f64,
    /// Truncation ladder `L = 2^p N + i` for `p` in `lo..=hi`.
    pub ladder_lo_pow: u32,
    pub ladder_hi_pow: u32,
    pub out_dir: String,
    pub formats: Vec<Format>,
    /// Seed for randomized property suites; recorded for reproducibility.
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Format::Csv => write!(f, "csv"),
            Format::Json => write!(f, "json"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

struct Keys {
    map: BTreeMap<String, String>,
}

impl Keys {
    fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| err(format!("{key}: expected a number, got {v:?}"))),
        }
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| err(format!("{key}: expected an integer, got {v:?}"))),
        }
    }

    fn f64_req(&self, key: &str) -> Result<f64, ConfigError> {
        self.get(key)
            .ok_or_else(|| err(format!("missing key {key}")))?
            .parse()
            .map_err(|_| err(format!("{key}: expected a number")))
    }

    fn f64_list(&self, key: &str) -> Result<Vec<f64>, ConfigError> {
        let raw = self.get(key).ok_or_else(|| err(format!("missing key {key}")))?;
        raw.split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| err(format!("{key}: bad list entry {s:?}")))
            })
            .collect()
    }
}

fn parse_lines(text: &str) -> Result<Keys, ConfigError> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("line {}: expected key = value", lineno + 1)))?;
        let key = key.trim().to_string();
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(err(format!("duplicate key {key}")));
        }
    }
    Ok(Keys { map })
}

fn parse_family(keys: &Keys) -> Result<FamilySpec, ConfigError> {
    let kind = keys
        .get("family.kind")
        .ok_or_else(|| err("missing key family.kind"))?;
    let spec = match kind {
        "constant" => FamilySpec::Constant {
            alpha: keys.f64_list("family.alpha")?,
            beta: keys.f64_list("family.beta")?,
        },
        "asymptotically_periodic" => FamilySpec::AsymptoticallyPeriodic {
            alpha: keys.f64_list("family.alpha")?,
            beta: keys.f64_list("family.beta")?,
            pert_a: keys.f64_or("family.pert_a", 0.0)?,
            pert_b: keys.f64_or("family.pert_b", 0.0)?,
        },
        "periodic_modulation" => FamilySpec::PeriodicModulation {
            alpha: keys.f64_list("family.alpha")?,
            beta: keys.f64_list("family.beta")?,
            tau: keys.f64_or("family.tau", 0.5)?,
        },
        "blend" => FamilySpec::Blend {
            alpha: keys.f64_list("family.alpha")?,
            beta: keys.f64_list("family.beta")?,
            growth: keys.f64_or("family.growth", 0.5)?,
        },
        "oscillating" => FamilySpec::Oscillating {
            gamma: keys.f64_req("family.gamma")?,
        },
        "custom" => FamilySpec::Custom {
            a: keys.f64_list("family.a")?,
            b: keys.f64_list("family.b")?,
            period: keys.usize_or("family.period", 1)?,
        },
        other => return Err(err(format!("unknown family.kind {other:?}"))),
    };
    Ok(spec)
}

pub fn parse_formats(raw: &str) -> Result<Vec<Format>, ConfigError> {
    format_list(raw)
}

fn format_list(raw: &str) -> Result<Vec<Format>, ConfigError> {
    let mut out = Vec::new();
    for part in raw.split(',') {
        match part.trim() {
            "csv" => out.push(Format::Csv),
            "json" => out.push(Format::Json),
            other => return Err(err(format!("unknown output format {other:?}"))),
        }
    }
    if out.is_empty() {
        return Err(err("output.formats must name at least one format"));
    }
    Ok(out)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        let keys = parse_lines(text)?;
        let family = parse_family(&keys)?;
        let block = keys.usize_or("shift.block", family.effective_period())?;
        let cfg = RunConfig {
            residue: keys.usize_or("shift.residue", 0)?,
            depth: keys.usize_or("diag.depth", 1)?,
            x_lo: keys.f64_req("grid.x_lo")?,
            x_hi: keys.f64_req("grid.x_hi")?,
            grid_count: keys.usize_or("grid.count", 11)?,
            n_max: keys.usize_or("run.n_max", 10_000)?,
            tol: keys.f64_or("run.tol", 1e-6)?,
            window: keys.usize_or("run.window", 32)?,
            delta_min: keys.f64_or("run.delta_min", 1e-9)?,
            delta_guard: keys.f64_or("run.delta_guard", 1e-6)?,
            limit_tol: keys.f64_or("run.limit_tol", 0.05)?,
            ladder_lo_pow: keys.usize_or("ladder.lo_pow", 4)? as u32,
            ladder_hi_pow: keys.usize_or("ladder.hi_pow", 14)? as u32,
            out_dir: keys.get("output.dir").unwrap_or("out").to_string(),
            formats: format_list(keys.get("output.formats").unwrap_or("csv,json"))?,
            seed: keys.usize_or("run.seed", 7)? as u64,
            family,
            block,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.x_lo < self.x_hi) {
            return Err(err(format!(
                "grid.x_lo = {} must be below grid.x_hi = {}",
                self.x_lo, self.x_hi
            )));
        }
        if self.grid_count < 3 {
            return Err(err("grid.count must be at least 3"));
        }
        if self.depth < 1 {
            return Err(err("diag.depth must be at least 1"));
        }
        if self.block < 1 {
            return Err(err("shift.block must be at least 1"));
        }
        if self.residue >= self.block {
            return Err(err(format!(
                "shift.residue = {} must be below shift.block = {}",
                self.residue, self.block
            )));
        }
        if self.window < 2 {
            return Err(err("run.window must be at least 2"));
        }
        if !(self.tol > 0.0) {
            return Err(err("run.tol must be positive"));
        }
        if self.n_max < self.depth + 2 {
            return Err(err("run.n_max too small for the requested depth"));
        }
        if self.ladder_lo_pow > self.ladder_hi_pow {
            return Err(err("ladder.lo_pow must not exceed ladder.hi_pow"));
        }
        turandet::families::make_family(&self.family)
            .map_err(|e| err(e.to_string()))?;
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.grid_count)
            .map(|k| {
                self.x_lo + (self.x_hi - self.x_lo) * k as f64 / (self.grid_count - 1) as f64
            })
            .collect()
    }

    /// Canonical flat-key form; `parse(to_text(echo()))` reproduces the
    /// config.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let fl = |v: f64| format!("{v:e}");
        let list = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x:e}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        match &self.family {
            FamilySpec::Constant { alpha, beta } => {
                m.insert("family.kind".into(), "constant".into());
                m.insert("family.alpha".into(), list(alpha));
                m.insert("family.beta".into(), list(beta));
            }
            FamilySpec::AsymptoticallyPeriodic {
                alpha,
                beta,
                pert_a,
                pert_b,
            } => {
                m.insert("family.kind".into(), "asymptotically_periodic".into());
                m.insert("family.alpha".into(), list(alpha));
                m.insert("family.beta".into(), list(beta));
                m.insert("family.pert_a".into(), fl(*pert_a));
                m.insert("family.pert_b".into(), fl(*pert_b));
            }
            FamilySpec::PeriodicModulation { alpha, beta, tau } => {
                m.insert("family.kind".into(), "periodic_modulation".into());
                m.insert("family.alpha".into(), list(alpha));
                m.insert("family.beta".into(), list(beta));
                m.insert("family.tau".into(), fl(*tau));
            }
            FamilySpec::Blend { alpha, beta, growth } => {
                m.insert("family.kind".into(), "blend".into());
                m.insert("family.alpha".into(), list(alpha));
                m.insert("family.beta".into(), list(beta));
                m.insert("family.growth".into(), fl(*growth));
            }
            FamilySpec::Oscillating { gamma } => {
                m.insert("family.kind".into(), "oscillating".into());
                m.insert("family.gamma".into(), fl(*gamma));
            }
            FamilySpec::Custom { a, b, period } => {
                m.insert("family.kind".into(), "custom".into());
                m.insert("family.a".into(), list(a));
                m.insert("family.b".into(), list(b));
                m.insert("family.period".into(), period.to_string());
            }
        }
        m.insert("shift.block".into(), self.block.to_string());
        m.insert("shift.residue".into(), self.residue.to_string());
        m.insert("diag.depth".into(), self.depth.to_string());
        m.insert("grid.x_lo".into(), fl(self.x_lo));
        m.insert("grid.x_hi".into(), fl(self.x_hi));
        m.insert("grid.count".into(), self.grid_count.to_string());
        m.insert("run.n_max".into(), self.n_max.to_string());
        m.insert("run.tol".into(), fl(self.tol));
        m.insert("run.window".into(), self.window.to_string());
        m.insert("run.delta_min".into(), fl(self.delta_min));
        m.insert("run.delta_guard".into(), fl(self.delta_guard));
        m.insert("run.limit_tol".into(), fl(self.limit_tol));
        m.insert("ladder.lo_pow".into(), self.ladder_lo_pow.to_string());
        m.insert("ladder.hi_pow".into(), self.ladder_hi_pow.to_string());
        m.insert("output.dir".into(), self.out_dir.clone());
        m.insert(
            "output.formats".into(),
            self.formats
                .iter()
                .map(Format::to_string)
                .collect::<Vec<_>>()
                .join(","),
        );
        m.insert("run.seed".into(), self.seed.to_string());
        m
    }

    pub fn echo_text(&self) -> String {
        self.echo()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "
# oscillating-diagonal gate
family.kind = oscillating
family.gamma = 0.5
shift.block = 1
shift.residue = 0
diag.depth = 3
grid.x_lo = -1.5
grid.x_hi = 1.5
grid.count = 11
run.n_max = 2000
output.dir = scratch
";

    #[test]
    fn parses_and_round_trips() {
        let cfg = RunConfig::parse(SAMPLE).unwrap();
        assert_eq!(cfg.depth, 3);
        assert_eq!(cfg.grid().len(), 11);
        let again = RunConfig::parse(&cfg.echo_text()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn rejects_inverted_interval() {
        let bad = SAMPLE.replace("grid.x_hi = 1.5", "grid.x_hi = -2.5");
        let e = RunConfig::parse(&bad).unwrap_err();
        assert!(e.to_string().contains("x_lo"));
    }

    #[test]
    fn rejects_unknown_kind_and_duplicates() {
        assert!(RunConfig::parse("family.kind = nope\ngrid.x_lo=0\ngrid.x_hi=1").is_err());
        let dup = format!("{SAMPLE}\ndiag.depth = 1\n");
        assert!(RunConfig::parse(&dup).is_err());
    }

    #[test]
    fn rejects_bad_family_parameters() {
        let bad = SAMPLE.replace("family.gamma = 0.5", "family.gamma = 1.5");
        assert!(RunConfig::parse(&bad).is_err());
    }

    #[test]
    fn residue_must_fit_block() {
        let bad = SAMPLE.replace("shift.residue = 0", "shift.residue = 1");
        assert!(RunConfig::parse(&bad).is_err());
    }
}
