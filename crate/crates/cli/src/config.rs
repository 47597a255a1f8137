//! Run configuration: TOML text to a validated [`RunConfig`].

use std::path::PathBuf;

use choquard_lattice::kernel::default_quad_points;
use choquard_lattice::model::{default_sample_grid, structural_report};
use choquard_lattice::{
    ConvolutionMethod, LatticeSpec, ModelSpec, Nonlinearity, Potential, PowerTerm, SolverConfig,
};
use toml::{Table, Value};

use crate::error::CliError;

/// Environment variable naming the kernel cache directory.
pub const CACHE_ENV: &str = "CHOQUARD_KERNEL_CACHE";

#[derive(Clone, Debug, PartialEq)]
pub struct KernelSettings {
    pub quad_points: usize,
    pub cache_dir: Option<PathBuf>,
    pub method: ConvolutionMethod,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub seed: u64,
    pub solver: SolverConfig,
    pub kernel: KernelSettings,
    pub output_dir: PathBuf,
}

/// Dotted-path assignments applied to the parsed table before validation,
/// e.g. `("radius", 12)` or `("solver.n_starts", 4)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub sets: Vec<(String, Value)>,
}

impl Overrides {
    pub fn set(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.sets.push((key.to_string(), value.into()));
        self
    }
}

const TOP_KEYS: [&str; 11] = [
    "dim",
    "radius",
    "p",
    "alpha",
    "quad_points",
    "seed",
    "potential",
    "nonlinearity",
    "solver",
    "kernel",
    "output",
];
const SOLVER_KEYS: [&str; 7] = [
    "max_iters",
    "grad_tol",
    "energy_tol",
    "step0",
    "backtrack",
    "armijo",
    "n_starts",
];

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    parse_config_with(text, &Overrides::default())
}

/// Parses, applies `overrides`, and validates. Syntax, unknown-key and
/// range errors are all collected; structural admissibility is checked
/// last and reported as a model rejection.
pub fn parse_config_with(text: &str, overrides: &Overrides) -> Result<RunConfig, CliError> {
    let mut table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::Config(vec![e.to_string()]))?;
    let mut errors = Vec::new();
    for (key, value) in &overrides.sets {
        if let Err(e) = assign(&mut table, key, value.clone()) {
            errors.push(e);
        }
    }
    let mut r = Reader { errors };
    let cfg = r.config(&table);
    if !r.errors.is_empty() {
        return Err(CliError::Config(r.errors));
    }
    let cfg = cfg.expect("no errors means a config");
    structural_report(&cfg.model, &default_sample_grid())?.into_result()?;
    Ok(cfg)
}

fn assign(table: &mut Table, key: &str, value: Value) -> Result<(), String> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().ok_or_else(|| "empty override key".to_string())?;
    let mut cur = table;
    for p in parts {
        let entry = cur.entry(p.to_string()).or_insert_with(|| Value::Table(Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| format!("override {key}: {p} is not a table"))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

struct Reader {
    errors: Vec<String>,
}

impl Reader {
    fn err(&mut self, msg: String) {
        self.errors.push(msg);
    }

    fn unknown(&mut self, t: &Table, section: &str, allowed: &[&str]) {
        for k in t.keys() {
            if !allowed.contains(&k.as_str()) {
                let path = if section.is_empty() { k.clone() } else { format!("{section}.{k}") };
                self.err(format!("unknown key `{path}`"));
            }
        }
    }

    fn real(&mut self, t: &Table, path: &str, key: &str) -> Option<f64> {
        match t.get(key) {
            None => {
                self.err(format!("missing key `{path}{key}`"));
                None
            }
            Some(v) => self.as_real(v, &format!("{path}{key}")),
        }
    }

    fn as_real(&mut self, v: &Value, path: &str) -> Option<f64> {
        match v {
            Value::Float(x) => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            other => {
                self.err(format!("`{path}` must be a number, got {}", other.type_str()));
                None
            }
        }
    }

    fn opt_real(&mut self, t: &Table, path: &str, key: &str) -> Option<Option<f64>> {
        match t.get(key) {
            None => Some(None),
            Some(v) => self.as_real(v, &format!("{path}{key}")).map(Some),
        }
    }

    fn count(&mut self, t: &Table, path: &str, key: &str) -> Option<Option<u64>> {
        match t.get(key) {
            None => Some(None),
            Some(Value::Integer(i)) if *i >= 0 => Some(Some(*i as u64)),
            Some(v) => {
                self.err(format!("`{path}{key}` must be a non-negative integer, got {v}"));
                None
            }
        }
    }

    fn required_count(&mut self, t: &Table, key: &str) -> Option<u64> {
        match self.count(t, "", key) {
            Some(None) => {
                self.err(format!("missing key `{key}`"));
                None
            }
            other => other.flatten(),
        }
    }

    fn section<'a>(&mut self, t: &'a Table, key: &str) -> Option<&'a Table> {
        match t.get(key) {
            None => None,
            Some(Value::Table(s)) => Some(s),
            Some(_) => {
                self.err(format!("`{key}` must be a table"));
                None
            }
        }
    }

    fn config(&mut self, t: &Table) -> Option<RunConfig> {
        self.unknown(t, "", &TOP_KEYS);
        let dim = self.required_count(t, "dim");
        let radius = self.required_count(t, "radius");
        let p = self.real(t, "", "p");
        let alpha = self.real(t, "", "alpha");
        let seed = self.count(t, "", "seed").map(|s| s.unwrap_or(0));
        let quad = self.count(t, "", "quad_points");

        let lattice = match (dim, radius) {
            (Some(d), Some(r)) => LatticeSpec::new(d as usize, r as usize)
                .map_err(|e| self.err(format!("lattice: {e}")))
                .ok(),
            _ => None,
        };
        let potential = match self.section(t, "potential") {
            Some(s) => self.potential(s, lattice.map(|l| l.dim())),
            None => {
                self.err("missing table `[potential]`".into());
                None
            }
        };
        let nonlinearity = match self.section(t, "nonlinearity") {
            Some(s) => self.nonlinearity(s),
            None => {
                self.err("missing table `[nonlinearity]`".into());
                None
            }
        };
        let solver_table = self.section(t, "solver").cloned().unwrap_or_default();
        let solver = self.solver(solver_table);
        let kernel_table = self.section(t, "kernel").cloned().unwrap_or_default();
        let kernel = self.kernel(kernel_table);
        let output_table = self.section(t, "output").cloned().unwrap_or_default();
        let output_dir = self.output(output_table);

        let model = match (lattice, p, alpha, potential, nonlinearity) {
            (Some(l), Some(p), Some(a), Some(pot), Some(nl)) => {
                ModelSpec::new(l, p, a, pot, nl).map_err(|e| self.err(e.to_string())).ok()
            }
            _ => None,
        };
        let quad_points = match (quad, lattice) {
            (Some(Some(0)), _) => {
                self.err("`quad_points` must be at least 1".into());
                None
            }
            (Some(Some(m)), _) => Some(m as usize),
            (Some(None), Some(l)) => Some(default_quad_points(l.dim())),
            _ => None,
        };
        let seed = seed?;
        let mut solver = solver?;
        solver.seed = seed;
        let (cache_dir, method) = kernel?;
        Some(RunConfig {
            model: model?,
            seed,
            solver,
            kernel: KernelSettings {
                quad_points: quad_points?,
                cache_dir,
                method,
            },
            output_dir: output_dir?,
        })
    }

    fn potential(&mut self, s: &Table, dim: Option<usize>) -> Option<Potential> {
        let kind = match s.get("kind") {
            Some(Value::String(k)) => k.as_str(),
            Some(_) => {
                self.err("`potential.kind` must be a string".into());
                return None;
            }
            None => {
                self.err("missing key `potential.kind`".into());
                return None;
            }
        };
        let path = "potential.";
        match kind {
            "constant" => {
                self.unknown(s, "potential", &["kind", "h0"]);
                Some(Potential::Constant {
                    h0: self.real(s, path, "h0")?,
                })
            }
            "periodic" => {
                self.unknown(s, "potential", &["kind", "period", "cell"]);
                let period = match self.count(s, path, "period") {
                    Some(Some(t)) => Some(t as usize),
                    Some(None) => {
                        self.err("missing key `potential.period`".into());
                        None
                    }
                    None => None,
                };
                let cell = self.real_array(s, path, "cell");
                Some(Potential::Periodic {
                    period: period?,
                    cell: cell?,
                })
            }
            "coercive" => {
                self.unknown(s, "potential", &["kind", "h0", "center", "coefficient", "exponent"]);
                let h0 = self.real(s, path, "h0");
                let coefficient = self.real(s, path, "coefficient");
                let exponent = self.real(s, path, "exponent");
                let center = match s.get("center") {
                    None => Some(None),
                    Some(Value::Array(a)) => {
                        let c: Option<Vec<i64>> = a.iter().map(|v| v.as_integer()).collect();
                        if c.is_none() {
                            self.err("`potential.center` must be an array of integers".into());
                        }
                        c.map(Some)
                    }
                    Some(_) => {
                        self.err("`potential.center` must be an array of integers".into());
                        None
                    }
                };
                let center = center?;
                Some(Potential::Coercive {
                    h0: h0?,
                    // An omitted center means the origin.
                    center: center.unwrap_or_else(|| vec![0; dim.unwrap_or(0)]),
                    coefficient: coefficient?,
                    exponent: exponent?,
                })
            }
            other => {
                self.err(format!(
                    "unknown potential kind `{other}` (expected constant, periodic or coercive)"
                ));
                None
            }
        }
    }

    fn real_array(&mut self, s: &Table, path: &str, key: &str) -> Option<Vec<f64>> {
        match s.get(key) {
            Some(Value::Array(a)) => {
                let mut out = Vec::with_capacity(a.len());
                for (i, v) in a.iter().enumerate() {
                    out.push(self.as_real(v, &format!("{path}{key}[{i}]"))?);
                }
                Some(out)
            }
            Some(_) => {
                self.err(format!("`{path}{key}` must be an array of numbers"));
                None
            }
            None => {
                self.err(format!("missing key `{path}{key}`"));
                None
            }
        }
    }

    fn nonlinearity(&mut self, s: &Table) -> Option<Nonlinearity> {
        self.unknown(s, "nonlinearity", &["terms"]);
        let Some(Value::Array(rows)) = s.get("terms") else {
            self.err("`nonlinearity.terms` must be an array of [a, q] pairs".into());
            return None;
        };
        let mut terms = Vec::with_capacity(rows.len());
        let mut ok = true;
        for (i, row) in rows.iter().enumerate() {
            match row.as_array().map(|r| r.as_slice()) {
                Some([a, q]) => {
                    let a = self.as_real(a, &format!("nonlinearity.terms[{i}][0]"));
                    let q = self.as_real(q, &format!("nonlinearity.terms[{i}][1]"));
                    match (a, q) {
                        (Some(a), Some(q)) => terms.push(PowerTerm { a, q }),
                        _ => ok = false,
                    }
                }
                _ => {
                    self.err(format!("`nonlinearity.terms[{i}]` must be a pair [a, q]"));
                    ok = false;
                }
            }
        }
        if !ok {
            return None;
        }
        Nonlinearity::sum_of_powers(terms)
            .map_err(|e| self.err(format!("nonlinearity: {e}")))
            .ok()
    }

    fn solver(&mut self, s: Table) -> Option<SolverConfig> {
        self.unknown(&s, "solver", &SOLVER_KEYS);
        let mut cfg = SolverConfig::default();
        let path = "solver.";
        for key in ["max_iters", "n_starts"] {
            if let Some(Some(v)) = self.count(&s, path, key) {
                match key {
                    "max_iters" => cfg.max_iters = v as usize,
                    _ => cfg.n_starts = v as usize,
                }
            }
        }
        for key in ["grad_tol", "energy_tol", "step0", "backtrack", "armijo"] {
            if let Some(Some(v)) = self.opt_real(&s, path, key) {
                match key {
                    "grad_tol" => cfg.grad_tol = v,
                    "energy_tol" => cfg.energy_tol = v,
                    "step0" => cfg.step0 = v,
                    "backtrack" => cfg.backtrack = v,
                    _ => cfg.armijo = v,
                }
            }
        }
        match cfg.validate() {
            Ok(()) => Some(cfg),
            Err(e) => {
                self.err(format!("solver: {e}"));
                None
            }
        }
    }

    fn kernel(&mut self, s: Table) -> Option<(Option<PathBuf>, ConvolutionMethod)> {
        self.unknown(&s, "kernel", &["cache_dir", "method"]);
        let cache = match s.get("cache_dir") {
            None => std::env::var_os(CACHE_ENV).map(PathBuf::from),
            Some(Value::String(d)) => Some(PathBuf::from(d)),
            Some(_) => {
                self.err("`kernel.cache_dir` must be a string".into());
                return None;
            }
        };
        let method = match s.get("method").map(|v| v.as_str()) {
            None => ConvolutionMethod::Auto,
            Some(Some("auto")) => ConvolutionMethod::Auto,
            Some(Some("direct")) => ConvolutionMethod::Direct,
            Some(Some("fft")) => ConvolutionMethod::Fft,
            Some(_) => {
                self.err("`kernel.method` must be one of auto, direct, fft".into());
                return None;
            }
        };
        Some((cache, method))
    }

    fn output(&mut self, s: Table) -> Option<PathBuf> {
        self.unknown(&s, "output", &["dir"]);
        match s.get("dir") {
            None => Some(PathBuf::from("out")),
            Some(Value::String(d)) => Some(PathBuf::from(d)),
            Some(_) => {
                self.err("`output.dir` must be a string".into());
                None
            }
        }
    }
}
