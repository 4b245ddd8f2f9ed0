//! Model configuration: sectioned `key = value` text.
//!
//! ```text
//! [domain]
//! dim = 1
//! n = 64
//! left = G0
//! right = G3
//!
//! [coefficients]
//! T = 1
//! rho = 1
//!
//! [boundary]
//! k2.G3 = 3
//! ```
//!
//! Sections and keys:
//!
//! * `[domain]`: `dim` (1 or 2). In 1D `n`, `left`, `right`; in 2D `nx`,
//!   `ny` and `bottom`, `right`, `top`, `left`, each either a single label
//!   (`G3`) or a comma-separated list of `label:start-end` intervals
//!   (`G0:0-0.5, G3:0.5-1`).
//! * `[coefficients]`: `T` (an expression, or `xx, xy, yy` in 2D), `rho`,
//!   `a`, `b`. Defaults: `T = rho = 1`, `a = b = 0`.
//! * `[boundary]`: `k1.<label>` for `G2`/`G4`, `k2.<label>` for `G3`/`G4`.
//! * `[simulation]`: `t_end`, `dt`, `w0`, `w1` (defaults `w0 = w1 = 0`).
//! * `[spectral]`: `axis_tol` (default `1e-6`), `want_vectors` (default
//!   `true`), `sizes` (comma-separated, used by `study`).
//! * `[helmholtz]`: `f` (1D) or `f = fx, fy` (2D).
//! * `[output]`: `directory` (default `.`).
//!
//! Expressions use `x`, `y`, numbers, `+ - * /` and parentheses. `#` starts
//! a comment.

mod expr;

pub use expr::Expr;

use std::collections::BTreeMap;
use std::fmt;

use crate::coefficients::{sample_coefficients, validate_model, CoefficientFields, CoefficientSet, ModelError, Tensor};
use crate::mesh::{build_interval_mesh, build_rect_mesh, BoundaryLabel, Mesh, MeshError, PartitionSpec, Side, SideAssignment};

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostic {
    /// 1-based line, 0 when not attributable to a line.
    pub line: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "line {}: {}", self.line, self.message)
        } else {
            f.write_str(&self.message)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigErrors(pub Vec<Diagnostic>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, d) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

#[derive(Clone, Debug, PartialEq)]
pub enum DomainConfig {
    Interval {
        n: usize,
        left: BoundaryLabel,
        right: BoundaryLabel,
    },
    Rectangle {
        nx: usize,
        ny: usize,
        partition: PartitionSpec,
    },
}

impl DomainConfig {
    pub fn dim(&self) -> usize {
        match self {
            DomainConfig::Interval { .. } => 1,
            DomainConfig::Rectangle { .. } => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModulusConfig {
    Isotropic(Expr),
    Anisotropic { xx: Expr, xy: Expr, yy: Expr },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientConfig {
    pub modulus: ModulusConfig,
    pub rho: Expr,
    pub a: Expr,
    pub b: Expr,
}

impl Default for CoefficientConfig {
    fn default() -> Self {
        Self {
            modulus: ModulusConfig::Isotropic(Expr::constant(1.0)),
            rho: Expr::constant(1.0),
            a: Expr::constant(0.0),
            b: Expr::constant(0.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct BoundaryConfig {
    pub k1: BTreeMap<BoundaryLabel, Expr>,
    pub k2: BTreeMap<BoundaryLabel, Expr>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationConfig {
    pub t_end: f64,
    pub dt: f64,
    pub w0: Expr,
    pub w1: Expr,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralConfig {
    pub axis_tol: f64,
    pub want_vectors: bool,
    pub sizes: Option<Vec<usize>>,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            axis_tol: 1e-6,
            want_vectors: true,
            sizes: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HelmholtzConfig {
    pub field: Vec<Expr>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputConfig {
    pub directory: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: ".".to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub domain: DomainConfig,
    pub coefficients: CoefficientConfig,
    pub boundary: BoundaryConfig,
    pub simulation: Option<SimulationConfig>,
    pub spectral: SpectralConfig,
    pub helmholtz: Option<HelmholtzConfig>,
    pub output: OutputConfig,
}

impl ModelConfig {
    pub fn build_mesh(&self) -> Result<Mesh, MeshError> {
        match &self.domain {
            DomainConfig::Interval { n, left, right } => build_interval_mesh(*n, *left, *right),
            DomainConfig::Rectangle { nx, ny, partition } => build_rect_mesh(*nx, *ny, partition),
        }
    }

    pub fn fields(&self) -> CoefficientFields<'_> {
        let dim = self.domain.dim();
        let c = &self.coefficients;
        let modulus: Box<dyn Fn(crate::mesh::Point) -> Tensor + '_> = match &c.modulus {
            ModulusConfig::Isotropic(e) => Box::new(move |p| Tensor::scalar(dim, e.eval(p))),
            ModulusConfig::Anisotropic { xx, xy, yy } => Box::new(move |p| {
                let off = xy.eval(p);
                Tensor::from_2x2(xx.eval(p), off, off, yy.eval(p))
            }),
        };
        CoefficientFields {
            modulus,
            rho: Box::new(move |p| c.rho.eval(p)),
            a: Box::new(move |p| c.a.eval(p)),
            b: Box::new(move |p| c.b.eval(p)),
            k1: Box::new(move |l, p| self.boundary.k1.get(&l).map_or(0.0, |e| e.eval(p))),
            k2: Box::new(move |l, p| self.boundary.k2.get(&l).map_or(0.0, |e| e.eval(p))),
        }
    }

    /// Mesh plus sampled coefficients.
    pub fn build_model(&self) -> Result<(Mesh, CoefficientSet), ModelError> {
        let mesh = self.build_mesh()?;
        let coeffs = sample_coefficients(&mesh, &self.fields())?;
        Ok((mesh, coeffs))
    }

    /// Same model at a different resolution: `n` cells per side.
    pub fn with_resolution(&self, n: usize) -> ModelConfig {
        let mut out = self.clone();
        out.domain = match &self.domain {
            DomainConfig::Interval { left, right, .. } => DomainConfig::Interval {
                n,
                left: *left,
                right: *right,
            },
            DomainConfig::Rectangle { partition, .. } => DomainConfig::Rectangle {
                nx: n,
                ny: n,
                partition: partition.clone(),
            },
        };
        out
    }

    pub fn resolution(&self) -> usize {
        match &self.domain {
            DomainConfig::Interval { n, .. } => *n,
            DomainConfig::Rectangle { nx, .. } => *nx,
        }
    }

    /// Whether the lower-order terms `a`, `b` are present.
    pub fn has_perturbation(&self) -> bool {
        self.coefficients.a.as_constant() != Some(0.0) || self.coefficients.b.as_constant() != Some(0.0)
    }
}

const SECTIONS: [&str; 7] = ["domain", "coefficients", "boundary", "simulation", "spectral", "helmholtz", "output"];

struct Entry {
    line: usize,
    value: String,
}

type Sections = BTreeMap<String, BTreeMap<String, Entry>>;

/// Parses and fully validates a model configuration.
pub fn parse_config(text: &str) -> Result<ModelConfig, ConfigErrors> {
    let mut diags = Vec::new();
    let sections = split_sections(text, &mut diags);
    let mut r = Reader {
        sections: &sections,
        diags: &mut diags,
    };
    let config = r.read();
    if !diags.is_empty() {
        return Err(ConfigErrors(diags));
    }
    let config = config.expect("reader yields a config when no diagnostics were raised");
    semantic_checks(&config, &sections, &mut diags);
    if diags.is_empty() {
        Ok(config)
    } else {
        Err(ConfigErrors(diags))
    }
}

fn split_sections(text: &str, diags: &mut Vec<Diagnostic>) -> Sections {
    let mut out: Sections = BTreeMap::new();
    let mut current: Option<String> = None;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let Some(name) = name.strip_suffix(']') else {
                diags.push(Diagnostic { line, message: "malformed section header".into() });
                continue;
            };
            let name = name.trim().to_string();
            if !SECTIONS.contains(&name.as_str()) {
                diags.push(Diagnostic { line, message: format!("unknown section `[{name}]`") });
                current = None;
                continue;
            }
            if out.contains_key(&name) {
                diags.push(Diagnostic { line, message: format!("duplicate section `[{name}]`") });
            }
            out.entry(name.clone()).or_default();
            current = Some(name);
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            diags.push(Diagnostic { line, message: "expected `key = value`".into() });
            continue;
        };
        let Some(section) = current.as_ref() else {
            diags.push(Diagnostic { line, message: "key outside of a known section".into() });
            continue;
        };
        let key = key.trim().to_string();
        let table = out.get_mut(section).unwrap();
        if table.contains_key(&key) {
            diags.push(Diagnostic { line, message: format!("duplicate key `{key}`") });
            continue;
        }
        table.insert(
            key,
            Entry {
                line,
                value: value.trim().to_string(),
            },
        );
    }
    out
}

struct Reader<'a> {
    sections: &'a Sections,
    diags: &'a mut Vec<Diagnostic>,
}

impl Reader<'_> {
    fn err(&mut self, line: usize, message: impl Into<String>) {
        self.diags.push(Diagnostic { line, message: message.into() });
    }

    fn table(&self, section: &str) -> Option<&BTreeMap<String, Entry>> {
        self.sections.get(section)
    }

    fn section_line(&self, section: &str) -> usize {
        self.table(section)
            .and_then(|t| t.values().map(|e| e.line).min())
            .unwrap_or(0)
    }

    fn reject_unknown(&mut self, section: &str, allowed: &dyn Fn(&str) -> bool) {
        let Some(table) = self.table(section) else { return };
        let bad: Vec<(usize, String)> = table
            .iter()
            .filter(|(k, _)| !allowed(k))
            .map(|(k, e)| (e.line, k.clone()))
            .collect();
        for (line, key) in bad {
            self.err(line, format!("unknown key `{key}` in [{section}]"));
        }
    }

    fn raw(&self, section: &str, key: &str) -> Option<(usize, String)> {
        self.table(section)?.get(key).map(|e| (e.line, e.value.clone()))
    }

    fn number<T: std::str::FromStr>(&mut self, section: &str, key: &str, what: &str) -> Option<T> {
        let (line, v) = self.raw(section, key)?;
        match v.parse::<T>() {
            Ok(x) => Some(x),
            Err(_) => {
                self.err(line, format!("`{key}` must be {what}, got `{v}`"));
                None
            }
        }
    }

    fn required<T: std::str::FromStr>(&mut self, section: &str, key: &str, what: &str) -> Option<T> {
        if self.raw(section, key).is_none() {
            let line = self.section_line(section);
            self.err(line, format!("missing `{key}` in [{section}]"));
            return None;
        }
        self.number(section, key, what)
    }

    fn expr(&mut self, section: &str, key: &str) -> Option<Expr> {
        let (line, v) = self.raw(section, key)?;
        match Expr::parse(&v) {
            Ok(e) => Some(e),
            Err(m) => {
                self.err(line, format!("`{key}`: {m}"));
                None
            }
        }
    }

    fn label(&mut self, line: usize, s: &str) -> Option<BoundaryLabel> {
        match s.parse::<BoundaryLabel>() {
            Ok(l) => Some(l),
            Err(_) => {
                self.err(line, format!("unknown boundary label `{}`", s.trim()));
                None
            }
        }
    }

    fn read(&mut self) -> Option<ModelConfig> {
        let domain = self.read_domain();
        let dim = domain.as_ref().map_or(1, DomainConfig::dim);
        let coefficients = self.read_coefficients(dim);
        let boundary = self.read_boundary();
        let simulation = self.read_simulation();
        let spectral = self.read_spectral();
        let helmholtz = self.read_helmholtz(dim);
        self.reject_unknown("output", &|k| k == "directory");
        let output = OutputConfig {
            directory: self.raw("output", "directory").map_or_else(|| ".".to_string(), |(_, v)| v),
        };
        Some(ModelConfig {
            domain: domain?,
            coefficients: coefficients?,
            boundary: boundary?,
            simulation: simulation?,
            spectral: spectral?,
            helmholtz: helmholtz?,
            output,
        })
    }

    fn read_domain(&mut self) -> Option<DomainConfig> {
        if self.table("domain").is_none() {
            self.err(0, "missing [domain] section");
            return None;
        }
        let dim: usize = self.required("domain", "dim", "1 or 2")?;
        match dim {
            1 => {
                self.reject_unknown("domain", &|k| matches!(k, "dim" | "n" | "left" | "right"));
                let n: usize = self.required("domain", "n", "a positive integer")?;
                let left = self.side_label("left");
                let right = self.side_label("right");
                if n == 0 {
                    let line = self.raw("domain", "n").map_or(0, |e| e.0);
                    self.err(line, "`n` must be positive");
                    return None;
                }
                Some(DomainConfig::Interval {
                    n,
                    left: left?,
                    right: right?,
                })
            }
            2 => {
                self.reject_unknown("domain", &|k| {
                    matches!(k, "dim" | "nx" | "ny" | "bottom" | "right" | "top" | "left")
                });
                let nx: Option<usize> = self.required("domain", "nx", "a positive integer");
                let ny: Option<usize> = self.required("domain", "ny", "a positive integer");
                let mut partition = PartitionSpec::default();
                let mut ok = true;
                for side in Side::ALL {
                    match self.side_partition(side) {
                        Some(list) => *partition.side_mut(side) = list,
                        None => ok = false,
                    }
                }
                let (nx, ny) = (nx?, ny?);
                if nx == 0 || ny == 0 {
                    self.err(self.section_line("domain"), "`nx` and `ny` must be positive");
                    return None;
                }
                ok.then_some(DomainConfig::Rectangle { nx, ny, partition })
            }
            other => {
                let line = self.raw("domain", "dim").map_or(0, |e| e.0);
                self.err(line, format!("`dim` must be 1 or 2, got {other}"));
                None
            }
        }
    }

    fn side_label(&mut self, key: &str) -> Option<BoundaryLabel> {
        let Some((line, v)) = self.raw("domain", key) else {
            let line = self.section_line("domain");
            self.err(line, format!("missing `{key}` in [domain]"));
            return None;
        };
        self.label(line, &v)
    }

    fn side_partition(&mut self, side: Side) -> Option<Vec<SideAssignment>> {
        let key = side.to_string();
        let Some((line, v)) = self.raw("domain", &key) else {
            let line = self.section_line("domain");
            self.err(line, format!("missing `{key}` in [domain]: every side needs a label"));
            return None;
        };
        let mut out = Vec::new();
        for part in v.split(',') {
            let part = part.trim();
            match part.split_once(':') {
                None => out.push(SideAssignment::whole(self.label(line, part)?)),
                Some((label, range)) => {
                    let label = self.label(line, label)?;
                    let Some((a, b)) = range.split_once('-') else {
                        self.err(line, format!("interval `{range}` must read `start-end`"));
                        return None;
                    };
                    match (a.trim().parse::<f64>(), b.trim().parse::<f64>()) {
                        (Ok(start), Ok(end)) => out.push(SideAssignment { label, start, end }),
                        _ => {
                            self.err(line, format!("interval `{range}` is not numeric"));
                            return None;
                        }
                    }
                }
            }
        }
        Some(out)
    }

    fn read_coefficients(&mut self, dim: usize) -> Option<CoefficientConfig> {
        self.reject_unknown("coefficients", &|k| matches!(k, "T" | "rho" | "a" | "b"));
        let mut c = CoefficientConfig::default();
        let mut ok = true;
        if let Some((line, v)) = self.raw("coefficients", "T") {
            let parts: Vec<&str> = v.split(',').collect();
            let parsed: Vec<Option<Expr>> = parts
                .iter()
                .map(|p| match Expr::parse(p) {
                    Ok(e) => Some(e),
                    Err(m) => {
                        self.err(line, format!("`T`: {m}"));
                        None
                    }
                })
                .collect();
            match (parsed.as_slice(), dim) {
                ([Some(e)], _) => c.modulus = ModulusConfig::Isotropic(e.clone()),
                ([Some(xx), Some(xy), Some(yy)], 2) => {
                    c.modulus = ModulusConfig::Anisotropic {
                        xx: xx.clone(),
                        xy: xy.clone(),
                        yy: yy.clone(),
                    }
                }
                (p, _) if p.iter().any(Option::is_none) => ok = false,
                _ => {
                    self.err(line, "`T` takes one expression, or `xx, xy, yy` in 2D");
                    ok = false;
                }
            }
        }
        for key in ["rho", "a", "b"] {
            if self.raw("coefficients", key).is_some() {
                match self.expr("coefficients", key) {
                    Some(e) => match key {
                        "rho" => c.rho = e,
                        "a" => c.a = e,
                        _ => c.b = e,
                    },
                    None => ok = false,
                }
            }
        }
        ok.then_some(c)
    }

    fn read_boundary(&mut self) -> Option<BoundaryConfig> {
        let mut out = BoundaryConfig::default();
        let Some(table) = self.table("boundary") else {
            return Some(out);
        };
        let keys: Vec<(String, usize)> = table.iter().map(|(k, e)| (k.clone(), e.line)).collect();
        let mut ok = true;
        for (key, line) in keys {
            let Some((which, label)) = key.split_once('.') else {
                self.err(line, format!("unknown key `{key}` in [boundary]; expected `k1.<label>` or `k2.<label>`"));
                ok = false;
                continue;
            };
            if which != "k1" && which != "k2" {
                self.err(line, format!("unknown key `{key}` in [boundary]"));
                ok = false;
                continue;
            }
            let Some(label) = self.label(line, label) else {
                ok = false;
                continue;
            };
            let carries = if which == "k1" { label.carries_k1() } else { label.carries_k2() };
            if !carries {
                self.err(
                    line,
                    format!("`{which}` does not act on {label}; k1 applies on G2/G4, k2 on G3/G4"),
                );
                ok = false;
                continue;
            }
            let Some(e) = self.expr("boundary", &key) else {
                ok = false;
                continue;
            };
            if which == "k1" {
                out.k1.insert(label, e);
            } else {
                out.k2.insert(label, e);
            }
        }
        ok.then_some(out)
    }

    fn read_simulation(&mut self) -> Option<Option<SimulationConfig>> {
        if self.table("simulation").is_none() {
            return Some(None);
        }
        self.reject_unknown("simulation", &|k| matches!(k, "t_end" | "dt" | "w0" | "w1"));
        let t_end: Option<f64> = self.required("simulation", "t_end", "a number");
        let dt: Option<f64> = self.required("simulation", "dt", "a number");
        let w0 = if self.raw("simulation", "w0").is_some() {
            self.expr("simulation", "w0")
        } else {
            Some(Expr::constant(0.0))
        };
        let w1 = if self.raw("simulation", "w1").is_some() {
            self.expr("simulation", "w1")
        } else {
            Some(Expr::constant(0.0))
        };
        let (t_end, dt) = (t_end?, dt?);
        let line = self.raw("simulation", "dt").map_or(0, |e| e.0);
        if !(t_end > 0.0 && dt > 0.0 && t_end.is_finite() && dt <= t_end) {
            self.err(line, format!("need 0 < dt <= t_end, got dt = {dt}, t_end = {t_end}"));
            return None;
        }
        Some(Some(SimulationConfig {
            t_end,
            dt,
            w0: w0?,
            w1: w1?,
        }))
    }

    fn read_spectral(&mut self) -> Option<SpectralConfig> {
        self.reject_unknown("spectral", &|k| matches!(k, "axis_tol" | "want_vectors" | "sizes"));
        let mut s = SpectralConfig::default();
        if self.raw("spectral", "axis_tol").is_some() {
            s.axis_tol = self.number("spectral", "axis_tol", "a number")?;
            if !(s.axis_tol > 0.0) {
                let line = self.raw("spectral", "axis_tol").unwrap().0;
                self.err(line, "`axis_tol` must be positive");
                return None;
            }
        }
        if self.raw("spectral", "want_vectors").is_some() {
            s.want_vectors = self.number("spectral", "want_vectors", "true or false")?;
        }
        if let Some((line, v)) = self.raw("spectral", "sizes") {
            let sizes: Result<Vec<usize>, _> = v.split(',').map(|p| p.trim().parse::<usize>()).collect();
            match sizes {
                Ok(list) if list.iter().all(|&n| n > 0) => s.sizes = Some(list),
                _ => {
                    self.err(line, format!("`sizes` must be positive integers, got `{v}`"));
                    return None;
                }
            }
        }
        Some(s)
    }

    fn read_helmholtz(&mut self, dim: usize) -> Option<Option<HelmholtzConfig>> {
        if self.table("helmholtz").is_none() {
            return Some(None);
        }
        self.reject_unknown("helmholtz", &|k| k == "f");
        let Some((line, v)) = self.raw("helmholtz", "f") else {
            self.err(self.section_line("helmholtz"), "missing `f` in [helmholtz]");
            return None;
        };
        let mut field = Vec::new();
        for part in v.split(',') {
            match Expr::parse(part) {
                Ok(e) => field.push(e),
                Err(m) => {
                    self.err(line, format!("`f`: {m}"));
                    return None;
                }
            }
        }
        if field.len() != dim {
            self.err(line, format!("`f` needs {dim} component(s), got {}", field.len()));
            return None;
        }
        Some(Some(HelmholtzConfig { field }))
    }
}

/// Model-level checks that need the mesh: label references and the
/// coefficient assumptions.
fn semantic_checks(config: &ModelConfig, sections: &Sections, diags: &mut Vec<Diagnostic>) {
    let line_of = |section: &str, key: &str| -> usize {
        sections
            .get(section)
            .and_then(|t| t.get(key))
            .map_or(0, |e| e.line)
    };
    let mesh = match config.build_mesh() {
        Ok(m) => m,
        Err(e) => {
            diags.push(Diagnostic {
                line: line_of("domain", "dim"),
                message: e.to_string(),
            });
            return;
        }
    };
    let present: Vec<BoundaryLabel> = mesh.facets.iter().filter_map(|f| f.label).collect();
    for (which, map) in [("k1", &config.boundary.k1), ("k2", &config.boundary.k2)] {
        for label in map.keys() {
            if !present.contains(label) {
                diags.push(Diagnostic {
                    line: line_of("boundary", &format!("{which}.{label}")),
                    message: format!("`{which}.{label}` refers to a label not present on the boundary"),
                });
            }
        }
    }
    if config.domain.dim() == 1 {
        let exprs = [
            &config.coefficients.rho,
            &config.coefficients.a,
            &config.coefficients.b,
        ];
        let uses_y = exprs.iter().any(|e| e.uses_y())
            || matches!(&config.coefficients.modulus, ModulusConfig::Isotropic(e) if e.uses_y());
        if uses_y {
            diags.push(Diagnostic {
                line: line_of("domain", "dim"),
                message: "`y` is not available in a 1D model".into(),
            });
        }
    }
    if !diags.is_empty() {
        return;
    }
    let coeff_line = |what: &str| match what {
        "T" | "rho" | "a" | "b" => line_of("coefficients", what),
        _ => 0,
    };
    let result = sample_coefficients(&mesh, &config.fields()).and_then(|c| validate_model(&mesh, &c).map(|_| c));
    if let Err(e) = result {
        let line = match &e {
            ModelError::NegativeBoundaryCoefficient { which, facet, .. } => {
                let label = mesh.facets[*facet].label.expect("built meshes are labeled");
                line_of("boundary", &format!("{which}.{label}"))
            }
            ModelError::NonSymmetricModulus { .. } | ModelError::NonPositiveModulus { .. } => coeff_line("T"),
            ModelError::NonPositiveDensity { .. } => coeff_line("rho"),
            ModelError::NonFinite { what, .. } => coeff_line(what),
            _ => 0,
        };
        let message = match &e {
            ModelError::NegativeBoundaryCoefficient { which, value, .. } => {
                format!("{which} must be nonnegative on the boundary, got {value}")
            }
            other => other.to_string(),
        };
        diags.push(Diagnostic { line, message });
    }
}

impl fmt::Display for ModelConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[domain]")?;
        match &self.domain {
            DomainConfig::Interval { n, left, right } => {
                writeln!(f, "dim = 1\nn = {n}\nleft = {left}\nright = {right}")?;
            }
            DomainConfig::Rectangle { nx, ny, partition } => {
                writeln!(f, "dim = 2\nnx = {nx}\nny = {ny}")?;
                for side in Side::ALL {
                    let parts: Vec<String> = partition
                        .side(side)
                        .iter()
                        .map(|a| {
                            if a.start == 0.0 && a.end == 1.0 {
                                a.label.to_string()
                            } else {
                                format!("{}:{:?}-{:?}", a.label, a.start, a.end)
                            }
                        })
                        .collect();
                    writeln!(f, "{side} = {}", parts.join(", "))?;
                }
            }
        }
        writeln!(f, "\n[coefficients]")?;
        match &self.coefficients.modulus {
            ModulusConfig::Isotropic(e) => writeln!(f, "T = {e}")?,
            ModulusConfig::Anisotropic { xx, xy, yy } => writeln!(f, "T = {xx}, {xy}, {yy}")?,
        }
        writeln!(f, "rho = {}", self.coefficients.rho)?;
        writeln!(f, "a = {}", self.coefficients.a)?;
        writeln!(f, "b = {}", self.coefficients.b)?;
        if !self.boundary.k1.is_empty() || !self.boundary.k2.is_empty() {
            writeln!(f, "\n[boundary]")?;
            for (l, e) in &self.boundary.k1 {
                writeln!(f, "k1.{l} = {e}")?;
            }
            for (l, e) in &self.boundary.k2 {
                writeln!(f, "k2.{l} = {e}")?;
            }
        }
        if let Some(s) = &self.simulation {
            writeln!(f, "\n[simulation]")?;
            writeln!(f, "t_end = {:?}\ndt = {:?}\nw0 = {}\nw1 = {}", s.t_end, s.dt, s.w0, s.w1)?;
        }
        writeln!(f, "\n[spectral]")?;
        writeln!(f, "axis_tol = {:?}\nwant_vectors = {}", self.spectral.axis_tol, self.spectral.want_vectors)?;
        if let Some(sizes) = &self.spectral.sizes {
            let s: Vec<String> = sizes.iter().map(usize::to_string).collect();
            writeln!(f, "sizes = {}", s.join(","))?;
        }
        if let Some(h) = &self.helmholtz {
            let parts: Vec<String> = h.field.iter().map(Expr::to_string).collect();
            writeln!(f, "\n[helmholtz]\nf = {}", parts.join(", "))?;
        }
        writeln!(f, "\n[output]\ndirectory = {}", self.output.directory)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
[domain]
dim = 1
n = 64
left = G0
right = G3

[coefficients]
T = 1
rho = 1

[boundary]
k2.G3 = 1
";

    #[test]
    fn minimal_config_parses() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(
            c.domain,
            DomainConfig::Interval {
                n: 64,
                left: BoundaryLabel::Gamma0,
                right: BoundaryLabel::Gamma3
            }
        );
        assert_eq!(c.boundary.k2[&BoundaryLabel::Gamma3], Expr::Num(1.0));
        assert!(c.simulation.is_none());
        assert_eq!(c.spectral, SpectralConfig::default());
    }

    #[test]
    fn negative_damping_is_diagnosed() {
        let text = MINIMAL.replace("k2.G3 = 1", "k2.G3 = -1");
        let errs = parse_config(&text).unwrap_err();
        assert_eq!(errs.0.len(), 1);
        assert_eq!(errs.0[0].line, 12);
        assert!(errs.0[0].message.contains("nonnegative"), "{}", errs);
    }

    #[test]
    fn degenerate_energy_norm_is_diagnosed() {
        let text = MINIMAL.replace("left = G0", "left = G1");
        let errs = parse_config(&text).unwrap_err();
        assert!(errs.to_string().contains("degenerate energy norm"), "{errs}");
    }

    #[test]
    fn unknown_keys_and_sections() {
        let text = format!("{MINIMAL}\n[spectral]\ncolour = red\n[plots]\nx = 1\n");
        let errs = parse_config(&text).unwrap_err();
        let msgs: Vec<String> = errs.0.iter().map(|d| d.to_string()).collect();
        assert!(msgs.iter().any(|m| m.contains("unknown key `colour`")), "{msgs:?}");
        assert!(msgs.iter().any(|m| m.contains("unknown section `[plots]`")), "{msgs:?}");
    }

    #[test]
    fn type_mismatch() {
        let text = MINIMAL.replace("n = 64", "n = sixty");
        let errs = parse_config(&text).unwrap_err();
        assert_eq!(errs.0[0].line, 3);
    }

    #[test]
    fn label_must_exist_and_carry_coefficient() {
        let text = MINIMAL.replace("k2.G3 = 1", "k2.G4 = 1");
        let errs = parse_config(&text).unwrap_err();
        assert!(errs.to_string().contains("not present"), "{errs}");
        let text = MINIMAL.replace("k2.G3 = 1", "k1.G3 = 1");
        let errs = parse_config(&text).unwrap_err();
        assert!(errs.to_string().contains("does not act on G3"), "{errs}");
    }

    #[test]
    fn simulation_requires_positive_steps() {
        let text = format!("{MINIMAL}\n[simulation]\nt_end = 1\ndt = 0\n");
        assert!(parse_config(&text).is_err());
        let text = format!("{MINIMAL}\n[simulation]\nt_end = 1\ndt = 0.01\nw0 = x*(1-x)\n");
        let c = parse_config(&text).unwrap();
        let s = c.simulation.unwrap();
        assert_eq!(s.dt, 0.01);
        assert_eq!(s.w0.eval([0.5, 0.0]), 0.25);
    }

    #[test]
    fn rectangle_with_split_side() {
        let text = "\
[domain]
dim = 2
nx = 4
ny = 4
bottom = G1
right = G3:0-0.5, G4:0.5-1
top = G1
left = G0
[coefficients]
T = 2, 0.5, 1
[boundary]
k2.G3 = 1
k1.G4 = 2
k2.G4 = 1 + y
[helmholtz]
f = x, y
";
        let c = parse_config(text).unwrap();
        let (mesh, coeffs) = c.build_model().unwrap();
        assert_eq!(mesh.n_cells(), 32);
        assert_eq!(coeffs.modulus[0], Tensor::from_2x2(2.0, 0.5, 0.5, 1.0));
        let back = parse_config(&c.to_string()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn uncovered_side_is_diagnosed() {
        let text = "[domain]\ndim = 2\nnx = 2\nny = 2\nbottom = G0\nright = G1\ntop = G1:0-0.5\nleft = G1\n";
        let errs = parse_config(text).unwrap_err();
        assert!(errs.to_string().contains("not assigned"), "{errs}");
    }

    #[test]
    fn print_parse_round_trip() {
        let text = format!(
            "{MINIMAL}a = 0.5*x\n[simulation]\nt_end = 2\ndt = 0.001\nw0 = x*(1 - x)\n[spectral]\naxis_tol = 1e-7\nwant_vectors = false\nsizes = 32,64\n[output]\ndirectory = /tmp/run\n"
        );
        let text = text.replace("[boundary]\nk2.G3 = 1\na = 0.5*x", "[boundary]\nk2.G3 = 1\n[coefficients]\na = 0.5*x");
        let c = parse_config(&text);
        // duplicate [coefficients] is an error; use a single section instead
        assert!(c.is_err());
        let text = MINIMAL.replace("rho = 1", "rho = 1\na = 0.5*x")
            + "[simulation]\nt_end = 2\ndt = 0.001\nw0 = x*(1 - x)\n[spectral]\naxis_tol = 1e-7\nwant_vectors = false\nsizes = 32,64\n[output]\ndirectory = /tmp/run\n";
        let c = parse_config(&text).unwrap();
        assert!(c.has_perturbation());
        assert_eq!(parse_config(&c.to_string()).unwrap(), c);
    }
}
