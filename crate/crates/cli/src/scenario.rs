//! Scenario files: `[section]` headers followed by `key = value` lines.
//!
//! ```text
//! [domain]
//! kind = box
//! extents = 1, 1, 1
//! divisions = 6
//!
//! [coefficient]
//! kind = isotropic
//! value = 1.0
//!
//! [boundary]
//! kind = multiplication
//! beta = -0.05
//!
//! [checks]
//! list = accretivity, ultracontractivity
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: [{section}] {key}: {msg}")]
    Value { line: usize, section: String, key: String, msg: String },
    #[error("[{section}] is missing `{key}`")]
    Missing { section: String, key: String },
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Check {
    Accretivity,
    Continuity,
    Nash,
    Contractivity,
    Positivity,
    Domination,
    Ultracontractivity,
    EventualPositivity,
}

impl Check {
    pub const ALL: [Check; 8] = [
        Check::Accretivity,
        Check::Continuity,
        Check::Nash,
        Check::Contractivity,
        Check::Positivity,
        Check::Domination,
        Check::Ultracontractivity,
        Check::EventualPositivity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Accretivity => "accretivity",
            Check::Continuity => "continuity",
            Check::Nash => "nash",
            Check::Contractivity => "contractivity",
            Check::Positivity => "positivity",
            Check::Domination => "domination",
            Check::Ultracontractivity => "ultracontractivity",
            Check::EventualPositivity => "eventual_positivity",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    Box { extents: Vec<f64>, divisions: Vec<usize> },
    LShape { dim: usize, divisions: usize },
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Box { extents, .. } => extents.len(),
            Domain::LShape { dim, .. } => *dim,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Coefficient {
    Isotropic(f64),
    Diagonal(Vec<f64>),
    /// Row-major `d × d` entries. With `split`, cells whose centroid has
    /// coordinate `axis` below `at` use `entries`, the rest use `upper`.
    Matrix { entries: Vec<f64>, split: Option<Split> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub axis: usize,
    pub at: f64,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelChoice {
    Constant,
    Gaussian { width: f64 },
    Cosine,
    Antisymmetric,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Scale {
    Absolute(f64),
    /// Fraction of the admissibility budget `α − 1`.
    Fill(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Boundary {
    Zero,
    Multiplication(f64),
    Kernel { shape: KernelChoice, scale: Scale },
    /// Square matrix read from a whitespace-separated text file.
    Dense(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    pub t_max: f64,
    pub ratio: f64,
    pub count: usize,
}

impl Default for TimeGrid {
    fn default() -> Self {
        TimeGrid { t_max: 1.0, ratio: 0.5f64.sqrt(), count: 24 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub domain: Domain,
    pub coefficient: Coefficient,
    /// Requested `α`; the certified value of the field wins.
    pub alpha: Option<f64>,
    pub boundary: Boundary,
    pub checks: Vec<Check>,
    pub time_grid: TimeGrid,
    pub samples: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub allow_low_dim: bool,
}

struct Entry {
    line: usize,
    value: String,
}

type Sections = BTreeMap<String, BTreeMap<String, Entry>>;

const SECTIONS: [&str; 6] = ["domain", "coefficient", "boundary", "checks", "time_grid", "run"];

fn tokenize(text: &str) -> Result<Sections, ScenarioError> {
    let mut sections = Sections::new();
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(rest) = body.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ScenarioError::Syntax { line, msg: "unterminated section header".into() })?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(ScenarioError::Syntax { line, msg: format!("unknown section [{name}]") });
            }
            if sections.contains_key(name) {
                return Err(ScenarioError::Syntax { line, msg: format!("duplicate section [{name}]") });
            }
            sections.insert(name.to_string(), BTreeMap::new());
            current = Some(name.to_string());
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| ScenarioError::Syntax { line, msg: format!("expected `key = value`, got `{body}`") })?;
        let section = current
            .as_ref()
            .ok_or_else(|| ScenarioError::Syntax { line, msg: "key before any section header".into() })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(ScenarioError::Syntax { line, msg: "empty key".into() });
        }
        let map = sections.get_mut(section).expect("section inserted above");
        if map.contains_key(key) {
            return Err(ScenarioError::Syntax { line, msg: format!("duplicate key `{key}`") });
        }
        map.insert(key.to_string(), Entry { line, value: value.trim().to_string() });
    }
    Ok(sections)
}

/// Typed access to one section, remembering which keys were used.
struct Section<'a> {
    name: &'a str,
    map: Option<&'a BTreeMap<String, Entry>>,
    used: Vec<&'a str>,
}

impl<'a> Section<'a> {
    fn new(sections: &'a Sections, name: &'a str) -> Self {
        Section { name, map: sections.get(name), used: Vec::new() }
    }

    fn raw(&mut self, key: &'a str) -> Option<&'a Entry> {
        self.used.push(key);
        self.map.and_then(|m| m.get(key))
    }

    fn err(&self, e: &Entry, key: &str, msg: impl Into<String>) -> ScenarioError {
        ScenarioError::Value { line: e.line, section: self.name.into(), key: key.into(), msg: msg.into() }
    }

    fn missing(&self, key: &str) -> ScenarioError {
        ScenarioError::Missing { section: self.name.into(), key: key.into() }
    }

    fn text(&mut self, key: &'a str) -> Option<String> {
        self.raw(key).map(|e| e.value.clone())
    }

    fn required_text(&mut self, key: &'a str) -> Result<String, ScenarioError> {
        self.text(key).ok_or_else(|| self.missing(key))
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &'a str) -> Result<Option<T>, ScenarioError> {
        match self.raw(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<T>()
                .map(Some)
                .map_err(|_| self.err(e, key, format!("cannot parse `{}`", e.value))),
        }
    }

    fn required<T: std::str::FromStr>(&mut self, key: &'a str) -> Result<T, ScenarioError> {
        self.parsed(key)?.ok_or_else(|| self.missing(key))
    }

    fn list<T: std::str::FromStr>(&mut self, key: &'a str) -> Result<Option<Vec<T>>, ScenarioError> {
        let Some(e) = self.raw(key) else { return Ok(None) };
        e.value
            .split(',')
            .map(|p| p.trim().parse::<T>().map_err(|_| self.err(e, key, format!("cannot parse list item `{}`", p.trim()))))
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    fn required_list<T: std::str::FromStr>(&mut self, key: &'a str) -> Result<Vec<T>, ScenarioError> {
        self.list(key)?.ok_or_else(|| self.missing(key))
    }

    fn line_of(&self, key: &str) -> usize {
        self.map.and_then(|m| m.get(key)).map_or(0, |e| e.line)
    }

    /// Reject keys that no accessor asked for.
    fn finish(self) -> Result<(), ScenarioError> {
        if let Some(map) = self.map {
            for (k, e) in map {
                if !self.used.contains(&k.as_str()) {
                    return Err(ScenarioError::Value {
                        line: e.line,
                        section: self.name.into(),
                        key: k.clone(),
                        msg: "unknown key".into(),
                    });
                }
            }
        }
        Ok(())
    }
}

fn parse_domain(s: &mut Section) -> Result<Domain, ScenarioError> {
    let kind = s.required_text("kind")?;
    let domain = match kind.as_str() {
        "box" => {
            let extents: Vec<f64> = s.required_list("extents")?;
            let mut divisions: Vec<usize> = s.required_list("divisions")?;
            if divisions.len() == 1 && extents.len() > 1 {
                divisions = vec![divisions[0]; extents.len()];
            }
            if let Some(dim) = s.parsed::<usize>("dim")? {
                if dim != extents.len() {
                    return Err(ScenarioError::Invalid(format!(
                        "[domain] dim = {dim} but {} extents given (line {})",
                        extents.len(),
                        s.line_of("dim")
                    )));
                }
            }
            Domain::Box { extents, divisions }
        }
        "lshape" => {
            let dim = s.required("dim")?;
            let divisions = s.required("divisions")?;
            Domain::LShape { dim, divisions }
        }
        other => {
            return Err(ScenarioError::Invalid(format!(
                "[domain] kind `{other}` on line {} is not box or lshape",
                s.line_of("kind")
            )))
        }
    };
    Ok(domain)
}

fn parse_coefficient(s: &mut Section, dim: usize) -> Result<(Coefficient, Option<f64>), ScenarioError> {
    let kind = s.required_text("kind")?;
    let coef = match kind.as_str() {
        "isotropic" => Coefficient::Isotropic(s.required("value")?),
        "diagonal" => Coefficient::Diagonal(s.required_list("values")?),
        "matrix" => {
            let entries: Vec<f64> = s.required_list("entries")?;
            let split = match s.parsed::<usize>("split_axis")? {
                None => None,
                Some(axis) => Some(Split { axis, at: s.required("split_at")?, upper: s.required_list("entries_upper")? }),
            };
            for v in std::iter::once(&entries).chain(split.as_ref().map(|sp| &sp.upper)) {
                if v.len() != dim * dim {
                    return Err(ScenarioError::Invalid(format!(
                        "[coefficient] expected {} matrix entries, got {}",
                        dim * dim,
                        v.len()
                    )));
                }
            }
            Coefficient::Matrix { entries, split }
        }
        other => {
            return Err(ScenarioError::Invalid(format!(
                "[coefficient] kind `{other}` on line {} is not isotropic, diagonal or matrix",
                s.line_of("kind")
            )))
        }
    };
    let alpha = s.parsed("alpha")?;
    Ok((coef, alpha))
}

fn parse_boundary(s: &mut Section, base: &Path) -> Result<Boundary, ScenarioError> {
    let kind = s.text("kind").unwrap_or_else(|| "zero".into());
    let b = match kind.as_str() {
        "zero" => Boundary::Zero,
        "multiplication" => Boundary::Multiplication(s.required("beta")?),
        "kernel" => {
            let shape = match s.required_text("shape")?.as_str() {
                "constant" => KernelChoice::Constant,
                "gaussian" => KernelChoice::Gaussian { width: s.required("width")? },
                "cosine" => KernelChoice::Cosine,
                "antisymmetric" => KernelChoice::Antisymmetric,
                other => {
                    return Err(ScenarioError::Invalid(format!(
                        "[boundary] shape `{other}` on line {} is unknown",
                        s.line_of("shape")
                    )))
                }
            };
            let scale = match (s.parsed("scale")?, s.parsed("fill")?) {
                (Some(x), None) => Scale::Absolute(x),
                (None, Some(f)) => Scale::Fill(f),
                (None, None) => return Err(s.missing("scale")),
                (Some(_), Some(_)) => {
                    return Err(ScenarioError::Invalid("[boundary] give either `scale` or `fill`, not both".into()))
                }
            };
            Boundary::Kernel { shape, scale }
        }
        "dense" => {
            let file = s.required_text("file")?;
            let path = base.join(&file);
            if !path.is_file() {
                return Err(ScenarioError::Invalid(format!(
                    "[boundary] file `{file}` on line {} does not exist",
                    s.line_of("file")
                )));
            }
            Boundary::Dense(path)
        }
        other => {
            return Err(ScenarioError::Invalid(format!(
                "[boundary] kind `{other}` on line {} is not zero, multiplication, kernel or dense",
                s.line_of("kind")
            )))
        }
    };
    Ok(b)
}

fn parse_checks(s: &mut Section) -> Result<Vec<Check>, ScenarioError> {
    let Some(list) = s.raw("list") else { return Err(s.missing("list")) };
    let mut checks = Vec::new();
    for item in list.value.split(',').map(str::trim).filter(|x| !x.is_empty()) {
        let c = Check::parse(item).ok_or_else(|| s.err(list, "list", format!("unknown check `{item}`")))?;
        if !checks.contains(&c) {
            checks.push(c);
        }
    }
    if checks.is_empty() {
        return Err(s.err(list, "list", "no checks requested"));
    }
    checks.sort();
    Ok(checks)
}

impl Scenario {
    /// `base` resolves relative file references (the scenario's directory).
    pub fn parse(text: &str, base: &Path) -> Result<Self, ScenarioError> {
        let sections = tokenize(text)?;

        let mut s = Section::new(&sections, "domain");
        let domain = parse_domain(&mut s)?;
        s.finish()?;

        let mut s = Section::new(&sections, "coefficient");
        let (coefficient, alpha) = parse_coefficient(&mut s, domain.dim())?;
        s.finish()?;

        let mut s = Section::new(&sections, "boundary");
        let boundary = parse_boundary(&mut s, base)?;
        s.finish()?;

        let mut s = Section::new(&sections, "checks");
        let checks = parse_checks(&mut s)?;
        s.finish()?;

        let mut s = Section::new(&sections, "time_grid");
        let d = TimeGrid::default();
        let time_grid = TimeGrid {
            t_max: s.parsed("t_max")?.unwrap_or(d.t_max),
            ratio: s.parsed("ratio")?.unwrap_or(d.ratio),
            count: s.parsed("count")?.unwrap_or(d.count),
        };
        s.finish()?;
        if !(time_grid.t_max > 0.0 && time_grid.ratio > 0.0 && time_grid.ratio < 1.0 && time_grid.count > 0) {
            return Err(ScenarioError::Invalid("[time_grid] needs t_max > 0, 0 < ratio < 1, count > 0".into()));
        }

        let mut s = Section::new(&sections, "run");
        let name = s.text("name").unwrap_or_else(|| "scenario".into());
        let samples = s.parsed("samples")?.unwrap_or(50);
        let seed = s.parsed("seed")?.unwrap_or(0);
        let output_dir = base.join(s.text("output_dir").unwrap_or_else(|| "robinlab-out".into()));
        let allow_low_dim = s.parsed("allow_low_dim")?.unwrap_or(false);
        s.finish()?;

        Ok(Scenario {
            name,
            domain,
            coefficient,
            alpha,
            boundary,
            checks,
            time_grid,
            samples,
            seed,
            output_dir,
            allow_low_dim,
        })
    }

    pub fn from_file(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ScenarioError::Io { path: path.display().to_string(), msg: e.to_string() })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }
}

/// Whitespace- or comma-separated square matrix, one row per line.
pub fn read_matrix(path: &Path) -> Result<Vec<Vec<f64>>, ScenarioError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ScenarioError::Io { path: path.display().to_string(), msg: e.to_string() })?;
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let row = body
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| ScenarioError::Syntax { line: idx + 1, msg: format!("bad number in {}", path.display()) })?;
        rows.push(row);
    }
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(ScenarioError::Invalid(format!("{} is not a square matrix", path.display())));
    }
    Ok(rows)
}
