//! Experiment configuration: a flat key-value text format (one `key = value`
//! per line, `#` comments) whose structured values (Young function, grid
//! functions, sparse family) are inline JSON, mirroring the file formats of
//! the young/grid/sparse modules. Inline CLI flags override file values.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::numeric::splitmix64;
use crate::sparse::{generate_sparse, GenerateParams, SparseFamily};
use crate::young::{YoungFunction, YoungKind};

/// Which maximal function carves the removal set out of the exceptional set:
/// the fractional M_alpha (default; makes the cube-elimination step valid for
/// alpha > 0) or the plain M.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RemovalMode {
    #[default]
    FracMaximal,
    PlainMaximal,
}

/// Young-function specification as it appears in config files:
/// `{ "kind": "power"|"loglog"|"linear"|"table", "p":, "delta":, "table": }`.
#[derive(Debug, Clone, Deserialize)]
pub struct YoungSpec {
    pub kind: String,
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub table: Option<Vec<(f64, f64)>>,
}

impl YoungSpec {
    pub fn parse(json: &str) -> Result<Self> {
        serde_json::from_str(json)
            .map_err(|e| Error::parse(format!("bad young spec {json:?}: {e}")))
    }

    pub fn build(&self) -> Result<YoungFunction> {
        match self.kind.as_str() {
            "power" => {
                let p = self
                    .p
                    .ok_or_else(|| Error::parse("young kind \"power\" requires \"p\""))?;
                YoungFunction::power(p)
            }
            "loglog" => {
                let delta = self
                    .delta
                    .ok_or_else(|| Error::parse("young kind \"loglog\" requires \"delta\""))?;
                YoungFunction::loglog(delta)
            }
            "linear" => Ok(YoungFunction::linear()),
            "table" => {
                let knots = self
                    .table
                    .clone()
                    .ok_or_else(|| Error::parse("young kind \"table\" requires \"table\""))?;
                YoungFunction::table(knots)
            }
            other => Err(Error::parse(format!("unknown young kind {other:?}"))),
        }
    }

    pub fn canonical_json(&self) -> String {
        match self.kind.as_str() {
            "power" => format!(
                "{{\"kind\":\"power\",\"p\":{}}}",
                crate::report::fmt_f64(self.p.unwrap_or(f64::NAN))
            ),
            "loglog" => format!(
                "{{\"kind\":\"loglog\",\"delta\":{}}}",
                crate::report::fmt_f64(self.delta.unwrap_or(f64::NAN))
            ),
            "linear" => "{\"kind\":\"linear\"}".to_string(),
            _ => {
                let knots = self
                    .table
                    .as_deref()
                    .unwrap_or(&[])
                    .iter()
                    .map(|(t, v)| {
                        format!(
                            "[{},{}]",
                            crate::report::fmt_f64(*t),
                            crate::report::fmt_f64(*v)
                        )
                    })
                    .collect::<Vec<_>>()
                    .join(",");
                format!("{{\"kind\":\"table\",\"table\":[{knots}]}}")
            }
        }
    }

    pub fn describe_kind(kind: &YoungKind) -> YoungSpec {
        match kind {
            YoungKind::Power { p } => YoungSpec {
                kind: "power".into(),
                p: Some(*p),
                delta: None,
                table: None,
            },
            YoungKind::LogLog { delta } => YoungSpec {
                kind: "loglog".into(),
                p: None,
                delta: Some(*delta),
                table: None,
            },
            YoungKind::Linear => YoungSpec {
                kind: "linear".into(),
                p: None,
                delta: None,
                table: None,
            },
            YoungKind::Table { knots } => YoungSpec {
                kind: "table".into(),
                p: None,
                delta: None,
                table: Some(knots.clone()),
            },
        }
    }
}

/// Grid-function specification: inline values, a named generator, or a file
/// in the grid module's text format.
#[derive(Debug, Clone)]
pub enum GridFnSpec {
    Inline {
        d: usize,
        level: u32,
        values: Vec<f64>,
    },
    Generator {
        kind: String,
        seed: Option<u64>,
        lo: f64,
        hi: f64,
        cell: Option<u32>,
        height: f64,
        floor: f64,
        value: f64,
    },
    File(PathBuf),
}

#[derive(Debug, Clone, Default, Deserialize)]
struct RawGridFnParams {
    #[serde(default)]
    lo: Option<f64>,
    #[serde(default)]
    hi: Option<f64>,
    #[serde(default)]
    cell: Option<u32>,
    #[serde(default)]
    height: Option<f64>,
    #[serde(default)]
    floor: Option<f64>,
    #[serde(default)]
    value: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
struct RawGridFnSpec {
    #[serde(default)]
    d: Option<usize>,
    #[serde(default, rename = "L")]
    level: Option<u32>,
    #[serde(default)]
    values: Option<Vec<f64>>,
    #[serde(default)]
    generator: Option<String>,
    #[serde(default)]
    seed: Option<u64>,
    /// generator parameters, either nested or at the top level
    #[serde(default)]
    params: Option<RawGridFnParams>,
    #[serde(flatten)]
    flat: RawGridFnParams,
    #[serde(default)]
    file: Option<String>,
}

impl GridFnSpec {
    pub fn parse(json: &str) -> Result<Self> {
        let raw: RawGridFnSpec = serde_json::from_str(json)
            .map_err(|e| Error::parse(format!("bad grid-function spec {json:?}: {e}")))?;
        if let Some(file) = raw.file {
            return Ok(GridFnSpec::File(PathBuf::from(file)));
        }
        if let Some(values) = raw.values {
            let d = raw
                .d
                .ok_or_else(|| Error::parse("inline grid function requires \"d\""))?;
            let level = raw
                .level
                .ok_or_else(|| Error::parse("inline grid function requires \"L\""))?;
            return Ok(GridFnSpec::Inline { d, level, values });
        }
        let kind = raw
            .generator
            .ok_or_else(|| Error::parse("grid-function spec needs \"values\", \"generator\" or \"file\""))?;
        let nested = raw.params.unwrap_or_default();
        let flat = raw.flat;
        Ok(GridFnSpec::Generator {
            kind,
            seed: raw.seed,
            lo: nested.lo.or(flat.lo).unwrap_or(0.0),
            hi: nested.hi.or(flat.hi).unwrap_or(1.0),
            cell: nested.cell.or(flat.cell),
            height: nested.height.or(flat.height).unwrap_or(1.0),
            floor: nested.floor.or(flat.floor).unwrap_or(0.0),
            value: nested.value.or(flat.value).unwrap_or(1.0),
        })
    }

    /// Build the function on `grid`; `fallback_seed` feeds seedless
    /// generators (per-trial derivation).
    pub fn materialize(&self, grid: Grid, fallback_seed: u64) -> Result<GridFunction> {
        match self {
            GridFnSpec::Inline { d, level, values } => {
                let own = Grid::new(*d, *level)?;
                if own != grid {
                    return Err(Error::GridMismatch {
                        expected_d: grid.dim(),
                        expected_level: grid.finest_level(),
                        got_d: *d,
                        got_level: *level,
                    });
                }
                GridFunction::new(own, values.clone())
            }
            GridFnSpec::Generator {
                kind,
                seed,
                lo,
                hi,
                cell,
                height,
                floor,
                value,
            } => {
                let seed = seed.unwrap_or(fallback_seed);
                match kind.as_str() {
                    "random-uniform" => GridFunction::random_uniform(grid, seed, *lo, *hi),
                    "spike" => {
                        let cell = cell.unwrap_or_else(|| {
                            (splitmix64(seed) % grid.cell_count() as u64) as u32
                        });
                        GridFunction::spike(grid, cell, *height, *floor)
                    }
                    "constant" => GridFunction::constant(grid, *value),
                    other => Err(Error::parse(format!("unknown generator {other:?}"))),
                }
            }
            GridFnSpec::File(path) => {
                let text = fs::read_to_string(path)?;
                let f = GridFunction::from_text(&text)?;
                if f.grid() != grid {
                    return Err(Error::GridMismatch {
                        expected_d: grid.dim(),
                        expected_level: grid.finest_level(),
                        got_d: f.grid().dim(),
                        got_level: f.grid().finest_level(),
                    });
                }
                Ok(f)
            }
        }
    }

    pub fn canonical_json(&self) -> String {
        match self {
            GridFnSpec::Inline { d, level, values } => format!(
                "{{\"d\":{d},\"L\":{level},\"values\":[{}]}}",
                values
                    .iter()
                    .map(|v| crate::report::fmt_f64(*v))
                    .collect::<Vec<_>>()
                    .join(",")
            ),
            GridFnSpec::Generator { kind, seed, .. } => match seed {
                Some(s) => format!("{{\"generator\":\"{kind}\",\"seed\":{s}}}"),
                None => format!("{{\"generator\":\"{kind}\"}}"),
            },
            GridFnSpec::File(p) => format!("{{\"file\":\"{}\"}}", p.display()),
        }
    }
}

/// Sparse-family source: an explicit file or generator parameters (seedless
/// generators get per-trial derived seeds).
#[derive(Debug, Clone)]
pub enum SparseSpec {
    File(PathBuf),
    Generate {
        seed: Option<u64>,
        lambda0: f64,
        n_regular: u32,
        level_gap: u32,
        target_size: usize,
    },
}

#[derive(Debug, Clone, Deserialize)]
struct RawSparseSpec {
    #[serde(default)]
    file: Option<String>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    lambda0: Option<f64>,
    #[serde(default)]
    n: Option<u32>,
    #[serde(default)]
    level_gap: Option<u32>,
    #[serde(default)]
    target_size: Option<usize>,
}

impl SparseSpec {
    pub fn parse(json: &str) -> Result<Self> {
        let raw: RawSparseSpec = serde_json::from_str(json)
            .map_err(|e| Error::parse(format!("bad sparse spec {json:?}: {e}")))?;
        if let Some(file) = raw.file {
            return Ok(SparseSpec::File(PathBuf::from(file)));
        }
        Ok(SparseSpec::Generate {
            seed: raw.seed,
            lambda0: raw
                .lambda0
                .ok_or_else(|| Error::parse("sparse generator requires \"lambda0\""))?,
            n_regular: raw
                .n
                .ok_or_else(|| Error::parse("sparse generator requires \"n\""))?,
            level_gap: raw.level_gap.unwrap_or(2),
            target_size: raw
                .target_size
                .ok_or_else(|| Error::parse("sparse generator requires \"target_size\""))?,
        })
    }

    pub fn materialize(&self, grid: Grid, fallback_seed: u64) -> Result<SparseFamily> {
        match self {
            SparseSpec::File(path) => {
                let text = fs::read_to_string(path)?;
                let fam = SparseFamily::from_text(&text)?;
                if fam.grid() != grid {
                    return Err(Error::GridMismatch {
                        expected_d: grid.dim(),
                        expected_level: grid.finest_level(),
                        got_d: fam.grid().dim(),
                        got_level: fam.grid().finest_level(),
                    });
                }
                Ok(fam)
            }
            SparseSpec::Generate {
                seed,
                lambda0,
                n_regular,
                level_gap,
                target_size,
            } => Ok(generate_sparse(&GenerateParams {
                seed: seed.unwrap_or(fallback_seed),
                d: grid.dim(),
                level: grid.finest_level(),
                lambda0: *lambda0,
                n_regular: *n_regular,
                level_gap: *level_gap,
                target_size: *target_size,
            })?
            .family),
        }
    }

    pub fn lambda0(&self) -> Option<f64> {
        match self {
            SparseSpec::File(_) => None,
            SparseSpec::Generate { lambda0, .. } => Some(*lambda0),
        }
    }

    pub fn canonical_json(&self) -> String {
        match self {
            SparseSpec::File(p) => format!("{{\"file\":\"{}\"}}", p.display()),
            SparseSpec::Generate {
                seed,
                lambda0,
                n_regular,
                level_gap,
                target_size,
            } => {
                let seed_part = match seed {
                    Some(s) => format!("\"seed\":{s},"),
                    None => String::new(),
                };
                format!(
                    "{{{seed_part}\"lambda0\":{},\"n\":{n_regular},\"level_gap\":{level_gap},\"target_size\":{target_size}}}",
                    crate::report::fmt_f64(*lambda0)
                )
            }
        }
    }
}

/// Full experiment configuration shared by the weaktype and sanity commands.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub d: usize,
    pub level: u32,
    pub alpha: f64,
    pub nu: f64,
    pub lambda1: f64,
    pub trials: usize,
    pub seed: u64,
    pub young: YoungSpec,
    pub f_spec: GridFnSpec,
    pub w_spec: GridFnSpec,
    pub sparse: SparseSpec,
    pub removal: RemovalMode,
    pub out_json: Option<PathBuf>,
    pub out_csv: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.d, self.level)
    }

    /// Defaults chosen so the parameter conditions of the layer estimates
    /// hold out of the box: Lambda1 = 4 and lambda0 small enough per spec.
    pub fn default_shell() -> Self {
        ExperimentConfig {
            d: 1,
            level: 10,
            alpha: 0.0,
            nu: 1.0,
            lambda1: 4.0,
            trials: 1,
            seed: 0,
            young: YoungSpec {
                kind: "loglog".into(),
                p: None,
                delta: Some(1.0),
                table: None,
            },
            f_spec: GridFnSpec::Generator {
                kind: "random-uniform".into(),
                seed: None,
                lo: 0.0,
                hi: 1.0,
                cell: None,
                height: 1.0,
                floor: 0.0,
                value: 1.0,
            },
            w_spec: GridFnSpec::Generator {
                kind: "random-uniform".into(),
                seed: None,
                lo: 0.0,
                hi: 1.0,
                cell: None,
                height: 1.0,
                floor: 0.0,
                value: 1.0,
            },
            sparse: SparseSpec::Generate {
                seed: None,
                lambda0: 0.125,
                n_regular: 2,
                level_gap: 4,
                target_size: 12,
            },
            removal: RemovalMode::FracMaximal,
            out_json: None,
            out_csv: None,
        }
    }
}

/// Parsed flat key-value file. Duplicate keys are rejected.
#[derive(Debug, Clone, Default)]
pub struct FlatConfig {
    entries: BTreeMap<String, String>,
}

impl FlatConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::parse(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if entries.insert(key.clone(), value).is_some() {
                return Err(Error::parse(format!(
                    "line {}: duplicate key {key:?}",
                    lineno + 1
                )));
            }
        }
        Ok(FlatConfig { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| {
            Error::parse(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }

    pub fn get_parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| Error::parse(format!("bad value for {key:?}: {e}"))),
        }
    }

    /// Overlay onto a base config. Recognized keys: d, l, alpha, nu, lambda1,
    /// trials, seed, young, f, w, sparse, removal, out_json, out_csv.
    pub fn apply_to(&self, cfg: &mut ExperimentConfig) -> Result<()> {
        if let Some(v) = self.get_parsed::<usize>("d")? {
            cfg.d = v;
        }
        if let Some(v) = self.get_parsed::<u32>("l")? {
            cfg.level = v;
        }
        if let Some(v) = self.get_parsed::<f64>("alpha")? {
            cfg.alpha = v;
        }
        if let Some(v) = self.get_parsed::<f64>("nu")? {
            cfg.nu = v;
        }
        if let Some(v) = self.get_parsed::<f64>("lambda1")? {
            cfg.lambda1 = v;
        }
        if let Some(v) = self.get_parsed::<usize>("trials")? {
            cfg.trials = v;
        }
        if let Some(v) = self.get_parsed::<u64>("seed")? {
            cfg.seed = v;
        }
        if let Some(v) = self.get("young") {
            cfg.young = YoungSpec::parse(v)?;
        }
        if let Some(v) = self.get("f") {
            cfg.f_spec = GridFnSpec::parse(v)?;
        }
        if let Some(v) = self.get("w") {
            cfg.w_spec = GridFnSpec::parse(v)?;
        }
        if let Some(v) = self.get("sparse") {
            cfg.sparse = SparseSpec::parse(v)?;
        }
        if let Some(v) = self.get("removal") {
            cfg.removal = parse_removal(v)?;
        }
        if let Some(v) = self.get("out_json") {
            cfg.out_json = Some(PathBuf::from(v));
        }
        if let Some(v) = self.get("out_csv") {
            cfg.out_csv = Some(PathBuf::from(v));
        }
        Ok(())
    }
}

pub fn parse_removal(value: &str) -> Result<RemovalMode> {
    match value {
        "frac" => Ok(RemovalMode::FracMaximal),
        "plain" => Ok(RemovalMode::PlainMaximal),
        other => Err(Error::parse(format!(
            "removal mode must be \"frac\" or \"plain\", got {other:?}"
        ))),
    }
}

/// Per-trial seed derivation: stateless, so trials can run in parallel in any
/// order and still agree bit-for-bit.
pub fn trial_seed(master: u64, trial: usize) -> u64 {
    splitmix64(master ^ splitmix64(trial as u64))
}

pub fn derived_seed(base: u64, tag: u64) -> u64 {
    splitmix64(base ^ tag)
}
