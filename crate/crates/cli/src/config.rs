//! Experiment configuration: one TOML document per run, λ families in a
//! sidecar file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use carshift::hardyshift::ExponentialFamily;
use carshift::opalg::c;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("unknown experiment kind `{0}` (see `list`)")]
    UnknownKind(String),
    #[error("params.{field}: expected {expected}, got {actual}")]
    Field {
        field: String,
        expected: String,
        actual: String,
    },
    #[error("{path}:{line}: {message}")]
    Family {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

macro_rules! kinds {
    ($($variant:ident => $name:literal, $summary:literal;)*) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
        pub enum Kind {
            $(#[serde(rename = $name)] $variant,)*
        }

        impl Kind {
            pub const ALL: &'static [Kind] = &[$(Kind::$variant,)*];

            pub fn name(self) -> &'static str {
                match self { $(Kind::$variant => $name,)* }
            }

            pub fn summary(self) -> &'static str {
                match self { $(Kind::$variant => $summary,)* }
            }
        }

        impl FromStr for Kind {
            type Err = ConfigError;

            fn from_str(s: &str) -> Result<Self, ConfigError> {
                match s {
                    $($name => Ok(Kind::$variant),)*
                    other => Err(ConfigError::UnknownKind(other.to_string())),
                }
            }
        }
    };
}

kinds! {
    CarCheck => "car-check", "CAR anticommutators and ‖a(f)‖ = ‖f‖ on random vectors";
    QuasifreeVerify => "quasifree-verify", "determinant formula against the doubled representation; purification projection";
    ModularVerify => "modular-verify", "Tomita data against the closed-form modular involution and Δ spectrum";
    Innerness => "innerness", "‖R^{1/2}(1−R)^{1/2}(W − I)‖₂ over truncations";
    Conjugacy => "conjugacy", "‖R^{1/2}(1−R)^{1/2}(U_t − V_t)‖₂ for diagonal phase flows";
    Extension => "extension", "extension quantity against the Araki commutator on the stock families";
    Approx => "approx", "‖V_t − S_t‖₂ and the summed estimates against t";
    Blaschke => "blaschke", "|B(iy)| = 1 and the large-|λ| constant of 1 − B";
    Prop2 => "prop2", "compression defect against δ";
    DilationCheck => "dilation-check", "grid dilations: unitarity, compressions, approximation";
    Pipeline => "pipeline", "all stages for one λ family and R = νI";
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The parsed document. `params` is validated later against the kind's schema.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub params: toml::Table,
    /// Directory of the config file; sidecar paths resolve against it.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg: Self = toml::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.message().to_string(),
        })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    /// Deserializes `params` into the kind's schema.
    pub fn params<T: DeserializeOwned>(&self) -> Result<T, ConfigError> {
        serde_path_to_error::deserialize(toml::Value::Table(self.params.clone())).map_err(|e| {
            let path = e.path().to_string();
            schema_error(&path, &e.into_inner().to_string())
        })
    }

    pub fn require_seed(&self) -> Result<u64, ConfigError> {
        self.seed.ok_or_else(|| ConfigError::Field {
            field: "seed".into(),
            expected: "an explicit u64 seed (config or --seed)".into(),
            actual: "nothing".into(),
        })
    }

    pub fn resolve(&self, file: &Path) -> PathBuf {
        if file.is_absolute() {
            file.to_path_buf()
        } else {
            self.base_dir.join(file)
        }
    }

    /// The family named by `file`, or `{−1}` when absent.
    pub fn family(&self, file: Option<&PathBuf>) -> Result<ExponentialFamily, ConfigError> {
        match file {
            Some(p) => load_family(&self.resolve(p)),
            None => Ok(ExponentialFamily::with_auto_radius(vec![c(-1.0, 0.0)])),
        }
    }
}

/// Reshapes serde messages ("unknown field `x`, expected one of ...",
/// "invalid type: ..., expected ...") into field / expected / actual.
fn schema_error(path: &str, message: &str) -> ConfigError {
    let named = |m: &str| m.split('`').nth(1).unwrap_or("?").to_string();
    let (field, expected, actual) = if let Some(rest) = message.strip_prefix("unknown field") {
        let expected = rest.split_once("expected ").map(|(_, e)| e.trim()).unwrap_or("a known field");
        (named(message), expected.to_string(), "an unknown field".to_string())
    } else if message.starts_with("missing field") {
        (named(message), "a value".to_string(), "nothing".to_string())
    } else {
        let rest = message
            .strip_prefix("invalid type: ")
            .or_else(|| message.strip_prefix("invalid value: "))
            .unwrap_or(message);
        match rest.split_once(", expected ") {
            Some((actual, expected)) => (path.to_string(), expected.to_string(), actual.to_string()),
            None => (path.to_string(), "a valid value".to_string(), message.to_string()),
        }
    };
    let field = match (path, field.as_str()) {
        (".", f) | ("", f) => f.to_string(),
        (p, f) if f == p => f.to_string(),
        (p, f) => format!("{p}.{f}"),
    };
    ConfigError::Field { field, expected, actual }
}

/// Sidecar format: one `Re Im` pair per line, `#` starts a comment, and an
/// optional `radius r` line sets the counting radius (default: automatic).
pub fn parse_family(text: &str, path: &Path) -> Result<ExponentialFamily, ConfigError> {
    let err = |line: usize, message: String| ConfigError::Family {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lambdas = Vec::new();
    let mut radius = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let num = |s: &str| s.parse::<f64>().map_err(|_| err(i + 1, format!("`{s}` is not a number")));
        match fields.as_slice() {
            ["radius", r] => radius = Some(num(r)?),
            [re, im] => lambdas.push(c(num(re)?, num(im)?)),
            _ => return Err(err(i + 1, format!("expected `Re Im` or `radius r`, got `{line}`"))),
        }
    }
    Ok(match radius {
        Some(r) => ExponentialFamily::new(lambdas, r),
        None => ExponentialFamily::with_auto_radius(lambdas),
    })
}

pub fn load_family(path: &Path) -> Result<ExponentialFamily, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_family(&text, path)
}
