//! Line-oriented `key = value` configuration with `[section]` headers.
//!
//! ```text
//! [geometry]
//! dim = 2
//! omega = -1, 1
//! [regime]
//! kind = finite
//! q = 1
//! ```
//!
//! `#` starts a comment. Keys are unique across sections, so errors name the
//! bare key.

use std::fmt::Write as _;
use std::path::PathBuf;

use thiserror::Error;

use crate::eigensolve::EigenOptions;
use crate::geometry::{make_geometry, CrossSection, Regime};
use crate::study::{MeshPolicy, StudyConfig, Tolerances};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{key}: {message}")]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(key: &str, message: impl Into<String>) -> Self {
        Self { key: key.to_string(), message: message.into() }
    }

    pub fn required(key: &str) -> Self {
        Self::new(key, "required")
    }
}

/// Section and key layout; every key belongs to exactly one section.
const LAYOUT: &[(&str, &[&str])] = &[
    ("geometry", &["dim", "omega"]),
    ("regime", &["kind", "q"]),
    ("schedule", &["r0", "rho", "first", "count"]),
    ("study", &["k"]),
    ("mesh", &["min_cells", "offset", "max_cells", "grading_ratio"]),
    ("solver", &["tol", "max_iter", "block", "depth", "seed"]),
    ("tolerances", &["bound_slack", "window", "orthonormality", "final_error"]),
    ("output", &["dir", "emit_svg"]),
];

/// Parsed `(section, key, value)` triples in file order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RawConfig {
    pub entries: Vec<(String, String, String)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut section = String::new();
        let mut entries: Vec<(String, String, String)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                if !LAYOUT.iter().any(|(s, _)| *s == name) {
                    return Err(ConfigError::new(name, format!("unknown section (line {})", lineno + 1)));
                }
                section = name.to_string();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::new(line, format!("expected `key = value` (line {})", lineno + 1)));
            };
            let (key, value) = (key.trim(), value.trim());
            let Some((home, _)) = LAYOUT.iter().find(|(_, keys)| keys.contains(&key)) else {
                return Err(ConfigError::new(key, "unknown key"));
            };
            if section != *home {
                return Err(ConfigError::new(key, format!("belongs in [{home}]")));
            }
            if entries.iter().any(|(_, k, _)| k == key) {
                return Err(ConfigError::new(key, "given twice"));
            }
            entries.push((section.clone(), key.to_string(), value.to_string()));
        }
        Ok(Self { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(_, k, _)| k == key).map(|(_, _, v)| v.as_str())
    }
}

fn parse_value<V: std::str::FromStr>(raw: &RawConfig, key: &str, default: V) -> Result<V, ConfigError> {
    match raw.get(key) {
        None => Ok(default),
        Some(v) => v.parse().map_err(|_| ConfigError::new(key, format!("cannot parse `{v}`"))),
    }
}

/// Comma-separated numbers.
pub fn parse_list(key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    value
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| ConfigError::new(key, format!("cannot parse `{}`", t.trim()))))
        .collect()
}

/// `omega` for a dimension: `c, d` when `dim = 2`, half-widths `wx, wy` when `dim = 3`.
pub fn parse_omega(dim: usize, value: &str) -> Result<CrossSection<f64>, ConfigError> {
    let v = parse_list("omega", value)?;
    let omega = match (dim, v.as_slice()) {
        (2, &[c, d]) => CrossSection::Interval { c, d },
        (3, &[wx, wy]) => CrossSection::Rect { wx, wy },
        (2 | 3, _) => return Err(ConfigError::new("omega", "expected two comma-separated numbers")),
        _ => return Err(ConfigError::new("dim", format!("{dim} is not 2 or 3"))),
    };
    make_geometry(dim, omega).map_err(|e| ConfigError::new("omega", e.to_string()))?;
    Ok(omega)
}

pub fn parse_regime(kind: &str, q: Option<f64>) -> Result<Regime<f64>, ConfigError> {
    match kind {
        "finite" => {
            let q = q.ok_or_else(|| ConfigError::required("q"))?;
            if !(q > 0.0 && q.is_finite()) {
                return Err(ConfigError::new("q", format!("{q} is not a positive number")));
            }
            Ok(Regime::Finite(q))
        }
        "zero" => Ok(Regime::Zero),
        "infinite" => Ok(Regime::Infinite),
        other => Err(ConfigError::new("kind", format!("`{other}` is not finite, zero or infinite"))),
    }
}

/// A study run: what to compute and where to write it.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyFile {
    pub study: StudyConfig<f64>,
    pub output_dir: PathBuf,
    pub emit_svg: bool,
}

impl StudyFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::from_raw(&RawConfig::parse(text)?)
    }

    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        let base = StudyConfig::<f64>::default();
        let dim = parse_value(raw, "dim", 2usize)?;
        let omega = parse_omega(dim, raw.get("omega").ok_or_else(|| ConfigError::required("omega"))?)?;
        let kind = raw.get("kind").ok_or_else(|| ConfigError::required("kind"))?;
        let q = raw.get("q").map(|_| parse_value(raw, "q", 0.0)).transpose()?;
        let regime = parse_regime(kind, q)?;
        let solver = EigenOptions {
            tol: parse_value(raw, "tol", base.solver.tol)?,
            max_iter: parse_value(raw, "max_iter", base.solver.max_iter)?,
            block: parse_value(raw, "block", base.solver.block)?,
            depth: parse_value(raw, "depth", base.solver.depth)?,
            seed: parse_value(raw, "seed", base.solver.seed)?,
        };
        let mesh = MeshPolicy {
            min_cells: parse_value(raw, "min_cells", base.mesh.min_cells)?,
            offset: parse_value(raw, "offset", base.mesh.offset)?,
            max_cells: parse_value(raw, "max_cells", base.mesh.max_cells)?,
            grading_ratio: parse_value(raw, "grading_ratio", base.mesh.grading_ratio)?,
        };
        let t = base.tolerances;
        let tolerances = Tolerances {
            bound_slack: parse_value(raw, "bound_slack", t.bound_slack)?,
            window: parse_value(raw, "window", t.window)?,
            orthonormality: parse_value(raw, "orthonormality", t.orthonormality)?,
            final_error: parse_value(raw, "final_error", t.final_error)?,
        };
        let study = StudyConfig {
            dim,
            omega,
            regime,
            r0: parse_value(raw, "r0", base.r0)?,
            rho: parse_value(raw, "rho", base.rho)?,
            first: parse_value(raw, "first", base.first)?,
            count: parse_value(raw, "count", base.count)?,
            k: parse_value(raw, "k", base.k)?,
            mesh,
            solver,
            tolerances,
        };
        validate(&study)?;
        Ok(Self {
            study,
            output_dir: PathBuf::from(raw.get("dir").unwrap_or(".")),
            emit_svg: parse_value(raw, "emit_svg", false)?,
        })
    }

    /// Full listing with every key, in layout order.
    pub fn to_text(&self) -> String {
        let s = &self.study;
        let omega = match s.omega {
            CrossSection::Interval { c, d } => format!("{c}, {d}"),
            CrossSection::Rect { wx, wy } => format!("{wx}, {wy}"),
        };
        let mut out = String::new();
        let mut section = |name: &str, rows: &[(&str, String)]| {
            let _ = writeln!(out, "[{name}]");
            for (k, v) in rows {
                let _ = writeln!(out, "{k} = {v}");
            }
        };
        section("geometry", &[("dim", s.dim.to_string()), ("omega", omega)]);
        let mut regime = vec![("kind", s.regime.name().to_string())];
        if let Regime::Finite(q) = s.regime {
            regime.push(("q", q.to_string()));
        }
        section("regime", &regime);
        section(
            "schedule",
            &[("r0", s.r0.to_string()), ("rho", s.rho.to_string()), ("first", s.first.to_string()), ("count", s.count.to_string())],
        );
        section("study", &[("k", s.k.to_string())]);
        section(
            "mesh",
            &[
                ("min_cells", s.mesh.min_cells.to_string()),
                ("offset", s.mesh.offset.to_string()),
                ("max_cells", s.mesh.max_cells.to_string()),
                ("grading_ratio", s.mesh.grading_ratio.to_string()),
            ],
        );
        section(
            "solver",
            &[
                ("tol", s.solver.tol.to_string()),
                ("max_iter", s.solver.max_iter.to_string()),
                ("block", s.solver.block.to_string()),
                ("depth", s.solver.depth.to_string()),
                ("seed", s.solver.seed.to_string()),
            ],
        );
        let t = s.tolerances;
        section(
            "tolerances",
            &[
                ("bound_slack", t.bound_slack.to_string()),
                ("window", t.window.to_string()),
                ("orthonormality", t.orthonormality.to_string()),
                ("final_error", t.final_error.to_string()),
            ],
        );
        section(
            "output",
            &[("dir", self.output_dir.display().to_string()), ("emit_svg", self.emit_svg.to_string())],
        );
        out
    }
}

fn validate(s: &StudyConfig<f64>) -> Result<(), ConfigError> {
    if s.count == 0 {
        return Err(ConfigError::new("count", "empty schedule"));
    }
    if s.k == 0 {
        return Err(ConfigError::new("k", "must be at least 1"));
    }
    if !(s.r0 > 0.0 && s.r0 <= 1.0) {
        return Err(ConfigError::new("r0", "must lie in (0, 1]"));
    }
    if !(s.rho > 0.0 && s.rho < 1.0) {
        return Err(ConfigError::new("rho", "must lie in (0, 1)"));
    }
    if !(s.solver.tol > 0.0) {
        return Err(ConfigError::new("tol", "must be positive"));
    }
    if !(s.mesh.grading_ratio > 0.0 && s.mesh.grading_ratio <= 1.0) {
        return Err(ConfigError::new("grading_ratio", "must lie in (0, 1]"));
    }
    if s.mesh.min_cells == 0 {
        return Err(ConfigError::new("min_cells", "must be at least 1"));
    }
    s.schedule().map(|_| ()).map_err(|e| ConfigError::new("schedule", e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert_eq, prop_oneof, proptest, Just, Strategy};

    const MINIMAL: &str = "[geometry]\nomega = -1, 1\n[regime]\nkind = finite\nq = 1\n";

    #[test]
    fn minimal_file_uses_defaults() {
        let f = StudyFile::parse(MINIMAL).unwrap();
        assert_eq!(f.study, StudyConfig::default());
        assert!(!f.emit_svg);
    }

    #[test]
    fn errors_name_the_key() {
        let e = StudyFile::parse("[regime]\nkind = zero\n").unwrap_err();
        assert_eq!(e.to_string(), "omega: required");
        let e = StudyFile::parse(&format!("{MINIMAL}[schedule]\ncount = 0\n")).unwrap_err();
        assert_eq!(e.key, "count");
        assert_eq!(StudyFile::parse("[geometry]\nbogus = 1\n").unwrap_err().key, "bogus");
        assert_eq!(StudyFile::parse("[regime]\nomega = -1, 1\n").unwrap_err().key, "omega");
        assert_eq!(StudyFile::parse("[nowhere]\n").unwrap_err().key, "nowhere");
        let e = StudyFile::parse("[geometry]\nomega = -1, 1\n[regime]\nkind = finite\n").unwrap_err();
        assert_eq!(e.to_string(), "q: required");
        assert_eq!(StudyFile::parse("[geometry]\nomega = 1, 2\n[regime]\nkind = zero\n").unwrap_err().key, "omega");
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = "# study\n\n[geometry]  # the cross-section\nomega = -1, 2   # asymmetric\n[regime]\nkind = zero\n";
        let f = StudyFile::parse(text).unwrap();
        assert_eq!(f.study.omega, CrossSection::Interval { c: -1.0, d: 2.0 });
        assert_eq!(f.study.regime, Regime::Zero);
    }

    fn file_strategy() -> impl Strategy<Value = String> {
        let regime = prop_oneof![
            (0.05f64..20.0).prop_map(|q| format!("kind = finite\nq = {q}\n")),
            Just("kind = zero\n".to_string()),
            Just("kind = infinite\n".to_string()),
        ];
        let omega = prop_oneof![
            (-3.0f64..-0.1, 0.1f64..3.0).prop_map(|(c, d)| format!("dim = 2\nomega = {c}, {d}\n")),
            (0.1f64..2.0, 0.1f64..2.0).prop_map(|(a, b)| format!("dim = 3\nomega = {a},{b}\n")),
        ];
        (omega, regime, 1usize..6, 1usize..4, 0.3f64..0.7, 1usize..9, 1e-12f64..1e-6, proptest::bool::ANY).prop_map(
            |(omega, regime, first, count, rho, k, tol, svg)| {
                format!(
                    "[geometry]\n{omega}[regime]\n{regime}[schedule]\nfirst = {first}\ncount = {count}\nrho = {rho}\n\
                     [study]\nk = {k}\n[solver]\ntol = {tol}\n[output]\ndir = out/run\nemit_svg = {svg}\n"
                )
            },
        )
    }

    proptest! {
        #[test]
        fn round_trip(text in file_strategy()) {
            // Some generated schedules leave the regime window; those must fail the same way twice.
            match StudyFile::parse(&text) {
                Ok(parsed) => {
                    let again = StudyFile::parse(&parsed.to_text()).unwrap();
                    prop_assert_eq!(&again, &parsed);
                    prop_assert_eq!(again.to_text(), parsed.to_text());
                }
                Err(e) => prop_assert_eq!(StudyFile::parse(&text).unwrap_err(), e),
            }
        }
    }
}
