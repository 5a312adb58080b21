//! Flat `section.key = value` configuration with documented defaults and
//! environment overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

/// Environment variables `PHOTOLAB_<SECTION>__<KEY>` override file values.
pub const ENV_PREFIX: &str = "PHOTOLAB_";

/// Every recognized key, its default, and a one-line description.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("mesh.family", "icosphere", "icosphere | ellipsoid | torus | file"),
    ("mesh.subdivisions", "4", "icosphere/ellipsoid subdivision level"),
    ("mesh.a", "1", "ellipsoid semi-axis x"),
    ("mesh.b", "1", "ellipsoid semi-axis y"),
    ("mesh.c", "1.3", "ellipsoid semi-axis z"),
    ("mesh.major", "2", "torus core radius"),
    ("mesh.minor", "0.7", "torus tube radius"),
    ("mesh.nu", "48", "torus samples around the core circle"),
    ("mesh.nv", "24", "torus samples around the tube"),
    ("mesh.path", "", "OFF/OBJ file for family = file"),
    ("mesh.genus", "", "declared genus of an external mesh"),
    ("mesh.inj_estimate", "", "injectivity radius of an external mesh"),
    ("potential.kind", "quartic", "quartic | polynomial"),
    ("potential.coeffs", "", "polynomial coefficients in increasing degree"),
    ("potential.scale", "1", "multiplies W"),
    ("potential.growth", "12, 12, 4", "A, B, p of |W'(s)| <= A + B|s|^(p-1) (polynomial kind)"),
    ("potential.two_sided", "1, 2, 3.5, 4, 4", "c1, c2, p1, p2, t0 of c1|t|^p1 < W(t) < c2|t|^p2 (polynomial kind)"),
    ("potential.barrier_delta", "0.5", "W' > 0 on (1, 1 + delta] (polynomial kind)"),
    ("potential.lambda_star", "", "if set, use the quadratic truncation at this barrier level"),
    ("potential.t1", "1.5", "truncation search start"),
    ("run.epsilon", "0.05", "comma list of interface widths"),
    ("run.volume", "0.4", "comma list of volumes (accepts pi, e.g. pi/2)"),
    ("profile.samples", "512", "profile table size"),
    ("profile.residual_tol", "1e-3", "accepted profile ODE residual"),
    ("profile.csv_rows", "401", "rows in the profile CSV"),
    ("photograph.base_points", "0", "comma list of base vertices"),
    ("photograph.margin", "0", "added to sigma*c2*sqrt(V) in the sublevel check"),
    ("seeds.kind", "farthest_point", "farthest_point | all_vertices_subsample | explicit"),
    ("seeds.count", "30", "number of seeds"),
    ("seeds.vertices", "", "comma list for kind = explicit"),
    ("flow.start", "photograph", "photograph | constant"),
    ("flow.tau0", "1e-2", "initial time step"),
    ("flow.max_steps", "20000", "step limit"),
    ("flow.tol_grad", "", "projected-gradient stop; empty means 1e-8*sqrt(area)"),
    ("flow.backtrack", "0.5", "step factor after an energy increase"),
    ("flow.growth", "1.2", "step factor after a streak of accepted steps"),
    ("flow.growth_after", "5", "streak length"),
    ("flow.cg_tol", "1e-10", "inner solve relative tolerance"),
    ("flow.cg_max_iter", "10000", "inner solve iteration limit"),
    ("flow.min_tau", "1e-14", "smallest step before giving up"),
    ("flow.record_trajectory", "false", "write per-step energies"),
    ("sweep.morse_k", "12", "eigenvalues per class representative"),
    ("sweep.l2_relative", "0.05", "dedupe L2 distance, relative"),
    ("sweep.energy_relative", "0.02", "dedupe energy gap, relative"),
    ("sweep.delta_margin", "", "below-c margin; empty means 0.1*sigma*c2*sqrt(V)"),
    ("sweep.min_convergence", "0.5", "converged fraction below which a sweep is unreliable"),
    ("sweep.concentration_radius", "0.25", "concentration ball radius / inj_estimate"),
    ("eigen.block", "8", "Krylov block size"),
    ("eigen.max_basis", "1200", "Krylov basis limit"),
    ("eigen.residual_tol", "1e-7", "Ritz residual tolerance"),
    ("eigen.tol_eig", "", "zero-eigenvalue band; empty means 1e-8/epsilon"),
    ("eigen.seed", "24301", "start block seed"),
];

/// Where a value came from, for error messages.
#[derive(Clone, Debug, PartialEq)]
pub enum Origin {
    Default,
    File { path: String, line: usize },
    Env(String),
    Flag(&'static str),
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Default => write!(f, "default"),
            Origin::File { path, line } => write!(f, "{path}:{line}"),
            Origin::Env(var) => write!(f, "environment variable {var}"),
            Origin::Flag(name) => write!(f, "flag {name}"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{origin}: {message}")]
pub struct ConfigError {
    pub origin: Origin,
    pub message: String,
}

fn err(origin: &Origin, message: impl Into<String>) -> ConfigError {
    ConfigError { origin: origin.clone(), message: message.into() }
}

/// Resolved key-value configuration.
#[derive(Clone, Debug)]
pub struct Config {
    values: BTreeMap<String, (String, Origin)>,
}

impl Config {
    pub fn defaults() -> Self {
        let values = KEYS.iter().map(|(k, v, _)| (k.to_string(), (v.to_string(), Origin::Default))).collect();
        Self { values }
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, path: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let origin = Origin::File { path: path.to_string(), line: i + 1 };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| err(&origin, format!("expected key = value, got {line:?}")))?;
            self.set(key.trim(), value.trim(), origin)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let name = path.display().to_string();
        let text = std::fs::read_to_string(path)
            .map_err(|e| err(&Origin::File { path: name.clone(), line: 0 }, format!("cannot read config: {e}")))?;
        self.apply_text(&text, &name)
    }

    /// Applies `PHOTOLAB_SECTION__KEY` variables from `vars`.
    pub fn apply_env<I: IntoIterator<Item = (String, String)>>(&mut self, vars: I) -> Result<(), ConfigError> {
        let mut found: Vec<(String, String)> = vars.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
        found.sort();
        for (var, value) in found {
            let key = var[ENV_PREFIX.len()..].to_ascii_lowercase().replace("__", ".");
            self.set(&key, value.trim(), Origin::Env(var.clone()))?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str, origin: Origin) -> Result<(), ConfigError> {
        match self.values.get_mut(key) {
            Some(slot) => {
                *slot = (value.to_string(), origin);
                Ok(())
            }
            None => Err(err(&origin, format!("unknown key {key:?}"))),
        }
    }

    pub fn raw(&self, key: &str) -> &str {
        &self.values[key].0
    }

    fn origin(&self, key: &str) -> &Origin {
        &self.values[key].1
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T, ConfigError> {
        let raw = self.raw(key);
        raw.parse().map_err(|_| err(self.origin(key), format!("{key}: cannot parse {raw:?}")))
    }

    pub fn f64(&self, key: &str) -> Result<f64, ConfigError> {
        parse_number(self.raw(key)).ok_or_else(|| err(self.origin(key), format!("{key}: not a number: {:?}", self.raw(key))))
    }

    pub fn usize(&self, key: &str) -> Result<usize, ConfigError> {
        self.parse(key)
    }

    pub fn u64(&self, key: &str) -> Result<u64, ConfigError> {
        self.parse(key)
    }

    pub fn bool(&self, key: &str) -> Result<bool, ConfigError> {
        self.parse(key)
    }

    pub fn opt_f64(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        if self.raw(key).is_empty() {
            Ok(None)
        } else {
            self.f64(key).map(Some)
        }
    }

    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>, ConfigError> {
        split_list(self.raw(key))
            .map(|t| parse_number(t).ok_or_else(|| err(self.origin(key), format!("{key}: not a number: {t:?}"))))
            .collect()
    }

    pub fn usize_list(&self, key: &str) -> Result<Vec<usize>, ConfigError> {
        split_list(self.raw(key))
            .map(|t| t.parse().map_err(|_| err(self.origin(key), format!("{key}: not an index: {t:?}"))))
            .collect()
    }

    /// A list of positive numbers.
    pub fn positive_list(&self, key: &str) -> Result<Vec<f64>, ConfigError> {
        let list = self.f64_list(key)?;
        if list.is_empty() {
            return Err(err(self.origin(key), format!("{key}: list is empty")));
        }
        if let Some(bad) = list.iter().find(|x| !(**x > 0.0) || !x.is_finite()) {
            return Err(err(self.origin(key), format!("{key}: values must be positive, got {bad}")));
        }
        Ok(list)
    }

    pub fn invalid(&self, key: &str, message: impl Into<String>) -> ConfigError {
        err(self.origin(key), format!("{key}: {}", message.into()))
    }

    /// Resolved values, sorted by key, for artifact headers.
    pub fn header(&self) -> BTreeMap<String, String> {
        self.values.iter().map(|(k, (v, _))| (k.clone(), v.clone())).collect()
    }
}

fn split_list(raw: &str) -> impl Iterator<Item = &str> {
    raw.split(',').map(str::trim).filter(|t| !t.is_empty())
}

/// A float, optionally written with `pi` as a factor: `pi`, `pi/2`, `2*pi`, `0.5*pi/3`.
pub fn parse_number(text: &str) -> Option<f64> {
    if let Ok(v) = text.parse::<f64>() {
        return Some(v);
    }
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), Some(d.trim().parse::<f64>().ok()?)),
        None => (text.trim(), None),
    };
    let mut value = 1.0;
    for factor in num.split('*').map(str::trim) {
        value *= match factor {
            "pi" => std::f64::consts::PI,
            f => f.parse::<f64>().ok()?,
        };
    }
    Some(den.map_or(value, |d| value / d))
}

/// Markdown table of keys, defaults and descriptions.
pub fn reference() -> String {
    let mut out = String::from("| key | default | meaning |\n|---|---|---|\n");
    for (k, v, doc) in KEYS {
        let v = if v.is_empty() { "unset".to_string() } else { format!("`{v}`") };
        out.push_str(&format!("| `{k}` | {v} | {} |\n", doc.replace('|', "\\|")));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_override_defaults() {
        let mut c = Config::defaults();
        c.apply_text("# comment\nrun.epsilon = 0.1, 0.05  # trailing\n\nmesh.family=torus\n", "x.cfg").unwrap();
        assert_eq!(c.f64_list("run.epsilon").unwrap(), vec![0.1, 0.05]);
        assert_eq!(c.raw("mesh.family"), "torus");
        assert_eq!(c.usize("mesh.nu").unwrap(), 48);
    }

    #[test]
    fn errors_name_the_line() {
        let mut c = Config::defaults();
        let e = c.apply_text("run.epsilon = 0.1\nbogus.key = 3\n", "exp.cfg").unwrap_err();
        assert_eq!(e.to_string(), "exp.cfg:2: unknown key \"bogus.key\"");
        let e = c.apply_text("\n\nno equals sign\n", "exp.cfg").unwrap_err();
        assert!(e.to_string().starts_with("exp.cfg:3:"));
        c.apply_text("flow.max_steps = many\n", "exp.cfg").unwrap();
        assert_eq!(c.usize("flow.max_steps").unwrap_err().to_string(), "exp.cfg:1: flow.max_steps: cannot parse \"many\"");
    }

    #[test]
    fn environment_overrides_file() {
        let mut c = Config::defaults();
        c.apply_text("run.volume = 1\n", "a.cfg").unwrap();
        c.apply_env([("PHOTOLAB_RUN__VOLUME".to_string(), "pi/2".to_string()), ("HOME".into(), "/".into())]).unwrap();
        assert_eq!(c.f64_list("run.volume").unwrap(), vec![std::f64::consts::FRAC_PI_2]);
        let e = c.apply_env([("PHOTOLAB_NOPE".to_string(), "1".to_string())]).unwrap_err();
        assert!(e.to_string().contains("PHOTOLAB_NOPE"));
    }

    #[test]
    fn pi_expressions() {
        assert_eq!(parse_number("2*pi"), Some(2.0 * std::f64::consts::PI));
        assert_eq!(parse_number("pi/2"), Some(std::f64::consts::FRAC_PI_2));
        assert_eq!(parse_number("1e-3"), Some(1e-3));
        assert_eq!(parse_number("tau"), None);
    }

    #[test]
    fn positive_lists_reject_zero() {
        let mut c = Config::defaults();
        c.apply_text("run.epsilon = 0.1, 0\n", "b.cfg").unwrap();
        assert!(c.positive_list("run.epsilon").unwrap_err().to_string().starts_with("b.cfg:1:"));
    }
}
