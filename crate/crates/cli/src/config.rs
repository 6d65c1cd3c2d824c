//! Flat `section.key = value` experiment configuration.
//!
//! ```text
//! # comment
//! model.c = 1.5
//! domain.shape = box(5,5)
//! ```

use std::collections::BTreeMap;
use std::fmt;

use num_rational::Rational64;
use vertexlab::lattice::Shape;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Float,
    UInt,
    Int,
    Rational,
    Text,
    Shape,
    Sizes,
    Channels,
    Bonds,
    Choice(&'static [&'static str]),
    Sector,
}

struct Key {
    name: &'static str,
    kind: Kind,
    default: &'static str,
    help: &'static str,
}

const KEYS: &[Key] = &[
    Key { name: "model.kind", kind: Kind::Choice(&["six-vertex", "ashkin-teller", "cubic"]), default: "six-vertex", help: "model for enumerate and sample" },
    Key { name: "model.a", kind: Kind::Float, default: "1", help: "six-vertex weight a" },
    Key { name: "model.b", kind: Kind::Float, default: "1", help: "six-vertex weight b" },
    Key { name: "model.c", kind: Kind::Float, default: "1", help: "six-vertex weight c" },
    Key { name: "model.j", kind: Kind::Float, default: "0.25", help: "Ashkin-Teller two-spin coupling J" },
    Key { name: "model.u", kind: Kind::Float, default: "0", help: "Ashkin-Teller four-spin coupling U" },
    Key { name: "model.j_sigma", kind: Kind::Float, default: "0.3", help: "cubic coupling J_σ" },
    Key { name: "model.j_tau", kind: Kind::Float, default: "0.25", help: "cubic coupling J_τ" },
    Key { name: "model.j_sigma_tau", kind: Kind::Float, default: "0.1", help: "cubic coupling J_στ" },
    Key { name: "model.q_sigma", kind: Kind::UInt, default: "2", help: "cubic alphabet size q_σ" },
    Key { name: "model.q_tau", kind: Kind::UInt, default: "2", help: "cubic alphabet size q_τ" },
    Key { name: "domain.shape", kind: Kind::Shape, default: "box(4,4)", help: "box(w,h), strip(k,h), cylinder(n,m) or torus(n)" },
    Key { name: "domain.sizes", kind: Kind::Sizes, default: "4,6,8", help: "increasing sizes for size sweeps" },
    Key { name: "bc.kind", kind: Kind::Choice(&["flat", "shifted", "sloped", "torus-pinned"]), default: "flat", help: "height boundary condition" },
    Key { name: "bc.shift", kind: Kind::Int, default: "0", help: "constant added by bc.kind = shifted" },
    Key { name: "bc.slope_x", kind: Kind::Rational, default: "0", help: "x slope for bc.kind = sloped" },
    Key { name: "bc.slope_y", kind: Kind::Rational, default: "0", help: "y slope for bc.kind = sloped" },
    Key { name: "bc.spins", kind: Kind::Choice(&["free", "plus", "minus"]), default: "plus", help: "exterior spins for spin models" },
    Key { name: "bc.sector", kind: Kind::Sector, default: "any", help: "any, balanced or an integer flux excess k" },
    Key { name: "run.method", kind: Kind::Choice(&["exact", "mcmc"]), default: "exact", help: "exact enumeration or Markov chain" },
    Key { name: "run.sweeps", kind: Kind::UInt, default: "10000", help: "recorded sweeps per chain" },
    Key { name: "run.burn_in", kind: Kind::UInt, default: "100", help: "discarded sweeps per chain" },
    Key { name: "run.thin", kind: Kind::UInt, default: "1", help: "sweeps between records" },
    Key { name: "run.samples", kind: Kind::UInt, default: "1000", help: "sampled pairs for loops" },
    Key { name: "run.level", kind: Kind::Int, default: "1", help: "height level of crossing events" },
    Key { name: "run.seed", kind: Kind::UInt, default: "0", help: "master seed" },
    Key { name: "check.tolerance", kind: Kind::Float, default: "1e-12", help: "allowed negative slack" },
    Key { name: "check.identity_tolerance", kind: Kind::Float, default: "1e-10", help: "allowed error of computed identities" },
    Key { name: "grcm.bonds", kind: Kind::Bonds, default: "0-1,1-2", help: "bond list u-v,u-v,..." },
    Key { name: "grcm.p", kind: Kind::Channels, default: "0.4,0.1,0.2,0.3", help: "channel weights a_0,a_σ,a_τ,a_στ of every bond" },
    Key { name: "grcm.q_sigma", kind: Kind::Float, default: "2", help: "cluster weight q_σ" },
    Key { name: "grcm.q_tau", kind: Kind::Float, default: "2", help: "cluster weight q_τ" },
    Key { name: "grcm.p_tilde", kind: Kind::Channels, default: "0.4,0.1,0.2,0.3", help: "reference channel weights" },
    Key { name: "grcm.q_sigma_tilde", kind: Kind::Float, default: "2", help: "reference q_σ" },
    Key { name: "grcm.q_tau_tilde", kind: Kind::Float, default: "2", help: "reference q_τ" },
    Key { name: "output.dir", kind: Kind::Text, default: "", help: "artifact directory, overridden by --out" },
    Key { name: "output.format", kind: Kind::Choice(&["csv", "json", "both"]), default: "both", help: "artifacts to write, overridden by --format" },
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: String) -> Result<T, ConfigError> {
    Err(ConfigError(msg))
}

/// Every key with its resolved value.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    values: BTreeMap<String, String>,
}

fn validate(key: &Key, value: &str) -> Result<String, ConfigError> {
    let v = value.trim();
    let bad = |what: &str| ConfigError(format!("{}: expected {what}, got `{v}`", key.name));
    match key.kind {
        Kind::Float => {
            let x: f64 = v.parse().map_err(|_| bad("a number"))?;
            if !x.is_finite() {
                return Err(bad("a finite number"));
            }
        }
        Kind::UInt => {
            v.parse::<u64>().map_err(|_| bad("a nonnegative integer"))?;
        }
        Kind::Int => {
            v.parse::<i64>().map_err(|_| bad("an integer"))?;
        }
        Kind::Text => {}
        Kind::Rational => {
            parse_rational(v).ok_or_else(|| bad("a rational p/q"))?;
        }
        Kind::Shape => {
            v.parse::<Shape>().map_err(|e| ConfigError(format!("{}: {e}", key.name)))?;
        }
        Kind::Sizes => {
            let s = parse_list::<usize>(v).ok_or_else(|| bad("a comma-separated list of sizes"))?;
            if s.is_empty() || s.windows(2).any(|p| p[0] >= p[1]) {
                return Err(bad("strictly increasing sizes"));
            }
        }
        Kind::Channels => {
            let c = parse_list::<f64>(v).ok_or_else(|| bad("four channel weights"))?;
            if c.len() != 4 || c.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(bad("four nonnegative channel weights"));
            }
        }
        Kind::Bonds => {
            parse_bonds(v).ok_or_else(|| bad("bonds like 0-1,1-2"))?;
        }
        Kind::Choice(options) => {
            if !options.contains(&v) {
                return Err(bad(&format!("one of {}", options.join(", "))));
            }
        }
        Kind::Sector => {
            if v != "any" && v != "balanced" && v.parse::<i64>().is_err() {
                return Err(bad("any, balanced or an integer"));
            }
        }
    }
    Ok(v.to_string())
}

pub fn parse_rational(s: &str) -> Option<Rational64> {
    match s.split_once('/') {
        Some((p, q)) => {
            let p: i64 = p.trim().parse().ok()?;
            let q: i64 = q.trim().parse().ok()?;
            (q != 0).then(|| Rational64::new(p, q))
        }
        None => Some(Rational64::from_integer(s.trim().parse().ok()?)),
    }
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Option<Vec<T>> {
    s.split(',').map(|x| x.trim().parse().ok()).collect()
}

pub fn parse_bonds(s: &str) -> Option<Vec<(usize, usize)>> {
    let bonds: Option<Vec<(usize, usize)>> = s
        .split(',')
        .map(|b| {
            let (u, v) = b.trim().split_once('-')?;
            Some((u.trim().parse().ok()?, v.trim().parse().ok()?))
        })
        .collect();
    bonds.filter(|b| !b.is_empty())
}

fn lookup(name: &str) -> Result<&'static Key, ConfigError> {
    KEYS.iter().find(|k| k.name == name).ok_or_else(|| ConfigError(format!("unknown key `{name}`")))
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig { values: KEYS.iter().map(|k| (k.name.to_string(), k.default.to_string())).collect() }
    }
}

impl ExperimentConfig {
    /// Parses `key = value` lines over the defaults.
    pub fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
        let mut cfg = ExperimentConfig::default();
        let mut seen = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return err(format!("line {}: expected `key = value`, got `{raw}`", n + 1));
            };
            let k = k.trim();
            if let Some(prev) = seen.insert(k.to_string(), n + 1) {
                return err(format!("line {}: `{k}` already set on line {prev}", n + 1));
            }
            cfg.set(k, v).map_err(|e| ConfigError(format!("line {}: {e}", n + 1)))?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let k = lookup(key)?;
        let v = validate(k, value)?;
        self.values.insert(key.to_string(), v);
        Ok(())
    }

    pub fn get(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| panic!("no key {key}"))
    }

    pub fn f64(&self, key: &str) -> f64 {
        self.get(key).parse().expect("validated")
    }

    pub fn u64(&self, key: &str) -> u64 {
        self.get(key).parse().expect("validated")
    }

    pub fn i64(&self, key: &str) -> i64 {
        self.get(key).parse().expect("validated")
    }

    pub fn rational(&self, key: &str) -> Rational64 {
        parse_rational(self.get(key)).expect("validated")
    }

    pub fn shape(&self) -> Shape {
        self.get("domain.shape").parse().expect("validated")
    }

    pub fn sizes(&self) -> Vec<usize> {
        parse_list(self.get("domain.sizes")).expect("validated")
    }

    pub fn channels(&self, key: &str) -> [f64; 4] {
        let v: Vec<f64> = parse_list(self.get(key)).expect("validated");
        [v[0], v[1], v[2], v[3]]
    }

    pub fn bonds(&self) -> Vec<(usize, usize)> {
        parse_bonds(self.get("grcm.bonds")).expect("validated")
    }

    pub fn values(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    /// One line per key, parseable by [`ExperimentConfig::parse`].
    pub fn to_text(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

/// `key  default  description` for every key.
pub fn key_table() -> String {
    KEYS.iter().map(|k| format!("  {:<22} {:<18} {}\n", k.name, k.default, k.help)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        assert!(ExperimentConfig::parse("model.d = 1").unwrap_err().0.contains("unknown key"));
        assert!(ExperimentConfig::parse("model.c = x").is_err());
        assert!(ExperimentConfig::parse("model.c").is_err());
        assert!(ExperimentConfig::parse("model.c = 1\nmodel.c = 2").is_err());
        assert!(ExperimentConfig::parse("domain.sizes = 8,4").is_err());
        assert!(ExperimentConfig::parse("grcm.p = 1,2,3").is_err());
        assert!(ExperimentConfig::parse("bc.kind = round").is_err());
    }

    #[test]
    fn parses_values() {
        let cfg = ExperimentConfig::parse("# sweep\nmodel.c = 1.5 # inline\nbc.slope_x = -1/2\ndomain.sizes = 4, 8").unwrap();
        assert_eq!(cfg.f64("model.c"), 1.5);
        assert_eq!(cfg.rational("bc.slope_x"), Rational64::new(-1, 2));
        assert_eq!(cfg.sizes(), vec![4, 8]);
        assert_eq!(cfg.bonds(), vec![(0, 1), (1, 2)]);
    }
}
