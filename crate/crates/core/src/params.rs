//! Full run configuration plus the flat `key = value` surface used by config
//! files, command-line overrides and sweep axes.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::epi::EpiParams;
use crate::error::{Error, Result};
use crate::graph::GraphSpec;
use crate::info::InfoParams;
use crate::seed::graph_seed_for;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub graph: GraphSpec,
    pub info: InfoParams,
    pub epi: EpiParams,
    pub rho_a0: f64,
    pub steps: u64,
    /// An epidemic step follows every `epi_interval`-th information step.
    pub epi_interval: u64,
    /// Sampling period in steps; 0 records the final state only.
    pub record_interval: u64,
    pub seed: u64,
    pub psi_excludes_awareness: bool,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            graph: GraphSpec {
                seed: graph_seed_for(0),
                ..GraphSpec::default()
            },
            info: InfoParams::default(),
            epi: EpiParams::default(),
            rho_a0: 0.5,
            steps: 50_000,
            epi_interval: 1,
            record_interval: 0,
            seed: 0,
            psi_excludes_awareness: false,
        }
    }
}

/// Splits a flat config document into `(key, value)` pairs: one `key = value`
/// per line with dotted keys, `#` comments, and optional `[section]` headers
/// that prefix the keys below them. Keys are not checked here.
pub fn parse_config_str(text: &str) -> Result<Vec<(String, String)>> {
    let mut section = String::new();
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = name.trim().to_string();
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::config("config", format!("line {}: expected `key = value`", lineno + 1)))?;
        let key = key.trim();
        let key = if section.is_empty() {
            key.to_string()
        } else {
            format!("{section}.{key}")
        };
        pairs.push((key, value.trim().trim_matches('"').to_string()));
    }
    Ok(pairs)
}

/// Every settable key, in canonical order, with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("graph.n_nodes", "number of agents N"),
    ("graph.m_attach", "edges per new node in the Holme-Kim growth"),
    ("graph.p_triad", "triad-formation probability"),
    ("graph.seed", "network seed (derived from `seed` unless set)"),
    ("info.gamma", "digital-media influence γ"),
    ("info.c", "partisanship weight c"),
    ("info.h", "homophily exponent h"),
    ("info.n", "opinion dimension n, awareness included"),
    ("info.m", "stances per topic m"),
    ("info.k", "number of parties k"),
    (
        "info.similarity_includes_awareness",
        "awareness counts towards similarity",
    ),
    ("epi.beta", "infection rate β"),
    ("epi.mu", "recovery rate μ"),
    ("epi.epsilon", "aware attenuation ε"),
    ("epi.rho_i0", "initial infected fraction"),
    ("epi.infection_sets_aware", "newly infected agents become aware"),
    ("epi.recovery_resets_aware", "recovered agents become unaware"),
    ("rho_a0", "initial aware fraction"),
    ("steps", "information steps per run"),
    ("epi_interval", "information steps per epidemic step"),
    ("record_interval", "sampling period (0 = final only)"),
    ("seed", "run seed"),
    (
        "psi_excludes_awareness",
        "drop awareness from the polarisation measure",
    ),
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::config(key, format!("cannot parse `{value}`")))
}

impl Params {
    pub fn validate(&self) -> Result<()> {
        self.graph.validate()?;
        self.info.validate()?;
        self.epi.validate()?;
        if !(0.0..=1.0).contains(&self.rho_a0) {
            return Err(Error::config("rho_a0", "must lie in [0, 1]"));
        }
        if self.steps == 0 {
            return Err(Error::config("steps", "must be at least 1"));
        }
        if self.epi_interval == 0 {
            return Err(Error::config("epi_interval", "must be at least 1"));
        }
        Ok(())
    }

    /// Sets the run seed and derives the matching network seed.
    pub fn with_run_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.graph.seed = graph_seed_for(seed);
        self
    }

    /// Assigns one dotted-path key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "graph.n_nodes" => self.graph.n_nodes = parse(key, value)?,
            "graph.m_attach" => self.graph.m_attach = parse(key, value)?,
            "graph.p_triad" => self.graph.p_triad = parse(key, value)?,
            "graph.seed" => self.graph.seed = parse(key, value)?,
            "info.gamma" => self.info.gamma = parse(key, value)?,
            "info.c" => self.info.c = parse(key, value)?,
            "info.h" => self.info.h = parse(key, value)?,
            "info.n" => self.info.n = parse(key, value)?,
            "info.m" => self.info.m = parse(key, value)?,
            "info.k" => self.info.k = parse(key, value)?,
            "info.similarity_includes_awareness" => {
                self.info.similarity_includes_awareness = parse(key, value)?
            }
            "epi.beta" => self.epi.beta = parse(key, value)?,
            "epi.mu" => self.epi.mu = parse(key, value)?,
            "epi.epsilon" => self.epi.epsilon = parse(key, value)?,
            "epi.rho_i0" => self.epi.rho_i0 = parse(key, value)?,
            "epi.infection_sets_aware" => self.epi.infection_sets_aware = parse(key, value)?,
            "epi.recovery_resets_aware" => self.epi.recovery_resets_aware = parse(key, value)?,
            "rho_a0" => self.rho_a0 = parse(key, value)?,
            "steps" => self.steps = parse(key, value)?,
            "epi_interval" => self.epi_interval = parse(key, value)?,
            "record_interval" => self.record_interval = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "psi_excludes_awareness" => self.psi_excludes_awareness = parse(key, value)?,
            _ => return Err(Error::config(key, "unknown parameter")),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Result<String> {
        Ok(match key {
            "graph.n_nodes" => self.graph.n_nodes.to_string(),
            "graph.m_attach" => self.graph.m_attach.to_string(),
            "graph.p_triad" => self.graph.p_triad.to_string(),
            "graph.seed" => self.graph.seed.to_string(),
            "info.gamma" => self.info.gamma.to_string(),
            "info.c" => self.info.c.to_string(),
            "info.h" => self.info.h.to_string(),
            "info.n" => self.info.n.to_string(),
            "info.m" => self.info.m.to_string(),
            "info.k" => self.info.k.to_string(),
            "info.similarity_includes_awareness" => self.info.similarity_includes_awareness.to_string(),
            "epi.beta" => self.epi.beta.to_string(),
            "epi.mu" => self.epi.mu.to_string(),
            "epi.epsilon" => self.epi.epsilon.to_string(),
            "epi.rho_i0" => self.epi.rho_i0.to_string(),
            "epi.infection_sets_aware" => self.epi.infection_sets_aware.to_string(),
            "epi.recovery_resets_aware" => self.epi.recovery_resets_aware.to_string(),
            "rho_a0" => self.rho_a0.to_string(),
            "steps" => self.steps.to_string(),
            "epi_interval" => self.epi_interval.to_string(),
            "record_interval" => self.record_interval.to_string(),
            "seed" => self.seed.to_string(),
            "psi_excludes_awareness" => self.psi_excludes_awareness.to_string(),
            _ => return Err(Error::config(key, "unknown parameter")),
        })
    }

    /// All keys and values in canonical order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        KEYS.iter()
            .map(|&(k, _)| (k, self.get(k).expect("KEYS are all gettable")))
            .collect()
    }

    /// `key = value` lines, one per parameter. Parses back via
    /// [`Params::from_config_str`].
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// Applies a flat config document on top of `self`. See [`parse_config_str`].
    pub fn apply_config_str(&mut self, text: &str) -> Result<()> {
        for (key, value) in parse_config_str(text)? {
            self.set(&key, &value)?;
        }
        Ok(())
    }

    pub fn from_config_str(text: &str) -> Result<Params> {
        let mut p = Params::default();
        p.apply_config_str(text)?;
        Ok(p)
    }

    pub fn apply_config_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_config_str(&text)
    }

    /// Hex SHA-256 prefix over every parameter except the two seeds.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        for (k, v) in self.entries() {
            if k == "seed" || k == "graph.seed" {
                continue;
            }
            hasher.update(k.as_bytes());
            hasher.update(b"=");
            hasher.update(v.as_bytes());
            hasher.update(b"\n");
        }
        hasher.finalize()[..8]
            .iter()
            .fold(String::with_capacity(16), |mut s, b| {
                let _ = write!(s, "{b:02x}");
                s
            })
    }
}
