//! Plain-text `key = value` run configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::chains::{BoxFamily, Chain, ChainSpec};
use crate::error::{Error, Result};
use crate::groups::{Group, GroupSpec, DEFAULT_BALL_CAP};
use crate::hilbert::{Cocycle, CocycleKind};
use crate::pipeline::MeanProvider;
use crate::Rational;

/// Map family selector for `pullback`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MapChoice {
    Identity,
    Doubling,
    Constant,
    /// CSV with columns `source_level,source,target_level,target`.
    Table(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub group: GroupSpec,
    pub chain: ChainSpec,
    /// `None` picks the catalog default for the group.
    pub cocycle: Option<CocycleKind>,
    pub max_r: u32,
    pub radii: Vec<u32>,
    /// Restricts the family to these levels; all chain levels otherwise.
    pub levels: Option<Vec<u32>>,
    pub ball_cap: usize,
    pub mean: MeanProvider,
    pub seed: u64,
    pub tol: f64,
    pub cnd_samples: usize,
    pub cnd_subsets: usize,
    pub exhaustive_limit: u64,
    pub samples: usize,
    pub literal_pairs: usize,
    pub map: MapChoice,
    /// Range `0..=t` of the map controls; `None` covers every component diameter.
    pub map_max_t: Option<u32>,
    /// Slopes of the linear controls `m(t) = a t`, `M(t) = b t` of table maps.
    pub map_slopes: (u64, u64),
    pub finiteness_bound: usize,
    /// Multiplies `ρ2²` in the emitted certificate.
    pub rho2_scale: Rational,
    pub metric_samples: usize,
    pub boxfam_radius: u32,
    /// Unboundedness proxy: `ρ1` and `m` must reach this value in scope.
    pub threshold: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            group: GroupSpec::IntLattice(1),
            chain: ChainSpec::Pow2 { levels: 6 },
            cocycle: None,
            max_r: 8,
            radii: vec![4, 6, 8],
            levels: None,
            ball_cap: DEFAULT_BALL_CAP,
            mean: MeanProvider::FiniteUniform,
            seed: 0,
            tol: 1e-9,
            cnd_samples: 256,
            cnd_subsets: 50,
            exhaustive_limit: 64,
            samples: 400,
            literal_pairs: 500,
            map: MapChoice::Identity,
            map_max_t: None,
            map_slopes: (1, 1),
            finiteness_bound: 8,
            rho2_scale: Rational::from_integer(1),
            metric_samples: 10_000,
            boxfam_radius: 5,
            threshold: 1,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("invalid value `{v}` for `{key}`")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<u32>> {
    v.split(',').map(|s| parse_num(key, s.trim())).collect()
}

impl RunConfig {
    /// Parses config text. Lines are `key = value`; `#` starts a comment.
    /// `group` and `chain` are required, every other key has a default.
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_in(text, Path::new("."))
    }

    /// As [`RunConfig::parse`], resolving relative table paths against `base`.
    pub fn parse_in(text: &str, base: &Path) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let (key, v) = (key.trim(), value.trim());
            if seen.insert(key.to_string(), lineno + 1).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
            match key {
                "group" => cfg.group = v.parse()?,
                "chain" => cfg.chain = v.parse()?,
                "cocycle" => cfg.cocycle = Some(v.parse()?),
                "max_r" => cfg.max_r = parse_num(key, v)?,
                "radii" => cfg.radii = parse_list(key, v)?,
                "levels" => cfg.levels = Some(parse_list(key, v)?),
                "ball_cap" => cfg.ball_cap = parse_num(key, v)?,
                "mean" => cfg.mean = v.parse()?,
                "seed" => cfg.seed = parse_num(key, v)?,
                "tol" => cfg.tol = parse_num(key, v)?,
                "cnd_samples" => cfg.cnd_samples = parse_num(key, v)?,
                "cnd_subsets" => cfg.cnd_subsets = parse_num(key, v)?,
                "exhaustive_limit" => cfg.exhaustive_limit = parse_num(key, v)?,
                "samples" => cfg.samples = parse_num(key, v)?,
                "literal_pairs" => cfg.literal_pairs = parse_num(key, v)?,
                "map" => {
                    cfg.map = match v {
                        "identity" => MapChoice::Identity,
                        "doubling" => MapChoice::Doubling,
                        "constant" => MapChoice::Constant,
                        _ => match v.strip_prefix("table:") {
                            Some(p) => MapChoice::Table(base.join(p.trim())),
                            None => return Err(Error::Config(format!("unknown map `{v}`"))),
                        },
                    }
                }
                "map_max_t" => cfg.map_max_t = Some(parse_num(key, v)?),
                "map_slopes" => {
                    let l = parse_list(key, v)?;
                    match l.as_slice() {
                        [a, b] if a <= b => cfg.map_slopes = (*a as u64, *b as u64),
                        _ => return Err(Error::Config("map_slopes needs `a, b` with a <= b".into())),
                    }
                }
                "finiteness_bound" => cfg.finiteness_bound = parse_num(key, v)?,
                "rho2_scale" => cfg.rho2_scale = crate::rational::parse(v)?,
                "metric_samples" => cfg.metric_samples = parse_num(key, v)?,
                "boxfam_radius" => cfg.boxfam_radius = parse_num(key, v)?,
                "threshold" => cfg.threshold = parse_num(key, v)?,
                other => return Err(Error::Config(format!("line {}: unknown key `{other}`", lineno + 1))),
            }
        }
        for required in ["group", "chain"] {
            if !seen.contains_key(required) {
                return Err(Error::Config(format!("missing required key `{required}`")));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_in(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_r == 0 {
            return Err(Error::Config("max_r must be positive".into()));
        }
        if self.radii.is_empty() || self.radii.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("radii must be a nonempty increasing list".into()));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::Config("tol must be positive".into()));
        }
        if self.rho2_scale <= Rational::from_integer(0) {
            return Err(Error::Config("rho2_scale must be positive".into()));
        }
        Ok(())
    }

    pub fn build_group(&self) -> Result<Group> {
        Group::with_ball_cap(self.group.clone(), self.ball_cap)
    }

    pub fn build_chain(&self) -> Result<Chain> {
        Chain::new(self.build_group()?, self.chain.clone())
    }

    pub fn build_family(&self, chain: &Chain) -> Result<BoxFamily> {
        match &self.levels {
            Some(l) => BoxFamily::with_levels(chain.clone(), l.clone()),
            None => Ok(BoxFamily::new(chain.clone())),
        }
    }

    pub fn build_cocycle(&self, group: &Group) -> Result<Cocycle> {
        match self.cocycle {
            Some(kind) => Cocycle::new(group.clone(), kind),
            None => Cocycle::default_for(group.clone()),
        }
    }

    /// Canonical `key = value` rendering, recorded in reports.
    pub fn canonical(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        let list = |l: &[u32]| {
            let mut s = String::new();
            for (i, x) in l.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                let _ = write!(s, "{x}");
            }
            s
        };
        put("group", self.group.to_string());
        put("chain", self.chain.to_string());
        put("cocycle", self.cocycle.map(|c| c.to_string()).unwrap_or_else(|| "default".into()));
        put("max_r", self.max_r.to_string());
        put("radii", list(&self.radii));
        put("levels", self.levels.as_deref().map(list).unwrap_or_else(|| "all".into()));
        put("ball_cap", self.ball_cap.to_string());
        put("mean", self.mean.to_string());
        put("seed", self.seed.to_string());
        put("tol", format!("{:e}", self.tol));
        put("cnd_samples", self.cnd_samples.to_string());
        put("cnd_subsets", self.cnd_subsets.to_string());
        put("exhaustive_limit", self.exhaustive_limit.to_string());
        put("samples", self.samples.to_string());
        put("literal_pairs", self.literal_pairs.to_string());
        put(
            "map",
            match &self.map {
                MapChoice::Identity => "identity".into(),
                MapChoice::Doubling => "doubling".into(),
                MapChoice::Constant => "constant".into(),
                MapChoice::Table(p) => format!("table:{}", p.display()),
            },
        );
        put("map_max_t", self.map_max_t.map(|t| t.to_string()).unwrap_or_else(|| "auto".into()));
        put("map_slopes", format!("{},{}", self.map_slopes.0, self.map_slopes.1));
        put("finiteness_bound", self.finiteness_bound.to_string());
        put("rho2_scale", crate::rational::format(&self.rho2_scale));
        put("metric_samples", self.metric_samples.to_string());
        put("boxfam_radius", self.boxfam_radius.to_string());
        put("threshold", self.threshold.to_string());
        m
    }
}
