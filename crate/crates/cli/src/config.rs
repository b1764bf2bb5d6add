//! Experiment configuration: one table per experiment kind, every default
//! spelled out after [`ConfigDocument::resolve`].

use std::path::Path;

use serde::{Deserialize, Serialize};
use setsum::diagnostics::{
    default_lemma1_groups, CounterexampleConfig, Lemma1Group, DEFAULT_WORK_CAP,
};
use setsum::{ClassSpec, Law, Region64};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Fclt,
    Selfnorm,
    Counterexample,
    Entropy,
    Orlicz,
    Lemma2,
    Lemma1,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Fclt => "fclt",
            Kind::Selfnorm => "selfnorm",
            Kind::Counterexample => "counterexample",
            Kind::Entropy => "entropy",
            Kind::Orlicz => "orlicz",
            Kind::Lemma2 => "lemma2",
            Kind::Lemma1 => "lemma1",
        }
    }
}

/// Where the fidi variance target comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceSource {
    /// E X_0^2 of the law
    Law,
    /// mean of U_n^2 / n^d over the replications
    Empirical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FcltConfig {
    pub law: Law,
    pub d: usize,
    pub n: usize,
    pub regions: Vec<Region64>,
    pub reps: usize,
    pub seed: u64,
    /// law when the law has a known variance, empirical otherwise
    pub variance: Option<VarianceSource>,
    /// defaults to 1.36/sqrt(reps) + 0.03
    pub ks_tolerance: Option<f64>,
    /// slack added to 3 SE in covariance checks
    pub covariance_tolerance: f64,
    pub work_cap: u64,
}

impl Default for FcltConfig {
    fn default() -> Self {
        Self {
            law: Law::Gaussian { variance: 1.0 },
            d: 2,
            n: 32,
            regions: vec![Region64::quadrant(vec![0.5, 0.5]).expect("valid default region")],
            reps: 2000,
            seed: 1,
            variance: None,
            ks_tolerance: None,
            covariance_tolerance: 0.0,
            work_cap: DEFAULT_WORK_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelfnormConfig {
    pub law: Law,
    pub d: usize,
    pub n: usize,
    pub regions: Vec<Region64>,
    pub reps: usize,
    pub seed: u64,
    pub ks_tolerance: Option<f64>,
    pub t2_tolerance: f64,
    /// factor applied to the field in the scale-invariance check
    pub scale: f64,
    pub scale_tolerance: f64,
    /// skip the U_n^2 / b_n^2 study when 0
    pub raikov_n: usize,
    pub raikov_reps: usize,
    pub raikov_band: [f64; 2],
    /// law whose ratio must be exactly 1 (b_n = n^(d/2))
    pub raikov_control: Law,
    /// skip the control when 0
    pub raikov_control_reps: usize,
    pub work_cap: u64,
}

impl Default for SelfnormConfig {
    fn default() -> Self {
        Self {
            law: Law::ParetoTail { alpha: 2.0 },
            d: 1,
            n: 4096,
            regions: vec![Region64::quadrant(vec![0.5]).expect("valid default region")],
            reps: 2000,
            seed: 1,
            ks_tolerance: None,
            t2_tolerance: 0.05,
            scale: 1000.0,
            scale_tolerance: 1e-12,
            raikov_n: 100_000,
            raikov_reps: 500,
            raikov_band: [0.8, 1.25],
            raikov_control: Law::Rademacher,
            raikov_control_reps: 50,
            work_cap: DEFAULT_WORK_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EntropyConfig {
    pub class: ClassSpec,
    pub eps: Vec<f64>,
    pub p: u32,
    pub d: u32,
    pub r_max: u32,
    /// series terms from this r on must stay below `increment_tolerance`
    pub increment_from: u32,
    pub increment_tolerance: f64,
}

impl Default for EntropyConfig {
    fn default() -> Self {
        Self {
            class: ClassSpec::QuadrantGrid { m: 64, d: 1 },
            eps: vec![0.5, 0.25, 0.125],
            p: 1,
            d: 1,
            r_max: 30,
            increment_from: 20,
            increment_tolerance: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OrliczConfig {
    /// |Z| = a for each a
    pub constants: Vec<f64>,
    pub relative_tolerance: f64,
    /// standard normal sample size for the psi_2 check (0 skips it)
    pub gaussian_reps: usize,
    pub gaussian_tolerance: f64,
    pub seed: u64,
}

impl Default for OrliczConfig {
    fn default() -> Self {
        Self {
            constants: vec![0.5, 1.0, 3.0],
            relative_tolerance: 1e-3,
            gaussian_reps: 100_000,
            gaussian_tolerance: 0.03,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Lemma2Config {
    pub law: Law,
    pub d: usize,
    pub region: Region64,
    pub ladder: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub final_tolerance: f64,
    pub work_cap: u64,
}

impl Default for Lemma2Config {
    fn default() -> Self {
        Self {
            law: Law::Gaussian { variance: 1.0 },
            d: 2,
            region: Region64::quadrant(vec![0.7, 0.7]).expect("valid default region"),
            ladder: vec![8, 16, 32, 64],
            reps: 2000,
            seed: 1,
            final_tolerance: 0.35,
            work_cap: DEFAULT_WORK_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Lemma1Config {
    pub groups: Vec<Lemma1Group>,
    pub ns: Vec<usize>,
    pub tau: f64,
    pub reps: usize,
    pub seed: u64,
    pub k_bound: f64,
    pub stability_bound: f64,
    pub work_cap: u64,
}

impl Default for Lemma1Config {
    fn default() -> Self {
        Self {
            groups: default_lemma1_groups(),
            ns: vec![16, 32, 64],
            tau: 1.0,
            reps: 500,
            seed: 1,
            k_bound: 50.0,
            stability_bound: 3.0,
            work_cap: DEFAULT_WORK_CAP,
        }
    }
}

pub fn default_counterexample() -> CounterexampleConfig {
    CounterexampleConfig::new(1, 1, vec![2, 3, 4, 5], 4000, 1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConfigDocument {
    Fclt(FcltConfig),
    Selfnorm(SelfnormConfig),
    Counterexample(CounterexampleConfig),
    Entropy(EntropyConfig),
    Orlicz(OrliczConfig),
    Lemma2(Lemma2Config),
    Lemma1(Lemma1Config),
}

impl ConfigDocument {
    pub fn default_for(kind: Kind) -> Self {
        match kind {
            Kind::Fclt => Self::Fclt(FcltConfig::default()),
            Kind::Selfnorm => Self::Selfnorm(SelfnormConfig::default()),
            Kind::Counterexample => Self::Counterexample(default_counterexample()),
            Kind::Entropy => Self::Entropy(EntropyConfig::default()),
            Kind::Orlicz => Self::Orlicz(OrliczConfig::default()),
            Kind::Lemma2 => Self::Lemma2(Lemma2Config::default()),
            Kind::Lemma1 => Self::Lemma1(Lemma1Config::default()),
        }
    }

    pub fn kind(&self) -> Kind {
        match self {
            Self::Fclt(_) => Kind::Fclt,
            Self::Selfnorm(_) => Kind::Selfnorm,
            Self::Counterexample(_) => Kind::Counterexample,
            Self::Entropy(_) => Kind::Entropy,
            Self::Orlicz(_) => Kind::Orlicz,
            Self::Lemma2(_) => Kind::Lemma2,
            Self::Lemma1(_) => Kind::Lemma1,
        }
    }

    /// Parses a TOML document for `kind`. A `kind` key, when present, must
    /// agree; any other unknown key is rejected.
    pub fn parse(kind: Kind, text: &str) -> Result<Self, CliError> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(v) = table.remove("kind") {
            if v.as_str() != Some(kind.name()) {
                return Err(CliError::Config(format!(
                    "key `kind` is {v} but the subcommand is {}",
                    kind.name()
                )));
            }
        }
        let value = toml::Value::Table(table);
        let bad = |e: toml::de::Error| CliError::Config(e.to_string());
        Ok(match kind {
            Kind::Fclt => Self::Fclt(value.try_into().map_err(bad)?),
            Kind::Selfnorm => Self::Selfnorm(value.try_into().map_err(bad)?),
            Kind::Counterexample => {
                // start from the defaults so partial tables are accepted
                let mut base =
                    toml::Value::try_from(default_counterexample()).expect("serializable");
                if let (Some(b), toml::Value::Table(t)) = (base.as_table_mut(), value) {
                    for (k, v) in t {
                        b.insert(k, v);
                    }
                }
                Self::Counterexample(base.try_into().map_err(bad)?)
            }
            Kind::Entropy => Self::Entropy(value.try_into().map_err(bad)?),
            Kind::Orlicz => Self::Orlicz(value.try_into().map_err(bad)?),
            Kind::Lemma2 => Self::Lemma2(value.try_into().map_err(bad)?),
            Kind::Lemma1 => Self::Lemma1(value.try_into().map_err(bad)?),
        })
    }

    pub fn load(kind: Kind, path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(kind, &text)
    }

    /// Fills every derived default so the echo is fully explicit, and
    /// validates the plan.
    pub fn resolve(&mut self) -> Result<(), CliError> {
        let ks_default = |reps: usize| 1.36 / (reps as f64).sqrt() + 0.03;
        match self {
            Self::Fclt(c) => {
                c.law.validate()?;
                check_regions(&c.regions, c.d)?;
                positive("reps", c.reps)?;
                c.variance.get_or_insert(if c.law.variance().is_some() {
                    VarianceSource::Law
                } else {
                    VarianceSource::Empirical
                });
                if c.variance == Some(VarianceSource::Law) && c.law.variance().is_none() {
                    return Err(CliError::Config(format!(
                        "variance = \"law\" but {} has no finite variance",
                        c.law
                    )));
                }
                c.ks_tolerance.get_or_insert(ks_default(c.reps));
            }
            Self::Selfnorm(c) => {
                c.law.validate()?;
                check_regions(&c.regions, c.d)?;
                positive("reps", c.reps)?;
                if !(c.scale.is_finite() && c.scale > 0.0) {
                    return Err(CliError::Config(format!(
                        "key `scale` must be positive, got {}",
                        c.scale
                    )));
                }
                c.raikov_control.validate()?;
                c.ks_tolerance.get_or_insert(ks_default(c.reps));
            }
            Self::Counterexample(c) => {
                positive("reps", c.reps)?;
                if c.rs.is_empty() {
                    return Err(CliError::Config("key `rs` must list at least one r".into()));
                }
            }
            Self::Entropy(c) => {
                if c.eps.is_empty() || c.eps.iter().any(|e| e.is_nan() || *e <= 0.0 || *e > 1.0) {
                    return Err(CliError::Config(
                        "key `eps` must list radii in (0, 1]".into(),
                    ));
                }
                if c.r_max < 2 {
                    return Err(CliError::Config("key `r_max` must be at least 2".into()));
                }
            }
            Self::Orlicz(c) => {
                if c.constants.iter().any(|a| a.is_nan() || *a <= 0.0) {
                    return Err(CliError::Config("key `constants` must be positive".into()));
                }
            }
            Self::Lemma2(c) => {
                c.law.validate()?;
                c.region.check_dim(c.d)?;
                positive("reps", c.reps)?;
                if c.ladder.is_empty() {
                    return Err(CliError::Config(
                        "key `ladder` must list at least one n".into(),
                    ));
                }
            }
            Self::Lemma1(c) => {
                positive("reps", c.reps)?;
                for g in &c.groups {
                    g.law.validate()?;
                    check_regions(&g.g1, g.d)?;
                    check_regions(&g.g2, g.d)?;
                }
                if c.ns.is_empty() || c.groups.is_empty() {
                    return Err(CliError::Config(
                        "keys `ns` and `groups` must be nonempty".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }
}

fn positive(key: &str, v: usize) -> Result<(), CliError> {
    if v == 0 {
        return Err(CliError::Config(format!("key `{key}` must be at least 1")));
    }
    Ok(())
}

fn check_regions(regions: &[Region64], d: usize) -> Result<(), CliError> {
    if regions.is_empty() {
        return Err(CliError::Config(
            "key `regions` must list at least one region".into(),
        ));
    }
    for r in regions {
        r.check_dim(d)?;
    }
    Ok(())
}

/// `2..5` (inclusive) or a comma list `2,3,7`.
pub fn parse_r_range(s: &str) -> Result<Vec<u32>, CliError> {
    let bad = || CliError::Config(format!("cannot read r range `{s}` (use a..b or a,b,c)"));
    if let Some((a, b)) = s.split_once("..") {
        let a: u32 = a.trim().parse().map_err(|_| bad())?;
        let b: u32 = b
            .trim()
            .trim_start_matches('=')
            .parse()
            .map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',')
        .map(|t| t.trim().parse().map_err(|_| bad()))
        .collect()
}

/// `quadrants:m=64:d=1` or `cells:m=4:k=2:d=2`.
pub fn parse_class(s: &str) -> Result<ClassSpec, CliError> {
    let bad = || {
        CliError::Config(format!(
            "cannot read class `{s}` (use quadrants:m=..:d=.. or cells:m=..:k=..:d=..)"
        ))
    };
    let mut parts = s.split(':');
    let head = parts.next().ok_or_else(bad)?;
    let (mut m, mut k, mut d) = (None, None, None);
    for p in parts {
        let (key, v) = p.split_once('=').ok_or_else(bad)?;
        let v: usize = v.parse().map_err(|_| bad())?;
        match key {
            "m" => m = Some(v),
            "k" => k = Some(v),
            "d" => d = Some(v),
            _ => return Err(bad()),
        }
    }
    match (head, m, k, d) {
        ("quadrants", Some(m), None, Some(d)) => Ok(ClassSpec::QuadrantGrid { m, d }),
        ("cells", Some(m), Some(k), Some(d)) => Ok(ClassSpec::CellUnions { m, k, d }),
        _ => Err(bad()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_kind_round_trips() {
        for kind in [
            Kind::Fclt,
            Kind::Selfnorm,
            Kind::Counterexample,
            Kind::Entropy,
            Kind::Orlicz,
            Kind::Lemma2,
            Kind::Lemma1,
        ] {
            let mut doc = ConfigDocument::default_for(kind);
            doc.resolve().unwrap();
            let text = doc.to_toml();
            let back = ConfigDocument::parse(kind, &text).unwrap();
            assert_eq!(back, doc, "{text}");
        }
    }

    #[test]
    fn partial_documents_fill_defaults() {
        let doc = ConfigDocument::parse(
            Kind::Fclt,
            "n = 16\nregions = [\"quadrant:0.5,1\", \"quadrant:1,0.5\"]\n",
        )
        .unwrap();
        let ConfigDocument::Fclt(c) = doc else {
            panic!()
        };
        assert_eq!(c.n, 16);
        assert_eq!(c.reps, 2000);
        assert_eq!(c.regions.len(), 2);
        let doc = ConfigDocument::parse(
            Kind::Counterexample,
            "kind = \"counterexample\"\nrs = [2, 3]\n",
        )
        .unwrap();
        let ConfigDocument::Counterexample(c) = doc else {
            panic!()
        };
        assert_eq!((c.p, c.reps, c.rs.len()), (1, 4000, 2));
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = ConfigDocument::parse(Kind::Lemma2, "ladderz = [8]\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("ladderz"), "{err}");
        let err = ConfigDocument::parse(Kind::Counterexample, "rz = [8]\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("rz"), "{err}");
        let err = ConfigDocument::parse(Kind::Fclt, "kind = \"lemma2\"\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("kind"), "{err}");
    }

    #[test]
    fn resolve_makes_defaults_explicit() {
        let mut doc = ConfigDocument::default_for(Kind::Fclt);
        doc.resolve().unwrap();
        let text = doc.to_toml();
        assert!(text.contains("ks_tolerance"), "{text}");
        assert!(text.contains("variance = \"law\""), "{text}");
        let mut md = ConfigDocument::parse(Kind::Fclt, "law = \"md:0.5:1:rademacher\"\n").unwrap();
        md.resolve().unwrap();
        assert!(md.to_toml().contains("variance = \"empirical\""));
    }

    #[test]
    fn small_grammars() {
        assert_eq!(parse_r_range("2..5").unwrap(), vec![2, 3, 4, 5]);
        assert_eq!(parse_r_range("2,4").unwrap(), vec![2, 4]);
        assert!(parse_r_range("5..2").is_err());
        assert_eq!(
            parse_class("quadrants:m=64:d=1").unwrap(),
            ClassSpec::QuadrantGrid { m: 64, d: 1 }
        );
        assert_eq!(
            parse_class("cells:m=4:k=2:d=2").unwrap(),
            ClassSpec::CellUnions { m: 4, k: 2, d: 2 }
        );
        assert!(parse_class("cells:m=4:d=2").is_err());
    }
}
