//! Certificate manifests: control tables, exclusion lists and scope as
//! JSON. Trivializations are code-backed and named, never serialized.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::chains::{BoxFamily, Chain, ChainSpec};
use crate::coarse::{pullback_fibred, CoarseMapFamily, MapSpec};
use crate::control::{Control, DistanceControl};
use crate::error::{Error, Result};
use crate::fibred::FibredCce;
use crate::groups::{Group, GroupSpec, DEFAULT_BALL_CAP};
use crate::hilbert::{Cocycle, CocycleKind};
use crate::pipeline::CocycleOracle;

pub const MANIFEST_SCHEMA: u32 = 1;

/// Named oracle constructor. Externally tagged, so nested manifests keep
/// their integer map keys through deserialization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleSpec {
    Cocycle {
        cocycle: CocycleKind,
    },
    Pullback {
        map: MapSpec,
        source_levels: Vec<u32>,
        m: DistanceControl,
        big_m: DistanceControl,
        target: Box<CertificateManifest>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateManifest {
    pub schema_version: u32,
    pub label: String,
    pub group: String,
    pub chain: String,
    pub levels: Vec<u32>,
    pub oracle: OracleSpec,
    /// Squared values `ρ1(t)²`, `t = 0, 1, ...`.
    pub rho1_sq: Control,
    pub rho2_sq: Control,
    pub exclusion: BTreeMap<u32, Vec<u32>>,
    pub max_r: u32,
}

impl CertificateManifest {
    pub fn describe(emb: &FibredCce, oracle: OracleSpec) -> Self {
        let chain = emb.family.chain();
        CertificateManifest {
            schema_version: MANIFEST_SCHEMA,
            label: emb.label.clone(),
            group: chain.group().spec().to_string(),
            chain: chain.spec().to_string(),
            levels: emb.family.levels().to_vec(),
            oracle,
            rho1_sq: emb.rho1.clone(),
            rho2_sq: emb.rho2.clone(),
            exclusion: emb.exclusion.clone(),
            max_r: emb.max_r,
        }
    }

    pub fn pullback(emb: &FibredCce, fam: &CoarseMapFamily, target: CertificateManifest) -> Self {
        Self::describe(
            emb,
            OracleSpec::Pullback {
                map: fam.spec.clone(),
                source_levels: fam.source.levels().to_vec(),
                m: fam.m.clone(),
                big_m: fam.big_m.clone(),
                target: Box::new(target),
            },
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: CertificateManifest = serde_json::from_str(s)?;
        if m.schema_version != MANIFEST_SCHEMA {
            return Err(Error::Config(format!(
                "manifest schema {} is not supported (expected {MANIFEST_SCHEMA})",
                m.schema_version
            )));
        }
        Ok(m)
    }

    /// Rebuilds the certificate. The oracle comes from its named
    /// constructor; controls, exclusion lists and scope are taken from the
    /// manifest as written, so edited tables are verified as edited.
    pub fn build(&self, ball_cap: Option<usize>) -> Result<FibredCce> {
        let gspec: GroupSpec = self.group.parse()?;
        let cspec: ChainSpec = self.chain.parse()?;
        let group = Group::with_ball_cap(gspec, ball_cap.unwrap_or(DEFAULT_BALL_CAP))?;
        let chain = Chain::new(group.clone(), cspec)?;
        let family = BoxFamily::with_levels(chain.clone(), self.levels.clone())?;
        let mut emb = match &self.oracle {
            OracleSpec::Cocycle { cocycle } => {
                let c = Cocycle::new(group, *cocycle)?;
                FibredCce {
                    label: self.label.clone(),
                    family,
                    oracle: Arc::new(CocycleOracle::new(chain, c)?),
                    rho1: self.rho1_sq.clone(),
                    rho2: self.rho2_sq.clone(),
                    exclusion: self.exclusion.clone(),
                    max_r: self.max_r,
                }
            }
            OracleSpec::Pullback { map, source_levels, m, big_m, target } => {
                let target_emb = target.build(ball_cap)?;
                let fam = map_family(map, &target_emb.family, source_levels, m.clone(), big_m.clone())?;
                pullback_fibred(&target_emb, &fam, usize::MAX)?
            }
        };
        emb.label = self.label.clone();
        emb.rho1 = self.rho1_sq.clone();
        emb.rho2 = self.rho2_sq.clone();
        emb.exclusion = self.exclusion.clone();
        emb.max_r = self.max_r;
        Ok(emb)
    }
}

/// Instantiates a named map family into `target`.
pub fn map_family(
    spec: &MapSpec,
    target: &BoxFamily,
    source_levels: &[u32],
    m: DistanceControl,
    big_m: DistanceControl,
) -> Result<CoarseMapFamily> {
    let max_t = m.max_arg();
    let fam = match spec {
        MapSpec::Identity => CoarseMapFamily::identity(target.clone(), max_t),
        MapSpec::Doubling => CoarseMapFamily::doubling(target.clone(), max_t)?,
        MapSpec::Constant => CoarseMapFamily::constant(target.clone(), m.clone(), big_m.clone()),
        MapSpec::Table { rows } => {
            let source = BoxFamily::with_levels(target.chain().clone(), source_levels.to_vec())?;
            CoarseMapFamily::from_rows(source, target.clone(), rows.clone(), m.clone(), big_m.clone())?
        }
    };
    if fam.source.levels() != source_levels {
        return Err(Error::Config("manifest source levels do not match the map constructor".into()));
    }
    Ok(fam.with_controls(m, big_m))
}
