//! Manufactory key files.
//!
//! `params.json` holds the public vector and is safe to distribute;
//! `master.json` holds the secret vector. Scalars and elements are hex in
//! the group's fixed-width encodings.

use std::fs;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use avcs::crs::{setup, CrsParams, MasterKeyPair, MASTER_KEY_LEN};
use avcs::group::{Group, GroupId};
use rand::RngCore;
use serde::{Deserialize, Serialize};

pub const PARAMS_FILE: &str = "params.json";
pub const MASTER_FILE: &str = "master.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsFile {
    pub curve: GroupId,
    pub manufactory: String,
    pub public: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MasterFile {
    pub curve: GroupId,
    pub manufactory: String,
    pub secret: Vec<String>,
}

pub fn to_files<G: Group>(mk: &MasterKeyPair<G>) -> (ParamsFile, MasterFile) {
    let g = &mk.params().group;
    let curve = g.id();
    let manufactory = mk.manufactory_id().to_string();
    (
        ParamsFile {
            curve,
            manufactory: manufactory.clone(),
            public: mk.public().iter().map(|e| hex::encode(g.encode(e))).collect(),
        },
        MasterFile {
            curve,
            manufactory,
            secret: mk.secret().iter().map(|x| hex::encode(g.scalar_to_bytes(x))).collect(),
        },
    )
}

/// Rebuilds the key pair from both files, checking that the public vector
/// is the one the secrets derive.
pub fn from_files<G: Group>(group: G, params: &ParamsFile, master: &MasterFile) -> Result<MasterKeyPair<G>> {
    ensure!(params.curve == group.id() && master.curve == group.id(), "curve mismatch");
    ensure!(params.manufactory == master.manufactory, "manufactory mismatch");
    let secret = master
        .secret
        .iter()
        .enumerate()
        .map(|(i, h)| {
            let bytes = hex::decode(h).with_context(|| format!("secret[{i}] is not hex"))?;
            group.scalar_from_bytes(&bytes).with_context(|| format!("secret[{i}] is not a canonical scalar"))
        })
        .collect::<Result<Vec<_>>>()?;
    let mk = MasterKeyPair::from_secret(CrsParams::new(group.clone()), &master.manufactory, secret)?;
    ensure!(mk.public().len() == params.public.len(), "public vector length differs from secret");
    for (i, (e, h)) in mk.public().iter().zip(&params.public).enumerate() {
        let bytes = hex::decode(h).with_context(|| format!("public[{i}] is not hex"))?;
        match group.decode(&bytes) {
            Some(p) if p == *e => {}
            Some(_) => bail!("public[{i}] does not match the secret"),
            None => bail!("public[{i}] is not a group element"),
        }
    }
    Ok(mk)
}

pub fn generate<G: Group, R: RngCore + ?Sized>(group: G, manufactory: &str, rng: &mut R) -> Result<MasterKeyPair<G>> {
    Ok(setup(&CrsParams::new(group), MASTER_KEY_LEN, manufactory, rng)?)
}

pub fn write(dir: &Path, params: &ParamsFile, master: &MasterFile) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    fs::write(dir.join(PARAMS_FILE), serde_json::to_string_pretty(params)? + "\n")?;
    fs::write(dir.join(MASTER_FILE), serde_json::to_string_pretty(master)? + "\n")?;
    Ok(())
}

pub fn read(dir: &Path) -> Result<(ParamsFile, MasterFile)> {
    let load = |name: &str| {
        let path = dir.join(name);
        fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))
    };
    let params = serde_json::from_str(&load(PARAMS_FILE)?).context(PARAMS_FILE)?;
    let master = serde_json::from_str(&load(MASTER_FILE)?).context(MASTER_FILE)?;
    Ok((params, master))
}
