//! JSON persistence for fitted models.
//!
//! Every file is an envelope `{"format_version", "kind", "model"}` so a
//! reader can reject files written by an incompatible version or for a
//! different model type.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::classify::{DtModel, LrModel, NbcModel, SvmModel};
use crate::error::{Error, Result};
use crate::hmm::HmmModel;

pub const FORMAT_VERSION: u32 = 1;

pub trait Persist: Serialize + DeserializeOwned {
    const KIND: &'static str;

    /// Structural checks applied after loading.
    fn check(&self) -> Result<()> {
        Ok(())
    }
}

impl Persist for NbcModel {
    const KIND: &'static str = "nbc";
}
impl Persist for DtModel {
    const KIND: &'static str = "dt";
}
impl Persist for SvmModel {
    const KIND: &'static str = "svm";
}
impl Persist for LrModel {
    const KIND: &'static str = "lr";
}
impl Persist for HmmModel {
    const KIND: &'static str = "hmm";

    fn check(&self) -> Result<()> {
        self.validate()
    }
}

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    format_version: u32,
    kind: String,
    model: T,
}

pub fn to_json<T: Persist>(model: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(&Envelope {
        format_version: FORMAT_VERSION,
        kind: T::KIND.to_string(),
        model,
    })?)
}

pub fn from_json<T: Persist>(text: &str) -> Result<T> {
    #[derive(Deserialize)]
    struct Header {
        format_version: u32,
        kind: String,
    }
    let h: Header = serde_json::from_str(text)?;
    if h.format_version != FORMAT_VERSION {
        return Err(Error::ModelFormat(format!(
            "format version {} is not supported (expected {FORMAT_VERSION})",
            h.format_version
        )));
    }
    if h.kind != T::KIND {
        return Err(Error::ModelFormat(format!(
            "file holds a '{}' model, expected '{}'",
            h.kind,
            T::KIND
        )));
    }
    let env: Envelope<T> = serde_json::from_str(text)?;
    env.model.check()?;
    Ok(env.model)
}

pub fn save<T: Persist>(model: &T, path: &Path) -> Result<()> {
    std::fs::write(path, to_json(model)?).map_err(|e| Error::io(path, e))
}

pub fn load<T: Persist>(path: &Path) -> Result<T> {
    from_json(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}
