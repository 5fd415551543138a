//! JSON dataset manifests: `{"dim": D, "classes": {"name": "path"}, "format": "ocfv"}`.
//!
//! Relative paths resolve against the manifest's directory. Unknown keys
//! (backbone, preprocessing notes, ...) are ignored. Class order is the
//! order of the JSON object.

use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use occnn_core::data::FeatureSet;
use serde::{Deserialize, Serialize};

use crate::container::{read_file, write_file};
use crate::error::{Error, Result};
use crate::features::{load_feature_file, FeatureFormat};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub dim: usize,
    pub classes: IndexMap<String, PathBuf>,
    pub format: FeatureFormat,
}

/// A manifest together with the directory its relative paths refer to.
#[derive(Clone, Debug)]
pub struct LoadedManifest {
    pub path: PathBuf,
    pub manifest: Manifest,
}

impl LoadedManifest {
    pub fn open(path: &Path) -> Result<Self> {
        let bytes = read_file(path)?;
        let manifest: Manifest = serde_json::from_slice(&bytes).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            reason: e.to_string(),
        })?;
        if manifest.classes.is_empty() {
            return Err(Error::Format {
                path: path.to_path_buf(),
                reason: "manifest lists no classes".into(),
            });
        }
        Ok(LoadedManifest {
            path: path.to_path_buf(),
            manifest,
        })
    }

    pub fn class_names(&self) -> impl Iterator<Item = &str> {
        self.manifest.classes.keys().map(String::as_str)
    }

    fn resolve(&self, file: &Path) -> PathBuf {
        match self.path.parent() {
            Some(dir) if file.is_relative() => dir.join(file),
            _ => file.to_path_buf(),
        }
    }

    /// Loads one class; its source tag is the class name.
    pub fn load_class(&self, name: &str) -> Result<FeatureSet> {
        let file = self.manifest.classes.get(name).ok_or_else(|| Error::Format {
            path: self.path.clone(),
            reason: format!(
                "no class {name:?}; available: {}",
                self.class_names().collect::<Vec<_>>().join(", ")
            ),
        })?;
        let file = self.resolve(file);
        let mut fs = load_feature_file(&file, self.manifest.format)?;
        if fs.d() != self.manifest.dim {
            return Err(Error::Format {
                path: file,
                reason: format!("has {} columns, manifest declares dim {}", fs.d(), self.manifest.dim),
            });
        }
        fs.source = name.to_string();
        Ok(fs)
    }

    pub fn load_all(&self) -> Result<Vec<FeatureSet>> {
        self.class_names().map(|name| self.load_class(name)).collect()
    }
}

impl Manifest {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        write_file(path, text.as_bytes())
    }
}
