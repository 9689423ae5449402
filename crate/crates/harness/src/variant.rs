use std::fmt;

use chunktree::model::BaseScheme;
use chunktree::{HeightPolicy, StoreConfig};

/// A chunker/height-policy pair under test, e.g. `ml-cdc` = (`cdc`, auto).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Variant {
    pub scheme: String,
    pub height: HeightPolicy,
}

impl Variant {
    pub fn new(scheme: impl Into<String>, height: HeightPolicy) -> Self {
        Self {
            scheme: scheme.into(),
            height,
        }
    }

    /// Whole-file storage: one leaf per content.
    pub fn wfc() -> Self {
        Self::new("sc", HeightPolicy::Fixed(0))
    }

    pub fn sc() -> Self {
        Self::new("sc", HeightPolicy::Fixed(1))
    }

    pub fn cdc() -> Self {
        Self::new("cdc", HeightPolicy::Fixed(1))
    }

    pub fn ml_sc() -> Self {
        Self::new("sc", HeightPolicy::Auto)
    }

    pub fn ml_cdc() -> Self {
        Self::new("cdc", HeightPolicy::Auto)
    }

    /// Parses the short labels `wfc`, `sc`, `cdc`, `ml-sc`, `ml-cdc`.
    pub fn from_label(label: &str) -> Option<Self> {
        match label {
            "wfc" => Some(Self::wfc()),
            "sc" => Some(Self::sc()),
            "cdc" => Some(Self::cdc()),
            "ml-sc" => Some(Self::ml_sc()),
            "ml-cdc" => Some(Self::ml_cdc()),
            _ => None,
        }
    }

    /// Cross product of schemes and height policies. Height 0 ignores the
    /// scheme, so it appears once.
    pub fn cross(schemes: &[String], heights: &[HeightPolicy]) -> Vec<Self> {
        let mut out: Vec<Self> = Vec::new();
        for h in heights {
            for s in schemes {
                let v = match h {
                    HeightPolicy::Fixed(0) => Self::wfc(),
                    _ => Self::new(s.clone(), *h),
                };
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        }
        out
    }

    pub fn label(&self) -> String {
        match self.height {
            HeightPolicy::Fixed(0) => "wfc".into(),
            HeightPolicy::Fixed(1) => self.scheme.clone(),
            HeightPolicy::Auto => format!("ml-{}", self.scheme),
            HeightPolicy::Fixed(h) => format!("{}-h{h}", self.scheme),
        }
    }

    pub fn store_config(&self, chunk_size: u64) -> StoreConfig {
        StoreConfig::new(self.scheme.clone(), chunk_size, self.height)
    }

    /// Scheme for which the closed-form bounds hold (auto height only).
    pub fn modelled(&self) -> Option<BaseScheme> {
        match self.height {
            HeightPolicy::Auto => BaseScheme::from_name(&self.scheme),
            HeightPolicy::Fixed(_) => None,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}
