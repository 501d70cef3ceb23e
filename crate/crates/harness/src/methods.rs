//! Method names → (preprocessing, mixer, loss, re-weighting).
//!
//! Names combine with a dash: `mamix-drw` is MAMix mixing trained with
//! deferred re-weighting. Matching ignores case, underscores and doubled
//! dashes, so `Mixup--DRW` and `smote_mix_drw` resolve too.

use imbmix::augment::MixMethod;
use imbmix::model::{LossKind, Reweight, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// Effective-number β used when DRW switches on.
pub const DRW_BETA: f64 = 0.9999;
/// DRW starts after this fraction of the epochs.
pub const DRW_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preprocess {
    None,
    /// Oversample every class to the head size with SMOTE before training.
    Smote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossChoice {
    CrossEntropy,
    Ldam,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedMethod {
    pub name: String,
    pub preprocess: Preprocess,
    pub mixer: Option<MixMethod>,
    pub loss: LossChoice,
    pub drw: bool,
}

/// Base names; each also accepts a `-drw` suffix (`drw` is `erm-drw`).
pub const BASE_METHODS: [&str; 9] = [
    "erm",
    "ldam",
    "smote",
    "smote-mix",
    "neighbor-mix",
    "mixup",
    "remix",
    "mamix",
    "mamix-remix",
];

pub fn catalog() -> Vec<String> {
    let mut out = Vec::new();
    for base in BASE_METHODS {
        out.push(base.to_string());
        out.push(if base == "erm" {
            "drw".into()
        } else {
            format!("{base}-drw")
        });
    }
    out
}

fn normalize(name: &str) -> String {
    let mut s = name.trim().to_ascii_lowercase().replace('_', "-");
    while s.contains("--") {
        s = s.replace("--", "-");
    }
    s
}

pub fn resolve_method(name: &str) -> Result<ResolvedMethod> {
    let norm = normalize(name);
    let (base, drw) = match norm.as_str() {
        "drw" => ("erm", true),
        other => match other.strip_suffix("-drw") {
            Some(b) => (b, true),
            None => (other, false),
        },
    };
    let (preprocess, mixer, loss) = match base {
        "erm" => (Preprocess::None, None, LossChoice::CrossEntropy),
        "ldam" => (Preprocess::None, None, LossChoice::Ldam),
        "smote" => (Preprocess::Smote, None, LossChoice::CrossEntropy),
        "smote-mix" => (
            Preprocess::None,
            Some(MixMethod::SmoteMix),
            LossChoice::CrossEntropy,
        ),
        "neighbor-mix" => (
            Preprocess::None,
            Some(MixMethod::NeighborMix),
            LossChoice::CrossEntropy,
        ),
        "mixup" => (Preprocess::None, Some(MixMethod::Mixup), LossChoice::CrossEntropy),
        "remix" => (Preprocess::None, Some(MixMethod::Remix), LossChoice::CrossEntropy),
        "mamix" => (Preprocess::None, Some(MixMethod::Mamix), LossChoice::CrossEntropy),
        "mamix-remix" => (
            Preprocess::None,
            Some(MixMethod::MamixRemix),
            LossChoice::CrossEntropy,
        ),
        _ => {
            return Err(HarnessError::UnknownMethod {
                name: name.to_string(),
                valid: catalog().join(", "),
            })
        }
    };
    let name = match (base, drw) {
        ("erm", true) => "drw".to_string(),
        (b, true) => format!("{b}-drw"),
        (b, false) => b.to_string(),
    };
    Ok(ResolvedMethod {
        name,
        preprocess,
        mixer,
        loss,
        drw,
    })
}

impl ResolvedMethod {
    /// The training config this method runs with.
    ///
    /// Loss and re-weighting follow the method name. LDAM keeps margin and
    /// scale from `base` when it already asks for LDAM; DRW keeps an explicit
    /// scheme and start epoch from `base` and otherwise uses class-balanced
    /// weights from 80% of the epochs on.
    pub fn apply(&self, base: &TrainConfig) -> TrainConfig {
        let mut cfg = base.clone();
        cfg.loss = match (self.loss, base.loss) {
            (LossChoice::CrossEntropy, _) => LossKind::SoftCe,
            (LossChoice::Ldam, l @ LossKind::Ldam { .. }) => l,
            (LossChoice::Ldam, _) => LossKind::ldam(),
        };
        if self.drw {
            if cfg.reweight == Reweight::None {
                cfg.reweight = Reweight::ClassBalanced { beta: DRW_BETA };
            }
            if cfg.drw_epoch.is_none() {
                cfg.drw_epoch = Some((cfg.epochs as f64 * DRW_FRACTION).floor() as usize);
            }
        } else {
            cfg.reweight = Reweight::None;
            cfg.drw_epoch = None;
        }
        cfg
    }
}
