//! Prompt templates and generation manifests.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{ClassCatalog, DatasetManifest};
use crate::error::{Error, Result};
use crate::jsonl;
use crate::rng::{mix_seed, SplitMix64};

pub const PLACEHOLDER: &str = "{class label}";

/// The 80 proxy-caption templates, one per line, in table order.
pub const DEFAULT_TEMPLATES: &str = include_str!("../templates/default_80.txt");

/// Stream tag separating conditioning-image draws from per-row seeds.
const CONDITIONING_STREAM: u64 = 0xC0_4D17_1011;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    name: String,
    templates: Vec<String>,
}

impl TemplateSet {
    pub fn new(name: impl Into<String>, templates: Vec<String>) -> Result<Self> {
        for t in &templates {
            let count = t.matches(PLACEHOLDER).count();
            if count != 1 {
                return Err(Error::InvalidTemplate {
                    template: t.clone(),
                    reason: format!("expected exactly one {PLACEHOLDER:?}, found {count}"),
                });
            }
        }
        Ok(Self {
            name: name.into(),
            templates,
        })
    }

    pub fn default_80() -> Self {
        Self::parse("default-80", DEFAULT_TEMPLATES).expect("built-in templates are valid")
    }

    /// One template per non-empty line.
    pub fn parse(name: impl Into<String>, text: &str) -> Result<Self> {
        Self::new(
            name,
            text.lines()
                .filter(|l| !l.trim().is_empty())
                .map(str::to_string)
                .collect(),
        )
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::parse(name, &text)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<&str> {
        self.templates.get(i).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.templates.iter().map(String::as_str)
    }

    /// Substitutes `class_name` into template `i`; everything else is kept
    /// verbatim, trailing punctuation included.
    pub fn instantiate(&self, i: usize, class_name: &str) -> String {
        self.templates[i].replacen(PLACEHOLDER, class_name, 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpandedPrompt {
    pub class_id: u32,
    pub template_index: usize,
    pub prompt: String,
}

/// Every (class, template) prompt, ordered by class id then template index.
pub fn expand_prompts(catalog: &ClassCatalog, templates: &TemplateSet) -> Vec<ExpandedPrompt> {
    catalog
        .iter()
        .flat_map(|(class_id, name)| {
            (0..templates.len()).map(move |t| ExpandedPrompt {
                class_id,
                template_index: t,
                prompt: templates.instantiate(t, name),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Text-conditioned sampling from a proxy caption.
    ClassLabels,
    /// Sampling conditioned on a real source image.
    RealImages,
    /// Encode a real image, noise it, then denoise under the proxy caption.
    RealImagesAndClassLabels,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::ClassLabels => "class_labels",
            Strategy::RealImages => "real_images",
            Strategy::RealImagesAndClassLabels => "real_images_and_class_labels",
        }
    }

    pub fn uses_prompt(self) -> bool {
        !matches!(self, Strategy::RealImages)
    }

    pub fn uses_source_image(self) -> bool {
        !matches!(self, Strategy::ClassLabels)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "class_labels" => Ok(Strategy::ClassLabels),
            "real_images" => Ok(Strategy::RealImages),
            "real_images_and_class_labels" => Ok(Strategy::RealImagesAndClassLabels),
            _ => Err(Error::InvalidValue(format!("unknown strategy {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationRow {
    pub gen_id: String,
    pub class_id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt: Option<String>,
    pub strategy: Strategy,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conditioning_sample_id: Option<String>,
}

impl GenerationRow {
    fn check(&self) -> Result<()> {
        let ok = self.prompt.is_some() == self.strategy.uses_prompt()
            && self.conditioning_sample_id.is_some() == self.strategy.uses_source_image();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidValue(format!(
                "row {} does not match the field requirements of strategy {}",
                self.gen_id, self.strategy
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GenerationManifest {
    rows: Vec<GenerationRow>,
}

impl GenerationManifest {
    pub fn new(rows: Vec<GenerationRow>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(rows.len());
        for r in &rows {
            r.check()?;
            if !seen.insert(r.gen_id.as_str()) {
                return Err(Error::DuplicateSampleId(r.gen_id.clone()));
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[GenerationRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_jsonl(&self) -> Result<String> {
        jsonl::to_string(&self.rows)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        jsonl::write_file(path, &self.to_jsonl()?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::new(jsonl::read_records(path)?)
    }
}

/// Per-row sampler seed: `mix_seed([master_seed, class_id, replica])`.
pub fn row_seed(master_seed: u64, class_id: u32, replica: u64) -> u64 {
    mix_seed(&[master_seed, class_id as u64, replica])
}

pub fn gen_id(class_id: u32, replica: u64) -> String {
    format!("gen-c{class_id:05}-r{replica:07}")
}

#[derive(Debug, Clone)]
pub struct ManifestRequest<'a> {
    pub catalog: &'a ClassCatalog,
    pub templates: &'a TemplateSet,
    pub strategy: Strategy,
    pub replicas_per_class: u64,
    pub master_seed: u64,
    pub source: Option<&'a DatasetManifest>,
}

/// Plans `replicas_per_class` generations per class.
///
/// Replica `r` of a prompted strategy uses template `r mod |templates|`.
/// Image-conditioned strategies draw source images from a per-class seeded
/// permutation of the pool and cycle through it once exhausted.
pub fn build_manifest(req: &ManifestRequest<'_>) -> Result<GenerationManifest> {
    if req.replicas_per_class == 0 {
        return Err(Error::InvalidValue("replicas_per_class must be positive".into()));
    }
    if req.strategy.uses_prompt() && req.templates.is_empty() {
        return Err(Error::InvalidValue("template set is empty".into()));
    }

    let pools: BTreeMap<u32, Vec<&str>> = if req.strategy.uses_source_image() {
        let source = req
            .source
            .ok_or(Error::MissingSourceManifest(req.strategy.as_str()))?;
        let mut pools: BTreeMap<u32, Vec<&str>> = BTreeMap::new();
        for e in source.entries() {
            req.catalog.check(e.class_id)?;
            pools.entry(e.class_id).or_default().push(e.sample_id.as_str());
        }
        for (class_id, _) in req.catalog.iter() {
            let pool = pools.get_mut(&class_id).ok_or(Error::EmptyConditioningPool(class_id))?;
            SplitMix64::new(mix_seed(&[req.master_seed, class_id as u64, CONDITIONING_STREAM]))
                .shuffle(pool);
        }
        pools
    } else {
        BTreeMap::new()
    };

    let n = req.replicas_per_class;
    let mut rows = Vec::with_capacity(req.catalog.len() * n as usize);
    for (class_id, name) in req.catalog.iter() {
        let pool = pools.get(&class_id);
        for r in 0..n {
            let template_index = req
                .strategy
                .uses_prompt()
                .then(|| (r % req.templates.len() as u64) as usize);
            rows.push(GenerationRow {
                gen_id: gen_id(class_id, r),
                class_id,
                template_index,
                prompt: template_index.map(|t| req.templates.instantiate(t, name)),
                strategy: req.strategy,
                seed: row_seed(req.master_seed, class_id, r),
                conditioning_sample_id: pool.map(|p| p[(r % p.len() as u64) as usize].to_string()),
            });
        }
    }
    Ok(GenerationManifest { rows })
}
