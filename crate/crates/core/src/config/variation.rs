//! Named, declarative config transformations.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_yaml::{Mapping, Value};

use super::{AppConfigSet, ConfigError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariationKind {
    Appearance,
    Content,
}

/// A variation as written in a catalog file. `bundle` names a patch file that
/// is merged into `patches` when the catalog is loaded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variation {
    pub id: String,
    pub kind: VariationKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bundle: Option<String>,
    #[serde(default)]
    pub patches: Mapping,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Seg {
    Key(String),
    Index(usize),
}

impl Seg {
    fn text(&self) -> String {
        match self {
            Seg::Key(k) => k.clone(),
            Seg::Index(i) => i.to_string(),
        }
    }
}

/// A patch with wildcards expanded against a concrete config.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Concrete {
    pub path: Vec<Seg>,
    pub value: Value,
}

impl Concrete {
    pub(crate) fn dotted(&self) -> String {
        self.path.iter().map(Seg::text).collect::<Vec<_>>().join(".")
    }
}

impl Variation {
    fn bad(&self, reason: impl Into<String>) -> ConfigError {
        ConfigError::BadPatch { variation: self.id.clone(), reason: reason.into() }
    }

    /// Expand wildcards and check every path exists in `base` and respects the
    /// appearance/content split.
    pub(crate) fn resolve(&self, base: &Value) -> Result<Vec<Concrete>, ConfigError> {
        let mut out = Vec::new();
        for (k, v) in &self.patches {
            let pattern = k.as_str().ok_or_else(|| self.bad("patch keys must be strings"))?;
            let parts: Vec<&str> = pattern.split('.').collect();
            if parts.iter().any(|p| p.is_empty()) {
                return Err(self.bad(format!("malformed path `{pattern}`")));
            }
            let mut found = Vec::new();
            expand(base, &parts, Vec::new(), &mut found);
            if found.is_empty() {
                return Err(self.bad(format!("path `{pattern}` does not exist in the config")));
            }
            for path in found {
                let c = Concrete { path, value: v.clone() };
                let is_style = matches!(
                    c.path.as_slice(),
                    [Seg::Key(a), Seg::Key(_), Seg::Key(s), ..] if a == "apps" && s == "style"
                );
                let top_level = matches!(c.path.as_slice(), [Seg::Key(k)] if k == "schema_version");
                match self.kind {
                    VariationKind::Appearance if !is_style => {
                        return Err(self.bad(format!(
                            "appearance variation touches content path `{}`",
                            c.dotted()
                        )))
                    }
                    VariationKind::Content if is_style || top_level => {
                        return Err(self.bad(format!(
                            "content variation touches style path `{}`",
                            c.dotted()
                        )))
                    }
                    _ => out.push(c),
                }
            }
        }
        Ok(out)
    }
}

fn expand(node: &Value, parts: &[&str], prefix: Vec<Seg>, out: &mut Vec<Vec<Seg>>) {
    let Some((head, rest)) = parts.split_first() else {
        out.push(prefix);
        return;
    };
    match node {
        Value::Mapping(m) => {
            for (k, child) in m {
                let Some(k) = k.as_str() else { continue };
                if *head == "*" || *head == k {
                    let mut p = prefix.clone();
                    p.push(Seg::Key(k.to_string()));
                    expand(child, rest, p, out);
                }
            }
        }
        Value::Sequence(items) => {
            let indices: Vec<usize> = if *head == "*" {
                (0..items.len()).collect()
            } else {
                head.parse::<usize>().ok().filter(|i| *i < items.len()).into_iter().collect()
            };
            for i in indices {
                let mut p = prefix.clone();
                p.push(Seg::Index(i));
                expand(&items[i], rest, p, out);
            }
        }
        _ => {}
    }
}

pub(crate) fn set(node: &mut Value, path: &[Seg], value: Value) {
    let Some((head, rest)) = path.split_first() else {
        *node = value;
        return;
    };
    let child = match (head, node) {
        (Seg::Key(k), Value::Mapping(m)) => m.get_mut(k.as_str()),
        (Seg::Index(i), Value::Sequence(s)) => s.get_mut(*i),
        _ => None,
    };
    if let Some(child) = child {
        set(child, rest, value);
    }
}

pub(crate) fn apply_concrete(
    base: &AppConfigSet,
    patches: &[Concrete],
) -> Result<AppConfigSet, ConfigError> {
    let mut v = base.to_value();
    for c in patches {
        set(&mut v, &c.path, c.value.clone());
    }
    AppConfigSet::from_value(&v)
}

pub fn apply_variation(base: &AppConfigSet, v: &Variation) -> Result<AppConfigSet, ConfigError> {
    let patches = v.resolve(&base.to_value())?;
    apply_concrete(base, &patches)
}

/// Apply variations left to right. Two variations may not set the same path
/// to different values.
pub fn compose_variations(
    base: &AppConfigSet,
    variations: &[&Variation],
) -> Result<AppConfigSet, ConfigError> {
    let value = base.to_value();
    let mut owner: BTreeMap<String, (&str, Value)> = BTreeMap::new();
    let mut all = Vec::new();
    for v in variations {
        for c in v.resolve(&value)? {
            let key = c.dotted();
            match owner.get(&key) {
                Some((first, prev)) if *prev != c.value => {
                    return Err(ConfigError::Conflict {
                        path: key,
                        first: first.to_string(),
                        second: v.id.clone(),
                    })
                }
                Some(_) => {}
                None => {
                    owner.insert(key, (v.id.as_str(), c.value.clone()));
                }
            }
            all.push(c);
        }
    }
    apply_concrete(base, &all)
}

/// An ordered list of variations with bundles resolved.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Catalog {
    pub variations: Vec<Variation>,
}

const SHIPPED_CATALOG: &str = include_str!("../../data/variations.yaml");
const POPULAR_WEB_CATALOG: &str = include_str!("../../data/popular_web.yaml");

pub(crate) fn shipped_bundle(name: &str) -> Option<&'static str> {
    Some(match name {
        "german" => include_str!("../../data/bundles/german.yaml"),
        "french" => include_str!("../../data/bundles/french.yaml"),
        "spanish" => include_str!("../../data/bundles/spanish.yaml"),
        "long_descriptions" => include_str!("../../data/bundles/long_descriptions.yaml"),
        "misleading_descriptions" => include_str!("../../data/bundles/misleading_descriptions.yaml"),
        "adversarial_descriptions" => include_str!("../../data/bundles/adversarial_descriptions.yaml"),
        _ => return None,
    })
}

impl Catalog {
    /// Parse a catalog; `bundle` maps a bundle name to its YAML text.
    pub fn parse(
        text: &str,
        bundle: impl Fn(&str) -> Result<String, ConfigError>,
    ) -> Result<Self, ConfigError> {
        let mut variations: Vec<Variation> = match serde_yaml::from_str::<Option<Vec<Variation>>>(text) {
            Ok(v) => v.unwrap_or_default(),
            Err(e) => return Err(ConfigError::parse(&e)),
        };
        let mut seen = std::collections::BTreeSet::new();
        for v in &mut variations {
            if !seen.insert(v.id.clone()) {
                return Err(ConfigError::Invalid(vec![format!("duplicate variation id `{}`", v.id)]));
            }
            if let Some(name) = &v.bundle {
                let text = bundle(name)?;
                let extra: Option<Mapping> =
                    serde_yaml::from_str(&text).map_err(|e| ConfigError::parse(&e))?;
                for (k, val) in extra.unwrap_or_default() {
                    if v.patches.contains_key(&k) {
                        return Err(ConfigError::BadPatch {
                            variation: v.id.clone(),
                            reason: format!("bundle `{name}` repeats patch {k:?}"),
                        });
                    }
                    v.patches.insert(k, val);
                }
            }
        }
        Ok(Catalog { variations })
    }

    /// Load a catalog file; bundles resolve to `bundles/<name>.yaml` next to
    /// it, then to the shipped bundles.
    pub fn load_file(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        let dir = path.parent().map(|p| p.join("bundles")).unwrap_or_default();
        Catalog::parse(&text, |name| {
            let file = dir.join(format!("{name}.yaml"));
            match std::fs::read_to_string(&file) {
                Ok(t) => Ok(t),
                Err(_) => shipped_bundle(name)
                    .map(str::to_string)
                    .ok_or_else(|| ConfigError::UnknownBundle(name.to_string())),
            }
        })
    }

    fn from_shipped(text: &str) -> Self {
        Catalog::parse(text, |name| {
            shipped_bundle(name)
                .map(str::to_string)
                .ok_or_else(|| ConfigError::UnknownBundle(name.to_string()))
        })
        .expect("shipped catalog is valid")
    }

    /// The eight standard variations.
    pub fn shipped() -> Self {
        Catalog::from_shipped(SHIPPED_CATALOG)
    }

    /// Fonts, palettes and languages grounded in popular websites.
    pub fn popular_web() -> Self {
        Catalog::from_shipped(POPULAR_WEB_CATALOG)
    }

    /// Shipped plus popular-web variations.
    pub fn all() -> Self {
        let mut c = Catalog::shipped();
        c.variations.extend(Catalog::popular_web().variations);
        c
    }

    pub fn ids(&self) -> Vec<&str> {
        self.variations.iter().map(|v| v.id.as_str()).collect()
    }

    pub fn get(&self, id: &str) -> Result<&Variation, ConfigError> {
        self.variations
            .iter()
            .find(|v| v.id == id)
            .ok_or_else(|| ConfigError::UnknownVariation(id.to_string()))
    }

    /// Compose variations by id onto `base`.
    pub fn apply_ids(&self, base: &AppConfigSet, ids: &[impl AsRef<str>]) -> Result<AppConfigSet, ConfigError> {
        let vs = ids.iter().map(|id| self.get(id.as_ref())).collect::<Result<Vec<_>, _>>()?;
        compose_variations(base, &vs)
    }

    pub fn to_yaml(&self) -> String {
        crate::yaml::to_canonical_string(&self.variations).expect("catalog serializes")
    }
}
