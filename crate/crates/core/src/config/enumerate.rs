//! Combinatorial variant generator.
//!
//! Variations sharing an `axis` are alternatives; a variant picks at most one
//! member per axis. In per-app mode each app (and the globals) picks its own
//! combination independently.

use std::collections::HashSet;

use super::variation::{apply_concrete, Concrete, Seg};
use super::{AppConfigSet, Catalog, ConfigError, Variation};
use crate::state::AppId;

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    /// Alternatives besides "none".
    pub members: Vec<Variation>,
}

/// Group a catalog into axes, in order of first appearance. A variation with
/// no axis and a non-empty patch set forms its own axis.
pub fn axes(catalog: &Catalog) -> Vec<Axis> {
    let mut out: Vec<Axis> = Vec::new();
    for v in &catalog.variations {
        if v.patches.is_empty() {
            continue;
        }
        let name = v.axis.clone().unwrap_or_else(|| v.id.clone());
        match out.iter_mut().find(|a| a.name == name) {
            Some(a) => a.members.push(v.clone()),
            None => out.push(Axis { name, members: vec![v.clone()] }),
        }
    }
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EnumerateLimits {
    pub limit: Option<usize>,
    pub per_app: bool,
}

#[derive(Debug, Clone)]
pub struct Variant {
    /// `base`, `dark_theme+german`, or per app `calendar=dark_theme;todo=german`.
    pub id: String,
    pub config: AppConfigSet,
    pub digest: String,
}

const UNITS: [&str; 7] = ["globals", "calendar", "todo", "messenger", "maps", "codeeditor", "shop"];

fn in_unit(c: &Concrete, unit: &str) -> bool {
    match c.path.as_slice() {
        [Seg::Key(g), ..] if g == "globals" => unit == "globals",
        [Seg::Key(a), Seg::Key(app), ..] if a == "apps" => app == unit,
        _ => false,
    }
}

/// Lazily yields distinct, valid variants in a fixed order.
pub struct VariantStream {
    base: AppConfigSet,
    /// combos[i] = (label, resolved patches) for global combination i.
    combos: Vec<(String, Vec<Concrete>)>,
    per_app: bool,
    digits: Vec<usize>,
    done: bool,
    seen: HashSet<String>,
    limit: Option<usize>,
    pub yielded: usize,
    pub duplicates: usize,
    pub invalid: usize,
}

impl VariantStream {
    /// Number of raw combinations before de-duplication.
    pub fn combination_count(&self) -> u128 {
        let k = self.combos.len() as u128;
        if self.per_app {
            k.pow(UNITS.len() as u32)
        } else {
            k
        }
    }

    fn advance(&mut self) {
        for d in self.digits.iter_mut().rev() {
            *d += 1;
            if *d < self.combos.len() {
                return;
            }
            *d = 0;
        }
        self.done = true;
    }

    fn candidate(&self) -> (String, Vec<Concrete>) {
        if !self.per_app {
            return self.combos[self.digits[0]].clone();
        }
        let mut labels = Vec::new();
        let mut patches = Vec::new();
        for (unit, &d) in UNITS.iter().zip(&self.digits) {
            let (label, combo) = &self.combos[d];
            if d != 0 {
                labels.push(format!("{unit}={label}"));
            }
            patches.extend(combo.iter().filter(|c| in_unit(c, unit)).cloned());
        }
        let id = if labels.is_empty() { "base".to_string() } else { labels.join(";") };
        (id, patches)
    }
}

impl Iterator for VariantStream {
    type Item = Variant;

    fn next(&mut self) -> Option<Variant> {
        while !self.done {
            if self.limit.is_some_and(|l| self.yielded >= l) {
                return None;
            }
            let (id, patches) = self.candidate();
            self.advance();
            match apply_concrete(&self.base, &patches) {
                Ok(config) => {
                    let digest = config.digest();
                    if self.seen.insert(digest.clone()) {
                        self.yielded += 1;
                        return Some(Variant { id, config, digest });
                    }
                    self.duplicates += 1;
                }
                Err(_) => self.invalid += 1,
            }
        }
        None
    }
}

/// Enumerate distinct variants of `base`. Combinations whose patches conflict
/// are skipped.
pub fn enumerate_variants(
    base: &AppConfigSet,
    catalog: &Catalog,
    limits: EnumerateLimits,
) -> Result<VariantStream, ConfigError> {
    let value = base.to_value();
    let axes = axes(catalog);
    let mut resolved: Vec<Vec<Vec<Concrete>>> = Vec::new();
    for axis in &axes {
        let members = axis
            .members
            .iter()
            .map(|v| v.resolve(&value))
            .collect::<Result<Vec<_>, _>>()?;
        resolved.push(members);
    }

    // mixed-radix walk over (none | member) per axis, first axis slowest
    let mut combos = Vec::new();
    let mut pick = vec![0usize; axes.len()];
    loop {
        let mut ids = Vec::new();
        let mut patches = Vec::new();
        for (i, &p) in pick.iter().enumerate() {
            if p > 0 {
                ids.push(axes[i].members[p - 1].id.clone());
                patches.extend(resolved[i][p - 1].iter().cloned());
            }
        }
        let label = if ids.is_empty() { "base".to_string() } else { ids.join("+") };
        combos.push((label, patches));

        let mut carry = true;
        for i in (0..pick.len()).rev() {
            pick[i] += 1;
            if pick[i] <= axes[i].members.len() {
                carry = false;
                break;
            }
            pick[i] = 0;
        }
        if carry {
            break;
        }
    }

    let units = if limits.per_app { UNITS.len() } else { 1 };
    debug_assert_eq!(UNITS.len(), AppId::ALL.len() + 1);
    Ok(VariantStream {
        base: base.clone(),
        combos,
        per_app: limits.per_app,
        digits: vec![0; units],
        done: false,
        seen: HashSet::new(),
        limit: limits.limit,
        yielded: 0,
        duplicates: 0,
        invalid: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::default_config;

    #[test]
    fn empty_catalog_yields_base_only() {
        let base = default_config();
        let out: Vec<Variant> =
            enumerate_variants(&base, &Catalog::default(), EnumerateLimits::default())
                .unwrap()
                .collect();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].id, "base");
        assert_eq!(out[0].config, base);
    }

    #[test]
    fn shipped_catalog_count_matches_product() {
        let base = default_config();
        let catalog = Catalog::shipped();
        let expected: usize = axes(&catalog).iter().map(|a| a.members.len() + 1).product();
        // palette {none, bw, dark} x font {none, brush} x language {none, de} x descriptions {none, 3}
        assert_eq!(expected, 3 * 2 * 2 * 4);
        let stream = enumerate_variants(&base, &catalog, EnumerateLimits::default()).unwrap();
        assert_eq!(stream.combination_count(), expected as u128);
        assert_eq!(stream.count(), expected);
    }

    #[test]
    fn deterministic_and_limited() {
        let base = default_config();
        let run = || {
            enumerate_variants(
                &base,
                &Catalog::all(),
                EnumerateLimits { limit: Some(40), per_app: true },
            )
            .unwrap()
            .map(|v| v.digest)
            .collect::<Vec<_>>()
        };
        let a = run();
        assert_eq!(a.len(), 40);
        assert_eq!(a, run());
    }
}
