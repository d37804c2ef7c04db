use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::Iri;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TextFieldSpec {
    pub predicate: Iri,
    pub field: String,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSpec {
    pub predicate: Iri,
    pub weight: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParentDirection {
    /// `(entity, p, parent)`
    Forward,
    /// `(parent, p, entity)`
    Inverse,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParentProperty {
    pub predicate: Iri,
    pub direction: ParentDirection,
}

/// Rules for turning `"PREFIX:ID"` reference literals into IRIs.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossRefRules {
    #[serde(default)]
    pub reference_predicates: BTreeSet<Iri>,
    /// Predicate of the emitted triple; must be one of the close-match predicates.
    #[serde(default)]
    pub emit_predicate: Option<Iri>,
    #[serde(default)]
    pub prefixes: BTreeMap<String, String>,
}

impl CrossRefRules {
    pub fn resolve(&self, reference: &str) -> Option<Iri> {
        let (prefix, id) = reference.trim().split_once(':')?;
        if id.is_empty() {
            return None;
        }
        let ns = self.prefixes.get(prefix)?;
        Iri::new(format!("{ns}{id}")).ok()
    }
}

/// Serialized form of the property registry, as it appears in the YAML config.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegistrySpec {
    #[serde(default)]
    pub text_fields: Vec<TextFieldSpec>,
    #[serde(default)]
    pub edge_base_weights: Vec<WeightSpec>,
    #[serde(default)]
    pub parent_properties: Vec<ParentProperty>,
    #[serde(default)]
    pub close_match_predicates: Vec<Iri>,
    #[serde(default)]
    pub prune_predicates: Vec<Iri>,
    #[serde(default)]
    pub cross_refs: Option<CrossRefRules>,
}

impl RegistrySpec {
    pub fn build(&self) -> Result<PropertyRegistry> {
        let mut text_fields = BTreeMap::new();
        for f in &self.text_fields {
            if !(f.weight > 0.0 && f.weight.is_finite()) {
                return Err(Error::Config(format!(
                    "text field {} must have a positive weight",
                    f.predicate
                )));
            }
            let prev = text_fields.insert(
                f.predicate.clone(),
                TextField {
                    name: f.field.clone(),
                    weight: f.weight,
                },
            );
            if prev.is_some() {
                return Err(Error::Config(format!(
                    "text field predicate {} listed twice",
                    f.predicate
                )));
            }
        }
        let mut edge_base_weights = BTreeMap::new();
        for w in &self.edge_base_weights {
            if !(w.weight > 0.0 && w.weight.is_finite()) {
                return Err(Error::Config(format!(
                    "edge base weight for {} must be positive",
                    w.predicate
                )));
            }
            if edge_base_weights
                .insert(w.predicate.clone(), w.weight)
                .is_some()
            {
                return Err(Error::Config(format!(
                    "edge predicate {} listed twice",
                    w.predicate
                )));
            }
        }
        let close_match_predicates: BTreeSet<Iri> =
            self.close_match_predicates.iter().cloned().collect();
        let cross_refs = self.cross_refs.clone().unwrap_or_default();
        if let Some(emit) = &cross_refs.emit_predicate {
            if !close_match_predicates.contains(emit) {
                return Err(Error::Config(format!(
                    "cross-reference predicate {emit} is not a close-match predicate"
                )));
            }
        }
        Ok(PropertyRegistry {
            text_fields,
            edge_base_weights,
            parent_properties: self.parent_properties.clone(),
            close_match_predicates,
            prune_predicates: self.prune_predicates.iter().cloned().collect(),
            cross_refs,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TextField {
    pub name: String,
    pub weight: f64,
}

/// Validated property semantics used throughout the pipeline.
#[derive(Clone, Debug, PartialEq)]
pub struct PropertyRegistry {
    text_fields: BTreeMap<Iri, TextField>,
    edge_base_weights: BTreeMap<Iri, f64>,
    parent_properties: Vec<ParentProperty>,
    close_match_predicates: BTreeSet<Iri>,
    prune_predicates: BTreeSet<Iri>,
    cross_refs: CrossRefRules,
}

impl PropertyRegistry {
    pub fn text_field(&self, predicate: &Iri) -> Option<&TextField> {
        self.text_fields.get(predicate)
    }

    pub fn text_fields(&self) -> &BTreeMap<Iri, TextField> {
        &self.text_fields
    }

    pub fn edge_base_weight(&self, predicate: &Iri) -> Option<f64> {
        self.edge_base_weights.get(predicate).copied()
    }

    pub fn parent_properties(&self) -> &[ParentProperty] {
        &self.parent_properties
    }

    pub fn close_match_predicates(&self) -> &BTreeSet<Iri> {
        &self.close_match_predicates
    }

    pub fn prune_predicates(&self) -> &BTreeSet<Iri> {
        &self.prune_predicates
    }

    pub fn cross_refs(&self) -> &CrossRefRules {
        &self.cross_refs
    }
}
