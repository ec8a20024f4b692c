//! Event ontology: type definitions, keywords and output templates.
//!
//! A template is stored as alternating fixed segments and slots:
//!
//! ```text
//! segments:  ""      " attacked "     " by "       " in "       "."
//! slots:       some attacker   some facility, ...   some way   somewhere
//! ```
//!
//! so that `segments[0] + slot[0] + segments[1] + ... + segments[n]` is the
//! template text byte-for-byte. The decoder anchors on the fixed segments.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Placeholder of the trigger slot in ED and E2E templates.
pub const TRIGGER_PLACEHOLDER: &str = "<Trigger>";

const ED_PREFIX: &str = "Event trigger is ";
const ED_SUFFIX: &str = ".";

static ACE05_JSON: &str = include_str!("../data/ace05.json");
static ERE_JSON: &str = include_str!("../data/ere.json");

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RoleId(String);

impl RoleId {
    pub fn new(name: impl Into<String>) -> Self {
        RoleId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for RoleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for RoleId {
    fn from(s: &str) -> Self {
        RoleId(s.to_string())
    }
}

/// What a template slot gets filled with.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SlotTarget {
    Trigger,
    Role(RoleId),
}

impl SlotTarget {
    pub fn role(&self) -> Option<&RoleId> {
        match self {
            SlotTarget::Trigger => None,
            SlotTarget::Role(r) => Some(r),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSlot {
    pub placeholder: String,
    pub target: SlotTarget,
    /// Ordinal within the template.
    pub position: usize,
}

impl TemplateSlot {
    /// Whether `raw` (an extracted fill) means "no prediction" for this slot.
    pub fn is_unfilled(&self, raw: &str) -> bool {
        let raw = raw.trim();
        raw.is_empty() || raw == self.placeholder.trim()
    }

    /// Text that replaces the placeholder for the given values.
    pub fn render(&self, values: &[String], and_joiner: &str) -> String {
        if values.is_empty() {
            return self.placeholder.clone();
        }
        let joined = values.join(and_joiner);
        if self.placeholder.trim().is_empty() {
            // tag-pair templates put the value between the tags
            format!(" {joined} ")
        } else {
            joined
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemplateKind {
    Ed,
    Eae,
    E2e,
}

impl fmt::Display for TemplateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TemplateKind::Ed => "ed",
            TemplateKind::Eae => "eae",
            TemplateKind::E2e => "e2e",
        })
    }
}

/// Surface form of an argument template.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemplateVariant {
    /// Natural sentence with "some-" placeholders.
    #[default]
    Natural,
    /// Natural sentence with `<Role>` placeholders.
    #[serde(alias = "special")]
    SpecialToken,
    /// `<Role> </Role>` tag pairs only.
    #[serde(alias = "html")]
    HtmlLike,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSpec {
    kind: TemplateKind,
    segments: Vec<String>,
    slots: Vec<TemplateSlot>,
}

impl TemplateSpec {
    /// Builds a template from its text and an ordered slot table.
    ///
    /// Slots are located left to right: each placeholder is searched for
    /// after the end of the previous one. A placeholder that also shows up
    /// inside a fixed segment is rejected as repeated, since the decoder
    /// could not tell the two apart.
    pub fn from_text(
        text: &str,
        kind: TemplateKind,
        slot_table: &[(String, SlotTarget)],
    ) -> std::result::Result<Self, String> {
        let mut segments = Vec::with_capacity(slot_table.len() + 1);
        let mut slots = Vec::with_capacity(slot_table.len());
        let mut cursor = 0;
        let mut seen_roles = BTreeSet::new();
        for (position, (placeholder, target)) in slot_table.iter().enumerate() {
            if placeholder.trim().is_empty() {
                return Err(format!("slot {position} has a blank placeholder"));
            }
            match target {
                SlotTarget::Trigger if kind == TemplateKind::Eae => {
                    return Err("trigger slot in an argument template".into());
                }
                SlotTarget::Role(role) if !seen_roles.insert(role.clone()) => {
                    return Err(format!("role {role} has more than one slot"));
                }
                _ => {}
            }
            let Some(offset) = text[cursor..].find(placeholder.as_str()) else {
                return Err(format!(
                    "placeholder {placeholder:?} absent from template text (or out of slot order)"
                ));
            };
            segments.push(text[cursor..cursor + offset].to_string());
            cursor += offset + placeholder.len();
            slots.push(TemplateSlot {
                placeholder: placeholder.clone(),
                target: target.clone(),
                position,
            });
        }
        segments.push(text[cursor..].to_string());

        for slot in &slots {
            if segments.iter().any(|s| s.contains(slot.placeholder.as_str())) {
                return Err(format!(
                    "placeholder {:?} is repeated in template text",
                    slot.placeholder
                ));
            }
        }
        Ok(TemplateSpec {
            kind,
            segments,
            slots,
        })
    }

    /// The event detection template, "Event trigger is <Trigger>."
    pub fn ed() -> Self {
        TemplateSpec {
            kind: TemplateKind::Ed,
            segments: vec![ED_PREFIX.to_string(), ED_SUFFIX.to_string()],
            slots: vec![TemplateSlot {
                placeholder: TRIGGER_PLACEHOLDER.to_string(),
                target: SlotTarget::Trigger,
                position: 0,
            }],
        }
    }

    pub fn kind(&self) -> TemplateKind {
        self.kind
    }

    pub fn segments(&self) -> &[String] {
        &self.segments
    }

    pub fn slots(&self) -> &[TemplateSlot] {
        &self.slots
    }

    pub fn text(&self) -> String {
        self.fill_with(|slot| slot.placeholder.clone())
    }

    /// Renders the template with `values[i]` substituted into slot `i`.
    /// Slots with no values keep their placeholder.
    pub fn fill(&self, values: &[Vec<String>], and_joiner: &str) -> String {
        self.fill_with(|slot| match values.get(slot.position) {
            Some(v) => slot.render(v, and_joiner),
            None => slot.placeholder.clone(),
        })
    }

    fn fill_with(&self, mut slot_text: impl FnMut(&TemplateSlot) -> String) -> String {
        let mut out = String::new();
        for (i, seg) in self.segments.iter().enumerate() {
            out.push_str(seg);
            if let Some(slot) = self.slots.get(i) {
                out.push_str(&slot_text(slot));
            }
        }
        out
    }

    pub fn slot_for_role(&self, role: &RoleId) -> Option<&TemplateSlot> {
        self.slots.iter().find(|s| s.target.role() == Some(role))
    }

    pub fn trigger_slot(&self) -> Option<&TemplateSlot> {
        self.slots.iter().find(|s| s.target == SlotTarget::Trigger)
    }
}

/// Re-renders an argument template in one of the surface variants.
///
/// Non-argument templates are returned unchanged.
pub fn render_variant(spec: &TemplateSpec, variant: TemplateVariant) -> TemplateSpec {
    if spec.kind != TemplateKind::Eae {
        return spec.clone();
    }
    match variant {
        TemplateVariant::Natural => spec.clone(),
        TemplateVariant::SpecialToken => TemplateSpec {
            kind: spec.kind,
            segments: spec.segments.clone(),
            slots: spec
                .slots
                .iter()
                .map(|s| TemplateSlot {
                    placeholder: tag_for(&s.target, false),
                    target: s.target.clone(),
                    position: s.position,
                })
                .collect(),
        },
        TemplateVariant::HtmlLike => {
            let n = spec.slots.len();
            let mut segments = Vec::with_capacity(n + 1);
            for i in 0..=n {
                let close = i.checked_sub(1).map(|j| tag_for(&spec.slots[j].target, true));
                let open = spec.slots.get(i).map(|s| tag_for(&s.target, false));
                let seg = match (close, open) {
                    (Some(c), Some(o)) => format!("{c} {o}"),
                    (Some(c), None) => c,
                    (None, Some(o)) => o,
                    (None, None) => String::new(),
                };
                segments.push(seg);
            }
            TemplateSpec {
                kind: spec.kind,
                segments,
                slots: spec
                    .slots
                    .iter()
                    .map(|s| TemplateSlot {
                        placeholder: " ".to_string(),
                        target: s.target.clone(),
                        position: s.position,
                    })
                    .collect(),
            }
        }
    }
}

fn tag_for(target: &SlotTarget, closing: bool) -> String {
    let name = match target {
        SlotTarget::Trigger => "Trigger",
        SlotTarget::Role(r) => r.as_str(),
    };
    if closing {
        format!("</{name}>")
    } else {
        format!("<{name}>")
    }
}

/// Joins the ED template and an argument template into an E2E template.
pub fn join_e2e(eae: &TemplateSpec) -> TemplateSpec {
    let ed = TemplateSpec::ed();
    let mut segments: Vec<String> = ed.segments[..ed.segments.len() - 1].to_vec();
    segments.push(format!(
        "{} {}",
        ed.segments.last().expect("ed template has segments"),
        eae.segments[0]
    ));
    segments.extend(eae.segments[1..].iter().cloned());
    let slots = ed
        .slots
        .iter()
        .chain(eae.slots.iter())
        .enumerate()
        .map(|(position, s)| TemplateSlot {
            position,
            ..s.clone()
        })
        .collect();
    TemplateSpec {
        kind: TemplateKind::E2e,
        segments,
        slots,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventSchema {
    pub event_type: String,
    pub definition: String,
    pub keywords: Vec<String>,
    pub roles: BTreeSet<RoleId>,
    pub eae_template: TemplateSpec,
    pub note: Option<String>,
}

impl EventSchema {
    /// E2E template in the natural variant.
    pub fn e2e_template(&self) -> TemplateSpec {
        join_e2e(&self.eae_template)
    }

    /// The output template used for `kind`, rendered in `variant`.
    pub fn template(&self, kind: TemplateKind, variant: TemplateVariant) -> TemplateSpec {
        match kind {
            TemplateKind::Ed => TemplateSpec::ed(),
            TemplateKind::Eae => render_variant(&self.eae_template, variant),
            TemplateKind::E2e => join_e2e(&render_variant(&self.eae_template, variant)),
        }
    }

    /// Roles the schema allows but the template has no slot for.
    pub fn unslotted_roles(&self) -> Vec<&RoleId> {
        self.roles
            .iter()
            .filter(|r| self.eae_template.slot_for_role(r).is_none())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ontology {
    pub name: String,
    schemas: BTreeMap<String, EventSchema>,
    role_universe: BTreeSet<RoleId>,
}

#[derive(Debug, Serialize, Deserialize)]
struct OntologyFile {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    name: String,
    roles: Vec<String>,
    events: Vec<EventEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct EventEntry {
    #[serde(rename = "type")]
    event_type: String,
    #[serde(default)]
    definition: String,
    #[serde(default)]
    keywords: Vec<String>,
    template: String,
    slots: Vec<SlotEntry>,
    /// Roles allowed for the type that have no placeholder.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    extra_roles: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SlotEntry {
    placeholder: String,
    role: String,
}

impl Ontology {
    /// ACE 2005 event ontology (33 types, 22 roles).
    pub fn ace05() -> Self {
        Self::from_json_str(ACE05_JSON).expect("bundled ACE ontology is valid")
    }

    /// ERE-EN event ontology (38 types, 21 roles).
    pub fn ere() -> Self {
        Self::from_json_str(ERE_JSON).expect("bundled ERE ontology is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ontology = Self::from_json_str(&text)?;
        for warning in ontology.lint() {
            log::warn!("{}: {warning}", path.display());
        }
        Ok(ontology)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        if text.trim().is_empty() {
            return Err(Error::Ontology("no schemas".into()));
        }
        let file: OntologyFile =
            serde_json::from_str(text).map_err(|e| Error::json("ontology", e))?;
        Self::from_file(file)
    }

    fn from_file(file: OntologyFile) -> Result<Self> {
        if file.events.is_empty() {
            return Err(Error::Ontology("no schemas".into()));
        }
        let mut role_universe = BTreeSet::new();
        for role in &file.roles {
            if role.trim().is_empty() {
                return Err(Error::Ontology("empty role name".into()));
            }
            if !role_universe.insert(RoleId::new(role.as_str())) {
                return Err(Error::Ontology(format!("duplicate role {role:?}")));
            }
        }

        let mut schemas = BTreeMap::new();
        for entry in file.events {
            let schema = build_schema(entry, &role_universe)?;
            if schemas.contains_key(&schema.event_type) {
                return Err(Error::Ontology(format!(
                    "duplicate event type {:?}",
                    schema.event_type
                )));
            }
            schemas.insert(schema.event_type.clone(), schema);
        }
        Ok(Ontology {
            name: file.name,
            schemas,
            role_universe,
        })
    }

    pub fn to_json_string(&self) -> String {
        let file = OntologyFile {
            name: self.name.clone(),
            roles: self.role_universe.iter().map(|r| r.to_string()).collect(),
            events: self
                .schemas
                .values()
                .map(|s| EventEntry {
                    event_type: s.event_type.clone(),
                    definition: s.definition.clone(),
                    keywords: s.keywords.clone(),
                    template: s.eae_template.text(),
                    slots: s
                        .eae_template
                        .slots()
                        .iter()
                        .map(|slot| SlotEntry {
                            placeholder: slot.placeholder.clone(),
                            role: slot.target.role().map(|r| r.to_string()).unwrap_or_default(),
                        })
                        .collect(),
                    extra_roles: s.unslotted_roles().iter().map(|r| r.to_string()).collect(),
                    note: s.note.clone(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("ontology serializes")
    }

    /// Non-fatal findings: keyword counts other than three, roles without
    /// a placeholder (these can never be predicted).
    pub fn lint(&self) -> Vec<String> {
        let mut out = Vec::new();
        for s in self.schemas.values() {
            if s.keywords.len() != 3 {
                out.push(format!(
                    "{} has {} keywords (expected 3)",
                    s.event_type,
                    s.keywords.len()
                ));
            }
            for role in s.unslotted_roles() {
                out.push(format!(
                    "{}: role {role} has no placeholder and cannot be predicted",
                    s.event_type
                ));
            }
        }
        out
    }

    pub fn get(&self, event_type: &str) -> Option<&EventSchema> {
        self.schemas.get(event_type)
    }

    pub fn schema(&self, event_type: &str) -> Result<&EventSchema> {
        self.get(event_type)
            .ok_or_else(|| Error::UnknownEventType(event_type.to_string()))
    }

    /// Schemas in event-type order.
    pub fn schemas(&self) -> impl Iterator<Item = &EventSchema> {
        self.schemas.values()
    }

    pub fn event_types(&self) -> impl Iterator<Item = &str> {
        self.schemas.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.schemas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.schemas.is_empty()
    }

    pub fn role_universe(&self) -> &BTreeSet<RoleId> {
        &self.role_universe
    }

    /// Keeps only the given event types.
    pub fn restricted_to<'a>(&self, types: impl IntoIterator<Item = &'a str>) -> Ontology {
        let keep: BTreeSet<&str> = types.into_iter().collect();
        Ontology {
            name: self.name.clone(),
            schemas: self
                .schemas
                .iter()
                .filter(|(k, _)| keep.contains(k.as_str()))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
            role_universe: self.role_universe.clone(),
        }
    }
}

fn build_schema(entry: EventEntry, universe: &BTreeSet<RoleId>) -> Result<EventSchema> {
    let et = entry.event_type.clone();
    let template_err = |reason: String| Error::Template {
        event_type: et.clone(),
        reason,
    };
    if et.trim().is_empty() {
        return Err(Error::Ontology("event with an empty type name".into()));
    }
    if entry.definition.trim().is_empty() {
        return Err(Error::Ontology(format!("{et}: missing definition")));
    }
    if entry.keywords.iter().all(|k| k.trim().is_empty()) {
        return Err(Error::Ontology(format!("{et}: missing keywords")));
    }

    let mut roles = BTreeSet::new();
    let mut table = Vec::with_capacity(entry.slots.len());
    for slot in &entry.slots {
        let role = RoleId::new(slot.role.as_str());
        if !universe.contains(&role) {
            return Err(template_err(format!(
                "slot {:?} maps to undeclared role {:?}",
                slot.placeholder, slot.role
            )));
        }
        roles.insert(role.clone());
        table.push((slot.placeholder.clone(), SlotTarget::Role(role)));
    }
    for extra in &entry.extra_roles {
        let role = RoleId::new(extra.as_str());
        if !universe.contains(&role) {
            return Err(Error::Ontology(format!("{et}: undeclared role {extra:?}")));
        }
        roles.insert(role);
    }
    let eae_template =
        TemplateSpec::from_text(&entry.template, TemplateKind::Eae, &table).map_err(template_err)?;

    Ok(EventSchema {
        event_type: entry.event_type,
        definition: entry.definition,
        keywords: entry.keywords,
        roles,
        eae_template,
        note: entry.note,
    })
}
