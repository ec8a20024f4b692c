//! Print an event type's output templates in every task and surface variant.
//!
//!     cargo run --example templates -- Conflict:Attack

use evtgen::ontology::{Ontology, TemplateKind, TemplateVariant};

fn main() {
    let ty = std::env::args().nth(1).unwrap_or_else(|| "Conflict:Attack".into());
    let ace = Ontology::ace05();
    let Some(schema) = ace.get(&ty) else {
        eprintln!("unknown event type {ty}; known types:");
        for t in ace.event_types() {
            eprintln!("  {t}");
        }
        std::process::exit(2);
    };

    println!("{ty}");
    println!("  definition: {}", schema.definition);
    println!("  keywords:   {}", schema.keywords.join(", "));
    let roles: Vec<&str> = schema.roles.iter().map(|r| r.as_str()).collect();
    println!("  roles:      {}", roles.join(", "));
    for slot in schema.eae_template.slots() {
        println!("  slot {}: {:?} -> {:?}", slot.position, slot.placeholder, slot.target);
    }
    if !schema.unslotted_roles().is_empty() {
        println!("  roles without a slot: {:?}", schema.unslotted_roles());
    }

    for kind in [TemplateKind::Ed, TemplateKind::Eae, TemplateKind::E2e] {
        for variant in [TemplateVariant::Natural, TemplateVariant::SpecialToken, TemplateVariant::HtmlLike] {
            if kind == TemplateKind::Ed && variant != TemplateVariant::Natural {
                continue;
            }
            println!("\n[{kind} / {variant:?}]\n{}", schema.template(kind, variant).text());
        }
    }

    let warnings = ace.lint();
    println!("\n{} types, {} lint warnings", ace.len(), warnings.len());
}
