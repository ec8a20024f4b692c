//! Define a small ontology in JSON and fill its template.

use evtgen::ontology::{Ontology, TemplateKind, TemplateVariant};

const ONTOLOGY: &str = r#"{
  "name": "sports",
  "roles": ["Winner", "Loser", "Place"],
  "events": [
    {
      "type": "Match:Win",
      "definition": "The event is related to a team or player winning a match.",
      "keywords": ["beat", "defeated", "won"],
      "template": "some team defeated some opponent at somewhere.",
      "slots": [
        {"placeholder": "some team", "role": "Winner"},
        {"placeholder": "some opponent", "role": "Loser"},
        {"placeholder": "somewhere", "role": "Place"}
      ]
    }
  ]
}"#;

fn main() -> evtgen::Result<()> {
    let onto = Ontology::from_json_str(ONTOLOGY)?;
    let schema = onto.schema("Match:Win")?;
    for w in onto.lint() {
        println!("lint: {w}");
    }

    let values = vec![
        vec!["Ajax".to_string()],
        vec![],
        vec!["Rotterdam".to_string(), "Feyenoord Stadium".to_string()],
    ];
    println!("{}", schema.eae_template.fill(&values, " and "));
    let html = schema.template(TemplateKind::Eae, TemplateVariant::HtmlLike);
    println!("{}", html.fill(&values, " and "));

    // round-trips through the same JSON shape the loader reads
    let again = Ontology::from_json_str(&onto.to_json_string())?;
    assert_eq!(again.schema("Match:Win")?, schema);
    Ok(())
}
