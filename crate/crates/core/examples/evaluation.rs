//! Build the rating form for an archived run, then score a set of rater
//! exports against it.
//!
//! cargo run --example evaluation [OUT_HTML]

use std::path::PathBuf;

use linkstudy::evaluation::{
    aggregate_loaded, extract_payload, generate_form, load_bundles, load_ui_bundle, quality, GatingMode,
};
use linkstudy::topics::RunRecord;

fn main() -> anyhow::Result<()> {
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let run: RunRecord = serde_json::from_str(&std::fs::read_to_string(fixtures.join("evaluation/run.json"))?)?;
    let bundle = load_ui_bundle(&fixtures.join("ui/eval-form.js"))?;

    let form = generate_form(&run, &bundle)?;
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("linkstudy-eval-form.html"));
    std::fs::write(&out, &form.html)?;
    println!(
        "wrote {} ({} topics, form hash {})",
        out.display(),
        form.payload.topic_count(),
        form.payload.form_hash
    );

    // The exporter and the report agree on the payload embedded in the page.
    let payload = extract_payload(&form.html)?;
    let loaded = load_bundles(&fixtures.join("evaluation/ratings"))?;
    for mode in [GatingMode::Missing, GatingMode::TreatAsNo] {
        let report = aggregate_loaded(&loaded, &payload, mode)?;
        println!("\n{mode:?}\n{}", quality::render_text(&report));
    }
    Ok(())
}
