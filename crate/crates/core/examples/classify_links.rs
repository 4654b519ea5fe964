//! Classify project links and expand a FUNDING.yml manifest.
//!
//! cargo run --example classify_links [URL...]

use linkstudy::harvest::links::expand_funding_manifest;
use linkstudy::harvest::{classify_str, classify::github_repo_slug};

fn main() {
    let mut urls: Vec<String> = std::env::args().skip(1).collect();
    if urls.is_empty() {
        urls = [
            "https://github.com/pallets/flask",
            "https://github.com/sponsors/davidism",
            "https://gitlab.com/inkscape/inkscape",
            "https://opencollective.com/pytest",
            "https://www.patreon.com/someone",
            "https://flask.palletsprojects.com/",
            "not a url",
        ]
        .map(String::from)
        .to_vec();
    }
    for url in &urls {
        match classify_str(url) {
            Some((category, platform)) => {
                let slug = github_repo_slug(url).map(|(o, r)| format!(" [{o}/{r}]")).unwrap_or_default();
                println!("{:<12} {:<16} {url}{slug}", format!("{category:?}"), platform.as_str());
            }
            None => println!("{:<29} {url}", "unparsable"),
        }
    }

    let manifest = "github: [octocat, hubot]\npatreon: octo\ncustom: [\"https://example.org/donate\"]\nissuehunt: x\n";
    let expansion = expand_funding_manifest(manifest).expect("valid YAML");
    println!("\nFUNDING.yml expands to:");
    for (url, platform) in &expansion.links {
        println!("  {:<16} {url}", platform.as_str());
    }
    println!("ignored keys: {:?}", expansion.unknown_keys);
}
