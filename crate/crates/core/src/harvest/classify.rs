//! Host-based link classification.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkCategory {
    Repository,
    Donation,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Platform {
    Github,
    Gitlab,
    Bitbucket,
    Gitea,
    Codeberg,
    Sourcehut,
    GithubSponsors,
    OpenCollective,
    Patreon,
    KoFi,
    Liberapay,
    Tidelift,
    BuyMeACoffee,
    Custom,
    None,
}

impl Platform {
    pub fn as_str(self) -> &'static str {
        match self {
            Platform::Github => "github",
            Platform::Gitlab => "gitlab",
            Platform::Bitbucket => "bitbucket",
            Platform::Gitea => "gitea",
            Platform::Codeberg => "codeberg",
            Platform::Sourcehut => "sourcehut",
            Platform::GithubSponsors => "github_sponsors",
            Platform::OpenCollective => "open_collective",
            Platform::Patreon => "patreon",
            Platform::KoFi => "ko_fi",
            Platform::Liberapay => "liberapay",
            Platform::Tidelift => "tidelift",
            Platform::BuyMeACoffee => "buy_me_a_coffee",
            Platform::Custom => "custom",
            Platform::None => "none",
        }
    }

    pub fn is_repository(self) -> bool {
        matches!(
            self,
            Platform::Github
                | Platform::Gitlab
                | Platform::Bitbucket
                | Platform::Gitea
                | Platform::Codeberg
                | Platform::Sourcehut
        )
    }

    pub fn is_donation(self) -> bool {
        matches!(
            self,
            Platform::GithubSponsors
                | Platform::OpenCollective
                | Platform::Patreon
                | Platform::KoFi
                | Platform::Liberapay
                | Platform::Tidelift
                | Platform::BuyMeACoffee
                | Platform::Custom
        )
    }
}

impl std::fmt::Display for Platform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

const REPOSITORY_HOSTS: &[(&str, Platform)] = &[
    ("github.com", Platform::Github),
    ("gitlab.com", Platform::Gitlab),
    ("bitbucket.org", Platform::Bitbucket),
    ("codeberg.org", Platform::Codeberg),
    ("sr.ht", Platform::Sourcehut),
    ("gitea.com", Platform::Gitea),
];

const DONATION_HOSTS: &[(&str, Platform)] = &[
    ("opencollective.com", Platform::OpenCollective),
    ("patreon.com", Platform::Patreon),
    ("ko-fi.com", Platform::KoFi),
    ("liberapay.com", Platform::Liberapay),
    ("tidelift.com", Platform::Tidelift),
    ("buymeacoffee.com", Platform::BuyMeACoffee),
];

/// Last two DNS labels of the host. Every host in the tables is a plain
/// second-level domain, so no public-suffix list is needed for a match.
fn registrable_domain(host: &str) -> String {
    let host = host.trim_end_matches('.').to_ascii_lowercase();
    let labels: Vec<&str> = host.split('.').collect();
    if labels.len() <= 2 {
        host
    } else {
        labels[labels.len() - 2..].join(".")
    }
}

/// Classifies an absolute URL by registrable domain and, for `github.com`,
/// by the `/sponsors/` path prefix.
pub fn classify_link(url: &url::Url) -> (LinkCategory, Platform) {
    let Some(host) = url.host_str() else {
        return (LinkCategory::Other, Platform::None);
    };
    let domain = registrable_domain(host);
    if domain == "github.com" {
        let first = url
            .path_segments()
            .and_then(|mut s| s.next())
            .unwrap_or_default();
        if first.eq_ignore_ascii_case("sponsors") {
            return (LinkCategory::Donation, Platform::GithubSponsors);
        }
    }
    if let Some((_, p)) = REPOSITORY_HOSTS.iter().find(|(h, _)| *h == domain) {
        return (LinkCategory::Repository, *p);
    }
    if let Some((_, p)) = DONATION_HOSTS.iter().find(|(h, _)| *h == domain) {
        return (LinkCategory::Donation, *p);
    }
    (LinkCategory::Other, Platform::None)
}

/// Parses and classifies; `None` for strings that are not absolute URLs.
pub fn classify_str(url: &str) -> Option<(LinkCategory, Platform)> {
    let parsed = url::Url::parse(url.trim()).ok()?;
    Some(classify_link(&parsed))
}

/// `(owner, repo)` of a GitHub repository URL, if the path names one.
pub fn github_repo_slug(url: &str) -> Option<(String, String)> {
    let parsed = url::Url::parse(url.trim()).ok()?;
    if classify_link(&parsed) != (LinkCategory::Repository, Platform::Github) {
        return None;
    }
    let mut segs = parsed.path_segments()?.filter(|s| !s.is_empty());
    let owner = segs.next()?.to_owned();
    let repo = segs.next()?.trim_end_matches(".git").to_owned();
    if repo.is_empty() {
        return None;
    }
    Some((owner, repo))
}
