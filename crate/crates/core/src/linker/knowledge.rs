//! Knowledge sources for value linking.
//!
//! Only two relations are consulted: "is a type of" and "related terms",
//! which correspond to ConceptNet's `/r/IsA` and `/r/RelatedTo`.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Relation {
    IsA,
    RelatedTo,
    /// Any relation the linker ignores.
    Other,
}

impl Relation {
    /// Accepts `IsA`, `/r/IsA` and the like.
    pub fn parse(s: &str) -> Relation {
        match s.trim().trim_start_matches("/r/") {
            "IsA" => Relation::IsA,
            "RelatedTo" => Relation::RelatedTo,
            _ => Relation::Other,
        }
    }

    pub fn is_linking(self) -> bool {
        self != Relation::Other
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KnowledgeEdge {
    pub relation: Relation,
    pub term: String,
}

pub trait KnowledgeSource: Send + Sync {
    /// Raw edges leaving `term`; callers filter by relation.
    fn lookup(&self, term: &str) -> Result<Vec<KnowledgeEdge>>;
}

/// Results for `term` restricted to the two linking relations, lower-cased
/// and deduplicated in first-seen order.
pub fn knowledge_lookup(ks: &dyn KnowledgeSource, term: &str) -> Result<Vec<String>> {
    let mut out: Vec<String> = Vec::new();
    for edge in ks.lookup(term)? {
        if !edge.relation.is_linking() {
            continue;
        }
        let t = edge.term.trim().to_lowercase();
        if !t.is_empty() && !out.contains(&t) {
            out.push(t);
        }
    }
    Ok(out)
}

/// Always empty.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoKnowledge;

impl KnowledgeSource for NoKnowledge {
    fn lookup(&self, _term: &str) -> Result<Vec<KnowledgeEdge>> {
        Ok(Vec::new())
    }
}

/// Offline source backed by `term<TAB>relation<TAB>result` lines.
#[derive(Debug, Clone, Default)]
pub struct FixtureKnowledge {
    edges: HashMap<String, Vec<KnowledgeEdge>>,
}

impl FixtureKnowledge {
    pub fn parse(text: &str) -> Result<Self> {
        let mut edges: HashMap<String, Vec<KnowledgeEdge>> = HashMap::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [term, relation, result] = fields[..] else {
                return Err(Error::KnowledgeSource(format!(
                    "line {}: expected 3 tab-separated fields, found {}",
                    n + 1,
                    fields.len()
                )));
            };
            edges
                .entry(normalize_term(term))
                .or_default()
                .push(KnowledgeEdge {
                    relation: Relation::parse(relation),
                    term: result.trim().to_string(),
                });
        }
        Ok(FixtureKnowledge { edges })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::KnowledgeSource(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

impl KnowledgeSource for FixtureKnowledge {
    fn lookup(&self, term: &str) -> Result<Vec<KnowledgeEdge>> {
        Ok(self.edges.get(&normalize_term(term)).cloned().unwrap_or_default())
    }
}

fn normalize_term(term: &str) -> String {
    term.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

#[cfg(feature = "http")]
pub use http::HttpKnowledge;

#[cfg(feature = "http")]
mod http {
    use std::fmt::Write as _;
    use std::fs;
    use std::path::PathBuf;
    use std::sync::Mutex;
    use std::time::Duration;

    use serde::Deserialize;

    use super::{normalize_term, KnowledgeEdge, KnowledgeSource, Relation};
    use crate::error::{Error, Result};

    #[derive(Deserialize)]
    struct Response {
        #[serde(default)]
        edges: Vec<Edge>,
    }

    #[derive(Deserialize)]
    struct Edge {
        rel: Node,
        start: Node,
        end: Node,
    }

    #[derive(Deserialize)]
    struct Node {
        #[serde(rename = "@id")]
        id: String,
        #[serde(default)]
        label: Option<String>,
    }

    /// Client for a ConceptNet-compatible `/c/en/<term>` endpoint with an
    /// optional on-disk cache of raw responses.
    pub struct HttpKnowledge {
        base_url: String,
        agent: ureq::Agent,
        cache_dir: Option<PathBuf>,
        cache_lock: Mutex<()>,
    }

    impl HttpKnowledge {
        pub const TIMEOUT: Duration = Duration::from_secs(5);

        pub fn new(base_url: impl Into<String>, cache_dir: Option<PathBuf>) -> Self {
            let agent: ureq::Agent = ureq::Agent::config_builder()
                .timeout_global(Some(Self::TIMEOUT))
                .build()
                .into();
            HttpKnowledge {
                base_url: base_url.into().trim_end_matches('/').to_string(),
                agent,
                cache_dir,
                cache_lock: Mutex::new(()),
            }
        }

        fn concept(term: &str) -> String {
            normalize_term(term).replace(' ', "_")
        }

        fn url(&self, term: &str) -> String {
            let mut path = String::new();
            for b in Self::concept(term).bytes() {
                if b.is_ascii_alphanumeric() || b"-_.~".contains(&b) {
                    path.push(b as char);
                } else {
                    let _ = write!(path, "%{b:02X}");
                }
            }
            format!("{}/c/en/{path}?limit=1000", self.base_url)
        }

        fn cache_path(&self, term: &str) -> Option<PathBuf> {
            let dir = self.cache_dir.as_ref()?;
            let mut name = String::new();
            for b in Self::concept(term).bytes() {
                let _ = write!(name, "{b:02x}");
            }
            Some(dir.join(format!("{name}.json")))
        }

        fn fetch(&self, term: &str) -> Result<String> {
            let cache = self.cache_path(term);
            if let Some(body) = cache.as_ref().and_then(|p| fs::read_to_string(p).ok()) {
                return Ok(body);
            }
            let url = self.url(term);
            let body = self
                .agent
                .get(&url)
                .call()
                .and_then(|mut r| r.body_mut().read_to_string())
                .map_err(|e| Error::KnowledgeSource(format!("GET {url}: {e}")))?;
            if let Some(path) = cache {
                // Single writer; a failed cache write is not a lookup failure.
                let _guard = self.cache_lock.lock().unwrap_or_else(|e| e.into_inner());
                if let Some(dir) = path.parent() {
                    let _ = fs::create_dir_all(dir);
                }
                let tmp = path.with_extension("tmp");
                if fs::write(&tmp, &body).is_ok() {
                    let _ = fs::rename(&tmp, &path);
                }
            }
            Ok(body)
        }
    }

    impl KnowledgeSource for HttpKnowledge {
        fn lookup(&self, term: &str) -> Result<Vec<KnowledgeEdge>> {
            let body = self.fetch(term)?;
            let response: Response = serde_json::from_str(&body)
                .map_err(|e| Error::KnowledgeSource(format!("malformed response: {e}")))?;
            let own = format!("/c/en/{}", Self::concept(term));
            let is_own = |id: &str| id == own || id.starts_with(&format!("{own}/"));
            let label = |n: &Node| {
                n.label.clone().unwrap_or_else(|| {
                    n.id.split('/').nth(3).unwrap_or_default().replace('_', " ")
                })
            };
            let english = |n: &Node| n.id.starts_with("/c/en/");
            let mut out = Vec::new();
            for e in &response.edges {
                let relation = Relation::parse(&e.rel.id);
                if !relation.is_linking() {
                    continue;
                }
                let other = if is_own(&e.start.id) {
                    &e.end
                } else if relation == Relation::RelatedTo && is_own(&e.end.id) {
                    &e.start
                } else {
                    continue;
                };
                if english(other) {
                    out.push(KnowledgeEdge {
                        relation,
                        term: label(other),
                    });
                }
            }
            Ok(out)
        }
    }
}
