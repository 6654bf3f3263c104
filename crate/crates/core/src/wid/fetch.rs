//! Content-addressed local cache for WID bulk files.
//!
//! Each downloaded body is stored once under `objects/<sha256>` and
//! indexed in `manifest.tsv` by source URL together with its hash and
//! retrieval time. A cached file is reused only while its hash still
//! matches the manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use sha2::{Digest, Sha256};
use thiserror::Error;

/// Base URL of an unpacked WID bulk export mirror.
pub const DEFAULT_BASE_URL: &str = "https://wid.world/bulk_download";

const MANIFEST: &str = "manifest.tsv";
const MANIFEST_HEADER: &str = "# url\tsha256\ttimestamp\tpath";

/// Minimal blocking HTTP GET.
pub trait Transport {
    fn get(&self, url: &str) -> Result<Vec<u8>, String>;
}

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("download of {url} failed: {message}{}", fallback_note(.cached_fallback))]
    Network {
        url: String,
        message: String,
        cached_fallback: Option<PathBuf>,
    },
    #[error("cache manifest line {line} is malformed")]
    Manifest { line: usize },
    #[error("country list {0} has no `alpha2` column")]
    CountryList(String),
    #[error("cache i/o: {0}")]
    Io(#[from] io::Error),
}

fn fallback_note(path: &Option<PathBuf>) -> String {
    match path {
        Some(p) => format!(" (cached copy available at {})", p.display()),
        None => String::new(),
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub url: String,
    pub sha256: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    /// Relative to the cache directory.
    pub path: PathBuf,
}

#[derive(Debug)]
pub struct Cache {
    dir: PathBuf,
    entries: BTreeMap<String, ManifestEntry>,
}

impl Cache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, FetchError> {
        let dir = dir.into();
        fs::create_dir_all(dir.join("objects"))?;
        let mut entries = BTreeMap::new();
        match fs::read_to_string(dir.join(MANIFEST)) {
            Ok(text) => {
                for (i, line) in text.lines().enumerate() {
                    if line.starts_with('#') || line.trim().is_empty() {
                        continue;
                    }
                    let parts: Vec<&str> = line.split('\t').collect();
                    let [url, sha, ts, path] = parts[..] else {
                        return Err(FetchError::Manifest { line: i + 1 });
                    };
                    let timestamp = ts
                        .parse()
                        .map_err(|_| FetchError::Manifest { line: i + 1 })?;
                    entries.insert(
                        url.to_owned(),
                        ManifestEntry {
                            url: url.to_owned(),
                            sha256: sha.to_owned(),
                            timestamp,
                            path: PathBuf::from(path),
                        },
                    );
                }
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => {}
            Err(e) => return Err(e.into()),
        }
        Ok(Self { dir, entries })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn entries(&self) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.values()
    }

    /// Path of the cached body for `url` if present and intact.
    pub fn lookup(&self, url: &str) -> Option<PathBuf> {
        let entry = self.entries.get(url)?;
        let path = self.dir.join(&entry.path);
        let bytes = fs::read(&path).ok()?;
        (sha256_hex(&bytes) == entry.sha256).then_some(path)
    }

    /// Returns the local path for `url`, downloading when the cache has
    /// no intact copy or `refresh` is set.
    pub fn get(
        &mut self,
        url: &str,
        transport: &dyn Transport,
        refresh: bool,
    ) -> Result<PathBuf, FetchError> {
        let cached = self.lookup(url);
        if let (Some(path), false) = (&cached, refresh) {
            return Ok(path.clone());
        }
        let body = transport.get(url).map_err(|message| FetchError::Network {
            url: url.to_owned(),
            message,
            cached_fallback: cached,
        })?;
        self.store(url, &body)
    }

    fn store(&mut self, url: &str, body: &[u8]) -> Result<PathBuf, FetchError> {
        let sha256 = sha256_hex(body);
        let rel = PathBuf::from("objects").join(&sha256);
        let path = self.dir.join(&rel);
        write_atomic(&path, body)?;
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        self.entries.insert(
            url.to_owned(),
            ManifestEntry {
                url: url.to_owned(),
                sha256,
                timestamp,
                path: rel,
            },
        );
        self.save()?;
        Ok(path)
    }

    fn save(&self) -> Result<(), FetchError> {
        let mut text = String::from(MANIFEST_HEADER);
        text.push('\n');
        for e in self.entries.values() {
            text.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                e.url,
                e.sha256,
                e.timestamp,
                e.path.display()
            ));
        }
        write_atomic(&self.dir.join(MANIFEST), text.as_bytes())?;
        Ok(())
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension("partial");
    fs::write(&tmp, bytes)?;
    fs::rename(tmp, path)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CountrySelection {
    All,
    Countries(Vec<String>),
}

#[derive(Debug, Clone)]
pub struct FetchOptions {
    pub base_url: String,
    pub refresh: bool,
}

impl Default for FetchOptions {
    fn default() -> Self {
        Self {
            base_url: DEFAULT_BASE_URL.into(),
            refresh: false,
        }
    }
}

fn url_for(base: &str, file: &str) -> String {
    format!("{}/{file}", base.trim_end_matches('/'))
}

/// Makes the per-country files `WID_data_<code>.csv` available locally.
/// `All` first resolves the country list from `WID_countries.csv`.
pub fn fetch_wid_bulk(
    cache: &mut Cache,
    selection: &CountrySelection,
    transport: &dyn Transport,
    options: &FetchOptions,
) -> Result<Vec<PathBuf>, FetchError> {
    let countries = match selection {
        CountrySelection::Countries(list) => list.clone(),
        CountrySelection::All => {
            let url = url_for(&options.base_url, "WID_countries.csv");
            let path = cache.get(&url, transport, options.refresh)?;
            read_country_list(&path)?
        }
    };
    countries
        .iter()
        .map(|code| {
            let url = url_for(&options.base_url, &format!("WID_data_{code}.csv"));
            cache.get(&url, transport, options.refresh)
        })
        .collect()
}

fn read_country_list(path: &Path) -> Result<Vec<String>, FetchError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    let delimiter = if header.contains(';') { ';' } else { ',' };
    let column = header
        .split(delimiter)
        .position(|h| h.trim().trim_matches('"') == "alpha2")
        .ok_or_else(|| FetchError::CountryList(path.display().to_string()))?;
    Ok(lines
        .filter_map(|l| l.split(delimiter).nth(column))
        .map(|c| c.trim().trim_matches('"').to_owned())
        .filter(|c| !c.is_empty())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cell::RefCell;

    #[derive(Default)]
    struct Fake {
        bodies: BTreeMap<String, Vec<u8>>,
        calls: RefCell<Vec<String>>,
        offline: bool,
    }

    impl Transport for Fake {
        fn get(&self, url: &str) -> Result<Vec<u8>, String> {
            self.calls.borrow_mut().push(url.to_owned());
            if self.offline {
                return Err("connection refused".into());
            }
            self.bodies
                .get(url)
                .cloned()
                .ok_or_else(|| "404".to_string())
        }
    }

    fn fake() -> Fake {
        let mut f = Fake::default();
        f.bodies.insert(
            "http://m/WID_data_US.csv".into(),
            b"country;variable;percentile;year;value\n".to_vec(),
        );
        f.bodies.insert(
            "http://m/WID_data_FR.csv".into(),
            b"country;variable;percentile;year;value\nFR;x;p0p100;2000;1\n".to_vec(),
        );
        f.bodies.insert(
            "http://m/WID_countries.csv".into(),
            b"alpha2;titlename\nUS;USA\nFR;France\n".to_vec(),
        );
        f
    }

    fn opts() -> FetchOptions {
        FetchOptions {
            base_url: "http://m/".into(),
            refresh: false,
        }
    }

    #[test]
    fn cold_then_warm() {
        let dir = tempfile::tempdir().unwrap();
        let t = fake();
        let sel = CountrySelection::Countries(vec!["US".into()]);
        let mut cache = Cache::open(dir.path()).unwrap();
        let files = fetch_wid_bulk(&mut cache, &sel, &t, &opts()).unwrap();
        assert_eq!(files.len(), 1);
        assert_eq!(t.calls.borrow().len(), 1);
        let manifest = fs::read_to_string(dir.path().join(MANIFEST)).unwrap();
        assert_eq!(manifest.lines().count(), 2);
        assert!(manifest.contains("http://m/WID_data_US.csv\t"));

        let mut reopened = Cache::open(dir.path()).unwrap();
        let again = fetch_wid_bulk(&mut reopened, &sel, &t, &opts()).unwrap();
        assert_eq!(again, files);
        assert_eq!(
            t.calls.borrow().len(),
            1,
            "warm cache must not hit the network"
        );
    }

    #[test]
    fn corrupted_file_is_refetched() {
        let dir = tempfile::tempdir().unwrap();
        let t = fake();
        let sel = CountrySelection::Countries(vec!["FR".into()]);
        let mut cache = Cache::open(dir.path()).unwrap();
        let path = fetch_wid_bulk(&mut cache, &sel, &t, &opts())
            .unwrap()
            .remove(0);
        fs::write(&path, b"garbage").unwrap();
        let mut cache = Cache::open(dir.path()).unwrap();
        let path2 = fetch_wid_bulk(&mut cache, &sel, &t, &opts())
            .unwrap()
            .remove(0);
        assert_eq!(t.calls.borrow().len(), 2);
        assert_eq!(path, path2);
        assert_eq!(
            fs::read(&path2).unwrap(),
            t.bodies["http://m/WID_data_FR.csv"]
        );
    }

    #[test]
    fn all_resolves_country_list() {
        let dir = tempfile::tempdir().unwrap();
        let t = fake();
        let mut cache = Cache::open(dir.path()).unwrap();
        let files = fetch_wid_bulk(&mut cache, &CountrySelection::All, &t, &opts()).unwrap();
        assert_eq!(files.len(), 2);
        assert_eq!(cache.entries().count(), 3);
    }

    #[test]
    fn network_failure_names_fallback() {
        let dir = tempfile::tempdir().unwrap();
        let t = fake();
        let sel = CountrySelection::Countries(vec!["US".into()]);
        let mut cache = Cache::open(dir.path()).unwrap();
        let path = fetch_wid_bulk(&mut cache, &sel, &t, &opts())
            .unwrap()
            .remove(0);

        let down = Fake {
            offline: true,
            ..Fake::default()
        };
        let refresh = FetchOptions {
            refresh: true,
            ..opts()
        };
        match fetch_wid_bulk(&mut cache, &sel, &down, &refresh) {
            Err(FetchError::Network {
                cached_fallback, ..
            }) => assert_eq!(cached_fallback, Some(path)),
            other => panic!("unexpected {other:?}"),
        }

        let cold = CountrySelection::Countries(vec!["DE".into()]);
        match fetch_wid_bulk(&mut cache, &cold, &down, &opts()) {
            Err(FetchError::Network {
                cached_fallback: None,
                ..
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}
