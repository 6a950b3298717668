//! The crawlable page universe: page records, validation, and the plain-text
//! corpus file format.

mod generate;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

pub use generate::{generate, CorpusSpec, Profile};

use crate::textfmt::{join_ids, split_ids, Header};
use crate::{Error, PageId, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PageRecord {
    pub page_id: PageId,
    pub url: String,
    pub outlinks: Vec<PageId>,
    pub tokens: Vec<String>,
}

/// Pages plus the seed ids a crawl starts from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pages: Vec<PageRecord>,
    seeds: Vec<PageId>,
    by_id: HashMap<PageId, usize>,
}

impl Corpus {
    pub fn new(pages: Vec<PageRecord>, seeds: Vec<PageId>) -> Result<Self> {
        if pages.is_empty() {
            return Err(Error::Empty("corpus"));
        }
        let mut by_id = HashMap::with_capacity(pages.len());
        for (i, p) in pages.iter().enumerate() {
            if by_id.insert(p.page_id, i).is_some() {
                return Err(Error::invalid(
                    "corpus",
                    format!("duplicate page id {}", p.page_id),
                ));
            }
            if p.url.is_empty() || p.url.contains(char::is_whitespace) {
                return Err(Error::invalid(
                    "corpus",
                    format!("page {} has an empty or whitespace-bearing url", p.page_id),
                ));
            }
            if let Some(t) = p
                .tokens
                .iter()
                .find(|t| t.is_empty() || t.contains(char::is_whitespace))
            {
                return Err(Error::invalid(
                    "corpus",
                    format!("page {} has malformed token {t:?}", p.page_id),
                ));
            }
        }
        for p in &pages {
            if let Some(missing) = p.outlinks.iter().find(|id| !by_id.contains_key(id)) {
                return Err(Error::invalid(
                    "corpus",
                    format!("page {} links to missing page {missing}", p.page_id),
                ));
            }
        }
        if seeds.is_empty() {
            return Err(Error::invalid("corpus", "no seed pages"));
        }
        if let Some(s) = seeds.iter().find(|s| !by_id.contains_key(s)) {
            return Err(Error::invalid("corpus", format!("seed {s} is not a page")));
        }
        Ok(Corpus {
            pages,
            seeds,
            by_id,
        })
    }

    pub fn pages(&self) -> &[PageRecord] {
        &self.pages
    }

    pub fn seeds(&self) -> &[PageId] {
        &self.seeds
    }

    pub fn page(&self, id: PageId) -> Option<&PageRecord> {
        self.by_id.get(&id).map(|&i| &self.pages[i])
    }

    pub fn len(&self) -> usize {
        self.pages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pages.is_empty()
    }

    /// Serializes to the `corpus v1` text format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "corpus v1 n={} seeds={}",
            self.pages.len(),
            join_ids(&self.seeds)
        )
        .unwrap();
        for p in &self.pages {
            writeln!(
                out,
                "{}\t{}\t{}\t{}",
                p.page_id,
                p.url,
                join_ids(&p.outlinks),
                p.tokens.join(" ")
            )
            .unwrap();
        }
        out
    }

    pub fn from_text(text: &str, path: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(path, 1, "missing corpus header"))?;
        let header = Header::parse(path, header, "corpus")?;
        let n: usize = header.value("n")?;
        let seeds = split_ids(header.get("seeds")?).map_err(|e| Error::parse(path, 1, e))?;

        let mut pages = Vec::with_capacity(n);
        for (idx, line) in lines {
            let line_no = idx + 1;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [id, url, links, tokens] = fields[..] else {
                return Err(Error::parse(
                    path,
                    line_no,
                    "expected `page_id<TAB>url<TAB>outlinks<TAB>tokens`",
                ));
            };
            let page_id = id
                .parse()
                .map_err(|_| Error::parse(path, line_no, format!("bad page id {id:?}")))?;
            let outlinks = split_ids(links).map_err(|e| Error::parse(path, line_no, e))?;
            pages.push(PageRecord {
                page_id,
                url: url.to_string(),
                outlinks,
                tokens: tokens
                    .split(' ')
                    .filter(|t| !t.is_empty())
                    .map(String::from)
                    .collect(),
            });
        }
        if pages.is_empty() {
            return Err(Error::Empty("corpus"));
        }
        if pages.len() != n {
            return Err(Error::parse(
                path,
                1,
                format!("header says n={n} but {} pages follow", pages.len()),
            ));
        }
        Corpus::new(pages, seeds).map_err(|e| match e {
            Error::Invalid { msg, .. } => Error::parse(path, 0, msg),
            other => other,
        })
    }
}

pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, corpus.to_text())?;
    Ok(())
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    Corpus::from_text(&fs::read_to_string(path)?, path)
}
