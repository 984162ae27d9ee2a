//! Replacement lexicons: file format, built-in tables, and a Soundex-keyed
//! homophone builder over a vocabulary.

use std::collections::BTreeMap;

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};

/// Word to single-token alternatives. No alternative equals its key.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Lexicon {
    map: BTreeMap<String, Vec<String>>,
}

/// Built-in homophone groups, loosely the confusions an ASR channel makes.
/// Every member of a group maps to the other members.
const HOMOPHONE_GROUPS: &[&[&str]] = &[
    &["for", "four", "fore"],
    &["to", "two", "too"],
    &["there", "their"],
    &["hear", "here"],
    &["buy", "by", "bye"],
    &["right", "write"],
    &["one", "won"],
    &["ate", "eight"],
    &["be", "bee"],
    &["see", "sea"],
    &["new", "knew"],
    &["no", "know"],
    &["week", "weak"],
    &["meet", "meat"],
    &["plain", "plane"],
    &["weather", "whether"],
    &["wait", "weight"],
    &["cell", "sell"],
    &["son", "sun"],
    &["would", "wood"],
    &["night", "knight"],
    &["hour", "our"],
    &["pair", "pear"],
    &["steak", "stake"],
    &["cheap", "cheep"],
    &["suite", "sweet"],
    &["fair", "fare"],
    &["it", "at"],
];

/// Built-in synonym entries, directional (key -> alternatives).
const SYNONYM_ENTRIES: &[(&str, &[&str])] = &[
    ("affordable", &["reasonable"]),
    ("barbecue", &["bbq"]),
    ("book", &["reserve"]),
    ("budget", &["economical"]),
    ("centre", &["center"]),
    ("cheap", &["inexpensive"]),
    ("costly", &["expensive"]),
    ("downtown", &["midtown"]),
    ("eatery", &["restaurant"]),
    ("expensive", &["costly", "pricey"]),
    ("find", &["locate"]),
    ("food", &["cuisine"]),
    ("guests", &["visitors"]),
    ("hotel", &["inn", "lodge"]),
    ("inexpensive", &["cheap"]),
    ("looking", &["searching"]),
    ("luxurious", &["lavish"]),
    ("moderate", &["reasonable"]),
    ("nearby", &["close"]),
    ("need", &["require"]),
    ("people", &["persons", "folks"]),
    ("place", &["spot", "venue"]),
    ("please", &["kindly"]),
    ("reserve", &["book"]),
    ("restaurant", &["eatery", "diner"]),
    ("seafood", &["fish"]),
    ("show", &["display"]),
    ("upscale", &["fancy"]),
    ("vegan", &["plant-based"]),
    ("want", &["need"]),
];

impl Lexicon {
    pub fn new() -> Self {
        Lexicon::default()
    }

    /// Builds a lexicon from (key, alternatives) pairs, validating the
    /// invariants: alternatives are non-empty single tokens and never equal
    /// their key. Duplicate keys merge.
    pub fn from_entries<I, K, A>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (K, Vec<A>)>,
        K: Into<String>,
        A: Into<String>,
    {
        let mut lex = Lexicon::new();
        for (key, alts) in entries {
            let key = key.into();
            for alt in alts {
                lex.insert(key.clone(), alt.into())?;
            }
        }
        Ok(lex)
    }

    fn insert(&mut self, key: String, alt: String) -> Result<()> {
        if key.is_empty() || alt.is_empty() {
            return Err(Error::Data("lexicon entries must be non-empty".into()));
        }
        if key.contains(char::is_whitespace) || alt.contains(char::is_whitespace) {
            return Err(Error::Data(format!(
                "lexicon entries must be single tokens: {key:?} -> {alt:?}"
            )));
        }
        if alt == key {
            return Err(Error::Data(format!("alternative equals its key: {key:?}")));
        }
        let alts = self.map.entry(key).or_default();
        if !alts.contains(&alt) {
            alts.push(alt);
        }
        Ok(())
    }

    /// Parses the lexicon file format: one entry per line,
    /// "word<TAB>alt1<TAB>alt2...". Blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lex = Lexicon::new();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split('\t');
            let key = fields.next().unwrap_or("").to_string();
            let mut any = false;
            for alt in fields {
                any = true;
                lex.insert(key.clone(), alt.to_string()).map_err(|e| Error::Data(format!(
                    "lexicon line {}: {e}",
                    i + 1
                )))?;
            }
            if !any {
                return Err(Error::Data(format!(
                    "lexicon line {}: expected word<TAB>alt1[<TAB>alt2...]",
                    i + 1
                )));
            }
        }
        Ok(lex)
    }

    /// The built-in homophone table.
    pub fn builtin_homophones() -> Self {
        let mut lex = Lexicon::new();
        for group in HOMOPHONE_GROUPS {
            for &word in *group {
                for &alt in group.iter().filter(|&&a| a != word) {
                    lex.insert(word.into(), alt.into()).expect("built-in table is valid");
                }
            }
        }
        lex
    }

    /// The built-in synonym table.
    pub fn builtin_synonyms() -> Self {
        let mut lex = Lexicon::new();
        for (key, alts) in SYNONYM_ENTRIES {
            for &alt in *alts {
                lex.insert((*key).into(), alt.into()).expect("built-in table is valid");
            }
        }
        lex
    }

    /// Union of two lexicons; alternatives are deduplicated per key.
    pub fn merge(mut self, other: &Lexicon) -> Self {
        for (key, alts) in &other.map {
            for alt in alts {
                self.insert(key.clone(), alt.clone()).expect("source lexicons are valid");
            }
        }
        self
    }

    /// Keeps only entries whose key the predicate accepts.
    pub fn retain_keys(mut self, mut keep: impl FnMut(&str) -> bool) -> Self {
        self.map.retain(|k, _| keep(k));
        self
    }

    pub fn get(&self, word: &str) -> Option<&[String]> {
        self.map.get(word).map(Vec::as_slice)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.map.contains_key(word)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[String])> {
        self.map.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }
}

/// American Soundex code of an ascii-alphabetic word; `None` otherwise.
/// Vowels break runs, h and w do not.
pub fn soundex(word: &str) -> Option<String> {
    if word.is_empty() || !word.chars().all(|c| c.is_ascii_alphabetic()) {
        return None;
    }
    let letters: Vec<u8> = word.bytes().map(|b| b.to_ascii_lowercase()).collect();
    let code_of = |b: u8| -> u8 {
        match b {
            b'b' | b'f' | b'p' | b'v' => b'1',
            b'c' | b'g' | b'j' | b'k' | b'q' | b's' | b'x' | b'z' => b'2',
            b'd' | b't' => b'3',
            b'l' => b'4',
            b'm' | b'n' => b'5',
            b'r' => b'6',
            _ => b'0',
        }
    };
    let mut out = String::with_capacity(4);
    out.push(letters[0].to_ascii_uppercase() as char);
    let mut prev = code_of(letters[0]);
    for &b in &letters[1..] {
        if b == b'h' || b == b'w' {
            continue;
        }
        let code = code_of(b);
        if code == b'0' {
            prev = b'0';
            continue;
        }
        if code != prev {
            out.push(code as char);
            if out.len() == 4 {
                break;
            }
        }
        prev = code;
    }
    while out.len() < 4 {
        out.push('0');
    }
    Some(out)
}

/// Groups the vocabulary by Soundex key; every word maps to the other
/// members of its group (singleton groups vanish) and the built-in table is
/// merged in for keys present in the vocabulary.
pub fn build_homophone_lexicon(vocab: &Vocabulary) -> Lexicon {
    let words = vocab.words();
    let mut groups: BTreeMap<String, Vec<&str>> = BTreeMap::new();
    for &word in &words {
        if let Some(key) = soundex(word) {
            groups.entry(key).or_default().push(word);
        }
    }
    let mut lex = Lexicon::new();
    for members in groups.values() {
        if members.len() < 2 {
            continue;
        }
        for &word in members {
            for &alt in members.iter().filter(|&&a| a != word) {
                lex.insert(word.into(), alt.into()).expect("group members are distinct tokens");
            }
        }
    }
    let builtin = Lexicon::builtin_homophones().retain_keys(|k| vocab.contains_word(k));
    lex.merge(&builtin)
}
