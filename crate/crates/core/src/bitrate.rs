//! Symbol-entropy bitrate of discrete unit submissions.
//!
//! The bitrate is `n * H / D`: token count times the entropy of the symbol
//! distribution (over symbol types, with the usual minus sign) divided by
//! the total duration.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::corpus::GoldCorpus;
use crate::error::{read_to_string, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymbolSequence {
    pub utterance_id: String,
    pub symbols: Vec<String>,
    pub duration: f64,
}

/// Parses a unit file: `timestamp symbol-fields...` per line. Everything
/// after the timestamp, whitespace-normalized, is the symbol.
pub fn parse_unit_file(text: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let mut fields = line.split_whitespace();
        let Some(t) = fields.next() else { continue };
        if t.parse::<f64>().map_or(true, |t| !t.is_finite()) {
            return Err(Error::malformed(i + 1, format!("invalid timestamp {t:?}")));
        }
        let symbol = fields.collect::<Vec<_>>().join(" ");
        if symbol.is_empty() {
            return Err(Error::malformed(i + 1, "line has no symbol"));
        }
        out.push(symbol);
    }
    Ok(out)
}

/// Reads every `<utt>.txt` in `unit_dir`. Durations come from `durations`,
/// falling back to the gold corpus end time.
pub fn load_units(
    unit_dir: &Path,
    durations: &BTreeMap<String, f64>,
    corpus: Option<&GoldCorpus>,
) -> Result<Vec<SymbolSequence>> {
    let io = |source| Error::Io {
        path: unit_dir.to_path_buf(),
        source,
    };
    let mut paths = Vec::new();
    for entry in std::fs::read_dir(unit_dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        if path.extension().is_some_and(|e| e == "txt") {
            paths.push(path);
        }
    }
    paths.sort();
    paths
        .iter()
        .map(|path| {
            let id = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let symbols = parse_unit_file(&read_to_string(path)?).map_err(|e| e.in_file(path))?;
            let duration = durations
                .get(&id)
                .copied()
                .or_else(|| corpus.and_then(|c| c.get(&id)).map(|u| u.duration))
                .ok_or_else(|| Error::MissingDuration(id.clone()))?;
            Ok(SymbolSequence {
                utterance_id: id,
                symbols,
                duration,
            })
        })
        .collect()
}

fn counts(sequences: &[SymbolSequence]) -> (BTreeMap<&str, u64>, u64) {
    let mut table: BTreeMap<&str, u64> = BTreeMap::new();
    let mut n = 0;
    for s in sequences.iter().flat_map(|s| &s.symbols) {
        *table.entry(s.as_str()).or_default() += 1;
        n += 1;
    }
    (table, n)
}

/// Relative frequency of every symbol over all sequences.
pub fn symbol_table(sequences: &[SymbolSequence]) -> Result<BTreeMap<String, f64>> {
    let (table, n) = counts(sequences);
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    Ok(table
        .into_iter()
        .map(|(s, c)| (s.to_string(), c as f64 / n as f64))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bitrate {
    pub bits_per_second: f64,
    /// Entropy of the symbol distribution, bits per token.
    pub entropy: f64,
    pub tokens: u64,
    pub types: usize,
    pub duration: f64,
}

pub fn bitrate(sequences: &[SymbolSequence]) -> Result<Bitrate> {
    let (table, n) = counts(sequences);
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let duration: f64 = sequences.iter().map(|s| s.duration).sum();
    if duration <= 0.0 {
        return Err(Error::ZeroDuration);
    }
    let entropy = -table
        .values()
        .map(|&c| {
            let p = c as f64 / n as f64;
            p * p.log2()
        })
        .sum::<f64>();
    // -0.0 for a single type
    let entropy = entropy.max(0.0);
    Ok(Bitrate {
        bits_per_second: n as f64 * entropy / duration,
        entropy,
        tokens: n,
        types: table.len(),
        duration,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(symbols: &[&str], duration: f64) -> SymbolSequence {
        SymbolSequence {
            utterance_id: "u".into(),
            symbols: symbols.iter().map(|s| s.to_string()).collect(),
            duration,
        }
    }

    #[test]
    fn tables() {
        assert_eq!(symbol_table(&[seq(&["A"; 100], 1.0)]).unwrap()["A"], 1.0);
        let mut half = vec!["A"; 50];
        half.extend(["B"; 50]);
        let t = symbol_table(&[seq(&half, 1.0)]).unwrap();
        assert_eq!((t["A"], t["B"]), (0.5, 0.5));
        let t = symbol_table(&[seq(&["A", "A"], 1.0), seq(&["A", "B"], 1.0)]).unwrap();
        assert_eq!((t["A"], t["B"]), (0.75, 0.25));
        assert!(matches!(symbol_table(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn anchors() {
        assert_eq!(
            bitrate(&[seq(&["A"; 100], 10.0)]).unwrap().bits_per_second,
            0.0
        );
        let alt: Vec<&str> = (0..100)
            .map(|i| if i % 2 == 0 { "A" } else { "B" })
            .collect();
        assert_eq!(bitrate(&[seq(&alt, 10.0)]).unwrap().bits_per_second, 10.0);
        assert!(matches!(
            bitrate(&[seq(&["A"], 0.0)]),
            Err(Error::ZeroDuration)
        ));
        assert!(matches!(bitrate(&[seq(&[], 1.0)]), Err(Error::EmptyInput)));
    }

    #[test]
    fn unit_file_symbols() {
        let s = parse_unit_file("0.00 1 0 3\n0.02   a b\n\n").unwrap();
        assert_eq!(s, vec!["1 0 3", "a b"]);
        assert!(matches!(
            parse_unit_file("x a\n"),
            Err(Error::MalformedLine { line: 1, .. })
        ));
        assert!(matches!(
            parse_unit_file("0.1\n"),
            Err(Error::MalformedLine { line: 1, .. })
        ));
    }

    proptest! {
        #[test]
        fn bounded_by_uniform(symbols in prop::collection::vec(0u8..6, 1..200), d in 0.5f64..100.0) {
            let names: Vec<String> = symbols.iter().map(|s| s.to_string()).collect();
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            let b = bitrate(&[seq(&refs, d)]).unwrap();
            let k = b.types as f64;
            prop_assert!(b.bits_per_second >= 0.0);
            prop_assert!(b.bits_per_second <= refs.len() as f64 * k.log2() / d + 1e-9);
            prop_assert_eq!(b.bits_per_second == 0.0, b.types == 1);
        }

        #[test]
        fn doubling_tokens_doubles_rate(symbols in prop::collection::vec(0u8..6, 1..100), d in 0.5f64..100.0) {
            let names: Vec<String> = symbols.iter().map(|s| s.to_string()).collect();
            let once: Vec<&str> = names.iter().map(String::as_str).collect();
            let twice: Vec<&str> = once.iter().flat_map(|s| [*s, *s]).collect();
            let b1 = bitrate(&[seq(&once, d)]).unwrap().bits_per_second;
            let b2 = bitrate(&[seq(&twice, d)]).unwrap().bits_per_second;
            prop_assert!((b2 - 2.0 * b1).abs() <= 1e-9 * b1.max(1.0));
        }
    }
}
