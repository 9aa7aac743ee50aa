use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One dataset entry and its rendered design prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub word: String,
    pub style: String,
    pub lang: String,
    pub rendered: String,
}

/// Renders `A text <word> logo decorated with <style>.`
pub fn build_prompt(word: &str, style: &str) -> Result<PromptRecord> {
    build_prompt_lang(word, style, "")
}

pub fn build_prompt_lang(word: &str, style: &str, lang: &str) -> Result<PromptRecord> {
    if word.is_empty() {
        return Err(Error::EmptyWord);
    }
    Ok(PromptRecord {
        word: word.to_string(),
        style: style.to_string(),
        lang: lang.to_string(),
        rendered: format!("A text {word} logo decorated with {style}."),
    })
}

#[derive(Debug, Deserialize)]
struct DatasetEntry {
    word: String,
    style: String,
    #[serde(default)]
    lang: String,
}

/// Parses a JSON array of `{word, style, lang}` objects.
pub fn parse_dataset(json: &str) -> Result<Vec<PromptRecord>> {
    let entries: Vec<DatasetEntry> = serde_json::from_str(json)?;
    entries
        .iter()
        .map(|e| build_prompt_lang(&e.word, &e.style, &e.lang))
        .collect()
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<PromptRecord>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn template_instantiation() {
        assert_eq!(
            build_prompt("star", "a sky full of constellations").unwrap().rendered,
            "A text star logo decorated with a sky full of constellations."
        );
        assert_eq!(build_prompt("A", "B").unwrap().rendered, "A text A logo decorated with B.");
        assert!(matches!(build_prompt("", "x"), Err(Error::EmptyWord)));
    }

    #[test]
    fn dataset_json() {
        let recs = parse_dataset(
            r#"[{"word": "café", "style": "steam swirls", "lang": "fr"}, {"word": "moon", "style": "silver dust"}]"#,
        )
        .unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].lang, "fr");
        assert_eq!(recs[0].rendered, "A text café logo decorated with steam swirls.");
        assert_eq!(recs[1].lang, "");
        assert!(matches!(parse_dataset(r#"[{"word": "", "style": "x"}]"#), Err(Error::EmptyWord)));
        assert!(parse_dataset("{}").is_err());
    }
}
