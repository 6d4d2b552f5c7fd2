//! Versioned prompt templates.
//!
//! The exact wording sent to the model is a configuration artifact, not
//! code: the default templates ship with the crate and can be replaced
//! wholesale by pointing [`PromptSet::from_dir`] at a directory containing
//! files with the same names. Lines starting with `#` are header comments
//! (they carry the template version) and are stripped before use.

use std::fs;
use std::io;
use std::path::Path;

const TABLE_EXTRACTION: &str = include_str!("../prompts/table_extraction.txt");
const FIGURE_EXTRACTION: &str = include_str!("../prompts/figure_extraction.txt");
const IDENTIFICATION: &str = include_str!("../prompts/identification.txt");
const KG_EXTRACTION: &str = include_str!("../prompts/kg_extraction.txt");
const ANSWER: &str = include_str!("../prompts/answer.txt");
const CITATION_INSTRUCTION: &str = include_str!("../prompts/citation_instruction.txt");
const JUDGE: &str = include_str!("../prompts/judge.txt");
const VULN_LABEL: &str = include_str!("../prompts/vuln_label.txt");
const MULTIPLE_CHOICE: &str = include_str!("../prompts/multiple_choice.txt");

/// The full set of templates used by the pipeline.
#[derive(Debug, Clone)]
pub struct PromptSet {
    pub table_extraction: String,
    pub figure_extraction: String,
    pub identification: String,
    pub kg_extraction: String,
    pub answer: String,
    pub citation_instruction: String,
    pub judge: String,
    pub vuln_label: String,
    pub multiple_choice: String,
}

impl Default for PromptSet {
    fn default() -> Self {
        Self::builtin()
    }
}

impl PromptSet {
    /// The templates bundled with the crate.
    pub fn builtin() -> Self {
        Self {
            table_extraction: strip_header(TABLE_EXTRACTION),
            figure_extraction: strip_header(FIGURE_EXTRACTION),
            identification: strip_header(IDENTIFICATION),
            kg_extraction: strip_header(KG_EXTRACTION),
            answer: strip_header(ANSWER),
            citation_instruction: strip_header(CITATION_INSTRUCTION),
            judge: strip_header(JUDGE),
            vuln_label: strip_header(VULN_LABEL),
            multiple_choice: strip_header(MULTIPLE_CHOICE),
        }
    }

    /// Load templates from `dir`, falling back to the builtin text for any
    /// file that is absent.
    pub fn from_dir(dir: &Path) -> io::Result<Self> {
        let mut set = Self::builtin();
        let slots: [(&str, &mut String); 9] = [
            ("table_extraction.txt", &mut set.table_extraction),
            ("figure_extraction.txt", &mut set.figure_extraction),
            ("identification.txt", &mut set.identification),
            ("kg_extraction.txt", &mut set.kg_extraction),
            ("answer.txt", &mut set.answer),
            ("citation_instruction.txt", &mut set.citation_instruction),
            ("judge.txt", &mut set.judge),
            ("vuln_label.txt", &mut set.vuln_label),
            ("multiple_choice.txt", &mut set.multiple_choice),
        ];
        for (name, slot) in slots {
            let path = dir.join(name);
            if path.is_file() {
                *slot = strip_header(&fs::read_to_string(&path)?);
            }
        }
        Ok(set)
    }
}

/// Replace `{placeholder}` occurrences in a template.
pub fn fill(template: &str, pairs: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (key, value) in pairs {
        out = out.replace(&format!("{{{key}}}"), value);
    }
    out
}

fn strip_header(raw: &str) -> String {
    let body: Vec<&str> = raw
        .lines()
        .skip_while(|line| line.starts_with('#'))
        .collect();
    body.join("\n")
        .trim_start_matches('\n')
        .trim_end()
        .to_string()
}
