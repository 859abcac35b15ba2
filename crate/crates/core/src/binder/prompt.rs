//! Prompt sequence construction: output constraint, reasoning instruction
//! and retrieved few-shot examples around the task table and text.

use serde::{Deserialize, Serialize};

use super::retrieval::PromptExample;
use crate::table::DataTable;
use crate::wire::FIELD_NAMES;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PromptSequence {
    pub system_instruction: String,
    pub examples: Vec<PromptExample>,
    /// Input table placeholder.
    pub task_table: String,
    /// Input text placeholder.
    pub task_text: String,
    /// Masked result template.
    pub output_template: String,
    pub reasoning_instruction: String,
}

const SYSTEM_INSTRUCTION: &str = "You are a financial analyst. Bind the subject, trend and numerical \
vocabulary of a financial narrative to the cells of the given data table. Answer only in the result \
format shown, followed by your reasoning.";

const REASONING_INSTRUCTION: &str = "After the result, write a line starting with Reason: that explains \
step by step which objects appear in both the text and the table, which column each object corresponds \
to, and for every trend or numerical value which rows it spans.";

/// The masked output template. Masks are `<...>` placeholders the model fills.
pub fn output_template() -> String {
    let [object, data, position, trend, num, text] = FIELD_NAMES;
    format!(
        "Result: {{\n    \"{object}\": \"<subject as written in the text>\",\n    \"{data}\": \"<column name>\",\n    \
\"{position}\": [[\"<column name>\", <start row>], [\"<column name>\", <end row>]],\n    \
\"{trend}\": \"<trend phrase or None>\",\n    \"{num}\": [<value or null>],\n    \
\"{text}\": \"<text fragment>\"}}\n\
Rows are numbered from 1 as in the Row column. Exactly one of {trend} and {num} has a value: \
when {trend} is set, {num} is [null]; when {num} is set, {trend} is \"None\". \
Repeat the record for every trend and numerical value; join records with commas.\n\
Reason: \"<reasoning>\""
    )
}

pub fn build_prompt(narrative_text: &str, table: &DataTable, examples: &[PromptExample]) -> PromptSequence {
    PromptSequence {
        system_instruction: SYSTEM_INSTRUCTION.to_string(),
        examples: examples.to_vec(),
        task_table: table.digest(),
        task_text: narrative_text.trim().to_string(),
        output_template: output_template(),
        reasoning_instruction: REASONING_INSTRUCTION.to_string(),
    }
}

impl PromptSequence {
    /// The user message: examples (if any), then the task with its template.
    pub fn render_user(&self) -> String {
        let mut out = String::new();
        out.push_str("Output format:\n");
        out.push_str(&self.output_template);
        out.push_str("\n\n");
        out.push_str(&self.reasoning_instruction);
        out.push_str("\n\n");
        if !self.examples.is_empty() {
            out.push_str("Examples:\n\n");
            for (i, ex) in self.examples.iter().enumerate() {
                out.push_str(&format!("### Example {}\nData table:\n{}\nText: {}\n", i + 1, ex.table_digest.trim_end(), ex.input_text.trim()));
                out.push_str(ex.expected_output.trim_end());
                out.push_str("\n\n");
            }
        }
        out.push_str("### Task\nData table:\n");
        out.push_str(self.task_table.trim_end());
        out.push_str("\nText: ");
        out.push_str(&self.task_text);
        out.push_str("\nResult:");
        out
    }

    /// Full prompt text: system instruction then user message.
    pub fn render(&self) -> String {
        format!("{}\n\n{}", self.system_instruction, self.render_user())
    }

    /// Drops the `n` least similar examples (the front of the list).
    pub fn without_least_similar(&self, n: usize) -> Self {
        let mut out = self.clone();
        let n = n.min(out.examples.len());
        out.examples.drain(..n);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{Cell, ColumnKind, ColumnMeta};

    fn gdp() -> DataTable {
        DataTable::new(
            "gdp",
            vec![
                ColumnMeta::new("Quarter", ColumnKind::Temporal),
                ColumnMeta::new("change in GDP", ColumnKind::Numeric),
            ],
            vec![vec![Cell::Text("Q1".into()), Cell::Number(2.0)]],
        )
    }

    #[test]
    fn template_names_all_six_fields() {
        let p = build_prompt("the change in real GDP suffers a sharp decrease", &gdp(), &[]);
        for f in FIELD_NAMES {
            assert!(p.output_template.contains(&format!("\"{f}\"")), "{f}");
        }
        assert!(!p.render().contains("Examples:"));
    }

    #[test]
    fn prompts_are_deterministic() {
        let a = build_prompt("text", &gdp(), &[]).render();
        let b = build_prompt("text", &gdp(), &[]).render();
        assert_eq!(a, b);
    }
}
