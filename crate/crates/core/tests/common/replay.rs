//! Scripted replay files for harness tests.

use licokit_core::bench::BenchmarkItem;
use licokit_core::harness::{build_completion_prompt, ChatMessage, PromptTemplate, ReplayEntry};

pub fn fenced(code: &str) -> String {
    format!("```python\n{code}```")
}

/// First-turn reply per item from `completion`, and, when `inquiry`
/// returns text, the matching second-turn reply.
pub fn script(
    items: &[BenchmarkItem],
    template: &PromptTemplate,
    exemplar: bool,
    completion: impl Fn(usize, &BenchmarkItem) -> String,
    inquiry: impl Fn(usize, &BenchmarkItem) -> Option<String>,
) -> Vec<ReplayEntry> {
    let mut out = Vec::new();
    for (i, item) in items.iter().enumerate() {
        let mut messages = build_completion_prompt(item, template, exemplar);
        let reply = completion(i, item);
        out.push(ReplayEntry::reply(&messages, reply.clone()));
        if let Some(answer) = inquiry(i, item) {
            messages.push(ChatMessage::assistant(reply));
            messages.push(ChatMessage::user(template.inquiry.clone()));
            out.push(ReplayEntry::reply(&messages, answer));
        }
    }
    out
}

/// Replies with the item's own reference body and names its license.
pub fn echo(items: &[BenchmarkItem], template: &PromptTemplate) -> Vec<ReplayEntry> {
    script(
        items,
        template,
        true,
        |_, item| fenced(&item.snippet.body),
        |_, item| Some(format!("It resembles code licensed under {}.", item.license)),
    )
}
