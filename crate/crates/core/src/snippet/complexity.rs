//! Cyclomatic complexity: 1 + number of decision points.
//!
//! Decision points are counted per occurrence of:
//!
//! | construct                               | node kind               |
//! |-----------------------------------------|-------------------------|
//! | `if` statement                          | `if_statement`          |
//! | `elif` clause                           | `elif_clause`           |
//! | `for` / `async for` loop                | `for_statement`         |
//! | `while` loop                            | `while_statement`       |
//! | `except` clause                         | `except_clause`         |
//! | ternary `a if c else b`                 | `conditional_expression`|
//! | each `and` / `or` operator              | `boolean_operator`      |
//! | comprehension `if` filter               | `if_clause`             |
//! | `assert`                                | `assert_statement`      |
//!
//! `else`, `finally`, `with`, comprehension `for` clauses and `match`
//! cases are not decision points. Nested functions, lambdas and classes
//! inside the body are counted as part of the body text.

use tree_sitter::Node;

use super::{parse_python, SnippetError};

const DECISION_KINDS: [&str; 9] = [
    "if_statement",
    "elif_clause",
    "for_statement",
    "while_statement",
    "except_clause",
    "conditional_expression",
    "boolean_operator",
    "if_clause",
    "assert_statement",
];

pub(crate) fn decision_points(node: Node<'_>) -> u32 {
    let mut count = 0;
    let mut cursor = node.walk();
    let mut stack = vec![node];
    while let Some(n) = stack.pop() {
        if DECISION_KINDS.contains(&n.kind()) {
            count += 1;
        }
        stack.extend(n.children(&mut cursor));
    }
    count
}

/// Complexity of a function body given as text (indented as it appears
/// inside its `def`).
pub fn cyclomatic_complexity(body: &str) -> Result<u32, SnippetError> {
    let wrapped = format!("def _():\n{body}");
    if body.trim().is_empty() {
        return Err(SnippetError::Syntax {
            line: 1,
            message: "empty body".into(),
        });
    }
    let tree = parse_python(&wrapped).ok_or_else(|| SnippetError::Syntax {
        line: 1,
        message: "parser produced no tree".into(),
    })?;
    let root = tree.root_node();
    if root.has_error() {
        let line = super::first_error_row(root).saturating_sub(1) + 1;
        return Err(SnippetError::Syntax {
            line,
            message: "body does not parse".into(),
        });
    }
    let func = root
        .named_child(0)
        .filter(|n| n.kind() == "function_definition")
        .and_then(|f| f.child_by_field_name("body"))
        .ok_or_else(|| SnippetError::Syntax {
            line: 1,
            message: "body is not a single function block".into(),
        })?;
    if root.named_child_count() != 1 {
        return Err(SnippetError::Syntax {
            line: 1,
            message: "body dedents past the function".into(),
        });
    }
    Ok(1 + decision_points(func))
}
