//! Synthetic token sequences and snippets for statistical tests.

use licokit_core::lexer::TokenSequence;
use licokit_core::snippet::FunctionSnippet;
use rand::Rng;

/// `n` identifiers drawn from a vocabulary of `vocab` names.
pub fn tokens<R: Rng>(rng: &mut R, n: usize, vocab: usize) -> Vec<String> {
    (0..n).map(|_| format!("w{}", rng.gen_range(0..vocab))).collect()
}

/// Copy of `base` with `subs` random positions replaced by fresh names.
pub fn mutate<R: Rng>(rng: &mut R, base: &[String], subs: usize) -> Vec<String> {
    let mut out = base.to_vec();
    for _ in 0..subs {
        let i = rng.gen_range(0..out.len());
        out[i] = format!("m{}", rng.gen::<u32>());
    }
    out
}

pub fn seq(tokens: &[String]) -> TokenSequence {
    TokenSequence::new(tokens.iter().cloned())
}

/// A snippet whose signature, docstring and body tokenize to
/// `def <name> ( ) : "doc" <tokens...>`.
pub fn snippet(name: &str, body_tokens: &[String]) -> FunctionSnippet {
    let body: String = body_tokens
        .chunks(6)
        .map(|line| format!("    {}\n", line.join(" ")))
        .collect();
    FunctionSnippet::from_parts("", "", &format!("def {name}():\n"), "    \"doc\"\n", &body, "synthetic.py")
}

pub const MIT_HEADER: &str = "# Copyright (c) 2021 Example\n#\n# Permission is hereby granted, free of charge, to any person obtaining a copy\n# of this software and associated documentation files.\n";
pub const GPL3_HEADER: &str = "# This program is free software: you can redistribute it and/or modify\n# it under the terms of the GNU General Public License as published by\n# the Free Software Foundation, either version 3 of the License, or\n# (at your option) any later version.\n";
pub const APACHE_HEADER: &str = "# SPDX-License-Identifier: Apache-2.0\n";

/// A function clearing the benchmark preconditions: 14 body lines,
/// complexity 5, one comment.
pub fn qualifying_function(name: &str, k: usize, comment: &str) -> String {
    format!(
        "def {name}(items, limit={k}):\n    \"\"\"Process {name}.\"\"\"\n    total = 0\n    # {comment}\n    for item in items:\n        if item > limit:\n            total += item\n        elif item < 0:\n            total -= 1\n        else:\n            total += {k}\n    while total > 1000:\n        total //= 2\n    count = len(items)\n    result = total + count\n    return result\n"
    )
}

/// A function too small to qualify.
pub fn small_function(name: &str) -> String {
    format!("def {name}(x):\n    \"\"\"Small.\"\"\"\n    return x + 1\n")
}

pub fn file(header: &str, functions: &[String]) -> String {
    let mut out = String::from(header);
    out.push_str("import os\n\n");
    for f in functions {
        out.push_str("\n\n");
        out.push_str(f);
    }
    out
}

/// A syntactically valid, eligible function with `lines` random
/// statements over a vocabulary of `vocab` names.
pub fn random_function<R: Rng>(rng: &mut R, name: &str, lines: usize, vocab: usize) -> FunctionSnippet {
    let mut body = String::new();
    for _ in 0..lines {
        let (a, b, c) = (rng.gen_range(0..vocab), rng.gen_range(0..vocab), rng.gen_range(0..vocab));
        match rng.gen_range(0..6) {
            0 => body.push_str(&format!("    if v{b} > v{c}:\n        v{a} = v{b} - {c}\n")),
            1 => body.push_str(&format!("    # note {a} {b}\n    v{a} = v{b} * v{c}\n")),
            _ => body.push_str(&format!("    v{a} = v{b} + v{c}\n")),
        }
    }
    body.push_str("    return None\n");
    FunctionSnippet::from_parts(
        "",
        "",
        &format!("def {name}(v0, v1):\n"),
        &format!("    \"\"\"Doc for {name}.\"\"\"\n"),
        &body,
        "synthetic.py",
    )
}

/// `n` benchmark items parsed from qualifying functions, licenses cycling
/// through MIT, GPL-3.0-or-later and Apache-2.0.
pub fn bench_items(n: usize) -> Vec<licokit_core::bench::BenchmarkItem> {
    let licenses = [(MIT_HEADER, "MIT"), (GPL3_HEADER, "GPL-3.0-or-later"), (APACHE_HEADER, "Apache-2.0")];
    (0..n)
        .map(|i| {
            let (header, id) = licenses[i % licenses.len()];
            let text = file(header, &[qualifying_function(&format!("f{i:03}"), i, &format!("step {i}"))]);
            let snippet = licokit_core::snippet::parse_source(&text, &format!("p{i}/m.py"))
                .snippets
                .into_iter()
                .next()
                .expect("qualifying function parses");
            licokit_core::bench::BenchmarkItem {
                snippet,
                license: id.to_string(),
                category: licokit_core::license::categorize(id).unwrap(),
                reuse_count: 1,
            }
        })
        .collect()
}
