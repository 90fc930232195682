//! Slow, independently written reference implementations used to check the
//! library metrics.

use std::collections::HashMap;

/// BLEU-4 by explicit n-gram list scans.
pub fn bleu(cand: &[&str], refr: &[&str]) -> f64 {
    if cand.is_empty() && refr.is_empty() {
        return 1.0;
    }
    if cand.is_empty() || refr.is_empty() {
        return 0.0;
    }
    let orders = *[4, cand.len(), refr.len()].iter().min().unwrap();
    let mut product = 1.0f64;
    for n in 1..=orders {
        let grams = |s: &[&str]| -> Vec<Vec<String>> {
            (0..=s.len() - n).map(|i| s[i..i + n].iter().map(|t| t.to_string()).collect()).collect()
        };
        let cg = grams(cand);
        let rg = grams(refr);
        let mut seen: Vec<&Vec<String>> = Vec::new();
        let mut matched = 0usize;
        for g in &cg {
            if seen.contains(&g) {
                continue;
            }
            seen.push(g);
            let in_cand = cg.iter().filter(|x| *x == g).count();
            let in_ref = rg.iter().filter(|x| *x == g).count();
            matched += in_cand.min(in_ref);
        }
        let p = matched as f64 / cg.len() as f64;
        product *= if matched == 0 { 1e-9 } else { p };
    }
    let geo = product.powf(1.0 / orders as f64);
    let bp = if cand.len() > refr.len() {
        1.0
    } else {
        (1.0 - refr.len() as f64 / cand.len() as f64).exp()
    };
    bp * geo
}

/// Levenshtein distance by the textbook recursion on suffixes. Memoized,
/// since the plain recursion takes minutes at length 12.
pub fn edit_distance(a: &[&str], b: &[&str]) -> usize {
    fn go(a: &[&str], b: &[&str], i: usize, j: usize, memo: &mut HashMap<(usize, usize), usize>) -> usize {
        if i == a.len() {
            return b.len() - j;
        }
        if j == b.len() {
            return a.len() - i;
        }
        if let Some(&v) = memo.get(&(i, j)) {
            return v;
        }
        let cost = usize::from(a[i] != b[j]);
        let v = (go(a, b, i + 1, j + 1, memo) + cost)
            .min(go(a, b, i + 1, j, memo) + 1)
            .min(go(a, b, i, j + 1, memo) + 1);
        memo.insert((i, j), v);
        v
    }
    go(a, b, 0, 0, &mut HashMap::new())
}

pub fn edit_similarity(a: &[&str], b: &[&str]) -> f64 {
    let m = a.len().max(b.len());
    if m == 0 {
        1.0
    } else {
        1.0 - edit_distance(a, b) as f64 / m as f64
    }
}

fn shingle_list(s: &[&str]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    if s.is_empty() {
        return out;
    }
    let width = 5.min(s.len());
    for i in 0..=s.len() - width {
        let g = s[i..i + width].join("\u{1f}");
        if !out.contains(&g) {
            out.push(g);
        }
    }
    out
}

/// Jaccard over 5-shingle sets by pairwise comparison.
pub fn jaccard(a: &[&str], b: &[&str]) -> f64 {
    let sa = shingle_list(a);
    let sb = shingle_list(b);
    if sa.is_empty() && sb.is_empty() {
        return 1.0;
    }
    let inter = sa.iter().filter(|g| sb.contains(g)).count();
    inter as f64 / (sa.len() + sb.len() - inter) as f64
}

/// Multiset intersection of `#` comments, found line by line.
pub fn same_comments(gen: &str, refr: &str) -> usize {
    let grab = |s: &str| -> Vec<String> {
        s.lines()
            .filter_map(|l| l.find('#').map(|i| &l[i + 1..]))
            .map(|c| c.split_whitespace().collect::<Vec<_>>().join(" "))
            .filter(|c| !c.is_empty())
            .collect()
    };
    let mut r = grab(refr);
    let mut n = 0;
    for c in grab(gen) {
        if let Some(pos) = r.iter().position(|x| *x == c) {
            r.remove(pos);
            n += 1;
        }
    }
    n
}
