//! Slow reference implementations used only by tests.
#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::HashMap;

/// Edit distance by exhaustive search over alignments.
///
/// Any edit script corresponds to a set of aligned pairs `(i, j)` that is
/// increasing in both coordinates; aligned pairs cost 0 or 1 (substitution)
/// and every unaligned symbol costs 1. Tries every such set.
pub fn brute_force_edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (n, m) = (a.len(), b.len());
    let mut best = n.max(m).max(n + m);
    for k in 0..=n.min(m) {
        for xs in subsets(n, k) {
            for ys in subsets(m, k) {
                let subs = xs.iter().zip(&ys).filter(|(&i, &j)| a[i] != b[j]).count();
                best = best.min(subs + (n - k) + (m - k));
            }
        }
    }
    best
}

// All k-element increasing index lists from 0..n.
fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Textbook full-table Levenshtein.
pub fn naive_dp<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut t = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in t.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        t[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = t[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            t[i][j] = sub.min(t[i - 1][j] + 1).min(t[i][j - 1] + 1);
        }
    }
    t[a.len()][b.len()]
}

/// D-Rule raw score by walking occurrences one at a time.
pub fn drule_loop(counts: &HashMap<String, usize>, weights: &HashMap<String, f64>, gamma: f64) -> f64 {
    let mut total = 0.0;
    for (class, &n) in counts {
        let w = weights[class];
        let mut factor = 1.0;
        for _ in 0..n {
            total += factor * w;
            factor *= gamma;
        }
    }
    total
}

/// Rank of each value: 1 + number smaller + half the number of other equal values.
pub fn counting_ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .enumerate()
        .map(|(i, &v)| {
            let smaller = x.iter().filter(|&&w| w < v).count() as f64;
            let equal = x.iter().enumerate().filter(|&(j, &w)| j != i && w == v).count() as f64;
            1.0 + smaller + equal / 2.0
        })
        .collect()
}

/// Pearson from raw sums.
pub fn naive_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n;
    let (mx, my) = (mean(x), mean(y));
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

pub fn naive_spearman(x: &[f64], y: &[f64]) -> f64 {
    naive_pearson(&counting_ranks(x), &counting_ranks(y))
}

/// Kendall tau-b over all pairs.
pub fn naive_kendall_b(x: &[f64], y: &[f64]) -> f64 {
    let (mut conc, mut disc, mut tx, mut ty) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx == 0.0 && dy == 0.0 {
                continue;
            } else if dx == 0.0 {
                tx += 1;
            } else if dy == 0.0 {
                ty += 1;
            } else if (dx > 0.0) == (dy > 0.0) {
                conc += 1;
            } else {
                disc += 1;
            }
        }
    }
    let n1 = (conc + disc + tx) as f64;
    let n2 = (conc + disc + ty) as f64;
    (conc - disc) as f64 / (n1 * n2).sqrt()
}

/// Elo expected score in its ratio form, 10^(s/d) based.
pub fn elo_expected(si: f64, sj: f64, d: f64) -> f64 {
    let qi = 10f64.powf(si / d);
    let qj = 10f64.powf(sj / d);
    qi / (qi + qj)
}

/// Sequential Elo over (i, j, actual score for i) triples.
pub fn elo_replay(games: &[(&str, &str, f64)], base: f64, d: f64, k: f64) -> HashMap<String, f64> {
    let mut r: HashMap<String, f64> = HashMap::new();
    for &(i, j, s) in games {
        let ri = *r.entry(i.to_string()).or_insert(base);
        let rj = *r.entry(j.to_string()).or_insert(base);
        let e = elo_expected(ri, rj, d);
        r.insert(i.to_string(), ri + k * (s - e));
        r.insert(j.to_string(), rj + k * ((1.0 - s) - (1.0 - e)));
    }
    r
}

/// Tag stream of an HTML string: `+name`, `-name`, `=name` per tag.
pub fn html_tag_stream(html: &str) -> String {
    const VOID: [&str; 4] = ["hr", "img", "br", "input"];
    let re = regex::Regex::new(r"<(/?)([a-zA-Z][a-zA-Z0-9]*)\b[^>]*>").unwrap();
    let mut out = String::new();
    for cap in re.captures_iter(html) {
        let name = cap[2].to_ascii_lowercase();
        let prefix = if &cap[1] == "/" {
            '-'
        } else if VOID.contains(&name.as_str()) {
            '='
        } else {
            '+'
        };
        out.push(prefix);
        out.push_str(&name);
        out.push('\n');
    }
    out
}

/// Reference CommonMark rendering with the same extensions, raw HTML suppressed.
pub fn comrak_tag_stream(markdown: &str) -> String {
    let mut opts = comrak::Options::default();
    opts.extension.table = true;
    opts.extension.strikethrough = true;
    opts.extension.tasklist = true;
    html_tag_stream(&comrak::markdown_to_html(markdown, &opts))
}
