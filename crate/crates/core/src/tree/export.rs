use std::collections::VecDeque;
use std::fmt::Write;

use super::{Nldt, NldtNode, SplitRule};

pub const DEFAULT_DECIMALS: usize = 2;

fn signed(out: &mut String, v: f64, decimals: usize, first: bool) {
    let mag = format!("{:.*}", decimals, v.abs());
    let is_zero = mag.chars().all(|c| c == '0' || c == '.');
    let negative = v < 0.0 && !is_zero;
    match (first, negative) {
        (true, true) => write!(out, "-{mag}"),
        (true, false) => write!(out, "{mag}"),
        (false, true) => write!(out, " - {mag}"),
        (false, false) => write!(out, " + {mag}"),
    }
    .unwrap();
}

fn term(row: &[i32]) -> String {
    row.iter()
        .enumerate()
        .filter(|(_, &b)| b != 0)
        .map(|(j, &b)| if b == 1 { format!("x{j}") } else { format!("x{j}^{b}") })
        .collect::<Vec<_>>()
        .join(" ")
}

/// A rule as a signed power-law sum over normalized features `x0..`.
pub fn rule_text(rule: &SplitRule, decimals: usize) -> String {
    let mut g = String::new();
    for (i, (row, &w)) in rule.exponents().iter().zip(rule.weights()).enumerate() {
        signed(&mut g, w, decimals, i == 0);
        g.push(' ');
        g.push_str(&term(row));
    }
    signed(&mut g, rule.theta1(), decimals, false);
    match rule.theta2() {
        None => g,
        Some(t2) => format!("|{g}| - {:.*}", decimals, t2.abs()),
    }
}

/// Nested if-then-else rendering. Features are normalized.
pub fn export_text(tree: &Nldt, decimals: usize) -> String {
    fn go(node: &NldtNode, indent: usize, decimals: usize, out: &mut String) {
        let pad = "    ".repeat(indent);
        match node {
            NldtNode::Leaf { action, .. } => writeln!(out, "{pad}Action = {action}").unwrap(),
            NldtNode::Conditional { rule, left, right, .. } => {
                writeln!(out, "{pad}if {} <= 0 then", rule_text(rule, decimals)).unwrap();
                go(left, indent + 1, decimals, out);
                writeln!(out, "{pad}else").unwrap();
                go(right, indent + 1, decimals, out);
                writeln!(out, "{pad}end").unwrap();
            }
        }
    }
    let mut out = String::new();
    go(tree.root(), 0, decimals, &mut out);
    out
}

/// One CSV row per conditional node, numbered breadth-first from 0.
///
/// Columns: `node,depth,left,right,modulus,theta1,theta2,complexity,rule`.
/// Child columns hold a node id, or `A<k>` for a leaf emitting action `k`.
pub fn export_csv_rules(tree: &Nldt) -> String {
    let mut ids = Vec::new();
    let mut queue = VecDeque::from([(tree.root(), 0usize)]);
    while let Some((node, depth)) = queue.pop_front() {
        ids.push((node, depth));
        if let NldtNode::Conditional { left, right, .. } = node {
            queue.push_back((left, depth + 1));
            queue.push_back((right, depth + 1));
        }
    }
    let id_of = |target: &NldtNode| -> String {
        match target {
            NldtNode::Leaf { action, .. } => format!("A{action}"),
            _ => ids.iter().position(|(n, _)| std::ptr::eq(*n, target)).map(|i| i.to_string()).unwrap_or_default(),
        }
    };
    let mut out = String::from("node,depth,left,right,modulus,theta1,theta2,complexity,rule\n");
    for (i, (node, depth)) in ids.iter().enumerate() {
        if let NldtNode::Conditional { rule, left, right, .. } = node {
            writeln!(
                out,
                "{i},{depth},{},{},{},{},{},{},\"{}\"",
                id_of(left),
                id_of(right),
                u8::from(rule.modulus()),
                rule.theta1(),
                rule.theta2().map(|v| v.to_string()).unwrap_or_default(),
                rule.complexity(),
                rule_text(rule, 17),
            )
            .unwrap();
        }
    }
    out
}
