//! Parser and renderer for the text format the external build tool prints
//! for dependency trees, so resolved trees can be diffed against reference
//! output.
//!
//! ```text
//! com.example:app:jar:1.0
//! +- g.a:lib:jar:2.0:compile
//! |  \- g.b:dep:jar:1.1:compile
//! \- g.c:last:jar:3.0:test
//! ```

use thiserror::Error;

use super::coordinate::MavenCoordinate;
use super::tree::DependencyTree;

#[derive(Debug, Error)]
pub enum TreeTextError {
    #[error("line {line}: malformed tree line: {detail}")]
    MalformedTreeLine { line: usize, detail: String },
    #[error("line {line}: indentation jumps more than one level")]
    IndentationJump { line: usize },
    #[error("input contains no tree")]
    Empty,
}

const UNIT_BRANCH: &str = "+- ";
const UNIT_LAST: &str = "\\- ";
const UNIT_PIPE: &str = "|  ";
const UNIT_BLANK: &str = "   ";

fn malformed(line: usize, detail: impl Into<String>) -> TreeTextError {
    TreeTextError::MalformedTreeLine {
        line,
        detail: detail.into(),
    }
}

/// Splits a line into its depth (number of three-character indentation
/// units) and the node text after the connector.
fn split_indent(line: &str, number: usize) -> Result<(usize, &str), TreeTextError> {
    let mut depth = 0;
    let mut rest = line;
    loop {
        if rest.len() >= 3 {
            match &rest[..3] {
                UNIT_BRANCH | UNIT_LAST => return Ok((depth + 1, &rest[3..])),
                UNIT_PIPE | UNIT_BLANK => {
                    depth += 1;
                    rest = &rest[3..];
                    continue;
                }
                _ => {}
            }
        }
        if depth == 0 {
            return Ok((0, rest));
        }
        return Err(malformed(number, "indentation not followed by a connector"));
    }
}

fn parse_node(text: &str, number: usize) -> Result<DependencyTree, TreeTextError> {
    let fields: Vec<&str> = text.split(':').collect();
    if fields.len() != 4 && fields.len() != 5 {
        return Err(malformed(
            number,
            format!("expected 4 or 5 colon-separated fields, found {}", fields.len()),
        ));
    }
    if fields.iter().any(|f| f.trim().is_empty()) {
        return Err(malformed(number, "empty field"));
    }
    let scope = match fields.get(4) {
        Some(raw) => Some(
            raw.trim()
                .parse()
                .map_err(|e: String| malformed(number, e))?,
        ),
        None => None,
    };
    Ok(DependencyTree {
        coordinate: MavenCoordinate::new(
            fields[0].trim(),
            fields[1].trim(),
            fields[3].trim(),
        ),
        packaging: fields[2].trim().to_string(),
        scope,
        children: Vec::new(),
    })
}

pub fn parse_dependency_tree_text(text: &str) -> Result<DependencyTree, TreeTextError> {
    // stack[d] is the currently open node at depth d.
    let mut stack: Vec<DependencyTree> = Vec::new();

    fn close_to(stack: &mut Vec<DependencyTree>, depth: usize) {
        while stack.len() > depth {
            let node = stack.pop().expect("non-empty stack");
            stack
                .last_mut()
                .expect("parent below popped node")
                .children
                .push(node);
        }
    }

    for (index, raw) in text.lines().enumerate() {
        let number = index + 1;
        let line = raw.strip_prefix("[INFO] ").unwrap_or(raw).trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let (depth, node_text) = split_indent(line, number)?;
        let node = parse_node(node_text, number)?;
        if depth == 0 {
            if !stack.is_empty() {
                return Err(malformed(number, "second root line"));
            }
            stack.push(node);
            continue;
        }
        if stack.is_empty() {
            return Err(malformed(number, "child line before any root"));
        }
        if depth > stack.len() {
            return Err(TreeTextError::IndentationJump { line: number });
        }
        close_to(&mut stack, depth);
        stack.push(node);
    }

    if stack.is_empty() {
        return Err(TreeTextError::Empty);
    }
    close_to(&mut stack, 1);
    Ok(stack.pop().expect("root remains"))
}

pub fn render_tree_text(tree: &DependencyTree) -> String {
    let mut out = String::new();
    out.push_str(&node_text(tree));
    out.push('\n');
    let mut ancestors_last = Vec::new();
    render_children(&tree.children, &mut ancestors_last, &mut out);
    out
}

fn node_text(node: &DependencyTree) -> String {
    let mut text = format!(
        "{}:{}:{}:{}",
        node.coordinate.group, node.coordinate.artifact, node.packaging, node.coordinate.version
    );
    if let Some(scope) = node.scope {
        text.push(':');
        text.push_str(scope.as_str());
    }
    text
}

fn render_children(children: &[DependencyTree], ancestors_last: &mut Vec<bool>, out: &mut String) {
    for (index, child) in children.iter().enumerate() {
        let last = index + 1 == children.len();
        for &ancestor_last in ancestors_last.iter() {
            out.push_str(if ancestor_last { UNIT_BLANK } else { UNIT_PIPE });
        }
        out.push_str(if last { UNIT_LAST } else { UNIT_BRANCH });
        out.push_str(&node_text(child));
        out.push('\n');
        ancestors_last.push(last);
        render_children(&child.children, ancestors_last, out);
        ancestors_last.pop();
    }
}
