//! Pulls code out of post bodies: markdown fences (```` ``` ```` / `~~~`) and
//! HTML `<code>` regions, in document order.

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CodeBlocks {
    pub blocks: Vec<String>,
    pub warnings: Vec<String>,
}

pub fn extract_code_blocks(body: &str) -> CodeBlocks {
    let mut out = CodeBlocks::default();
    let mut pos = 0;
    while pos < body.len() {
        let Some((start, kind)) = next_opening(body, pos) else {
            break;
        };
        match kind {
            Opening::Fence(fence) => {
                // the info string runs to the end of the opening line
                let content_start = match body[start..].find('\n') {
                    Some(nl) => start + nl + 1,
                    None => body.len(),
                };
                match find_closing_fence(body, content_start, fence) {
                    Some((content_end, after)) => {
                        out.blocks.push(body[content_start..content_end].to_string());
                        pos = after;
                    }
                    None => {
                        out.blocks.push(body[content_start..].to_string());
                        out.warnings
                            .push(format!("unterminated {fence} fence at byte {start}"));
                        pos = body.len();
                    }
                }
            }
            Opening::Tag { content_start } => {
                let rest = &body[content_start..];
                match find_ascii_ci(rest, "</code>") {
                    Some(end) => {
                        out.blocks.push(decode_entities(&rest[..end]));
                        pos = content_start + end + "</code>".len();
                    }
                    None => {
                        out.blocks.push(decode_entities(rest));
                        out.warnings
                            .push(format!("unterminated <code> tag at byte {start}"));
                        pos = body.len();
                    }
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy)]
enum Opening {
    Fence(&'static str),
    Tag { content_start: usize },
}

fn next_opening(body: &str, from: usize) -> Option<(usize, Opening)> {
    let mut best: Option<(usize, Opening)> = None;
    for fence in ["```", "~~~"] {
        let mut search = from;
        while let Some(off) = body[search..].find(fence) {
            let at = search + off;
            if at == 0 || body.as_bytes()[at - 1] == b'\n' {
                if best.is_none_or(|(b, _)| at < b) {
                    best = Some((at, Opening::Fence(fence)));
                }
                break;
            }
            search = at + fence.len();
        }
    }
    let mut search = from;
    while let Some(off) = find_ascii_ci(&body[search..], "<code") {
        let at = search + off;
        let after = at + "<code".len();
        match body.as_bytes().get(after) {
            Some(b'>') => {
                if best.is_none_or(|(b, _)| at < b) {
                    best = Some((at, Opening::Tag { content_start: after + 1 }));
                }
                break;
            }
            Some(c) if c.is_ascii_whitespace() => {
                if let Some(gt) = body[after..].find('>') {
                    if best.is_none_or(|(b, _)| at < b) {
                        best = Some((at, Opening::Tag { content_start: after + gt + 1 }));
                    }
                }
                break;
            }
            _ => search = after,
        }
    }
    best
}

/// Returns (end of content, position after the closing fence line).
fn find_closing_fence(body: &str, from: usize, fence: &str) -> Option<(usize, usize)> {
    let mut line_start = from;
    while line_start <= body.len() {
        let line_end = body[line_start..]
            .find('\n')
            .map(|i| line_start + i)
            .unwrap_or(body.len());
        if body[line_start..line_end].trim_start().starts_with(fence) {
            let content_end = if line_start > from { line_start - 1 } else { from };
            let after = (line_end + 1).min(body.len());
            return Some((content_end.max(from), after));
        }
        if line_end == body.len() {
            break;
        }
        line_start = line_end + 1;
    }
    None
}

fn find_ascii_ci(haystack: &str, needle: &str) -> Option<usize> {
    let h = haystack.as_bytes();
    let n = needle.as_bytes();
    if n.len() > h.len() {
        return None;
    }
    (0..=h.len() - n.len()).find(|&i| h[i..i + n.len()].eq_ignore_ascii_case(n))
}

fn decode_entities(s: &str) -> String {
    if !s.contains('&') {
        return s.to_string();
    }
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        rest = &rest[amp..];
        let decoded = rest.find(';').filter(|&semi| semi <= 10).and_then(|semi| {
            let ent = &rest[1..semi];
            let ch = match ent {
                "lt" => Some('<'),
                "gt" => Some('>'),
                "amp" => Some('&'),
                "quot" => Some('"'),
                "apos" => Some('\''),
                "nbsp" => Some('\u{a0}'),
                _ => ent
                    .strip_prefix("#x")
                    .or_else(|| ent.strip_prefix("#X"))
                    .and_then(|h| u32::from_str_radix(h, 16).ok())
                    .or_else(|| ent.strip_prefix('#').and_then(|d| d.parse().ok()))
                    .and_then(char::from_u32),
            };
            ch.map(|c| (c, semi))
        });
        match decoded {
            Some((c, semi)) => {
                out.push(c);
                rest = &rest[semi + 1..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

/// Strips HTML tags and decodes entities; used for text similarity.
pub fn strip_html(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut in_tag = false;
    for c in s.chars() {
        match c {
            '<' => in_tag = true,
            '>' if in_tag => {
                in_tag = false;
                out.push(' ');
            }
            _ if !in_tag => out.push(c),
            _ => {}
        }
    }
    decode_entities(&out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_fenced_block() {
        let got = extract_code_blocks("Try this:\n```\nint a=0;\n```\nthanks");
        assert_eq!(got.blocks, vec!["int a=0;"]);
        assert!(got.warnings.is_empty());
    }

    #[test]
    fn no_code() {
        let got = extract_code_blocks("<p>just words</p>");
        assert!(got.blocks.is_empty());
        assert!(got.warnings.is_empty());
    }

    #[test]
    fn interleaved_blocks_match_fixture() {
        let body = include_str!("../../tests/fixtures/interleaved_body.txt");
        let expected: Vec<String> =
            include_str!("../../tests/fixtures/interleaved_expected.txt")
                .split("\n-----\n")
                .map(|s| s.to_string())
                .collect();
        let got = extract_code_blocks(body);
        assert_eq!(got.blocks.len(), 3);
        assert_eq!(got.blocks, expected);
        assert!(got.warnings.is_empty());
    }

    #[test]
    fn html_code_is_entity_decoded() {
        let got = extract_code_blocks("<pre><code>if (a &lt; b &amp;&amp; c) {}\n</code></pre>");
        assert_eq!(got.blocks, vec!["if (a < b && c) {}\n"]);
    }

    #[test]
    fn code_tag_with_attributes() {
        let got = extract_code_blocks(r#"<code class="lang-java">x++;</code>"#);
        assert_eq!(got.blocks, vec!["x++;"]);
    }

    #[test]
    fn codex_tag_is_not_code() {
        let got = extract_code_blocks("<codex>no</codex>");
        assert!(got.blocks.is_empty());
    }

    #[test]
    fn unterminated_fence_extends_to_end() {
        let got = extract_code_blocks("text\n```java\n  int x = 1;\n  x++;");
        assert_eq!(got.blocks, vec!["  int x = 1;\n  x++;"]);
        assert_eq!(got.warnings.len(), 1);
    }

    #[test]
    fn unterminated_tag_extends_to_end() {
        let got = extract_code_blocks("<code>foo();");
        assert_eq!(got.blocks, vec!["foo();"]);
        assert_eq!(got.warnings.len(), 1);
    }

    #[test]
    fn empty_fence() {
        let got = extract_code_blocks("```\n```\n");
        assert_eq!(got.blocks, vec![""]);
    }

    #[test]
    fn whitespace_preserved() {
        let got = extract_code_blocks("```\n\tfor (;;) {\n\t    go();\n\t}\n```");
        assert_eq!(got.blocks, vec!["\tfor (;;) {\n\t    go();\n\t}"]);
    }

    #[test]
    fn strip_html_removes_tags() {
        assert_eq!(strip_html("<p>a &amp; b</p>").trim(), "a & b");
    }
}
