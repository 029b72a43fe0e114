//! Locate the outermost JSON array in free-form model output.

/// Result of scanning for the first balanced `[...]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extracted<'a> {
    Block(&'a str),
    /// A `[` was opened and never closed.
    Runaway,
    /// No `[` at all.
    Missing,
}

/// Find the first `[` and its matching `]`. Brackets inside JSON string
/// literals (including escaped quotes) do not count.
pub fn extract_block(text: &str) -> Extracted<'_> {
    let Some(start) = text.find('[') else {
        return Extracted::Missing;
    };
    let bytes = text.as_bytes();
    let mut depth = 0usize;
    let mut in_str = false;
    let mut escaped = false;
    for (off, &ch) in bytes[start..].iter().enumerate() {
        if in_str {
            if escaped {
                escaped = false;
            } else if ch == b'\\' {
                escaped = true;
            } else if ch == b'"' {
                in_str = false;
            }
            continue;
        }
        match ch {
            b'"' => in_str = true,
            b'[' => depth += 1,
            b']' => {
                depth -= 1;
                if depth == 0 {
                    return Extracted::Block(&text[start..=start + off]);
                }
            }
            _ => {}
        }
    }
    Extracted::Runaway
}
