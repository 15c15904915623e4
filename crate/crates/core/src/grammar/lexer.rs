/// A word or punctuation mark. `norm` is lower-cased, `raw` keeps the
/// original spelling so shape names survive with their case.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Token {
    pub norm: String,
    pub raw: String,
}

impl Token {
    pub fn is(&self, word: &str) -> bool {
        self.norm == word
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self.norm.as_str(), "." | "?" | "!" | ";")
    }
}

pub(crate) fn tokenize(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut word = String::new();
    let flush = |word: &mut String, out: &mut Vec<Token>| {
        if !word.is_empty() {
            out.push(Token {
                norm: word.to_lowercase(),
                raw: std::mem::take(word),
            });
        }
    };
    for ch in text.chars() {
        match ch {
            c if c.is_alphanumeric() || c == '+' => word.push(c),
            '\'' | '\u{2019}' => {}
            ',' | '.' | '?' | '!' | ';' | ':' => {
                flush(&mut word, &mut out);
                let p = if ch == ':' { ',' } else { ch };
                out.push(Token {
                    norm: p.to_string(),
                    raw: ch.to_string(),
                });
            }
            _ => flush(&mut word, &mut out),
        }
    }
    flush(&mut word, &mut out);
    out
}
