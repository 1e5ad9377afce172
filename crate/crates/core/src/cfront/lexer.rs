use crate::error::{Error, Pos, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(String),
    Float(String),
    Str(String),
    Char(String),
    Punct(&'static str),
    /// A whole `#pragma` line with continuations joined; text after `#pragma`.
    Pragma(String),
    /// `#include ...` kept verbatim.
    Include(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

const PUNCTS: &[&str] = &[
    "<<=", ">>=", "...", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "+=",
    "-=", "*=", "/=", "%=", "&=", "|=", "^=", "(", ")", "[", "]", "{", "}", ";", ",", "=", "<",
    ">", "+", "-", "*", "/", "%", "!", "~", "&", "|", "^", "?", ":", ".",
];

pub fn tokenize(src: &str) -> Result<Vec<Token>> {
    Lexer { chars: src.chars().collect(), i: 0, line: 1, col: 1, at_line_start: true }.run()
}

struct Lexer {
    chars: Vec<char>,
    i: usize,
    line: u32,
    col: u32,
    at_line_start: bool,
}

impl Lexer {
    fn peek(&self, k: usize) -> Option<char> {
        self.chars.get(self.i + k).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.i).copied()?;
        self.i += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
            self.at_line_start = true;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn pos(&self) -> Pos {
        Pos::new(self.line, self.col)
    }

    fn run(mut self) -> Result<Vec<Token>> {
        let mut out = Vec::new();
        while let Some(c) = self.peek(0) {
            if c == '\n' {
                self.bump();
                continue;
            }
            if c.is_whitespace() {
                self.bump();
                continue;
            }
            if c == '/' && self.peek(1) == Some('/') {
                while let Some(c) = self.peek(0) {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
                continue;
            }
            if c == '/' && self.peek(1) == Some('*') {
                let start = self.pos();
                self.bump();
                self.bump();
                loop {
                    match self.peek(0) {
                        None => {
                            return Err(Error::Syntax { pos: start, msg: "unterminated comment".into() })
                        }
                        Some('*') if self.peek(1) == Some('/') => {
                            self.bump();
                            self.bump();
                            break;
                        }
                        _ => {
                            self.bump();
                        }
                    }
                }
                continue;
            }
            let pos = self.pos();
            if c == '#' {
                if !self.at_line_start {
                    return Err(Error::Syntax { pos, msg: "stray `#`".into() });
                }
                out.push(self.directive(pos)?);
                continue;
            }
            self.at_line_start = false;
            if c.is_ascii_alphabetic() || c == '_' {
                let mut s = String::new();
                while let Some(c) = self.peek(0) {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        s.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                out.push(Token { tok: Tok::Ident(s), pos });
                continue;
            }
            if c.is_ascii_digit() || (c == '.' && self.peek(1).is_some_and(|d| d.is_ascii_digit())) {
                out.push(self.number(pos)?);
                continue;
            }
            if c == '"' || c == '\'' {
                out.push(self.quoted(pos, c)?);
                continue;
            }
            let mut matched = None;
            for p in PUNCTS {
                if p.chars().enumerate().all(|(k, pc)| self.peek(k) == Some(pc)) {
                    matched = Some(*p);
                    break;
                }
            }
            match matched {
                Some(p) => {
                    for _ in 0..p.len() {
                        self.bump();
                    }
                    out.push(Token { tok: Tok::Punct(p), pos });
                }
                None => return Err(Error::Syntax { pos, msg: format!("unexpected character `{c}`") }),
            }
        }
        Ok(out)
    }

    fn number(&mut self, pos: Pos) -> Result<Token> {
        let mut s = String::new();
        let mut float = false;
        if self.peek(0) == Some('0') && matches!(self.peek(1), Some('x') | Some('X')) {
            s.push(self.bump().unwrap());
            s.push(self.bump().unwrap());
            while let Some(c) = self.peek(0) {
                if c.is_ascii_hexdigit() {
                    s.push(c);
                    self.bump();
                } else {
                    break;
                }
            }
        } else {
            while let Some(c) = self.peek(0) {
                if c.is_ascii_digit() {
                    s.push(c);
                    self.bump();
                } else if c == '.' && !float {
                    float = true;
                    s.push(c);
                    self.bump();
                } else if (c == 'e' || c == 'E')
                    && (self.peek(1).is_some_and(|d| d.is_ascii_digit())
                        || (matches!(self.peek(1), Some('+') | Some('-'))
                            && self.peek(2).is_some_and(|d| d.is_ascii_digit())))
                {
                    float = true;
                    s.push(c);
                    self.bump();
                    s.push(self.bump().unwrap());
                } else {
                    break;
                }
            }
        }
        while let Some(c) = self.peek(0) {
            if matches!(c, 'u' | 'U' | 'l' | 'L' | 'f' | 'F') {
                if matches!(c, 'f' | 'F') {
                    float = true;
                }
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        if self.peek(0).is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(Error::Syntax { pos, msg: format!("malformed number `{s}`") });
        }
        Ok(Token { tok: if float { Tok::Float(s) } else { Tok::Int(s) }, pos })
    }

    fn quoted(&mut self, pos: Pos, q: char) -> Result<Token> {
        let mut s = String::new();
        s.push(self.bump().unwrap());
        loop {
            match self.bump() {
                None | Some('\n') => {
                    return Err(Error::Syntax { pos, msg: "unterminated literal".into() })
                }
                Some('\\') => {
                    s.push('\\');
                    if let Some(c) = self.bump() {
                        s.push(c);
                    }
                }
                Some(c) if c == q => {
                    s.push(c);
                    break;
                }
                Some(c) => s.push(c),
            }
        }
        Ok(Token { tok: if q == '"' { Tok::Str(s) } else { Tok::Char(s) }, pos })
    }

    /// Reads one physical line (with `\` continuations) after `#`.
    fn raw_line(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek(0) {
            if c == '\\' && self.peek(1) == Some('\n') {
                self.bump();
                self.bump();
                s.push(' ');
                continue;
            }
            if c == '\n' {
                break;
            }
            s.push(c);
            self.bump();
        }
        s
    }

    fn directive(&mut self, pos: Pos) -> Result<Token> {
        self.bump();
        let line = self.raw_line();
        let trimmed = line.trim();
        let (word, rest) = match trimmed.find(|c: char| c.is_whitespace() || c == '<' || c == '"') {
            Some(k) => (&trimmed[..k], trimmed[k..].trim()),
            None => (trimmed, ""),
        };
        match word {
            "pragma" => {
                let mut text = rest.to_string();
                // HMPP-style continuation: `... &` then `#pragma hmpp & ...`.
                while text.ends_with('&') && !text.ends_with("&&") {
                    let save = (self.i, self.line, self.col, self.at_line_start);
                    let mut j = self.i;
                    while j < self.chars.len() && self.chars[j].is_whitespace() {
                        j += 1;
                    }
                    if self.chars.get(j) != Some(&'#') {
                        break;
                    }
                    while self.i < j {
                        self.bump();
                    }
                    self.bump();
                    let next = self.raw_line();
                    let next = next.trim();
                    let cont = next
                        .strip_prefix("pragma")
                        .map(str::trim_start)
                        .and_then(|r| {
                            let w: String = r.chars().take_while(|c| c.is_ascii_alphanumeric()).collect();
                            let after = r[w.len()..].trim_start();
                            after.strip_prefix('&').map(|a| a.trim().to_string())
                        });
                    match cont {
                        Some(more) => {
                            text.pop();
                            let base = text.trim_end().to_string();
                            text = format!("{base} {more}");
                        }
                        None => {
                            (self.i, self.line, self.col, self.at_line_start) = save;
                            break;
                        }
                    }
                }
                Ok(Token { tok: Tok::Pragma(text), pos })
            }
            "include" => Ok(Token { tok: Tok::Include(rest.to_string()), pos }),
            "" => Err(Error::Syntax { pos, msg: "empty preprocessor directive".into() }),
            other => Err(Error::Unsupported {
                pos,
                construct: format!("preprocessor directive `#{other}` (run the preprocessor first)"),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<Tok> {
        tokenize(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn numbers_and_operators() {
        let t = kinds("a += 1.5e-3f; b<<=2;");
        assert_eq!(t[1], Tok::Punct("+="));
        assert_eq!(t[2], Tok::Float("1.5e-3f".into()));
        assert_eq!(t[5], Tok::Punct("<<="));
    }

    #[test]
    fn pragma_line_is_one_token() {
        let t = tokenize("int x;\n#pragma omp parallel for \\\n check\nfor(;;);").unwrap();
        assert_eq!(t[3].tok, Tok::Pragma("omp parallel for   check".into()));
        assert_eq!(t[3].pos, Pos::new(2, 1));
    }

    #[test]
    fn hmpp_ampersand_continuation_joins() {
        let t = kinds("#pragma hmpp f codelet, target=CUDA, &\n#pragma hmpp & args[*].transfer=auto\nvoid f();");
        assert_eq!(t[0], Tok::Pragma("hmpp f codelet, target=CUDA, args[*].transfer=auto".into()));
    }

    #[test]
    fn define_is_rejected() {
        let e = tokenize("#define N 4\n").unwrap_err();
        assert!(matches!(e, Error::Unsupported { .. }));
    }

    #[test]
    fn comments_are_skipped() {
        assert_eq!(kinds("/* x */ a // y\n b").len(), 2);
    }
}
