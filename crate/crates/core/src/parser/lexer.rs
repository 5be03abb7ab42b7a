use crate::ast::{Pos, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Keyword {
    Machine,
    Context,
    Extends,
    Refines,
    Sees,
    Sets,
    Constants,
    Axioms,
    Theorems,
    Variables,
    Invariants,
    Variant,
    Events,
    Event,
    Where,
    Then,
    End,
}

impl Keyword {
    fn lookup(word: &str) -> Option<Keyword> {
        let upper = word.to_ascii_uppercase();
        Some(match upper.as_str() {
            "MACHINE" => Keyword::Machine,
            "CONTEXT" => Keyword::Context,
            "EXTENDS" => Keyword::Extends,
            "REFINES" => Keyword::Refines,
            "SEES" => Keyword::Sees,
            "SETS" => Keyword::Sets,
            "CONSTANTS" => Keyword::Constants,
            "AXIOMS" => Keyword::Axioms,
            "THEOREMS" => Keyword::Theorems,
            "VARIABLES" => Keyword::Variables,
            "INVARIANTS" => Keyword::Invariants,
            "VARIANT" => Keyword::Variant,
            "EVENTS" => Keyword::Events,
            "EVENT" => Keyword::Event,
            "WHERE" => Keyword::Where,
            "THEN" => Keyword::Then,
            "END" => Keyword::End,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Keyword::Machine => "MACHINE",
            Keyword::Context => "CONTEXT",
            Keyword::Extends => "EXTENDS",
            Keyword::Refines => "REFINES",
            Keyword::Sees => "SEES",
            Keyword::Sets => "SETS",
            Keyword::Constants => "CONSTANTS",
            Keyword::Axioms => "AXIOMS",
            Keyword::Theorems => "THEOREMS",
            Keyword::Variables => "VARIABLES",
            Keyword::Invariants => "INVARIANTS",
            Keyword::Variant => "VARIANT",
            Keyword::Events => "EVENTS",
            Keyword::Event => "Event",
            Keyword::Where => "Where",
            Keyword::Then => "Then",
            Keyword::End => "End",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Kw(Keyword),
    Ident(String),
    Int(u64),
    True,
    False,
    BoolSet,
    NatSet,
    Partition,
    Not,
    And,
    Or,
    Implies,
    Eq,
    Neq,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Slash,
    Colon,
    Assign,
    TotalFn,
    Maplet,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    /// A character the lexer does not understand; reported by the parser.
    Unknown(char),
    /// An integer literal too large for u64.
    BadInt(String),
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Kw(k) => k.as_str().to_string(),
            Tok::Ident(s) => s.clone(),
            Tok::Int(n) => n.to_string(),
            Tok::True => "TRUE".into(),
            Tok::False => "FALSE".into(),
            Tok::BoolSet => "BOOL".into(),
            Tok::NatSet => "NAT".into(),
            Tok::Partition => "partition".into(),
            Tok::Not => "not".into(),
            Tok::And => "&".into(),
            Tok::Or => "or".into(),
            Tok::Implies => "=>".into(),
            Tok::Eq => "=".into(),
            Tok::Neq => "/=".into(),
            Tok::Lt => "<".into(),
            Tok::Le => "<=".into(),
            Tok::Gt => ">".into(),
            Tok::Ge => ">=".into(),
            Tok::Plus => "+".into(),
            Tok::Minus => "-".into(),
            Tok::Star => "*".into(),
            Tok::Slash => "/".into(),
            Tok::Colon => ":".into(),
            Tok::Assign => ":=".into(),
            Tok::TotalFn => "-->".into(),
            Tok::Maplet => "|->".into(),
            Tok::LBrace => "{".into(),
            Tok::RBrace => "}".into(),
            Tok::LParen => "(".into(),
            Tok::RParen => ")".into(),
            Tok::Comma => ",".into(),
            Tok::Unknown(c) => c.to_string(),
            Tok::BadInt(s) => s.clone(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

/// Splits `src` into tokens. Never fails: unknown characters become
/// [`Tok::Unknown`] so the parser can report them with a position.
pub fn tokenize(src: &str) -> Vec<Token> {
    let mut lx = Lexer {
        chars: src.chars().collect(),
        idx: 0,
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    loop {
        lx.skip_trivia();
        let start = lx.pos();
        let Some(c) = lx.peek(0) else {
            out.push(Token {
                tok: Tok::Eof,
                span: Span::new(start, start),
            });
            return out;
        };
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let word = lx.take_while(|c| c.is_ascii_alphanumeric() || c == '_');
            word_token(&word)
        } else if c.is_ascii_digit() {
            let digits = lx.take_while(|c| c.is_ascii_digit());
            match digits.parse::<u64>() {
                Ok(n) => Tok::Int(n),
                Err(_) => Tok::BadInt(digits),
            }
        } else {
            lx.symbol()
        };
        let end = lx.pos();
        out.push(Token {
            tok,
            span: Span::new(start, end),
        });
    }
}

fn word_token(word: &str) -> Tok {
    match word {
        "TRUE" => Tok::True,
        "FALSE" => Tok::False,
        "BOOL" => Tok::BoolSet,
        "NAT" => Tok::NatSet,
        "partition" => Tok::Partition,
        "not" => Tok::Not,
        "or" => Tok::Or,
        "and" => Tok::And,
        _ => match Keyword::lookup(word) {
            Some(k) => Tok::Kw(k),
            None => Tok::Ident(word.to_string()),
        },
    }
}

struct Lexer {
    chars: Vec<char>,
    idx: usize,
    line: u32,
    col: u32,
}

impl Lexer {
    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            col: self.col,
        }
    }

    fn peek(&self, ahead: usize) -> Option<char> {
        self.chars.get(self.idx + ahead).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek(0)?;
        self.idx += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn take_while(&mut self, pred: impl Fn(char) -> bool) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek(0) {
            if !pred(c) {
                break;
            }
            s.push(c);
            self.bump();
        }
        s
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek(0) {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('/') if self.peek(1) == Some('/') => {
                    while let Some(c) = self.peek(0) {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => return,
            }
        }
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars().enumerate().all(|(i, c)| self.peek(i) == Some(c))
    }

    fn symbol(&mut self) -> Tok {
        // longest match first
        const TABLE: &[(&str, Tok)] = &[
            ("-->", Tok::TotalFn),
            ("|->", Tok::Maplet),
            ("=>", Tok::Implies),
            ("/=", Tok::Neq),
            ("<=", Tok::Le),
            (">=", Tok::Ge),
            (":=", Tok::Assign),
            ("&", Tok::And),
            ("|", Tok::Or),
            ("=", Tok::Eq),
            ("<", Tok::Lt),
            (">", Tok::Gt),
            ("+", Tok::Plus),
            ("-", Tok::Minus),
            ("*", Tok::Star),
            ("/", Tok::Slash),
            (":", Tok::Colon),
            ("{", Tok::LBrace),
            ("}", Tok::RBrace),
            ("(", Tok::LParen),
            (")", Tok::RParen),
            (",", Tok::Comma),
        ];
        for (text, tok) in TABLE {
            if self.starts_with(text) {
                for _ in 0..text.chars().count() {
                    self.bump();
                }
                return tok.clone();
            }
        }
        let c = self.bump().unwrap_or('\0');
        Tok::Unknown(c)
    }
}
