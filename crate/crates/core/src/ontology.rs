//! Vocabularies, the concept AST and the line-oriented text format.
//!
//! One axiom per line:
//!
//! ```text
//! # comment
//! Male < Person
//! Female and Male < Bot
//! Parent < hasChild some Top
//! hasChild(john, mary)
//! {john} : Father
//! ```
//!
//! `some` binds tighter than `and`, and `and` is left-associative.
//! Parentheses group explicitly.

use std::collections::HashMap;
use std::fmt;

use crate::error::ParseError;

macro_rules! handle {
    ($(#[$m:meta])* $name:ident) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(pub u32);

        impl $name {
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }
    };
}

handle!(
    /// Handle into the class vocabulary.
    ClassId
);
handle!(
    /// Handle into the relation vocabulary.
    RelationId
);
handle!(
    /// Handle into the individual vocabulary.
    IndividualId
);

impl ClassId {
    pub const TOP: ClassId = ClassId(0);
    pub const BOT: ClassId = ClassId(1);
}

pub const TOP_NAME: &str = "Top";
pub const BOT_NAME: &str = "Bot";

/// Bijective name <-> index table.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Interner {
    names: Vec<String>,
    index: HashMap<String, u32>,
}

impl Interner {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        id
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Concept {
    Top,
    Bot,
    Atomic(ClassId),
    Nominal(IndividualId),
    Conjunction(Box<Concept>, Box<Concept>),
    Existential(RelationId, Box<Concept>),
}

impl Concept {
    pub fn and(left: Concept, right: Concept) -> Concept {
        Concept::Conjunction(Box::new(left), Box::new(right))
    }

    pub fn some(rel: RelationId, filler: Concept) -> Concept {
        Concept::Existential(rel, Box::new(filler))
    }

    /// Atomic, nominal, `Top` or `Bot`.
    pub fn is_basic(&self) -> bool {
        matches!(
            self,
            Concept::Top | Concept::Bot | Concept::Atomic(_) | Concept::Nominal(_)
        )
    }

    pub fn depth(&self) -> usize {
        match self {
            Concept::Conjunction(l, r) => 1 + l.depth().max(r.depth()),
            Concept::Existential(_, f) => 1 + f.depth(),
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Axiom {
    /// `sub ⊑ sup`
    Gci(Concept, Concept),
    /// `C(a)`
    Instantiation(Concept, IndividualId),
    /// `r(a, b)`
    RoleAssertion(RelationId, IndividualId, IndividualId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Position {
    pub line: usize,
    pub column: usize,
}

/// Parsed axioms plus their vocabularies. Symbols are declared on first use.
#[derive(Debug, Clone, PartialEq)]
pub struct Ontology {
    pub classes: Interner,
    pub relations: Interner,
    pub individuals: Interner,
    pub axioms: Vec<Axiom>,
    /// Source position of each axiom, when it came from text.
    pub positions: Vec<Option<Position>>,
}

impl Default for Ontology {
    fn default() -> Self {
        Self::new()
    }
}

impl Ontology {
    pub fn new() -> Self {
        let mut classes = Interner::new();
        classes.intern(TOP_NAME);
        classes.intern(BOT_NAME);
        Ontology {
            classes,
            relations: Interner::new(),
            individuals: Interner::new(),
            axioms: Vec::new(),
            positions: Vec::new(),
        }
    }

    pub fn class(&mut self, name: &str) -> ClassId {
        ClassId(self.classes.intern(name))
    }

    pub fn relation(&mut self, name: &str) -> RelationId {
        RelationId(self.relations.intern(name))
    }

    pub fn individual(&mut self, name: &str) -> IndividualId {
        IndividualId(self.individuals.intern(name))
    }

    pub fn class_name(&self, id: ClassId) -> &str {
        self.classes.name(id.0)
    }

    pub fn relation_name(&self, id: RelationId) -> &str {
        self.relations.name(id.0)
    }

    pub fn individual_name(&self, id: IndividualId) -> &str {
        self.individuals.name(id.0)
    }

    pub fn push(&mut self, axiom: Axiom) {
        self.axioms.push(axiom);
        self.positions.push(None);
    }

    pub fn parse(text: &str) -> Result<Ontology, ParseError> {
        let mut onto = Ontology::new();
        onto.extend_from_text(text)?;
        Ok(onto)
    }

    /// Parses `text` and appends its axioms, interning into this ontology's vocabularies.
    pub fn extend_from_text(&mut self, text: &str) -> Result<(), ParseError> {
        for (i, line) in text.lines().enumerate() {
            if let Some((axiom, column)) = self.parse_line(line, i + 1)? {
                self.axioms.push(axiom);
                self.positions.push(Some(Position { line: i + 1, column }));
            }
        }
        Ok(())
    }

    /// Parses a single axiom against this ontology's vocabularies without storing it.
    pub fn parse_axiom(&mut self, text: &str) -> Result<Axiom, ParseError> {
        match self.parse_line(text, 1)? {
            Some((axiom, _)) => Ok(axiom),
            None => Err(ParseError::new(1, 1, "expected an axiom")),
        }
    }

    fn parse_line(
        &mut self,
        line: &str,
        line_no: usize,
    ) -> Result<Option<(Axiom, usize)>, ParseError> {
        let tokens = tokenize(line, line_no)?;
        if tokens.is_empty() {
            return Ok(None);
        }
        let column = tokens[0].column;
        let mut parser = Parser {
            tokens,
            pos: 0,
            line: line_no,
            line_len: line.chars().count(),
            onto: self,
        };
        let axiom = parser.axiom()?;
        parser.expect_end()?;
        Ok(Some((axiom, column)))
    }

    pub fn format_concept(&self, c: &Concept) -> String {
        let mut out = String::new();
        self.write_concept(&mut out, c, false);
        out
    }

    // `nested_in_conj_right` forces parentheses on a conjunction that sits on
    // the right of another conjunction, preserving left-associativity.
    fn write_concept(&self, out: &mut String, c: &Concept, nested_in_conj_right: bool) {
        match c {
            Concept::Top => out.push_str(TOP_NAME),
            Concept::Bot => out.push_str(BOT_NAME),
            Concept::Atomic(id) => out.push_str(self.class_name(*id)),
            Concept::Nominal(id) => {
                out.push('{');
                out.push_str(self.individual_name(*id));
                out.push('}');
            }
            Concept::Conjunction(l, r) => {
                if nested_in_conj_right {
                    out.push('(');
                }
                self.write_concept(out, l, false);
                out.push_str(" and ");
                self.write_concept(out, r, true);
                if nested_in_conj_right {
                    out.push(')');
                }
            }
            Concept::Existential(rel, filler) => {
                out.push_str(self.relation_name(*rel));
                out.push_str(" some ");
                if matches!(**filler, Concept::Conjunction(..)) {
                    out.push('(');
                    self.write_concept(out, filler, false);
                    out.push(')');
                } else {
                    self.write_concept(out, filler, false);
                }
            }
        }
    }

    pub fn format_axiom(&self, a: &Axiom) -> String {
        match a {
            Axiom::Gci(sub, sup) => {
                format!("{} < {}", self.format_concept(sub), self.format_concept(sup))
            }
            Axiom::Instantiation(c, ind) => {
                format!("{{{}}} : {}", self.individual_name(*ind), self.format_concept(c))
            }
            Axiom::RoleAssertion(r, a, b) => format!(
                "{}({}, {})",
                self.relation_name(*r),
                self.individual_name(*a),
                self.individual_name(*b)
            ),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for a in &self.axioms {
            out.push_str(&self.format_axiom(a));
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for Ontology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Less,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Colon,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    column: usize,
}

pub(crate) fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-' | '.' | '#' | '\'' | '/' | '@' | '+')
}

fn tokenize(line: &str, line_no: usize) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = line.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        // '#' opens a comment only at the start of a token; "N#3" is an identifier.
        if c == '#' {
            break;
        }
        let single = match c {
            '<' => Some(Tok::Less),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            ',' => Some(Tok::Comma),
            ':' => Some(Tok::Colon),
            _ => None,
        };
        if let Some(tok) = single {
            tokens.push(Token { tok, column });
            i += 1;
            continue;
        }
        if is_ident_char(c) {
            let start = i;
            while i < chars.len() && is_ident_char(chars[i]) {
                i += 1;
            }
            tokens.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                column,
            });
            continue;
        }
        return Err(ParseError::new(
            line_no,
            column,
            format!("unexpected character {c:?}"),
        ));
    }
    Ok(tokens)
}

pub(crate) const KEYWORDS: [&str; 4] = ["and", "some", TOP_NAME, BOT_NAME];

struct Parser<'o> {
    tokens: Vec<Token>,
    pos: usize,
    line: usize,
    line_len: usize,
    onto: &'o mut Ontology,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, offset: usize) -> Option<&Tok> {
        self.tokens.get(self.pos + offset).map(|t| &t.tok)
    }

    fn column(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map(|t| t.column)
            .unwrap_or(self.line_len + 1)
    }

    fn error(&self, msg: impl Into<String>) -> ParseError {
        ParseError::new(self.line, self.column(), msg)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).map(|t| t.tok.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected {what}")))
        }
    }

    fn expect_end(&self) -> Result<(), ParseError> {
        if self.pos < self.tokens.len() {
            Err(self.error("unexpected trailing input"))
        } else {
            Ok(())
        }
    }

    fn name(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) if !KEYWORDS.contains(&s.as_str()) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error(format!("expected {what}"))),
        }
    }

    fn axiom(&mut self) -> Result<Axiom, ParseError> {
        // r(a, b)
        if let (Some(Tok::Ident(_)), Some(Tok::LParen)) = (self.peek(), self.peek_at(1)) {
            let rel = self.name("relation name")?;
            self.expect(Tok::LParen, "'('")?;
            let a = self.name("individual name")?;
            self.expect(Tok::Comma, "','")?;
            let b = self.name("individual name")?;
            self.expect(Tok::RParen, "')'")?;
            let rel = self.onto.relation(&rel);
            let a = self.onto.individual(&a);
            let b = self.onto.individual(&b);
            return Ok(Axiom::RoleAssertion(rel, a, b));
        }
        // {a} : C
        if let (Some(Tok::LBrace), Some(Tok::Ident(_)), Some(Tok::RBrace), Some(Tok::Colon)) = (
            self.peek(),
            self.peek_at(1),
            self.peek_at(2),
            self.peek_at(3),
        ) {
            self.pos += 1;
            let a = self.name("individual name")?;
            self.pos += 2;
            let c = self.concept()?;
            let a = self.onto.individual(&a);
            return Ok(Axiom::Instantiation(c, a));
        }
        let sub = self.concept()?;
        self.expect(Tok::Less, "'<'")?;
        let sup = self.concept()?;
        Ok(Axiom::Gci(sub, sup))
    }

    fn concept(&mut self) -> Result<Concept, ParseError> {
        let mut acc = self.prim()?;
        while matches!(self.peek(), Some(Tok::Ident(s)) if s == "and") {
            self.pos += 1;
            let rhs = self.prim()?;
            acc = Concept::and(acc, rhs);
        }
        Ok(acc)
    }

    fn prim(&mut self) -> Result<Concept, ParseError> {
        match self.peek().cloned() {
            Some(Tok::LParen) => {
                self.pos += 1;
                let c = self.concept()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(c)
            }
            Some(Tok::LBrace) => {
                self.pos += 1;
                let a = self.name("individual name")?;
                self.expect(Tok::RBrace, "'}'")?;
                Ok(Concept::Nominal(self.onto.individual(&a)))
            }
            Some(Tok::Ident(s)) if s == TOP_NAME => {
                self.pos += 1;
                Ok(Concept::Top)
            }
            Some(Tok::Ident(s)) if s == BOT_NAME => {
                self.pos += 1;
                Ok(Concept::Bot)
            }
            Some(Tok::Ident(s)) if s == "and" || s == "some" => {
                Err(self.error(format!("unexpected keyword '{s}'")))
            }
            Some(Tok::Ident(s)) => {
                self.bump();
                if matches!(self.peek(), Some(Tok::Ident(k)) if k == "some") {
                    self.pos += 1;
                    let filler = self.prim()?;
                    let rel = self.onto.relation(&s);
                    Ok(Concept::some(rel, filler))
                } else {
                    Ok(Concept::Atomic(self.onto.class(&s)))
                }
            }
            _ => Err(self.error("expected a concept")),
        }
    }
}
