//! Text form of SPD trees.
//!
//! ```text
//! tree  := leaf | inner
//! leaf  := ID ":" NUMBER
//! inner := ("s" | "p") "(" tree ("," tree)+ ")" attr?
//! attr  := "[b=" NUMBER "]"            -- serial nodes only
//! ```
//!
//! Whitespace is insignificant. Numbers are plain decimals.

use super::tree::{Op, SpdTree};
use super::SpdError;

pub fn parse_tree(text: &str) -> Result<SpdTree, SpdError> {
    let mut p = Parser { chars: text.chars().collect(), pos: 0, line: 1, column: 1 };
    let tree = p.tree()?;
    p.skip_ws();
    if p.peek().is_some() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(tree)
}

/// Canonical text form; `parse_tree(&serialize_tree(t)) == t`.
pub fn serialize_tree(tree: &SpdTree) -> String {
    let mut out = String::new();
    write_tree(tree, &mut out);
    out
}

fn write_tree(tree: &SpdTree, out: &mut String) {
    match tree {
        SpdTree::Leaf(l) => {
            out.push_str(l.id());
            out.push(':');
            out.push_str(&fmt_number(l.weight()));
        }
        SpdTree::Inner(i) => {
            out.push_str(i.op().symbol());
            out.push('(');
            for (k, c) in i.children().iter().enumerate() {
                if k > 0 {
                    out.push_str(", ");
                }
                write_tree(c, out);
            }
            out.push(')');
            if i.op() == Op::Serial && i.edge_weight() != 0.0 {
                out.push_str("[b=");
                out.push_str(&fmt_number(i.edge_weight()));
                out.push(']');
            }
        }
    }
}

// `Display` for f64 is the shortest decimal that round-trips and never uses
// exponent notation.
fn fmt_number(x: f64) -> String {
    format!("{x}")
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    column: usize,
}

impl Parser {
    fn error(&self, message: impl Into<String>) -> SpdError {
        SpdError::Syntax { line: self.line, column: self.column, message: message.into() }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.bump();
        }
    }

    fn expect(&mut self, want: char) -> Result<(), SpdError> {
        self.skip_ws();
        match self.peek() {
            Some(c) if c == want => {
                self.bump();
                Ok(())
            }
            Some(c) => Err(self.error(format!("expected '{want}', found '{c}'"))),
            None => Err(self.error(format!("expected '{want}', found end of input"))),
        }
    }

    fn ident(&mut self) -> Result<String, SpdError> {
        self.skip_ws();
        let mut id = String::new();
        match self.peek() {
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
            Some(c) => return Err(self.error(format!("expected identifier, found '{c}'"))),
            None => return Err(self.error("expected identifier, found end of input")),
        }
        while let Some(c) = self.peek().filter(|c| c.is_ascii_alphanumeric() || *c == '_') {
            id.push(c);
            self.bump();
        }
        Ok(id)
    }

    fn number(&mut self) -> Result<f64, SpdError> {
        self.skip_ws();
        let (line, column) = (self.line, self.column);
        let mut text = String::new();
        while let Some(c) = self.peek().filter(char::is_ascii_digit) {
            text.push(c);
            self.bump();
        }
        if text.is_empty() {
            return Err(self.error("expected a number"));
        }
        if self.peek() == Some('.') {
            text.push('.');
            self.bump();
            let before = text.len();
            while let Some(c) = self.peek().filter(char::is_ascii_digit) {
                text.push(c);
                self.bump();
            }
            if text.len() == before {
                return Err(self.error("expected digits after '.'"));
            }
        }
        text.parse()
            .map_err(|_| SpdError::Syntax { line, column, message: format!("bad number {text:?}") })
    }

    fn tree(&mut self) -> Result<SpdTree, SpdError> {
        self.skip_ws();
        let (line, column) = (self.line, self.column);
        let at = |e: SpdError| match e {
            SpdError::Arity(k) => SpdError::Syntax {
                line,
                column,
                message: format!("inner node needs at least two children, got {k}"),
            },
            other => other,
        };
        let id = self.ident()?;
        self.skip_ws();
        match self.peek() {
            Some('(') if id == "s" || id == "p" => {
                self.bump();
                let mut children = vec![self.tree()?];
                loop {
                    self.skip_ws();
                    match self.peek() {
                        Some(',') => {
                            self.bump();
                            children.push(self.tree()?);
                        }
                        Some(')') => {
                            self.bump();
                            break;
                        }
                        Some(c) => return Err(self.error(format!("expected ',' or ')', found '{c}'"))),
                        None => return Err(self.error("unclosed '('")),
                    }
                }
                self.skip_ws();
                let b = if self.peek() == Some('[') {
                    if id == "p" {
                        return Err(self.error("edge weight is only valid on serial nodes"));
                    }
                    self.bump();
                    self.skip_ws();
                    let key = self.ident()?;
                    if key != "b" {
                        return Err(self.error(format!("unknown attribute {key:?}")));
                    }
                    self.expect('=')?;
                    let b = self.number()?;
                    self.expect(']')?;
                    b
                } else {
                    0.0
                };
                if id == "s" { SpdTree::serial(children, b) } else { SpdTree::parallel(children) }.map_err(at)
            }
            Some('(') => Err(self.error(format!("unknown composition {id:?}, expected 's' or 'p'"))),
            Some(':') => {
                self.bump();
                let w = self.number()?;
                SpdTree::leaf(id, w).map_err(|e| match e {
                    SpdError::LeafWeight(id, w) => SpdError::Syntax {
                        line,
                        column,
                        message: format!("leaf {id} needs a positive weight, got {w}"),
                    },
                    other => other,
                })
            }
            Some(c) => Err(self.error(format!("expected ':' or '(', found '{c}'"))),
            None => Err(self.error("unexpected end of input")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_grammar_examples() {
        let t = parse_tree("s(a:1, b:4)").unwrap();
        let SpdTree::Inner(i) = &t else { panic!() };
        assert_eq!(i.op(), Op::Serial);
        let leaves: Vec<_> = t.leaves().iter().map(|l| (l.id().to_string(), l.weight())).collect();
        assert_eq!(leaves, vec![("a".into(), 1.0), ("b".into(), 4.0)]);

        let t = parse_tree("p(a:1, s(b:2, c:3)[b=5])").unwrap();
        let SpdTree::Inner(i) = &t else { panic!() };
        assert_eq!(i.op(), Op::Parallel);
        let SpdTree::Inner(j) = &i.children()[1] else { panic!() };
        assert_eq!((j.op(), j.edge_weight()), (Op::Serial, 5.0));
    }

    #[test]
    fn whitespace_and_leaf_named_like_ops() {
        let t = parse_tree(" s (\n  s : 1 ,\n p:2.5 ) [ b = 0.25 ] ").unwrap();
        assert_eq!(t.leaf_count(), 2);
        assert_eq!(serialize_tree(&t), "s(s:1, p:2.5)[b=0.25]");
    }

    #[test]
    fn syntax_errors_carry_positions() {
        match parse_tree("s(a:1)") {
            Err(SpdError::Syntax { line: 1, column: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse_tree("p(a:1,\n  b:x)") {
            Err(SpdError::Syntax { line: 2, column: 5, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_tree("p(a:1, b:0)"), Err(SpdError::Syntax { .. })));
        assert!(matches!(parse_tree("p(a:1, b:1)[b=2]"), Err(SpdError::Syntax { .. })));
        assert!(matches!(parse_tree("q(a:1, b:1)"), Err(SpdError::Syntax { .. })));
        assert!(matches!(parse_tree("s(a:1, b:1) x"), Err(SpdError::Syntax { .. })));
        assert!(matches!(parse_tree("s(a:1, b:1"), Err(SpdError::Syntax { .. })));
        assert!(matches!(parse_tree("s(a:1, a:2)"), Err(SpdError::DuplicateLeafId(_))));
    }

    #[test]
    fn serializes_canonically() {
        let t = parse_tree("s(p(a:1,b:1.5),c:2)[b=3]").unwrap();
        assert_eq!(serialize_tree(&t), "s(p(a:1, b:1.5), c:2)[b=3]");
        let tiny = SpdTree::leaf("x", 1e-9).unwrap();
        assert_eq!(parse_tree(&serialize_tree(&tiny)).unwrap(), tiny);
    }
}
