//! Recursive-descent parser for operator expressions and their elaboration
//! into engine values.
//!
//! Grammar:
//!   expr   := ['-'] term (('+'|'-') term)*
//!   term   := factor ('*' factor)*
//!   factor := atom ['^' int]
//!   atom   := ident | literal | '(' expr ')' | 'inv(' expr ')' | 'exp(' expr ')'
//! with idents `x1 x2 d1 d2 alpha`, rational literals `p` or `p/q`, and
//! integer exponents (negative allowed on `d2`, and on `d1` when the
//! symbol-side elaborator is used).

use sato2d_core::field::{KField, Rat};
use sato2d_core::opalg::{EOp, Trunc};
use sato2d_core::ratexp::BiPoly;
use sato2d_core::series::XSeries;
use sato2d_core::zseries::ZSeries;
use sato2d_core::Error as CoreError;

use num_bigint::BigInt;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(Rat),
    Alpha,
    X1,
    X2,
    D1,
    D2,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i64),
    Inv(Box<Expr>),
    Exp(Box<Expr>),
}

#[derive(Debug, Clone)]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

impl core::fmt::Display for ParseError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "parse error at byte {}: {}", self.position, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(BigInt),
    Plus,
    Minus,
    Star,
    Caret,
    Slash,
    LParen,
    RParen,
}

struct Lexer {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

fn lex(text: &str) -> Result<Lexer, ParseError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                toks.push((i, Tok::Plus));
                i += 1;
            }
            '-' => {
                toks.push((i, Tok::Minus));
                i += 1;
            }
            '*' => {
                toks.push((i, Tok::Star));
                i += 1;
            }
            '^' => {
                toks.push((i, Tok::Caret));
                i += 1;
            }
            '/' => {
                toks.push((i, Tok::Slash));
                i += 1;
            }
            '(' => {
                toks.push((i, Tok::LParen));
                i += 1;
            }
            ')' => {
                toks.push((i, Tok::RParen));
                i += 1;
            }
            '0'..='9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let n: BigInt = text[start..i].parse().map_err(|_| ParseError {
                    position: start,
                    message: "bad integer literal".into(),
                })?;
                toks.push((start, Tok::Num(n)));
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                toks.push((start, Tok::Ident(text[start..i].to_string())));
            }
            _ => {
                return Err(ParseError {
                    position: i,
                    message: format!("unexpected character {c:?}"),
                })
            }
        }
    }
    Ok(Lexer {
        toks,
        pos: 0,
        end: text.len(),
    })
}

impl Lexer {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(ParseError {
                position: self.here(),
                message: format!("expected {what}"),
            })
        }
    }
}

pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let mut lx = lex(text)?;
    let e = parse_expr(&mut lx)?;
    if lx.peek().is_some() {
        return Err(ParseError {
            position: lx.here(),
            message: "trailing input".into(),
        });
    }
    Ok(e)
}

fn parse_expr(lx: &mut Lexer) -> Result<Expr, ParseError> {
    let mut acc = if lx.peek() == Some(&Tok::Minus) {
        lx.bump();
        Expr::Neg(Box::new(parse_term(lx)?))
    } else {
        parse_term(lx)?
    };
    loop {
        match lx.peek() {
            Some(Tok::Plus) => {
                lx.bump();
                let rhs = parse_term(lx)?;
                acc = Expr::Add(Box::new(acc), Box::new(rhs));
            }
            Some(Tok::Minus) => {
                lx.bump();
                let rhs = parse_term(lx)?;
                acc = Expr::Sub(Box::new(acc), Box::new(rhs));
            }
            _ => return Ok(acc),
        }
    }
}

fn parse_term(lx: &mut Lexer) -> Result<Expr, ParseError> {
    let mut acc = parse_factor(lx)?;
    while lx.peek() == Some(&Tok::Star) {
        lx.bump();
        let rhs = parse_factor(lx)?;
        acc = Expr::Mul(Box::new(acc), Box::new(rhs));
    }
    Ok(acc)
}

fn parse_factor(lx: &mut Lexer) -> Result<Expr, ParseError> {
    let atom = parse_atom(lx)?;
    if lx.peek() == Some(&Tok::Caret) {
        lx.bump();
        let neg = if lx.peek() == Some(&Tok::Minus) {
            lx.bump();
            true
        } else {
            false
        };
        match lx.bump() {
            Some(Tok::Num(n)) => {
                let e: i64 = n.try_into().map_err(|_| ParseError {
                    position: lx.here(),
                    message: "exponent out of range".into(),
                })?;
                Ok(Expr::Pow(Box::new(atom), if neg { -e } else { e }))
            }
            _ => Err(ParseError {
                position: lx.here(),
                message: "expected integer exponent".into(),
            }),
        }
    } else {
        Ok(atom)
    }
}

fn parse_atom(lx: &mut Lexer) -> Result<Expr, ParseError> {
    let position = lx.here();
    match lx.bump() {
        Some(Tok::Num(n)) => {
            // Rational literal p or p/q (binds tighter than '*').
            if lx.peek() == Some(&Tok::Slash) {
                lx.bump();
                match lx.bump() {
                    Some(Tok::Num(d)) => Ok(Expr::Num(Rat::new(n, d))),
                    _ => Err(ParseError {
                        position: lx.here(),
                        message: "expected denominator".into(),
                    }),
                }
            } else {
                Ok(Expr::Num(Rat::from_integer(n)))
            }
        }
        Some(Tok::Ident(name)) => match name.as_str() {
            "x1" => Ok(Expr::X1),
            "x2" => Ok(Expr::X2),
            "d1" => Ok(Expr::D1),
            "d2" => Ok(Expr::D2),
            "alpha" => Ok(Expr::Alpha),
            "inv" | "exp" => {
                lx.expect(Tok::LParen, "'(' after function name")?;
                let inner = parse_expr(lx)?;
                lx.expect(Tok::RParen, "closing ')'")?;
                Ok(if name == "inv" {
                    Expr::Inv(Box::new(inner))
                } else {
                    Expr::Exp(Box::new(inner))
                })
            }
            _ => Err(ParseError {
                position,
                message: format!("unknown identifier {name:?}"),
            }),
        },
        Some(Tok::LParen) => {
            let inner = parse_expr(lx)?;
            lx.expect(Tok::RParen, "closing ')'")?;
            Ok(inner)
        }
        Some(Tok::Minus) => Ok(Expr::Neg(Box::new(parse_atom(lx)?))),
        other => Err(ParseError {
            position,
            message: format!("expected an atom, found {other:?}"),
        }),
    }
}

/// Elaboration target session.
#[derive(Clone)]
pub struct Session {
    pub field: KField,
    pub trunc: Trunc,
}

fn alpha_elem(field: &KField) -> Result<sato2d_core::KElem, CoreError> {
    field.alpha()
}

/// Elaborate to a truncated operator; juxtaposed factors compose in written
/// order, so noncommutativity is honored.
pub fn to_eop(expr: &Expr, sess: &Session) -> Result<EOp, CoreError> {
    let k = &sess.field;
    let t = sess.trunc;
    Ok(match expr {
        Expr::Num(r) => EOp::monomial(k, t, k.from_rat(r.clone()), 0, 0),
        Expr::Alpha => EOp::monomial(k, t, alpha_elem(k)?, 0, 0),
        Expr::X1 => EOp::from_xseries(t, XSeries::monomial(k, k.one(), 1, 0, t.nx)),
        Expr::X2 => EOp::from_xseries(t, XSeries::monomial(k, k.one(), 0, 1, t.nx)),
        Expr::D1 => EOp::d1(k, t),
        Expr::D2 => EOp::d2(k, t),
        Expr::Neg(e) => to_eop(e, sess)?.neg(),
        Expr::Add(a, b) => to_eop(a, sess)?.add(&to_eop(b, sess)?),
        Expr::Sub(a, b) => to_eop(a, sess)?.sub(&to_eop(b, sess)?),
        Expr::Mul(a, b) => to_eop(a, sess)?.compose(&to_eop(b, sess)?),
        Expr::Pow(base, e) => {
            if *e < 0 {
                // Negative powers only on the bare d2 atom.
                if **base == Expr::D2 {
                    EOp::d2_pow(k, t, *e)
                } else {
                    return Err(CoreError::Domain(
                        "negative exponents are only supported on d2".into(),
                    ));
                }
            } else {
                let b = to_eop(base, sess)?;
                let mut acc = EOp::one(k, t);
                for _ in 0..*e {
                    acc = acc.compose(&b);
                }
                acc
            }
        }
        Expr::Inv(e) => to_eop(e, sess)?.invert_unit()?,
        Expr::Exp(e) => to_eop(e, sess)?.exp()?,
    })
}

/// Elaborate to a polynomial in `(d1, d2)`; rejects `x`-variables,
/// negative exponents and analytic constructors.
pub fn to_bipoly(expr: &Expr, field: &KField) -> Result<BiPoly, CoreError> {
    Ok(match expr {
        Expr::Num(r) => BiPoly::monomial(field, field.from_rat(r.clone()), 0, 0),
        Expr::Alpha => BiPoly::monomial(field, alpha_elem(field)?, 0, 0),
        Expr::D1 => BiPoly::monomial(field, field.one(), 1, 0),
        Expr::D2 => BiPoly::monomial(field, field.one(), 0, 1),
        Expr::X1 | Expr::X2 => {
            return Err(CoreError::Domain(
                "series variables are not allowed in a polynomial symbol".into(),
            ))
        }
        Expr::Neg(e) => {
            let p = to_bipoly(e, field)?;
            BiPoly::zero(field).sub(&p)
        }
        Expr::Add(a, b) => to_bipoly(a, field)?.add(&to_bipoly(b, field)?),
        Expr::Sub(a, b) => to_bipoly(a, field)?.sub(&to_bipoly(b, field)?),
        Expr::Mul(a, b) => to_bipoly(a, field)?.mul(&to_bipoly(b, field)?),
        Expr::Pow(base, e) => {
            if *e < 0 {
                return Err(CoreError::Domain(
                    "negative exponents are not allowed in a polynomial symbol".into(),
                ));
            }
            let b = to_bipoly(base, field)?;
            let mut acc = BiPoly::monomial(field, field.one(), 0, 0);
            for _ in 0..*e {
                acc = acc.mul(&b);
            }
            acc
        }
        Expr::Inv(_) | Expr::Exp(_) => {
            return Err(CoreError::Domain(
                "analytic constructors are not allowed in a polynomial symbol".into(),
            ))
        }
    })
}

/// Elaborate to a constant-coefficient symbol; `d1^-k` is accepted when
/// `allow_neg_d1` is set (used to round-trip expansion output).
pub fn to_zseries(expr: &Expr, field: &KField, allow_neg_d1: bool) -> Result<ZSeries, CoreError> {
    Ok(match expr {
        Expr::Num(r) => ZSeries::monomial(field, field.from_rat(r.clone()), 0, 0),
        Expr::Alpha => ZSeries::monomial(field, alpha_elem(field)?, 0, 0),
        Expr::D1 => ZSeries::monomial(field, field.one(), 1, 0),
        Expr::D2 => ZSeries::monomial(field, field.one(), 0, 1),
        Expr::X1 | Expr::X2 => {
            return Err(CoreError::Domain(
                "series variables are not allowed in a symbol".into(),
            ))
        }
        Expr::Neg(e) => to_zseries(e, field, allow_neg_d1)?.neg(),
        Expr::Add(a, b) => {
            to_zseries(a, field, allow_neg_d1)?.add(&to_zseries(b, field, allow_neg_d1)?)
        }
        Expr::Sub(a, b) => {
            to_zseries(a, field, allow_neg_d1)?.sub(&to_zseries(b, field, allow_neg_d1)?)
        }
        Expr::Mul(a, b) => {
            to_zseries(a, field, allow_neg_d1)?.mul(&to_zseries(b, field, allow_neg_d1)?)
        }
        Expr::Pow(base, e) => match (&**base, *e) {
            (Expr::D2, e) => ZSeries::monomial(field, field.one(), 0, e),
            (Expr::D1, e) if e >= 0 || allow_neg_d1 => {
                ZSeries::monomial(field, field.one(), e, 0)
            }
            (_, e) if e >= 0 => {
                let b = to_zseries(base, field, allow_neg_d1)?;
                b.pow(e as u32)
            }
            _ => {
                return Err(CoreError::Domain(
                    "negative exponents are only supported on d1/d2 atoms".into(),
                ))
            }
        },
        Expr::Inv(_) | Expr::Exp(_) => {
            return Err(CoreError::Domain(
                "analytic constructors are not allowed in a symbol".into(),
            ))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use sato2d_core::field::rat;

    fn sess() -> Session {
        Session {
            field: KField::rational(),
            trunc: Trunc::new(8, 6, -8, 4),
        }
    }

    #[test]
    fn parse_basic_operator() {
        // d2^2 + 3*x1*d1 elaborates with the expected slots.
        let s = sess();
        let e = parse("d2^2 + 3*x1*d1").unwrap();
        let op = to_eop(&e, &s).unwrap();
        assert_eq!(op.coeff(0, 2).constant_term(), s.field.one());
        assert_eq!(op.coeff(1, 0).coeff(1, 0), s.field.from_int(3));
    }

    #[test]
    fn written_order_composition() {
        // d1*x1 - x1*d1 = 1.
        let s = sess();
        let op = to_eop(&parse("d1*x1 - x1*d1").unwrap(), &s).unwrap();
        assert_eq!(op.to_canonical_string(), "1");
    }

    #[test]
    fn example_operator_parses() {
        let s = sess();
        let op = to_eop(&parse("d2^2 + 2*inv((1-x2))^2").unwrap(), &s).unwrap();
        assert_eq!(op.coeff(0, 2).constant_term(), s.field.one());
        // 2*(1-x2)^-2 = 2 + 4 x2 + 6 x2^2 + ...
        let c = op.coeff(0, 0);
        assert_eq!(c.coeff(0, 1), s.field.from_int(4));
        assert_eq!(c.coeff(0, 2), s.field.from_int(6));
    }

    #[test]
    fn rational_and_alpha_literals() {
        let k = KField::quadratic(rat(-3, 1)).unwrap();
        let s = Session {
            field: k.clone(),
            trunc: Trunc::new(6, 4, -4, 2),
        };
        let op = to_eop(&parse("1/2 + 3/4*alpha").unwrap(), &s).unwrap();
        assert_eq!(
            op.coeff(0, 0).constant_term(),
            k.elem(rat(1, 2), rat(3, 4)).unwrap()
        );
        // alpha rejected over plain Q.
        assert!(to_eop(&parse("alpha").unwrap(), &sess()).is_err());
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = parse("d2^2 + $").unwrap_err();
        assert_eq!(err.position, 7);
        assert!(parse("inv(1").is_err());
        assert!(parse("d2 + ").is_err());
        assert!(parse("foo").is_err());
    }

    #[test]
    fn negative_powers() {
        let s = sess();
        let op = to_eop(&parse("d2^-3").unwrap(), &s).unwrap();
        assert_eq!(op.coeff(0, -3).constant_term(), s.field.one());
        assert!(to_eop(&parse("x1^-1").unwrap(), &s).is_err());
        let z = to_zseries(&parse("d1^-1*d2^-1").unwrap(), &s.field, true).unwrap();
        assert_eq!(z.coeff(-1, -1), s.field.one());
        assert!(to_zseries(&parse("d1^-1").unwrap(), &s.field, false).is_err());
    }
}
