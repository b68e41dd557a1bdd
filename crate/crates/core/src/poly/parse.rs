//! Recursive-descent parser for the polynomial input grammar:
//!
//! ```text
//! expression := ('+'|'-')? term (('+'|'-') term)*
//! term       := factor ('*' factor)*
//! factor     := base ('^' uint)?
//! base       := number | identifier | '(' expression ')'
//! number     := integer | decimal | integer '/' integer
//! ```
//!
//! Whitespace is ignored and implicit multiplication is rejected. Parenthesized
//! powers are expanded eagerly.

use num_bigint::BigInt;
use num_traits::{Pow, Zero};
use thiserror::Error;

use super::{Polynomial, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at position {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown identifier '{name}' at position {pos}")]
    UnknownIdentifier { pos: usize, name: String },
    #[error("exponent at position {pos} is not a non-negative integer")]
    BadExponent { pos: usize },
    #[error("invalid variable list: {0}")]
    Variables(String),
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Int(String),
    Decimal(String, String),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>, ParseError> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let single = match c {
            '+' => Some(Token::Plus),
            '-' => Some(Token::Minus),
            '*' => Some(Token::Star),
            '/' => Some(Token::Slash),
            '^' => Some(Token::Caret),
            '(' => Some(Token::LParen),
            ')' => Some(Token::RParen),
            _ => None,
        };
        if let Some(t) = single {
            out.push((pos, t));
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let mut int_part = String::new();
            while i < chars.len() && chars[i].1.is_ascii_digit() {
                int_part.push(chars[i].1);
                i += 1;
            }
            if i < chars.len() && chars[i].1 == '.' {
                i += 1;
                let mut frac = String::new();
                while i < chars.len() && chars[i].1.is_ascii_digit() {
                    frac.push(chars[i].1);
                    i += 1;
                }
                if int_part.is_empty() && frac.is_empty() {
                    return Err(ParseError::Syntax { pos, message: "lone '.'".into() });
                }
                out.push((pos, Token::Decimal(int_part, frac)));
            } else {
                out.push((pos, Token::Int(int_part)));
            }
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let mut name = String::new();
            while i < chars.len() && (chars[i].1.is_alphanumeric() || chars[i].1 == '_') {
                name.push(chars[i].1);
                i += 1;
            }
            out.push((pos, Token::Ident(name)));
            continue;
        }
        return Err(ParseError::Syntax { pos, message: format!("unexpected character '{c}'") });
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<(usize, Token)>,
    idx: usize,
    vars: &'a [&'a str],
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.idx).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.tokens.get(self.idx).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.idx).map(|(_, t)| t.clone());
        self.idx += 1;
        t
    }

    fn expression(&mut self) -> Result<Polynomial, ParseError> {
        let n = self.vars.len();
        let mut negate_first = false;
        match self.peek() {
            Some(Token::Minus) => {
                self.bump();
                negate_first = true;
            }
            Some(Token::Plus) => {
                self.bump();
            }
            _ => {}
        }
        let mut acc = self.term()?;
        if negate_first {
            acc = -&acc;
        }
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.bump();
                    let t = self.term()?;
                    acc = &acc + &t;
                }
                Some(Token::Minus) => {
                    self.bump();
                    let t = self.term()?;
                    acc = &acc - &t;
                }
                _ => break,
            }
        }
        debug_assert_eq!(acc.nvars(), n);
        Ok(acc)
    }

    fn term(&mut self) -> Result<Polynomial, ParseError> {
        let mut acc = self.factor()?;
        while let Some(Token::Star) = self.peek() {
            self.bump();
            let f = self.factor()?;
            acc = &acc * &f;
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Polynomial, ParseError> {
        let base = self.base()?;
        if let Some(Token::Caret) = self.peek() {
            self.bump();
            let pos = self.pos();
            match self.bump() {
                Some(Token::Int(digits)) => {
                    let e: u32 = digits.parse().map_err(|_| ParseError::BadExponent { pos })?;
                    Ok(base.pow(e))
                }
                _ => Err(ParseError::BadExponent { pos }),
            }
        } else {
            Ok(base)
        }
    }

    fn base(&mut self) -> Result<Polynomial, ParseError> {
        let n = self.vars.len();
        let pos = self.pos();
        match self.bump() {
            Some(Token::Int(num)) => {
                let numer: BigInt = num.parse().expect("digits");
                if let Some(Token::Slash) = self.peek() {
                    self.bump();
                    let dpos = self.pos();
                    match self.bump() {
                        Some(Token::Int(den)) => {
                            let denom: BigInt = den.parse().expect("digits");
                            if denom.is_zero() {
                                return Err(ParseError::Syntax { pos: dpos, message: "division by zero".into() });
                            }
                            Ok(Polynomial::constant(n, Rational::new(numer, denom)))
                        }
                        _ => Err(ParseError::Syntax { pos: dpos, message: "expected integer denominator".into() }),
                    }
                } else {
                    Ok(Polynomial::constant(n, Rational::from_integer(numer)))
                }
            }
            Some(Token::Decimal(int_part, frac)) => {
                let digits = format!("{int_part}{frac}");
                let numer: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().expect("digits") };
                let denom = BigInt::from(10u32).pow(frac.len() as u32);
                Ok(Polynomial::constant(n, Rational::new(numer, denom)))
            }
            Some(Token::Ident(name)) => match self.vars.iter().position(|v| *v == name) {
                Some(j) => Ok(Polynomial::variable(n, j)),
                None => Err(ParseError::UnknownIdentifier { pos, name }),
            },
            Some(Token::LParen) => {
                let inner = self.expression()?;
                let cpos = self.pos();
                match self.bump() {
                    Some(Token::RParen) => Ok(inner),
                    _ => Err(ParseError::Syntax { pos: cpos, message: "expected ')'".into() }),
                }
            }
            Some(t) => Err(ParseError::Syntax { pos, message: format!("unexpected token {t:?}") }),
            None => Err(ParseError::Syntax { pos, message: "unexpected end of input".into() }),
        }
    }
}

/// Parses `text` into a polynomial over the variables `var_names` (in order).
pub fn parse_polynomial(text: &str, var_names: &[&str]) -> Result<Polynomial, ParseError> {
    if var_names.is_empty() {
        return Err(ParseError::Variables("no variables given".into()));
    }
    for (i, v) in var_names.iter().enumerate() {
        if v.is_empty() || var_names[..i].contains(v) {
            return Err(ParseError::Variables(format!("duplicate or empty name '{v}'")));
        }
    }
    let tokens = tokenize(text)?;
    let mut p = Parser { tokens, idx: 0, vars: var_names, end: text.len() };
    let poly = p.expression()?;
    if p.idx < p.tokens.len() {
        return Err(ParseError::Syntax { pos: p.pos(), message: "unexpected trailing input".into() });
    }
    Ok(poly)
}

#[cfg(test)]
mod tests {
    use super::*;

    const XY: [&str; 2] = ["x", "y"];

    #[test]
    fn difference_of_squares() {
        let p = parse_polynomial("x^2 - y^2", &XY).unwrap();
        assert_eq!(p.num_terms(), 2);
        assert_eq!(p.degree(), 2);
    }

    #[test]
    fn zero_polynomial() {
        let p = parse_polynomial("0", &XY).unwrap();
        assert!(p.is_zero());
    }

    #[test]
    fn expands_cubed_binomial() {
        // y^2 - (x - x^2)^3 = y^2 - x^3 + 3x^4 - 3x^5 + x^6
        let p = parse_polynomial("y^2 - (-x^2+x)^3", &XY).unwrap();
        assert_eq!(p.num_terms(), 5);
        let r = |n: i64, d: i64| Rational::new(n.into(), d.into());
        assert_eq!(p.evaluate_exact(&[r(1, 2), r(0, 1)]), r(-1, 64));
        assert_eq!(p.coefficient(&[5, 0]), r(-3, 1));
    }

    #[test]
    fn numbers() {
        let p = parse_polynomial("0.001 + 3/4*x + .5", &XY).unwrap();
        let r = |n: i64, d: i64| Rational::new(n.into(), d.into());
        assert_eq!(p.coefficient(&[0, 0]), r(501, 1000));
        assert_eq!(p.coefficient(&[1, 0]), r(3, 4));
    }

    #[test]
    fn errors_carry_positions() {
        assert_eq!(
            parse_polynomial("x + z", &XY),
            Err(ParseError::UnknownIdentifier { pos: 4, name: "z".into() })
        );
        assert_eq!(parse_polynomial("x^-1", &XY), Err(ParseError::BadExponent { pos: 2 }));
        assert_eq!(parse_polynomial("x^1.5", &XY), Err(ParseError::BadExponent { pos: 2 }));
        assert!(matches!(parse_polynomial("2x", &XY), Err(ParseError::Syntax { pos: 1, .. })));
        assert!(matches!(parse_polynomial("(x+y", &XY), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse_polynomial("x # y", &XY), Err(ParseError::Syntax { pos: 2, .. })));
        assert!(matches!(parse_polynomial("x", &["x", "x"]), Err(ParseError::Variables(_))));
    }

    #[test]
    fn render_round_trip() {
        let p = parse_polynomial("6*x*y^7 + 85*x^4*y^3 - 60*x^2*y^5 - 1/3", &XY).unwrap();
        let again = parse_polynomial(&p.render(&XY), &XY).unwrap();
        assert_eq!(p, again);
    }
}
