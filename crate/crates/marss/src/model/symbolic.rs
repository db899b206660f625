//! Linear expressions over named free values, e.g. `2+a+2*c` or `-0.5*b`.

use super::ModelError;

/// `constant + Σ coeff · name`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearExpr {
    pub constant: f64,
    pub terms: Vec<(String, f64)>,
}

impl LinearExpr {
    pub fn constant(c: f64) -> Self {
        Self { constant: c, terms: Vec::new() }
    }

    pub fn free(name: impl Into<String>) -> Self {
        Self { constant: 0.0, terms: vec![(name.into(), 1.0)] }
    }

    /// Parses a cell such as `3*c+1`, `a - 2b`, `1e-3`, `x.1`.
    pub fn parse(src: &str) -> Result<Self, ModelError> {
        let err = |msg: &str| ModelError::Parse(format!("in expression `{src}`: {msg}"));
        let raw: Vec<char> = src.trim().chars().collect();
        for (i, c) in raw.iter().enumerate() {
            if c.is_whitespace() {
                let before = raw[..i].iter().rev().find(|c| !c.is_whitespace());
                let after = raw[i..].iter().find(|c| !c.is_whitespace());
                if let (Some(b), Some(a)) = (before, after) {
                    if is_ident_char(*b) && is_ident_char(*a) {
                        return Err(err("missing operator between terms"));
                    }
                }
            }
        }
        let chars: Vec<char> = raw.into_iter().filter(|c| !c.is_whitespace()).collect();
        if chars.is_empty() {
            return Err(err("empty expression"));
        }
        let mut expr = LinearExpr::default();
        let mut pos = 0;
        while pos < chars.len() {
            let mut sign = 1.0;
            let mut saw_sign = false;
            while pos < chars.len() && (chars[pos] == '+' || chars[pos] == '-') {
                if chars[pos] == '-' {
                    sign = -sign;
                }
                saw_sign = true;
                pos += 1;
            }
            if pos > 0 && !saw_sign {
                return Err(err("expected `+` or `-` between terms"));
            }
            let mut coeff = None;
            if pos < chars.len() && (chars[pos].is_ascii_digit() || chars[pos] == '.') {
                let (value, next) = read_number(&chars, pos).ok_or_else(|| err("bad number"))?;
                coeff = Some(value);
                pos = next;
                if pos < chars.len() && chars[pos] == '*' {
                    pos += 1;
                }
            }
            let name = if pos < chars.len() && is_ident_start(chars[pos]) {
                let start = pos;
                while pos < chars.len() && is_ident_char(chars[pos]) {
                    pos += 1;
                }
                let name: String = chars[start..pos].iter().collect();
                if pos < chars.len() && chars[pos] == '*' {
                    pos += 1;
                    let (value, next) = read_number(&chars, pos)
                        .ok_or_else(|| err("expected a number after `*`"))?;
                    coeff = Some(coeff.unwrap_or(1.0) * value);
                    pos = next;
                }
                Some(name)
            } else {
                None
            };
            match (coeff, name) {
                (Some(c), None) => expr.constant += sign * c,
                (c, Some(name)) => expr.add_term(name, sign * c.unwrap_or(1.0)),
                (None, None) => return Err(err("expected a number or identifier")),
            }
            if pos < chars.len() && chars[pos] != '+' && chars[pos] != '-' {
                return Err(err(&format!("unexpected character `{}`", chars[pos])));
            }
        }
        Ok(expr)
    }

    fn add_term(&mut self, name: String, coeff: f64) {
        if let Some(t) = self.terms.iter_mut().find(|(n, _)| *n == name) {
            t.1 += coeff;
        } else {
            self.terms.push((name, coeff));
        }
    }

    /// Evaluates with `lookup` supplying free values.
    pub fn eval(&self, lookup: impl Fn(&str) -> f64) -> f64 {
        self.constant + self.terms.iter().map(|(n, c)| c * lookup(n)).sum::<f64>()
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '.' || c == '[' || c == ']' || c == ','
}

fn read_number(chars: &[char], start: usize) -> Option<(f64, usize)> {
    let mut pos = start;
    while pos < chars.len() && (chars[pos].is_ascii_digit() || chars[pos] == '.') {
        pos += 1;
    }
    if pos < chars.len() && (chars[pos] == 'e' || chars[pos] == 'E') {
        let mut p = pos + 1;
        if p < chars.len() && (chars[p] == '+' || chars[p] == '-') {
            p += 1;
        }
        if p < chars.len() && chars[p].is_ascii_digit() {
            while p < chars.len() && chars[p].is_ascii_digit() {
                p += 1;
            }
            pos = p;
        }
    }
    let s: String = chars[start..pos].iter().collect();
    s.parse().ok().map(|v| (v, pos))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_mixed_terms() {
        let e = LinearExpr::parse("a+2*c+2").unwrap();
        assert_eq!(e.constant, 2.0);
        assert_eq!(e.terms, vec![("a".into(), 1.0), ("c".into(), 2.0)]);

        let e = LinearExpr::parse("3c + 1").unwrap();
        assert_eq!(e.constant, 1.0);
        assert_eq!(e.terms, vec![("c".into(), 3.0)]);

        let e = LinearExpr::parse("-1.2").unwrap();
        assert_eq!(e.constant, -1.2);
        assert!(e.terms.is_empty());

        let e = LinearExpr::parse("b*0.5 - a - a").unwrap();
        assert_eq!(e.terms, vec![("b".into(), 0.5), ("a".into(), -2.0)]);

        let e = LinearExpr::parse("1e-3*x_1").unwrap();
        assert_eq!(e.terms, vec![("x_1".into(), 1e-3)]);
    }

    #[test]
    fn rejects_garbage() {
        assert!(LinearExpr::parse("").is_err());
        assert!(LinearExpr::parse("(a)").is_err());
        assert!(LinearExpr::parse("2 3").is_err());
        assert!(LinearExpr::parse("2/a").is_err());
        assert!(LinearExpr::parse("a*").is_err());
    }

    #[test]
    fn eval_uses_lookup() {
        let e = LinearExpr::parse("2+a+2*c").unwrap();
        let v = e.eval(|n| if n == "a" { 1.0 } else { 3.0 });
        assert_eq!(v, 9.0);
    }
}
