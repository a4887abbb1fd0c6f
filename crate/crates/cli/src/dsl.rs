//! Line-oriented group specifications and element expressions.
//!
//! ```text
//! # Z(4) + Z(2) in every block
//! block 0.. : e=4, H=[2]
//! ```
//!
//! Ranges are `j`, `a..b` (half-open) or `a..` (the tail, last line only).
//! Orders are an integer, `Z`, `Prufer(p)` or `geom(p,c)`, which gives block
//! `j` the order `p^(j+c)`.

use minap::constructions::ResidueSeqRule;
use minap::decompose::SubgroupSpec;
use minap::{Block, BlockGroup, Coeff, Coord, CyclicOrder, Element, TailRule};
use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("parse error at line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

struct Cursor {
    chars: Vec<char>,
    pos: usize,
    line: usize,
}

impl Cursor {
    fn new(src: &str, line: usize) -> Self {
        Cursor {
            chars: src.chars().collect(),
            pos: 0,
            line,
        }
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        self.err_at(self.pos, message)
    }

    fn err_at(&self, pos: usize, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            column: pos + 1,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.chars.get(self.pos).is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, s: &str) -> bool {
        self.skip_ws();
        let n = s.chars().count();
        let ahead: String = self.chars.iter().skip(self.pos).take(n).collect();
        if ahead.eq_ignore_ascii_case(s) {
            self.pos += n;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat(s) {
            Ok(())
        } else {
            Err(self.err(format!("expected '{s}'")))
        }
    }

    fn done(&mut self) -> bool {
        self.peek().is_none()
    }

    fn expect_end(&mut self) -> Result<(), ParseError> {
        if self.done() {
            Ok(())
        } else {
            Err(self.err("unexpected trailing input"))
        }
    }

    fn uint(&mut self) -> Result<u64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.chars.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected an integer"));
        }
        let s: String = self.chars[start..self.pos].iter().collect();
        s.parse()
            .map_err(|_| self.err_at(start, "integer out of range"))
    }

    fn int(&mut self) -> Result<i64, ParseError> {
        let neg = self.eat("-");
        let start = self.pos;
        let v =
            i64::try_from(self.uint()?).map_err(|_| self.err_at(start, "integer out of range"))?;
        Ok(if neg { -v } else { v })
    }

    fn usize(&mut self) -> Result<usize, ParseError> {
        let start = self.pos;
        usize::try_from(self.uint()?).map_err(|_| self.err_at(start, "index out of range"))
    }
}

enum Range {
    One(usize),
    Span(usize, usize),
    Tail(usize),
}

enum OrderSpec {
    Fixed(CyclicOrder),
    Geom { p: u64, c: i64 },
}

fn parse_order(cur: &mut Cursor) -> Result<OrderSpec, ParseError> {
    let at = {
        cur.skip_ws();
        cur.pos
    };
    if cur.eat("Prufer(") {
        let p = cur.uint()?;
        cur.expect(")")?;
        return Ok(OrderSpec::Fixed(CyclicOrder::Prufer(p)));
    }
    if cur.eat("geom(") {
        let p = cur.uint()?;
        cur.expect(",")?;
        let c = cur.int()?;
        cur.expect(")")?;
        return Ok(OrderSpec::Geom { p, c });
    }
    if cur.eat("Z") {
        return Ok(OrderSpec::Fixed(CyclicOrder::Infinite));
    }
    let n = cur.uint()?;
    if n < 2 {
        return Err(cur.err_at(at, format!("order must be at least 2, got {n}")));
    }
    Ok(OrderSpec::Fixed(CyclicOrder::Finite(n)))
}

fn geom_order(p: u64, exp: i64) -> Option<u64> {
    u32::try_from(exp)
        .ok()
        .filter(|&e| e >= 1)
        .and_then(|e| p.checked_pow(e))
}

/// Parses a group specification.
pub fn parse_group(text: &str) -> Result<BlockGroup, ParseError> {
    let mut head: Vec<Block> = Vec::new();
    let mut tail: Option<(TailRule, usize)> = None;
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let body = raw.split('#').next().unwrap_or("");
        if body.trim().is_empty() {
            continue;
        }
        last_line = line_no;
        let mut cur = Cursor::new(body, line_no);
        if tail.is_some() {
            cur.skip_ws();
            return Err(cur.err("no blocks may follow the tail rule"));
        }
        cur.expect("block")?;
        cur.skip_ws();
        let range_at = cur.pos;
        let start = cur.usize()?;
        let range = if cur.eat("..") {
            if cur.peek().is_some_and(|c| c.is_ascii_digit()) {
                let end = cur.usize()?;
                if end <= start {
                    return Err(cur.err_at(range_at, format!("empty range {start}..{end}")));
                }
                Range::Span(start, end)
            } else {
                Range::Tail(start)
            }
        } else {
            Range::One(start)
        };
        if start != head.len() {
            return Err(cur.err_at(
                range_at,
                format!(
                    "blocks must be contiguous from 0: expected {}, got {start}",
                    head.len()
                ),
            ));
        }
        cur.expect(":")?;
        cur.expect("e=")?;
        cur.skip_ws();
        let order_at = cur.pos;
        let order = parse_order(&mut cur)?;
        if let OrderSpec::Fixed(o) = order {
            o.validate()
                .map_err(|e| cur.err_at(order_at, e.to_string()))?;
        }
        let mut h_orders = Vec::new();
        if cur.eat(",") {
            cur.expect("H=")?;
            cur.expect("[")?;
            if !cur.eat("]") {
                loop {
                    cur.skip_ws();
                    let at = cur.pos;
                    let h = cur.uint()?;
                    if h < 2 {
                        return Err(cur.err_at(at, format!("h order must be at least 2, got {h}")));
                    }
                    h_orders.push(h);
                    if cur.eat("]") {
                        break;
                    }
                    cur.expect(",")?;
                }
            }
        }
        cur.expect_end()?;
        let fixed = |j: usize| -> Result<CyclicOrder, ParseError> {
            match order {
                OrderSpec::Fixed(o) => Ok(o),
                OrderSpec::Geom { p, c } => geom_order(p, j as i64 + c)
                    .map(CyclicOrder::Finite)
                    .ok_or_else(|| {
                        cur.err_at(order_at, format!("order {p}^({j}{c:+}) is not valid"))
                    }),
            }
        };
        match range {
            Range::One(j) => head.push(Block::new(fixed(j)?, h_orders)),
            Range::Span(a, b) => {
                for j in a..b {
                    head.push(Block::new(fixed(j)?, h_orders.clone()));
                }
            }
            Range::Tail(a) => {
                let rule = match order {
                    OrderSpec::Fixed(o) => TailRule::Const(Block::new(o, h_orders)),
                    OrderSpec::Geom { p, c } => {
                        let start_exp = u32::try_from(a as i64 + c)
                            .ok()
                            .filter(|&e| e >= 1)
                            .ok_or_else(|| {
                                cur.err_at(order_at, "geometric exponent must start at 1 or more")
                            })?;
                        TailRule::Geometric {
                            p,
                            start_exp,
                            h_orders,
                        }
                    }
                };
                tail = Some((rule, line_no));
            }
        }
    }
    if last_line == 0 {
        return Err(ParseError {
            line: 1,
            column: 1,
            message: "empty group specification".into(),
        });
    }
    let (rule, line) = tail.unwrap_or((TailRule::None, last_line));
    BlockGroup::new(head, rule, None).map_err(|e| ParseError {
        line,
        column: 1,
        message: e.to_string(),
    })
}

fn order_text(o: CyclicOrder) -> String {
    match o {
        CyclicOrder::Finite(n) => n.to_string(),
        CyclicOrder::Infinite => "Z".into(),
        CyclicOrder::Prufer(p) => format!("Prufer({p})"),
    }
}

fn block_line(range: &str, order: &str, h: &[u64]) -> String {
    let hs: Vec<String> = h.iter().map(|x| x.to_string()).collect();
    format!("block {range} : e={order}, H=[{}]\n", hs.join(","))
}

/// Prints a group in the specification language; `parse_group` inverts it.
pub fn print_group(g: &BlockGroup) -> String {
    let mut out = String::new();
    let head = g.head();
    let mut i = 0;
    while i < head.len() {
        let mut j = i + 1;
        while j < head.len() && head[j] == head[i] {
            j += 1;
        }
        let range = if j == i + 1 {
            i.to_string()
        } else {
            format!("{i}..{j}")
        };
        out.push_str(&block_line(
            &range,
            &order_text(head[i].e_order),
            &head[i].h_orders,
        ));
        i = j;
    }
    let n = head.len();
    match g.tail() {
        TailRule::None => {}
        TailRule::Const(b) => out.push_str(&block_line(
            &format!("{n}.."),
            &order_text(b.e_order),
            &b.h_orders,
        )),
        TailRule::Geometric {
            p,
            start_exp,
            h_orders,
        } => {
            let c = *start_exp as i64 - n as i64;
            out.push_str(&block_line(
                &format!("{n}.."),
                &format!("geom({p},{c})"),
                h_orders,
            ));
        }
    }
    out
}

fn parse_coord(cur: &mut Cursor) -> Result<Coord, ParseError> {
    if cur.eat("e[") {
        let j = cur.usize()?;
        cur.expect("]")?;
        Ok(Coord::e(j))
    } else if cur.eat("h[") {
        let j = cur.usize()?;
        cur.expect(",")?;
        let i = cur.usize()?;
        if i == 0 {
            return Err(cur.err("h indices start at 1"));
        }
        cur.expect("]")?;
        Ok(Coord::h(j, i))
    } else {
        Err(cur.err("expected e[j] or h[j,i]"))
    }
}

fn parse_term(g: &BlockGroup, cur: &mut Cursor, sign: i64) -> Result<Element, ParseError> {
    cur.skip_ws();
    let at = cur.pos;
    let (num, den) = if cur.peek().is_some_and(|c| c.is_ascii_digit()) {
        let num = cur.int()?;
        let den = if cur.eat("/") { cur.int()? } else { 1 };
        if den == 0 {
            return Err(cur.err_at(at, "zero denominator"));
        }
        if !cur.eat("*") {
            if num == 0 {
                return Ok(Element::zero());
            }
            return Err(cur.err("expected '*' after a coefficient"));
        }
        (num, den)
    } else {
        (1, 1)
    };
    let c = parse_coord(cur)?;
    let num = num
        .checked_mul(sign)
        .ok_or_else(|| cur.err_at(at, "coefficient out of range"))?;
    let x = if den == 1 {
        g.element([(c, Coeff::Int(num))])
    } else if c.slot == 0 {
        g.prufer(c.block, num, den)
    } else {
        return Err(cur.err_at(at, "fractional coefficients need a Prufer coordinate"));
    };
    x.map_err(|e| cur.err_at(at, e.to_string()))
}

fn parse_expr(g: &BlockGroup, cur: &mut Cursor) -> Result<Element, ParseError> {
    let mut acc = Element::zero();
    let mut sign = if cur.eat("-") { -1 } else { 1 };
    loop {
        let t = parse_term(g, cur, sign)?;
        acc = g.add(&acc, &t);
        if cur.eat("+") {
            sign = 1;
        } else if cur.eat("-") {
            sign = -1;
        } else {
            break;
        }
    }
    cur.expect_end()?;
    Ok(acc)
}

/// Parses `3*e[5] + h[2,1] - 1/4*e[0]`; `0` is the zero element.
pub fn parse_element(g: &BlockGroup, text: &str) -> Result<Element, ParseError> {
    parse_expr(g, &mut Cursor::new(text, 1))
}

/// One element per line; the line `tail` adds every bounded tail coordinate.
pub fn parse_subgroup(g: &BlockGroup, text: &str) -> Result<SubgroupSpec, ParseError> {
    let mut spec = SubgroupSpec::default();
    for (i, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("");
        if body.trim().is_empty() {
            continue;
        }
        if body.trim().eq_ignore_ascii_case("tail") {
            spec.tail = true;
            continue;
        }
        let x = parse_expr(g, &mut Cursor::new(body, i + 1))?;
        if !x.is_zero() {
            spec.gens.push(x);
        }
    }
    Ok(spec)
}

/// `geom(q)`, `factorial`, `affine(a,b,u0)` or `list(v0,v1,...;r)` with the
/// values from index `r` on repeating.
pub fn parse_rule(text: &str) -> Result<ResidueSeqRule, ParseError> {
    let mut cur = Cursor::new(text, 1);
    let rule = if cur.eat("geom(") {
        let q = cur.int()?;
        cur.expect(")")?;
        ResidueSeqRule::Geom(q)
    } else if cur.eat("factorial") {
        ResidueSeqRule::Factorial
    } else if cur.eat("affine(") {
        let a = cur.int()?;
        cur.expect(",")?;
        let b = cur.int()?;
        cur.expect(",")?;
        let u0 = cur.int()?;
        cur.expect(")")?;
        ResidueSeqRule::Affine { a, b, u0 }
    } else if cur.eat("list(") {
        let mut values = Vec::new();
        let mut repeat_from = 0;
        if !cur.eat(")") {
            loop {
                values.push(cur.int()?);
                if cur.eat(";") {
                    repeat_from = cur.usize()?;
                    cur.expect(")")?;
                    break;
                }
                if cur.eat(")") {
                    break;
                }
                cur.expect(",")?;
            }
        }
        ResidueSeqRule::List {
            values,
            repeat_from,
        }
    } else {
        return Err(cur.err("expected geom(q), factorial, affine(a,b,u0) or list(...)"));
    };
    cur.expect_end()?;
    Ok(rule)
}

/// `a/b` or an integer.
pub fn parse_rational(text: &str) -> Result<(i64, i64), ParseError> {
    let mut cur = Cursor::new(text, 1);
    let a = cur.int()?;
    let b = if cur.eat("/") { cur.int()? } else { 1 };
    cur.expect_end()?;
    if b == 0 {
        return Err(cur.err("zero denominator"));
    }
    Ok((a, b))
}
