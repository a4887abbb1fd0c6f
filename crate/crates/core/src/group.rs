//! Block presentations `G = ⊕_j (⟨e_j⟩ + H_j)` and exact element arithmetic.
//!
//! A group is a finite list of explicit blocks followed by an optional tail
//! rule. Every block contributes independent cyclic coordinates: slot 0 is the
//! distinguished generator `e_j`, slots `1..=a_j` are the basis `h^j_1..h^j_{a_j}`
//! of `H_j`.

use std::collections::BTreeMap;
use std::fmt;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{Signed, Zero};
use smallvec::SmallVec;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupError {
    #[error("invalid group spec: {0}")]
    InvalidSpec(String),
    #[error("block index {0} out of range")]
    OutOfRange(usize),
    #[error("order of block {0} does not fit in 63 bits")]
    OrderOverflow(usize),
    #[error("invalid element: {0}")]
    InvalidElement(String),
    #[error("group has infinite exponent")]
    Unbounded,
}

/// Order of a cyclic factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CyclicOrder {
    Finite(u64),
    Infinite,
    Prufer(u64),
}

impl CyclicOrder {
    pub fn validate(&self) -> Result<(), GroupError> {
        match *self {
            CyclicOrder::Finite(n) if n < 2 => Err(GroupError::InvalidSpec(format!(
                "finite order must be at least 2, got {n}"
            ))),
            CyclicOrder::Prufer(p) if !is_prime(p) => Err(GroupError::InvalidSpec(format!(
                "Prufer group needs a prime, got {p}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn finite(&self) -> Option<u64> {
        match *self {
            CyclicOrder::Finite(n) => Some(n),
            _ => None,
        }
    }
}

impl fmt::Display for CyclicOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CyclicOrder::Finite(n) => write!(f, "{n}"),
            CyclicOrder::Infinite => write!(f, "Z"),
            CyclicOrder::Prufer(p) => write!(f, "Prufer({p})"),
        }
    }
}

/// Order of an element: finite or infinite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Order {
    Finite(u64),
    Infinite,
}

impl Order {
    pub fn lcm(self, other: Order) -> Order {
        match (self, other) {
            (Order::Finite(a), Order::Finite(b)) => Order::Finite(lcm_u64(a, b)),
            _ => Order::Infinite,
        }
    }

    pub fn finite(self) -> Option<u64> {
        match self {
            Order::Finite(n) => Some(n),
            Order::Infinite => None,
        }
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Order::Finite(n) => write!(f, "{n}"),
            Order::Infinite => write!(f, "INFINITE"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Block {
    pub e_order: CyclicOrder,
    pub h_orders: Vec<u64>,
}

impl Block {
    pub fn new(e_order: CyclicOrder, h_orders: Vec<u64>) -> Self {
        Block { e_order, h_orders }
    }

    pub fn finite(e: u64, h_orders: &[u64]) -> Self {
        Block::new(CyclicOrder::Finite(e), h_orders.to_vec())
    }

    fn validate(&self) -> Result<(), GroupError> {
        self.e_order.validate()?;
        if let Some(&h) = self.h_orders.iter().find(|&&h| h < 2) {
            return Err(GroupError::InvalidSpec(format!(
                "h order must be at least 2, got {h}"
            )));
        }
        Ok(())
    }

    /// Order of coordinate `slot` (0 = e, i ≥ 1 = h_i).
    pub fn slot_order(&self, slot: usize) -> Option<CyclicOrder> {
        if slot == 0 {
            Some(self.e_order)
        } else {
            self.h_orders.get(slot - 1).map(|&h| CyclicOrder::Finite(h))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TailRule {
    None,
    Const(Block),
    /// Tail block `i` has e-order `p^(start_exp + i)`.
    Geometric {
        p: u64,
        start_exp: u32,
        h_orders: Vec<u64>,
    },
}

impl TailRule {
    pub fn h_orders(&self) -> &[u64] {
        match self {
            TailRule::None => &[],
            TailRule::Const(b) => &b.h_orders,
            TailRule::Geometric { h_orders, .. } => h_orders,
        }
    }
}

/// Index from which every `H_j` vanishes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Extent {
    Finite(usize),
    Infinite,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BlockGroup {
    head: Vec<Block>,
    tail: TailRule,
    m: Extent,
}

/// A coordinate of the presentation: block index and slot (0 = e_j, i = h^j_i).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coord {
    pub block: usize,
    pub slot: usize,
}

impl Coord {
    pub fn e(block: usize) -> Self {
        Coord { block, slot: 0 }
    }
    pub fn h(block: usize, i: usize) -> Self {
        Coord { block, slot: i }
    }
}

/// Coefficient of one coordinate: integers for ℤ and ℤ(n), rationals mod 1 for ℤ(p^∞).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Coeff {
    Int(i64),
    Frac(Ratio<i64>),
}

impl Coeff {
    pub fn is_zero(&self) -> bool {
        match self {
            Coeff::Int(v) => *v == 0,
            Coeff::Frac(r) => r.is_zero(),
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Coeff::Int(v) => Some(*v),
            Coeff::Frac(r) if r.is_integer() => Some(r.to_integer()),
            Coeff::Frac(_) => None,
        }
    }

    pub fn as_ratio(&self) -> Ratio<i64> {
        match self {
            Coeff::Int(v) => Ratio::from_integer(*v),
            Coeff::Frac(r) => *r,
        }
    }
}

impl fmt::Display for Coeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coeff::Int(v) => write!(f, "{v}"),
            Coeff::Frac(r) => write!(f, "{}/{}", r.numer(), r.denom()),
        }
    }
}

/// Finite-support element in canonical form. Entries are sorted by coordinate
/// and never zero, so structural equality is group equality.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Element {
    entries: SmallVec<[(Coord, Coeff); 4]>,
}

impl Element {
    pub fn zero() -> Self {
        Element::default()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(Coord, Coeff)] {
        &self.entries
    }

    pub fn coeff(&self, c: Coord) -> Option<&Coeff> {
        self.entries
            .binary_search_by(|(k, _)| k.cmp(&c))
            .ok()
            .map(|i| &self.entries[i].1)
    }

    /// Integer coefficient at `c` (0 when absent). Panics on Prufer coordinates.
    pub fn int_at(&self, c: Coord) -> i64 {
        self.coeff(c)
            .map(|v| v.as_int().expect("rational coefficient"))
            .unwrap_or(0)
    }

    /// Sorted, deduplicated block support.
    pub fn support_blocks(&self) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for (c, _) in &self.entries {
            if out.last() != Some(&c.block) {
                out.push(c.block);
            }
        }
        out
    }

    pub fn max_block(&self) -> Option<usize> {
        self.entries.last().map(|(c, _)| c.block)
    }

    /// Entries restricted to coordinates accepted by `keep`.
    pub fn filter(&self, mut keep: impl FnMut(Coord) -> bool) -> Element {
        Element {
            entries: self
                .entries
                .iter()
                .filter(|(c, _)| keep(*c))
                .cloned()
                .collect(),
        }
    }

    /// Builds from entries that are already canonical and sorted.
    pub(crate) fn from_sorted(entries: impl IntoIterator<Item = (Coord, Coeff)>) -> Element {
        let entries: SmallVec<[(Coord, Coeff); 4]> = entries.into_iter().collect();
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(entries.iter().all(|(_, v)| !v.is_zero()));
        Element { entries }
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return write!(f, "0");
        }
        for (i, (c, v)) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            let name = if c.slot == 0 {
                format!("e[{}]", c.block)
            } else {
                format!("h[{},{}]", c.block, c.slot)
            };
            match v {
                Coeff::Int(1) => write!(f, "{name}")?,
                _ => write!(f, "{v}*{name}")?,
            }
        }
        Ok(())
    }
}

/// Cardinality of a class of cyclic summands.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Card {
    Finite(usize),
    Omega,
}

impl Card {
    pub fn is_omega(self) -> bool {
        self == Card::Omega
    }

    fn bump(self) -> Card {
        match self {
            Card::Finite(n) => Card::Finite(n + 1),
            Card::Omega => Card::Omega,
        }
    }
}

impl fmt::Display for Card {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Card::Finite(n) => write!(f, "FINITE({n})"),
            Card::Omega => write!(f, "OMEGA"),
        }
    }
}

/// Leading Ulm–Kaplansky data of one primary component.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Leading {
    pub exponent: u32,
    pub count: Card,
}

impl BlockGroup {
    /// Validates a presentation. `m = None` infers the extent of `H`.
    pub fn new(head: Vec<Block>, tail: TailRule, m: Option<Extent>) -> Result<Self, GroupError> {
        for b in &head {
            b.validate()?;
        }
        match &tail {
            TailRule::None => {}
            TailRule::Const(b) => b.validate()?,
            TailRule::Geometric {
                p,
                start_exp,
                h_orders,
            } => {
                if !is_prime(*p) {
                    return Err(GroupError::InvalidSpec(format!(
                        "geometric tail needs a prime, got {p}"
                    )));
                }
                if *start_exp < 1 {
                    return Err(GroupError::InvalidSpec(
                        "geometric tail start_exp must be at least 1".into(),
                    ));
                }
                if h_orders.iter().any(|&h| h < 2) {
                    return Err(GroupError::InvalidSpec("h order must be at least 2".into()));
                }
            }
        }
        let inferred = if !tail.h_orders().is_empty() {
            Extent::Infinite
        } else {
            Extent::Finite(
                head.iter()
                    .rposition(|b| !b.h_orders.is_empty())
                    .map_or(0, |i| i + 1),
            )
        };
        if let Some(given) = m {
            if given != inferred {
                let reason = match (given, inferred) {
                    (Extent::Finite(_), Extent::Infinite) => {
                        "M finite but tail h_orders nonempty".to_string()
                    }
                    (Extent::Infinite, _) => {
                        "M infinite but H_j vanishes for all large j".to_string()
                    }
                    (Extent::Finite(g), Extent::Finite(i)) => {
                        format!("M = {g} but the first index from which every H_j is zero is {i}")
                    }
                };
                return Err(GroupError::InvalidSpec(reason));
            }
        }
        Ok(BlockGroup {
            head,
            tail,
            m: inferred,
        })
    }

    pub fn head(&self) -> &[Block] {
        &self.head
    }

    pub fn tail(&self) -> &TailRule {
        &self.tail
    }

    pub fn m(&self) -> Extent {
        self.m
    }

    /// Number of blocks, `None` when a tail rule makes it infinite.
    pub fn num_blocks(&self) -> Option<usize> {
        match self.tail {
            TailRule::None => Some(self.head.len()),
            _ => None,
        }
    }

    pub fn block_at(&self, j: usize) -> Result<Block, GroupError> {
        if let Some(b) = self.head.get(j) {
            return Ok(b.clone());
        }
        match &self.tail {
            TailRule::None => Err(GroupError::OutOfRange(j)),
            TailRule::Const(b) => Ok(b.clone()),
            TailRule::Geometric { h_orders, .. } => Ok(Block {
                e_order: self.e_order(j)?,
                h_orders: h_orders.clone(),
            }),
        }
    }

    /// Order of `e_j` without materializing the block.
    pub fn e_order(&self, j: usize) -> Result<CyclicOrder, GroupError> {
        if let Some(b) = self.head.get(j) {
            return Ok(b.e_order);
        }
        match &self.tail {
            TailRule::None => Err(GroupError::OutOfRange(j)),
            TailRule::Const(b) => Ok(b.e_order),
            TailRule::Geometric { p, start_exp, .. } => {
                let i = j - self.head.len();
                let e = u32::try_from(i)
                    .ok()
                    .and_then(|i| i.checked_add(*start_exp))
                    .ok_or(GroupError::OrderOverflow(j))?;
                p.checked_pow(e)
                    .filter(|&v| v <= i64::MAX as u64)
                    .map(CyclicOrder::Finite)
                    .ok_or(GroupError::OrderOverflow(j))
            }
        }
    }

    /// Number of h-coordinates of block `j`.
    pub fn h_count(&self, j: usize) -> Result<usize, GroupError> {
        if let Some(b) = self.head.get(j) {
            return Ok(b.h_orders.len());
        }
        match &self.tail {
            TailRule::None => Err(GroupError::OutOfRange(j)),
            t => Ok(t.h_orders().len()),
        }
    }

    pub fn coord_order(&self, c: Coord) -> Result<CyclicOrder, GroupError> {
        if c.slot == 0 {
            return self.e_order(c.block);
        }
        let hs = match self.head.get(c.block) {
            Some(b) => &b.h_orders[..],
            None => match &self.tail {
                TailRule::None => return Err(GroupError::OutOfRange(c.block)),
                t => t.h_orders(),
            },
        };
        hs.get(c.slot - 1)
            .map(|&h| CyclicOrder::Finite(h))
            .ok_or_else(|| {
                GroupError::InvalidElement(format!(
                    "block {} has no coordinate h_{}",
                    c.block, c.slot
                ))
            })
    }

    /// All coordinates of block `j` with their orders.
    pub fn block_coords(&self, j: usize) -> Result<Vec<(Coord, CyclicOrder)>, GroupError> {
        let b = self.block_at(j)?;
        let mut out = vec![(Coord::e(j), b.e_order)];
        for (i, &h) in b.h_orders.iter().enumerate() {
            out.push((Coord::h(j, i + 1), CyclicOrder::Finite(h)));
        }
        Ok(out)
    }

    /// True when the group is finite (no tail and only finite coordinates).
    pub fn is_finite(&self) -> bool {
        matches!(self.tail, TailRule::None)
            && self
                .head
                .iter()
                .all(|b| matches!(b.e_order, CyclicOrder::Finite(_)))
    }

    /// Canonicalizes arbitrary entries; repeated coordinates are summed.
    pub fn element(
        &self,
        entries: impl IntoIterator<Item = (Coord, Coeff)>,
    ) -> Result<Element, GroupError> {
        let mut acc: BTreeMap<Coord, Coeff> = BTreeMap::new();
        for (c, v) in entries {
            let ord = self.coord_order(c)?;
            let v = reduce(ord, &v)?;
            let merged = match acc.remove(&c) {
                Some(old) => combine(ord, &old, &v),
                None => v,
            };
            acc.insert(c, merged);
        }
        Ok(Element::from_sorted(
            acc.into_iter().filter(|(_, v)| !v.is_zero()),
        ))
    }

    /// `λ·e_j`.
    pub fn e(&self, j: usize, lambda: i64) -> Element {
        self.element([(Coord::e(j), Coeff::Int(lambda))])
            .expect("e-coordinate outside the group")
    }

    /// `c·h^j_i` (i is 1-based).
    pub fn h(&self, j: usize, i: usize, c: i64) -> Element {
        self.element([(Coord::h(j, i), Coeff::Int(c))])
            .expect("h-coordinate outside the group")
    }

    /// `(num/den)·e_j` on a Prufer block.
    pub fn prufer(&self, j: usize, num: i64, den: i64) -> Result<Element, GroupError> {
        if den == 0 {
            return Err(GroupError::InvalidElement("zero denominator".into()));
        }
        self.element([(Coord::e(j), Coeff::Frac(Ratio::new(num, den)))])
    }

    /// Re-canonicalizes an element (idempotent on canonical input).
    pub fn canonicalize(&self, x: &Element) -> Result<Element, GroupError> {
        self.element(x.entries.iter().cloned())
    }

    fn order_or_panic(&self, c: Coord) -> CyclicOrder {
        self.coord_order(c)
            .unwrap_or_else(|e| panic!("element not valid for this group: {e}"))
    }

    pub fn add(&self, x: &Element, y: &Element) -> Element {
        let (a, b) = (&x.entries, &y.entries);
        let mut out: SmallVec<[(Coord, Coeff); 4]> = SmallVec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j].clone());
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let ord = self.order_or_panic(a[i].0);
                    let v = combine(ord, &a[i].1, &b[j].1);
                    if !v.is_zero() {
                        out.push((a[i].0, v));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend(a[i..].iter().cloned());
        out.extend(b[j..].iter().cloned());
        Element { entries: out }
    }

    pub fn neg(&self, x: &Element) -> Element {
        self.smul(-1, x)
    }

    pub fn sub(&self, x: &Element, y: &Element) -> Element {
        self.add(x, &self.neg(y))
    }

    pub fn smul(&self, n: i64, x: &Element) -> Element {
        if n == 0 {
            return Element::zero();
        }
        let entries = x.entries.iter().filter_map(|(c, v)| {
            let ord = self.order_or_panic(*c);
            let r = scale(ord, v, n);
            (!r.is_zero()).then_some((*c, r))
        });
        Element {
            entries: entries.collect(),
        }
    }

    /// Sum of `coef·x` over the pairs.
    pub fn combination<'a>(&self, terms: impl IntoIterator<Item = (i64, &'a Element)>) -> Element {
        terms.into_iter().fold(Element::zero(), |acc, (c, x)| {
            self.add(&acc, &self.smul(c, x))
        })
    }

    pub fn order_of(&self, x: &Element) -> Order {
        let mut acc = Order::Finite(1);
        for (c, v) in &x.entries {
            let o = match (self.order_or_panic(*c), v) {
                (CyclicOrder::Finite(n), Coeff::Int(a)) => {
                    Order::Finite(n / (a.unsigned_abs()).gcd(&n))
                }
                (CyclicOrder::Infinite, _) => Order::Infinite,
                (_, Coeff::Frac(r)) => Order::Finite(r.denom().unsigned_abs()),
                (CyclicOrder::Prufer(_), Coeff::Int(_)) => Order::Finite(1),
            };
            acc = acc.lcm(o);
        }
        acc
    }

    /// lcm of all cyclic orders; a geometric tail or any ℤ / ℤ(p^∞) block makes it infinite.
    pub fn exponent(&self) -> Order {
        let mut acc = Order::Finite(1);
        let mut fold = |b: &Block| {
            acc = acc.lcm(match b.e_order {
                CyclicOrder::Finite(n) => Order::Finite(n),
                _ => Order::Infinite,
            });
            for &h in &b.h_orders {
                acc = acc.lcm(Order::Finite(h));
            }
        };
        self.head.iter().for_each(&mut fold);
        match &self.tail {
            TailRule::None => {}
            TailRule::Const(b) => fold(b),
            TailRule::Geometric { .. } => return Order::Infinite,
        }
        acc
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self.exponent(), Order::Finite(_))
    }

    /// Multiset of primary cyclic summands `ℤ(p^r)` keyed by `(p, r)`.
    pub fn summand_classes(&self) -> Result<BTreeMap<(u64, u32), Card>, GroupError> {
        if !self.is_bounded() {
            return Err(GroupError::Unbounded);
        }
        let mut classes: BTreeMap<(u64, u32), Card> = BTreeMap::new();
        let orders_of = |b: &Block| -> Vec<u64> {
            let mut v: Vec<u64> = b.e_order.finite().into_iter().collect();
            v.extend(b.h_orders.iter().copied());
            v
        };
        for b in &self.head {
            for n in orders_of(b) {
                for (p, r) in factorize(n) {
                    let e = classes.entry((p, r)).or_insert(Card::Finite(0));
                    *e = e.bump();
                }
            }
        }
        if let TailRule::Const(b) = &self.tail {
            for n in orders_of(b) {
                for (p, r) in factorize(n) {
                    classes.insert((p, r), Card::Omega);
                }
            }
        }
        Ok(classes)
    }

    /// For each prime dividing `exp G`: the largest exponent and the number of such summands.
    pub fn ulm_kaplansky_leading(&self) -> Result<BTreeMap<u64, Leading>, GroupError> {
        let mut out: BTreeMap<u64, Leading> = BTreeMap::new();
        for ((p, r), card) in self.summand_classes()? {
            // classes iterate in increasing r for fixed p
            out.insert(
                p,
                Leading {
                    exponent: r,
                    count: card,
                },
            );
        }
        Ok(out)
    }
}

fn reduce(ord: CyclicOrder, v: &Coeff) -> Result<Coeff, GroupError> {
    match ord {
        CyclicOrder::Finite(n) => {
            let a = v.as_int().ok_or_else(|| {
                GroupError::InvalidElement(format!(
                    "rational coefficient {v} on a cyclic coordinate"
                ))
            })?;
            Ok(Coeff::Int(a.rem_euclid(n as i64)))
        }
        CyclicOrder::Infinite => v.as_int().map(Coeff::Int).ok_or_else(|| {
            GroupError::InvalidElement(format!("rational coefficient {v} on a Z coordinate"))
        }),
        CyclicOrder::Prufer(p) => {
            let r = v.as_ratio();
            if !is_power_of(*r.denom() as u64, p) {
                return Err(GroupError::InvalidElement(format!(
                    "denominator of {v} is not a power of {p}"
                )));
            }
            Ok(Coeff::Frac(frac_part(r)))
        }
    }
}

fn frac_part(r: Ratio<i64>) -> Ratio<i64> {
    let f = r - r.floor();
    if f.is_negative() {
        f + Ratio::from_integer(1)
    } else {
        f
    }
}

fn combine(ord: CyclicOrder, a: &Coeff, b: &Coeff) -> Coeff {
    match (ord, a, b) {
        (CyclicOrder::Finite(n), Coeff::Int(x), Coeff::Int(y)) => {
            Coeff::Int(((*x as i128 + *y as i128).rem_euclid(n as i128)) as i64)
        }
        (CyclicOrder::Infinite, Coeff::Int(x), Coeff::Int(y)) => {
            Coeff::Int(x.checked_add(*y).expect("integer coordinate overflow"))
        }
        (CyclicOrder::Prufer(_), x, y) => Coeff::Frac(frac_part(x.as_ratio() + y.as_ratio())),
        _ => panic!("coefficient kind does not match coordinate order"),
    }
}

fn scale(ord: CyclicOrder, v: &Coeff, n: i64) -> Coeff {
    match (ord, v) {
        (CyclicOrder::Finite(m), Coeff::Int(x)) => {
            Coeff::Int(((*x as i128 * n as i128).rem_euclid(m as i128)) as i64)
        }
        (CyclicOrder::Infinite, Coeff::Int(x)) => {
            Coeff::Int(x.checked_mul(n).expect("integer coordinate overflow"))
        }
        (CyclicOrder::Prufer(_), Coeff::Frac(r)) => {
            let d = *r.denom();
            let k = n.rem_euclid(d);
            Coeff::Frac(frac_part(Ratio::new(
                ((*r.numer() as i128 * k as i128) % d as i128) as i64,
                d,
            )))
        }
        (CyclicOrder::Prufer(_), Coeff::Int(_)) => Coeff::Frac(Ratio::zero()),
        _ => panic!("coefficient kind does not match coordinate order"),
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn is_power_of(mut n: u64, p: u64) -> bool {
    while n > 1 && n.is_multiple_of(p) {
        n /= p;
    }
    n == 1
}

/// Prime factorization by trial division, primes increasing.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            let mut r = 0;
            while n.is_multiple_of(d) {
                n /= d;
                r += 1;
            }
            out.push((d, r));
        }
        d += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn lcm_u64(a: u64, b: u64) -> u64 {
    let g = a.gcd(&b);
    (a / g).checked_mul(b).expect("order overflow")
}

/// p-adic valuation of a nonzero integer.
pub fn valuation(mut n: u64, p: u64) -> u32 {
    let mut v = 0;
    while n != 0 && n.is_multiple_of(p) {
        n /= p;
        v += 1;
    }
    v
}
