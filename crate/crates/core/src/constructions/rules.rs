//! Integer sequences `u_n` given by a finite rule, their residues, and the
//! induced subgroup `{x ∈ ℚ/ℤ : u_n·x → 0}` of the circle.

use std::collections::HashMap;

use num_integer::Integer;

use super::ConstructionError;
use crate::group::{Block, BlockGroup, CyclicOrder, Element, TailRule};
use crate::tseq::{zero_tail_certificate, SeqError, Sequence, TailCertificate, TailQuery};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ResidueSeqRule {
    /// `values`, then `values[repeat_from..]` repeated forever.
    List {
        values: Vec<i64>,
        repeat_from: usize,
    },
    /// `u_n = q^n`.
    Geom(i64),
    /// `u_0 = u0`, `u_{n+1} = a·u_n + b`.
    Affine { a: i64, b: i64, u0: i64 },
    /// `u_n = n!`.
    Factorial,
}

impl ResidueSeqRule {
    pub fn validate(&self) -> Result<(), ConstructionError> {
        match self {
            ResidueSeqRule::List { values, .. } if values.is_empty() => Err(
                ConstructionError::NoCycleDetected("an empty LIST defines no terms".into()),
            ),
            ResidueSeqRule::List {
                values,
                repeat_from,
            } if *repeat_from >= values.len() => Err(ConstructionError::InvalidInput(format!(
                "repeat_from {repeat_from} outside a list of length {}",
                values.len()
            ))),
            _ => Ok(()),
        }
    }

    fn list_index(values: &[i64], repeat_from: usize, n: usize) -> usize {
        if n < values.len() {
            n
        } else {
            repeat_from + (n - values.len()) % (values.len() - repeat_from)
        }
    }

    /// `u_n`, or `None` when it leaves the `i64` range.
    pub fn value(&self, n: usize) -> Option<i64> {
        match self {
            ResidueSeqRule::List {
                values,
                repeat_from,
            } => values
                .get(Self::list_index(values, *repeat_from, n))
                .copied(),
            ResidueSeqRule::Geom(q) => q.checked_pow(u32::try_from(n).ok()?),
            ResidueSeqRule::Affine { a, b, u0 } => {
                let mut u = *u0;
                for _ in 0..n {
                    u = a.checked_mul(u)?.checked_add(*b)?;
                }
                Some(u)
            }
            ResidueSeqRule::Factorial => (1..=n as i64).try_fold(1i64, |acc, i| acc.checked_mul(i)),
        }
    }

    /// Whether `u_n = 0` for every `n`.
    pub fn is_identically_zero(&self) -> bool {
        match self {
            ResidueSeqRule::List { values, .. } => values.iter().all(|&v| v == 0),
            ResidueSeqRule::Geom(_) | ResidueSeqRule::Factorial => false,
            ResidueSeqRule::Affine { b, u0, .. } => *u0 == 0 && *b == 0,
        }
    }

    /// First index from which `u_n = 0`, when the rule is eventually zero.
    fn zero_from(&self) -> Option<usize> {
        match self {
            ResidueSeqRule::List {
                values,
                repeat_from,
            } => {
                if values[*repeat_from..].iter().any(|&v| v != 0) {
                    return None;
                }
                Some(values.iter().rposition(|&v| v != 0).map_or(0, |i| i + 1))
            }
            ResidueSeqRule::Geom(0) => Some(1),
            ResidueSeqRule::Affine { a, b, u0 } => match (*u0, *a, *b) {
                (0, _, 0) => Some(0),
                (_, 0, 0) => Some(1),
                _ => None,
            },
            _ => None,
        }
    }

    /// Residue automaton mod `m`: states are pairs, `residue` reads `u_n mod m`.
    fn initial(&self, m: i64) -> (i64, i64) {
        match self {
            ResidueSeqRule::List { .. } => (0, 0),
            ResidueSeqRule::Geom(_) => (1 % m, 0),
            ResidueSeqRule::Affine { u0, .. } => (u0.mod_floor(&m), 0),
            ResidueSeqRule::Factorial => (0, 1 % m),
        }
    }

    fn step(&self, s: (i64, i64), m: i64) -> (i64, i64) {
        let mm = m as i128;
        match self {
            ResidueSeqRule::List {
                values,
                repeat_from,
            } => {
                let next = s.0 as usize + 1;
                let next = if next < values.len() {
                    next
                } else {
                    *repeat_from
                };
                (next as i64, 0)
            }
            ResidueSeqRule::Geom(q) => ((s.0 as i128 * *q as i128).rem_euclid(mm) as i64, 0),
            ResidueSeqRule::Affine { a, b, .. } => (
                ((*a as i128) * s.0 as i128 + *b as i128).rem_euclid(mm) as i64,
                0,
            ),
            ResidueSeqRule::Factorial => {
                let n1 = (s.0 + 1) % m;
                // u_{n+1} = (n+1)·u_n; only n+1 mod m matters
                (n1, ((s.1 as i128 * n1 as i128).rem_euclid(mm)) as i64)
            }
        }
    }

    fn residue(&self, s: (i64, i64), m: i64) -> i64 {
        match self {
            ResidueSeqRule::List { values, .. } => values[s.0 as usize].mod_floor(&m),
            ResidueSeqRule::Factorial => s.1,
            _ => s.0,
        }
    }
}

impl std::fmt::Display for ResidueSeqRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ResidueSeqRule::List {
                values,
                repeat_from,
            } => {
                write!(f, "LIST({values:?}, repeat_from={repeat_from})")
            }
            ResidueSeqRule::Geom(q) => write!(f, "GEOM({q})"),
            ResidueSeqRule::Affine { a, b, u0 } => write!(f, "AFFINE({a},{b},u0={u0})"),
            ResidueSeqRule::Factorial => write!(f, "FACTORIAL"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CircleVerdict {
    In,
    NotIn,
}

/// Eventual behaviour of `u_n·a mod b`: values at `preperiod..preperiod+period` repeat.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CircleReport {
    pub verdict: CircleVerdict,
    pub numerator: i64,
    pub denominator: i64,
    pub preperiod: usize,
    pub period: usize,
    pub cycle: Vec<i64>,
}

/// Decides whether `u_n · (a/b) → 0` in `ℚ/ℤ`.
pub fn circle_membership(
    rule: &ResidueSeqRule,
    a: i64,
    b: i64,
) -> Result<CircleReport, ConstructionError> {
    rule.validate()?;
    if b < 1 || a < 0 || a >= b {
        return Err(ConstructionError::InvalidInput(format!(
            "x = {a}/{b} must satisfy b >= 1 and 0 <= a < b"
        )));
    }
    let d = a.gcd(&b);
    let (a, b) = (a / d, b / d);
    let mut seen: HashMap<(i64, i64), usize> = HashMap::new();
    let mut vals = Vec::new();
    let mut state = rule.initial(b);
    let (pre0, len0) = loop {
        if let Some(&first) = seen.get(&state) {
            break (first, vals.len() - first);
        }
        seen.insert(state, vals.len());
        vals.push(((rule.residue(state, b) as i128 * a as i128) % b as i128) as i64);
        state = rule.step(state, b);
    };
    let at = |i: usize| {
        vals[if i < pre0 {
            i
        } else {
            pre0 + (i - pre0) % len0
        }]
    };
    let period = (1..=len0)
        .filter(|p| len0 % p == 0)
        .find(|&p| (pre0..pre0 + len0).all(|i| at(i) == at(i + p)))
        .unwrap_or(len0);
    let mut preperiod = pre0;
    while preperiod > 0 && at(preperiod - 1) == at(preperiod - 1 + period) {
        preperiod -= 1;
    }
    let cycle: Vec<i64> = (preperiod..preperiod + period).map(at).collect();
    let verdict = if cycle.iter().all(|&v| v == 0) {
        CircleVerdict::In
    } else {
        CircleVerdict::NotIn
    };
    Ok(CircleReport {
        verdict,
        numerator: a,
        denominator: b,
        preperiod,
        period,
        cycle,
    })
}

/// `d_n = u_n` as a sequence in `ℤ`.
#[derive(Clone, Debug)]
pub struct IntegerRuleSeq {
    group: BlockGroup,
    rule: ResidueSeqRule,
}

impl IntegerRuleSeq {
    pub fn new(rule: ResidueSeqRule) -> Result<Self, ConstructionError> {
        rule.validate()?;
        let group = BlockGroup::new(
            vec![Block::new(CyclicOrder::Infinite, vec![])],
            TailRule::None,
            None,
        )?;
        Ok(IntegerRuleSeq { group, rule })
    }

    pub fn integers() -> BlockGroup {
        BlockGroup::new(
            vec![Block::new(CyclicOrder::Infinite, vec![])],
            TailRule::None,
            None,
        )
        .expect("Z is a valid group")
    }

    pub fn rule(&self) -> &ResidueSeqRule {
        &self.rule
    }

    /// Growth justification for `|u_{r+1}| ≥ w·|u_r|` for every `r > n`.
    fn growth(&self, w: i128, n: usize) -> Option<String> {
        match &self.rule {
            ResidueSeqRule::Geom(q) if (*q as i128).abs() >= w => {
                Some(format!("GEOM |q|={} >= k+1={w}", q.abs()))
            }
            ResidueSeqRule::Factorial if n as i128 + 2 >= w => {
                Some(format!("FACTORIAL r+1 >= {} >= k+1={w}", n + 2))
            }
            ResidueSeqRule::Affine { a, b, .. } => {
                let first = self.rule.value(n + 1)? as i128;
                let (a, b) = (*a as i128, *b as i128);
                (a >= w && first > 0 && (a - w) * first + b >= 0).then(|| {
                    format!("AFFINE a={a} >= k+1={w}, u_(N+1)={first} > 0, (a-k-1)u+b >= 0")
                })
            }
            _ => None,
        }
    }
}

impl Sequence for IntegerRuleSeq {
    fn group(&self) -> &BlockGroup {
        &self.group
    }

    fn term(&self, n: usize) -> Result<Element, SeqError> {
        let v = self.rule.value(n).ok_or(SeqError::Overflow(n))?;
        Ok(self.group.e(0, v))
    }

    fn describe(&self) -> String {
        self.rule.to_string()
    }

    fn zero_beyond(&self) -> Option<usize> {
        self.rule.zero_from()
    }

    fn tail_certificate(&self, q: &TailQuery<'_>) -> Option<TailCertificate> {
        if let Some(c) = zero_tail_certificate(self.zero_beyond(), q) {
            return Some(c);
        }
        let w = q.k as i128 + 1;
        let growth = self.growth(w, q.n)?;
        let first = (self.rule.value(q.n + 1)? as i128).abs();
        let g = (q.g.int_at(crate::group::Coord::e(0)) as i128).abs();
        let prefix_bound = q
            .prefix
            .iter()
            .enumerate()
            .skip(q.m)
            .fold(0i128, |acc, (_, d)| {
                acc.max((d.int_at(crate::group::Coord::e(0)) as i128).abs())
            });
        let rhs = w.checked_mul(g.checked_add(w.checked_mul(prefix_bound)?)?)?;
        (first > rhs).then_some(TailCertificate::OrderGrowth {
            first_tail: first,
            prefix_bound,
            growth,
        })
    }
}
