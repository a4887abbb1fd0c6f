//! The triangular T-sequence on `G = ⊕_j (⟨e_j⟩ + H_j)`.
//!
//! Even terms run through the nonzero multiples of `e_0, e_1, …` in order.
//! Odd term `2n+1` is a basis element `b_κ(n)` of `H` plus the block of
//! consecutive generators `e_{S_{n-1}+1} + … + e_{S_n}`, where `S_n = n(n+1)/2`.

use std::collections::BTreeSet;

use num_integer::Roots;

use super::ConstructionError;
use crate::group::{BlockGroup, Coord, CyclicOrder, Element, GroupError, Order, TailRule};
use crate::tseq::{SeqError, Sequence, TSeq, TailCertificate, TailQuery};

/// Where the subgroup `H` sits inside each block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HSpec {
    /// `H_j` is spanned by the block's h-coordinates.
    Coordinates,
    /// `H_j = ⟨e_j⟩` for every `j` (so `H = G`); requires blocks without h-coordinates.
    SelfE,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Hypothesis {
    /// All `u_j` equal `u` and `exp H` divides `u`.
    A { u: u64 },
    /// `exp H ≤ u_j` for all `j` and `u_j → ∞`.
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Case {
    /// `H_j = 0` from block `M` on; `c = a_0 + … + a_{M-1}`.
    FiniteM {
        m: usize,
        c: usize,
    },
    InfiniteM,
}

#[derive(Clone, Debug)]
pub struct TriangularParams {
    group: BlockGroup,
    hspec: HSpec,
    hypothesis: Hypothesis,
    case: Case,
    exp_h: u64,
    /// `h_count` prefix sums over the head blocks: `offsets[j] = a_0 + … + a_{j-1}`.
    offsets: Vec<usize>,
}

pub fn s(n: u64) -> u64 {
    n * (n + 1) / 2
}

/// `max{t : n ≥ S_t}`.
pub fn t(n: u64) -> u64 {
    let mut t = ((8 * n as u128 + 1).sqrt() as u64 - 1) / 2;
    while s(t + 1) <= n {
        t += 1;
    }
    while s(t) > n {
        t -= 1;
    }
    t
}

pub fn mu(n: u64) -> u64 {
    s(t(n))
}

/// `n mod μ_n`, with the convention `n mod 1 = 0`.
pub fn n_mod_mu(n: u64) -> u64 {
    n % mu(n)
}

/// Outcome of checking the table inequalities for `1 ≤ n ≤ limit`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableReport {
    pub checked: u64,
    /// `(n, name of the failed inequality)`.
    pub failures: Vec<(u64, &'static str)>,
}

/// Checks `S_t(n) ≤ n < S_t(n)+1`, `μ_n ≤ n`, `n mod μ_n < μ_n`, and for `n > 3`
/// the two inequalities `n mod μ_n < n` and `n < S_{n-1}` separately.
pub fn check_table_inequalities(limit: u64) -> TableReport {
    let mut failures = Vec::new();
    for n in 1..=limit {
        let tn = t(n);
        let m = s(tn);
        if !(m <= n && n < s(tn + 1)) {
            failures.push((n, "S_t(n) <= n < S_t(n)+1"));
        }
        if m > n {
            failures.push((n, "mu_n <= n"));
        }
        if n % m >= m {
            failures.push((n, "n mod mu_n < mu_n"));
        }
        if n > 3 {
            if n % m >= n {
                failures.push((n, "n mod mu_n < n"));
            }
            if n >= s(n - 1) {
                failures.push((n, "n < S_(n-1)"));
            }
        }
    }
    TableReport {
        checked: limit,
        failures,
    }
}

fn invalid(msg: impl Into<String>) -> ConstructionError {
    ConstructionError::InvalidParams(msg.into())
}

impl TriangularParams {
    /// `H_j` spanned by the h-coordinates of block `j`.
    pub fn new(group: BlockGroup) -> Result<Self, ConstructionError> {
        Self::build(group, HSpec::Coordinates)
    }

    /// `H_j := ⟨e_j⟩` on a group `⊕⟨e_j⟩` with equal orders.
    pub fn self_e(group: BlockGroup) -> Result<Self, ConstructionError> {
        Self::build(group, HSpec::SelfE)
    }

    fn build(group: BlockGroup, hspec: HSpec) -> Result<Self, ConstructionError> {
        if matches!(group.tail(), TailRule::None) {
            return Err(invalid(
                "the construction needs infinitely many blocks (tail rule NONE)",
            ));
        }
        for (j, b) in group.head().iter().enumerate() {
            if b.e_order.finite().is_none() {
                return Err(invalid(format!("u_{j} = o(e_{j}) must be finite")));
            }
        }
        if let TailRule::Const(b) = group.tail() {
            if b.e_order.finite().is_none() {
                return Err(invalid("tail e-order must be finite"));
            }
        }
        let tail_h = group.tail().h_orders().to_vec();
        let (exp_h, case) = match hspec {
            HSpec::Coordinates => {
                let m = match group.m() {
                    crate::group::Extent::Finite(m) => Some(m),
                    crate::group::Extent::Infinite => None,
                };
                let limit = m.unwrap_or(group.head().len());
                if let Some(j) = (0..limit).find(|&j| group.head()[j].h_orders.is_empty()) {
                    return Err(invalid(format!(
                        "H_{j} must be nonzero for every block below M"
                    )));
                }
                let mut exp = 1u64;
                for b in group.head() {
                    for &h in &b.h_orders {
                        exp = crate::group::lcm_u64(exp, h);
                    }
                }
                for &h in &tail_h {
                    exp = crate::group::lcm_u64(exp, h);
                }
                let case = match m {
                    Some(m) => {
                        let c: usize = group.head()[..m].iter().map(|b| b.h_orders.len()).sum();
                        if c == 0 {
                            return Err(invalid("H is trivial (c = 0)"));
                        }
                        Case::FiniteM { m, c }
                    }
                    None => Case::InfiniteM,
                };
                (exp, case)
            }
            HSpec::SelfE => {
                if group.head().iter().any(|b| !b.h_orders.is_empty()) || !tail_h.is_empty() {
                    return Err(invalid("H_j = <e_j> requires blocks without h-coordinates"));
                }
                match group.exponent() {
                    Order::Finite(n) => (n, Case::InfiniteM),
                    Order::Infinite => {
                        return Err(invalid("H = G must have finite exponent"));
                    }
                }
            }
        };
        let hypothesis = Self::hypothesis(&group, exp_h)?;
        let mut offsets = vec![0];
        for b in group.head() {
            let a = match hspec {
                HSpec::Coordinates => b.h_orders.len(),
                HSpec::SelfE => 1,
            };
            offsets.push(offsets.last().copied().unwrap_or(0) + a);
        }
        Ok(TriangularParams {
            group,
            hspec,
            hypothesis,
            case,
            exp_h,
            offsets,
        })
    }

    fn hypothesis(group: &BlockGroup, exp_h: u64) -> Result<Hypothesis, ConstructionError> {
        let head: Vec<u64> = group
            .head()
            .iter()
            .filter_map(|b| b.e_order.finite())
            .collect();
        match group.tail() {
            TailRule::Const(b) => {
                let u = b.e_order.finite().expect("checked finite");
                if head.iter().any(|&x| x != u) {
                    return Err(invalid(
                        "hypothesis a) needs all u_j equal; hypothesis b) needs u_j -> infinity",
                    ));
                }
                if u % exp_h != 0 {
                    return Err(invalid(format!("exp H = {exp_h} does not divide u = {u}")));
                }
                Ok(Hypothesis::A { u })
            }
            TailRule::Geometric { p, start_exp, .. } => {
                let first = p.checked_pow(*start_exp).unwrap_or(u64::MAX);
                if head.iter().chain([&first]).any(|&x| x < exp_h) {
                    return Err(invalid(format!(
                        "hypothesis b) needs exp H = {exp_h} <= u_j for all j"
                    )));
                }
                Ok(Hypothesis::B)
            }
            TailRule::None => unreachable!("rejected above"),
        }
    }

    pub fn group(&self) -> &BlockGroup {
        &self.group
    }

    pub fn hspec(&self) -> HSpec {
        self.hspec
    }

    pub fn hypothesis_kind(&self) -> Hypothesis {
        self.hypothesis
    }

    pub fn case(&self) -> Case {
        self.case
    }

    pub fn exp_h(&self) -> u64 {
        self.exp_h
    }

    /// `u_j`; orders too large for 63 bits report as `None`.
    pub fn u(&self, j: usize) -> Result<u64, GroupError> {
        match self.group.e_order(j)? {
            CyclicOrder::Finite(n) => Ok(n),
            _ => unreachable!("validated finite"),
        }
    }

    fn u_exceeds(&self, j: usize, bound: u64) -> bool {
        match self.group.e_order(j) {
            Ok(CyclicOrder::Finite(n)) => n > bound,
            _ => true,
        }
    }

    /// Number of basis elements of `H_j`.
    pub fn a(&self, j: usize) -> usize {
        match self.hspec {
            HSpec::SelfE => 1,
            HSpec::Coordinates => match self.case {
                Case::FiniteM { m, .. } if j >= m => 0,
                _ => self.group.h_count(j).unwrap_or(0),
            },
        }
    }

    /// Number of basis elements `b_k`, `None` when infinite.
    pub fn basis_len(&self) -> Option<usize> {
        match self.case {
            Case::FiniteM { c, .. } => Some(c),
            Case::InfiniteM => None,
        }
    }

    /// Coordinate of `b_k` in the block-major enumeration.
    pub fn b_coord(&self, k: usize) -> Option<Coord> {
        if self.basis_len().is_some_and(|c| k >= c) {
            return None;
        }
        let head = self.group.head().len();
        let total_head = self.offsets[head];
        let (j, i) = if k < total_head {
            let j = self.offsets.partition_point(|&o| o <= k) - 1;
            (j, k - self.offsets[j])
        } else {
            let per = match self.hspec {
                HSpec::SelfE => 1,
                HSpec::Coordinates => self.group.tail().h_orders().len(),
            };
            if per == 0 {
                return None;
            }
            let r = k - total_head;
            (head + r / per, r % per)
        };
        Some(match self.hspec {
            HSpec::SelfE => Coord::e(j),
            HSpec::Coordinates => Coord::h(j, i + 1),
        })
    }

    pub fn b(&self, k: usize) -> Option<Element> {
        let c = self.b_coord(k)?;
        Some(if c.slot == 0 {
            self.group.e(c.block, 1)
        } else {
            self.group.h(c.block, c.slot, 1)
        })
    }

    /// Order of `b_k`.
    fn b_order(&self, k: usize) -> u64 {
        let c = self.b_coord(k).expect("basis index in range");
        match self.group.coord_order(c) {
            Ok(CyclicOrder::Finite(n)) => n,
            _ => u64::MAX,
        }
    }

    /// Basis index carried by odd term `2n+1`.
    pub fn b_index(&self, n: usize) -> usize {
        match (self.case, n) {
            (_, 0) | (_, 1) => 0,
            (Case::InfiniteM, 2) => 1,
            (Case::FiniteM { c, .. }, n) => n % c,
            (Case::InfiniteM, n) => n_mod_mu(n as u64) as usize,
        }
    }

    /// e-range `S_{n-1}+1 ..= S_n` of odd term `2n+1` as a half-open range.
    pub fn odd_range(&self, n: usize) -> std::ops::Range<usize> {
        if n == 0 {
            return 0..0;
        }
        let lo = s(n as u64 - 1) as usize + 1;
        lo..s(n as u64) as usize + 1
    }

    /// `U_j = Σ_{l<j} (u_l − 1)`: the even half-index at which block `j` starts.
    pub fn block_start(&self, j: usize) -> Result<u128, GroupError> {
        let head = self.group.head().len();
        let mut acc: u128 = 0;
        for l in 0..j.min(head) {
            acc += self.u(l)? as u128 - 1;
        }
        if j > head {
            match self.group.tail() {
                TailRule::Const(b) => {
                    acc += (j - head) as u128 * (b.e_order.finite().expect("finite") as u128 - 1)
                }
                _ => {
                    for l in head..j {
                        acc += self.u(l)? as u128 - 1;
                    }
                }
            }
        }
        Ok(acc)
    }

    /// Block and multiplier of even term `2i`.
    pub fn even_position(&self, i: usize) -> Result<(usize, u64), GroupError> {
        let i = i as u128;
        let head = self.group.head().len();
        let mut start: u128 = 0;
        for j in 0..head {
            let len = self.u(j)? as u128 - 1;
            if i < start + len {
                return Ok((j, (i - start) as u64 + 1));
            }
            start += len;
        }
        match self.group.tail() {
            TailRule::Const(b) => {
                let len = b.e_order.finite().expect("finite") as u128 - 1;
                let r = i - start;
                Ok((head + (r / len) as usize, (r % len) as u64 + 1))
            }
            _ => {
                let mut j = head;
                loop {
                    let len = self.u(j)? as u128 - 1;
                    if i < start + len {
                        return Ok((j, (i - start) as u64 + 1));
                    }
                    start += len;
                    j += 1;
                }
            }
        }
    }

    pub fn term(&self, n: usize) -> Result<Element, GroupError> {
        let g = &self.group;
        if n.is_multiple_of(2) {
            let (j, lambda) = self.even_position(n / 2)?;
            return Ok(g.e(j, lambda as i64));
        }
        let i = n / 2;
        let b = self
            .b(self.b_index(i))
            .expect("b-index within the enumeration");
        let mut entries: Vec<(Coord, crate::group::Coeff)> = b.entries().to_vec();
        for j in self.odd_range(i) {
            self.u(j)?;
            entries.push((Coord::e(j), crate::group::Coeff::Int(1)));
        }
        g.element(entries)
    }

    pub fn sequence(&self) -> TSeq {
        TSeq::new(Triangular {
            params: self.clone(),
        })
    }

    /// Indices `n ≤ max_n` whose odd term carries `b_k` and whose e-range is
    /// nonempty and lies entirely beyond block `beyond`.
    pub fn verify_recurrence(&self, k: usize, max_n: usize, beyond: usize) -> Vec<usize> {
        (1..=max_n)
            .filter(|&n| self.b_index(n) == k && self.odd_range(n).start > beyond)
            .collect()
    }

    /// Index `2·m_0` at which the construction's own argument guarantees
    /// exclusion of `g` from `A(k, ·)`.
    pub fn proof_exclusion_index(&self, g: &Element, k: usize) -> Result<u128, GroupError> {
        let v = g.max_block().unwrap_or(0).max(3);
        let m_prime = (self.block_start(v + 1)?.saturating_sub(1)).max(4);
        let m0 = match self.hypothesis {
            Hypothesis::A { .. } => 4 * m_prime * (k as u128 + 1),
            Hypothesis::B => {
                let bound = 2 * (k as u64 + 1);
                let mut last_small = 0usize;
                let mut j = 0usize;
                // orders are eventually increasing; scan until they stay above the bound
                while j <= self.group.head().len() + 64 {
                    if !self.u_exceeds(j, bound) {
                        last_small = j;
                    }
                    j += 1;
                }
                let j_prime = (last_small as u128).max(m_prime + 1);
                4 * j_prime * (k as u128 + 1)
            }
        };
        Ok(2 * m0)
    }

    /// Whether odd term `2i+1` with multiplier `c` can occur in a sum of weight
    /// `≤ weight` equal to an element whose e-support is `supp_e`.
    fn odd_participates(&self, i: usize, c: u64, weight: u64, supp_e: &BTreeSet<usize>) -> bool {
        let range = self.odd_range(i);
        let z = range
            .clone()
            .filter(|&s| self.u_exceeds(s, c) || !c.is_multiple_of(self.u(s).unwrap_or(u64::MAX)))
            .count();
        let kb = self.b_index(i);
        if z == 0 && c.is_multiple_of(self.b_order(kb)) {
            return false; // c·d vanishes
        }
        let covered = range.filter(|s| supp_e.contains(s)).count();
        z.saturating_sub(covered) as u64 <= weight - c
    }

    fn support_escape(&self, q: &TailQuery<'_>) -> Option<TailCertificate> {
        let weight = q.k as u64 + 1;
        let supp_e: BTreeSet<usize> =
            q.g.entries()
                .iter()
                .filter(|(c, _)| c.slot == 0)
                .map(|(c, _)| c.block)
                .collect();
        // boundary block J: largest j with 2·U_j − 1 ≤ N
        let n = q.n as u128;
        let mut j_bound = 0usize;
        loop {
            let next = self.block_start(j_bound + 1).ok()?;
            if 2 * next > n + 1 {
                break;
            }
            j_bound += 1;
        }
        if supp_e.iter().any(|&b| b >= j_bound) {
            return None;
        }
        let u_j = self.block_start(j_bound).ok()? as usize;
        // first block from which all orders exceed the weight
        let j0 = match self.hypothesis {
            Hypothesis::A { .. } => 0,
            Hypothesis::B => {
                let mut last = None;
                for j in 0..=self.group.head().len() + 64 {
                    if !self.u_exceeds(j, weight) {
                        last = Some(j);
                    }
                }
                last.map_or(0, |l| l + 1)
            }
        };
        // beyond `stop`, every e-coordinate of the range survives and cannot all be cancelled
        let mut stop = u_j.max(weight as usize + supp_e.len());
        while self.odd_range(stop).start < j0 {
            stop += 1;
        }
        for i in u_j..stop {
            if (1..=weight).any(|c| self.odd_participates(i, c, weight, &supp_e)) {
                return None;
            }
        }
        for i in 0..u_j {
            if 2 * i + 1 < q.m {
                continue;
            }
            if !(1..=weight).any(|c| self.odd_participates(i, c, weight, &supp_e)) {
                continue;
            }
            if self.odd_range(i).end > j_bound {
                return None;
            }
            if self.hspec == HSpec::SelfE {
                let kb = self.b_coord(self.b_index(i))?;
                if kb.block >= j_bound {
                    return None;
                }
            }
        }
        Some(TailCertificate::SupportEscape {
            boundary_block: j_bound,
            effective_prefix: 2 * u_j - 1,
            odd_from: u_j,
            odd_checked_to: stop,
        })
    }
}

#[derive(Debug, Clone)]
struct Triangular {
    params: TriangularParams,
}

impl Sequence for Triangular {
    fn group(&self) -> &BlockGroup {
        &self.params.group
    }

    fn term(&self, n: usize) -> Result<Element, SeqError> {
        Ok(self.params.term(n)?)
    }

    fn describe(&self) -> String {
        let case = match self.params.case {
            Case::FiniteM { m, c } => format!("case (i), M={m}, c={c}"),
            Case::InfiniteM => "case (ii), M=INF".to_string(),
        };
        let hyp = match self.params.hypothesis {
            Hypothesis::A { u } => format!("hypothesis a), u={u}"),
            Hypothesis::B => "hypothesis b)".to_string(),
        };
        format!("TRIANGULAR({case}, {hyp})")
    }

    fn tail_certificate(&self, q: &TailQuery<'_>) -> Option<TailCertificate> {
        self.params.support_escape(q)
    }
}
