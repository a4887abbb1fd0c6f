//! Structural decompositions of groups and subgroups into the block form the
//! triangular construction needs.
//!
//! Infinite quantifiers ("for every k", "infinitely many indices") are only
//! ever checked up to a caller-supplied window; certificates say so.

mod dispatch;
mod peel;
mod prufer;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use thiserror::Error;

use crate::group::{
    factorize, BlockGroup, Card, Coeff, Coord, CyclicOrder, Element, GroupError, Order,
};
use crate::zlattice::{self, Frame, LatticeError};

pub use dispatch::{dispatch_case, BlockFormRecipe, DispatchCase, DispatchReport, SubgroupSpec};
pub use peel::{peel_summand, PeelCase, PeelHypothesis, PeelInput, PeelStep};
pub use prufer::{prufer_split, PruferSplit};

pub const DEFAULT_WINDOW: usize = 64;

/// Upper bound on explicitly enumerated finite subgroups.
const ENUM_BUDGET: usize = 1 << 16;

#[derive(Debug, Error)]
pub enum DecomposeError {
    #[error("group is unbounded")]
    Unbounded,
    #[error("group is finite")]
    FiniteInput,
    #[error("order mismatch: o(f_{i}) = {oi} but o(f_{j}) = {oj}")]
    OrderMismatch {
        i: usize,
        j: usize,
        oi: Order,
        oj: Order,
    },
    #[error("not a basis: {0}")]
    NotABasis(String),
    #[error("subgroup has infinite exponent")]
    ExpInfinite,
    #[error("window insufficient: {0}")]
    WindowInsufficient(String),
    #[error("hypothesis fails: {0}")]
    HypothesisFail(String),
    #[error("criterion fails: {0}")]
    CriterionFail(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Group(#[from] GroupError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    DirectSum,
    Sum,
}

/// One summand: explicit generators plus an optional rule-generated remainder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Part {
    pub name: String,
    pub gens: Vec<Element>,
    /// Description of rule-generated generators, e.g. all tail coordinates.
    pub tail: Option<String>,
    /// `(p, r, count)` when the part is a finite sum of `ℤ(p^r)^(κ)` with `κ` infinite.
    pub lambda: Vec<(u64, u32, Card)>,
}

impl Part {
    pub fn finite(name: &str, gens: Vec<Element>) -> Self {
        Part {
            name: name.to_string(),
            gens,
            tail: None,
            lambda: Vec::new(),
        }
    }

    pub fn satisfies_lambda(&self) -> bool {
        !self.lambda.is_empty() && self.lambda.iter().all(|(_, _, c)| c.is_omega())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Certificate {
    pub checks: Vec<Check>,
    /// Window up to which infinite quantifiers were checked.
    pub window: Option<usize>,
    pub notes: Vec<String>,
}

impl Certificate {
    pub fn check(&mut self, name: impl Into<String>, passed: bool) {
        self.checks.push(Check {
            name: name.into(),
            passed,
        });
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn label(&self) -> String {
        match self.window {
            Some(w) => format!("CERTIFIED_UP_TO({w})"),
            None => "CERTIFIED".to_string(),
        }
    }

    fn merge(&mut self, prefix: &str, other: Certificate) {
        for c in other.checks {
            self.check(format!("{prefix}: {}", c.name), c.passed);
        }
        self.notes
            .extend(other.notes.into_iter().map(|n| format!("{prefix}: {n}")));
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition {
    pub relation: Relation,
    pub parts: Vec<Part>,
    pub certificate: Certificate,
}

impl Decomposition {
    pub fn part(&self, name: &str) -> Option<&Part> {
        self.parts.iter().find(|p| p.name == name)
    }
}

impl fmt::Display for Decomposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sep = match self.relation {
            Relation::DirectSum => " (+) ",
            Relation::Sum => " + ",
        };
        let parts: Vec<String> = self
            .parts
            .iter()
            .map(|p| {
                let gens: Vec<String> = p.gens.iter().map(|g| g.to_string()).collect();
                let mut s = format!("{}=<{}>", p.name, gens.join(", "));
                if let Some(t) = &p.tail {
                    s.push_str(&format!("+[{t}]"));
                }
                s
            })
            .collect();
        write!(f, "{}", parts.join(sep))
    }
}

pub(crate) fn coord_element(g: &BlockGroup, c: Coord, k: i64) -> Element {
    g.element([(c, Coeff::Int(k))])
        .expect("coordinate of the group")
}

pub(crate) fn finite_order(g: &BlockGroup, x: &Element) -> u64 {
    match g.order_of(x) {
        Order::Finite(n) => n,
        Order::Infinite => 0,
    }
}

/// All coordinates of the head blocks with their finite orders.
fn head_coords(g: &BlockGroup) -> Result<Vec<(Coord, u64)>, DecomposeError> {
    let mut out = Vec::new();
    for j in 0..g.head().len() {
        for (c, o) in g.block_coords(j)? {
            match o {
                CyclicOrder::Finite(n) => out.push((c, n)),
                _ => return Err(DecomposeError::Unbounded),
            }
        }
    }
    Ok(out)
}

fn lambda_classes(classes: &BTreeMap<(u64, u32), Card>) -> Vec<(u64, u32, Card)> {
    classes
        .iter()
        .filter(|(_, c)| c.is_omega())
        .map(|(&(p, r), &c)| (p, r, c))
        .collect()
}

fn tail_note(g: &BlockGroup) -> String {
    format!("all coordinates of blocks >= {}", g.head().len())
}

/// `G = G_0 ⊕ G_1` with `G_0` finite and `G_1` a finite sum of `ℤ(p^r)^(ω)`.
pub fn split_lambda(g: &BlockGroup) -> Result<Decomposition, DecomposeError> {
    if !g.is_bounded() {
        return Err(DecomposeError::Unbounded);
    }
    if g.is_finite() {
        return Err(DecomposeError::FiniteInput);
    }
    let classes = g.summand_classes()?;
    let mut g0 = Vec::new();
    let mut g1 = Vec::new();
    let mut counted: BTreeMap<(u64, u32), usize> = BTreeMap::new();
    let coords = head_coords(g)?;
    for &(c, n) in &coords {
        for (p, r) in factorize(n) {
            let q = p.pow(r);
            let x = coord_element(g, c, (n / q) as i64);
            *counted.entry((p, r)).or_default() += 1;
            if classes[&(p, r)].is_omega() {
                g1.push(x);
            } else {
                g0.push(x);
            }
        }
    }
    let mut cert = Certificate::default();
    cert.check(
        "G_0 and head part of G_1 intersect trivially",
        zlattice::intersection(g, &g0, &g1)?.is_empty(),
    );
    let all: Vec<Element> = coords
        .iter()
        .map(|&(c, _)| coord_element(g, c, 1))
        .collect();
    let union: Vec<Element> = g0.iter().chain(&g1).cloned().collect();
    cert.check(
        "parts generate the head",
        zlattice::same_subgroup(g, &all, &union)?,
    );
    let preserved = classes.iter().all(|(k, card)| match card {
        Card::Finite(n) => counted.get(k).copied().unwrap_or(0) == *n,
        Card::Omega => true,
    });
    cert.check("order multiset preserved", preserved);
    let lambda = lambda_classes(&classes);
    let g1_tail = (!matches!(g.tail(), crate::group::TailRule::None)).then(|| tail_note(g));
    Ok(Decomposition {
        relation: Relation::DirectSum,
        parts: vec![
            Part::finite("G_0", g0),
            Part {
                name: "G_1".into(),
                gens: g1,
                tail: g1_tail,
                lambda,
            },
        ],
        certificate: cert,
    })
}

/// `f_i − f_{j(i)}` for `i` in the domain of `jmap`, `f_i` otherwise.
pub fn basis_change(
    g: &BlockGroup,
    basis: &[Element],
    j_set: &BTreeSet<usize>,
    jmap: &BTreeMap<usize, usize>,
) -> Result<Vec<Element>, DecomposeError> {
    for (&i, &j) in jmap {
        if i >= basis.len() || j >= basis.len() {
            return Err(DecomposeError::InvalidInput(format!(
                "index pair ({i}, {j}) out of range"
            )));
        }
        if j_set.contains(&i) || !j_set.contains(&j) {
            return Err(DecomposeError::InvalidInput(format!(
                "need {i} outside J and j({i}) = {j} inside J"
            )));
        }
        let (oi, oj) = (g.order_of(&basis[i]), g.order_of(&basis[j]));
        if oi != oj {
            return Err(DecomposeError::OrderMismatch { i, j, oi, oj });
        }
    }
    let out: Vec<Element> = basis
        .iter()
        .enumerate()
        .map(|(i, f)| match jmap.get(&i) {
            Some(&j) => g.sub(f, &basis[j]),
            None => f.clone(),
        })
        .collect();
    if out.iter().any(|x| x.is_zero()) || !zlattice::is_independent(g, &out)? {
        return Err(DecomposeError::NotABasis(
            "new elements are dependent".into(),
        ));
    }
    if !zlattice::same_subgroup(g, basis, &out)? {
        return Err(DecomposeError::NotABasis(
            "new elements span a different subgroup".into(),
        ));
    }
    Ok(out)
}

/// Evidence that `H` cannot be a radical: `x ↦ m·x` has finite image on `G`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NecessityWitness {
    pub prime: u64,
    pub m: u64,
    /// `|m·G|`, `None` if infinite (which would refute the witness).
    pub image_order: Option<u128>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContainsReport {
    pub holds: bool,
    pub witness: Option<NecessityWitness>,
}

/// `|m·G|` computed from the summand classes.
pub fn multiple_image_order(g: &BlockGroup, m: u64) -> Result<Option<u128>, DecomposeError> {
    let mut acc: u128 = 1;
    for (&(p, r), &card) in &g.summand_classes()? {
        let q = p.pow(r);
        let img = q / num_integer::gcd(m, q);
        if img == 1 {
            continue;
        }
        match card {
            Card::Omega => return Ok(None),
            Card::Finite(n) => {
                for _ in 0..n {
                    acc = acc.saturating_mul(img as u128);
                }
            }
        }
    }
    Ok(Some(acc))
}

fn witness_for(g: &BlockGroup, p: u64, b_p: u32) -> Result<NecessityWitness, DecomposeError> {
    let exp = g.exponent().finite().ok_or(DecomposeError::Unbounded)?;
    let n_p = crate::group::valuation(exp, p);
    let m = if n_p >= b_p {
        exp / p.pow(n_p - b_p + 1)
    } else {
        exp
    };
    Ok(NecessityWitness {
        prime: p,
        m,
        image_order: multiple_image_order(g, m)?,
    })
}

/// Whether `G` contains `ℤ(b)^(ω)`: for every `p^e ∥ b` infinitely many
/// primary summands of order at least `p^e`.
pub fn contains_z_exp_h_omega(g: &BlockGroup, b: u64) -> Result<ContainsReport, DecomposeError> {
    if !g.is_bounded() {
        return Err(DecomposeError::Unbounded);
    }
    let classes = g.summand_classes()?;
    for (p, e) in factorize(b) {
        let omega = classes
            .iter()
            .any(|(&(q, r), c)| q == p && r >= e && c.is_omega());
        if !omega {
            return Ok(ContainsReport {
                holds: false,
                witness: Some(witness_for(g, p, e)?),
            });
        }
    }
    Ok(ContainsReport {
        holds: true,
        witness: None,
    })
}

/// Whether every leading Ulm–Kaplansky invariant of `G` is infinite.
pub fn minap_admissible(g: &BlockGroup) -> Result<ContainsReport, DecomposeError> {
    if !g.is_bounded() {
        return Err(DecomposeError::Unbounded);
    }
    if g.is_finite() {
        return Err(DecomposeError::FiniteInput);
    }
    for (p, lead) in g.ulm_kaplansky_leading()? {
        if !lead.count.is_omega() {
            return Ok(ContainsReport {
                holds: false,
                witness: Some(witness_for(g, p, lead.exponent)?),
            });
        }
    }
    Ok(ContainsReport {
        holds: true,
        witness: None,
    })
}

/// Every element of `⟨gens⟩` (frame vectors), or `None` past the budget.
pub(crate) fn enumerate_subgroup(frame: &Frame, gens: &[Vec<BigInt>]) -> Option<Vec<Vec<BigInt>>> {
    let basis = frame.cyclic_basis(gens);
    let mut total: usize = 1;
    let mut orders = Vec::new();
    for (_, o) in &basis {
        let o = o.as_ref()?.to_usize()?;
        total = total.checked_mul(o).filter(|&t| t <= ENUM_BUDGET)?;
        orders.push(o);
    }
    let mut out = Vec::with_capacity(total);
    let mut digits = vec![0usize; basis.len()];
    let vecs: Vec<Vec<BigInt>> = basis.into_iter().map(|(v, _)| v).collect();
    for _ in 0..total {
        let coeffs: Vec<BigInt> = digits.iter().map(|&d| BigInt::from(d)).collect();
        out.push(frame.combine(&coeffs, &vecs));
        for (d, &o) in digits.iter_mut().zip(&orders) {
            *d += 1;
            if *d < o {
                break;
            }
            *d = 0;
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{Block, TailRule};

    fn group(head: &[u64], tail: Option<u64>) -> BlockGroup {
        BlockGroup::new(
            head.iter().map(|&n| Block::finite(n, &[])).collect(),
            tail.map_or(TailRule::None, |n| TailRule::Const(Block::finite(n, &[]))),
            None,
        )
        .unwrap()
    }

    #[test]
    fn split_lambda_examples() {
        let g = group(&[4, 4, 4], Some(2));
        let d = split_lambda(&g).unwrap();
        assert!(d.certificate.all_passed());
        assert_eq!(d.part("G_0").unwrap().gens.len(), 3);
        let g1 = d.part("G_1").unwrap();
        assert!(g1.gens.is_empty());
        assert_eq!(g1.lambda, vec![(2, 1, Card::Omega)]);
        let d = split_lambda(&group(&[], Some(2))).unwrap();
        assert!(d.part("G_0").unwrap().gens.is_empty());
        assert!(d.part("G_1").unwrap().satisfies_lambda());
        assert!(matches!(
            split_lambda(&group(&[4; 5], None)),
            Err(DecomposeError::FiniteInput)
        ));
    }

    #[test]
    fn split_lambda_routes_primary_parts() {
        // Z(6) splits into Z(2) (+) Z(3); the Z(2) class is infinite because of the tail
        let g = group(&[6], Some(2));
        let d = split_lambda(&g).unwrap();
        assert!(d.certificate.all_passed());
        assert_eq!(d.part("G_0").unwrap().gens, vec![g.e(0, 2)]);
        assert_eq!(d.part("G_1").unwrap().gens, vec![g.e(0, 3)]);
    }

    #[test]
    fn basis_change_examples() {
        let g = group(&[2, 2, 4], None);
        let basis = vec![g.e(0, 1), g.e(1, 1), g.e(2, 1)];
        let j: BTreeSet<usize> = [0].into();
        let out = basis_change(&g, &basis, &j, &[(1, 0)].into()).unwrap();
        assert_eq!(
            out,
            vec![g.e(0, 1), g.sub(&g.e(1, 1), &g.e(0, 1)), g.e(2, 1)]
        );
        assert_eq!(
            basis_change(&g, &basis, &j, &BTreeMap::new()).unwrap(),
            basis
        );
        assert!(matches!(
            basis_change(&g, &basis, &j, &[(2, 0)].into()),
            Err(DecomposeError::OrderMismatch { .. })
        ));
    }

    #[test]
    fn contains_and_minap_examples() {
        let z4w = group(&[], Some(4));
        assert!(contains_z_exp_h_omega(&z4w, 2).unwrap().holds);
        let mixed = group(&[4, 4, 4], Some(2));
        let r = contains_z_exp_h_omega(&mixed, 4).unwrap();
        assert!(!r.holds);
        let w = r.witness.unwrap();
        assert_eq!((w.prime, w.m), (2, 2));
        assert_eq!(w.image_order, Some(8));
        assert!(contains_z_exp_h_omega(&mixed, 1).unwrap().holds);
        let r = minap_admissible(&mixed).unwrap();
        assert!(!r.holds);
        assert_eq!(r.witness.unwrap().m, 2);
        assert!(minap_admissible(&group(&[], Some(2))).unwrap().holds);
        assert!(minap_admissible(&group(&[], Some(6))).unwrap().holds);
        assert!(matches!(
            minap_admissible(&group(&[4], None)),
            Err(DecomposeError::FiniteInput)
        ));
    }
}
