//! `G = ℤ(p^∞) + H` with `H` of finite exponent: split `H = H_0 ⊕ H_1` with
//! `H_0` finite and `(ℤ(p^∞) + H_0) ∩ H_1 = 0`.
//!
//! The Prüfer coordinate is replaced by `ℤ(p^K)`, `K` one more than the largest
//! denominator exponent among the generators; on the subgroup generated this is
//! an isomorphism, so every lattice computation stays exact.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Ratio;
use num_traits::Zero;

use super::{
    basis_change, finite_order, lambda_classes, Certificate, DecomposeError, Decomposition, Part,
    Relation,
};
use crate::group::{
    factorize, valuation, Block, BlockGroup, Card, Coeff, Coord, CyclicOrder, Element, TailRule,
};
use crate::zlattice;

#[derive(Clone, Debug)]
pub struct PruferSplit {
    pub prime: u64,
    pub prufer_block: usize,
    /// One basis element per (order, projection) class with nonzero projection.
    pub representatives: Vec<Element>,
    /// Differences `e_α − e_rep`, lying in the complement of `ℤ(p^∞)`.
    pub v_prime: Vec<Element>,
    /// Elements of `v_prime` needed to absorb the projection of the representatives.
    pub absorbed: Vec<Element>,
    pub v_double: Vec<Element>,
    /// Components of `H` for primes other than `p`.
    pub other_primes: Vec<Element>,
    pub h0: Vec<Element>,
    pub decomposition: Decomposition,
}

struct Aux {
    group: BlockGroup,
    coord: Coord,
    scale: i64,
}

impl Aux {
    fn to_aux(&self, x: &Element) -> Element {
        self.group
            .element(x.entries().iter().map(|(c, v)| {
                if *c == self.coord {
                    let r = v.as_ratio() * Ratio::from_integer(self.scale);
                    (*c, Coeff::Int(r.to_integer()))
                } else {
                    (*c, v.clone())
                }
            }))
            .expect("aux element")
    }

    fn lift_aux(&self, g: &BlockGroup, x: &Element) -> Element {
        g.element(x.entries().iter().map(|(c, v)| {
            if *c == self.coord {
                (
                    *c,
                    Coeff::Frac(Ratio::new(v.as_int().unwrap_or(0), self.scale)),
                )
            } else {
                (*c, v.clone())
            }
        }))
        .expect("group element")
    }

    fn projection(&self, x: &Element) -> Ratio<i64> {
        Ratio::new(x.int_at(self.coord), self.scale)
    }
}

fn find_prufer(g: &BlockGroup) -> Result<(usize, u64), DecomposeError> {
    let mut found = None;
    for (j, b) in g.head().iter().enumerate() {
        match b.e_order {
            CyclicOrder::Prufer(p) if found.is_none() => found = Some((j, p)),
            CyclicOrder::Prufer(_) => {
                return Err(DecomposeError::InvalidInput(
                    "more than one Prufer coordinate".into(),
                ))
            }
            _ => {}
        }
    }
    found.ok_or_else(|| DecomposeError::InvalidInput("no Prufer coordinate".into()))
}

/// Splits `H = ⟨h_gens⟩ (+ all tail coordinates when `h_tail`)` inside `ℤ(p^∞) + H`.
pub fn prufer_split(
    g: &BlockGroup,
    h_gens: &[Element],
    h_tail: bool,
    window: usize,
) -> Result<PruferSplit, DecomposeError> {
    let (jp, p) = find_prufer(g)?;
    let head = g.head().len();
    let h_gens: Vec<Element> = h_gens
        .iter()
        .map(|x| g.canonicalize(x))
        .collect::<Result<_, _>>()?;
    if h_gens.iter().any(|x| g.order_of(x).finite().is_none()) {
        return Err(DecomposeError::ExpInfinite);
    }
    if h_tail {
        match g.tail() {
            TailRule::Const(b) if b.e_order.finite().is_some() => {}
            TailRule::None => {}
            _ => return Err(DecomposeError::ExpInfinite),
        }
        if h_gens
            .iter()
            .any(|x| x.max_block().is_some_and(|b| b >= head))
        {
            return Err(DecomposeError::InvalidInput(
                "with the tail included, generators must live on head blocks".into(),
            ));
        }
    }
    if g.head()
        .iter()
        .enumerate()
        .any(|(j, b)| j != jp && b.e_order == CyclicOrder::Infinite)
    {
        return Err(DecomposeError::InvalidInput(
            "Z coordinates are not allowed here".into(),
        ));
    }
    let coord = Coord::e(jp);
    let k_exp = h_gens
        .iter()
        .filter_map(|x| x.coeff(coord))
        .map(|c| valuation(c.as_ratio().denom().unsigned_abs(), p))
        .max()
        .unwrap_or(0)
        + 1;
    let scale = p
        .checked_pow(k_exp)
        .filter(|&s| s <= i64::MAX as u64)
        .ok_or_else(|| DecomposeError::InvalidInput("Prufer denominators too large".into()))?;
    let mut blocks: Vec<Block> = g.head().to_vec();
    blocks[jp] = Block::new(CyclicOrder::Finite(scale), blocks[jp].h_orders.clone());
    let aux = Aux {
        group: BlockGroup::new(blocks, TailRule::None, None)?,
        coord,
        scale: scale as i64,
    };
    let ag = &aux.group;
    let gens: Vec<Element> = h_gens.iter().map(|x| aux.to_aux(x)).collect();
    let basis = zlattice::subgroup_basis(ag, &gens)?;

    // primary split of H
    let mut hp: Vec<(Element, u64)> = Vec::new();
    let mut other = Vec::new();
    for (x, o) in &basis {
        let n = o.finite().ok_or(DecomposeError::ExpInfinite)?;
        let a = valuation(n, p);
        let q = p.pow(a);
        if a > 0 {
            hp.push((ag.smul((n / q) as i64, x), q));
        }
        if n / q > 1 {
            other.push(ag.smul(q as i64, x));
        }
    }

    // classes by (order, projection); the zero-projection class needs no representative
    let mut classes: BTreeMap<(u64, Ratio<i64>), Vec<usize>> = BTreeMap::new();
    for (i, (x, o)) in hp.iter().enumerate() {
        classes.entry((*o, aux.projection(x))).or_default().push(i);
    }
    let mut reps = Vec::new();
    let mut jset = BTreeSet::new();
    let mut jmap = BTreeMap::new();
    for ((_, proj), members) in &classes {
        if proj.is_zero() {
            continue;
        }
        jset.insert(members[0]);
        reps.push(members[0]);
        for &i in &members[1..] {
            jmap.insert(i, members[0]);
        }
    }
    let hp_elems: Vec<Element> = hp.iter().map(|(x, _)| x.clone()).collect();
    let mut cert = Certificate {
        window: Some(window),
        ..Certificate::default()
    };
    let changed = if hp_elems.is_empty() {
        Vec::new()
    } else {
        basis_change(ag, &hp_elems, &jset, &jmap)?
    };
    // basis_change has already verified independence and equal span
    cert.check(
        "representative differences form a basis of H_p",
        changed.len() == hp_elems.len(),
    );
    let rep_set: BTreeSet<usize> = reps.iter().copied().collect();
    let h_prime: Vec<Element> = reps.iter().map(|&i| changed[i].clone()).collect();
    let v_prime: Vec<Element> = (0..changed.len())
        .filter(|i| !rep_set.contains(i))
        .map(|i| changed[i].clone())
        .collect();
    cert.check(
        "differences have zero projection",
        v_prime.iter().all(|v| v.int_at(coord) == 0),
    );

    // projection of the representatives to the complement, and its meet with V'
    let pv = |x: &Element| x.filter(|c| c != coord);
    let pv_h: Vec<Element> = h_prime.iter().map(pv).collect();
    let meet = zlattice::intersection(ag, &pv_h, &v_prime)?;
    let mut absorbing: BTreeSet<usize> = BTreeSet::new();
    for y in &meet {
        let coeffs = zlattice::membership(ag, &v_prime, y)?.expect("intersection lies in V'");
        for (i, c) in coeffs.iter().enumerate() {
            let o = finite_order(ag, &v_prime[i]) as i64;
            if c.rem_euclid(o) != 0 {
                absorbing.insert(i);
            }
        }
    }
    if absorbing.len() > window {
        return Err(DecomposeError::WindowInsufficient(format!(
            "absorbing set has {} elements, window {window}",
            absorbing.len()
        )));
    }
    let r: Vec<Element> = absorbing.iter().map(|&i| v_prime[i].clone()).collect();
    let v2: Vec<Element> = (0..v_prime.len())
        .filter(|i| !absorbing.contains(i))
        .map(|i| v_prime[i].clone())
        .collect();
    let h2: Vec<Element> = h_prime.iter().chain(&r).cloned().collect();
    let pv_h2: Vec<Element> = h2.iter().map(pv).collect();
    cert.check(
        "(Z(p^inf) + H'') meets V'' trivially",
        zlattice::intersection(ag, &pv_h2, &v2)?.is_empty(),
    );
    cert.check(
        "H'' and V'' intersect trivially",
        zlattice::intersection(ag, &h2, &v2)?.is_empty(),
    );

    let h0_aux: Vec<Element> = h2.iter().chain(&v2).chain(&other).cloned().collect();
    cert.check(
        "H_0 generates H on the head",
        zlattice::same_subgroup(ag, &h0_aux, &gens)?,
    );
    let h0: Vec<Element> = h0_aux.iter().map(|x| aux.lift_aux(g, x)).collect();

    let mut h1 = Part::finite("H_1", Vec::new());
    if h_tail && !matches!(g.tail(), TailRule::None) {
        if let TailRule::Const(b) = g.tail() {
            let mut classes: BTreeMap<(u64, u32), Card> = BTreeMap::new();
            for n in b
                .e_order
                .finite()
                .into_iter()
                .chain(b.h_orders.iter().copied())
            {
                for (q, e) in factorize(n) {
                    classes.insert((q, e), Card::Omega);
                }
            }
            h1.lambda = lambda_classes(&classes);
        }
        h1.tail = Some(super::tail_note(g));
        cert.check("H_1 lives on tail blocks disjoint from H_0", true);
    }
    let mut g_part = Part::finite("Z(p^inf)+H_0", h0.clone());
    g_part.tail = Some(format!("Z({p}^inf) at e[{jp}]"));
    cert.notes.push(format!(
        "{} classes, {} absorbed differences",
        classes.len(),
        absorbing.len()
    ));
    let back = |xs: &[Element]| -> Vec<Element> { xs.iter().map(|x| aux.lift_aux(g, x)).collect() };
    Ok(PruferSplit {
        prime: p,
        prufer_block: jp,
        representatives: back(&h_prime),
        v_prime: back(&v_prime),
        absorbed: back(&r),
        v_double: back(&v2),
        other_primes: back(&other),
        h0,
        decomposition: Decomposition {
            relation: Relation::DirectSum,
            parts: vec![g_part, h1],
            certificate: cert,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prufer_plus(h: &[u64], tail: Option<u64>) -> BlockGroup {
        BlockGroup::new(
            vec![Block::new(CyclicOrder::Prufer(2), h.to_vec())],
            tail.map_or(TailRule::None, |n| TailRule::Const(Block::finite(n, &[]))),
            None,
        )
        .unwrap()
    }

    #[test]
    fn single_generator_with_projection() {
        let g = prufer_plus(&[2], None);
        let h = g.add(&g.prufer(0, 1, 2).unwrap(), &g.h(0, 1, 1));
        let s = prufer_split(&g, std::slice::from_ref(&h), false, 8).unwrap();
        assert!(s.decomposition.certificate.all_passed());
        assert_eq!(s.representatives, vec![h.clone()]);
        assert!(s.v_prime.is_empty());
        assert!(s.decomposition.part("H_1").unwrap().gens.is_empty());
        assert_eq!(s.h0.len(), 1);
        assert_eq!(g.order_of(&s.h0[0]), crate::group::Order::Finite(2));
    }

    #[test]
    fn zero_projection_keeps_generators() {
        let g = prufer_plus(&[2, 4], None);
        let gens = vec![g.h(0, 1, 1), g.h(0, 2, 1)];
        let s = prufer_split(&g, &gens, false, 8).unwrap();
        assert!(s.decomposition.certificate.all_passed());
        assert!(s.representatives.is_empty());
        assert_eq!(s.v_prime.len(), 2);
        assert!(s.v_prime.iter().all(|v| v.coeff(Coord::e(0)).is_none()));
    }

    #[test]
    fn equal_class_moves_difference() {
        let g = prufer_plus(&[2, 2], None);
        let half = g.prufer(0, 1, 2).unwrap();
        let gens = vec![g.add(&half, &g.h(0, 1, 1)), g.add(&half, &g.h(0, 2, 1))];
        let s = prufer_split(&g, &gens, false, 8).unwrap();
        assert!(s.decomposition.certificate.all_passed());
        assert_eq!(s.representatives.len(), 1);
        assert_eq!(s.v_prime.len(), 1);
        assert!(s.v_prime[0].coeff(Coord::e(0)).is_none());
    }

    #[test]
    fn tail_becomes_lambda_part() {
        let g = prufer_plus(&[], Some(2));
        let s = prufer_split(&g, &[], true, 8).unwrap();
        let h1 = s.decomposition.part("H_1").unwrap();
        assert!(h1.satisfies_lambda());
        assert!(s.h0.is_empty());
    }

    #[test]
    fn infinite_exponent_rejected() {
        let g = BlockGroup::new(
            vec![Block::new(CyclicOrder::Prufer(2), vec![])],
            TailRule::Geometric {
                p: 2,
                start_exp: 1,
                h_orders: vec![],
            },
            None,
        )
        .unwrap();
        assert!(matches!(
            prufer_split(&g, &[], true, 8),
            Err(DecomposeError::ExpInfinite)
        ));
    }
}
