//! Routes `(G, H)` to the construction of a subgroup `G_0 ⊇ H` in block form
//! `⊕_k (⟨h_k⟩ + ⟨e_k⟩)`, plus a part `X` that is a finite sum of `ℤ(p^r)^(ω)`.

use std::collections::BTreeMap;

use super::{
    contains_z_exp_h_omega, finite_order, lambda_classes, peel_summand, prufer_split, Certificate,
    DecomposeError, Part, PeelInput, PruferSplit,
};
use crate::group::{
    factorize, lcm_u64, valuation, Block, BlockGroup, Card, Coord, CyclicOrder, Element, TailRule,
};
use crate::zlattice;

/// `H = ⟨gens⟩`, plus every bounded-order tail coordinate when `tail` is set.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SubgroupSpec {
    pub gens: Vec<Element>,
    pub tail: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DispatchCase {
    /// `G` has an element of infinite order.
    InfiniteOrder,
    /// `G` has a Prüfer coordinate.
    Prufer,
    /// Unbounded torsion; the unbounded prime does not divide `exp H`.
    TorsionUnboundedOther { p: u64 },
    /// Unbounded torsion; the unbounded prime divides `exp H`.
    TorsionUnboundedPrime { p: u64 },
    /// Bounded `G` containing `ℤ(exp H)^(ω)`.
    Bounded,
}

/// Truncated block data: `e[k]` and the generators `h[k]` of block `k`.
#[derive(Clone, Debug)]
pub struct BlockFormRecipe {
    pub e: Vec<Element>,
    pub h: Vec<Vec<Element>>,
    /// Abstract group with the same block orders.
    pub group: BlockGroup,
    pub certified_up_to: usize,
}

#[derive(Clone, Debug)]
pub struct DispatchReport {
    pub case: DispatchCase,
    /// Finite-exponent part of `H` handled by the recipe.
    pub h0: Vec<Element>,
    pub x: Option<Part>,
    pub recipe: Option<BlockFormRecipe>,
    pub prufer: Option<PruferSplit>,
    pub certificate: Certificate,
}

fn window_blocks(g: &BlockGroup, window: usize) -> usize {
    let want = g.head().len() + window;
    g.num_blocks().map_or(want, |n| n.min(want))
}

/// Finite-order coordinates of blocks `from..to`; `e_slots` selects e or h slots.
fn coords_in(
    g: &BlockGroup,
    from: usize,
    to: usize,
    e_slots: bool,
    h_slots: bool,
) -> Result<Vec<(Coord, u64)>, DecomposeError> {
    let mut out = Vec::new();
    for j in from..to {
        for (c, o) in g.block_coords(j)? {
            let wanted = if c.slot == 0 { e_slots } else { h_slots };
            if let (true, CyclicOrder::Finite(n)) = (wanted, o) {
                out.push((c, n));
            }
        }
    }
    Ok(out)
}

fn unit(g: &BlockGroup, c: Coord, k: u64) -> Element {
    super::coord_element(g, c, k as i64)
}

/// The `λ`-tagged part made of the bounded tail coordinates.
fn tail_part(g: &BlockGroup) -> Part {
    let orders: Vec<u64> = match g.tail() {
        TailRule::None => Vec::new(),
        TailRule::Const(b) => b
            .e_order
            .finite()
            .into_iter()
            .chain(b.h_orders.iter().copied())
            .collect(),
        TailRule::Geometric { h_orders, .. } => h_orders.clone(),
    };
    let mut classes = BTreeMap::new();
    for n in orders {
        for (p, r) in factorize(n) {
            classes.insert((p, r), Card::Omega);
        }
    }
    Part {
        name: "X".into(),
        gens: Vec::new(),
        tail: Some(super::tail_note(g)),
        lambda: lambda_classes(&classes),
    }
}

fn exponent_of(g: &BlockGroup, xs: &[Element]) -> Result<u64, DecomposeError> {
    xs.iter().try_fold(1u64, |acc, x| match finite_order(g, x) {
        0 => Err(DecomposeError::ExpInfinite),
        o => Ok(lcm_u64(acc, o)),
    })
}

fn build_recipe(
    g: &BlockGroup,
    e: Vec<Element>,
    h: Vec<Vec<Element>>,
    window: usize,
) -> Result<BlockFormRecipe, DecomposeError> {
    let mut blocks = Vec::new();
    for (ek, hk) in e.iter().zip(&h) {
        let eo = match finite_order(g, ek) {
            0 => CyclicOrder::Infinite,
            n => CyclicOrder::Finite(n),
        };
        let ho: Vec<u64> = hk.iter().map(|x| finite_order(g, x)).collect();
        blocks.push(Block::new(eo, ho));
    }
    Ok(BlockFormRecipe {
        group: BlockGroup::new(blocks, TailRule::None, None)?,
        e,
        h,
        certified_up_to: window,
    })
}

/// Peels `⟨a⟩ + h` repeatedly; returns `(e_k, h_k)` per step.
fn peel_all(
    g: &BlockGroup,
    a: Vec<Element>,
    h: Vec<Element>,
    window: usize,
    cert: &mut Certificate,
    label: &str,
) -> Result<(Vec<Element>, Vec<Vec<Element>>), DecomposeError> {
    let mut input = PeelInput { a, h };
    let (mut e, mut hs) = (Vec::new(), Vec::new());
    let mut step = 0;
    while input.a.len() >= 2 && step < window {
        let s = peel_summand(g, &input, window)?;
        cert.merge(&format!("{label} step {step}"), s.certificate);
        e.push(s.e0);
        hs.push(s.h0);
        input = s.remainder;
        step += 1;
        if input.h.is_empty() {
            break;
        }
    }
    if !input.h.is_empty() && input.a.len() == 1 {
        // truncation boundary: the last block absorbs what is left of H
        let ok = zlattice::is_independent(g, &input.a)?;
        cert.check(format!("{label} boundary block independent"), ok);
        cert.notes.push(format!(
            "{label}: last block closes the truncation after {step} steps"
        ));
        e.push(input.a.remove(0));
        hs.push(std::mem::take(&mut input.h));
    }
    if !input.h.is_empty() {
        return Err(DecomposeError::WindowInsufficient(format!(
            "{label}: {} generators of H left after {step} peeling steps",
            input.h.len()
        )));
    }
    Ok((e, hs))
}

pub fn dispatch_case(
    g: &BlockGroup,
    spec: &SubgroupSpec,
    window: usize,
) -> Result<DispatchReport, DecomposeError> {
    let head = g.head().len();
    let gens: Vec<Element> = spec
        .gens
        .iter()
        .map(|x| g.canonicalize(x))
        .collect::<Result<_, _>>()?;
    let gen_end = gens
        .iter()
        .filter_map(|x| x.max_block())
        .max()
        .map_or(0, |b| b + 1);
    if spec.tail && gen_end > head {
        return Err(DecomposeError::InvalidInput(
            "with the tail included, explicit generators must live on head blocks".into(),
        ));
    }
    let mut cert = Certificate {
        window: Some(window),
        ..Certificate::default()
    };
    let tail_orders = match g.tail() {
        TailRule::Const(b) => Some(b.e_order),
        _ => None,
    };
    let infinite = g
        .head()
        .iter()
        .map(|b| b.e_order)
        .chain(tail_orders)
        .position(|o| o == CyclicOrder::Infinite);
    let has_prufer = g
        .head()
        .iter()
        .any(|b| matches!(b.e_order, CyclicOrder::Prufer(_)));
    let x_part = spec.tail.then(|| tail_part(g));

    if let Some(j) = infinite {
        if spec.tail && tail_orders == Some(CyclicOrder::Infinite) {
            return Err(DecomposeError::ExpInfinite);
        }
        exponent_of(g, &gens)?;
        let e = super::coord_element(g, Coord::e(j), 1);
        cert.check(
            "<e> meets H trivially",
            zlattice::intersection(g, std::slice::from_ref(&e), &gens)?.is_empty(),
        );
        cert.notes
            .push(format!("X is nontrivial iff H is infinite: {}", spec.tail));
        let recipe = build_recipe(g, vec![e], vec![gens.clone()], window)?;
        return Ok(DispatchReport {
            case: DispatchCase::InfiniteOrder,
            h0: gens,
            x: x_part,
            recipe: Some(recipe),
            prufer: None,
            certificate: cert,
        });
    }

    if has_prufer {
        let split = prufer_split(g, &gens, spec.tail, window)?;
        cert.merge("prufer split", split.decomposition.certificate.clone());
        let x = split
            .decomposition
            .part("H_1")
            .cloned()
            .filter(|p| p.tail.is_some() || !p.gens.is_empty());
        return Ok(DispatchReport {
            case: DispatchCase::Prufer,
            h0: split.h0.clone(),
            x,
            recipe: None,
            prufer: Some(split),
            certificate: cert,
        });
    }

    let end = window_blocks(g, window).max(gen_end);
    if !g.is_bounded() {
        let TailRule::Geometric { p, .. } = g.tail() else {
            return Err(DecomposeError::InvalidInput(
                "unbounded torsion needs a geometric tail".into(),
            ));
        };
        let p = *p;
        let exp_h = exponent_of(g, &gens)?;
        let exp_h = match (spec.tail, g.tail().h_orders()) {
            (true, hs) => hs.iter().fold(exp_h, |a, &b| lcm_u64(a, b)),
            _ => exp_h,
        };
        let mut tail_e = Vec::new();
        for j in head..end {
            match g.e_order(j)? {
                CyclicOrder::Finite(n) if n >= exp_h => tail_e.push(unit(g, Coord::e(j), 1)),
                CyclicOrder::Finite(_) => {}
                _ => break,
            }
        }
        if valuation(exp_h, p) == 0 {
            cert.check(
                "tail e-coordinates meet H trivially",
                zlattice::intersection(g, &tail_e, &gens)?.is_empty(),
            );
            let mut h = vec![Vec::new(); tail_e.len()];
            if let Some(first) = h.first_mut() {
                *first = gens.clone();
            }
            let recipe = build_recipe(g, tail_e, h, window)?;
            return Ok(DispatchReport {
                case: DispatchCase::TorsionUnboundedOther { p },
                h0: gens,
                x: x_part,
                recipe: Some(recipe),
                prufer: None,
                certificate: cert,
            });
        }
        // split H into its p-part (peeled against the tail) and the rest
        let basis = zlattice::subgroup_basis(g, &gens)?;
        let (mut hp, mut rest) = (Vec::new(), Vec::new());
        for (x, o) in &basis {
            let n = o.finite().ok_or(DecomposeError::ExpInfinite)?;
            let q = p.pow(valuation(n, p));
            if q > 1 {
                hp.push(g.smul((n / q) as i64, x));
            }
            if n / q > 1 {
                rest.push(g.smul(q as i64, x));
            }
        }
        let exp_hp = exponent_of(g, &hp)?;
        let a: Vec<Element> = tail_e
            .into_iter()
            .filter(|x| finite_order(g, x) >= exp_hp)
            .collect();
        let (e, mut h) = peel_all(g, a, hp, window, &mut cert, "p-part")?;
        if let Some(first) = h.first_mut() {
            first.extend(rest);
        }
        check_covers(g, &e, &h, &gens, &mut cert)?;
        let recipe = build_recipe(g, e, h, window)?;
        return Ok(DispatchReport {
            case: DispatchCase::TorsionUnboundedPrime { p },
            h0: gens,
            x: x_part,
            recipe: Some(recipe),
            prufer: None,
            certificate: cert,
        });
    }

    // bounded: H may include the tail, expanded to the window
    let mut h_all = gens.clone();
    if spec.tail {
        h_all.extend(
            coords_in(g, head, end, true, true)?
                .into_iter()
                .map(|(c, _)| unit(g, c, 1)),
        );
    }
    let b = exponent_of(g, &h_all)?;
    let report = contains_z_exp_h_omega(g, b)?;
    if !report.holds {
        let w = report.witness.expect("failing criterion has a witness");
        return Err(DecomposeError::CriterionFail(format!(
            "no Z({b})^(omega) inside G: prime {}, x -> {}x has finite image",
            w.prime, w.m
        )));
    }
    cert.check(format!("G contains Z({b})^(omega)"), true);
    let all_coords = coords_in(g, 0, end, true, true)?;
    let basis = zlattice::subgroup_basis(g, &h_all)?;
    let mut per_prime: Vec<(Vec<Element>, Vec<Vec<Element>>)> = Vec::new();
    for (p, r) in factorize(b) {
        let q = p.pow(r);
        let a: Vec<Element> = all_coords
            .iter()
            .filter(|&&(_, n)| valuation(n, p) >= r)
            .map(|&(c, n)| unit(g, c, n / q))
            .collect();
        let hp: Vec<Element> = basis
            .iter()
            .filter_map(|(x, o)| {
                let n = o.finite()?;
                let qn = p.pow(valuation(n, p));
                (qn > 1).then(|| g.smul((n / qn) as i64, x))
            })
            .collect();
        per_prime.push(peel_all(
            g,
            a,
            hp,
            window,
            &mut cert,
            &format!("prime {p}"),
        )?);
    }
    let (e, h) = if per_prime.is_empty() {
        (Vec::new(), Vec::new())
    } else {
        let len = per_prime.iter().map(|(e, _)| e.len()).min().unwrap_or(0);
        let mut e = Vec::with_capacity(len);
        let mut h = vec![Vec::new(); len];
        for k in 0..len {
            e.push(
                per_prime
                    .iter()
                    .fold(Element::zero(), |acc, (ep, _)| g.add(&acc, &ep[k])),
            );
        }
        for (ep, hp) in &per_prime {
            if hp.iter().skip(len).any(|x| !x.is_empty()) {
                return Err(DecomposeError::WindowInsufficient(format!(
                    "primes peeled {} and {len} summands",
                    ep.len()
                )));
            }
            for (k, hk) in hp.iter().take(len).enumerate() {
                h[k].extend(hk.iter().cloned());
            }
        }
        (e, h)
    };
    check_covers(g, &e, &h, &h_all, &mut cert)?;
    if spec.tail {
        cert.notes
            .push(format!("tail part of H expanded to blocks < {end}"));
    }
    let recipe = build_recipe(g, e, h, window)?;
    Ok(DispatchReport {
        case: DispatchCase::Bounded,
        h0: gens,
        x: None,
        recipe: Some(recipe),
        prufer: None,
        certificate: cert,
    })
}

fn check_covers(
    g: &BlockGroup,
    e: &[Element],
    h: &[Vec<Element>],
    target: &[Element],
    cert: &mut Certificate,
) -> Result<(), DecomposeError> {
    let all: Vec<Element> = e.iter().chain(h.iter().flatten()).cloned().collect();
    cert.check(
        "recipe contains H",
        zlattice::contains_all(g, &all, target)?,
    );
    cert.check(
        "e_k have order >= exp of their h_k",
        e.iter().zip(h).all(|(ek, hk)| {
            let oe = finite_order(g, ek);
            hk.iter()
                .all(|x| oe == 0 || oe.is_multiple_of(finite_order(g, x)))
        }),
    );
    Ok(())
}
