//! One step of peeling a summand `H_0 + ⟨e_0⟩` off `G = ⟨A⟩ + H`, where `G` is
//! a finite truncation of a `p`-group, `A` is independent with orders either
//! strictly increasing from `exp H` on or all equal to `exp H`.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;

use super::{enumerate_subgroup, finite_order, Certificate, DecomposeError};
use crate::group::{factorize, valuation, BlockGroup, Element};
use crate::zlattice::{self, Frame};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeelInput {
    pub a: Vec<Element>,
    pub h: Vec<Element>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PeelHypothesis {
    /// `exp H ≤ o(g_0) < o(g_1) < …`
    Increasing,
    /// `o(g_i) = exp H` for all `i`.
    Constant,
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[allow(clippy::large_enum_variant)]
pub enum PeelCase {
    /// `H` trivial: the summand is `⟨e_0⟩` alone.
    EmptyH,
    /// `H ∩ ⟨g_{n0}, g_{n0+1}, …⟩ = 0` early enough to shift past `n0`.
    Shift { n0: usize },
    /// The tail `⟨g_{k+1}, …⟩ + X_1` already meets the summand trivially.
    TrivialAt { k: usize },
    /// Pairing of maximal-order witnesses; `used` are the witness indices kept.
    MaximalOrder {
        m: u32,
        h: Element,
        witnesses: Vec<usize>,
        used: Vec<usize>,
        k: usize,
    },
}

#[derive(Clone, Debug)]
pub struct PeelStep {
    pub case: PeelCase,
    pub hypothesis: PeelHypothesis,
    pub prime: u64,
    pub e0: Element,
    pub h0: Vec<Element>,
    pub remainder: PeelInput,
    pub certificate: Certificate,
}

fn hyp(msg: impl Into<String>) -> DecomposeError {
    DecomposeError::HypothesisFail(msg.into())
}

fn window_err(msg: impl Into<String>) -> DecomposeError {
    DecomposeError::WindowInsufficient(msg.into())
}

fn vec_order(frame: &Frame, v: &[BigInt]) -> u64 {
    v.iter().zip(frame.moduli()).fold(1u64, |acc, (x, &n)| {
        let x = x
            .mod_floor(&BigInt::from(n))
            .to_u64()
            .expect("reduced coordinate");
        acc.lcm(&(n / x.gcd(&n)))
    })
}

fn meets_trivially(g: &BlockGroup, a: &[Element], b: &[Element]) -> Result<bool, DecomposeError> {
    Ok(zlattice::intersection(g, a, b)?.is_empty())
}

/// Coefficients of `y` over `gens` (independent), reduced mod the generator orders.
fn coords_over(
    frame: &Frame,
    g: &BlockGroup,
    gens: &[Element],
    y: &[BigInt],
) -> Result<Vec<u64>, DecomposeError> {
    let vs = frame.vectors(gens)?;
    let c = frame
        .solve(&vs, y)
        .ok_or_else(|| window_err("witness outside the generated subgroup"))?;
    Ok(c.iter()
        .zip(gens)
        .map(|(c, x)| {
            let o = BigInt::from(finite_order(g, x));
            c.mod_floor(&o).to_u64().expect("reduced coefficient")
        })
        .collect())
}

/// Per `k`: the tail `g_{k+1}, …` of `A`, and the ambiguity of a witness `y_k`
/// (elements of that tail that cancel against `X_1`).
type CosetGens = (Vec<Vec<BigInt>>, Vec<Vec<BigInt>>);

pub fn peel_summand(
    g: &BlockGroup,
    input: &PeelInput,
    window: usize,
) -> Result<PeelStep, DecomposeError> {
    let a: Vec<Element> = input
        .a
        .iter()
        .map(|x| g.canonicalize(x))
        .collect::<Result<_, _>>()?;
    let h: Vec<Element> = input
        .h
        .iter()
        .map(|x| g.canonicalize(x))
        .filter(|x| !x.as_ref().is_ok_and(|x| x.is_zero()))
        .collect::<Result<_, _>>()?;
    if a.len() < 2 {
        return Err(window_err(
            "A needs at least two elements in the truncation",
        ));
    }
    let frame = Frame::spanning(g, a.iter().chain(&h))?;
    if frame.moduli().contains(&0) {
        return Err(hyp("G must be a torsion truncation"));
    }
    let mut primes = BTreeSet::new();
    for x in a.iter().chain(&h) {
        let o = finite_order(g, x);
        if o <= 1 {
            return Err(hyp("A contains zero"));
        }
        primes.extend(factorize(o).into_iter().map(|(p, _)| p));
    }
    if primes.len() != 1 {
        return Err(hyp("G must be a p-group"));
    }
    let p = *primes.iter().next().expect("one prime");
    if !zlattice::is_independent(g, &a)? {
        return Err(hyp("A is not independent"));
    }
    let hb: Vec<Element> = zlattice::subgroup_basis(g, &h)?
        .into_iter()
        .map(|(x, _)| x)
        .collect();
    let exp_h = hb.iter().map(|x| finite_order(g, x)).max().unwrap_or(1);
    let orders: Vec<u64> = a.iter().map(|x| finite_order(g, x)).collect();
    let hypothesis = if orders.iter().all(|&o| o == exp_h) {
        PeelHypothesis::Constant
    } else if orders[0] >= exp_h && orders.windows(2).all(|w| w[0] < w[1]) {
        PeelHypothesis::Increasing
    } else if hb.is_empty() && orders.iter().all(|&o| o == orders[0]) {
        PeelHypothesis::Constant
    } else {
        return Err(hyp(
            "orders of A are neither constant = exp H nor strictly increasing from exp H",
        ));
    };
    let mut cert = Certificate {
        window: Some(window),
        ..Certificate::default()
    };
    let len = a.len();

    let (case, e0, h0, remainder) = if hb.is_empty() {
        (
            PeelCase::EmptyH,
            a[0].clone(),
            Vec::new(),
            PeelInput {
                a: a[1..].to_vec(),
                h: Vec::new(),
            },
        )
    } else {
        let mut n0 = len;
        for n in 0..len {
            if meets_trivially(g, &hb, &a[n..])? {
                n0 = n;
                break;
            }
        }
        cert.notes.push(format!(
            "finite-intersection test: least n0 = {n0} with H meeting <g_n0,...> trivially, threshold 2*n0 <= {len}"
        ));
        if n0 < len && 2 * n0 <= len {
            (
                PeelCase::Shift { n0 },
                a[n0].clone(),
                vec![hb[0].clone()],
                PeelInput {
                    a: a[n0 + 1..].to_vec(),
                    h: hb[1..].to_vec(),
                },
            )
        } else {
            case_two(g, &frame, p, hypothesis, &a, &hb, window, &mut cert)?
        }
    };

    let mut peeled = h0.clone();
    peeled.push(e0.clone());
    let rest: Vec<Element> = remainder.a.iter().chain(&remainder.h).cloned().collect();
    cert.check(
        "summand meets remainder trivially",
        meets_trivially(g, &peeled, &rest)?,
    );
    cert.check(
        "remainder A independent",
        remainder.a.is_empty() || zlattice::is_independent(g, &remainder.a)?,
    );
    let split: Vec<Element> = h0.iter().chain(&remainder.h).cloned().collect();
    cert.check(
        "H = H_0 (+) H^1",
        zlattice::same_subgroup(g, &hb, &split)? && meets_trivially(g, &h0, &remainder.h)?,
    );
    let rem_orders: Vec<u64> = remainder.a.iter().map(|x| finite_order(g, x)).collect();
    let keeps = match hypothesis {
        PeelHypothesis::Increasing => rem_orders.windows(2).all(|w| w[0] < w[1]),
        PeelHypothesis::Constant => rem_orders.iter().all(|&o| o == orders[0]),
    };
    cert.check("remainder satisfies the same order hypothesis", keeps);
    Ok(PeelStep {
        case,
        hypothesis,
        prime: p,
        e0,
        h0,
        remainder,
        certificate: cert,
    })
}

#[allow(clippy::too_many_arguments)]
fn case_two(
    g: &BlockGroup,
    frame: &Frame,
    p: u64,
    hypothesis: PeelHypothesis,
    a: &[Element],
    hb: &[Element],
    window: usize,
    cert: &mut Certificate,
) -> Result<(PeelCase, Element, Vec<Element>, PeelInput), DecomposeError> {
    let len = a.len();
    let e0 = a[0].clone();
    let full = zlattice::intersection(g, hb, std::slice::from_ref(&e0))?;
    let mut kappa = hb.len() - 1;
    for k in 0..hb.len() {
        let part = zlattice::intersection(g, &hb[..=k], std::slice::from_ref(&e0))?;
        if zlattice::same_subgroup(g, &part, &full)? {
            kappa = k;
            break;
        }
    }
    let h0 = hb[..=kappa].to_vec();
    let x1 = hb[kappa + 1..].to_vec();
    let mut peeled = h0.clone();
    peeled.push(e0.clone());
    let kmax = window.min(len - 2);
    cert.notes
        .push(format!("tail-triviality search over k <= {kmax}"));
    for k in 0..=kmax {
        let tail: Vec<Element> = a[k + 1..].iter().chain(&x1).cloned().collect();
        if meets_trivially(g, &tail, &peeled)? {
            return Ok((
                PeelCase::TrivialAt { k },
                e0,
                h0,
                PeelInput {
                    a: a[k + 1..].to_vec(),
                    h: x1,
                },
            ));
        }
    }

    // maximal m with a nonzero h realised by order-p^m witnesses for at least half of the k
    let pv = frame.vectors(&peeled)?;
    let mut targets: Vec<Element> = enumerate_subgroup(frame, &pv)
        .ok_or_else(|| window_err("summand too large to enumerate"))?
        .iter()
        .map(|v| frame.element(g, v))
        .filter(|x| !x.is_zero())
        .collect();
    targets.sort();
    targets.dedup();
    let xv = frame.vectors(&x1)?;
    let count = kmax + 1;
    let need = count.div_ceil(2);
    // exponents[h][k] = achievable exponents of y_k
    let mut exponents: Vec<Vec<BTreeSet<u32>>> = vec![vec![BTreeSet::new(); count]; targets.len()];
    let mut cosets: Vec<CosetGens> = Vec::with_capacity(count);
    for k in 0..=kmax {
        let yv = frame.vectors(&a[k + 1..])?;
        let gens: Vec<Vec<BigInt>> = yv.iter().chain(&xv).cloned().collect();
        let c_gens: Vec<Vec<BigInt>> = frame
            .relations(&gens)
            .iter()
            .map(|r| frame.combine(&r[..yv.len()], &yv))
            .collect();
        let c = enumerate_subgroup(frame, &c_gens)
            .ok_or_else(|| window_err("witness coset too large to enumerate"))?;
        for (hi, t) in targets.iter().enumerate() {
            let tv = frame.vector(t)?;
            if let Some(sol) = frame.solve(&gens, &tv) {
                let y0 = frame.combine(&sol[..yv.len()], &yv);
                for cv in &c {
                    let mut y: Vec<BigInt> = y0.iter().zip(cv).map(|(u, v)| u + v).collect();
                    frame.reduce(&mut y);
                    exponents[hi][k].insert(valuation(vec_order(frame, &y), p));
                }
            }
        }
        cosets.push((yv, c));
    }
    let mut best: Option<(u32, usize)> = None;
    for (hi, per_k) in exponents.iter().enumerate() {
        let top = per_k
            .iter()
            .flat_map(|s| s.iter().copied())
            .max()
            .unwrap_or(0);
        for m in (1..=top).rev() {
            if per_k.iter().filter(|s| s.contains(&m)).count() >= need {
                if best.is_none_or(|(bm, _)| m > bm) {
                    best = Some((m, hi));
                }
                break;
            }
        }
    }
    let (m, hi) = best.ok_or_else(|| window_err("no h has witnesses for half of the checked k"))?;
    let h = targets[hi].clone();
    let witnesses: Vec<usize> = (0..count)
        .filter(|&k| exponents[hi][k].contains(&m))
        .collect();
    cert.notes.push(format!(
        "maximal m = {m} with {} of {count} witnesses (need {need}); h = {h} (least such element)",
        witnesses.len()
    ));

    // pick witnesses with increasing disjoint supports over A
    let hv = frame.vector(&h)?;
    let mut chosen: Vec<(usize, Vec<u64>)> = Vec::new();
    let mut last_max: Option<usize> = None;
    for &k in &witnesses {
        if last_max.is_some_and(|lm| k < lm) {
            continue;
        }
        let (yv, c) = &cosets[k];
        let gens: Vec<Vec<BigInt>> = yv.iter().chain(&xv).cloned().collect();
        let sol = frame.solve(&gens, &hv).expect("witness exists");
        let y0 = frame.combine(&sol[..yv.len()], yv);
        let mut options: BTreeMap<(usize, Element), Vec<u64>> = BTreeMap::new();
        for cv in c {
            let mut y: Vec<BigInt> = y0.iter().zip(cv).map(|(u, v)| u + v).collect();
            frame.reduce(&mut y);
            if valuation(vec_order(frame, &y), p) != m {
                continue;
            }
            let coeffs = coords_over(frame, g, &a[k + 1..], &y)?;
            let top = coeffs.iter().rposition(|&c| c != 0).unwrap_or(0) + k + 1;
            let mut full = vec![0u64; a.len()];
            full[k + 1..].copy_from_slice(&coeffs);
            options.insert((top, frame.element(g, &y)), full);
        }
        let Some(((top, _), full)) = options.into_iter().next() else {
            continue;
        };
        chosen.push((k, full));
        last_max = Some(top);
    }
    if chosen.len() < 2 {
        return Err(window_err(
            "fewer than two witnesses with disjoint supports",
        ));
    }
    let used: Vec<usize> = chosen.iter().map(|(k, _)| *k).collect();

    // y'_k = y_k / p^{t_k}
    let mut ys = Vec::new();
    for (_, coeffs) in &chosen {
        let t = coeffs
            .iter()
            .filter(|&&c| c != 0)
            .map(|&c| valuation(c, p))
            .min()
            .unwrap_or(0);
        let q = p.pow(t);
        let y = g.combination(coeffs.iter().zip(a).map(|(&c, x)| ((c / q) as i64, x)));
        let ok = finite_order(g, &y) == p.pow(t + m);
        cert.check(format!("o(y') = p^(t+m) for t = {t}"), ok);
        ys.push((y, t));
    }
    let mut gp = Vec::new();
    for pair in ys.chunks_exact(2) {
        let ((y0, t0), (y1, t1)) = (&pair[0], &pair[1]);
        let g_k = match hypothesis {
            PeelHypothesis::Increasing => {
                if t1 < t0 {
                    return Err(window_err(
                        "witness exponents not increasing inside the window",
                    ));
                }
                g.sub(&g.smul(p.pow(t1 - t0) as i64, y1), y0)
            }
            PeelHypothesis::Constant => g.sub(y1, y0),
        };
        cert.check(
            "o(g'_k) = o(y'_2k)",
            finite_order(g, &g_k) == finite_order(g, y0),
        );
        gp.push(g_k);
    }
    cert.check("g' independent", zlattice::is_independent(g, &gp)?);
    for k in 0..gp.len() {
        let tail: Vec<Element> = gp[k..].iter().chain(&x1).cloned().collect();
        if meets_trivially(g, &tail, &peeled)? {
            return Ok((
                PeelCase::MaximalOrder {
                    m,
                    h,
                    witnesses,
                    used,
                    k,
                },
                e0,
                h0,
                PeelInput {
                    a: gp[k..].to_vec(),
                    h: x1,
                },
            ));
        }
    }
    Err(window_err(
        "no k with (Y'_k + X_1) meeting the summand trivially inside the window",
    ))
}
