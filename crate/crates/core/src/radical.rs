//! Which finite-support characters the triangular sequence sends to 0, and the
//! radical they cut out: `n(G, d) = s_d(Ĝ)^⊥`, computed block by block.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::constructions::{HSpec, TriangularParams};
use crate::duality::{annihilator_in_g, pair, Character, DualityError, QmodZ};
use crate::group::{lcm_u64, Block, BlockGroup, Coord, CyclicOrder, Element, GroupError, TailRule};
use crate::zlattice::{self, LatticeError};

/// Largest block dual `radical_of` enumerates.
pub const BLOCK_DUAL_CAP: u64 = 4096;

/// Largest finite group `oracle_radical` enumerates.
pub const ORACLE_CAP: u64 = 10_000;

#[derive(Debug, Error)]
pub enum RadicalError {
    #[error("dual of block {block} has {size} characters, cap {BLOCK_DUAL_CAP}")]
    BlockDualTooLarge { block: usize, size: u128 },
    #[error("group too large for the oracle: {0} elements")]
    TooLarge(u128),
    #[error("sequence is not eventually periodic or recurrent within the prefix")]
    NotEventuallyPeriodic,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Duality(#[from] DualityError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SdVerdict {
    /// `(d_n, χ) = 0` for all `n ≥ from_term`: even terms and odd e-ranges have
    /// left the support, and every `b_k` inside the support pairs to 0.
    In {
        from_term: usize,
        checked: Vec<usize>,
    },
    /// `(b_k, χ) ≠ 0` and odd terms carrying `b_k` recur beyond the support.
    NotIn {
        k: usize,
        value: QmodZ,
        witnesses: Vec<usize>,
    },
    Unknown {
        reason: String,
    },
}

impl SdVerdict {
    pub fn kind(&self) -> &'static str {
        match self {
            SdVerdict::In { .. } => "IN",
            SdVerdict::NotIn { .. } => "NOT_IN",
            SdVerdict::Unknown { .. } => "UNKNOWN",
        }
    }
}

/// Least odd half-index whose e-range starts beyond block `b`.
fn odd_escape(params: &TriangularParams, b: usize) -> usize {
    let mut n = 1;
    while params.odd_range(n).start <= b {
        n += 1;
    }
    n
}

/// Decides `χ ∈ s_d` for the triangular sequence of `params`, using odd
/// half-indices up to `n` for the recurrence facts and terms `< 2n + 2` for
/// the empirical cross-check.
pub fn sd_member(
    params: &TriangularParams,
    chi: &Character,
    n: usize,
) -> Result<SdVerdict, RadicalError> {
    let g = params.group();
    let support = chi.support_blocks();
    let Some(&bound) = support.last() else {
        return Ok(SdVerdict::In {
            from_term: 0,
            checked: Vec::new(),
        });
    };
    // pairing values live in the finite group (1/L)ℤ/ℤ, so tending to 0 means eventually 0
    let mut l = 1;
    for &j in &support {
        for (_, o) in g.block_coords(j)? {
            if let CyclicOrder::Finite(q) = o {
                l = lcm_u64(l, q);
            }
        }
    }
    assert_eq!(
        l % chi.order(),
        0,
        "pairing denominators bounded by the support exponent"
    );

    let mut checked = Vec::new();
    let mut k = 0;
    while let Some(c) = params.b_coord(k) {
        if c.block > bound {
            break;
        }
        let value = chi.value(c);
        if !value.is_zero() {
            let witnesses = params.verify_recurrence(k, n, bound);
            if witnesses.is_empty() {
                return Ok(SdVerdict::Unknown {
                    reason: format!(
                        "b_{k} has no odd term with e-range beyond block {bound} up to {n}"
                    ),
                });
            }
            for &w in &witnesses {
                let t = params.term(2 * w + 1)?;
                assert_eq!(pair(chi, &t), value, "recurring odd term pairs like b_{k}");
            }
            return Ok(SdVerdict::NotIn {
                k,
                value,
                witnesses,
            });
        }
        checked.push(k);
        k += 1;
    }
    let even_from = 2 * usize::try_from(params.block_start(bound + 1)?).unwrap_or(usize::MAX);
    let from_term = even_from.max(2 * odd_escape(params, bound) + 1);
    let horizon = 2 * n + 2;
    if from_term >= horizon {
        return Ok(SdVerdict::Unknown {
            reason: format!(
                "terms leave the support only from index {from_term}, beyond {horizon}"
            ),
        });
    }
    for i in from_term..horizon {
        assert!(
            pair(chi, &params.term(i)?).is_zero(),
            "term {i} pairs to 0 past the escape index"
        );
    }
    Ok(SdVerdict::In { from_term, checked })
}

/// Every character of block `j`.
pub fn block_dual(g: &BlockGroup, j: usize) -> Result<Vec<Character>, RadicalError> {
    let mut coords = Vec::new();
    let mut size: u128 = 1;
    for (c, o) in g.block_coords(j)? {
        match o {
            CyclicOrder::Finite(q) => {
                size *= q as u128;
                coords.push((c, q));
            }
            _ => {
                return Err(RadicalError::InvalidInput(format!(
                    "block {j} is not finite"
                )))
            }
        }
    }
    if size > BLOCK_DUAL_CAP as u128 {
        return Err(RadicalError::BlockDualTooLarge { block: j, size });
    }
    let mut out = Vec::with_capacity(size as usize);
    let mut digits = vec![0u64; coords.len()];
    loop {
        let vals = coords
            .iter()
            .zip(&digits)
            .map(|(&(c, q), &d)| (c, QmodZ::new(d as i64, q as i64)));
        out.push(Character::new(g, vals)?);
        let mut i = 0;
        while i < digits.len() {
            digits[i] += 1;
            if digits[i] < coords[i].1 {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
        if i == digits.len() {
            break;
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RadicalTag {
    EqualsH,
    MinAP,
    Other(String),
}

impl std::fmt::Display for RadicalTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RadicalTag::EqualsH => write!(f, "EQUALS_H"),
            RadicalTag::MinAP => write!(f, "MINAP"),
            RadicalTag::Other(s) => write!(f, "OTHER({s})"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RadicalReport {
    pub support: usize,
    pub window: usize,
    /// Generators of the radical's component in each block `0..=support`.
    pub blocks: BTreeMap<usize, Vec<Element>>,
    /// Characters of each block found in `s_d`.
    pub sd_positive: BTreeMap<usize, Vec<Character>>,
    pub tag: RadicalTag,
}

impl RadicalReport {
    /// Only finite-support characters were examined, one block at a time.
    pub fn label(&self) -> &'static str {
        "per-block certified"
    }
}

/// Generators of `H_j` for the construction.
pub fn h_block(params: &TriangularParams, j: usize) -> Vec<Element> {
    let g = params.group();
    match params.hspec() {
        HSpec::SelfE => vec![g.e(j, 1)],
        HSpec::Coordinates => (1..=params.a(j)).map(|i| g.h(j, i, 1)).collect(),
    }
}

/// The radical of `(G, d)` truncated to blocks `0..=support`.
pub fn radical_of(
    params: &TriangularParams,
    support: usize,
    window: usize,
) -> Result<RadicalReport, RadicalError> {
    if window == 0 {
        return Err(RadicalError::InvalidInput(
            "window must be at least 1".into(),
        ));
    }
    let g = params.group();
    let mut sd_positive = BTreeMap::new();
    let mut unknown = Vec::new();
    for j in 0..=support {
        let mut inside = Vec::new();
        for chi in block_dual(g, j)? {
            match sd_member(params, &chi, window)? {
                SdVerdict::In { .. } => inside.push(chi),
                SdVerdict::NotIn { .. } => {}
                SdVerdict::Unknown { reason } => unknown.push(format!("{chi}: {reason}")),
            }
        }
        sd_positive.insert(j, inside);
    }
    let blocks = annihilator_in_g(g, &sd_positive)?;
    let tag = if let Some(first) = unknown.first() {
        RadicalTag::Other(format!(
            "{} characters undecided, e.g. {first}",
            unknown.len()
        ))
    } else {
        let mut differs = Vec::new();
        for (&j, gens) in &blocks {
            if !zlattice::same_subgroup(g, gens, &h_block(params, j))? {
                differs.push(j);
            }
        }
        match (differs.first(), params.hspec()) {
            (Some(j), _) => RadicalTag::Other(format!("radical differs from H on block {j}")),
            (None, HSpec::SelfE) => RadicalTag::MinAP,
            (None, HSpec::Coordinates) => RadicalTag::EqualsH,
        }
    };
    Ok(RadicalReport {
        support,
        window,
        blocks,
        sd_positive,
        tag,
    })
}

/// Blocks `0..=b` of `g` as a finite group.
pub fn truncate(g: &BlockGroup, b: usize) -> Result<BlockGroup, RadicalError> {
    let blocks: Vec<Block> = (0..=b).map(|j| g.block_at(j)).collect::<Result<_, _>>()?;
    Ok(BlockGroup::new(blocks, TailRule::None, None)?)
}

/// Image of `x` in the quotient by the blocks beyond `b`.
pub fn project(x: &Element, b: usize) -> Element {
    x.filter(|c| c.block <= b)
}

/// How the oracle decided which values recur. A period must repeat over at
/// least half of the prefix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TailShape {
    Periodic {
        preperiod: usize,
        period: usize,
    },
    /// The value set of the last half of the prefix equals that of its last quarter.
    Recurrent {
        from: usize,
    },
}

#[derive(Clone, Debug)]
pub struct OracleRadical {
    pub shape: TailShape,
    pub sd_size: usize,
    /// Every element of the radical, sorted.
    pub radical: Vec<Element>,
}

fn tail_shape(d: &[Element]) -> Option<TailShape> {
    let len = d.len();
    for period in 1..=len / 2 {
        let mut preperiod = len - period;
        while preperiod > 0 && d[preperiod - 1] == d[preperiod - 1 + period] {
            preperiod -= 1;
        }
        if len - preperiod >= (2 * period).max(len / 2) {
            return Some(TailShape::Periodic { preperiod, period });
        }
    }
    let half: BTreeSet<&Element> = d[len / 2..].iter().collect();
    let quarter: BTreeSet<&Element> = d[3 * len / 4..].iter().collect();
    (len >= 8 && half == quarter).then_some(TailShape::Recurrent { from: len / 2 })
}

/// Brute force over every character of a finite group: `χ ∈ s_d` iff `χ`
/// kills every recurring value of `d`, and the radical is the joint kernel.
pub fn oracle_radical(
    g: &BlockGroup,
    prefix: &[Element],
    horizon: usize,
) -> Result<OracleRadical, RadicalError> {
    let mut coords: Vec<(Coord, u64)> = Vec::new();
    let mut size: u128 = 1;
    for j in 0..g
        .num_blocks()
        .ok_or_else(|| RadicalError::InvalidInput("group must be finite".into()))?
    {
        for (c, o) in g.block_coords(j)? {
            let q = o
                .finite()
                .ok_or_else(|| RadicalError::InvalidInput("group must be finite".into()))?;
            size *= q as u128;
            coords.push((c, q));
        }
    }
    if size > ORACLE_CAP as u128 {
        return Err(RadicalError::TooLarge(size));
    }
    let d = &prefix[..horizon.min(prefix.len())];
    let shape = tail_shape(d).ok_or(RadicalError::NotEventuallyPeriodic)?;
    let start = match shape {
        TailShape::Periodic { preperiod, .. } => preperiod,
        TailShape::Recurrent { from } => from,
    };
    let l = coords.iter().fold(1, |acc, &(_, q)| lcm_u64(acc, q));
    let scale: Vec<u64> = coords.iter().map(|&(_, q)| l / q).collect();
    // (χ, x) = Σ χ_c x_c (L/q_c) / L with χ_c, x_c residues mod q_c
    let to_vec = |x: &Element| -> Vec<u64> {
        coords
            .iter()
            .map(|&(c, q)| x.int_at(c).rem_euclid(q as i64) as u64)
            .collect()
    };
    let pairing = |chi: &[u64], x: &[u64]| -> u64 {
        chi.iter()
            .zip(x)
            .zip(&scale)
            .fold(0u64, |acc, ((&a, &b), &s)| (acc + a * b % l * s) % l)
    };
    let recurring: BTreeSet<Vec<u64>> = d[start..].iter().map(to_vec).collect();
    let all = all_vectors(&coords);
    let sd: Vec<&Vec<u64>> = all
        .iter()
        .filter(|chi| recurring.iter().all(|x| pairing(chi, x) == 0))
        .collect();
    let mut radical: Vec<Element> = all
        .iter()
        .filter(|x| sd.iter().all(|chi| pairing(chi, x) == 0))
        .map(|x| {
            g.element(
                coords
                    .iter()
                    .zip(x)
                    .map(|(&(c, _), &v)| (c, crate::group::Coeff::Int(v as i64))),
            )
            .expect("element of the finite group")
        })
        .collect();
    radical.sort();
    Ok(OracleRadical {
        shape,
        sd_size: sd.len(),
        radical,
    })
}

fn all_vectors(coords: &[(Coord, u64)]) -> Vec<Vec<u64>> {
    let mut out = vec![Vec::new()];
    for &(_, q) in coords {
        out = out
            .into_iter()
            .flat_map(|v| {
                (0..q).map(move |a| {
                    let mut w = v.clone();
                    w.push(a);
                    w
                })
            })
            .collect();
    }
    out
}
