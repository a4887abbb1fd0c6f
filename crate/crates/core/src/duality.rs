//! Finite-support characters of a discrete block group, exact pairings into ℚ/ℤ,
//! and block-local annihilators.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Neg};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::group::{lcm_u64, BlockGroup, Coeff, Coord, CyclicOrder, Element, GroupError};
use crate::zlattice::{congruence_kernel, Frame, LatticeError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DualityError {
    #[error("invalid character: {0}")]
    InvalidCharacter(String),
    #[error("block {0} has a non-finite coordinate; its dual is not finitely generated")]
    NonFiniteBlock(usize),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// A rational number modulo 1, kept in `[0, 1)` and lowest terms.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QmodZ(Ratio<i64>);

impl QmodZ {
    pub fn new(num: i64, den: i64) -> Self {
        QmodZ::from_ratio(Ratio::new(num, den))
    }

    pub fn from_ratio(r: Ratio<i64>) -> Self {
        let f = r - r.floor();
        QmodZ(if f < Ratio::zero() { f + 1 } else { f })
    }

    pub fn zero() -> Self {
        QmodZ(Ratio::zero())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn value(&self) -> Ratio<i64> {
        self.0
    }

    pub fn denom(&self) -> u64 {
        *self.0.denom() as u64
    }

    /// `n · self`, reducing `n` modulo the denominator first to stay in range.
    pub fn times(&self, n: i64) -> Self {
        let d = *self.0.denom();
        let k = n.rem_euclid(d) as i128;
        let num = (*self.0.numer() as i128 * k).rem_euclid(d as i128) as i64;
        QmodZ(Ratio::new(num, d))
    }
}

impl Add for QmodZ {
    type Output = QmodZ;
    fn add(self, o: QmodZ) -> QmodZ {
        QmodZ::from_ratio(self.0 + o.0)
    }
}

impl Neg for QmodZ {
    type Output = QmodZ;
    fn neg(self) -> QmodZ {
        QmodZ::from_ratio(-self.0)
    }
}

impl fmt::Display for QmodZ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_zero() {
            write!(f, "0")
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

/// A character given by its values on finitely many coordinates; all other
/// coordinates map to 0.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Character {
    values: BTreeMap<Coord, QmodZ>,
}

impl Character {
    pub fn trivial() -> Self {
        Character::default()
    }

    /// Validates coordinate values against the group.
    pub fn new(
        g: &BlockGroup,
        values: impl IntoIterator<Item = (Coord, QmodZ)>,
    ) -> Result<Character, DualityError> {
        let mut out: BTreeMap<Coord, QmodZ> = BTreeMap::new();
        for (c, v) in values {
            match g.coord_order(c)? {
                CyclicOrder::Finite(n) => {
                    if n % v.denom() != 0 {
                        return Err(DualityError::InvalidCharacter(format!(
                            "value {v} at block {} slot {} has denominator not dividing {n}",
                            c.block, c.slot
                        )));
                    }
                }
                CyclicOrder::Infinite => {}
                CyclicOrder::Prufer(_) => {
                    return Err(DualityError::InvalidCharacter(format!(
                    "block {} is a Prufer coordinate; only finite and Z coordinates carry values",
                    c.block
                )))
                }
            }
            let e = out.entry(c).or_default();
            *e = *e + v;
        }
        out.retain(|_, v| !v.is_zero());
        Ok(Character { values: out })
    }

    /// Character with value `eps` on `e_j` and `etas[i]` on `h^j_{i+1}`.
    pub fn on_block(
        g: &BlockGroup,
        j: usize,
        eps: QmodZ,
        etas: &[QmodZ],
    ) -> Result<Character, DualityError> {
        let vals = std::iter::once((Coord::e(j), eps)).chain(
            etas.iter()
                .enumerate()
                .map(|(i, &v)| (Coord::h(j, i + 1), v)),
        );
        Character::new(g, vals)
    }

    pub fn is_trivial(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, c: Coord) -> QmodZ {
        self.values.get(&c).copied().unwrap_or_default()
    }

    pub fn entries(&self) -> impl Iterator<Item = (Coord, QmodZ)> + '_ {
        self.values.iter().map(|(c, v)| (*c, *v))
    }

    pub fn support_blocks(&self) -> BTreeSet<usize> {
        self.values.keys().map(|c| c.block).collect()
    }

    /// Least common multiple of the value denominators.
    pub fn order(&self) -> u64 {
        self.values
            .values()
            .fold(1, |acc, v| lcm_u64(acc, v.denom()))
    }

    pub fn add(&self, other: &Character) -> Character {
        let mut out = self.values.clone();
        for (c, v) in &other.values {
            let e = out.entry(*c).or_default();
            *e = *e + *v;
        }
        out.retain(|_, v| !v.is_zero());
        Character { values: out }
    }

    pub fn neg(&self) -> Character {
        Character {
            values: self.values.iter().map(|(c, v)| (*c, -*v)).collect(),
        }
    }

    /// Restriction to one block.
    pub fn restrict(&self, j: usize) -> Character {
        Character {
            values: self
                .values
                .iter()
                .filter(|(c, _)| c.block == j)
                .map(|(c, v)| (*c, *v))
                .collect(),
        }
    }
}

impl fmt::Display for Character {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.values.is_empty() {
            return write!(f, "trivial");
        }
        for (i, (c, v)) in self.values.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            if c.slot == 0 {
                write!(f, "e[{}]->{v}", c.block)?;
            } else {
                write!(f, "h[{},{}]->{v}", c.block, c.slot)?;
            }
        }
        Ok(())
    }
}

/// `(χ, x)` in ℚ/ℤ.
pub fn pair(chi: &Character, x: &Element) -> QmodZ {
    let mut acc = QmodZ::zero();
    for (c, a) in x.entries() {
        if let (Some(v), Coeff::Int(a)) = (chi.values.get(c), a) {
            acc = acc + v.times(*a);
        }
    }
    acc
}

fn finite_block_moduli(g: &BlockGroup, j: usize) -> Result<Vec<(Coord, u64)>, DualityError> {
    g.block_coords(j)?
        .into_iter()
        .map(|(c, o)| match o {
            CyclicOrder::Finite(n) => Ok((c, n)),
            _ => Err(DualityError::NonFiniteBlock(j)),
        })
        .collect()
}

fn check_in_block(x: &Element, j: usize) -> Result<(), DualityError> {
    if x.entries().iter().any(|(c, _)| c.block != j) {
        return Err(
            LatticeError::SupportMismatch(format!("generator {x} leaves block {j}")).into(),
        );
    }
    Ok(())
}

/// Generators of `H_j^⊥` inside the dual of block `j`, where `H_j = ⟨h_gens⟩`.
pub fn annihilator_basis(
    g: &BlockGroup,
    j: usize,
    h_gens: &[Element],
) -> Result<Vec<Character>, DualityError> {
    let coords = finite_block_moduli(g, j)?;
    for h in h_gens {
        check_in_block(h, j)?;
    }
    let l = coords.iter().fold(1, |acc, &(_, n)| lcm_u64(acc, n));
    // χ_c = x_c / n_c; (χ, h) = Σ x_c h_c (L / n_c) / L
    let rows: Vec<Vec<BigInt>> = h_gens
        .iter()
        .map(|h| {
            coords
                .iter()
                .map(|&(c, n)| BigInt::from(h.int_at(c)) * BigInt::from(l / n))
                .collect()
        })
        .collect();
    let sols = congruence_kernel(&rows, &BigInt::from(l), coords.len());
    let mut out: BTreeSet<Character> = BTreeSet::new();
    for s in sols {
        let vals = coords.iter().zip(&s).map(|(&(c, n), x)| {
            let x = x
                .mod_floor(&BigInt::from(n))
                .to_i64()
                .expect("small residue");
            (c, QmodZ::new(x, n as i64))
        });
        let chi = Character::new(g, vals)?;
        if !chi.is_trivial() {
            out.insert(chi);
        }
    }
    Ok(out.into_iter().collect())
}

/// Joint annihilator `{x : (χ, x) = 0 for every χ}` of a block-local family.
///
/// `family[j]` lists characters supported on block `j`; blocks absent from the
/// map impose no condition and are wholly contained in the annihilator. The
/// result lists, for every block in the map, generators of the annihilator's
/// component in that block.
pub fn annihilator_in_g(
    g: &BlockGroup,
    family: &BTreeMap<usize, Vec<Character>>,
) -> Result<BTreeMap<usize, Vec<Element>>, DualityError> {
    let mut out = BTreeMap::new();
    for (&j, chars) in family {
        let frame = Frame::for_blocks(g, [j]).map_err(|_| DualityError::NonFiniteBlock(j))?;
        for chi in chars {
            if chi.values.keys().any(|c| c.block != j) {
                return Err(DualityError::InvalidCharacter(format!(
                    "character {chi} is not supported on block {j}"
                )));
            }
        }
        let l = chars.iter().fold(1, |acc, chi| lcm_u64(acc, chi.order()));
        let rows: Vec<Vec<BigInt>> = chars
            .iter()
            .map(|chi| {
                frame
                    .coords()
                    .iter()
                    .map(|&c| {
                        let v = chi.value(c).value();
                        BigInt::from(*v.numer() * (l as i64 / *v.denom()))
                    })
                    .collect()
            })
            .collect();
        let sols = congruence_kernel(&rows, &BigInt::from(l), frame.dim());
        let mut gens: BTreeSet<Element> = BTreeSet::new();
        for s in sols {
            let x = frame.element(g, &s);
            if !x.is_zero() {
                gens.insert(x);
            }
        }
        out.insert(j, gens.into_iter().collect());
    }
    Ok(out)
}
