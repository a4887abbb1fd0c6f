//! Interleaving an integer rule with integers `b_n` whose images under
//! `n ↦ n·α` (α = frac √2) approach a target point of the circle.
//!
//! Floating point only: the report always says what was certified and what
//! was merely approximated.

use num_traits::Float;

use super::rules::{IntegerRuleSeq, ResidueSeqRule};
use super::ConstructionError;
use crate::tseq::{explicit, interleave, TSeq};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Target<F> {
    /// `p/q` reduced mod 1.
    Rational { p: i64, q: i64 },
    /// Decimal approximation of an irrational point.
    Approx(F),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DensityFlag {
    /// Density of the target's cyclic subgroup is assumed, not certified.
    ApproxOnly,
    /// A rational target generates a finite, non-dense subgroup.
    NotDense,
}

#[derive(Clone, Debug)]
pub struct TbReport<F> {
    pub flag: DensityFlag,
    pub alpha: F,
    pub target: F,
    /// Number of `b_n` meeting `|b_n·α − target| < ε/2^n` before precision ran out.
    pub horizon: usize,
    pub b: Vec<i64>,
    pub errors: Vec<F>,
    /// Even terms all vanish, so only the odd terms matter.
    pub odd_only: bool,
    pub sequence: TSeq,
}

fn centered<F: Float>(x: F) -> F {
    x - x.round()
}

/// Convergent denominators `q_k` of `α = √2 − 1` and the signed gaps
/// `θ_k = q_k·α − p_k`, while they are still resolved by `F`.
fn convergents<F: Float>(alpha: F) -> Vec<(i64, F)> {
    let (mut q0, mut q1) = (1i64, 2i64);
    let (mut p0, mut p1) = (0i64, 1i64);
    let mut out = Vec::new();
    loop {
        let theta = F::from(q0).unwrap() * alpha - F::from(p0).unwrap();
        let noise = F::from(q0).unwrap() * F::epsilon() * F::from(8).unwrap();
        if theta.abs() <= noise {
            break;
        }
        out.push((q0, theta));
        let (Some(q2), Some(p2)) = (
            q1.checked_mul(2).and_then(|x| x.checked_add(q0)),
            p1.checked_mul(2).and_then(|x| x.checked_add(p0)),
        ) else {
            break;
        };
        (q0, q1, p0, p1) = (q1, q2, p1, p2);
    }
    out
}

pub fn tb_interleave_demo<F: Float>(
    a_rule: &ResidueSeqRule,
    target: Target<F>,
    eps: F,
    len: usize,
) -> Result<TbReport<F>, ConstructionError> {
    if eps.is_nan() || eps <= F::zero() || !eps.is_finite() {
        return Err(ConstructionError::InvalidInput(
            "precision must be positive".into(),
        ));
    }
    let (beta, flag) = match target {
        Target::Rational { p, q } => {
            if q == 0 {
                return Err(ConstructionError::InvalidInput("zero denominator".into()));
            }
            if p.rem_euclid(q) == 0 {
                return Err(ConstructionError::DegenerateTarget(
                    "<0> is not dense".into(),
                ));
            }
            let x = F::from(p.rem_euclid(q)).unwrap() / F::from(q.abs()).unwrap();
            (if q < 0 { F::one() - x } else { x }, DensityFlag::NotDense)
        }
        Target::Approx(x) => {
            if !x.is_finite() {
                return Err(ConstructionError::InvalidInput(
                    "target must be finite".into(),
                ));
            }
            let x = x - x.floor();
            if x == F::zero() {
                return Err(ConstructionError::DegenerateTarget(
                    "<0> is not dense".into(),
                ));
            }
            (x, DensityFlag::ApproxOnly)
        }
    };
    let alpha = F::from(2).unwrap().sqrt() - F::one();
    let conv = convergents(alpha);
    let two = F::from(2).unwrap();
    let mut b = Vec::new();
    let mut errors = Vec::new();
    for n in 0..len {
        let tol = eps / two.powi(n as i32);
        let mut bn: i64 = 0;
        let mut e = centered(-beta);
        for &(q, theta) in &conv {
            if e.abs() < tol {
                break;
            }
            let c = (-e / theta).round();
            let Some(c) = c.to_i64() else { break };
            let Some(next) = c.checked_mul(q).and_then(|x| x.checked_add(bn)) else {
                break;
            };
            bn = next;
            e = centered(e + F::from(c).unwrap() * theta);
        }
        let err = centered(F::from(bn).unwrap() * alpha - beta);
        if err.abs() >= tol {
            break;
        }
        b.push(bn);
        errors.push(err.abs());
    }
    let horizon = b.len();
    let a_seq = TSeq::new(IntegerRuleSeq::new(a_rule.clone())?);
    let group = a_seq.group().clone();
    let b_seq = explicit(&group, b.iter().map(|&x| group.e(0, x)).collect())?;
    let sequence = interleave(vec![a_seq, b_seq])?;
    Ok(TbReport {
        flag,
        alpha,
        target: beta,
        horizon,
        b,
        errors,
        odd_only: a_rule.is_identically_zero(),
        sequence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden() -> f64 {
        (5f64.sqrt() - 1.0) / 2.0
    }

    #[test]
    fn factorial_with_golden_target() {
        let r = tb_interleave_demo(
            &ResidueSeqRule::Factorial,
            Target::Approx(golden()),
            1e-6,
            40,
        )
        .unwrap();
        assert_eq!(r.flag, DensityFlag::ApproxOnly);
        assert!(r.horizon >= 3);
        for (n, (&b, &err)) in r.b.iter().zip(&r.errors).enumerate() {
            let direct = (b as f64 * r.alpha - r.target).rem_euclid(1.0);
            let direct = direct.min(1.0 - direct);
            assert!(direct < 1e-6 / 2f64.powi(n as i32) + 1e-12);
            assert!((direct - err).abs() < 1e-9);
        }
        let seq = &r.sequence;
        assert_eq!(seq.term(6).unwrap(), seq.group().e(0, 6));
        assert_eq!(seq.term(1).unwrap(), seq.group().e(0, r.b[0]));
        // past the horizon the odd terms vanish
        assert!(seq.term(2 * r.horizon + 1).unwrap().is_zero());
    }

    #[test]
    fn works_in_single_precision() {
        let r = tb_interleave_demo(&ResidueSeqRule::Factorial, Target::Approx(0.3f32), 1e-2, 20)
            .unwrap();
        assert!(r.horizon >= 1);
        assert!(r.horizon < 20);
    }

    #[test]
    fn degenerate_and_rational_targets() {
        let rule = ResidueSeqRule::Geom(2);
        assert!(matches!(
            tb_interleave_demo(&rule, Target::<f64>::Rational { p: 3, q: 3 }, 1e-3, 5),
            Err(ConstructionError::DegenerateTarget(_))
        ));
        assert!(matches!(
            tb_interleave_demo(&rule, Target::Approx(0.0f64), 1e-3, 5),
            Err(ConstructionError::DegenerateTarget(_))
        ));
        let r = tb_interleave_demo(&rule, Target::<f64>::Rational { p: 1, q: 3 }, 1e-3, 5).unwrap();
        assert_eq!(r.flag, DensityFlag::NotDense);
    }

    #[test]
    fn zero_rule_leaves_odd_terms() {
        let rule = ResidueSeqRule::List {
            values: vec![0],
            repeat_from: 0,
        };
        let r = tb_interleave_demo(&rule, Target::Approx(golden()), 1e-4, 8).unwrap();
        assert!(r.odd_only);
        for n in 0..2 * r.horizon {
            let t = r.sequence.term(n).unwrap();
            if n % 2 == 0 {
                assert!(t.is_zero());
            } else {
                assert_eq!(t, r.sequence.group().e(0, r.b[n / 2]));
            }
        }
    }
}
