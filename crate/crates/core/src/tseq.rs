//! Lazily indexed sequences in a block group, the sets `A(k,m)` of signed sums
//! of at most `k+1` terms with indices `≥ m`, and bounded verification of the
//! T-sequence criterion "for every `g ≠ 0` and `k` some `A(k,m)` misses `g`".
//!
//! Prefix membership is exact: a pruning pass discards terms whose support
//! outside the target cannot be cancelled by the remaining `k` terms, then a
//! meet-in-the-middle search over half-sumsets decides membership. Exclusion is
//! only reported together with a tail certificate supplied by the sequence.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::group::{BlockGroup, Coord, Element, GroupError};

pub const DEFAULT_BUDGET: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeqError {
    #[error("g must be nonzero")]
    ZeroElement,
    #[error("enumeration budget of {0} elements exceeded")]
    BudgetExceeded(usize),
    #[error("incompatible sequences: {0}")]
    Incompatible(String),
    #[error("term {0} does not fit in 63 bits")]
    Overflow(usize),
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// Everything a sequence needs to decide whether terms past the prefix matter.
#[derive(Debug, Clone, Copy)]
pub struct TailQuery<'a> {
    pub g: &'a Element,
    pub k: usize,
    pub m: usize,
    pub n: usize,
    /// Terms `0..=n`.
    pub prefix: &'a [Element],
}

/// Argument that no sum using an index beyond the prefix can equal `g`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TailCertificate {
    /// Every term from `from` on is zero and `from ≤ n + 1`.
    ZeroTail { from: usize },
    /// Terms past `effective_prefix` either cannot have their e-support
    /// cancelled by the other `k` summands (odd terms from `odd_from` on) or
    /// live on blocks `≥ boundary_block` that no usable term touches.
    SupportEscape {
        boundary_block: usize,
        effective_prefix: usize,
        odd_from: usize,
        odd_checked_to: usize,
    },
    /// Integer terms grow by a factor of at least `k+1` from index `n+1` on and
    /// the first of them already dominates every prefix contribution.
    OrderGrowth {
        first_tail: i128,
        prefix_bound: i128,
        growth: String,
    },
}

impl fmt::Display for TailCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TailCertificate::ZeroTail { from } => write!(f, "ZERO_TAIL(from={from})"),
            TailCertificate::SupportEscape {
                boundary_block,
                effective_prefix,
                odd_from,
                odd_checked_to,
            } => write!(
                f,
                "SUPPORT_ESCAPE(boundary_block={boundary_block}, effective_prefix={effective_prefix}, odd_from={odd_from}, odd_checked_to={odd_checked_to})"
            ),
            TailCertificate::OrderGrowth {
                first_tail,
                prefix_bound,
                growth,
            } => write!(
                f,
                "ORDER_GROWTH(first_tail={first_tail}, prefix_bound={prefix_bound}, growth={growth})"
            ),
        }
    }
}

pub trait Sequence: Send + Sync + fmt::Debug {
    fn group(&self) -> &BlockGroup;

    /// Term at uniform index `n ≥ 0`.
    fn term(&self, n: usize) -> Result<Element, SeqError>;

    fn describe(&self) -> String;

    /// Index the source numbering assigns to uniform index 0.
    fn origin(&self) -> usize {
        0
    }

    /// First index from which every term is zero, when known.
    fn zero_beyond(&self) -> Option<usize> {
        None
    }

    fn tail_certificate(&self, q: &TailQuery<'_>) -> Option<TailCertificate> {
        zero_tail_certificate(self.zero_beyond(), q)
    }
}

pub fn zero_tail_certificate(
    zero_from: Option<usize>,
    q: &TailQuery<'_>,
) -> Option<TailCertificate> {
    zero_from
        .filter(|&z| z <= q.n + 1)
        .map(|from| TailCertificate::ZeroTail { from })
}

/// Shared handle to a sequence.
#[derive(Clone, Debug)]
pub struct TSeq(Arc<dyn Sequence>);

impl TSeq {
    pub fn new(s: impl Sequence + 'static) -> Self {
        TSeq(Arc::new(s))
    }

    pub fn inner(&self) -> &dyn Sequence {
        &*self.0
    }

    pub fn group(&self) -> &BlockGroup {
        self.0.group()
    }

    pub fn term(&self, n: usize) -> Result<Element, SeqError> {
        self.0.term(n)
    }

    /// Terms `0..=n`.
    pub fn prefix(&self, n: usize) -> Result<Vec<Element>, SeqError> {
        (0..=n).map(|i| self.0.term(i)).collect()
    }

    pub fn describe(&self) -> String {
        self.0.describe()
    }

    pub fn origin(&self) -> usize {
        self.0.origin()
    }
}

/// A finite list followed by zeros.
#[derive(Debug, Clone)]
pub struct Explicit {
    group: BlockGroup,
    terms: Vec<Element>,
}

impl Sequence for Explicit {
    fn group(&self) -> &BlockGroup {
        &self.group
    }

    fn term(&self, n: usize) -> Result<Element, SeqError> {
        Ok(self.terms.get(n).cloned().unwrap_or_default())
    }

    fn describe(&self) -> String {
        format!("EXPLICIT({} terms)", self.terms.len())
    }

    fn zero_beyond(&self) -> Option<usize> {
        Some(
            self.terms
                .iter()
                .rposition(|t| !t.is_zero())
                .map_or(0, |i| i + 1),
        )
    }
}

pub fn explicit(group: &BlockGroup, terms: Vec<Element>) -> Result<TSeq, SeqError> {
    let terms = terms
        .iter()
        .map(|t| group.canonicalize(t))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TSeq::new(Explicit {
        group: group.clone(),
        terms,
    }))
}

/// `term(n·q + j) = components[j].term(n)`.
#[derive(Debug, Clone)]
pub struct Interleave {
    components: Vec<TSeq>,
}

impl Sequence for Interleave {
    fn group(&self) -> &BlockGroup {
        self.components[0].group()
    }

    fn term(&self, n: usize) -> Result<Element, SeqError> {
        let q = self.components.len();
        self.components[n % q].term(n / q)
    }

    fn describe(&self) -> String {
        let parts: Vec<String> = self.components.iter().map(|c| c.describe()).collect();
        format!(
            "INTERLEAVE(q={}; {})",
            self.components.len(),
            parts.join(", ")
        )
    }

    /// Numbering that starts the interleaved sequence at `q` (n ≥ 1).
    fn origin(&self) -> usize {
        self.components.len()
    }

    fn zero_beyond(&self) -> Option<usize> {
        let q = self.components.len();
        self.components
            .iter()
            .enumerate()
            .map(|(j, c)| {
                c.inner()
                    .zero_beyond()
                    .map(|z| if z == 0 { 0 } else { (z - 1) * q + j + 1 })
            })
            .try_fold(0, |acc, z| z.map(|z| acc.max(z)))
    }
}

pub fn interleave(components: Vec<TSeq>) -> Result<TSeq, SeqError> {
    let first = components
        .first()
        .ok_or_else(|| SeqError::Incompatible("interleave needs at least one sequence".into()))?;
    if components.iter().any(|c| c.group() != first.group()) {
        return Err(SeqError::Incompatible(
            "interleaved sequences must live in the same group".into(),
        ));
    }
    if components.len() == 1 {
        return Ok(first.clone());
    }
    Ok(TSeq::new(Interleave { components }))
}

/// A sum `Σ coef · d_index` with distinct indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Witness(pub Vec<(usize, i64)>);

impl Witness {
    fn single(index: usize, coef: i64) -> Self {
        Witness(vec![(index, coef)])
    }

    fn merge(&self, other: &Witness) -> Witness {
        let mut out: Vec<(usize, i64)> = self.0.clone();
        for &(r, c) in &other.0 {
            match out.iter_mut().find(|(s, _)| *s == r) {
                Some(e) => e.1 += c,
                None => out.push((r, c)),
            }
        }
        out.retain(|&(_, c)| c != 0);
        out.sort_unstable();
        Witness(out)
    }

    pub fn weight(&self) -> u64 {
        self.0.iter().map(|(_, c)| c.unsigned_abs()).sum()
    }

    /// Evaluates the sum against the given terms.
    pub fn evaluate(&self, g: &BlockGroup, terms: &[Element]) -> Element {
        g.combination(self.0.iter().map(|&(r, c)| (c, &terms[r])))
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.0.iter().map(|(r, c)| format!("{c}*d[{r}]")).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    /// `g ∉ A(k,m)` for the full sequence.
    Excluded {
        m: usize,
        /// Least `m` at which the prefix search already excludes `g`.
        prefix_excluded_from: usize,
        certificate: TailCertificate,
    },
    /// `g ∈ A(k, m_max)` within the prefix, hence for every smaller `m`.
    MemberUpTo { m_max: usize, witness: Witness },
    Inconclusive {
        prefix_excluded_from: usize,
        reason: String,
    },
}

impl Verdict {
    pub fn kind(&self) -> &'static str {
        match self {
            Verdict::Excluded { .. } => "EXCLUDED",
            Verdict::MemberUpTo { .. } => "MEMBER_UP_TO",
            Verdict::Inconclusive { .. } => "INCONCLUSIVE",
        }
    }
}

/// Exact computations over the prefix `d_0..d_N` of a sequence.
pub struct PrefixEngine {
    group: BlockGroup,
    terms: Vec<Element>,
    budget: usize,
}

type Stage = (HashMap<Element, usize>, Vec<(Element, Witness)>);

impl PrefixEngine {
    pub fn new(seq: &TSeq, n: usize, budget: usize) -> Result<Self, SeqError> {
        Ok(PrefixEngine {
            group: seq.group().clone(),
            terms: seq.prefix(n)?,
            budget,
        })
    }

    pub fn terms(&self) -> &[Element] {
        &self.terms
    }

    pub fn n(&self) -> usize {
        self.terms.len() - 1
    }

    /// Indices in `m..=N` that can occur in a sum of weight `≤ K` whose value
    /// vanishes outside `keep`.
    fn viable(&self, m: usize, weight: usize, keep: &dyn Fn(Coord) -> bool) -> Vec<usize> {
        let g = &self.group;
        let idx: Vec<usize> = (m..self.terms.len())
            .filter(|&r| !self.terms[r].is_zero())
            .collect();
        // outside supports of c·d_r for c = 1..=K; `None` when c·d_r = 0
        let outside: HashMap<usize, Vec<Option<Vec<Coord>>>> = idx
            .iter()
            .map(|&r| {
                let per_c = (1..=weight as i64)
                    .map(|c| {
                        let x = g.smul(c, &self.terms[r]);
                        (!x.is_zero()).then(|| {
                            x.entries()
                                .iter()
                                .map(|(c, _)| *c)
                                .filter(|&c| !keep(c))
                                .collect()
                        })
                    })
                    .collect();
                (r, per_c)
            })
            .collect();
        let mut alive: BTreeSet<usize> = idx.iter().copied().collect();
        loop {
            let mut index: HashMap<Coord, Vec<usize>> = HashMap::new();
            for &r in &alive {
                for (c, _) in self.terms[r].entries() {
                    index.entry(*c).or_default().push(r);
                }
            }
            let mut removed = false;
            let snapshot: Vec<usize> = alive.iter().copied().collect();
            for r in snapshot {
                let ok = outside[&r].iter().enumerate().any(|(ci, out)| {
                    let Some(out) = out else { return false };
                    if out.is_empty() {
                        return true;
                    }
                    // each other summand cancels at most its overlap with `out`
                    let others = weight - (ci + 1);
                    let mut counts: HashMap<usize, usize> = HashMap::new();
                    for coord in out {
                        for &s in index.get(coord).into_iter().flatten() {
                            if s != r {
                                *counts.entry(s).or_default() += 1;
                            }
                        }
                    }
                    let mut v: Vec<usize> = counts.into_values().collect();
                    v.sort_unstable_by(|a, b| b.cmp(a));
                    v.iter().take(others).sum::<usize>() >= out.len()
                });
                if !ok {
                    alive.remove(&r);
                    removed = true;
                }
            }
            if !removed {
                break;
            }
        }
        alive.into_iter().collect()
    }

    /// Sumset stages `S_0 = {0}, S_t = S_{t-1} + T` for `t ≤ depth`.
    fn stages(&self, indices: &[usize], depth: usize) -> Result<Vec<Stage>, SeqError> {
        let g = &self.group;
        let mut gens: Vec<(Element, Witness)> = Vec::new();
        for &r in indices {
            gens.push((self.terms[r].clone(), Witness::single(r, 1)));
            gens.push((g.neg(&self.terms[r]), Witness::single(r, -1)));
        }
        let mut stages: Vec<Stage> = Vec::new();
        let zero = (
            HashMap::from([(Element::zero(), 0)]),
            vec![(Element::zero(), Witness::default())],
        );
        stages.push(zero);
        let mut total = 1usize;
        for _ in 0..depth {
            let prev = stages.last().expect("stage 0 exists");
            let mut map = prev.0.clone();
            let mut list = prev.1.clone();
            for (x, wx) in &prev.1 {
                for (t, wt) in &gens {
                    let s = g.add(x, t);
                    if !map.contains_key(&s) {
                        map.insert(s.clone(), list.len());
                        list.push((s, wx.merge(wt)));
                        total += 1;
                        if total > self.budget {
                            return Err(SeqError::BudgetExceeded(self.budget));
                        }
                    }
                }
            }
            stages.push((map, list));
        }
        Ok(stages)
    }

    /// The full set `A(k,m)` restricted to the prefix.
    pub fn enumerate(&self, k: usize, m: usize) -> Result<BTreeSet<Element>, SeqError> {
        let idx: Vec<usize> = (m..self.terms.len()).collect();
        let stages = self.stages(&idx, k + 1)?;
        Ok(stages
            .last()
            .expect("stages")
            .1
            .iter()
            .map(|(x, _)| x.clone())
            .collect())
    }

    /// Exact membership `g ∈ A(k,m)|_N` with a witness.
    pub fn member(&self, g: &Element, k: usize, m: usize) -> Result<Option<Witness>, SeqError> {
        if g.is_zero() {
            return Ok(Some(Witness::default()));
        }
        if m >= self.terms.len() {
            return Ok(None);
        }
        let weight = k + 1;
        let support: BTreeSet<Coord> = g.entries().iter().map(|(c, _)| *c).collect();
        let idx = self.viable(m, weight, &|c| support.contains(&c));
        let a = weight.div_ceil(2);
        let b = weight - a;
        let stages = self.stages(&idx, a)?;
        let (amap, alist) = &stages[a];
        for (x, wx) in &stages[b].1 {
            let rest = self.group.sub(g, x);
            if let Some(&i) = amap.get(&rest) {
                return Ok(Some(wx.merge(&alist[i].1)));
            }
        }
        Ok(None)
    }

    /// All elements of `A(k,m)|_N` whose support lies inside `keep`, with witnesses.
    pub fn window_sums(
        &self,
        k: usize,
        m: usize,
        keep: &dyn Fn(Coord) -> bool,
    ) -> Result<HashMap<Element, Witness>, SeqError> {
        let mut out: HashMap<Element, Witness> = HashMap::new();
        out.insert(Element::zero(), Witness::default());
        if m >= self.terms.len() {
            return Ok(out);
        }
        let weight = k + 1;
        let idx = self.viable(m, weight, keep);
        let a = weight.div_ceil(2);
        let b = weight - a;
        let stages = self.stages(&idx, a)?;
        let g = &self.group;
        let mut buckets: HashMap<Element, Vec<usize>> = HashMap::new();
        for (i, (y, _)) in stages[b].1.iter().enumerate() {
            buckets.entry(y.filter(|c| !keep(c))).or_default().push(i);
        }
        for (x, wx) in &stages[a].1 {
            let key = g.neg(&x.filter(|c| !keep(c)));
            if let Some(list) = buckets.get(&key) {
                for &i in list {
                    let (y, wy) = &stages[b].1[i];
                    let z = g.add(x, y);
                    out.entry(z).or_insert_with(|| wx.merge(wy));
                }
            }
        }
        Ok(out)
    }
}

/// `A(k,m)` over the prefix `d_m..d_N` as a deduplicated set.
pub fn enumerate_akm(
    seq: &TSeq,
    k: usize,
    m: usize,
    n: usize,
    budget: usize,
) -> Result<BTreeSet<Element>, SeqError> {
    if m > n {
        return Ok(BTreeSet::from([Element::zero()]));
    }
    PrefixEngine::new(seq, n, budget)?.enumerate(k, m)
}

/// Least `m` in `0..=hi` with `!member(m)`, assuming membership is
/// anti-monotone in `m`; `None` when `member(hi)` holds.
fn first_excluded(
    hi: usize,
    mut member: impl FnMut(usize) -> Result<bool, SeqError>,
) -> Result<Option<usize>, SeqError> {
    if !member(0)? {
        return Ok(Some(0));
    }
    // galloping: last known member `lo`
    let mut lo = 0;
    let mut step = 1;
    let mut upper = None;
    while lo < hi {
        let probe = (lo + step).min(hi);
        if member(probe)? {
            lo = probe;
            step *= 2;
        } else {
            upper = Some(probe);
            break;
        }
    }
    let Some(mut up) = upper else { return Ok(None) };
    while up - lo > 1 {
        let mid = lo + (up - lo) / 2;
        if member(mid)? {
            lo = mid;
        } else {
            up = mid;
        }
    }
    Ok(Some(up))
}

fn finish(
    seq: &TSeq,
    engine: &PrefixEngine,
    g: &Element,
    k: usize,
    m_max: usize,
    excluded_from: Option<usize>,
    witness_at_max: impl FnOnce() -> Result<Witness, SeqError>,
) -> Result<Verdict, SeqError> {
    let n = engine.n();
    let Some(m0) = excluded_from else {
        return Ok(Verdict::MemberUpTo {
            m_max,
            witness: witness_at_max()?,
        });
    };
    for m in m0..=m_max {
        let q = TailQuery {
            g,
            k,
            m,
            n,
            prefix: engine.terms(),
        };
        if let Some(certificate) = seq.inner().tail_certificate(&q) {
            return Ok(Verdict::Excluded {
                m,
                prefix_excluded_from: m0,
                certificate,
            });
        }
    }
    Ok(Verdict::Inconclusive {
        prefix_excluded_from: m0,
        reason: format!(
            "g is excluded from A(k,m) within the prefix for m ≥ {m0}, but no tail certificate holds for m ≤ {m_max}"
        ),
    })
}

/// Bounded check of the criterion for one `g` and `k`.
pub fn check_criterion(
    seq: &TSeq,
    g: &Element,
    k: usize,
    m_max: usize,
    n: usize,
    budget: usize,
) -> Result<Verdict, SeqError> {
    let g = seq.group().canonicalize(g)?;
    if g.is_zero() {
        return Err(SeqError::ZeroElement);
    }
    let engine = PrefixEngine::new(seq, n, budget)?;
    let hi = m_max.min(n + 1);
    let excluded = first_excluded(hi, |m| Ok(engine.member(&g, k, m)?.is_some()))?;
    finish(seq, &engine, &g, k, m_max, excluded, || {
        Ok(engine
            .member(&g, k, m_max)?
            .expect("membership at m_max established by the search"))
    })
}

/// Same verdicts as [`check_criterion`] for many targets at once. All prefix
/// sums landing in the blocks spanned by the targets are computed once per `m`.
pub fn check_criterion_batch(
    seq: &TSeq,
    targets: &[Element],
    k: usize,
    m_max: usize,
    n: usize,
    budget: usize,
) -> Result<Vec<Verdict>, SeqError> {
    let group = seq.group();
    let targets = targets
        .iter()
        .map(|t| group.canonicalize(t))
        .collect::<Result<Vec<_>, _>>()?;
    if targets.iter().any(|t| t.is_zero()) {
        return Err(SeqError::ZeroElement);
    }
    let blocks: BTreeSet<usize> = targets.iter().flat_map(|t| t.support_blocks()).collect();
    let engine = PrefixEngine::new(seq, n, budget)?;
    let mut memo = WindowMemo {
        engine: &engine,
        k,
        keep: Box::new(move |c: Coord| blocks.contains(&c.block)),
        sets: HashMap::new(),
    };
    let hi = m_max.min(n + 1);
    let mut out = Vec::with_capacity(targets.len());
    for g in &targets {
        let t = first_excluded(hi, |m| memo.contains(m, g))?;
        let cached = memo.sets.get(&m_max).and_then(|s| s.get(g)).cloned();
        out.push(finish(seq, &engine, g, k, m_max, t, || match cached {
            Some(w) => Ok(w),
            None => Ok(engine
                .member(g, k, m_max)?
                .expect("membership at m_max established by the search")),
        })?);
    }
    Ok(out)
}

struct WindowMemo<'a> {
    engine: &'a PrefixEngine,
    k: usize,
    keep: Box<dyn Fn(Coord) -> bool + 'a>,
    sets: HashMap<usize, HashMap<Element, Witness>>,
}

impl WindowMemo<'_> {
    fn contains(&mut self, m: usize, g: &Element) -> Result<bool, SeqError> {
        if !self.sets.contains_key(&m) {
            let s = self.engine.window_sums(self.k, m, &*self.keep)?;
            self.sets.insert(m, s);
        }
        Ok(self.sets[&m].contains_key(g))
    }
}
