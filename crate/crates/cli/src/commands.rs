//! The subcommands, as functions from parsed inputs to a report.

use minap::constructions::{
    circle_membership, Case, CircleVerdict, HSpec, Hypothesis, TriangularParams,
};
use minap::decompose::{dispatch_case, minap_admissible, DispatchCase};
use minap::radical::radical_of;
use minap::tseq::{check_criterion, Verdict};
use minap::BlockGroup;
use serde_json::{json, Value};
use thiserror::Error;

use crate::dsl::{
    parse_element, parse_group, parse_rational, parse_rule, parse_subgroup, print_group, ParseError,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("cannot read {0}")]
    Io(String),
    #[error("{0}")]
    Compute(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Parse(_) => "parse",
            CliError::Io(_) => "io",
            CliError::Compute(_) => "computation",
        }
    }

    pub fn json(&self, command: &str) -> Value {
        let mut err = json!({ "kind": self.kind(), "message": self.to_string() });
        if let CliError::Parse(p) = self {
            err["line"] = json!(p.line);
            err["column"] = json!(p.column);
        }
        json!({ "command": command, "error": err, "version": VERSION })
    }
}

fn compute(e: impl std::fmt::Display) -> CliError {
    CliError::Compute(e.to_string())
}

/// A finished command: machine-readable fields, text rendering, exit code.
#[derive(Debug)]
pub struct Outcome {
    pub command: &'static str,
    pub inputs: Value,
    pub verdict: Value,
    pub certificate: Value,
    pub window: Option<usize>,
    pub text: String,
    pub exit: i32,
}

impl Outcome {
    pub fn json(&self) -> Value {
        json!({
            "command": self.command,
            "inputs": self.inputs,
            "verdict": self.verdict,
            "certificate": self.certificate,
            "window": self.window,
            "version": VERSION,
        })
    }
}

/// A named input file and its contents.
pub struct Source<'a> {
    pub name: &'a str,
    pub text: &'a str,
}

fn params(g: BlockGroup, self_e: bool) -> Result<TriangularParams, CliError> {
    if self_e {
        TriangularParams::self_e(g)
    } else {
        TriangularParams::new(g)
    }
    .map_err(compute)
}

fn describe(p: &TriangularParams) -> Value {
    let hypothesis = match p.hypothesis_kind() {
        Hypothesis::A { u } => format!("a (u = {u})"),
        Hypothesis::B => "b (orders increasing)".to_string(),
    };
    let case = match p.case() {
        Case::FiniteM { m, c } => format!("finite M = {m}, c = {c}"),
        Case::InfiniteM => "infinite M".to_string(),
    };
    let h = match p.hspec() {
        HSpec::Coordinates => "h-coordinates",
        HSpec::SelfE => "H_j = <e_j>",
    };
    json!({ "hypothesis": hypothesis, "case": case, "h": h, "exp_h": p.exp_h() })
}

pub fn construct(group: Source, index: usize, self_e: bool) -> Result<Outcome, CliError> {
    let p = params(parse_group(group.text)?, self_e)?;
    let info = describe(&p);
    let mut terms = Vec::new();
    let mut text = format!(
        "hypothesis {}, {}, H from {}\n",
        info["hypothesis"].as_str().unwrap_or_default(),
        info["case"].as_str().unwrap_or_default(),
        info["h"].as_str().unwrap_or_default()
    );
    for n in 0..=index {
        let d = p.term(n).map_err(compute)?;
        let note = if n % 2 == 0 {
            let (j, lambda) = p.even_position(n / 2).map_err(compute)?;
            format!("even: {lambda}*e[{j}]")
        } else {
            let i = n / 2;
            let r = p.odd_range(i);
            let range = if r.is_empty() {
                String::new()
            } else {
                format!(" + e[{}..={}]", r.start, r.end - 1)
            };
            format!("odd: b_{}{range}", p.b_index(i))
        };
        text.push_str(&format!("d_{n} = {d}    ({note})\n"));
        terms.push(json!({ "index": n, "term": d.to_string(), "note": note }));
    }
    let mut certificate = info;
    certificate["terms"] = Value::Array(terms);
    Ok(Outcome {
        command: "construct",
        inputs: json!({ "group": group.name, "index": index, "self_e": self_e }),
        verdict: json!("CONSTRUCTED"),
        certificate,
        window: None,
        text,
        exit: 0,
    })
}

pub struct TseqArgs<'a> {
    pub element: &'a str,
    pub k: usize,
    pub m_max: usize,
    pub prefix: usize,
    pub self_e: bool,
    pub budget: usize,
}

pub fn tseq_check(group: Source, args: TseqArgs) -> Result<Outcome, CliError> {
    let p = params(parse_group(group.text)?, args.self_e)?;
    let g = parse_element(p.group(), args.element)?;
    if g.is_zero() {
        return Err(CliError::Usage("the element must be nonzero".into()));
    }
    let seq = p.sequence();
    let verdict =
        check_criterion(&seq, &g, args.k, args.m_max, args.prefix, args.budget).map_err(compute)?;
    let (certificate, exit, line) = match &verdict {
        Verdict::Excluded {
            m,
            prefix_excluded_from,
            certificate,
        } => {
            let bound = p.proof_exclusion_index(&g, args.k).map_err(compute)?;
            (
                json!({
                    "m": m,
                    "prefix_excluded_from": prefix_excluded_from,
                    "tail": certificate.to_string(),
                    "construction_bound": bound.to_string(),
                }),
                0,
                format!("EXCLUDED({m}) via {certificate}; construction bound {bound}"),
            )
        }
        Verdict::MemberUpTo { m_max, witness } => (
            json!({ "m_max": m_max, "witness": witness.to_string() }),
            2,
            format!("MEMBER_UP_TO({m_max}): g = {witness}"),
        ),
        Verdict::Inconclusive {
            prefix_excluded_from,
            reason,
        } => (
            json!({ "prefix_excluded_from": prefix_excluded_from, "reason": reason }),
            3,
            format!("INCONCLUSIVE: {reason}"),
        ),
    };
    Ok(Outcome {
        command: "tseq-check",
        inputs: json!({
            "group": group.name,
            "element": g.to_string(),
            "k": args.k,
            "mmax": args.m_max,
            "prefix": args.prefix,
            "self_e": args.self_e,
        }),
        verdict: json!(verdict.kind()),
        certificate,
        window: Some(args.prefix),
        text: line + "\n",
        exit,
    })
}

pub fn radical(
    group: Source,
    support: usize,
    window: usize,
    self_e: bool,
) -> Result<Outcome, CliError> {
    if window == 0 {
        return Err(CliError::Usage("--window must be at least 1".into()));
    }
    let p = params(parse_group(group.text)?, self_e)?;
    let r = radical_of(&p, support, window).map_err(compute)?;
    let mut blocks = Vec::new();
    let mut text = format!("{} ({})\n", r.tag, r.label());
    for (j, gens) in &r.blocks {
        let gens: Vec<String> = gens.iter().map(|x| x.to_string()).collect();
        let sd = r.sd_positive.get(j).map_or(0, |v| v.len());
        text.push_str(&format!(
            "block {j}: <{}>  ({sd} characters in s_d)\n",
            gens.join(", ")
        ));
        blocks.push(json!({ "block": j, "radical": gens, "sd_characters": sd }));
    }
    Ok(Outcome {
        command: "radical",
        inputs: json!({ "group": group.name, "support": support, "self_e": self_e }),
        verdict: json!(r.tag.to_string()),
        certificate: json!({ "label": r.label(), "blocks": blocks }),
        window: Some(window),
        text,
        exit: 0,
    })
}

fn case_name(c: DispatchCase) -> String {
    match c {
        DispatchCase::InfiniteOrder => "INFINITE_ORDER".into(),
        DispatchCase::Prufer => "PRUFER".into(),
        DispatchCase::TorsionUnboundedOther { p } => {
            format!("UNBOUNDED_TORSION(p={p}, not dividing exp H)")
        }
        DispatchCase::TorsionUnboundedPrime { p } => {
            format!("UNBOUNDED_TORSION(p={p}, dividing exp H)")
        }
        DispatchCase::Bounded => "BOUNDED".into(),
    }
}

pub fn decompose(group: Source, subgroup: Source, window: usize) -> Result<Outcome, CliError> {
    let g = parse_group(group.text)?;
    let spec = parse_subgroup(&g, subgroup.text)?;
    let r = dispatch_case(&g, &spec, window).map_err(compute)?;
    let cert = &r.certificate;
    let mut text = format!("case {} [{}]\n", case_name(r.case), cert.label());
    let h0: Vec<String> = r.h0.iter().map(|x| x.to_string()).collect();
    text.push_str(&format!("H_0 = <{}>\n", h0.join(", ")));
    let recipe = r.recipe.as_ref().map(|rc| {
        let e: Vec<String> = rc.e.iter().map(|x| x.to_string()).collect();
        let h: Vec<Vec<String>> = rc.h.iter().map(|hk| hk.iter().map(|x| x.to_string()).collect()).collect();
        for (k, (ek, hk)) in e.iter().zip(&h).enumerate() {
            text.push_str(&format!("block {k}: e = {ek}, H = <{}>\n", hk.join(", ")));
        }
        json!({ "e": e, "h": h, "group": print_group(&rc.group), "certified_up_to": rc.certified_up_to })
    });
    let x = r.x.as_ref().map(|part| {
        let lambda: Vec<Value> = part
            .lambda
            .iter()
            .map(|(p, e, c)| json!({ "p": p, "r": e, "count": c.to_string() }))
            .collect();
        text.push_str(&format!(
            "X = [{}]\n",
            part.tail.clone().unwrap_or_default()
        ));
        json!({ "tail": part.tail, "lambda": lambda })
    });
    if let Some(s) = &r.prufer {
        text.push_str(&format!("{}\n", s.decomposition));
    }
    let checks: Vec<Value> = cert
        .checks
        .iter()
        .map(|c| json!({ "name": c.name, "passed": c.passed }))
        .collect();
    for c in &cert.checks {
        text.push_str(&format!(
            "  [{}] {}\n",
            if c.passed { "ok" } else { "FAILED" },
            c.name
        ));
    }
    let passed = cert.all_passed();
    Ok(Outcome {
        command: "decompose",
        inputs: json!({ "group": group.name, "subgroup": subgroup.name }),
        verdict: json!(case_name(r.case)),
        certificate: json!({
            "label": cert.label(),
            "all_passed": passed,
            "checks": checks,
            "notes": cert.notes,
            "recipe": recipe,
            "x": x,
            "prufer": r.prufer.as_ref().map(|s| s.decomposition.to_string()),
        }),
        window: Some(window),
        text,
        exit: if passed { 0 } else { 3 },
    })
}

pub fn minap(group: Source) -> Result<Outcome, CliError> {
    let g = parse_group(group.text)?;
    let report = minap_admissible(&g).map_err(compute)?;
    let leading: Vec<Value> = g
        .ulm_kaplansky_leading()
        .map_err(compute)?
        .iter()
        .map(|(p, l)| json!({ "p": p, "exponent": l.exponent, "count": l.count.to_string() }))
        .collect();
    let witness = report.witness.as_ref().map(|w| {
        json!({
            "prime": w.prime,
            "m": w.m,
            "image_order": w.image_order.map(|o| o.to_string()),
        })
    });
    let mut text = format!("admissible={}\n", report.holds);
    if let Some(w) = &report.witness {
        let image = w
            .image_order
            .map_or("infinite".to_string(), |o| o.to_string());
        text.push_str(&format!(
            "witness: p = {}, x -> {}x has image of order {image}\n",
            w.prime, w.m
        ));
    }
    Ok(Outcome {
        command: "minap",
        inputs: json!({ "group": group.name }),
        verdict: json!(if report.holds {
            "ADMISSIBLE"
        } else {
            "NOT_ADMISSIBLE"
        }),
        certificate: json!({ "admissible": report.holds, "leading": leading, "witness": witness }),
        window: None,
        text,
        exit: 0,
    })
}

pub fn circle(rule: &str, x: &str) -> Result<Outcome, CliError> {
    let r = parse_rule(rule)?;
    let (a, b) = parse_rational(x)?;
    let c = circle_membership(&r, a, b).map_err(compute)?;
    let verdict = match c.verdict {
        CircleVerdict::In => "IN",
        CircleVerdict::NotIn => "NOT_IN",
    };
    Ok(Outcome {
        command: "circle",
        inputs: json!({ "rule": r.to_string(), "x": format!("{a}/{b}") }),
        verdict: json!(verdict),
        certificate: json!({
            "numerator": c.numerator,
            "denominator": c.denominator,
            "preperiod": c.preperiod,
            "period": c.period,
            "cycle": c.cycle,
        }),
        window: None,
        text: format!(
            "{verdict} ({}/{}): preperiod={}, period={}, cycle={:?}\n",
            c.numerator, c.denominator, c.preperiod, c.period, c.cycle
        ),
        exit: 0,
    })
}
