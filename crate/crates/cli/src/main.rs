//! `kdet`: determinants, torsion and relative K0 classes of small free
//! complexes, and the collapse certificate over dual numbers.
//!
//! Exit status: 0 on success, 1 on domain errors, 2 on parse errors.

use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use kdet_core::complexes::Complex;
use kdet_core::detfunctor::{det_qis, euler_iso, torsion_acyclic, EulerRoute};
use kdet_core::io::{split_reference, Document};
use kdet_core::ktheory::{
    chi_k0, chi_rel_with, collapse_certificate, enumerate_relations, harvest, random_scenario, HarvestedRelation,
};
use kdet_core::picardfiber::{check_exact_sequence, quotient_units, RelK0Class, RelPair};
use kdet_core::rings::{enumerate_units, FiniteUnits};
use kdet_core::sample::{self, Bounds};
use kdet_core::{Error, Matrix, PivotOrder, RingId};

#[derive(Parser)]
#[command(name = "kdet", version, about = "Determinant functors and relative K0 of small free complexes")]
struct Cli {
    /// Seed for randomized sampling.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Emit JSON instead of `key = value` text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Clone, Copy, ValueEnum)]
enum Route {
    Splitting,
    Inclusion,
}

impl From<Route> for EulerRoute {
    fn from(r: Route) -> Self {
        match r {
            Route::Splitting => EulerRoute::Splitting,
            Route::Inclusion => EulerRoute::Inclusion,
        }
    }
}

#[derive(Subcommand)]
enum Verb {
    /// Cohomology groups and representatives of FILE#COMPLEX.
    Cohomology { target: String },
    /// Whether FILE#MAP is a quasi-isomorphism.
    Qis { target: String },
    /// The determinant of the quasi-isomorphism FILE#MAP.
    Det { target: String },
    /// The torsion of the acyclic complex FILE#COMPLEX.
    Torsion { target: String },
    /// The unit of det C -> det H(C) over a field.
    EulerIso {
        target: String,
        #[arg(long, value_enum, default_value = "splitting")]
        route: Route,
    },
    /// The Euler characteristic in K0(R) = Z.
    Chi { target: String },
    /// The relative Euler characteristic in K0(R,S).
    ChiRel {
        target: String,
        #[arg(long)]
        pair: String,
        /// Trivialization H^ev -> H^od as FILE#MATRIX.
        #[arg(long)]
        triv: Option<String>,
        #[arg(long, value_enum, default_value = "splitting")]
        route: Route,
    },
    /// The class of a unit of S in K0(R,S).
    RelClass {
        #[arg(long)]
        pair: String,
        #[arg(long, allow_hyphen_values = true)]
        unit: String,
    },
    /// The unit group of a finite ring modulo relations.
    Quotient {
        #[arg(long)]
        ring: String,
        #[arg(long = "rel", allow_hyphen_values = true)]
        rels: Vec<String>,
    },
    /// The relation forced by the scenario FILE#SCENARIO.
    Harvest { target: String },
    /// The collapse certificate over F_p[e] (comma-separated primes).
    Collapse {
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<u64>,
    },
    /// Search for relations: exhaustive over finite rings, sampled otherwise.
    Enumerate {
        #[arg(long)]
        ring: String,
        #[arg(long, default_value_t = 2)]
        max_rank: usize,
        #[arg(long, default_value = "0:2", allow_hyphen_values = true)]
        degrees: String,
        /// Sample this many random scenarios instead of enumerating.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// The six-term exact sequence of K0(R,S) on small units.
    CheckExact {
        #[arg(long)]
        pair: String,
        #[arg(long, default_value_t = 30)]
        bound: u64,
    },
}

/// What a verb produced: a bare value or ordered fields.
enum Report {
    Scalar(String),
    Fields(Map<String, Value>),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            print!("{}", render(&report, cli.json));
            ExitCode::SUCCESS
        }
        Err(Failure::Report(report)) => {
            print!("{}", render(&report, cli.json));
            ExitCode::from(1)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if matches!(e, Error::Parse(_)) { 2 } else { 1 })
        }
    }
}

enum Failure {
    Error(Error),
    /// A check ran and failed; the report is still printed.
    Report(Report),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn render(report: &Report, as_json: bool) -> String {
    match (report, as_json) {
        (Report::Scalar(v), false) => format!("{v}\n"),
        (Report::Scalar(v), true) => format!("{}\n", json!({ "value": v })),
        (Report::Fields(m), true) => format!("{}\n", serde_json::to_string_pretty(m).expect("serializable")),
        (Report::Fields(m), false) => {
            let mut out = String::new();
            text_fields(m, "", &mut out);
            out
        }
    }
}

fn text_fields(m: &Map<String, Value>, indent: &str, out: &mut String) {
    for (k, v) in m {
        match v {
            Value::Array(items) if !items.iter().any(|x| x.is_object() || x.is_array()) => {
                let items: Vec<String> = items.iter().map(scalar).collect();
                out.push_str(&format!("{indent}{k} = [{}]\n", items.join(",")));
            }
            Value::Array(items) => {
                out.push_str(&format!("{indent}{k} = {}\n", items.len()));
                for (i, item) in items.iter().enumerate() {
                    match item {
                        Value::Object(o) => {
                            out.push_str(&format!("{indent}{k}[{}]\n", i + 1));
                            text_fields(o, &format!("{indent}  "), out);
                        }
                        other => out.push_str(&format!("{indent}  {}\n", scalar(other))),
                    }
                }
            }
            Value::Object(o) => {
                out.push_str(&format!("{indent}{k}\n"));
                text_fields(o, &format!("{indent}  "), out);
            }
            other => out.push_str(&format!("{indent}{k} = {}\n", scalar(other))),
        }
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn fields(pairs: Vec<(&str, Value)>) -> Map<String, Value> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn load(reference: &str, kind: &str) -> Result<(Document, String), Error> {
    let (file, name) = split_reference(reference)?;
    let doc = Document::read(Path::new(file))?;
    let name = match name {
        Some(n) => n.to_string(),
        None => match doc.names(kind).as_slice() {
            [only] => only.to_string(),
            names => {
                return Err(Error::Parse(format!("{file} has {} {kind} blocks; name one as {file}#NAME", names.len())))
            }
        },
    };
    Ok((doc, name))
}

fn load_complex(reference: &str) -> Result<Complex, Error> {
    let (doc, name) = load(reference, "complex")?;
    doc.complex(&name)
}

fn parse_pair(text: &str) -> Result<RelPair, Error> {
    text.parse().map_err(|e: Error| match e {
        Error::Parse(m) => Error::Parse(m),
        other => Error::Parse(format!("--pair {text}: {other}")),
    })
}

fn parse_ring(text: &str) -> Result<RingId, Error> {
    text.parse::<RingId>().and_then(RingId::validate).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(m),
        other => Error::Parse(format!("--ring {text}: {other}")),
    })
}

fn run(cli: &Cli) -> Result<Report, Failure> {
    let report = match &cli.verb {
        Verb::Cohomology { target } => {
            let c = load_complex(target)?;
            let r = c.ring();
            let mut m = Map::new();
            m.insert("ring".into(), json!(r.to_string()));
            for i in c.degrees() {
                let g = c.cohomology_at(i);
                m.insert(format!("H^{i}"), json!(g.describe()));
                if !g.is_zero() {
                    m.insert(format!("H^{i}.generators"), json!(g.generators.to_string()));
                }
            }
            Report::Fields(m)
        }
        Verb::Qis { target } => {
            let (doc, name) = load(target, "map")?;
            Report::Scalar(doc.map(&name)?.is_qis().to_string())
        }
        Verb::Det { target } => {
            let (doc, name) = load(target, "map")?;
            let m = doc.map(&name)?;
            Report::Scalar(m.ring().format(&det_qis(&m)?.unit))
        }
        Verb::Torsion { target } => {
            let c = load_complex(target)?;
            Report::Scalar(c.ring().format(&torsion_acyclic(&c)?))
        }
        Verb::EulerIso { target, route } => {
            let c = load_complex(target)?;
            Report::Scalar(c.ring().format(&euler_iso(&c, (*route).into())?))
        }
        Verb::Chi { target } => Report::Scalar(chi_k0(&load_complex(target)?).to_string()),
        Verb::ChiRel { target, pair, triv, route } => {
            let pair = parse_pair(pair)?;
            let c = load_complex(target)?;
            let t = match triv {
                Some(reference) => Some(load_trivialization(reference, pair)?),
                None => None,
            };
            Report::Scalar(chi_rel_with(&c, pair, t.as_ref(), (*route).into(), PivotOrder::RowMajor)?.to_string())
        }
        Verb::RelClass { pair, unit } => {
            let pair = parse_pair(pair)?;
            let alpha = pair.target().parse(unit).map_err(|e| Error::Parse(format!("--unit {unit}: {e}")))?;
            Report::Scalar(RelK0Class::of_unit(pair, &alpha)?.to_string())
        }
        Verb::Quotient { ring, rels } => {
            let r = parse_ring(ring)?;
            let group = match r {
                RingId::Int => FiniteUnits::signs(),
                _ if r.is_finite() => enumerate_units(r)?,
                _ => return Err(Error::Domain(format!("the unit group of {r} is infinite")).into()),
            };
            let rels = rels
                .iter()
                .map(|x| r.parse(x).map_err(|e| Error::Parse(format!("--rel {x}: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            let q = quotient_units(&group, &rels)?;
            let list = |v: &[u64]| json!(v);
            Report::Fields(fields(vec![
                ("ring", json!(r.to_string())),
                ("group_order", json!(q.group_order)),
                ("group_invariants", list(&q.group_invariants)),
                ("relations", json!(q.relations.iter().map(|x| r.format(x)).collect::<Vec<_>>())),
                ("subgroup_order", json!(q.subgroup_order)),
                ("quotient_order", json!(q.quotient_order)),
                ("quotient_invariants", list(&q.quotient_invariants)),
                ("injective", json!(q.injective())),
            ]))
        }
        Verb::Harvest { target } => {
            let (doc, name) = load(target, "scenario")?;
            let rel = harvest(&doc.scenario(&name)?)?;
            Report::Fields(relation_fields(&rel))
        }
        Verb::Collapse { p } => {
            let mut certs = Vec::new();
            for &p in p {
                let cert = collapse_certificate(p)?;
                let m: Map<String, Value> =
                    cert.lines().into_iter().map(|(k, v)| (k.to_string(), typed(k, v))).collect();
                certs.push(m);
            }
            match certs.len() {
                1 => Report::Fields(certs.pop().unwrap()),
                _ => Report::Fields(fields(vec![(
                    "certificates",
                    Value::Array(certs.into_iter().map(Value::Object).collect()),
                )])),
            }
        }
        Verb::Enumerate { ring, max_rank, degrees, samples } => {
            let r = parse_ring(ring)?;
            let (lo, hi) = parse_degrees(degrees)?;
            enumerate(r, *max_rank, lo, hi, *samples, cli.seed)?
        }
        Verb::CheckExact { pair, bound } => {
            let pair = parse_pair(pair)?;
            let rep = check_exact_sequence(pair, *bound)?;
            let src = pair.source();
            let m = fields(vec![
                ("pair", json!(pair.to_string())),
                ("units_checked", json!(rep.units_checked)),
                ("pi1_fiber", json!(rep.fiber_pi1.iter().map(|x| src.format(x)).collect::<Vec<_>>())),
                ("image_is_killed", json!(rep.image_is_killed)),
                ("kernel_is_image", json!(rep.kernel_is_image)),
                ("boundary_is_homomorphism", json!(rep.boundary_is_homomorphism)),
                ("degree_zero_only", json!(rep.degree_zero_only)),
                ("rank_map_injective", json!(rep.rank_map_injective)),
                ("exact", json!(rep.ok())),
            ]);
            if !rep.ok() {
                return Err(Failure::Report(Report::Fields(m)));
            }
            Report::Fields(m)
        }
    };
    Ok(report)
}

/// Certificate values: integers for orders, booleans for verdicts, strings
/// for everything written in a ring's grammar.
fn typed(key: &str, v: String) -> Value {
    match v.as_str() {
        "true" => Value::Bool(true),
        "false" => Value::Bool(false),
        _ if key.ends_with("invariants") => v
            .trim_matches(|c| c == '[' || c == ']')
            .split(',')
            .filter(|x| !x.is_empty())
            .map(|x| x.parse::<u64>().map(Value::from))
            .collect::<Result<Vec<_>, _>>()
            .map(Value::Array)
            .unwrap_or(Value::String(v)),
        _ if key == "p" || key.ends_with("order") || key.ends_with("order_at_most") => {
            v.parse::<u64>().map(Value::from).unwrap_or(Value::String(v))
        }
        _ => Value::String(v),
    }
}

fn relation_fields(rel: &HarvestedRelation) -> Map<String, Value> {
    fields(vec![
        ("ring", json!(rel.ring.to_string())),
        ("ratio", json!(rel.expression())),
        ("ratio_value", json!(rel.ring.format(&rel.ratio))),
        ("trivial", json!(rel.is_trivial())),
        ("origin", json!(rel.origin)),
    ])
}

fn parse_degrees(text: &str) -> Result<(i32, i32), Error> {
    let bad = || Error::Parse(format!("--degrees {text}: expected lo:hi"));
    let (lo, hi) = text.split_once(':').ok_or_else(bad)?;
    let (lo, hi) = (lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?);
    if lo > hi {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn enumerate(r: RingId, max_rank: usize, lo: i32, hi: i32, samples: Option<usize>, seed: u64) -> Result<Report, Error> {
    let (relations, mode, count) = match samples {
        None if r.is_finite() => {
            let e = enumerate_relations(r, max_rank, lo, hi)?;
            (e.relations, "exhaustive", e.scenarios)
        }
        _ => {
            let n = samples.unwrap_or(500);
            let mut rng = sample::rng(seed);
            let mut found: Vec<HarvestedRelation> = Vec::new();
            for _ in 0..n {
                let rel = harvest(&random_scenario(r, Bounds::new(max_rank, lo, hi), &mut rng))?;
                if !rel.is_trivial() && !found.iter().any(|x| x.ratio == rel.ratio) {
                    found.push(rel);
                }
            }
            found.sort_by(|a, b| a.ratio.cmp(&b.ratio));
            (found, "sampled", n)
        }
    };
    let mut m = fields(vec![
        ("ring", json!(r.to_string())),
        ("mode", json!(mode)),
        ("max_rank", json!(max_rank)),
        ("degrees", json!(format!("{lo}:{hi}"))),
    ]);
    if mode == "sampled" {
        m.insert("seed".into(), json!(seed));
    }
    m.insert("scenarios".into(), json!(count));
    m.insert("relations".into(), Value::Array(relations.iter().map(|x| Value::Object(relation_fields(x))).collect()));
    Ok(Report::Fields(m))
}

fn load_trivialization(reference: &str, pair: RelPair) -> Result<Matrix, Error> {
    let (doc, name) = load(reference, "matrix")?;
    let t = doc.matrix(&name)?;
    if t.ring() == pair.target() {
        return Ok(t);
    }
    if t.ring() == pair.source() {
        return t.map(pair.target(), |x| pair.map_elem(x));
    }
    Err(Error::Domain(format!("the trivialization is over {}, expected {}", t.ring(), pair.target())))
}
