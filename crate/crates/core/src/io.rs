//! The line-oriented input format shared by every verb.
//!
//! ```text
//! ring F3[e]
//! complex C
//!   degree -1 rank 1
//!   degree 0 rank 1
//!   d -1 [[0+1*e]]
//! map f from C to C
//!   at 0 [[1+1*e]]
//! homotopy h from C to C        # components h^i : C^i -> C^(i-1)
//!   at 0 [[1]]
//! ses D                         # 0 -> A -i-> B -p-> C -> 0
//!   i incl
//!   p proj
//!   section 0 [[0],[1]]         # optional; solved for when absent
//! scenario S
//!   first D
//!   second D
//!   a f
//!   b g
//!   c k
//!   h1 h                        # witnesses h1, h2, h3 (zero when omitted)
//!   witnesses solve             # ... or let the solver find all three
//! matrix t over Q [[2/3]]       # `over` defaults to the file's ring
//! ```
//!
//! Lines starting with `#` are comments; trailing `# ...` is ignored.
//! Absent degrees have rank 0; `d i` maps degree `i` to `i + 1`. Matrix
//! literals are `[[a,b],[c,d]]`, or `[]r x c` for empty shapes.

use std::collections::BTreeMap;
use std::path::Path;

use crate::complexes::{ChainMap, Complex, Homotopy};
use crate::detfunctor::Ses;
use crate::error::{Error, Result};
use crate::ktheory::TriangleIsoScenario;
use crate::linalg::Matrix;
use crate::rings::RingId;

/// Parses a matrix literal over `ring`.
pub fn parse_matrix(ring: RingId, text: &str) -> Result<Matrix> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if let Some(shape) = t.strip_prefix("[]") {
        let (r, c) = shape
            .split_once('x')
            .ok_or_else(|| Error::Parse(format!("empty matrix `{text}` should look like []r x c")))?;
        let dim = |s: &str| s.parse::<usize>().map_err(|_| Error::Parse(format!("bad dimension `{s}` in `{text}`")));
        let (r, c) = (dim(r)?, dim(c)?);
        if r != 0 && c != 0 {
            return Err(Error::Parse(format!("`{text}`: []r x c needs r = 0 or c = 0")));
        }
        return Ok(Matrix::zeros(ring, r, c));
    }
    let inner = t
        .strip_prefix("[[")
        .and_then(|s| s.strip_suffix("]]"))
        .ok_or_else(|| Error::Parse(format!("matrix literal `{text}` should look like [[a,b],[c,d]]")))?;
    let rows = inner
        .split("],[")
        .map(|row| row.split(',').map(|x| ring.parse(x).map_err(as_parse)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Matrix::from_rows(ring, rows).map_err(as_parse)
}

fn as_parse(e: Error) -> Error {
    match e {
        Error::Parse(m) => Error::Parse(m),
        other => Error::Parse(other.to_string()),
    }
}

#[derive(Clone, Debug)]
struct Block {
    kind: String,
    name: String,
    header: Vec<String>,
    line: usize,
    body: Vec<(usize, String)>,
}

/// A parsed file: its ring and named blocks, resolved on demand.
#[derive(Clone, Debug)]
pub struct Document {
    pub origin: String,
    pub ring: RingId,
    blocks: Vec<Block>,
}

const KINDS: [&str; 6] = ["complex", "map", "homotopy", "ses", "scenario", "matrix"];

impl Document {
    pub fn read(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: cannot read: {e}", path.display())))?;
        Self::parse(&path.display().to_string(), &text)
    }

    pub fn parse(origin: &str, text: &str) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Parse(format!("{origin}:{line}: {msg}"));
        let mut ring = None;
        let mut blocks: Vec<Block> = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let content = raw.split('#').next().unwrap_or("");
            if content.trim().is_empty() {
                continue;
            }
            let indented = content.starts_with([' ', '\t']);
            let words: Vec<String> = content.split_whitespace().map(str::to_string).collect();
            if indented {
                let block = blocks.last_mut().ok_or_else(|| err(line, "indented line outside a block".into()))?;
                block.body.push((line, content.trim().to_string()));
                continue;
            }
            match words[0].as_str() {
                "ring" => {
                    if ring.is_some() || !blocks.is_empty() {
                        return Err(err(line, "`ring` must be the first line, once".into()));
                    }
                    let r: RingId =
                        content.trim()["ring".len()..].trim().parse().map_err(|e: Error| err(line, e.to_string()))?;
                    ring = Some(r);
                }
                kind if KINDS.contains(&kind) => {
                    if ring.is_none() {
                        return Err(err(line, "missing `ring` header".into()));
                    }
                    let name = words.get(1).cloned().ok_or_else(|| err(line, format!("`{kind}` needs a name")))?;
                    if blocks.iter().any(|b| b.name == name) {
                        return Err(err(line, format!("`{name}` is defined twice")));
                    }
                    let header = match kind {
                        "map" | "homotopy" => {
                            if words.len() != 6 || words[2] != "from" || words[4] != "to" {
                                return Err(err(line, format!("expected `{kind} NAME from A to B`")));
                            }
                            vec![words[3].clone(), words[5].clone()]
                        }
                        "matrix" => {
                            let rest = content.trim()["matrix".len()..].trim()[name.len()..].trim().to_string();
                            match rest.strip_prefix("over ") {
                                Some(r) => {
                                    let (tag, lit) = r
                                        .trim()
                                        .split_once(' ')
                                        .ok_or_else(|| err(line, "missing matrix literal".into()))?;
                                    vec![tag.to_string(), lit.trim().to_string()]
                                }
                                None => vec![String::new(), rest],
                            }
                        }
                        _ => {
                            if words.len() != 2 {
                                return Err(err(line, format!("expected `{kind} NAME`")));
                            }
                            Vec::new()
                        }
                    };
                    blocks.push(Block { kind: kind.into(), name, header, line, body: Vec::new() });
                }
                other => return Err(err(line, format!("unknown keyword `{other}`"))),
            }
        }
        let ring = ring.ok_or_else(|| Error::Parse(format!("{origin}: missing `ring` header")))?;
        let doc = Document { origin: origin.to_string(), ring, blocks };
        doc.check_syntax()?;
        Ok(doc)
    }

    /// Parses every block once so that syntax errors surface at load time.
    fn check_syntax(&self) -> Result<()> {
        for b in &self.blocks {
            match b.kind.as_str() {
                "complex" => {
                    self.complex_parts(b)?;
                }
                "map" | "homotopy" => {
                    self.components(b, "at")?;
                }
                "matrix" => {
                    self.matrix_of(b)?;
                }
                "ses" => {
                    self.fields(b, &["i", "p"], &["section"])?;
                }
                "scenario" => {
                    self.fields(b, &["first", "second", "a", "b", "c"], &["h1", "h2", "h3", "witnesses"])?;
                }
                _ => unreachable!(),
            }
        }
        Ok(())
    }

    pub fn names(&self, kind: &str) -> Vec<&str> {
        self.blocks.iter().filter(|b| b.kind == kind).map(|b| b.name.as_str()).collect()
    }

    fn block(&self, kind: &str, name: &str) -> Result<&Block> {
        match self.blocks.iter().find(|b| b.name == name) {
            Some(b) if b.kind == kind => Ok(b),
            Some(b) => Err(Error::Parse(format!("{}:{}: `{name}` is a {}, not a {kind}", self.origin, b.line, b.kind))),
            None => Err(Error::Parse(format!("{}: no {kind} named `{name}`", self.origin))),
        }
    }

    fn perr(&self, line: usize, msg: impl std::fmt::Display) -> Error {
        Error::Parse(format!("{}:{line}: {msg}", self.origin))
    }

    /// Semantic failures keep their meaning but gain a location.
    fn locate(&self, line: usize, e: Error) -> Error {
        match e {
            Error::Parse(m) => Error::Parse(format!("{}:{line}: {m}", self.origin)),
            other => Error::Domain(format!("{}:{line}: {other}", self.origin)),
        }
    }

    fn int(&self, line: usize, s: &str) -> Result<i32> {
        s.parse().map_err(|_| self.perr(line, format!("`{s}` is not an integer")))
    }

    fn complex_parts(&self, b: &Block) -> Result<(BTreeMap<i32, usize>, BTreeMap<i32, Matrix>)> {
        let mut ranks = BTreeMap::new();
        let mut diffs = BTreeMap::new();
        for (line, text) in &b.body {
            let w = split3(text);
            match w.as_slice() {
                ["degree", i, rest] => {
                    let i = self.int(*line, i)?;
                    let r = rest
                        .trim()
                        .strip_prefix("rank")
                        .and_then(|r| r.trim().parse::<usize>().ok())
                        .ok_or_else(|| self.perr(*line, "expected `degree i rank r`"))?;
                    if ranks.insert(i, r).is_some() {
                        return Err(self.perr(*line, format!("degree {i} given twice")));
                    }
                }
                ["d", i, lit] => {
                    let i = self.int(*line, i)?;
                    let m = parse_matrix(self.ring, lit).map_err(|e| self.locate(*line, e))?;
                    if diffs.insert(i, m).is_some() {
                        return Err(self.perr(*line, format!("d {i} given twice")));
                    }
                }
                _ => return Err(self.perr(*line, format!("expected `degree i rank r` or `d i MATRIX`, got `{text}`"))),
            }
        }
        Ok((ranks, diffs))
    }

    fn components(&self, b: &Block, key: &str) -> Result<BTreeMap<i32, (usize, Matrix)>> {
        let mut out = BTreeMap::new();
        for (line, text) in &b.body {
            let w = split3(text);
            match w.as_slice() {
                [k, i, lit] if *k == key => {
                    let i = self.int(*line, i)?;
                    let m = parse_matrix(self.ring, lit).map_err(|e| self.locate(*line, e))?;
                    if out.insert(i, (*line, m)).is_some() {
                        return Err(self.perr(*line, format!("degree {i} given twice")));
                    }
                }
                _ => return Err(self.perr(*line, format!("expected `{key} i MATRIX`, got `{text}`"))),
            }
        }
        Ok(out)
    }

    fn fields(&self, b: &Block, required: &[&str], optional: &[&str]) -> Result<BTreeMap<String, (usize, String)>> {
        let mut out = BTreeMap::new();
        for (line, text) in &b.body {
            let (k, v) = text
                .split_once(char::is_whitespace)
                .ok_or_else(|| self.perr(*line, format!("expected `key value`, got `{text}`")))?;
            if !required.contains(&k) && !optional.contains(&k) {
                return Err(self.perr(*line, format!("unknown field `{k}` in {} `{}`", b.kind, b.name)));
            }
            // sections are keyed per degree
            let key =
                if k == "section" { format!("section {}", v.split(' ').next().unwrap_or("")) } else { k.to_string() };
            if out.insert(key, (*line, v.trim().to_string())).is_some() {
                return Err(self.perr(*line, format!("field `{k}` given twice")));
            }
        }
        for k in required {
            if !out.contains_key(*k) {
                return Err(self.perr(b.line, format!("{} `{}` lacks `{k}`", b.kind, b.name)));
            }
        }
        Ok(out)
    }

    fn matrix_of(&self, b: &Block) -> Result<Matrix> {
        let ring =
            if b.header[0].is_empty() { self.ring } else { b.header[0].parse().map_err(|e| self.locate(b.line, e))? };
        parse_matrix(ring, &b.header[1]).map_err(|e| self.locate(b.line, e))
    }

    pub fn complex(&self, name: &str) -> Result<Complex> {
        let b = self.block("complex", name)?;
        let (ranks, diffs) = self.complex_parts(b)?;
        let c = Complex::from_parts(self.ring, &ranks, &diffs).map_err(|e| self.locate(b.line, e))?;
        for (i, d) in &diffs {
            if d.shape() != (c.rank(i + 1), c.rank(*i)) && !(d.rows() == 0 || d.cols() == 0) {
                return Err(self.locate(b.line, Error::Shape(format!("d {i} does not match the ranks"))));
            }
        }
        c.validate().map_err(|e| self.locate(b.line, e))?;
        Ok(c)
    }

    pub fn map(&self, name: &str) -> Result<ChainMap> {
        let b = self.block("map", name)?;
        let (s, t) = (self.complex(&b.header[0])?, self.complex(&b.header[1])?);
        let comps = self.components(b, "at")?.into_iter().map(|(i, (_, m))| (i, m)).collect();
        ChainMap::new(s, t, comps).map_err(|e| self.locate(b.line, e))
    }

    pub fn homotopy(&self, name: &str) -> Result<Homotopy> {
        let b = self.block("homotopy", name)?;
        let (s, t) = (self.complex(&b.header[0])?, self.complex(&b.header[1])?);
        let comps = self.components(b, "at")?;
        for (i, (line, m)) in &comps {
            if m.shape() != (t.rank(i - 1), s.rank(*i)) {
                return Err(
                    self.locate(*line, Error::Shape(format!("h at {i} should be {}x{}", t.rank(i - 1), s.rank(*i))))
                );
            }
        }
        Ok(Homotopy { comps: comps.into_iter().map(|(i, (_, m))| (i, m)).collect() })
    }

    pub fn matrix(&self, name: &str) -> Result<Matrix> {
        self.matrix_of(self.block("matrix", name)?)
    }

    pub fn ses(&self, name: &str) -> Result<Ses> {
        let b = self.block("ses", name)?;
        let f = self.fields(b, &["i", "p"], &["section"])?;
        let (i, p) = (self.map(&f["i"].1)?, self.map(&f["p"].1)?);
        let sections: Vec<_> = f.iter().filter(|(k, _)| k.starts_with("section")).collect();
        if sections.is_empty() {
            return Ses::from_maps(i, p).map_err(|e| self.locate(b.line, e));
        }
        let mut sigma = BTreeMap::new();
        for (_, (line, v)) in sections {
            let (deg, lit) = v.split_once(' ').ok_or_else(|| self.perr(*line, "expected `section i MATRIX`"))?;
            sigma.insert(self.int(*line, deg)?, parse_matrix(self.ring, lit).map_err(|e| self.locate(*line, e))?);
        }
        Ses::new(i, p, sigma).map_err(|e| self.locate(b.line, e))
    }

    /// A scenario; with `witnesses solve` the homotopies are searched for,
    /// otherwise the listed ones (zero when omitted) are used as given.
    pub fn scenario(&self, name: &str) -> Result<TriangleIsoScenario> {
        let b = self.block("scenario", name)?;
        let f = self.fields(b, &["first", "second", "a", "b", "c"], &["h1", "h2", "h3", "witnesses"])?;
        let first = self.ses(&f["first"].1)?;
        let second = self.ses(&f["second"].1)?;
        let (a, bm, c) = (self.map(&f["a"].1)?, self.map(&f["b"].1)?, self.map(&f["c"].1)?);
        if let Some((line, mode)) = f.get("witnesses") {
            if mode != "solve" {
                return Err(self.perr(*line, format!("`witnesses {mode}`: only `witnesses solve` is supported")));
            }
            if ["h1", "h2", "h3"].iter().any(|k| f.contains_key(*k)) {
                return Err(self.perr(*line, "give either explicit witnesses or `witnesses solve`, not both"));
            }
            return TriangleIsoScenario::witness(first, second, a, bm, c).map_err(|e| self.locate(b.line, e));
        }
        let hom = |k: &str| match f.get(k) {
            Some((_, n)) => self.homotopy(n),
            None => Ok(Homotopy::zero()),
        };
        Ok(TriangleIsoScenario { first, second, a, b: bm, c, h1: hom("h1")?, h2: hom("h2")?, h3: hom("h3")? })
    }
}

/// The first two words of a line and the remainder.
fn split3(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = text.trim();
    for _ in 0..2 {
        match rest.split_once(char::is_whitespace) {
            Some((w, r)) => {
                out.push(w);
                rest = r.trim_start();
            }
            None => break,
        }
    }
    out.push(rest);
    out
}

/// Splits `FILE#NAME`.
pub fn split_reference(reference: &str) -> Result<(&str, Option<&str>)> {
    match reference.rsplit_once('#') {
        Some((file, name)) if !name.is_empty() && !file.is_empty() => Ok((file, Some(name))),
        Some(_) => Err(Error::Parse(format!("bad reference `{reference}`; expected FILE#NAME"))),
        None => Ok((reference, None)),
    }
}

/// Parses the one-line rendering of a complex used in reports:
/// `{i:rank ... di=MATRIX ...}`, or `0`.
pub fn parse_brief_complex(ring: RingId, text: &str) -> Result<Complex> {
    let text = text.trim();
    if text == "0" {
        return Ok(Complex::zero(ring));
    }
    let (mut ranks, mut diffs) = (BTreeMap::new(), BTreeMap::new());
    for part in brief_parts(text)? {
        let (key, value) = part.split_once(['=', ':']).ok_or_else(|| brief_error(text))?;
        match key.strip_prefix('d') {
            Some(i) => {
                diffs.insert(brief_degree(i, text)?, parse_matrix(ring, value)?);
            }
            None => {
                let r = value.parse::<usize>().map_err(|_| brief_error(text))?;
                ranks.insert(brief_degree(key, text)?, r);
            }
        }
    }
    let c = Complex::from_parts(ring, &ranks, &diffs)?;
    c.validate()?;
    Ok(c)
}

/// Parses the one-line rendering of the components of a chain map or
/// homotopy used in reports: `{i:MATRIX ...}`.
pub fn parse_brief_components(ring: RingId, text: &str) -> Result<BTreeMap<i32, Matrix>> {
    let text = text.trim();
    let mut comps = BTreeMap::new();
    for part in brief_parts(text)? {
        let (i, m) = part.split_once(':').ok_or_else(|| brief_error(text))?;
        comps.insert(brief_degree(i, text)?, parse_matrix(ring, m)?);
    }
    Ok(comps)
}

fn brief_parts(text: &str) -> Result<std::str::SplitWhitespace<'_>> {
    let inner = text.strip_prefix('{').and_then(|s| s.strip_suffix('}')).ok_or_else(|| brief_error(text))?;
    Ok(inner.split_whitespace())
}

fn brief_degree(s: &str, text: &str) -> Result<i32> {
    s.parse().map_err(|_| brief_error(text))
}

fn brief_error(text: &str) -> Error {
    Error::Parse(format!("`{text}` should look like {{0:1 1:1 d0=[[5]]}}"))
}

/// The `complex` block for `c`.
pub fn print_complex(name: &str, c: &Complex) -> String {
    let mut out = format!("complex {name}\n");
    for i in c.degrees() {
        out += &format!("  degree {i} rank {}\n", c.rank(i));
    }
    for i in c.degrees() {
        let d = c.d(i);
        if c.rank(i + 1) > 0 && d.cols() > 0 {
            out += &format!("  d {i} {d}\n");
        }
    }
    out
}

/// The `map` block for `m`, naming its source and target.
pub fn print_map(name: &str, source: &str, target: &str, m: &ChainMap) -> String {
    let mut out = format!("map {name} from {source} to {target}\n");
    for i in m.source().degrees() {
        if m.target().rank(i) > 0 {
            out += &format!("  at {i} {}\n", m.comp(i));
        }
    }
    out
}

pub fn print_homotopy(name: &str, source: &str, target: &str, h: &Homotopy) -> String {
    let mut out = format!("homotopy {name} from {source} to {target}\n");
    for (i, m) in &h.comps {
        out += &format!("  at {i} {m}\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const DUAL: &str = "ring F3[e]\n# the triangle of e\ncomplex A\n  degree 0 rank 1\ncomplex K\n  degree -1 rank 1\n  degree 0 rank 1\n  d -1 [[0+1*e]]\nmap f from A to A\n  at 0 [[1+1*e]]\nmatrix t over Q [[2/3]]\n";

    #[test]
    fn parses_complexes_and_maps() {
        let doc = Document::parse("mem", DUAL).unwrap();
        let k = doc.complex("K").unwrap();
        assert_eq!(k.rank(-1), 1);
        assert_eq!(k.d(-1), Matrix::from_rows(doc.ring, vec![vec![doc.ring.dual(0, 1)]]).unwrap());
        let f = doc.map("f").unwrap();
        assert_eq!(f.comp(0).get(0, 0), &doc.ring.dual(1, 1));
        assert_eq!(doc.matrix("t").unwrap().ring(), RingId::Rat);
    }

    #[test]
    fn matrix_literals_round_trip() {
        let r = RingId::Rat;
        for lit in ["[[1,-2/3],[0,5]]", "[]2x0", "[]0x3"] {
            assert_eq!(parse_matrix(r, lit).unwrap().to_string(), lit);
        }
        assert_eq!(parse_matrix(r, "[] 2 x 0").unwrap().shape(), (2, 0));
        assert!(parse_matrix(r, "[[1,2],[3]]").is_err());
        assert!(parse_matrix(RingId::Int, "[[1/2]]").is_err());
    }

    #[test]
    fn printed_blocks_reparse() {
        let doc = Document::parse("mem", DUAL).unwrap();
        let k = doc.complex("K").unwrap();
        let f = doc.map("f").unwrap();
        let text = format!("ring F3[e]\n{}{}", print_complex("A", f.source()), print_map("f", "A", "A", &f));
        let text = format!("{text}{}", print_complex("K", &k));
        let again = Document::parse("mem", &text).unwrap();
        assert_eq!(again.complex("K").unwrap(), k);
        assert_eq!(again.map("f").unwrap(), f);
    }

    #[test]
    fn errors_name_the_line() {
        let e = Document::parse("x.cx", "ring Z\ncomplex C\n  degree 0 rank one\n").unwrap_err();
        assert!(matches!(&e, Error::Parse(m) if m.starts_with("x.cx:3:")), "{e}");
        let doc = Document::parse(
            "x.cx",
            "ring Z\ncomplex C\n  degree 0 rank 1\n  degree 1 rank 1\n  degree 2 rank 1\n  d 0 [[1]]\n  d 1 [[1]]\n",
        )
        .unwrap();
        assert!(matches!(doc.complex("C"), Err(Error::Domain(m)) if m.starts_with("x.cx:2:")));
        assert!(Document::parse("x.cx", "complex C\n").is_err());
        assert!(matches!(doc.map("C"), Err(Error::Parse(_))));
    }

    #[test]
    fn scenario_blocks() {
        let text = "ring F3[e]\ncomplex B\n  degree 0 rank 1\ncomplex K\n  degree -1 rank 1\n  degree 0 rank 1\n  d -1 [[0+1*e]]\ncomplex A1\n  degree -1 rank 1\nmap inc from B to K\n  at 0 [[1]]\nmap pr from K to A1\n  at -1 [[-1]]\nses D\n  i inc\n  p pr\nmap a from B to B\n  at 0 [[1+1*e]]\nmap b from K to K\n  at -1 [[1]]\n  at 0 [[1]]\nmap c from A1 to A1\n  at -1 [[1]]\nhomotopy h from B to K\n  at 0 [[1]]\nscenario S\n  first D\n  second D\n  a a\n  b b\n  c c\n  h1 h\n";
        let doc = Document::parse("mem", text).unwrap();
        let s = doc.scenario("S").unwrap();
        s.verify().unwrap();
        let solved = Document::parse("mem", &text.replace("  h1 h\n", "  witnesses solve\n")).unwrap();
        solved.scenario("S").unwrap().verify().unwrap();
        let bare = Document::parse("mem", &text.replace("  h1 h\n", "")).unwrap();
        assert!(bare.scenario("S").unwrap().verify().is_err());
    }

    #[test]
    fn brief_renderings_parse_back() {
        let r: RingId = "F3[e]".parse().unwrap();
        let text = "{-1:1 0:1 d-1=[[0+1*e]]}";
        let c = parse_brief_complex(r, text).unwrap();
        assert_eq!(crate::ktheory::brief(&c), text);
        assert!(parse_brief_complex(r, "0").unwrap().is_zero());
        let comps = parse_brief_components(r, "{-1:[[1+0*e]] 0:[[1+1*e]]}").unwrap();
        assert_eq!(comps[&0].to_string(), "[[1+1*e]]");
        assert!(parse_brief_components(r, "{}").unwrap().is_empty());
        assert!(matches!(parse_brief_complex(r, "{0:1 d0=[[1]]"), Err(Error::Parse(_))));
        assert!(parse_brief_complex(r, "{0:1 1:1 2:1 d0=[[1]] d1=[[1]]}").is_err());
    }
}
