//! Browser bindings: the collapse certificate, relative Euler
//! characteristics of `[Z -n-> Z]`, and unit-group quotients. Every export
//! returns the same `key = value` text the command line prints.

use wasm_bindgen::prelude::*;

use kdet_core::complexes::Complex;
use kdet_core::ktheory::{chi_rel, collapse_certificate};
use kdet_core::picardfiber::{quotient_units as quotient, RelPair};
use kdet_core::rings::{enumerate_units, FiniteUnits};
use kdet_core::{Error, Matrix, RingId};

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

/// The collapse certificate over `F_p[e]`.
#[wasm_bindgen(js_name = collapseCertificate)]
pub fn collapse_certificate_text(p: u32) -> Result<String, JsError> {
    collapse_certificate(p.into()).map(|c| c.to_string()).map_err(js)
}

/// The class of `[Z -n-> Z]` (degrees 0 and 1) in `K0(Z, Q)`.
#[wasm_bindgen(js_name = chiRel)]
pub fn chi_rel_for(n: i32) -> Result<String, JsError> {
    if n == 0 {
        return Err(js(Error::Domain("n must be non-zero".into())));
    }
    let c = Complex::two_term(0, Matrix::from_i64(RingId::Int, &[&[n.into()]]));
    let pair = RelPair::new(RingId::Int, RingId::Rat).map_err(js)?;
    chi_rel(&c, pair, None).map(|x| x.to_string()).map_err(js)
}

/// The unit group of `ring` (Z or a finite ring) modulo the subgroup
/// generated by the whitespace- or comma-separated `relations`.
#[wasm_bindgen(js_name = quotientUnits)]
pub fn quotient_units(ring: &str, relations: &str) -> Result<String, JsError> {
    let r: RingId = ring.trim().parse::<RingId>().and_then(RingId::validate).map_err(js)?;
    let group = match r {
        RingId::Int => FiniteUnits::signs(),
        _ => enumerate_units(r).map_err(js)?,
    };
    let rels = relations
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| r.parse(s))
        .collect::<Result<Vec<_>, _>>()
        .map_err(js)?;
    quotient(&group, &rels).map(|q| q.to_string()).map_err(js)
}

#[cfg(test)]
mod tests {
    use super::*;

    // JsError can only be built on wasm targets, so only successes run here.
    #[test]
    fn exports_match_the_library() {
        let cert = collapse_certificate_text(3).unwrap();
        assert!(cert.contains("ratio = (1+1*e)^-1"));
        assert!(cert.contains("quotient_order = 2"));
        assert_eq!(chi_rel_for(12).unwrap(), "12");
        assert_eq!(chi_rel_for(-7).unwrap(), "7");
        let q = quotient_units("F5[e]", "1+1*e").unwrap();
        assert!(q.contains("quotient_order = 4"));
        assert!(quotient_units("Z", "").unwrap().contains("quotient_order = 2"));
    }
}
