use std::path::PathBuf;
use std::process::{Command, Output};

use kdet_core::complexes::{ChainMap, Complex};
use kdet_core::io::{parse_brief_complex, parse_brief_components, Document};
use kdet_core::ktheory::brief;
use kdet_core::RingId;

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join(name).display().to_string()
}

fn kdet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kdet")).args(args).output().expect("kdet runs")
}

fn ok(args: &[&str]) -> String {
    let out = kdet(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    kdet(args).status.code().expect("exit code")
}

fn field<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(" = ")))
        .unwrap_or_else(|| panic!("no `{key}` in\n{text}"))
}

#[test]
fn required_outputs() {
    let tor5 = data("data/tor5.cx");
    let collapse = ok(&["collapse", "--p", "3"]);
    assert!(collapse.contains("ratio = (1+1*e)^-1"));
    assert!(collapse.contains("quotient_order = 2"));
    assert_eq!(ok(&["chi", &format!("{tor5}#C")]), "0\n");
    assert_eq!(ok(&["chi-rel", &format!("{tor5}#C"), "--pair", "Z:Q"]), "5\n");
    assert_eq!(ok(&["rel-class", "--pair", "Z:Q", "--unit", "-10/3"]), "10/3\n");
    let q = ok(&["quotient", "--ring", "F3[e]", "--rel", "1+1*e"]);
    assert_eq!(field(&q, "group_order"), "6");
    assert_eq!(field(&q, "quotient_order"), "2");
    assert_eq!(field(&q, "injective"), "false");
}

#[test]
fn collapse_matches_golden_files() {
    for p in [2, 3, 5] {
        let golden = std::fs::read_to_string(data(&format!("golden/collapse_p{p}.txt"))).unwrap();
        assert_eq!(ok(&["collapse", "--p", &p.to_string()]), golden, "p = {p}");
    }
    let golden = std::fs::read_to_string(data("golden/collapse_p3.json")).unwrap();
    assert_eq!(ok(&["--json", "collapse", "--p", "3"]), golden);
}

#[test]
fn collapse_quotient_orders() {
    let text = ok(&["collapse", "--p", "2,3,5"]);
    let orders: Vec<&str> = text.lines().filter_map(|l| l.trim().strip_prefix("quotient_order = ")).collect();
    assert_eq!(orders, ["1", "2", "4"]);
    assert_eq!(text.matches("witnesses_verified = true").count(), 3);
}

#[test]
fn json_is_typed() {
    let v: serde_json::Value = serde_json::from_str(&ok(&["--json", "collapse", "--p", "5"])).unwrap();
    assert_eq!(v["quotient_order"], 4);
    assert_eq!(v["injective"], false);
    assert_eq!(v["ratio"], "(1+1*e)^-1");
    let v: serde_json::Value =
        serde_json::from_str(&ok(&["--json", "rel-class", "--pair", "Z:Q", "--unit", "-10/3"])).unwrap();
    assert_eq!(v["value"], "10/3");
}

#[test]
fn exit_codes() {
    let maps = data("data/maps.cx");
    assert_eq!(code(&["frobnicate"]), 2);
    assert_eq!(code(&["quotient", "--ring", "F4", "--rel", "1"]), 2);
    assert_eq!(code(&["rel-class", "--pair", "Z:Q", "--unit", "1/0"]), 2);
    assert_eq!(code(&["chi", "no/such/file.cx"]), 2);
    assert_eq!(code(&["det", &format!("{maps}#zero")]), 1);
    assert_eq!(code(&["torsion", &data("data/tor5.cx")]), 1);
    assert_eq!(code(&["rel-class", "--pair", "Z:Q", "--unit", "0"]), 1);
    assert_eq!(code(&["collapse", "--p", "4"]), 1);
    assert_eq!(code(&["harvest", &format!("{}#unwitnessed", data("data/collapse3.cx"))]), 1);
}

#[test]
fn maps_and_trivializations() {
    let maps = data("data/maps.cx");
    assert_eq!(ok(&["qis", &format!("{maps}#zero")]), "false\n");
    assert_eq!(ok(&["qis", &format!("{maps}#neg")]), "true\n");
    assert_eq!(ok(&["det", &format!("{maps}#swap")]), "-1\n");
    assert_eq!(ok(&["det", &format!("{maps}#neg")]), "1\n");
    assert_eq!(ok(&["chi-rel", &format!("{maps}#S"), "--pair", "Z:Q", "--triv", &format!("{maps}#t")]), "2/3\n");
    assert_eq!(code(&["chi-rel", &format!("{maps}#S"), "--pair", "Z:Q"]), 1);
}

#[test]
fn harvest_solves_or_checks_witnesses() {
    let file = data("data/collapse3.cx");
    for name in ["given", "solved"] {
        let text = ok(&["harvest", &format!("{file}#{name}")]);
        assert_eq!(field(&text, "ratio_value"), "1+2*e");
        assert_eq!(field(&text, "trivial"), "false");
    }
}

#[test]
fn enumeration_finds_the_collapse_only_over_dual_numbers() {
    let dual = ok(&["enumerate", "--ring", "F3[e]", "--degrees", "-1:0"]);
    assert_eq!(field(&dual, "relations"), "2");
    assert!(dual.contains("ratio_value = 1+1*e") && dual.contains("ratio_value = 1+2*e"));
    let f2 = ok(&["enumerate", "--ring", "F2"]);
    assert_eq!(field(&f2, "relations"), "[]");
    let z = ok(&["enumerate", "--ring", "Z", "--samples", "40", "--seed", "7"]);
    assert_eq!(field(&z, "relations"), "[]");
    assert_eq!(field(&z, "seed"), "7");
}

#[test]
fn check_exact_pairs() {
    for pair in ["Z:Q", "Z:Z[1/6]", "Z[1/6]:Q"] {
        let text = ok(&["check-exact", "--pair", pair]);
        assert_eq!(field(&text, "exact"), "true", "{pair}");
    }
}

#[test]
fn output_is_deterministic() {
    let runs = [
        vec!["collapse", "--p", "2,3,5"],
        vec!["--json", "enumerate", "--ring", "Q", "--samples", "30", "--seed", "3"],
        vec!["quotient", "--ring", "Z/9", "--rel", "4"],
    ];
    for args in runs {
        assert_eq!(kdet(&args).stdout, kdet(&args).stdout, "{args:?}");
    }
}

#[test]
fn emitted_values_parse_back() {
    let text = ok(&["collapse", "--p", "5"]);
    let r: RingId = field(&text, "ring").parse().unwrap();
    for key in ["unit", "ratio_value"] {
        let x = r.parse(field(&text, key)).unwrap();
        assert_eq!(r.format(&x), field(&text, key));
    }
    let complexes: Vec<Complex> = ["triangle_first", "triangle_middle", "triangle_third"]
        .iter()
        .map(|key| {
            let c = parse_brief_complex(r, field(&text, key)).unwrap();
            assert_eq!(brief(&c), field(&text, key));
            c
        })
        .collect();
    for (key, c) in [("map_a", &complexes[0]), ("map_b", &complexes[1]), ("map_c", &complexes[2])] {
        let m = ChainMap::new(c.clone(), c.clone(), parse_brief_components(r, field(&text, key)).unwrap()).unwrap();
        m.validate().unwrap();
        assert!(m.is_qis(), "{key}");
    }
    let h = parse_brief_components(r, field(&text, "homotopy_1")).unwrap();
    assert_eq!(h[&0].to_string(), "[[1+0*e]]");
    let class = ok(&["rel-class", "--pair", "Z:Q", "--unit", "-10/3"]);
    assert_eq!(ok(&["rel-class", "--pair", "Z:Q", "--unit", class.trim()]), class);

    // Cohomology generators are matrix literals over the file's ring.
    let tor5 = data("data/tor5.cx");
    let h = ok(&["cohomology", &tor5]);
    let doc = Document::parse("inline", &format!("ring Z\nmatrix g {}\n", field(&h, "H^1.generators"))).unwrap();
    assert_eq!(doc.matrix("g").unwrap().to_string(), field(&h, "H^1.generators"));
}
