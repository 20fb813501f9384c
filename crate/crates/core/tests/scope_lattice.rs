//! The scope operations checked against a brute-force model over a small
//! finite universe: three dimensions, each unset or one of two values, plus
//! BOTTOM.

use std::collections::BTreeSet;

use adi_core::scope::{join, meet, parse_scope, serialize_scope, Scope};

type Pairs = BTreeSet<(&'static str, &'static str)>;

fn universe() -> Vec<Option<Pairs>> {
    let mut out = vec![None];
    for a in [None, Some("0"), Some("1")] {
        for b in [None, Some("0"), Some("1")] {
            for c in [None, Some("0"), Some("1")] {
                let set = [("a", a), ("b", b), ("c", c)]
                    .into_iter()
                    .filter_map(|(k, v)| v.map(|v| (k, v)))
                    .collect();
                out.push(Some(set));
            }
        }
    }
    out
}

fn to_scope(m: &Option<Pairs>) -> Scope {
    match m {
        None => Scope::Bottom,
        Some(p) => Scope::from_pairs(p.iter().copied()).unwrap(),
    }
}

/// More constraints means lower; BOTTOM is below everything.
fn model_le(x: &Option<Pairs>, y: &Option<Pairs>) -> bool {
    match (x, y) {
        (None, _) => true,
        (_, None) => false,
        (Some(x), Some(y)) => y.is_subset(x),
    }
}

fn glb<'a>(u: &'a [Option<Pairs>], x: &Option<Pairs>, y: &Option<Pairs>) -> &'a Option<Pairs> {
    let lower: Vec<_> = u
        .iter()
        .filter(|z| model_le(z, x) && model_le(z, y))
        .collect();
    lower
        .iter()
        .copied()
        .find(|g| lower.iter().all(|z| model_le(z, g)))
        .expect("greatest lower bound")
}

fn lub<'a>(u: &'a [Option<Pairs>], x: &Option<Pairs>, y: &Option<Pairs>) -> &'a Option<Pairs> {
    let upper: Vec<_> = u
        .iter()
        .filter(|z| model_le(x, z) && model_le(y, z))
        .collect();
    upper
        .iter()
        .copied()
        .find(|l| upper.iter().all(|z| model_le(l, z)))
        .expect("least upper bound")
}

#[test]
fn order_matches_model() {
    let u = universe();
    for x in &u {
        for y in &u {
            assert_eq!(
                to_scope(x).le(&to_scope(y)),
                model_le(x, y),
                "{x:?} <= {y:?}"
            );
        }
    }
}

#[test]
fn meet_and_join_are_the_bounds() {
    let u = universe();
    for x in &u {
        for y in &u {
            let (sx, sy) = (to_scope(x), to_scope(y));
            assert_eq!(meet(&sx, &sy), to_scope(glb(&u, x, y)), "meet {sx} {sy}");
            assert_eq!(join(&sx, &sy), to_scope(lub(&u, x, y)), "join {sx} {sy}");
        }
    }
}

#[test]
fn text_form_round_trips() {
    for x in universe() {
        let s = to_scope(&x);
        let text = serialize_scope(&s);
        assert_eq!(parse_scope(&text).unwrap(), s, "{text}");
        assert_eq!(serialize_scope(&parse_scope(&text).unwrap()), text);
    }
}

#[test]
fn canonical_form_sorts_dimensions() {
    let s = parse_scope("task=multihop,lang=en").unwrap();
    assert_eq!(serialize_scope(&s), "lang=en,task=multihop");
    assert_eq!(serialize_scope(&Scope::TOP), "*");
    assert_eq!(serialize_scope(&Scope::Bottom), "!");
}

#[test]
fn malformed_text_is_rejected_with_offsets() {
    for (text, offset) in [
        ("", 0),
        ("a=", 2),
        ("a=1,", 4),
        ("A=1", 0),
        ("a=1,a=2", 4),
        ("a=1 ", 3),
        ("a", 1),
    ] {
        match parse_scope(text) {
            Err(adi_core::Error::Parse { offset: got, .. }) => assert_eq!(got, offset, "{text:?}"),
            other => panic!("{text:?} gave {other:?}"),
        }
    }
}
