//! Bounded-lattice and syntax properties of scopes.

use proptest::prelude::*;
use proptest::test_runner::TestCaseResult;

use super::gen::scope;
use super::{Category, Ctx, Outcome, Property};
use crate::model::CongruenceLevel;
use crate::scope::{join, match_level, meet, parse_scope, serialize_scope, Scope};

fn unary(name: &str, test: fn(Scope) -> TestCaseResult) -> Property {
    Property::new(name, Category::ScopeAlgebra, move |ctx: &Ctx| -> Outcome {
        ctx.check(scope(), test)
    })
}

fn binary(name: &str, test: fn(Scope, Scope) -> TestCaseResult) -> Property {
    Property::new(name, Category::ScopeAlgebra, move |ctx: &Ctx| {
        ctx.check((scope(), scope()), |(a, b)| test(a, b))
    })
}

fn ternary(name: &str, test: fn(Scope, Scope, Scope) -> TestCaseResult) -> Property {
    Property::new(name, Category::ScopeAlgebra, move |ctx: &Ctx| {
        ctx.check((scope(), scope(), scope()), |(a, b, c)| test(a, b, c))
    })
}

/// The match rule restated over lattice operations.
fn oracle_level(claim: &Scope, evidence: &Scope) -> CongruenceLevel {
    if claim.is_bottom() || evidence.is_bottom() {
        return CongruenceLevel::None;
    }
    if claim == evidence {
        return CongruenceLevel::Cl3;
    }
    if !meet(claim, evidence).is_bottom() {
        if claim.le(evidence) || evidence.le(claim) {
            CongruenceLevel::Cl2
        } else {
            CongruenceLevel::Cl1
        }
    } else if join(claim, evidence).is_top() {
        CongruenceLevel::None
    } else {
        CongruenceLevel::Cl1
    }
}

pub(super) fn properties() -> Vec<Property> {
    vec![
        unary("scope_parse_serialize_round_trip", |a| {
            let text = serialize_scope(&a);
            prop_assert_eq!(parse_scope(&text).expect("canonical text parses"), a);
            Ok(())
        }),
        unary("scope_serialization_canonical", |a| {
            let text = serialize_scope(&a);
            let again = serialize_scope(&parse_scope(&text).expect("parses"));
            prop_assert_eq!(&again, &text);
            prop_assert_eq!(a.to_string(), text);
            Ok(())
        }),
        binary("scope_meet_commutative", |a, b| {
            prop_assert_eq!(meet(&a, &b), meet(&b, &a));
            Ok(())
        }),
        ternary("scope_meet_associative", |a, b, c| {
            prop_assert_eq!(meet(&meet(&a, &b), &c), meet(&a, &meet(&b, &c)));
            Ok(())
        }),
        unary("scope_meet_idempotent", |a| {
            prop_assert_eq!(meet(&a, &a), a);
            Ok(())
        }),
        binary("scope_join_commutative", |a, b| {
            prop_assert_eq!(join(&a, &b), join(&b, &a));
            Ok(())
        }),
        ternary("scope_join_associative", |a, b, c| {
            prop_assert_eq!(join(&join(&a, &b), &c), join(&a, &join(&b, &c)));
            Ok(())
        }),
        unary("scope_join_idempotent", |a| {
            prop_assert_eq!(join(&a, &a), a);
            Ok(())
        }),
        binary("scope_absorption_meet_join", |a, b| {
            prop_assert_eq!(meet(&a, &join(&a, &b)), a);
            Ok(())
        }),
        binary("scope_absorption_join_meet", |a, b| {
            prop_assert_eq!(join(&a, &meet(&a, &b)), a);
            Ok(())
        }),
        unary("scope_top_identity_for_meet", |a| {
            prop_assert_eq!(meet(&a, &Scope::TOP), a.clone());
            prop_assert!(a.le(&Scope::TOP));
            Ok(())
        }),
        unary("scope_bottom_identity_for_join", |a| {
            prop_assert_eq!(join(&a, &Scope::Bottom), a.clone());
            prop_assert!(Scope::Bottom.le(&a));
            Ok(())
        }),
        unary("scope_bottom_annihilates_meet", |a| {
            prop_assert_eq!(meet(&a, &Scope::Bottom), Scope::Bottom);
            Ok(())
        }),
        unary("scope_top_annihilates_join", |a| {
            prop_assert_eq!(join(&a, &Scope::TOP), Scope::TOP);
            Ok(())
        }),
        ternary("scope_meet_is_greatest_lower_bound", |a, b, c| {
            let m = meet(&a, &b);
            prop_assert!(m.le(&a) && m.le(&b));
            if c.le(&a) && c.le(&b) {
                prop_assert!(c.le(&m), "{} is a lower bound above the meet {}", c, m);
            }
            Ok(())
        }),
        ternary("scope_join_is_least_upper_bound", |a, b, c| {
            let j = join(&a, &b);
            prop_assert!(a.le(&j) && b.le(&j));
            if a.le(&c) && b.le(&c) {
                prop_assert!(j.le(&c), "{} is an upper bound below the join {}", c, j);
            }
            Ok(())
        }),
        ternary("scope_order_is_partial", |a, b, c| {
            prop_assert!(a.le(&a));
            if a.le(&b) && b.le(&a) {
                prop_assert_eq!(&a, &b);
            }
            if a.le(&b) && b.le(&c) {
                prop_assert!(a.le(&c));
            }
            prop_assert_eq!(a.le(&b), meet(&a, &b) == a);
            Ok(())
        }),
        unary("scope_match_reflexive", |a| {
            let expected = if a.is_bottom() {
                CongruenceLevel::None
            } else {
                CongruenceLevel::Cl3
            };
            prop_assert_eq!(match_level(&a, &a), expected);
            Ok(())
        }),
        binary("scope_match_symmetric", |a, b| {
            prop_assert_eq!(match_level(&a, &b), match_level(&b, &a));
            Ok(())
        }),
        binary("scope_match_rule_table", |a, b| {
            prop_assert_eq!(
                match_level(&a, &b),
                oracle_level(&a, &b),
                "claim {} evidence {}",
                a,
                b
            );
            Ok(())
        }),
    ]
}
