mod common;

use proptest::prelude::*;
use vlbcac::network::FlavorCatalog;
use vlbcac::protocol::{
    decode_directive, decode_stats, encode_directive, encode_stats, AgentState, Directive,
    ProtocolError, StatsReport, PROTOCOL_VERSION,
};

fn report() -> impl Strategy<Value = StatsReport> {
    (
        any::<u64>(),
        1u32..64,
        0.0f64..1e6,
        0.0f64..1e6,
        any::<u64>(),
        proptest::collection::btree_map(1u32..64, any::<u64>(), 0..16),
    )
        .prop_map(|(slot, srv, p, m, local, out)| StatsReport {
            v: PROTOCOL_VERSION,
            slot,
            srv,
            p,
            m,
            local,
            out,
        })
}

fn directive() -> impl Strategy<Value = Directive> {
    (
        any::<u64>(),
        1u32..64,
        proptest::collection::btree_map(1u32..64, any::<u64>(), 0..16),
        proptest::collection::vec(
            (1u64..64, 1u64..64, 1u64..64, any::<u64>()).prop_map(|(a, b, c, d)| [a, b, c, d]),
            0..24,
        ),
        proptest::option::of("[a-z0-9.]{1,12}"),
    )
        .prop_map(|(slot, srv, c, r, flavor)| Directive {
            v: PROTOCOL_VERSION,
            slot,
            srv,
            c,
            r,
            flavor,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn reports_round_trip(r in report()) {
        prop_assert_eq!(decode_stats(&encode_stats(&r).unwrap()).unwrap(), r);
    }

    #[test]
    fn directives_round_trip(d in directive()) {
        prop_assert_eq!(decode_directive(&encode_directive(&d).unwrap()).unwrap(), d);
    }
}

proptest! {
    #[test]
    fn applying_a_directive_twice_equals_once(d in directive()) {
        let n = 64;
        let mut d = d;
        d.flavor = None;
        let inner = d.to_directive(n).unwrap();
        let mut once = AgentState::new(inner.server, n, FlavorCatalog::standard(), 0);
        once.apply(&inner).unwrap();
        let mut twice = once.clone();
        prop_assert!(!twice.apply(&inner).unwrap());
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn truncation_never_panics(r in report(), cut in 0usize..200) {
        let bytes = encode_stats(&r).unwrap();
        let cut = cut.min(bytes.len());
        let _ = decode_stats(&bytes[..cut]);
    }
}

#[test]
fn unknown_version_is_rejected_before_parsing() {
    let text = r#"{"v":9,"anything":"else"}"#;
    assert_eq!(
        decode_stats(text.as_bytes()),
        Err(ProtocolError::Version { got: 9 })
    );
}

#[test]
fn service_directives_match_library_plans() {
    common::service_equivalence(4).unwrap();
}
