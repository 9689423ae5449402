use chunktree::chunking::DEFAULT_WINDOW;
use chunktree::model::{self, ModelParams};
use chunktree::store::level_target;
use chunktree::{HeightPolicy, MasterKey, Store, StoreConfig};
use proptest::prelude::*;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn key() -> MasterKey {
    MasterKey::from_rng(&mut ChaCha8Rng::seed_from_u64(42))
}

fn random(seed: u64, n: usize) -> Vec<u8> {
    let mut v = vec![0; n];
    ChaCha8Rng::seed_from_u64(seed).fill_bytes(&mut v);
    v
}

fn config_strategy() -> impl Strategy<Value = StoreConfig> {
    (
        prop_oneof![Just("sc"), Just("cdc")],
        prop_oneof![Just(64u64), Just(100), Just(128)],
        prop_oneof![
            Just(HeightPolicy::Auto),
            Just(HeightPolicy::Fixed(0)),
            Just(HeightPolicy::Fixed(1)),
            Just(HeightPolicy::Fixed(3)),
        ],
    )
        .prop_map(|(scheme, s, h)| StoreConfig::new(scheme, s, h))
}

/// Random bytes, long runs of one byte, or a short repeated pattern.
fn content_strategy() -> impl Strategy<Value = Vec<u8>> {
    prop_oneof![
        prop::collection::vec(any::<u8>(), 0..20_000),
        (any::<u8>(), 0usize..20_000).prop_map(|(b, n)| vec![b; n]),
        (prop::collection::vec(any::<u8>(), 1..8), 0usize..3000)
            .prop_map(|(p, reps)| p.repeat(reps)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn round_trip_and_dedup(config in config_strategy(), m in content_strategy()) {
        let mut store = Store::in_memory(config, &key()).unwrap();
        let k = store.put_content(&m).unwrap();
        prop_assert_eq!(store.get_content(&k).unwrap(), m.clone());
        let before = store.report();
        prop_assert_eq!(store.put_content(&m).unwrap(), k);
        prop_assert_eq!(store.report(), before);
    }

    #[test]
    fn equal_contents_share_keys_across_stores(config in config_strategy(), m in content_strategy()) {
        let mut a = Store::in_memory(config.clone(), &key()).unwrap();
        let mut b = Store::in_memory(config, &key()).unwrap();
        a.put_content(b"unrelated").unwrap();
        prop_assert_eq!(a.put_content(&m).unwrap(), b.put_content(&m).unwrap());
    }
}

#[test]
fn level_target_edges_round_trip() {
    for scheme in ["sc", "cdc"] {
        let mut store = Store::in_memory(StoreConfig::new(scheme, 64, HeightPolicy::Auto), &key()).unwrap();
        for h in 1..=3 {
            let t = level_target(h, 64, 32).unwrap() as usize;
            for n in [t - 1, t, t + 1, 2 * t, 4 * t + 1] {
                let m = random(n as u64, n);
                let k = store.put_content(&m).unwrap();
                assert_eq!(store.get_content(&k).unwrap(), m, "{scheme} n={n}");
            }
        }
    }
}

#[test]
fn one_mebibyte_tree_shape() {
    let m = random(1, 1 << 20);
    let mut store = Store::in_memory(StoreConfig::ml_cdc(128), &key()).unwrap();
    let k = store.put_content(&m).unwrap();
    assert_eq!(k.height, 7);
    let tree = store.describe_tree(&k).unwrap();
    let stats = tree.level_stats();
    assert_eq!(stats.len(), 8);
    assert_eq!(stats[7].nodes, 1);
    for l in &stats {
        assert_eq!(l.total_length, 1 << 20, "level {}", l.height);
    }
    // fan-out of at least two on average: fewer inner nodes than leaves
    let inner: u64 = stats[1..].iter().map(|l| l.nodes).sum();
    assert!(inner < stats[0].nodes);
    // exp_nodes assumes a fan-out of two, so it only bounds the count; with
    // fan-out S/R the levels sum to (n/S)·S/(S-R)
    let count = tree.node_count() as f64;
    assert!(count <= model::exp_nodes(1 << 20, 128));
    let geometric = (1u64 << 20) as f64 / 128.0 * 128.0 / 96.0;
    assert!((count - geometric).abs() <= 0.2 * geometric, "{count} nodes vs {geometric}");
    let distinct: std::collections::HashSet<_> = tree.nodes().map(|n| n.chunk).collect();
    assert_eq!(store.report().element_count, distinct.len() as u64);
}

#[test]
fn interior_nodes_are_retrievable_as_contents() {
    let m = random(2, 200_000);
    let mut store = Store::in_memory(StoreConfig::ml_cdc(128), &key()).unwrap();
    let k = store.put_content(&m).unwrap();
    let tree = store.describe_tree(&k).unwrap();
    for node in tree.nodes().step_by(37) {
        let sub = chunktree::ContentKey::new(node.chunk, node.height);
        let range = node.offset as usize..(node.offset + node.length) as usize;
        assert_eq!(store.get_content(&sub).unwrap(), &m[range]);
    }
}

#[test]
fn one_byte_overwrite_touches_one_node_per_level_under_sc() {
    let n = 300_000;
    let mut m = random(3, n);
    let mut store = Store::in_memory(StoreConfig::ml_sc(128), &key()).unwrap();
    let k = store.put_content(&m).unwrap();
    for (i, pos) in [0usize, 1, 12_345, n / 2, n - 1].into_iter().enumerate() {
        m[pos] ^= 1 + i as u8;
        let before = store.report();
        store.put_content(&m).unwrap();
        let after = store.report();
        assert!(after.elements_since(&before) <= k.height as i64 + 1);
        let bound = model::add_strg_sc(k.height, 128, 32);
        assert!(after.bytes_since(&before) as f64 <= bound, "pos {pos}");
    }
}

#[test]
fn one_byte_overwrite_under_cdc_stays_near_expected_node_count() {
    let n = 1 << 20;
    let p = ModelParams::new(128).with_window(DEFAULT_WINDOW as u64);
    let h = p.height(n).unwrap();
    let bound = model::exp_new_nodes_cdc(h, 128, 32, DEFAULT_WINDOW as u64);
    let mut total = 0i64;
    let trials = 10;
    for t in 0..trials {
        let mut m = random(100 + t, n as usize);
        let mut store = Store::in_memory(StoreConfig::ml_cdc(128), &key()).unwrap();
        store.put_content(&m).unwrap();
        let before = store.report();
        let pos = (t as usize * 104_729) % m.len();
        m[pos] = !m[pos];
        store.put_content(&m).unwrap();
        total += store.report().elements_since(&before);
    }
    let mean = total as f64 / trials as f64;
    assert!(mean <= 1.2 * bound, "{mean} new nodes on average vs {bound}");
}
