//! A backend adversary with full write access: whatever it does, retrieval
//! returns the inserted content or an error, never something else.

use std::collections::HashSet;

use chunktree::kvs::tamper::{Mutation, Tamper};
use chunktree::{ContentKey, Dae, MasterKey, Store, StoreConfig};
use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn setup(seed: u64) -> (Store, Vec<(ContentKey, Vec<u8>)>, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let key = MasterKey::from_rng(&mut rng);
    let mut store = Store::in_memory(StoreConfig::ml_cdc(64), &key).unwrap();
    let mut stored = Vec::new();
    let mut base = vec![0u8; 20_000];
    rng.fill_bytes(&mut base);
    for i in 0..4 {
        let mut m = base.clone();
        m.truncate(5_000 * (i + 1));
        let pos = rng.gen_range(0..m.len());
        m[pos] ^= 0xa5;
        stored.push((store.put_content(&m).unwrap(), m));
    }
    (store, stored, rng)
}

fn random_mutation(rng: &mut ChaCha8Rng, store: &Store, len: usize) -> Mutation {
    let elements = store.backend().keys().unwrap();
    match rng.gen_range(0..6) {
        0 => Mutation::flip_bit(rng.gen_range(0..len.max(1)), rng.gen_range(0..8)),
        1 => Mutation::Truncate { len: rng.gen_range(0..len.max(1)) },
        2 => Mutation::Extend(vec![rng.gen(); rng.gen_range(1..64)]),
        3 => {
            // a valid ciphertext stored under a different tag
            let other = elements.choose(rng).unwrap();
            Mutation::Substitute(store.backend().get(other).unwrap().unwrap())
        }
        4 => Mutation::Delete,
        _ => {
            let mut v = vec![0; rng.gen_range(0..len + 64)];
            rng.fill_bytes(&mut v);
            Mutation::Substitute(v)
        }
    }
}

#[test]
fn retrieval_never_returns_a_wrong_content() {
    let (mut store, stored, mut rng) = setup(1);
    for _round in 0..300 {
        let pristine: Vec<(Vec<u8>, Vec<u8>)> = store
            .backend()
            .keys()
            .unwrap()
            .into_iter()
            .map(|k| {
                let v = store.backend().get(&k).unwrap().unwrap();
                (k, v)
            })
            .collect();
        for _ in 0..rng.gen_range(1..4) {
            let (victim, value) = pristine.choose(&mut rng).unwrap();
            let m = random_mutation(&mut rng, &store, value.len());
            let mut t = Tamper::new(store.backend_mut());
            if t.apply(victim, &m).is_err() {
                continue;
            }
            if rng.gen_bool(0.2) {
                let (a, _) = pristine.choose(&mut rng).unwrap();
                let (b, _) = pristine.choose(&mut rng).unwrap();
                let _ = Tamper::new(store.backend_mut()).swap(a, b);
            }
        }
        for (k, m) in &stored {
            if let Ok(got) = store.get_content(k) {
                assert_eq!(&got, m);
            }
        }
        // restore for the next round
        for k in store.backend().keys().unwrap() {
            store.backend_mut().remove(&k).unwrap();
        }
        for (k, v) in &pristine {
            store.backend_mut().put(k, v).unwrap();
        }
    }
    for (k, m) in &stored {
        assert_eq!(&store.get_content(k).unwrap(), m);
    }
}

#[test]
fn forged_superchunk_with_own_tag_is_rejected() {
    // an adversary without the key cannot produce a tag that verifies
    let (mut store, stored, _) = setup(2);
    let (k, _) = &stored[3];
    let forged = chunktree::crypto::HmacSha256Aes256Ctr::new(&MasterKey::from_rng(&mut ChaCha8Rng::seed_from_u64(3)));
    let (ct, _) = forged.enc_auth(&[0u8; 64]);
    store.backend_mut().put(k.root.as_ref(), &ct).unwrap();
    assert!(store.get_content(k).is_err());
}

#[test]
fn tags_of_distinct_contents_do_not_collide() {
    let dae = chunktree::crypto::HmacSha256Aes256Ctr::new(&MasterKey::from_rng(&mut ChaCha8Rng::seed_from_u64(4)));
    let mut seen = HashSet::new();
    for i in 0u64..100_000 {
        let (_, tag) = dae.enc_auth(&i.to_le_bytes());
        assert!(seen.insert(tag), "collision at {i}");
    }
}
