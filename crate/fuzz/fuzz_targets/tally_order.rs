#![no_main]

use escalation::order::{join, leq, leq0, meet, Bound, SafetyParams};
use escalation::tally::Tally;
use libfuzzer_sys::fuzz_target;

fn tally(bytes: &[u8], dims: usize) -> Tally {
    let pairs: Vec<(u32, u32)> = (0..dims)
        .map(|d| {
            let n = u32::from(bytes.get(2 * d).copied().unwrap_or(0) % 16);
            let t = u32::from(bytes.get(2 * d + 1).copied().unwrap_or(0)) % (n + 1);
            (t, n)
        })
        .collect();
    Tally::from_pairs(&pairs).unwrap()
}

// Order and lattice consistency on two tallies decoded from raw bytes.
fuzz_target!(|data: &[u8]| {
    if data.len() < 2 {
        return;
    }
    let dims = usize::from(data[0] % 4) + 1;
    let r = u32::from(data[1] % 4) + 1;
    let body = &data[2..];
    let half = body.len() / 2;
    let (a, b) = (tally(&body[..half], dims), tally(&body[half..], dims));
    let p = SafetyParams::new(dims, r).unwrap();

    let ab = leq(&a, &b, p).unwrap();
    let ba = leq(&b, &a, p).unwrap();
    assert!(leq(&a, &a, p).unwrap());
    assert!(!(ab && ba) || a == b);
    assert!(!leq0(&a, &b).unwrap() || ab);
    assert!(!ab || leq(&a, &b, SafetyParams::new(dims, r + 1).unwrap()).unwrap());

    if let Bound::Valid(m) = meet(&a, &b, p).unwrap() {
        assert!(leq(&m, &a, p).unwrap() && leq(&m, &b, p).unwrap());
    }
    if let Bound::Valid(j) = join(&a, &b, p).unwrap() {
        assert!(leq(&a, &j, p).unwrap() && leq(&b, &j, p).unwrap());
    }
    if ab {
        assert_eq!(meet(&a, &b, p).unwrap(), Bound::Valid(a.clone()));
        assert_eq!(join(&a, &b, p).unwrap(), Bound::Valid(b.clone()));
    }
    let c = a.plus(&b).unwrap();
    assert_eq!(leq(&a.plus(&c).unwrap(), &b.plus(&c).unwrap(), p).unwrap(), ab);
});
