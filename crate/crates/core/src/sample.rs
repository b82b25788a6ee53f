//! Deterministic sample streams for law checking.
//!
//! Every checker in this crate draws its inputs from a [`Stream`] seeded by
//! the caller, so identical configurations replay identical inputs and
//! reports are byte-stable.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::famcat::Family;
use crate::finset::{FinMap, FinSet};
use crate::poly::Polynomial;
use crate::span::Span;

pub struct Stream {
    rng: ChaCha8Rng,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Stream {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Uniform size in `lo..=hi`.
    pub fn size(&mut self, lo: usize, hi: usize) -> usize {
        if hi <= lo {
            return lo;
        }
        self.rng.random_range(lo..=hi)
    }

    pub fn pick(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        self.rng.random_range(0..n)
    }
}

/// A random map between sets of size `1..=max` (never empty, so maps always
/// exist).
pub fn rand_finmap(st: &mut Stream, max: usize) -> FinMap {
    let dom = st.size(1, max);
    let cod = st.size(1, max);
    rand_finmap_between(st, dom, cod)
}

pub fn rand_finmap_between(st: &mut Stream, dom: usize, cod: usize) -> FinMap {
    let table = (0..dom).map(|_| st.pick(cod)).collect();
    FinMap::new(FinSet::new(dom), FinSet::new(cod), table).expect("valid random map")
}

/// A random cospan `f : A → C ← B : g` with all sets of size `1..=max`.
pub fn rand_cospan(st: &mut Stream, max: usize) -> (FinMap, FinMap) {
    let c = st.size(1, max);
    let f = rand_finmap_between(st, st.size(1, max), c);
    let g = rand_finmap_between(st, st.size(1, max), c);
    (f, g)
}

/// A random span `src ← apex → tgt` with the given boundary objects.
pub fn rand_span_between(st: &mut Stream, src: &FinSet, tgt: &FinSet, max_apex: usize) -> Span {
    let apex = st.size(0, max_apex);
    let left = FinMap::new(
        FinSet::new(apex),
        src.clone(),
        (0..apex).map(|_| st.pick(src.size)).collect(),
    )
    .expect("left leg");
    let right = FinMap::new(
        FinSet::new(apex),
        tgt.clone(),
        (0..apex).map(|_| st.pick(tgt.size)).collect(),
    )
    .expect("right leg");
    Span::new(left, right).expect("valid span")
}

pub fn rand_span(st: &mut Stream, max: usize) -> Span {
    let src = FinSet::new(st.size(1, max));
    let tgt = FinSet::new(st.size(1, max));
    rand_span_between(st, &src, &tgt, max)
}

/// A random polynomial `I ← E → B → J` with `|B| ≤ max_b` and `p`-fibers of
/// size at most `max_fiber`.
pub fn rand_poly_between(
    st: &mut Stream,
    src: &FinSet,
    tgt: &FinSet,
    max_b: usize,
    max_fiber: usize,
) -> Polynomial {
    let b = st.size(0, max_b);
    let mut p_table = Vec::new();
    for bi in 0..b {
        let k = st.size(0, max_fiber);
        for _ in 0..k {
            p_table.push(bi);
        }
    }
    let e = p_table.len();
    let eset = FinSet::new(e);
    let bset = FinSet::new(b);
    let s = FinMap::new(
        eset.clone(),
        src.clone(),
        (0..e).map(|_| st.pick(src.size)).collect(),
    )
    .expect("s leg");
    let p = FinMap::new(eset, bset.clone(), p_table).expect("p leg");
    let t = FinMap::new(
        bset,
        tgt.clone(),
        (0..b).map(|_| st.pick(tgt.size)).collect(),
    )
    .expect("t leg");
    Polynomial::new(s, p, t).expect("valid polynomial")
}

pub fn rand_poly(st: &mut Stream, max: usize) -> Polynomial {
    let src = FinSet::new(st.size(1, max));
    let tgt = FinSet::new(st.size(1, max));
    rand_poly_between(st, &src, &tgt, max, max)
}

/// A random family over `index` with entries of size `0..=max_entry`.
pub fn rand_family(st: &mut Stream, index: &FinSet, max_entry: usize) -> Family {
    Family {
        index: index.clone(),
        entries: (0..index.size)
            .map(|_| FinSet::new(st.size(0, max_entry)))
            .collect(),
    }
}

/// A random pullback square over the chosen pullback of a random cospan:
/// returns `(f_prime, g_prime, f, g)` with `f∘g_prime = g∘f_prime`.
pub fn rand_pullback_square(st: &mut Stream, max: usize) -> (FinMap, FinMap, FinMap, FinMap) {
    let (f, g) = rand_cospan(st, max);
    let pb = crate::finset::pullback(&f, &g).expect("pullback");
    // top edge goes to dom(g), left edge to dom(f)
    (pb.proj2, pb.proj1, f, g)
}
