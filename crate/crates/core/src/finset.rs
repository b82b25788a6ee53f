//! Finite sets, functions, chosen pullbacks and chosen distributivity
//! pullbacks.
//!
//! Elements of a [`FinSet`] are the indices `0..size`. Every "chosen"
//! structure (pullback pair order, dependent-product section order) is
//! lexicographic, so equal inputs always produce bit-identical outputs and
//! coherence witnesses can be compared with `==`. Identities are
//! special-cased before enumeration so that identities pull back to
//! identities on the nose.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FinError {
    #[error("domain/codomain mismatch: expected {expected}, got {got} ({context})")]
    BoundaryMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },
    #[error("table entry {entry} out of range for codomain of size {cod} at index {index}")]
    EntryOutOfRange {
        entry: usize,
        cod: usize,
        index: usize,
    },
    #[error("index {index} out of range for set of size {size}")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("square does not commute at element {at}")]
    NonCommuting { at: usize },
    #[error("diagram is not a pullback: {reason}")]
    NotPullback { reason: String },
    #[error("map is not invertible: {reason}")]
    NotInvertible { reason: String },
}

pub type FinResult<T> = Result<T, FinError>;

/// A finite set `{0, .., size-1}`, optionally decorated with display labels.
///
/// Equality and hashing ignore labels: a finite set here *is* its size, and
/// labels are presentation only.
#[derive(Clone, Default)]
pub struct FinSet {
    pub size: usize,
    pub labels: Option<Vec<String>>,
}

impl PartialEq for FinSet {
    fn eq(&self, other: &Self) -> bool {
        self.size == other.size
    }
}
impl Eq for FinSet {}

impl std::hash::Hash for FinSet {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.size.hash(state);
    }
}

impl fmt::Debug for FinSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.labels {
            Some(ls) => write!(f, "FinSet{{{}: {:?}}}", self.size, ls),
            None => write!(f, "FinSet({})", self.size),
        }
    }
}

impl FinSet {
    pub fn new(size: usize) -> Self {
        FinSet { size, labels: None }
    }

    pub fn with_labels(labels: Vec<String>) -> Self {
        FinSet {
            size: labels.len(),
            labels: Some(labels),
        }
    }

    pub fn label(&self, i: usize) -> String {
        match &self.labels {
            Some(ls) if i < ls.len() => ls[i].clone(),
            _ => i.to_string(),
        }
    }

    pub fn elements(&self) -> std::ops::Range<usize> {
        0..self.size
    }
}

/// A function between finite sets, tabulated on the domain.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FinMap {
    pub dom: FinSet,
    pub cod: FinSet,
    pub table: Vec<usize>,
}

impl fmt::Debug for FinMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "FinMap({}->{}: {:?})",
            self.dom.size, self.cod.size, self.table
        )
    }
}

impl FinMap {
    pub fn new(dom: FinSet, cod: FinSet, table: Vec<usize>) -> FinResult<Self> {
        if table.len() != dom.size {
            return Err(FinError::BoundaryMismatch {
                expected: dom.size,
                got: table.len(),
                context: "table length vs domain size",
            });
        }
        for (index, &entry) in table.iter().enumerate() {
            if entry >= cod.size {
                return Err(FinError::EntryOutOfRange {
                    entry,
                    cod: cod.size,
                    index,
                });
            }
        }
        Ok(FinMap { dom, cod, table })
    }

    pub fn identity(set: &FinSet) -> Self {
        FinMap {
            dom: set.clone(),
            cod: set.clone(),
            table: (0..set.size).collect(),
        }
    }

    pub fn constant(dom: FinSet, cod: FinSet, value: usize) -> FinResult<Self> {
        let table = vec![value; dom.size];
        FinMap::new(dom, cod, table)
    }

    pub fn apply(&self, x: usize) -> usize {
        self.table[x]
    }

    pub fn is_identity(&self) -> bool {
        self.dom.size == self.cod.size && self.table.iter().enumerate().all(|(i, &v)| i == v)
    }

    pub fn is_bijection(&self) -> bool {
        if self.dom.size != self.cod.size {
            return false;
        }
        let mut seen = vec![false; self.cod.size];
        for &v in &self.table {
            if seen[v] {
                return false;
            }
            seen[v] = true;
        }
        true
    }

    /// Inverse of a bijection.
    pub fn inverse(&self) -> FinResult<FinMap> {
        if !self.is_bijection() {
            return Err(FinError::NotInvertible {
                reason: format!("{self:?} is not a bijection"),
            });
        }
        let mut table = vec![0usize; self.cod.size];
        for (i, &v) in self.table.iter().enumerate() {
            table[v] = i;
        }
        Ok(FinMap {
            dom: self.cod.clone(),
            cod: self.dom.clone(),
            table,
        })
    }

    /// Preimage of `b`, in increasing order.
    pub fn preimage(&self, b: usize) -> Vec<usize> {
        self.table
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == b)
            .map(|(i, _)| i)
            .collect()
    }
}

/// `g ∘ f`, defined when `f.cod = g.dom`.
pub fn compose_map(g: &FinMap, f: &FinMap) -> FinResult<FinMap> {
    if f.cod.size != g.dom.size {
        return Err(FinError::BoundaryMismatch {
            expected: g.dom.size,
            got: f.cod.size,
            context: "compose_map: f.cod vs g.dom",
        });
    }
    let table = f.table.iter().map(|&x| g.table[x]).collect();
    Ok(FinMap {
        dom: f.dom.clone(),
        cod: g.cod.clone(),
        table,
    })
}

/// The fiber `f⁻¹(b)` as an ordered set together with its inclusion map.
pub fn fiber(f: &FinMap, b: usize) -> FinResult<(FinSet, FinMap)> {
    if b >= f.cod.size {
        return Err(FinError::IndexOutOfRange {
            index: b,
            size: f.cod.size,
        });
    }
    let elems = f.preimage(b);
    let set = FinSet::new(elems.len());
    let incl = FinMap {
        dom: set.clone(),
        cod: f.dom.clone(),
        table: elems,
    };
    Ok((set, incl))
}

/// The chosen pullback of a cospan `f : A → C ← B : g`.
///
/// The apex enumerates the matching pairs `(a, b)` with `f(a) = g(b)` in
/// lexicographic order, except that an identity on either side is
/// normalized away: pulling back along an identity returns the other
/// domain with an identity projection, on the nose.
#[derive(Clone, Debug)]
pub struct PullbackResult {
    pub apex: FinSet,
    /// Projection to `dom f`.
    pub proj1: FinMap,
    /// Projection to `dom g`.
    pub proj2: FinMap,
    pairs: Vec<(usize, usize)>,
    pair_lookup: HashMap<(usize, usize), usize>,
}

impl PullbackResult {
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// The apex element sitting over the matching pair `(a, b)`.
    pub fn index_of(&self, a: usize, b: usize) -> Option<usize> {
        self.pair_lookup.get(&(a, b)).copied()
    }
}

pub fn pullback(f: &FinMap, g: &FinMap) -> FinResult<PullbackResult> {
    if f.cod.size != g.cod.size {
        return Err(FinError::BoundaryMismatch {
            expected: f.cod.size,
            got: g.cod.size,
            context: "pullback: shared codomain",
        });
    }
    // Identity normalization comes before enumeration so the bicategory
    // units are strict.
    let pairs: Vec<(usize, usize)> = if f.is_identity() {
        g.table.iter().enumerate().map(|(b, &gb)| (gb, b)).collect()
    } else if g.is_identity() {
        f.table.iter().enumerate().map(|(a, &fa)| (a, fa)).collect()
    } else {
        let mut ps = Vec::new();
        for a in 0..f.dom.size {
            for b in 0..g.dom.size {
                if f.table[a] == g.table[b] {
                    ps.push((a, b));
                }
            }
        }
        ps
    };
    let apex = FinSet::new(pairs.len());
    let proj1 = FinMap {
        dom: apex.clone(),
        cod: f.dom.clone(),
        table: pairs.iter().map(|&(a, _)| a).collect(),
    };
    let proj2 = FinMap {
        dom: apex.clone(),
        cod: g.dom.clone(),
        table: pairs.iter().map(|&(_, b)| b).collect(),
    };
    let pair_lookup = pairs
        .iter()
        .enumerate()
        .map(|(i, &p)| (p, i))
        .collect::<HashMap<_, _>>();
    Ok(PullbackResult {
        apex,
        proj1,
        proj2,
        pairs,
        pair_lookup,
    })
}

/// The unique mediator into a pullback: given `u, v` with `f∘u = g∘v`,
/// returns the `h` with `proj1∘h = u` and `proj2∘h = v`.
pub fn pullback_mediate(pb: &PullbackResult, u: &FinMap, v: &FinMap) -> FinResult<FinMap> {
    if u.dom.size != v.dom.size {
        return Err(FinError::BoundaryMismatch {
            expected: u.dom.size,
            got: v.dom.size,
            context: "pullback_mediate: shared domain of u and v",
        });
    }
    if u.cod.size != pb.proj1.cod.size || v.cod.size != pb.proj2.cod.size {
        return Err(FinError::BoundaryMismatch {
            expected: pb.proj1.cod.size,
            got: u.cod.size,
            context: "pullback_mediate: codomains of u, v vs pullback feet",
        });
    }
    let mut table = Vec::with_capacity(u.dom.size);
    for w in 0..u.dom.size {
        match pb.index_of(u.table[w], v.table[w]) {
            Some(i) => table.push(i),
            None => return Err(FinError::NonCommuting { at: w }),
        }
    }
    Ok(FinMap {
        dom: u.dom.clone(),
        cod: pb.apex.clone(),
        table,
    })
}

/// Check that `(apex, p1, p2)` with `f∘p1 = g∘p2` is a pullback of the
/// cospan `(f, g)`: the pairing `(p1, p2)` must be a bijection onto the
/// matching pairs.
pub fn is_pullback(f: &FinMap, g: &FinMap, p1: &FinMap, p2: &FinMap) -> FinResult<()> {
    if p1.dom.size != p2.dom.size {
        return Err(FinError::NotPullback {
            reason: "projections disagree on apex".into(),
        });
    }
    let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
    for t in 0..p1.dom.size {
        let (a, b) = (p1.table[t], p2.table[t]);
        if f.table[a] != g.table[b] {
            return Err(FinError::NotPullback {
                reason: format!("square does not commute at apex element {t}"),
            });
        }
        if seen.insert((a, b), t).is_some() {
            return Err(FinError::NotPullback {
                reason: format!("pair ({a},{b}) hit twice"),
            });
        }
    }
    let mut matching = 0usize;
    for a in 0..f.dom.size {
        for b in 0..g.dom.size {
            if f.table[a] == g.table[b] {
                matching += 1;
                if !seen.contains_key(&(a, b)) {
                    return Err(FinError::NotPullback {
                        reason: format!("pair ({a},{b}) not covered"),
                    });
                }
            }
        }
    }
    if matching != p1.dom.size {
        return Err(FinError::NotPullback {
            reason: "apex size differs from number of matching pairs".into(),
        });
    }
    Ok(())
}

/// Mixed-radix section enumeration shared by [`dist_pullback`] and the
/// dependent-product functor on families: sections over a fiber are ordered
/// lexicographically with the first (smallest) fiber element most
/// significant.
pub fn section_count(radices: &[usize]) -> usize {
    radices.iter().product()
}

pub fn section_encode(radices: &[usize], digits: &[usize]) -> usize {
    debug_assert_eq!(radices.len(), digits.len());
    let mut idx = 0usize;
    for (i, &d) in digits.iter().enumerate() {
        debug_assert!(d < radices[i]);
        idx = idx * radices[i] + d;
    }
    idx
}

pub fn section_decode(radices: &[usize], mut idx: usize) -> Vec<usize> {
    let mut digits = vec![0usize; radices.len()];
    for i in (0..radices.len()).rev() {
        let r = radices[i];
        digits[i] = idx % r;
        idx /= r;
    }
    digits
}

/// The chosen distributivity pullback around `(f : A → B, u : X → A)`:
/// the terminal pullback-around diagram
///
/// ```text
///   T --p--> X --u--> A
///   |q                |f
///   v                 v
///   Y -------r------> B
/// ```
///
/// `Y` enumerates dependent-product sections `(b, s)` where `s` picks, for
/// each `a ∈ f⁻¹(b)` in increasing order, an element of `u⁻¹(a)`; `T` is the
/// chosen pullback of `f` and `r`, and `p` evaluates sections.
#[derive(Clone, Debug)]
pub struct DistPullbackResult {
    pub t: FinSet,
    pub y: FinSet,
    /// `T → X`, section evaluation.
    pub p: FinMap,
    /// `T → Y`.
    pub q: FinMap,
    /// `Y → B`.
    pub r: FinMap,
    /// `T → A`, the first projection of the underlying chosen pullback
    /// (equals `u ∘ p`).
    pub t_to_a: FinMap,
    /// The generating pair.
    pub f: FinMap,
    pub u: FinMap,
    /// For each `b ∈ B`: the fiber `f⁻¹(b)` and, per fiber element, the
    /// ordered preimage `u⁻¹(a)` it ranges over.
    fibers: Vec<(Vec<usize>, Vec<Vec<usize>>)>,
    /// For each `y ∈ Y`: `(b, digits)` with `digits[i]` indexing into the
    /// `i`-th choice list of `fibers[b]`.
    sections: Vec<(usize, Vec<usize>)>,
    /// Offset of the first section of each `b` inside `Y`.
    offsets: Vec<usize>,
    underlying: PullbackResult,
}

impl DistPullbackResult {
    /// Decode a `Y`-element into `(b, values)` where `values[i] ∈ X` is the
    /// section's choice at the `i`-th element of `f⁻¹(b)`.
    pub fn section_values(&self, y: usize) -> (usize, Vec<usize>) {
        let (b, digits) = &self.sections[y];
        let (_, choices) = &self.fibers[*b];
        let vals = digits
            .iter()
            .enumerate()
            .map(|(i, &d)| choices[i][d])
            .collect();
        (*b, vals)
    }

    /// Index of the section over `b` whose value at the `i`-th fiber element
    /// is `values[i] ∈ X`.
    pub fn section_index(&self, b: usize, values: &[usize]) -> FinResult<usize> {
        if self.f.is_identity() {
            return self.section_index_normalized(b, values);
        }
        let (fiber, choices) = &self.fibers[b];
        if values.len() != fiber.len() {
            return Err(FinError::BoundaryMismatch {
                expected: fiber.len(),
                got: values.len(),
                context: "section_index: fiber length",
            });
        }
        let mut digits = Vec::with_capacity(values.len());
        for (i, &v) in values.iter().enumerate() {
            match choices[i].iter().position(|&x| x == v) {
                Some(d) => digits.push(d),
                None => {
                    return Err(FinError::NonCommuting { at: v });
                }
            }
        }
        let radices: Vec<usize> = choices.iter().map(|c| c.len()).collect();
        Ok(self.offsets[b] + section_encode(&radices, &digits))
    }

    /// The `T`-element over `(a, y)`.
    pub fn t_index(&self, a: usize, y: usize) -> Option<usize> {
        if self.f.is_identity() {
            // Normalized case: T = X, and the T-element over (a, y) is the
            // unique x with u(x) = a and singleton section y = x.
            let x = y;
            (self.u.table[x] == a).then_some(x)
        } else {
            self.underlying.index_of(a, y)
        }
    }

    pub fn fiber_of(&self, b: usize) -> &[usize] {
        &self.fibers[b].0
    }
}

pub fn dist_pullback(f: &FinMap, u: &FinMap) -> FinResult<DistPullbackResult> {
    if u.cod.size != f.dom.size {
        return Err(FinError::BoundaryMismatch {
            expected: f.dom.size,
            got: u.cod.size,
            context: "dist_pullback: u.cod vs f.dom",
        });
    }

    // f = id: sections over singleton fibers are elements of X, and we take
    // Y = X on the nose so identities distribute to identities.
    if f.is_identity() {
        let x = u.dom.clone();
        let fibers: Vec<(Vec<usize>, Vec<Vec<usize>>)> = (0..f.cod.size)
            .map(|b| (vec![b], vec![u.preimage(b)]))
            .collect();
        let mut sections = Vec::with_capacity(x.size);
        let mut offsets = vec![0usize; f.cod.size];
        // Y = X in X's own order; the digit of section x over b = u(x) is the
        // position of x within u⁻¹(b).
        let mut counts = vec![0usize; f.cod.size];
        for xi in 0..x.size {
            let b = u.table[xi];
            let d = fibers[b].1[0].iter().position(|&z| z == xi).unwrap();
            sections.push((b, vec![d]));
            counts[b] += 1;
        }
        // offsets are only meaningful per-b for section_index; in the
        // normalized layout section over b with digit d sits at choices[d].
        for b in 0..f.cod.size {
            let _ = counts[b];
            offsets[b] = 0; // unused in normalized section_index path below
        }
        let ident = FinMap::identity(&x);
        let underlying = pullback(f, u)?; // not used in normalized lookups
        let mut res = DistPullbackResult {
            t: x.clone(),
            y: x.clone(),
            p: ident.clone(),
            q: ident.clone(),
            r: u.clone(),
            t_to_a: u.clone(),
            f: f.clone(),
            u: u.clone(),
            fibers,
            sections,
            offsets,
            underlying,
        };
        // Patch offsets so section_index works: the section over b with
        // digit d is the element choices[b][d] itself.
        // We encode this by leaving offsets at 0 and relying on the special
        // lookup below.
        res.offsets = vec![usize::MAX; f.cod.size];
        return Ok(res);
    }

    let mut fibers: Vec<(Vec<usize>, Vec<Vec<usize>>)> = Vec::with_capacity(f.cod.size);
    for b in 0..f.cod.size {
        let fib = f.preimage(b);
        let choices: Vec<Vec<usize>> = fib.iter().map(|&a| u.preimage(a)).collect();
        fibers.push((fib, choices));
    }
    let mut sections = Vec::new();
    let mut offsets = Vec::with_capacity(f.cod.size);
    let mut labels = Vec::new();
    for (b, (fib, choices)) in fibers.iter().enumerate() {
        offsets.push(sections.len());
        let radices: Vec<usize> = choices.iter().map(|c| c.len()).collect();
        let n = section_count(&radices);
        for idx in 0..n {
            let digits = section_decode(&radices, idx);
            let desc: Vec<String> = fib
                .iter()
                .zip(digits.iter())
                .map(|(&a, &d)| format!("{a}->{}", choices_at(choices, fib, a)[d]))
                .collect();
            labels.push(format!("{b}:[{}]", desc.join(",")));
            sections.push((b, digits));
        }
    }
    let y = FinSet {
        size: sections.len(),
        labels: Some(labels),
    };
    let r = FinMap {
        dom: y.clone(),
        cod: f.cod.clone(),
        table: sections.iter().map(|(b, _)| *b).collect(),
    };
    let underlying = pullback(f, &r)?;
    let t = underlying.apex.clone();
    let t_to_a = underlying.proj1.clone();
    let q = underlying.proj2.clone();
    // p evaluates: the T-element over (a, (b, s)) goes to s(a).
    let mut p_table = Vec::with_capacity(t.size);
    for ti in 0..t.size {
        let a = t_to_a.table[ti];
        let yi = q.table[ti];
        let (b, digits) = &sections[yi];
        let (fib, choices) = &fibers[*b];
        let pos = fib.iter().position(|&z| z == a).expect("a in fiber of b");
        p_table.push(choices[pos][digits[pos]]);
    }
    let p = FinMap {
        dom: t.clone(),
        cod: u.dom.clone(),
        table: p_table,
    };
    Ok(DistPullbackResult {
        t,
        y,
        p,
        q,
        r,
        t_to_a,
        f: f.clone(),
        u: u.clone(),
        fibers,
        sections,
        offsets,
        underlying,
    })
}

fn choices_at<'a>(
    choices: &'a [Vec<usize>],
    fib: &[usize],
    a: usize,
) -> &'a [usize] {
    let pos = fib.iter().position(|&z| z == a).unwrap();
    &choices[pos]
}

impl DistPullbackResult {
    /// `section_index` for the identity-normalized layout.
    fn section_index_normalized(&self, b: usize, values: &[usize]) -> FinResult<usize> {
        // Y = X: the unique fiber element is b itself and the section's value
        // *is* the Y-element.
        if values.len() != 1 {
            return Err(FinError::BoundaryMismatch {
                expected: 1,
                got: values.len(),
                context: "normalized dpb: singleton fiber",
            });
        }
        let x = values[0];
        if self.u.table[x] != b {
            return Err(FinError::NonCommuting { at: x });
        }
        Ok(x)
    }

    /// Alias kept for call sites that want to stress totality.
    pub fn section_index_total(&self, b: usize, values: &[usize]) -> FinResult<usize> {
        self.section_index(b, values)
    }
}

/// A candidate pullback around `(f, u)`: maps `p_c : T_c → X`,
/// `q_c : T_c → Y_c`, `r_c : Y_c → B` whose outer rectangle
/// `(f∘u∘p_c, r_c∘q_c)` is a pullback of `(f, r_c)` with pairing
/// `(u∘p_c, q_c)`.
#[derive(Clone, Debug)]
pub struct PullbackAround {
    pub p: FinMap,
    pub q: FinMap,
    pub r: FinMap,
}

impl PullbackAround {
    pub fn validate(&self, f: &FinMap, u: &FinMap) -> FinResult<()> {
        let up = compose_map(u, &self.p)?;
        is_pullback(f, &self.r, &up, &self.q)
    }
}

/// Terminality of the distributivity pullback: the unique morphism of
/// pullbacks around `(f, u)` from a candidate into the chosen one, as a
/// pair `(s : T_c → T, t : Y_c → Y)` with `p∘s = p_c`, `q∘s = t∘q_c` and
/// `r_c = r∘t`.
pub fn dpb_factor(
    dpb: &DistPullbackResult,
    cand: &PullbackAround,
) -> FinResult<(FinMap, FinMap)> {
    cand.validate(&dpb.f, &dpb.u)?;
    let up_c = compose_map(&dpb.u, &cand.p)?;
    // For each y' in Y_c and each fiber element a of r_c(y'), the outer
    // pullback property provides a unique candidate apex element over
    // (a, y'); its p_c-value is the extracted section's choice at a.
    let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
    for tc in 0..cand.p.dom.size {
        let key = (up_c.table[tc], cand.q.table[tc]);
        if lookup.insert(key, tc).is_some() {
            return Err(FinError::NotPullback {
                reason: format!("outer rectangle pair {key:?} hit twice"),
            });
        }
    }
    let mut t_table = Vec::with_capacity(cand.r.dom.size);
    for yc in 0..cand.r.dom.size {
        let b = cand.r.table[yc];
        let fib = dpb.fiber_of(b).to_vec();
        let mut values = Vec::with_capacity(fib.len());
        for &a in &fib {
            let tc = lookup.get(&(a, yc)).ok_or_else(|| FinError::NotPullback {
                reason: format!("outer rectangle misses pair ({a},{yc})"),
            })?;
            values.push(cand.p.table[*tc]);
        }
        t_table.push(dpb.section_index_total(b, &values)?);
    }
    let t_map = FinMap {
        dom: cand.r.dom.clone(),
        cod: dpb.y.clone(),
        table: t_table,
    };
    let mut s_table = Vec::with_capacity(cand.p.dom.size);
    for tc in 0..cand.p.dom.size {
        let a = up_c.table[tc];
        let y = t_map.table[cand.q.table[tc]];
        let ti = dpb.t_index(a, y).ok_or_else(|| FinError::NonCommuting { at: tc })?;
        s_table.push(ti);
    }
    let s_map = FinMap {
        dom: cand.p.dom.clone(),
        cod: dpb.t.clone(),
        table: s_table,
    };
    Ok((s_map, t_map))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::{rand_finmap, rand_cospan, Stream};

    fn fm(dom: usize, cod: usize, table: &[usize]) -> FinMap {
        FinMap::new(FinSet::new(dom), FinSet::new(cod), table.to_vec()).unwrap()
    }

    #[test]
    fn compose_identity_is_neutral() {
        let f = fm(2, 3, &[2, 0]);
        let idc = FinMap::identity(&f.cod);
        let idd = FinMap::identity(&f.dom);
        assert_eq!(compose_map(&idc, &f).unwrap(), f);
        assert_eq!(compose_map(&f, &idd).unwrap(), f);
    }

    #[test]
    fn compose_constant() {
        let f = fm(2, 1, &[0, 0]);
        let g = fm(1, 3, &[2]);
        let gf = compose_map(&g, &f).unwrap();
        assert_eq!(gf.table, vec![2, 2]);
    }

    #[test]
    fn compose_matches_elementwise_substitution() {
        let mut st = Stream::new(07101);
        for _ in 0..50 {
            let f = rand_finmap(&mut st, 5);
            let g = rand_finmap_with_dom(&mut st, f.cod.size);
            let gf = compose_map(&g, &f).unwrap();
            for x in 0..f.dom.size {
                assert_eq!(gf.table[x], g.table[f.table[x]]);
            }
        }
    }

    fn rand_finmap_with_dom(st: &mut Stream, dom: usize) -> FinMap {
        let cod = st.size(1, 5);
        FinMap::new(
            FinSet::new(dom),
            FinSet::new(cod),
            (0..dom).map(|_| st.size(0, cod - 1)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn pullback_identity_normalization() {
        let g = fm(3, 2, &[0, 1, 1]);
        let f = FinMap::identity(&g.cod);
        let pb = pullback(&f, &g).unwrap();
        assert!(pb.proj2.is_identity());
        assert_eq!(pb.apex.size, 3);
        assert_eq!(pb.proj1, g);
        let pb2 = pullback(&g, &f).unwrap();
        assert!(pb2.proj1.is_identity());
        assert_eq!(pb2.proj2, g);
    }

    #[test]
    fn pullback_matching_pairs() {
        // f: {a,b} -> {0,1}, f=(0,1); g: {c} -> {0,1}, g=(0)
        let f = fm(2, 2, &[0, 1]);
        let g = fm(1, 2, &[0]);
        let pb = pullback(&f, &g).unwrap();
        assert_eq!(pb.apex.size, 1);
        assert_eq!(pb.pairs(), &[(0, 0)]);
    }

    #[test]
    fn pullback_cardinality_oracle() {
        let mut st = Stream::new(4242);
        for _ in 0..100 {
            let (f, g) = rand_cospan(&mut st, 6);
            let pb = pullback(&f, &g).unwrap();
            let expected: usize = (0..f.cod.size)
                .map(|b| f.preimage(b).len() * g.preimage(b).len())
                .sum();
            assert_eq!(pb.apex.size, expected);
            is_pullback(&f, &g, &pb.proj1, &pb.proj2).unwrap();
        }
    }

    #[test]
    fn mediator_universal_property() {
        let mut st = Stream::new(99);
        for _ in 0..60 {
            let (f, g) = rand_cospan(&mut st, 4);
            let pb = pullback(&f, &g).unwrap();
            // u = proj1, v = proj2 mediates to the identity.
            let h = pullback_mediate(&pb, &pb.proj1, &pb.proj2).unwrap();
            assert!(h.is_identity());
        }
    }

    #[test]
    fn mediator_exists_uniquely_small() {
        // Exhaustive: for all cospans with sets <= 3 and all commuting (u, v)
        // from a domain of size <= 2, exactly one mediator satisfies both
        // projection equations.
        for ca in 1..=3usize {
            for cb in 1..=3usize {
                for cc in 1..=2usize {
                    let mut st = Stream::new((ca * 100 + cb * 10 + cc) as u64);
                    let f = FinMap::new(
                        FinSet::new(ca),
                        FinSet::new(cc),
                        (0..ca).map(|_| st.size(0, cc - 1)).collect(),
                    )
                    .unwrap();
                    let g = FinMap::new(
                        FinSet::new(cb),
                        FinSet::new(cc),
                        (0..cb).map(|_| st.size(0, cc - 1)).collect(),
                    )
                    .unwrap();
                    let pb = pullback(&f, &g).unwrap();
                    let w = 2usize;
                    // enumerate all (u, v) pairs
                    for ut in 0..ca.pow(w as u32) {
                        for vt in 0..cb.pow(w as u32) {
                            let u = fm(w, ca, &digits(ut, ca, w));
                            let v = fm(w, cb, &digits(vt, cb, w));
                            let commutes = (0..w)
                                .all(|i| f.table[u.table[i]] == g.table[v.table[i]]);
                            let med = pullback_mediate(&pb, &u, &v);
                            if !commutes {
                                assert!(med.is_err());
                                continue;
                            }
                            let h = med.unwrap();
                            assert_eq!(compose_map(&pb.proj1, &h).unwrap(), u);
                            assert_eq!(compose_map(&pb.proj2, &h).unwrap(), v);
                            // uniqueness: every other h' fails an equation
                            let n = pb.apex.size;
                            if n > 0 {
                                for ht in 0..n.pow(w as u32) {
                                    let hp = fm(w, n, &digits(ht, n, w));
                                    if hp.table == h.table {
                                        continue;
                                    }
                                    let ok = compose_map(&pb.proj1, &hp).unwrap() == u
                                        && compose_map(&pb.proj2, &hp).unwrap() == v;
                                    assert!(!ok, "second mediator found");
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    fn digits(mut n: usize, base: usize, len: usize) -> Vec<usize> {
        let mut d = vec![0usize; len];
        for slot in d.iter_mut() {
            *slot = n % base;
            n /= base;
        }
        d
    }

    #[test]
    fn fiber_counts() {
        let f = fm(4, 1, &[0, 0, 0, 0]);
        let (set, incl) = fiber(&f, 0).unwrap();
        assert_eq!(set.size, 4);
        assert_eq!(incl.table, vec![0, 1, 2, 3]);
        let mut st = Stream::new(7);
        for _ in 0..30 {
            let f = rand_finmap(&mut st, 6);
            let total: usize = (0..f.cod.size).map(|b| fiber(&f, b).unwrap().0.size).sum();
            assert_eq!(total, f.dom.size);
        }
    }

    #[test]
    fn dpb_identity_f_normalizes() {
        let u = fm(3, 2, &[0, 1, 0]);
        let f = FinMap::identity(&u.cod);
        let d = dist_pullback(&f, &u).unwrap();
        assert_eq!(d.y.size, 3);
        assert!(d.p.is_identity());
        assert!(d.q.is_identity());
        assert_eq!(d.r, u);
        assert_eq!(d.t.size, 3);
    }

    #[test]
    fn dpb_identity_u() {
        let f = fm(3, 2, &[0, 0, 1]);
        let u = FinMap::identity(&f.dom);
        let d = dist_pullback(&f, &u).unwrap();
        assert_eq!(d.y.size, 2);
        assert!(d.r.is_identity());
        assert_eq!(d.t.size, 3);
        assert!(d.p.is_identity());
    }

    #[test]
    fn dpb_section_counts() {
        // A={a1,a2}, B={b}, f constant; |u⁻¹(a1)|=2, |u⁻¹(a2)|=1 → |Y| = 2
        let f = fm(2, 1, &[0, 0]);
        let u = fm(3, 2, &[0, 0, 1]);
        let d = dist_pullback(&f, &u).unwrap();
        assert_eq!(d.y.size, 2);
        // outer rectangle is a pullback
        let up = compose_map(&u, &d.p).unwrap();
        is_pullback(&f, &d.r, &up, &d.q).unwrap();
    }

    #[test]
    fn dpb_cardinality_oracle() {
        let mut st = Stream::new(2024);
        for _ in 0..100 {
            let f = rand_finmap(&mut st, 4);
            let x = st.size(0, 4);
            let u = FinMap::new(
                FinSet::new(x),
                f.dom.clone(),
                (0..x).map(|_| st.size(0, f.dom.size.max(1) - 1)).collect(),
            );
            let u = match u {
                Ok(u) if f.dom.size > 0 => u,
                _ => continue,
            };
            let d = dist_pullback(&f, &u).unwrap();
            let expected: usize = (0..f.cod.size)
                .map(|b| {
                    f.preimage(b)
                        .iter()
                        .map(|&a| u.preimage(a).len())
                        .product::<usize>()
                })
                .sum();
            assert_eq!(d.y.size, expected);
            let up = compose_map(&u, &d.p).unwrap();
            is_pullback(&f, &d.r, &up, &d.q).unwrap();
        }
    }

    #[test]
    fn dpb_factor_terminal_at_itself() {
        let f = fm(3, 2, &[0, 0, 1]);
        let u = fm(4, 3, &[0, 1, 1, 2]);
        let d = dist_pullback(&f, &u).unwrap();
        let cand = PullbackAround {
            p: d.p.clone(),
            q: d.q.clone(),
            r: d.r.clone(),
        };
        let (s, t) = dpb_factor(&d, &cand).unwrap();
        assert!(s.is_identity());
        assert!(t.is_identity());
    }

    #[test]
    fn dpb_factor_respects_equations() {
        let mut st = Stream::new(555);
        for _ in 0..40 {
            let f = rand_finmap(&mut st, 3);
            if f.dom.size == 0 {
                continue;
            }
            let x = st.size(0, 3);
            let u = FinMap::new(
                FinSet::new(x),
                f.dom.clone(),
                (0..x).map(|_| st.size(0, f.dom.size - 1)).collect(),
            )
            .unwrap();
            let d = dist_pullback(&f, &u).unwrap();
            // candidate: precompose the chosen dpb with a permutation of Y
            let n = d.y.size;
            if n == 0 {
                continue;
            }
            let perm: Vec<usize> = (0..n).rev().collect();
            let perm_map = FinMap::new(d.y.clone(), d.y.clone(), perm).unwrap();
            let inv = perm_map.inverse().unwrap();
            let r_c = compose_map(&d.r, &perm_map).unwrap();
            // T_c = chosen pullback of (f, r_c), p_c via the matching section
            let pbc = pullback(&f, &r_c).unwrap();
            let mut p_table = Vec::new();
            for tc in 0..pbc.apex.size {
                let a = pbc.proj1.table[tc];
                let yc = pbc.proj2.table[tc];
                let y = perm_map.table[yc];
                let ti = d.t_index(a, y).unwrap();
                p_table.push(d.p.table[ti]);
            }
            let cand = PullbackAround {
                p: FinMap::new(pbc.apex.clone(), u.dom.clone(), p_table).unwrap(),
                q: pbc.proj2.clone(),
                r: r_c,
            };
            let (s, t) = dpb_factor(&d, &cand).unwrap();
            assert_eq!(t, perm_map, "factoring recovers the permutation");
            assert_eq!(compose_map(&d.p, &s).unwrap(), cand.p);
            assert_eq!(
                compose_map(&d.q, &s).unwrap(),
                compose_map(&t, &cand.q).unwrap()
            );
            assert_eq!(compose_map(&d.r, &t).unwrap(), cand.r);
            let _ = inv;
        }
    }

    #[test]
    fn section_codec_roundtrip() {
        let radices = vec![3usize, 1, 4];
        for i in 0..section_count(&radices) {
            let d = section_decode(&radices, i);
            assert_eq!(section_encode(&radices, &d), i);
        }
    }
}
