//! Categories of indexed families of finite sets (slices of FinSet), and
//! the reindexing / sum / dependent-product functors between them.
//!
//! A functor is a chain of primitive atoms interpreted right-to-left, so
//! `[Σ_t, Π_p, Δ_s]` is the polynomial functor `Σ_t Π_p Δ_s`. Element order
//! is deterministic everywhere: sums concatenate blocks in index order, and
//! dependent products enumerate sections with the same mixed-radix
//! convention as the chosen distributivity pullbacks, so the two
//! implementations agree on the nose.

use std::fmt;

use thiserror::Error;

use crate::finset::{
    compose_map, section_count, section_decode, section_encode, FinError, FinMap, FinSet,
};
use crate::poly::Polynomial;
use crate::span::Span;

#[derive(Debug, Error)]
pub enum FamError {
    #[error("family index mismatch: expected {expected}, got {got} ({context})")]
    IndexMismatch {
        expected: usize,
        got: usize,
        context: String,
    },
    #[error("entry count {got} does not match index size {expected}")]
    EntryCount { expected: usize, got: usize },
    #[error("atoms do not chain: {0}")]
    ChainMismatch(String),
    #[error(transparent)]
    Fin(#[from] FinError),
}

pub type FamResult<T> = Result<T, FamError>;

/// A family of finite sets indexed by a finite set.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Family {
    pub index: FinSet,
    pub entries: Vec<FinSet>,
}

impl Family {
    pub fn new(index: FinSet, entries: Vec<FinSet>) -> FamResult<Self> {
        if entries.len() != index.size {
            return Err(FamError::EntryCount {
                expected: index.size,
                got: entries.len(),
            });
        }
        Ok(Family { index, entries })
    }

    pub fn from_sizes(sizes: &[usize]) -> Self {
        Family {
            index: FinSet::new(sizes.len()),
            entries: sizes.iter().map(|&n| FinSet::new(n)).collect(),
        }
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.size).collect()
    }

    pub fn total(&self) -> usize {
        self.entries.iter().map(|e| e.size).sum()
    }
}

/// A morphism of families over a shared index: one map per entry.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FamilyMap {
    pub src: Family,
    pub tgt: Family,
    pub components: Vec<FinMap>,
}

impl FamilyMap {
    pub fn new(src: Family, tgt: Family, components: Vec<FinMap>) -> FamResult<Self> {
        if src.index != tgt.index {
            return Err(FamError::IndexMismatch {
                expected: src.index.size,
                got: tgt.index.size,
                context: "FamilyMap endpoints".into(),
            });
        }
        if components.len() != src.index.size {
            return Err(FamError::EntryCount {
                expected: src.index.size,
                got: components.len(),
            });
        }
        for (i, c) in components.iter().enumerate() {
            if c.dom.size != src.entries[i].size || c.cod.size != tgt.entries[i].size {
                return Err(FamError::IndexMismatch {
                    expected: src.entries[i].size,
                    got: c.dom.size,
                    context: format!("component {i} boundaries"),
                });
            }
        }
        Ok(FamilyMap {
            src,
            tgt,
            components,
        })
    }

    pub fn identity(f: &Family) -> Self {
        FamilyMap {
            src: f.clone(),
            tgt: f.clone(),
            components: f.entries.iter().map(FinMap::identity).collect(),
        }
    }

    pub fn compose(g: &FamilyMap, f: &FamilyMap) -> FamResult<FamilyMap> {
        if f.tgt != g.src {
            return Err(FamError::IndexMismatch {
                expected: g.src.index.size,
                got: f.tgt.index.size,
                context: "FamilyMap composition".into(),
            });
        }
        let comps = g
            .components
            .iter()
            .zip(f.components.iter())
            .map(|(gc, fc)| compose_map(gc, fc))
            .collect::<Result<Vec<_>, _>>()?;
        FamilyMap::new(f.src.clone(), g.tgt.clone(), comps)
    }

    pub fn is_identity(&self) -> bool {
        self.components.iter().all(FinMap::is_identity)
    }

    pub fn is_bijection(&self) -> bool {
        self.components.iter().all(FinMap::is_bijection)
    }

    pub fn inverse(&self) -> FamResult<FamilyMap> {
        let comps = self
            .components
            .iter()
            .map(|c| c.inverse())
            .collect::<Result<Vec<_>, _>>()?;
        FamilyMap::new(self.tgt.clone(), self.src.clone(), comps)
    }
}

/// Primitive functor atoms between family categories.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum FunctorAtom {
    /// Reindexing along `f : X → Y`; maps families over `Y` to families
    /// over `X`.
    Delta(FinMap),
    /// Fiberwise sum along `f : X → Y`; families over `X` to families over
    /// `Y`.
    Sigma(FinMap),
    /// Fiberwise dependent product along `f : X → Y`; families over `X` to
    /// families over `Y`.
    Pi(FinMap),
}

impl FunctorAtom {
    pub fn src_index(&self) -> &FinSet {
        match self {
            FunctorAtom::Delta(f) => &f.cod,
            FunctorAtom::Sigma(f) | FunctorAtom::Pi(f) => &f.dom,
        }
    }

    pub fn tgt_index(&self) -> &FinSet {
        match self {
            FunctorAtom::Delta(f) => &f.dom,
            FunctorAtom::Sigma(f) | FunctorAtom::Pi(f) => &f.cod,
        }
    }

    pub fn is_identity_atom(&self) -> bool {
        match self {
            FunctorAtom::Delta(f) | FunctorAtom::Sigma(f) | FunctorAtom::Pi(f) => f.is_identity(),
        }
    }
}

/// A composable chain of atoms; `atoms[last]` applies first.
#[derive(Clone, PartialEq, Eq)]
pub struct FamFunctor {
    pub src_index: FinSet,
    pub tgt_index: FinSet,
    pub atoms: Vec<FunctorAtom>,
}

impl fmt::Debug for FamFunctor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self
            .atoms
            .iter()
            .map(|a| match a {
                FunctorAtom::Delta(m) => format!("Δ{:?}", m.table),
                FunctorAtom::Sigma(m) => format!("Σ{:?}", m.table),
                FunctorAtom::Pi(m) => format!("Π{:?}", m.table),
            })
            .collect();
        write!(
            f,
            "FamFunctor({}→{}: {})",
            self.src_index.size,
            self.tgt_index.size,
            names.join("∘")
        )
    }
}

impl FamFunctor {
    pub fn identity(index: &FinSet) -> Self {
        FamFunctor {
            src_index: index.clone(),
            tgt_index: index.clone(),
            atoms: vec![],
        }
    }

    pub fn from_atoms(atoms: Vec<FunctorAtom>) -> FamResult<Self> {
        if atoms.is_empty() {
            return Err(FamError::ChainMismatch(
                "empty chain needs an explicit index".into(),
            ));
        }
        let src_index = atoms.last().unwrap().src_index().clone();
        let tgt_index = atoms.first().unwrap().tgt_index().clone();
        let f = FamFunctor {
            src_index,
            tgt_index,
            atoms,
        };
        f.check_chain()?;
        Ok(f)
    }

    fn check_chain(&self) -> FamResult<()> {
        for w in self.atoms.windows(2) {
            if w[1].tgt_index() != w[0].src_index() {
                return Err(FamError::ChainMismatch(format!(
                    "{:?} then {:?}",
                    w[1], w[0]
                )));
            }
        }
        Ok(())
    }

    pub fn atom(a: FunctorAtom) -> Self {
        FamFunctor {
            src_index: a.src_index().clone(),
            tgt_index: a.tgt_index().clone(),
            atoms: vec![a],
        }
    }

    pub fn delta(f: &FinMap) -> Self {
        Self::atom(FunctorAtom::Delta(f.clone()))
    }

    pub fn sigma(f: &FinMap) -> Self {
        Self::atom(FunctorAtom::Sigma(f.clone()))
    }

    pub fn pi(f: &FinMap) -> Self {
        Self::atom(FunctorAtom::Pi(f.clone()))
    }

    /// `g ∘ f`: apply `f` first.
    pub fn compose(g: &FamFunctor, f: &FamFunctor) -> FamResult<FamFunctor> {
        if f.tgt_index != g.src_index {
            return Err(FamError::ChainMismatch(format!(
                "compose: {:?} then {:?}",
                f, g
            )));
        }
        let mut atoms = g.atoms.clone();
        atoms.extend(f.atoms.iter().cloned());
        Ok(FamFunctor {
            src_index: f.src_index.clone(),
            tgt_index: g.tgt_index.clone(),
            atoms,
        })
    }

    /// Drop identity atoms; atoms over identity maps act as the identity
    /// bit-for-bit, so this is sound for evaluation and makes chain
    /// comparisons meaningful.
    pub fn normalized(&self) -> FamFunctor {
        let atoms: Vec<FunctorAtom> = self
            .atoms
            .iter()
            .filter(|a| !a.is_identity_atom())
            .cloned()
            .collect();
        FamFunctor {
            src_index: self.src_index.clone(),
            tgt_index: self.tgt_index.clone(),
            atoms,
        }
    }

    pub fn apply(&self, fam: &Family) -> FamResult<Family> {
        if fam.index != self.src_index {
            return Err(FamError::IndexMismatch {
                expected: self.src_index.size,
                got: fam.index.size,
                context: "FamFunctor::apply".into(),
            });
        }
        let mut cur = fam.clone();
        for a in self.atoms.iter().rev() {
            cur = eval_atom_family(a, &cur)?;
        }
        Ok(cur)
    }

    pub fn apply_map(&self, m: &FamilyMap) -> FamResult<FamilyMap> {
        if m.src.index != self.src_index {
            return Err(FamError::IndexMismatch {
                expected: self.src_index.size,
                got: m.src.index.size,
                context: "FamFunctor::apply_map".into(),
            });
        }
        let mut cur = m.clone();
        for a in self.atoms.iter().rev() {
            cur = eval_atom_map(a, &cur)?;
        }
        Ok(cur)
    }
}

/// Position of `x` within the ordered fiber `f⁻¹(f(x))`.
pub fn fiber_position(f: &FinMap, x: usize) -> usize {
    let b = f.table[x];
    f.table[..x].iter().filter(|&&v| v == b).count()
}

/// Decode an element of `(Σ_f A)_y` into `(x, a)`.
pub fn sigma_decode(f: &FinMap, a_sizes: &[usize], y: usize, elem: usize) -> (usize, usize) {
    let mut off = elem;
    for x in f.preimage(y) {
        let n = a_sizes[x];
        if off < n {
            return (x, off);
        }
        off -= n;
    }
    panic!("sigma_decode: element {elem} out of range at index {y}");
}

/// Encode `(x, a)` as an element of `(Σ_f A)_{f(x)}`.
pub fn sigma_encode(f: &FinMap, a_sizes: &[usize], x: usize, a: usize) -> usize {
    let y = f.table[x];
    let mut off = 0usize;
    for x2 in f.preimage(y) {
        if x2 == x {
            return off + a;
        }
        off += a_sizes[x2];
    }
    unreachable!("x not in its own fiber")
}

/// Radices of the dependent product `(Π_f A)_y`: entry sizes along the
/// ordered fiber.
pub fn pi_radices(f: &FinMap, a_sizes: &[usize], y: usize) -> Vec<usize> {
    f.preimage(y).iter().map(|&x| a_sizes[x]).collect()
}

fn eval_atom_family(a: &FunctorAtom, fam: &Family) -> FamResult<Family> {
    match a {
        FunctorAtom::Delta(f) => {
            if fam.index != f.cod {
                return Err(FamError::IndexMismatch {
                    expected: f.cod.size,
                    got: fam.index.size,
                    context: "Δ".into(),
                });
            }
            Ok(Family {
                index: f.dom.clone(),
                entries: f.table.iter().map(|&y| fam.entries[y].clone()).collect(),
            })
        }
        FunctorAtom::Sigma(f) => {
            if fam.index != f.dom {
                return Err(FamError::IndexMismatch {
                    expected: f.dom.size,
                    got: fam.index.size,
                    context: "Σ".into(),
                });
            }
            let mut entries = Vec::with_capacity(f.cod.size);
            for y in 0..f.cod.size {
                let mut labels = Vec::new();
                for x in f.preimage(y) {
                    for a_el in 0..fam.entries[x].size {
                        labels.push(format!("{x}.{}", fam.entries[x].label(a_el)));
                    }
                }
                entries.push(FinSet::with_labels(labels));
            }
            Ok(Family {
                index: f.cod.clone(),
                entries,
            })
        }
        FunctorAtom::Pi(f) => {
            if fam.index != f.dom {
                return Err(FamError::IndexMismatch {
                    expected: f.dom.size,
                    got: fam.index.size,
                    context: "Π".into(),
                });
            }
            let sizes = fam.sizes();
            let mut entries = Vec::with_capacity(f.cod.size);
            for y in 0..f.cod.size {
                let fiber = f.preimage(y);
                let radices = pi_radices(f, &sizes, y);
                let n = section_count(&radices);
                let mut labels = Vec::with_capacity(n);
                for s in 0..n {
                    let digits = section_decode(&radices, s);
                    let parts: Vec<String> = fiber
                        .iter()
                        .zip(digits.iter())
                        .map(|(&x, &d)| format!("{x}→{}", fam.entries[x].label(d)))
                        .collect();
                    labels.push(format!("[{}]", parts.join(",")));
                }
                entries.push(FinSet::with_labels(labels));
            }
            Ok(Family {
                index: f.cod.clone(),
                entries,
            })
        }
    }
}

fn eval_atom_map(a: &FunctorAtom, m: &FamilyMap) -> FamResult<FamilyMap> {
    let src = eval_atom_family(a, &m.src)?;
    let tgt = eval_atom_family(a, &m.tgt)?;
    let comps = match a {
        FunctorAtom::Delta(f) => f
            .table
            .iter()
            .map(|&y| m.components[y].clone())
            .collect::<Vec<_>>(),
        FunctorAtom::Sigma(f) => {
            let s_sizes = m.src.sizes();
            let t_sizes = m.tgt.sizes();
            let mut comps = Vec::with_capacity(f.cod.size);
            for y in 0..f.cod.size {
                let mut table = Vec::with_capacity(src.entries[y].size);
                for e in 0..src.entries[y].size {
                    let (x, a_el) = sigma_decode(f, &s_sizes, y, e);
                    let b_el = m.components[x].table[a_el];
                    table.push(sigma_encode(f, &t_sizes, x, b_el));
                }
                comps.push(FinMap::new(
                    src.entries[y].clone(),
                    tgt.entries[y].clone(),
                    table,
                )?);
            }
            comps
        }
        FunctorAtom::Pi(f) => {
            let s_sizes = m.src.sizes();
            let t_sizes = m.tgt.sizes();
            let mut comps = Vec::with_capacity(f.cod.size);
            for y in 0..f.cod.size {
                let fiber = f.preimage(y);
                let s_rad = pi_radices(f, &s_sizes, y);
                let t_rad = pi_radices(f, &t_sizes, y);
                let mut table = Vec::with_capacity(src.entries[y].size);
                for e in 0..src.entries[y].size {
                    let digits = section_decode(&s_rad, e);
                    let mapped: Vec<usize> = fiber
                        .iter()
                        .zip(digits.iter())
                        .map(|(&x, &d)| m.components[x].table[d])
                        .collect();
                    table.push(section_encode(&t_rad, &mapped));
                }
                comps.push(FinMap::new(
                    src.entries[y].clone(),
                    tgt.entries[y].clone(),
                    table,
                )?);
            }
            comps
        }
    };
    FamilyMap::new(src, tgt, comps)
}

/// The polynomial functor `Σ_t Π_p Δ_s` of a polynomial.
pub fn eval_poly_as_functor(p: &Polynomial) -> FamFunctor {
    FamFunctor {
        src_index: p.src().clone(),
        tgt_index: p.tgt().clone(),
        atoms: vec![
            FunctorAtom::Sigma(p.t.clone()),
            FunctorAtom::Pi(p.p.clone()),
            FunctorAtom::Delta(p.s.clone()),
        ],
    }
    .normalized()
}

/// The linear functor `Σ_t Δ_s` of a span.
pub fn eval_span_as_functor(s: &Span) -> FamFunctor {
    FamFunctor {
        src_index: s.src().clone(),
        tgt_index: s.tgt().clone(),
        atoms: vec![
            FunctorAtom::Sigma(s.right.clone()),
            FunctorAtom::Delta(s.left.clone()),
        ],
    }
    .normalized()
}


pub use self::tests_support::rand_family_map;

mod tests_support {
    use super::*;
    use crate::sample::Stream;

    /// A random family map `A' → B` where `A'` shrinks empty-target entries.
    pub fn rand_family_map(st: &mut Stream, a: &Family, b: &Family) -> FamilyMap {
        let comps = a
            .entries
            .iter()
            .zip(b.entries.iter())
            .map(|(ea, eb)| {
                if eb.size == 0 {
                    FinMap::new(FinSet::new(0), eb.clone(), vec![]).unwrap()
                } else {
                    FinMap::new(
                        ea.clone(),
                        eb.clone(),
                        (0..ea.size).map(|_| st.pick(eb.size)).collect(),
                    )
                    .unwrap()
                }
            })
            .collect::<Vec<_>>();
        let src = Family {
            index: a.index.clone(),
            entries: comps.iter().map(|c| c.dom.clone()).collect(),
        };
        FamilyMap::new(src, b.clone(), comps).unwrap()
    }
}

const _: () = {
    // fiber_position is currently used only in tests; keep it referenced.
    #[allow(dead_code)]
    fn _keep() {
        let _ = fiber_position;
    }
};
