//! The bicategory of spans over finite sets, and its invertible-2-cell
//! variant.
//!
//! Composition takes the chosen pullback, so composing with an identity
//! span returns the other span bit-for-bit and the unitors are identity
//! 2-cells. Associators are materialized as explicit invertible 2-cells.

use thiserror::Error;

use crate::finset::{
    compose_map, pullback, pullback_mediate, FinError, FinMap, FinSet, PullbackResult,
};

#[derive(Debug, Error)]
pub enum SpanError {
    #[error("span legs disagree on apex: {left} vs {right}")]
    ApexMismatch { left: usize, right: usize },
    #[error("boundary mismatch: {0}")]
    Boundary(String),
    #[error("2-cell does not commute with span legs ({0})")]
    NotACell(String),
    #[error("2-cell apex map is not a bijection (iso mode)")]
    NotInvertible,
    #[error(transparent)]
    Fin(#[from] FinError),
}

pub type SpanResult<T> = Result<T, SpanError>;

/// A span `src ← apex → tgt`; `left : apex → src`, `right : apex → tgt`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Span {
    pub left: FinMap,
    pub right: FinMap,
}

impl Span {
    pub fn new(left: FinMap, right: FinMap) -> SpanResult<Self> {
        if left.dom.size != right.dom.size {
            return Err(SpanError::ApexMismatch {
                left: left.dom.size,
                right: right.dom.size,
            });
        }
        Ok(Span { left, right })
    }

    pub fn identity(x: &FinSet) -> Self {
        Span {
            left: FinMap::identity(x),
            right: FinMap::identity(x),
        }
    }

    pub fn apex(&self) -> &FinSet {
        &self.left.dom
    }

    pub fn src(&self) -> &FinSet {
        &self.left.cod
    }

    pub fn tgt(&self) -> &FinSet {
        &self.right.cod
    }

    pub fn is_identity(&self) -> bool {
        self.left.is_identity() && self.right.is_identity()
    }

    /// Transpose: swap the legs.
    pub fn reversed(&self) -> Span {
        Span {
            left: self.right.clone(),
            right: self.left.clone(),
        }
    }
}

/// Which 2-cells are admitted.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SpanMode {
    All,
    IsoOnly,
}

/// A 2-cell between parallel spans: a map of apexes commuting with both
/// legs.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SpanTwoCell {
    pub src: Span,
    pub tgt: Span,
    pub apex_map: FinMap,
}

impl SpanTwoCell {
    pub fn new(src: Span, tgt: Span, apex_map: FinMap) -> SpanResult<Self> {
        if src.src() != tgt.src() || src.tgt() != tgt.tgt() {
            return Err(SpanError::Boundary(
                "2-cell endpoints must agree on boundary objects".into(),
            ));
        }
        if apex_map.dom.size != src.apex().size || apex_map.cod.size != tgt.apex().size {
            return Err(SpanError::Boundary(
                "apex map must go from source apex to target apex".into(),
            ));
        }
        let l = compose_map(&tgt.left, &apex_map)?;
        if l != src.left {
            return Err(SpanError::NotACell("left leg".into()));
        }
        let r = compose_map(&tgt.right, &apex_map)?;
        if r != src.right {
            return Err(SpanError::NotACell("right leg".into()));
        }
        Ok(SpanTwoCell { src, tgt, apex_map })
    }

    pub fn new_in_mode(
        mode: SpanMode,
        src: Span,
        tgt: Span,
        apex_map: FinMap,
    ) -> SpanResult<Self> {
        let cell = SpanTwoCell::new(src, tgt, apex_map)?;
        if mode == SpanMode::IsoOnly && !cell.is_invertible() {
            return Err(SpanError::NotInvertible);
        }
        Ok(cell)
    }

    pub fn identity(s: &Span) -> Self {
        SpanTwoCell {
            src: s.clone(),
            tgt: s.clone(),
            apex_map: FinMap::identity(s.apex()),
        }
    }

    pub fn is_invertible(&self) -> bool {
        self.apex_map.is_bijection()
    }

    pub fn inverse(&self) -> SpanResult<SpanTwoCell> {
        let inv = self.apex_map.inverse().map_err(|_| SpanError::NotInvertible)?;
        SpanTwoCell::new(self.tgt.clone(), self.src.clone(), inv)
    }
}

/// The chosen composite of spans together with its pullback witness.
#[derive(Clone, Debug)]
pub struct SpanComposite {
    pub composite: Span,
    pub witness: PullbackResult,
}

/// `second ∘ first`, for `first : X ↛ Y` and `second : Y ↛ Z`.
pub fn compose_span(second: &Span, first: &Span) -> SpanResult<SpanComposite> {
    if first.tgt() != second.src() {
        return Err(SpanError::Boundary(format!(
            "compose_span: target {} of first vs source {} of second",
            first.tgt().size,
            second.src().size
        )));
    }
    let pb = pullback(&first.right, &second.left)?;
    let left = compose_map(&first.left, &pb.proj1)?;
    let right = compose_map(&second.right, &pb.proj2)?;
    Ok(SpanComposite {
        composite: Span::new(left, right)?,
        witness: pb,
    })
}

/// Vertical composition of 2-cells: `beta ∘ alpha` for `alpha : P ⇒ Q`,
/// `beta : Q ⇒ R`.
pub fn span_vcompose(beta: &SpanTwoCell, alpha: &SpanTwoCell) -> SpanResult<SpanTwoCell> {
    if alpha.tgt != beta.src {
        return Err(SpanError::Boundary(
            "vertical composition: middle spans differ".into(),
        ));
    }
    let m = compose_map(&beta.apex_map, &alpha.apex_map)?;
    SpanTwoCell::new(alpha.src.clone(), beta.tgt.clone(), m)
}

/// Horizontal composition of 2-cells: for `alpha : P ⇒ P'` over `X ↛ Y` and
/// `beta : Q ⇒ Q'` over `Y ↛ Z`, the mediator `Q∘P ⇒ Q'∘P'`.
pub fn span_hcompose(beta: &SpanTwoCell, alpha: &SpanTwoCell) -> SpanResult<SpanTwoCell> {
    let src = compose_span(&beta.src, &alpha.src)?;
    let tgt = compose_span(&beta.tgt, &alpha.tgt)?;
    let u = compose_map(&alpha.apex_map, &src.witness.proj1)?;
    let v = compose_map(&beta.apex_map, &src.witness.proj2)?;
    let m = pullback_mediate(&tgt.witness, &u, &v)?;
    SpanTwoCell::new(src.composite, tgt.composite, m)
}

/// Whisker a 2-cell on the right by a span: `alpha ∘ 1_s`.
pub fn span_whisker_right(alpha: &SpanTwoCell, s: &Span) -> SpanResult<SpanTwoCell> {
    span_hcompose(alpha, &SpanTwoCell::identity(s))
}

/// Whisker a 2-cell on the left by a span: `1_s ∘ alpha`.
pub fn span_whisker_left(s: &Span, alpha: &SpanTwoCell) -> SpanResult<SpanTwoCell> {
    span_hcompose(&SpanTwoCell::identity(s), alpha)
}

/// The invertible associator `(R∘Q)∘P ⇒ R∘(Q∘P)`.
pub fn span_associator(r: &Span, q: &Span, p: &Span) -> SpanResult<SpanTwoCell> {
    let qp = compose_span(q, p)?;
    let rq = compose_span(r, q)?;
    let left = compose_span(&rq.composite, p)?; // (R∘Q)∘P
    let right = compose_span(r, &qp.composite)?; // R∘(Q∘P)
    let mut table = Vec::with_capacity(left.composite.apex().size);
    for m in 0..left.composite.apex().size {
        let pi = left.witness.proj1.table[m];
        let n = left.witness.proj2.table[m];
        let qi = rq.witness.proj1.table[n];
        let ri = rq.witness.proj2.table[n];
        let k = qp
            .witness
            .index_of(pi, qi)
            .ok_or_else(|| SpanError::Boundary("associator decode failed".into()))?;
        let out = right
            .witness
            .index_of(k, ri)
            .ok_or_else(|| SpanError::Boundary("associator encode failed".into()))?;
        table.push(out);
    }
    let apex_map = FinMap::new(
        left.composite.apex().clone(),
        right.composite.apex().clone(),
        table,
    )?;
    let cell = SpanTwoCell::new(left.composite, right.composite, apex_map)?;
    if !cell.is_invertible() {
        return Err(SpanError::NotInvertible);
    }
    Ok(cell)
}

/// Unitors. Composition with identity spans is strict, so these are
/// identity 2-cells; they are materialized for uniformity.
pub fn span_left_unitor(p: &Span) -> SpanResult<SpanTwoCell> {
    let c = compose_span(&Span::identity(p.tgt()), p)?;
    debug_assert_eq!(c.composite, *p);
    Ok(SpanTwoCell::identity(p))
}

pub fn span_right_unitor(p: &Span) -> SpanResult<SpanTwoCell> {
    let c = compose_span(p, &Span::identity(p.src()))?;
    debug_assert_eq!(c.composite, *p);
    Ok(SpanTwoCell::identity(p))
}

/// The two canonical embeddings of arrows into spans.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ArrowEmbedding {
    /// `f ↦ (1, f)`.
    Sigma,
    /// `f ↦ (f, 1)`.
    Delta,
}

pub fn embed_arrow_span(mode: ArrowEmbedding, f: &FinMap) -> Span {
    match mode {
        ArrowEmbedding::Sigma => Span {
            left: FinMap::identity(&f.dom),
            right: f.clone(),
        },
        ArrowEmbedding::Delta => Span {
            left: f.clone(),
            right: FinMap::identity(&f.dom),
        },
    }
}

/// An adjunction in the bicategory of spans.
#[derive(Clone, Debug)]
pub struct SpanAdjunction {
    pub left: Span,
    pub right: Span,
    pub unit: SpanTwoCell,
    pub counit: SpanTwoCell,
}

/// The canonical adjunction `f_Σ ⊣ f_Δ` with diagonal unit and counit `f`.
pub fn span_adjunction(f: &FinMap) -> SpanResult<SpanAdjunction> {
    let l = embed_arrow_span(ArrowEmbedding::Sigma, f);
    let r = embed_arrow_span(ArrowEmbedding::Delta, f);
    // unit: 1_X ⇒ f_Δ ∘ f_Σ, apex X ×_Y X, the diagonal.
    let rl = compose_span(&r, &l)?;
    let mut diag = Vec::with_capacity(f.dom.size);
    for x in 0..f.dom.size {
        diag.push(rl.witness.index_of(x, x).ok_or_else(|| {
            SpanError::Boundary("kernel pair misses diagonal".into())
        })?);
    }
    let unit = SpanTwoCell::new(
        Span::identity(&f.dom),
        rl.composite.clone(),
        FinMap::new(f.dom.clone(), rl.composite.apex().clone(), diag)?,
    )?;
    // counit: f_Σ ∘ f_Δ ⇒ 1_Y; the composite is (f, f) and the cell is f.
    let lr = compose_span(&l, &r)?;
    let counit = SpanTwoCell::new(lr.composite.clone(), Span::identity(&f.cod), {
        FinMap::new(lr.composite.apex().clone(), f.cod.clone(), {
            lr.composite.left.table.clone()
        })?
    })?;
    Ok(SpanAdjunction {
        left: l,
        right: r,
        unit,
        counit,
    })
}

impl SpanAdjunction {
    /// Both triangle identities, as exact 2-cell equalities.
    pub fn triangle_identities_hold(&self) -> SpanResult<bool> {
        // 1_l: l = l∘1 ⇒ l∘(r∘l) ⇒ (l∘r)∘l ⇒ 1∘l = l equals the identity.
        let lu = span_whisker_left(&self.left, &self.unit)?;
        let assoc = span_associator(&self.left, &self.right, &self.left)?;
        let el = span_whisker_right(&self.counit, &self.left)?;
        let t1 = span_vcompose(&el, &span_vcompose(&assoc, &lu)?)?;
        let ok1 = t1.apex_map.is_identity() && t1.src == self.left && t1.tgt == self.left;
        // 1_r: r = 1∘r ⇒ (r∘l)∘r ⇒ r∘(l∘r) ⇒ r∘1 = r equals the identity.
        let ur = span_whisker_right(&self.unit, &self.right)?;
        let assoc2 = span_associator(&self.right, &self.left, &self.right)?;
        let re = span_whisker_left(&self.right, &self.counit)?;
        let t2 = span_vcompose(&re, &span_vcompose(&assoc2, &ur)?)?;
        let ok2 = t2.apex_map.is_identity() && t2.src == self.right && t2.tgt == self.right;
        Ok(ok1 && ok2)
    }
}

/// The ℕ-matrix of a span: `entry[j][i]` counts apex elements with
/// `left = i`, `right = j`. Functorial: composition of spans goes to matrix
/// product.
pub fn to_matrix(s: &Span) -> Vec<Vec<u64>> {
    let mut m = vec![vec![0u64; s.src().size]; s.tgt().size];
    for a in 0..s.apex().size {
        m[s.right.table[a]][s.left.table[a]] += 1;
    }
    m
}

pub fn matrix_product(q: &[Vec<u64>], p: &[Vec<u64>]) -> Vec<Vec<u64>> {
    let rows = q.len();
    let mid = p.len();
    let cols = if mid > 0 { p[0].len() } else { 0 };
    let mut out = vec![vec![0u64; cols]; rows];
    for (k, out_row) in out.iter_mut().enumerate() {
        for (j, p_row) in p.iter().enumerate() {
            let qkj = q[k][j];
            if qkj == 0 {
                continue;
            }
            for (i, &pji) in p_row.iter().enumerate() {
                out_row[i] += qkj * pji;
            }
        }
    }
    out
}

/// Isomorphism of spans as a predicate producing the witnessing bijection.
pub fn span_iso_witness(a: &Span, b: &Span) -> Option<SpanTwoCell> {
    if a.src() != b.src() || a.tgt() != b.tgt() || a.apex().size != b.apex().size {
        return None;
    }
    // match elements by (left, right) fingerprint
    let mut buckets: std::collections::HashMap<(usize, usize), Vec<usize>> = Default::default();
    for m in 0..b.apex().size {
        buckets
            .entry((b.left.table[m], b.right.table[m]))
            .or_default()
            .push(m);
    }
    let mut table = Vec::with_capacity(a.apex().size);
    for m in 0..a.apex().size {
        let key = (a.left.table[m], a.right.table[m]);
        let slot = buckets.get_mut(&key)?;
        let i = slot.pop()?;
        table.push(i);
    }
    let map = FinMap::new(a.apex().clone(), b.apex().clone(), table).ok()?;
    SpanTwoCell::new(a.clone(), b.clone(), map).ok()
}
