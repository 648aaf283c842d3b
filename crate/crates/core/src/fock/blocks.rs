//! Bookkeeping of how a quartic monomial a*_{p+k} a*_{q-k} a_q a_p moves
//! particles across a spectral cut P | Q.

/// One leg of the monomial: source momentum → target momentum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Leg {
    PP,
    PQ,
    QP,
    QQ,
}

impl Leg {
    pub fn new(source_in_p: bool, target_in_p: bool) -> Leg {
        match (source_in_p, target_in_p) {
            (true, true) => Leg::PP,
            (true, false) => Leg::PQ,
            (false, true) => Leg::QP,
            (false, false) => Leg::QQ,
        }
    }

    /// Change of 𝒩_Q along the leg.
    pub fn q_change(self) -> i32 {
        match self {
            Leg::PP | Leg::QQ => 0,
            Leg::PQ => 1,
            Leg::QP => -1,
        }
    }
}

/// The sixteen leg combinations. The A-blocks have at least one leg inside P
/// (so k is bounded by the cutoff); the B-blocks have none.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Block {
    A1,
    A2,
    A3,
    A4,
    A5,
    A6,
    A7,
    B1,
    B2,
    B3,
    B4,
    B5,
    B6,
    B7,
    B8,
    B9,
}

impl Block {
    pub fn from_legs(first: Leg, second: Leg) -> Block {
        use Leg::*;
        match (first, second) {
            (PP, PP) => Block::A1,
            (PP, PQ) => Block::A2,
            (PP, QP) => Block::A3,
            (PP, QQ) => Block::A4,
            (PQ, PP) => Block::A5,
            (QP, PP) => Block::A6,
            (QQ, PP) => Block::A7,
            (PQ, PQ) => Block::B1,
            (PQ, QP) => Block::B2,
            (PQ, QQ) => Block::B3,
            (QP, PQ) => Block::B4,
            (QP, QP) => Block::B5,
            (QP, QQ) => Block::B6,
            (QQ, PQ) => Block::B7,
            (QQ, QP) => Block::B8,
            (QQ, QQ) => Block::B9,
        }
    }

    pub fn legs(self) -> (Leg, Leg) {
        use Leg::*;
        match self {
            Block::A1 => (PP, PP),
            Block::A2 => (PP, PQ),
            Block::A3 => (PP, QP),
            Block::A4 => (PP, QQ),
            Block::A5 => (PQ, PP),
            Block::A6 => (QP, PP),
            Block::A7 => (QQ, PP),
            Block::B1 => (PQ, PQ),
            Block::B2 => (PQ, QP),
            Block::B3 => (PQ, QQ),
            Block::B4 => (QP, PQ),
            Block::B5 => (QP, QP),
            Block::B6 => (QP, QQ),
            Block::B7 => (QQ, PQ),
            Block::B8 => (QQ, QP),
            Block::B9 => (QQ, QQ),
        }
    }

    /// Change of 𝒩_Q under the monomial, Δ ∈ {0, ±1, ±2}.
    pub fn delta(self) -> i32 {
        let (a, b) = self.legs();
        a.q_change() + b.q_change()
    }
}

/// Block of the monomial with first leg p → p+k and second leg q → q−k,
/// given membership in P of p, p+k, q, q−k.
pub fn classify(p: bool, p_plus_k: bool, q: bool, q_minus_k: bool) -> Block {
    Block::from_legs(Leg::new(p, p_plus_k), Leg::new(q, q_minus_k))
}
