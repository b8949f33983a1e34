//! Extended-real bounds shared by the SEP bound vectors and the QP types.
//!
//! Unbounded entries are an explicit marker, never a large sentinel float:
//! sentinel magnitudes would leak into solver scaling.

/// One extended-real bound value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    Finite(f64),
    NegInf,
    PosInf,
}

impl Bound {
    pub fn is_finite(&self) -> bool {
        matches!(self, Bound::Finite(_))
    }

    /// Finite value, if any.
    pub fn finite(&self) -> Option<f64> {
        match self {
            Bound::Finite(v) => Some(*v),
            _ => None,
        }
    }

    /// IEEE representation (`±inf` for the unbounded markers). Used only at
    /// the projection kernels, where infinite clamp limits are exact.
    pub fn as_f64(&self) -> f64 {
        match self {
            Bound::Finite(v) => *v,
            Bound::NegInf => f64::NEG_INFINITY,
            Bound::PosInf => f64::INFINITY,
        }
    }

    /// `self + v`, keeping infinities absorbing.
    pub fn shift(&self, v: f64) -> Bound {
        match self {
            Bound::Finite(x) => Bound::Finite(x + v),
            b => *b,
        }
    }

    /// `v - self`, flipping the sign of an infinity.
    pub fn sub_from(&self, v: f64) -> Bound {
        match self {
            Bound::Finite(x) => Bound::Finite(v - x),
            Bound::NegInf => Bound::PosInf,
            Bound::PosInf => Bound::NegInf,
        }
    }
}

impl From<f64> for Bound {
    fn from(v: f64) -> Self {
        if v == f64::NEG_INFINITY {
            Bound::NegInf
        } else if v == f64::INFINITY {
            Bound::PosInf
        } else {
            Bound::Finite(v)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_keeps_markers() {
        assert_eq!(Bound::Finite(2.0).shift(1.0), Bound::Finite(3.0));
        assert_eq!(Bound::NegInf.shift(5.0), Bound::NegInf);
        assert_eq!(Bound::NegInf.sub_from(1.0), Bound::PosInf);
        assert_eq!(Bound::Finite(0.5).sub_from(2.0), Bound::Finite(1.5));
        assert!(Bound::NegInf.as_f64().is_infinite());
    }
}
