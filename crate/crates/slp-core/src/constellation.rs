//! Square-QAM constellations: point enumeration, seeded symbol drawing,
//! nearest-point decision, and per-part boundary classification.
//!
//! Constellations are unnormalized, with per-axis levels at the odd integers
//! `{±1, ±3, …, ±(2L−1)}`; amplitude scaling lives in the per-user gain
//! factor applied by the precoders.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Square-QAM constellation with `L` levels per half-axis (order `4L²`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QamSpec {
    level_count: u32,
}

impl QamSpec {
    pub fn new(level_count: u32) -> Result<Self> {
        if level_count == 0 {
            return Err(Error::InvalidInput(
                "QAM level count must be at least 1".into(),
            ));
        }
        Ok(Self { level_count })
    }

    pub fn level_count(&self) -> u32 {
        self.level_count
    }

    /// Number of constellation points, `4L²`.
    pub fn order(&self) -> usize {
        4 * (self.level_count as usize) * (self.level_count as usize)
    }

    /// Largest level magnitude, `2L − 1`.
    pub fn max_level(&self) -> i32 {
        2 * self.level_count as i32 - 1
    }

    /// Mean of `|s|²` over the constellation: `2(4L² − 1)/3`.
    pub fn avg_energy(&self) -> f64 {
        let l = self.level_count as f64;
        2.0 * (4.0 * l * l - 1.0) / 3.0
    }

    /// Whether `part` is a valid level (odd, within `±(2L−1)`).
    pub fn contains_part(&self, part: i32) -> bool {
        part.rem_euclid(2) == 1 && part.abs() <= self.max_level()
    }

    pub fn contains(&self, s: Symbol) -> bool {
        self.contains_part(s.re) && self.contains_part(s.im)
    }
}

/// One constellation point; both parts are odd integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Symbol {
    pub re: i32,
    pub im: i32,
}

impl Symbol {
    pub fn new(re: i32, im: i32) -> Self {
        Self { re, im }
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re as f64, self.im as f64)
    }

    pub fn energy(&self) -> f64 {
        (self.re * self.re + self.im * self.im) as f64
    }
}

/// Position of a real or imaginary part within the level range.
///
/// Edge parts have a one-sided error region; interior parts are flanked by
/// decision boundaries on both sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartClass {
    Interior,
    PosEdge,
    NegEdge,
}

/// All `4L²` points, ordered lexicographically by `(re, im)` ascending.
pub fn enumerate_points(spec: QamSpec) -> Vec<Symbol> {
    let max = spec.max_level();
    let mut points = Vec::with_capacity(spec.order());
    let mut re = -max;
    while re <= max {
        let mut im = -max;
        while im <= max {
            points.push(Symbol::new(re, im));
            im += 2;
        }
        re += 2;
    }
    points
}

/// Nearest level to `x`, ties at even integers resolved toward lower
/// magnitude (an exact zero resolves to +1). No clipping.
fn nearest_odd(x: f64) -> f64 {
    let lo = 2.0 * ((x + 1.0) * 0.5).floor() - 1.0;
    let hi = lo + 2.0;
    let d_lo = x - lo;
    let d_hi = hi - x;
    if d_lo < d_hi {
        lo
    } else if d_hi < d_lo {
        hi
    } else if lo.abs() < hi.abs() {
        lo
    } else if hi.abs() < lo.abs() {
        hi
    } else {
        1.0
    }
}

fn decide_part(spec: QamSpec, x: f64) -> i32 {
    let max = spec.max_level() as f64;
    // clamp before rounding so huge inputs cannot overflow the cast
    let level = nearest_odd(x.clamp(-max - 2.0, max + 2.0));
    level.clamp(-max, max) as i32
}

/// Nearest constellation point in Euclidean distance; the decision is
/// independent per axis (round to the nearest odd level, clip at `±(2L−1)`).
pub fn decide(spec: QamSpec, z: Complex64) -> Result<Symbol> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::InvalidInput(format!(
            "decision input must be finite, got {z}"
        )));
    }
    Ok(Symbol::new(decide_part(spec, z.re), decide_part(spec, z.im)))
}

/// Classification of one part per the boundary case table.
pub fn classify_part(spec: QamSpec, part: i32) -> Result<PartClass> {
    if !spec.contains_part(part) {
        return Err(Error::InvalidInput(format!(
            "part {part} is not a level of {}-QAM",
            spec.order()
        )));
    }
    let max = spec.max_level();
    Ok(if part == max {
        PartClass::PosEdge
    } else if part == -max {
        PartClass::NegEdge
    } else {
        PartClass::Interior
    })
}

/// `count` i.i.d. uniform draws from the constellation. The same seed
/// reproduces the same sequence.
pub fn draw_symbols(spec: QamSpec, seed: u64, count: usize) -> Vec<Symbol> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let levels = 2 * spec.level_count as i32;
    let from_index = |idx: i32| 2 * idx + 1 - levels;
    (0..count)
        .map(|_| {
            let re = from_index(rng.random_range(0..levels));
            let im = from_index(rng.random_range(0..levels));
            Symbol::new(re, im)
        })
        .collect()
}

/// A `K × T` block of symbols: `K` user streams over `T` slots, stored
/// slot-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolBlock {
    data: Vec<Symbol>,
    n_users: usize,
    n_slots: usize,
}

impl SymbolBlock {
    /// Builds a block from per-user streams (each of length `T`).
    pub fn from_streams(streams: &[Vec<Symbol>]) -> Result<Self> {
        let n_users = streams.len();
        if n_users == 0 {
            return Err(Error::InvalidInput("symbol block needs at least one user".into()));
        }
        let n_slots = streams[0].len();
        if streams.iter().any(|s| s.len() != n_slots) {
            return Err(Error::InvalidInput("user streams have unequal lengths".into()));
        }
        let mut data = Vec::with_capacity(n_users * n_slots);
        for t in 0..n_slots {
            for stream in streams {
                data.push(stream[t]);
            }
        }
        Ok(Self { data, n_users, n_slots })
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_slots(&self) -> usize {
        self.n_slots
    }

    /// The `K` symbols sent in slot `t`.
    pub fn slot(&self, t: usize) -> &[Symbol] {
        &self.data[t * self.n_users..(t + 1) * self.n_users]
    }
}
