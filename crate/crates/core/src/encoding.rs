//! Fixed-length genotype encodings of variable-depth LSTM stacks.
//!
//! Three schemes map an architecture with up to `m` layers onto a vector of
//! integers of fixed length:
//!
//! * plain: `[h1, .., hm, l]`, a zero neuron count drops the layer;
//! * flag: `[h1, b1, .., hm, bm, l]`, layer `i` is kept iff `bi = 1`;
//! * size: `[h1, .., hm, s, l]`, only the first `s` layers are kept.
//!
//! Decoding is many-to-one. For plain and flag genotypes the canonical member
//! of a decode class is the one whose (masked) zeros are all trailing; every
//! other member is called infeasible and can be penalized during the search.

use std::collections::HashSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodingError {
    #[error("invalid search space: {0}")]
    InvalidSpace(String),
    #[error("genotype has length {got}, the {scheme} scheme expects {expected}")]
    WrongLength {
        scheme: Scheme,
        expected: usize,
        got: usize,
    },
    #[error("slot {slot} holds {value}, outside its legal range")]
    OutOfRange { slot: usize, value: u32 },
    #[error("genotype was built for the {got} scheme, the space uses {expected}")]
    SchemeMismatch { expected: Scheme, got: Scheme },
    #[error("genotype decodes to an architecture without layers")]
    EmptyArchitecture,
    #[error("cannot parse genotype slot {slot}: {text:?}")]
    Parse { slot: usize, text: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Plain,
    Flag,
    Size,
}

impl Scheme {
    /// Single-letter code used in strategy names (`P`, `F`, `S`).
    pub fn letter(self) -> char {
        match self {
            Scheme::Plain => 'P',
            Scheme::Flag => 'F',
            Scheme::Size => 'S',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        match c {
            'P' => Some(Scheme::Plain),
            'F' => Some(Scheme::Flag),
            'S' => Some(Scheme::Size),
            _ => None,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Plain => "plain",
            Scheme::Flag => "flag",
            Scheme::Size => "size",
        })
    }
}

/// The legal values of one genotype slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotDomain {
    /// `[lo, hi]`, or `{0} ∪ [lo, hi]` when `zero` is set.
    Neurons {
        lo: u32,
        hi: u32,
        zero: bool,
    },
    Bit,
    /// Number of leading layers used by the size scheme, `[1, m]`.
    Depth(u32),
    Lookback {
        lo: u32,
        hi: u32,
    },
}

impl SlotDomain {
    pub fn cardinality(self) -> u32 {
        match self {
            SlotDomain::Neurons { lo, hi, zero } => hi - lo + 1 + u32::from(zero),
            SlotDomain::Bit => 2,
            SlotDomain::Depth(m) => m,
            SlotDomain::Lookback { lo, hi } => hi - lo + 1,
        }
    }

    /// The `idx`-th legal value in increasing order.
    pub fn value(self, idx: u32) -> u32 {
        debug_assert!(idx < self.cardinality());
        match self {
            SlotDomain::Neurons { lo, zero: true, .. } => {
                if idx == 0 {
                    0
                } else {
                    lo + idx - 1
                }
            }
            SlotDomain::Neurons { lo, .. } | SlotDomain::Lookback { lo, .. } => lo + idx,
            SlotDomain::Bit => idx,
            SlotDomain::Depth(_) => idx + 1,
        }
    }

    pub fn contains(self, v: u32) -> bool {
        match self {
            SlotDomain::Neurons { lo, hi, zero } => (zero && v == 0) || (lo..=hi).contains(&v),
            SlotDomain::Bit => v <= 1,
            SlotDomain::Depth(m) => (1..=m).contains(&v),
            SlotDomain::Lookback { lo, hi } => (lo..=hi).contains(&v),
        }
    }

    pub fn min(self) -> u32 {
        self.value(0)
    }

    pub fn max(self) -> u32 {
        self.value(self.cardinality() - 1)
    }
}

/// Bounds of the architecture search for one encoding scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub scheme: Scheme,
    pub max_layers: u32,
    pub neurons_min: u32,
    pub neurons_max: u32,
    pub lookback_min: u32,
    pub lookback_max: u32,
}

impl SearchSpace {
    /// A space with look-back drawn from `[2, lookback_max]`.
    pub fn new(
        scheme: Scheme,
        max_layers: u32,
        neurons: (u32, u32),
        lookback_max: u32,
    ) -> Result<Self, EncodingError> {
        Self::with_lookback(scheme, max_layers, neurons, (2, lookback_max))
    }

    pub fn with_lookback(
        scheme: Scheme,
        max_layers: u32,
        neurons: (u32, u32),
        lookback: (u32, u32),
    ) -> Result<Self, EncodingError> {
        let space = SearchSpace {
            scheme,
            max_layers,
            neurons_min: neurons.0,
            neurons_max: neurons.1,
            lookback_min: lookback.0,
            lookback_max: lookback.1,
        };
        space.validate()?;
        Ok(space)
    }

    /// The sine-wave search space: 1..3 layers, 1..100 neurons, look-back 2..30.
    pub fn sine(scheme: Scheme) -> Self {
        Self::new(scheme, 3, (1, 100), 30).expect("valid constants")
    }

    pub fn validate(&self) -> Result<(), EncodingError> {
        let bad = |msg: &str| Err(EncodingError::InvalidSpace(msg.to_owned()));
        if self.max_layers < 1 {
            return bad("at least one layer is required");
        }
        if self.neurons_min < 1 || self.neurons_max < self.neurons_min {
            return bad("neuron range must satisfy 1 <= min <= max");
        }
        if self.lookback_min < 1 || self.lookback_max < self.lookback_min {
            return bad("look-back range must satisfy 1 <= min <= max");
        }
        if self.lookback_max < 2 {
            return bad("maximum look-back must be at least 2");
        }
        Ok(())
    }

    pub fn with_scheme(self, scheme: Scheme) -> Self {
        SearchSpace { scheme, ..self }
    }

    pub fn genotype_length(&self) -> usize {
        let m = self.max_layers as usize;
        match self.scheme {
            Scheme::Plain => m + 1,
            Scheme::Flag => 2 * m + 1,
            Scheme::Size => m + 2,
        }
    }

    pub fn slot_domain(&self, slot: usize) -> SlotDomain {
        let m = self.max_layers as usize;
        let len = self.genotype_length();
        assert!(slot < len, "slot {slot} out of bounds for length {len}");
        let neurons = |zero| SlotDomain::Neurons {
            lo: self.neurons_min,
            hi: self.neurons_max,
            zero,
        };
        if slot == len - 1 {
            return SlotDomain::Lookback {
                lo: self.lookback_min,
                hi: self.lookback_max,
            };
        }
        match self.scheme {
            Scheme::Plain => neurons(true),
            Scheme::Flag if slot.is_multiple_of(2) => neurons(false),
            Scheme::Flag => SlotDomain::Bit,
            Scheme::Size if slot < m => neurons(false),
            Scheme::Size => SlotDomain::Depth(self.max_layers),
        }
    }

    pub fn domains(&self) -> Vec<SlotDomain> {
        (0..self.genotype_length())
            .map(|i| self.slot_domain(i))
            .collect()
    }

    /// Checks length, scheme and per-slot bounds.
    pub fn check(&self, g: &Genotype) -> Result<(), EncodingError> {
        if g.scheme != self.scheme {
            return Err(EncodingError::SchemeMismatch {
                expected: self.scheme,
                got: g.scheme,
            });
        }
        let expected = self.genotype_length();
        if g.values.len() != expected {
            return Err(EncodingError::WrongLength {
                scheme: self.scheme,
                expected,
                got: g.values.len(),
            });
        }
        for (slot, &value) in g.values.iter().enumerate() {
            if !self.slot_domain(slot).contains(value) {
                return Err(EncodingError::OutOfRange { slot, value });
            }
        }
        Ok(())
    }

    /// Parses a `;`-separated genotype (the trace file format) and checks it
    /// against this space.
    pub fn parse_genotype(&self, text: &str) -> Result<Genotype, EncodingError> {
        let values = text
            .split(';')
            .enumerate()
            .map(|(slot, part)| {
                part.trim()
                    .parse::<u32>()
                    .map_err(|_| EncodingError::Parse {
                        slot,
                        text: part.to_owned(),
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let g = Genotype::new(self.scheme, values);
        self.check(&g)?;
        Ok(g)
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Genotype {
        let values = self
            .domains()
            .into_iter()
            .map(|d| d.value(rng.random_range(0..d.cardinality())))
            .collect();
        Genotype::new(self.scheme, values)
    }

    /// Latin hypercube design of `n` genotypes.
    ///
    /// Each slot's legal values are split into `n` equal-width strata; every
    /// stratum receives one uniform draw (floored to a value index) and the
    /// strata are shuffled independently per slot. With fewer legal values
    /// than `n`, values repeat.
    pub fn sample_lhs<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Genotype> {
        let len = self.genotype_length();
        let mut columns: Vec<Vec<u32>> = Vec::with_capacity(len);
        for d in self.domains() {
            let card = d.cardinality();
            let mut col: Vec<u32> = (0..n)
                .map(|k| {
                    let u = (k as f64 + rng.random::<f64>()) / n as f64;
                    let idx = ((u * card as f64).floor() as u32).min(card - 1);
                    d.value(idx)
                })
                .collect();
            col.shuffle(rng);
            columns.push(col);
        }
        (0..n)
            .map(|i| Genotype::new(self.scheme, columns.iter().map(|c| c[i]).collect()))
            .collect()
    }

    /// Copy of `g` with one slot redrawn uniformly among its other legal
    /// values. Slots with a single legal value are never picked.
    pub fn random_mutation<R: Rng + ?Sized>(&self, g: &Genotype, rng: &mut R) -> Genotype {
        let mutable: Vec<usize> = (0..g.values.len())
            .filter(|&i| self.slot_domain(i).cardinality() > 1)
            .collect();
        let mut out = g.clone();
        let Some(&slot) = mutable.get(rng.random_range(0..mutable.len().max(1))) else {
            return out;
        };
        let d = self.slot_domain(slot);
        let current = (0..d.cardinality()).find(|&k| d.value(k) == g.values[slot]);
        let mut idx = rng.random_range(0..d.cardinality() - 1);
        if let Some(cur) = current {
            if idx >= cur {
                idx += 1;
            }
        }
        out.values[slot] = d.value(idx);
        out
    }
}

/// A fixed-length encoded architecture.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Genotype {
    pub scheme: Scheme,
    pub values: Vec<u32>,
}

impl AsRef<[u32]> for Genotype {
    fn as_ref(&self) -> &[u32] {
        &self.values
    }
}

impl fmt::Display for Genotype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl Genotype {
    pub fn new(scheme: Scheme, values: Vec<u32>) -> Self {
        Genotype { scheme, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn lookback(&self) -> u32 {
        *self.values.last().expect("non-empty genotype")
    }

    /// Per-layer neuron counts with disabled layers replaced by zero. The
    /// size scheme's inactive tail is not masked: it never makes a genotype
    /// infeasible.
    pub fn masked_neurons(&self) -> Vec<u32> {
        let body = &self.values[..self.values.len() - 1];
        match self.scheme {
            Scheme::Plain => body.to_vec(),
            Scheme::Flag => body.chunks(2).map(|p| p[0] * p[1]).collect(),
            Scheme::Size => body[..body.len() - 1].to_vec(),
        }
    }

    pub fn decode(&self) -> Result<Architecture, EncodingError> {
        let body = &self.values[..self.values.len() - 1];
        let layers: Vec<u32> = match self.scheme {
            Scheme::Plain => body.iter().copied().filter(|&h| h > 0).collect(),
            Scheme::Flag => body.chunks(2).filter(|p| p[1] == 1).map(|p| p[0]).collect(),
            Scheme::Size => {
                let (neurons, s) = body.split_at(body.len() - 1);
                neurons[..(s[0] as usize).min(neurons.len())].to_vec()
            }
        };
        if layers.is_empty() {
            return Err(EncodingError::EmptyArchitecture);
        }
        Ok(Architecture {
            layers: layers.into_iter().map(|h| h as usize).collect(),
            lookback: self.lookback() as usize,
        })
    }

    /// True iff the masked neuron counts have the form `[h1..hq, 0..0]`
    /// with `q >= 1`. Size genotypes are always feasible.
    pub fn is_feasible(&self) -> bool {
        if self.scheme == Scheme::Size {
            return true;
        }
        let h = self.masked_neurons();
        h.first().is_some_and(|&x| x > 0) && misplaced_zeros(&h) == 0
    }

    /// Constraint penalty: the full length for an already evaluated
    /// genotype, otherwise the number of masked zeros that precede a
    /// nonzero layer. The look-back slot never counts.
    pub fn penalty(&self, evaluated: &HashSet<Genotype>) -> usize {
        if evaluated.contains(self) {
            return self.len();
        }
        if self.scheme == Scheme::Size {
            return 0;
        }
        misplaced_zeros(&self.masked_neurons())
    }
}

fn misplaced_zeros(h: &[u32]) -> usize {
    let last_nonzero = h.iter().rposition(|&x| x != 0);
    match last_nonzero {
        Some(end) => h[..end].iter().filter(|&&x| x == 0).count(),
        None => 0,
    }
}

/// A decoded stacked-LSTM architecture.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Architecture {
    pub layers: Vec<usize>,
    pub lookback: usize,
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let layers: Vec<String> = self.layers.iter().map(|h| h.to_string()).collect();
        write!(f, "[{}] lookback {}", layers.join(","), self.lookback)
    }
}
