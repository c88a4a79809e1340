//! Joint moments of independent families of noncommuting variables.
//!
//! A [`Word`] is a noncommutative monomial whose letters name a family and a
//! generator inside that family. Given the marginal law of every family,
//! joint moments are determined by tensor independence (families commute and
//! expectations factorize) or by freeness (alternating products of centered
//! elements have zero expectation).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::fock::{vacuum_expectation, FockOperator};
use crate::{Error, Result, C64};

pub const DEFAULT_WORD_CAP: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Letter {
    pub family: usize,
    pub generator: usize,
}

impl Letter {
    pub fn new(family: usize, generator: usize) -> Self {
        Self { family, generator }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Word(pub Vec<Letter>);

impl Word {
    pub fn new(letters: Vec<Letter>) -> Self {
        Self(letters)
    }

    /// Word over single-generator families, e.g. `[1, 2, 1, 2]` for `x1 x2 x1 x2`.
    pub fn from_families(families: &[usize]) -> Self {
        Self(families.iter().map(|&f| Letter::new(f, 0)).collect())
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Moments of one family: generator words mapped to values, `1` at the
/// empty word.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalLaw {
    family: usize,
    moments: HashMap<Vec<usize>, C64>,
}

impl MarginalLaw {
    pub fn new(family: usize) -> Self {
        let mut moments = HashMap::new();
        moments.insert(Vec::new(), C64::new(1.0, 0.0));
        Self { family, moments }
    }

    /// Law of a single generator (index 0) with moments `m_1, m_2, ...`.
    pub fn single_variable(family: usize, moments: &[C64]) -> Self {
        let mut law = Self::new(family);
        for (k, &m) in moments.iter().enumerate() {
            law.moments.insert(vec![0; k + 1], m);
        }
        law
    }

    pub fn family(&self) -> usize {
        self.family
    }

    /// Same moments under another family index.
    pub fn relabeled(&self, family: usize) -> Self {
        Self {
            family,
            moments: self.moments.clone(),
        }
    }

    pub fn insert(&mut self, word: Vec<usize>, value: C64) -> Result<()> {
        if word.is_empty() && value != C64::new(1.0, 0.0) {
            return Err(Error::Precondition(format!(
                "family {}: the empty word must have moment 1",
                self.family
            )));
        }
        self.moments.insert(word, value);
        Ok(())
    }

    pub fn get(&self, word: &[usize]) -> Result<C64> {
        self.moments
            .get(word)
            .copied()
            .ok_or_else(|| Error::MissingMoment {
                family: self.family,
                word: word.to_vec(),
            })
    }

    /// Multiplies generator `generator` by `c`, i.e. every moment by
    /// `c^(number of occurrences)`.
    pub fn scaled(&self, generator: usize, c: C64) -> Self {
        let moments = self
            .moments
            .iter()
            .map(|(w, &v)| {
                let count = w.iter().filter(|&&g| g == generator).count();
                (w.clone(), v * c.powu(count as u32))
            })
            .collect();
        Self {
            family: self.family,
            moments,
        }
    }

    /// The law of operators `ops` (one per generator) under the vacuum
    /// state, tabulated for every generator word of length `<= max_len`.
    pub fn of_operators(family: usize, ops: &[FockOperator], max_len: usize) -> Result<Self> {
        let mut law = Self::new(family);
        let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];
        for _ in 0..max_len {
            let mut next = Vec::with_capacity(frontier.len() * ops.len());
            for w in &frontier {
                for g in 0..ops.len() {
                    let mut longer = w.clone();
                    longer.push(g);
                    let word_ops: Vec<&FockOperator> = longer.iter().map(|&i| &ops[i]).collect();
                    law.moments.insert(longer.clone(), vacuum_expectation(&word_ops)?);
                    next.push(longer);
                }
            }
            frontier = next;
        }
        Ok(law)
    }
}

fn find_law(laws: &[MarginalLaw], family: usize) -> Result<&MarginalLaw> {
    laws.iter()
        .find(|l| l.family == family)
        .ok_or(Error::MissingLaw(family))
}

fn check_word(w: &Word, laws: &[MarginalLaw], cap: usize) -> Result<()> {
    if w.len() > cap {
        return Err(Error::SizeLimit {
            what: "word length",
            got: w.len(),
            limit: cap,
        });
    }
    for l in w.letters() {
        find_law(laws, l.family)?;
    }
    Ok(())
}

pub fn tensor_mixed_moment(w: &Word, laws: &[MarginalLaw]) -> Result<C64> {
    tensor_mixed_moment_with_cap(w, laws, DEFAULT_WORD_CAP)
}

/// Tensor independent families commute, so each family's letters can be
/// gathered (keeping their relative order) and expectations factorize.
pub fn tensor_mixed_moment_with_cap(w: &Word, laws: &[MarginalLaw], cap: usize) -> Result<C64> {
    check_word(w, laws, cap)?;
    let mut letters = w.0.clone();
    letters.sort_by_key(|l| l.family);
    let mut value = C64::new(1.0, 0.0);
    for group in letters.chunk_by(|a, b| a.family == b.family) {
        let law = find_law(laws, group[0].family)?;
        let gens: Vec<usize> = group.iter().map(|l| l.generator).collect();
        value *= law.get(&gens)?;
    }
    Ok(value)
}

pub fn free_mixed_moment(w: &Word, laws: &[MarginalLaw]) -> Result<C64> {
    free_mixed_moment_with_cap(w, laws, DEFAULT_WORD_CAP)
}

/// Free joint moment by the centering recursion.
///
/// The word is split into maximal single-family blocks `W_1 ... W_r`. Since
/// `phi((W_1 - phi(W_1)) ... (W_r - phi(W_r))) = 0` for alternating blocks,
/// expanding the product expresses `phi(W_1 ... W_r)` through words with
/// fewer blocks.
pub fn free_mixed_moment_with_cap(w: &Word, laws: &[MarginalLaw], cap: usize) -> Result<C64> {
    check_word(w, laws, cap)?;
    let mut eval = FreeEvaluator {
        laws,
        memo: HashMap::new(),
        max_depth: w.len() + 2,
    };
    eval.moment(&w.0, 0)
}

struct FreeEvaluator<'a> {
    laws: &'a [MarginalLaw],
    memo: HashMap<Vec<Letter>, C64>,
    max_depth: usize,
}

impl FreeEvaluator<'_> {
    fn marginal(&self, block: &[Letter]) -> Result<C64> {
        let law = find_law(self.laws, block[0].family)?;
        let gens: Vec<usize> = block.iter().map(|l| l.generator).collect();
        law.get(&gens)
    }

    fn moment(&mut self, letters: &[Letter], depth: usize) -> Result<C64> {
        if depth > self.max_depth {
            return Err(Error::RecursionDepth(self.max_depth));
        }
        let blocks: Vec<&[Letter]> = letters.chunk_by(|a, b| a.family == b.family).collect();
        match blocks.len() {
            0 => return Ok(C64::new(1.0, 0.0)),
            1 => return self.marginal(blocks[0]),
            _ => {}
        }
        if let Some(&v) = self.memo.get(letters) {
            return Ok(v);
        }
        let means = blocks
            .iter()
            .map(|b| self.marginal(b))
            .collect::<Result<Vec<_>>>()?;
        let r = blocks.len();
        let full = (1u32 << r) - 1;
        let mut total = C64::default();
        for kept in 0..full {
            let mut coef = C64::new(1.0, 0.0);
            let mut sub = Vec::with_capacity(letters.len());
            for (i, block) in blocks.iter().enumerate() {
                if kept & (1 << i) != 0 {
                    sub.extend_from_slice(block);
                } else {
                    coef *= -means[i];
                }
            }
            if coef == C64::default() {
                continue;
            }
            total += coef * self.moment(&sub, depth + 1)?;
        }
        let value = -total;
        self.memo.insert(letters.to_vec(), value);
        Ok(value)
    }
}

/// `Var_1 * Var_2` for the first generators of two families. Nonzero means
/// the two variables cannot be both free and commuting.
pub fn freeness_degeneracy_check(law1: &MarginalLaw, law2: &MarginalLaw) -> Result<C64> {
    let variance = |law: &MarginalLaw| -> Result<C64> {
        let insufficient = |_| {
            Error::InsufficientOrder(format!(
                "family {} needs moments of order 1 and 2",
                law.family
            ))
        };
        let m1 = law.get(&[0]).map_err(insufficient)?;
        let m2 = law.get(&[0, 0]).map_err(insufficient)?;
        Ok(m2 - m1 * m1)
    };
    Ok(variance(law1)? * variance(law2)?)
}
