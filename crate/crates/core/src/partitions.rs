//! Set, non-crossing and interval partitions of `{1..n}`.
//!
//! Partitions are canonical: blocks are sorted, blocks are ordered by their
//! smallest element, and enumeration follows the lexicographic order of the
//! restricted-growth string (RGS). The RGS of `{{1,3},{2,4}}` is `0,1,0,1`.

use std::fmt;

use crate::{Error, Result};

pub const MAX_SET_PARTITION_N: usize = 12;
pub const MAX_NONCROSSING_N: usize = 14;
pub const MAX_INTERVAL_N: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    /// Builds a partition from arbitrary blocks of 1-based elements and
    /// brings it into canonical form.
    pub fn from_blocks(n: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Shape("partition of an empty set".into()));
        }
        let mut seen = vec![false; n];
        let mut blocks = blocks;
        for block in &mut blocks {
            if block.is_empty() {
                return Err(Error::Shape("empty block".into()));
            }
            block.sort_unstable();
            for &x in block.iter() {
                if x == 0 || x > n {
                    return Err(Error::Shape(format!("element {x} outside 1..={n}")));
                }
                if std::mem::replace(&mut seen[x - 1], true) {
                    return Err(Error::Shape(format!("element {x} appears twice")));
                }
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::Shape(format!("element {} not covered", missing + 1)));
        }
        blocks.sort_unstable_by_key(|b| b[0]);
        Ok(Self { n, blocks })
    }

    /// Builds a partition from a restricted-growth string.
    pub fn from_rgs(rgs: &[usize]) -> Result<Self> {
        if rgs.is_empty() {
            return Err(Error::Shape("empty restricted-growth string".into()));
        }
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for (i, &label) in rgs.iter().enumerate() {
            match label.cmp(&blocks.len()) {
                std::cmp::Ordering::Less => blocks[label].push(i + 1),
                std::cmp::Ordering::Equal => blocks.push(vec![i + 1]),
                std::cmp::Ordering::Greater => {
                    return Err(Error::Shape(format!(
                        "restricted-growth string jumps to {label} at position {i}"
                    )))
                }
            }
        }
        Ok(Self {
            n: rgs.len(),
            blocks,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_sizes(&self) -> impl Iterator<Item = usize> + '_ {
        self.blocks.iter().map(Vec::len)
    }

    /// Restricted-growth string: entry `i` is the index of the block holding `i + 1`.
    pub fn rgs(&self) -> Vec<usize> {
        let mut out = vec![0; self.n];
        for (label, block) in self.blocks.iter().enumerate() {
            for &x in block {
                out[x - 1] = label;
            }
        }
        out
    }

    pub fn is_noncrossing(&self) -> bool {
        is_noncrossing(self)
    }

    /// True when every block is a run of consecutive integers.
    pub fn is_interval(&self) -> bool {
        self.blocks
            .iter()
            .all(|b| b.windows(2).all(|w| w[1] == w[0] + 1))
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rgs = self.rgs();
        for (i, label) in rgs.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{label}")?;
        }
        Ok(())
    }
}

fn check_size(n: usize, limit: usize, what: &'static str) -> Result<()> {
    if n == 0 {
        return Err(Error::Shape(format!("{what} must be at least 1")));
    }
    if n > limit {
        return Err(Error::SizeLimit {
            what,
            got: n,
            limit,
        });
    }
    Ok(())
}

/// Every partition of `{1..n}`, in RGS order.
pub fn enumerate_set_partitions(n: usize) -> Result<Vec<Partition>> {
    check_size(n, MAX_SET_PARTITION_N, "set partition size")?;
    let mut out = Vec::new();
    let mut rgs = Vec::with_capacity(n);
    extend_rgs(n, &mut rgs, 0, &mut |_, _| true, &mut out);
    Ok(out)
}

/// Every non-crossing partition of `{1..n}`, in RGS order.
pub fn enumerate_noncrossing_partitions(n: usize) -> Result<Vec<Partition>> {
    check_size(n, MAX_NONCROSSING_N, "non-crossing partition size")?;
    let mut out = Vec::new();
    let mut rgs = Vec::with_capacity(n);
    extend_rgs(n, &mut rgs, 0, &mut joins_without_crossing, &mut out);
    Ok(out)
}

/// Every partition of `{1..n}` into intervals, in RGS order.
pub fn enumerate_interval_partitions(n: usize) -> Result<Vec<Partition>> {
    check_size(n, MAX_INTERVAL_N, "interval partition size")?;
    let mut out = Vec::new();
    let mut rgs = Vec::with_capacity(n);
    // An interval partition can only append to the most recent block.
    extend_rgs(
        n,
        &mut rgs,
        0,
        &mut |rgs: &[usize], label| rgs.last().is_none_or(|&l| l == label),
        &mut out,
    );
    Ok(out)
}

/// Depth-first RGS generation. `allow(prefix, label)` decides whether the
/// next element may join the existing block `label`; opening a new block is
/// always allowed since a fresh singleton at the end cannot cross anything.
fn extend_rgs(
    n: usize,
    rgs: &mut Vec<usize>,
    num_blocks: usize,
    allow: &mut dyn FnMut(&[usize], usize) -> bool,
    out: &mut Vec<Partition>,
) {
    if rgs.len() == n {
        out.push(Partition::from_rgs(rgs).expect("generated RGS is valid"));
        return;
    }
    for label in 0..=num_blocks {
        if label < num_blocks && !allow(rgs, label) {
            continue;
        }
        rgs.push(label);
        extend_rgs(n, rgs, num_blocks.max(label + 1), allow, out);
        rgs.pop();
    }
}

/// Can the next element join block `label` of the non-crossing prefix?
///
/// With `l` the last element of that block, the new element crosses iff some
/// element strictly after `l` lies in a block that also has an element
/// before `l`.
fn joins_without_crossing(rgs: &[usize], label: usize) -> bool {
    let last = rgs.iter().rposition(|&x| x == label).expect("block exists");
    rgs[last + 1..].iter().all(|&other| {
        let first = rgs.iter().position(|&x| x == other).expect("block exists");
        first > last
    })
}

/// True iff there is no `a < b < c < d` with `a, c` in one block and `b, d`
/// in another.
pub fn is_noncrossing(p: &Partition) -> bool {
    // Scan left to right keeping a stack of open blocks; an element must
    // belong to the innermost open block, a new block, or close blocks above it.
    let rgs = p.rgs();
    let mut last_of = vec![0usize; p.num_blocks()];
    for (i, &label) in rgs.iter().enumerate() {
        last_of[label] = i;
    }
    let mut stack: Vec<usize> = Vec::new();
    let mut opened = vec![false; p.num_blocks()];
    for (i, &label) in rgs.iter().enumerate() {
        if opened[label] {
            if stack.last() != Some(&label) {
                return false;
            }
        } else {
            opened[label] = true;
            stack.push(label);
        }
        if last_of[label] == i {
            stack.pop();
        }
    }
    true
}
