//! Alphabets, tree signatures, 2-blocks, basic sets and finite blocks.
//!
//! Symbols are `1..=k`; child positions are `0..d`. A 2-block is a root
//! symbol together with the ordered tuple of its `d` children, and a basic
//! set is the set of allowed 2-blocks of a Markov tree-shift.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Symbol = u32;

/// Number of children per node (`d`) and alphabet size (`k`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Signature {
    d: usize,
    k: usize,
}

impl Signature {
    pub fn new(d: usize, k: usize) -> Result<Self> {
        if d == 0 || k == 0 {
            return Err(Error::InvalidSignature { d, k });
        }
        Ok(Signature { d, k })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn symbols(&self) -> impl Iterator<Item = Symbol> {
        1..=self.k as Symbol
    }

    /// `k^d`, the length of an indicator vector.
    pub fn tuple_count(&self) -> usize {
        self.k.pow(self.d as u32)
    }

    /// `k^(d+1)`, the number of distinct 2-blocks.
    pub fn two_block_count(&self) -> usize {
        self.k.pow(self.d as u32 + 1)
    }

    /// Number of nodes in a block of height `n`.
    pub fn node_count(&self, height: usize) -> usize {
        if self.d == 1 {
            height
        } else {
            (self.d.pow(height as u32) - 1) / (self.d - 1)
        }
    }

    pub fn check_symbol(&self, s: Symbol) -> Result<()> {
        if s == 0 || s as usize > self.k {
            Err(Error::SymbolOutOfRange { symbol: s, k: self.k })
        } else {
            Ok(())
        }
    }

    /// Lexicographic position of a children tuple in `A^d`.
    pub fn tuple_index(&self, children: &[Symbol]) -> usize {
        children.iter().fold(0, |acc, &c| acc * self.k + (c as usize - 1))
    }

    pub fn tuple_at(&self, mut index: usize) -> Vec<Symbol> {
        let mut out = vec![0; self.d];
        for slot in out.iter_mut().rev() {
            *slot = (index % self.k) as Symbol + 1;
            index /= self.k;
        }
        out
    }

    /// Every 2-block in lexicographic order of `(root, c0, .., c(d-1))`.
    pub fn two_blocks(&self) -> impl Iterator<Item = TwoBlock> + '_ {
        (0..self.two_block_count()).map(move |idx| {
            let per_root = self.tuple_count();
            TwoBlock {
                root: (idx / per_root) as Symbol + 1,
                children: self.tuple_at(idx % per_root),
            }
        })
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "d={} k={}", self.d, self.k)
    }
}

/// A height-2 pattern: a root symbol and its ordered children.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TwoBlock {
    pub root: Symbol,
    pub children: Vec<Symbol>,
}

impl TwoBlock {
    pub fn new(root: Symbol, children: impl Into<Vec<Symbol>>) -> Self {
        TwoBlock {
            root,
            children: children.into(),
        }
    }

    fn validate(&self, sig: &Signature) -> Result<()> {
        if self.children.len() != sig.d() {
            return Err(Error::Arity {
                expected: sig.d(),
                found: self.children.len(),
            });
        }
        sig.check_symbol(self.root)?;
        self.children.iter().try_for_each(|&c| sig.check_symbol(c))
    }

    pub fn mentions(&self, s: Symbol) -> bool {
        self.root == s || self.children.contains(&s)
    }
}

impl fmt::Display for TwoBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.root)?;
        for c in &self.children {
            write!(f, ",{c}")?;
        }
        write!(f, ")")
    }
}

/// The allowed 2-blocks of a Markov tree-shift.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BasicSet {
    signature: Signature,
    blocks: BTreeSet<TwoBlock>,
}

impl BasicSet {
    /// Validates and deduplicates `blocks`.
    pub fn new(signature: Signature, blocks: impl IntoIterator<Item = TwoBlock>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for b in blocks {
            b.validate(&signature)?;
            set.insert(b);
        }
        Ok(BasicSet { signature, blocks: set })
    }

    /// Shorthand for tests and examples: `(root, children)` pairs.
    pub fn from_tuples<'a>(signature: Signature, tuples: impl IntoIterator<Item = &'a [Symbol]>) -> Result<Self> {
        let mut blocks = Vec::new();
        for t in tuples {
            let (root, children) = t.split_first().ok_or(Error::Arity {
                expected: signature.d() + 1,
                found: 0,
            })?;
            blocks.push(TwoBlock::new(*root, children.to_vec()));
        }
        BasicSet::new(signature, blocks)
    }

    pub fn empty(signature: Signature) -> Self {
        BasicSet {
            signature,
            blocks: BTreeSet::new(),
        }
    }

    /// All `k^(d+1)` two-blocks.
    pub fn full(signature: Signature) -> Self {
        BasicSet {
            signature,
            blocks: signature.two_blocks().collect(),
        }
    }

    /// Basic set whose members are the set bits of `mask`, bit `i` standing
    /// for the `i`-th 2-block in lexicographic order.
    pub fn from_mask(signature: Signature, mask: u64) -> Result<Self> {
        let n = signature.two_block_count();
        if n > 64 || (n < 64 && mask >> n != 0) {
            return Err(Error::InvalidArgument(format!(
                "mask {mask:#x} does not fit {n} two-blocks"
            )));
        }
        let blocks = signature
            .two_blocks()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, b)| b)
            .collect();
        Ok(BasicSet { signature, blocks })
    }

    pub fn to_mask(&self) -> Option<u64> {
        if self.signature.two_block_count() > 64 {
            return None;
        }
        Some(
            self.blocks
                .iter()
                .map(|b| 1u64 << self.block_index(b))
                .fold(0, |a, b| a | b),
        )
    }

    fn block_index(&self, b: &TwoBlock) -> usize {
        (b.root as usize - 1) * self.signature.tuple_count() + self.signature.tuple_index(&b.children)
    }

    pub fn signature(&self) -> Signature {
        self.signature
    }

    pub fn blocks(&self) -> impl Iterator<Item = &TwoBlock> + '_ {
        self.blocks.iter()
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn contains(&self, b: &TwoBlock) -> bool {
        self.blocks.contains(b)
    }

    pub fn contains_tuple(&self, root: Symbol, children: &[Symbol]) -> bool {
        self.blocks.contains(&TwoBlock::new(root, children.to_vec()))
    }

    pub fn is_subset(&self, other: &BasicSet) -> bool {
        self.blocks.is_subset(&other.blocks)
    }

    /// Blocks rooted at `s`, in canonical order.
    pub fn rooted_at(&self, s: Symbol) -> impl Iterator<Item = &TwoBlock> + '_ {
        self.blocks.iter().filter(move |b| b.root == s)
    }

    /// Membership table indexed by `(root - 1) * k^d + tuple_index(children)`.
    pub fn allowed_table(&self) -> Vec<bool> {
        let mut table = vec![false; self.signature.two_block_count()];
        for b in &self.blocks {
            table[self.block_index(b)] = true;
        }
        table
    }

    /// Symbols that root at least one block.
    pub fn rooting_symbols(&self) -> BTreeSet<Symbol> {
        self.blocks.iter().map(|b| b.root).collect()
    }

    /// The forbidden set `B_2(T) \ B`.
    pub fn forbidden(&self) -> BTreeSet<TwoBlock> {
        self.signature
            .two_blocks()
            .filter(|b| !self.blocks.contains(b))
            .collect()
    }

    /// Repeatedly drops every symbol that roots no block, together with the
    /// blocks mentioning it. Returns the reduced set and the removed symbols
    /// in removal order (round by round, ascending within a round).
    ///
    /// On the result every locally admissible block extends to an infinite
    /// tree, so local block counts are the true counts `|B_n(X)|`.
    pub fn essentialize(&self) -> (BasicSet, Vec<Symbol>) {
        let mut blocks = self.blocks.clone();
        let mut removed: Vec<Symbol> = Vec::new();
        loop {
            let roots: BTreeSet<Symbol> = blocks.iter().map(|b| b.root).collect();
            let dead: Vec<Symbol> = self
                .signature
                .symbols()
                .filter(|s| !roots.contains(s) && !removed.contains(s))
                .collect();
            if dead.is_empty() {
                break;
            }
            blocks.retain(|b| !dead.iter().any(|&s| b.mentions(s)));
            removed.extend(dead);
        }
        (
            BasicSet {
                signature: self.signature,
                blocks,
            },
            removed,
        )
    }

    /// True when essentialization would not drop any block.
    pub fn is_essential(&self) -> bool {
        self.essentialize().0 == *self
    }

    /// Image under a symbol bijection; `perm[s - 1]` is the image of `s`.
    pub fn relabel(&self, perm: &[Symbol]) -> Result<BasicSet> {
        let k = self.signature.k();
        if perm.len() != k {
            return Err(Error::NotBijection(format!("expected {k} images, got {}", perm.len())));
        }
        let mut seen = vec![false; k];
        for &p in perm {
            self.signature.check_symbol(p)?;
            if std::mem::replace(&mut seen[p as usize - 1], true) {
                return Err(Error::NotBijection(format!("symbol {p} repeated")));
            }
        }
        let map = |s: Symbol| perm[s as usize - 1];
        Ok(BasicSet {
            signature: self.signature,
            blocks: self
                .blocks
                .iter()
                .map(|b| TwoBlock::new(map(b.root), b.children.iter().map(|&c| map(c)).collect::<Vec<_>>()))
                .collect(),
        })
    }

    /// Permutes child positions: the child at position `j` moves to `perm[j]`.
    pub fn swap_children(&self, perm: &[usize]) -> Result<BasicSet> {
        let d = self.signature.d();
        if perm.len() != d {
            return Err(Error::NotBijection(format!(
                "expected {d} positions, got {}",
                perm.len()
            )));
        }
        let mut seen = vec![false; d];
        for &p in perm {
            if p >= d || std::mem::replace(&mut seen[p], true) {
                return Err(Error::NotBijection(format!("position {p} invalid or repeated")));
            }
        }
        Ok(BasicSet {
            signature: self.signature,
            blocks: self
                .blocks
                .iter()
                .map(|b| {
                    let mut children = vec![0; d];
                    for (j, &c) in b.children.iter().enumerate() {
                        children[perm[j]] = c;
                    }
                    TwoBlock::new(b.root, children)
                })
                .collect(),
        })
    }

    /// Serializes to the line-oriented basic-set format.
    pub fn to_text(&self) -> String {
        let mut out = format!("signature: {}\n", self.signature);
        for b in &self.blocks {
            out.push_str(&format!("block: {} ->", b.root));
            for c in &b.children {
                out.push_str(&format!(" {c}"));
            }
            out.push('\n');
        }
        out
    }

    /// Parses the basic-set format:
    ///
    /// ```text
    /// # comment
    /// signature: d=2 k=2
    /// block: 1 -> 1 1
    /// block: 1 -> 2 2
    /// ```
    pub fn parse(text: &str) -> Result<BasicSet> {
        let mut signature: Option<Signature> = None;
        let mut blocks = BTreeSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let err = |message: String| Error::Parse { line: line_no, message };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, rest) = line
                .split_once(':')
                .ok_or_else(|| err(format!("expected `key: value`, found `{line}`")))?;
            match (key.trim(), signature) {
                ("signature", None) => {
                    let mut d = None;
                    let mut k = None;
                    for part in rest.split_whitespace() {
                        let (name, value) = part
                            .split_once('=')
                            .ok_or_else(|| err(format!("malformed signature field `{part}`")))?;
                        let value: usize = value.parse().map_err(|_| err(format!("not an integer: `{value}`")))?;
                        match name {
                            "d" => d = Some(value),
                            "k" => k = Some(value),
                            other => return Err(err(format!("unknown signature field `{other}`"))),
                        }
                    }
                    let (d, k) = d.zip(k).ok_or_else(|| err("signature needs both d and k".into()))?;
                    signature = Some(Signature::new(d, k).map_err(|e| err(e.to_string()))?);
                }
                ("signature", Some(_)) => return Err(err("duplicate signature line".into())),
                ("block", None) => return Err(err("block before signature line".into())),
                ("block", Some(sig)) => {
                    let (root, children) = rest
                        .split_once("->")
                        .ok_or_else(|| err("expected `block: <root> -> <children>`".into()))?;
                    let parse_sym = |s: &str| s.parse::<Symbol>().map_err(|_| err(format!("not a symbol: `{s}`")));
                    let block = TwoBlock::new(
                        parse_sym(root.trim())?,
                        children.split_whitespace().map(parse_sym).collect::<Result<Vec<_>>>()?,
                    );
                    block.validate(&sig).map_err(|e| err(e.to_string()))?;
                    blocks.insert(block);
                }
                (other, _) => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        let signature = signature.ok_or(Error::Parse {
            line: 0,
            message: "missing signature line".into(),
        })?;
        Ok(BasicSet { signature, blocks })
    }
}

impl fmt::Display for BasicSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, b) in self.blocks.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{b}")?;
        }
        write!(f, "}}")
    }
}

/// A labeling of the complete `d`-ary tree of the given height, stored in
/// breadth-first order. Node `p` has children `d*p + 1 ..= d*p + d`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Block {
    signature: Signature,
    height: usize,
    labels: Vec<Symbol>,
}

impl Block {
    pub fn new(signature: Signature, height: usize, labels: Vec<Symbol>) -> Result<Self> {
        if height == 0 {
            return Err(Error::InvalidArgument("block height must be at least 1".into()));
        }
        let expected = signature.node_count(height);
        if labels.len() != expected {
            return Err(Error::LengthMismatch(labels.len(), expected));
        }
        labels.iter().try_for_each(|&s| signature.check_symbol(s))?;
        Ok(Block {
            signature,
            height,
            labels,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[Symbol] {
        &self.labels
    }

    pub fn root(&self) -> Symbol {
        self.labels[0]
    }

    /// True when every internal node's 2-block lies in `basic_set`.
    pub fn is_admissible(&self, basic_set: &BasicSet) -> bool {
        let d = self.signature.d();
        let internal = self.signature.node_count(self.height - 1);
        (0..internal).all(|p| basic_set.contains_tuple(self.labels[p], &self.labels[d * p + 1..d * p + d + 1]))
    }

    pub fn parse(signature: Signature, text: &str) -> Result<Block> {
        let err = |message: String| Error::Parse { line: 1, message };
        let mut height = None;
        let mut labels = None;
        for part in text.split(';') {
            let (key, value) = part
                .trim()
                .split_once('=')
                .ok_or_else(|| err(format!("malformed field `{}`", part.trim())))?;
            match key.trim() {
                "height" => {
                    height = Some(
                        value
                            .trim()
                            .parse::<usize>()
                            .map_err(|_| err(format!("bad height `{value}`")))?,
                    )
                }
                "labels" => {
                    labels = Some(
                        value
                            .split_whitespace()
                            .map(|s| s.parse::<Symbol>().map_err(|_| err(format!("bad label `{s}`"))))
                            .collect::<Result<Vec<_>>>()?,
                    )
                }
                other => return Err(err(format!("unknown field `{other}`"))),
            }
        }
        let height = height.ok_or_else(|| err("missing height".into()))?;
        let labels = labels.ok_or_else(|| err("missing labels".into()))?;
        Block::new(signature, height, labels)
    }
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "height={}; labels=", self.height)?;
        for (i, s) in self.labels.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}
