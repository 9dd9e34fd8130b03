//! Word arithmetic for right LCM monoids assembled from free abelian
//! monoids `NA(k)` and free monoids `F(k)` by Cartesian (`X`) and free (`*`)
//! products.
//!
//! Every supported monoid is graded by word length and has trivial group of
//! units, so every element has a unique normal form and the identity is the
//! only element of degree zero.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Recursive descriptor of a monoid.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum MonoidSpec {
    /// The trivial monoid `{e}`, written `1`.
    Trivial,
    FreeAbelian(usize),
    Free(usize),
    Cartesian(Box<MonoidSpec>, Box<MonoidSpec>),
    FreeProduct(Box<MonoidSpec>, Box<MonoidSpec>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

/// Normal form of a monoid element. The variant mirrors the shape of the
/// owning [`MonoidSpec`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Element {
    Unit,
    Exponents(Vec<u32>),
    Letters(Vec<u32>),
    Pair(Box<Element>, Box<Element>),
    /// Alternating non-identity syllables of a free product.
    Syllables(Vec<(Side, Element)>),
}

impl MonoidSpec {
    pub fn cartesian(a: MonoidSpec, b: MonoidSpec) -> Self {
        MonoidSpec::Cartesian(Box::new(a), Box::new(b))
    }

    pub fn free_product(a: MonoidSpec, b: MonoidSpec) -> Self {
        MonoidSpec::FreeProduct(Box::new(a), Box::new(b))
    }

    /// Number of generators.
    pub fn rank(&self) -> usize {
        match self {
            MonoidSpec::Trivial => 0,
            MonoidSpec::FreeAbelian(k) | MonoidSpec::Free(k) => *k,
            MonoidSpec::Cartesian(a, b) | MonoidSpec::FreeProduct(a, b) => a.rank() + b.rank(),
        }
    }

    pub fn identity(&self) -> Element {
        match self {
            MonoidSpec::Trivial => Element::Unit,
            MonoidSpec::FreeAbelian(k) => Element::Exponents(vec![0; *k]),
            MonoidSpec::Free(_) => Element::Letters(Vec::new()),
            MonoidSpec::Cartesian(a, b) => {
                Element::Pair(Box::new(a.identity()), Box::new(b.identity()))
            }
            MonoidSpec::FreeProduct(..) => Element::Syllables(Vec::new()),
        }
    }

    /// The `i`-th canonical generator (depth-first, left to right).
    ///
    /// Panics if `i >= self.rank()`.
    pub fn generator(&self, i: usize) -> Element {
        assert!(i < self.rank(), "generator index {i} out of range");
        match self {
            MonoidSpec::Trivial => unreachable!(),
            MonoidSpec::FreeAbelian(k) => {
                let mut e = vec![0; *k];
                e[i] = 1;
                Element::Exponents(e)
            }
            MonoidSpec::Free(_) => Element::Letters(vec![i as u32]),
            MonoidSpec::Cartesian(a, b) => {
                if i < a.rank() {
                    Element::Pair(Box::new(a.generator(i)), Box::new(b.identity()))
                } else {
                    Element::Pair(Box::new(a.identity()), Box::new(b.generator(i - a.rank())))
                }
            }
            MonoidSpec::FreeProduct(a, b) => {
                if i < a.rank() {
                    Element::Syllables(vec![(Side::Left, a.generator(i))])
                } else {
                    Element::Syllables(vec![(Side::Right, b.generator(i - a.rank()))])
                }
            }
        }
    }

    pub fn generators(&self) -> Vec<Element> {
        (0..self.rank()).map(|i| self.generator(i)).collect()
    }

    /// Canonical label of generator `i`: `a`, `b`, `c`, `d`, `f`, ... (the
    /// letter `e` is reserved for the identity), or `g{i}` past 25 generators.
    pub fn label(&self, i: usize) -> String {
        if self.rank() <= 25 {
            const LETTERS: &[u8] = b"abcdfghijklmnopqrstuvwxyz";
            (LETTERS[i] as char).to_string()
        } else {
            format!("g{i}")
        }
    }

    pub fn contains(&self, x: &Element) -> bool {
        match (self, x) {
            (MonoidSpec::Trivial, Element::Unit) => true,
            (MonoidSpec::FreeAbelian(k), Element::Exponents(e)) => e.len() == *k,
            (MonoidSpec::Free(k), Element::Letters(w)) => w.iter().all(|&c| (c as usize) < *k),
            (MonoidSpec::Cartesian(a, b), Element::Pair(x, y)) => a.contains(x) && b.contains(y),
            (MonoidSpec::FreeProduct(a, b), Element::Syllables(s)) => {
                s.windows(2).all(|w| w[0].0 != w[1].0)
                    && s.iter().all(|(side, y)| {
                        let f = if *side == Side::Left { a } else { b };
                        f.contains(y) && !f.is_identity(y)
                    })
            }
            _ => false,
        }
    }

    fn check(&self, x: &Element) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::SpecMismatch {
                spec: self.to_string(),
                element: format!("{x:?}"),
            })
        }
    }

    pub fn is_identity(&self, x: &Element) -> bool {
        self.degree(x) == 0
    }

    pub fn degree(&self, x: &Element) -> usize {
        match x {
            Element::Unit => 0,
            Element::Exponents(e) => e.iter().map(|&v| v as usize).sum(),
            Element::Letters(w) => w.len(),
            Element::Pair(x, y) => match self {
                MonoidSpec::Cartesian(a, b) => a.degree(x) + b.degree(y),
                _ => 0,
            },
            Element::Syllables(s) => match self {
                MonoidSpec::FreeProduct(a, b) => s
                    .iter()
                    .map(|(side, y)| if *side == Side::Left { a.degree(y) } else { b.degree(y) })
                    .sum(),
                _ => 0,
            },
        }
    }

    /// Normal form as a sequence of global generator indices.
    pub fn word(&self, x: &Element) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.degree(x));
        self.push_word(x, 0, &mut out);
        out
    }

    fn push_word(&self, x: &Element, offset: usize, out: &mut Vec<usize>) {
        match (self, x) {
            (MonoidSpec::FreeAbelian(_), Element::Exponents(e)) => {
                for (i, &n) in e.iter().enumerate() {
                    out.extend(std::iter::repeat(offset + i).take(n as usize));
                }
            }
            (MonoidSpec::Free(_), Element::Letters(w)) => {
                out.extend(w.iter().map(|&c| offset + c as usize));
            }
            (MonoidSpec::Cartesian(a, b), Element::Pair(x, y)) => {
                a.push_word(x, offset, out);
                b.push_word(y, offset + a.rank(), out);
            }
            (MonoidSpec::FreeProduct(a, b), Element::Syllables(s)) => {
                for (side, y) in s {
                    match side {
                        Side::Left => a.push_word(y, offset, out),
                        Side::Right => b.push_word(y, offset + a.rank(), out),
                    }
                }
            }
            _ => {}
        }
    }

    pub fn from_word(&self, word: &[usize]) -> Result<Element> {
        let mut acc = self.identity();
        for &g in word {
            if g >= self.rank() {
                return Err(Error::Structure(format!(
                    "generator index {g} out of range for {self}"
                )));
            }
            acc = self.mul_unchecked(&acc, &self.generator(g));
        }
        Ok(acc)
    }

    /// Ball ordering: degree first, then lexicographic on the normal-form word.
    pub fn cmp_elements(&self, x: &Element, y: &Element) -> Ordering {
        self.degree(x)
            .cmp(&self.degree(y))
            .then_with(|| self.word(x).cmp(&self.word(y)))
    }

    pub fn multiply(&self, a: &Element, b: &Element) -> Result<Element> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.mul_unchecked(a, b))
    }

    fn mul_unchecked(&self, a: &Element, b: &Element) -> Element {
        match (self, a, b) {
            (MonoidSpec::Trivial, _, _) => Element::Unit,
            (MonoidSpec::FreeAbelian(_), Element::Exponents(x), Element::Exponents(y)) => {
                Element::Exponents(x.iter().zip(y).map(|(p, q)| p + q).collect())
            }
            (MonoidSpec::Free(_), Element::Letters(x), Element::Letters(y)) => {
                Element::Letters(x.iter().chain(y).copied().collect())
            }
            (MonoidSpec::Cartesian(f, g), Element::Pair(x1, y1), Element::Pair(x2, y2)) => {
                Element::Pair(
                    Box::new(f.mul_unchecked(x1, x2)),
                    Box::new(g.mul_unchecked(y1, y2)),
                )
            }
            (MonoidSpec::FreeProduct(f, g), Element::Syllables(x), Element::Syllables(y)) => {
                let mut out = x.clone();
                let mut rest = y.iter();
                if let (Some((ls, lx)), Some((rs, rx))) = (x.last(), y.first()) {
                    if ls == rs {
                        let factor = if *ls == Side::Left { f } else { g };
                        let merged = factor.mul_unchecked(lx, rx);
                        out.pop();
                        out.push((*ls, merged));
                        rest.next();
                    }
                }
                out.extend(rest.cloned());
                Element::Syllables(out)
            }
            _ => unreachable!("shape checked by caller"),
        }
    }

    /// The unique `s` with `p * s = r`, if `p` left-divides `r`.
    pub fn left_divide(&self, p: &Element, r: &Element) -> Result<Option<Element>> {
        self.check(p)?;
        self.check(r)?;
        Ok(self.div_unchecked(p, r))
    }

    fn div_unchecked(&self, p: &Element, r: &Element) -> Option<Element> {
        match (self, p, r) {
            (MonoidSpec::Trivial, _, _) => Some(Element::Unit),
            (MonoidSpec::FreeAbelian(_), Element::Exponents(x), Element::Exponents(y)) => x
                .iter()
                .zip(y)
                .map(|(a, b)| b.checked_sub(*a))
                .collect::<Option<Vec<_>>>()
                .map(Element::Exponents),
            (MonoidSpec::Free(_), Element::Letters(x), Element::Letters(y)) => {
                y.strip_prefix(x.as_slice()).map(|s| Element::Letters(s.to_vec()))
            }
            (MonoidSpec::Cartesian(f, g), Element::Pair(x1, y1), Element::Pair(x2, y2)) => {
                let a = f.div_unchecked(x1, x2)?;
                let b = g.div_unchecked(y1, y2)?;
                Some(Element::Pair(Box::new(a), Box::new(b)))
            }
            (MonoidSpec::FreeProduct(f, g), Element::Syllables(x), Element::Syllables(y)) => {
                let k = x.len();
                if k == 0 {
                    return Some(r.clone());
                }
                if y.len() < k || x[..k - 1] != y[..k - 1] {
                    return None;
                }
                let (side, last) = &x[k - 1];
                let (tside, target) = &y[k - 1];
                if side != tside {
                    return None;
                }
                let factor = if *side == Side::Left { f } else { g };
                let q = factor.div_unchecked(last, target)?;
                let mut out = Vec::new();
                if !factor.is_identity(&q) {
                    out.push((*side, q));
                }
                out.extend(y[k..].iter().cloned());
                Some(Element::Syllables(out))
            }
            _ => None,
        }
    }

    /// Right LCM: the `r` with `pP ∩ qP = rP`, or `None` when the
    /// intersection is empty.
    pub fn right_lcm(&self, p: &Element, q: &Element) -> Result<Option<Element>> {
        self.check(p)?;
        self.check(q)?;
        Ok(self.lcm_unchecked(p, q))
    }

    fn lcm_unchecked(&self, p: &Element, q: &Element) -> Option<Element> {
        match (self, p, q) {
            (MonoidSpec::Trivial, _, _) => Some(Element::Unit),
            (MonoidSpec::FreeAbelian(_), Element::Exponents(x), Element::Exponents(y)) => Some(
                Element::Exponents(x.iter().zip(y).map(|(a, b)| *a.max(b)).collect()),
            ),
            (MonoidSpec::Free(_), Element::Letters(x), Element::Letters(y)) => {
                let (short, long) = if x.len() <= y.len() { (x, y) } else { (y, x) };
                long.starts_with(short).then(|| Element::Letters(long.clone()))
            }
            (MonoidSpec::Cartesian(f, g), Element::Pair(x1, y1), Element::Pair(x2, y2)) => {
                let a = f.lcm_unchecked(x1, x2)?;
                let b = g.lcm_unchecked(y1, y2)?;
                Some(Element::Pair(Box::new(a), Box::new(b)))
            }
            (MonoidSpec::FreeProduct(f, g), Element::Syllables(x), Element::Syllables(y)) => {
                let (short, long, long_el) = if x.len() <= y.len() { (x, y, q) } else { (y, x, p) };
                let k = short.len();
                if k == 0 {
                    return Some(long_el.clone());
                }
                if short[..k - 1] != long[..k - 1] {
                    return None;
                }
                let (side, s) = &short[k - 1];
                let (lside, t) = &long[k - 1];
                if side != lside {
                    return None;
                }
                let factor = if *side == Side::Left { f } else { g };
                if long.len() > k {
                    // the longer word fixes syllable k exactly
                    factor.div_unchecked(s, t).map(|_| long_el.clone())
                } else {
                    let c = factor.lcm_unchecked(s, t)?;
                    let mut out = long[..k - 1].to_vec();
                    out.push((*side, c));
                    Some(Element::Syllables(out))
                }
            }
            _ => None,
        }
    }

    /// `∨U` for a finite nonempty set.
    pub fn lcm_of_set(&self, set: &[Element]) -> Result<Option<Element>> {
        let (first, rest) = set.split_first().ok_or(Error::EmptySet)?;
        self.check(first)?;
        let mut acc = first.clone();
        for x in rest {
            self.check(x)?;
            match self.lcm_unchecked(&acc, x) {
                Some(r) => acc = r,
                None => return Ok(None),
            }
        }
        Ok(Some(acc))
    }

    /// All elements of degree at most `radius`, sorted by [`cmp_elements`](Self::cmp_elements).
    pub fn ball(&self, radius: usize) -> Vec<Element> {
        let gens = self.generators();
        let mut out = vec![self.identity()];
        let mut layer = vec![self.identity()];
        for _ in 0..radius {
            let mut seen = HashSet::new();
            let mut next = Vec::new();
            for x in &layer {
                for g in &gens {
                    let y = self.mul_unchecked(x, g);
                    if seen.insert(self.word(&y)) {
                        next.push(y);
                    }
                }
            }
            next.sort_by(|a, b| self.cmp_elements(a, b));
            out.extend(next.iter().cloned());
            layer = next;
        }
        out
    }

    /// Unordered generator pairs `(i, j)`, `i < j`, that must commute.
    pub fn commuting_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        self.push_commuting(0, &mut out);
        out.sort_unstable();
        out
    }

    fn push_commuting(&self, offset: usize, out: &mut Vec<(usize, usize)>) {
        match self {
            MonoidSpec::FreeAbelian(k) => {
                for i in 0..*k {
                    for j in i + 1..*k {
                        out.push((offset + i, offset + j));
                    }
                }
            }
            MonoidSpec::Cartesian(a, b) => {
                a.push_commuting(offset, out);
                b.push_commuting(offset + a.rank(), out);
                for i in 0..a.rank() {
                    for j in 0..b.rank() {
                        out.push((offset + i, offset + a.rank() + j));
                    }
                }
            }
            MonoidSpec::FreeProduct(a, b) => {
                a.push_commuting(offset, out);
                b.push_commuting(offset + a.rank(), out);
            }
            MonoidSpec::Trivial | MonoidSpec::Free(_) => {}
        }
    }

    /// Renders an element with canonical generator labels; identity is `e`.
    pub fn format_element(&self, x: &Element) -> String {
        let w = self.word(x);
        if w.is_empty() {
            return "e".into();
        }
        let sep = if self.rank() > 25 { "." } else { "" };
        w.iter().map(|&g| self.label(g)).collect::<Vec<_>>().join(sep)
    }

    /// Inverse of [`format_element`](Self::format_element).
    pub fn parse_element(&self, s: &str) -> Result<Element> {
        let s = s.trim();
        if s == "e" || s.is_empty() {
            return Ok(self.identity());
        }
        let labels: Vec<String> = (0..self.rank()).map(|i| self.label(i)).collect();
        let tokens: Vec<&str> = if self.rank() > 25 {
            s.split('.').collect()
        } else {
            s.split("").filter(|t| !t.is_empty()).collect()
        };
        let word = tokens
            .iter()
            .map(|t| {
                labels.iter().position(|l| l == t).ok_or_else(|| Error::Parse {
                    input: s.into(),
                    reason: format!("unknown generator label {t:?}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        self.from_word(&word)
    }
}

impl fmt::Display for MonoidSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MonoidSpec::Trivial => write!(f, "1"),
            MonoidSpec::FreeAbelian(k) => write!(f, "NA({k})"),
            MonoidSpec::Free(k) => write!(f, "F({k})"),
            MonoidSpec::Cartesian(a, b) => write!(f, "X({a},{b})"),
            MonoidSpec::FreeProduct(a, b) => write!(f, "*({a},{b})"),
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, reason: impl Into<String>) -> Error {
        Error::Parse {
            input: self.src.into(),
            reason: format!("{} at offset {}", reason.into(), self.pos),
        }
    }

    fn skip_ws(&mut self) {
        while self.src[self.pos..].starts_with(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &str) -> Result<()> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.err(format!("expected {tok:?}")))
        }
    }

    fn number(&mut self) -> Result<usize> {
        self.skip_ws();
        let digits: String = self.src[self.pos..].chars().take_while(char::is_ascii_digit).collect();
        self.pos += digits.len();
        let k: usize = digits.parse().map_err(|_| self.err("expected a rank"))?;
        if k == 0 {
            return Err(self.err("rank must be positive"));
        }
        Ok(k)
    }

    fn spec(&mut self) -> Result<MonoidSpec> {
        if self.eat("NA(") {
            let k = self.number()?;
            self.expect(")")?;
            Ok(MonoidSpec::FreeAbelian(k))
        } else if self.eat("F(") {
            let k = self.number()?;
            self.expect(")")?;
            Ok(MonoidSpec::Free(k))
        } else if self.eat("X(") {
            let (a, b) = self.pair()?;
            Ok(MonoidSpec::cartesian(a, b))
        } else if self.eat("*(") {
            let (a, b) = self.pair()?;
            Ok(MonoidSpec::free_product(a, b))
        } else if self.eat("1") {
            Ok(MonoidSpec::Trivial)
        } else {
            Err(self.err("expected NA(k), F(k), X(..), *(..) or 1"))
        }
    }

    fn pair(&mut self) -> Result<(MonoidSpec, MonoidSpec)> {
        let a = self.spec()?;
        self.expect(",")?;
        let b = self.spec()?;
        self.expect(")")?;
        Ok((a, b))
    }
}

impl FromStr for MonoidSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser { src: s, pos: 0 };
        let spec = p.spec()?;
        p.skip_ws();
        if p.pos != s.len() {
            return Err(p.err("trailing input"));
        }
        Ok(spec)
    }
}

impl Serialize for MonoidSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MonoidSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Decomposes the right-angled Artin monoid of a simple graph into iterated
/// Cartesian and free products of `NA(k)` and `F(k)`.
///
/// Returns the descriptor and, for each canonical generator, the vertex it
/// stands for. Graphs containing an induced path on four vertices admit no
/// such decomposition and are rejected.
pub fn decompose_raag(vertices: usize, edges: &[(usize, usize)]) -> Result<(MonoidSpec, Vec<usize>)> {
    if vertices == 0 {
        return Ok((MonoidSpec::Trivial, Vec::new()));
    }
    let mut adj = vec![vec![false; vertices]; vertices];
    for &(u, v) in edges {
        if u >= vertices || v >= vertices || u == v {
            return Err(Error::Structure(format!("bad edge ({u},{v})")));
        }
        adj[u][v] = true;
        adj[v][u] = true;
    }
    let all: Vec<usize> = (0..vertices).collect();
    let mut order = Vec::new();
    let spec = decompose(&all, &adj, &mut order)?;
    Ok((spec, order))
}

fn components(set: &[usize], linked: impl Fn(usize, usize) -> bool) -> Vec<Vec<usize>> {
    let mut left: BTreeSet<usize> = set.iter().copied().collect();
    let mut out = Vec::new();
    while let Some(&start) = left.iter().next() {
        left.remove(&start);
        let mut comp = vec![start];
        let mut i = 0;
        while i < comp.len() {
            let u = comp[i];
            let nbrs: Vec<usize> = left.iter().copied().filter(|&v| linked(u, v)).collect();
            for v in nbrs {
                left.remove(&v);
                comp.push(v);
            }
            i += 1;
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

fn decompose(set: &[usize], adj: &[Vec<bool>], order: &mut Vec<usize>) -> Result<MonoidSpec> {
    if set.len() == 1 {
        order.push(set[0]);
        return Ok(MonoidSpec::FreeAbelian(1));
    }
    let by_edges = components(set, |u, v| adj[u][v]);
    if by_edges.len() > 1 {
        return combine(by_edges, adj, order, false);
    }
    let by_non_edges = components(set, |u, v| !adj[u][v]);
    if by_non_edges.len() > 1 {
        return combine(by_non_edges, adj, order, true);
    }
    Err(Error::NotDecomposable(set.to_vec()))
}

fn combine(
    parts: Vec<Vec<usize>>,
    adj: &[Vec<bool>],
    order: &mut Vec<usize>,
    cartesian: bool,
) -> Result<MonoidSpec> {
    let (singles, bigger): (Vec<_>, Vec<_>) = parts.into_iter().partition(|c| c.len() == 1);
    let mut pieces = Vec::new();
    if !singles.is_empty() {
        order.extend(singles.iter().map(|c| c[0]));
        pieces.push(if cartesian {
            MonoidSpec::FreeAbelian(singles.len())
        } else {
            MonoidSpec::Free(singles.len())
        });
    }
    for c in bigger {
        pieces.push(decompose(&c, adj, order)?);
    }
    let mut iter = pieces.into_iter();
    let first = iter.next().expect("nonempty partition");
    Ok(iter.fold(first, |acc, p| {
        if cartesian {
            MonoidSpec::cartesian(acc, p)
        } else {
            MonoidSpec::free_product(acc, p)
        }
    }))
}
