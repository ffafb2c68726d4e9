//! Zero-set restrictions: predicates marking latent points that carry no
//! mass. A point survives a restriction set when no predicate fires on it.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::latent_space::{AlternativeSet, LatentIndex, LatentPoint};

type Predicate = dyn Fn(&LatentIndex, &LatentPoint) -> bool + Send + Sync;

/// A named predicate; points where it returns `true` are excluded.
#[derive(Clone)]
pub struct ZeroSetRestriction {
    name: String,
    kills: Arc<Predicate>,
}

impl ZeroSetRestriction {
    pub fn new(
        name: impl Into<String>,
        kills: impl Fn(&LatentIndex, &LatentPoint) -> bool + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), kills: Arc::new(kills) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kills(&self, idx: &LatentIndex, p: &LatentPoint) -> bool {
        (self.kills)(idx, p)
    }
}

impl fmt::Debug for ZeroSetRestriction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ZeroSetRestriction").field("name", &self.name).finish()
    }
}

/// Restrictions with unique names. Order is kept for reporting only.
#[derive(Clone, Debug, Default)]
pub struct RestrictionSet {
    items: Vec<ZeroSetRestriction>,
}

impl RestrictionSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, r: ZeroSetRestriction) -> Result<()> {
        if self.contains(r.name()) {
            return Err(Error::DuplicateRestriction(r.name.clone()));
        }
        self.items.push(r);
        Ok(())
    }

    pub fn with(mut self, r: ZeroSetRestriction) -> Result<Self> {
        self.push(r)?;
        Ok(self)
    }

    pub fn extend(&mut self, other: &RestrictionSet) -> Result<()> {
        for r in &other.items {
            self.push(r.clone())?;
        }
        Ok(())
    }

    /// Union of two sets; duplicate names are an error.
    pub fn union(&self, other: &RestrictionSet) -> Result<RestrictionSet> {
        let mut out = self.clone();
        out.extend(other)?;
        Ok(out)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.items.iter().any(|r| r.name == name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.items.iter().map(|r| r.name()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ZeroSetRestriction> {
        self.items.iter()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn is_alive(&self, idx: &LatentIndex, p: &LatentPoint) -> bool {
        !self.items.iter().any(|r| r.kills(idx, p))
    }
}

/// Sorted latent indices that survive a restriction set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrunedSupport {
    alive: Vec<usize>,
    total: usize,
}

impl PrunedSupport {
    /// Builds a support from explicit indices (sorted and deduplicated).
    pub fn from_indices(mut alive: Vec<usize>, total: usize) -> Result<Self> {
        alive.sort_unstable();
        alive.dedup();
        if let Some(&last) = alive.last() {
            if last >= total {
                return Err(Error::IndexOutOfRange { index: last, size: total });
            }
        }
        Ok(Self { alive, total })
    }

    pub fn indices(&self) -> &[usize] {
        &self.alive
    }

    pub fn len(&self) -> usize {
        self.alive.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alive.is_empty()
    }

    /// Size of the unrestricted space the support lives in.
    pub fn total(&self) -> usize {
        self.total
    }

    pub fn contains(&self, index: usize) -> bool {
        self.alive.binary_search(&index).is_ok()
    }

    /// Position of a latent index within the support.
    pub fn position(&self, index: usize) -> Option<usize> {
        self.alive.binary_search(&index).ok()
    }

    pub fn intersect(&self, other: &PrunedSupport) -> PrunedSupport {
        let alive = self.alive.iter().copied().filter(|&i| other.contains(i)).collect();
        PrunedSupport { alive, total: self.total }
    }
}

/// Evaluates every restriction at every latent point.
pub fn prune(set: &RestrictionSet, idx: &LatentIndex) -> PrunedSupport {
    let alive = (0..idx.size())
        .into_par_iter()
        .filter(|&i| {
            let p = idx.point_at(i).expect("index in range");
            set.is_alive(idx, &p)
        })
        .collect();
    PrunedSupport { alive, total: idx.size() }
}

/// Head Start style access: the treated alternative must be available
/// when the instrument is on.
pub fn hsis_access(alts: &AlternativeSet, treated: &str) -> Result<ZeroSetRestriction> {
    let h = alts.index_of(treated)?;
    Ok(ZeroSetRestriction::new("hsis_access", move |_, p| !p.c1.contains(h)))
}

/// Unaltered alternative: the instrument leaves access to `alt` unchanged.
pub fn unaltered_alternative(alts: &AlternativeSet, alt: &str) -> Result<ZeroSetRestriction> {
    let a = alts.index_of(alt)?;
    Ok(ZeroSetRestriction::new("ua", move |_, p| p.c0.contains(a) != p.c1.contains(a)))
}

/// Monotone treatment response relative to the base alternative.
pub fn mtr(alts: &AlternativeSet) -> ZeroSetRestriction {
    let base = alts.base();
    ZeroSetRestriction::new("mtr", move |_, p| {
        p.outcomes.iter().enumerate().any(|(d, &y)| d != base && y < p.outcomes[base])
    })
}

/// Roy-style selection for one pair: whoever prefers `d` over `e` does not
/// have a strictly higher outcome under `e`, and vice versa.
pub fn roy_pair(alts: &AlternativeSet, d: &str, e: &str) -> Result<ZeroSetRestriction> {
    let (d, e) = (alts.index_of(d)?, alts.index_of(e)?);
    if d == e {
        return Err(Error::InvalidConfig("Roy pair needs two distinct alternatives".into()));
    }
    let (d, e) = (d.min(e), d.max(e));
    let name = format!("roy_{}_{}", alts.label(d), alts.label(e));
    Ok(ZeroSetRestriction::new(name, move |idx, p| {
        let u = idx.preference(p.pref);
        let (yd, ye) = (p.outcomes[d], p.outcomes[e]);
        (ye > yd && u.prefers(d, e)) || (yd > ye && u.prefers(e, d))
    }))
}

/// Roy restrictions for every unordered pair of alternatives.
pub fn roy(alts: &AlternativeSet) -> RestrictionSet {
    let mut set = RestrictionSet::new();
    for d in 0..alts.len() {
        for e in d + 1..alts.len() {
            let r = roy_pair(alts, alts.label(d), alts.label(e)).expect("valid pair");
            set.push(r).expect("unique pair names");
        }
    }
    set
}

/// Oregon style access: the instrument never removes access to `m`.
pub fn ohie_access(alts: &AlternativeSet, insured: &str) -> Result<ZeroSetRestriction> {
    let m = alts.index_of(insured)?;
    Ok(ZeroSetRestriction::new("ohie_access", move |_, p| {
        p.c0.contains(m) && !p.c1.contains(m)
    }))
}

/// Experimental access with a bundle: `m` is always offered under z=1, and
/// the bundle is available exactly when both of its parts are.
pub fn mfe_access(alts: &AlternativeSet, m: &str, a: &str, bundle: &str) -> Result<RestrictionSet> {
    let (m, a, ma) = (alts.index_of(m)?, alts.index_of(a)?, alts.index_of(bundle)?);
    let offered = ZeroSetRestriction::new("mfe_offer", move |_, p| !p.c1.contains(m));
    let bundled = ZeroSetRestriction::new("mfe_bundle", move |_, p| {
        [p.c0, p.c1]
            .iter()
            .any(|c| c.contains(ma) != (c.contains(m) && c.contains(a)))
    });
    RestrictionSet::new().with(offered)?.with(bundled)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Cmp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl Cmp {
    fn holds(self, a: usize, b: usize) -> bool {
        match self {
            Cmp::Lt => a < b,
            Cmp::Le => a <= b,
            Cmp::Gt => a > b,
            Cmp::Ge => a >= b,
            Cmp::Eq => a == b,
            Cmp::Ne => a != b,
        }
    }
}

#[derive(Debug, Clone)]
enum Clause {
    Member { alt: usize, z: u8, present: bool },
    Outcome { lhs: usize, cmp: Cmp, rhs: usize },
    Choice { mask: u32, equals: bool, alt: usize },
}

impl Clause {
    fn holds(&self, idx: &LatentIndex, p: &LatentPoint) -> bool {
        match *self {
            Clause::Member { alt, z, present } => p.choice_set(z).contains(alt) == present,
            // Grid indices order outcomes exactly like their values.
            Clause::Outcome { lhs, cmp, rhs } => cmp.holds(p.outcomes[lhs], p.outcomes[rhs]),
            Clause::Choice { mask, equals, alt } => {
                let chosen = idx.preference(p.pref).choose_mask(mask).expect("non-empty mask");
                (chosen == alt) == equals
            }
        }
    }
}

fn tokenize(input: &str) -> std::result::Result<Vec<String>, String> {
    let mut out = Vec::new();
    let chars: Vec<char> = input.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_alphanumeric() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(chars[start..i].iter().collect());
        } else if "(),".contains(c) {
            out.push(c.to_string());
            i += 1;
        } else if "<>=!".contains(c) {
            let two = chars.get(i + 1) == Some(&'=');
            let tok: String = if two { [c, '='].iter().collect() } else { c.to_string() };
            if tok == "!" {
                return Err("`!` must be followed by `=`".into());
            }
            i += tok.len();
            out.push(tok);
        } else {
            return Err(format!("unexpected character `{c}`"));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<String>,
    pos: usize,
    alts: &'a AlternativeSet,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&str> {
        self.tokens.get(self.pos).map(String::as_str)
    }

    fn next(&mut self) -> std::result::Result<String, String> {
        let t = self.tokens.get(self.pos).cloned().ok_or("unexpected end of input")?;
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, want: &str) -> std::result::Result<(), String> {
        let got = self.next()?;
        if got == want {
            Ok(())
        } else {
            Err(format!("expected `{want}`, found `{got}`"))
        }
    }

    fn alt(&mut self) -> std::result::Result<usize, String> {
        let label = self.next()?;
        self.alts.index_of(&label).map_err(|e| e.to_string())
    }

    fn arm(&mut self) -> std::result::Result<u8, String> {
        match self.next()?.as_str() {
            "c0" => Ok(0),
            "c1" => Ok(1),
            other => Err(format!("expected `c0` or `c1`, found `{other}`")),
        }
    }

    fn cmp(&mut self) -> std::result::Result<Cmp, String> {
        Ok(match self.next()?.as_str() {
            "<" => Cmp::Lt,
            "<=" => Cmp::Le,
            ">" => Cmp::Gt,
            ">=" => Cmp::Ge,
            "=" | "==" => Cmp::Eq,
            "!=" => Cmp::Ne,
            other => return Err(format!("expected a comparison, found `{other}`")),
        })
    }

    fn outcome(&mut self) -> std::result::Result<usize, String> {
        self.expect("y")?;
        self.expect("(")?;
        let d = self.alt()?;
        self.expect(")")?;
        Ok(d)
    }

    fn clause(&mut self) -> std::result::Result<Clause, String> {
        match self.peek() {
            Some("y") => {
                let lhs = self.outcome()?;
                let cmp = self.cmp()?;
                let rhs = self.outcome()?;
                Ok(Clause::Outcome { lhs, cmp, rhs })
            }
            Some("choice") => {
                self.next()?;
                self.expect("(")?;
                let mut mask = 1u32 << self.alt()?;
                while self.peek() == Some(",") {
                    self.next()?;
                    mask |= 1 << self.alt()?;
                }
                self.expect(")")?;
                let equals = match self.cmp()? {
                    Cmp::Eq => true,
                    Cmp::Ne => false,
                    _ => return Err("choice(...) supports only `=` and `!=`".into()),
                };
                let alt = self.alt()?;
                if mask & (1 << alt) == 0 {
                    return Err(format!("`{}` is not among the offered alternatives", self.alts.label(alt)));
                }
                Ok(Clause::Choice { mask, equals, alt })
            }
            Some(_) => {
                let alt = self.alt()?;
                let present = match self.next()?.as_str() {
                    "in" => true,
                    "notin" => false,
                    other => return Err(format!("expected `in` or `notin`, found `{other}`")),
                };
                let z = self.arm()?;
                Ok(Clause::Member { alt, z, present })
            }
            None => Err("empty restriction".into()),
        }
    }

    fn conjunction(&mut self) -> std::result::Result<Vec<Clause>, String> {
        let mut clauses = vec![self.clause()?];
        while let Some(t) = self.peek() {
            if t != "and" {
                return Err(format!("expected `and`, found `{t}`"));
            }
            self.next()?;
            clauses.push(self.clause()?);
        }
        Ok(clauses)
    }
}

/// Compiles a textual restriction. The text describes the points to exclude
/// as a conjunction of clauses joined by `and`:
///
/// ```text
/// h in c1            h notin c0          membership of an alternative
/// y(h) < y(n)        y(a) >= y(h)        outcome comparison (<, <=, >, >=, =, !=)
/// choice(n,h) = h    choice(n,a,h) != a  favourite member of a subset
/// ```
///
/// Disjunctions are expressed by adding several restrictions.
pub fn parse_restriction(name: &str, text: &str, alts: &AlternativeSet) -> Result<ZeroSetRestriction> {
    let fail = |reason: String| Error::RestrictionSyntax { input: text.to_string(), reason };
    let tokens = tokenize(text).map_err(fail)?;
    let mut parser = Parser { tokens, pos: 0, alts };
    let clauses = parser.conjunction().map_err(fail)?;
    Ok(ZeroSetRestriction::new(name, move |idx, p| clauses.iter().all(|c| c.holds(idx, p))))
}
