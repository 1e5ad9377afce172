//! Directive flag sets, their three-word signatures, and enumeration of
//! the variant space.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::transform::{Exploration, OmpBlock};

/// Default upper bound on the number of unit variants.
pub const DEFAULT_CAP: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct FlagSet {
    /// Leave the block as OpenMP.
    pub baseline: bool,
    pub advancedload: bool,
    pub release: bool,
    pub asynchronous: bool,
    pub noupdate: bool,
    pub delegatedstore: bool,
    pub group: bool,
}

impl FlagSet {
    pub fn baseline() -> Self {
        FlagSet { baseline: true, ..Default::default() }
    }

    /// Codelet and callsite only.
    pub fn plain() -> Self {
        FlagSet::default()
    }

    pub fn is_plain(&self) -> bool {
        *self == FlagSet::plain()
    }

    fn any_hmpp(&self) -> bool {
        self.advancedload || self.release || self.asynchronous || self.noupdate || self.delegatedstore || self.group
    }

    /// Name of the first violated rule, if any.
    pub fn violation(&self) -> Option<&'static str> {
        if self.baseline && self.any_hmpp() {
            Some("baseline excludes every HMPP flag")
        } else if self.noupdate && !self.advancedload {
            Some("noupdate requires advancedload")
        } else if self.asynchronous && !(self.advancedload || self.delegatedstore) {
            Some("asynchronous requires advancedload or delegatedstore")
        } else if self.release && !(self.advancedload || self.delegatedstore) {
            Some("release requires advancedload or delegatedstore")
        } else {
            None
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.violation() {
            Some(r) => Err(Error::InvalidFlags(r.to_string())),
            None => Ok(()),
        }
    }

    /// Short mnemonic used in reports, e.g. `AdvLoadRelNoUpdateDelStoreGroup`.
    pub fn mnemonic(&self) -> String {
        if self.baseline {
            return "Original(OpenMP)".into();
        }
        if self.is_plain() {
            return "Codelet".into();
        }
        let mut s = String::new();
        for (on, name) in [
            (self.advancedload, "AdvLoad"),
            (self.release, "Rel"),
            (self.asynchronous, "Async"),
            (self.noupdate, "NoUpdate"),
            (self.delegatedstore, "DelStore"),
            (self.group, "Group"),
        ] {
            if on {
                s.push_str(name);
            }
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Signature(pub u32, pub u32, pub u32);

impl Signature {
    pub const BASELINE: Signature = Signature(0, 0, 0);

    /// `a_b_c`, as used in file names.
    pub fn file_tag(&self) -> String {
        format!("{}_{}_{}", self.0, self.1, self.2)
    }

    /// Parses `a, b, c`, `a,b,c` or `a_b_c`.
    pub fn parse(s: &str) -> Result<Signature> {
        let parts: Vec<&str> = s.split([',', '_']).map(str::trim).collect();
        let bad = || Error::Invalid(format!("`{s}` is not a signature `a, b, c`"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let n: Vec<u32> = parts.iter().map(|p| p.parse::<u32>()).collect::<std::result::Result<_, _>>().map_err(|_| bad())?;
        Ok(Signature(n[0], n[1], n[2]))
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}, {}, {}", self.0, self.1, self.2)
    }
}

pub fn encode_signature(flags: &FlagSet) -> Result<Signature> {
    flags.validate()?;
    if flags.baseline {
        return Ok(Signature::BASELINE);
    }
    let a = flags.noupdate as u32 + 2 * flags.release as u32 + 4 * flags.asynchronous as u32 + 8 * flags.advancedload as u32;
    let b = flags.delegatedstore as u32 + 2 * flags.group as u32;
    let c = (a == 0 && b == 0) as u32;
    Ok(Signature(a, b, c))
}

pub fn decode_signature(sig: Signature) -> Result<FlagSet> {
    let Signature(a, b, c) = sig;
    let err = |rule: &str| Error::InvalidSignature { a, b, c, rule: rule.to_string() };
    if a >= 16 {
        return Err(err("first word must be below 16"));
    }
    if b >= 4 {
        return Err(err("second word must be below 4"));
    }
    if c >= 2 {
        return Err(err("third word must be 0 or 1"));
    }
    if sig == Signature::BASELINE {
        return Ok(FlagSet::baseline());
    }
    if c == 1 && (a != 0 || b != 0) {
        return Err(err("third word 1 is reserved for the plain codelet"));
    }
    let f = FlagSet {
        baseline: false,
        noupdate: a & 1 != 0,
        release: a & 2 != 0,
        asynchronous: a & 4 != 0,
        advancedload: a & 8 != 0,
        delegatedstore: b & 1 != 0,
        group: b & 2 != 0,
    };
    if let Some(rule) = f.violation() {
        return Err(err(rule));
    }
    Ok(f)
}

/// Every feasible flag set, baseline first, in ascending signature order.
pub fn feasible_flag_sets(group_eligible: bool) -> Vec<FlagSet> {
    let mut v: Vec<(Signature, FlagSet)> = Vec::new();
    for bits in 0u32..64 {
        let f = FlagSet {
            baseline: false,
            advancedload: bits & 1 != 0,
            release: bits & 2 != 0,
            asynchronous: bits & 4 != 0,
            noupdate: bits & 8 != 0,
            delegatedstore: bits & 16 != 0,
            group: bits & 32 != 0,
        };
        if f.group && !group_eligible {
            continue;
        }
        if let Ok(sig) = encode_signature(&f) {
            v.push((sig, f));
        }
    }
    v.push((Signature::BASELINE, FlagSet::baseline()));
    v.sort();
    v.into_iter().map(|(_, f)| f).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VariantPlan {
    pub block: usize,
    pub flags: FlagSet,
    pub signature: Signature,
}

impl VariantPlan {
    pub fn new(block: usize, flags: FlagSet) -> Result<Self> {
        Ok(VariantPlan { block, flags, signature: encode_signature(&flags)? })
    }
}

/// Plans for one block: its pinned signature, or the full feasible set for
/// `check`. Unexplored blocks get the baseline only.
pub fn enumerate_variants(block: &OmpBlock, group_eligible: bool) -> Result<Vec<VariantPlan>> {
    match block.exploration {
        Exploration::None => Ok(vec![VariantPlan::new(block.index, FlagSet::baseline())?]),
        Exploration::Fixed(a, b, c) => {
            let flags = decode_signature(Signature(a, b, c))?;
            Ok(vec![VariantPlan { block: block.index, flags, signature: Signature(a, b, c) }])
        }
        Exploration::Check => feasible_flag_sets(group_eligible)
            .into_iter()
            .map(|f| VariantPlan::new(block.index, f))
            .collect(),
    }
}

/// One point of the unit's variant space: a plan per explored block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitVariant {
    /// `__a_b_c` per explored block, in block order.
    pub name: String,
    pub plans: BTreeMap<usize, VariantPlan>,
}

impl UnitVariant {
    pub fn file_name(&self, stem: &str) -> String {
        format!("{stem}{}.c", self.name)
    }

    pub fn flags(&self, block: usize) -> FlagSet {
        self.plans.get(&block).map_or(FlagSet::baseline(), |p| p.flags)
    }

    /// Whether every block stays OpenMP.
    pub fn is_baseline(&self) -> bool {
        self.plans.values().all(|p| p.flags.baseline)
    }

    /// Signature shown in reports: the single explored block's, the common
    /// one when all blocks agree, else the first non-baseline one.
    pub fn signature(&self) -> Signature {
        let sigs: Vec<Signature> = self.plans.values().map(|p| p.signature).collect();
        match sigs.as_slice() {
            [] => Signature::BASELINE,
            [s] => *s,
            all if all.iter().all(|s| *s == all[0]) => all[0],
            all => all.iter().copied().find(|s| *s != Signature::BASELINE).unwrap_or(Signature::BASELINE),
        }
    }

    /// Report name: the flag mnemonic, or one per block joined with `+`
    /// when the blocks differ.
    pub fn label(&self) -> String {
        if self.is_baseline() {
            return FlagSet::baseline().mnemonic();
        }
        let flags: Vec<FlagSet> = self.plans.values().map(|p| p.flags).collect();
        if flags.iter().all(|f| *f == flags[0]) {
            return flags[0].mnemonic();
        }
        flags.iter().map(FlagSet::mnemonic).collect::<Vec<_>>().join("+")
    }
}

pub fn variant_name(plans: &BTreeMap<usize, VariantPlan>) -> String {
    if plans.is_empty() {
        return format!("__{}", Signature::BASELINE.file_tag());
    }
    plans.values().map(|p| format!("__{}", p.signature.file_tag())).collect()
}

/// Cartesian product of the per-block plan lists of explored blocks.
/// `group_eligible(i)` says whether block `i` can share state with another
/// kernel.
pub fn plans_for_unit(blocks: &[OmpBlock], group_eligible: &dyn Fn(usize) -> bool, cap: usize) -> Result<Vec<UnitVariant>> {
    let mut lists: Vec<Vec<VariantPlan>> = Vec::new();
    for b in blocks.iter().filter(|b| b.explored()) {
        lists.push(enumerate_variants(b, group_eligible(b.index))?);
    }
    let count = lists.iter().try_fold(1usize, |acc, l| acc.checked_mul(l.len())).unwrap_or(usize::MAX);
    if count > cap {
        return Err(Error::VariantCap { count, cap });
    }
    let mut out: Vec<BTreeMap<usize, VariantPlan>> = vec![BTreeMap::new()];
    for l in &lists {
        let mut next = Vec::with_capacity(out.len() * l.len());
        for prefix in &out {
            for p in l {
                let mut m = prefix.clone();
                m.insert(p.block, *p);
                next.push(m);
            }
        }
        out = next;
    }
    Ok(out.into_iter().map(|plans| UnitVariant { name: variant_name(&plans), plans }).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfront::parse_translation_unit;
    use crate::transform::find_omp_blocks;

    #[test]
    fn published_signatures_decode() {
        let f = decode_signature(Signature(9, 1, 0)).unwrap();
        assert!(f.advancedload && f.noupdate && f.delegatedstore && !f.release && !f.group && !f.asynchronous);
        let f = decode_signature(Signature(10, 1, 0)).unwrap();
        assert!(f.advancedload && f.release && f.delegatedstore && !f.noupdate);
        let f = decode_signature(Signature(11, 3, 0)).unwrap();
        assert!(f.advancedload && f.release && f.noupdate && f.delegatedstore && f.group);
        assert_eq!(decode_signature(Signature(0, 0, 0)).unwrap(), FlagSet::baseline());
        assert_eq!(decode_signature(Signature(0, 0, 1)).unwrap(), FlagSet::plain());
    }

    #[test]
    fn infeasible_signatures_name_the_rule() {
        let e = decode_signature(Signature(1, 0, 0)).unwrap_err().to_string();
        assert!(e.contains("noupdate requires advancedload"), "{e}");
        assert!(decode_signature(Signature(4, 0, 0)).is_err());
        assert!(decode_signature(Signature(2, 0, 0)).is_err());
        assert!(decode_signature(Signature(16, 0, 0)).is_err());
        assert!(decode_signature(Signature(8, 0, 1)).is_err());
    }

    #[test]
    fn encode_examples() {
        let f = FlagSet { advancedload: true, noupdate: true, delegatedstore: true, ..Default::default() };
        assert_eq!(encode_signature(&f).unwrap(), Signature(9, 1, 0));
        assert_eq!(encode_signature(&FlagSet::baseline()).unwrap(), Signature(0, 0, 0));
        let f = FlagSet { advancedload: true, release: true, noupdate: true, delegatedstore: true, group: true, ..Default::default() };
        assert_eq!(encode_signature(&f).unwrap(), Signature(11, 3, 0));
        assert!(encode_signature(&FlagSet { noupdate: true, ..Default::default() }).is_err());
    }

    /// Independent count of the feasible tuples over (a, d, s, n, r).
    fn brute_force_count() -> usize {
        let mut n = 0;
        for bits in 0u32..32 {
            let (a, d, s, nu, r) = (bits & 1 != 0, bits & 2 != 0, bits & 4 != 0, bits & 8 != 0, bits & 16 != 0);
            if (!nu || a) && (!s || a || d) && (!r || a || d) {
                n += 1;
            }
        }
        n
    }

    #[test]
    fn feasible_set_sizes() {
        assert_eq!(brute_force_count(), 21);
        let single = feasible_flag_sets(false);
        assert_eq!(single.len(), 22);
        assert_eq!(single[0], FlagSet::baseline());
        assert_eq!(feasible_flag_sets(true).len(), 43);
    }

    #[test]
    fn round_trip_is_exhaustive_and_injective() {
        let mut seen = std::collections::HashSet::new();
        for f in feasible_flag_sets(true) {
            let s = encode_signature(&f).unwrap();
            assert_eq!(decode_signature(s).unwrap(), f);
            assert!(seen.insert(s));
        }
        // Every in-range triple either decodes to a set that re-encodes to
        // itself, or is rejected.
        for a in 0..16 {
            for b in 0..4 {
                for c in 0..2 {
                    if let Ok(f) = decode_signature(Signature(a, b, c)) {
                        assert_eq!(encode_signature(&f).unwrap(), Signature(a, b, c));
                    }
                }
            }
        }
    }

    const TWO: &str = "int main() { int i; double a[4], b[4];\n\
        #pragma omp parallel for check\nfor (i = 0; i < 4; i++) a[i] = i;\n\
        #pragma omp parallel for fixed(9,1,0)\nfor (i = 0; i < 4; i++) b[i] = i;\n\
        #pragma omp parallel for\nfor (i = 0; i < 4; i++) b[i] += 1;\nreturn 0; }";

    #[test]
    fn unit_product_and_names() {
        let u = parse_translation_unit(TWO).unwrap();
        let blocks = find_omp_blocks(&u);
        let vs = plans_for_unit(&blocks, &|_| false, DEFAULT_CAP).unwrap();
        assert_eq!(vs.len(), 22);
        assert_eq!(vs[0].name, "__0_0_0__9_1_0");
        assert_eq!(vs[1].name, "__0_0_1__9_1_0");
        assert_eq!(vs[1].file_name("jacobi"), "jacobi__0_0_1__9_1_0.c");
        assert!(vs.iter().all(|v| v.flags(2) == FlagSet::baseline()));
    }

    #[test]
    fn cap_is_enforced() {
        let src = "int main() { int i; double a[4];\n\
            #pragma omp parallel for check\nfor (i = 0; i < 4; i++) a[i] = i;\n\
            #pragma omp parallel for check\nfor (i = 0; i < 4; i++) a[i] = i;\n\
            #pragma omp parallel for check\nfor (i = 0; i < 4; i++) a[i] = i;\nreturn 0; }";
        let u = parse_translation_unit(src).unwrap();
        let blocks = find_omp_blocks(&u);
        assert_eq!(plans_for_unit(&blocks[..2], &|_| false, DEFAULT_CAP).unwrap().len(), 484);
        let e = plans_for_unit(&blocks, &|_| false, DEFAULT_CAP).unwrap_err();
        assert_eq!(e, Error::VariantCap { count: 22 * 22 * 22, cap: 512 });
        assert!(e.to_string().contains("fixed"));
    }

    #[test]
    fn all_fixed_gives_one_variant() {
        let src = "int main() { int i; double a[4];\n#pragma omp parallel for fixed(8,1,0)\nfor (i = 0; i < 4; i++) a[i] = i;\nreturn 0; }";
        let u = parse_translation_unit(src).unwrap();
        let vs = plans_for_unit(&find_omp_blocks(&u), &|_| false, DEFAULT_CAP).unwrap();
        assert_eq!(vs.len(), 1);
        assert_eq!(vs[0].signature(), Signature(8, 1, 0));
    }
}
