use crate::cfront::ast::*;
use crate::cfront::pragma::{OmpKind, OmpPragma, Pragma};

/// How a block participates in exploration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Exploration {
    None,
    Check,
    Fixed(u32, u32, u32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BlockRole {
    /// `omp parallel for` (or an orphaned `omp for`).
    Simple,
    /// `omp parallel` whose body holds `omp for` sub-blocks (indices into
    /// the block list).
    Region { subs: Vec<usize> },
    /// `omp for` nested in a region.
    Sub { region: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OmpBlock {
    pub index: usize,
    pub stmt: StmtId,
    pub pragma: OmpPragma,
    pub function: String,
    /// Source line of the pragma.
    pub line: u32,
    pub role: BlockRole,
    /// Middle part of the codelet name (`_instr_for<tag>_ol_...`).
    pub region_tag: String,
    /// Own clause, or the region's for sub-blocks.
    pub exploration: Exploration,
}

impl OmpBlock {
    /// Generated codelet name.
    pub fn label(&self) -> String {
        format!("_instr_for{}_ol_{}_{}", self.region_tag, self.line, self.function)
    }

    /// Whether the block is a candidate for outlining at all.
    pub fn is_kernel_candidate(&self) -> bool {
        !matches!(self.role, BlockRole::Region { .. })
    }

    pub fn explored(&self) -> bool {
        self.is_kernel_candidate() && self.exploration != Exploration::None
    }
}

fn exploration_of(p: &OmpPragma) -> Exploration {
    if p.check() {
        Exploration::Check
    } else if let Some((a, b, c)) = p.fixed() {
        Exploration::Fixed(a, b, c)
    } else {
        Exploration::None
    }
}

pub(crate) fn omp_pragma(s: &Stmt) -> Option<&OmpPragma> {
    s.pragmas.iter().find_map(Pragma::as_omp).filter(|p| p.kind != OmpKind::None)
}

/// Every OpenMP block in source order. Sub-blocks of a region follow it.
pub fn find_omp_blocks(unit: &SourceUnit) -> Vec<OmpBlock> {
    let mut out = Vec::new();
    for f in unit.functions() {
        let Some(body) = &f.body else { continue };
        let mut cx = Walk { out: &mut out, function: &f.name, loops: Vec::new(), region: None, first_in_loop: Vec::new() };
        cx.stmt(body);
    }
    for k in 0..out.len() {
        if let BlockRole::Sub { region } = out[k].role {
            if out[k].exploration == Exploration::None {
                out[k].exploration = out[region].exploration;
            }
        }
    }
    out
}

struct Walk<'a> {
    out: &'a mut Vec<OmpBlock>,
    function: &'a str,
    /// Enclosing host loops.
    loops: Vec<StmtId>,
    region: Option<usize>,
    /// (loop, line of the first block directly inside it).
    first_in_loop: Vec<(StmtId, u32)>,
}

impl Walk<'_> {
    fn stmt(&mut self, s: &Stmt) {
        let pragma = omp_pragma(s);
        let mut entered_region = None;
        if let Some(p) = pragma {
            let index = self.out.len();
            let line = p.pos.line;
            let (role, tag) = match (p.kind, self.region) {
                (OmpKind::For, Some(r)) => {
                    if let BlockRole::Region { subs } = &mut self.out[r].role {
                        subs.push(index);
                    }
                    (BlockRole::Sub { region: r }, self.out[r].line.to_string())
                }
                (OmpKind::Parallel, _) => (BlockRole::Region { subs: Vec::new() }, String::new()),
                _ => (BlockRole::Simple, self.loop_tag(line)),
            };
            if matches!(role, BlockRole::Region { .. }) {
                entered_region = Some(index);
            }
            self.out.push(OmpBlock {
                index,
                stmt: s.id,
                pragma: p.clone(),
                function: self.function.to_string(),
                line,
                role,
                region_tag: tag,
                exploration: exploration_of(p),
            });
        }
        let saved_region = self.region;
        if entered_region.is_some() {
            self.region = entered_region;
        }
        // Work-shared loops are kernels, not host loops.
        let host_loop = s.is_loop() && pragma.is_none();
        if host_loop {
            self.loops.push(s.id);
        }
        for c in s.children() {
            self.stmt(c);
        }
        if host_loop {
            self.loops.pop();
        }
        self.region = saved_region;
    }

    fn loop_tag(&mut self, line: u32) -> String {
        let Some(&l) = self.loops.last() else { return String::new() };
        if let Some((_, first)) = self.first_in_loop.iter().find(|(id, _)| *id == l) {
            return first.to_string();
        }
        self.first_in_loop.push((l, line));
        line.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfront::parse_translation_unit;

    #[test]
    fn pragma_free_unit_has_no_blocks() {
        let u = parse_translation_unit("int main(){return 0;}").unwrap();
        assert!(find_omp_blocks(&u).is_empty());
    }

    #[test]
    fn region_with_sub_blocks_and_fixed_block() {
        let src = "\
int main() {
    int index, iterations = 3, i, j; double t[8][8], o[8][8], diffsum;
#pragma omp parallel shared(o, t) check
    for (; index < iterations; index++) {
#pragma omp for
        for (i = 1; i < 7; i++) { for (j = 1; j < 7; j++) { o[i][j] = t[i][j]; } }
        diffsum = 0;
#pragma omp for reduction(+:diffsum)
        for (i = 1; i < 7; i++) { for (j = 1; j < 7; j++) { diffsum += o[i][j]; } }
    }
#pragma omp parallel for reduction(+:diffsum) fixed(10,1,0)
    for (i = 1; i < 7; i++) { diffsum += t[i][1]; }
    return 0;
}
";
        let u = parse_translation_unit(src).unwrap();
        let b = find_omp_blocks(&u);
        assert_eq!(b.len(), 4);
        assert_eq!(b[0].role, BlockRole::Region { subs: vec![1, 2] });
        assert_eq!(b[1].role, BlockRole::Sub { region: 0 });
        assert_eq!(b[1].exploration, Exploration::Check);
        assert_eq!(b[1].label(), "_instr_for3_ol_5_main");
        assert_eq!(b[3].role, BlockRole::Simple);
        assert_eq!(b[3].exploration, Exploration::Fixed(10, 1, 0));
        assert_eq!(b[3].label(), "_instr_for_ol_11_main");
        assert_eq!(b.iter().filter(|x| x.explored()).count(), 3);
    }

    #[test]
    fn blocks_in_a_host_loop_share_the_first_line() {
        let src = "\
int main() {
    int k, i; double a[4];
    for (k = 0; k < 2; k++) {
#pragma omp parallel for check
        for (i = 0; i < 4; i++) a[i] = i;
#pragma omp parallel for check
        for (i = 0; i < 4; i++) a[i] += 1;
    }
    return 0;
}
";
        let u = parse_translation_unit(src).unwrap();
        let b = find_omp_blocks(&u);
        assert_eq!(b[0].label(), "_instr_for4_ol_4_main");
        assert_eq!(b[1].label(), "_instr_for4_ol_6_main");
    }
}
