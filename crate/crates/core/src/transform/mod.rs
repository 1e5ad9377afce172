//! Source transformations: block discovery, inlining and outlining.

pub mod blocks;
pub mod inline;
pub mod outline;

pub use blocks::{find_omp_blocks, BlockRole, Exploration, OmpBlock};
pub use inline::{inline_calls, split_multi_call_expr, InlineReport, InlineScope};
pub use outline::{
    check_global_scope, divide_region, gridify_spec, infer_codelet_params, normalize_bodies, outline_block,
    transform_reduction, CodeletDef, CodeletParam, ParamKind,
};
