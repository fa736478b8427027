pub mod engine;
pub mod filterfn;
pub mod model;
pub mod noise;
pub mod qmat;
pub mod schedule;
pub mod units;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/schedules.md")]
    mod schedules {}
    #[doc = include_str!("../../../book/src/noise.md")]
    mod noise {}
    #[doc = include_str!("../../../book/src/ensembles.md")]
    mod ensembles {}
    #[doc = include_str!("../../../book/src/filter-functions.md")]
    mod filter_functions {}
    #[doc = include_str!("../../../book/src/nv-center.md")]
    mod nv_center {}
    #[doc = include_str!("../../../book/src/command-line.md")]
    mod command_line {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
