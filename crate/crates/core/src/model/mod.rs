//! Package names, allowlists, and the statistics computed over them.

mod allowlist;
mod io;
mod name;
mod stats;

pub use allowlist::{AllowList, AllowListStore, SubmitOutcome};
pub use io::{
    read_allowlist, read_allowlist_from, render_allowlist, write_allowlist, AllowListIoError,
    LoadedAllowList,
};
pub use name::{parse_package_name, NameError, PackageName};
pub use stats::{compute_stats, StatsReport};
