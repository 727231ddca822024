pub mod expr;
pub mod linalg;
pub mod tracker;
pub mod perm;
pub mod monodromy;
pub mod problems;
pub mod analysis;
