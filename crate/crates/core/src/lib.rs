pub mod querygen;
pub mod taxonomy;
pub mod webunits;
pub mod measure;
pub mod analysis;
pub mod cli;
